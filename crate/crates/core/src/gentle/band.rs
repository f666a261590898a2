//! One ascent direction: a function `h` on `B` with small image along which
//! `‖y ± ηh‖_p^p` grows by a definite amount.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::inequalities::gentle_constant;
use super::rebalance::rebalance_mean_zero;
use super::GentleFunction;
use crate::dyadic::{DyadicFunction, DyadicSet};
use crate::error::{invalid, Error, Result};
use crate::operators::LinearOperator;

#[derive(Clone, Debug, Serialize)]
pub struct BandPerturbation {
    #[serde(skip)]
    pub h: DyadicFunction,
    /// The part of `B` that carries `h`.
    #[serde(skip)]
    pub used: DyadicSet,
    pub used_measure: f64,
    /// Level sets of `y` that received a witness.
    pub level_sets: usize,
    /// Level sets too small to host a witness.
    pub excluded: usize,
    pub image_norm: f64,
    /// `2 μ(B')^(1/p) φ(M) / M`.
    pub image_bound: f64,
    pub image_holds: bool,
    /// `‖y + ηh‖_p^p` and `‖y - ηh‖_p^p`.
    pub plus: f64,
    pub minus: f64,
    /// `‖y‖_p^p + margin - δ`.
    pub growth_bound: f64,
    pub growth_holds: bool,
    /// `p(p-1)/2^(3-p) η^2/(1-η)^(2-p) μ(B') (1-φ(M))^2 / M^2`.
    pub margin: f64,
}

/// Builds `h = M^-1 Σ_k x_k^M` where `x_k` is a mean-zero witness on the
/// level set `{y = b_k} ∩ B`, with image below `φ(M) μ(B')^(1/p) / m`.
///
/// Requires `η <= |y| <= 1 - η` on `B` and `1 < p <= 2`. `y` is a step
/// function, so its level sets are unions of atoms; those too small to carry
/// a witness are left out, and `B'` is the union of the rest. Both estimates
/// are then evaluated on `B'`.
#[allow(clippy::too_many_arguments)]
pub fn band_perturbation<R: Rng + ?Sized>(
    t: &LinearOperator,
    y: &DyadicFunction,
    b: &DyadicSet,
    eta: f64,
    m: f64,
    delta: f64,
    gen: &GentleFunction,
    rng: &mut R,
) -> Result<BandPerturbation> {
    let p = t.source_p();
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidExponent(p));
    }
    if !(eta > 0.0 && eta < 0.5) {
        return Err(invalid("eta", format!("expected 0 < eta < 1/2, got {eta}")));
    }
    if !(m > 0.0) || !(delta >= 0.0) {
        return Err(invalid(
            "M",
            format!("need M > 0 and delta >= 0, got M = {m}, delta = {delta}"),
        ));
    }
    let depth = t.source_depth();
    for (input, d) in [(y.depth(), depth), (b.depth(), depth)] {
        if input > d {
            return Err(Error::DepthMismatch { input, operator: d });
        }
    }
    let y = y.refine(depth)?;
    let b = b.refine(depth)?;
    let slack = 1e-15;
    if b.atoms().iter().any(|&i| {
        let v = y.values()[i].abs();
        v < eta - slack || v > 1.0 - eta + slack
    }) {
        return Err(invalid("y", "needs eta <= |y| <= 1 - eta on B"));
    }

    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in b.atoms() {
        let key = y.values()[i].to_bits();
        let g = *index.entry(key).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    let mut kept = Vec::new();
    let mut excluded = 0;
    for atoms in groups {
        let set = DyadicSet::from_atoms(depth, &atoms)?;
        let hostable = depth > 0
            && set
                .coarsen(depth - 1)
                .is_some_and(|c| c.count() >= gen.min_pairs());
        if hostable {
            kept.push(set);
        } else {
            excluded += 1;
        }
    }
    let used = kept.iter().fold(DyadicSet::empty(depth), |acc, s| acc.union(s));
    let used_measure = used.measure();
    let phi = gen.phi(m);
    let scale = used_measure.powf(1.0 / p);
    let margin =
        gentle_constant(p) * eta * eta / (1.0 - eta).powf(2.0 - p) * used_measure * (1.0 - phi).powi(2)
            / (m * m);

    let h = if kept.is_empty() {
        DyadicFunction::zeros(depth)
    } else {
        let eps = phi * scale / kept.len() as f64;
        let seeds: Vec<u64> = kept.iter().map(|_| rng.gen()).collect();
        let xs = kept
            .par_iter()
            .zip(seeds)
            .map(|(set, seed)| {
                let mut local = ChaCha8Rng::seed_from_u64(seed);
                let w = rebalance_mean_zero(t, set, m, eps, gen, &mut local)?;
                if !w.conditions[2] {
                    return Err(Error::WitnessFailure {
                        best: w.image_norm,
                        required: eps,
                    });
                }
                Ok(w.x)
            })
            .collect::<Result<Vec<_>>>()?;
        let x = xs.iter().fold(DyadicFunction::zeros(depth), |acc, x| acc.plus(x));
        x.truncate(m)?.scaled(1.0 / m)
    };

    let image_norm = t.image_norm(&h)?;
    let image_bound = 2.0 * scale * phi / m;
    let image_holds = if image_bound > 0.0 {
        image_norm < image_bound
    } else {
        image_norm == 0.0
    };
    let base = y.lp_norm_pow(p)?;
    let plus = y.axpy(eta, &h).lp_norm_pow(p)?;
    let minus = y.axpy(-eta, &h).lp_norm_pow(p)?;
    let growth_bound = base + margin - delta;
    // rounding in the p-th powers is far below any margin this code meets
    let rounding = 1e-14 * base.max(1e-300);
    let growth_holds = plus > growth_bound - rounding && minus > growth_bound - rounding;
    Ok(BandPerturbation {
        h,
        used,
        used_measure,
        level_sets: kept.len(),
        excluded,
        image_norm,
        image_bound,
        image_holds,
        plus,
        minus,
        growth_bound,
        growth_holds,
        margin,
    })
}
