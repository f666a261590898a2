//! Witnesses `x` on a set `A` with `‖x‖_p = μ(A)^(1/p)`, a tail controlled by
//! a gentle function and a small image.
//!
//! Witnesses are assembled from sibling pairs: the atoms of `A` at a working
//! depth are dealt into magnitude classes and every atom gets the values
//! `±v` on its two children. The result is mean zero by construction, and
//! the orientation of each pair is chosen to make `‖Tx‖` small. Working
//! depths are tried from coarse to fine, so a witness uses as little
//! resolution as it can.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use super::{GentleFunction, Profile};
use crate::defect::narrowness_defect;
use crate::dyadic::{DyadicFunction, DyadicSet};
use crate::error::{invalid, Error, Result};
use crate::operators::LinearOperator;
use crate::sign::pairs::{orient_pairs, PairLayout};

const ORIENTATION_STARTS: usize = 4;
const RELATIVE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct GentleWitness {
    #[serde(skip)]
    pub x: DyadicFunction,
    /// Depth of the atoms split into pairs; the witness lives one level finer.
    pub pair_depth: u32,
    pub image_norm: f64,
    /// `‖x - x^M‖_p / μ(A)^(1/p)`.
    pub tail: f64,
    pub phi: f64,
}

/// `‖x - x^M‖_p`.
pub(crate) fn tail_norm(x: &DyadicFunction, m: f64, p: f64) -> Result<f64> {
    x.map(|v| v - v.clamp(-m, m)).lp_norm(p)
}

/// Class index per pair: class sizes follow the profile by largest remainder,
/// and pairs are dealt out in a random order.
fn deal_classes<R: Rng + ?Sized>(profile: &Profile, pairs: usize, rng: &mut R) -> Vec<usize> {
    let ideal: Vec<f64> = profile.classes.iter().map(|c| c.1 * pairs as f64).collect();
    let mut sizes: Vec<usize> = ideal.iter().map(|v| v.floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| (ideal[b] - ideal[b].floor()).total_cmp(&(ideal[a] - ideal[a].floor())));
    let mut missing = pairs - sizes.iter().sum::<usize>();
    for &i in order.iter().cycle() {
        if missing == 0 {
            break;
        }
        sizes[i] += 1;
        missing -= 1;
    }
    let mut classes: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(i, &n)| std::iter::repeat_n(i, n))
        .collect();
    classes.shuffle(rng);
    classes
}

/// A witness on `set` for `T` with `‖Tx‖ <= eps` and
/// `‖x - x^M‖_p <= φ(M) μ(A)^(1/p)`.
pub fn gentle_witness<R: Rng + ?Sized>(
    t: &LinearOperator,
    set: &DyadicSet,
    m: f64,
    eps: f64,
    gen: &GentleFunction,
    rng: &mut R,
) -> Result<GentleWitness> {
    let p = t.source_p();
    let depth = t.source_depth();
    if set.is_empty() {
        return Err(Error::InvalidSet("the set is empty".into()));
    }
    if set.depth() > depth {
        return Err(Error::DepthMismatch {
            input: set.depth(),
            operator: depth,
        });
    }
    if !(m > 0.0) || !(eps >= 0.0) {
        return Err(invalid(
            "M",
            format!("need M > 0 and eps >= 0, got M = {m}, eps = {eps}"),
        ));
    }
    let profile = gen.profile(p)?;
    let measure = set.measure();
    let scale = measure.powf(1.0 / p);
    let phi = gen.phi(m);
    let tail_allowed = phi * scale * (1.0 + RELATIVE_SLACK);
    let image_allowed = eps * (1.0 + RELATIVE_SLACK);
    let norm = |v: &[f64]| t.target_norm(v);

    let mut best = f64::INFINITY;
    for pair_depth in set.natural_depth()..depth {
        let Some(layout) = PairLayout::new(set, pair_depth) else {
            continue;
        };
        if layout.pairs.len() < gen.min_pairs() {
            continue;
        }
        let classes = deal_classes(&profile, layout.pairs.len(), rng);
        let child = (-((pair_depth + 1) as f64)).exp2();
        let mass: f64 = classes
            .iter()
            .map(|&c| 2.0 * profile.classes[c].0.powf(p) * child)
            .sum();
        if mass == 0.0 {
            continue;
        }
        let kappa = (measure / mass).powf(1.0 / p);
        let weights: Vec<f64> = classes.iter().map(|&c| kappa * profile.classes[c].0).collect();
        let images = layout.images(t)?;
        let (theta, _) = orient_pairs(&images, &weights, &norm, rng, ORIENTATION_STARTS);
        let x = layout.assemble(&weights, &theta).refine(depth)?;
        let image_norm = t.image_norm(&x)?;
        let tail = tail_norm(&x, m, p)?;
        best = best.min(image_norm);
        if image_norm <= image_allowed && tail <= tail_allowed {
            return Ok(GentleWitness {
                x,
                pair_depth,
                image_norm,
                tail: tail / scale,
                phi,
            });
        }
    }

    // signs need no profile, so the general defect search may serve
    if profile.classes.len() == 1 && set.refine(depth)?.count() % 2 == 0 {
        let found = narrowness_defect(t, set, 16, rng.gen())?;
        best = best.min(found.value);
        if found.value <= image_allowed {
            let x = found.best.into_sign();
            let tail = tail_norm(&x, m, p)?;
            if tail <= tail_allowed {
                return Ok(GentleWitness {
                    x,
                    pair_depth: depth,
                    image_norm: found.value,
                    tail: tail / scale,
                    phi,
                });
            }
        }
    }
    Err(Error::WitnessFailure { best, required: eps })
}
