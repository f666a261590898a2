//! Upper bounds for the narrowness defect
//! `inf { ‖Tx‖ : x a mean-zero sign supported on A }`.
//!
//! Every strategy returns genuine mean-zero signs on `A` at the operator
//! depth, so the minimum found is an upper bound for the defect.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{DyadicFunction, DyadicSet, SignWitness};
use crate::error::{Error, Result};
use crate::operators::LinearOperator;
use crate::sign::pairs::{orient_pairs, PairLayout};
use crate::sign::{balanced_near_sign, constant_coefficients, stopping_time_sign};

/// Largest head projection handed to the finite-rank walk.
const MAX_HEAD: usize = 16;

/// Per-strategy summary.
#[derive(Clone, Debug, Serialize)]
pub struct StrategyOutcome {
    pub name: String,
    pub candidates: usize,
    /// Smallest image norm among this strategy's candidates.
    pub best: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DefectResult {
    pub best: SignWitness,
    /// `‖T best‖`.
    pub value: f64,
    /// `value / μ(A)^(1/p)`.
    pub ratio: f64,
    pub strategies: Vec<StrategyOutcome>,
}

struct Candidate {
    sign: DyadicFunction,
    value: f64,
}

fn keep_best(slot: &mut Option<Candidate>, c: Candidate) {
    if slot.as_ref().is_none_or(|b| c.value < b.value) {
        *slot = Some(c);
    }
}

/// Searches mean-zero signs on `set` for a small `‖Tx‖`.
///
/// `budget` is the number of random balanced signs; the structured strategies
/// (sibling pairs, finite-rank walks on head projections and stopping-time
/// signs on dyadic intervals) add a fixed number of candidates each.
pub fn narrowness_defect(
    t: &LinearOperator,
    set: &DyadicSet,
    budget: usize,
    seed: u64,
) -> Result<DefectResult> {
    let depth = t.source_depth();
    if set.depth() > depth {
        return Err(Error::DepthMismatch {
            input: set.depth(),
            operator: depth,
        });
    }
    if set.is_empty() {
        return Err(Error::InvalidSet("the set is empty".into()));
    }
    let working = set.refine(depth)?;
    if working.count() % 2 != 0 {
        return Err(Error::InvalidSet(format!(
            "{} atoms at depth {depth}: a mean-zero sign needs an even count",
            working.count()
        )));
    }

    let mut outcomes = Vec::new();
    let mut overall: Option<Candidate> = None;
    let mut record = |name: &str, found: Vec<Candidate>, overall: &mut Option<Candidate>| {
        let count = found.len();
        let mut best: Option<Candidate> = None;
        for c in found {
            keep_best(&mut best, c);
        }
        outcomes.push(StrategyOutcome {
            name: name.to_string(),
            candidates: count,
            best: best.as_ref().map(|c| c.value),
        });
        if let Some(c) = best {
            keep_best(overall, c);
        }
    };

    record("random", random_signs(t, &working, budget, seed)?, &mut overall);
    record("pairs", pair_signs(t, set, seed)?, &mut overall);
    record("finite_rank", finite_rank_signs(t, &working)?, &mut overall);
    record("stopping_time", stopping_signs(t, set)?, &mut overall);

    let best = overall.expect("the pair strategy always produces a candidate");
    let ratio = best.value / set.measure().powf(1.0 / t.source_p());
    Ok(DefectResult {
        value: best.value,
        ratio,
        best: SignWitness::new(best.sign, Some(best.value))?,
        strategies: outcomes,
    })
}

fn random_signs(t: &LinearOperator, set: &DyadicSet, budget: usize, seed: u64) -> Result<Vec<Candidate>> {
    let atoms = set.atoms();
    let depth = set.depth();
    let found: Vec<(usize, Candidate)> = (0..budget)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(trial as u64);
            let mut order = atoms.clone();
            order.shuffle(&mut rng);
            let mut values = vec![0.0; 1usize << depth];
            let half = order.len() / 2;
            for (i, &a) in order.iter().enumerate() {
                values[a] = if i < half { 1.0 } else { -1.0 };
            }
            let sign = DyadicFunction::from_raw(depth, values);
            let value = t.image_norm(&sign)?;
            Ok((trial, Candidate { sign, value }))
        })
        .collect::<Result<_>>()?;
    // collect keeps trial order, so ties go to the lowest trial index
    Ok(found.into_iter().map(|(_, c)| c).collect())
}

fn pair_signs(t: &LinearOperator, set: &DyadicSet, seed: u64) -> Result<Vec<Candidate>> {
    let depth = t.source_depth();
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    for pair_depth in set.natural_depth()..depth {
        let Some(layout) = PairLayout::new(set, pair_depth) else {
            continue;
        };
        let images = layout.images(t)?;
        let weights = vec![1.0; layout.pairs.len()];
        let norm = |v: &[f64]| t.target_norm(v);
        let (theta, _) = orient_pairs(&images, &weights, &norm, &mut rng, 4);
        let sign = layout.assemble(&weights, &theta).refine(depth)?;
        let value = t.image_norm(&sign)?;
        out.push(Candidate { sign, value });
    }
    Ok(out)
}

fn finite_rank_signs(t: &LinearOperator, set: &DyadicSet) -> Result<Vec<Candidate>> {
    let depth = set.depth();
    let dim = t.effective_dim();
    let mut heads = Vec::new();
    let mut s = 1;
    while s <= MAX_HEAD.min(dim) && s + 2 <= set.count() {
        heads.push(s);
        s *= 2;
    }
    let mut out = Vec::new();
    let mut run = |op: &LinearOperator| -> Result<()> {
        match balanced_near_sign(op, set, depth) {
            Ok(found) => {
                let sign = found.witness.into_sign();
                let value = t.image_norm(&sign)?;
                out.push(Candidate { sign, value });
                Ok(())
            }
            Err(Error::InsufficientResolution { .. }) => Ok(()),
            Err(e) => Err(e),
        }
    };
    for s in heads {
        run(&t.head_projection(s)?)?;
    }
    if dim <= MAX_HEAD {
        run(t)?;
    }
    Ok(out)
}

/// Stopping-time signs moved onto `set` when it is `[0,1]` or a dyadic interval.
fn stopping_signs(t: &LinearOperator, set: &DyadicSet) -> Result<Vec<Candidate>> {
    let depth = t.source_depth();
    let m = set.natural_depth();
    let Some(coarse) = set.coarsen(m) else {
        return Ok(Vec::new());
    };
    if coarse.count() != 1 || m + 2 > depth {
        return Ok(Vec::new());
    }
    let k = coarse.atoms()[0];
    let n = (depth - m - 1) as usize;
    let b = constant_coefficients(n)?;
    let width = depth - m;
    let mut out = Vec::new();
    for c in [2.0, 4.0, 8.0] {
        let record = stopping_time_sign(&b, c, width)?;
        let local = record.g_tilde().sign().values();
        if local.iter().sum::<f64>() != 0.0 {
            continue;
        }
        let mut values = vec![0.0; 1usize << depth];
        values[k << width..(k + 1) << width].copy_from_slice(local);
        let sign = DyadicFunction::from_raw(depth, values);
        let value = t.image_norm(&sign)?;
        out.push(Candidate { sign, value });
    }
    Ok(out)
}
