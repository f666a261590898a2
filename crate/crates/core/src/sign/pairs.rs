//! Signs built from sibling pairs: every atom of a set at some depth is split
//! into its two children, which receive opposite values.

use rand::Rng;

use crate::dyadic::{DyadicFunction, DyadicSet};
use crate::error::Result;
use crate::operators::LinearOperator;

/// Atoms of `set` at `pair_depth`, each to be split into two children.
pub(crate) struct PairLayout {
    pub pair_depth: u32,
    pub pairs: Vec<usize>,
}

impl PairLayout {
    /// `None` when `set` is not a union of atoms at `pair_depth`.
    pub fn new(set: &DyadicSet, pair_depth: u32) -> Option<Self> {
        let coarse = if set.depth() > pair_depth {
            set.coarsen(pair_depth)?
        } else {
            set.refine(pair_depth).ok()?
        };
        Some(Self {
            pair_depth,
            pairs: coarse.atoms(),
        })
    }

    /// `T(1_left - 1_right)` for every pair, truncated to the effective dimension.
    pub fn images(&self, t: &LinearOperator) -> Result<Vec<Vec<f64>>> {
        use rayon::prelude::*;
        let child = self.pair_depth + 1;
        let dim = t.effective_dim();
        self.pairs
            .par_iter()
            .map(|&a| {
                let mut left = t.atom_image(2 * a, child)?;
                let right = t.atom_image(2 * a + 1, child)?;
                for (l, r) in left.iter_mut().zip(&right) {
                    *l -= r;
                }
                left.truncate(dim);
                Ok(left)
            })
            .collect()
    }

    /// The function with value `theta[j] * weights[j]` on the left child of pair
    /// `j` and the opposite value on the right child.
    pub fn assemble(&self, weights: &[f64], theta: &[f64]) -> DyadicFunction {
        let depth = self.pair_depth + 1;
        let mut values = vec![0.0; 1usize << depth];
        for ((&a, &w), &t) in self.pairs.iter().zip(weights).zip(theta) {
            values[2 * a] = t * w;
            values[2 * a + 1] = -t * w;
        }
        DyadicFunction::from_raw(depth, values)
    }
}

/// Orientations `θ_j = ±1` making `‖Σ θ_j w_j v_j‖` small: a few random
/// starts, each followed by greedy single flips until no flip helps.
pub(crate) fn orient_pairs<R: Rng + ?Sized>(
    vectors: &[Vec<f64>],
    weights: &[f64],
    norm: &dyn Fn(&[f64]) -> f64,
    rng: &mut R,
    starts: usize,
) -> (Vec<f64>, f64) {
    let n = vectors.len();
    let dim = vectors.first().map_or(0, Vec::len);
    let mut best = (vec![1.0; n], f64::INFINITY);
    let mut trial = vec![0.0; dim];
    for start in 0..starts.max(1) {
        let mut theta: Vec<f64> = (0..n)
            .map(|_| {
                if start == 0 || rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        let mut sum = vec![0.0; dim];
        for ((v, &w), &t) in vectors.iter().zip(weights).zip(&theta) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += t * w * x;
            }
        }
        let mut current = norm(&sum);
        let mut improved = current > 0.0;
        let mut sweeps = 0;
        while improved && sweeps < 8 {
            improved = false;
            sweeps += 1;
            for j in 0..n {
                if weights[j] == 0.0 {
                    continue;
                }
                let c = 2.0 * theta[j] * weights[j];
                for ((o, s), x) in trial.iter_mut().zip(&sum).zip(&vectors[j]) {
                    *o = s - c * x;
                }
                let value = norm(&trial);
                if value < current {
                    theta[j] = -theta[j];
                    sum.copy_from_slice(&trial);
                    current = value;
                    improved = current > 0.0;
                }
            }
        }
        if current < best.1 {
            best = (theta, current);
        }
        if best.1 == 0.0 {
            break;
        }
    }
    best
}
