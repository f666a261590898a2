//! Mean-zero signs with small image under a finite-rank operator.
//!
//! The sign is found by a walk inside the cube `[-1, 1]^m` (one coordinate per
//! atom) along the kernel of the constraint matrix `[mean; F]`. Each step
//! pushes at least one coordinate onto a face; when the free coordinates are
//! independent, at most `rank` of them remain interior and are rounded.

use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{DyadicFunction, DyadicSet, SignWitness};
use crate::error::{Error, Result};
use crate::linalg::{first_null_vector, orthonormal_rows};
use crate::operators::LinearOperator;

const FACE_TOL: f64 = 1e-12;
const RANK_TOL: f64 = 1e-10;
const MAX_ENUMERATED: usize = 16;

/// Output of [`finite_rank_near_sign`].
#[derive(Clone, Debug, Serialize)]
pub struct NearSign {
    pub witness: SignWitness,
    /// Rank of the constraint matrix `[mean; F]`.
    pub constraints: usize,
    /// Coordinates still interior after the walk.
    pub interior: usize,
    /// `max_i ‖F 1_(atom_i)‖`.
    pub max_atom_norm: f64,
    /// `constraints * max_atom_norm`.
    pub norm_bound: f64,
    /// `constraints * 2^-depth`.
    pub mean_bound: f64,
}

/// Per-atom data of a sign problem on `set` at `depth`.
pub(crate) struct AtomProblem<'a> {
    pub op: &'a LinearOperator,
    pub depth: u32,
    pub atoms: Vec<usize>,
    /// Images of atom indicators, truncated to the effective dimension.
    pub images: Vec<Vec<f64>>,
}

impl<'a> AtomProblem<'a> {
    pub fn new(op: &'a LinearOperator, set: &DyadicSet, depth: u32) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::InvalidSet("the set is empty".into()));
        }
        if depth > op.source_depth() {
            return Err(Error::DepthMismatch {
                input: depth,
                operator: op.source_depth(),
            });
        }
        let atoms = if set.depth() > depth {
            set.coarsen(depth)
                .ok_or_else(|| Error::InvalidSet(format!("the set is not a union of depth-{depth} atoms")))?
                .atoms()
        } else {
            set.refine(depth)?.atoms()
        };
        let dim = op.effective_dim();
        let images = atoms
            .par_iter()
            .map(|&a| {
                op.atom_image(a, depth).map(|mut v| {
                    v.truncate(dim);
                    v
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            op,
            depth,
            atoms,
            images,
        })
    }

    pub fn dim(&self) -> usize {
        self.images.first().map_or(0, Vec::len)
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.op.target_norm(v)
    }

    /// `Σ x_i F 1_(atom_i)`.
    pub fn image(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (img, &xi) in self.images.iter().zip(x) {
            if xi != 0.0 {
                for (o, v) in out.iter_mut().zip(img) {
                    *o += xi * v;
                }
            }
        }
        out
    }

    pub fn to_function(&self, x: &[f64]) -> DyadicFunction {
        let mut values = vec![0.0; 1usize << self.depth];
        for (&a, &v) in self.atoms.iter().zip(x) {
            values[a] = v;
        }
        DyadicFunction::from_raw(self.depth, values)
    }

    /// Flips atoms of the majority sign, greedily keeping `‖Fx‖` small, until
    /// `Σ x = 0`. Needs an even number of atoms.
    pub fn balance(&self, x: &mut [f64]) -> Result<()> {
        if !self.atoms.len().is_multiple_of(2) {
            return Err(Error::InsufficientResolution {
                atoms: self.atoms.len(),
                needed: self.atoms.len() + 1,
            });
        }
        let mut fx = self.image(x);
        loop {
            let sum: f64 = x.iter().sum();
            if sum == 0.0 {
                return Ok(());
            }
            let s = sum.signum();
            let (best, _) = x
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == s)
                .map(|(i, _)| {
                    let trial: Vec<f64> = fx
                        .iter()
                        .zip(&self.images[i])
                        .map(|(f, y)| f - 2.0 * s * y)
                        .collect();
                    (i, self.norm(&trial))
                })
                .fold(
                    (usize::MAX, f64::INFINITY),
                    |acc, c| if c.1 < acc.1 { c } else { acc },
                );
            x[best] = -s;
            for (f, y) in fx.iter_mut().zip(&self.images[best]) {
                *f -= 2.0 * s * y;
            }
        }
    }
}

/// Near-sign on `set` at `depth` for a finite-rank `f` (the rank is the
/// number of effective target coordinates that can be nonzero).
///
/// Guarantees `‖F x‖ <= k max_i ‖F 1_(atom_i)‖` and `|∫ x| <= k 2^-depth`, with
/// `k` the rank of `[mean; F]`. Among the roundings of the interior
/// coordinates that meet both guarantees, the one with the smallest imbalance,
/// then the smallest image, is returned.
pub fn finite_rank_near_sign(f: &LinearOperator, set: &DyadicSet, depth: u32) -> Result<NearSign> {
    let problem = AtomProblem::new(f, set, depth)?;
    near_sign_for(&problem)
}

/// As [`finite_rank_near_sign`], followed by greedy flips to make the sign
/// exactly mean zero.
pub fn balanced_near_sign(f: &LinearOperator, set: &DyadicSet, depth: u32) -> Result<NearSign> {
    let problem = AtomProblem::new(f, set, depth)?;
    let mut out = near_sign_for(&problem)?;
    if out.witness.mean() != 0.0 {
        let mut x: Vec<f64> = problem
            .atoms
            .iter()
            .map(|&a| out.witness.sign().values()[a])
            .collect();
        problem.balance(&mut x)?;
        let sign = problem.to_function(&x);
        let norm = f.image_norm(&sign)?;
        out.witness = SignWitness::new(sign, Some(norm))?;
    }
    Ok(out)
}

pub(crate) fn near_sign_for(problem: &AtomProblem<'_>) -> Result<NearSign> {
    let m = problem.atoms.len();
    let dim = problem.dim();
    let rows = std::iter::once(vec![1.0; m])
        .chain((0..dim).map(|j| problem.images.iter().map(|img| img[j]).collect()));
    let basis = orthonormal_rows(rows, RANK_TOL, m);
    let k = basis.len();
    if m < k + 1 {
        return Err(Error::InsufficientResolution {
            atoms: m,
            needed: k + 1,
        });
    }

    let mut x = vec![0.0; m];
    let mut free: Vec<usize> = (0..m).collect();
    loop {
        let window = &free[..free.len().min(k + 1)];
        let columns: Vec<Vec<f64>> = window
            .iter()
            .map(|&i| basis.iter().map(|row| row[i]).collect())
            .collect();
        let Some(dir) = first_null_vector(&columns, RANK_TOL) else {
            break;
        };
        let mut step = f64::INFINITY;
        let mut hit = usize::MAX;
        for (&i, &d) in window.iter().zip(&dir) {
            if d != 0.0 {
                let t = (d.signum() - x[i]) / d;
                if t < step {
                    step = t;
                    hit = i;
                }
            }
        }
        for (&i, &d) in window.iter().zip(&dir) {
            x[i] += step * d;
            if (1.0 - x[i].abs()) <= FACE_TOL || i == hit {
                x[i] = x[i].signum();
            }
        }
        free.retain(|&i| x[i].abs() != 1.0);
        if free.is_empty() {
            break;
        }
    }

    let max_atom_norm = problem
        .images
        .iter()
        .map(|y| problem.norm(y))
        .fold(0.0_f64, f64::max);
    let norm_bound = k as f64 * max_atom_norm;
    let mean_bound = k as f64;
    let interior = free.len();
    let x = round_interior(problem, &x, &free, norm_bound, mean_bound);
    let sign = problem.to_function(&x);
    let norm = problem.op.image_norm(&sign)?;
    Ok(NearSign {
        witness: SignWitness::new(sign, Some(norm))?,
        constraints: k,
        interior,
        max_atom_norm,
        norm_bound,
        mean_bound: mean_bound * (-(problem.depth as f64)).exp2(),
    })
}

fn round_interior(
    problem: &AtomProblem<'_>,
    x: &[f64],
    interior: &[usize],
    norm_bound: f64,
    mean_bound: f64,
) -> Vec<f64> {
    let mut nearest = x.to_vec();
    for &i in interior {
        nearest[i] = if x[i] >= 0.0 { 1.0 } else { -1.0 };
    }
    let q = interior.len();
    if q == 0 || q > MAX_ENUMERATED {
        return nearest;
    }
    let mut base = nearest.clone();
    for &i in interior {
        base[i] = 0.0;
    }
    let fixed_image = problem.image(&base);
    let fixed_sum: f64 = base.iter().sum();
    let allowance = norm_bound * (1.0 + 1e-9) + 1e-12;
    let mut best = (f64::INFINITY, f64::INFINITY, 0usize);
    let mut fx = vec![0.0; fixed_image.len()];
    for mask in 0..(1usize << q) {
        fx.copy_from_slice(&fixed_image);
        let mut sum = fixed_sum;
        for (bit, &i) in interior.iter().enumerate() {
            let s = if mask >> bit & 1 == 1 { 1.0 } else { -1.0 };
            sum += s;
            for (o, v) in fx.iter_mut().zip(&problem.images[i]) {
                *o += s * v;
            }
        }
        let norm = problem.norm(&fx);
        if sum.abs() <= mean_bound && norm <= allowance && (sum.abs(), norm) < (best.0, best.1) {
            best = (sum.abs(), norm, mask);
        }
    }
    if best.0.is_infinite() {
        return nearest;
    }
    let mut out = nearest;
    for (bit, &i) in interior.iter().enumerate() {
        out[i] = if best.2 >> bit & 1 == 1 { 1.0 } else { -1.0 };
    }
    out
}
