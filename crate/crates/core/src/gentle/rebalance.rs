//! Mean-zero witnesses: split `A` into pieces, take a witness on each, then
//! combine them with signs so the total mean vanishes.

use rand::Rng;
use serde::Serialize;

use super::witness::{gentle_witness, tail_norm};
use super::GentleFunction;
use crate::dyadic::{split_set, DyadicFunction, DyadicSet};
use crate::error::{invalid, Error, Result};
use crate::operators::LinearOperator;

/// Signs attached to pieces by [`mean_zero_combination`].
#[derive(Clone, Debug, Serialize)]
pub struct Combination {
    #[serde(skip)]
    pub x: DyadicFunction,
    /// Piece indices in the order they were combined; the last one is the
    /// piece with the largest `|mean|` and receives the pointwise sign `r`.
    pub order: Vec<usize>,
    /// Sign per piece, indexed like the input; the last piece gets `1` here.
    pub theta: Vec<f64>,
    /// Atoms of the last piece where `r = -1`.
    pub flipped: usize,
    pub residual_mean: f64,
}

/// Combines functions with disjoint supports into `Σ θ_i x_i + r x_last`
/// with mean zero.
///
/// The piece with the largest `|mean|` goes last. The others get `θ_1 = 1`
/// and then whichever sign keeps the running mean smallest, so it never
/// exceeds the last piece's `|mean|`; a pointwise sign `r` on the last piece
/// cancels what remains. When `r` cannot cancel it exactly at the current
/// depth, the last piece is refined once (up to `max_depth`).
pub fn mean_zero_combination(pieces: &[DyadicFunction], max_depth: u32) -> Result<Combination> {
    if pieces.is_empty() {
        return Err(invalid("pieces", "needs at least one piece"));
    }
    let depth = pieces.iter().map(DyadicFunction::depth).max().unwrap_or(0);
    let pieces: Vec<DyadicFunction> = pieces.iter().map(|x| x.refine(depth)).collect::<Result<_>>()?;
    let len = 1usize << depth;
    for i in 0..len {
        if pieces.iter().filter(|x| x.values()[i] != 0.0).count() > 1 {
            return Err(invalid("pieces", "supports must be disjoint"));
        }
    }
    let means: Vec<f64> = pieces.iter().map(DyadicFunction::mean).collect();
    let last = (0..pieces.len())
        .max_by(|&a, &b| means[a].abs().total_cmp(&means[b].abs()).then(b.cmp(&a)))
        .unwrap_or(0);
    let mut order: Vec<usize> = (0..pieces.len()).filter(|&i| i != last).collect();
    order.push(last);

    let mut theta = vec![1.0; pieces.len()];
    let mut partial = 0.0;
    for (pos, &i) in order[..order.len() - 1].iter().enumerate() {
        if pos > 0 && (partial - means[i]).abs() < (partial + means[i]).abs() {
            theta[i] = -1.0;
        }
        partial += theta[i] * means[i];
    }

    let mass: f64 = pieces.iter().map(|x| x.lp_norm(1.0).unwrap_or(0.0)).sum();
    let tol = 1e-12 * mass.max(1.0);
    let mut target_piece = pieces[last].clone();
    let mut solved = solve_sign(&target_piece, -partial);
    if solved.1.abs() > tol && depth < max_depth {
        target_piece = target_piece.refine(depth + 1)?;
        solved = solve_sign(&target_piece, -partial);
    }
    let (r, residual, flipped) = solved;
    if residual.abs() > tol {
        return Err(Error::ResolutionExhausted(format!(
            "a pointwise sign on the last piece leaves mean {residual:e}"
        )));
    }
    let out_depth = target_piece.depth();
    let mut x = target_piece.times(&r);
    for &i in &order[..order.len() - 1] {
        x = x.axpy(theta[i], &pieces[i].refine(out_depth)?);
    }
    Ok(Combination {
        residual_mean: x.mean(),
        x,
        order,
        theta,
        flipped,
    })
}

/// Pointwise sign `r` with `∫ r x` as close to `target` as greedy flips of
/// the largest values get it. Returns `(r, ∫ r x - target, flips)`.
fn solve_sign(x: &DyadicFunction, target: f64) -> (DyadicFunction, f64, usize) {
    let w = x.atom_measure();
    let mut atoms: Vec<usize> = (0..x.len()).filter(|&i| x.values()[i] != 0.0).collect();
    atoms.sort_by(|&a, &b| {
        x.values()[b]
            .abs()
            .total_cmp(&x.values()[a].abs())
            .then(a.cmp(&b))
    });
    let mut r = vec![1.0; x.len()];
    let mut gap = x.mean() - target;
    let mut flips = 0;
    for &a in &atoms {
        let moved = gap - 2.0 * x.values()[a] * w;
        if moved.abs() < gap.abs() {
            r[a] = -1.0;
            gap = moved;
            flips += 1;
        }
    }
    (DyadicFunction::from_raw(x.depth(), r), gap, flips)
}

/// Output of [`rebalance_mean_zero`] with the four witness conditions.
#[derive(Clone, Debug, Serialize)]
pub struct Rebalanced {
    #[serde(skip)]
    pub x: DyadicFunction,
    pub pieces: usize,
    pub split_depth: u32,
    pub theta: Vec<f64>,
    pub flipped: usize,
    /// `‖x‖_p / μ(A)^(1/p)`.
    pub normalized_norm: f64,
    /// `‖x - x^M‖_p / μ(A)^(1/p)`.
    pub tail: f64,
    pub phi: f64,
    pub image_norm: f64,
    pub mean: f64,
    /// Exact norm, tail below `φ(M)`, image at most `eps`, mean zero.
    pub conditions: [bool; 4],
}

impl Rebalanced {
    pub fn all_hold(&self) -> bool {
        self.conditions.iter().all(|&c| c)
    }
}

/// A witness on `set` satisfying the three gentle conditions together with
/// `∫ x = 0`.
///
/// A single witness on the whole set is tried first; generated witnesses are
/// usually mean zero already, and then no splitting is needed. Otherwise the
/// set is split into `n` equal pieces with `(μ(A)/n)^(1/p) < eps/4` (as far as
/// the resolution allows), each piece gets a witness with image below
/// `eps/(2n)`, and the pieces are combined by [`mean_zero_combination`].
pub fn rebalance_mean_zero<R: Rng + ?Sized>(
    t: &LinearOperator,
    set: &DyadicSet,
    m: f64,
    eps: f64,
    gen: &GentleFunction,
    rng: &mut R,
) -> Result<Rebalanced> {
    let p = t.source_p();
    let depth = t.source_depth();
    let first = gentle_witness(t, set, m, eps, gen, rng)?;
    let tol = 1e-12 * set.measure().max(1e-300).powf(1.0 / p).max(1.0);
    if first.x.mean().abs() <= tol {
        return finish(t, set, m, eps, gen, first.x, 1, set.natural_depth(), vec![1.0], 0);
    }

    let measure = set.measure();
    let mut n = 1usize;
    while (measure / n as f64).powf(1.0 / p) >= eps / 4.0 && n < 1 << 30 {
        n *= 2;
    }
    let natural = set.natural_depth();
    let base = set.coarsen(natural).map_or(0, |s| s.count());
    let feasible = |n: usize| {
        (natural..depth).find(|&d| {
            let count = base << (d - natural);
            count.is_multiple_of(n) && count / n >= gen.min_pairs()
        })
    };
    while n > 1 && feasible(n).is_none() {
        n /= 2;
    }
    let split_depth = feasible(n).ok_or(Error::InsufficientResolution {
        atoms: base,
        needed: gen.min_pairs(),
    })?;
    let pieces = split_set(&set.refine(split_depth)?, n, rng)?;
    let xs = pieces
        .iter()
        .map(|piece| gentle_witness(t, piece, m, eps / (2.0 * n as f64), gen, rng).map(|w| w.x))
        .collect::<Result<Vec<_>>>()?;
    let combo = mean_zero_combination(&xs, depth)?;
    finish(
        t,
        set,
        m,
        eps,
        gen,
        combo.x,
        n,
        split_depth,
        combo.theta,
        combo.flipped,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    t: &LinearOperator,
    set: &DyadicSet,
    m: f64,
    eps: f64,
    gen: &GentleFunction,
    x: DyadicFunction,
    pieces: usize,
    split_depth: u32,
    theta: Vec<f64>,
    flipped: usize,
) -> Result<Rebalanced> {
    let p = t.source_p();
    let scale = set.measure().powf(1.0 / p);
    let x = x.refine(t.source_depth())?;
    let normalized_norm = x.lp_norm(p)? / scale;
    let tail = tail_norm(&x, m, p)? / scale;
    let phi = gen.phi(m);
    let image_norm = t.image_norm(&x)?;
    let mean = x.mean();
    let conditions = [
        (normalized_norm - 1.0).abs() <= 1e-12,
        tail <= phi * (1.0 + 1e-12),
        image_norm <= eps * (1.0 + 1e-12),
        mean.abs() <= 1e-12,
    ];
    Ok(Rebalanced {
        x,
        pieces,
        split_depth,
        theta,
        flipped,
        normalized_norm,
        tail,
        phi,
        image_norm,
        mean,
        conditions,
    })
}
