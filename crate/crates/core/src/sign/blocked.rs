//! Blocked operator built along a tree of mean-zero splits.
//!
//! Starting from `[0, 1]`, every leaf `A_(m,k)` is split into two halves by a
//! balanced near-sign `x_n` (`n = 2^m + k`) whose image under the head
//! projection `P_(s_(n-1)) T` is tiny; `h'_n = 2^(m/p) x_n` then has almost all
//! of its image in the coordinate block `(s_(n-1), s_n]`.

use serde::Serialize;

use crate::dyadic::{DyadicFunction, DyadicSet};
use crate::error::{invalid, Error, Result};
use crate::haar::lp_scale;
use crate::operators::LinearOperator;
use crate::sign::near_sign::balanced_near_sign;

/// Bookkeeping for one built index `n >= 2`.
#[derive(Clone, Debug, Serialize)]
pub struct BlockStep {
    pub n: usize,
    pub s_prev: usize,
    pub s_n: usize,
    /// Depth at which the leaf was split.
    pub split_depth: u32,
    /// `‖P_(s_(n-1)) T h'_n‖`.
    pub head_leak: f64,
    /// `‖T h'_n - P_(s_n) T h'_n‖`.
    pub tail: f64,
    /// `‖T h'_n - (P_(s_n) - P_(s_(n-1))) T h'_n‖`.
    pub defect: f64,
    /// `ε / 2^n`.
    pub bound: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct TreeConstruction {
    /// `tree[m][k - 1] = A_(m,k)` at the source depth.
    #[serde(skip)]
    pub tree: Vec<Vec<DyadicSet>>,
    /// `s[n - 1] = s_n`.
    pub s: Vec<usize>,
    /// `a[n - 1] = a_n`, with `a_1 = 0`.
    pub a: Vec<f64>,
    pub steps: Vec<BlockStep>,
    /// `S h_n = a_n e_n`.
    #[serde(skip)]
    pub s_op: LinearOperator,
    /// `v_map[n - 1] = h'_n`, the image of `h_n` under the tree isometry.
    #[serde(skip)]
    pub v_map: Vec<DyadicFunction>,
    pub levels_built: u32,
    pub complete: bool,
    pub diagnostic: Option<String>,
}

impl TreeConstruction {
    /// True iff every built index satisfies its block bound.
    pub fn all_bounds_hold(&self) -> bool {
        self.steps.iter().all(|s| s.holds)
    }

    /// True iff `μ(A_(m,k)) = 2^-m` and every node is the disjoint union of its
    /// two children.
    pub fn tree_is_exact(&self) -> bool {
        for (m, level) in self.tree.iter().enumerate() {
            let want = 1usize << (level[0].depth() as usize - m);
            if level.iter().any(|set| set.count() != want) {
                return false;
            }
            if let Some(next) = self.tree.get(m + 1) {
                for (k, node) in level.iter().enumerate() {
                    let (Some(l), Some(r)) = (next.get(2 * k), next.get(2 * k + 1)) else {
                        continue;
                    };
                    if !l.is_disjoint(r) || &l.union(r) != node {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Runs the construction for `levels` tree levels, building `h'_n` for
/// `n = 1..=2^levels`.
pub fn blocked_operator(t: &LinearOperator, eps: f64, levels: u32) -> Result<TreeConstruction> {
    if !(eps > 0.0) {
        return Err(invalid("eps", format!("must be positive, got {eps}")));
    }
    let depth = t.source_depth();
    if levels + 1 > depth {
        return Err(Error::DepthInsufficient {
            needed: levels + 1,
            depth,
        });
    }
    let p = t.source_p();
    let dim = t.target().dim();
    let full = DyadicSet::full(depth);
    let mut tree = vec![vec![full.clone()]];
    let mut s = vec![0usize];
    let mut a = vec![0.0];
    let mut v_map = vec![DyadicFunction::constant(depth, 1.0)];
    let mut steps = Vec::new();
    let mut diagnostic = None;

    'levels: for m in 0..levels {
        let mut next = Vec::with_capacity(2 << m);
        for k in 1..=(1usize << m) {
            let n = (1usize << m) + k;
            let leaf = &tree[m as usize][k - 1];
            let s_prev = s[n - 2];
            let scale = lp_scale(m, p);
            let leak_target = eps / (n as f64 + 1.0).exp2() / scale;
            let split = match split_leaf(t, leaf, s_prev, leak_target) {
                Ok(split) => split,
                Err(e) => {
                    diagnostic = Some(format!("stopped at n = {n}: {e}"));
                    break 'levels;
                }
            };
            let h = split.sign.scaled(scale);
            let th = t.apply(&h)?;
            let tails = t.target().tail_norms(&th);
            let half_bound = eps / (n as f64 + 1.0).exp2();
            let minimal = tails.iter().position(|&v| v <= half_bound).unwrap_or(th.len());
            let s_n = if minimal > s_prev {
                minimal
            } else {
                (s_prev + 1).min(dim)
            };
            let mut block = vec![0.0; th.len()];
            let mut rest = th.clone();
            for i in s_prev.min(s_n)..s_n {
                block[i] = th[i];
                rest[i] = 0.0;
            }
            let a_n = t.target_norm(&block);
            let defect = t.target_norm(&rest);
            let bound = eps / (n as f64).exp2();
            let head_leak = t.head_projection(s_prev)?.image_norm(&h)?;
            steps.push(BlockStep {
                n,
                s_prev,
                s_n,
                split_depth: split.depth,
                head_leak,
                tail: tails[s_n],
                defect,
                bound,
                holds: defect <= bound * (1.0 + 1e-12),
            });
            s.push(s_n);
            a.push(a_n);
            v_map.push(h);
            next.push(split.plus);
            next.push(split.minus);
        }
        tree.push(next);
    }

    let levels_built = tree.len() as u32 - 1;
    let complete = levels_built == levels;
    if !complete && diagnostic.is_none() {
        diagnostic = Some("construction stopped early".into());
    }
    let s_op = LinearOperator::diagonal_blocked(&a, p, t.target().r(), depth)?
        .with_label(format!("blocked({})", t.label()));
    Ok(TreeConstruction {
        tree,
        s,
        a,
        steps,
        s_op,
        v_map,
        levels_built,
        complete,
        diagnostic,
    })
}

struct LeafSplit {
    sign: DyadicFunction,
    plus: DyadicSet,
    minus: DyadicSet,
    depth: u32,
}

/// Balanced sign on `leaf` with `‖P_(s_prev) T x‖ <= target`, searching
/// working depths from coarse to fine and keeping the best if none meets the
/// target.
fn split_leaf(t: &LinearOperator, leaf: &DyadicSet, s_prev: usize, target: f64) -> Result<LeafSplit> {
    let depth = t.source_depth();
    let start = leaf.natural_depth();
    if s_prev == 0 {
        // P_0 T = 0: split into the left and right halves of the atom order
        let fine = (start + 1).min(depth);
        let coarse = leaf.coarsen(fine).expect("natural depth bounds the leaf");
        return halves(coarse.atoms(), fine, leaf, depth);
    }
    let f = t.head_projection(s_prev)?;
    let mut best: Option<(f64, DyadicFunction, u32)> = None;
    let mut last_err = None;
    for w in start..=depth {
        let Some(coarse) = leaf.coarsen(w) else {
            continue;
        };
        if coarse.count() < 2 || coarse.count() % 2 != 0 {
            continue;
        }
        match balanced_near_sign(&f, &coarse, w) {
            Ok(out) => {
                let leak = out.witness.image_norm().unwrap_or(f64::INFINITY);
                let sign = orient(out.witness.into_sign());
                if best.as_ref().is_none_or(|b| leak < b.0) {
                    best = Some((leak, sign, w));
                }
                if leak <= target {
                    break;
                }
            }
            Err(e @ Error::InsufficientResolution { .. }) => last_err = Some(e),
            Err(e) => return Err(e),
        }
    }
    let Some((_, sign, w)) = best else {
        return Err(last_err.unwrap_or_else(|| Error::ResolutionExhausted("leaf cannot be split".into())));
    };
    let sign = sign.refine(depth)?;
    Ok(LeafSplit {
        plus: set_where(&sign, 1.0),
        minus: set_where(&sign, -1.0),
        sign,
        depth: w,
    })
}

fn halves(atoms: Vec<usize>, fine: u32, leaf: &DyadicSet, depth: u32) -> Result<LeafSplit> {
    if atoms.len() < 2 || !atoms.len().is_multiple_of(2) {
        return Err(Error::InsufficientResolution {
            atoms: atoms.len(),
            needed: 2,
        });
    }
    let mut values = vec![0.0; 1usize << fine];
    let half = atoms.len() / 2;
    for (i, &a) in atoms.iter().enumerate() {
        values[a] = if i < half { 1.0 } else { -1.0 };
    }
    let sign = DyadicFunction::new(fine, values)?.refine(depth)?;
    debug_assert_eq!(sign.support(), leaf.refine(depth)?);
    Ok(LeafSplit {
        plus: set_where(&sign, 1.0),
        minus: set_where(&sign, -1.0),
        sign,
        depth: fine,
    })
}

/// Flips the sign so that its first nonzero atom is `+1`.
fn orient(x: DyadicFunction) -> DyadicFunction {
    match x.values().iter().find(|&&v| v != 0.0) {
        Some(&v) if v < 0.0 => x.scaled(-1.0).map(|v| v + 0.0),
        _ => x,
    }
}

fn set_where(x: &DyadicFunction, value: f64) -> DyadicSet {
    DyadicSet::new(x.depth(), x.values().iter().map(|&v| v == value).collect())
        .expect("depth already validated")
}
