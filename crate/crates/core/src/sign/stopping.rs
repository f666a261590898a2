//! Stopping-time near-signs built from weighted Haar sums.

use rayon::prelude::*;
use serde::Serialize;

use crate::dyadic::{check_depth, DyadicFunction, SignWitness};
use crate::error::{invalid, Error, Result};
use crate::haar::{self, level_of_position, HaarCoefficients};

/// Marker in [`StoppingRecord::tau`] for atoms that never stop.
pub const UNSTOPPED: u32 = 0;

/// Subtrees with at least this many atoms are split across threads.
const PARALLEL_ATOMS: usize = 1 << 14;

/// Outcome of the stopping-time construction.
#[derive(Clone, Debug, Serialize)]
pub struct StoppingRecord {
    b: Vec<f64>,
    c: f64,
    #[serde(skip)]
    tau: Vec<u32>,
    #[serde(skip)]
    in_j: Vec<bool>,
    #[serde(skip)]
    g: DyadicFunction,
    #[serde(skip)]
    g_tilde: SignWitness,
    stopped_measure: f64,
}

impl StoppingRecord {
    /// Coefficients `b_m` by level.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn scale(&self) -> f64 {
        self.c
    }

    /// Number of levels minus one, so levels run over `0..=n()`.
    pub fn n(&self) -> usize {
        self.b.len() - 1
    }

    /// Stopping index per atom at depth `N + 1`, or [`UNSTOPPED`].
    pub fn tau(&self) -> &[u32] {
        &self.tau
    }

    /// Whether Haar index `n >= 2` was reached before stopping on its support.
    pub fn in_j(&self, n: usize) -> bool {
        n >= 2 && self.in_j.get(n - 1).copied().unwrap_or(false)
    }

    pub fn j_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.in_j
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(i, _)| i + 1)
    }

    pub fn g(&self) -> &DyadicFunction {
        &self.g
    }

    pub fn g_tilde(&self) -> &SignWitness {
        &self.g_tilde
    }

    pub fn stopped_measure(&self) -> f64 {
        self.stopped_measure
    }

    pub fn unstopped_measure(&self) -> f64 {
        1.0 - self.stopped_measure
    }

    /// Haar coefficients of `f = C Σ_(n>=2) b_level(n) h̄_n`.
    pub fn f_coefficients(&self) -> HaarCoefficients {
        let depth = self.b.len() as u32;
        let mut c = HaarCoefficients::zeros(depth);
        for (i, v) in c.as_mut_slice().iter_mut().enumerate().skip(1) {
            *v = self.c * self.b[level_of_position(i) as usize];
        }
        c
    }

    /// Haar coefficients of `g`: those of `f` restricted to `J`.
    pub fn g_coefficients(&self) -> HaarCoefficients {
        let mut c = self.f_coefficients();
        for (v, &keep) in c.as_mut_slice().iter_mut().zip(&self.in_j) {
            if !keep {
                *v = 0.0;
            }
        }
        c
    }

    /// The function `f` itself.
    pub fn f(&self) -> DyadicFunction {
        haar::synthesize(&self.f_coefficients())
    }
}

/// Constant coefficients `b_m = 1/√N` for `m = 0..=N`.
pub fn constant_coefficients(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid("N", "needs N >= 1"));
    }
    Ok(vec![1.0 / (n as f64).sqrt(); n + 1])
}

/// Runs the stopping time `τ(ω) = min{n : |C Σ_(2<=i<=n) b_level(i) h̄_i(ω)| > 1}`.
///
/// `b` has one entry per level `m = 0..=N`. The signs are produced at depth
/// `max(N + 1, depth)`; atom-level data (`tau`, `g`) live at depth `N + 1`.
pub fn stopping_time_sign(b: &[f64], c: f64, depth: u32) -> Result<StoppingRecord> {
    if b.is_empty() {
        return Err(invalid("b", "needs at least one level"));
    }
    if !(c > 0.0) || !c.is_finite() {
        return Err(invalid("C", format!("scale must be positive, got {c}")));
    }
    if let Some(v) = b.iter().find(|v| !v.is_finite()) {
        return Err(invalid("b", format!("non-finite coefficient {v}")));
    }
    let levels = b.len() as u32;
    if levels > depth {
        return Err(Error::DepthInsufficient {
            needed: levels,
            depth,
        });
    }
    check_depth(depth)?;

    let atoms = 1usize << levels;
    let steps: Vec<f64> = b.iter().map(|v| c * v).collect();
    let mut g = vec![0.0; atoms];
    let mut tau = vec![UNSTOPPED; atoms];
    descend(&steps, 0, 1, 0.0, &mut g, &mut tau);

    // (m, k) is reached iff the first atom of I_m^k has not stopped before it
    let in_j: Vec<bool> = (0..atoms)
        .into_par_iter()
        .map(|i| {
            if i == 0 {
                return false;
            }
            let n = i + 1;
            let m = level_of_position(i);
            let k = i - (1usize << m) + 1;
            let first = (k - 1) << (levels - m);
            let t = tau[first];
            t == UNSTOPPED || t as usize >= n
        })
        .collect();

    let stopped = tau.iter().filter(|&&t| t != UNSTOPPED).count();
    let g = DyadicFunction::from_raw(levels, g);
    let tilde = split_sign(&g, &tau)?;
    let g_tilde = SignWitness::new(tilde.refine(depth)?, None)?;
    Ok(StoppingRecord {
        b: b.to_vec(),
        c,
        tau,
        in_j,
        g,
        g_tilde,
        stopped_measure: stopped as f64 / atoms as f64,
    })
}

/// Visits node `(m, k)` (`n = 2^m + k`) whose interval is `g.len()` atoms
/// long, entered with running sum `sum`.
fn descend(steps: &[f64], m: usize, k: usize, sum: f64, g: &mut [f64], tau: &mut [u32]) {
    let n = ((1usize << m) + k) as u32;
    let parallel = g.len() >= PARALLEL_ATOMS;
    let half = g.len() / 2;
    let (gl, gr) = g.split_at_mut(half);
    let (tl, tr) = tau.split_at_mut(half);
    let left = sum + steps[m];
    let right = sum - steps[m];
    let last = m + 1 == steps.len();
    let child = |value: f64, kk: usize, gs: &mut [f64], ts: &mut [u32]| {
        if value.abs() > 1.0 {
            gs.fill(value);
            ts.fill(n);
        } else if last {
            gs.fill(value);
        } else {
            descend(steps, m + 1, kk, value, gs, ts);
        }
    };
    if parallel {
        rayon::join(|| child(left, 2 * k - 1, gl, tl), || child(right, 2 * k, gr, tr));
    } else {
        child(left, 2 * k - 1, gl, tl);
        child(right, 2 * k, gr, tr);
    }
}

/// `sign(g)` on the stopped set, and `±1` on two equal halves of the unstopped
/// set chosen so that the total mean is exactly zero.
fn split_sign(g: &DyadicFunction, tau: &[u32]) -> Result<DyadicFunction> {
    let vals = g.values();
    let mut x = vec![0.0; vals.len()];
    let mut stopped_sum: i64 = 0;
    let mut unstopped = Vec::new();
    for (i, (&v, &t)) in vals.iter().zip(tau).enumerate() {
        if t == UNSTOPPED {
            unstopped.push(i);
        } else {
            x[i] = v.signum();
            stopped_sum += v.signum() as i64;
        }
    }
    let u = unstopped.len() as i64;
    let plus = u - stopped_sum;
    if plus < 0 || plus > 2 * u || plus % 2 != 0 {
        return Err(Error::Underdetermined(format!(
            "cannot balance {u} unstopped atoms against stopped sum {stopped_sum}"
        )));
    }
    let plus = (plus / 2) as usize;
    // +1 first on {g > 0}, then on {g = 0} from the left; antisymmetry of g
    // makes this the two mirror halves of the unstopped set
    unstopped.sort_by(|&a, &b| (vals[b] + 0.0).total_cmp(&(vals[a] + 0.0)).then(a.cmp(&b)));
    for (rank, &i) in unstopped.iter().enumerate() {
        x[i] = if rank < plus { 1.0 } else { -1.0 };
    }
    Ok(DyadicFunction::from_raw(g.depth(), x))
}
