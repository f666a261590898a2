//! Haar system on the dyadic model.
//!
//! Indexing follows the classical convention: `n = 1` is the constant
//! function and `n = 2^m + k` (`1 <= k <= 2^m`) is supported on
//! `I_m^k = [(k-1) 2^-m, k 2^-m)`, equal to `+1` on its left half and `-1` on
//! its right half in the `L_∞` normalization.
//!
//! Coefficients are always stored against the `L_∞`-normalized functions
//! `h̄_n`; the `L_p` normalization `h_n = 2^(m/p) h̄_n` is a diagonal rescaling.
//! A coefficient array of depth `d` stores `c_n` at position `n - 1`, so level
//! `m` occupies the contiguous block `2^m .. 2^(m+1)`.

use serde::{Deserialize, Serialize};

use crate::dyadic::{check_exponent, DyadicFunction};
use crate::error::{invalid, Error, Result};

/// A Haar index `n >= 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct HaarIndex(usize);

impl HaarIndex {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "Haar indices start at 1"));
        }
        Ok(Self(n))
    }

    /// The index `2^m + k`, `1 <= k <= 2^m`.
    pub fn from_level(m: u32, k: usize) -> Result<Self> {
        if k == 0 || k > 1usize << m {
            return Err(invalid("k", format!("position {k} outside 1..=2^{m}")));
        }
        Ok(Self((1usize << m) + k))
    }

    pub fn get(self) -> usize {
        self.0
    }

    /// `(m, k)` with `n = 2^m + k`; `None` for the constant `n = 1`.
    pub fn level_position(self) -> Option<(u32, usize)> {
        if self.0 == 1 {
            return None;
        }
        let m = (self.0 - 1).ilog2();
        Some((m, self.0 - (1usize << m)))
    }

    /// Level used for normalization: `m` for `n >= 2`, `0` for `n = 1`.
    pub fn scale_level(self) -> u32 {
        self.level_position().map_or(0, |(m, _)| m)
    }

    /// Smallest depth at which `h̄_n` is a step function.
    pub fn min_depth(self) -> u32 {
        self.level_position().map_or(0, |(m, _)| m + 1)
    }
}

/// Level `m` of the coefficient stored at array position `i` (`n = i + 1`).
#[inline]
pub fn level_of_position(i: usize) -> u32 {
    if i == 0 {
        0
    } else {
        i.ilog2()
    }
}

fn check_index(n: HaarIndex, depth: u32) -> Result<()> {
    if n.get() > 1usize << depth {
        return Err(Error::DepthInsufficient {
            needed: n.min_depth(),
            depth,
        });
    }
    Ok(())
}

/// The `L_∞`-normalized Haar function `h̄_n` at the given depth.
pub fn linf_haar(n: HaarIndex, depth: u32) -> Result<DyadicFunction> {
    check_index(n, depth)?;
    let Some((m, k)) = n.level_position() else {
        return Ok(DyadicFunction::constant(depth, 1.0));
    };
    let width = 1usize << (depth - m);
    let start = (k - 1) * width;
    let mut values = vec![0.0; 1usize << depth];
    values[start..start + width / 2].fill(1.0);
    values[start + width / 2..start + width].fill(-1.0);
    DyadicFunction::new(depth, values)
}

/// The `L_p`-normalized Haar function `h_n = 2^(m/p) h̄_n`, `‖h_n‖_p = 1`.
pub fn lp_haar(n: HaarIndex, p: f64, depth: u32) -> Result<DyadicFunction> {
    check_exponent(p)?;
    let h = linf_haar(n, depth)?;
    Ok(h.scaled(lp_scale(n.scale_level(), p)))
}

/// `2^(m/p)`, the factor turning `h̄_n` into `h_n` at level `m`.
#[inline]
pub fn lp_scale(m: u32, p: f64) -> f64 {
    if p.is_infinite() {
        1.0
    } else {
        (m as f64 / p).exp2()
    }
}

/// The Rademacher function `r_m = Σ_k h̄_(2^m + k)`.
pub fn rademacher(m: u32, depth: u32) -> Result<DyadicFunction> {
    if m + 1 > depth {
        return Err(Error::DepthInsufficient { needed: m + 1, depth });
    }
    let block = 1usize << (depth - m - 1);
    Ok(DyadicFunction::from_fn(depth, |i| {
        if (i / block).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }))
}

/// Coefficients of a step function against `(h̄_n)`, `n = 1..=2^depth`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaarCoefficients {
    depth: u32,
    coeffs: Vec<f64>,
}

impl HaarCoefficients {
    pub fn new(depth: u32, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != 1usize << depth {
            return Err(Error::Format(format!(
                "depth {depth} needs {} coefficients, got {}",
                1usize << depth,
                coeffs.len()
            )));
        }
        Ok(Self { depth, coeffs })
    }

    pub fn zeros(depth: u32) -> Self {
        Self {
            depth,
            coeffs: vec![0.0; 1usize << depth],
        }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn get(&self, n: HaarIndex) -> f64 {
        self.coeffs.get(n.get() - 1).copied().unwrap_or(0.0)
    }

    pub fn set(&mut self, n: HaarIndex, value: f64) {
        self.coeffs[n.get() - 1] = value;
    }

    /// Coefficients `β_n` against the `L_p`-normalized system:
    /// `β_n = 2^(-m/p) c_n`.
    pub fn to_lp(&self, p: f64) -> Vec<f64> {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c / lp_scale(level_of_position(i), p))
            .collect()
    }

    /// `Σ_n c_n^2 ‖h̄_n‖_2^2`, equal to `‖f‖_2^2` by Parseval.
    pub fn parseval_energy(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| c * c * (-(level_of_position(i) as f64)).exp2())
            .sum()
    }
}

/// Fast Haar analysis by the average/difference butterfly, `O(2^depth)`.
pub fn analyze(f: &DyadicFunction) -> HaarCoefficients {
    let depth = f.depth();
    let mut out = vec![0.0; f.len()];
    let mut buf = f.values().to_vec();
    for level in (0..depth).rev() {
        let half = 1usize << level;
        for j in 0..half {
            let (a, b) = (buf[2 * j], buf[2 * j + 1]);
            out[half + j] = 0.5 * (a - b);
            buf[j] = 0.5 * (a + b);
        }
    }
    out[0] = buf[0];
    HaarCoefficients { depth, coeffs: out }
}

/// Inverse of [`analyze`].
pub fn synthesize(c: &HaarCoefficients) -> DyadicFunction {
    let depth = c.depth;
    let coeffs = &c.coeffs;
    let mut buf = vec![0.0; coeffs.len()];
    buf[0] = coeffs[0];
    for level in 0..depth {
        let half = 1usize << level;
        for j in (0..half).rev() {
            let (avg, diff) = (buf[j], coeffs[half + j]);
            buf[2 * j] = avg + diff;
            buf[2 * j + 1] = avg - diff;
        }
    }
    DyadicFunction::from_raw(depth, buf)
}

/// Nonzero Haar coefficients of the indicator of one atom: `(position, value)`
/// pairs, one per level plus the constant term.
pub fn atom_coefficients(atom: usize, depth: u32) -> impl Iterator<Item = (usize, f64)> {
    let c1 = (-(depth as f64)).exp2();
    std::iter::once((0usize, c1)).chain((0..depth).map(move |m| {
        let shift = depth - m;
        let position = (1usize << m) + (atom >> shift);
        let left = (atom >> (shift - 1)) & 1 == 0;
        let mag = (m as f64 - depth as f64).exp2();
        (position, if left { mag } else { -mag })
    }))
}
