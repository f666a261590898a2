//! Gentle functions, gentle witnesses and the ascent towards near-signs.
//!
//! A gentle function `φ` bounds how much of a witness lives above height `M`:
//! `‖x - x^M‖_p <= φ(M) μ(A)^(1/p)`, where `x^M` clips `x` to `[-M, M]`.

mod ascent;
mod band;
mod inequalities;
mod rebalance;
mod witness;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use ascent::{gentle_ascent, AscentConfig, AscentResult, TraceRecord};
pub use band::{band_perturbation, BandPerturbation};
pub use inequalities::{gentle_constant, level_set_residual, two_point_residual, type_p_residual};
pub use rebalance::{mean_zero_combination, rebalance_mean_zero, Combination, Rebalanced};
pub use witness::{gentle_witness, GentleWitness};

/// Headroom applied to the exact envelope constant of the Gaussian profile,
/// so that witnesses with rounded layer sizes still fit under `φ`.
const GAUSSIAN_HEADROOM: f64 = 1.5;
const ENVELOPE_GRID: usize = 4096;

/// A nonincreasing `φ: (0, ∞) -> [0, 1]` together with the witness profile it
/// is meant for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GentleFunction {
    /// `φ(M) = 1 - M` below one and zero above; witnesses are signs.
    SignBased,
    /// `φ(M) = min(1, c exp(-M^2 / 2σ^2))`; witnesses follow the distribution
    /// of `|ε_1 + ... + ε_L| / √L` for `L = coins` fair signs.
    Gaussian { p: f64, coins: u32, sigma: f64, c: f64 },
    /// Step function through `(M_i, φ_i)`, equal to one before the first
    /// point; witnesses are signs.
    Table { points: Vec<(f64, f64)> },
}

impl GentleFunction {
    /// Gaussian envelope whose width matches the `p`-normalized profile's
    /// standard deviation stretched by `√p`.
    pub fn gaussian(p: f64, coins: u32) -> Result<Self> {
        let profile = Profile::binomial(p, coins)?;
        Self::gaussian_with_sigma(p, coins, profile.scale * p.sqrt())
    }

    /// Gaussian envelope of width `sigma`; the constant `c` is the least one
    /// dominating the exact profile tail, times a fixed headroom.
    pub fn gaussian_with_sigma(p: f64, coins: u32, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(invalid("sigma", format!("must be positive, got {sigma}")));
        }
        let profile = Profile::binomial(p, coins)?;
        let top = profile.max_value();
        let step = top / ENVELOPE_GRID as f64;
        let mut c = 0.0_f64;
        for i in 0..ENVELOPE_GRID {
            let lo = i as f64 * step;
            let hi = lo + step;
            // the tail is decreasing and the weight increasing on [lo, hi]
            c = c.max(profile.tail(lo) * (hi * hi / (2.0 * sigma * sigma)).exp());
        }
        Ok(Self::Gaussian {
            p,
            coins,
            sigma,
            c: c * GAUSSIAN_HEADROOM,
        })
    }

    pub fn table(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("points", "needs at least one point"));
        }
        for w in points.windows(2) {
            if !(w[1].0 > w[0].0) || w[1].1 > w[0].1 {
                return Err(invalid("points", "abscissae must increase and values must not"));
            }
        }
        if points
            .iter()
            .any(|&(m, v)| !(m > 0.0) || !(0.0..=1.0).contains(&v))
        {
            return Err(invalid("points", "need M > 0 and values in [0, 1]"));
        }
        Ok(Self::Table { points })
    }

    pub fn phi(&self, m: f64) -> f64 {
        match self {
            Self::SignBased => (1.0 - m).max(0.0),
            Self::Gaussian { sigma, c, .. } => (c * (-m * m / (2.0 * sigma * sigma)).exp()).min(1.0),
            Self::Table { points } => points
                .iter()
                .take_while(|&&(x, _)| x <= m)
                .last()
                .map_or(1.0, |&(_, v)| v),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::SignBased => "sign_based",
            Self::Gaussian { .. } => "gaussian",
            Self::Table { .. } => "table",
        }
    }

    /// Fewest sibling pairs a witness may be built from.
    pub(crate) fn min_pairs(&self) -> usize {
        match self {
            Self::Gaussian { .. } => 16,
            _ => 1,
        }
    }

    pub(crate) fn profile(&self, p: f64) -> Result<Profile> {
        match self {
            Self::Gaussian { coins, .. } => Profile::binomial(p, *coins),
            _ => Ok(Profile::sign()),
        }
    }
}

/// Magnitude classes `(value, probability)` of a witness normalized to
/// `‖x‖_p = μ(A)^(1/p)`, largest value first.
#[derive(Clone, Debug)]
pub(crate) struct Profile {
    pub classes: Vec<(f64, f64)>,
    /// Standard deviation of the signed profile.
    pub scale: f64,
    p: f64,
}

impl Profile {
    fn sign() -> Self {
        Self {
            classes: vec![(1.0, 1.0)],
            scale: 1.0,
            p: 1.0,
        }
    }

    fn binomial(p: f64, coins: u32) -> Result<Self> {
        if !(p >= 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        if coins == 0 || coins > 64 {
            return Err(invalid("coins", format!("expected 1..=64, got {coins}")));
        }
        let l = coins as i64;
        let total = (coins as f64).exp2();
        let mut classes = Vec::new();
        let mut level = l;
        while level >= 0 {
            let heads = ((l + level) / 2) as u64;
            let mut prob = binomial(coins as u64, heads) / total;
            if level > 0 {
                prob *= 2.0;
            }
            classes.push((level as f64 / (coins as f64).sqrt(), prob));
            level -= 2;
        }
        let moment: f64 = classes.iter().map(|&(v, q)| q * v.powf(p)).sum();
        let kappa = moment.powf(-1.0 / p);
        for c in &mut classes {
            c.0 *= kappa;
        }
        Ok(Self {
            classes,
            scale: kappa,
            p,
        })
    }

    fn max_value(&self) -> f64 {
        self.classes[0].0
    }

    /// `(Σ q (v - M)_+^p)^(1/p)`.
    fn tail(&self, m: f64) -> f64 {
        let s: f64 = self
            .classes
            .iter()
            .map(|&(v, q)| q * (v - m).max(0.0).powf(self.p))
            .sum();
        s.powf(1.0 / self.p)
    }
}

fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Tabulates `M^(2-p) φ(M)^p` at `M = 2^j`, `j = 0..=j_max`.
///
/// Reports `true` when the last value is at most a thousandth of the first
/// and the second half of the table is nonincreasing.
pub fn check_p_gentle(phi: &GentleFunction, p: f64, j_max: u32) -> Result<(bool, Vec<(f64, f64)>)> {
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidExponent(p));
    }
    if j_max == 0 {
        return Err(invalid("j_max", "needs at least two grid points"));
    }
    let table: Vec<(f64, f64)> = (0..=j_max)
        .map(|j| {
            let m = (j as f64).exp2();
            (m, m.powf(2.0 - p) * phi.phi(m).powf(p))
        })
        .collect();
    let first = table[0].1;
    let last = table[table.len() - 1].1;
    let tail = &table[table.len() / 2..];
    let decreasing = tail.windows(2).all(|w| w[1].1 <= w[0].1);
    Ok((last <= first * 1e-3 && decreasing, table))
}
