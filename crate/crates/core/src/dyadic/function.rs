use serde::{Deserialize, Serialize};

use super::{check_depth, DyadicSet};
use crate::error::{invalid, Error, Result};

/// A step function on `[0, 1)` that is constant on the `2^depth` dyadic atoms
/// `[(k-1) 2^-depth, k 2^-depth)`.
///
/// All integrals use the atom weight `2^-depth`, so norms, means and support
/// measures do not change under [`DyadicFunction::refine`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFunction")]
pub struct DyadicFunction {
    depth: u32,
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawFunction {
    depth: u32,
    values: Vec<f64>,
}

impl TryFrom<RawFunction> for DyadicFunction {
    type Error = Error;

    fn try_from(raw: RawFunction) -> Result<Self> {
        DyadicFunction::new(raw.depth, raw.values)
    }
}

/// Exponent of an `L_p` norm. `f64::INFINITY` selects the sup-norm.
pub(crate) fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// `(2^-depth * sum |v|^p)^(1/p)`, or `max |v|` for `p = inf`.
pub(crate) fn weighted_norm(values: &[f64], depth: u32, p: f64) -> f64 {
    let weight = (-(depth as f64)).exp2();
    if p.is_infinite() {
        values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum::<f64>() * weight
    } else if p == 2.0 {
        (values.iter().map(|v| v * v).sum::<f64>() * weight).sqrt()
    } else {
        (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * weight).powf(1.0 / p)
    }
}

impl DyadicFunction {
    pub fn new(depth: u32, values: Vec<f64>) -> Result<Self> {
        check_depth(depth)?;
        if values.len() != 1usize << depth {
            return Err(Error::Format(format!(
                "depth {depth} needs {} values, got {}",
                1usize << depth,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("value at atom {k} is not finite")));
        }
        Ok(Self { depth, values })
    }

    pub fn zeros(depth: u32) -> Self {
        Self::constant(depth, 0.0)
    }

    pub fn constant(depth: u32, c: f64) -> Self {
        Self {
            depth,
            values: vec![c; 1usize << depth],
        }
    }

    /// Builds a function from its value on each atom index `k = 0..2^depth`.
    pub fn from_fn(depth: u32, f: impl FnMut(usize) -> f64) -> Self {
        Self {
            depth,
            values: (0..1usize << depth).map(f).collect(),
        }
    }

    /// Crate-internal constructor that skips validation.
    pub(crate) fn from_raw(depth: u32, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), 1usize << depth);
        Self { depth, values }
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Measure of one atom, `2^-depth`.
    pub fn atom_measure(&self) -> f64 {
        (-(self.depth as f64)).exp2()
    }

    /// Re-expresses the function at a finer depth.
    pub fn refine(&self, depth: u32) -> Result<Self> {
        if depth < self.depth {
            return Err(invalid(
                "depth",
                format!("cannot refine depth {} down to {depth}", self.depth),
            ));
        }
        check_depth(depth)?;
        let rep = 1usize << (depth - self.depth);
        let mut values = Vec::with_capacity(self.values.len() * rep);
        for &v in &self.values {
            values.extend(std::iter::repeat_n(v, rep));
        }
        Ok(Self { depth, values })
    }

    /// The `L_p` norm; `p = f64::INFINITY` gives the sup-norm.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        Ok(weighted_norm(&self.values, self.depth, p))
    }

    /// `p`-th power of the `L_p` norm (finite `p` only).
    pub fn lp_norm_pow(&self, p: f64) -> Result<f64> {
        check_exponent(p)?;
        if p.is_infinite() {
            return Err(Error::InvalidExponent(p));
        }
        Ok(self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * self.atom_measure())
    }

    pub fn sup_norm(&self) -> f64 {
        weighted_norm(&self.values, self.depth, f64::INFINITY)
    }

    /// `∫ f dμ`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.atom_measure()
    }

    /// Pointwise clipping to `[-M, M]` preserving sign.
    pub fn truncate(&self, m: f64) -> Result<Self> {
        if !(m > 0.0) || !m.is_finite() {
            return Err(invalid("M", format!("truncation level must be > 0, got {m}")));
        }
        Ok(self.map(|v| v.clamp(-m, m)))
    }

    /// The set of atoms where the function is nonzero.
    pub fn support(&self) -> DyadicSet {
        DyadicSet::from_mask_unchecked(self.depth, self.values.iter().map(|&v| v != 0.0).collect())
    }

    /// True iff every value is exactly -1, 0 or 1.
    pub fn is_sign(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0 || v == -1.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            depth: self.depth,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| c * v)
    }

    /// Pointwise combination after refining both operands to the finer depth.
    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let depth = self.depth.max(other.depth);
        let a = self.refined_values(depth);
        let b = other.refined_values(depth);
        Self {
            depth,
            values: a.iter().zip(b.iter()).map(|(&x, &y)| f(x, y)).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn minus(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn times(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// `self + c * other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + c * b)
    }

    /// Zeroes the function outside `set`.
    pub fn restrict(&self, set: &DyadicSet) -> Self {
        let depth = self.depth.max(set.depth());
        let values = self.refined_values(depth);
        let set = set.refine(depth).expect("depth already validated");
        Self {
            depth,
            values: values
                .iter()
                .zip(set.mask())
                .map(|(&v, &inside)| if inside { v } else { 0.0 })
                .collect(),
        }
    }

    /// The reflection `ω ↦ f(1 - ω)`.
    pub fn reflect(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        Self {
            depth: self.depth,
            values,
        }
    }

    fn refined_values(&self, depth: u32) -> std::borrow::Cow<'_, [f64]> {
        if depth == self.depth {
            std::borrow::Cow::Borrowed(&self.values)
        } else {
            std::borrow::Cow::Owned(self.refine(depth).expect("depth validated").values)
        }
    }
}

/// True iff `f` is a sign supported exactly on `set` with `|∫ f| <= tol`.
///
/// Mixed depths are compared after refining both to the finer one.
pub fn is_mean_zero_sign(f: &DyadicFunction, set: &DyadicSet, tol: f64) -> bool {
    let depth = f.depth().max(set.depth());
    let (Ok(f), Ok(set)) = (f.refine(depth), set.refine(depth)) else {
        return false;
    };
    f.is_sign()
        && f.values()
            .iter()
            .zip(set.mask())
            .all(|(&v, &inside)| (v != 0.0) == inside)
        && f.mean().abs() <= tol
}
