//! Bounded operators `L_p -> X` at finite depth.
//!
//! Every operator acts on the `L_∞`-normalized Haar coefficients of its input.
//! Gallery operators keep an implicit structured form so that diagonal
//! experiments run at depths where a dense matrix would not fit.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{check_depth, check_exponent, weighted_norm, DyadicFunction};
use crate::error::{invalid, Error, Result};
use crate::haar::{self, level_of_position, lp_scale, HaarCoefficients};

/// Norm descriptor of the target space.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetSpace {
    /// `ℓ_r^dim`.
    Sequence { dim: usize, r: f64 },
    /// `L_r` step functions of the given depth.
    Function { depth: u32, r: f64 },
}

impl TargetSpace {
    pub fn r(&self) -> f64 {
        match *self {
            Self::Sequence { r, .. } | Self::Function { r, .. } => r,
        }
    }

    /// Number of target coordinates.
    pub fn dim(&self) -> usize {
        match *self {
            Self::Sequence { dim, .. } => dim,
            Self::Function { depth, .. } => 1usize << depth,
        }
    }

    pub fn norm(&self, coords: &[f64]) -> f64 {
        match *self {
            Self::Sequence { r, .. } => sequence_norm(coords, r),
            Self::Function { depth, r } => weighted_norm(coords, depth, r),
        }
    }

    /// `tails[s] = ‖v - P_s v‖` for `s = 0..=v.len()`, where `P_s` keeps the
    /// first `s` coordinates.
    pub fn tail_norms(&self, v: &[f64]) -> Vec<f64> {
        let (r, weight) = match *self {
            Self::Sequence { r, .. } => (r, 1.0),
            Self::Function { depth, r } => (r, (-(depth as f64)).exp2()),
        };
        let mut tails = vec![0.0; v.len() + 1];
        let mut acc = 0.0;
        for s in (0..v.len()).rev() {
            acc += v[s].abs().powf(r);
            tails[s] = (acc * weight).powf(1.0 / r);
        }
        tails
    }
}

/// `ℓ_r` norm of a coordinate vector.
pub fn sequence_norm(v: &[f64], r: f64) -> f64 {
    if r.is_infinite() {
        v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
    } else if r == 2.0 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    } else if r == 1.0 {
        v.iter().map(|x| x.abs()).sum()
    } else {
        v.iter().map(|x| x.abs().powf(r)).sum::<f64>().powf(1.0 / r)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum OperatorKind {
    /// Row-major `rows x 2^D` matrix on `L_∞` Haar coefficients.
    Dense {
        rows: usize,
        matrix: Vec<f64>,
    },
    /// Coordinate `n` of the image is `diag[n-1] * c_n`.
    Diagonal {
        diag: Vec<f64>,
    },
    /// Identity on values.
    Inclusion,
    /// Haar coefficients in the `L_2`-normalized system.
    L2Iso,
    /// Averages over the atoms of a coarser depth.
    CondExp {
        coarse: u32,
    },
    Zero,
}

/// A linear operator from depth-`D` step functions with the `L_p` norm into a
/// [`TargetSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct LinearOperator {
    source_p: f64,
    source_depth: u32,
    target: TargetSpace,
    kind: OperatorKind,
    head: Option<usize>,
    label: String,
}

/// Interval estimate `[lower, upper]` of an operator norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: f64,
}

fn check_r(r: f64) -> Result<()> {
    if r.is_nan() || r < 1.0 || r.is_infinite() {
        return Err(invalid(
            "r",
            format!("target exponent must lie in [1, inf), got {r}"),
        ));
    }
    Ok(())
}

impl LinearOperator {
    fn build(p: f64, depth: u32, target: TargetSpace, kind: OperatorKind, label: String) -> Result<Self> {
        check_exponent(p)?;
        check_r(target.r())?;
        check_depth(depth)?;
        Ok(Self {
            source_p: p,
            source_depth: depth,
            target,
            kind,
            head: None,
            label,
        })
    }

    /// `S_{p,r}`: sends the `L_p`-normalized Haar function `h_n` to `e_n` in `ℓ_r`.
    pub fn s_pr(p: f64, r: f64, depth: u32) -> Result<Self> {
        check_exponent(p)?;
        let diag = (0..1usize << depth)
            .map(|i| 1.0 / lp_scale(level_of_position(i), p))
            .collect();
        Self::build(
            p,
            depth,
            TargetSpace::Sequence { dim: 1 << depth, r },
            OperatorKind::Diagonal { diag },
            format!("s_pr(p={p},r={r},D={depth})"),
        )
    }

    /// `S h_n = a_n e_n` on the `L_p`-normalized Haar system; `a` is indexed by
    /// position `n - 1` and padded with zeros up to `2^D`.
    pub fn diagonal_blocked(a: &[f64], p: f64, r: f64, depth: u32) -> Result<Self> {
        check_exponent(p)?;
        let size = 1usize << depth;
        if a.len() > size {
            return Err(invalid("a", format!("{} entries exceed 2^{depth}", a.len())));
        }
        if let Some(bad) = a.iter().find(|v| !v.is_finite()) {
            return Err(invalid("a", format!("non-finite entry {bad}")));
        }
        let diag = (0..size)
            .map(|i| a.get(i).copied().unwrap_or(0.0) / lp_scale(level_of_position(i), p))
            .collect();
        Self::build(
            p,
            depth,
            TargetSpace::Sequence { dim: size, r },
            OperatorKind::Diagonal { diag },
            format!("diag_blocked(p={p},r={r},D={depth})"),
        )
    }

    /// The formal identity `L_p -> L_r`.
    pub fn inclusion(p: f64, r: f64, depth: u32) -> Result<Self> {
        Self::build(
            p,
            depth,
            TargetSpace::Function { depth, r },
            OperatorKind::Inclusion,
            format!("inclusion(p={p},r={r},D={depth})"),
        )
    }

    /// `L_p -> L_2 -> ℓ_2`: inclusion followed by the Haar isometry.
    pub fn l2_iso_composition(p: f64, depth: u32) -> Result<Self> {
        Self::build(
            p,
            depth,
            TargetSpace::Sequence {
                dim: 1 << depth,
                r: 2.0,
            },
            OperatorKind::L2Iso,
            format!("l2_iso(p={p},D={depth})"),
        )
    }

    /// Conditional expectation onto the depth-`coarse` dyadic σ-algebra, as an
    /// operator `L_p -> L_p`.
    pub fn conditional_expectation(p: f64, coarse: u32, depth: u32) -> Result<Self> {
        if coarse > depth {
            return Err(invalid(
                "coarse_depth",
                format!("coarse depth {coarse} exceeds working depth {depth}"),
            ));
        }
        Self::build(
            p,
            depth,
            TargetSpace::Function { depth: coarse, r: p },
            OperatorKind::CondExp { coarse },
            format!("cond_exp(d0={coarse},p={p},D={depth})"),
        )
    }

    /// Dense matrix (`rows x 2^D`, row-major) acting on `L_∞` Haar coefficients,
    /// into `ℓ_r^rows`.
    pub fn dense(p: f64, r: f64, depth: u32, rows: usize, matrix: Vec<f64>) -> Result<Self> {
        check_depth(depth)?;
        if matrix.len() != rows << depth {
            return Err(Error::Format(format!(
                "matrix has {} entries, expected {rows} x {}",
                matrix.len(),
                1usize << depth
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Format("matrix has non-finite entries".into()));
        }
        Self::build(
            p,
            depth,
            TargetSpace::Sequence { dim: rows, r },
            OperatorKind::Dense { rows, matrix },
            format!("matrix({rows}x{},p={p},r={r})", 1usize << depth),
        )
    }

    /// `f ↦ Σ_j ⟨f, w_j⟩ u_j` with `⟨f, w⟩ = ∫ f w dμ`, stored densely.
    pub fn finite_rank(
        p: f64,
        r: f64,
        depth: u32,
        functionals: &[DyadicFunction],
        vectors: &[Vec<f64>],
    ) -> Result<Self> {
        if functionals.len() != vectors.len() {
            return Err(invalid("vectors", "one target vector per functional"));
        }
        let rows = vectors.first().map_or(1, Vec::len);
        if vectors.iter().any(|u| u.len() != rows) {
            return Err(invalid("vectors", "target vectors differ in length"));
        }
        let cols = 1usize << depth;
        let mut matrix = vec![0.0; rows * cols];
        for (w, u) in functionals.iter().zip(vectors) {
            if w.depth() > depth {
                return Err(Error::DepthMismatch {
                    input: w.depth(),
                    operator: depth,
                });
            }
            // ⟨h̄_n, w⟩ for every n at once: the Haar coefficients of w scaled by ‖h̄_n‖_2^2
            let cw = haar::analyze(&w.refine(depth)?);
            for (j, &c) in cw.as_slice().iter().enumerate() {
                let pairing = c * (-(level_of_position(j) as f64)).exp2();
                for (i, &ui) in u.iter().enumerate() {
                    matrix[i * cols + j] += ui * pairing;
                }
            }
        }
        let mut op = Self::dense(p, r, depth, rows, matrix)?;
        op.label = format!("finite_rank(k={},p={p},r={r},D={depth})", functionals.len());
        Ok(op)
    }

    pub fn zero(p: f64, target: TargetSpace, depth: u32) -> Result<Self> {
        Self::build(
            p,
            depth,
            target,
            OperatorKind::Zero,
            format!("zero(p={p},D={depth})"),
        )
    }

    /// `P_s T`: keeps only the first `s` target coordinates.
    pub fn head_projection(&self, s: usize) -> Result<Self> {
        if s > self.target.dim() {
            return Err(invalid(
                "s",
                format!("cutoff {s} exceeds target dimension {}", self.target.dim()),
            ));
        }
        let mut out = self.clone();
        out.head = Some(self.head.map_or(s, |h| h.min(s)));
        out.label = format!("P_{s}({})", self.label);
        Ok(out)
    }

    pub fn source_p(&self) -> f64 {
        self.source_p
    }

    pub fn source_depth(&self) -> u32 {
        self.source_depth
    }

    pub fn target(&self) -> &TargetSpace {
        &self.target
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    pub fn head(&self) -> Option<usize> {
        self.head
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Number of coordinates that can be nonzero after the head projection.
    pub fn effective_dim(&self) -> usize {
        self.head.unwrap_or(usize::MAX).min(self.target.dim())
    }

    /// Norm of a target vector.
    pub fn target_norm(&self, coords: &[f64]) -> f64 {
        self.target.norm(coords)
    }

    fn refined(&self, f: &DyadicFunction) -> Result<DyadicFunction> {
        if f.depth() > self.source_depth {
            return Err(Error::DepthMismatch {
                input: f.depth(),
                operator: self.source_depth,
            });
        }
        f.refine(self.source_depth)
    }

    /// Image coordinates of `f`.
    pub fn apply(&self, f: &DyadicFunction) -> Result<Vec<f64>> {
        let f = self.refined(f)?;
        let mut out = match &self.kind {
            OperatorKind::Inclusion => f.into_values(),
            OperatorKind::CondExp { coarse } => block_means(f.values(), self.source_depth, *coarse),
            OperatorKind::Zero => vec![0.0; self.target.dim()],
            _ => return self.apply_coefficients(&haar::analyze(&f)),
        };
        self.project(&mut out);
        Ok(out)
    }

    /// Image coordinates of the function with the given Haar coefficients.
    pub fn apply_coefficients(&self, c: &HaarCoefficients) -> Result<Vec<f64>> {
        if c.depth() > self.source_depth {
            return Err(Error::DepthMismatch {
                input: c.depth(),
                operator: self.source_depth,
            });
        }
        let c = c.as_slice();
        let mut out = match &self.kind {
            OperatorKind::Dense { rows, matrix } => {
                let cols = 1usize << self.source_depth;
                (0..*rows)
                    .map(|i| {
                        let row = &matrix[i * cols..i * cols + c.len()];
                        row.iter().zip(c).map(|(a, b)| a * b).sum()
                    })
                    .collect()
            }
            OperatorKind::Diagonal { diag } => {
                let mut v = vec![0.0; diag.len()];
                for (i, &ci) in c.iter().enumerate() {
                    v[i] = diag[i] * ci;
                }
                v
            }
            OperatorKind::L2Iso => {
                let mut v = vec![0.0; 1usize << self.source_depth];
                for (i, &ci) in c.iter().enumerate() {
                    v[i] = ci * (-(level_of_position(i) as f64) / 2.0).exp2();
                }
                v
            }
            OperatorKind::Zero => vec![0.0; self.target.dim()],
            OperatorKind::Inclusion | OperatorKind::CondExp { .. } => {
                let coeffs = HaarCoefficients::new(c.len().trailing_zeros(), c.to_vec())?;
                return self.apply(&haar::synthesize(&coeffs));
            }
        };
        self.project(&mut out);
        Ok(out)
    }

    /// `‖T f‖`.
    pub fn image_norm(&self, f: &DyadicFunction) -> Result<f64> {
        Ok(self.target_norm(&self.apply(f)?))
    }

    /// Image of the indicator of atom `atom` at depth `depth <= D`.
    pub fn atom_image(&self, atom: usize, depth: u32) -> Result<Vec<f64>> {
        if depth > self.source_depth {
            return Err(Error::DepthMismatch {
                input: depth,
                operator: self.source_depth,
            });
        }
        let sparse = || haar::atom_coefficients(atom, depth);
        let mut out = match &self.kind {
            OperatorKind::Dense { rows, matrix } => {
                let cols = 1usize << self.source_depth;
                let coeffs: Vec<_> = sparse().collect();
                (0..*rows)
                    .map(|i| coeffs.iter().map(|&(j, v)| matrix[i * cols + j] * v).sum())
                    .collect()
            }
            OperatorKind::Diagonal { diag } => {
                let mut out = vec![0.0; diag.len()];
                for (j, v) in sparse() {
                    out[j] = diag[j] * v;
                }
                out
            }
            OperatorKind::L2Iso => {
                let mut out = vec![0.0; 1usize << self.source_depth];
                for (j, v) in sparse() {
                    out[j] = v * (-(level_of_position(j) as f64) / 2.0).exp2();
                }
                out
            }
            _ => {
                let e = DyadicFunction::from_fn(depth, |k| if k == atom { 1.0 } else { 0.0 });
                return self.apply(&e);
            }
        };
        self.project(&mut out);
        Ok(out)
    }

    fn project(&self, out: &mut [f64]) {
        if let Some(s) = self.head {
            if s < out.len() {
                out[s..].fill(0.0);
            }
        }
    }

    /// Upper bound on `‖T‖` that holds at every depth.
    fn norm_upper_bound(&self) -> f64 {
        let p = self.source_p;
        let r = self.target.r();
        let d = self.source_depth as f64;
        match &self.kind {
            OperatorKind::Zero => 0.0,
            OperatorKind::CondExp { .. } => 1.0,
            // ‖f‖_r / ‖f‖_p is maximized on a single atom at finite depth
            OperatorKind::Inclusion => {
                if r <= p {
                    1.0
                } else {
                    (d * (1.0 / p - 1.0 / r)).exp2()
                }
            }
            OperatorKind::L2Iso => {
                if p >= 2.0 {
                    1.0
                } else {
                    (d * (1.0 / p - 0.5)).exp2()
                }
            }
            OperatorKind::Diagonal { diag } => {
                let amax = diag
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v.abs() * lp_scale(level_of_position(i), p))
                    .fold(0.0_f64, f64::max);
                let crude = 2.0
                    * diag
                        .iter()
                        .enumerate()
                        .map(|(i, v)| v.abs() * lp_scale(level_of_position(i), p))
                        .sum::<f64>();
                if r >= p.max(2.0) {
                    // Burkholder's unconditional constant p* - 1 for the Haar
                    // martingale, then ℓ_r ⊆ ℓ_max(p,2)
                    let pstar = p.max(p / (p - 1.0));
                    ((pstar - 1.0) * amax).min(crude)
                } else {
                    crude
                }
            }
            OperatorKind::Dense { rows, matrix } => {
                // ‖x‖_p = 1 forces |β_n| <= 2 in the L_p-normalized Haar basis
                let cols = 1usize << self.source_depth;
                let rows_eff = (*rows).min(self.effective_dim());
                let mut total = 0.0;
                let mut col = vec![0.0; rows_eff];
                for j in 0..cols {
                    for (i, c) in col.iter_mut().enumerate() {
                        *c = matrix[i * cols + j];
                    }
                    total += self.target_norm(&col) * lp_scale(level_of_position(j), p);
                }
                2.0 * total
            }
        }
    }

    /// Probe-based norm interval: the lower end is the best ratio
    /// `‖T f‖ / ‖f‖_p` over Haar functions, Rademacher functions and random
    /// probes; the upper end is a structural bound.
    pub fn estimate_norm<R: Rng + ?Sized>(&self, trials: usize, rng: &mut R) -> Result<NormEstimate> {
        let d = self.source_depth;
        let p = self.source_p;
        let mut lower = 0.0_f64;
        let haar_probes = (1usize << d).min(64);
        if let OperatorKind::Diagonal { diag } = &self.kind {
            // h̄_n goes to diag[n-1] e_(n-1) and has norm 2^(-m/p), no need to apply
            let visible = self.head.unwrap_or(usize::MAX).min(diag.len()).min(haar_probes);
            for (i, a) in diag[..visible].iter().enumerate() {
                lower = lower.max(a.abs() * lp_scale(level_of_position(i), p));
            }
        }
        let ratio = |f: &DyadicFunction| -> Result<f64> {
            let nf = f.lp_norm(p)?;
            Ok(if nf > 0.0 { self.image_norm(f)? / nf } else { 0.0 })
        };
        if !matches!(self.kind, OperatorKind::Diagonal { .. }) {
            for n in 1..=haar_probes {
                lower = lower.max(ratio(&haar::linf_haar(haar::HaarIndex::new(n)?, d)?)?);
            }
        }
        lower = lower.max(ratio(&DyadicFunction::from_fn(d, |k| {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        }))?);
        for m in 0..d.min(12) {
            match &self.kind {
                OperatorKind::Diagonal { diag } => {
                    // r_m has unit h̄-coefficients on level m and unit norm
                    let mut c = HaarCoefficients::zeros(d);
                    c.as_mut_slice()[1usize << m..2usize << m].fill(1.0);
                    let image = self.apply_coefficients(&c)?;
                    debug_assert_eq!(image.len(), diag.len());
                    lower = lower.max(self.target_norm(&image));
                }
                _ => lower = lower.max(ratio(&haar::rademacher(m, d)?)?),
            }
        }
        for t in 0..trials {
            let f = if t % 2 == 0 {
                DyadicFunction::from_fn(d, |_| rng.gen_range(-1.0..=1.0))
            } else {
                DyadicFunction::from_fn(d, |_| if rng.gen::<bool>() { 1.0 } else { -1.0 })
            };
            lower = lower.max(ratio(&f)?);
        }
        if p == 2.0 && self.target.r() == 2.0 && d <= 10 {
            lower = lower.max(self.power_iteration(200)?);
        }
        let upper = self.norm_upper_bound().max(lower);
        Ok(NormEstimate { lower, upper })
    }

    /// Largest singular value for `p = r = 2` in the orthonormal Haar basis,
    /// as the achieved ratio of the final power-iteration vector.
    fn power_iteration(&self, iters: usize) -> Result<f64> {
        let d = self.source_depth;
        let size = 1usize << d;
        let mut columns = Vec::with_capacity(size);
        for i in 0..size {
            let mut c = HaarCoefficients::zeros(d);
            c.as_mut_slice()[i] = lp_scale(level_of_position(i), 2.0);
            columns.push(self.apply_coefficients(&c)?);
        }
        let weight = match self.target {
            TargetSpace::Sequence { .. } => 1.0,
            TargetSpace::Function { depth, .. } => (-(depth as f64)).exp2(),
        };
        let mut x = vec![1.0 / (size as f64).sqrt(); size];
        let mut ratio = 0.0;
        for _ in 0..iters {
            let dim = columns[0].len();
            let mut y = vec![0.0; dim];
            for (col, &xi) in columns.iter().zip(&x) {
                for (yk, ck) in y.iter_mut().zip(col) {
                    *yk += ck * xi;
                }
            }
            let ynorm = (y.iter().map(|v| v * v).sum::<f64>() * weight).sqrt();
            let xnorm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            ratio = f64::max(ratio, ynorm / xnorm);
            let mut z: Vec<f64> = columns
                .iter()
                .map(|col| col.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() * weight)
                .collect();
            let zn = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if zn == 0.0 {
                break;
            }
            z.iter_mut().for_each(|v| *v /= zn);
            x = z;
        }
        Ok(ratio)
    }
}

fn block_means(values: &[f64], depth: u32, coarse: u32) -> Vec<f64> {
    let width = 1usize << (depth - coarse);
    values
        .chunks_exact(width)
        .map(|c| c.iter().sum::<f64>() / width as f64)
        .collect()
}

/// On-disk description of an operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatorSpec {
    pub kind: SpecKind,
    pub p: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub depth: u32,
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub params: serde_json::Value,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecKind {
    SPr,
    Inclusion,
    L2Iso,
    CondExp,
    DiagBlocked,
    Matrix,
    Zero,
}

impl OperatorSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Builds the operator; relative matrix file paths resolve against `base`.
    pub fn build(&self, base: Option<&Path>) -> Result<LinearOperator> {
        let p = self.p;
        let r = self.r.unwrap_or(p);
        let d = self.depth;
        match self.kind {
            SpecKind::SPr => LinearOperator::s_pr(p, r, d),
            SpecKind::Inclusion => LinearOperator::inclusion(p, r, d),
            SpecKind::L2Iso => LinearOperator::l2_iso_composition(p, d),
            SpecKind::CondExp => {
                let coarse = self
                    .params
                    .get("coarse_depth")
                    .and_then(serde_json::Value::as_u64)
                    .ok_or_else(|| invalid("params", "cond_exp needs params.coarse_depth"))?;
                let coarse =
                    u32::try_from(coarse).map_err(|_| invalid("params", "coarse_depth out of range"))?;
                LinearOperator::conditional_expectation(p, coarse, d)
            }
            SpecKind::DiagBlocked => {
                let a: Vec<f64> =
                    serde_json::from_value(self.params.get("a").cloned().unwrap_or_default())
                        .map_err(|e| invalid("params", format!("diag_blocked needs params.a: {e}")))?;
                LinearOperator::diagonal_blocked(&a, p, r, d)
            }
            SpecKind::Matrix => {
                let (rows, data) = if let Some(file) = self.params.get("file").and_then(|v| v.as_str()) {
                    let path = base.map_or_else(|| Path::new(file).to_path_buf(), |b| b.join(file));
                    let (rows, cols, data) = read_matrix(std::fs::File::open(path)?)?;
                    if cols != 1usize << d {
                        return Err(Error::Format(format!(
                            "matrix file has {cols} columns, depth {d} needs {}",
                            1usize << d
                        )));
                    }
                    (rows, data)
                } else {
                    let rows: Vec<Vec<f64>> =
                        serde_json::from_value(self.params.get("rows").cloned().unwrap_or_default())
                            .map_err(|e| {
                                invalid("params", format!("matrix needs params.rows or params.file: {e}"))
                            })?;
                    (rows.len(), rows.into_iter().flatten().collect())
                };
                LinearOperator::dense(p, r, d, rows, data)
            }
            SpecKind::Zero => {
                let dim = self
                    .params
                    .get("dim")
                    .and_then(serde_json::Value::as_u64)
                    .map_or(1usize << d, |v| v as usize);
                LinearOperator::zero(p, TargetSpace::Sequence { dim, r }, d)
            }
        }
    }
}

const MATRIX_MAGIC: &[u8; 8] = b"NLABMX01";

/// Writes a dense matrix: magic `NLABMX01`, little-endian `u32` rows and
/// columns, then row-major little-endian `f64` entries.
pub fn write_matrix<W: Write>(rows: usize, cols: usize, data: &[f64], mut out: W) -> Result<()> {
    if data.len() != rows * cols {
        return Err(Error::Format("matrix data does not match its shape".into()));
    }
    let dim = |v: usize| u32::try_from(v).map_err(|_| Error::Format("matrix too large".into()));
    out.write_all(MATRIX_MAGIC)?;
    out.write_all(&dim(rows)?.to_le_bytes())?;
    out.write_all(&dim(cols)?.to_le_bytes())?;
    for v in data {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Reads `(rows, cols, data)` written by [`write_matrix`].
pub fn read_matrix<R: Read>(mut input: R) -> Result<(usize, usize, Vec<f64>)> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::Format("bad magic; expected NLABMX01".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let rows = u32::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let cols = u32::from_le_bytes(word) as usize;
    let mut buf = vec![0u8; rows * cols * 8];
    input.read_exact(&mut buf)?;
    let data = buf
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    Ok((rows, cols, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{lp_haar, rademacher, HaarIndex};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn s_pr_maps_haar_to_unit_vectors() {
        let t = LinearOperator::s_pr(3.0, 2.0, 6).unwrap();
        for n in 1..=64 {
            let image = t
                .apply(&lp_haar(HaarIndex::new(n).unwrap(), 3.0, 6).unwrap())
                .unwrap();
            for (i, v) in image.iter().enumerate() {
                let expected = if i == n - 1 { 1.0 } else { 0.0 };
                assert!((v - expected).abs() < 1e-12, "n={n} i={i} v={v}");
            }
        }
    }

    #[test]
    fn s_pr_on_rademacher() {
        for (p, r) in [(3.0, 3.0), (1.5, 2.0), (2.0, 4.0)] {
            let t = LinearOperator::s_pr(p, r, 8).unwrap();
            for m in 0..6 {
                let got = t.image_norm(&rademacher(m, 8).unwrap()).unwrap();
                let want = (m as f64 / r - m as f64 / p).exp2();
                assert!(close(got, want, 1e-12), "p={p} r={r} m={m}");
            }
        }
    }

    #[test]
    fn zero_and_inclusion() {
        let z = LinearOperator::zero(2.0, TargetSpace::Sequence { dim: 5, r: 2.0 }, 4).unwrap();
        let f = DyadicFunction::from_fn(4, |k| k as f64);
        assert_eq!(z.apply(&f).unwrap(), vec![0.0; 5]);
        let j = LinearOperator::inclusion(3.0, 1.0, 4).unwrap();
        let one = DyadicFunction::constant(2, 1.0);
        assert_eq!(j.apply(&one).unwrap(), vec![1.0; 16]);
        assert_eq!(j.image_norm(&one).unwrap(), 1.0);
    }

    #[test]
    fn inclusion_of_signs() {
        let j = LinearOperator::inclusion(3.0, 1.5, 5).unwrap();
        let x = DyadicFunction::from_fn(5, |k| match k % 4 {
            0 => 1.0,
            1 => -1.0,
            _ => 0.0,
        });
        assert!(close(j.image_norm(&x).unwrap(), 0.5f64.powf(1.0 / 1.5), 1e-14));
    }

    #[test]
    fn l2_iso_is_parseval() {
        let t = LinearOperator::l2_iso_composition(3.0, 6).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let f = DyadicFunction::from_fn(6, |_| rng.gen_range(-2.0..2.0));
            assert!(close(t.image_norm(&f).unwrap(), f.lp_norm(2.0).unwrap(), 1e-12));
        }
    }

    #[test]
    fn conditional_expectation_examples() {
        let e0 = LinearOperator::conditional_expectation(2.0, 0, 3).unwrap();
        let f = DyadicFunction::from_fn(3, |k| k as f64);
        assert_eq!(e0.apply(&f).unwrap(), vec![3.5]);
        let ed = LinearOperator::conditional_expectation(2.0, 3, 3).unwrap();
        assert_eq!(ed.apply(&f).unwrap(), f.values());
        let e1 = LinearOperator::conditional_expectation(2.0, 1, 2).unwrap();
        let g = DyadicFunction::new(2, vec![1.0, -1.0, 1.0, 1.0]).unwrap();
        assert_eq!(e1.apply(&g).unwrap(), vec![0.0, 1.0]);
        assert!(LinearOperator::conditional_expectation(2.0, 4, 3).is_err());
    }

    #[test]
    fn diagonal_blocked_examples() {
        let z = LinearOperator::diagonal_blocked(&[], 2.0, 2.0, 4).unwrap();
        let f = DyadicFunction::from_fn(4, |k| (k * k) as f64);
        assert!(z.apply(&f).unwrap().iter().all(|&v| v == 0.0));
        let e2 = LinearOperator::diagonal_blocked(&[0.0, 1.0], 3.0, 2.0, 4).unwrap();
        let image = e2.apply(&f).unwrap();
        assert!(image[2..].iter().all(|&v| v == 0.0));
        assert_eq!(image[0], 0.0);
    }

    #[test]
    fn head_projection_composes() {
        let t = LinearOperator::s_pr(2.0, 2.0, 4).unwrap();
        let f = DyadicFunction::from_fn(4, |k| (k as f64).sin());
        assert_eq!(
            t.head_projection(16).unwrap().apply(&f).unwrap(),
            t.apply(&f).unwrap()
        );
        assert!(t
            .head_projection(0)
            .unwrap()
            .apply(&f)
            .unwrap()
            .iter()
            .all(|&v| v == 0.0));
        let a = t.head_projection(9).unwrap().head_projection(5).unwrap();
        let b = t.head_projection(5).unwrap();
        assert_eq!(a.apply(&f).unwrap(), b.apply(&f).unwrap());
        assert!(t.head_projection(17).is_err());
    }

    #[test]
    fn depth_mismatch_rejected() {
        let t = LinearOperator::s_pr(2.0, 2.0, 3).unwrap();
        assert!(matches!(
            t.apply(&DyadicFunction::zeros(4)),
            Err(Error::DepthMismatch {
                input: 4,
                operator: 3
            })
        ));
        // coarser inputs are refined
        assert!(t.apply(&DyadicFunction::constant(1, 1.0)).is_ok());
    }

    #[test]
    fn atom_images_agree_with_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w: Vec<_> = (0..2)
            .map(|_| DyadicFunction::from_fn(5, |_| rng.gen_range(-1.0..1.0)))
            .collect();
        let u = vec![vec![1.0, 2.0, 0.5], vec![-1.0, 0.0, 3.0]];
        let t = LinearOperator::finite_rank(2.0, 2.0, 5, &w, &u).unwrap();
        for depth in [2, 5] {
            for atom in 0..(1usize << depth) {
                let e = DyadicFunction::from_fn(depth, |k| if k == atom { 1.0 } else { 0.0 });
                let a = t.atom_image(atom, depth).unwrap();
                let b = t.apply(&e).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    assert!((x - y).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn finite_rank_pairs_functionals() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = DyadicFunction::from_fn(4, |_| rng.gen_range(-1.0..1.0));
        let f = DyadicFunction::from_fn(4, |_| rng.gen_range(-1.0..1.0));
        let t = LinearOperator::finite_rank(2.0, 2.0, 4, std::slice::from_ref(&w), &[vec![1.0]]).unwrap();
        let direct = f.times(&w).mean();
        assert!((t.apply(&f).unwrap()[0] - direct).abs() < 1e-14);
    }

    #[test]
    fn norm_estimates_bracket_known_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let l2 = LinearOperator::l2_iso_composition(2.0, 6).unwrap();
        let est = l2.estimate_norm(10, &mut rng).unwrap();
        assert!(close(est.lower, 1.0, 1e-9) && est.upper >= 1.0 - 1e-12);
        let s = LinearOperator::s_pr(3.0, 3.0, 6).unwrap();
        let est = s.estimate_norm(10, &mut rng).unwrap();
        assert!(est.lower >= 1.0 - 1e-12 && est.upper <= 2.0 + 1e-12);
        let e = LinearOperator::conditional_expectation(1.5, 2, 6).unwrap();
        let est = e.estimate_norm(10, &mut rng).unwrap();
        assert!(close(est.lower, 1.0, 1e-12) && est.upper == 1.0);
    }

    #[test]
    fn spec_round_trip() {
        let text = r#"{"kind":"cond_exp","p":1.5,"depth":6,"params":{"coarse_depth":2}}"#;
        let spec = OperatorSpec::from_json(text).unwrap();
        let t = spec.build(None).unwrap();
        assert_eq!(t.target().dim(), 4);
        assert_eq!(t.target().r(), 1.5);
        let m = r#"{"kind":"matrix","p":2,"r":2,"depth":1,"params":{"rows":[[1,0],[0,2]]}}"#;
        let t = OperatorSpec::from_json(m).unwrap().build(None).unwrap();
        let f = DyadicFunction::new(1, vec![3.0, 1.0]).unwrap();
        assert_eq!(t.apply(&f).unwrap(), vec![2.0, 2.0]);
        assert!(OperatorSpec::from_json(r#"{"kind":"bogus","p":2,"depth":1}"#).is_err());
    }

    #[test]
    fn matrix_file_round_trip() {
        let data = vec![1.0, -2.0, 0.5, 4.0, 0.0, 1e-3];
        let mut buf = Vec::new();
        write_matrix(2, 3, &data, &mut buf).unwrap();
        assert_eq!(&buf[..8], b"NLABMX01");
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), (2, 3, data));
    }
}
