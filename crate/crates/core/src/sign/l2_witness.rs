//! Unit vectors with small image inside spans of Rademacher blocks.

use serde::Serialize;

use crate::dyadic::DyadicFunction;
use crate::error::{Error, Result};
use crate::haar::rademacher;
use crate::linalg::{dot, smallest_eigenpair};
use crate::operators::LinearOperator;

#[derive(Clone, Debug, Serialize)]
pub struct L2Witness {
    /// `f = Σ_k a_k f_k` with `‖f‖_p = 1`.
    #[serde(skip)]
    pub f: DyadicFunction,
    /// Block coefficients `a_k`.
    pub block_coefficients: Vec<f64>,
    /// Rademacher coefficients `b_m = a_k / √M` for `m` in block `k`.
    pub b: Vec<f64>,
    /// `‖S f‖`.
    pub residual: f64,
    /// Smallest eigenvalue of the Gram form of `S` on the block span.
    pub eigenvalue: f64,
}

/// Minimizes `‖S Σ a_k f_k‖` over `‖Σ a_k f_k‖_2 = 1` with
/// `f_k = M^(-1/2) Σ_(m in σ_k) r_m` on consecutive level blocks `σ_k`, then
/// rescales the minimizer to `‖f‖_p = 1`.
pub fn l2_singular_witness(
    s: &LinearOperator,
    k_blocks: usize,
    m_size: usize,
    depth: u32,
) -> Result<L2Witness> {
    if k_blocks < 2 {
        return Err(Error::Underdetermined(format!(
            "need at least two blocks, got {k_blocks}"
        )));
    }
    if m_size == 0 {
        return Err(Error::Underdetermined("blocks must be nonempty".into()));
    }
    if k_blocks * m_size + 1 > depth as usize {
        return Err(Error::DepthInsufficient {
            needed: (k_blocks * m_size + 1) as u32,
            depth,
        });
    }
    if depth > s.source_depth() {
        return Err(Error::DepthMismatch {
            input: depth,
            operator: s.source_depth(),
        });
    }
    let norm = 1.0 / (m_size as f64).sqrt();
    let mut blocks = Vec::with_capacity(k_blocks);
    for k in 0..k_blocks {
        let mut f = DyadicFunction::zeros(depth);
        for m in k * m_size..(k + 1) * m_size {
            f = f.plus(&rademacher(m as u32, depth)?);
        }
        blocks.push(f.scaled(norm));
    }
    let images = blocks.iter().map(|f| s.apply(f)).collect::<Result<Vec<_>>>()?;
    let gram: Vec<Vec<f64>> = images
        .iter()
        .map(|a| images.iter().map(|b| dot(a, b)).collect())
        .collect();
    let (eigenvalue, mut a) = smallest_eigenpair(&gram, 200);
    if let Some(&first) = a.iter().find(|v| v.abs() > 1e-12) {
        if first < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
        }
    }
    let mut f = DyadicFunction::zeros(depth);
    for (fk, &ak) in blocks.iter().zip(&a) {
        f = f.axpy(ak, fk);
    }
    let fp = f.lp_norm(s.source_p())?;
    if !(fp > 0.0) {
        return Err(Error::Underdetermined("degenerate block combination".into()));
    }
    let f = f.scaled(1.0 / fp);
    a.iter_mut().for_each(|v| *v /= fp);
    let b = a
        .iter()
        .flat_map(|&ak| std::iter::repeat_n(ak * norm, m_size))
        .collect();
    let residual = s.image_norm(&f)?;
    Ok(L2Witness {
        f,
        block_coefficients: a,
        b,
        residual,
        eigenvalue,
    })
}
