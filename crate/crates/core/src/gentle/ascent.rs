//! Ascent inside `K_ε = { y : ‖y‖_∞ <= 1, ‖Ty‖ <= ε‖y‖_p }` towards a function
//! close to a sign.
//!
//! Each step moves `y` to `y ± ηh` on the band `B = { η <= |y| <= 1 - η }`,
//! which raises `‖y‖_p^p` by a definite margin while keeping the image small.
//! Since `‖y‖_p` is bounded, the band must eventually be too small to matter,
//! and `y` then rounds to a sign with a small image.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::band::band_perturbation;
use super::inequalities::gentle_constant;
use super::witness::gentle_witness;
use super::GentleFunction;
use crate::dyadic::{DyadicFunction, DyadicSet, SignWitness};
use crate::error::{invalid, Error, Result};
use crate::operators::LinearOperator;

/// Steps are accepted when they gain at least this fraction of the margin.
const ACCEPT_FRACTION: f64 = 0.9;
const DELTA_FRACTION: f64 = 1e-6;

#[derive(Clone, Debug, Serialize)]
pub struct AscentConfig {
    pub eps: f64,
    /// Target closeness `‖x - y‖_p < eps1 ‖y‖_p` of the rounded sign.
    pub eps1: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl AscentConfig {
    /// `eps1 = eps / (2 eps + 2)`, the closeness that turns `‖Ty‖ <= eps‖y‖`
    /// into a bound for the rounded sign.
    pub fn new(eps: f64, seed: u64) -> Self {
        Self {
            eps,
            eps1: eps / (2.0 * eps + 2.0),
            max_iters: 64,
            seed,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub lambda: f64,
    pub eta: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub mu_b: f64,
    pub margin: f64,
    pub norm_y_p: f64,
    #[serde(rename = "norm_Ty")]
    pub norm_ty: f64,
    pub accepted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AscentResult {
    /// `y` rounded: zero where `|y| <= 1/2`, `sign(y)` elsewhere.
    pub sign: SignWitness,
    /// `‖T sign‖ / ‖sign‖_p`.
    pub ratio: f64,
    #[serde(skip)]
    pub y: DyadicFunction,
    pub lambda: f64,
    pub iterations: usize,
    pub accepted: usize,
    /// Whether `‖sign - y‖_p < eps1 ‖y‖_p` was reached.
    pub close: bool,
    pub stop: String,
    /// Per accepted step, `(‖z‖_p^p - ‖y‖_p^p, margin)`.
    pub increments: Vec<(f64, f64)>,
    pub trace: Vec<TraceRecord>,
}

impl AscentResult {
    /// The trace as JSON lines.
    pub fn trace_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.trace {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }
}

fn round_to_sign(y: &DyadicFunction) -> DyadicFunction {
    y.map(|v| if v.abs() <= 0.5 { 0.0 } else { v.signum() })
}

/// Smallest `M` on the grid `2^j` with `(1 - φ(M))^2 >= 1/2` and
/// `M^(2-p) φ(M)^p` below the allowance that keeps `y ± ηh` inside `K_ε`.
fn choose_m(
    gen: &GentleFunction,
    p: f64,
    eps: f64,
    eps1: f64,
    eta: f64,
    lambda: f64,
    mu_b: f64,
) -> Option<(f64, f64)> {
    (-8..=40).map(|j| (j as f64).exp2()).find_map(|m| {
        let phi = gen.phi(m);
        if (1.0 - phi).powi(2) < 0.5 {
            return None;
        }
        let margin =
            gentle_constant(p) * eta * eta / (1.0 - eta).powf(2.0 - p) * mu_b * (1.0 - phi).powi(2) / (m * m);
        let delta = DELTA_FRACTION * margin;
        let allowance = eps.powf(p) * p * (p - 1.0) / 16.0 * (eta / (1.0 - eta)).powf(2.0 - p)
            - delta * m * m * eps.powf(p) * (1.0 - (2.0 * eta).powf(p))
                / (eta.powf(p) * (2.0 * p - 2.0).exp2() * eps1.powf(p) * lambda.powf(p));
        (allowance >= 0.0 && m.powf(2.0 - p) * phi.powf(p) <= allowance).then_some((m, delta))
    })
}

/// Runs the ascent on `set` starting from a normalized gentle witness.
///
/// Fails with [`Error::AscentStalled`] when no starting point in `K_ε` is
/// found, or when iterations run out without any accepted step; the error
/// carries the best image ratio seen.
pub fn gentle_ascent(
    t: &LinearOperator,
    set: &DyadicSet,
    gen: &GentleFunction,
    config: &AscentConfig,
) -> Result<AscentResult> {
    let p = t.source_p();
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::InvalidExponent(p));
    }
    let AscentConfig {
        eps,
        eps1,
        max_iters,
        seed,
    } = *config;
    if !(eps > 0.0) || !(eps1 > 0.0) {
        return Err(invalid(
            "eps",
            format!("need eps > 0 and eps1 > 0, got {eps}, {eps1}"),
        ));
    }
    let depth = t.source_depth();
    let set = set.refine(depth.max(set.depth()))?;
    if set.depth() > depth {
        return Err(Error::DepthMismatch {
            input: set.depth(),
            operator: depth,
        });
    }
    let mu_a = set.measure();
    let scale = mu_a.powf(1.0 / p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let start = match gentle_witness(t, &set, 1.0, eps * scale, gen, &mut rng) {
        Ok(w) => w.x,
        Err(Error::WitnessFailure { best, .. }) => {
            return Err(Error::AscentStalled {
                iterations: 0,
                lambda: 0.0,
                best_ratio: best / scale,
            })
        }
        Err(e) => return Err(e),
    };
    let mut y = start.scaled(1.0 / start.sup_norm());
    let mut lambda = 0.0_f64;
    let mut trace = Vec::new();
    let mut increments = Vec::new();
    let mut accepted = 0;
    let mut iterations = 0;
    let mut close = false;
    let mut stop = String::from("iterations exhausted");

    while iterations < max_iters {
        let norm_y = y.lp_norm(p)?;
        lambda = lambda.max(norm_y);
        let x = round_to_sign(&y);
        if x.minus(&y).lp_norm(p)? < eps1 * norm_y {
            close = true;
            stop = "close to a sign".into();
            break;
        }
        let eta = eps1 * lambda / (4f64.powf(1.0 / p) * scale);
        let band = DyadicSet::from_mask_unchecked(
            depth,
            y.values()
                .iter()
                .enumerate()
                .map(|(i, &v)| set.contains(i) && v.abs() >= eta && v.abs() <= 1.0 - eta)
                .collect(),
        );
        if band.is_empty() {
            stop = "band empty".into();
            break;
        }
        let Some((m, delta)) = choose_m(gen, p, eps, eps1, eta, lambda, band.measure()) else {
            stop = "no admissible truncation level".into();
            break;
        };
        iterations += 1;
        let step = match band_perturbation(t, &y, &band, eta, m, delta, gen, &mut rng) {
            Ok(step) => step,
            Err(Error::WitnessFailure { .. }) => {
                trace.push(TraceRecord {
                    iter: iterations,
                    lambda,
                    eta,
                    m,
                    mu_b: band.measure(),
                    margin: 0.0,
                    norm_y_p: norm_y,
                    norm_ty: t.image_norm(&y)?,
                    accepted: false,
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        if step.level_sets == 0 {
            iterations -= 1;
            stop = "band too fine for witnesses".into();
            break;
        }
        let up = y.axpy(eta, &step.h);
        let down = y.axpy(-eta, &step.h);
        let (up_image, down_image) = (t.image_norm(&up)?, t.image_norm(&down)?);
        let (z, z_image) = if down_image < up_image {
            (down, down_image)
        } else {
            (up, up_image)
        };
        let gain = z.lp_norm_pow(p)? - y.lp_norm_pow(p)?;
        let ok = gain >= ACCEPT_FRACTION * step.margin && z_image <= eps * z.lp_norm(p)?;
        trace.push(TraceRecord {
            iter: iterations,
            lambda,
            eta,
            m,
            mu_b: step.used_measure,
            margin: step.margin,
            norm_y_p: norm_y,
            norm_ty: t.image_norm(&y)?,
            accepted: ok,
        });
        if ok {
            increments.push((gain, step.margin));
            accepted += 1;
            y = z;
        }
    }

    let x = round_to_sign(&y);
    let x_norm = x.lp_norm(p)?;
    let image = t.image_norm(&x)?;
    let ratio = if x_norm > 0.0 {
        image / x_norm
    } else {
        f64::INFINITY
    };
    if accepted == 0 && iterations > 0 && !close {
        return Err(Error::AscentStalled {
            iterations,
            lambda,
            best_ratio: ratio,
        });
    }
    Ok(AscentResult {
        sign: SignWitness::new(x, Some(image))?,
        ratio,
        y,
        lambda,
        iterations,
        accepted,
        close,
        stop,
        increments,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::TargetSpace;

    #[test]
    fn zero_operator_gives_sign_at_once() {
        let t = LinearOperator::zero(1.5, TargetSpace::Sequence { dim: 1, r: 2.0 }, 8).unwrap();
        let out = gentle_ascent(
            &t,
            &DyadicSet::full(8),
            &GentleFunction::SignBased,
            &AscentConfig::new(0.1, 0),
        )
        .unwrap();
        assert!(out.close);
        assert_eq!(out.ratio, 0.0);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.sign.mean(), 0.0);
    }

    #[test]
    fn isometry_stalls() {
        let t = LinearOperator::l2_iso_composition(1.5, 8).unwrap();
        let gen = GentleFunction::gaussian(1.5, 4).unwrap();
        let err = gentle_ascent(&t, &DyadicSet::full(8), &gen, &AscentConfig::new(0.1, 0)).unwrap_err();
        assert!(matches!(err, Error::AscentStalled { best_ratio, .. } if best_ratio >= 0.9));
    }
}
