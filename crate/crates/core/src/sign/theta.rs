//! Sign choices `θ_α = ±1` that keep `‖Σ θ_α v_α‖` within the type-`p` bound.

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Relative rounding allowance when comparing against the bound.
const ROUNDING: f64 = 1e-12;

fn combine(vectors: &[Vec<f64>], theta: &[f64], out: &mut [f64]) {
    out.fill(0.0);
    for (v, &t) in vectors.iter().zip(theta) {
        for (o, x) in out.iter_mut().zip(v) {
            *o += t * x;
        }
    }
}

/// `(1 + slack) K (Σ ‖v_α‖^p)^(1/p)`.
pub fn theta_bound(vectors: &[Vec<f64>], norm: &dyn Fn(&[f64]) -> f64, p: f64, k: f64, slack: f64) -> f64 {
    let sum: f64 = vectors.iter().map(|v| norm(v).powf(p)).sum();
    (1.0 + slack) * k * sum.powf(1.0 / p)
}

/// Finds `θ ∈ {-1, 1}^n`, `θ_1 = 1`, with
/// `‖Σ θ_α v_α‖ <= (1 + slack) K (Σ ‖v_α‖^p)^(1/p)`.
///
/// Uniform resampling for the first half of `max_tries`, then greedy single
/// flips from the best candidate seen.
pub fn theta_selection<R: Rng + ?Sized>(
    vectors: &[Vec<f64>],
    norm: &dyn Fn(&[f64]) -> f64,
    p: f64,
    k: f64,
    slack: f64,
    rng: &mut R,
    max_tries: usize,
) -> Result<Vec<f64>> {
    if vectors.is_empty() {
        return Ok(Vec::new());
    }
    if !(p >= 1.0) || !(k > 0.0) || !(slack >= 0.0) {
        return Err(invalid(
            "p",
            format!("need p >= 1, K > 0, slack >= 0 (got {p}, {k}, {slack})"),
        ));
    }
    let dim = vectors[0].len();
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(invalid("vectors", "vectors differ in length"));
    }
    let bound = theta_bound(vectors, norm, p, k, slack);
    let limit = bound * (1.0 + ROUNDING);
    let mut buf = vec![0.0; dim];
    let eval = |theta: &[f64], buf: &mut [f64]| {
        combine(vectors, theta, buf);
        norm(buf)
    };

    let n = vectors.len();
    let mut best = vec![1.0; n];
    let mut best_norm = f64::INFINITY;
    let random_tries = max_tries / 2;
    let mut theta = vec![1.0; n];
    for _ in 0..random_tries.max(1) {
        for t in theta.iter_mut().skip(1) {
            *t = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        }
        let value = eval(&theta, &mut buf);
        if value < best_norm {
            best_norm = value;
            best.copy_from_slice(&theta);
        }
        if value <= limit {
            return Ok(theta);
        }
    }

    let mut tries = random_tries.max(1);
    let mut improved = true;
    while improved && tries < max_tries {
        improved = false;
        for i in 1..n {
            if tries >= max_tries {
                break;
            }
            best[i] = -best[i];
            tries += 1;
            let value = eval(&best, &mut buf);
            if value < best_norm {
                best_norm = value;
                improved = true;
                if value <= limit {
                    return Ok(best);
                }
            } else {
                best[i] = -best[i];
            }
        }
    }
    Err(Error::SearchFailure {
        tries,
        best: best_norm,
        bound,
    })
}
