//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! Every expected value here is recomputed from scratch (direct sums over
//! atoms, naive Haar pairings, closed forms, Monte Carlo, brute force) rather
//! than read back from the library.

use std::process::ExitCode;
use std::time::Instant;

use narrowlab::defect::narrowness_defect;
use narrowlab::dyadic::{DyadicFunction, DyadicSet};
use narrowlab::experiments::{self, random_level_set_case, StoptimeParams};
use narrowlab::gentle::{
    gentle_ascent, level_set_residual, rebalance_mean_zero, two_point_residual, type_p_residual,
    AscentConfig, GentleFunction,
};
use narrowlab::operators::{LinearOperator, TargetSpace};
use narrowlab::report::Report;
use narrowlab::sign::{blocked_operator, finite_rank_near_sign};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// pinned tolerances
const TWO_POINT_TOL: f64 = 1e-12;
const LEVEL_SET_TOL: f64 = 1e-10;
const TYPE_TOL: f64 = 1e-12;
const CLOSED_FORM_TOL: f64 = 1e-9;
const MEAN_TOL: f64 = 1e-12;
const MC_SAMPLES: usize = 1_000_000;
const MC_SIGMAS: f64 = 5.0;
const PROP52_TOL: f64 = 1e-9;
const REBALANCE_TOL: f64 = 1e-9;
const ACCEPT_FRACTION: f64 = 0.9;
const DEFECT_SLACK: f64 = 1e-6;
const CONTROL_RATIO: f64 = 0.9;
const RANK_ONE_TAIL: f64 = 0.01;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `(∫ |f|^p)^(1/p)` straight from the atom values.
fn lp(values: &[f64], depth: u32, p: f64) -> f64 {
    let w = (-(depth as f64)).exp2();
    (values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * w).powf(1.0 / p)
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Block averages of `values` over `2^coarse` equal blocks.
fn block_means(values: &[f64], coarse: u32) -> Vec<f64> {
    values.chunks(values.len() >> coarse).map(mean).collect()
}

fn seq_norm(v: &[f64], r: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(r)).sum::<f64>().powf(1.0 / r)
}

/// Coefficients of a sign against the `L_∞` Haar functions, by direct
/// pairing in integer arithmetic, as `(numerator, width)`.
fn naive_haar_exact(signs: &[i64]) -> Vec<(i64, usize)> {
    let size = signs.len();
    let mut out = vec![(signs.iter().sum(), size)];
    let mut width = size;
    while width >= 2 {
        for start in (0..size).step_by(width) {
            let half = width / 2;
            let left: i64 = signs[start..start + half].iter().sum();
            let right: i64 = signs[start + half..start + width].iter().sum();
            out.push((left - right, width));
        }
        width /= 2;
    }
    out
}

fn level(i: usize) -> u32 {
    if i == 0 {
        0
    } else {
        i.ilog2()
    }
}

fn ac1() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut p2 = 0.0_f64;
    let mut disagree = 0.0_f64;
    let mut r = rng(1);
    for p in [1.1, 1.25, 1.5, 1.75, 2.0] {
        let c = p * (p - 1.0) / 2f64.powf(3.0 - p);
        for a in [0.1, 1.0, 10.0_f64] {
            for _ in 0..10_000 {
                let b = r.gen_range(-a..=a);
                let res = two_point_residual(p, a, b).unwrap();
                let direct =
                    (a + b).powf(p) - p * a.powf(p - 1.0) * b - a.powf(p) - c * b * b / a.powf(2.0 - p);
                disagree = disagree.max((res - direct).abs() / a.powf(p).max(1.0));
                worst = worst.min(res);
                if p == 2.0 {
                    p2 = p2.max(res.abs());
                }
            }
        }
    }
    Outcome {
        passed: worst >= -TWO_POINT_TOL && p2 <= TWO_POINT_TOL && disagree <= 1e-12,
        detail: format!("min residual {worst:.3e}, p=2 max |residual| {p2:.3e}, vs direct {disagree:.1e} (tol {TWO_POINT_TOL:e})"),
    }
}

fn ac2() -> Outcome {
    let depth = 10;
    let mut worst = f64::INFINITY;
    let mut disagree = 0.0_f64;
    let mut r = rng(2);
    for p in [1.1, 1.5, 2.0] {
        let c = p * (p - 1.0) / 2f64.powf(3.0 - p);
        for _ in 0..1000 {
            let (a, set, y) = random_level_set_case(depth, &mut r);
            let res = level_set_residual(p, a, &set, &y).unwrap();
            let w = (-(depth as f64)).exp2();
            let mut lhs = 0.0;
            let mut l2 = 0.0;
            for (i, &v) in y.values().iter().enumerate() {
                if set.contains(i) {
                    lhs += (a + v).abs().powf(p) * w;
                    l2 += v * v * w;
                }
            }
            let direct = lhs - a.abs().powf(p) * set.measure() - c * l2 / a.abs().powf(2.0 - p);
            disagree = disagree.max((res - direct).abs() / a.abs().powf(p));
            worst = worst.min(res);
        }
    }
    Outcome {
        passed: worst >= -LEVEL_SET_TOL && disagree <= 1e-10,
        detail: format!("min residual {worst:.3e}, vs direct {disagree:.1e} (tol {LEVEL_SET_TOL:e})"),
    }
}

fn ac3() -> Outcome {
    let depth = 8;
    let mut worst = f64::INFINITY;
    let mut p2 = 0.0_f64;
    let mut r = rng(3);
    for p in [1.1, 1.25, 1.5, 1.75, 2.0] {
        for _ in 0..1000 {
            let u: Vec<f64> = (0..256).map(|_| r.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..256).map(|_| r.gen_range(-1.0..1.0)).collect();
            let res = type_p_residual(
                p,
                &DyadicFunction::new(depth, u.clone()).unwrap(),
                &DyadicFunction::new(depth, v.clone()).unwrap(),
            )
            .unwrap();
            let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
            let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
            let direct = lp(&u, depth, p).powf(p) + lp(&v, depth, p).powf(p)
                - 0.5 * (lp(&sum, depth, p).powf(p) + lp(&diff, depth, p).powf(p));
            worst = worst.min(res).min(direct);
            if p == 2.0 {
                p2 = p2.max(res.abs()).max(direct.abs());
            }
        }
    }
    Outcome {
        passed: worst >= -TYPE_TOL && p2 <= TYPE_TOL,
        detail: format!("min residual {worst:.3e}, parallelogram gap {p2:.3e} (tol {TYPE_TOL:e})"),
    }
}

fn stoptime(n: usize) -> Report {
    experiments::stoptime(&StoptimeParams {
        p: 3.0,
        r: 3.0,
        c: 4.0,
        n,
        coeffs: None,
        seed: 0,
        probe_trials: 8,
    })
    .unwrap()
}

fn measured(report: &Report, key: &str) -> f64 {
    report.measured[key].as_f64().unwrap()
}

/// Fraction of walks `(C/√N) Σ ε_j`, `N + 1` steps, whose running maximum of
/// `|sum|` stays at most one.
fn unstopped_monte_carlo(c: f64, n: usize, samples: usize, seed: u64) -> f64 {
    let step = c / (n as f64).sqrt();
    let mut r = rng(seed);
    let survived = (0..samples)
        .filter(|_| {
            let mut s = 0.0_f64;
            (0..=n).all(|_| {
                s += if r.gen::<bool>() { step } else { -step };
                s.abs() <= 1.0
            })
        })
        .count();
    survived as f64 / samples as f64
}

fn ac4() -> Outcome {
    let (c, n) = (4.0, 20);
    let report = stoptime(n);
    let sf = measured(&report, "norm_Sf");
    let sg = measured(&report, "norm_Sg");
    let sgt = measured(&report, "norm_Sg_tilde");
    let gap = measured(&report, "norm_g_minus_g_tilde");
    let upper = report.measured["norm_S_interval"][1].as_f64().unwrap();
    let unstopped = measured(&report, "unstopped_measure");
    let mean_gt = measured(&report, "mean_g_tilde");
    let closed = c / (n as f64).sqrt() * ((n + 1) as f64).powf(1.0 / 3.0);
    let mc = unstopped_monte_carlo(c, n, MC_SAMPLES, 4);
    let sigma = (mc.max(1.0 / MC_SAMPLES as f64) * (1.0 - mc) / MC_SAMPLES as f64).sqrt();
    let support_ok = report
        .checks
        .iter()
        .any(|k| k.name == "g_tilde_full_support" && k.passed);
    let passed = (sf - closed).abs() <= CLOSED_FORM_TOL
        && sg <= sf
        && sgt <= sg + 2.0 * gap * upper
        && mean_gt.abs() <= MEAN_TOL
        && support_ok
        && unstopped <= 0.5 / c + 0.05
        && (unstopped - mc).abs() <= MC_SIGMAS * sigma;
    Outcome {
        passed,
        detail: format!(
            "‖Sf‖ {sf:.10} vs {closed:.10}, ‖Sg‖ {sg:.4}, ‖Sg̃‖ {sgt:.4} <= {:.4}, mean {mean_gt:.1e}, \
             unstopped {unstopped:.6} vs MC {mc:.6} ± {:.1e}",
            sg + 2.0 * gap * upper,
            MC_SIGMAS * sigma
        ),
    }
}

fn ac5() -> Outcome {
    let c = 4.0_f64;
    let mut values = Vec::new();
    let mut bounded = true;
    for n in [8usize, 12, 16, 20] {
        let sgt = measured(&stoptime(n), "norm_Sg_tilde");
        let nf = n as f64;
        let bound = 2.0 * c * (nf + 1.0).powf(1.0 / 3.0) / nf.sqrt()
            + 2.0 * (c / nf.sqrt() + (0.5 / c).powf(1.0 / 3.0));
        bounded &= sgt <= bound;
        values.push(sgt);
    }
    let monotone = values.windows(2).all(|w| w[1] <= w[0]);
    Outcome {
        passed: monotone && bounded,
        detail: format!(
            "‖Sg̃‖ at N=8,12,16,20: {values:.4?}, nonincreasing {monotone}, under bound {bounded}"
        ),
    }
}

fn ac6() -> Outcome {
    let report = experiments::diagonal_growth(0.3, 3.0, 8).unwrap();
    let values: Vec<f64> = report.measured["norm_Sx_n"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    let exact = (1..=8).map(|n| 0.3 * (n as f64 / 6.0).exp2());
    let worst = values
        .iter()
        .zip(exact)
        .map(|(v, e)| (v - e).abs())
        .fold(0.0, f64::max);
    let growth = values
        .windows(2)
        .map(|w| (w[1] / w[0] - 2f64.powf(1.0 / 6.0)).abs())
        .fold(0.0, f64::max);
    Outcome {
        passed: values.len() == 8 && worst <= PROP52_TOL && growth <= PROP52_TOL,
        detail: format!(
            "max |‖Sx_n‖ - 0.3·2^(n/6)| {worst:.1e}, growth error {growth:.1e} (tol {PROP52_TOL:e})"
        ),
    }
}

/// Random rank-3 operator into `ℓ_2^3`, with its functionals kept for the oracle.
fn rank3(depth: u32, r: &mut ChaCha8Rng) -> (LinearOperator, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let ws: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..1usize << depth).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let us: Vec<Vec<f64>> = (0..3)
        .map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let fs: Vec<DyadicFunction> = ws
        .iter()
        .map(|w| DyadicFunction::new(depth, w.clone()).unwrap())
        .collect();
    (
        LinearOperator::finite_rank(2.0, 2.0, depth, &fs, &us).unwrap(),
        ws,
        us,
    )
}

fn apply_rank3(x: &[f64], ws: &[Vec<f64>], us: &[Vec<f64>]) -> Vec<f64> {
    let w = 1.0 / x.len() as f64;
    let mut out = vec![0.0; 3];
    for (wj, uj) in ws.iter().zip(us) {
        let pairing: f64 = x.iter().zip(wj).map(|(a, b)| a * b).sum::<f64>() * w;
        for (o, u) in out.iter_mut().zip(uj) {
            *o += pairing * u;
        }
    }
    out
}

fn max_atom_norm(size: usize, ws: &[Vec<f64>], us: &[Vec<f64>]) -> f64 {
    (0..size)
        .map(|i| {
            let mut e = vec![0.0; size];
            e[i] = 1.0;
            seq_norm(&apply_rank3(&e, ws, us), 2.0)
        })
        .fold(0.0, f64::max)
}

fn ac7() -> Outcome {
    let mut r = rng(7);
    let mut failures = 0;
    let mut worst_ratio = 0.0_f64;
    for _ in 0..100 {
        let (op, ws, us) = rank3(10, &mut r);
        let out = finite_rank_near_sign(&op, &DyadicSet::full(10), 10).unwrap();
        let x = out.witness.sign().values();
        let image = seq_norm(&apply_rank3(x, &ws, &us), 2.0);
        let bound = 4.0 * max_atom_norm(1024, &ws, &us);
        worst_ratio = worst_ratio.max(image / bound);
        if image > bound * (1.0 + 1e-12)
            || mean(x).abs() > 4.0 / 1024.0
            || !x.iter().all(|v| [-1.0, 0.0, 1.0].contains(v))
        {
            failures += 1;
        }
    }
    let mut worst_excess = f64::NEG_INFINITY;
    for _ in 0..5 {
        let (op, ws, us) = rank3(4, &mut r);
        let out = finite_rank_near_sign(&op, &DyadicSet::full(4), 4).unwrap();
        let image = seq_norm(&apply_rank3(out.witness.sign().values(), &ws, &us), 2.0);
        let bound = 4.0 * max_atom_norm(16, &ws, &us);
        let mut best = f64::INFINITY;
        for bits in 0u32..1 << 16 {
            let x: Vec<f64> = (0..16)
                .map(|i| if bits >> i & 1 == 1 { 1.0 } else { -1.0 })
                .collect();
            if mean(&x).abs() <= 4.0 / 16.0 {
                best = best.min(seq_norm(&apply_rank3(&x, &ws, &us), 2.0));
            }
        }
        worst_excess = worst_excess.max((image - best) / bound);
        if image - best > bound {
            failures += 1;
        }
    }
    Outcome {
        passed: failures == 0,
        detail: format!(
            "depth 10: worst ‖Fx‖/bound {worst_ratio:.3}; depth 4: worst (‖Fx‖ - optimum)/bound {worst_excess:.3}; failures {failures}"
        ),
    }
}

/// Union of random depth-6 atoms, refined to `depth`.
fn random_set(depth: u32, r: &mut ChaCha8Rng) -> DyadicSet {
    loop {
        let atoms: Vec<usize> = (0..64).filter(|_| r.gen_bool(0.3)).collect();
        if !atoms.is_empty() {
            return DyadicSet::from_atoms(6, &atoms).unwrap().refine(depth).unwrap();
        }
    }
}

fn ac8() -> Outcome {
    let (p, depth, coarse, m, eps) = (1.5, 12, 2, 2.0, 0.05);
    let gen = GentleFunction::gaussian(p, 4).unwrap();
    let phi = gen.phi(m);
    let ops = [
        LinearOperator::zero(p, TargetSpace::Sequence { dim: 1, r: 2.0 }, depth).unwrap(),
        LinearOperator::conditional_expectation(p, coarse, depth).unwrap(),
    ];
    let mut r = rng(8);
    let mut worst = [0.0_f64; 4];
    let mut failures = 0;
    let mut errors = Vec::new();
    for (k, op) in ops.iter().enumerate() {
        for _ in 0..20 {
            let set = random_set(depth, &mut r);
            let out = match rebalance_mean_zero(op, &set, m, eps, &gen, &mut r) {
                Ok(out) => out,
                Err(e) => {
                    failures += 1;
                    errors.push(e.to_string());
                    continue;
                }
            };
            let x = out.x.refine(depth).unwrap();
            let x = x.values();
            let scale = set.measure().powf(1.0 / p);
            let norm_gap = (lp(x, depth, p) - scale).abs();
            let tail: Vec<f64> = x.iter().map(|v| (v.abs() - m).max(0.0)).collect();
            let tail_excess = lp(&tail, depth, p) - phi * scale;
            let image = if k == 0 {
                0.0
            } else {
                lp(&block_means(x, coarse), coarse, p)
            };
            let mean_x = mean(x).abs();
            let outside = x.iter().enumerate().any(|(i, &v)| v != 0.0 && !set.contains(i));
            worst = [
                worst[0].max(norm_gap),
                worst[1].max(tail_excess),
                worst[2].max(image),
                worst[3].max(mean_x),
            ];
            if norm_gap > REBALANCE_TOL
                || tail_excess > REBALANCE_TOL
                || image > eps
                || mean_x > REBALANCE_TOL
                || outside
            {
                failures += 1;
            }
        }
    }
    Outcome {
        passed: failures == 0,
        detail: format!(
            "norm gap {:.1e}, tail - φ(M)μ^(1/p) {:.1e}, max ‖Tx‖ {:.1e} (eps {eps}), |mean| {:.1e}, failures {failures}{}",
            worst[0],
            worst[1],
            worst[2],
            worst[3],
            errors.first().map_or(String::new(), |e| format!(" ({e})"))
        ),
    }
}

fn ac9() -> Outcome {
    let (p, depth, coarse, eps) = (2.0, 12, 2, 0.1);
    let t = LinearOperator::conditional_expectation(p, coarse, depth).unwrap();
    let set = DyadicSet::full(depth);
    let gen = GentleFunction::gaussian(p, 4).unwrap();
    let config = AscentConfig::new(eps, 9);
    let out = match gentle_ascent(&t, &set, &gen, &config) {
        Ok(out) => out,
        Err(e) => {
            return Outcome {
                passed: false,
                detail: format!("ascent failed: {e}"),
            }
        }
    };
    let x = out.sign.sign().refine(depth).unwrap();
    let x = x.values();
    let is_sign = x.iter().all(|v| [-1.0, 0.0, 1.0].contains(v)) && x.iter().any(|&v| v != 0.0);
    let ratio = lp(&block_means(x, coarse), coarse, p) / lp(x, depth, p);
    let worst_step = out
        .increments
        .iter()
        .map(|&(g, m)| g / m)
        .fold(f64::INFINITY, f64::min);
    let steps_ok = out.increments.is_empty() || worst_step >= ACCEPT_FRACTION;
    let oracle = narrowness_defect(&t, &set, 32, 9).unwrap();
    let oracle_ok = oracle.ratio <= ratio + DEFECT_SLACK;

    let iso = LinearOperator::l2_iso_composition(p, depth).unwrap();
    let control = match gentle_ascent(&iso, &set, &gen, &config) {
        Err(narrowlab::Error::AscentStalled { best_ratio, .. }) => best_ratio,
        Ok(out) => -out.ratio,
        Err(_) => f64::NAN,
    };
    let iso_defect = narrowness_defect(&iso, &set, 32, 9).unwrap().ratio;
    let control_ok = control >= CONTROL_RATIO && (iso_defect - 1.0).abs() <= 1e-9;
    Outcome {
        passed: is_sign && ratio <= eps && steps_ok && oracle_ok && control_ok,
        detail: format!(
            "‖Tx‖/‖x‖ {ratio:.4} (eps {eps}), {} accepted steps, min gain/margin {worst_step:.3}, defect {:.4}; \
             control best ratio {control:.4}, control defect {iso_defect:.6}",
            out.accepted, oracle.ratio
        ),
    }
}

fn ac10() -> Outcome {
    let (p, depth, eps, levels) = (3.0, 10, 0.01, 6);
    let t = LinearOperator::s_pr(p, p, depth).unwrap();
    let out = match blocked_operator(&t, eps, levels) {
        Ok(out) => out,
        Err(e) => {
            return Outcome {
                passed: false,
                detail: format!("construction failed: {e}"),
            }
        }
    };
    // S_{p,p} sends h̄_n to 2^(-m/p) e_n, so coordinates are scaled Haar coefficients
    let mut bounds_ok = out.complete;
    let mut worst = 0.0_f64;
    for step in &out.steps {
        let h = out.v_map[step.n - 1].refine(depth).unwrap();
        let peak = h.sup_norm();
        let signs: Vec<i64> = h.values().iter().map(|&v| (v / peak).round() as i64).collect();
        let is_scaled_sign = h.values().iter().zip(&signs).all(|(&v, &s)| v == s as f64 * peak);
        bounds_ok &= is_scaled_sign;
        let outside: Vec<f64> = naive_haar_exact(&signs)
            .into_iter()
            .enumerate()
            .map(|(i, (num, width))| {
                if (i >= step.s_prev && i < step.s_n) || num == 0 {
                    0.0
                } else {
                    peak * num as f64 / width as f64 * (-(level(i) as f64) / p).exp2()
                }
            })
            .collect();
        let defect = seq_norm(&outside, p);
        let bound = eps / (step.n as f64).exp2();
        worst = worst.max(defect / bound);
        bounds_ok &= defect <= bound * (1.0 + 1e-9);
    }
    let mut tree_ok = out.tree.len() == levels as usize + 1;
    for (m, nodes) in out.tree.iter().enumerate() {
        tree_ok &= nodes.len() == 1 << m;
        for (k, node) in nodes.iter().enumerate() {
            let node = node.refine(depth).unwrap();
            tree_ok &= node.count() == 1 << (depth as usize - m);
            if let Some(next) = out.tree.get(m + 1) {
                let (l, r) = (
                    next[2 * k].refine(depth).unwrap(),
                    next[2 * k + 1].refine(depth).unwrap(),
                );
                tree_ok &= (0..1usize << depth).all(|i| node.contains(i) == (l.contains(i) ^ r.contains(i)));
            }
        }
    }

    let mut r = rng(10);
    let w = DyadicFunction::from_fn(depth, |_| r.gen_range(-1.0..1.0));
    let u: Vec<f64> = (0..16).map(|i| (-(i as f64)).exp2()).collect();
    let rank1 = LinearOperator::finite_rank(p, p, depth, &[w], &[u]).unwrap();
    let (rank1_ok, rank1_max) = match blocked_operator(&rank1, eps, levels) {
        Ok(b) => {
            let beyond = b
                .steps
                .iter()
                .filter(|s| s.s_prev > 0)
                .map(|s| b.a[s.n - 1])
                .fold(0.0, f64::max);
            (b.complete && beyond <= RANK_ONE_TAIL, beyond)
        }
        Err(_) => (false, f64::NAN),
    };
    Outcome {
        passed: bounds_ok && tree_ok && rank1_ok,
        detail: format!(
            "{} steps, worst defect/bound {worst:.3e}, tree exact {tree_ok}; rank one: max a_n beyond first block {rank1_max:.2e}",
            out.steps.len()
        ),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("two-point convexity inequality", ac1),
        ("level-set inequality", ac2),
        ("type-p inequality", ac3),
        ("stopping-time sign through S_{3,3}", ac4),
        ("decay of ‖Sg̃‖ in N", ac5),
        ("constant diagonal growth", ac6),
        ("finite-rank near-signs", ac7),
        ("mean-zero rebalancing", ac8),
        ("ascent to a near-sign", ac9),
        ("blocked operator", ac10),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        all &= out.passed;
        println!(
            "AC{:<2} {} {name} [{:.1}s]: {}",
            i + 1,
            if out.passed { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
