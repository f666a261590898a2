//! Experiment drivers producing [`Report`]s.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::defect::narrowness_defect;
use crate::dyadic::{DyadicFunction, DyadicSet};
use crate::error::{invalid, Error, Result};
use crate::gentle::{
    gentle_ascent, level_set_residual, two_point_residual, type_p_residual, AscentConfig, GentleFunction,
};
use crate::haar::rademacher;
use crate::operators::LinearOperator;
use crate::report::Report;
use crate::sign::{blocked_operator, constant_coefficients, stopping_time_sign};

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub const DEFAULT_P_GRID: [f64; 5] = [1.1, 1.25, 1.5, 1.75, 2.0];
const TWO_POINT_LEVELS: [f64; 3] = [0.1, 1.0, 10.0];

#[derive(Clone, Debug)]
pub struct VerifyParams {
    pub p_grid: Vec<f64>,
    /// Samples of `b` per `(p, a)`; the function-valued suites use a tenth.
    pub samples: usize,
    /// Depth of the level-set suite; the type suite runs two levels coarser.
    pub depth: u32,
    pub seed: u64,
    /// An extra `(p, a, b)` evaluation reported on its own.
    pub point: Option<(f64, f64, f64)>,
}

impl Default for VerifyParams {
    fn default() -> Self {
        Self {
            p_grid: DEFAULT_P_GRID.to_vec(),
            samples: 10_000,
            depth: 12,
            seed: 0,
            point: None,
        }
    }
}

/// A random nonempty set, a coefficient `a` and a mean-zero `y` on the set
/// with `|y| <= |a|`.
pub fn random_level_set_case<R: Rng + ?Sized>(depth: u32, rng: &mut R) -> (f64, DyadicSet, DyadicFunction) {
    let size = 1usize << depth;
    let mut mask: Vec<bool> = (0..size).map(|_| rng.gen()).collect();
    if mask.iter().filter(|&&b| b).count() < 2 {
        mask[0] = true;
        mask[size - 1] = true;
    }
    let set = DyadicSet::from_mask_unchecked(depth, mask);
    let a: f64 = rng.gen_range(0.1..10.0) * if rng.gen() { 1.0 } else { -1.0 };
    let atoms = set.atoms();
    let raw: Vec<f64> = atoms.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mean = raw.iter().sum::<f64>() / raw.len() as f64;
    let centered: Vec<f64> = raw.iter().map(|v| v - mean).collect();
    let peak = centered.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let scale = if peak > 0.0 {
        a.abs() * rng.gen_range(0.0..=1.0) / peak
    } else {
        0.0
    };
    let mut values = vec![0.0; size];
    for (&i, v) in atoms.iter().zip(&centered) {
        values[i] = v * scale;
    }
    (a, set, DyadicFunction::from_raw(depth, values))
}

/// The inequality suites: the two-point convexity bound, its level-set
/// version, and the type-`p` inequality.
pub fn verify(params: &VerifyParams) -> Result<Report> {
    let mut report = Report::new("verify", params.seed);
    report
        .param("p_grid", &params.p_grid)?
        .param("samples", params.samples)?
        .param("depth", params.depth)?;
    if params.p_grid.is_empty() || params.depth < 3 {
        return Err(invalid("p_grid", "needs at least one exponent and depth >= 3"));
    }
    let function_samples = (params.samples / 10).max(1);

    let mut two_point_min = f64::INFINITY;
    let mut two_point_p2 = 0.0_f64;
    for (pi, &p) in params.p_grid.iter().enumerate() {
        for (ai, &a) in TWO_POINT_LEVELS.iter().enumerate() {
            let mut rng = stream(params.seed, (pi * TWO_POINT_LEVELS.len() + ai) as u64);
            for _ in 0..params.samples {
                let b = rng.gen_range(-a..=a);
                let r = two_point_residual(p, a, b)?;
                two_point_min = two_point_min.min(r);
                if p == 2.0 {
                    two_point_p2 = two_point_p2.max(r.abs());
                }
            }
        }
    }
    report.measure("two_point_min_residual", two_point_min)?;
    report.check_ge("two_point_residual", two_point_min, -1e-12);
    if params.p_grid.contains(&2.0) {
        report.check_le("two_point_equality_p2", two_point_p2, 1e-12);
    }
    if let Some((p, a, b)) = params.point {
        let r = two_point_residual(p, a, b)?;
        report.measure("two_point", json!({"p": p, "a": a, "b": b, "residual": r}))?;
        report.check_ge("two_point", r, -1e-12);
    }

    let offset = 1_000;
    let mut level_min = f64::INFINITY;
    for (pi, &p) in params.p_grid.iter().enumerate() {
        let mins = (0..function_samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = stream(params.seed, offset + (pi * function_samples + s) as u64);
                let (a, set, y) = random_level_set_case(params.depth, &mut rng);
                level_set_residual(p, a, &set, &y)
            })
            .collect::<Result<Vec<f64>>>()?;
        level_min = mins.into_iter().fold(level_min, f64::min);
    }
    report.measure("level_set_min_residual", level_min)?;
    report.check_ge("level_set_residual", level_min, -1e-10);

    let type_depth = params.depth - 2;
    let offset = 1 << 32;
    let mut type_min = f64::INFINITY;
    let mut type_p2 = 0.0_f64;
    for (pi, &p) in params.p_grid.iter().enumerate() {
        let out = (0..function_samples)
            .into_par_iter()
            .map(|s| {
                let mut rng = stream(params.seed, offset + (pi * function_samples + s) as u64);
                let u = DyadicFunction::from_fn(type_depth, |_| rng.gen_range(-1.0..1.0));
                let v = DyadicFunction::from_fn(type_depth, |_| rng.gen_range(-1.0..1.0));
                type_p_residual(p, &u, &v)
            })
            .collect::<Result<Vec<f64>>>()?;
        for r in out {
            type_min = type_min.min(r);
            if p == 2.0 {
                type_p2 = type_p2.max(r.abs());
            }
        }
    }
    report.measure("type_p_min_residual", type_min)?;
    report.check_ge("type_p_residual", type_min, -1e-12);
    if params.p_grid.contains(&2.0) {
        report.check_le("parallelogram_p2", type_p2, 1e-12);
        let half = 1usize << (type_depth - 1);
        let u = DyadicFunction::from_fn(type_depth, |i| if i < half { 1.0 + i as f64 } else { 0.0 });
        let v = DyadicFunction::from_fn(type_depth, |i| if i < half { 0.0 } else { -0.5 });
        report.check_le("disjoint_equality_p2", type_p_residual(2.0, &u, &v)?.abs(), 1e-12);
    }
    Ok(report)
}

#[derive(Clone, Debug)]
pub struct StoptimeParams {
    pub p: f64,
    pub r: f64,
    pub c: f64,
    pub n: usize,
    /// Per-level coefficients; `1/√N` at every level when absent.
    pub coeffs: Option<Vec<f64>>,
    pub seed: u64,
    pub probe_trials: usize,
}

/// The stopping-time experiment: `f`, its stopped version `g` and the sign
/// `g̃`, all pushed through `S_{p,r}`.
pub fn stoptime(params: &StoptimeParams) -> Result<Report> {
    let StoptimeParams { p, r, c, n, .. } = *params;
    let mut report = Report::new("stoptime", params.seed);
    report
        .param("p", p)?
        .param("r", r)?
        .param("C", c)?
        .param("N", n)?;
    let constant = params.coeffs.is_none();
    let b = match &params.coeffs {
        Some(b) => b.clone(),
        None => constant_coefficients(n)?,
    };
    report.param(
        "coefficients",
        if constant { json!("constant") } else { json!(b) },
    )?;
    let depth = b.len() as u32;
    let s = LinearOperator::s_pr(p, r, depth)?;
    let record = stopping_time_sign(&b, c, depth)?;
    let f = record.f();
    let g = record.g().refine(depth)?;
    let g_tilde = record.g_tilde().sign();
    let sf = s.image_norm(&f)?;
    let sg = s.image_norm(&g)?;
    let sgt = s.image_norm(g_tilde)?;
    let gap = g.minus(g_tilde).lp_norm(p)?;
    let mut rng = stream(params.seed, 0);
    let norm = s.estimate_norm(params.probe_trials, &mut rng)?;
    let nf = n as f64;
    let decay_bound =
        2.0 * c * (nf + 1.0).powf(1.0 / r) / nf.sqrt() + 2.0 * (c / nf.sqrt() + (0.5 / c).powf(1.0 / p));

    report
        .measure("norm_Sf", sf)?
        .measure("norm_Sg", sg)?
        .measure("norm_Sg_tilde", sgt)?
        .measure("norm_g_minus_g_tilde", gap)?
        .measure("stopped_measure", record.stopped_measure())?
        .measure("unstopped_measure", record.unstopped_measure())?
        .measure("mean_g_tilde", g_tilde.mean())?
        .measure("norm_S_interval", [norm.lower, norm.upper])?
        .measure("decay_bound", decay_bound)?;

    if constant && r == p {
        let closed = c / nf.sqrt() * (nf + 1.0).powf(1.0 / p);
        report.measure("norm_Sf_closed_form", closed)?;
        report.check_le("Sf_closed_form", (sf - closed).abs(), 1e-9);
    }
    report.check_le("Sg_le_Sf", sg, sf * (1.0 + 1e-12));
    report.check_le("Sg_tilde_perturbation", sgt, sg + 2.0 * gap * norm.upper);
    report.check_le("g_tilde_mean", g_tilde.mean().abs(), 1e-12);
    report.check_le(
        "g_tilde_full_support",
        1.0 - record.g_tilde().support().measure(),
        0.0,
    );
    report.check_le("unstopped_measure", record.unstopped_measure(), 0.5 / c + 0.05);
    report.check_le("Sg_tilde_decay_bound", sgt, decay_bound);
    Ok(report)
}

/// Narrowness defect of `t` on `set`.
pub fn defect(t: &LinearOperator, set: &DyadicSet, budget: usize, seed: u64) -> Result<Report> {
    let mut report = Report::new("defect", seed);
    report
        .param("op", t.label())?
        .param("set_depth", set.depth())?
        .param("set", set.to_hex())?
        .param("budget", budget)?;
    let out = narrowness_defect(t, set, budget, seed)?;
    report
        .measure("defect", out.value)?
        .measure("ratio", out.ratio)?
        .measure("strategies", &out.strategies)?;
    let working = set.refine(t.source_depth())?;
    let exact = out.best.support() == &working && out.best.mean() == 0.0;
    report.check("mean_zero_sign_on_set", out.best.mean().abs(), 0.0, exact);
    Ok(report)
}

/// The ascent with its checks, or a stall report.
pub fn ascent(
    t: &LinearOperator,
    set: &DyadicSet,
    gen: &GentleFunction,
    config: &AscentConfig,
    defect_budget: usize,
) -> Result<(Report, Option<String>)> {
    let mut report = Report::new("ascent", config.seed);
    report
        .param("op", t.label())?
        .param("set_depth", set.depth())?
        .param("set", set.to_hex())?
        .param("gen", gen)?
        .param("eps", config.eps)?
        .param("eps1", config.eps1)?
        .param("max_iters", config.max_iters)?;
    let oracle = narrowness_defect(t, set, defect_budget, config.seed)?;
    report.measure("defect_ratio", oracle.ratio)?;
    match gentle_ascent(t, set, gen, config) {
        Ok(out) => {
            let worst = out
                .increments
                .iter()
                .map(|&(gain, margin)| gain / margin)
                .fold(f64::INFINITY, f64::min);
            report
                .measure("ratio", out.ratio)?
                .measure("lambda", out.lambda)?
                .measure("iterations", out.iterations)?
                .measure("accepted", out.accepted)?
                .measure("close", out.close)?
                .measure("stop", &out.stop)?
                .measure("increments", &out.increments)?;
            report.check_ge("increment_over_margin", worst, 0.9);
            report.check_le("sign_image_ratio", out.ratio, config.eps);
            report.check_le("defect_oracle", oracle.ratio, out.ratio + 1e-6);
            Ok((report, Some(out.trace_jsonl()?)))
        }
        Err(Error::AscentStalled {
            iterations,
            lambda,
            best_ratio,
        }) => {
            report
                .measure("stalled", true)?
                .measure("iterations", iterations)?
                .measure("lambda", lambda)?
                .measure("best_ratio", best_ratio)?;
            report.check("ascent_progress", best_ratio, config.eps, false);
            report.check_le("defect_oracle", oracle.ratio, best_ratio + 1e-6);
            Ok((report, None))
        }
        Err(e) => Err(e),
    }
}

/// The blocked-operator construction.
pub fn blocked(t: &LinearOperator, eps: f64, levels: u32, seed: u64) -> Result<Report> {
    let mut report = Report::new("blocked", seed);
    report
        .param("op", t.label())?
        .param("eps", eps)?
        .param("levels", levels)?;
    let out = blocked_operator(t, eps, levels)?;
    let failing = out.steps.iter().filter(|s| !s.holds).count();
    report
        .measure("s", &out.s)?
        .measure("a", &out.a)?
        .measure("levels_built", out.levels_built)?
        .measure("complete", out.complete)?
        .measure("diagnostic", &out.diagnostic)?
        .measure("steps", &out.steps)?;
    report.check_le("failing_bounds", failing as f64, 0.0);
    report.check("tree_exact", 0.0, 0.0, out.tree_is_exact());
    Ok(report)
}

/// Growth of `‖S r_n‖_2` for the diagonal operator with constant `δ`.
pub fn diagonal_growth(delta: f64, p: f64, n_max: u32) -> Result<Report> {
    if n_max == 0 {
        return Err(invalid("n_max", "needs n_max >= 1"));
    }
    let mut report = Report::new("diagonal_growth", 0);
    report
        .param("delta", delta)?
        .param("p", p)?
        .param("n_max", n_max)?;
    let depth = n_max + 1;
    let mut a = vec![delta; 1usize << depth];
    a[0] = 0.0;
    let s = LinearOperator::diagonal_blocked(&a, p, 2.0, depth)?;
    let exponent = 0.5 - 1.0 / p;
    let mut values = Vec::new();
    let mut worst = 0.0_f64;
    for n in 1..=n_max {
        let v = s.image_norm(&rademacher(n, depth)?)?;
        worst = worst.max((v - delta * (n as f64 * exponent).exp2()).abs());
        values.push(v);
    }
    let growth = values
        .windows(2)
        .map(|w| (w[1] / w[0] - exponent.exp2()).abs())
        .fold(0.0, f64::max);
    report.measure("norm_Sx_n", &values)?;
    report.check_le("closed_form", worst, 1e-9);
    report.check_le("growth_factor", growth, 1e-9);
    Ok(report)
}
