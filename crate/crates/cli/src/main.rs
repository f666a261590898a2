use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use narrowlab::dyadic::DyadicSet;
use narrowlab::experiments::{self, StoptimeParams, VerifyParams, DEFAULT_P_GRID};
use narrowlab::gentle::{AscentConfig, GentleFunction};
use narrowlab::operators::{LinearOperator, OperatorSpec};
use narrowlab::report::Report;

#[derive(Parser)]
#[command(
    name = "narrowlab",
    version,
    about = "Experiments on narrow operators over dyadic step functions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Record wall time in the report (makes output run-dependent).
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Inequality suites over a grid of exponents.
    Verify {
        /// Restrict the grid to one exponent.
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 12)]
        depth: u32,
        /// Extra two-point evaluation `a,b` at the first exponent.
        #[arg(long, value_delimiter = ',')]
        coeffs: Option<Vec<f64>>,
    },
    /// Stopping-time sign pushed through `S_{p,r}`.
    Stoptime {
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long = "C", default_value_t = 4.0)]
        c: f64,
        #[arg(long = "N", default_value_t = 20)]
        n: usize,
        /// Per-level coefficients, comma separated; `1/sqrt(N)` when omitted.
        #[arg(long, value_delimiter = ',')]
        coeffs: Option<Vec<f64>>,
        /// Random probes for the norm estimate.
        #[arg(long, default_value_t = 16)]
        budget: usize,
    },
    /// Search for mean-zero signs with small image.
    Defect {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 64)]
        budget: usize,
    },
    /// Ascent towards a near-sign with small image.
    Ascent {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        /// Closeness target; `eps / (2 eps + 2)` when omitted.
        #[arg(long)]
        eps1: Option<f64>,
        /// `sign_based`, `gaussian` or `gaussian:<coins>`.
        #[arg(long, default_value = "gaussian")]
        gen: String,
        #[arg(long, default_value_t = 64)]
        max_iters: usize,
        /// Random signs for the defect cross-check.
        #[arg(long, default_value_t = 32)]
        budget: usize,
        /// Write the per-iteration trace as JSON lines.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Blocked diagonal operator from a tree of near-signs.
    Blocked {
        #[command(flatten)]
        target: Target,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 6)]
        levels: u32,
    },
    /// Growth of `‖S x_n‖_2` for a constant diagonal.
    DiagonalGrowth {
        #[arg(long, default_value_t = 0.3)]
        delta: f64,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        #[arg(long, default_value_t = 8)]
        n_max: u32,
    },
}

#[derive(clap::Args)]
struct Target {
    /// Operator spec: a JSON file, or inline JSON starting with `{`.
    #[arg(long)]
    op: String,
    /// Set `{"depth": d, "mask": "<hex>"}` or `{"depth": d, "atoms": [..]}`,
    /// as a file or inline; the whole interval when omitted.
    #[arg(long)]
    set: Option<String>,
}

#[derive(serde::Deserialize)]
struct SetSpec {
    depth: u32,
    mask: Option<String>,
    atoms: Option<Vec<usize>>,
}

/// Inline JSON or the contents of a file, with the directory relative paths
/// inside it resolve against.
fn read_json_arg(arg: &str) -> Result<(String, Option<PathBuf>)> {
    if arg.trim_start().starts_with('{') {
        return Ok((arg.to_string(), None));
    }
    let path = Path::new(arg);
    let text = fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
    Ok((text, path.parent().map(Path::to_path_buf)))
}

impl Target {
    fn operator(&self) -> Result<LinearOperator> {
        let (text, base) = read_json_arg(&self.op)?;
        let spec = OperatorSpec::from_json(&text).context("parsing operator spec")?;
        Ok(spec.build(base.as_deref())?)
    }

    fn set(&self, depth: u32) -> Result<DyadicSet> {
        let Some(arg) = &self.set else {
            return Ok(DyadicSet::full(depth));
        };
        let (text, _) = read_json_arg(arg)?;
        let spec: SetSpec = serde_json::from_str(&text).context("parsing set")?;
        Ok(match (spec.mask, spec.atoms) {
            (Some(hex), None) => DyadicSet::from_hex(spec.depth, &hex)?,
            (None, Some(atoms)) => DyadicSet::from_atoms(spec.depth, &atoms)?,
            _ => bail!("a set needs exactly one of `mask` and `atoms`"),
        })
    }
}

fn parse_gen(text: &str, p: f64) -> Result<GentleFunction> {
    Ok(match text.split_once(':') {
        None if text == "sign_based" => GentleFunction::SignBased,
        None if text == "gaussian" => GentleFunction::gaussian(p, 4)?,
        Some(("gaussian", coins)) => GentleFunction::gaussian(p, coins.parse().context("coin count")?)?,
        _ => bail!("unknown generator `{text}`"),
    })
}

fn run(cli: &Cli) -> Result<Report> {
    let seed = cli.seed;
    Ok(match &cli.command {
        Command::Verify {
            p,
            samples,
            depth,
            coeffs,
        } => {
            let p_grid = p.map_or(DEFAULT_P_GRID.to_vec(), |p| vec![p]);
            let point = match coeffs.as_deref() {
                None => None,
                Some(&[a, b]) => Some((p_grid[0], a, b)),
                Some(_) => bail!("--coeffs takes exactly two values `a,b`"),
            };
            experiments::verify(&VerifyParams {
                p_grid,
                samples: *samples,
                depth: *depth,
                seed,
                point,
            })?
        }
        Command::Stoptime {
            p,
            r,
            c,
            n,
            coeffs,
            budget,
        } => experiments::stoptime(&StoptimeParams {
            p: *p,
            r: r.unwrap_or(*p),
            c: *c,
            n: *n,
            coeffs: coeffs.clone(),
            seed,
            probe_trials: *budget,
        })?,
        Command::Defect { target, budget } => {
            let op = target.operator()?;
            let set = target.set(op.source_depth())?;
            experiments::defect(&op, &set, *budget, seed)?
        }
        Command::Ascent {
            target,
            eps,
            eps1,
            gen,
            max_iters,
            budget,
            trace,
        } => {
            let op = target.operator()?;
            let set = target.set(op.source_depth())?;
            let gen = parse_gen(gen, op.source_p())?;
            let mut config = AscentConfig::new(*eps, seed);
            config.max_iters = *max_iters;
            if let Some(e) = eps1 {
                config.eps1 = *e;
            }
            let (report, lines) = experiments::ascent(&op, &set, &gen, &config, *budget)?;
            if let Some(path) = trace {
                fs::write(path, lines.unwrap_or_default())
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            report
        }
        Command::Blocked { target, eps, levels } => {
            if target.set.is_some() {
                bail!("blocked grows its tree from all of [0, 1] and takes no --set");
            }
            let op = target.operator()?;
            experiments::blocked(&op, *eps, *levels, seed)?
        }
        Command::DiagonalGrowth { delta, p, n_max } => experiments::diagonal_growth(*delta, *p, *n_max)?,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let outcome = run(&cli).and_then(|mut report| {
        if cli.timing {
            report.set_wall_time(start.elapsed().as_secs_f64());
        }
        let text = match cli.format {
            Format::Json => report.to_json()?,
            Format::Csv => report.to_csv()?,
        };
        match &cli.out {
            Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
            None => print!("{text}"),
        }
        Ok(report.all_passed())
    });
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
