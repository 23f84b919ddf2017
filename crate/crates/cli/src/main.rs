use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use opspace::harness::{emit_report, run_suite, Meta, Report, Status, SuiteSpec, REPORT_VERSION, SUITES};
use opspace::linalg::{c, Matrix, PExponent, Vector, C64};
use opspace::opnorm::{opnorm_bounds, OpnormConfig};
use opspace::postructure::{MatrixOverSpace, StructureSpec};
use opspace::spaces::SpaceSpec;
use opspace::tensor::{inj_norm, nuclear_bounds_cfg, proj_norm, TensorConfig, TensorElem};
use opspace::Bounds;
use serde_json::Value;

/// Certified norm brackets for l^p operators, matrix-normed spaces and tensor
/// products, plus the verification suites.
#[derive(Parser)]
#[command(name = "opspace", version)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// Exponent p in (1, inf); 3 unless given, or taken from a JSON spec.
    #[arg(long, global = true)]
    p: Option<f64>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Multi-start count for searches.
    #[arg(long, global = true)]
    starts: Option<usize>,
    /// Representation size cap for maximal structures.
    #[arg(long = "cap-m", global = true)]
    cap_m: Option<usize>,
    /// Write JSON output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Bracket of ||A|| on l^p. MATRIX is JSON rows; entries are numbers or [re, im].
    Opnorm { matrix: String },
    /// Bracket of a vector norm. SPACE and X are JSON (or @file).
    SpaceNorm { space: String, x: String },
    /// Bracket of a matrix norm over a structure. U is {"entries": n x n x dim}.
    Matnorm { structure: String, u: String },
    /// Tensor norm of coefficients C (dim X x dim Y) in X ⊗ Y.
    Tensor {
        #[arg(value_enum)]
        norm: TensorNorm,
        x: String,
        y: String,
        coeffs: String,
    },
    /// Run one verification suite.
    Verify {
        /// Suite id, or @file with a full suite spec.
        suite: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        k2: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        levels: Option<usize>,
        /// Treat inconclusive checks as failures for the exit code.
        #[arg(long)]
        strict: bool,
    },
    /// Run several suites at small sizes and emit one merged report.
    Report {
        /// Comma-separated suite ids; all registered suites by default.
        #[arg(long, value_delimiter = ',')]
        suites: Vec<String>,
        #[arg(long, default_value_t = 3)]
        samples: usize,
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum TensorNorm {
    Inj,
    Proj,
    /// X and Y are ignored: l^{p'}(m) ⊗ l^p(m).
    Nuclear,
}

/// Inline JSON, or the contents of a file when prefixed by `@`.
fn load(arg: &str) -> Result<String> {
    match arg.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).with_context(|| format!("reading {path}")),
        None => Ok(arg.to_string()),
    }
}

fn scalar(v: &Value) -> Result<C64> {
    match v {
        Value::Number(x) => Ok(c(x.as_f64().context("number")?, 0.0)),
        Value::Array(a) if a.len() == 2 => Ok(c(
            a[0].as_f64().context("real part")?,
            a[1].as_f64().context("imaginary part")?,
        )),
        other => bail!("expected a number or [re, im], got {other}"),
    }
}

fn vector(v: &Value) -> Result<Vector> {
    let items = v.as_array().context("expected a JSON array")?;
    Ok(Vector(items.iter().map(scalar).collect::<Result<_>>()?))
}

fn matrix(v: &Value) -> Result<Matrix> {
    let rows = v.as_array().context("expected a JSON array of rows")?;
    let rows: Vec<Vec<C64>> = rows.iter().map(|r| vector(r).map(|x| x.0)).collect::<Result<_>>()?;
    Ok(Matrix::from_rows(rows)?)
}

fn parse(arg: &str) -> Result<Value> {
    let s = load(arg)?;
    serde_json::from_str(&s).with_context(|| format!("parsing JSON `{s}`"))
}

fn emit(global: &Global, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match &global.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn bracket_json(b: &Bounds) -> Result<Value> {
    Ok(serde_json::to_value(b)?)
}

impl Global {
    fn p_or(&self, fallback: f64) -> f64 {
        self.p.unwrap_or(fallback)
    }
}

fn apply_globals(mut spec: SuiteSpec, g: &Global) -> SuiteSpec {
    spec.p = g.p_or(spec.p);
    spec.seed = g.seed;
    spec.starts = g.starts.or(spec.starts);
    spec.cap_m = g.cap_m.or(spec.cap_m);
    spec
}

fn summary(r: &Report) -> String {
    format!(
        "{} checks: {} pass, {} fail, {} inconclusive (digest {})",
        r.checks.len(),
        r.count(Status::Pass),
        r.count(Status::Fail),
        r.count(Status::Inconclusive),
        &r.digest()[..16]
    )
}

fn finish(g: &Global, r: &Report, strict: bool) -> Result<ExitCode> {
    match &g.out {
        Some(path) => emit_report(r, path)?,
        None => println!("{}", r.to_json()),
    }
    eprintln!("{}", summary(r));
    for c in r.checks.iter().filter(|c| c.status == Status::Fail) {
        eprintln!("FAIL {} lhs {:?} rhs {:?}", c.id, c.lhs, c.rhs);
    }
    Ok(ExitCode::from(r.exit_code(strict) as u8))
}

fn run(cli: Cli) -> Result<ExitCode> {
    let g = &cli.global;
    let p = PExponent::new(g.p_or(3.0))?;
    match &cli.cmd {
        Cmd::Opnorm { matrix: m } => {
            let a = matrix(&parse(m)?)?;
            let b = opnorm_bounds(&a, p, &OpnormConfig::default().with_seed(g.seed))?;
            emit(g, &bracket_json(&b)?)?;
        }
        Cmd::SpaceNorm { space, x } => {
            let s = SpaceSpec::from_json(&load(space)?)?;
            let b = s.norm(&vector(&parse(x)?)?)?;
            emit(g, &bracket_json(&b)?)?;
        }
        Cmd::Matnorm { structure, u } => {
            let mut spec: StructureSpec = serde_json::from_str(&load(structure)?)?;
            spec.p = g.p_or(spec.p);
            spec.cap_m = g.cap_m.or(spec.cap_m);
            spec.starts = g.starts.or(spec.starts);
            let s = spec.build()?.with_seed(g.seed);
            let u = MatrixOverSpace::from_json(&load(u)?)?;
            emit(g, &bracket_json(&s.matrix_norm(&u)?)?)?;
        }
        Cmd::Tensor { norm, x, y, coeffs } => {
            let cfg = TensorConfig { seed: g.seed, starts: g.starts.unwrap_or(TensorConfig::default().starts), ..TensorConfig::default() };
            let cm = matrix(&parse(coeffs)?)?;
            let b = match norm {
                TensorNorm::Nuclear => nuclear_bounds_cfg(&cm, p, &cfg),
                _ => {
                    let t = TensorElem::new(SpaceSpec::from_json(&load(x)?)?, SpaceSpec::from_json(&load(y)?)?, cm)?;
                    match norm {
                        TensorNorm::Inj => inj_norm(&t),
                        _ => proj_norm(&t, &cfg),
                    }
                }
            };
            emit(g, &bracket_json(&b)?)?;
        }
        Cmd::Verify { suite, n, k, k2, samples, tol, levels, strict } => {
            let mut spec = match suite.strip_prefix('@') {
                Some(_) => SuiteSpec::from_json(&load(suite)?)?,
                None => SuiteSpec::new(suite),
            };
            spec = apply_globals(spec, g);
            spec.n = n.unwrap_or(spec.n);
            spec.k = k.unwrap_or(spec.k);
            spec.k2 = k2.or(spec.k2);
            spec.samples = samples.unwrap_or(spec.samples);
            spec.tol = tol.or(spec.tol);
            spec.levels = levels.unwrap_or(spec.levels);
            let r = run_suite(&spec)?;
            return finish(g, &r, *strict);
        }
        Cmd::Report { suites, samples, strict } => {
            let ids: Vec<String> =
                if suites.is_empty() { SUITES.iter().map(|s| s.to_string()).collect() } else { suites.clone() };
            let mut parts = Vec::with_capacity(ids.len());
            for id in &ids {
                let spec = apply_globals(SuiteSpec::new(id).samples(*samples), g);
                parts.push(run_suite(&spec)?);
            }
            let meta = Meta {
                seed: g.seed,
                version: REPORT_VERSION.to_string(),
                params: serde_json::json!({ "suites": ids, "samples": samples, "p": g.p_or(3.0) }),
            };
            let r = Report::merge(meta, parts);
            return finish(g, &r, *strict);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
