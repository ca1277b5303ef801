//! Operator-valued bi-free cumulants, structure checks and transform verification.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bifree::bnc::enumerate_bnc_bounded;
use bifree::checks::{check_bifree, check_bifree_over_d, check_r_cyclic, CondExp};
use bifree::cumulants::{omega_tuple, Engine};
use bifree::descriptor::ModelSpec;
use bifree::matrix::BMatrix;
use bifree::mobius::mobius;
use bifree::models::FockModel;
use bifree_cli::config::{ExperimentConfig, Sweep};
use bifree_cli::report::{to_json, write_json};
use bifree_cli::suite::{explain, run_suite, CHECKS};
use bifree_cli::verify::run_verify;
use bifree_cli::{default_jobs, schema, CliError, EXIT_ERROR, EXIT_FAIL, EXIT_PASS};
use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

#[derive(Parser)]
#[command(name = "bifree", version, about = "Operator-valued bi-free cumulants and transforms")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum StructureCheck {
    Bifree,
    #[value(name = "overD", alias = "over-d")]
    OverD,
    Rcyclic,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaKind {
    Suite,
    Verify,
    Config,
}

#[derive(Subcommand)]
enum Cmd {
    /// κ^B_{Z,ω}(b_1, …, b_{n−1}) for a word ω in the family's element names.
    Cumulant {
        /// Model descriptor (JSON).
        #[arg(long)]
        family: PathBuf,
        /// Space-separated element names, e.g. "x0 y1 x0".
        #[arg(long)]
        omega: String,
        /// JSON array of the n−1 B-arguments; drawn from --seed when absent.
        #[arg(long)]
        bs: Option<PathBuf>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Longest word accepted.
        #[arg(long, default_value_t = 6)]
        order_cap: usize,
        /// Also list μ(π, 1), E_π and κ_π for every π ∈ BNC(χ).
        #[arg(long)]
        trace: bool,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// One structure check on a model descriptor.
    Check {
        #[arg(value_enum)]
        kind: StructureCheck,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Random decorations per cell (bifree) or argument lists per word (overD).
        #[arg(long, default_value_t = 3)]
        draws: usize,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// A transform identity at seeded random points.
    Verify {
        name: String,
        #[arg(long)]
        model: PathBuf,
        #[arg(long, default_value_t = 5)]
        order: usize,
        #[arg(long, default_value_t = 0.05)]
        rho: f64,
        #[arg(long, default_value_t = 5)]
        points: usize,
        #[arg(long, default_value_t = 11)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// The acceptance suite.
    Suite {
        /// Experiment config (JSON); defaults to the golden run.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Comma-separated subset of checks.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; defaults to BIFREE_JOBS or the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Per-check wall times (JSON), kept apart from the report.
        #[arg(long)]
        timings: Option<PathBuf>,
    },
    /// Anchor, formula and tolerance contract of a check; all checks without a name.
    Explain { name: Option<String> },
    /// JSON schema of a report or of the config.
    Schema {
        #[arg(value_enum)]
        kind: SchemaKind,
    },
}

/// Writes the report atomically when a path is given, else prints it.
fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => write_json(p, value),
        None => {
            print!("{}", to_json(value)?);
            Ok(())
        }
    }
}

fn load_model(path: &Path) -> Result<ModelSpec, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ModelSpec::from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn verdict(pass: bool) -> i32 {
    if pass {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}

#[allow(clippy::too_many_arguments)]
fn cumulant(
    family: &Path,
    omega: &str,
    bs: Option<&Path>,
    seed: u64,
    order_cap: usize,
    trace: bool,
    report: Option<&Path>,
) -> Result<i32, CliError> {
    let spec = load_model(family)?;
    let letters: Vec<&str> = omega.split_whitespace().collect();
    if letters.len() > order_cap {
        return Err(CliError::Config(format!("word of length {} exceeds --order-cap {order_cap}", letters.len())));
    }
    let built = spec.build()?;
    let d = built.d();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fam = built.merged(&mut rng)?;
    let bs: Vec<BMatrix> = match bs {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => (1..letters.len()).map(|_| BMatrix::random(&mut rng, d, 0.5)).collect(),
    };
    let t = omega_tuple(&fam, &letters, &bs)?;
    let engine = Engine::new(built.model).with_bound(order_cap);
    let kappa = engine.kappa_full(t.shape.tags(), &t.entries)?;
    let moment = engine.e_full(t.shape.tags(), &t.entries)?;
    let mut out = json!({
        "omega": letters,
        "shape": t.shape.to_string(),
        "d": d,
        "bs": bs,
        "cumulant": kappa,
        "moment": moment,
    });
    if trace {
        let one = bifree::bnc::BncPartition::one(&t.shape);
        let mut rows = Vec::new();
        for pi in enumerate_bnc_bounded(&t.shape, order_cap)? {
            rows.push(json!({
                "partition": pi.labelled(),
                "mobius_to_one": mobius(&pi, &one)?.to_string(),
                "moment": engine.e_pi(&pi, &t.entries)?,
                "cumulant": engine.kappa_pi(&pi, &t.entries)?,
            }));
        }
        out["partitions"] = serde_json::Value::Array(rows);
    }
    emit(&out, report)?;
    Ok(EXIT_PASS)
}

fn check(kind: StructureCheck, model: &Path, order: usize, tol: f64, seed: u64, draws: usize, report: Option<&Path>) -> Result<i32, CliError> {
    let built = load_model(model)?.build()?;
    match kind {
        StructureCheck::Bifree => {
            let rep = check_bifree(&Engine::new(built.model), &built.families, order, draws, tol, seed)?;
            emit(&rep, report)?;
            Ok(verdict(rep.pass))
        }
        StructureCheck::OverD => {
            let faces = built.families.first().ok_or_else(|| CliError::Config("model has no family".into()))?;
            let rep = check_bifree_over_d(&built.model, faces, CondExp::Diagonal, order, draws, tol, seed)?;
            emit(&rep, report)?;
            Ok(verdict(rep.pass))
        }
        StructureCheck::Rcyclic => {
            let m = built.matrices.as_ref().ok_or_else(|| {
                CliError::Config("rcyclic needs a model given by scalar matrix entries (no shifts)".into())
            })?;
            let scalar = Engine::new(FockModel::new(1, built.model.depth)?);
            let rep = check_r_cyclic(&scalar, m, order, tol)?;
            emit(&rep, report)?;
            Ok(verdict(rep.pass))
        }
    }
}

fn suite(
    config: Option<&Path>,
    checks: Vec<String>,
    seed: Option<u64>,
    jobs: Option<usize>,
    report: Option<&Path>,
    timings: Option<&Path>,
) -> Result<i32, CliError> {
    let mut cfg = match config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if !checks.is_empty() {
        cfg.checks = checks;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let rep = run_suite(&cfg, jobs.unwrap_or_else(default_jobs))?;
    for c in &rep.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        let rel = if c.at_least { "≥" } else { "≤" };
        eprintln!("{status} {:<17} residual {:.3e} {rel} {:.3e}  ({:.2}s)", c.name, c.residual, c.tolerance, c.wall_time);
        if let Some(e) = &c.error {
            eprintln!("     error: {e}");
        }
    }
    eprintln!("{}/{} checks passed{}", rep.passed, rep.total, if rep.pass { "" } else { " (partial pass)" });
    if let Some(p) = timings {
        write_json(p, &rep.timings())?;
    }
    emit(&rep, report)?;
    Ok(rep.exit_code())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.cmd {
        Cmd::Cumulant { family, omega, bs, seed, order_cap, trace, report } => {
            cumulant(&family, &omega, bs.as_deref(), seed, order_cap, trace, report.as_deref())
        }
        Cmd::Check { kind, model, order, tol, seed, draws, report } => check(kind, &model, order, tol, seed, draws, report.as_deref()),
        Cmd::Verify { name, model, order, rho, points, seed, report } => {
            if order == 0 || !(rho > 0.0 && rho < 1.0) {
                return Err(CliError::Config("need --order ≥ 1 and 0 < --rho < 1".into()));
            }
            let rep = run_verify(&name, &load_model(&model)?, Sweep { order, rho, points }, seed)?;
            emit(&rep, report.as_deref())?;
            Ok(verdict(rep.pass))
        }
        Cmd::Suite { config, checks, seed, jobs, report, timings } => {
            suite(config.as_deref(), checks, seed, jobs, report.as_deref(), timings.as_deref())
        }
        Cmd::Explain { name } => {
            match name {
                Some(n) => print!("{}", explain(&n)?),
                None => {
                    for c in CHECKS {
                        print!("{}\n", explain(c.name)?);
                    }
                }
            }
            Ok(EXIT_PASS)
        }
        Cmd::Schema { kind } => {
            let s = match kind {
                SchemaKind::Suite => schema::SUITE,
                SchemaKind::Verify => schema::VERIFY,
                SchemaKind::Config => schema::CONFIG,
            };
            print!("{s}");
            Ok(EXIT_PASS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("bifree: {e}");
            ExitCode::from(EXIT_ERROR as u8)
        }
    }
}
