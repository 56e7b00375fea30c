use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use revinv::commands;
use revinv::config::RunConfig;
use revinv::{io, BoundaryCurves, Error, Model};

/// Free boundaries, value and Monte Carlo checks for reversible investment.
#[derive(Parser)]
#[command(name = "revinv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the boundaries; writes boundaries.csv, .json and .svg.
    Solve(Common),
    /// Tabulate the value function and check its invariants.
    Value {
        #[command(flatten)]
        common: Common,
        /// Curves file (CSV or JSON); solved afresh when omitted.
        #[arg(long)]
        curves: Option<PathBuf>,
        /// Cross-check against the penalized PDE.
        #[arg(long)]
        oracle: bool,
    },
    /// Monte Carlo verification; writes verify.json.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        curves: Option<PathBuf>,
        /// Write a few reflected paths as CSV under paths/.
        #[arg(long)]
        dump_paths: bool,
    },
    /// solve, value and verify in sequence.
    All {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        dump_paths: bool,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the simulation seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Caps the number of worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

const EXIT_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Validation { .. } | Error::Domain(_) | Error::Parse(_) | Error::Json(_) | Error::Csv(_) => EXIT_VALIDATION,
        Error::Io(_) => EXIT_USAGE,
        _ => EXIT_NUMERICAL,
    }
}

type Failure = (u8, Error, Option<PathBuf>);

fn setup(common: &Common) -> Result<(RunConfig, Model), Failure> {
    if !common.config.is_file() {
        return Err((
            EXIT_USAGE,
            Error::Io(std::io::Error::new(
                std::io::ErrorKind::NotFound,
                format!("config file {} not found\nusage: revinv <solve|value|verify|all> --config <path>", common.config.display()),
            )),
            None,
        ));
    }
    let mut cfg = RunConfig::load(&common.config).map_err(|e| (exit_code(&e), e, None))?;
    if let Some(seed) = common.seed {
        cfg.sim.seed = seed;
    }
    if let Some(n) = common.threads {
        set_threads(n);
    }
    let out = Some(cfg.output_dir.clone());
    let model = cfg.validate().map_err(|e| (EXIT_VALIDATION, e, out.clone()))?;
    commands::prepare_output(&cfg).map_err(|e| (EXIT_VALIDATION, e, None))?;
    Ok((cfg, model))
}

#[cfg(feature = "parallel")]
fn set_threads(n: usize) {
    // Only the first call configures the pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
}

#[cfg(not(feature = "parallel"))]
fn set_threads(_: usize) {}

fn curves_for(cfg: &RunConfig, model: &Model, file: Option<&Path>) -> revinv::Result<BoundaryCurves> {
    match file {
        Some(path) => io::load_curves(path).map_err(|e| match e {
            Error::Io(err) => Error::Io(std::io::Error::new(err.kind(), format!("{}: {err}", path.display()))),
            other => other,
        }),
        None => Ok(commands::solve(cfg, model)?.0),
    }
}

fn report(pass: bool, what: &str) -> u8 {
    println!("{what}: {}", if pass { "PASS" } else { "FAIL" });
    if pass {
        0
    } else {
        EXIT_FAIL
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let common = match &cli.command {
        Command::Solve(c) => c,
        Command::Value { common, .. } | Command::Verify { common, .. } | Command::All { common, .. } => common,
    };
    let (cfg, model) = setup(common)?;
    let out = Some(cfg.output_dir.clone());
    let fail = |e: Error| (exit_code(&e), e, out.clone());
    match cli.command {
        Command::Solve(_) => {
            let (curves, norms) = commands::solve(&cfg, &model).map_err(fail)?;
            let n = curves.n_steps();
            println!("solved {n} steps, max residual {:.3e}", norms.max());
            println!("t = 0: y_plus = {}, y_minus = {}", curves.y_plus()[0], curves.y_minus()[0]);
            println!("t = T: y_plus = {}, y_minus = {}", curves.y_plus()[n], curves.y_minus()[n]);
            Ok(0)
        }
        Command::Value { curves, oracle, .. } => {
            let curves = curves_for(&cfg, &model, curves.as_deref()).map_err(fail)?;
            let d = commands::value(&cfg, &model, &curves, oracle).map_err(fail)?;
            Ok(report(d.pass, "value diagnostics"))
        }
        Command::Verify { curves, dump_paths, .. } => {
            let curves = curves_for(&cfg, &model, curves.as_deref()).map_err(fail)?;
            let r = commands::verify(&cfg, &model, &curves, dump_paths).map_err(fail)?;
            Ok(report(r.pass, "verification"))
        }
        Command::All { oracle, dump_paths, .. } => {
            let (curves, _) = commands::solve(&cfg, &model).map_err(fail)?;
            let d = commands::value(&cfg, &model, &curves, oracle).map_err(fail)?;
            let a = report(d.pass, "value diagnostics");
            let r = commands::verify(&cfg, &model, &curves, dump_paths).map_err(fail)?;
            let b = report(r.pass, "verification");
            Ok(a.max(b))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err((code, err, out)) => {
            let doc = io::error_json(&err);
            eprint!("{doc}");
            if let Some(dir) = out {
                let _ = std::fs::create_dir_all(&dir);
                let _ = std::fs::write(dir.join("error.json"), &doc);
            }
            ExitCode::from(code)
        }
    }
}
