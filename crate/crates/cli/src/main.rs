// negated comparisons are used so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use jetcurv::Catalog;
use jetcurv_cli::config::{default_tolerance, parse_overrides, sample_grid, GridSpec, RunConfig};
use jetcurv_cli::report::{curvature_csv, Json, SCHEMA};
use jetcurv_cli::runner::{self, csv_name, Verdict};
use jetcurv_cli::{CliError, EXIT_IDENTITY_FAILURE};

#[derive(Parser)]
#[command(
    name = "jetcurv",
    version,
    about = "Jet-bundle curvature identities, certified numerically"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full identity suite described by a config file.
    Run {
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Per-identity tolerance, `NAME=VALUE`; repeatable.
        #[arg(long = "tolerance", value_name = "NAME=VALUE")]
        tolerances: Vec<String>,
    },
    /// Run the randomized linear-algebra identities only.
    VerifyIdentities {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        /// Jet orders used by the cocycle check.
        #[arg(long = "k", value_delimiter = ',', default_value = "0,1,2,3")]
        jet_orders: Vec<usize>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long = "tolerance", value_name = "NAME=VALUE")]
        tolerances: Vec<String>,
    },
    /// Tabulate the curvature of `J_k` for one model over a grid.
    Curvature {
        model_id: String,
        /// Catalog file; the built-in catalog when omitted.
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        /// `shape:radius:points[:rings]`, e.g. `polar:0.5:64`.
        #[arg(long)]
        grid: String,
        /// Writes `{id}_k{k}.csv` here instead of printing to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the built-in model catalog.
    Catalog {
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run(config: &Path, output: Option<PathBuf>, tolerances: &[String]) -> Result<bool, CliError> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(o) = output {
        cfg.outputs = o;
    }
    cfg.override_tolerances(tolerances)?;
    let catalog = cfg.load_catalog()?;
    let outcome = runner::run(&cfg, &catalog)?;
    let path = runner::write_outputs(&outcome, &cfg.outputs)?;
    for r in &outcome.results {
        println!("{}", r.summary());
    }
    println!("report: {}", path.display());
    Ok(outcome.all_pass())
}

fn verify(
    seed: u64,
    trials: usize,
    jet_orders: &[usize],
    output: Option<PathBuf>,
    tolerances: &[String],
) -> Result<bool, CliError> {
    let overrides = parse_overrides(tolerances)?;
    let tol = |n: &str| {
        overrides
            .get(n)
            .copied()
            .or_else(|| default_tolerance(n))
            .expect("known identity")
    };
    let results = runner::global_identities(seed, trials, jet_orders, tol);
    let all_pass = results.iter().all(|r| r.verdict != Verdict::Fail);
    for r in &results {
        println!("{}", r.summary());
    }
    if let Some(dir) = output {
        let report = Json::obj([
            ("schema", Json::str(SCHEMA)),
            ("version", Json::str(env!("CARGO_PKG_VERSION"))),
            ("seed", Json::Int(seed as i64)),
            ("trials", Json::Int(trials as i64)),
            ("all_pass", Json::Bool(all_pass)),
            (
                "identities",
                Json::Arr(results.iter().map(|r| r.to_json()).collect()),
            ),
        ]);
        let path = dir.join("verify.json");
        write_file(&path, &report.to_pretty())?;
        println!("report: {}", path.display());
    }
    Ok(all_pass)
}

fn curvature(
    model_id: &str,
    models: Option<PathBuf>,
    k: usize,
    grid: &str,
    output: Option<PathBuf>,
) -> Result<bool, CliError> {
    let catalog = match models {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| {
                CliError::Config(format!("cannot read catalog {}: {e}", p.display()))
            })?;
            Catalog::from_json(&text).map_err(|e| CliError::Config(format!("catalog: {e}")))?
        }
        None => Catalog::standard(),
    };
    let model = catalog
        .get(model_id)
        .ok_or_else(|| CliError::Config(format!("no model {model_id:?} in the catalog")))?;
    let spec = GridSpec::parse(grid)?;
    if !(spec.radius < model.domain_radius()) {
        return Err(CliError::Config(format!(
            "model {model_id}: grid radius {} is outside the domain radius {}",
            spec.radius,
            model.domain_radius()
        )));
    }
    let rows = runner::curvature_table(model_id, model, k, &sample_grid(&spec)?)?;
    let csv = curvature_csv(&rows);
    match output {
        Some(dir) => {
            let path = dir.join(csv_name(model_id, k));
            write_file(&path, &csv)?;
            println!("{}", path.display());
        }
        None => print!("{csv}"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            config,
            output,
            tolerances,
        } => run(&config, output, &tolerances),
        Command::VerifyIdentities {
            seed,
            trials,
            jet_orders,
            output,
            tolerances,
        } => verify(seed, trials, &jet_orders, output, &tolerances),
        Command::Curvature {
            model_id,
            models,
            k,
            grid,
            output,
        } => curvature(&model_id, models, k, &grid, output),
        Command::Catalog { output } => {
            let text = Catalog::standard().to_canonical_json();
            match output {
                Some(p) => write_file(&p, &text).map(|_| true),
                None => {
                    print!("{text}");
                    Ok(true)
                }
            }
        }
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_IDENTITY_FAILURE as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
