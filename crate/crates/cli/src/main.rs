//! `agesim` command line: run scenarios, sweep generation rates, check
//! coupled dominance, emit presets, classify distributions.
//!
//! Exit codes: 0 success, 1 configuration/validation error, 2 runtime
//! error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use agesim_cli::config::{load_config, parse_lambda_grid, ConfigError, Plan};
use agesim_cli::couple::{parse_pairs, run_couple};
use agesim_cli::report;
use agesim_cli::sweep::run_sweep;
use agesim_cli::{preset_fig4, preset_fig5};
use agesim_core::rng::derive_seed;
use agesim_core::{
    is_nbu_default, is_nwu_default, run_simulation, DistributionSpec, RunOptions,
    ServiceTimeSource,
};

#[derive(Parser)]
#[command(name = "agesim", version, about = "Freshness-scheduling simulator for multihop update networks")]
struct Cli {
    /// Override the master seed from the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Override the output directory from the config.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Override the replication count from the config.
    #[arg(long, global = true)]
    reps: Option<u32>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured scenario at its own rate and emit metrics.
    Run {
        config: PathBuf,
        /// Also write the per-link event log of the first replication of
        /// each policy variant.
        #[arg(long)]
        verbose: bool,
    },
    /// Sweep the generation rate over a grid.
    Sweep {
        config: PathBuf,
        /// Grid as START:END:STEP (defaults to the config's grid).
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Run coupled policy pairs and report per-path dominance.
    Couple {
        config: PathBuf,
        /// Comma-separated DOMINANT:BASELINE pairs, e.g.
        /// `prmp-lgfs:fcfs,prmp-lgfs:np-lcfs`. Defaults to the first
        /// configured policy against every other one.
        #[arg(long)]
        pairs: Option<String>,
    },
    /// Write a built-in experiment preset config.
    Preset {
        /// One of: fig4, fig5.
        name: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify a transmission-time law (new-better/worse-than-used).
    CheckDist {
        /// Text form, e.g. `exp 1`, `gamma 0.5 2`, `shifted-exp 0.5 2`.
        spec: Vec<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

enum AppError {
    Validation(String),
    Runtime(String),
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for AppError {
    fn from(e: std::io::Error) -> Self {
        AppError::Runtime(e.to_string())
    }
}

struct Overrides {
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    reps: Option<u32>,
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    let Cli {
        seed,
        out_dir: dir,
        reps,
        command,
    } = cli;
    let cli = Overrides {
        seed,
        out_dir: dir,
        reps,
    };
    match command {
        Command::Run { config, verbose } => {
            let (file, mut plan) = load_config(&config)?;
            apply_overrides(&mut plan, &cli);
            let table = run_sweep(&plan, &[]).map_err(sweep_err)?;
            let mut files = vec![
                ("sweep.csv".to_string(), report::sweep_csv(&table)),
                ("manifest.txt".to_string(), run_manifest(&file, &plan)),
            ];
            if plan.formats.iter().any(|f| f == "plot") {
                for (name, contents) in report::plot_files(&table) {
                    files.push((format!("plot/{name}"), contents));
                }
            }
            if verbose {
                for (label, log) in verbose_logs(&plan)? {
                    files.push((format!("events_{label}.log"), log));
                }
            }
            let written = report::emit(&out_dir(&plan), &files)?;
            for w in written {
                println!("wrote {w}");
            }
            Ok(())
        }
        Command::Sweep { config, lambda } => {
            let (file, mut plan) = load_config(&config)?;
            apply_overrides(&mut plan, &cli);
            let grid = match lambda {
                Some(text) => parse_lambda_grid(&text)?,
                None if !plan.lambda_grid.is_empty() => plan.lambda_grid.clone(),
                None => {
                    return Err(AppError::Validation(
                        "no lambda grid: pass --lambda START:END:STEP or set run.lambda_grid"
                            .into(),
                    ))
                }
            };
            let table = run_sweep(&plan, &grid).map_err(sweep_err)?;
            let mut files = vec![
                ("sweep.csv".to_string(), report::sweep_csv(&table)),
                ("manifest.txt".to_string(), run_manifest(&file, &plan)),
            ];
            if plan.formats.iter().any(|f| f == "plot") {
                for (name, contents) in report::plot_files(&table) {
                    files.push((format!("plot/{name}"), contents));
                }
            }
            let written = report::emit(&out_dir(&plan), &files)?;
            for w in written {
                println!("wrote {w}");
            }
            Ok(())
        }
        Command::Couple { config, pairs } => {
            let (file, mut plan) = load_config(&config)?;
            apply_overrides(&mut plan, &cli);
            let pairs = match pairs {
                Some(text) => parse_pairs(&text).map_err(AppError::Validation)?,
                None => {
                    if plan.policies.len() < 2 {
                        return Err(AppError::Validation(
                            "couple needs at least two policies".into(),
                        ));
                    }
                    let dominant = plan.policies[0];
                    plan.policies[1..]
                        .iter()
                        .map(|&b| (dominant, b))
                        .collect()
                }
            };
            let rows = run_couple(&plan, &pairs, plan.replications as u64)
                .map_err(|e| AppError::Runtime(e.to_string()))?;
            let holds = rows.iter().filter(|r| r.holds).count();
            println!("dominance holds in {holds}/{} coupled runs", rows.len());
            let files = vec![
                ("dominance.csv".to_string(), report::dominance_csv(&rows)),
                ("manifest.txt".to_string(), run_manifest(&file, &plan)),
            ];
            let written = report::emit(&out_dir(&plan), &files)?;
            for w in written {
                println!("wrote {w}");
            }
            Ok(())
        }
        Command::Preset { name, out } => {
            let cfg = match name.as_str() {
                "fig4" => preset_fig4(),
                "fig5" => preset_fig5(),
                other => {
                    return Err(AppError::Validation(format!(
                        "unknown preset `{other}` (available: fig4, fig5)"
                    )))
                }
            };
            std::fs::write(&out, cfg.to_toml())?;
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::CheckDist { spec } => {
            let text = spec.join(" ");
            let dist: DistributionSpec = text
                .parse()
                .map_err(|e: agesim_core::DistError| AppError::Validation(e.to_string()))?;
            println!("law: {dist}");
            println!("mean: {}", dist.mean());
            println!("variance: {}", dist.variance());
            println!(
                "new-better-than-used: {} (grid check, 10x mean, step mean/100, tol 1e-9)",
                is_nbu_default(&dist)
            );
            println!("new-worse-than-used: {}", is_nwu_default(&dist));
            Ok(())
        }
    }
}

fn out_dir(plan: &Plan) -> PathBuf {
    PathBuf::from(&plan.out_dir)
}

fn apply_overrides(plan: &mut Plan, cli: &Overrides) {
    if let Some(seed) = cli.seed {
        plan.seed = seed;
    }
    if let Some(reps) = cli.reps {
        plan.replications = reps.max(1);
    }
    if let Some(dir) = &cli.out_dir {
        plan.out_dir = dir.display().to_string();
    }
}

fn sweep_err(e: agesim_cli::sweep::SweepError) -> AppError {
    use agesim_cli::sweep::SweepError;
    match e {
        SweepError::Config(c) => AppError::Validation(c.to_string()),
        SweepError::ExplicitArrivals | SweepError::EmptyGrid => {
            AppError::Validation(e.to_string())
        }
        other => AppError::Runtime(other.to_string()),
    }
}

fn run_manifest(file: &agesim_cli::config::ConfigFile, plan: &Plan) -> String {
    let extra = vec![
        ("horizon".to_string(), plan.horizon.to_string()),
        ("replications".to_string(), plan.replications.to_string()),
        (
            "policies".to_string(),
            plan.variant_labels().join(" "),
        ),
        (
            "lambda_grid".to_string(),
            if plan.lambda_grid.is_empty() {
                "single-point".to_string()
            } else {
                format!(
                    "{}..{} ({} points)",
                    plan.lambda_grid[0],
                    plan.lambda_grid[plan.lambda_grid.len() - 1],
                    plan.lambda_grid.len()
                )
            },
        ),
        (
            "focus".to_string(),
            match (plan.focus_node, &plan.focus_metric) {
                (Some(n), Some(m)) => format!("node {n} / {m}"),
                _ => "none".to_string(),
            },
        ),
    ];
    report::manifest(&file.to_toml(), plan.seed, &extra)
}

/// Event logs of the first replication per policy variant.
fn verbose_logs(plan: &Plan) -> Result<Vec<(String, String)>, AppError> {
    let mut out = Vec::new();
    for policy in plan.policies.iter() {
        for buffer in plan.buffers.iter() {
            let label = agesim_cli::config::variant_label(policy, *buffer)
                .replace(['[', ']', '='], "_");
            let scenario_seed = derive_seed(plan.seed, &[0xA11, 0, 0]);
            let service_seed = derive_seed(plan.seed, &[0x5E2, 0, 0]);
            let scenario = plan.scenario(None, *buffer, scenario_seed)?;
            let trace = run_simulation(
                &scenario,
                policy,
                &ServiceTimeSource::IndependentStreams { seed: service_seed },
                &RunOptions {
                    log_link_events: true,
                    ..RunOptions::default()
                },
            )
            .map_err(|e| AppError::Runtime(e.to_string()))?;
            let log = trace
                .link_log
                .as_ref()
                .map(|events| {
                    events
                        .iter()
                        .map(|e| e.to_line())
                        .collect::<Vec<_>>()
                        .join("\n")
                })
                .unwrap_or_default();
            out.push((label, log));
        }
    }
    Ok(out)
}
