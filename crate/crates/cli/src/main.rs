//! `qevote`: run protocols, attacks, security experiments and bound checks.

mod config;
mod export;
mod manifest;
mod runs;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use qevote_core::analysis::{run_bound_suite, SuiteOptions};

use config::{BoundsSpec, ExportSpec, InjectedConstant, RunConfig, SeriesName, SCHEMA_VERSION};
use manifest::{Outputs, RunManifest};

const DEFAULT_TRIALS: u64 = 1000;

#[derive(Debug, Parser)]
#[command(
    name = "qevote",
    version,
    about = "Quantum e-voting simulator, attack reproducer and bound verifier"
)]
struct Cli {
    /// Master seed; per-trial streams are derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of Monte Carlo trials.
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Output directory for artifacts and the run manifest.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for trial-level parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// One honest execution of the configured protocol.
    RunProtocol,
    /// Repeats a concrete attack and reports its success rate.
    RunAttack,
    /// Runs a security game, optionally sweeping one parameter.
    RunExperiment,
    /// Checks every analytic bound; exit 1 if any claimed relation fails.
    VerifyBounds {
        /// Only checks whose id starts with this prefix.
        #[arg(long)]
        filter: Option<String>,
        /// Test mode: replace a claimed constant, as ID=VALUE.
        #[arg(long, hide = true)]
        inject_wrong_constant: Option<String>,
    },
    /// Writes a plot-ready data series.
    Export {
        #[arg(long, value_enum)]
        series: Option<SeriesName>,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long)]
        voters: Option<u64>,
        #[arg(long)]
        corrupted: Option<u64>,
        #[arg(long)]
        max_rounds: Option<u64>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::RunProtocol => "run-protocol",
            Self::RunAttack => "run-attack",
            Self::RunExperiment => "run-experiment",
            Self::VerifyBounds { .. } => "verify-bounds",
            Self::Export { .. } => "export",
        }
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    match &cli.config {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            RunConfig::parse(&text).with_context(|| format!("invalid config {}", p.display()))
        }
        None => Ok(RunConfig {
            schema_version: SCHEMA_VERSION,
            ..RunConfig::default()
        }),
    }
}

fn parse_injection(text: &str) -> anyhow::Result<InjectedConstant> {
    let (id, value) = text
        .split_once('=')
        .context("--inject-wrong-constant expects ID=VALUE")?;
    Ok(InjectedConstant {
        id: id.to_string(),
        value: value.parse().context("constant must be a number")?,
    })
}

fn execute(cli: &Cli) -> anyhow::Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let mut cfg = load_config(cli)?;
    let seed = cli.seed.or(cfg.seed).unwrap_or(0);
    cfg.seed = Some(seed);
    let uses_trials = matches!(cli.command, Command::RunAttack | Command::RunExperiment);
    let trials = cli.trials.or(cfg.trials).unwrap_or(DEFAULT_TRIALS);
    if uses_trials {
        if trials == 0 {
            anyhow::bail!("trials must be positive");
        }
        cfg.trials = Some(trials);
    }
    match &cli.command {
        Command::VerifyBounds {
            filter,
            inject_wrong_constant,
        } => {
            let mut b = cfg.bounds.clone().unwrap_or_default();
            if filter.is_some() {
                b.filter = filter.clone();
            }
            if let Some(text) = inject_wrong_constant {
                b.inject = Some(parse_injection(text)?);
            }
            cfg.bounds = Some(b);
        }
        Command::Export {
            series,
            dim,
            voters,
            corrupted,
            max_rounds,
        } => {
            let base = cfg.export.clone();
            let series = series
                .or(base.as_ref().map(|e| e.series))
                .context("export needs --series or an \"export\" config section")?;
            let base = base.filter(|e| e.series == series);
            cfg.export = Some(ExportSpec {
                series,
                dim: dim.or(base.as_ref().and_then(|e| e.dim)),
                voters: voters.or(base.as_ref().and_then(|e| e.voters)),
                corrupted: corrupted.or(base.as_ref().and_then(|e| e.corrupted)),
                max_rounds: max_rounds.or(base.as_ref().and_then(|e| e.max_rounds)),
            });
        }
        _ => {}
    }

    let mut out = Outputs::create(&cli.out)?;
    out.write_json("config.json", &cfg)?;
    let code =
        match &cli.command {
            Command::RunProtocol => {
                let run = runs::run_protocol(&cfg, seed)?;
                println!("protocol {}: votes {:?}", run.protocol, run.votes);
                println!("outcome: {}", run.outcome);
                out.write_json("outcome.json", &run)?;
                if run.aborted {
                    println!("aborted");
                    1
                } else if !run.correct {
                    println!("outcome does not match the votes");
                    1
                } else {
                    println!("correct");
                    0
                }
            }
            Command::RunAttack => {
                let report = runs::run_attack(&cfg, seed, trials)?;
                println!(
                    "{} on {}: {}/{} successful (rate {:.4}, 95% CI [{:.4}, {:.4}])",
                    report.attack,
                    report.protocol,
                    report.successes,
                    report.total,
                    report.success_rate,
                    report.interval.lo,
                    report.interval.hi
                );
                out.write_json("attack.json", &report)?;
                out.write("trials.csv", report.to_csv()?.as_bytes())?;
                0
            }
            Command::RunExperiment => {
                let points = runs::run_experiment(&cfg, seed, trials)?;
                let sweep = cfg.sweep.is_some();
                for (i, (value, report)) in points.iter().enumerate() {
                    let label = value.map_or(String::new(), |v| format!(" at {v}"));
                    let ci = report.interval.map_or(String::new(), |iv| {
                        format!(", 95% CI [{:.4}, {:.4}]", iv.lo, iv.hi)
                    });
                    println!(
                    "{:?} {} vs {}{label}: {} wins, {} losses, {} false attacks, win rate {}{ci}",
                    report.experiment,
                    report.strategy,
                    report.protocol,
                    report.wins,
                    report.losses,
                    report.false_attacks,
                    report.win_rate.map_or("n/a".to_string(), |r| format!("{r:.4}")),
                );
                    let (json, csv) = if sweep {
                        (format!("report-{i}.json"), format!("trials-{i}.csv"))
                    } else {
                        ("report.json".to_string(), "trials.csv".to_string())
                    };
                    out.write(&json, (report.to_json()? + "\n").as_bytes())?;
                    out.write(&csv, report.to_csv()?.as_bytes())?;
                }
                if let Some(s) = &cfg.sweep {
                    let mut w = csv::Writer::from_writer(Vec::new());
                    for p in runs::series(&points) {
                        w.serialize(p)?;
                    }
                    out.write("series.csv", &w.into_inner()?)?;
                    let mut plot = serde_json::json!({
                        "data": "series.csv",
                        "mark": "line",
                        "x": "value",
                        "y": ["win_rate"],
                        "band": ["lo", "hi"],
                    });
                    plot["x_label"] = serde_json::to_value(s.parameter)?;
                    out.write_json("plot.json", &plot)?;
                }
                0
            }
            Command::VerifyBounds { .. } => {
                let b: BoundsSpec = cfg.bounds.clone().unwrap_or_default();
                let opts = SuiteOptions {
                    filter: b.filter.clone(),
                    override_constant: b.inject.as_ref().map(|i| (i.id.clone(), i.value)),
                };
                let checks = run_bound_suite(&opts)?;
                if checks.is_empty() {
                    anyhow::bail!("no bound matches the filter {:?}", b.filter);
                }
                for c in &checks {
                    println!(
                        "{} {:<32} {} | computed {}",
                        if c.holds { "ok  " } else { "FAIL" },
                        c.id,
                        c.claim,
                        c.computed
                    );
                }
                out.write_json("bounds.json", &checks)?;
                let mut w = csv::Writer::from_writer(Vec::new());
                for c in &checks {
                    w.serialize(c)?;
                }
                out.write("bounds.csv", &w.into_inner()?)?;
                let failed: Vec<&str> = checks
                    .iter()
                    .filter(|c| !c.holds)
                    .map(|c| c.id.as_str())
                    .collect();
                if failed.is_empty() {
                    println!("all {} checks hold", checks.len());
                    0
                } else {
                    println!("failed bounds: {}", failed.join(", "));
                    1
                }
            }
            Command::Export { .. } => {
                let spec = cfg.export.clone().expect("export spec resolved above");
                let s = export::export(&spec)?;
                let stem = export::file_stem(spec.series);
                out.write(&format!("{stem}.csv"), s.csv.as_bytes())?;
                out.write_json(&format!("{stem}.plot.json"), &s.plot)?;
                println!("wrote {}/{stem}.csv", out.dir().display());
                0
            }
        };
    out.finish(RunManifest {
        subcommand: cli.command.name().to_string(),
        config_path: cli.config.as_ref().map(|p| p.display().to_string()),
        resolved_config: "config.json".to_string(),
        seed,
        trials: uses_trials.then_some(trials),
        threads: cli.threads,
        output_dir: String::new(),
        artifacts: Vec::new(),
        exit_code: i32::from(code),
        created_unix: 0,
    })?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
