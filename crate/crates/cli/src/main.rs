use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ecoimpact_cli::{cmd_analyze, cmd_compare, cmd_ingest, exit_code, RunConfig, EXIT_INPUT, EXIT_INTERNAL};
use ecoimpact_core::synthetic::{synthetic_records, SyntheticConfig};
use ecoimpact_core::AnalysisConfig;
use ecoimpact_service::{serve, Limits, ServeOptions};

#[derive(Parser)]
#[command(name = "ecoimpact", version, about = "Maintenance-impact analysis for package dependency networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse newline-delimited package records into a snapshot.
    Ingest {
        raw: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        optional: OptionalFlags,
    },
    /// Reach, impact, selections and random baselines.
    Analyze {
        snapshot: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Scorecards for the impact-driven set and external lists, plus the PageRank comparison.
    Compare {
        snapshot: PathBuf,
        /// Files with one package name per line.
        sets: Vec<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
    },
    /// Serve the /v1 JSON API.
    Serve {
        #[arg(long, env = "ECOIMPACT_SNAPSHOT")]
        snapshot: PathBuf,
        #[arg(long, env = "ECOIMPACT_LISTEN", default_value = "127.0.0.1:8080")]
        listen: SocketAddr,
        #[arg(long, env = "ECOIMPACT_MAX_BODY_BYTES", default_value_t = Limits::default().max_body_bytes)]
        max_body_bytes: usize,
        #[arg(long, default_value_t = Limits::default().max_sets)]
        max_sets: usize,
        #[arg(long, default_value_t = Limits::default().max_names_per_set)]
        max_names_per_set: usize,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Write a seeded synthetic ecosystem as newline-delimited records.
    Synth {
        #[arg(long, default_value_t = 5000)]
        packages: usize,
        #[arg(long, default_value_t = 1.5)]
        exponent: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct OptionalFlags {
    /// Keep extra-gated requirements as edges (default).
    #[arg(long, overrides_with = "no_optional")]
    include_optional: bool,
    /// Drop extra-gated requirements.
    #[arg(long)]
    no_optional: bool,
}

#[derive(Args)]
struct ModelFlags {
    #[arg(long, default_value_t = 0.8)]
    tau: f64,
    #[arg(long, default_value_t = 0.85)]
    damping: f64,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Minimum reach for the comparable-reach exclusion rule.
    #[arg(long)]
    reach_threshold: Option<u64>,
}

impl ModelFlags {
    fn config(&self) -> AnalysisConfig {
        AnalysisConfig {
            tau: self.tau,
            damping: self.damping,
            n_trials: self.trials,
            seed: self.seed,
            reach_threshold: self.reach_threshold,
            ..Default::default()
        }
    }
}

#[derive(Args)]
struct RunFlags {
    #[command(flatten)]
    model: ModelFlags,
    #[command(flatten)]
    optional: OptionalFlags,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl RunFlags {
    fn config(&self, snapshot: PathBuf) -> RunConfig {
        RunConfig {
            snapshot_path: snapshot,
            analysis: self.model.config(),
            include_optional: !self.optional.no_optional,
            output_dir: self.out.clone(),
        }
    }
}

fn print(text: &str) {
    let _ = std::io::stdout().write_all(text.as_bytes());
}

fn run(cli: Cli) -> Result<(), (i32, String)> {
    let core = |e: ecoimpact_core::Error| (exit_code(&e), e.to_string());
    match cli.command {
        Command::Ingest { raw, out, optional } => {
            print(&cmd_ingest(&raw, &out, !optional.no_optional).map_err(core)?);
        }
        Command::Analyze { snapshot, run } => {
            print(&cmd_analyze(&run.config(snapshot)).map_err(core)?);
        }
        Command::Compare { snapshot, sets, run } => {
            print(&cmd_compare(&run.config(snapshot), &sets).map_err(core)?);
        }
        Command::Serve {
            snapshot,
            listen,
            max_body_bytes,
            max_sets,
            max_names_per_set,
            model,
        } => {
            let config = model.config();
            config.validate().map_err(core)?;
            let options = ServeOptions {
                listen,
                snapshot,
                config,
                limits: Limits {
                    max_body_bytes,
                    max_sets,
                    max_names_per_set,
                },
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
            eprintln!("listening on {listen}");
            runtime.block_on(serve(options)).map_err(|e| (EXIT_INPUT, e.to_string()))?;
        }
        Command::Synth {
            packages,
            exponent,
            seed,
            out,
        } => {
            let records = synthetic_records(&SyntheticConfig {
                packages,
                exponent,
                seed,
                ..Default::default()
            })
            .map_err(core)?;
            let io = |e: std::io::Error| (EXIT_INPUT, format!("writing {}: {e}", out.display()));
            let mut w = std::io::BufWriter::new(std::fs::File::create(&out).map_err(io)?);
            for r in &records {
                serde_json::to_writer(&mut w, r).map_err(|e| (EXIT_INTERNAL, e.to_string()))?;
                w.write_all(b"\n").map_err(io)?;
            }
            w.flush().map_err(io)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}
