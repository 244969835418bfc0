use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gkpsim_experiments::{
    config::SweepConfig, exit_code, run_fig1, run_fig2a, run_fig2b, run_realistic,
    run_sbs_steady, validate, ExperimentError, Result,
};

/// GKP magic-state preparation with a Kerr gate: loss sweeps, error
/// correction pipelines and Wigner panels on a truncated Fock space.
#[derive(Parser)]
#[command(name = "gkpsim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// JSON config file; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory for CSV/JSON/SVG artifacts
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// envelope sizes (repeatable)
    #[arg(long = "delta", value_name = "DELTA")]
    deltas: Vec<f64>,
    /// loss parameters per gate time (repeatable)
    #[arg(long = "gamma", value_name = "GAMMA")]
    gammas: Vec<f64>,
    /// post-selected error-correction rounds (repeatable)
    #[arg(long = "rounds", value_name = "N")]
    rounds: Vec<usize>,
    /// truncation override applied to every delta in this run
    #[arg(long)]
    dim: Option<usize>,
    /// recompute each point at dim + 20 and flag truncation divergence
    #[arg(long)]
    check_truncation: bool,
    /// allow envelopes below 0.2 (dimension-240 runtimes)
    #[arg(long)]
    allow_large_dim: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Wigner panels of the prepared magic states (CSV + SVG)
    Fig1(CommonArgs),
    /// Loss sweep decoded with the perfect-error-detection map
    Fig2a(CommonArgs),
    /// Loss sweep through post-selected error correction, subsystem decoder
    Fig2b(CommonArgs),
    /// Combined noisy-initialization / lossy-gate / noisy-EC scenario
    Realistic(CommonArgs),
    /// Iterate post-selected rounds to the steady state
    SbsSteady {
        #[command(flatten)]
        common: CommonArgs,
        /// trace-distance convergence tolerance
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long, default_value_t = 200)]
        max_rounds: usize,
    },
    /// Run the quick invariant suite and exit
    Validate,
}

fn load_config(common: &CommonArgs) -> Result<SweepConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                ExperimentError::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            SweepConfig::from_json(&text)?
        }
        None => SweepConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if !common.deltas.is_empty() {
        cfg.deltas = common.deltas.clone();
    }
    if !common.gammas.is_empty() {
        cfg.gammas = common.gammas.clone();
    }
    if !common.rounds.is_empty() {
        cfg.n_rounds = common.rounds.clone();
    }
    if let Some(dim) = common.dim {
        cfg.truncation_overrides = cfg.deltas.iter().map(|&d| (d, dim)).collect();
    }
    cfg.check_truncation |= common.check_truncation;
    cfg.allow_large_dim |= common.allow_large_dim;
    cfg.validate()?;
    Ok(cfg)
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Fig1(common) => {
            let cfg = {
                let mut c = load_config(&common)?;
                if common.deltas.is_empty() && common.config.is_none() {
                    c.deltas = vec![0.25];
                }
                c
            };
            let summary = run_fig1(&cfg, &common.out)?;
            println!(
                "fig1 written to {}; gate-output moments: <q> = {:.2e}, <p> = {:.2e}",
                common.out.display(),
                summary.b.mean_q,
                summary.b.mean_p
            );
        }
        Command::Fig2a(common) => {
            let cfg = load_config(&common)?;
            let record = run_fig2a(&cfg)?;
            record.write(&common.out, "fig2a")?;
            println!("fig2a: {} points in {} ms", record.points.len(), record.wall_ms);
        }
        Command::Fig2b(common) => {
            let cfg = load_config(&common)?;
            let record = run_fig2b(&cfg)?;
            record.write(&common.out, "fig2b")?;
            println!("fig2b: {} points in {} ms", record.points.len(), record.wall_ms);
        }
        Command::Realistic(common) => {
            let cfg = {
                let mut c = load_config(&common)?;
                if common.config.is_none() {
                    if common.deltas.is_empty() {
                        c.deltas = vec![0.36];
                    }
                    if common.gammas.is_empty() {
                        c.gammas = vec![1e-2];
                    }
                    if common.rounds.is_empty() {
                        c.n_rounds = vec![30];
                    }
                    c.confusion = (1e-3, 0.0);
                }
                c
            };
            let record = run_realistic(&cfg)?;
            record.write(&common.out, "realistic")?;
            for p in &record.points {
                println!(
                    "realistic [{}]: fidelity {:.4}, success {:.3}",
                    p.flags, p.fidelity, p.success_prob
                );
            }
        }
        Command::SbsSteady { common, tol, max_rounds } => {
            let cfg = load_config(&common)?;
            let record = run_sbs_steady(&cfg, tol, max_rounds)?;
            record.write(&common.out, "sbs_steady")?;
            for note in &record.notes {
                println!("{note}");
            }
        }
        Command::Validate => {
            let ok = validate(&mut std::io::stdout())?;
            if !ok {
                return Err(ExperimentError::Core(gkpsim_core::CoreError::InvalidParameter {
                    name: "validate",
                    reason: "one or more invariant checks failed".into(),
                }));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err) as u8)
        }
    }
}
