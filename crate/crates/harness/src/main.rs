use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mvhl_harness::experiments::{run_channel_demo, run_diagnose, run_generate, run_noise_sweep, run_phase_transition, run_recover};
use mvhl_harness::records::Summary;
use mvhl_harness::{ExperimentConfig, ExperimentKind, PartialConfig, Result};

#[derive(Parser)]
#[command(name = "mvhl", version, about = "Blind demixing and super-resolution experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Success rate over an (s, r) grid.
    PhaseTransition(Common),
    /// Mean relative error against the noise level.
    NoiseSweep(Common),
    /// Delay-Doppler demixing with 2D MUSIC.
    ChannelDemo(Common),
    /// Solve an instance file.
    Recover {
        /// Instance file (see `generate`).
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Certificate diagnostics on seeded instances.
    Diagnose(Common),
    /// Write a seeded instance file with ground truth.
    Generate(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write SVG plots (default).
    #[arg(long, overrides_with = "no_svg")]
    svg: bool,
    /// Skip SVG plots.
    #[arg(long)]
    no_svg: bool,
    #[command(flatten)]
    overrides: PartialConfig,
}

impl Common {
    fn resolve(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let mut overrides = self.overrides.clone();
        if self.no_svg {
            overrides.svg = Some(false);
        } else if self.svg {
            overrides.svg = Some(true);
        }
        ExperimentConfig::resolve(kind, self.config.as_deref(), &overrides)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |x| format!("{x:.3e}"))
}

fn print_summaries(rows: &[Summary]) {
    println!("{:>5} {:>3} {:>5} {:>9} {:>9} {:>11} {:>11}", "n", "s", "r", "eps", "success", "mean_err", "max_tau_err");
    for s in rows {
        println!(
            "{:>5} {:>3} {:>5} {:>9.1e} {:>4}/{:<4} {:>11} {:>11}",
            s.n,
            s.s,
            s.r,
            s.eps,
            s.successes,
            s.trials,
            fmt_opt(s.mean_rel_error),
            fmt_opt(s.max_tau_error)
        );
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::PhaseTransition(c) => {
            let cfg = c.resolve(ExperimentKind::PhaseTransition)?;
            print_summaries(&run_phase_transition(&cfg)?.summaries);
            println!("wrote {}", cfg.out.display());
        }
        Command::NoiseSweep(c) => {
            let cfg = c.resolve(ExperimentKind::NoiseSweep)?;
            print_summaries(&run_noise_sweep(&cfg)?.summaries);
            println!("wrote {}", cfg.out.display());
        }
        Command::ChannelDemo(c) => {
            let cfg = c.resolve(ExperimentKind::ChannelDemo)?;
            let out = run_channel_demo(&cfg)?;
            print_summaries(&out.summaries);
            for e in &out.estimates {
                println!(
                    "trial {} channel {} source {}: true ({:.4}, {:.4}) est ({}, {}) err {} {}",
                    e.trial,
                    e.channel,
                    e.source,
                    e.true_tau,
                    e.true_nu,
                    fmt_opt(e.est_tau),
                    fmt_opt(e.est_nu),
                    fmt_opt(e.error),
                    if e.matched { "matched" } else { "UNMATCHED" }
                );
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Recover { input, common } => {
            let cfg = common.resolve(ExperimentKind::Recover)?;
            let out = run_recover(&input, &cfg)?;
            println!(
                "iterations {} converged {} objective {:.6e} feasibility {:.3e} rel_error {}",
                out.result.iterations,
                out.result.converged,
                out.result.objective,
                out.result.feasibility,
                fmt_opt(out.rel_error)
            );
            for (k, locs) in out.locations.iter().enumerate() {
                let text: Vec<String> = locs.iter().map(|(t, v)| format!("({t:.6}, {v:.6})")).collect();
                println!("channel {}: {}", k + 1, text.join(" "));
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Diagnose(c) => {
            let cfg = c.resolve(ExperimentKind::Diagnose)?;
            let out = run_diagnose(&cfg)?;
            for row in &out.certificates {
                if !row.error.is_empty() {
                    println!("n {} s {} r {} trial {}: {}", row.n, row.s, row.r, row.trial, row.error);
                    continue;
                }
                println!(
                    "n {} s {} r {} trial {}: mu0 {} mu1 {} conc {} cross {} cond_f {} cond_op {} gap {} range {}",
                    row.n,
                    row.s,
                    row.r,
                    row.trial,
                    fmt_opt(row.mu0),
                    fmt_opt(row.mu1_max),
                    fmt_opt(row.concentration_max),
                    fmt_opt(row.cross_mu),
                    fmt_opt(row.cond_f_max),
                    fmt_opt(row.cond_op_max),
                    fmt_opt(row.recursion_gap),
                    fmt_opt(row.range_residual)
                );
            }
            println!("wrote {}", cfg.out.display());
        }
        Command::Generate(c) => {
            let cfg = c.resolve(ExperimentKind::Generate)?;
            println!("wrote {}", run_generate(&cfg)?.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
