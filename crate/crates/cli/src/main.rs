use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use haptic_suction_cli::artifact::num;
use haptic_suction_cli::commands::{self, Artifact, RunContext};
use haptic_suction_cli::config::DEFAULT_TOML;
use haptic_suction_cli::{resolve_output_dir, OUTPUT_DIR_ENV};

/// Simulated four-chamber suction cup: calibration sweeps, bin-picking
/// trials, and artifact replay.
#[derive(Parser)]
#[command(name = "haptic-suction", version)]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Half-plane edge sweep over lateral offset and yaw.
    CharacterizeEdge(RunArgs),
    /// Dome pivot sweep over rotational offset.
    CharacterizeDome(RunArgs),
    /// Bin-picking trials for every configured search mode.
    Binpick(RunArgs),
    /// Regenerate artifacts from their embedded config and compare.
    Replay {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config; the shipped defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Artifact directory; overrides the environment and the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl RunArgs {
    fn context(&self) -> Result<RunContext> {
        match &self.config {
            Some(p) => RunContext::from_path(p, self.seed),
            None => RunContext::from_text(DEFAULT_TOML, self.seed),
        }
    }

    fn write(&self, ctx: &RunContext, artifacts: &[Artifact]) -> Result<()> {
        let env = std::env::var(OUTPUT_DIR_ENV).ok();
        let dir = resolve_output_dir(
            self.output_dir.as_deref(),
            env.as_deref(),
            ctx.config.output_dir.as_deref(),
        );
        for p in commands::write_artifacts(&dir, artifacts)? {
            println!("wrote {}", p.display());
        }
        Ok(())
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_else(|| "-".into())
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure worker threads")?;
    }
    match cli.command {
        Command::CharacterizeEdge(args) => {
            let ctx = args.context()?;
            let run = commands::characterize_edge(&ctx)?;
            println!("delta_mm  mean_e_deg  indistinguishable_rate");
            for s in &run.summary {
                println!(
                    "{:>8.1}  {:>10}  {}",
                    s.delta * 1e3,
                    opt(s.mean_e_deg.map(|e| (e * 100.0).round() / 100.0)),
                    num(s.indistinguishable_rate)
                );
            }
            args.write(&ctx, &run.artifacts)?;
        }
        Command::CharacterizeDome(args) => {
            let ctx = args.context()?;
            let run = commands::characterize_dome(&ctx)?;
            println!("radius  critical_deg  max_abs_dp_we_pre_seal");
            for s in &run.summary {
                println!(
                    "{:>6}  {:>12}  {}",
                    s.radius.map(num).unwrap_or_else(|| "flat".into()),
                    opt(s.critical_deg),
                    num(s.max_abs_dp_we_pre_seal)
                );
            }
            args.write(&ctx, &run.artifacts)?;
        }
        Command::Binpick(args) => {
            let ctx = args.context()?;
            let run = commands::binpick(&ctx)?;
            println!("mode  trials  mean_picks  std_picks");
            for m in &run.plan.modes {
                let picks = run.picks(*m);
                println!(
                    "{}  {}  {}  {}",
                    m.label(),
                    picks.len(),
                    num(haptic_suction::binpick::trial::mean(&picks)),
                    num(haptic_suction::binpick::trial::sample_std(&picks))
                );
            }
            args.write(&ctx, &run.artifacts)?;
        }
        Command::Replay { paths } => {
            let mut ok = true;
            for r in commands::replay(&paths)? {
                match r.divergence {
                    None => println!("match    {} ({})", r.path.display(), r.kind),
                    Some(d) => {
                        ok = false;
                        println!(
                            "mismatch {} ({}) at line {}",
                            r.path.display(),
                            r.kind,
                            d.line
                        );
                        println!(
                            "  expected: {}",
                            d.expected.as_deref().unwrap_or("<end of file>")
                        );
                        println!(
                            "  found:    {}",
                            d.found.as_deref().unwrap_or("<end of file>")
                        );
                    }
                }
            }
            if !ok {
                return Ok(ExitCode::from(1));
            }
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
