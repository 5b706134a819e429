use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use wtoda_cli::config::RunConfig;
use wtoda_cli::output::{json_artifact, write_all, Artifact};
use wtoda_cli::{commands, plot, verify, CliError, CliResult};

#[derive(Parser)]
#[command(name = "wtoda", version, about = "Spherical Whittaker inversion and the quantum Toda lattice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; defaults to `output.dir` from the config, then `.`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write a matplotlib script for the command's table.
    #[arg(long)]
    emit_plot_script: bool,
}

#[derive(Subcommand)]
enum Command {
    /// c(iν) and the Plancherel density on a ν grid.
    Density(Common),
    /// K_ν on an h grid with eigen residuals.
    Whittaker(Common),
    /// Forward transform and reconstruction of a gallery function.
    Transform(Common),
    /// Classical Toda trajectory.
    Toda(Common),
    /// Verification suites; exits 4 if any suite fails.
    Verify(Common),
}

fn configure_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("WTODA_THREADS") {
        let n: usize = v.parse().map_err(|_| CliError::Config(format!("WTODA_THREADS must be a positive integer, got {v:?}")))?;
        if n == 0 {
            return Err(CliError::Config("WTODA_THREADS must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| CliError::Other(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    configure_threads()?;
    let (name, common) = match &cli.command {
        Command::Density(c) => ("density", c),
        Command::Whittaker(c) => ("whittaker", c),
        Command::Transform(c) => ("transform", c),
        Command::Toda(c) => ("toda", c),
        Command::Verify(c) => ("verify", c),
    };
    let cfg = RunConfig::load(&common.config)?;
    let seed = common.seed.or(cfg.seed);
    let out = common.out.clone().or_else(|| cfg.output.dir.clone().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."));
    let start = Instant::now();
    let mut artifacts: Vec<Artifact> = match cli.command {
        Command::Density(_) => commands::density(&cfg)?,
        Command::Whittaker(_) => commands::whittaker(&cfg)?,
        Command::Transform(_) => commands::transform(&cfg)?,
        Command::Toda(_) => commands::toda(&cfg)?,
        Command::Verify(_) => {
            let mut report = verify::run(&cfg, seed)?;
            if cfg.output.record_runtime {
                report.runtime_s = Some(start.elapsed().as_secs_f64());
            }
            for s in &report.suites {
                let status = match (&s.skipped, s.passed) {
                    (Some(_), _) => "SKIP",
                    (None, true) => "PASS",
                    (None, false) => "FAIL",
                };
                println!("{status} {}", s.name);
            }
            let artifacts = vec![json_artifact("verify.json", &report)?];
            if !report.passed {
                write_all(&out, &artifacts)?;
                let failed: Vec<&str> = report.suites.iter().filter(|s| !s.passed).map(|s| s.name.as_str()).collect();
                return Err(CliError::Tolerance(format!("failed suites: {}", failed.join(", "))));
            }
            artifacts
        }
    };
    if common.emit_plot_script {
        let table = match name {
            "density" => "density.csv",
            "whittaker" => "whittaker.csv",
            "transform" => "reconstruction.csv",
            "toda" => "toda.csv",
            _ => "verify.json",
        };
        if name != "verify" {
            artifacts.push(plot::plot_script(name, table));
        }
    }
    write_all(&out, &artifacts)?;
    for a in &artifacts {
        log::info!("wrote {}", out.join(&a.name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("wtoda: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
