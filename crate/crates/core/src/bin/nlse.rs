use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nlse::disorder::PerturbationKind;
use nlse::experiment::{self, Preset, RunConfig, RunStatus};
use nlse::Error;

#[derive(Parser, Debug)]
#[command(version, about = "Soliton evolution under disordered cubic nonlinearity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// `section.key = value` configuration file; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Base parameters the config file is applied on top of.
    #[arg(long, value_name = "desk|paper")]
    preset: Option<Preset>,
    /// Output directory (overrides output.directory).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one simulation.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Overrides perturbation.seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run every combination of kinds, amplitudes and seeds.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        kinds: Vec<PerturbationKind>,
        #[arg(long, value_delimiter = ',', required = true)]
        epsilons: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        seeds: Vec<u64>,
    },
    /// Print the resolved configuration and its fingerprint.
    ShowConfig {
        #[command(flatten)]
        common: Common,
    },
}

const EXIT_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_DIVERGED: u8 = 3;

fn load(common: &Common) -> Result<RunConfig, Error> {
    let base = RunConfig::preset(common.preset.unwrap_or(Preset::Paper));
    let text = match &common.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?,
        None => String::new(),
    };
    let mut config = experiment::parse_config_with_base(&text, base)?;
    if let Some(out) = &common.out {
        config.output.directory = out.clone();
    }
    Ok(config)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config { .. } | Error::Syntax { .. } => EXIT_CONFIG,
        Error::Diverged { .. } => EXIT_DIVERGED,
        _ => EXIT_FAILURE,
    }
}

fn entry(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Simulate { common, seed } => {
            let mut config = load(&common)?;
            if let Some(seed) = seed {
                config.perturbation.seed = seed;
            }
            config.validate()?;
            log::info!("config fingerprint {}", config.fingerprint());
            let sim = experiment::run(&config)?;
            let s = &sim.summary;
            println!("status            {}", sim.status.label());
            println!("power drift       {:.3e} (bare sum), {:.3e} relative", s.power_error, s.relative_power_error);
            println!(
                "error report      signed_mean {:.3e}  mean_abs {:.3e}  rms {:.3e}  l_inf {:.3e}",
                s.error_report.signed_mean, s.error_report.mean_abs, s.error_report.rms, s.error_report.l_inf
            );
            println!("peak height       min {:.4}  max {:.4}", s.min_peak_height, s.max_peak_height);
            println!("centroid          {:.4} -> {:.4}", s.initial_centroid, s.final_centroid);
            println!("outputs           {}", config.output.directory.display());
            Ok(match sim.status {
                RunStatus::Completed => 0,
                RunStatus::Diverged { .. } => EXIT_DIVERGED,
            })
        }
        Command::Sweep {
            common,
            kinds,
            epsilons,
            seeds,
        } => {
            let config = load(&common)?;
            let result = experiment::sweep(&config, &kinds, &epsilons, &seeds)?;
            println!("kind            epsilon  seed  power_error  mean_abs     rms          min_peak  status");
            for r in &result.rows {
                println!(
                    "{:<15} {:<8} {:<5} {:<12.3e} {:<12.3e} {:<12.3e} {:<9.4} {}",
                    r.kind, r.epsilon, r.seed, r.power_error, r.mean_abs, r.rms, r.min_peak_height, r.status
                );
            }
            println!("summary: {}", config.output.directory.join("summary.csv").display());
            let diverged = result.rows.iter().any(|r| r.status.starts_with("diverged"));
            Ok(if diverged { EXIT_DIVERGED } else { 0 })
        }
        Command::ShowConfig { common } => {
            let config = load(&common)?;
            print!("{}", config.to_canonical_text());
            println!("# fingerprint {}", config.fingerprint());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match entry(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code(&err))
        }
    }
}
