use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

mod config;
mod error;
mod output;
mod studies;

use config::RunConfig;
use error::RunError;
use output::{Artifact, Manifest, Versions};
use studies::Registry;

#[derive(Parser)]
#[command(name = "magnon-ghz", version, about = "Squeezed-magnon GHZ studies from JSON configs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the single study named in a config file.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Worker threads for studies that run independent trajectories.
        #[arg(long)]
        threads: Option<usize>,
        /// Recorded in the manifest; every current study is deterministic.
        #[arg(long)]
        seed: Option<u64>,
        /// `key.path=value`, applied to the config before validation.
        #[arg(long = "override", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// List the available studies.
    Studies,
}

struct RunArgs<'a> {
    config_path: &'a Path,
    output_dir: Option<&'a Path>,
    threads: Option<usize>,
    seed: Option<u64>,
    overrides: &'a [String],
}

fn run(registry: &Registry, args: RunArgs) -> Result<PathBuf, RunError> {
    let started = SystemTime::now();
    let clock = Instant::now();
    let config = RunConfig::load(args.config_path, args.overrides, &registry.names())?;
    let study = registry.get(&config.study).expect("study names come from the registry");
    let dir = args
        .output_dir
        .map(Path::to_path_buf)
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&config.study));
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| RunError::Config(format!("--threads: {e}")))?;
    }

    let mut artifacts = study.run(&config)?;
    let canonical = serde_json::to_string(&config.resolved).expect("config value serializes");
    let manifest = Manifest {
        study: config.study.clone(),
        config_path: args.config_path.display().to_string(),
        config_sha256: output::sha256_hex(canonical.as_bytes()),
        overrides: args.overrides.to_vec(),
        seed: args.seed,
        threads: args.threads,
        versions: Versions::current(),
        started_unix_s: started.duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        wall_time_s: clock.elapsed().as_secs_f64(),
        files: output::file_entries(&artifacts),
    };
    artifacts.push(Artifact::json("manifest.json", &manifest));
    output::write_all(&dir, &artifacts)?;
    Ok(dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let registry = Registry::new();
    match cli.command {
        Command::Studies => {
            for study in registry.iter() {
                println!("{:<16} {}", study.name(), study.describe());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config, output_dir, threads, seed, overrides } => {
            let args = RunArgs {
                config_path: &config,
                output_dir: output_dir.as_deref(),
                threads,
                seed,
                overrides: &overrides,
            };
            match run(&registry, args) {
                Ok(dir) => {
                    eprintln!("wrote {}", dir.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.exit_code() as u8)
                }
            }
        }
    }
}
