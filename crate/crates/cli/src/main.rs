use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use freightcast::ingest::{fetch_datasets, run_pipeline, HttpFetcher, RunConfig, RunOptions, Stage};
use freightcast::{Error, ErrorKind};

#[derive(Parser)]
#[command(name = "freightcast", version, about = "Counterfactual SARIMA baselines for freight series")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "freightcast.toml")]
    config: PathBuf,
    /// Overrides the seed for synthetic datasets.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Permit downloads of URL datasets that are not cached yet.
    #[arg(long, global = true)]
    allow_network: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit every configured series and save the models.
    Fit,
    /// Run the candidate grids and write the ranking tables.
    Select,
    /// Build every configured scenario.
    Scenario,
    /// Build the scenarios that feed the recovery-pace plot and classify them.
    RecoveryPace,
    /// Unit-root, correlogram, decomposition and residual diagnostics.
    Diagnose,
    /// Download URL datasets into the cache.
    Fetch,
    /// Everything.
    Run,
    /// Write the bundled synthetic CSVs.
    GenerateData {
        #[arg(long, default_value = "data")]
        dir: PathBuf,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let stage = match cli.command {
        Command::Fit => Stage::Fit,
        Command::Select => Stage::Select,
        Command::Scenario => Stage::Scenario,
        Command::RecoveryPace => Stage::RecoveryPace,
        Command::Diagnose => Stage::Diagnose,
        Command::Run => Stage::All,
        Command::Fetch => Stage::All,
        Command::GenerateData { dir } => {
            let seed = cli.seed.unwrap_or(freightcast::synthetic::DEFAULT_SEED);
            freightcast::synthetic::write_bundle(&dir, seed)?;
            println!("wrote synthetic data to {}", dir.display());
            return Ok(());
        }
    };
    let config = RunConfig::load(&cli.config)?;
    let options = RunOptions {
        stage,
        allow_network: cli.allow_network,
        fetch_date: chrono::Local::now().date_naive(),
        fetcher: &HttpFetcher,
        seed: cli.seed,
        jobs: cli.jobs,
        output_dir: cli.out.clone(),
    };
    if matches!(cli.command, Command::Fetch) {
        for (name, n) in fetch_datasets(&config, &options)? {
            println!("{name}: {n} observations");
        }
        return Ok(());
    }
    let (results, tree) = run_pipeline(&config, &options)?;
    for w in &results.warnings {
        eprintln!("warning: {w}");
    }
    let out = cli.out.unwrap_or_else(|| config.output_path());
    println!("wrote {} files to {}", tree.files.len(), out.display());
    for s in &results.series {
        if let (Some(o), Some(m)) = (s.order, &s.model) {
            println!("  {:<16} {o}  AIC {:.2}", s.name, m.aic);
        }
    }
    for s in &results.scenarios {
        let mean = s.outcome.impact.points.iter().filter_map(|p| p.deviation).sum::<f64>()
            / s.outcome.impact.points.len().max(1) as f64;
        println!("  {:<28} mean deviation {:+.1}%", s.name, 100.0 * mean);
    }
    if let Some(r) = &results.recovery {
        for p in &r.points {
            println!("  {:<16} x {:+.3} y {:+.3} region {}", p.name, p.x, p.y, p.region);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
