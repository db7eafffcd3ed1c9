use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fksep_core::harness::{
    acceptance_suite_reporting, provenance, rows_to_csv, AcceptanceOptions, Experiment,
    ExperimentConfig, RunMetadata, RunRecord,
};
use fksep_core::Error;

#[derive(Parser)]
#[command(name = "fksep", version, about = "Feynman-Kac separation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key = value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for the CSV table and JSON sidecar
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Override any configuration key, e.g. --set beta=1.5 (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Emit the boundary, fit its box-counting dimension, probe regularity
    Geometry(Common),
    /// Shell occupation times and their quadrature oracle
    Occupation(Common),
    /// Paley-Zygmund check of the shell occupations
    Pz(Common),
    /// Growth of the truncated functional in A
    Divergence(Common),
    /// Perturbed kernel through bridges
    Kernel(Common),
    /// Mass carried across the boundary, per truncation level
    Crossing(Common),
    /// Crossing masses and their decay rate in A
    Decay(Common),
    /// Boundary exponent of harmonic measure
    Harmonic(Common),
    /// Finiteness of the potential convolved with the time-integrated kernel
    Positivity(Common),
    /// Run the acceptance suite
    Accept {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "fast")]
        tier: String,
        /// Comma-separated criterion numbers to run
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u32>>,
        /// RNG reference fixture to check against
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
}

fn build_config(experiment: Experiment, c: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.experiment = experiment;
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::Validation(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k, v)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    Ok(cfg)
}

fn init_pool(workers: Option<usize>) -> Result<(), Error> {
    if let Some(n) = workers {
        if n == 0 {
            return Err(Error::Validation("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Validation(format!("cannot start {n} workers: {e}")))?;
    }
    Ok(())
}

fn accept(common: &Common, tier: &str, only: Option<Vec<u32>>, fixture: Option<PathBuf>) -> Result<bool, Error> {
    let mut cfg = build_config(Experiment::Acceptance, common)?;
    cfg.tier = tier.parse()?;
    cfg.validate()?;
    let mut opts = AcceptanceOptions {
        tier: cfg.tier,
        seed: cfg.seed,
        only,
        ..Default::default()
    };
    if let Some(f) = fixture {
        opts.fixture = f;
    }
    let start = std::time::Instant::now();
    let report = acceptance_suite_reporting(&opts, &mut |line| println!("{line}"));
    let rows = report.rows();
    let mut rec = RunRecord {
        metadata: RunMetadata {
            config: cfg.clone(),
            provenance: provenance(cfg.seed),
            wall_time_s: start.elapsed().as_secs_f64(),
            csv_file: String::new(),
            rows: rows.len(),
        },
        rows,
        csv_path: Default::default(),
        json_path: Default::default(),
    };
    rec.write(&cfg.out, "acceptance")?;
    let failed = report.failed_ids();
    println!(
        "{} of {} criteria passed ({:.0}% executed, tier {}); table: {}",
        report.items.len() - failed.len(),
        report.items.len(),
        100.0 * report.executed_fraction(),
        opts.tier,
        rec.csv_path.display()
    );
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, common) = match &cli.command {
        Command::Geometry(c) => (Experiment::Geometry, c),
        Command::Occupation(c) => (Experiment::Occupation, c),
        Command::Pz(c) => (Experiment::Pz, c),
        Command::Divergence(c) => (Experiment::Divergence, c),
        Command::Kernel(c) => (Experiment::Kernel, c),
        Command::Crossing(c) => (Experiment::Crossing, c),
        Command::Decay(c) => (Experiment::Decay, c),
        Command::Harmonic(c) => (Experiment::Harmonic, c),
        Command::Positivity(c) => (Experiment::Positivity, c),
        Command::Accept { common, .. } => (Experiment::Acceptance, common),
    };
    if let Err(e) = init_pool(common.workers) {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    let result = match &cli.command {
        Command::Accept {
            common,
            tier,
            only,
            fixture,
        } => accept(common, tier, only.clone(), fixture.clone()).map(|ok| if ok { 0 } else { 2 }),
        _ => build_config(experiment, common)
            .and_then(|cfg| fksep_core::harness::run_experiment(&cfg))
            .map(|rec| {
                print!("{}", rows_to_csv(&rec.rows));
                eprintln!(
                    "wrote {} and {} ({:.1} s)",
                    rec.csv_path.display(),
                    rec.json_path.display(),
                    rec.metadata.wall_time_s
                );
                0
            }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
