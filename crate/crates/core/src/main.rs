use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fairshift::harness::{
    emit_report, parse_kv, report_from_dir, run_bound_comparison, run_synthetic,
    run_transfer_sweep, ExperimentConfig, Manifest, Tables,
};
use fairshift::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "fairshift", version, about = "Fairness transfer experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Master seed; every trial seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: out/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// 10,000 steps and 30 trials instead of 2,000 and 10.
    #[arg(long, global = true)]
    paper_scale: bool,
    /// key = value settings file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Trials run concurrently.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory holding adult/ and compas/.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Also write per-run wall-clock seconds to timing.csv.
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Source-trained linear classifiers on shifted Gaussian domains.
    Synth {
        #[arg(long, allow_hyphen_values = true)]
        c_grid: Option<String>,
    },
    /// Observed target Δ_EOP against the composed bound on the synthetic domains.
    Bound {
        #[arg(long, allow_hyphen_values = true)]
        c_grid: Option<String>,
    },
    /// Real-data transfer sweep over arrangements, head weights and target sizes.
    Sweep {
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long)]
        source: Option<String>,
        #[arg(long)]
        target: Option<String>,
        #[arg(long)]
        n_target: Option<String>,
        #[arg(long)]
        weights: Option<String>,
        #[arg(long)]
        arrangements: Option<String>,
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Regenerate summary and plot tables from an earlier run's CSVs.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

fn overrides(cli: &Cli) -> BTreeMap<String, String> {
    let mut kv = BTreeMap::new();
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            kv.insert(k.to_string(), v);
        }
    };
    put("seed", cli.seed.map(|s| s.to_string()));
    put("paper_scale", cli.paper_scale.then(|| "true".into()));
    put("jobs", cli.jobs.map(|j| j.to_string()));
    put(
        "data_dir",
        cli.data_dir.as_ref().map(|d| d.display().to_string()),
    );
    put("trials", cli.trials.map(|t| t.to_string()));
    match &cli.command {
        Command::Synth { c_grid } | Command::Bound { c_grid } => put("c_grid", c_grid.clone()),
        Command::Sweep {
            dataset,
            source,
            target,
            n_target,
            weights,
            arrangements,
            steps,
        } => {
            put("dataset", dataset.clone());
            put("source", source.clone());
            put("target", target.clone());
            put("n_target", n_target.clone());
            put("weights", weights.clone());
            put("arrangements", arrangements.clone());
            put("steps", steps.map(|s| s.to_string()));
        }
        Command::Report { .. } => {}
    }
    kv
}

fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    let name = match cli.command {
        Command::Synth { .. } => "synth",
        Command::Bound { .. } => "bound",
        Command::Sweep { .. } => "sweep",
        Command::Report { .. } => "report",
    };
    let out = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(name));
    if let Command::Report { input } = &cli.command {
        return report_from_dir(input, &out);
    }
    let mut cfg = ExperimentConfig::default();
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        cfg.apply(&parse_kv(&text)?)?;
    }
    cfg.apply(&overrides(cli))?;
    let tables = match cli.command {
        Command::Synth { .. } => Tables {
            results: run_synthetic(&cfg)?,
            bound: Vec::new(),
        },
        Command::Bound { .. } => Tables {
            results: Vec::new(),
            bound: run_bound_comparison(&cfg)?,
        },
        Command::Sweep { .. } => Tables {
            results: run_transfer_sweep(&cfg)?,
            bound: Vec::new(),
        },
        Command::Report { .. } => unreachable!("handled above"),
    };
    let manifest = Manifest {
        command: name.into(),
        config: cfg.to_kv(),
    };
    emit_report(&tables, &manifest, &out, cli.timing)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
