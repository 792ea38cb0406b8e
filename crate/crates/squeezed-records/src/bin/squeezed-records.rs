//! Command-line scenario runner.
//!
//! Exit status is 0 when every embedded check passes, 1 when a check
//! fails and 2 when the run could not be carried out.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use squeezed_records::config::{load_config, Scenario, ScenarioConfig};
use squeezed_records::scenario::run_scenario;

#[derive(Parser, Debug)]
#[command(version, about = "Run a squeezed-records scenario and check it")]
struct Cli {
    /// Scenario to run; overrides the config file.
    #[arg(long, value_enum)]
    scenario: Option<Scenario>,

    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory for data files and the report.
    #[arg(long)]
    out_dir: Option<PathBuf>,

    /// Base random seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads (0 lets the pool choose).
    #[arg(long)]
    workers: Option<usize>,

    /// Multiplier applied to every check tolerance.
    #[arg(long)]
    tolerance_scale: Option<f64>,
}

fn build_config(cli: &Cli) -> squeezed_records::Result<ScenarioConfig> {
    let mut cfg = match (&cli.config, cli.scenario) {
        (Some(path), _) => load_config(path)?,
        (None, Some(s)) => ScenarioConfig::new(s),
        (None, None) => {
            return Err(squeezed_records::Error::Validation(vec![
                "either --scenario or --config is required".into(),
            ]))
        }
    };
    if let Some(s) = cli.scenario {
        cfg.scenario = s;
    }
    if let Some(d) = &cli.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    if let Some(t) = cli.tolerance_scale {
        cfg.tolerance_scale = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let report = match run_scenario(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    println!(
        "scenario {} (config {})",
        report.scenario,
        &report.config_hash[..12]
    );
    for c in &report.checks {
        println!(
            "  [{}] {:<28} value {:.4e}  threshold {:.4e}  {}",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.threshold,
            c.detail
        );
    }
    println!(
        "{} of {} checks passed in {:.2} s; output in {}",
        report.checks.iter().filter(|c| c.passed).count(),
        report.checks.len(),
        report.wall_clock_seconds,
        cfg.out_dir.display()
    );
    if report.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
