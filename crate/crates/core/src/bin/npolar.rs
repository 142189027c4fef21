use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nested_polar::harness::{self, RunOptions};

#[derive(Parser)]
#[command(
    name = "npolar",
    version,
    about = "Simulate nested polar codes over finite Abelian groups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Design the codes of every grid point and write them as JSON.
    Design(Common),
    /// Design (or load from cache) and simulate every grid point.
    Run(Common),
    /// Print the information-theoretic rates of every grid point.
    Rates(Common),
    /// Check degradation certificates and capacity identities.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    /// Experiment file (TOML).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `key=value` applied to the experiment file before validation.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn options(&self) -> RunOptions {
        RunOptions {
            seed: self.seed,
            workers: self.workers,
            out: self.out.clone(),
            overrides: self.overrides.clone(),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("npolar: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> nested_polar::Result<bool> {
    match cli.cmd {
        Cmd::Design(c) => {
            let opts = c.options();
            let exp = harness::load_experiment(&c.config, &opts)?;
            for (k, codes) in harness::design_experiment(&c.config, &opts, true)? {
                for code in codes {
                    println!(
                        "point {k} {}: N = {}, rate = {:.4}, message symbols = {}",
                        code.tag,
                        code.len(),
                        code.rate(),
                        code.message_indices().len()
                    );
                }
            }
            println!("codes written to {}", exp.out.display());
            Ok(true)
        }
        Cmd::Run(c) => {
            let summary = harness::run_experiment(&c.config, &c.options())?;
            for r in &summary.results {
                match &r.report {
                    Ok(rep) => {
                        let metrics: Vec<String> = rep
                            .metrics
                            .iter()
                            .map(|(k, e)| format!("{k}={:.4}", e.mean))
                            .collect();
                        println!(
                            "point {} {} N={}: rate gap {:.4}; {}",
                            r.index,
                            rep.scenario,
                            rep.block_length,
                            rep.max_rate_gap(),
                            metrics.join(" ")
                        );
                    }
                    Err(e) => println!("point {} FAILED: {e}", r.index),
                }
            }
            println!("results in {}", summary.out.display());
            Ok(summary.failures() == 0)
        }
        Cmd::Rates(c) => {
            for (p, rates) in harness::rates_experiment(&c.config, &c.options())? {
                let r: Vec<String> = rates.iter().map(|(k, v)| format!("{k}={v:.6}")).collect();
                println!("point {} {}: {}", p.index, p.config.scenario, r.join(" "));
            }
            Ok(true)
        }
        Cmd::Verify(c) => {
            let checks = harness::verify_experiment(&c.config, &c.options())?;
            for ch in &checks {
                println!(
                    "{} point {} {}: {}",
                    if ch.passed { "PASS" } else { "FAIL" },
                    ch.point,
                    ch.name,
                    ch.detail
                );
            }
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}
