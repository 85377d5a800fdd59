use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use losstol_cli::config::{load_config, load_policy_file, Method, SweepSpec, SweepVariable};
use losstol_cli::report::{report, write_plot_data};
use losstol_cli::runner::{run_experiment, write_csv, ResultRow, CSV_HEADER};

#[derive(Parser)]
#[command(
    name = "losstol",
    about = "Energy-minimal transmit power policies for loss-tolerant links",
    version
)]
struct Cli {
    /// Override the config's base RNG seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the config's output path.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Exit nonzero when any requested point is infeasible.
    #[arg(long, global = true)]
    strict: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured parameter sweep and write a CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Also emit two-column .dat files per method for plotting.
        #[arg(long)]
        plot_data: bool,
    },
    /// Solve the single configured point with every selected method.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Simulate a policy file and print its empirical statistics.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Policy file (one outage probability per line); defaults to the
        /// config's policy_file.
        #[arg(long)]
        policy: Option<PathBuf>,
        /// Override the config's slot count.
        #[arg(long)]
        slots: Option<u64>,
    },
    /// Run the exhaustive grid-search optimum (N <= 3).
    Oracle {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's grid resolution.
        #[arg(long)]
        resolution: Option<f64>,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Sweep { config, plot_data } => {
            let mut cfg = load_config(&config)?;
            apply_seed(&mut cfg, cli.seed);
            let rows = run_experiment(&cfg)?;
            let out = cli
                .out
                .clone()
                .or_else(|| cfg.output_path.clone())
                .context("no output path: set output in the config or pass --out")?;
            write_csv(&rows, &out)?;
            print!("{}", report(&rows));
            println!("wrote {}", out.display());
            if plot_data {
                for path in write_plot_data(&rows, &out)? {
                    println!("wrote {}", path.display());
                }
            }
            Ok(exit_for(&rows, cli.strict))
        }
        Command::Solve { config } => {
            let mut cfg = load_config(&config)?;
            apply_seed(&mut cfg, cli.seed);
            // a solve is a one-point sweep at the configured eps_out
            cfg.sweep = Some(SweepSpec {
                variable: SweepVariable::EpsOut,
                grid: vec![cfg.constraints.eps_out()],
            });
            let rows = run_experiment(&cfg)?;
            match &cli.out {
                Some(path) => {
                    write_csv(&rows, path)?;
                    println!("wrote {}", path.display());
                }
                None => print_rows(&rows),
            }
            print!("{}", report(&rows));
            Ok(exit_for(&rows, cli.strict))
        }
        Command::Simulate {
            config,
            policy,
            slots,
        } => {
            let mut cfg = load_config(&config)?;
            apply_seed(&mut cfg, cli.seed);
            let policy_path = policy
                .or_else(|| cfg.policy_file.clone())
                .context("no policy file: pass --policy or set policy_file in the config")?;
            let policy = load_policy_file(&policy_path)?;
            let slots = slots.unwrap_or(cfg.sim_slots);
            let stats = losstol::simulate_policy(&policy, &cfg.model, slots, cfg.seed)?;
            let record = stats.flat_record();
            let header: Vec<&str> = record.iter().map(|(k, _)| *k).collect();
            let values: Vec<&str> = record.iter().map(|(_, v)| v.as_str()).collect();
            let body = format!("{}\n{}\n", header.join(","), values.join(","));
            match &cli.out {
                Some(path) => {
                    std::fs::write(path, body)
                        .with_context(|| format!("cannot write {}", path.display()))?;
                    println!("wrote {}", path.display());
                }
                None => print!("{body}"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle { config, resolution } => {
            let mut cfg = load_config(&config)?;
            apply_seed(&mut cfg, cli.seed);
            if let Some(res) = resolution {
                cfg.oracle_resolution = res;
            }
            cfg.methods = vec![Method::Oracle];
            cfg.sweep = Some(SweepSpec {
                variable: SweepVariable::EpsOut,
                grid: vec![cfg.constraints.eps_out()],
            });
            let rows = run_experiment(&cfg)?;
            match &cli.out {
                Some(path) => {
                    write_csv(&rows, path)?;
                    println!("wrote {}", path.display());
                }
                None => print_rows(&rows),
            }
            Ok(exit_for(&rows, cli.strict))
        }
    }
}

fn apply_seed(cfg: &mut losstol_cli::ExperimentConfig, seed: Option<u64>) {
    if let Some(seed) = seed {
        cfg.seed = seed;
        cfg.sa.seed = seed;
    }
}

fn print_rows(rows: &[ResultRow]) {
    println!("{}", CSV_HEADER.join(","));
    for row in rows {
        println!("{}", row.to_record().join(","));
    }
}

fn exit_for(rows: &[ResultRow], strict: bool) -> ExitCode {
    if strict && rows.iter().any(|r| !r.feasible) {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
