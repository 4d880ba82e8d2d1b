//! `mmp`: plan and simulate wireless middle mile backhaul networks.
//!
//! Exit codes: 0 for success, including plans whose result is "infeasible";
//! 1 for usage, parse, or config errors; 2 when a multi-hop plan cannot
//! attach every AP within its hop and degree limits.

mod config;
mod plan;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use middlemile::eval::CdfFilter;
use middlemile::output::write_batch_outputs;
use middlemile::scenario::{generate_scenario_with, save_scenario, GenOptions};
use middlemile::{run_batch, TopologyChoice};

use config::{parallelism_from_env, RunConfig};

#[derive(Parser)]
#[command(name = "mmp", version, about = "Wireless middle mile network planner")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random deployment scenario and write it as JSON.
    Gen {
        /// Number of access points; the PoP is added as node 0.
        n_aps: usize,
        /// Side length of the square deployment area in km.
        area_km: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Scenario file to write.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated demand choices in Mbit/s.
        #[arg(
            long = "demand-set",
            value_delimiter = ',',
            default_values_t = vec![2.0, 4.0, 6.0, 8.0, 10.0]
        )]
        demand_set: Vec<f64>,
        /// Pin the PoP to the center of the area instead of a random spot.
        #[arg(long = "pop-center")]
        pop_center: bool,
    },
    /// Build one topology on a scenario file and report the allocation.
    Plan {
        /// Scenario file from `gen`.
        #[arg(long)]
        scenario: PathBuf,
        /// One of pmp, mh2, mh4, lp.
        #[arg(long)]
        topology: String,
        /// Report path; defaults to <scenario stem>.<topology>.report.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Run config JSON supplying radio overrides.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Print the raw LP model and utility matrix (lp only).
        #[arg(long = "dump-lp")]
        dump_lp: bool,
    },
    /// Run a Monte Carlo batch and write CSV outputs.
    Batch {
        /// Run config JSON; defaults reproduce the headline experiment.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory override.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// CDF filter override: all or mutually-feasible.
        #[arg(long)]
        filter: Option<String>,
    },
}

fn main() {
    // Die quietly when a downstream pager closes the pipe instead of
    // panicking on the next print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests land here too; only real usage
            // errors exit nonzero.
            let code = i32::from(e.use_stderr());
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.cmd {
        Cmd::Gen {
            n_aps,
            area_km,
            seed,
            out,
            demand_set,
            pop_center,
        } => cmd_gen(n_aps, area_km, seed, &out, &demand_set, pop_center).map(|()| 0),
        Cmd::Plan {
            scenario,
            topology,
            out,
            config,
            dump_lp,
        } => cmd_plan(&scenario, &topology, out, config.as_deref(), dump_lp),
        Cmd::Batch {
            config,
            out,
            seed,
            filter,
        } => cmd_batch(config.as_deref(), out, seed, filter.as_deref()).map(|()| 0),
    };
    match outcome {
        Ok(code) => code,
        Err(msg) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn cmd_gen(
    n_aps: usize,
    area_km: f64,
    seed: u64,
    out: &std::path::Path,
    demand_set: &[f64],
    pop_center: bool,
) -> Result<(), String> {
    let opts = GenOptions {
        pop_at_center: pop_center,
    };
    let s = generate_scenario_with(n_aps, area_km, demand_set, seed, &opts)
        .map_err(|e| e.to_string())?;
    save_scenario(&s, out).map_err(|e| e.to_string())?;
    println!(
        "wrote {} ({} APs, {} x {} km, seed {})",
        out.display(),
        n_aps,
        area_km,
        area_km,
        seed
    );
    Ok(())
}

fn cmd_plan(
    scenario: &std::path::Path,
    topology: &str,
    out: Option<PathBuf>,
    config: Option<&std::path::Path>,
    dump_lp: bool,
) -> Result<i32, String> {
    let topology: TopologyChoice = topology.parse()?;
    let run_cfg = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    run_cfg
        .radio
        .validate()
        .map_err(|e| format!("config: {e}"))?;
    plan::cmd_plan(scenario, topology, out, &run_cfg, dump_lp)
}

fn cmd_batch(
    config: Option<&std::path::Path>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    filter: Option<&str>,
) -> Result<(), String> {
    let mut run_cfg = match config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        run_cfg.master_seed = seed;
    }
    if let Some(out) = out {
        run_cfg.output_dir = out;
    }
    if let Some(filter) = filter {
        run_cfg.filter = filter.parse::<CdfFilter>()?;
    }
    let par = parallelism_from_env()?;
    let result = run_batch(&run_cfg.batch_config(), par).map_err(|e| e.to_string())?;

    for s in &result.summaries {
        let mean = s
            .mean_served_mbps
            .map_or_else(|| "     -".to_string(), |m| format!("{m:6.2}"));
        println!(
            "{:<4} n={:<2} area={:>5.1} km  feasible {:>5.1}%  mean served {mean} Mbit/s  ({} scenarios)",
            s.topology.to_string(),
            s.n_aps,
            s.area_km,
            s.feasibility_pct,
            s.scenarios
        );
    }
    let written = write_batch_outputs(&run_cfg.output_dir, &result, run_cfg.filter)
        .map_err(|e| e.to_string())?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}
