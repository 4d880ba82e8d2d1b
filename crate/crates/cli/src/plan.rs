//! Single-scenario planning: build one topology, print it, write a JSON
//! report.

use std::path::{Path, PathBuf};

use middlemile::eval::{evaluate_scenario, EvalResult};
use middlemile::lpopt::{build_lp_model, extract_topology, solve_topology};
use middlemile::multihop::{plan_multihop, DEFAULT_MAX_DEGREE};
use middlemile::output::atomic_write;
use middlemile::pmp::{allocate_pmp, build_pmp, PmpAllocation};
use middlemile::radio::LinkMetrics;
use middlemile::scenario::load_scenario;
use middlemile::simplex::model_to_text;
use middlemile::{RadioConfig, Scenario, TopologyChoice};
use serde::Serialize;

use crate::config::RunConfig;

/// Exit code for a multi-hop plan that cannot attach every node.
pub const EXIT_UNREACHABLE: i32 = 2;

#[derive(Debug, Serialize)]
struct EdgeReport {
    from: usize,
    to: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    depth: Option<u32>,
    metrics: LinkMetrics,
    #[serde(skip_serializing_if = "Option::is_none")]
    required_rbs: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rb_set: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rb_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rb_ceil: Option<u32>,
}

#[derive(Debug, Serialize)]
struct PlanReport {
    scenario: String,
    topology: TopologyChoice,
    eval: EvalResult,
    edges: Vec<EdgeReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pmp_allocation: Option<PmpAllocation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    beta: Option<Vec<Vec<f64>>>,
}

fn default_report_path(scenario: &Path, topology: TopologyChoice) -> PathBuf {
    let stem = scenario
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".to_string());
    scenario.with_file_name(format!("{stem}.{topology}.report.json"))
}

pub fn cmd_plan(
    scenario_path: &Path,
    topology: TopologyChoice,
    out: Option<PathBuf>,
    run_cfg: &RunConfig,
    dump_lp: bool,
) -> Result<i32, String> {
    let s = load_scenario(scenario_path).map_err(|e| e.to_string())?;
    let cfg = &run_cfg.radio;
    println!(
        "scenario: {} APs in a {} x {} km area, total demand {:.3} Mbit/s",
        s.n_aps(),
        s.area_km,
        s.area_km,
        s.total_demand_mbps()
    );

    let mut exit_code = 0;
    let (edges, pmp_allocation, beta) = match topology {
        TopologyChoice::Pmp => {
            let (edges, alloc) = plan_pmp(&s, cfg)?;
            (edges, Some(alloc), None)
        }
        TopologyChoice::Mh { max_hops } => {
            let (edges, unreachable) = plan_mh(&s, cfg, max_hops)?;
            if unreachable {
                exit_code = EXIT_UNREACHABLE;
            }
            (edges, None, None)
        }
        TopologyChoice::Lp => {
            let (edges, beta) = plan_lp(&s, cfg, dump_lp)?;
            (edges, None, beta)
        }
    };
    let eval = evaluate_scenario(&s, cfg, topology, run_cfg.lp_alpha_fallback)
        .map_err(|e| e.to_string())?;
    match (eval.feasible, eval.alpha) {
        (true, _) => println!("feasible: yes, all demands served"),
        (false, Some(alpha)) => println!(
            "feasible: no, serving {:.3} of {:.3} Mbit/s (alpha {alpha:.3})",
            eval.served_mbps, eval.total_demand_mbps
        ),
        (false, None) => println!("feasible: no, the band cannot carry the demands"),
    }

    let report = PlanReport {
        scenario: scenario_path.display().to_string(),
        topology,
        eval,
        edges,
        pmp_allocation,
        beta,
    };
    let path = out.unwrap_or_else(|| default_report_path(scenario_path, topology));
    let mut json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    json.push('\n');
    atomic_write(&path, json.as_bytes()).map_err(|e| format!("cannot write report: {e}"))?;
    println!("report: {}", path.display());
    Ok(exit_code)
}

fn plan_pmp(s: &Scenario, cfg: &RadioConfig) -> Result<(Vec<EdgeReport>, PmpAllocation), String> {
    let topo = build_pmp(s, cfg).map_err(|e| e.to_string())?;
    let alloc = allocate_pmp(&topo, s, cfg).map_err(|e| e.to_string())?;
    println!("topology: pmp, every AP attached to the PoP");
    let mut edges = Vec::new();
    for (edge, ap) in topo.edges.iter().zip(&alloc.per_ap) {
        println!(
            "  0 -> {:<3} {:>8.0} m  snr {:>7.2} dB  required {}  allocated {:>3} RBs  served {:.3} Mbit/s",
            edge.to,
            edge.metrics.distance_m,
            edge.metrics.snr_db,
            ap.required
                .count()
                .map_or_else(|| "  -".to_string(), |n| format!("{n:>3}")),
            ap.allocated_rbs,
            ap.served_bps / 1e6,
        );
        edges.push(EdgeReport {
            from: 0,
            to: edge.to,
            depth: None,
            metrics: edge.metrics.clone(),
            required_rbs: ap.required.count(),
            rb_set: None,
            rb_fraction: None,
            rb_ceil: None,
        });
    }
    println!(
        "band: {} of {} RBs required",
        alloc.total_required_rbs, cfg.n_rbs
    );
    Ok((edges, alloc))
}

fn plan_mh(
    s: &Scenario,
    cfg: &RadioConfig,
    max_hops: u32,
) -> Result<(Vec<EdgeReport>, bool), String> {
    let plan = plan_multihop(s, cfg, max_hops, DEFAULT_MAX_DEGREE).map_err(|e| e.to_string())?;
    println!("topology: mh{max_hops}, at most {max_hops} hops and degree {DEFAULT_MAX_DEGREE}");
    let Some(tree) = &plan.tree else {
        println!("  no tree: the hop/degree limits leave at least one AP unattached");
        return Ok((Vec::new(), true));
    };
    let mut edges = Vec::new();
    for (i, edge) in tree.edges.iter().enumerate() {
        let rbs = plan
            .allocation
            .as_ref()
            .map(|a| a.per_edge[i].clone());
        println!(
            "  {} -> {:<3} depth {}  {:>8.0} m  snr {:>7.2} dB  {}",
            edge.from,
            edge.to,
            tree.depth[edge.to],
            edge.metrics.distance_m,
            edge.metrics.snr_db,
            rbs.as_ref()
                .map_or_else(|| "no RBs assigned".to_string(), |r| format!(
                    "{} RBs",
                    r.required_rbs
                )),
        );
        edges.push(EdgeReport {
            from: edge.from,
            to: edge.to,
            depth: Some(tree.depth[edge.to]),
            metrics: edge.metrics.clone(),
            required_rbs: rbs.as_ref().map(|r| r.required_rbs),
            rb_set: rbs.map(|r| r.rb_set),
            rb_fraction: None,
            rb_ceil: None,
        });
    }
    println!("alpha: {:.3}", plan.alpha);
    Ok((edges, false))
}

fn plan_lp(
    s: &Scenario,
    cfg: &RadioConfig,
    dump_lp: bool,
) -> Result<(Vec<EdgeReport>, Option<Vec<Vec<f64>>>), String> {
    if dump_lp {
        let model = build_lp_model(s, cfg).map_err(|e| e.to_string())?;
        print!("{}", model_to_text(&model));
    }
    println!("topology: lp, minimum total link utility");
    let Some(u) = solve_topology(s, cfg).map_err(|e| e.to_string())? else {
        println!("  no solution: every assignment overruns a budget");
        return Ok((Vec::new(), None));
    };
    if dump_lp {
        print!("{}", u.to_text());
    }
    let topo = extract_topology(&u, cfg, s).map_err(|e| e.to_string())?;
    let mut edges = Vec::new();
    let mut objective = 0.0;
    for edge in &topo.edges {
        let beta = u.beta[edge.from][edge.to];
        objective += beta;
        println!(
            "  {} -> {:<3} beta {:.4}  {:.2} RBs (ceil {})",
            edge.from,
            edge.to,
            beta,
            edge.rb_fraction.unwrap_or(0.0),
            edge.rb_ceil.unwrap_or(0),
        );
        edges.push(EdgeReport {
            from: edge.from,
            to: edge.to,
            depth: None,
            metrics: edge.metrics.clone(),
            required_rbs: None,
            rb_set: None,
            rb_fraction: edge.rb_fraction,
            rb_ceil: edge.rb_ceil,
        });
    }
    println!("objective: {objective:.4}");
    Ok((edges, Some(u.beta)))
}
