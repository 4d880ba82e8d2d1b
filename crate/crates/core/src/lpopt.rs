//! LP-optimal topology construction.
//!
//! Every ordered node pair (i, j) gets a utility variable beta_ij, the
//! fraction of the RB pool node i spends transmitting to node j. Minimizing
//! the total utility subject to per-AP flow conservation and unit transmit
//! and receive budgets per node yields the cheapest topology the band can
//! carry; multiplying beta by the pool size turns the solution into an RB
//! allocation per link.

use std::fmt::Write as _;

use thiserror::Error;

use crate::eval::{EvalResult, TopologyChoice};
use crate::multihop::ALPHA_PRECISION;
use crate::radio::{link_metrics, RadioConfig, RadioError};
use crate::scenario::Scenario;
use crate::simplex::{solve, Constraint, LpError, LpModel, LpStatus, Relation};
use crate::topology::{Topology, TopologyEdge, TopologyKind};

/// Utilities below this are treated as zero when extracting edges.
pub const BETA_EDGE_TOL: f64 = 1e-6;

/// Subtracted before ceiling so products like 0.2 * 100, which land a few
/// ulps above the exact integer, round to it instead of one past it.
const CEIL_GUARD: f64 = 1e-9;

/// Link utilities from a solved model: `beta[i][j]` is the band fraction
/// node i transmits to node j. Diagonal entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    pub beta: Vec<Vec<f64>>,
}

impl UtilityMatrix {
    pub fn n_nodes(&self) -> usize {
        self.beta.len()
    }

    /// Labeled matrix dump, rows = transmitter, columns = receiver.
    pub fn to_text(&self) -> String {
        let n = self.n_nodes();
        let mut out = String::from("beta (row transmits to column)\n");
        out.push_str("        ");
        for j in 0..n {
            let _ = write!(out, " {j:>8}");
        }
        out.push('\n');
        for (i, row) in self.beta.iter().enumerate() {
            let _ = write!(out, "node {i:>3}");
            for v in row {
                let _ = write!(out, " {v:>8.6}");
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum LpOptError {
    #[error("solver reported unbounded on a model bounded below by zero")]
    UnboundedInternal,
    #[error("invalid utility matrix: {0}")]
    InvalidUtility(String),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Solver(#[from] LpError),
}

/// Full-band capacity of every directed link, in Mbit/s. `caps[i][j]` is
/// the rate from i to j with the whole pool; the diagonal is zero.
pub fn full_band_capacities_mbps(
    s: &Scenario,
    cfg: &RadioConfig,
) -> Result<Vec<Vec<f64>>, RadioError> {
    let n = s.nodes.len();
    let mut caps = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let m = link_metrics(&s.nodes[i], &s.nodes[j], cfg)?;
            let mbps = m.capacity_bps / 1e6;
            caps[i][j] = mbps;
            caps[j][i] = mbps;
        }
    }
    Ok(caps)
}

/// Column index of beta_ij among ordered pairs in row-major order with the
/// diagonal skipped.
fn var_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j && i < n && j < n);
    i * (n - 1) + j - usize::from(j > i)
}

fn build_scaled(s: &Scenario, cfg: &RadioConfig, demand_scale: f64) -> Result<LpModel, LpOptError> {
    let n = s.nodes.len();
    let n_vars = n * (n - 1);
    let caps = full_band_capacities_mbps(s, cfg)?;

    // Flow rows for every AP, then transmit budgets, then receive budgets.
    // Coefficients and demands stay in Mbit/s so the constraint matrix mixes
    // order-of-ten capacities with order-one budgets instead of order-1e7
    // against 1.
    let mut constraints = Vec::with_capacity(3 * n - 1);
    for i in 1..n {
        let mut coeffs = vec![0.0; n_vars];
        for j in 0..n {
            if j == i {
                continue;
            }
            coeffs[var_index(n, j, i)] += caps[j][i];
            coeffs[var_index(n, i, j)] -= caps[i][j];
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Ge,
            rhs: s.nodes[i].demand_mbps * demand_scale,
        });
    }
    for i in 0..n {
        let mut coeffs = vec![0.0; n_vars];
        for j in 0..n {
            if j != i {
                coeffs[var_index(n, i, j)] = 1.0;
            }
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: 1.0,
        });
    }
    for j in 0..n {
        let mut coeffs = vec![0.0; n_vars];
        for i in 0..n {
            if i != j {
                coeffs[var_index(n, i, j)] = 1.0;
            }
        }
        constraints.push(Constraint {
            coeffs,
            relation: Relation::Le,
            rhs: 1.0,
        });
    }

    Ok(LpModel {
        n_vars,
        objective: vec![1.0; n_vars],
        constraints,
        bounds: vec![(0.0, 1.0); n_vars],
    })
}

/// Builds the topology LP for a scenario: minimize total link utility
/// subject to flow conservation at every AP and unit transmit and receive
/// budgets at every node.
pub fn build_lp_model(s: &Scenario, cfg: &RadioConfig) -> Result<LpModel, LpOptError> {
    build_scaled(s, cfg, 1.0)
}

fn solve_scaled(
    s: &Scenario,
    cfg: &RadioConfig,
    demand_scale: f64,
) -> Result<Option<(UtilityMatrix, f64)>, LpOptError> {
    let model = build_scaled(s, cfg, demand_scale)?;
    let sol = solve(&model)?;
    match sol.status {
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(LpOptError::UnboundedInternal),
        LpStatus::Optimal => {
            let n = s.nodes.len();
            let mut beta = vec![vec![0.0; n]; n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        beta[i][j] = sol.x[var_index(n, i, j)].clamp(0.0, 1.0);
                    }
                }
            }
            Ok(Some((UtilityMatrix { beta }, sol.objective_value)))
        }
    }
}

/// Solves the topology LP. `None` means no topology can carry the demands.
pub fn solve_topology(
    s: &Scenario,
    cfg: &RadioConfig,
) -> Result<Option<UtilityMatrix>, LpOptError> {
    Ok(solve_scaled(s, cfg, 1.0)?.map(|(u, _)| u))
}

/// Converts utilities to an edge list with RB annotations. Edges are the
/// pairs with beta above `BETA_EDGE_TOL`, in row-major order; each carries
/// the fractional allocation beta * n_rbs and its rounded-up integer.
pub fn extract_topology(
    u: &UtilityMatrix,
    cfg: &RadioConfig,
    s: &Scenario,
) -> Result<Topology, LpOptError> {
    let n = s.nodes.len();
    if u.beta.len() != n || u.beta.iter().any(|row| row.len() != n) {
        return Err(LpOptError::InvalidUtility(format!(
            "matrix shape does not match the {n}-node scenario"
        )));
    }
    for (i, row) in u.beta.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if !v.is_finite() || !(-BETA_EDGE_TOL..=1.0 + BETA_EDGE_TOL).contains(&v) {
                return Err(LpOptError::InvalidUtility(format!(
                    "beta[{i}][{j}] = {v} is outside [0, 1]"
                )));
            }
        }
    }
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i == j || u.beta[i][j] <= BETA_EDGE_TOL {
                continue;
            }
            let metrics = link_metrics(&s.nodes[i], &s.nodes[j], cfg)?;
            let mut edge = TopologyEdge::new(i, j, metrics);
            let rbs = u.beta[i][j] * f64::from(cfg.n_rbs);
            edge.rb_fraction = Some(rbs);
            edge.rb_ceil = Some((rbs - CEIL_GUARD).ceil().max(0.0) as u32);
            edges.push(edge);
        }
    }
    Ok(Topology {
        kind: TopologyKind::LpOptimal,
        edges,
    })
}

/// Evaluates the LP topology on a scenario. Infeasible scenarios report
/// zero served load and no alpha, leaving them out of served-load
/// aggregation; with `alpha_fallback` they instead get the largest uniform
/// demand scale the LP can carry, bisected to the same precision as the
/// multi-hop planner.
pub fn evaluate_lp(
    s: &Scenario,
    cfg: &RadioConfig,
    alpha_fallback: bool,
) -> Result<EvalResult, LpOptError> {
    let total_demand = s.total_demand_mbps();
    let demands: Vec<f64> = s.aps().iter().map(|n| n.demand_mbps).collect();
    if solve_scaled(s, cfg, 1.0)?.is_some() {
        return Ok(EvalResult {
            scenario_seed: s.seed,
            topology: TopologyChoice::Lp,
            feasible: true,
            served_mbps: total_demand,
            per_ap_served_mbps: demands,
            total_demand_mbps: total_demand,
            alpha: Some(1.0),
            unreachable: false,
        });
    }
    if !alpha_fallback {
        return Ok(EvalResult {
            scenario_seed: s.seed,
            topology: TopologyChoice::Lp,
            feasible: false,
            served_mbps: 0.0,
            per_ap_served_mbps: vec![0.0; demands.len()],
            total_demand_mbps: total_demand,
            alpha: None,
            unreachable: false,
        });
    }
    // Scale 0 zeroes every demand and is always feasible, scale 1 just
    // failed, so bisection brackets the breakpoint.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while hi - lo > ALPHA_PRECISION {
        let mid = 0.5 * (lo + hi);
        if solve_scaled(s, cfg, mid)?.is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let per_ap: Vec<f64> = demands.iter().map(|d| d * lo).collect();
    Ok(EvalResult {
        scenario_seed: s.seed,
        topology: TopologyChoice::Lp,
        feasible: false,
        served_mbps: per_ap.iter().sum(),
        per_ap_served_mbps: per_ap,
        total_demand_mbps: total_demand,
        alpha: Some(lo),
        unreachable: false,
    })
}
