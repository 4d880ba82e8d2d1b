//! Point-to-multipoint plan: every access point hangs directly off the PoP
//! and the band is shared by demand.
//!
//! When the summed requirement fits the band, every AP gets exactly the
//! blocks it needs. When it does not, blocks are split proportionally to
//! per-AP requirements by largest remainder: integer floors first, then one
//! extra block each in order of descending fractional remainder, ties
//! broken toward the lower AP id. APs whose link rate is zero get nothing.

use serde::Serialize;
use thiserror::Error;

use crate::radio::{link_metrics, rbs_required, RadioConfig, RadioError, RbsRequired};
use crate::scenario::Scenario;
use crate::topology::{Topology, TopologyEdge, TopologyKind};

#[derive(Debug, Error)]
pub enum PmpError {
    #[error("topology does not match the scenario: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Radio(#[from] RadioError),
}

/// Resource outcome for one access point.
#[derive(Debug, Clone, Serialize)]
pub struct ApAllocation {
    pub ap_id: usize,
    pub required: RbsRequired,
    pub allocated_rbs: u32,
    pub served_bps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct PmpAllocation {
    /// Per access point, in id order.
    pub per_ap: Vec<ApAllocation>,
    /// Sum of requirements over APs whose links carry data at all.
    pub total_required_rbs: u32,
    /// True when every AP is reachable and the requirements fit the band.
    pub feasible: bool,
}

impl PmpAllocation {
    pub fn total_served_bps(&self) -> f64 {
        self.per_ap.iter().map(|a| a.served_bps).sum()
    }
}

/// Builds the star topology: one PoP-to-AP edge per access point, in id
/// order.
pub fn build_pmp(s: &Scenario, cfg: &RadioConfig) -> Result<Topology, RadioError> {
    let pop = &s.nodes[0];
    let mut edges = Vec::with_capacity(s.n_aps());
    for ap in s.aps() {
        let metrics = link_metrics(pop, ap, cfg)?;
        edges.push(TopologyEdge::new(0, ap.id, metrics));
    }
    Ok(Topology {
        kind: TopologyKind::Pmp,
        edges,
    })
}

/// Allocates the band across the star's access points.
pub fn allocate_pmp(
    topo: &Topology,
    s: &Scenario,
    cfg: &RadioConfig,
) -> Result<PmpAllocation, PmpError> {
    if topo.kind != TopologyKind::Pmp {
        return Err(PmpError::Mismatch("expected a star plan".into()));
    }
    if topo.edges.len() != s.n_aps() {
        return Err(PmpError::Mismatch(format!(
            "{} edges for {} access points",
            topo.edges.len(),
            s.n_aps()
        )));
    }

    let n_aps = s.n_aps();
    let mut rates = vec![0.0; n_aps];
    for (i, edge) in topo.edges.iter().enumerate() {
        if edge.from != 0 || edge.to != i + 1 {
            return Err(PmpError::Mismatch(format!(
                "edge {} -> {} is not the star edge for AP {}",
                edge.from,
                edge.to,
                i + 1
            )));
        }
        rates[i] = edge.metrics.per_rb_rate_bps;
    }

    let mut required = Vec::with_capacity(n_aps);
    let mut total_required: u64 = 0;
    let mut all_satisfiable = true;
    for (i, ap) in s.aps().iter().enumerate() {
        let req = rbs_required(ap.demand_mbps * 1e6, rates[i]);
        match req {
            RbsRequired::Count(k) => total_required += u64::from(k),
            RbsRequired::Unsatisfiable => all_satisfiable = false,
        }
        required.push(req);
    }

    let band = u64::from(cfg.n_rbs);
    let fits = total_required <= band;
    let allocated = if fits {
        required
            .iter()
            .map(|r| r.count().unwrap_or(0))
            .collect::<Vec<_>>()
    } else {
        proportional_split(&required, total_required, cfg.n_rbs)
    };

    let per_ap = s
        .aps()
        .iter()
        .zip(required.iter().zip(allocated.iter()))
        .map(|(ap, (req, alloc))| {
            let demand_bps = ap.demand_mbps * 1e6;
            let served_bps = demand_bps.min(f64::from(*alloc) * rates[ap.id - 1]);
            ApAllocation {
                ap_id: ap.id,
                required: *req,
                allocated_rbs: *alloc,
                served_bps,
            }
        })
        .collect();

    Ok(PmpAllocation {
        per_ap,
        total_required_rbs: u32::try_from(total_required.min(u64::from(u32::MAX))).unwrap(),
        feasible: all_satisfiable && fits,
    })
}

/// Largest-remainder split of `n_rbs` blocks proportional to requirements.
/// Unreachable APs (no requirement count) get zero.
fn proportional_split(required: &[RbsRequired], total: u64, n_rbs: u32) -> Vec<u32> {
    debug_assert!(total > u64::from(n_rbs));
    let total_f = total as f64;
    let mut alloc = vec![0u32; required.len()];
    let mut remainders = Vec::with_capacity(required.len());
    let mut assigned: u64 = 0;
    for (i, req) in required.iter().enumerate() {
        if let RbsRequired::Count(k) = req {
            let quota = f64::from(n_rbs) * f64::from(*k) / total_f;
            let floor = quota.floor();
            alloc[i] = floor as u32;
            assigned += u64::from(alloc[i]);
            remainders.push((i, quota - floor));
        }
    }
    let mut leftover = u64::from(n_rbs) - assigned;
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (i, _) in remainders {
        if leftover == 0 {
            break;
        }
        alloc[i] += 1;
        leftover -= 1;
    }
    debug_assert_eq!(leftover, 0);
    alloc
}
