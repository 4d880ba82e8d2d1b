//! Deployment scenarios: one PoP plus N access points on a square area.
//!
//! Scenarios are generated from a seed and serialized as canonical JSON so
//! that a given seed always produces byte-identical files. Canonical form is
//! pretty-printed with two-space indent, LF line endings, a trailing newline,
//! and keys in sorted order (struct fields below are declared in sorted
//! order for that reason).

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One network node. Node 0 is the PoP and carries no demand of its own;
/// nodes 1..=N are access points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    /// Downlink demand toward this node in Mbit/s. Zero for the PoP.
    pub demand_mbps: f64,
    pub id: usize,
    pub x_km: f64,
    pub y_km: f64,
}

/// A generated deployment: node 0 is the PoP, the rest are access points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Side length of the square deployment area in km.
    pub area_km: f64,
    /// The demand values access points draw from, in Mbit/s.
    pub demand_set_mbps: Vec<f64>,
    pub nodes: Vec<Node>,
    /// Seed this scenario was generated from (informational on load).
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("scenario parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {0}")]
    Validation(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Knobs for [`generate_scenario_with`].
#[derive(Debug, Clone, Default)]
pub struct GenOptions {
    /// Place the PoP at the area center instead of drawing its position.
    /// The position draw still happens so the access-point coordinates and
    /// demands match the unpinned variant for the same seed.
    pub pop_at_center: bool,
}

impl Scenario {
    pub fn n_aps(&self) -> usize {
        self.nodes.len().saturating_sub(1)
    }

    /// Access points only, i.e. every node except the PoP.
    pub fn aps(&self) -> &[Node] {
        &self.nodes[1..]
    }

    pub fn total_demand_mbps(&self) -> f64 {
        self.nodes.iter().map(|n| n.demand_mbps).sum()
    }

    /// Euclidean distance between two nodes in meters.
    pub fn distance_m(&self, a: usize, b: usize) -> f64 {
        let na = &self.nodes[a];
        let nb = &self.nodes[b];
        ((na.x_km - nb.x_km).powi(2) + (na.y_km - nb.y_km).powi(2)).sqrt() * 1000.0
    }
}

/// Generates a scenario with default options.
///
/// Draw order from `ChaCha8Rng::seed_from_u64(seed)` is fixed: PoP position
/// (x then y), access-point positions in id order (x then y each), then
/// demands in id order (one index draw into `demand_set_mbps` each).
/// Changing this order would silently change every generated scenario, so
/// it is part of the public contract.
pub fn generate_scenario(
    n_aps: usize,
    area_km: f64,
    demand_set_mbps: &[f64],
    seed: u64,
) -> Result<Scenario, ScenarioError> {
    generate_scenario_with(n_aps, area_km, demand_set_mbps, seed, &GenOptions::default())
}

/// Generates a scenario, with options. See [`generate_scenario`] for the
/// RNG draw order.
pub fn generate_scenario_with(
    n_aps: usize,
    area_km: f64,
    demand_set_mbps: &[f64],
    seed: u64,
    opts: &GenOptions,
) -> Result<Scenario, ScenarioError> {
    if n_aps == 0 {
        return Err(ScenarioError::InvalidArgument(
            "need at least one access point".into(),
        ));
    }
    if !(area_km.is_finite() && area_km > 0.0) {
        return Err(ScenarioError::InvalidArgument(format!(
            "area_km must be positive and finite, got {area_km}"
        )));
    }
    if demand_set_mbps.is_empty() {
        return Err(ScenarioError::InvalidArgument(
            "demand set must not be empty".into(),
        ));
    }
    if let Some(bad) = demand_set_mbps
        .iter()
        .find(|d| !(d.is_finite() && **d > 0.0))
    {
        return Err(ScenarioError::InvalidArgument(format!(
            "demand values must be positive and finite, got {bad}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_pos = |rng: &mut ChaCha8Rng| {
        let x = rng.random::<f64>() * area_km;
        let y = rng.random::<f64>() * area_km;
        (x, y)
    };

    let (mut pop_x, mut pop_y) = draw_pos(&mut rng);
    if opts.pop_at_center {
        pop_x = area_km / 2.0;
        pop_y = area_km / 2.0;
    }

    let mut nodes = Vec::with_capacity(n_aps + 1);
    nodes.push(Node {
        demand_mbps: 0.0,
        id: 0,
        x_km: pop_x,
        y_km: pop_y,
    });
    for id in 1..=n_aps {
        let (x, y) = draw_pos(&mut rng);
        nodes.push(Node {
            demand_mbps: 0.0,
            id,
            x_km: x,
            y_km: y,
        });
    }
    for node in nodes.iter_mut().skip(1) {
        let idx = rng.random_range(0..demand_set_mbps.len());
        node.demand_mbps = demand_set_mbps[idx];
    }

    Ok(Scenario {
        area_km,
        demand_set_mbps: demand_set_mbps.to_vec(),
        nodes,
        seed,
    })
}

/// Structural checks shared by generation and load.
pub fn validate_scenario(s: &Scenario) -> Result<(), ScenarioError> {
    let fail = |msg: String| Err(ScenarioError::Validation(msg));
    if !(s.area_km.is_finite() && s.area_km > 0.0) {
        return fail(format!("area_km must be positive, got {}", s.area_km));
    }
    if s.demand_set_mbps.is_empty() {
        return fail("demand set must not be empty".into());
    }
    if let Some(bad) = s
        .demand_set_mbps
        .iter()
        .find(|d| !(d.is_finite() && **d > 0.0))
    {
        return fail(format!("demand set entry {bad} must be positive"));
    }
    if s.nodes.len() < 2 {
        return fail("need a PoP and at least one access point".into());
    }
    for (k, node) in s.nodes.iter().enumerate() {
        if node.id != k {
            return fail(format!(
                "node ids must be contiguous from 0, found {} at index {k}",
                node.id
            ));
        }
        let in_area = |v: f64| v.is_finite() && (0.0..=s.area_km).contains(&v);
        if !in_area(node.x_km) || !in_area(node.y_km) {
            return fail(format!(
                "node {} position ({}, {}) outside [0, {}]",
                node.id, node.x_km, node.y_km, s.area_km
            ));
        }
        if k == 0 {
            if node.demand_mbps != 0.0 {
                return fail(format!(
                    "PoP must carry zero demand, got {}",
                    node.demand_mbps
                ));
            }
        } else if !s.demand_set_mbps.contains(&node.demand_mbps) {
            return fail(format!(
                "node {} demand {} not in the demand set",
                node.id, node.demand_mbps
            ));
        }
    }
    Ok(())
}

/// Canonical JSON bytes for a scenario.
pub fn scenario_to_bytes(s: &Scenario) -> Vec<u8> {
    let mut out = serde_json::to_string_pretty(s).expect("scenario serializes");
    out.push('\n');
    out.into_bytes()
}

/// Parses and validates a scenario from JSON bytes.
pub fn scenario_from_bytes(bytes: &[u8]) -> Result<Scenario, ScenarioError> {
    let s: Scenario = serde_json::from_slice(bytes)?;
    validate_scenario(&s)?;
    Ok(s)
}

pub fn save_scenario(s: &Scenario, path: &Path) -> Result<(), ScenarioError> {
    crate::output::atomic_write(path, &scenario_to_bytes(s))?;
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let bytes = std::fs::read(path)?;
    scenario_from_bytes(&bytes)
}
