//! Common report shape for a planned topology, shared by all planners.

use serde::Serialize;

use crate::radio::LinkMetrics;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum TopologyKind {
    /// Single-hop star out of the PoP.
    Pmp,
    /// Hop- and degree-constrained spanning tree.
    MultiHop { max_hops: u32 },
    /// Fractional topology extracted from the LP solution.
    LpOptimal,
}

/// One directed backhaul link in a plan. Planner-specific fields are
/// optional so a single shape serves star, tree, and LP outputs.
#[derive(Debug, Clone, Serialize)]
pub struct TopologyEdge {
    pub from: usize,
    pub to: usize,
    pub metrics: LinkMetrics,
    /// Whole resource blocks the edge needs (star and tree plans).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub required_rbs: Option<u32>,
    /// Hop depth of the child endpoint (tree plans).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<u32>,
    /// Fractional band share from the LP (LP plans).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rb_fraction: Option<f64>,
    /// `rb_fraction` scaled to blocks and rounded up (LP plans).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rb_ceil: Option<u32>,
}

impl TopologyEdge {
    pub fn new(from: usize, to: usize, metrics: LinkMetrics) -> Self {
        TopologyEdge {
            from,
            to,
            metrics,
            required_rbs: None,
            depth: None,
            rb_fraction: None,
            rb_ceil: None,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Topology {
    pub kind: TopologyKind,
    pub edges: Vec<TopologyEdge>,
}
