//! Multi-hop backhaul: a minimum-weight spanning tree grown under hop and
//! degree limits, subtree demand aggregation, and greedy resource-block
//! multicoloring of the tree edges.
//!
//! The tree is grown Prim-style from the PoP over Euclidean edge weights.
//! A candidate edge (u, v) is admissible only while u stays within the
//! degree cap and v would not exceed the hop limit; the constrained problem
//! is NP-hard in general, so this is a deterministic heuristic, not an
//! exact solver. When the constraints strand a node the result is an
//! infeasible marker, not an error.
//!
//! Coloring treats RB indices as colors: edges sharing an endpoint must get
//! disjoint sets. Relays are full duplex with separate antennas, so no
//! constraint beyond endpoint disjointness applies. If full demand does not
//! color, the evaluator bisects a uniform demand scale.

use std::collections::VecDeque;

use serde::Serialize;

use crate::eval::{EvalResult, TopologyChoice};
use crate::radio::{link_metrics, rbs_required, LinkMetrics, RadioConfig, RadioError, RbsRequired};
use crate::scenario::Scenario;

/// Degree cap used by evaluation, counting the parent link too.
pub const DEFAULT_MAX_DEGREE: u32 = 4;

/// Bisection width for the uniform demand-scaling factor.
pub const ALPHA_PRECISION: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct TreeEdge {
    pub from: usize,
    pub to: usize,
    pub weight_km: f64,
    pub metrics: LinkMetrics,
}

/// Rooted spanning tree over a scenario. Vectors are indexed by node id;
/// `edges` is in attachment order and `children` lists are sorted by id.
#[derive(Debug, Clone, Serialize)]
pub struct Tree {
    pub parent: Vec<Option<usize>>,
    pub depth: Vec<u32>,
    pub children: Vec<Vec<usize>>,
    pub edges: Vec<TreeEdge>,
    pub max_hops: u32,
    pub max_degree: u32,
}

impl Tree {
    pub fn total_weight_km(&self) -> f64 {
        self.edges.iter().map(|e| e.weight_km).sum()
    }

    /// Tree degree of a node: children plus the parent link.
    pub fn degree(&self, node: usize) -> u32 {
        self.children[node].len() as u32 + u32::from(self.parent[node].is_some())
    }

    /// Edge indices in BFS order from the root, siblings by child id. Every
    /// parent edge precedes its child edges.
    pub fn bfs_edge_order(&self) -> Vec<usize> {
        let mut edge_of_child = vec![usize::MAX; self.parent.len()];
        for (k, e) in self.edges.iter().enumerate() {
            edge_of_child[e.to] = k;
        }
        let mut order = Vec::with_capacity(self.edges.len());
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            for &c in &self.children[u] {
                order.push(edge_of_child[c]);
                queue.push_back(c);
            }
        }
        order
    }
}

/// Per-edge resource-block assignment, aligned with `Tree::edges`.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeRbs {
    pub from: usize,
    pub to: usize,
    pub required_rbs: u32,
    pub rb_set: Vec<u32>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EdgeAllocation {
    pub per_edge: Vec<EdgeRbs>,
    /// Uniform demand-scaling factor this allocation carries.
    pub alpha: f64,
}

/// Grows the constrained tree. Returns `None` when the hop/degree limits
/// leave some node unreachable.
///
/// Candidate choice each round: minimum weight, ties by smaller (u, v) id
/// pair. Both limits bind during growth, so the root obeys the degree cap
/// like everyone else.
pub fn build_constrained_mwst(
    s: &Scenario,
    cfg: &RadioConfig,
    max_hops: u32,
    max_degree: u32,
) -> Result<Option<Tree>, RadioError> {
    assert!(max_hops >= 1, "max_hops must be at least 1");
    assert!(max_degree >= 1, "max_degree must be at least 1");
    let n = s.nodes.len();
    let mut dist = vec![vec![0.0f64; n]; n];
    for u in 0..n {
        for v in (u + 1)..n {
            let d = (s.nodes[u].x_km - s.nodes[v].x_km).hypot(s.nodes[u].y_km - s.nodes[v].y_km);
            dist[u][v] = d;
            dist[v][u] = d;
        }
    }

    let mut in_tree = vec![false; n];
    in_tree[0] = true;
    let mut degree = vec![0u32; n];
    let mut parent = vec![None; n];
    let mut depth = vec![0u32; n];
    let mut children = vec![Vec::new(); n];
    let mut edges = Vec::with_capacity(n - 1);

    for _ in 1..n {
        let mut best: Option<(f64, usize, usize)> = None;
        for u in 0..n {
            if !in_tree[u] || degree[u] >= max_degree || depth[u] + 1 > max_hops {
                continue;
            }
            for v in 0..n {
                if in_tree[v] {
                    continue;
                }
                let w = dist[u][v];
                let better = match best {
                    None => true,
                    Some((bw, bu, bv)) => w < bw || (w == bw && (u, v) < (bu, bv)),
                };
                if better {
                    best = Some((w, u, v));
                }
            }
        }
        let Some((w, u, v)) = best else {
            return Ok(None);
        };
        in_tree[v] = true;
        parent[v] = Some(u);
        depth[v] = depth[u] + 1;
        degree[u] += 1;
        degree[v] = 1;
        children[u].push(v);
        edges.push(TreeEdge {
            from: u,
            to: v,
            weight_km: w,
            metrics: link_metrics(&s.nodes[u], &s.nodes[v], cfg)?,
        });
    }

    for list in &mut children {
        list.sort_unstable();
    }
    Ok(Some(Tree {
        parent,
        depth,
        children,
        edges,
        max_hops,
        max_degree,
    }))
}

/// Load carried by each tree edge in bit/s, aligned with `t.edges`: an
/// edge into `v` carries the demand of v's whole subtree.
pub fn subtree_demands(t: &Tree, s: &Scenario) -> Vec<f64> {
    let n = t.parent.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by_key(|&v| std::cmp::Reverse(t.depth[v]));
    let mut subtree = vec![0.0f64; n];
    for &v in &order {
        let mut load = s.nodes[v].demand_mbps * 1e6;
        for &c in &t.children[v] {
            load += subtree[c];
        }
        subtree[v] = load;
    }
    t.edges.iter().map(|e| subtree[e.to]).collect()
}

/// Greedy first-fit multicoloring in BFS edge order. Each edge takes the
/// lowest-indexed free blocks among those unused by already-colored edges
/// at either endpoint. Returns `None` when some edge cannot be filled.
pub fn color_edges(t: &Tree, required: &[u32], n_rbs: u32) -> Option<Vec<Vec<u32>>> {
    assert_eq!(required.len(), t.edges.len());
    let n_rbs = n_rbs as usize;
    let mut used = vec![vec![false; n_rbs]; t.parent.len()];
    let mut sets: Vec<Vec<u32>> = vec![Vec::new(); t.edges.len()];
    for k in t.bfs_edge_order() {
        let e = &t.edges[k];
        let need = required[k] as usize;
        let mut set = Vec::with_capacity(need);
        for i in 0..n_rbs {
            if set.len() == need {
                break;
            }
            if !used[e.from][i] && !used[e.to][i] {
                set.push(i as u32);
            }
        }
        if set.len() < need {
            return None;
        }
        for &i in &set {
            used[e.from][i as usize] = true;
            used[e.to][i as usize] = true;
        }
        sets[k] = set;
    }
    Some(sets)
}

/// Full multi-hop plan for one scenario: the tree (if any), the allocation
/// at the achieved scale, and the outcome summary.
#[derive(Debug, Clone, Serialize)]
pub struct MultihopPlan {
    pub tree: Option<Tree>,
    pub allocation: Option<EdgeAllocation>,
    /// 1.0 when fully served; the bisected scale otherwise; 0.0 when no
    /// positive scale fits or a node is unreachable.
    pub alpha: f64,
    pub feasible: bool,
    pub unreachable: bool,
}

fn required_at(loads: &[f64], rates: &[f64], alpha: f64) -> Option<Vec<u32>> {
    loads
        .iter()
        .zip(rates)
        .map(|(load, rate)| match rbs_required(alpha * load, *rate) {
            RbsRequired::Count(k) => Some(k),
            RbsRequired::Unsatisfiable => None,
        })
        .collect()
}

/// Plans a scenario at a given hop/degree limit.
pub fn plan_multihop(
    s: &Scenario,
    cfg: &RadioConfig,
    max_hops: u32,
    max_degree: u32,
) -> Result<MultihopPlan, RadioError> {
    let Some(tree) = build_constrained_mwst(s, cfg, max_hops, max_degree)? else {
        return Ok(MultihopPlan {
            tree: None,
            allocation: None,
            alpha: 0.0,
            feasible: false,
            unreachable: true,
        });
    };

    let loads = subtree_demands(&tree, s);
    let rates: Vec<f64> = tree.edges.iter().map(|e| e.metrics.per_rb_rate_bps).collect();
    let try_color = |alpha: f64| -> Option<Vec<EdgeRbs>> {
        let required = required_at(&loads, &rates, alpha)?;
        let sets = color_edges(&tree, &required, cfg.n_rbs)?;
        Some(
            tree.edges
                .iter()
                .zip(required.iter().zip(sets))
                .map(|(e, (req, rb_set))| EdgeRbs {
                    from: e.from,
                    to: e.to,
                    required_rbs: *req,
                    rb_set,
                })
                .collect(),
        )
    };

    if let Some(per_edge) = try_color(1.0) {
        return Ok(MultihopPlan {
            tree: Some(tree),
            allocation: Some(EdgeAllocation {
                per_edge,
                alpha: 1.0,
            }),
            alpha: 1.0,
            feasible: true,
            unreachable: false,
        });
    }

    // Required counts are non-increasing in alpha, so colorability is
    // monotone and the bisection below is sound.
    let mut lo = 0.0f64;
    let mut hi = 1.0f64;
    while hi - lo > ALPHA_PRECISION {
        let mid = 0.5 * (lo + hi);
        if try_color(mid).is_some() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let allocation = if lo > 0.0 {
        try_color(lo).map(|per_edge| EdgeAllocation {
            per_edge,
            alpha: lo,
        })
    } else {
        None
    };
    Ok(MultihopPlan {
        tree: Some(tree),
        allocation,
        alpha: lo,
        feasible: false,
        unreachable: false,
    })
}

/// Evaluates a scenario as a multi-hop network with the standard degree cap.
pub fn evaluate_multihop(
    s: &Scenario,
    cfg: &RadioConfig,
    max_hops: u32,
) -> Result<EvalResult, RadioError> {
    let plan = plan_multihop(s, cfg, max_hops, DEFAULT_MAX_DEGREE)?;
    let per_ap: Vec<f64> = s
        .aps()
        .iter()
        .map(|ap| plan.alpha * ap.demand_mbps)
        .collect();
    let total_demand = s.total_demand_mbps();
    let served = if plan.feasible {
        total_demand
    } else {
        per_ap.iter().sum()
    };
    Ok(EvalResult {
        scenario_seed: s.seed,
        topology: TopologyChoice::Mh { max_hops },
        feasible: plan.feasible,
        served_mbps: served,
        per_ap_served_mbps: per_ap,
        total_demand_mbps: total_demand,
        alpha: Some(plan.alpha),
        unreachable: plan.unreachable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, Node};

    fn scenario_at(positions: &[(f64, f64)], demands: &[f64], area: f64) -> Scenario {
        let mut nodes = vec![Node {
            demand_mbps: 0.0,
            id: 0,
            x_km: positions[0].0,
            y_km: positions[0].1,
        }];
        for (i, ((x, y), d)) in positions[1..].iter().zip(demands).enumerate() {
            nodes.push(Node {
                demand_mbps: *d,
                id: i + 1,
                x_km: *x,
                y_km: *y,
            });
        }
        Scenario {
            area_km: area,
            demand_set_mbps: demands.to_vec(),
            nodes,
            seed: 0,
        }
    }

    fn check_tree_invariants(t: &Tree, n_nodes: usize) {
        assert_eq!(t.edges.len(), n_nodes - 1);
        assert_eq!(t.parent[0], None);
        assert_eq!(t.depth[0], 0);
        for v in 1..n_nodes {
            let p = t.parent[v].expect("all nodes attached");
            assert_eq!(t.depth[v], t.depth[p] + 1);
            assert!(t.depth[v] <= t.max_hops);
            assert!(t.children[p].contains(&v));
        }
        for v in 0..n_nodes {
            assert!(t.degree(v) <= t.max_degree, "node {v} over degree cap");
        }
        // Walking every child link from the root reaches all nodes exactly
        // once, which rules out cycles.
        let mut seen = vec![false; n_nodes];
        let mut stack = vec![0usize];
        let mut count = 0;
        while let Some(u) = stack.pop() {
            assert!(!seen[u]);
            seen[u] = true;
            count += 1;
            stack.extend(&t.children[u]);
        }
        assert_eq!(count, n_nodes);
    }

    #[test]
    fn collinear_pair_prefers_the_relay() {
        // PoP at origin, A 1 km out, B 2 km out on the same line. Two hops
        // allowed: the relay path 0-A-B weighs 2 km, the star weighs 3 km.
        let s = scenario_at(&[(0.0, 0.0), (0.0, 1.0), (0.0, 2.0)], &[2.0, 4.0], 10.0);
        let cfg = RadioConfig::default();
        let t = build_constrained_mwst(&s, &cfg, 2, 4).unwrap().unwrap();
        check_tree_invariants(&t, 3);
        let pairs: Vec<(usize, usize)> = t.edges.iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 2)]);
        assert!((t.total_weight_km() - 2.0).abs() < 1e-12);

        // With a single hop the star is forced.
        let t1 = build_constrained_mwst(&s, &cfg, 1, 4).unwrap().unwrap();
        check_tree_invariants(&t1, 3);
        let pairs: Vec<(usize, usize)> = t1.edges.iter().map(|e| (e.from, e.to)).collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2)]);
        assert!((t1.total_weight_km() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn root_degree_cap_pushes_one_ap_to_depth_two() {
        // Five APs on a circle around the PoP, mutually farther apart than
        // their 1 km radius: four take root slots, the fifth must relay.
        let mut positions = vec![(5.0, 5.0)];
        for k in 0..5 {
            let a = 2.0 * std::f64::consts::PI * k as f64 / 5.0;
            positions.push((5.0 + a.cos(), 5.0 + a.sin()));
        }
        let s = scenario_at(&positions, &[2.0; 5], 10.0);
        let cfg = RadioConfig::default();
        let t = build_constrained_mwst(&s, &cfg, 2, 4).unwrap().unwrap();
        check_tree_invariants(&t, 6);
        assert_eq!(t.children[0].len(), 4);
        let at_depth_2 = (1..6).filter(|&v| t.depth[v] == 2).count();
        assert_eq!(at_depth_2, 1);
    }

    #[test]
    fn stranded_node_reports_infeasible() {
        // Five APs but only four depth-1 slots.
        let s = scenario_at(
            &[(5.0, 5.0), (4.0, 5.0), (6.0, 5.0), (5.0, 4.0), (5.0, 6.0), (4.0, 4.0)],
            &[2.0; 5],
            10.0,
        );
        let cfg = RadioConfig::default();
        assert!(build_constrained_mwst(&s, &cfg, 1, 4).unwrap().is_none());
        assert!(build_constrained_mwst(&s, &cfg, 2, 4).unwrap().is_some());
    }

    #[test]
    fn subtree_loads_add_up() {
        let s = scenario_at(&[(0.0, 0.0), (0.0, 1.0), (0.0, 2.0)], &[2.0, 4.0], 10.0);
        let cfg = RadioConfig::default();
        let t = build_constrained_mwst(&s, &cfg, 2, 4).unwrap().unwrap();
        let loads = subtree_demands(&t, &s);
        // Chain 0->1->2: the root edge carries both demands, the leaf edge
        // just the leaf's.
        assert_eq!(loads, vec![6e6, 4e6]);

        for seed in 0..50 {
            let s = generate_scenario(10, 10.0, &[2.0, 4.0, 6.0, 8.0, 10.0], seed).unwrap();
            let Some(t) = build_constrained_mwst(&s, &cfg, 4, 4).unwrap() else {
                continue;
            };
            let loads = subtree_demands(&t, &s);
            let from_root: f64 = t
                .edges
                .iter()
                .zip(&loads)
                .filter(|(e, _)| e.from == 0)
                .map(|(_, l)| l)
                .sum();
            let total = s.total_demand_mbps() * 1e6;
            assert!((from_root - total).abs() < 1e-3);
            for (e, load) in t.edges.iter().zip(&loads) {
                if t.children[e.to].is_empty() {
                    assert_eq!(*load, s.nodes[e.to].demand_mbps * 1e6);
                }
            }
        }
    }

    #[test]
    fn coloring_first_fit_examples() {
        let s = scenario_at(&[(5.0, 5.0), (4.0, 5.0), (6.0, 5.0)], &[2.0, 2.0], 10.0);
        let cfg = RadioConfig::default();
        let t = build_constrained_mwst(&s, &cfg, 1, 4).unwrap().unwrap();
        let sets = color_edges(&t, &[30, 40], 100).unwrap();
        assert_eq!(sets[0], (0..30).collect::<Vec<u32>>());
        assert_eq!(sets[1], (30..70).collect::<Vec<u32>>());

        // Three root edges of 40 each cannot fit one node's pool.
        let s3 = scenario_at(
            &[(5.0, 5.0), (4.0, 5.0), (6.0, 5.0), (5.0, 4.0)],
            &[2.0; 3],
            10.0,
        );
        let t3 = build_constrained_mwst(&s3, &cfg, 1, 4).unwrap().unwrap();
        assert!(color_edges(&t3, &[40, 40, 40], 100).is_none());
        assert!(color_edges(&t3, &[40, 40, 20], 100).is_some());
    }

    #[test]
    fn non_adjacent_edges_reuse_blocks() {
        // Path 0->1->2->3: edges (0,1) and (2,3) share no endpoint.
        let s = scenario_at(
            &[(0.0, 0.0), (0.0, 1.0), (0.0, 2.0), (0.0, 3.0)],
            &[2.0; 3],
            10.0,
        );
        let cfg = RadioConfig::default();
        let t = build_constrained_mwst(&s, &cfg, 3, 4).unwrap().unwrap();
        let sets = color_edges(&t, &[60, 30, 60], 100).unwrap();
        assert_eq!(sets[0], (0..60).collect::<Vec<u32>>());
        assert_eq!(sets[1], (60..90).collect::<Vec<u32>>());
        // The third edge only conflicts with the second.
        assert_eq!(sets[2][0], 0);
        assert!(sets[2].iter().all(|i| !sets[1].contains(i)));
    }

    #[test]
    fn chain_requirements_fit_and_serve_fully() {
        // 1 km spacing keeps per-RB rates at the 792 kbit/s cap on both the
        // PoP link and the relay link; demands 2 and 4 Mbit/s need 8 and 6
        // blocks, which fit one pool with room to spare.
        let s = scenario_at(&[(0.0, 0.0), (0.0, 1.0), (0.0, 2.0)], &[2.0, 4.0], 10.0);
        let cfg = RadioConfig::default();
        let plan = plan_multihop(&s, &cfg, 2, 4).unwrap();
        assert!(plan.feasible);
        let alloc = plan.allocation.unwrap();
        assert_eq!(alloc.per_edge[0].required_rbs, 8);
        assert_eq!(alloc.per_edge[1].required_rbs, 6);
        assert_eq!(alloc.alpha, 1.0);

        let result = evaluate_multihop(&s, &cfg, 2).unwrap();
        assert!(result.feasible);
        assert_eq!(result.served_mbps, 6.0);
        assert_eq!(result.per_ap_served_mbps, vec![2.0, 4.0]);
        assert_eq!(result.alpha, Some(1.0));
        assert!(!result.unreachable);
    }

    #[test]
    fn overload_bisects_a_tight_bracket() {
        // One AP at 1 km asking 100 Mbit/s: 127 blocks required, so full
        // demand fails and the scale should land just under 79.2/100.
        let s = scenario_at(&[(0.0, 0.0), (0.0, 1.0)], &[100.0], 10.0);
        let cfg = RadioConfig::default();
        let plan = plan_multihop(&s, &cfg, 2, 4).unwrap();
        assert!(!plan.feasible);
        assert!(!plan.unreachable);
        let alpha = plan.alpha;
        assert!((alpha - 0.792).abs() < ALPHA_PRECISION, "alpha {alpha}");
        let alloc = plan.allocation.unwrap();
        assert_eq!(alloc.per_edge[0].required_rbs as usize, alloc.per_edge[0].rb_set.len());
        assert!(alloc.per_edge[0].required_rbs <= 100);

        let result = evaluate_multihop(&s, &cfg, 2).unwrap();
        assert!(!result.feasible);
        assert!((result.served_mbps - alpha * 100.0).abs() < 1e-9);
    }

    #[test]
    fn unreachable_scenario_evaluates_to_zero() {
        let s = scenario_at(
            &[(5.0, 5.0), (4.0, 5.0), (6.0, 5.0), (5.0, 4.0), (5.0, 6.0), (4.0, 4.0)],
            &[2.0; 5],
            10.0,
        );
        let cfg = RadioConfig::default();
        let result = evaluate_multihop(&s, &cfg, 1).unwrap();
        assert!(!result.feasible);
        assert!(result.unreachable);
        assert_eq!(result.served_mbps, 0.0);
        assert_eq!(result.alpha, Some(0.0));
    }

    #[test]
    fn random_trees_color_consistently() {
        let cfg = RadioConfig::default();
        let set = [2.0, 4.0, 6.0, 8.0, 10.0];
        let mut colored = 0;
        for seed in 100..200 {
            let s = generate_scenario(10, 10.0, &set, seed).unwrap();
            let plan = plan_multihop(&s, &cfg, 4, 4).unwrap();
            let Some(tree) = &plan.tree else { continue };
            check_tree_invariants(tree, 11);
            let Some(alloc) = &plan.allocation else {
                continue;
            };
            colored += 1;
            let n = tree.parent.len();
            let mut per_node: Vec<Vec<&Vec<u32>>> = vec![Vec::new(); n];
            for e in &alloc.per_edge {
                assert_eq!(e.rb_set.len(), e.required_rbs as usize);
                assert!(e.rb_set.iter().all(|i| *i < cfg.n_rbs));
                per_node[e.from].push(&e.rb_set);
                per_node[e.to].push(&e.rb_set);
            }
            for sets in &per_node {
                let mut seen = std::collections::HashSet::new();
                for set in sets {
                    for i in *set {
                        assert!(seen.insert(*i), "seed {seed}: block {i} reused at a node");
                    }
                }
            }
        }
        assert!(colored > 50);
    }

    #[test]
    fn bisection_is_monotone_in_alpha() {
        let cfg = RadioConfig::default();
        let set = [8.0, 10.0];
        for seed in 0..40 {
            let s = generate_scenario(10, 14.0, &set, seed).unwrap();
            let plan = plan_multihop(&s, &cfg, 2, 4).unwrap();
            if plan.feasible || plan.unreachable || plan.alpha == 0.0 {
                continue;
            }
            let tree = plan.tree.as_ref().unwrap();
            let loads = subtree_demands(tree, &s);
            let rates: Vec<f64> = tree.edges.iter().map(|e| e.metrics.per_rb_rate_bps).collect();
            let colors_at = |alpha: f64| {
                required_at(&loads, &rates, alpha)
                    .and_then(|req| color_edges(tree, &req, cfg.n_rbs))
                    .is_some()
            };
            assert!(colors_at(plan.alpha), "seed {seed}: reported alpha fails");
            for frac in [0.25, 0.5, 0.75] {
                assert!(colors_at(plan.alpha * frac));
            }
            assert!(
                !colors_at((plan.alpha + ALPHA_PRECISION).min(1.0)),
                "seed {seed}: alpha not maximal"
            );
        }
    }
}
