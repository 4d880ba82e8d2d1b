//! Independent oracles for the acceptance suite: a Kruskal spanning tree
//! and a brute-force vertex enumerator for small linear programs. Both are
//! deliberately written from scratch so they share no code with the
//! implementations they check.

use middlemile::scenario::Scenario;
use middlemile::simplex::{LpModel, Relation};

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let ra = self.find(a);
        let rb = self.find(b);
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

/// Kruskal minimum spanning tree over the complete node graph with
/// kilometer edge weights. Returns the total weight and the edge list.
pub fn kruskal_mst(s: &Scenario) -> (f64, Vec<(usize, usize)>) {
    let n = s.nodes.len();
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for u in 0..n {
        for v in (u + 1)..n {
            let w = (s.nodes[u].x_km - s.nodes[v].x_km).hypot(s.nodes[u].y_km - s.nodes[v].y_km);
            edges.push((w, u, v));
        }
    }
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut dsu = Dsu::new(n);
    let mut total = 0.0;
    let mut picked = Vec::with_capacity(n.saturating_sub(1));
    for (w, u, v) in edges {
        if dsu.union(u, v) {
            total += w;
            picked.push((u, v));
        }
    }
    (total, picked)
}

/// Hop depth of every node from node 0 plus the maximum node degree of an
/// undirected edge list. Unreached nodes keep `u32::MAX`.
pub fn rooted_depths_and_max_degree(n: usize, edges: &[(usize, usize)]) -> (Vec<u32>, u32) {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let max_degree = adj.iter().map(Vec::len).max().unwrap_or(0) as u32;
    let mut depth = vec![u32::MAX; n];
    depth[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if depth[v] == u32::MAX {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (depth, max_degree)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gauss-Jordan solve of the square system formed by the selected rows
/// taken as equalities. `None` when the system is singular.
fn solve_square(rows: &[(Vec<f64>, Relation, f64)], idx: &[usize], n: usize) -> Option<Vec<f64>> {
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for (r, &i) in idx.iter().enumerate() {
        a[r][..n].copy_from_slice(&rows[i].0);
        a[r][n] = rows[i].2;
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&p, &q| a[p][col].abs().partial_cmp(&a[q][col].abs()).unwrap())?;
        if a[piv][col].abs() < 1e-9 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..=n {
                a[r][k] -= f * a[col][k];
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}

fn satisfies_all(rows: &[(Vec<f64>, Relation, f64)], x: &[f64]) -> bool {
    const TOL: f64 = 1e-7;
    rows.iter().all(|(coeffs, relation, rhs)| {
        let lhs = dot(coeffs, x);
        let scale = 1.0 + rhs.abs();
        match relation {
            Relation::Le => lhs - rhs <= TOL * scale,
            Relation::Ge => rhs - lhs <= TOL * scale,
            Relation::Eq => (lhs - rhs).abs() <= TOL * scale,
        }
    })
}

fn next_combination(idx: &mut [usize], n_rows: usize) -> bool {
    let n = idx.len();
    let mut i = n;
    while i > 0 {
        i -= 1;
        if idx[i] < n_rows - n + i {
            idx[i] += 1;
            for k in (i + 1)..n {
                idx[k] = idx[k - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Brute-force minimum of a bounded model: every candidate vertex comes
/// from some choice of `n_vars` tight rows, so enumerating all square
/// subsystems and keeping the feasible solutions finds the optimum.
/// Exponential in the row count; strictly an oracle for tiny models.
pub fn brute_force_min(m: &LpModel) -> Option<f64> {
    let n = m.n_vars;
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = m
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.relation, c.rhs))
        .collect();
    for (j, &(lo, up)) in m.bounds.iter().enumerate() {
        let mut unit = vec![0.0; n];
        unit[j] = 1.0;
        if up.is_finite() {
            rows.push((unit.clone(), Relation::Le, up));
        }
        rows.push((unit, Relation::Ge, lo));
    }
    assert!(rows.len() >= n, "a bounded model always has enough rows");

    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        if let Some(x) = solve_square(&rows, &idx, n) {
            if satisfies_all(&rows, &x) {
                let obj = dot(&m.objective, &x);
                best = Some(best.map_or(obj, |b| b.min(obj)));
            }
        }
        if !next_combination(&mut idx, rows.len()) {
            return best;
        }
    }
}
