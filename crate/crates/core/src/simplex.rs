//! Dense two-phase primal simplex.
//!
//! Minimizes `c · x` subject to linear constraints and per-variable bounds
//! with `x >= 0`. Problem sizes in this crate stay around a hundred
//! variables and a few dozen rows, so a dense tableau with Bland's rule is
//! plenty: deterministic, cycle-free, and easy to audit. Upper bounds and
//! positive lower bounds become explicit constraint rows rather than a
//! bounded-variable simplex.

use std::fmt::Write as _;

use thiserror::Error;

/// Entering threshold and smallest usable pivot magnitude.
pub const PIVOT_TOL: f64 = 1e-9;
/// Phase-1 objective above this means infeasible.
pub const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Minimization model. `bounds[j] = (lower, upper)` with `0 <= lower <=
/// upper`; `upper` may be infinite.
#[derive(Debug, Clone)]
pub struct LpModel {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Variable values; meaningful only when status is Optimal.
    pub x: Vec<f64>,
    pub objective_value: f64,
}

#[derive(Debug, Error)]
pub enum LpError {
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

/// Worst-case constraint and bound violations of a candidate point.
#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    /// Max over constraints of violation / (1 + |rhs|).
    pub max_constraint: f64,
    pub max_bound: f64,
}

fn validate(m: &LpModel) -> Result<(), LpError> {
    let bad = |msg: String| Err(LpError::InvalidModel(msg));
    if m.objective.len() != m.n_vars {
        return bad(format!(
            "objective has {} coefficients for {} variables",
            m.objective.len(),
            m.n_vars
        ));
    }
    if m.bounds.len() != m.n_vars {
        return bad(format!(
            "{} bounds for {} variables",
            m.bounds.len(),
            m.n_vars
        ));
    }
    if m.objective.iter().any(|c| !c.is_finite()) {
        return bad("objective has non-finite coefficients".into());
    }
    for (j, (lo, up)) in m.bounds.iter().enumerate() {
        if !lo.is_finite() || *lo < 0.0 {
            return bad(format!("variable {j} lower bound {lo} must be finite and >= 0"));
        }
        if up.is_nan() || up < lo {
            return bad(format!("variable {j} bounds [{lo}, {up}] are inverted"));
        }
    }
    for (i, c) in m.constraints.iter().enumerate() {
        if c.coeffs.len() != m.n_vars {
            return bad(format!("constraint {i} has {} coefficients", c.coeffs.len()));
        }
        if c.coeffs.iter().any(|v| !v.is_finite()) || !c.rhs.is_finite() {
            return bad(format!("constraint {i} has non-finite entries"));
        }
    }
    Ok(())
}

/// Solves the model. Deterministic: identical models produce identical
/// solutions.
pub fn solve(m: &LpModel) -> Result<LpSolution, LpError> {
    validate(m)?;
    let n = m.n_vars;

    // Gather all rows: constraints first, then bound rows.
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = m
        .constraints
        .iter()
        .map(|c| (c.coeffs.clone(), c.relation, c.rhs))
        .collect();
    for (j, (lo, up)) in m.bounds.iter().enumerate() {
        if up.is_finite() {
            let mut coeffs = vec![0.0; n];
            coeffs[j] = 1.0;
            rows.push((coeffs, Relation::Le, *up));
        }
        if *lo > 0.0 {
            let mut coeffs = vec![0.0; n];
            coeffs[j] = 1.0;
            rows.push((coeffs, Relation::Ge, *lo));
        }
    }

    // Standard form wants non-negative right-hand sides.
    for (coeffs, rel, rhs) in &mut rows {
        if *rhs < 0.0 {
            for v in coeffs.iter_mut() {
                *v = -*v;
            }
            *rhs = -*rhs;
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let n_rows = rows.len();
    let n_slack = rows
        .iter()
        .filter(|(_, rel, _)| *rel != Relation::Eq)
        .count();
    let n_art = rows
        .iter()
        .filter(|(_, rel, _)| *rel != Relation::Le)
        .count();
    let art_start = n + n_slack;
    let ncols = n + n_slack + n_art; // rhs lives at index ncols

    let mut tab = vec![vec![0.0f64; ncols + 1]; n_rows];
    let mut basis = vec![0usize; n_rows];
    let mut next_slack = n;
    let mut next_art = art_start;
    for (r, (coeffs, rel, rhs)) in rows.iter().enumerate() {
        tab[r][..n].copy_from_slice(coeffs);
        tab[r][ncols] = *rhs;
        match rel {
            Relation::Le => {
                tab[r][next_slack] = 1.0;
                basis[r] = next_slack;
                next_slack += 1;
            }
            Relation::Ge => {
                tab[r][next_slack] = -1.0;
                next_slack += 1;
                tab[r][next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
            Relation::Eq => {
                tab[r][next_art] = 1.0;
                basis[r] = next_art;
                next_art += 1;
            }
        }
    }

    let pivot = |tab: &mut Vec<Vec<f64>>, obj: &mut Vec<f64>, r: usize, c: usize| {
        let p = tab[r][c];
        for v in tab[r].iter_mut() {
            *v /= p;
        }
        for i in 0..tab.len() {
            if i != r && tab[i][c].abs() > 0.0 {
                let f = tab[i][c];
                for j in 0..tab[i].len() {
                    tab[i][j] -= f * tab[r][j];
                }
                tab[i][c] = 0.0;
            }
        }
        if obj[c].abs() > 0.0 {
            let f = obj[c];
            for j in 0..obj.len() {
                obj[j] -= f * tab[r][j];
            }
            obj[c] = 0.0;
        }
    };

    // Runs simplex iterations on the current objective row until no
    // entering column remains. Bland's rule both ways: lowest-index
    // entering column, lowest basis index among tied leaving rows.
    let iterate = |tab: &mut Vec<Vec<f64>>,
                   obj: &mut Vec<f64>,
                   basis: &mut Vec<usize>,
                   banned_from: usize|
     -> Option<()> {
        loop {
            let ncols = obj.len() - 1;
            let entering = (0..banned_from.min(ncols)).find(|&j| obj[j] < -PIVOT_TOL);
            let Some(c) = entering else { return Some(()) };
            let mut leave: Option<(f64, usize)> = None;
            for (r, row) in tab.iter().enumerate() {
                if row[c] > PIVOT_TOL {
                    let ratio = row[ncols] / row[c];
                    let better = match leave {
                        None => true,
                        Some((best, br)) => {
                            ratio < best || (ratio == best && basis[r] < basis[br])
                        }
                    };
                    if better {
                        leave = Some((ratio, r));
                    }
                }
            }
            let (_, r) = leave?;
            pivot(tab, obj, r, c);
            basis[r] = c;
        }
    };

    // Phase 1: drive the artificial variables to zero.
    if n_art > 0 {
        let mut obj = vec![0.0f64; ncols + 1];
        for j in art_start..ncols {
            obj[j] = 1.0;
        }
        for r in 0..n_rows {
            if basis[r] >= art_start {
                let f = obj[basis[r]];
                for j in 0..=ncols {
                    obj[j] -= f * tab[r][j];
                }
            }
        }
        // Artificial columns may not re-enter once they leave the basis.
        if iterate(&mut tab, &mut obj, &mut basis, art_start).is_none() {
            return Err(LpError::Numerical(
                "phase 1 ratio test found no pivot".into(),
            ));
        }
        let phase1 = -obj[ncols];
        if phase1 > FEAS_TOL {
            return Ok(LpSolution {
                status: LpStatus::Infeasible,
                x: vec![0.0; n],
                objective_value: 0.0,
            });
        }
        // Pivot artificials out of the basis; rows that cannot pivot are
        // redundant and get dropped.
        let mut dummy = vec![0.0f64; ncols + 1];
        let mut r = 0;
        while r < tab.len() {
            if basis[r] >= art_start {
                let col = (0..art_start).find(|&j| tab[r][j].abs() > PIVOT_TOL);
                match col {
                    Some(c) => {
                        pivot(&mut tab, &mut dummy, r, c);
                        basis[r] = c;
                        r += 1;
                    }
                    None => {
                        tab.remove(r);
                        basis.remove(r);
                    }
                }
            } else {
                r += 1;
            }
        }
        // Drop the artificial columns; they occupy the tail before rhs.
        for row in &mut tab {
            let rhs = row[ncols];
            row.truncate(art_start);
            row.push(rhs);
        }
    }

    // Phase 2 on the real objective.
    let ncols = n + n_slack;
    let mut obj = vec![0.0f64; ncols + 1];
    obj[..n].copy_from_slice(&m.objective);
    for r in 0..tab.len() {
        let f = obj[basis[r]];
        if f != 0.0 {
            for j in 0..=ncols {
                obj[j] -= f * tab[r][j];
            }
        }
    }
    if iterate(&mut tab, &mut obj, &mut basis, ncols).is_none() {
        return Ok(LpSolution {
            status: LpStatus::Unbounded,
            x: vec![0.0; n],
            objective_value: f64::NEG_INFINITY,
        });
    }

    let mut x = vec![0.0f64; n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            x[b] = tab[r][ncols];
        }
    }
    let objective_value = m.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        x,
        objective_value,
    })
}

/// Measures how far `x` is from satisfying the model.
pub fn check_solution(m: &LpModel, x: &[f64]) -> Residuals {
    assert_eq!(x.len(), m.n_vars);
    let mut max_constraint = 0.0f64;
    for c in &m.constraints {
        let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let violation = match c.relation {
            Relation::Le => lhs - c.rhs,
            Relation::Ge => c.rhs - lhs,
            Relation::Eq => (lhs - c.rhs).abs(),
        };
        max_constraint = max_constraint.max(violation / (1.0 + c.rhs.abs()));
    }
    let mut max_bound = 0.0f64;
    for (v, (lo, up)) in x.iter().zip(&m.bounds) {
        max_bound = max_bound.max(lo - v);
        if up.is_finite() {
            max_bound = max_bound.max(v - up);
        }
    }
    Residuals {
        max_constraint,
        max_bound,
    }
}

/// Human-readable dump of a model for triage.
pub fn model_to_text(m: &LpModel) -> String {
    let term = |j: usize, c: f64| format!("{c:+.6}*x{j}");
    let mut out = String::new();
    out.push_str("min ");
    for (j, c) in m.objective.iter().enumerate() {
        if j > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{}", term(j, *c));
    }
    out.push('\n');
    for (i, c) in m.constraints.iter().enumerate() {
        let _ = write!(out, "c{i}: ");
        let mut wrote = false;
        for (j, a) in c.coeffs.iter().enumerate() {
            if *a != 0.0 {
                if wrote {
                    out.push(' ');
                }
                let _ = write!(out, "{}", term(j, *a));
                wrote = true;
            }
        }
        if !wrote {
            out.push('0');
        }
        let _ = writeln!(out, " {} {:.6}", c.relation.symbol(), c.rhs);
    }
    for (j, (lo, up)) in m.bounds.iter().enumerate() {
        let _ = writeln!(out, "x{j} in [{lo}, {up}]");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(
        n_vars: usize,
        objective: &[f64],
        constraints: &[(&[f64], Relation, f64)],
        bounds: &[(f64, f64)],
    ) -> LpModel {
        LpModel {
            n_vars,
            objective: objective.to_vec(),
            constraints: constraints
                .iter()
                .map(|(c, rel, rhs)| Constraint {
                    coeffs: c.to_vec(),
                    relation: *rel,
                    rhs: *rhs,
                })
                .collect(),
            bounds: bounds.to_vec(),
        }
    }

    #[test]
    fn minimal_point_on_a_lower_bounded_line() {
        let m = model(1, &[1.0], &[(&[1.0], Relation::Ge, 3.0)], &[(0.0, 10.0)]);
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
        assert!((sol.objective_value - 3.0).abs() < 1e-9);
        let res = check_solution(&m, &sol.x);
        assert!(res.max_constraint < 1e-9 && res.max_bound < 1e-9);
    }

    #[test]
    fn open_direction_is_unbounded() {
        let m = model(1, &[-1.0], &[], &[(0.0, f64::INFINITY)]);
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn conflicting_rows_are_infeasible() {
        let m = model(
            2,
            &[1.0, 1.0],
            &[(&[1.0, 1.0], Relation::Ge, 4.0)],
            &[(0.0, 1.0), (0.0, 1.0)],
        );
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Infeasible);
    }

    #[test]
    fn equalities_pin_the_solution() {
        let m = model(
            2,
            &[1.0, 1.0],
            &[
                (&[1.0, 1.0], Relation::Eq, 2.0),
                (&[1.0, -1.0], Relation::Eq, 0.0),
            ],
            &[(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
        );
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);
        assert!((sol.x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_rows_do_not_confuse_the_basis() {
        let m = model(
            2,
            &[2.0, 3.0],
            &[
                (&[1.0, 1.0], Relation::Ge, 2.0),
                (&[1.0, 1.0], Relation::Ge, 2.0),
                (&[2.0, 2.0], Relation::Eq, 4.0),
                (&[1.0, 1.0], Relation::Eq, 2.0),
            ],
            &[(0.0, 5.0), (0.0, 5.0)],
        );
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - 4.0).abs() < 1e-9, "{}", sol.objective_value);
        assert!((sol.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn positive_lower_bounds_are_honored() {
        let m = model(
            2,
            &[1.0, 2.0],
            &[(&[1.0, 1.0], Relation::Le, 10.0)],
            &[(0.5, 4.0), (1.5, 4.0)],
        );
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.x[0] - 0.5).abs() < 1e-9);
        assert!((sol.x[1] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn degenerate_vertices_terminate() {
        // Multiple constraints meet at the optimum; Bland's rule must not
        // cycle.
        let m = model(
            3,
            &[-0.75, 150.0, -0.02],
            &[
                (&[0.25, -60.0, -0.04], Relation::Le, 0.0),
                (&[0.5, -90.0, -0.02], Relation::Le, 0.0),
                (&[0.0, 0.0, 1.0], Relation::Le, 1.0),
            ],
            &[
                (0.0, f64::INFINITY),
                (0.0, f64::INFINITY),
                (0.0, f64::INFINITY),
            ],
        );
        let sol = solve(&m).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((sol.objective_value - -0.05).abs() < 1e-9, "{}", sol.objective_value);
    }

    #[test]
    fn random_feasible_models_solve_cleanly() {
        // Feasibility is forced by building rows around a known point, so
        // every solve must come back optimal with an objective no worse
        // than that point, and residuals must pass.
        let mut state = 12345u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for case in 0..200 {
            let n = 2 + (case % 5);
            let x0: Vec<f64> = (0..n).map(|_| next() * 3.0).collect();
            let mut constraints = Vec::new();
            for _ in 0..(2 + case % 6) {
                let coeffs: Vec<f64> = (0..n).map(|_| next() * 4.0 - 2.0).collect();
                let lhs: f64 = coeffs.iter().zip(&x0).map(|(a, v)| a * v).sum();
                constraints.push(Constraint {
                    coeffs,
                    relation: Relation::Le,
                    rhs: lhs + next(),
                });
            }
            let m = LpModel {
                n_vars: n,
                objective: (0..n).map(|_| next() * 2.0 - 1.0).collect(),
                constraints,
                bounds: vec![(0.0, 4.0); n],
            };
            let sol = solve(&m).unwrap();
            assert_eq!(sol.status, LpStatus::Optimal, "case {case}");
            let res = check_solution(&m, &sol.x);
            assert!(res.max_constraint < 1e-9, "case {case}: {res:?}");
            assert!(res.max_bound < 1e-9, "case {case}: {res:?}");
            let at_x0: f64 = m.objective.iter().zip(&x0).map(|(c, v)| c * v).sum();
            assert!(sol.objective_value <= at_x0 + 1e-9, "case {case}");
        }
    }

    #[test]
    fn invalid_models_are_rejected() {
        let mut m = model(2, &[1.0], &[], &[(0.0, 1.0), (0.0, 1.0)]);
        assert!(matches!(solve(&m), Err(LpError::InvalidModel(_))));
        m = model(1, &[f64::NAN], &[], &[(0.0, 1.0)]);
        assert!(solve(&m).is_err());
        m = model(1, &[1.0], &[(&[1.0], Relation::Le, f64::INFINITY)], &[(0.0, 1.0)]);
        assert!(solve(&m).is_err());
        m = model(1, &[1.0], &[], &[(2.0, 1.0)]);
        assert!(solve(&m).is_err());
        m = model(1, &[1.0], &[], &[(-1.0, 1.0)]);
        assert!(solve(&m).is_err());
    }

    #[test]
    fn model_dump_is_readable() {
        let m = model(
            2,
            &[1.0, 0.0],
            &[(&[1.0, -2.0], Relation::Ge, 3.0)],
            &[(0.0, 1.0), (0.0, f64::INFINITY)],
        );
        let text = model_to_text(&m);
        assert!(text.starts_with("min "));
        assert!(text.contains(">= 3"));
        assert!(text.contains("x0 in [0, 1]"));
    }
}
