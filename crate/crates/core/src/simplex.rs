//! Dense two-phase primal simplex with Bland's rule.
//!
//! Built for the small polyhedral problems of this crate (tens of rows and
//! columns); determinism matters more than speed, so the pivot rule is
//! Bland's anti-cycling rule throughout and arithmetic is plain f64.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const OPT_TOL: f64 = 1e-9;
const MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn new(coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        Constraint { coeffs, relation, rhs }
    }
}

/// `maximize objective · x  subject to  constraints, x >= 0`.
#[derive(Debug, Clone)]
pub struct Lp {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, solution: Vec<f64> },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn optimal(&self) -> Option<(f64, &[f64])> {
        match self {
            LpOutcome::Optimal { value, solution } => Some((*value, solution)),
            _ => None,
        }
    }
}

struct Tableau {
    // rows[r] holds the constraint row over all structural+slack+artificial
    // columns; rhs kept separately.
    rows: Vec<Vec<f64>>,
    rhs: Vec<f64>,
    basis: Vec<usize>,
    n_structural: usize,
    n_total: usize,
    artificial_start: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let piv = self.rows[r][c];
        let inv = 1.0 / piv;
        for v in self.rows[r].iter_mut() {
            *v *= inv;
        }
        self.rhs[r] *= inv;
        // guard against drift on the pivot element itself
        self.rows[r][c] = 1.0;
        for i in 0..self.rows.len() {
            if i == r {
                continue;
            }
            let factor = self.rows[i][c];
            if factor != 0.0 {
                for j in 0..self.n_total {
                    self.rows[i][j] -= factor * self.rows[r][j];
                }
                self.rows[i][c] = 0.0;
                self.rhs[i] -= factor * self.rhs[r];
            }
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for objective `costs` over all columns, given the
    /// current basis: `z_j - c_j`; also returns the objective value.
    fn reduced_costs(&self, costs: &[f64]) -> (Vec<f64>, f64) {
        let m = self.rows.len();
        let mut rc = vec![0.0; self.n_total];
        let mut value = 0.0;
        for r in 0..m {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                value += cb * self.rhs[r];
                for j in 0..self.n_total {
                    rc[j] += cb * self.rows[r][j];
                }
            }
        }
        for j in 0..self.n_total {
            rc[j] -= costs[j];
        }
        (rc, value)
    }

    /// Primal simplex with Bland's rule on the given cost vector.
    /// `allowed` masks columns that may enter the basis.
    fn run(&mut self, costs: &[f64], allowed: &dyn Fn(usize) -> bool) -> Result<bool> {
        for _ in 0..MAX_ITERS {
            let (rc, _) = self.reduced_costs(costs);
            // Bland: smallest-index improving column.
            let entering = (0..self.n_total)
                .find(|&j| allowed(j) && !self.basis.contains(&j) && rc[j] < -OPT_TOL);
            let Some(c) = entering else {
                return Ok(true);
            };
            // Ratio test; ties resolved toward the smallest basis variable.
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][c];
                if a > PIVOT_TOL {
                    let ratio = self.rhs[r] / a;
                    match leave {
                        None => leave = Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - 1e-12
                                || ((ratio - bratio).abs() <= 1e-12
                                    && self.basis[r] < self.basis[br])
                            {
                                leave = Some((r, ratio));
                            }
                        }
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(false); // unbounded in this direction
            };
            self.pivot(r, c);
        }
        Err(Error::Lp("iteration limit reached".to_string()))
    }
}

/// Solve the LP; see [`Lp`]. Returns `Infeasible` / `Unbounded` as data,
/// reserving `Err` for solver breakdowns.
pub fn solve(lp: &Lp) -> Result<LpOutcome> {
    let n = lp.objective.len();
    let m = lp.constraints.len();
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.coeffs.len() != n {
            return Err(Error::Lp(format!(
                "constraint {i} has {} coefficients, expected {n}",
                c.coeffs.len()
            )));
        }
    }

    // Count extra columns: one slack/surplus per inequality, one artificial
    // per Ge/Eq row (after normalizing rhs >= 0).
    let mut n_slack = 0;
    let mut n_art = 0;
    let mut normalized: Vec<(Vec<f64>, Relation, f64)> = Vec::with_capacity(m);
    for c in &lp.constraints {
        let (coeffs, relation, rhs) = if c.rhs < 0.0 {
            let flipped = match c.relation {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
            (c.coeffs.iter().map(|v| -v).collect(), flipped, -c.rhs)
        } else {
            (c.coeffs.clone(), c.relation, c.rhs)
        };
        match relation {
            Relation::Le => n_slack += 1,
            Relation::Ge => {
                n_slack += 1;
                n_art += 1;
            }
            Relation::Eq => n_art += 1,
        }
        normalized.push((coeffs, relation, rhs));
    }

    let n_total = n + n_slack + n_art;
    let artificial_start = n + n_slack;
    let mut rows = vec![vec![0.0; n_total]; m];
    let mut rhs = vec![0.0; m];
    let mut basis = vec![usize::MAX; m];
    let mut slack_idx = n;
    let mut art_idx = artificial_start;

    for (r, (coeffs, relation, b)) in normalized.iter().enumerate() {
        rows[r][..n].copy_from_slice(coeffs);
        rhs[r] = *b;
        match relation {
            Relation::Le => {
                rows[r][slack_idx] = 1.0;
                basis[r] = slack_idx;
                slack_idx += 1;
            }
            Relation::Ge => {
                rows[r][slack_idx] = -1.0;
                slack_idx += 1;
                rows[r][art_idx] = 1.0;
                basis[r] = art_idx;
                art_idx += 1;
            }
            Relation::Eq => {
                rows[r][art_idx] = 1.0;
                basis[r] = art_idx;
                art_idx += 1;
            }
        }
    }

    let mut tab = Tableau { rows, rhs, basis, n_structural: n, n_total, artificial_start };

    // Phase 1: maximize -sum(artificials).
    if n_art > 0 {
        let mut costs = vec![0.0; n_total];
        for j in artificial_start..n_total {
            costs[j] = -1.0;
        }
        tab.run(&costs, &|_| true)?;
        let (_, value) = tab.reduced_costs(&costs);
        if value < -1e-8 {
            return Ok(LpOutcome::Infeasible);
        }
        // Drive remaining artificials out of the basis where possible.
        for r in 0..m {
            if tab.basis[r] >= artificial_start {
                let col = (0..artificial_start).find(|&j| tab.rows[r][j].abs() > PIVOT_TOL);
                if let Some(c) = col {
                    tab.pivot(r, c);
                }
                // If no pivot exists the row is redundant; the artificial
                // stays basic at value ~0 and is barred from re-entering.
            }
        }
    }

    // Phase 2: original objective; artificial columns may not enter.
    let mut costs = vec![0.0; n_total];
    costs[..n].copy_from_slice(&lp.objective);
    let art_start = tab.artificial_start;
    let bounded = tab.run(&costs, &move |j| j < art_start)?;
    if !bounded {
        return Ok(LpOutcome::Unbounded);
    }

    let (_, value) = tab.reduced_costs(&costs);
    let mut solution = vec![0.0; n];
    for r in 0..m {
        if tab.basis[r] < tab.n_structural {
            solution[tab.basis[r]] = tab.rhs[r];
        }
    }
    Ok(LpOutcome::Optimal { value, solution })
}

/// Convenience: feasibility of `constraints` for some `x >= 0`.
pub fn feasible(n_vars: usize, constraints: &[Constraint]) -> Result<bool> {
    let lp = Lp { objective: vec![0.0; n_vars], constraints: constraints.to_vec() };
    Ok(!matches!(solve(&lp)?, LpOutcome::Infeasible))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn textbook_max_problem() {
        // max 3x + 2y s.t. x + y <= 4, x + 3y <= 6 → x=4, y=0, value 12
        let lp = Lp {
            objective: vec![3.0, 2.0],
            constraints: vec![
                Constraint::new(vec![1.0, 1.0], Relation::Le, 4.0),
                Constraint::new(vec![1.0, 3.0], Relation::Le, 6.0),
            ],
        };
        let (value, x) = solve(&lp).unwrap().optimal().map(|(v, s)| (v, s.to_vec())).unwrap();
        assert_close(value, 12.0, 1e-9);
        assert_close(x[0], 4.0, 1e-9);
    }

    #[test]
    fn equality_and_ge_rows() {
        // max x + y s.t. x + y = 1, x >= 0.25 → value 1
        let lp = Lp {
            objective: vec![1.0, 1.0],
            constraints: vec![
                Constraint::new(vec![1.0, 1.0], Relation::Eq, 1.0),
                Constraint::new(vec![1.0, 0.0], Relation::Ge, 0.25),
            ],
        };
        let (value, x) = solve(&lp).unwrap().optimal().map(|(v, s)| (v, s.to_vec())).unwrap();
        assert_close(value, 1.0, 1e-9);
        assert!(x[0] >= 0.25 - 1e-9);
    }

    #[test]
    fn detects_infeasible() {
        let lp = Lp {
            objective: vec![1.0],
            constraints: vec![
                Constraint::new(vec![1.0], Relation::Ge, 2.0),
                Constraint::new(vec![1.0], Relation::Le, 1.0),
            ],
        };
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn detects_unbounded() {
        let lp = Lp {
            objective: vec![1.0, 0.0],
            constraints: vec![Constraint::new(vec![-1.0, 1.0], Relation::Le, 1.0)],
        };
        assert_eq!(solve(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn negative_rhs_normalization() {
        // max -x s.t. -x <= -2  (i.e. x >= 2) → x = 2, value -2
        let lp = Lp {
            objective: vec![-1.0],
            constraints: vec![Constraint::new(vec![-1.0], Relation::Le, -2.0)],
        };
        let (value, x) = solve(&lp).unwrap().optimal().map(|(v, s)| (v, s.to_vec())).unwrap();
        assert_close(value, -2.0, 1e-9);
        assert_close(x[0], 2.0, 1e-9);
    }

    #[test]
    fn degenerate_rows_do_not_cycle() {
        // Classic degenerate instance; Bland's rule must terminate.
        let lp = Lp {
            objective: vec![0.75, -150.0, 0.02, -6.0],
            constraints: vec![
                Constraint::new(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0),
                Constraint::new(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0),
                Constraint::new(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0),
            ],
        };
        let (value, _) = solve(&lp).unwrap().optimal().map(|(v, s)| (v, s.to_vec())).unwrap();
        assert_close(value, 0.05, 1e-9);
    }

    /// Brute-force oracle: enumerate all basic solutions of the
    /// slack-augmented system and keep the best feasible one.
    fn brute_force(lp: &Lp) -> Option<f64> {
        // Augment: rows over structural + slack columns, all Le assumed.
        let n = lp.objective.len();
        let m = lp.constraints.len();
        let n_tot = n + m;
        let mut best: Option<f64> = None;
        let idx: Vec<usize> = (0..n_tot).collect();

        fn combos(pool: &[usize], k: usize) -> Vec<Vec<usize>> {
            if k == 0 {
                return vec![vec![]];
            }
            if pool.len() < k {
                return vec![];
            }
            let mut out = Vec::new();
            for (i, &x) in pool.iter().enumerate() {
                for mut rest in combos(&pool[i + 1..], k - 1) {
                    let mut v = vec![x];
                    v.append(&mut rest);
                    out.push(v);
                }
            }
            out
        }

        for basis in combos(&idx, m) {
            // Solve the m×m system by Gaussian elimination.
            let mut a = vec![vec![0.0_f64; m]; m];
            let mut b = vec![0.0_f64; m];
            for r in 0..m {
                b[r] = lp.constraints[r].rhs;
                for (k, &j) in basis.iter().enumerate() {
                    a[r][k] = if j < n {
                        lp.constraints[r].coeffs[j]
                    } else if j - n == r {
                        1.0
                    } else {
                        0.0
                    };
                }
            }
            // elimination
            let mut ok = true;
            for col in 0..m {
                let piv = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()));
                let piv = piv.unwrap();
                if a[piv][col].abs() < 1e-9 {
                    ok = false;
                    break;
                }
                a.swap(col, piv);
                b.swap(col, piv);
                for r in 0..m {
                    if r != col {
                        let f = a[r][col] / a[col][col];
                        for c2 in 0..m {
                            a[r][c2] -= f * a[col][c2];
                        }
                        b[r] -= f * b[col];
                    }
                }
            }
            if !ok {
                continue;
            }
            let xb: Vec<f64> = (0..m).map(|r| b[r] / a[r][r]).collect();
            if xb.iter().any(|&v| v < -1e-9) {
                continue;
            }
            let mut value = 0.0;
            for (k, &j) in basis.iter().enumerate() {
                if j < n {
                    value += lp.objective[j] * xb[k];
                }
            }
            best = Some(best.map_or(value, |b: f64| b.max(value)));
        }
        best
    }

    #[test]
    fn random_instances_match_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let mut checked = 0;
        for _ in 0..200 {
            let n = rng.random_range(1..=4);
            let m = rng.random_range(1..=4);
            let lp = Lp {
                objective: (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
                constraints: (0..m)
                    .map(|_| {
                        Constraint::new(
                            (0..n).map(|_| rng.random_range(-2.0..2.0)).collect(),
                            Relation::Le,
                            rng.random_range(0.1..3.0),
                        )
                    })
                    .collect(),
            };
            match solve(&lp).unwrap() {
                LpOutcome::Optimal { value, .. } => {
                    let brute = brute_force(&lp).expect("oracle found no feasible basis");
                    assert_close(value, brute, 1e-7);
                    checked += 1;
                }
                LpOutcome::Unbounded => {} // oracle cannot certify; skip
                LpOutcome::Infeasible => panic!("x=0 is always feasible here"),
            }
        }
        assert!(checked > 50, "too few bounded instances: {checked}");
    }
}
