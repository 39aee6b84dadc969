//! Dense two-phase primal simplex for small linear programs.
//!
//! Problems are stated as `maximize c^T x` subject to linear rows with
//! `<=`, `>=` or `=` relations and `x >= 0`. Pivoting follows Bland's rule,
//! so degenerate problems (which the time-sharing programs produce in
//! abundance) cannot cycle.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex did not converge within {0} pivots")]
    IterationLimit(usize),
    #[error("constraint row has {got} coefficients, expected {expected}")]
    Dimension { expected: usize, got: usize },
}

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

#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    /// Feasibility tolerance for phase one and for the final primal values.
    pub tolerance: f64,
    /// Entries smaller than this are treated as zero when pivoting.
    pub pivot_tolerance: f64,
    pub max_pivots: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-9,
            pivot_tolerance: 1e-12,
            max_pivots: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    /// Maximize `objective^T x`.
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self {
            objective,
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Result<(), LpError> {
        if coeffs.len() != self.num_vars() {
            return Err(LpError::Dimension {
                expected: self.num_vars(),
                got: coeffs.len(),
            });
        }
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
        Ok(())
    }

    /// Largest violation of any row or sign constraint at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = x.iter().map(|&v| (-v).max(0.0)).fold(0.0, f64::max);
        for c in &self.constraints {
            let lhs: f64 = c.coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
            let v = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with(&SimplexOptions::default())
    }

    pub fn solve_with(&self, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
        let mut t = Tableau::build(self, opts);
        t.phase_one()?;
        t.phase_two(&self.objective)?;
        let x = t.primal(self.num_vars());
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution {
            x,
            objective,
            pivots: t.pivots,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColumnKind {
    Structural,
    Slack,
    Artificial,
}

struct Tableau {
    /// `m` rows of `ncols + 1` entries; the last entry is the right-hand side.
    rows: Vec<Vec<f64>>,
    /// Reduced costs `c_B B^-1 A_j - c_j` plus the current objective value.
    z: Vec<f64>,
    basis: Vec<usize>,
    kinds: Vec<ColumnKind>,
    opts: SimplexOptions,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram, opts: &SimplexOptions) -> Self {
        let n = lp.num_vars();
        let m = lp.constraints.len();

        let mut kinds = vec![ColumnKind::Structural; n];
        // Column layout: structurals, then one slack/surplus per inequality,
        // then artificials for rows without a usable slack.
        let mut slack_col = vec![None; m];
        let mut needs_artificial = vec![false; m];
        let mut normalized = Vec::with_capacity(m);
        for (i, c) in lp.constraints.iter().enumerate() {
            let (mut coeffs, mut rel, mut rhs) = (c.coeffs.clone(), c.relation, c.rhs);
            if rhs < 0.0 {
                coeffs.iter_mut().for_each(|a| *a = -*a);
                rhs = -rhs;
                rel = match rel {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
            }
            if rel != Relation::Eq {
                slack_col[i] = Some(kinds.len());
                kinds.push(ColumnKind::Slack);
            }
            needs_artificial[i] = rel != Relation::Le;
            normalized.push((coeffs, rel, rhs));
        }
        let mut art_col = vec![None; m];
        for i in 0..m {
            if needs_artificial[i] {
                art_col[i] = Some(kinds.len());
                kinds.push(ColumnKind::Artificial);
            }
        }

        let ncols = kinds.len();
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        for (i, (coeffs, rel, rhs)) in normalized.into_iter().enumerate() {
            let mut row = vec![0.0; ncols + 1];
            row[..n].copy_from_slice(&coeffs);
            if let Some(s) = slack_col[i] {
                row[s] = if rel == Relation::Ge { -1.0 } else { 1.0 };
            }
            if let Some(a) = art_col[i] {
                row[a] = 1.0;
                basis.push(a);
            } else {
                basis.push(slack_col[i].expect("<= row has a slack"));
            }
            row[ncols] = rhs;
            rows.push(row);
        }

        Self {
            rows,
            z: vec![0.0; ncols + 1],
            basis,
            kinds,
            opts: *opts,
            pivots: 0,
        }
    }

    fn ncols(&self) -> usize {
        self.kinds.len()
    }

    fn set_objective(&mut self, cost: &[f64]) {
        let nc = self.ncols();
        let mut z = vec![0.0; nc + 1];
        for j in 0..nc {
            z[j] = -cost[j];
        }
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (zj, a) in z.iter_mut().zip(row) {
                    *zj += cb * a;
                }
            }
        }
        self.z = z;
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pr) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        let f = self.z[c];
        if f != 0.0 {
            for (v, pr) in self.z.iter_mut().zip(&pivot_row) {
                *v -= f * pr;
            }
            self.z[c] = 0.0;
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Runs simplex iterations on the current objective row until optimal.
    fn iterate(&mut self, allow_artificial: bool) -> Result<(), LpError> {
        let eps = self.opts.pivot_tolerance;
        let nc = self.ncols();
        loop {
            if self.pivots >= self.opts.max_pivots {
                return Err(LpError::IterationLimit(self.opts.max_pivots));
            }
            // Bland: lowest-index improving column.
            let entering = (0..nc).find(|&j| {
                (allow_artificial || self.kinds[j] != ColumnKind::Artificial) && self.z[j] < -eps
            });
            let Some(c) = entering else {
                return Ok(());
            };
            // Ratio test, ties broken by lowest basic index.
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > eps {
                    let ratio = row[nc] / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - eps * lr.abs().max(1.0)
                                || (ratio <= lr + eps * lr.abs().max(1.0)
                                    && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Err(LpError::Unbounded);
            };
            self.pivot(r, c);
        }
    }

    fn phase_one(&mut self) -> Result<(), LpError> {
        if !self.kinds.contains(&ColumnKind::Artificial) {
            return Ok(());
        }
        let cost: Vec<f64> = self
            .kinds
            .iter()
            .map(|k| {
                if *k == ColumnKind::Artificial {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect();
        self.set_objective(&cost);
        self.iterate(true)?;
        let residual = -self.z[self.ncols()];
        if residual > self.opts.tolerance {
            return Err(LpError::Infeasible(residual));
        }
        self.evict_artificials();
        Ok(())
    }

    /// Pivots zero-level artificials out of the basis; rows where that is
    /// impossible are linearly dependent on the others and get dropped.
    fn evict_artificials(&mut self) {
        let nc = self.ncols();
        let mut r = 0;
        while r < self.rows.len() {
            if self.kinds[self.basis[r]] != ColumnKind::Artificial {
                r += 1;
                continue;
            }
            let col = (0..nc).find(|&j| {
                self.kinds[j] != ColumnKind::Artificial
                    && self.rows[r][j].abs() > self.opts.pivot_tolerance
            });
            match col {
                Some(c) => {
                    self.pivot(r, c);
                    r += 1;
                }
                None => {
                    self.rows.remove(r);
                    self.basis.remove(r);
                }
            }
        }
    }

    fn phase_two(&mut self, objective: &[f64]) -> Result<(), LpError> {
        let mut cost = vec![0.0; self.ncols()];
        cost[..objective.len()].copy_from_slice(objective);
        self.set_objective(&cost);
        self.iterate(false)
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let nc = self.ncols();
        let mut x = vec![0.0; n];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < n {
                // Clip round-off below zero.
                x[b] = row[nc].max(0.0);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_maximum() {
        // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18 -> (2, 6), 36
        let mut lp = LinearProgram::maximize(vec![3.0, 5.0]);
        lp.add(vec![1.0, 0.0], Relation::Le, 4.0).unwrap();
        lp.add(vec![0.0, 2.0], Relation::Le, 12.0).unwrap();
        lp.add(vec![3.0, 2.0], Relation::Le, 18.0).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.objective - 36.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12 && (s.x[1] - 6.0).abs() < 1e-12);
    }

    #[test]
    fn equality_and_ge_rows_need_phase_one() {
        // max x + y, x + y = 3, x >= 1, y - x >= -0.5 (written with negative rhs)
        let mut lp = LinearProgram::maximize(vec![-1.0, -2.0]);
        lp.add(vec![1.0, 1.0], Relation::Eq, 3.0).unwrap();
        lp.add(vec![1.0, 0.0], Relation::Ge, 1.0).unwrap();
        lp.add(vec![-1.0, 1.0], Relation::Ge, -0.5).unwrap();
        let s = lp.solve().unwrap();
        // minimize x + 2y with x + y = 3, y >= x - 0.5 -> x = 1.75, y = 1.25
        assert!((s.x[0] - 1.75).abs() < 1e-12, "{:?}", s.x);
        assert!((s.x[1] - 1.25).abs() < 1e-12);
        assert!(lp.max_violation(&s.x) < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::maximize(vec![1.0]);
        lp.add(vec![1.0], Relation::Le, 1.0).unwrap();
        lp.add(vec![1.0], Relation::Ge, 2.0).unwrap();
        assert!(matches!(lp.solve(), Err(LpError::Infeasible(_))));

        let mut lp = LinearProgram::maximize(vec![1.0, 0.0]);
        lp.add(vec![-1.0, 1.0], Relation::Le, 1.0).unwrap();
        assert_eq!(lp.solve(), Err(LpError::Unbounded));
    }

    #[test]
    fn redundant_equalities_are_dropped() {
        let mut lp = LinearProgram::maximize(vec![1.0, 1.0]);
        lp.add(vec![1.0, 1.0], Relation::Eq, 2.0).unwrap();
        lp.add(vec![2.0, 2.0], Relation::Eq, 4.0).unwrap();
        lp.add(vec![1.0, 0.0], Relation::Le, 0.5).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_problem_terminates() {
        // Beale's cycling example; Bland's rule must terminate at objective 0.05.
        let mut lp = LinearProgram::maximize(vec![0.75, -150.0, 0.02, -6.0]);
        lp.add(vec![0.25, -60.0, -0.04, 9.0], Relation::Le, 0.0)
            .unwrap();
        lp.add(vec![0.5, -90.0, -0.02, 3.0], Relation::Le, 0.0)
            .unwrap();
        lp.add(vec![0.0, 0.0, 1.0, 0.0], Relation::Le, 1.0).unwrap();
        let s = lp.solve().unwrap();
        assert!((s.objective - 0.05).abs() < 1e-12, "{}", s.objective);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let mut lp = LinearProgram::maximize(vec![1.0, 2.0]);
        assert_eq!(
            lp.add(vec![1.0], Relation::Le, 1.0),
            Err(LpError::Dimension {
                expected: 2,
                got: 1
            })
        );
    }
}
