//! Dense two-phase primal simplex.
//!
//! Solves `max c'x` subject to linear constraints with `x >= 0`. The frontier
//! programs handed to it are tiny (one column per reference unit plus the
//! expansion factor, one row per input/output dimension), so the solver keeps
//! a full dense tableau and uses Bland's rule throughout: the entering column
//! is the lowest-indexed one with a positive reduced cost and ratio-test ties
//! go to the lowest-indexed basic variable. This rules out cycling on the
//! highly degenerate programs DEA produces.

use crate::error::{Error, Result};

/// Reduced costs below this are treated as zero.
const COST_TOL: f64 = 1e-11;
/// Smallest admissible pivot magnitude in the ratio test.
const PIVOT_TOL: f64 = 1e-11;
/// Phase-one objective above `-FEAS_TOL` means the program is feasible.
const FEAS_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A maximization problem over nonnegative variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub values: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
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

    pub fn add_constraint(&mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) {
        assert_eq!(
            coefficients.len(),
            self.objective.len(),
            "constraint width must match the number of variables"
        );
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> Result<LpSolution> {
        if self
            .objective
            .iter()
            .chain(self.constraints.iter().flat_map(|c| c.coefficients.iter()))
            .chain(self.constraints.iter().map(|c| &c.rhs))
            .any(|v| !v.is_finite())
        {
            return Err(Error::NumericalFailure("non-finite LP data".into()));
        }
        Tableau::build(self).run(&self.objective)
    }
}

/// Column layout: original variables, then one slack/surplus per inequality,
/// then one artificial per `=`/`>=` row.
struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_orig: usize,
    n_cols: usize,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n_orig = lp.objective.len();
        let m = lp.constraints.len();

        // rhs >= 0 for every row
        let normalized: Vec<(Vec<f64>, Relation, f64)> = lp
            .constraints
            .iter()
            .map(|c| {
                if c.rhs < 0.0 {
                    let rel = match c.relation {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                    (c.coefficients.iter().map(|v| -v).collect(), rel, -c.rhs)
                } else {
                    (c.coefficients.clone(), c.relation, c.rhs)
                }
            })
            .collect();

        let n_slack = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Eq)
            .count();
        let n_art = normalized
            .iter()
            .filter(|(_, r, _)| *r != Relation::Le)
            .count();
        let first_artificial = n_orig + n_slack;
        let n_cols = first_artificial + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let mut slack = n_orig;
        let mut art = first_artificial;
        for (coef, rel, rhs) in normalized {
            let mut row = vec![0.0; n_cols + 1];
            row[..n_orig].copy_from_slice(&coef);
            row[n_cols] = rhs;
            match rel {
                Relation::Le => {
                    row[slack] = 1.0;
                    basis.push(slack);
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    slack += 1;
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    basis.push(art);
                    art += 1;
                }
            }
            rows.push(row);
        }

        Self {
            rows,
            basis,
            n_orig,
            n_cols,
            first_artificial,
            pivots: 0,
        }
    }

    fn run(mut self, objective: &[f64]) -> Result<LpSolution> {
        if self.first_artificial < self.n_cols {
            let mut phase_one = vec![0.0; self.n_cols];
            for c in &mut phase_one[self.first_artificial..] {
                *c = -1.0;
            }
            let value = self.optimize(&phase_one, self.n_cols)?;
            if value < -FEAS_TOL {
                return Err(Error::Infeasible);
            }
            self.drive_out_artificials();
        }

        let mut costs = vec![0.0; self.n_cols];
        costs[..self.n_orig].copy_from_slice(objective);
        self.optimize(&costs, self.first_artificial)?;

        let mut values = vec![0.0; self.n_orig];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.n_orig {
                values[b] = row[self.n_cols].max(0.0);
            }
        }
        let objective = values.iter().zip(objective).map(|(x, c)| x * c).sum();
        Ok(LpSolution {
            values,
            objective,
            pivots: self.pivots,
        })
    }

    /// Runs primal simplex on `costs`, letting only columns `< allowed` enter.
    /// Returns the optimal objective value.
    fn optimize(&mut self, costs: &[f64], allowed: usize) -> Result<f64> {
        let rhs = self.n_cols;
        let mut reduced = costs.to_vec();
        reduced.push(0.0);
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = costs[b];
            if cb != 0.0 {
                for (d, a) in reduced.iter_mut().zip(row) {
                    *d -= cb * a;
                }
            }
        }

        loop {
            let Some(enter) = (0..allowed).find(|&j| reduced[j] > COST_TOL) else {
                return Ok(-reduced[rhs]);
            };

            let mut leave: Option<usize> = None;
            let mut best = f64::INFINITY;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[enter];
                if a > PIVOT_TOL {
                    let ratio = row[rhs] / a;
                    let tie = 1e-12 * best.abs().max(1.0);
                    match leave {
                        Some(l) if ratio > best - tie => {
                            if ratio < best + tie && self.basis[i] < self.basis[l] {
                                leave = Some(i);
                                best = best.min(ratio);
                            }
                        }
                        _ => {
                            leave = Some(i);
                            best = ratio;
                        }
                    }
                }
            }
            let Some(leave) = leave else {
                return Err(Error::Unbounded);
            };

            self.pivot(leave, enter);
            let factor = reduced[enter];
            let prow = &self.rows[leave];
            for (d, a) in reduced.iter_mut().zip(prow) {
                *d -= factor * a;
            }
            reduced[enter] = 0.0;

            self.pivots += 1;
            if self.pivots > MAX_PIVOTS {
                return Err(Error::NumericalFailure("pivot limit exceeded".into()));
            }
        }
    }

    fn pivot(&mut self, leave: usize, enter: usize) {
        let p = self.rows[leave][enter];
        for v in self.rows[leave].iter_mut() {
            *v /= p;
        }
        self.rows[leave][enter] = 1.0;
        let prow = self.rows[leave].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == leave {
                continue;
            }
            let f = row[enter];
            if f != 0.0 {
                for (v, a) in row.iter_mut().zip(&prow) {
                    *v -= f * a;
                }
                row[enter] = 0.0;
            }
        }
        self.basis[leave] = enter;
    }

    /// After phase one, artificials left in the basis sit at zero. Pivot each
    /// onto any structural column with a nonzero entry, or drop the row as
    /// redundant.
    fn drive_out_artificials(&mut self) {
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| self.rows[i][j].abs() > 1e-9);
                match col {
                    Some(j) => {
                        self.pivot(i, j);
                        self.pivots += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                        continue;
                    }
                }
            }
            i += 1;
        }
    }
}
