//! Dense two-phase tableau simplex for small linear programs.
//!
//! Solves `maximize c^T x` subject to `A_le x <= b_le`, `A_eq x = b_eq`,
//! `x >= 0`. Pricing picks the most negative reduced cost and falls back to
//! Bland's rule while the objective stalls, so degenerate problems cannot
//! cycle.

use thiserror::Error;

const EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("linear program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),
    #[error("constraint row has {got} coefficients, expected {expected}")]
    Shape { got: usize, expected: usize },
}

#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    n: usize,
    objective: Vec<f64>,
    le: Vec<(Vec<f64>, f64)>,
    eq: Vec<(Vec<f64>, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub pivots: usize,
}

impl LinearProgram {
    /// A program over `n` non-negative variables maximizing `objective`.
    pub fn maximize(objective: Vec<f64>) -> Self {
        Self {
            n: objective.len(),
            objective,
            ..Self::default()
        }
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) -> Result<(), LpError> {
        self.check(&objective)?;
        self.objective = objective;
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> Result<(), LpError> {
        self.check(&row)?;
        self.le.push((row, rhs));
        Ok(())
    }

    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> Result<(), LpError> {
        self.check(&row)?;
        self.eq.push((row, rhs));
        Ok(())
    }

    fn check(&self, row: &[f64]) -> Result<(), LpError> {
        if row.len() == self.n {
            Ok(())
        } else {
            Err(LpError::Shape {
                got: row.len(),
                expected: self.n,
            })
        }
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        Tableau::build(self).run(self)
    }
}

/// Row-major tableau. Columns: structural, slack/surplus, artificial, rhs.
struct Tableau {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    n_struct: usize,
    first_artificial: usize,
    pivots: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n;
        // Normalize every row to a non-negative right-hand side.
        struct Row<'a> {
            coeffs: &'a [f64],
            rhs: f64,
            sign: f64,
            slack: Option<f64>,
            artificial: bool,
        }
        let mut rows = Vec::with_capacity(lp.le.len() + lp.eq.len());
        for (c, b) in &lp.le {
            if *b >= 0.0 {
                rows.push(Row { coeffs: c, rhs: *b, sign: 1.0, slack: Some(1.0), artificial: false });
            } else {
                rows.push(Row { coeffs: c, rhs: -*b, sign: -1.0, slack: Some(-1.0), artificial: true });
            }
        }
        for (c, b) in &lp.eq {
            let sign = if *b >= 0.0 { 1.0 } else { -1.0 };
            rows.push(Row { coeffs: c, rhs: b.abs(), sign, slack: None, artificial: true });
        }
        let n_slack = rows.iter().filter(|r| r.slack.is_some()).count();
        let n_art = rows.iter().filter(|r| r.artificial).count();
        let first_artificial = n + n_slack;
        let cols = first_artificial + n_art + 1;
        let m = rows.len();
        let mut data = vec![0.0; (m + 1) * cols];
        let mut basis = vec![0; m];
        let (mut s, mut a) = (n, first_artificial);
        for (i, r) in rows.iter().enumerate() {
            let line = &mut data[i * cols..(i + 1) * cols];
            for (dst, src) in line.iter_mut().zip(r.coeffs) {
                *dst = r.sign * src;
            }
            line[cols - 1] = r.rhs;
            if let Some(v) = r.slack {
                line[s] = v;
                if !r.artificial {
                    basis[i] = s;
                }
                s += 1;
            }
            if r.artificial {
                line[a] = 1.0;
                basis[i] = a;
                a += 1;
            }
        }
        Self {
            rows: m,
            cols,
            data,
            basis,
            n_struct: n,
            first_artificial,
            pivots: 0,
        }
    }

    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols - 1)
    }

    /// Loads `cost` (to be maximized) into the objective row as reduced costs
    /// `c_j - c_B B^-1 A_j`, stored negated so a negative entry can enter.
    fn load_objective(&mut self, cost: &[f64]) {
        let obj = self.rows * self.cols;
        for j in 0..self.cols {
            self.data[obj + j] = -cost.get(j).copied().unwrap_or(0.0);
        }
        for i in 0..self.rows {
            let cb = cost.get(self.basis[i]).copied().unwrap_or(0.0);
            if cb != 0.0 {
                for j in 0..self.cols {
                    self.data[obj + j] += cb * self.data[i * self.cols + j];
                }
            }
        }
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let cols = self.cols;
        let inv = 1.0 / self.at(pr, pc);
        for v in &mut self.data[pr * cols..(pr + 1) * cols] {
            *v *= inv;
        }
        let pivot_row: Vec<f64> = self.data[pr * cols..(pr + 1) * cols].to_vec();
        for i in 0..=self.rows {
            if i == pr {
                continue;
            }
            let f = self.data[i * cols + pc];
            if f != 0.0 {
                let line = &mut self.data[i * cols..(i + 1) * cols];
                for (v, p) in line.iter_mut().zip(&pivot_row) {
                    *v -= f * p;
                }
                line[pc] = 0.0;
            }
        }
        self.basis[pr] = pc;
        self.pivots += 1;
    }

    /// Primal simplex over columns `< allowed`. Enters the most negative
    /// reduced cost, switching to Bland's rule after a run of degenerate
    /// pivots and back once the objective moves again.
    fn optimize(&mut self, allowed: usize, limit: usize) -> Result<(), LpError> {
        const STALL: usize = 32;
        let obj = self.rows * self.cols;
        let mut degenerate = 0usize;
        loop {
            let bland = degenerate >= STALL;
            let entering = if bland {
                (0..allowed).find(|&j| self.data[obj + j] < -EPS)
            } else {
                (0..allowed)
                    .filter(|&j| self.data[obj + j] < -EPS)
                    .min_by(|&a, &b| self.data[obj + a].total_cmp(&self.data[obj + b]).then(a.cmp(&b)))
            };
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, pc);
                if a > EPS {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - EPS || (ratio <= br + EPS && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((pr, ratio)) = best else {
                return Err(LpError::Unbounded);
            };
            if self.pivots >= limit {
                return Err(LpError::PivotLimit(limit));
            }
            if ratio <= EPS {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(pr, pc);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution, LpError> {
        let limit = 50 * (self.rows + self.cols) + 1000;
        let n_art = self.cols - 1 - self.first_artificial;
        if n_art > 0 {
            let mut phase_one = vec![0.0; self.cols - 1];
            for c in &mut phase_one[self.first_artificial..] {
                *c = -1.0;
            }
            self.load_objective(&phase_one);
            self.optimize(self.cols - 1, limit)?;
            let residual: f64 = (0..self.rows)
                .filter(|&i| self.basis[i] >= self.first_artificial)
                .map(|i| self.rhs(i))
                .sum();
            let scale = 1.0 + (0..self.rows).map(|i| self.rhs(i).abs()).fold(0.0, f64::max);
            if residual > 1e-9 * scale {
                return Err(LpError::Infeasible(residual));
            }
            // Drive zero-level artificials out of the basis where possible.
            for i in 0..self.rows {
                if self.basis[i] >= self.first_artificial {
                    if let Some(pc) = (0..self.first_artificial).find(|&j| self.at(i, j).abs() > 1e-9) {
                        self.pivot(i, pc);
                    }
                }
            }
        }
        self.load_objective(&lp.objective);
        self.optimize(self.first_artificial, limit)?;
        let mut x = vec![0.0; self.n_struct];
        for i in 0..self.rows {
            if self.basis[i] < self.n_struct {
                x[self.basis[i]] = self.rhs(i).max(0.0);
            }
        }
        let objective = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution {
            x,
            objective,
            pivots: self.pivots,
        })
    }
}
