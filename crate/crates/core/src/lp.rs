//! Dense two-phase simplex for the small linear programs of the crate:
//! transportation problems, the dual problem over c-Lipschitz functions, and
//! the stationary-coupling problem.
//!
//! Pricing is Dantzig's rule; after a run of degenerate pivots it switches to
//! Bland's rule, which cannot cycle.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
struct Constraint {
    coeffs: Vec<(usize, f64)>,
    relation: Relation,
    rhs: f64,
}

/// `min/max objective·x` subject to linear constraints, with every variable
/// nonnegative unless marked free.
#[derive(Clone, Debug)]
pub struct LinearProgram {
    objective: Vec<f64>,
    free: Vec<bool>,
    constraints: Vec<Constraint>,
}

#[derive(Clone, Debug)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

const PIVOT_EPS: f64 = 1e-10;
const COST_EPS: f64 = 1e-11;
const FEASIBILITY_EPS: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

impl LinearProgram {
    pub fn new(num_vars: usize) -> Self {
        LinearProgram {
            objective: vec![0.0; num_vars],
            free: vec![false; num_vars],
            constraints: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn set_free(&mut self, var: usize) {
        self.free[var] = true;
    }

    /// Adds `Σ coeff·x[var] (relation) rhs`. Repeated variables are summed.
    pub fn add_constraint(&mut self, coeffs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        debug_assert!(coeffs.iter().all(|&(v, _)| v < self.num_vars()));
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn minimize(&self) -> Result<LpSolution> {
        self.solve(1.0)
    }

    pub fn maximize(&self) -> Result<LpSolution> {
        self.solve(-1.0)
    }

    fn solve(&self, sign: f64) -> Result<LpSolution> {
        let n = self.num_vars();
        // Column layout: structural (free ones split in two), then slack or
        // surplus, then artificial.
        let mut col_of = Vec::with_capacity(n);
        let mut structural = 0;
        for &is_free in &self.free {
            col_of.push(structural);
            structural += if is_free { 2 } else { 1 };
        }
        let m = self.constraints.len();
        let slack_count = self
            .constraints
            .iter()
            .filter(|c| c.relation != Relation::Eq)
            .count();
        let slack_base = structural;
        let art_base = slack_base + slack_count;
        let needs_artificial: Vec<bool> = self
            .constraints
            .iter()
            .map(|c| {
                let flipped = c.rhs < 0.0;
                let rel = flip(c.relation, flipped);
                rel != Relation::Le
            })
            .collect();
        let art_count = needs_artificial.iter().filter(|&&b| b).count();
        let width = art_base + art_count;

        let mut tab = Tableau::new(m, width);
        let mut slack = slack_base;
        let mut art = art_base;
        for (i, con) in self.constraints.iter().enumerate() {
            let flipped = con.rhs < 0.0;
            let s = if flipped { -1.0 } else { 1.0 };
            let row = tab.row_mut(i);
            for &(v, a) in &con.coeffs {
                row[col_of[v]] += s * a;
                if self.free[v] {
                    row[col_of[v] + 1] -= s * a;
                }
            }
            row[width] = s * con.rhs;
            match flip(con.relation, flipped) {
                Relation::Le => {
                    row[slack] = 1.0;
                    tab.basis[i] = slack;
                    slack += 1;
                }
                Relation::Ge => {
                    row[slack] = -1.0;
                    row[art] = 1.0;
                    tab.basis[i] = art;
                    slack += 1;
                    art += 1;
                }
                Relation::Eq => {
                    row[art] = 1.0;
                    tab.basis[i] = art;
                    art += 1;
                }
            }
        }

        // Phase 1: minimize the sum of artificials.
        if art_count > 0 {
            let mut cost = vec![0.0; width];
            cost[art_base..].fill(1.0);
            tab.set_objective(&cost);
            tab.run(width)?;
            let infeasibility = -tab.obj[width];
            let scale = 1.0
                + self
                    .constraints
                    .iter()
                    .map(|c| c.rhs.abs())
                    .fold(0.0, f64::max);
            if infeasibility > FEASIBILITY_EPS * scale {
                return Err(Error::Infeasible);
            }
            // Pivot remaining (zero-level) artificials out where possible;
            // rows that cannot be pivoted are redundant and stay inert.
            for i in 0..m {
                if tab.basis[i] >= art_base {
                    if let Some(j) = (0..art_base).find(|&j| tab.at(i, j).abs() > PIVOT_EPS) {
                        tab.pivot(i, j);
                    }
                }
            }
        }

        // Phase 2 on structural and slack columns only.
        let mut cost = vec![0.0; width];
        for (v, &coef) in self.objective.iter().enumerate() {
            cost[col_of[v]] = sign * coef;
            if self.free[v] {
                cost[col_of[v] + 1] = -sign * coef;
            }
        }
        tab.set_objective(&cost);
        tab.run(art_base)?;

        let mut values = vec![0.0; width];
        for (i, &b) in tab.basis.iter().enumerate() {
            values[b] = tab.at(i, width).max(0.0);
        }
        let x: Vec<f64> = (0..n)
            .map(|v| {
                let c = col_of[v];
                if self.free[v] {
                    values[c] - values[c + 1]
                } else {
                    values[c]
                }
            })
            .collect();
        let objective = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { x, objective })
    }
}

fn flip(rel: Relation, flipped: bool) -> Relation {
    match (rel, flipped) {
        (Relation::Le, true) => Relation::Ge,
        (Relation::Ge, true) => Relation::Le,
        (r, _) => r,
    }
}

struct Tableau {
    rows: usize,
    width: usize,
    /// Row-major, `width + 1` entries per row; the last is the right-hand side.
    data: Vec<f64>,
    /// Reduced costs, with minus the current objective value in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(rows: usize, width: usize) -> Self {
        Tableau {
            rows,
            width,
            data: vec![0.0; rows * (width + 1)],
            obj: vec![0.0; width + 1],
            basis: vec![usize::MAX; rows],
        }
    }

    fn stride(&self) -> usize {
        self.width + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.stride() + j]
    }

    fn row_mut(&mut self, i: usize) -> &mut [f64] {
        let s = self.stride();
        &mut self.data[i * s..(i + 1) * s]
    }

    fn set_objective(&mut self, cost: &[f64]) {
        self.obj[..self.width].copy_from_slice(cost);
        self.obj[self.width] = 0.0;
        let s = self.stride();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.data[i * s..(i + 1) * s];
                for (o, r) in self.obj.iter_mut().zip(row) {
                    *o -= cb * r;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let s = self.stride();
        let p = self.data[r * s + c];
        let pivot_row: Vec<f64> = self.data[r * s..(r + 1) * s]
            .iter()
            .map(|v| v / p)
            .collect();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.data[i * s + c];
            if f != 0.0 {
                let row = &mut self.data[i * s..(i + 1) * s];
                for (x, pr) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * pr;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (x, pr) in self.obj.iter_mut().zip(&pivot_row) {
                *x -= f * pr;
            }
            self.obj[c] = 0.0;
        }
        self.data[r * s..(r + 1) * s].copy_from_slice(&pivot_row);
        self.data[r * s + c] = 1.0;
        self.basis[r] = c;
    }

    /// Simplex iterations over entering columns `0..allowed`.
    fn run(&mut self, allowed: usize) -> Result<()> {
        let limit = 200 * (self.rows + self.width) + 1000;
        let mut degenerate_run = 0;
        for _ in 0..limit {
            let bland = degenerate_run >= DEGENERATE_RUN;
            let entering = if bland {
                (0..allowed).find(|&j| self.obj[j] < -COST_EPS)
            } else {
                let mut best = None;
                let mut best_val = -COST_EPS;
                for j in 0..allowed {
                    if self.obj[j] < best_val {
                        best_val = self.obj[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(c) = entering else {
                return Ok(());
            };
            let rhs = self.width;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.at(i, c);
                if a > PIVOT_EPS {
                    let ratio = self.at(i, rhs).max(0.0) / a;
                    let better = match leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < lr - 1e-14
                                || (ratio <= lr + 1e-14 && self.basis[i] < self.basis[li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, ratio)) = leave else {
                return Err(Error::Unbounded);
            };
            if ratio <= 1e-14 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
        }
        Err(Error::IterationLimit(limit))
    }
}
