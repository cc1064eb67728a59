//! Monge–Kantorovich transport for the barrier cost.
//!
//! The primal problem is a transportation LP. The dual is solved over
//! c-Lipschitz functions on the Aubry set, which parameterize all admissible
//! pairs, so the two optimal values come out of unrelated programs and their
//! agreement is a real check.

use serde::{Deserialize, Serialize};

use crate::barrier::BarrierData;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::matrix::Matrix;
use crate::weakkam::{completion, pair_from_lipschitz, KamPair, Potential};

/// Probability vector over a point set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measure(Vec<f64>);

impl Measure {
    /// Validates nonnegativity and unit mass within `tol`; entries in
    /// `[-tol, 0)` are clamped to zero.
    pub fn new(weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidMeasure("no points".into()));
        }
        let mut weights = weights;
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() || *w < -tol {
                return Err(Error::InvalidMeasure(format!("weight {i} is {w}")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::InvalidMeasure(format!("total mass is {total}")));
        }
        Ok(Measure(weights))
    }

    pub fn dirac(n: usize, x: usize) -> Self {
        let mut w = vec![0.0; n];
        w[x] = 1.0;
        Measure(w)
    }

    pub fn uniform(n: usize) -> Self {
        Measure(vec![1.0 / n as f64; n])
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices carrying more than `threshold` mass.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        (0..self.0.len())
            .filter(|&i| self.0[i] > threshold)
            .collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.0.iter().zip(f).map(|(w, v)| w * v).sum()
    }

    pub fn sup_distance(&self, other: &Measure) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Transport plan between two measures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub eta: Matrix,
    pub marginal0: Measure,
    pub marginal1: Measure,
}

impl Coupling {
    /// Builds a coupling from its mass matrix, computing both marginals.
    pub fn new(eta: Matrix, tol: f64) -> Result<Self> {
        if let Some(k) = eta.as_slice().iter().position(|&v| v < -tol) {
            return Err(Error::InvalidMeasure(format!(
                "negative mass at ({}, {})",
                k / eta.cols(),
                k % eta.cols()
            )));
        }
        let row_sums: Vec<f64> = (0..eta.rows()).map(|i| eta.row(i).iter().sum()).collect();
        let col_sums: Vec<f64> = (0..eta.cols())
            .map(|j| (0..eta.rows()).map(|i| eta[(i, j)]).sum())
            .collect();
        Ok(Coupling {
            marginal0: Measure::new(row_sums, tol)?,
            marginal1: Measure::new(col_sums, tol)?,
            eta,
        })
    }

    pub fn cost(&self, cost: &Matrix) -> f64 {
        self.eta
            .as_slice()
            .iter()
            .zip(cost.as_slice())
            .map(|(m, c)| m * c)
            .sum()
    }

    /// Entries with mass above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.eta.rows() {
            for j in 0..self.eta.cols() {
                if self.eta[(i, j)] > threshold {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

/// Optimal coupling and value of `min Σ cost·η` over plans from `mu0` to
/// `mu1`. `cost` may be rectangular.
pub fn solve_primal(
    cost: &Matrix,
    mu0: &Measure,
    mu1: &Measure,
    tol: f64,
) -> Result<(Coupling, f64)> {
    if mu0.len() != cost.rows() {
        return Err(Error::DimensionMismatch {
            expected: cost.rows(),
            found: mu0.len(),
        });
    }
    if mu1.len() != cost.cols() {
        return Err(Error::DimensionMismatch {
            expected: cost.cols(),
            found: mu1.len(),
        });
    }
    let src = mu0.support(0.0);
    let dst = mu1.support(0.0);
    let mut lp = LinearProgram::new(src.len() * dst.len());
    let var = |i: usize, j: usize| i * dst.len() + j;
    for (i, &x) in src.iter().enumerate() {
        for (j, &y) in dst.iter().enumerate() {
            lp.set_objective(var(i, j), cost[(x, y)]);
        }
    }
    for (i, &x) in src.iter().enumerate() {
        let coeffs = (0..dst.len()).map(|j| (var(i, j), 1.0)).collect();
        lp.add_constraint(coeffs, Relation::Eq, mu0.weights()[x]);
    }
    for (j, &y) in dst.iter().enumerate() {
        let coeffs = (0..src.len()).map(|i| (var(i, j), 1.0)).collect();
        lp.add_constraint(coeffs, Relation::Eq, mu1.weights()[y]);
    }
    let sol = lp.minimize()?;
    let mut eta = Matrix::filled(cost.rows(), cost.cols(), 0.0);
    for (i, &x) in src.iter().enumerate() {
        for (j, &y) in dst.iter().enumerate() {
            eta[(x, y)] = sol.x[var(i, j)];
        }
    }
    let coupling = Coupling::new(eta, tol.max(1e-9))?;
    let value = coupling.cost(cost);
    Ok((coupling, value))
}

/// `∫φ1 dμ1 - ∫φ0 dμ0`.
pub fn pair_objective(pair: &KamPair, mu0: &Measure, mu1: &Measure) -> f64 {
    mu1.integrate(pair.phi1.values()) - mu0.integrate(pair.phi0.values())
}

/// Optimal admissible pair for the dual problem, and the dual value.
///
/// Solves for `φ` on the Aubry set with auxiliary variables `u1 ≤ φ(a) +
/// c(a, ·)` on the support of `mu1` and `u0 ≥ φ(a) - c(·, a)` on the support
/// of `mu0`; the pair is then rebuilt from `φ`.
pub fn dual_value(bd: &BarrierData, mu0: &Measure, mu1: &Measure) -> Result<(KamPair, f64)> {
    let n = bd.size();
    for mu in [mu0, mu1] {
        if mu.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: mu.len(),
            });
        }
    }
    let aubry = &bd.aubry;
    let s1 = mu1.support(0.0);
    let s0 = mu0.support(0.0);
    // φ(aubry[0]) is pinned to 0: the problem is invariant under shifts.
    let k = aubry.len();
    let phi_var = |i: usize| if i == 0 { None } else { Some(i - 1) };
    let u1_base = k - 1;
    let u0_base = u1_base + s1.len();
    let mut lp = LinearProgram::new(u0_base + s0.len());
    for v in 0..lp.num_vars() {
        lp.set_free(v);
    }
    let terms = |pairs: &[(Option<usize>, f64)]| -> Vec<(usize, f64)> {
        pairs
            .iter()
            .filter_map(|&(v, a)| v.map(|v| (v, a)))
            .collect()
    };
    for i in 0..k {
        for j in 0..k {
            if i != j {
                let coeffs = terms(&[(phi_var(j), 1.0), (phi_var(i), -1.0)]);
                lp.add_constraint(coeffs, Relation::Le, bd.c[(aubry[i], aubry[j])]);
            }
        }
    }
    for (t, &y) in s1.iter().enumerate() {
        lp.set_objective(u1_base + t, mu1.weights()[y]);
        for (i, &a) in aubry.iter().enumerate() {
            let coeffs = terms(&[(Some(u1_base + t), 1.0), (phi_var(i), -1.0)]);
            lp.add_constraint(coeffs, Relation::Le, bd.c[(a, y)]);
        }
    }
    for (t, &x) in s0.iter().enumerate() {
        lp.set_objective(u0_base + t, -mu0.weights()[x]);
        for (i, &a) in aubry.iter().enumerate() {
            let coeffs = terms(&[(phi_var(i), 1.0), (Some(u0_base + t), -1.0)]);
            lp.add_constraint(coeffs, Relation::Le, bd.c[(x, a)]);
        }
    }
    let sol = lp.maximize()?;
    let phi: Vec<f64> = (0..k)
        .map(|i| phi_var(i).map_or(0.0, |v| sol.x[v]))
        .collect();
    let pair = pair_from_lipschitz(bd, &phi)?;
    let value = pair_objective(&pair, mu0, mu1);
    Ok((pair, value))
}

/// Kantorovich–Rubinstein form of the dual for a cost with zero diagonal
/// and the triangle inequality: `max ∫φ d(μ1 - μ0)` over c-Lipschitz `φ`.
pub fn kantorovich_rubinstein_value(
    cost: &Matrix,
    mu0: &Measure,
    mu1: &Measure,
) -> Result<(Potential, f64)> {
    cost.require_square()?;
    let n = cost.size();
    let mut lp = LinearProgram::new(n);
    for x in 0..n {
        lp.set_free(x);
        lp.set_objective(x, mu1.weights()[x] - mu0.weights()[x]);
    }
    lp.add_constraint(vec![(0, 1.0)], Relation::Eq, 0.0);
    for x in 0..n {
        for y in 0..n {
            if x != y {
                lp.add_constraint(vec![(y, 1.0), (x, -1.0)], Relation::Le, cost[(x, y)]);
            }
        }
    }
    let sol = lp.maximize()?;
    let value = mu1.integrate(&sol.x) - mu0.integrate(&sol.x);
    Ok((Potential::new(sol.x)?, value))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DualityReport {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
    pub pass: bool,
}

pub fn check_duality(primal_value: f64, dual_value: f64, tol: f64) -> DualityReport {
    let gap = (primal_value - dual_value).abs();
    DualityReport {
        primal: primal_value,
        dual: dual_value,
        gap,
        pass: gap <= tol,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupportReport {
    /// `max |φ1(y) - φ0(x) - c(x,y)|` over the support of the coupling.
    pub max_violation: f64,
    pub worst: Option<(usize, usize)>,
    pub support_size: usize,
    pub pass: bool,
}

/// Whether the coupling is carried by `{φ1(y) - φ0(x) = c(x, y)}`.
pub fn check_support(coupling: &Coupling, pair: &KamPair, bd: &BarrierData) -> SupportReport {
    let support = coupling.support(bd.tol.mass);
    let mut max_violation = 0.0;
    let mut worst = None;
    for &(x, y) in &support {
        let v = (pair.phi1[y] - pair.phi0[x] - bd.c[(x, y)]).abs();
        if v > max_violation {
            max_violation = v;
            worst = Some((x, y));
        }
    }
    SupportReport {
        max_violation,
        worst,
        support_size: support.len(),
        pass: max_violation <= bd.tol.num,
    }
}

/// The admissible pair realizing `c(x, y) = max φ1(y) - φ0(x)`: `φ1 = c(x, ·)`
/// and its completion. Returns the pair and `φ1(y) - φ0(x)`.
pub fn var_char_pair(bd: &BarrierData, x: usize, y: usize) -> Result<(KamPair, f64)> {
    let n = bd.size();
    for p in [x, y] {
        if p >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p,
            });
        }
    }
    let phi1 = Potential::new(bd.c_row(x))?;
    let phi0 = completion(bd, &phi1);
    let value = phi1[y] - phi0[x];
    Ok((KamPair { phi0, phi1 }, value))
}

/// A target measure for which `pair` is optimal from `mu0`: each atom `x`
/// is sent to the lowest-index `y` with `φ1(y) = φ0(x) + c(x, y)`. Returns
/// the target and the induced deterministic plan.
pub fn converse_measure(
    bd: &BarrierData,
    pair: &KamPair,
    mu0: &Measure,
) -> Result<(Measure, Coupling)> {
    let n = bd.size();
    if mu0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: mu0.len(),
        });
    }
    let mut eta = Matrix::filled(n, n, 0.0);
    for x in mu0.support(bd.tol.mass) {
        let mut best_gap = f64::INFINITY;
        let mut chosen = None;
        for y in 0..n {
            let gap = (pair.phi1[y] - pair.phi0[x] - bd.c[(x, y)]).abs();
            if gap <= bd.tol.num && chosen.is_none() {
                chosen = Some(y);
            }
            best_gap = best_gap.min(gap);
        }
        let y = chosen.ok_or(Error::NoSelection { x, gap: best_gap })?;
        eta[(x, y)] += mu0.weights()[x];
    }
    let coupling = Coupling::new(eta, bd.tol.num.max(1e-9))?;
    Ok((coupling.marginal1.clone(), coupling))
}

/// Optimal transport split through an intermediate measure on the Aubry set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Factorization {
    /// Intermediate measure, supported on the Aubry set.
    pub mu: Measure,
    /// `C(μ0, μ1)`.
    pub direct: f64,
    /// `C(μ0, μ)`.
    pub first_leg: f64,
    /// `C(μ, μ1)`.
    pub second_leg: f64,
    pub gap: f64,
    /// Plan `μ0 → μ` obtained by routing.
    pub eta0: Coupling,
    /// Plan `μ → μ1` obtained by routing.
    pub eta1: Coupling,
    pub pass: bool,
}

/// Routes every edge `(x, y)` of an optimal plan through the lowest-index
/// `a ∈ 𝒜` with `c(x, y) = c(x, a) + c(a, y)` and checks
/// `C(μ0, μ1) = C(μ0, μ) + C(μ, μ1)` for the resulting measure `μ`.
pub fn factor_through_aubry(
    bd: &BarrierData,
    mu0: &Measure,
    mu1: &Measure,
) -> Result<Factorization> {
    let n = bd.size();
    let tol = &bd.tol;
    let (plan, direct) = solve_primal(&bd.c, mu0, mu1, tol.num)?;
    let mut eta0 = Matrix::filled(n, n, 0.0);
    let mut eta1 = Matrix::filled(n, n, 0.0);
    for (x, y) in plan.support(0.0) {
        let mass = plan.eta[(x, y)];
        let best = bd
            .aubry
            .iter()
            .map(|&a| bd.c[(x, a)] + bd.c[(a, y)])
            .fold(f64::INFINITY, f64::min);
        let a = bd
            .aubry
            .iter()
            .copied()
            .find(|&a| bd.c[(x, a)] + bd.c[(a, y)] <= best + tol.num)
            .expect("nonempty Aubry set");
        eta0[(x, a)] += mass;
        eta1[(a, y)] += mass;
    }
    let eta0 = Coupling::new(eta0, tol.num.max(1e-9))?;
    let eta1 = Coupling::new(eta1, tol.num.max(1e-9))?;
    let mu = eta0.marginal1.clone();
    let (_, first_leg) = solve_primal(&bd.c, mu0, &mu, tol.num)?;
    let (_, second_leg) = solve_primal(&bd.c, &mu, mu1, tol.num)?;
    let gap = (direct - first_leg - second_leg).abs();
    Ok(Factorization {
        mu,
        direct,
        first_leg,
        second_leg,
        gap,
        pass: gap <= tol.dual,
        eta0,
        eta1,
    })
}

/// Composes `η0: μ0 → μ` and `η1: μ → μ1` into a plan `μ0 → μ1` by
/// conditioning on the intermediate point.
pub fn glue_couplings(
    eta0: &Coupling,
    eta1: &Coupling,
    tol: f64,
    mass_tol: f64,
) -> Result<Coupling> {
    let mid0 = &eta0.marginal1;
    let mid1 = &eta1.marginal0;
    if mid0.len() != mid1.len() {
        return Err(Error::DimensionMismatch {
            expected: mid0.len(),
            found: mid1.len(),
        });
    }
    let residual = mid0.sup_distance(mid1);
    if residual > tol {
        return Err(Error::MarginalMismatch { residual });
    }
    let (rows, cols) = (eta0.eta.rows(), eta1.eta.cols());
    let mut eta = Matrix::filled(rows, cols, 0.0);
    for z in 0..mid0.len() {
        let mz = mid0.weights()[z];
        if mz <= mass_tol {
            continue;
        }
        for x in 0..rows {
            let a = eta0.eta[(x, z)];
            if a == 0.0 {
                continue;
            }
            for y in 0..cols {
                eta[(x, y)] += a * eta1.eta[(z, y)] / mz;
            }
        }
    }
    Coupling::new(eta, tol.max(1e-9))
}
