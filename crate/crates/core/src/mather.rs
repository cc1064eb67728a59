//! Minimizing stationary couplings.
//!
//! Over couplings `η` with equal marginals, `min Σ A(x,y) η(x,y) = 0` for a
//! normalized kernel, and the minimizers are exactly the couplings carried
//! by `D = {A(x,y) + c(y,x) = 0}`.

use serde::{Deserialize, Serialize};

use crate::barrier::BarrierData;
use crate::error::{Error, Result};
use crate::lp::{LinearProgram, Relation};
use crate::matrix::{CostKernel, Matrix};
use crate::transport::{Coupling, Measure};
use crate::weakkam::{pair_from_lipschitz, Potential};

/// Probability on pairs whose two marginals coincide.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryCoupling {
    pub eta: Matrix,
    pub common_marginal: Measure,
}

impl StationaryCoupling {
    pub fn new(eta: Matrix, tol: f64) -> Result<Self> {
        eta.require_square()?;
        let coupling = Coupling::new(eta, tol)?;
        let residual = coupling.marginal0.sup_distance(&coupling.marginal1);
        if residual > tol {
            return Err(Error::MarginalMismatch { residual });
        }
        Ok(StationaryCoupling {
            eta: coupling.eta,
            common_marginal: coupling.marginal0,
        })
    }

    pub fn size(&self) -> usize {
        self.eta.size()
    }

    /// `Σ A(x, y) η(x, y)`.
    pub fn action(&self, a: &Matrix) -> f64 {
        self.eta
            .as_slice()
            .iter()
            .zip(a.as_slice())
            .map(|(m, c)| m * c)
            .sum()
    }

    pub fn support(&self, threshold: f64) -> Vec<(usize, usize)> {
        let n = self.size();
        let mut out = Vec::new();
        for x in 0..n {
            for y in 0..n {
                if self.eta[(x, y)] > threshold {
                    out.push((x, y));
                }
            }
        }
        out
    }

    /// Convex combination `Σ w_i η_i`; weights must sum to one.
    pub fn mixture(parts: &[(f64, &StationaryCoupling)], tol: f64) -> Result<Self> {
        let Some((_, first)) = parts.first() else {
            return Err(Error::InvalidMeasure("empty mixture".into()));
        };
        let n = first.size();
        let mut eta = Matrix::filled(n, n, 0.0);
        for (w, part) in parts {
            if part.size() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: part.size(),
                });
            }
            for x in 0..n {
                for y in 0..n {
                    eta[(x, y)] += w * part.eta[(x, y)];
                }
            }
        }
        StationaryCoupling::new(eta, tol)
    }
}

/// `min Σ A·η` over stationary couplings, without any normalization
/// requirement. On an arbitrary kernel the value is the critical value.
pub fn solve_stationary(a: &Matrix) -> Result<(StationaryCoupling, f64)> {
    a.require_square()?;
    let n = a.size();
    let mut lp = LinearProgram::new(n * n);
    let var = |x: usize, y: usize| x * n + y;
    for x in 0..n {
        for y in 0..n {
            lp.set_objective(var(x, y), a[(x, y)]);
        }
    }
    // Row sum minus column sum vanishes at every point; one of these is
    // implied by the others and the solver tolerates the redundancy.
    for z in 0..n {
        let mut coeffs = Vec::with_capacity(2 * n);
        for y in 0..n {
            if y != z {
                coeffs.push((var(z, y), 1.0));
                coeffs.push((var(y, z), -1.0));
            }
        }
        lp.add_constraint(coeffs, Relation::Eq, 0.0);
    }
    lp.add_constraint((0..n * n).map(|v| (v, 1.0)).collect(), Relation::Eq, 1.0);
    let sol = lp.minimize()?;
    let eta = Matrix::new(n, n, sol.x)?;
    let coupling = StationaryCoupling::new(eta, 1e-9)?;
    let value = coupling.action(a);
    Ok((coupling, value))
}

/// A minimizing stationary coupling of a normalized kernel and its value,
/// which must vanish within `tol_dual`.
pub fn solve_mather(a_norm: &CostKernel, tol_dual: f64) -> Result<(StationaryCoupling, f64)> {
    let (coupling, value) = solve_stationary(a_norm.matrix())?;
    if value.abs() > tol_dual {
        return Err(Error::NonzeroMatherValue { value });
    }
    Ok((coupling, value))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MinimizerReport {
    /// `Σ A·η`.
    pub action: f64,
    /// `-Σ c(y, x) η(x, y)`; equals `action` when `η` is carried by `D`.
    pub barrier_action: f64,
    /// Mass on pairs outside `D`.
    pub off_d_mass: f64,
    /// `max |A(x,y) + c(y,x)|` over pairs carrying mass.
    pub max_identity_slack: f64,
    pub is_minimizing: bool,
    pub supported_on_d: bool,
    /// Both implications "minimizing ⇒ on D" and "on D ⇒ minimizing" hold.
    pub pass: bool,
}

/// Two-way check of the characterization of minimizers by their support.
pub fn verify_minimizer_characterization(
    a_norm: &CostKernel,
    bd: &BarrierData,
    eta: &StationaryCoupling,
) -> MinimizerReport {
    let tol = &bd.tol;
    let a = a_norm.matrix();
    let action = eta.action(a);
    let mut barrier_action = 0.0;
    let mut off_d_mass = 0.0;
    let mut max_identity_slack: f64 = 0.0;
    for (x, y) in eta.support(tol.mass) {
        let m = eta.eta[(x, y)];
        barrier_action -= bd.c[(y, x)] * m;
        max_identity_slack = max_identity_slack.max((a[(x, y)] + bd.c[(y, x)]).abs());
        if !bd.in_d(x, y) {
            off_d_mass += m;
        }
    }
    let is_minimizing = action <= tol.dual;
    let supported_on_d = off_d_mass == 0.0;
    let forward = !is_minimizing || (supported_on_d && max_identity_slack <= tol.aubry);
    let backward = !supported_on_d || is_minimizing;
    MinimizerReport {
        action,
        barrier_action,
        off_d_mass,
        max_identity_slack,
        is_minimizing,
        supported_on_d,
        pass: forward && backward,
    }
}

/// Uniform measure on the closed walk `cycle[0] → cycle[1] → … → cycle[0]`.
pub fn cycle_coupling(n: usize, cycle: &[usize]) -> Result<StationaryCoupling> {
    if cycle.is_empty() {
        return Err(Error::InvalidCycle("empty cycle".into()));
    }
    if let Some(&x) = cycle.iter().find(|&&x| x >= n) {
        return Err(Error::InvalidCycle(format!("point {x} out of range")));
    }
    let w = 1.0 / cycle.len() as f64;
    let mut eta = Matrix::filled(n, n, 0.0);
    for i in 0..cycle.len() {
        eta[(cycle[i], cycle[(i + 1) % cycle.len()])] += w;
    }
    StationaryCoupling::new(eta, 1e-9)
}

/// A-Lipschitz test functions used to approximate the pairs tight for every
/// A-Lipschitz function: all barrier rows `c(z, ·)` and both halves of the
/// pairs generated by the Aubry-indicator-like seeds `φ = c(b, ·)|𝒜`.
pub fn generating_family(bd: &BarrierData) -> Vec<Potential> {
    let mut family: Vec<Potential> = (0..bd.size())
        .map(|z| Potential::new(bd.c_row(z)).expect("finite barrier"))
        .collect();
    for &b in &bd.aubry {
        let seed: Vec<f64> = bd.aubry.iter().map(|&a| bd.c[(b, a)]).collect();
        if let Ok(pair) = pair_from_lipschitz(bd, &seed) {
            family.push(pair.phi0);
            family.push(pair.phi1);
        }
    }
    family
}

/// Pairs `(x, y)` with `φ(y) - φ(x) = A(x, y)` for every function of the
/// family, within `bd.tol.aubry`.
pub fn d1_candidates(
    a_norm: &CostKernel,
    bd: &BarrierData,
    family: &[Potential],
) -> Vec<(usize, usize)> {
    let n = a_norm.size();
    let mut out = Vec::new();
    for x in 0..n {
        for y in 0..n {
            let tight = family
                .iter()
                .all(|phi| (phi[y] - phi[x] - a_norm.cost(x, y)).abs() <= bd.tol.aubry);
            if tight {
                out.push((x, y));
            }
        }
    }
    out
}

/// Keeps the edges that extend to bi-infinite chains inside `edges`.
///
/// Iterates `X = π0(E) ∩ π1(E)`, `E ← E ∩ (X × X)` to a fixpoint. The result
/// is sorted.
pub fn d_infinity_filter(bd: &BarrierData, edges: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let n = bd.size();
    let mut current: Vec<(usize, usize)> = edges.to_vec();
    current.sort_unstable();
    current.dedup();
    loop {
        let mut has_out = vec![false; n];
        let mut has_in = vec![false; n];
        for &(x, y) in &current {
            has_out[x] = true;
            has_in[y] = true;
        }
        let alive: Vec<bool> = (0..n).map(|z| has_out[z] && has_in[z]).collect();
        let before = current.len();
        current.retain(|&(x, y)| alive[x] && alive[y]);
        if current.len() == before {
            return current;
        }
    }
}
