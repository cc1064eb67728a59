//! Peierls barrier, Aubry set and the set `D`.
//!
//! On a finite space the barrier `c = liminf A^{⊗n}` has a closed form. Long
//! chains of zero total cost must linger on a zero-mean cycle, so
//!
//! ```text
//! c(x, y) = min_{a : W(a,a) = 0} W(x, a) + W(a, y)
//! ```
//!
//! where `W` is the shortest walk closure. The windowed minimum of the
//! tropical powers ([`peierls_barrier_oracle`]) computes the same matrix
//! directly from the definition and serves as an independent check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CostKernel, Matrix};
use crate::minplus::{
    min_mean_cycle, normalize, shortest_walk_closure, tropical_power, tropical_product,
};
use crate::tolerance::Tolerances;

/// Everything derived from a normalized kernel that downstream modules need.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BarrierData {
    /// Critical value of the kernel before normalization.
    pub l: f64,
    /// Peierls barrier `c(x, y)`.
    pub c: Matrix,
    /// Shortest walk closure of the normalized kernel.
    pub walk: Matrix,
    /// Aubry set, sorted.
    pub aubry: Vec<usize>,
    /// Pairs with `A(x, y) + c(y, x) = 0`, sorted.
    pub d_edges: Vec<(usize, usize)>,
    /// Bound on `max A^{⊗n} - min A^{⊗n}` over all `n`.
    pub oscillation: f64,
    pub tol: Tolerances,
}

impl BarrierData {
    pub fn size(&self) -> usize {
        self.c.size()
    }

    pub fn is_aubry(&self, x: usize) -> bool {
        self.aubry.binary_search(&x).is_ok()
    }

    pub fn in_d(&self, x: usize, y: usize) -> bool {
        self.d_edges.binary_search(&(x, y)).is_ok()
    }

    /// Row `c(z, ·)`.
    pub fn c_row(&self, z: usize) -> Vec<f64> {
        self.c.row(z).to_vec()
    }
}

/// Normalizes `kernel` and computes its barrier data. The returned kernel is
/// the normalized one; `BarrierData::l` holds the critical value removed.
pub fn analyze(kernel: &CostKernel, tol: &Tolerances) -> Result<(CostKernel, BarrierData)> {
    let (normalized, l) = normalize(kernel)?;
    let mut bd = peierls_barrier(&normalized, tol)?;
    bd.l = l;
    Ok((normalized, bd))
}

/// Barrier data of a normalized kernel.
///
/// Fails with [`Error::NotNormalized`] if the minimum cycle mean is off zero
/// by more than `tol.num`, and with [`Error::EmptyAubrySet`] if no diagonal
/// entry of the walk closure passes the `tol.aubry` threshold.
pub fn peierls_barrier(a_norm: &CostKernel, tol: &Tolerances) -> Result<BarrierData> {
    let a = a_norm.matrix();
    let mean = min_mean_cycle(a)?;
    if mean.abs() > tol.num {
        return Err(Error::NotNormalized { mean });
    }
    let n = a.size();
    let walk = shortest_walk_closure(a, tol.num)?;
    let aubry: Vec<usize> = (0..n)
        .filter(|&x| walk[(x, x)].abs() <= tol.aubry)
        .collect();
    if aubry.is_empty() {
        let min_diagonal = (0..n)
            .map(|x| walk[(x, x)].abs())
            .fold(f64::INFINITY, f64::min);
        return Err(Error::EmptyAubrySet { min_diagonal });
    }

    let c = Matrix::from_fn(n, n, |x, y| {
        aubry
            .iter()
            .map(|&z| walk[(x, z)] + walk[(z, y)])
            .fold(f64::INFINITY, f64::min)
    });

    let mut d_edges = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if (a[(x, y)] + c[(y, x)]).abs() <= tol.aubry {
                d_edges.push((x, y));
            }
        }
    }

    Ok(BarrierData {
        l: mean,
        c,
        walk,
        aubry,
        d_edges,
        oscillation: oscillation_bound(a),
        tol: *tol,
    })
}

/// Constant `C` with `max A^{⊗n} - min A^{⊗n} ≤ C` for every `n`, valid for
/// a normalized kernel: `(max A - min A) · |points|`.
///
/// A chain of `n` steps splits into a simple path of at most `|points| - 1`
/// steps and cycles of nonnegative mean, which bounds it below by
/// `(|points| - 1) min A`. Entering a zero-mean cycle at a well chosen vertex
/// keeps any partial lap nonpositive, which bounds it above by `2 max A`.
pub fn oscillation_bound(a_norm: &Matrix) -> f64 {
    (a_norm.max_entry() - a_norm.min_entry()) * a_norm.size() as f64
}

/// Result of the windowed-liminf oracle.
#[derive(Clone, Debug)]
pub struct OracleBarrier {
    /// Entrywise minimum of `A^{⊗m}` over `m ∈ [n_min, n_max]`.
    pub c: Matrix,
    /// Largest change when the window is doubled to `[2 n_min, 2 n_max]`.
    pub window_change: f64,
    pub stabilized: bool,
}

/// `c` straight from its definition: the minimum of the tropical powers over
/// a late window. Doubles the window once to detect non-stabilization; a
/// large change is reported, not raised.
pub fn peierls_barrier_oracle(
    a_norm: &CostKernel,
    n_min: usize,
    n_max: usize,
    tol: f64,
) -> Result<OracleBarrier> {
    let a = a_norm.matrix();
    let n_min = n_min.max(1);
    let n_max = n_max.max(n_min);
    let mut power = tropical_power(a, n_min)?;
    let mut window = power.clone();
    let mut doubled: Option<Matrix> = None;
    for m in n_min + 1..=2 * n_max {
        power = tropical_product(a, &power)?;
        if m <= n_max {
            window.min_assign(&power);
        }
        if m >= 2 * n_min {
            match doubled.as_mut() {
                Some(d) => d.min_assign(&power),
                None => doubled = Some(power.clone()),
            }
        }
    }
    let doubled = doubled.unwrap_or_else(|| window.clone());
    let window_change = window.max_abs_diff(&doubled);
    Ok(OracleBarrier {
        c: window,
        window_change,
        stabilized: window_change <= tol,
    })
}

/// Runs the oracle on windows `[m, 2m]` for `m = start, 2·start, ...` until
/// two consecutive windows agree within `tol` or `m` exceeds `limit`.
pub fn peierls_barrier_oracle_auto(
    a_norm: &CostKernel,
    start: usize,
    limit: usize,
    tol: f64,
) -> Result<OracleBarrier> {
    let mut m = start.max(1);
    loop {
        let out = peierls_barrier_oracle(a_norm, m, 2 * m, tol)?;
        if out.stabilized || 2 * m > limit {
            return Ok(out);
        }
        m *= 2;
    }
}

/// Residuals of the cost axioms.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AxiomReport {
    /// `max c(x,z) - c(x,y) - c(y,z)` over all triples, clipped at 0.
    pub triangle_violation: f64,
    pub worst_triple: Option<(usize, usize, usize)>,
    /// `max |c(x,y) - min_{a ∈ 𝒜} c(x,a) + c(a,y)|`.
    pub factorization_violation: f64,
    pub worst_pair: Option<(usize, usize)>,
    pub aubry_nonempty: bool,
    pub pass: bool,
}

/// Checks the triangle inequality and the factorization through the Aubry
/// set.
pub fn check_cost_axioms(bd: &BarrierData) -> AxiomReport {
    let c = &bd.c;
    let n = c.size();
    let mut triangle_violation = 0.0;
    let mut worst_triple = None;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let v = c[(x, z)] - c[(x, y)] - c[(y, z)];
                if v > triangle_violation {
                    triangle_violation = v;
                    worst_triple = Some((x, y, z));
                }
            }
        }
    }
    let mut factorization_violation = 0.0;
    let mut worst_pair = None;
    for x in 0..n {
        for y in 0..n {
            let through = bd
                .aubry
                .iter()
                .map(|&a| c[(x, a)] + c[(a, y)])
                .fold(f64::INFINITY, f64::min);
            let v = (c[(x, y)] - through).abs();
            if v > factorization_violation {
                factorization_violation = v;
                worst_pair = Some((x, y));
            }
        }
    }
    let aubry_nonempty = !bd.aubry.is_empty();
    AxiomReport {
        triangle_violation,
        worst_triple,
        factorization_violation,
        worst_pair,
        aubry_nonempty,
        pass: aubry_nonempty
            && triangle_violation <= bd.tol.num
            && factorization_violation <= bd.tol.num,
    }
}

/// Largest `|c(a,a)|` over the Aubry set: the zero-diagonal axiom on the
/// restriction of `c` to `𝒜 × 𝒜` (the triangle inequality is inherited).
pub fn aubry_diagonal_residual(bd: &BarrierData) -> f64 {
    bd.aubry
        .iter()
        .map(|&a| bd.c[(a, a)].abs())
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropdecReport {
    pub n: usize,
    /// `max |min_z c(x,z) + A_n(z,y) - c(x,y)|`.
    pub right_residual: f64,
    /// `max |min_z A_n(x,z) + c(z,y) - c(x,y)|`.
    pub left_residual: f64,
    pub pass: bool,
}

/// Verifies `c ⊗ A_n = c = A_n ⊗ c`.
pub fn check_propdec(a_norm: &CostKernel, bd: &BarrierData, n: usize) -> Result<PropdecReport> {
    let a_n = tropical_power(a_norm.matrix(), n)?;
    let right_residual = tropical_product(&bd.c, &a_n)?.max_abs_diff(&bd.c);
    let left_residual = tropical_product(&a_n, &bd.c)?.max_abs_diff(&bd.c);
    Ok(PropdecReport {
        n,
        right_residual,
        left_residual,
        pass: right_residual <= bd.tol.num && left_residual <= bd.tol.num,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g3() -> CostKernel {
        CostKernel::from_rows(&[
            vec![0.0, 1.0, 4.0],
            vec![2.0, 1.0, 3.0],
            vec![1.0, 2.0, 2.0],
        ])
        .unwrap()
    }

    fn metric3() -> CostKernel {
        CostKernel::from_rows(&[
            vec![0.0, 1.0, 2.0],
            vec![1.0, 0.0, 1.0],
            vec![2.0, 1.0, 0.0],
        ])
        .unwrap()
    }

    #[test]
    fn g3_barrier() {
        let bd = peierls_barrier(&g3(), &Tolerances::default()).unwrap();
        assert_eq!(
            bd.c.to_rows(),
            vec![
                vec![0.0, 1.0, 4.0],
                vec![2.0, 3.0, 6.0],
                vec![1.0, 2.0, 5.0]
            ]
        );
        assert_eq!(bd.aubry, vec![0]);
        assert_eq!(bd.d_edges, vec![(0, 0)]);
    }

    #[test]
    fn metric_barrier_is_the_metric() {
        let k = metric3();
        let bd = peierls_barrier(&k, &Tolerances::default()).unwrap();
        assert_eq!(&bd.c, k.matrix());
        assert_eq!(bd.aubry, vec![0, 1, 2]);
        assert_eq!(bd.d_edges, vec![(0, 0), (1, 1), (2, 2)]);
    }

    #[test]
    fn single_point() {
        let k = CostKernel::from_rows(&[vec![0.0]]).unwrap();
        let bd = peierls_barrier(&k, &Tolerances::default()).unwrap();
        assert_eq!(bd.c.to_rows(), vec![vec![0.0]]);
        assert_eq!(bd.aubry, vec![0]);
        assert_eq!(bd.d_edges, vec![(0, 0)]);
    }

    #[test]
    fn unnormalized_input_is_rejected() {
        let k = CostKernel::from_rows(&[vec![5.0]]).unwrap();
        assert!(matches!(
            peierls_barrier(&k, &Tolerances::default()),
            Err(Error::NotNormalized { .. })
        ));
        let (_, bd) = analyze(&k, &Tolerances::default()).unwrap();
        assert_eq!(bd.l, 5.0);
    }

    #[test]
    fn oracle_on_small_cases() {
        let out = peierls_barrier_oracle(&g3(), 8, 16, 1e-9).unwrap();
        assert!(out.stabilized);
        assert_eq!(
            out.c.to_rows(),
            vec![
                vec![0.0, 1.0, 4.0],
                vec![2.0, 3.0, 6.0],
                vec![1.0, 2.0, 5.0]
            ]
        );
        let m = metric3();
        assert_eq!(
            &peierls_barrier_oracle(&m, 3, 6, 1e-9).unwrap().c,
            m.matrix()
        );
        let z = CostKernel::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(
            peierls_barrier_oracle(&z, 1, 2, 1e-9).unwrap().c.to_rows(),
            vec![vec![0.0]]
        );
    }

    #[test]
    fn oracle_flags_early_window() {
        // A(1,1) = 1 is still the window minimum at n = 1, but c(1,1) = 3.
        let out = peierls_barrier_oracle(&g3(), 1, 2, 1e-9).unwrap();
        assert!(!out.stabilized);
    }

    #[test]
    fn axioms_and_propdec_on_g3_and_metric() {
        for k in [g3(), metric3()] {
            let bd = peierls_barrier(&k, &Tolerances::default()).unwrap();
            let report = check_cost_axioms(&bd);
            assert_eq!(report.triangle_violation, 0.0);
            assert_eq!(report.factorization_violation, 0.0);
            assert!(report.pass);
            assert_eq!(aubry_diagonal_residual(&bd), 0.0);
            for n in 1..=4 {
                let p = check_propdec(&k, &bd, n).unwrap();
                assert_eq!(p.left_residual, 0.0);
                assert_eq!(p.right_residual, 0.0);
            }
        }
    }

    #[test]
    fn oscillation_bound_of_g3() {
        let bd = peierls_barrier(&g3(), &Tolerances::default()).unwrap();
        assert_eq!(bd.oscillation, 12.0);
    }
}
