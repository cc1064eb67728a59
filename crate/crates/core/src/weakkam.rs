//! Lax–Oleinik operators and weak KAM / Kantorovich pairs.
//!
//! Admissible pairs for the barrier cost are in bijection with c-Lipschitz
//! functions on the Aubry set:
//!
//! ```text
//! φ1(x) = min_{a ∈ 𝒜} φ(a) + c(a, x)
//! φ0(x) = max_{a ∈ 𝒜} φ(a) - c(x, a)
//! ```
//!
//! and a pair is admissible exactly when `φ0 = T⁺φ0`, `φ1 = T⁻φ1` and
//! `φ0 = φ1` on `𝒜`. Pairs are built from that parameterization rather than by
//! iterating `T⁻`, whose iterates may cycle.

use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::barrier::BarrierData;
use crate::error::{Error, Result};
use crate::matrix::CostKernel;

/// Real function on the point set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Potential(Vec<f64>);

impl Potential {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        Ok(Potential(values))
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Potential(vec![value; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn shifted(&self, t: f64) -> Potential {
        Potential(self.0.iter().map(|v| v + t).collect())
    }

    /// Sup-norm distance. Panics on length mismatch.
    pub fn sup_distance(&self, other: &Potential) -> f64 {
        assert_eq!(self.len(), other.len());
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Values at the given indices.
    pub fn restrict(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&i| self.0[i]).collect()
    }
}

impl Index<usize> for Potential {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KamPair {
    pub phi0: Potential,
    pub phi1: Potential,
}

impl KamPair {
    pub fn shifted(&self, t: f64) -> KamPair {
        KamPair {
            phi0: self.phi0.shifted(t),
            phi1: self.phi1.shifted(t),
        }
    }
}

fn check_len(kernel: &CostKernel, u: &Potential) -> Result<()> {
    if kernel.size() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: kernel.size(),
            found: u.len(),
        });
    }
    Ok(())
}

/// `T⁻u(x) = min_y u(y) + A(y, x)`.
pub fn lax_oleinik_minus(a: &CostKernel, u: &Potential) -> Result<Potential> {
    check_len(a, u)?;
    let n = a.size();
    let m = a.matrix();
    let out = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| u[y] + m[(y, x)])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(Potential(out))
}

/// `T⁺u(x) = max_y u(y) - A(x, y)`.
pub fn lax_oleinik_plus(a: &CostKernel, u: &Potential) -> Result<Potential> {
    check_len(a, u)?;
    let n = a.size();
    let m = a.matrix();
    let out = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| u[y] - m[(x, y)])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(Potential(out))
}

/// Applies `T⁻` `steps` times. Diagnostic only; returns the last iterate and
/// the sup-norm size of the last step.
pub fn iterate_lax_oleinik_minus(
    a: &CostKernel,
    u: &Potential,
    steps: usize,
) -> Result<(Potential, f64)> {
    let mut cur = u.clone();
    let mut last = 0.0;
    for _ in 0..steps {
        let next = lax_oleinik_minus(a, &cur)?;
        last = next.sup_distance(&cur);
        cur = next;
    }
    Ok((cur, last))
}

/// Worst violation of `φ(b) - φ(a) ≤ c(a, b)` over the Aubry set, with the
/// offending pair `(a, b)`. `phi` is indexed like `bd.aubry`.
pub fn aubry_lipschitz_violation(bd: &BarrierData, phi: &[f64]) -> (f64, Option<(usize, usize)>) {
    let mut worst = f64::NEG_INFINITY;
    let mut at = None;
    for (i, &a) in bd.aubry.iter().enumerate() {
        for (j, &b) in bd.aubry.iter().enumerate() {
            let v = phi[j] - phi[i] - bd.c[(a, b)];
            if v > worst {
                worst = v;
                at = Some((a, b));
            }
        }
    }
    (worst, at)
}

/// The admissible pair generated by a c-Lipschitz function on the Aubry
/// set. `phi[i]` is the value at `bd.aubry[i]`.
pub fn pair_from_lipschitz(bd: &BarrierData, phi: &[f64]) -> Result<KamPair> {
    if phi.len() != bd.aubry.len() {
        return Err(Error::DimensionMismatch {
            expected: bd.aubry.len(),
            found: phi.len(),
        });
    }
    if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: i, col: 0 });
    }
    let (violation, at) = aubry_lipschitz_violation(bd, phi);
    if violation > bd.tol.num {
        let (a, b) = at.expect("nonempty Aubry set");
        return Err(Error::NotLipschitz { a, b, violation });
    }
    let n = bd.size();
    let phi1 = (0..n)
        .map(|x| {
            bd.aubry
                .iter()
                .zip(phi)
                .map(|(&a, &p)| p + bd.c[(a, x)])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let phi0 = (0..n)
        .map(|x| {
            bd.aubry
                .iter()
                .zip(phi)
                .map(|(&a, &p)| p - bd.c[(x, a)])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(KamPair {
        phi0: Potential(phi0),
        phi1: Potential(phi1),
    })
}

/// `φ0(x) = max_{a ∈ 𝒜} φ1(a) - c(x, a)` without any precondition check.
pub(crate) fn completion(bd: &BarrierData, phi1: &Potential) -> Potential {
    let n = bd.size();
    Potential(
        (0..n)
            .map(|x| {
                bd.aubry
                    .iter()
                    .map(|&a| phi1[a] - bd.c[(x, a)])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect(),
    )
}

/// The unique `φ0` making `(φ0, φ1)` admissible, for a fixed point `φ1` of
/// `T⁻`.
pub fn complete_pair(a: &CostKernel, bd: &BarrierData, phi1: &Potential) -> Result<KamPair> {
    let image = lax_oleinik_minus(a, phi1)?;
    let residual = image.sup_distance(phi1);
    if residual > bd.tol.num {
        return Err(Error::NotFixedPoint { residual });
    }
    Ok(KamPair {
        phi0: completion(bd, phi1),
        phi1: phi1.clone(),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// `max_y |φ1(y) - min_x φ0(x) + c(x,y)|`.
    pub phi1_residual: f64,
    pub phi1_worst: usize,
    /// `max_x |φ0(x) - max_y φ1(y) - c(x,y)|`.
    pub phi0_residual: f64,
    pub phi0_worst: usize,
    pub pass: bool,
}

/// Residuals of the two defining relations of a Kantorovich admissible pair.
pub fn is_admissible_pair(bd: &BarrierData, pair: &KamPair) -> Result<AdmissibilityReport> {
    let n = bd.size();
    for p in [&pair.phi0, &pair.phi1] {
        if p.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: p.len(),
            });
        }
    }
    let c = &bd.c;
    let (mut phi1_residual, mut phi1_worst) = (0.0, 0);
    for y in 0..n {
        let m = (0..n)
            .map(|x| pair.phi0[x] + c[(x, y)])
            .fold(f64::INFINITY, f64::min);
        let r = (pair.phi1[y] - m).abs();
        if r > phi1_residual {
            phi1_residual = r;
            phi1_worst = y;
        }
    }
    let (mut phi0_residual, mut phi0_worst) = (0.0, 0);
    for x in 0..n {
        let m = (0..n)
            .map(|y| pair.phi1[y] - c[(x, y)])
            .fold(f64::NEG_INFINITY, f64::max);
        let r = (pair.phi0[x] - m).abs();
        if r > phi0_residual {
            phi0_residual = r;
            phi0_worst = x;
        }
    }
    Ok(AdmissibilityReport {
        phi1_residual,
        phi1_worst,
        phi0_residual,
        phi0_worst,
        pass: phi1_residual <= bd.tol.num && phi0_residual <= bd.tol.num,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairTheoremReport {
    pub admissibility: AdmissibilityReport,
    /// `sup |T⁺φ0 - φ0|`.
    pub t_plus_residual: f64,
    /// `sup |T⁻φ1 - φ1|`.
    pub t_minus_residual: f64,
    /// `max_{a ∈ 𝒜} |φ0(a) - φ1(a)|`.
    pub aubry_gap: f64,
    /// All three fixed-point conditions hold.
    pub conditions_hold: bool,
    /// Admissibility and the three conditions agree, as the equivalence
    /// requires.
    pub equivalence_holds: bool,
}

/// Evaluates both sides of the equivalence "admissible ⇔ (T⁺ fixed point,
/// T⁻ fixed point, equal on 𝒜)" for one pair.
pub fn check_theorem_pairs(
    a: &CostKernel,
    bd: &BarrierData,
    pair: &KamPair,
) -> Result<PairTheoremReport> {
    let admissibility = is_admissible_pair(bd, pair)?;
    let t_plus_residual = lax_oleinik_plus(a, &pair.phi0)?.sup_distance(&pair.phi0);
    let t_minus_residual = lax_oleinik_minus(a, &pair.phi1)?.sup_distance(&pair.phi1);
    let aubry_gap = bd
        .aubry
        .iter()
        .map(|&x| (pair.phi0[x] - pair.phi1[x]).abs())
        .fold(0.0, f64::max);
    let tol = bd.tol.num;
    let conditions_hold = t_plus_residual <= tol && t_minus_residual <= tol && aubry_gap <= tol;
    Ok(PairTheoremReport {
        equivalence_holds: conditions_hold == admissibility.pass,
        admissibility,
        t_plus_residual,
        t_minus_residual,
        aubry_gap,
        conditions_hold,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `max φ(y) - φ(x) - A(x, y)`.
    pub max_violation: f64,
    pub worst: (usize, usize),
    pub pass: bool,
}

/// Whether `φ(y) - φ(x) ≤ A(x, y)` for all pairs.
pub fn is_a_lipschitz(a: &CostKernel, phi: &Potential, tol: f64) -> Result<LipschitzReport> {
    check_len(a, phi)?;
    let n = a.size();
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst = (0, 0);
    for x in 0..n {
        for y in 0..n {
            let v = phi[y] - phi[x] - a.cost(x, y);
            if v > max_violation {
                max_violation = v;
                worst = (x, y);
            }
        }
    }
    Ok(LipschitzReport {
        max_violation,
        worst,
        pass: max_violation <= tol,
    })
}

/// `z ↦ c(z1, z)`, an A-Lipschitz function for every `z1`.
pub fn barrier_row_potential(bd: &BarrierData, z1: usize) -> Potential {
    Potential(bd.c_row(z1))
}

/// `φ(a) = min_{(b, r) ∈ anchors} r + c(b, a)` on the Aubry set, indexed like
/// `bd.aubry`. Any such min-combination is c-Lipschitz by the triangle
/// inequality. Anchor points must lie in the Aubry set.
pub fn lipschitz_seed(bd: &BarrierData, anchors: &[(usize, f64)]) -> Result<Vec<f64>> {
    if anchors.is_empty() {
        return Err(Error::InvalidSpec("at least one anchor is required".into()));
    }
    for &(b, _) in anchors {
        if !bd.is_aubry(b) {
            return Err(Error::NotAubry { x: b });
        }
    }
    Ok(bd
        .aubry
        .iter()
        .map(|&a| {
            anchors
                .iter()
                .map(|&(b, r)| r + bd.c[(b, a)])
                .fold(f64::INFINITY, f64::min)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::peierls_barrier;
    use crate::tolerance::Tolerances;

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

    fn pot(v: &[f64]) -> Potential {
        Potential::new(v.to_vec()).unwrap()
    }

    #[test]
    fn lax_oleinik_examples() {
        let m = metric3();
        assert_eq!(
            lax_oleinik_minus(&m, &pot(&[0.0; 3])).unwrap(),
            pot(&[0.0; 3])
        );
        assert_eq!(
            lax_oleinik_plus(&m, &pot(&[0.0; 3])).unwrap(),
            pot(&[0.0; 3])
        );
        let g = g3();
        assert_eq!(
            lax_oleinik_minus(&g, &pot(&[0.0, 1.0, 4.0])).unwrap(),
            pot(&[0.0, 1.0, 4.0])
        );
        assert_eq!(
            lax_oleinik_plus(&g, &pot(&[0.0, -2.0, -1.0])).unwrap(),
            pot(&[0.0, -2.0, -1.0])
        );
        let one = CostKernel::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(lax_oleinik_minus(&one, &pot(&[3.5])).unwrap(), pot(&[3.5]));
        assert_eq!(lax_oleinik_plus(&one, &pot(&[3.5])).unwrap(), pot(&[3.5]));
    }

    #[test]
    fn size_mismatch_is_an_error() {
        assert!(matches!(
            lax_oleinik_minus(&g3(), &pot(&[0.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn g3_pair_from_singleton_aubry_set() {
        let g = g3();
        let bd = peierls_barrier(&g, &Tolerances::default()).unwrap();
        let pair = pair_from_lipschitz(&bd, &[0.0]).unwrap();
        assert_eq!(pair.phi1, pot(&[0.0, 1.0, 4.0]));
        assert_eq!(pair.phi0, pot(&[0.0, -2.0, -1.0]));
        assert!(is_admissible_pair(&bd, &pair).unwrap().pass);

        let shifted = pair_from_lipschitz(&bd, &[2.5]).unwrap();
        assert_eq!(shifted, pair.shifted(2.5));
    }

    #[test]
    fn metric_pairs_are_diagonal() {
        let m = metric3();
        let bd = peierls_barrier(&m, &Tolerances::default()).unwrap();
        let phi = [0.3, 1.0, 0.5];
        let pair = pair_from_lipschitz(&bd, &phi).unwrap();
        assert_eq!(pair.phi0.values(), &phi);
        assert_eq!(pair.phi1.values(), &phi);
        let completed = complete_pair(&m, &bd, &pot(&phi)).unwrap();
        assert_eq!(completed.phi0.values(), &phi);
    }

    #[test]
    fn non_lipschitz_seed_reports_worst_pair() {
        let m = metric3();
        let bd = peierls_barrier(&m, &Tolerances::default()).unwrap();
        match pair_from_lipschitz(&bd, &[0.0, 0.0, 5.0]) {
            Err(Error::NotLipschitz { a, b, violation }) => {
                assert_eq!((a, b), (1, 2));
                assert!((violation - 4.0).abs() < 1e-12);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn complete_pair_examples() {
        let g = g3();
        let bd = peierls_barrier(&g, &Tolerances::default()).unwrap();
        let pair = complete_pair(&g, &bd, &pot(&[0.0, 1.0, 4.0])).unwrap();
        assert_eq!(pair.phi0, pot(&[0.0, -2.0, -1.0]));
        let shifted = complete_pair(&g, &bd, &pot(&[0.0, 1.0, 4.0]).shifted(-1.25)).unwrap();
        assert_eq!(shifted, pair.shifted(-1.25));
        assert!(matches!(
            complete_pair(&g, &bd, &pot(&[0.0, 0.0, 0.0])),
            Err(Error::NotFixedPoint { .. })
        ));
    }

    #[test]
    fn admissibility_failure_on_g3() {
        let bd = peierls_barrier(&g3(), &Tolerances::default()).unwrap();
        let bad = KamPair {
            phi0: pot(&[0.0, 0.0, 0.0]),
            phi1: pot(&[0.0, 1.0, 4.0]),
        };
        let r = is_admissible_pair(&bd, &bad).unwrap();
        assert!(!r.pass);
        assert_eq!(r.phi0_worst, 1);
        assert_eq!(r.phi0_residual, 2.0);
    }

    #[test]
    fn theorem_pairs_on_examples() {
        let g = g3();
        let bd = peierls_barrier(&g, &Tolerances::default()).unwrap();
        let pair = pair_from_lipschitz(&bd, &[0.0]).unwrap();
        let r = check_theorem_pairs(&g, &bd, &pair).unwrap();
        assert!(r.conditions_hold && r.equivalence_holds && r.admissibility.pass);
        assert_eq!(r.t_plus_residual + r.t_minus_residual + r.aubry_gap, 0.0);

        // Perturb φ0 at the non-Aubry point 2.
        let delta = 0.25;
        let mut phi0 = pair.phi0.clone().into_values();
        phi0[2] += delta;
        let bad = KamPair {
            phi0: pot(&phi0),
            phi1: pair.phi1.clone(),
        };
        let r = check_theorem_pairs(&g, &bd, &bad).unwrap();
        assert!(!r.conditions_hold && !r.admissibility.pass && r.equivalence_holds);
        assert_eq!(r.t_plus_residual, delta);
    }

    #[test]
    fn a_lipschitz_examples() {
        let g = g3();
        let bd = peierls_barrier(&g, &Tolerances::default()).unwrap();
        assert!(
            is_a_lipschitz(&g, &barrier_row_potential(&bd, 0), 1e-9)
                .unwrap()
                .pass
        );
        assert!(
            is_a_lipschitz(&g, &Potential::constant(3, 7.0), 1e-9)
                .unwrap()
                .pass
        );
        let r = is_a_lipschitz(&g, &pot(&[0.0, 10.0, 0.0]), 1e-9).unwrap();
        assert!(!r.pass);
        assert_eq!(r.worst, (0, 1));
    }

    #[test]
    fn seeds_are_lipschitz() {
        let m = metric3();
        let bd = peierls_barrier(&m, &Tolerances::default()).unwrap();
        let phi = lipschitz_seed(&bd, &[(0, 0.0), (2, -0.5)]).unwrap();
        assert_eq!(phi, vec![0.0, 0.5, -0.5]);
        assert!(aubry_lipschitz_violation(&bd, &phi).0 <= 0.0);
        assert!(matches!(
            lipschitz_seed(
                &peierls_barrier(&g3(), &Tolerances::default()).unwrap(),
                &[(1, 0.0)]
            ),
            Err(Error::NotAubry { x: 1 })
        ));
    }
}
