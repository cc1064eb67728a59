//! Min-plus linear algebra over dense kernels.
//!
//! `(A ⊗ B)(x, y) = min_z A(x, z) + B(z, y)`. There is no `+∞` here: every
//! kernel is finite, so the semiring has no multiplicative identity and
//! powers start at 1.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{CostKernel, Matrix};

/// Work (multiply-adds) above which a product is split across rows.
const PARALLEL_WORK: usize = 1 << 18;

/// Min-plus product `A ⊗ B`; `A.cols()` must equal `B.rows()`.
pub fn tropical_product(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.cols() != b.rows() {
        return Err(Error::DimensionMismatch {
            expected: a.cols(),
            found: b.rows(),
        });
    }
    let (rows, inner, cols) = (a.rows(), a.cols(), b.cols());
    let mut out = Matrix::filled(rows, cols, f64::INFINITY);
    if cols == 0 || inner == 0 {
        return Ok(out);
    }
    let fill_row = |i: usize, out_row: &mut [f64]| {
        let a_row = a.row(i);
        for (k, &aik) in a_row.iter().enumerate() {
            for (o, &bkj) in out_row.iter_mut().zip(b.row(k)) {
                let v = aik + bkj;
                if v < *o {
                    *o = v;
                }
            }
        }
    };
    let data = out.as_mut_slice();
    if rows * inner * cols >= PARALLEL_WORK {
        data.par_chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| fill_row(i, row));
    } else {
        for (i, row) in data.chunks_mut(cols).enumerate() {
            fill_row(i, row);
        }
    }
    Ok(out)
}

/// `A^{⊗m}`, the minimal cost of chains of exactly `m` steps.
pub fn tropical_power(a: &Matrix, m: usize) -> Result<Matrix> {
    a.require_square()?;
    if m == 0 {
        return Err(Error::ZeroPower);
    }
    let mut acc = a.clone();
    for _ in 1..m {
        acc = tropical_product(a, &acc)?;
    }
    Ok(acc)
}

/// Iterator over `A, A^{⊗2}, A^{⊗3}, ...`.
pub fn tropical_powers(a: &Matrix) -> impl Iterator<Item = Matrix> + '_ {
    std::iter::successors(Some(a.clone()), move |prev| {
        Some(tropical_product(a, prev).expect("square matrix"))
    })
}

/// A cycle achieving the minimum mean, with that mean.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanCycle {
    pub mean: f64,
    /// Vertices of the cycle in traversal order; the closing edge returns to
    /// the first vertex.
    pub cycle: Vec<usize>,
}

/// Minimum cycle mean of the complete weighted digraph with weights `A`.
///
/// This is the critical value `l = lim A^{⊗n}(x, y) / n`.
pub fn min_mean_cycle(a: &Matrix) -> Result<f64> {
    Ok(min_mean_cycle_witness(a)?.mean)
}

/// Karp's dynamic program, followed by extraction of an optimal cycle from
/// the minimizing walk. The returned mean is recomputed from the cycle's own
/// edges, so it carries no division error from the `(D_n - D_k)/(n - k)`
/// ratios.
pub fn min_mean_cycle_witness(a: &Matrix) -> Result<MeanCycle> {
    a.require_square()?;
    let n = a.size();
    if n == 0 {
        return Err(Error::Empty);
    }
    // dist[k][v]: minimal weight of a walk with exactly k edges ending at v,
    // starting anywhere.
    let mut dist = vec![vec![f64::INFINITY; n]; n + 1];
    let mut pred = vec![vec![usize::MAX; n]; n + 1];
    dist[0].fill(0.0);
    for k in 1..=n {
        for u in 0..n {
            let du = dist[k - 1][u];
            for (v, &w) in a.row(u).iter().enumerate() {
                let cand = du + w;
                if cand < dist[k][v] {
                    dist[k][v] = cand;
                    pred[k][v] = u;
                }
            }
        }
    }

    let mut best = f64::INFINITY;
    let mut best_v = 0;
    for (v, &dn) in dist[n].iter().enumerate() {
        let worst = (0..n)
            .map(|k| (dn - dist[k][v]) / (n - k) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        if worst < best {
            best = worst;
            best_v = v;
        }
    }

    // Walk of n edges ending at best_v, oldest vertex first.
    let mut walk = vec![best_v; n + 1];
    let mut v = best_v;
    for k in (1..=n).rev() {
        v = pred[k][v];
        walk[k - 1] = v;
    }

    let mut witness: Option<MeanCycle> = None;
    for cycle in walk_cycles(&walk) {
        let mean = cycle_mean(a, &cycle);
        if witness.as_ref().is_none_or(|w| mean < w.mean) {
            witness = Some(MeanCycle { mean, cycle });
        }
    }
    let witness = witness.expect("a walk of n edges on n vertices repeats a vertex");
    // The extracted cycle is exact up to rounding; anything larger means the
    // walk decomposition missed the optimum and Karp's value is the answer.
    let scale = 1.0 + a.max_entry().abs().max(a.min_entry().abs());
    if witness.mean > best + 1e-9 * scale {
        return Ok(MeanCycle {
            mean: best,
            cycle: witness.cycle,
        });
    }
    Ok(witness)
}

/// Mean edge weight around `cycle` (closing edge included).
pub fn cycle_mean(a: &Matrix, cycle: &[usize]) -> f64 {
    let len = cycle.len();
    let total: f64 = (0..len).map(|i| a[(cycle[i], cycle[(i + 1) % len])]).sum();
    total / len as f64
}

/// Decomposes a walk into the simple cycles it closes, in order of closure.
/// Each cycle is rotated to start at its smallest vertex.
fn walk_cycles(walk: &[usize]) -> Vec<Vec<usize>> {
    let mut stack: Vec<usize> = Vec::with_capacity(walk.len());
    let mut cycles = Vec::new();
    for &v in walk {
        if let Some(pos) = stack.iter().position(|&u| u == v) {
            let mut cycle: Vec<usize> = stack.drain(pos..).collect();
            let start = cycle
                .iter()
                .enumerate()
                .min_by_key(|(_, &u)| u)
                .map(|(i, _)| i)
                .unwrap_or(0);
            cycle.rotate_left(start);
            cycles.push(cycle);
        }
        stack.push(v);
    }
    cycles
}

/// Shifts the kernel by its critical value so that the minimum cycle mean is
/// zero. Returns the shifted kernel and the critical value removed.
pub fn normalize(kernel: &CostKernel) -> Result<(CostKernel, f64)> {
    let l = min_mean_cycle(kernel.matrix())?;
    Ok((kernel.with_matrix(kernel.matrix().shifted(l))?, l))
}

/// Minimal cost over all walks with at least one step,
/// `min_{1 ≤ m ≤ n} A^{⊗m}(x, y)`.
///
/// Computed by a Floyd–Warshall sweep seeded with `A` itself (not with a
/// zero diagonal), which is exact when every cycle mean is nonnegative.
/// `tol` is the slack allowed on the minimum cycle mean.
pub fn shortest_walk_closure(a: &Matrix, tol: f64) -> Result<Matrix> {
    a.require_square()?;
    let mean = min_mean_cycle(a)?;
    if mean < -tol {
        return Err(Error::NegativeCycle { mean });
    }
    let n = a.size();
    let mut d = a.clone();
    for k in 0..n {
        let row_k = d.row(k).to_vec();
        for i in 0..n {
            let dik = d[(i, k)];
            for (j, &dkj) in row_k.iter().enumerate() {
                let v = dik + dkj;
                if v < d[(i, j)] {
                    d[(i, j)] = v;
                }
            }
        }
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g3() -> Matrix {
        Matrix::from_rows(&[
            vec![0.0, 1.0, 4.0],
            vec![2.0, 1.0, 3.0],
            vec![1.0, 2.0, 2.0],
        ])
        .unwrap()
    }

    fn metric2() -> Matrix {
        Matrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn product_small_cases() {
        let z = Matrix::from_rows(&[vec![0.0]]).unwrap();
        assert_eq!(tropical_product(&z, &z).unwrap(), z);
        let m = metric2();
        assert_eq!(tropical_product(&m, &m).unwrap(), m);
        // min(2+4, 1+3, 3+2)
        assert_eq!(tropical_product(&g3(), &g3()).unwrap()[(1, 2)], 4.0);
    }

    #[test]
    fn product_rejects_mismatched_shapes() {
        let a = Matrix::filled(2, 3, 0.0);
        let b = Matrix::filled(2, 2, 0.0);
        assert!(matches!(
            tropical_product(&a, &b),
            Err(Error::DimensionMismatch {
                expected: 3,
                found: 2
            })
        ));
    }

    #[test]
    fn power_cases() {
        assert_eq!(tropical_power(&g3(), 1).unwrap(), g3());
        assert_eq!(tropical_power(&metric2(), 7).unwrap(), metric2());
        // min(1+4, 2+3, 2+2)
        assert_eq!(tropical_power(&g3(), 2).unwrap()[(2, 2)], 4.0);
        assert!(matches!(tropical_power(&g3(), 0), Err(Error::ZeroPower)));
    }

    #[test]
    fn min_mean_cycle_cases() {
        assert_eq!(
            min_mean_cycle(&Matrix::from_rows(&[vec![0.0]]).unwrap()).unwrap(),
            0.0
        );
        assert_eq!(
            min_mean_cycle(&Matrix::from_rows(&[vec![5.0]]).unwrap()).unwrap(),
            5.0
        );
        let w = min_mean_cycle_witness(&g3()).unwrap();
        assert_eq!(w.mean, 0.0);
        assert_eq!(w.cycle, vec![0]);
    }

    #[test]
    fn min_mean_cycle_two_cycle() {
        let a = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let w = min_mean_cycle_witness(&a).unwrap();
        assert_eq!(w.mean, 0.0);
        assert_eq!(w.cycle, vec![0, 1]);
    }

    #[test]
    fn normalize_cases() {
        let k = CostKernel::from_rows(&[vec![5.0]]).unwrap();
        let (kn, l) = normalize(&k).unwrap();
        assert_eq!(l, 5.0);
        assert_eq!(kn.cost(0, 0), 0.0);
        let g = CostKernel::from_matrix(g3()).unwrap();
        let (gn, l) = normalize(&g).unwrap();
        assert_eq!(l, 0.0);
        assert_eq!(gn, g);
    }

    #[test]
    fn closure_cases() {
        assert_eq!(shortest_walk_closure(&g3(), 1e-9).unwrap(), g3());
        assert_eq!(shortest_walk_closure(&metric2(), 1e-9).unwrap(), metric2());
        let neg = Matrix::from_rows(&[vec![-1.0]]).unwrap();
        assert!(matches!(
            shortest_walk_closure(&neg, 1e-9),
            Err(Error::NegativeCycle { .. })
        ));
    }

    #[test]
    fn walk_cycle_decomposition() {
        let cycles = walk_cycles(&[2, 0, 1, 0, 2]);
        assert_eq!(cycles, vec![vec![0, 1], vec![0, 2]]);
    }
}
