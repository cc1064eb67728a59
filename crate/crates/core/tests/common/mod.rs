//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tropikam::{CostKernel, Matrix, Measure};

pub fn g3() -> CostKernel {
    CostKernel::from_rows(&[
        vec![0.0, 1.0, 4.0],
        vec![2.0, 1.0, 3.0],
        vec![1.0, 2.0, 2.0],
    ])
    .unwrap()
}

pub fn metric3() -> CostKernel {
    CostKernel::from_rows(&[
        vec![0.0, 1.0, 2.0],
        vec![1.0, 0.0, 1.0],
        vec![2.0, 1.0, 0.0],
    ])
    .unwrap()
}

pub fn uniform_kernel(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> CostKernel {
    CostKernel::from_matrix(Matrix::from_fn(n, n, |_, _| rng.gen_range(lo..=hi))).unwrap()
}

pub fn integer_kernel(rng: &mut ChaCha8Rng, n: usize, max: i32) -> CostKernel {
    CostKernel::from_matrix(Matrix::from_fn(n, n, |_, _| rng.gen_range(0..=max) as f64)).unwrap()
}

/// Shortest-path metric of random symmetric positive edge weights.
pub fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> CostKernel {
    let mut d = Matrix::from_fn(n, n, |_, _| 0.0);
    for x in 0..n {
        for y in x + 1..n {
            let w = rng.gen_range(0.5..3.0);
            d[(x, y)] = w;
            d[(y, x)] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    CostKernel::from_matrix(d).unwrap()
}

/// Random probability vector, sometimes with a restricted support.
pub fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> Measure {
    random_measure_within(rng, n, n)
}

/// Random probability vector on at most `max_support` points.
pub fn random_measure_within(rng: &mut ChaCha8Rng, n: usize, max_support: usize) -> Measure {
    let k = rng.gen_range(1..=n.min(max_support));
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut w = vec![0.0; n];
    for &i in &idx[..k] {
        w[i] = rng.gen_range(0.05..1.0);
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    Measure::new(w, 1e-12).unwrap()
}

/// Probability vector with weights in multiples of `1/q`.
pub fn lattice_measure(rng: &mut ChaCha8Rng, n: usize, q: usize) -> (Measure, Vec<usize>) {
    let mut counts = vec![0usize; n];
    for _ in 0..q {
        counts[rng.gen_range(0..n)] += 1;
    }
    let w = counts.iter().map(|&c| c as f64 / q as f64).collect();
    (Measure::new(w, 1e-12).unwrap(), counts)
}

/// `min Σ A(x_i, x_{i+1})` over all chains of `m` steps, by enumeration.
pub fn chain_enumeration(a: &Matrix, m: usize) -> Matrix {
    let n = a.rows();
    Matrix::from_fn(n, n, |x, y| {
        let mut best = f64::INFINITY;
        let mut mids = vec![0usize; m - 1];
        loop {
            let mut cost = 0.0;
            let mut prev = x;
            for &z in &mids {
                cost += a[(prev, z)];
                prev = z;
            }
            cost += a[(prev, y)];
            best = best.min(cost);
            let mut i = 0;
            while i < mids.len() {
                mids[i] += 1;
                if mids[i] < n {
                    break;
                }
                mids[i] = 0;
                i += 1;
            }
            if i == mids.len() {
                return best;
            }
        }
    })
}

/// Minimum mean over all simple cycles, by depth-first enumeration.
pub fn simple_cycle_min_mean(a: &Matrix) -> f64 {
    let n = a.rows();
    let mut best = f64::INFINITY;
    for start in 0..n {
        let mut on_path = vec![false; n];
        on_path[start] = true;
        dfs(a, start, start, 0.0, 1, &mut on_path, &mut best);
    }
    best
}

fn dfs(
    a: &Matrix,
    start: usize,
    at: usize,
    cost: f64,
    len: usize,
    on_path: &mut [bool],
    best: &mut f64,
) {
    let n = a.rows();
    *best = best.min((cost + a[(at, start)]) / len as f64);
    for next in start + 1..n {
        if !on_path[next] {
            on_path[next] = true;
            dfs(a, start, next, cost + a[(at, next)], len + 1, on_path, best);
            on_path[next] = false;
        }
    }
}

/// Every simple cycle of the directed graph `edges` on `n` points, each
/// starting at its smallest point.
pub fn simple_cycles(n: usize, edges: &[(usize, usize)], limit: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n];
    for &(x, y) in edges {
        adj[x].push(y);
    }
    let mut out = Vec::new();
    for start in 0..n {
        let mut path = vec![start];
        walk_cycles(&adj, start, &mut path, &mut out, limit);
    }
    out
}

fn walk_cycles(
    adj: &[Vec<usize>],
    start: usize,
    path: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    let at = *path.last().unwrap();
    for &next in &adj[at] {
        if next == start {
            out.push(path.clone());
        } else if next > start && !path.contains(&next) {
            path.push(next);
            walk_cycles(adj, start, path, out, limit);
            path.pop();
        }
    }
}

/// Optimal transport cost between lattice measures by splitting both into
/// `q` atoms of mass `1/q` and minimizing over all assignments.
pub fn assignment_transport(cost: &Matrix, counts0: &[usize], counts1: &[usize]) -> f64 {
    let atoms = |counts: &[usize]| -> Vec<usize> {
        counts
            .iter()
            .enumerate()
            .flat_map(|(x, &c)| std::iter::repeat_n(x, c))
            .collect()
    };
    let src = atoms(counts0);
    let mut dst = atoms(counts1);
    assert_eq!(src.len(), dst.len());
    let q = src.len() as f64;
    let mut best = f64::INFINITY;
    permute(&mut dst, 0, &mut |perm| {
        let c: f64 = src.iter().zip(perm).map(|(&x, &y)| cost[(x, y)]).sum();
        best = best.min(c / q);
    });
    best
}

fn permute(v: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}
