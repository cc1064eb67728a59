//! Stationary couplings as Markov chains, sampled orbits and Birkhoff
//! averages.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::barrier::BarrierData;
use crate::error::{Error, Result};
use crate::mather::StationaryCoupling;
use crate::matrix::{CostKernel, Matrix};
use crate::transport::Measure;

/// Stationary Markov chain whose two-step law is a given coupling.
///
/// Rows of `kernel` outside `support` are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarkovRealization {
    pub stationary: Measure,
    pub kernel: Matrix,
    pub support: Vec<usize>,
}

impl MarkovRealization {
    pub fn size(&self) -> usize {
        self.kernel.size()
    }

    /// `max |Σ_y P(x, y) - 1|` over the support.
    pub fn row_sum_residual(&self) -> f64 {
        self.support
            .iter()
            .map(|&x| (self.kernel.row(x).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_y |(μP)(y) - μ(y)|`.
    pub fn stationarity_residual(&self) -> f64 {
        let n = self.size();
        let mu = self.stationary.weights();
        (0..n)
            .map(|y| {
                let pushed: f64 = self
                    .support
                    .iter()
                    .map(|&x| mu[x] * self.kernel[(x, y)])
                    .sum();
                (pushed - mu[y]).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Communicating classes of the chain restricted to the support, each
    /// sorted, ordered by smallest member.
    pub fn recurrent_classes(&self) -> Vec<Vec<usize>> {
        let n = self.size();
        let mut reach = vec![vec![false; n]; n];
        for &x in &self.support {
            for (y, r) in reach[x].iter_mut().enumerate() {
                *r = y == x || self.kernel[(x, y)] > 0.0;
            }
        }
        for k in 0..n {
            for i in 0..n {
                if reach[i][k] {
                    let via = reach[k].clone();
                    for (r, v) in reach[i].iter_mut().zip(via) {
                        *r |= v;
                    }
                }
            }
        }
        let mut seen = vec![false; n];
        let mut classes = Vec::new();
        for &x in &self.support {
            if seen[x] {
                continue;
            }
            let class: Vec<usize> = self
                .support
                .iter()
                .copied()
                .filter(|&y| reach[x][y] && reach[y][x])
                .collect();
            for &y in &class {
                seen[y] = true;
            }
            classes.push(class);
        }
        classes
    }

    /// The chain conditioned to start in `class`.
    pub fn restrict(&self, class: &[usize]) -> Result<MarkovRealization> {
        let n = self.size();
        let mu = self.stationary.weights();
        let mut weights = vec![0.0; n];
        for &x in class {
            weights[x] = mu[x];
        }
        let mass: f64 = weights.iter().sum();
        if mass <= 0.0 {
            return Err(Error::InvalidMeasure("class carries no mass".into()));
        }
        weights.iter_mut().for_each(|w| *w /= mass);
        Ok(MarkovRealization {
            stationary: Measure::new(weights, 1e-9)?,
            kernel: self.kernel.clone(),
            support: class.to_vec(),
        })
    }
}

/// Disintegrates `η` along its first marginal: `P(x, y) = η(x, y) / μ(x)`
/// wherever `μ(x) > mass_tol`.
pub fn markov_from_coupling(eta: &StationaryCoupling, mass_tol: f64) -> MarkovRealization {
    let n = eta.size();
    let mu = eta.common_marginal.clone();
    let support = mu.support(mass_tol);
    let mut kernel = Matrix::filled(n, n, 0.0);
    for &x in &support {
        let row: f64 = eta.eta.row(x).iter().sum();
        for y in 0..n {
            kernel[(x, y)] = eta.eta[(x, y)] / row;
        }
    }
    MarkovRealization {
        stationary: mu,
        kernel,
        support,
    }
}

/// `L(x, y) = μ(x) P(x, y)`, the law of `(x_0, x_1)` under the chain.
pub fn two_step_law(mr: &MarkovRealization) -> Matrix {
    let n = mr.size();
    let mu = mr.stationary.weights();
    Matrix::from_fn(n, n, |x, y| mu[x] * mr.kernel[(x, y)])
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrbitSample {
    pub path: Vec<usize>,
}

impl OrbitSample {
    pub fn len(&self) -> usize {
        self.path.len()
    }

    pub fn is_empty(&self) -> bool {
        self.path.is_empty()
    }

    pub fn steps(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.path.windows(2).map(|w| (w[0], w[1]))
    }
}

/// Samples `x_0 ~ μ`, `x_{j+1} ~ P(x_j, ·)` for `length` points.
pub fn sample_orbit(mr: &MarkovRealization, length: usize, seed: u64) -> Result<OrbitSample> {
    if length == 0 {
        return Err(Error::OrbitTooShort(0));
    }
    let n = mr.size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = WeightedIndex::new(mr.stationary.weights())
        .map_err(|e| Error::InvalidMeasure(e.to_string()))?;
    let mut rows: Vec<Option<WeightedIndex<f64>>> = vec![None; n];
    for &x in &mr.support {
        rows[x] = Some(
            WeightedIndex::new(mr.kernel.row(x))
                .map_err(|e| Error::InvalidMeasure(e.to_string()))?,
        );
    }
    let mut path = Vec::with_capacity(length);
    let mut x = start.sample(&mut rng);
    path.push(x);
    while path.len() < length {
        let dist = rows[x].as_ref().ok_or(Error::NoSuccessor { x })?;
        x = dist.sample(&mut rng);
        path.push(x);
    }
    Ok(OrbitSample { path })
}

/// Independent orbits, one per seed, sampled in parallel.
pub fn sample_orbits(
    mr: &MarkovRealization,
    length: usize,
    seeds: &[u64],
) -> Result<Vec<OrbitSample>> {
    seeds
        .par_iter()
        .map(|&s| sample_orbit(mr, length, s))
        .collect()
}

/// One orbit per recurrent class, of length proportional to the class mass
/// and at least 2, totalling about `length` points.
///
/// A single orbit never leaves its class, so this is how a chain with
/// several classes is averaged.
pub fn sample_by_class(
    mr: &MarkovRealization,
    length: usize,
    seed: u64,
) -> Result<Vec<OrbitSample>> {
    let mu = mr.stationary.weights();
    mr.recurrent_classes()
        .par_iter()
        .enumerate()
        .map(|(i, class)| {
            let mass: f64 = class.iter().map(|&x| mu[x]).sum();
            let len = ((length as f64 * mass).round() as usize).max(2);
            sample_orbit(&mr.restrict(class)?, len, seed.wrapping_add(i as u64))
        })
        .collect()
}

/// `(1 / (L - 1)) Σ A(x_j, x_{j+1})`.
pub fn birkhoff_average(orbit: &OrbitSample, a: &CostKernel) -> Result<f64> {
    if orbit.len() < 2 {
        return Err(Error::OrbitTooShort(orbit.len()));
    }
    let total: f64 = orbit.steps().map(|(x, y)| a.cost(x, y)).sum();
    Ok(total / (orbit.len() - 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BirkhoffStatistics {
    pub mean: f64,
    /// Empirical standard deviation of the one-step cost.
    pub sigma: f64,
    pub steps: usize,
    /// `σ / √steps`.
    pub standard_error: f64,
}

impl BirkhoffStatistics {
    /// `max(floor, 3σ/√L)`.
    pub fn tolerance(&self, floor: f64) -> f64 {
        floor.max(3.0 * self.standard_error)
    }
}

/// Pooled one-step cost statistics over several orbits.
pub fn birkhoff_statistics(orbits: &[OrbitSample], a: &CostKernel) -> Result<BirkhoffStatistics> {
    let mut steps = 0usize;
    let mut sum = 0.0;
    for o in orbits {
        if o.len() < 2 {
            return Err(Error::OrbitTooShort(o.len()));
        }
        steps += o.len() - 1;
        sum += o.steps().map(|(x, y)| a.cost(x, y)).sum::<f64>();
    }
    if steps == 0 {
        return Err(Error::OrbitTooShort(0));
    }
    let mean = sum / steps as f64;
    let sq: f64 = orbits
        .iter()
        .flat_map(|o| o.steps())
        .map(|(x, y)| (a.cost(x, y) - mean).powi(2))
        .sum();
    let sigma = if steps > 1 {
        (sq / (steps - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(BirkhoffStatistics {
        mean,
        sigma,
        steps,
        standard_error: sigma / (steps as f64).sqrt(),
    })
}

/// Frequency of each consecutive pair, pooled over the orbits.
pub fn empirical_pair_frequencies(orbits: &[OrbitSample], n: usize) -> Matrix {
    let mut counts = Matrix::filled(n, n, 0.0);
    let mut total = 0usize;
    for o in orbits {
        for (x, y) in o.steps() {
            counts[(x, y)] += 1.0;
            total += 1;
        }
    }
    if total > 0 {
        let t = total as f64;
        for v in counts.as_mut_slice() {
            *v /= t;
        }
    }
    counts
}

/// Fraction of time spent at each point, pooled over the orbits.
pub fn empirical_occupation(orbits: &[OrbitSample], n: usize) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    let mut total = 0usize;
    for o in orbits {
        for &x in &o.path {
            counts[x] += 1.0;
            total += 1;
        }
    }
    if total > 0 {
        counts.iter_mut().for_each(|c| *c /= total as f64);
    }
    counts
}

/// `½ Σ |p - q|` over matching entries.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Deterministic orbit through `D`, always stepping to the lowest-index
/// successor.
pub fn orbit_in_d(bd: &BarrierData, x0: usize, length: usize) -> Result<OrbitSample> {
    if length == 0 {
        return Err(Error::OrbitTooShort(0));
    }
    if x0 >= bd.size() || !bd.is_aubry(x0) {
        return Err(Error::NotAubry { x: x0 });
    }
    let mut path = Vec::with_capacity(length);
    let mut x = x0;
    path.push(x);
    while path.len() < length {
        // d_edges is sorted, so the first match is the lowest successor.
        let start = bd.d_edges.partition_point(|&(u, _)| u < x);
        x = match bd.d_edges.get(start) {
            Some(&(u, y)) if u == x => y,
            _ => return Err(Error::NoSuccessor { x }),
        };
        path.push(x);
    }
    Ok(OrbitSample { path })
}
