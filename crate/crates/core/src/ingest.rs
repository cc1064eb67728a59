//! Cost kernels from files and from time-periodic Lagrangians on the circle.

use std::f64::consts::TAU;
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{CostKernel, Matrix};

/// Potential term `V(x, t)`, entering as `L = kinetic·v²/2 - V`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialTerm {
    Zero,
    /// `ε cos(2πx)`.
    Cosine {
        amplitude: f64,
    },
    /// `a1 cos(2πx) + a2 cos(2π(2x - t))`.
    TwoHarmonic {
        a1: f64,
        a2: f64,
    },
}

impl PotentialTerm {
    pub fn value(&self, x: f64, t: f64) -> f64 {
        match *self {
            PotentialTerm::Zero => 0.0,
            PotentialTerm::Cosine { amplitude } => amplitude * (TAU * x).cos(),
            PotentialTerm::TwoHarmonic { a1, a2 } => {
                a1 * (TAU * x).cos() + a2 * (TAU * (2.0 * x - t)).cos()
            }
        }
    }

    /// Upper bound on `max V - min V` over space and time.
    pub fn oscillation(&self) -> f64 {
        match *self {
            PotentialTerm::Zero => 0.0,
            PotentialTerm::Cosine { amplitude } => 2.0 * amplitude.abs(),
            PotentialTerm::TwoHarmonic { a1, a2 } => 2.0 * (a1.abs() + a2.abs()),
        }
    }

    fn is_time_dependent(&self) -> bool {
        matches!(self, PotentialTerm::TwoHarmonic { a2, .. } if *a2 != 0.0)
    }
}

/// A Lagrangian `kinetic·v²/2 - V(x, t)` sampled on `grid_size` equally
/// spaced points of the circle with `substeps` time slices per period.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LagrangianSpec {
    pub grid_size: usize,
    pub substeps: usize,
    pub kinetic: f64,
    pub potential: PotentialTerm,
}

impl LagrangianSpec {
    pub fn free(grid_size: usize, substeps: usize) -> Self {
        LagrangianSpec {
            grid_size,
            substeps,
            kinetic: 1.0,
            potential: PotentialTerm::Zero,
        }
    }

    pub fn pendulum(amplitude: f64, grid_size: usize, substeps: usize) -> Self {
        LagrangianSpec {
            grid_size,
            substeps,
            kinetic: 1.0,
            potential: PotentialTerm::Cosine { amplitude },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid_size < 2 {
            return Err(Error::InvalidSpec(format!(
                "grid size {} is below 2",
                self.grid_size
            )));
        }
        if self.substeps < 1 {
            return Err(Error::InvalidSpec(
                "at least one substep is required".into(),
            ));
        }
        if !(self.kinetic.is_finite() && self.kinetic > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "kinetic coefficient {} must be positive",
                self.kinetic
            )));
        }
        let params: &[f64] = match &self.potential {
            PotentialTerm::Zero => &[],
            PotentialTerm::Cosine { amplitude } => std::slice::from_ref(amplitude),
            PotentialTerm::TwoHarmonic { a1, a2 } => &[*a1, *a2],
        };
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidSpec(
                "potential parameters must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn lagrangian(&self, x: f64, v: f64, t: f64) -> f64 {
        0.5 * self.kinetic * v * v - self.potential.value(x, t)
    }

    /// Points of the refined grid the intermediate positions live on.
    pub fn refined_size(&self) -> usize {
        self.grid_size * self.substeps
    }

    /// Largest refined-grid offset a single substep of an optimal chain can
    /// use.
    ///
    /// A chain containing a step of length `d` costs at least
    /// `kinetic·K·d²/2 - max V`, while the uniform chain costs at most
    /// `kinetic/8 - min V`, so longer steps never win.
    pub fn step_bandwidth(&self) -> usize {
        let m = self.refined_size();
        let k = self.substeps as f64;
        let reach = ((0.25 + 2.0 * self.potential.oscillation() / self.kinetic) / k).sqrt();
        let w = (m as f64 * reach).ceil() as usize + 1;
        w.min(m / 2)
    }
}

impl fmt::Display for LagrangianSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.potential {
            PotentialTerm::Zero => write!(f, "free:")?,
            PotentialTerm::Cosine { amplitude } => write!(f, "pendulum:eps={amplitude},")?,
            PotentialTerm::TwoHarmonic { a1, a2 } => write!(f, "twoharmonic:a1={a1},a2={a2},")?,
        }
        write!(f, "N={},K={}", self.grid_size, self.substeps)?;
        if self.kinetic != 1.0 {
            write!(f, ",kinetic={}", self.kinetic)?;
        }
        Ok(())
    }
}

/// Parses `kind:key=value,...`, e.g. `pendulum:eps=0.1,N=50,K=10`.
///
/// Kinds are `free`, `pendulum` (`eps`) and `twoharmonic` (`a1`, `a2`);
/// `N`, `K` and `kinetic` apply to all of them.
impl FromStr for LagrangianSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut grid_size = None;
        let mut substeps = 1usize;
        let mut kinetic = 1.0;
        let mut eps = 0.0;
        let mut a1 = 0.0;
        let mut a2 = 0.0;
        for item in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidSpec(format!("expected key=value, got {item:?}")))?;
            let real = || {
                value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidSpec(format!("bad number for {key}: {value:?}")))
            };
            let count = || {
                value
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::InvalidSpec(format!("bad integer for {key}: {value:?}")))
            };
            match (kind, key.trim()) {
                (_, "N") => grid_size = Some(count()?),
                (_, "K") => substeps = count()?,
                (_, "kinetic") => kinetic = real()?,
                ("pendulum", "eps") => eps = real()?,
                ("twoharmonic", "a1") => a1 = real()?,
                ("twoharmonic", "a2") => a2 = real()?,
                _ => {
                    return Err(Error::InvalidSpec(format!(
                        "unknown parameter {key:?} for {kind:?}"
                    )))
                }
            }
        }
        let potential = match kind {
            "free" => PotentialTerm::Zero,
            "pendulum" => PotentialTerm::Cosine { amplitude: eps },
            "twoharmonic" => PotentialTerm::TwoHarmonic { a1, a2 },
            _ => return Err(Error::InvalidSpec(format!("unknown Lagrangian {kind:?}"))),
        };
        let spec = LagrangianSpec {
            grid_size: grid_size.ok_or_else(|| Error::InvalidSpec("missing N".into()))?,
            substeps,
            kinetic,
            potential,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Shortest signed offset from `from` to `to` on a cycle of `m` points, ties
/// going to the positive direction.
pub fn signed_offset(from: usize, to: usize, m: usize) -> i64 {
    let k = (to + m - from % m) % m;
    if 2 * k > m {
        k as i64 - m as i64
    } else {
        k as i64
    }
}

/// Discrete action kernel `A = B_1 ⊗ … ⊗ B_K`.
///
/// Each substep moves along the shortest arc between points of a refined
/// grid with `N·K` points (coarse point `i` sits at refined index `i·K`) and
/// costs `(1/K)·L(midpoint, K·Δ, (i - ½)/K)`. Intermediate positions on the
/// refined grid make straight paths representable, so the free particle
/// gives `Δ²/2` for every `K`.
pub fn action_kernel(spec: &LagrangianSpec) -> Result<CostKernel> {
    spec.validate()?;
    let n = spec.grid_size;
    let k = spec.substeps;
    let m = spec.refined_size();
    let w = spec.step_bandwidth();
    let offsets: Vec<i64> = if 2 * w + 1 >= m {
        let lo = -(((m - 1) / 2) as i64);
        (lo..lo + m as i64).collect()
    } else {
        (-(w as i64)..=w as i64).collect()
    };
    let step_table = |i: usize| -> Vec<f64> {
        let t = (i as f64 + 0.5) / k as f64;
        let mut table = Vec::with_capacity(m * offsets.len());
        for z in 0..m {
            for &off in &offsets {
                let delta = off as f64 / m as f64;
                let mid = (z as f64 / m as f64 + 0.5 * delta).rem_euclid(1.0);
                table.push(spec.lagrangian(mid, k as f64 * delta, t) / k as f64);
            }
        }
        table
    };
    let tables: Vec<Vec<f64>> = if spec.potential.is_time_dependent() {
        (0..k).into_par_iter().map(step_table).collect()
    } else {
        vec![step_table(0)]
    };
    let table_for = |i: usize| &tables[i.min(tables.len() - 1)];
    let width = offsets.len();

    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut dp = vec![f64::INFINITY; m];
            dp[x * k] = 0.0;
            let mut next = vec![f64::INFINITY; m];
            for i in 0..k {
                let table = table_for(i);
                next.fill(f64::INFINITY);
                for z in 0..m {
                    let base = dp[z];
                    if base == f64::INFINITY {
                        continue;
                    }
                    let costs = &table[z * width..(z + 1) * width];
                    for (&off, &c) in offsets.iter().zip(costs) {
                        let to = (z as i64 + off).rem_euclid(m as i64) as usize;
                        let v = base + c;
                        if v < next[to] {
                            next[to] = v;
                        }
                    }
                }
                std::mem::swap(&mut dp, &mut next);
            }
            (0..n).map(|y| dp[y * k]).collect()
        })
        .collect();
    let matrix = Matrix::from_rows(&rows)?;
    let labels = (0..n).map(|i| i.to_string()).collect();
    let coords = (0..n).map(|i| vec![i as f64 / n as f64]).collect();
    CostKernel::new(labels, Some(coords), matrix)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostFormat {
    Json,
    Csv,
}

impl CostFormat {
    /// `.csv` means CSV, anything else JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => CostFormat::Csv,
            _ => CostFormat::Json,
        }
    }
}

impl FromStr for CostFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(CostFormat::Json),
            "csv" => Ok(CostFormat::Csv),
            _ => Err(Error::InvalidSpec(format!("unknown format {s:?}"))),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CostFile {
    version: u32,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    coords: Option<Vec<Vec<f64>>>,
    matrix: Vec<Vec<f64>>,
}

const COST_FILE_VERSION: u32 = 1;

pub fn parse_cost(text: &str, format: CostFormat) -> Result<CostKernel> {
    match format {
        CostFormat::Json => parse_json(text),
        CostFormat::Csv => parse_csv(text),
    }
}

pub fn render_cost(kernel: &CostKernel, format: CostFormat) -> Result<String> {
    match format {
        CostFormat::Json => {
            let file = CostFile {
                version: COST_FILE_VERSION,
                labels: kernel.labels().to_vec(),
                coords: kernel.coords().map(<[_]>::to_vec),
                matrix: kernel.matrix().to_rows(),
            };
            let mut out = serde_json::to_string_pretty(&file)
                .map_err(|e| Error::InvalidSpec(e.to_string()))?;
            out.push('\n');
            Ok(out)
        }
        CostFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| Error::InvalidSpec(e.to_string());
            writer.write_record(kernel.labels()).map_err(csv_err)?;
            for row in kernel.matrix().to_rows() {
                writer
                    .write_record(row.iter().map(|v| format_real(*v)))
                    .map_err(csv_err)?;
            }
            let bytes = writer
                .into_inner()
                .map_err(|e| Error::InvalidSpec(e.to_string()))?;
            String::from_utf8(bytes).map_err(|e| Error::InvalidSpec(e.to_string()))
        }
    }
}

/// Shortest decimal that parses back to the same `f64`.
fn format_real(v: f64) -> String {
    format!("{v:?}")
}

pub fn load_cost(path: &Path, format: CostFormat) -> Result<CostKernel> {
    let text = fs::read_to_string(path)?;
    parse_cost(&text, format)
}

pub fn save_cost(kernel: &CostKernel, path: &Path, format: CostFormat) -> Result<()> {
    fs::write(path, render_cost(kernel, format)?)?;
    Ok(())
}

fn parse_json(text: &str) -> Result<CostKernel> {
    let file: CostFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if file.version != COST_FILE_VERSION {
        return Err(Error::InvalidSpec(format!(
            "unsupported cost file version {}",
            file.version
        )));
    }
    let matrix = Matrix::from_rows(&file.matrix)?;
    CostKernel::new(file.labels, file.coords, matrix)
}

fn parse_csv(text: &str) -> Result<CostKernel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut labels: Option<Vec<String>> = None;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                line,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let Some(labels) = &labels else {
            labels = Some(record.iter().map(str::to_owned).collect());
            continue;
        };
        if record.len() != labels.len() {
            return Err(Error::Parse {
                line,
                column: record.len().min(labels.len()) + 1,
                message: format!("expected {} fields, found {}", labels.len(), record.len()),
            });
        }
        let mut row = Vec::with_capacity(record.len());
        for (j, field) in record.iter().enumerate() {
            let bad = |what: &str| Error::Parse {
                line,
                column: j + 1,
                message: format!("{what} {field:?}"),
            };
            let v: f64 = field.parse().map_err(|_| bad("not a number:"))?;
            if !v.is_finite() {
                return Err(bad("non-finite entry"));
            }
            row.push(v);
        }
        rows.push(row);
    }
    let labels = labels.ok_or(Error::Empty)?;
    if rows.len() != labels.len() {
        return Err(Error::NotSquare {
            rows: rows.len(),
            cols: labels.len(),
        });
    }
    CostKernel::new(labels, None, Matrix::from_rows(&rows)?)
}
