use std::fs;

use serde::Serialize;
use sha2::{Digest, Sha256};
use tropikam::ingest::{action_kernel, parse_cost, render_cost, CostFormat, LagrangianSpec};
use tropikam::{CostKernel, Measure};

use crate::{Cli, Failure};

#[derive(Clone, Debug, Serialize)]
pub struct InputInfo {
    /// File path or Lagrangian spec.
    pub source: String,
    /// SHA-256 of the file bytes, or of the canonical JSON of a generated
    /// kernel.
    pub sha256: String,
    pub points: usize,
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn input_error(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

pub fn load(cli: &Cli) -> Result<(CostKernel, InputInfo), Failure> {
    match (&cli.lagrangian, &cli.input) {
        (Some(_), Some(_)) => Err(Failure::Input(
            "--lagrangian and --input are mutually exclusive".into(),
        )),
        (Some(spec), None) => {
            let spec: LagrangianSpec = spec.parse().map_err(input_error)?;
            let kernel = action_kernel(&spec).map_err(input_error)?;
            let canonical = render_cost(&kernel, CostFormat::Json).map_err(input_error)?;
            let info = InputInfo {
                source: spec.to_string(),
                sha256: digest(canonical.as_bytes()),
                points: kernel.size(),
            };
            Ok((kernel, info))
        }
        (None, Some(path)) => {
            let bytes =
                fs::read(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let text = String::from_utf8(bytes.clone())
                .map_err(|_| Failure::Input(format!("{}: not valid UTF-8", path.display())))?;
            let format = cli.format.unwrap_or_else(|| CostFormat::from_path(path));
            let kernel = parse_cost(&text, format)
                .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            let info = InputInfo {
                source: path.display().to_string(),
                sha256: digest(&bytes),
                points: kernel.size(),
            };
            Ok((kernel, info))
        }
        (None, None) => Err(Failure::Input(
            "one of --input or --lagrangian is required".into(),
        )),
    }
}

/// `uniform`, `dirac:IDX` or a JSON array of weights.
pub fn parse_measure(spec: &str, n: usize) -> Result<Measure, Failure> {
    let spec = spec.trim();
    if spec == "uniform" {
        return Ok(Measure::uniform(n));
    }
    if let Some(idx) = spec.strip_prefix("dirac:") {
        let x: usize = idx
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("bad point index in {spec:?}")))?;
        if x >= n {
            return Err(Failure::Input(format!(
                "point {x} out of range for {n} points"
            )));
        }
        return Ok(Measure::dirac(n, x));
    }
    let weights: Vec<f64> = serde_json::from_str(spec)
        .map_err(|e| Failure::Input(format!("bad measure {spec:?}: {e}")))?;
    if weights.len() != n {
        return Err(Failure::Input(format!(
            "measure has {} weights, kernel has {n} points",
            weights.len()
        )));
    }
    Measure::new(weights, 1e-9).map_err(input_error)
}
