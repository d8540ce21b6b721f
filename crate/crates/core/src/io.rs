//! JSON formats for instances, coefficients, recovery results and experiment
//! configurations, plus small text parsers used by the command line.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::experiment::ExperimentConfig;
use crate::model::Dirac;
use crate::recovery::{Diagnostics, RecoveryResult};
use crate::sh::ShCoefficients;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid content: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn invalid<T>(msg: impl Into<String>) -> Result<T, IoError> {
    Err(IoError::Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiracRecord {
    pub theta: f64,
    pub phi: f64,
    pub alpha_re: f64,
    pub alpha_im: f64,
}

impl From<&Dirac> for DiracRecord {
    fn from(d: &Dirac) -> Self {
        Self {
            theta: d.theta,
            phi: d.phi,
            alpha_re: d.alpha.re,
            alpha_im: d.alpha.im,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub diracs: Vec<DiracRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientRecord {
    pub l: usize,
    pub m: i64,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    #[serde(rename = "L")]
    pub bandlimit: usize,
    pub flm: Vec<CoefficientRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultFile {
    #[serde(rename = "K")]
    pub k: usize,
    pub diracs: Vec<DiracRecord>,
    pub diagnostics: Diagnostics,
}

/// Parses an instance file. Each Dirac needs finite parameters and a
/// colatitude in `[0, π]`; node distinctness is left to the caller.
pub fn parse_instance(text: &str) -> Result<Vec<Dirac>, IoError> {
    let file: InstanceFile = serde_json::from_str(text)?;
    if file.k != file.diracs.len() {
        return invalid(format!("K = {} but {} Diracs listed", file.k, file.diracs.len()));
    }
    if file.k == 0 {
        return invalid("K must be at least 1");
    }
    file.diracs
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let finite = [r.theta, r.phi, r.alpha_re, r.alpha_im].iter().all(|v| v.is_finite());
            if !finite {
                return invalid(format!("Dirac {i} has a non-finite parameter"));
            }
            if !(0.0..=std::f64::consts::PI).contains(&r.theta) {
                return invalid(format!("Dirac {i}: colatitude {} outside [0, π]", r.theta));
            }
            Ok(Dirac::new(r.theta, r.phi, Complex64::new(r.alpha_re, r.alpha_im)))
        })
        .collect()
}

pub fn instance_to_json(diracs: &[Dirac]) -> String {
    let file = InstanceFile {
        k: diracs.len(),
        diracs: diracs.iter().map(DiracRecord::from).collect(),
    };
    to_pretty(&file)
}

/// Parses a coefficient file; every `(l, m)` with `l < L` must appear exactly
/// once.
pub fn parse_coefficients(text: &str) -> Result<ShCoefficients, IoError> {
    let file: CoefficientFile = serde_json::from_str(text)?;
    let bandlimit = file.bandlimit;
    if bandlimit == 0 {
        return invalid("L must be at least 1");
    }
    let expected = bandlimit.checked_mul(bandlimit).filter(|&n| n <= 1 << 24);
    if expected != Some(file.flm.len()) {
        return invalid(format!(
            "L = {bandlimit} requires L² coefficients, found {}",
            file.flm.len()
        ));
    }
    let mut flm = ShCoefficients::zeros(bandlimit);
    let mut seen = vec![false; file.flm.len()];
    for r in &file.flm {
        if r.l >= bandlimit || r.m.unsigned_abs() as usize > r.l {
            return invalid(format!("index (l={}, m={}) outside the bandlimit", r.l, r.m));
        }
        if !(r.re.is_finite() && r.im.is_finite()) {
            return invalid(format!("coefficient (l={}, m={}) is not finite", r.l, r.m));
        }
        let slot = (r.l * r.l) as i64 + r.l as i64 + r.m;
        let slot = slot as usize;
        if std::mem::replace(&mut seen[slot], true) {
            return invalid(format!("coefficient (l={}, m={}) listed twice", r.l, r.m));
        }
        flm.set(r.l, r.m, Complex64::new(r.re, r.im));
    }
    Ok(flm)
}

pub fn coefficients_to_json(flm: &ShCoefficients) -> String {
    let file = CoefficientFile {
        bandlimit: flm.bandlimit(),
        flm: flm
            .iter()
            .map(|(l, m, v)| CoefficientRecord { l, m, re: v.re, im: v.im })
            .collect(),
    };
    to_pretty(&file)
}

/// Result file with Diracs sorted by colatitude, then longitude.
pub fn result_to_json(result: &RecoveryResult) -> String {
    let diracs = result.canonical_diracs();
    let file = ResultFile {
        k: diracs.len(),
        diracs: diracs.iter().map(DiracRecord::from).collect(),
        diagnostics: result.diagnostics,
    };
    to_pretty(&file)
}

pub fn parse_result(text: &str) -> Result<RecoveryResult, IoError> {
    let file: ResultFile = serde_json::from_str(text)?;
    if file.k != file.diracs.len() {
        return invalid(format!("K = {} but {} Diracs listed", file.k, file.diracs.len()));
    }
    Ok(RecoveryResult {
        diracs: file
            .diracs
            .iter()
            .map(|r| Dirac::new(r.theta, r.phi, Complex64::new(r.alpha_re, r.alpha_im)))
            .collect(),
        diagnostics: file.diagnostics,
    })
}

pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig, IoError> {
    let cfg: ExperimentConfig = serde_json::from_str(text)?;
    cfg.validate().map_err(|e| IoError::Invalid(e.to_string()))?;
    Ok(cfg)
}

/// Parses a list of `K` values: comma-separated items, each either `n`,
/// `a-b` or `a-b:step` (inclusive ranges).
pub fn parse_k_list(text: &str) -> Result<Vec<usize>, IoError> {
    const MAX_ITEMS: usize = 1 << 16;
    let mut out = Vec::new();
    for item in text.split(',') {
        let item = item.trim();
        if item.is_empty() {
            return invalid(format!("empty item in K list `{text}`"));
        }
        let number = |s: &str| -> Result<usize, IoError> {
            match s.trim().parse::<usize>() {
                Ok(n) if n >= 1 => Ok(n),
                _ => invalid(format!("`{s}` is not a positive integer")),
            }
        };
        let (range, step) = match item.split_once(':') {
            Some((r, s)) => (r, number(s)?),
            None => (item, 1),
        };
        match range.split_once('-') {
            Some((a, b)) => {
                let (a, b) = (number(a)?, number(b)?);
                if a > b {
                    return invalid(format!("descending range `{item}`"));
                }
                if (b - a) / step + out.len() >= MAX_ITEMS {
                    return invalid("K list too long");
                }
                out.extend((a..=b).step_by(step));
            }
            None if step == 1 || !item.contains(':') => out.push(number(range)?),
            None => return invalid(format!("step without range in `{item}`")),
        }
        if out.len() > MAX_ITEMS {
            return invalid("K list too long");
        }
    }
    Ok(out)
}

fn to_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}
