//! Monte-Carlo accuracy sweep: random instances, exact coefficients,
//! recovery, matching and mean-squared errors per `K`.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{forward_sh_coefficients, generate_instance, Dirac, InstanceGenConfig, LocationSampling};
use crate::recovery::{required_bandlimit, Recoverer};
use crate::sh::great_circle_distance;
use crate::tolerance::Tolerances;

/// Largest bandlimit an experiment may request.
pub const MAX_EXPERIMENT_BANDLIMIT: usize = 512;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("{truth} true Diracs but {estimated} estimates")]
    CountMismatch { truth: usize, estimated: usize },
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How the bandlimit is chosen for each `K`.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LPolicy {
    /// Smallest bandlimit with enough annihilating equations.
    #[default]
    Minimal,
    /// One bandlimit for every `K`.
    Fixed(usize),
    /// Explicit bandlimit per `K`; missing entries fall back to the formula.
    PerK(BTreeMap<usize, usize>),
}

impl LPolicy {
    pub fn bandlimit_for(&self, k: usize) -> usize {
        match self {
            LPolicy::Minimal => required_bandlimit(k).l_required,
            LPolicy::Fixed(l) => *l,
            LPolicy::PerK(map) => map.get(&k).copied().unwrap_or_else(|| required_bandlimit(k).l_required),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k_values: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub l_policy: LPolicy,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    /// `key=value` tolerance overrides.
    pub tolerance: Vec<String>,
    pub sampling: LocationSampling,
    pub min_amplitude: Option<f64>,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k_values: (2..=20).step_by(2).collect(),
            trials: 1000,
            seed: 0,
            l_policy: LPolicy::Minimal,
            workers: None,
            tolerance: Vec::new(),
            sampling: LocationSampling::UniformSphere,
            min_amplitude: None,
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if self.k_values.is_empty() {
            return bad("K list is empty".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        for &k in &self.k_values {
            if k == 0 {
                return bad("every K must be at least 1".into());
            }
            let l = self.l_policy.bandlimit_for(k);
            let required = required_bandlimit(k).l_required;
            if l < required {
                return bad(format!("bandlimit {l} is below the {required} needed for K={k}"));
            }
            if l > MAX_EXPERIMENT_BANDLIMIT {
                return bad(format!("bandlimit {l} exceeds {MAX_EXPERIMENT_BANDLIMIT}"));
            }
        }
        self.tolerances()?;
        Ok(())
    }

    /// Environment-free defaults with this config's overrides applied.
    pub fn tolerances(&self) -> Result<Tolerances, ExperimentError> {
        let mut tol = Tolerances::default();
        for o in &self.tolerance {
            tol.apply_override(o).map_err(|e| ExperimentError::Config(e.to_string()))?;
        }
        Ok(tol)
    }
}

/// Mean-squared errors of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorTriple {
    pub e_theta: f64,
    pub e_phi: f64,
    pub e_alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRecord {
    pub k: usize,
    pub l: usize,
    pub e_theta: f64,
    pub e_phi: f64,
    pub e_alpha: f64,
    pub trials_succeeded: usize,
    pub trials_failed: usize,
}

/// Assignment `perm` with `est[perm[i]]` matched to `truth[i]`, minimizing
/// the total great-circle distance. Among optimal assignments the
/// lexicographically smallest `perm` is returned.
pub fn match_diracs(truth: &[Dirac], est: &[Dirac]) -> Result<Vec<usize>, ExperimentError> {
    if truth.len() != est.len() {
        return Err(ExperimentError::CountMismatch {
            truth: truth.len(),
            estimated: est.len(),
        });
    }
    let cost: Vec<Vec<f64>> = truth
        .iter()
        .map(|t| {
            est.iter()
                .map(|e| {
                    let d = great_circle_distance(t.theta, t.phi, e.theta, e.phi);
                    if d.is_finite() {
                        d
                    } else {
                        1e6
                    }
                })
                .collect()
        })
        .collect();
    Ok(min_cost_assignment(&cost))
}

/// Hungarian algorithm with potentials, followed by a lexicographic pass over
/// the edges that are tight under the optimal duals.
fn min_cost_assignment(a: &[Vec<f64>]) -> Vec<usize> {
    let n = a.len();
    if n == 0 {
        return Vec::new();
    }
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = a[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let scale = a.iter().flatten().fold(1.0f64, |m, &x| m.max(x.abs()));
    let slack = 1e-12 * scale * n as f64;
    let tight: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| a[i][j] - u[i + 1] - v[j + 1] <= slack).collect())
        .collect();
    let mut perm = vec![usize::MAX; n];
    let mut col_used = vec![false; n];
    for i in 0..n {
        let candidates: Vec<usize> = (0..n).filter(|&j| tight[i][j] && !col_used[j]).collect();
        let pick = if candidates.len() == 1 {
            candidates[0]
        } else {
            *candidates
                .iter()
                .find(|&&j| {
                    col_used[j] = true;
                    let ok = has_perfect_matching(&tight, i + 1, &col_used);
                    col_used[j] = false;
                    ok
                })
                .expect("optimal duals admit a tight perfect matching")
        };
        perm[i] = pick;
        col_used[pick] = true;
    }
    perm
}

/// Whether rows `from..n` can be matched to the unused columns along tight
/// edges (Kuhn's augmenting paths).
fn has_perfect_matching(tight: &[Vec<bool>], from: usize, col_used: &[bool]) -> bool {
    let n = tight.len();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(
        row: usize,
        tight: &[Vec<bool>],
        col_used: &[bool],
        seen: &mut [bool],
        owner: &mut [Option<usize>],
    ) -> bool {
        for j in 0..tight.len() {
            if tight[row][j] && !col_used[j] && !seen[j] {
                seen[j] = true;
                if owner[j].is_none_or(|r| augment(r, tight, col_used, seen, owner)) {
                    owner[j] = Some(row);
                    return true;
                }
            }
        }
        false
    }
    (from..n).all(|row| {
        let mut seen = vec![false; n];
        augment(row, tight, col_used, &mut seen, &mut owner)
    })
}

/// Shortest circular distance between two longitudes.
pub fn circular_difference(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// `E = (1/K) Σ_k |est_{perm[k]} − truth_k|²` per parameter.
pub fn compute_errors(truth: &[Dirac], est: &[Dirac], perm: &[usize]) -> ErrorTriple {
    let k = truth.len() as f64;
    let mut out = ErrorTriple::default();
    for (t, &j) in truth.iter().zip(perm) {
        let e = &est[j];
        out.e_theta += (e.theta - t.theta).powi(2);
        out.e_phi += circular_difference(e.phi, t.phi).powi(2);
        out.e_alpha += (e.alpha - t.alpha).norm_sqr();
    }
    out.e_theta /= k;
    out.e_phi /= k;
    out.e_alpha /= k;
    out
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` for `K`, independent of scheduling.
pub fn trial_seed(seed: u64, k: usize, trial: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ k as u64) ^ trial as u64)
}

/// Sum by recursive halving.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// Averages successful trials in index order; failures are counted.
pub fn aggregate(k: usize, l: usize, outcomes: &[Result<ErrorTriple, String>]) -> ErrorRecord {
    let ok: Vec<ErrorTriple> = outcomes.iter().filter_map(|o| o.as_ref().ok().copied()).collect();
    let n = ok.len() as f64;
    let mean = |f: fn(&ErrorTriple) -> f64| {
        let xs: Vec<f64> = ok.iter().map(f).collect();
        pairwise_sum(&xs) / n
    };
    ErrorRecord {
        k,
        l,
        e_theta: mean(|e| e.e_theta),
        e_phi: mean(|e| e.e_phi),
        e_alpha: mean(|e| e.e_alpha),
        trials_succeeded: ok.len(),
        trials_failed: outcomes.len() - ok.len(),
    }
}

fn run_trial(cfg: &ExperimentConfig, recoverer: &Recoverer, k: usize, l: usize, trial: usize) -> Result<ErrorTriple, String> {
    let mut gen = InstanceGenConfig::new(k, trial_seed(cfg.seed, k, trial));
    gen.sampling = cfg.sampling;
    gen.min_amplitude = cfg.min_amplitude;
    let truth = generate_instance(&gen).map_err(|e| e.to_string())?;
    let flm = forward_sh_coefficients(&truth, l);
    let result = recoverer.recover(&flm, k).map_err(|e| format!("[{}] {e}", e.stage()))?;
    let perm = match_diracs(&truth, &result.diracs).map_err(|e| e.to_string())?;
    Ok(compute_errors(&truth, &result.diracs, &perm))
}

/// Runs every trial for every `K`; writes the CSV when `output_path` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ErrorRecord>, ExperimentError> {
    cfg.validate()?;
    let tol = cfg.tolerances()?;
    let pool = match cfg.workers {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| ExperimentError::Pool(e.to_string()))?,
        ),
        None => None,
    };
    let mut records = Vec::with_capacity(cfg.k_values.len());
    for &k in &cfg.k_values {
        let l = cfg.l_policy.bandlimit_for(k);
        let recoverer = Recoverer::new(l, tol).map_err(|e| ExperimentError::Config(e.to_string()))?;
        let work = || {
            (0..cfg.trials)
                .into_par_iter()
                .map(|t| run_trial(cfg, &recoverer, k, l, t))
                .collect::<Vec<_>>()
        };
        let outcomes = match &pool {
            Some(p) => p.install(work),
            None => work(),
        };
        for (t, o) in outcomes.iter().enumerate() {
            if let Err(msg) = o {
                log::warn!("K={k} trial {t} failed: {msg}");
            }
        }
        let record = aggregate(k, l, &outcomes);
        log::info!(
            "K={k} L={l}: E_theta={:.3e} E_phi={:.3e} E_alpha={:.3e} ({} ok, {} failed)",
            record.e_theta,
            record.e_phi,
            record.e_alpha,
            record.trials_succeeded,
            record.trials_failed
        );
        records.push(record);
    }
    if let Some(path) = &cfg.output_path {
        std::fs::write(path, records_to_csv(&records))?;
    }
    Ok(records)
}

pub const CSV_HEADER: &str = "K,L,E_theta,E_phi,E_alpha,trials_succeeded";

/// CSV with floats in scientific notation, 17 significant digits.
pub fn records_to_csv(records: &[ErrorRecord]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{:.16e},{:.16e},{:.16e},{}\n",
            r.k, r.l, r.e_theta, r.e_phi, r.e_alpha, r.trials_succeeded
        ));
    }
    out
}
