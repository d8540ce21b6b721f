//! Ground-truth Dirac ensembles, random instance generation and the exact
//! forward map to spherical-harmonic coefficients.

use std::f64::consts::{PI, TAU};
use std::ops::Deref;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sh::{great_circle_distance, normalize_phi, sin_colatitude, ylm_theta0_triangle, ShCoefficients, SphDirection};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("ensemble must contain at least one Dirac")]
    Empty,
    #[error("Dirac {index}: colatitude {theta} is not strictly inside (0, π)")]
    ColatitudeOutOfRange { index: usize, theta: f64 },
    #[error("Dirac {index} has a non-finite parameter")]
    NonFinite { index: usize },
    #[error("Diracs {0} and {1} share the node sin θ · e^(-iφ)")]
    CoincidentNodes(usize, usize),
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("could not place {k} Diracs within {attempts} draws")]
    GenerationFailed { k: usize, attempts: usize },
}

/// One weighted Dirac delta at `(θ, φ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dirac {
    pub theta: f64,
    pub phi: f64,
    pub alpha: Complex64,
}

impl Dirac {
    pub fn new(theta: f64, phi: f64, alpha: Complex64) -> Self {
        Self {
            theta,
            phi: normalize_phi(phi),
            alpha,
        }
    }

    /// `x = sin θ · e^{-iφ}`, the exponential node carried by this Dirac.
    pub fn node(&self) -> Complex64 {
        Complex64::from_polar(sin_colatitude(self.theta), -self.phi)
    }

    pub fn direction(&self) -> SphDirection {
        SphDirection::new(self.theta, self.phi).expect("Dirac colatitude within [0, π]")
    }

    fn is_finite(&self) -> bool {
        self.theta.is_finite() && self.phi.is_finite() && self.alpha.re.is_finite() && self.alpha.im.is_finite()
    }
}

/// A validated set of `K >= 1` Diracs with colatitudes in `(0, π)` and
/// pairwise distinct nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DiracEnsemble {
    diracs: Vec<Dirac>,
}

impl DiracEnsemble {
    pub fn new(diracs: Vec<Dirac>) -> Result<Self, ModelError> {
        if diracs.is_empty() {
            return Err(ModelError::Empty);
        }
        for (index, d) in diracs.iter().enumerate() {
            if !d.is_finite() {
                return Err(ModelError::NonFinite { index });
            }
            if !(d.theta > 0.0 && d.theta < PI) {
                return Err(ModelError::ColatitudeOutOfRange { index, theta: d.theta });
            }
        }
        let nodes: Vec<Complex64> = diracs.iter().map(Dirac::node).collect();
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                if nodes[i] == nodes[j] {
                    return Err(ModelError::CoincidentNodes(i, j));
                }
            }
        }
        Ok(Self { diracs })
    }

    pub fn diracs(&self) -> &[Dirac] {
        &self.diracs
    }

    pub fn into_inner(self) -> Vec<Dirac> {
        self.diracs
    }

    /// Smallest pairwise `|x_j − x_k|`; infinite for a single Dirac.
    pub fn min_node_distance(&self) -> f64 {
        min_pairwise(&self.diracs, |a, b| (a.node() - b.node()).norm())
    }

    /// Smallest pairwise great-circle distance; infinite for a single Dirac.
    pub fn min_separation(&self) -> f64 {
        min_pairwise(&self.diracs, |a, b| great_circle_distance(a.theta, a.phi, b.theta, b.phi))
    }
}

impl Deref for DiracEnsemble {
    type Target = [Dirac];

    fn deref(&self) -> &[Dirac] {
        &self.diracs
    }
}

fn min_pairwise(diracs: &[Dirac], dist: impl Fn(&Dirac, &Dirac) -> f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..diracs.len() {
        for j in (i + 1)..diracs.len() {
            best = best.min(dist(&diracs[i], &diracs[j]));
        }
    }
    best
}

/// How Dirac locations are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocationSampling {
    /// `cos θ` uniform in `(-1, 1)`, `φ` uniform: uniform area density.
    #[default]
    UniformSphere,
    /// `θ` uniform in `(0, π)`, `φ` uniform.
    UniformColatitude,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceGenConfig {
    pub k: usize,
    /// Minimum pairwise great-circle distance; `None` means `π / (3K)`.
    pub min_separation: Option<f64>,
    /// Interval for the real and imaginary parts of each amplitude.
    pub amplitude_range: (f64, f64),
    pub seed: u64,
    pub sampling: LocationSampling,
    /// Minimum pairwise `|x_j − x_k|`.
    pub min_node_distance: f64,
    /// Optional lower bound on `|α_k|`.
    pub min_amplitude: Option<f64>,
    /// Total number of location draws before giving up.
    pub max_attempts: usize,
}

impl InstanceGenConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            min_separation: None,
            amplitude_range: (-1.0, 1.0),
            seed,
            sampling: LocationSampling::UniformSphere,
            min_node_distance: 1e-6,
            min_amplitude: None,
            max_attempts: 100_000,
        }
    }

    pub fn separation(&self) -> f64 {
        self.min_separation.unwrap_or(PI / (3.0 * self.k as f64))
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: &str| Err(ModelError::InvalidConfig(msg.to_string()));
        if self.k == 0 {
            return bad("K must be at least 1");
        }
        let sep = self.separation();
        if !(sep.is_finite() && sep > 0.0) {
            return bad("minimum separation must be positive");
        }
        let (lo, hi) = self.amplitude_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad("amplitude range must be a finite interval");
        }
        if !(self.min_node_distance.is_finite() && self.min_node_distance >= 0.0) {
            return bad("minimum node distance must be non-negative");
        }
        if let Some(a) = self.min_amplitude {
            let reach = lo.abs().max(hi.abs()) * std::f64::consts::SQRT_2;
            if !(a.is_finite() && a >= 0.0 && a < reach) {
                return bad("amplitude floor must be non-negative and attainable");
            }
        }
        if self.max_attempts == 0 {
            return bad("attempt budget must be positive");
        }
        Ok(())
    }
}

/// Draws a random ensemble by sequential rejection sampling; deterministic
/// for a given configuration.
pub fn generate_instance(cfg: &InstanceGenConfig) -> Result<DiracEnsemble, ModelError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let separation = cfg.separation();
    let (lo, hi) = cfg.amplitude_range;
    let mut diracs: Vec<Dirac> = Vec::with_capacity(cfg.k);
    let mut attempts = 0usize;
    while diracs.len() < cfg.k {
        attempts += 1;
        if attempts > cfg.max_attempts {
            return Err(ModelError::GenerationFailed {
                k: cfg.k,
                attempts: cfg.max_attempts,
            });
        }
        let theta = match cfg.sampling {
            LocationSampling::UniformSphere => rng.random_range(-1.0f64..1.0).acos(),
            LocationSampling::UniformColatitude => rng.random_range(0.0..PI),
        };
        let phi = rng.random_range(0.0..TAU);
        let alpha = Complex64::new(rng.random_range(lo..=hi), rng.random_range(lo..=hi));
        if !(theta > 0.0 && theta < PI) {
            continue;
        }
        if cfg.min_amplitude.is_some_and(|floor| alpha.norm() < floor) {
            continue;
        }
        let candidate = Dirac::new(theta, phi, alpha);
        let node = candidate.node();
        let clear = diracs.iter().all(|d| {
            great_circle_distance(d.theta, d.phi, theta, candidate.phi) >= separation
                && (d.node() - node).norm() >= cfg.min_node_distance
        });
        if clear {
            diracs.push(candidate);
        }
    }
    DiracEnsemble::new(diracs)
}

/// `f_lm = Σ_k α_k · conj(Y_l^m(θ_k, φ_k))` for `l < bandlimit`.
pub fn forward_sh_coefficients(diracs: &[Dirac], bandlimit: usize) -> ShCoefficients {
    let mut flm = ShCoefficients::zeros(bandlimit);
    for d in diracs {
        let y = ylm_theta0_triangle(bandlimit, d.theta);
        for m in 0..bandlimit {
            let mi = m as i64;
            // conj(Y_l^m) = Y_l^m(θ,0) e^{-imφ};  conj(Y_l^{-m}) = (-1)^m Y_l^m(θ,0) e^{imφ}
            let pos = d.alpha * Complex64::from_polar(1.0, -(m as f64) * d.phi);
            let neg = d.alpha * Complex64::from_polar(if m % 2 == 0 { 1.0 } else { -1.0 }, m as f64 * d.phi);
            for l in m..bandlimit {
                let base = y[crate::sh::triangle_index(l, m)];
                flm.set(l, mi, flm.get(l, mi) + pos * base);
                if m > 0 {
                    flm.set(l, -mi, flm.get(l, -mi) + neg * base);
                }
            }
        }
    }
    flm
}

/// The signal bandlimited at `bandlimit`, evaluated at `dir`.
pub fn eval_bandlimited(diracs: &[Dirac], bandlimit: usize, dir: SphDirection) -> Complex64 {
    forward_sh_coefficients(diracs, bandlimit).synthesize(dir)
}

/// Samples of the bandlimited signal on an equiangular grid:
/// `θ_i = (i + ½) π / n_theta`, `φ_j = 2π j / n_phi`.
pub fn render_grid(diracs: &[Dirac], bandlimit: usize, n_theta: usize, n_phi: usize) -> Vec<(f64, f64, Complex64)> {
    let flm = forward_sh_coefficients(diracs, bandlimit);
    let mut out = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = (i as f64 + 0.5) * PI / n_theta as f64;
        for j in 0..n_phi {
            let phi = TAU * j as f64 / n_phi as f64;
            let dir = SphDirection::new(theta, phi).expect("grid point on the sphere");
            out.push((theta, phi, flm.synthesize(dir)));
        }
    }
    out
}
