//! Annihilating-filter recovery of Diracs from spherical-harmonic
//! coefficients.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::Dirac;
use crate::numerics::{
    polynomial_roots, smallest_right_singular_vector, solve_lower_triangular, solve_vandermonde, ComplexMatrix,
    NullSpaceGap, NumericsError, PolynomialCoeffs, VandermondeSolution,
};
use crate::sh::{normalize_phi, sin_colatitude, LegendrePolyTable, ShCoefficients, ShError};
use crate::tolerance::Tolerances;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Pipeline stage that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Input,
    ExtractDpm,
    NullSpace,
    Roots,
    Longitude,
    Amplitude,
    Colatitude,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Input => "input",
            Stage::ExtractDpm => "extract_dpm",
            Stage::NullSpace => "null_space",
            Stage::Roots => "roots",
            Stage::Longitude => "longitude",
            Stage::Amplitude => "amplitude",
            Stage::Colatitude => "colatitude",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RecoveryError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("bandlimit {bandlimit} is below the {required} needed for K={k}")]
    BandlimitTooSmall { bandlimit: usize, required: usize, k: usize },
    #[error("annihilating matrix has {rows} rows, at least {needed} are needed")]
    InsufficientRows { rows: usize, needed: usize },
    #[error("estimated node {0} is zero, so its longitude is undefined")]
    ZeroNode(usize),
    #[error("amplitude estimate {index} has magnitude {magnitude:.3e}, below the floor")]
    SmallAmplitude { index: usize, magnitude: f64 },
    #[error("legendre table: {0}")]
    Table(#[from] ShError),
    #[error("{stage}: {source}")]
    Numerics {
        stage: Stage,
        #[source]
        source: NumericsError,
    },
}

impl RecoveryError {
    pub fn stage(&self) -> Stage {
        match self {
            RecoveryError::InvalidInput(_) | RecoveryError::Table(_) => Stage::Input,
            RecoveryError::BandlimitTooSmall { .. } => Stage::ExtractDpm,
            RecoveryError::InsufficientRows { .. } => Stage::NullSpace,
            RecoveryError::ZeroNode(_) => Stage::Longitude,
            RecoveryError::SmallAmplitude { .. } => Stage::Colatitude,
            RecoveryError::Numerics { stage, .. } => *stage,
        }
    }

    /// The underlying numerical failure, if any.
    pub fn numerics(&self) -> Option<&NumericsError> {
        match self {
            RecoveryError::Numerics { source, .. } => Some(source),
            _ => None,
        }
    }

    fn at(stage: Stage) -> impl FnOnce(NumericsError) -> RecoveryError {
        move |source| RecoveryError::Numerics { stage, source }
    }
}

/// Bandlimit needed for `K` Diracs, next to two reference choices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BandlimitPlan {
    pub k: usize,
    /// Smallest `L` with `(L−K)(L−K+1) >= K`.
    pub l_required: usize,
    /// Rows of the annihilating matrix at `l_required`.
    pub max_rows: usize,
    /// `2K`.
    pub l_two_k: usize,
    /// Smallest `L` with `(L−K)² >= K`, i.e. `⌈K + √K⌉`.
    pub l_k_plus_sqrt_k: usize,
}

/// Number of annihilating equations available at bandlimit `L`.
pub fn annihilating_rows(bandlimit: usize, k: usize) -> usize {
    if bandlimit > k {
        let r = bandlimit - k;
        r * (r + 1)
    } else {
        0
    }
}

/// Bandlimit plan for `K` Diracs. `K = 0` yields the trivial plan `L = 1`.
pub fn required_bandlimit(k: usize) -> BandlimitPlan {
    let mut l_required = k + 1;
    while annihilating_rows(l_required, k) < k {
        l_required += 1;
    }
    let mut l_sqrt = k;
    while (l_sqrt - k) * (l_sqrt - k) < k {
        l_sqrt += 1;
    }
    BandlimitPlan {
        k,
        l_required,
        max_rows: annihilating_rows(l_required, k),
        l_two_k: 2 * k,
        l_k_plus_sqrt_k: l_sqrt,
    }
}

/// `d_pm = Σ_k α_k cos^p θ_k x_k^m` (with `conj(x_k)^{|m|}` for `m < 0`) for
/// `|m| < L`, `0 <= p < L − |m|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DpmSequences {
    bandlimit: usize,
    /// Indexed by `m + L − 1`, then `p`.
    columns: Vec<Vec<Complex64>>,
}

impl DpmSequences {
    pub fn from_fn(bandlimit: usize, mut f: impl FnMut(usize, i64) -> Complex64) -> Self {
        let span = bandlimit as i64 - 1;
        let columns = (-span..=span)
            .map(|m| (0..bandlimit - m.unsigned_abs() as usize).map(|p| f(p, m)).collect())
            .collect();
        Self { bandlimit, columns }
    }

    /// Direct evaluation from a Dirac set.
    pub fn from_diracs(diracs: &[Dirac], bandlimit: usize) -> Self {
        Self::from_fn(bandlimit, |p, m| {
            diracs
                .iter()
                .map(|d| {
                    let x = d.node();
                    let x = if m < 0 { x.conj() } else { x };
                    d.alpha * d.theta.cos().powi(p as i32) * x.powu(m.unsigned_abs() as u32)
                })
                .sum()
        })
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    /// Panics unless `|m| < L` and `p < L − |m|`.
    pub fn get(&self, p: usize, m: i64) -> Complex64 {
        self.columns[(m + self.bandlimit as i64 - 1) as usize][p]
    }

    /// All `d_pm` for one order `m`, indexed by `p`.
    pub fn order(&self, m: i64) -> &[Complex64] {
        &self.columns[(m + self.bandlimit as i64 - 1) as usize]
    }

    pub fn max_abs_diff(&self, other: &DpmSequences) -> f64 {
        assert_eq!(self.bandlimit, other.bandlimit, "bandlimit mismatch");
        self.columns
            .iter()
            .flatten()
            .zip(other.columns.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `f_lm = Σ_p c^p_{lm} d_pm`, the inverse of [`extract_dpm_with`].
    pub fn synthesize_coefficients(&self, table: &LegendrePolyTable) -> ShCoefficients {
        let bandlimit = self.bandlimit;
        let mut flm = ShCoefficients::zeros(bandlimit);
        for (l, m, _) in ShCoefficients::zeros(bandlimit).iter() {
            let value: Complex64 = (0..=l - m.unsigned_abs() as usize)
                .map(|p| self.get(p, m) * table.coeff(l, m, p))
                .sum();
            flm.set(l, m, value);
        }
        flm
    }
}

/// Solves the per-order triangular systems with a table of matching or larger
/// bandlimit.
pub fn extract_dpm_with(table: &LegendrePolyTable, flm: &ShCoefficients) -> Result<DpmSequences, RecoveryError> {
    let bandlimit = flm.bandlimit();
    if bandlimit == 0 {
        return Err(RecoveryError::InvalidInput("bandlimit must be at least 1".into()));
    }
    if table.bandlimit() < bandlimit {
        return Err(RecoveryError::InvalidInput(format!(
            "table bandlimit {} is below coefficient bandlimit {bandlimit}",
            table.bandlimit()
        )));
    }
    let span = bandlimit as i64 - 1;
    let mut columns = Vec::with_capacity(2 * bandlimit - 1);
    for m in -span..=span {
        let am = m.unsigned_abs() as usize;
        let n = bandlimit - am;
        let a = ComplexMatrix::from_fn(n, n, |i, p| {
            if p <= i {
                Complex64::new(table.coeff(am + i, m, p), 0.0)
            } else {
                ZERO
            }
        });
        let b: Vec<Complex64> = (0..n).map(|i| flm.get(am + i, m)).collect();
        columns.push(solve_lower_triangular(&a, &b).map_err(RecoveryError::at(Stage::ExtractDpm))?);
    }
    Ok(DpmSequences { bandlimit, columns })
}

/// [`extract_dpm_with`] after checking that the bandlimit suffices for `K`.
pub fn extract_dpm(flm: &ShCoefficients, k: usize) -> Result<DpmSequences, RecoveryError> {
    check_bandlimit(flm.bandlimit(), k)?;
    let table = LegendrePolyTable::new(flm.bandlimit())?;
    extract_dpm_with(&table, flm)
}

fn check_bandlimit(bandlimit: usize, k: usize) -> Result<(), RecoveryError> {
    if k == 0 {
        return Err(RecoveryError::InvalidInput("K must be at least 1".into()));
    }
    let required = required_bandlimit(k).l_required;
    if bandlimit < required {
        return Err(RecoveryError::BandlimitTooSmall { bandlimit, required, k });
    }
    Ok(())
}

/// Stacks every length-`(K+1)` window of the `d_pm` sequences. For each `p`
/// the rows are `[d_{p,s}, …, d_{p,s−K}]` for `s = L−1−p` down to `K`,
/// followed by the conjugated negative-order windows
/// `[conj d_{p,−s}, …, conj d_{p,−(s−K)}]`. Each row `r` satisfies
/// `Σ_n r_n v_n = 0` for the filter `v` with roots `x_k`.
pub fn build_annihilating_matrix(d: &DpmSequences, k: usize) -> Result<ComplexMatrix, RecoveryError> {
    if k == 0 {
        return Err(RecoveryError::InvalidInput("K must be at least 1".into()));
    }
    let bandlimit = d.bandlimit();
    let rows_total = annihilating_rows(bandlimit, k);
    if rows_total < k {
        return Err(RecoveryError::InsufficientRows {
            rows: rows_total,
            needed: k,
        });
    }
    let mut data = Vec::with_capacity(rows_total * (k + 1));
    for p in 0..bandlimit - k {
        let top = bandlimit - 1 - p;
        for s in (k..=top).rev() {
            data.extend((0..=k).map(|n| d.get(p, (s - n) as i64)));
        }
        for s in (k..=top).rev() {
            data.extend((0..=k).map(|n| d.get(p, -((s - n) as i64)).conj()));
        }
    }
    ComplexMatrix::from_row_major(rows_total, k + 1, data).map_err(RecoveryError::at(Stage::NullSpace))
}

/// Output of the filter-and-roots step.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEstimate {
    pub nodes: Vec<Complex64>,
    pub filter: Vec<Complex64>,
    pub gap: NullSpaceGap,
    /// `max_r |Σ_n Z_{rn} v_n|`.
    pub annihilation_residual: f64,
}

/// Null vector of `Z` and the roots of the corresponding filter.
pub fn estimate_xk(z: &ComplexMatrix, k: usize, tol: &Tolerances) -> Result<NodeEstimate, RecoveryError> {
    if z.cols() != k + 1 {
        return Err(RecoveryError::InvalidInput(format!(
            "annihilating matrix has {} columns, expected {}",
            z.cols(),
            k + 1
        )));
    }
    if z.rows() < k {
        return Err(RecoveryError::InsufficientRows {
            rows: z.rows(),
            needed: k,
        });
    }
    let (filter, gap) = smallest_right_singular_vector(z, tol).map_err(RecoveryError::at(Stage::NullSpace))?;
    let annihilation_residual = z.mul_vec(&filter).iter().map(|r| r.norm()).fold(0.0, f64::max);
    let poly = PolynomialCoeffs::new(filter.clone()).map_err(RecoveryError::at(Stage::Roots))?;
    let nodes = polynomial_roots(&poly, tol).map_err(RecoveryError::at(Stage::Roots))?;
    Ok(NodeEstimate {
        nodes,
        filter,
        gap,
        annihilation_residual,
    })
}

/// `φ̃_k = −arg(x̃_k)` wrapped into `[0, 2π)`.
pub fn recover_phi(nodes: &[Complex64]) -> Result<Vec<f64>, RecoveryError> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, x)| {
            if x.norm() == 0.0 {
                Err(RecoveryError::ZeroNode(i))
            } else {
                Ok(normalize_phi(-x.arg()))
            }
        })
        .collect()
}

/// Solves `Σ_k α_k x̃_k^m = d_{0,m}` for `m = 0..K−1`.
pub fn recover_alpha(
    nodes: &[Complex64],
    d: &DpmSequences,
    tol: &Tolerances,
) -> Result<VandermondeSolution, RecoveryError> {
    let rhs = rhs_for(d, 0, nodes.len())?;
    solve_vandermonde(nodes, &rhs, tol).map_err(RecoveryError::at(Stage::Amplitude))
}

fn rhs_for(d: &DpmSequences, p: usize, k: usize) -> Result<Vec<Complex64>, RecoveryError> {
    if k == 0 || p + k > d.bandlimit() {
        return Err(RecoveryError::InvalidInput(format!(
            "d_{p},m for m < {k} is not available at bandlimit {}",
            d.bandlimit()
        )));
    }
    Ok((0..k).map(|m| d.get(p, m as i64)).collect())
}

/// Colatitudes from `β_k = α_k cos θ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEstimate {
    pub theta: Vec<f64>,
    pub beta: VandermondeSolution,
    /// How many `Re(β/α)` fell outside `[−1, 1]` and were clamped.
    pub clamped: usize,
    /// `max_k |Im(β_k/α_k)|`.
    pub imag_residue: f64,
}

/// Solves `Σ_k β_k x̃_k^m = d_{1,m}`, then `θ̃_k = arccos(Re(β_k/α̃_k))`.
pub fn recover_theta(
    nodes: &[Complex64],
    alpha: &[Complex64],
    d: &DpmSequences,
    tol: &Tolerances,
) -> Result<ThetaEstimate, RecoveryError> {
    if alpha.len() != nodes.len() {
        return Err(RecoveryError::InvalidInput(format!(
            "{} amplitudes for {} nodes",
            alpha.len(),
            nodes.len()
        )));
    }
    let rhs = rhs_for(d, 1, nodes.len())?;
    let beta = solve_vandermonde(nodes, &rhs, tol).map_err(RecoveryError::at(Stage::Colatitude))?;
    let mut theta = Vec::with_capacity(nodes.len());
    let mut clamped = 0;
    let mut imag_residue = 0.0f64;
    for (index, (b, a)) in beta.solution.iter().zip(alpha).enumerate() {
        let magnitude = a.norm();
        if !(magnitude > tol.amplitude_floor) {
            return Err(RecoveryError::SmallAmplitude { index, magnitude });
        }
        let ratio = b / a;
        imag_residue = imag_residue.max(ratio.im.abs());
        if !(-1.0..=1.0).contains(&ratio.re) {
            clamped += 1;
        }
        theta.push(ratio.re.clamp(-1.0, 1.0).acos());
    }
    Ok(ThetaEstimate {
        theta,
        beta,
        clamped,
        imag_residue,
    })
}

/// Per-run numerical diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// `σ_min / σ_second_min` of the annihilating matrix.
    pub null_gap: f64,
    /// `max_r |(Z v)_r|`.
    pub annihilation_residual: f64,
    /// `‖Z‖_F`, the scale for `annihilation_residual`.
    pub matrix_norm: f64,
    pub vand_res_alpha: f64,
    pub vand_res_theta: f64,
    pub vand_cond: f64,
    pub arccos_clamped: usize,
    /// `max_k |Im(β̃_k/α̃_k)|`.
    pub theta_imag_residue: f64,
    /// `max_k | |x̃_k| − sin θ̃_k |`, consistency of the two colatitude routes.
    pub node_modulus_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    pub diracs: Vec<Dirac>,
    pub diagnostics: Diagnostics,
}

impl RecoveryResult {
    /// Diracs sorted by colatitude, then longitude.
    pub fn canonical_diracs(&self) -> Vec<Dirac> {
        let mut out = self.diracs.clone();
        out.sort_by(|a, b| a.theta.total_cmp(&b.theta).then(a.phi.total_cmp(&b.phi)));
        out
    }
}

/// Reusable recovery context holding the polynomial table.
#[derive(Debug, Clone)]
pub struct Recoverer {
    table: LegendrePolyTable,
    tol: Tolerances,
}

impl Recoverer {
    pub fn new(bandlimit: usize, tol: Tolerances) -> Result<Self, RecoveryError> {
        Ok(Self {
            table: LegendrePolyTable::new(bandlimit)?,
            tol,
        })
    }

    pub fn table(&self) -> &LegendrePolyTable {
        &self.table
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tol
    }

    pub fn recover(&self, flm: &ShCoefficients, k: usize) -> Result<RecoveryResult, RecoveryError> {
        check_bandlimit(flm.bandlimit(), k)?;
        if let Some((l, m, _)) = flm.iter().find(|(_, _, v)| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(RecoveryError::InvalidInput(format!("coefficient ({l}, {m}) is not finite")));
        }
        let tol = &self.tol;
        let d = extract_dpm_with(&self.table, flm)?;
        let z = build_annihilating_matrix(&d, k)?;
        let est = estimate_xk(&z, k, tol)?;
        let phi = recover_phi(&est.nodes)?;
        let alpha = recover_alpha(&est.nodes, &d, tol)?;
        let theta = recover_theta(&est.nodes, &alpha.solution, &d, tol)?;
        let diracs: Vec<Dirac> = (0..k)
            .map(|i| Dirac::new(theta.theta[i], phi[i], alpha.solution[i]))
            .collect();
        let node_modulus_mismatch = est
            .nodes
            .iter()
            .zip(&theta.theta)
            .map(|(x, t)| (x.norm() - sin_colatitude(*t)).abs())
            .fold(0.0, f64::max);
        if theta.clamped > 0 {
            log::warn!("{} colatitude ratio(s) outside [-1, 1] were clamped", theta.clamped);
        }
        Ok(RecoveryResult {
            diracs,
            diagnostics: Diagnostics {
                null_gap: est.gap.ratio(),
                annihilation_residual: est.annihilation_residual,
                matrix_norm: z.frobenius_norm(),
                vand_res_alpha: alpha.relative_residual,
                vand_res_theta: theta.beta.relative_residual,
                vand_cond: alpha.condition,
                arccos_clamped: theta.clamped,
                theta_imag_residue: theta.imag_residue,
                node_modulus_mismatch,
            },
        })
    }
}

/// Recovers `K` Diracs from `f_lm` with default tolerances.
pub fn recover(flm: &ShCoefficients, k: usize) -> Result<RecoveryResult, RecoveryError> {
    recover_with(flm, k, Tolerances::default())
}

pub fn recover_with(flm: &ShCoefficients, k: usize, tol: Tolerances) -> Result<RecoveryResult, RecoveryError> {
    check_bandlimit(flm.bandlimit(), k)?;
    Recoverer::new(flm.bandlimit(), tol)?.recover(flm, k)
}
