//! Spherical harmonics, associated Legendre functions and the exact
//! `cos θ`-polynomial tables used to unfold harmonic coefficients.
//!
//! Conventions: orthonormal harmonics with the Condon–Shortley phase,
//!
//! ```text
//! Y_l^m(θ, φ) = sqrt((2l+1)/4π · (l-m)!/(l+m)!) · P_l^m(cos θ) · e^{imφ}
//! P_l^m(ν)    = (-1)^m (1-ν²)^{m/2} d^m/dν^m P_l(ν)
//! P_l^{-m}    = (-1)^m (l-m)!/(l+m)! · P_l^m
//! ```

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

/// Largest bandlimit for which the monomial tables are considered accurate
/// in double precision.
pub const PRECISION_CAP: usize = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShError {
    #[error("argument {0} is outside [-1, 1]")]
    ArgumentOutOfRange(f64),
    #[error("invalid degree/order pair (l={l}, m={m})")]
    InvalidOrder { l: usize, m: i64 },
    #[error("bandlimit must be at least 1")]
    ZeroBandlimit,
    #[error("colatitude {0} is outside [0, π]")]
    ColatitudeOutOfRange(f64),
    #[error("longitude {0} is not finite")]
    NonFiniteLongitude(f64),
    #[error("expected {expected} coefficients for bandlimit {bandlimit}, got {got}")]
    CoefficientCount {
        bandlimit: usize,
        expected: usize,
        got: usize,
    },
    #[error("coefficient (l={l}, m={m}) is not finite")]
    NonFiniteCoefficient { l: usize, m: i64 },
}

/// Wraps a longitude into `[0, 2π)`.
pub fn normalize_phi(phi: f64) -> f64 {
    let wrapped = phi.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped + 0.0
    }
}

/// `sin θ` with the poles mapped to an exact zero.
pub(crate) fn sin_colatitude(theta: f64) -> f64 {
    if theta == 0.0 || theta == PI {
        0.0
    } else {
        theta.sin()
    }
}

/// A point on the unit sphere given by colatitude and longitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphDirection {
    theta: f64,
    phi: f64,
}

impl SphDirection {
    pub fn new(theta: f64, phi: f64) -> Result<Self, ShError> {
        if !(0.0..=PI).contains(&theta) {
            return Err(ShError::ColatitudeOutOfRange(theta));
        }
        if !phi.is_finite() {
            return Err(ShError::NonFiniteLongitude(phi));
        }
        Ok(Self {
            theta,
            phi: normalize_phi(phi),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let s = sin_colatitude(self.theta);
        [s * self.phi.cos(), s * self.phi.sin(), self.theta.cos()]
    }

    /// Great-circle distance in radians.
    pub fn distance(&self, other: &SphDirection) -> f64 {
        great_circle_distance(self.theta, self.phi, other.theta, other.phi)
    }
}

/// Great-circle distance between `(θ1, φ1)` and `(θ2, φ2)`.
///
/// Evaluated as `atan2(|u×v|, u·v)`, which stays accurate for nearly
/// coincident and nearly antipodal points where `acos(u·v)` does not.
pub fn great_circle_distance(theta1: f64, phi1: f64, theta2: f64, phi2: f64) -> f64 {
    let (s1, c1) = (sin_colatitude(theta1), theta1.cos());
    let (s2, c2) = (sin_colatitude(theta2), theta2.cos());
    let u = [s1 * phi1.cos(), s1 * phi1.sin(), c1];
    let v = [s2 * phi2.cos(), s2 * phi2.sin(), c2];
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let sin_d = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
    let cos_d = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
    sin_d.atan2(cos_d)
}

fn ln_factorial(n: usize) -> f64 {
    libm::lgamma(n as f64 + 1.0)
}

/// `ln sqrt((2l+1)/4π · (l-m)!/(l+m)!)` for `0 <= m <= l`.
fn ln_normalization(l: usize, m: usize) -> f64 {
    0.5 * (((2 * l + 1) as f64 / (4.0 * PI)).ln() + ln_factorial(l - m) - ln_factorial(l + m))
}

fn check_order(l: usize, m: i64) -> Result<usize, ShError> {
    let abs_m = m.unsigned_abs() as usize;
    if abs_m > l {
        return Err(ShError::InvalidOrder { l, m });
    }
    Ok(abs_m)
}

/// Unnormalised `P_l^m` for `m >= 0` from `(cos θ, sin θ)` by upward
/// recurrence in `l`.
fn legendre_cs(l: usize, m: usize, cos_t: f64, sin_t: f64) -> f64 {
    let mut pmm = 1.0;
    let mut odd = 1.0;
    for _ in 0..m {
        pmm *= -odd * sin_t;
        odd += 2.0;
    }
    if l == m {
        return pmm;
    }
    let mut pm1 = cos_t * (2 * m + 1) as f64 * pmm;
    if l == m + 1 {
        return pm1;
    }
    let mut pm2 = pmm;
    for ll in (m + 2)..=l {
        let next = ((2 * ll - 1) as f64 * cos_t * pm1 - (ll + m - 1) as f64 * pm2) / (ll - m) as f64;
        pm2 = pm1;
        pm1 = next;
    }
    pm1
}

/// Associated Legendre function `P_l^m(ν)` including the Condon–Shortley
/// phase. Negative orders follow the `P_l^{-m}` identity.
pub fn eval_associated_legendre(l: usize, m: i64, nu: f64) -> Result<f64, ShError> {
    if !(-1.0..=1.0).contains(&nu) {
        return Err(ShError::ArgumentOutOfRange(nu));
    }
    let abs_m = check_order(l, m)?;
    let sin_t = ((1.0 - nu) * (1.0 + nu)).sqrt();
    let p = legendre_cs(l, abs_m, nu, sin_t);
    if m >= 0 {
        Ok(p)
    } else {
        let sign = if abs_m % 2 == 0 { 1.0 } else { -1.0 };
        let ratio = (ln_factorial(l - abs_m) - ln_factorial(l + abs_m)).exp();
        Ok(sign * ratio * p)
    }
}

/// Orthonormal `Y_l^m(θ, 0)` for `m >= 0`, for a single degree.
///
/// Uses the normalised three-term recurrence seeded in the log domain so that
/// no factorial is ever formed explicitly.
fn ylm_theta0_column(l: usize, m: usize, cos_t: f64, sin_t: f64) -> f64 {
    let mut column = NormalizedColumn::new(m, cos_t, sin_t);
    for _ in m..l {
        column.advance();
    }
    column.current
}

/// Upward recurrence over `l` of orthonormal `Y_l^m(θ, 0)` at fixed `m`.
struct NormalizedColumn {
    m: usize,
    l: usize,
    cos_t: f64,
    current: f64,
    previous: f64,
}

impl NormalizedColumn {
    fn new(m: usize, cos_t: f64, sin_t: f64) -> Self {
        let seed = if m == 0 {
            (1.0 / (4.0 * PI)).sqrt()
        } else if sin_t == 0.0 {
            0.0
        } else {
            // |Y_m^m| = sqrt((2m+1)/4π / (2m)!) (2m-1)!! sin^m θ
            let mf = m as f64;
            let ln_mag = 0.5 * ((2.0 * mf + 1.0) / (4.0 * PI)).ln() + 0.5 * ln_factorial(2 * m)
                - mf * std::f64::consts::LN_2
                - ln_factorial(m)
                + mf * sin_t.ln();
            let mut value = ln_mag.exp();
            if m % 2 == 1 {
                value = -value;
            }
            value
        };
        Self {
            m,
            l: m,
            cos_t,
            current: seed,
            previous: 0.0,
        }
    }

    fn a(l: usize, m: usize) -> f64 {
        let (lf, mf) = (l as f64, m as f64);
        ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt()
    }

    fn advance(&mut self) {
        let l = self.l + 1;
        let next = if l == self.m + 1 {
            ((2 * self.m + 3) as f64).sqrt() * self.cos_t * self.current
        } else {
            Self::a(l, self.m) * (self.cos_t * self.current - self.previous / Self::a(l - 1, self.m))
        };
        self.previous = self.current;
        self.current = next;
        self.l = l;
    }
}

/// Orthonormal `Y_l^m(θ, 0)` for every `0 <= m <= l < bandlimit`, stored in
/// triangle order `l(l+1)/2 + m`.
pub fn ylm_theta0_triangle(bandlimit: usize, theta: f64) -> Vec<f64> {
    let cos_t = theta.cos();
    let sin_t = sin_colatitude(theta);
    let mut out = vec![0.0; bandlimit * (bandlimit + 1) / 2];
    for m in 0..bandlimit {
        let mut column = NormalizedColumn::new(m, cos_t, sin_t);
        out[triangle_index(m, m)] = column.current;
        for l in (m + 1)..bandlimit {
            column.advance();
            out[triangle_index(l, m)] = column.current;
        }
    }
    out
}

#[inline]
pub(crate) fn triangle_index(l: usize, m: usize) -> usize {
    l * (l + 1) / 2 + m
}

/// Spherical harmonic `Y_l^m(θ, φ)`.
pub fn eval_ylm(l: usize, m: i64, dir: SphDirection) -> Result<Complex64, ShError> {
    let abs_m = check_order(l, m)?;
    let base = ylm_theta0_column(l, abs_m, dir.theta.cos(), sin_colatitude(dir.theta));
    let phase = Complex64::from_polar(1.0, abs_m as f64 * dir.phi);
    let positive = phase * base;
    if m >= 0 {
        Ok(positive)
    } else if abs_m % 2 == 0 {
        Ok(positive.conj())
    } else {
        Ok(-positive.conj())
    }
}

/// Monomial coefficients `c^p_{lm}` with
/// `Y_l^m(θ, 0) = Σ_p c^p_{lm} cos^p θ · sin^{|m|} θ`.
#[derive(Debug, Clone)]
pub struct LegendrePolyTable {
    bandlimit: usize,
    offsets: Vec<usize>,
    coeffs: Vec<f64>,
}

/// One row of the table dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TableEntry {
    pub l: usize,
    pub m: usize,
    pub p: usize,
    pub c: f64,
}

/// Coefficient vectors (ascending powers) of the Legendre polynomials
/// `P_0 .. P_{n-1}` by Bonnet's recurrence.
fn legendre_polynomials(n: usize) -> Vec<Vec<f64>> {
    let mut polys: Vec<Vec<f64>> = Vec::with_capacity(n);
    for l in 0..n {
        let next = match l {
            0 => vec![1.0],
            1 => vec![0.0, 1.0],
            _ => {
                // l P_l = (2l-1) x P_{l-1} - (l-1) P_{l-2}
                let prev = &polys[l - 1];
                let prev2 = &polys[l - 2];
                let lf = l as f64;
                let mut next = vec![0.0; l + 1];
                for (k, &c) in prev.iter().enumerate() {
                    next[k + 1] += (2.0 * lf - 1.0) * c / lf;
                }
                for (k, &c) in prev2.iter().enumerate() {
                    next[k] -= (lf - 1.0) * c / lf;
                }
                next
            }
        };
        polys.push(next);
    }
    polys
}

/// `sqrt((2l+1)/4π · (l-m)!/(l+m)!) · (p+m)!/p!`. Direct products keep the
/// rounding to a few ulps while they stay in range; larger degrees fall back
/// to the log domain.
fn derivative_scale(l: usize, m: usize, p: usize) -> f64 {
    if l + m <= 150 {
        let ratio: f64 = ((l - m + 1)..=(l + m)).map(|j| 1.0 / j as f64).product();
        let rising: f64 = ((p + 1)..=(p + m)).map(|j| j as f64).product();
        ((2 * l + 1) as f64 / (4.0 * PI) * ratio).sqrt() * rising
    } else {
        (ln_normalization(l, m) + ln_factorial(p + m) - ln_factorial(p)).exp()
    }
}

impl LegendrePolyTable {
    pub fn new(bandlimit: usize) -> Result<Self, ShError> {
        if bandlimit == 0 {
            return Err(ShError::ZeroBandlimit);
        }
        if bandlimit > PRECISION_CAP {
            log::warn!(
                "bandlimit {bandlimit} exceeds {PRECISION_CAP}; monomial coefficients lose accuracy in double precision"
            );
        }
        let legendre = legendre_polynomials(bandlimit);
        let mut offsets = Vec::with_capacity(bandlimit * (bandlimit + 1) / 2);
        let mut coeffs = Vec::new();
        for (l, poly) in legendre.iter().enumerate() {
            for m in 0..=l {
                offsets.push(coeffs.len());
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                for p in 0..=(l - m) {
                    let raw = poly[p + m];
                    if raw == 0.0 {
                        coeffs.push(0.0);
                        continue;
                    }
                    // m-fold derivative contributes (p+m)!/p!
                    coeffs.push(sign * derivative_scale(l, m, p) * raw);
                }
            }
        }
        Ok(Self {
            bandlimit,
            offsets,
            coeffs,
        })
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    pub fn precision_limited(&self) -> bool {
        self.bandlimit > PRECISION_CAP
    }

    /// Coefficients `c^0 .. c^{l-m}` for `m >= 0`.
    pub fn poly(&self, l: usize, m: usize) -> &[f64] {
        assert!(l < self.bandlimit && m <= l, "(l={l}, m={m}) outside table");
        let start = self.offsets[triangle_index(l, m)];
        &self.coeffs[start..start + (l - m + 1)]
    }

    /// `c^p_{lm}` for any order, using `c^p_{l,-m} = (-1)^m c^p_{lm}`;
    /// zero above the polynomial degree.
    pub fn coeff(&self, l: usize, m: i64, p: usize) -> f64 {
        let abs_m = m.unsigned_abs() as usize;
        if l >= self.bandlimit || abs_m > l || p > l - abs_m {
            return 0.0;
        }
        let c = self.poly(l, abs_m)[p];
        if m < 0 && abs_m % 2 == 1 {
            -c
        } else {
            c
        }
    }

    /// Evaluates `Σ_p c^p_{lm} cos^p θ · sin^{|m|} θ` by Horner's scheme.
    pub fn eval_theta0(&self, l: usize, m: i64, theta: f64) -> f64 {
        let abs_m = m.unsigned_abs() as usize;
        let cos_t = theta.cos();
        let poly = self.poly(l, abs_m);
        let mut acc = 0.0;
        for &c in poly.iter().rev() {
            acc = acc * cos_t + c;
        }
        let mut value = acc * sin_colatitude(theta).powi(abs_m as i32);
        if m < 0 && abs_m % 2 == 1 {
            value = -value;
        }
        value
    }

    pub fn entries(&self) -> impl Iterator<Item = TableEntry> + '_ {
        (0..self.bandlimit).flat_map(move |l| {
            (0..=l).flat_map(move |m| {
                self.poly(l, m)
                    .iter()
                    .enumerate()
                    .map(move |(p, &c)| TableEntry { l, m, p, c })
            })
        })
    }

    /// Debug dump as a JSON array of `{"l","m","p","c"}` objects.
    pub fn debug_json(&self) -> String {
        let entries: Vec<TableEntry> = self.entries().collect();
        serde_json::to_string(&entries).expect("table entries are plain numbers")
    }
}

/// Spherical-harmonic coefficients `f_lm` for `0 <= l < L`, `|m| <= l`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShCoefficients {
    bandlimit: usize,
    values: Vec<Complex64>,
}

#[inline]
fn lm_index(l: usize, m: i64) -> usize {
    ((l * l + l) as i64 + m) as usize
}

impl ShCoefficients {
    pub fn zeros(bandlimit: usize) -> Self {
        Self {
            bandlimit,
            values: vec![Complex64::new(0.0, 0.0); bandlimit * bandlimit],
        }
    }

    /// Builds from values in `(l, m)` order: `l = 0..L`, `m = -l..=l`.
    pub fn from_values(bandlimit: usize, values: Vec<Complex64>) -> Result<Self, ShError> {
        if bandlimit == 0 {
            return Err(ShError::ZeroBandlimit);
        }
        let expected = bandlimit * bandlimit;
        if values.len() != expected {
            return Err(ShError::CoefficientCount {
                bandlimit,
                expected,
                got: values.len(),
            });
        }
        let out = Self { bandlimit, values };
        if let Some((l, m, _)) = out.iter().find(|(_, _, v)| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(ShError::NonFiniteCoefficient { l, m });
        }
        Ok(out)
    }

    pub fn bandlimit(&self) -> usize {
        self.bandlimit
    }

    pub fn get(&self, l: usize, m: i64) -> Complex64 {
        assert!(l < self.bandlimit && m.unsigned_abs() as usize <= l);
        self.values[lm_index(l, m)]
    }

    pub fn set(&mut self, l: usize, m: i64, value: Complex64) {
        assert!(l < self.bandlimit && m.unsigned_abs() as usize <= l);
        self.values[lm_index(l, m)] = value;
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, i64, Complex64)> + '_ {
        (0..self.bandlimit).flat_map(move |l| {
            let li = l as i64;
            (-li..=li).map(move |m| (l, m, self.values[lm_index(l, m)]))
        })
    }

    /// Evaluates the truncated expansion `Σ f_lm Y_l^m(dir)`.
    pub fn synthesize(&self, dir: SphDirection) -> Complex64 {
        let y = ylm_theta0_triangle(self.bandlimit, dir.theta());
        let mut total = Complex64::new(0.0, 0.0);
        for m in 0..self.bandlimit {
            let phase = Complex64::from_polar(1.0, m as f64 * dir.phi());
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            for l in m..self.bandlimit {
                let base = y[triangle_index(l, m)];
                let mi = m as i64;
                total += self.get(l, mi) * phase * base;
                if m > 0 {
                    total += self.get(l, -mi) * phase.conj() * (sign * base);
                }
            }
        }
        total
    }

    pub fn max_abs_diff(&self, other: &ShCoefficients) -> f64 {
        assert_eq!(self.bandlimit, other.bandlimit);
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

impl std::ops::Add for &ShCoefficients {
    type Output = ShCoefficients;

    fn add(self, rhs: &ShCoefficients) -> ShCoefficients {
        assert_eq!(self.bandlimit, rhs.bandlimit);
        ShCoefficients {
            bandlimit: self.bandlimit,
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// `(1-ν²)^{m/2} d^{l+m}/dν^{l+m} (ν²-1)^l · (-1)^m / (2^l l!)` by explicit
    /// binomial expansion and term-by-term differentiation; valid for any
    /// `-l <= m <= l`.
    fn rodrigues(l: usize, m: i64, nu: f64) -> f64 {
        rodrigues_with_scale(l, m, nu).0
    }

    /// Rodrigues value together with `Σ |term|`, the magnitude that bounds
    /// its own rounding error.
    fn rodrigues_with_scale(l: usize, m: i64, nu: f64) -> (f64, f64) {
        let order = (l as i64 + m) as usize;
        // (ν²-1)^l = Σ_k C(l,k) (-1)^{l-k} ν^{2k}
        let mut poly = vec![0.0; 2 * l + 1];
        for k in 0..=l {
            let binom = (0..k).fold(1.0, |acc, i| acc * (l - i) as f64 / (i + 1) as f64);
            poly[2 * k] = if (l - k).is_multiple_of(2) { binom } else { -binom };
        }
        for _ in 0..order {
            poly = poly
                .iter()
                .enumerate()
                .skip(1)
                .map(|(p, &c)| c * p as f64)
                .collect();
            if poly.is_empty() {
                return (0.0, 0.0);
            }
        }
        let value = poly.iter().rev().fold(0.0, |acc, &c| acc * nu + c);
        let magnitude = poly.iter().rev().fold(0.0, |acc: f64, &c: &f64| acc * nu.abs() + c.abs());
        let l_fact = (1..=l).fold(1.0, |acc, i| acc * i as f64);
        let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let factor = (1.0 - nu * nu).powf(m as f64 / 2.0) / (2f64.powi(l as i32) * l_fact);
        (sign * factor * value, factor * magnitude)
    }

    fn factorial(n: usize) -> f64 {
        (1..=n).fold(1.0, |acc, i| acc * i as f64)
    }

    #[test]
    fn legendre_trivial_values() {
        assert_eq!(eval_associated_legendre(0, 0, 0.3).unwrap(), 1.0);
        assert_eq!(eval_associated_legendre(1, 0, 0.5).unwrap(), 0.5);
    }

    #[test]
    fn legendre_l4_m2_matches_rodrigues() {
        // 6th derivative of (ν²-1)^4 is 20160ν² - 2880; /384 · (1-ν²) at ν=0.2
        let expected = -5.184;
        assert!((rodrigues(4, 2, 0.2) - expected).abs() < 1e-13);
        let got = eval_associated_legendre(4, 2, 0.2).unwrap();
        assert!((got - expected).abs() < 1e-13, "{got}");
    }

    #[test]
    fn legendre_matches_rodrigues_all_orders() {
        for l in 0..10 {
            for m in -(l as i64)..=(l as i64) {
                for &nu in &[-0.9f64, -0.31, 0.0, 0.42, 0.77, 1.0] {
                    if m < 0 && nu.abs() == 1.0 {
                        // (1-ν²)^{m/2} is singular there; the identity test covers it
                        continue;
                    }
                    let got = eval_associated_legendre(l, m, nu).unwrap();
                    let (want, scale) = rodrigues_with_scale(l, m, nu);
                    assert!(
                        (got - want).abs() <= 1e-13 * scale.max(1.0),
                        "l={l} m={m} nu={nu}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn legendre_domain_errors() {
        assert_eq!(
            eval_associated_legendre(3, 1, 1.5),
            Err(ShError::ArgumentOutOfRange(1.5))
        );
        assert!(matches!(
            eval_associated_legendre(2, 3, 0.1),
            Err(ShError::InvalidOrder { l: 2, m: 3 })
        ));
        assert!(eval_associated_legendre(2, 0, f64::NAN).is_err());
    }

    #[test]
    fn negative_order_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let l = rng.random_range(0..30usize);
            let m = rng.random_range(0..=l);
            let nu: f64 = rng.random_range(-1.0..=1.0);
            let pos = eval_associated_legendre(l, m as i64, nu).unwrap();
            let neg = eval_associated_legendre(l, -(m as i64), nu).unwrap();
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            let want = sign * factorial(l - m) / factorial(l + m) * pos;
            assert!((neg - want).abs() <= 1e-12 * want.abs().max(f64::MIN_POSITIVE));
        }
    }

    #[test]
    fn ylm_constant_and_axis_values() {
        let dir = SphDirection::new(1.1, 2.3).unwrap();
        let y00 = eval_ylm(0, 0, dir).unwrap();
        assert!((y00.re - 0.28209479177387814).abs() < 1e-15);
        assert_eq!(y00.im, 0.0);

        let north = SphDirection::new(0.0, 0.0).unwrap();
        let y10 = eval_ylm(1, 0, north).unwrap();
        assert!((y10.re - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn ylm_matches_rodrigues_normalisation() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let l = rng.random_range(0..14usize);
            let m = rng.random_range(-(l as i64)..=(l as i64));
            let theta = rng.random_range(0.0..PI);
            let phi = rng.random_range(0.0..TAU);
            let abs_m = m.unsigned_abs() as usize;
            let norm = ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l - abs_m) / factorial(l + abs_m)).sqrt();
            // for signed m the normalization uses (l-m)!/(l+m)! literally
            let norm_signed = if m >= 0 {
                norm
            } else {
                ((2 * l + 1) as f64 / (4.0 * PI) * factorial(l + abs_m) / factorial(l - abs_m)).sqrt()
            };
            let (value, scale) = rodrigues_with_scale(l, m, theta.cos());
            let want = Complex64::from_polar(norm_signed * value, m as f64 * phi);
            let got = eval_ylm(l, m, SphDirection::new(theta, phi).unwrap()).unwrap();
            let tol = 1e-13 * (norm_signed * scale).max(1.0);
            assert!((got - want).norm() <= tol, "l={l} m={m}: {got} vs {want}");
        }
    }

    #[test]
    fn ylm_separability() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..200 {
            let l = rng.random_range(0..25usize);
            let m = rng.random_range(-(l as i64)..=(l as i64));
            let theta = rng.random_range(0.0..PI);
            let phi = rng.random_range(0.0..TAU);
            let full = eval_ylm(l, m, SphDirection::new(theta, phi).unwrap()).unwrap();
            let zero = eval_ylm(l, m, SphDirection::new(theta, 0.0).unwrap()).unwrap();
            let want = zero * Complex64::from_polar(1.0, m as f64 * phi);
            assert!((full - want).norm() < 1e-13);
        }
    }

    #[test]
    fn ylm_rejects_bad_order() {
        let dir = SphDirection::new(0.5, 0.5).unwrap();
        assert!(eval_ylm(3, -4, dir).is_err());
    }

    #[test]
    fn triangle_matches_single_column() {
        let theta = 0.83;
        let tri = ylm_theta0_triangle(20, theta);
        for l in 0..20 {
            for m in 0..=l {
                let single = eval_ylm(l, m as i64, SphDirection::new(theta, 0.0).unwrap()).unwrap();
                assert_eq!(tri[triangle_index(l, m)], single.re);
            }
        }
    }

    #[test]
    fn table_small_cases() {
        let t1 = LegendrePolyTable::new(1).unwrap();
        assert!((t1.coeff(0, 0, 0) - 1.0 / (4.0 * PI).sqrt()).abs() < 1e-16);

        let t2 = LegendrePolyTable::new(2).unwrap();
        assert_eq!(t2.coeff(1, 0, 0), 0.0);
        assert!((t2.coeff(1, 0, 1) - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-15);
        // Y_1^1(θ,0) = -sqrt(3/8π) sin θ
        assert!((t2.coeff(1, 1, 0) + (3.0 / (8.0 * PI)).sqrt()).abs() < 1e-15);
        assert!((t2.coeff(1, -1, 0) - (3.0 / (8.0 * PI)).sqrt()).abs() < 1e-15);
        assert_eq!(t2.coeff(1, 0, 2), 0.0);
        assert!(LegendrePolyTable::new(0).is_err());
    }

    #[test]
    fn table_leading_coefficients_nonzero() {
        let table = LegendrePolyTable::new(PRECISION_CAP).unwrap();
        for l in 0..PRECISION_CAP {
            for m in 0..=l {
                assert!(table.poly(l, m)[l - m] != 0.0, "l={l} m={m}");
            }
        }
    }

    #[test]
    fn table_agrees_with_direct_evaluation() {
        // Absolute agreement is limited by rounding of the monomial
        // coefficients: the floor is ~eps · Σ_p |c^p| |cos θ|^p, which passes
        // 1e-11 only while that sum stays below ~1e4.
        let table = LegendrePolyTable::new(PRECISION_CAP).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for l in 0..PRECISION_CAP {
            for m in -(l as i64)..=(l as i64) {
                for _ in 0..100 {
                    let theta = rng.random_range(0.0..=PI);
                    let direct = eval_ylm(l, m, SphDirection::new(theta, 0.0).unwrap()).unwrap().re;
                    let from_table = table.eval_theta0(l, m, theta);
                    let abs_m = m.unsigned_abs() as usize;
                    let scale: f64 = table
                        .poly(l, abs_m)
                        .iter()
                        .enumerate()
                        .map(|(p, c)| c.abs() * theta.cos().abs().powi(p as i32))
                        .sum::<f64>()
                        * sin_colatitude(theta).powi(abs_m as i32);
                    let tol = 1e-11_f64.max(64.0 * f64::EPSILON * scale);
                    assert!(
                        (direct - from_table).abs() <= tol,
                        "l={l} m={m} θ={theta}: {direct} vs {from_table}"
                    );
                }
            }
        }
    }

    #[test]
    fn table_agreement_is_absolute_at_low_degree() {
        let table = LegendrePolyTable::new(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for l in 0..16 {
            for m in -(l as i64)..=(l as i64) {
                for _ in 0..100 {
                    let theta = rng.random_range(0.0..=PI);
                    let direct = eval_ylm(l, m, SphDirection::new(theta, 0.0).unwrap()).unwrap().re;
                    let got = table.eval_theta0(l, m, theta);
                    assert!((direct - got).abs() <= 1e-11, "l={l} m={m} θ={theta}: {direct} vs {got}");
                }
            }
        }
    }

    #[test]
    fn table_handles_poles_exactly() {
        let table = LegendrePolyTable::new(6).unwrap();
        for l in 1..6 {
            for m in 1..=l as i64 {
                assert_eq!(table.eval_theta0(l, m, 0.0), 0.0);
                assert_eq!(table.eval_theta0(l, m, PI), 0.0);
            }
        }
    }

    #[test]
    fn table_debug_dump_has_expected_keys() {
        let table = LegendrePolyTable::new(3).unwrap();
        let value: serde_json::Value = serde_json::from_str(&table.debug_json()).unwrap();
        let rows = value.as_array().unwrap();
        // Σ_l Σ_{m<=l} (l-m+1) for L=3: 1 + 3 + 6
        assert_eq!(rows.len(), 10);
        for key in ["l", "m", "p", "c"] {
            assert!(rows[0].get(key).is_some());
        }
    }

    #[test]
    fn direction_normalises_longitude() {
        let dir = SphDirection::new(1.0, -0.5).unwrap();
        assert!((dir.phi() - (TAU - 0.5)).abs() < 1e-15);
        assert_eq!(SphDirection::new(1.0, TAU).unwrap().phi(), 0.0);
        assert!(SphDirection::new(-0.1, 0.0).is_err());
        assert!(SphDirection::new(0.3, f64::INFINITY).is_err());
        assert_eq!(normalize_phi(-1e-20), 0.0);
    }

    #[test]
    fn great_circle_distance_basics() {
        let a = SphDirection::new(0.0, 0.0).unwrap();
        let b = SphDirection::new(PI, 1.0).unwrap();
        assert!((a.distance(&b) - PI).abs() < 1e-15);
        let c = SphDirection::new(PI / 2.0, 0.0).unwrap();
        let d = SphDirection::new(PI / 2.0, 1e-9).unwrap();
        assert!((c.distance(&d) - 1e-9).abs() < 1e-22);
    }

    #[test]
    fn synthesize_constant_term() {
        let mut flm = ShCoefficients::zeros(1);
        flm.set(0, 0, Complex64::new(2.0, 0.0));
        let dir = SphDirection::new(0.4, 5.0).unwrap();
        let v = flm.synthesize(dir);
        assert!((v.re - 2.0 / (4.0 * PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn coefficients_validate_shape_and_values() {
        assert!(ShCoefficients::from_values(2, vec![Complex64::new(0.0, 0.0); 3]).is_err());
        let mut vals = vec![Complex64::new(0.0, 0.0); 4];
        vals[2] = Complex64::new(f64::NAN, 0.0);
        assert!(matches!(
            ShCoefficients::from_values(2, vals),
            Err(ShError::NonFiniteCoefficient { l: 1, m: 0 })
        ));
    }
}
