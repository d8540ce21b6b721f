//! Product quadrature on the sphere: Gauss–Legendre in `cos θ` times the
//! trapezoidal rule in `φ`. With `n_theta` nodes and `n_phi` points it
//! integrates exactly every bandlimited product whose degree in `cos θ` is
//! below `2 n_theta` and whose azimuthal frequencies are below `n_phi`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on
/// `P_n` from Chebyshev-like initial guesses.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Product rule on the sphere.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    /// `(θ, φ, weight)` triples.
    pub points: Vec<(f64, f64, f64)>,
}

impl SphereQuadrature {
    pub fn new(n_theta: usize, n_phi: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n_theta);
        let dphi = TAU / n_phi as f64;
        let mut points = Vec::with_capacity(n_theta * n_phi);
        for (x, w) in nodes.iter().zip(&weights) {
            let theta = x.acos();
            for j in 0..n_phi {
                points.push((theta, j as f64 * dphi, w * dphi));
            }
        }
        Self { points }
    }

    /// `∫ f ds` over the sphere.
    pub fn integrate(&self, mut f: impl FnMut(f64, f64) -> Complex64) -> Complex64 {
        self.points.iter().map(|&(t, p, w)| f(t, p) * w).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_monomials_exactly() {
        let (x, w) = gauss_legendre(8);
        for k in 0..16 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(k)).sum();
            let want = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            assert!((got - want).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn sphere_area() {
        let q = SphereQuadrature::new(4, 8);
        let area = q.integrate(|_, _| Complex64::new(1.0, 0.0));
        assert!((area.re - 4.0 * PI).abs() < 1e-13);
    }
}
