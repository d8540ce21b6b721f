//! Dense complex kernels: triangular and Vandermonde solves, the smallest
//! right singular pair, and polynomial roots.

use nalgebra::{DMatrix, Schur, SVD};
use num_complex::Complex64;
use thiserror::Error;

use crate::tolerance::Tolerances;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("zero diagonal entry at index {0} of triangular matrix")]
    SingularDiagonal(usize),
    #[error("Vandermonde nodes {0} and {1} coincide")]
    DuplicateNodes(usize, usize),
    #[error(
        "null space is not one-dimensional (σ_min={smallest:.3e}, σ_next={second:.3e}, σ_max={largest:.3e})"
    )]
    AmbiguousNullSpace {
        smallest: f64,
        second: f64,
        largest: f64,
    },
    #[error("leading polynomial coefficient vanishes (|v_0|/‖v‖ = {0:.3e})")]
    DegenerateLeadingCoefficient(f64),
    #[error("{0} did not converge")]
    NoConvergence(&'static str),
    #[error("non-finite input")]
    NonFinite,
}

/// Dense complex matrix in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self, NumericsError> {
        if data.len() != rows * cols {
            return Err(NumericsError::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, NumericsError> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(NumericsError::DimensionMismatch("ragged rows".into()));
        }
        Self::from_row_major(rows.len(), cols, rows.concat())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        self.data[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn to_nalgebra(&self, padded_rows: usize) -> DMatrix<Complex64> {
        DMatrix::from_fn(padded_rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j)
            } else {
                ZERO
            }
        })
    }
}

pub(crate) fn norm_inf_vec(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Solves `A x = b` by forward substitution, reading only the lower triangle.
pub fn solve_lower_triangular(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>, NumericsError> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(NumericsError::DimensionMismatch(format!(
            "{}x{} system with {} right-hand entries",
            a.rows(),
            a.cols(),
            b.len()
        )));
    }
    let mut x = Vec::with_capacity(n);
    for i in 0..n {
        let diag = a.get(i, i);
        if diag == ZERO || !diag.re.is_finite() || !diag.im.is_finite() {
            return Err(NumericsError::SingularDiagonal(i));
        }
        let row = a.row(i);
        let partial: Complex64 = row[..i].iter().zip(&x).map(|(aij, xj)| aij * xj).sum();
        x.push((b[i] - partial) / diag);
    }
    Ok(x)
}

/// Result of a Vandermonde solve.
#[derive(Debug, Clone, PartialEq)]
pub struct VandermondeSolution {
    pub solution: Vec<Complex64>,
    /// `‖V‖_∞ ‖V⁻¹‖_∞` with the inverse formed from the Lagrange basis.
    pub condition: f64,
    /// `‖V a − d‖_∞ / (‖V‖_∞ ‖a‖_∞)`.
    pub relative_residual: f64,
}

impl VandermondeSolution {
    pub fn is_ill_conditioned(&self, tol: &Tolerances) -> bool {
        !(self.condition <= tol.vandermonde_cond_warn)
    }
}

fn check_distinct(nodes: &[Complex64], tol: &Tolerances) -> Result<(), NumericsError> {
    for i in 0..nodes.len() {
        for j in (i + 1)..nodes.len() {
            let scale = 1.0f64.max(nodes[i].norm()).max(nodes[j].norm());
            if (nodes[i] - nodes[j]).norm() <= tol.duplicate_node * scale {
                return Err(NumericsError::DuplicateNodes(i, j));
            }
        }
    }
    Ok(())
}

/// `V_{mk} = x_k^m` applied to `a`.
pub fn vandermonde_apply(nodes: &[Complex64], a: &[Complex64]) -> Vec<Complex64> {
    let mut powers = vec![ONE; nodes.len()];
    (0..nodes.len())
        .map(|_| {
            let value = powers.iter().zip(a).map(|(p, ak)| p * ak).sum();
            for (p, x) in powers.iter_mut().zip(nodes) {
                *p *= x;
            }
            value
        })
        .collect()
}

fn vandermonde_norm_inf(nodes: &[Complex64]) -> f64 {
    (0..nodes.len())
        .map(|m| nodes.iter().map(|x| x.norm().powi(m as i32)).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `‖V⁻¹‖_∞`: row `k` of the inverse holds the monomial coefficients of the
/// Lagrange polynomial `ℓ_k(z) = Π_{j≠k} (z − x_j)/(x_k − x_j)`.
fn vandermonde_inverse_norm_inf(nodes: &[Complex64]) -> f64 {
    let n = nodes.len();
    // master polynomial Π (z - x_j), ascending coefficients
    let mut master = vec![ZERO; n + 1];
    master[0] = ONE;
    for (deg, &x) in nodes.iter().enumerate() {
        for i in (1..=deg + 1).rev() {
            master[i] = master[i - 1] - x * master[i];
        }
        master[0] = -x * master[0];
    }
    let mut worst = 0.0f64;
    for (k, &xk) in nodes.iter().enumerate() {
        // synthetic division master / (z - x_k)
        let mut quotient = vec![ZERO; n];
        let mut carry = ZERO;
        for i in (0..n).rev() {
            carry = master[i + 1] + carry * xk;
            quotient[i] = carry;
        }
        let denom: Complex64 = nodes
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &xj)| xk - xj)
            .product();
        let row_sum: f64 = quotient.iter().map(|q| q.norm()).sum::<f64>() / denom.norm();
        worst = worst.max(row_sum);
    }
    worst
}

/// Solves `Σ_k a_k x_k^m = d_m`, `m = 0..K-1`, by the Björck–Pereyra
/// progressive scheme for the transposed (dual) Vandermonde system.
#[allow(clippy::needless_range_loop)]
pub fn solve_vandermonde(
    nodes: &[Complex64],
    rhs: &[Complex64],
    tol: &Tolerances,
) -> Result<VandermondeSolution, NumericsError> {
    if nodes.len() != rhs.len() || nodes.is_empty() {
        return Err(NumericsError::DimensionMismatch(format!(
            "{} nodes with {} right-hand entries",
            nodes.len(),
            rhs.len()
        )));
    }
    if nodes.iter().chain(rhs).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NumericsError::NonFinite);
    }
    check_distinct(nodes, tol)?;

    let n = nodes.len() - 1;
    let x = nodes;
    let mut b = rhs.to_vec();
    // forward elimination by the Newton-form recurrences
    for k in 0..n {
        for i in ((k + 1)..=n).rev() {
            b[i] = b[i] - x[k] * b[i - 1];
        }
    }
    for k in (0..n).rev() {
        for i in (k + 1)..=n {
            b[i] /= x[i] - x[i - k - 1];
        }
        for i in k..n {
            b[i] = b[i] - b[i + 1];
        }
    }

    let v_norm = vandermonde_norm_inf(nodes);
    let condition = v_norm * vandermonde_inverse_norm_inf(nodes);
    let applied = vandermonde_apply(nodes, &b);
    let resid = applied
        .iter()
        .zip(rhs)
        .map(|(a, d)| (a - d).norm())
        .fold(0.0, f64::max);
    let denom = v_norm * norm_inf_vec(&b);
    let relative_residual = if denom > 0.0 { resid / denom } else { resid };
    let out = VandermondeSolution {
        solution: b,
        condition,
        relative_residual,
    };
    if out.is_ill_conditioned(tol) {
        log::warn!("Vandermonde system is ill-conditioned (condition ≈ {condition:.3e})");
    }
    Ok(out)
}

/// Singular values bracketing the null direction of a matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullSpaceGap {
    pub smallest: f64,
    pub second_smallest: f64,
    pub largest: f64,
}

impl NullSpaceGap {
    /// `σ_min / σ_second_min`; zero when the null space is exact.
    pub fn ratio(&self) -> f64 {
        if self.second_smallest > 0.0 {
            self.smallest / self.second_smallest
        } else {
            f64::INFINITY
        }
    }
}

/// Unit right singular vector for the smallest singular value of `m`.
///
/// Matrices with fewer rows than columns are padded with zero rows, so a
/// `(n-1) x n` matrix always has `σ_min = 0`. Fails with
/// [`NumericsError::AmbiguousNullSpace`] when the two smallest singular
/// values cannot be told apart: either `σ_second_min <= rank_floor · σ_max`
/// or `σ_min / σ_second_min > null_gap`.
pub fn smallest_right_singular_vector(
    m: &ComplexMatrix,
    tol: &Tolerances,
) -> Result<(Vec<Complex64>, NullSpaceGap), NumericsError> {
    let n = m.cols();
    if n < 2 || m.rows() + 1 < n {
        return Err(NumericsError::DimensionMismatch(format!(
            "need at least 2 columns and cols-1 rows, got {}x{}",
            m.rows(),
            n
        )));
    }
    let padded = m.rows().max(n);
    let svd = SVD::try_new(m.to_nalgebra(padded), false, true, f64::EPSILON, 10_000)
        .ok_or(NumericsError::NoConvergence("singular value decomposition"))?;
    let sv = &svd.singular_values;
    let gap = NullSpaceGap {
        smallest: sv[n - 1],
        second_smallest: sv[n - 2],
        largest: sv[0],
    };
    let ambiguous = !(gap.largest > 0.0)
        || gap.second_smallest <= tol.rank_floor * gap.largest
        || gap.ratio() > tol.null_gap;
    if ambiguous {
        return Err(NumericsError::AmbiguousNullSpace {
            smallest: gap.smallest,
            second: gap.second_smallest,
            largest: gap.largest,
        });
    }
    let v_t = svd.v_t.expect("right singular vectors requested");
    // v_t holds V^H, so the null vector is the conjugated last row
    let mut v: Vec<Complex64> = (0..n).map(|j| v_t[(n - 1, j)].conj()).collect();
    // fix the arbitrary phase: largest component real and positive
    let pivot = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .unwrap_or(ONE);
    let phase = pivot.conj() / pivot.norm();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut v {
        *z = *z * phase / norm;
    }
    Ok((v, gap))
}

/// Filter taps `v_0..v_K` of `V(z) = Σ_n v_n z^{-n}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialCoeffs(Vec<Complex64>);

impl PolynomialCoeffs {
    pub fn new(coeffs: Vec<Complex64>) -> Result<Self, NumericsError> {
        if coeffs.len() < 2 {
            return Err(NumericsError::DimensionMismatch(
                "annihilating filter needs at least two taps".into(),
            ));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(NumericsError::NonFinite);
        }
        Ok(Self(coeffs))
    }

    /// Taps of `Π_k (1 − x_k z^{-1})`.
    pub fn from_roots(roots: &[Complex64]) -> Self {
        let mut taps = vec![ONE];
        for &x in roots {
            taps.push(ZERO);
            for i in (1..taps.len()).rev() {
                let prev = taps[i - 1];
                taps[i] -= x * prev;
            }
        }
        Self(taps)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    /// `z^K V(z) = Σ_n v_n z^{K-n}` at `z`.
    pub fn eval_scaled(&self, z: Complex64) -> Complex64 {
        self.0.iter().fold(ZERO, |acc, &c| acc * z + c)
    }
}

/// Parlett–Reinsch balancing by powers of two.
fn balance(a: &mut DMatrix<Complex64>) {
    let n = a.nrows();
    let radix = 2.0f64;
    let mut converged = false;
    while !converged {
        converged = true;
        for i in 0..n {
            let mut col = 0.0;
            let mut row = 0.0;
            for j in 0..n {
                if j != i {
                    col += a[(j, i)].l1_norm();
                    row += a[(i, j)].l1_norm();
                }
            }
            if col == 0.0 || row == 0.0 {
                continue;
            }
            let sum = col + row;
            let mut g = row / radix;
            let mut f = 1.0;
            while col < g {
                f *= radix;
                col *= radix * radix;
            }
            g = row * radix;
            while col > g {
                f /= radix;
                col /= radix * radix;
            }
            if (col + row) / f < 0.95 * sum {
                converged = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// Roots `x̃_k` of `V(z) = Σ_n v_n z^{-n}` (equivalently of the degree-`K`
/// polynomial `Σ_n v_n z^{K-n}`) from the eigenvalues of its balanced
/// companion matrix. Order is unspecified.
pub fn polynomial_roots(p: &PolynomialCoeffs, tol: &Tolerances) -> Result<Vec<Complex64>, NumericsError> {
    let v = p.coeffs();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let lead = v[0].norm();
    if !(lead > tol.leading_coeff * norm) {
        return Err(NumericsError::DegenerateLeadingCoefficient(if norm > 0.0 { lead / norm } else { 0.0 }));
    }
    let k = p.degree();
    let monic: Vec<Complex64> = v.iter().map(|c| c / v[0]).collect();
    let mut roots = if k == 1 {
        vec![-monic[1]]
    } else {
        let mut companion = DMatrix::from_element(k, k, ZERO);
        for j in 0..k {
            companion[(0, j)] = -monic[j + 1];
        }
        for i in 1..k {
            companion[(i, i - 1)] = ONE;
        }
        balance(&mut companion);
        let schur = Schur::try_new(companion, f64::EPSILON, 100 * k * k)
            .ok_or(NumericsError::NoConvergence("companion eigenvalue iteration"))?;
        let (_, t) = schur.unpack();
        (0..k).map(|i| t[(i, i)]).collect()
    };
    if tol.newton_polish {
        let monic_poly = PolynomialCoeffs(monic);
        for z in &mut roots {
            let (value, slope) = monic_poly.0.iter().fold((ZERO, ZERO), |(f, df), &c| (f * *z + c, df * *z + f));
            if slope.norm() > 0.0 {
                let step = value / slope;
                if step.re.is_finite() && step.im.is_finite() {
                    *z -= step;
                }
            }
        }
        debug_assert_eq!(monic_poly.degree(), k);
    }
    if roots.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(NumericsError::NoConvergence("companion eigenvalue iteration"));
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_in_disk(rng: &mut ChaCha8Rng) -> Complex64 {
        loop {
            let z = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            if z.norm() < 1.0 {
                return z;
            }
        }
    }

    /// Largest distance from each expected root to its nearest unused match.
    fn multiset_distance(got: &[Complex64], want: &[Complex64]) -> f64 {
        assert_eq!(got.len(), want.len());
        let mut used = vec![false; got.len()];
        let mut worst = 0.0f64;
        for w in want {
            let (idx, d) = got
                .iter()
                .enumerate()
                .filter(|(i, _)| !used[*i])
                .map(|(i, g)| (i, (g - w).norm()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            used[idx] = true;
            worst = worst.max(d);
        }
        worst
    }

    #[test]
    fn triangular_identity_and_hand_case() {
        let eye = ComplexMatrix::from_fn(3, 3, |i, j| if i == j { ONE } else { ZERO });
        let b = vec![c(1.0, 2.0), c(-3.0, 0.5), c(0.0, 0.0)];
        assert_eq!(solve_lower_triangular(&eye, &b).unwrap(), b);

        let a = ComplexMatrix::from_rows(&[vec![c(2.0, 0.0), ZERO], vec![ONE, ONE]]).unwrap();
        let x = solve_lower_triangular(&a, &[c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_eq!(x, vec![c(1.0, 0.0), c(2.0, 0.0)]);
    }

    #[test]
    fn triangular_random_residual() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let a = ComplexMatrix::from_fn(8, 8, |i, j| {
                if j > i {
                    ZERO
                } else if i == j {
                    c(rng.random_range(1.0..2.0), rng.random_range(-1.0..1.0))
                } else {
                    c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                }
            });
            let b: Vec<Complex64> = (0..8).map(|_| random_in_disk(&mut rng)).collect();
            let x = solve_lower_triangular(&a, &b).unwrap();
            let r: Vec<Complex64> = a.mul_vec(&x).iter().zip(&b).map(|(p, q)| p - q).collect();
            let rn = r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let bn = b.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            assert!(rn <= 1e-13 * bn, "{rn}");
        }
    }

    #[test]
    fn triangular_zero_diagonal() {
        let a = ComplexMatrix::from_rows(&[vec![ONE, ZERO], vec![ONE, ZERO]]).unwrap();
        assert_eq!(
            solve_lower_triangular(&a, &[ONE, ONE]),
            Err(NumericsError::SingularDiagonal(1))
        );
        let rect = ComplexMatrix::zeros(2, 3);
        assert!(matches!(
            solve_lower_triangular(&rect, &[ONE, ONE]),
            Err(NumericsError::DimensionMismatch(_))
        ));
    }

    #[test]
    fn vandermonde_small_cases() {
        let tol = Tolerances::default();
        let x = c(0.3, -0.2);
        let one = solve_vandermonde(&[x], &[c(1.5, 2.0)], &tol).unwrap();
        assert_eq!(one.solution, vec![c(1.5, 2.0)]);

        let two = solve_vandermonde(&[ONE, -ONE], &[ZERO, c(2.0, 0.0)], &tol).unwrap();
        assert_eq!(two.solution, vec![ONE, -ONE]);
    }

    #[test]
    fn vandermonde_random_disk_residual() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let nodes: Vec<Complex64> = (0..6).map(|_| random_in_disk(&mut rng)).collect();
            let rhs: Vec<Complex64> = (0..6).map(|_| random_in_disk(&mut rng)).collect();
            let sol = solve_vandermonde(&nodes, &rhs, &tol).unwrap();
            let back = vandermonde_apply(&nodes, &sol.solution);
            let err = back.iter().zip(&rhs).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!(err <= 1e-10 * norm_inf_vec(&rhs), "{err}");
        }
    }

    #[test]
    fn vandermonde_backward_residual_up_to_32() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in [2usize, 5, 10, 20, 32] {
            for _ in 0..20 {
                let nodes: Vec<Complex64> = (0..n).map(|_| random_in_disk(&mut rng)).collect();
                let rhs: Vec<Complex64> = (0..n).map(|_| random_in_disk(&mut rng)).collect();
                let sol = solve_vandermonde(&nodes, &rhs, &tol).unwrap();
                assert!(sol.relative_residual <= 1e-12, "n={n}: {}", sol.relative_residual);
            }
        }
    }

    #[test]
    fn vandermonde_condition_of_identity_like_nodes() {
        // nodes at the K-th roots of unity give a scaled unitary DFT matrix: cond = 1 in 2-norm
        let tol = Tolerances::default();
        let k = 4;
        let nodes: Vec<Complex64> = (0..k)
            .map(|j| Complex64::from_polar(1.0, std::f64::consts::TAU * j as f64 / k as f64))
            .collect();
        let sol = solve_vandermonde(&nodes, &vec![ONE; k], &tol).unwrap();
        // ∞-norm condition of the 4-point DFT: ‖F‖_∞ = 4, ‖F⁻¹‖_∞ = 1
        assert!((sol.condition - 4.0).abs() < 1e-12, "{}", sol.condition);
    }

    #[test]
    fn vandermonde_duplicate_nodes() {
        let tol = Tolerances::default();
        let x = c(0.2, 0.4);
        assert_eq!(
            solve_vandermonde(&[x, c(0.9, 0.0), x], &[ONE, ONE, ONE], &tol),
            Err(NumericsError::DuplicateNodes(0, 2))
        );
    }

    #[test]
    fn null_vector_of_simple_matrix() {
        let tol = Tolerances::default();
        let m = ComplexMatrix::from_rows(&[vec![ONE, ZERO], vec![ZERO, ZERO]]).unwrap();
        let (v, gap) = smallest_right_singular_vector(&m, &tol).unwrap();
        assert!((v[0]).norm() < 1e-15);
        assert!((v[1] - ONE).norm() < 1e-15);
        assert_eq!(gap.smallest, 0.0);
    }

    #[test]
    fn null_vector_recovers_planted_direction() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in 1..8 {
            let mut planted: Vec<Complex64> = (0..=k).map(|_| random_in_disk(&mut rng)).collect();
            let norm = planted.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            planted.iter_mut().for_each(|z| *z /= norm);
            // rows orthogonal (bilinearly) to the planted vector: r·v = 0
            let rows: Vec<Vec<Complex64>> = (0..k + 3)
                .map(|_| {
                    let mut r: Vec<Complex64> = (0..=k).map(|_| random_in_disk(&mut rng)).collect();
                    let proj: Complex64 = r.iter().zip(&planted).map(|(a, b)| a * b).sum();
                    for (ri, vi) in r.iter_mut().zip(&planted) {
                        *ri -= proj * vi.conj();
                    }
                    r
                })
                .collect();
            let m = ComplexMatrix::from_rows(&rows).unwrap();
            let (v, gap) = smallest_right_singular_vector(&m, &tol).unwrap();
            let overlap: Complex64 = v.iter().zip(&planted).map(|(a, b)| a * b.conj()).sum();
            let aligned: Vec<Complex64> = planted.iter().map(|p| p * overlap).collect();
            let diff = v.iter().zip(&aligned).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            assert!((overlap.norm() - 1.0).abs() < 1e-10 && diff < 1e-10, "k={k}");
            let mv = norm_inf_vec(&m.mul_vec(&v));
            assert!(mv <= gap.second_smallest);
        }
    }

    #[test]
    fn null_vector_ambiguous_for_zero_matrix() {
        let tol = Tolerances::default();
        assert!(matches!(
            smallest_right_singular_vector(&ComplexMatrix::zeros(3, 3), &tol),
            Err(NumericsError::AmbiguousNullSpace { .. })
        ));
        // rank 1 with 3 columns: two null directions
        let m = ComplexMatrix::from_rows(&[vec![ONE, ONE, ONE], vec![ONE, ONE, ONE]]).unwrap();
        assert!(matches!(
            smallest_right_singular_vector(&m, &tol),
            Err(NumericsError::AmbiguousNullSpace { .. })
        ));
        assert!(smallest_right_singular_vector(&ComplexMatrix::zeros(1, 3), &tol).is_err());
    }

    #[test]
    fn roots_linear_and_quadratic() {
        let tol = Tolerances::default();
        let x = c(0.4, -0.7);
        let lin = PolynomialCoeffs::new(vec![ONE, -x]).unwrap();
        assert_eq!(polynomial_roots(&lin, &tol).unwrap(), vec![x]);

        // (1 - 0.5 z^-1)(1 - (0.3+0.1i) z^-1) expanded by hand
        let b = c(0.3, 0.1);
        let taps = vec![ONE, -(c(0.5, 0.0) + b), c(0.5, 0.0) * b];
        let roots = polynomial_roots(&PolynomialCoeffs::new(taps).unwrap(), &tol).unwrap();
        assert!(multiset_distance(&roots, &[c(0.5, 0.0), b]) < 1e-14);
    }

    #[test]
    fn roots_are_scale_invariant() {
        let tol = Tolerances::default();
        let p = PolynomialCoeffs::from_roots(&[c(0.1, 0.2), c(-0.5, 0.3), c(0.7, -0.6)]);
        let scaled =
            PolynomialCoeffs::new(p.coeffs().iter().map(|z| z * c(-3.0, 2.0)).collect()).unwrap();
        let a = polynomial_roots(&p, &tol).unwrap();
        let b = polynomial_roots(&scaled, &tol).unwrap();
        assert!(multiset_distance(&a, &b) < 1e-13);
    }

    #[test]
    fn roots_invert_expansion_up_to_degree_20() {
        let tol = Tolerances::default();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for k in 1..=20 {
            for _ in 0..10 {
                let want: Vec<Complex64> = (0..k).map(|_| random_in_disk(&mut rng)).collect();
                let p = PolynomialCoeffs::from_roots(&want);
                let got = polynomial_roots(&p, &tol).unwrap();
                assert!(multiset_distance(&got, &want) < 1e-9, "k={k}");
            }
        }
    }

    #[test]
    fn newton_polish_keeps_roots() {
        let tol = Tolerances {
            newton_polish: true,
            ..Tolerances::default()
        };
        let want = vec![c(0.9, 0.1), c(-0.2, 0.8), c(0.05, -0.3), c(-0.6, -0.6)];
        let got = polynomial_roots(&PolynomialCoeffs::from_roots(&want), &tol).unwrap();
        assert!(multiset_distance(&got, &want) < 1e-13);
    }

    #[test]
    fn roots_reject_vanishing_leading_tap() {
        let tol = Tolerances::default();
        let p = PolynomialCoeffs::new(vec![ZERO, ONE, c(0.5, 0.0)]).unwrap();
        assert!(matches!(
            polynomial_roots(&p, &tol),
            Err(NumericsError::DegenerateLeadingCoefficient(_))
        ));
        assert!(PolynomialCoeffs::new(vec![ONE]).is_err());
    }
}
