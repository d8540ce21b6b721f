//! Reconstruction of finite-rate-of-innovation signals on the 2-sphere.
//!
//! A signal made of `K` weighted Dirac deltas on the sphere is observed only
//! through its spherical-harmonic coefficients below some degree `L`. This
//! crate recovers the locations and amplitudes exactly (up to rounding) with
//! an annihilating-filter method:
//!
//! 1. per order `m`, a triangular solve turns `f_lm` into exponential
//!    mixtures `d_pm = Σ_k α_k cos^p θ_k x_k^m`, with `x_k = sin θ_k e^{-iφ_k}`;
//! 2. the null vector of a stacked Hankel-style matrix of `d_pm` windows is the
//!    annihilating filter whose roots are the `x_k`;
//! 3. two Vandermonde solves give `α_k` and `α_k cos θ_k`.
//!
//! ```
//! use fri_sphere::model::{forward_sh_coefficients, Dirac};
//! use fri_sphere::recovery::{recover, required_bandlimit};
//! use num_complex::Complex64;
//!
//! let diracs = vec![
//!     Dirac::new(0.7, 1.2, Complex64::new(1.0, 0.5)),
//!     Dirac::new(2.1, 4.0, Complex64::new(-0.4, 0.8)),
//! ];
//! let plan = required_bandlimit(diracs.len());
//! let flm = forward_sh_coefficients(&diracs, plan.l_required);
//! let result = recover(&flm, diracs.len()).unwrap();
//! assert_eq!(result.diracs.len(), 2);
//! ```

// Negated float comparisons are deliberate: they reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod experiment;
pub mod io;
pub mod model;
pub mod numerics;
pub mod quadrature;
pub mod recovery;
pub mod sh;
pub mod tolerance;

pub use model::{Dirac, DiracEnsemble, InstanceGenConfig};
pub use recovery::{recover, RecoveryResult};
pub use sh::{LegendrePolyTable, ShCoefficients, SphDirection};
pub use tolerance::Tolerances;
