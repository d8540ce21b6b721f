//! Numerical thresholds shared by the solvers and the recovery pipeline.

use thiserror::Error;

/// Prefix of environment variables that override [`Tolerances`] fields,
/// e.g. `FRI_SPHERE_TOL_NULL_GAP=1e-5`.
pub const ENV_PREFIX: &str = "FRI_SPHERE_TOL_";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ToleranceError {
    #[error("unknown tolerance key `{0}`")]
    UnknownKey(String),
    #[error("tolerance `{key}` has invalid value `{value}` (expected a finite non-negative number)")]
    InvalidValue { key: String, value: String },
    #[error("malformed tolerance override `{0}` (expected key=value)")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative backward-residual bound for the linear solvers.
    pub residual: f64,
    /// Largest admissible `σ_min / σ_second_min` before the null space is
    /// declared ambiguous.
    pub null_gap: f64,
    /// `σ_second_min / σ_max` at or below this is treated as a numerically
    /// zero singular value (a second null direction).
    pub rank_floor: f64,
    /// Relative size `|v_0| / ‖v‖` below which the annihilating polynomial is
    /// considered to have lost its leading term.
    pub leading_coeff: f64,
    /// Relative node distance `|x_j - x_k| / max(1, |x_j|, |x_k|)` below which
    /// Vandermonde nodes count as duplicates.
    pub duplicate_node: f64,
    /// Condition-number estimate above which a Vandermonde solve logs a warning.
    pub vandermonde_cond_warn: f64,
    /// Smallest admissible `|α̃_k|` when dividing in the colatitude step.
    pub amplitude_floor: f64,
    /// Apply one Newton step to each polynomial root.
    pub newton_polish: bool,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-12,
            null_gap: 1e-6,
            rank_floor: 1e-13,
            leading_coeff: 1e-14,
            duplicate_node: 1e-14,
            vandermonde_cond_warn: 1e12,
            amplitude_floor: 1e-300,
            newton_polish: false,
        }
    }
}

impl Tolerances {
    pub const KEYS: [&'static str; 8] = [
        "residual",
        "null_gap",
        "rank_floor",
        "leading_coeff",
        "duplicate_node",
        "vandermonde_cond_warn",
        "amplitude_floor",
        "newton_polish",
    ];

    /// Sets one field by name. `newton_polish` accepts `true/false/1/0`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ToleranceError> {
        let key_norm = key.trim().to_ascii_lowercase();
        let value = value.trim();
        if key_norm == "newton_polish" {
            self.newton_polish = match value.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" | "on" => true,
                "false" | "0" | "no" | "off" => false,
                _ => {
                    return Err(ToleranceError::InvalidValue {
                        key: key_norm,
                        value: value.to_string(),
                    })
                }
            };
            return Ok(());
        }
        let slot = match key_norm.as_str() {
            "residual" => &mut self.residual,
            "null_gap" => &mut self.null_gap,
            "rank_floor" => &mut self.rank_floor,
            "leading_coeff" => &mut self.leading_coeff,
            "duplicate_node" => &mut self.duplicate_node,
            "vandermonde_cond_warn" => &mut self.vandermonde_cond_warn,
            "amplitude_floor" => &mut self.amplitude_floor,
            _ => return Err(ToleranceError::UnknownKey(key.to_string())),
        };
        match value.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => {
                *slot = v;
                Ok(())
            }
            _ => Err(ToleranceError::InvalidValue {
                key: key_norm,
                value: value.to_string(),
            }),
        }
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, text: &str) -> Result<(), ToleranceError> {
        let (key, value) = text
            .split_once('=')
            .ok_or_else(|| ToleranceError::Malformed(text.to_string()))?;
        self.set(key, value)
    }

    /// Applies every `FRI_SPHERE_TOL_<KEY>` variable found in `vars`.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ToleranceError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (name, value) in vars {
            if let Some(key) = name.as_ref().strip_prefix(ENV_PREFIX) {
                self.set(key, value.as_ref())?;
            }
        }
        Ok(())
    }

    /// Defaults overridden by the process environment.
    pub fn from_env() -> Result<Self, ToleranceError> {
        let mut tol = Self::default();
        tol.apply_env(std::env::vars())?;
        Ok(tol)
    }
}
