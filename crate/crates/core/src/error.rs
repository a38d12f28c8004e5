use thiserror::Error;

use crate::lorentz::CausalClass;

pub type Result<T> = std::result::Result<T, VfeError>;

#[derive(Debug, Error)]
pub enum VfeError {
    #[error("causal degeneracy at sample {index}: {what} is lightlike within tolerance")]
    CausalDegeneracy { index: usize, what: &'static str },

    #[error("mixed causality: sample {index} is {found}, curve is {expected}")]
    MixedCausality {
        index: usize,
        expected: CausalClass,
        found: CausalClass,
    },

    #[error("Frenet frame undefined at sample {index} (curvature below threshold)")]
    FrenetUndefined { index: usize },

    #[error("arc-length drift {drift:.3e} exceeds tolerance {tol:.3e} at step {step}")]
    ArcLengthDrift { drift: f64, tol: f64, step: usize },

    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("hyperbolic angle {theta:.3} at sample {index} exceeds the range guard")]
    HyperbolicRange { theta: f64, index: usize },

    #[error("constraint violation: {0}")]
    ConstraintViolation(String),

    #[error("invalid curve: {0}")]
    InvalidCurve(String),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl VfeError {
    /// Module-qualified error code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            VfeError::CausalDegeneracy { .. } => "curve_geometry.causal_degeneracy",
            VfeError::MixedCausality { .. } => "curve_geometry.mixed_causality",
            VfeError::FrenetUndefined { .. } => "parallel_frames.frenet_undefined",
            VfeError::ArcLengthDrift { .. } => "vfe_evolution.arc_length_drift",
            VfeError::CaseMismatch(_) => "pde_equivalence.case_mismatch",
            VfeError::GridTooSmall(_) => "pde_equivalence.grid_too_small",
            VfeError::HyperbolicRange { .. } => "parallel_frames.hyperbolic_range",
            VfeError::ConstraintViolation(_) => "cli_runner.constraint_violation",
            VfeError::InvalidCurve(_) => "curve_geometry.invalid_curve",
            VfeError::NonFinite(_) => "vfe_evolution.non_finite",
            VfeError::Parse(_) => "cli_runner.parse",
            VfeError::Io(_) => "cli_runner.io",
            VfeError::Json(_) => "cli_runner.json",
        }
    }

    /// True for failures caused by the numerics rather than by input or
    /// configuration.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            VfeError::CausalDegeneracy { .. }
                | VfeError::MixedCausality { .. }
                | VfeError::FrenetUndefined { .. }
                | VfeError::ArcLengthDrift { .. }
                | VfeError::HyperbolicRange { .. }
                | VfeError::NonFinite(_)
        )
    }
}
