use serde::{Deserialize, Serialize};

use crate::lorentz::DEFAULT_TOL_CAUSAL;

/// Numerical thresholds shared by the geometry, frame and flow code.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Band around zero in which `<v, v>` is treated as lightlike.
    pub tol_causal: f64,
    /// Curvature below which the Frenet frame is declared undefined.
    pub kappa_eps: f64,
    /// Allowed departure of the discrete tangent length from one.
    pub unit_speed_tol: f64,
    /// Allowed orthonormality defect of computed frames.
    pub frame_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_causal: DEFAULT_TOL_CAUSAL,
            kappa_eps: 1e-9,
            unit_speed_tol: 1e-3,
            frame_tol: 1e-8,
        }
    }
}

/// Largest hyperbolic frame angle accepted before conditioning is lost.
pub const MAX_HYPERBOLIC_ANGLE: f64 = 30.0;
