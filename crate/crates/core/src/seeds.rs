//! Analytic seed curves with known curvature and torsion.
//!
//! | seed | case | κ | τ |
//! |------|------|---|---|
//! | `(0, R cos(s/R), R sin(s/R))` | timelike binormal | `1/R` | `0` |
//! | `(b s, a cos ωs, a sin ωs)`, `b² = 1 + a²ω²` | timelike curve | `aω²` | `bω` |
//! | `(b cosh ωs, a s, b sinh ωs)`, `a² + b²ω² = 1` | timelike normal | `bω²` | `-aω` |
//! | `(b sinh ωs, a s, b cosh ωs)`, `a² − b²ω² = 1` | timelike binormal | `bω²` | `-aω` |
//!
//! Helices are sampled over one period `L` and stored with a
//! [`Topology::Screw`] whose map is the symmetry `α(s + L) = M α(s) + d`.
//! The grid step is the mean chord length of the sample polygon.

use std::f64::consts::PI;

use crate::curve::{DiscreteCurve, ScrewMap, Topology};
use crate::error::{Result, VfeError};
use crate::frames::CausalCase;
use crate::lorentz::{CausalClass, LinearMap, MVector};
use crate::tolerance::Tolerances;

/// Tolerance on the unit-speed relation between seed parameters.
pub const CONSTRAINT_TOL: f64 = 1e-12;

/// Straight line through the origin with `n` samples at spacing `ds`,
/// along `x0` (timelike) or `x1` (spacelike).
pub fn line(class: CausalClass, n: usize, ds: f64, tol: &Tolerances) -> Result<DiscreteCurve> {
    let dir = match class {
        CausalClass::Timelike => MVector::E0,
        CausalClass::Spacelike => MVector::E1,
        CausalClass::Lightlike => {
            return Err(VfeError::ConstraintViolation("a line seed cannot be lightlike".into()))
        }
    };
    let samples = (0..n).map(|i| dir * (i as f64 * ds)).collect();
    DiscreteCurve::new(samples, ds, Topology::Open, tol)
}

/// Circle of radius `radius` in the `(x1, x2)` plane, closed, `n` samples.
pub fn circle(radius: f64, n: usize, tol: &Tolerances) -> Result<DiscreteCurve> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(VfeError::ConstraintViolation(format!("circle radius {radius} must be positive")));
    }
    let samples = (0..n)
        .map(|i| {
            let phi = 2.0 * PI * i as f64 / n as f64;
            MVector::new(0.0, radius * phi.cos(), radius * phi.sin())
        })
        .collect();
    DiscreteCurve::from_samples(samples, Topology::Closed, tol)
}

/// Time coefficient `b = sqrt(1 + a²ω²)` of the unit-speed timelike helix.
pub fn timelike_helix_b(a: f64, omega: f64) -> f64 {
    (1.0 + a * a * omega * omega).sqrt()
}

/// Checks `a²ω² − b² = −1`.
pub fn check_timelike_helix(a: f64, b: f64, omega: f64) -> Result<()> {
    let defect = a * a * omega * omega - b * b + 1.0;
    if !(a > 0.0 && omega > 0.0 && b > 0.0) || defect.abs() > CONSTRAINT_TOL {
        return Err(VfeError::ConstraintViolation(format!(
            "timelike helix needs a, b, omega > 0 and a^2 omega^2 - b^2 = -1 (defect {defect:.3e})"
        )));
    }
    Ok(())
}

/// One turn of the timelike helix `(b s, a cos ωs, a sin ωs)`.
pub fn timelike_helix(a: f64, omega: f64, n: usize, tol: &Tolerances) -> Result<DiscreteCurve> {
    let b = timelike_helix_b(a, omega);
    check_timelike_helix(a, b, omega)?;
    let period = 2.0 * PI / omega;
    let samples = (0..n)
        .map(|i| {
            let s = period * i as f64 / n as f64;
            MVector::new(b * s, a * (omega * s).cos(), a * (omega * s).sin())
        })
        .collect();
    let map = ScrewMap::translation(MVector::new(b * period, 0.0, 0.0));
    DiscreteCurve::from_samples(samples, Topology::Screw(map), tol)
}

/// Coefficient `a` of the unit-speed spacelike helix of the given case:
/// `a² = 1 − b²ω²` (timelike normal) or `a² = 1 + b²ω²` (timelike binormal).
pub fn spacelike_helix_a(case: CausalCase, b: f64, omega: f64) -> Result<f64> {
    let a2 = match case {
        CausalCase::SpacelikeTimelikeNormal => 1.0 - b * b * omega * omega,
        CausalCase::SpacelikeTimelikeBinormal => 1.0 + b * b * omega * omega,
        CausalCase::TimelikeCurve => {
            return Err(VfeError::CaseMismatch("spacelike helix requested for the timelike case".into()))
        }
    };
    if !(b > 0.0 && omega > 0.0) || a2 <= 0.0 {
        return Err(VfeError::ConstraintViolation(format!(
            "spacelike helix needs b, omega > 0 and b omega < 1 for a timelike normal (b = {b}, omega = {omega})"
        )));
    }
    Ok(a2.sqrt())
}

/// Checks the unit-speed relation of the spacelike helix family of `case`.
pub fn check_spacelike_helix(case: CausalCase, a: f64, b: f64, omega: f64) -> Result<()> {
    let expected = spacelike_helix_a(case, b, omega)?;
    let defect = a * a - expected * expected;
    if defect.abs() > CONSTRAINT_TOL || a <= 0.0 {
        let relation = match case {
            CausalCase::SpacelikeTimelikeNormal => "a^2 + b^2 omega^2 = 1",
            _ => "a^2 - b^2 omega^2 = 1",
        };
        return Err(VfeError::ConstraintViolation(format!("{relation} violated (defect {defect:.3e})")));
    }
    Ok(())
}

/// Spacelike helix over `s ∈ [0, length)`, with the boost in the `(x0, x2)`
/// plane by rapidity `ω length` as its period map.
pub fn spacelike_helix(case: CausalCase, b: f64, omega: f64, length: f64, n: usize, tol: &Tolerances) -> Result<DiscreteCurve> {
    let a = spacelike_helix_a(case, b, omega)?;
    if !(length.is_finite() && length > 0.0) {
        return Err(VfeError::ConstraintViolation(format!("helix length {length} must be positive")));
    }
    let point = |s: f64| {
        let (ch, sh) = ((omega * s).cosh(), (omega * s).sinh());
        match case {
            CausalCase::SpacelikeTimelikeNormal => MVector::new(b * ch, a * s, b * sh),
            _ => MVector::new(b * sh, a * s, b * ch),
        }
    };
    let samples = (0..n).map(|i| point(length * i as f64 / n as f64)).collect();
    let map = ScrewMap::new(LinearMap::boost_x0x2(omega * length), MVector::new(0.0, a * length, 0.0));
    DiscreteCurve::from_samples(samples, Topology::Screw(map), tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn helix_period_map_is_exact() {
        let tol = Tolerances::default();
        for case in [CausalCase::SpacelikeTimelikeNormal, CausalCase::SpacelikeTimelikeBinormal] {
            let c = spacelike_helix(case, 0.6, 1.0, 2.0, 32, &tol).unwrap();
            let map = c.topology().period_map().unwrap();
            let a = spacelike_helix_a(case, 0.6, 1.0).unwrap();
            let s = 2.0_f64;
            let expected = match case {
                CausalCase::SpacelikeTimelikeNormal => MVector::new(0.6 * s.cosh(), a * s, 0.6 * s.sinh()),
                _ => MVector::new(0.6 * s.sinh(), a * s, 0.6 * s.cosh()),
            };
            let image = map.linear.apply(c.samples()[0]) + map.shift;
            assert!((image - expected).max_abs() < 1e-14);
        }
    }

    #[test]
    fn constraint_violations_name_the_relation() {
        assert!(check_timelike_helix(1.0, 1.5, 1.0).is_err());
        assert!(check_timelike_helix(1.0, 2f64.sqrt(), 1.0).is_ok());
        let err = check_spacelike_helix(CausalCase::SpacelikeTimelikeNormal, 0.7, 0.6, 1.0).unwrap_err();
        assert!(err.to_string().contains("a^2 + b^2 omega^2 = 1"));
        assert!(spacelike_helix_a(CausalCase::SpacelikeTimelikeNormal, 2.0, 1.0).is_err());
        assert!(circle(-1.0, 16, &Tolerances::default()).is_err());
    }

    #[test]
    fn seeds_have_expected_class() {
        let tol = Tolerances::default();
        assert_eq!(circle(1.0, 64, &tol).unwrap().causal_class(), CausalClass::Spacelike);
        assert_eq!(timelike_helix(1.0, 1.0, 64, &tol).unwrap().causal_class(), CausalClass::Timelike);
        assert_eq!(line(CausalClass::Timelike, 8, 0.5, &tol).unwrap().causal_class(), CausalClass::Timelike);
        assert!(line(CausalClass::Lightlike, 8, 0.5, &tol).is_err());
    }
}
