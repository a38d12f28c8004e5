//! Parallel (rotation-minimizing) frames `(T, E1, E2)` and principal
//! curvatures `(k1, k2)` for the three non-lightlike cases.
//!
//! Two independent constructions are provided. [`frame_by_rotation`] rotates
//! the Frenet normal plane by the integrated torsion angle, circularly for
//! timelike curves and hyperbolically for spacelike ones.
//! [`frame_by_transport`] carries a seed vector along the discrete tangent
//! indicatrix with minimal Lorentz rotations and never needs the Frenet frame.
//!
//! In every case the principal curvatures are the frame components of `T'`,
//! `k_j = ε_{E_j} <T', E_j>`, so that
//!
//! ```text
//! timelike:                     T' = k1 E1 + k2 E2,  E1' =  k1 T,  E2' =  k2 T
//! spacelike, timelike normal:   T' = k1 E1 + k2 E2,  E1' =  k1 T,  E2' = -k2 T
//! spacelike, timelike binormal: T' = k1 E1 + k2 E2,  E1' = -k1 T,  E2' =  k2 T
//! ```
//!
//! For the hyperbolic rotation `E1 = cosh θ N + sinh θ B`,
//! `E2 = sinh θ N + cosh θ B` this gives `k1 = κ cosh θ`, `k2 = -κ sinh θ`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::curve::DiscreteCurve;
use crate::error::{Result, VfeError};
use crate::frenet::{fourth_order_derivatives, stencil_window, tangent_derivative, FrenetApparatus};
use crate::lorentz::{classify, lorentz_cross, minimal_rotation, CausalClass, MVector, MetricSign};
use crate::tolerance::{Tolerances, MAX_HYPERBOLIC_ANGLE};

/// Which of the three non-lightlike configurations a curve belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CausalCase {
    /// Timelike tangent; `E1`, `E2` spacelike.
    TimelikeCurve,
    /// Spacelike tangent, timelike normal; `E1` timelike, `E2` spacelike.
    SpacelikeTimelikeNormal,
    /// Spacelike tangent, timelike binormal; `E1` spacelike, `E2` timelike.
    SpacelikeTimelikeBinormal,
}

impl CausalCase {
    pub const ALL: [CausalCase; 3] = [
        CausalCase::TimelikeCurve,
        CausalCase::SpacelikeTimelikeNormal,
        CausalCase::SpacelikeTimelikeBinormal,
    ];

    /// Metric signs of `(T, E1, E2)`, which coincide with those of `(T, N, B)`.
    pub fn signs(self) -> [MetricSign; 3] {
        use MetricSign::{Minus, Plus};
        match self {
            CausalCase::TimelikeCurve => [Minus, Plus, Plus],
            CausalCase::SpacelikeTimelikeNormal => [Plus, Minus, Plus],
            CausalCase::SpacelikeTimelikeBinormal => [Plus, Plus, Minus],
        }
    }

    pub fn from_signs(eps: [MetricSign; 3]) -> Option<Self> {
        CausalCase::ALL.into_iter().find(|c| c.signs() == eps)
    }

    pub fn tangent_class(self) -> CausalClass {
        self.signs()[0].class()
    }

    pub fn is_timelike(self) -> bool {
        self == CausalCase::TimelikeCurve
    }

    /// Sign `σ` in `θ' = σ τ`.
    pub fn torsion_sign(self) -> f64 {
        if self.is_timelike() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CausalCase::TimelikeCurve => "timelike-curve",
            CausalCase::SpacelikeTimelikeNormal => "spacelike-timelike-normal",
            CausalCase::SpacelikeTimelikeBinormal => "spacelike-timelike-binormal",
        }
    }
}

impl fmt::Display for CausalCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for CausalCase {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        CausalCase::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| format!("unknown case '{s}'"))
    }
}

/// Coefficients `a_ij` of `X_i' = Σ_j a_ij X_j` for an orthonormal frame
/// with metric signs `signs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameCoefficientMatrix {
    pub a: [[f64; 3]; 3],
    pub signs: [MetricSign; 3],
}

impl FrameCoefficientMatrix {
    pub fn new(a: [[f64; 3]; 3], signs: [MetricSign; 3]) -> Self {
        Self { a, signs }
    }

    /// Derivative matrix in `s` of the parallel frame for `case`.
    pub fn frame_s(case: CausalCase, k1: f64, k2: f64) -> Self {
        let a = match case {
            CausalCase::TimelikeCurve => [[0.0, k1, k2], [k1, 0.0, 0.0], [k2, 0.0, 0.0]],
            CausalCase::SpacelikeTimelikeNormal => [[0.0, k1, k2], [k1, 0.0, 0.0], [-k2, 0.0, 0.0]],
            CausalCase::SpacelikeTimelikeBinormal => [[0.0, k1, k2], [-k1, 0.0, 0.0], [k2, 0.0, 0.0]],
        };
        Self::new(a, case.signs())
    }

    /// Largest `|ε_j a_ij + ε_i a_ji|`; zero for the derivative matrix of an
    /// orthonormal frame.
    pub fn semi_skew_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                let v = self.signs[j].value() * self.a[i][j] + self.signs[i].value() * self.a[j][i];
                worst = worst.max(v.abs());
            }
        }
        worst
    }

    pub fn apply(&self, frame: &[MVector; 3]) -> [MVector; 3] {
        let mut out = [MVector::ZERO; 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = frame[0] * self.a[i][0] + frame[1] * self.a[i][1] + frame[2] * self.a[i][2];
        }
        out
    }

    /// Largest component of `derivative − A · frame`.
    pub fn residual(&self, derivative: &[MVector; 3], frame: &[MVector; 3]) -> f64 {
        let predicted = self.apply(frame);
        derivative
            .iter()
            .zip(predicted)
            .map(|(d, p)| (*d - p).max_abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &FrameCoefficientMatrix) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((self.a[i][j] - other.a[i][j]).abs());
            }
        }
        worst
    }
}

/// A parallel frame field along a discrete curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParallelFrameField {
    pub t: Vec<MVector>,
    pub e1: Vec<MVector>,
    pub e2: Vec<MVector>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    /// Angle (circular or hyperbolic) of `(E1, E2)` relative to `(N, B)`;
    /// NaN where the Frenet frame is undefined.
    pub theta: Vec<f64>,
    pub case: CausalCase,
    pub ds: f64,
}

impl ParallelFrameField {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn frame(&self, i: usize) -> [MVector; 3] {
        [self.t[i], self.e1[i], self.e2[i]]
    }

    /// Largest orthonormality defect of `(T, E1, E2)` against the case signs.
    pub fn orthonormality_defect(&self) -> f64 {
        let signs = self.case.signs();
        (0..self.len())
            .map(|i| {
                let f = self.frame(i);
                let mut worst = 0.0_f64;
                for a in 0..3 {
                    for b in 0..3 {
                        let target = if a == b { signs[a].value() } else { 0.0 };
                        worst = worst.max((f[a].dot(f[b]) - target).abs());
                    }
                }
                worst
            })
            .fold(0.0, f64::max)
    }

    /// Pointwise `κ²` reconstructed from the principal curvatures:
    /// `k1² + k2²` (timelike) or `k1² − k2²` (spacelike cases).
    pub fn kappa_squared(&self) -> Vec<f64> {
        let sign = if self.case.is_timelike() { 1.0 } else { -1.0 };
        self.k1.iter().zip(&self.k2).map(|(a, b)| a * a + sign * b * b).collect()
    }

    /// Applies the constant gauge rotation `θ ↦ θ + angle` to the whole field.
    pub fn rotated(&self, angle: f64) -> ParallelFrameField {
        let mut out = self.clone();
        let timelike = self.case.is_timelike();
        for i in 0..self.len() {
            let (e1, e2) = rotate_pair(self.case, self.e1[i], self.e2[i], angle);
            out.e1[i] = e1;
            out.e2[i] = e2;
            let (k1, k2) = (self.k1[i], self.k2[i]);
            if timelike {
                let (s, c) = angle.sin_cos();
                out.k1[i] = c * k1 - s * k2;
                out.k2[i] = s * k1 + c * k2;
            } else {
                let (c, s) = (angle.cosh(), angle.sinh());
                out.k1[i] = c * k1 - s * k2;
                out.k2[i] = c * k2 - s * k1;
            }
            out.theta[i] = self.theta[i] + angle;
        }
        out
    }
}

/// Rotation of the normal pair by `angle` that sends the frame at `θ` to the
/// frame at `θ + angle`.
pub fn rotate_pair(case: CausalCase, e1: MVector, e2: MVector, angle: f64) -> (MVector, MVector) {
    if case.is_timelike() {
        let (s, c) = angle.sin_cos();
        (e1 * c - e2 * s, e1 * s + e2 * c)
    } else {
        let (c, s) = (angle.cosh(), angle.sinh());
        (e1 * c + e2 * s, e1 * s + e2 * c)
    }
}

/// Cumulative trapezoidal integral of `σ τ` starting from `theta0`.
pub fn theta_from_torsion(fa: &FrenetApparatus, case: CausalCase, theta0: f64) -> Result<Vec<f64>> {
    if let Some(index) = fa.defined.iter().position(|d| !d) {
        return Err(VfeError::FrenetUndefined { index });
    }
    check_case(fa, case)?;
    let sigma = case.torsion_sign();
    let mut theta = Vec::with_capacity(fa.len());
    theta.push(theta0);
    for i in 1..fa.len() {
        let prev = theta[i - 1];
        theta.push(prev + sigma * 0.5 * (fa.tau[i - 1] + fa.tau[i]) * fa.ds);
    }
    Ok(theta)
}

fn check_case(fa: &FrenetApparatus, case: CausalCase) -> Result<()> {
    match fa.case() {
        Some(c) if c == case => Ok(()),
        Some(c) => Err(VfeError::CaseMismatch(format!("curve is {c}, requested {case}"))),
        None => Err(VfeError::FrenetUndefined { index: 0 }),
    }
}

/// Parallel frame obtained by rotating `(N, B)` through `theta`.
pub fn frame_by_rotation(fa: &FrenetApparatus, theta: &[f64], case: CausalCase) -> Result<ParallelFrameField> {
    if let Some(index) = fa.defined.iter().position(|d| !d) {
        return Err(VfeError::FrenetUndefined { index });
    }
    check_case(fa, case)?;
    if theta.len() != fa.len() {
        return Err(VfeError::InvalidCurve(format!(
            "{} angles for {} samples",
            theta.len(),
            fa.len()
        )));
    }
    let len = fa.len();
    let mut e1 = Vec::with_capacity(len);
    let mut e2 = Vec::with_capacity(len);
    let mut k1 = Vec::with_capacity(len);
    let mut k2 = Vec::with_capacity(len);
    for i in 0..len {
        let (th, kappa, n, b) = (theta[i], fa.kappa[i], fa.n[i], fa.b[i]);
        if case.is_timelike() {
            let (s, c) = th.sin_cos();
            e1.push(n * c - b * s);
            e2.push(n * s + b * c);
            k1.push(kappa * c);
            k2.push(kappa * s);
        } else {
            if th.abs() > MAX_HYPERBOLIC_ANGLE {
                return Err(VfeError::HyperbolicRange { theta: th, index: i });
            }
            let (c, s) = (th.cosh(), th.sinh());
            e1.push(n * c + b * s);
            e2.push(n * s + b * c);
            k1.push(kappa * c);
            k2.push(-kappa * s);
        }
    }
    Ok(ParallelFrameField {
        t: fa.t.clone(),
        e1,
        e2,
        k1,
        k2,
        theta: theta.to_vec(),
        case,
        ds: fa.ds,
    })
}

/// Picks a unit vector orthogonal to `t` with the sign required of `E1` in
/// `case`: the Frenet normal rotated by `theta0` when it exists, otherwise a
/// coordinate direction projected into the normal plane.
pub fn default_seed(t0: MVector, normal: Option<MVector>, case: CausalCase, theta0: f64, tol: &Tolerances) -> Result<MVector> {
    if let Some(n) = normal {
        let b = lorentz_cross(t0, n);
        return Ok(rotate_pair(case, n, b, theta0).0);
    }
    let want = case.signs()[1];
    let eps_t = case.signs()[0].value();
    for axis in [MVector::E0, MVector::E1, MVector::E2] {
        let v = axis - t0 * (eps_t * axis.dot(t0));
        if let Some((u, sign)) = crate::lorentz::unit(v, tol.tol_causal.max(1e-6)) {
            if sign == want {
                let b = lorentz_cross(t0, u);
                return Ok(rotate_pair(case, u, b, theta0).0);
            }
        }
    }
    Err(VfeError::CausalDegeneracy { index: 0, what: "seed vector" })
}

/// Parallel frame obtained by transporting `seed_e1` along the curve.
///
/// Between neighbouring samples the frame is moved by the proper isometry
/// that takes `T(i)` to `T(i+1)` and fixes their common orthogonal
/// complement; `E1` is then re-orthonormalized against `T(i+1)` and
/// `E2 = T ×_L E1`. No curvature threshold is involved, so straight
/// stretches are handled.
pub fn frame_by_transport(c: &DiscreteCurve, seed_e1: MVector, case: CausalCase, tol: &Tolerances) -> Result<ParallelFrameField> {
    if c.causal_class() != case.tangent_class() {
        return Err(VfeError::CaseMismatch(format!(
            "{} curve cannot carry a {case} frame",
            c.causal_class()
        )));
    }
    let t = c.tangent_field(tol)?;
    transport_along(c, &t, seed_e1, case, tol)
}

pub(crate) fn transport_along(
    c: &DiscreteCurve,
    t: &[MVector],
    seed_e1: MVector,
    case: CausalCase,
    tol: &Tolerances,
) -> Result<ParallelFrameField> {
    let len = t.len();
    let signs = case.signs();
    let (eps_t, eps_1, eps_2) = (signs[0].value(), signs[1], signs[2]);

    let normalize = |v: MVector, tangent: MVector, index: usize| -> Result<MVector> {
        let v = v - tangent * (eps_t * v.dot(tangent));
        let class = classify(v, tol.tol_causal);
        if class != eps_1.class() {
            return Err(VfeError::CausalDegeneracy { index, what: "transported E1" });
        }
        Ok(v * (1.0 / v.norm()))
    };

    let mut e1 = Vec::with_capacity(len);
    e1.push(normalize(seed_e1, t[0], 0)?);
    for i in 1..len {
        let moved = minimal_rotation(t[i - 1], t[i], e1[i - 1], tol.tol_causal)
            .ok_or(VfeError::CausalDegeneracy { index: i, what: "tangent step" })?;
        e1.push(normalize(moved, t[i], i)?);
    }
    let e2: Vec<MVector> = t.iter().zip(&e1).map(|(ti, ei)| lorentz_cross(*ti, *ei)).collect();
    if let Some(index) = e2.iter().position(|v| classify(*v, tol.tol_causal) != eps_2.class()) {
        return Err(VfeError::CausalDegeneracy { index, what: "E2" });
    }

    let ts = tangent_derivative(c, t);
    let k1: Vec<f64> = ts.iter().zip(&e1).map(|(d, e)| eps_1.value() * d.dot(*e)).collect();
    let k2: Vec<f64> = ts.iter().zip(&e2).map(|(d, e)| eps_2.value() * d.dot(*e)).collect();
    let theta = frame_angles(case, &k1, &k2, tol.kappa_eps);
    Ok(ParallelFrameField {
        t: t.to_vec(),
        e1,
        e2,
        k1,
        k2,
        theta,
        case,
        ds: c.ds(),
    })
}

/// Recovers the angle of `(E1, E2)` relative to `(N, B)` from `(k1, k2)`.
/// Circular angles are unwrapped along the curve.
fn frame_angles(case: CausalCase, k1: &[f64], k2: &[f64], kappa_eps: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k1.len());
    let mut prev: Option<f64> = None;
    for (&a, &b) in k1.iter().zip(k2) {
        let th = if case.is_timelike() {
            if a.hypot(b) < kappa_eps {
                f64::NAN
            } else {
                let mut th = b.atan2(a);
                if let Some(p) = prev {
                    th += (2.0 * std::f64::consts::PI) * ((p - th) / (2.0 * std::f64::consts::PI)).round();
                }
                th
            }
        } else if a > kappa_eps && b.abs() < a {
            (-b / a).atanh()
        } else {
            f64::NAN
        };
        if th.is_finite() {
            prev = Some(th);
        }
        out.push(th);
    }
    out
}

/// The analytic `s`-derivative matrix at sample `i`.
pub fn frame_s_matrix(pf: &ParallelFrameField, i: usize) -> FrameCoefficientMatrix {
    FrameCoefficientMatrix::frame_s(pf.case, pf.k1[i], pf.k2[i])
}

/// Pointwise residual of the `s`-ODE of the frame: a five-point derivative of
/// `(T, E1, E2)` minus [`frame_s_matrix`] applied to the frame. Only interior
/// samples (two away from either end) are evaluated, since transported frames
/// on closed curves need not close up.
pub fn frame_ode_residual(pf: &ParallelFrameField) -> Vec<Option<f64>> {
    let len = pf.len();
    let fields = [pf.t.clone(), pf.e1.clone(), pf.e2.clone()];
    let topology = crate::curve::Topology::Open;
    (0..len)
        .map(|i| {
            stencil_window(len, i, false)?;
            let d = fourth_order_derivatives(&fields, &topology, pf.ds, i);
            Some(frame_s_matrix(pf, i).residual(&d, &pf.frame(i)))
        })
        .collect()
}

/// Largest componentwise difference between two frame fields.
pub fn frame_difference(a: &ParallelFrameField, b: &ParallelFrameField) -> f64 {
    (0..a.len())
        .map(|i| {
            let (fa, fb) = (a.frame(i), b.frame(i));
            (0..3).map(|j| (fa[j] - fb[j]).max_abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// `arg((k1 + i k2) · conj(κ e^{i ∫τ}))` along a timelike curve, with the
/// torsion integrated by the trapezoidal rule. Constant in `s` when the
/// parallel frame is consistent with the Frenet data.
pub fn hasimoto_phase(pf: &ParallelFrameField, fa: &FrenetApparatus) -> Result<Vec<f64>> {
    if !pf.case.is_timelike() {
        return Err(VfeError::CaseMismatch("Hasimoto phase is defined for timelike curves".into()));
    }
    let integral = theta_from_torsion(fa, CausalCase::TimelikeCurve, 0.0)?;
    let mut out = Vec::with_capacity(pf.len());
    let mut prev: Option<f64> = None;
    for i in 0..pf.len() {
        let q = num_complex::Complex64::new(pf.k1[i], pf.k2[i]);
        let h = num_complex::Complex64::from_polar(fa.kappa[i], integral[i]);
        let mut phase = (q * h.conj()).arg();
        if let Some(p) = prev {
            phase += (2.0 * std::f64::consts::PI) * ((p - phase) / (2.0 * std::f64::consts::PI)).round();
        }
        prev = Some(phase);
        out.push(phase);
    }
    Ok(out)
}

/// Pointwise ratios `q / (κ e^{∫τ})` and `r / (κ e^{-∫τ})` between the
/// heat-system pair built from `(k1, k2)` and the exponential torsion
/// variables, for spacelike curves.
pub fn heat_variable_ratios(pf: &ParallelFrameField, fa: &FrenetApparatus) -> Result<(Vec<f64>, Vec<f64>)> {
    if pf.case.is_timelike() {
        return Err(VfeError::CaseMismatch("heat variables are defined for spacelike curves".into()));
    }
    let integral = theta_from_torsion(fa, CausalCase::TimelikeCurve, 0.0)?;
    let r_sign = if pf.case == CausalCase::SpacelikeTimelikeNormal { -1.0 } else { 1.0 };
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    let mut qr = Vec::with_capacity(pf.len());
    let mut rr = Vec::with_capacity(pf.len());
    for i in 0..pf.len() {
        let q = inv_sqrt2 * (pf.k1[i] + pf.k2[i]);
        let r = r_sign * inv_sqrt2 * (pf.k1[i] - pf.k2[i]);
        qr.push(q / (fa.kappa[i] * integral[i].exp()));
        rr.push(r / (fa.kappa[i] * (-integral[i]).exp()));
    }
    Ok((qr, rr))
}
