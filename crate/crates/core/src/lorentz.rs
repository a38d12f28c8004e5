//! Vector algebra in Minkowski 3-space.
//!
//! Components are ordered `(x0, x1, x2)` with `x0` the time component, so the
//! metric is `diag(-1, 1, 1)`.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use serde::{Deserialize, Serialize};

/// Default band around zero inside which a squared norm counts as lightlike.
pub const DEFAULT_TOL_CAUSAL: f64 = 1e-10;

/// A vector of Minkowski 3-space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MVector {
    pub x0: f64,
    pub x1: f64,
    pub x2: f64,
}

impl MVector {
    pub const ZERO: MVector = MVector::new(0.0, 0.0, 0.0);
    pub const E0: MVector = MVector::new(1.0, 0.0, 0.0);
    pub const E1: MVector = MVector::new(0.0, 1.0, 0.0);
    pub const E2: MVector = MVector::new(0.0, 0.0, 1.0);

    pub const fn new(x0: f64, x1: f64, x2: f64) -> Self {
        Self { x0, x1, x2 }
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x0, self.x1, self.x2]
    }

    pub fn is_finite(self) -> bool {
        self.x0.is_finite() && self.x1.is_finite() && self.x2.is_finite()
    }

    /// Lorentzian inner product `-x0 y0 + x1 y1 + x2 y2`.
    #[inline]
    pub fn dot(self, other: MVector) -> f64 {
        lorentz_inner(self, other)
    }

    #[inline]
    pub fn cross(self, other: MVector) -> MVector {
        lorentz_cross(self, other)
    }

    /// Squared Lorentzian length `<x, x>`; negative for timelike vectors.
    #[inline]
    pub fn square(self) -> f64 {
        lorentz_inner(self, self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        lorentz_norm(self)
    }

    /// Largest absolute component. Used for scale-relative tolerances.
    pub fn max_abs(self) -> f64 {
        self.x0.abs().max(self.x1.abs()).max(self.x2.abs())
    }

    /// Plain Euclidean length of the component triple.
    pub fn euclidean_norm(self) -> f64 {
        (self.x0 * self.x0 + self.x1 * self.x1 + self.x2 * self.x2).sqrt()
    }
}

impl fmt::Display for MVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x0, self.x1, self.x2)
    }
}

impl Add for MVector {
    type Output = MVector;
    #[inline]
    fn add(self, o: MVector) -> MVector {
        MVector::new(self.x0 + o.x0, self.x1 + o.x1, self.x2 + o.x2)
    }
}

impl AddAssign for MVector {
    #[inline]
    fn add_assign(&mut self, o: MVector) {
        *self = *self + o;
    }
}

impl Sub for MVector {
    type Output = MVector;
    #[inline]
    fn sub(self, o: MVector) -> MVector {
        MVector::new(self.x0 - o.x0, self.x1 - o.x1, self.x2 - o.x2)
    }
}

impl SubAssign for MVector {
    #[inline]
    fn sub_assign(&mut self, o: MVector) {
        *self = *self - o;
    }
}

impl Neg for MVector {
    type Output = MVector;
    #[inline]
    fn neg(self) -> MVector {
        MVector::new(-self.x0, -self.x1, -self.x2)
    }
}

impl Mul<f64> for MVector {
    type Output = MVector;
    #[inline]
    fn mul(self, s: f64) -> MVector {
        MVector::new(self.x0 * s, self.x1 * s, self.x2 * s)
    }
}

impl Mul<MVector> for f64 {
    type Output = MVector;
    #[inline]
    fn mul(self, v: MVector) -> MVector {
        v * self
    }
}

/// Causal character of a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalClass {
    Spacelike,
    Timelike,
    Lightlike,
}

impl fmt::Display for CausalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            CausalClass::Spacelike => "spacelike",
            CausalClass::Timelike => "timelike",
            CausalClass::Lightlike => "lightlike",
        };
        f.write_str(s)
    }
}

/// The sign `<X, X>` of a unit non-lightlike vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MetricSign {
    Minus,
    Plus,
}

impl MetricSign {
    pub fn value(self) -> f64 {
        match self {
            MetricSign::Minus => -1.0,
            MetricSign::Plus => 1.0,
        }
    }

    pub fn of_class(class: CausalClass) -> Option<Self> {
        match class {
            CausalClass::Spacelike => Some(MetricSign::Plus),
            CausalClass::Timelike => Some(MetricSign::Minus),
            CausalClass::Lightlike => None,
        }
    }

    pub fn class(self) -> CausalClass {
        match self {
            MetricSign::Minus => CausalClass::Timelike,
            MetricSign::Plus => CausalClass::Spacelike,
        }
    }
}

#[inline]
pub fn lorentz_inner(x: MVector, y: MVector) -> f64 {
    -x.x0 * y.x0 + x.x1 * y.x1 + x.x2 * y.x2
}

/// `sqrt(|<x, x>|)`; zero for lightlike and null vectors.
#[inline]
pub fn lorentz_norm(x: MVector) -> f64 {
    lorentz_inner(x, x).abs().sqrt()
}

/// Lorentzian vector product. Satisfies `<x × y, z> = det(x, y, z)`.
#[inline]
pub fn lorentz_cross(x: MVector, y: MVector) -> MVector {
    MVector::new(
        -x.x1 * y.x2 + x.x2 * y.x1,
        x.x2 * y.x0 - x.x0 * y.x2,
        x.x0 * y.x1 - x.x1 * y.x0,
    )
}

pub fn classify(v: MVector, tol_causal: f64) -> CausalClass {
    let q = lorentz_inner(v, v);
    if q > tol_causal {
        CausalClass::Spacelike
    } else if q < -tol_causal {
        CausalClass::Timelike
    } else {
        CausalClass::Lightlike
    }
}

/// Normalizes a non-lightlike vector to unit Lorentz length. Returns `None`
/// when `|<v, v>|` falls inside the causal band.
pub fn unit(v: MVector, tol_causal: f64) -> Option<(MVector, MetricSign)> {
    let class = classify(v, tol_causal);
    let sign = MetricSign::of_class(class)?;
    Some((v * (1.0 / lorentz_norm(v)), sign))
}

/// Row-major 3×3 linear map acting on [`MVector`]s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearMap(pub [[f64; 3]; 3]);

impl LinearMap {
    pub const IDENTITY: LinearMap = LinearMap([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);

    pub fn apply(&self, v: MVector) -> MVector {
        let m = &self.0;
        MVector::new(
            m[0][0] * v.x0 + m[0][1] * v.x1 + m[0][2] * v.x2,
            m[1][0] * v.x0 + m[1][1] * v.x1 + m[1][2] * v.x2,
            m[2][0] * v.x0 + m[2][1] * v.x1 + m[2][2] * v.x2,
        )
    }

    pub fn compose(&self, other: &LinearMap) -> LinearMap {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum();
            }
        }
        LinearMap(out)
    }

    /// Rotation by `angle` in the spacelike `(x1, x2)` plane.
    pub fn rotation_x1x2(angle: f64) -> LinearMap {
        let (s, c) = angle.sin_cos();
        LinearMap([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    }

    /// Boost with rapidity `phi` in the timelike `(x0, x2)` plane.
    pub fn boost_x0x2(phi: f64) -> LinearMap {
        let (c, s) = (phi.cosh(), phi.sinh());
        LinearMap([[c, 0.0, s], [0.0, 1.0, 0.0], [s, 0.0, c]])
    }

    /// Inverse of a Lorentz transformation: `η Mᵀ η`.
    pub fn lorentz_inverse(&self) -> LinearMap {
        let eta = [-1.0, 1.0, 1.0];
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = eta[i] * self.0[j][i] * eta[j];
            }
        }
        LinearMap(out)
    }

    /// Largest deviation of `Mᵀ η M` from `η`.
    pub fn lorentz_defect(&self) -> f64 {
        let cols: Vec<MVector> = (0..3)
            .map(|j| MVector::new(self.0[0][j], self.0[1][j], self.0[2][j]))
            .collect();
        let eta = [-1.0, 1.0, 1.0];
        let mut worst = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                let target = if i == j { eta[i] } else { 0.0 };
                worst = worst.max((cols[i].dot(cols[j]) - target).abs());
            }
        }
        worst
    }
}

/// Lorentzian reflection through the hyperplane orthogonal to `w`.
#[inline]
fn reflect(x: MVector, w: MVector, ww: f64) -> MVector {
    x - w * (2.0 * x.dot(w) / ww)
}

/// The proper isometry that carries unit vector `u` onto unit vector `v`
/// (same causal sign) and fixes the orthogonal complement of `span{u, v}`,
/// applied to `x`. Built as the product of the reflections through `u` and
/// `u + v`.
///
/// Returns `None` when `u + v` is lightlike, i.e. the two vectors lie in
/// different cones or are antipodal.
pub fn minimal_rotation(u: MVector, v: MVector, x: MVector, tol_causal: f64) -> Option<MVector> {
    let uu = u.square();
    let w = u + v;
    let ww = w.square();
    if ww.abs() <= tol_causal || uu.abs() <= tol_causal {
        return None;
    }
    Some(reflect(reflect(x, u, uu), w, ww))
}

/// Component-wise maximum absolute difference.
pub fn max_abs_diff(a: MVector, b: MVector) -> f64 {
    (a - b).max_abs()
}
