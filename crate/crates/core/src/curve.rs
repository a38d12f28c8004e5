//! Discrete curves sampled at uniform Lorentzian arclength.
//!
//! A curve stores its samples, the arclength step `ds`, and a [`Topology`]
//! that tells stencils how to extend the samples past either end. Besides
//! open and closed curves, a [`Topology::Screw`] curve repeats itself up to a
//! proper isometry `x ↦ L x + d`, which is how helices are represented with a
//! finite number of samples.

use serde::{Deserialize, Serialize};

use crate::error::{Result, VfeError};
use crate::lorentz::{classify, lorentz_norm, CausalClass, LinearMap, MVector};
use crate::tolerance::Tolerances;

/// Fewest samples a curve may have.
pub const MIN_SAMPLES: usize = 8;

/// Quasi-periodicity map `x ↦ linear·x + shift` relating sample `i + n` to
/// sample `i`. `linear` must be a proper Lorentz transformation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScrewMap {
    pub linear: LinearMap,
    pub inverse: LinearMap,
    pub shift: MVector,
}

impl ScrewMap {
    pub fn new(linear: LinearMap, shift: MVector) -> Self {
        Self {
            linear,
            inverse: linear.lorentz_inverse(),
            shift,
        }
    }

    pub fn translation(shift: MVector) -> Self {
        Self::new(LinearMap::IDENTITY, shift)
    }

    /// True when the linear part is the identity, i.e. the curve is periodic
    /// up to a pure translation.
    pub fn is_translation(&self) -> bool {
        self.linear == LinearMap::IDENTITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Topology {
    Open,
    Closed,
    Screw(ScrewMap),
}

impl Topology {
    pub fn is_periodic(&self) -> bool {
        !matches!(self, Topology::Open)
    }

    /// The isometry carrying sample `i` to sample `i + n`, if any.
    pub fn period_map(&self) -> Option<ScrewMap> {
        match self {
            Topology::Open => None,
            Topology::Closed => Some(ScrewMap::translation(MVector::ZERO)),
            Topology::Screw(m) => Some(*m),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::Open => "open",
            Topology::Closed => "closed",
            Topology::Screw(_) => "screw",
        }
    }
}

/// How a sampled field transforms under the period map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    /// Positions: the full affine map applies.
    Point,
    /// Tangent-space vectors: only the linear part applies.
    Vector,
}

/// Value of a sampled field at any integer index, extended through the
/// period map. Only valid for periodic topologies.
pub fn extended(values: &[MVector], i: isize, map: &ScrewMap, kind: FieldKind) -> MVector {
    let n = values.len() as isize;
    let wraps = i.div_euclid(n);
    let mut v = values[i.rem_euclid(n) as usize];
    let (m, shift) = if wraps >= 0 {
        (&map.linear, map.shift)
    } else {
        (&map.inverse, -map.inverse.apply(map.shift))
    };
    for _ in 0..wraps.unsigned_abs() {
        v = m.apply(v);
        if kind == FieldKind::Point {
            v += shift;
        }
    }
    v
}

/// Second-order first derivative of a sampled vector field. Periodic
/// topologies use centered stencils everywhere; open curves switch to
/// one-sided second-order stencils at the two ends.
pub fn derivative(values: &[MVector], ds: f64, topology: &Topology, kind: FieldKind) -> Vec<MVector> {
    let n = values.len();
    let inv = 1.0 / (2.0 * ds);
    match topology.period_map() {
        Some(map) => (0..n as isize)
            .map(|i| {
                (extended(values, i + 1, &map, kind) - extended(values, i - 1, &map, kind)) * inv
            })
            .collect(),
        None => (0..n)
            .map(|i| {
                if i == 0 {
                    (values[0] * -3.0 + values[1] * 4.0 - values[2]) * inv
                } else if i == n - 1 {
                    (values[n - 1] * 3.0 - values[n - 2] * 4.0 + values[n - 3]) * inv
                } else {
                    (values[i + 1] - values[i - 1]) * inv
                }
            })
            .collect(),
    }
}

/// Second-order second derivative of a sampled vector field.
pub fn second_derivative(values: &[MVector], ds: f64, topology: &Topology, kind: FieldKind) -> Vec<MVector> {
    let n = values.len();
    let inv = 1.0 / (ds * ds);
    match topology.period_map() {
        Some(map) => (0..n as isize)
            .map(|i| {
                (extended(values, i + 1, &map, kind) - extended(values, i, &map, kind) * 2.0
                    + extended(values, i - 1, &map, kind))
                    * inv
            })
            .collect(),
        None => (0..n)
            .map(|i| {
                if i == 0 {
                    (values[0] * 2.0 - values[1] * 5.0 + values[2] * 4.0 - values[3]) * inv
                } else if i == n - 1 {
                    (values[n - 1] * 2.0 - values[n - 2] * 5.0 + values[n - 3] * 4.0 - values[n - 4]) * inv
                } else {
                    (values[i + 1] - values[i] * 2.0 + values[i - 1]) * inv
                }
            })
            .collect(),
    }
}

/// Second-order first derivative of a scalar sequence, one-sided at the ends.
pub fn scalar_derivative(values: &[f64], h: f64) -> Vec<f64> {
    let n = values.len();
    let inv = 1.0 / (2.0 * h);
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) * inv
            } else if i == n - 1 {
                (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) * inv
            } else {
                (values[i + 1] - values[i - 1]) * inv
            }
        })
        .collect()
}

/// A curve sampled at uniform arclength step `ds`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteCurve {
    samples: Vec<MVector>,
    ds: f64,
    topology: Topology,
    causal_class: CausalClass,
}

impl DiscreteCurve {
    /// Builds and validates a curve: enough finite samples, a uniform
    /// non-lightlike causal class, and chords of length `ds` within
    /// `tol.unit_speed_tol` (relative).
    pub fn new(samples: Vec<MVector>, ds: f64, topology: Topology, tol: &Tolerances) -> Result<Self> {
        let curve = Self::classified(samples, ds, topology, tol)?;
        let defect = curve.chord_speed_defect();
        if defect > tol.unit_speed_tol {
            return Err(VfeError::InvalidCurve(format!(
                "chord lengths depart from ds by {defect:.3e} (tolerance {:.1e})",
                tol.unit_speed_tol
            )));
        }
        Ok(curve)
    }

    /// Like [`DiscreteCurve::new`] but with `ds` set to the mean Lorentzian
    /// chord length of the sample polygon.
    pub fn from_samples(samples: Vec<MVector>, topology: Topology, tol: &Tolerances) -> Result<Self> {
        let ds = polygon_step(&samples, &topology)?;
        Self::new(samples, ds, topology, tol)
    }

    /// Validation without the unit-speed check. The flow uses this so that
    /// speed drift can be reported as its own error.
    pub(crate) fn classified(samples: Vec<MVector>, ds: f64, topology: Topology, tol: &Tolerances) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(VfeError::InvalidCurve(format!(
                "{} samples, at least {MIN_SAMPLES} required",
                samples.len()
            )));
        }
        if !(ds.is_finite() && ds > 0.0) {
            return Err(VfeError::InvalidCurve(format!("arclength step {ds} must be positive")));
        }
        if let Some(i) = samples.iter().position(|p| !p.is_finite()) {
            return Err(VfeError::NonFinite(format!("sample {i}")));
        }
        let raw = derivative(&samples, ds, &topology, FieldKind::Point);
        let causal_class = uniform_class(&raw, tol.tol_causal, "tangent")?;
        Ok(Self {
            samples,
            ds,
            topology,
            causal_class,
        })
    }

    pub fn samples(&self) -> &[MVector] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn causal_class(&self) -> CausalClass {
        self.causal_class
    }

    /// Arclength coordinate of sample `i`.
    pub fn s(&self, i: usize) -> f64 {
        i as f64 * self.ds
    }

    /// Centered difference `α_s` without normalization.
    pub fn raw_tangents(&self) -> Vec<MVector> {
        derivative(&self.samples, self.ds, &self.topology, FieldKind::Point)
    }

    /// Centered second difference `α_ss`.
    pub fn second_differences(&self) -> Vec<MVector> {
        second_derivative(&self.samples, self.ds, &self.topology, FieldKind::Point)
    }

    /// `max_i | ‖α_s(i)‖ − 1 |` with `α_s` the centered difference.
    pub fn unit_speed_drift(&self) -> f64 {
        self.raw_tangents()
            .iter()
            .map(|t| (lorentz_norm(*t) - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `max_i | ‖α(i+1) − α(i)‖ / ds − 1 |` over all chords (including the
    /// closing chord of periodic curves).
    pub fn chord_speed_defect(&self) -> f64 {
        let n = self.samples.len();
        let map = self.topology.period_map();
        let count = if map.is_some() { n } else { n - 1 };
        (0..count)
            .map(|i| {
                let next = match &map {
                    Some(m) => extended(&self.samples, i as isize + 1, m, FieldKind::Point),
                    None => self.samples[i + 1],
                };
                (lorentz_norm(next - self.samples[i]) / self.ds - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Unit tangent field. Fails if a raw difference is lightlike.
    pub fn tangent_field(&self, tol: &Tolerances) -> Result<Vec<MVector>> {
        tangent_field(self, tol)
    }
}

/// Unit tangent field `T = α_s / ‖α_s‖` from centered differences
/// (periodic wrap for closed curves, one-sided at open ends).
pub fn tangent_field(c: &DiscreteCurve, tol: &Tolerances) -> Result<Vec<MVector>> {
    c.raw_tangents()
        .into_iter()
        .enumerate()
        .map(|(i, t)| {
            let norm = lorentz_norm(t);
            if norm < tol.tol_causal || classify(t, tol.tol_causal) == CausalClass::Lightlike {
                Err(VfeError::CausalDegeneracy { index: i, what: "tangent" })
            } else {
                Ok(t * (1.0 / norm))
            }
        })
        .collect()
}

fn uniform_class(vectors: &[MVector], tol_causal: f64, what: &'static str) -> Result<CausalClass> {
    let mut expected = None;
    for (index, v) in vectors.iter().enumerate() {
        let class = classify(*v, tol_causal);
        if class == CausalClass::Lightlike {
            return Err(VfeError::CausalDegeneracy { index, what });
        }
        match expected {
            None => expected = Some(class),
            Some(e) if e != class => {
                return Err(VfeError::MixedCausality {
                    index,
                    expected: e,
                    found: class,
                })
            }
            _ => {}
        }
    }
    expected.ok_or_else(|| VfeError::InvalidCurve("no samples".into()))
}

/// Mean Lorentzian chord length of the sample polygon (including the closing
/// chord for periodic topologies).
pub fn polygon_step(samples: &[MVector], topology: &Topology) -> Result<f64> {
    let n = samples.len();
    if n < 2 {
        return Err(VfeError::InvalidCurve("fewer than two samples".into()));
    }
    let mut total: f64 = samples.windows(2).map(|w| lorentz_norm(w[1] - w[0])).sum();
    let chords = match topology.period_map() {
        Some(map) => {
            let next = extended(samples, n as isize, &map, FieldKind::Point);
            total += lorentz_norm(next - samples[n - 1]);
            n
        }
        None => n - 1,
    };
    Ok(total / chords as f64)
}

/// Resamples a polyline at `n` points equispaced in Lorentzian arclength.
///
/// The input points are interpolated by a cubic spline in cumulative chord
/// length (periodic for closed curves, natural for open ones), and the
/// spline's arclength is integrated by Gauss–Legendre quadrature.
pub fn resample_arclength(points: &[MVector], n: usize, topology: Topology, tol: &Tolerances) -> Result<DiscreteCurve> {
    if matches!(topology, Topology::Screw(_)) {
        return Err(VfeError::InvalidCurve("resampling supports open and closed curves only".into()));
    }
    let closed = topology == Topology::Closed;
    let min_points = if closed { 3 } else { 2 };
    if points.len() < min_points {
        return Err(VfeError::InvalidCurve(format!("{} input points is too few", points.len())));
    }
    if n < MIN_SAMPLES {
        return Err(VfeError::InvalidCurve(format!("n = {n}, at least {MIN_SAMPLES} required")));
    }
    if let Some(i) = points.iter().position(|p| !p.is_finite()) {
        return Err(VfeError::NonFinite(format!("input point {i}")));
    }

    let mut knots: Vec<MVector> = points.to_vec();
    if closed {
        knots.push(points[0]);
    }
    let chords: Vec<MVector> = knots.windows(2).map(|w| w[1] - w[0]).collect();
    uniform_class(&chords, tol.tol_causal, "chord")?;

    let spline = Spline::fit(&knots, closed);
    let total = spline.total_length();
    let steps = if closed { n } else { n - 1 };
    let ds = total / steps as f64;
    let samples: Vec<MVector> = (0..n).map(|j| spline.point_at_length(j as f64 * ds)).collect();
    DiscreteCurve::new(samples, ds, topology, tol)
}

/// Componentwise cubic spline through `knots`, parametrized by cumulative
/// chord length.
struct Spline {
    u: Vec<f64>,
    y: Vec<MVector>,
    m: Vec<MVector>,
    cumulative: Vec<f64>,
}

const GAUSS_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GAUSS_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

impl Spline {
    fn fit(knots: &[MVector], periodic: bool) -> Self {
        let mut u = vec![0.0];
        for w in knots.windows(2) {
            let last = *u.last().unwrap();
            u.push(last + lorentz_norm(w[1] - w[0]));
        }
        let seg = knots.len() - 1;
        let h: Vec<f64> = (0..seg).map(|k| u[k + 1] - u[k]).collect();
        let comps: Vec<Vec<f64>> = (0..3)
            .map(|c| {
                let y: Vec<f64> = knots.iter().map(|p| p.to_array()[c]).collect();
                if periodic {
                    periodic_moments(&y, &h)
                } else {
                    natural_moments(&y, &h)
                }
            })
            .collect();
        let m = (0..knots.len())
            .map(|k| MVector::new(comps[0][k], comps[1][k], comps[2][k]))
            .collect();
        let mut spline = Self {
            u,
            y: knots.to_vec(),
            m,
            cumulative: Vec::new(),
        };
        let mut acc = vec![0.0];
        for k in 0..seg {
            let len = spline.segment_length(k, spline.u[k + 1]);
            acc.push(acc[k] + len);
        }
        spline.cumulative = acc;
        spline
    }

    fn total_length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    fn eval(&self, k: usize, x: f64) -> MVector {
        let h = self.u[k + 1] - self.u[k];
        let a = (self.u[k + 1] - x) / h;
        let b = (x - self.u[k]) / h;
        self.y[k] * a
            + self.y[k + 1] * b
            + (self.m[k] * (a * a * a - a) + self.m[k + 1] * (b * b * b - b)) * (h * h / 6.0)
    }

    fn velocity(&self, k: usize, x: f64) -> MVector {
        let h = self.u[k + 1] - self.u[k];
        let a = (self.u[k + 1] - x) / h;
        let b = (x - self.u[k]) / h;
        (self.y[k + 1] - self.y[k]) * (1.0 / h)
            + (self.m[k + 1] * (3.0 * b * b - 1.0) - self.m[k] * (3.0 * a * a - 1.0)) * (h / 6.0)
    }

    /// Arclength of segment `k` from its start up to parameter `x`.
    fn segment_length(&self, k: usize, x: f64) -> f64 {
        let (lo, hi) = (self.u[k], x);
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (hi + lo);
        GAUSS_NODES
            .iter()
            .zip(GAUSS_WEIGHTS)
            .map(|(&z, w)| w * lorentz_norm(self.velocity(k, mid + half * z)))
            .sum::<f64>()
            * half
    }

    fn point_at_length(&self, target: f64) -> MVector {
        let seg = self.u.len() - 1;
        let k = match self.cumulative.binary_search_by(|c| c.total_cmp(&target)) {
            Ok(k) => k.min(seg - 1),
            Err(k) => k.saturating_sub(1).min(seg - 1),
        };
        let want = target - self.cumulative[k];
        let (mut lo, mut hi) = (self.u[k], self.u[k + 1]);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.segment_length(k, mid) < want {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        self.eval(k, 0.5 * (lo + hi))
    }
}

fn natural_moments(y: &[f64], h: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut m = vec![0.0; n];
    if n < 3 {
        return m;
    }
    let inner = n - 2;
    let mut sub = vec![0.0; inner];
    let mut diag = vec![0.0; inner];
    let mut sup = vec![0.0; inner];
    let mut rhs = vec![0.0; inner];
    for j in 0..inner {
        let k = j + 1;
        sub[j] = h[k - 1];
        diag[j] = 2.0 * (h[k - 1] + h[k]);
        sup[j] = h[k];
        rhs[j] = 6.0 * ((y[k + 1] - y[k]) / h[k] - (y[k] - y[k - 1]) / h[k - 1]);
    }
    let x = solve_tridiagonal(&sub, &diag, &sup, &rhs);
    m[1..(inner + 1)].copy_from_slice(&x[..inner]);
    m
}

/// Moments of a periodic spline; `y` repeats its first value at the end.
fn periodic_moments(y: &[f64], h: &[f64]) -> Vec<f64> {
    let n = y.len() - 1;
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    for k in 0..n {
        let hp = h[(k + n - 1) % n];
        let hk = h[k];
        let yp = y[(k + n - 1) % n];
        sub[k] = hp;
        diag[k] = 2.0 * (hp + hk);
        sup[k] = hk;
        rhs[k] = 6.0 * ((y[k + 1] - y[k]) / hk - (y[k] - yp) / hp);
    }
    let mut m = solve_cyclic_tridiagonal(&sub, &diag, &sup, &rhs);
    m.push(m[0]);
    m
}

fn solve_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = sup[i] / denom;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    x
}

/// Sherman–Morrison solve of a tridiagonal system with corner entries
/// `sub[0]` (row 0, column n−1) and `sup[n−1]` (row n−1, column 0).
fn solve_cyclic_tridiagonal(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let alpha = sup[n - 1];
    let beta = sub[0];
    let gamma = -diag[0];
    let mut b = diag.to_vec();
    b[0] -= gamma;
    b[n - 1] -= alpha * beta / gamma;
    let mut a = sub.to_vec();
    a[0] = 0.0;
    let mut c = sup.to_vec();
    c[n - 1] = 0.0;
    let x = solve_tridiagonal(&a, &b, &c, rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = alpha;
    let z = solve_tridiagonal(&a, &b, &c, &u);
    let fact = (x[0] + beta * x[n - 1] / gamma) / (1.0 + z[0] + beta * z[n - 1] / gamma);
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect()
}
