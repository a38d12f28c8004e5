//! Residuals of the curvature evolution equations, the defocusing NLS
//! equation `i q_t + q_ss − ½|q|² q = 0` and the heat system
//! `q_t = q_ss + q² r`, `r_t = −r_ss − r² q` on recorded `(k1, k2)` grids.
//!
//! Grids are indexed `[time][sample]`. All stencils are second-order
//! centered, and norms are taken over the interior mask: samples
//! `1..ns−1`, times `1..nt−1`, minus any time rows whose stencil crosses a
//! resampling event.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, VfeError};
use crate::flow::FlowHistory;
use crate::frames::CausalCase;

/// Smallest interior extent accepted in either direction.
pub const MIN_INTERIOR: usize = 5;

pub type Grid<T> = Vec<Vec<T>>;

/// Principal curvatures on a space-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureGrid {
    pub case: CausalCase,
    pub k1: Grid<f64>,
    pub k2: Grid<f64>,
    pub ds: f64,
    pub dt: f64,
    /// Time rows excluded from the interior.
    pub excluded_times: Vec<usize>,
}

impl CurvatureGrid {
    pub fn from_history(h: &FlowHistory) -> Self {
        let mut excluded = Vec::new();
        for &j in &h.discontinuities {
            excluded.extend([j.saturating_sub(1), j]);
        }
        excluded.sort_unstable();
        excluded.dedup();
        Self {
            case: h.case,
            k1: h.k1(),
            k2: h.k2(),
            ds: h.ds(),
            dt: h.dt(),
            excluded_times: excluded,
        }
    }

    pub fn nt(&self) -> usize {
        self.k1.len()
    }

    pub fn ns(&self) -> usize {
        self.k1.first().map_or(0, |r| r.len())
    }

    pub fn mask(&self) -> Result<InteriorMask> {
        InteriorMask::new(self.ns(), self.nt(), &self.excluded_times)
    }

    /// Applies the constant gauge rotation `θ ↦ θ + angle` to every entry.
    pub fn rotated(&self, angle: f64) -> CurvatureGrid {
        let mut out = self.clone();
        for j in 0..self.nt() {
            for i in 0..self.ns() {
                let (a, b) = (self.k1[j][i], self.k2[j][i]);
                let (n1, n2) = if self.case.is_timelike() {
                    let (s, c) = angle.sin_cos();
                    (c * a - s * b, s * a + c * b)
                } else {
                    let (c, s) = (angle.cosh(), angle.sinh());
                    (c * a - s * b, c * b - s * a)
                };
                out.k1[j][i] = n1;
                out.k2[j][i] = n2;
            }
        }
        out
    }
}

/// Stencil-valid region of a grid.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InteriorMask {
    pub ns: usize,
    pub nt: usize,
    /// Half-open sample range.
    pub s_range: (usize, usize),
    /// Half-open time range.
    pub t_range: (usize, usize),
    pub excluded_times: Vec<usize>,
}

impl InteriorMask {
    pub fn new(ns: usize, nt: usize, excluded_times: &[usize]) -> Result<Self> {
        if ns < MIN_INTERIOR + 2 || nt < MIN_INTERIOR + 2 {
            return Err(VfeError::GridTooSmall(format!(
                "{ns} samples x {nt} times leaves less than a {MIN_INTERIOR}x{MIN_INTERIOR} interior"
            )));
        }
        let mask = Self {
            ns,
            nt,
            s_range: (1, ns - 1),
            t_range: (1, nt - 1),
            excluded_times: excluded_times.to_vec(),
        };
        if mask.times().count() < MIN_INTERIOR {
            return Err(VfeError::GridTooSmall("too many time rows excluded by resampling".into()));
        }
        Ok(mask)
    }

    pub fn times(&self) -> impl Iterator<Item = usize> + '_ {
        (self.t_range.0..self.t_range.1).filter(|j| !self.excluded_times.contains(j))
    }

    pub fn samples(&self) -> std::ops::Range<usize> {
        self.s_range.0..self.s_range.1
    }

    pub fn contains(&self, j: usize, i: usize) -> bool {
        self.samples().contains(&i) && (self.t_range.0..self.t_range.1).contains(&j) && !self.excluded_times.contains(&j)
    }

    pub fn count(&self) -> usize {
        self.times().count() * self.samples().len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentNorm {
    pub name: String,
    pub l2_norm: f64,
    pub linf_norm: f64,
}

/// Norms of a residual over the interior mask. `l2_norm` is the root mean
/// square; for several components it combines all of them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub equation: String,
    pub case: CausalCase,
    pub l2_norm: f64,
    pub linf_norm: f64,
    pub components: Vec<ComponentNorm>,
    pub mask: InteriorMask,
    /// Observed order from a refinement study, when one was run.
    pub order: Option<f64>,
}

impl ResidualReport {
    pub(crate) fn from_components(equation: &str, case: CausalCase, mask: &InteriorMask, parts: &[(&str, Grid<f64>)]) -> Self {
        let count = mask.count() as f64;
        let mut total = 0.0;
        let mut linf = 0.0_f64;
        let mut components = Vec::new();
        for (name, grid) in parts {
            let mut sum = 0.0;
            let mut worst = 0.0_f64;
            for j in mask.times() {
                for i in mask.samples() {
                    let v = grid[j][i];
                    sum += v * v;
                    worst = worst.max(v.abs());
                }
            }
            total += sum;
            linf = linf.max(worst);
            components.push(ComponentNorm {
                name: (*name).to_string(),
                l2_norm: (sum / count).sqrt(),
                linf_norm: worst,
            });
        }
        Self {
            equation: equation.to_string(),
            case,
            l2_norm: (total / count).sqrt(),
            linf_norm: linf,
            components,
            mask: mask.clone(),
            order: None,
        }
    }

    pub fn component(&self, name: &str) -> Option<&ComponentNorm> {
        self.components.iter().find(|c| c.name == name)
    }
}

fn d_t<T>(g: &Grid<T>, j: usize, i: usize, dt: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Mul<f64, Output = T>,
{
    (g[j + 1][i] - g[j - 1][i]) * (0.5 / dt)
}

fn d_ss<T>(g: &Grid<T>, j: usize, i: usize, ds: f64) -> T
where
    T: Copy + std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    (g[j][i + 1] + g[j][i - 1] - g[j][i] * 2.0) * (1.0 / (ds * ds))
}

fn zero_grid<T: Clone>(nt: usize, ns: usize, zero: T) -> Grid<T> {
    vec![vec![zero; ns]; nt]
}

/// Complex field `q = k1 + i k2` on a space-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexField {
    pub q: Grid<Complex64>,
    pub ds: f64,
    pub dt: f64,
    pub excluded_times: Vec<usize>,
}

impl ComplexField {
    pub fn from_grid(g: &CurvatureGrid) -> Result<Self> {
        if !g.case.is_timelike() {
            return Err(VfeError::CaseMismatch(format!("complex field needs a timelike history, got {}", g.case)));
        }
        let q = g
            .k1
            .iter()
            .zip(&g.k2)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| Complex64::new(*x, *y)).collect())
            .collect();
        Ok(Self {
            q,
            ds: g.ds,
            dt: g.dt,
            excluded_times: g.excluded_times.clone(),
        })
    }

    /// Samples `f(s, t)` at `s = i ds`, `t = j dt`.
    pub fn from_fn(ns: usize, nt: usize, ds: f64, dt: f64, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let q = (0..nt)
            .map(|j| (0..ns).map(|i| f(i as f64 * ds, j as f64 * dt)).collect())
            .collect();
        Self {
            q,
            ds,
            dt,
            excluded_times: Vec::new(),
        }
    }

    pub fn mask(&self) -> Result<InteriorMask> {
        InteriorMask::new(self.q.first().map_or(0, |r| r.len()), self.q.len(), &self.excluded_times)
    }
}

pub fn to_nls_field(h: &FlowHistory) -> Result<ComplexField> {
    ComplexField::from_grid(&CurvatureGrid::from_history(h))
}

/// Pointwise `i D_t q + D_ss q − ½|q|² q`, zero outside the mask.
pub fn nls_residual_grid(f: &ComplexField) -> Result<Grid<Complex64>> {
    let mask = f.mask()?;
    let mut out = zero_grid(mask.nt, mask.ns, Complex64::new(0.0, 0.0));
    for j in mask.times() {
        for i in mask.samples() {
            let q = f.q[j][i];
            out[j][i] = Complex64::i() * d_t(&f.q, j, i, f.dt) + d_ss(&f.q, j, i, f.ds) - q * (0.5 * q.norm_sqr());
        }
    }
    Ok(out)
}

pub fn nls_residual(f: &ComplexField) -> Result<ResidualReport> {
    let mask = f.mask()?;
    let grid = nls_residual_grid(f)?;
    let re = grid.iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
    let im = grid.iter().map(|r| r.iter().map(|z| z.im).collect()).collect();
    let mut report = ResidualReport::from_components("nls", CausalCase::TimelikeCurve, &mask, &[("re", re), ("im", im)]);
    report.linf_norm = mask
        .times()
        .flat_map(|j| mask.samples().map(move |i| (j, i)))
        .map(|(j, i)| grid[j][i].norm())
        .fold(0.0, f64::max);
    Ok(report)
}

/// The real pair `(q, r)` of the heat system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatPair {
    pub case: CausalCase,
    pub q: Grid<f64>,
    pub r: Grid<f64>,
    pub ds: f64,
    pub dt: f64,
    pub excluded_times: Vec<usize>,
}

impl HeatPair {
    /// `q = (k1 + k2)/√2`, and `r = −(k1 − k2)/√2` for a timelike normal or
    /// `r = (k1 − k2)/√2` for a timelike binormal.
    pub fn from_grid(g: &CurvatureGrid) -> Result<Self> {
        let sign = match g.case {
            CausalCase::TimelikeCurve => {
                return Err(VfeError::CaseMismatch("heat pair needs a spacelike history".into()))
            }
            CausalCase::SpacelikeTimelikeNormal => -1.0,
            CausalCase::SpacelikeTimelikeBinormal => 1.0,
        };
        let c = std::f64::consts::FRAC_1_SQRT_2;
        let map = |f: &dyn Fn(f64, f64) -> f64| -> Grid<f64> {
            g.k1.iter()
                .zip(&g.k2)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect())
                .collect()
        };
        Ok(Self {
            case: g.case,
            q: map(&|a, b| c * (a + b)),
            r: map(&|a, b| sign * c * (a - b)),
            ds: g.ds,
            dt: g.dt,
            excluded_times: g.excluded_times.clone(),
        })
    }

    pub fn mask(&self) -> Result<InteriorMask> {
        InteriorMask::new(self.q.first().map_or(0, |r| r.len()), self.q.len(), &self.excluded_times)
    }
}

pub fn to_heat_pair(h: &FlowHistory) -> Result<HeatPair> {
    HeatPair::from_grid(&CurvatureGrid::from_history(h))
}

/// Pointwise `(D_t q − D_ss q − q² r, D_t r + D_ss r + r² q)`.
pub fn heat_residual_grids(p: &HeatPair) -> Result<(Grid<f64>, Grid<f64>)> {
    let mask = p.mask()?;
    let mut rq = zero_grid(mask.nt, mask.ns, 0.0);
    let mut rr = zero_grid(mask.nt, mask.ns, 0.0);
    for j in mask.times() {
        for i in mask.samples() {
            let (q, r) = (p.q[j][i], p.r[j][i]);
            rq[j][i] = d_t(&p.q, j, i, p.dt) - d_ss(&p.q, j, i, p.ds) - q * q * r;
            rr[j][i] = d_t(&p.r, j, i, p.dt) + d_ss(&p.r, j, i, p.ds) + r * r * q;
        }
    }
    Ok((rq, rr))
}

pub fn heat_residual(p: &HeatPair) -> Result<ResidualReport> {
    let mask = p.mask()?;
    let (rq, rr) = heat_residual_grids(p)?;
    Ok(ResidualReport::from_components("heat", p.case, &mask, &[("q", rq), ("r", rr)]))
}

/// Residuals of the two principal-curvature evolution equations of the
/// grid's case:
///
/// ```text
/// timelike:           k1_t = −k2_ss + ½(k1²+k2²) k2,  k2_t = k1_ss − ½(k1²+k2²) k1
/// timelike normal:    k1_t =  k2_ss − ½(k1²−k2²) k2,  k2_t = k1_ss − ½(k1²−k2²) k1
/// timelike binormal:  k1_t =  k2_ss + ½(k1²−k2²) k2,  k2_t = k1_ss + ½(k1²−k2²) k1
/// ```
pub fn curvature_residual_grids(g: &CurvatureGrid) -> Result<(Grid<f64>, Grid<f64>)> {
    let mask = g.mask()?;
    let mut r1 = zero_grid(mask.nt, mask.ns, 0.0);
    let mut r2 = zero_grid(mask.nt, mask.ns, 0.0);
    for j in mask.times() {
        for i in mask.samples() {
            let (a, b) = (g.k1[j][i], g.k2[j][i]);
            let (a_t, b_t) = (d_t(&g.k1, j, i, g.dt), d_t(&g.k2, j, i, g.dt));
            let (a_ss, b_ss) = (d_ss(&g.k1, j, i, g.ds), d_ss(&g.k2, j, i, g.ds));
            let (e1, e2) = match g.case {
                CausalCase::TimelikeCurve => {
                    let m = 0.5 * (a * a + b * b);
                    (a_t - (-b_ss + m * b), b_t - (a_ss - m * a))
                }
                CausalCase::SpacelikeTimelikeNormal => {
                    let m = 0.5 * (a * a - b * b);
                    (a_t - (b_ss - m * b), b_t - (a_ss - m * a))
                }
                CausalCase::SpacelikeTimelikeBinormal => {
                    let m = 0.5 * (a * a - b * b);
                    (a_t - (b_ss + m * b), b_t - (a_ss + m * a))
                }
            };
            r1[j][i] = e1;
            r2[j][i] = e2;
        }
    }
    Ok((r1, r2))
}

pub fn curvature_evolution_residual(g: &CurvatureGrid) -> Result<ResidualReport> {
    let mask = g.mask()?;
    let (r1, r2) = curvature_residual_grids(g)?;
    Ok(ResidualReport::from_components("curvature", g.case, &mask, &[("k1", r1), ("k2", r2)]))
}

pub fn curvature_evolution_residual_of(h: &FlowHistory) -> Result<ResidualReport> {
    curvature_evolution_residual(&CurvatureGrid::from_history(h))
}

/// Largest relative gap between the NLS residual of `q = k1 + i k2` and
/// `i R1 − R2`, with `R1`, `R2` the curvature-equation residuals.
pub fn nls_closure_defect(g: &CurvatureGrid) -> Result<f64> {
    let mask = g.mask()?;
    let n = nls_residual_grid(&ComplexField::from_grid(g)?)?;
    let (r1, r2) = curvature_residual_grids(g)?;
    let mut worst = 0.0_f64;
    for j in mask.times() {
        for i in mask.samples() {
            let combo = Complex64::new(-r2[j][i], r1[j][i]);
            worst = worst.max((n[j][i] - combo).norm() / term_scale(g, j, i));
        }
    }
    Ok(worst)
}

/// Largest relative gap between the heat residuals and `(R1 + R2)/√2`,
/// `±(R1 − R2)/√2` (minus sign for a timelike normal).
pub fn heat_closure_defect(g: &CurvatureGrid) -> Result<f64> {
    let mask = g.mask()?;
    let (rq, rr) = heat_residual_grids(&HeatPair::from_grid(g)?)?;
    let (r1, r2) = curvature_residual_grids(g)?;
    let sign = if g.case == CausalCase::SpacelikeTimelikeNormal { -1.0 } else { 1.0 };
    let c = std::f64::consts::FRAC_1_SQRT_2;
    let mut worst = 0.0_f64;
    for j in mask.times() {
        for i in mask.samples() {
            let eq = c * (r1[j][i] + r2[j][i]);
            let er = sign * c * (r1[j][i] - r2[j][i]);
            let scale = term_scale(g, j, i);
            worst = worst.max((rq[j][i] - eq).abs() / scale).max((rr[j][i] - er).abs() / scale);
        }
    }
    Ok(worst)
}

/// Magnitude of the individual terms entering the residuals at `(j, i)`,
/// used to make closure defects relative to the size of what cancels.
fn term_scale(g: &CurvatureGrid, j: usize, i: usize) -> f64 {
    let (a, b) = (g.k1[j][i], g.k2[j][i]);
    let t = d_t(&g.k1, j, i, g.dt).abs() + d_t(&g.k2, j, i, g.dt).abs();
    let ss = d_ss(&g.k1, j, i, g.ds).abs() + d_ss(&g.k2, j, i, g.ds).abs();
    let cubic = (a * a + b * b) * (a.abs() + b.abs());
    (t + ss + cubic).max(f64::MIN_POSITIVE)
}
