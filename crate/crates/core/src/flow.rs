//! Time integration of the binormal flow `α_t = α_s ×_L α_ss`.
//!
//! Each step uses classical RK4 on the sampled positions with centered
//! stencils re-evaluated at every stage. Steps longer than
//! `substep_cfl · ds²` are split into equal substeps.
//!
//! For spacelike curves the normal plane is Lorentzian and the linearized
//! flow contains a backward-heat component, so round-off in high Fourier
//! modes grows without bound. On periodic and screw-periodic curves a
//! spectral filter zeroes Fourier coefficients below `filter_level`
//! (relative to the largest one) after every substep.
//!
//! The frame gauge is fixed at the first sample: the seed `E1` is moved in
//! time by the minimal rotation taking the old tangent to the new one,
//! wrapped in two half-rotations by `u dt / 2` in the normal plane, where
//! `u = ½ <T_s, T_s>` for timelike curves and `−½ <T_s, T_s>` otherwise.
//! This realizes the time-frame matrices with a vanishing gauge function.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::curve::{resample_arclength, DiscreteCurve, FieldKind, Topology};
use crate::error::{Result, VfeError};
use crate::frames::{default_seed, frame_by_transport, rotate_pair, CausalCase, FrameCoefficientMatrix, ParallelFrameField};
use crate::frenet::{frenet_apparatus, tangent_derivative};
use crate::pde::{InteriorMask, ResidualReport};
use crate::lorentz::{lorentz_cross, minimal_rotation, CausalClass, LinearMap, MVector};
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FlowConfig {
    /// Time between steps.
    pub dt: f64,
    pub steps: usize,
    /// Record a snapshot every this many steps.
    pub record_every: usize,
    /// Allowed growth of the unit-speed drift over the run.
    pub unit_speed_tol: f64,
    /// Resample instead of failing when the drift tolerance is exceeded.
    pub resample_on_drift: bool,
    /// Largest RK4 substep as a multiple of `ds²`.
    pub substep_cfl: f64,
    /// Relative Fourier filter level; `None` disables filtering.
    pub filter_level: Option<f64>,
    /// Constant gauge angle of the initial frame.
    pub theta0: f64,
    /// Frame case; inferred from the Frenet signs at the first sample when
    /// absent.
    pub case: Option<CausalCase>,
    pub tol: Tolerances,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            steps: 100,
            record_every: 1,
            unit_speed_tol: 1e-3,
            resample_on_drift: false,
            substep_cfl: 0.25,
            filter_level: Some(1e-13),
            theta0: 0.0,
            case: None,
            tol: Tolerances::default(),
        }
    }
}

impl FlowConfig {
    /// Number of equal RK4 substeps per step on a grid of spacing `ds`.
    pub fn substeps(&self, ds: f64) -> usize {
        let limit = self.substep_cfl * ds * ds;
        ((self.dt / limit).ceil() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(VfeError::ConstraintViolation(format!("dt = {} must be positive", self.dt)));
        }
        if self.record_every == 0 {
            return Err(VfeError::ConstraintViolation("record_every must be at least 1".into()));
        }
        if !(self.substep_cfl > 0.0) {
            return Err(VfeError::ConstraintViolation("substep_cfl must be positive".into()));
        }
        Ok(())
    }
}

/// Raw velocity `D1 α ×_L D2 α` from second-order centered stencils.
pub fn vfe_velocity(c: &DiscreteCurve) -> Vec<MVector> {
    velocity(c.samples(), c.ds(), c.topology())
}

fn velocity(samples: &[MVector], ds: f64, topology: &Topology) -> Vec<MVector> {
    let d1 = crate::curve::derivative(samples, ds, topology, FieldKind::Point);
    let d2 = crate::curve::second_derivative(samples, ds, topology, FieldKind::Point);
    d1.into_iter().zip(d2).map(|(a, b)| lorentz_cross(a, b)).collect()
}

fn rk4(samples: &[MVector], ds: f64, topology: &Topology, h: f64) -> Vec<MVector> {
    let shifted = |base: &[MVector], k: &[MVector], f: f64| -> Vec<MVector> {
        base.iter().zip(k).map(|(p, v)| *p + *v * f).collect()
    };
    let k1 = velocity(samples, ds, topology);
    let k2 = velocity(&shifted(samples, &k1, 0.5 * h), ds, topology);
    let k3 = velocity(&shifted(samples, &k2, 0.5 * h), ds, topology);
    let k4 = velocity(&shifted(samples, &k3, h), ds, topology);
    (0..samples.len())
        .map(|i| samples[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0))
        .collect()
}

/// How a periodic or screw-periodic curve is unrolled into a periodic
/// sequence before filtering: `β_i = exp(−σ_i K)(α_i − σ_i d)` with
/// `σ_i = i / n`.
#[derive(Clone, Copy, Debug)]
enum Unroll {
    Translation(MVector),
    Boost(f64, MVector),
    Rotation(f64, MVector),
}

impl Unroll {
    fn of(topology: &Topology) -> Option<Unroll> {
        let map = topology.period_map()?;
        let m = map.linear.0;
        let d = map.shift;
        if map.is_translation() {
            return Some(Unroll::Translation(d));
        }
        let boost = m[1][1] == 1.0
            && m[0][1] == 0.0
            && m[1][0] == 0.0
            && m[1][2] == 0.0
            && m[2][1] == 0.0
            && m[0][0] == m[2][2]
            && m[0][2] == m[2][0];
        if boost && d.x0 == 0.0 && d.x2 == 0.0 {
            return Some(Unroll::Boost(m[0][2].asinh(), d));
        }
        let rotation = m[0][0] == 1.0
            && m[0][1] == 0.0
            && m[0][2] == 0.0
            && m[1][0] == 0.0
            && m[2][0] == 0.0
            && m[1][1] == m[2][2]
            && m[1][2] == -m[2][1];
        if rotation && d.x1 == 0.0 && d.x2 == 0.0 {
            return Some(Unroll::Rotation(m[2][1].atan2(m[1][1]), d));
        }
        None
    }

    fn parts(&self, sigma: f64) -> (LinearMap, MVector) {
        match *self {
            Unroll::Translation(d) => (LinearMap::IDENTITY, d * sigma),
            Unroll::Boost(phi, d) => (LinearMap::boost_x0x2(phi * sigma), d * sigma),
            Unroll::Rotation(a, d) => (LinearMap::rotation_x1x2(a * sigma), d * sigma),
        }
    }
}

struct SpectralFilter {
    unroll: Unroll,
    level: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SpectralFilter {
    fn new(topology: &Topology, n: usize, level: f64) -> Option<Self> {
        let unroll = Unroll::of(topology)?;
        let mut planner = FftPlanner::new();
        Some(Self {
            unroll,
            level,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    fn apply(&self, samples: &mut [MVector]) {
        let n = samples.len();
        let maps: Vec<(LinearMap, MVector)> = (0..n).map(|i| self.unroll.parts(i as f64 / n as f64)).collect();
        let mut channels = vec![vec![Complex64::new(0.0, 0.0); n]; 3];
        for (i, p) in samples.iter().enumerate() {
            let (m, d) = &maps[i];
            let beta = m.lorentz_inverse().apply(*p - *d).to_array();
            for c in 0..3 {
                channels[c][i] = Complex64::new(beta[c], 0.0);
            }
        }
        for ch in channels.iter_mut() {
            self.forward.process(ch);
        }
        let peak = channels.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
        let cut = self.level * peak;
        for ch in channels.iter_mut() {
            for z in ch.iter_mut() {
                if z.norm() < cut {
                    *z = Complex64::new(0.0, 0.0);
                }
            }
            self.inverse.process(ch);
        }
        let scale = 1.0 / n as f64;
        for (i, p) in samples.iter_mut().enumerate() {
            let (m, d) = &maps[i];
            let beta = MVector::new(channels[0][i].re * scale, channels[1][i].re * scale, channels[2][i].re * scale);
            *p = m.apply(beta) + *d;
        }
    }
}

/// Advances a curve and the gauge seed of its parallel frame.
struct Stepper {
    cfg: FlowConfig,
    case: CausalCase,
    substeps: usize,
    filter: Option<SpectralFilter>,
}

impl Stepper {
    fn new(c: &DiscreteCurve, cfg: &FlowConfig, case: CausalCase) -> Self {
        let substeps = cfg.substeps(c.ds());
        if substeps > 1 {
            log::info!(
                "dt = {:.3e} exceeds {} ds^2 = {:.3e}; using {substeps} RK4 substeps",
                cfg.dt,
                cfg.substep_cfl,
                cfg.substep_cfl * c.ds() * c.ds()
            );
        }
        let filter = cfg.filter_level.and_then(|level| SpectralFilter::new(c.topology(), c.len(), level));
        Self {
            cfg: cfg.clone(),
            case,
            substeps,
            filter,
        }
    }

    fn gauge_data(&self, c: &DiscreteCurve) -> Result<(MVector, f64)> {
        let t = c.tangent_field(&self.cfg.tol)?;
        let ts = tangent_derivative(c, &t);
        let g = ts[0].square();
        Ok((t[0], g))
    }

    fn advance(&self, c: &DiscreteCurve, seed: MVector) -> Result<(DiscreteCurve, MVector)> {
        let h = self.cfg.dt / self.substeps as f64;
        let mut curve = c.clone();
        let mut seed = seed;
        let (mut t_old, mut g_old) = self.gauge_data(&curve)?;
        for _ in 0..self.substeps {
            let mut next = rk4(curve.samples(), curve.ds(), curve.topology(), h);
            if let Some(f) = &self.filter {
                f.apply(&mut next);
            }
            if let Some(i) = next.iter().position(|p| !p.is_finite()) {
                return Err(VfeError::NonFinite(format!("sample {i} after a flow substep")));
            }
            curve = DiscreteCurve::classified(next, curve.ds(), *curve.topology(), &self.cfg.tol)?;
            let (t_new, g_new) = self.gauge_data(&curve)?;
            seed = self.move_seed(seed, t_old, t_new, g_old, g_new, h)?;
            t_old = t_new;
            g_old = g_new;
        }
        Ok((curve, seed))
    }

    /// Strang-split seed update: normal-plane half rotation, minimal
    /// rotation of the tangent, second half rotation.
    fn move_seed(&self, seed: MVector, t_old: MVector, t_new: MVector, g_old: f64, g_new: f64, h: f64) -> Result<MVector> {
        let half = |e1: MVector, t: MVector, g: f64| {
            let e2 = lorentz_cross(t, e1);
            rotate_pair(self.case, e1, e2, -0.25 * g * h).0
        };
        let e1 = half(seed, t_old, g_old);
        let e1 = minimal_rotation(t_old, t_new, e1, self.cfg.tol.tol_causal)
            .ok_or(VfeError::CausalDegeneracy { index: 0, what: "tangent in time" })?;
        let eps_t = self.case.signs()[0].value();
        let e1 = e1 - t_new * (eps_t * e1.dot(t_new));
        let e1 = e1 * (1.0 / e1.norm());
        Ok(half(e1, t_new, g_new))
    }
}

/// Advances `c` by one step of length `cfg.dt` (with substeps and
/// filtering as configured). Fails if the unit-speed drift grows by more
/// than `cfg.unit_speed_tol` during the step.
pub fn step(c: &DiscreteCurve, cfg: &FlowConfig) -> Result<DiscreteCurve> {
    cfg.validate()?;
    let case = infer_case(c, cfg)?;
    let stepper = Stepper::new(c, cfg, case);
    let t = c.tangent_field(&cfg.tol)?;
    let seed = default_seed(t[0], None, case, 0.0, &cfg.tol)?;
    let before = c.unit_speed_drift();
    let (next, _) = stepper.advance(c, seed)?;
    let drift = next.unit_speed_drift();
    if drift - before > cfg.unit_speed_tol {
        return Err(VfeError::ArcLengthDrift {
            drift,
            tol: cfg.unit_speed_tol,
            step: 1,
        });
    }
    Ok(next)
}

/// The frame case used for `c`: the configured one, checked against the
/// Frenet signs at the first sample, or the inferred one.
pub fn infer_case(c: &DiscreteCurve, cfg: &FlowConfig) -> Result<CausalCase> {
    let fa = frenet_apparatus(c, &cfg.tol)?;
    let frenet = if fa.n[0] != MVector::ZERO {
        CausalCase::from_signs(fa.eps)
    } else {
        None
    };
    match (cfg.case, frenet) {
        (Some(want), Some(have)) if want != have => Err(VfeError::CaseMismatch(format!(
            "configured case {want} but the curve's Frenet frame is {have}"
        ))),
        (Some(want), _) => {
            if want.tangent_class() != c.causal_class() {
                return Err(VfeError::CaseMismatch(format!("{} curve cannot carry a {want} frame", c.causal_class())));
            }
            Ok(want)
        }
        (None, Some(have)) => Ok(have),
        (None, None) => Ok(match c.causal_class() {
            CausalClass::Timelike => CausalCase::TimelikeCurve,
            _ => CausalCase::SpacelikeTimelikeBinormal,
        }),
    }
}

/// Recorded solution of the flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowHistory {
    pub case: CausalCase,
    pub config: FlowConfig,
    pub times: Vec<f64>,
    pub curves: Vec<DiscreteCurve>,
    pub frames: Vec<ParallelFrameField>,
    /// Unit-speed drift `max_i | ‖D1 α‖ − 1 |` of each snapshot.
    pub drift: Vec<f64>,
    /// Seed `E1` at the first sample of each snapshot.
    pub seeds: Vec<MVector>,
    /// Snapshot indices preceded by a resampling.
    pub discontinuities: Vec<usize>,
    pub substeps: usize,
}

impl FlowHistory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn ds(&self) -> f64 {
        self.curves[0].ds()
    }

    /// Time between snapshots.
    pub fn dt(&self) -> f64 {
        self.config.dt * self.config.record_every as f64
    }

    pub fn k1(&self) -> Vec<Vec<f64>> {
        self.frames.iter().map(|f| f.k1.clone()).collect()
    }

    pub fn k2(&self) -> Vec<Vec<f64>> {
        self.frames.iter().map(|f| f.k2.clone()).collect()
    }

    pub fn max_drift(&self) -> f64 {
        self.drift.iter().copied().fold(0.0, f64::max)
    }
}

/// Integrates the flow from `c0` and records snapshots with parallel frames
/// in the vanishing time gauge.
pub fn run(c0: &DiscreteCurve, cfg: &FlowConfig) -> Result<FlowHistory> {
    cfg.validate()?;
    let case = infer_case(c0, cfg)?;
    let fa = frenet_apparatus(c0, &cfg.tol)?;
    let normal = (fa.n[0] != MVector::ZERO).then_some(fa.n[0]);
    // Transported in the θ0 = 0 gauge; the constant rotation is applied to
    // each recorded field.
    let mut seed = default_seed(fa.t[0], normal, case, 0.0, &cfg.tol)?;
    let stepper = Stepper::new(c0, cfg, case);

    let mut history = FlowHistory {
        case,
        config: cfg.clone(),
        times: Vec::new(),
        curves: Vec::new(),
        frames: Vec::new(),
        drift: Vec::new(),
        seeds: Vec::new(),
        discontinuities: Vec::new(),
        substeps: stepper.substeps,
    };
    let record = |h: &mut FlowHistory, c: &DiscreteCurve, seed: MVector, t: f64| -> Result<()> {
        let mut frame = frame_by_transport(c, seed, case, &cfg.tol)?;
        if cfg.theta0 != 0.0 {
            frame = frame.rotated(cfg.theta0);
        }
        h.times.push(t);
        h.drift.push(c.unit_speed_drift());
        h.curves.push(c.clone());
        h.seeds.push(frame.e1[0]);
        h.frames.push(frame);
        Ok(())
    };

    let mut curve = c0.clone();
    let mut reference = curve.unit_speed_drift();
    record(&mut history, &curve, seed, 0.0)?;
    for k in 1..=cfg.steps {
        let (next, next_seed) = stepper.advance(&curve, seed)?;
        curve = next;
        seed = next_seed;
        let drift = curve.unit_speed_drift();
        if drift - reference > cfg.unit_speed_tol {
            if !cfg.resample_on_drift {
                return Err(VfeError::ArcLengthDrift {
                    drift,
                    tol: cfg.unit_speed_tol,
                    step: k,
                });
            }
            let resampled = resample_arclength(curve.samples(), curve.len(), *curve.topology(), &cfg.tol)?;
            log::warn!("step {k}: drift {drift:.3e} exceeded tolerance, curve resampled");
            curve = DiscreteCurve::classified(resampled.samples().to_vec(), curve.ds(), *curve.topology(), &cfg.tol)?;
            reference = curve.unit_speed_drift();
            let t = curve.tangent_field(&cfg.tol)?;
            let eps_t = case.signs()[0].value();
            let e1 = seed - t[0] * (eps_t * seed.dot(t[0]));
            seed = e1 * (1.0 / e1.norm());
            history.discontinuities.push(k.div_ceil(cfg.record_every));
        }
        if k % cfg.record_every == 0 {
            record(&mut history, &curve, seed, k as f64 * cfg.dt)?;
        }
    }
    Ok(history)
}

/// Time-derivative matrix of the parallel frame at one sample in the
/// vanishing gauge.
pub fn frame_t_matrix(case: CausalCase, k1: f64, k2: f64, k1s: f64, k2s: f64) -> FrameCoefficientMatrix {
    let a = match case {
        CausalCase::TimelikeCurve => {
            let u = 0.5 * (k1 * k1 + k2 * k2);
            [[0.0, -k2s, k1s], [-k2s, 0.0, u], [k1s, -u, 0.0]]
        }
        CausalCase::SpacelikeTimelikeNormal => {
            let u = 0.5 * (k1 * k1 - k2 * k2);
            [[0.0, k2s, k1s], [k2s, 0.0, u], [-k1s, u, 0.0]]
        }
        CausalCase::SpacelikeTimelikeBinormal => {
            let u = -0.5 * (k1 * k1 - k2 * k2);
            [[0.0, k2s, k1s], [-k2s, 0.0, u], [k1s, u, 0.0]]
        }
    };
    FrameCoefficientMatrix::new(a, case.signs())
}

/// [`frame_t_matrix`] at every sample, with `k_s` from centered differences
/// (one-sided at the two ends).
pub fn frame_t_matrices(pf: &ParallelFrameField) -> Vec<FrameCoefficientMatrix> {
    let k1s = crate::curve::scalar_derivative(&pf.k1, pf.ds);
    let k2s = crate::curve::scalar_derivative(&pf.k2, pf.ds);
    (0..pf.len())
        .map(|i| frame_t_matrix(pf.case, pf.k1[i], pf.k2[i], k1s[i], k2s[i]))
        .collect()
}

/// The gauge function `u` of the time-frame matrix from the principal
/// curvatures.
pub fn gauge_u(case: CausalCase, k1: f64, k2: f64) -> f64 {
    match case {
        CausalCase::TimelikeCurve => 0.5 * (k1 * k1 + k2 * k2),
        CausalCase::SpacelikeTimelikeNormal => 0.5 * (k1 * k1 - k2 * k2),
        CausalCase::SpacelikeTimelikeBinormal => -0.5 * (k1 * k1 - k2 * k2),
    }
}

/// Residual of the time-frame equations on a history: centered time
/// differences of `(T, E1, E2)` minus [`frame_t_matrix`] applied to the
/// frame, as the largest component at each interior grid point.
pub fn time_frame_residual(h: &FlowHistory) -> Result<ResidualReport> {
    time_residual(h, "frame-t", |d, a, f| a.residual(d, f))
}

/// Residual of the tangent evolution `T_t = (α_t)_s`, i.e. the first row
/// of the time-frame matrix.
pub fn tangent_evolution_residual(h: &FlowHistory) -> Result<ResidualReport> {
    time_residual(h, "tangent-t", |d, a, f| {
        let predicted = f[0] * a.a[0][0] + f[1] * a.a[0][1] + f[2] * a.a[0][2];
        (d[0] - predicted).max_abs()
    })
}

fn time_residual(
    h: &FlowHistory,
    name: &str,
    pointwise: impl Fn(&[MVector; 3], &FrameCoefficientMatrix, &[MVector; 3]) -> f64,
) -> Result<ResidualReport> {
    let mask = pde_mask(h)?;
    let dt = h.dt();
    let mut grid = vec![vec![0.0; mask.ns]; mask.nt];
    for j in mask.times() {
        let mats = frame_t_matrices(&h.frames[j]);
        let (prev, next) = (&h.frames[j - 1], &h.frames[j + 1]);
        for i in mask.samples() {
            let d = [
                (next.t[i] - prev.t[i]) * (0.5 / dt),
                (next.e1[i] - prev.e1[i]) * (0.5 / dt),
                (next.e2[i] - prev.e2[i]) * (0.5 / dt),
            ];
            grid[j][i] = pointwise(&d, &mats[i], &h.frames[j].frame(i));
        }
    }
    Ok(ResidualReport::from_components(name, h.case, &mask, &[(name, grid)]))
}

fn pde_mask(h: &FlowHistory) -> Result<InteriorMask> {
    crate::pde::CurvatureGrid::from_history(h).mask()
}

/// The gauge function recovered from recorded frames,
/// `u_rec = ε_{E2} <(E1)_t, E2>`, compared with its closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaugeReport {
    /// `max_i (u_rec − u) − min_i (u_rec − u)` at each interior time.
    pub spread: Vec<f64>,
    /// Mean of `u_rec − u` over the interior samples at each interior time;
    /// the discrete gauge function `c(t)`.
    pub offset: Vec<f64>,
}

impl GaugeReport {
    pub fn max_spread(&self) -> f64 {
        self.spread.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_offset(&self) -> f64 {
        self.offset.iter().map(|c| c.abs()).fold(0.0, f64::max)
    }
}

pub fn gauge_consistency(h: &FlowHistory) -> Result<GaugeReport> {
    let mask = pde_mask(h)?;
    let dt = h.dt();
    let eps2 = h.case.signs()[2].value();
    let mut spread = Vec::new();
    let mut offset = Vec::new();
    for j in mask.times() {
        let f = &h.frames[j];
        let gaps: Vec<f64> = mask
            .samples()
            .map(|i| {
                let e1t = (h.frames[j + 1].e1[i] - h.frames[j - 1].e1[i]) * (0.5 / dt);
                eps2 * e1t.dot(f.e2[i]) - gauge_u(h.case, f.k1[i], f.k2[i])
            })
            .collect();
        let hi = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        spread.push(hi - lo);
        offset.push(gaps.iter().sum::<f64>() / gaps.len() as f64);
    }
    Ok(GaugeReport { spread, offset })
}
