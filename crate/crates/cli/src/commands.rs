//! The four subcommands. Each writes its artifacts into a directory and
//! returns a summary; exit codes are decided by the caller.

use std::path::Path;
use std::thread;

use serde::{Deserialize, Serialize};
use serde_json::json;

use vfe_core::convergence::{ConvergenceTable, RefinementLevel};
use vfe_core::flow::{self, infer_case, run, time_frame_residual, FlowHistory};
use vfe_core::frames::{default_seed, frame_by_transport};
use vfe_core::frenet::frenet_apparatus;
use vfe_core::io::{self, RunManifest};
use vfe_core::pde::{self, ComplexField, CurvatureGrid, HeatPair, ResidualReport};
use vfe_core::{CausalCase, MVector};

use crate::config::{DtScaling, RunConfig, VerifySettings};
use crate::error::CliResult;

pub const GENERATE_FILE: &str = "generate.json";
pub const VERIFY_FILE: &str = "verify.json";
pub const RESIDUAL_FILE: &str = "residuals.csv";
pub const CONVERGE_FILE: &str = "converge.json";
pub const CONVERGE_CSV: &str = "convergence.csv";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerateSummary {
    pub case: CausalCase,
    pub n: usize,
    pub ds: f64,
    pub topology: vfe_core::Topology,
    pub config: RunConfig,
}

/// Writes the initial curve and its parallel frame.
pub fn generate(cfg: &RunConfig, dir: &Path) -> CliResult<GenerateSummary> {
    let c = cfg.generator.build(&cfg.flow.tol)?;
    let case = infer_case(&c, &cfg.flow)?;
    let fa = frenet_apparatus(&c, &cfg.flow.tol)?;
    let normal = (fa.n[0] != MVector::ZERO).then_some(fa.n[0]);
    let seed = default_seed(fa.t[0], normal, case, cfg.flow.theta0, &cfg.flow.tol)?;
    let frame = frame_by_transport(&c, seed, case, &cfg.flow.tol)?;
    std::fs::create_dir_all(dir)?;
    io::write_curve_csv(&dir.join("curve.csv"), &c)?;
    io::write_frame_csv(&dir.join("frame.csv"), &frame)?;
    let summary = GenerateSummary {
        case,
        n: c.len(),
        ds: c.ds(),
        topology: *c.topology(),
        config: cfg.clone(),
    };
    io::write_json(&dir.join(GENERATE_FILE), &summary)?;
    Ok(summary)
}

/// Integrates the flow and saves every recorded snapshot.
pub fn simulate(cfg: &RunConfig, dir: &Path) -> CliResult<RunManifest> {
    let c = cfg.generator.build(&cfg.flow.tol)?;
    let h = run(&c, &cfg.flow)?;
    log::info!("{} snapshots, {} substeps per step, max drift {:.3e}", h.len(), h.substeps, h.max_drift());
    let source = serde_json::to_value(cfg).map_err(vfe_core::VfeError::from)?;
    Ok(io::save_history(dir, &h, source)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub case: CausalCase,
    pub settings: VerifySettings,
    pub reports: Vec<ResidualReport>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// The curvature-evolution residual and the NLS or heat residual,
/// depending on the case.
fn residual_reports(h: &FlowHistory) -> CliResult<Vec<ResidualReport>> {
    let g = CurvatureGrid::from_history(h);
    let curvature = pde::curvature_evolution_residual(&g)?;
    let pde_report = if h.case.is_timelike() {
        pde::nls_residual(&ComplexField::from_grid(&g)?)?
    } else {
        pde::heat_residual(&HeatPair::from_grid(&g)?)?
    };
    Ok(vec![pde_report, curvature])
}

/// Recomputes residuals from a saved run and checks them against the
/// tolerances in `overrides`, the run's own configuration, or the defaults,
/// in that order.
pub fn verify(dir: &Path, overrides: Option<VerifySettings>) -> CliResult<VerifyOutcome> {
    let (h, manifest) = io::load_history(dir)?;
    let settings = overrides.unwrap_or_else(|| {
        manifest
            .source
            .get("verify")
            .and_then(|v| serde_json::from_value(v.clone()).ok())
            .unwrap_or_default()
    });
    let mut reports = residual_reports(&h)?;
    reports.push(time_frame_residual(&h)?);
    let mut checks: Vec<Check> = reports
        .iter()
        .map(|r| Check::at_most(&format!("{} residual l2", r.equation), r.l2_norm, settings.residual_tol))
        .collect();
    let ortho = h.frames.iter().map(|f| f.orthonormality_defect()).fold(0.0, f64::max);
    checks.push(Check::at_most("frame orthonormality", ortho, settings.frame_tol));
    if h.discontinuities.is_empty() {
        let growth = h.max_drift() - h.drift[0];
        checks.push(Check::at_most("unit-speed drift growth", growth, h.config.unit_speed_tol));
    }
    let pass = checks.iter().all(|c| c.pass);

    let g = CurvatureGrid::from_history(&h);
    let (r1, r2) = pde::curvature_residual_grids(&g)?;
    let (a, b, names) = if h.case.is_timelike() {
        let z = pde::nls_residual_grid(&ComplexField::from_grid(&g)?)?;
        let re = z.iter().map(|row| row.iter().map(|v| v.re).collect()).collect();
        let im = z.iter().map(|row| row.iter().map(|v| v.im).collect()).collect();
        (re, im, ["nls_re", "nls_im"])
    } else {
        let (q, r) = pde::heat_residual_grids(&HeatPair::from_grid(&g)?)?;
        (q, r, ["heat_q", "heat_r"])
    };
    io::write_grid_csv(
        &dir.join(RESIDUAL_FILE),
        &[("k1_residual", &r1), ("k2_residual", &r2), (names[0], &a), (names[1], &b)],
        g.ds,
        g.dt,
    )?;
    let outcome = VerifyOutcome {
        case: h.case,
        settings,
        reports,
        checks,
        pass,
    };
    io::write_json(&dir.join(VERIFY_FILE), &outcome)?;
    Ok(outcome)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeOutcome {
    pub case: CausalCase,
    pub tables: Vec<ConvergenceTable>,
    pub order_target: f64,
    pub order_band: f64,
    pub pass: bool,
}

struct LevelResult {
    n: usize,
    ds: f64,
    dt: f64,
    case: CausalCase,
    reports: Vec<ResidualReport>,
}

fn run_level(cfg: &RunConfig, k: usize, dir: &Path) -> CliResult<LevelResult> {
    let factor = 1usize << k;
    let generator = cfg.generator.refined(factor)?;
    let mut fc = cfg.flow.clone();
    fc.dt /= match cfg.converge.scaling {
        DtScaling::Diffusive => (factor * factor) as f64,
        DtScaling::Linear => factor as f64,
    };
    let c = generator.build(&fc.tol)?;
    let h = flow::run(&c, &fc)?;
    let mut level_cfg = cfg.clone();
    level_cfg.generator = generator;
    level_cfg.flow = fc.clone();
    let source = serde_json::to_value(&level_cfg).map_err(vfe_core::VfeError::from)?;
    io::save_history(&dir.join(format!("level_{k}")), &h, source)?;
    Ok(LevelResult {
        n: c.len(),
        ds: c.ds(),
        dt: h.dt(),
        case: h.case,
        reports: residual_reports(&h)?,
    })
}

/// Runs `cfg.converge.levels` refinement levels concurrently, each halving
/// `ds` and scaling `dt` accordingly, and fits the order of every residual.
pub fn converge(cfg: &RunConfig, dir: &Path) -> CliResult<ConvergeOutcome> {
    std::fs::create_dir_all(dir)?;
    let results: Vec<CliResult<LevelResult>> = thread::scope(|scope| {
        let handles: Vec<_> = (0..cfg.converge.levels)
            .map(|k| scope.spawn(move || run_level(cfg, k, dir)))
            .collect();
        handles.into_iter().map(|h| h.join().expect("refinement level panicked")).collect()
    });
    let levels = results.into_iter().collect::<CliResult<Vec<_>>>()?;
    let case = levels[0].case;
    let tables: Vec<ConvergenceTable> = (0..levels[0].reports.len())
        .map(|q| {
            let rows = levels
                .iter()
                .map(|l| RefinementLevel {
                    n: l.n,
                    ds: l.ds,
                    dt: l.dt,
                    error: l.reports[q].l2_norm,
                })
                .collect();
            ConvergenceTable::new(levels[0].reports[q].equation.clone(), rows)
        })
        .collect();
    let (target, band) = (cfg.converge.order_target, cfg.converge.order_band);
    let pass = tables[0].order_within(target, band);
    write_convergence_csv(&dir.join(CONVERGE_CSV), &tables)?;
    let outcome = ConvergeOutcome {
        case,
        tables,
        order_target: target,
        order_band: band,
        pass,
    };
    io::write_json(&dir.join(CONVERGE_FILE), &outcome)?;
    Ok(outcome)
}

fn write_convergence_csv(path: &Path, tables: &[ConvergenceTable]) -> CliResult<()> {
    let mut out = String::from("quantity,level,n,ds,dt,l2_norm\n");
    for t in tables {
        for (k, l) in t.levels.iter().enumerate() {
            out.push_str(&format!(
                "{},{k},{},{},{},{}\n",
                t.quantity,
                l.n,
                io::fmt_num(l.ds),
                io::fmt_num(l.dt),
                io::fmt_num(l.error)
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Short JSON line printed on stdout after each command.
pub fn summary_line(command: &str, dir: &Path, pass: Option<bool>, extra: serde_json::Value) -> String {
    json!({
        "command": command,
        "dir": dir.display().to_string(),
        "pass": pass,
        "details": extra,
    })
    .to_string()
}
