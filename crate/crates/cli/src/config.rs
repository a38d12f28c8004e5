//! Run configuration: which curve to start from, how to integrate it and
//! what to accept.
//!
//! A configuration is assembled from two layers, command-line flags and an
//! optional TOML file, with the file taking precedence key by key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::Table;

use vfe_core::curve::MIN_SAMPLES;
use vfe_core::flow::FlowConfig;
use vfe_core::seeds;
use vfe_core::{io, CausalCase, CausalClass, DiscreteCurve, Tolerances, Topology, VfeError};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileTopology {
    Open,
    Closed,
}

/// Initial curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Generator {
    /// Straight line along `x0` (timelike) or `x1` (spacelike).
    Line { class: CausalClass, n: usize, ds: f64 },
    Circle {
        #[serde(default = "one")]
        radius: f64,
        n: usize,
    },
    /// `(b s, a cos ωs, a sin ωs)`; `b` is solved from the unit-speed
    /// relation and only checked when given.
    TimelikeHelix {
        a: f64,
        omega: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
        n: usize,
    },
    /// Spacelike helix family of `case` over `s ∈ [0, length)`; `a` is
    /// solved from the unit-speed relation and only checked when given.
    SpacelikeHelix {
        case: CausalCase,
        b: f64,
        omega: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<f64>,
        #[serde(default = "two")]
        length: f64,
        n: usize,
    },
    /// Points read from a curve CSV.
    FromFile {
        path: PathBuf,
        topology: FileTopology,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ds: Option<f64>,
    },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

impl Generator {
    pub fn build(&self, tol: &Tolerances) -> CliResult<DiscreteCurve> {
        let c = match self {
            Generator::Line { class, n, ds } => seeds::line(*class, *n, *ds, tol)?,
            Generator::Circle { radius, n } => seeds::circle(*radius, *n, tol)?,
            Generator::TimelikeHelix { a, omega, b, n } => {
                if let Some(b) = b {
                    seeds::check_timelike_helix(*a, *b, *omega)?;
                }
                seeds::timelike_helix(*a, *omega, *n, tol)?
            }
            Generator::SpacelikeHelix { case, b, omega, a, length, n } => {
                if let Some(a) = a {
                    seeds::check_spacelike_helix(*case, *a, *b, *omega)?;
                }
                seeds::spacelike_helix(*case, *b, *omega, *length, *n, tol)?
            }
            Generator::FromFile { path, topology, ds } => {
                let topology = match topology {
                    FileTopology::Open => Topology::Open,
                    FileTopology::Closed => Topology::Closed,
                };
                io::read_curve_csv(path, topology, *ds, tol)?
            }
        };
        Ok(c)
    }

    /// The same curve sampled `factor` times more finely.
    pub fn refined(&self, factor: usize) -> CliResult<Generator> {
        let mut g = self.clone();
        match &mut g {
            Generator::Line { n, ds, .. } => {
                *n = (*n - 1) * factor + 1;
                *ds /= factor as f64;
            }
            Generator::Circle { n, .. } | Generator::TimelikeHelix { n, .. } | Generator::SpacelikeHelix { n, .. } => {
                *n *= factor;
            }
            Generator::FromFile { .. } => {
                return Err(CliError::Config("a from-file curve cannot be refined".into()));
            }
        }
        Ok(g)
    }

    fn sample_count(&self) -> Option<usize> {
        match self {
            Generator::Line { n, .. }
            | Generator::Circle { n, .. }
            | Generator::TimelikeHelix { n, .. }
            | Generator::SpacelikeHelix { n, .. } => Some(*n),
            Generator::FromFile { .. } => None,
        }
    }
}

/// Acceptance thresholds applied by `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySettings {
    /// Bound on the L2 (root mean square) norm of each residual.
    pub residual_tol: f64,
    /// Bound on the orthonormality defect of every recorded frame.
    pub frame_tol: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            residual_tol: 1e-3,
            frame_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DtScaling {
    /// `dt ∝ ds²`.
    Diffusive,
    /// `dt ∝ ds`.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeSettings {
    /// Number of refinement levels, each halving `ds`.
    pub levels: usize,
    pub scaling: DtScaling,
    pub order_target: f64,
    pub order_band: f64,
}

impl Default for ConvergeSettings {
    fn default() -> Self {
        Self {
            levels: 3,
            scaling: DtScaling::Diffusive,
            order_target: 2.0,
            order_band: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub generator: Generator,
    #[serde(default)]
    pub flow: FlowConfig,
    #[serde(default)]
    pub verify: VerifySettings,
    #[serde(default)]
    pub converge: ConvergeSettings,
}

fn default_name() -> String {
    "run".into()
}

impl RunConfig {
    /// Merges `file` (if any) over the flag layer and validates the result.
    pub fn from_layers(flags: Table, file: Option<&Path>) -> CliResult<RunConfig> {
        let mut table = flags;
        if let Some(path) = file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            let overlay: Table = toml::from_str(&text)?;
            merge(&mut table, overlay);
        }
        let cfg: RunConfig = toml::Value::Table(table).try_into()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> CliResult<RunConfig> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Rejects configurations that cannot run: bad flow settings, seed
    /// parameters violating their unit-speed relation, unreadable input.
    pub fn validate(&self) -> CliResult<()> {
        self.flow.validate()?;
        if let Some(n) = self.generator.sample_count() {
            if n < MIN_SAMPLES {
                return Err(VfeError::ConstraintViolation(format!("n = {n} is below the minimum of {MIN_SAMPLES} samples")).into());
            }
        }
        self.generator.build(&self.flow.tol)?;
        if self.converge.levels < 3 {
            return Err(CliError::Config(format!("converge needs at least 3 levels, got {}", self.converge.levels)));
        }
        if !(self.verify.residual_tol > 0.0 && self.verify.frame_tol > 0.0) {
            return Err(CliError::Config("verify tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// Recursive key-wise merge; values in `over` win.
pub fn merge(base: &mut Table, over: Table) {
    for (key, value) in over {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(key, v);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_overrides_flags() {
        let mut flags = Table::new();
        flags.insert("name".into(), "from-flags".into());
        let mut g = Table::new();
        g.insert("kind".into(), "circle".into());
        g.insert("n".into(), 32.into());
        flags.insert("generator".into(), g.into());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "name = \"from-file\"\n[generator]\nn = 64\n").unwrap();
        let cfg = RunConfig::from_layers(flags, Some(&path)).unwrap();
        assert_eq!(cfg.name, "from-file");
        assert_eq!(cfg.generator, Generator::Circle { radius: 1.0, n: 64 });
    }

    #[test]
    fn helix_relation_is_checked_at_load() {
        let text = "[generator]\nkind = \"timelike-helix\"\na = 1.0\nomega = 1.0\nb = 1.5\nn = 64\n";
        let err = RunConfig::from_toml(text).unwrap_err();
        assert_eq!(err.code(), "cli_runner.constraint_violation");
        assert!(err.to_string().contains("a^2 omega^2 - b^2 = -1"));
        let text = "[generator]\nkind = \"spacelike-helix\"\ncase = \"spacelike-timelike-normal\"\nb = 0.6\nomega = 1.0\na = 0.9\nn = 64\n";
        let err = RunConfig::from_toml(text).unwrap_err();
        assert!(err.to_string().contains("a^2 + b^2 omega^2 = 1"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = "[generator]\nkind = \"circle\"\nn = 64\nradios = 2.0\n";
        assert!(matches!(RunConfig::from_toml(text), Err(CliError::Config(_))));
    }

    #[test]
    fn refinement() {
        let g = Generator::Line {
            class: CausalClass::Spacelike,
            n: 9,
            ds: 0.2,
        };
        assert_eq!(
            g.refined(2).unwrap(),
            Generator::Line {
                class: CausalClass::Spacelike,
                n: 17,
                ds: 0.1
            }
        );
    }
}
