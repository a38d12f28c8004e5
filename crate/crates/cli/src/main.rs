use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use vfe_cli::commands::{self, summary_line};
use vfe_cli::error::{EXIT_ACCEPTANCE, EXIT_PASS};
use vfe_cli::{CliResult, RunConfig, VerifySettings};

#[derive(Parser)]
#[command(name = "vfe", version, about = "Binormal flow of curves in Minkowski 3-space")]
struct Cli {
    /// Log progress to stderr (overridden by RUST_LOG).
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the initial curve and its parallel frame.
    Generate(RunArgs),
    /// Integrate the flow and save snapshots.
    Simulate(RunArgs),
    /// Recompute residuals of a saved run and check them.
    Verify(VerifyArgs),
    /// Refinement study with fitted convergence orders.
    Converge(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML configuration; its keys override the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory. Defaults to <output root>/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "VFE_OUTPUT_ROOT", default_value = "runs")]
    output_root: PathBuf,
    #[arg(long)]
    name: Option<String>,

    /// line, circle, timelike-helix, spacelike-helix or from-file.
    #[arg(long)]
    generator: Option<String>,
    #[arg(long)]
    n: Option<i64>,
    #[arg(long)]
    ds: Option<f64>,
    /// Causal class of a line: timelike or spacelike.
    #[arg(long)]
    class: Option<String>,
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    length: Option<f64>,
    /// Frame case of a spacelike helix, also forced on the flow.
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    path: Option<PathBuf>,
    /// Topology of a from-file curve: open or closed.
    #[arg(long)]
    topology: Option<String>,

    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<i64>,
    #[arg(long)]
    record_every: Option<i64>,
    #[arg(long)]
    theta0: Option<f64>,
    #[arg(long)]
    unit_speed_tol: Option<f64>,
    #[arg(long)]
    resample_on_drift: bool,
    #[arg(long)]
    substep_cfl: Option<f64>,
    #[arg(long)]
    filter_level: Option<f64>,

    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    frame_tol: Option<f64>,
    #[arg(long)]
    levels: Option<i64>,
    /// diffusive (dt ∝ ds²) or linear (dt ∝ ds).
    #[arg(long)]
    scaling: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    run_dir: PathBuf,
    #[arg(long)]
    residual_tol: Option<f64>,
    #[arg(long)]
    frame_tol: Option<f64>,
}

fn put(t: &mut Table, key: &str, v: Option<impl Into<Value>>) {
    if let Some(v) = v {
        t.insert(key.into(), v.into());
    }
}

fn section(root: &mut Table, key: &str, t: Table) {
    if !t.is_empty() {
        root.insert(key.into(), Value::Table(t));
    }
}

impl RunArgs {
    fn flag_table(&self) -> Table {
        let mut root = Table::new();
        put(&mut root, "name", self.name.clone());

        let mut g = Table::new();
        put(&mut g, "kind", self.generator.clone());
        put(&mut g, "n", self.n);
        put(&mut g, "ds", self.ds);
        put(&mut g, "class", self.class.clone());
        put(&mut g, "radius", self.radius);
        put(&mut g, "a", self.a);
        put(&mut g, "b", self.b);
        put(&mut g, "omega", self.omega);
        put(&mut g, "length", self.length);
        if self.generator.as_deref() == Some("spacelike-helix") {
            put(&mut g, "case", self.case.clone());
        }
        put(&mut g, "path", self.path.as_ref().map(|p| p.display().to_string()));
        put(&mut g, "topology", self.topology.clone());
        section(&mut root, "generator", g);

        let mut f = Table::new();
        put(&mut f, "dt", self.dt);
        put(&mut f, "steps", self.steps);
        put(&mut f, "record_every", self.record_every);
        put(&mut f, "theta0", self.theta0);
        put(&mut f, "unit_speed_tol", self.unit_speed_tol);
        put(&mut f, "resample_on_drift", self.resample_on_drift.then_some(true));
        put(&mut f, "substep_cfl", self.substep_cfl);
        put(&mut f, "filter_level", self.filter_level);
        put(&mut f, "case", self.case.clone());
        section(&mut root, "flow", f);

        let mut v = Table::new();
        put(&mut v, "residual_tol", self.residual_tol);
        put(&mut v, "frame_tol", self.frame_tol);
        section(&mut root, "verify", v);

        let mut c = Table::new();
        put(&mut c, "levels", self.levels);
        put(&mut c, "scaling", self.scaling.clone());
        section(&mut root, "converge", c);
        root
    }

    fn load(&self) -> CliResult<(RunConfig, PathBuf)> {
        let cfg = RunConfig::from_layers(self.flag_table(), self.config.as_deref())?;
        let dir = self.out.clone().unwrap_or_else(|| self.output_root.join(&cfg.name));
        Ok((cfg, dir))
    }
}

fn execute(command: &Command) -> CliResult<(bool, String)> {
    match command {
        Command::Generate(args) => {
            let (cfg, dir) = args.load()?;
            let s = commands::generate(&cfg, &dir)?;
            let extra = serde_json::json!({"case": s.case, "n": s.n, "ds": s.ds});
            Ok((true, summary_line("generate", &dir, None, extra)))
        }
        Command::Simulate(args) => {
            let (cfg, dir) = args.load()?;
            let m = commands::simulate(&cfg, &dir)?;
            let drift = m.snapshots.iter().map(|s| s.drift).fold(0.0, f64::max);
            let extra = serde_json::json!({
                "case": m.case,
                "snapshots": m.snapshots.len(),
                "substeps": m.substeps,
                "max_drift": drift,
            });
            Ok((true, summary_line("simulate", &dir, None, extra)))
        }
        Command::Verify(args) => {
            let overrides = verify_overrides(args, &args.run_dir)?;
            let o = commands::verify(&args.run_dir, overrides)?;
            let failed: Vec<&str> = o.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            let extra = serde_json::json!({"case": o.case, "checks": o.checks.len(), "failed": failed});
            Ok((o.pass, summary_line("verify", &args.run_dir, Some(o.pass), extra)))
        }
        Command::Converge(args) => {
            let (cfg, dir) = args.load()?;
            let o = commands::converge(&cfg, &dir)?;
            let orders: Vec<_> = o.tables.iter().map(|t| serde_json::json!({"quantity": t.quantity, "order": t.order})).collect();
            Ok((o.pass, summary_line("converge", &dir, Some(o.pass), serde_json::json!({"orders": orders}))))
        }
    }
}

/// Flag overrides for `verify`; missing values come from the run itself.
fn verify_overrides(args: &VerifyArgs, dir: &Path) -> CliResult<Option<VerifySettings>> {
    if args.residual_tol.is_none() && args.frame_tol.is_none() {
        return Ok(None);
    }
    let manifest: vfe_core::io::RunManifest = vfe_core::io::read_json(&dir.join(vfe_core::io::MANIFEST_FILE))?;
    let mut s: VerifySettings = manifest
        .source
        .get("verify")
        .and_then(|v| serde_json::from_value(v.clone()).ok())
        .unwrap_or_default();
    if let Some(t) = args.residual_tol {
        s.residual_tol = t;
    }
    if let Some(t) = args.frame_tol {
        s.frame_tol = t;
    }
    Ok(Some(s))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match execute(&cli.command) {
        Ok((pass, line)) => {
            println!("{line}");
            ExitCode::from(if pass { EXIT_PASS } else { EXIT_ACCEPTANCE } as u8)
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
