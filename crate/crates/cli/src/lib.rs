//! Batch front end for `floqlin`: one subcommand per pipeline, with CSV
//! tables, 16-bit PGM heatmaps and a JSON metadata file per run.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use floqlin::classical::ClassicalError;
use floqlin::floquet::FloquetError;
use floqlin::fluctuations::FluctuationError;
use floqlin::fock_oracle::OracleError;
use floqlin::positive_p::StochasticError;

pub mod commands;
pub mod config;
pub mod output;

use config::{parse_real, Options, RunConfig};
use output::Outputs;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numerical {
        module: &'static str,
        kind: String,
        message: String,
    },
    Io(String),
}

impl Failure {
    fn numerical<E: std::fmt::Debug + std::fmt::Display>(module: &'static str, e: E) -> Self {
        let debug = format!("{e:?}");
        let kind = debug
            .split(|c: char| !c.is_alphanumeric() && c != '_')
            .next()
            .unwrap_or_default()
            .to_string();
        Failure::Numerical {
            module,
            kind,
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            _ => EXIT_NUMERICAL,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        match self {
            Failure::Usage(m) => json!({"error": {"module": "cli", "kind": "Usage", "message": m}}),
            Failure::Numerical {
                module,
                kind,
                message,
            } => json!({"error": {"module": module, "kind": kind, "message": message}}),
            Failure::Io(m) => json!({"error": {"module": "io", "kind": "Io", "message": m}}),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<ClassicalError> for Failure {
    fn from(e: ClassicalError) -> Self {
        match e {
            ClassicalError::InvalidParams(m) => Failure::Usage(m),
            e => Failure::numerical("classical", e),
        }
    }
}

impl From<FloquetError> for Failure {
    fn from(e: FloquetError) -> Self {
        Failure::numerical("floquet", e)
    }
}

impl From<FluctuationError> for Failure {
    fn from(e: FluctuationError) -> Self {
        match e {
            FluctuationError::Precondition(m) => Failure::Usage(m),
            e => Failure::numerical("fluctuations", e),
        }
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::InvalidOptions(m) => Failure::Usage(m),
            OracleError::Params(e) => e.into(),
            e => Failure::numerical("fock_oracle", e),
        }
    }
}

impl From<StochasticError> for Failure {
    fn from(e: StochasticError) -> Self {
        match e {
            StochasticError::InvalidOptions(m) => Failure::Usage(m),
            StochasticError::Classical(e) => e.into(),
            StochasticError::Fluctuation(e) => e.into(),
            e => Failure::numerical("positive_p", e),
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "floqlin",
    version,
    about = "Quantum fluctuations around limit cycles of the driven Van der Pol oscillator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Region labels of the (Δ², I) plane.
    PhaseDiagram {
        #[command(flatten)]
        common: Common,
        #[arg(long = "I-max", value_parser = parse_real)]
        i_max: Option<f64>,
        #[arg(long = "Delta2-max", value_parser = parse_real)]
        delta2_max: Option<f64>,
        #[arg(long)]
        resolution: Option<usize>,
    },
    /// Stationary branches and cycle intensities against F² at fixed Δ.
    Bifurcation {
        #[command(flatten)]
        common: Common,
        #[arg(long = "F2-min", value_parser = parse_real)]
        f2_min: Option<f64>,
        #[arg(long = "F2-max", value_parser = parse_real)]
        f2_max: Option<f64>,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        n_grid: Option<usize>,
    },
    /// Classical limit cycle on a uniform grid.
    LimitCycle {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_grid: Option<usize>,
    },
    /// Floquet exponents and modes of the cycle.
    Floquet {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_grid: Option<usize>,
    },
    /// Phase-diffusion variance, kernels and optionally a simulation.
    ThetaDiffusion {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_grid: Option<usize>,
        #[arg(long, value_parser = parse_real)]
        t_max: Option<f64>,
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long)]
        simulate: bool,
        #[command(flatten)]
        stochastic: Stochastic,
    },
    /// Linearized mixture Wigner function.
    WignerLinearized {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Steady-state Wigner function of the truncated master equation.
    WignerExact {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Linearized against exact Wigner functions on a shared grid.
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        grid: Grid,
    },
    /// Positive-P ensemble moments, optionally against the Fock oracle.
    PpMoments {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        stochastic: Stochastic,
        #[arg(long, value_parser = parse_real)]
        t_end: Option<f64>,
        #[arg(long, value_parser = parse_real)]
        window_start: Option<f64>,
        #[arg(long)]
        oracle: bool,
        #[arg(long)]
        n_max: Option<usize>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Drive amplitude; decimal or `sqrt:x`.
    #[arg(long = "F", value_parser = parse_real, allow_hyphen_values = true)]
    f: Option<f64>,
    /// Detuning; decimal or `sqrt:x`.
    #[arg(long = "Delta", value_parser = parse_real, allow_hyphen_values = true)]
    delta: Option<f64>,
    /// Nonlinear loss rate.
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    gamma: Option<f64>,
    /// Output directory.
    #[arg(long, short, default_value = "floqlin-out")]
    out: PathBuf,
    /// Config or metadata JSON from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also write a (non-normative) plotting script.
    #[arg(long)]
    emit_plot_script: bool,
}

#[derive(Args, Debug)]
struct Grid {
    #[arg(long)]
    n_grid: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    grid_half_width: Option<f64>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    n_theta: Option<usize>,
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    steady_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct Stochastic {
    #[arg(long)]
    n_traj: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl Grid {
    fn apply(&self, o: &mut Options) {
        set(&mut o.n_grid, self.n_grid);
        if self.grid_half_width.is_some() {
            o.grid_half_width = self.grid_half_width;
        }
        set(&mut o.grid_points, self.grid_points);
        set(&mut o.n_theta, self.n_theta);
        if self.n_max.is_some() {
            o.n_max = self.n_max;
        }
        set(&mut o.steady_tol, self.steady_tol);
    }
}

impl Stochastic {
    fn apply(&self, o: &mut Options) {
        set(&mut o.n_traj, self.n_traj);
        set(&mut o.dt, self.dt);
    }
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PhaseDiagram { .. } => "phase-diagram",
            Command::Bifurcation { .. } => "bifurcation",
            Command::LimitCycle { .. } => "limit-cycle",
            Command::Floquet { .. } => "floquet",
            Command::ThetaDiffusion { .. } => "theta-diffusion",
            Command::WignerLinearized { .. } => "wigner-linearized",
            Command::WignerExact { .. } => "wigner-exact",
            Command::Compare { .. } => "compare",
            Command::PpMoments { .. } => "pp-moments",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::PhaseDiagram { common, .. }
            | Command::Bifurcation { common, .. }
            | Command::LimitCycle { common, .. }
            | Command::Floquet { common, .. }
            | Command::ThetaDiffusion { common, .. }
            | Command::WignerLinearized { common, .. }
            | Command::WignerExact { common, .. }
            | Command::Compare { common, .. }
            | Command::PpMoments { common, .. } => common,
        }
    }

    /// Seed given on the command line, which beats `FLOQLIN_SEED`.
    fn seed(&self) -> Option<u64> {
        match self {
            Command::ThetaDiffusion { stochastic, .. } | Command::PpMoments { stochastic, .. } => {
                stochastic.seed
            }
            _ => None,
        }
    }

    fn apply(&self, o: &mut Options) {
        match self {
            Command::PhaseDiagram {
                i_max,
                delta2_max,
                resolution,
                ..
            } => {
                set(&mut o.i_max, *i_max);
                set(&mut o.delta2_max, *delta2_max);
                set(&mut o.resolution, *resolution);
            }
            Command::Bifurcation {
                f2_min,
                f2_max,
                resolution,
                n_grid,
                ..
            } => {
                set(&mut o.f2_min, *f2_min);
                set(&mut o.f2_max, *f2_max);
                set(&mut o.resolution, *resolution);
                set(&mut o.n_grid, *n_grid);
            }
            Command::LimitCycle { n_grid, .. } | Command::Floquet { n_grid, .. } => {
                set(&mut o.n_grid, *n_grid);
            }
            Command::ThetaDiffusion {
                n_grid,
                t_max,
                n_points,
                simulate,
                stochastic,
                ..
            } => {
                set(&mut o.n_grid, *n_grid);
                set(&mut o.t_max, *t_max);
                set(&mut o.n_points, *n_points);
                o.simulate |= *simulate;
                stochastic.apply(o);
            }
            Command::WignerLinearized { grid, .. }
            | Command::WignerExact { grid, .. }
            | Command::Compare { grid, .. } => grid.apply(o),
            Command::PpMoments {
                stochastic,
                t_end,
                window_start,
                oracle,
                n_max,
                ..
            } => {
                stochastic.apply(o);
                set(&mut o.t_end, *t_end);
                if window_start.is_some() {
                    o.window_start = *window_start;
                }
                o.oracle |= *oracle;
                if n_max.is_some() {
                    o.n_max = *n_max;
                }
            }
        }
    }
}

/// Config from an optional file, then command-line flags, then
/// `FLOQLIN_SEED` unless `--seed` was given.
fn build_config(cmd: &Command, env_seed: Option<String>) -> Result<RunConfig, Failure> {
    let common = cmd.common();
    let mut cfg = match &common.config {
        Some(path) => {
            let c = RunConfig::load(path).map_err(Failure::Usage)?;
            if c.command != cmd.name() {
                return Err(Failure::Usage(format!(
                    "config is for {:?}, not {:?}",
                    c.command,
                    cmd.name()
                )));
            }
            c
        }
        None => RunConfig::new(cmd.name()),
    };
    set(&mut cfg.model.f, common.f);
    set(&mut cfg.model.delta, common.delta);
    set(&mut cfg.model.gamma, common.gamma);
    cmd.apply(&mut cfg.options);
    match (cmd.seed(), env_seed) {
        (Some(s), _) => cfg.options.seed = s,
        (None, Some(s)) => {
            cfg.options.seed = s
                .trim()
                .parse()
                .map_err(|e| Failure::Usage(format!("FLOQLIN_SEED={s:?}: {e}")))?;
        }
        (None, None) => {}
    }
    cfg.model.validate()?;
    Ok(cfg)
}

fn run_command(cmd: &Command) -> Result<(), Failure> {
    let mut cfg = build_config(cmd, std::env::var("FLOQLIN_SEED").ok())?;
    commands::resolve(&mut cfg)?;
    let hash = cfg.sha256();
    let common = cmd.common();
    let mut out = Outputs::new(&common.out, &hash)?;
    let result = (|| {
        let report = commands::execute(&cfg, &mut out)?;
        if common.emit_plot_script {
            out.write("plot_outputs.py", output::PLOT_SCRIPT.as_bytes())?;
        }
        let mut files = out.names();
        files.push("metadata.json".into());
        let meta = json!({
            "tool": "floqlin",
            "version": env!("CARGO_PKG_VERSION"),
            "config_sha256": hash,
            "config": cfg,
            "output_dir": common.out,
            "files": files,
            "heatmaps": report.heatmaps,
            "results": report.results,
        });
        let text = serde_json::to_string_pretty(&meta).map_err(|e| Failure::Io(e.to_string()))?;
        out.write("metadata.json", text.as_bytes())?;
        Ok(())
    })();
    if result.is_err() {
        out.rollback();
    }
    result
}

/// Runs the command line `args` (program name first) and returns the exit
/// status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    match run_command(&cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("{}", f.to_json());
            f.exit_code()
        }
    }
}
