//! Command-line front end.
//!
//! Exit status: 0 success, 2 configuration / parse / I/O error, 3 numerical blowup.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::dressler::{DresslerOracle, DresslerParams, ExactSolution};
use crate::error::{Error, Result};
use crate::harness::{self, Preset, StudySpec, SweepSpec};
use crate::model::{FlowState, GridSpec, InitialCondition, Scenario};
use crate::plot;
use crate::scheme::{BoundaryMode, Stepper};
use crate::stability::{self, DEFAULT_PHI, DEFAULT_R_STAR};

#[derive(Debug, Parser)]
#[command(
    name = "swe-maccormack",
    version,
    about = "1D shallow water MacCormack solver"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write its time series to OUT/run.csv.
    Simulate(Common),
    /// Grid-refinement study against the dam-break solution.
    Converge(Common),
    /// Evaluate the stability conditions over (dt, dx, phi, r*) tuples.
    Stability(Common),
    /// Error norms of one dam-break run against the exact solution.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Compare the exact solution with itself (expects 0, 0).
        #[arg(long)]
        oracle_only: bool,
    },
    /// SVG profiles of a run CSV.
    Plot {
        #[command(flatten)]
        common: Common,
        /// Run CSV to plot (default OUT/run.csv).
        #[arg(long, value_name = "PATH")]
        csv: Option<PathBuf>,
        /// Comma-separated level indices (default 0, N/4, N/2, 3N/4, N).
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON scenario file.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Time step (s).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Mesh size (m).
    #[arg(long)]
    pub dx: Option<f64>,
    /// Phase angle (rad).
    #[arg(long)]
    pub phi: Option<f64>,
    /// Free parameter r* in (0, 1).
    #[arg(long)]
    pub rstar: Option<f64>,
    /// Boundary closure.
    #[arg(long, value_parser = ["ghost", "analytic"])]
    pub boundary: Option<String>,
    /// Cross-section floor (m^2).
    #[arg(long)]
    pub amin: Option<f64>,
    /// Worker threads (default: all processors).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Keep every K-th time level in the run CSV.
    #[arg(long, value_name = "K", default_value_t = 1)]
    pub thin: usize,
    /// Scenario preset: dressler-dambreak, garoua-flume or uniform-steady.
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub preset: Option<String>,
    pub geometry: Option<GeometryConfig>,
    pub grid: Option<GridConfig>,
    pub rainfall: Option<RainfallConfig>,
    pub initial: Option<InitialConfig>,
    pub boundary: Option<BoundaryMode>,
    pub a_min: Option<f64>,
    pub stability: Option<StabilityConfig>,
    pub study: Option<StudyConfig>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub top_width: Option<f64>,
    pub wetted_perimeter: Option<f64>,
    pub manning: Option<f64>,
    pub shear_stress: Option<f64>,
    pub density: Option<f64>,
    pub gravity: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub length: Option<f64>,
    pub horizon: Option<f64>,
    pub dx: Option<f64>,
    pub dt: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RainfallConfig {
    pub intensity: Option<f64>,
    pub t_start: Option<f64>,
    pub t_end: Option<f64>,
    pub x_lo: Option<f64>,
    pub x_hi: Option<f64>,
    pub lateral_scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    Dressler(DresslerParams),
    Uniform { area: f64, discharge: f64 },
    State { area: Vec<f64>, discharge: Vec<f64> },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub phi: Option<Vec<f64>>,
    pub r_star: Option<Vec<f64>>,
    pub dt: Option<Vec<f64>>,
    pub dx: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub ladder: Option<Vec<(f64, f64)>>,
    pub oracle: Option<bool>,
}

pub fn load_config(path: &Path) -> Result<Config> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn uniform_value(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    values.iter().all(|&v| v == first).then_some(first)
}

/// Preset, then config sections, then command-line overrides.
pub fn resolve_scenario(config: &Config, common: &Common) -> Result<Scenario> {
    let name = common
        .preset
        .as_deref()
        .or(config.preset.as_deref())
        .unwrap_or(Preset::DresslerDambreak.name());
    let mut s = harness::preset_by_name(name)?;

    if let Some(g) = &config.geometry {
        let geo = &mut s.geometry;
        geo.top_width = g.top_width.unwrap_or(geo.top_width);
        geo.wetted_perimeter = g.wetted_perimeter.unwrap_or(geo.wetted_perimeter);
        geo.manning = g.manning.unwrap_or(geo.manning);
        geo.shear_stress = g.shear_stress.unwrap_or(geo.shear_stress);
        geo.density = g.density.unwrap_or(geo.density);
        geo.gravity = g.gravity.unwrap_or(geo.gravity);
    }
    if let Some(r) = &config.rainfall {
        let rain = &mut s.rainfall;
        rain.intensity = r.intensity.unwrap_or(rain.intensity);
        rain.t_start = r.t_start.unwrap_or(rain.t_start);
        rain.t_end = r.t_end.unwrap_or(rain.t_end);
        rain.x_lo = r.x_lo.unwrap_or(rain.x_lo);
        rain.x_hi = r.x_hi.unwrap_or(rain.x_hi);
        rain.lateral_scale = r.lateral_scale.unwrap_or(rain.lateral_scale);
    }
    if let Some(b) = config.boundary {
        s.boundary = b;
    }
    if let Some(b) = &common.boundary {
        s.boundary = b.parse()?;
    }
    if let Some(a) = config.a_min {
        s.a_min = a;
    }
    if let Some(a) = common.amin {
        s.a_min = a;
    }

    let gc = config.grid.as_ref();
    let pick = |c: Option<f64>, cli: Option<f64>, base: f64| cli.or(c).unwrap_or(base);
    let grid = GridSpec::new(
        gc.and_then(|g| g.length).unwrap_or(s.grid.length),
        gc.and_then(|g| g.horizon).unwrap_or(s.grid.horizon),
        pick(gc.and_then(|g| g.dx), common.dx, s.grid.dx),
        pick(gc.and_then(|g| g.dt), common.dt, s.grid.dt),
    )?;
    let nodes = grid.node_count();

    s.initial = match &config.initial {
        Some(InitialConfig::Dressler(p)) => InitialCondition::Dressler(*p),
        Some(InitialConfig::Uniform { area, discharge }) => {
            InitialCondition::State(FlowState::uniform(nodes, *area, *discharge))
        }
        Some(InitialConfig::State { area, discharge }) => {
            InitialCondition::State(FlowState::new(area.clone(), discharge.clone(), 0)?)
        }
        // Preset initial conditions follow the grid.
        None => match &s.initial {
            InitialCondition::Dressler(p) => InitialCondition::Dressler(DresslerParams {
                length: grid.length,
                ..*p
            }),
            InitialCondition::State(st) => {
                match (uniform_value(&st.area), uniform_value(&st.discharge)) {
                    (Some(a), Some(q)) => InitialCondition::State(FlowState::uniform(nodes, a, q)),
                    _ => InitialCondition::State(st.clone()),
                }
            }
        },
    };
    s.grid = grid;
    s.validate()?;
    Ok(s)
}

fn oracle_of(s: &Scenario) -> Option<DresslerOracle> {
    s.oracle().map(|p| DresslerOracle {
        params: *p,
        top_width: s.geometry.top_width,
    })
}

fn jobs(common: &Common) -> usize {
    common.jobs.unwrap_or(0)
}

fn cmd_simulate(config: &Config, common: &Common) -> Result<()> {
    let s = resolve_scenario(config, common)?;
    let run = Stepper::new(&s)?.run(common.thin)?;
    std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    let path = common.out.join("run.csv");
    let oracle = oracle_of(&s);
    harness::persist_run(
        &run,
        &s.grid,
        oracle.as_ref().map(|o| o as &dyn ExactSolution),
        &path,
    )?;
    eprintln!(
        "simulated {} levels x {} nodes; wrote {}",
        s.grid.levels + 1,
        s.grid.node_count(),
        path.display()
    );
    Ok(())
}

fn cmd_converge(config: &Config, common: &Common) -> Result<()> {
    let base = resolve_scenario(config, common)?;
    let study = config.study.as_ref();
    let ladder = match (common.dt, common.dx) {
        (Some(dt), Some(dx)) => vec![(dt, dx)],
        (None, None) => study
            .and_then(|s| s.ladder.clone())
            .unwrap_or_else(harness::reference_ladder),
        _ => {
            return Err(Error::Config(
                "--dt and --dx must be given together for converge".into(),
            ))
        }
    };
    let spec = StudySpec {
        base,
        ladder,
        oracle: study.and_then(|s| s.oracle).unwrap_or(true),
        out_dir: Some(common.out.clone()),
    };
    let outcome = harness::run_convergence_study(&spec, jobs(common))?;
    for (k, rung) in outcome.rungs.iter().enumerate() {
        if let Err(e) = &rung.result {
            eprintln!("rung {k} (dt = {}, dx = {}) failed: {e}", rung.dt, rung.dx);
        }
    }
    eprintln!("{}", harness::UPSTREAM_NOTE);
    print!("{}", outcome.report.to_table());
    eprintln!("wrote {}", common.out.join("convergence.csv").display());
    Ok(())
}

fn cmd_stability(config: &Config, common: &Common) -> Result<()> {
    let scenario = resolve_scenario(config, common)?;
    let sc = config.stability.as_ref();
    let phis = match common.phi {
        Some(phi) => vec![phi],
        None => sc
            .and_then(|c| c.phi.clone())
            .unwrap_or_else(|| vec![DEFAULT_PHI]),
    };
    let r_stars = match common.rstar {
        Some(r) => vec![r],
        None => sc
            .and_then(|c| c.r_star.clone())
            .unwrap_or_else(|| vec![DEFAULT_R_STAR]),
    };
    let dts = common
        .dt
        .map(|v| vec![v])
        .or_else(|| sc.and_then(|c| c.dt.clone()));
    let dxs = common
        .dx
        .map(|v| vec![v])
        .or_else(|| sc.and_then(|c| c.dx.clone()));
    // Validate each requested angle and r* before sweeping (phi = 0 is a precondition error).
    for &phi in &phis {
        for &r in &r_stars {
            stability::StabilityInputs {
                dt: 1.0,
                dx: 1.0,
                phi,
                r_star: r,
                bounds: stability::flow_bounds(&scenario.geometry, &scenario.initial_state()),
                gamma0: stability::gamma0(&scenario.geometry),
            }
            .validate()?;
        }
    }
    let spec = match (dts, dxs) {
        (None, None) => SweepSpec {
            steps: harness::reference_ladder(),
            phis,
            r_stars,
            scenario: scenario.clone(),
        },
        (dts, dxs) => SweepSpec::from_ranges(
            &dts.unwrap_or_else(|| vec![scenario.grid.dt]),
            &dxs.unwrap_or_else(|| vec![scenario.grid.dx]),
            phis,
            r_stars,
            scenario.clone(),
        ),
    };
    let cells = harness::run_stability_sweep(&spec, jobs(common))?;
    let path = common.out.join("stability.csv");
    harness::write_file(&path, &harness::sweep_to_csv(&cells))?;
    if let Some(c) = cells.first() {
        let b = c.report.inputs.bounds;
        println!(
            "flow bounds: mu = {:.6e}, absA = {:.6e}, P = {:.6e}, R = {:.6e}, N = {:.6e}",
            b.mu, b.abs_a, b.pn, b.rn, b.nn
        );
    }
    for c in &cells {
        let r = &c.report;
        println!(
            "dt = {:.6e} dx = {:.6e} phi = {:.6} r* = {:.3}: cond_A {} ({:.3e})  cond_Q {} ({:.3e})  combined {} ({:.3e})  empirical {} ({:.3e}){}",
            c.dt,
            c.dx,
            c.phi,
            c.r_star,
            r.cond_a.satisfied,
            r.cond_a.slack,
            r.cond_q.satisfied,
            r.cond_q.slack,
            r.combined.satisfied,
            r.combined.slack,
            r.empirical.satisfied,
            r.empirical.slack,
            if r.small_angle_ok { "" } else { "  [|phi| > pi/4]" },
        );
    }
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn cmd_validate(config: &Config, common: &Common, oracle_only: bool) -> Result<()> {
    let s = resolve_scenario(config, common)?;
    let pair = if oracle_only {
        harness::validate_oracle(&s)?
    } else {
        harness::validate_scenario(&s)?
    };
    if !oracle_only {
        eprintln!("{}", harness::UPSTREAM_NOTE);
    }
    println!("errA = {:.6e}", pair.err_a);
    println!("errQ = {:.6e}", pair.err_q);
    if !(pair.err_a.is_finite() && pair.err_q.is_finite()) {
        return Err(Error::NonFinite { level: 0, node: 0 });
    }
    Ok(())
}

fn cmd_plot(common: &Common, csv: Option<PathBuf>, levels: Option<Vec<usize>>) -> Result<()> {
    let csv = csv.unwrap_or_else(|| common.out.join("run.csv"));
    let profiles = plot::read_run_csv(&csv)?;
    let levels = levels.unwrap_or_else(|| plot::default_levels(profiles.len()));
    let written = plot::write_plots(&profiles, &levels, &common.out)?;
    eprintln!(
        "wrote {} SVG file(s) to {}",
        written.len(),
        common.out.display()
    );
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::Converge(c) | Command::Stability(c) => c,
        Command::Validate { common, .. } | Command::Plot { common, .. } => common,
    };
    let config = match &common.config {
        Some(path) => load_config(path)?,
        None => Config::default(),
    };
    match &cli.command {
        Command::Simulate(c) => cmd_simulate(&config, c),
        Command::Converge(c) => cmd_converge(&config, c),
        Command::Stability(c) => cmd_stability(&config, c),
        Command::Validate {
            common,
            oracle_only,
        } => cmd_validate(&config, common, *oracle_only),
        Command::Plot {
            common,
            csv,
            levels,
        } => cmd_plot(common, csv.clone(), levels.clone()),
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
