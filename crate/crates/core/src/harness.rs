//! Scenario presets, convergence studies, stability sweeps and CSV output.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::dressler::{DresslerOracle, DresslerParams, ExactSolution, TipHeight};
use crate::error::{Error, Result};
use crate::metrics::{error_norms, ratios_with_failures, ConvergenceReport, ErrorPair};
use crate::model::{
    ChannelGeometry, FlowState, GridSpec, InitialCondition, RainfallSpec, Scenario, WATER_DENSITY,
};
use crate::scheme::{BoundaryMode, Stepper};
use crate::stability::{self, StabilityInputs, StabilityReport};

/// Refinement ladder of the reference convergence table, coarse to fine, as (dt, dx).
pub fn reference_ladder() -> Vec<(f64, f64)> {
    (0..4)
        .map(|k| (2f64.powi(-7 - k), 2f64.powi(-4 - k)))
        .collect()
}

/// Reference errA column for [`reference_ladder`].
pub const REFERENCE_ERR_A: [f64; 4] = [0.0384, 0.0192, 0.0093, 0.0047];

/// Emitted alongside dam-break error norms.
pub const UPSTREAM_NOTE: &str = "note: the exact solution uses u = 0 on the upstream plateau \
while the initial condition starts it at u0 = 0.1 m/s; errors include this mismatch";

/// Cross-section floor of the dam-break preset.
pub const DAMBREAK_A_MIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    DresslerDambreak,
    GarouaFlume,
    UniformSteady,
}

impl Preset {
    pub const ALL: [Preset; 3] = [
        Preset::DresslerDambreak,
        Preset::GarouaFlume,
        Preset::UniformSteady,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::DresslerDambreak => "dressler-dambreak",
            Preset::GarouaFlume => "garoua-flume",
            Preset::UniformSteady => "uniform-steady",
        }
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                "unknown preset '{s}' (expected dressler-dambreak, garoua-flume or uniform-steady)"
            ))
            })
    }
}

/// Benoue river cross section used by all presets.
pub fn benoue_geometry() -> ChannelGeometry {
    ChannelGeometry {
        top_width: 348.0,
        wetted_perimeter: 366.4,
        manning: 0.025,
        shear_stress: 1.329,
        density: WATER_DENSITY,
        gravity: 10.0,
    }
}

pub fn dressler_params() -> DresslerParams {
    DresslerParams {
        h_l: 5e-3,
        x0: 0.5,
        chezy: 40.0,
        gravity: 10.0,
        length: 1.0,
        u0_plateau: 0.1,
        tip: TipHeight::Constant,
    }
}

pub fn preset_by_name(name: &str) -> Result<Scenario> {
    preset(name.parse()?)
}

pub fn preset(p: Preset) -> Result<Scenario> {
    let geometry = benoue_geometry();
    let scenario = match p {
        Preset::DresslerDambreak => Scenario {
            geometry,
            grid: GridSpec::new(1.0, 1.0, 2f64.powi(-4), 2f64.powi(-7))?,
            rainfall: RainfallSpec {
                intensity: 1.18e-5,
                t_start: 0.0,
                t_end: 1.0,
                x_lo: 0.0,
                x_hi: 1.0,
                lateral_scale: geometry.top_width,
            },
            initial: InitialCondition::Dressler(dressler_params()),
            boundary: BoundaryMode::ZeroGradientGhost,
            a_min: DAMBREAK_A_MIN,
        },
        Preset::GarouaFlume => {
            // 4% bed slope at the reference depth of 1 mm, expressed through the shear stress.
            let a_ref = geometry.top_width * 1e-3;
            let shear_stress =
                0.04 * geometry.density * geometry.gravity * a_ref / geometry.wetted_perimeter;
            let grid = GridSpec::new(1150.0, 1.0, 10.0, 2f64.powi(-4))?;
            let nodes = grid.node_count();
            Scenario {
                geometry: ChannelGeometry {
                    shear_stress,
                    ..geometry
                },
                grid,
                rainfall: RainfallSpec {
                    intensity: 1.18e-5,
                    t_start: 0.0,
                    t_end: 1.0,
                    x_lo: 0.0,
                    x_hi: 1000.0,
                    lateral_scale: geometry.top_width,
                },
                initial: InitialCondition::State(FlowState::uniform(nodes, a_ref, 0.0)),
                boundary: BoundaryMode::ZeroGradientGhost,
                a_min: crate::model::DEFAULT_A_MIN,
            }
        }
        Preset::UniformSteady => {
            let dt = 2f64.powi(-7);
            let grid = GridSpec::new(1.0, 1000.0 * dt, 2f64.powi(-4), dt)?;
            let nodes = grid.node_count();
            Scenario {
                geometry: ChannelGeometry {
                    shear_stress: 0.0,
                    ..geometry
                },
                grid,
                rainfall: RainfallSpec::none(),
                initial: InitialCondition::State(FlowState::uniform(nodes, 1.74, 0.0)),
                boundary: BoundaryMode::ZeroGradientGhost,
                a_min: crate::model::DEFAULT_A_MIN,
            }
        }
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Writes a run as `t,x,A,Q[,A_exact,Q_exact]`, one row per (n, j).
pub fn persist_run(
    run: &[FlowState],
    grid: &GridSpec,
    oracle: Option<&dyn ExactSolution>,
    path: &Path,
) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let wr = |w: &mut BufWriter<fs::File>, s: &str| {
        w.write_all(s.as_bytes()).map_err(|e| Error::io(path, e))
    };
    wr(
        &mut w,
        if oracle.is_some() {
            "t,x,A,Q,A_exact,Q_exact\n"
        } else {
            "t,x,A,Q\n"
        },
    )?;
    let mut line = String::new();
    for state in run {
        let t = grid.t(state.time_level);
        let xs: Vec<f64> = (0..state.len()).map(|j| grid.x(j)).collect();
        let exact = oracle.map(|o| o.sample(t, &xs)).transpose()?;
        for j in 0..state.len() {
            line.clear();
            let _ = write!(
                line,
                "{t:.16e},{:.16e},{:.16e},{:.16e}",
                xs[j], state.area[j], state.discharge[j]
            );
            if let Some((a, q)) = &exact {
                let _ = write!(line, ",{:.16e},{:.16e}", a[j], q[j]);
            }
            line.push('\n');
            wr(&mut w, &line)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn oracle_of(scenario: &Scenario) -> Option<DresslerOracle> {
    scenario.oracle().map(|p| DresslerOracle {
        params: *p,
        top_width: scenario.geometry.top_width,
    })
}

/// Exact solution sampled at every grid point, packaged as a run.
pub fn oracle_run(scenario: &Scenario) -> Result<Vec<FlowState>> {
    let oracle = oracle_of(scenario)
        .ok_or_else(|| Error::Config("scenario has no analytic solution".into()))?;
    let grid = &scenario.grid;
    let xs: Vec<f64> = (0..grid.node_count()).map(|j| grid.x(j)).collect();
    (0..=grid.levels)
        .map(|n| {
            let (area, discharge) = oracle.sample(grid.t(n), &xs)?;
            Ok(FlowState {
                area,
                discharge,
                time_level: n,
            })
        })
        .collect()
}

/// Runs a dam-break scenario and measures it against its exact solution.
pub fn validate_scenario(scenario: &Scenario) -> Result<ErrorPair> {
    let oracle = oracle_of(scenario)
        .ok_or_else(|| Error::Config("validation needs a dressler initial condition".into()))?;
    let run = Stepper::new(scenario)?.run(1)?;
    error_norms(&run, &oracle, &scenario.grid)
}

/// Exact solution measured against itself; (0, 0) unless the oracle is broken.
pub fn validate_oracle(scenario: &Scenario) -> Result<ErrorPair> {
    let oracle = oracle_of(scenario)
        .ok_or_else(|| Error::Config("validation needs a dressler initial condition".into()))?;
    error_norms(&oracle_run(scenario)?, &oracle, &scenario.grid)
}

#[derive(Debug, Clone)]
pub struct StudySpec {
    pub base: Scenario,
    pub ladder: Vec<(f64, f64)>,
    /// Adds exact columns to the per-rung CSVs.
    pub oracle: bool,
    pub out_dir: Option<PathBuf>,
}

impl StudySpec {
    pub fn validate(&self) -> Result<()> {
        if self.ladder.is_empty() {
            return Err(Error::Config("refinement ladder is empty".into()));
        }
        for &(dt, dx) in &self.ladder {
            if !(dt > 0.0 && dx > 0.0 && dt.is_finite() && dx.is_finite()) {
                return Err(Error::Config(format!(
                    "ladder rung ({dt}, {dx}) must be positive"
                )));
            }
        }
        if self.base.oracle().is_none() {
            return Err(Error::Config(
                "convergence studies need a dressler initial condition".into(),
            ));
        }
        self.base.validate()
    }
}

#[derive(Debug, Clone)]
pub struct RungOutcome {
    pub dt: f64,
    pub dx: f64,
    pub result: std::result::Result<ErrorPair, String>,
}

#[derive(Debug, Clone)]
pub struct StudyOutcome {
    pub rungs: Vec<RungOutcome>,
    pub report: ConvergenceReport,
}

pub fn rung_file_name(k: usize) -> String {
    format!("rung_{k}.csv")
}

fn run_rung(spec: &StudySpec, k: usize, dt: f64, dx: f64) -> Result<RungOutcome> {
    let scenario = spec.base.with_steps(dt, dx)?;
    let oracle = oracle_of(&scenario).expect("validated study has an oracle");
    let run = match Stepper::new(&scenario)?.run(1) {
        Ok(run) => run,
        Err(e @ (Error::Blowup { .. } | Error::NonFinite { .. })) => {
            return Ok(RungOutcome {
                dt,
                dx,
                result: Err(e.to_string()),
            })
        }
        Err(e) => return Err(e),
    };
    if let Some(dir) = &spec.out_dir {
        let exact = spec.oracle.then_some(&oracle as &dyn ExactSolution);
        persist_run(&run, &scenario.grid, exact, &dir.join(rung_file_name(k)))?;
    }
    let result = match error_norms(&run, &oracle, &scenario.grid) {
        Ok(pair) => Ok(pair),
        Err(e @ Error::NonFinite { .. }) => Err(e.to_string()),
        Err(e) => return Err(e),
    };
    Ok(RungOutcome { dt, dx, result })
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))
}

/// Runs every rung (concurrently, up to `jobs` threads; 0 = all processors) and
/// assembles the report in ladder order. Blown-up rungs are marked failed.
pub fn run_convergence_study(spec: &StudySpec, jobs: usize) -> Result<StudyOutcome> {
    spec.validate()?;
    if let Some(dir) = &spec.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let rungs: Vec<RungOutcome> = pool(jobs)?.install(|| {
        spec.ladder
            .par_iter()
            .enumerate()
            .map(|(k, &(dt, dx))| run_rung(spec, k, dt, dx))
            .collect::<Result<Vec<_>>>()
    })?;
    let cells: Vec<_> = rungs
        .iter()
        .map(|r| (r.dt, r.dx, r.result.clone().ok()))
        .collect();
    let report = ratios_with_failures(&cells);
    if let Some(dir) = &spec.out_dir {
        write_file(&dir.join("convergence.csv"), &report.to_csv())?;
    }
    Ok(StudyOutcome { rungs, report })
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    /// (dt, dx) cells.
    pub steps: Vec<(f64, f64)>,
    pub phis: Vec<f64>,
    pub r_stars: Vec<f64>,
    /// Source of the flow bounds (its initial state).
    pub scenario: Scenario,
}

impl SweepSpec {
    /// Cartesian product of a dt range and a dx range.
    pub fn from_ranges(
        dts: &[f64],
        dxs: &[f64],
        phis: Vec<f64>,
        r_stars: Vec<f64>,
        scenario: Scenario,
    ) -> Self {
        let steps = dxs
            .iter()
            .flat_map(|&dx| dts.iter().map(move |&dt| (dt, dx)))
            .collect();
        SweepSpec {
            steps,
            phis,
            r_stars,
            scenario,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps.is_empty() || self.phis.is_empty() || self.r_stars.is_empty() {
            return Err(Error::Config(
                "stability sweep ranges must be nonempty".into(),
            ));
        }
        for &phi in &self.phis {
            if !(phi > 0.0 && phi < std::f64::consts::PI) {
                return Err(Error::Config(format!(
                    "sweep phase angles must lie in (0, pi), got {phi}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SweepCell {
    pub dt: f64,
    pub dx: f64,
    pub phi: f64,
    pub r_star: f64,
    pub report: StabilityReport,
}

/// Evaluates every (dt, dx, phi, r*) tuple, ordered dx-major as listed in the spec.
pub fn run_stability_sweep(spec: &SweepSpec, jobs: usize) -> Result<Vec<SweepCell>> {
    spec.validate()?;
    let geom = spec.scenario.geometry;
    let state = spec.scenario.initial_state();
    let bounds = stability::flow_bounds(&geom, &state);
    let gamma0 = stability::gamma0(&geom);
    let tuples: Vec<(f64, f64, f64, f64)> = spec
        .steps
        .iter()
        .flat_map(|&(dt, dx)| {
            spec.phis
                .iter()
                .flat_map(move |&phi| spec.r_stars.iter().map(move |&r| (dt, dx, phi, r)))
        })
        .collect();
    pool(jobs)?.install(|| {
        tuples
            .par_iter()
            .map(|&(dt, dx, phi, r_star)| {
                let inputs = StabilityInputs {
                    dt,
                    dx,
                    phi,
                    r_star,
                    bounds,
                    gamma0,
                };
                Ok(SweepCell {
                    dt,
                    dx,
                    phi,
                    r_star,
                    report: stability::evaluate(&inputs)?,
                })
            })
            .collect()
    })
}

pub const SWEEP_CSV_HEADER: &str = "dt,dx,phi,r_star,mu,absA,cond_A,slack_A,cond_Q,slack_Q,\
combined,slack_combined,empirical,slack_empirical,small_angle_ok";

pub fn sweep_to_csv(cells: &[SweepCell]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for c in cells {
        let r = &c.report;
        let b = &r.inputs.bounds;
        let _ = writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{:.16e},{},{:.16e},{},{:.16e},{},{:.16e},{}",
            c.dt,
            c.dx,
            c.phi,
            c.r_star,
            b.mu,
            b.abs_a,
            r.cond_a.satisfied,
            r.cond_a.slack,
            r.cond_q.satisfied,
            r.cond_q.slack,
            r.combined.satisfied,
            r.combined.slack,
            r.empirical.satisfied,
            r.empirical.slack,
            r.small_angle_ok,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_lookup() {
        let s = preset_by_name("dressler-dambreak").unwrap();
        assert_eq!(s.geometry.top_width, 348.0);
        assert_eq!(s.grid.node_count(), 17);
        assert_eq!(s.grid.levels, 128);
        assert!(matches!(preset_by_name("nope"), Err(Error::Config(_))));
    }

    #[test]
    fn garoua_rain_stops_before_outlet() {
        let s = preset(Preset::GarouaFlume).unwrap();
        assert_eq!(s.rainfall.rainfall_at(0.5, 1100.0), 0.0);
        assert!(s.rainfall.rainfall_at(0.5, 500.0) > 0.0);
        let slope = s.geometry.bed_slope(348e-3).unwrap();
        assert!((slope - 0.04).abs() < 1e-15);
    }

    #[test]
    fn uniform_steady_hundred_steps() {
        let s = preset(Preset::UniformSteady).unwrap();
        let st = Stepper::new(&s).unwrap();
        let mut state = s.initial_state();
        for _ in 0..100 {
            state = st.step(&state).unwrap();
        }
        assert_eq!(state.area, s.initial_state().area);
        assert_eq!(state.discharge, s.initial_state().discharge);
    }

    #[test]
    fn ladder_is_halving() {
        let l = reference_ladder();
        assert_eq!(l[0], (2f64.powi(-7), 2f64.powi(-4)));
        assert_eq!(l[3], (2f64.powi(-10), 2f64.powi(-7)));
    }

    #[test]
    fn persist_row_count_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = GridSpec::new(1.0, 0.0, 1.0, 0.5).unwrap();
        let state = FlowState::new(vec![0.1 + 0.2, 1.0 / 3.0], vec![-1e-300, 2.5], 0).unwrap();
        let path = dir.path().join("run.csv");
        persist_run(std::slice::from_ref(&state), &grid, None, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let rows: Vec<&str> = text.lines().collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], "t,x,A,Q");
        for (j, row) in rows[1..].iter().enumerate() {
            let v: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
            assert_eq!(v[2].to_bits(), state.area[j].to_bits());
            assert_eq!(v[3].to_bits(), state.discharge[j].to_bits());
        }
    }

    #[test]
    fn oracle_validates_against_itself() {
        let s = preset(Preset::DresslerDambreak).unwrap();
        let p = validate_oracle(&s).unwrap();
        assert_eq!((p.err_a, p.err_q), (0.0, 0.0));
    }

    #[test]
    fn still_water_sweep_is_all_true() {
        let spec = SweepSpec::from_ranges(
            &[0.01, 0.1, 1.0],
            &[0.01, 0.1],
            stability::PHI_SWEEP.to_vec(),
            vec![0.25, 0.5],
            preset(Preset::UniformSteady).unwrap(),
        );
        let cells = run_stability_sweep(&spec, 2).unwrap();
        assert_eq!(cells.len(), 3 * 2 * 4 * 2);
        assert!(cells
            .iter()
            .all(|c| c.report.combined.satisfied && c.report.cond_a.satisfied));
        let csv = sweep_to_csv(&cells);
        assert_eq!(csv.lines().count(), cells.len() + 1);
    }
}
