//! Channel geometry, discretisation grid, flow state and the source-term
//! formulas of the prismatic-channel shallow water system
//!
//! ```text
//! dA/dt + dQ/dx = r
//! dQ/dt + d/dx (g A^2 / (2T) + Q^2 / A) = g A (S0 - Sf)
//! ```

use serde::{Deserialize, Serialize};

use crate::dressler::DresslerParams;
use crate::error::{Error, Result};
use crate::scheme::BoundaryMode;

/// Manning constant as it appears in the conveyance formula (US customary).
pub const MANNING_UNIT: f64 = 1.49;

/// Default water density (kg/m^3).
pub const WATER_DENSITY: f64 = 1000.0;

/// Default cross-section floor (m^2).
pub const DEFAULT_A_MIN: f64 = 1e-8;

/// Physical constants of a prismatic channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGeometry {
    /// Top width T (m).
    pub top_width: f64,
    /// Wetted perimeter P (m).
    pub wetted_perimeter: f64,
    /// Manning roughness n1 (s m^-1/3).
    pub manning: f64,
    /// Average boundary shear stress (N/m^2).
    pub shear_stress: f64,
    /// Fluid density (kg/m^3).
    #[serde(default = "default_density")]
    pub density: f64,
    /// Gravitational acceleration (m/s^2).
    pub gravity: f64,
}

fn default_density() -> f64 {
    WATER_DENSITY
}

fn check_area(area: f64) -> Result<()> {
    if !area.is_finite() || area <= 0.0 {
        return Err(Error::Domain {
            what: "cross section",
            value: area,
        });
    }
    Ok(())
}

impl ChannelGeometry {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("top_width", self.top_width),
            ("wetted_perimeter", self.wetted_perimeter),
            ("manning", self.manning),
            ("density", self.density),
            ("gravity", self.gravity),
        ];
        for (name, v) in positive {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!(
                    "geometry.{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !self.shear_stress.is_finite() || self.shear_stress < 0.0 {
            return Err(Error::Config(format!(
                "geometry.shear_stress must be finite and >= 0, got {}",
                self.shear_stress
            )));
        }
        Ok(())
    }

    /// Bed slope S0 = tau P / (rho g A).
    pub fn bed_slope(&self, area: f64) -> Result<f64> {
        check_area(area)?;
        Ok(self.shear_stress * self.wetted_perimeter / (self.density * self.gravity * area))
    }

    /// Conveyance K = (1.49 / n1) A R^(2/3), R = A / P.
    pub fn conveyance(&self, area: f64) -> Result<f64> {
        check_area(area)?;
        let radius = area / self.wetted_perimeter;
        Ok(MANNING_UNIT / self.manning * area * radius.powf(2.0 / 3.0))
    }

    /// Friction slope Sf = (n1^2 / 1.49^2) Q|Q| P^(4/3) / A^(10/3).
    pub fn friction_slope(&self, area: f64, discharge: f64) -> Result<f64> {
        check_area(area)?;
        let c = self.manning * self.manning / (MANNING_UNIT * MANNING_UNIT);
        Ok(
            c * discharge * discharge.abs() * self.wetted_perimeter.powf(4.0 / 3.0)
                / area.powf(10.0 / 3.0),
        )
    }

    /// Friction group g n1^2 / 1.49^2 P^(4/3), the coefficient of Q|Q| / A^(7/3)
    /// in the momentum source.
    pub fn friction_group(&self) -> f64 {
        self.gravity * self.manning * self.manning / (MANNING_UNIT * MANNING_UNIT)
            * self.wetted_perimeter.powf(4.0 / 3.0)
    }

    /// Driving part of g A S0, which does not depend on A: P tau / rho.
    pub fn shear_drive(&self) -> f64 {
        self.wetted_perimeter * self.shear_stress / self.density
    }
}

/// Uniform space-time grid: x_j = j dx (j = 0..=M), t^n = n dt (n = 0..=N).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub length: f64,
    pub horizon: f64,
    pub dx: f64,
    pub dt: f64,
    /// M, the index of the last node; there are `intervals + 1` nodes.
    pub intervals: usize,
    /// Index of the last time level; there are `levels + 1` levels.
    pub levels: usize,
}

fn whole_count(total: f64, step: f64, what: &str) -> Result<usize> {
    let count = (total / step).round();
    if (count * step - total).abs() > 1e-9 * total.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::Config(format!(
            "{what}: {total} is not an integer multiple of the step {step}"
        )));
    }
    Ok(count as usize)
}

impl GridSpec {
    pub fn new(length: f64, horizon: f64, dx: f64, dt: f64) -> Result<Self> {
        for (name, v) in [("length", length), ("dx", dx), ("dt", dt)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!(
                    "grid.{name} must be finite and > 0, got {v}"
                )));
            }
        }
        if !horizon.is_finite() || horizon < 0.0 {
            return Err(Error::Config(format!(
                "grid.horizon must be finite and >= 0, got {horizon}"
            )));
        }
        let intervals = whole_count(length, dx, "grid length")?;
        if intervals == 0 {
            return Err(Error::Config(format!(
                "dx = {dx} exceeds the domain length {length}"
            )));
        }
        let levels = if horizon == 0.0 {
            0
        } else {
            whole_count(horizon, dt, "time horizon")?
        };
        Ok(GridSpec {
            length,
            horizon,
            dx,
            dt,
            intervals,
            levels,
        })
    }

    pub fn node_count(&self) -> usize {
        self.intervals + 1
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }
}

/// Cross sections and discharges at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub area: Vec<f64>,
    pub discharge: Vec<f64>,
    pub time_level: usize,
}

impl FlowState {
    pub fn new(area: Vec<f64>, discharge: Vec<f64>, time_level: usize) -> Result<Self> {
        if area.len() != discharge.len() {
            return Err(Error::Config(format!(
                "state has {} areas but {} discharges",
                area.len(),
                discharge.len()
            )));
        }
        if area.is_empty() {
            return Err(Error::Config("state must have at least one node".into()));
        }
        Ok(FlowState {
            area,
            discharge,
            time_level,
        })
    }

    pub fn uniform(nodes: usize, area: f64, discharge: f64) -> Self {
        FlowState {
            area: vec![area; nodes],
            discharge: vec![discharge; nodes],
            time_level: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.area.len()
    }

    pub fn is_empty(&self) -> bool {
        self.area.is_empty()
    }

    /// Checks length, finiteness and the area floor.
    pub fn validate(&self, grid: &GridSpec, a_min: f64) -> Result<()> {
        if self.len() != grid.node_count() || self.discharge.len() != grid.node_count() {
            return Err(Error::Config(format!(
                "state has {} nodes, grid expects {}",
                self.len(),
                grid.node_count()
            )));
        }
        for (j, (&a, &q)) in self.area.iter().zip(&self.discharge).enumerate() {
            if !a.is_finite() || !q.is_finite() {
                return Err(Error::Config(format!(
                    "non-finite initial value at node {j}"
                )));
            }
            if a < a_min {
                return Err(Error::Config(format!(
                    "initial cross section {a} at node {j} is below the floor {a_min}"
                )));
            }
        }
        Ok(())
    }
}

/// Rainfall forcing, constant over a space-time window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RainfallSpec {
    /// Rainfall intensity I (m/s).
    pub intensity: f64,
    pub t_start: f64,
    pub t_end: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    /// Converts intensity to lateral inflow per unit length (m). Usually the top width.
    pub lateral_scale: f64,
}

impl RainfallSpec {
    pub fn none() -> Self {
        RainfallSpec {
            intensity: 0.0,
            t_start: 0.0,
            t_end: 0.0,
            x_lo: 0.0,
            x_hi: 0.0,
            lateral_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.intensity,
            self.t_start,
            self.t_end,
            self.x_lo,
            self.x_hi,
            self.lateral_scale,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("rainfall values must be finite".into()));
        }
        if self.intensity < 0.0 || self.t_start > self.t_end || self.x_lo > self.x_hi {
            return Err(Error::Config(format!(
                "rainfall needs I >= 0, t_start <= t_end, x_lo <= x_hi; got {self:?}"
            )));
        }
        Ok(())
    }

    /// Lateral inflow r(t, x) (m^2/s): I * lateral_scale inside the window, 0 outside.
    pub fn rainfall_at(&self, t: f64, x: f64) -> f64 {
        let inside =
            (self.t_start..=self.t_end).contains(&t) && (self.x_lo..=self.x_hi).contains(&x);
        if inside {
            self.intensity * self.lateral_scale
        } else {
            0.0
        }
    }
}

/// Where the initial state of a scenario comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialCondition {
    State(FlowState),
    Dressler(DresslerParams),
}

/// Everything needed to run one simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub geometry: ChannelGeometry,
    pub grid: GridSpec,
    pub rainfall: RainfallSpec,
    pub initial: InitialCondition,
    pub boundary: BoundaryMode,
    pub a_min: f64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        self.rainfall.validate()?;
        if !self.a_min.is_finite() || self.a_min <= 0.0 {
            return Err(Error::Config(format!(
                "a_min must be > 0, got {}",
                self.a_min
            )));
        }
        match &self.initial {
            InitialCondition::State(s) => s.validate(&self.grid, self.a_min)?,
            InitialCondition::Dressler(p) => {
                p.validate()?;
                if (p.length - self.grid.length).abs() > 1e-12 * self.grid.length {
                    return Err(Error::Config(format!(
                        "dam-break length {} differs from the grid length {}",
                        p.length, self.grid.length
                    )));
                }
            }
        }
        if self.boundary == BoundaryMode::AnalyticDirichlet && self.oracle().is_none() {
            return Err(Error::Config(
                "analytic boundaries need an analytic solution (dressler initial condition)".into(),
            ));
        }
        Ok(())
    }

    /// Dam-break parameters when the scenario has a closed-form solution.
    pub fn oracle(&self) -> Option<&DresslerParams> {
        match &self.initial {
            InitialCondition::Dressler(p) => Some(p),
            InitialCondition::State(_) => None,
        }
    }

    pub fn initial_state(&self) -> FlowState {
        match &self.initial {
            InitialCondition::State(s) => s.clone(),
            InitialCondition::Dressler(p) => {
                crate::dressler::initial_state(&self.grid, p, self.geometry.top_width, self.a_min)
            }
        }
    }

    /// Same scenario on a different (dt, dx) pair.
    pub fn with_steps(&self, dt: f64, dx: f64) -> Result<Scenario> {
        let grid = GridSpec::new(self.grid.length, self.grid.horizon, dx, dt)?;
        if let InitialCondition::State(_) = self.initial {
            if grid.intervals != self.grid.intervals {
                return Err(Error::Config(
                    "cannot change dx of a scenario with an explicit initial state".into(),
                ));
            }
        }
        Ok(Scenario {
            grid,
            ..self.clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn benoue() -> ChannelGeometry {
        ChannelGeometry {
            top_width: 348.0,
            wetted_perimeter: 366.4,
            manning: 0.025,
            shear_stress: 1.329,
            density: 1000.0,
            gravity: 10.0,
        }
    }

    #[test]
    fn bed_slope_values() {
        let frictionless = ChannelGeometry {
            shear_stress: 0.0,
            ..benoue()
        };
        assert_eq!(frictionless.bed_slope(1.74).unwrap(), 0.0);
        let g = benoue();
        let s = g.bed_slope(1.74).unwrap();
        // 1.329 * 366.4 / (1000 * 10 * 1.74)
        assert!((s - 0.027_985_379_310_344_824).abs() < 1e-15);
        let half = g.bed_slope(3.48).unwrap();
        assert!((half - s / 2.0).abs() < 1e-16);
    }

    #[test]
    fn bed_slope_rejects_bad_area() {
        assert!(benoue().bed_slope(0.0).is_err());
        assert!(benoue().bed_slope(f64::NAN).is_err());
        assert!(benoue().conveyance(-1.0).is_err());
        assert!(benoue().friction_slope(0.0, 1.0).is_err());
    }

    #[test]
    fn conveyance_values() {
        let k = benoue().conveyance(1.74).unwrap();
        // recomputed: 59.6 * 1.74 * (1.74 / 366.4)^(2/3)
        assert!((k - 2.929_935_300_121_532).abs() < 1e-12, "K = {k}");
        let unit = ChannelGeometry {
            manning: 1.49,
            wetted_perimeter: 1.0,
            ..benoue()
        };
        assert!((unit.conveyance(1.0).unwrap() - 1.0).abs() < 1e-15);
        let ratio = benoue().conveyance(2.0 * 1.74).unwrap() / k;
        assert!((ratio - 2f64.powf(5.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn friction_slope_values() {
        let g = benoue();
        assert_eq!(g.friction_slope(1.74, 0.0).unwrap(), 0.0);
        let sf = g.friction_slope(1.74, 0.1).unwrap();
        assert!((sf - 1.164_887_378_073_639e-3).abs() < 1e-15, "Sf = {sf}");
        assert_eq!(g.friction_slope(1.74, -0.1).unwrap(), -sf);
    }

    #[test]
    fn rainfall_window() {
        let rain = RainfallSpec {
            intensity: 1.18e-5,
            t_start: 0.0,
            t_end: 1.0,
            x_lo: 0.0,
            x_hi: 1.0,
            lateral_scale: 1.0,
        };
        assert_eq!(rain.rainfall_at(0.5, 0.5), 1.18e-5);
        assert_eq!(rain.rainfall_at(2.0, 0.5), 0.0);
        assert_eq!(rain.rainfall_at(0.5, 1.5), 0.0);
        assert_eq!(RainfallSpec::none().rainfall_at(0.0, 0.0), 0.0);
    }

    #[test]
    fn grid_counts() {
        let g = GridSpec::new(1.0, 1.0, 0.0625, 0.0078125).unwrap();
        assert_eq!((g.intervals, g.levels), (16, 128));
        assert_eq!(g.x(16), 1.0);
        assert!(GridSpec::new(1.0, 1.0, 0.3, 0.1).is_err());
        assert!(GridSpec::new(1.0, 1.0, 0.0, 0.1).is_err());
        assert_eq!(GridSpec::new(1.0, 0.0, 0.5, 0.1).unwrap().levels, 0);
    }

    #[test]
    fn geometry_validation() {
        assert!(benoue().validate().is_ok());
        let bad = ChannelGeometry {
            shear_stress: -1.0,
            ..benoue()
        };
        assert!(bad.validate().is_err());
        let bad = ChannelGeometry {
            top_width: f64::INFINITY,
            ..benoue()
        };
        assert!(bad.validate().is_err());
    }
}
