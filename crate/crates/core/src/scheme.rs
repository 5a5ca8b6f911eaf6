//! MacCormack predictor-corrector stepper.
//!
//! Predictor (forward differences, level n):
//!
//! ```text
//! A*_j = A_j - dt/dx (Q_{j+1} - Q_j) + dt r_j^n
//! Q*_j = Q_j - dt/dx [g/(2T) (A_{j+1}^2 - A_j^2) + Q_{j+1}^2/A_{j+1} - Q_j^2/A_j]
//!        + dt (P tau/rho - G Q_j|Q_j| / A_j^(7/3))
//! ```
//!
//! Corrector (backward differences on the predicted values, averaged with
//! level n):
//!
//! ```text
//! A_j^{n+1} = 1/2 [A_j + A*_j - dt/dx (Q*_j - Q*_{j-1}) + dt r_j^{n+1}]
//! Q_j^{n+1} = 1/2 [Q_j + Q*_j - dt/dx (...) + dt (P tau/rho - G Q*_j|Q*_j| / A*_j^(7/3))]
//! ```
//!
//! with G = g n1^2 / 1.49^2 P^(4/3). One ghost node closes each one-sided
//! difference: j = M + 1 in the predictor and j = -1 in the corrector.

use serde::{Deserialize, Serialize};

use crate::dressler::{DresslerOracle, ExactSolution};
use crate::error::{Error, Result};
use crate::model::{FlowState, Scenario};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BoundaryMode {
    /// Ghost node copies the adjacent boundary node.
    #[default]
    #[serde(rename = "ghost")]
    ZeroGradientGhost,
    /// Ghost node takes the analytic solution sampled at the boundary node.
    #[serde(rename = "analytic")]
    AnalyticDirichlet,
}

impl std::str::FromStr for BoundaryMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ghost" => Ok(BoundaryMode::ZeroGradientGhost),
            "analytic" => Ok(BoundaryMode::AnalyticDirichlet),
            other => Err(Error::Config(format!(
                "unknown boundary mode '{other}' (expected ghost or analytic)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Ghost value next to `side` of `values`.
pub fn apply_boundary(
    values: &[f64],
    side: Side,
    bc: BoundaryMode,
    analytic: Option<f64>,
) -> Result<f64> {
    match bc {
        BoundaryMode::ZeroGradientGhost => {
            let v = match side {
                Side::Left => values.first(),
                Side::Right => values.last(),
            };
            v.copied()
                .ok_or_else(|| Error::Config("boundary closure on an empty sequence".into()))
        }
        BoundaryMode::AnalyticDirichlet => analytic.ok_or_else(|| {
            Error::Config("analytic boundary requested without an analytic value".into())
        }),
    }
}

/// Floors every cross section below `a_min` and marks the node dry (Q = 0).
pub fn enforce_positivity(area: &mut [f64], discharge: &mut [f64], a_min: f64) {
    for (a, q) in area.iter_mut().zip(discharge.iter_mut()) {
        if *a < a_min {
            *a = a_min;
            *q = 0.0;
        }
    }
}

impl FlowState {
    pub fn enforce_positivity(&mut self, a_min: f64) {
        enforce_positivity(&mut self.area, &mut self.discharge, a_min);
    }
}

/// Predicted (overbarred) values at level n + 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedState {
    pub area: Vec<f64>,
    pub discharge: Vec<f64>,
}

/// Scenario-bound stepper. Constants of the source terms are folded once.
pub struct Stepper<'a> {
    scenario: &'a Scenario,
    oracle: Option<DresslerOracle>,
    /// P tau / rho
    drive: f64,
    /// g n1^2 / 1.49^2 P^(4/3)
    friction: f64,
    half_gravity_over_width: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let g = &scenario.geometry;
        Ok(Stepper {
            scenario,
            oracle: scenario.oracle().map(|p| DresslerOracle {
                params: *p,
                top_width: g.top_width,
            }),
            drive: g.shear_drive(),
            friction: g.friction_group(),
            half_gravity_over_width: g.gravity / (2.0 * g.top_width),
        })
    }

    fn flux(&self, a: f64, q: f64) -> f64 {
        self.half_gravity_over_width * a * a + q * q / a
    }

    fn momentum_source(&self, a: f64, q: f64) -> f64 {
        // Dry nodes carry no source: the friction term is singular as A -> 0.
        if a <= self.scenario.a_min {
            return 0.0;
        }
        self.drive - self.friction * q * q.abs() / a.powf(7.0 / 3.0)
    }

    /// Ghost (A, Q) pair beyond `side` at time `t`.
    fn ghost(&self, area: &[f64], discharge: &[f64], side: Side, t: f64) -> Result<(f64, f64)> {
        let bc = self.scenario.boundary;
        let (mut a_exact, mut q_exact) = (None, None);
        if bc == BoundaryMode::AnalyticDirichlet {
            let oracle = self.oracle.as_ref().ok_or_else(|| {
                Error::Config("analytic boundaries need an analytic solution".into())
            })?;
            let x = match side {
                Side::Left => 0.0,
                Side::Right => self.scenario.grid.length,
            };
            let (a, q) = oracle.sample(t, &[x])?;
            let (a, q) = if a[0] < self.scenario.a_min {
                (self.scenario.a_min, 0.0)
            } else {
                (a[0], q[0])
            };
            a_exact = Some(a);
            q_exact = Some(q);
        }
        Ok((
            apply_boundary(area, side, bc, a_exact)?,
            apply_boundary(discharge, side, bc, q_exact)?,
        ))
    }

    /// Forward-differenced predictor from level `state.time_level`.
    pub fn predictor(&self, state: &FlowState) -> Result<PredictedState> {
        let grid = &self.scenario.grid;
        let n = state.time_level;
        let t = grid.t(n);
        let (dt, lambda) = (grid.dt, grid.dt / grid.dx);
        let (a, q) = (&state.area, &state.discharge);
        let m = a.len() - 1;
        let (ghost_a, ghost_q) = self.ghost(a, q, Side::Right, t)?;

        let mut area = Vec::with_capacity(m + 1);
        let mut discharge = Vec::with_capacity(m + 1);
        for j in 0..=m {
            let (a1, q1) = if j < m {
                (a[j + 1], q[j + 1])
            } else {
                (ghost_a, ghost_q)
            };
            let r = self.scenario.rainfall.rainfall_at(t, grid.x(j));
            let a_bar = a[j] - lambda * (q1 - q[j]) + dt * r;
            let q_bar = q[j] - lambda * (self.flux(a1, q1) - self.flux(a[j], q[j]))
                + dt * self.momentum_source(a[j], q[j]);
            if !a_bar.is_finite() || !q_bar.is_finite() {
                return Err(Error::Blowup {
                    level: n + 1,
                    node: j,
                });
            }
            area.push(a_bar);
            discharge.push(q_bar);
        }
        enforce_positivity(&mut area, &mut discharge, self.scenario.a_min);
        Ok(PredictedState { area, discharge })
    }

    /// Backward-differenced corrector; returns level `state_n.time_level + 1`.
    pub fn corrector(&self, state_n: &FlowState, pred: &PredictedState) -> Result<FlowState> {
        let grid = &self.scenario.grid;
        let n = state_n.time_level;
        // The predicted level is clocked at t^{n+1}.
        let t_next = grid.t(n + 1);
        let (dt, lambda) = (grid.dt, grid.dt / grid.dx);
        let (a, q) = (&state_n.area, &state_n.discharge);
        let (ab, qb) = (&pred.area, &pred.discharge);
        if ab.len() != a.len() || qb.len() != q.len() {
            return Err(Error::Config(
                "predicted state does not match level n".into(),
            ));
        }
        let (ghost_a, ghost_q) = self.ghost(ab, qb, Side::Left, t_next)?;

        let mut area = Vec::with_capacity(a.len());
        let mut discharge = Vec::with_capacity(a.len());
        for j in 0..a.len() {
            let (a0, q0) = if j > 0 {
                (ab[j - 1], qb[j - 1])
            } else {
                (ghost_a, ghost_q)
            };
            let r = self.scenario.rainfall.rainfall_at(t_next, grid.x(j));
            let a_new = 0.5 * (a[j] + ab[j] - lambda * (qb[j] - q0) + dt * r);
            let q_new = 0.5
                * (q[j] + qb[j] - lambda * (self.flux(ab[j], qb[j]) - self.flux(a0, q0))
                    + dt * self.momentum_source(ab[j], qb[j]));
            if !a_new.is_finite() || !q_new.is_finite() {
                return Err(Error::Blowup {
                    level: n + 1,
                    node: j,
                });
            }
            area.push(a_new);
            discharge.push(q_new);
        }
        enforce_positivity(&mut area, &mut discharge, self.scenario.a_min);
        Ok(FlowState {
            area,
            discharge,
            time_level: n + 1,
        })
    }

    pub fn step(&self, state: &FlowState) -> Result<FlowState> {
        let pred = self.predictor(state)?;
        self.corrector(state, &pred)
    }

    /// Runs all N steps, keeping every `thin`-th level (level 0 always kept).
    pub fn run(&self, thin: usize) -> Result<Vec<FlowState>> {
        let thin = thin.max(1);
        let mut state = self.scenario.initial_state();
        state.time_level = 0;
        let levels = self.scenario.grid.levels;
        let mut out = Vec::with_capacity(levels / thin + 1);
        out.push(state.clone());
        for _ in 0..levels {
            state = self.step(&state)?;
            if state.time_level.is_multiple_of(thin) {
                out.push(state.clone());
            }
        }
        Ok(out)
    }
}

/// One full predictor-corrector step of `scenario` from `state`.
pub fn step(state: &FlowState, scenario: &Scenario) -> Result<FlowState> {
    Stepper::new(scenario)?.step(state)
}

/// All N + 1 time levels of `scenario`, including the initial state.
pub fn run(scenario: &Scenario) -> Result<Vec<FlowState>> {
    Stepper::new(scenario)?.run(1)
}
