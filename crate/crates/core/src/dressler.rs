//! Dressler's first-order dam-break-with-friction solution on an initially
//! dry bed. Used both as an initial condition and as the exact reference for
//! error norms.
//!
//! For t > 0 the domain splits into four regions, left to right:
//! plateau `[0, x1)`, corrected rarefaction `[x1, x2)`, tip `[x2, x3)` and
//! dry bed `[x3, L]`, with x1 = x0 - t sqrt(g h_l), x3 = x0 + 2 t sqrt(g h_l)
//! and x2 the maximiser of the corrected velocity.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FlowState, GridSpec};

/// Height profile used between x2 and x3.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TipHeight {
    /// Height frozen at its value at x2.
    #[default]
    Constant,
    /// Corrected height h_c carried up to the front. Singular as x -> x3.
    Corrected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DresslerParams {
    /// Upstream depth h_l (m).
    pub h_l: f64,
    /// Dam position x0 (m).
    pub x0: f64,
    /// Chezy coefficient C (m^1/2 / s).
    pub chezy: f64,
    pub gravity: f64,
    /// Domain length L (m).
    pub length: f64,
    /// Initial upstream velocity (m/s).
    pub u0_plateau: f64,
    #[serde(default)]
    pub tip: TipHeight,
}

impl DresslerParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.h_l > 0.0
            && self.chezy > 0.0
            && self.gravity > 0.0
            && self.x0 > 0.0
            && self.x0 < self.length
            && self.u0_plateau.is_finite();
        if !ok {
            return Err(Error::Config(format!(
                "dam-break parameters need h_l, C, g > 0 and 0 < x0 < L; got {self:?}"
            )));
        }
        Ok(())
    }

    /// Wave celerity sqrt(g h_l).
    pub fn celerity(&self) -> f64 {
        (self.gravity * self.h_l).sqrt()
    }

    fn friction_factor(&self) -> f64 {
        self.gravity * self.gravity / (self.chezy * self.chezy)
    }
}

/// Similarity coordinate 2 - (x - x0) / (t sqrt(g h_l)).
pub fn xi(t: f64, x: f64, params: &DresslerParams) -> Result<f64> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::Domain {
            what: "t",
            value: t,
        });
    }
    Ok(2.0 - (x - params.x0) / (t * params.celerity()))
}

pub fn alpha1(xi: f64) -> Result<f64> {
    if xi.is_nan() || xi <= 0.0 {
        return Err(Error::Domain {
            what: "xi",
            value: xi,
        });
    }
    Ok(6.0 / (5.0 * xi) - 2.0 / 3.0 + 4.0 * 3f64.sqrt() / 135.0 * xi.powf(1.5))
}

pub fn alpha2(xi: f64) -> Result<f64> {
    if xi.is_nan() || xi <= 0.0 {
        return Err(Error::Domain {
            what: "xi",
            value: xi,
        });
    }
    Ok(12.0 / xi - 8.0 / 3.0 + 8.0 * 3f64.sqrt() / 189.0 * xi.powf(1.5) - 108.0 / (7.0 * xi * xi))
}

/// Corrected height h_c(t, x). Requires t > 0 and x < x3(t).
pub fn corrected_height(t: f64, x: f64, p: &DresslerParams) -> Result<f64> {
    let a1 = alpha1(xi(t, x, p)?)?;
    let root = 2.0 / 3.0 * p.celerity() - (x - p.x0) / (3.0 * t) + p.friction_factor() * a1 * t;
    Ok(root * root / p.gravity)
}

/// Corrected velocity u_c(t, x). Requires t > 0 and x < x3(t).
pub fn corrected_velocity(t: f64, x: f64, p: &DresslerParams) -> Result<f64> {
    let a2 = alpha2(xi(t, x, p)?)?;
    Ok(2.0 / 3.0 * p.celerity() + 2.0 * (x - p.x0) / (3.0 * t) + p.friction_factor() * a2 * t)
}

/// Region boundaries at one instant, plus the tip velocity max u_c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionBounds {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub u_tip: f64,
}

const SCAN_POINTS: usize = 2000;
const GOLDEN_TOL: f64 = 1e-12;

pub fn region_bounds(t: f64, p: &DresslerParams) -> Result<RegionBounds> {
    if t.is_nan() || t <= 0.0 {
        return Err(Error::Domain {
            what: "t",
            value: t,
        });
    }
    let c = p.celerity();
    let x1 = p.x0 - t * c;
    let x3 = p.x0 + 2.0 * t * c;
    let u = |x: f64| corrected_velocity(t, x, p).unwrap_or(f64::NEG_INFINITY);

    // Coarse scan over [x1, x3) to bracket the maximiser; x3 itself is the
    // singular point xi = 0.
    let h = (x3 - x1) / SCAN_POINTS as f64;
    let (mut best_k, mut best_u) = (0, u(x1));
    for k in 1..SCAN_POINTS {
        let v = u(x1 + k as f64 * h);
        if v > best_u {
            best_k = k;
            best_u = v;
        }
    }
    if best_k == 0 {
        return Ok(RegionBounds {
            x1,
            x2: x1,
            x3,
            u_tip: best_u,
        });
    }

    // Golden-section refinement inside the neighbouring cells.
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = x1 + (best_k - 1) as f64 * h;
    let mut b = x1 + (best_k + 1) as f64 * h;
    let mut c1 = b - inv_phi * (b - a);
    let mut c2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (u(c1), u(c2));
    while b - a > GOLDEN_TOL {
        if f1 >= f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - inv_phi * (b - a);
            f1 = u(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + inv_phi * (b - a);
            f2 = u(c2);
        }
    }
    let mid = 0.5 * (a + b);
    let (x2, u_tip) = [(mid, u(mid)), (x1 + best_k as f64 * h, best_u)]
        .into_iter()
        .fold(
            (mid, f64::NEG_INFINITY),
            |acc, c| if c.1 > acc.1 { c } else { acc },
        );
    Ok(RegionBounds { x1, x2, x3, u_tip })
}

/// Which piece of the solution applies at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plateau,
    Corrected,
    Tip,
    Dry,
}

/// The exact solution frozen at one instant. Building it performs the x2
/// search once; point evaluations are then cheap.
#[derive(Debug, Clone)]
pub struct Snapshot {
    t: f64,
    params: DresslerParams,
    bounds: Option<RegionBounds>,
    tip_height: f64,
}

impl Snapshot {
    pub fn new(t: f64, params: &DresslerParams) -> Result<Self> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::Domain {
                what: "t",
                value: t,
            });
        }
        if t == 0.0 {
            return Ok(Snapshot {
                t,
                params: *params,
                bounds: None,
                tip_height: 0.0,
            });
        }
        let bounds = region_bounds(t, params)?;
        let tip_height = corrected_height(t, bounds.x2, params)?;
        Ok(Snapshot {
            t,
            params: *params,
            bounds: Some(bounds),
            tip_height,
        })
    }

    pub fn bounds(&self) -> Option<RegionBounds> {
        self.bounds
    }

    pub fn branch(&self, x: f64) -> Branch {
        let p = &self.params;
        if !(0.0..=p.length).contains(&x) {
            return Branch::Dry;
        }
        match self.bounds {
            None => {
                if x <= p.x0 {
                    Branch::Plateau
                } else {
                    Branch::Dry
                }
            }
            Some(b) => {
                if x < b.x1 {
                    Branch::Plateau
                } else if x < b.x2 {
                    Branch::Corrected
                } else if x < b.x3 {
                    Branch::Tip
                } else {
                    Branch::Dry
                }
            }
        }
    }

    /// (h, u) at x.
    pub fn height_velocity(&self, x: f64) -> (f64, f64) {
        let p = &self.params;
        let upstream_u = if self.bounds.is_none() {
            p.u0_plateau
        } else {
            0.0
        };
        match self.branch(x) {
            Branch::Plateau => (p.h_l, upstream_u),
            Branch::Dry => (0.0, 0.0),
            // Inside [x1, x3) xi > 0, so these cannot fail.
            Branch::Corrected => (
                corrected_height(self.t, x, p).unwrap_or(f64::NAN),
                corrected_velocity(self.t, x, p).unwrap_or(f64::NAN),
            ),
            Branch::Tip => {
                let h = match p.tip {
                    TipHeight::Constant => self.tip_height,
                    TipHeight::Corrected => corrected_height(self.t, x, p).unwrap_or(f64::NAN),
                };
                (h, self.bounds.map_or(0.0, |b| b.u_tip))
            }
        }
    }
}

pub fn h_exact(t: f64, x: f64, params: &DresslerParams) -> Result<f64> {
    Ok(Snapshot::new(t, params)?.height_velocity(x).0)
}

pub fn u_exact(t: f64, x: f64, params: &DresslerParams) -> Result<f64> {
    Ok(Snapshot::new(t, params)?.height_velocity(x).1)
}

pub fn a_exact(t: f64, x: f64, params: &DresslerParams, top_width: f64) -> Result<f64> {
    Ok(top_width * h_exact(t, x, params)?)
}

pub fn q_exact(t: f64, x: f64, params: &DresslerParams, top_width: f64) -> Result<f64> {
    let (h, u) = Snapshot::new(t, params)?.height_velocity(x);
    Ok(top_width * h * u)
}

/// Initial state on the grid: wet plateau for x <= x0, floored dry bed beyond.
pub fn initial_state(
    grid: &GridSpec,
    params: &DresslerParams,
    top_width: f64,
    a_min: f64,
) -> FlowState {
    let n = grid.node_count();
    let mut area = Vec::with_capacity(n);
    let mut discharge = Vec::with_capacity(n);
    for j in 0..n {
        if grid.x(j) <= params.x0 {
            area.push(top_width * params.h_l);
            discharge.push(top_width * params.h_l * params.u0_plateau);
        } else {
            area.push(a_min);
            discharge.push(0.0);
        }
    }
    FlowState {
        area,
        discharge,
        time_level: 0,
    }
}

/// A closed-form reference that can be sampled at a time level.
pub trait ExactSolution: Sync {
    /// Cross sections and discharges at time `t` and positions `xs`.
    fn sample(&self, t: f64, xs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;
}

/// Dressler solution expressed in (A, Q) for a channel of top width T.
#[derive(Debug, Clone, Copy)]
pub struct DresslerOracle {
    pub params: DresslerParams,
    pub top_width: f64,
}

impl ExactSolution for DresslerOracle {
    fn sample(&self, t: f64, xs: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let snap = Snapshot::new(t, &self.params)?;
        Ok(xs
            .iter()
            .map(|&x| {
                let (h, u) = snap.height_velocity(x);
                (self.top_width * h, self.top_width * h * u)
            })
            .unzip())
    }
}
