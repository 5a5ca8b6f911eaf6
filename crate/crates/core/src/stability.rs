//! A priori stability conditions of the scheme from the Von Neumann analysis,
//! and an advisory search for the largest admissible time step.
//!
//! Every condition is evaluated as `LHS <= RHS` and reported with its slack
//! `RHS - LHS`. All conditions hold trivially (infinite slack) for still water,
//! where the right-hand sides contain inverse powers of the velocity scale.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ChannelGeometry, FlowState};

/// Default phase angle for advisory checks.
pub const DEFAULT_PHI: f64 = PI / 16.0;

/// Default free parameter r* in (0, 1).
pub const DEFAULT_R_STAR: f64 = 0.5;

/// Phase angles of the advisory sweep.
pub const PHI_SWEEP: [f64; 4] = [PI / 64.0, PI / 32.0, PI / 16.0, PI / 8.0];

/// Beyond this |phi| the small-angle expansion behind the combined condition is suspect.
pub const SMALL_ANGLE_LIMIT: f64 = PI / 4.0;

/// Gamma0 = g n1^2 / 1.49^2 P^(4/3).
pub fn gamma0(geom: &ChannelGeometry) -> f64 {
    geom.friction_group()
}

/// Grid-wide bounds of the flow quantities entering the conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlowBounds {
    /// max_j |Q_j| / A_j
    pub mu: f64,
    pub pn: f64,
    pub rn: f64,
    pub nn: f64,
    /// min_j A_j
    pub abs_a: f64,
}

impl FlowBounds {
    pub fn is_still(&self) -> bool {
        self.mu == 0.0
    }
}

/// Worst-case bounds over the grid. Inverse powers of a vanishing mu or
/// max|Q| are dropped (their terms are set to zero).
pub fn flow_bounds(geom: &ChannelGeometry, state: &FlowState) -> FlowBounds {
    let mut mu = 0.0_f64;
    let mut q_max = 0.0_f64;
    let mut abs_a = f64::INFINITY;
    for (&a, &q) in state.area.iter().zip(&state.discharge) {
        mu = mu.max(q.abs() / a);
        q_max = q_max.max(q.abs());
        abs_a = abs_a.min(a);
    }
    if !abs_a.is_finite() {
        abs_a = 0.0;
    }
    let inv_mu = if mu > 0.0 { 1.0 / mu } else { 0.0 };
    let inv_q = if q_max > 0.0 { 1.0 / q_max } else { 0.0 };
    let g0 = gamma0(geom);
    let friction = if mu > 0.0 {
        g0 * mu * abs_a.powf(-4.0 / 3.0)
    } else {
        0.0
    };
    FlowBounds {
        mu,
        pn: geom.shear_drive() * inv_q + friction,
        rn: geom.gravity / geom.top_width * abs_a * inv_mu + mu,
        nn: geom.gravity / (2.0 * geom.top_width) * q_max * inv_mu,
        abs_a,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityInputs {
    pub dt: f64,
    pub dx: f64,
    pub phi: f64,
    pub r_star: f64,
    pub bounds: FlowBounds,
    pub gamma0: f64,
}

impl StabilityInputs {
    pub fn from_state(
        dt: f64,
        dx: f64,
        phi: f64,
        r_star: f64,
        geom: &ChannelGeometry,
        state: &FlowState,
    ) -> Self {
        StabilityInputs {
            dt,
            dx,
            phi,
            r_star,
            bounds: flow_bounds(geom, state),
            gamma0: gamma0(geom),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("dt", self.dt), ("dx", self.dx)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        check_r_star(self.r_star)?;
        check_phi(self.phi)
    }
}

fn check_r_star(r_star: f64) -> Result<()> {
    if !(r_star > 0.0 && r_star < 1.0) {
        return Err(Error::Config(format!(
            "r* must lie in (0, 1), got {r_star}"
        )));
    }
    Ok(())
}

fn check_phi(phi: f64) -> Result<()> {
    if !phi.is_finite() || phi.abs() >= PI {
        return Err(Error::Config(format!(
            "phase angle must satisfy |phi| < pi, got {phi}"
        )));
    }
    if phi == 0.0 {
        return Err(Error::Precondition(
            "phase angle phi = 0 (condition needs k != 0)".into(),
        ));
    }
    Ok(())
}

/// Outcome of one inequality `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl Verdict {
    fn new(lhs: f64, rhs: f64) -> Self {
        Verdict {
            satisfied: lhs <= rhs,
            lhs,
            rhs,
            slack: rhs - lhs,
        }
    }

    fn still_water() -> Self {
        Verdict {
            satisfied: true,
            lhs: 0.0,
            rhs: f64::INFINITY,
            slack: f64::INFINITY,
        }
    }
}

/// dt + dt^2 + dt/dx + dt^2/dx + dt^3/dx + (dt/dx)^2
pub fn envelope(dt: f64, dx: f64) -> f64 {
    let l = dt / dx;
    dt + dt * dt + l + dt * l + dt * dt * l + l * l
}

/// max{1 + sqrt(1 - r*), sqrt(r*)}
pub fn r_star_bound(r_star: f64) -> f64 {
    (1.0 + (1.0 - r_star).sqrt()).max(r_star.sqrt())
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

pub fn w1(dt: f64, dx: f64, phi: f64, b: &FlowBounds) -> f64 {
    let (p, r, mu, ph) = (b.pn, b.rn, b.mu, phi.abs());
    let m = max_of(&[
        p,
        2.0 * p * p,
        r * ph / 2.0,
        mu * ph,
        p * mu * ph,
        6.0 * p * p * mu * ph,
        2.0 * r * p * ph,
    ]);
    0.5 + (1.0 + 4.0 * envelope(dt, dx) * m)
}

/// Requires mu > 0.
pub fn w2(dt: f64, dx: f64, phi: f64, b: &FlowBounds) -> f64 {
    let (p, r, n, mu, ph) = (b.pn, b.rn, b.nn, b.mu, phi.abs());
    let m = max_of(&[
        p,
        n,
        r * p,
        n * p,
        r * mu,
        p * p,
        n * n,
        p * p * mu,
        r * r * mu,
        r * r * mu * mu,
        r * p * mu,
        r * n * mu,
    ]);
    let inner = 1.0 + (4.0 + r / mu + 1.0 / r + n * r / mu) * (1.0 + dt / dx * mu) * ph;
    (p + r / 2.0) * ph + mu * (1.0 + 4.0 * envelope(dt, dx) * inner * m)
}

/// Requires mu > 0.
pub fn w3(dt: f64, dx: f64, phi: f64, b: &FlowBounds) -> f64 {
    let (p, r, n, mu, ph) = (b.pn, b.rn, b.nn, b.mu, phi.abs());
    let m = max_of(&[
        p,
        n,
        n * p,
        r * mu,
        p * p,
        n * n,
        r * r * mu,
        p * r * mu,
        r * r * mu * mu,
        r * n * mu,
    ]);
    let inner = 1.0
        + n * r / mu
        + (4.0 + 2.0 * p + 1.0 / r + mu / r + 4.0 * n / (r * mu) + dt / dx * mu) * ph;
    (p + r / 2.0) * ph + 1.5 * mu * (ph + 2.0 * envelope(dt, dx) * inner * m)
}

/// 1 + (2 dt / 3) Gamma0 mu |A|^(-4/3)
fn friction_factor(i: &StabilityInputs) -> f64 {
    1.0 + 2.0 * i.dt / 3.0 * i.gamma0 * i.bounds.mu * i.bounds.abs_a.powf(-4.0 / 3.0)
}

/// Gamma0^-1 mu^-3 |A|^(4/3) |phi|^-2
fn angle_scale(i: &StabilityInputs) -> f64 {
    let mu = i.bounds.mu;
    i.bounds.abs_a.powf(4.0 / 3.0) / (i.gamma0 * mu * mu * mu * i.phi * i.phi)
}

fn q_operator(i: &StabilityInputs) -> f64 {
    let b = &i.bounds;
    3.0 * b.pn * w1(i.dt, i.dx, i.phi, b)
        + w2(i.dt, i.dx, i.phi, b).max(w3(i.dt, i.dx, i.phi, b)) / i.dx
}

/// Cross-section condition:
/// (dt^3/dx^2)(1 + (2dt/3) G mu |A|^(-4/3)) <= 3 G^-1 mu^-3 |A|^(4/3) |phi|^-2.
pub fn cond_a(i: &StabilityInputs) -> Result<Verdict> {
    i.validate()?;
    if i.bounds.is_still() {
        return Ok(Verdict::still_water());
    }
    let lhs = i.dt.powi(3) / (i.dx * i.dx) * friction_factor(i);
    Ok(Verdict::new(lhs, 3.0 * angle_scale(i)))
}

/// Discharge condition: dt (3 P W1 + max{W2, W3} / dx) <= max{1 + sqrt(1 - r*), sqrt(r*)}.
pub fn cond_q(i: &StabilityInputs) -> Result<Verdict> {
    i.validate()?;
    if i.bounds.is_still() {
        return Ok(Verdict::still_water());
    }
    Ok(Verdict::new(i.dt * q_operator(i), r_star_bound(i.r_star)))
}

/// Product of the cross-section and discharge conditions.
pub fn cond_combined(i: &StabilityInputs) -> Result<Verdict> {
    i.validate()?;
    if i.bounds.is_still() {
        return Ok(Verdict::still_water());
    }
    let lhs = i.dt.powi(4) / (i.dx * i.dx) * q_operator(i) * friction_factor(i);
    Ok(Verdict::new(
        lhs,
        3.0 * r_star_bound(i.r_star) * angle_scale(i),
    ))
}

/// Simplified bound with safety factor:
/// (dt^4/dx^2)(3|A|^(4/3) + 2 dt G mu) <= 9 max{..} G^-1 mu^-3 |A|^(8/3) |phi|^-2.
pub fn empirical_dt_bound(
    dt: f64,
    dx: f64,
    phi: f64,
    r_star: f64,
    gamma0: f64,
    mu: f64,
    abs_a: f64,
) -> Result<Verdict> {
    check_r_star(r_star)?;
    check_phi(phi)?;
    if mu == 0.0 {
        return Ok(Verdict::still_water());
    }
    let lhs = dt.powi(4) / (dx * dx) * (3.0 * abs_a.powf(4.0 / 3.0) + 2.0 * dt * gamma0 * mu);
    let rhs =
        9.0 * r_star_bound(r_star) * abs_a.powf(8.0 / 3.0) / (gamma0 * mu.powi(3) * phi * phi);
    Ok(Verdict::new(lhs, rhs))
}

/// Squared modulus of the cross-section amplification factor near phi = 0.
pub fn amp_modulus_a_squared(
    dt: f64,
    dx: f64,
    phi: f64,
    gamma1: f64,
    gamma2_mod: f64,
    alpha2: f64,
) -> f64 {
    let c = 2.0 * dt * dt / (3.0 * dx) * gamma2_mod;
    let re = 1.0 - c * phi * alpha2.sin();
    let im = dt / dx * gamma1.abs() + c * alpha2.cos();
    re * re + im * im * phi * phi
}

/// All four conditions at one (dt, dx, phi, r*) tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    pub inputs: StabilityInputs,
    pub cond_a: Verdict,
    pub cond_q: Verdict,
    pub combined: Verdict,
    pub empirical: Verdict,
    pub small_angle_ok: bool,
}

pub fn evaluate(i: &StabilityInputs) -> Result<StabilityReport> {
    Ok(StabilityReport {
        inputs: *i,
        cond_a: cond_a(i)?,
        cond_q: cond_q(i)?,
        combined: cond_combined(i)?,
        empirical: empirical_dt_bound(
            i.dt,
            i.dx,
            i.phi,
            i.r_star,
            i.gamma0,
            i.bounds.mu,
            i.bounds.abs_a,
        )?,
        small_angle_ok: i.phi.abs() <= SMALL_ANGLE_LIMIT,
    })
}

/// Largest dt in (0, dx] passing the combined condition, to 1e-6 relative.
pub fn max_stable_dt(
    dx: f64,
    phi: f64,
    r_star: f64,
    geom: &ChannelGeometry,
    state: &FlowState,
) -> Result<f64> {
    let at = |dt: f64| {
        cond_combined(&StabilityInputs::from_state(
            dt, dx, phi, r_star, geom, state,
        ))
    };
    let top = at(dx)?;
    if top.satisfied {
        return Ok(dx);
    }
    let mut hi = dx;
    let mut lo = dx;
    let mut last = top;
    loop {
        lo *= 0.5;
        if lo < dx * 1e-300 || lo == 0.0 {
            return Err(Error::Infeasible {
                dx,
                slack: last.slack,
            });
        }
        last = at(lo)?;
        if last.satisfied {
            break;
        }
        hi = lo;
    }
    while hi - lo > 1e-6 * lo {
        let mid = 0.5 * (lo + hi);
        if at(mid)?.satisfied {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normalized() -> ChannelGeometry {
        ChannelGeometry {
            top_width: 1.0,
            wetted_perimeter: 1.0,
            manning: 1.49,
            shear_stress: 0.0,
            density: 1000.0,
            gravity: 10.0,
        }
    }

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

    fn unit_inputs(dt: f64, dx: f64) -> StabilityInputs {
        StabilityInputs {
            dt,
            dx,
            phi: 0.1,
            r_star: 0.5,
            bounds: FlowBounds {
                mu: 1.0,
                pn: 1.0,
                rn: 1.0,
                nn: 1.0,
                abs_a: 1.0,
            },
            gamma0: 7.384,
        }
    }

    #[test]
    fn gamma0_values() {
        assert!((gamma0(&benoue()) - 7.380_992_553_535_434).abs() < 1e-12);
        let unit = ChannelGeometry {
            gravity: 1.0,
            ..normalized()
        };
        assert!((gamma0(&unit) - 1.0).abs() < 1e-15);
        let doubled = ChannelGeometry {
            wetted_perimeter: 2.0 * 366.4,
            ..benoue()
        };
        let ratio = gamma0(&doubled) / gamma0(&benoue());
        assert!((ratio - 2f64.powf(4.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn bounds_single_node() {
        let s = FlowState::new(vec![1.0], vec![1.0], 0).unwrap();
        let b = flow_bounds(&normalized(), &s);
        assert_eq!(b.mu, 1.0);
        assert_eq!(b.rn, 11.0);
        assert_eq!(b.nn, 5.0);
        // Gamma0 = 10 here because g = 10
        assert!((b.pn - 10.0).abs() < 1e-14);
        let s2 = FlowState::new(vec![1.0], vec![2.0], 0).unwrap();
        let b2 = flow_bounds(&normalized(), &s2);
        assert_eq!(b2.mu, 2.0 * b.mu);
        // max|Q| / mu is min A on a single node, so N does not move
        assert_eq!(b2.nn, b.nn);
    }

    #[test]
    fn still_water_passes() {
        let s = FlowState::uniform(5, 0.3, 0.0);
        let i = StabilityInputs::from_state(1.0, 1e-3, 0.1, 0.5, &benoue(), &s);
        assert!(i.bounds.is_still());
        let r = evaluate(&i).unwrap();
        for v in [r.cond_a, r.cond_q, r.combined, r.empirical] {
            assert!(v.satisfied);
            assert_eq!(v.slack, f64::INFINITY);
        }
        assert_eq!(max_stable_dt(0.25, 0.1, 0.5, &benoue(), &s).unwrap(), 0.25);
    }

    #[test]
    fn w1_vanishing_bounds() {
        let zero = FlowBounds {
            mu: 0.0,
            pn: 0.0,
            rn: 0.0,
            nn: 0.0,
            abs_a: 1.0,
        };
        assert_eq!(w1(0.3, 0.1, 0.2, &zero), 1.5);
    }

    #[test]
    fn cond_a_examples() {
        let v = cond_a(&unit_inputs(1.0, 1.0)).unwrap();
        assert!(v.satisfied);
        assert!((v.lhs - (1.0 + 2.0 / 3.0 * 7.384)).abs() < 1e-12);
        assert!((v.rhs - 3.0 / 7.384 / 0.01).abs() < 1e-9);
        let tight = cond_a(&unit_inputs(1.0, 0.01)).unwrap();
        assert!(!tight.satisfied);
        assert!(tight.slack < 0.0);
    }

    #[test]
    fn phi_zero_is_a_precondition_error() {
        let mut i = unit_inputs(1.0, 1.0);
        i.phi = 0.0;
        assert!(matches!(cond_a(&i), Err(Error::Precondition(_))));
        i.phi = 0.1;
        i.r_star = 1.0;
        assert!(matches!(cond_q(&i), Err(Error::Config(_))));
    }

    #[test]
    fn r_star_bound_first_branch() {
        assert!((r_star_bound(0.5) - (1.0 + 0.5f64.sqrt())).abs() < 1e-15);
        for k in 1..100 {
            let r = k as f64 / 100.0;
            assert_eq!(r_star_bound(r), 1.0 + (1.0 - r).sqrt());
        }
    }

    #[test]
    fn amplification_endpoints() {
        assert_eq!(amp_modulus_a_squared(0.3, 0.2, 0.0, 2.0, 5.0, 1.1), 1.0);
        assert_eq!(amp_modulus_a_squared(0.0, 0.2, 0.4, 2.0, 5.0, 1.1), 1.0);
        let v = amp_modulus_a_squared(1.0, 1.0, 0.1, 1.0, 1.0, -PI / 2.0);
        let re = 1.0 + 2.0 / 3.0 * 0.1;
        let im = 1.0 + 2.0 / 3.0 * (-PI / 2.0).cos();
        assert!((v - (re * re + im * im * 0.01)).abs() < 1e-15);
        assert!(v > 1.0);
    }

    #[test]
    fn conditions_monotone_in_dt() {
        let mut prev = [true; 3];
        for k in 0..200 {
            let dt = 1e-4 * 1.06f64.powi(k);
            let i = unit_inputs(dt, 0.05);
            let now = [
                cond_a(&i).unwrap().satisfied,
                cond_q(&i).unwrap().satisfied,
                cond_combined(&i).unwrap().satisfied,
            ];
            for c in 0..3 {
                assert!(
                    prev[c] || !now[c],
                    "condition {c} flipped back at dt = {dt}"
                );
            }
            prev = now;
        }
        assert_eq!(prev, [false; 3]);
    }

    #[test]
    fn max_dt_brackets() {
        let s = FlowState::new(vec![0.2, 0.3, 0.25], vec![2.0, -3.0, 1.5], 0).unwrap();
        let g = benoue();
        let dx = 0.05;
        let dt = max_stable_dt(dx, DEFAULT_PHI, DEFAULT_R_STAR, &g, &s).unwrap();
        assert!(dt > 0.0 && dt < dx, "dt = {dt}");
        let at = |t| {
            cond_combined(&StabilityInputs::from_state(
                t,
                dx,
                DEFAULT_PHI,
                0.5,
                &g,
                &s,
            ))
            .unwrap()
        };
        assert!(at(dt).satisfied);
        assert!(!at(1.01 * dt).satisfied);
    }

    #[test]
    fn max_dt_nondecreasing_in_dx() {
        let s = FlowState::new(vec![0.5, 1.0], vec![0.2, 0.4], 0).unwrap();
        let mut prev = 0.0;
        for k in 0..12 {
            let dx = 2f64.powi(-10 + k);
            let dt = max_stable_dt(dx, DEFAULT_PHI, DEFAULT_R_STAR, &benoue(), &s).unwrap();
            assert!(dt >= prev * (1.0 - 1e-6), "dx = {dx}");
            prev = dt;
        }
    }
}
