//! Independent transcriptions used as oracles by several test targets.

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use swe_maccormack::model::{
    ChannelGeometry, FlowState, GridSpec, InitialCondition, RainfallSpec, Scenario,
};
use swe_maccormack::BoundaryMode;

/// Everything the hand-written step needs, in raw physical form.
#[derive(Debug, Clone, Copy)]
pub struct RawSetup {
    pub g: f64,
    pub top: f64,
    pub perimeter: f64,
    pub n1: f64,
    pub tau: f64,
    pub rho: f64,
    pub dt: f64,
    pub dx: f64,
    pub rain: f64,
    pub a_min: f64,
}

fn source(s: &RawSetup, a: f64, q: f64) -> f64 {
    if a <= s.a_min {
        return 0.0;
    }
    // g P (tau / (rho g) - n1^2 / 1.49^2 P^(1/3) Q|Q| / A^(7/3))
    let slope = s.tau / (s.rho * s.g);
    let friction =
        s.n1 * s.n1 / (1.49 * 1.49) * s.perimeter.cbrt() * q * q.abs() / (a * a * a.cbrt());
    s.g * s.perimeter * (slope - friction)
}

fn clip(a: &mut [f64], q: &mut [f64], a_min: f64) {
    for j in 0..a.len() {
        if a[j] < a_min {
            a[j] = a_min;
            q[j] = 0.0;
        }
    }
}

/// Predictor with forward differences, corrector with backward differences,
/// zero-gradient ghosts and constant lateral inflow.
pub fn reference_step(a: &[f64], q: &[f64], s: &RawSetup) -> (Vec<f64>, Vec<f64>) {
    let m = a.len();
    let lam = s.dt / s.dx;
    let c = s.g / (2.0 * s.top);

    let mut ae = a.to_vec();
    ae.push(a[m - 1]);
    let mut qe = q.to_vec();
    qe.push(q[m - 1]);
    let mut ap = vec![0.0; m];
    let mut qp = vec![0.0; m];
    for j in 0..m {
        ap[j] = ae[j] - lam * (qe[j + 1] - qe[j]) + s.dt * s.rain;
        let dflux = c * (ae[j + 1] * ae[j + 1] - ae[j] * ae[j]) + qe[j + 1] * qe[j + 1] / ae[j + 1]
            - qe[j] * qe[j] / ae[j];
        qp[j] = qe[j] - lam * dflux + s.dt * source(s, ae[j], qe[j]);
    }
    clip(&mut ap, &mut qp, s.a_min);

    let mut apl = vec![ap[0]];
    apl.extend_from_slice(&ap);
    let mut qpl = vec![qp[0]];
    qpl.extend_from_slice(&qp);
    let mut an = vec![0.0; m];
    let mut qn = vec![0.0; m];
    for j in 0..m {
        let (k, km) = (j + 1, j);
        an[j] = 0.5 * (a[j] + apl[k] - lam * (qpl[k] - qpl[km]) + s.dt * s.rain);
        let dflux = c * (apl[k] * apl[k] - apl[km] * apl[km]) + qpl[k] * qpl[k] / apl[k]
            - qpl[km] * qpl[km] / apl[km];
        qn[j] = 0.5 * (q[j] + qpl[k] - lam * dflux + s.dt * source(s, apl[k], qpl[k]));
    }
    clip(&mut an, &mut qn, s.a_min);
    (an, qn)
}

/// Random small state and setup; some nodes are left at the floor.
pub fn random_case(rng: &mut StdRng) -> (RawSetup, FlowState) {
    let nodes = rng.gen_range(2..=9);
    let s = RawSetup {
        g: 9.81,
        top: rng.gen_range(1.0..400.0),
        perimeter: rng.gen_range(1.0..400.0),
        n1: rng.gen_range(0.01..0.05),
        tau: rng.gen_range(0.0..2.0),
        rho: 1000.0,
        dt: rng.gen_range(1e-4..1e-2),
        dx: rng.gen_range(0.05..1.0),
        rain: rng.gen_range(0.0..1e-2),
        a_min: 1e-3,
    };
    let mut area = Vec::with_capacity(nodes);
    let mut discharge = Vec::with_capacity(nodes);
    for _ in 0..nodes {
        if rng.gen_bool(0.2) {
            area.push(s.a_min);
            discharge.push(0.0);
        } else {
            area.push(rng.gen_range(0.2..3.0));
            discharge.push(rng.gen_range(-0.5..0.5));
        }
    }
    (s, FlowState::new(area, discharge, 0).unwrap())
}

pub fn scenario_for(s: &RawSetup, state: &FlowState) -> Scenario {
    let length = (state.len() - 1) as f64 * s.dx;
    Scenario {
        geometry: ChannelGeometry {
            top_width: s.top,
            wetted_perimeter: s.perimeter,
            manning: s.n1,
            shear_stress: s.tau,
            density: s.rho,
            gravity: s.g,
        },
        grid: GridSpec::new(length, s.dt, s.dx, s.dt).unwrap(),
        rainfall: RainfallSpec {
            intensity: s.rain,
            t_start: 0.0,
            t_end: 1e9,
            x_lo: 0.0,
            x_hi: length,
            lateral_scale: 1.0,
        },
        initial: InitialCondition::State(state.clone()),
        boundary: BoundaryMode::ZeroGradientGhost,
        a_min: s.a_min,
    }
}

/// Largest componentwise difference, relative to the magnitude of the state.
pub fn scaled_difference(a: &[f64], q: &[f64], b_a: &[f64], b_q: &[f64]) -> f64 {
    let scale = a
        .iter()
        .chain(q)
        .map(|v| v.abs())
        .fold(f64::MIN_POSITIVE, f64::max);
    let da = a.iter().zip(b_a).map(|(x, y)| (x - y).abs());
    let dq = q.iter().zip(b_q).map(|(x, y)| (x - y).abs());
    da.chain(dq).fold(0.0, f64::max) / scale
}

/// One-step agreement over `cases` random states; returns the worst scaled difference.
pub fn one_step_worst(seed: u64, cases: usize) -> f64 {
    use rand::SeedableRng;
    let mut rng = StdRng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for _ in 0..cases {
        let (setup, state) = random_case(&mut rng);
        let scenario = scenario_for(&setup, &state);
        let got = swe_maccormack::scheme::step(&state, &scenario).unwrap();
        let (ra, rq) = reference_step(&state.area, &state.discharge, &setup);
        worst = worst.max(scaled_difference(&got.area, &got.discharge, &ra, &rq));
    }
    worst
}

pub fn w_envelope(dt: f64, dx: f64) -> f64 {
    dt + dt.powi(2) + dt / dx + dt.powi(2) / dx + dt.powi(3) / dx + (dt / dx).powi(2)
}

/// Second transcription of W1, W2, W3 (argument order: P, R, N, mu).
pub fn w_reference(dt: f64, dx: f64, phi: f64, p: f64, r: f64, n: f64, mu: f64) -> (f64, f64, f64) {
    let e = w_envelope(dt, dx);
    let f = phi.abs();
    let m1 = [
        p,
        2.0 * p.powi(2),
        r * f / 2.0,
        mu * f,
        p * mu * f,
        6.0 * p.powi(2) * mu * f,
        2.0 * r * p * f,
    ]
    .into_iter()
    .fold(f64::MIN, f64::max);
    let w1 = 0.5 + (1.0 + 4.0 * e * m1);
    let m2 = [
        p,
        n,
        r * p,
        n * p,
        r * mu,
        p.powi(2),
        n.powi(2),
        p.powi(2) * mu,
        r.powi(2) * mu,
        r.powi(2) * mu.powi(2),
        r * p * mu,
        r * n * mu,
    ]
    .into_iter()
    .fold(f64::MIN, f64::max);
    let w2 = (p + r / 2.0) * f
        + mu * (1.0
            + 4.0
                * e
                * (1.0 + (4.0 + r / mu + 1.0 / r + n * r / mu) * (1.0 + dt / dx * mu) * f)
                * m2);
    let m3 = [
        p,
        n,
        n * p,
        r * mu,
        p.powi(2),
        n.powi(2),
        r.powi(2) * mu,
        p * r * mu,
        r.powi(2) * mu.powi(2),
        r * n * mu,
    ]
    .into_iter()
    .fold(f64::MIN, f64::max);
    let w3 = (p + r / 2.0) * f
        + 1.5
            * mu
            * (f + 2.0
                * e
                * (1.0
                    + n * r / mu
                    + (4.0 + 2.0 * p + 1.0 / r + mu / r + 4.0 * n / (r * mu) + dt / dx * mu) * f)
                * m3);
    (w1, w2, w3)
}
