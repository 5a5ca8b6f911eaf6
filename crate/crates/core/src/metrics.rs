//! Fully discrete space-time norms, error norms against an exact solution and
//! refinement ratios.

use std::fmt::Write as _;

use serde::Serialize;

use crate::dressler::ExactSolution;
use crate::error::{Error, Result};
use crate::model::{FlowState, GridSpec};

/// sqrt(dt dx sum_n sum_j w^2), accumulated row-major in ascending order.
pub fn discrete_norm(samples: &[Vec<f64>], dt: f64, dx: f64) -> Result<f64> {
    let width = samples.first().map_or(0, Vec::len);
    let mut sum = 0.0;
    for (n, row) in samples.iter().enumerate() {
        if row.len() != width {
            return Err(Error::Config(format!(
                "ragged samples: level {n} has {} nodes, expected {width}",
                row.len()
            )));
        }
        for (j, &w) in row.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { level: n, node: j });
            }
            sum += w * w;
        }
    }
    Ok((dt * dx * sum).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorPair {
    pub err_a: f64,
    pub err_q: f64,
    pub dt: f64,
    pub dx: f64,
    /// N (time steps)
    pub levels: usize,
    /// M (space intervals)
    pub intervals: usize,
}

/// Discrete L2 errors of a full run against `oracle`, sampled at every grid point.
pub fn error_norms(
    run: &[FlowState],
    oracle: &dyn ExactSolution,
    grid: &GridSpec,
) -> Result<ErrorPair> {
    if run.len() != grid.levels + 1 {
        return Err(Error::Config(format!(
            "run holds {} levels, grid expects {}",
            run.len(),
            grid.levels + 1
        )));
    }
    let xs: Vec<f64> = (0..grid.node_count()).map(|j| grid.x(j)).collect();
    let mut da = Vec::with_capacity(run.len());
    let mut dq = Vec::with_capacity(run.len());
    for (n, state) in run.iter().enumerate() {
        if state.len() != grid.node_count() {
            return Err(Error::Config(format!(
                "level {n} has {} nodes, grid expects {}",
                state.len(),
                grid.node_count()
            )));
        }
        let (a, q) = oracle.sample(grid.t(n), &xs)?;
        da.push(a.iter().zip(&state.area).map(|(e, v)| e - v).collect());
        dq.push(q.iter().zip(&state.discharge).map(|(e, v)| e - v).collect());
    }
    Ok(ErrorPair {
        err_a: discrete_norm(&da, grid.dt, grid.dx)?,
        err_q: discrete_norm(&dq, grid.dt, grid.dx)?,
        dt: grid.dt,
        dx: grid.dx,
        levels: grid.levels,
        intervals: grid.intervals,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub dt: f64,
    pub dx: f64,
    /// `None` for a failed rung.
    pub err_a: Option<f64>,
    pub err_q: Option<f64>,
    pub ratio_a: Option<f64>,
    pub ratio_q: Option<f64>,
}

impl ConvergenceRow {
    pub fn log2_a(&self) -> Option<f64> {
        self.ratio_a.map(f64::log2)
    }

    pub fn log2_q(&self) -> Option<f64> {
        self.ratio_q.map(f64::log2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
}

fn ratio(prev: Option<f64>, cur: Option<f64>) -> Option<f64> {
    match (prev, cur) {
        (Some(p), Some(c)) if c != 0.0 => Some(p / c),
        _ => None,
    }
}

/// Successive error ratios err_{k-1} / err_k of a coarse-to-fine ladder.
pub fn convergence_ratios(pairs: &[ErrorPair]) -> ConvergenceReport {
    let rungs: Vec<(f64, f64, Option<ErrorPair>)> =
        pairs.iter().map(|p| (p.dt, p.dx, Some(*p))).collect();
    ratios_with_failures(&rungs)
}

/// Same as [`convergence_ratios`] with failed rungs (`None`) kept in place.
pub fn ratios_with_failures(rungs: &[(f64, f64, Option<ErrorPair>)]) -> ConvergenceReport {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(rungs.len());
    for (k, (dt, dx, pair)) in rungs.iter().enumerate() {
        let err_a = pair.map(|p| p.err_a);
        let err_q = pair.map(|p| p.err_q);
        let (ratio_a, ratio_q) = match k.checked_sub(1).map(|i| &rows[i]) {
            Some(prev) => (ratio(prev.err_a, err_a), ratio(prev.err_q, err_q)),
            None => (None, None),
        };
        rows.push(ConvergenceRow {
            dt: *dt,
            dx: *dx,
            err_a,
            err_q,
            ratio_a,
            ratio_q,
        });
    }
    ConvergenceReport { rows }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "--".to_string(), |x| format!("{x:.16e}"))
}

impl ConvergenceReport {
    pub const CSV_HEADER: &'static str = "dt,dx,errA,errQ,ratioA,ratioQ,log2A,log2Q";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{},{},{},{},{},{}",
                r.dt,
                r.dx,
                cell(r.err_a),
                cell(r.err_q),
                cell(r.ratio_a),
                cell(r.ratio_q),
                cell(r.log2_a()),
                cell(r.log2_q()),
            );
        }
        out
    }

    /// Human-readable table with the columns of the reference convergence table.
    pub fn to_table(&self) -> String {
        let fixed = |v: Option<f64>| v.map_or_else(|| "--".to_string(), |x| format!("{x:.4}"));
        let mut out = format!(
            "{:>10} {:>10} {:>12} {:>12} {:>8} {:>8} {:>8} {:>8}\n",
            "dt", "dx", "errA", "errQ", "r(A)", "r(Q)", "log2 A", "log2 Q"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:>10} {:>10} {:>12} {:>12} {:>8} {:>8} {:>8} {:>8}",
                pow2(r.dt),
                pow2(r.dx),
                fixed(r.err_a),
                fixed(r.err_q),
                fixed(r.ratio_a),
                fixed(r.ratio_q),
                fixed(r.log2_a()),
                fixed(r.log2_q()),
            );
        }
        out
    }
}

/// `2^-k` when `v` is an exact power of two, plain otherwise.
fn pow2(v: f64) -> String {
    let k = v.log2();
    if k.fract() == 0.0 && k.abs() < 64.0 {
        format!("2^{}", k as i64)
    } else {
        format!("{v}")
    }
}
