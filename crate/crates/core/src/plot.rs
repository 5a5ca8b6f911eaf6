//! Static SVG profiles of a persisted run: A against x on top, Q against x below.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// One time level read back from a run CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub t: f64,
    pub x: Vec<f64>,
    pub area: Vec<f64>,
    pub discharge: Vec<f64>,
    pub area_exact: Option<Vec<f64>>,
    pub discharge_exact: Option<Vec<f64>>,
}

fn parse_err(path: &Path, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        message,
    }
}

/// Reads a `t,x,A,Q[,A_exact,Q_exact]` file, grouping consecutive rows by t.
pub fn read_run_csv(path: &Path) -> Result<Vec<Profile>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, "empty file".into()))?;
    let exact = match header {
        "t,x,A,Q" => false,
        "t,x,A,Q,A_exact,Q_exact" => true,
        other => return Err(parse_err(path, format!("unexpected header '{other}'"))),
    };
    let width = if exact { 6 } else { 4 };
    let mut out: Vec<Profile> = Vec::new();
    for (i, line) in lines.enumerate() {
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(path, format!("line {}: {e}", i + 2)))?;
        if cells.len() != width {
            return Err(parse_err(
                path,
                format!("line {}: expected {width} columns", i + 2),
            ));
        }
        if out.last().is_none_or(|p| p.t != cells[0]) {
            out.push(Profile {
                t: cells[0],
                x: Vec::new(),
                area: Vec::new(),
                discharge: Vec::new(),
                area_exact: exact.then(Vec::new),
                discharge_exact: exact.then(Vec::new),
            });
        }
        let p = out.last_mut().expect("pushed above");
        p.x.push(cells[1]);
        p.area.push(cells[2]);
        p.discharge.push(cells[3]);
        if let (Some(a), Some(q)) = (&mut p.area_exact, &mut p.discharge_exact) {
            a.push(cells[4]);
            q.push(cells[5]);
        }
    }
    Ok(out)
}

/// Indices {0, N/4, N/2, 3N/4, N} of `count` levels, deduplicated.
pub fn default_levels(count: usize) -> Vec<usize> {
    if count == 0 {
        return Vec::new();
    }
    let n = count - 1;
    let mut v: Vec<usize> = [0, n / 4, n / 2, 3 * n / 4, n].to_vec();
    v.dedup();
    v
}

const WIDTH: f64 = 720.0;
const PANEL_HEIGHT: f64 = 260.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const GAP: f64 = 60.0;

struct Panel<'a> {
    top: f64,
    label: &'a str,
    numeric: &'a [f64],
    exact: Option<&'a [f64]>,
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 * lo.abs().max(1.0) {
        let pad = 0.5 * lo.abs().max(1.0);
        return (lo - pad, hi + pad);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn polyline(
    out: &mut String,
    xs: &[f64],
    ys: &[f64],
    map: &dyn Fn(f64, f64) -> (f64, f64),
    style: &str,
) {
    out.push_str("<polyline fill=\"none\" ");
    out.push_str(style);
    out.push_str(" points=\"");
    for (i, (&x, &y)) in xs.iter().zip(ys).enumerate() {
        let (px, py) = map(x, y);
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "{px:.2},{py:.2}");
    }
    out.push_str("\"/>\n");
}

fn panel(out: &mut String, p: &Panel, xs: &[f64], x_range: (f64, f64)) {
    let plot_w = WIDTH - LEFT - RIGHT;
    let (y0, y1) = range(p.numeric.iter().chain(p.exact.unwrap_or(&[])).copied());
    let (x0, x1) = x_range;
    let top = p.top;
    let map = move |x: f64, y: f64| {
        (
            LEFT + (x - x0) / (x1 - x0) * plot_w,
            top + PANEL_HEIGHT - (y - y0) / (y1 - y0) * PANEL_HEIGHT,
        )
    };
    let _ = writeln!(
        out,
        "<rect x=\"{LEFT:.2}\" y=\"{top:.2}\" width=\"{plot_w:.2}\" height=\"{PANEL_HEIGHT:.2}\" fill=\"none\" stroke=\"#000\"/>"
    );
    let bottom = top + PANEL_HEIGHT;
    for (v, anchor, px) in [(x0, "start", LEFT), (x1, "end", LEFT + plot_w)] {
        let _ = writeln!(
            out,
            "<text x=\"{px:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"{anchor}\">{v:.4}</text>",
            bottom + 14.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\" text-anchor=\"middle\">x (m)</text>",
        LEFT + plot_w / 2.0,
        bottom + 30.0
    );
    for (v, py) in [(y0, bottom), (y1, top + 10.0)] {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{py:.2}\" font-size=\"11\" text-anchor=\"end\">{v:.4e}</text>",
            LEFT - 4.0
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"16\" y=\"{:.2}\" font-size=\"12\" transform=\"rotate(-90 16 {:.2})\" text-anchor=\"middle\">{}</text>",
        top + PANEL_HEIGHT / 2.0,
        top + PANEL_HEIGHT / 2.0,
        p.label
    );
    polyline(
        out,
        xs,
        p.numeric,
        &map,
        "stroke=\"#1f4e9c\" stroke-width=\"1.5\"",
    );
    if let Some(e) = p.exact {
        polyline(
            out,
            xs,
            e,
            &map,
            "stroke=\"#c0392b\" stroke-width=\"1.2\" stroke-dasharray=\"5,3\"",
        );
    }
}

/// Deterministic two-panel SVG of one profile.
pub fn render_svg(p: &Profile) -> String {
    let height = TOP + 2.0 * PANEL_HEIGHT + GAP + 50.0;
    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {WIDTH:.0} {height:.0}\">"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"22\" font-size=\"14\" text-anchor=\"middle\">t = {:.6} s</text>",
        WIDTH / 2.0,
        p.t
    );
    if p.area_exact.is_some() {
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"22\" font-size=\"11\" text-anchor=\"end\" fill=\"#1f4e9c\">numerical</text>\n\
             <text x=\"{:.2}\" y=\"34\" font-size=\"11\" text-anchor=\"end\" fill=\"#c0392b\">exact</text>",
            WIDTH - RIGHT,
            WIDTH - RIGHT
        );
    }
    let x_range = range(p.x.iter().copied());
    let x_range = match (p.x.first(), p.x.last()) {
        (Some(&a), Some(&b)) if b > a => (a, b),
        _ => x_range,
    };
    panel(
        &mut out,
        &Panel {
            top: TOP,
            label: "A (m^2)",
            numeric: &p.area,
            exact: p.area_exact.as_deref(),
        },
        &p.x,
        x_range,
    );
    panel(
        &mut out,
        &Panel {
            top: TOP + PANEL_HEIGHT + GAP,
            label: "Q (m^3/s)",
            numeric: &p.discharge,
            exact: p.discharge_exact.as_deref(),
        },
        &p.x,
        x_range,
    );
    out.push_str("</svg>\n");
    out
}

/// Writes `profile_{n:05}.svg` for every selected level index.
pub fn write_plots(profiles: &[Profile], levels: &[usize], out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::with_capacity(levels.len());
    for &n in levels {
        let p = profiles.get(n).ok_or_else(|| {
            Error::Config(format!(
                "level {n} out of range: the run has {} levels",
                profiles.len()
            ))
        })?;
        let path = out_dir.join(format!("profile_{n:05}.svg"));
        fs::write(&path, render_svg(p)).map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
