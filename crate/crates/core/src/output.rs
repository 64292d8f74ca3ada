//! CSV, JSON and SVG emission.
//!
//! Floats are written in the shortest decimal form that parses back to the
//! same bits (Rust's `{:?}` formatting, as `serde_json` does for JSON), so
//! every emitted table round-trips exactly.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::Path;

use serde::Serialize;

use crate::dynamics::Trajectory;
use crate::reduced::PortraitGrid;

pub const TRAJECTORY_HEADER: [&str; 9] =
    ["tau", "z", "theta", "xi", "phi", "nu_eff", "delta_c_eff", "photon_number", "energy"];

pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.{}.tmp", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn csv<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.as_ref().iter().map(|v| fmt_f64(*v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a table written by [`csv`].
pub fn read_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().ok_or("empty table")?.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| c.parse::<f64>().map_err(|e| format!("row {}: {e}", k + 1)))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != header.len() {
            return Err(format!("row {} has {} cells, header has {}", k + 1, row.len(), header.len()));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let rows = traj.times.iter().zip(&traj.states).zip(&traj.derived).map(|((t, s), d)| {
        [*t, s.z, s.theta, s.xi, s.phi, d.nu_eff, d.delta_c_eff, d.photon_number, d.energy]
    });
    csv(&TRAJECTORY_HEADER, rows)
}

pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub const SVG_SIZE: f64 = 1000.0;
const COLOR_LEVELS: usize = 64;

/// Pixel coordinates: θ ∈ [−π, π] left to right, z ∈ [−1, 1] bottom to top.
pub fn to_pixel(theta: f64, z: f64) -> (f64, f64) {
    ((theta + PI) / (2.0 * PI) * SVG_SIZE, (1.0 - z) / 2.0 * SVG_SIZE)
}

/// Inverse of [`to_pixel`].
pub fn from_pixel(x: f64, y: f64) -> (f64, f64) {
    (x / SVG_SIZE * 2.0 * PI - PI, 1.0 - 2.0 * y / SVG_SIZE)
}

fn px(v: f64) -> String {
    let r = (v * 100.0).round() / 100.0;
    fmt_f64(if r == 0.0 { 0.0 } else { r })
}

/// Maps a level in `[0, 1]` to a dark-blue → yellow ramp.
fn ramp(level: f64) -> (u8, u8, u8) {
    let stops = [(0.0, (13, 8, 135)), (0.35, (126, 3, 168)), (0.65, (204, 71, 120)), (0.85, (248, 149, 64)), (1.0, (240, 249, 33))];
    let l = level.clamp(0.0, 1.0);
    for w in stops.windows(2) {
        let (a, ca) = w[0];
        let (b, cb) = w[1];
        if l <= b {
            let f = (l - a) / (b - a);
            let mix = |x: u8, y: u8| (x as f64 + f * (y as f64 - x as f64)).round() as u8;
            return (mix(ca.0, cb.0), mix(ca.1, cb.1), mix(ca.2, cb.2));
        }
    }
    stops[4].1
}

/// Splits a `(θ, z)` path wherever θ wraps through ±π.
fn unwrap_segments(points: &[(f64, f64)]) -> Vec<Vec<(f64, f64)>> {
    let mut segments: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut current: Vec<(f64, f64)> = Vec::new();
    for &p in points {
        if let Some(&(t0, _)) = current.last() {
            if (p.0 - t0).abs() > PI {
                segments.push(std::mem::take(&mut current));
            }
        }
        current.push(p);
    }
    if !current.is_empty() {
        segments.push(current);
    }
    segments
}

fn polyline(out: &mut String, points: &[(f64, f64)], attrs: &str) {
    let coords: Vec<String> = points
        .iter()
        .map(|&(t, z)| {
            let (x, y) = to_pixel(t, z);
            format!("{},{}", px(x), px(y))
        })
        .collect();
    let _ = writeln!(out, "<polyline {attrs} points=\"{}\"/>", coords.join(" "));
}

/// Phase portrait: photon-number raster (log colour scale, clipped cells at
/// the top of the scale), reduced-model trajectories, the separatrix and the
/// fixed points.
pub fn portrait_svg(grid: &PortraitGrid) -> String {
    let mut out = String::new();
    let s = SVG_SIZE as u32;
    let _ = writeln!(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">");
    let _ = writeln!(out, "<g id=\"photon-map\" shape-rendering=\"crispEdges\">");
    let nt = grid.theta_axis.len();
    let nz = grid.z_axis.len();
    let logs: Vec<f64> = grid.photon_map.iter().flatten().map(|v| v.max(1e-300).log10()).collect();
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cell_w = SVG_SIZE / nt as f64;
    let cell_h = SVG_SIZE / nz as f64;
    for (j, row) in grid.photon_map.iter().enumerate() {
        // row j holds z_axis[j]; higher z is drawn nearer the top
        let y = SVG_SIZE - (j + 1) as f64 * cell_h;
        let level = |v: f64| (((v.max(1e-300).log10() - lo) / span) * (COLOR_LEVELS - 1) as f64).round() as usize;
        let mut i = 0;
        while i < nt {
            let l = level(row[i]);
            let mut k = i + 1;
            while k < nt && level(row[k]) == l {
                k += 1;
            }
            let (r, g, b) = ramp(l as f64 / (COLOR_LEVELS - 1) as f64);
            let _ = writeln!(
                out,
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#{r:02x}{g:02x}{b:02x}\"/>",
                px(i as f64 * cell_w),
                px(y),
                px((k - i) as f64 * cell_w),
                px(cell_h)
            );
            i = k;
        }
    }
    let _ = writeln!(out, "</g>");
    let _ = writeln!(out, "<g id=\"trajectories\" fill=\"none\" stroke=\"#ffffff\" stroke-width=\"1.5\">");
    for tr in &grid.trajectories {
        for seg in unwrap_segments(&tr.points) {
            if seg.len() > 1 {
                polyline(&mut out, &seg, "class=\"trajectory\"");
            }
        }
    }
    let _ = writeln!(out, "</g>");
    if !grid.separatrix.is_empty() {
        let segments = unwrap_segments(&grid.separatrix);
        if segments.len() == 1 {
            let mut closed = segments[0].clone();
            if closed.first() != closed.last() {
                closed.push(closed[0]);
            }
            polyline(&mut out, &closed, "id=\"separatrix\" fill=\"none\" stroke=\"#00ffff\" stroke-width=\"3\"");
        } else {
            for (k, seg) in segments.iter().enumerate() {
                polyline(&mut out, seg, &format!("id=\"separatrix-{k}\" fill=\"none\" stroke=\"#00ffff\" stroke-width=\"3\""));
            }
        }
    }
    let _ = writeln!(out, "<g id=\"fixed-points\">");
    for fp in &grid.fixed_points {
        let (x, y) = to_pixel(fp.theta, fp.z);
        let _ = writeln!(
            out,
            "<circle cx=\"{}\" cy=\"{}\" r=\"8\" fill=\"#ffffff\" stroke=\"#000000\" stroke-width=\"2\"><title>{:?}</title></circle>",
            px(x),
            px(y),
            fp.label
        );
        // keep labels on the canvas
        let (lx, anchor) = if x > SVG_SIZE - 60.0 { (x - 12.0, "end") } else { (x + 12.0, "start") };
        let ly = if y < 30.0 { y + 30.0 } else { y - 10.0 };
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-size=\"22\" fill=\"#ffffff\" text-anchor=\"{anchor}\">{:?}</text>",
            px(lx),
            px(ly),
            fp.label
        );
    }
    let _ = writeln!(out, "</g>");
    out.push_str("</svg>\n");
    out
}

/// Grid dump: one row per cell, `clipped` is 1 where the photon number was
/// capped next to the separatrix.
pub fn portrait_grid_csv(grid: &PortraitGrid) -> String {
    let mut rows = Vec::with_capacity(grid.theta_axis.len() * grid.z_axis.len());
    for (j, &z) in grid.z_axis.iter().enumerate() {
        for (i, &theta) in grid.theta_axis.iter().enumerate() {
            rows.push([theta, z, grid.photon_map[j][i], grid.detuning[j][i], if grid.clipped[j][i] { 1.0 } else { 0.0 }]);
        }
    }
    csv(&["theta", "z", "photon_number", "delta_c_eff", "clipped"], rows)
}
