//! On-disk formats: metrics and snapshot CSV, reference tables, SVG frames.
//!
//! All floating-point columns are written with 17 significant digits so a
//! read-back reproduces the exact bit pattern.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{PlaneCurve, RadiusProfile, SupportProfile};
use crate::solver::StepDiagnostics;

pub const METRICS_HEADER: &str =
    "t,f,energy,length,rho_min,rho_max,harnack_ratio,closure_defect,sup_u,sup_u_theta";
pub const SNAPSHOT_HEADER: &str = "theta,rho,p,x,y";
pub const TABLE_HEADER: &str = "t,scaled_length,rho_min,rho_max,energy";

/// Per-step scalar series of a run.
pub fn write_metrics_csv(path: &Path, diagnostics: &[StepDiagnostics]) -> Result<()> {
    let mut out = String::with_capacity(diagnostics.len() * 220 + 128);
    out.push_str(METRICS_HEADER);
    out.push('\n');
    for d in diagnostics {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            d.t,
            d.f_value,
            d.energy,
            d.length,
            d.rho_min,
            d.rho_max,
            d.harnack_ratio,
            d.closure_defect,
            d.sup_u,
            d.sup_u_theta
        )
        .expect("writing to a string cannot fail");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// One captured state: radius, support and reconstructed node positions.
pub fn write_snapshot_csv(
    path: &Path,
    rho: &RadiusProfile,
    support: &SupportProfile,
    curve: &PlaneCurve,
) -> Result<()> {
    let nodes = rho.grid().nodes();
    let mut out = String::with_capacity(nodes.len() * 110 + 32);
    out.push_str(SNAPSHOT_HEADER);
    out.push('\n');
    for (i, &theta) in nodes.iter().enumerate() {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            theta,
            rho.values()[i],
            support.values()[i],
            curve.x()[i],
            curve.y()[i]
        )
        .expect("writing to a string cannot fail");
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub fn snapshot_filename(t: f64) -> String {
    format!("snapshot_t{t:.4}.csv")
}

pub fn frame_filename(t: f64) -> String {
    format!("frame_t{t:.4}.svg")
}

/// One row of the shape summary table; `t = None` is the `t → ∞` limit row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub t: Option<f64>,
    /// Arc length divided by `2πm` (the mean radius of curvature).
    pub scaled_length: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub energy: f64,
}

/// Parse a reference table CSV (`inf` in the time column marks the limit row).
pub fn read_reference_table(path: &Path) -> Result<Vec<TableRow>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TABLE_HEADER => {}
        _ => {
            return Err(Error::Invalid(format!(
                "{}: expected header {TABLE_HEADER:?}",
                path.display()
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 5 {
            return Err(Error::Invalid(format!(
                "{}:{}: expected 5 comma-separated fields",
                path.display(),
                lineno + 1
            )));
        }
        let t = if fields[0].eq_ignore_ascii_case("inf") {
            None
        } else {
            Some(parse_field(path, lineno, fields[0])?)
        };
        rows.push(TableRow {
            t,
            scaled_length: parse_field(path, lineno, fields[1])?,
            rho_min: parse_field(path, lineno, fields[2])?,
            rho_max: parse_field(path, lineno, fields[3])?,
            energy: parse_field(path, lineno, fields[4])?,
        });
    }
    if rows.is_empty() {
        return Err(Error::Invalid(format!(
            "{}: table has no rows",
            path.display()
        )));
    }
    Ok(rows)
}

fn parse_field(path: &Path, lineno: usize, field: &str) -> Result<f64> {
    field.parse().map_err(|_| {
        Error::Invalid(format!(
            "{}:{}: not a number: {field:?}",
            path.display(),
            lineno + 1
        ))
    })
}

/// Write a computed table in the same format the reference reader accepts.
pub fn write_table_csv(path: &Path, rows: &[TableRow]) -> Result<()> {
    let mut out = String::new();
    out.push_str(TABLE_HEADER);
    out.push('\n');
    for r in rows {
        match r.t {
            Some(t) => write!(out, "{t}").expect("string write"),
            None => out.push_str("inf"),
        }
        writeln!(
            out,
            ",{:.16e},{:.16e},{:.16e},{:.16e}",
            r.scaled_length, r.rho_min, r.rho_max, r.energy
        )
        .expect("string write");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Fixed-width text rendering for the terminal.
pub fn format_table(rows: &[TableRow]) -> String {
    let mut out = String::new();
    writeln!(
        out,
        "{:>8}  {:>14}  {:>12}  {:>12}  {:>12}",
        "t", "length/(2mpi)", "rho_min", "rho_max", "energy"
    )
    .expect("string write");
    for r in rows {
        let t = match r.t {
            Some(t) => format!("{t:.4}"),
            None => "inf".to_string(),
        };
        writeln!(
            out,
            "{:>8}  {:>14.5}  {:>12.5}  {:>12.5}  {:>12.5}",
            t, r.scaled_length, r.rho_min, r.rho_max, r.energy
        )
        .expect("string write");
    }
    out
}

/// Largest relative deviation between a computed table and a reference,
/// across all four value columns.
///
/// Row counts and time labels must line up exactly.
pub fn compare_tables(actual: &[TableRow], reference: &[TableRow]) -> Result<f64> {
    if actual.len() != reference.len() {
        return Err(Error::Invalid(format!(
            "table has {} rows but the reference has {}",
            actual.len(),
            reference.len()
        )));
    }
    let mut worst: f64 = 0.0;
    for (a, r) in actual.iter().zip(reference) {
        match (a.t, r.t) {
            (None, None) => {}
            (Some(ta), Some(tr)) if (ta - tr).abs() <= 1e-9 * tr.abs().max(1.0) => {}
            _ => {
                return Err(Error::Invalid(format!(
                    "table rows are for different times: {:?} vs {:?}",
                    a.t, r.t
                )))
            }
        }
        for (x, y) in [
            (a.scaled_length, r.scaled_length),
            (a.rho_min, r.rho_min),
            (a.rho_max, r.rho_max),
            (a.energy, r.energy),
        ] {
            worst = worst.max((x - y).abs() / y.abs().max(f64::MIN_POSITIVE));
        }
    }
    Ok(worst)
}

/// A curve plus its stroke style for one SVG frame.
pub struct SvgCurve<'a> {
    pub curve: &'a PlaneCurve,
    pub stroke: &'a str,
    pub dashed: bool,
}

/// Render closed curves into a standalone square SVG of `size` pixels.
///
/// The view is centered on the joint bounding box and scaled to fill 95% of
/// the half-extent, so a unit circle alone on a 400-pixel canvas maps to a
/// radius of 190 pixels. Output depends only on the inputs.
pub fn render_svg(curves: &[SvgCurve], size: f64) -> String {
    let mut min_x = f64::INFINITY;
    let mut max_x = f64::NEG_INFINITY;
    let mut min_y = f64::INFINITY;
    let mut max_y = f64::NEG_INFINITY;
    for c in curves {
        for &x in c.curve.x() {
            min_x = min_x.min(x);
            max_x = max_x.max(x);
        }
        for &y in c.curve.y() {
            min_y = min_y.min(y);
            max_y = max_y.max(y);
        }
    }
    let cx = 0.5 * (min_x + max_x);
    let cy = 0.5 * (min_y + max_y);
    let hx = (0.5 * (max_x - min_x)).max(1e-9);
    let hy = (0.5 * (max_y - min_y)).max(1e-9);
    let half = size / 2.0;
    let scale = 0.95 * (half / hx).min(half / hy);

    let mut out = String::new();
    write!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#,
    )
    .expect("string write");
    write!(
        out,
        r##"<rect width="{size}" height="{size}" fill="#ffffff"/>"##
    )
    .expect("string write");
    for c in curves {
        let dash = if c.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        write!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{} points=""#,
            c.stroke, dash
        )
        .expect("string write");
        let n = c.curve.x().len();
        for i in 0..=n {
            let j = i % n;
            // y grows upward in the plane, downward in SVG.
            let px = half + (c.curve.x()[j] - cx) * scale;
            let py = half - (c.curve.y()[j] - cy) * scale;
            if i > 0 {
                out.push(' ');
            }
            write!(out, "{px:.3},{py:.3}").expect("string write");
        }
        out.push_str(r#""/>"#);
    }
    out.push_str("</svg>");
    out
}

/// Render and write one frame; returns the file path.
pub fn write_frame_svg(dir: &Path, t: f64, curves: &[SvgCurve], size: f64) -> Result<PathBuf> {
    let path = dir.join(frame_filename(t));
    std::fs::write(&path, render_svg(curves, size))?;
    Ok(path)
}
