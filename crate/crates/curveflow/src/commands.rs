//! Implementations of the CLI subcommands.
//!
//! Each command loads a TOML run configuration, drives the solver, prints a
//! human-readable summary to stdout and (when an output directory is given)
//! writes its artifacts there. Tolerance failures surface as
//! [`Error::Tolerance`] so the binary can exit with a distinct status code.

use std::path::Path;

use crate::analysis::{build_report, curve_distance_mod_translation, limit_constant, sweep_bounds};
use crate::config::{load, Overrides, ResolvedSimulation};
use crate::error::{Error, Result};
use crate::geometry::{
    curve_from_support, rescale_to_match_energy, summarize, support_from_radius, PlaneCurve,
    RadiusProfile, SupportProfile,
};
use crate::io::{
    compare_tables, format_table, read_reference_table, snapshot_filename, write_frame_svg,
    write_metrics_csv, write_snapshot_csv, write_table_csv, SvgCurve, TableRow,
};
use crate::solver::{run, FlowProblem, RunResult, Scheme};

fn scheme_name(scheme: Scheme) -> &'static str {
    match scheme {
        Scheme::Etd2 => "etd2",
        Scheme::ImexCn => "imex_cn",
        Scheme::Rk4Explicit => "rk4_explicit",
    }
}

fn describe(resolved: &ResolvedSimulation) -> Result<()> {
    let grid = resolved.problem.grid();
    println!(
        "grid n = {}, winding m = {}; scheme {} with dt = {}, t_end = {}",
        grid.n(),
        grid.m(),
        scheme_name(resolved.solver.scheme),
        resolved.solver.dt,
        resolved.solver.t_end
    );
    if let Some(c) = resolved.matched_constant {
        println!("initial constant solved as {c:.12} to match the target energy");
    }
    let initial = summarize(resolved.problem.initial())?;
    let target = summarize(resolved.problem.target_radius())?;
    println!(
        "energies: initial {:.12}, target {:.12}",
        initial.elastic_energy, target.elastic_energy
    );
    Ok(())
}

/// The state's support gauge and curve, positioned consistently with the
/// target so overlaid frames share a coordinate system.
fn curve_of(problem: &FlowProblem, rho: &RadiusProfile) -> Result<(SupportProfile, PlaneCurve)> {
    let support = support_from_radius(rho, problem.target_support())?;
    let curve = curve_from_support(&support);
    Ok((support, curve))
}

/// Write metrics, snapshot CSVs and SVG frames per the output flags.
fn write_artifacts(resolved: &ResolvedSimulation, result: &RunResult, out: &Path) -> Result<usize> {
    std::fs::create_dir_all(out)?;
    let mut written = 0;
    if resolved.output.metrics {
        write_metrics_csv(&out.join("metrics.csv"), &result.diagnostics)?;
        written += 1;
    }
    if !(resolved.output.snapshots || resolved.output.svg) {
        return Ok(written);
    }
    let target_curve = curve_from_support(resolved.problem.target_support());
    for state in &result.snapshots {
        let (support, curve) = curve_of(&resolved.problem, &state.rho)?;
        if resolved.output.snapshots {
            write_snapshot_csv(
                &out.join(snapshot_filename(state.t)),
                &state.rho,
                &support,
                &curve,
            )?;
            written += 1;
        }
        if resolved.output.svg {
            let layers = [
                SvgCurve {
                    curve: &target_curve,
                    stroke: "#999999",
                    dashed: true,
                },
                SvgCurve {
                    curve: &curve,
                    stroke: &resolved.output.stroke,
                    dashed: false,
                },
            ];
            write_frame_svg(out, state.t, &layers, resolved.output.svg_size)?;
            written += 1;
        }
    }
    Ok(written)
}

/// Run the flow and report (and optionally write) its trajectory.
pub fn cmd_simulate(config: &Path, out: Option<&Path>, overrides: &Overrides) -> Result<()> {
    let resolved = load(config, overrides)?;
    describe(&resolved)?;
    let result = run(&resolved.problem, &resolved.solver)?;
    let first = &result.diagnostics[0];
    let last = result.diagnostics.last().expect("run produces diagnostics");
    println!(
        "ran {} steps; final t = {:.6}, f = {:+.6e}, sup|rho - rho_target| = {:.6e}",
        result.diagnostics.len() - 1,
        last.t,
        last.f_value,
        last.sup_u
    );
    println!(
        "energy drift |E(t_end) - E(0)| = {:.3e}, curvature ratio span [{:.4}, {:.4}]",
        (last.energy - first.energy).abs(),
        last.rho_min,
        last.rho_max
    );
    if let Some(out) = out {
        let written = write_artifacts(&resolved, &result, out)?;
        println!("wrote {written} files to {}", out.display());
    }
    Ok(())
}

/// Summary rows at the snapshot times, plus the `t → ∞` limit row.
pub fn table_rows(problem: &FlowProblem, result: &RunResult) -> Result<Vec<TableRow>> {
    let period = problem.grid().period();
    let mut rows = Vec::with_capacity(result.snapshots.len() + 1);
    for state in &result.snapshots {
        let s = summarize(&state.rho)?;
        rows.push(TableRow {
            t: Some(state.t),
            scaled_length: s.length / period,
            rho_min: s.rho_min,
            rho_max: s.rho_max,
            energy: s.elastic_energy,
        });
    }
    // The flow converges to the target shifted by the constant that restores
    // the conserved energy.
    let energy0 = summarize(problem.initial())?.elastic_energy;
    let c0 = limit_constant(problem.target_radius(), energy0)?;
    let limit_values: Vec<f64> = problem
        .target_radius()
        .values()
        .iter()
        .map(|v| v + c0)
        .collect();
    let limit = RadiusProfile::from_values(problem.grid(), limit_values)?;
    let s = summarize(&limit)?;
    rows.push(TableRow {
        t: None,
        scaled_length: s.length / period,
        rho_min: s.rho_min,
        rho_max: s.rho_max,
        energy: s.elastic_energy,
    });
    Ok(rows)
}

/// Print the shape summary table and check it against a reference if one is
/// configured.
pub fn cmd_table(
    config: &Path,
    out: Option<&Path>,
    tolerance: Option<f64>,
    overrides: &Overrides,
) -> Result<()> {
    let resolved = load(config, overrides)?;
    if resolved.solver.snapshot_times.is_empty() {
        return Err(Error::Invalid(
            "the table command needs snapshot_times in the [solver] section".into(),
        ));
    }
    describe(&resolved)?;
    let result = run(&resolved.problem, &resolved.solver)?;
    let rows = table_rows(&resolved.problem, &result)?;
    print!("{}", format_table(&rows));
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        write_table_csv(&out.join("table.csv"), &rows)?;
        println!("wrote {}", out.join("table.csv").display());
    }
    if let Some(reference) = &resolved.table_reference {
        let expected = read_reference_table(reference)?;
        let deviation = compare_tables(&rows, &expected)?;
        let tol = tolerance.unwrap_or(resolved.table_tolerance);
        println!(
            "largest relative deviation from {}: {deviation:.3e} (tolerance {tol:.1e})",
            reference.display()
        );
        if deviation > tol {
            return Err(Error::Tolerance(format!(
                "table deviates from the reference by {deviation:.3e} (tolerance {tol:.1e})"
            )));
        }
    } else if tolerance.is_some() {
        println!("note: --tolerance given but the configuration names no reference table");
    }
    Ok(())
}

/// Replace the configured target by the energy-matched circle cover, keeping
/// the initial curve; returns the new problem and the circle radius.
pub fn circle_cover_problem(resolved: &ResolvedSimulation) -> Result<(FlowProblem, f64)> {
    let grid = resolved.problem.grid();
    let energy0 = summarize(resolved.problem.initial())?.elastic_energy;
    let unit_cover = RadiusProfile::from_values(grid, vec![1.0; grid.n()])?;
    let (_, radius) = rescale_to_match_energy(&unit_cover, energy0)?;
    let support = SupportProfile::from_values(grid, vec![radius; grid.n()])?;
    let problem = FlowProblem::new(resolved.problem.initial().clone(), support)?;
    Ok((problem, radius))
}

/// Deform the initial curve onto the m-fold circle cover with its energy.
pub fn cmd_homotopy(config: &Path, out: Option<&Path>, overrides: &Overrides) -> Result<()> {
    let mut resolved = load(config, overrides)?;
    let (problem, radius) = circle_cover_problem(&resolved)?;
    resolved.problem = problem;
    println!(
        "target replaced by the {}-fold circle cover of radius {radius:.12}",
        resolved.problem.grid().m()
    );
    describe(&resolved)?;
    let result = run(&resolved.problem, &resolved.solver)?;
    let last = result.diagnostics.last().expect("run produces diagnostics");
    let (_, final_curve) = curve_of(&resolved.problem, &result.final_state.rho)?;
    let circle = curve_from_support(resolved.problem.target_support());
    let distance = curve_distance_mod_translation(&final_curve, &circle)?;
    println!(
        "after t = {:.4}: sup|rho - radius| = {:.6e}, curve distance to the cover = {:.6e}",
        last.t, last.sup_u, distance
    );
    if let Some(out) = out {
        let written = write_artifacts(&resolved, &result, out)?;
        println!("wrote {written} files to {}", out.display());
    }
    Ok(())
}

/// Re-run the flow and check every a priori bound along the trajectory.
pub fn cmd_verify(config: &Path, overrides: &Overrides) -> Result<()> {
    let resolved = load(config, overrides)?;
    describe(&resolved)?;
    let result = run(&resolved.problem, &resolved.solver)?;
    let checks = sweep_bounds(&resolved.problem, &result.diagnostics)?;
    let mut total = 0;
    for check in &checks {
        let status = if check.violations == 0 {
            "ok"
        } else {
            "VIOLATED"
        };
        println!(
            "{:<18} worst margin {:+.3e}, {} violations  {status}",
            check.name, check.worst_margin, check.violations
        );
        total += check.violations;
    }
    if total > 0 {
        return Err(Error::Tolerance(format!(
            "{total} bound violations across {} steps",
            result.diagnostics.len() - 1
        )));
    }
    println!(
        "all bounds hold across {} steps",
        result.diagnostics.len() - 1
    );
    Ok(())
}

/// Run the flow and report the convergence picture; `--out` also writes
/// `report.json`.
pub fn cmd_analyze(config: &Path, out: Option<&Path>, overrides: &Overrides) -> Result<()> {
    let resolved = load(config, overrides)?;
    describe(&resolved)?;
    let result = run(&resolved.problem, &resolved.solver)?;
    let report = build_report(&resolved.problem, &result, None)?;
    let grid = resolved.problem.grid();
    let slowest = -(1.0 + 1.0 / (grid.m() as f64 * grid.m() as f64));
    println!(
        "limit constant c0 = {:+.12e} (observed mean shift {:+.12e})",
        report.limit_constant, report.limit_constant_observed
    );
    println!(
        "at t = {:.4}: f = {:+.3e}, sup|u| = {:.3e}, sup|u_theta| = {:.3e}, curve distance = {:.3e}",
        report.final_time,
        report.final_f,
        report.final_sup_u,
        report.final_sup_u_theta,
        report.final_curve_distance
    );
    println!(
        "relative energy drift over the run: {:.3e}",
        report.energy_drift
    );
    println!(
        "decay of sup|u_theta|: rate {:.6} fitted on t in [{:.3}, {:.3}] ({} samples); slowest admissible rate {slowest:.6}",
        report.decay.slope, report.decay.t_begin, report.decay.t_end, report.decay.samples
    );
    println!(
        "curvature ratio: observed max {:.6}, a priori bound {:.3e} (M1 = {:.6})",
        report.harnack.observed_max_ratio, report.harnack.bound, report.harnack.m1
    );
    let violations: usize = report.bounds.iter().map(|b| b.violations).sum();
    println!(
        "bound sweep: {violations} violations across {} checks",
        report.bounds.len()
    );
    if let Some(out) = out {
        std::fs::create_dir_all(out)?;
        let path = out.join("report.json");
        let json = serde_json::to_string_pretty(&report)
            .map_err(|e| Error::Invalid(format!("cannot serialize the report: {e}")))?;
        std::fs::write(&path, json)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
