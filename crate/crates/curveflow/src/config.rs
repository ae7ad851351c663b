//! TOML run configuration for the `curveflow` binary.
//!
//! A configuration names the shared grid, the two curves, and the solver
//! settings. Curves are given in closed form as trigonometric support
//! functions; the initial curve may instead be a column of radius samples
//! from a CSV file. Example:
//!
//! ```toml
//! [grid]
//! n = 512
//! m = 3
//!
//! [target]
//! constant = 10.0
//! harmonics = [[2, 10.0, 10.0]]   # [index, sin, cos]
//!
//! [initial]
//! constant = 11.6720
//! harmonics = [[4, 9.0, 9.0]]
//! match_target_energy = true
//!
//! [solver]
//! dt = 1e-4
//! t_end = 4.0
//! snapshot_times = [0.0, 0.1, 1.0, 4.0]
//! ```
//!
//! With `match_target_energy = true` the initial constant is re-solved so
//! both curves carry exactly the same elastic energy; the flow conserves
//! that energy, so this is the setting under which the initial curve can
//! relax all the way onto the target rather than onto a parallel curve.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analysis::limit_constant;
use crate::error::{Error, Result};
use crate::geometry::{
    eval_trig_support, radius_from_support, summarize, Harmonic, RadiusProfile, TangentAngleGrid,
    TrigSupportSpec,
};
use crate::solver::{FlowProblem, SolverConfig};

/// Parsed, unresolved configuration file.
///
/// Serializing and re-parsing a parsed configuration yields an equal value,
/// so files can be regenerated from memory without drift.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub grid: GridSection,
    pub target: CurveSection,
    pub initial: CurveSection,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<TableSection>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(default = "default_n")]
    pub n: usize,
    pub m: u32,
}

fn default_n() -> usize {
    512
}

/// One curve: a trigonometric support function, or (initial curve only) a
/// file of radius samples.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSection {
    /// Winding number; must agree with the grid when present. Useful to make
    /// a configuration self-documenting, and to catch mismatched curve pairs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    /// `[index, sin coefficient, cos coefficient]` triples.
    #[serde(default)]
    pub harmonics: Vec<(u32, f64, f64)>,
    /// Radius samples, one per line, exactly `n` of them.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values_csv: Option<PathBuf>,
    /// Re-solve `constant` so this curve's elastic energy equals the
    /// target's.
    #[serde(default)]
    pub match_target_energy: bool,
}

/// Which artifacts a simulation writes, and how frames look.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub metrics: bool,
    pub snapshots: bool,
    pub svg: bool,
    /// Frame canvas edge in pixels.
    pub svg_size: f64,
    /// Stroke color of the evolving curve; the target is always dashed gray.
    pub stroke: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            metrics: true,
            snapshots: true,
            svg: true,
            svg_size: 400.0,
            stroke: "#000000".to_string(),
        }
    }
}

/// Reference data for the `table` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSection {
    /// CSV of expected rows, resolved relative to the configuration file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<PathBuf>,
    /// Largest allowed relative deviation; 0.5% when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub dt: Option<f64>,
    pub t_end: Option<f64>,
}

/// A configuration turned into runnable objects.
#[derive(Debug)]
pub struct ResolvedSimulation {
    pub problem: FlowProblem,
    pub solver: SolverConfig,
    pub output: OutputSection,
    /// Reference table path (absolute) and tolerance, when configured.
    pub table_reference: Option<PathBuf>,
    pub table_tolerance: f64,
    /// The re-solved initial constant when energy matching was requested.
    pub matched_constant: Option<f64>,
}

/// Read and parse a configuration file.
pub fn parse_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Invalid(format!("cannot read configuration {}: {e}", path.display()))
    })?;
    toml::from_str(&text)
        .map_err(|e| Error::Invalid(format!("cannot parse {}: {e}", path.display())))
}

/// Read, parse and resolve in one go; paths inside the file are taken
/// relative to its directory.
pub fn load(path: &Path, overrides: &Overrides) -> Result<ResolvedSimulation> {
    let config = parse_config(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    resolve(&config, base, overrides)
}

/// Turn a parsed configuration into a validated problem and solver setup.
pub fn resolve(
    config: &SimulationConfig,
    base_dir: &Path,
    overrides: &Overrides,
) -> Result<ResolvedSimulation> {
    let n = overrides.n.unwrap_or(config.grid.n);
    let grid = TangentAngleGrid::new(n, config.grid.m)?;
    check_winding("target", &config.target, grid.m())?;
    check_winding("initial", &config.initial, grid.m())?;
    if !(config.output.svg_size > 0.0 && config.output.svg_size.is_finite()) {
        return Err(Error::Invalid(format!(
            "svg_size must be positive, got {}",
            config.output.svg_size
        )));
    }

    if config.target.values_csv.is_some() {
        return Err(Error::Invalid(
            "the target curve must be given in closed form (constant + harmonics)".into(),
        ));
    }
    if config.target.match_target_energy {
        return Err(Error::Invalid(
            "match_target_energy applies to the initial curve only".into(),
        ));
    }
    let target_spec = trig_spec("target", &config.target)?;
    let target_support = eval_trig_support(&target_spec, grid)?;
    let target_radius = radius_from_support(&target_support);

    let (initial, matched_constant) = if let Some(csv) = &config.initial.values_csv {
        if config.initial.constant.is_some() || !config.initial.harmonics.is_empty() {
            return Err(Error::Invalid(
                "initial curve: give either values_csv or a closed form, not both".into(),
            ));
        }
        if config.initial.match_target_energy {
            return Err(Error::Invalid(
                "match_target_energy requires a closed-form initial curve".into(),
            ));
        }
        let path = join(base_dir, csv);
        (read_radius_samples(&path, grid)?, None)
    } else {
        let mut spec = trig_spec("initial", &config.initial)?;
        let matched = if config.initial.match_target_energy {
            let desired = summarize(&target_radius)?.elastic_energy;
            // The oscillating part of ρ is fixed by the harmonics; solving
            // E(constant) = Ẽ is the same one-dimensional search that
            // identifies the flow's limit constant.
            let osc_spec = TrigSupportSpec::new(0.0, spec.harmonics.clone());
            let osc = radius_from_support(&eval_trig_support(&osc_spec, grid)?);
            let c = limit_constant(&osc, desired)?;
            spec.constant = c;
            Some(c)
        } else {
            None
        };
        (
            radius_from_support(&eval_trig_support(&spec, grid)?),
            matched,
        )
    };

    let problem = FlowProblem::new(initial, target_support)?;

    let mut solver = config.solver.clone();
    if let Some(dt) = overrides.dt {
        solver.dt = dt;
    }
    if let Some(t_end) = overrides.t_end {
        // Shortening the horizon silently orphans any snapshot requests
        // beyond it, so drop those rather than reject the derived config.
        solver.t_end = t_end;
        solver.snapshot_times.retain(|&s| s <= t_end);
    }

    let (table_reference, table_tolerance) = match &config.table {
        Some(t) => (
            t.reference.as_ref().map(|p| join(base_dir, p)),
            t.tolerance.unwrap_or(0.005),
        ),
        None => (None, 0.005),
    };

    Ok(ResolvedSimulation {
        problem,
        solver,
        output: config.output.clone(),
        table_reference,
        table_tolerance,
        matched_constant,
    })
}

fn check_winding(which: &str, section: &CurveSection, grid_m: u32) -> Result<()> {
    if let Some(m) = section.m {
        if m != grid_m {
            return Err(Error::Invalid(format!(
                "{which} curve declares winding number {m} but the grid has winding {grid_m}; \
                 the flow only connects curves of equal winding"
            )));
        }
    }
    Ok(())
}

fn trig_spec(which: &str, section: &CurveSection) -> Result<TrigSupportSpec> {
    if section.constant.is_none() && section.harmonics.is_empty() {
        return Err(Error::Invalid(format!(
            "{which} curve needs a constant and/or harmonics"
        )));
    }
    let harmonics = section
        .harmonics
        .iter()
        .map(|&(k, sin, cos)| Harmonic { k, sin, cos })
        .collect();
    Ok(TrigSupportSpec::new(
        section.constant.unwrap_or(0.0),
        harmonics,
    ))
}

fn join(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Read one radius sample per line; blank lines and `#` comments allowed.
fn read_radius_samples(path: &Path, grid: TangentAngleGrid) -> Result<RadiusProfile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| {
            Error::Invalid(format!(
                "{}:{}: expected one number per line, got {line:?}",
                path.display(),
                lineno + 1
            ))
        })?;
        values.push(v);
    }
    if values.len() != grid.n() {
        return Err(Error::Invalid(format!(
            "{} holds {} samples but the grid needs {}",
            path.display(),
            values.len(),
            grid.n()
        )));
    }
    RadiusProfile::from_values(grid, values)
}
