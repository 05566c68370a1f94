//! `sweep`: ratios over a parameter grid read from TOML.
//!
//! ```toml
//! seed = 0
//! repetitions = 1
//!
//! [generator]
//! kind = "thm1"
//! dimension = 1
//! D = 2.0
//!
//! [grid]
//! T = [100, 400, 1600]
//! delta = [0.0, 0.5]
//!
//! [solver]
//! iterations = 50000
//! grid_step = 1e-3
//! ```
//!
//! Cells run in parallel; rows come out in grid order. Every axis among `T`,
//! `r` and `cycles` with at least three values adds one `growth_exponent` row
//! per combination of the other parameters.

use std::path::PathBuf;

use clap::ValueEnum;
use mobsrv_core::algorithms::Policy;
use mobsrv_core::analysis::growth_exponent;
use mobsrv_core::offline::{Coordinates, SolverSettings};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::commands::{build_instance, measure_ratio};
use crate::{
    resolve_out, write_output, CliError, CliResult, GenArgs, Generator, ModeArg, SweepArgs,
    VariantArg,
};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    pub generator: GeneratorSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub policy: PolicySpec,
    #[serde(default)]
    pub solver: SolverSpec,
    pub output: Option<PathBuf>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: String,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(rename = "D", default = "default_d")]
    pub move_cost: f64,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_mode")]
    pub mode: String,
    pub against: Option<String>,
    #[serde(default)]
    pub against_delta: f64,
    #[serde(default = "default_eps")]
    pub eps: f64,
    pub m_a: Option<f64>,
    #[serde(default = "one")]
    pub r_min: usize,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
    /// thm2 catch-up sizing; defaults to the cell's delta.
    pub thm2_delta: Option<f64>,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default)]
    pub collapsed: bool,
    #[serde(default = "default_drift")]
    pub drift: f64,
    #[serde(default = "default_spread")]
    pub spread: f64,
}

fn default_m() -> f64 {
    1.0
}
fn default_d() -> f64 {
    2.0
}
fn default_dimension() -> usize {
    2
}
fn default_mode() -> String {
    "worst".into()
}
fn default_eps() -> f64 {
    0.5
}
fn default_r_max() -> usize {
    4
}
fn default_variant() -> String {
    "standard".into()
}
fn default_drift() -> f64 {
    1.5
}
fn default_spread() -> f64 {
    2.0
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(rename = "T", default)]
    pub steps: Vec<usize>,
    #[serde(default)]
    pub delta: Vec<f64>,
    #[serde(default)]
    pub r: Vec<usize>,
    #[serde(default)]
    pub x: Vec<f64>,
    #[serde(default)]
    pub cycles: Vec<usize>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub name: Option<String>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub coordinates: Coordinates,
    /// 1D oracle grid step; `0` disables the oracle.
    #[serde(default = "default_grid_step")]
    pub grid_step: f64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec {
            iterations: default_iterations(),
            tol: default_tol(),
            coordinates: Coordinates::default(),
            grid_step: default_grid_step(),
        }
    }
}

fn default_iterations() -> usize {
    50_000
}
fn default_tol() -> f64 {
    1e-3
}
fn default_grid_step() -> f64 {
    1e-3
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub row: &'static str,
    pub generator: String,
    pub policy: String,
    pub axis: Option<&'static str>,
    #[serde(rename = "T")]
    pub steps: Option<usize>,
    pub cycles: Option<usize>,
    pub r: Option<usize>,
    pub x: Option<f64>,
    pub delta: f64,
    pub rep: Option<usize>,
    pub seed: Option<u64>,
    pub instance_steps: Option<usize>,
    pub alg_cost: Option<f64>,
    pub opt_cost: Option<f64>,
    pub ratio: Option<f64>,
    pub converged: Option<bool>,
    pub certified_gap: Option<f64>,
    pub exponent: Option<f64>,
}

/// One grid point: an index per axis plus the repetition.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Cell {
    steps: usize,
    cycles: usize,
    r: usize,
    x: usize,
    delta: usize,
    rep: usize,
}

fn parse_enum<E: ValueEnum>(value: &str, field: &str) -> CliResult<E> {
    E::from_str(value, true).map_err(|_| {
        let options: Vec<String> = E::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value().map(|p| p.get_name().to_string()))
            .collect();
        CliError::Validation(format!(
            "field `{field}`: unknown value `{value}`, expected one of {}",
            options.join(", ")
        ))
    })
}

pub fn parse_spec(text: &str) -> CliResult<SweepSpec> {
    let spec: SweepSpec =
        toml::from_str(text).map_err(|e| CliError::Validation(format!("sweep spec: {e}")))?;
    parse_enum::<Generator>(&spec.generator.kind, "generator.kind")?;
    parse_enum::<ModeArg>(&spec.generator.mode, "generator.mode")?;
    parse_enum::<VariantArg>(&spec.generator.variant, "generator.variant")?;
    if let Some(name) = &spec.policy.name {
        name.parse::<Policy>()
            .map_err(|e| CliError::Validation(format!("field `policy.name`: {e}")))?;
    }
    if let Some(name) = &spec.generator.against {
        name.parse::<Policy>()
            .map_err(|e| CliError::Validation(format!("field `generator.against`: {e}")))?;
    }
    if spec.repetitions == 0 {
        return Err(CliError::Validation(
            "field `repetitions`: must be at least 1".into(),
        ));
    }
    Ok(spec)
}

struct Axes {
    steps: Vec<Option<usize>>,
    cycles: Vec<Option<usize>>,
    r: Vec<Option<usize>>,
    x: Vec<Option<f64>>,
    delta: Vec<f64>,
}

fn axis<T: Copy>(values: &[T]) -> Vec<Option<T>> {
    if values.is_empty() {
        vec![None]
    } else {
        values.iter().copied().map(Some).collect()
    }
}

impl Axes {
    fn new(grid: &GridSpec) -> Axes {
        Axes {
            steps: axis(&grid.steps),
            cycles: axis(&grid.cycles),
            r: axis(&grid.r),
            x: axis(&grid.x),
            delta: if grid.delta.is_empty() {
                vec![0.5]
            } else {
                grid.delta.clone()
            },
        }
    }

    fn cells(&self, reps: usize) -> Vec<Cell> {
        let mut out = Vec::new();
        for steps in 0..self.steps.len() {
            for cycles in 0..self.cycles.len() {
                for r in 0..self.r.len() {
                    for x in 0..self.x.len() {
                        for delta in 0..self.delta.len() {
                            for rep in 0..reps {
                                out.push(Cell {
                                    steps,
                                    cycles,
                                    r,
                                    x,
                                    delta,
                                    rep,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

fn gen_args(spec: &SweepSpec, axes: &Axes, cell: &Cell) -> CliResult<GenArgs> {
    let g = &spec.generator;
    let delta = axes.delta[cell.delta];
    Ok(GenArgs {
        generator: parse_enum(&g.kind, "generator.kind")?,
        steps: axes.steps[cell.steps].unwrap_or(100),
        x: axes.x[cell.x],
        cycles: axes.cycles[cell.cycles].unwrap_or(10),
        r: axes.r[cell.r].unwrap_or(8),
        r_min: g.r_min,
        r_max: g.r_max,
        m: g.m,
        move_cost: g.move_cost,
        delta: g.thm2_delta.unwrap_or(delta),
        eps: g.eps,
        m_a: g.m_a,
        dimension: g.dimension,
        seed: spec.seed + cell.rep as u64,
        mode: parse_enum(&g.mode, "generator.mode")?,
        against: g.against.as_deref().map(|s| s.parse()).transpose()?,
        against_delta: g.against_delta,
        variant: parse_enum(&g.variant, "generator.variant")?,
        collapsed: g.collapsed,
        drift: g.drift,
        spread: g.spread,
        out: None,
    })
}

fn run_cell(spec: &SweepSpec, axes: &Axes, cell: &Cell, policy: Policy) -> CliResult<SweepRow> {
    let args = gen_args(spec, axes, cell)?;
    let instance = build_instance(&args)?;
    let settings = SolverSettings {
        iterations: spec.solver.iterations,
        tol: spec.solver.tol,
        coordinates: spec.solver.coordinates,
        ..SolverSettings::default()
    };
    let grid = (spec.solver.grid_step > 0.0).then_some(spec.solver.grid_step);
    let delta = axes.delta[cell.delta];
    let (report, _) = measure_ratio(&instance, policy, delta, &settings, grid)?;
    Ok(SweepRow {
        row: "cell",
        generator: args.generator.name().into(),
        policy: policy.name().into(),
        axis: None,
        steps: axes.steps[cell.steps],
        cycles: axes.cycles[cell.cycles],
        r: axes.r[cell.r],
        x: axes.x[cell.x],
        delta,
        rep: Some(cell.rep),
        seed: Some(args.seed),
        instance_steps: Some(instance.len()),
        alg_cost: Some(report.alg_cost),
        opt_cost: Some(report.opt_cost),
        ratio: Some(report.ratio.value()),
        converged: Some(report.solver.converged),
        certified_gap: report.solver.certified_gap,
        exponent: None,
    })
}

/// Growth exponent rows along `name`, one per combination of the other indices.
fn growth_rows(
    name: &'static str,
    scales: &[f64],
    cells: &[Cell],
    rows: &[SweepRow],
    pick: impl Fn(&Cell) -> usize,
    blank: impl Fn(&mut SweepRow),
) -> Vec<SweepRow> {
    if scales.len() < 3 {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut seen: Vec<Cell> = Vec::new();
    for (i, cell) in cells.iter().enumerate() {
        let mut key = *cell;
        match name {
            "T" => key.steps = 0,
            "r" => key.r = 0,
            _ => key.cycles = 0,
        }
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let series: Vec<(f64, f64)> = cells
            .iter()
            .zip(rows)
            .filter(|(c, _)| {
                let mut k = **c;
                match name {
                    "T" => k.steps = 0,
                    "r" => k.r = 0,
                    _ => k.cycles = 0,
                }
                k == key
            })
            .map(|(c, row)| (scales[pick(c)], row.ratio.unwrap_or(f64::NAN)))
            .collect();
        let mut row = rows[i].clone();
        row.row = "growth_exponent";
        row.axis = Some(name);
        blank(&mut row);
        row.instance_steps = None;
        row.alg_cost = None;
        row.opt_cost = None;
        row.ratio = None;
        row.converged = None;
        row.certified_gap = None;
        row.exponent = growth_exponent(&series).ok();
        out.push(row);
    }
    out
}

/// Runs every cell of the sweep and returns the rows in grid order, growth rows last.
pub fn run_sweep(spec: &SweepSpec) -> CliResult<Vec<SweepRow>> {
    let axes = Axes::new(&spec.grid);
    let cells = axes.cells(spec.repetitions);
    let kind: Generator = parse_enum(&spec.generator.kind, "generator.kind")?;
    let policy = match &spec.policy.name {
        Some(name) => name.parse()?,
        None => match kind {
            Generator::MovingClient | Generator::RandomAgent => Policy::MtcMovingClient,
            _ => Policy::Mtc,
        },
    };
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|cell| run_cell(spec, &axes, cell, policy))
        .collect::<CliResult<_>>()?;

    let mut out = rows.clone();
    let as_f64 =
        |v: &[Option<usize>]| -> Vec<f64> { v.iter().map(|x| x.unwrap_or(0) as f64).collect() };
    if spec.grid.steps.len() >= 3 {
        out.extend(growth_rows(
            "T",
            &as_f64(&axes.steps),
            &cells,
            &rows,
            |c| c.steps,
            |r| r.steps = None,
        ));
    }
    if spec.grid.r.len() >= 3 {
        out.extend(growth_rows(
            "r",
            &as_f64(&axes.r),
            &cells,
            &rows,
            |c| c.r,
            |r| r.r = None,
        ));
    }
    if spec.grid.cycles.len() >= 3 {
        out.extend(growth_rows(
            "cycles",
            &as_f64(&axes.cycles),
            &cells,
            &rows,
            |c| c.cycles,
            |r| r.cycles = None,
        ));
    }
    for row in out.iter_mut().filter(|r| r.row == "growth_exponent") {
        row.rep = None;
        row.seed = None;
    }
    Ok(out)
}

pub fn rows_to_csv(rows: &[SweepRow]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Validation(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

pub fn cmd_sweep(a: &SweepArgs) -> CliResult<String> {
    let text = std::fs::read_to_string(&a.spec)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", a.spec.display())))?;
    let spec = parse_spec(&text)?;
    let rows = run_sweep(&spec)?;
    let stem = a
        .spec
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "sweep".into());
    let explicit = a.out.as_deref().or(spec.output.as_deref());
    let path = resolve_out(explicit, &format!("{stem}.csv"));
    write_output(&path, &rows_to_csv(&rows)?)?;
    let exponents: Vec<String> = rows
        .iter()
        .filter(|r| r.row == "growth_exponent")
        .map(|r| {
            format!(
                "{}@delta={}:{}",
                r.axis.unwrap_or(""),
                r.delta,
                r.exponent.map_or("n/a".to_string(), |e| format!("{e:.4}"))
            )
        })
        .collect();
    Ok(format!(
        "cells={} growth=[{}] wrote {}",
        rows.iter().filter(|r| r.row == "cell").count(),
        exponents.join(" "),
        path.display()
    ))
}
