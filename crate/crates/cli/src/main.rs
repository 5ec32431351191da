mod args;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde::Serialize;
use thiserror::Error;

use args::{Check, Cli, Command, EscapeArgs, FieldArgs, PlanArgs, RenderArgs, SweepArgs, VerifyArgs};
use fastescape::builtins::REGISTRY;
use fastescape::field::{estimate_bounds, perpendicular, DEFAULT_BOUNDS_SAMPLES};
use fastescape::flow::{bidirectional_escape_length_with, default_max_length, escape_length_with, EscapeStatus, IntegratorConfig};
use fastescape::planner::{plan_escape_with, PlanMode, PlanOptions};
use fastescape::report::{fmt_num, reports_csv, sweep, sweep_csv, to_json};
use fastescape::stream::{compute_stream_function, extract_level_set};
use fastescape::svg::SvgScene;
use fastescape::verify::{
    verify_coarea, verify_irrotational_bound, verify_theorem1, verify_theorem2, verify_theorem3, verify_vn_scaling, Theorem2Options, TheoremReport,
    Verdict,
};
use fastescape::{Disk, Error};

/// Above this wavenumber the default step no longer resolves the oscillation.
const WAVENUMBER_WARN: f64 = 60.0;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("cannot write {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => 2,
            CliError::Core(e) => match e {
                Error::HypothesisViolated(_) | Error::NotIncompressible { .. } => 3,
                e if e.is_numerical() => 4,
                _ => 2,
            },
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    Ok,
    Fail,
    Inconclusive,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Ok => 0,
            Outcome::Fail => 1,
            Outcome::Inconclusive => 5,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Escape(a) => cmd_escape(&a),
        Command::Plan(a) => cmd_plan(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Render(a) => cmd_render(&a),
        Command::ListFields => cmd_list_fields(),
    };
    match result {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// JSON to stdout, and to `out` when given.
fn emit_json<T: Serialize>(value: &T, out: Option<&PathBuf>) -> CliResult<()> {
    let text = to_json(value)?;
    print!("{text}");
    if let Some(p) = out {
        write_file(p, &text)?;
    }
    Ok(())
}

fn integrator_for(field: &FieldArgs) -> IntegratorConfig {
    match field.wavenumber() {
        Some(n) if n > WAVENUMBER_WARN => {
            eprintln!(
                "warning: N = {n} > {WAVENUMBER_WARN}; the step cap is reduced to 0.1/N = {:.3e} to resolve the oscillation",
                0.1 / n
            );
            IntegratorConfig::for_wavenumber(n)
        }
        _ => IntegratorConfig::default(),
    }
}

fn budget(f: &fastescape::PlanarField, disk: &Disk, given: Option<f64>) -> CliResult<f64> {
    if let Some(l) = given {
        return Ok(l);
    }
    let b = estimate_bounds(f, disk, DEFAULT_BOUNDS_SAMPLES)?;
    let known = (!b.vanishing).then_some(&b);
    Ok(default_max_length(known) * disk.radius)
}

fn cmd_escape(a: &EscapeArgs) -> CliResult<Outcome> {
    let f = a.field.resolve()?;
    let cfg = integrator_for(&a.field);
    let disk = Disk::new(a.geometry.start, a.geometry.radius)?;
    let max_length = budget(&f, &disk, a.max_length)?;
    let r = if a.bidirectional {
        bidirectional_escape_length_with(&f, disk.center, disk.radius, max_length, &cfg)?
    } else {
        escape_length_with(&f, disk.center, disk.radius, max_length, &cfg)?
    };
    emit_json(&r, a.output.out.as_ref())?;
    if let Some(path) = &a.output.svg {
        let mut scene = SvgScene::new(disk);
        scene.curve(r.curve.points(), "flow", "#c0392b");
        write_file(path, &scene.render())?;
    }
    eprintln!("{}: start {}, status {:?}, length {}", a.field.label(), disk.center, r.status, fmt_num(r.escape_length));
    match r.status {
        EscapeStatus::Escaped => Ok(Outcome::Ok),
        EscapeStatus::BudgetExhausted => Ok(Outcome::Inconclusive),
        EscapeStatus::HypothesisViolated => Err(Error::HypothesisViolated(format!("field vanishes at {}", disk.center)).into()),
    }
}

fn plan_options(field: &FieldArgs, radius: f64, h: f64) -> PlanOptions {
    PlanOptions { radius, h, integrator: integrator_for(field), ..PlanOptions::default() }
}

fn cmd_plan(a: &PlanArgs) -> CliResult<Outcome> {
    let f = a.field.resolve()?;
    let opts = plan_options(&a.field, a.geometry.radius, a.grid.h);
    let mode = if a.signed { PlanMode::Signed } else { PlanMode::Unsigned };
    let plan = plan_escape_with(&f, a.geometry.start, mode, &opts)?;
    emit_json(&plan, a.output.out.as_ref())?;
    if let Some(path) = &a.output.svg {
        let mut scene = SvgScene::new(Disk::new(a.geometry.start, a.geometry.radius)?);
        scene.level_set(&plan.level_set, "#7f8c8d");
        scene.curve(plan.s_leg.points(), "s-leg", "#2471a3");
        scene.curve(plan.t_leg.points(), "t-leg", "#c0392b");
        write_file(path, &scene.render())?;
    }
    eprintln!(
        "{}: level {} reached after {}, then {} along it; total {} vs bound {} ({})",
        a.field.label(),
        fmt_num(plan.t0),
        fmt_num(plan.s_length),
        fmt_num(plan.t_length),
        fmt_num(plan.total_length),
        fmt_num(plan.bound),
        if plan.satisfied { "satisfied" } else { "NOT satisfied" }
    );
    Ok(if plan.satisfied { Outcome::Ok } else { Outcome::Fail })
}

fn run_check(a: &VerifyArgs) -> CliResult<TheoremReport> {
    let g = &a.geometry;
    Ok(match a.check {
        Check::Thm1 => verify_theorem1(&a.field.resolve()?, g.start, &plan_options(&a.field, g.radius, a.grid.h))?,
        Check::Thm2 => {
            let opts = Theorem2Options { grid_n: a.lattice, forward_only: a.forward_only, radius: g.radius, ..Theorem2Options::default() };
            verify_theorem2(&a.field.resolve()?, g.start, &opts)?
        }
        Check::Thm3 => verify_theorem3(&a.field.resolve()?, g.start, g.radius, DEFAULT_BOUNDS_SAMPLES)?,
        Check::Irrot => verify_irrotational_bound(&a.field.resolve_gradient()?, g.start, g.radius, DEFAULT_BOUNDS_SAMPLES)?,
        Check::Coarea => verify_coarea(&a.field.resolve()?, g.start, g.radius, a.grid.h, a.levels)?,
        Check::VnScaling => {
            if a.field.field.is_some() || a.field.expr.is_some() {
                eprintln!("note: vn-scaling always uses the built-in vn field; --field/--expr ignored");
            }
            verify_vn_scaling(&a.ns)?
        }
    })
}

fn cmd_verify(a: &VerifyArgs) -> CliResult<Outcome> {
    let report = run_check(a)?;
    emit_json(&report, a.out.as_ref())?;
    if let Some(path) = &a.csv {
        write_file(path, &reports_csv(std::slice::from_ref(&report)))?;
    }
    eprintln!(
        "{} on {}: {} = {} vs bound {} -> {:?}",
        report.theorem.as_str(),
        report.field,
        report.primary,
        fmt_num(report.value()),
        fmt_num(report.bound),
        report.verdict
    );
    for n in &report.notes {
        eprintln!("  note: {n}");
    }
    Ok(match report.verdict {
        Verdict::Pass => Outcome::Ok,
        Verdict::Fail => Outcome::Fail,
        Verdict::Inconclusive => Outcome::Inconclusive,
    })
}

fn cmd_sweep(a: &SweepArgs) -> CliResult<Outcome> {
    let base = a.field.param_map();
    let build = |n: f64| {
        let mut params = base.clone();
        params.insert("N".to_string(), n);
        a.field.resolve_with(&params)
    };
    if let Some(&n) = a.ns.iter().find(|&&n| n > WAVENUMBER_WARN) {
        eprintln!("warning: N = {n} > {WAVENUMBER_WARN}; default steps may under-resolve the oscillation");
    }
    let opts = PlanOptions { radius: a.geometry.radius, h: a.grid.h, ..PlanOptions::default() };
    let rows = sweep(&a.ns, build, a.geometry.start, &opts)?;
    let csv = sweep_csv(&rows);
    emit_json(&rows, a.json.as_ref())?;
    if let Some(p) = &a.out {
        write_file(p, &csv)?;
    }
    eprint!("{csv}");
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct RenderedCurve {
    name: &'static str,
    length: f64,
    status: EscapeStatus,
}

#[derive(Serialize)]
struct RenderSummary {
    field: String,
    start: fastescape::Point2,
    radius: f64,
    levels: Vec<f64>,
    level_lengths: Vec<f64>,
    curves: Vec<RenderedCurve>,
    notes: Vec<String>,
}

fn cmd_render(a: &RenderArgs) -> CliResult<Outcome> {
    let f = a.field.resolve()?;
    let cfg = integrator_for(&a.field);
    let disk = Disk::new(a.geometry.start, a.geometry.radius)?;
    let max_length = budget(&f, &disk, a.max_length)?;
    let mut scene = SvgScene::new(disk);
    let mut summary = RenderSummary {
        field: f.name().to_string(),
        start: disk.center,
        radius: disk.radius,
        levels: Vec::new(),
        level_lengths: Vec::new(),
        curves: Vec::new(),
        notes: Vec::new(),
    };
    match compute_stream_function(&f, &disk, a.grid.h, disk.center) {
        Ok(grid) => {
            let (lo, hi) = grid.range_within(&disk, 0.0);
            let k = a.levels.max(1);
            for i in 0..k {
                let t = lo + (hi - lo) * (i as f64 + 0.5) / k as f64;
                let set = extract_level_set(&grid, t, &disk);
                summary.levels.push(t);
                summary.level_lengths.push(set.hausdorff_length);
                scene.level_set(&set, "#95a5a6");
            }
        }
        Err(e @ Error::NotIncompressible { .. }) => summary.notes.push(format!("level sets skipped: {e}")),
        Err(e) => return Err(e.into()),
    }
    let perp = perpendicular(&f);
    for (name, g, color) in [("flow", &f, "#c0392b"), ("perpendicular", &perp, "#2471a3")] {
        let r = escape_length_with(g, disk.center, disk.radius, max_length, &cfg)?;
        scene.curve(r.curve.points(), name, color);
        summary.curves.push(RenderedCurve { name, length: r.escape_length, status: r.status });
    }
    let svg = scene.render();
    match &a.output.svg {
        Some(path) => write_file(path, &svg)?,
        None => summary.notes.push("no --svg path given; figure not written".into()),
    }
    emit_json(&summary, a.output.out.as_ref())?;
    eprintln!("{}: {} level sets, {} curves", a.field.label(), summary.levels.len(), summary.curves.len());
    Ok(Outcome::Ok)
}

#[derive(Serialize)]
struct FieldListing {
    name: &'static str,
    params: &'static str,
    incompressible: bool,
    description: &'static str,
}

fn cmd_list_fields() -> CliResult<Outcome> {
    let list: Vec<FieldListing> = REGISTRY
        .iter()
        .map(|f| FieldListing { name: f.name, params: f.params, incompressible: f.incompressible, description: f.description })
        .collect();
    emit_json(&list, None)?;
    for f in REGISTRY {
        eprintln!("{:<12} {:<40} {}", f.name, f.params, f.description);
    }
    Ok(Outcome::Ok)
}
