//! Two-leg escapes: along `v⊥` up to a short level set of the stream
//! function, then along `v` on that level until the disk is left.

use std::f64::consts::PI;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::field::{estimate_bounds, perpendicular, FieldBounds, Orientation, PlanarField, DEFAULT_BOUNDS_SAMPLES};
use crate::flow::{default_max_length, escape_length_with, integrate_unit_speed, EscapeStatus, Event, FlowCurve, IntegratorConfig};
use crate::geometry::{Disk, Point2};
use crate::stream::{compute_stream_function, extract_level_set, refine_level, scan_levels, LevelSet, ShortLevel};

/// Aggregate slack for grid, contouring and integration errors.
pub const PLAN_TOL: f64 = 0.05;
/// Levels tried before a plan is declared inconsistent.
pub const MAX_LEVEL_ATTEMPTS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    Unsigned,
    Signed,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanOptions {
    pub radius: f64,
    pub h: f64,
    pub bounds_samples: usize,
    pub tol: f64,
    pub integrator: IntegratorConfig,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { radius: 1.0, h: 1.0 / 256.0, bounds_samples: DEFAULT_BOUNDS_SAMPLES, tol: PLAN_TOL, integrator: IntegratorConfig::default() }
    }
}

/// Which event ended the first leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FirstLegEnd {
    Level,
    Exit,
}

fn as_points<S: Serializer>(c: &FlowCurve, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(c.points())
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapePlan {
    pub start: Point2,
    pub t0: f64,
    pub bound: f64,
    pub total_length: f64,
    pub satisfied: bool,
    #[serde(serialize_with = "as_points")]
    pub s_leg: FlowCurve,
    #[serde(serialize_with = "as_points")]
    pub t_leg: FlowCurve,
    pub mode: PlanMode,
    pub radius: f64,
    pub c1: f64,
    pub c2: f64,
    pub s_length: f64,
    pub t_length: f64,
    pub level_length: f64,
    pub first_leg_end: FirstLegEnd,
    pub t_direction: Option<Orientation>,
    pub exit_point: Point2,
    pub attempts: usize,
    pub closure_error: f64,
    #[serde(skip)]
    pub level_set: LevelSet,
    #[serde(skip)]
    pub bounds: FieldBounds,
}

/// Escape-length bound for the two-leg route on a disk of radius `radius`:
/// `R·√(4π c2/c1)` unsigned, half that signed.
pub fn plan_bound(bounds: &FieldBounds, radius: f64, mode: PlanMode) -> f64 {
    let full = radius * (4.0 * PI * bounds.ratio()).sqrt();
    match mode {
        PlanMode::Unsigned => full,
        PlanMode::Signed => 0.5 * full,
    }
}

/// Length allowed for the level leg: `R·√(π c2/c1)·(1 + tol)`.
pub fn level_budget(bounds: &FieldBounds, radius: f64, tol: f64) -> f64 {
    radius * (PI * bounds.ratio()).sqrt() * (1.0 + tol)
}

pub fn plan_escape(f: &PlanarField, p0: Point2, mode: PlanMode) -> Result<EscapePlan> {
    plan_escape_with(f, p0, mode, &PlanOptions::default())
}

pub fn plan_escape_with(f: &PlanarField, p0: Point2, mode: PlanMode, opts: &PlanOptions) -> Result<EscapePlan> {
    let disk = Disk::new(p0, opts.radius)?;
    let bounds = estimate_bounds(f, &disk, opts.bounds_samples)?;
    bounds.require_positive()?;
    let grid = compute_stream_function(f, &disk, opts.h, p0)?;
    let signed = mode == PlanMode::Signed;
    let scan = scan_levels(&grid, &bounds, &disk, signed)?;
    let ranked = scan.ranked();
    let budget = level_budget(&bounds, opts.radius, opts.tol);
    let perp = perpendicular(f);
    let cfg = &opts.integrator;
    let potential = |p: Point2| grid.interpolate(p);

    let mut failure = String::new();
    for (attempt, &k) in ranked.iter().take(MAX_LEVEL_ATTEMPTS).enumerate() {
        let short = if attempt == 0 {
            refine_level(&grid, &scan, k, &disk)
        } else {
            ShortLevel { t0: scan.levels[k], length: scan.lengths[k], z: scan.z, signed }
        };
        let t0 = short.t0;

        // The potential grows at rate ≥ c1 along v⊥, so the level is reached within |t0|/c1.
        let s_field = if t0 >= 0.0 { perp.clone() } else { perp.reversed() };
        let events = [Event::level(potential, t0, 0.0), Event::exit_disk(p0, opts.radius)];
        let s_traj = integrate_unit_speed(&s_field, p0, 2.0 * budget, &events, cfg)?;
        let Some(hit) = s_traj.event else {
            failure = format!("first leg ran {:.6} without reaching level {t0} or the boundary", s_traj.curve.length());
            continue;
        };
        let s_leg = s_traj.curve;
        let q = s_leg.end();

        let (t_leg, t_direction, first_leg_end) = if hit.label == "exit" {
            (FlowCurve::point(f, q), None, FirstLegEnd::Exit)
        } else {
            let directions: &[Orientation] = if signed { &[Orientation::Forward, Orientation::Backward] } else { &[Orientation::Forward] };
            let mut best: Option<(FlowCurve, Orientation)> = None;
            for &dir in directions {
                let g = if dir == Orientation::Forward { f.clone() } else { f.reversed() };
                let traj = integrate_unit_speed(&g, q, budget, &[Event::exit_disk(p0, opts.radius)], cfg)?;
                if traj.event.is_some() && best.as_ref().is_none_or(|(c, _)| traj.curve.length() < c.length()) {
                    best = Some((traj.curve, dir));
                }
            }
            match best {
                Some((curve, dir)) => (curve, Some(dir), FirstLegEnd::Level),
                None => {
                    failure = format!("level leg on A = {t0} exhausted the budget {budget:.6} without leaving the disk");
                    continue;
                }
            }
        };

        let s_length = s_leg.length();
        let t_length = t_leg.length();
        let total_length = s_length + t_length;
        let bound = plan_bound(&bounds, opts.radius, mode);
        let exit_point = if t_leg.is_empty() { q } else { t_leg.end() };
        return Ok(EscapePlan {
            start: p0,
            t0,
            bound,
            total_length,
            satisfied: total_length <= bound * (1.0 + opts.tol),
            s_leg,
            t_leg,
            mode,
            radius: opts.radius,
            c1: bounds.c1,
            c2: bounds.c2,
            s_length,
            t_length,
            level_length: short.length,
            first_leg_end,
            t_direction,
            exit_point,
            attempts: attempt + 1,
            closure_error: grid.closure_error(),
            level_set: extract_level_set(&grid, t0, &disk),
            bounds,
        });
    }
    Err(Error::InternalConsistency(failure))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LegSummary {
    pub length: f64,
    pub status: EscapeStatus,
}

#[derive(Debug, Clone, Serialize)]
pub struct StrategyComparison {
    pub field: String,
    pub start: Point2,
    pub c1: f64,
    pub c2: f64,
    pub direct: LegSummary,
    pub perpendicular: LegSummary,
    pub plan_length: f64,
    pub plan_satisfied: bool,
    pub thm1_bound: f64,
    /// Escape budget used for the single-field escapes.
    pub max_length: f64,
}

impl StrategyComparison {
    pub fn perpendicular_to_plan(&self) -> f64 {
        self.perpendicular.length / self.plan_length
    }

    pub fn direct_to_plan(&self) -> f64 {
        self.direct.length / self.plan_length
    }
}

/// Escape along `v`, escape along `v⊥`, and the two-leg plan, side by side.
pub fn compare_strategies(f: &PlanarField, p0: Point2, opts: &PlanOptions) -> Result<StrategyComparison> {
    let plan = plan_escape_with(f, p0, PlanMode::Unsigned, opts)?;
    let max_length = default_max_length(Some(&plan.bounds)) * opts.radius;
    let leg = |g: &PlanarField| -> Result<LegSummary> {
        let r = escape_length_with(g, p0, opts.radius, max_length, &opts.integrator)?;
        Ok(LegSummary { length: r.escape_length, status: r.status })
    };
    Ok(StrategyComparison {
        field: f.name().to_string(),
        start: p0,
        c1: plan.c1,
        c2: plan.c2,
        direct: leg(f)?,
        perpendicular: leg(&perpendicular(f))?,
        plan_length: plan.total_length,
        plan_satisfied: plan.satisfied,
        thm1_bound: plan.bound,
        max_length,
    })
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeMap;

    use super::*;
    use crate::builtins::{const_field, rotation, vn_field, zigzag};
    use crate::expr::{field_from_stream_function, parse};

    #[test]
    fn constant_field_plan_is_pure_perpendicular() {
        let plan = plan_escape(&const_field(1.0, 0.0), Point2::ORIGIN, PlanMode::Unsigned).unwrap();
        assert!((plan.total_length - 1.0).abs() < 1e-6);
        assert!(plan.t_leg.is_empty());
        assert_eq!(plan.first_leg_end, FirstLegEnd::Exit);
        assert!(plan.exit_point.distance(Point2::new(0.0, 1.0)) < 1e-6);
        assert!((plan.bound - 3.5449077018110321).abs() < 1e-12);
        assert!(plan.satisfied);
    }

    #[test]
    fn vn_plan_meets_the_bound() {
        let plan = plan_escape(&vn_field(8.0), Point2::ORIGIN, PlanMode::Unsigned).unwrap();
        assert!((plan.bound - 7.1980881749017748).abs() < 1e-12);
        assert!(plan.satisfied, "{} > {}", plan.total_length, plan.bound);
        assert!((plan.total_length - plan.s_length - plan.t_length).abs() < 1e-12);
        assert!((plan.exit_point.distance(Point2::ORIGIN) - 1.0).abs() < 1e-6);
        assert!(plan.s_length <= (PI * plan.c2 / plan.c1).sqrt() * (1.0 + PLAN_TOL));
    }

    #[test]
    fn level_leg_is_used_when_the_level_is_close() {
        let a = parse("y + 10*y^3").unwrap();
        let f = field_from_stream_function(&a, &BTreeMap::new()).unwrap();
        let plan = plan_escape(&f, Point2::ORIGIN, PlanMode::Unsigned).unwrap();
        assert_eq!(plan.first_leg_end, FirstLegEnd::Level);
        assert!(!plan.t_leg.is_empty());
        assert!(plan.satisfied);
        let q = plan.s_leg.end();
        let a_exact = q.y + 10.0 * q.y.powi(3);
        assert!((a_exact - plan.t0).abs() < 1e-6, "{a_exact} vs {}", plan.t0);
        assert!(plan.t_length <= level_budget(&plan.bounds, 1.0, PLAN_TOL));
        assert!((plan.exit_point.distance(Point2::ORIGIN) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn signed_plan_is_no_longer_than_its_budget() {
        let plan = plan_escape(&vn_field(8.0), Point2::ORIGIN, PlanMode::Signed).unwrap();
        assert_eq!(plan.mode, PlanMode::Signed);
        assert!(plan.t0.abs() <= 0.5 * (PI * plan.c1 * plan.c2).sqrt() + 1e-12);
        assert!((plan.bound - 0.5 * 7.1980881749017748).abs() < 1e-12);
    }

    #[test]
    fn rotation_violates_the_hypothesis() {
        assert!(matches!(plan_escape(&rotation(), Point2::new(0.5, 0.0), PlanMode::Unsigned), Err(Error::HypothesisViolated(_))));
    }

    #[test]
    fn zigzag_plan_is_short() {
        let plan = plan_escape(&zigzag(8.0, 0.01 / 8.0), Point2::ORIGIN, PlanMode::Unsigned).unwrap();
        assert!(plan.satisfied, "{} > {}", plan.total_length, plan.bound);
    }

    #[test]
    fn strategies_on_the_constant_field_agree() {
        let c = compare_strategies(&const_field(1.0, 0.0), Point2::ORIGIN, &PlanOptions::default()).unwrap();
        assert!((c.direct.length - 1.0).abs() < 1e-6);
        assert!((c.perpendicular.length - 1.0).abs() < 1e-6);
        assert!((c.plan_length - 1.0).abs() < 1e-6);
    }
}
