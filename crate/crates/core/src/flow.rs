//! Unit-speed flow curves `dγ/ds = f(γ)/‖f(γ)‖` with event detection.
//!
//! The integrator is Dormand–Prince 5(4) with adaptive steps and the
//! classical fifth-order dense output, so events and curve samples can be
//! placed anywhere inside a step without extra field evaluations.

use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{FieldBounds, Orientation, PlanarField};
use crate::geometry::{Point2, Vec2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    /// Local error target per step.
    pub tol: f64,
    pub max_step: f64,
    pub min_step: f64,
    pub speed_floor: f64,
    /// Width of the arclength bracket an event crossing is bisected down to.
    pub event_tol: f64,
    /// An event function whose local maximum comes within this of zero counts as touched.
    pub touch_tol: f64,
    /// Largest tangent turn between consecutive stored samples, in radians.
    pub sample_turn: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_step: 1e-2,
            min_step: 1e-14,
            speed_floor: 1e-12,
            event_tol: 1e-9,
            touch_tol: 1e-8,
            sample_turn: 4e-3,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let all = [self.tol, self.max_step, self.min_step, self.speed_floor, self.event_tol, self.touch_tol, self.sample_turn];
        if all.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::invalid("integrator tolerances must be positive"));
        }
        if self.min_step >= self.max_step {
            return Err(Error::invalid("min_step must be below max_step"));
        }
        Ok(())
    }

    /// Step cap `0.1/N` for the sheared field at wavenumber `N`, when that is tighter.
    pub fn for_wavenumber(n: f64) -> Self {
        let mut c = Self::default();
        if n > 0.0 {
            c.max_step = c.max_step.min(0.1 / n);
        }
        c
    }
}

/// Budget used when none is given: `100·c2/c1` for known bounds, else `1e4`.
pub fn default_max_length(bounds: Option<&FieldBounds>) -> f64 {
    match bounds {
        Some(b) if b.c1 > 0.0 && b.ratio().is_finite() => 100.0 * b.ratio(),
        _ => 1e4,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveSample {
    pub s: f64,
    pub p: Point2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowCurve {
    samples: Vec<CurveSample>,
    start: Point2,
    field_name: String,
    direction: Orientation,
}

impl FlowCurve {
    fn begin(f: &PlanarField, start: Point2) -> Self {
        Self {
            samples: vec![CurveSample { s: 0.0, p: start }],
            start,
            field_name: f.name().to_string(),
            direction: f.orientation(),
        }
    }

    /// A curve consisting of its start point only.
    pub fn point(f: &PlanarField, start: Point2) -> Self {
        Self::begin(f, start)
    }

    fn push(&mut self, s: f64, p: Point2) {
        let last = self.samples.last().map_or(f64::NEG_INFINITY, |q| q.s);
        if s > last {
            self.samples.push(CurveSample { s, p });
        }
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    pub fn points(&self) -> impl Iterator<Item = Point2> + '_ {
        self.samples.iter().map(|q| q.p)
    }

    pub fn start(&self) -> Point2 {
        self.start
    }

    pub fn end(&self) -> Point2 {
        self.samples.last().map_or(self.start, |q| q.p)
    }

    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |q| q.s)
    }

    pub fn field_name(&self) -> &str {
        &self.field_name
    }

    pub fn direction(&self) -> Orientation {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.len() <= 1
    }

    /// Sum of chord lengths, a lower bound for [`Self::length`].
    pub fn polyline_length(&self) -> f64 {
        self.samples.windows(2).map(|w| w[0].p.distance(w[1].p)).sum()
    }

    /// Point at arclength `s`, interpolated linearly between samples.
    pub fn at(&self, s: f64) -> Point2 {
        let i = self.samples.partition_point(|q| q.s < s);
        if i == 0 {
            return self.start;
        }
        if i >= self.samples.len() {
            return self.end();
        }
        let (a, b) = (self.samples[i - 1], self.samples[i]);
        a.p.lerp(b.p, (s - a.s) / (b.s - a.s))
    }

    /// Whether two non-adjacent polyline segments cross.
    pub fn self_intersects(&self) -> bool {
        let pts: Vec<Point2> = self.points().collect();
        let n = pts.len();
        if n < 4 {
            return false;
        }
        let cell = pts.windows(2).map(|w| w[0].distance(w[1])).fold(0.0, f64::max).max(1e-9);
        let mut buckets: std::collections::HashMap<(i64, i64), Vec<usize>> = std::collections::HashMap::new();
        let key = |v: f64| (v / cell).floor() as i64;
        for i in 0..n - 1 {
            let (a, b) = (pts[i], pts[i + 1]);
            let (x0, x1) = (key(a.x.min(b.x)), key(a.x.max(b.x)));
            let (y0, y1) = (key(a.y.min(b.y)), key(a.y.max(b.y)));
            for cx in x0..=x1 {
                for cy in y0..=y1 {
                    let list = buckets.entry((cx, cy)).or_default();
                    for &j in list.iter() {
                        if j + 1 < i && segments_cross(pts[j], pts[j + 1], a, b) {
                            return true;
                        }
                    }
                    list.push(i);
                }
            }
        }
        false
    }
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let orient = |p: Point2, q: Point2, r: Point2| (q - p).u * (r - p).v - (q - p).v * (r - p).u;
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

impl Serialize for FlowCurve {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let pts: Vec<Point2> = self.points().collect();
        let mut st = serializer.serialize_struct("FlowCurve", 5)?;
        st.serialize_field("field", &self.field_name)?;
        st.serialize_field("direction", &self.direction)?;
        st.serialize_field("start", &self.start)?;
        st.serialize_field("length", &self.length())?;
        st.serialize_field("points", &pts)?;
        st.end()
    }
}

/// Scalar event function. The event fires when it first reaches zero from
/// below, including a local maximum that only touches zero.
pub struct Event<'a> {
    pub label: &'static str,
    g: Box<dyn Fn(Point2) -> f64 + 'a>,
}

impl<'a> Event<'a> {
    pub fn new(label: &'static str, g: impl Fn(Point2) -> f64 + 'a) -> Self {
        Self { label, g: Box::new(g) }
    }

    /// Distance from `center` reaching `radius`.
    pub fn exit_disk(center: Point2, radius: f64) -> Self {
        Self::new("exit", move |p| p.distance(center) - radius)
    }

    /// `value(p)` reaching `target`, approached from the side of `start_value`.
    pub fn level(value: impl Fn(Point2) -> f64 + 'a, target: f64, start_value: f64) -> Self {
        let sign = if start_value <= target { 1.0 } else { -1.0 };
        Self::new("level", move |p| sign * (value(p) - target))
    }

    pub fn value(&self, p: Point2) -> f64 {
        (self.g)(p)
    }
}

impl std::fmt::Debug for Event<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Event").field("label", &self.label).finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventHit {
    pub index: usize,
    pub label: &'static str,
    pub arclength: f64,
    pub point: Point2,
    pub touch: bool,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub curve: FlowCurve,
    pub event: Option<EventHit>,
}

// Dormand–Prince 5(4) tableau.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

fn combo(p: Point2, h: f64, terms: &[(f64, Vec2)]) -> Point2 {
    let mut d = Vec2::ZERO;
    for &(w, k) in terms {
        d = d + w * k;
    }
    p + h * d
}

fn angle_between(a: Vec2, b: Vec2) -> f64 {
    let cross = a.u * b.v - a.v * b.u;
    cross.atan2(a.dot(b)).abs()
}

/// Fifth-order interpolant over one accepted step.
struct Dense {
    y0: Point2,
    r2: Vec2,
    r3: Vec2,
    r4: Vec2,
    r5: Vec2,
}

impl Dense {
    fn at(&self, theta: f64) -> Point2 {
        let t1 = 1.0 - theta;
        self.y0 + theta * (self.r2 + t1 * (self.r3 + theta * (self.r4 + t1 * self.r5)))
    }
}

struct Stepper<'f> {
    f: &'f PlanarField,
    floor: f64,
}

impl Stepper<'_> {
    fn direction(&self, p: Point2) -> Result<Vec2> {
        let v = self.f.eval(p);
        if !v.is_finite() || !p.is_finite() {
            return Err(Error::Domain { field: self.f.name().to_string(), at: p });
        }
        let speed = v.norm();
        if speed < self.floor {
            return Err(Error::Stagnation { at: p, speed });
        }
        Ok((1.0 / speed) * v)
    }
}

/// Integrates the unit-speed flow of `f` from `p0` until the first event
/// fires or the arclength reaches `max_length`.
pub fn integrate_unit_speed(
    f: &PlanarField,
    p0: Point2,
    max_length: f64,
    events: &[Event<'_>],
    cfg: &IntegratorConfig,
) -> Result<Trajectory> {
    cfg.validate()?;
    if !(max_length > 0.0) {
        return Err(Error::invalid("max_length must be positive"));
    }
    if !p0.is_finite() {
        return Err(Error::invalid("start point must be finite"));
    }
    let stepper = Stepper { f, floor: cfg.speed_floor };
    let mut curve = FlowCurve::begin(f, p0);
    let mut k1 = stepper.direction(p0)?;

    let mut g_prev: Vec<f64> = events.iter().map(|e| e.value(p0)).collect();
    if let Some(i) = g_prev.iter().position(|&g| g >= 0.0) {
        let hit = EventHit { index: i, label: events[i].label, arclength: 0.0, point: p0, touch: false };
        return Ok(Trajectory { curve, event: Some(hit) });
    }

    let mut s = 0.0;
    let mut y = p0;
    let mut h = cfg.max_step.min(1e-3).min(max_length);
    let mut rejected_last = false;

    while s < max_length {
        let last = s + h >= max_length;
        if last {
            h = max_length - s;
        }
        let k2 = stepper.direction(combo(y, h, &[(A21, k1)]))?;
        let k3 = stepper.direction(combo(y, h, &[(A31, k1), (A32, k2)]))?;
        let k4 = stepper.direction(combo(y, h, &[(A41, k1), (A42, k2), (A43, k3)]))?;
        let k5 = stepper.direction(combo(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]))?;
        let k6 = stepper.direction(combo(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]))?;
        let y1 = combo(y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
        let k7 = stepper.direction(y1)?;
        let err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let err = err_vec.norm() / cfg.tol;

        if !(err <= 1.0) {
            let fac = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.2, 1.0) } else { 0.2 };
            h *= fac;
            rejected_last = true;
            if h < cfg.min_step {
                return Err(Error::StepUnderflow { arclength: s, step: h });
            }
            continue;
        }

        let r2 = y1 - y;
        let r3 = h * k1 - r2;
        let r4 = r2 - h * k7 - r3;
        let r5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7);
        let dense = Dense { y0: y, r2, r3, r4, r5 };

        let hit = detect_events(events, &g_prev, &dense, h, cfg);
        let theta_end = hit.map_or(1.0, |(_, theta, _)| theta);

        // Stage directions sample the tangent unevenly, so pad the estimate.
        let turn = 1.5 * (angle_between(k1, k3) + angle_between(k3, k4) + angle_between(k4, k7));
        let pieces = ((turn * theta_end / cfg.sample_turn).ceil() as usize).clamp(1, 4096);
        for j in 1..pieces {
            let theta = theta_end * j as f64 / pieces as f64;
            curve.push(s + theta * h, dense.at(theta));
        }

        if let Some((index, theta, touch)) = hit {
            let (se, pe) = if theta >= 1.0 { (s + h, y1) } else { (s + theta * h, dense.at(theta)) };
            curve.push(se, pe);
            let event = EventHit { index, label: events[index].label, arclength: se, point: pe, touch };
            return Ok(Trajectory { curve, event: Some(event) });
        }

        s = if last { max_length } else { s + h };
        y = y1;
        k1 = k7;
        curve.push(s, y);
        for (g, e) in g_prev.iter_mut().zip(events) {
            *g = e.value(y);
        }

        let mut fac = if err > 0.0 { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) } else { 5.0 };
        if rejected_last {
            fac = fac.min(1.0);
        }
        rejected_last = false;
        h = (h * fac).min(cfg.max_step);
    }
    Ok(Trajectory { curve, event: None })
}

const EVENT_SAMPLES: usize = 8;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Earliest event inside the step as `(index, theta, touched)`.
fn detect_events(events: &[Event<'_>], g_start: &[f64], dense: &Dense, h: f64, cfg: &IntegratorConfig) -> Option<(usize, f64, bool)> {
    let mut best: Option<(usize, f64, bool)> = None;
    let theta_tol = (cfg.event_tol / h).min(0.5);
    for (index, e) in events.iter().enumerate() {
        let g = |theta: f64| e.value(dense.at(theta));
        let mut samples = [0.0f64; EVENT_SAMPLES + 1];
        samples[0] = g_start[index];
        for (j, v) in samples.iter_mut().enumerate().skip(1) {
            *v = g(j as f64 / EVENT_SAMPLES as f64);
        }
        let theta_of = |j: usize| j as f64 / EVENT_SAMPLES as f64;

        let crossing = samples.iter().position(|&v| v >= 0.0);
        let candidate = match crossing {
            Some(j) => {
                let (mut a, mut b) = (theta_of(j - 1), theta_of(j));
                while b - a > theta_tol {
                    let m = 0.5 * (a + b);
                    if g(m) >= 0.0 {
                        b = m;
                    } else {
                        a = m;
                    }
                }
                // A crossing that barely pokes above zero is a numerically blurred touch.
                let right = theta_of((j + 1).min(EVENT_SAMPLES));
                let (tm, gm) = maximize(&g, b, right.max(b), theta_tol);
                if gm <= cfg.touch_tol && tm < right && tm > b {
                    Some((tm, true))
                } else {
                    Some((b, false))
                }
            }
            None => {
                let mut found = None;
                for j in 1..EVENT_SAMPLES {
                    if samples[j] >= samples[j - 1] && samples[j] >= samples[j + 1] && samples[j] >= -100.0 * cfg.touch_tol {
                        let (tm, gm) = maximize(&g, theta_of(j - 1), theta_of(j + 1), theta_tol);
                        if gm >= -cfg.touch_tol {
                            found = Some((tm, true));
                            break;
                        }
                    }
                }
                found
            }
        };
        if let Some((theta, touch)) = candidate {
            if best.is_none_or(|(_, t, _)| theta < t) {
                best = Some((index, theta, touch));
            }
        }
    }
    best
}

/// Golden-section maximization of `g` on `[a, b]`.
fn maximize(g: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    if b <= a {
        return (a, g(a));
    }
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    while b - a > tol {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = g(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = g(x1);
        }
    }
    let m = 0.5 * (a + b);
    (m, g(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EscapeStatus {
    Escaped,
    BudgetExhausted,
    HypothesisViolated,
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeResult {
    pub start: Point2,
    pub radius: f64,
    pub escape_length: f64,
    pub exit_point: Point2,
    pub status: EscapeStatus,
    pub touched: bool,
    pub curve: FlowCurve,
}

impl EscapeResult {
    pub fn escaped(&self) -> bool {
        self.status == EscapeStatus::Escaped
    }
}

pub fn escape_length(f: &PlanarField, p0: Point2, radius: f64, max_length: f64) -> Result<EscapeResult> {
    escape_length_with(f, p0, radius, max_length, &IntegratorConfig::default())
}

/// Arclength until the flow of `f` first reaches distance `radius` from `p0`.
pub fn escape_length_with(f: &PlanarField, p0: Point2, radius: f64, max_length: f64, cfg: &IntegratorConfig) -> Result<EscapeResult> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::invalid("radius must be positive"));
    }
    let v0 = f.try_eval(p0)?;
    if v0.norm() < cfg.speed_floor {
        return Ok(EscapeResult {
            start: p0,
            radius,
            escape_length: f64::NAN,
            exit_point: p0,
            status: EscapeStatus::HypothesisViolated,
            touched: false,
            curve: FlowCurve::point(f, p0),
        });
    }
    let events = [Event::exit_disk(p0, radius)];
    let traj = integrate_unit_speed(f, p0, max_length, &events, cfg)?;
    let (status, touched) = match traj.event {
        Some(hit) => (EscapeStatus::Escaped, hit.touch),
        None => (EscapeStatus::BudgetExhausted, false),
    };
    Ok(EscapeResult {
        start: p0,
        radius,
        escape_length: traj.curve.length(),
        exit_point: traj.curve.end(),
        status,
        touched,
        curve: traj.curve,
    })
}

pub fn bidirectional_escape_length(f: &PlanarField, p0: Point2, radius: f64, max_length: f64) -> Result<EscapeResult> {
    bidirectional_escape_length_with(f, p0, radius, max_length, &IntegratorConfig::default())
}

/// Shorter of the forward and backward escapes. Ties go to forward.
pub fn bidirectional_escape_length_with(f: &PlanarField, p0: Point2, radius: f64, max_length: f64, cfg: &IntegratorConfig) -> Result<EscapeResult> {
    let fwd = escape_length_with(f, p0, radius, max_length, cfg)?;
    if fwd.status == EscapeStatus::HypothesisViolated {
        return Ok(fwd);
    }
    let bwd = escape_length_with(&f.reversed(), p0, radius, max_length, cfg)?;
    Ok(match (fwd.escaped(), bwd.escaped()) {
        (true, true) if bwd.escape_length < fwd.escape_length => bwd,
        (false, true) => bwd,
        _ => fwd,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{const_field, rotation, vn_field};
    use std::f64::consts::PI;

    const VN_ORACLE: [(f64, f64); 5] = [
        (4.0, 1.6676773735771819),
        (8.0, 2.6391448993900485),
        (16.0, 4.6232126762614236),
        (32.0, 9.4902233259050632),
        (64.0, 18.483037865749045),
    ];

    #[test]
    fn constant_field_escapes_along_a_segment() {
        let r = escape_length(&const_field(1.0, 0.0), Point2::ORIGIN, 1.0, 10.0).unwrap();
        assert_eq!(r.status, EscapeStatus::Escaped);
        assert!((r.escape_length - 1.0).abs() < 1e-9, "{}", r.escape_length);
        assert!((r.exit_point.x - 1.0).abs() < 1e-9 && r.exit_point.y.abs() < 1e-12);
        let diag = escape_length(&const_field(-3.0, 4.0), Point2::new(0.2, 0.1), 2.0, 10.0).unwrap();
        assert!((diag.escape_length - 2.0).abs() < 1e-9);
    }

    #[test]
    fn rotation_touches_the_antipode() {
        let r = escape_length(&rotation(), Point2::new(0.5, 0.0), 1.0, 100.0).unwrap();
        assert_eq!(r.status, EscapeStatus::Escaped);
        assert!((r.escape_length - PI / 2.0).abs() < 1e-6, "{}", r.escape_length - PI / 2.0);
        assert!(r.exit_point.distance(Point2::new(-0.5, 0.0)) < 1e-5);
        let traj = integrate_unit_speed(&rotation(), Point2::new(0.5, 0.0), 100.0, &[Event::exit_disk(Point2::new(0.5, 0.0), 1.0)], &IntegratorConfig::default()).unwrap();
        assert_eq!(traj.event.map(|e| e.label), Some("exit"));
    }

    #[test]
    fn rotation_without_reach_exhausts_budget() {
        let r = escape_length(&rotation(), Point2::new(0.3, 0.0), 1.0, 5.0).unwrap();
        assert_eq!(r.status, EscapeStatus::BudgetExhausted);
        assert!((r.escape_length - 5.0).abs() < 1e-12);
    }

    #[test]
    fn vn_orbit_follows_the_sine() {
        let traj = integrate_unit_speed(&vn_field(8.0), Point2::ORIGIN, 2.5, &[], &IntegratorConfig::default()).unwrap();
        for q in traj.curve.points() {
            assert!((q.y - 0.5 * (8.0 * q.x).sin()).abs() < 1e-7, "{q}");
        }
    }

    #[test]
    fn vn_lengths_match_quadrature_oracle() {
        for (n, ell) in VN_ORACLE {
            let r = escape_length(&vn_field(n), Point2::ORIGIN, 1.0, 1e3).unwrap();
            assert!((r.escape_length - ell).abs() < 1e-6, "N={n}: {} vs {ell}", r.escape_length);
            assert!(r.escape_length >= n / 8.0);
        }
    }

    #[test]
    fn bidirectional_vn_is_symmetric() {
        let f = vn_field(8.0);
        let fwd = escape_length(&f, Point2::ORIGIN, 1.0, 1e3).unwrap();
        let bwd = escape_length(&f.reversed(), Point2::ORIGIN, 1.0, 1e3).unwrap();
        assert!((fwd.escape_length - bwd.escape_length).abs() < 1e-7);
        let both = bidirectional_escape_length(&f, Point2::ORIGIN, 1.0, 1e3).unwrap();
        assert!((both.escape_length - fwd.escape_length).abs() < 1e-7);
        let c = bidirectional_escape_length(&const_field(1.0, 0.0), Point2::ORIGIN, 1.0, 10.0).unwrap();
        assert!((c.escape_length - 1.0).abs() < 1e-9);
    }

    #[test]
    fn escape_is_scale_invariant() {
        let f = vn_field(8.0);
        let base = escape_length(&f, Point2::new(0.1, 0.2), 1.0, 1e3).unwrap().escape_length;
        for lambda in [0.1, 10.0] {
            let scaled = escape_length(&f.scaled(lambda), Point2::new(0.1, 0.2), 1.0, 1e3).unwrap().escape_length;
            assert!((scaled - base).abs() < 2e-9, "λ={lambda}: {scaled} vs {base}");
        }
    }

    #[test]
    fn samples_are_chord_consistent() {
        for f in [vn_field(8.0), vn_field(32.0), rotation()] {
            let traj = integrate_unit_speed(&f, Point2::new(0.4, 0.1), 3.0, &[], &IntegratorConfig::default()).unwrap();
            let samples = traj.curve.samples();
            assert_eq!(samples[0].s, 0.0);
            for w in samples.windows(2) {
                let ds = w[1].s - w[0].s;
                let chord = w[0].p.distance(w[1].p);
                assert!(ds > 0.0);
                // Positions carry the per-step error target, arclengths are exact.
                let slack = IntegratorConfig::default().tol;
                assert!(chord <= ds + slack && ds <= chord * (1.0 + 1e-6) + slack, "{} {chord} {ds}", f.name());
            }
            let poly = traj.curve.polyline_length();
            assert!((poly - traj.curve.length()).abs() <= 1e-6 * traj.curve.length());
        }
    }

    #[test]
    fn flow_curves_do_not_self_intersect() {
        let r = escape_length(&vn_field(16.0), Point2::ORIGIN, 1.0, 1e3).unwrap();
        assert!(!r.curve.self_intersects());
        let arc = integrate_unit_speed(&rotation(), Point2::new(0.5, 0.0), 0.95 * PI, &[], &IntegratorConfig::default()).unwrap();
        assert!(!arc.curve.self_intersects());
    }

    #[test]
    fn level_event_fires_at_target() {
        let f = const_field(0.0, 1.0);
        let events = [Event::level(|p: Point2| p.y * p.y, 0.25, 0.0), Event::exit_disk(Point2::ORIGIN, 1.0)];
        let traj = integrate_unit_speed(&f, Point2::ORIGIN, 10.0, &events, &IntegratorConfig::default()).unwrap();
        let hit = traj.event.unwrap();
        assert_eq!(hit.index, 0);
        assert!((hit.arclength - 0.5).abs() < 1e-9);
    }

    #[test]
    fn stagnation_and_domain_errors() {
        let f = PlanarField::new("sink", |p: Point2| Vec2::new(-p.x, -p.y));
        assert!(matches!(
            integrate_unit_speed(&f, Point2::new(0.5, 0.0), 2.0, &[], &IntegratorConfig::default()),
            Err(Error::Stagnation { .. }) | Err(Error::StepUnderflow { .. })
        ));
        let g = PlanarField::new("root", |p: Point2| Vec2::new(-1.0, p.x.sqrt()));
        assert!(matches!(integrate_unit_speed(&g, Point2::new(0.5, 0.0), 2.0, &[], &IntegratorConfig::default()), Err(Error::Domain { .. })));
        let z = escape_length(&const_field(0.0, 0.0), Point2::ORIGIN, 1.0, 1.0).unwrap();
        assert_eq!(z.status, EscapeStatus::HypothesisViolated);
    }
}
