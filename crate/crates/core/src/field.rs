//! Planar vector fields and the differential quantities the escape bounds
//! are stated in: the quarter-turned field, divergence, curl, speed bounds
//! and the integral of |curl| over a disk.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{Disk, Point2, Vec2};

pub type VectorFn = Arc<dyn Fn(Point2) -> Vec2 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(Point2) -> f64 + Send + Sync>;

/// Step used for central differences when a field has no analytic derivative.
pub const FD_STEP: f64 = 1e-5;

/// Relative margin applied to sampled speed extremes.
pub const SAMPLED_BOUNDS_MARGIN: f64 = 0.01;

/// Default number of low-discrepancy samples for [`estimate_bounds`].
pub const DEFAULT_BOUNDS_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Forward,
    Backward,
}

impl Orientation {
    pub fn sign(self) -> f64 {
        match self {
            Orientation::Forward => 1.0,
            Orientation::Backward => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Backward,
            Orientation::Backward => Orientation::Forward,
        }
    }
}

/// An evaluable vector field v: ℝ² → ℝ² with optional closed-form curl,
/// divergence and global speed bounds.
///
/// Values are immutable and cheap to clone; evaluation is pure.
#[derive(Clone)]
pub struct PlanarField {
    name: String,
    params: BTreeMap<String, f64>,
    eval: VectorFn,
    curl: Option<ScalarFn>,
    div: Option<ScalarFn>,
    orientation: Orientation,
    speed_bounds: Option<(f64, f64)>,
}

impl fmt::Debug for PlanarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PlanarField")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("orientation", &self.orientation)
            .field("analytic_curl", &self.curl.is_some())
            .field("analytic_div", &self.div.is_some())
            .field("speed_bounds", &self.speed_bounds)
            .finish()
    }
}

impl PlanarField {
    pub fn new(name: impl Into<String>, eval: impl Fn(Point2) -> Vec2 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            params: BTreeMap::new(),
            eval: Arc::new(eval),
            curl: None,
            div: None,
            orientation: Orientation::Forward,
            speed_bounds: None,
        }
    }

    pub fn with_param(mut self, key: impl Into<String>, value: f64) -> Self {
        self.params.insert(key.into(), value);
        self
    }

    pub fn with_params(mut self, params: &BTreeMap<String, f64>) -> Self {
        self.params.extend(params.iter().map(|(k, v)| (k.clone(), *v)));
        self
    }

    pub fn with_curl(mut self, curl: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        self.curl = Some(Arc::new(curl));
        self
    }

    pub fn with_div(mut self, div: impl Fn(Point2) -> f64 + Send + Sync + 'static) -> Self {
        self.div = Some(Arc::new(div));
        self
    }

    /// Declares closed-form bounds `c1 ≤ ‖v‖ ≤ c2` valid on the whole plane.
    pub fn with_speed_bounds(mut self, c1: f64, c2: f64) -> Self {
        self.speed_bounds = Some((c1, c2));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn speed_bounds(&self) -> Option<(f64, f64)> {
        self.speed_bounds
    }

    pub fn has_analytic_curl(&self) -> bool {
        self.curl.is_some()
    }

    pub fn has_analytic_div(&self) -> bool {
        self.div.is_some()
    }

    #[inline]
    pub fn eval(&self, p: Point2) -> Vec2 {
        let v = (self.eval)(p);
        match self.orientation {
            Orientation::Forward => v,
            Orientation::Backward => -v,
        }
    }

    /// Evaluates and rejects non-finite values.
    pub fn try_eval(&self, p: Point2) -> Result<Vec2> {
        let v = self.eval(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain { field: self.name.clone(), at: p })
        }
    }

    pub fn analytic_curl(&self, p: Point2) -> Option<f64> {
        self.curl.as_ref().map(|c| self.orientation.sign() * c(p))
    }

    pub fn analytic_div(&self, p: Point2) -> Option<f64> {
        self.div.as_ref().map(|d| self.orientation.sign() * d(p))
    }

    /// The same field flowing backward in time.
    pub fn reversed(&self) -> Self {
        let mut out = self.clone();
        out.orientation = self.orientation.flipped();
        out
    }

    /// λ·v for λ > 0; the flow curves are unchanged, only time is rescaled.
    pub fn scaled(&self, lambda: f64) -> Self {
        let inner = self.clone();
        let mut out = PlanarField::new(self.name.clone(), move |p| lambda * inner.eval(p));
        out.params = self.params.clone();
        out.params.insert("scale".into(), lambda);
        if self.curl.is_some() {
            let inner = self.clone();
            out.curl = Some(Arc::new(move |p| lambda * inner.analytic_curl(p).unwrap_or(f64::NAN)));
        }
        if self.div.is_some() {
            let inner = self.clone();
            out.div = Some(Arc::new(move |p| lambda * inner.analytic_div(p).unwrap_or(f64::NAN)));
        }
        out.speed_bounds = self.speed_bounds.map(|(a, b)| (lambda.abs() * a, lambda.abs() * b));
        out
    }
}

/// v⊥ = (−v₂, v₁). Curl and divergence carry over through
/// curl(v⊥) = div(v) and div(v⊥) = −curl(v).
pub fn perpendicular(f: &PlanarField) -> PlanarField {
    let inner = f.clone();
    let mut out = PlanarField::new(format!("{}_perp", f.name), move |p| inner.eval(p).perp());
    out.params = f.params.clone();
    out.speed_bounds = f.speed_bounds;
    if f.div.is_some() {
        let inner = f.clone();
        out.curl = Some(Arc::new(move |p| inner.analytic_div(p).unwrap_or(f64::NAN)));
    }
    if f.curl.is_some() {
        let inner = f.clone();
        out.div = Some(Arc::new(move |p| -inner.analytic_curl(p).unwrap_or(f64::NAN)));
    }
    out
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("difference step must be positive, got {h}")))
    }
}

/// Central-difference divergence, ignoring any analytic expression.
pub fn numeric_divergence(f: &PlanarField, p: Point2, h: f64) -> Result<f64> {
    check_step(h)?;
    let e = f.try_eval(Point2::new(p.x + h, p.y))?;
    let w = f.try_eval(Point2::new(p.x - h, p.y))?;
    let n = f.try_eval(Point2::new(p.x, p.y + h))?;
    let s = f.try_eval(Point2::new(p.x, p.y - h))?;
    Ok((e.u - w.u) / (2.0 * h) + (n.v - s.v) / (2.0 * h))
}

/// Central-difference curl ∂v₂/∂x − ∂v₁/∂y, ignoring any analytic expression.
pub fn numeric_curl(f: &PlanarField, p: Point2, h: f64) -> Result<f64> {
    check_step(h)?;
    let e = f.try_eval(Point2::new(p.x + h, p.y))?;
    let w = f.try_eval(Point2::new(p.x - h, p.y))?;
    let n = f.try_eval(Point2::new(p.x, p.y + h))?;
    let s = f.try_eval(Point2::new(p.x, p.y - h))?;
    Ok((e.v - w.v) / (2.0 * h) - (n.u - s.u) / (2.0 * h))
}

fn finite_or_domain(f: &PlanarField, p: Point2, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain { field: f.name.clone(), at: p })
    }
}

/// Divergence at `p`: analytic when the field carries it, else central differences with step `h`.
pub fn divergence(f: &PlanarField, p: Point2, h: f64) -> Result<f64> {
    check_step(h)?;
    match f.analytic_div(p) {
        Some(d) => finite_or_domain(f, p, d),
        None => numeric_divergence(f, p, h),
    }
}

/// Curl at `p`: analytic when available, else central differences with step `h`.
pub fn curl(f: &PlanarField, p: Point2, h: f64) -> Result<f64> {
    check_step(h)?;
    match f.analytic_curl(p) {
        Some(c) => finite_or_domain(f, p, c),
        None => numeric_curl(f, p, h),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundsMethod {
    Analytic,
    Sampled,
}

/// Speed bounds `c1 ≤ ‖v‖ ≤ c2` on a disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldBounds {
    pub c1: f64,
    pub c2: f64,
    pub method: BoundsMethod,
    pub sample_count: usize,
    pub domain: Disk,
    /// Winding number of the field direction along the boundary circle.
    /// Nonzero means the field has a zero inside the disk.
    pub winding: i32,
    /// The field (numerically) vanishes somewhere in the disk, so `c1 > 0` fails.
    pub vanishing: bool,
}

impl FieldBounds {
    pub fn ratio(&self) -> f64 {
        self.c2 / self.c1
    }

    /// Rejects fields that do not satisfy `c1 > 0` on the domain.
    pub fn require_positive(&self) -> Result<()> {
        if self.vanishing || !(self.c1 > 0.0) {
            Err(Error::HypothesisViolated(format!(
                "speed lower bound c1 = {:e} is not positive on the disk of radius {} at {} (winding {})",
                self.c1, self.domain.radius, self.domain.center, self.winding
            )))
        } else {
            Ok(())
        }
    }
}

/// Radical inverse of `index` in base `base` (Halton sequence coordinate).
pub fn radical_inverse(mut index: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut r = 0.0;
    while index > 0 {
        r += f * (index % base) as f64;
        index /= base;
        f *= inv;
    }
    r
}

/// `n` deterministic, area-uniform low-discrepancy points in the disk, starting with the center.
pub fn halton_disk(d: &Disk, n: usize) -> impl Iterator<Item = Point2> + '_ {
    (0..n as u64).map(move |k| {
        let r = d.radius * radical_inverse(k, 2).sqrt();
        let theta = 2.0 * PI * radical_inverse(k, 3);
        Point2::new(d.center.x + r * theta.cos(), d.center.y + r * theta.sin())
    })
}

const WINDING_SAMPLES: usize = 2048;
const VANISHING_RATIO: f64 = 1e-9;

/// Winding number of `f` along the circle bounding `d`.
pub fn boundary_winding(f: &PlanarField, d: &Disk) -> Result<i32> {
    let angle_at = |k: usize| -> Result<f64> {
        let theta = 2.0 * PI * k as f64 / WINDING_SAMPLES as f64;
        let p = Point2::new(d.center.x + d.radius * theta.cos(), d.center.y + d.radius * theta.sin());
        let v = f.try_eval(p)?;
        Ok(v.v.atan2(v.u))
    };
    let first = angle_at(0)?;
    let mut prev = first;
    let mut total = 0.0;
    for k in 1..=WINDING_SAMPLES {
        let a = if k == WINDING_SAMPLES { first } else { angle_at(k)? };
        let mut delta = a - prev;
        while delta > PI {
            delta -= 2.0 * PI;
        }
        while delta <= -PI {
            delta += 2.0 * PI;
        }
        total += delta;
        prev = a;
    }
    Ok((total / (2.0 * PI)).round() as i32)
}

/// Estimates `c1, c2` on `d`.
///
/// Fields with closed-form bounds report them directly. Otherwise the speed
/// is sampled at `n` Halton points and the extremes are widened by
/// [`SAMPLED_BOUNDS_MARGIN`] on each side.
pub fn estimate_bounds(f: &PlanarField, d: &Disk, n: usize) -> Result<FieldBounds> {
    if n < 100 {
        return Err(Error::invalid(format!("bounds estimation needs at least 100 samples, got {n}")));
    }
    if let Some((c1, c2)) = f.speed_bounds() {
        return Ok(FieldBounds {
            c1,
            c2,
            method: BoundsMethod::Analytic,
            sample_count: 0,
            domain: *d,
            winding: 0,
            vanishing: !(c1 > 0.0),
        });
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0_f64;
    for p in halton_disk(d, n) {
        let s = f.try_eval(p)?.norm();
        lo = lo.min(s);
        hi = hi.max(s);
    }
    let winding = boundary_winding(f, d)?;
    let vanishing = winding != 0 || lo <= VANISHING_RATIO * hi;
    Ok(FieldBounds {
        c1: lo * (1.0 - SAMPLED_BOUNDS_MARGIN),
        c2: hi * (1.0 + SAMPLED_BOUNDS_MARGIN),
        method: BoundsMethod::Sampled,
        sample_count: n,
        domain: *d,
        winding,
        vanishing,
    })
}

const COVERAGE_SUBSAMPLES: usize = 8;

/// Midpoint-rule quadrature of |curl f| over `d` on a `resolution²` grid
/// covering the bounding square. Cells cut by the circle are weighted by
/// their covered fraction.
pub fn curl_integral(f: &PlanarField, d: &Disk, resolution: usize) -> Result<f64> {
    if resolution < 64 {
        return Err(Error::invalid(format!("curl quadrature needs resolution ≥ 64, got {resolution}")));
    }
    let h = 2.0 * d.radius / resolution as f64;
    let x0 = d.center.x - d.radius;
    let y0 = d.center.y - d.radius;
    let half_diag = h * std::f64::consts::FRAC_1_SQRT_2;
    let mut total = 0.0;
    for j in 0..resolution {
        let mut row = 0.0;
        let cy = y0 + (j as f64 + 0.5) * h;
        for i in 0..resolution {
            let cx = x0 + (i as f64 + 0.5) * h;
            let c = Point2::new(cx, cy);
            let r = c.distance(d.center);
            let weight = if r + half_diag <= d.radius {
                1.0
            } else if r - half_diag >= d.radius {
                0.0
            } else {
                cell_coverage(d, cx - 0.5 * h, cy - 0.5 * h, h)
            };
            if weight > 0.0 {
                row += weight * curl(f, c, FD_STEP)?.abs();
            }
        }
        total += row;
    }
    Ok(total * h * h)
}

/// Fraction of the square cell `[x, x+h]×[y, y+h]` inside `d`, by subsampling.
pub(crate) fn cell_coverage(d: &Disk, x: f64, y: f64, h: f64) -> f64 {
    let m = COVERAGE_SUBSAMPLES;
    let step = h / m as f64;
    let mut inside = 0usize;
    for a in 0..m {
        for b in 0..m {
            let p = Point2::new(x + (a as f64 + 0.5) * step, y + (b as f64 + 0.5) * step);
            if d.contains(p) {
                inside += 1;
            }
        }
    }
    inside as f64 / (m * m) as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins::{const_field, rotation, vn_field};
    use approx::assert_abs_diff_eq;

    fn linear() -> PlanarField {
        PlanarField::new("linear", |p| Vec2::new(p.x, p.y))
    }

    #[test]
    fn perpendicular_of_constant_and_rotation() {
        let c = perpendicular(&const_field(1.0, 0.0));
        assert_eq!(c.eval(Point2::new(3.0, -2.0)), Vec2::new(-0.0, 1.0));
        let r = perpendicular(&rotation());
        assert_eq!(r.eval(Point2::new(1.0, 0.0)), Vec2::new(-1.0, 0.0));
        assert!(r.name().ends_with("_perp"));
    }

    #[test]
    fn double_perpendicular_negates() {
        let f = const_field(1.0, 0.0);
        let pp = perpendicular(&perpendicular(&f));
        let v = pp.eval(Point2::new(0.3, 0.1));
        assert_eq!((v.u, v.v), (-1.0, -0.0));
    }

    #[test]
    fn divergence_examples() {
        let p = Point2::new(0.3, 0.7);
        assert_abs_diff_eq!(numeric_divergence(&vn_field(8.0), p, 1e-4).unwrap(), 0.0, epsilon = 1e-6);
        assert_abs_diff_eq!(divergence(&linear(), Point2::new(-0.4, 2.0), 1e-4).unwrap(), 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(divergence(&rotation(), Point2::new(0.5, 0.5), 1e-4).unwrap(), 0.0, epsilon = 1e-6);
    }

    #[test]
    fn curl_examples() {
        assert_abs_diff_eq!(curl(&rotation(), Point2::new(0.2, -3.0), 1e-4).unwrap(), 2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(curl(&const_field(1.0, 0.0), Point2::new(0.2, 0.0), 1e-4).unwrap(), 0.0, epsilon = 1e-6);
        // −(N²/2)·sin(N·x) at N = 8, x = 0.2, closed form evaluated in mpmath.
        let vn = vn_field(8.0);
        let p = Point2::new(0.2, 0.0);
        assert_abs_diff_eq!(curl(&vn, p, 1e-4).unwrap(), -31.986355297328165, epsilon = 1e-3);
        assert_abs_diff_eq!(numeric_curl(&vn, p, 1e-4).unwrap(), -31.986355297328165, epsilon = 1e-3);
    }

    #[test]
    fn invalid_step_is_rejected() {
        assert!(divergence(&rotation(), Point2::ORIGIN, 0.0).is_err());
        assert!(curl(&rotation(), Point2::ORIGIN, -1.0).is_err());
    }

    #[test]
    fn domain_error_on_nan() {
        let f = PlanarField::new("bad", |p| Vec2::new(p.x.sqrt(), 0.0));
        assert!(matches!(numeric_divergence(&f, Point2::new(-1.0, 0.0), 1e-3), Err(Error::Domain { .. })));
    }

    #[test]
    fn duality_of_div_and_curl() {
        let f = vn_field(8.0);
        let fp = perpendicular(&f);
        for k in 0..50 {
            let p = Point2::new(radical_inverse(k, 2) - 0.5, radical_inverse(k, 3) - 0.5);
            let div = divergence(&f, p, 1e-4).unwrap();
            assert_abs_diff_eq!(curl(&fp, p, 1e-4).unwrap(), div, epsilon = 1e-9);
            let div_num = numeric_divergence(&f, p, 1e-4).unwrap();
            let curl_num = numeric_curl(&fp, p, 1e-4).unwrap();
            assert_abs_diff_eq!(div_num, curl_num, epsilon = 1e-6);
        }
    }

    #[test]
    fn bounds_examples() {
        let b = estimate_bounds(&vn_field(8.0), &Disk::unit(Point2::ORIGIN), 10_000).unwrap();
        assert_eq!(b.method, BoundsMethod::Analytic);
        assert_eq!(b.c1, 1.0);
        assert_abs_diff_eq!(b.c2, 17f64.sqrt(), epsilon = 1e-12);

        let b = estimate_bounds(&const_field(1.0, 0.0), &Disk::unit(Point2::ORIGIN), 100).unwrap();
        assert_eq!((b.c1, b.c2), (1.0, 1.0));

        assert!(estimate_bounds(&rotation(), &Disk::unit(Point2::ORIGIN), 99).is_err());
    }

    #[test]
    fn rotation_bounds_flag_the_zero() {
        let d = Disk::new(Point2::new(0.5, 0.0), 1.0).unwrap();
        let coarse = estimate_bounds(&rotation(), &d, 1_000).unwrap();
        let fine = estimate_bounds(&rotation(), &d, 100_000).unwrap();
        assert_eq!(fine.method, BoundsMethod::Sampled);
        assert!(fine.vanishing);
        assert_eq!(fine.winding, 1);
        assert!(fine.c1 <= coarse.c1);
        assert!(fine.c1 < 5e-3, "min sampled speed should approach 0, got {}", fine.c1);
        assert!(fine.require_positive().is_err());
    }

    #[test]
    fn sampled_bounds_enclose_samples() {
        let f = PlanarField::new("wavy", |p| Vec2::new(1.0 + 0.3 * p.y.sin(), 0.2 * p.x.cos()));
        let d = Disk::unit(Point2::new(0.1, -0.2));
        let b = estimate_bounds(&f, &d, 2_000).unwrap();
        assert!(!b.vanishing);
        for p in halton_disk(&d, 2_000) {
            let s = f.eval(p).norm();
            assert!(b.c1 <= s && s <= b.c2);
        }
    }

    #[test]
    fn curl_integral_examples() {
        let d = Disk::unit(Point2::ORIGIN);
        assert_abs_diff_eq!(curl_integral(&const_field(1.0, 0.0), &d, 64).unwrap(), 0.0, epsilon = 1e-9);
        let rot = curl_integral(&rotation(), &d, 256).unwrap();
        assert!((rot - 2.0 * PI).abs() / (2.0 * PI) < 0.01, "{rot}");
        // (N²/2)·∫_𝔻|sin(8x)|, adaptive quadrature in mpmath.
        let vn = curl_integral(&vn_field(8.0), &d, 256).unwrap();
        assert!((vn - 63.532454211941254).abs() / 63.532454211941254 < 0.02, "{vn}");
        assert!(curl_integral(&rotation(), &d, 32).is_err());
    }

    #[test]
    fn reversed_and_scaled() {
        let f = vn_field(4.0);
        let p = Point2::new(0.3, 0.2);
        assert_eq!(f.reversed().eval(p), -f.eval(p));
        assert_eq!(f.reversed().analytic_curl(p).unwrap(), -f.analytic_curl(p).unwrap());
        let s = f.scaled(10.0);
        assert_abs_diff_eq!(s.eval(p).u, 10.0 * f.eval(p).u, epsilon = 1e-12);
        assert_eq!(s.speed_bounds(), Some((10.0, 10.0 * 5f64.sqrt())));
    }
}
