//! Stream function `A` with `∇A = v⊥` on a square grid, its level sets and
//! the level-length scans built on them.

mod contour;
mod scan;

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::PlanarField;
use crate::geometry::{Disk, Point2, Vec2};

pub use contour::{extract_level_set, level_lengths, LevelSet};
pub use scan::{coarea_check, find_short_level, refine_level, scan_half_width, scan_levels, CoareaReport, LevelScan, ShortLevel, SCAN_LEVELS};

/// Closure errors above `CLOSURE_FACTOR · c2 · radius` reject the field as compressible.
pub const CLOSURE_FACTOR: f64 = 1e-4;
const SIMPSON_TOL: f64 = 1e-10;
const SIMPSON_DEPTH: u32 = 24;
const PADDING_CELLS: f64 = 2.0;

/// Node values on a uniform grid. Row `j` holds nodes with `y = origin.y + j·h`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalarGrid {
    origin: Point2,
    h: f64,
    nx: usize,
    ny: usize,
    #[serde(skip)]
    values: Vec<f64>,
    base_point: Point2,
    closure_error: f64,
}

impl ScalarGrid {
    /// Grid sampling `value` at every node. Used for analytic potentials.
    pub fn from_fn(origin: Point2, h: f64, nx: usize, ny: usize, value: impl Fn(Point2) -> f64) -> Result<Self> {
        if !(h > 0.0) || nx < 2 || ny < 2 {
            return Err(Error::invalid("grid needs h > 0 and at least 2×2 nodes"));
        }
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                values.push(value(Point2::new(origin.x + i as f64 * h, origin.y + j as f64 * h)));
            }
        }
        Ok(Self { origin, h, nx, ny, values, base_point: origin, closure_error: 0.0 })
    }

    /// Node-aligned grid covering `d` padded by two cells, with `anchor` on a node.
    pub fn covering(d: &Disk, h: f64, anchor: Point2, value: impl Fn(Point2) -> f64) -> Result<Self> {
        let (origin, nx, ny) = layout(d, h, anchor);
        let mut g = Self::from_fn(origin, h, nx, ny, value)?;
        g.base_point = anchor;
        Ok(g)
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn base_point(&self) -> Point2 {
        self.base_point
    }

    pub fn closure_error(&self) -> f64 {
        self.closure_error
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.nx + i]
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> Point2 {
        Point2::new(self.origin.x + i as f64 * self.h, self.origin.y + j as f64 * self.h)
    }

    /// Node index nearest to `p`, if inside the grid.
    pub fn nearest_node(&self, p: Point2) -> Option<(usize, usize)> {
        let i = ((p.x - self.origin.x) / self.h).round();
        let j = ((p.y - self.origin.y) / self.h).round();
        if i >= 0.0 && j >= 0.0 && (i as usize) < self.nx && (j as usize) < self.ny {
            Some((i as usize, j as usize))
        } else {
            None
        }
    }

    /// Smallest and largest node value among nodes within `d` padded by `pad`.
    pub fn range_within(&self, d: &Disk, pad: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..self.ny {
            for i in 0..self.nx {
                if self.node(i, j).distance(d.center) <= d.radius + pad {
                    let v = self.value(i, j);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
        }
        (lo, hi)
    }

    /// Bicubic (Keys) interpolation, clamped at the grid boundary.
    pub fn interpolate(&self, p: Point2) -> f64 {
        let (ix, wx) = self.stencil(p.x, self.origin.x, self.nx);
        let (iy, wy) = self.stencil(p.y, self.origin.y, self.ny);
        let mut total = 0.0;
        for (b, &wyb) in wy.iter().enumerate() {
            let row = iy[b] * self.nx;
            let mut acc = 0.0;
            for (a, &wxa) in wx.iter().enumerate() {
                acc += wxa * self.values[row + ix[a]];
            }
            total += wyb * acc;
        }
        total
    }

    fn stencil(&self, coord: f64, origin: f64, n: usize) -> ([usize; 4], [f64; 4]) {
        let f = (coord - origin) / self.h;
        let base = f.floor();
        let t = f - base;
        let base = base as i64;
        let clamp = |k: i64| k.clamp(0, n as i64 - 1) as usize;
        (
            [clamp(base - 1), clamp(base), clamp(base + 1), clamp(base + 2)],
            [keys(t + 1.0), keys(t), keys(1.0 - t), keys(2.0 - t)],
        )
    }

    /// Header line `streamgrid v1 nx ny h ox oy`, then one row of values per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "streamgrid v1 {} {} {:e} {:e} {:e}", self.nx, self.ny, self.h, self.origin.x, self.origin.y);
        for row in self.values.chunks(self.nx) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let bad = |m: &str| Error::invalid(format!("streamgrid: {m}"));
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty input"))?.split_whitespace().collect();
        if header.len() != 7 || header[0] != "streamgrid" || header[1] != "v1" {
            return Err(bad("bad header"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("bad number"));
        let count = |s: &str| s.parse::<usize>().map_err(|_| bad("bad size"));
        let (nx, ny) = (count(header[2])?, count(header[3])?);
        let (h, ox, oy) = (num(header[4])?, num(header[5])?, num(header[6])?);
        let mut values = Vec::with_capacity(nx * ny);
        for line in lines.by_ref().take(ny) {
            let row: Vec<f64> = line.split_whitespace().map(num).collect::<Result<_>>()?;
            if row.len() != nx {
                return Err(bad("row length mismatch"));
            }
            values.extend(row);
        }
        if values.len() != nx * ny {
            return Err(bad("missing rows"));
        }
        let origin = Point2::new(ox, oy);
        Ok(Self { origin, h, nx, ny, values, base_point: origin, closure_error: 0.0 })
    }
}

/// Keys cubic convolution kernel with `a = −1/2`.
fn keys(x: f64) -> f64 {
    let x = x.abs();
    if x <= 1.0 {
        (1.5 * x - 2.5) * x * x + 1.0
    } else if x < 2.0 {
        ((-0.5 * x + 2.5) * x - 4.0) * x + 2.0
    } else {
        0.0
    }
}

fn layout(d: &Disk, h: f64, anchor: Point2) -> (Point2, usize, usize) {
    let pad = d.radius + PADDING_CELLS * h;
    let i0 = ((d.center.x - pad - anchor.x) / h).floor();
    let i1 = ((d.center.x + pad - anchor.x) / h).ceil();
    let j0 = ((d.center.y - pad - anchor.y) / h).floor();
    let j1 = ((d.center.y + pad - anchor.y) / h).ceil();
    let origin = Point2::new(anchor.x + i0 * h, anchor.y + j0 * h);
    (origin, (i1 - i0) as usize + 1, (j1 - j0) as usize + 1)
}

/// Integrals of `g` over the `values.len() − 1` consecutive edges of length `h`
/// starting at `start`, where `values` holds `g` at the edge ends.
///
/// Each pair of edges is first checked against the Simpson rule over their
/// union, which needs no extra evaluations; pairs that disagree are refined
/// edge by edge.
fn integrate_line(g: &impl Fn(f64) -> f64, start: f64, h: f64, values: &[f64]) -> Vec<f64> {
    let n = values.len().saturating_sub(1);
    let at = |i: usize| start + i as f64 * h;
    let mids: Vec<f64> = (0..n).map(|i| g(at(i) + 0.5 * h)).collect();
    let panel = |i: usize| h / 6.0 * (values[i] + 4.0 * mids[i] + values[i + 1]);
    let refine = |i: usize| simpson_rec(g, at(i), at(i + 1), values[i], mids[i], values[i + 1], panel(i), SIMPSON_TOL, SIMPSON_DEPTH);
    let mut out = vec![0.0; n];
    let mut i = 0;
    while i < n {
        if i + 1 < n {
            let (left, right) = (panel(i), panel(i + 1));
            let whole = 2.0 * h / 6.0 * (values[i] + 4.0 * values[i + 1] + values[i + 2]);
            let delta = left + right - whole;
            if delta.abs() <= 15.0 * SIMPSON_TOL {
                out[i] = left;
                out[i + 1] = right;
            } else {
                out[i] = refine(i);
                out[i + 1] = refine(i + 1);
            }
            i += 2;
        } else {
            out[i] = refine(i);
            i += 1;
        }
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(g: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (g(lm), g(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol || !delta.is_finite() {
        return left + right + delta / 15.0;
    }
    simpson_rec(g, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson_rec(g, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Integrates `v⊥ · dr` from `base` to every node of a grid covering `d`.
///
/// Edge integrals use adaptive Simpson. Each node value is the mean of the
/// row-first and the column-first staircase path from `base`, and the
/// largest gap between the two is kept as the closure error.
pub fn compute_stream_function(f: &PlanarField, d: &Disk, h: f64, base: Point2) -> Result<ScalarGrid> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid("grid spacing must be positive"));
    }
    if h > d.radius / 32.0 {
        return Err(Error::invalid(format!("grid spacing {h} exceeds radius/32 = {}", d.radius / 32.0)));
    }
    if base.distance(d.center) > d.radius {
        return Err(Error::invalid(format!("base point {base} lies outside the disk")));
    }
    let (origin, nx, ny) = layout(d, h, base);
    let node = |i: usize, j: usize| Point2::new(origin.x + i as f64 * h, origin.y + j as f64 * h);
    let eval = |p: Point2| -> Result<Vec2> { f.try_eval(p) };

    let mut at_nodes = Vec::with_capacity(nx * ny);
    let mut c2 = 0.0_f64;
    for j in 0..ny {
        for i in 0..nx {
            let p = node(i, j);
            let v = eval(p)?;
            if p.distance(d.center) <= d.radius + PADDING_CELLS * h {
                c2 = c2.max(v.norm());
            }
            at_nodes.push(v);
        }
    }

    // v⊥ = (−v₂, v₁); horizontal edges integrate −v₂ dx, vertical edges v₁ dy.
    let mut horizontal = vec![0.0; nx * ny];
    let mut vertical = vec![0.0; nx * ny];
    let mut line = Vec::with_capacity(nx.max(ny));
    for j in 0..ny {
        let y = origin.y + j as f64 * h;
        let g = |x: f64| {
            let v = f.eval(Point2::new(x, y));
            if v.is_finite() {
                -v.v
            } else {
                f64::NAN
            }
        };
        line.clear();
        line.extend((0..nx).map(|i| -at_nodes[j * nx + i].v));
        let edges = integrate_line(&g, origin.x, h, &line);
        horizontal[j * nx..j * nx + nx - 1].copy_from_slice(&edges);
    }
    for i in 0..nx {
        let x = origin.x + i as f64 * h;
        let g = |y: f64| {
            let v = f.eval(Point2::new(x, y));
            if v.is_finite() {
                v.u
            } else {
                f64::NAN
            }
        };
        line.clear();
        line.extend((0..ny).map(|j| at_nodes[j * nx + i].u));
        for (j, e) in integrate_line(&g, origin.y, h, &line).into_iter().enumerate() {
            vertical[j * nx + i] = e;
        }
    }
    let bad = (0..nx * ny).find(|&k| !(horizontal[k].is_finite() && vertical[k].is_finite())).map(|k| node(k % nx, k / nx));
    if let Some(at) = bad {
        return Err(Error::Domain { field: f.name().to_string(), at });
    }

    // Prefix sums: row_cum[j][i] = ∫ along row j from column 0 to i, col_cum[i][j] likewise.
    let mut row_cum = vec![0.0; nx * ny];
    for j in 0..ny {
        for i in 1..nx {
            row_cum[j * nx + i] = row_cum[j * nx + i - 1] + horizontal[j * nx + i - 1];
        }
    }
    let mut col_cum = vec![0.0; nx * ny];
    for i in 0..nx {
        for j in 1..ny {
            col_cum[j * nx + i] = col_cum[(j - 1) * nx + i] + vertical[(j - 1) * nx + i];
        }
    }
    let ib = ((base.x - origin.x) / h).round() as usize;
    let jb = ((base.y - origin.y) / h).round() as usize;
    let mut values = vec![0.0; nx * ny];
    let mut closure = 0.0_f64;
    for j in 0..ny {
        for i in 0..nx {
            let row_first = (row_cum[jb * nx + i] - row_cum[jb * nx + ib]) + (col_cum[j * nx + i] - col_cum[jb * nx + i]);
            let col_first = (col_cum[j * nx + ib] - col_cum[jb * nx + ib]) + (row_cum[j * nx + i] - row_cum[j * nx + ib]);
            closure = closure.max((row_first - col_first).abs());
            values[j * nx + i] = 0.5 * (row_first + col_first);
        }
    }
    let tolerance = CLOSURE_FACTOR * c2 * d.radius;
    if closure > tolerance {
        return Err(Error::NotIncompressible { closure, tolerance });
    }
    Ok(ScalarGrid { origin, h, nx, ny, values, base_point: base, closure_error: closure })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientCheck {
    pub max_error: f64,
    /// `max_error / h²`.
    pub constant: f64,
    pub nodes: usize,
}

/// Compares centered differences of the grid against `v⊥` at interior nodes inside `d`.
pub fn gradient_check(g: &ScalarGrid, f: &PlanarField, d: &Disk) -> GradientCheck {
    let h = g.h;
    let mut max_error = 0.0_f64;
    let mut nodes = 0;
    for j in 1..g.ny - 1 {
        for i in 1..g.nx - 1 {
            let p = g.node(i, j);
            if !d.contains(p) {
                continue;
            }
            let gx = (g.value(i + 1, j) - g.value(i - 1, j)) / (2.0 * h);
            let gy = (g.value(i, j + 1) - g.value(i, j - 1)) / (2.0 * h);
            let perp = f.eval(p).perp();
            max_error = max_error.max((gx - perp.u).abs().max((gy - perp.v).abs()));
            nodes += 1;
        }
    }
    GradientCheck { max_error, constant: max_error / (h * h), nodes }
}
