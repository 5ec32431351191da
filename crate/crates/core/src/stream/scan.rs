//! Scans over many levels: the coarea comparison and the search for a short level.

use std::f64::consts::PI;

use serde::Serialize;

use super::contour::{extract_level_set, level_lengths};
use super::ScalarGrid;
use crate::error::{Error, Result};
use crate::field::{cell_coverage, FieldBounds};
use crate::geometry::Disk;

/// Number of levels in the short-level scan.
pub const SCAN_LEVELS: usize = 512;
const GOLDEN: f64 = 0.618_033_988_749_894_9;
const REFINE_ITERS: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoareaReport {
    /// Trapezoid sum of level lengths over the value range.
    pub lhs: f64,
    /// Quadrature of `|∇A|` over the disk.
    pub rhs: f64,
    pub rel_err: f64,
    pub n_levels: usize,
    pub level_min: f64,
    pub level_max: f64,
}

/// Compares `∫ length(A = t) dt` with `∫_clip |∇A|`.
pub fn coarea_check(g: &ScalarGrid, clip: &Disk, n_levels: usize) -> Result<CoareaReport> {
    if n_levels < 32 {
        return Err(Error::invalid(format!("coarea check needs at least 32 levels, got {n_levels}")));
    }
    let h = g.spacing();
    let (lo, hi) = g.range_within(clip, 2.0 * h);
    let lhs = if hi > lo {
        let dt = (hi - lo) / (n_levels - 1) as f64;
        let levels: Vec<f64> = (0..n_levels).map(|k| lo + k as f64 * dt).collect();
        let lengths = level_lengths(g, &levels, clip);
        let inner: f64 = lengths[1..n_levels - 1].iter().sum();
        dt * (inner + 0.5 * (lengths[0] + lengths[n_levels - 1]))
    } else {
        0.0
    };

    let half_diag = h * std::f64::consts::FRAC_1_SQRT_2;
    let mut rhs = 0.0;
    for j in 1..g.ny() - 1 {
        for i in 1..g.nx() - 1 {
            let p = g.node(i, j);
            let r = p.distance(clip.center);
            let weight = if r + half_diag <= clip.radius {
                1.0
            } else if r - half_diag >= clip.radius {
                continue;
            } else {
                cell_coverage(clip, p.x - 0.5 * h, p.y - 0.5 * h, h)
            };
            let gx = (g.value(i + 1, j) - g.value(i - 1, j)) / (2.0 * h);
            let gy = (g.value(i, j + 1) - g.value(i, j - 1)) / (2.0 * h);
            rhs += weight * gx.hypot(gy);
        }
    }
    rhs *= h * h;
    let rel_err = if rhs > 0.0 { (lhs - rhs).abs() / rhs } else { f64::INFINITY };
    Ok(CoareaReport { lhs, rhs, rel_err, n_levels, level_min: lo, level_max: hi })
}

/// Uniformly spaced levels and their clipped lengths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelScan {
    pub levels: Vec<f64>,
    pub lengths: Vec<f64>,
    /// Half-width of the scanned range.
    pub z: f64,
    pub signed: bool,
}

impl LevelScan {
    /// Scan indices from shortest to longest, ties broken toward levels near 0.
    pub fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.levels.len()).collect();
        idx.sort_by(|&a, &b| {
            self.lengths[a]
                .total_cmp(&self.lengths[b])
                .then(self.levels[a].abs().total_cmp(&self.levels[b].abs()))
                .then(a.cmp(&b))
        });
        idx
    }
}

/// Scan range half-width `z = R·√(π c1 c2)` for a clip disk of radius `R`,
/// halved in signed mode.
pub fn scan_half_width(bounds: &FieldBounds, clip: &Disk, signed: bool) -> f64 {
    let z = clip.radius * (PI * bounds.c1 * bounds.c2).sqrt();
    if signed {
        0.5 * z
    } else {
        z
    }
}

/// Level lengths on `(0, z]` (unsigned) or `[−z, z]` (signed).
pub fn scan_levels(g: &ScalarGrid, bounds: &FieldBounds, clip: &Disk, signed: bool) -> Result<LevelScan> {
    bounds.require_positive()?;
    let z = scan_half_width(bounds, clip, signed);
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Degenerate);
    }
    let levels: Vec<f64> = if signed {
        (0..=SCAN_LEVELS).map(|k| -z + 2.0 * z * k as f64 / SCAN_LEVELS as f64).collect()
    } else {
        (1..=SCAN_LEVELS).map(|k| z * k as f64 / SCAN_LEVELS as f64).collect()
    };
    let lengths = level_lengths(g, &levels, clip);
    if lengths.iter().any(|l| !l.is_finite()) {
        return Err(Error::Degenerate);
    }
    Ok(LevelScan { levels, lengths, z, signed })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShortLevel {
    pub t0: f64,
    pub length: f64,
    /// Half-width of the scanned range.
    pub z: f64,
    pub signed: bool,
}

/// Shortest level around scan index `k`, refined by golden-section search
/// between its neighbours when the level is nonempty.
pub fn refine_level(g: &ScalarGrid, scan: &LevelScan, k: usize, clip: &Disk) -> ShortLevel {
    let (t, len) = (scan.levels[k], scan.lengths[k]);
    let base = ShortLevel { t0: t, length: len, z: scan.z, signed: scan.signed };
    if len == 0.0 {
        return base;
    }
    let length_at = |t: f64| extract_level_set(g, t, clip).hausdorff_length;
    let mut a = if k > 0 { scan.levels[k - 1] } else { t };
    let mut b = if k + 1 < scan.levels.len() { scan.levels[k + 1] } else { t };
    if !scan.signed {
        a = a.max(f64::MIN_POSITIVE);
    }
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (length_at(x1), length_at(x2));
    let mut best = base;
    for _ in 0..REFINE_ITERS {
        if f1 < best.length {
            best = ShortLevel { t0: x1, length: f1, ..best };
        }
        if f2 < best.length {
            best = ShortLevel { t0: x2, length: f2, ..best };
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = length_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = length_at(x2);
        }
    }
    best
}

/// Level `t0` in the scan range with the smallest clipped length.
///
/// Empty levels win outright, the one nearest 0 first.
pub fn find_short_level(g: &ScalarGrid, bounds: &FieldBounds, clip: &Disk, signed: bool) -> Result<ShortLevel> {
    let scan = scan_levels(g, bounds, clip, signed)?;
    let k = scan.ranked()[0];
    Ok(refine_level(g, &scan, k, clip))
}
