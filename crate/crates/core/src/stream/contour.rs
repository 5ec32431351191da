//! Marching squares with exact clipping against the disk.

use std::collections::HashMap;

use serde::Serialize;

use super::ScalarGrid;
use crate::geometry::{Disk, Point2};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSet {
    pub level: f64,
    pub polylines: Vec<Vec<Point2>>,
    pub clip: Disk,
    pub hausdorff_length: f64,
}

impl LevelSet {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }
}

/// Endpoint identity used to chain segments: a grid edge, or a clip point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Key {
    Edge(usize),
    Clip(usize),
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: Point2,
    b: Point2,
    ka: Key,
    kb: Key,
}

/// How a cell sits relative to the clip circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cover {
    Outside,
    Inside,
    Cut,
}

fn cover(g: &ScalarGrid, clip: &Disk, i: usize, j: usize) -> Cover {
    let (p0, p1) = (g.node(i, j), g.node(i + 1, j + 1));
    let c = clip.center;
    let nx = c.x.clamp(p0.x, p1.x);
    let ny = c.y.clamp(p0.y, p1.y);
    if Point2::new(nx, ny).distance(c) > clip.radius {
        return Cover::Outside;
    }
    let fx = if (c.x - p0.x).abs() > (c.x - p1.x).abs() { p0.x } else { p1.x };
    let fy = if (c.y - p0.y).abs() > (c.y - p1.y).abs() { p0.y } else { p1.y };
    if Point2::new(fx, fy).distance(c) <= clip.radius {
        Cover::Inside
    } else {
        Cover::Cut
    }
}

/// Portion `[u0, u1]` of the segment `a→b` inside the disk.
fn clip_segment(a: Point2, b: Point2, clip: &Disk) -> Option<(f64, f64)> {
    let d = b - a;
    let m = a - clip.center;
    let qa = d.dot(d);
    let qb = 2.0 * d.dot(m);
    let qc = m.dot(m) - clip.radius * clip.radius;
    if qa == 0.0 {
        return if qc <= 0.0 { Some((0.0, 1.0)) } else { None };
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let (r1, r2) = ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa));
    let (u0, u1) = (r1.max(0.0), r2.min(1.0));
    if u0 < u1 {
        Some((u0, u1))
    } else {
        None
    }
}

/// Calls `emit` with each contour segment of cell `(i, j)` at level `t`,
/// before clipping. Endpoints carry global edge ids.
#[inline]
fn cell_segments(g: &ScalarGrid, i: usize, j: usize, t: f64, mut emit: impl FnMut(Point2, usize, Point2, usize)) {
    let nx = g.nx;
    let v = [g.value(i, j), g.value(i + 1, j), g.value(i + 1, j + 1), g.value(i, j + 1)];
    let above = [v[0] > t, v[1] > t, v[2] > t, v[3] > t];
    let mask = above[0] as u8 | (above[1] as u8) << 1 | (above[2] as u8) << 2 | (above[3] as u8) << 3;
    if mask == 0 || mask == 15 {
        return;
    }
    // Edges: 0 bottom, 1 right, 2 top, 3 left, each oriented from its lower-index node.
    let ids = [2 * (j * nx + i), 2 * (j * nx + i + 1) + 1, 2 * ((j + 1) * nx + i), 2 * (j * nx + i) + 1];
    let ends = [(0, 1), (1, 2), (3, 2), (0, 3)];
    let corner = |k: usize| match k {
        0 => g.node(i, j),
        1 => g.node(i + 1, j),
        2 => g.node(i + 1, j + 1),
        _ => g.node(i, j + 1),
    };
    let point = |e: usize| {
        let (a, b) = ends[e];
        let lambda = (t - v[a]) / (v[b] - v[a]);
        corner(a).lerp(corner(b), lambda)
    };
    let mut seg = |e1: usize, e2: usize| emit(point(e1), ids[e1], point(e2), ids[e2]);
    match mask {
        1 | 14 => seg(3, 0),
        2 | 13 => seg(0, 1),
        3 | 12 => seg(3, 1),
        4 | 11 => seg(1, 2),
        6 | 9 => seg(0, 2),
        7 | 8 => seg(3, 2),
        5 | 10 => {
            let centre_above = 0.25 * (v[0] + v[1] + v[2] + v[3]) > t;
            // Corners 0 and 2 share a side when mask is 5; 1 and 3 when mask is 10.
            let diagonal_02 = mask == 5;
            if diagonal_02 == centre_above {
                seg(0, 1);
                seg(2, 3);
            } else {
                seg(3, 0);
                seg(1, 2);
            }
        }
        _ => unreachable!(),
    }
}

/// Clips a segment and passes on whatever remains inside the disk.
#[inline]
fn clipped(cov: Cover, clip: &Disk, a: Point2, b: Point2) -> Option<(Point2, bool, Point2, bool)> {
    if cov == Cover::Inside {
        return Some((a, false, b, false));
    }
    let (u0, u1) = clip_segment(a, b, clip)?;
    let pa = if u0 > 0.0 { a.lerp(b, u0) } else { a };
    let pb = if u1 < 1.0 { a.lerp(b, u1) } else { b };
    Some((pa, u0 > 0.0, pb, u1 < 1.0))
}

/// Level set `A = t` inside `clip`, chained into polylines.
pub fn extract_level_set(g: &ScalarGrid, t: f64, clip: &Disk) -> LevelSet {
    let mut segments: Vec<Segment> = Vec::new();
    if t.is_finite() {
        for j in 0..g.ny - 1 {
            for i in 0..g.nx - 1 {
                let cov = cover(g, clip, i, j);
                if cov == Cover::Outside {
                    continue;
                }
                cell_segments(g, i, j, t, |a, ea, b, eb| {
                    if let Some((pa, ca, pb, cb)) = clipped(cov, clip, a, b) {
                        let n = segments.len();
                        let ka = if ca { Key::Clip(2 * n) } else { Key::Edge(ea) };
                        let kb = if cb { Key::Clip(2 * n + 1) } else { Key::Edge(eb) };
                        segments.push(Segment { a: pa, b: pb, ka, kb });
                    }
                });
            }
        }
    }
    let hausdorff_length = segments.iter().map(|s| s.a.distance(s.b)).sum();
    LevelSet { level: t, polylines: chain(&segments), clip: *clip, hausdorff_length }
}

fn chain(segments: &[Segment]) -> Vec<Vec<Point2>> {
    let mut by_key: HashMap<Key, Vec<(usize, bool)>> = HashMap::new();
    for (n, s) in segments.iter().enumerate() {
        by_key.entry(s.ka).or_default().push((n, false));
        by_key.entry(s.kb).or_default().push((n, true));
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    // Follows the chain leaving through `key`, appending far endpoints.
    let walk = |mut key: Key, used: &mut Vec<bool>, line: &mut Vec<Point2>| loop {
        let next = by_key.get(&key).and_then(|list| list.iter().find(|(n, _)| !used[*n]).copied());
        let Some((n, at_b)) = next else { break };
        used[n] = true;
        let s = segments[n];
        let (far, far_key) = if at_b { (s.a, s.ka) } else { (s.b, s.kb) };
        line.push(far);
        key = far_key;
    };
    for n in 0..segments.len() {
        if used[n] {
            continue;
        }
        used[n] = true;
        let s = segments[n];
        let mut forward = vec![s.a, s.b];
        walk(s.kb, &mut used, &mut forward);
        let mut backward = Vec::new();
        walk(s.ka, &mut used, &mut backward);
        backward.reverse();
        backward.extend(forward);
        out.push(backward);
    }
    out
}

/// Total clipped level length for each of `levels`, in input order.
///
/// Each cell only visits the levels inside its value range, so a dense
/// scan costs about as much as contouring the grid once per level crossing.
pub fn level_lengths(g: &ScalarGrid, levels: &[f64], clip: &Disk) -> Vec<f64> {
    let mut order: Vec<usize> = (0..levels.len()).filter(|&k| levels[k].is_finite()).collect();
    order.sort_by(|&a, &b| levels[a].total_cmp(&levels[b]));
    let sorted: Vec<f64> = order.iter().map(|&k| levels[k]).collect();
    let mut acc = vec![0.0; sorted.len()];
    for j in 0..g.ny - 1 {
        for i in 0..g.nx - 1 {
            let cov = cover(g, clip, i, j);
            if cov == Cover::Outside {
                continue;
            }
            let v = [g.value(i, j), g.value(i + 1, j), g.value(i + 1, j + 1), g.value(i, j + 1)];
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            // Crossings need some corner ≤ t < some corner.
            let first = sorted.partition_point(|&t| t < lo);
            let last = sorted.partition_point(|&t| t < hi);
            for (k, &t) in sorted.iter().enumerate().take(last).skip(first) {
                cell_segments(g, i, j, t, |a, _, b, _| {
                    if let Some((pa, _, pb, _)) = clipped(cov, clip, a, b) {
                        acc[k] += pa.distance(pb);
                    }
                });
            }
        }
    }
    let mut out = vec![0.0; levels.len()];
    for (slot, &k) in order.iter().enumerate() {
        out[k] = acc[slot];
    }
    out
}
