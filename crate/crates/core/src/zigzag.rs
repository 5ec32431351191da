//! Smoothed zigzag potential `A(x, y) = N·y − 2N·dist((x, y), γ)` with
//! `γ(t) = (sin(N t), t)`.
//!
//! The distance is Lipschitz only: it has a V-shaped ridge on the curve and
//! concave kinks on the medial axis. Both are mollified at scale `ε`:
//! each branch distance `d` goes through the C¹ profile
//! `d ↦ (d² + ε²)/(2ε)` for `d < ε`, and the three nearest branches are
//! combined with a quadratic smooth minimum of width `ε`. The gradient is
//! differentiated in closed form from the same pieces.

use std::f64::consts::PI;

use crate::geometry::{Point2, Vec2};

const SAMPLES_PER_PERIOD: f64 = 64.0;
const NEWTON_ITERS: usize = 40;
const MAX_BRANCHES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZigzagPotential {
    pub n: f64,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    dist: f64,
    foot: Point2,
}

impl ZigzagPotential {
    pub fn new(n: f64, eps: f64) -> Self {
        Self { n, eps }
    }

    /// Smoothing scale used when none is given: `0.01 / N`.
    pub fn default_eps(n: f64) -> f64 {
        0.01 / n
    }

    pub fn curve(&self, t: f64) -> Point2 {
        Point2::new((self.n * t).sin(), t)
    }

    fn sq_dist(&self, p: Point2, t: f64) -> f64 {
        let dx = p.x - (self.n * t).sin();
        let dy = p.y - t;
        dx * dx + dy * dy
    }

    /// Squared distance and its derivative along the curve parameter.
    fn sq_dist_and_slope(&self, p: Point2, t: f64) -> (f64, f64) {
        let (s, c) = (self.n * t).sin_cos();
        let (dx, dy) = (s - p.x, t - p.y);
        (dx * dx + dy * dy, 2.0 * dx * self.n * c + 2.0 * dy)
    }

    /// Local minimum of the squared distance in `[lo, hi]`, where the slope
    /// changes sign from negative to nonnegative. Newton with bisection fallback.
    fn refine(&self, p: Point2, mut lo: f64, mut hi: f64) -> f64 {
        let n = self.n;
        let mut t = 0.5 * (lo + hi);
        for _ in 0..NEWTON_ITERS {
            let (s, c) = (n * t).sin_cos();
            let g1 = 2.0 * (s - p.x) * n * c + 2.0 * (t - p.y);
            if g1 == 0.0 {
                break;
            }
            if g1 < 0.0 {
                lo = t;
            } else {
                hi = t;
            }
            let g2 = 2.0 * n * n * (c * c - s * (s - p.x)) + 2.0;
            let mut next = if g2 > 0.0 { t - g1 / g2 } else { f64::NAN };
            if (next - t).abs() <= 1e-15 * (1.0 + t.abs()) {
                t = next;
                break;
            }
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            t = next;
        }
        t
    }

    /// Squared distance to the nearest curve point level with `p` (or with the
    /// nearest crest when `p` lies outside the band `|x| ≤ 1`).
    fn crossing_bound(&self, p: Point2) -> f64 {
        let n = self.n;
        let period = 2.0 * PI / n;
        let xs = p.x.clamp(-1.0, 1.0);
        let a = xs.asin();
        let mut best = f64::INFINITY;
        for phase in [a, PI - a] {
            let t = phase / n;
            let k = ((p.y - t) / period).round();
            for kk in [k - 1.0, k, k + 1.0] {
                let dy = t + kk * period - p.y;
                best = best.min(dy * dy);
            }
        }
        let dx = p.x - xs;
        best + dx * dx
    }

    /// The (up to three) nearest local minima of the distance to the curve.
    fn branches(&self, p: Point2) -> ([Branch; MAX_BRANCHES], usize) {
        if !(p.x.is_finite() && p.y.is_finite()) {
            return ([Branch { dist: f64::NAN, foot: p }; MAX_BRANCHES], 0);
        }
        let step = 2.0 * PI / self.n / SAMPLES_PER_PERIOD;
        let t_at = |k: i64| p.y + k as f64 * step;

        let mut cands: [(f64, f64); 16] = [(f64::INFINITY, 0.0); 16];
        let mut count = 0usize;
        let mut push = |lo: f64, hi: f64| {
            let tr = self.refine(p, lo, hi);
            let d2 = self.sq_dist(p, tr);
            if cands[..count].iter().any(|&(_, tc)| (tc - tr).abs() < 1e-9) {
                return d2;
            }
            if count < cands.len() {
                cands[count] = (d2, tr);
                count += 1;
            } else if let Some(worst) = cands.iter_mut().max_by(|a, b| a.0.total_cmp(&b.0)) {
                if d2 < worst.0 {
                    *worst = (d2, tr);
                }
            }
            d2
        };

        // The curve is a graph over y, so points within distance D have |t − p.y| ≤ D.
        let (d0, slope0) = self.sq_dist_and_slope(p, p.y);
        let mut best = d0.min(self.crossing_bound(p));
        let margin = 2.0 * self.eps + step;
        for dir in [1i64, -1] {
            let (mut k, mut slope) = (0i64, slope0);
            loop {
                let k2 = k + dir;
                let t2 = t_at(k2);
                let (d2, slope2) = self.sq_dist_and_slope(p, t2);
                best = best.min(d2);
                let (ta, sa, tb, sb) = if dir > 0 { (t_at(k), slope, t2, slope2) } else { (t2, slope2, t_at(k), slope) };
                if sa < 0.0 && sb >= 0.0 {
                    best = best.min(push(ta, tb));
                }
                if (k2.abs() as f64) * step > best.sqrt() + margin {
                    break;
                }
                k = k2;
                slope = slope2;
            }
        }

        cands[..count].sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out = [Branch { dist: f64::INFINITY, foot: Point2::ORIGIN }; MAX_BRANCHES];
        let used = count.min(MAX_BRANCHES);
        for (slot, &(d2, t)) in out.iter_mut().zip(&cands[..used]) {
            *slot = Branch { dist: d2.sqrt(), foot: self.curve(t) };
        }
        (out, used)
    }

    /// Distance to the curve (unsmoothed).
    pub fn distance(&self, p: Point2) -> f64 {
        let (b, used) = self.branches(p);
        if used == 0 {
            f64::INFINITY
        } else {
            b[0].dist
        }
    }

    /// Gap between the nearest and second-nearest branch distances.
    /// Small values mark the medial axis, where the unsmoothed potential has a kink.
    pub fn medial_gap(&self, p: Point2) -> f64 {
        let (b, used) = self.branches(p);
        if used < 2 {
            f64::INFINITY
        } else {
            b[1].dist - b[0].dist
        }
    }

    /// The unsmoothed Lipschitz potential.
    pub fn raw_value(&self, p: Point2) -> f64 {
        self.n * p.y - 2.0 * self.n * self.distance(p)
    }

    /// Smoothed potential and its gradient.
    pub fn value_and_gradient(&self, p: Point2) -> (f64, Vec2) {
        let (b, used) = self.branches(p);
        let eps = self.eps;
        let mut smin: Option<(f64, Vec2)> = None;
        for br in &b[..used] {
            let (phi, grad) = if br.dist < eps {
                ((br.dist * br.dist + eps * eps) / (2.0 * eps), (1.0 / eps) * (p - br.foot))
            } else {
                (br.dist, (1.0 / br.dist) * (p - br.foot))
            };
            smin = Some(match smin {
                None => (phi, grad),
                Some(acc) => smooth_min(acc, (phi, grad), eps),
            });
        }
        let (s, gs) = smin.unwrap_or((f64::NAN, Vec2::new(f64::NAN, f64::NAN)));
        let n = self.n;
        (n * p.y - 2.0 * n * s, Vec2::new(0.0, n) - (2.0 * n) * gs)
    }

    pub fn value(&self, p: Point2) -> f64 {
        self.value_and_gradient(p).0
    }

    pub fn gradient(&self, p: Point2) -> Vec2 {
        self.value_and_gradient(p).1
    }
}

/// Quadratic smooth minimum of width `k`, carrying gradients.
fn smooth_min(a: (f64, Vec2), b: (f64, Vec2), k: f64) -> (f64, Vec2) {
    let ((lo, glo), (hi, ghi)) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    let u = k - (hi - lo);
    if u <= 0.0 {
        return (lo, glo);
    }
    let w = u / (2.0 * k);
    (lo - u * u / (4.0 * k), (1.0 - w) * glo + w * ghi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::radical_inverse;

    fn brute_distance(z: &ZigzagPotential, p: Point2) -> f64 {
        let mut best = f64::INFINITY;
        let m = 400_000;
        for k in 0..=m {
            let t = p.y - 4.0 + 8.0 * k as f64 / m as f64;
            best = best.min(z.sq_dist(p, t));
        }
        best.sqrt()
    }

    #[test]
    fn distance_matches_brute_force() {
        for &n in &[4.0, 8.0, 16.0] {
            let z = ZigzagPotential::new(n, ZigzagPotential::default_eps(n));
            for k in 1..40u64 {
                let p = Point2::new(4.0 * radical_inverse(k, 2) - 2.0, 4.0 * radical_inverse(k, 3) - 2.0);
                let d = z.distance(p);
                let bf = brute_distance(&z, p);
                assert!((d - bf).abs() < 1e-6, "N={n} p={p} d={d} brute={bf}");
            }
        }
    }

    #[test]
    fn gradient_matches_finite_differences_off_axis() {
        let z = ZigzagPotential::new(8.0, 0.01 / 8.0);
        let h = 1e-7;
        let mut checked = 0;
        for k in 1..400u64 {
            let p = Point2::new(2.0 * radical_inverse(k, 2) - 1.0, 2.0 * radical_inverse(k, 3) - 1.0);
            if z.medial_gap(p) < 4.0 * z.eps || z.distance(p) < 4.0 * z.eps {
                continue;
            }
            let g = z.gradient(p);
            let gx = (z.value(Point2::new(p.x + h, p.y)) - z.value(Point2::new(p.x - h, p.y))) / (2.0 * h);
            let gy = (z.value(Point2::new(p.x, p.y + h)) - z.value(Point2::new(p.x, p.y - h))) / (2.0 * h);
            assert!((g.u - gx).abs() < 1e-4 * g.norm() && (g.v - gy).abs() < 1e-4 * g.norm(), "{p}");
            checked += 1;
        }
        assert!(checked > 300);
    }

    #[test]
    fn smoothing_band_is_c1() {
        // Crossing the ridge along the normal: the gradient varies continuously.
        let z = ZigzagPotential::new(8.0, 0.01 / 8.0);
        let t = 0.05;
        let foot = z.curve(t);
        let tangent = Vec2::new(8.0 * (8.0 * t).cos(), 1.0);
        let normal = (1.0 / tangent.norm()) * tangent.perp();
        let mut prev = z.gradient(foot + (-2.0 * z.eps) * normal);
        for k in -199..=200 {
            let g = z.gradient(foot + (k as f64 * z.eps / 100.0) * normal);
            assert!((g - prev).norm() < 0.5, "jump {} at k={k}", (g - prev).norm());
            prev = g;
        }
    }

    #[test]
    fn gradient_norm_claim_holds_off_medial_axis() {
        for &n in &[4.0, 8.0, 16.0] {
            let z = ZigzagPotential::new(n, ZigzagPotential::default_eps(n));
            for k in 0..3000u64 {
                let p = Point2::new(2.0 * radical_inverse(k, 2) - 1.0, 2.0 * radical_inverse(k, 3) - 1.0);
                if z.medial_gap(p) < z.eps {
                    continue;
                }
                let s = z.gradient(p).norm();
                assert!((0.1..=10.0 * n).contains(&s), "N={n} p={p} |∇A|={s}");
            }
        }
    }
}
