//! Minimal SVG figures of curves and level sets inside a disk.

use std::fmt::Write as _;

use crate::geometry::{Disk, Point2};
use crate::report::fmt_num;
use crate::stream::LevelSet;

const PAD: f64 = 0.1;

#[derive(Debug, Clone)]
struct Polyline {
    points: Vec<Point2>,
    class: String,
    color: &'static str,
    dashed: bool,
}

/// Polylines drawn over the boundary circle of a disk.
#[derive(Debug, Clone)]
pub struct SvgScene {
    disk: Disk,
    lines: Vec<Polyline>,
}

impl SvgScene {
    pub fn new(disk: Disk) -> Self {
        Self { disk, lines: Vec::new() }
    }

    pub fn curve(&mut self, points: impl IntoIterator<Item = Point2>, class: &str, color: &'static str) -> &mut Self {
        self.lines.push(Polyline { points: points.into_iter().collect(), class: class.to_string(), color, dashed: false });
        self
    }

    /// Adds each polyline of the level set, dashed.
    pub fn level_set(&mut self, set: &LevelSet, color: &'static str) -> &mut Self {
        for line in &set.polylines {
            self.lines.push(Polyline { points: line.clone(), class: "level".to_string(), color, dashed: true });
        }
        self
    }

    pub fn polyline_count(&self) -> usize {
        self.lines.len()
    }

    pub fn render(&self) -> String {
        let r = self.disk.radius;
        let c = self.disk.center;
        let half = r * (1.0 + PAD);
        let stroke = fmt_num(0.006 * r);
        let mut out = String::new();
        // y is flipped so that the figure reads with y pointing up.
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{} {} {} {}" width="600" height="600">"#,
            fmt_num(c.x - half),
            fmt_num(-c.y - half),
            fmt_num(2.0 * half),
            fmt_num(2.0 * half)
        );
        let _ = writeln!(
            out,
            r#"  <circle class="clip" cx="{}" cy="{}" r="{}" fill="none" stroke="black" stroke-width="{stroke}"/>"#,
            fmt_num(c.x),
            fmt_num(-c.y),
            fmt_num(r)
        );
        for line in &self.lines {
            let pts: Vec<String> = line.points.iter().map(|p| format!("{},{}", fmt_num(p.x), fmt_num(-p.y))).collect();
            let dash = if line.dashed { format!(r#" stroke-dasharray="{} {}""#, fmt_num(0.03 * r), fmt_num(0.02 * r)) } else { String::new() };
            let _ = writeln!(
                out,
                r#"  <polyline class="{}" points="{}" fill="none" stroke="{}" stroke-width="{stroke}"{dash}/>"#,
                line.class,
                pts.join(" "),
                line.color
            );
        }
        out.push_str("</svg>\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_xml_with_one_polyline_per_curve() {
        let d = Disk::new(Point2::new(0.5, -0.25), 2.0).unwrap();
        let mut scene = SvgScene::new(d);
        scene.curve([Point2::new(0.0, 0.0), Point2::new(1.0, 1.0)], "s-leg", "red");
        scene.curve([Point2::new(0.0, 0.0), Point2::new(-1.0, 0.5), Point2::new(-1.5, 0.0)], "t-leg", "blue");
        let set = LevelSet {
            level: 0.0,
            polylines: vec![vec![Point2::new(0.0, 0.0), Point2::new(0.1, 0.0)], vec![Point2::new(0.3, 0.0), Point2::new(0.4, 0.1)]],
            clip: d,
            hausdorff_length: 0.0,
        };
        scene.level_set(&set, "gray");
        let text = scene.render();
        let doc = roxmltree::Document::parse(&text).unwrap();
        let root = doc.root_element();
        assert_eq!(root.attribute("viewBox"), Some("-1.7 -1.95 4.4 4.4"));
        let polylines: Vec<_> = root.children().filter(|n| n.has_tag_name("polyline")).collect();
        assert_eq!(polylines.len(), 4);
        assert_eq!(scene.polyline_count(), 4);
        assert_eq!(root.children().filter(|n| n.has_tag_name("circle")).count(), 1);
        assert_eq!(polylines[0].attribute("points"), Some("0,0 1,-1"));
    }
}
