//! Static SVG pictures of a window of the universal cover.
//!
//! The document always contains the layers `gamma`, `iterates`,
//! `unstable`, `stable` and `crossings`, possibly empty.

use std::fmt::Write as _;

use crate::geometry::Point;

#[derive(Debug, Clone, Default)]
pub struct Scene {
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    pub gamma: Vec<Vec<Point>>,
    pub iterates: Vec<Vec<Point>>,
    pub unstable: Vec<Vec<Point>>,
    pub stable: Vec<Vec<Point>>,
    pub crossings: Vec<(Point, bool)>,
}

const WIDTH: f64 = 800.0;

struct View {
    x0: f64,
    y1: f64,
    scale: f64,
}

impl View {
    fn map(&self, p: Point) -> (f64, f64) {
        ((p.x - self.x0) * self.scale, (self.y1 - p.y) * self.scale)
    }
}

/// Split a polyline where it leaves the window so that off-screen parts are
/// not drawn as long chords.
fn visible_runs(pts: &[Point], scene: &Scene) -> Vec<Vec<Point>> {
    let (x0, x1) = scene.x_range;
    let (y0, y1) = scene.y_range;
    let pad_x = 0.1 * (x1 - x0);
    let pad_y = 0.1 * (y1 - y0);
    let inside = |p: &Point| p.x >= x0 - pad_x && p.x <= x1 + pad_x && p.y >= y0 - pad_y && p.y <= y1 + pad_y;
    let mut runs = Vec::new();
    let mut cur: Vec<Point> = Vec::new();
    for p in pts {
        if inside(p) {
            cur.push(*p);
        } else if !cur.is_empty() {
            cur.push(*p);
            runs.push(std::mem::take(&mut cur));
        }
    }
    if cur.len() > 1 {
        runs.push(cur);
    }
    runs.retain(|r| r.len() > 1);
    runs
}

fn polylines(out: &mut String, id: &str, color: &str, lines: &[Vec<Point>], view: &View, scene: &Scene) {
    let _ = writeln!(out, r#"<g id="{id}" fill="none" stroke="{color}" stroke-width="1">"#);
    for line in lines {
        for run in visible_runs(line, scene) {
            out.push_str("<polyline points=\"");
            for (i, p) in run.iter().enumerate() {
                let (x, y) = view.map(*p);
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{x:.3},{y:.3}");
            }
            out.push_str("\"/>\n");
        }
    }
    out.push_str("</g>\n");
}

pub fn render(scene: &Scene) -> String {
    let (x0, x1) = scene.x_range;
    let (y0, y1) = scene.y_range;
    let scale = WIDTH / (x1 - x0);
    let height = (y1 - y0) * scale;
    let view = View { x0, y1, scale };
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH:.0}" height="{height:.0}" viewBox="0 0 {WIDTH:.3} {height:.3}">"#
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    polylines(&mut out, "gamma", "#000000", &scene.gamma, &view, scene);
    polylines(&mut out, "iterates", "#888888", &scene.iterates, &view, scene);
    polylines(&mut out, "unstable", "#c0392b", &scene.unstable, &view, scene);
    polylines(&mut out, "stable", "#2e86c1", &scene.stable, &view, scene);
    out.push_str("<g id=\"crossings\">\n");
    for &(p, transverse) in &scene.crossings {
        if p.x < x0 || p.x > x1 || p.y < y0 || p.y > y1 {
            continue;
        }
        let (x, y) = view.map(p);
        let fill = if transverse { "#27ae60" } else { "#f39c12" };
        let _ = writeln!(out, r#"<circle cx="{x:.3}" cy="{y:.3}" r="2" fill="{fill}"/>"#);
    }
    out.push_str("</g>\n</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layers_present_even_when_empty() {
        let scene = Scene {
            x_range: (0.0, 1.0),
            y_range: (-1.0, 1.0),
            ..Scene::default()
        };
        let svg = render(&scene);
        for id in ["gamma", "iterates", "unstable", "stable", "crossings"] {
            assert!(svg.contains(&format!("id=\"{id}\"")), "{id}");
        }
    }

    #[test]
    fn off_window_parts_are_split() {
        let scene = Scene {
            x_range: (0.0, 1.0),
            y_range: (0.0, 1.0),
            ..Scene::default()
        };
        let line = vec![
            Point::new(0.1, 0.1),
            Point::new(0.2, 0.2),
            Point::new(5.0, 5.0),
            Point::new(6.0, 6.0),
            Point::new(0.3, 0.3),
            Point::new(0.4, 0.4),
        ];
        let runs = visible_runs(&line, &scene);
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].len(), 3);
        assert_eq!(runs[1], vec![Point::new(0.3, 0.3), Point::new(0.4, 0.4)]);
    }
}
