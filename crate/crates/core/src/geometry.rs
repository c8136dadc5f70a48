//! Plane geometry shared by the certificate, manifold and attractor code.

use std::collections::HashMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    /// Same point with `x` reduced to `[0, 1)`.
    pub fn wrap_x(self) -> Point {
        Point::new(self.x - self.x.floor(), self.y)
    }

    /// Same point reduced to the unit square `[0, 1)^2`.
    pub fn wrap_torus(self) -> Point {
        Point::new(self.x - self.x.floor(), self.y - self.y.floor())
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Distance in the annulus `T^1 x R` (x taken modulo 1).
pub fn annulus_dist(a: Point, b: Point) -> f64 {
    let mut dx = (a.x - b.x).rem_euclid(1.0);
    if dx > 0.5 {
        dx = 1.0 - dx;
    }
    dx.hypot(a.y - b.y)
}

/// Distance on the flat torus.
pub fn torus_dist(a: Point, b: Point) -> f64 {
    let wrap = |d: f64| {
        let d = d.rem_euclid(1.0);
        d.min(1.0 - d)
    };
    wrap(a.x - b.x).hypot(wrap(a.y - b.y))
}

/// Row-major 2x2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn apply(&self, v: Point) -> Point {
        Point::new(self.a * v.x + self.b * v.y, self.c * v.x + self.d * v.y)
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(self.d / det, -self.b / det, -self.c / det, self.a / det))
    }

    /// Singular values `(sigma_max, sigma_min)`.
    pub fn singular_values(&self) -> (f64, f64) {
        let s = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det().abs();
        let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
        let smax = ((s + disc) / 2.0).sqrt();
        let smin = if smax > 0.0 { det / smax } else { 0.0 };
        (smax, smin)
    }

    /// Operator (spectral) norm.
    pub fn norm(&self) -> f64 {
        self.singular_values().0
    }

    /// Eigenvalues, real pair sorted by decreasing value or a conjugate pair
    /// with nonnegative imaginary part first.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr - 4.0 * det;
        if disc >= 0.0 {
            let r = disc.sqrt();
            // Avoid cancellation for the smaller root.
            let big = if tr >= 0.0 { (tr + r) / 2.0 } else { (tr - r) / 2.0 };
            let small = if big != 0.0 { det / big } else { (tr - big).max(0.0) };
            let (l1, l2) = if big >= small { (big, small) } else { (small, big) };
            [Complex64::new(l1, 0.0), Complex64::new(l2, 0.0)]
        } else {
            let im = (-disc).sqrt() / 2.0;
            [Complex64::new(tr / 2.0, im), Complex64::new(tr / 2.0, -im)]
        }
    }

    /// Unit eigenvector for a real eigenvalue.
    pub fn eigenvector(&self, lambda: f64) -> Point {
        // Rows of (M - lambda I); pick the better-conditioned one.
        let r1 = Point::new(self.a - lambda, self.b);
        let r2 = Point::new(self.c, self.d - lambda);
        let row = if r1.norm() >= r2.norm() { r1 } else { r2 };
        let v = if row.norm() == 0.0 {
            Point::new(1.0, 0.0)
        } else {
            Point::new(-row.y, row.x)
        };
        let v = v * (1.0 / v.norm());
        // Fix orientation: first nonzero component positive.
        if v.x < 0.0 || (v.x == 0.0 && v.y < 0.0) {
            -v
        } else {
            v
        }
    }
}

/// Distance from `p` to the closed segment `[a, b]`, and the parameter of
/// the closest point.
pub fn point_segment(p: Point, a: Point, b: Point) -> (f64, f64) {
    let ab = b - a;
    let len2 = ab.dot(ab);
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((p - a).dot(ab) / len2).clamp(0.0, 1.0)
    };
    ((a + ab * t).dist(p), t)
}

/// Intersection parameters `(s, t)` of segments `[a, b]` and `[c, d]`,
/// closed at both ends. Collinear overlaps report the first shared point.
pub fn segment_intersection(a: Point, b: Point, c: Point, d: Point) -> Option<(f64, f64)> {
    let r = b - a;
    let s = d - c;
    let denom = r.cross(s);
    let qp = c - a;
    if denom == 0.0 {
        if qp.cross(r) != 0.0 {
            return None;
        }
        let rr = r.dot(r);
        if rr == 0.0 {
            return None;
        }
        let t0 = qp.dot(r) / rr;
        let t1 = t0 + s.dot(r) / rr;
        let (lo, hi) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        if hi < 0.0 || lo > 1.0 {
            return None;
        }
        let t = lo.max(0.0);
        let p = a + r * t;
        let ss = s.dot(s);
        let u = if ss == 0.0 { 0.0 } else { (p - c).dot(s) / ss };
        return Some((t, u.clamp(0.0, 1.0)));
    }
    let t = qp.cross(s) / denom;
    let u = qp.cross(r) / denom;
    if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
        Some((t, u))
    } else {
        None
    }
}

/// Uniform bucket index over a set of segments.
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<u32>>,
    segs: Vec<(Point, Point)>,
    bounds: (i64, i64, i64, i64),
}

impl SegmentIndex {
    pub fn new(cell: f64) -> Self {
        Self {
            cell,
            buckets: HashMap::new(),
            segs: Vec::new(),
            bounds: (i64::MAX, i64::MIN, i64::MAX, i64::MIN),
        }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        ((p.x / self.cell).floor() as i64, (p.y / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, a: Point, b: Point) -> u32 {
        let id = self.segs.len() as u32;
        self.segs.push((a, b));
        let lo = self.key(Point::new(a.x.min(b.x), a.y.min(b.y)));
        let hi = self.key(Point::new(a.x.max(b.x), a.y.max(b.y)));
        for i in lo.0..=hi.0 {
            for j in lo.1..=hi.1 {
                self.buckets.entry((i, j)).or_default().push(id);
            }
        }
        let bd = &mut self.bounds;
        bd.0 = bd.0.min(lo.0);
        bd.1 = bd.1.max(hi.0);
        bd.2 = bd.2.min(lo.1);
        bd.3 = bd.3.max(hi.1);
        id
    }

    pub fn segment(&self, id: u32) -> (Point, Point) {
        self.segs[id as usize]
    }

    pub fn len(&self) -> usize {
        self.segs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    /// Ids of segments whose buckets meet the box `[lo, hi]`, deduplicated.
    pub fn candidates(&self, lo: Point, hi: Point) -> Vec<u32> {
        let a = self.key(lo);
        let b = self.key(hi);
        let mut out = Vec::new();
        for i in a.0..=b.0 {
            for j in a.1..=b.1 {
                if let Some(v) = self.buckets.get(&(i, j)) {
                    out.extend_from_slice(v);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Nearest segment to `p`: `(distance, id)`.
    pub fn nearest(&self, p: Point) -> Option<(f64, u32)> {
        if self.segs.is_empty() {
            return None;
        }
        let (ci, cj) = self.key(p);
        let (x0, x1, y0, y1) = self.bounds;
        let max_ring = [ci - x0, x1 - ci, cj - y0, y1 - cj]
            .into_iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or(0)
            + 1;
        let mut best: Option<(f64, u32)> = None;
        for r in 0..=max_ring {
            for i in (ci - r)..=(ci + r) {
                for j in (cj - r)..=(cj + r) {
                    if (i - ci).abs() != r && (j - cj).abs() != r {
                        continue;
                    }
                    if let Some(v) = self.buckets.get(&(i, j)) {
                        for &id in v {
                            let (a, b) = self.segs[id as usize];
                            let (d, _) = point_segment(p, a, b);
                            if best.is_none_or(|(bd, _)| d < bd) {
                                best = Some((d, id));
                            }
                        }
                    }
                }
            }
            if let Some((bd, _)) = best {
                if bd <= r as f64 * self.cell {
                    break;
                }
            }
        }
        best
    }
}

/// A closed curve in the annulus that winds once around it, stored as a
/// lifted polyline whose last vertex is the first shifted by `(1, 0)`.
#[derive(Debug, Clone)]
pub struct EssentialCurve {
    vertices: Vec<Point>,
    index: SegmentIndex,
    x0: f64,
    y_max: f64,
}

impl EssentialCurve {
    /// Build from a lifted polyline. The closing vertex is appended when
    /// missing; the orientation is normalised to increasing `x`.
    pub fn new(mut vertices: Vec<Point>) -> Option<Self> {
        if vertices.len() < 2 {
            return None;
        }
        let first = vertices[0];
        let last = *vertices.last().unwrap();
        let span = last.x - first.x;
        let closes = |s: f64| (last.y - first.y).abs() < 1e-9 && (s.abs() - 1.0).abs() < 1e-9;
        if !closes(span) {
            vertices.push(first + Point::new(1.0, 0.0));
        } else if span < 0.0 {
            vertices.reverse();
        }
        let first = vertices[0];
        let last = *vertices.last().unwrap();
        if ((last.x - first.x) - 1.0).abs() > 1e-9 || (last.y - first.y).abs() > 1e-9 {
            return None;
        }
        let mut v = vertices;
        // Snap the closing vertex exactly.
        let n = v.len();
        v[n - 1] = v[0] + Point::new(1.0, 0.0);
        let x_lo = v.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
        let x_hi = v.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
        let y_lo = v.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
        let y_max = v.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
        let mean_len = v.windows(2).map(|w| w[0].dist(w[1])).sum::<f64>() / (n - 1) as f64;
        let extent = (x_hi - x_lo + 2.0).max(y_max - y_lo);
        let cell = (mean_len * 4.0).max(extent / 512.0).max(1e-6);
        let mut index = SegmentIndex::new(cell);
        // Periodic copies so that any query reduced into [x0, x0 + 1) sees
        // every nearby edge.
        let copies = (x_hi - x_lo).ceil() as i64 + 1;
        for shift in -copies..=copies {
            let d = Point::new(shift as f64, 0.0);
            for w in v.windows(2) {
                index.insert(w[0] + d, w[1] + d);
            }
        }
        Some(Self {
            vertices: v,
            index,
            x0: first.x,
            y_max,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    fn reduce(&self, p: Point) -> Point {
        Point::new(self.x0 + (p.x - self.x0).rem_euclid(1.0), p.y)
    }

    /// Number of crossings of the upward vertical ray from `p`; `None` if
    /// `p` lies on the curve.
    fn ray_crossings(&self, p: Point) -> Option<usize> {
        let p = self.reduce(p);
        if p.y > self.y_max {
            return Some(0);
        }
        let ids = self.index.candidates(
            Point::new(p.x, p.y),
            Point::new(p.x, self.y_max + self.index.cell),
        );
        let mut count = 0;
        for id in ids {
            let (a, b) = self.index.segment(id);
            let (lo, hi) = if a.x <= b.x { (a, b) } else { (b, a) };
            if lo.x == hi.x {
                if p.x == lo.x && p.y >= lo.y.min(hi.y) && p.y <= lo.y.max(hi.y) {
                    return None;
                }
                continue;
            }
            if p.x < lo.x || p.x >= hi.x {
                continue;
            }
            let t = (p.x - lo.x) / (hi.x - lo.x);
            let y = lo.y + t * (hi.y - lo.y);
            if y == p.y {
                return None;
            }
            if y > p.y {
                count += 1;
            }
        }
        Some(count)
    }

    /// Whether `p` lies in the component of the complement below the curve.
    pub fn is_below(&self, p: Point) -> bool {
        matches!(self.ray_crossings(p), Some(c) if c % 2 == 1)
    }

    /// Euclidean distance from `p` (taken modulo the x-period) to the curve.
    pub fn distance(&self, p: Point) -> f64 {
        self.index
            .nearest(self.reduce(p))
            .map(|(d, _)| d)
            .unwrap_or(f64::INFINITY)
    }

    /// Distance to the curve, positive below and negative above.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let d = self.distance(p);
        match self.ray_crossings(p) {
            None => 0.0,
            Some(c) if c % 2 == 1 => d,
            Some(_) => -d,
        }
    }

    pub fn length(&self) -> f64 {
        self.vertices.windows(2).map(|w| w[0].dist(w[1])).sum()
    }

    /// `n` points equally spaced in arclength (the closing vertex excluded).
    pub fn resample(&self, n: usize) -> Vec<Point> {
        resample_polyline(&self.vertices, n + 1)[..n].to_vec()
    }

    pub fn translated(&self, d: Point) -> EssentialCurve {
        EssentialCurve::new(self.vertices.iter().map(|&p| p + d).collect())
            .expect("translation preserves closure")
    }

    pub fn min_y(&self) -> f64 {
        self.vertices.iter().map(|p| p.y).fold(f64::INFINITY, f64::min)
    }

    pub fn max_y(&self) -> f64 {
        self.y_max
    }
}

/// `n >= 2` points equally spaced in arclength along an open polyline,
/// including both endpoints.
pub fn resample_polyline(pts: &[Point], n: usize) -> Vec<Point> {
    assert!(n >= 2 && pts.len() >= 2);
    let mut cum = Vec::with_capacity(pts.len());
    cum.push(0.0);
    for w in pts.windows(2) {
        let l = cum.last().unwrap() + w[0].dist(w[1]);
        cum.push(l);
    }
    let total = *cum.last().unwrap();
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        let s = total * i as f64 / (n - 1) as f64;
        while seg + 2 < cum.len() && cum[seg + 1] < s {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let t = if len > 0.0 { ((s - cum[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
        out.push(pts[seg] + (pts[seg + 1] - pts[seg]) * t);
    }
    out
}

/// Drop interior vertices that lie on the segment joining their neighbours.
pub fn merge_collinear(pts: &[Point]) -> Vec<Point> {
    if pts.len() < 3 {
        return pts.to_vec();
    }
    let mut out = vec![pts[0]];
    for i in 1..pts.len() - 1 {
        let prev = *out.last().unwrap();
        let cur = pts[i];
        let next = pts[i + 1];
        let u = cur - prev;
        let v = next - cur;
        let collinear = u.cross(v).abs() <= 1e-12 * (u.norm() * v.norm()).max(1e-300) && u.dot(v) > 0.0;
        if !collinear {
            out.push(cur);
        }
    }
    out.push(pts[pts.len() - 1]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_standard_jacobian() {
        // a = 0.5 at x = 0: [[1.5, 1], [0.5, 1]]
        let m = Mat2::new(1.5, 1.0, 0.5, 1.0);
        let [l1, l2] = m.eigenvalues();
        let disc: f64 = 2.5 * 2.5 - 4.0;
        assert!((l1.re - (2.5 + disc.sqrt()) / 2.0).abs() < 1e-15);
        assert!((l1.re * l2.re - 1.0).abs() < 1e-15);
        let v = m.eigenvector(l1.re);
        let mv = m.apply(v);
        assert!((mv - v * l1.re).norm() < 1e-14);
    }

    #[test]
    fn spectral_norm_of_shear_is_golden_ratio() {
        let m = Mat2::new(1.0, 1.0, 0.0, 1.0);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((m.norm() - golden).abs() < 1e-14);
        assert!((m.singular_values().1 - 1.0 / golden).abs() < 1e-14);
    }

    #[test]
    fn crossing_segments() {
        let hit = segment_intersection(
            Point::new(-1.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, -1.0),
            Point::new(0.0, 1.0),
        );
        assert_eq!(hit, Some((0.5, 0.5)));
        assert!(segment_intersection(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.0, 0.1),
            Point::new(1.0, 0.1)
        )
        .is_none());
    }

    #[test]
    fn essential_curve_region_queries() {
        let c = EssentialCurve::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.5, 0.3),
            Point::new(1.0, 0.0),
        ])
        .unwrap();
        assert!(c.is_below(Point::new(0.5, 0.2)));
        assert!(!c.is_below(Point::new(0.5, 0.4)));
        assert!(c.is_below(Point::new(7.5, 0.2)));
        assert!(!c.is_below(Point::new(0.0, 0.1)));
        assert!((c.signed_distance(Point::new(0.0, -0.25)) - 0.25).abs() < 1e-12);
        assert!((c.signed_distance(Point::new(1.5, 0.55)) + 0.25).abs() < 1e-12);
    }

    #[test]
    fn overhanging_curve() {
        // The curve doubles back, so a vertical line meets it three times.
        let c = EssentialCurve::new(vec![
            Point::new(0.0, 0.0),
            Point::new(0.6, 0.0),
            Point::new(0.6, 0.5),
            Point::new(0.3, 0.5),
            Point::new(0.3, 1.0),
            Point::new(0.9, 1.0),
            Point::new(0.9, 0.0),
            Point::new(1.0, 0.0),
        ])
        .unwrap();
        assert!(c.is_below(Point::new(0.45, 0.75)));
        assert!(!c.is_below(Point::new(0.45, 0.25)));
        assert!(c.is_below(Point::new(0.75, 0.25)));
        assert!(c.is_below(Point::new(0.75, 0.75)));
        assert!(!c.is_below(Point::new(0.95, 0.5)));
    }

    #[test]
    fn resample_equal_spacing() {
        let pts = resample_polyline(&[Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0)], 5);
        assert_eq!(pts[2], Point::new(1.0, 0.0));
        assert!((pts[3].y - 0.5).abs() < 1e-15);
    }
}
