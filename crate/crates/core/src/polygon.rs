//! Convex polygons in the plane.
//!
//! Vertices are stored counterclockwise with no repeated or collinear
//! vertices. The module covers what the Wulff-shape and opening code needs:
//! hulls, halfspace clipping, Minkowski sums, projections and Hausdorff
//! distances.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Relative threshold below which a hull turn counts as collinear.
const COLLINEAR_EPS: f64 = 1e-13;

#[inline]
pub(crate) fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn dist(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Convex hull by the monotone chain, counterclockwise, starting at the
/// lexicographically smallest point. Collinear and duplicate points are
/// dropped. Degenerate inputs return fewer than three points.
pub fn convex_hull(points: &[Point]) -> Vec<Point> {
    let mut pts: Vec<Point> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let scale = pts
        .iter()
        .fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()))
        .max(f64::MIN_POSITIVE);
    let eps = COLLINEAR_EPS * scale * scale;

    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= eps {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Point>", into = "Vec<Point>")]
pub struct ConvexPolygon {
    vertices: Vec<Point>,
}

impl TryFrom<Vec<Point>> for ConvexPolygon {
    type Error = Error;

    fn try_from(vertices: Vec<Point>) -> Result<Self> {
        ConvexPolygon::new(vertices)
    }
}

impl From<ConvexPolygon> for Vec<Point> {
    fn from(p: ConvexPolygon) -> Self {
        p.vertices
    }
}

impl ConvexPolygon {
    /// Validates a counterclockwise, strictly convex vertex list.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::DegeneratePolygon(format!(
                "{} vertices, need at least 3",
                vertices.len()
            )));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::DegeneratePolygon("non-finite vertex".into()));
        }
        let n = vertices.len();
        for k in 0..n {
            let turn = cross(vertices[k], vertices[(k + 1) % n], vertices[(k + 2) % n]);
            if turn <= 0.0 {
                return Err(Error::DegeneratePolygon(format!(
                    "vertex {} is not a strict counterclockwise turn",
                    (k + 1) % n
                )));
            }
        }
        let poly = Self { vertices };
        if poly.area() <= 0.0 {
            return Err(Error::DegeneratePolygon("non-positive area".into()));
        }
        Ok(poly)
    }

    /// Convex hull of an arbitrary point cloud.
    pub fn from_points(points: &[Point]) -> Result<Self> {
        let hull = convex_hull(points);
        if hull.len() < 3 {
            return Err(Error::DegeneratePolygon(format!(
                "hull of {} points has only {} vertices",
                points.len(),
                hull.len()
            )));
        }
        Self::new(hull)
    }

    /// Regular `n`-gon inscribed in the circle of the given radius about the
    /// origin, first vertex on the positive x-axis.
    pub fn regular(n: usize, radius: f64) -> Result<Self> {
        if n < 3 || !(radius > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "regular polygon needs n >= 3 and radius > 0 (got n={n}, r={radius})"
            )));
        }
        let step = std::f64::consts::TAU / n as f64;
        Self::new(
            (0..n)
                .map(|k| {
                    let t = step * k as f64;
                    [radius * t.cos(), radius * t.sin()]
                })
                .collect(),
        )
    }

    /// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
    pub fn rectangle(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Directed edges `(a, b)` in counterclockwise order.
    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |k| (self.vertices[k], self.vertices[(k + 1) % n]))
    }

    /// Shoelace area.
    pub fn area(&self) -> f64 {
        0.5 * self
            .edges()
            .map(|(a, b)| a[0] * b[1] - a[1] * b[0])
            .sum::<f64>()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| dist(a, b)).sum()
    }

    pub fn centroid(&self) -> Point {
        let mut cx = 0.0;
        let mut cy = 0.0;
        for (a, b) in self.edges() {
            let w = a[0] * b[1] - a[1] * b[0];
            cx += (a[0] + b[0]) * w;
            cy += (a[1] + b[1]) * w;
        }
        let six_a = 6.0 * self.area();
        [cx / six_a, cy / six_a]
    }

    /// Outward unit normals paired with edge lengths.
    pub fn edge_normals(&self) -> impl Iterator<Item = (Point, f64)> + '_ {
        self.edges().map(|(a, b)| {
            let len = dist(a, b);
            ([(b[1] - a[1]) / len, -(b[0] - a[0]) / len], len)
        })
    }

    /// Halfspaces `n . x <= c` with unit outward normals, one per edge.
    pub fn halfspaces(&self) -> Vec<(Point, f64)> {
        self.edges()
            .zip(self.edge_normals())
            .map(|((a, _), (n, _))| (n, dot(n, a)))
            .collect()
    }

    /// Support function `max_{x in P} x . d`.
    pub fn support(&self, d: Point) -> f64 {
        self.vertices
            .iter()
            .map(|&v| dot(v, d))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, p: Point, tol: f64) -> bool {
        self.halfspaces().iter().all(|&(n, c)| dot(n, p) <= c + tol)
    }

    pub fn translate(&self, t: Point) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| [v[0] + t[0], v[1] + t[1]]).collect(),
        }
    }

    /// Scaling about the origin; `factor` must be positive.
    pub fn scale(&self, factor: f64) -> Self {
        assert!(factor > 0.0, "polygon scale factor must be positive");
        Self {
            vertices: self.vertices.iter().map(|v| [v[0] * factor, v[1] * factor]).collect(),
        }
    }

    /// Point reflection `x -> -x`. Preserves counterclockwise order.
    pub fn negate(&self) -> Self {
        Self {
            vertices: self.vertices.iter().map(|v| [-v[0], -v[1]]).collect(),
        }
    }

    /// Intersection with `n . x <= c`; the result may be degenerate or empty.
    pub fn clip(&self, n: Point, c: f64) -> Vec<Point> {
        clip_points(&self.vertices, n, c)
    }

    /// Minkowski sum via the hull of pairwise vertex sums.
    pub fn minkowski_sum(&self, other: &ConvexPolygon) -> Self {
        minkowski_hull(&self.vertices, &other.vertices)
            .expect("Minkowski sum of two polygons with positive area is non-degenerate")
    }

    /// Euclidean projection onto the closed polygon.
    pub fn project(&self, p: Point) -> Point {
        if self.contains(p, 0.0) {
            return p;
        }
        self.project_boundary(p)
    }

    /// Nearest point on the polygon boundary.
    pub fn project_boundary(&self, p: Point) -> Point {
        let mut best = self.vertices[0];
        let mut best_d = f64::INFINITY;
        for (a, b) in self.edges() {
            let q = project_segment(p, a, b);
            let d = dist(p, q);
            if d < best_d {
                best_d = d;
                best = q;
            }
        }
        best
    }

    /// Distance from `p` to the filled polygon (zero inside).
    pub fn distance(&self, p: Point) -> f64 {
        dist(p, self.project(p))
    }

    /// Hausdorff distance between the two filled polygons.
    pub fn hausdorff(&self, other: &ConvexPolygon) -> f64 {
        // distance to a convex set is convex, so vertices attain the sup
        let one_way = |a: &ConvexPolygon, b: &ConvexPolygon| {
            a.vertices.iter().map(|&v| b.distance(v)).fold(0.0f64, f64::max)
        };
        one_way(self, other).max(one_way(other, self))
    }
}

#[inline]
pub(crate) fn project_segment(p: Point, a: Point, b: Point) -> Point {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = dot(d, d);
    let t = if len2 > 0.0 {
        (dot([p[0] - a[0], p[1] - a[1]], d) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    [a[0] + t * d[0], a[1] + t * d[1]]
}

/// Sutherland-Hodgman step for a convex point ring against `n . x <= c`.
pub(crate) fn clip_points(ring: &[Point], n: Point, c: f64) -> Vec<Point> {
    let m = ring.len();
    let mut out = Vec::with_capacity(m + 1);
    for k in 0..m {
        let a = ring[k];
        let b = ring[(k + 1) % m];
        let da = dot(n, a) - c;
        let db = dot(n, b) - c;
        if da <= 0.0 {
            out.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            let t = da / (da - db);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

/// Hull of all sums `a + b`; handles degenerate (point or segment) inputs.
pub(crate) fn minkowski_hull(a: &[Point], b: &[Point]) -> Result<ConvexPolygon> {
    let sums: Vec<Point> = a
        .iter()
        .flat_map(|p| b.iter().map(move |q| [p[0] + q[0], p[1] + q[1]]))
        .collect();
    ConvexPolygon::from_points(&sums)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> ConvexPolygon {
        ConvexPolygon::rectangle(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn hull_drops_interior_and_collinear_points() {
        let pts = [[0.0, 0.0], [1.0, 0.0], [0.5, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        let hull = convex_hull(&pts);
        assert_eq!(hull, vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]);
    }

    #[test]
    fn hull_of_collinear_points_is_degenerate() {
        let hull = convex_hull(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]);
        assert!(hull.len() < 3);
        assert!(ConvexPolygon::from_points(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]).is_err());
    }

    #[test]
    fn rejects_clockwise_input() {
        let cw = vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]];
        assert!(ConvexPolygon::new(cw).is_err());
    }

    #[test]
    fn square_metrics() {
        let sq = unit_square();
        assert_eq!(sq.area(), 1.0);
        assert_eq!(sq.perimeter(), 4.0);
        assert_eq!(sq.centroid(), [0.5, 0.5]);
        assert_eq!(sq.support([1.0, 1.0]), 2.0);
        let normals: Vec<Point> = sq.edge_normals().map(|(n, _)| n).collect();
        assert_eq!(normals, vec![[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]]);
    }

    #[test]
    fn regular_polygon_area_approaches_disk() {
        let p = ConvexPolygon::regular(720, 1.0).unwrap();
        let exact = 0.5 * 720.0 * (std::f64::consts::TAU / 720.0).sin();
        assert!((p.area() - exact).abs() < 1e-12);
        assert!((p.area() - std::f64::consts::PI).abs() < 1e-4);
    }

    #[test]
    fn projection_and_distance() {
        let sq = unit_square();
        assert_eq!(sq.project([0.5, 0.5]), [0.5, 0.5]);
        assert_eq!(sq.project([2.0, 0.5]), [1.0, 0.5]);
        assert_eq!(sq.project([2.0, 3.0]), [1.0, 1.0]);
        assert!((sq.distance([-3.0, 0.5]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn minkowski_sum_of_squares() {
        let sq = unit_square();
        let sum = sq.minkowski_sum(&sq);
        assert_eq!(sum.len(), 4);
        assert!((sum.area() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn hausdorff_of_nested_squares() {
        let a = ConvexPolygon::rectangle(-1.0, 1.0, -1.0, 1.0).unwrap();
        let b = ConvexPolygon::rectangle(-2.0, 2.0, -1.0, 1.0).unwrap();
        assert!((a.hausdorff(&b) - 1.0).abs() < 1e-15);
        assert_eq!(a.hausdorff(&a), 0.0);
    }

    #[test]
    fn clip_halves_square() {
        let sq = unit_square();
        let half = ConvexPolygon::from_points(&sq.clip([1.0, 0.0], 0.5)).unwrap();
        assert!((half.area() - 0.5).abs() < 1e-15);
        assert!(sq.clip([1.0, 0.0], -1.0).is_empty());
    }

    #[test]
    fn json_round_trip_validates() {
        let sq = unit_square();
        let text = serde_json::to_string(&sq).unwrap();
        let back: ConvexPolygon = serde_json::from_str(&text).unwrap();
        assert_eq!(back, sq);
        assert!(serde_json::from_str::<ConvexPolygon>("[[0,0],[1,1]]").is_err());
    }
}
