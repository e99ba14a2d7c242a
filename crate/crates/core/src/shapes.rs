//! Closed-form continuum values and convex-polygon geometry for anisotropic
//! perimeters: Wulff-shape identities, the isoperimetric constant, the
//! disk-under-`l1` example and morphological openings by the Wulff shape.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::gauge::{Exponent, Gauge, GaugeSpec};
use crate::polygon::{clip_points, minkowski_hull, ConvexPolygon, Point};

/// `n / R`: below this fidelity weight the zero function is the unique
/// minimizer for data `1_{R W}`.
pub fn trivial_threshold(radius: f64, n: usize) -> Result<f64> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    Ok(n as f64 / radius)
}

fn require_planar(g: &Gauge) -> Result<()> {
    if g.dim() != 2 {
        return Err(Error::UnsupportedDimension(g.dim()));
    }
    Ok(())
}

/// Anisotropic perimeter of a polygon: sum over edges of `len * phi(-normal)`.
pub fn polygon_tv_phi(poly: &ConvexPolygon, g: &Gauge) -> Result<f64> {
    require_planar(g)?;
    let mut total = 0.0;
    for (n, len) in poly.edge_normals() {
        if !(len > 0.0) {
            return Err(Error::DegeneratePolygon("zero-length edge".into()));
        }
        total += len * g.eval(&[-n[0], -n[1]]);
    }
    Ok(total)
}

/// `(TV_phi(W), |W|)` for the polygonal Wulff shape of a planar gauge.
pub fn wulff_tv_and_area(g: &Gauge) -> Result<(f64, f64)> {
    let shape = g.wulff_shape()?;
    Ok((polygon_tv_phi(&shape.polygon, g)?, shape.polygon.area()))
}

fn lq_ball_volume(q: Exponent, n: usize) -> f64 {
    match q {
        Exponent::Infinity => 2f64.powi(n as i32),
        Exponent::Finite(q) => (2.0 * gamma(1.0 + 1.0 / q)).powi(n as i32) / gamma(1.0 + n as f64 / q),
    }
}

/// Lebesgue measure of the Wulff shape in `n` dimensions, in closed form
/// where one exists (p-norms, weighted p-norms, shifted balls) and by the
/// shoelace formula for planar polyhedral gauges.
pub fn wulff_volume(g: &Gauge, n: usize) -> Result<f64> {
    if g.dim() != n {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: n });
    }
    Ok(match g.spec() {
        GaugeSpec::PNorm { p, .. } => lq_ball_volume(p.conjugate(), n),
        GaugeSpec::Weighted { p, weights } => lq_ball_volume(p.conjugate(), n) * weights.iter().product::<f64>(),
        GaugeSpec::Polyhedral { .. } => g.wulff_shape()?.polygon.area(),
        GaugeSpec::Asymmetric { .. } => lq_ball_volume(Exponent::Finite(2.0), n),
    })
}

/// Optimal constant in `|A|^((n-1)/n) <= C TV_phi(A)`: `n^-1 |W|^(-1/n)`.
pub fn isoperimetric_constant(g: &Gauge, n: usize) -> Result<f64> {
    let vol = wulff_volume(g, n)?;
    Ok(vol.powf(-1.0 / n as f64) / n as f64)
}

/// `asin(s) - s sqrt(1 - s^2)`: four times this is the area cut from the
/// unit disk by the square `[-h, h]^2`, `h = sqrt(1 - s^2)`.
fn cap_deficit(s: f64) -> f64 {
    if s < 1e-2 {
        let s2 = s * s;
        s * s2 * (2.0 / 3.0 + s2 * (1.0 / 5.0 + s2 * (3.0 / 28.0)))
    } else {
        s.asin() - s * (1.0 - s * s).sqrt()
    }
}

/// Unit disk data with the `l1` gauge: the candidate optimum is the disk
/// clipped by `[-h, h]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleExampleResult {
    pub lambda: f64,
    pub s: f64,
    pub h: f64,
    pub tv: f64,
    pub area: f64,
    pub energy: f64,
    /// The clipped-square description holds only for `h` in `[1/sqrt 2, 1]`.
    pub valid: bool,
}

pub fn circle_example(lambda: f64) -> Result<CircleExampleResult> {
    if !(lambda >= 1.0) {
        return Err(Error::InvalidParameter(format!("the clipped disk needs lambda >= 1, got {lambda}")));
    }
    let s = 1.0 / lambda;
    let h = (1.0 - s * s).sqrt();
    let d = cap_deficit(s);
    let tv = 8.0 * h;
    let energy = if lambda.is_infinite() { tv } else { tv + 4.0 * lambda * d };
    Ok(CircleExampleResult {
        lambda,
        s,
        h,
        tv,
        area: PI - 4.0 * d,
        energy,
        valid: h >= FRAC_1_SQRT_2 * (1.0 - 1e-12),
    })
}

/// `E(0) - E(1_U)` for the clipped disk `U`: positive exactly when `U` beats
/// the empty set.
pub fn circle_optimality_margin(lambda: f64) -> f64 {
    let s = 1.0 / lambda;
    lambda * PI - 4.0 * lambda * s.asin() - 4.0 * (1.0 - s * s).sqrt()
}

/// Smallest `lambda` at which the clipped disk is at least as good as zero,
/// by bisection on `[2, 3]`.
pub fn circle_optimality_threshold() -> f64 {
    let (mut lo, mut hi) = (2.0, 3.0);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if circle_optimality_margin(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Erosion of `c` by `s W` followed by dilation by `s W`, with `W` the
/// (polygonal) Wulff shape. `None` when the erosion is empty. Lower-dimensional
/// erosions (segments, points) still dilate to a full polygon.
pub fn opening_by_wulff(c: &ConvexPolygon, s: f64, g: &Gauge) -> Result<Option<ConvexPolygon>> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(Error::InvalidParameter(format!("opening radius must be nonnegative, got {s}")));
    }
    if s == 0.0 {
        return Ok(Some(c.clone()));
    }
    let element = g.wulff_shape()?.polygon.scale(s);
    // slack keeps exactly degenerate erosions from vanishing under rounding
    let slack = 1e-12 * (1.0 + c.perimeter());
    let mut ring = c.vertices().to_vec();
    for (n, off) in c.halfspaces() {
        ring = clip_points(&ring, n, off - element.support(n) + slack);
        if ring.is_empty() {
            return Ok(None);
        }
    }
    minkowski_hull(&ring, element.vertices()).map(Some)
}

/// `TV_phi(P) / |P|`.
pub fn shape_energy_ratio(poly: &ConvexPolygon, g: &Gauge) -> Result<f64> {
    let area = poly.area();
    if !(area > 0.0) {
        return Err(Error::DegeneratePolygon("zero area".into()));
    }
    Ok(polygon_tv_phi(poly, g)? / area)
}

/// The unit disk intersected with `[-h, h]^2`, its arcs sampled with
/// `samples` points over the full circle.
pub fn clipped_disk(h: f64, samples: usize) -> Result<ConvexPolygon> {
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!("half side must be positive, got {h}")));
    }
    let mut pts: Vec<Point> = (0..samples)
        .map(|k| {
            let t = 2.0 * PI * k as f64 / samples as f64;
            [t.cos(), t.sin()]
        })
        .filter(|p| p[0].abs() <= h && p[1].abs() <= h)
        .collect();
    if h < 1.0 {
        let c = (1.0 - h * h).sqrt();
        for sx in [-1.0, 1.0] {
            for sy in [-1.0, 1.0] {
                if c <= h {
                    pts.push([sx * h, sy * c]);
                    pts.push([sx * c, sy * h]);
                } else {
                    pts.push([sx * h, sy * h]);
                }
            }
        }
    }
    ConvexPolygon::from_points(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(trivial_threshold(1.0, 2).unwrap(), 2.0);
        assert_eq!(trivial_threshold(2.0, 2).unwrap(), 1.0);
        assert_eq!(trivial_threshold(1.0, 3).unwrap(), 3.0);
        assert!(trivial_threshold(0.0, 2).is_err());
    }

    #[test]
    fn polygon_perimeters() {
        let sq = ConvexPolygon::rectangle(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!((polygon_tv_phi(&sq, &Gauge::l1()).unwrap() - 4.0).abs() < 1e-12);
        assert!((polygon_tv_phi(&sq, &Gauge::l2()).unwrap() - 4.0).abs() < 1e-12);
        let disk = ConvexPolygon::regular(720, 1.0).unwrap();
        assert!((polygon_tv_phi(&disk, &Gauge::l1()).unwrap() - 8.0).abs() < 1e-3);
    }

    #[test]
    fn wulff_identities() {
        let (tv, area) = wulff_tv_and_area(&Gauge::l1()).unwrap();
        assert!((tv - 8.0).abs() < 1e-12 && (area - 4.0).abs() < 1e-12);
        let (tv, area) = wulff_tv_and_area(&Gauge::linf()).unwrap();
        assert!((tv - 4.0).abs() < 1e-12 && (area - 2.0).abs() < 1e-12);
        let (tv, area) = wulff_tv_and_area(&Gauge::l2()).unwrap();
        assert!((tv - 2.0 * PI).abs() < 1e-4 && (area - PI).abs() < 1e-4);
    }

    #[test]
    fn isoperimetric_constants() {
        assert!((isoperimetric_constant(&Gauge::l1(), 2).unwrap() - 0.25).abs() < 1e-12);
        let c2 = isoperimetric_constant(&Gauge::l2(), 2).unwrap();
        assert!((c2 - 1.0 / (2.0 * PI.sqrt())).abs() < 1e-12);
        let a = Gauge::asymmetric(vec![0.5, 0.0]).unwrap();
        assert!((wulff_volume(&a, 2).unwrap() - PI).abs() < 1e-12);
        let l1_3d = Gauge::p_norm_nd(Exponent::Finite(1.0), 3).unwrap();
        assert!((wulff_volume(&l1_3d, 3).unwrap() - 8.0).abs() < 1e-12);
        assert!(wulff_volume(&Gauge::l1(), 3).is_err());
    }

    #[test]
    fn circle_closed_forms() {
        let r = circle_example(4.0).unwrap();
        assert_eq!(r.s, 0.25);
        assert!((r.h - 15f64.sqrt() / 4.0).abs() < 1e-15);
        assert!((r.tv - 2.0 * 15f64.sqrt()).abs() < 1e-14);
        assert!((r.energy - (r.tv + 4.0 * (PI - r.area))).abs() < 1e-12);
        assert!(r.valid);
        let inf = circle_example(f64::INFINITY).unwrap();
        assert_eq!((inf.tv, inf.area, inf.energy), (8.0, PI, 8.0));
        assert!(circle_example(2f64.sqrt()).unwrap().valid);
        assert!(!circle_example(1.2).unwrap().valid);
        assert!(circle_example(0.5).is_err());
    }

    #[test]
    fn deficit_series_matches_direct_formula() {
        let s: f64 = 0.00999;
        let direct = s.asin() - s * (1.0 - s * s).sqrt();
        assert!((cap_deficit(s) / direct - 1.0).abs() < 1e-9);
    }

    #[test]
    fn critical_lambda() {
        let t = circle_optimality_threshold();
        assert!((t - 2.4754).abs() < 1e-3, "{t}");
        assert!(circle_optimality_margin(2.0) < 0.0 && circle_optimality_margin(3.0) > 0.0);
    }

    #[test]
    fn opening_examples() {
        let c = ConvexPolygon::rectangle(-2.0, 2.0, -2.0, 2.0).unwrap();
        assert_eq!(opening_by_wulff(&c, 0.0, &Gauge::l1()).unwrap().unwrap(), c);
        let o = opening_by_wulff(&c, 1.0, &Gauge::l1()).unwrap().unwrap();
        assert!(o.hausdorff(&c) < 1e-9);
        // erosion collapses to a segment but the opening is still the rectangle
        let r = ConvexPolygon::rectangle(-2.0, 2.0, -1.0, 1.0).unwrap();
        let o = opening_by_wulff(&r, 1.0, &Gauge::l1()).unwrap().unwrap();
        assert!(o.hausdorff(&r) < 1e-9);
        assert!(opening_by_wulff(&r, 1.5, &Gauge::l1()).unwrap().is_none());
    }

    #[test]
    fn opening_of_disk_is_clipped_disk() {
        let disk = ConvexPolygon::regular(720, 1.0).unwrap();
        let o = opening_by_wulff(&disk, 0.25, &Gauge::l1()).unwrap().unwrap();
        let target = clipped_disk(15f64.sqrt() / 4.0, 4 * 720).unwrap();
        assert!(o.hausdorff(&target) <= 2e-3, "{}", o.hausdorff(&target));
    }

    #[test]
    fn energy_ratios() {
        let w = ConvexPolygon::rectangle(-1.0, 1.0, -1.0, 1.0).unwrap();
        assert!((shape_energy_ratio(&w, &Gauge::l1()).unwrap() - 2.0).abs() < 1e-12);
        let half = ConvexPolygon::rectangle(-1.0, 1.0, -1.0, 0.0).unwrap();
        assert!((shape_energy_ratio(&half, &Gauge::l1()).unwrap() - 3.0).abs() < 1e-12);
        let u = clipped_disk(15f64.sqrt() / 4.0, 8 * 720).unwrap();
        let ratio = shape_energy_ratio(&u, &Gauge::l1()).unwrap();
        let r = circle_example(4.0).unwrap();
        assert!((ratio - r.tv / r.area).abs() < 1e-4, "{ratio}");
    }
}
