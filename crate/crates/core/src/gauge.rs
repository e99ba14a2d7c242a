//! Anisotropies: gauges `phi`, their duals `phi°`, and Wulff shapes.
//!
//! A gauge is convex, positively 1-homogeneous and positive away from the
//! origin, but need not be even. The Wulff shape uses the minus-sign
//! convention
//!
//! ```text
//! W_phi = { x : -x . y <= phi(y) for all y }
//! ```
//!
//! so that `phi` is the support function of `-W_phi` and `phi°` is the
//! Minkowski functional of `-W_phi`. Code in this crate never assumes
//! `phi(-y) == phi(y)`; whenever a set is needed for duality it is `-W_phi`.
//!
//! Supported kinds:
//!
//! | kind        | `phi(y)`                    | `-W_phi`                      |
//! |-------------|-----------------------------|-------------------------------|
//! | p-norm      | `|y|_p`                     | `{ |x|_q <= 1 }`              |
//! | weighted    | `|(w_i y_i)|_p`             | `{ |(x_i / w_i)|_q <= 1 }`    |
//! | polyhedral  | `max_v (-v) . y`, v in W    | `conv(-v)`                    |
//! | asymmetric  | `|y|_2 + a . y`, `|a|_2 < 1`| disk of radius 1 about `a`    |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::polygon::{self, ConvexPolygon, Point};

/// Vertex count used for polygonal Wulff shapes of smooth gauges.
pub const WULFF_SAMPLES: usize = 720;

/// Vertex count used when the dual of a smooth non-separable gauge has to be
/// represented as a polyhedral gauge.
pub const DUAL_SAMPLES: usize = 4096;

const BISECTION_STEPS: usize = 200;

/// Exponent `p` in `[1, inf]`; infinity is explicit so duals stay exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidGauge(format!("exponent must lie in [1, inf], got {p}")))
        }
    }

    /// Hölder conjugate `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Self {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(1.0) => Exponent::Infinity,
            Exponent::Finite(p) => Exponent::Finite(p / (p - 1.0)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Infinity => f64::INFINITY,
            Exponent::Finite(p) => p,
        }
    }

    fn reciprocal(self) -> f64 {
        match self {
            Exponent::Infinity => 0.0,
            Exponent::Finite(p) => 1.0 / p,
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Infinity => s.serialize_str("inf"),
            Exponent::Finite(p) => s.serialize_f64(*p),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Number(p) => p,
            Raw::Text(t) => match t.to_ascii_lowercase().as_str() {
                "inf" | "infinity" => f64::INFINITY,
                other => other.parse().map_err(serde::de::Error::custom)?,
            },
        };
        Exponent::new(p).map_err(serde::de::Error::custom)
    }
}

/// JSON form of a gauge, e.g. `{"kind":"p-norm","p":1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GaugeSpec {
    PNorm {
        p: Exponent,
        #[serde(default = "default_dim", skip_serializing_if = "is_two")]
        dim: usize,
    },
    Weighted { p: Exponent, weights: Vec<f64> },
    Polyhedral { wulff_vertices: Vec<Point> },
    Asymmetric { a: Vec<f64> },
}

fn default_dim() -> usize {
    2
}

fn is_two(n: &usize) -> bool {
    *n == 2
}

#[derive(Debug, Clone)]
enum Kind {
    PNorm(Exponent),
    Weighted { p: Exponent, weights: Vec<f64> },
    Polyhedral(Polyhedron),
    Asymmetric { a: Vec<f64>, a_norm2: f64 },
}

#[derive(Debug, Clone)]
struct Polyhedron {
    wulff: ConvexPolygon,
    minus_wulff: ConvexPolygon,
    /// Facets `n . x <= c` of `-W_phi` in counterclockwise order, `c > 0`.
    facets: Vec<(Point, f64)>,
}

/// Planar gauges with closed-form kernels, for monomorphized inner loops.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Planar {
    L1,
    L2,
    LInf,
    /// `|y| + a . y`; `-W` is the unit disk centered at `a`.
    Shifted([f64; 2]),
    General,
}

/// An immutable anisotropy.
#[derive(Debug, Clone)]
pub struct Gauge {
    kind: Kind,
    dim: usize,
}

/// Polygonal Wulff shape. `exact` is false for sampled smooth gauges.
#[derive(Debug, Clone, Serialize)]
pub struct WulffShape {
    pub polygon: ConvexPolygon,
    pub exact: bool,
    pub bounding_radius: f64,
}

impl TryFrom<GaugeSpec> for Gauge {
    type Error = Error;

    fn try_from(spec: GaugeSpec) -> Result<Self> {
        match spec {
            GaugeSpec::PNorm { p, dim } => Gauge::p_norm_nd(p, dim),
            GaugeSpec::Weighted { p, weights } => Gauge::weighted(p, weights),
            GaugeSpec::Polyhedral { wulff_vertices } => Gauge::polyhedral(&wulff_vertices),
            GaugeSpec::Asymmetric { a } => Gauge::asymmetric(a),
        }
    }
}

impl Gauge {
    /// `|.|_p` on the plane.
    pub fn p_norm(p: Exponent) -> Self {
        Self { kind: Kind::PNorm(p), dim: 2 }
    }

    pub fn p_norm_nd(p: Exponent, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidGauge("dimension must be positive".into()));
        }
        Ok(Self { kind: Kind::PNorm(p), dim })
    }

    pub fn l1() -> Self {
        Self::p_norm(Exponent::Finite(1.0))
    }

    pub fn l2() -> Self {
        Self::p_norm(Exponent::Finite(2.0))
    }

    pub fn linf() -> Self {
        Self::p_norm(Exponent::Infinity)
    }

    pub fn weighted(p: Exponent, weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidGauge("weights must be finite and positive".into()));
        }
        let dim = weights.len();
        Ok(Self { kind: Kind::Weighted { p, weights }, dim })
    }

    /// Polyhedral gauge from the vertices of its Wulff shape. The hull of the
    /// points must contain the origin in its interior.
    pub fn polyhedral(wulff_vertices: &[Point]) -> Result<Self> {
        let wulff = ConvexPolygon::from_points(wulff_vertices)
            .map_err(|e| Error::InvalidGauge(format!("Wulff vertices: {e}")))?;
        let minus_wulff = wulff.negate();
        let facets: Vec<(Point, f64)> = minus_wulff.halfspaces();
        let scale = wulff
            .vertices()
            .iter()
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max);
        if facets.iter().any(|&(_, c)| c <= 1e-12 * scale) {
            return Err(Error::InvalidGauge(
                "origin must lie in the interior of the Wulff shape".into(),
            ));
        }
        Ok(Self { kind: Kind::Polyhedral(Polyhedron { wulff, minus_wulff, facets }), dim: 2 })
    }

    /// `|y|_2 + a . y` with `|a|_2 < 1`.
    pub fn asymmetric(a: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidGauge("shift vector must be finite and nonempty".into()));
        }
        let a_norm2: f64 = a.iter().map(|c| c * c).sum();
        if a_norm2 >= 1.0 {
            return Err(Error::InvalidGauge(format!(
                "asymmetric shift needs |a|_2 < 1, got {}",
                a_norm2.sqrt()
            )));
        }
        let dim = a.len();
        Ok(Self { kind: Kind::Asymmetric { a, a_norm2 }, dim })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GaugeSpec = serde_json::from_str(text)?;
        Gauge::try_from(spec)
    }

    pub fn spec(&self) -> GaugeSpec {
        match &self.kind {
            Kind::PNorm(p) => GaugeSpec::PNorm { p: *p, dim: self.dim },
            Kind::Weighted { p, weights } => GaugeSpec::Weighted { p: *p, weights: weights.clone() },
            Kind::Polyhedral(poly) => GaugeSpec::Polyhedral {
                wulff_vertices: poly.wulff.vertices().to_vec(),
            },
            Kind::Asymmetric { a, .. } => GaugeSpec::Asymmetric { a: a.clone() },
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Whether `W_phi` is a polytope.
    pub fn is_crystalline(&self) -> bool {
        match &self.kind {
            Kind::Polyhedral(_) => true,
            Kind::PNorm(p) | Kind::Weighted { p, .. } => {
                matches!(p, Exponent::Infinity) || *p == Exponent::Finite(1.0)
            }
            Kind::Asymmetric { .. } => false,
        }
    }

    fn check_dim(&self, len: usize) {
        assert_eq!(len, self.dim, "vector length does not match gauge dimension");
    }

    /// `phi(y)`.
    pub fn eval(&self, y: &[f64]) -> f64 {
        self.check_dim(y.len());
        match &self.kind {
            Kind::PNorm(p) => p_norm(y.iter().copied(), *p),
            Kind::Weighted { p, weights } => {
                p_norm(y.iter().zip(weights).map(|(v, w)| v * w), *p)
            }
            Kind::Polyhedral(poly) => {
                let y = [y[0], y[1]];
                poly.minus_wulff.support(y).max(0.0)
            }
            Kind::Asymmetric { a, .. } => {
                let norm = p_norm(y.iter().copied(), Exponent::Finite(2.0));
                (norm + dot(a, y)).max(0.0)
            }
        }
    }

    pub(crate) fn planar(&self) -> Planar {
        if self.dim != 2 {
            return Planar::General;
        }
        match &self.kind {
            Kind::PNorm(Exponent::Finite(p)) if *p == 1.0 => Planar::L1,
            Kind::PNorm(Exponent::Finite(p)) if *p == 2.0 => Planar::L2,
            Kind::PNorm(Exponent::Infinity) => Planar::LInf,
            Kind::Asymmetric { a, .. } => Planar::Shifted([a[0], a[1]]),
            _ => Planar::General,
        }
    }

    /// Planar fast path of [`Gauge::eval`].
    #[inline]
    pub fn eval2(&self, y: Point) -> f64 {
        debug_assert_eq!(self.dim, 2);
        match &self.kind {
            Kind::PNorm(Exponent::Finite(p)) if *p == 1.0 => y[0].abs() + y[1].abs(),
            Kind::PNorm(Exponent::Finite(p)) if *p == 2.0 => y[0].hypot(y[1]),
            Kind::PNorm(Exponent::Infinity) => y[0].abs().max(y[1].abs()),
            Kind::Asymmetric { a, .. } => (y[0].hypot(y[1]) + a[0] * y[0] + a[1] * y[1]).max(0.0),
            _ => self.eval(&y),
        }
    }

    /// `phi°(x) = max_{phi(y) <= 1} x . y`, the Minkowski functional of `-W_phi`.
    pub fn eval_dual(&self, x: &[f64]) -> f64 {
        self.check_dim(x.len());
        match &self.kind {
            Kind::PNorm(p) => p_norm(x.iter().copied(), p.conjugate()),
            Kind::Weighted { p, weights } => {
                p_norm(x.iter().zip(weights).map(|(v, w)| v / w), p.conjugate())
            }
            Kind::Polyhedral(poly) => {
                let x = [x[0], x[1]];
                poly.facets
                    .iter()
                    .map(|&(n, c)| polygon::dot(n, x) / c)
                    .fold(0.0, f64::max)
            }
            Kind::Asymmetric { a, a_norm2 } => shifted_ball_gauge(x, a, *a_norm2),
        }
    }

    /// Maximizer `eta` of `x . y` over `{phi(y) <= 1}`: `phi(eta) = 1` and
    /// `x . eta = phi°(x)`. Ties resolve to the lowest index in the canonical
    /// coordinate or facet order.
    pub fn dual_extremal(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x.len());
        if x.iter().all(|&c| c == 0.0) {
            return Err(Error::ZeroInput);
        }
        Ok(match &self.kind {
            Kind::PNorm(p) => p_norm_extremal(x, *p),
            Kind::Weighted { p, weights } => {
                let scaled: Vec<f64> = x.iter().zip(weights).map(|(v, w)| v / w).collect();
                p_norm_extremal(&scaled, *p)
                    .into_iter()
                    .zip(weights)
                    .map(|(z, w)| z / w)
                    .collect()
            }
            Kind::Polyhedral(poly) => {
                let xp = [x[0], x[1]];
                let mut best = 0;
                let mut best_val = f64::NEG_INFINITY;
                for (k, &(n, c)) in poly.facets.iter().enumerate() {
                    let val = polygon::dot(n, xp) / c;
                    if val > best_val {
                        best_val = val;
                        best = k;
                    }
                }
                let (n, c) = poly.facets[best];
                vec![n[0] / c, n[1] / c]
            }
            Kind::Asymmetric { a, a_norm2 } => {
                // gradient of the shifted-ball gauge: (x - lambda a) / sqrt(B^2 + A C)
                let lambda = shifted_ball_gauge(x, a, *a_norm2);
                let b = dot(a, x);
                let c: f64 = x.iter().map(|v| v * v).sum();
                let denom = (b * b + (1.0 - a_norm2) * c).sqrt();
                x.iter().zip(a).map(|(xi, ai)| (xi - lambda * ai) / denom).collect()
            }
        })
    }

    /// The dual gauge `phi°` as a gauge in its own right. Exact for p-norm,
    /// weighted and polyhedral gauges; the asymmetric gauge's dual is a
    /// polyhedral gauge sampled at [`DUAL_SAMPLES`] boundary points.
    pub fn dual(&self) -> Result<Gauge> {
        match &self.kind {
            Kind::PNorm(p) => Gauge::p_norm_nd(p.conjugate(), self.dim),
            Kind::Weighted { p, weights } => {
                Gauge::weighted(p.conjugate(), weights.iter().map(|w| 1.0 / w).collect())
            }
            Kind::Polyhedral(poly) => {
                // W_{phi°} = B_phi = -{phi <= 1}, whose vertices are -n/c
                let verts: Vec<Point> = poly
                    .facets
                    .iter()
                    .map(|&(n, c)| [-n[0] / c, -n[1] / c])
                    .collect();
                Gauge::polyhedral(&verts)
            }
            Kind::Asymmetric { .. } => {
                if self.dim != 2 {
                    return Err(Error::UnsupportedDimension(self.dim));
                }
                let step = std::f64::consts::TAU / DUAL_SAMPLES as f64;
                let verts: Vec<Point> = (0..DUAL_SAMPLES)
                    .map(|k| {
                        let t = step * k as f64;
                        let d = [t.cos(), t.sin()];
                        let r = self.eval(&[-d[0], -d[1]]);
                        [d[0] / r, d[1] / r]
                    })
                    .collect();
                Gauge::polyhedral(&verts)
            }
        }
    }

    /// The Wulff shape as a counterclockwise polygon (2D only).
    pub fn wulff_shape(&self) -> Result<WulffShape> {
        if self.dim != 2 {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        let exact_vertices: Option<Vec<Point>> = match &self.kind {
            Kind::Polyhedral(poly) => Some(poly.wulff.vertices().to_vec()),
            Kind::PNorm(p) | Kind::Weighted { p, .. } => {
                let (w0, w1) = match &self.kind {
                    Kind::Weighted { weights, .. } => (weights[0], weights[1]),
                    _ => (1.0, 1.0),
                };
                match p {
                    // W = { |x_i / w_i|_inf <= 1 }
                    Exponent::Finite(v) if *v == 1.0 => {
                        Some(vec![[w0, -w1], [w0, w1], [-w0, w1], [-w0, -w1]])
                    }
                    // W = { |x_i / w_i|_1 <= 1 }
                    Exponent::Infinity => Some(vec![[w0, 0.0], [0.0, w1], [-w0, 0.0], [0.0, -w1]]),
                    _ => None,
                }
            }
            Kind::Asymmetric { .. } => None,
        };
        let (polygon, exact) = match exact_vertices {
            Some(v) => (ConvexPolygon::from_points(&v)?, true),
            None => {
                // boundary of W in direction d sits at d / phi°(-d)
                let step = std::f64::consts::TAU / WULFF_SAMPLES as f64;
                let verts: Vec<Point> = (0..WULFF_SAMPLES)
                    .map(|k| {
                        let t = step * k as f64;
                        let d = [t.cos(), t.sin()];
                        let r = self.eval_dual(&[-d[0], -d[1]]);
                        [d[0] / r, d[1] / r]
                    })
                    .collect();
                (ConvexPolygon::from_points(&verts)?, false)
            }
        };
        let bounding_radius = polygon
            .vertices()
            .iter()
            .map(|v| v[0].hypot(v[1]))
            .fold(0.0, f64::max);
        Ok(WulffShape { polygon, exact, bounding_radius })
    }

    /// Whether `x` lies in `-W_phi` up to `tol` in the dual gauge.
    pub fn in_minus_wulff(&self, x: &[f64], tol: f64) -> bool {
        self.eval_dual(x) <= 1.0 + tol
    }

    /// Euclidean projection onto `-W_phi`.
    pub fn project_minus_wulff(&self, x: &[f64]) -> Vec<f64> {
        self.check_dim(x.len());
        if self.dim == 2 {
            return self.project2([x[0], x[1]]).to_vec();
        }
        let mut z = x.to_vec();
        self.project_in_place(&mut z);
        z
    }

    /// Planar fast path of [`Gauge::project_minus_wulff`].
    #[inline]
    pub fn project2(&self, x: Point) -> Point {
        debug_assert_eq!(self.dim, 2);
        match &self.kind {
            Kind::PNorm(Exponent::Finite(p)) if *p == 1.0 => {
                [x[0].clamp(-1.0, 1.0), x[1].clamp(-1.0, 1.0)]
            }
            Kind::PNorm(Exponent::Finite(p)) if *p == 2.0 => {
                let r = x[0].hypot(x[1]);
                if r <= 1.0 {
                    x
                } else {
                    [x[0] / r, x[1] / r]
                }
            }
            Kind::Polyhedral(poly) => {
                if poly.facets.iter().all(|&(n, c)| polygon::dot(n, x) <= c) {
                    x
                } else {
                    poly.minus_wulff.project_boundary(x)
                }
            }
            Kind::Asymmetric { a, .. } => {
                let d = [x[0] - a[0], x[1] - a[1]];
                let r = d[0].hypot(d[1]);
                if r <= 1.0 {
                    x
                } else {
                    [a[0] + d[0] / r, a[1] + d[1] / r]
                }
            }
            _ => {
                let mut z = [x[0], x[1]];
                self.project_in_place(&mut z);
                z
            }
        }
    }

    fn project_in_place(&self, z: &mut [f64]) {
        match &self.kind {
            Kind::PNorm(p) => project_weighted_ball(z, None, p.conjugate()),
            Kind::Weighted { p, weights } => project_weighted_ball(z, Some(weights), p.conjugate()),
            Kind::Asymmetric { a, .. } => {
                let r = z.iter().zip(a).map(|(v, c)| (v - c) * (v - c)).sum::<f64>().sqrt();
                if r > 1.0 {
                    for (v, c) in z.iter_mut().zip(a) {
                        *v = c + (*v - c) / r;
                    }
                }
            }
            Kind::Polyhedral(_) => {
                let p = self.project2([z[0], z[1]]);
                z.copy_from_slice(&p);
            }
        }
    }

    /// Constants `r <= R` with `r |y|_2 <= phi(y) <= R |y|_2` for all `y`.
    /// These are the in- and circumradius of `W_phi` about the origin
    /// (bounds rather than exact values for weighted gauges).
    pub fn euclidean_bounds(&self) -> (f64, f64) {
        let p_bounds = |p: Exponent| {
            // |y|_p / |y|_2 ranges between 1 and n^(1/p - 1/2)
            let e = (self.dim as f64).powf(p.reciprocal() - 0.5);
            if e < 1.0 {
                (e, 1.0)
            } else {
                (1.0, e)
            }
        };
        match &self.kind {
            Kind::PNorm(p) => p_bounds(*p),
            Kind::Weighted { p, weights } => {
                let (lo, hi) = p_bounds(*p);
                let wmin = weights.iter().copied().fold(f64::INFINITY, f64::min);
                let wmax = weights.iter().copied().fold(0.0, f64::max);
                (lo * wmin, hi * wmax)
            }
            Kind::Polyhedral(poly) => {
                let r = poly.facets.iter().map(|&(_, c)| c).fold(f64::INFINITY, f64::min);
                let big = poly
                    .wulff
                    .vertices()
                    .iter()
                    .map(|v| v[0].hypot(v[1]))
                    .fold(0.0, f64::max);
                (r, big)
            }
            Kind::Asymmetric { a_norm2, .. } => {
                let a = a_norm2.sqrt();
                (1.0 - a, 1.0 + a)
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn p_norm(values: impl Iterator<Item = f64>, p: Exponent) -> f64 {
    match p {
        Exponent::Infinity => values.fold(0.0, |m, v| m.max(v.abs())),
        Exponent::Finite(1.0) => values.map(f64::abs).sum(),
        Exponent::Finite(2.0) => {
            let mut acc = 0.0f64;
            for v in values {
                acc = acc.hypot(v);
            }
            acc
        }
        Exponent::Finite(p) => {
            let vals: Vec<f64> = values.map(f64::abs).collect();
            let m = vals.iter().copied().fold(0.0, f64::max);
            if m == 0.0 {
                return 0.0;
            }
            m * vals.iter().map(|v| (v / m).powf(p)).sum::<f64>().powf(1.0 / p)
        }
    }
}

/// Maximizer of `x . y` over the unit `l^p` ball.
fn p_norm_extremal(x: &[f64], p: Exponent) -> Vec<f64> {
    match p {
        Exponent::Finite(1.0) => {
            let mut k = 0;
            for (i, xi) in x.iter().enumerate() {
                if xi.abs() > x[k].abs() {
                    k = i;
                }
            }
            let mut eta = vec![0.0; x.len()];
            eta[k] = if x[k] >= 0.0 { 1.0 } else { -1.0 };
            eta
        }
        Exponent::Infinity => x.iter().map(|&v| if v >= 0.0 { 1.0 } else { -1.0 }).collect(),
        Exponent::Finite(2.0) => {
            let n = p_norm(x.iter().copied(), p);
            x.iter().map(|xi| xi / n).collect()
        }
        Exponent::Finite(_) => {
            let q = p.conjugate().value();
            let nq = p_norm(x.iter().copied(), p.conjugate());
            x.iter()
                .map(|&xi| xi.signum() * (xi.abs() / nq).powf(q - 1.0))
                .map(|v| if v.is_nan() { 0.0 } else { v })
                .collect()
        }
    }
}

/// Minkowski functional of the unit Euclidean ball centered at `a`:
/// the positive root of `(1 - |a|^2) t^2 + 2 (a . x) t - |x|^2 = 0`.
fn shifted_ball_gauge(x: &[f64], a: &[f64], a_norm2: f64) -> f64 {
    let b = dot(a, x);
    let c: f64 = x.iter().map(|v| v * v).sum();
    if c == 0.0 {
        return 0.0;
    }
    let disc = (b * b + (1.0 - a_norm2) * c).sqrt();
    if b >= 0.0 {
        c / (b + disc)
    } else {
        (disc - b) / (1.0 - a_norm2)
    }
}

/// Projection onto `{ sum |z_i / w_i|^q <= 1 }` (or the max form for
/// `q = inf`). Closed form for `q` in {1, 2, inf} when unweighted; otherwise
/// bisection on the KKT multiplier, finished by a radial rescale so the
/// result is feasible.
fn project_weighted_ball(z: &mut [f64], weights: Option<&Vec<f64>>, q: Exponent) {
    let w = |i: usize| weights.map_or(1.0, |w| w[i]);
    let gauge = |z: &[f64]| p_norm(z.iter().enumerate().map(|(i, v)| v / w(i)), q);
    if gauge(z) <= 1.0 {
        return;
    }
    match q {
        Exponent::Infinity => {
            for (i, v) in z.iter_mut().enumerate() {
                *v = v.clamp(-w(i), w(i));
            }
            return;
        }
        Exponent::Finite(qv) if qv == 2.0 && weights.is_none() => {
            let r = gauge(z);
            z.iter_mut().for_each(|v| *v /= r);
            return;
        }
        Exponent::Finite(qv) if qv == 1.0 && weights.is_none() => {
            project_l1_ball(z);
            return;
        }
        _ => {}
    }
    let x: Vec<f64> = z.to_vec();
    // z_i(mu) = argmin_t 0.5 (t - |x_i|)^2 + mu |t / w_i|^q, then sign
    let solve = |mu: f64, out: &mut [f64]| {
        for (i, (o, &xi)) in out.iter_mut().zip(&x).enumerate() {
            let target = xi.abs();
            let wi = w(i);
            let t = match q {
                Exponent::Finite(1.0) => (target - mu / wi).max(0.0),
                Exponent::Finite(2.0) => target / (1.0 + 2.0 * mu / (wi * wi)),
                Exponent::Finite(qv) => {
                    let (mut lo, mut hi) = (0.0, target);
                    for _ in 0..BISECTION_STEPS {
                        let mid = 0.5 * (lo + hi);
                        let lhs = mid + mu * qv * mid.powf(qv - 1.0) / wi.powf(qv);
                        if lhs > target {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                        if hi - lo <= f64::EPSILON * target {
                            break;
                        }
                    }
                    lo
                }
                Exponent::Infinity => unreachable!(),
            };
            *o = xi.signum() * t;
        }
    };
    let mut buf = x.clone();
    let mut hi = 1.0;
    loop {
        solve(hi, &mut buf);
        if gauge(&buf) <= 1.0 {
            break;
        }
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        solve(mid, &mut buf);
        if gauge(&buf) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    solve(hi, z);
    let g = gauge(z);
    if g > 1.0 {
        z.iter_mut().for_each(|v| *v /= g);
    }
}

/// Sort-based projection onto the unit l1 ball for a point outside it.
fn project_l1_ball(z: &mut [f64]) {
    let mut mags: Vec<f64> = z.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, m) in mags.iter().enumerate() {
        cumsum += m;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if *m > t {
            theta = t;
        } else {
            break;
        }
    }
    for v in z.iter_mut() {
        *v = v.signum() * (v.abs() - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_polyhedral() -> Gauge {
        Gauge::polyhedral(&[[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]]).unwrap()
    }

    #[test]
    fn l1_values() {
        let g = Gauge::l1();
        assert_eq!(g.eval(&[1.0, 1.0]), 2.0);
        assert_eq!(g.eval(&[0.0, 0.0]), 0.0);
        assert_eq!(g.eval_dual(&[3.0, -2.0]), 3.0);
        assert_eq!(g.eval_dual(&[0.0, 0.0]), 0.0);
    }

    #[test]
    fn asymmetric_values() {
        let g = Gauge::asymmetric(vec![0.5, 0.0]).unwrap();
        assert_eq!(g.eval(&[1.0, 0.0]), 1.5);
        assert_eq!(g.eval(&[-1.0, 0.0]), 0.5);
        // max y1 over phi(y) <= 1 is attained at y = (2/3, 0)
        assert!((g.eval_dual(&[1.0, 0.0]) - 2.0 / 3.0).abs() < 1e-15);
        assert!((g.eval_dual(&[-1.0, 0.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn polyhedral_square_matches_l1() {
        let g = square_polyhedral();
        assert_eq!(g.eval_dual(&[1.0, 1.0]), 1.0);
        assert_eq!(g.eval(&[1.0, 1.0]), 2.0);
        assert_eq!(g.eval(&[-3.0, 0.5]), 3.5);
    }

    #[test]
    fn polyhedral_rejects_origin_outside() {
        let err = Gauge::polyhedral(&[[1.0, 1.0], [2.0, 1.0], [2.0, 2.0], [1.0, 2.0]]);
        assert!(matches!(err, Err(Error::InvalidGauge(_))));
    }

    #[test]
    fn extremal_examples() {
        assert_eq!(Gauge::l2().dual_extremal(&[3.0, 4.0]).unwrap(), vec![0.6, 0.8]);
        assert_eq!(Gauge::l1().dual_extremal(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(Gauge::l1().dual_extremal(&[1.0, 1.0]).unwrap(), vec![1.0, 0.0]);
        assert!(matches!(Gauge::l1().dual_extremal(&[0.0, 0.0]), Err(Error::ZeroInput)));
    }

    #[test]
    fn projection_examples() {
        assert_eq!(Gauge::l1().project_minus_wulff(&[2.0, -0.5]), vec![1.0, -0.5]);
        assert_eq!(Gauge::l1().project_minus_wulff(&[0.3, -0.5]), vec![0.3, -0.5]);
        let p = Gauge::l2().project_minus_wulff(&[3.0, 4.0]);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn linf_projection_onto_l1_ball() {
        let g = Gauge::linf();
        let p = g.project_minus_wulff(&[2.0, 0.5]);
        // nearest point of the diamond to (2, 0.5) is (1, 0)
        assert!((p[0] - 1.0).abs() < 1e-12 && p[1].abs() < 1e-12, "{p:?}");
        let p = g.project_minus_wulff(&[1.0, 1.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && (p[1] - 0.5).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn asymmetric_wulff_is_shifted_disk() {
        // -x . y <= |y| + a . y  <=>  |x + a| <= 1
        let g = Gauge::asymmetric(vec![0.5, 0.0]).unwrap();
        let w = g.wulff_shape().unwrap();
        assert!(!w.exact);
        for v in w.polygon.vertices() {
            assert!(((v[0] + 0.5).hypot(v[1]) - 1.0).abs() < 1e-12, "{v:?}");
        }
        assert!((w.bounding_radius - 1.5).abs() < 1e-9);
    }

    #[test]
    fn wulff_of_l1_is_square() {
        let w = Gauge::l1().wulff_shape().unwrap();
        assert!(w.exact);
        let mut v = w.polygon.vertices().to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(v, vec![[-1.0, -1.0], [-1.0, 1.0], [1.0, -1.0], [1.0, 1.0]]);
        assert!(matches!(
            Gauge::p_norm_nd(Exponent::Finite(1.0), 3).unwrap().wulff_shape(),
            Err(Error::UnsupportedDimension(3))
        ));
    }

    #[test]
    fn wulff_of_l2_is_720_gon() {
        let w = Gauge::l2().wulff_shape().unwrap();
        assert_eq!(w.polygon.len(), WULFF_SAMPLES);
        for v in w.polygon.vertices() {
            assert!((v[0].hypot(v[1]) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn json_specs() {
        let g = Gauge::from_json(r#"{"kind":"p-norm","p":1}"#).unwrap();
        assert_eq!(g.eval(&[1.0, -1.0]), 2.0);
        let g = Gauge::from_json(r#"{"kind":"p-norm","p":"inf"}"#).unwrap();
        assert_eq!(g.eval(&[1.0, -3.0]), 3.0);
        let g = Gauge::from_json(r#"{"kind":"weighted","p":2,"weights":[1,2]}"#).unwrap();
        assert!((g.eval(&[0.0, 1.0]) - 2.0).abs() < 1e-15);
        let g = Gauge::from_json(r#"{"kind":"polyhedral","wulff_vertices":[[1,0],[0,1],[-1,0],[0,-1]]}"#)
            .unwrap();
        assert_eq!(g.eval(&[1.0, 1.0]), 1.0);
        let g = Gauge::from_json(r#"{"kind":"asymmetric","a":[0.5,0]}"#).unwrap();
        assert_eq!(g.eval(&[1.0, 0.0]), 1.5);
        assert!(Gauge::from_json(r#"{"kind":"asymmetric","a":[1.5,0]}"#).is_err());
        assert!(Gauge::from_json(r#"{"kind":"p-norm","p":0.5}"#).is_err());
        assert!(Gauge::from_json(r#"{"kind":"cube"}"#).is_err());
        let spec = serde_json::to_string(&Gauge::linf().spec()).unwrap();
        assert_eq!(spec, r#"{"kind":"p-norm","p":"inf"}"#);
    }

    #[test]
    fn euclidean_bounds_of_l1() {
        let (r, big) = Gauge::l1().euclidean_bounds();
        assert!((r - 1.0).abs() < 1e-15);
        assert!((big - 2f64.sqrt()).abs() < 1e-15);
        let (r, big) = square_polyhedral().euclidean_bounds();
        assert!((r - 1.0).abs() < 1e-15);
        assert!((big - 2f64.sqrt()).abs() < 1e-15);
    }
}
