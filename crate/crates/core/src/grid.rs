//! Scalar and vector fields on a uniform planar grid.
//!
//! Cells are indexed `(i, j)` with `i` along x (columns) and `j` along y
//! (rows), stored row-major. Physical coordinates put the origin at the
//! grid center: cell `(i, j)` is centered at
//! `((i + 0.5 - width/2) h, (j + 0.5 - height/2) h)` with `h` the spacing.
//!
//! Two difference stencils are used, both with Neumann boundaries (the
//! difference leaving the grid is zero):
//!
//! * forward: `(u[i+1] - u[i]) / h`, zero in the last column/row;
//! * backward: `(u[i] - u[i-1]) / h`, zero in the first column/row.
//!
//! Each has a divergence that is its exact negative adjoint. The discrete
//! anisotropic total variation averages both stencils,
//!
//! ```text
//! TV_phi(u) = h^2 sum_cells ( phi(D+ u) + phi(D- u) ) / 2,
//! ```
//!
//! which makes `TV_phi(-u) == TV_phi(u(-.))` hold exactly for non-even
//! gauges, since point reflection maps one stencil onto the negated other.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{Gauge, Planar};
use crate::polygon::Point;

/// Grid geometry shared by images and fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridMeta {
    pub width: usize,
    pub height: usize,
    pub spacing: f64,
}

impl GridMeta {
    pub fn new(width: usize, height: usize, spacing: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::DegenerateGrid { width, height });
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidParameter(format!("spacing must be positive, got {spacing}")));
        }
        Ok(Self { width, height, spacing })
    }

    /// `n x n` cells covering `[-half_extent, half_extent]^2`.
    pub fn square_window(half_extent: f64, n: usize) -> Result<Self> {
        Self::new(n, n, 2.0 * half_extent / n as f64)
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.width + i
    }

    #[inline]
    pub fn cell_center(&self, i: usize, j: usize) -> Point {
        [
            (i as f64 + 0.5 - 0.5 * self.width as f64) * self.spacing,
            (j as f64 + 0.5 - 0.5 * self.height as f64) * self.spacing,
        ]
    }

    /// Area of one cell, `h^2`.
    pub fn cell_area(&self) -> f64 {
        self.spacing * self.spacing
    }

    fn require_stencil(&self) -> Result<()> {
        if self.width < 2 || self.height < 2 {
            return Err(Error::DegenerateGrid { width: self.width, height: self.height });
        }
        Ok(())
    }

    fn same_as(&self, other: &GridMeta, what: &str) -> Result<()> {
        if self.width != other.width || self.height != other.height || self.spacing != other.spacing {
            return Err(Error::ShapeMismatch(format!(
                "{what}: {}x{} (h={}) vs {}x{} (h={})",
                self.width, self.height, self.spacing, other.width, other.height, other.spacing
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridImage {
    meta: GridMeta,
    values: Vec<f64>,
}

impl GridImage {
    pub fn new(meta: GridMeta, values: Vec<f64>) -> Result<Self> {
        if values.len() != meta.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                meta.width,
                meta.height
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("image values must be finite".into()));
        }
        Ok(Self { meta, values })
    }

    pub fn zeros(meta: GridMeta) -> Self {
        Self { meta, values: vec![0.0; meta.len()] }
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(meta: GridMeta, f: impl Fn(Point) -> f64) -> Self {
        let mut values = Vec::with_capacity(meta.len());
        for j in 0..meta.height {
            for i in 0..meta.width {
                values.push(f(meta.cell_center(i, j)));
            }
        }
        Self { meta, values }
    }

    /// Area fraction of each cell covered by `inside`, estimated on an
    /// `s x s` subsample lattice.
    pub fn rasterize(meta: GridMeta, supersample: usize, inside: impl Fn(Point) -> bool) -> Self {
        let s = supersample.max(1);
        let h = meta.spacing;
        let offsets: Vec<f64> = (0..s).map(|k| ((k as f64 + 0.5) / s as f64 - 0.5) * h).collect();
        let norm = 1.0 / (s * s) as f64;
        Self::from_fn(meta, |c| {
            let mut hits = 0usize;
            for &dy in &offsets {
                for &dx in &offsets {
                    if inside([c[0] + dx, c[1] + dy]) {
                        hits += 1;
                    }
                }
            }
            hits as f64 * norm
        })
    }

    pub fn meta(&self) -> GridMeta {
        self.meta
    }

    pub fn width(&self) -> usize {
        self.meta.width
    }

    pub fn height(&self) -> usize {
        self.meta.height
    }

    pub fn spacing(&self) -> f64 {
        self.meta.spacing
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.meta.index(i, j)]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { meta: self.meta, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        self.map(|v| factor * v)
    }

    pub fn negate(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn same_grid(&self, other: &GridImage) -> Result<()> {
        self.meta.same_as(&other.meta, "images")
    }

    /// `h^2 sum |u|`.
    pub fn l1_norm(&self) -> f64 {
        self.meta.cell_area() * self.values.iter().map(|v| v.abs()).sum::<f64>()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Number of cells where the two images differ, as an area (`h^2` per cell).
    pub fn symmetric_difference_area(&self, other: &GridImage) -> Result<f64> {
        self.same_grid(other)?;
        let n = self.values.iter().zip(&other.values).filter(|(a, b)| a != b).count();
        Ok(n as f64 * self.meta.cell_area())
    }
}

/// Which one-sided difference a field is paired with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stencil {
    Forward,
    Backward,
}

/// Collocated vector field: two components per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    meta: GridMeta,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl VectorField {
    pub fn zeros(meta: GridMeta) -> Self {
        Self { meta, x: vec![0.0; meta.len()], y: vec![0.0; meta.len()] }
    }

    pub fn new(meta: GridMeta, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != meta.len() || y.len() != meta.len() {
            return Err(Error::ShapeMismatch(format!(
                "vector components of length {}/{} for a {}x{} grid",
                x.len(),
                y.len(),
                meta.width,
                meta.height
            )));
        }
        Ok(Self { meta, x, y })
    }

    pub fn meta(&self) -> GridMeta {
        self.meta
    }

    #[inline]
    pub fn at(&self, k: usize) -> Point {
        [self.x[k], self.y[k]]
    }

    pub fn scale(&mut self, factor: f64) {
        self.x.iter_mut().chain(self.y.iter_mut()).for_each(|v| *v *= factor);
    }

    /// `h^2 sum <self, other>` over cells.
    pub fn inner(&self, other: &VectorField) -> f64 {
        let s: f64 = self
            .x
            .iter()
            .zip(&other.x)
            .chain(self.y.iter().zip(&other.y))
            .map(|(a, b)| a * b)
            .sum();
        s * self.meta.cell_area()
    }

    /// Largest `phi°(p) - 1` over cells, floored at zero.
    pub fn wulff_violation(&self, g: &Gauge) -> f64 {
        (0..self.meta.len())
            .map(|k| g.eval_dual(&[self.x[k], self.y[k]]) - 1.0)
            .fold(0.0, f64::max)
    }
}

/// Dual variable for the averaged-stencil total variation: one field paired
/// with the forward differences and one with the backward differences.
/// Its divergence is `(div+ forward + div- backward) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualField {
    pub forward: VectorField,
    pub backward: VectorField,
}

impl DualField {
    pub fn zeros(meta: GridMeta) -> Self {
        Self { forward: VectorField::zeros(meta), backward: VectorField::zeros(meta) }
    }

    /// Uses the same collocated field for both stencils.
    pub fn collocated(p: VectorField) -> Self {
        Self { forward: p.clone(), backward: p }
    }

    pub fn new(forward: VectorField, backward: VectorField) -> Result<Self> {
        forward.meta.same_as(&backward.meta, "dual field components")?;
        Ok(Self { forward, backward })
    }

    pub fn meta(&self) -> GridMeta {
        self.forward.meta
    }

    pub fn scale(&mut self, factor: f64) {
        self.forward.scale(factor);
        self.backward.scale(factor);
    }

    pub fn wulff_violation(&self, g: &Gauge) -> f64 {
        self.forward.wulff_violation(g).max(self.backward.wulff_violation(g))
    }
}

/// Superlevel set `{u > t}` as a 0/1 image.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSet {
    pub image: GridImage,
    pub threshold: f64,
}

pub(crate) fn gradient_into(u: &[f64], meta: GridMeta, stencil: Stencil, gx: &mut [f64], gy: &mut [f64]) {
    let (w, h) = (meta.width, meta.height);
    let inv = 1.0 / meta.spacing;
    match stencil {
        Stencil::Forward => {
            for j in 0..h {
                let row = j * w;
                for i in 0..w {
                    let k = row + i;
                    gx[k] = if i + 1 < w { (u[k + 1] - u[k]) * inv } else { 0.0 };
                    gy[k] = if j + 1 < h { (u[k + w] - u[k]) * inv } else { 0.0 };
                }
            }
        }
        Stencil::Backward => {
            for j in 0..h {
                let row = j * w;
                for i in 0..w {
                    let k = row + i;
                    gx[k] = if i > 0 { (u[k] - u[k - 1]) * inv } else { 0.0 };
                    gy[k] = if j > 0 { (u[k] - u[k - w]) * inv } else { 0.0 };
                }
            }
        }
    }
}

/// Adds `weight * div(p)` to `out`, with `div` the negative adjoint of the
/// given stencil's gradient.
pub(crate) fn add_divergence(
    px: &[f64],
    py: &[f64],
    meta: GridMeta,
    stencil: Stencil,
    weight: f64,
    out: &mut [f64],
) {
    let (w, h) = (meta.width, meta.height);
    let c = weight / meta.spacing;
    match stencil {
        Stencil::Forward => {
            for j in 0..h {
                let row = j * w;
                for i in 0..w {
                    let k = row + i;
                    let mut d = 0.0;
                    if i + 1 < w {
                        d += px[k];
                    }
                    if i > 0 {
                        d -= px[k - 1];
                    }
                    if j + 1 < h {
                        d += py[k];
                    }
                    if j > 0 {
                        d -= py[k - w];
                    }
                    out[k] += c * d;
                }
            }
        }
        Stencil::Backward => {
            for j in 0..h {
                let row = j * w;
                for i in 0..w {
                    let k = row + i;
                    let mut d = 0.0;
                    if i + 1 < w {
                        d += px[k + 1];
                    }
                    if i > 0 {
                        d -= px[k];
                    }
                    if j + 1 < h {
                        d += py[k + w];
                    }
                    if j > 0 {
                        d -= py[k];
                    }
                    out[k] += c * d;
                }
            }
        }
    }
}

pub fn gradient(u: &GridImage, stencil: Stencil) -> Result<VectorField> {
    u.meta.require_stencil()?;
    let mut p = VectorField::zeros(u.meta);
    gradient_into(&u.values, u.meta, stencil, &mut p.x, &mut p.y);
    Ok(p)
}

/// Forward differences divided by the spacing, zero in the last column/row.
pub fn forward_gradient(u: &GridImage) -> Result<VectorField> {
    gradient(u, Stencil::Forward)
}

pub fn backward_gradient(u: &GridImage) -> Result<VectorField> {
    gradient(u, Stencil::Backward)
}

/// Negative adjoint of [`gradient`] for the same stencil:
/// `<grad u, p> = -<u, div p>`.
pub fn divergence_for(p: &VectorField, stencil: Stencil) -> GridImage {
    let mut out = GridImage::zeros(p.meta);
    add_divergence(&p.x, &p.y, p.meta, stencil, 1.0, &mut out.values);
    out
}

/// Backward-difference divergence, the negative adjoint of [`forward_gradient`].
pub fn divergence(p: &VectorField) -> GridImage {
    divergence_for(p, Stencil::Forward)
}

/// `(div+ q.forward + div- q.backward) / 2`.
pub fn dual_divergence(q: &DualField) -> GridImage {
    let meta = q.meta();
    let mut out = GridImage::zeros(meta);
    add_divergence(&q.forward.x, &q.forward.y, meta, Stencil::Forward, 0.5, &mut out.values);
    add_divergence(&q.backward.x, &q.backward.y, meta, Stencil::Backward, 0.5, &mut out.values);
    out
}

/// `h^2 sum u v`.
pub fn inner(u: &GridImage, v: &GridImage) -> f64 {
    u.meta.cell_area() * u.values.iter().zip(&v.values).map(|(a, b)| a * b).sum::<f64>()
}

fn check_planar(g: &Gauge) -> Result<()> {
    if g.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: g.dim() });
    }
    Ok(())
}

/// Minimum rows per parallel task: one task per thread would leave no slack
/// for stealing, one per row drowns small grids in scheduling overhead.
pub(crate) fn rows_per_task(height: usize) -> usize {
    let threads = rayon::current_num_threads();
    if threads <= 1 {
        height.max(1)
    } else {
        (height / (4 * threads)).max(1)
    }
}

fn tv_kernel(values: &[f64], meta: GridMeta, phi: impl Fn([f64; 2]) -> f64 + Sync) -> f64 {
    let (w, h) = (meta.width, meta.height);
    let inv = 1.0 / meta.spacing;
    let rows: Vec<f64> = (0..h)
        .into_par_iter()
        .with_min_len(rows_per_task(h))
        .map(|j| {
            let row = j * w;
            let mut acc = 0.0;
            for i in 0..w {
                let k = row + i;
                let fx = if i + 1 < w { (values[k + 1] - values[k]) * inv } else { 0.0 };
                let fy = if j + 1 < h { (values[k + w] - values[k]) * inv } else { 0.0 };
                let bx = if i > 0 { (values[k] - values[k - 1]) * inv } else { 0.0 };
                let by = if j > 0 { (values[k] - values[k - w]) * inv } else { 0.0 };
                acc += phi([fx, fy]) + phi([bx, by]);
            }
            acc
        })
        .collect();
    0.5 * meta.cell_area() * rows.iter().sum::<f64>()
}

/// Row-parallel, order-deterministic evaluation of the averaged-stencil TV
/// on raw values.
pub(crate) fn tv_values(values: &[f64], meta: GridMeta, g: &Gauge) -> f64 {
    match g.planar() {
        Planar::L1 => tv_kernel(values, meta, |y| y[0].abs() + y[1].abs()),
        Planar::L2 => tv_kernel(values, meta, |y| (y[0] * y[0] + y[1] * y[1]).sqrt()),
        Planar::LInf => tv_kernel(values, meta, |y| y[0].abs().max(y[1].abs())),
        Planar::Shifted(a) => {
            tv_kernel(values, meta, |y| ((y[0] * y[0] + y[1] * y[1]).sqrt() + a[0] * y[0] + a[1] * y[1]).max(0.0))
        }
        Planar::General => tv_kernel(values, meta, |y| g.eval2(y)),
    }
}

/// Discrete anisotropic total variation.
pub fn tv_phi(u: &GridImage, g: &Gauge) -> Result<f64> {
    check_planar(g)?;
    u.meta.require_stencil()?;
    Ok(tv_values(&u.values, u.meta, g))
}

/// Tolerance on `phi°(p) - 1` accepted as feasible by the pairing checks.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// `TV_phi(u) - (-<u, div p>)`; nonnegative for feasible `p`, zero iff `p`
/// realizes the total variation of `u`.
pub fn tv_phi_dual_gap(u: &GridImage, p: &DualField, g: &Gauge) -> Result<f64> {
    u.meta.same_as(&p.meta(), "image and dual field")?;
    let violation = p.wulff_violation(g);
    if violation > FEASIBILITY_TOL {
        return Err(Error::Infeasible { violation, tolerance: FEASIBILITY_TOL });
    }
    let tv = tv_phi(u, g)?;
    Ok(tv + inner(u, &dual_divergence(p)))
}

/// Strict superlevel set `{u > t}`.
pub fn level_set(u: &GridImage, t: f64) -> LevelSet {
    LevelSet { image: u.map(|v| if v > t { 1.0 } else { 0.0 }), threshold: t }
}

/// Point reflection `u(-x)` about the grid center.
pub fn reflect(u: &GridImage) -> GridImage {
    let GridMeta { width: w, height: h, .. } = u.meta;
    let mut values = vec![0.0; u.meta.len()];
    for j in 0..h {
        for i in 0..w {
            values[j * w + i] = u.values[(h - 1 - j) * w + (w - 1 - i)];
        }
    }
    GridImage { meta: u.meta, values }
}

/// `h^2 sum |u - f|`.
pub fn l1_distance(u: &GridImage, f: &GridImage) -> Result<f64> {
    u.same_grid(f)?;
    Ok(u.meta.cell_area() * u.values.iter().zip(&f.values).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Midpoint-rule widths for a sorted level list: each level owns the
/// interval between the midpoints to its neighbours, with the end intervals
/// mirrored. A single level gets unit width.
pub fn level_weights(levels: &[f64]) -> Result<Vec<f64>> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter("level list is empty".into()));
    }
    if levels.iter().any(|t| !t.is_finite()) || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("levels must be finite and strictly increasing".into()));
    }
    let n = levels.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    Ok((0..n)
        .map(|k| {
            let lo = if k == 0 { levels[0] - 0.5 * (levels[1] - levels[0]) } else { 0.5 * (levels[k - 1] + levels[k]) };
            let hi = if k + 1 == n {
                levels[n - 1] + 0.5 * (levels[n - 1] - levels[n - 2])
            } else {
                0.5 * (levels[k] + levels[k + 1])
            };
            hi - lo
        })
        .collect())
}

/// Midpoints of `count` equal subintervals of `[lo, hi]`.
pub fn uniform_levels(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / count as f64;
    (0..count).map(|k| lo + (k as f64 + 0.5) * step).collect()
}

/// Both sides of the coarea formula: `(TV_phi(u), sum_t w_t TV_phi({u > t}))`.
pub fn coarea_check(u: &GridImage, g: &Gauge, levels: &[f64]) -> Result<(f64, f64)> {
    let weights = level_weights(levels)?;
    let lhs = tv_phi(u, g)?;
    let mut rhs = 0.0;
    for (&t, &wt) in levels.iter().zip(&weights) {
        rhs += wt * tv_phi(&level_set(u, t).image, g)?;
    }
    Ok((lhs, rhs))
}

/// Both sides of the level-set decomposition of the TV-L1 energy:
/// `(E(u; f), sum_t w_t E(1{u > t}; 1{f > t}))`.
pub fn energy_decompose(
    u: &GridImage,
    f: &GridImage,
    lambda: f64,
    g: &Gauge,
    levels: &[f64],
) -> Result<(f64, f64)> {
    u.same_grid(f)?;
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let weights = level_weights(levels)?;
    let total = tv_phi(u, g)? + lambda * l1_distance(u, f)?;
    let mut integrated = 0.0;
    for (&t, &wt) in levels.iter().zip(&weights) {
        let su = level_set(u, t).image;
        let sf = level_set(f, t).image;
        integrated += wt * (tv_phi(&su, g)? + lambda * su.symmetric_difference_area(&sf)?);
    }
    Ok((total, integrated))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta(w: usize, h: usize, s: f64) -> GridMeta {
        GridMeta::new(w, h, s).unwrap()
    }

    #[test]
    fn cell_centers_are_symmetric_about_origin() {
        let m = meta(4, 2, 0.5);
        assert_eq!(m.cell_center(0, 0), [-0.75, -0.25]);
        assert_eq!(m.cell_center(3, 1), [0.75, 0.25]);
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let u = GridImage::from_fn(meta(5, 4, 0.1), |_| 3.0);
        let g = forward_gradient(&u).unwrap();
        assert!(g.x.iter().chain(&g.y).all(|&v| v == 0.0));
    }

    #[test]
    fn gradient_of_linear_ramp() {
        let u = GridImage::from_fn(meta(6, 6, 1.0), |p| p[0]);
        let g = forward_gradient(&u).unwrap();
        for j in 0..6 {
            for i in 0..5 {
                assert_eq!(g.x[j * 6 + i], 1.0);
            }
            assert_eq!(g.x[j * 6 + 5], 0.0);
        }
        assert!(g.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_by_two_forward_difference() {
        // rows [0, 1] and [0, 1]
        let u = GridImage::new(meta(2, 2, 1.0), vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let g = forward_gradient(&u).unwrap();
        assert_eq!(g.x, vec![1.0, 0.0, 1.0, 0.0]);
        assert_eq!(g.y, vec![0.0; 4]);
    }

    #[test]
    fn degenerate_grid_rejected() {
        let u = GridImage::zeros(meta(1, 5, 1.0));
        assert!(matches!(forward_gradient(&u), Err(Error::DegenerateGrid { .. })));
    }

    #[test]
    fn divergence_of_linear_field_is_two_inside() {
        let m = meta(4, 4, 1.0);
        let x = GridImage::from_fn(m, |p| p[0]).into_values();
        let y = GridImage::from_fn(m, |p| p[1]).into_values();
        let d = divergence(&VectorField::new(m, x, y).unwrap());
        for j in 1..3 {
            for i in 1..3 {
                assert_eq!(d.get(i, j), 2.0);
            }
        }
        assert!(divergence(&VectorField::zeros(m)).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unit_square_tv_is_four() {
        let m = GridMeta::square_window(1.5, 192).unwrap();
        let u = GridImage::from_fn(m, |p| if (0.0..1.0).contains(&p[0]) && (0.0..1.0).contains(&p[1]) { 1.0 } else { 0.0 });
        let tv = tv_phi(&u, &Gauge::l1()).unwrap();
        assert!((tv - 4.0).abs() < 1e-12, "{tv}");
        assert_eq!(tv_phi(&GridImage::from_fn(m, |_| 2.0), &Gauge::l1()).unwrap(), 0.0);
    }

    #[test]
    fn level_set_edges() {
        let u = GridImage::new(meta(2, 2, 1.0), vec![0.0, 1.0, 2.0, 1.0]).unwrap();
        assert_eq!(level_set(&u, -1.0).image.values(), &[1.0; 4]);
        assert_eq!(level_set(&u, 2.0).image.values(), &[0.0; 4]);
        assert_eq!(level_set(&u, 1.0).image.values(), &[0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn level_weights_rules() {
        assert_eq!(level_weights(&[0.5]).unwrap(), vec![1.0]);
        assert_eq!(level_weights(&[0.5, 1.5, 2.5]).unwrap(), vec![1.0, 1.0, 1.0]);
        assert!(level_weights(&[]).is_err());
        assert!(level_weights(&[1.0, 0.5]).is_err());
    }

    #[test]
    fn reflect_is_involutive() {
        let u = GridImage::from_fn(meta(5, 3, 1.0), |p| p[0] * 10.0 + p[1]);
        assert_eq!(reflect(&reflect(&u)), u);
        let sym = GridImage::from_fn(meta(6, 6, 1.0), |p| p[0] * p[0] + p[1].abs());
        assert_eq!(reflect(&sym), sym);
    }

    #[test]
    fn dual_gap_rejects_infeasible_field() {
        let m = meta(3, 3, 1.0);
        let u = GridImage::zeros(m);
        let mut p = DualField::zeros(m);
        p.forward.x[0] = 1.5;
        assert!(matches!(tv_phi_dual_gap(&u, &p, &Gauge::l1()), Err(Error::Infeasible { .. })));
    }
}
