//! Synthetic test images: supersampled shapes, bar-code patterns and
//! impulsive noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::grid::{GridImage, GridMeta};
use crate::polygon::ConvexPolygon;

/// Subsamples per cell side used for shape rasters.
pub const SUPERSAMPLE: usize = 4;

/// Cell-area fractions of the disk of the given radius centered at the origin.
pub fn disk(meta: GridMeta, radius: f64) -> GridImage {
    let r2 = radius * radius;
    GridImage::rasterize(meta, SUPERSAMPLE, |p| p[0] * p[0] + p[1] * p[1] < r2)
}

/// Disk with a linear edge ramp of the given width centered on the circle.
/// Sharp rasters of oblique edges carry a spacing-independent excess in the
/// discrete isotropic TV (about `0.07 h / width` relative); with
/// `edge_width = sqrt(h)` the ramp still shrinks to the circle while the
/// excess vanishes.
pub fn soft_disk(meta: GridMeta, radius: f64, edge_width: f64) -> Result<GridImage> {
    if !(radius > 0.0 && edge_width > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius and edge width must be positive, got {radius} and {edge_width}"
        )));
    }
    Ok(GridImage::from_fn(meta, |p| (0.5 + (radius - p[0].hypot(p[1])) / edge_width).clamp(0.0, 1.0)))
}

pub fn polygon(meta: GridMeta, poly: &ConvexPolygon) -> GridImage {
    GridImage::rasterize(meta, SUPERSAMPLE, |p| poly.contains(p, 0.0))
}

/// `scale * W_phi` rasterized. Requires a planar gauge.
pub fn wulff(meta: GridMeta, g: &Gauge, scale: f64) -> Result<GridImage> {
    if !(scale > 0.0) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    let shape = g.wulff_shape()?;
    Ok(polygon(meta, &shape.polygon.scale(scale)))
}

/// Sharp indicator of `{x : inside(x)}` sampled at cell centers.
pub fn indicator(meta: GridMeta, inside: impl Fn([f64; 2]) -> bool) -> GridImage {
    GridImage::from_fn(meta, |p| if inside(p) { 1.0 } else { 0.0 })
}

/// Random `modules x modules` block pattern with cell-aligned blocks, centered,
/// covering about three quarters of the shorter side. Each block is on with
/// probability one half.
pub fn barcode(meta: GridMeta, modules: usize, seed: u64) -> Result<GridImage> {
    if modules == 0 {
        return Err(Error::InvalidParameter("barcode needs at least one module".into()));
    }
    let side = meta.width.min(meta.height);
    let block = (3 * side / 4) / modules;
    if block == 0 {
        return Err(Error::InvalidParameter(format!("{modules} modules do not fit a {side}-cell grid")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits: Vec<bool> = (0..modules * modules).map(|_| rng.gen_bool(0.5)).collect();
    let extent = block * modules;
    let (x0, y0) = ((meta.width - extent) / 2, (meta.height - extent) / 2);
    let mut img = GridImage::zeros(meta);
    let w = meta.width;
    let values = img.values_mut();
    for j in 0..extent {
        for i in 0..extent {
            if bits[(j / block) * modules + i / block] {
                values[(y0 + j) * w + x0 + i] = 1.0;
            }
        }
    }
    Ok(img)
}

/// Replaces each value `v` by `1 - v` independently with probability `rate`.
pub fn salt_and_pepper(img: &GridImage, rate: f64, seed: u64) -> Result<GridImage> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::InvalidParameter(format!("noise rate must lie in [0, 1], got {rate}")));
    }
    let mut out = img.clone();
    if rate == 0.0 {
        return Ok(out);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for v in out.values_mut() {
        if rng.gen::<f64>() < rate {
            *v = 1.0 - *v;
        }
    }
    Ok(out)
}
