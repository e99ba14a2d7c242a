#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wulff_tvl1::{ConvexPolygon, GridImage, GridMeta};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Averaged forward/backward-difference TV written out cell by cell.
pub fn tv_oracle(u: &GridImage, phi: impl Fn(f64, f64) -> f64) -> f64 {
    let (w, h, s) = (u.width(), u.height(), u.spacing());
    let at = |i: usize, j: usize| u.values()[j * w + i];
    let mut total = 0.0;
    for j in 0..h {
        for i in 0..w {
            let fx = if i + 1 < w { at(i + 1, j) - at(i, j) } else { 0.0 };
            let fy = if j + 1 < h { at(i, j + 1) - at(i, j) } else { 0.0 };
            let bx = if i > 0 { at(i, j) - at(i - 1, j) } else { 0.0 };
            let by = if j > 0 { at(i, j) - at(i, j - 1) } else { 0.0 };
            total += phi(fx / s, fy / s) + phi(bx / s, by / s);
        }
    }
    0.5 * s * s * total
}

pub fn l1(x: f64, y: f64) -> f64 {
    x.abs() + y.abs()
}

pub fn energy_oracle(u: &GridImage, f: &GridImage, lambda: f64, phi: impl Fn(f64, f64) -> f64) -> f64 {
    let area = u.spacing() * u.spacing();
    tv_oracle(u, phi) + lambda * area * u.values().iter().zip(f.values()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Minimum of the l1 TV-L1 energy over all binary images on the grid of `f`.
pub fn brute_force_binary(f: &GridImage, lambda: f64) -> (f64, GridImage) {
    let meta = f.meta();
    let n = meta.len();
    assert!(n <= 16);
    let mut best = (f64::INFINITY, GridImage::zeros(meta));
    for mask in 0u32..(1 << n) {
        let values = (0..n).map(|k| ((mask >> k) & 1) as f64).collect();
        let u = GridImage::new(meta, values).unwrap();
        let e = energy_oracle(&u, f, lambda, l1);
        if e < best.0 {
            best = (e, u);
        }
    }
    best
}

pub fn random_image(meta: GridMeta, rng: &mut impl Rng, lo: f64, hi: f64) -> GridImage {
    GridImage::new(meta, (0..meta.len()).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

pub fn random_integer_image(meta: GridMeta, rng: &mut impl Rng, max: i32) -> GridImage {
    GridImage::new(meta, (0..meta.len()).map(|_| rng.gen_range(0..=max) as f64).collect()).unwrap()
}

/// Convex hull of random points on an ellipse-ish cloud, at least a triangle.
pub fn random_convex_polygon(rng: &mut impl Rng) -> ConvexPolygon {
    loop {
        let n = rng.gen_range(3..12);
        let (sx, sy) = (rng.gen_range(0.2..2.0), rng.gen_range(0.2..2.0));
        let rot: f64 = rng.gen_range(0.0..std::f64::consts::PI);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|_| {
                let (x, y) = (rng.gen_range(-1.0..1.0) * sx, rng.gen_range(-1.0..1.0) * sy);
                [x * rot.cos() - y * rot.sin(), x * rot.sin() + y * rot.cos()]
            })
            .collect();
        if let Ok(p) = ConvexPolygon::from_points(&pts) {
            if p.area() > 1e-3 {
                return p;
            }
        }
    }
}
