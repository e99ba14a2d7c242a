//! A posteriori optimality certificates for the TV-L1 energy.
//!
//! A pair `(u0, v)` certifies that `u0` minimizes `E(.; f, lambda)` when
//!
//! * (i) `v` lies in `-W_phi` everywhere,
//! * (a) `|div v| <= lambda`,
//! * (b) `div v = lambda` where `u0 > f`,
//! * (c) `div v = -lambda` where `u0 < f`,
//! * (iii) `TV_phi(u0) = -<u0, div v>`.
//!
//! On a grid these become cellwise checks with tolerances. Cells within
//! `margin` cells of a jump of `u0` or `f`, or of the window border, carry an
//! O(1) stencil error and are left out of (a)-(c). A pass means the pair is
//! certified at the grid resolution only.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::Gauge;
use crate::grid::{dual_divergence, inner, tv_phi, DualField, GridImage, GridMeta, VectorField};
use crate::solver::{solve, threshold_binary, SolveResult, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckOptions {
    /// Residual tolerance; `None` means three grid spacings.
    pub tolerance: Option<f64>,
    /// Cells with `|u0 - f| <= tol_band` count as ties.
    pub tol_band: f64,
    /// Exclusion radius, in cells, around jumps and the window border.
    pub margin: usize,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { tolerance: None, tol_band: 1e-6, margin: 2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub residual: f64,
    pub tolerance: f64,
    /// Cells the condition was evaluated on (all cells for global conditions).
    pub checked_cells: usize,
    pub pass: bool,
}

impl Verdict {
    fn new(residual: f64, tolerance: f64, checked_cells: usize) -> Self {
        Self { residual, tolerance, checked_cells, pass: residual <= tolerance }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conditions {
    pub in_minus_wulff: Verdict,
    pub divergence_bound: Verdict,
    pub divergence_above: Verdict,
    pub divergence_below: Verdict,
    pub pairing: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub lambda: f64,
    pub spacing: f64,
    /// Largest `phi°(v) - 1`, floored at zero.
    pub wulff_violation: f64,
    /// `max |div v|` away from the window border.
    pub div_inf_norm: f64,
    /// `max |div v - lambda|` on checked cells with `u0 > f`.
    pub div_residual_above: f64,
    /// `max |div v + lambda|` on checked cells with `u0 < f`.
    pub div_residual_below: f64,
    /// `TV_phi(u0) + h^2 <u0, div v>`.
    pub tv_pairing_gap: f64,
    pub tolerance: f64,
    pub tol_band: f64,
    pub margin: usize,
    pub conditions: Conditions,
    pub pass: bool,
    /// `div_inf_norm < lambda - tolerance`: the strict bound that makes the
    /// minimizer unique.
    pub strict_uniqueness_hint: bool,
    pub note: String,
}

/// Marks cells within `margin` (Chebyshev distance) of a cell where `u0` or
/// `f` jumps to a 4-neighbour, or of the window border.
fn excluded_cells(u0: &GridImage, f: &GridImage, band: f64, margin: usize) -> Vec<bool> {
    let meta = u0.meta();
    let (w, h) = (meta.width, meta.height);
    let (a, b) = (u0.values(), f.values());
    let mut jump = vec![false; meta.len()];
    for j in 0..h {
        for i in 0..w {
            let k = j * w + i;
            let differs = |m: usize| (a[k] - a[m]).abs() > band || (b[k] - b[m]).abs() > band;
            if (i + 1 < w && differs(k + 1)) || (j + 1 < h && differs(k + w)) {
                jump[k] = true;
                if i + 1 < w && differs(k + 1) {
                    jump[k + 1] = true;
                }
                if j + 1 < h && differs(k + w) {
                    jump[k + w] = true;
                }
            }
        }
    }
    // separable square dilation
    let mut rows = vec![false; meta.len()];
    for j in 0..h {
        for i in 0..w {
            if jump[j * w + i] {
                for ii in i.saturating_sub(margin)..=(i + margin).min(w - 1) {
                    rows[j * w + ii] = true;
                }
            }
        }
    }
    let mut out = vec![false; meta.len()];
    for j in 0..h {
        for i in 0..w {
            if rows[j * w + i] {
                for jj in j.saturating_sub(margin)..=(j + margin).min(h - 1) {
                    out[jj * w + i] = true;
                }
            }
        }
    }
    for j in 0..h {
        for i in 0..w {
            if i < margin || j < margin || i + margin >= w || j + margin >= h {
                out[j * w + i] = true;
            }
        }
    }
    out
}

fn is_border(meta: GridMeta, k: usize, margin: usize) -> bool {
    let (i, j) = (k % meta.width, k / meta.width);
    i < margin || j < margin || i + margin >= meta.width || j + margin >= meta.height
}

/// Evaluates the discrete optimality conditions for `(u0, v)`.
pub fn check_certificate(
    u0: &GridImage,
    f: &GridImage,
    v: &DualField,
    lambda: f64,
    g: &Gauge,
    opts: &CheckOptions,
) -> Result<CertificateReport> {
    u0.same_grid(f)?;
    let meta = u0.meta();
    if v.meta() != meta {
        return Err(Error::ShapeMismatch("certificate field does not match the image grid".into()));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    let tol = opts.tolerance.unwrap_or(3.0 * meta.spacing);
    if !(tol >= 0.0 && opts.tol_band >= 0.0) {
        return Err(Error::InvalidParameter("tolerances must be nonnegative".into()));
    }

    let wulff_violation = v.wulff_violation(g);
    let div = dual_divergence(v);
    let d = div.values();
    let excluded = excluded_cells(u0, f, opts.tol_band, opts.margin);

    let mut div_inf = 0.0f64;
    let mut bound_cells = 0;
    let (mut above, mut above_cells) = (0.0f64, 0);
    let (mut below, mut below_cells) = (0.0f64, 0);
    for k in 0..meta.len() {
        if !is_border(meta, k, opts.margin) {
            div_inf = div_inf.max(d[k].abs());
            bound_cells += 1;
        }
        if excluded[k] {
            continue;
        }
        let diff = u0.values()[k] - f.values()[k];
        if diff > opts.tol_band {
            above = above.max((d[k] - lambda).abs());
            above_cells += 1;
        } else if diff < -opts.tol_band {
            below = below.max((d[k] + lambda).abs());
            below_cells += 1;
        }
    }
    let tv_pairing_gap = tv_phi(u0, g)? + inner(u0, &div);

    let conditions = Conditions {
        in_minus_wulff: Verdict::new(wulff_violation, tol, meta.len()),
        divergence_bound: Verdict::new((div_inf - lambda).max(0.0), tol, bound_cells),
        divergence_above: Verdict::new(above, tol, above_cells),
        divergence_below: Verdict::new(below, tol, below_cells),
        pairing: Verdict::new(tv_pairing_gap.abs(), tol, meta.len()),
    };
    let pass = [
        conditions.in_minus_wulff,
        conditions.divergence_bound,
        conditions.divergence_above,
        conditions.divergence_below,
        conditions.pairing,
    ]
    .iter()
    .all(|c| c.pass);

    Ok(CertificateReport {
        lambda,
        spacing: meta.spacing,
        wulff_violation,
        div_inf_norm: div_inf,
        div_residual_above: above,
        div_residual_below: below,
        tv_pairing_gap,
        tolerance: tol,
        tol_band: opts.tol_band,
        margin: opts.margin,
        conditions,
        pass,
        strict_uniqueness_hint: div_inf < lambda - tol,
        note: format!(
            "certified at resolution h = {} only; tolerance {} reflects the first-order divergence stencil",
            meta.spacing, tol
        ),
    })
}

#[inline]
fn clamp1(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Profile used by the disk certificate: `clamp(a / s)` when `|b| >= 1/sqrt 2`,
/// `clamp(sqrt 2 a)` otherwise.
#[inline]
fn profile(a: f64, b: f64, s: f64) -> f64 {
    if b.abs() >= FRAC_1_SQRT_2 {
        clamp1(a / s)
    } else {
        clamp1(std::f64::consts::SQRT_2 * a)
    }
}

/// Mean of `profile(a, .)` over `b` in `[lo, hi]`; exact because the profile
/// depends on `b` only through which side of `1/sqrt 2` it is on.
fn profile_mean(a: f64, lo: f64, hi: f64, s: f64) -> f64 {
    let inner_len = (hi.min(FRAC_1_SQRT_2) - lo.max(-FRAC_1_SQRT_2)).max(0.0);
    let frac = inner_len / (hi - lo);
    frac * clamp1(std::f64::consts::SQRT_2 * a) + (1.0 - frac) * clamp1(a / s)
}

fn check_circle_lambda(lambda: f64) -> Result<f64> {
    if !(lambda >= std::f64::consts::SQRT_2 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "the disk certificate needs lambda >= sqrt(2), got {lambda}"
        )));
    }
    Ok(1.0 / lambda)
}

/// The disk certificate field at a point: `v = (-w(x1, x2), -w(x2, x1))`.
pub fn circle_certificate_field(lambda: f64, x: [f64; 2]) -> Result<[f64; 2]> {
    let s = check_circle_lambda(lambda)?;
    Ok([-profile(x[0], x[1], s), -profile(x[1], x[0], s)])
}

/// Discretizes the disk certificate by face averages: the forward component
/// of cell `(i, j)` holds the mean normal component over its right and top
/// faces, the backward component over its left and bottom faces. The
/// discrete divergence is then the cell average of the continuum divergence.
pub fn build_circle_certificate(lambda: f64, meta: GridMeta) -> Result<DualField> {
    let s = check_circle_lambda(lambda)?;
    let h = meta.spacing;
    let mut fwd = VectorField::zeros(meta);
    let mut bwd = VectorField::zeros(meta);
    for j in 0..meta.height {
        for i in 0..meta.width {
            let k = meta.index(i, j);
            let [cx, cy] = meta.cell_center(i, j);
            let (x0, x1, y0, y1) = (cx - 0.5 * h, cx + 0.5 * h, cy - 0.5 * h, cy + 0.5 * h);
            fwd.x[k] = -profile_mean(x1, y0, y1, s);
            fwd.y[k] = -profile_mean(y1, x0, x1, s);
            bwd.x[k] = -profile_mean(x0, y0, y1, s);
            bwd.y[k] = -profile_mean(y0, x0, x1, s);
        }
    }
    DualField::new(fwd, bwd)
}

/// Solves, then checks the solver's dual field against the minimizer
/// (thresholded at 1/2 when `f` is binary).
pub fn certify_minimizer(
    f: &GridImage,
    lambda: f64,
    g: &Gauge,
    cfg: &SolverConfig,
    opts: &CheckOptions,
) -> Result<(SolveResult, CertificateReport)> {
    let result = solve(f, lambda, g, cfg)?;
    let u0 = if f.is_binary() { threshold_binary(&result, 0.5) } else { result.u.clone() };
    let report = check_certificate(&u0, f, &result.p, lambda, g, opts)?;
    Ok((result, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_pair_passes() {
        let meta = GridMeta::new(8, 8, 0.125).unwrap();
        let z = GridImage::zeros(meta);
        let r = check_certificate(&z, &z, &DualField::zeros(meta), 1.0, &Gauge::l1(), &CheckOptions::default())
            .unwrap();
        assert!(r.pass);
        assert_eq!(r.wulff_violation, 0.0);
        assert_eq!(r.div_inf_norm, 0.0);
        assert_eq!(r.tv_pairing_gap, 0.0);
        assert!(r.strict_uniqueness_hint);
    }

    #[test]
    fn point_values() {
        assert_eq!(circle_certificate_field(4.0, [0.0, 0.9]).unwrap(), [0.0, -1.0]);
        assert_eq!(circle_certificate_field(4.0, [0.5, 0.9]).unwrap()[0], -1.0);
        assert_eq!(circle_certificate_field(3.0, [0.0, 0.0]).unwrap(), [0.0, 0.0]);
        assert!(circle_certificate_field(1.0, [0.0, 0.0]).is_err());
    }

    #[test]
    fn face_average_is_exact_mean() {
        let s = 0.25;
        let (a, lo, hi) = (0.1, 0.6, 0.8);
        let n = 200_000;
        let mean: f64 = (0..n).map(|k| profile(a, lo + (k as f64 + 0.5) * (hi - lo) / n as f64, s)).sum::<f64>() / n as f64;
        assert!((mean - profile_mean(a, lo, hi, s)).abs() < 1e-5);
    }

    #[test]
    fn circle_field_is_feasible() {
        let meta = GridMeta::square_window(1.5, 96).unwrap();
        let v = build_circle_certificate(3.0, meta).unwrap();
        assert_eq!(v.wulff_violation(&Gauge::l1()), 0.0);
        assert!(build_circle_certificate(1.2, meta).is_err());
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = GridImage::zeros(GridMeta::new(8, 8, 0.1).unwrap());
        let b = GridImage::zeros(GridMeta::new(8, 9, 0.1).unwrap());
        let v = DualField::zeros(a.meta());
        assert!(check_certificate(&a, &b, &v, 1.0, &Gauge::l1(), &CheckOptions::default()).is_err());
    }
}
