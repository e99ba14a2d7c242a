//! Primal-dual minimization of `E(u) = TV_phi(u) + lambda ||u - f||_1`.
//!
//! The total variation is written as a maximum over a dual pair `(p+, p-)`
//! with values in `-W_phi`, one per difference stencil (see [`crate::grid`]):
//!
//! ```text
//! TV_phi(u) = max h^2 sum ( <p+, D+ u> + <p-, D- u> ) / 2.
//! ```
//!
//! Each iteration performs
//!
//! ```text
//! p±  <- proj_{-W}(p± + sigma D± ubar / 2)
//! u   <- f + shrink(u + tau div(p) - f, tau lambda)
//! ubar <- u + theta (u - u_prev)
//! ```
//!
//! with `div(p) = (div+ p+ + div- p-) / 2`. The stacked operator has norm at
//! most `2 / h`, so steps need `tau sigma <= h^2 / 4`.
//!
//! For any dual pair with `|div p| <= lambda` cellwise,
//! `D(p) = -h^2 <f, div p>` is a lower bound on the minimum. Iterates are
//! rescaled into that set, and the best primal energy and best lower bound
//! seen so far define the reported gap.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauge::{Gauge, Planar};
use crate::grid::{dual_divergence, rows_per_task, l1_distance, level_set, tv_phi, tv_values, DualField, GridImage, GridMeta};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: usize,
    /// Primal step; `None` means `spacing / 2`.
    pub tau: Option<f64>,
    /// Dual step; `None` means `spacing / 2`.
    pub sigma: Option<f64>,
    /// Stop when `gap / (1 + |energy|)` falls below this.
    pub tolerance: f64,
    /// Fallback stop when both iterates move less than this, relatively.
    pub change_tolerance: f64,
    pub theta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iterations: 20_000,
            tau: None,
            sigma: None,
            tolerance: 1e-6,
            change_tolerance: 1e-9,
            theta: 1.0,
        }
    }
}

impl SolverConfig {
    /// Squared bound on the stacked difference operator for spacing `h`.
    pub fn operator_norm_squared(spacing: f64) -> f64 {
        4.0 / (spacing * spacing)
    }

    /// `(tau, sigma)` for the given spacing, after validation.
    pub fn steps(&self, spacing: f64) -> Result<(f64, f64)> {
        let tau = self.tau.unwrap_or(0.5 * spacing);
        let sigma = self.sigma.unwrap_or(0.5 * spacing);
        if !(tau > 0.0 && sigma > 0.0 && tau.is_finite() && sigma.is_finite()) {
            return Err(Error::InvalidParameter(format!("steps must be positive, got tau={tau}, sigma={sigma}")));
        }
        let product = tau * sigma * Self::operator_norm_squared(spacing);
        if product > 1.0 + 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "tau * sigma * L^2 = {product} exceeds 1 (L^2 = 4 / spacing^2)"
            )));
        }
        Ok((tau, sigma))
    }

    pub fn validate(&self, spacing: f64) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter("max_iterations must be positive".into()));
        }
        if !(self.tolerance >= 0.0 && self.change_tolerance >= 0.0) {
            return Err(Error::InvalidParameter("tolerances must be nonnegative".into()));
        }
        if !(0.0..=1.0).contains(&self.theta) {
            return Err(Error::InvalidParameter(format!("theta must lie in [0, 1], got {}", self.theta)));
        }
        self.steps(spacing).map(|_| ())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Lowest-energy primal iterate.
    pub u: GridImage,
    /// Best dual pair, rescaled so that `|div p| <= lambda` and `p` lies in `-W`.
    pub p: DualField,
    /// Energy of the incumbent after each iteration.
    pub energy_trace: Vec<f64>,
    pub energy: f64,
    /// Lower bound certified by `p`.
    pub dual_energy: f64,
    /// `energy - dual_energy`.
    pub gap: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl SolveResult {
    pub fn relative_gap(&self) -> f64 {
        self.gap / (1.0 + self.energy.abs())
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive and finite, got {lambda}")));
    }
    Ok(())
}

/// `TV_phi(u) + lambda h^2 sum |u - f|`.
pub fn energy(u: &GridImage, f: &GridImage, lambda: f64, g: &Gauge) -> Result<f64> {
    u.same_grid(f)?;
    check_lambda(lambda)?;
    Ok(tv_phi(u, g)? + lambda * l1_distance(u, f)?)
}

/// Projected ascent step on the dual pair. Returns `(|p_new - p|^2, |p_new|^2)`.
fn dual_step(ubar: &[f64], p: &mut DualField, meta: GridMeta, g: &Gauge, sigma: f64) -> (f64, f64) {
    let clamp = |q: [f64; 2]| [q[0].clamp(-1.0, 1.0), q[1].clamp(-1.0, 1.0)];
    let disk = |q: [f64; 2], a: [f64; 2]| {
        let d = [q[0] - a[0], q[1] - a[1]];
        let r2 = d[0] * d[0] + d[1] * d[1];
        if r2 <= 1.0 {
            q
        } else {
            let r = r2.sqrt();
            [a[0] + d[0] / r, a[1] + d[1] / r]
        }
    };
    match g.planar() {
        Planar::L1 => dual_kernel(ubar, p, meta, sigma, clamp),
        Planar::L2 => dual_kernel(ubar, p, meta, sigma, |q| disk(q, [0.0, 0.0])),
        Planar::Shifted(a) => dual_kernel(ubar, p, meta, sigma, |q| disk(q, a)),
        Planar::LInf | Planar::General => dual_kernel(ubar, p, meta, sigma, |q| g.project2(q)),
    }
}

fn dual_kernel(
    ubar: &[f64],
    p: &mut DualField,
    meta: GridMeta,
    sigma: f64,
    project: impl Fn([f64; 2]) -> [f64; 2] + Sync,
) -> (f64, f64) {
    let (w, h) = (meta.width, meta.height);
    let c = 0.5 * sigma / meta.spacing;
    let DualField { forward, backward } = p;
    let rows: Vec<(f64, f64)> = forward
        .x
        .par_chunks_mut(w)
        .zip(forward.y.par_chunks_mut(w))
        .zip(backward.x.par_chunks_mut(w))
        .zip(backward.y.par_chunks_mut(w))
        .with_min_len(rows_per_task(h))
        .enumerate()
        .map(|(j, (((fx, fy), bx), by))| {
            let row = j * w;
            let (mut change, mut norm) = (0.0, 0.0);
            let mut update = |px: &mut f64, py: &mut f64, dx: f64, dy: f64| {
                let [nx, ny] = project([*px + c * dx, *py + c * dy]);
                change += (nx - *px) * (nx - *px) + (ny - *py) * (ny - *py);
                norm += nx * nx + ny * ny;
                *px = nx;
                *py = ny;
            };
            for i in 0..w {
                let k = row + i;
                let dx = if i + 1 < w { ubar[k + 1] - ubar[k] } else { 0.0 };
                let dy = if j + 1 < h { ubar[k + w] - ubar[k] } else { 0.0 };
                update(&mut fx[i], &mut fy[i], dx, dy);
                let dx = if i > 0 { ubar[k] - ubar[k - 1] } else { 0.0 };
                let dy = if j > 0 { ubar[k] - ubar[k - w] } else { 0.0 };
                update(&mut bx[i], &mut by[i], dx, dy);
            }
            (change, norm)
        })
        .collect();
    rows.iter().fold((0.0, 0.0), |(a, b), (c, d)| (a + c, b + d))
}

/// Per-iteration sums gathered by [`primal_step`].
#[derive(Default, Clone, Copy)]
struct PrimalStats {
    change: f64,
    norm: f64,
    div_max: f64,
    /// `<f, div p>` without the cell area.
    pairing: f64,
    /// `sum |u_new - f|`.
    fidelity: f64,
}

/// Divergence of the dual pair, proximal step on the fidelity and
/// over-relaxation, fused per row.
#[allow(clippy::too_many_arguments)]
fn primal_step(
    u: &mut [f64],
    ubar: &mut [f64],
    f: &[f64],
    p: &DualField,
    meta: GridMeta,
    tau: f64,
    lambda: f64,
    theta: f64,
) -> PrimalStats {
    let (w, h) = (meta.width, meta.height);
    let half_inv = 0.5 / meta.spacing;
    let thresh = tau * lambda;
    let (fx, fy, bx, by) = (&p.forward.x, &p.forward.y, &p.backward.x, &p.backward.y);
    let rows: Vec<PrimalStats> = u
        .par_chunks_mut(w)
        .zip(ubar.par_chunks_mut(w))
        .with_min_len(rows_per_task(h))
        .enumerate()
        .map(|(j, (u, ubar))| {
            let mut st = PrimalStats::default();
            let row = j * w;
            for i in 0..w {
                let k = row + i;
                let mut d = 0.0;
                if i + 1 < w {
                    d += fx[k] + bx[k + 1];
                }
                if i > 0 {
                    d -= fx[k - 1] + bx[k];
                }
                if j + 1 < h {
                    d += fy[k] + by[k + w];
                }
                if j > 0 {
                    d -= fy[k - w] + by[k];
                }
                d *= half_inv;
                st.div_max = st.div_max.max(d.abs());
                st.pairing += f[k] * d;

                let r = u[i] + tau * d - f[k];
                let shrunk = r.signum() * (r.abs() - thresh).max(0.0);
                let next = f[k] + shrunk;
                let delta = next - u[i];
                st.change += delta * delta;
                st.norm += next * next;
                st.fidelity += shrunk.abs();
                u[i] = next;
                ubar[i] = next + theta * delta;
            }
            st
        })
        .collect();
    rows.iter().fold(PrimalStats::default(), |a, b| PrimalStats {
        change: a.change + b.change,
        norm: a.norm + b.norm,
        div_max: a.div_max.max(b.div_max),
        pairing: a.pairing + b.pairing,
        fidelity: a.fidelity + b.fidelity,
    })
}

/// Lower bound `-h^2 <f, div p>` after scaling `p` into `{|div p| <= lambda}`,
/// and the scale used.
fn scaled_bound(div_max: f64, pairing: f64, lambda: f64, cell_area: f64) -> (f64, f64) {
    let scale = if div_max > lambda { lambda / div_max } else { 1.0 };
    (-cell_area * scale * pairing, scale)
}

/// Minimizes the TV-L1 energy from `u = f`, `p = 0`.
pub fn solve(f: &GridImage, lambda: f64, g: &Gauge, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_from(f, lambda, g, cfg, f.clone(), None)
}

/// As [`solve`], starting from the given primal iterate and optional dual pair.
pub fn solve_from(
    f: &GridImage,
    lambda: f64,
    g: &Gauge,
    cfg: &SolverConfig,
    u0: GridImage,
    p0: Option<DualField>,
) -> Result<SolveResult> {
    check_lambda(lambda)?;
    if g.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: g.dim() });
    }
    let meta = f.meta();
    if meta.width < 2 || meta.height < 2 {
        return Err(Error::DegenerateGrid { width: meta.width, height: meta.height });
    }
    u0.same_grid(f)?;
    cfg.validate(meta.spacing)?;
    let (tau, sigma) = cfg.steps(meta.spacing)?;
    let cell_area = meta.cell_area();
    let fv = f.values();

    let mut u = u0.into_values();
    let mut ubar = u.clone();
    let mut p = match p0 {
        Some(p) => {
            if p.meta() != meta {
                return Err(Error::ShapeMismatch("initial dual field does not match the data grid".into()));
            }
            p
        }
        None => DualField::zeros(meta),
    };

    let primal_energy = |u: &[f64]| {
        tv_values(u, meta, g) + lambda * cell_area * u.iter().zip(fv).map(|(a, b)| (a - b).abs()).sum::<f64>()
    };

    let mut best_u = u.clone();
    let mut best_energy = primal_energy(&u);
    let mut best_p = p.clone();
    let div = dual_divergence(&p);
    let div_max = div.values().iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let pairing: f64 = fv.iter().zip(div.values()).map(|(a, b)| a * b).sum();
    let (mut best_dual, scale) = scaled_bound(div_max, pairing, lambda, cell_area);
    best_p.scale(scale);

    let mut trace = Vec::with_capacity(cfg.max_iterations.min(1 << 16));
    let mut converged = best_energy - best_dual <= cfg.tolerance * (1.0 + best_energy.abs());
    let mut iterations = 0;

    while !converged && iterations < cfg.max_iterations {
        iterations += 1;
        let (dp, np) = dual_step(&ubar, &mut p, meta, g, sigma);
        let st = primal_step(&mut u, &mut ubar, fv, &p, meta, tau, lambda, cfg.theta);

        let e = tv_values(&u, meta, g) + lambda * cell_area * st.fidelity;
        if e < best_energy {
            best_energy = e;
            best_u.copy_from_slice(&u);
        }
        let (d, scale) = scaled_bound(st.div_max, st.pairing, lambda, cell_area);
        if d > best_dual {
            best_dual = d;
            best_p.clone_from(&p);
            best_p.scale(scale);
        }
        trace.push(best_energy);

        let gap = best_energy - best_dual;
        let ctol2 = cfg.change_tolerance * cfg.change_tolerance;
        converged = gap <= cfg.tolerance * (1.0 + best_energy.abs()) || (st.change <= ctol2 * st.norm && dp <= ctol2 * np);
    }

    Ok(SolveResult {
        u: GridImage::new(meta, best_u)?,
        p: best_p,
        energy_trace: trace,
        energy: best_energy,
        dual_energy: best_dual,
        gap: (best_energy - best_dual).max(0.0),
        iterations,
        converged,
    })
}

/// Strict superlevel set `{u > t}` of the minimizer.
pub fn threshold_binary(result: &SolveResult, t: f64) -> GridImage {
    level_set(&result.u, t).image
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContrastReport {
    pub contrast: f64,
    pub threshold: f64,
    /// `|{u > t} xor {u_c > c t}|` relative to `max(|{u > t}|, h^2)`.
    pub level_set_difference: f64,
    pub energy: f64,
    pub scaled_energy: f64,
    /// `|E(u_c; c f) - c E(u; f)|`.
    pub energy_mismatch: f64,
    /// Allowed mismatch: the sum of both solves' gaps.
    pub gap_allowance: f64,
}

impl ContrastReport {
    pub fn passes(&self, set_tolerance: f64) -> bool {
        self.level_set_difference <= set_tolerance && self.energy_mismatch <= self.gap_allowance + 1e-9
    }
}

/// Solves for `f` and `c f` and compares level sets at `t` and `c t`, and
/// the minimal energies, which should scale by `c`.
pub fn check_contrast_invariance(
    f: &GridImage,
    lambda: f64,
    g: &Gauge,
    contrast: f64,
    cfg: &SolverConfig,
    threshold: f64,
) -> Result<ContrastReport> {
    if !(contrast > 0.0 && contrast.is_finite()) {
        return Err(Error::InvalidParameter(format!("contrast must be positive, got {contrast}")));
    }
    let base = solve(f, lambda, g, cfg)?;
    let scaled = solve(&f.scaled(contrast), lambda, g, cfg)?;
    let a = level_set(&base.u, threshold).image;
    let b = level_set(&scaled.u, contrast * threshold).image;
    let area = a.values().iter().sum::<f64>() * f.meta().cell_area();
    let diff = a.symmetric_difference_area(&b)?;
    Ok(ContrastReport {
        contrast,
        threshold,
        level_set_difference: diff / area.max(f.meta().cell_area()),
        energy: base.energy,
        scaled_energy: scaled.energy,
        energy_mismatch: (scaled.energy - contrast * base.energy).abs(),
        gap_allowance: scaled.gap + contrast * base.gap,
    })
}
