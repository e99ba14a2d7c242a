use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::json;
use wulff_tvl1::certificate::{build_circle_certificate, check_certificate, CertificateReport, CheckOptions};
use wulff_tvl1::io::{self, PgmDepth};
use wulff_tvl1::shapes::{
    circle_example, circle_optimality_margin, circle_optimality_threshold, isoperimetric_constant,
    trivial_threshold, wulff_tv_and_area,
};
use wulff_tvl1::solver::{solve, threshold_binary, SolverConfig};
use wulff_tvl1::{raster, Gauge, GaugeSpec, GridImage, GridMeta};

use crate::manifest::{manifest_path, RunManifest};
use crate::{CertifyArgs, Cli, Command, DenoiseArgs, Depth, Oracle, OracleArgs, ReplayArgs, Shape, Status, SynthArgs};

pub fn run(command: Command, args: &[String]) -> Result<Status> {
    match command {
        Command::Denoise(a) => denoise(a, args),
        Command::Synth(a) => synth(a, args),
        Command::Oracle(a) => oracle(a, args),
        Command::Certify(a) => certify(a, args),
        Command::Replay(a) => replay(a),
    }
}

/// JSON text, `@path` to a JSON file, or one of `l1`, `l2`, `linf`.
pub fn parse_gauge(text: &str) -> Result<Gauge> {
    let text = text.trim();
    let gauge = match text {
        "l1" => Gauge::l1(),
        "l2" => Gauge::l2(),
        "linf" => Gauge::linf(),
        _ => {
            let json = match text.strip_prefix('@') {
                Some(path) => fs::read_to_string(path).with_context(|| format!("reading gauge file {path}"))?,
                None => text.to_string(),
            };
            Gauge::from_json(&json).with_context(|| format!("invalid gauge {text}"))?
        }
    };
    Ok(gauge)
}

fn is_raw(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "raw")
}

fn read_image(path: &Path, spacing: Option<f64>) -> Result<GridImage> {
    let img = if is_raw(path) {
        let img = io::read_raw_image(path)?;
        match spacing {
            Some(h) => GridImage::new(GridMeta::new(img.width(), img.height(), h)?, img.into_values())?,
            None => img,
        }
    } else {
        io::read_pgm(path, spacing)?
    };
    Ok(img)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn with_suffix(dir: &Path, stem: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{stem}{suffix}"))
}

#[derive(Serialize)]
struct DenoiseReport<'a> {
    input: &'a Path,
    lambda: f64,
    gauge: GaugeSpec,
    grid: GridMeta,
    config: &'a SolverConfig,
    energy: f64,
    dual_energy: f64,
    gap: f64,
    relative_gap: f64,
    iterations: usize,
    converged: bool,
    energy_trace: &'a [f64],
    certificate: Option<CertificateReport>,
}

fn denoise(a: DenoiseArgs, args: &[String]) -> Result<Status> {
    let g = parse_gauge(&a.gauge)?;
    if !(a.lambda > 0.0 && a.lambda.is_finite()) {
        bail!("lambda must be positive and finite, got {}", a.lambda);
    }
    let f = read_image(&a.input, a.spacing)?;
    let mut cfg: SolverConfig = match &a.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?)
            .with_context(|| format!("parsing solver config {}", p.display()))?,
        None => SolverConfig::default(),
    };
    if let Some(n) = a.max_iterations {
        cfg.max_iterations = n;
    }
    if let Some(t) = a.tolerance {
        cfg.tolerance = t;
    }
    cfg.validate(f.spacing())?;

    let out_dir = match &a.out_dir {
        Some(d) => d.clone(),
        None => a.input.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let out_dir = if out_dir.as_os_str().is_empty() { PathBuf::from(".") } else { out_dir };
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let stem = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or("image").to_string();

    let res = solve(&f, a.lambda, &g, &cfg)?;

    let mut outputs = Vec::new();
    let u_pgm = with_suffix(&out_dir, &stem, ".u.pgm");
    io::write_pgm(&u_pgm, &res.u, PgmDepth::Sixteen)?;
    let u_raw = with_suffix(&out_dir, &stem, ".u.raw");
    io::write_raw_image(&u_raw, &res.u)?;
    let p_raw = with_suffix(&out_dir, &stem, ".p.raw");
    io::write_field(&p_raw, &res.p)?;
    for p in [&u_pgm, &u_raw, &p_raw] {
        outputs.push(p.clone());
        outputs.push(io::sidecar_path(p));
    }
    if let Some(t) = a.threshold {
        let binary = with_suffix(&out_dir, &stem, ".binary.pgm");
        io::write_pgm(&binary, &threshold_binary(&res, t), PgmDepth::Eight)?;
        outputs.push(io::sidecar_path(&binary));
        outputs.push(binary);
    }

    let certificate = if a.certify {
        let u0 = if f.is_binary() { threshold_binary(&res, 0.5) } else { res.u.clone() };
        Some(check_certificate(&u0, &f, &res.p, a.lambda, &g, &CheckOptions::default())?)
    } else {
        None
    };
    let report = DenoiseReport {
        input: &a.input,
        lambda: a.lambda,
        gauge: g.spec(),
        grid: f.meta(),
        config: &cfg,
        energy: res.energy,
        dual_energy: res.dual_energy,
        gap: res.gap,
        relative_gap: res.relative_gap(),
        iterations: res.iterations,
        converged: res.converged,
        energy_trace: &res.energy_trace,
        certificate,
    };
    let report_path = with_suffix(&out_dir, &stem, ".report.json");
    write_json(&report_path, &report)?;
    outputs.push(report_path.clone());

    let mut manifest = RunManifest::new("denoise", args)?;
    manifest.gauge = Some(g.spec());
    manifest.lambda = Some(a.lambda);
    manifest.grid = Some(f.meta());
    manifest.inputs = vec![a.input.clone()];
    manifest.outputs = outputs;
    manifest.write(&with_suffix(&out_dir, &stem, ".manifest.json"))?;

    println!("{}", report_path.display());
    if res.converged {
        Ok(Status::Ok)
    } else {
        eprintln!(
            "warning: not converged after {} iterations (relative gap {:.3e}); outputs written",
            res.iterations,
            res.relative_gap()
        );
        Ok(Status::NotConverged)
    }
}

fn synth(a: SynthArgs, args: &[String]) -> Result<Status> {
    let meta = GridMeta::square_window(a.half_width, a.n)?;
    let mut manifest = RunManifest::new("synth", args)?;
    let clean = match a.shape {
        Shape::Disk => {
            if a.radius.is_nan() || a.radius <= 0.0 {
                bail!("radius must be positive, got {}", a.radius);
            }
            raster::disk(meta, a.radius)
        }
        Shape::Wulff => {
            let g = parse_gauge(&a.gauge)?;
            manifest.gauge = Some(g.spec());
            raster::wulff(meta, &g, a.scale)?
        }
        Shape::Barcode => raster::barcode(meta, a.modules, a.seed)?,
    };
    let img = raster::salt_and_pepper(&clean, a.noise, a.seed.wrapping_add(1))?;
    if let Some(dir) = a.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let depth = match a.depth {
        Depth::Eight => PgmDepth::Eight,
        Depth::Sixteen => PgmDepth::Sixteen,
    };
    io::write_pgm(&a.output, &img, depth)?;

    manifest.grid = Some(meta);
    manifest.seed = Some(a.seed);
    manifest.outputs = vec![a.output.clone(), io::sidecar_path(&a.output)];
    manifest.write(&manifest_path(&a.output))?;
    println!("{}", serde_json::to_string(&json!({ "output": a.output, "grid": meta, "mass": img.l1_norm() }))?);
    Ok(Status::Ok)
}

fn oracle(a: OracleArgs, args: &[String]) -> Result<Status> {
    let mut manifest = RunManifest::new("oracle", args)?;
    let value = match &a.which {
        Oracle::Circle { lambda } => {
            manifest.lambda = Some(*lambda);
            serde_json::to_value(circle_example(*lambda)?)?
        }
        Oracle::Threshold { radius, n } => {
            json!({ "radius": radius, "n": n, "lambda0": trivial_threshold(*radius, *n)? })
        }
        Oracle::Wulff { gauge } => {
            let g = parse_gauge(gauge)?;
            let (tv, area) = wulff_tv_and_area(&g)?;
            let shape = g.wulff_shape()?;
            manifest.gauge = Some(g.spec());
            json!({
                "gauge": g.spec(),
                "tv": tv,
                "area": area,
                "exact": shape.exact,
                "isoperimetric_constant": isoperimetric_constant(&g, 2)?,
                "vertices": shape.polygon.vertices(),
            })
        }
        Oracle::CriticalLambda => {
            let t = circle_optimality_threshold();
            json!({
                "lambda": t,
                "margin_at_2": circle_optimality_margin(2.0),
                "margin_at_3": circle_optimality_margin(3.0),
            })
        }
    };
    let text = serde_json::to_string_pretty(&value)?;
    println!("{text}");
    if let Some(out) = &a.output {
        fs::write(out, text + "\n").with_context(|| format!("writing {}", out.display()))?;
        manifest.outputs = vec![out.clone()];
        manifest.write(&manifest_path(out))?;
    }
    Ok(Status::Ok)
}

fn certify(a: CertifyArgs, args: &[String]) -> Result<Status> {
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    let mut manifest = RunManifest::new("certify", args)?;
    let opts = CheckOptions { tolerance: a.tolerance, tol_band: a.tol_band, margin: a.margin };
    let (u0, f, v, lambda, g) = if let Some(lambda) = a.example_circle {
        let meta = GridMeta::square_window(a.half_width, a.n)?;
        let v = build_circle_certificate(lambda, meta)?;
        let h = (1.0 - 1.0 / (lambda * lambda)).sqrt();
        let f = raster::disk(meta, 1.0);
        let u0 = GridImage::rasterize(meta, raster::SUPERSAMPLE, |x| {
            x[0].hypot(x[1]) <= 1.0 && x[0].abs() <= h && x[1].abs() <= h
        });
        // the inputs, so the same check can be rerun from files
        for (name, img) in [("circle_f.raw", &f), ("circle_u0.raw", &u0)] {
            let p = a.out_dir.join(name);
            io::write_raw_image(&p, img)?;
            manifest.outputs.extend([p.clone(), io::sidecar_path(&p)]);
        }
        let p = a.out_dir.join("circle_v.raw");
        io::write_field(&p, &v)?;
        manifest.outputs.extend([p.clone(), io::sidecar_path(&p)]);
        (u0, f, v, lambda, Gauge::l1())
    } else {
        let (Some(u0), Some(f), Some(v), Some(lambda)) = (&a.u0, &a.f, &a.v, a.lambda) else {
            bail!("give either --example-circle or all of --u0, --f, --v and --lambda");
        };
        manifest.inputs = vec![u0.clone(), f.clone(), v.clone()];
        (read_image(u0, None)?, read_image(f, None)?, io::read_field(v)?, lambda, parse_gauge(&a.gauge)?)
    };
    let report = check_certificate(&u0, &f, &v, lambda, &g, &opts)?;
    let path = a.out_dir.join("certificate.json");
    write_json(&path, &report)?;
    manifest.gauge = Some(g.spec());
    manifest.lambda = Some(lambda);
    manifest.grid = Some(f.meta());
    manifest.outputs.push(path.clone());
    manifest.write(&a.out_dir.join("certificate.manifest.json"))?;
    println!("{}", path.display());
    Ok(if report.pass { Status::Ok } else { Status::CertificateFailed })
}

fn replay(a: ReplayArgs) -> Result<Status> {
    let manifest = RunManifest::read(&a.manifest)?;
    let argv = std::iter::once("wulff-tvl1".to_string()).chain(manifest.args.iter().cloned());
    let cli = <Cli as clap::Parser>::try_parse_from(argv).context("manifest arguments no longer parse")?;
    if matches!(cli.command, Command::Replay(_)) {
        bail!("a manifest cannot record a replay");
    }
    let outputs = manifest.resolved_outputs();
    let before: Vec<Option<Vec<u8>>> = if a.verify { outputs.iter().map(|p| fs::read(p).ok()).collect() } else { Vec::new() };
    std::env::set_current_dir(&manifest.cwd)
        .with_context(|| format!("entering recorded directory {}", manifest.cwd.display()))?;
    let status = run(cli.command, &manifest.args)?;
    if a.verify {
        let mismatched: Vec<&PathBuf> = outputs
            .iter()
            .zip(&before)
            .filter(|(p, old)| old.is_none() || fs::read(p).ok() != **old)
            .map(|(p, _)| p)
            .collect();
        eprintln!("{}", serde_json::to_string(&json!({ "identical": mismatched.is_empty(), "mismatched": mismatched }))?);
        if !mismatched.is_empty() {
            bail!("{} output(s) differ from the recorded run", mismatched.len());
        }
    }
    Ok(status)
}
