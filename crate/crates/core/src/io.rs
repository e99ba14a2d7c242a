//! File formats: binary PGM for images, raw little-endian `f64` planes for
//! dual fields, each with a JSON sidecar at `<path>.json` holding
//! `{"width", "height", "spacing", "components"}`.
//!
//! PGM rows are written top to bottom, i.e. from the largest `y` to the
//! smallest, so images display upright. Raw fields keep the in-memory order
//! (row `j = 0` first). A dual field is stored as four planes
//! `[forward.x, forward.y, backward.x, backward.y]`; two planes are read as a
//! collocated field used for both stencils.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DualField, GridImage, GridMeta, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub width: usize,
    pub height: usize,
    pub spacing: f64,
    pub components: usize,
}

impl Sidecar {
    pub fn meta(&self) -> Result<GridMeta> {
        GridMeta::new(self.width, self.height, self.spacing)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PgmDepth {
    Eight,
    #[default]
    Sixteen,
}

impl PgmDepth {
    fn maxval(self) -> u32 {
        match self {
            PgmDepth::Eight => 255,
            PgmDepth::Sixteen => 65535,
        }
    }
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn write_sidecar(path: &Path, sidecar: &Sidecar) -> Result<()> {
    fs::write(sidecar_path(path), serde_json::to_string_pretty(sidecar)?)?;
    Ok(())
}

/// Reads the sidecar next to `path`, if there is one.
pub fn read_sidecar(path: &Path) -> Result<Option<Sidecar>> {
    let p = sidecar_path(path);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
}

/// Encodes values clamped to `[0, 1]`, linearly mapped to `0..=maxval`.
pub fn encode_pgm(img: &GridImage, depth: PgmDepth) -> Vec<u8> {
    let (w, h) = (img.width(), img.height());
    let maxval = depth.maxval();
    let mut out = format!("P5\n{w} {h}\n{maxval}\n").into_bytes();
    for j in (0..h).rev() {
        for i in 0..w {
            let q = (img.get(i, j).clamp(0.0, 1.0) * maxval as f64).round() as u32;
            match depth {
                PgmDepth::Eight => out.push(q as u8),
                PgmDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
            }
        }
    }
    out
}

/// Decodes a P5 image into values in `[0, 1]` on a grid with the given spacing.
pub fn decode_pgm(bytes: &[u8], spacing: f64) -> Result<GridImage> {
    let mut pos = 0;
    let mut token = || -> Result<String> {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            break;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("truncated PGM header".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    if token()? != "P5" {
        return Err(Error::Format("not a binary PGM (P5) file".into()));
    }
    let mut number = |what: &str| -> Result<usize> {
        token()?.parse().map_err(|_| Error::Format(format!("bad PGM {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval == 0 || maxval > 65535 {
        return Err(Error::Format(format!("PGM maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    let data = bytes.get(pos + 1..).unwrap_or(&[]);
    let bpp = if maxval < 256 { 1 } else { 2 };
    let meta = GridMeta::new(width, height, spacing)?;
    if data.len() < meta.len() * bpp {
        return Err(Error::Format(format!(
            "PGM raster has {} bytes, expected {}",
            data.len(),
            meta.len() * bpp
        )));
    }
    let scale = 1.0 / maxval as f64;
    let mut values = vec![0.0; meta.len()];
    for (r, row) in data.chunks_exact(width * bpp).take(height).enumerate() {
        let j = height - 1 - r;
        for i in 0..width {
            let q = if bpp == 1 { row[i] as u32 } else { u16::from_be_bytes([row[2 * i], row[2 * i + 1]]) as u32 };
            values[j * width + i] = (q.min(maxval as u32)) as f64 * scale;
        }
    }
    GridImage::new(meta, values)
}

/// Writes the image and its sidecar.
pub fn write_pgm(path: &Path, img: &GridImage, depth: PgmDepth) -> Result<()> {
    fs::File::create(path)?.write_all(&encode_pgm(img, depth))?;
    write_sidecar(
        path,
        &Sidecar { width: img.width(), height: img.height(), spacing: img.spacing(), components: 1 },
    )
}

/// Reads a PGM. Spacing comes from `spacing` if given, else from the sidecar,
/// else defaults to 1.
pub fn read_pgm(path: &Path, spacing: Option<f64>) -> Result<GridImage> {
    let bytes = fs::read(path)?;
    let h = match spacing {
        Some(h) => h,
        None => read_sidecar(path)?.map_or(1.0, |s| s.spacing),
    };
    let img = decode_pgm(&bytes, h)?;
    if let (None, Some(s)) = (spacing, read_sidecar(path)?) {
        if s.width != img.width() || s.height != img.height() {
            return Err(Error::Format(format!("sidecar of {} disagrees with the image size", path.display())));
        }
    }
    Ok(img)
}

fn write_planes(path: &Path, meta: GridMeta, planes: &[&[f64]]) -> Result<()> {
    let mut buf = Vec::with_capacity(planes.len() * meta.len() * 8);
    for plane in planes {
        for v in plane.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, buf)?;
    write_sidecar(
        path,
        &Sidecar { width: meta.width, height: meta.height, spacing: meta.spacing, components: planes.len() },
    )
}

fn read_planes(path: &Path) -> Result<(Sidecar, Vec<Vec<f64>>)> {
    let sidecar = read_sidecar(path)?
        .ok_or_else(|| Error::Format(format!("missing sidecar {}", sidecar_path(path).display())))?;
    let meta = sidecar.meta()?;
    let bytes = fs::read(path)?;
    let expected = sidecar.components * meta.len() * 8;
    if bytes.len() != expected {
        return Err(Error::Format(format!("{} has {} bytes, expected {expected}", path.display(), bytes.len())));
    }
    let planes = bytes
        .chunks_exact(meta.len() * 8)
        .map(|plane| plane.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
        .collect();
    Ok((sidecar, planes))
}

pub fn write_field(path: &Path, p: &DualField) -> Result<()> {
    write_planes(path, p.meta(), &[&p.forward.x, &p.forward.y, &p.backward.x, &p.backward.y])
}

pub fn read_field(path: &Path) -> Result<DualField> {
    let (sidecar, mut planes) = read_planes(path)?;
    let meta = sidecar.meta()?;
    if planes.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Format(format!("{} contains non-finite values", path.display())));
    }
    match sidecar.components {
        2 => {
            let y = planes.pop().unwrap();
            let x = planes.pop().unwrap();
            Ok(DualField::collocated(VectorField::new(meta, x, y)?))
        }
        4 => {
            let by = planes.pop().unwrap();
            let bx = planes.pop().unwrap();
            let fy = planes.pop().unwrap();
            let fx = planes.pop().unwrap();
            DualField::new(VectorField::new(meta, fx, fy)?, VectorField::new(meta, bx, by)?)
        }
        c => Err(Error::Format(format!("field with {c} components; expected 2 or 4"))),
    }
}

/// Scalar image as a single raw plane, lossless.
pub fn write_raw_image(path: &Path, img: &GridImage) -> Result<()> {
    write_planes(path, img.meta(), &[img.values()])
}

pub fn read_raw_image(path: &Path) -> Result<GridImage> {
    let (sidecar, mut planes) = read_planes(path)?;
    if sidecar.components != 1 {
        return Err(Error::Format(format!("image with {} components", sidecar.components)));
    }
    GridImage::new(sidecar.meta()?, planes.pop().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridImage {
        let meta = GridMeta::new(5, 3, 0.25).unwrap();
        GridImage::from_fn(meta, |p| ((p[0] + 1.0) * 0.4 + p[1].abs()).clamp(0.0, 1.0))
    }

    #[test]
    fn pgm_round_trip_within_quantization() {
        let img = sample();
        for (depth, q) in [(PgmDepth::Eight, 255.0), (PgmDepth::Sixteen, 65535.0)] {
            let back = decode_pgm(&encode_pgm(&img, depth), 0.25).unwrap();
            for (a, b) in img.values().iter().zip(back.values()) {
                assert!((a - b).abs() <= 0.5 / q + 1e-15);
            }
        }
    }

    #[test]
    fn pgm_header_with_comment() {
        let mut bytes = b"P5\n# made by hand\n2 2\n255\n".to_vec();
        bytes.extend_from_slice(&[0, 255, 255, 0]);
        let img = decode_pgm(&bytes, 1.0).unwrap();
        // first file row is the top row (j = 1)
        assert_eq!(img.values(), &[1.0, 0.0, 0.0, 1.0]);
        assert!(decode_pgm(b"P2\n1 1\n255\n0", 1.0).is_err());
        assert!(decode_pgm(b"P5\n4 4\n255\n\x00", 1.0).is_err());
    }

    #[test]
    fn files_round_trip() {
        let dir = tempdir();
        let img = sample();
        let pgm = dir.join("u.pgm");
        write_pgm(&pgm, &img, PgmDepth::Sixteen).unwrap();
        let back = read_pgm(&pgm, None).unwrap();
        assert_eq!(back.meta(), img.meta());

        let raw = dir.join("u.raw");
        write_raw_image(&raw, &img).unwrap();
        assert_eq!(read_raw_image(&raw).unwrap(), img);

        let meta = img.meta();
        let mut p = DualField::zeros(meta);
        p.forward.x[1] = 0.5;
        p.backward.y[2] = -0.25;
        let field = dir.join("p.raw");
        write_field(&field, &p).unwrap();
        assert_eq!(read_field(&field).unwrap(), p);
        fs::remove_dir_all(dir).unwrap();
    }

    fn tempdir() -> PathBuf {
        let dir = std::env::temp_dir().join(format!("wulff-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        dir
    }
}
