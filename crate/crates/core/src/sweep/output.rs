//! CSV and PGM/PPM writers for sweep results.
//!
//! CSV: `# key=value` comment lines, then `x,y,value` rows in row-major
//! order (`y` outer, `x` inner) with 12 significant digits; missing cells
//! are written as `nan`.
//!
//! Heatmaps: binary P5 (gray) or P6 (rainbow), maxval 255, first image row
//! at the largest `y`. A value `v ∈ [0, 1]` (or its log-scaled image) maps
//! to `round_ties_even(255·v)`; missing cells are drawn as 0.

use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use super::{Axis, CellFailure, HeatmapResult};
use crate::error::{Error, Result};

pub const DEFAULT_LOG_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Linear,
    /// `log10(max(v, floor))`, mapped linearly from `[log10 floor, 0]` to `[0, 1]`.
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Palette {
    #[default]
    Gray,
    Rainbow,
}

impl FromStr for Scale {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linear" => Ok(Scale::Linear),
            "log" => Ok(Scale::Log),
            other => Err(Error::Config(format!("unknown scale `{other}` (linear or log)"))),
        }
    }
}

impl fmt::Display for Scale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scale::Linear => "linear",
            Scale::Log => "log",
        })
    }
}

impl FromStr for Palette {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gray" | "grey" => Ok(Palette::Gray),
            "rainbow" => Ok(Palette::Rainbow),
            other => Err(Error::Config(format!("unknown palette `{other}` (gray or rainbow)"))),
        }
    }
}

impl fmt::Display for Palette {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Palette::Gray => "gray",
            Palette::Rainbow => "rainbow",
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn clean(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else {
        "nan".to_string()
    }
}

pub fn csv_string(r: &HeatmapResult) -> String {
    let mut s = String::new();
    for (k, v) in &r.metadata {
        let _ = writeln!(s, "# {}={}", clean(k), clean(v));
    }
    let _ = writeln!(s, "# x={}", r.x.name);
    let _ = writeln!(s, "# y={}", r.y.name);
    let _ = writeln!(s, "# nx={}", r.x.values.len());
    let _ = writeln!(s, "# ny={}", r.y.values.len());
    let _ = writeln!(s, "# missing={}", r.missing());
    for d in &r.diagnostics {
        let _ = writeln!(s, "# failure.{}.{}={}", d.ix, d.iy, clean(&d.message));
    }
    for (iy, &y) in r.y.values.iter().enumerate() {
        for (ix, &x) in r.x.values.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", fmt_value(x), fmt_value(y), fmt_value(r.get(ix, iy)));
        }
    }
    s
}

pub fn write_csv(r: &HeatmapResult, path: &Path) -> Result<()> {
    std::fs::write(path, csv_string(r)).map_err(io_err(path))
}

pub fn parse_csv(text: &str) -> Result<HeatmapResult> {
    let mut metadata = Vec::new();
    let mut diagnostics = Vec::new();
    let (mut x_name, mut y_name) = (String::from("x"), String::from("y"));
    let mut rows: Vec<[f64; 3]> = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let bad = |what: &str| Error::Config(format!("csv line {}: {what}", no + 1));
        if let Some(c) = line.strip_prefix('#') {
            let (k, v) = c.trim_start().split_once('=').ok_or_else(|| bad("comment is not key=value"))?;
            match k {
                "x" => x_name = v.to_string(),
                "y" => y_name = v.to_string(),
                "nx" | "ny" | "missing" => {}
                _ => match k.strip_prefix("failure.").and_then(|r| r.split_once('.')) {
                    Some((ix, iy)) => diagnostics.push(CellFailure {
                        ix: ix.parse().map_err(|_| bad("bad failure index"))?,
                        iy: iy.parse().map_err(|_| bad("bad failure index"))?,
                        message: v.to_string(),
                    }),
                    None => metadata.push((k.to_string(), v.to_string())),
                },
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut row = [0.0; 3];
        let mut fields = line.split(',');
        for slot in &mut row {
            *slot = fields
                .next()
                .ok_or_else(|| bad("expected 3 fields"))?
                .trim()
                .parse()
                .map_err(|_| bad("not a number"))?;
        }
        if fields.next().is_some() {
            return Err(bad("expected 3 fields"));
        }
        rows.push(row);
    }
    let first_y = rows.first().ok_or_else(|| Error::Config("csv has no data rows".into()))?[1];
    let nx = rows.iter().take_while(|r| r[1].to_bits() == first_y.to_bits()).count();
    if rows.len() % nx != 0 {
        return Err(Error::Config("csv rows do not form a rectangular grid".into()));
    }
    let x: Vec<f64> = rows[..nx].iter().map(|r| r[0]).collect();
    let y: Vec<f64> = rows.chunks(nx).map(|c| c[0][1]).collect();
    for (iy, chunk) in rows.chunks(nx).enumerate() {
        for (ix, r) in chunk.iter().enumerate() {
            if r[0].to_bits() != x[ix].to_bits() || r[1].to_bits() != y[iy].to_bits() {
                return Err(Error::Config("csv rows are not in row-major grid order".into()));
            }
        }
    }
    Ok(HeatmapResult {
        x: Axis { name: x_name, values: x },
        y: Axis { name: y_name, values: y },
        values: rows.iter().map(|r| r[2]).collect(),
        metadata,
        diagnostics,
    })
}

pub fn read_csv(path: &Path) -> Result<HeatmapResult> {
    parse_csv(&std::fs::read_to_string(path).map_err(io_err(path))?)
}

/// Gray level of one cell; `None` for missing values.
pub fn gray_level(v: f64, scale: Scale, floor: f64) -> Option<u8> {
    if !v.is_finite() {
        return None;
    }
    let u = match scale {
        Scale::Linear => v.clamp(0.0, 1.0),
        Scale::Log => {
            let lf = floor.log10();
            ((v.max(floor).log10() - lf) / -lf).clamp(0.0, 1.0)
        }
    };
    Some((255.0 * u).round_ties_even() as u8)
}

/// 256-entry rainbow: hue runs from blue (level 0) to red (level 255) at
/// full saturation and value.
pub fn rainbow_lut() -> [[u8; 3]; 256] {
    let mut lut = [[0u8; 3]; 256];
    for (i, entry) in lut.iter_mut().enumerate() {
        let h = 4.0 * (1.0 - i as f64 / 255.0); // hue / 60°, 4 = blue
        let x = 1.0 - (h % 2.0 - 1.0).abs();
        let (r, g, b) = match h as u32 {
            0 => (1.0, x, 0.0),
            1 => (x, 1.0, 0.0),
            2 => (0.0, 1.0, x),
            3 => (0.0, x, 1.0),
            _ => (0.0, 0.0, 1.0),
        };
        *entry = [r, g, b].map(|c: f64| (255.0 * c).round_ties_even() as u8);
    }
    lut
}

pub fn heatmap_bytes(r: &HeatmapResult, scale: Scale, palette: Palette, floor: f64) -> Vec<u8> {
    let (nx, ny) = (r.x.values.len(), r.y.values.len());
    let ascending = r.y.values.first() <= r.y.values.last();
    let mapping = match scale {
        Scale::Linear => "round_ties_even(255*clamp(v,0,1))".to_string(),
        Scale::Log => format!("round_ties_even(255*(log10(max(v,{floor:e}))-log10({floor:e}))/(-log10({floor:e})))"),
    };
    let magic = match palette {
        Palette::Gray => "P5",
        Palette::Rainbow => "P6",
    };
    let mut out = format!(
        "{magic}\n# {} x={} [{}, {}] y={} [{}, {}] top row = max y\n# level={mapping} palette={palette} missing={}\n{nx} {ny}\n255\n",
        r.meta("name").unwrap_or("sweep"),
        r.x.name,
        r.x.values.first().copied().unwrap_or(f64::NAN),
        r.x.values.last().copied().unwrap_or(f64::NAN),
        r.y.name,
        r.y.values.first().copied().unwrap_or(f64::NAN),
        r.y.values.last().copied().unwrap_or(f64::NAN),
        r.missing(),
    )
    .into_bytes();
    let lut = rainbow_lut();
    for row in 0..ny {
        let iy = if ascending { ny - 1 - row } else { row };
        for ix in 0..nx {
            let g = gray_level(r.get(ix, iy), scale, floor).unwrap_or(0);
            match palette {
                Palette::Gray => out.push(g),
                Palette::Rainbow => out.extend_from_slice(&lut[g as usize]),
            }
        }
    }
    out
}

/// Writes a P5/P6 heatmap; returns the number of missing cells.
pub fn write_heatmap(r: &HeatmapResult, path: &Path, scale: Scale, palette: Palette, floor: f64) -> Result<usize> {
    std::fs::write(path, heatmap_bytes(r, scale, palette, floor)).map_err(io_err(path))?;
    Ok(r.missing())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> HeatmapResult {
        HeatmapResult {
            x: Axis { name: "delta".into(), values: vec![0.5, 1.0, 1.5] },
            y: Axis { name: "j".into(), values: vec![-1.0, 0.0] },
            values: vec![0.0, 0.25, 1.0 / 3.0, 0.5, f64::NAN, 1.0],
            metadata: vec![("mode".into(), "lzs-grid".into())],
            diagnostics: vec![CellFailure { ix: 1, iy: 1, message: "no\nconvergence".into() }],
        }
    }

    #[test]
    fn csv_round_trip() {
        let r = sample();
        let text = csv_string(&r);
        assert!(text.contains("3.33333333333e-1"));
        assert!(text.contains("# missing=1"));
        let back = parse_csv(&text).unwrap();
        assert_eq!(back.x, r.x);
        assert_eq!(back.y, r.y);
        assert_eq!(back.metadata, r.metadata);
        assert_eq!(back.diagnostics[0].message, "no convergence");
        for (a, b) in back.values.iter().zip(&r.values) {
            assert!(a.is_nan() && b.is_nan() || (a - b).abs() <= 1e-12 * b.abs());
        }
        assert!(parse_csv("1,2\n").is_err());
        assert!(parse_csv("# a=b\n").is_err());
    }

    #[test]
    fn gray_levels() {
        assert_eq!(gray_level(0.5, Scale::Linear, 1e-6), Some(128)); // 127.5 → even
        assert_eq!(gray_level(1.5 / 255.0, Scale::Linear, 1e-6), Some(2));
        assert_eq!(gray_level(2.0, Scale::Linear, 1e-6), Some(255));
        assert_eq!(gray_level(f64::NAN, Scale::Linear, 1e-6), None);
        assert_eq!(gray_level(1e-9, Scale::Log, 1e-6), Some(0));
        assert_eq!(gray_level(1e-3, Scale::Log, 1e-6), Some(128));
        assert_eq!(gray_level(1.0, Scale::Log, 1e-6), Some(255));
    }

    #[test]
    fn pgm_layout() {
        let bytes = heatmap_bytes(&sample(), Scale::Linear, Palette::Gray, 1e-6);
        let text = String::from_utf8_lossy(&bytes);
        assert!(text.starts_with("P5\n#"));
        let pixels = &bytes[bytes.len() - 6..];
        // top row is y = 0
        assert_eq!(pixels, &[128, 0, 255, 0, 64, 85]);
        let ppm = heatmap_bytes(&sample(), Scale::Linear, Palette::Rainbow, 1e-6);
        assert_eq!(&ppm[ppm.len() - 3..], &rainbow_lut()[85]);
    }

    #[test]
    fn rainbow_ends() {
        let lut = rainbow_lut();
        assert_eq!(lut[0], [0, 0, 255]);
        assert_eq!(lut[255], [255, 0, 0]);
        assert!(lut.iter().all(|c| c.iter().any(|&v| v == 255)));
    }
}
