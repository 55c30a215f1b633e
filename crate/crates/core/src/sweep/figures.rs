//! Canonical figure presets and the artifact writer shared with the CLI.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use super::output::{write_csv, write_heatmap, Palette, Scale};
use super::{run_sweep, Engine, HeatmapResult, Mode, Param, SweepConfig, SweepOutput};
use crate::error::{Error, Result};
use crate::lattice::{self, BandParameters, LatticeSpec};
use crate::spectral::{self, ResonanceSolution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Fig1,
    Fig2,
    Fig3a,
    Fig3b,
    Fig4,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Fig1, Preset::Fig2, Preset::Fig3a, Preset::Fig3b, Preset::Fig4];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig1 => "fig1",
            Preset::Fig2 => "fig2",
            Preset::Fig3a => "fig3a",
            Preset::Fig3b => "fig3b",
            Preset::Fig4 => "fig4",
        }
    }

    /// The preset file shipped in `presets/`.
    pub fn text(self) -> &'static str {
        match self {
            Preset::Fig1 => include_str!("../../presets/fig1.conf"),
            Preset::Fig2 => include_str!("../../presets/fig2.conf"),
            Preset::Fig3a => include_str!("../../presets/fig3a.conf"),
            Preset::Fig3b => include_str!("../../presets/fig3b.conf"),
            Preset::Fig4 => include_str!("../../presets/fig4.conf"),
        }
    }

    pub fn config(self) -> Result<SweepConfig> {
        SweepConfig::parse(self.text())
    }
}

impl FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}` (fig1, fig2, fig3a, fig3b, fig4)")))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug)]
pub struct FigureOutput {
    pub output: SweepOutput,
    pub files: Vec<PathBuf>,
    pub report: String,
}

impl FigureOutput {
    pub fn missing(&self) -> usize {
        self.output.results().map(HeatmapResult::missing).sum()
    }
}

impl SweepConfig {
    /// Band parameters when none of them is swept.
    pub fn fixed_bands(&self) -> Option<Result<BandParameters>> {
        let get = |p: Param| self.fixed.iter().find(|(q, _)| *q == p).map(|(_, v)| *v);
        if self.axes().any(|a| !a.param.is_force()) {
            return None;
        }
        if let (Some(d), Some(j), Some(c0)) = (get(Param::Delta), get(Param::J), get(Param::C0)) {
            return Some(Ok(BandParameters::from_difference(d, j, c0)));
        }
        let spec = match get(Param::V0) {
            Some(v0) => LatticeSpec::single(v0),
            None => {
                let v1 = get(Param::V1)?;
                let v2 = get(Param::V2).or_else(|| get(Param::V2OverV1).map(|r| r * v1))?;
                super::canonical_lattice(v1, v2, get(Param::Phi).unwrap_or(0.0))
            }
        };
        Some(lattice::extract_params_with(&spec, &self.grids))
    }
}

/// Mean of the column nearest `Δ = m·F` over the mean of the column nearest
/// `Δ = (m + ½)·F`, for maps with a `delta` x axis. `None` when either
/// column lies outside the axis or the denominator vanishes.
pub fn ridge_contrast(r: &HeatmapResult, m: u32, f: f64) -> Option<f64> {
    if r.x.name != "delta" {
        return None;
    }
    let xs = &r.x.values;
    let (lo, hi) = (xs[0], *xs.last()?);
    let nearest = |target: f64| -> Option<usize> {
        if target < lo || target > hi {
            return None;
        }
        (0..xs.len()).min_by(|&a, &b| (xs[a] - target).abs().total_cmp(&(xs[b] - target).abs()))
    };
    let mean = |ix: usize| {
        let col = r.column(ix);
        col.iter().sum::<f64>() / col.len() as f64
    };
    let on = mean(nearest(m as f64 * f)?);
    let off = mean(nearest((m as f64 + 0.5) * f)?);
    (off > 0.0).then(|| on / off)
}

/// Index of the largest finite value of a 1-D curve within `[lo, hi]` in x.
pub fn argmax_in(r: &HeatmapResult, lo: f64, hi: f64) -> Option<usize> {
    let row = r.row(0);
    (0..row.len())
        .filter(|&i| r.x.values[i] >= lo && r.x.values[i] <= hi && row[i].is_finite())
        .max_by(|&a, &b| row[a].total_cmp(&row[b]))
}

fn resonance_table(out: &mut String, res: &[ResonanceSolution], curve: Option<&HeatmapResult>) {
    let _ = writeln!(out, "resonances:");
    let _ = writeln!(out, "  m  F_m             1/F_m           F_m(unshifted)  residual   peak 1/F");
    for r in res {
        let inv = 1.0 / r.f_m;
        let peak = curve
            .and_then(|c| argmax_in(c, inv * 0.98, inv * 1.02).map(|i| c.x.values[i]))
            .map_or("-".to_string(), |x| format!("{x:.10}"));
        let _ = writeln!(
            out,
            "  {:<2} {:<15.10} {:<15.10} {:<15.10} {:<10.2e} {}",
            r.m, r.f_m, inv, r.f_m_uncorrected, r.residual, peak
        );
    }
}

/// Human-readable summary of a finished sweep.
pub fn report(cfg: &SweepConfig, out: &SweepOutput) -> String {
    let mut s = String::new();
    let stamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let _ = writeln!(s, "sweep {} ({})", cfg.name, cfg.mode);
    let _ = writeln!(s, "generated_unix_time = {stamp}");
    let _ = writeln!(s, "version = {}", env!("CARGO_PKG_VERSION"));
    for r in out.results() {
        let engine = r.meta("engine").unwrap_or("?");
        let _ = writeln!(
            s,
            "{engine}: {} x {} cells ({} x {}), missing = {}",
            r.x.values.len(),
            r.y.values.len(),
            r.x.name,
            r.y.name,
            r.missing()
        );
        if let Some((i, v)) = r
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .max_by(|a, b| a.1.total_cmp(b.1))
        {
            let nx = r.x.values.len();
            let _ = writeln!(
                s,
                "  max = {v:.6} at {} = {:.6}, {} = {:.6}",
                r.x.name,
                r.x.values[i % nx],
                r.y.name,
                r.y.values[i / nx]
            );
        }
        for d in r.diagnostics.iter().take(10) {
            let _ = writeln!(s, "  failed cell ({}, {}): {}", d.ix, d.iy, d.message);
        }
        if r.diagnostics.len() > 10 {
            let _ = writeln!(s, "  ... {} more failures", r.diagnostics.len() - 10);
        }
    }
    match cfg.fixed_bands() {
        Some(Ok(bands)) => {
            let _ = writeln!(
                s,
                "bands: delta = {:.6}, ja = {:.6}, jb = {:.6}, j = {:.6}, c0 = {:.6}",
                bands.delta,
                bands.ja,
                bands.jb,
                bands.j(),
                bands.c0
            );
            match spectral::resonances(&bands, cfg.m_max) {
                Ok(res) => {
                    let curve = out.analytic.as_ref().filter(|_| cfg.x.param == Param::InvF);
                    resonance_table(&mut s, &res, curve);
                }
                Err(e) => {
                    let _ = writeln!(s, "resonances: {e}");
                }
            }
        }
        Some(Err(e)) => {
            let _ = writeln!(s, "bands: {e}");
        }
        None => {}
    }
    if cfg.mode == Mode::LzsGrid {
        if let (Some(r), Some(f)) = (
            out.analytic.as_ref(),
            cfg.fixed.iter().find(|(p, _)| *p == Param::F).map(|(_, v)| *v),
        ) {
            let _ = writeln!(s, "ridge contrast (column delta = m F over delta = (m + 1/2) F):");
            for m in 1..=cfg.m_max {
                if let Some(c) = ridge_contrast(r, m, f) {
                    let _ = writeln!(s, "  m = {m}: {c:.3}");
                }
            }
        }
    }
    s
}

/// Writes CSV and heatmap files for every engine plus `<name>_report.txt`
/// into `dir`, returning the written paths.
pub fn write_outputs(
    cfg: &SweepConfig,
    out: &SweepOutput,
    dir: &Path,
    scale: Scale,
) -> Result<(Vec<PathBuf>, String)> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
    let mut files = Vec::new();
    let ext = match cfg.output.palette {
        Palette::Gray => "pgm",
        Palette::Rainbow => "ppm",
    };
    for (suffix, r) in [("", &out.analytic), ("_numeric", &out.numeric)] {
        let Some(r) = r else { continue };
        let csv = dir.join(format!("{}{suffix}.csv", cfg.name));
        write_csv(r, &csv)?;
        let img = dir.join(format!("{}{suffix}.{ext}", cfg.name));
        write_heatmap(r, &img, scale, cfg.output.palette, cfg.output.floor)?;
        files.extend([csv, img]);
    }
    let text = report(cfg, out);
    let path = dir.join(format!("{}_report.txt", cfg.name));
    std::fs::write(&path, &text).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    files.push(path);
    Ok((files, text))
}

/// Runs a preset and writes its artifacts into `dir`. `engine` and `scale`
/// override the preset's choices.
pub fn run_figure(
    preset: Preset,
    dir: &Path,
    workers: usize,
    engine: Option<Engine>,
    scale: Option<Scale>,
) -> Result<FigureOutput> {
    let mut cfg = preset.config()?;
    if let Some(e) = engine {
        cfg.engine = e;
        cfg.source.set("sweep", "engine", e.name());
    }
    let scale = scale.unwrap_or(cfg.output.scale);
    let output = run_sweep(&cfg, workers)?;
    let (files, report) = write_outputs(&cfg, &output, dir, scale)?;
    Ok(FigureOutput { output, files, report })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_parse() {
        for p in Preset::ALL {
            let cfg = p.config().unwrap();
            assert_eq!(cfg.name, p.name());
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
        assert!("fig5".parse::<Preset>().is_err());
    }

    #[test]
    fn fixed_bands_only_when_unswept() {
        assert!(Preset::Fig1.config().unwrap().fixed_bands().is_none());
        assert!(Preset::Fig3a.config().unwrap().fixed_bands().is_none());
        let b = Preset::Fig2.config().unwrap().fixed_bands().unwrap().unwrap();
        assert!((b.delta - 4.39).abs() < 0.02);
    }
}
