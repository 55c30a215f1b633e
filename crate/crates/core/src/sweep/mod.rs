//! Parameter sweeps over one or two axes, producing maps of the long-time
//! averaged upper-band occupation from the closed-form resonance model
//! (analytic engine) and/or exact time evolution (numeric engine).

pub mod config;
pub mod figures;
pub mod output;

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use crate::dynamics::{self, EvolutionConfig, Horizon};
use crate::error::{Error, Result};
use crate::lattice::{self, BandParameters, LatticeGrids, LatticeSpec};
use crate::model::DrivenTwoBandParameters;
use crate::par;
use crate::spectral::{self, LorentzianCoupling, ResonanceSolution};

pub use config::ConfigFile;
pub use figures::{run_figure, FigureOutput, Preset};
pub use output::{read_csv, write_csv, write_heatmap, Palette, Scale};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Δ × J map at fixed C₀, F.
    LzsGrid,
    /// One force axis at fixed bands.
    ForceCurve,
    /// Lattice depth × force.
    DepthForce,
    /// Superlattice depth ratio × phase at fixed force.
    SuperlatticePhase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Engine {
    #[default]
    Analytic,
    Numeric,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Param {
    Delta,
    J,
    C0,
    F,
    InvF,
    V0,
    V1,
    V2,
    V2OverV1,
    Phi,
}

const PARAMS: [(Param, &str); 10] = [
    (Param::Delta, "delta"),
    (Param::J, "j"),
    (Param::C0, "c0"),
    (Param::F, "f"),
    (Param::InvF, "inv_f"),
    (Param::V0, "v0"),
    (Param::V1, "v1"),
    (Param::V2, "v2"),
    (Param::V2OverV1, "v2_over_v1"),
    (Param::Phi, "phi"),
];

macro_rules! keyword_enum {
    ($ty:ty, $what:literal, [$(($variant:expr, $name:literal)),* $(,)?]) => {
        impl $ty {
            pub fn name(self) -> &'static str {
                $(if self == $variant { return $name; })*
                unreachable!()
            }
        }
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($name => Ok($variant),)*
                    other => Err(Error::Config(format!(
                        concat!("unknown ", $what, " `{}` (expected one of: {})"),
                        other,
                        [$($name),*].join(", ")
                    ))),
                }
            }
        }
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }
    };
}

keyword_enum!(Mode, "mode", [
    (Mode::LzsGrid, "lzs-grid"),
    (Mode::ForceCurve, "force-curve"),
    (Mode::DepthForce, "depth-force"),
    (Mode::SuperlatticePhase, "superlattice-phase"),
]);
keyword_enum!(Engine, "engine", [
    (Engine::Analytic, "analytic"),
    (Engine::Numeric, "numeric"),
    (Engine::Both, "both"),
]);

impl Param {
    pub fn name(self) -> &'static str {
        PARAMS.iter().find(|(p, _)| *p == self).map(|(_, n)| *n).unwrap_or("?")
    }

    fn is_force(self) -> bool {
        matches!(self, Param::F | Param::InvF)
    }

    fn is_lattice(self) -> bool {
        matches!(self, Param::V0 | Param::V1 | Param::V2 | Param::V2OverV1 | Param::Phi)
    }

    fn is_direct_band(self) -> bool {
        matches!(self, Param::Delta | Param::J | Param::C0)
    }
}

impl FromStr for Param {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        PARAMS.iter().find(|(_, n)| *n == s).map(|(p, _)| *p).ok_or_else(|| {
            let names: Vec<_> = PARAMS.iter().map(|(_, n)| *n).collect();
            Error::Config(format!("unknown parameter `{s}` (expected one of: {})", names.join(", ")))
        })
    }
}

/// Extra points inserted around resonances of a force axis: every base
/// interval overlapping `1/F_m·(1 ± half_width)` is split into `factor`
/// sub-intervals. Base points are kept unchanged.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Refinement {
    pub half_width: f64,
    pub factor: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AxisSpec {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub points: usize,
    /// Whether `max` itself is a grid point.
    pub endpoint: bool,
    pub refine: Option<Refinement>,
}

impl AxisSpec {
    pub fn new(param: Param, min: f64, max: f64, points: usize) -> Self {
        Self { param, min, max, points, endpoint: true, refine: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::Config(format!("axis {}: need at least 2 points", self.param.name())));
        }
        if !(self.min < self.max) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(Error::Config(format!(
                "axis {}: need finite min < max, got [{}, {}]",
                self.param.name(),
                self.min,
                self.max
            )));
        }
        if let Some(r) = self.refine {
            if !(r.half_width > 0.0 && r.half_width < 0.5) || r.factor < 2 {
                return Err(Error::Config("refinement needs 0 < half_width < 0.5, factor ≥ 2".into()));
            }
        }
        Ok(())
    }

    /// `min + (max − min)·i/(n−1)` (or `i/n` without endpoint); fractions are
    /// formed first so that coarser grids are exact subsets of finer ones.
    pub fn base_values(&self) -> Vec<f64> {
        let den = if self.endpoint { self.points - 1 } else { self.points } as f64;
        (0..self.points).map(|i| self.min + (self.max - self.min) * (i as f64 / den)).collect()
    }

    fn refined_values(&self, centers: &[f64]) -> Vec<f64> {
        let base = self.base_values();
        let Some(r) = self.refine else { return base };
        let mut out = Vec::with_capacity(base.len());
        for w in base.windows(2) {
            out.push(w[0]);
            let hit = centers.iter().any(|&c| {
                let (lo, hi) = (c * (1.0 - r.half_width), c * (1.0 + r.half_width));
                w[1] >= lo && w[0] <= hi
            });
            if hit {
                for k in 1..r.factor {
                    out.push(w[0] + (w[1] - w[0]) * (k as f64 / r.factor as f64));
                }
            }
        }
        out.push(*base.last().expect("axis has ≥ 2 points"));
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericSettings {
    /// Uniform subsample of the x axis used by the numeric engine.
    pub points: Option<usize>,
    pub horizon: Horizon,
    pub k_points: usize,
    pub tol: f64,
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self { points: None, horizon: Horizon::Auto, k_points: 1, tol: 1e-9 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSettings {
    pub scale: Scale,
    pub palette: Palette,
    pub floor: f64,
}

impl Default for OutputSettings {
    fn default() -> Self {
        Self { scale: Scale::Linear, palette: Palette::Gray, floor: output::DEFAULT_LOG_FLOOR }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepConfig {
    pub name: String,
    pub mode: Mode,
    pub engine: Engine,
    pub x: AxisSpec,
    pub y: Option<AxisSpec>,
    pub fixed: Vec<(Param, f64)>,
    pub m_max: u32,
    pub lorentzian: LorentzianCoupling,
    pub numeric: NumericSettings,
    pub grids: LatticeGrids,
    pub output: OutputSettings,
    /// The configuration this sweep was built from, echoed into outputs.
    pub source: ConfigFile,
}

fn parse_axis(c: &ConfigFile, section: &str) -> Result<Option<AxisSpec>> {
    if !c.has_section(section) {
        return Ok(None);
    }
    let need = |key: &str| {
        c.get(section, key).ok_or_else(|| Error::Config(format!("[{section}] missing `{key}`")))
    };
    let param: Param = need("name")?.parse()?;
    let num = |key: &str| -> Result<f64> {
        c.get_f64(section, key)?.ok_or_else(|| Error::Config(format!("[{section}] missing `{key}`")))
    };
    let mut axis = AxisSpec::new(
        param,
        num("min")?,
        num("max")?,
        c.get_usize(section, "points")?
            .ok_or_else(|| Error::Config(format!("[{section}] missing `points`")))?,
    );
    axis.endpoint = c.get_bool(section, "endpoint")?.unwrap_or(true);
    if let Some(half_width) = c.get_f64(section, "refine_width")? {
        let factor = c.get_usize(section, "refine_factor")?.unwrap_or(5);
        axis.refine = Some(Refinement { half_width, factor });
    }
    for (key, _) in c.section(section) {
        if !["name", "min", "max", "points", "endpoint", "refine_width", "refine_factor"].contains(&key) {
            return Err(Error::Config(format!("[{section}] unknown key `{key}`")));
        }
    }
    Ok(Some(axis))
}

fn check_keys(c: &ConfigFile, section: &str, allowed: &[&str]) -> Result<()> {
    for (key, _) in c.section(section) {
        if !allowed.contains(&key) {
            return Err(Error::Config(format!("[{section}] unknown key `{key}`")));
        }
    }
    Ok(())
}

impl SweepConfig {
    pub fn from_config(c: &ConfigFile) -> Result<Self> {
        for (section, _, _) in c.entries() {
            if !["sweep", "x", "y", "fixed", "numeric", "lattice", "output"].contains(&section) {
                return Err(Error::Config(format!("unknown section `[{section}]`")));
            }
        }
        check_keys(c, "sweep", &["name", "mode", "engine", "m_max", "lorentzian"])?;
        let mode: Mode = c
            .get("sweep", "mode")
            .ok_or_else(|| Error::Config("[sweep] missing `mode`".into()))?
            .parse()?;
        let engine: Engine = c.get("sweep", "engine").unwrap_or("analytic").parse()?;
        let lorentzian = match c.get("sweep", "lorentzian").unwrap_or("at-resonance") {
            "at-resonance" => LorentzianCoupling::AtResonance,
            "running" => LorentzianCoupling::Running,
            other => {
                return Err(Error::Config(format!(
                    "[sweep] lorentzian `{other}` (expected at-resonance or running)"
                )))
            }
        };
        let x = parse_axis(c, "x")?.ok_or_else(|| Error::Config("missing [x] axis".into()))?;
        let y = parse_axis(c, "y")?;
        let fixed = c
            .section("fixed")
            .map(|(k, v)| {
                let p: Param = k.parse()?;
                let v = config::parse_f64(v).map_err(|e| Error::Config(format!("[fixed] {k}: {e}")))?;
                Ok((p, v))
            })
            .collect::<Result<Vec<_>>>()?;

        check_keys(c, "numeric", &["points", "periods", "k_points", "tol"])?;
        let mut numeric = NumericSettings::default();
        numeric.points = c.get_usize("numeric", "points")?;
        match c.get("numeric", "periods") {
            None | Some("auto") => {}
            Some(v) => {
                let n = config::parse_f64(v).map_err(|e| Error::Config(format!("[numeric] periods: {e}")))?;
                numeric.horizon = Horizon::BlochPeriods(n);
            }
        }
        numeric.k_points = c.get_usize("numeric", "k_points")?.unwrap_or(1);
        numeric.tol = c.get_f64("numeric", "tol")?.unwrap_or(numeric.tol);

        check_keys(c, "lattice", &["cutoff", "q_points", "x_per_cell", "cells", "integration_x_per_cell"])?;
        let mut grids = LatticeGrids::default();
        grids.cutoff = c.get_usize("lattice", "cutoff")?.unwrap_or(grids.cutoff);
        grids.q_points = c.get_usize("lattice", "q_points")?.unwrap_or(grids.q_points);
        grids.x_per_cell = c.get_usize("lattice", "x_per_cell")?.unwrap_or(grids.x_per_cell);
        grids.cells = c.get_usize("lattice", "cells")?.unwrap_or(grids.cells);
        grids.integration_x_per_cell = c
            .get_usize("lattice", "integration_x_per_cell")?
            .unwrap_or(grids.integration_x_per_cell);

        check_keys(c, "output", &["scale", "palette", "floor"])?;
        let mut out = OutputSettings::default();
        if let Some(s) = c.get("output", "scale") {
            out.scale = s.parse()?;
        }
        if let Some(s) = c.get("output", "palette") {
            out.palette = s.parse()?;
        }
        out.floor = c.get_f64("output", "floor")?.unwrap_or(out.floor);

        let cfg = Self {
            name: c.get("sweep", "name").unwrap_or(mode.name()).to_string(),
            mode,
            engine,
            x,
            y,
            fixed,
            m_max: c
                .get_usize("sweep", "m_max")?
                .map_or(spectral::DEFAULT_M_MAX, |m| m as u32),
            lorentzian,
            numeric,
            grids,
            output: out,
            source: c.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::from_config(&ConfigFile::parse(text)?)
    }

    fn axes(&self) -> impl Iterator<Item = &AxisSpec> {
        std::iter::once(&self.x).chain(self.y.as_ref())
    }

    fn has(&self, p: Param) -> bool {
        self.axes().any(|a| a.param == p) || self.fixed.iter().any(|(q, _)| *q == p)
    }

    pub fn validate(&self) -> Result<()> {
        for a in self.axes() {
            a.validate()?;
        }
        let mut names: Vec<Param> = self.axes().map(|a| a.param).collect();
        names.extend(self.fixed.iter().map(|(p, _)| *p));
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != names.len() {
            return Err(Error::Config("a parameter is both swept and fixed, or given twice".into()));
        }
        let bad = |msg: String| Err(Error::Config(format!("mode {}: {msg}", self.mode)));
        let axis_params: Vec<Param> = self.axes().map(|a| a.param).collect();
        let forces = names.iter().filter(|p| p.is_force()).count();
        if forces != 1 {
            return bad("exactly one of f, inv_f must be given".into());
        }
        let direct = names.iter().filter(|p| p.is_direct_band()).count();
        let lattice = names.iter().any(|p| p.is_lattice());
        if direct > 0 && (direct != 3 || lattice) {
            return bad("give either all of delta, j, c0 or lattice parameters".into());
        }
        if direct == 0 {
            let single = self.has(Param::V0);
            let superl = self.has(Param::V1)
                && (self.has(Param::V2) ^ self.has(Param::V2OverV1))
                && self.has(Param::Phi);
            let extra = [Param::V1, Param::V2, Param::V2OverV1, Param::Phi].iter().any(|p| self.has(*p));
            if !(single && !extra) && !(superl && !single) {
                return bad("lattice needs v0, or v1 with one of v2/v2_over_v1 and phi".into());
            }
        }
        match self.mode {
            Mode::LzsGrid => {
                if direct != 3 || self.y.is_none() {
                    return bad("needs direct band parameters and two axes".into());
                }
            }
            Mode::ForceCurve => {
                if self.y.is_some() || !self.x.param.is_force() {
                    return bad("needs a single force axis (f or inv_f)".into());
                }
            }
            Mode::DepthForce => {
                let ok = self.y.is_some()
                    && axis_params.iter().filter(|p| p.is_force()).count() == 1
                    && axis_params
                        .iter()
                        .any(|p| matches!(p, Param::V0 | Param::V1 | Param::V2 | Param::V2OverV1));
                if !ok || direct != 0 {
                    return bad("needs a lattice-depth axis and a force axis".into());
                }
            }
            Mode::SuperlatticePhase => {
                let ok = axis_params.contains(&Param::Phi)
                    && axis_params.iter().any(|p| matches!(p, Param::V2 | Param::V2OverV1));
                if !ok || direct != 0 {
                    return bad("needs a v2 or v2_over_v1 axis and a phi axis".into());
                }
            }
        }
        if self.m_max > 64 {
            return bad(format!("m_max {} too large", self.m_max));
        }
        self.grids.validate().map_err(|e| Error::Config(format!("[lattice] {e}")))?;
        if !(self.numeric.tol > 0.0 && self.numeric.tol <= 1e-3) || self.numeric.k_points == 0 {
            return bad("numeric tol must lie in (0, 1e-3] and k_points ≥ 1".into());
        }
        if let Some(n) = self.numeric.points {
            if n < 2 {
                return bad("numeric points must be ≥ 2".into());
            }
        }
        if !(self.output.floor > 0.0 && self.output.floor < 1.0) {
            return bad("log floor must lie in (0, 1)".into());
        }
        Ok(())
    }
}

/// One grid axis of a result.
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CellFailure {
    pub ix: usize,
    pub iy: usize,
    pub message: String,
}

/// Mean occupations on an `x × y` grid, stored row-major (`y` outer).
/// Failed cells hold NaN and are listed in `diagnostics`.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatmapResult {
    pub x: Axis,
    pub y: Axis,
    pub values: Vec<f64>,
    pub metadata: Vec<(String, String)>,
    pub diagnostics: Vec<CellFailure>,
}

impl HeatmapResult {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.x.values.len() + ix]
    }

    pub fn row(&self, iy: usize) -> &[f64] {
        let nx = self.x.values.len();
        &self.values[iy * nx..(iy + 1) * nx]
    }

    pub fn column(&self, ix: usize) -> Vec<f64> {
        (0..self.y.values.len()).map(|iy| self.get(ix, iy)).collect()
    }

    pub fn missing(&self) -> usize {
        self.values.iter().filter(|v| !v.is_finite()).count()
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

/// Band data shared by all cells with the same band parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct BandData {
    pub bands: BandParameters,
    pub resonances: Vec<ResonanceSolution>,
}

type Slot = Arc<OnceLock<std::result::Result<Arc<BandData>, String>>>;

/// Insert-once memo of [`BandData`], keyed on the defining parameters
/// rounded to 1e-10. Superlattice phases are folded onto `[0, π]` using the
/// mirror symmetry `x → −x`, which maps `φ` to `2π − φ`.
#[derive(Default)]
pub struct BandMemo {
    table: Mutex<HashMap<(u8, [i64; 3]), Slot>>,
}

fn round_key(v: f64) -> i64 {
    (v * 1e10).round() as i64
}

impl BandMemo {
    pub fn len(&self) -> usize {
        self.table.lock().map(|t| t.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn get_or_compute(
        &self,
        key: (u8, [i64; 3]),
        compute: impl FnOnce() -> Result<BandData>,
    ) -> Result<Arc<BandData>> {
        let slot = {
            let mut table = self.table.lock().map_err(|_| Error::ContractViolation("memo poisoned".into()))?;
            table.entry(key).or_default().clone()
        };
        slot.get_or_init(|| compute().map(Arc::new).map_err(|e| e.to_string()))
            .clone()
            .map_err(Error::Accuracy)
    }
}

/// Canonical lattice for band extraction.
pub fn canonical_lattice(v1: f64, v2: f64, phi: f64) -> LatticeSpec {
    if v2 == 0.0 {
        return LatticeSpec::single(v1);
    }
    let p = phi.rem_euclid(std::f64::consts::TAU);
    let folded = p.min(std::f64::consts::TAU - p);
    let folded = if round_key(folded) == 0 { 0.0 } else { folded };
    LatticeSpec::superlattice(v1, v2, folded)
}

struct CellInput {
    ix: usize,
    iy: usize,
    values: Vec<(Param, f64)>,
}

impl CellInput {
    fn get(&self, p: Param) -> Option<f64> {
        self.values.iter().find(|(q, _)| *q == p).map(|(_, v)| *v)
    }
}

/// Everything needed to evaluate cells of one sweep.
pub struct SweepContext<'a> {
    cfg: &'a SweepConfig,
    memo: &'a BandMemo,
}

impl<'a> SweepContext<'a> {
    pub fn new(cfg: &'a SweepConfig, memo: &'a BandMemo) -> Self {
        Self { cfg, memo }
    }

    fn band_data(&self, cell: &CellInput) -> Result<Arc<BandData>> {
        let m_max = self.cfg.m_max;
        let with_resonances = |bands: BandParameters| -> Result<BandData> {
            Ok(BandData { bands, resonances: spectral::resonances(&bands, m_max)? })
        };
        if let (Some(d), Some(j), Some(c0)) =
            (cell.get(Param::Delta), cell.get(Param::J), cell.get(Param::C0))
        {
            let key = (0, [round_key(d), round_key(j), round_key(c0)]);
            return self
                .memo
                .get_or_compute(key, || with_resonances(BandParameters::from_difference(d, j, c0)));
        }
        let spec = match cell.get(Param::V0) {
            Some(v0) => LatticeSpec::single(v0),
            None => {
                let v1 = cell.get(Param::V1).unwrap_or(0.0);
                let v2 = match cell.get(Param::V2OverV1) {
                    Some(r) => r * v1,
                    None => cell.get(Param::V2).unwrap_or(0.0),
                };
                canonical_lattice(v1, v2, cell.get(Param::Phi).unwrap_or(0.0))
            }
        };
        let key = (1, [round_key(spec.v1), round_key(spec.v2), round_key(spec.phi)]);
        let grids = &self.cfg.grids;
        self.memo.get_or_compute(key, || {
            with_resonances(lattice::extract_params_with(&spec, grids)?)
        })
    }

    fn force(cell: &CellInput) -> Result<f64> {
        let f = match (cell.get(Param::F), cell.get(Param::InvF)) {
            (Some(f), None) => f,
            (None, Some(x)) => 1.0 / x,
            _ => return Err(Error::Config("exactly one of f, inv_f required".into())),
        };
        if f > 0.0 && f.is_finite() {
            Ok(f)
        } else {
            Err(Error::Domain(format!("force F = {f} must be positive")))
        }
    }

    fn analytic(&self, cell: &CellInput) -> Result<f64> {
        let data = self.band_data(cell)?;
        spectral::mean_occupation_total(&data.bands, Self::force(cell)?, &data.resonances, self.cfg.lorentzian)
    }

    fn numeric(&self, cell: &CellInput) -> Result<f64> {
        let data = self.band_data(cell)?;
        let p = DrivenTwoBandParameters::new(data.bands, Self::force(cell)?, 0.0)?;
        let n = &self.cfg.numeric;
        let evo = EvolutionConfig {
            horizon: n.horizon,
            tol: n.tol,
            ..EvolutionConfig::default().with_uniform_k(n.k_points)
        };
        dynamics::averaged_occupation(&p, &evo)
    }
}

/// Results of one sweep, one map per engine.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepOutput {
    pub analytic: Option<HeatmapResult>,
    pub numeric: Option<HeatmapResult>,
}

impl SweepOutput {
    pub fn results(&self) -> impl Iterator<Item = &HeatmapResult> {
        self.analytic.iter().chain(self.numeric.iter())
    }
}

fn fill(
    ctx: &SweepContext<'_>,
    x: Axis,
    y: Axis,
    xp: Param,
    yp: Option<Param>,
    engine: Engine,
) -> HeatmapResult {
    let cells: Vec<CellInput> = y
        .values
        .iter()
        .enumerate()
        .flat_map(|(iy, &yv)| {
            x.values.iter().enumerate().map(move |(ix, &xv)| {
                let mut values: Vec<(Param, f64)> = ctx.cfg.fixed.clone();
                values.push((xp, xv));
                if let Some(yp) = yp {
                    values.push((yp, yv));
                }
                CellInput { ix, iy, values }
            })
        })
        .collect();
    let outcomes = par::map(&cells, |cell| match engine {
        Engine::Numeric => ctx.numeric(cell),
        _ => ctx.analytic(cell),
    });
    let mut values = Vec::with_capacity(cells.len());
    let mut diagnostics = Vec::new();
    for (cell, outcome) in cells.iter().zip(outcomes) {
        match outcome {
            Ok(v) if v.is_finite() && (0.0..=1.0).contains(&v) => values.push(v),
            Ok(v) => {
                values.push(f64::NAN);
                diagnostics.push(CellFailure { ix: cell.ix, iy: cell.iy, message: format!("value {v} outside [0, 1]") });
            }
            Err(e) => {
                values.push(f64::NAN);
                diagnostics.push(CellFailure { ix: cell.ix, iy: cell.iy, message: e.to_string() });
            }
        }
    }
    HeatmapResult { x, y, values, metadata: metadata(ctx.cfg, engine), diagnostics }
}

fn metadata(cfg: &SweepConfig, engine: Engine) -> Vec<(String, String)> {
    let mut m = vec![
        ("name".to_string(), cfg.name.clone()),
        ("mode".to_string(), cfg.mode.to_string()),
        ("engine".to_string(), engine.to_string()),
        ("version".to_string(), env!("CARGO_PKG_VERSION").to_string()),
    ];
    for (p, v) in &cfg.fixed {
        m.push((format!("fixed.{}", p.name()), format!("{v}")));
    }
    for (s, k, v) in cfg.source.entries() {
        m.push((format!("config.{s}.{k}"), v.to_string()));
    }
    m
}

/// Runs the sweep on the current worker pool (see [`par::with_workers`]).
pub fn run_sweep_with(cfg: &SweepConfig, memo: &BandMemo) -> Result<SweepOutput> {
    cfg.validate()?;
    let ctx = SweepContext::new(cfg, memo);
    let yp = cfg.y.as_ref().map(|a| a.param);
    let y = match &cfg.y {
        Some(a) => Axis { name: a.param.name().into(), values: a.base_values() },
        None => Axis { name: "none".into(), values: vec![0.0] },
    };
    let x_name = cfg.x.param.name().to_string();

    let analytic = if cfg.engine != Engine::Numeric {
        let centers = if cfg.x.refine.is_some() && cfg.mode == Mode::ForceCurve {
            let probe = CellInput { ix: 0, iy: 0, values: cfg.fixed.clone() };
            let data = ctx.band_data(&probe)?;
            data.resonances
                .iter()
                .map(|r| if cfg.x.param == Param::InvF { 1.0 / r.f_m } else { r.f_m })
                .collect()
        } else {
            Vec::new()
        };
        let x = Axis { name: x_name.clone(), values: cfg.x.refined_values(&centers) };
        Some(fill(&ctx, x, y.clone(), cfg.x.param, yp, Engine::Analytic))
    } else {
        None
    };

    let numeric = if cfg.engine != Engine::Analytic {
        let values = match cfg.numeric.points {
            Some(n) => AxisSpec { points: n, refine: None, ..cfg.x.clone() }.base_values(),
            None => cfg.x.base_values(),
        };
        Some(fill(&ctx, Axis { name: x_name, values }, y, cfg.x.param, yp, Engine::Numeric))
    } else {
        None
    };
    Ok(SweepOutput { analytic, numeric })
}

/// Runs the sweep on `workers` threads (0 = library default).
pub fn run_sweep(cfg: &SweepConfig, workers: usize) -> Result<SweepOutput> {
    let memo = BandMemo::default();
    par::with_workers(workers, || run_sweep_with(cfg, &memo))?
}

#[cfg(test)]
mod tests {
    use super::*;

    const LZS: &str = "[sweep]\nmode = lzs-grid\n[x]\nname = delta\nmin = 0.5\nmax = 4.5\npoints = 9\n\
                       [y]\nname = j\nmin = -2\nmax = 0\npoints = 3\n[fixed]\nc0 = -0.15\nf = 1\n";

    #[test]
    fn parses_and_runs_small_grid() {
        let cfg = SweepConfig::parse(LZS).unwrap();
        assert_eq!(cfg.mode, Mode::LzsGrid);
        let out = run_sweep(&cfg, 2).unwrap();
        let r = out.analytic.unwrap();
        assert!(out.numeric.is_none());
        assert_eq!(r.values.len(), 27);
        assert_eq!(r.missing(), 0);
        assert!(r.values.iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(r.meta("mode"), Some("lzs-grid"));
    }

    #[test]
    fn decoupled_sweep_is_zero() {
        let text = LZS.replace("c0 = -0.15", "c0 = 0");
        let r = run_sweep(&SweepConfig::parse(&text).unwrap(), 1).unwrap().analytic.unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_inconsistent_configs() {
        let cases = [
            LZS.replace("name = j", "name = c0"),
            LZS.replace("points = 3", "points = 1"),
            LZS.replace("min = 0.5", "min = 5"),
            LZS.replace("f = 1", "v0 = 4"),
            LZS.replace("mode = lzs-grid", "mode = force-curve"),
            LZS.replace("mode = lzs-grid", "mode = spiral"),
            LZS.replace("[fixed]", "[fixed]\nbogus = 1"),
            LZS.replace("[fixed]", "[extra]\na = 1\n[fixed]"),
            LZS.replace("c0 = -0.15\n", ""),
        ];
        for text in cases {
            assert!(matches!(SweepConfig::parse(&text), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn axis_grids() {
        let a = AxisSpec::new(Param::V0, 2.0, 10.0, 201);
        assert_eq!(a.base_values()[50], 4.0);
        let fine = AxisSpec::new(Param::InvF, 0.3, 1.1, 401).base_values();
        let coarse = AxisSpec::new(Param::InvF, 0.3, 1.1, 201).base_values();
        for (i, c) in coarse.iter().enumerate() {
            assert_eq!(fine[2 * i].to_bits(), c.to_bits());
        }
        let open = AxisSpec { endpoint: false, ..AxisSpec::new(Param::Phi, 0.0, 1.0, 4) };
        assert_eq!(open.base_values(), vec![0.0, 0.25, 0.5, 0.75]);
        let r = AxisSpec {
            refine: Some(Refinement { half_width: 0.02, factor: 5 }),
            ..AxisSpec::new(Param::InvF, 0.0, 1.0, 11)
        };
        let v = r.refined_values(&[0.5]);
        assert_eq!(v.len(), 11 + 2 * 4);
        assert!(v.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mirror_folding() {
        let a = canonical_lattice(2.0, 0.7, 0.4);
        let b = canonical_lattice(2.0, 0.7, std::f64::consts::TAU - 0.4);
        assert_eq!(round_key(a.phi), round_key(b.phi));
        assert_eq!(canonical_lattice(2.0, 0.0, 1.3), LatticeSpec::single(2.0));
    }

    #[test]
    fn memo_computes_once() {
        let memo = BandMemo::default();
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let key = (0, [1, 2, 3]);
        for _ in 0..3 {
            memo.get_or_compute(key, || {
                calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                Ok(BandData { bands: BandParameters::new(1.0, 0.0, 0.0, 0.0), resonances: vec![] })
            })
            .unwrap();
        }
        assert_eq!(calls.into_inner(), 1);
        assert_eq!(memo.len(), 1);
    }
}
