//! Command-line front end: band parameters, single-force dynamics, Magnus
//! approximations, resonance positions, configurable sweeps and figure
//! presets.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stuckelberg::dynamics::{self, EvolutionConfig, Gauge, Horizon};
use stuckelberg::lattice::{self, BandParameters, LatticeGrids, LatticeSpec};
use stuckelberg::magnus::{self, MagnusConfig};
use stuckelberg::model::{map_to_lzs, DrivenTwoBandParameters};
use stuckelberg::spectral;
use stuckelberg::sweep::config::{parse_f64, ConfigFile};
use stuckelberg::sweep::figures::{run_figure, write_outputs, Preset};
use stuckelberg::sweep::output::write_csv;
use stuckelberg::sweep::{
    self, AxisSpec, Axis, Engine, HeatmapResult, Mode, Param, Scale, SweepConfig,
};
use stuckelberg::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "stuckelberg", version, about = "Interband Stueckelberg interferometry in tilted lattices")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Configuration file (key = value lines with [section] headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[arg(long, global = true, value_enum)]
    engine: Option<EngineArg>,
    #[arg(long, global = true, value_enum)]
    scale: Option<ScaleArg>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EngineArg {
    Analytic,
    Numeric,
    Both,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Analytic => Engine::Analytic,
            EngineArg::Numeric => Engine::Numeric,
            EngineArg::Both => Engine::Both,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScaleArg {
    Linear,
    Log,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Linear => Scale::Linear,
            ScaleArg::Log => Scale::Log,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GaugeArg {
    Original,
    Interaction,
}

/// Band parameters, given directly or through a lattice. Values missing
/// here are taken from the `[fixed]` section of `--config`.
#[derive(Args, Debug, Default)]
struct BandArgs {
    #[arg(long, allow_negative_numbers = true)]
    delta: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    j: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    c0: Option<f64>,
    /// Single lattice depth.
    #[arg(long, allow_negative_numbers = true)]
    v0: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    v1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    v2: Option<f64>,
    /// Superlattice phase (accepts `pi`).
    #[arg(long, allow_negative_numbers = true, value_parser = parse_phase)]
    phi: Option<f64>,
    /// Plane-wave cutoff of the band calculation.
    #[arg(long)]
    cutoff: Option<usize>,
}

fn parse_phase(s: &str) -> std::result::Result<f64, String> {
    parse_f64(s)
}

#[derive(Args, Debug)]
struct ForceArgs {
    /// Force F (= Bloch frequency).
    #[arg(long, allow_negative_numbers = true)]
    force: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Band parameters Δ, J_a, J_b, C₀ from Wannier functions (or as given).
    Bands {
        #[command(flatten)]
        bands: BandArgs,
        #[command(flatten)]
        force: ForceArgs,
    },
    /// Exact time evolution and long-time average at one force.
    Evolve {
        #[command(flatten)]
        bands: BandArgs,
        #[command(flatten)]
        force: ForceArgs,
        /// Horizon in Bloch periods (default: automatic).
        #[arg(long)]
        periods: Option<f64>,
        #[arg(long, default_value_t = 1)]
        k_points: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = GaugeArg::Interaction)]
        gauge: GaugeArg,
    },
    /// First- and second-order Magnus occupations, optionally against the ODE.
    Magnus {
        #[command(flatten)]
        bands: BandArgs,
        #[command(flatten)]
        force: ForceArgs,
        /// Time span in Bloch periods.
        #[arg(long, default_value_t = 2.0)]
        periods: f64,
        #[arg(long, default_value_t = 201)]
        samples: usize,
    },
    /// Stark-shifted resonance forces; the numeric engine also scans the
    /// dynamics average around each requested order.
    Resonance {
        #[command(flatten)]
        bands: BandArgs,
        #[arg(long, default_value_t = spectral::DEFAULT_M_MAX)]
        m_max: u32,
        /// Orders to scan numerically (default: all).
        #[arg(long)]
        scan: Vec<u32>,
        /// Half-width of the scan in 1/F.
        #[arg(long, default_value_t = 0.002)]
        scan_width: f64,
        #[arg(long, default_value_t = 21)]
        scan_points: usize,
    },
    /// Run the sweep described by --config.
    Sweep,
    /// Regenerate a figure preset (fig1, fig2, fig3a, fig3b, fig4 or all).
    Figure { preset: String },
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Io { .. } => 2,
            _ => 3,
        };
        Failure { code, message: e.to_string() }
    }
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure { code: 2, message: msg.into() }
}

fn load_config(common: &Common) -> Result<Option<ConfigFile>> {
    common.config.as_deref().map(ConfigFile::load).transpose()
}

fn fixed_value(cfg: Option<&ConfigFile>, key: &str) -> Result<Option<f64>> {
    match cfg {
        Some(c) => c.get_f64("fixed", key),
        None => Ok(None),
    }
}

fn resolve_bands(args: &BandArgs, cfg: Option<&ConfigFile>) -> Result<BandParameters> {
    let pick = |flag: Option<f64>, key: &str| -> Result<Option<f64>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => fixed_value(cfg, key),
        }
    };
    let (delta, j, c0) = (pick(args.delta, "delta")?, pick(args.j, "j")?, pick(args.c0, "c0")?);
    if let (Some(d), Some(j), Some(c0)) = (delta, j, c0) {
        return Ok(BandParameters::from_difference(d, j, c0));
    }
    if delta.is_some() || j.is_some() || c0.is_some() {
        return Err(Error::Config("give all of --delta, --j, --c0 or a lattice".into()));
    }
    let mut grids = LatticeGrids::default();
    if let Some(c) = cfg.map(|c| c.get_usize("lattice", "cutoff")).transpose()?.flatten() {
        grids.cutoff = c;
    }
    if let Some(c) = args.cutoff {
        grids.cutoff = c;
    }
    grids.validate().map_err(|e| Error::Config(e.to_string()))?;
    let spec = match pick(args.v0, "v0")? {
        Some(v0) => LatticeSpec::single(v0),
        None => {
            let v1 = pick(args.v1, "v1")?
                .ok_or_else(|| Error::Config("band parameters required: --delta/--j/--c0, --v0 or --v1/--v2".into()))?;
            let v2 = match pick(args.v2, "v2")? {
                Some(v2) => v2,
                None => fixed_value(cfg, "v2_over_v1")?.map(|r| r * v1).unwrap_or(0.0),
            };
            sweep::canonical_lattice(v1, v2, pick(args.phi, "phi")?.unwrap_or(0.0))
        }
    };
    spec.validate().map_err(|e| Error::Config(e.to_string()))?;
    lattice::extract_params_with(&spec, &grids)
}

fn resolve_force(args: &ForceArgs, cfg: Option<&ConfigFile>) -> Result<Option<f64>> {
    let f = match args.force {
        Some(f) => Some(f),
        None => match fixed_value(cfg, "f")? {
            Some(f) => Some(f),
            None => fixed_value(cfg, "inv_f")?.map(|x| 1.0 / x),
        },
    };
    match f {
        Some(f) if !(f > 0.0 && f.is_finite()) => Err(Error::Config(format!("force {f} must be positive"))),
        f => Ok(f),
    }
}

fn require_force(args: &ForceArgs, cfg: Option<&ConfigFile>) -> Result<f64> {
    resolve_force(args, cfg)?.ok_or_else(|| Error::Config("--force is required".into()))
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::Io { path: path.clone(), source: e })?;
    Ok(path)
}

fn write_series(dir: &Path, name: &str, r: &HeatmapResult) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io { path: dir.to_path_buf(), source: e })?;
    let path = dir.join(name);
    write_csv(r, &path)?;
    Ok(path)
}

fn band_lines(b: &BandParameters, f: Option<f64>) -> Result<String> {
    let mut s = String::new();
    let _ = writeln!(s, "delta={:.12e}", b.delta);
    let _ = writeln!(s, "ja={:.12e}", b.ja);
    let _ = writeln!(s, "jb={:.12e}", b.jb);
    let _ = writeln!(s, "j={:.12e}", b.j());
    let _ = writeln!(s, "c0={:.12e}", b.c0);
    if let Some(f) = f {
        let m = map_to_lzs(b, f)?;
        let _ = writeln!(s, "lzs.eps0={:.12e}", m.lzs.eps0);
        let _ = writeln!(s, "lzs.a={:.12e}", m.lzs.a);
        let _ = writeln!(s, "lzs.omega={:.12e}", m.lzs.omega);
        let _ = writeln!(s, "lzs.delta_t={:.12e}", m.lzs.delta_t);
        let _ = writeln!(s, "lzs.scalar_shift={:.12e}", m.scalar_shift);
    }
    Ok(s)
}

fn time_axis(name: &str, times: Vec<f64>) -> Axis {
    Axis { name: name.into(), values: times }
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let common = &cli.common;
    let cfg_file = load_config(common)?;
    let cfg = cfg_file.as_ref();
    match &cli.command {
        Command::Bands { bands, force } => {
            let b = resolve_bands(bands, cfg)?;
            let text = band_lines(&b, resolve_force(force, cfg)?)?;
            print!("{text}");
            if let Some(dir) = &common.out {
                write_text(dir, "bands.txt", &text)?;
            }
        }
        Command::Evolve { bands, force, periods, k_points, tol, gauge } => {
            let b = resolve_bands(bands, cfg)?;
            let f = require_force(force, cfg)?;
            let p = DrivenTwoBandParameters::new(b, f, 0.0)?;
            let evo = EvolutionConfig {
                horizon: periods.map_or(Horizon::Auto, Horizon::BlochPeriods),
                tol: *tol,
                gauge: match gauge {
                    GaugeArg::Original => Gauge::Original,
                    GaugeArg::Interaction => Gauge::Interaction,
                },
                ..EvolutionConfig::default().with_uniform_k(*k_points)
            };
            evo.validate().map_err(|e| config_error(e.to_string()))?;
            let series = dynamics::occupation_series(&p, &evo)?;
            let avg = dynamics::long_time_average(&series, 0.0)?;
            let res = spectral::resonances(&b, spectral::DEFAULT_M_MAX)?;
            let analytic =
                spectral::mean_occupation_total(&b, f, &res, spectral::LorentzianCoupling::AtResonance)?;
            println!("force={f}");
            println!("horizon={:.12e}", series.times.last().copied().unwrap_or(0.0));
            println!("average={avg:.12e}");
            println!("analytic={analytic:.12e}");
            if let Some(dir) = &common.out {
                let r = HeatmapResult {
                    x: time_axis("t", series.times.clone()),
                    y: Axis { name: "none".into(), values: vec![0.0] },
                    values: series.values.clone(),
                    metadata: vec![
                        ("quantity".into(), "upper-band occupation".into()),
                        ("force".into(), format!("{f}")),
                        ("average".into(), format!("{avg:.12e}")),
                    ],
                    diagnostics: Vec::new(),
                };
                write_series(dir, "evolve.csv", &r)?;
            }
        }
        Command::Magnus { bands, force, periods, samples } => {
            let b = resolve_bands(bands, cfg)?;
            let f = require_force(force, cfg)?;
            if *samples < 2 || !(*periods > 0.0) {
                return Err(config_error("need --samples ≥ 2 and --periods > 0"));
            }
            let p = DrivenTwoBandParameters::new(b, f, 0.0)?;
            let t_end = periods * p.bloch_period();
            let times: Vec<f64> =
                (0..*samples).map(|i| t_end * (i as f64 / (*samples - 1) as f64)).collect();
            let engine: Engine = common.engine.map_or(Engine::Both, Into::into);
            let mc = MagnusConfig::default();
            let mut rows: Vec<(&str, Vec<f64>)> = Vec::new();
            if engine != Engine::Numeric {
                let first = times.iter().map(|&t| magnus::pb_first_order(&p, t, &mc)).collect::<Result<Vec<_>>>()?;
                let second = times.iter().map(|&t| magnus::pb_second_order(&p, t, &mc)).collect::<Result<Vec<_>>>()?;
                rows.push(("first_order", first));
                rows.push(("second_order", second));
            }
            if engine != Engine::Analytic {
                let evo = EvolutionConfig {
                    horizon: Horizon::Time(t_end),
                    sample_dt: Some(t_end / (*samples - 1) as f64),
                    ..EvolutionConfig::default()
                };
                let series = dynamics::occupation_series(&p, &evo)?;
                // sampled on the same uniform grid up to rounding of the last point
                let ode: Vec<f64> = (0..*samples).map(|i| series.values[i.min(series.values.len() - 1)]).collect();
                if let Some((_, first)) = rows.iter().find(|(n, _)| *n == "first_order") {
                    let err1: Vec<f64> = first.iter().zip(&ode).map(|(a, b)| (a - b).abs()).collect();
                    let err2: Vec<f64> = rows[1].1.iter().zip(&ode).map(|(a, b)| (a - b).abs()).collect();
                    let n = err1.len() as f64;
                    println!("max_error_first={:.6e}", err1.iter().cloned().fold(0.0, f64::max));
                    println!("mean_error_first={:.6e}", err1.iter().sum::<f64>() / n);
                    println!("mean_error_second={:.6e}", err2.iter().sum::<f64>() / n);
                }
                rows.push(("ode", ode));
            }
            for (name, v) in &rows {
                println!("{name}.final={:.12e}", v.last().copied().unwrap_or(f64::NAN));
            }
            if let Some(dir) = &common.out {
                let mut metadata = vec![("force".to_string(), format!("{f}"))];
                for (i, (name, _)) in rows.iter().enumerate() {
                    metadata.push((format!("series.{i}"), name.to_string()));
                }
                let r = HeatmapResult {
                    x: time_axis("t", times.clone()),
                    y: Axis { name: "series".into(), values: (0..rows.len()).map(|i| i as f64).collect() },
                    values: rows.iter().flat_map(|(_, v)| v.iter().copied()).collect(),
                    metadata,
                    diagnostics: Vec::new(),
                };
                write_series(dir, "magnus.csv", &r)?;
            }
        }
        Command::Resonance { bands, m_max, scan, scan_width, scan_points } => {
            let b = resolve_bands(bands, cfg)?;
            let res = spectral::resonances(&b, *m_max)?;
            let mut text = String::from("m,f_m,inv_f_m,f_m_unshifted,residual\n");
            for r in &res {
                let _ = writeln!(
                    text,
                    "{},{:.12e},{:.12e},{:.12e},{:.3e}",
                    r.m,
                    r.f_m,
                    1.0 / r.f_m,
                    r.f_m_uncorrected,
                    r.residual
                );
            }
            let engine: Engine = common.engine.map_or(Engine::Analytic, Into::into);
            if engine != Engine::Analytic {
                if *scan_points < 2 || !(*scan_width > 0.0) {
                    return Err(config_error("need --scan-points ≥ 2 and --scan-width > 0"));
                }
                text.push_str("m,numeric_peak_inv_f,inv_f_m,difference\n");
                for r in res.iter().filter(|r| scan.is_empty() || scan.contains(&r.m)) {
                    let center = 1.0 / r.f_m;
                    let sweep_cfg = SweepConfig {
                        name: format!("scan_m{}", r.m),
                        mode: Mode::ForceCurve,
                        engine: Engine::Numeric,
                        x: AxisSpec::new(Param::InvF, center - scan_width, center + scan_width, *scan_points),
                        y: None,
                        fixed: vec![(Param::Delta, b.delta), (Param::J, b.j()), (Param::C0, b.c0)],
                        m_max: *m_max,
                        lorentzian: Default::default(),
                        numeric: Default::default(),
                        grids: LatticeGrids::default(),
                        output: Default::default(),
                        source: ConfigFile::default(),
                    };
                    let out = sweep::run_sweep(&sweep_cfg, common.workers)?;
                    let curve = out.numeric.expect("numeric engine requested");
                    if curve.missing() > 0 {
                        return Err(Failure { code: 3, message: format!("scan m={}: {}", r.m, curve.diagnostics[0].message) });
                    }
                    let i = sweep::figures::argmax_in(&curve, f64::NEG_INFINITY, f64::INFINITY).unwrap_or(0);
                    let peak = curve.x.values[i];
                    let _ = writeln!(text, "{},{:.12e},{:.12e},{:.3e}", r.m, peak, center, peak - center);
                }
            }
            print!("{text}");
            if let Some(dir) = &common.out {
                write_text(dir, "resonances.csv", &text)?;
            }
        }
        Command::Sweep => {
            let file = cfg_file.as_ref().ok_or_else(|| config_error("sweep needs --config PATH"))?;
            let mut sweep_cfg = SweepConfig::from_config(file)?;
            if let Some(e) = common.engine {
                sweep_cfg.engine = e.into();
                sweep_cfg.source.set("sweep", "engine", sweep_cfg.engine.name());
            }
            let scale = common.scale.map_or(sweep_cfg.output.scale, Into::into);
            let out = sweep::run_sweep(&sweep_cfg, common.workers)?;
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let (files, report) = write_outputs(&sweep_cfg, &out, &dir, scale)?;
            print!("{report}");
            for f in files {
                println!("wrote {}", f.display());
            }
            let missing: usize = out.results().map(HeatmapResult::missing).sum();
            if missing > 0 {
                return Err(Failure { code: 3, message: format!("{missing} cells failed") });
            }
        }
        Command::Figure { preset } => {
            let presets: Vec<Preset> = if preset == "all" {
                Preset::ALL.to_vec()
            } else {
                vec![preset.parse()?]
            };
            let dir = common.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let mut missing = 0;
            for p in presets {
                let out = run_figure(p, &dir, common.workers, common.engine.map(Into::into), common.scale.map(Into::into))?;
                print!("{}", out.report);
                for f in &out.files {
                    println!("wrote {}", f.display());
                }
                missing += out.missing();
            }
            if missing > 0 {
                return Err(Failure { code: 3, message: format!("{missing} cells failed") });
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
