//! Exact time evolution of the driven two-band system.
//!
//! Each quasimomentum evolves independently under either the k-space
//! Hamiltonian ([`Gauge::Original`]) or its purely off-diagonal form after
//! removing the diagonal phases ([`Gauge::Interaction`]),
//! `i d/dt (ã, b̃) = C₀F [[0, e^{−iφ}], [e^{iφ}, 0]] (ã, b̃)`. Both give the
//! same `|b|²`. Every trajectory starts in the lower band.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::{hamiltonian_k, phase_phi, DrivenTwoBandParameters};
use crate::numerics::{integrate_ode, ComplexVector2, Matrix2, OdeOptions, Trajectory};
use crate::{par, spectral};

/// Default averaging horizon in Bloch periods.
pub const DEFAULT_HORIZON_PERIODS: f64 = 500.0;
/// The automatic horizon covers at least this many slow oscillations...
pub const SLOW_PERIODS: f64 = 20.0;
/// ...but never more than this many Bloch periods.
pub const MAX_HORIZON_PERIODS: f64 = 20_000.0;
/// Minimum span of a long-time average, in Bloch periods.
pub const MIN_AVERAGE_PERIODS: f64 = 50.0;
/// Default samples per Bloch period.
pub const SAMPLES_PER_PERIOD: f64 = 32.0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Gauge {
    /// The k-space Hamiltonian with band energies on the diagonal.
    Original,
    /// Off-diagonal form with the interband phase `φ(k,t)`.
    #[default]
    Interaction,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Horizon {
    Time(f64),
    BlochPeriods(f64),
    /// [`DEFAULT_HORIZON_PERIODS`], extended to [`SLOW_PERIODS`] periods of
    /// the slowest expected oscillation and capped at [`MAX_HORIZON_PERIODS`].
    Auto,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvolutionConfig {
    /// Quasimomenta to evolve; the `k` of the parameters is ignored.
    pub k_grid: Vec<f64>,
    pub horizon: Horizon,
    pub tol: f64,
    /// Output interval; `None` means `T_B/32`.
    pub sample_dt: Option<f64>,
    pub gauge: Gauge,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            k_grid: vec![0.0],
            horizon: Horizon::Auto,
            tol: 1e-9,
            sample_dt: None,
            gauge: Gauge::default(),
        }
    }
}

impl EvolutionConfig {
    pub fn periods(t: f64) -> Self {
        Self { horizon: Horizon::BlochPeriods(t), ..Self::default() }
    }

    pub fn with_uniform_k(mut self, n: usize) -> Self {
        self.k_grid = uniform_k_grid(n);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-3) {
            return Err(Error::Domain(format!("tolerance {} outside (0, 1e-3]", self.tol)));
        }
        if self.k_grid.is_empty() || self.k_grid.iter().any(|k| !k.is_finite()) {
            return Err(Error::Domain("k grid must be non-empty and finite".into()));
        }
        match self.horizon {
            Horizon::Time(t) | Horizon::BlochPeriods(t) if !(t > 0.0 && t.is_finite()) => {
                Err(Error::Domain(format!("final time {t} must be positive")))
            }
            _ => match self.sample_dt {
                Some(dt) if !(dt > 0.0 && dt.is_finite()) => {
                    Err(Error::Domain(format!("sampling interval {dt} must be positive")))
                }
                _ => Ok(()),
            },
        }
    }
}

/// `k_j = 2πj/n`, `j = 0..n`.
pub fn uniform_k_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| TAU * j as f64 / n as f64).collect()
}

/// Final time of an evolution.
pub fn horizon(p: &DrivenTwoBandParameters, cfg: &EvolutionConfig) -> Result<f64> {
    let tb = p.bloch_period();
    Ok(match cfg.horizon {
        Horizon::Time(t) => t,
        Horizon::BlochPeriods(n) => n * tb,
        Horizon::Auto => {
            let slow = SLOW_PERIODS * spectral::slowest_period(&p.bands, p.f)?;
            slow.clamp(DEFAULT_HORIZON_PERIODS * tb, MAX_HORIZON_PERIODS * tb)
        }
    })
}

/// `G(t)` of `y' = G(t)·y` at the quasimomentum of `p`.
pub fn generator(p: DrivenTwoBandParameters, gauge: Gauge) -> impl Fn(f64) -> Matrix2 {
    let minus_i = C64::new(0.0, -1.0);
    let c = p.coupling();
    move |t| match gauge {
        Gauge::Original => hamiltonian_k(&p, t).scale(minus_i),
        Gauge::Interaction => {
            let e = C64::from_polar(c, phase_phi(&p, t));
            Matrix2::new(C64::new(0.0, 0.0), e.conj() * minus_i, e * minus_i, C64::new(0.0, 0.0))
        }
    }
}

#[derive(Clone, Debug)]
pub struct KTrajectory {
    pub k: f64,
    pub trajectory: Trajectory,
}

pub fn evolve_k(p: &DrivenTwoBandParameters, cfg: &EvolutionConfig) -> Result<Vec<KTrajectory>> {
    cfg.validate()?;
    let t_end = horizon(p, cfg)?;
    let opts = OdeOptions::with_tol(cfg.tol)
        .sampled(cfg.sample_dt.unwrap_or(p.bloch_period() / SAMPLES_PER_PERIOD));
    par::try_map(&cfg.k_grid, |&k| {
        let pk = p.with_k(k);
        integrate_ode(generator(pk, cfg.gauge), ComplexVector2::lower(), 0.0, t_end, &opts)
            .map(|trajectory| KTrajectory { k, trajectory })
            .map_err(|e| Error::Evolution { k, source: Box::new(e) })
    })
}

/// Upper-band occupation `P_b(t) = (1/N_k) Σ_k |b(k,t)|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct OccupationSeries {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub bloch_period: f64,
}

pub fn occupation_series(
    p: &DrivenTwoBandParameters,
    cfg: &EvolutionConfig,
) -> Result<OccupationSeries> {
    let runs = evolve_k(p, cfg)?;
    let times = runs[0].trajectory.times.clone();
    let mut values = vec![0.0; times.len()];
    for run in &runs {
        if run.trajectory.times.len() != times.len() {
            return Err(Error::ContractViolation("k trajectories sampled on different grids".into()));
        }
        for (v, s) in values.iter_mut().zip(&run.trajectory.states) {
            *v += s.upper_occupation();
        }
    }
    let n = runs.len() as f64;
    for v in &mut values {
        *v = (*v / n).clamp(0.0, 1.0);
    }
    Ok(OccupationSeries { times, values, bloch_period: p.bloch_period() })
}

/// Mean of the samples with `t ≥ t_min`.
pub fn long_time_average(series: &OccupationSeries, t_min: f64) -> Result<f64> {
    let t_end = series.times.last().copied().unwrap_or(f64::NEG_INFINITY);
    let needed = MIN_AVERAGE_PERIODS * series.bloch_period;
    if !(t_end - t_min >= needed * (1.0 - 1e-12)) {
        return Err(Error::Window(format!(
            "averaging window [{t_min}, {t_end}] shorter than {MIN_AVERAGE_PERIODS} Bloch periods"
        )));
    }
    let (sum, count) = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= t_min)
        .fold((0.0, 0usize), |(s, c), (_, v)| (s + v, c + 1));
    Ok(sum / count as f64)
}

/// Long-time average of `P_b` over the configured horizon, from `t = 0`.
pub fn averaged_occupation(p: &DrivenTwoBandParameters, cfg: &EvolutionConfig) -> Result<f64> {
    long_time_average(&occupation_series(p, cfg)?, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::BandParameters;

    fn fig2(f: f64) -> DrivenTwoBandParameters {
        DrivenTwoBandParameters::new(BandParameters::from_difference(4.39, -0.682, -0.14), f, 0.0)
            .unwrap()
    }

    #[test]
    fn decoupled_bands_stay_empty() {
        let p = DrivenTwoBandParameters::new(BandParameters::new(4.0, 0.3, -0.3, 0.0), 1.3, 0.0)
            .unwrap();
        for gauge in [Gauge::Original, Gauge::Interaction] {
            let cfg = EvolutionConfig { gauge, ..EvolutionConfig::periods(5.0).with_uniform_k(3) };
            let s = occupation_series(&p, &cfg).unwrap();
            assert!(s.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn constant_coupling_rabi() {
        let c0 = 0.2;
        let f = 1.5;
        let p = DrivenTwoBandParameters::new(BandParameters::new(0.0, 0.0, 0.0, c0), f, 0.0).unwrap();
        let s = occupation_series(&p, &EvolutionConfig::periods(10.0)).unwrap();
        assert_eq!(s.values[0], 0.0);
        for (t, v) in s.times.iter().zip(&s.values) {
            assert!((v - (c0 * f * t).sin().powi(2)).abs() < 1e-8, "t={t}");
        }
        assert_eq!(s.times.len(), 321);
    }

    #[test]
    fn gauges_agree() {
        let tol = 1e-9;
        let p = fig2(2.2);
        let run = |gauge| {
            let cfg = EvolutionConfig { gauge, tol, ..EvolutionConfig::periods(40.0) };
            occupation_series(&p, &cfg).unwrap()
        };
        let (a, b) = (run(Gauge::Original), run(Gauge::Interaction));
        assert_eq!(a.times, b.times);
        let worst = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(worst <= 10.0 * tol, "{worst:e}");
    }

    #[test]
    fn norm_conserved() {
        let p = fig2(1.3);
        for gauge in [Gauge::Original, Gauge::Interaction] {
            let cfg = EvolutionConfig { gauge, ..EvolutionConfig::periods(100.0) };
            let runs = evolve_k(&p, &cfg).unwrap();
            let drift = runs[0]
                .trajectory
                .states
                .iter()
                .map(|s| (s.norm_sqr() - 1.0).abs())
                .fold(0.0, f64::max);
            assert!(drift <= 1e-7, "{gauge:?}: {drift:e}");
        }
    }

    #[test]
    fn k_shift_covariance() {
        let p = fig2(1.7);
        let k = 1.1;
        let cfg = EvolutionConfig {
            k_grid: vec![k],
            gauge: Gauge::Original,
            ..EvolutionConfig::periods(20.0)
        };
        let shifted = &evolve_k(&p, &cfg).unwrap()[0].trajectory;
        let t0 = k / p.f;
        let opts = OdeOptions::with_tol(cfg.tol).sampled(p.bloch_period() / SAMPLES_PER_PERIOD);
        let base = integrate_ode(
            generator(p, Gauge::Original),
            ComplexVector2::lower(),
            t0,
            t0 + 20.0 * p.bloch_period(),
            &opts,
        )
        .unwrap();
        for (x, y) in shifted.states.iter().zip(&base.states) {
            assert!((*x - *y).max_abs() < 1e-6);
        }
    }

    #[test]
    fn off_resonance_bounded_by_two_level_amplitude() {
        let p = fig2(1.5);
        let s = occupation_series(&p, &EvolutionConfig::periods(100.0)).unwrap();
        let v0 = spectral::ws_coupling(&p.bands, p.f, 0).unwrap().v_m;
        let bound = 4.0 * v0 * v0 / (4.39f64.powi(2) + 4.0 * v0 * v0);
        let max = s.values.iter().cloned().fold(0.0, f64::max);
        assert!(max <= bound + 0.05, "{max} vs {bound}");
    }

    #[test]
    fn resonance_gives_full_oscillation() {
        let f = spectral::resonance_position(&fig2(1.0).bands, 2).unwrap().f_m;
        let p = fig2(f);
        let s = occupation_series(&p, &EvolutionConfig::periods(400.0)).unwrap();
        let max = s.values.iter().cloned().fold(0.0, f64::max);
        assert!(max > 0.9, "{max}");
    }

    #[test]
    fn averages() {
        let tb = 1.0;
        let times: Vec<f64> = (0..=64_000).map(|i| i as f64 / 64.0).collect();
        let constant = OccupationSeries {
            values: vec![0.3; times.len()],
            times: times.clone(),
            bloch_period: tb,
        };
        assert!((long_time_average(&constant, 0.0).unwrap() - 0.3).abs() < 1e-12);
        let rabi = OccupationSeries {
            values: times.iter().map(|t| (1.3 * t).sin().powi(2)).collect(),
            times,
            bloch_period: tb,
        };
        assert!((long_time_average(&rabi, 0.0).unwrap() - 0.5).abs() < 1e-3);
        assert!(matches!(long_time_average(&rabi, 960.0), Err(Error::Window(_))));
    }

    #[test]
    fn auto_horizon_rules() {
        let off = fig2(1.9);
        let cfg = EvolutionConfig::default();
        assert_eq!(horizon(&off, &cfg).unwrap(), 500.0 * off.bloch_period());
        let f = spectral::resonance_position(&off.bands, 2).unwrap().f_m;
        let on = fig2(f);
        let h = horizon(&on, &cfg).unwrap() / on.bloch_period();
        assert!(h > 500.0 && h <= MAX_HORIZON_PERIODS);
        let exact = fig2(4.39 / 4.0);
        let _ = horizon(&exact, &cfg).unwrap();
    }

    #[test]
    fn rejects_bad_config() {
        let p = fig2(1.0);
        let bad = [
            EvolutionConfig { tol: 0.0, ..EvolutionConfig::default() },
            EvolutionConfig { tol: 1e-2, ..EvolutionConfig::default() },
            EvolutionConfig { k_grid: vec![], ..EvolutionConfig::default() },
            EvolutionConfig::periods(-1.0),
            EvolutionConfig { sample_dt: Some(0.0), ..EvolutionConfig::default() },
        ];
        for cfg in bad {
            assert!(evolve_k(&p, &cfg).is_err());
        }
    }
}
