use stuckelberg::dynamics::{self, EvolutionConfig, Horizon, OccupationSeries};
use stuckelberg::lattice::BandParameters;
use stuckelberg::magnus::{self, MagnusConfig};
use stuckelberg::model::DrivenTwoBandParameters;
use stuckelberg::spectral;

fn bands() -> BandParameters {
    BandParameters::from_difference(4.39, -0.682, -0.14)
}

fn params(f: f64) -> DrivenTwoBandParameters {
    DrivenTwoBandParameters::new(bands(), f, 0.0).unwrap()
}

fn ode(p: &DrivenTwoBandParameters, t_end: f64, dt: f64) -> OccupationSeries {
    let cfg = EvolutionConfig {
        horizon: Horizon::Time(t_end),
        sample_dt: Some(dt),
        tol: 1e-10,
        ..EvolutionConfig::default()
    };
    dynamics::occupation_series(p, &cfg).unwrap()
}

#[test]
fn first_order_tracks_ode_at_short_times_near_resonance() {
    let p = params(2.2207);
    let s = ode(&p, 2.0 * p.bloch_period(), p.bloch_period() / 100.0);
    let cfg = MagnusConfig::default();
    for (&t, &v) in s.times.iter().zip(&s.values) {
        let d = (magnus::pb_first_order(&p, t, &cfg).unwrap() - v).abs();
        assert!(d <= 0.05, "t = {t}: {d}");
    }
}

#[test]
fn second_order_not_worse_off_resonance() {
    let p = params(1.5);
    let s = ode(&p, 5.0 * p.bloch_period(), p.bloch_period() / 64.0);
    let cfg = MagnusConfig::default();
    let (mut e1, mut e2) = (0.0, 0.0);
    for (&t, &v) in s.times.iter().zip(&s.values) {
        e1 += (magnus::pb_first_order(&p, t, &cfg).unwrap() - v).abs();
        e2 += (magnus::pb_second_order(&p, t, &cfg).unwrap() - v).abs();
    }
    assert!(e2 <= e1, "second {e2} vs first {e1}");
}

/// Times at which the Bloch-period average of `P_b` crosses ½.
fn half_crossings(s: &OccupationSeries, per_period: usize) -> Vec<f64> {
    let smooth: Vec<f64> = s
        .values
        .windows(per_period)
        .map(|w| w.iter().sum::<f64>() / per_period as f64)
        .collect();
    let offset = 0.5 * (s.times[per_period - 1] - s.times[0]);
    smooth
        .windows(2)
        .enumerate()
        .filter(|(_, w)| (w[0] - 0.5) * (w[1] - 0.5) < 0.0)
        .map(|(i, w)| {
            let frac = (0.5 - w[0]) / (w[1] - w[0]);
            s.times[i] + frac * (s.times[i + 1] - s.times[i]) + offset
        })
        .collect()
}

#[test]
fn envelope_period_matches_slow_oscillation() {
    let f2 = spectral::resonance_position(&bands(), 2).unwrap().f_m;
    let p = params(f2);
    let period = magnus::resonant_period(&p, 2).unwrap();
    let per = 64;
    let s = ode(&p, 3.2 * period, p.bloch_period() / per as f64);
    assert!(s.values.iter().cloned().fold(0.0, f64::max) > 0.9);
    let c = half_crossings(&s, per);
    assert!(c.len() >= 5, "{c:?}");
    // consecutive ½-crossings are half a period apart
    let measured = 2.0 * (c[c.len() - 1] - c[0]) / (c.len() - 1) as f64;
    let rel = (measured - period).abs() / period;
    assert!(rel <= 0.05, "measured {measured}, predicted {period}, rel {rel}");
}

#[test]
fn envelope_bounds_resonant_dynamics() {
    let f2 = spectral::resonance_position(&bands(), 2).unwrap().f_m;
    let p = params(f2);
    let period = magnus::resonant_period(&p, 2).unwrap();
    let s = ode(&p, period, period / 400.0);
    let mean_env: f64 = s.times.iter().map(|&t| magnus::resonant_envelope(&p, 2, t).unwrap()).sum::<f64>()
        / s.times.len() as f64;
    let mean_ode: f64 = s.values.iter().sum::<f64>() / s.values.len() as f64;
    assert!((mean_env - 0.5).abs() < 0.01);
    assert!((mean_ode - 0.5).abs() < 0.05, "{mean_ode}");
}
