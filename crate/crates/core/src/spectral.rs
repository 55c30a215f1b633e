//! Wannier–Stark picture of the tilted two-band system: couplings
//! `V_m = C₀F·J_m(J/F)`, the degenerate-perturbation-theory two-level
//! model near the m-th resonance, Stark-shifted resonance forces and the
//! closed-form long-time averages of the upper-band occupation.

use roots::{find_root_brent, SimpleConvergency};

use crate::error::{Error, Result};
use crate::lattice::BandParameters;
use crate::numerics::{bessel_j, bessel_j_symmetric, HermitianMatrix};

pub const DEFAULT_M_MAX: u32 = 6;
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
const ROOT_BUDGET: usize = 200;
const DEGENERATE_DENOMINATOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WannierStarkCoupling {
    pub m: i64,
    pub v_m: f64,
}

/// Half-width of the Bessel sums: `⌈|J/F|⌉ + 20`.
pub fn bessel_terms(j: f64, f: f64) -> usize {
    (j / f).abs().ceil() as usize + 20
}

fn check_force(f: f64) -> Result<()> {
    if f > 0.0 && f.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("force F = {f} must be positive and finite")))
    }
}

pub fn ws_coupling(bands: &BandParameters, f: f64, m: i64) -> Result<WannierStarkCoupling> {
    check_force(f)?;
    Ok(WannierStarkCoupling { m, v_m: bands.c0 * f * bessel_j(m, bands.j() / f)? })
}

/// `[V_{-n}, …, V_n]` at force `f`.
fn couplings(bands: &BandParameters, f: f64, n: usize) -> Result<Vec<f64>> {
    let cf = bands.c0 * f;
    Ok(bessel_j_symmetric(n, bands.j() / f)?.into_iter().map(|b| cf * b).collect())
}

/// Effective Hamiltonian in the basis {upper band at site l−m, lower band at
/// site l} with second-order level shifts from all other Wannier–Stark
/// states; levels are `ε^±_l = lF ± Δ/2`.
pub fn effective_two_level(
    bands: &BandParameters,
    f: f64,
    m: i64,
    l: i64,
) -> Result<HermitianMatrix> {
    check_force(f)?;
    let n = bessel_terms(bands.j(), f) as i64 + m.abs();
    let v = couplings(bands, f, n as usize)?;
    let vv = |i: i64| if i.abs() <= n { v[(i + n) as usize] } else { 0.0 };
    let upper = |s: i64| s as f64 * f + 0.5 * bands.delta;
    let lower = |s: i64| s as f64 * f - 0.5 * bands.delta;

    let shift = |level: f64, partner: &dyn Fn(i64) -> f64, index: &dyn Fn(i64) -> i64, skip: i64| {
        let mut sum = 0.0;
        for i in (l - m - n)..=(l + n) {
            if i == skip {
                continue;
            }
            let vi = vv(index(i));
            if vi == 0.0 {
                continue;
            }
            let den = level - partner(i);
            if den.abs() < DEGENERATE_DENOMINATOR {
                return Err(Error::DegenerateDenominator(format!(
                    "m={m}, l={l}, i={i}: level difference {den:e}"
                )));
            }
            sum += vi * vi / den;
        }
        Ok(sum)
    };

    let e_up = upper(l - m);
    let e_low = lower(l);
    let d_up = e_up + shift(e_up, &lower, &|i| l - m - i, l)?;
    let d_low = e_low + shift(e_low, &upper, &|i| l - i, l - m)?;
    let off = num_complex::Complex64::new(vv(-m), 0.0);
    Ok(HermitianMatrix::from_lower(2, |r, c| match (r, c) {
        (0, 0) => d_up.into(),
        (1, 1) => d_low.into(),
        _ => off,
    }))
}

/// Stark-shifted detuning `R(F) = Δ − mF + 2C₀²F² Σ_{i≠m} J_i²(J/F)/(Δ − iF)`;
/// its zero is the m-th resonance.
pub fn resonance_residual(bands: &BandParameters, f: f64, m: i64) -> Result<f64> {
    check_force(f)?;
    let n = bessel_terms(bands.j(), f) as i64 + m.abs();
    let jn = bessel_j_symmetric(n as usize, bands.j() / f)?;
    let cf = bands.c0 * f;
    let mut sum = 0.0;
    for i in -n..=n {
        if i == m {
            continue;
        }
        let den = bands.delta - i as f64 * f;
        let b = jn[(i + n) as usize];
        if b != 0.0 {
            sum += b * b / den;
        }
    }
    Ok(bands.delta - m as f64 * f + 2.0 * cf * cf * sum)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceSolution {
    pub m: u32,
    pub f_m: f64,
    pub f_m_uncorrected: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `R(F) = 0` near `F = Δ/m` by Brent's method. The bracket is
/// `[0.8, 1.2]·Δ/m`, clipped to stay half an order away from the
/// neighbouring poles `Δ/(m±1)` of the Stark-shift sum.
pub fn resonance_position(bands: &BandParameters, m: u32) -> Result<ResonanceSolution> {
    if m == 0 {
        return Err(Error::Domain("resonance order m must be ≥ 1".into()));
    }
    if !(bands.delta > 0.0) || !bands.is_finite() {
        return Err(Error::Domain(format!("band gap Δ = {} must be positive", bands.delta)));
    }
    let mf = m as f64;
    let seed = bands.delta / mf;
    if bands.c0 == 0.0 {
        return Ok(ResonanceSolution {
            m,
            f_m: seed,
            f_m_uncorrected: seed,
            iterations: 0,
            residual: 0.0,
        });
    }
    let lo = (0.8 * seed).max(bands.delta / (mf + 0.5));
    let hi = if m == 1 { 1.2 * seed } else { (1.2 * seed).min(bands.delta / (mf - 0.5)) };
    let mut evaluations = 0usize;
    let mut failure = None;
    let mut r = |f: f64| {
        evaluations += 1;
        resonance_residual(bands, f, m as i64).unwrap_or_else(|e| {
            failure = Some(e);
            f64::NAN
        })
    };
    let mut conv = SimpleConvergency { eps: 1e-14, max_iter: ROOT_BUDGET };
    let root = find_root_brent(lo, hi, &mut r, &mut conv);
    if let Some(e) = failure {
        return Err(e);
    }
    let f_m = root.map_err(|e| Error::RootFinding {
        m: m.into(),
        lo,
        hi,
        reason: format!("{e:?}"),
    })?;
    let residual = resonance_residual(bands, f_m, m as i64)?;
    if !(residual.abs() <= RESIDUAL_TOLERANCE) {
        return Err(Error::RootFinding {
            m: m.into(),
            lo,
            hi,
            reason: format!("residual {residual:e} above {RESIDUAL_TOLERANCE:e}"),
        });
    }
    Ok(ResonanceSolution {
        m,
        f_m,
        f_m_uncorrected: seed,
        iterations: evaluations,
        residual: residual.abs(),
    })
}

/// Solutions for `m = 1..=m_max`.
pub fn resonances(bands: &BandParameters, m_max: u32) -> Result<Vec<ResonanceSolution>> {
    (1..=m_max).map(|m| resonance_position(bands, m)).collect()
}

/// Non-resonant average `½·4V₀²/(Δ² + 4V₀²)`, i.e.
/// `(1/2)/(1 + [(Δ/F)/(2C₀J₀(J/F))]²)`.
pub fn mean_occupation_nonresonant(bands: &BandParameters, f: f64) -> Result<f64> {
    let v0 = ws_coupling(bands, f, 0)?.v_m;
    let v2 = 4.0 * v0 * v0;
    if v2 == 0.0 {
        return Ok(0.0);
    }
    Ok(0.5 * v2 / (bands.delta * bands.delta + v2))
}

/// Closed-form Rabi occupation of the non-resonant two-level system,
/// `4V₀²/(Δ²+4V₀²)·sin²(√(Δ²+4V₀²)·t/2)`.
pub fn rabi_occupation(bands: &BandParameters, f: f64, t: f64) -> Result<f64> {
    let v0 = ws_coupling(bands, f, 0)?.v_m;
    let v2 = 4.0 * v0 * v0;
    let w2 = bands.delta * bands.delta + v2;
    if w2 == 0.0 {
        return Ok(0.0);
    }
    Ok(v2 / w2 * (0.5 * w2.sqrt() * t).sin().powi(2))
}

/// Force at which `V_m` is evaluated inside the resonant Lorentzians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum LorentzianCoupling {
    /// `V_m(F_m)` — symmetric Lorentzians.
    #[default]
    AtResonance,
    /// `V_m(F)` at the running force.
    Running,
}

/// Total long-time average: the non-resonant term plus one Lorentzian in
/// `1/F` per resonance, `½·4w²/((1/F − 1/F_m)² + 4w²)` with `w = V_m/(FΔ)`.
pub fn mean_occupation_total(
    bands: &BandParameters,
    f: f64,
    resonances: &[ResonanceSolution],
    coupling: LorentzianCoupling,
) -> Result<f64> {
    let mut total = mean_occupation_nonresonant(bands, f)?;
    for res in resonances {
        let force = match coupling {
            LorentzianCoupling::AtResonance => res.f_m,
            LorentzianCoupling::Running => f,
        };
        let w = ws_coupling(bands, force, res.m as i64)?.v_m / (force * bands.delta);
        let w2 = 4.0 * w * w;
        if w2 > 0.0 {
            let d = 1.0 / f - 1.0 / res.f_m;
            total += 0.5 * w2 / (d * d + w2);
        }
    }
    Ok(total.clamp(0.0, 1.0))
}

/// Period of the slowest oscillation of `P_b(t)` expected at force `f`: the
/// generalized Rabi period `2π/√(R² + 4V_m²)` of the nearest resonance,
/// with `R` the Stark-shifted detuning.
pub fn slowest_period(bands: &BandParameters, f: f64) -> Result<f64> {
    check_force(f)?;
    let m = (bands.delta / f).round().max(1.0) as i64;
    let r = resonance_residual(bands, f, m)?;
    let v = ws_coupling(bands, f, m)?.v_m;
    let omega = (r * r + 4.0 * v * v).sqrt();
    Ok(if omega > 0.0 { std::f64::consts::TAU / omega } else { f64::INFINITY })
}
