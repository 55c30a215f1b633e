//! First- and second-order Magnus approximations to the interband dynamics.
//!
//! Everything is built from the harmonic expansion of the interband phase,
//!
//! ```text
//! e^{iφ(t)} = Σ_n c_n e^{iω_n t},   ω_n = Δ − nF,
//! c_n = J_n(−J/F)·e^{−i(nk + (J/F) sin k)},
//! ```
//!
//! which turns `χ(t) = ∫₀ᵗ e^{iφ}` into the Bessel sum
//! `Σ_n c_n·2e^{iω_n t/2} sin(ω_n t/2)/ω_n` and
//! `ψ(t) = ∫₀ᵗdt₁∫₀^{t₁}dt₂ sin[φ(t₂) − φ(t₁)]` into a double sum of
//! elementary simplex integrals. At `k = 0` the coefficients are real.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::model::DrivenTwoBandParameters;
use crate::numerics::{bessel_j, bessel_j_symmetric, Matrix2};
use crate::spectral::bessel_terms;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MagnusConfig {
    /// Half-width of the Bessel sums; `None` uses `⌈|J/F|⌉ + 20`.
    pub n_terms: Option<usize>,
    /// `|ω_n|` below which a harmonic is treated as exactly resonant.
    pub resonance_eps: f64,
}

impl Default for MagnusConfig {
    fn default() -> Self {
        Self { n_terms: None, resonance_eps: 1e-8 }
    }
}

impl MagnusConfig {
    fn terms(&self, p: &DrivenTwoBandParameters) -> usize {
        let rule = bessel_terms(p.bands.j(), p.f);
        self.n_terms.map_or(rule, |n| n.max(rule))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HarmonicFrequency {
    pub n: i64,
    pub omega_n: f64,
}

impl HarmonicFrequency {
    pub fn new(p: &DrivenTwoBandParameters, n: i64) -> Self {
        Self { n, omega_n: p.bands.delta - n as f64 * p.f }
    }
}

struct Harmonic {
    omega: f64,
    coefficient: C64,
}

fn harmonics(p: &DrivenTwoBandParameters, cfg: &MagnusConfig) -> Result<Vec<Harmonic>> {
    let n = cfg.terms(p);
    let x = p.bands.j() / p.f;
    let bessel = bessel_j_symmetric(n, -x)?;
    let global = x * p.k.sin();
    Ok(bessel
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let h = HarmonicFrequency::new(p, i as i64 - n as i64);
            Harmonic {
                omega: if h.omega_n.abs() < cfg.resonance_eps { 0.0 } else { h.omega_n },
                coefficient: C64::from_polar(b, -(h.n as f64 * p.k + global)),
            }
        })
        .collect())
}

/// `E(z) = ∫₀¹ e^{izτ} dτ = e^{iz/2}·sin(z/2)/(z/2)`.
fn e1(z: f64) -> C64 {
    let h = 0.5 * z;
    let sinc = if h == 0.0 { 1.0 } else { h.sin() / h };
    C64::from_polar(sinc, h)
}

/// `M_j(p) = ∫₀¹ τ^j e^{ipτ} dτ` for `j = 0..=jmax`.
fn moments(p: f64, jmax: usize) -> Vec<C64> {
    let ip = C64::new(0.0, p);
    if p.abs() <= 2.0 {
        (0..=jmax)
            .map(|j| {
                let mut term = C64::new(1.0, 0.0);
                let mut sum = C64::new(1.0 / (j + 1) as f64, 0.0);
                for l in 1..60 {
                    term *= ip / l as f64;
                    let add = term / (j + l + 1) as f64;
                    sum += add;
                    if add.norm() < 1e-18 {
                        break;
                    }
                }
                sum
            })
            .collect()
    } else {
        let eip = C64::from_polar(1.0, p);
        let mut m = vec![e1(p)];
        for j in 1..=jmax {
            let prev = m[j - 1];
            m.push((eip - prev * j as f64) / ip);
        }
        m
    }
}

/// `[E(p+q) − E(p)]/q`, accurate also for small `q`.
fn divided_e1(p: f64, q: f64, e_pq: C64, e_p: C64) -> C64 {
    const SERIES_BELOW: f64 = 1e-3;
    if q.abs() >= SERIES_BELOW {
        return (e_pq - e_p) / q;
    }
    // Σ_{j≥1} (iq)^{j−1}·i/j!·M_j(p); five terms reach 1e-16 for |q| < 1e-3.
    let m = moments(p, 5);
    let mut sum = C64::new(0.0, 0.0);
    let mut fac = C64::new(0.0, 1.0);
    for (j, mj) in m.iter().enumerate().skip(1) {
        fac /= j as f64;
        sum += fac * mj;
        fac *= C64::new(0.0, q);
    }
    sum
}

/// `χ(t) = ∫₀ᵗ e^{iφ(t')} dt'`.
pub fn chi(p: &DrivenTwoBandParameters, t: f64, cfg: &MagnusConfig) -> Result<C64> {
    Ok(harmonics(p, cfg)?.iter().map(|h| h.coefficient * e1(h.omega * t) * t).sum())
}

/// `ψ(t) = ∫₀ᵗdt₁∫₀^{t₁}dt₂ sin[φ(t₂) − φ(t₁)]`.
pub fn psi(p: &DrivenTwoBandParameters, t: f64, cfg: &MagnusConfig) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let hs = harmonics(p, cfg)?;
    let n = hs.len();
    // (ω_n − ω_m)·t = (m − n)·F·t depends only on the index difference.
    let diff: Vec<C64> = (-(n as i64 - 1)..n as i64).map(|d| e1(d as f64 * p.f * t)).collect();
    let mut sum = C64::new(0.0, 0.0);
    for (mi, hm) in hs.iter().enumerate() {
        if hm.coefficient == C64::new(0.0, 0.0) {
            continue;
        }
        let pp = -hm.omega * t;
        let e_p = e1(pp);
        let mut inner = C64::new(0.0, 0.0);
        for (ni, hn) in hs.iter().enumerate() {
            let d = mi as i64 - ni as i64;
            let q = hn.omega * t;
            inner += hn.coefficient * divided_e1(pp, q, diff[(d + n as i64 - 1) as usize], e_p);
        }
        sum += inner * hm.coefficient.conj();
    }
    // Each pair contributes t²·D/i; ψ is the imaginary part.
    Ok((sum * C64::new(0.0, -1.0) * (t * t)).im)
}

/// First-order propagator `U₁ = exp(−iC₀F[[0, χ*], [χ, 0]])`.
pub fn propagator_first_order(
    p: &DrivenTwoBandParameters,
    t: f64,
    cfg: &MagnusConfig,
) -> Result<Matrix2> {
    let c = chi(p, t, cfg)? * p.coupling();
    let theta = c.norm();
    let s = if theta == 0.0 { 0.0 } else { theta.sin() / theta };
    let minus_i = C64::new(0.0, -1.0);
    let cos = C64::new(theta.cos(), 0.0);
    Ok(Matrix2::new(cos, minus_i * c.conj() * s, minus_i * c * s, cos))
}

/// `P_b ≈ sin²(C₀F·|χ(t)|)`.
pub fn pb_first_order(p: &DrivenTwoBandParameters, t: f64, cfg: &MagnusConfig) -> Result<f64> {
    Ok((p.coupling() * chi(p, t, cfg)?.norm()).sin().powi(2))
}

/// Second-order occupation from `χ`, `ψ`:
/// `|χ|²/(|χ|² + C₀²F²ψ²)·sin²(|C₀F|·√(|χ|² + C₀²F²ψ²))`.
pub fn pb_from_integrals(coupling: f64, chi: C64, psi: f64) -> f64 {
    let chi2 = chi.norm_sqr();
    let total = chi2 + (coupling * psi).powi(2);
    if total == 0.0 {
        return 0.0;
    }
    (chi2 / total * (coupling.abs() * total.sqrt()).sin().powi(2)).clamp(0.0, 1.0)
}

pub fn pb_second_order(p: &DrivenTwoBandParameters, t: f64, cfg: &MagnusConfig) -> Result<f64> {
    Ok(pb_from_integrals(p.coupling(), chi(p, t, cfg)?, psi(p, t, cfg)?))
}

/// Resonant Rabi envelope `sin²(C₀F·J_m(J/F)·t)`; meaningful for
/// `|Δ − mF| < F/10`.
pub fn resonant_envelope(p: &DrivenTwoBandParameters, m: i64, t: f64) -> Result<f64> {
    if !((p.bands.delta - m as f64 * p.f).abs() < 0.1 * p.f) {
        return Err(Error::Domain(format!(
            "F = {} is not near the resonance of order {m} (Δ = {})",
            p.f, p.bands.delta
        )));
    }
    Ok((p.coupling() * bessel_j(m, p.bands.j() / p.f)? * t).sin().powi(2))
}

/// Period `π/|C₀F·J_m(J/F)|` of [`resonant_envelope`].
pub fn resonant_period(p: &DrivenTwoBandParameters, m: i64) -> Result<f64> {
    Ok(std::f64::consts::PI / (p.coupling() * bessel_j(m, p.bands.j() / p.f)?).abs())
}
