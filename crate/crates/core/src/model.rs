//! Model Hamiltonians: the Landau–Zener–Stückelberg (LZS) two-level form,
//! the driven two-band Hamiltonian of a tilted lattice in quasimomentum
//! space, and the dictionary between the two.
//!
//! The k-space Hamiltonian (interaction picture w.r.t. the tilt) is
//!
//! ```text
//! H(t) = [[−Δ/2 − J_a cos(k+Ft),  C₀F               ],
//!         [ C₀F,                  Δ/2 − J_b cos(k+Ft)]]
//! ```
//!
//! Splitting off the scalar part `−½(J_a+J_b) cos(k+Ft)·1` leaves
//! `−½[[Δ + J cos(k+Ft), −2C₀F], [−2C₀F, −Δ − J cos(k+Ft)]]` with
//! `J = J_a − J_b`, which is the LZS Hamiltonian
//! `−½[[ε₀ + A sin ωτ, Δ_T], [Δ_T, −ε₀ − A sin ωτ]]` at LZS time
//! `τ = t + k/F + π/2F`, with `ε₀ = Δ`, `A = J`, `ω = F`, `Δ_T = −2C₀F`.

use std::f64::consts::{FRAC_PI_2, TAU};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
pub use crate::lattice::BandParameters;
use crate::numerics::Matrix2;

/// Parameters of `H = −½[[ε₀ + A sin ωt, Δ_T], [Δ_T, −ε₀ − A sin ωt]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LzsParameters {
    pub eps0: f64,
    pub a: f64,
    pub omega: f64,
    pub delta_t: f64,
}

impl LzsParameters {
    pub fn new(eps0: f64, a: f64, omega: f64, delta_t: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::Domain(format!("LZS drive frequency {omega} must be positive")));
        }
        Ok(Self { eps0, a, omega, delta_t })
    }
}

/// Band parameters together with the Stark force `F` and the quasimomentum
/// `k` of one Bloch-oscillating state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DrivenTwoBandParameters {
    pub bands: BandParameters,
    pub f: f64,
    pub k: f64,
}

impl DrivenTwoBandParameters {
    pub fn new(bands: BandParameters, f: f64, k: f64) -> Result<Self> {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::Domain(format!("force F = {f} must be positive and finite")));
        }
        if !bands.is_finite() || !k.is_finite() {
            return Err(Error::Domain("band parameters and k must be finite".into()));
        }
        Ok(Self { bands, f, k })
    }

    /// Bloch period `T_B = 2π/F`.
    pub fn bloch_period(&self) -> f64 {
        TAU / self.f
    }

    /// Interband coupling `C₀F`.
    pub fn coupling(&self) -> f64 {
        self.bands.c0 * self.f
    }

    pub fn with_k(&self, k: f64) -> Self {
        Self { k, ..*self }
    }
}

pub fn lzs_hamiltonian(p: &LzsParameters, t: f64) -> Matrix2 {
    let bias = p.eps0 + p.a * (p.omega * t).sin();
    Matrix2::from_real(-0.5 * bias, -0.5 * p.delta_t, -0.5 * p.delta_t, 0.5 * bias)
}

pub fn hamiltonian_k(p: &DrivenTwoBandParameters, t: f64) -> Matrix2 {
    let b = &p.bands;
    let c = (p.k + p.f * t).cos();
    let v = p.coupling();
    Matrix2::from_real(-0.5 * b.delta - b.ja * c, v, v, 0.5 * b.delta - b.jb * c)
}

/// The LZS parameters equivalent to a tilted two-band system, plus the
/// pieces needed to make the equivalence exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LzsMapping {
    pub lzs: LzsParameters,
    /// Coefficient `s` of the scalar shift `s·cos(k+Ft)·1`, `s = −(J_a+J_b)/2`.
    pub scalar_shift: f64,
}

impl LzsMapping {
    /// LZS time corresponding to lattice time `t` at quasimomentum `k`.
    pub fn lzs_time(&self, k: f64, t: f64) -> f64 {
        t + (k + FRAC_PI_2) / self.lzs.omega
    }
}

pub fn map_to_lzs(bands: &BandParameters, f: f64) -> Result<LzsMapping> {
    Ok(LzsMapping {
        lzs: LzsParameters::new(bands.delta, bands.j(), f, -2.0 * bands.c0 * f)?,
        scalar_shift: -0.5 * (bands.ja + bands.jb),
    })
}

/// Interband phase `φ(k,t) = Δt + (J/F)[sin(k+Ft) − sin k]` accumulated
/// between the two bands; this is the phase generated by [`hamiltonian_k`]
/// when both diagonal terms are transformed away.
pub fn phase_phi(p: &DrivenTwoBandParameters, t: f64) -> f64 {
    let b = &p.bands;
    b.delta * t + b.j() / p.f * ((p.k + p.f * t).sin() - p.k.sin())
}

/// Largest entry deviation between [`hamiltonian_k`] and the mapped LZS
/// Hamiltonian plus scalar shift over `t_grid`.
pub fn equivalence_check(p: &DrivenTwoBandParameters, t_grid: &[f64]) -> Result<f64> {
    let map = map_to_lzs(&p.bands, p.f)?;
    Ok(t_grid
        .iter()
        .map(|&t| {
            let shift = map.scalar_shift * (p.k + p.f * t).cos();
            let lzs = lzs_hamiltonian(&map.lzs, map.lzs_time(p.k, t))
                + Matrix2::identity().scale(C64::new(shift, 0.0));
            lzs.max_abs_diff(&hamiltonian_k(p, t))
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fig2() -> DrivenTwoBandParameters {
        DrivenTwoBandParameters::new(BandParameters::from_difference(4.39, 0.682, -0.14), 1.0, 0.0)
            .unwrap()
    }

    #[test]
    fn lzs_static_and_driven() {
        let h = lzs_hamiltonian(&LzsParameters::new(1.0, 0.0, 1.0, 0.0).unwrap(), 0.7);
        assert_eq!(h, Matrix2::from_real(-0.5, 0.0, 0.0, 0.5));
        let h = lzs_hamiltonian(&LzsParameters::new(0.0, 2.0, 1.0, 0.0).unwrap(), PI / 2.0);
        assert!(h.max_abs_diff(&Matrix2::from_real(-1.0, 0.0, 0.0, 1.0)) < 1e-15);
        assert!(LzsParameters::new(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn k_hamiltonian_periodic() {
        let p = fig2().with_k(0.4);
        for &t in &[0.0, 0.3, 5.1] {
            let d = hamiltonian_k(&p, t).max_abs_diff(&hamiltonian_k(&p, t + p.bloch_period()));
            assert!(d < 1e-12);
        }
        assert!((hamiltonian_k(&fig2(), 0.0).0[0][1].re + 0.14).abs() < 1e-15);
    }

    #[test]
    fn mapping_values() {
        let m = map_to_lzs(&fig2().bands, 1.0).unwrap();
        assert_eq!(m.lzs.eps0, 4.39);
        assert!((m.lzs.a - 0.682).abs() < 1e-15);
        assert_eq!(m.lzs.omega, 1.0);
        assert!((m.lzs.delta_t - 0.28).abs() < 1e-15);
        let m2 = map_to_lzs(&fig2().bands, 2.0).unwrap();
        assert_eq!(m2.lzs.omega, 2.0 * m.lzs.omega);
        assert_eq!(m2.lzs.delta_t, 2.0 * m.lzs.delta_t);
        let decoupled = BandParameters::new(1.0, 0.1, -0.2, 0.0);
        assert_eq!(map_to_lzs(&decoupled, 1.0).unwrap().lzs.delta_t, 0.0);
        // equal hoppings: no driving amplitude, pure scalar shift −J_a cos(k+Ft)
        let equal = map_to_lzs(&BandParameters::new(1.0, 0.3, 0.3, -0.1), 1.0).unwrap();
        assert_eq!(equal.lzs.a, 0.0);
        assert_eq!(equal.scalar_shift, -0.3);
    }

    #[test]
    fn equivalence_is_exact() {
        let t: Vec<f64> = (0..100).map(|i| 0.137 * i as f64).collect();
        assert!(equivalence_check(&fig2(), &t).unwrap() < 1e-12);
        let p = DrivenTwoBandParameters::new(BandParameters::new(2.1, 0.3, 0.3, -0.2), 0.8, 1.3)
            .unwrap();
        assert!(equivalence_check(&p, &t).unwrap() < 1e-12);
        assert_eq!(map_to_lzs(&p.bands, p.f).unwrap().lzs.a, 0.0);
    }

    #[test]
    fn phase_special_cases() {
        let p = fig2().with_k(0.9);
        assert_eq!(phase_phi(&p, 0.0), 0.0);
        let q = fig2();
        assert!((phase_phi(&q, q.bloch_period()) - 4.39 * q.bloch_period()).abs() < 1e-12);
        let flat = DrivenTwoBandParameters::new(BandParameters::new(3.0, 0.2, 0.2, -0.1), 1.0, 0.5)
            .unwrap();
        assert_eq!(phase_phi(&flat, 2.0), 6.0);
    }

    #[test]
    fn rejects_bad_force() {
        assert!(DrivenTwoBandParameters::new(fig2().bands, 0.0, 0.0).is_err());
        assert!(DrivenTwoBandParameters::new(fig2().bands, f64::NAN, 0.0).is_err());
    }
}
