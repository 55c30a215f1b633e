//! Bloch bands and Wannier functions of the one-dimensional (super-)lattice
//! `V(x) = V₁ cos x + V₂ cos(2x + φ)` and the tight-binding parameters of the
//! tilted two-band model derived from them.
//!
//! Units: energies in recoil energies, one lattice cell is `x ∈ [0, 2π)`, and
//! the single-particle Hamiltonian is `H = −4 d²/dx² + V(x)`. Quasimomenta
//! `q ∈ (−1/2, 1/2]` are in units of the reciprocal lattice vector, so the
//! tight-binding phase is `κ = 2πq`.
//!
//! Hopping amplitudes come from the first cosine coefficient of each band's
//! dispersion, `E_α(κ) ≈ ε_α − J_α cos κ`. The nearest-neighbour Wannier
//! matrix element is kept as an independent cross-check
//! ([`hopping_from_wannier`]).
//!
//! Wannier functions are the maximally localized ones (parallel-transport
//! gauge), which for inversion-symmetric potentials are real. The band
//! coupling `C₀ = ⟨w⁰_a| (x − x_c)/2π |w⁰_b⟩` is the dipole matrix element in
//! units of the lattice constant, measured from the deepest well `x_c`; the
//! relative phase of the two Wannier functions is fixed so that `C₀` is real
//! and negative.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64 as C64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::numerics::{eigh_lowest, HermitianMatrix};

/// Real potential `V(x) = V₁ cos x + V₂ cos(2x + φ)`, depths in recoil energies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSpec {
    pub v1: f64,
    pub v2: f64,
    pub phi: f64,
}

impl LatticeSpec {
    /// Single lattice `V(x) = V₀ cos x`.
    pub fn single(v0: f64) -> Self {
        Self { v1: v0, v2: 0.0, phi: 0.0 }
    }

    pub fn superlattice(v1: f64, v2: f64, phi: f64) -> Self {
        Self { v1, v2, phi: phi.rem_euclid(TAU) }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v1.is_finite() && self.v2.is_finite() && self.phi.is_finite()) {
            return Err(Error::Domain("lattice parameters must be finite".into()));
        }
        if self.v1 < 0.0 {
            return Err(Error::Domain(format!("lattice depth V1 = {} must be >= 0", self.v1)));
        }
        Ok(())
    }

    pub fn potential(&self, x: f64) -> f64 {
        potential_eval(self, x)
    }

    /// `φ ∈ {0, π}` (or no second harmonic): the potential is inversion
    /// symmetric about its wells.
    pub fn is_inversion_symmetric(&self) -> bool {
        let p = self.phi.rem_euclid(TAU);
        self.v2 == 0.0 || p == 0.0 || p == PI
    }
}

pub fn potential_eval(spec: &LatticeSpec, x: f64) -> f64 {
    spec.v1 * x.cos() + spec.v2 * (2.0 * x + spec.phi).cos()
}

/// Discretization parameters of the band/Wannier pipeline.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeGrids {
    /// Number of plane waves (odd, ≥ 11).
    pub cutoff: usize,
    /// Number of quasimomenta (even, ≥ 32).
    pub q_points: usize,
    /// Samples per cell of exported Wannier functions.
    pub x_per_cell: usize,
    /// Cells spanned by exported Wannier functions (odd, ≥ 11).
    pub cells: usize,
    /// Samples per cell used for the Wannier integrals in [`extract_params`].
    /// The integrands are band limited, so this only needs to exceed
    /// `cutoff`.
    pub integration_x_per_cell: usize,
}

impl Default for LatticeGrids {
    fn default() -> Self {
        Self { cutoff: 31, q_points: 64, x_per_cell: 512, cells: 21, integration_x_per_cell: 64 }
    }
}

impl LatticeGrids {
    pub fn validate(&self) -> Result<()> {
        if self.cutoff < 11 || self.cutoff % 2 == 0 {
            return Err(Error::Domain(format!("cutoff {} must be odd and >= 11", self.cutoff)));
        }
        if self.q_points < 32 || self.q_points % 2 == 1 {
            return Err(Error::Domain(format!(
                "q grid of {} points must be even and >= 32",
                self.q_points
            )));
        }
        if self.cells < 11 || self.cells % 2 == 0 || self.cells > self.q_points {
            return Err(Error::Domain(format!(
                "Wannier window of {} cells must be odd, >= 11 and <= q_points",
                self.cells
            )));
        }
        if self.x_per_cell <= self.cutoff || self.integration_x_per_cell <= self.cutoff {
            return Err(Error::Domain("x sampling must exceed the plane-wave cutoff".into()));
        }
        Ok(())
    }
}

/// Uniform quasimomentum grid `q_j = (j + 1)/N − 1/2`, which covers
/// `(−1/2, 1/2]`.
pub fn q_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| (j + 1) as f64 / n as f64 - 0.5).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Band {
    /// Lowest band.
    A,
    /// First excited band.
    B,
}

impl Band {
    fn index(self) -> usize {
        match self {
            Band::A => 0,
            Band::B => 1,
        }
    }
}

/// One band sampled on a quasimomentum grid. `coefficients[j][i]` is the
/// amplitude of the plane wave `e^{i(q_j + n_i)x}` with
/// `n_i = i − (cutoff − 1)/2`, normalized to unit norm.
#[derive(Clone, Debug)]
pub struct BlochBand {
    pub band: Band,
    pub q: Vec<f64>,
    pub energies: Vec<f64>,
    pub coefficients: Vec<Vec<C64>>,
}

impl BlochBand {
    fn orders(&self) -> i64 {
        (self.coefficients[0].len() as i64 - 1) / 2
    }

    pub fn mean_energy(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.energies.len() as f64
    }

    /// Hopping `J` of `E(κ) ≈ ε − J cos κ`: `J = −(2/N) Σ_q E(q) cos 2πq`.
    pub fn hopping(&self) -> f64 {
        let n = self.energies.len() as f64;
        -2.0 / n * self.q.iter().zip(&self.energies).map(|(q, e)| e * (TAU * q).cos()).sum::<f64>()
    }
}

fn plane_wave_hamiltonian(spec: &LatticeSpec, cutoff: usize, q: f64) -> HermitianMatrix {
    let nmax = (cutoff as i64 - 1) / 2;
    let v2 = C64::from_polar(0.5 * spec.v2, spec.phi);
    // ⟨n+1|V|n⟩ = V₁/2, ⟨n+2|V|n⟩ = V₂ e^{iφ}/2
    HermitianMatrix::from_lower(cutoff, |i, j| match i - j {
        0 => {
            let k = q + (i as i64 - nmax) as f64;
            C64::new(4.0 * k * k, 0.0)
        }
        1 => C64::new(0.5 * spec.v1, 0.0),
        2 => v2,
        _ => C64::new(0.0, 0.0),
    })
}

/// The two lowest Bloch bands on the given quasimomentum grid.
///
/// Time-reversal symmetry `H(−q) = P H(q)* P` (with `P` the plane-wave
/// reversal) is used to solve only half of a symmetric grid; energies at
/// `±q` are therefore bitwise equal.
pub fn bloch_bands(
    spec: &LatticeSpec,
    cutoff: usize,
    q_grid: &[f64],
) -> Result<(BlochBand, BlochBand)> {
    spec.validate()?;
    if cutoff < 11 || cutoff % 2 == 0 {
        return Err(Error::Domain(format!("cutoff {cutoff} must be odd and >= 11")));
    }
    if q_grid.is_empty() || q_grid.iter().any(|q| !(*q > -0.5 && *q <= 0.5)) {
        return Err(Error::Domain("quasimomenta must lie in (-1/2, 1/2]".into()));
    }

    let n = q_grid.len();
    let mut solved: Vec<Option<[(f64, Vec<C64>); 2]>> = vec![None; n];
    for j in 0..n {
        if solved[j].is_some() {
            continue;
        }
        let q = q_grid[j];
        let e = eigh_lowest(&plane_wave_hamiltonian(spec, cutoff, q), 2)?;
        let pair = [(e.values[0], e.vectors[0].clone()), (e.values[1], e.vectors[1].clone())];
        if q != 0.0 && q != 0.5 {
            if let Some(m) = q_grid.iter().position(|&p| p == -q) {
                if solved[m].is_none() {
                    let mirror = |v: &Vec<C64>| v.iter().rev().map(|c| c.conj()).collect();
                    solved[m] =
                        Some([(pair[0].0, mirror(&pair[0].1)), (pair[1].0, mirror(&pair[1].1))]);
                }
            }
        }
        solved[j] = Some(pair);
    }

    let mut bands = [Band::A, Band::B].map(|band| BlochBand {
        band,
        q: q_grid.to_vec(),
        energies: Vec::with_capacity(n),
        coefficients: Vec::with_capacity(n),
    });
    for s in solved.into_iter().map(|s| s.expect("all quasimomenta solved")) {
        for (b, (e, c)) in bands.iter_mut().zip(s) {
            b.energies.push(e);
            b.coefficients.push(c);
        }
    }
    let [a, b] = bands;
    Ok((a, b))
}

/// Position of the deepest well in `[0, 2π)`: grid search followed by a
/// parabolic refinement. Ties go to the smallest `x`.
pub fn well_center(spec: &LatticeSpec) -> f64 {
    const SAMPLES: usize = 4096;
    let h = TAU / SAMPLES as f64;
    let v = |i: i64| spec.potential(i as f64 * h);
    let mut best = 0i64;
    let mut best_v = v(0);
    for i in 1..SAMPLES as i64 {
        let vi = v(i);
        if vi < best_v - 1e-13 * (1.0 + best_v.abs()) {
            best = i;
            best_v = vi;
        }
    }
    let (vm, v0, vp) = (v(best - 1), best_v, v(best + 1));
    let denom = vm - 2.0 * v0 + vp;
    let shift = if denom > 0.0 { 0.5 * (vm - vp) / denom } else { 0.0 };
    (best as f64 + shift.clamp(-1.0, 1.0)) * h
}

/// Smallest acceptable overlap between neighbouring periodic Bloch parts;
/// anything lower means the band is not resolved by the quasimomentum grid.
const MIN_LINK_OVERLAP: f64 = 0.1;

/// Parallel-transport gauge: each Bloch function's phase is chosen so that
/// the overlap of neighbouring periodic parts `⟨u_q|u_{q+δ}⟩` has the same
/// phase on every link of the closed Brillouin-zone loop. In one dimension
/// this yields the maximally localized Wannier functions.
fn parallel_transport(bloch: &BlochBand) -> Result<Vec<C64>> {
    let nq = bloch.q.len();
    let c = &bloch.coefficients;
    let len = c[0].len();
    let link = |j: usize| -> C64 {
        if j + 1 < nq {
            c[j].iter().zip(&c[j + 1]).map(|(x, y)| x.conj() * y).sum()
        } else {
            // u_{q+1} has coefficients shifted by one order.
            (0..len - 1).map(|i| c[j][i].conj() * c[0][i + 1]).sum()
        }
    };
    let mut gauge = Vec::with_capacity(nq);
    gauge.push(C64::new(1.0, 0.0));
    let mut closing = C64::new(0.0, 0.0);
    for j in 0..nq {
        let m = link(j);
        let r = m.norm();
        if !(r > MIN_LINK_OVERLAP) {
            return Err(Error::Gauge(format!(
                "band {:?}: neighbouring Bloch states at q = {} overlap only {r:.3}",
                bloch.band, bloch.q[j]
            )));
        }
        let g = gauge[j];
        if j + 1 < nq {
            gauge.push(g * m.conj() / r);
        } else {
            closing = g.conj() * m;
        }
    }
    // Spread the Berry phase of the loop evenly over all links.
    let theta = closing.arg();
    for (j, g) in gauge.iter_mut().enumerate() {
        *g *= C64::from_polar(1.0, theta * j as f64 / nq as f64);
    }
    Ok(gauge)
}

/// Wannier function sampled on a uniform grid.
#[derive(Clone, Debug)]
pub struct WannierFunction {
    pub band: Band,
    pub site: i64,
    /// Position of the first sample.
    pub x0: f64,
    pub dx: f64,
    pub values: Vec<C64>,
}

impl WannierFunction {
    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    /// `⟨self|other⟩` on the common grid (both functions must share it).
    pub fn overlap(&self, other: &WannierFunction) -> C64 {
        debug_assert_eq!(self.values.len(), other.values.len());
        self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum::<C64>() * self.dx
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Largest magnitude within the outermost cell on either side, relative
    /// to the peak.
    pub fn edge_ratio(&self, per_cell: usize) -> f64 {
        let n = self.values.len();
        let edge = self.values[..per_cell]
            .iter()
            .chain(&self.values[n - per_cell..])
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        edge / self.peak()
    }
}

/// Samples of one band's Wannier functions over the full periodic window of
/// `q_points` cells, computed with a single inverse FFT.
///
/// Sites are labelled so that site 0 has its centre within half a cell of
/// the well centre `x_c`; the global phase makes `∫ w dx` real-positive
/// (band B is re-phased later against band A, see [`relative_phase`]).
struct WannierSampler {
    band: Band,
    center: f64,
    per_cell: usize,
    q_points: usize,
    spectrum_base: Vec<(i64, C64)>,
    site_offset: i64,
}

impl WannierSampler {
    fn new(bloch: &BlochBand, center: f64, per_cell: usize) -> Result<Self> {
        let gauge = parallel_transport(bloch)?;
        let nq = bloch.q.len();
        let nmax = bloch.orders();
        let norm = 1.0 / (nq as f64 * TAU.sqrt());
        let mut spectrum_base = Vec::with_capacity(nq * bloch.coefficients[0].len());
        for (j, q) in bloch.q.iter().enumerate() {
            // Nq·q is an integer on the grid returned by `q_grid`.
            let qk = (q * nq as f64).round() as i64;
            for (i, c) in bloch.coefficients[j].iter().enumerate() {
                let kk = qk + (i as i64 - nmax) * nq as i64;
                spectrum_base.push((kk, c * gauge[j] * norm));
            }
        }
        let mut sampler =
            Self { band: bloch.band, center, per_cell, q_points: nq, spectrum_base, site_offset: 0 };

        let w = sampler.sample(0);
        let weight: f64 = w.values.iter().map(|v| v.norm_sqr()).sum();
        let mean_x: f64 =
            w.values.iter().enumerate().map(|(i, v)| w.x(i) * v.norm_sqr()).sum::<f64>() / weight;
        sampler.site_offset = ((center - mean_x) / TAU).round() as i64;
        let area: C64 = w.values.iter().sum();
        if area.norm() > 1e-8 * w.peak() {
            sampler.rotate(area.conj() / area.norm());
        }
        Ok(sampler)
    }

    fn rotate(&mut self, phase: C64) {
        for (_, a) in &mut self.spectrum_base {
            *a *= phase;
        }
    }

    /// Site-`l` Wannier function sampled on `[x_c + 2πl − πN, x_c + 2πl + πN)`
    /// with `N = q_points`.
    fn sample(&self, site: i64) -> WannierFunction {
        let nq = self.q_points as i64;
        let m = self.q_points * self.per_cell;
        let dx = TAU / self.per_cell as f64;
        let x0 = self.center + TAU * site as f64 - PI * nq as f64;
        let shift = TAU * (site + self.site_offset) as f64;
        let mut buf = vec![C64::new(0.0, 0.0); m];
        for &(kk, a) in &self.spectrum_base {
            // k = K/Nq; site phase e^{−ik·2πl} and the window offset x0.
            let k = kk as f64 / nq as f64;
            let phase = C64::from_polar(1.0, k * (x0 - shift));
            buf[kk.rem_euclid(m as i64) as usize] += a * phase;
        }
        let mut planner = FftPlanner::new();
        // rustfft's inverse transform uses e^{+2πi jk/M} without normalization.
        planner.plan_fft_inverse(m).process(&mut buf);
        WannierFunction { band: self.band, site, x0, dx, values: buf }
    }
}

/// `⟨w_a| (x − x_c)/2π |w_b⟩` on a common grid.
fn dipole(wa: &WannierFunction, wb: &WannierFunction, center: f64) -> C64 {
    wa.values
        .iter()
        .zip(&wb.values)
        .enumerate()
        .map(|(i, (x_a, x_b))| x_a.conj() * x_b * ((wa.x(i) - center) / TAU))
        .sum::<C64>()
        * wa.dx
}

/// Phase that turns the band-B Wannier function into the convention
/// `C₀ < 0` real.
fn relative_phase(c0: C64) -> C64 {
    if c0.norm() > 0.0 {
        -c0.conj() / c0.norm()
    } else {
        C64::new(1.0, 0.0)
    }
}

/// Site-`l` Wannier function of `band`, sampled on `grids.cells` cells
/// centred on that site.
pub fn wannier(
    spec: &LatticeSpec,
    band: Band,
    site: i64,
    grids: &LatticeGrids,
) -> Result<WannierFunction> {
    grids.validate()?;
    let (a, b) = bloch_bands(spec, grids.cutoff, &q_grid(grids.q_points))?;
    let center = well_center(spec);
    let mut sampler = WannierSampler::new(if band == Band::A { &a } else { &b }, center, grids.x_per_cell)?;
    if band == Band::B {
        let p = grids.integration_x_per_cell;
        let wa = WannierSampler::new(&a, center, p)?.sample(0);
        let wb = WannierSampler::new(&b, center, p)?.sample(0);
        sampler.rotate(relative_phase(dipole(&wa, &wb, center)));
    }
    let full = sampler.sample(site);
    // The full window spans q_points cells centred on the site; keep the
    // middle `cells` of them.
    let offset = (grids.q_points - grids.cells) / 2 * grids.x_per_cell
        + (grids.q_points - grids.cells) % 2 * grids.x_per_cell / 2;
    let len = grids.cells * grids.x_per_cell;
    Ok(WannierFunction {
        band,
        site,
        x0: full.x(offset),
        dx: full.dx,
        values: full.values[offset..offset + len].to_vec(),
    })
}

/// Tight-binding data of the tilted two-band model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BandParameters {
    /// Gap between the band-averaged energies.
    pub delta: f64,
    /// Lower-band hopping.
    pub ja: f64,
    /// Upper-band hopping.
    pub jb: f64,
    /// Dimensionless band coupling.
    pub c0: f64,
}

impl BandParameters {
    pub fn new(delta: f64, ja: f64, jb: f64, c0: f64) -> Self {
        Self { delta, ja, jb, c0 }
    }

    /// Parameters specified through the hopping difference only, split as
    /// `J_a = J/2`, `J_b = −J/2`. Only `J` enters the interband dynamics.
    pub fn from_difference(delta: f64, j: f64, c0: f64) -> Self {
        Self { delta, ja: 0.5 * j, jb: -0.5 * j, c0 }
    }

    /// `J = J_a − J_b`.
    pub fn j(&self) -> f64 {
        self.ja - self.jb
    }

    pub fn is_finite(&self) -> bool {
        self.delta.is_finite() && self.ja.is_finite() && self.jb.is_finite() && self.c0.is_finite()
    }
}

/// Edge amplitude (relative to the peak) below which a sampled Wannier
/// function counts as localized within its window.
pub const LOCALIZATION_THRESHOLD: f64 = 1e-6;

/// Tolerated error of `C₀` from the finite (periodic) Wannier window.
///
/// The window holds the periodic sum of Wannier functions, so the dipole
/// integral picks up overlaps with images `N` cells away; with edge amplitudes
/// `e_a`, `e_b` (at `N/2` cells) that error is bounded by about
/// `(N/2)·max(e_a, e_b)²`. Using this bound instead of demanding
/// `e < LOCALIZATION_THRESHOLD` keeps superlattices close to a touching of
/// the second and third band usable.
pub const C0_TAIL_TOLERANCE: f64 = 1e-6;

/// Upper limit for the adaptive quasimomentum grid of [`extract_params`].
pub const MAX_Q_POINTS: usize = 4096;

/// Band parameters with the default grids.
pub fn extract_params(spec: &LatticeSpec) -> Result<BandParameters> {
    extract_params_with(spec, &LatticeGrids::default())
}

/// Band parameters. The quasimomentum grid starts at `grids.q_points` and is
/// doubled (up to [`MAX_Q_POINTS`]) until the window error of `C₀` is below
/// [`C0_TAIL_TOLERANCE`] (the periodic window spans one cell per
/// quasimomentum).
pub fn extract_params_with(spec: &LatticeSpec, grids: &LatticeGrids) -> Result<BandParameters> {
    grids.validate()?;
    let mut q_points = grids.q_points;
    loop {
        match extract_on_grid(spec, grids, q_points)? {
            Ok(params) => return Ok(params),
            Err((band, ratio)) if q_points * 2 > MAX_Q_POINTS => {
                return Err(Error::Accuracy(format!(
                    "band {band:?} Wannier tail {ratio:e} of peak at the edge of a \
                     {q_points}-cell window leaves C0 unconverged (V1={}, V2={}, phi={})",
                    spec.v1, spec.v2, spec.phi
                )))
            }
            Err(_) => q_points *= 2,
        }
    }
}

type Localized = std::result::Result<BandParameters, (Band, f64)>;

fn extract_on_grid(spec: &LatticeSpec, grids: &LatticeGrids, q_points: usize) -> Result<Localized> {
    let (a, b) = bloch_bands(spec, grids.cutoff, &q_grid(q_points))?;
    let center = well_center(spec);
    let per_cell = grids.integration_x_per_cell;
    let wa = WannierSampler::new(&a, center, per_cell)?.sample(0);
    let wb = WannierSampler::new(&b, center, per_cell)?.sample(0);
    let (ea, eb) = (wa.edge_ratio(per_cell), wb.edge_ratio(per_cell));
    let worst = if ea >= eb { (Band::A, ea) } else { (Band::B, eb) };
    if !(0.5 * q_points as f64 * worst.1 * worst.1 <= C0_TAIL_TOLERANCE) {
        return Ok(Err(worst));
    }
    let c0 = dipole(&wa, &wb, center);
    Ok(Ok(BandParameters {
        delta: b.mean_energy() - a.mean_energy(),
        ja: a.hopping(),
        jb: b.hopping(),
        c0: -c0.norm(),
    }))
}

/// Nearest-neighbour hopping from the Wannier functions,
/// `J = −2 ⟨w_{1}|H|w_0⟩`, evaluated on the real-space grid with a
/// fourth-order finite-difference Laplacian. Independent of the dispersion
/// route used by [`extract_params`].
pub fn hopping_from_wannier(spec: &LatticeSpec, band: Band, grids: &LatticeGrids) -> Result<f64> {
    grids.validate()?;
    let (a, b) = bloch_bands(spec, grids.cutoff, &q_grid(grids.q_points))?;
    let bloch = [&a, &b][band.index()];
    let sampler = WannierSampler::new(bloch, well_center(spec), grids.x_per_cell)?;
    let w0 = sampler.sample(0);
    let w1 = sampler.sample(1);
    // Both samples cover one full period of the periodic Wannier function;
    // re-align w1 onto w0's grid (shift by one cell).
    let n = w0.values.len();
    let p = grids.x_per_cell;
    let w1_on_w0 = |i: usize| w1.values[(i + n - p) % n];
    let h2 = w0.dx * w0.dx;
    let at = |i: isize| w0.values[(i.rem_euclid(n as isize)) as usize];
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        let ii = i as isize;
        let lap = (-at(ii + 2) + at(ii + 1) * 16.0 - at(ii) * 30.0 + at(ii - 1) * 16.0
            - at(ii - 2))
            / (12.0 * h2);
        let hw = -lap * 4.0 + at(ii) * spec.potential(w0.x(i));
        acc += w1_on_w0(i).conj() * hw;
    }
    Ok(-2.0 * (acc * w0.dx).re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn potential_values() {
        assert_eq!(potential_eval(&LatticeSpec::single(4.0), 0.0), 4.0);
        let s = LatticeSpec { v1: 2.0, v2: 1.0, phi: PI };
        assert!((potential_eval(&s, 0.0) - 1.0).abs() < 1e-15);
        for &x in &[0.3, -2.0, 7.7] {
            assert!((s.potential(x + TAU) - s.potential(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn q_grid_covers_zone() {
        let q = q_grid(64);
        assert_eq!(q.len(), 64);
        assert!(q.iter().all(|&v| v > -0.5 && v <= 0.5));
        assert_eq!(*q.last().unwrap(), 0.5);
        assert!(q.contains(&0.0));
    }

    #[test]
    fn free_particle_bands() {
        let grid = q_grid(32);
        let (a, b) = bloch_bands(&LatticeSpec::single(0.0), 21, &grid).unwrap();
        for (j, q) in grid.iter().enumerate() {
            assert!((a.energies[j] - 4.0 * q * q).abs() < 1e-12);
            assert!((b.energies[j] - 4.0 * (1.0 - q.abs()).powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn band_symmetry_and_ordering() {
        let grid = q_grid(64);
        for spec in [
            LatticeSpec::single(4.0),
            LatticeSpec::superlattice(2.0, 1.5, PI),
            LatticeSpec::superlattice(2.0, 0.7, 0.0),
        ] {
            let (a, b) = bloch_bands(&spec, 31, &grid).unwrap();
            for (j, q) in grid.iter().enumerate() {
                assert!(b.energies[j] > a.energies[j]);
                if let Some(m) = grid.iter().position(|p| *p == -q) {
                    assert!((a.energies[j] - a.energies[m]).abs() < 1e-10);
                    assert!((b.energies[j] - b.energies[m]).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let grid = q_grid(32);
        assert!(bloch_bands(&LatticeSpec::single(4.0), 10, &grid).is_err());
        assert!(bloch_bands(&LatticeSpec::single(4.0), 9, &grid).is_err());
        assert!(bloch_bands(&LatticeSpec::single(-1.0), 21, &grid).is_err());
        assert!(bloch_bands(&LatticeSpec::single(4.0), 21, &[0.7]).is_err());
        let grids = LatticeGrids { cells: 12, ..LatticeGrids::default() };
        assert!(wannier(&LatticeSpec::single(4.0), Band::A, 0, &grids).is_err());
    }

    #[test]
    fn well_center_single_and_shifted() {
        assert!((well_center(&LatticeSpec::single(4.0)) - PI).abs() < 1e-6);
        // V₂ cos(2x + φ) alone with V₁ small shifts the minimum off π.
        let s = LatticeSpec::superlattice(2.0, 1.0, PI / 2.0);
        let xc = well_center(&s);
        let dv = -s.v1 * xc.sin() - 2.0 * s.v2 * (2.0 * xc + s.phi).sin();
        assert!(dv.abs() < 1e-6, "V'(x_c) = {dv}");
    }

    #[test]
    fn wannier_orthonormal_and_real() {
        let spec = LatticeSpec::single(4.0);
        let grids = LatticeGrids { cells: 41, ..LatticeGrids::default() };
        let w0 = wannier(&spec, Band::A, 0, &grids).unwrap();
        let w1 = wannier(&spec, Band::A, 1, &grids).unwrap();
        // Shift w1 onto w0's grid for the overlap.
        let p = grids.x_per_cell;
        let shifted = WannierFunction {
            values: (0..w0.values.len())
                .map(|i| if i >= p { w1.values[i - p] } else { C64::new(0.0, 0.0) })
                .collect(),
            ..w0.clone()
        };
        assert!((w0.overlap(&w0).re - 1.0).abs() < 1e-6);
        assert!(w0.overlap(&shifted).norm() < 1e-6);
        assert!(w0.max_imag() < 1e-8);
        let wb = wannier(&spec, Band::B, 0, &grids).unwrap();
        assert!((wb.overlap(&wb).re - 1.0).abs() < 1e-6);
        assert!(w0.overlap(&wb).norm() < 1e-6);
        assert!(wb.max_imag() < 1e-8);
        assert!(w0.edge_ratio(p) < 1e-6 && wb.edge_ratio(p) < 1e-6);
    }

    #[test]
    fn shallow_lattice_grows_q_grid() {
        // Band-B tails at V1 = 1 reach well beyond 32 cells.
        let p = extract_params(&LatticeSpec::single(1.0)).unwrap();
        let fine = LatticeGrids { q_points: 512, ..LatticeGrids::default() };
        let q = extract_params_with(&LatticeSpec::single(1.0), &fine).unwrap();
        assert!((p.c0 - q.c0).abs() < 1e-6 && (p.jb - q.jb).abs() < 1e-9);
    }

    #[test]
    fn superlattice_with_secondary_well() {
        // For φ = π and V₂ ≳ V₁/4 the upper band lives in the secondary well
        // half a cell away from the main one.
        let mut last = None;
        for i in 0..=20 {
            let v2 = 0.2 * i as f64;
            let p = extract_params(&LatticeSpec::superlattice(2.0, v2, PI)).unwrap();
            assert!(p.delta > 0.0 && p.c0 < 0.0, "{v2}: {p:?}");
            if let Some(prev) = last.replace(p.c0) {
                assert!((p.c0 - prev).abs() < 0.1, "jump at V2 = {v2}");
            }
        }
    }

    #[test]
    fn deep_lattice_hopping_suppressed() {
        let p10 = extract_params(&LatticeSpec::single(10.0)).unwrap();
        let p20 = extract_params(&LatticeSpec::single(20.0)).unwrap();
        assert!(p20.ja.abs() < p10.ja.abs());
        assert!(p20.jb.abs() < p10.jb.abs());
    }

    #[test]
    fn hopping_signs_and_gap() {
        for v in [1.0, 2.0, 4.0, 8.0] {
            let p = extract_params(&LatticeSpec::single(v)).unwrap();
            assert!(p.ja > 0.0 && p.jb < 0.0 && p.delta > 0.0, "{v}: {p:?}");
            assert!(p.c0 < 0.0);
        }
    }
}
