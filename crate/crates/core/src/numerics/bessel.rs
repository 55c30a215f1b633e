//! Integer-order Bessel functions of the first kind.
//!
//! Small arguments (`x² ≤ n + 1`) use the ascending power series; everything
//! else uses Miller's downward recurrence, normalized with the identity
//! `J₀(x) + 2 Σ_{k≥1} J_{2k}(x) = 1`.

use crate::error::{Error, Result};

/// Largest order accepted by [`bessel_j`].
pub const MAX_ORDER: i64 = 1_000_000;

const RESCALE_ABOVE: f64 = 1e250;
const RESCALE_BY: f64 = 1e-250;

/// `J_n(x)` for integer `n` and finite real `x`.
pub fn bessel_j(n: i64, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j: argument {x} is not finite")));
    }
    if n.abs() > MAX_ORDER {
        return Err(Error::Domain(format!("bessel_j: |order| {n} exceeds {MAX_ORDER}")));
    }
    let order = n.unsigned_abs();
    // J_{-n}(x) = (-1)^n J_n(x) and J_n(-x) = (-1)^n J_n(x).
    let flips = (n < 0) as u32 + (x < 0.0) as u32;
    let value = bessel_j_nonneg(order, x.abs());
    Ok(if order % 2 == 1 && flips % 2 == 1 { -value } else { value })
}

/// `[J_{-nmax}(x), …, J_{nmax}(x)]`, i.e. element `i` holds `J_{i - nmax}(x)`.
///
/// All orders come out of a single downward sweep, so this is the routine to
/// use for Bessel sums.
pub fn bessel_j_symmetric(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("bessel_j: argument {x} is not finite")));
    }
    if nmax as i64 > MAX_ORDER {
        return Err(Error::Domain(format!("bessel_j: |order| {nmax} exceeds {MAX_ORDER}")));
    }
    let positive = bessel_j_range(nmax, x.abs());
    let mut out = vec![0.0; 2 * nmax + 1];
    for (k, &v) in positive.iter().enumerate() {
        let odd = k % 2 == 1;
        out[nmax + k] = if odd && x < 0.0 { -v } else { v };
        // J_{-k}(x) = (-1)^k J_k(x)
        out[nmax - k] = if odd { -out[nmax + k] } else { out[nmax + k] };
    }
    Ok(out)
}

fn bessel_j_nonneg(n: u64, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if x * x <= (n + 1) as f64 {
        return ascending_series(n, x);
    }
    let start = miller_start(n, x);
    let mut target = 0.0;
    let mut next = 0.0;
    let mut cur = 1.0;
    let mut norm = if start % 2 == 0 { 2.0 } else { 0.0 };
    if start == n {
        target = cur;
    }
    for k in (1..=start).rev() {
        let prev = (2 * k) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx == n {
            target = cur;
        }
        if idx % 2 == 0 {
            norm += if idx == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            next *= RESCALE_BY;
            norm *= RESCALE_BY;
            target *= RESCALE_BY;
        }
    }
    target / norm
}

/// `J_0(x) … J_nmax(x)` for `x ≥ 0`.
fn bessel_j_range(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let start = miller_start(nmax as u64, x) as usize;
    let mut next = 0.0;
    let mut cur = 1.0;
    let mut norm = if start % 2 == 0 { 2.0 } else { 0.0 };
    if start <= nmax {
        out[start] = cur;
    }
    for k in (1..=start).rev() {
        let prev = (2 * k) as f64 / x * cur - next;
        next = cur;
        cur = prev;
        let idx = k - 1;
        if idx <= nmax {
            out[idx] = cur;
        }
        if idx % 2 == 0 {
            norm += if idx == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_BY;
            next *= RESCALE_BY;
            norm *= RESCALE_BY;
            for v in out.iter_mut().skip(idx) {
                *v *= RESCALE_BY;
            }
        }
    }
    for v in &mut out {
        *v /= norm;
    }
    out
}

/// Even starting index well above both the requested order and the turning
/// point `n ≈ x`, where the recurrence becomes dominated by `J_n`.
fn miller_start(n: u64, x: f64) -> u64 {
    let top = (n as f64).max(x.ceil());
    let start = top + 40.0 + 2.0 * top.sqrt();
    let start = start as u64;
    start + start % 2
}

fn ascending_series(n: u64, x: f64) -> f64 {
    let half = 0.5 * x;
    let log_lead = n as f64 * half.ln() - ln_factorial(n);
    if log_lead < -745.0 {
        return 0.0;
    }
    let q = half * half;
    let mut term = log_lead.exp();
    let mut sum = term;
    let mut m = 0u64;
    loop {
        m += 1;
        term *= -q / (m as f64 * (m + n) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() || m > 500 {
            break;
        }
    }
    sum
}

fn ln_factorial(n: u64) -> f64 {
    if n < 256 {
        (2..=n).map(|k| (k as f64).ln()).sum()
    } else {
        let x = n as f64;
        x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + 1.0 / (12.0 * x)
            - 1.0 / (360.0 * x * x * x)
    }
}
