//! Dense Hermitian eigensolver: Householder reduction to a real symmetric
//! tridiagonal matrix followed by implicit QL iterations with Wilkinson-style
//! shifts. Intended for the small matrices of this crate (a few hundred rows
//! at most).

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::HermitianMatrix;

const MAX_QL_ITERATIONS: usize = 60;

/// Eigen-decomposition `H = V Λ V†`.
#[derive(Clone, Debug)]
pub struct Eigh {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// `vectors[j]` is the normalized eigenvector belonging to `values[j]`.
    pub vectors: Vec<Vec<C64>>,
}

pub fn eigh(h: &HermitianMatrix) -> Result<Eigh> {
    let n = h.dim();
    let (mut a, _) = working_copy(h)?;
    let mut q: Vec<C64> = (0..n * n)
        .map(|k| if k / n == k % n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
        .collect();

    householder_tridiagonalize(n, &mut a, Some(&mut q), None);
    let (mut diag, mut off, phase) = real_tridiagonal(n, &a);
    for row in 0..n {
        for col in 0..n {
            q[row * n + col] *= phase[col];
        }
    }

    tql_implicit(n, &mut diag, &mut off, &mut q)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| diag[i].total_cmp(&diag[j]));
    let values = order.iter().map(|&j| diag[j]).collect();
    let vectors = order.iter().map(|&j| (0..n).map(|row| q[row * n + j]).collect()).collect();
    Ok(Eigh { values, vectors })
}

/// The `count` lowest eigenpairs only. Eigenvalues come from QL without
/// vector accumulation, eigenvectors from inverse iteration on the
/// tridiagonal form; much cheaper than [`eigh`] when `count ≪ n`.
pub fn eigh_lowest(h: &HermitianMatrix, count: usize) -> Result<Eigh> {
    let n = h.dim();
    if count == 0 || count > n {
        return Err(Error::Domain(format!("eigh_lowest: count {count} outside 1..={n}")));
    }
    let (mut a, norm) = working_copy(h)?;
    let mut reflectors = Vec::with_capacity(n);
    householder_tridiagonalize(n, &mut a, None, Some(&mut reflectors));
    let (diag, off, phase) = real_tridiagonal(n, &a);

    let mut d = diag.clone();
    let mut e = off.clone();
    tql_implicit(n, &mut d, &mut e, &mut [])?;
    d.sort_by(f64::total_cmp);
    let values: Vec<f64> = d[..count].to_vec();

    // e[i] couples i-1 and i in `off`; shift to "couples i and i+1".
    let sub: Vec<f64> = (1..n).map(|i| off[i]).collect();
    let scale = norm.max(f64::MIN_POSITIVE);
    let mut tri_vectors: Vec<Vec<f64>> = Vec::with_capacity(count);
    for &lambda in &values {
        let shift = lambda + 4.0 * f64::EPSILON * scale;
        let mut y: Vec<f64> = (0..n).map(|i| 1.0 + 0.01 * i as f64).collect();
        for _ in 0..3 {
            y = solve_shifted_tridiagonal(&diag, &sub, shift, &y, scale);
            for prev in &tri_vectors {
                let dot: f64 = prev.iter().zip(&y).map(|(p, v)| p * v).sum();
                for (v, p) in y.iter_mut().zip(prev) {
                    *v -= dot * p;
                }
            }
            let nrm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(nrm > 0.0 && nrm.is_finite()) {
                return Err(Error::ContractViolation("eigh_lowest: inverse iteration failed".into()));
            }
            for v in &mut y {
                *v /= nrm;
            }
        }
        tri_vectors.push(y);
    }

    // x = P_0 P_1 … P_last D y
    let vectors = tri_vectors
        .into_iter()
        .map(|y| {
            let mut x: Vec<C64> = y.iter().zip(&phase).map(|(v, p)| p * *v).collect();
            for r in reflectors.iter().rev() {
                r.apply(&mut x);
            }
            x
        })
        .collect();
    Ok(Eigh { values, vectors })
}

fn working_copy(h: &HermitianMatrix) -> Result<(Vec<C64>, f64)> {
    let n = h.dim();
    let norm = h.frobenius_norm();
    if !norm.is_finite() {
        return Err(Error::ContractViolation("matrix has non-finite entries".into()));
    }
    Ok(((0..n * n).map(|k| h[(k / n, k % n)]).collect(), norm))
}

/// Diagonal, sub-diagonal magnitudes (`off[i]` couples `i-1` and `i`) and the
/// basis phases that make the Householder tridiagonal form real.
fn real_tridiagonal(n: usize, a: &[C64]) -> (Vec<f64>, Vec<f64>, Vec<C64>) {
    let diag: Vec<f64> = (0..n).map(|i| a[i * n + i].re).collect();
    let mut off = vec![0.0; n];
    let mut phase = vec![C64::new(1.0, 0.0); n];
    for i in 1..n {
        let s = a[i * n + i - 1];
        let r = s.norm();
        off[i] = r;
        // Basis vector i is multiplied by phase[i] so that the entry becomes r.
        phase[i] = if r > 0.0 { phase[i - 1] * (s / r) } else { phase[i - 1] };
    }
    (diag, off, phase)
}

/// Householder reflector `I − β v v†` with `v` supported on `start..`.
struct Reflector {
    start: usize,
    v: Vec<C64>,
    beta: f64,
}

impl Reflector {
    fn apply(&self, x: &mut [C64]) {
        let tail = &mut x[self.start..];
        let dot: C64 = self.v.iter().zip(tail.iter()).map(|(v, x)| v.conj() * x).sum();
        let s = dot * self.beta;
        for (xi, vi) in tail.iter_mut().zip(&self.v) {
            *xi -= s * vi;
        }
    }
}

/// Solves `(T − σ) x = b` for the real symmetric tridiagonal `T` (diagonal
/// `d`, off-diagonal `e[i]` between `i` and `i+1`) by Gaussian elimination
/// with partial pivoting. Zero pivots are replaced by `ε·scale`, which is
/// what inverse iteration wants.
fn solve_shifted_tridiagonal(d: &[f64], e: &[f64], sigma: f64, b: &[f64], scale: f64) -> Vec<f64> {
    let n = d.len();
    let tiny = f64::EPSILON * scale;
    let mut u = vec![[0.0f64; 3]; n];
    let mut y = vec![0.0; n];
    let mut cur = [d[0] - sigma, if n > 1 { e[0] } else { 0.0 }, 0.0];
    let mut cur_rhs = b[0];
    for i in 0..n - 1 {
        let mut nxt = [e[i], d[i + 1] - sigma, if i + 2 < n { e[i + 1] } else { 0.0 }];
        let mut nxt_rhs = b[i + 1];
        if nxt[0].abs() > cur[0].abs() {
            std::mem::swap(&mut cur, &mut nxt);
            std::mem::swap(&mut cur_rhs, &mut nxt_rhs);
        }
        if cur[0] == 0.0 {
            cur[0] = tiny;
        }
        let f = nxt[0] / cur[0];
        u[i] = cur;
        y[i] = cur_rhs;
        cur = [nxt[1] - f * cur[1], nxt[2] - f * cur[2], 0.0];
        cur_rhs = nxt_rhs - f * cur_rhs;
    }
    if cur[0] == 0.0 {
        cur[0] = tiny;
    }
    u[n - 1] = cur;
    y[n - 1] = cur_rhs;
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        if i + 1 < n {
            s -= u[i][1] * x[i + 1];
        }
        if i + 2 < n {
            s -= u[i][2] * x[i + 2];
        }
        x[i] = s / u[i][0];
    }
    x
}

/// Reduces `a` (Hermitian, row-major) to tridiagonal form `a ← P† a P`,
/// optionally accumulating `q ← q P` and/or recording the reflectors.
fn householder_tridiagonalize(
    n: usize,
    a: &mut [C64],
    mut q: Option<&mut [C64]>,
    mut reflectors: Option<&mut Vec<Reflector>>,
) {
    let zero = C64::new(0.0, 0.0);
    let mut v = vec![zero; n];
    let mut p = vec![zero; n];
    let mut w = vec![zero; n];
    for k in 0..n.saturating_sub(2) {
        let sigma: f64 = (k + 2..n).map(|i| a[i * n + k].norm_sqr()).sum();
        if sigma == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let xnorm = (x0.norm_sqr() + sigma).sqrt();
        let unit = if x0.norm() > 0.0 { x0 / x0.norm() } else { C64::new(1.0, 0.0) };
        let alpha = -unit * xnorm;

        // v = x - alpha e1, restricted to rows k+1..n
        for vi in v.iter_mut() {
            *vi = zero;
        }
        v[k + 1] = x0 - alpha;
        for i in k + 2..n {
            v[i] = a[i * n + k];
        }
        let vnorm2: f64 = v[k + 1..].iter().map(|z| z.norm_sqr()).sum();
        if vnorm2 == 0.0 {
            continue;
        }
        let beta = 2.0 / vnorm2;

        // Two-sided update A ← (I − β v v†) A (I − β v v†).
        // p = β A v ; K = β/2 v† p ; w = p − K v ; A ← A − v w† − w v†
        // Rows/columns before k are already tridiagonal and untouched.
        for i in k..n {
            let mut s = zero;
            for j in k + 1..n {
                s += a[i * n + j] * v[j];
            }
            p[i] = s * beta;
        }
        let mut kk = zero;
        for i in k + 1..n {
            kk += v[i].conj() * p[i];
        }
        let kk = kk * (0.5 * beta);
        for i in k..n {
            w[i] = p[i] - kk * v[i];
        }
        for i in k..n {
            let (vi, wi) = (v[i], w[i]);
            let row = &mut a[i * n..(i + 1) * n];
            for j in k..n {
                row[j] -= vi * w[j].conj() + wi * v[j].conj();
            }
        }
        // Clean the annihilated column/row exactly.
        a[(k + 1) * n + k] = alpha;
        a[k * n + k + 1] = alpha.conj();
        for i in k + 2..n {
            a[i * n + k] = zero;
            a[k * n + i] = zero;
        }

        if let Some(list) = reflectors.as_deref_mut() {
            list.push(Reflector { start: k + 1, v: v[k + 1..].to_vec(), beta });
        }
        let Some(q) = q.as_deref_mut() else { continue };
        // q ← q (I − β v v†)
        for row in 0..n {
            let mut s = zero;
            for j in k + 1..n {
                s += q[row * n + j] * v[j];
            }
            let s = s * beta;
            for j in k + 1..n {
                q[row * n + j] -= s * v[j].conj();
            }
        }
    }
}

/// Implicit QL on the real symmetric tridiagonal matrix with diagonal `d` and
/// sub-diagonal `e` (`e[i]` couples `i-1` and `i`). Rotations are applied to
/// the columns of `z`.
fn tql_implicit(n: usize, d: &mut [f64], e: &mut [f64], z: &mut [C64]) -> Result<()> {
    if n < 2 {
        return Ok(());
    }
    // Shift so that e[i] couples i and i+1.
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::ContractViolation(format!(
                    "eigh: QL iteration did not converge for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                for row in 0..z.len() / n {
                    let zi1 = z[row * n + i + 1];
                    let zi = z[row * n + i];
                    z[row * n + i + 1] = zi * s + zi1 * c;
                    z[row * n + i] = zi * c - zi1 * s;
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}
