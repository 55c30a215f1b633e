//! Small complex linear-algebra containers shared by the solvers.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Amplitude pair `(a, b)` of the lower and upper band at one quasimomentum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexVector2 {
    pub a: C64,
    pub b: C64,
}

impl ComplexVector2 {
    pub const fn new(a: C64, b: C64) -> Self {
        Self { a, b }
    }

    /// The state fully in the lower band.
    pub fn lower() -> Self {
        Self::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn zero() -> Self {
        Self::new(C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.a.norm_sqr() + self.b.norm_sqr()
    }

    pub fn upper_occupation(&self) -> f64 {
        self.b.norm_sqr()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.a * s, self.b * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.norm().max(self.b.norm())
    }
}

impl Add for ComplexVector2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.a + rhs.a, self.b + rhs.b)
    }
}

impl Sub for ComplexVector2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.a - rhs.a, self.b - rhs.b)
    }
}

impl Mul<f64> for ComplexVector2 {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        Self::new(self.a * rhs, self.b * rhs)
    }
}

/// Dense 2×2 complex matrix, row-major: `[[m00, m01], [m10, m11]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix2(pub [[C64; 2]; 2]);

impl Matrix2 {
    pub fn new(m00: C64, m01: C64, m10: C64, m11: C64) -> Self {
        Self([[m00, m01], [m10, m11]])
    }

    pub fn from_real(m00: f64, m01: f64, m10: f64, m11: f64) -> Self {
        Self::new(m00.into(), m01.into(), m10.into(), m11.into())
    }

    pub fn zero() -> Self {
        Self::from_real(0.0, 0.0, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        Self::from_real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn apply(&self, v: &ComplexVector2) -> ComplexVector2 {
        let m = &self.0;
        ComplexVector2::new(m[0][0] * v.a + m[0][1] * v.b, m[1][0] * v.a + m[1][1] * v.b)
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    /// Largest absolute entry difference.
    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                d = d.max((self.0[i][j] - rhs.0[i][j]).norm());
            }
        }
        d
    }
}

impl Add for Matrix2 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self::new(a[0][0] + b[0][0], a[0][1] + b[0][1], a[1][0] + b[1][0], a[1][1] + b[1][1])
    }
}

impl Sub for Matrix2 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        Self::new(a[0][0] - b[0][0], a[0][1] - b[0][1], a[1][0] - b[1][0], a[1][1] - b[1][1])
    }
}

/// Square complex matrix that is conjugate-symmetric with an exactly real
/// diagonal. Stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![C64::new(0.0, 0.0); dim * dim] }
    }

    /// Validates conjugate symmetry (up to `1e-12·‖H‖`) and symmetrizes the
    /// input exactly. Diagonal imaginary parts are dropped.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::ContractViolation("matrix dimension must be >= 1".into()));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::ContractViolation("matrix is not square".into()));
        }
        let mut m = Self::zeros(dim);
        for (i, r) in rows.iter().enumerate() {
            for (j, v) in r.iter().enumerate() {
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::ContractViolation(format!("entry ({i},{j}) is not finite")));
                }
                m.data[i * dim + j] = *v;
            }
        }
        m.hermitize()?;
        Ok(m)
    }

    /// Builds the matrix from its lower triangle (including the diagonal).
    pub fn from_lower(dim: usize, mut entry: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = C64::new(entry(i, i).re, 0.0);
            for j in 0..i {
                let v = entry(i, j);
                m.data[i * dim + j] = v;
                m.data[j * dim + i] = v.conj();
            }
        }
        m
    }

    pub fn from_matrix2(m: &Matrix2) -> Result<Self> {
        Self::from_rows(&[m.0[0].to_vec(), m.0[1].to_vec()])
    }

    fn hermitize(&mut self) -> Result<()> {
        let n = self.dim;
        let scale = self.frobenius_norm();
        let mut asym: f64 = 0.0;
        for i in 0..n {
            asym = asym.max(self.data[i * n + i].im.abs());
            for j in 0..i {
                asym = asym.max((self.data[i * n + j] - self.data[j * n + i].conj()).norm());
            }
        }
        if asym > 1e-12 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::ContractViolation(format!(
                "matrix is not Hermitian: asymmetry {asym:e} vs norm {scale:e}"
            )));
        }
        for i in 0..n {
            self.data[i * n + i].im = 0.0;
            for j in 0..i {
                let avg = 0.5 * (self.data[i * n + j] + self.data[j * n + i].conj());
                self.data[i * n + j] = avg;
                self.data[j * n + i] = avg.conj();
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).sum()
    }

    /// `H·v`.
    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        let n = self.dim;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(v).map(|(h, x)| h * x).sum())
            .collect()
    }

    pub fn to_matrix2(&self) -> Option<Matrix2> {
        (self.dim == 2).then(|| Matrix2::new(self[(0, 0)], self[(0, 1)], self[(1, 0)], self[(1, 1)]))
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

/// Mutable access bypasses the symmetry bookkeeping; only used internally by
/// the solvers, which restore Hermiticity themselves.
impl IndexMut<(usize, usize)> for HermitianMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}
