//! Small dense complex matrices.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};

use num_complex::Complex64;
#[allow(unused_imports)] // float math resolves through this trait under no_std
use num_traits::Float;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![ZERO; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::config("matrix rows must form a square"));
        }
        Ok(CMatrix { n, data: rows.concat() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn set_identity(&mut self) {
        self.data.fill(ZERO);
        for i in 0..self.n {
            self.data[i * self.n + i] = ONE;
        }
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.n).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMatrix { n: self.n, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        CMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        CMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.n);
        matmul_into(&mut out, self, other);
        out
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest entry-wise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.dagger())
    }

    /// `max |U†U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        self.dagger().matmul(self).max_abs_diff(&Self::identity(self.n))
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.n, other.n);
        Self::from_fn(a * b, |i, j| self[(i / b, j / b)] * other[(i % b, j % b)])
    }

    /// Solves `self · X = rhs` by LU decomposition with partial pivoting.
    pub fn solve(&self, rhs: &Self) -> Result<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = rhs.data.clone();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&p, &q| a[p * n + col].norm().total_cmp(&a[q * n + col].norm()))
                .unwrap_or(col);
            if a[pivot * n + col].norm() == 0.0 {
                return Err(Error::Contract("singular matrix"));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot * n + j);
                    x.swap(col * n + j, pivot * n + j);
                }
            }
            let inv = ONE / a[col * n + col];
            for row in col + 1..n {
                let f = a[row * n + col] * inv;
                if f == ZERO {
                    continue;
                }
                for j in col..n {
                    let t = a[col * n + j];
                    a[row * n + j] -= f * t;
                }
                for j in 0..n {
                    let t = x[col * n + j];
                    x[row * n + j] -= f * t;
                }
            }
        }
        for col in (0..n).rev() {
            let inv = ONE / a[col * n + col];
            for j in 0..n {
                let mut s = x[col * n + j];
                for k in col + 1..n {
                    s -= a[col * n + k] * x[k * n + j];
                }
                x[col * n + j] = s * inv;
            }
        }
        Ok(CMatrix { n, data: x })
    }

    /// Matrix exponential by scaling and squaring with Padé approximants
    /// of degree 3 to 13.
    pub fn expm(&self) -> Result<Self> {
        if let Some(bad) = self.data.iter().find(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidMetric(if bad.re.is_finite() { bad.im } else { bad.re }));
        }
        let n = self.n;
        let norm = self.norm_one();
        let ident = Self::identity(n);
        for (theta, coeffs) in PADE_LOW {
            if norm <= *theta {
                return pade_low(self, coeffs, &ident);
            }
        }
        let s = if norm > THETA_13 { (norm / THETA_13).log2().ceil() as i32 } else { 0 };
        let a = self.scale(Complex64::new(2f64.powi(-s), 0.0));
        let mut r = pade13(&a, &ident)?;
        let mut tmp = Self::zeros(n);
        for _ in 0..s {
            matmul_into(&mut tmp, &r, &r);
            core::mem::swap(&mut r, &mut tmp);
        }
        Ok(r)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.n + j]
    }
}

/// `out = a · b`.
#[inline]
pub fn matmul_into(out: &mut CMatrix, a: &CMatrix, b: &CMatrix) {
    let n = a.n;
    debug_assert!(b.n == n && out.n == n);
    let (ad, bd) = (&a.data[..n * n], &b.data[..n * n]);
    let od = &mut out.data[..n * n];
    od.fill(ZERO);
    for i in 0..n {
        let row = &mut od[i * n..(i + 1) * n];
        for k in 0..n {
            let aik = ad[i * n + k];
            let brow = &bd[k * n..(k + 1) * n];
            for (o, &bkj) in row.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
    }
}

/// `|tr(a† b)|`, without forming the product.
pub fn trace_overlap(a: &CMatrix, b: &CMatrix) -> f64 {
    a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum::<Complex64>().norm()
}

const THETA_13: f64 = 5.371_920_351_148_152;

const PADE_LOW: &[(f64, &[f64])] = &[
    (1.495_585_217_958_292e-2, &[120.0, 60.0, 12.0, 1.0]),
    (2.539_398_330_063_230e-1, &[30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0]),
    (9.504_178_996_162_932e-1, &[17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0]),
    (
        2.097_847_961_257_068,
        &[
            17643225600.0,
            8821612800.0,
            2075673600.0,
            302702400.0,
            30270240.0,
            2162160.0,
            110880.0,
            3960.0,
            90.0,
            1.0,
        ],
    ),
];

const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn axpy(acc: &mut CMatrix, s: f64, m: &CMatrix) {
    for (a, x) in acc.data.iter_mut().zip(&m.data) {
        *a += x * s;
    }
}

fn finish(u: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    v.sub(u).solve(&v.add(u))
}

fn pade_low(a: &CMatrix, b: &[f64], ident: &CMatrix) -> Result<CMatrix> {
    let a2 = a.matmul(a);
    let mut powers = vec![ident.clone()];
    for _ in 1..b.len() / 2 {
        let next = powers[powers.len() - 1].matmul(&a2);
        powers.push(next);
    }
    let mut u_inner = CMatrix::zeros(a.n);
    let mut v = CMatrix::zeros(a.n);
    for (j, p) in powers.iter().enumerate() {
        axpy(&mut u_inner, b[2 * j + 1], p);
        axpy(&mut v, b[2 * j], p);
    }
    finish(&a.matmul(&u_inner), &v)
}

fn pade13(a: &CMatrix, ident: &CMatrix) -> Result<CMatrix> {
    let b = &PADE_13;
    let a2 = a.matmul(a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);
    let n = a.n;

    let mut u_hi = CMatrix::zeros(n);
    axpy(&mut u_hi, b[13], &a6);
    axpy(&mut u_hi, b[11], &a4);
    axpy(&mut u_hi, b[9], &a2);
    let mut u_inner = a6.matmul(&u_hi);
    axpy(&mut u_inner, b[7], &a6);
    axpy(&mut u_inner, b[5], &a4);
    axpy(&mut u_inner, b[3], &a2);
    axpy(&mut u_inner, b[1], ident);
    let u = a.matmul(&u_inner);

    let mut v_hi = CMatrix::zeros(n);
    axpy(&mut v_hi, b[12], &a6);
    axpy(&mut v_hi, b[10], &a4);
    axpy(&mut v_hi, b[8], &a2);
    let mut v = a6.matmul(&v_hi);
    axpy(&mut v, b[6], &a6);
    axpy(&mut v, b[4], &a4);
    axpy(&mut v, b[2], &a2);
    axpy(&mut v, b[0], ident);
    finish(&u, &v)
}
