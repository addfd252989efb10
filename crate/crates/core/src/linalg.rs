//! Dense complex linear algebra sized for radar snapshots (m around 16).
//!
//! Only what the detectors need: Hermitian matrices, Cholesky factors,
//! triangular solves and `x^H A^{-1} y` quadratic forms. All O(m^3) dense.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Index, IndexMut};


use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// A complex m-vector (a snapshot, a steering vector, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVec(Vec<C64>);

impl ComplexVec {
    pub fn new(data: Vec<C64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("complex vector"));
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("complex vector"));
        }
        Ok(Self(data))
    }

    /// Construct without validation. Callers guarantee non-empty finite data.
    pub(crate) fn from_raw(data: Vec<C64>) -> Self {
        Self(data)
    }

    pub fn zeros(m: usize) -> Self {
        Self(vec![C64::new(0.0, 0.0); m])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.0
    }

    pub fn into_inner(self) -> Vec<C64> {
        self.0
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `self^H other`
    pub fn inner(&self, other: &ComplexVec) -> C64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scaled(&self, s: C64) -> ComplexVec {
        ComplexVec(self.0.iter().map(|c| c * s).collect())
    }
}

impl Index<usize> for ComplexVec {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for ComplexVec {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.0[i]
    }
}

/// Square complex matrix kept exactly Hermitian: every constructor averages
/// `A` and `A^H`.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMat {
    m: usize,
    data: Vec<C64>,
}

impl HermitianMat {
    /// Build from row-major data, symmetrizing as `(A + A^H) / 2`.
    pub fn from_row_major(m: usize, data: Vec<C64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Empty("matrix"));
        }
        if data.len() != m * m {
            return Err(Error::DimensionMismatch {
                expected: m * m,
                found: data.len(),
            });
        }
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        let mut out = Self { m, data };
        out.symmetrize();
        Ok(out)
    }

    pub fn from_fn(m: usize, mut f: impl FnMut(usize, usize) -> C64) -> Result<Self> {
        let mut data = Vec::with_capacity(m * m);
        for i in 0..m {
            for j in 0..m {
                data.push(f(i, j));
            }
        }
        Self::from_row_major(m, data)
    }

    pub fn identity(m: usize) -> Self {
        Self::scaled_identity(m, 1.0)
    }

    pub fn scaled_identity(m: usize, s: f64) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); m * m];
        for i in 0..m {
            data[i * m + i] = C64::new(s, 0.0);
        }
        Self { m, data }
    }

    /// Internal constructor for data that is Hermitian by construction
    /// (outer-product sums filled on both triangles).
    pub(crate) fn from_hermitian_raw(m: usize, data: Vec<C64>) -> Self {
        debug_assert_eq!(data.len(), m * m);
        Self { m, data }
    }

    fn symmetrize(&mut self) {
        let m = self.m;
        for i in 0..m {
            let d = &mut self.data[i * m + i];
            *d = C64::new(d.re, 0.0);
            for j in (i + 1)..m {
                let avg = (self.data[i * m + j] + self.data[j * m + i].conj()) * 0.5;
                self.data[i * m + j] = avg;
                self.data[j * m + i] = avg.conj();
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.m + j]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.m).map(|i| self.data[i * self.m + i].re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.data {
            *c *= s;
        }
    }

    /// `self + s * I`
    pub fn add_diagonal(&self, s: f64) -> HermitianMat {
        let mut out = self.clone();
        for i in 0..self.m {
            out.data[i * self.m + i].re += s;
        }
        out
    }

    pub fn mul_vec(&self, x: &ComplexVec) -> Result<ComplexVec> {
        check_dim(self.m, x.len())?;
        let m = self.m;
        let out = (0..m)
            .map(|i| {
                self.data[i * m..(i + 1) * m]
                    .iter()
                    .zip(x.as_slice())
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        Ok(ComplexVec::from_raw(out))
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &HermitianMat) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn cholesky(&self) -> Result<Cholesky> {
        Cholesky::factor(self)
    }
}

/// Toeplitz correlation matrix with entries `rho^|i-j|`.
pub fn toeplitz(rho: f64, m: usize) -> Result<HermitianMat> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid("rho", "must lie in [0, 1)"));
    }
    if m == 0 {
        return Err(Error::invalid("m", "must be at least 1"));
    }
    let mut data = vec![C64::new(0.0, 0.0); m * m];
    for i in 0..m {
        for j in 0..m {
            let k = i.abs_diff(j) as i32;
            data[i * m + j] = C64::new(if k == 0 { 1.0 } else { rho.powi(k) }, 0.0);
        }
    }
    Ok(HermitianMat { m, data })
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Lower-triangular Cholesky factor `L` with `L L^H = A` and a real positive
/// diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct Cholesky {
    m: usize,
    l: Vec<C64>,
}

impl Cholesky {
    pub fn factor(a: &HermitianMat) -> Result<Self> {
        let m = a.m;
        let mut l = vec![C64::new(0.0, 0.0); m * m];
        for j in 0..m {
            let row_j = j * m;
            let mut d = a.data[row_j + j].re;
            for k in 0..j {
                d -= l[row_j + k].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: j });
            }
            let djj = d.sqrt();
            l[row_j + j] = C64::new(djj, 0.0);
            let inv = 1.0 / djj;
            for i in (j + 1)..m {
                let row_i = i * m;
                let mut s = a.data[row_i + j];
                for k in 0..j {
                    s -= l[row_i + k] * l[row_j + k].conj();
                }
                l[row_i + j] = s * inv;
            }
        }
        Ok(Self { m, l })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Row-major lower factor.
    pub fn lower(&self) -> &[C64] {
        &self.l
    }

    /// `L L^H`
    pub fn reconstruct(&self) -> HermitianMat {
        let m = self.m;
        let mut data = vec![C64::new(0.0, 0.0); m * m];
        for i in 0..m {
            for j in 0..=i {
                let s: C64 = (0..=j)
                    .map(|k| self.l[i * m + k] * self.l[j * m + k].conj())
                    .sum();
                data[i * m + j] = s;
                data[j * m + i] = s.conj();
            }
        }
        HermitianMat::from_hermitian_raw(m, data)
    }

    /// `L x` (used to color white noise).
    pub fn mul_lower(&self, x: &[C64], out: &mut [C64]) {
        let m = self.m;
        for i in 0..m {
            let row = &self.l[i * m..i * m + i + 1];
            out[i] = row.iter().zip(&x[..=i]).map(|(a, b)| a * b).sum();
        }
    }

    /// Solve `L y = b` in place.
    pub fn forward_in_place(&self, b: &mut [C64]) {
        let m = self.m;
        for i in 0..m {
            let row = &self.l[i * m..i * m + i];
            let s: C64 = row.iter().zip(&b[..i]).map(|(a, x)| a * x).sum();
            b[i] = (b[i] - s) / self.l[i * m + i].re;
        }
    }

    /// Solve `L^H x = y` in place.
    pub fn backward_in_place(&self, y: &mut [C64]) {
        let m = self.m;
        for i in (0..m).rev() {
            let mut s = y[i];
            for k in (i + 1)..m {
                s -= self.l[k * m + i].conj() * y[k];
            }
            y[i] = s / self.l[i * m + i].re;
        }
    }

    /// `L^{-1} b`
    pub fn whiten(&self, b: &ComplexVec) -> Result<ComplexVec> {
        check_dim(self.m, b.len())?;
        let mut y = b.clone();
        self.forward_in_place(y.as_mut_slice());
        Ok(y)
    }

    /// `A^{-1} b` via two triangular solves.
    pub fn solve(&self, b: &ComplexVec) -> Result<ComplexVec> {
        let mut y = self.whiten(b)?;
        self.backward_in_place(y.as_mut_slice());
        Ok(y)
    }

    /// `x^H A^{-1} y`
    pub fn quad_form(&self, x: &ComplexVec, y: &ComplexVec) -> Result<C64> {
        let wx = self.whiten(x)?;
        let wy = self.whiten(y)?;
        Ok(wx.inner(&wy))
    }

    /// `x^H A^{-1} x = ||L^{-1} x||^2`, real by construction.
    pub fn quad_form_self(&self, x: &ComplexVec) -> Result<f64> {
        Ok(self.whiten(x)?.norm_sqr())
    }
}

/// Solve `A x = b` for Hermitian positive definite `A`.
pub fn solve_hpd(a: &HermitianMat, b: &ComplexVec) -> Result<ComplexVec> {
    check_dim(a.m, b.len())?;
    a.cholesky()?.solve(b)
}

/// `x^H A^{-1} y` through one factorization and two triangular solves.
pub fn quad_form(a: &HermitianMat, x: &ComplexVec, y: &ComplexVec) -> Result<C64> {
    check_dim(a.m, x.len())?;
    check_dim(a.m, y.len())?;
    a.cholesky()?.quad_form(x, y)
}
