//! Small dense square matrices over any [`Scalar`].
//!
//! Group elements are `Mat<Complex64>`; evaluating a function along a frame
//! curve needs `Mat<Jet2<..>>`, which is why this is not just an alias for a
//! linear-algebra crate type. Factorizations are delegated to `nalgebra`.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major `n × n` matrix; indices are 0-based.
#[derive(Clone, PartialEq)]
pub struct Mat<S> {
    n: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(n: usize) -> Self {
        Mat {
            n,
            data: vec![S::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Mat::from_fn(n, |i, j| if i == j { S::one() } else { S::zero() })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Mat { n, data }
    }

    /// Builds from rows; every row must have as many entries as there are rows.
    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Mat { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Mat<T> {
        Mat {
            n: self.n,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.n, |i, j| self[(j, i)].clone())
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        let n = self.n;
        Ok(Mat::from_fn(n, |i, j| {
            let mut acc = S::zero();
            for k in 0..n {
                acc = acc + self[(i, k)].clone() * rhs[(k, j)].clone();
            }
            acc
        }))
    }

    /// Product with a complex matrix on the right, skipping its zero entries.
    pub fn mul_complex(&self, rhs: &Mat<Complex64>) -> Result<Self> {
        if self.n != rhs.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: rhs.n,
            });
        }
        let n = self.n;
        let mut out: Mat<S> = Mat::zeros(n);
        for k in 0..n {
            for j in 0..n {
                let c = rhs[(k, j)];
                if c == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for i in 0..n {
                    let term = self[(i, k)].scale(c);
                    out[(i, j)] = out[(i, j)].clone() + term;
                }
            }
        }
        Ok(out)
    }

    pub fn add(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(self.zip(rhs, |a, b| a.clone() + b.clone()))
    }

    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.check_dim(rhs)?;
        Ok(self.zip(rhs, |a, b| a.clone() - b.clone()))
    }

    pub fn scale(&self, c: Complex64) -> Self {
        self.map(|x| x.scale(c))
    }

    pub fn trace(&self) -> S {
        (0..self.n).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    fn zip(&self, rhs: &Self, f: impl Fn(&S, &S) -> S) -> Self {
        Mat {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(a, b)).collect(),
        }
    }

    fn check_dim(&self, rhs: &Self) -> Result<()> {
        if self.n == rhs.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n,
                found: rhs.n,
            })
        }
    }
}

impl<S> Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.n + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.n + j]
    }
}

impl<S: fmt::Debug> fmt::Debug for Mat<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[S]> = self.data.chunks(self.n.max(1)).collect();
        f.debug_list().entries(rows).finish()
    }
}

impl Mat<Complex64> {
    pub fn from_real_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        Mat::from_fn(n, |i, j| Complex64::new(f(i, j), 0.0))
    }

    pub fn conj(&self) -> Self {
        self.map(|x| x.conj())
    }

    pub fn adjoint(&self) -> Self {
        self.transpose().conj()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.data.iter().map(|x| x.im.abs()).fold(0.0, f64::max)
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self[(i, j)])
    }

    pub fn from_nalgebra(m: &DMatrix<Complex64>) -> Self {
        Mat::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    pub fn determinant(&self) -> Complex64 {
        self.to_nalgebra().determinant()
    }

    /// Full matrix exponential.
    pub fn exp(&self) -> Self {
        Mat::from_nalgebra(&self.to_nalgebra().exp())
    }

    /// `Re tr(Z W*)`.
    pub fn inner(&self, w: &Self) -> f64 {
        self.data.iter().zip(&w.data).map(|(a, b)| (a * b.conj()).re).sum()
    }

    /// `Re tr(Z W)`.
    pub fn trace_form(&self, w: &Self) -> f64 {
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            for k in 0..n {
                acc += (self[(i, k)] * w[(k, i)]).re;
            }
        }
        acc
    }

    /// Commutator `[A, B] = AB - BA`.
    pub fn bracket(&self, b: &Self) -> Result<Self> {
        self.matmul(b)?.sub(&b.matmul(self)?)
    }

    pub fn is_zero_within(&self, tol: f64) -> bool {
        self.max_abs() <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn product_and_complex_product_agree() {
        let a = Mat::from_fn(3, |i, j| c(i as f64 + 0.5, j as f64 - 1.0));
        let b = Mat::from_fn(3, |i, j| c((i * j) as f64, 0.25 * i as f64));
        let p1 = a.matmul(&b).unwrap();
        let p2 = a.mul_complex(&b).unwrap();
        assert!(p1.sub(&p2).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn determinant_and_exp() {
        let d = Mat::from_real_fn(2, |i, j| if i == j { 2.0 } else { 0.0 });
        assert!((d.determinant() - c(4.0, 0.0)).norm() < 1e-14);
        let z = Mat::from_real_fn(2, |i, j| match (i, j) {
            (0, 1) => -1.0,
            (1, 0) => 1.0,
            _ => 0.0,
        });
        let r = z.scale(c(0.3, 0.0)).exp();
        assert!((r[(0, 0)] - c(0.3f64.cos(), 0.0)).norm() < 1e-14);
        assert!((r[(1, 0)] - c(0.3f64.sin(), 0.0)).norm() < 1e-14);
    }

    #[test]
    fn inner_products() {
        let z = Mat::from_fn(2, |i, j| c(i as f64, j as f64));
        assert!((z.inner(&z) - 4.0).abs() < 1e-15);
        let y = Mat::from_real_fn(2, |i, j| match (i, j) {
            (0, 1) => 1.0,
            (1, 0) => -1.0,
            _ => 0.0,
        });
        assert_eq!(y.trace_form(&y), -2.0);
        assert_eq!(y.inner(&y), 2.0);
    }

    #[test]
    fn dimension_errors() {
        let a: Mat<Complex64> = Mat::identity(2);
        let b: Mat<Complex64> = Mat::identity(3);
        assert_eq!(
            a.matmul(&b).unwrap_err(),
            Error::DimensionMismatch { expected: 2, found: 3 }
        );
        assert!(Mat::from_rows(vec![vec![c(1.0, 0.0)], vec![]]).is_err());
    }
}
