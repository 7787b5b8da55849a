//! Small dense matrices for the n×n coefficients of the delay system.
//!
//! `n` is the state dimension of the delay equation and is small in practice
//! (1 to 3), so the generic part is a plain row-major buffer. Symmetric
//! eigen-decompositions for covariance matrices live in [`sym`] and are f64 only.

use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major `n × n` matrix.
#[derive(Clone, PartialEq)]
pub struct SquareMatrix<T: Real = f64> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> fmt::Debug for SquareMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[T]> = self.data.chunks(self.n).collect();
        f.debug_struct("SquareMatrix").field("n", &self.n).field("rows", &rows).finish()
    }
}

impl<T: Real> SquareMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scalar(n, T::one())
    }

    /// `v · I`.
    pub fn scalar(n: usize, v: T) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = v;
        }
        m
    }

    pub fn from_diagonal(diag: &[T]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds from rows; every row must have the same length as the number of rows.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::Invalid("matrix must have n ≥ 1".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        let m = Self { n, data };
        if !m.is_finite() {
            return Err(Error::Invalid("matrix entries must be finite".into()));
        }
        Ok(m)
    }

    pub fn from_row_major(n: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != n * n || n == 0 {
            return Err(Error::Dimension {
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.n + j] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| *v == T::zero())
    }

    /// `out += self · v`.
    #[inline]
    pub fn mul_vec_acc(&self, v: &[T], out: &mut [T]) {
        debug_assert_eq!(v.len(), self.n);
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut acc = T::zero();
            for (a, b) in row.iter().zip(v) {
                acc = acc + *a * *b;
            }
            *o = *o + acc;
        }
    }

    /// `out += c · self · v`.
    #[inline]
    pub fn mul_vec_scaled_acc(&self, c: T, v: &[T], out: &mut [T]) {
        for (i, o) in out.iter_mut().enumerate().take(self.n) {
            let row = &self.data[i * self.n..(i + 1) * self.n];
            let mut acc = T::zero();
            for (a, b) in row.iter().zip(v) {
                acc = acc + *a * *b;
            }
            *o = *o + c * acc;
        }
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n];
        self.mul_vec_acc(v, &mut out);
        out
    }

    /// `vᵀ · self`.
    pub fn vec_mul(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|j| (0..self.n).map(|i| v[i] * self.get(i, j)).sum())
            .collect()
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == T::zero() {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] = out.data[i * n + j] + a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.get(i, j);
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a + *b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| *a - *b).collect(),
        }
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|a| *a * c).collect(),
        }
    }

    /// `self += c · rhs`.
    pub fn axpy(&mut self, c: T, rhs: &Self) {
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a = *a + c * *b;
        }
    }

    /// Symmetric part `(A + Aᵀ)/2`.
    pub fn symmetrized(&self) -> Self {
        self.add(&self.transpose()).scale(T::lit(0.5))
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> T {
        self.data
            .chunks(self.n)
            .map(|r| r.iter().fold(T::zero(), |acc, v| acc + v.abs()))
            .fold(T::zero(), T::max)
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> T {
        self.transpose().norm_inf()
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = Self::identity(n).data;
        let scale = self.norm_inf();
        if scale == T::zero() {
            return None;
        }
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if a[r * n + col].abs() > a[piv * n + col].abs() {
                    piv = r;
                }
            }
            let p = a[piv * n + col];
            if p.abs() <= T::epsilon() * scale {
                return None;
            }
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                    inv.swap(piv * n + j, col * n + j);
                }
            }
            let pinv = T::one() / p;
            for j in 0..n {
                a[col * n + j] = a[col * n + j] * pinv;
                inv[col * n + j] = inv[col * n + j] * pinv;
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let f = a[r * n + col];
                if f == T::zero() {
                    continue;
                }
                for j in 0..n {
                    a[r * n + j] = a[r * n + j] - f * a[col * n + j];
                    inv[r * n + j] = inv[r * n + j] - f * inv[col * n + j];
                }
            }
        }
        Some(Self { n, data: inv })
    }

    /// 1-norm condition number; infinite when singular.
    pub fn condition_number(&self) -> T {
        match self.inverse() {
            Some(inv) => self.norm_one() * inv.norm_one(),
            None => T::infinity(),
        }
    }

    pub fn cast<U: Real>(&self) -> SquareMatrix<U> {
        SquareMatrix {
            n: self.n,
            data: self.data.iter().map(|v| U::lit(v.to_f64_lossy())).collect(),
        }
    }
}

/// Euclidean norm.
pub fn norm2<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc + *x * *x).sqrt()
}

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (x, y)| acc + *x * *y)
}

/// Symmetric positive semidefinite helpers on f64 covariance matrices.
pub mod sym {
    use nalgebra::DMatrix;

    use super::SquareMatrix;
    use crate::error::{Error, Result};

    /// Eigen-decomposition `Q = V diag(λ) Vᵀ` of the symmetric part of `q`.
    #[derive(Debug, Clone)]
    pub struct SymEigen {
        pub values: Vec<f64>,
        /// Column-major eigenvectors: `vectors[k]` is the k-th eigenvector.
        pub vectors: Vec<Vec<f64>>,
    }

    impl SymEigen {
        pub fn new(q: &SquareMatrix<f64>) -> Self {
            let n = q.dim();
            if n == 1 {
                return Self {
                    values: vec![q.get(0, 0)],
                    vectors: vec![vec![1.0]],
                };
            }
            let s = q.symmetrized();
            let m = DMatrix::from_row_slice(n, n, s.as_slice());
            let e = m.symmetric_eigen();
            let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
                .map(|k| (e.eigenvalues[k], e.eigenvectors.column(k).iter().copied().collect()))
                .collect();
            pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
            Self {
                values: pairs.iter().map(|p| p.0).collect(),
                vectors: pairs.into_iter().map(|p| p.1).collect(),
            }
        }

        pub fn min(&self) -> f64 {
            self.values[0]
        }

        pub fn max(&self) -> f64 {
            *self.values.last().expect("non-empty spectrum")
        }

        /// `V diag(f(λ)) Vᵀ`, eigenvalues clipped at zero before `f`.
        pub fn apply(&self, f: impl Fn(f64) -> f64) -> SquareMatrix<f64> {
            let n = self.values.len();
            let mut out = SquareMatrix::zeros(n);
            for (lam, v) in self.values.iter().zip(&self.vectors) {
                let c = f(lam.max(0.0));
                for i in 0..n {
                    for j in 0..n {
                        out.set(i, j, out.get(i, j) + c * v[i] * v[j]);
                    }
                }
            }
            out
        }
    }

    pub fn lambda_min(q: &SquareMatrix<f64>) -> f64 {
        SymEigen::new(q).min()
    }

    /// Symmetric square root of a PSD matrix (negative eigenvalues clipped).
    pub fn sqrt_psd(q: &SquareMatrix<f64>) -> SquareMatrix<f64> {
        SymEigen::new(q).apply(f64::sqrt)
    }

    /// `(Q^{1/2}, Q^{-1/2}, Q^{-1})` for a covariance above the eigenvalue floor.
    pub fn factor_pd(q: &SquareMatrix<f64>, floor: f64) -> Result<(SquareMatrix<f64>, SquareMatrix<f64>, SquareMatrix<f64>)> {
        let e = SymEigen::new(q);
        if e.min() <= floor {
            return Err(Error::SingularCovariance {
                lambda_min: e.min(),
                floor,
            });
        }
        Ok((e.apply(f64::sqrt), e.apply(|l| 1.0 / l.sqrt()), e.apply(|l| 1.0 / l)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn inverse_round_trip() {
        let a = SquareMatrix::from_rows(&[vec![2.0, 1.0], vec![0.5, 3.0]]).unwrap();
        let inv = a.inverse().unwrap();
        let id = a.matmul(&inv);
        for i in 0..2 {
            for j in 0..2 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(id.get(i, j), e, epsilon = 1e-14);
            }
        }
        assert!(SquareMatrix::<f64>::zeros(2).inverse().is_none());
    }

    #[test]
    fn from_rows_rejects_ragged_and_nonfinite() {
        assert!(SquareMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(SquareMatrix::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(SquareMatrix::<f64>::from_rows(&[]).is_err());
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let q = SquareMatrix::from_rows(&[vec![2.0, 0.3], vec![0.3, 1.0]]).unwrap();
        let (s, si, qi) = sym::factor_pd(&q, 1e-12).unwrap();
        let back = s.matmul(&s);
        let id = si.matmul(&s);
        let id2 = qi.matmul(&q);
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(back.get(i, j), q.get(i, j), epsilon = 1e-13);
                let e = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(id.get(i, j), e, epsilon = 1e-13);
                assert_relative_eq!(id2.get(i, j), e, epsilon = 1e-13);
            }
        }
        let eig = sym::SymEigen::new(&q);
        assert!(eig.min() < eig.max());
    }

    #[test]
    fn works_in_single_precision() {
        let a = SquareMatrix::<f32>::from_rows(&[vec![4.0, 0.0], vec![0.0, 0.5]]).unwrap();
        let inv = a.inverse().unwrap();
        assert_eq!(inv.get(0, 0), 0.25);
        assert_eq!(inv.get(1, 1), 2.0);
        assert!(a.condition_number() > 7.9);
    }
}
