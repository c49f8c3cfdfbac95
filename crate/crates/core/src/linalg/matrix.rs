//! Row-major dense matrices over real or complex entries.

use std::ops::Index;

use num_complex::Complex;
use num_traits::{Float, Zero};

use crate::error::{Error, Result};
use crate::scalar::{Entry, Real};

/// Dense row-major matrix. Every public constructor rejects non-finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

pub type ComplexMatrix<T> = DenseMatrix<Complex<T>>;
pub type RealMatrix<T> = DenseMatrix<T>;

/// Result of a pivoted inversion.
#[derive(Debug, Clone)]
pub struct Inverse<T> {
    pub matrix: RealMatrix<T>,
    /// max |pivot| / min |pivot|
    pub condition: T,
    /// Sign of the determinant, `+1` or `-1`.
    pub det_sign: T,
}

/// Default cap on the pivot-ratio condition estimate.
pub const DEFAULT_CONDITION_CAP: f64 = 1e12;

impl<S: Entry> DenseMatrix<S> {
    pub fn new(rows: usize, cols: usize, data: Vec<S>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|x| !x.is_finite_entry()) {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<S>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Self::new(n, m, rows.iter().flatten().copied().collect())
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::new(rows, cols, data)
    }

    pub(crate) fn from_raw(rows: usize, cols: usize, data: Vec<S>) -> Self {
        debug_assert_eq!(data.len(), rows * cols);
        Self { rows, cols, data }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_raw(rows, cols, vec![S::zero(); rows * cols])
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn as_slice(&self) -> &[S] {
        &self.data
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [S] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self[(i, j)];
            }
        }
        out
    }

    /// Conjugate transpose (plain transpose for real entries).
    pub fn adjoint(&self) -> Self {
        let mut out = self.transpose();
        out.data.iter_mut().for_each(|x| *x = x.conj_entry());
        out
    }

    pub fn matmul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for (k, &a) in self.row(i).iter().enumerate() {
                if a == S::zero() {
                    continue;
                }
                for (o, &b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// `self * rhs†`, computed as row-by-row inner products.
    pub fn mul_adjoint(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.cols {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by adjoint of {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.rows);
        for i in 0..self.rows {
            let a = self.row(i);
            for j in 0..rhs.rows {
                let mut acc = S::zero();
                for (&x, &y) in a.iter().zip(rhs.row(j)) {
                    acc += x * y.conj_entry();
                }
                out.data[i * rhs.rows + j] = acc;
            }
        }
        Ok(out)
    }

    pub fn max_abs(&self) -> S::Real {
        self.data
            .iter()
            .fold(S::Real::zero(), |m, x| m.max(x.modulus()))
    }

    pub fn frobenius_norm(&self) -> S::Real {
        self.data
            .iter()
            .fold(S::Real::zero(), |acc, x| {
                let m = x.modulus();
                acc + m * m
            })
            .sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> S::Real {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(S::Real::zero(), |m, (&a, &b)| m.max((a - b).modulus()))
    }

    /// `max |self - I|` for square matrices.
    pub fn identity_deviation(&self) -> S::Real {
        let mut m = S::Real::zero();
        for i in 0..self.rows {
            for (j, &x) in self.row(i).iter().enumerate() {
                let d = if i == j { x - S::one() } else { x };
                m = m.max(d.modulus());
            }
        }
        m
    }

    pub fn row_sums(&self) -> Vec<S> {
        (0..self.rows)
            .map(|i| self.row(i).iter().fold(S::zero(), |a, &x| a + x))
            .collect()
    }

    pub fn col_sums(&self) -> Vec<S> {
        let mut sums = vec![S::zero(); self.cols];
        for i in 0..self.rows {
            for (s, &x) in sums.iter_mut().zip(self.row(i)) {
                *s += x;
            }
        }
        sums
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(S::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn map<R: Entry>(&self, f: impl Fn(S) -> R) -> DenseMatrix<R> {
        DenseMatrix::from_raw(
            self.rows,
            self.cols,
            self.data.iter().map(|&x| f(x)).collect(),
        )
    }
}

impl<S> Index<(usize, usize)> for DenseMatrix<S> {
    type Output = S;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<T: Real> RealMatrix<T> {
    /// Gauss-Jordan inversion with partial pivoting.
    ///
    /// Fails with [`Error::Singular`] when a pivot vanishes or the pivot ratio
    /// exceeds `cap`.
    pub fn inverse(&self, cap: T) -> Result<Inverse<T>> {
        if !self.is_square() {
            return Err(Error::Dimension(format!(
                "cannot invert {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        let mut max_pivot = T::zero();
        let mut min_pivot = T::infinity();
        let mut det_sign = T::one();

        for col in 0..n {
            let (p, pivot_abs) = (col..n).map(|r| (r, a[(r, col)].abs())).fold(
                (col, T::neg_infinity()),
                |best, cur| {
                    if cur.1 > best.1 {
                        cur
                    } else {
                        best
                    }
                },
            );
            max_pivot = max_pivot.max(pivot_abs);
            min_pivot = min_pivot.min(pivot_abs);
            if pivot_abs == T::zero() {
                return Err(Error::Singular {
                    condition: f64::INFINITY,
                    cap: cap.to_f64_lossy(),
                });
            }
            if p != col {
                swap_rows(&mut a, p, col);
                swap_rows(&mut inv, p, col);
                det_sign = -det_sign;
            }
            let pivot = a[(col, col)];
            if pivot < T::zero() {
                det_sign = -det_sign;
            }
            let scale = T::one() / pivot;
            a.row_mut(col).iter_mut().for_each(|x| *x *= scale);
            inv.row_mut(col).iter_mut().for_each(|x| *x *= scale);

            let pivot_row_a = a.row(col).to_vec();
            let pivot_row_inv = inv.row(col).to_vec();
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[(r, col)];
                if factor == T::zero() {
                    continue;
                }
                for (x, &y) in a.row_mut(r).iter_mut().zip(&pivot_row_a) {
                    *x -= factor * y;
                }
                for (x, &y) in inv.row_mut(r).iter_mut().zip(&pivot_row_inv) {
                    *x -= factor * y;
                }
            }
        }

        let condition = max_pivot / min_pivot;
        if !(condition <= cap) {
            return Err(Error::Singular {
                condition: condition.to_f64_lossy(),
                cap: cap.to_f64_lossy(),
            });
        }
        Ok(Inverse {
            matrix: inv,
            condition,
            det_sign,
        })
    }
}

fn swap_rows<S: Entry>(m: &mut DenseMatrix<S>, a: usize, b: usize) {
    if a == b {
        return;
    }
    let cols = m.cols;
    let (lo, hi) = (a.min(b), a.max(b));
    let (head, tail) = m.data.split_at_mut(hi * cols);
    head[lo * cols..(lo + 1) * cols].swap_with_slice(&mut tail[..cols]);
}
