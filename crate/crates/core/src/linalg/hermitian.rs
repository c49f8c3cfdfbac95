use num_complex::Complex;
use num_traits::Zero;

use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Square complex matrix with `h[i][j] == conj(h[j][i])` holding exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix<T> {
    inner: ComplexMatrix<T>,
}

impl<T: Real> HermitianMatrix<T> {
    /// Accepts a matrix only if it is Hermitian bit-for-bit.
    pub fn new(m: ComplexMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        for i in 0..n {
            for j in 0..=i {
                let d = m[(i, j)] - m[(j, i)].conj();
                if !d.is_zero() {
                    return Err(Error::NotHermitian {
                        row: i,
                        col: j,
                        deviation: d.norm().to_f64_lossy(),
                    });
                }
            }
        }
        Ok(Self { inner: m })
    }

    /// Builds from the lower triangle: `lower(i, j)` is queried for `j <= i`.
    /// The upper triangle is filled by conjugation and the diagonal keeps only
    /// its real part.
    pub fn from_lower(n: usize, mut lower: impl FnMut(usize, usize) -> Complex<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Dimension("Hermitian matrix of dimension 0".into()));
        }
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = lower(i, j);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if i == j {
                    m.set(i, i, Complex::new(v.re, T::zero()));
                } else {
                    m.set(i, j, v);
                    m.set(j, i, v.conj());
                }
            }
        }
        Ok(Self { inner: m })
    }

    pub fn from_real_symmetric(rows: &[Vec<T>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("symmetric matrix must be square".into()));
        }
        let m = ComplexMatrix::from_fn(n, n, |i, j| Complex::new(rows[i][j], T::zero()))?;
        Self::new(m)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.inner.rows()
    }

    #[inline]
    pub fn matrix(&self) -> &ComplexMatrix<T> {
        &self.inner
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.inner[(i, j)]
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.inner
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_hermiticity_required() {
        let ok = ComplexMatrix::from_rows(&[
            vec![Complex::new(1.0, 0.0), Complex::new(0.1, 0.2)],
            vec![Complex::new(0.1, -0.2), Complex::new(2.0, 0.0)],
        ])
        .unwrap();
        assert!(HermitianMatrix::new(ok).is_ok());

        let bad = ComplexMatrix::from_rows(&[
            vec![Complex::new(1.0, 0.0), Complex::new(0.1, 0.2)],
            vec![Complex::new(0.1, 0.2), Complex::new(2.0, 0.0)],
        ])
        .unwrap();
        assert!(matches!(
            HermitianMatrix::new(bad),
            Err(Error::NotHermitian { row: 1, col: 0, .. })
        ));

        let complex_diag = ComplexMatrix::from_rows(&[vec![Complex::new(1.0, 1e-300)]]).unwrap();
        assert!(HermitianMatrix::new(complex_diag).is_err());
    }

    #[test]
    fn lower_triangle_construction_is_hermitian() {
        let h = HermitianMatrix::<f64>::from_lower(3, |i, j| {
            Complex::new((i + j) as f64, (i as f64) - (j as f64) + 0.5)
        })
        .unwrap();
        for i in 0..3 {
            assert_eq!(h.get(i, i).im, 0.0);
            for j in 0..3 {
                assert_eq!(h.get(i, j), h.get(j, i).conj());
            }
        }
    }
}
