//! Cyclic Jacobi eigensolver for complex Hermitian matrices.

use num_complex::Complex;
use num_traits::Zero;

use super::hermitian::HermitianMatrix;
use super::matrix::ComplexMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Eigenvalues (ascending) and eigenvectors of a Hermitian matrix.
///
/// `vectors[(n, nu)]` is the overlap of basis state `n` with eigenvector `nu`,
/// so column `nu` holds the `nu`-th normal mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomposition<T> {
    eigenvalues: Vec<T>,
    vectors: ComplexMatrix<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct JacobiOptions {
    pub max_sweeps: usize,
    /// Convergence when the off-diagonal Frobenius norm drops below
    /// `tolerance * ||h||_F`.
    pub tolerance: f64,
}

impl Default for JacobiOptions {
    fn default() -> Self {
        Self {
            max_sweeps: 100,
            tolerance: 1e-14,
        }
    }
}

pub fn eigendecompose<T: Real>(h: &HermitianMatrix<T>) -> Result<SpectralDecomposition<T>> {
    eigendecompose_with(h, JacobiOptions::default())
}

pub fn eigendecompose_with<T: Real>(
    h: &HermitianMatrix<T>,
    opts: JacobiOptions,
) -> Result<SpectralDecomposition<T>> {
    let n = h.dim();
    let mut a = h.matrix().clone();
    let mut v = ComplexMatrix::<T>::identity(n);
    let threshold = T::tol(opts.tolerance, 16.0) * a.frobenius_norm();

    let mut converged = off_diagonal_norm(&a) <= threshold;
    let mut sweeps = 0;
    while !converged && sweeps < opts.max_sweeps {
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
        sweeps += 1;
        converged = off_diagonal_norm(&a) <= threshold;
    }
    if !converged {
        return Err(Error::NoConvergence {
            sweeps,
            residual: off_diagonal_norm(&a).to_f64_lossy(),
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[(i, i)]
            .re
            .partial_cmp(&a[(j, j)].re)
            .expect("finite eigenvalues")
            .then(i.cmp(&j))
    });
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();

    let mut vectors = ComplexMatrix::zeros(n, n);
    for (nu, &src) in order.iter().enumerate() {
        // fix the phase: largest-magnitude component real and positive
        let mut pivot = 0;
        let mut best = T::neg_infinity();
        for k in 0..n {
            let m = v[(k, src)].norm();
            if m > best {
                best = m;
                pivot = k;
            }
        }
        let pv = v[(pivot, src)];
        let phase = pv.conj() / pv.norm();
        for k in 0..n {
            vectors.set(k, nu, v[(k, src)] * phase);
        }
        vectors.set(pivot, nu, Complex::new(pv.norm(), T::zero()));
    }

    Ok(SpectralDecomposition {
        eigenvalues,
        vectors,
    })
}

fn off_diagonal_norm<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.rows();
    let mut acc = T::zero();
    for i in 0..n {
        for (j, x) in a.row(i).iter().enumerate() {
            if i != j {
                acc += x.norm_sqr();
            }
        }
    }
    acc.sqrt()
}

/// Annihilates `a[p][q]` with the unitary
/// `G = [[c, s], [-s e^{-i phi}, c e^{-i phi}]]` acting on rows/columns `p, q`,
/// where `a[p][q] = r e^{i phi}`. Updates `a <- G† a G` and `v <- v G`.
fn rotate<T: Real>(a: &mut ComplexMatrix<T>, v: &mut ComplexMatrix<T>, p: usize, q: usize) {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r.is_zero() {
        return;
    }
    let phase = apq / r;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;

    let two = T::one() + T::one();
    let theta = (aqq - app) / (two * r);
    let t = if theta.is_zero() {
        T::one()
    } else {
        theta.signum() / (theta.abs() + theta.hypot(T::one()))
    };
    let c = T::one() / t.hypot(T::one());
    let s = t * c;
    let cr = Complex::new(c, T::zero());
    let sr = Complex::new(s, T::zero());

    let n = a.rows();
    for j in 0..n {
        if j == p || j == q {
            continue;
        }
        let apj = a[(p, j)];
        let aqj = a[(q, j)];
        let new_p = cr * apj - sr * phase * aqj;
        let new_q = sr * apj + cr * phase * aqj;
        a.set(p, j, new_p);
        a.set(q, j, new_q);
        a.set(j, p, new_p.conj());
        a.set(j, q, new_q.conj());
    }
    a.set(p, p, Complex::new(app - t * r, T::zero()));
    a.set(q, q, Complex::new(aqq + t * r, T::zero()));
    a.set(p, q, Complex::zero());
    a.set(q, p, Complex::zero());

    let g_qp = -sr * phase.conj();
    let g_qq = cr * phase.conj();
    for k in 0..n {
        let row = v.row_mut(k);
        let vkp = row[p];
        let vkq = row[q];
        row[p] = cr * vkp + vkq * g_qp;
        row[q] = sr * vkp + vkq * g_qq;
    }
}

impl<T: Real> SpectralDecomposition<T> {
    #[inline]
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    #[inline]
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    /// `U[n][nu]`, the overlap of basis state `n` with normal mode `nu`.
    #[inline]
    pub fn vectors(&self) -> &ComplexMatrix<T> {
        &self.vectors
    }

    /// True when every eigenvector component is real, as for real symmetric input.
    pub fn is_real(&self) -> bool {
        self.vectors.as_slice().iter().all(|z| z.im.is_zero())
    }

    /// `max |U†U - I|`.
    pub fn unitarity_residual(&self) -> T {
        let ua = self.vectors.adjoint();
        ua.mul_adjoint(&ua).expect("square").identity_deviation()
    }

    /// `||U diag(alpha) U† - h||_F / ||h||_F`, absolute when `h = 0`.
    pub fn reconstruction_residual(&self, h: &HermitianMatrix<T>) -> T {
        let scaled = self.scaled_vectors(|x| Complex::new(x, T::zero()));
        let rebuilt = scaled.mul_adjoint(&self.vectors).expect("square");
        let mut diff = T::zero();
        for (x, y) in rebuilt.as_slice().iter().zip(h.matrix().as_slice()) {
            diff += (x - y).norm_sqr();
        }
        let norm = h.matrix().frobenius_norm();
        if norm.is_zero() {
            diff.sqrt()
        } else {
            diff.sqrt() / norm
        }
    }

    /// `max |h U - U diag(alpha)|`.
    pub fn eigen_residual(&self, h: &HermitianMatrix<T>) -> T {
        let hu = h.matrix().matmul(&self.vectors).expect("square");
        let ua = self.scaled_vectors(|x| Complex::new(x, T::zero()));
        hu.max_abs_diff(&ua)
    }

    /// `U diag(f(alpha))`.
    pub(crate) fn scaled_vectors(&self, f: impl Fn(T) -> Complex<T>) -> ComplexMatrix<T> {
        let n = self.dim();
        let factors: Vec<Complex<T>> = self.eigenvalues.iter().map(|&x| f(x)).collect();
        let mut out = self.vectors.clone();
        for k in 0..n {
            for (z, &f) in out.row_mut(k).iter_mut().zip(&factors) {
                *z *= f;
            }
        }
        out
    }
}
