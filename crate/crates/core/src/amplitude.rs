//! Closed-form one-particle amplitudes from the normal-mode decomposition.
//!
//! With `U[n][nu]` the overlap of basis state `n` with normal mode `nu`,
//!
//! ```text
//! A_nm(t) = sum_nu exp(-i alpha_nu t) U[m][nu] conj(U[n][nu])
//! ```
//!
//! and the time derivatives follow by inserting `(-i alpha_nu)^k`. No
//! numerical differentiation is involved.

use num_complex::Complex;
use num_traits::Zero;

use crate::linalg::{ComplexMatrix, SpectralDecomposition};
use crate::scalar::Real;

/// `A(t)`, `dA/dt` and `d2A/dt2` at a single time.
///
/// Convention: `a()[(n, m)]` is the amplitude for a quantum starting in
/// level `n` to be found in level `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeSet<T> {
    t: T,
    a: ComplexMatrix<T>,
    adot: ComplexMatrix<T>,
    addot: ComplexMatrix<T>,
}

impl<T: Real> AmplitudeSet<T> {
    #[inline]
    pub fn t(&self) -> T {
        self.t
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    #[inline]
    pub fn a(&self) -> &ComplexMatrix<T> {
        &self.a
    }

    #[inline]
    pub fn adot(&self) -> &ComplexMatrix<T> {
        &self.adot
    }

    #[inline]
    pub fn addot(&self) -> &ComplexMatrix<T> {
        &self.addot
    }

    /// `(A, dA/dt, d2A/dt2)` of the system level.
    pub fn survival(&self) -> SurvivalPoint<T> {
        SurvivalPoint {
            t: self.t,
            a: self.a[(0, 0)],
            adot: self.adot[(0, 0)],
            addot: self.addot[(0, 0)],
        }
    }

    /// `max |A A† - I|`.
    pub fn unitarity_residual(&self) -> T {
        unitarity_residual(&self.a)
    }
}

/// Survival amplitude of the system level and its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalPoint<T> {
    pub t: T,
    pub a: Complex<T>,
    pub adot: Complex<T>,
    pub addot: Complex<T>,
}

/// `max |A A† - I|`, using that `A A†` is Hermitian.
pub fn unitarity_residual<T: Real>(a: &ComplexMatrix<T>) -> T {
    let n = a.rows();
    let re: Vec<Vec<T>> = (0..n)
        .map(|i| a.row(i).iter().map(|z| z.re).collect())
        .collect();
    let im: Vec<Vec<T>> = (0..n)
        .map(|i| a.row(i).iter().map(|z| z.im).collect())
        .collect();
    let mut worst = T::zero();
    for i in 0..n {
        for j in 0..=i {
            let g_re = dot(&re[i], &re[j]) + dot(&im[i], &im[j]);
            let g_im = dot(&im[i], &re[j]) - dot(&re[i], &im[j]);
            let target = if i == j { T::one() } else { T::zero() };
            worst = worst.max((g_re - target).hypot(g_im));
        }
    }
    worst
}

fn phases<T: Real>(sd: &SpectralDecomposition<T>, t: T) -> Vec<Complex<T>> {
    sd.eigenvalues()
        .iter()
        .map(|&alpha| {
            let (s, c) = (alpha * t).sin_cos();
            Complex::new(c, -s)
        })
        .collect()
}

/// Evaluates `sum_nu w_nu U[m][nu] conj(U[n][nu])` for each weight vector in
/// `weights` and every `(n, m)`.
fn spectral_sums<T: Real, const K: usize>(
    sd: &SpectralDecomposition<T>,
    weights: [Vec<Complex<T>>; K],
) -> [ComplexMatrix<T>; K] {
    let n = sd.dim();
    let u = sd.vectors();
    let mut out: [ComplexMatrix<T>; K] = std::array::from_fn(|_| ComplexMatrix::zeros(n, n));

    if sd.is_real() {
        // real overlaps: the result is symmetric and each entry reduces to two
        // real dot products per weight
        let rows: Vec<Vec<T>> = (0..n)
            .map(|k| u.row(k).iter().map(|z| z.re).collect())
            .collect();
        let mut re_w: Vec<Vec<T>> = vec![vec![T::zero(); n]; K];
        let mut im_w: Vec<Vec<T>> = vec![vec![T::zero(); n]; K];
        for i in 0..n {
            for k in 0..K {
                for nu in 0..n {
                    re_w[k][nu] = rows[i][nu] * weights[k][nu].re;
                    im_w[k][nu] = rows[i][nu] * weights[k][nu].im;
                }
            }
            for j in 0..=i {
                let uj = &rows[j];
                for k in 0..K {
                    let re = dot(&re_w[k], uj);
                    let im = dot(&im_w[k], uj);
                    let z = Complex::new(re, im);
                    out[k].set(i, j, z);
                    out[k].set(j, i, z);
                }
            }
        }
        return out;
    }

    let mut left: Vec<Vec<Complex<T>>> = vec![vec![Complex::zero(); n]; K];
    for i in 0..n {
        let ui = u.row(i);
        for k in 0..K {
            for nu in 0..n {
                left[k][nu] = ui[nu].conj() * weights[k][nu];
            }
        }
        for j in 0..n {
            let uj = u.row(j);
            for k in 0..K {
                let mut acc = Complex::zero();
                for (&l, &r) in left[k].iter().zip(uj) {
                    acc += l * r;
                }
                out[k].set(i, j, acc);
            }
        }
    }
    out
}

/// Real inner product with eight independent accumulators so the loop can
/// be vectorised.
#[inline]
fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    ((acc[0] + acc[4]) + (acc[1] + acc[5])) + ((acc[2] + acc[6]) + (acc[3] + acc[7])) + tail
}

/// `A(t)` alone.
pub fn propagator_at<T: Real>(sd: &SpectralDecomposition<T>, t: T) -> ComplexMatrix<T> {
    let [a] = spectral_sums(sd, [phases(sd, t)]);
    a
}

/// `A(t)` together with its first and second time derivatives.
pub fn amplitudes_at<T: Real>(sd: &SpectralDecomposition<T>, t: T) -> AmplitudeSet<T> {
    let e = phases(sd, t);
    let (d1, d2) = derivative_weights(sd, &e);
    let [a, adot, addot] = spectral_sums(sd, [e, d1, d2]);
    AmplitudeSet { t, a, adot, addot }
}

fn derivative_weights<T: Real>(
    sd: &SpectralDecomposition<T>,
    e: &[Complex<T>],
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let alphas = sd.eigenvalues();
    let d1 = e
        .iter()
        .zip(alphas)
        .map(|(&z, &alpha)| z * Complex::new(T::zero(), -alpha))
        .collect();
    let d2 = e
        .iter()
        .zip(alphas)
        .map(|(&z, &alpha)| z * (-alpha * alpha))
        .collect();
    (d1, d2)
}

/// Row `n` of `A(t)`, `dA/dt` and `d2A/dt2`: amplitudes out of level `n`.
pub fn amplitude_row<T: Real>(
    sd: &SpectralDecomposition<T>,
    n: usize,
    t: T,
) -> [Vec<Complex<T>>; 3] {
    let dim = sd.dim();
    let u = sd.vectors();
    let e = phases(sd, t);
    let (d1, d2) = derivative_weights(sd, &e);
    let un = u.row(n);
    let mut out: [Vec<Complex<T>>; 3] = std::array::from_fn(|_| vec![Complex::zero(); dim]);
    for m in 0..dim {
        let um = u.row(m);
        for nu in 0..dim {
            let w = un[nu].conj() * um[nu];
            out[0][m] += w * e[nu];
            out[1][m] += w * d1[nu];
            out[2][m] += w * d2[nu];
        }
    }
    out
}

/// `A_00(t)`.
pub fn survival_amplitude<T: Real>(sd: &SpectralDecomposition<T>, t: T) -> Complex<T> {
    survival_point(sd, t).a
}

/// `A_00`, its derivatives, in `O(N)`.
pub fn survival_point<T: Real>(sd: &SpectralDecomposition<T>, t: T) -> SurvivalPoint<T> {
    let u = sd.vectors();
    let mut a = Complex::zero();
    let mut adot = Complex::zero();
    let mut addot = Complex::zero();
    for (nu, &alpha) in sd.eigenvalues().iter().enumerate() {
        let w = u[(0, nu)].norm_sqr();
        let (s, c) = (alpha * t).sin_cos();
        let e = Complex::new(c, -s) * w;
        a += e;
        adot += e * Complex::new(T::zero(), -alpha);
        addot += e * (-alpha * alpha);
    }
    SurvivalPoint { t, a, adot, addot }
}

/// Uniform grid `0, dt, 2 dt, ...` up to and including `t_max` (within
/// rounding).
pub fn time_grid<T: Real>(t_max: T, dt: T) -> Vec<T> {
    let steps = (t_max / dt * (T::one() + T::lit(1e-12))).floor();
    let steps = steps.to_usize().unwrap_or(0);
    (0..=steps).map(|k| T::from_usize_lossy(k) * dt).collect()
}
