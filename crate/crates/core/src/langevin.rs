//! Exact time-local Langevin coefficients for the system oscillator.
//!
//! Writing the survival amplitude as `A = a + i b`, both `a` and `b` solve
//! `x'' + Gamma(t) x' + Omega^2(t) x = 0`. Solving that 2x2 linear system at
//! each time gives
//!
//! ```text
//! Omega^2(t) =  (A' conj(A'') - conj(A') A'') / (A conj(A') - conj(A) A')
//! Gamma(t)   = -(A  conj(A'') - conj(A) A'') / (A conj(A') - conj(A) A')
//! ```
//!
//! The denominator is `-2i (a b' - a' b)`, the Wronskian of the two
//! solutions; where it vanishes the coefficients do not exist and the point
//! is flagged.

use num_complex::Complex;

use crate::amplitude::{AmplitudeSet, SurvivalPoint};
use crate::error::{Error, Result};
use crate::model::{InitialPopulations, ModelSpec};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy)]
pub struct LangevinOptions {
    /// Singular when `|a b' - a' b| <= wronskian_tol * |A| |A'|`.
    pub wronskian_tol: f64,
}

impl Default for LangevinOptions {
    fn default() -> Self {
        Self {
            wronskian_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LangevinCoefficients<T> {
    pub t: T,
    pub a: T,
    pub b: T,
    pub adot: T,
    pub bdot: T,
    pub addot: T,
    pub bddot: T,
    /// `Omega^2(t)`, withheld at singular points.
    pub omega_sq: Option<T>,
    /// `Gamma(t)`, withheld at singular points.
    pub gamma: Option<T>,
    /// `|A conj(A') - conj(A) A'| = 2 |a b' - a' b|`
    pub wronskian_denominator: T,
    /// Wronskian `a b' - a' b` with its sign.
    pub wronskian: T,
    /// Largest imaginary part discarded from the two quotients.
    pub imaginary_residue: T,
    pub singular: bool,
}

impl<T: Real> LangevinCoefficients<T> {
    /// Largest normalised residual of the two homogeneous equations,
    /// `max(|a'' + Gamma a' + Omega^2 a|, |b'' + ...|) / max(|a''|, |b''|, |Omega^2|)`.
    pub fn homogeneous_residual(&self) -> Option<T> {
        let (w2, g) = (self.omega_sq?, self.gamma?);
        let ra = self.addot + g * self.adot + w2 * self.a;
        let rb = self.bddot + g * self.bdot + w2 * self.b;
        let scale = self.addot.abs().max(self.bddot.abs()).max(w2.abs());
        let r = ra.abs().max(rb.abs());
        Some(if scale > T::zero() { r / scale } else { r })
    }
}

pub fn langevin_coefficients<T: Real>(
    amps: &AmplitudeSet<T>,
    opts: LangevinOptions,
) -> LangevinCoefficients<T> {
    coefficients_from_survival(&amps.survival(), opts)
}

pub fn coefficients_from_survival<T: Real>(
    sp: &SurvivalPoint<T>,
    opts: LangevinOptions,
) -> LangevinCoefficients<T> {
    let (a, ad, add) = (sp.a, sp.adot, sp.addot);
    let den = a * ad.conj() - a.conj() * ad;
    let wronskian = (a.conj() * ad).im;
    let threshold = T::tol(opts.wronskian_tol, 4.0) * a.norm() * ad.norm();
    let singular = !(wronskian.abs() > threshold);

    let mut out = LangevinCoefficients {
        t: sp.t,
        a: a.re,
        b: a.im,
        adot: ad.re,
        bdot: ad.im,
        addot: add.re,
        bddot: add.im,
        omega_sq: None,
        gamma: None,
        wronskian_denominator: den.norm(),
        wronskian,
        imaginary_residue: T::zero(),
        singular,
    };
    if singular {
        return out;
    }
    let num_omega = ad * add.conj() - ad.conj() * add;
    let num_gamma = -(a * add.conj() - a.conj() * add);
    let omega_sq: Complex<T> = num_omega / den;
    let gamma: Complex<T> = num_gamma / den;
    out.omega_sq = Some(omega_sq.re);
    out.gamma = Some(gamma.re);
    out.imaginary_residue = omega_sq.im.abs().max(gamma.im.abs());
    out
}

/// Intervals between consecutive grid points across which the Wronskian
/// changes sign.
pub fn wronskian_crossings<T: Real>(coeffs: &[LangevinCoefficients<T>]) -> Vec<(T, T)> {
    coeffs
        .windows(2)
        .filter(|w| {
            !w[0].singular
                && !w[1].singular
                && (w[0].wronskian > T::zero()) != (w[1].wronskian > T::zero())
        })
        .map(|w| (w[0].t, w[1].t))
        .collect()
}

/// Normalised homogeneous residual per point; `None` at singular points.
pub fn langevin_residual<T: Real>(coeffs: &[LangevinCoefficients<T>]) -> Vec<(T, Option<T>)> {
    coeffs
        .iter()
        .map(|c| (c.t, c.homogeneous_residual()))
        .collect()
}

/// Symmetrised second moment `<{f(t), f(t')}>/2` of the driving term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseCovariance<T> {
    pub t: T,
    pub t_prime: T,
    pub value: T,
}

/// `C(t, t') = 1/(2 M Omega) sum_{m >= 1} Re[A_0m(t) conj(A_0m(t'))] (2 N_m(0) + 1)`
/// from the system rows of `A` at the two times.
pub fn noise_covariance_rows<T: Real>(
    row_t: &[Complex<T>],
    row_t_prime: &[Complex<T>],
    init: &InitialPopulations<T>,
    spec: &ModelSpec<T>,
) -> Result<T> {
    let dim = spec.dim();
    if row_t.len() != dim || row_t_prime.len() != dim || init.len() != dim {
        return Err(Error::Dimension(format!(
            "noise covariance needs rows and occupations of length {dim}"
        )));
    }
    let two = T::lit(2.0);
    let mut acc = T::zero();
    for m in 1..dim {
        let weight = two * init.occupations()[m] + T::one();
        acc += (row_t[m] * row_t_prime[m].conj()).re * weight;
    }
    Ok(acc / (two * spec.mass * spec.omega))
}

pub fn noise_covariance<T: Real>(
    amps_t: &AmplitudeSet<T>,
    amps_t_prime: &AmplitudeSet<T>,
    init: &InitialPopulations<T>,
    spec: &ModelSpec<T>,
) -> Result<NoiseCovariance<T>> {
    let value = noise_covariance_rows(amps_t.a().row(0), amps_t_prime.a().row(0), init, spec)?;
    Ok(NoiseCovariance {
        t: amps_t.t(),
        t_prime: amps_t_prime.t(),
        value,
    })
}

/// `|A_00|^2 + sum_{m >= 1} |A_0m|^2 - 1`: what the bath gains, the system loses.
pub fn row_norm_defect<T: Real>(row: &[Complex<T>]) -> T {
    (row.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr()) - T::one()).abs()
}
