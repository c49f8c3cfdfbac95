//! Second-order perturbative limits and the exponential decay regime.
//!
//! Golden-rule rates use the finite-time delta surrogate
//! `delta_t(x) = 2 sin^2(x t / 2) / (pi x^2 t)`, which integrates to one for
//! every `t` and concentrates at `x = 0` as `t` grows. The decay constant of
//! the system level is the Wigner-Weisskopf rate `2 pi |g(Omega)|^2 rho(Omega)`.

use num_complex::Complex;
use num_traits::Zero;

use crate::amplitude::amplitudes_at;
use crate::error::{Error, Result};
use crate::linalg::{RealMatrix, SpectralDecomposition};
use crate::master::{master_coefficients, transition_probabilities, MasterOptions};
use crate::model::ModelSpec;
use crate::scalar::Real;

/// Finite-time approximation to the Dirac delta.
pub fn delta_t<T: Real>(alpha: T, t: T) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "delta_t needs t > 0, got {t}"
        )));
    }
    if alpha.is_zero() {
        return Ok(t / T::TAU());
    }
    let s = (alpha * t / T::lit(2.0)).sin();
    Ok(T::lit(2.0) * s * s / (T::PI() * alpha * alpha * t))
}

/// Golden-rule rate matrix at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRuleRates<T> {
    pub t: T,
    /// `Gamma_nm = 2 pi |v_nm|^2 delta_t(omega_n - omega_m)` off the diagonal,
    /// `Gamma_nn = -sum_{m != n} Gamma_nm`.
    pub gamma: RealMatrix<T>,
}

pub fn golden_rule_rates<T: Real>(spec: &ModelSpec<T>, t: T) -> Result<GoldenRuleRates<T>> {
    spec.validate()?;
    let n = spec.dim();
    let mut gamma = RealMatrix::zeros(n, n);
    for i in 0..n {
        let mut diag = T::zero();
        for j in 0..n {
            if i == j {
                continue;
            }
            let r = pair_rate(spec, i, j, t)?;
            gamma.set(i, j, r);
            diag -= r;
        }
        gamma.set(i, i, diag);
    }
    Ok(GoldenRuleRates { t, gamma })
}

fn pair_rate<T: Real>(spec: &ModelSpec<T>, n: usize, m: usize, t: T) -> Result<T> {
    let v = spec.coupling(n, m);
    if v.is_zero() {
        return Ok(T::zero());
    }
    let detuning = spec.level_frequency(n) - spec.level_frequency(m);
    Ok(T::TAU() * v.norm_sqr() * delta_t(detuning, t)?)
}

impl<T: Real> GoldenRuleRates<T> {
    /// `max |Gamma_nm - Gamma_mn|` over off-diagonal pairs.
    pub fn asymmetry(&self) -> T {
        let g = &self.gamma;
        let mut worst = T::zero();
        for i in 0..g.rows() {
            for j in 0..i {
                worst = worst.max((g[(i, j)] - g[(j, i)]).abs());
            }
        }
        worst
    }

    /// `max(|row sums|, |column sums|)`.
    pub fn sum_residual(&self) -> T {
        self.gamma
            .row_sums()
            .into_iter()
            .chain(self.gamma.col_sums())
            .fold(T::zero(), |m, s| m.max(s.abs()))
    }

    /// `sum_k Gamma_nk (delta_km - Gamma_km t)`: the coefficient matrix obtained by
    /// inserting `P = I + Gamma t` into `dP/dt P^{-1}` to second order.
    pub fn perturbative_w(&self) -> RealMatrix<T> {
        let n = self.gamma.rows();
        let correction = RealMatrix::from_raw(
            n,
            n,
            self.gamma.as_slice().iter().map(|&x| -x * self.t).collect(),
        );
        let mut lhs = RealMatrix::identity(n);
        for i in 0..n {
            for j in 0..n {
                let v = lhs[(i, j)] + correction[(i, j)];
                lhs.set(i, j, v);
            }
        }
        self.gamma.matmul(&lhs).expect("square")
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct PredictionOptions {
    /// Principal-value exclusion radius; defaults to half the local level
    /// spacing at the bath mode nearest `Omega`.
    pub pv_cutoff: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbativePrediction<T> {
    pub delta_omega: T,
    pub gamma: T,
    /// Density of states at the system frequency, `1 / local spacing`.
    pub density_of_states: T,
    pub pv_cutoff: T,
    pub warning: Option<String>,
}

/// Frequency shift (principal-value sum) and Wigner-Weisskopf decay rate.
pub fn perturbative_prediction<T: Real>(
    spec: &ModelSpec<T>,
    opts: PredictionOptions,
) -> Result<PerturbativePrediction<T>> {
    spec.validate()?;
    let omega = spec.omega;
    let freqs = &spec.bath_frequencies;

    if freqs.is_empty() {
        return Ok(PerturbativePrediction {
            delta_omega: spec.self_shift,
            gamma: T::zero(),
            density_of_states: T::zero(),
            pv_cutoff: T::zero(),
            warning: Some("no bath modes: no decay channel".into()),
        });
    }

    let nearest = (0..freqs.len())
        .min_by(|&i, &j| {
            (freqs[i] - omega)
                .abs()
                .partial_cmp(&(freqs[j] - omega).abs())
                .expect("finite frequencies")
                .then(i.cmp(&j))
        })
        .expect("non-empty bath");
    let spacing = local_spacing(freqs, nearest);
    let pv_cutoff = match opts.pv_cutoff {
        Some(c) => T::lit(c),
        None => spacing.map_or(T::zero(), |s| s / T::lit(2.0)),
    };

    let mut delta_omega = spec.self_shift;
    for (w, g) in freqs.iter().zip(&spec.couplings) {
        let detuning = omega - *w;
        if detuning.abs() < pv_cutoff || detuning.is_zero() {
            continue;
        }
        delta_omega += g.norm_sqr() / detuning;
    }

    let (lo, hi) = freqs
        .iter()
        .fold((T::infinity(), T::neg_infinity()), |(lo, hi), &w| {
            (lo.min(w), hi.max(w))
        });
    let (gamma, density, warning) = match spacing {
        None => (
            T::zero(),
            T::zero(),
            Some("a single bath mode has no density of states: no decay rate".to_string()),
        ),
        Some(_) if omega < lo || omega > hi => (
            T::zero(),
            T::zero(),
            Some(format!(
                "system frequency {omega} lies outside the bath band [{lo}, {hi}]: no resonant decay channel"
            )),
        ),
        Some(s) => {
            let rho = T::one() / s;
            let g2 = spec.couplings[nearest].norm_sqr();
            (T::TAU() * g2 * rho, rho, None)
        }
    };

    Ok(PerturbativePrediction {
        delta_omega,
        gamma,
        density_of_states: density,
        pv_cutoff,
        warning,
    })
}

/// Mean gap to the neighbouring frequencies of mode `k` in sorted order.
fn local_spacing<T: Real>(freqs: &[T], k: usize) -> Option<T> {
    if freqs.len() < 2 {
        return None;
    }
    let mut sorted: Vec<T> = freqs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite frequencies"));
    let target = freqs[k];
    let pos = sorted
        .iter()
        .position(|&w| w == target)
        .expect("frequency present");
    let last = sorted.len() - 1;
    let gap = match pos {
        0 => sorted[1] - sorted[0],
        p if p == last => sorted[last] - sorted[last - 1],
        p => (sorted[p + 1] - sorted[p - 1]) / T::lit(2.0),
    };
    if gap > T::zero() {
        Some(gap)
    } else {
        None
    }
}

/// Straight-line fit of `log |A|` and of the unwrapped phase of `A` on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentialFit<T> {
    pub window: (T, T),
    /// Decay rate of `|A|^2`; `|A|` decays at half this rate.
    pub gamma_fit: T,
    /// Minus the slope of the unwrapped phase.
    pub omega_fit: T,
    /// Largest deviation of `log |A|` from the fitted line, relative to the
    /// line's total drop over the window (absolute if the line is flat).
    pub goodness: T,
    pub points: usize,
}

pub fn fit_exponential<T: Real>(
    series: &[(T, Complex<T>)],
    window: (T, T),
) -> Result<ExponentialFit<T>> {
    let (t1, t2) = window;
    if !(t1 < t2) {
        return Err(Error::InvalidArgument(format!(
            "fit window [{t1}, {t2}] is empty"
        )));
    }
    let pts: Vec<(T, Complex<T>)> = series
        .iter()
        .copied()
        .filter(|(t, _)| *t >= t1 && *t <= t2)
        .collect();
    if pts.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "fit window [{t1}, {t2}] holds {} samples",
            pts.len()
        )));
    }
    let floor = T::tol(1e-12, 0.0);
    if let Some((t, z)) = pts.iter().find(|(_, z)| z.norm() < floor) {
        return Err(Error::LogUnderflow {
            t: t.to_f64_lossy(),
            value: z.norm().to_f64_lossy(),
        });
    }

    let times: Vec<T> = pts.iter().map(|p| p.0).collect();
    let logs: Vec<T> = pts.iter().map(|p| p.1.norm().ln()).collect();
    let mut phases = Vec::with_capacity(pts.len());
    let mut prev: Option<T> = None;
    let mut offset = T::zero();
    for (_, z) in &pts {
        let raw = z.arg();
        if let Some(p) = prev {
            let mut cur = raw + offset;
            while cur - p > T::PI() {
                offset -= T::TAU();
                cur -= T::TAU();
            }
            while cur - p < -T::PI() {
                offset += T::TAU();
                cur += T::TAU();
            }
            phases.push(cur);
            prev = Some(cur);
        } else {
            phases.push(raw);
            prev = Some(raw);
        }
    }

    let (log_slope, log_icept) = least_squares(&times, &logs);
    let (phase_slope, _) = least_squares(&times, &phases);

    let worst = times.iter().zip(&logs).fold(T::zero(), |m, (&t, &y)| {
        m.max((y - (log_icept + log_slope * t)).abs())
    });
    let span = times[times.len() - 1] - times[0];
    let drop = log_slope.abs() * span;
    let goodness = if drop > T::zero() {
        worst / drop
    } else {
        worst
    };

    Ok(ExponentialFit {
        window,
        gamma_fit: -T::lit(2.0) * log_slope,
        omega_fit: -phase_slope,
        goodness,
        points: pts.len(),
    })
}

/// Ordinary least squares `y = intercept + slope * x`, centred for stability.
fn least_squares<T: Real>(x: &[T], y: &[T]) -> (T, T) {
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().fold(T::zero(), |a, &v| a + v) / n;
    let my = y.iter().fold(T::zero(), |a, &v| a + v) / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (&xi, &yi) in x.iter().zip(y) {
        sxy += (xi - mx) * (yi - my);
        sxx += (xi - mx) * (xi - mx);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Off-diagonal pairs `(n, m)`, `n != m`, with a nonzero coupling and
/// unperturbed detuning at most `tolerance`.
pub fn resonant_pairs<T: Real>(spec: &ModelSpec<T>, tolerance: T) -> Vec<(usize, usize)> {
    let n = spec.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j
                && !spec.coupling(i, j).is_zero()
                && (spec.level_frequency(i) - spec.level_frequency(j)).abs() <= tolerance
            {
                out.push((i, j));
            }
        }
    }
    out
}

/// Exact `W_nm(t)` for a fixed list of pairs at one time; `None` where `W`
/// does not exist.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRateSample<T> {
    pub t: T,
    pub values: Option<Vec<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenComparison<T> {
    pub pairs: Vec<(usize, usize)>,
    pub exact_mean: Vec<T>,
    pub golden_mean: Vec<T>,
    /// `max over pairs |<W_nm> - <Gamma_nm>| / |<Gamma_nm>|`
    pub max_relative_deviation: T,
    pub points_used: usize,
    pub points_skipped: usize,
}

/// Time-averages exact and golden-rule rates over the samples and reports
/// their largest relative deviation.
pub fn compare_exact_vs_golden<T: Real>(
    spec: &ModelSpec<T>,
    pairs: &[(usize, usize)],
    exact: &[ExactRateSample<T>],
) -> Result<GoldenComparison<T>> {
    let mut exact_sum = vec![T::zero(); pairs.len()];
    let mut golden_sum = vec![T::zero(); pairs.len()];
    let mut used = 0usize;
    let mut skipped = 0usize;
    for sample in exact {
        let Some(values) = &sample.values else {
            skipped += 1;
            continue;
        };
        if values.len() != pairs.len() {
            return Err(Error::Dimension("one exact rate per pair expected".into()));
        }
        for (k, &(n, m)) in pairs.iter().enumerate() {
            exact_sum[k] += values[k];
            golden_sum[k] += pair_rate(spec, n, m, sample.t)?;
        }
        used += 1;
    }
    let denom = T::from_usize_lossy(used.max(1));
    let exact_mean: Vec<T> = exact_sum.into_iter().map(|s| s / denom).collect();
    let golden_mean: Vec<T> = golden_sum.into_iter().map(|s| s / denom).collect();
    let max_relative_deviation =
        exact_mean
            .iter()
            .zip(&golden_mean)
            .fold(T::zero(), |worst, (&e, &g)| {
                let d = (e - g).abs();
                let rel = if g.is_zero() { d } else { d / g.abs() };
                worst.max(rel)
            });
    Ok(GoldenComparison {
        pairs: pairs.to_vec(),
        exact_mean,
        golden_mean,
        max_relative_deviation,
        points_used: used,
        points_skipped: skipped,
    })
}

/// Exact `W_nm` for `pairs` at each of `times` (ascending).
///
/// Points where `W` does not exist are `None`, and so are both ends of any
/// interval across which `det P` changes sign: `W` has a pole there and
/// the samples next to it are not representative of a time average.
pub fn exact_rate_samples<T: Real>(
    sd: &SpectralDecomposition<T>,
    pairs: &[(usize, usize)],
    times: &[T],
    opts: MasterOptions,
) -> Result<Vec<ExactRateSample<T>>> {
    let mut samples = Vec::with_capacity(times.len());
    let mut signs: Vec<Option<T>> = Vec::with_capacity(times.len());
    for &t in times {
        let tp = transition_probabilities(&amplitudes_at(sd, t));
        match master_coefficients(&tp, opts) {
            Ok(mc) => {
                signs.push(Some(mc.det_sign()));
                samples.push(ExactRateSample {
                    t,
                    values: Some(pairs.iter().map(|&(n, m)| mc.w()[(n, m)]).collect()),
                });
            }
            Err(Error::SingularTransition { .. }) => {
                signs.push(None);
                samples.push(ExactRateSample { t, values: None });
            }
            Err(e) => return Err(e),
        }
    }
    for k in 1..samples.len() {
        if let (Some(a), Some(b)) = (signs[k - 1], signs[k]) {
            if a != b {
                samples[k - 1].values = None;
                samples[k].values = None;
            }
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset_linear_bath;

    #[test]
    fn delta_limit_and_envelope() {
        for &t in &[0.5, 3.0, 100.0] {
            assert_eq!(delta_t(0.0, t).unwrap(), t / std::f64::consts::TAU);
        }
        let alpha = 0.7;
        for &t in &[10.0, 100.0, 1000.0] {
            let d = delta_t(alpha, t).unwrap();
            assert!(d <= 2.0 / (std::f64::consts::PI * alpha * alpha * t) + 1e-18);
        }
        assert!(delta_t(0.3, 0.0).is_err());
        assert!(delta_t(0.3, -1.0).is_err());
    }

    #[test]
    fn delta_is_even() {
        for &a in &[0.01, 0.3, 2.5] {
            assert_eq!(delta_t(a, 7.0).unwrap(), delta_t(-a, 7.0).unwrap());
        }
    }

    #[test]
    fn no_coupling_no_rates() {
        let spec = ModelSpec::with_bath(1.0, vec![0.5, 1.0], vec![0.0, 0.0]);
        let r = golden_rule_rates(&spec, 5.0).unwrap();
        assert_eq!(r.gamma.max_abs(), 0.0);
    }

    #[test]
    fn resonant_pair_rate() {
        let (g, t) = (0.1_f64, 3.0_f64);
        let r = golden_rule_rates(&ModelSpec::two_oscillator(1.0, g), t).unwrap();
        assert!((r.gamma[(0, 1)] - g * g * t).abs() < 1e-15);
        assert!((r.gamma[(0, 0)] + g * g * t).abs() < 1e-15);
    }

    #[test]
    fn rate_matrix_structure() {
        let spec = preset_linear_bath(11, 0.5, 1.5, 1.02, 0.03, 0.0).unwrap();
        let r = golden_rule_rates(&spec, 20.0).unwrap();
        assert!(r.asymmetry() <= 1e-15);
        assert!(r.sum_residual() <= 1e-12);
        for i in 0..r.gamma.rows() {
            for j in 0..r.gamma.cols() {
                if i != j {
                    assert!(r.gamma[(i, j)] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn perturbative_w_reduces_to_gamma() {
        let spec = preset_linear_bath(11, 0.5, 1.5, 1.02, 0.001, 0.0).unwrap();
        let r = golden_rule_rates(&spec, 5.0).unwrap();
        let w = r.perturbative_w();
        // relative correction is of order |Gamma| t
        let scale = r.gamma.max_abs();
        assert!(w.max_abs_diff(&r.gamma) <= 1e-3 * scale);
    }

    #[test]
    fn symmetric_bath_has_no_principal_value_shift() {
        let spec = preset_linear_bath(201, 0.0_f64, 2.0, 1.0, 0.01, 0.0).unwrap();
        let p = perturbative_prediction(&spec, PredictionOptions::default()).unwrap();
        assert!(p.delta_omega.abs() < 1e-12);
        assert!((p.density_of_states - 100.0).abs() < 1e-9);
        assert!((p.gamma - 0.062_831_853_071_795_86).abs() < 1e-10);
        assert!(p.warning.is_none());

        let shifted = preset_linear_bath(201, 0.0_f64, 2.0, 1.0, 0.01, 0.05).unwrap();
        let p = perturbative_prediction(&shifted, PredictionOptions::default()).unwrap();
        assert!((p.delta_omega - 0.05).abs() < 1e-12);
    }

    #[test]
    fn shift_invariant_under_bath_relabeling() {
        let spec = ModelSpec::with_bath(
            1.0_f64,
            vec![0.6, 0.9, 1.25, 1.7],
            vec![0.1, 0.02, 0.05, 0.2],
        );
        let mut rev = spec.clone();
        rev.bath_frequencies.reverse();
        rev.couplings.reverse();
        let a = perturbative_prediction(&spec, PredictionOptions::default()).unwrap();
        let b = perturbative_prediction(&rev, PredictionOptions::default()).unwrap();
        assert!((a.delta_omega - b.delta_omega).abs() < 1e-13);
        assert_eq!(a.gamma, b.gamma);
    }

    #[test]
    fn single_resonant_pair_exact_rate_is_twice_golden() {
        let g = 0.01_f64;
        let spec = ModelSpec::two_oscillator(1.0, g);
        let sd = crate::linalg::eigendecompose(&crate::model::build_hamiltonian(&spec).unwrap())
            .unwrap();
        let pairs = resonant_pairs(&spec, 1e-12);
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        let times: Vec<f64> = (1..=20).map(|k| 0.05 * k as f64).collect();
        let samples = exact_rate_samples(&sd, &pairs, &times, MasterOptions::default()).unwrap();
        let cmp = compare_exact_vs_golden(&spec, &pairs, &samples).unwrap();
        assert_eq!(cmp.points_used, 20);
        // g tan(2gt) against g^2 t
        for (e, gl) in cmp.exact_mean.iter().zip(&cmp.golden_mean) {
            assert!((e / gl - 2.0).abs() < 1e-3, "ratio {}", e / gl);
        }
        assert!((cmp.max_relative_deviation - 1.0).abs() < 1e-3);
    }

    #[test]
    fn pole_neighbours_are_excluded() {
        let g = 0.1_f64;
        let spec = ModelSpec::two_oscillator(1.0, g);
        let sd = crate::linalg::eigendecompose(&crate::model::build_hamiltonian(&spec).unwrap())
            .unwrap();
        let times: Vec<f64> = (0..8).map(|k| 7.5 + 0.1 * k as f64).collect();
        let samples = exact_rate_samples(&sd, &[(0, 1)], &times, MasterOptions::default()).unwrap();
        let missing: Vec<f64> = samples
            .iter()
            .filter(|s| s.values.is_none())
            .map(|s| s.t)
            .collect();
        // pole at pi/(4g) = 7.854
        assert_eq!(missing.len(), 2);
        assert!(missing[0] < 7.854 && missing[1] > 7.854);
    }

    #[test]
    fn out_of_band_system_does_not_decay() {
        let spec = preset_linear_bath(11, 0.0, 0.5, 1.0, 0.01, 0.0).unwrap();
        let p = perturbative_prediction(&spec, PredictionOptions::default()).unwrap();
        assert_eq!(p.gamma, 0.0);
        assert!(p.warning.is_some());
    }

    #[test]
    fn fit_recovers_synthetic_exponential() {
        let series: Vec<(f64, Complex<f64>)> = (0..=400)
            .map(|k| {
                let t = k as f64 * 0.25;
                (t, Complex::from_polar((-0.025 * t).exp(), -1.1 * t))
            })
            .collect();
        let fit = fit_exponential(&series, (10.0, 100.0)).unwrap();
        assert!((fit.gamma_fit - 0.05).abs() < 1e-10);
        assert!((fit.omega_fit - 1.1).abs() < 1e-10);
        assert!(fit.goodness < 1e-10);
        assert_eq!(fit.points, 361);
    }

    #[test]
    fn fit_of_pure_phase() {
        let series: Vec<(f64, Complex<f64>)> = (0..=100)
            .map(|k| {
                let t = k as f64 * 0.1;
                (t, Complex::from_polar(1.0, -0.8 * t))
            })
            .collect();
        let fit = fit_exponential(&series, (0.0, 10.0)).unwrap();
        assert!(fit.gamma_fit.abs() < 1e-12);
        assert!((fit.omega_fit - 0.8).abs() < 1e-12);
    }

    #[test]
    fn fit_rejects_underflow_and_empty_windows() {
        let series = vec![
            (0.0, Complex::new(1.0, 0.0)),
            (1.0, Complex::new(1e-13, 0.0)),
        ];
        assert!(matches!(
            fit_exponential(&series, (0.0, 1.0)),
            Err(Error::LogUnderflow { .. })
        ));
        assert!(fit_exponential(&series, (2.0, 1.0)).is_err());
        assert!(fit_exponential(&series, (5.0, 6.0)).is_err());
    }

    #[test]
    fn comparison_of_identical_rates_is_exact() {
        let spec = ModelSpec::two_oscillator(1.0, 0.1);
        let pairs = resonant_pairs(&spec, 1e-9);
        assert_eq!(pairs, vec![(0, 1), (1, 0)]);
        let samples: Vec<_> = [1.0, 2.0, 3.0]
            .iter()
            .map(|&t| ExactRateSample {
                t,
                values: Some(vec![0.01 * t, 0.01 * t]),
            })
            .chain(std::iter::once(ExactRateSample {
                t: 4.0,
                values: None,
            }))
            .collect();
        let c = compare_exact_vs_golden(&spec, &pairs, &samples).unwrap();
        assert!(c.max_relative_deviation < 1e-14);
        assert_eq!((c.points_used, c.points_skipped), (3, 1));
    }
}
