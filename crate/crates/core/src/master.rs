//! Exact time-local master equation for level populations.
//!
//! Under uncorrelated initial conditions the populations evolve as
//! `N(t) = P(t) N(0)` with `P_nm = |A_nm|^2`. Differentiating and eliminating
//! `N(0)` gives `dN/dt = W(t) N(t)` with `W = dP/dt P^{-1}`. The coefficients
//! are time dependent, not symmetric, and undefined wherever `P(t)` is
//! singular; such points are reported, never regularised.

use crate::amplitude::AmplitudeSet;
use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::model::InitialPopulations;
use crate::scalar::Real;

/// Default cap on the pivot-ratio condition estimate of `P(t)`.
pub const DEFAULT_MASTER_CONDITION_CAP: f64 = 1e10;

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionProbabilities<T> {
    t: T,
    p: RealMatrix<T>,
    pdot: RealMatrix<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterCoefficients<T> {
    t: T,
    w: RealMatrix<T>,
    condition: T,
    det_sign: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PopulationTrajectory<T> {
    times: Vec<T>,
    occupations: Vec<Vec<T>>,
    totals: Vec<T>,
}

/// Residual of the master equation at one time. `None` marks a point where
/// `W` does not exist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterResidual<T> {
    pub t: T,
    /// `max_n |dN_n/dt - sum_k W_nk N_k|`
    pub rate_form: Option<T>,
    /// Same, with the gain-minus-loss form built from off-diagonal `W`.
    pub balance_form: Option<T>,
}

#[derive(Debug, Clone, Copy)]
pub struct MasterOptions {
    pub condition_cap: f64,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            condition_cap: DEFAULT_MASTER_CONDITION_CAP,
        }
    }
}

impl<T: Real> TransitionProbabilities<T> {
    #[inline]
    pub fn t(&self) -> T {
        self.t
    }

    #[inline]
    pub fn p(&self) -> &RealMatrix<T> {
        &self.p
    }

    #[inline]
    pub fn pdot(&self) -> &RealMatrix<T> {
        &self.pdot
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.p.rows()
    }

    /// Largest deviation of any row or column sum of `P` from one.
    pub fn stochasticity_residual(&self) -> T {
        let one = T::one();
        self.p
            .row_sums()
            .into_iter()
            .chain(self.p.col_sums())
            .fold(T::zero(), |m, s| m.max((s - one).abs()))
    }

    /// Pivot-ratio condition estimate of `P`, infinite when a pivot vanishes.
    pub fn condition_estimate(&self) -> T {
        match self.p.inverse(T::infinity()) {
            Ok(inv) => inv.condition,
            Err(_) => T::infinity(),
        }
    }
}

/// `P_nm = |A_nm|^2` and `dP_nm/dt = 2 Re(conj(A_nm) dA_nm/dt)`.
pub fn transition_probabilities<T: Real>(amps: &AmplitudeSet<T>) -> TransitionProbabilities<T> {
    let two = T::lit(2.0);
    let p = amps.a().map(|z| z.norm_sqr());
    let n = amps.dim();
    let a = amps.a().as_slice();
    let ad = amps.adot().as_slice();
    let pdot = RealMatrix::from_raw(
        n,
        n,
        a.iter()
            .zip(ad)
            .map(|(x, y)| two * (x.conj() * y).re)
            .collect(),
    );
    TransitionProbabilities {
        t: amps.t(),
        p,
        pdot,
    }
}

impl<T: Real> MasterCoefficients<T> {
    #[inline]
    pub fn t(&self) -> T {
        self.t
    }

    #[inline]
    pub fn w(&self) -> &RealMatrix<T> {
        &self.w
    }

    /// Condition estimate of the `P(t)` that was inverted.
    #[inline]
    pub fn condition(&self) -> T {
        self.condition
    }

    /// Sign of `det P(t)`; a flip between neighbouring grid points means the
    /// grid stepped over a singular time.
    #[inline]
    pub fn det_sign(&self) -> T {
        self.det_sign
    }

    /// `max_k |sum_n W_nk|`; zero in exact arithmetic.
    pub fn column_sum_residual(&self) -> T {
        self.w
            .col_sums()
            .into_iter()
            .fold(T::zero(), |m, s| m.max(s.abs()))
    }
}

/// `W = dP/dt P^{-1}`.
pub fn master_coefficients<T: Real>(
    tp: &TransitionProbabilities<T>,
    opts: MasterOptions,
) -> Result<MasterCoefficients<T>> {
    let inv =
        tp.p.inverse(T::lit(opts.condition_cap))
            .map_err(|e| match e {
                Error::Singular { condition, .. } => Error::SingularTransition {
                    t: tp.t.to_f64_lossy(),
                    condition,
                },
                other => other,
            })?;
    let w = tp.pdot.matmul(&inv.matrix)?;
    Ok(MasterCoefficients {
        t: tp.t,
        w,
        condition: inv.condition,
        det_sign: inv.det_sign,
    })
}

/// `N_n(t) = sum_m P_nm(t) N_m(0)`.
pub fn populations_at<T: Real>(
    tp: &TransitionProbabilities<T>,
    init: &InitialPopulations<T>,
) -> Result<Vec<T>> {
    check_dim(tp.dim(), init)?;
    Ok(tp.p.mul_vec(init.occupations()))
}

/// Exact population rates `dN_n/dt = sum_m dP_nm/dt N_m(0)`.
pub fn population_rates_at<T: Real>(
    tp: &TransitionProbabilities<T>,
    init: &InitialPopulations<T>,
) -> Result<Vec<T>> {
    check_dim(tp.dim(), init)?;
    Ok(tp.pdot.mul_vec(init.occupations()))
}

fn check_dim<T: Real>(dim: usize, init: &InitialPopulations<T>) -> Result<()> {
    if init.len() != dim {
        return Err(Error::Dimension(format!(
            "{} initial occupations for a {dim}-level model",
            init.len()
        )));
    }
    Ok(())
}

pub fn evolve_populations<T: Real>(
    tps: &[TransitionProbabilities<T>],
    init: &InitialPopulations<T>,
) -> Result<PopulationTrajectory<T>> {
    let mut traj = PopulationTrajectory::default();
    for tp in tps {
        traj.push(tp.t, populations_at(tp, init)?);
    }
    Ok(traj)
}

impl<T: Real> Default for PopulationTrajectory<T> {
    fn default() -> Self {
        Self {
            times: Vec::new(),
            occupations: Vec::new(),
            totals: Vec::new(),
        }
    }
}

impl<T: Real> PopulationTrajectory<T> {
    pub fn push(&mut self, t: T, occupations: Vec<T>) {
        let total = occupations.iter().fold(T::zero(), |a, &x| a + x);
        self.times.push(t);
        self.occupations.push(occupations);
        self.totals.push(total);
    }

    #[inline]
    pub fn times(&self) -> &[T] {
        &self.times
    }

    #[inline]
    pub fn occupations(&self) -> &[Vec<T>] {
        &self.occupations
    }

    #[inline]
    pub fn totals(&self) -> &[T] {
        &self.totals
    }

    /// `max_t |total(t) - total(0)| / total(0)` (absolute if the first total is zero).
    pub fn conservation_residual(&self) -> T {
        let Some(&first) = self.totals.first() else {
            return T::zero();
        };
        let scale = if first.is_zero() {
            T::one()
        } else {
            first.abs()
        };
        self.totals
            .iter()
            .fold(T::zero(), |m, &x| m.max((x - first).abs() / scale))
    }

    pub fn min_occupation(&self) -> T {
        self.occupations
            .iter()
            .flatten()
            .fold(T::infinity(), |m, &x| m.min(x))
    }
}

/// Residual of both forms of the master equation at one time point.
pub fn residual_at<T: Real>(
    tp: &TransitionProbabilities<T>,
    mc: Option<&MasterCoefficients<T>>,
    populations: &[T],
    init: &InitialPopulations<T>,
) -> Result<MasterResidual<T>> {
    let Some(mc) = mc else {
        return Ok(MasterResidual {
            t: tp.t,
            rate_form: None,
            balance_form: None,
        });
    };
    let rates = population_rates_at(tp, init)?;
    let w = mc.w();
    let n = w.rows();
    if populations.len() != n {
        return Err(Error::Dimension("population vector length".into()));
    }
    let predicted = w.mul_vec(populations);
    let mut rate_form = T::zero();
    let mut balance_form = T::zero();
    for i in 0..n {
        rate_form = rate_form.max((rates[i] - predicted[i]).abs());
        let mut gain_loss = T::zero();
        for m in 0..n {
            if m != i {
                gain_loss += w[(i, m)] * populations[m] - w[(m, i)] * populations[i];
            }
        }
        balance_form = balance_form.max((rates[i] - gain_loss).abs());
    }
    Ok(MasterResidual {
        t: tp.t,
        rate_form: Some(rate_form),
        balance_form: Some(balance_form),
    })
}

/// Residual series over a grid. `mcs[k]` is `Err` where `W` could not be
/// formed; those points carry `None` residuals.
pub fn master_residual<T: Real>(
    tps: &[TransitionProbabilities<T>],
    mcs: &[Result<MasterCoefficients<T>>],
    traj: &PopulationTrajectory<T>,
    init: &InitialPopulations<T>,
) -> Result<Vec<MasterResidual<T>>> {
    if tps.len() != mcs.len() || tps.len() != traj.times().len() {
        return Err(Error::Dimension("series lengths differ".into()));
    }
    tps.iter()
        .zip(mcs)
        .zip(traj.occupations())
        .map(|((tp, mc), pops)| residual_at(tp, mc.as_ref().ok(), pops, init))
        .collect()
}

/// Grid intervals `(t_k, t_{k+1})` across which `det P` changes sign, i.e.
/// that contain a singular time the grid did not land on.
pub fn singular_crossings<T: Real>(mcs: &[Result<MasterCoefficients<T>>]) -> Vec<(T, T)> {
    let mut out = Vec::new();
    let mut last: Option<&MasterCoefficients<T>> = None;
    for mc in mcs {
        match mc {
            Ok(cur) => {
                if let Some(prev) = last {
                    if prev.det_sign != cur.det_sign {
                        out.push((prev.t, cur.t));
                    }
                }
                last = Some(cur);
            }
            // a flagged point already reports the singularity
            Err(_) => last = None,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::amplitudes_at;
    use crate::linalg::{eigendecompose, SpectralDecomposition};
    use crate::model::{build_hamiltonian, ModelSpec};

    fn sd_of(spec: &ModelSpec<f64>) -> SpectralDecomposition<f64> {
        eigendecompose(&build_hamiltonian(spec).unwrap()).unwrap()
    }

    #[test]
    fn identity_at_time_zero() {
        let sd = sd_of(&ModelSpec::with_bath(1.0, vec![0.8, 1.3], vec![0.1, 0.2]));
        let tp = transition_probabilities(&amplitudes_at(&sd, 0.0));
        assert!(tp.p().identity_deviation() < 1e-14);
        let mc = master_coefficients(&tp, MasterOptions::default()).unwrap();
        // W(0) = dP/dt(0) = 0
        assert!(mc.w().max_abs_diff(tp.pdot()) < 1e-14);
        assert!(mc.w().max_abs() < 1e-14);
    }

    #[test]
    fn uncoupled_model_is_frozen() {
        let sd = sd_of(&ModelSpec::with_bath(1.0, vec![0.5, 2.0], vec![0.0, 0.0]));
        let init = InitialPopulations::new(vec![1.0, 0.3, 2.0]).unwrap();
        for &t in &[0.0, 1.0, 17.0] {
            let tp = transition_probabilities(&amplitudes_at(&sd, t));
            assert!(tp.p().identity_deviation() <= 1e-15);
            let mc = master_coefficients(&tp, MasterOptions::default()).unwrap();
            assert!(mc.w().max_abs() <= 1e-15);
            let pops = populations_at(&tp, &init).unwrap();
            for (p, q) in pops.iter().zip(init.occupations()) {
                assert!((p - q).abs() <= 1e-15);
            }
            let r = residual_at(&tp, Some(&mc), &pops, &init).unwrap();
            assert!(r.rate_form.unwrap() <= 1e-15);
        }
    }

    #[test]
    fn two_oscillator_probabilities_and_rates() {
        let g = 0.1;
        let sd = sd_of(&ModelSpec::two_oscillator(1.0, g));
        let init = InitialPopulations::new(vec![1.0, 0.0]).unwrap();
        for &t in &[0.5, 2.0, 5.0, 7.0] {
            let tp = transition_probabilities(&amplitudes_at(&sd, t));
            let (c2, s2) = ((g * t).cos().powi(2), (g * t).sin().powi(2));
            let p = RealMatrix::from_rows(&[vec![c2, s2], vec![s2, c2]]).unwrap();
            assert!(tp.p().max_abs_diff(&p) < 1e-12);
            let mc = master_coefficients(&tp, MasterOptions::default()).unwrap();
            let k = g * (2.0 * g * t).tan();
            let w = RealMatrix::from_rows(&[vec![-k, k], vec![k, -k]]).unwrap();
            assert!(mc.w().max_abs_diff(&w) < 1e-10, "t = {t}");
            let pops = populations_at(&tp, &init).unwrap();
            assert!((pops[0] - c2).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_time_is_reported() {
        let g = 0.1;
        let sd = sd_of(&ModelSpec::two_oscillator(1.0, g));
        let t = std::f64::consts::PI / (4.0 * g);
        let tp = transition_probabilities(&amplitudes_at(&sd, t));
        match master_coefficients(&tp, MasterOptions::default()) {
            Err(Error::SingularTransition { t: at, condition }) => {
                assert_eq!(at, t);
                assert!(condition > 1e10);
            }
            other => panic!("expected singular P, got {other:?}"),
        }
    }

    #[test]
    fn crossings_detected_between_grid_points() {
        let g = 0.1;
        let sd = sd_of(&ModelSpec::two_oscillator(1.0, g));
        let mcs: Vec<_> = (0..=20)
            .map(|k| {
                let tp = transition_probabilities(&amplitudes_at(&sd, k as f64 * 0.75));
                master_coefficients(&tp, MasterOptions::default())
            })
            .collect();
        assert!(mcs.iter().all(Result::is_ok));
        let crossings = singular_crossings(&mcs);
        // det P = cos(2 g t) vanishes at t = 7.85 and 23.56 within [0, 15]
        assert_eq!(crossings, vec![(7.5, 8.25)]);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let sd = sd_of(&ModelSpec::two_oscillator(1.0, 0.1));
        let tp = transition_probabilities(&amplitudes_at(&sd, 1.0));
        let init = InitialPopulations::new(vec![1.0, 0.0, 0.0]).unwrap();
        assert!(populations_at(&tp, &init).is_err());
    }

    #[test]
    fn conservation_residual_is_relative() {
        let mut traj = PopulationTrajectory::default();
        traj.push(0.0, vec![2.0, 0.0]);
        traj.push(1.0, vec![1.0, 1.0 + 2e-9]);
        assert!((traj.conservation_residual() - 1e-9f64).abs() < 1e-15);
        assert_eq!(traj.min_occupation(), 0.0);
    }
}
