//! Built-in validation suite.

use std::fmt::Write as _;

use num_complex::Complex64;
use qbm_core::amplitude::amplitudes_at;
use qbm_core::golden::fit_exponential;
use qbm_core::langevin::langevin_coefficients;
use qbm_core::master::{
    master_coefficients, populations_at, residual_at, transition_probabilities, MasterOptions,
};
use qbm_core::model::build_hamiltonian;
use qbm_core::{Error, Model};

use crate::{RunConfig, RunError};

const SPECTRAL_TOLERANCE: f64 = 1e-12;
const CLOSED_FORM_AMPLITUDE: f64 = 1e-12;
const CLOSED_FORM_COEFFICIENT: f64 = 1e-8;
const FIT_SELF_CONSISTENCY: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_owned(),
            value,
            tolerance,
            passed: value <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub singular_points: usize,
    pub singular_crossings: usize,
    pub wronskian_singular_points: usize,
}

impl SuiteReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed).count()
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<44} {:>12} {:>10}  result",
            "check", "value", "tolerance"
        );
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<44} {:>12.3e} {:>10.1e}  {}",
                c.name,
                c.value,
                c.tolerance,
                if c.passed { "PASS" } else { "FAIL" }
            );
        }
        let _ = writeln!(
            s,
            "singular W points: {}, det P sign changes: {}, singular Langevin points: {}",
            self.singular_points, self.singular_crossings, self.wronskian_singular_points
        );
        let _ = writeln!(
            s,
            "{} of {} checks passed",
            self.checks.len() - self.failures(),
            self.checks.len()
        );
        s
    }
}

/// Real resonant coupling `g` when the model is a bare resonant pair.
fn resonant_pair_coupling(m: &Model) -> Option<f64> {
    let g = *m.couplings.first()?;
    let bath_bath_zero = m
        .bath_bath
        .as_ref()
        .is_none_or(|b| b.iter().flatten().all(|z| *z == Complex64::new(0.0, 0.0)));
    (m.bath_size() == 1
        && m.bath_frequencies[0] == m.omega
        && m.self_shift == 0.0
        && bath_bath_zero
        && g.im == 0.0
        && g.re != 0.0)
        .then_some(g.re)
}

fn is_uncoupled(m: &Model) -> bool {
    m.couplings.iter().all(|g| *g == Complex64::new(0.0, 0.0))
        && m.bath_bath.as_ref().is_none_or(|b| {
            b.iter().enumerate().all(|(i, r)| {
                r.iter()
                    .enumerate()
                    .all(|(j, z)| i == j || *z == Complex64::new(0.0, 0.0))
            })
        })
}

#[derive(Default)]
struct Worst(f64);

impl Worst {
    fn see(&mut self, x: f64) {
        // NaN is sticky so it cannot be hidden
        if !self.0.is_nan() && (x.is_nan() || x > self.0) {
            self.0 = x;
        }
    }
}

pub fn run_suite(rc: &RunConfig) -> Result<SuiteReport, RunError> {
    let tol = rc.tolerances;
    let h = build_hamiltonian(&rc.model)?;
    let sd = rc.spectrum()?;
    let mut report = SuiteReport::default();
    report.checks.push(Check::at_most(
        "eigenvector unitarity",
        sd.unitarity_residual(),
        SPECTRAL_TOLERANCE,
    ));
    report.checks.push(Check::at_most(
        "eigen reconstruction (relative)",
        sd.reconstruction_residual(&h),
        SPECTRAL_TOLERANCE,
    ));

    let pair_g = resonant_pair_coupling(&rc.model);
    let uncoupled = is_uncoupled(&rc.model);
    let opts = MasterOptions {
        condition_cap: rc.condition_cap(),
    };
    let lopts = rc.langevin_options();
    let total0 = rc.initial.total();

    let (mut unitarity, mut stochastic, mut conservation) = (Worst(0.0), Worst(0.0), Worst(0.0));
    let (mut master_res, mut langevin_res) = (Worst(0.0), Worst(0.0));
    let (mut cf_survival, mut cf_w, mut cf_langevin, mut cf_diag) =
        (Worst(0.0), Worst(0.0), Worst(0.0), Worst(0.0));
    let mut last_sign: Option<(f64, f64)> = None;
    let mut flagged: Vec<(f64, f64)> = Vec::new();

    for t in rc.grid() {
        let amps = amplitudes_at(&sd, t);
        unitarity.see(amps.unitarity_residual());
        let tp = transition_probabilities(&amps);
        stochastic.see(tp.stochasticity_residual());
        let pops = populations_at(&tp, &rc.initial)?;
        let total: f64 = pops.iter().sum();
        conservation.see((total - total0).abs() / total0.max(f64::MIN_POSITIVE));

        let mc = match master_coefficients(&tp, opts) {
            Ok(mc) => Some(mc),
            Err(Error::SingularTransition { .. }) => None,
            Err(e) => return Err(e.into()),
        };
        match &mc {
            Some(mc) => {
                if let Some((t_prev, sign)) = last_sign {
                    if sign != mc.det_sign() {
                        report.singular_crossings += 1;
                        flagged.push((t_prev, t));
                    }
                }
                last_sign = Some((t, mc.det_sign()));
                let r = residual_at(&tp, Some(mc), &pops, &rc.initial)?;
                master_res.see(r.rate_form.unwrap_or(0.0));
                master_res.see(r.balance_form.unwrap_or(0.0));
            }
            None => {
                report.singular_points += 1;
                flagged.push((t, t));
                last_sign = None;
            }
        }

        let lc = langevin_coefficients(&amps, lopts);
        match lc.homogeneous_residual() {
            Some(r) => langevin_res.see(r),
            None => report.wronskian_singular_points += 1,
        }

        if let Some(g) = pair_g {
            let omega = rc.model.omega;
            cf_survival.see((amps.a()[(0, 0)].norm() - (g * t).cos().abs()).abs());
            if t < 0.9 * std::f64::consts::FRAC_PI_4 / g.abs() {
                let w_off = g * (2.0 * g * t).tan();
                match &mc {
                    Some(mc) => {
                        let w = mc.w();
                        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                            let expected = if i == j { -w_off } else { w_off };
                            cf_w.see((w[(i, j)] - expected).abs());
                        }
                    }
                    None => cf_w.see(f64::INFINITY),
                }
            }
            if t < 0.9 * std::f64::consts::FRAC_PI_2 / g.abs() {
                let tan = (g * t).tan();
                match (lc.gamma, lc.omega_sq) {
                    (Some(gamma), Some(w2)) => {
                        cf_langevin.see((gamma - 2.0 * g * tan).abs());
                        cf_langevin
                            .see((w2 - (omega * omega + g * g + 2.0 * g * g * tan * tan)).abs());
                    }
                    _ => cf_langevin.see(f64::INFINITY),
                }
            }
        }
        if uncoupled {
            let a = amps.a();
            for n in 0..a.rows() {
                for m in 0..a.cols() {
                    let expected = if n == m {
                        let (s, c) = (h.get(n, n).re * t).sin_cos();
                        Complex64::new(c, -s)
                    } else {
                        Complex64::new(0.0, 0.0)
                    };
                    cf_diag.see((a[(n, m)] - expected).norm());
                }
            }
        }
    }

    report.checks.extend([
        Check::at_most("amplitude unitarity |AA^+ - I|", unitarity.0, tol.unitarity),
        Check::at_most("P row/column sums", stochastic.0, tol.stochasticity),
        Check::at_most(
            "total quanta (relative drift)",
            conservation.0,
            tol.conservation,
        ),
        Check::at_most(
            "master residual (non-singular points)",
            master_res.0,
            tol.master_residual,
        ),
        Check::at_most(
            "Langevin residual (non-singular points)",
            langevin_res.0,
            tol.langevin_residual,
        ),
    ]);

    if let Some(g) = pair_g {
        report.checks.push(Check::at_most(
            "closed form |A_00| = |cos gt|",
            cf_survival.0,
            CLOSED_FORM_AMPLITUDE,
        ));
        report.checks.push(Check::at_most(
            "closed form W = g tan(2gt)",
            cf_w.0,
            CLOSED_FORM_COEFFICIENT,
        ));
        report.checks.push(Check::at_most(
            "closed form Gamma, Omega^2",
            cf_langevin.0,
            CLOSED_FORM_COEFFICIENT,
        ));
        let t_s = std::f64::consts::FRAC_PI_4 / g.abs();
        if t_s <= rc.t_max {
            let caught = flagged
                .iter()
                .any(|&(a, b)| (a <= t_s && t_s <= b) || (a - t_s).abs() <= rc.dt);
            report.checks.push(Check::at_most(
                "singularity at pi/(4g) flagged",
                if caught { 0.0 } else { 1.0 },
                0.0,
            ));
        }
    }
    if uncoupled {
        report.checks.push(Check::at_most(
            "closed form A = diag(exp(-i w t))",
            cf_diag.0,
            CLOSED_FORM_AMPLITUDE,
        ));
    }
    report.checks.push(Check::at_most(
        "fitter on synthetic exponential",
        fit_self_check(),
        FIT_SELF_CONSISTENCY,
    ));
    Ok(report)
}

/// Fits `exp(-i 1.1 t) exp(-0.025 t)` and returns the larger parameter error.
fn fit_self_check() -> f64 {
    let series: Vec<(f64, Complex64)> = (0..=400)
        .map(|k| {
            let t = 0.25 * k as f64;
            (t, Complex64::from_polar((-0.025 * t).exp(), -1.1 * t))
        })
        .collect();
    match fit_exponential(&series, (5.0, 95.0)) {
        Ok(fit) => (fit.gamma_fit - 0.05)
            .abs()
            .max((fit.omega_fit - 1.1).abs()),
        Err(_) => f64::INFINITY,
    }
}
