//! The four output-producing subcommands.

use std::path::PathBuf;

use num_complex::Complex64;
use qbm_core::amplitude::{amplitude_row, amplitudes_at, propagator_at, survival_point};
use qbm_core::golden::{
    compare_exact_vs_golden, exact_rate_samples, fit_exponential, perturbative_prediction,
    resonant_pairs, PredictionOptions,
};
use qbm_core::langevin::{coefficients_from_survival, noise_covariance_rows};
use qbm_core::master::{
    master_coefficients, populations_at, residual_at, transition_probabilities, MasterOptions,
};
use qbm_core::Error;
use serde::Serialize;

use crate::output::{fmt_f64, fmt_opt, CsvWriter};
use crate::{RunConfig, RunError, DEFAULT_COVARIANCE_POINTS};

/// Frequencies closer than this count as resonant.
const RESONANCE_TOLERANCE: f64 = 1e-9;
/// Upper bound on the number of exact-`W` samples in the golden comparison.
const MAX_RATE_SAMPLES: usize = 200;

pub fn amplitudes(rc: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    rc.ensure_out_dir()?;
    let sd = rc.spectrum()?;
    let levels = rc.levels();
    let dim = rc.model.dim();
    let full = levels.len() == dim && levels.iter().enumerate().all(|(i, &n)| i == n);

    let mut amps = CsvWriter::create(&rc.out_dir, "amplitudes.csv", &["t", "n", "m", "re", "im"])?;
    let mut surv = CsvWriter::create(&rc.out_dir, "survival.csv", &["t", "re", "im", "abs"])?;
    for t in rc.grid() {
        let rows: Vec<(usize, Vec<Complex64>)> = if full {
            let a = propagator_at(&sd, t);
            (0..dim).map(|n| (n, a.row(n).to_vec())).collect()
        } else {
            levels
                .iter()
                .map(|&n| {
                    let [row, _, _] = amplitude_row(&sd, n, t);
                    (n, row)
                })
                .collect()
        };
        let ts = fmt_f64(t);
        for (n, row) in &rows {
            for (m, z) in row.iter().enumerate() {
                amps.row(&[
                    ts.clone(),
                    n.to_string(),
                    m.to_string(),
                    fmt_f64(z.re),
                    fmt_f64(z.im),
                ])?;
            }
        }
        let a0 = survival_point(&sd, t).a;
        surv.row(&[ts, fmt_f64(a0.re), fmt_f64(a0.im), fmt_f64(a0.norm())])?;
    }
    Ok(vec![amps.finish()?, surv.finish()?])
}

pub fn master(rc: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    rc.ensure_out_dir()?;
    let sd = rc.spectrum()?;
    let levels = rc.levels();
    let dim = rc.model.dim();
    let opts = MasterOptions {
        condition_cap: rc.condition_cap(),
    };

    let mut pops_out =
        CsvWriter::create(&rc.out_dir, "populations.csv", &["t", "n", "population"])?;
    let mut w_out = CsvWriter::create(&rc.out_dir, "w_coeffs.csv", &["t", "n", "k", "W"])?;
    let mut res_out = CsvWriter::create(
        &rc.out_dir,
        "master_residual.csv",
        &["t", "rate_form", "balance_form", "condition"],
    )?;
    let mut sing_out = CsvWriter::create(
        &rc.out_dir,
        "singular_points.txt",
        &["kind", "t1", "t2", "condition"],
    )?;

    // (t, det sign) of the last point where W exists
    let mut last_regular: Option<(f64, f64)> = None;
    for t in rc.grid() {
        let tp = transition_probabilities(&amplitudes_at(&sd, t));
        let pops = populations_at(&tp, &rc.initial)?;
        let ts = fmt_f64(t);
        for (n, p) in pops.iter().enumerate() {
            pops_out.row(&[ts.clone(), n.to_string(), fmt_f64(*p)])?;
        }

        let mc = match master_coefficients(&tp, opts) {
            Ok(mc) => Some(mc),
            Err(Error::SingularTransition { condition, .. }) => {
                sing_out.row(&[
                    "singular".into(),
                    ts.clone(),
                    ts.clone(),
                    fmt_f64(condition),
                ])?;
                last_regular = None;
                None
            }
            Err(e) => return Err(e.into()),
        };
        if let Some(mc) = &mc {
            if let Some((t_prev, sign)) = last_regular {
                if sign != mc.det_sign() {
                    sing_out.row(&[
                        "crossing".into(),
                        fmt_f64(t_prev),
                        ts.clone(),
                        "nan".into(),
                    ])?;
                }
            }
            last_regular = Some((t, mc.det_sign()));
        }
        for &n in &levels {
            for k in 0..dim {
                let w = mc.as_ref().map(|m| m.w()[(n, k)]);
                w_out.row(&[ts.clone(), n.to_string(), k.to_string(), fmt_opt(w)])?;
            }
        }
        let r = residual_at(&tp, mc.as_ref(), &pops, &rc.initial)?;
        res_out.row(&[
            ts,
            fmt_opt(r.rate_form),
            fmt_opt(r.balance_form),
            fmt_opt(mc.as_ref().map(|m| m.condition())),
        ])?;
    }
    Ok(vec![
        pops_out.finish()?,
        w_out.finish()?,
        res_out.finish()?,
        sing_out.finish()?,
    ])
}

/// Evenly spaced grid indices, always including both ends.
pub fn sample_indices(len: usize, count: usize) -> Vec<usize> {
    if len == 0 {
        return Vec::new();
    }
    if count >= len {
        return (0..len).collect();
    }
    if count <= 1 {
        return vec![0];
    }
    let mut out: Vec<usize> = (0..count)
        .map(|k| ((k * (len - 1)) as f64 / (count - 1) as f64).round() as usize)
        .collect();
    out.dedup();
    out
}

pub fn langevin(rc: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    rc.ensure_out_dir()?;
    let sd = rc.spectrum()?;
    let opts = rc.langevin_options();
    let grid = rc.grid();

    let mut coef_out = CsvWriter::create(
        &rc.out_dir,
        "langevin.csv",
        &["t", "a", "b", "omega_sq", "gamma", "singular"],
    )?;
    let mut res_out = CsvWriter::create(
        &rc.out_dir,
        "langevin_residual.csv",
        &["t", "residual", "wronskian", "imaginary_residue"],
    )?;
    let mut sing_out = CsvWriter::create(
        &rc.out_dir,
        "langevin_singular_points.txt",
        &["kind", "t1", "t2", "wronskian"],
    )?;

    let mut last_regular: Option<(f64, bool)> = None;
    for &t in &grid {
        let c = coefficients_from_survival(&survival_point(&sd, t), opts);
        let ts = fmt_f64(t);
        coef_out.row(&[
            ts.clone(),
            fmt_f64(c.a),
            fmt_f64(c.b),
            fmt_opt(c.omega_sq),
            fmt_opt(c.gamma),
            u8::from(c.singular).to_string(),
        ])?;
        res_out.row(&[
            ts.clone(),
            fmt_opt(c.homogeneous_residual()),
            fmt_f64(c.wronskian),
            fmt_f64(c.imaginary_residue),
        ])?;
        if c.singular {
            sing_out.row(&["singular".into(), ts.clone(), ts, fmt_f64(c.wronskian)])?;
            last_regular = None;
        } else {
            let positive = c.wronskian > 0.0;
            if let Some((t_prev, was_positive)) = last_regular {
                if was_positive != positive {
                    sing_out.row(&["crossing".into(), fmt_f64(t_prev), ts, "nan".into()])?;
                }
            }
            last_regular = Some((t, positive));
        }
    }

    let count = rc
        .config
        .analysis
        .covariance_points
        .unwrap_or(DEFAULT_COVARIANCE_POINTS);
    let times: Vec<f64> = sample_indices(grid.len(), count)
        .into_iter()
        .map(|k| grid[k])
        .collect();
    let rows: Vec<Vec<Complex64>> = times
        .iter()
        .map(|&t| {
            let [row, _, _] = amplitude_row(&sd, 0, t);
            row
        })
        .collect();
    let mut cov_out = CsvWriter::create(&rc.out_dir, "noise_cov.csv", &["t", "t_prime", "c_ff"])?;
    for (i, &t) in times.iter().enumerate() {
        for (j, &tp) in times.iter().enumerate() {
            let c = noise_covariance_rows(&rows[i], &rows[j], &rc.initial, &rc.model)?;
            cov_out.row(&[fmt_f64(t), fmt_f64(tp), fmt_f64(c)])?;
        }
    }

    Ok(vec![
        coef_out.finish()?,
        res_out.finish()?,
        sing_out.finish()?,
        cov_out.finish()?,
    ])
}

#[derive(Debug, Clone, Serialize)]
pub struct GoldenReport {
    pub gamma_pred: f64,
    pub gamma_fit: f64,
    pub delta_omega_pred: f64,
    pub omega_fit: f64,
    pub window: [f64; 2],
    pub goodness: f64,
    /// `null` when the model has no resonant coupled pair.
    pub w_deviation: Option<f64>,
    pub density_of_states: f64,
    pub pv_cutoff: f64,
    pub fit_points: usize,
    pub w_pairs: Vec<[usize; 2]>,
    pub w_points_used: usize,
    pub w_points_skipped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
}

/// Fit window: the configured one, else from five inverse bandwidths up to
/// half the recurrence time, clipped to the grid.
pub fn fit_window(rc: &RunConfig, density_of_states: f64) -> Result<(f64, f64), RunError> {
    if let Some(w) = rc.window {
        return Ok(w);
    }
    let freqs = &rc.model.bath_frequencies;
    let (lo, hi) = freqs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &w| {
            (lo.min(w), hi.max(w))
        });
    let bandwidth = hi - lo;
    let t1 = if bandwidth > 0.0 {
        5.0 / bandwidth
    } else {
        0.0
    };
    let t_rec = if density_of_states > 0.0 {
        std::f64::consts::TAU * density_of_states
    } else {
        f64::INFINITY
    };
    let t2 = (0.5 * t_rec).min(rc.t_max);
    if !(t1 < t2) {
        return Err(RunError::Config(format!(
            "no default fit window: [{t1}, {t2}] is empty; set analysis.window or --window"
        )));
    }
    Ok((t1, t2))
}

pub fn golden_report(rc: &RunConfig) -> Result<GoldenReport, RunError> {
    let sd = rc.spectrum()?;
    let opts = PredictionOptions {
        pv_cutoff: rc.config.analysis.pv_cutoff,
    };
    let pred = perturbative_prediction(&rc.model, opts)?;
    let window = fit_window(rc, pred.density_of_states)?;
    let grid = rc.grid();
    let series: Vec<(f64, Complex64)> = grid
        .iter()
        .filter(|&&t| t >= window.0 && t <= window.1)
        .map(|&t| (t, survival_point(&sd, t).a))
        .collect();
    let fit = fit_exponential(&series, window)?;

    let pairs = resonant_pairs(&rc.model, RESONANCE_TOLERANCE);
    let (w_deviation, used, skipped) = if pairs.is_empty() {
        (None, 0, 0)
    } else {
        let in_window: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|&t| t >= window.0 && t <= window.1 && t > 0.0)
            .collect();
        let opts = MasterOptions {
            condition_cap: rc.condition_cap(),
        };
        let times: Vec<f64> = sample_indices(in_window.len(), MAX_RATE_SAMPLES)
            .into_iter()
            .map(|k| in_window[k])
            .collect();
        let samples = exact_rate_samples(&sd, &pairs, &times, opts)?;
        let cmp = compare_exact_vs_golden(&rc.model, &pairs, &samples)?;
        (
            (cmp.points_used > 0).then_some(cmp.max_relative_deviation),
            cmp.points_used,
            cmp.points_skipped,
        )
    };

    Ok(GoldenReport {
        gamma_pred: pred.gamma,
        gamma_fit: fit.gamma_fit,
        delta_omega_pred: pred.delta_omega,
        omega_fit: fit.omega_fit,
        window: [window.0, window.1],
        goodness: fit.goodness,
        w_deviation,
        density_of_states: pred.density_of_states,
        pv_cutoff: pred.pv_cutoff,
        fit_points: fit.points,
        w_pairs: pairs.iter().map(|&(n, m)| [n, m]).collect(),
        w_points_used: used,
        w_points_skipped: skipped,
        warning: pred.warning,
    })
}

pub fn golden(rc: &RunConfig) -> Result<Vec<PathBuf>, RunError> {
    rc.ensure_out_dir()?;
    let report = golden_report(rc)?;
    let path = rc.out_dir.join("golden_report.json");
    let mut text = serde_json::to_string_pretty(&report).expect("report serialises");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| RunError::io(&path, e))?;
    Ok(vec![path])
}

#[cfg(test)]
mod tests {
    use super::sample_indices;

    #[test]
    fn sampling_keeps_ends() {
        assert_eq!(sample_indices(5, 10), vec![0, 1, 2, 3, 4]);
        assert_eq!(sample_indices(11, 3), vec![0, 5, 10]);
        assert_eq!(sample_indices(2001, 41).len(), 41);
        assert_eq!(*sample_indices(2001, 41).last().unwrap(), 2000);
        assert_eq!(sample_indices(0, 3), Vec::<usize>::new());
        assert_eq!(sample_indices(7, 1), vec![0]);
    }
}
