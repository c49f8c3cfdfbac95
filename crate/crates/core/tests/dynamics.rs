use approx::assert_relative_eq;
use num_complex::Complex64;
use proptest::prelude::*;
use qbm_core::amplitude::{amplitudes_at, propagator_at, survival_amplitude, time_grid};
use qbm_core::linalg::{eigendecompose, ComplexMatrix, HermitianMatrix};
use qbm_core::master::{
    evolve_populations, master_coefficients, master_residual, populations_at,
    transition_probabilities, MasterOptions,
};
use qbm_core::model::{build_hamiltonian, preset_linear_bath, InitialPopulations, ModelSpec};
use qbm_core::Spectrum;

fn spectrum(spec: &ModelSpec<f64>) -> Spectrum {
    eigendecompose(&build_hamiltonian(spec).unwrap()).unwrap()
}

fn hermitian_from(entries: &[(f64, f64)], n: usize) -> HermitianMatrix<f64> {
    let mut k = 0;
    HermitianMatrix::from_lower(n, |_, _| {
        let (re, im) = entries[k % entries.len()];
        k += 1;
        Complex64::new(re, im)
    })
    .unwrap()
}

#[test]
fn propagator_composes() {
    let mut spec = preset_linear_bath(8, 0.6, 1.4, 1.05, 0.04, 0.01).unwrap();
    spec.couplings[2] = Complex64::new(0.02, 0.03);
    let sd = spectrum(&spec);
    for &(s, t) in &[(0.3, 1.7), (5.0, 11.0), (40.0, 2.5)] {
        let lhs = propagator_at(&sd, s + t);
        let rhs = propagator_at(&sd, s)
            .matmul(&propagator_at(&sd, t))
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-12, "s = {s}, t = {t}");
    }
}

#[test]
fn time_reversal_inverts_propagator() {
    let sd = spectrum(&preset_linear_bath(6, 0.5, 1.5, 1.0, 0.1, 0.0).unwrap());
    let fwd = propagator_at(&sd, 3.7);
    let back = propagator_at(&sd, -3.7);
    assert!(fwd.matmul(&back).unwrap().identity_deviation() < 1e-12);
    assert!(fwd.adjoint().max_abs_diff(&back) < 1e-12);
}

// Independent oracle: integrate i dpsi/dt = h psi with fixed-step RK4 for
// each initial basis state and compare the resulting amplitudes.
fn rk4_propagate(h: &ComplexMatrix<f64>, start: usize, t: f64, steps: usize) -> Vec<Complex64> {
    let n = h.rows();
    let mut psi = vec![Complex64::new(0.0, 0.0); n];
    psi[start] = Complex64::new(1.0, 0.0);
    let dt = t / steps as f64;
    let rhs = |v: &[Complex64]| -> Vec<Complex64> {
        h.mul_vec(v)
            .into_iter()
            .map(|z| z * Complex64::new(0.0, -1.0))
            .collect()
    };
    let axpy = |v: &[Complex64], k: &[Complex64], c: f64| -> Vec<Complex64> {
        v.iter().zip(k).map(|(a, b)| a + b * c).collect()
    };
    for _ in 0..steps {
        let k1 = rhs(&psi);
        let k2 = rhs(&axpy(&psi, &k1, dt / 2.0));
        let k3 = rhs(&axpy(&psi, &k2, dt / 2.0));
        let k4 = rhs(&axpy(&psi, &k3, dt));
        for i in 0..n {
            psi[i] += (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (dt / 6.0);
        }
    }
    psi
}

#[test]
fn amplitudes_match_schrodinger_integration() {
    let mut spec = ModelSpec::with_bath(1.0, vec![0.9, 1.2], vec![0.15, 0.07]);
    spec.couplings[1] = Complex64::new(0.05, -0.05);
    spec.self_shift = 0.02;
    spec.bath_bath = Some(vec![
        vec![Complex64::new(0.0, 0.0), Complex64::new(0.01, 0.02)],
        vec![Complex64::new(0.01, -0.02), Complex64::new(0.0, 0.0)],
    ]);
    let h = build_hamiltonian(&spec).unwrap();
    let sd = eigendecompose(&h).unwrap();
    let t = 12.5;
    let a = propagator_at(&sd, t);
    for n in 0..3 {
        // <psi_m| e^{-iht} |psi_n> is component m of the evolved state n
        let psi = rk4_propagate(h.matrix(), n, t, 20_000);
        for m in 0..3 {
            assert!((a[(n, m)] - psi[m]).norm() < 1e-10, "n = {n}, m = {m}");
        }
    }
}

#[test]
fn two_mode_populations_match_direct_evolution() {
    // detuned pair: closed-form Rabi populations
    let (omega, w1, g) = (1.0, 1.3, 0.2);
    let spec = ModelSpec::with_bath(omega, vec![w1], vec![g]);
    let sd = spectrum(&spec);
    let init = InitialPopulations::new(vec![1.0, 0.3]).unwrap();
    let delta = (w1 - omega) / 2.0;
    let rabi = (delta * delta + g * g).sqrt();
    for &t in &[0.5, 3.0, 9.0, 27.0] {
        let p_swap = (g / rabi).powi(2) * (rabi * t).sin().powi(2);
        let expected = [
            1.0 * (1.0 - p_swap) + 0.3 * p_swap,
            0.3 * (1.0 - p_swap) + p_swap,
        ];
        let pops =
            populations_at(&transition_probabilities(&amplitudes_at(&sd, t)), &init).unwrap();
        assert_relative_eq!(pops[0], expected[0], epsilon = 1e-12);
        assert_relative_eq!(pops[1], expected[1], epsilon = 1e-12);
    }
}

#[test]
fn weak_coupling_bath_master_residual() {
    let spec = preset_linear_bath(51, 0.5, 1.5, 1.0, 0.01, 0.0).unwrap();
    let sd = spectrum(&spec);
    let mut occ = vec![0.0; 52];
    occ[0] = 1.0;
    for (k, o) in occ.iter_mut().enumerate().skip(1) {
        *o = 0.1 * (k % 3) as f64;
    }
    let init = InitialPopulations::new(occ).unwrap();
    let grid = time_grid(60.0, 0.5);
    let tps: Vec<_> = grid
        .iter()
        .map(|&t| transition_probabilities(&amplitudes_at(&sd, t)))
        .collect();
    let mcs: Vec<_> = tps
        .iter()
        .map(|tp| master_coefficients(tp, MasterOptions::default()))
        .collect();
    let traj = evolve_populations(&tps, &init).unwrap();
    assert!(traj.conservation_residual() <= 1e-10 * init.total());
    let residuals = master_residual(&tps, &mcs, &traj, &init).unwrap();
    let mut worst = 0.0f64;
    let mut used = 0;
    for r in &residuals {
        if let (Some(a), Some(b)) = (r.rate_form, r.balance_form) {
            worst = worst.max(a).max(b);
            used += 1;
        }
    }
    assert!(
        used > residuals.len() / 2,
        "only {used} non-singular points"
    );
    assert!(worst <= 1e-8, "worst residual {worst:e}");
}

#[test]
fn survival_recurs_near_recurrence_time() {
    let spec = preset_linear_bath(201, 0.0, 2.0, 1.0, 0.01, 0.0).unwrap();
    let sd = spectrum(&spec);
    let t_rec = 2.0 * std::f64::consts::PI / 0.01;
    let floor = time_grid(400.0, 0.1)
        .into_iter()
        .map(|t| survival_amplitude(&sd, 100.0 + t).norm())
        .fold(f64::INFINITY, f64::min);
    let peak = time_grid(40.0, 0.1)
        .into_iter()
        .map(|t| survival_amplitude(&sd, t_rec - 20.0 + t).norm())
        .fold(0.0, f64::max);
    assert!(peak > 5.0 * floor, "peak {peak}, floor {floor}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn transition_matrix_is_doubly_stochastic(
        entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 21),
        n in 1usize..=6,
        t in -50.0f64..50.0,
    ) {
        let h = hermitian_from(&entries, n);
        let sd = eigendecompose(&h).unwrap();
        let amps = amplitudes_at(&sd, t);
        prop_assert!(amps.unitarity_residual() <= 1e-12);
        let tp = transition_probabilities(&amps);
        prop_assert!(tp.stochasticity_residual() <= 1e-12);
        prop_assert!(tp.p().as_slice().iter().all(|&x| x >= 0.0));
        // total population rate vanishes
        for s in tp.pdot().col_sums() {
            prop_assert!(s.abs() <= 1e-11);
        }
    }
}
