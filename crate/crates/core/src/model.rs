//! One-particle Hamiltonian of a system oscillator coupled to a discrete bath.
//!
//! Index 0 is always the system oscillator, indices `1..=N` the bath modes.
//! The Hamiltonian is number conserving, so the whole many-body problem is
//! captured by the `(N+1) x (N+1)` matrix built here.

use num_complex::Complex;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::scalar::Real;

/// Declarative description of `h = h0 + v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec<T> {
    /// System frequency.
    pub omega: T,
    /// Oscillator mass; only enters position and noise normalisation.
    pub mass: T,
    /// Diagonal shift of the system level, `<Omega|v|Omega>`.
    pub self_shift: T,
    pub bath_frequencies: Vec<T>,
    /// `g_n = <omega_n|v|Omega>`.
    pub couplings: Vec<Complex<T>>,
    /// Bath-bath block `<omega_n|v|omega_m>`; `None` means zero.
    pub bath_bath: Option<Vec<Vec<Complex<T>>>>,
    /// Density of states recorded by grid presets.
    pub density_of_states: Option<T>,
}

/// Mean initial occupations `<N_m(0)>`, index 0 being the system.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialPopulations<T> {
    occupations: Vec<T>,
}

impl<T: Real> ModelSpec<T> {
    /// System oscillator with no bath.
    pub fn isolated(omega: T) -> Self {
        Self {
            omega,
            mass: T::one(),
            self_shift: T::zero(),
            bath_frequencies: Vec::new(),
            couplings: Vec::new(),
            bath_bath: None,
            density_of_states: None,
        }
    }

    /// Bath with real couplings and no bath-bath interaction.
    pub fn with_bath(omega: T, frequencies: Vec<T>, couplings: Vec<T>) -> Self {
        Self {
            couplings: couplings
                .into_iter()
                .map(|g| Complex::new(g, T::zero()))
                .collect(),
            bath_frequencies: frequencies,
            ..Self::isolated(omega)
        }
    }

    /// Two oscillators of equal frequency `omega` coupled by `g`.
    pub fn two_oscillator(omega: T, g: T) -> Self {
        Self::with_bath(omega, vec![omega], vec![g])
    }

    #[inline]
    pub fn bath_size(&self) -> usize {
        self.bath_frequencies.len()
    }

    /// Dimension of the one-particle space, `N + 1`.
    #[inline]
    pub fn dim(&self) -> usize {
        self.bath_size() + 1
    }

    /// Unperturbed frequency of level `n` (0 = system).
    pub fn level_frequency(&self, n: usize) -> T {
        if n == 0 {
            self.omega
        } else {
            self.bath_frequencies[n - 1]
        }
    }

    /// Matrix element `<psi_n|v|psi_m>`.
    pub fn coupling(&self, n: usize, m: usize) -> Complex<T> {
        match (n, m) {
            (0, 0) => Complex::new(self.self_shift, T::zero()),
            (k, 0) => self.couplings[k - 1],
            (0, k) => self.couplings[k - 1].conj(),
            (a, b) => self
                .bath_bath
                .as_ref()
                .map_or_else(Complex::zero, |v| v[a - 1][b - 1]),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.bath_size();
        if !(self.omega.is_finite() && self.omega > T::zero()) {
            return Err(Error::InvalidModel(format!(
                "system frequency must be positive, got {}",
                self.omega
            )));
        }
        if !(self.mass.is_finite() && self.mass > T::zero()) {
            return Err(Error::InvalidModel(format!(
                "mass must be positive, got {}",
                self.mass
            )));
        }
        if !self.self_shift.is_finite() {
            return Err(Error::InvalidModel("self shift must be finite".into()));
        }
        if let Some((k, w)) = self
            .bath_frequencies
            .iter()
            .enumerate()
            .find(|(_, w)| !(w.is_finite() && **w >= T::zero()))
        {
            return Err(Error::InvalidModel(format!(
                "bath frequency {} is {w}; frequencies must be finite and non-negative",
                k + 1
            )));
        }
        if self.couplings.len() != n {
            return Err(Error::Dimension(format!(
                "{} couplings for {n} bath modes",
                self.couplings.len()
            )));
        }
        if self
            .couplings
            .iter()
            .any(|g| !(g.re.is_finite() && g.im.is_finite()))
        {
            return Err(Error::InvalidModel("couplings must be finite".into()));
        }
        if let Some(v) = &self.bath_bath {
            if v.len() != n || v.iter().any(|r| r.len() != n) {
                return Err(Error::Dimension(format!("bath-bath block must be {n}x{n}")));
            }
            for i in 0..n {
                for j in 0..=i {
                    let d = v[i][j] - v[j][i].conj();
                    if !d.is_zero() || !(v[i][j].re.is_finite() && v[i][j].im.is_finite()) {
                        return Err(Error::NotHermitian {
                            row: i + 1,
                            col: j + 1,
                            deviation: d.norm().to_f64_lossy(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Assembles `h` with `h[0][0] = Omega + v_00`, `h[n][n] = omega_n + v_nn`,
/// `h[n][0] = g_n` and `h[n][m] = v_nm`.
pub fn build_hamiltonian<T: Real>(spec: &ModelSpec<T>) -> Result<HermitianMatrix<T>> {
    spec.validate()?;
    HermitianMatrix::from_lower(spec.dim(), |i, j| {
        let v = spec.coupling(i, j);
        if i == j {
            v + Complex::new(spec.level_frequency(i), T::zero())
        } else {
            v
        }
    })
}

/// Uniform inclusive grid of `n` bath modes on `[omega_min, omega_max]` with
/// identical real couplings `g` and no bath-bath interaction.
pub fn preset_linear_bath<T: Real>(
    n: usize,
    omega_min: T,
    omega_max: T,
    omega: T,
    g: T,
    self_shift: T,
) -> Result<ModelSpec<T>> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "a linear bath grid needs at least two modes, got {n}"
        )));
    }
    if !(omega_min < omega_max) {
        return Err(Error::InvalidArgument(format!(
            "empty band [{omega_min}, {omega_max}]"
        )));
    }
    let width = omega_max - omega_min;
    let intervals = T::from_usize_lossy(n - 1);
    let frequencies = (0..n)
        .map(|k| omega_min + width * T::from_usize_lossy(k) / intervals)
        .collect();
    let mut spec = ModelSpec::with_bath(omega, frequencies, vec![g; n]);
    spec.self_shift = self_shift;
    spec.density_of_states = Some(intervals / width);
    spec.validate()?;
    Ok(spec)
}

impl<T: Real> InitialPopulations<T> {
    pub fn new(occupations: Vec<T>) -> Result<Self> {
        if occupations.is_empty() {
            return Err(Error::InvalidArgument("no occupations given".into()));
        }
        if let Some((k, x)) = occupations
            .iter()
            .enumerate()
            .find(|(_, x)| !(x.is_finite() && **x >= T::zero()))
        {
            return Err(Error::InvalidArgument(format!(
                "occupation {k} is {x}; occupations must be finite and non-negative"
            )));
        }
        Ok(Self { occupations })
    }

    /// One quantum in the system oscillator, bath empty.
    pub fn system_excited(dim: usize) -> Self {
        let mut occupations = vec![T::zero(); dim];
        occupations[0] = T::one();
        Self { occupations }
    }

    #[inline]
    pub fn occupations(&self) -> &[T] {
        &self.occupations
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.occupations.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.occupations.is_empty()
    }

    pub fn total(&self) -> T {
        self.occupations.iter().fold(T::zero(), |a, &x| a + x)
    }
}

/// Bose-Einstein occupations `1/(e^{beta omega_m} - 1)` for the bath; the
/// system occupation defaults to one quantum.
pub fn preset_thermal_populations<T: Real>(
    spec: &ModelSpec<T>,
    beta: T,
    system_occupation: Option<T>,
) -> Result<InitialPopulations<T>> {
    if !(beta > T::zero()) {
        return Err(Error::InvalidArgument(format!(
            "inverse temperature must be positive, got {beta}"
        )));
    }
    let mut occupations = Vec::with_capacity(spec.dim());
    occupations.push(system_occupation.unwrap_or_else(T::one));
    for (k, &w) in spec.bath_frequencies.iter().enumerate() {
        if w.is_zero() {
            return Err(Error::InvalidArgument(format!(
                "bath mode {} has zero frequency; its thermal occupation diverges",
                k + 1
            )));
        }
        occupations.push(T::one() / (beta * w).exp_m1());
    }
    InitialPopulations::new(occupations)
}
