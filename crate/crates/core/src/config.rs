//! JSON model configuration.
//!
//! ```json
//! {
//!   "system":  { "omega": 1.0, "mass": 1.0, "v_self": 0.0 },
//!   "bath":    { "n": 201,
//!                "spectrum": { "type": "linear", "omega_min": 0.0, "omega_max": 2.0 },
//!                "coupling": { "type": "uniform", "g": 0.01 },
//!                "bath_bath": "zero" },
//!   "initial": { "type": "thermal", "beta": 1.0, "system_occupation": 1.0 },
//!   "time":    { "t_max": 200.0, "dt": 0.1 }
//! }
//! ```
//!
//! `spectrum` may instead be `{"type": "explicit", "omegas": [...]}`,
//! `coupling` `{"type": "explicit", "gs": [...]}`, `bath_bath` an explicit
//! `n x n` matrix and `initial` `{"type": "explicit", "occupations": [...]}`.
//! Complex entries are written as a number or a `[re, im]` pair. Without a
//! `bath` the system is isolated; without `initial` it holds one quantum and
//! the bath is empty. An optional `analysis` block carries fit windows and
//! tolerance overrides.

use std::path::Path;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{preset_linear_bath, preset_thermal_populations, InitialPopulations, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bath: Option<BathConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialConfig>,
    pub time: TimeConfig,
    #[serde(default, skip_serializing_if = "AnalysisConfig::is_empty")]
    pub analysis: AnalysisConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub omega: f64,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default)]
    pub v_self: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub n: usize,
    pub spectrum: SpectrumConfig,
    pub coupling: CouplingConfig,
    #[serde(default)]
    pub bath_bath: BathBathConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum SpectrumConfig {
    Linear { omega_min: f64, omega_max: f64 },
    Explicit { omegas: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum CouplingConfig {
    Uniform { g: ComplexValue },
    Explicit { gs: Vec<ComplexValue> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroTag {
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BathBathConfig {
    Zero(ZeroTag),
    Matrix(Vec<Vec<ComplexValue>>),
}

impl Default for BathBathConfig {
    fn default() -> Self {
        Self::Zero(ZeroTag::Zero)
    }
}

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn to_complex(self) -> Complex<f64> {
        match self {
            Self::Real(x) => Complex::new(x, 0.0),
            Self::Pair([re, im]) => Complex::new(re, im),
        }
    }

    pub fn from_complex(z: Complex<f64>) -> Self {
        if z.im == 0.0 && !z.im.is_sign_negative() {
            Self::Real(z.re)
        } else {
            Self::Pair([z.re, z.im])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialConfig {
    Thermal {
        beta: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        system_occupation: Option<f64>,
    },
    Explicit {
        occupations: Vec<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_max: f64,
    pub dt: f64,
}

/// Optional analysis settings; every field falls back to a documented default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Exponential-fit window `[t1, t2]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    /// Cap on the condition estimate of `P(t)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub condition_cap: Option<f64>,
    /// Relative Wronskian threshold for flagging Langevin singularities.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wronskian_tol: Option<f64>,
    /// Principal-value exclusion radius.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pv_cutoff: Option<f64>,
    /// Number of grid times used on each axis of the noise covariance table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariance_points: Option<usize>,
    /// Source levels written to per-entry outputs; all levels when absent
    /// and the model is small, otherwise the system level only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Tolerances::is_empty")]
    pub tolerances: Tolerances,
}

impl AnalysisConfig {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

/// Overrides for the validation suite thresholds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unitarity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stochasticity: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conservation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub langevin_residual: Option<f64>,
}

impl Tolerances {
    fn is_empty(&self) -> bool {
        *self == Self::default()
    }
}

impl Config {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    /// Explicit configuration reproducing `spec` exactly.
    pub fn from_model(
        spec: &ModelSpec<f64>,
        initial: Option<&InitialPopulations<f64>>,
        time: TimeConfig,
    ) -> Self {
        let bath = (spec.bath_size() > 0).then(|| BathConfig {
            n: spec.bath_size(),
            spectrum: SpectrumConfig::Explicit {
                omegas: spec.bath_frequencies.clone(),
            },
            coupling: CouplingConfig::Explicit {
                gs: spec
                    .couplings
                    .iter()
                    .map(|&g| ComplexValue::from_complex(g))
                    .collect(),
            },
            bath_bath: spec
                .bath_bath
                .as_ref()
                .map_or_else(BathBathConfig::default, |m| {
                    BathBathConfig::Matrix(
                        m.iter()
                            .map(|r| r.iter().map(|&z| ComplexValue::from_complex(z)).collect())
                            .collect(),
                    )
                }),
        });
        Self {
            system: SystemConfig {
                omega: spec.omega,
                mass: spec.mass,
                v_self: spec.self_shift,
            },
            bath,
            initial: initial.map(|p| InitialConfig::Explicit {
                occupations: p.occupations().to_vec(),
            }),
            time,
            analysis: AnalysisConfig::default(),
        }
    }

    fn check(&self) -> Result<()> {
        let t = self.time;
        if !(t.dt.is_finite() && t.dt > 0.0) {
            return Err(Error::Config(format!(
                "time.dt must be positive, got {}",
                t.dt
            )));
        }
        if !(t.t_max.is_finite() && t.t_max >= t.dt) {
            return Err(Error::Config(format!(
                "time.t_max must be at least time.dt, got {}",
                t.t_max
            )));
        }
        if let Some([t1, t2]) = self.analysis.window {
            if !(t1 < t2) {
                return Err(Error::Config(format!(
                    "analysis.window [{t1}, {t2}] is empty"
                )));
            }
        }
        if self.analysis.covariance_points == Some(0) {
            return Err(Error::Config(
                "analysis.covariance_points must be positive".into(),
            ));
        }
        let tol = &self.analysis.tolerances;
        for (name, v) in [
            ("unitarity", tol.unitarity),
            ("stochasticity", tol.stochasticity),
            ("conservation", tol.conservation),
            ("master_residual", tol.master_residual),
            ("langevin_residual", tol.langevin_residual),
            ("condition_cap", self.analysis.condition_cap),
            ("wronskian_tol", self.analysis.wronskian_tol),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Config(format!(
                        "analysis.{name} must be positive, got {v}"
                    )));
                }
            }
        }
        let model = self.model()?;
        self.initial_populations(&model)?;
        let dim = model.dim();
        if let Some(levels) = &self.analysis.levels {
            if let Some(&bad) = levels.iter().find(|&&n| n >= dim) {
                return Err(Error::Config(format!(
                    "analysis.levels: level {bad} out of range for {dim} levels"
                )));
            }
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelSpec<f64>> {
        let s = &self.system;
        let Some(bath) = &self.bath else {
            let mut spec = ModelSpec::isolated(s.omega);
            spec.mass = s.mass;
            spec.self_shift = s.v_self;
            return finish(spec);
        };
        let n = bath.n;
        let mut spec = match &bath.spectrum {
            SpectrumConfig::Linear {
                omega_min,
                omega_max,
            } => preset_linear_bath(n, *omega_min, *omega_max, s.omega, 0.0, s.v_self)
                .map_err(|e| Error::Config(format!("bath.spectrum: {e}")))?,
            SpectrumConfig::Explicit { omegas } => {
                if omegas.len() != n {
                    return Err(Error::Config(format!(
                        "bath.spectrum.omegas: {} values for n = {n}",
                        omegas.len()
                    )));
                }
                let mut spec = ModelSpec::with_bath(s.omega, omegas.clone(), vec![0.0; n]);
                spec.self_shift = s.v_self;
                spec
            }
        };
        spec.mass = s.mass;
        spec.couplings = match &bath.coupling {
            CouplingConfig::Uniform { g } => vec![g.to_complex(); n],
            CouplingConfig::Explicit { gs } => {
                if gs.len() != n {
                    return Err(Error::Config(format!(
                        "bath.coupling.gs: {} values for n = {n}",
                        gs.len()
                    )));
                }
                gs.iter().map(|g| g.to_complex()).collect()
            }
        };
        spec.bath_bath = match &bath.bath_bath {
            BathBathConfig::Zero(_) => None,
            BathBathConfig::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::Config(format!(
                        "bath.bath_bath: expected a {n}x{n} matrix"
                    )));
                }
                Some(
                    rows.iter()
                        .map(|r| r.iter().map(|z| z.to_complex()).collect())
                        .collect(),
                )
            }
        };
        finish(spec)
    }

    pub fn initial_populations(&self, spec: &ModelSpec<f64>) -> Result<InitialPopulations<f64>> {
        match &self.initial {
            None => Ok(InitialPopulations::system_excited(spec.dim())),
            Some(InitialConfig::Thermal {
                beta,
                system_occupation,
            }) => preset_thermal_populations(spec, *beta, *system_occupation)
                .map_err(|e| Error::Config(format!("initial: {e}"))),
            Some(InitialConfig::Explicit { occupations }) => {
                if occupations.len() != spec.dim() {
                    return Err(Error::Config(format!(
                        "initial.occupations: {} values for {} levels",
                        occupations.len(),
                        spec.dim()
                    )));
                }
                InitialPopulations::new(occupations.clone())
                    .map_err(|e| Error::Config(format!("initial.occupations: {e}")))
            }
        }
    }
}

fn finish(spec: ModelSpec<f64>) -> Result<ModelSpec<f64>> {
    spec.validate()
        .map_err(|e| Error::Config(format!("model: {e}")))?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::build_hamiltonian;

    const LINEAR: &str = r#"{
        "system": {"omega": 1.0, "mass": 1.0, "v_self": 0.05},
        "bath": {"n": 201,
                 "spectrum": {"type": "linear", "omega_min": 0.0, "omega_max": 2.0},
                 "coupling": {"type": "uniform", "g": 0.01},
                 "bath_bath": "zero"},
        "time": {"t_max": 200.0, "dt": 0.1}
    }"#;

    #[test]
    fn linear_config_matches_preset() {
        let cfg = Config::from_json_str(LINEAR).unwrap();
        let spec = cfg.model().unwrap();
        let preset = preset_linear_bath(201, 0.0, 2.0, 1.0, 0.01, 0.05).unwrap();
        assert_eq!(spec, preset);
        let init = cfg.initial_populations(&spec).unwrap();
        assert_eq!(init.total(), 1.0);
        assert_eq!(init.occupations()[0], 1.0);
    }

    #[test]
    fn explicit_round_trip_is_bit_exact() {
        let mut spec =
            ModelSpec::with_bath(1.0, vec![0.1 + 0.2, 1.0 / 3.0, 2.5], vec![0.1, 0.07, 1e-3]);
        spec.couplings[1] = Complex::new(0.01, -0.003);
        spec.self_shift = 0.017;
        spec.mass = 2.0;
        spec.bath_bath = Some(vec![
            vec![
                Complex::new(0.0, 0.0),
                Complex::new(0.001, 0.002),
                Complex::new(0.0, 0.0),
            ],
            vec![
                Complex::new(0.001, -0.002),
                Complex::new(0.003, 0.0),
                Complex::new(0.0, 0.0),
            ],
            vec![
                Complex::new(0.0, 0.0),
                Complex::new(0.0, 0.0),
                Complex::new(0.0, 0.0),
            ],
        ]);
        let init = InitialPopulations::new(vec![1.0, 0.25, 1.0 / 7.0, 0.0]).unwrap();
        let cfg = Config::from_model(
            &spec,
            Some(&init),
            TimeConfig {
                t_max: 10.0,
                dt: 0.1,
            },
        );
        let text = cfg.to_json_string();
        let back = Config::from_json_str(&text).unwrap();
        assert_eq!(back, cfg);
        let spec_back = back.model().unwrap();
        assert_eq!(
            build_hamiltonian(&spec_back).unwrap(),
            build_hamiltonian(&spec).unwrap()
        );
        assert_eq!(back.initial_populations(&spec_back).unwrap(), init);
    }

    #[test]
    fn isolated_system_without_bath() {
        let cfg = Config::from_json_str(
            r#"{"system": {"omega": 1.0}, "time": {"t_max": 1.0, "dt": 0.5}}"#,
        )
        .unwrap();
        let spec = cfg.model().unwrap();
        assert_eq!(spec.dim(), 1);
        assert_eq!(spec.mass, 1.0);
    }

    #[test]
    fn thermal_initial_state() {
        let cfg = Config::from_json_str(
            r#"{"system": {"omega": 1.0},
                "bath": {"n": 2, "spectrum": {"type": "explicit", "omegas": [1.0, 2.0]},
                         "coupling": {"type": "explicit", "gs": [0.1, [0.0, 0.2]]}},
                "initial": {"type": "thermal", "beta": 1.0},
                "time": {"t_max": 1.0, "dt": 0.5}}"#,
        )
        .unwrap();
        let spec = cfg.model().unwrap();
        assert_eq!(spec.couplings[1], Complex::new(0.0, 0.2));
        let init = cfg.initial_populations(&spec).unwrap();
        assert!((init.occupations()[1] - 1.0 / (std::f64::consts::E - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn diagnostics_name_the_problem() {
        let typo = r#"{"system": {"omga": 1.0}, "time": {"t_max": 1.0, "dt": 0.5}}"#;
        let msg = Config::from_json_str(typo).unwrap_err().to_string();
        assert!(msg.contains("omga") && msg.contains("line 1"), "{msg}");

        let mismatch = r#"{"system": {"omega": 1.0},
            "bath": {"n": 3, "spectrum": {"type": "explicit", "omegas": [1.0, 2.0]},
                     "coupling": {"type": "uniform", "g": 0.1}},
            "time": {"t_max": 1.0, "dt": 0.5}}"#;
        let msg = Config::from_json_str(mismatch).unwrap_err().to_string();
        assert!(msg.contains("bath.spectrum.omegas"), "{msg}");

        let bad_dt = r#"{"system": {"omega": 1.0}, "time": {"t_max": 1.0, "dt": 0.0}}"#;
        assert!(Config::from_json_str(bad_dt)
            .unwrap_err()
            .to_string()
            .contains("time.dt"));

        let zero_mode = r#"{"system": {"omega": 1.0},
            "bath": {"n": 3, "spectrum": {"type": "linear", "omega_min": 0.0, "omega_max": 2.0},
                     "coupling": {"type": "uniform", "g": 0.1}},
            "initial": {"type": "thermal", "beta": 2.0},
            "time": {"t_max": 1.0, "dt": 0.5}}"#;
        let msg = Config::from_json_str(zero_mode).unwrap_err().to_string();
        assert!(msg.contains("initial"), "{msg}");

        let level = r#"{"system": {"omega": 1.0}, "time": {"t_max": 1.0, "dt": 0.5},
            "analysis": {"levels": [1]}}"#;
        assert!(Config::from_json_str(level)
            .unwrap_err()
            .to_string()
            .contains("analysis.levels"));
    }
}
