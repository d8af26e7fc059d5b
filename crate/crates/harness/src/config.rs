//! Experiment configuration.
//!
//! The file format is a flat JSON object. Every key except `f_star` and `m`
//! has a default, so the smallest useful config is `{"f_star": 0.2, "m": 20000}`:
//!
//! | key            | default      | meaning                                         |
//! |----------------|--------------|-------------------------------------------------|
//! | `objective`    | `"capped"`   | `capped`, `absolute`, `quadratic` or `abs-sum`  |
//! | `dim`          | `10`         | parameter dimension `d`                         |
//! | `cap`          | `0.5`        | cap `c` of the capped regression loss           |
//! | `noise_std`    | `0.1`        | regression target noise                         |
//! | `planted_norm` | `1.0`        | norm of the planted regression parameter        |
//! | `radius`       | `10.0`       | domain radius `R` of the quadratic              |
//! | `n_data`       | `m`          | dataset size drawn (must be at least `m`)       |
//! | `data_seed`    | `0`          | seed of the objective and dataset               |
//! | `delta`        | `0.1`        | smoothing / stationarity radius `δ`             |
//! | `lipschitz`    | objective's  | `L` handed to the planner and calibration       |
//! | `f_star`       | required     | initial suboptimality bound `F*`                |
//! | `m`            | required     | dataset budget `M` for the planner              |
//! | `rho`          | `null`       | privacy parameter; `null`, `"none"` or `"inf"` disable noise |
//! | `oracle`       | `"tree"`     | `tree`, `naive` or `exact-debug`                |
//! | `seeds`        | `[0]`        | replicate seeds                                 |
//! | `out_dir`      | `"results"`  | output directory                                |
//! | `n_mc`         | `4`          | fresh data draws per certificate point          |
//! | `n_points`     | `64`         | ball samples of the output certificate          |
//! | `x_init`       | zeros        | starting point `x_1^1`                          |

use std::path::{Path, PathBuf};

use po2nc_core::o2nc::OracleKind;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{HarnessError, HarnessResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    Capped,
    Absolute,
    Quadratic,
    AbsSum,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "defaults::objective")]
    pub objective: ObjectiveKind,
    #[serde(default = "defaults::dim")]
    pub dim: usize,
    #[serde(default = "defaults::cap")]
    pub cap: f64,
    #[serde(default = "defaults::noise_std")]
    pub noise_std: f64,
    #[serde(default = "defaults::planted_norm")]
    pub planted_norm: f64,
    #[serde(default = "defaults::radius")]
    pub radius: f64,
    #[serde(default)]
    pub n_data: Option<usize>,
    #[serde(default)]
    pub data_seed: u64,
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    #[serde(default)]
    pub lipschitz: Option<f64>,
    pub f_star: f64,
    pub m: usize,
    #[serde(default, serialize_with = "ser_rho", deserialize_with = "de_rho")]
    pub rho: Option<f64>,
    #[serde(default = "defaults::oracle")]
    pub oracle: OracleKind,
    #[serde(default = "defaults::seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "defaults::out_dir")]
    pub out_dir: PathBuf,
    #[serde(default = "defaults::n_mc")]
    pub n_mc: usize,
    #[serde(default = "defaults::n_points")]
    pub n_points: usize,
    #[serde(default)]
    pub x_init: Option<Vec<f64>>,
}

mod defaults {
    use super::*;

    pub fn objective() -> ObjectiveKind {
        ObjectiveKind::Capped
    }
    pub fn dim() -> usize {
        10
    }
    pub fn cap() -> f64 {
        0.5
    }
    pub fn noise_std() -> f64 {
        0.1
    }
    pub fn planted_norm() -> f64 {
        1.0
    }
    pub fn radius() -> f64 {
        10.0
    }
    pub fn delta() -> f64 {
        0.1
    }
    pub fn oracle() -> OracleKind {
        OracleKind::Tree
    }
    pub fn seeds() -> Vec<u64> {
        vec![0]
    }
    pub fn out_dir() -> PathBuf {
        PathBuf::from("results")
    }
    pub fn n_mc() -> usize {
        4
    }
    pub fn n_points() -> usize {
        64
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RhoField {
    Number(f64),
    Text(String),
}

fn de_rho<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    match Option::<RhoField>::deserialize(d)? {
        None => Ok(None),
        Some(RhoField::Number(r)) if r.is_infinite() && r > 0.0 => Ok(None),
        Some(RhoField::Number(r)) => Ok(Some(r)),
        Some(RhoField::Text(s)) => parse_rho(&s).map_err(serde::de::Error::custom),
    }
}

fn ser_rho<S: Serializer>(rho: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match rho {
        Some(r) => s.serialize_f64(*r),
        None => s.serialize_str("none"),
    }
}

/// Parses a privacy parameter: a positive number, or `none` / `inf` for the
/// non-private mode.
pub fn parse_rho(s: &str) -> Result<Option<f64>, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "none" | "inf" | "infinity" => Ok(None),
        other => other
            .parse::<f64>()
            .map_err(|e| format!("rho {s:?}: {e}"))
            .map(|r| if r.is_infinite() { None } else { Some(r) }),
    }
}

/// Display form of a privacy parameter used in result files.
pub fn rho_label(rho: Option<f64>) -> String {
    match rho {
        Some(r) => format!("{r}"),
        None => "none".to_string(),
    }
}

impl ExperimentConfig {
    /// A config with defaults for everything but the two required keys.
    pub fn new(f_star: f64, m: usize) -> Self {
        serde_json::from_value(serde_json::json!({ "f_star": f_star, "m": m }))
            .expect("defaults deserialize")
    }

    pub fn from_json(text: &str) -> HarnessResult<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> HarnessResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn n_data(&self) -> usize {
        self.n_data.unwrap_or(self.m)
    }

    pub fn x_init(&self) -> Vec<f64> {
        self.x_init.clone().unwrap_or_else(|| vec![0.0; self.dim])
    }

    pub fn validate(&self) -> HarnessResult<()> {
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.dim == 0 {
            return bad("dim must be >= 1".into());
        }
        for (name, v) in [
            ("delta", self.delta),
            ("f_star", self.f_star),
            ("cap", self.cap),
            ("radius", self.radius),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if let Some(l) = self.lipschitz {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("lipschitz must be positive, got {l}"));
            }
        }
        if let Some(r) = self.rho {
            if !(r > 0.0) {
                return bad(format!("rho must be positive, got {r}"));
            }
        }
        if !(self.noise_std >= 0.0 && self.planted_norm >= 0.0) {
            return bad("noise_std and planted_norm must be nonnegative".into());
        }
        if self.m == 0 {
            return bad("m must be >= 1".into());
        }
        if self.n_data() < self.m {
            return bad(format!("n_data = {} is smaller than m = {}", self.n_data(), self.m));
        }
        if self.seeds.is_empty() {
            return bad("at least one replicate seed is required".into());
        }
        if self.n_mc == 0 || self.n_points == 0 {
            return bad("n_mc and n_points must be >= 1".into());
        }
        if let Some(x) = &self.x_init {
            if x.len() != self.dim {
                return bad(format!("x_init has length {}, expected {}", x.len(), self.dim));
            }
        }
        Ok(())
    }
}
