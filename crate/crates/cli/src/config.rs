//! Run configuration: a TOML file, then `--set` overrides, then typed defaults.

use serde::{Deserialize, Serialize};
use toml::{Table, Value};
use torus_mfg::model::ModelConfig;

use crate::error::CliError;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    /// Name of the run directory under `<out>/<subcommand>/`; defaults to `seed-<seed>`.
    pub name: Option<String>,
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub measure: MeasureConfig,
    pub solver: SolverConfig,
    pub hjb: HjbConfig,
    pub master: MasterConfig,
    pub sample: SampleConfig,
    pub mollify: MollifyConfig,
    pub characteristics: CharacteristicsConfig,
    pub truncation: TruncationConfig,
    pub lipschitz: LipschitzConfig,
    pub suite: SuiteConfig,
}

/// Truncation order `N`, grid points per axis `M` and time steps `K`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub order: usize,
    pub resolution: usize,
    pub steps: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            order: 4,
            resolution: 64,
            steps: 200,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeEntry {
    pub k: Vec<i32>,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Starting point `(t, m)`; unlisted modes of `F_N^+` are zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MeasureConfig {
    pub t: f64,
    pub modes: Vec<ModeEntry>,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self {
            t: 0.1,
            modes: vec![
                ModeEntry {
                    k: vec![1],
                    re: 0.2,
                    im: 0.05,
                },
                ModeEntry {
                    k: vec![2],
                    re: -0.05,
                    im: 0.04,
                },
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    /// Random restarts of the value solver.
    pub n_starts: usize,
    /// Step of the time-derivative probe as a fraction of the horizon; 0 disables it.
    pub time_probe: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
            damping: 0.5,
            n_starts: 2,
            time_probe: 0.01,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HjbConfig {
    /// Radius `c` of the ball `B_N(c)`.
    pub ball: f64,
    /// Truncation orders at which the residual is reported; `measure` is cut to each.
    pub orders: Vec<usize>,
}

impl Default for HjbConfig {
    fn default() -> Self {
        Self {
            ball: 10.0,
            orders: vec![2, 4, 8],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MasterConfig {
    pub h: f64,
    pub time_step: f64,
    /// Modes `k = 1..=modes` along the first axis.
    pub modes: i32,
}

impl Default for MasterConfig {
    fn default() -> Self {
        Self {
            h: 1e-2,
            time_step: 0.01,
            modes: 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SampleConfig {
    pub n: usize,
    /// Decay exponent of the proposal variances.
    pub p: f64,
    pub base_orders: Vec<usize>,
}

impl Default for SampleConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            p: 5.0,
            base_orders: vec![2, 3, 4],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MollifyConfig {
    pub eps: f64,
    /// Bump radius; defaults to the regularization threshold.
    pub delta: Option<f64>,
    pub pairs: usize,
    /// `w1-uniform` (one-dimensional) or `coupling`.
    pub functional: String,
}

impl Default for MollifyConfig {
    fn default() -> Self {
        Self {
            eps: 0.1,
            delta: None,
            pairs: 256,
            functional: "w1-uniform".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CharacteristicsConfig {
    /// `value`, `coupling` or `zero`.
    pub potential: String,
    /// `pathwise` or `score`.
    pub estimator: String,
    pub eps: f64,
    pub delta: Option<f64>,
    pub pairs: usize,
    pub horizon: f64,
    pub steps: usize,
    pub jacobian: bool,
}

impl Default for CharacteristicsConfig {
    fn default() -> Self {
        Self {
            potential: "coupling".into(),
            estimator: "pathwise".into(),
            eps: 0.1,
            delta: None,
            pairs: 8,
            horizon: 0.2,
            steps: 10,
            jacobian: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    pub orders: Vec<usize>,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        Self {
            orders: vec![4, 8, 16],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LipschitzConfig {
    pub constant: f64,
    pub pairs: usize,
    pub eps: f64,
    /// `[re, im]` of `z^k` per mode of `F_N^+`; empty means `z^k = 1`.
    pub directions: Vec<[f64; 2]>,
    /// Symmetric non-negative matrix `S`.
    pub s: [[f64; 2]; 2],
}

impl Default for LipschitzConfig {
    fn default() -> Self {
        Self {
            constant: 1.0,
            pairs: 64,
            eps: 0.1,
            directions: Vec::new(),
            s: [[1.0, 0.0], [0.0, 0.0]],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SuiteConfig {
    /// Criterion ids; empty runs all of them.
    pub criteria: Vec<u8>,
}

/// Parses `text`, applies `key=value` overrides and deserializes.
pub fn resolve(text: &str, overrides: &[String]) -> Result<RunConfig, CliError> {
    let mut table: Table = text
        .parse()
        .map_err(|e| CliError::Config(format!("config file: {e}")))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override {item:?} is not key=value")))?;
        set_path(&mut table, key.trim(), parse_value(raw.trim()))?;
    }
    table
        .try_into()
        .map_err(|e| CliError::Config(e.to_string()))
}

/// A TOML literal, or a bare string when it does not parse as one.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(table: &mut Table, key: &str, value: Value) -> Result<(), CliError> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|p| !p.is_empty())
        .ok_or_else(|| CliError::Config(format!("empty key in {key:?}")))?;
    let mut current = table;
    for part in parts {
        let entry = current
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        current = entry
            .as_table_mut()
            .ok_or_else(|| CliError::Config(format!("{key:?}: {part:?} is not a table")))?;
    }
    current.insert(last.to_string(), value);
    Ok(())
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn run_name(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| format!("seed-{}", self.seed))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(resolve("", &[]).unwrap(), RunConfig::default());
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let sets = [
            "grid.order=8".to_string(),
            "model.hamiltonian=relativistic".to_string(),
        ];
        let cfg = resolve("seed = 3\n[grid]\nsteps = 10\n", &sets).unwrap();
        assert_eq!((cfg.seed, cfg.grid.order, cfg.grid.steps), (3, 8, 10));
        assert_eq!(cfg.model.hamiltonian, "relativistic");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(
            resolve("[grid]\nsize = 3\n", &[]),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            resolve("", &["grid".into()]),
            Err(CliError::Config(_))
        ));
    }

    #[test]
    fn resolved_config_round_trips() {
        let cfg = resolve("", &["mollify.delta=0.001".into(), "name=\"x\"".into()]).unwrap();
        assert_eq!(resolve(&cfg.to_toml(), &[]).unwrap(), cfg);
    }
}
