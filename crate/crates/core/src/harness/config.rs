//! Experiment configuration, read from TOML.

use std::path::Path;

use serde::de::{self, DeserializeOwned, Error as _};
use serde::{Deserialize, Deserializer, Serialize};
use toml::{Table, Value};

use super::HarnessError;
use crate::classical::{ClassifyParams, MapSpec};
use crate::hierarchy::{EquilibriumMethod, QuantumClassifyParams};
use crate::rotator::{RegimeHorizons, RotatorSpec};

/// One experiment; `experiment` names the subcommand.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    /// Overrides the run seed when present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(flatten)]
    pub experiment: Experiment,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        Self {
            label: None,
            seed: None,
            experiment,
        }
    }

    pub fn subcommand(&self) -> &'static str {
        self.experiment.subcommand()
    }
}

// Deserialized by hand: a flattened, internally tagged enum buffers its
// fields and would lose the path of a bad value.
impl<'de> Deserialize<'de> for ExperimentConfig {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let mut table = Table::deserialize(d)?;
        let label = match table.remove("label") {
            None => None,
            Some(Value::String(s)) => Some(s),
            Some(_) => return Err(D::Error::custom("`label` must be a string")),
        };
        let seed = match table.remove("seed") {
            None => None,
            Some(Value::Integer(i)) if i >= 0 => Some(i as u64),
            Some(_) => return Err(D::Error::custom("`seed` must be a non-negative integer")),
        };
        let kind = match table.remove("experiment") {
            Some(Value::String(s)) => s,
            Some(_) => return Err(D::Error::custom("`experiment` must be a string")),
            None => return Err(D::Error::missing_field("experiment")),
        };
        fn body<T: DeserializeOwned, E: de::Error>(table: Table) -> Result<T, E> {
            serde_path_to_error::deserialize(Value::Table(table))
                .map_err(|e| E::custom(format!("`{}`: {}", e.path(), e.inner())))
        }
        let experiment = match kind.as_str() {
            "classify-map" => Experiment::ClassifyMap(body(table)?),
            "qeh-test" => Experiment::QehTest(body(table)?),
            "kicked-rotator" => Experiment::KickedRotator(body(table)?),
            "dephasing" => Experiment::Dephasing(body(table)?),
            "wigner-check" => Experiment::WignerCheck(body(table)?),
            other => return Err(D::Error::unknown_variant(other, &SUBCOMMANDS)),
        };
        Ok(Self {
            label,
            seed,
            experiment,
        })
    }
}

/// Subcommands that run a single experiment.
pub const SUBCOMMANDS: [&str; 5] = ["classify-map", "qeh-test", "kicked-rotator", "dephasing", "wigner-check"];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum Experiment {
    ClassifyMap(ClassifyMapConfig),
    QehTest(QehTestConfig),
    KickedRotator(KickedRotatorConfig),
    Dephasing(DephasingConfig),
    WignerCheck(WignerCheckConfig),
}

impl Experiment {
    pub fn subcommand(&self) -> &'static str {
        match self {
            Experiment::ClassifyMap(_) => "classify-map",
            Experiment::QehTest(_) => "qeh-test",
            Experiment::KickedRotator(_) => "kicked-rotator",
            Experiment::Dephasing(_) => "dephasing",
            Experiment::WignerCheck(_) => "wigner-check",
        }
    }
}

/// A base set of the classical classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetDef {
    /// Circle arc `[start, start + length)` modulo 1 (rotations only).
    Arc { start: f64, length: f64 },
    /// Leading digits of `x` (`horizontal = true`) or of `y` in the map's base.
    Cylinder { digits: Vec<u32>, horizontal: bool },
    /// Cells whose centre lies in `[x0, x1) x [y0, y1)`.
    Rect { x: [f64; 2], y: [f64; 2] },
    /// Hex cell bitmap at the configured resolution.
    Cells { hex: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifyMapConfig {
    pub map: MapSpec,
    /// Grid resolution `k` (`base^k` cells per side) for `rect` and `cells`.
    pub resolution: u32,
    /// Empty selects the map's default family.
    pub sets: Vec<SetDef>,
    pub params: ClassifyParams,
}

impl Default for ClassifyMapConfig {
    fn default() -> Self {
        Self {
            map: MapSpec::Cat,
            resolution: 5,
            sets: Vec::new(),
            params: ClassifyParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepDef {
    /// Haar-random unitary.
    Random,
    /// `diag(exp(i phi_k))`.
    Phases { phases: Vec<f64> },
    /// Kicked rotator with `N = dim`.
    Rotator {
        lambda: f64,
        tau: f64,
        #[serde(default = "one")]
        hbar_eff: f64,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialDef {
    RandomPure,
    RandomMixed,
    /// Basis state `|index>`.
    Basis { index: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QehTestConfig {
    pub dim: usize,
    pub step: StepDef,
    pub initial: InitialDef,
    /// Number of random Hermitian observables.
    pub observables: usize,
    /// Random Kolmogorov families per observable.
    pub families: usize,
    pub family_length: usize,
    pub max_offset: u64,
    pub equilibrium: EquilibriumMethod,
    pub params: QuantumClassifyParams,
}

impl Default for QehTestConfig {
    fn default() -> Self {
        Self {
            dim: 8,
            step: StepDef::Random,
            initial: InitialDef::RandomPure,
            observables: 3,
            families: 1,
            family_length: 3,
            max_offset: 5,
            equilibrium: EquilibriumMethod::EigenbasisDiagonal,
            params: QuantumClassifyParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RotatorInitial {
    /// `|n>`.
    Momentum { n: i64 },
    /// Equal-weight superposition of momentum states.
    Superposition { ns: Vec<i64> },
    /// Equal-weight mixture (diagonal in momentum).
    Mixture { ns: Vec<i64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KickedRotatorConfig {
    pub spec: RotatorSpec,
    pub initial: RotatorInitial,
    /// Half-width of the momentum-window projector observable.
    pub window: i64,
    /// Horizon of the time-average check.
    pub cesaro_horizon: usize,
    /// Kicks recorded in the expectation series.
    pub series_kicks: usize,
    /// Random Kolmogorov families in addition to the mixing reductions.
    pub families: usize,
    pub family_length: usize,
    pub max_offset: u64,
    pub horizons: RegimeHorizons,
}

impl Default for KickedRotatorConfig {
    fn default() -> Self {
        Self {
            spec: RotatorSpec {
                lambda: 10.0,
                tau: 1.0,
                hbar_eff: 1.0,
                n: 255,
            },
            initial: RotatorInitial::Momentum { n: 0 },
            window: 5,
            cesaro_horizon: 10_000,
            series_kicks: 2000,
            families: 1,
            family_length: 3,
            max_offset: 5,
            horizons: RegimeHorizons::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectrumDef {
    /// `levels` energies uniform in `[0, scale)`.
    Random { levels: usize, scale: f64 },
    Energies { energies: Vec<f64> },
    /// Plain-text list of energies.
    File { path: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DephasingConfig {
    pub spectrum: SpectrumDef,
    /// Sets the second level equal to the first.
    pub inject_degeneracy: bool,
    /// Averaging horizons; empty selects `2^0 .. 2^24`.
    pub horizons: Vec<f64>,
    /// Horizon of the rate check; absent selects 200 periods of the
    /// slowest interference frequency.
    pub rate_horizon: Option<f64>,
    pub profile_width: f64,
    pub profile_samples: usize,
    /// Largest `x` of the interference curve, in units of `1 / width`.
    pub x_max: f64,
    pub x_points: usize,
}

impl Default for DephasingConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumDef::Random {
                levels: 32,
                scale: 1.0,
            },
            inject_degeneracy: false,
            horizons: Vec::new(),
            rate_horizon: None,
            profile_width: 1.0,
            profile_samples: 4096,
            x_max: 12.0,
            x_points: 121,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WignerCheckConfig {
    /// Odd dimensions of the pairing and round-trip checks.
    pub dims: Vec<usize>,
    /// Random Hermitian pairs per dimension.
    pub pairs: usize,
    /// Dimensions of the set-versus-operator correlation check.
    pub cross_dims: Vec<usize>,
    pub cross_cases: usize,
}

impl Default for WignerCheckConfig {
    fn default() -> Self {
        Self {
            dims: vec![3, 5, 15, 31],
            pairs: 100,
            cross_dims: vec![15, 31],
            cross_cases: 20,
        }
    }
}

/// A list of jobs, optionally extended by a kicked-rotator `lambda` scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub jobs: Vec<ExperimentConfig>,
    pub lambda_scan: Option<LambdaScan>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            jobs: Vec::new(),
            lambda_scan: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaScan {
    pub lambda: Vec<f64>,
    #[serde(default)]
    pub base: KickedRotatorConfig,
}

impl SweepConfig {
    /// Explicit jobs followed by one kicked-rotator job per scanned `lambda`.
    pub fn expand(&self) -> Vec<ExperimentConfig> {
        let mut out = self.jobs.clone();
        if let Some(scan) = &self.lambda_scan {
            for &lambda in &scan.lambda {
                let mut cfg = scan.base.clone();
                cfg.spec.lambda = lambda;
                out.push(ExperimentConfig {
                    label: Some(format!("lambda={lambda}")),
                    seed: None,
                    experiment: Experiment::KickedRotator(cfg),
                });
            }
        }
        out
    }
}

/// Parses TOML, reporting the path of the offending field.
pub fn parse_toml<T: DeserializeOwned>(text: &str) -> Result<T, HarnessError> {
    let de = toml::Deserializer::parse(text).map_err(|e| HarnessError::Config {
        path: String::new(),
        message: e.to_string(),
    })?;
    serde_path_to_error::deserialize(de).map_err(|e| HarnessError::Config {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn read(path: &Path) -> Result<String, HarnessError> {
    std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn load_toml<T: DeserializeOwned>(path: &Path) -> Result<T, HarnessError> {
    parse_toml(&read(path)?)
}

/// Parses a single experiment; `experiment` defaults to `subcommand` and
/// must agree with it when present.
pub fn parse_experiment(text: &str, subcommand: &str) -> Result<ExperimentConfig, HarnessError> {
    let mut table: Table = parse_toml(text)?;
    table
        .entry("experiment")
        .or_insert_with(|| Value::String(subcommand.into()));
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(Value::Table(table)).map_err(|e| {
        HarnessError::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        }
    })?;
    if cfg.subcommand() != subcommand {
        return Err(HarnessError::Config {
            path: "experiment".into(),
            message: format!("config is for `{}`, not `{subcommand}`", cfg.subcommand()),
        });
    }
    Ok(cfg)
}

pub fn load_experiment(path: &Path, subcommand: &str) -> Result<ExperimentConfig, HarnessError> {
    parse_experiment(&read(path)?, subcommand)
}

/// Defaults of every parameter for `subcommand`.
pub fn default_experiment(subcommand: &str) -> Option<ExperimentConfig> {
    let experiment = match subcommand {
        "classify-map" => Experiment::ClassifyMap(ClassifyMapConfig::default()),
        "qeh-test" => Experiment::QehTest(QehTestConfig::default()),
        "kicked-rotator" => Experiment::KickedRotator(KickedRotatorConfig::default()),
        "dephasing" => Experiment::Dephasing(DephasingConfig::default()),
        "wigner-check" => Experiment::WignerCheck(WignerCheckConfig::default()),
        _ => return None,
    };
    Some(ExperimentConfig::new(experiment))
}
