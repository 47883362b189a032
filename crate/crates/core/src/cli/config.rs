use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data_model::{ArrivalModel, SchemaOptions, StepNormalization};
use crate::dmv::DmvConfig;
use crate::policy_sim::Realization;
use crate::predictor::BoostParams;
use crate::synth::HistoryParams;
use crate::value_function::{RevenueSpec, DEFAULT_STATE_CAP};
use crate::{Error, Result};

/// Settings for every subcommand. Relative paths are taken from the
/// directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Root seed; every component derives its own stream from it.
    pub seed: u64,
    /// Parent of timestamped run directories.
    pub output_dir: PathBuf,
    /// Fixed run directory, bypassing the timestamped default.
    pub run_dir: Option<PathBuf>,
    pub paths: PathsConfig,
    pub schema: SchemaOptions,
    pub generate: GenerateConfig,
    pub dmv: DmvConfig,
    pub train: TrainConfig,
    pub value_function: VfConfig,
    pub simulation: SimConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            output_dir: PathBuf::from("runs"),
            run_dir: None,
            paths: PathsConfig::default(),
            schema: SchemaOptions::default(),
            generate: GenerateConfig::default(),
            dmv: DmvConfig::default(),
            train: TrainConfig::default(),
            value_function: VfConfig::default(),
            simulation: SimConfig::default(),
        }
    }
}

/// Inputs that do not come from the run directory. Unset entries fall back
/// to the file the producing command writes there.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub input_csv: Option<PathBuf>,
    pub records: Option<PathBuf>,
    pub dmv_directory: Option<PathBuf>,
    pub model: Option<PathBuf>,
    /// Held-out bookings replayed by the `bkd-vs-pred` campaign.
    pub pool_csv: Option<PathBuf>,
    /// Directory with `vf_model.json` and the value tables.
    pub tables: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerateConfig {
    pub flights: usize,
    pub holdout_flights: usize,
    pub bookings_per_flight: usize,
    pub booking_horizon_days: f64,
    pub placeholder_share: f64,
    pub placeholder_volume: f64,
    pub declared_ratio: f64,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        let h = HistoryParams::default();
        Self {
            flights: 150,
            holdout_flights: 100,
            bookings_per_flight: h.bookings_per_flight,
            booking_horizon_days: h.booking_horizon_days,
            placeholder_share: h.placeholder_share,
            placeholder_volume: h.placeholder_volume,
            declared_ratio: h.declared_ratio,
        }
    }
}

impl GenerateConfig {
    pub fn history_params(
        &self,
        num_flights: usize,
        first_flight: usize,
        seed: u64,
    ) -> HistoryParams {
        HistoryParams {
            num_flights,
            bookings_per_flight: self.bookings_per_flight,
            booking_horizon_days: self.booking_horizon_days,
            placeholder_share: self.placeholder_share,
            placeholder_volume: self.placeholder_volume,
            declared_ratio: self.declared_ratio,
            first_flight,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Cross-validation folds; 0 skips cross-validation.
    pub folds: usize,
    pub num_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub colsample: f64,
    pub min_samples_leaf: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let p = BoostParams::default();
        Self {
            folds: 3,
            num_trees: p.num_trees,
            max_depth: p.max_depth,
            learning_rate: p.learning_rate,
            colsample: p.colsample,
            min_samples_leaf: p.min_samples_leaf,
        }
    }
}

impl TrainConfig {
    pub fn params(&self) -> BoostParams {
        BoostParams {
            num_trees: self.num_trees,
            max_depth: self.max_depth,
            learning_rate: self.learning_rate,
            colsample: self.colsample,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

/// An arrival model written out by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrivalConfig {
    pub type_names: Vec<String>,
    pub type_probs: Vec<f64>,
    pub step_probs: Vec<f64>,
    pub mean_volumes: Vec<f64>,
}

impl ArrivalConfig {
    pub fn build(&self) -> Result<ArrivalModel> {
        ArrivalModel::new(
            self.type_names.clone(),
            self.type_probs.clone(),
            self.step_probs.clone(),
            self.mean_volumes.clone(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RevenueMode {
    FlatPerItem,
    RateTimesVolume,
}

/// Revenue per product type name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RevenueConfig {
    pub mode: RevenueMode,
    pub by_type: BTreeMap<String, f64>,
}

impl RevenueConfig {
    pub fn resolve(&self, type_names: &[String]) -> Result<RevenueSpec> {
        let values = type_names
            .iter()
            .map(|n| {
                self.by_type.get(n).copied().ok_or_else(|| {
                    Error::Config(format!("no revenue given for product type `{n}`"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(match self.mode {
            RevenueMode::FlatPerItem => RevenueSpec::FlatPerItem { revenues: values },
            RevenueMode::RateTimesVolume => RevenueSpec::RateTimesVolume { rates: values },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceKind {
    /// The built-in 24-type instance.
    Benchmark,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VfConfig {
    /// Booking epochs `T`; defaults to the arrival model's length.
    pub horizon: Option<usize>,
    /// Intervals for averaging estimated step probabilities.
    pub intervals: usize,
    pub step_normalization: StepNormalization,
    /// Capacities `k_v` to tabulate, m³.
    pub capacities: Vec<f64>,
    /// `h_v`, currency per m³.
    pub offload_rate: Option<f64>,
    pub delta: Option<f64>,
    pub max_volume: Option<f64>,
    /// Also build exact per-type tables.
    pub vector: bool,
    pub state_cap: u64,
    pub instance: Option<InstanceKind>,
    pub arrival: Option<ArrivalConfig>,
    pub revenue: Option<RevenueConfig>,
}

impl Default for VfConfig {
    fn default() -> Self {
        Self {
            horizon: None,
            intervals: 6,
            step_normalization: StepNormalization::default(),
            capacities: Vec::new(),
            offload_rate: None,
            delta: None,
            max_volume: None,
            vector: false,
            state_cap: DEFAULT_STATE_CAP as u64,
            instance: None,
            arrival: None,
            revenue: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CampaignMode {
    /// D2S with booked against predicted volumes over held-out bookings.
    BkdVsPred,
    /// D1S against first-come first-served with lognormal volumes.
    D1sVsFcfs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub mode: CampaignMode,
    pub thetas: Vec<f64>,
    pub num_flights: usize,
    pub realization: Realization,
    /// Subset of the tabulated capacities; all of them when unset.
    pub capacities: Option<Vec<f64>>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mode: CampaignMode::D1sVsFcfs,
            thetas: vec![0.0],
            num_flights: 1000,
            realization: Realization::GroundTruth,
            capacities: None,
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    /// Parses TOML, or JSON when the file ends in `.json`.
    pub fn parse(text: &str, json: bool) -> Result<Self> {
        if json {
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let json = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let mut config = Self::parse(&text, json)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.resolve_paths(base);
        Ok(config)
    }

    /// Makes relative paths absolute against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        if self.output_dir.is_relative() {
            self.output_dir = base.join(&self.output_dir);
        }
        resolve(base, &mut self.run_dir);
        let p = &mut self.paths;
        for slot in [
            &mut p.input_csv,
            &mut p.records,
            &mut p.dmv_directory,
            &mut p.model,
            &mut p.pool_csv,
            &mut p.tables,
        ] {
            resolve(base, slot);
        }
    }

    /// The settings that determine outputs: everything but where they go
    /// and where inputs live.
    pub fn fingerprint(&self) -> Result<serde_json::Value> {
        let mut view = self.clone();
        view.output_dir = PathBuf::new();
        view.run_dir = None;
        view.paths = PathsConfig::default();
        Ok(serde_json::to_value(&view)?)
    }
}
