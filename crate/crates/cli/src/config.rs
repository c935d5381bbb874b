//! Run configuration: TOML with sections, layered as
//! built-in presets → `--config` file → `--set key=value` overrides (later
//! layers win). Unknown keys are rejected in every layer.

use std::path::{Path, PathBuf};

use gomimo::channel::{ArrayLayout, OpticsParams, ReceiverLocation};
use gomimo::detectors::{DetectorKind, SpatialRule};
use gomimo::harness::SweepConfig;
use gomimo::modulation::SchemeKind;
use gomimo::neural::{FeatureInput, NetworkFlavor, TrainConfig};
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::CliError;

pub const OUTPUT_DIR_ENV: &str = "GOMIMO_OUTPUT_DIR";
pub const DEFAULT_OUTPUT_DIR: &str = "gomimo-out";

pub const PRESETS: &[(&str, &str)] = &[
    ("table1_center", include_str!("../presets/table1_center.toml")),
    ("table1_corner", include_str!("../presets/table1_corner.toml")),
    ("table2_gosm_center", include_str!("../presets/table2_gosm_center.toml")),
    ("table2_gosm_corner", include_str!("../presets/table2_gosm_corner.toml")),
    ("table3_gosmp_center", include_str!("../presets/table3_gosmp_center.toml")),
    ("table3_gosmp_corner", include_str!("../presets/table3_gosmp_corner.toml")),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub output_dir: Option<PathBuf>,
    pub geometry: GeometrySection,
    pub scheme: SchemeSection,
    pub detector: DetectorSection,
    pub training: TrainingSection,
    pub sweep: SweepSection,
    pub experiment: ExperimentSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            threads: 1,
            output_dir: None,
            geometry: GeometrySection::default(),
            scheme: SchemeSection::default(),
            detector: DetectorSection::default(),
            training: TrainingSection::default(),
            sweep: SweepSection::default(),
            experiment: ExperimentSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LocationSpec {
    Named(String),
    Point([f64; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    /// `"center"`, `"corner"` or an explicit `[x, y, z]` array centre.
    pub location: LocationSpec,
    pub room_dims: [f64; 3],
    pub led_spacing: f64,
    pub pd_spacing: f64,
    pub receiver_height: f64,
    pub semi_angle_deg: f64,
    pub responsivity: f64,
    pub pd_area: f64,
    pub filter_gain: f64,
    pub lens_refractive_index: f64,
    pub lens_half_fov_deg: f64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        let l = ArrayLayout::table1();
        let o = OpticsParams::table1();
        Self {
            location: LocationSpec::Named("center".into()),
            room_dims: l.room_dims,
            led_spacing: l.led_spacing,
            pd_spacing: l.pd_spacing,
            receiver_height: l.receiver_height,
            semi_angle_deg: o.semi_angle_deg,
            responsivity: o.responsivity,
            pd_area: o.pd_area,
            filter_gain: o.filter_gain,
            lens_refractive_index: o.lens_refractive_index,
            lens_half_fov_deg: o.lens_half_fov_deg,
        }
    }
}

impl GeometrySection {
    pub fn location(&self) -> Result<ReceiverLocation, CliError> {
        match &self.location {
            LocationSpec::Named(n) if n == "center" => Ok(ReceiverLocation::Center),
            LocationSpec::Named(n) if n == "corner" => Ok(ReceiverLocation::Corner),
            LocationSpec::Named(n) => Err(CliError::Config(format!(
                "geometry.location: expected \"center\", \"corner\" or [x, y, z], got \"{n}\""
            ))),
            LocationSpec::Point(p) => Ok(ReceiverLocation::Point(*p)),
        }
    }

    pub fn layout(&self) -> ArrayLayout {
        ArrayLayout {
            room_dims: self.room_dims,
            led_spacing: self.led_spacing,
            pd_spacing: self.pd_spacing,
            receiver_height: self.receiver_height,
        }
    }

    pub fn optics(&self) -> OpticsParams {
        OpticsParams {
            semi_angle_deg: self.semi_angle_deg,
            responsivity: self.responsivity,
            pd_area: self.pd_area,
            filter_gain: self.filter_gain,
            lens_refractive_index: self.lens_refractive_index,
            lens_half_fov_deg: self.lens_half_fov_deg,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeSection {
    pub kind: SchemeKind,
    pub order: usize,
    pub avg_power: f64,
    pub nt: usize,
    pub na: usize,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            kind: SchemeKind::Gosm,
            order: 4,
            avg_power: 1.0,
            nt: 4,
            na: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub kind: DetectorKind,
    pub spatial_rule: SpatialRule,
    /// Trained network for `zf_dnn` / `blind_dnn`; defaults to
    /// `<output_dir>/model.json`.
    pub model: Option<PathBuf>,
}

impl Default for DetectorSection {
    fn default() -> Self {
        Self {
            kind: DetectorKind::JointMl,
            spatial_rule: SpatialRule::default(),
            model: None,
        }
    }
}

/// Training overrides on top of the parameter-table preset for the
/// configured scheme and location.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub training_snr_db: Option<f64>,
    pub train_size: Option<usize>,
    pub validation_size: Option<usize>,
    pub batch_size: Option<usize>,
    pub epochs: Option<usize>,
    pub seed: Option<u64>,
    pub learning_rate: Option<f64>,
    pub alpha: Option<f64>,
    pub feature: Option<FeatureInput>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub snr_db: Vec<f64>,
    pub vectors_per_point: usize,
    pub min_errors: u64,
    pub chunk_size: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_db: (0..=20).map(|i| 120.0 + 2.0 * f64::from(i)).collect(),
            vectors_per_point: 100_000,
            min_errors: 100,
            chunk_size: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// Training SNRs of `mse-log` and of the blind curves in BER figures.
    pub training_snrs_db: Vec<f64>,
    pub alphas: Vec<f64>,
    pub alpha_snrs_db: Vec<f64>,
    pub timing_vectors: usize,
    pub timing_snr_db: f64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            training_snrs_db: vec![130.0, 140.0, 150.0],
            alphas: vec![1e-3, 1e-1, 1e1, 1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9, 1e11],
            alpha_snrs_db: vec![135.0, 140.0, 145.0],
            timing_vectors: 100_000,
            timing_snr_db: 140.0,
        }
    }
}

impl RunConfig {
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    pub fn model_path(&self) -> PathBuf {
        self.detector.model.clone().unwrap_or_else(|| self.output_dir().join("model.json"))
    }

    /// Table preset for scheme and location with the `[training]` overrides
    /// applied. Explicit receiver points start from the center preset.
    pub fn train_config(&self, flavor: NetworkFlavor) -> Result<TrainConfig, CliError> {
        let location = match self.geometry.location()? {
            ReceiverLocation::Point(_) => ReceiverLocation::Center,
            l => l,
        };
        let mut c = TrainConfig::preset(self.scheme.kind, &location)?;
        let t = &self.training;
        c.seed = t.seed.unwrap_or(self.seed);
        c.training_snr_db = t.training_snr_db.unwrap_or(c.training_snr_db);
        c.train_size = t.train_size.unwrap_or(c.train_size);
        c.validation_size = t.validation_size.unwrap_or(c.validation_size);
        c.batch_size = t.batch_size.unwrap_or(c.batch_size);
        c.epochs = t.epochs.unwrap_or(c.epochs);
        c.learning_rate = t.learning_rate.unwrap_or(c.learning_rate);
        c.alpha = t.alpha.unwrap_or(c.alpha);
        c.feature = t.feature.unwrap_or(c.feature);
        c.flavor = flavor;
        c.validate()?;
        Ok(c)
    }

    pub fn sweep_config(&self) -> SweepConfig {
        SweepConfig {
            snr_list_db: self.sweep.snr_db.clone(),
            vectors_per_point: self.sweep.vectors_per_point,
            min_errors: self.sweep.min_errors,
            chunk_size: self.sweep.chunk_size,
            seed: self.seed,
            threads: self.threads,
        }
    }
}

/// Collects layers, checking each against the schema as it is added so
/// errors point at the offending file, line and key.
#[derive(Debug, Default)]
pub struct ConfigBuilder {
    merged: Table,
}

impl ConfigBuilder {
    pub fn preset(&mut self, name: &str) -> Result<&mut Self, CliError> {
        let text = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| {
                let known: Vec<&str> = PRESETS.iter().map(|(n, _)| *n).collect();
                CliError::Config(format!("unknown preset `{name}` (known: {})", known.join(", ")))
            })?;
        self.layer_text(text, &format!("preset {name}"))
    }

    pub fn file(&mut self, path: &Path) -> Result<&mut Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        self.layer_text(&text, &path.display().to_string())
    }

    pub fn layer_text(&mut self, text: &str, origin: &str) -> Result<&mut Self, CliError> {
        // parsing into the typed schema reports unknown keys with their line
        toml::from_str::<RunConfig>(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        let table: Table = toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}")))?;
        merge(&mut self.merged, table);
        Ok(self)
    }

    /// `key.path=value`; the value is read as a TOML value, falling back to
    /// a bare string.
    pub fn set(&mut self, assignment: &str) -> Result<&mut Self, CliError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set {assignment}: expected key=value")))?;
        let key = key.trim();
        let value = toml::from_str::<Table>(&format!("v = {}", raw.trim()))
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| Value::String(raw.trim().to_owned()));
        let mut layer = Table::new();
        let parts: Vec<&str> = key.split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(CliError::Config(format!("--set {assignment}: malformed key `{key}`")));
        }
        let mut cursor = &mut layer;
        for p in &parts[..parts.len() - 1] {
            cursor = cursor
                .entry(p.to_string())
                .or_insert_with(|| Value::Table(Table::new()))
                .as_table_mut()
                .expect("freshly inserted table");
        }
        cursor.insert(parts[parts.len() - 1].to_owned(), value);
        RunConfig::deserialize(Value::Table(layer.clone()))
            .map_err(|e| CliError::Config(format!("--set {key}: {e}")))?;
        merge(&mut self.merged, layer);
        Ok(self)
    }

    pub fn build(&self) -> Result<RunConfig, CliError> {
        let config = RunConfig::deserialize(Value::Table(self.merged.clone()))
            .map_err(|e| CliError::Config(format!("merged configuration: {e}")))?;
        if config.threads == 0 {
            return Err(CliError::Config("threads: must be at least 1".into()));
        }
        config.geometry.location()?;
        Ok(config)
    }
}

fn merge(base: &mut Table, layer: Table) {
    for (k, v) in layer {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(l)) => merge(b, l),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
