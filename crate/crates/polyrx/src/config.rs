//! Experiment specification, read from TOML.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use polyrx_core::polyrx::{ClassCatalog, ExperimentKind};
use polyrx_core::rfnet::{RfnetArch, TrainConfig};
use polyrx_core::waveform::{ChannelModel, PhyConfig};
use serde::{Deserialize, Serialize};

/// Seed used when neither the spec nor the command line gives one.
pub const SEED_ENV: &str = "POLYRX_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
pub enum CatalogKind {
    #[serde(rename = "single-carrier-18")]
    #[value(name = "single-carrier-18")]
    SingleCarrier18,
    #[serde(rename = "single-carrier-6")]
    #[value(name = "single-carrier-6")]
    SingleCarrier6,
    #[serde(rename = "ofdm-9")]
    #[value(name = "ofdm-9")]
    Ofdm9,
    #[serde(rename = "custom")]
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CatalogSpec {
    pub kind: CatalogKind,
    pub samples_per_symbol: usize,
    /// Shift of every class in `single-carrier-6`.
    pub shift_hz: f64,
    /// JSON list of configs for `custom`.
    pub path: Option<String>,
}

impl Default for CatalogSpec {
    fn default() -> Self {
        Self {
            kind: CatalogKind::SingleCarrier18,
            samples_per_symbol: 10,
            shift_hz: 0.0,
            path: None,
        }
    }
}

impl CatalogSpec {
    pub fn build(&self) -> Result<ClassCatalog> {
        Ok(match self.kind {
            CatalogKind::SingleCarrier18 => ClassCatalog::single_carrier_18(self.samples_per_symbol)?,
            CatalogKind::SingleCarrier6 => ClassCatalog::single_carrier_6(self.samples_per_symbol, self.shift_hz)?,
            CatalogKind::Ofdm9 => ClassCatalog::ofdm_9()?,
            CatalogKind::Custom => {
                let Some(path) = &self.path else {
                    bail!("custom catalog needs `path`");
                };
                let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
                let configs: Vec<PhyConfig> = serde_json::from_str(&text).with_context(|| format!("parsing {path}"))?;
                let kind = if configs.iter().all(|c| matches!(c, PhyConfig::Ofdm(_))) {
                    ExperimentKind::MultiCarrier
                } else {
                    ExperimentKind::SingleCarrier
                };
                ClassCatalog::new(kind, configs)?
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSpec {
    /// Omitted means noiseless.
    pub snr_db: Option<f64>,
    pub nlos: bool,
    pub cfo_hz: f64,
}

impl Default for ChannelSpec {
    fn default() -> Self {
        Self {
            snr_db: None,
            nlos: false,
            cfo_hz: 0.0,
        }
    }
}

impl ChannelSpec {
    pub fn noiseless() -> Self {
        Self::default()
    }

    pub fn awgn(snr_db: f64) -> Self {
        Self {
            snr_db: Some(snr_db),
            ..Self::default()
        }
    }

    pub fn model(&self, seed: u64) -> ChannelModel {
        let snr = self.snr_db.unwrap_or(f64::INFINITY);
        let mut m = if self.nlos {
            ChannelModel::nlos(snr, seed)
        } else {
            ChannelModel::awgn(snr, seed)
        };
        m.cfo_hz = self.cfo_hz;
        m
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArchSpec {
    pub conv_filters: Vec<usize>,
    pub filter_size: usize,
    pub dense: Vec<usize>,
    pub input_w: usize,
    pub input_h: usize,
}

impl Default for ArchSpec {
    fn default() -> Self {
        Self {
            conv_filters: vec![25],
            filter_size: 3,
            dense: Vec::new(),
            input_w: 20,
            input_h: 20,
        }
    }
}

impl ArchSpec {
    pub fn arch(&self, n_classes: usize) -> RfnetArch {
        RfnetArch {
            conv_filters: self.conv_filters.clone(),
            filter_size: self.filter_size,
            dense: self.dense.clone(),
            input_w: self.input_w,
            input_h: self.input_h,
            n_classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub sample_rate_hz: f64,
    pub per_class: usize,
    pub test_fraction: f64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            sample_rate_hz: 20e3,
            per_class: 500,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub buffer_samples: usize,
    pub switch_time_s: f64,
    pub sample_rate_hz: f64,
    /// Schedule entries per seed.
    pub switches: usize,
    pub seeds: usize,
    /// Start the first buffer at a uniformly random sample of the first
    /// buffer period instead of at sample 0.
    pub random_phase: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            buffer_samples: 250_000,
            switch_time_s: 0.25,
            sample_rate_hz: 5e6,
            switches: 10,
            seeds: 20,
            random_phase: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seed: Option<u64>,
    pub catalog: CatalogSpec,
    pub channel: ChannelSpec,
    pub arch: ArchSpec,
    pub dataset: DatasetSpec,
    pub train: TrainConfig,
    pub run: RunSpec,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            seed: None,
            catalog: CatalogSpec::default(),
            channel: ChannelSpec::default(),
            arch: ArchSpec::default(),
            dataset: DatasetSpec::default(),
            train: TrainConfig {
                epochs: 20,
                ..TrainConfig::default()
            },
            run: RunSpec::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    /// Explicit seed, else `$POLYRX_SEED`, else 0.
    pub fn resolved_seed(&self) -> Result<u64> {
        if let Some(s) = self.seed {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}={v} is not an integer")),
            Err(_) => Ok(0),
        }
    }

    /// Checks everything a command might touch before any work starts.
    pub fn validate(&self) -> Result<ClassCatalog> {
        let catalog = self.catalog.build()?;
        let arch = self.arch.arch(catalog.len());
        arch.validate()?;
        self.train.validate()?;
        self.channel.model(0).validate()?;
        let d = &self.dataset;
        ensure!(d.sample_rate_hz > 0.0, "dataset sample rate must be positive");
        ensure!(d.per_class > 0, "dataset per_class must be positive");
        ensure!((0.0..1.0).contains(&d.test_fraction), "test_fraction must be in [0, 1)");
        for e in &catalog.entries {
            if let PhyConfig::SingleCarrier(c) = &e.config {
                ensure!(
                    c.freq_shift_hz.abs() < d.sample_rate_hz / 2.0,
                    "{}: shift is beyond Nyquist at {} Hz",
                    e.name,
                    d.sample_rate_hz
                );
            }
        }
        let r = &self.run;
        ensure!(r.buffer_samples > 0, "buffer_samples must be positive");
        ensure!(
            r.buffer_samples >= arch.input_len(),
            "buffer of {} samples is shorter than the {}-sample classifier input",
            r.buffer_samples,
            arch.input_len()
        );
        ensure!(
            r.switch_time_s > 0.0 && r.sample_rate_hz > 0.0,
            "switch time and sample rate must be positive"
        );
        ensure!(r.switches > 0 && r.seeds > 0, "switches and seeds must be positive");
        Ok(catalog)
    }
}
