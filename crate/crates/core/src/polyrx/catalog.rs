use alloc::string::String;
use alloc::vec::Vec;

use crate::rng::SimRng;
use crate::waveform::{
    Modulation, OfdmConfig, PhyConfig, ScheduleEntry, SingleCarrierConfig, TransmitterSchedule, FFT_SIZES,
};
use crate::{param_err, Result};

/// Frequency shifts of the single-carrier experiment, in Hz.
pub const SINGLE_CARRIER_SHIFTS_HZ: [f64; 3] = [0.0, 1000.0, 2000.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ExperimentKind {
    SingleCarrier,
    MultiCarrier,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CatalogEntry {
    pub label: usize,
    pub name: String,
    pub config: PhyConfig,
}

/// The classes a receiver can morph into, indexed densely from zero.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassCatalog {
    pub kind: ExperimentKind,
    pub entries: Vec<CatalogEntry>,
}

impl ClassCatalog {
    pub fn new(kind: ExperimentKind, configs: Vec<PhyConfig>) -> Result<Self> {
        let entries = configs
            .into_iter()
            .enumerate()
            .map(|(label, config)| CatalogEntry {
                label,
                name: alloc::format!("{config}"),
                config,
            })
            .collect();
        let c = Self { kind, entries };
        c.validate()?;
        Ok(c)
    }

    /// Six modulations times three frequency shifts, modulation-major.
    pub fn single_carrier_18(samples_per_symbol: usize) -> Result<Self> {
        let mut configs = Vec::with_capacity(18);
        for m in Modulation::ALL {
            for shift in SINGLE_CARRIER_SHIFTS_HZ {
                configs.push(SingleCarrierConfig::new(m, samples_per_symbol, shift).into());
            }
        }
        Self::new(ExperimentKind::SingleCarrier, configs)
    }

    /// One class per modulation at a fixed shift.
    pub fn single_carrier_6(samples_per_symbol: usize, shift_hz: f64) -> Result<Self> {
        let configs = Modulation::ALL
            .iter()
            .map(|&m| SingleCarrierConfig::new(m, samples_per_symbol, shift_hz).into())
            .collect();
        Self::new(ExperimentKind::SingleCarrier, configs)
    }

    /// Three FFT sizes times three PSK bin modulations, FFT-major.
    pub fn ofdm_9() -> Result<Self> {
        let mut configs = Vec::with_capacity(9);
        for n in FFT_SIZES {
            for m in Modulation::PSK {
                configs.push(OfdmConfig::new(n, m).into());
            }
        }
        Self::new(ExperimentKind::MultiCarrier, configs)
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(param_err!("catalog is empty"));
        }
        for (i, e) in self.entries.iter().enumerate() {
            if e.label != i {
                return Err(param_err!("catalog labels must be 0..n in order"));
            }
            e.config.validate()?;
            if self.entries[..i].iter().any(|o| o.config == e.config) {
                return Err(param_err!("duplicate catalog config {}", e.name));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn config(&self, label: usize) -> Option<&PhyConfig> {
        self.entries.get(label).map(|e| &e.config)
    }

    pub fn label_of(&self, config: &PhyConfig) -> Option<usize> {
        self.entries.iter().position(|e| &e.config == config)
    }

    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.name.clone()).collect()
    }

    /// One entry per class in label order.
    pub fn sweep_schedule(&self, switch_time_s: f64, sample_rate_hz: f64) -> TransmitterSchedule {
        self.schedule_from_labels(&(0..self.len()).collect::<Vec<_>>(), switch_time_s, sample_rate_hz)
    }

    /// `n` uniformly drawn classes, never the same class twice in a row.
    pub fn random_schedule(&self, n: usize, switch_time_s: f64, sample_rate_hz: f64, seed: u64) -> TransmitterSchedule {
        let mut rng = SimRng::derived(seed, 0x7363_6864);
        let mut labels: Vec<usize> = Vec::with_capacity(n);
        for _ in 0..n {
            let label = match labels.last() {
                Some(&prev) if self.len() > 1 => {
                    let l = rng.below(self.len() - 1);
                    if l >= prev {
                        l + 1
                    } else {
                        l
                    }
                }
                _ => rng.below(self.len()),
            };
            labels.push(label);
        }
        self.schedule_from_labels(&labels, switch_time_s, sample_rate_hz)
    }

    pub fn schedule_from_labels(
        &self,
        labels: &[usize],
        switch_time_s: f64,
        sample_rate_hz: f64,
    ) -> TransmitterSchedule {
        TransmitterSchedule {
            entries: labels
                .iter()
                .map(|&label| ScheduleEntry {
                    config: self.entries[label].config.clone(),
                    label,
                })
                .collect(),
            switch_time_s,
            sample_rate_hz,
        }
    }
}
