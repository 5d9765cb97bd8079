use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::ClassCatalog;
use crate::{param_err, Result};

/// Counters for one true class.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ClassStats {
    pub class: usize,
    pub config: String,
    /// Buffers whose head sample belongs to this class.
    pub buffers: u64,
    pub buffers_correct: u64,
    pub bits_demodulated: u64,
    pub bits_correct: u64,
    pub oracle_bits_demodulated: u64,
    pub oracle_bits_correct: u64,
}

impl ClassStats {
    fn add(&mut self, o: &ClassStats) {
        self.buffers += o.buffers;
        self.buffers_correct += o.buffers_correct;
        self.bits_demodulated += o.bits_demodulated;
        self.bits_correct += o.bits_correct;
        self.oracle_bits_demodulated += o.oracle_bits_demodulated;
        self.oracle_bits_correct += o.oracle_bits_correct;
    }
}

/// Receiver throughput next to the perfect-knowledge receiver on the same
/// stream. Reports of different streams merge by summing counters and
/// durations.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThroughputReport {
    pub duration_s: f64,
    pub classes: Vec<ClassStats>,
}

/// One line of the tabular report.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReportRow {
    pub class: String,
    pub config: String,
    pub buffers: u64,
    pub accuracy: f64,
    pub bits_correct: u64,
    pub throughput_bps: f64,
    pub oracle_throughput_bps: f64,
    pub ratio: f64,
}

impl ThroughputReport {
    pub fn empty(catalog: &ClassCatalog) -> Self {
        Self {
            duration_s: 0.0,
            classes: catalog
                .entries
                .iter()
                .map(|e| ClassStats {
                    class: e.label,
                    config: e.name.clone(),
                    ..ClassStats::default()
                })
                .collect(),
        }
    }

    pub fn merge(&mut self, other: &ThroughputReport) -> Result<()> {
        if self.classes.len() != other.classes.len()
            || self
                .classes
                .iter()
                .zip(&other.classes)
                .any(|(a, b)| a.config != b.config)
        {
            return Err(param_err!("reports cover different catalogs"));
        }
        self.duration_s += other.duration_s;
        for (a, b) in self.classes.iter_mut().zip(&other.classes) {
            a.add(b);
        }
        Ok(())
    }

    pub fn total(&self) -> ClassStats {
        let mut t = ClassStats::default();
        for c in &self.classes {
            t.add(c);
        }
        t
    }

    pub fn buffers(&self) -> u64 {
        self.total().buffers
    }

    pub fn accuracy(&self) -> f64 {
        let t = self.total();
        ratio_or_zero(t.buffers_correct as f64, t.buffers as f64)
    }

    pub fn throughput_bps(&self) -> f64 {
        ratio_or_zero(self.total().bits_correct as f64, self.duration_s)
    }

    pub fn oracle_throughput_bps(&self) -> f64 {
        ratio_or_zero(self.total().oracle_bits_correct as f64, self.duration_s)
    }

    /// Receiver over oracle correct bits; 0 when the oracle recovered none.
    pub fn ratio(&self) -> f64 {
        let t = self.total();
        ratio_or_zero(t.bits_correct as f64, t.oracle_bits_correct as f64)
    }

    /// One row per class, then a `total` row.
    pub fn rows(&self) -> Vec<ReportRow> {
        let mut rows: Vec<ReportRow> = self.classes.iter().map(|c| self.row(c.class.to_string(), c)).collect();
        let mut t = self.total();
        t.config = String::from("all");
        rows.push(self.row(String::from("total"), &t));
        rows
    }

    fn row(&self, class: String, c: &ClassStats) -> ReportRow {
        ReportRow {
            class,
            config: c.config.clone(),
            buffers: c.buffers,
            accuracy: ratio_or_zero(c.buffers_correct as f64, c.buffers as f64),
            bits_correct: c.bits_correct,
            throughput_bps: ratio_or_zero(c.bits_correct as f64, self.duration_s),
            oracle_throughput_bps: ratio_or_zero(c.oracle_bits_correct as f64, self.duration_s),
            ratio: ratio_or_zero(c.bits_correct as f64, c.oracle_bits_correct as f64),
        }
    }
}

fn ratio_or_zero(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}
