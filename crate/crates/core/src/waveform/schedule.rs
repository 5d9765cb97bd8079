use alloc::vec::Vec;

use super::{IqStream, PhyConfig};
use crate::rng::SimRng;
use crate::{param_err, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScheduleEntry {
    pub config: PhyConfig,
    pub label: usize,
}

/// Timed sequence of transmitter configurations; each entry stays on air for
/// exactly `round(switch_time_s * sample_rate_hz)` samples.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TransmitterSchedule {
    pub entries: Vec<ScheduleEntry>,
    pub switch_time_s: f64,
    pub sample_rate_hz: f64,
}

impl TransmitterSchedule {
    pub fn segment_len(&self) -> usize {
        libm::round(self.switch_time_s * self.sample_rate_hz) as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.is_empty() {
            return Err(param_err!("schedule has no entries"));
        }
        if !(self.switch_time_s > 0.0) || !(self.sample_rate_hz > 0.0) {
            return Err(param_err!("switch time and sample rate must be positive"));
        }
        if self.segment_len() == 0 {
            return Err(param_err!("switch time shorter than one sample"));
        }
        for e in &self.entries {
            e.config.validate()?;
            if let PhyConfig::SingleCarrier(c) = &e.config {
                super::check_shift(c.freq_shift_hz, self.sample_rate_hz)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelMark {
    pub start: usize,
    pub label: usize,
}

/// Ground truth for a scheduled stream: where each segment starts, its class,
/// and the seed its payload bits were drawn from.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LabelTrack {
    pub marks: Vec<LabelMark>,
    pub segment_len: usize,
    pub payload_seed: u64,
}

impl LabelTrack {
    pub fn total_len(&self) -> usize {
        self.marks.len() * self.segment_len
    }

    pub fn segment_index(&self, sample: usize) -> Option<usize> {
        let i = sample / self.segment_len;
        (i < self.marks.len()).then_some(i)
    }

    pub fn label_at(&self, sample: usize) -> Option<usize> {
        self.segment_index(sample).map(|i| self.marks[i].label)
    }

    pub fn segment_range(&self, i: usize) -> core::ops::Range<usize> {
        let start = self.marks[i].start;
        start..start + self.segment_len
    }
}

/// Payload bits of segment `index`; receivers regenerate them for scoring.
pub fn segment_payload(payload_seed: u64, index: usize, n_bits: usize) -> Vec<u8> {
    SimRng::derived(payload_seed, index as u64).bits(n_bits)
}

/// Number of payload bits a segment of `segment_len` samples carries.
pub(crate) fn segment_bits(config: &PhyConfig, segment_len: usize) -> usize {
    config.symbols_to_fill(segment_len) * config.bits_per_symbol()
}

/// Concatenates one freshly modulated segment per schedule entry, each
/// truncated to exactly `segment_len` samples.
pub fn generate_schedule_stream(sched: &TransmitterSchedule, payload_seed: u64) -> Result<(IqStream, LabelTrack)> {
    sched.validate()?;
    let seg = sched.segment_len();
    let mut samples = Vec::with_capacity(seg * sched.entries.len());
    let mut marks = Vec::with_capacity(sched.entries.len());
    for (i, entry) in sched.entries.iter().enumerate() {
        let bits = segment_payload(payload_seed, i, segment_bits(&entry.config, seg));
        let wave = entry.config.modulate(&bits, sched.sample_rate_hz)?;
        debug_assert!(wave.len() >= seg);
        marks.push(LabelMark {
            start: samples.len(),
            label: entry.label,
        });
        samples.extend_from_slice(&wave.samples[..seg]);
    }
    Ok((
        IqStream::new(samples, sched.sample_rate_hz),
        LabelTrack {
            marks,
            segment_len: seg,
            payload_seed,
        },
    ))
}
