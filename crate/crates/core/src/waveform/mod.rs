//! Baseband waveform synthesis, demodulation and channel emulation.

mod channel;
mod constellation;
mod ofdm;
mod pulse;
mod schedule;
mod single_carrier;

use alloc::vec::Vec;
use core::f64::consts::TAU;
use core::fmt;

pub use channel::{apply_channel, ChannelModel};
pub use constellation::{Constellation, Modulation};
pub use ofdm::{
    ofdm_demodulate, ofdm_demodulate_bits, ofdm_modulate, ofdm_modulate_bits, OfdmConfig, SymbolGrid, FFT_SIZES,
};
pub use pulse::PulseShape;
pub use schedule::{
    generate_schedule_stream, segment_payload, LabelMark, LabelTrack, ScheduleEntry, TransmitterSchedule,
};
pub use single_carrier::{demodulate_single_carrier, modulate_single_carrier, SingleCarrierConfig};

use crate::{param_err, ComplexSample, Result};

/// Finite run of complex baseband samples at a fixed sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct IqStream {
    pub samples: Vec<ComplexSample>,
    pub sample_rate_hz: f64,
}

impl IqStream {
    pub fn new(samples: Vec<ComplexSample>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s.norm_sqr()).sum()
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            0.0
        } else {
            self.energy() / self.samples.len() as f64
        }
    }

    /// Copies `range` into a new stream at the same rate.
    pub fn slice(&self, range: core::ops::Range<usize>) -> IqStream {
        IqStream::new(self.samples[range].to_vec(), self.sample_rate_hz)
    }
}

/// A physical-layer configuration the transmitter can switch to.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum PhyConfig {
    SingleCarrier(SingleCarrierConfig),
    Ofdm(OfdmConfig),
}

impl PhyConfig {
    pub fn validate(&self) -> Result<()> {
        match self {
            PhyConfig::SingleCarrier(c) => c.validate(),
            PhyConfig::Ofdm(c) => c.validate(),
        }
    }

    pub fn bits_per_symbol(&self) -> usize {
        match self {
            PhyConfig::SingleCarrier(c) => c.modulation.bits_per_symbol(),
            PhyConfig::Ofdm(c) => c.bin_modulation.bits_per_symbol() * c.occupied_bins.len(),
        }
    }

    /// Demodulates a stream that starts on a symbol boundary of this
    /// configuration (sample 0 of a modulator output).
    pub fn demodulate(&self, x: &IqStream) -> Result<Vec<u8>> {
        match self {
            PhyConfig::SingleCarrier(c) => Ok(demodulate_single_carrier(x, c)),
            PhyConfig::Ofdm(c) => {
                if x.len() < c.symbol_len() {
                    Ok(Vec::new())
                } else {
                    ofdm_demodulate_bits(x, c, 0)
                }
            }
        }
    }

    /// Modulates `bits`, which must hold a whole number of symbols.
    pub fn modulate(&self, bits: &[u8], sample_rate_hz: f64) -> Result<IqStream> {
        match self {
            PhyConfig::SingleCarrier(c) => modulate_single_carrier(bits, c, sample_rate_hz),
            PhyConfig::Ofdm(c) => ofdm_modulate_bits(bits, c, sample_rate_hz),
        }
    }

    /// Where complete symbols sit inside a stream of `len` samples produced
    /// by [`PhyConfig::modulate`].
    pub fn symbol_layout(&self, len: usize) -> SymbolLayout {
        match self {
            PhyConfig::SingleCarrier(c) => {
                let sps = c.samples_per_symbol;
                let delay = c.pulse.delay(sps);
                let (first_start, count) = match c.pulse {
                    PulseShape::Rectangular => (0, len / sps),
                    PulseShape::RootRaisedCosine { .. } => {
                        // Decision instant delay + j*sps needs the whole
                        // matched-filter window inside the stream.
                        let count = if len > 2 * delay {
                            (len - 1 - 2 * delay) / sps + 1
                        } else {
                            0
                        };
                        (delay - sps / 2, count)
                    }
                };
                SymbolLayout {
                    first_start,
                    stride: sps,
                    count,
                    bits_per_symbol: c.modulation.bits_per_symbol(),
                }
            }
            PhyConfig::Ofdm(c) => SymbolLayout {
                first_start: 0,
                stride: c.symbol_len(),
                count: len / c.symbol_len(),
                bits_per_symbol: self.bits_per_symbol(),
            },
        }
    }

    /// Number of symbols the transmitter emits to fill `len` samples.
    pub fn symbols_to_fill(&self, len: usize) -> usize {
        let per = match self {
            PhyConfig::SingleCarrier(c) => c.samples_per_symbol,
            PhyConfig::Ofdm(c) => c.symbol_len(),
        };
        len.div_ceil(per)
    }
}

impl fmt::Display for PhyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PhyConfig::SingleCarrier(c) => {
                write!(f, "{}, {} kHz", c.modulation, c.freq_shift_hz / 1000.0)
            }
            PhyConfig::Ofdm(c) => write!(f, "OFDM-{} {}", c.fft_size, c.bin_modulation),
        }
    }
}

/// Placement of decodable symbols: symbol `j` occupies
/// `first_start + j*stride .. first_start + j*stride + stride`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolLayout {
    pub first_start: usize,
    pub stride: usize,
    pub count: usize,
    pub bits_per_symbol: usize,
}

impl SymbolLayout {
    pub fn span(&self, j: usize) -> core::ops::Range<usize> {
        let start = self.first_start + j * self.stride;
        start..start + self.stride
    }
}

/// `y[k] = x[k] exp(j 2 pi shift k / S)`.
pub fn apply_frequency_shift(x: &IqStream, shift_hz: f64) -> Result<IqStream> {
    check_shift(shift_hz, x.sample_rate_hz)?;
    let mut samples = x.samples.clone();
    rotate(&mut samples, shift_hz, x.sample_rate_hz);
    Ok(IqStream::new(samples, x.sample_rate_hz))
}

pub(crate) fn check_shift(shift_hz: f64, sample_rate_hz: f64) -> Result<()> {
    if !(sample_rate_hz > 0.0) {
        return Err(param_err!("sample rate must be positive, got {sample_rate_hz}"));
    }
    if !(libm::fabs(shift_hz) < sample_rate_hz / 2.0) {
        return Err(param_err!(
            "frequency shift {shift_hz} Hz beyond Nyquist for {sample_rate_hz} S/s"
        ));
    }
    Ok(())
}

pub(crate) fn rotate(samples: &mut [ComplexSample], shift_hz: f64, sample_rate_hz: f64) {
    if shift_hz == 0.0 {
        return;
    }
    let cycles_per_sample = shift_hz / sample_rate_hz;
    for (k, s) in samples.iter_mut().enumerate() {
        let cycles = cycles_per_sample * k as f64;
        let phase = TAU * (cycles - libm::floor(cycles));
        *s *= ComplexSample::new(libm::cos(phase), libm::sin(phase));
    }
}
