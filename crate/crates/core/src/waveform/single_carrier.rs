use alloc::vec::Vec;

use super::{check_shift, rotate, IqStream, Modulation, PhyConfig, PulseShape};
use crate::{param_err, shape_err, ComplexSample, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SingleCarrierConfig {
    pub modulation: Modulation,
    pub samples_per_symbol: usize,
    pub freq_shift_hz: f64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub pulse: PulseShape,
}

impl SingleCarrierConfig {
    /// RRC-shaped configuration.
    pub fn new(modulation: Modulation, samples_per_symbol: usize, freq_shift_hz: f64) -> Self {
        Self {
            modulation,
            samples_per_symbol,
            freq_shift_hz,
            pulse: PulseShape::default(),
        }
    }

    pub fn rectangular(modulation: Modulation, samples_per_symbol: usize, freq_shift_hz: f64) -> Self {
        Self {
            pulse: PulseShape::Rectangular,
            ..Self::new(modulation, samples_per_symbol, freq_shift_hz)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_symbol == 0 {
            return Err(param_err!("samples_per_symbol must be at least 1"));
        }
        if self.samples_per_symbol < 2 && matches!(self.pulse, PulseShape::RootRaisedCosine { .. }) {
            return Err(param_err!("RRC shaping needs at least 2 samples per symbol"));
        }
        if !self.freq_shift_hz.is_finite() {
            return Err(param_err!("frequency shift must be finite"));
        }
        self.pulse.validate()
    }
}

impl From<SingleCarrierConfig> for PhyConfig {
    fn from(c: SingleCarrierConfig) -> Self {
        PhyConfig::SingleCarrier(c)
    }
}

/// Maps Gray-labelled symbols, pulse-shapes at `samples_per_symbol` and
/// applies the configured frequency shift.
///
/// With RRC shaping the output carries the filter tails:
/// `(n_symbols - 1) * sps + span * sps + 1` samples, symbol `j` peaking at
/// `span * sps / 2 + j * sps`.
pub fn modulate_single_carrier(bits: &[u8], cfg: &SingleCarrierConfig, sample_rate_hz: f64) -> Result<IqStream> {
    cfg.validate()?;
    check_shift(cfg.freq_shift_hz, sample_rate_hz)?;
    let bps = cfg.modulation.bits_per_symbol();
    if bits.len() % bps != 0 {
        return Err(shape_err!(
            "{} bits is not a multiple of {bps} bits per {} symbol",
            bits.len(),
            cfg.modulation
        ));
    }
    let constellation = cfg.modulation.constellation();
    let sps = cfg.samples_per_symbol;
    let symbols: Vec<ComplexSample> = bits.chunks_exact(bps).map(|b| constellation.map(b)).collect();

    let mut out = match cfg.pulse {
        PulseShape::Rectangular => symbols
            .iter()
            .flat_map(|&s| core::iter::repeat(s).take(sps))
            .collect::<Vec<_>>(),
        PulseShape::RootRaisedCosine { .. } => {
            if symbols.is_empty() {
                Vec::new()
            } else {
                let taps = cfg.pulse.taps(sps);
                let mut out = alloc::vec![ComplexSample::new(0.0, 0.0); (symbols.len() - 1) * sps + taps.len()];
                for (j, &s) in symbols.iter().enumerate() {
                    for (o, &g) in out[j * sps..j * sps + taps.len()].iter_mut().zip(&taps) {
                        *o += s * g;
                    }
                }
                out
            }
        }
    };
    rotate(&mut out, cfg.freq_shift_hz, sample_rate_hz);
    Ok(IqStream::new(out, sample_rate_hz))
}

/// Undoes the frequency shift, matched-filters at each symbol's decision
/// instant and hard-decides against the Gray map.
///
/// Only symbols whose whole matched-filter window lies inside `x` are
/// decided; an empty stream yields no bits.
pub fn demodulate_single_carrier(x: &IqStream, cfg: &SingleCarrierConfig) -> Vec<u8> {
    let layout = PhyConfig::SingleCarrier(cfg.clone()).symbol_layout(x.len());
    let mut samples = x.samples.clone();
    rotate(&mut samples, -cfg.freq_shift_hz, x.sample_rate_hz);
    let constellation = cfg.modulation.constellation();
    let sps = cfg.samples_per_symbol;
    let taps = cfg.pulse.taps(sps);
    let mut bits = Vec::with_capacity(layout.count * layout.bits_per_symbol);
    for j in 0..layout.count {
        // Both shapes: window starts at j*sps and spans the tap vector.
        let window = &samples[j * sps..j * sps + taps.len()];
        let acc = window
            .iter()
            .zip(&taps)
            .fold(ComplexSample::new(0.0, 0.0), |acc, (&s, &g)| acc + s * g);
        constellation.push_bits(constellation.decide(acc / sps as f64), &mut bits);
    }
    bits
}
