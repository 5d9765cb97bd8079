//! Transmit/receive pulse shapes.

use alloc::vec::Vec;
use core::f64::consts::{PI, SQRT_2};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum PulseShape {
    /// Sample-and-hold; the receiver integrates and dumps each symbol.
    Rectangular,
    /// Root-raised-cosine matched pair.
    RootRaisedCosine { rolloff: f64, span_symbols: usize },
}

impl Default for PulseShape {
    fn default() -> Self {
        PulseShape::RootRaisedCosine {
            rolloff: 0.35,
            span_symbols: 8,
        }
    }
}

impl PulseShape {
    /// Transmit taps scaled so a unit-energy symbol stream has unit average
    /// sample power (`sum g^2 = sps`).
    pub fn taps(&self, sps: usize) -> Vec<f64> {
        match *self {
            PulseShape::Rectangular => alloc::vec![1.0; sps],
            PulseShape::RootRaisedCosine { rolloff, span_symbols } => {
                let len = span_symbols * sps + 1;
                let mid = (span_symbols * sps / 2) as f64;
                let mut h: Vec<f64> = (0..len).map(|i| rrc((i as f64 - mid) / sps as f64, rolloff)).collect();
                let energy: f64 = h.iter().map(|v| v * v).sum();
                let scale = libm::sqrt(sps as f64 / energy);
                h.iter_mut().for_each(|v| *v *= scale);
                h
            }
        }
    }

    /// Sample index (from the start of a modulated stream) of symbol 0's
    /// decision instant.
    pub fn delay(&self, sps: usize) -> usize {
        match *self {
            PulseShape::Rectangular => 0,
            PulseShape::RootRaisedCosine { span_symbols, .. } => span_symbols * sps / 2,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        if let PulseShape::RootRaisedCosine { rolloff, span_symbols } = *self {
            if !(rolloff > 0.0 && rolloff <= 1.0) {
                return Err(crate::param_err!("RRC roll-off {rolloff} outside (0, 1]"));
            }
            if span_symbols == 0 || span_symbols % 2 != 0 {
                return Err(crate::param_err!("RRC span must be a positive even symbol count"));
            }
        }
        Ok(())
    }
}

/// Unit-symbol-period root-raised-cosine impulse response at time `t` symbols.
fn rrc(t: f64, beta: f64) -> f64 {
    if libm::fabs(t) < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    let edge = 1.0 / (4.0 * beta);
    if libm::fabs(libm::fabs(t) - edge) < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / SQRT_2 * ((1.0 + 2.0 / PI) * libm::sin(a) + (1.0 - 2.0 / PI) * libm::cos(a));
    }
    let num = libm::sin(PI * t * (1.0 - beta)) + 4.0 * beta * t * libm::cos(PI * t * (1.0 + beta));
    let den = PI * t * (1.0 - (4.0 * beta * t) * (4.0 * beta * t));
    num / den
}
