use alloc::vec::Vec;
use core::f64::consts::TAU;

use super::{rotate, IqStream};
use crate::rng::SimRng;
use crate::{param_err, ComplexSample, Result};

/// FIR multipath, carrier offset and additive white Gaussian noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    /// Signal-to-noise ratio relative to the post-multipath signal power;
    /// `f64::INFINITY` disables noise.
    pub snr_db: f64,
    pub cfo_hz: f64,
    pub taps: Vec<ComplexSample>,
    pub seed: u64,
}

impl ChannelModel {
    pub fn identity() -> Self {
        Self {
            snr_db: f64::INFINITY,
            cfo_hz: 0.0,
            taps: alloc::vec![ComplexSample::new(1.0, 0.0)],
            seed: 0,
        }
    }

    pub fn awgn(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db,
            seed,
            ..Self::identity()
        }
    }

    /// Non-line-of-sight emulation: a unit direct path plus two echoes one
    /// and two samples late, magnitudes decaying by 0.3 per tap, with seeded
    /// random phases.
    pub fn nlos(snr_db: f64, seed: u64) -> Self {
        let mut rng = SimRng::derived(seed, 0x4e4c_4f53);
        let mut taps = alloc::vec![ComplexSample::new(1.0, 0.0)];
        let mut mag = 1.0;
        for _ in 0..2 {
            mag *= 0.3;
            let phase = TAU * rng.uniform();
            taps.push(ComplexSample::new(mag * libm::cos(phase), mag * libm::sin(phase)));
        }
        Self {
            snr_db,
            cfo_hz: 0.0,
            taps,
            seed,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.snr_db == f64::INFINITY
            && self.cfo_hz == 0.0
            && self.taps.len() == 1
            && self.taps[0] == ComplexSample::new(1.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(param_err!("channel needs at least one tap"));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(param_err!("SNR must be a number or +inf"));
        }
        if !self.cfo_hz.is_finite() {
            return Err(param_err!("carrier offset must be finite"));
        }
        Ok(())
    }
}

/// Convolves with the taps (causal, output trimmed to the input length),
/// rotates by the carrier offset, then adds noise at `snr_db` below the
/// measured signal power. Deterministic in `ch.seed`.
pub fn apply_channel(x: &IqStream, ch: &ChannelModel) -> Result<IqStream> {
    ch.validate()?;
    let mut y: Vec<ComplexSample> = if ch.taps.len() == 1 {
        let h = ch.taps[0];
        x.samples.iter().map(|&s| s * h).collect()
    } else {
        (0..x.len())
            .map(|n| {
                ch.taps
                    .iter()
                    .enumerate()
                    .take(n + 1)
                    .fold(ComplexSample::new(0.0, 0.0), |acc, (l, &h)| acc + h * x.samples[n - l])
            })
            .collect()
    };
    if ch.cfo_hz != 0.0 {
        rotate(&mut y, ch.cfo_hz, x.sample_rate_hz);
    }
    if ch.snr_db.is_finite() && !y.is_empty() {
        let power = y.iter().map(|s| s.norm_sqr()).sum::<f64>() / y.len() as f64;
        let noise_var = power / libm::pow(10.0, ch.snr_db / 10.0);
        let mut rng = SimRng::derived(ch.seed, 0x4157_474e);
        for s in y.iter_mut() {
            *s += rng.complex_gaussian(noise_var);
        }
    }
    Ok(IqStream::new(y, x.sample_rate_hz))
}
