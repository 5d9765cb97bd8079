//! Labelled I/Q window datasets: synthesis and the on-disk format.
//!
//! On disk a dataset is a raw file of little-endian `f32` I/Q pairs plus a
//! JSON sidecar listing where each labelled window starts.

use std::f64::consts::TAU;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use polyrx_core::polyrx::ClassCatalog;
use polyrx_core::rfnet::LabeledTensor;
use polyrx_core::rftensor::build_tensor;
use polyrx_core::rng::{derive_seed, SimRng};
use polyrx_core::waveform::{apply_channel, ChannelModel, PhyConfig, PulseShape};
use polyrx_core::ComplexSample;
use serde::{Deserialize, Serialize};

use crate::config::ChannelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowLabel {
    pub start: usize,
    pub label: usize,
    pub config: PhyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub sample_rate_hz: f64,
    pub tensor_w: usize,
    pub tensor_h: usize,
    pub labels: Vec<WindowLabel>,
    pub class_names: Vec<String>,
}

/// Fixed-length windows laid end to end in one sample buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<ComplexSample>,
    pub meta: Sidecar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub sample_rate_hz: f64,
    pub tensor_w: usize,
    pub tensor_h: usize,
    pub per_class: usize,
    pub channel: ChannelSpec,
    pub seed: u64,
}

impl Dataset {
    pub fn window_len(&self) -> usize {
        self.meta.tensor_w * self.meta.tensor_h
    }

    pub fn len(&self) -> usize {
        self.meta.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.meta.class_names.len()
    }

    pub fn window(&self, i: usize) -> &[ComplexSample] {
        let start = self.meta.labels[i].start;
        &self.samples[start..start + self.window_len()]
    }

    pub fn tensors(&self) -> Result<Vec<LabeledTensor>> {
        (0..self.len())
            .map(|i| {
                Ok(LabeledTensor {
                    tensor: build_tensor(self.window(i), self.meta.tensor_w, self.meta.tensor_h, 0)?,
                    label: self.meta.labels[i].label,
                })
            })
            .collect()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for l in &self.meta.labels {
            counts[l.label] += 1;
        }
        counts
    }

    fn paths(base: &Path) -> (PathBuf, PathBuf) {
        (base.with_extension("iq"), base.with_extension("json"))
    }

    /// Writes `<base>.iq` and `<base>.json`.
    pub fn save(&self, base: &Path) -> Result<()> {
        let (iq, json) = Self::paths(base);
        let file = fs::File::create(&iq).with_context(|| format!("creating {}", iq.display()))?;
        let mut w = BufWriter::new(file);
        for s in &self.samples {
            w.write_all(&(s.re as f32).to_le_bytes())?;
            w.write_all(&(s.im as f32).to_le_bytes())?;
        }
        w.flush().with_context(|| format!("writing {}", iq.display()))?;
        let text = serde_json::to_string_pretty(&self.meta)?;
        fs::write(&json, text + "\n").with_context(|| format!("writing {}", json.display()))?;
        Ok(())
    }

    pub fn load(base: &Path) -> Result<Self> {
        let (iq, json) = Self::paths(base);
        let text = fs::read_to_string(&json).with_context(|| format!("reading {}", json.display()))?;
        let meta: Sidecar = serde_json::from_str(&text).with_context(|| format!("parsing {}", json.display()))?;
        let bytes = fs::read(&iq).with_context(|| format!("reading {}", iq.display()))?;
        ensure!(
            bytes.len() % 8 == 0,
            "{}: length {} is not a whole number of I/Q pairs",
            iq.display(),
            bytes.len()
        );
        let samples: Vec<ComplexSample> = bytes
            .chunks_exact(8)
            .map(|c| {
                let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]);
                let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]);
                ComplexSample::new(re as f64, im as f64)
            })
            .collect();
        let ds = Dataset { samples, meta };
        ds.check().with_context(|| format!("validating {}", json.display()))?;
        Ok(ds)
    }

    fn check(&self) -> Result<()> {
        for l in &self.meta.labels {
            ensure!(
                l.label < self.n_classes(),
                "label {} outside {} classes",
                l.label,
                self.n_classes()
            );
            ensure!(
                l.start + self.window_len() <= self.samples.len(),
                "window at {} runs past {} samples",
                l.start,
                self.samples.len()
            );
        }
        Ok(())
    }

    /// Deterministic split into `(train, test)`, stratified per class.
    pub fn split(&self, test_fraction: f64, seed: u64) -> Result<(Vec<LabeledTensor>, Vec<LabeledTensor>)> {
        ensure!((0.0..1.0).contains(&test_fraction), "test fraction must be in [0, 1)");
        let all = self.tensors()?;
        let mut by_class: Vec<Vec<LabeledTensor>> = vec![Vec::new(); self.n_classes()];
        for t in all {
            by_class[t.label].push(t);
        }
        let mut rng = SimRng::derived(seed, 0x73706c74);
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for mut items in by_class {
            rng.shuffle(&mut items);
            let n_test = (items.len() as f64 * test_fraction).round() as usize;
            test.extend(items.drain(..n_test));
            train.extend(items);
        }
        Ok((train, test))
    }
}

/// Multiplies by `exp(j 2 pi f (n0 + k) / S)`.
fn rotate_from(samples: &mut [ComplexSample], shift_hz: f64, sample_rate_hz: f64, n0: u64) {
    if shift_hz == 0.0 {
        return;
    }
    let step = shift_hz / sample_rate_hz;
    for (k, s) in samples.iter_mut().enumerate() {
        let cycles = step * (n0 + k as u64) as f64;
        *s *= ComplexSample::from_polar(1.0, TAU * (cycles - cycles.floor()));
    }
}

/// One window of class `config` as a receiver would cut it from a long
/// transmission: random symbol timing, and for shifted carriers the phase
/// the shift has reached at a random point in the first second.
pub fn synth_window(
    config: &PhyConfig,
    sample_rate_hz: f64,
    len: usize,
    channel: &ChannelModel,
    rng: &mut SimRng,
) -> Result<Vec<ComplexSample>> {
    let (start, total, unshifted, shift) = match config {
        PhyConfig::SingleCarrier(c) => {
            let sps = c.samples_per_symbol;
            let delay = match c.pulse {
                PulseShape::Rectangular => 0,
                PulseShape::RootRaisedCosine { .. } => c.pulse.delay(sps),
            };
            let start = 2 * delay + rng.below(sps);
            let mut base = c.clone();
            base.freq_shift_hz = 0.0;
            (
                start,
                start + len + 2 * delay,
                PhyConfig::SingleCarrier(base),
                c.freq_shift_hz,
            )
        }
        PhyConfig::Ofdm(o) => {
            let start = rng.below(o.symbol_len());
            (start, start + len, config.clone(), 0.0)
        }
    };
    let n_bits = unshifted.symbols_to_fill(total) * unshifted.bits_per_symbol();
    let bits = rng.bits(n_bits);
    let mut wave = unshifted.modulate(&bits, sample_rate_hz)?;
    ensure!(
        wave.len() >= start + len,
        "modulator produced {} samples, need {}",
        wave.len(),
        start + len
    );
    let n0 = rng.below(sample_rate_hz as usize) as u64;
    rotate_from(&mut wave.samples, shift, sample_rate_hz, n0);
    let rx = apply_channel(&wave, channel)?;
    Ok(rx.samples[start..start + len].to_vec())
}

/// `per_class` windows for every class, in class-major order.
pub fn synthesize(catalog: &ClassCatalog, spec: &SynthSpec) -> Result<Dataset> {
    ensure!(spec.per_class > 0, "per_class must be positive");
    ensure!(
        spec.tensor_w > 0 && spec.tensor_h > 0,
        "tensor dimensions must be positive"
    );
    catalog.validate()?;
    let len = spec.tensor_w * spec.tensor_h;
    let mut samples = Vec::with_capacity(catalog.len() * spec.per_class * len);
    let mut labels = Vec::with_capacity(catalog.len() * spec.per_class);
    for entry in &catalog.entries {
        if let PhyConfig::SingleCarrier(c) = &entry.config {
            if c.freq_shift_hz.abs() >= spec.sample_rate_hz / 2.0 {
                bail!("{}: shift beyond Nyquist at {} Hz", entry.name, spec.sample_rate_hz);
            }
        }
        for i in 0..spec.per_class {
            let stream = ((entry.label as u64) << 32) | i as u64;
            let mut rng = SimRng::derived(spec.seed, stream);
            let channel = spec.channel.model(derive_seed(spec.seed ^ 0x6368_616e, stream));
            let w = synth_window(&entry.config, spec.sample_rate_hz, len, &channel, &mut rng)?;
            labels.push(WindowLabel {
                start: samples.len(),
                label: entry.label,
                config: entry.config.clone(),
            });
            samples.extend(w);
        }
    }
    Ok(Dataset {
        samples,
        meta: Sidecar {
            sample_rate_hz: spec.sample_rate_hz,
            tensor_w: spec.tensor_w,
            tensor_h: spec.tensor_h,
            labels,
            class_names: catalog.names(),
        },
    })
}
