use alloc::vec::Vec;
use core::ops::Range;

use super::{ClassCatalog, ClassStats, ThroughputReport};
use crate::rfnet::{ClassPrediction, LabeledTensor, RfnetModel};
use crate::rftensor::build_tensor;
use crate::waveform::{segment_payload, IqStream, LabelTrack, SymbolLayout};
use crate::{param_err, ComplexSample, Error, Result};

/// Picks a class for the buffer starting at absolute sample `start`, from
/// its first [`head_len`](BufferClassifier::head_len) samples.
pub trait BufferClassifier {
    fn head_len(&self) -> usize;
    fn classify(&self, head: &[ComplexSample], start: usize) -> Result<usize>;
}

impl<T: BufferClassifier + ?Sized> BufferClassifier for &T {
    fn head_len(&self) -> usize {
        (**self).head_len()
    }

    fn classify(&self, head: &[ComplexSample], start: usize) -> Result<usize> {
        (**self).classify(head, start)
    }
}

/// Runs the tensor built from the buffer head through `model`.
pub fn classify_buffer(buffer: &[ComplexSample], model: &RfnetModel) -> Result<ClassPrediction> {
    let needed = model.arch.input_len();
    if buffer.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: buffer.len(),
        });
    }
    let t = build_tensor(buffer, model.arch.input_w, model.arch.input_h, 0)?;
    model.predict(&t)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RfnetClassifier {
    pub model: RfnetModel,
}

impl BufferClassifier for RfnetClassifier {
    fn head_len(&self) -> usize {
        self.model.arch.input_len()
    }

    fn classify(&self, head: &[ComplexSample], _start: usize) -> Result<usize> {
        Ok(classify_buffer(head, &self.model)?.argmax)
    }
}

/// Reads the true label at the buffer head off the label track.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfectClassifier {
    pub truth: LabelTrack,
}

impl BufferClassifier for PerfectClassifier {
    fn head_len(&self) -> usize {
        0
    }

    fn classify(&self, _head: &[ComplexSample], start: usize) -> Result<usize> {
        self.truth
            .label_at(start)
            .ok_or_else(|| param_err!("sample {start} is past the label track"))
    }
}

/// Always answers the class after the true one.
#[derive(Debug, Clone, PartialEq)]
pub struct AlwaysWrongClassifier {
    pub truth: LabelTrack,
    pub n_classes: usize,
}

impl BufferClassifier for AlwaysWrongClassifier {
    fn head_len(&self) -> usize {
        0
    }

    fn classify(&self, head: &[ComplexSample], start: usize) -> Result<usize> {
        let perfect = PerfectClassifier {
            truth: self.truth.clone(),
        };
        Ok((perfect.classify(head, start)? + 1) % self.n_classes)
    }
}

/// Buffer size and where the first buffer starts in the stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ReceiverRun {
    pub buffer_samples: usize,
    #[cfg_attr(feature = "serde", serde(default))]
    pub start_offset: usize,
}

impl ReceiverRun {
    pub fn new(buffer_samples: usize) -> Self {
        Self {
            buffer_samples,
            start_offset: 0,
        }
    }

    /// Consecutive whole buffers inside `stream_len` samples; the partial
    /// tail is dropped.
    pub fn buffers(&self, stream_len: usize) -> impl Iterator<Item = Range<usize>> {
        let b = self.buffer_samples.max(1);
        let first = self.start_offset;
        let n = stream_len.saturating_sub(first) / b;
        (0..n).map(move |k| first + k * b..first + (k + 1) * b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BufferDecision {
    pub start: usize,
    pub len: usize,
    /// Label at the buffer head, if the track covers it.
    pub truth: Option<usize>,
    pub predicted: usize,
}

/// Classifies every buffer of the stream. `samples` may be empty when the
/// classifier needs no samples.
pub fn decide_buffers<C: BufferClassifier>(
    samples: &[ComplexSample],
    stream_len: usize,
    run: &ReceiverRun,
    classifier: &C,
    truth: &LabelTrack,
) -> Result<Vec<BufferDecision>> {
    if run.buffer_samples == 0 {
        return Err(param_err!("buffer size must be positive"));
    }
    let head_len = classifier.head_len();
    if head_len > run.buffer_samples {
        return Err(param_err!(
            "classifier needs {head_len} samples but buffers hold {}",
            run.buffer_samples
        ));
    }
    run.buffers(stream_len)
        .map(|r| {
            let head = if head_len == 0 {
                &[][..]
            } else {
                samples
                    .get(r.start..r.start + head_len)
                    .ok_or(Error::InsufficientData {
                        needed: r.start + head_len,
                        available: samples.len(),
                    })?
            };
            Ok(BufferDecision {
                start: r.start,
                len: r.len(),
                truth: truth.label_at(r.start),
                predicted: classifier.classify(head, r.start)?,
            })
        })
        .collect()
}

/// Samples handed to a demodulator configured for a class other than the
/// one on air.
pub fn misdemodulated_samples(decisions: &[BufferDecision], truth: &LabelTrack) -> u64 {
    let mut total = 0;
    for d in decisions {
        for_each_overlap(truth, d.start..d.start + d.len, |seg, overlap| {
            if truth.marks[seg].label != d.predicted {
                total += overlap.len() as u64;
            }
        });
    }
    total
}

fn for_each_overlap(truth: &LabelTrack, r: Range<usize>, mut f: impl FnMut(usize, Range<usize>)) {
    if truth.segment_len == 0 {
        return;
    }
    let mut pos = r.start;
    while pos < r.end {
        let Some(seg) = truth.segment_index(pos) else {
            return;
        };
        let end = truth.segment_range(seg).end.min(r.end);
        f(seg, pos..end);
        pos = end;
    }
}

/// Per-symbol correctness of one segment demodulated with its true config.
struct SegmentScore {
    start: usize,
    label: usize,
    layout: SymbolLayout,
    /// `prefix[j]` correct bits among symbols `0..j`.
    prefix: Vec<u64>,
}

impl SegmentScore {
    /// Symbols whose first sample lies in the absolute range `r`.
    fn symbols_in(&self, r: &Range<usize>) -> Range<usize> {
        let s0 = self.start + self.layout.first_start;
        let stride = self.layout.stride;
        let idx = |p: usize| p.saturating_sub(s0).div_ceil(stride).min(self.layout.count);
        idx(r.start)..idx(r.end)
    }

    fn correct(&self, js: &Range<usize>) -> u64 {
        self.prefix[js.end] - self.prefix[js.start]
    }
}

fn score_segments(stream: &IqStream, truth: &LabelTrack, catalog: &ClassCatalog) -> Result<Vec<SegmentScore>> {
    if stream.len() < truth.total_len() {
        return Err(Error::InsufficientData {
            needed: truth.total_len(),
            available: stream.len(),
        });
    }
    let mut out = Vec::with_capacity(truth.marks.len());
    for (i, mark) in truth.marks.iter().enumerate() {
        let config = catalog
            .config(mark.label)
            .ok_or_else(|| param_err!("label {} not in catalog", mark.label))?;
        let range = truth.segment_range(i);
        let layout = config.symbol_layout(range.len());
        let bits = config.demodulate(&stream.slice(range.clone()))?;
        let bps = layout.bits_per_symbol;
        let payload = segment_payload(
            truth.payload_seed,
            i,
            config.symbols_to_fill(range.len()) * config.bits_per_symbol(),
        );
        let mut prefix = Vec::with_capacity(layout.count + 1);
        prefix.push(0u64);
        let mut acc = 0;
        for j in 0..layout.count {
            let got = bits.get(j * bps..(j + 1) * bps).unwrap_or(&[]);
            let want = &payload[j * bps..(j + 1) * bps];
            acc += got.iter().zip(want).filter(|(a, b)| a == b).count() as u64;
            prefix.push(acc);
        }
        out.push(SegmentScore {
            start: range.start,
            label: mark.label,
            layout,
            prefix,
        });
    }
    Ok(out)
}

fn fill_oracle(report: &mut ThroughputReport, segments: &[SegmentScore]) {
    for s in segments {
        let c = &mut report.classes[s.label];
        c.oracle_bits_demodulated += (s.layout.count * s.layout.bits_per_symbol) as u64;
        c.oracle_bits_correct += s.prefix[s.layout.count];
    }
}

/// Demodulates every segment with its true configuration. The oracle's
/// buffers are the schedule segments themselves.
pub fn oracle_receive(stream: &IqStream, truth: &LabelTrack, catalog: &ClassCatalog) -> Result<ThroughputReport> {
    let segments = score_segments(stream, truth, catalog)?;
    let mut report = ThroughputReport::empty(catalog);
    report.duration_s = stream.duration_s();
    fill_oracle(&mut report, &segments);
    for s in &segments {
        let stats = &mut report.classes[s.label];
        stats.buffers += 1;
        stats.buffers_correct += 1;
    }
    for c in report.classes.iter_mut() {
        c.bits_demodulated = c.oracle_bits_demodulated;
        c.bits_correct = c.oracle_bits_correct;
    }
    Ok(report)
}

/// Classifies each buffer from its head, demodulates the whole buffer with
/// the predicted configuration and scores recovered payload bits, next to
/// the oracle on the same stream.
///
/// Demodulation is continuous across buffers: a symbol belongs to the
/// buffer holding its first sample, and counts only when that buffer's
/// configuration matches the one on air.
pub fn poly_receive<C: BufferClassifier>(
    stream: &IqStream,
    truth: &LabelTrack,
    run: &ReceiverRun,
    classifier: &C,
    catalog: &ClassCatalog,
) -> Result<ThroughputReport> {
    Ok(poly_receive_detailed(stream, truth, run, classifier, catalog)?.0)
}

/// [`poly_receive`] plus the per-buffer decisions.
pub fn poly_receive_detailed<C: BufferClassifier>(
    stream: &IqStream,
    truth: &LabelTrack,
    run: &ReceiverRun,
    classifier: &C,
    catalog: &ClassCatalog,
) -> Result<(ThroughputReport, Vec<BufferDecision>)> {
    let segments = score_segments(stream, truth, catalog)?;
    let decisions = decide_buffers(&stream.samples, stream.len(), run, classifier, truth)?;
    let mut report = ThroughputReport::empty(catalog);
    report.duration_s = stream.duration_s();
    fill_oracle(&mut report, &segments);
    for d in &decisions {
        if let Some(t) = d.truth {
            report.classes[t].buffers += 1;
            report.classes[t].buffers_correct += (t == d.predicted) as u64;
        }
        let chosen = catalog.config(d.predicted);
        for_each_overlap(truth, d.start..d.start + d.len, |seg, overlap| {
            let s = &segments[seg];
            let stats: &mut ClassStats = &mut report.classes[s.label];
            if s.label == d.predicted {
                let js = s.symbols_in(&overlap);
                stats.bits_demodulated += (js.len() * s.layout.bits_per_symbol) as u64;
                stats.bits_correct += s.correct(&js);
            } else if let Some(cfg) = chosen {
                let l = cfg.symbol_layout(overlap.len());
                stats.bits_demodulated += (l.count * l.bits_per_symbol) as u64;
            }
        });
    }
    Ok((report, decisions))
}

/// Rows are true classes, columns predictions.
pub fn confusion_matrix(dataset: &[LabeledTensor], model: &RfnetModel) -> Result<Vec<Vec<u64>>> {
    if dataset.is_empty() {
        return Err(param_err!("dataset is empty"));
    }
    let n = model.arch.n_classes;
    let mut m = alloc::vec![alloc::vec![0u64; n]; n];
    for s in dataset {
        if s.label >= n {
            return Err(param_err!("label {} outside {n} classes", s.label));
        }
        m[s.label][model.predict(&s.tensor)?.argmax] += 1;
    }
    Ok(m)
}
