//! The experiments behind each command, as library functions.

use anyhow::{ensure, Result};
use polyrx_core::polyrx::{
    confusion_matrix, poly_receive, AlwaysWrongClassifier, BufferClassifier, ClassCatalog, PerfectClassifier,
    ReceiverRun, RfnetClassifier, ThroughputReport,
};
use polyrx_core::rfnet::{accuracy, train, LabeledTensor, RfnetModel, TrainConfig};
use polyrx_core::rng::{derive_seed, SimRng};
use polyrx_core::waveform::{apply_channel, generate_schedule_stream};

use crate::config::{ChannelSpec, ExperimentSpec, RunSpec};
use crate::dataset::{synthesize, Dataset, SynthSpec};
use crate::weights::round_to_f32;

pub fn synth_spec(spec: &ExperimentSpec, seed: u64) -> SynthSpec {
    SynthSpec {
        sample_rate_hz: spec.dataset.sample_rate_hz,
        tensor_w: spec.arch.input_w,
        tensor_h: spec.arch.input_h,
        per_class: spec.dataset.per_class,
        channel: spec.channel.clone(),
        seed,
    }
}

pub fn gen_dataset(spec: &ExperimentSpec, seed: u64) -> Result<Dataset> {
    let catalog = spec.validate()?;
    synthesize(&catalog, &synth_spec(spec, seed))
}

#[derive(Debug, Clone)]
pub struct Trained {
    /// Float model with parameters rounded to `f32`, exactly as saved.
    pub model: RfnetModel,
    pub loss_history: Vec<f64>,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
}

/// Splits `dataset`, trains, and scores the saved form of the model.
pub fn train_on(spec: &ExperimentSpec, dataset: &Dataset, seed: u64) -> Result<Trained> {
    let arch = spec.arch.arch(dataset.n_classes());
    let (train_set, test_set) = dataset.split(spec.dataset.test_fraction, seed)?;
    ensure!(!train_set.is_empty(), "training split is empty");
    let cfg = TrainConfig {
        seed,
        ..spec.train.clone()
    };
    let out = train(&train_set, &arch, &cfg)?;
    let model = RfnetModel::float(arch, round_to_f32(&out.params))?;
    Ok(Trained {
        train_accuracy: accuracy(&model, &train_set)?,
        test_accuracy: accuracy(&model, &test_set)?,
        n_train: train_set.len(),
        n_test: test_set.len(),
        model,
        loss_history: out.loss_history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub confusion: Vec<Vec<u64>>,
    /// Fraction of tensors where a second model picks the same class.
    pub agreement: Option<f64>,
}

pub fn evaluate(model: &RfnetModel, data: &[LabeledTensor], reference: Option<&RfnetModel>) -> Result<Evaluation> {
    let confusion = confusion_matrix(data, model)?;
    let agreement = match reference {
        Some(r) => {
            let mut same = 0usize;
            for s in data {
                same += (model.predict(&s.tensor)?.argmax == r.predict(&s.tensor)?.argmax) as usize;
            }
            Some(same as f64 / data.len() as f64)
        }
        None => None,
    };
    Ok(Evaluation {
        accuracy: accuracy(model, data)?,
        confusion,
        agreement,
    })
}

/// Who picks each buffer's class in a simulation.
#[derive(Debug, Clone)]
pub enum Classifier {
    Model(RfnetModel),
    Perfect,
    AlwaysWrong,
}

#[derive(Debug, Clone)]
pub struct SimOutcome {
    pub report: ThroughputReport,
    pub per_seed_ratio: Vec<f64>,
}

/// One stream per seed: a random schedule of `run.switches` entries, the
/// channel, a random buffer phase, then the receiver and the oracle.
pub fn simulate(
    catalog: &ClassCatalog,
    channel: &ChannelSpec,
    run: &RunSpec,
    classifier: &Classifier,
    seed: u64,
) -> Result<SimOutcome> {
    let mut merged = ThroughputReport::empty(catalog);
    let mut per_seed = Vec::with_capacity(run.seeds);
    for s in 0..run.seeds as u64 {
        let stream_seed = derive_seed(seed, s);
        let sched = catalog.random_schedule(run.switches, run.switch_time_s, run.sample_rate_hz, stream_seed);
        let (clean, track) = generate_schedule_stream(&sched, stream_seed)?;
        let rx = apply_channel(&clean, &channel.model(derive_seed(stream_seed, 1)))?;
        drop(clean);
        let start_offset = if run.random_phase {
            SimRng::derived(stream_seed, 2).below(run.buffer_samples)
        } else {
            0
        };
        let receiver = ReceiverRun {
            buffer_samples: run.buffer_samples,
            start_offset,
        };
        let report = match classifier {
            Classifier::Model(m) => receive(&rx, &track, &receiver, &RfnetClassifier { model: m.clone() }, catalog)?,
            Classifier::Perfect => receive(
                &rx,
                &track,
                &receiver,
                &PerfectClassifier { truth: track.clone() },
                catalog,
            )?,
            Classifier::AlwaysWrong => receive(
                &rx,
                &track,
                &receiver,
                &AlwaysWrongClassifier {
                    truth: track.clone(),
                    n_classes: catalog.len(),
                },
                catalog,
            )?,
        };
        per_seed.push(report.ratio());
        merged.merge(&report)?;
    }
    Ok(SimOutcome {
        report: merged,
        per_seed_ratio: per_seed,
    })
}

fn receive<C: BufferClassifier>(
    rx: &polyrx_core::waveform::IqStream,
    track: &polyrx_core::waveform::LabelTrack,
    run: &ReceiverRun,
    classifier: &C,
    catalog: &ClassCatalog,
) -> Result<ThroughputReport> {
    Ok(poly_receive(rx, track, run, classifier, catalog)?)
}
