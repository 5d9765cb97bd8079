//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use polyrx::budget_table::{BudgetQuery, BudgetReport};
use polyrx::config::{ArchSpec, CatalogKind, ChannelSpec, ExperimentSpec, RunSpec};
use polyrx::dataset::Dataset;
use polyrx::experiment::{gen_dataset, simulate, train_on, Classifier};
use polyrx_core::budget::expected_misaligned_samples;
use polyrx_core::polyrx::{decide_buffers, misdemodulated_samples, ClassCatalog, PerfectClassifier, ReceiverRun};
use polyrx_core::rfnet::{
    loss_and_gradient, streaming_conv, ConvLayer, FeatureMap, FixedFormat, FloatArith, FloatParams, LabeledTensor,
    ModelParams, RfnetArch, RfnetModel, TrainConfig,
};
use polyrx_core::rftensor::RfTensor;
use polyrx_core::rng::SimRng;
use polyrx_core::waveform::{LabelMark, LabelTrack};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn c1_budget() -> Outcome {
    let a = BudgetReport::new(&BudgetQuery {
        sample_rate_hz: 5e6,
        t_cn_s: 0.016,
        buffer_samples: Some(40_000),
        ..BudgetQuery::default()
    })
    .unwrap();
    let b = BudgetReport::new(&BudgetQuery {
        sample_rate_hz: 5e6,
        buffer_samples: Some(250_000),
        switch_time_s: Some(0.25),
        ..BudgetQuery::default()
    })
    .unwrap();
    let n = b.inferences_per_switch;
    let pass = a.buffer_bound_samples == 40_000.0
        && a.min_buffer_samples == 40_001
        && !a.feasible
        && a.min_switch_time_s == 0.008
        && n == 5.0;
    outcome(
        pass,
        format!(
            "B > {} (min {}), T_sw = {} ms, {n} inferences per switch",
            a.buffer_bound_samples,
            a.min_buffer_samples,
            a.min_switch_time_s * 1e3
        ),
    )
}

fn random_case(rng: &mut SimRng) -> (FeatureMap<f64>, ConvLayer<f64>) {
    let f = 2 + rng.below(2);
    let w = f + rng.below(11 - f);
    let h = f + rng.below(11 - f);
    let c = 1 + rng.below(4);
    let depth = 1 + rng.below(3);
    let input = FeatureMap::new(
        h,
        w,
        depth,
        (0..w * h * depth).map(|_| rng.uniform_range(-2.0, 2.0)).collect(),
    )
    .unwrap();
    let layer = ConvLayer {
        n_filters: c,
        size: f,
        depth,
        filters: (0..c * f * f * depth).map(|_| rng.uniform_range(-1.0, 1.0)).collect(),
        bias: (0..c).map(|_| rng.uniform_range(-1.0, 1.0)).collect(),
    };
    (input, layer)
}

/// Textbook valid convolution, products summed over (dy, dx, d) in order.
fn naive_conv<T: Copy, A: Copy>(
    x: &FeatureMap<T>,
    l: &ConvLayer<T>,
    zero: A,
    mac: impl Fn(A, T, T) -> A,
    finish: impl Fn(A, T) -> T,
) -> Vec<T> {
    let f = l.size;
    let mut out = Vec::new();
    for oy in 0..x.rows - f + 1 {
        for ox in 0..x.cols - f + 1 {
            for c in 0..l.n_filters {
                let mut acc = zero;
                for dy in 0..f {
                    for dx in 0..f {
                        for d in 0..x.depth {
                            let xi = x.data[((oy + dy) * x.cols + ox + dx) * x.depth + d];
                            let wi = l.filters[((c * f + dy) * f + dx) * x.depth + d];
                            acc = mac(acc, xi, wi);
                        }
                    }
                }
                out.push(finish(acc, l.bias[c]));
            }
        }
    }
    out
}

fn fixed_finish(acc: i64, bias: i32, frac: u32) -> i32 {
    let total = acc as i128 + ((bias as i128) << frac);
    let half = 1i128 << (frac - 1);
    let r = if total >= 0 {
        (total + half) >> frac
    } else {
        -((-total + half) >> frac)
    };
    r.clamp(i32::MIN as i128, i32::MAX as i128) as i32
}

fn c2_streaming() -> Outcome {
    let mut rng = SimRng::new(0x5eed);
    let fmt = FixedFormat::default();
    let frac = fmt.frac_bits();
    let cases = 1200;
    let mut float_mismatch = 0;
    let mut fixed_mismatch = 0;
    for _ in 0..cases {
        let (x, l) = random_case(&mut rng);
        let direct = naive_conv(&x, &l, 0.0f64, |a, p, q| a + p * q, |a, b| a + b);
        let streamed = streaming_conv(&FloatArith, &x, &l).unwrap().output.data;
        if direct.iter().zip(&streamed).any(|(a, b)| a.to_bits() != b.to_bits()) || direct.len() != streamed.len() {
            float_mismatch += 1;
        }
        let qx = x.map(|v| fmt.quantize(v));
        let ql = ConvLayer {
            n_filters: l.n_filters,
            size: l.size,
            depth: l.depth,
            filters: l.filters.iter().map(|&v| fmt.quantize(v)).collect(),
            bias: l.bias.iter().map(|&v| fmt.quantize(v)).collect(),
        };
        let direct = naive_conv(
            &qx,
            &ql,
            0i64,
            |a, p, q| a.saturating_add(p as i64 * q as i64),
            |a, b| fixed_finish(a, b, frac),
        );
        if direct != streaming_conv(&fmt, &qx, &ql).unwrap().output.data {
            fixed_mismatch += 1;
        }
    }
    let (x, l) = {
        let mut r = SimRng::new(7);
        let x = FeatureMap::new(4, 4, 2, (0..32).map(|_| r.gaussian()).collect()).unwrap();
        let l = ConvLayer {
            n_filters: 1,
            size: 3,
            depth: 2,
            filters: (0..18).map(|_| r.gaussian()).collect(),
            bias: vec![0.0],
        };
        (x, l)
    };
    let fill = streaming_conv(&FloatArith, &x, &l).unwrap().line_buffer_full_at;
    outcome(
        float_mismatch == 0 && fixed_mismatch == 0 && fill == 12,
        format!("{cases} cases, {float_mismatch} float / {fixed_mismatch} fixed mismatches, fill after {fill} cycles"),
    )
}

fn c3_gradients() -> Outcome {
    let arch = RfnetArch {
        conv_filters: vec![3, 2],
        filter_size: 2,
        dense: vec![5],
        input_w: 6,
        input_h: 5,
        n_classes: 4,
    };
    let n_params = arch.param_count();
    let mut rng = SimRng::new(21);
    let batch: Vec<LabeledTensor> = (0..3)
        .map(|i| LabeledTensor {
            tensor: RfTensor::from_data(6, 5, (0..60).map(|_| rng.gaussian()).collect()).unwrap(),
            label: i % 4,
        })
        .collect();
    let params = FloatParams::he_uniform(&arch, 3).map(|v| v + 0.05);
    let l2 = 1e-3;
    let (_, grad) = loss_and_gradient(&arch, &params, &batch, l2).unwrap();
    let analytic: Vec<f64> = grad.tensors().concat();
    let base: Vec<Vec<f64>> = params.tensors().iter().map(|t| t.to_vec()).collect();
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut k = 0;
    for (ti, t) in base.iter().enumerate() {
        for j in 0..t.len() {
            let eval = |delta: f64| {
                let mut tensors = base.clone();
                tensors[ti][j] += delta;
                let p = FloatParams::from_tensors(&arch, &tensors, 0.0).unwrap();
                loss_and_gradient(&arch, &p, &batch, l2).unwrap().0
            };
            let numeric = (eval(h) - eval(-h)) / (2.0 * h);
            let a = analytic[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            k += 1;
        }
    }
    outcome(
        n_params <= 500 && k == n_params && worst < 1e-3,
        format!("{n_params} parameters, worst relative error {worst:.2e}"),
    )
}

fn c8_loopback() -> Outcome {
    let mut failures = Vec::new();
    let sc = ClassCatalog::single_carrier_6(10, 0.0).unwrap();
    let ofdm = ClassCatalog::ofdm_9().unwrap();
    let mut rng = SimRng::new(88);
    let mut count = 0;
    for (catalog, rate) in [(&sc, 20e3), (&ofdm, 5e6)] {
        for e in &catalog.entries {
            let bits = rng.bits(e.config.bits_per_symbol() * 64);
            let tx = e.config.modulate(&bits, rate).unwrap();
            let rx = e.config.demodulate(&tx).unwrap();
            if rx.get(..bits.len()) != Some(&bits[..]) {
                failures.push(e.name.clone());
            }
            count += 1;
        }
    }
    outcome(
        failures.is_empty(),
        format!("{count} configurations, failures: {failures:?}"),
    )
}

fn c9_boundary() -> Outcome {
    let b = 250_000usize;
    let seg = 1_250_000usize;
    let trials = 10_000;
    let truth = LabelTrack {
        marks: vec![LabelMark { start: 0, label: 0 }, LabelMark { start: seg, label: 1 }],
        segment_len: seg,
        payload_seed: 0,
    };
    let stub = PerfectClassifier { truth: truth.clone() };
    let mut rng = SimRng::new(99);
    let mut total = 0u64;
    for _ in 0..trials {
        let run = ReceiverRun {
            buffer_samples: b,
            start_offset: rng.below(b),
        };
        let d = decide_buffers(&[], truth.total_len(), &run, &stub, &truth).unwrap();
        total += misdemodulated_samples(&d, &truth);
    }
    let mean = total as f64 / trials as f64;
    let expected = expected_misaligned_samples(b as u64);
    let err = (mean - expected).abs() / expected;
    outcome(
        err <= 0.02,
        format!(
            "mean {mean:.0} samples per switch vs B/2 = {expected}, {:.2}% off over {trials} trials",
            err * 100.0
        ),
    )
}

const SEED: u64 = 2024;
const PER_CLASS: usize = 4000;
const EPOCHS: usize = 10;
const LEARNING_RATE: f64 = 1e-3;

fn single_carrier_spec(sps: usize) -> ExperimentSpec {
    let mut spec = ExperimentSpec::default();
    spec.seed = Some(SEED);
    spec.catalog.kind = CatalogKind::SingleCarrier18;
    spec.catalog.samples_per_symbol = sps;
    spec.channel = ChannelSpec::awgn(20.0);
    spec.dataset.per_class = PER_CLASS;
    spec.dataset.test_fraction = 0.2;
    spec.train = TrainConfig {
        learning_rate: LEARNING_RATE,
        epochs: EPOCHS,
        ..TrainConfig::default()
    };
    spec
}

/// Widest single hidden layer whose dense-only net does not exceed `target`
/// parameters, or the next one up if that lands closer.
fn dense_equal_params(input_len: usize, n_classes: usize, target: usize) -> (usize, usize) {
    let count = |h: usize| h * (input_len + 1) + n_classes * (h + 1);
    let h = (1..).find(|&h| count(h + 1) > target).unwrap();
    if target - count(h) <= count(h + 1) - target {
        (h, count(h))
    } else {
        (h + 1, count(h + 1))
    }
}

struct SingleCarrierRuns {
    accuracy: Vec<(usize, f64)>,
    fidelity: Outcome,
    dense: Outcome,
}

fn single_carrier_runs() -> SingleCarrierRuns {
    let mut accuracy = Vec::new();
    let mut fidelity = None;
    let mut dense = None;
    for sps in [10, 5, 2] {
        let spec = single_carrier_spec(sps);
        let data = gen_dataset(&spec, SEED).unwrap();
        let t = train_on(&spec, &data, SEED).unwrap();
        eprintln!("sps {sps}: held-out accuracy {:.4}", t.test_accuracy);
        accuracy.push((sps, t.test_accuracy));
        if sps == 10 {
            fidelity = Some(fixed_point_fidelity(&spec, &data, &t.model));
            dense = Some(dense_baseline(
                &spec,
                &data,
                t.model.arch.param_count(),
                t.test_accuracy,
            ));
        }
    }
    SingleCarrierRuns {
        accuracy,
        fidelity: fidelity.unwrap(),
        dense: dense.unwrap(),
    }
}

fn fixed_point_fidelity(spec: &ExperimentSpec, data: &Dataset, model: &RfnetModel) -> Outcome {
    let fmt = FixedFormat::default();
    let (_, test) = data.split(spec.dataset.test_fraction, SEED).unwrap();
    let fixed = model.quantized(fmt).unwrap();
    let mut same = 0;
    for s in &test {
        same += (model.predict(&s.tensor).unwrap().argmax == fixed.predict(&s.tensor).unwrap().argmax) as usize;
    }
    let agreement = same as f64 / test.len() as f64;
    let ModelParams::Fixed { params, .. } = &fixed.params else {
        unreachable!()
    };
    let mut worst = 0.0f64;
    for (f, q) in model.float_params().tensors().iter().zip(params.tensors()) {
        for (&v, &r) in f.iter().zip(q) {
            worst = worst.max((v - fmt.dequantize(r)).abs());
        }
    }
    let bound = 2f64.powi(-23);
    outcome(
        test.len() >= 1000 && agreement >= 0.99 && worst <= bound,
        format!(
            "argmax agreement {:.2}% on {} held-out tensors, worst round-trip error {:.3e} (bound {:.3e})",
            agreement * 100.0,
            test.len(),
            worst,
            bound
        ),
    )
}

fn dense_baseline(spec: &ExperimentSpec, data: &Dataset, conv_params: usize, conv_accuracy: f64) -> Outcome {
    let input_len = 2 * spec.arch.input_w * spec.arch.input_h;
    let (hidden, params) = dense_equal_params(input_len, data.n_classes(), conv_params);
    let mut dense_spec = spec.clone();
    dense_spec.arch = ArchSpec {
        conv_filters: Vec::new(),
        dense: vec![hidden],
        ..spec.arch.clone()
    };
    let t = train_on(&dense_spec, data, SEED).unwrap();
    outcome(
        t.test_accuracy < 0.30,
        format!(
            "dense-only [{hidden}] with {params} parameters (conv model {conv_params}): {:.2}% held-out, conv model {:.2}%",
            t.test_accuracy * 100.0,
            conv_accuracy * 100.0
        ),
    )
}

fn c5_accuracy(acc: &[(usize, f64)]) -> Outcome {
    let top = acc[0].1;
    let monotone = acc.windows(2).all(|w| w[1].1 <= w[0].1);
    let list: Vec<String> = acc.iter().map(|(s, a)| format!("sps {s}: {:.2}%", a * 100.0)).collect();
    outcome(
        top >= 0.90 && monotone,
        format!("{} (need >= 90% at sps 10, monotone: {monotone})", list.join(", ")),
    )
}

fn ratio_stats(r: &[f64]) -> (f64, f64) {
    (
        r.iter().sum::<f64>() / r.len() as f64,
        r.iter().cloned().fold(f64::INFINITY, f64::min),
    )
}

fn c7_ratio() -> Outcome {
    let mut spec = ExperimentSpec::default();
    spec.seed = Some(SEED);
    spec.catalog.kind = CatalogKind::Ofdm9;
    spec.arch.conv_filters = vec![25, 25];
    spec.dataset.sample_rate_hz = 5e6;
    spec.dataset.per_class = 800;
    spec.train = TrainConfig {
        learning_rate: LEARNING_RATE,
        epochs: 6,
        ..TrainConfig::default()
    };
    let catalog = spec.validate().unwrap();
    let data = gen_dataset(&spec, SEED).unwrap();
    let t = train_on(&spec, &data, SEED).unwrap();
    drop(data);
    let run = RunSpec {
        seeds: 20,
        ..RunSpec::default()
    };
    let degraded = ChannelSpec {
        snr_db: Some(15.0),
        nlos: true,
        cfo_hz: 0.0,
    };
    let model = Classifier::Model(t.model);
    let clean = simulate(&catalog, &ChannelSpec::noiseless(), &run, &model, SEED).unwrap();
    let nlos = simulate(&catalog, &degraded, &run, &model, SEED).unwrap();
    let stub = simulate(&catalog, &ChannelSpec::noiseless(), &run, &Classifier::Perfect, SEED).unwrap();
    let (mean, min) = ratio_stats(&clean.per_seed_ratio);
    let (nlos_mean, _) = ratio_stats(&nlos.per_seed_ratio);
    let (stub_mean, stub_min) = ratio_stats(&stub.per_seed_ratio);
    outcome(
        (mean - 0.90).abs() <= 0.05 && min >= 0.80 && nlos_mean >= 0.80,
        format!(
            "RFNet ({:.1}% held-out on OFDM-9): mean {mean:.3}, min {min:.3}, degraded mean {nlos_mean:.3} over {} seeds; \
             perfect-classifier stub: mean {stub_mean:.3}, min {stub_min:.3}",
            t.test_accuracy * 100.0,
            run.seeds
        ),
    )
}

fn main() -> ExitCode {
    let quick: [(&str, fn() -> Outcome); 5] = [
        ("1 budget reproduction", c1_budget),
        ("2 streaming convolution", c2_streaming),
        ("3 gradient check", c3_gradients),
        ("8 loopback", c8_loopback),
        ("9 boundary exposure", c9_boundary),
    ];
    let mut results: Vec<(&str, Outcome, f64)> = Vec::new();
    for (name, f) in quick {
        let t = Instant::now();
        results.push((name, f(), t.elapsed().as_secs_f64()));
    }
    let t = Instant::now();
    let sc = single_carrier_runs();
    let sc_time = t.elapsed().as_secs_f64();
    results.push(("4 fixed-point fidelity", sc.fidelity, sc_time));
    results.push(("5 single-carrier accuracy", c5_accuracy(&sc.accuracy), sc_time));
    results.push(("6 dense baseline", sc.dense, sc_time));
    let t = Instant::now();
    results.push(("7 poly/oracle ratio", c7_ratio(), t.elapsed().as_secs_f64()));
    results.sort_by_key(|r| r.0.split(' ').next().unwrap().parse::<u32>().unwrap());

    let mut all = true;
    for (name, o, secs) in &results {
        all &= o.pass;
        println!(
            "criterion {name}: {} ({}) [{secs:.1}s]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
