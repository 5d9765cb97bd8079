//! Mini-batch Adam training on cross-entropy plus an L2 weight penalty.

use alloc::vec::Vec;

use super::{
    check_input, conv2d_valid, softmax, tensor_map, FeatureMap, FloatArith, FloatParams, RfnetArch, RfnetModel,
};
use crate::rftensor::RfTensor;
use crate::rng::SimRng;
use crate::{param_err, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTensor {
    pub tensor: RfTensor,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub l2_lambda: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-4,
            l2_lambda: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 32,
            epochs: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(param_err!("learning rate must be positive"));
        }
        if !(self.l2_lambda >= 0.0) {
            return Err(param_err!("L2 weight must be nonnegative"));
        }
        if self.batch_size == 0 {
            return Err(param_err!("batch size must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.epsilon > 0.0) {
            return Err(param_err!("invalid Adam hyper-parameters"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: FloatParams,
    /// Mean cross-entropy over the epoch plus the L2 penalty at epoch end.
    pub loss_history: Vec<f64>,
}

/// Activations kept from the forward pass.
struct Trace {
    /// `maps[i]` enters conv layer `i`; `maps[m]` is flattened.
    maps: Vec<FeatureMap<f64>>,
    /// `dense_in[j]` enters dense layer `j`.
    dense_in: Vec<Vec<f64>>,
    probs: Vec<f64>,
}

fn forward_trace(params: &FloatParams, t: &RfTensor) -> Result<Trace> {
    let mut maps = Vec::with_capacity(params.conv.len() + 1);
    maps.push(tensor_map(t));
    for layer in &params.conv {
        let mut z = conv2d_valid(&FloatArith, maps.last().unwrap(), layer)?;
        z.data.iter_mut().for_each(|v| *v = v.max(0.0));
        maps.push(z);
    }
    let mut dense_in = Vec::with_capacity(params.dense.len());
    let mut x = maps.last().unwrap().data.clone();
    let n = params.dense.len();
    for (j, layer) in params.dense.iter().enumerate() {
        let mut y = super::dense_forward(&FloatArith, &x, layer)?;
        if j + 1 < n {
            y.iter_mut().for_each(|v| *v = v.max(0.0));
        }
        dense_in.push(core::mem::replace(&mut x, y));
    }
    let probs = softmax(&x);
    Ok(Trace { maps, dense_in, probs })
}

/// Adds one sample's cross-entropy gradient into `grads`; returns its loss.
fn accumulate(params: &FloatParams, t: &RfTensor, label: usize, grads: &mut FloatParams) -> Result<f64> {
    let trace = forward_trace(params, t)?;
    let loss = -libm::log(trace.probs[label]);

    let mut delta = trace.probs.clone();
    delta[label] -= 1.0;

    for j in (0..params.dense.len()).rev() {
        let layer = &params.dense[j];
        let g = &mut grads.dense[j];
        let x = &trace.dense_in[j];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            g.bias[o] += d;
            let row = &mut g.weights[o * layer.n_in..(o + 1) * layer.n_in];
            for (gw, &xi) in row.iter_mut().zip(x) {
                *gw += d * xi;
            }
        }
        // Raw input needs no gradient when there are no conv layers.
        if j == 0 && params.conv.is_empty() {
            delta.clear();
            break;
        }
        let mut back = alloc::vec![0.0; layer.n_in];
        for (o, &d) in delta.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            let row = &layer.weights[o * layer.n_in..(o + 1) * layer.n_in];
            for (b, &w) in back.iter_mut().zip(row) {
                *b += d * w;
            }
        }
        // ReLU mask of whatever produced this layer's input.
        for (b, &xi) in back.iter_mut().zip(x) {
            if xi <= 0.0 {
                *b = 0.0;
            }
        }
        delta = back;
    }

    for i in (0..params.conv.len()).rev() {
        let layer = &params.conv[i];
        let input = &trace.maps[i];
        let f = layer.size;
        let depth = layer.depth;
        let span = f * depth;
        let per_filter = f * span;
        let (out_rows, out_cols) = (input.rows - f + 1, input.cols - f + 1);
        let need_back = i > 0;
        let mut back = if need_back {
            alloc::vec![0.0; input.data.len()]
        } else {
            Vec::new()
        };
        let g = &mut grads.conv[i];
        for oy in 0..out_rows {
            for ox in 0..out_cols {
                let base = (oy * out_cols + ox) * layer.n_filters;
                for c in 0..layer.n_filters {
                    let d = delta[base + c];
                    if d == 0.0 {
                        continue;
                    }
                    g.bias[c] += d;
                    for dy in 0..f {
                        let at = input.index(oy + dy, ox, 0);
                        let k = c * per_filter + dy * span;
                        let gf = &mut g.filters[k..k + span];
                        for (gw, &xi) in gf.iter_mut().zip(&input.data[at..at + span]) {
                            *gw += d * xi;
                        }
                        if need_back {
                            let wf = &layer.filters[k..k + span];
                            for (b, &w) in back[at..at + span].iter_mut().zip(wf) {
                                *b += d * w;
                            }
                        }
                    }
                }
            }
        }
        if need_back {
            for (b, &xi) in back.iter_mut().zip(&input.data) {
                if xi <= 0.0 {
                    *b = 0.0;
                }
            }
        }
        delta = back;
    }
    Ok(loss)
}

/// Mean cross-entropy over `batch` plus `l2 * ||weights||^2`, and its
/// gradient with respect to every parameter.
pub fn loss_and_gradient(
    arch: &RfnetArch,
    params: &FloatParams,
    batch: &[LabeledTensor],
    l2: f64,
) -> Result<(f64, FloatParams)> {
    if batch.is_empty() {
        return Err(param_err!("empty batch"));
    }
    let mut grads = FloatParams::zeros(arch);
    let mut ce = 0.0;
    for s in batch {
        check_input(arch, &s.tensor)?;
        ce += accumulate(params, &s.tensor, s.label, &mut grads)?;
    }
    let scale = 1.0 / batch.len() as f64;
    for (k, (g, p)) in grads.tensors_mut().into_iter().zip(params.tensors()).enumerate() {
        let weight = k % 2 == 0;
        for (gv, &pv) in g.iter_mut().zip(p) {
            *gv *= scale;
            if weight {
                *gv += 2.0 * l2 * pv;
            }
        }
    }
    Ok((ce * scale + l2 * params.weight_norm_sq(), grads))
}

struct Adam {
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: i32,
}

impl Adam {
    fn new(p: &FloatParams) -> Self {
        let zeros: Vec<Vec<f64>> = p.tensors().iter().map(|t| alloc::vec![0.0; t.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            step: 0,
        }
    }

    fn update(&mut self, params: &mut FloatParams, grads: &FloatParams, cfg: &TrainConfig) {
        self.step += 1;
        let c1 = 1.0 - libm::pow(cfg.beta1, self.step as f64);
        let c2 = 1.0 - libm::pow(cfg.beta2, self.step as f64);
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            for i in 0..p.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= cfg.learning_rate * mh / (libm::sqrt(vh) + cfg.epsilon);
            }
        }
    }
}

/// Trains from He-uniform initialization. Deterministic in `cfg.seed`.
pub fn train(dataset: &[LabeledTensor], arch: &RfnetArch, cfg: &TrainConfig) -> Result<TrainOutcome> {
    train_from(dataset, arch, cfg, FloatParams::he_uniform(arch, cfg.seed))
}

/// Continues training from `init`.
pub fn train_from(
    dataset: &[LabeledTensor],
    arch: &RfnetArch,
    cfg: &TrainConfig,
    init: FloatParams,
) -> Result<TrainOutcome> {
    arch.validate()?;
    cfg.validate()?;
    init.check_arch(arch)?;
    if dataset.is_empty() {
        return Err(param_err!("training set is empty"));
    }
    for s in dataset {
        check_input(arch, &s.tensor)?;
        if s.label >= arch.n_classes {
            return Err(param_err!("label {} outside {} classes", s.label, arch.n_classes));
        }
    }
    let mut params = init;
    let mut adam = Adam::new(&params);
    let mut rng = SimRng::derived(cfg.seed, 0x7472_6169);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let mut grads = FloatParams::zeros(arch);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        rng.shuffle(&mut order);
        let mut ce_sum = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            grads.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
            for &i in batch {
                ce_sum += accumulate(&params, &dataset[i].tensor, dataset[i].label, &mut grads)?;
            }
            let scale = 1.0 / batch.len() as f64;
            for (k, (g, p)) in grads.tensors_mut().into_iter().zip(params.tensors()).enumerate() {
                let weight = k % 2 == 0;
                for (gv, &pv) in g.iter_mut().zip(p) {
                    *gv *= scale;
                    if weight {
                        *gv += 2.0 * cfg.l2_lambda * pv;
                    }
                }
            }
            adam.update(&mut params, &grads, cfg);
        }
        let loss = ce_sum / dataset.len() as f64 + cfg.l2_lambda * params.weight_norm_sq();
        if !loss.is_finite() {
            return Err(Error::TrainingFailure {
                epoch,
                reason: alloc::format!("loss became {loss}"),
            });
        }
        history.push(loss);
    }
    Ok(TrainOutcome {
        params,
        loss_history: history,
    })
}

/// Fraction of `dataset` whose argmax matches the label.
pub fn accuracy(model: &RfnetModel, dataset: &[LabeledTensor]) -> Result<f64> {
    if dataset.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0;
    for s in dataset {
        correct += (model.predict(&s.tensor)?.argmax == s.label) as usize;
    }
    Ok(correct as f64 / dataset.len() as f64)
}
