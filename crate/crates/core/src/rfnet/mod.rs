//! RFNet: `M` valid convolutions with ReLU, `K` hidden dense layers with
//! ReLU, and an affine softmax output layer.

mod fixed;
mod layers;
mod stream;
mod train;

use alloc::vec::Vec;

pub use fixed::{dequantize_params, forward_fixed, quantize, FixedFormat, QuantizedParams};
pub use layers::{conv2d_valid, dense_forward, dot_acc, relu, softmax, Arith, FeatureMap, FloatArith};
pub use stream::{conv_cycles, streaming_conv, StreamingConv};
pub use train::{accuracy, loss_and_gradient, train, train_from, LabeledTensor, TrainConfig, TrainOutcome};

use crate::rftensor::RfTensor;
use crate::rng::SimRng;
use crate::{param_err, shape_err, Result};

/// Network shape. `conv_filters.len()` is the number of conv layers `M`;
/// `dense.len()` is the number of hidden dense layers `K`. The output layer
/// is always present.
///
/// `M = 0` describes a dense-only baseline network.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RfnetArch {
    pub conv_filters: Vec<usize>,
    pub filter_size: usize,
    pub dense: Vec<usize>,
    pub input_w: usize,
    pub input_h: usize,
    pub n_classes: usize,
}

impl RfnetArch {
    /// `M = 1, C = 25, F = 3, K = 0` on a `w x h` input.
    pub fn default_for(input_w: usize, input_h: usize, n_classes: usize) -> Self {
        Self {
            conv_filters: alloc::vec![25],
            filter_size: 3,
            dense: Vec::new(),
            input_w,
            input_h,
            n_classes,
        }
    }

    pub fn m(&self) -> usize {
        self.conv_filters.len()
    }

    pub fn k(&self) -> usize {
        self.dense.len()
    }

    pub fn input_len(&self) -> usize {
        self.input_w * self.input_h
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_classes < 2 {
            return Err(param_err!("need at least two classes"));
        }
        if self.input_w == 0 || self.input_h == 0 {
            return Err(param_err!("input dimensions must be positive"));
        }
        if self.conv_filters.iter().chain(&self.dense).any(|&c| c == 0) {
            return Err(param_err!("layer widths must be positive"));
        }
        if self.m() > 0 {
            if self.filter_size == 0 {
                return Err(param_err!("filter size must be positive"));
            }
            let shrink = self.m() * (self.filter_size - 1);
            if shrink >= self.input_w || shrink >= self.input_h {
                return Err(param_err!(
                    "{} valid {}x{} convolutions collapse a {}x{} input",
                    self.m(),
                    self.filter_size,
                    self.filter_size,
                    self.input_w,
                    self.input_h
                ));
            }
        }
        Ok(())
    }

    /// `(rows, cols, depth)` entering conv layer `i` (`i == m` is the map
    /// that gets flattened).
    pub fn map_shape(&self, i: usize) -> (usize, usize, usize) {
        let shrink = i * self.filter_size.saturating_sub(1);
        let depth = if i == 0 { 2 } else { self.conv_filters[i - 1] };
        (self.input_h - shrink, self.input_w - shrink, depth)
    }

    pub fn flatten_len(&self) -> usize {
        let (r, c, d) = self.map_shape(self.m());
        r * c * d
    }

    /// `(n_in, n_out)` of every dense layer including the output layer.
    pub fn dense_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.k() + 1);
        let mut n_in = self.flatten_len();
        for &n in self.dense.iter().chain(core::iter::once(&self.n_classes)) {
            shapes.push((n_in, n));
            n_in = n;
        }
        shapes
    }

    pub fn param_count(&self) -> usize {
        let f = self.filter_size;
        let conv: usize = (0..self.m())
            .map(|i| {
                let depth = self.map_shape(i).2;
                self.conv_filters[i] * (f * f * depth + 1)
            })
            .sum();
        let dense: usize = self.dense_shapes().iter().map(|(i, o)| o * (i + 1)).sum();
        conv + dense
    }
}

/// Parameter count of a 1-D convolutional baseline: a `1 x input_len x 2`
/// input, `1 x filter_len` filters, then dense layers and the output layer.
pub fn linear_baseline_param_count(
    input_len: usize,
    conv_filters: &[usize],
    filter_len: usize,
    dense: &[usize],
    n_classes: usize,
) -> usize {
    let mut depth = 2;
    let mut len = input_len;
    let mut total = 0;
    for &c in conv_filters {
        total += c * (filter_len * depth + 1);
        depth = c;
        len -= filter_len - 1;
    }
    let mut n_in = len * depth;
    for &n in dense.iter().chain(core::iter::once(&n_classes)) {
        total += n * (n_in + 1);
        n_in = n;
    }
    total
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer<T> {
    pub n_filters: usize,
    pub size: usize,
    pub depth: usize,
    /// `[filter][dy][dx][depth]`
    pub filters: Vec<T>,
    pub bias: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer<T> {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub weights: Vec<T>,
    pub bias: Vec<T>,
}

/// Parameters in declaration order: conv layers, then dense layers with the
/// output layer last.
#[derive(Debug, Clone, PartialEq)]
pub struct Params<T> {
    pub conv: Vec<ConvLayer<T>>,
    pub dense: Vec<DenseLayer<T>>,
}

pub type FloatParams = Params<f64>;

impl<T: Copy> Params<T> {
    pub fn filled(arch: &RfnetArch, value: T) -> Self {
        let f = arch.filter_size;
        let conv = (0..arch.m())
            .map(|i| {
                let depth = arch.map_shape(i).2;
                let n = arch.conv_filters[i];
                ConvLayer {
                    n_filters: n,
                    size: f,
                    depth,
                    filters: alloc::vec![value; n * f * f * depth],
                    bias: alloc::vec![value; n],
                }
            })
            .collect();
        let dense = arch
            .dense_shapes()
            .into_iter()
            .map(|(n_in, n_out)| DenseLayer {
                n_in,
                n_out,
                weights: alloc::vec![value; n_in * n_out],
                bias: alloc::vec![value; n_out],
            })
            .collect();
        Self { conv, dense }
    }

    /// Flat parameter arrays in file order: for each layer its weights then
    /// its bias. Even positions are weights, odd positions are biases.
    pub fn tensors(&self) -> Vec<&[T]> {
        let mut out = Vec::with_capacity(2 * (self.conv.len() + self.dense.len()));
        for l in &self.conv {
            out.push(&l.filters[..]);
            out.push(&l.bias[..]);
        }
        for l in &self.dense {
            out.push(&l.weights[..]);
            out.push(&l.bias[..]);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [T]> {
        let mut out = Vec::with_capacity(2 * (self.conv.len() + self.dense.len()));
        for l in &mut self.conv {
            out.push(&mut l.filters[..]);
            out.push(&mut l.bias[..]);
        }
        for l in &mut self.dense {
            out.push(&mut l.weights[..]);
            out.push(&mut l.bias[..]);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Params<U> {
        Params {
            conv: self
                .conv
                .iter()
                .map(|l| ConvLayer {
                    n_filters: l.n_filters,
                    size: l.size,
                    depth: l.depth,
                    filters: l.filters.iter().map(|&v| f(v)).collect(),
                    bias: l.bias.iter().map(|&v| f(v)).collect(),
                })
                .collect(),
            dense: self
                .dense
                .iter()
                .map(|l| DenseLayer {
                    n_in: l.n_in,
                    n_out: l.n_out,
                    weights: l.weights.iter().map(|&v| f(v)).collect(),
                    bias: l.bias.iter().map(|&v| f(v)).collect(),
                })
                .collect(),
        }
    }

    /// Rebuilds parameters for `arch` from flat arrays in file order.
    pub fn from_tensors(arch: &RfnetArch, tensors: &[Vec<T>], fill: T) -> Result<Self> {
        let mut p = Self::filled(arch, fill);
        let slots = p.tensors_mut();
        if slots.len() != tensors.len() {
            return Err(shape_err!(
                "expected {} parameter arrays, got {}",
                slots.len(),
                tensors.len()
            ));
        }
        for (i, (slot, src)) in slots.into_iter().zip(tensors).enumerate() {
            if slot.len() != src.len() {
                return Err(shape_err!(
                    "parameter array {i}: expected {} values, got {}",
                    slot.len(),
                    src.len()
                ));
            }
            slot.copy_from_slice(src);
        }
        Ok(p)
    }

    pub fn check_arch(&self, arch: &RfnetArch) -> Result<()> {
        let expected = Params::filled(arch, 0u8);
        let ok = self.conv.len() == expected.conv.len()
            && self.dense.len() == expected.dense.len()
            && self
                .tensors()
                .iter()
                .zip(expected.tensors())
                .all(|(a, b)| a.len() == b.len());
        if ok {
            Ok(())
        } else {
            Err(shape_err!("parameters do not match the architecture"))
        }
    }
}

impl FloatParams {
    pub fn zeros(arch: &RfnetArch) -> Self {
        Self::filled(arch, 0.0)
    }

    /// He-uniform weights (`+-sqrt(6 / fan_in)`), zero biases.
    pub fn he_uniform(arch: &RfnetArch, seed: u64) -> Self {
        let mut p = Self::zeros(arch);
        let mut rng = SimRng::derived(seed, 0x696e_6974);
        for l in &mut p.conv {
            let limit = libm::sqrt(6.0 / (l.size * l.size * l.depth) as f64);
            l.filters.iter_mut().for_each(|w| *w = rng.uniform_range(-limit, limit));
        }
        for l in &mut p.dense {
            let limit = libm::sqrt(6.0 / l.n_in as f64);
            l.weights.iter_mut().for_each(|w| *w = rng.uniform_range(-limit, limit));
        }
        p
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_norm_sq(&self) -> f64 {
        self.tensors()
            .iter()
            .step_by(2)
            .flat_map(|t| t.iter())
            .map(|w| w * w)
            .sum()
    }
}

/// Class probabilities and the most likely class (lowest index on ties).
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPrediction {
    pub probs: Vec<f64>,
    pub argmax: usize,
}

impl ClassPrediction {
    pub fn from_logits(logits: &[f64]) -> Self {
        let probs = softmax(logits);
        let argmax = argmax(&probs);
        Self { probs, argmax }
    }
}

pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub(crate) fn tensor_map(t: &RfTensor) -> FeatureMap<f64> {
    FeatureMap {
        rows: t.h(),
        cols: t.w(),
        depth: 2,
        data: t.as_slice().to_vec(),
    }
}

pub(crate) fn check_input(arch: &RfnetArch, t: &RfTensor) -> Result<()> {
    if t.w() != arch.input_w || t.h() != arch.input_h {
        return Err(shape_err!(
            "tensor is {}x{}, model expects {}x{}",
            t.w(),
            t.h(),
            arch.input_w,
            arch.input_h
        ));
    }
    Ok(())
}

/// conv+ReLU layers, flatten, hidden dense+ReLU layers, output layer.
pub fn forward_logits<A: Arith>(
    arith: &A,
    params: &Params<A::Value>,
    input: FeatureMap<A::Value>,
) -> Result<Vec<A::Value>> {
    let mut map = input;
    for layer in &params.conv {
        map = conv2d_valid(arith, &map, layer)?;
        relu(arith, &mut map.data);
    }
    let mut x = map.data;
    let n = params.dense.len();
    for (i, layer) in params.dense.iter().enumerate() {
        x = dense_forward(arith, &x, layer)?;
        if i + 1 < n {
            relu(arith, &mut x);
        }
    }
    Ok(x)
}

pub fn forward_float(arch: &RfnetArch, params: &FloatParams, t: &RfTensor) -> Result<ClassPrediction> {
    check_input(arch, t)?;
    params.check_arch(arch)?;
    let logits = forward_logits(&FloatArith, params, tensor_map(t))?;
    Ok(ClassPrediction::from_logits(&logits))
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelParams {
    Float(FloatParams),
    Fixed {
        params: QuantizedParams,
        format: FixedFormat,
    },
}

/// Architecture plus either float or quantized parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RfnetModel {
    pub arch: RfnetArch,
    pub params: ModelParams,
}

impl RfnetModel {
    pub fn new(arch: RfnetArch, params: ModelParams) -> Result<Self> {
        arch.validate()?;
        match &params {
            ModelParams::Float(p) => p.check_arch(&arch)?,
            ModelParams::Fixed { params, format } => {
                format.validate()?;
                params.check_arch(&arch)?
            }
        }
        Ok(Self { arch, params })
    }

    pub fn float(arch: RfnetArch, params: FloatParams) -> Result<Self> {
        Self::new(arch, ModelParams::Float(params))
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self.params, ModelParams::Fixed { .. })
    }

    pub fn predict(&self, t: &RfTensor) -> Result<ClassPrediction> {
        match &self.params {
            ModelParams::Float(p) => forward_float(&self.arch, p, t),
            ModelParams::Fixed { params, format } => forward_fixed(&self.arch, params, t, format),
        }
    }

    /// Fixed-point copy; quantizing an already fixed model with the same
    /// format returns it unchanged.
    pub fn quantized(&self, format: FixedFormat) -> Result<Self> {
        format.validate()?;
        let params = match &self.params {
            ModelParams::Float(p) => quantize(p, &format),
            ModelParams::Fixed { params, format: old } if *old == format => params.clone(),
            ModelParams::Fixed { params, format: old } => quantize(&dequantize_params(params, old), &format),
        };
        Self::new(self.arch.clone(), ModelParams::Fixed { params, format })
    }

    pub fn float_params(&self) -> FloatParams {
        match &self.params {
            ModelParams::Float(p) => p.clone(),
            ModelParams::Fixed { params, format } => dequantize_params(params, format),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rftensor::build_tensor;
    use crate::ComplexSample;

    fn tiny_arch() -> RfnetArch {
        RfnetArch {
            conv_filters: alloc::vec![3, 2],
            filter_size: 2,
            dense: alloc::vec![4],
            input_w: 5,
            input_h: 4,
            n_classes: 3,
        }
    }

    fn random_tensor(w: usize, h: usize, seed: u64) -> RfTensor {
        let mut rng = SimRng::new(seed);
        let s: Vec<ComplexSample> = (0..w * h).map(|_| rng.complex_gaussian(1.0)).collect();
        build_tensor(&s, w, h, 0).unwrap()
    }

    #[test]
    fn arch_validation() {
        assert!(tiny_arch().validate().is_ok());
        let mut a = tiny_arch();
        a.conv_filters = alloc::vec![1, 1, 1, 1];
        assert!(a.validate().is_err());
        let mut a = tiny_arch();
        a.n_classes = 1;
        assert!(a.validate().is_err());
    }

    #[test]
    fn param_count_matches_storage() {
        let a = tiny_arch();
        assert_eq!(a.param_count(), FloatParams::zeros(&a).len());
        let d = RfnetArch::default_for(20, 20, 18);
        assert_eq!(d.param_count(), 25 * 19 + 18 * (18 * 18 * 25 + 1));
        assert_eq!(d.param_count(), FloatParams::zeros(&d).len());
    }

    #[test]
    fn rfnet_is_an_order_of_magnitude_smaller_than_linear() {
        // C=25,25 on 10x10 against the 1x128 linear baseline (C=256,80,
        // one 256-neuron dense layer), both 18 classes.
        let rfnet = RfnetArch {
            conv_filters: alloc::vec![25, 25],
            filter_size: 3,
            dense: Vec::new(),
            input_w: 10,
            input_h: 10,
            n_classes: 18,
        };
        let linear = linear_baseline_param_count(128, &[256, 80], 3, &[256], 18);
        assert!(linear > 1_000_000 && linear < 4_000_000, "{linear}");
        assert!(linear >= 10 * rfnet.param_count());
        let linear400 = linear_baseline_param_count(400, &[256, 80], 3, &[256], 18);
        let rfnet20 = RfnetArch {
            input_w: 20,
            input_h: 20,
            ..rfnet
        };
        assert!(linear400 >= 10 * rfnet20.param_count());
    }

    #[test]
    fn zero_model_is_uniform() {
        let a = tiny_arch();
        let p = forward_float(&a, &FloatParams::zeros(&a), &random_tensor(5, 4, 1)).unwrap();
        for v in &p.probs {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
        assert_eq!(p.argmax, 0);
    }

    #[test]
    fn output_bias_selects_class() {
        let a = tiny_arch();
        let mut p = FloatParams::zeros(&a);
        p.dense.last_mut().unwrap().bias[2] = 1.0;
        assert_eq!(forward_float(&a, &p, &random_tensor(5, 4, 2)).unwrap().argmax, 2);
    }

    #[test]
    fn composition_reference() {
        let a = tiny_arch();
        let p = FloatParams::he_uniform(&a, 3);
        let t = random_tensor(5, 4, 4);
        let got = forward_float(&a, &p, &t).unwrap();
        // Layer-by-layer composition written out with explicit loops.
        let mut map: Vec<f64> = t.as_slice().to_vec();
        let (mut rows, mut cols, mut depth) = (4usize, 5usize, 2usize);
        for l in &p.conv {
            let (orows, ocols) = (rows - 1, cols - 1);
            let mut out = alloc::vec![0.0; orows * ocols * l.n_filters];
            for y in 0..orows {
                for x in 0..ocols {
                    for c in 0..l.n_filters {
                        let mut s = l.bias[c];
                        for dy in 0..2 {
                            for dx in 0..2 {
                                for d in 0..depth {
                                    s += map[((y + dy) * cols + x + dx) * depth + d]
                                        * l.filters[((c * 2 + dy) * 2 + dx) * depth + d];
                                }
                            }
                        }
                        out[(y * ocols + x) * l.n_filters + c] = s.max(0.0);
                    }
                }
            }
            map = out;
            rows = orows;
            cols = ocols;
            depth = l.n_filters;
        }
        for (i, l) in p.dense.iter().enumerate() {
            let mut out = alloc::vec![0.0; l.n_out];
            for o in 0..l.n_out {
                let mut s = l.bias[o];
                for j in 0..l.n_in {
                    s += l.weights[o * l.n_in + j] * map[j];
                }
                out[o] = if i + 1 < p.dense.len() { s.max(0.0) } else { s };
            }
            map = out;
        }
        let want = softmax(&map);
        for (a, b) in got.probs.iter().zip(&want) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    #[test]
    fn wrong_input_shape() {
        let a = tiny_arch();
        assert!(forward_float(&a, &FloatParams::zeros(&a), &random_tensor(4, 5, 1)).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn tensors_round_trip() {
        let a = tiny_arch();
        let p = FloatParams::he_uniform(&a, 9);
        let flat: Vec<Vec<f64>> = p.tensors().iter().map(|t| t.to_vec()).collect();
        assert_eq!(Params::from_tensors(&a, &flat, 0.0).unwrap(), p);
        assert!(Params::from_tensors(&a, &flat[1..], 0.0).is_err());
    }

    #[test]
    fn dense_only_baseline() {
        let a = RfnetArch {
            conv_filters: Vec::new(),
            filter_size: 0,
            dense: alloc::vec![179],
            input_w: 20,
            input_h: 20,
            n_classes: 18,
        };
        a.validate().unwrap();
        assert_eq!(a.flatten_len(), 800);
        let p = FloatParams::he_uniform(&a, 1);
        let pred = forward_float(&a, &p, &random_tensor(20, 20, 1)).unwrap();
        assert_eq!(pred.probs.len(), 18);
    }
}
