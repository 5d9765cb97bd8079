//! Layer primitives shared by the float, fixed-point and streaming paths.
//!
//! Every reduction goes through [`dot_acc`], which folds products strictly
//! left to right. The direct and streaming convolutions therefore produce
//! bit-identical results in both arithmetic modes.

use alloc::vec::Vec;

use super::{ConvLayer, DenseLayer};
use crate::{shape_err, Result};

/// Scalar arithmetic used by a forward pass.
pub trait Arith {
    type Value: Copy + PartialOrd + core::fmt::Debug;
    type Acc: Copy;

    fn zero(&self) -> Self::Value;
    fn acc_zero(&self) -> Self::Acc;
    fn mac(&self, acc: Self::Acc, a: Self::Value, b: Self::Value) -> Self::Acc;
    /// Adds the bias and converts the accumulator back to a value.
    fn finish(&self, acc: Self::Acc, bias: Self::Value) -> Self::Value;

    fn relu(&self, v: Self::Value) -> Self::Value {
        if v > self.zero() {
            v
        } else {
            self.zero()
        }
    }
}

/// IEEE double arithmetic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FloatArith;

impl Arith for FloatArith {
    type Value = f64;
    type Acc = f64;

    #[inline]
    fn zero(&self) -> f64 {
        0.0
    }

    #[inline]
    fn acc_zero(&self) -> f64 {
        0.0
    }

    #[inline]
    fn mac(&self, acc: f64, a: f64, b: f64) -> f64 {
        acc + a * b
    }

    #[inline]
    fn finish(&self, acc: f64, bias: f64) -> f64 {
        acc + bias
    }
}

#[inline]
pub fn dot_acc<A: Arith>(arith: &A, mut acc: A::Acc, a: &[A::Value], b: &[A::Value]) -> A::Acc {
    for (&x, &y) in a.iter().zip(b) {
        acc = arith.mac(acc, x, y);
    }
    acc
}

/// Row-major `rows x cols x depth` activation map.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap<T> {
    pub rows: usize,
    pub cols: usize,
    pub depth: usize,
    pub data: Vec<T>,
}

impl<T: Copy> FeatureMap<T> {
    pub fn new(rows: usize, cols: usize, depth: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols * depth {
            return Err(shape_err!("{} values for a {rows}x{cols}x{depth} map", data.len()));
        }
        Ok(Self {
            rows,
            cols,
            depth,
            data,
        })
    }

    #[inline]
    pub fn index(&self, r: usize, c: usize, d: usize) -> usize {
        (r * self.cols + c) * self.depth + d
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize, d: usize) -> T {
        self.data[self.index(r, c, d)]
    }

    pub fn map<U>(&self, f: impl Fn(T) -> U) -> FeatureMap<U> {
        FeatureMap {
            rows: self.rows,
            cols: self.cols,
            depth: self.depth,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

pub(crate) fn check_conv_shapes<T>(input: &FeatureMap<T>, layer: &ConvLayer<T>) -> Result<()> {
    let f = layer.size;
    if f == 0 || f > input.rows || f > input.cols {
        return Err(shape_err!(
            "{f}x{f} filter does not fit a {}x{} input",
            input.cols,
            input.rows
        ));
    }
    if layer.depth != input.depth {
        return Err(shape_err!(
            "filter depth {} does not match input depth {}",
            layer.depth,
            input.depth
        ));
    }
    if layer.filters.len() != layer.n_filters * f * f * layer.depth || layer.bias.len() != layer.n_filters {
        return Err(shape_err!("conv layer parameter lengths inconsistent"));
    }
    Ok(())
}

/// Valid (unpadded) cross-correlation; filters span all input depths, so I
/// and Q are combined inside each window.
pub fn conv2d_valid<A: Arith>(
    arith: &A,
    input: &FeatureMap<A::Value>,
    layer: &ConvLayer<A::Value>,
) -> Result<FeatureMap<A::Value>> {
    check_conv_shapes(input, layer)?;
    let f = layer.size;
    let out_rows = input.rows - f + 1;
    let out_cols = input.cols - f + 1;
    let span = f * input.depth;
    let per_filter = f * span;
    let mut data = Vec::with_capacity(out_rows * out_cols * layer.n_filters);
    for oy in 0..out_rows {
        for ox in 0..out_cols {
            for c in 0..layer.n_filters {
                let filter = &layer.filters[c * per_filter..(c + 1) * per_filter];
                let mut acc = arith.acc_zero();
                for dy in 0..f {
                    let start = input.index(oy + dy, ox, 0);
                    acc = dot_acc(
                        arith,
                        acc,
                        &input.data[start..start + span],
                        &filter[dy * span..(dy + 1) * span],
                    );
                }
                data.push(arith.finish(acc, layer.bias[c]));
            }
        }
    }
    FeatureMap::new(out_rows, out_cols, layer.n_filters, data)
}

pub fn relu<A: Arith>(arith: &A, x: &mut [A::Value]) {
    for v in x.iter_mut() {
        *v = arith.relu(*v);
    }
}

/// `W x + b` with `W` stored row-major (`n_out x n_in`).
pub fn dense_forward<A: Arith>(arith: &A, x: &[A::Value], layer: &DenseLayer<A::Value>) -> Result<Vec<A::Value>> {
    if x.len() != layer.n_in {
        return Err(shape_err!("dense layer expects {} inputs, got {}", layer.n_in, x.len()));
    }
    if layer.weights.len() != layer.n_in * layer.n_out || layer.bias.len() != layer.n_out {
        return Err(shape_err!("dense layer parameter lengths inconsistent"));
    }
    Ok(layer
        .weights
        .chunks_exact(layer.n_in)
        .zip(&layer.bias)
        .map(|(row, &b)| arith.finish(dot_acc(arith, arith.acc_zero(), row, x), b))
        .collect())
}

/// Max-subtracted exponential normalization.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;

    fn random_map(rows: usize, cols: usize, depth: usize, rng: &mut SimRng) -> FeatureMap<f64> {
        let data = (0..rows * cols * depth).map(|_| rng.gaussian()).collect();
        FeatureMap::new(rows, cols, depth, data).unwrap()
    }

    fn random_conv(n: usize, f: usize, depth: usize, rng: &mut SimRng) -> ConvLayer<f64> {
        ConvLayer {
            n_filters: n,
            size: f,
            depth,
            filters: (0..n * f * f * depth).map(|_| rng.gaussian()).collect(),
            bias: (0..n).map(|_| rng.gaussian()).collect(),
        }
    }

    #[test]
    fn zero_filter_returns_bias() {
        let mut rng = SimRng::new(1);
        let x = random_map(5, 4, 3, &mut rng);
        let layer = ConvLayer {
            n_filters: 1,
            size: 1,
            depth: 3,
            filters: alloc::vec![0.0; 3],
            bias: alloc::vec![5.0],
        };
        let y = conv2d_valid(&FloatArith, &x, &layer).unwrap();
        assert_eq!((y.rows, y.cols, y.depth), (5, 4, 1));
        assert!(y.data.iter().all(|&v| v == 5.0));
    }

    #[test]
    fn all_ones_window_sums_to_18() {
        let x = FeatureMap::new(6, 6, 2, alloc::vec![1.0; 72]).unwrap();
        let layer = ConvLayer {
            n_filters: 1,
            size: 3,
            depth: 2,
            filters: alloc::vec![1.0; 18],
            bias: alloc::vec![0.0],
        };
        let y = conv2d_valid(&FloatArith, &x, &layer).unwrap();
        assert_eq!((y.rows, y.cols), (4, 4));
        assert!(y.data.iter().all(|&v| v == 18.0));
    }

    #[test]
    fn matches_quadruple_loop_reference() {
        let mut rng = SimRng::new(2);
        let x = random_map(6, 6, 2, &mut rng);
        let layer = random_conv(2, 3, 2, &mut rng);
        let y = conv2d_valid(&FloatArith, &x, &layer).unwrap();
        for oy in 0..4 {
            for ox in 0..4 {
                for c in 0..2 {
                    let mut want = layer.bias[c];
                    for dy in 0..3 {
                        for dx in 0..3 {
                            for d in 0..2 {
                                want += x.get(oy + dy, ox + dx, d) * layer.filters[((c * 3 + dy) * 3 + dx) * 2 + d];
                            }
                        }
                    }
                    assert!((y.get(oy, ox, c) - want).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn conv_shape_errors() {
        let mut rng = SimRng::new(3);
        let x = random_map(2, 2, 2, &mut rng);
        assert!(conv2d_valid(&FloatArith, &x, &random_conv(1, 3, 2, &mut rng)).is_err());
        let x = random_map(4, 4, 1, &mut rng);
        assert!(conv2d_valid(&FloatArith, &x, &random_conv(1, 3, 2, &mut rng)).is_err());
    }

    #[test]
    fn relu_cases() {
        let mut v = alloc::vec![-1.0, 2.5, 0.0];
        relu(&FloatArith, &mut v);
        assert_eq!(v, [0.0, 2.5, 0.0]);
        let once = v.clone();
        relu(&FloatArith, &mut v);
        assert_eq!(v, once);
    }

    #[test]
    fn dense_identity_and_bias() {
        let n = 4;
        let mut w = alloc::vec![0.0; n * n];
        for i in 0..n {
            w[i * n + i] = 1.0;
        }
        let layer = DenseLayer {
            n_in: n,
            n_out: n,
            weights: w,
            bias: alloc::vec![0.0; n],
        };
        let x = [1.0, -2.0, 3.5, 0.25];
        assert_eq!(dense_forward(&FloatArith, &x, &layer).unwrap(), x);
        let layer = DenseLayer {
            bias: alloc::vec![0.5, 1.0, 1.5, 2.0],
            ..layer
        };
        assert_eq!(
            dense_forward(&FloatArith, &[0.0; 4], &layer).unwrap(),
            [0.5, 1.0, 1.5, 2.0]
        );
        assert!(dense_forward(&FloatArith, &[0.0; 3], &layer).is_err());
    }

    #[test]
    fn dense_matches_double_loop() {
        let mut rng = SimRng::new(4);
        let (n_in, n_out) = (7, 5);
        let layer = DenseLayer {
            n_in,
            n_out,
            weights: (0..n_in * n_out).map(|_| rng.gaussian()).collect(),
            bias: (0..n_out).map(|_| rng.gaussian()).collect(),
        };
        let x: Vec<f64> = (0..n_in).map(|_| rng.gaussian()).collect();
        let y = dense_forward(&FloatArith, &x, &layer).unwrap();
        for o in 0..n_out {
            let mut want = layer.bias[o];
            for i in 0..n_in {
                want += layer.weights[o * n_in + i] * x[i];
            }
            assert!((y[o] - want).abs() < 1e-9);
        }
    }

    #[test]
    fn softmax_properties() {
        let p = softmax(&[2.0; 5]);
        assert!(p.iter().all(|&v| (v - 0.2).abs() < 1e-15));
        let mut rng = SimRng::new(5);
        for _ in 0..100 {
            let z: Vec<f64> = (0..8).map(|_| 10.0 * rng.gaussian()).collect();
            let p = softmax(&z);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let shifted: Vec<f64> = z.iter().map(|v| v + 123.0).collect();
            for (a, b) in p.iter().zip(softmax(&shifted)) {
                assert!((a - b).abs() < 1e-9);
            }
        }
        // Large logits stay finite.
        let p = softmax(&[1000.0, 0.0]);
        assert!((p[0] - 1.0).abs() < 1e-12);
    }
}
