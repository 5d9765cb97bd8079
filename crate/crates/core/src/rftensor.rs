//! Classifier input: a `W x H x 2` real tensor whose row `r`, column `c`
//! holds the I (depth 0) and Q (depth 1) parts of sample `offset + r*W + c`.

use alloc::vec::Vec;

use crate::{ComplexSample, Error, Result};

/// Row-major `h` rows of `w` columns, depth 2 innermost.
#[derive(Debug, Clone, PartialEq)]
pub struct RfTensor {
    w: usize,
    h: usize,
    data: Vec<f64>,
}

impl RfTensor {
    pub fn from_data(w: usize, h: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != w * h * 2 {
            return Err(crate::shape_err!("{} values for a {w}x{h}x2 tensor", data.len()));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(crate::param_err!("tensor entries must be finite"));
        }
        Ok(Self { w, h, data })
    }

    pub fn w(&self) -> usize {
        self.w
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn get(&self, r: usize, c: usize, d: usize) -> f64 {
        self.data[(r * self.w + c) * 2 + d]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Builds the tensor from `s[offset .. offset + w*h]`.
pub fn build_tensor(s: &[ComplexSample], w: usize, h: usize, offset: usize) -> Result<RfTensor> {
    if w == 0 || h == 0 {
        return Err(crate::param_err!("tensor dimensions must be positive"));
    }
    let needed = offset + w * h;
    if s.len() < needed {
        return Err(Error::InsufficientData {
            needed,
            available: s.len(),
        });
    }
    let mut data = Vec::with_capacity(w * h * 2);
    for sample in &s[offset..needed] {
        data.push(sample.re);
        data.push(sample.im);
    }
    RfTensor::from_data(w, h, data)
}
