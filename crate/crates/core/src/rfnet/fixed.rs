//! Signed fixed-point arithmetic for embedded-style inference.

use core::fmt;
use core::str::FromStr;

use super::layers::Arith;
use super::{check_input, forward_logits, tensor_map, ClassPrediction, FloatParams, Params, RfnetArch};
use crate::rftensor::RfTensor;
use crate::{param_err, Error, Result};

/// `total_bits`-wide two's complement with `int_bits` integer bits (sign
/// included); defaults to 32 bits with 10 integer bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FixedFormat {
    pub total_bits: u32,
    pub int_bits: u32,
}

impl Default for FixedFormat {
    fn default() -> Self {
        Self {
            total_bits: 32,
            int_bits: 10,
        }
    }
}

pub type QuantizedParams = Params<i32>;

impl FixedFormat {
    pub fn new(total_bits: u32, int_bits: u32) -> Result<Self> {
        let f = Self { total_bits, int_bits };
        f.validate()?;
        Ok(f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=32).contains(&self.total_bits) || self.int_bits == 0 || self.int_bits >= self.total_bits {
            return Err(param_err!(
                "unsupported fixed-point format ({}, {})",
                self.total_bits,
                self.int_bits
            ));
        }
        Ok(())
    }

    pub fn frac_bits(&self) -> u32 {
        self.total_bits - self.int_bits
    }

    pub fn raw_max(&self) -> i64 {
        (1i64 << (self.total_bits - 1)) - 1
    }

    pub fn raw_min(&self) -> i64 {
        -(1i64 << (self.total_bits - 1))
    }

    pub fn resolution(&self) -> f64 {
        libm::ldexp(1.0, -(self.frac_bits() as i32))
    }

    pub fn max_value(&self) -> f64 {
        self.raw_max() as f64 * self.resolution()
    }

    pub fn min_value(&self) -> f64 {
        self.raw_min() as f64 * self.resolution()
    }

    /// `round(clamp(x) * 2^frac)`, halves away from zero; NaN maps to 0.
    pub fn quantize(&self, x: f64) -> i32 {
        if x.is_nan() {
            return 0;
        }
        let scaled = libm::round(libm::ldexp(x, self.frac_bits() as i32));
        scaled.clamp(self.raw_min() as f64, self.raw_max() as f64) as i32
    }

    pub fn dequantize(&self, raw: i32) -> f64 {
        raw as f64 * self.resolution()
    }

    fn saturate(&self, v: i128) -> i32 {
        v.clamp(self.raw_min() as i128, self.raw_max() as i128) as i32
    }
}

impl fmt::Display for FixedFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "fixed({},{})", self.total_bits, self.int_bits)
    }
}

impl FromStr for FixedFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .trim()
            .strip_prefix("fixed(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(|| param_err!("expected fixed(total,int), got {s:?}"))?;
        let (a, b) = inner
            .split_once(',')
            .ok_or_else(|| param_err!("expected fixed(total,int), got {s:?}"))?;
        let total = a.trim().parse().map_err(|_| param_err!("bad bit count in {s:?}"))?;
        let int = b.trim().parse().map_err(|_| param_err!("bad bit count in {s:?}"))?;
        Self::new(total, int)
    }
}

/// Products accumulate at `2 * frac` fractional bits in a saturating 64-bit
/// register; one rounding rescale per output element.
impl Arith for FixedFormat {
    type Value = i32;
    type Acc = i64;

    #[inline]
    fn zero(&self) -> i32 {
        0
    }

    #[inline]
    fn acc_zero(&self) -> i64 {
        0
    }

    #[inline]
    fn mac(&self, acc: i64, a: i32, b: i32) -> i64 {
        acc.saturating_add(a as i64 * b as i64)
    }

    fn finish(&self, acc: i64, bias: i32) -> i32 {
        let frac = self.frac_bits();
        let total = acc as i128 + ((bias as i128) << frac);
        let half = 1i128 << (frac - 1);
        let rescaled = if total >= 0 {
            (total + half) >> frac
        } else {
            -((-total + half) >> frac)
        };
        self.saturate(rescaled)
    }
}

pub fn quantize(p: &FloatParams, fmt: &FixedFormat) -> QuantizedParams {
    p.map(|v| fmt.quantize(v))
}

pub fn dequantize_params(p: &QuantizedParams, fmt: &FixedFormat) -> FloatParams {
    p.map(|v| fmt.dequantize(v))
}

/// Quantizes the input, runs every layer in fixed point and applies softmax
/// to the dequantized logits.
pub fn forward_fixed(
    arch: &RfnetArch,
    params: &QuantizedParams,
    t: &RfTensor,
    fmt: &FixedFormat,
) -> Result<ClassPrediction> {
    check_input(arch, t)?;
    params.check_arch(arch)?;
    let input = tensor_map(t).map(|v| fmt.quantize(v));
    let logits = forward_logits(fmt, params, input)?;
    let logits: alloc::vec::Vec<f64> = logits.into_iter().map(|v| fmt.dequantize(v)).collect();
    Ok(ClassPrediction::from_logits(&logits))
}
