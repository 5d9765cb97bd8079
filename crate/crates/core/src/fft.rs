//! In-place iterative radix-2 FFT for the power-of-two sizes OFDM uses.

use alloc::vec::Vec;
use core::f64::consts::TAU;

use crate::{param_err, ComplexSample, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `X[k] = sum_n x[n] e^{-j 2 pi k n / N}`
    Forward,
    /// `x[n] = sum_k X[k] e^{+j 2 pi k n / N}` (no `1/N` factor)
    Inverse,
}

/// Precomputed twiddles and bit-reversal table for one transform size.
#[derive(Debug, Clone)]
pub struct Radix2Fft {
    n: usize,
    twiddles: Vec<ComplexSample>,
    reversed: Vec<usize>,
}

impl Radix2Fft {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 || !n.is_power_of_two() {
            return Err(param_err!("FFT size {n} is not a power of two"));
        }
        let bits = n.trailing_zeros();
        let reversed = (0..n)
            .map(|i| {
                if bits == 0 {
                    0
                } else {
                    i.reverse_bits() >> (usize::BITS - bits)
                }
            })
            .collect();
        let twiddles = (0..n / 2)
            .map(|k| {
                let angle = -TAU * k as f64 / n as f64;
                ComplexSample::new(libm::cos(angle), libm::sin(angle))
            })
            .collect();
        Ok(Self { n, twiddles, reversed })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn process(&self, data: &mut [ComplexSample], dir: Direction) {
        assert_eq!(data.len(), self.n, "buffer length does not match FFT size");
        for i in 0..self.n {
            let j = self.reversed[i];
            if j > i {
                data.swap(i, j);
            }
        }
        let mut half = 1;
        while half < self.n {
            let stride = self.n / (2 * half);
            for start in (0..self.n).step_by(2 * half) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if dir == Direction::Inverse {
                        w = w.conj();
                    }
                    let a = data[start + k];
                    let b = data[start + k + half] * w;
                    data[start + k] = a + b;
                    data[start + k + half] = a - b;
                }
            }
            half *= 2;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SimRng;

    fn direct_dft(x: &[ComplexSample], sign: f64) -> Vec<ComplexSample> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter().enumerate().fold(ComplexSample::new(0.0, 0.0), |acc, (i, &v)| {
                    let a = sign * TAU * (k * i) as f64 / n as f64;
                    acc + v * ComplexSample::new(libm::cos(a), libm::sin(a))
                })
            })
            .collect()
    }

    #[test]
    fn matches_direct_dft() {
        let mut rng = SimRng::new(11);
        for &n in &[1usize, 2, 8, 64, 256] {
            let x: Vec<_> = (0..n).map(|_| rng.complex_gaussian(1.0)).collect();
            let fft = Radix2Fft::new(n).unwrap();
            for (dir, sign) in [(Direction::Forward, -1.0), (Direction::Inverse, 1.0)] {
                let mut y = x.clone();
                fft.process(&mut y, dir);
                let want = direct_dft(&x, sign);
                for (a, b) in y.iter().zip(&want) {
                    assert!((a - b).norm() < 1e-9, "n={n}");
                }
            }
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(Radix2Fft::new(96).is_err());
        assert!(Radix2Fft::new(0).is_err());
    }
}
