//! Core algorithms of a polymorphic receiver simulator.
//!
//! The crate is `no_std` (it only needs `alloc`) so the same code can back a
//! desktop simulation and an embedded target. Everything here is a pure
//! function of its inputs and seeds:
//!
//! * [`waveform`] synthesizes single-carrier and OFDM baseband streams under a
//!   switching transmitter schedule and applies channel impairments.
//! * [`rftensor`] turns a window of I/Q samples into the classifier input.
//! * [`rfnet`] defines, trains, quantizes and runs the convolutional
//!   classifier, including a line/window-buffer streaming convolution model.
//! * [`budget`] relates sampling rate, buffer size, inference latency and
//!   switching time.
//! * [`polyrx`] is the receiver itself: classify each buffer, reconfigure the
//!   demodulator, and score recovered bits against a perfect-knowledge oracle.

#![no_std]

extern crate alloc;

pub mod budget;
mod error;
pub mod fft;
pub mod polyrx;
pub mod rfnet;
pub mod rftensor;
pub mod rng;
pub mod waveform;

pub(crate) use error::{param_err, shape_err};
pub use error::{Error, Result};

/// One complex baseband sample.
pub type ComplexSample = num_complex::Complex64;
