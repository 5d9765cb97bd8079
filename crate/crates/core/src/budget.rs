//! Real-time budget: sample rate, buffer size, inference latency and
//! switching time.
//!
//! A buffer of `B` samples arrives every `B / S` seconds. The receiver keeps
//! up when the buffer transfer, input staging, classification and output
//! latencies together fit in `2B / S`, since filling one buffer overlaps
//! with processing the previous one.

use crate::rfnet::{conv_cycles, RfnetArch};
use crate::{param_err, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BudgetInputs {
    pub sample_rate_hz: f64,
    pub buffer_samples: u64,
    pub t_buf_s: f64,
    pub t_in_s: f64,
    pub t_cn_s: f64,
    pub t_out_s: f64,
    pub switch_time_s: f64,
}

impl BudgetInputs {
    /// Only the classification latency set; everything else zero.
    pub fn with_inference(sample_rate_hz: f64, buffer_samples: u64, t_cn_s: f64, switch_time_s: f64) -> Self {
        Self {
            sample_rate_hz,
            buffer_samples,
            t_buf_s: 0.0,
            t_in_s: 0.0,
            t_cn_s,
            t_out_s: 0.0,
            switch_time_s,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let times = [self.t_buf_s, self.t_in_s, self.t_cn_s, self.t_out_s, self.switch_time_s];
        if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(param_err!("latencies and switch time must be finite and nonnegative"));
        }
        if !(self.sample_rate_hz >= 0.0) || !self.sample_rate_hz.is_finite() {
            return Err(param_err!("sample rate must be finite and nonnegative"));
        }
        if self.buffer_samples == 0 {
            return Err(param_err!("buffer must hold at least one sample"));
        }
        Ok(())
    }

    pub fn total_latency_s(&self) -> f64 {
        self.t_buf_s + self.t_in_s + self.t_cn_s + self.t_out_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Feasibility {
    pub feasible: bool,
    /// `(T_buf + T_i + T_cn + T_o) * S / (2B)`.
    pub load: f64,
    /// `1 - load`; negative when infeasible.
    pub slack: f64,
}

const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// Loads within a relative `1e-12` of 1 count as on the boundary, which is
/// infeasible; `2B / S` computed in floating point lands there.
pub fn is_realtime_feasible(b: &BudgetInputs) -> Feasibility {
    let load = b.total_latency_s() * b.sample_rate_hz / (2.0 * b.buffer_samples as f64);
    Feasibility {
        feasible: load < 1.0 - BOUNDARY_TOLERANCE,
        load,
        slack: 1.0 - load,
    }
}

/// `S * T_cn / 2`, the value the buffer size must strictly exceed.
///
/// Products that land within a relative `1e-9` of an integer are snapped to
/// it, so decimal inputs like `5e6 * 0.016` behave as written.
pub fn buffer_size_bound(sample_rate_hz: f64, t_cn_s: f64) -> f64 {
    let x = sample_rate_hz * t_cn_s / 2.0;
    let r = libm::round(x);
    if libm::fabs(x - r) <= 1e-9 * r.max(1.0) {
        r
    } else {
        x
    }
}

/// Smallest integer `B` with `B > S * T_cn / 2`.
pub fn min_buffer_size(sample_rate_hz: f64, t_cn_s: f64) -> u64 {
    let bound = buffer_size_bound(sample_rate_hz, t_cn_s);
    if bound < 0.0 {
        return 1;
    }
    (libm::floor(bound) as u64 + 1).max(1)
}

/// `B / S` seconds: the shortest switching time for which one
/// classification stays valid for at least a whole buffer.
pub fn min_switch_time(buffer_samples: f64, sample_rate_hz: f64) -> f64 {
    buffer_samples / sample_rate_hz
}

/// Mean samples per switch demodulated with the previous configuration
/// when switch phase is uniform over the buffer.
pub fn expected_misaligned_samples(buffer_samples: u64) -> f64 {
    buffer_samples as f64 / 2.0
}

/// `T_sw * S / B`.
pub fn inferences_per_switch(switch_time_s: f64, buffer_samples: u64, sample_rate_hz: f64) -> f64 {
    switch_time_s * sample_rate_hz / buffer_samples as f64
}

/// Clock cycles of a fully pipelined implementation: line-buffer fill,
/// first-window load and one cycle per output window for every conv layer,
/// then one output row per cycle for every dense layer.
pub fn pipelined_cycles(arch: &RfnetArch) -> Result<u64> {
    arch.validate()?;
    let mut cycles = 0;
    for i in 0..arch.m() {
        let (rows, cols, _) = arch.map_shape(i);
        cycles += conv_cycles(cols, rows, arch.filter_size);
    }
    cycles += arch.dense_shapes().iter().map(|&(_, n_out)| n_out as u64).sum::<u64>();
    Ok(cycles)
}

/// [`pipelined_cycles`] at `clock_hz`. A lower bound on real latency since
/// memory stalls are not modelled.
pub fn pipelined_cycle_estimate(arch: &RfnetArch, clock_hz: f64) -> Result<f64> {
    if !(clock_hz > 0.0) {
        return Err(param_err!("clock must be positive"));
    }
    Ok(pipelined_cycles(arch)? as f64 / clock_hz)
}
