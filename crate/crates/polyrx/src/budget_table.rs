//! The `budget` command's numbers, as a table or JSON.

use anyhow::{ensure, Result};
use polyrx_core::budget::{
    buffer_size_bound, expected_misaligned_samples, inferences_per_switch, is_realtime_feasible, min_buffer_size,
    min_switch_time, BudgetInputs,
};
use serde::Serialize;

/// Budget inputs; a missing buffer size or switch time takes its minimum.
#[derive(Debug, Clone, PartialEq)]
pub struct BudgetQuery {
    pub sample_rate_hz: f64,
    pub buffer_samples: Option<u64>,
    pub t_buf_s: f64,
    pub t_in_s: f64,
    pub t_cn_s: f64,
    pub t_out_s: f64,
    pub switch_time_s: Option<f64>,
}

impl Default for BudgetQuery {
    fn default() -> Self {
        Self {
            sample_rate_hz: 5e6,
            buffer_samples: None,
            t_buf_s: 0.0,
            t_in_s: 0.0,
            t_cn_s: 0.016,
            t_out_s: 0.0,
            switch_time_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BudgetReport {
    pub sample_rate_hz: f64,
    pub buffer_samples: u64,
    pub total_latency_s: f64,
    pub switch_time_s: f64,
    pub load: f64,
    pub slack_s: f64,
    pub feasible: bool,
    pub buffer_bound_samples: f64,
    pub min_buffer_samples: u64,
    pub min_switch_time_s: f64,
    pub inferences_per_switch: f64,
    pub expected_misaligned_samples: f64,
}

impl BudgetReport {
    pub fn new(q: &BudgetQuery) -> Result<Self> {
        ensure!(q.sample_rate_hz > 0.0, "sample rate must be positive");
        let s = q.sample_rate_hz;
        let latency = q.t_buf_s + q.t_in_s + q.t_cn_s + q.t_out_s;
        let b = q.buffer_samples.unwrap_or_else(|| min_buffer_size(s, latency));
        let inputs = BudgetInputs {
            sample_rate_hz: s,
            buffer_samples: b,
            t_buf_s: q.t_buf_s,
            t_in_s: q.t_in_s,
            t_cn_s: q.t_cn_s,
            t_out_s: q.t_out_s,
            switch_time_s: q.switch_time_s.unwrap_or_else(|| min_switch_time(b as f64, s)),
        };
        inputs.validate()?;
        let f = is_realtime_feasible(&inputs);
        let total = inputs.total_latency_s();
        Ok(Self {
            sample_rate_hz: s,
            buffer_samples: b,
            total_latency_s: total,
            switch_time_s: inputs.switch_time_s,
            load: f.load,
            slack_s: f.slack,
            feasible: f.feasible,
            buffer_bound_samples: buffer_size_bound(s, total),
            min_buffer_samples: min_buffer_size(s, total),
            min_switch_time_s: min_switch_time(b as f64, s),
            inferences_per_switch: inferences_per_switch(inputs.switch_time_s, b, s),
            expected_misaligned_samples: expected_misaligned_samples(b),
        })
    }

    pub fn table(&self) -> String {
        let rows: [(&str, String); 12] = [
            ("sample_rate_hz", self.sample_rate_hz.to_string()),
            ("buffer_samples", self.buffer_samples.to_string()),
            ("total_latency_s", self.total_latency_s.to_string()),
            ("switch_time_s", self.switch_time_s.to_string()),
            ("load", self.load.to_string()),
            ("slack_s", self.slack_s.to_string()),
            ("feasible", self.feasible.to_string()),
            ("buffer_bound_samples", self.buffer_bound_samples.to_string()),
            ("min_buffer_samples", self.min_buffer_samples.to_string()),
            ("min_switch_time_s", self.min_switch_time_s.to_string()),
            ("inferences_per_switch", self.inferences_per_switch.to_string()),
            (
                "expected_misaligned_samples",
                self.expected_misaligned_samples.to_string(),
            ),
        ];
        let mut s = String::new();
        for (k, v) in rows {
            s += &format!("{k:<28} {v}\n");
        }
        s
    }

    pub fn json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}
