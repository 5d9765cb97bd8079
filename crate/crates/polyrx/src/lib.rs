//! Desk-scale polymorphic receiver experiments on top of `polyrx-core`:
//! dataset generation, training, quantization, evaluation, end-to-end
//! throughput simulation and budget tables, plus their file formats.

pub mod budget_table;
pub mod config;
pub mod dataset;
pub mod experiment;
pub mod report_io;
pub mod weights;
