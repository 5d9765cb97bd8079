//! Line-buffer / window-buffer model of a pipelined convolution circuit.
//!
//! Input pixels (one I/Q sample or one activation vector per tick) arrive in
//! raster order. `F` line buffers of width `W` hold the most recent `F` input
//! rows: inserting into column `c` shifts that column up and drops the
//! oldest row. An `F x F x depth` window buffer slides across the line
//! buffers one column per tick, and each position yields one output per
//! filter.
//!
//! Cycle accounting: `F * W` ticks to fill the line buffers, `F` ticks to
//! load the first window, then one tick per output position. Rows after the
//! first `F` stream into the line buffers while the windows of the previous
//! row are evaluated, so they add no cycles.

use alloc::vec::Vec;

use super::layers::{check_conv_shapes, dot_acc, Arith, FeatureMap};
use super::ConvLayer;
use crate::{param_err, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct StreamingConv<T> {
    pub output: FeatureMap<T>,
    /// Total modelled clock cycles.
    pub cycle_count: u64,
    /// Tick at which all `F` line buffers first hold valid rows.
    pub line_buffer_full_at: u64,
    /// Tick at which the first output is ready.
    pub first_output_at: u64,
}

struct LineBuffer<T> {
    rows: usize,
    cols: usize,
    depth: usize,
    data: Vec<T>,
}

impl<T: Copy> LineBuffer<T> {
    fn insert(&mut self, col: usize, pixel: &[T]) {
        let d = self.depth;
        for r in 0..self.rows - 1 {
            let (src, dst) = (((r + 1) * self.cols + col) * d, (r * self.cols + col) * d);
            self.data.copy_within(src..src + d, dst);
        }
        let last = ((self.rows - 1) * self.cols + col) * d;
        self.data[last..last + d].copy_from_slice(pixel);
    }

    fn cell(&self, row: usize, col: usize) -> &[T] {
        let i = (row * self.cols + col) * self.depth;
        &self.data[i..i + self.depth]
    }
}

/// Same result as [`conv2d_valid`](super::conv2d_valid), bit for bit,
/// computed by the buffered streaming schedule.
pub fn streaming_conv<A: Arith>(
    arith: &A,
    input: &FeatureMap<A::Value>,
    layer: &ConvLayer<A::Value>,
) -> Result<StreamingConv<A::Value>> {
    check_conv_shapes(input, layer)?;
    let f = layer.size;
    if f < 2 {
        return Err(param_err!("streaming convolution needs F >= 2"));
    }
    let (w, h, depth) = (input.cols, input.rows, input.depth);
    let (out_rows, out_cols) = (h - f + 1, w - f + 1);
    let span = f * depth;
    let per_filter = f * span;

    let mut lines = LineBuffer {
        rows: f,
        cols: w,
        depth,
        data: alloc::vec![arith.zero(); f * w * depth],
    };
    // Window columns are kept as [dy][dx][d] so each filter row is one
    // contiguous slice, matching the direct convolution's order.
    let mut window = alloc::vec![arith.zero(); f * span];
    let load_column = |window: &mut [A::Value], lines: &LineBuffer<A::Value>, dst: usize, src: usize| {
        for dy in 0..f {
            let at = dy * span + dst * depth;
            window[at..at + depth].copy_from_slice(lines.cell(dy, src));
        }
    };

    let mut cycles = 0u64;
    for r in 0..f {
        for c in 0..w {
            lines.insert(c, &input.data[input.index(r, c, 0)..input.index(r, c, 0) + depth]);
            cycles += 1;
        }
    }
    let line_buffer_full_at = cycles;

    let mut data = Vec::with_capacity(out_rows * out_cols * layer.n_filters);
    let mut first_output_at = 0;
    for oy in 0..out_rows {
        if oy > 0 {
            let r = oy + f - 1;
            for c in 0..w {
                lines.insert(c, &input.data[input.index(r, c, 0)..input.index(r, c, 0) + depth]);
            }
        }
        for dx in 0..f {
            load_column(&mut window, &lines, dx, dx);
        }
        if oy == 0 {
            cycles += f as u64;
        }
        for ox in 0..out_cols {
            if ox > 0 {
                for dy in 0..f {
                    window.copy_within(dy * span + depth..(dy + 1) * span, dy * span);
                }
                load_column(&mut window, &lines, f - 1, ox + f - 1);
            }
            for c in 0..layer.n_filters {
                let filter = &layer.filters[c * per_filter..(c + 1) * per_filter];
                let mut acc = arith.acc_zero();
                for dy in 0..f {
                    acc = dot_acc(
                        arith,
                        acc,
                        &window[dy * span..(dy + 1) * span],
                        &filter[dy * span..(dy + 1) * span],
                    );
                }
                data.push(arith.finish(acc, layer.bias[c]));
            }
            cycles += 1;
            if oy == 0 && ox == 0 {
                first_output_at = cycles;
            }
        }
    }
    Ok(StreamingConv {
        output: FeatureMap::new(out_rows, out_cols, layer.n_filters, data)?,
        cycle_count: cycles,
        line_buffer_full_at,
        first_output_at,
    })
}

/// Modelled cycles for one streaming layer: line fill, first window load,
/// one tick per output position.
pub fn conv_cycles(w: usize, h: usize, f: usize) -> u64 {
    (f * w + f + (w - f + 1) * (h - f + 1)) as u64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rfnet::{conv2d_valid, FixedFormat, FloatArith};
    use crate::rng::SimRng;

    fn case(
        rng: &mut SimRng,
        w: usize,
        h: usize,
        f: usize,
        c: usize,
        depth: usize,
    ) -> (FeatureMap<f64>, ConvLayer<f64>) {
        let input = FeatureMap::new(h, w, depth, (0..w * h * depth).map(|_| rng.gaussian()).collect()).unwrap();
        let layer = ConvLayer {
            n_filters: c,
            size: f,
            depth,
            filters: (0..c * f * f * depth).map(|_| rng.gaussian()).collect(),
            bias: (0..c).map(|_| rng.gaussian()).collect(),
        };
        (input, layer)
    }

    #[test]
    fn figure_example_counts() {
        let mut rng = SimRng::new(1);
        let (input, layer) = case(&mut rng, 4, 4, 3, 1, 2);
        let s = streaming_conv(&FloatArith, &input, &layer).unwrap();
        assert_eq!(s.line_buffer_full_at, 12);
        assert_eq!(s.first_output_at, 16);
        assert_eq!(s.cycle_count, 12 + 3 + 4);
        assert_eq!(s.cycle_count, conv_cycles(4, 4, 3));
    }

    #[test]
    fn one_output_per_tick_after_fill() {
        let mut rng = SimRng::new(2);
        let (input, layer) = case(&mut rng, 9, 7, 3, 2, 2);
        let s = streaming_conv(&FloatArith, &input, &layer).unwrap();
        let fill = s.line_buffer_full_at + 3;
        assert_eq!(s.cycle_count - fill, (7 * 5) as u64);
    }

    #[test]
    fn equals_direct_convolution() {
        let mut rng = SimRng::new(3);
        let fmt = FixedFormat::default();
        for _ in 0..200 {
            let f = 2 + rng.below(2);
            let w = f + rng.below(9 - f);
            let h = f + rng.below(9 - f);
            let c = 1 + rng.below(3);
            let (input, layer) = case(&mut rng, w, h, f, c, 2);
            let direct = conv2d_valid(&FloatArith, &input, &layer).unwrap();
            let streamed = streaming_conv(&FloatArith, &input, &layer).unwrap();
            assert_eq!(direct, streamed.output);

            let qi = input.map(|v| fmt.quantize(v));
            let ql = ConvLayer {
                n_filters: layer.n_filters,
                size: f,
                depth: 2,
                filters: layer.filters.iter().map(|&v| fmt.quantize(v)).collect(),
                bias: layer.bias.iter().map(|&v| fmt.quantize(v)).collect(),
            };
            assert_eq!(
                conv2d_valid(&fmt, &qi, &ql).unwrap(),
                streaming_conv(&fmt, &qi, &ql).unwrap().output
            );
        }
    }

    #[test]
    fn rejects_unit_filter() {
        let mut rng = SimRng::new(4);
        let (input, layer) = case(&mut rng, 4, 4, 1, 1, 2);
        assert!(streaming_conv(&FloatArith, &input, &layer).is_err());
    }
}
