use polyrx_core::budget::{
    inferences_per_switch, is_realtime_feasible, min_buffer_size, min_switch_time, BudgetInputs,
};
use polyrx_core::rfnet::FixedFormat;
use polyrx_core::rftensor::build_tensor;
use polyrx_core::ComplexSample;
use proptest::prelude::*;

proptest! {
    #[test]
    fn min_buffer_monotone(s in 1e3f64..1e8, t in 1e-5f64..1.0, ds in 0.0f64..1e6, dt in 0.0f64..0.1) {
        let b = min_buffer_size(s, t);
        prop_assert!(min_buffer_size(s + ds, t) >= b);
        prop_assert!(min_buffer_size(s, t + dt) >= b);
        prop_assert!(b as f64 > s * t / 2.0 * (1.0 - 1e-9));
    }

    #[test]
    fn min_switch_time_monotone(b in 1.0f64..1e7, s in 1e3f64..1e8, db in 0.0f64..1e5) {
        prop_assert!(min_switch_time(b + db, s) >= min_switch_time(b, s));
    }

    #[test]
    fn feasible_just_below_two_buffers(s_ksps in 1u64..20_000, b in 1u64..1_000_000) {
        let s = s_ksps * 1000;
        let edge = 2.0 * b as f64 / s as f64;
        let below = BudgetInputs::with_inference(s as f64, b, edge * (1.0 - 1e-9), 0.0);
        prop_assert!(is_realtime_feasible(&below).feasible);
        let at = BudgetInputs::with_inference(s as f64, b, edge, 0.0);
        prop_assert!(!is_realtime_feasible(&at).feasible);
    }

    #[test]
    fn inferences_times_buffer_is_switch_span(t_ms in 1u64..10_000, s_ksps in 1u64..10_000, b in 1u64..1_000_000) {
        let (t, s) = (t_ms as f64 / 1e3, (s_ksps * 1000) as f64);
        let n = inferences_per_switch(t, b, s);
        let span = t * s;
        prop_assert!((n * b as f64 - span).abs() <= 1e-12 * span);
    }

    #[test]
    fn quantize_round_trip_within_half_lsb(x in -511.9f64..511.9) {
        let f = FixedFormat::default();
        prop_assert!((f.dequantize(f.quantize(x)) - x).abs() <= f.resolution() / 2.0);
    }

    #[test]
    fn tensor_reads_row_major(w in 1usize..12, h in 1usize..12, offset in 0usize..5) {
        let s: Vec<ComplexSample> = (0..offset + w * h).map(|k| ComplexSample::new(k as f64, 0.5 - k as f64)).collect();
        let t = build_tensor(&s, w, h, offset).unwrap();
        for r in 0..h {
            for c in 0..w {
                let k = (offset + r * w + c) as f64;
                prop_assert_eq!(t.get(r, c, 0), k);
                prop_assert_eq!(t.get(r, c, 1), 0.5 - k);
            }
        }
        prop_assert!(build_tensor(&s, w, h, offset + 1).is_err());
    }
}
