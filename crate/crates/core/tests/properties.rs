use cimxor::analysis::node_voltages;
use cimxor::array::ArrayState;
use cimxor::bnn::{popcount_dot, speedup_at, ConvSpec};
use cimxor::device::cell_current;
use cimxor::sense::{choose_references, comparator, sense};
use cimxor::{BiasVector, CellRecord, CurrentLevels, DeviceParams, SenseConfig};
use proptest::prelude::*;

fn bit_matrix(max_rows: usize, max_cols: usize) -> impl Strategy<Value = Vec<Vec<bool>>> {
    (2..=max_rows, 1..=max_cols)
        .prop_flat_map(|(r, c)| prop::collection::vec(prop::collection::vec(any::<bool>(), c), r))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn column_current_is_sum_of_cells(
        bits in bit_matrix(64, 64),
        pick in any::<(prop::sample::Index, prop::sample::Index)>(),
    ) {
        let p = DeviceParams::default();
        let rows = bits.len();
        let a = pick.0.index(rows);
        let b = (a + 1 + pick.1.index(rows - 1)) % rows;
        let array = ArrayState::from_bits(&bits, &p).unwrap();
        let bias = BiasVector::compute(rows, bits[0].len(), a, b, &p).unwrap();
        let currents = array.column_currents(&bias, &p).unwrap();
        for (col, &got) in currents.iter().enumerate() {
            let mut want = 0.0;
            for (row, row_bits) in bits.iter().enumerate() {
                want += if row == a || row == b {
                    let r = if row_bits[col] { p.r_lrs } else { p.r_hrs };
                    p.v_bl_precharge / (r + p.r_on_access)
                } else if row_bits[col] {
                    p.leak_unaccessed_lrs
                } else {
                    p.leak_unaccessed_hrs
                };
            }
            prop_assert!((got - want).abs() <= 1e-12 * want);
        }
    }

    #[test]
    fn writes_leave_other_cells_alone(
        bits in bit_matrix(8, 8),
        writes in prop::collection::vec((0usize..8, 0usize..8, any::<bool>()), 0..20),
    ) {
        let p = DeviceParams::default();
        let (rows, cols) = (bits.len(), bits[0].len());
        let mut array = ArrayState::from_bits(&bits, &p).unwrap();
        let mut touched = vec![vec![false; cols]; rows];
        for &(r, c, b) in &writes {
            if r < rows && c < cols {
                array.write_bit(r, c, b, &p).unwrap();
                touched[r][c] = true;
                prop_assert_eq!(array.row_bits(r).unwrap()[c], b);
            }
        }
        let after = array.bits();
        for r in 0..rows {
            for c in 0..cols {
                if !touched[r][c] {
                    prop_assert_eq!(after[r][c], bits[r][c]);
                }
            }
        }
    }

    #[test]
    fn compute_is_symmetric(bits in bit_matrix(8, 16), xnor in any::<bool>()) {
        let p = DeviceParams::default();
        let cfg = if xnor { SenseConfig::default_xnor() } else { SenseConfig::default_xor() };
        let mut array = ArrayState::from_bits(&bits, &p).unwrap();
        let ab = array.compute_cycle(0, 1, &cfg, &p).unwrap();
        let ba = array.compute_cycle(1, 0, &cfg, &p).unwrap();
        prop_assert_eq!(&ab, &ba);
        for (c, &out) in ab.iter().enumerate() {
            prop_assert_eq!(out, (bits[0][c] != bits[1][c]) != xnor);
        }
    }

    #[test]
    fn cell_current_falls_with_resistance(r1 in 1.0f64..1e10, factor in 1.0001f64..1e3) {
        let p = DeviceParams::default();
        let lo = cell_current(&CellRecord::with_resistance(true, r1).unwrap(), &p, true).unwrap();
        let hi = cell_current(&CellRecord::with_resistance(true, r1 * factor).unwrap(), &p, true)
            .unwrap();
        prop_assert!(hi < lo);
    }

    #[test]
    fn voltage_domain_keeps_comparator_decision(i_sl in 0.0f64..20e-6, i_ref in 0.0f64..20e-6) {
        let (v_cell, v_ref) = node_voltages(i_sl, i_ref, 0.8, 40e3).unwrap();
        let clamped = |v: f64| v <= 0.0 || v >= 0.8;
        if !clamped(v_cell) && !clamped(v_ref) {
            prop_assert_eq!(v_cell < v_ref, comparator(i_sl, i_ref, 0.0));
        }
    }

    #[test]
    fn popcount_identity(bits in prop::collection::vec(any::<(bool, bool)>(), 11..300)) {
        let dot: i64 = bits.iter().map(|&(a, b)| if a == b { 1 } else { -1 }).sum();
        let matches = bits.iter().filter(|(a, b)| a == b).count() as u32;
        prop_assert_eq!(popcount_dot(matches, bits.len() as u32), dot);
    }

    #[test]
    fn speedup_bounded_and_increasing(
        c in 1u64..1024, n_w in 1u64..1024, n_i in 1u64..64, n_o in 1u64..100_000,
    ) {
        let spec = ConvSpec { c, n_w, n_i, n_o, latency_cycles: 1 };
        let s = speedup_at(&spec, n_o as f64);
        prop_assert!(s < n_o as f64);
        prop_assert!(speedup_at(&spec, (n_o + 1) as f64) > s);
    }

    #[test]
    fn xor_preset_is_interval_indicator(
        r1 in 1e-6f64..8e-6, gap in 1e-9f64..8e-6, o1 in -1e-6f64..1e-6, o2 in -1e-6f64..1e-6,
        i_sl in 0.0f64..20e-6,
    ) {
        let cfg = SenseConfig { offset1: o1, offset2: o2, ..SenseConfig::xor(r1, r1 + gap) };
        let inside = r1 + o1 < i_sl && i_sl <= r1 + gap + o2;
        prop_assert_eq!(sense(i_sl, &cfg), inside);
    }

    #[test]
    fn references_sit_inside_gaps(
        i00 in 0.0f64..1e-6, g1 in 1e-7f64..1e-5, g2 in 1e-7f64..1e-5,
        placement in 0.01f64..0.99, span_frac in 0.0f64..1.5,
    ) {
        let levels = CurrentLevels::new(i00, i00 + g1, i00 + g1 + g2).unwrap();
        let span = span_frac * g1.min(g2);
        if let Ok((r1, r2)) = choose_references(&levels, placement, span) {
            prop_assert!(levels.i00 < r1 && r1 < levels.i01);
            prop_assert!(levels.i01 < r2 && r2 < levels.i11);
        }
    }
}
