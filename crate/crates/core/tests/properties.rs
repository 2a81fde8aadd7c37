use accommodate::coordination::{quantile_bin_codes, BiasCorrection, StyleParams};
use accommodate::corpus::{ExchangeRow, ExchangeTable};
use accommodate::estimators::{
    cmi_cols, joint_entropy, mi_cols, mi_ksg, quantile_band, Col, ContinuousPairSample, Correction, DiscreteSample,
    KsgParams,
};
use accommodate::permtests::{shuffle_within_dialogue, within_group_permutation};
use accommodate::replicate::Execution;
use proptest::prelude::*;

fn column(len: usize, card: u32) -> impl Strategy<Value = Vec<u32>> {
    proptest::collection::vec(0..card, len)
}

fn triple() -> impl Strategy<Value = (Vec<u32>, Vec<u32>, Vec<u32>)> {
    (1usize..120).prop_flat_map(|n| (column(n, 4), column(n, 3), column(n, 5)))
}

proptest! {
    #[test]
    fn mi_symmetric_and_bounded((x, y, _) in triple()) {
        let (cx, cy) = ([Col::new(&x)], [Col::new(&y)]);
        let a = mi_cols(&cx, &cy);
        let b = mi_cols(&cy, &cx);
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!(a >= -1e-12);
        prop_assert!(a <= joint_entropy(&cx).min(joint_entropy(&cy)) + 1e-12);
    }

    #[test]
    fn cmi_chain_rule((x, y, z) in triple()) {
        // I(X:Y,Z) = I(X:Z) + I(X:Y|Z)
        let (cx, cy, cz) = (Col::new(&x), Col::new(&y), Col::new(&z));
        let lhs = mi_cols(&[cx], &[cy, cz]);
        let rhs = mi_cols(&[cx], &[cz]) + cmi_cols(&[cx], &[cy], &[cz]);
        prop_assert!((lhs - rhs).abs() < 1e-10);
        prop_assert!(cmi_cols(&[cx], &[cy], &[cz]) >= -1e-12);
    }

    #[test]
    fn constant_condition_reduces_to_mi((x, y, _) in triple()) {
        let z = vec![0u32; x.len()];
        let (cx, cy, cz) = (Col::new(&x), Col::new(&y), Col::new(&z));
        prop_assert!((cmi_cols(&[cx], &[cy], &[cz]) - mi_cols(&[cx], &[cy])).abs() < 1e-12);
    }

    #[test]
    fn relabeling_invariance((x, y, z) in triple()) {
        let s = DiscreteSample::new()
            .with_symbols("x", &x).unwrap()
            .with_symbols("y", &y).unwrap()
            .with_symbols("z", &z).unwrap();
        let renamed: Vec<String> = y.iter().map(|v| format!("s{}", 7 - v)).collect();
        let t = DiscreteSample::new()
            .with_symbols("x", &x).unwrap()
            .with_symbols("y", &renamed).unwrap()
            .with_symbols("z", &z).unwrap();
        let a = s.cmi(&[0], &[1], &[2], Correction::None).unwrap();
        let b = t.cmi(&[0], &[1], &[2], Correction::None).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        let mmi = s.mmi(&[0], &[1], &[2]).unwrap();
        let mi = s.mi(&[0], &[1], Correction::None).unwrap();
        prop_assert!((mmi - (mi - a)).abs() < 1e-12);
    }

    #[test]
    fn band_is_ordered(values in proptest::collection::vec(-5.0f64..5.0, 2..200), alpha in 0.001f64..0.5) {
        let b = quantile_band(&values, alpha).unwrap();
        prop_assert!(b.lower <= b.point && b.point <= b.upper);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(b.lower >= lo && b.upper <= hi);
    }

    #[test]
    fn quantile_bins_are_monotone(values in proptest::collection::vec(0u32..60, 1..300), bins in 1usize..15) {
        let (codes, card) = quantile_bin_codes(&values, bins);
        prop_assert!(card as usize <= bins && card >= 1);
        for i in 0..values.len() {
            prop_assert!(codes[i] < card);
            for j in 0..values.len() {
                if values[i] < values[j] {
                    prop_assert!(codes[i] <= codes[j]);
                }
                if values[i] == values[j] {
                    prop_assert_eq!(codes[i], codes[j]);
                }
            }
        }
    }

    #[test]
    fn within_group_permutation_is_a_permutation(sizes in proptest::collection::vec(1usize..8, 1..20), seed: u64) {
        let mut groups = Vec::new();
        let mut next = 0;
        for s in sizes {
            groups.push((next..next + s).collect::<Vec<_>>());
            next += s;
        }
        let src = within_group_permutation(&groups, next, seed, 3);
        let mut sorted = src.clone();
        sorted.sort_unstable();
        prop_assert_eq!(sorted, (0..next).collect::<Vec<_>>());
        for g in &groups {
            for &i in g {
                prop_assert!(g.contains(&src[i]));
            }
        }
    }

    #[test]
    fn shuffle_keeps_originator_side(rows in proptest::collection::vec((0u8..4, 0u32..30, 0u32..30, 0u8..2, 0u8..2), 1..80), seed: u64) {
        let mut t = ExchangeTable::new(&["m"]);
        for (d, lo, lr, fo, fr) in &rows {
            t.push(&ExchangeRow {
                dialogue: format!("d{d}"),
                originator: "a".into(),
                respondent: "b".into(),
                len_o: *lo,
                len_r: *lr,
                bits_o: vec![*fo],
                bits_r: vec![*fr],
            });
        }
        let s = shuffle_within_dialogue(&t, seed);
        prop_assert_eq!(&s.len_o, &t.len_o);
        prop_assert_eq!(&s.bits_o, &t.bits_o);
        prop_assert_eq!(&s.dialogue, &t.dialogue);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ksg_invariant_to_affine_maps(seed in 0u64..1000, scale in 0.1f64..50.0, shift in -100.0f64..100.0) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v + 0.3 * rng.random::<f64>()).collect();
        let p = KsgParams { seed, execution: Execution::Serial, ..KsgParams::default() };
        let a = mi_ksg(&ContinuousPairSample::new(x.clone(), y.clone()).unwrap(), &p).unwrap();
        let xs: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
        let b = mi_ksg(&ContinuousPairSample::new(xs, y).unwrap(), &p).unwrap();
        prop_assert!((a - b).abs() < 1e-6, "{} vs {}", a, b);
    }
}

#[test]
fn style_params_serde_round_trip() {
    let p = StyleParams { correction: BiasCorrection::PlugIn, seed: 9, ..StyleParams::default() };
    let back: StyleParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
    assert_eq!(back, p);
}
