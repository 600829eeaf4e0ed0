use hdnids_core::dataset::synth_gaussian;
use hdnids_core::faults::{flip_single_bit, inject_counted, robustness_curve, FaultSpec};
use hdnids_core::quantize::{
    hamming_similarity, quantize_model, quantize_vec, quantized_similarity, Bitwidth, QuantizedModel, QueryCodes,
};
use hdnids_core::regen::{fit, EncoderConfig, FitConfig, RegenSchedule};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn codes_stay_in_range(v in prop::collection::vec(-50.0f64..50.0, 1..64), bi in 0usize..6) {
        let b = Bitwidth::ALL[bi];
        let q = quantize_vec(&v, b).unwrap();
        prop_assert!(q.codes.iter().all(|&c| b.contains(c)));
        prop_assert!(q.scale > 0.0 && q.scale.is_finite());
    }

    #[test]
    fn error_is_at_most_half_a_step(v in prop::collection::vec(-5.0f64..5.0, 1..64), bi in 0usize..5) {
        let b = Bitwidth::ALL[bi];
        let q = quantize_vec(&v, b).unwrap();
        for (orig, deq) in v.iter().zip(q.dequantize()) {
            prop_assert!((orig - deq).abs() <= q.scale / 2.0 + 1e-12);
        }
    }

    #[test]
    fn similarity_ignores_scale(
        (a, b) in (1usize..32).prop_flat_map(|d| (prop::collection::vec(-1.0f64..1.0, d), prop::collection::vec(-1.0f64..1.0, d))),
        alpha in 0.01f64..100.0,
        bi in 0usize..6,
    ) {
        let bw = Bitwidth::ALL[bi];
        let qa = quantize_vec(&a, bw).unwrap();
        let qb = quantize_vec(&b, bw).unwrap();
        let scaled: Vec<f64> = a.iter().map(|x| x * alpha).collect();
        let qs = quantize_vec(&scaled, bw).unwrap();
        let s1 = quantized_similarity(&qa, &qb).unwrap();
        prop_assert!((s1 - quantized_similarity(&qs, &qb).unwrap()).abs() <= 1e-9);
        let da = qa.dequantize();
        let db = qb.dequantize();
        let dot: f64 = da.iter().zip(&db).map(|(x, y)| x * y).sum();
        let na = da.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = db.iter().map(|x| x * x).sum::<f64>().sqrt();
        let want = if na == 0.0 || nb == 0.0 { 0.0 } else { dot / (na * nb) };
        prop_assert!((s1 - want).abs() <= 1e-9);
    }

    #[test]
    fn binary_cosine_is_hamming(
        (a, b) in (1usize..100).prop_flat_map(|d| (prop::collection::vec(-1.0f64..1.0, d), prop::collection::vec(-1.0f64..1.0, d))),
    ) {
        let qa = quantize_vec(&a, Bitwidth::B1).unwrap();
        let qb = quantize_vec(&b, Bitwidth::B1).unwrap();
        let ham = qa.codes.iter().zip(&qb.codes).filter(|(x, y)| x != y).count();
        let want = 1.0 - 2.0 * ham as f64 / a.len() as f64;
        prop_assert!((quantized_similarity(&qa, &qb).unwrap() - want).abs() <= 1e-9);
        prop_assert!((hamming_similarity(&qa, &qb).unwrap() - want).abs() <= 1e-9);
    }

    #[test]
    fn checkpoint_round_trip(rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 13), 2..5), bi in 0usize..6) {
        let b = Bitwidth::ALL[bi];
        let q = QuantizedModel::from_rows(rows.iter().map(|r| quantize_vec(r, b).unwrap()).collect()).unwrap();
        let mut buf = Vec::new();
        q.write_to(&mut buf).unwrap();
        prop_assert_eq!(QuantizedModel::read_from(&buf[..]).unwrap(), q);
    }
}

#[test]
fn spec_examples() {
    let q = quantize_vec(&[0.3, -0.2], Bitwidth::B1).unwrap();
    assert_eq!(q.codes, vec![1, -1]);
    assert!((q.scale - 0.25).abs() < 1e-15);
    let q = quantize_vec(&[1.0, -0.5, 0.25], Bitwidth::B8).unwrap();
    assert_eq!(q.codes, vec![127, -64, 32]);
    assert_eq!(q.scale, 1.0 / 127.0);
}

#[test]
fn flip_fraction_is_binomial() {
    let rows: Vec<_> = (0..4)
        .map(|r| quantize_vec(&vec![r as f64 + 0.5; 250_000], Bitwidth::B1).unwrap())
        .collect();
    let q = QuantizedModel::from_rows(rows).unwrap();
    assert_eq!(q.total_bits(), 1_000_000);
    let p = 0.01;
    let (out, flipped) = inject_counted(&q, &FaultSpec::new(p, 77).unwrap());
    let n = q.total_bits() as f64;
    let se = (p * (1.0 - p) / n).sqrt();
    assert!((flipped as f64 / n - p).abs() < 4.0 * se, "{flipped}");
    let differing: usize = out
        .rows()
        .iter()
        .zip(q.rows())
        .map(|(a, b)| a.codes.iter().zip(&b.codes).filter(|(x, y)| x != y).count())
        .sum();
    assert_eq!(differing as u64, flipped);
}

fn trained(dim: usize, sep: f64) -> (hdnids_core::ClassModel, hdnids_core::EncoderState, Vec<hdnids_core::FeatureVector>) {
    let data = synth_gaussian(10, 4, 150, sep, 3).unwrap();
    let (train, test) = hdnids_core::dataset::split(&data, 0.3, 3).unwrap();
    let cfg = FitConfig {
        encoder: EncoderConfig { dim, sigma: 1.0, seed: 5 },
        eta: 0.05,
        schedule: RegenSchedule { cycles: 0, warmup_epochs: 5, ..Default::default() },
    };
    let out = fit(&train, &test, 4, &cfg).unwrap();
    (out.model, out.encoder, test)
}

#[test]
fn full_precision_codes_agree_with_float_model() {
    let (model, enc, test) = trained(1024, 1.5);
    let mut extra = synth_gaussian(10, 4, 125, 1.5, 8).unwrap();
    extra.truncate(500);
    let hs = enc.encode_batch(&extra).unwrap();
    let float = model.predict_batch(hs.view()).unwrap();
    let q32 = quantize_model(&model, Bitwidth::B32).unwrap();
    let quant = q32.predict_batch(&QueryCodes::quantize(hs.view(), Bitwidth::B32).unwrap()).unwrap();
    let same = float.iter().zip(&quant).filter(|(a, b)| a == b).count();
    assert!(same as f64 >= 0.99 * 500.0, "{same}/500");
    assert!(!test.is_empty());
}

#[test]
fn binary_model_stays_close_at_high_dimension() {
    let (model, enc, test) = trained(4096, 1.5);
    let hs = enc.encode_batch(&test).unwrap();
    let labels: Vec<usize> = test.iter().map(|f| f.label).collect();
    let float = model.accuracy(hs.view(), &labels).unwrap();
    let q1 = quantize_model(&model, Bitwidth::B1).unwrap();
    let bin = q1.accuracy(&QueryCodes::quantize(hs.view(), Bitwidth::B1).unwrap(), &labels).unwrap();
    assert!(bin >= float - 0.10, "float {float} binary {bin}");
}

fn worst_single_bit_drop(q: &QuantizedModel, queries: &QueryCodes, labels: &[usize]) -> f64 {
    // every bit of the first 32 elements of every row
    let base = q.accuracy(queries, labels).unwrap();
    let mut worst = 0.0f64;
    for row in 0..q.n_classes() {
        for elem in 0..32 {
            for bit in 0..q.bitwidth().bits() {
                let f = flip_single_bit(q, row, elem, bit).unwrap();
                worst = worst.max(base - f.accuracy(queries, labels).unwrap());
            }
        }
    }
    worst
}

#[test]
fn single_bit_damage_is_smallest_at_one_bit() {
    let (model, enc, test) = trained(512, 1.0);
    let hs = enc.encode_batch(&test).unwrap();
    let labels: Vec<usize> = test.iter().map(|f| f.label).collect();
    let mut impact = Vec::new();
    for b in [Bitwidth::B1, Bitwidth::B32] {
        let q = quantize_model(&model, b).unwrap();
        let queries = QueryCodes::quantize(hs.view(), b).unwrap();
        impact.push(worst_single_bit_drop(&q, &queries, &labels));
    }
    assert!(impact[0] <= impact[1], "{impact:?}");
}

#[test]
fn curve_is_deterministic_and_starts_fault_free() {
    let (model, enc, test) = trained(256, 1.0);
    let hs = enc.encode_batch(&test).unwrap();
    let labels: Vec<usize> = test.iter().map(|f| f.label).collect();
    let bws = [Bitwidth::B1, Bitwidth::B8];
    let grid = [0.0, 0.01, 0.1];
    let a = robustness_curve(&model, hs.view(), &labels, &bws, &grid, 4, 1).unwrap();
    let b = robustness_curve(&model, hs.view(), &labels, &bws, &grid, 4, 1).unwrap();
    assert_eq!(a, b);
    for pt in a.iter().filter(|p| p.p == 0.0) {
        let q = quantize_model(&model, pt.bitwidth).unwrap();
        let clean = q.accuracy(&QueryCodes::quantize(hs.view(), pt.bitwidth).unwrap(), &labels).unwrap();
        assert_eq!(pt.mean_acc, clean);
        assert_eq!(pt.std_acc, 0.0);
    }
    for b in bws {
        let accs: Vec<_> = a.iter().filter(|p| p.bitwidth == b).collect();
        for w in accs.windows(2) {
            assert!(w[1].mean_acc <= w[0].mean_acc + w[0].std_acc.max(w[1].std_acc) + 1e-12);
        }
    }
    assert!(robustness_curve(&model, hs.view(), &[], &bws, &grid, 4, 1).is_err());
}
