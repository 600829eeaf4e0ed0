use hdnids_core::dataset::{
    load_csv_with, shuffled_indices, split, synth_gaussian, synth_intrusion, vectorize, write_csv, CsvOptions,
    DatasetSchema, LabelMap,
};
use hdnids_core::encoder::EncoderState;
use hdnids_core::model::ClassModel;
use hdnids_core::regen::{fit, EncoderConfig, FitConfig, RegenSchedule, Trainer};
use hdnids_core::FeatureVector;
use ndarray::Array2;

fn labels(xs: &[FeatureVector]) -> Vec<usize> {
    xs.iter().map(|x| x.label).collect()
}

fn centroid_accuracy(train: &[FeatureVector], test: &[FeatureVector], k: usize) -> f64 {
    let n = train[0].features.len();
    let mut sums = vec![vec![0.0; n]; k];
    let mut counts = vec![0usize; k];
    for x in train {
        counts[x.label] += 1;
        for (s, v) in sums[x.label].iter_mut().zip(&x.features) {
            *s += v;
        }
    }
    let hits = test
        .iter()
        .filter(|x| {
            let best = (0..k)
                .min_by(|&a, &b| {
                    let da: f64 = x.features.iter().zip(&sums[a]).map(|(v, s)| (v - s / counts[a] as f64).powi(2)).sum();
                    let db: f64 = x.features.iter().zip(&sums[b]).map(|(v, s)| (v - s / counts[b] as f64).powi(2)).sum();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            best == x.label
        })
        .count();
    hits as f64 / test.len() as f64
}

fn config(dim: usize, cycles: usize) -> FitConfig {
    FitConfig {
        encoder: EncoderConfig { dim, sigma: 1.0, seed: 21 },
        eta: 0.05,
        schedule: RegenSchedule { cycles, ..Default::default() },
    }
}

#[test]
fn separation_controls_difficulty() {
    let easy = synth_gaussian(8, 2, 200, 10.0, 1).unwrap();
    let (tr, te) = split(&easy, 0.3, 1).unwrap();
    assert!(centroid_accuracy(&tr, &te, 2) >= 0.99);
    let out = fit(&tr, &te, 2, &config(256, 0)).unwrap();
    assert!(out.report.final_test_accuracy.unwrap() >= 0.99);

    let blur = synth_gaussian(8, 2, 400, 0.0, 1).unwrap();
    let (tr, te) = split(&blur, 0.5, 1).unwrap();
    let out = fit(&tr, &te, 2, &config(256, 0)).unwrap();
    let acc = out.report.final_test_accuracy.unwrap();
    assert!((acc - 0.5).abs() <= 0.05, "{acc}");
}

#[test]
fn bundling_order_does_not_matter_on_separable_data() {
    let data = synth_gaussian(10, 3, 100, 6.0, 2).unwrap();
    let (train, test) = split(&data, 0.3, 2).unwrap();
    let enc = EncoderState::new(10, 512, 1.0, 3).unwrap();
    let hs_test = enc.encode_batch(&test).unwrap();
    for seed in 0..5 {
        let order = shuffled_indices(train.len(), 100 + seed);
        let permuted: Vec<FeatureVector> = order.iter().map(|&i| train[i].clone()).collect();
        let hs = enc.encode_batch(&permuted).unwrap();
        let mut model = ClassModel::new(3, 512, 0.05).unwrap();
        model.bundle_train(hs.view(), &labels(&permuted)).unwrap();
        let acc = model.accuracy(hs_test.view(), &labels(&test)).unwrap();
        assert!(acc >= 0.95, "order {seed}: {acc}");
    }
}

#[test]
fn regeneration_does_not_collapse_accuracy() {
    let data = synth_gaussian(12, 4, 150, 4.0, 5).unwrap();
    let (train, test) = split(&data, 0.3, 5).unwrap();
    let out = fit(&train, &test, 4, &config(256, 5)).unwrap();
    let r = &out.report;
    assert_eq!(r.cycles.len(), 5);
    assert!(r.final_test_accuracy.unwrap() >= r.initial_test_accuracy.unwrap() - 0.02);
    assert_eq!(r.final_effective_dim, 256 + 5 * 25);
}

#[test]
fn fit_is_deterministic() {
    let data = synth_gaussian(6, 3, 60, 3.0, 9).unwrap();
    let (train, test) = split(&data, 0.25, 9).unwrap();
    let a = fit(&train, &test, 3, &config(128, 3)).unwrap();
    let b = fit(&train, &test, 3, &config(128, 3)).unwrap();
    assert_eq!(serde_json::to_string(&a.report).unwrap(), serde_json::to_string(&b.report).unwrap());
    let (mut ma, mut mb) = (Vec::new(), Vec::new());
    a.model.write_to(&mut ma).unwrap();
    b.model.write_to(&mut mb).unwrap();
    assert_eq!(ma, mb);
    let (mut ea, mut eb) = (Vec::new(), Vec::new());
    a.encoder.write_to(&mut ea).unwrap();
    b.encoder.write_to(&mut eb).unwrap();
    assert_eq!(ea, eb);
}

#[test]
fn effective_dimension_reaches_four_thousand() {
    let data = synth_gaussian(4, 2, 20, 3.0, 1).unwrap();
    let mut cfg = config(500, 70);
    cfg.schedule.regen_rate = 0.10;
    let out = fit(&data, &[], 2, &cfg).unwrap();
    assert_eq!(out.report.final_effective_dim, 4000);
    assert_eq!(out.model.effective_dim(), 4000);
    assert!(out.report.final_test_accuracy.is_none());
}

#[test]
fn cycle_only_touches_dropped_dimensions() {
    let data = synth_gaussian(6, 3, 40, 3.0, 4).unwrap();
    let cfg = config(64, 0);
    let mut trainer = Trainer::new(&data, &[], 3, &cfg).unwrap();
    trainer.epoch().unwrap();
    let enc_before = trainer.encoder().clone();
    let enc_train_before: Array2<f64> = trainer.train_encoded().to_owned();
    let dropped = trainer.drop_and_regenerate().unwrap();
    assert_eq!(dropped.len(), 6);
    for d in 0..64 {
        let hit = dropped.contains(&d);
        assert_eq!(trainer.encoder().base().row(d) == enc_before.base().row(d), !hit);
        if hit {
            assert!(trainer.model().classes().column(d).iter().all(|&v| v == 0.0));
        } else {
            assert_eq!(trainer.train_encoded().column(d), enc_train_before.column(d));
        }
    }
    // partial re-encode agrees with encoding from scratch
    let full = trainer.encoder().encode_batch(&data).unwrap();
    for (a, b) in full.iter().zip(trainer.train_encoded().iter()) {
        assert!((a - b).abs() <= 1e-6);
    }
}

#[test]
fn intrusion_records_survive_csv_round_trip() {
    let map = LabelMap::nsl_kdd_five();
    let recs = synth_intrusion(500, 0.3, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("synth.csv");
    write_csv(&recs, None, std::fs::File::create(&path).unwrap()).unwrap();
    let mut opts = CsvOptions::new(41);
    opts.label_map = Some(map.clone());
    let (loaded, schema) = load_csv_with(&path, &opts).unwrap();
    assert_eq!(loaded.len(), 500);
    assert_eq!(schema.labels, map.categories());
    let mut mapped = recs.clone();
    for r in &mut mapped {
        r.label = map.map_label(&r.label).unwrap();
    }
    assert_eq!(loaded, mapped);
    let direct = DatasetSchema::from_records(&mapped, map.categories().to_vec()).unwrap();
    let a = vectorize(&loaded, &schema).unwrap();
    let b = vectorize(&mapped, &direct).unwrap();
    assert_eq!(a[0].features.len(), b[0].features.len());
    assert!(a.iter().flat_map(|f| &f.features).all(|v| (0.0..=1.0).contains(v)));
}
