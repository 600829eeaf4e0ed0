//! Static vs regenerated accuracy on the synthetic intrusion data.
//!
//! cargo run --release --example dim_sweep -- [noise] [sigma] [cycles] [rate] [epochs] [dims...]

use hdnids_core::dataset::{split, synth_intrusion, vectorize, DatasetSchema, LabelMap};
use hdnids_core::regen::{fit, EncoderConfig, FitConfig, RegenSchedule};

fn main() -> hdnids_core::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let arg = |i: usize, d: f64| args.get(i).and_then(|s| s.parse().ok()).unwrap_or(d);
    let noise = arg(0, 0.2);
    let sigma = arg(1, 1.0);
    let cycles = arg(2, 70.0) as usize;
    let rate = arg(3, 0.1);
    let epochs = arg(4, 1.0) as usize;
    let dims: Vec<usize> = if args.len() > 5 {
        args[5..].iter().filter_map(|s| s.parse().ok()).collect()
    } else {
        vec![512, 4096]
    };
    let map = LabelMap::nsl_kdd_five();
    let mut recs = synth_intrusion(25_000, noise, 7)?;
    for r in &mut recs {
        r.label = map.map_label(&r.label)?.to_string();
    }
    let (train, test) = split(&recs, 0.2, 7)?;
    let schema = DatasetSchema::from_records(&train, map.categories().to_vec())?;
    let train = vectorize(&train, &schema)?;
    let test = vectorize(&test, &schema)?;
    println!("features {} train {} test {}", schema.n_features(), train.len(), test.len());
    for &dim in &dims {
        for dynamic in [false, true] {
            let schedule = if dynamic {
                RegenSchedule { cycles, regen_rate: rate, epochs_per_cycle: epochs, ..Default::default() }
            } else {
                RegenSchedule { cycles: 0, warmup_epochs: cycles * epochs, ..Default::default() }
            };
            let cfg = FitConfig {
                encoder: EncoderConfig { dim, sigma, seed: 1 },
                eta: 0.05,
                schedule,
            };
            let t = std::time::Instant::now();
            let out = fit(&train, &test, schema.n_classes(), &cfg)?;
            let r = &out.report;
            let mut touched: Vec<usize> = r.cycles.iter().flat_map(|c| c.dropped.iter().copied()).collect();
            touched.sort_unstable();
            touched.dedup();
            println!(
                "D={dim} dyn={dynamic} init={:.4} final={:.4} best={:.4} eff={} touched={} err={:.4} {:.1}s",
                r.initial_test_accuracy.unwrap_or(0.0),
                r.final_test_accuracy.unwrap_or(0.0),
                r.cycles.iter().filter_map(|c| c.test_accuracy).fold(0.0, f64::max),
                r.final_effective_dim,
                touched.len(),
                r.cycles
                    .last()
                    .and_then(|c| c.train_error.last())
                    .or(r.initial_train_error.last())
                    .copied()
                    .unwrap_or(f64::NAN),
                t.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
