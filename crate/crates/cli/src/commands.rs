use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use hdnids_core::dataset::{
    feature_vectors_to_records, synth_gaussian, synth_intrusion, write_csv, DatasetSchema, LabelMap, INTRUSION_COLUMNS,
};
use hdnids_core::faults::{robustness_curve, write_curve_csv};
use hdnids_core::quantize::{bit_ops_per_dot, quantize_model, QueryCodes};
use hdnids_core::regen::{fit, FitConfig};
use hdnids_core::{inference_mac_ops, Bitwidth, ClassModel, EncoderState, FeatureVector, RawRecord, RegenReport};
use ndarray::Array2;

use crate::config::{parse_bitwidths, LabelMode, RunConfig, OUTPUT_DIR_ENV};
use crate::data::{load_eval_set, prepare, split_hash, Prepared};
use crate::error::CliError;
use crate::reports::*;
use crate::{EvalArgs, SweepArgs, SynthArgs, SynthKind};

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn open(path: &Path) -> Result<BufReader<File>, CliError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))
}

fn labels_of(xs: &[FeatureVector]) -> Vec<usize> {
    xs.iter().map(|x| x.label).collect()
}

fn write_records(path: &Path, records: &[RawRecord]) -> Result<(), CliError> {
    let mut w = create(path)?;
    write_csv(records, None, &mut w)?;
    w.flush()?;
    Ok(())
}

fn epochs_run(report: &RegenReport) -> usize {
    report.initial_train_error.len() + report.cycles.iter().map(|c| c.train_error.len()).sum::<usize>()
}

fn fit_timed(data: &Prepared, cfg: &FitConfig) -> Result<(hdnids_core::regen::FitOutput, f64), CliError> {
    let start = Instant::now();
    let out = fit(&data.train, &data.test, data.schema.n_classes(), cfg)?;
    Ok((out, start.elapsed().as_secs_f64()))
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    let data = prepare(&cfg.data)?;
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let (out, secs) = fit_timed(&data, &cfg.fit_config())?;

    std::fs::write(dir.join("config.toml"), cfg.snapshot()?)?;
    write_json(&dir.join("schema.json"), &data.schema)?;
    let mut w = create(&dir.join("model.bin"))?;
    out.model.write_to(&mut w)?;
    w.flush()?;
    let mut w = create(&dir.join("encoder.bin"))?;
    out.encoder.write_to(&mut w)?;
    w.flush()?;
    write_json(&dir.join("regen_report.json"), &out.report)?;
    let metrics = Metrics {
        schema_version: SCHEMA_VERSION,
        mac_ops: out.report.train_mac_ops,
        inference_mac_ops: inference_mac_ops(data.schema.n_features(), data.schema.n_classes(), out.model.dim()),
        final_accuracy: out.report.final_test_accuracy,
        effective_dim: out.report.final_effective_dim,
        dim: out.model.dim(),
        n_features: data.schema.n_features(),
        n_classes: data.schema.n_classes(),
        n_train: data.train.len(),
        n_test: data.test.len(),
    };
    write_json(&dir.join("metrics.json"), &metrics)?;
    write_json(
        &dir.join("timing.json"),
        &Timing {
            schema_version: SCHEMA_VERSION,
            train_time_s: secs,
        },
    )?;
    write_records(&dir.join("train.csv"), &data.train_raw)?;
    write_records(&dir.join("test.csv"), &data.test_raw)?;
    let acc = metrics
        .final_accuracy
        .map(|a| format!("{a:.4}"))
        .unwrap_or_else(|| "n/a".into());
    println!(
        "trained D={} effective_dim={} accuracy={acc} -> {}",
        metrics.dim,
        metrics.effective_dim,
        dir.display()
    );
    Ok(())
}

pub fn compare(cfg: &RunConfig) -> Result<(), CliError> {
    let data = prepare(&cfg.data)?;
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let hash = split_hash(&data.train, &data.test);
    let dim = cfg.encoder.dim;
    let runs = [
        ("dynamic", cfg.fit_config()),
        ("static", cfg.static_fit_config(dim)),
        ("static_large", cfg.static_fit_config(cfg.large_dim())),
    ];
    let mut models = Vec::new();
    for (name, fit_cfg) in runs {
        let seen = split_hash(&data.train, &data.test);
        if seen != hash {
            return Err(CliError::Invariant(format!("{name} run saw a different split")));
        }
        let (out, _) = fit_timed(&data, &fit_cfg)?;
        models.push(CompareEntry {
            name: name.into(),
            dim: out.model.dim(),
            effective_dim: out.report.final_effective_dim,
            accuracy: out.report.final_test_accuracy,
            inference_mac_ops: inference_mac_ops(data.schema.n_features(), data.schema.n_classes(), out.model.dim()),
            train_mac_ops: out.report.train_mac_ops,
            epochs: epochs_run(&out.report),
            split_hash: seen,
        });
    }
    std::fs::write(dir.join("config.toml"), cfg.snapshot()?)?;
    let report = CompareReport {
        schema_version: SCHEMA_VERSION,
        split_hash: hash,
        models,
    };
    write_json(&dir.join("compare.json"), &report)?;
    println!("{:<14}{:>8}{:>10}{:>10}{:>16}{:>16}", "model", "dim", "eff_dim", "accuracy", "infer_macs", "train_macs");
    for m in &report.models {
        let acc = m.accuracy.map(|a| format!("{a:.4}")).unwrap_or_else(|| "n/a".into());
        println!(
            "{:<14}{:>8}{:>10}{:>10}{:>16}{:>16}",
            m.name, m.dim, m.effective_dim, acc, m.inference_mac_ops, m.train_mac_ops
        );
    }
    Ok(())
}

struct Loaded {
    model: ClassModel,
    encoder: EncoderState,
    schema: DatasetSchema,
}

fn load_trained(model: &Path, encoder: &Path, schema: &Path) -> Result<Loaded, CliError> {
    let model = ClassModel::read_from(open(model)?)?;
    let encoder = EncoderState::read_from(open(encoder)?)?;
    let schema: DatasetSchema = read_json(schema)?;
    if model.dim() != encoder.dim() {
        return Err(CliError::Data(format!(
            "model has D = {} but encoder has D = {}",
            model.dim(),
            encoder.dim()
        )));
    }
    if encoder.n_features() != schema.n_features() {
        return Err(CliError::Data(format!(
            "encoder expects {} features but the schema yields {}",
            encoder.n_features(),
            schema.n_features()
        )));
    }
    if model.n_classes() != schema.n_classes() {
        return Err(CliError::Data(format!(
            "model has {} classes but the schema lists {}",
            model.n_classes(),
            schema.n_classes()
        )));
    }
    Ok(Loaded { model, encoder, schema })
}

fn pick(explicit: &Option<PathBuf>, dir: &Option<PathBuf>, file: &str, what: &str) -> Result<PathBuf, CliError> {
    match (explicit, dir) {
        (Some(p), _) => Ok(p.clone()),
        (None, Some(d)) => Ok(d.join(file)),
        (None, None) => Err(CliError::Usage(format!("--{what} or --model-dir is required"))),
    }
}

fn predictions(model: &ClassModel, hs: &Array2<f64>, bitwidth: Option<Bitwidth>) -> Result<Vec<usize>, CliError> {
    Ok(match bitwidth {
        None => model.predict_batch(hs.view())?,
        Some(b) => quantize_model(model, b)?.predict_batch(&QueryCodes::quantize(hs.view(), b)?)?,
    })
}

pub fn eval(args: &EvalArgs) -> Result<(), CliError> {
    let loaded = load_trained(
        &pick(&args.model, &args.model_dir, "model.bin", "model")?,
        &pick(&args.encoder, &args.model_dir, "encoder.bin", "encoder")?,
        &pick(&args.schema, &args.model_dir, "schema.json", "schema")?,
    )?;
    let data_path = pick(&args.data, &args.model_dir, "test.csv", "data")?;
    let map = match (&args.label_map, args.labels) {
        (Some(p), _) => Some(LabelMap::from_path(p)?),
        (None, LabelMode::Nslkdd5) => Some(LabelMap::nsl_kdd_five()),
        (None, LabelMode::Binary) => Some(LabelMap::binary("normal")),
        (None, _) => None,
    };
    let set = load_eval_set(&data_path, &loaded.schema, args.label_column, &args.drop_columns, map)?;
    if set.is_empty() {
        return Err(CliError::Data("evaluation set is empty".into()));
    }
    let bitwidth = args.bitwidth.map(Bitwidth::from_bits).transpose()?;
    let hs = loaded.encoder.encode_batch(&set)?;
    let pred = predictions(&loaded.model, &hs, bitwidth)?;
    let l = loaded.schema.n_classes();
    let mut confusion = vec![vec![0usize; l]; l];
    for (x, &p) in set.iter().zip(&pred) {
        confusion[x.label][p] += 1;
    }
    let hits = set.iter().zip(&pred).filter(|(x, &p)| x.label == p).count();
    let report = EvalReport {
        schema_version: SCHEMA_VERSION,
        accuracy: hits as f64 / set.len() as f64,
        n: set.len(),
        bitwidth: bitwidth.map(Bitwidth::bits),
        labels: loaded.schema.labels.clone(),
        confusion,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(out) = &args.out {
        write_json(out, &report)?;
    }
    Ok(())
}

struct Sweep {
    cfg: RunConfig,
    loaded: Loaded,
    hs: Array2<f64>,
    labels: Vec<usize>,
    out_dir: PathBuf,
}

fn sweep_setup(args: &SweepArgs) -> Result<Sweep, CliError> {
    let dir = &args.model_dir;
    let snapshot = dir.join("config.toml");
    let cfg = match &args.config {
        Some(p) => RunConfig::from_file(p)?,
        None if snapshot.exists() => RunConfig::from_file(&snapshot)?,
        None => RunConfig::default(),
    };
    let loaded = load_trained(&dir.join("model.bin"), &dir.join("encoder.bin"), &dir.join("schema.json"))?;
    let data_path = args.data.clone().unwrap_or_else(|| dir.join("test.csv"));
    let set = load_eval_set(&data_path, &loaded.schema, None, &[], None)?;
    if set.is_empty() {
        return Err(CliError::Data("evaluation set is empty".into()));
    }
    let hs = loaded.encoder.encode_batch(&set)?;
    let out_dir = match (&args.output_dir, std::env::var_os(OUTPUT_DIR_ENV)) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => d.into(),
        (None, None) => dir.clone(),
    };
    create_dir(&out_dir)?;
    Ok(Sweep {
        cfg,
        loaded,
        hs,
        labels: labels_of(&set),
        out_dir,
    })
}

pub fn bitwidth(args: &SweepArgs) -> Result<(), CliError> {
    let s = sweep_setup(args)?;
    let bits = args.bitwidths.clone().unwrap_or_else(|| s.cfg.bitwidth.bitwidths.clone());
    let bws = parse_bitwidths(&bits)?;
    let model = &s.loaded.model;
    let (l, d) = (model.n_classes() as u64, model.dim());
    let mut rows = Vec::new();
    for b in bws {
        let q = quantize_model(model, b)?;
        let accuracy = q.accuracy(&QueryCodes::quantize(s.hs.view(), b)?, &s.labels)?;
        rows.push(BitwidthRow {
            bitwidth: b.bits(),
            accuracy,
            bit_ops_per_inference: l * bit_ops_per_dot(d, b),
            model_bits: q.total_bits(),
        });
    }
    let report = BitwidthReport {
        schema_version: SCHEMA_VERSION,
        dim: d,
        float_accuracy: model.accuracy(s.hs.view(), &s.labels)?,
        rows,
    };
    let mut w = create(&s.out_dir.join("bitwidth.csv"))?;
    writeln!(w, "{BITWIDTH_HEADER}")?;
    for r in &report.rows {
        writeln!(w, "{},{:?},{},{}", r.bitwidth, r.accuracy, r.bit_ops_per_inference, r.model_bits)?;
    }
    w.flush()?;
    write_json(&s.out_dir.join("bitwidth.json"), &report)?;
    println!("float accuracy {:.4}", report.float_accuracy);
    for r in &report.rows {
        println!("{:>2}-bit accuracy {:.4}", r.bitwidth, r.accuracy);
    }
    Ok(())
}

pub fn faults(args: &SweepArgs) -> Result<(), CliError> {
    let s = sweep_setup(args)?;
    let f = &s.cfg.faults;
    let bits = args.bitwidths.clone().unwrap_or_else(|| f.bitwidths.clone());
    let bws = parse_bitwidths(&bits)?;
    let grid = args.p_grid.clone().unwrap_or_else(|| f.p_grid.clone());
    let trials = args.trials.unwrap_or(f.trials);
    let seed = args.seed.unwrap_or(f.seed);
    if trials == 0 || grid.is_empty() {
        return Err(CliError::Config("fault sweep needs at least one trial and one probability".into()));
    }
    let points = robustness_curve(&s.loaded.model, s.hs.view(), &s.labels, &bws, &grid, trials, seed)?;
    let mut w = create(&s.out_dir.join("faults.csv"))?;
    write_curve_csv(&points, &mut w)?;
    w.flush()?;
    println!("wrote {} curve points to {}", points.len(), s.out_dir.join("faults.csv").display());
    Ok(())
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let (records, header): (Vec<RawRecord>, Vec<String>) = match args.kind {
        SynthKind::Gaussian => {
            let n_features = args.n_features.unwrap_or(16);
            let fvs = synth_gaussian(
                n_features,
                args.n_classes.unwrap_or(4),
                args.n.unwrap_or(250),
                args.separation.unwrap_or(3.0),
                args.seed,
            )?;
            let header = (0..n_features).map(|i| format!("f{i}")).collect();
            (feature_vectors_to_records(&fvs), header)
        }
        SynthKind::Intrusion => {
            let recs = synth_intrusion(args.n.unwrap_or(25_000), args.noise.unwrap_or(0.5), args.seed)?;
            (recs, INTRUSION_COLUMNS.iter().map(|s| s.to_string()).collect())
        }
    };
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let mut w = create(&args.out)?;
    write_csv(&records, Some(&header), &mut w)?;
    w.flush()?;
    println!("wrote {} records to {}", records.len(), args.out.display());
    Ok(())
}
