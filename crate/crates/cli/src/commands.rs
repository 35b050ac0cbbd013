//! Subcommand implementations.

use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::anyhow;
use serde::Serialize;
use smoothcert::attack::{pgd_attack_with, AttackParams};
use smoothcert::bounds::{self, max_certifiable_radius, BoundInputs, BoundKind};
use smoothcert::report::{self, accuracy_curve, projected_curve, CertificationRecord, CurveTable};
use smoothcert::smoothing::{BaseClassifier, NoiseStream, Prediction, Sampler};
use smoothcert::training::{clean_accuracy, jensen_gap_diagnostic, train_with_noise, ModelSpec, TrainConfig};
use smoothcert::{AnyModel64, Error, LabeledExample64};

use crate::args::{
    AttackArgs, BoundChoice, BoundsArgs, CertifyArgs, Command, GenerateArgs, Generator, ModelKind, PredictArgs,
    ReportArgs, TableFormat, TrainArgs,
};
use crate::config::RunConfig;
use crate::dataset::{read_csv, two_gaussians, write_csv, xor_grid};
use crate::failure::{Classify, Failure};
use crate::records::{read_certify_records, AttackRecord, PredictRecord, RecordWriter};

pub fn run(command: &Command) -> Result<(), Failure> {
    match command {
        Command::Generate(a) => generate(a),
        Command::Train(a) => train(a),
        Command::Certify(a) => certify(a),
        Command::Predict(a) => predict(a),
        Command::Bounds(a) => bounds(a),
        Command::Attack(a) => attack(a),
        Command::Report(a) => report(a),
    }
}

pub fn load_model(path: &Path) -> Result<AnyModel64, Failure> {
    let text = fs::read_to_string(path).input_ctx(|| format!("cannot read model file {}", path.display()))?;
    AnyModel64::from_text(&text).input_ctx(|| format!("cannot load model file {}", path.display()))
}

fn check_dims(model: &AnyModel64, data: &[LabeledExample64]) -> Result<(), Failure> {
    let dim = data[0].features.len();
    if let Some(ex) = data.iter().find(|e| e.features.len() != dim) {
        return Err(Failure::input(anyhow!("examples have {} and {} features", dim, ex.features.len())));
    }
    match model.input_dim() {
        Some(d) if d != dim => {
            Err(Failure::input(anyhow!("model expects {d} features but the dataset has {dim}")))
        }
        _ => Ok(()),
    }
}

fn sampler(workers: usize, batch_size: u64) -> Result<Sampler, Failure> {
    let s = if workers == 1 { Sampler::sequential() } else { Sampler::with_workers(workers).map_err(Failure::runtime)? };
    Ok(s.batch_size(batch_size))
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn input_or_runtime(e: Error) -> Failure {
    match e {
        Error::InvalidParams(_) | Error::Domain(_) | Error::DimensionMismatch { .. } => Failure::input(e),
        _ => Failure::runtime(e),
    }
}

pub fn generate(args: &GenerateArgs) -> Result<(), Failure> {
    let data = match args.generator {
        Generator::TwoGaussians => two_gaussians(args.count, args.dim, args.mean, args.std, args.seed),
        Generator::XorGrid => xor_grid(args.count, args.spread, args.std, args.seed),
    }
    .map_err(Failure::input)?;
    write_csv(&args.out, &data)?;
    eprintln!("generate: wrote {} examples to {}", data.len(), args.out.display());
    Ok(())
}

pub fn train(args: &TrainArgs) -> Result<(), Failure> {
    let data = read_csv(&args.data)?;
    let cfg = TrainConfig {
        sigma_train: args.sigma_train,
        epochs: args.epochs,
        learning_rate: args.learning_rate,
        batch_size: args.batch_size,
        seed: args.seed,
        model: match args.model {
            ModelKind::Logistic => ModelSpec::Logistic,
            ModelKind::Mlp => ModelSpec::Mlp { width: args.width },
        },
    };
    let trained = train_with_noise(&data, &cfg).map_err(input_or_runtime)?;
    fs::write(&args.out, trained.model.to_text())
        .runtime_ctx(|| format!("cannot write model file {}", args.out.display()))?;
    let accuracy = clean_accuracy(&trained.model, &data).map_err(Failure::runtime)?;
    let last = trained.epoch_losses.last().copied().unwrap_or(f64::NAN);
    eprintln!("train: {} epochs, final loss {last:.6}, clean training accuracy {accuracy:.4}", cfg.epochs);
    if let Some(k) = args.diagnose {
        let (soft, ce) =
            jensen_gap_diagnostic(&trained.model, &data, args.sigma_train, k, args.seed).map_err(input_or_runtime)?;
        eprintln!("train: soft objective {soft:.6}, augmented cross-entropy {ce:.6}");
    }
    Ok(())
}

pub fn certify(args: &CertifyArgs) -> Result<(), Failure> {
    let cfg = RunConfig::from_flags(&args.run)?;
    let model = load_model(&args.model)?;
    let data = read_csv(&args.data)?;
    check_dims(&model, &data)?;
    let sampler = sampler(cfg.workers, cfg.batch_size)?;
    let noise = NoiseStream::new(cfg.seed);
    let mut out = RecordWriter::create(args.out.as_deref(), "certify")?;
    let start = Instant::now();
    let mut records = Vec::with_capacity(data.len());
    for (i, ex) in data.iter().enumerate() {
        let t = Instant::now();
        let outcome = sampler
            .certify_detailed(&model, &cfg.params, &ex.features, &noise, i as u64)
            .runtime_ctx(|| format!("certification of example {i} failed"))?;
        let mut rec = CertificationRecord::new(i as u64, ex.label, &outcome.certification, &cfg.params, cfg.seed);
        if cfg.store_counts {
            rec.counts = Some(outcome.estimation);
        }
        if cfg.record_timing {
            rec.wall_time_ms = Some(elapsed_ms(t));
        }
        out.write(&rec)?;
        records.push(rec);
    }
    let s = report::summarize(&records);
    eprintln!(
        "certify: {} examples: {} certified correct, {} wrong, {} abstained; {:.3} s",
        s.total,
        s.certified_correct,
        s.wrong,
        s.abstained,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<(), Failure> {
    let cfg = RunConfig::from_flags(&args.run)?;
    let model = load_model(&args.model)?;
    let data = read_csv(&args.data)?;
    check_dims(&model, &data)?;
    let sampler = sampler(cfg.workers, cfg.batch_size)?;
    let noise = NoiseStream::new(cfg.seed);
    let mut out = RecordWriter::create(args.out.as_deref(), "predict")?;
    let start = Instant::now();
    let (mut correct, mut wrong, mut abstained) = (0usize, 0usize, 0usize);
    for (i, ex) in data.iter().enumerate() {
        let t = Instant::now();
        let prediction = sampler
            .predict(&model, &cfg.params, &ex.features, &noise, i as u64)
            .runtime_ctx(|| format!("prediction of example {i} failed"))?;
        match prediction {
            Prediction::Label(l) if l == ex.label => correct += 1,
            Prediction::Label(_) => wrong += 1,
            Prediction::Abstain => abstained += 1,
        }
        out.write(&PredictRecord {
            example_index: i as u64,
            true_label: ex.label,
            predicted_label: prediction.label(),
            sigma: cfg.params.sigma(),
            n: cfg.params.n(),
            alpha: cfg.params.alpha(),
            seed: cfg.seed,
            wall_time_ms: cfg.record_timing.then(|| elapsed_ms(t)),
        })?;
    }
    eprintln!(
        "predict: {} examples: {correct} correct, {wrong} wrong, {abstained} abstained; {:.3} s",
        data.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

pub fn bounds(args: &BoundsArgs) -> Result<(), Failure> {
    if args.pa.is_none() && args.samples.is_none() {
        return Err(Failure::input(anyhow!("nothing to compute: pass --pa and/or --samples")));
    }
    println!("bound\tradius");
    if let Some(pa) = args.pa {
        let pb = args.pb.unwrap_or(1.0 - pa);
        let inputs = BoundInputs::new(pa, pb, args.sigma).map_err(Failure::input)?;
        let kinds: &[BoundKind] = match args.kind {
            BoundChoice::Cohen => &[BoundKind::Cohen],
            BoundChoice::Lecuyer => &[BoundKind::Lecuyer],
            BoundChoice::Li => &[BoundKind::Li],
            BoundChoice::All => &BoundKind::ALL,
        };
        for &kind in kinds {
            println!("{}\t{}", kind.name(), bounds::radius(kind, &inputs));
        }
    }
    if let Some(n) = args.samples {
        let r = max_certifiable_radius(n, args.alpha, args.sigma).map_err(Failure::input)?;
        println!("ceiling\t{r}");
    }
    Ok(())
}

pub fn attack(args: &AttackArgs) -> Result<(), Failure> {
    let model = load_model(&args.model)?;
    let data = read_csv(&args.data)?;
    check_dims(&model, &data)?;
    if args.workers == 0 {
        return Err(Failure::input(anyhow!("workers must be at least 1")));
    }
    let step_size = args.step_size.unwrap_or(2.5 * args.radius / args.steps.max(1) as f64);
    let base = AttackParams::new(args.radius, args.sigma, args.k, args.steps, step_size, args.seed)
        .map_err(Failure::input)?;
    if model.as_differentiable().is_none() {
        return Err(Failure::input(anyhow!("`{}` models have no gradients to attack", model.kind())));
    }
    let sampler = sampler(args.workers, crate::config::DEFAULT_BATCH)?;
    let mut out = RecordWriter::create(args.out.as_deref(), "attack")?;
    let mut successes = 0usize;
    for (i, ex) in data.iter().enumerate() {
        let params = AttackParams { seed: args.seed.wrapping_add(i as u64), ..base };
        let outcome = pgd_attack_with(&sampler, &model, &ex.features, ex.label, &params)
            .runtime_ctx(|| format!("attack on example {i} failed"))?;
        successes += usize::from(outcome.success);
        out.write(&AttackRecord {
            example_index: i as u64,
            true_label: ex.label,
            radius: args.radius,
            success: outcome.success,
            predicted_label: outcome.prediction.label(),
            delta_norm: outcome.delta.iter().map(|d| d * d).sum::<f64>().sqrt(),
            delta: outcome.delta,
            skipped_steps: outcome.skipped_steps,
            sigma: args.sigma,
            seed: params.seed,
        })?;
    }
    eprintln!("attack: {successes} of {} examples flipped at radius {}", data.len(), args.radius);
    Ok(())
}

fn radius_grid(args: &ReportArgs) -> Result<Vec<f64>, Failure> {
    let radii = match &args.radii {
        Some(r) => r.clone(),
        None => {
            if !(args.step > 0.0 && args.max_radius >= 0.0) {
                return Err(Failure::input(anyhow!("need step > 0 and max_radius >= 0")));
            }
            let count = (args.max_radius / args.step + 1e-9).floor() as usize + 1;
            (0..count).map(|i| i as f64 * args.step).collect()
        }
    };
    if radii.is_empty() || radii.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || radii.windows(2).any(|w| w[0] > w[1]) {
        return Err(Failure::input(anyhow!("radii must be finite, nonnegative and ascending")));
    }
    Ok(radii)
}

#[derive(Serialize)]
struct JsonTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

pub fn report(args: &ReportArgs) -> Result<(), Failure> {
    if !(args.rho > 0.0 && args.rho < 1.0) {
        return Err(Failure::input(anyhow!("rho must lie in (0, 1)")));
    }
    let radii = radius_grid(args)?;
    let mut runs = Vec::with_capacity(args.records.len());
    for path in &args.records {
        let records = read_certify_records(path)?;
        let name = path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into_owned());
        let s = report::summarize(&records);
        eprintln!(
            "report: {name}: {} records, {} certified correct, {} wrong, {} abstained",
            s.total, s.certified_correct, s.wrong, s.abstained
        );
        let rows = match args.project_n {
            Some(n_new) => projected_curve(&records, n_new, &radii, args.rho),
            None => accuracy_curve(&records, &radii, args.rho),
        }
        .input_ctx(|| format!("cannot build the curve for {}", path.display()))?;
        runs.push((name, rows));
    }
    let table = CurveTable::new(runs).map_err(Failure::input)?;
    let text = match args.format {
        TableFormat::Tsv => table.to_tsv(),
        TableFormat::Json => {
            let json = JsonTable { columns: table.columns(), rows: table.rows() };
            serde_json::to_string_pretty(&json).map_err(Failure::runtime)? + "\n"
        }
    };
    match &args.out {
        Some(path) => fs::write(path, text).runtime_ctx(|| format!("cannot write {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
