//! The seven pipeline commands.
//!
//! Every command reads one config file, validates everything it needs in a
//! single pass, derives its randomness from the master seed through fixed
//! stage lanes, and writes its outputs atomically. Repeated runs with the
//! same config and seed produce byte-identical files (timestamps live only
//! in report header comments).

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sawtooth_core::data::{LabeledDataset, gen_cyclic_classes, gen_gaussian, gen_imbalanced};
use sawtooth_core::evaluation::{
    TstrMetric, gmean_from_confusion, macro_f1_from_confusion, per_step_curve, tstr_confusion,
    tstr_evaluate,
};
use sawtooth_core::predictor::denoiser::{FD_STEP, finite_difference_max_rel_error};
use sawtooth_core::predictor::{
    DenoiserConfig, DenoiserModel, EpsilonPredictor, GaussianDataSpec, GaussianOracle, train,
};
use sawtooth_core::sampler::{Trajectory, ddim_sample, ddpm_sample, sawtooth_sample};
use sawtooth_core::schedule::{NoiseSchedule, SamplingPlan, build_sawtooth_plan, build_schedule};
use sawtooth_core::seed::{derive_seed, sample_seed};
use sawtooth_core::series::TimeSeries;

use crate::config::{RawConfig, Reader, RunSection, ScheduleSection};
use crate::io;

// Fixed seed-derivation lanes; documented so stages can be reproduced in
// isolation from the same master seed.
pub const STAGE_DATA: u64 = 0;
pub const STAGE_TRAIN: u64 = 1;
pub const STAGE_SAMPLE: u64 = 2;
pub const STAGE_BENCH_MODEL: u64 = 3;
pub const STAGE_BENCH_DDPM: u64 = 4;
pub const STAGE_BENCH_SAWTOOTH: u64 = 5;
pub const STAGE_GRADCHECK: u64 = 6;

const GRADCHECK_THRESHOLD: f64 = 1e-4;

/// Builds a synthetic dataset and writes it as CSV.
pub fn cmd_gen_data(raw: &RawConfig, seed_override: Option<u64>) -> anyhow::Result<()> {
    let mut reader = Reader::new(raw);
    let run = RunSection::read(&mut reader, seed_override);
    let kind = reader.required_string("data", "kind");
    let channels = reader.optional_or::<usize>("data", "channels", 1);
    let length = reader.optional_or::<usize>("data", "length", 32);
    let noise_level = reader.optional_or::<f64>("data", "noise_level", 0.1);
    let classes = reader.optional_or::<usize>("data", "classes", 4);
    let per_class = reader.optional_or::<usize>("data", "per_class", 25);
    let count = reader.optional_or::<usize>("data", "count", 100);
    let rho = reader.optional_or::<f64>("data", "rho", 0.8);
    let scale = reader.optional_or::<f64>("data", "scale", 1.0);
    let mean = reader.optional_or::<f64>("data", "mean", 0.0);
    let total = reader.optional_or::<usize>("data", "total", 100);
    let minority_fraction = reader.optional_or::<f64>("data", "minority_fraction", 0.1);

    // surface precondition problems next to their keys
    match kind.as_deref() {
        Some("cyclic") => {
            if classes < 2 {
                reader.violation("data", "classes", "need at least 2 classes");
            }
            if per_class == 0 {
                reader.violation("data", "per_class", "must be positive");
            }
        }
        Some("gaussian") => {
            if count == 0 {
                reader.violation("data", "count", "must be positive");
            }
            if !rho.is_finite() || rho.abs() >= 1.0 {
                reader.violation("data", "rho", "must satisfy |rho| < 1");
            }
            if !scale.is_finite() || scale <= 0.0 {
                reader.violation("data", "scale", "must be positive");
            }
        }
        Some("imbalanced") => {
            if !minority_fraction.is_finite()
                || minority_fraction <= 0.0
                || minority_fraction >= 0.5
            {
                reader.violation("data", "minority_fraction", "must be in (0, 0.5)");
            }
            if total < 2 {
                reader.violation("data", "total", "need at least 2 samples");
            }
        }
        Some(other) => reader.violation(
            "data",
            "kind",
            format!("unknown kind '{other}' (cyclic|gaussian|imbalanced)"),
        ),
        None => {}
    }
    if !noise_level.is_finite() || noise_level < 0.0 {
        reader.violation("data", "noise_level", "must be >= 0");
    }
    let (run, kind) = reader.finish((run, kind))?;
    let (run, kind) = (run.unwrap(), kind.unwrap());

    let seed = derive_seed(run.master_seed, STAGE_DATA);
    let dataset = match kind.as_str() {
        "cyclic" => gen_cyclic_classes(classes, channels, length, per_class, noise_level, seed)?,
        "gaussian" => {
            let mu = TimeSeries::from_fn(channels, length, |_, _| mean)?;
            let spec = GaussianDataSpec::ar1(mu, rho, scale)?;
            gen_gaussian(&spec, count, seed)?
        }
        "imbalanced" => gen_imbalanced(
            minority_fraction,
            total,
            channels,
            length,
            noise_level,
            seed,
        )?,
        _ => unreachable!("kind validated above"),
    };
    let path = run.file("dataset", "dataset.csv");
    io::save_dataset(&path, &dataset)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Trains a denoiser on a dataset file and writes the model plus loss log.
pub fn cmd_train(raw: &RawConfig, seed_override: Option<u64>) -> anyhow::Result<()> {
    let mut reader = Reader::new(raw);
    let run = RunSection::read(&mut reader, seed_override);
    let schedule_cfg = ScheduleSection::read(&mut reader);
    let dataset_path = reader.required_string("train", "dataset");
    let steps = reader.optional_or::<usize>("train", "steps", 4000);
    let learning_rate = reader.optional_or::<f64>("train", "learning_rate", 0.02);
    let class_filter = reader.string("train", "class");
    let hidden1 = reader.optional_or::<usize>("predictor", "hidden1", 48);
    let hidden2 = reader.optional_or::<usize>("predictor", "hidden2", 48);
    if !(learning_rate > 0.0 && learning_rate.is_finite()) {
        reader.violation("train", "learning_rate", "must be positive and finite");
    }
    if hidden1 == 0 || hidden2 == 0 {
        reader.violation("predictor", "hidden1/hidden2", "must be positive");
    }
    let (run, schedule_cfg, dataset_path) = reader.finish((run, schedule_cfg, dataset_path))?;
    let (run, schedule_cfg, dataset_path) =
        (run.unwrap(), schedule_cfg.unwrap(), dataset_path.unwrap());

    let dataset = io::load_dataset(Path::new(&dataset_path))?;
    let samples: Vec<TimeSeries> = match &class_filter {
        None => dataset.samples().to_vec(),
        Some(name) => {
            let class = dataset
                .class_names()
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| {
                    anyhow!(
                        "class '{name}' not in dataset (have: {})",
                        dataset.class_names().join(", ")
                    )
                })?;
            dataset.class_samples(class).into_iter().cloned().collect()
        }
    };
    let (channels, length) = dataset.shape().expect("datasets are never empty");
    let schedule = build_schedule(
        schedule_cfg.t_max,
        schedule_cfg.beta_start,
        schedule_cfg.beta_end,
    )?;
    let config = DenoiserConfig {
        channels,
        length,
        hidden1,
        hidden2,
        t_max: schedule_cfg.t_max,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run.master_seed, STAGE_TRAIN));
    let mut model = DenoiserModel::random(config, &mut rng)?;
    let log = train(
        &mut model,
        &samples,
        &schedule,
        steps,
        learning_rate,
        &mut rng,
    )?;

    let model_path = run.file("model", "model.txt");
    io::save_model(&model_path, &model)?;
    let loss_path = run.file("loss_log", "loss.csv");
    io::write_atomic(&loss_path, &io::loss_log_to_csv(&log))?;
    println!("wrote {}", model_path.display());
    println!("wrote {}", loss_path.display());
    Ok(())
}

enum PredictorKind {
    Denoiser(DenoiserModel),
    Oracle(GaussianOracle),
}

impl PredictorKind {
    fn as_dyn(&self) -> &dyn EpsilonPredictor {
        match self {
            PredictorKind::Denoiser(m) => m,
            PredictorKind::Oracle(o) => o,
        }
    }

    fn shape(&self) -> (usize, usize) {
        match self {
            PredictorKind::Denoiser(m) => (m.config().channels, m.config().length),
            PredictorKind::Oracle(o) => o.spec().mu().shape(),
        }
    }
}

fn read_predictor(
    reader: &mut Reader<'_>,
    t_max: usize,
) -> Option<Result<PredictorKind, anyhow::Error>> {
    let kind = reader.required_string("predictor", "kind")?;
    match kind.as_str() {
        "denoiser" => {
            let path = reader.required_string("predictor", "model")?;
            Some(load_denoiser(Path::new(&path), t_max))
        }
        "oracle" => {
            let channels = reader.optional_or::<usize>("predictor", "channels", 1);
            let length = reader.optional_or::<usize>("predictor", "length", 32);
            let rho = reader.optional_or::<f64>("predictor", "rho", 0.8);
            let scale = reader.optional_or::<f64>("predictor", "scale", 1.0);
            let mean = reader.optional_or::<f64>("predictor", "mean", 0.0);
            if !rho.is_finite() || rho.abs() >= 1.0 {
                reader.violation("predictor", "rho", "must satisfy |rho| < 1");
                return None;
            }
            if !scale.is_finite() || scale <= 0.0 {
                reader.violation("predictor", "scale", "must be positive");
                return None;
            }
            Some(build_oracle(channels, length, rho, scale, mean))
        }
        other => {
            reader.violation(
                "predictor",
                "kind",
                format!("unknown kind '{other}' (denoiser|oracle)"),
            );
            None
        }
    }
}

fn load_denoiser(path: &Path, t_max: usize) -> anyhow::Result<PredictorKind> {
    let model = io::load_model(path)?;
    if model.config().t_max != t_max {
        bail!(
            "model {} embeds {} steps but [schedule].T = {t_max}",
            path.display(),
            model.config().t_max
        );
    }
    Ok(PredictorKind::Denoiser(model))
}

fn build_oracle(
    channels: usize,
    length: usize,
    rho: f64,
    scale: f64,
    mean: f64,
) -> anyhow::Result<PredictorKind> {
    let mu = TimeSeries::from_fn(channels, length, |_, _| mean)?;
    Ok(PredictorKind::Oracle(GaussianOracle::new(
        GaussianDataSpec::ar1(mu, rho, scale)?,
    )))
}

struct SampleSetup {
    run: RunSection,
    schedule: NoiseSchedule,
    plan: Option<SamplingPlan>, // None for ddpm
    predictor: PredictorKind,
    method: String,
    eta: f64,
    count: usize,
    label: String,
    record_states: bool,
    checksums: bool,
}

fn read_sample_setup(
    raw: &RawConfig,
    seed_override: Option<u64>,
    force_record: bool,
) -> anyhow::Result<SampleSetup> {
    let mut reader = Reader::new(raw);
    let run = RunSection::read(&mut reader, seed_override);
    let method = reader.required_string("sample", "method");
    let count = reader.optional_or::<usize>("sample", "count", 16);
    let eta = reader.optional::<f64>("sample", "eta");
    let label = reader
        .string("sample", "label")
        .unwrap_or_else(|| "sample".to_string());
    let record_states = reader.optional_or::<bool>("sample", "record_states", true);
    let checksums = reader.optional_or::<bool>("sample", "checksums", false);
    if count == 0 {
        reader.violation("sample", "count", "must be positive");
    }
    if checksums && !(record_states || force_record) {
        reader.violation(
            "sample",
            "checksums",
            "state checksums require record_states = true",
        );
    }
    if force_record && !record_states {
        reader.violation(
            "sample",
            "record_states",
            "per-step curves require recorded states",
        );
    }

    // method decides which schedule keys are required and what eta means
    let (schedule_cfg, plan_parts, eta) = match method.as_deref() {
        Some("ddpm") => {
            if let Some(e) = eta
                && e != 1.0
            {
                reader.violation("sample", "eta", "ddpm is the eta = 1 sampler");
            }
            (ScheduleSection::read(&mut reader), None, 1.0)
        }
        Some("ddim") => {
            let parts = ScheduleSection::read_with_plan(&mut reader);
            if let Some((_, _, n)) = &parts
                && *n != 1
            {
                reader.violation(
                    "schedule",
                    "sawtooth_n",
                    "method ddim runs a single pass; set sawtooth_n = 1",
                );
            }
            let e = eta.unwrap_or(0.0);
            if !(e >= 0.0 && e.is_finite()) {
                reader.violation("sample", "eta", "must be finite and >= 0");
            }
            match parts {
                Some((s, t, n)) => (Some(s), Some((t, n)), e),
                None => (None, None, e),
            }
        }
        Some("sawtooth") => {
            if let Some(e) = eta
                && e != 0.0
            {
                reader.violation(
                    "sample",
                    "eta",
                    "the sawtooth sampler is deterministic; eta must be 0",
                );
            }
            match ScheduleSection::read_with_plan(&mut reader) {
                Some((s, t, n)) => (Some(s), Some((t, n)), 0.0),
                None => (None, None, 0.0),
            }
        }
        Some(other) => {
            reader.violation(
                "sample",
                "method",
                format!("unknown method '{other}' (ddpm|ddim|sawtooth)"),
            );
            (None, None, 0.0)
        }
        None => (None, None, 0.0),
    };

    let predictor = schedule_cfg
        .as_ref()
        .and_then(|s| read_predictor(&mut reader, s.t_max));
    let (run, schedule_cfg, method, predictor) =
        reader.finish((run, schedule_cfg, method.unwrap_or_default(), predictor))?;
    let (run, schedule_cfg) = (run.unwrap(), schedule_cfg.unwrap());
    let predictor = predictor.unwrap()?;

    let (schedule, plan) = match plan_parts {
        Some((total, n)) => {
            let (schedule, plan) = build_sawtooth_plan(
                total,
                n,
                schedule_cfg.t_max,
                schedule_cfg.beta_start,
                schedule_cfg.beta_end,
            )?;
            (schedule, Some(plan))
        }
        None => (
            build_schedule(
                schedule_cfg.t_max,
                schedule_cfg.beta_start,
                schedule_cfg.beta_end,
            )?,
            None,
        ),
    };
    Ok(SampleSetup {
        run,
        schedule,
        plan,
        predictor,
        method,
        eta,
        count,
        label,
        record_states: record_states || force_record,
        checksums,
    })
}

fn run_sampler(setup: &SampleSetup) -> anyhow::Result<Vec<Trajectory>> {
    let (channels, length) = setup.predictor.shape();
    let predictor = setup.predictor.as_dyn();
    let mut trajectories = Vec::with_capacity(setup.count);
    for i in 0..setup.count {
        let mut rng =
            ChaCha8Rng::seed_from_u64(sample_seed(setup.run.master_seed, STAGE_SAMPLE, i as u64));
        let x_t = TimeSeries::standard_normal(channels, length, &mut rng)?;
        let started = Instant::now();
        let mut trajectory = match setup.method.as_str() {
            "ddpm" => ddpm_sample(
                &x_t,
                predictor,
                &setup.schedule,
                &mut rng,
                setup.record_states,
            )?,
            "ddim" => ddim_sample(
                &x_t,
                predictor,
                &setup.schedule,
                setup.plan.as_ref().expect("ddim carries a plan"),
                setup.eta,
                &mut rng,
                setup.record_states,
            )?,
            "sawtooth" => sawtooth_sample(
                &x_t,
                predictor,
                &setup.schedule,
                setup.plan.as_ref().expect("sawtooth carries a plan"),
                &mut rng,
                setup.record_states,
            )?,
            other => bail!("unknown method '{other}'"),
        };
        trajectory.set_wall_time(started.elapsed());
        trajectories.push(trajectory);
    }
    Ok(trajectories)
}

/// Draws seeded initial states, runs the configured sampler and writes the
/// generated samples plus the trajectory log.
pub fn cmd_sample(raw: &RawConfig, seed_override: Option<u64>) -> anyhow::Result<()> {
    let setup = read_sample_setup(raw, seed_override, false)?;
    let trajectories = run_sampler(&setup)?;

    let outputs: Vec<TimeSeries> = trajectories.iter().map(|t| t.output().clone()).collect();
    let labels = vec![0usize; outputs.len()];
    let dataset = LabeledDataset::new(outputs, labels, vec![setup.label.clone()])?;
    let samples_path = setup.run.file("samples", "samples.csv");
    io::save_dataset(&samples_path, &dataset)?;
    let trajectory_path = setup.run.file("trajectory", "trajectory.csv");
    io::save_trajectories(&trajectory_path, &trajectories, setup.checksums)?;
    println!("wrote {}", samples_path.display());
    println!("wrote {}", trajectory_path.display());
    Ok(())
}

/// Re-runs sampling with state recording on and writes one per-step
/// similarity curve CSV per generated sample.
pub fn cmd_eval_curve(raw: &RawConfig, seed_override: Option<u64>) -> anyhow::Result<()> {
    let real_path = {
        let mut reader = Reader::new(raw);
        let p = reader.required_string("eval-curve", "real");
        reader.finish(p)?.unwrap()
    };
    let setup = read_sample_setup(raw, seed_override, true)?;
    let real = io::load_dataset(Path::new(&real_path))?;
    let trajectories = run_sampler(&setup)?;

    let prefix = setup
        .run
        .file("curve_prefix", "curve")
        .to_string_lossy()
        .into_owned();
    for (i, trajectory) in trajectories.iter().enumerate() {
        let curve = per_step_curve(trajectory, real.samples())?;
        let path = std::path::PathBuf::from(format!("{prefix}_{i:04}.csv"));
        io::save_curve(&path, &curve)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Scores train-on-synthetic / test-on-real transfer of two dataset files.
pub fn cmd_tstr(raw: &RawConfig, seed_override: Option<u64>) -> anyhow::Result<()> {
    let mut reader = Reader::new(raw);
    let run = RunSection::read(&mut reader, seed_override);
    let synthetic_path = reader.required_string("tstr", "synthetic");
    let real_path = reader.required_string("tstr", "real");
    let (run, synthetic_path, real_path) = reader.finish((run, synthetic_path, real_path))?;
    let (run, synthetic_path, real_path) =
        (run.unwrap(), synthetic_path.unwrap(), real_path.unwrap());

    let synthetic = io::load_dataset(Path::new(&synthetic_path))?;
    let real_named = io::load_dataset(Path::new(&real_path))?;
    // remap test labels into the training id space by class name
    let mut remapped_labels = Vec::with_capacity(real_named.len());
    for &label in real_named.labels() {
        let name = &real_named.class_names()[label];
        let id = synthetic
            .class_names()
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| anyhow!("test class '{name}' absent from synthetic training set"))?;
        remapped_labels.push(id);
    }
    let real = LabeledDataset::new(
        real_named.samples().to_vec(),
        remapped_labels,
        synthetic.class_names().to_vec(),
    )?;

    let confusion = tstr_confusion(&synthetic, &real)?;
    let macro_f1 = macro_f1_from_confusion(&confusion);
    let gmean = gmean_from_confusion(&confusion);
    let chance = 1.0 / synthetic.class_count() as f64;

    let mut report = io::Report::new("tstr-report");
    report
        .field("classes", synthetic.class_count())
        .field("synthetic_samples", synthetic.len())
        .field("real_samples", real.len())
        .float_field("macro_f1", macro_f1)
        .float_field("gmean", gmean)
        .float_field("chance_level", chance)
        .float_field("margin_over_chance", macro_f1 - chance);
    let path = run.file("summary", "tstr.txt");
    report.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Times the full-length ancestral baseline against the sawtooth sampler on
/// the same freshly initialized denoiser and reports NFE and wall ratios.
pub fn cmd_bench(raw: &RawConfig, seed_override: Option<u64>) -> anyhow::Result<()> {
    let mut reader = Reader::new(raw);
    let run = RunSection::read(&mut reader, seed_override);
    let plan_parts = ScheduleSection::read_with_plan(&mut reader);
    let count = reader.optional_or::<usize>("bench", "count", 8);
    let channels = reader.optional_or::<usize>("predictor", "channels", 1);
    let length = reader.optional_or::<usize>("predictor", "length", 32);
    let hidden1 = reader.optional_or::<usize>("predictor", "hidden1", 64);
    let hidden2 = reader.optional_or::<usize>("predictor", "hidden2", 64);
    if count == 0 {
        reader.violation("bench", "count", "must be positive");
    }
    let (run, plan_parts) = reader.finish((run, plan_parts))?;
    let (run, (schedule_cfg, total_steps, sawtooth_n)) = (run.unwrap(), plan_parts.unwrap());

    let (schedule, plan) = build_sawtooth_plan(
        total_steps,
        sawtooth_n,
        schedule_cfg.t_max,
        schedule_cfg.beta_start,
        schedule_cfg.beta_end,
    )?;
    let config = DenoiserConfig {
        channels,
        length,
        hidden1,
        hidden2,
        t_max: schedule_cfg.t_max,
    };
    let mut model_rng = ChaCha8Rng::seed_from_u64(derive_seed(run.master_seed, STAGE_BENCH_MODEL));
    let model = DenoiserModel::random(config, &mut model_rng)?;

    let ddpm_started = Instant::now();
    let mut nfe_ddpm = 0usize;
    for i in 0..count {
        let mut rng =
            ChaCha8Rng::seed_from_u64(sample_seed(run.master_seed, STAGE_BENCH_DDPM, i as u64));
        let x_t = TimeSeries::standard_normal(channels, length, &mut rng)?;
        let trajectory = ddpm_sample(&x_t, &model, &schedule, &mut rng, false)?;
        nfe_ddpm = trajectory.nfe();
    }
    let wall_ddpm = ddpm_started.elapsed();

    let saw_started = Instant::now();
    let mut nfe_sawtooth = 0usize;
    for i in 0..count {
        let mut rng =
            ChaCha8Rng::seed_from_u64(sample_seed(run.master_seed, STAGE_BENCH_SAWTOOTH, i as u64));
        let x_t = TimeSeries::standard_normal(channels, length, &mut rng)?;
        let trajectory = sawtooth_sample(&x_t, &model, &schedule, &plan, &mut rng, false)?;
        nfe_sawtooth = trajectory.nfe();
    }
    let wall_sawtooth = saw_started.elapsed();

    let mut report = io::Report::new("bench-report");
    report
        .field("T", schedule.t_max())
        .field("total_steps", plan.total_steps())
        .field("sawtooth_n", plan.iterations())
        .field("count", count)
        .field("channels", channels)
        .field("length", length)
        .field("hidden1", hidden1)
        .field("hidden2", hidden2)
        .field("nfe_ddpm", nfe_ddpm)
        .field("nfe_sawtooth", nfe_sawtooth)
        .float_field("nfe_ratio", nfe_ddpm as f64 / nfe_sawtooth as f64)
        .float_field("wall_ddpm_s", wall_ddpm.as_secs_f64())
        .float_field("wall_sawtooth_s", wall_sawtooth.as_secs_f64())
        .float_field(
            "wall_ratio",
            wall_ddpm.as_secs_f64() / wall_sawtooth.as_secs_f64(),
        );
    let path = run.file("report", "bench.txt");
    report.save(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Runs the finite-difference gradient check on freshly seeded models and
/// reports the worst relative error. Fails (non-zero exit) if it exceeds
/// the 1e-4 threshold.
pub fn cmd_gradcheck(raw: &RawConfig, seed_override: Option<u64>) -> anyhow::Result<()> {
    let mut reader = Reader::new(raw);
    let run = RunSection::read(&mut reader, seed_override);
    let models = reader.optional_or::<usize>("gradcheck", "models", 5);
    let probes = reader.optional_or::<usize>("gradcheck", "probes", 10);
    let channels = reader.optional_or::<usize>("gradcheck", "channels", 2);
    let length = reader.optional_or::<usize>("gradcheck", "length", 4);
    let hidden1 = reader.optional_or::<usize>("gradcheck", "hidden1", 6);
    let hidden2 = reader.optional_or::<usize>("gradcheck", "hidden2", 5);
    let t_max = reader.optional_or::<usize>("gradcheck", "t_max", 8);
    if models == 0 || probes == 0 {
        reader.violation("gradcheck", "models/probes", "must be positive");
    }
    let run = reader.finish(run)?.unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(run.master_seed, STAGE_GRADCHECK));
    let config = DenoiserConfig {
        channels,
        length,
        hidden1,
        hidden2,
        t_max,
    };
    let mut max_rel_err = 0.0f64;
    for _ in 0..models {
        let model = DenoiserModel::random(config.clone(), &mut rng)?;
        let err = finite_difference_max_rel_error(&model, probes, &mut rng)?;
        max_rel_err = max_rel_err.max(err);
    }
    let pass = max_rel_err < GRADCHECK_THRESHOLD;

    let mut report = io::Report::new("gradcheck-report");
    report
        .field("models", models)
        .field("probes", probes)
        .field("params_per_model", config.param_count())
        .float_field("fd_step", FD_STEP)
        .float_field("max_rel_err", max_rel_err)
        .float_field("threshold", GRADCHECK_THRESHOLD)
        .field("pass", pass);
    let path = run.file("report", "gradcheck.txt");
    report.save(&path)?;
    println!("wrote {}", path.display());
    if !pass {
        bail!("gradient check failed: max_rel_err = {max_rel_err:e} >= {GRADCHECK_THRESHOLD:e}");
    }
    Ok(())
}

/// Convenience used by tests: evaluate both TSTR metrics directly.
pub fn tstr_metrics(
    synthetic: &LabeledDataset,
    real: &LabeledDataset,
) -> anyhow::Result<(f64, f64)> {
    Ok((
        tstr_evaluate(synthetic, real, TstrMetric::MacroF1)?,
        tstr_evaluate(synthetic, real, TstrMetric::GMean)?,
    ))
}
