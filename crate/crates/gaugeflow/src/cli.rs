use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use gaugeflow_core::flow::{sample_points, Integrator};
use gaugeflow_core::fm::{eval_loss_samples, mean_and_std_err, TrainConfig, DEFAULT_T_CLAMP};
use gaugeflow_core::gmm::{Dataset, GmmSpec, DEFAULT_COV_SCALE, DEFAULT_SPREAD};
use gaugeflow_core::{FlowModel, ModelKind, Prng, TrainableField, VelocityField};
use serde_json::json;

use crate::bench::{data_seeds, generate_split, run_benchmark, run_single, ExperimentConfig, Profile};
use crate::checkpoint::{load_checkpoint, save_checkpoint};
use crate::dataset_io::{load_dataset, save_dataset};
use crate::diagnose::{diagnose, DiagnoseOptions};
use crate::metrics::{append_metrics, save_metrics, MetricsRecord, SplitTag};
use crate::report::report_from_file;

#[derive(Debug, Parser)]
#[command(
    name = "gaugeflow",
    version,
    about = "Gauge flow models: data, training, evaluation and benchmarks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample the Gaussian-mixture benchmark into DIR/train.gfmd and DIR/test.gfmd.
    GenData(GenDataArgs),
    /// Train one model on a dataset file and write its checkpoint.
    Train(TrainArgs),
    /// Held-out CFM loss of a checkpoint on a dataset file.
    Eval(EvalArgs),
    /// Integrate the flow from Gaussian noise and write the end points.
    Sample(SampleArgs),
    /// Run a sweep over dims, models and seeds into one metrics CSV.
    Bench(BenchArgs),
    /// Normalise final-epoch losses against a baseline model.
    Report(ReportArgs),
    /// Structural diagnostics of a gauge-model checkpoint.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Args)]
pub struct GenDataArgs {
    #[arg(long = "dim")]
    pub dim: usize,
    #[arg(long, default_value_t = 3000)]
    pub components: usize,
    #[arg(long = "train-count", default_value_t = 15_000)]
    pub train_count: usize,
    #[arg(long = "test-count", default_value_t = 5_000)]
    pub test_count: usize,
    #[arg(long, default_value_t = DEFAULT_SPREAD)]
    pub spread: f64,
    #[arg(long = "cov-scale", default_value_t = DEFAULT_COV_SCALE)]
    pub cov_scale: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub model: ModelKind,
    #[arg(long)]
    pub data: PathBuf,
    /// Held-out set; when given, a test row is logged after every epoch.
    #[arg(long = "test-data")]
    pub test_data: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub epochs: usize,
    #[arg(long, default_value_t = 256)]
    pub batch: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "t-clamp", default_value_t = DEFAULT_T_CLAMP)]
    pub t_clamp: f64,
    #[arg(long)]
    pub ckpt: PathBuf,
    /// Rows are appended; the header is written for a new file.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
    #[arg(long = "record-wall-time")]
    pub record_wall_time: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub draws: usize,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub count: usize,
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value = "rk4")]
    pub integrator: Integrator,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "3,4,8,16,32")]
    pub dims: Vec<usize>,
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "gauge-theta,gauge-nu,plain-baseline,plain-matched"
    )]
    pub models: Vec<ModelKind>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    pub seeds: Vec<u64>,
    #[arg(long, default_value = "desk")]
    pub profile: Profile,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the profile's component count.
    #[arg(long)]
    pub components: Option<usize>,
    #[arg(long = "train-count")]
    pub train_count: Option<usize>,
    #[arg(long = "test-count")]
    pub test_count: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long = "eval-draws", default_value_t = 1)]
    pub eval_draws: usize,
    /// Worker threads (0 = one per core).
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
    /// Write real timings instead of 0 into `wall_ms` (breaks byte-identical reruns).
    #[arg(long = "record-wall-time")]
    pub record_wall_time: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub metrics: PathBuf,
    #[arg(long, default_value = "gauge-theta")]
    pub baseline: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub probes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long = "fd-step", default_value_t = gaugeflow_core::gauge::DEFAULT_FD_STEP)]
    pub fd_step: f64,
    /// Include every F_{mu nu} matrix, not just its norm.
    #[arg(long = "full-matrices")]
    pub full_matrices: bool,
}

/// Parses `args`, runs the command and maps failures to a nonzero exit.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Sample(a) => sample(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
        Command::Diagnose(a) => diagnose_cmd(a),
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn gen_data(a: GenDataArgs) -> anyhow::Result<()> {
    if a.train_count == 0 || a.test_count == 0 {
        bail!("--train-count and --test-count must be positive");
    }
    let spec = GmmSpec::new(a.dim, a.components, a.spread, a.cov_scale)?;
    let (train, test) = generate_split(&spec, a.train_count, a.test_count, a.seed)?;
    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    save_dataset(&train, a.out.join("train.gfmd"))?;
    save_dataset(&test, a.out.join("test.gfmd"))?;
    let (train_seed, test_seed) = data_seeds(a.seed);
    let manifest = json!({
        "n_dim": a.dim,
        "components": a.components,
        "spread": a.spread,
        "cov_scale": a.cov_scale,
        "seed": a.seed,
        "spec_hash": format!("{:016x}", spec.fingerprint()),
        "files": {
            "train.gfmd": { "count": a.train_count, "seed": train_seed },
            "test.gfmd": { "count": a.test_count, "seed": test_seed },
        },
    });
    write_json(&a.out.join("manifest.json"), &manifest)
}

fn load_data(path: &Path) -> anyhow::Result<Dataset> {
    load_dataset(path).with_context(|| format!("loading dataset {}", path.display()))
}

fn train(a: TrainArgs) -> anyhow::Result<()> {
    let data = load_data(&a.data)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch,
        learning_rate: a.lr,
        seed: a.seed,
        t_clamp: a.t_clamp,
        deterministic: true,
    };
    cfg.validate()?;
    if a.lr <= 0.0 {
        bail!("--lr must be positive");
    }
    let test = match &a.test_data {
        Some(p) => Some(load_data(p)?),
        None => None,
    };
    let (model, rows) = match &test {
        Some(test) => run_single(a.model, &data, test, &cfg, 1, a.record_wall_time)?,
        None => {
            let mut model = FlowModel::build(a.model, data.n_dim(), a.seed)?;
            let params = model.param_count();
            let start = Instant::now();
            let mut rows = Vec::with_capacity(cfg.epochs);
            gaugeflow_core::fm::train_with(&mut model, &data, &cfg, |e, _| {
                rows.push(MetricsRecord {
                    model: a.model.name().to_string(),
                    n_dim: data.n_dim(),
                    seed: a.seed,
                    epoch: e.epoch,
                    split: SplitTag::Train,
                    loss: e.train_loss,
                    params,
                    wall_ms: if a.record_wall_time {
                        start.elapsed().as_millis() as u64
                    } else {
                        0
                    },
                })
            })?;
            (model, rows)
        }
    };
    save_checkpoint(&model, &a.ckpt).with_context(|| format!("writing checkpoint {}", a.ckpt.display()))?;
    if let Some(path) = &a.metrics {
        append_metrics(path, &rows).with_context(|| format!("writing metrics {}", path.display()))?;
    }
    Ok(())
}

fn load_model(path: &Path) -> anyhow::Result<FlowModel> {
    load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn eval(a: EvalArgs) -> anyhow::Result<()> {
    let model = load_model(&a.ckpt)?;
    let data = load_data(&a.data)?;
    let samples = eval_loss_samples(&model, &data, a.seed, a.draws)?;
    let (loss, std_err) = mean_and_std_err(&samples);
    let out = json!({
        "model_kind": model.kind().name(),
        "n_dim": model.n_dim(),
        "points": data.len(),
        "draws": a.draws,
        "seed": a.seed,
        "loss": loss,
        "std_err": std_err,
    });
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{}", serde_json::to_string(&out)?)?;
    Ok(())
}

fn sample(a: SampleArgs) -> anyhow::Result<()> {
    if a.count == 0 {
        bail!("--count must be positive");
    }
    let model = load_model(&a.ckpt)?;
    let mut rng = Prng::new(a.seed);
    let points = sample_points(&model, a.count, a.steps, a.integrator, &mut rng)?;
    let ds = Dataset::new(model.n_dim(), points)?;
    save_dataset(&ds, &a.out).with_context(|| format!("writing samples {}", a.out.display()))
}

fn bench(a: BenchArgs) -> anyhow::Result<()> {
    let mut cfg = ExperimentConfig::new(a.profile, a.dims, a.models, a.seeds);
    if let Some(k) = a.components {
        cfg.data.components = k;
    }
    if let Some(n) = a.train_count {
        cfg.data.train_count = n;
    }
    if let Some(n) = a.test_count {
        cfg.data.test_count = n;
    }
    if let Some(e) = a.epochs {
        cfg.train.epochs = e;
    }
    if let Some(b) = a.batch {
        cfg.train.batch_size = b;
    }
    if let Some(lr) = a.lr {
        cfg.train.learning_rate = lr;
    }
    cfg.eval_draws = a.eval_draws;
    cfg.jobs = a.jobs;
    cfg.record_wall_time = a.record_wall_time;
    let outcome = run_benchmark(&cfg)?;
    save_metrics(&a.out, &outcome.records).with_context(|| format!("writing metrics {}", a.out.display()))?;
    if !outcome.failures.is_empty() {
        for f in &outcome.failures {
            eprintln!(
                "run failed: model={} n_dim={} seed={}: {}",
                f.model, f.n_dim, f.seed, f.message
            );
        }
        bail!("{} of the benchmark runs failed", outcome.failures.len());
    }
    Ok(())
}

fn report(a: ReportArgs) -> anyhow::Result<()> {
    let report = report_from_file(&a.metrics, &a.baseline)
        .with_context(|| format!("building report from {}", a.metrics.display()))?;
    write_json(&a.out, &report)
}

fn diagnose_cmd(a: DiagnoseArgs) -> anyhow::Result<()> {
    let model = load_model(&a.ckpt)?;
    let opts = DiagnoseOptions {
        probes: a.probes,
        seed: a.seed,
        scale: a.scale,
        fd_step: a.fd_step,
        full_matrices: a.full_matrices,
    };
    write_json(&a.out, &diagnose(&model, &opts)?)
}
