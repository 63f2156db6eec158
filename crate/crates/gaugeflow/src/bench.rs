//! Sweeps over (N, model, seed) and the metrics they produce.

use std::collections::BTreeMap;
use std::str::FromStr;
use std::time::Instant;

use gaugeflow_core::flow::{build_model, model_param_count};
use gaugeflow_core::fm::{eval_loss, train_with, TrainConfig};
use gaugeflow_core::gmm::{
    sample_dataset, Dataset, GmmSpec, Split, MAX_DIM, MIN_DIM, PAPER_COMPONENTS, PAPER_TEST_COUNT, PAPER_TRAIN_COUNT,
};
use gaugeflow_core::{FlowModel, ModelKind, TrainableField};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metrics::{canonical_sort, MetricsRecord, SplitTag};

/// Seeds of the train and test sets generated for run seed `seed`.
pub fn data_seeds(seed: u64) -> (u64, u64) {
    (seed.wrapping_mul(2), seed.wrapping_mul(2).wrapping_add(1))
}

/// Train and test sets for one (spec, seed) pair.
pub fn generate_split(spec: &GmmSpec, train_count: usize, test_count: usize, seed: u64) -> Result<(Dataset, Dataset)> {
    let (s_train, s_test) = data_seeds(seed);
    Ok((
        sample_dataset(spec, train_count, s_train, Split::Train)?,
        sample_dataset(spec, test_count, s_test, Split::Test)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Desk,
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!(
                "unknown profile `{other}` (expected desk or paper)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataParams {
    pub components: usize,
    pub train_count: usize,
    pub test_count: usize,
    pub spread: f64,
    pub cov_scale: f64,
}

impl Profile {
    pub fn data(self) -> DataParams {
        let (components, train_count, test_count) = match self {
            Profile::Desk => (300, 5000, 2000),
            Profile::Paper => (PAPER_COMPONENTS, PAPER_TRAIN_COUNT, PAPER_TEST_COUNT),
        };
        DataParams {
            components,
            train_count,
            test_count,
            spread: gaugeflow_core::gmm::DEFAULT_SPREAD,
            cov_scale: gaugeflow_core::gmm::DEFAULT_COV_SCALE,
        }
    }

    pub fn train(self) -> TrainConfig {
        TrainConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dims: Vec<usize>,
    pub models: Vec<ModelKind>,
    pub seeds: Vec<u64>,
    pub data: DataParams,
    /// Its `seed` field is replaced by each run's seed.
    pub train: TrainConfig,
    pub eval_draws: usize,
    /// Worker threads; 0 lets rayon decide.
    pub jobs: usize,
    /// When false every `wall_ms` is written as 0 so the CSV is a pure
    /// function of the configuration.
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn new(profile: Profile, dims: Vec<usize>, models: Vec<ModelKind>, seeds: Vec<u64>) -> Self {
        ExperimentConfig {
            dims,
            models,
            seeds,
            data: profile.data(),
            train: profile.train(),
            eval_draws: 1,
            jobs: 0,
            record_wall_time: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() {
            return Err(Error::Config("no dims given".into()));
        }
        if let Some(n) = self.dims.iter().find(|n| !(MIN_DIM..=MAX_DIM).contains(*n)) {
            return Err(Error::Config(format!("dim {n} outside [{MIN_DIM}, {MAX_DIM}]")));
        }
        if self.models.is_empty() {
            return Err(Error::Config("no models given".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds given".into()));
        }
        for (what, dup) in [
            ("dim", has_duplicates(&self.dims)),
            ("model", has_duplicates(&self.models)),
            ("seed", has_duplicates(&self.seeds)),
        ] {
            if dup {
                return Err(Error::Config(format!("repeated {what}")));
            }
        }
        if self.data.components == 0 || self.data.train_count == 0 || self.data.test_count == 0 {
            return Err(Error::Config("components and point counts must be positive".into()));
        }
        if self.eval_draws == 0 {
            return Err(Error::Config("eval draws must be positive".into()));
        }
        self.train.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.train.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

fn has_duplicates<T: Ord>(xs: &[T]) -> bool {
    let mut v: Vec<&T> = xs.iter().collect();
    v.sort();
    v.windows(2).any(|w| w[0] == w[1])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunFailure {
    pub model: ModelKind,
    pub n_dim: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    /// Canonically sorted.
    pub records: Vec<MetricsRecord>,
    pub failures: Vec<RunFailure>,
}

/// Trains one model, logging a train and a test row per epoch.
pub fn run_single(
    kind: ModelKind,
    train_data: &Dataset,
    test_data: &Dataset,
    cfg: &TrainConfig,
    eval_draws: usize,
    record_wall_time: bool,
) -> Result<(FlowModel, Vec<MetricsRecord>)> {
    let n_dim = train_data.n_dim();
    let mut model = build_model(kind, n_dim, cfg.seed)?;
    let params = model.param_count();
    let start = Instant::now();
    let mut rows = Vec::with_capacity(2 * cfg.epochs);
    let mut eval_err = None;
    let row = |epoch, split, loss, start: &Instant| MetricsRecord {
        model: kind.name().to_string(),
        n_dim,
        seed: cfg.seed,
        epoch,
        split,
        loss,
        params,
        wall_ms: if record_wall_time {
            start.elapsed().as_millis() as u64
        } else {
            0
        },
    };
    train_with(&mut model, train_data, cfg, |stats, m| {
        rows.push(row(stats.epoch, SplitTag::Train, stats.train_loss, &start));
        match eval_loss(m, test_data, cfg.seed, eval_draws) {
            Ok(loss) => rows.push(row(stats.epoch, SplitTag::Test, loss, &start)),
            Err(e) => {
                eval_err.get_or_insert(e);
            }
        }
    })?;
    if let Some(e) = eval_err {
        return Err(e.into());
    }
    Ok((model, rows))
}

pub fn run_benchmark(cfg: &ExperimentConfig) -> Result<BenchOutcome> {
    cfg.validate()?;
    let mut data = BTreeMap::new();
    for &n in &cfg.dims {
        let d = &cfg.data;
        let spec = GmmSpec::new(n, d.components, d.spread, d.cov_scale)?;
        for &seed in &cfg.seeds {
            data.insert((n, seed), generate_split(&spec, d.train_count, d.test_count, seed)?);
        }
    }
    let tasks: Vec<(usize, ModelKind, u64)> = cfg
        .dims
        .iter()
        .flat_map(|&n| {
            cfg.models
                .iter()
                .flat_map(move |&m| cfg.seeds.iter().map(move |&s| (n, m, s)))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    let results: Vec<_> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(n, kind, seed)| {
                let (train_data, test_data) = &data[&(n, seed)];
                let tc = TrainConfig { seed, ..cfg.train };
                let out = run_single(kind, train_data, test_data, &tc, cfg.eval_draws, cfg.record_wall_time);
                ((n, kind, seed), out)
            })
            .collect()
    });
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for ((n_dim, model, seed), out) in results {
        match out {
            Ok((_, rows)) => records.extend(rows),
            Err(e) => failures.push(RunFailure {
                model,
                n_dim,
                seed,
                message: e.to_string(),
            }),
        }
    }
    canonical_sort(&mut records);
    Ok(BenchOutcome { records, failures })
}

/// Checks every row's params column against the closed-form count.
pub fn check_param_counts(records: &[MetricsRecord]) -> Result<()> {
    for r in records {
        let kind: ModelKind = r.model.parse().map_err(|e| Error::Format(format!("{e}")))?;
        let expected = model_param_count(kind, r.n_dim);
        if r.params != expected {
            return Err(Error::ParamMismatch {
                model: r.model.clone(),
                n_dim: r.n_dim,
                expected,
                found: r.params,
            });
        }
    }
    Ok(())
}
