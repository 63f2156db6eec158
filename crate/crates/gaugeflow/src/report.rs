//! Final-epoch losses normalised against a baseline model.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bench::check_param_counts;
use crate::error::{Error, Result};
use crate::metrics::{read_metrics, MetricsRecord, SplitTag};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedReport {
    pub baseline: String,
    pub aggregation: String,
    pub dims: Vec<DimReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimReport {
    pub n_dim: usize,
    pub params: BTreeMap<String, usize>,
    pub train: BTreeMap<String, ModelSummary>,
    pub test: BTreeMap<String, ModelSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSummary {
    /// Median loss divided by the baseline's median loss.
    pub normalized: f64,
    pub median_loss: f64,
    pub min_loss: f64,
    pub max_loss: f64,
    pub final_epoch: usize,
    pub seeds: Vec<u64>,
}

/// Seeds, final epochs and final losses of one model, index-aligned.
type SeedRuns = (Vec<u64>, Vec<usize>, Vec<f64>);

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Per (N, split, model): the last-epoch loss of each seed, aggregated by
/// median and divided by the baseline's median for the same (N, split).
pub fn normalize_report(records: &[MetricsRecord], baseline: &str) -> Result<NormalizedReport> {
    check_param_counts(records)?;
    // (n, split, model, seed) -> (epoch, loss) of the latest epoch.
    let mut last: BTreeMap<(usize, SplitTag, &str, u64), (usize, f64)> = BTreeMap::new();
    for r in records {
        let e = last
            .entry((r.n_dim, r.split, r.model.as_str(), r.seed))
            .or_insert((r.epoch, r.loss));
        if r.epoch >= e.0 {
            *e = (r.epoch, r.loss);
        }
    }
    let dims: BTreeSet<usize> = records.iter().map(|r| r.n_dim).collect();
    let mut out = Vec::new();
    for n in dims {
        let params = records
            .iter()
            .filter(|r| r.n_dim == n)
            .map(|r| (r.model.clone(), r.params))
            .collect();
        let mut per_split = BTreeMap::new();
        for split in [SplitTag::Train, SplitTag::Test] {
            let mut groups: BTreeMap<&str, SeedRuns> = BTreeMap::new();
            for (&(_, _, model, seed), &(epoch, loss)) in last
                .range((n, split, "", 0)..)
                .take_while(|(k, _)| k.0 == n && k.1 == split)
            {
                let g = groups.entry(model).or_default();
                g.0.push(seed);
                g.1.push(epoch);
                g.2.push(loss);
            }
            if groups.is_empty() {
                per_split.insert(split, BTreeMap::new());
                continue;
            }
            let base = groups.get(baseline).ok_or_else(|| Error::MissingBaseline {
                baseline: baseline.to_string(),
                n_dim: n,
                split: split.name().to_string(),
            })?;
            let base_median = median(&base.2);
            let summaries = groups
                .iter()
                .map(|(model, (seeds, epochs, losses))| {
                    let med = median(losses);
                    let summary = ModelSummary {
                        normalized: if *model == baseline { 1.0 } else { med / base_median },
                        median_loss: med,
                        min_loss: losses.iter().copied().fold(f64::INFINITY, f64::min),
                        max_loss: losses.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                        final_epoch: *epochs.iter().max().unwrap(),
                        seeds: seeds.clone(),
                    };
                    (model.to_string(), summary)
                })
                .collect();
            per_split.insert(split, summaries);
        }
        out.push(DimReport {
            n_dim: n,
            params,
            train: per_split.remove(&SplitTag::Train).unwrap_or_default(),
            test: per_split.remove(&SplitTag::Test).unwrap_or_default(),
        });
    }
    Ok(NormalizedReport {
        baseline: baseline.to_string(),
        aggregation: "median".to_string(),
        dims: out,
    })
}

pub fn report_from_file(metrics: impl AsRef<Path>, baseline: &str) -> Result<NormalizedReport> {
    normalize_report(&read_metrics(metrics)?, baseline)
}
