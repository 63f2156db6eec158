use std::fs::{File, OpenOptions};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const METRICS_HEADER: [&str; 8] = ["model", "n_dim", "seed", "epoch", "split", "loss", "params", "wall_ms"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Test,
}

impl SplitTag {
    pub fn name(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Test => "test",
        }
    }
}

/// One benchmark observation; one CSV row.
///
/// `train` rows carry the running mean of the batch losses over the epoch,
/// `test` rows the held-out CFM loss evaluated at the end of the epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub model: String,
    pub n_dim: usize,
    pub seed: u64,
    pub epoch: usize,
    pub split: SplitTag,
    pub loss: f64,
    pub params: usize,
    pub wall_ms: u64,
}

impl MetricsRecord {
    pub fn validate(&self) -> Result<()> {
        if !self.loss.is_finite() {
            return Err(Error::Format(format!("non-finite loss in row {self:?}")));
        }
        if self.params == 0 {
            return Err(Error::Format(format!("zero params in row {self:?}")));
        }
        Ok(())
    }

    fn sort_key(&self) -> (usize, &str, u64, usize, SplitTag) {
        (self.n_dim, &self.model, self.seed, self.epoch, self.split)
    }
}

/// Canonical row order: by N, model name, seed, epoch, then train before test.
pub fn canonical_sort(records: &mut [MetricsRecord]) {
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

pub fn write_metrics<W: std::io::Write>(out: W, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        r.validate()?;
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(METRICS_HEADER)?;
    }
    w.flush().map_err(|e| Error::Format(format!("flushing metrics: {e}")))?;
    Ok(())
}

pub fn metrics_to_string(records: &[MetricsRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_metrics(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

pub fn save_metrics(path: impl AsRef<Path>, records: &[MetricsRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_metrics(file, records)
}

/// Appends rows, writing the header only when the file is new or empty.
pub fn append_metrics(path: impl AsRef<Path>, records: &[MetricsRecord]) -> Result<()> {
    let path = path.as_ref();
    let has_rows = path.metadata().map(|m| m.len() > 0).unwrap_or(false);
    if has_rows {
        read_metrics(path)?;
    }
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut w = csv::WriterBuilder::new().has_headers(!has_rows).from_writer(file);
    for r in records {
        r.validate()?;
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn parse_metrics<R: std::io::Read>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != METRICS_HEADER {
        return Err(Error::Format(format!(
            "metrics header is `{}`, expected `{}`",
            header.join(","),
            METRICS_HEADER.join(",")
        )));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let r: MetricsRecord = row?;
        r.validate()?;
        out.push(r);
    }
    Ok(out)
}

pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_metrics(file)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: &str, n: usize, seed: u64, epoch: usize, split: SplitTag) -> MetricsRecord {
        MetricsRecord {
            model: model.into(),
            n_dim: n,
            seed,
            epoch,
            split,
            loss: 0.1 + epoch as f64,
            params: 10,
            wall_ms: 0,
        }
    }

    #[test]
    fn header_is_exact() {
        let text = metrics_to_string(&[row("gauge-nu", 3, 1, 1, SplitTag::Test)]).unwrap();
        assert_eq!(
            text,
            "model,n_dim,seed,epoch,split,loss,params,wall_ms\ngauge-nu,3,1,1,test,1.1,10,0\n"
        );
        assert_eq!(
            metrics_to_string(&[]).unwrap(),
            "model,n_dim,seed,epoch,split,loss,params,wall_ms\n"
        );
    }

    #[test]
    fn round_trip_preserves_bits() {
        let mut r = row("plain-baseline", 8, 2, 3, SplitTag::Train);
        r.loss = 1.234_567_890_123_456_7;
        let back = parse_metrics(metrics_to_string(&[r.clone()]).unwrap().as_bytes()).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn canonical_order() {
        let mut rows = vec![
            row("gauge-theta", 4, 1, 1, SplitTag::Test),
            row("gauge-theta", 4, 1, 1, SplitTag::Train),
            row("gauge-nu", 4, 1, 2, SplitTag::Train),
            row("gauge-nu", 3, 2, 1, SplitTag::Train),
            row("gauge-nu", 4, 1, 10, SplitTag::Train),
        ];
        canonical_sort(&mut rows);
        let keys: Vec<_> = rows
            .iter()
            .map(|r| (r.n_dim, r.model.as_str(), r.epoch, r.split))
            .collect();
        assert_eq!(
            keys,
            vec![
                (3, "gauge-nu", 1, SplitTag::Train),
                (4, "gauge-nu", 2, SplitTag::Train),
                (4, "gauge-nu", 10, SplitTag::Train),
                (4, "gauge-theta", 1, SplitTag::Train),
                (4, "gauge-theta", 1, SplitTag::Test),
            ]
        );
    }

    #[test]
    fn rejects_schema_violations() {
        assert!(parse_metrics("model,n_dim,seed,epoch,split,loss,wall_ms\n".as_bytes()).is_err());
        assert!(
            parse_metrics("model,n_dim,seed,epoch,split,loss,params,wall_ms\nm,3,1,1,valid,1,1,0\n".as_bytes())
                .is_err()
        );
        assert!(
            parse_metrics("model,n_dim,seed,epoch,split,loss,params,wall_ms\nm,3,1,1,test,NaN,1,0\n".as_bytes())
                .is_err()
        );
        assert!(
            parse_metrics("model,n_dim,seed,epoch,split,loss,params,wall_ms\nm,3,1,1,test,1,0,0\n".as_bytes()).is_err()
        );
    }
}
