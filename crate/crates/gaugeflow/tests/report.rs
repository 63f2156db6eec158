use gaugeflow::metrics::{read_metrics, save_metrics, MetricsRecord, SplitTag};
use gaugeflow::report::{normalize_report, report_from_file};
use gaugeflow_core::flow::model_param_count;
use gaugeflow_core::ModelKind;

fn synthetic(ratio: f64) -> Vec<MetricsRecord> {
    let mut rows = Vec::new();
    for n in [3, 8] {
        for seed in [1, 2, 3] {
            for epoch in 1..=2 {
                for split in [SplitTag::Train, SplitTag::Test] {
                    for (kind, scale) in [(ModelKind::GaugeDirTheta, 1.0), (ModelKind::PlainBaseline, ratio)] {
                        rows.push(MetricsRecord {
                            model: kind.name().into(),
                            n_dim: n,
                            seed,
                            epoch,
                            split,
                            loss: scale * (n as f64 + seed as f64 / 8.0) / epoch as f64,
                            params: model_param_count(kind, n),
                            wall_ms: 0,
                        });
                    }
                }
            }
        }
    }
    rows
}

#[test]
fn plain_at_twice_the_loss_normalises_to_two() {
    let report = normalize_report(&synthetic(2.0), "gauge-theta").unwrap();
    assert_eq!(report.dims.iter().map(|d| d.n_dim).collect::<Vec<_>>(), vec![3, 8]);
    for d in &report.dims {
        for split in [&d.train, &d.test] {
            assert_eq!(split["gauge-theta"].normalized, 1.0);
            assert_eq!(split["plain-baseline"].normalized, 2.0);
            assert_eq!(split["plain-baseline"].final_epoch, 2);
            assert_eq!(split["plain-baseline"].seeds, vec![1, 2, 3]);
        }
        assert_eq!(
            d.params["plain-baseline"],
            model_param_count(ModelKind::PlainBaseline, d.n_dim)
        );
    }
}

#[test]
fn equal_losses_normalise_to_one() {
    let report = normalize_report(&synthetic(1.0), "plain-baseline").unwrap();
    assert!(report.dims.iter().all(|d| d.test.values().all(|s| s.normalized == 1.0)));
}

#[test]
fn report_is_a_pure_function_of_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.csv");
    let mut rows = synthetic(1.5);
    rows.reverse();
    save_metrics(&path, &rows).unwrap();
    assert_eq!(read_metrics(&path).unwrap(), rows);
    let a = serde_json::to_string(&report_from_file(&path, "gauge-theta").unwrap()).unwrap();
    let b = serde_json::to_string(&normalize_report(&synthetic(1.5), "gauge-theta").unwrap()).unwrap();
    assert_eq!(a, b);
}
