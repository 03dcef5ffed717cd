use std::io::Write;

use fcrec_core::data::DatasetKind;
use fcrec_core::embedding::PcaTarget;
use fcrec_core::evaluation::{run_experiment, ExperimentConfig, SweepAxis};
use fcrec_core::predictor::Fallback;
use fcrec_core::Error;
use tempfile::NamedTempFile;

/// FilmTrust-style file: 30 users, 25 items, half-step ratings.
fn filmtrust_file() -> NamedTempFile {
    let mut file = NamedTempFile::new().unwrap();
    for u in 1..=30u32 {
        for i in 1..=25u32 {
            if (u + 2 * i) % 4 == 0 {
                continue;
            }
            let steps = (u * 3 + i * 5) % 8;
            writeln!(file, "{u} {i} {}", 0.5 + 0.5 * steps as f64).unwrap();
        }
    }
    file.flush().unwrap();
    file
}

fn config(path: &std::path::Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_dataset(DatasetKind::FilmTrust, path);
    cfg.tau = 4;
    cfg.fcm.clusters = 3;
    cfg.pca = PcaTarget::Components(4);
    cfg.seeds = vec![1, 2, 3];
    cfg
}

#[test]
fn filmtrust_file_end_to_end() {
    let file = filmtrust_file();
    let report = run_experiment(&config(file.path())).unwrap();
    assert_eq!(report.dataset, DatasetKind::FilmTrust);
    assert_eq!(report.runs[0].predictions.len(), report.test_size);
    assert_eq!(report.runs.len(), 3);
    assert_eq!(report.pca_components, 4);
    for run in &report.runs {
        for p in &run.predictions {
            assert!((0.5..=4.0).contains(&p.predicted));
        }
        let covered = run
            .predictions
            .iter()
            .filter(|p| p.fallback == Fallback::None)
            .count();
        assert_eq!(run.coverage, covered as f64 / run.predictions.len() as f64);
    }
    let (m, _) = report.mae();
    let (r, _) = report.rmse();
    assert!(m <= r);
}

#[test]
fn sweep_over_tau_reuses_split() {
    let file = filmtrust_file();
    let cfg = config(file.path());
    let table = fcrec_core::evaluation::sweep(&cfg, SweepAxis::Tau, &[2.0, 4.0, 8.0]).unwrap();
    assert_eq!(table.cells.len(), 3);
    let sizes: Vec<usize> = table
        .cells
        .iter()
        .map(|c| c.outcome.as_ref().unwrap().test_size)
        .collect();
    assert!(sizes.windows(2).all(|w| w[0] == w[1]));
    let mut csv = Vec::new();
    table.write_csv(&mut csv).unwrap();
    let csv = String::from_utf8(csv).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 4);
}

#[test]
fn missing_file_is_a_load_error() {
    let cfg = config(std::path::Path::new("/nonexistent/ratings.txt"));
    match run_experiment(&cfg) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "load"),
        other => panic!("expected load error, got {other:?}"),
    }
}
