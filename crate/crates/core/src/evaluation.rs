//! Error metrics, end-to-end experiment runs and hyperparameter sweeps.
//!
//! An [`Experiment`] owns a loaded dataset and caches the expensive stages:
//! the split (with its rating matrix and correlation table) is keyed by the
//! split settings, and the PageRank + PCA features additionally by the graph
//! and PCA settings. Sweeps over cluster count or mixing weight therefore
//! compute PageRank once.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::clustering::{fcm_fit, FcmConfig, FcmModel};
use crate::data::{split_train_test, DatasetKind, RatingMatrix, RatingsDataset};
use crate::embedding::{pca_fit, pca_transform, PcaModel, PcaTarget};
use crate::error::{Error, Result, StageExt};
use crate::graph::{
    cooccurrence_similarity, modularity, threshold_adjacency, AdjacencyMatrix, SimilarityMatrix,
    TransitionMatrix,
};
use crate::pagerank::{ppr_feature_matrix, DeadEndPolicy, PprConfig, PprFeatureMatrix};
use crate::predictor::{CorrelationTable, Fallback, MixConfig, Predictor};

pub fn mae(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("MAE of an empty prediction list"));
    }
    let total: f64 = pairs.iter().map(|(p, a)| (p - a).abs()).sum();
    Ok(total / pairs.len() as f64)
}

pub fn rmse(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Empty("RMSE of an empty prediction list"));
    }
    let total: f64 = pairs.iter().map(|(p, a)| (p - a) * (p - a)).sum();
    Ok((total / pairs.len() as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetKind,
    pub path: PathBuf,
    /// Co-rating count an edge must exceed.
    pub tau: u32,
    pub ppr: PprConfig,
    pub pca: PcaTarget,
    /// `fcm.seed` is ignored; one clustering runs per entry of `seeds`.
    pub fcm: FcmConfig,
    pub seeds: Vec<u64>,
    pub mix: MixConfig,
    pub train_fraction: f64,
    pub split_seed: u64,
}

impl ExperimentConfig {
    /// Settings that work well for each dataset: tau 15 / 15 clusters / gamma 0.4
    /// on MovieLens, tau 7 / 5 clusters / gamma 1 on FilmTrust.
    pub fn for_dataset(dataset: DatasetKind, path: impl Into<PathBuf>) -> Self {
        let (tau, clusters, gamma) = match dataset {
            DatasetKind::MovieLens => (15, 15, 0.4),
            DatasetKind::FilmTrust => (7, 5, 1.0),
        };
        ExperimentConfig {
            dataset,
            path: path.into(),
            tau,
            ppr: PprConfig::default(),
            pca: PcaTarget::default(),
            fcm: FcmConfig {
                clusters,
                ..FcmConfig::default()
            },
            seeds: (1..=5).collect(),
            mix: MixConfig::from_gamma(gamma, 0.1),
            train_fraction: 0.8,
            split_seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ppr.validate()?;
        self.fcm.validate()?;
        self.mix.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("seed list is empty".into()));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "train fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        Ok(())
    }

    fn split_key(&self) -> SplitKey {
        SplitKey {
            train_fraction: self.train_fraction.to_bits(),
            split_seed: self.split_seed,
            min_overlap: self.mix.min_overlap,
        }
    }

    fn feature_key(&self) -> FeatureKey {
        FeatureKey {
            split: self.split_key(),
            tau: self.tau,
            damping: self.ppr.damping.to_bits(),
            tol: self.ppr.tol.to_bits(),
            max_iter: self.ppr.max_iter,
            dead_end: self.ppr.dead_end,
            pca: match self.pca {
                PcaTarget::Components(k) => (0, k as u64),
                PcaTarget::VarianceFraction(v) => (1, v.to_bits()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct SplitKey {
    train_fraction: u64,
    split_seed: u64,
    min_overlap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct FeatureKey {
    split: SplitKey,
    tau: u32,
    damping: u64,
    tol: u64,
    max_iter: usize,
    dead_end: DeadEndPolicy,
    pca: (u8, u64),
}

/// Train/test halves with the derived rating matrix and correlation table.
#[derive(Debug)]
pub struct PreparedSplit {
    pub train: RatingsDataset,
    pub test: RatingsDataset,
    pub matrix: RatingMatrix,
    pub correlations: Arc<CorrelationTable>,
    pub seconds: f64,
}

/// Graph, PageRank and PCA stages for one split.
#[derive(Debug)]
pub struct FeatureStages {
    pub similarity: SimilarityMatrix,
    pub adjacency: AdjacencyMatrix,
    pub ppr: PprFeatureMatrix,
    pub pca: PcaModel,
    /// PCA projection of the PageRank rows; the clustering input.
    pub reduced: DMatrix<f64>,
    pub timings: Vec<StageTiming>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageTiming {
    pub stage: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionRecord {
    pub user: usize,
    pub item: usize,
    pub actual: f64,
    pub predicted: f64,
    pub fallback: Fallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedRun {
    pub seed: u64,
    pub mae: f64,
    pub rmse: f64,
    /// Fraction of test pairs predicted from neighbors rather than a fallback mean.
    pub coverage: f64,
    pub fcm_iterations: usize,
    pub fcm_objective: f64,
    /// Modularity of the dominant-cluster partition on the user network.
    pub modularity: f64,
    pub predictions: Vec<PredictionRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub dataset: DatasetKind,
    pub num_users: usize,
    pub num_items: usize,
    pub train_size: usize,
    pub test_size: usize,
    pub edges: usize,
    pub pca_components: usize,
    pub unconverged_ppr_rows: usize,
    pub runs: Vec<SeedRun>,
    pub timings: Vec<StageTiming>,
}

fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

impl ExperimentReport {
    pub fn mae(&self) -> (f64, f64) {
        mean_std(self.runs.iter().map(|r| r.mae))
    }

    pub fn rmse(&self) -> (f64, f64) {
        mean_std(self.runs.iter().map(|r| r.rmse))
    }

    pub fn coverage(&self) -> f64 {
        mean_std(self.runs.iter().map(|r| r.coverage)).0
    }

    /// Same as [`sweep`](SweepTable) CSV, as a single cell labelled `axis,value`.
    pub fn write_csv_rows(
        &self,
        axis: &str,
        value: &str,
        out: &mut impl Write,
    ) -> std::io::Result<()> {
        for run in &self.runs {
            writeln!(
                out,
                "{axis},{value},{},{:.6},{:.6},{:.6}",
                run.seed, run.mae, run.rmse, run.coverage
            )?;
        }
        let (mae, _) = self.mae();
        let (rmse, _) = self.rmse();
        writeln!(
            out,
            "{axis},{value},mean,{mae:.6},{rmse:.6},{:.6}",
            self.coverage()
        )
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        self.write_csv_rows("run", "-", out)
    }
}

impl fmt::Display for ExperimentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "dataset {}: {} users, {} items, {} train / {} test ratings",
            self.dataset, self.num_users, self.num_items, self.train_size, self.test_size
        )?;
        writeln!(
            f,
            "user network: {} edges; PCA keeps {} components; {} PageRank rows unconverged",
            self.edges, self.pca_components, self.unconverged_ppr_rows
        )?;
        for run in &self.runs {
            writeln!(
                f,
                "  seed {:>4}: MAE {:.4}  RMSE {:.4}  coverage {:.4}  FCM iters {:>3}  modularity {:.4}",
                run.seed, run.mae, run.rmse, run.coverage, run.fcm_iterations, run.modularity
            )?;
        }
        let (mae, mae_sd) = self.mae();
        let (rmse, rmse_sd) = self.rmse();
        writeln!(
            f,
            "mean MAE {mae:.4} (sd {mae_sd:.4})  mean RMSE {rmse:.4} (sd {rmse_sd:.4})"
        )?;
        write!(f, "timings:")?;
        for t in &self.timings {
            write!(f, " {} {:.2}s", t.stage, t.seconds)?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str = "axis,value,seed,mae,rmse,coverage";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SweepAxis {
    Clusters,
    Gamma,
    Tau,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Clusters => "clusters",
            SweepAxis::Gamma => "gamma",
            SweepAxis::Tau => "tau",
        }
    }

    /// Returns `cfg` with this axis set to `value`.
    pub fn apply(self, cfg: &ExperimentConfig, value: f64) -> Result<ExperimentConfig> {
        let mut out = cfg.clone();
        match self {
            SweepAxis::Clusters | SweepAxis::Tau => {
                if value < 0.0 || value.fract() != 0.0 {
                    return Err(Error::InvalidConfig(format!(
                        "{} must be a nonnegative integer, got {value}",
                        self.name()
                    )));
                }
                if self == SweepAxis::Clusters {
                    out.fcm.clusters = value as usize;
                } else {
                    out.tau = value as u32;
                }
            }
            SweepAxis::Gamma => out.mix.alpha = value * out.mix.beta_mix,
        }
        out.validate()?;
        Ok(out)
    }

    pub fn format_value(self, value: f64) -> String {
        match self {
            SweepAxis::Clusters | SweepAxis::Tau => format!("{value}"),
            SweepAxis::Gamma => format!("{value:.6}"),
        }
    }
}

impl FromStr for SweepAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "clusters" | "cluster_count" | "cluster-count" => Ok(SweepAxis::Clusters),
            "gamma" => Ok(SweepAxis::Gamma),
            "tau" => Ok(SweepAxis::Tau),
            other => Err(format!(
                "unknown sweep axis `{other}` (expected clusters, gamma or tau)"
            )),
        }
    }
}

#[derive(Debug)]
pub struct SweepCell {
    pub value: f64,
    pub outcome: Result<ExperimentReport, String>,
}

#[derive(Debug)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    /// `(value, mean MAE)` for every successful cell.
    pub fn mean_mae(&self) -> Vec<(f64, f64)> {
        self.cells
            .iter()
            .filter_map(|c| c.outcome.as_ref().ok().map(|r| (c.value, r.mae().0)))
            .collect()
    }

    /// The successful cell with the lowest mean MAE.
    pub fn best(&self) -> Option<(f64, f64)> {
        self.mean_mae()
            .into_iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }

    pub fn write_csv(&self, out: &mut impl Write) -> std::io::Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        let axis = self.axis.name();
        for cell in &self.cells {
            let value = self.axis.format_value(cell.value);
            match &cell.outcome {
                Ok(report) => report.write_csv_rows(axis, &value, out)?,
                Err(_) => writeln!(out, "{axis},{value},failed,,,")?,
            }
        }
        Ok(())
    }
}

/// A loaded dataset plus cached pipeline stages.
pub struct Experiment {
    dataset: RatingsDataset,
    kind: DatasetKind,
    splits: Mutex<HashMap<SplitKey, Arc<PreparedSplit>>>,
    features: Mutex<HashMap<FeatureKey, Arc<FeatureStages>>>,
}

impl Experiment {
    pub fn load(cfg: &ExperimentConfig) -> Result<Self> {
        let dataset = cfg.dataset.load(&cfg.path).stage("load")?;
        Ok(Self::new(dataset, cfg.dataset))
    }

    pub fn new(dataset: RatingsDataset, kind: DatasetKind) -> Self {
        Experiment {
            dataset,
            kind,
            splits: Mutex::new(HashMap::new()),
            features: Mutex::new(HashMap::new()),
        }
    }

    pub fn dataset(&self) -> &RatingsDataset {
        &self.dataset
    }

    pub fn prepare(&self, cfg: &ExperimentConfig) -> Result<Arc<PreparedSplit>> {
        let key = cfg.split_key();
        if let Some(hit) = self.splits.lock().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let start = Instant::now();
        let (train, test) =
            split_train_test(&self.dataset, cfg.train_fraction, cfg.split_seed).stage("split")?;
        let matrix = train.rating_matrix();
        let correlations = Arc::new(CorrelationTable::compute(&matrix, cfg.mix.min_overlap));
        let prepared = Arc::new(PreparedSplit {
            train,
            test,
            matrix,
            correlations,
            seconds: start.elapsed().as_secs_f64(),
        });
        self.splits
            .lock()
            .unwrap()
            .insert(key, Arc::clone(&prepared));
        Ok(prepared)
    }

    pub fn features(&self, cfg: &ExperimentConfig) -> Result<Arc<FeatureStages>> {
        let key = cfg.feature_key();
        if let Some(hit) = self.features.lock().unwrap().get(&key) {
            return Ok(Arc::clone(hit));
        }
        let split = self.prepare(cfg)?;
        let mut timings = Vec::new();
        let mut clock = Instant::now();
        let mut lap = |stage: &'static str, timings: &mut Vec<StageTiming>| {
            timings.push(StageTiming {
                stage,
                seconds: clock.elapsed().as_secs_f64(),
            });
            clock = Instant::now();
        };

        let similarity = cooccurrence_similarity(&split.matrix);
        let adjacency = threshold_adjacency(&similarity, cfg.tau);
        let transition = TransitionMatrix::from_adjacency(&adjacency);
        lap("graph", &mut timings);
        let ppr = ppr_feature_matrix(&transition, &cfg.ppr).stage("pagerank")?;
        lap("pagerank", &mut timings);
        let pca = pca_fit(&ppr.features, cfg.pca).stage("pca")?;
        let reduced = pca_transform(&pca, &ppr.features).stage("pca")?;
        lap("pca", &mut timings);

        let stages = Arc::new(FeatureStages {
            similarity,
            adjacency,
            ppr,
            pca,
            reduced,
            timings,
        });
        self.features
            .lock()
            .unwrap()
            .insert(key, Arc::clone(&stages));
        Ok(stages)
    }

    pub fn cluster(&self, cfg: &ExperimentConfig, seed: u64) -> Result<FcmModel> {
        let features = self.features(cfg)?;
        fcm_fit(&features.reduced, &FcmConfig { seed, ..cfg.fcm }).stage("clustering")
    }

    pub fn run(&self, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
        cfg.validate()?;
        let split = self.prepare(cfg)?;
        let features = self.features(cfg)?;
        let mut timings = vec![StageTiming {
            stage: "split",
            seconds: split.seconds,
        }];
        timings.extend(features.timings.iter().cloned());

        let mut runs = Vec::with_capacity(cfg.seeds.len());
        let (mut cluster_secs, mut predict_secs) = (0.0, 0.0);
        for &seed in &cfg.seeds {
            let start = Instant::now();
            let model = self.cluster(cfg, seed)?;
            cluster_secs += start.elapsed().as_secs_f64();

            let start = Instant::now();
            let predictions =
                predict_test_set(&split, &model.memberships, cfg.mix).stage("prediction")?;
            predict_secs += start.elapsed().as_secs_f64();

            let pairs: Vec<(f64, f64)> = predictions
                .iter()
                .map(|p| (p.predicted, p.actual))
                .collect();
            let covered = predictions
                .iter()
                .filter(|p| p.fallback == Fallback::None)
                .count();
            runs.push(SeedRun {
                seed,
                mae: mae(&pairs).stage("metrics")?,
                rmse: rmse(&pairs).stage("metrics")?,
                coverage: covered as f64 / predictions.len() as f64,
                fcm_iterations: model.iterations,
                fcm_objective: model.objective,
                modularity: modularity(&features.adjacency, &model.dominant_clusters()),
                predictions,
            });
        }
        timings.push(StageTiming {
            stage: "clustering",
            seconds: cluster_secs,
        });
        timings.push(StageTiming {
            stage: "prediction",
            seconds: predict_secs,
        });

        Ok(ExperimentReport {
            dataset: self.kind,
            num_users: self.dataset.num_users(),
            num_items: self.dataset.num_items(),
            train_size: split.train.len(),
            test_size: split.test.len(),
            edges: features.adjacency.num_edges(),
            pca_components: features.pca.num_components(),
            unconverged_ppr_rows: features.ppr.unconverged_rows().len(),
            runs,
            timings,
        })
    }

    /// One run per value with everything else fixed. A failing cell is recorded
    /// in the table instead of aborting the sweep.
    pub fn sweep(
        &self,
        cfg: &ExperimentConfig,
        axis: SweepAxis,
        values: &[f64],
    ) -> Result<SweepTable> {
        if values.is_empty() {
            return Err(Error::Empty("sweep needs at least one value"));
        }
        let configs: Vec<Result<ExperimentConfig>> =
            values.iter().map(|&v| axis.apply(cfg, v)).collect();
        // Warm the shared stages first so parallel cells do not race to build them.
        for c in configs.iter().flatten() {
            let _ = self.features(c);
        }
        let cells = configs
            .into_par_iter()
            .zip(values.par_iter())
            .map(|(c, &value)| SweepCell {
                value,
                outcome: c.and_then(|c| self.run(&c)).map_err(|e| e.to_string()),
            })
            .collect();
        Ok(SweepTable { axis, cells })
    }
}

/// Predicts every test rating. Items never seen in training get the global
/// training mean and still count toward the metrics.
pub fn predict_test_set(
    split: &PreparedSplit,
    memberships: &DMatrix<f64>,
    mix: MixConfig,
) -> Result<Vec<PredictionRecord>> {
    let predictor = Predictor::with_correlations(
        &split.matrix,
        memberships,
        mix,
        Arc::clone(&split.correlations),
    )?;
    let scale = split.matrix.scale();
    split
        .test
        .ratings()
        .par_iter()
        .map(|r| {
            let (predicted, fallback) = if split.matrix.item_ratings(r.item).0.is_empty() {
                (
                    scale.clamp(split.matrix.global_mean()),
                    Fallback::GlobalMean,
                )
            } else {
                let p = predictor.predict(r.user, r.item)?;
                (p.value, p.fallback)
            };
            Ok(PredictionRecord {
                user: r.user,
                item: r.item,
                actual: r.value,
                predicted,
                fallback,
            })
        })
        .collect()
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    Experiment::load(cfg)?.run(cfg)
}

pub fn sweep(cfg: &ExperimentConfig, axis: SweepAxis, values: &[f64]) -> Result<SweepTable> {
    Experiment::load(cfg)?.sweep(cfg, axis, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::RatingTriple;

    #[test]
    fn metric_examples() {
        assert_eq!(mae(&[(3.0, 3.0), (1.5, 1.5)]).unwrap(), 0.0);
        assert_eq!(rmse(&[(3.0, 3.0)]).unwrap(), 0.0);
        assert_eq!(mae(&[(2.0, 3.0), (4.0, 3.0)]).unwrap(), 1.0);
        let r = rmse(&[(0.0, 3.0), (4.0, 0.0)]).unwrap();
        assert!((r - 12.5f64.sqrt()).abs() < 1e-12);
        assert!((r - 3.5355).abs() < 1e-4);
        assert!(mae(&[]).is_err());
        assert!(rmse(&[]).is_err());
    }

    #[test]
    fn rmse_dominates_mae() {
        let pairs: Vec<(f64, f64)> = (0..50)
            .map(|i| ((i * 37 % 11) as f64 * 0.3, (i % 5) as f64))
            .collect();
        assert!(rmse(&pairs).unwrap() >= mae(&pairs).unwrap());
    }

    fn clones(users: usize, items: usize) -> RatingsDataset {
        // Every user gives item i the rating 1 + i % 5.
        RatingsDataset::from_triples(
            (0..users).flat_map(|u| {
                (0..items).map(move |i| RatingTriple {
                    user: format!("u{u}"),
                    item: format!("i{i}"),
                    rating: (1 + i % 5) as f64,
                })
            }),
            DatasetKind::MovieLens.scale(),
        )
        .unwrap()
    }

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig {
            tau: 2,
            fcm: FcmConfig {
                clusters: 3,
                ..FcmConfig::default()
            },
            seeds: vec![1, 2],
            mix: MixConfig::from_gamma(1.0, 0.1),
            ..ExperimentConfig::for_dataset(DatasetKind::MovieLens, "unused")
        }
    }

    #[test]
    fn clone_users_predict_exactly() {
        let exp = Experiment::new(clones(12, 20), DatasetKind::MovieLens);
        let report = exp.run(&small_cfg()).unwrap();
        for run in &report.runs {
            for p in &run.predictions {
                if p.fallback == Fallback::None {
                    assert!((p.predicted - p.actual).abs() < 1e-12);
                }
            }
        }
        // Every held-out item still has raters in training with 240 ratings.
        assert!(report.mae().0 < 1e-12);
        assert_eq!(report.coverage(), 1.0);
    }

    #[test]
    fn reports_are_deterministic() {
        let cfg = small_cfg();
        let a = Experiment::new(clones(10, 15), DatasetKind::MovieLens)
            .run(&cfg)
            .unwrap();
        let b = Experiment::new(clones(10, 15), DatasetKind::MovieLens)
            .run(&cfg)
            .unwrap();
        assert_eq!(a.runs, b.runs);
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        a.write_csv(&mut ca).unwrap();
        b.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
    }

    #[test]
    fn single_value_sweep_equals_run() {
        let exp = Experiment::new(clones(10, 15), DatasetKind::MovieLens);
        let cfg = small_cfg();
        let table = exp.sweep(&cfg, SweepAxis::Clusters, &[3.0]).unwrap();
        assert_eq!(table.cells.len(), 1);
        let report = exp.run(&cfg).unwrap();
        assert_eq!(table.cells[0].outcome.as_ref().unwrap().runs, report.runs);
        assert!(exp.sweep(&cfg, SweepAxis::Gamma, &[]).is_err());
    }

    #[test]
    fn failed_cells_do_not_abort() {
        let exp = Experiment::new(clones(10, 15), DatasetKind::MovieLens);
        // 50 clusters > 10 users; 1.5 is not a cluster count.
        let table = exp
            .sweep(&small_cfg(), SweepAxis::Clusters, &[3.0, 50.0, 1.5])
            .unwrap();
        assert!(table.cells[0].outcome.is_ok());
        assert!(table.cells[1].outcome.is_err());
        assert!(table.cells[2].outcome.is_err());
        let mut csv = Vec::new();
        table.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 3 + 2);
        assert!(lines[3].starts_with("clusters,3,mean,0.000000,"));
        assert_eq!(lines[4], "clusters,50,failed,,,");
    }

    #[test]
    fn stage_errors_are_labelled() {
        let cfg =
            ExperimentConfig::for_dataset(DatasetKind::MovieLens, "/definitely/missing/u.data");
        let err = run_experiment(&cfg).unwrap_err();
        assert!(err.to_string().starts_with("load: "), "{err}");
    }

    #[test]
    fn axis_application() {
        let cfg = small_cfg();
        assert_eq!(SweepAxis::Gamma.apply(&cfg, 0.7).unwrap().mix.alpha, 0.7);
        assert_eq!(SweepAxis::Tau.apply(&cfg, 9.0).unwrap().tau, 9);
        assert_eq!(
            SweepAxis::Clusters.apply(&cfg, 4.0).unwrap().fcm.clusters,
            4
        );
        assert!(SweepAxis::Clusters.apply(&cfg, 1.0).is_err());
        assert_eq!(
            "cluster_count".parse::<SweepAxis>().unwrap(),
            SweepAxis::Clusters
        );
    }
}
