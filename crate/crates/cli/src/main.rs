//! `fcrec`: run, sweep and inspect the fuzzy community recommender.

mod config;

use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use fcrec_core::evaluation::{Experiment, SweepAxis};
use nalgebra::DMatrix;

use config::{parse_list, CliConfig, Settings};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] fcrec_core::Error),
    #[error("sweep: {0} of {1} cells failed")]
    SweepCells(usize, usize),
}

#[derive(Parser, Debug)]
#[command(
    name = "fcrec",
    version,
    about = "Fuzzy community-based collaborative filtering"
)]
struct Cli {
    /// Configuration file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(flatten)]
    overrides: Overrides,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the full pipeline once per clustering seed and write `run.csv`.
    Run,
    /// Repeat the run over a list of values for one parameter and write `sweep-<axis>.csv`.
    Sweep {
        #[arg(long)]
        axis: SweepAxis,
        /// Comma-separated values, e.g. `5,10,15`.
        #[arg(long)]
        values: String,
    },
    /// Dump one intermediate matrix.
    Inspect {
        #[arg(value_enum)]
        stage: Stage,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Stage {
    Similarity,
    Adjacency,
    Ppr,
    Pca,
    Memberships,
}

/// One flag per configuration key; each replaces the file's value.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// `movielens` or `filmtrust`.
    #[arg(long, global = true)]
    dataset: Option<String>,
    /// Ratings file.
    #[arg(long, global = true)]
    path: Option<String>,
    /// Co-rating count an edge must exceed.
    #[arg(long, global = true)]
    tau: Option<String>,
    #[arg(long, global = true)]
    damping: Option<String>,
    #[arg(long, global = true)]
    ppr_tol: Option<String>,
    #[arg(long, global = true)]
    ppr_max_iter: Option<String>,
    /// `teleport` or `uniform`.
    #[arg(long, global = true)]
    dead_end: Option<String>,
    #[arg(long, global = true)]
    pca_components: Option<String>,
    #[arg(long, global = true)]
    pca_variance: Option<String>,
    #[arg(long, global = true)]
    clusters: Option<String>,
    #[arg(long, global = true)]
    fuzziness: Option<String>,
    #[arg(long, global = true)]
    fcm_tol: Option<String>,
    #[arg(long, global = true)]
    fcm_max_iter: Option<String>,
    /// Comma-separated clustering seeds.
    #[arg(long, global = true)]
    seeds: Option<String>,
    /// Single clustering seed; replaces `seeds`.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Community weight relative to correlation.
    #[arg(long, global = true)]
    gamma: Option<String>,
    #[arg(long, global = true)]
    alpha: Option<String>,
    #[arg(long, global = true)]
    beta_mix: Option<String>,
    /// Membership threshold for shared communities.
    #[arg(long, global = true)]
    theta: Option<String>,
    #[arg(long, global = true)]
    min_overlap: Option<String>,
    #[arg(long, global = true)]
    train_fraction: Option<String>,
    #[arg(long, global = true)]
    split_seed: Option<String>,
    /// Directory for report files (default `reports`).
    #[arg(long, global = true)]
    out_dir: Option<String>,
}

impl Overrides {
    fn entries(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("dataset", &self.dataset),
            ("path", &self.path),
            ("tau", &self.tau),
            ("damping", &self.damping),
            ("ppr_tol", &self.ppr_tol),
            ("ppr_max_iter", &self.ppr_max_iter),
            ("dead_end", &self.dead_end),
            ("pca_components", &self.pca_components),
            ("pca_variance", &self.pca_variance),
            ("clusters", &self.clusters),
            ("fuzziness", &self.fuzziness),
            ("fcm_tol", &self.fcm_tol),
            ("fcm_max_iter", &self.fcm_max_iter),
            ("seeds", &self.seeds),
            ("seed", &self.seed),
            ("gamma", &self.gamma),
            ("alpha", &self.alpha),
            ("beta_mix", &self.beta_mix),
            ("theta", &self.theta),
            ("min_overlap", &self.min_overlap),
            ("train_fraction", &self.train_fraction),
            ("split_seed", &self.split_seed),
            ("out_dir", &self.out_dir),
        ]
    }
}

fn settings(cli: &Cli) -> Result<Settings, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    for (key, value) in cli.overrides.entries() {
        if let Some(v) = value {
            cfg.set(key, v.as_str())?;
        }
    }
    cfg.resolve()
}

/// Writes through a temporary file in `dir` that is renamed into place on success.
fn write_report(
    dir: &Path,
    name: &str,
    body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
) -> Result<PathBuf, CliError> {
    let io = |source| CliError::Io {
        path: dir.join(name),
        source,
    };
    std::fs::create_dir_all(dir).map_err(io)?;
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        body(&mut out).map_err(io)?;
        out.flush().map_err(io)?;
    }
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| io(e.error))?;
    Ok(path)
}

fn write_dense(m: &DMatrix<f64>, out: &mut dyn Write) -> std::io::Result<()> {
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

fn cmd_run(s: &Settings) -> Result<(), CliError> {
    let exp = Experiment::load(&s.experiment)?;
    let report = exp.run(&s.experiment)?;
    let path = write_report(&s.out_dir, "run.csv", |mut out| report.write_csv(&mut out))?;
    println!("{report}");
    println!("report: {}", path.display());
    Ok(())
}

fn cmd_sweep(s: &Settings, axis: SweepAxis, values: &[f64]) -> Result<(), CliError> {
    let exp = Experiment::load(&s.experiment)?;
    let table = exp.sweep(&s.experiment, axis, values)?;
    let name = format!("sweep-{}.csv", axis.name());
    let path = write_report(&s.out_dir, &name, |mut out| table.write_csv(&mut out))?;
    let mut failed = 0;
    for cell in &table.cells {
        let value = axis.format_value(cell.value);
        match &cell.outcome {
            Ok(report) => {
                let (mae, sd) = report.mae();
                println!("{} = {value}: mean MAE {mae:.4} (sd {sd:.4})", axis.name());
            }
            Err(e) => {
                failed += 1;
                println!("{} = {value}: failed: {e}", axis.name());
            }
        }
    }
    if let Some((value, mae)) = table.best() {
        println!(
            "best {} = {}: mean MAE {mae:.4}",
            axis.name(),
            axis.format_value(value)
        );
    }
    println!("report: {}", path.display());
    if failed > 0 {
        return Err(CliError::SweepCells(failed, table.cells.len()));
    }
    Ok(())
}

fn cmd_inspect(s: &Settings, stage: Stage) -> Result<(), CliError> {
    let cfg = &s.experiment;
    let exp = Experiment::load(cfg)?;
    let features = exp.features(cfg)?;
    let path = match stage {
        Stage::Similarity => write_report(&s.out_dir, "similarity.csv", |out| {
            writeln!(out, "i,j,count")?;
            for (i, j, count) in features.similarity.upper_entries() {
                writeln!(out, "{i},{j},{count}")?;
            }
            Ok(())
        })?,
        Stage::Adjacency => write_report(&s.out_dir, "adjacency.txt", |out| {
            features.adjacency.write_edge_list(out)
        })?,
        Stage::Ppr => write_report(&s.out_dir, "ppr.csv", |out| features.ppr.write_csv(out))?,
        Stage::Pca => write_report(&s.out_dir, "pca.csv", |out| {
            write_dense(&features.reduced, out)
        })?,
        Stage::Memberships => {
            let model = exp.cluster(cfg, cfg.seeds[0])?;
            write_report(&s.out_dir, "memberships.csv", |out| {
                write_dense(&model.memberships, out)
            })?
        }
    };
    println!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sweep_values = match &cli.command {
        Command::Sweep { values, .. } => match parse_list::<f64>("values", values) {
            Ok(v) => Some(v),
            Err(e) => Cli::command()
                .error(clap::error::ErrorKind::InvalidValue, e.to_string())
                .exit(),
        },
        _ => None,
    };
    let result = settings(&cli).and_then(|s| match &cli.command {
        Command::Run => cmd_run(&s),
        Command::Sweep { axis, .. } => {
            cmd_sweep(&s, *axis, sweep_values.as_deref().unwrap_or_default())
        }
        Command::Inspect { stage } => cmd_inspect(&s, *stage),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
