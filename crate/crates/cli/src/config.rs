//! `key = value` configuration files with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fcrec_core::data::DatasetKind;
use fcrec_core::embedding::PcaTarget;
use fcrec_core::evaluation::ExperimentConfig;
use fcrec_core::pagerank::DeadEndPolicy;

use crate::CliError;

/// Every recognised key, in the order it is applied.
pub const KEYS: &[&str] = &[
    "dataset",
    "path",
    "tau",
    "damping",
    "ppr_tol",
    "ppr_max_iter",
    "dead_end",
    "pca_components",
    "pca_variance",
    "clusters",
    "fuzziness",
    "fcm_tol",
    "fcm_max_iter",
    "seeds",
    "seed",
    "gamma",
    "alpha",
    "beta_mix",
    "theta",
    "min_overlap",
    "train_fraction",
    "split_seed",
    "out_dir",
];

/// Raw settings: file entries overlaid with flag values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliConfig {
    values: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub experiment: ExperimentConfig,
    pub out_dir: PathBuf,
}

impl CliConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = CliConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected `key = value`", n + 1))
            })?;
            let key = key.trim();
            check_key(key).map_err(|e| CliError::Config(format!("line {}: {e}", n + 1)))?;
            if cfg
                .values
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(CliError::Config(format!(
                    "line {}: key `{key}` given twice",
                    n + 1
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Sets `key`, replacing any value from the file. Accepts `snake_case` or `kebab-case`.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<(), CliError> {
        let key = key.replace('-', "_");
        check_key(&key).map_err(CliError::Config)?;
        self.values.insert(key, value.into());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn resolve(&self) -> Result<Settings, CliError> {
        let dataset: DatasetKind = self.required("dataset")?;
        let path = self.get("path").ok_or_else(|| missing("path"))?;
        let mut cfg = ExperimentConfig::for_dataset(dataset, path);

        if let Some(v) = self.parsed("tau")? {
            cfg.tau = v;
        }
        if let Some(v) = self.parsed("damping")? {
            cfg.ppr.damping = v;
        }
        if let Some(v) = self.parsed("ppr_tol")? {
            cfg.ppr.tol = v;
        }
        if let Some(v) = self.parsed("ppr_max_iter")? {
            cfg.ppr.max_iter = v;
        }
        if let Some(v) = self.parsed::<DeadEndPolicy>("dead_end")? {
            cfg.ppr.dead_end = v;
        }
        match (self.parsed("pca_components")?, self.parsed("pca_variance")?) {
            (Some(_), Some(_)) => {
                return Err(CliError::Config(
                    "`pca_components` and `pca_variance` are mutually exclusive".into(),
                ))
            }
            (Some(k), None) => cfg.pca = PcaTarget::Components(k),
            (None, Some(v)) => cfg.pca = PcaTarget::VarianceFraction(v),
            (None, None) => {}
        }
        if let Some(v) = self.parsed("clusters")? {
            cfg.fcm.clusters = v;
        }
        if let Some(v) = self.parsed("fuzziness")? {
            cfg.fcm.fuzziness = v;
        }
        if let Some(v) = self.parsed("fcm_tol")? {
            cfg.fcm.tol = v;
        }
        if let Some(v) = self.parsed("fcm_max_iter")? {
            cfg.fcm.max_iter = v;
        }
        if let Some(list) = self.get("seeds") {
            cfg.seeds = parse_list("seeds", list)?;
        }
        if let Some(v) = self.parsed("seed")? {
            cfg.seeds = vec![v];
        }
        if let Some(v) = self.parsed("theta")? {
            cfg.mix.theta = v;
        }
        if let Some(g) = self.parsed("gamma")? {
            cfg.mix.alpha = g;
            cfg.mix.beta_mix = 1.0;
        }
        if let Some(v) = self.parsed("alpha")? {
            cfg.mix.alpha = v;
        }
        if let Some(v) = self.parsed("beta_mix")? {
            cfg.mix.beta_mix = v;
        }
        if let Some(v) = self.parsed("min_overlap")? {
            cfg.mix.min_overlap = v;
        }
        if let Some(v) = self.parsed("train_fraction")? {
            cfg.train_fraction = v;
        }
        if let Some(v) = self.parsed("split_seed")? {
            cfg.split_seed = v;
        }
        cfg.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        let out_dir = self
            .get("out_dir")
            .map_or_else(|| PathBuf::from("reports"), PathBuf::from);
        Ok(Settings {
            experiment: cfg,
            out_dir,
        })
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.get(key).map(|v| parse_value(key, v)).transpose()
    }

    fn required<T: FromStr>(&self, key: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.parsed(key)?.ok_or_else(|| missing(key))
    }
}

fn check_key(key: &str) -> Result<(), String> {
    if KEYS.contains(&key) {
        Ok(())
    } else {
        Err(format!("unknown key `{key}`"))
    }
}

fn missing(key: &str) -> CliError {
    CliError::Config(format!(
        "missing required key `{key}` (set it in the config file or pass --{})",
        key.replace('_', "-")
    ))
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: std::fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| CliError::Config(format!("invalid value `{value}` for `{key}`: {e}")))
}

/// Comma-separated list; empty entries are an error.
pub fn parse_list<T: FromStr>(key: &str, list: &str) -> Result<Vec<T>, CliError>
where
    T::Err: std::fmt::Display,
{
    if list.trim().is_empty() {
        return Err(CliError::Config(format!(
            "`{key}` needs at least one value"
        )));
    }
    list.split(',').map(|v| parse_value(key, v)).collect()
}
