//! Run configuration: flags override the TOML config file, which overrides
//! the defaults.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use smoothcert::SmoothingParams64;

use crate::args::RunFlags;
use crate::failure::{Classify, Failure};

pub const DEFAULT_SIGMA: f64 = 0.5;
pub const DEFAULT_N0: u64 = 100;
pub const DEFAULT_N: u64 = 100_000;
pub const DEFAULT_ALPHA: f64 = 0.001;
pub const DEFAULT_BATCH: u64 = 1000;

/// Values a config file may set.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub sigma: Option<f64>,
    pub n0: Option<u64>,
    pub n: Option<u64>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub batch_size: Option<u64>,
    pub store_counts: Option<bool>,
    pub record_timing: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).input_ctx(|| format!("cannot read config file {}", path.display()))?;
        toml::from_str(&text).input_ctx(|| format!("malformed config file {}", path.display()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: SmoothingParams64,
    pub seed: u64,
    pub workers: usize,
    pub batch_size: u64,
    pub store_counts: bool,
    pub record_timing: bool,
}

impl RunConfig {
    /// Reads the config file named by the flags, if any, and merges.
    pub fn from_flags(flags: &RunFlags) -> Result<Self, Failure> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        Self::merge(flags, &file)
    }

    pub fn merge(flags: &RunFlags, file: &FileConfig) -> Result<Self, Failure> {
        let sigma = flags.sigma.or(file.sigma).unwrap_or(DEFAULT_SIGMA);
        let n0 = flags.n0.or(file.n0).unwrap_or(DEFAULT_N0);
        let n = flags.n.or(file.n).unwrap_or(DEFAULT_N);
        let alpha = flags.alpha.or(file.alpha).unwrap_or(DEFAULT_ALPHA);
        let params = SmoothingParams64::new(sigma, n0, n, alpha).map_err(Failure::input)?;
        let workers = flags.workers.or(file.workers).unwrap_or(1);
        if workers == 0 {
            return Err(Failure::input(anyhow::anyhow!("workers must be at least 1")));
        }
        let batch_size = flags.batch_size.or(file.batch_size).unwrap_or(DEFAULT_BATCH);
        if batch_size == 0 {
            return Err(Failure::input(anyhow::anyhow!("batch size must be at least 1")));
        }
        Ok(Self {
            params,
            seed: flags.seed.or(file.seed).unwrap_or(0),
            workers,
            batch_size,
            store_counts: flags.store_counts || file.store_counts.unwrap_or(false),
            record_timing: flags.record_timing || file.record_timing.unwrap_or(false),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = RunConfig::merge(&RunFlags::default(), &FileConfig::default()).unwrap();
        assert_eq!((c.params.n0(), c.params.n(), c.params.alpha()), (100, 100_000, 0.001));
        assert_eq!(c.params.sigma(), DEFAULT_SIGMA);
        assert_eq!((c.seed, c.workers, c.batch_size), (0, 1, 1000));
        assert!(!c.store_counts && !c.record_timing);
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let file: FileConfig = toml::from_str("sigma = 0.25\nn = 500\nseed = 9\nstore_counts = true").unwrap();
        let flags = RunFlags { n: Some(700), ..RunFlags::default() };
        let c = RunConfig::merge(&flags, &file).unwrap();
        assert_eq!(c.params.sigma(), 0.25);
        assert_eq!(c.params.n(), 700);
        assert_eq!(c.params.n0(), 100);
        assert_eq!(c.seed, 9);
        assert!(c.store_counts);
    }

    #[test]
    fn bad_values_are_input_errors() {
        let flags = RunFlags { alpha: Some(1.5), ..RunFlags::default() };
        assert_eq!(RunConfig::merge(&flags, &FileConfig::default()).unwrap_err().exit_code(), 2);
        let flags = RunFlags { workers: Some(0), ..RunFlags::default() };
        assert_eq!(RunConfig::merge(&flags, &FileConfig::default()).unwrap_err().exit_code(), 2);
        assert!(toml::from_str::<FileConfig>("sigmaa = 1.0").is_err());
    }
}
