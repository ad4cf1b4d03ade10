//! Random probe vectors for stochastic trace estimation, and aggregation of
//! per-probe estimates.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linops::norm2;

pub const DEFAULT_NUM_PROBES: usize = 30;
pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProbeDistribution {
    #[default]
    Gaussian,
    Rademacher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub nv: usize,
    pub distribution: ProbeDistribution,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { nv: DEFAULT_NUM_PROBES, distribution: ProbeDistribution::Gaussian, seed: DEFAULT_SEED }
    }
}

impl ProbeConfig {
    pub fn new(nv: usize, distribution: ProbeDistribution, seed: u64) -> Self {
        Self { nv, distribution, seed }
    }

    fn validate(&self) -> Result<()> {
        if self.nv == 0 {
            return Err(Error::InvalidConfig("number of probe vectors must be at least 1".into()));
        }
        Ok(())
    }
}

/// Probe `index` of the sequence determined by `config`, normalized to unit
/// 2-norm. Each probe draws from its own ChaCha stream, so the result does
/// not depend on which other probes were generated or in what order.
pub fn probe_vector(n: usize, config: &ProbeConfig, index: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(index as u64);
    let mut v: Vec<f64> = match config.distribution {
        ProbeDistribution::Gaussian => (0..n).map(|_| rng.sample(StandardNormal)).collect(),
        ProbeDistribution::Rademacher => (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
    };
    let norm = norm2(&v);
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    } else {
        // Measure-zero event for the Gaussian draw; fall back to a basis vector.
        v[index % n] = 1.0;
    }
    v
}

/// Generates `config.nv` unit probe vectors of length `n`.
pub fn generate_probes(n: usize, config: &ProbeConfig) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    if n == 0 {
        return Err(Error::InvalidConfig("probe dimension must be at least 1".into()));
    }
    Ok((0..config.nv).into_par_iter().map(|l| probe_vector(n, config, l)).collect())
}

/// Per-probe estimates together with their prefix averages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSeries {
    pub per_probe: Vec<f64>,
    pub running_mean: Vec<f64>,
}

impl SampleSeries {
    /// The headline estimate: mean over all probes.
    pub fn mean(&self) -> f64 {
        *self.running_mean.last().expect("series is nonempty by construction")
    }

    pub fn len(&self) -> usize {
        self.per_probe.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_probe.is_empty()
    }

    /// Sample standard deviation of the per-probe values (0 for a single probe).
    pub fn std_dev(&self) -> f64 {
        let n = self.per_probe.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.per_probe.iter().sum::<f64>() / n as f64;
        let ss: f64 = self.per_probe.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        self.std_dev() / (self.per_probe.len() as f64).sqrt()
    }
}

pub fn running_average(values: &[f64]) -> Result<SampleSeries> {
    if values.is_empty() {
        return Err(Error::InvalidConfig("running average of an empty sample".into()));
    }
    let mut sum = 0.0;
    let running_mean = values
        .iter()
        .enumerate()
        .map(|(l, v)| {
            sum += v;
            sum / (l + 1) as f64
        })
        .collect();
    Ok(SampleSeries { per_probe: values.to_vec(), running_mean })
}
