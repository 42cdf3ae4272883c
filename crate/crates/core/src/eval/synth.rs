//! Synthetic labelled data for experiments without a corpus.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Class-conditional Gaussians. Class `c` has mean `c · separation` on the
/// first axis and zero elsewhere; every axis has standard deviation `noise_sd`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub counts: Vec<usize>,
    pub dims: usize,
    pub separation: f64,
    pub noise_sd: f64,
    /// Speaker ids are assigned round-robin over this many speakers.
    pub speakers: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthPreset::Imbalanced10to1.config(0)
    }
}

/// Gaussian classes per `cfg`, rows ordered by class.
pub fn synth_imbalanced(cfg: &SynthConfig) -> Result<FeatureMatrix> {
    if cfg.counts.is_empty() || cfg.counts.contains(&0) {
        return Err(Error::BadConfig("every class count must be positive".into()));
    }
    if cfg.dims == 0 || cfg.speakers == 0 {
        return Err(Error::BadConfig("dims and speakers must be at least 1".into()));
    }
    if !(cfg.noise_sd >= 0.0 && cfg.noise_sd.is_finite() && cfg.separation.is_finite()) {
        return Err(Error::BadConfig("noise_sd must be >= 0 and separation finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels: Vec<usize> = cfg
        .counts
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    let n = labels.len();
    let mut data = DMatrix::zeros(n, cfg.dims);
    for i in 0..n {
        for j in 0..cfg.dims {
            let z: f64 = rng.sample(StandardNormal);
            let mean = if j == 0 { labels[i] as f64 * cfg.separation } else { 0.0 };
            data[(i, j)] = mean + cfg.noise_sd * z;
        }
    }
    let class_names = (0..cfg.counts.len()).map(|c| format!("class{c}")).collect();
    let fm = FeatureMatrix::from_parts(data, round_robin(n, cfg.speakers), labels, class_names)?;
    Ok(fm)
}

fn round_robin(n: usize, speakers: usize) -> Vec<String> {
    (0..n).map(|i| format!("spk{:02}", i % speakers)).collect()
}

/// Two interleaving half circles with Gaussian noise; the first half of the rows is class 0.
pub fn two_moons(n: usize, noise: f64, speakers: usize, seed: u64) -> Result<FeatureMatrix> {
    if n < 2 || speakers == 0 {
        return Err(Error::BadConfig("two moons needs n >= 2 and at least one speaker".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n0 = n / 2;
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n0)).collect();
    let mut data = DMatrix::zeros(n, 2);
    for i in 0..n {
        let t: f64 = rng.random_range(0.0..std::f64::consts::PI);
        let (x, y) = if labels[i] == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        let ex: f64 = rng.sample(StandardNormal);
        let ey: f64 = rng.sample(StandardNormal);
        data[(i, 0)] = x + noise * ex;
        data[(i, 1)] = y + noise * ey;
    }
    FeatureMatrix::from_parts(
        data,
        round_robin(n, speakers),
        labels,
        vec!["upper".into(), "lower".into()],
    )
}

/// Named synthetic datasets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthPreset {
    /// Two Gaussian classes with 1000 and 100 samples in 10 dimensions.
    #[serde(rename = "imbalanced10to1")]
    Imbalanced10to1,
    /// 2000 two-moons samples with noise 0.15.
    TwoMoons,
}

impl SynthPreset {
    pub fn config(self, seed: u64) -> SynthConfig {
        match self {
            SynthPreset::Imbalanced10to1 => SynthConfig {
                counts: vec![1000, 100],
                dims: 10,
                separation: 4.0,
                noise_sd: 1.0,
                speakers: 10,
                seed,
            },
            SynthPreset::TwoMoons => SynthConfig {
                counts: vec![1000, 1000],
                dims: 2,
                separation: 0.0,
                noise_sd: 0.15,
                speakers: 10,
                seed,
            },
        }
    }

    pub fn generate(self, seed: u64) -> Result<FeatureMatrix> {
        match self {
            SynthPreset::Imbalanced10to1 => synth_imbalanced(&self.config(seed)),
            SynthPreset::TwoMoons => {
                let c = self.config(seed);
                two_moons(c.counts.iter().sum(), c.noise_sd, c.speakers, seed)
            }
        }
    }
}

impl fmt::Display for SynthPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynthPreset::Imbalanced10to1 => "imbalanced10to1",
            SynthPreset::TwoMoons => "two-moons",
        })
    }
}

impl FromStr for SynthPreset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "imbalanced10to1" => Ok(SynthPreset::Imbalanced10to1),
            "two-moons" | "twomoons" | "moons" => Ok(SynthPreset::TwoMoons),
            other => Err(Error::BadConfig(format!("unknown synthetic preset `{other}`"))),
        }
    }
}
