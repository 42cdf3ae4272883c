//! Per-sample weights that rebalance classes in weighted ELM training.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Class-imbalance weighting scheme. `N_c` is the size of a sample's class,
/// `N` the total and `M` the number of classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WeightScheme {
    /// All weights 1.
    None,
    /// `1 / N_c`.
    W1,
    /// `0.618 / N_c` for classes larger than `N / M`, else `1 / N_c`.
    W2,
    /// `(N_c / max N)^(1/d) / N_c` with decay parameter `d >= 1`.
    W3 { d: f64 },
    /// Class sizes sorted ascending, each class weighted by the size at the
    /// mirrored rank, divided by `N`.
    W4,
    /// `1 / (p + (N_c − p) N_c / max N)` with `p = N − N_c`.
    Proposed,
}

impl WeightScheme {
    pub const ALL_WEIGHTED: [WeightScheme; 5] = [
        WeightScheme::W1,
        WeightScheme::W2,
        WeightScheme::W3 { d: 2.0 },
        WeightScheme::W4,
        WeightScheme::Proposed,
    ];
}

impl fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightScheme::None => write!(f, "none"),
            WeightScheme::W1 => write!(f, "w1"),
            WeightScheme::W2 => write!(f, "w2"),
            WeightScheme::W3 { d } => write!(f, "w3:{d}"),
            WeightScheme::W4 => write!(f, "w4"),
            WeightScheme::Proposed => write!(f, "proposed"),
        }
    }
}

impl FromStr for WeightScheme {
    type Err = Error;

    /// Accepts `none`, `w1`, `w2`, `w3` (d = 2), `w3:<d>`, `w4`, `proposed`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let scheme = match s.as_str() {
            "none" | "unweighted" => WeightScheme::None,
            "w1" => WeightScheme::W1,
            "w2" => WeightScheme::W2,
            "w3" => WeightScheme::W3 { d: 2.0 },
            "w4" => WeightScheme::W4,
            "proposed" => WeightScheme::Proposed,
            other => match other.strip_prefix("w3:").map(str::parse::<f64>) {
                Some(Ok(d)) => WeightScheme::W3 { d },
                _ => return Err(Error::BadConfig(format!("unknown weighting scheme `{other}`"))),
            },
        };
        if let WeightScheme::W3 { d } = scheme {
            if !(d >= 1.0 && d.is_finite()) {
                return Err(Error::BadConfig(format!("W3 decay d must be >= 1, got {d}")));
            }
        }
        Ok(scheme)
    }
}

impl TryFrom<String> for WeightScheme {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<WeightScheme> for String {
    fn from(s: WeightScheme) -> String {
        s.to_string()
    }
}

/// Weight assigned to each class, given the class sizes.
pub fn class_weights(counts: &[usize], scheme: WeightScheme) -> Result<Vec<f64>> {
    if counts.is_empty() {
        return Err(Error::Empty("class counts"));
    }
    if let WeightScheme::None = scheme {
        return Ok(vec![1.0; counts.len()]);
    }
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(c));
    }
    let n: f64 = counts.iter().sum::<usize>() as f64;
    let m = counts.len() as f64;
    let max = *counts.iter().max().expect("nonempty") as f64;
    let w = match scheme {
        WeightScheme::None => unreachable!(),
        WeightScheme::W1 => counts.iter().map(|&c| 1.0 / c as f64).collect(),
        WeightScheme::W2 => {
            let avg = n / m;
            counts
                .iter()
                .map(|&c| {
                    let c = c as f64;
                    if c > avg {
                        0.618 / c
                    } else {
                        1.0 / c
                    }
                })
                .collect()
        }
        WeightScheme::W3 { d } => {
            if !(d >= 1.0) {
                return Err(Error::BadConfig(format!("W3 decay d must be >= 1, got {d}")));
            }
            counts
                .iter()
                .map(|&c| (c as f64 / max).powf(1.0 / d) / c as f64)
                .collect()
        }
        WeightScheme::W4 => {
            let mut sorted: Vec<usize> = counts.to_vec();
            sorted.sort_unstable();
            let k = counts.len();
            counts
                .iter()
                .map(|&c| {
                    // 1-based ascending rank; tied classes share the lowest rank.
                    let rank = sorted.partition_point(|&s| s < c) + 1;
                    sorted[k - rank] as f64 / n
                })
                .collect()
        }
        WeightScheme::Proposed => counts
            .iter()
            .map(|&c| {
                let c = c as f64;
                let p = n - c;
                1.0 / (p + (c - p) * c / max)
            })
            .collect(),
    };
    Ok(w)
}

/// Per-sample weights (the diagonal of `W`) for 0-based `labels` over `n_classes` classes.
pub fn make_weights(labels: &[usize], n_classes: usize, scheme: WeightScheme) -> Result<Vec<f64>> {
    let mut counts = vec![0usize; n_classes];
    for &l in labels {
        if l >= n_classes {
            return Err(Error::BadInput(format!("label {l} outside {n_classes} classes")));
        }
        counts[l] += 1;
    }
    let cw = class_weights(&counts, scheme)?;
    Ok(labels.iter().map(|&l| cw[l]).collect())
}
