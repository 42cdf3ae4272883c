//! Long-term statistics that collapse a frame sequence into one utterance vector.
//!
//! Output layout is functional-major: all dims of the first functional, then
//! all dims of the second, and so on.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dsp::FrameFeatures;
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureTable};

/// Rows whose standard deviation falls below this are treated as constant.
const CONSTANT_SD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Functional {
    Mean,
    QuadraticMean,
    HarmonicMean,
    GeometricMean,
    /// Sample standard deviation with the `n - 1` denominator.
    Std,
    Skewness,
    /// Fourth standardized moment, without the `-3` excess correction.
    Kurtosis,
    /// Floor-rank percentile, `P` in `[0, 100]`.
    Percentile(f64),
    ZeroCrossing,
}

impl Functional {
    /// Minimum number of frames the functional needs.
    pub fn min_frames(self) -> usize {
        match self {
            Functional::Std | Functional::Skewness | Functional::Kurtosis => 2,
            _ => 1,
        }
    }

    pub fn apply(self, x: &[f64]) -> Result<f64> {
        if x.len() < self.min_frames() {
            return Err(Error::TooFewFrames {
                functional: self.to_string(),
                frames: x.len(),
                needed: self.min_frames(),
            });
        }
        let n = x.len() as f64;
        Ok(match self {
            Functional::Mean => mean(x),
            Functional::QuadraticMean => (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt(),
            Functional::HarmonicMean => {
                require_positive(self, x)?;
                n / x.iter().map(|v| 1.0 / v).sum::<f64>()
            }
            Functional::GeometricMean => {
                require_positive(self, x)?;
                (x.iter().map(|v| v.ln()).sum::<f64>() / n).exp()
            }
            Functional::Std => std_dev(x),
            Functional::Skewness => standardized_moment(x, 3),
            Functional::Kurtosis => standardized_moment(x, 4),
            Functional::Percentile(p) => {
                let mut sorted = x.to_vec();
                sorted.sort_by(f64::total_cmp);
                let rank = (p * n / 100.0).floor() as usize;
                sorted[rank.clamp(1, x.len()) - 1]
            }
            Functional::ZeroCrossing => {
                let sgn = |v: f64| -> f64 { if v >= 0.0 { 1.0 } else { -1.0 } };
                let total: f64 = x.windows(2).map(|w| (sgn(w[1]) - sgn(w[0])).abs()).sum();
                total / (2.0 * n)
            }
        })
    }
}

fn require_positive(f: Functional, x: &[f64]) -> Result<()> {
    match x.iter().find(|&&v| !(v > 0.0)) {
        Some(v) => Err(Error::DomainError(format!("{f} needs positive values, got {v}"))),
        None => Ok(()),
    }
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}

/// `(1/n) Σ ((x - mean) / sd)^k` with the `n - 1` standard deviation.
fn standardized_moment(x: &[f64], k: i32) -> f64 {
    let sd = std_dev(x);
    if sd < CONSTANT_SD {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| ((v - m) / sd).powi(k)).sum::<f64>() / x.len() as f64
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Functional::Mean => write!(f, "mean"),
            Functional::QuadraticMean => write!(f, "qmean"),
            Functional::HarmonicMean => write!(f, "hmean"),
            Functional::GeometricMean => write!(f, "gmean"),
            Functional::Std => write!(f, "std"),
            Functional::Skewness => write!(f, "skew"),
            Functional::Kurtosis => write!(f, "kurt"),
            Functional::Percentile(p) => write!(f, "p{p}"),
            Functional::ZeroCrossing => write!(f, "zc"),
        }
    }
}

impl FromStr for Functional {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Ok(match s.as_str() {
            "mean" => Functional::Mean,
            "qmean" | "quadratic_mean" | "rms" => Functional::QuadraticMean,
            "hmean" | "harmonic_mean" => Functional::HarmonicMean,
            "gmean" | "geometric_mean" => Functional::GeometricMean,
            "std" | "sd" => Functional::Std,
            "skew" | "skewness" => Functional::Skewness,
            "kurt" | "kurtosis" => Functional::Kurtosis,
            "zc" | "zero_crossing" => Functional::ZeroCrossing,
            other => {
                let p = other
                    .strip_prefix('p')
                    .and_then(|p| p.parse::<f64>().ok())
                    .filter(|p| (0.0..=100.0).contains(p))
                    .ok_or_else(|| Error::BadConfig(format!("unknown functional `{other}`")))?;
                Functional::Percentile(p)
            }
        })
    }
}

/// An ordered, nonempty list of functionals.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSet {
    pub members: Vec<Functional>,
}

impl Default for FunctionalSet {
    /// Mean, standard deviation, skewness and kurtosis.
    fn default() -> Self {
        Self {
            members: vec![
                Functional::Mean,
                Functional::Std,
                Functional::Skewness,
                Functional::Kurtosis,
            ],
        }
    }
}

impl FunctionalSet {
    pub fn new(members: Vec<Functional>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::BadConfig("functional set is empty".into()));
        }
        Ok(Self { members })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Output names, functional-major: `"{functional}_{dim}"`.
    pub fn output_names(&self, dim_labels: &[String]) -> Vec<String> {
        self.members
            .iter()
            .flat_map(|f| dim_labels.iter().map(move |d| format!("{f}_{d}")))
            .collect()
    }
}

impl FromStr for FunctionalSet {
    type Err = Error;

    /// Parses a comma-separated list such as `mean,std,skew,kurt,p50`.
    fn from_str(s: &str) -> Result<Self> {
        let members = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(members)
    }
}

impl fmt::Display for FunctionalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self.members.iter().map(ToString::to_string).collect();
        write!(f, "{}", names.join(","))
    }
}

impl Serialize for FunctionalSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.members.iter().map(ToString::to_string))
    }
}

impl<'de> Deserialize<'de> for FunctionalSet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let names = Vec::<String>::deserialize(d)?;
        FunctionalSet::from_str(&names.join(",")).map_err(serde::de::Error::custom)
    }
}

/// Applies every functional to every feature row of a frame matrix.
pub fn apply_functionals(ff: &FrameFeatures, set: &FunctionalSet) -> Result<Vec<f64>> {
    apply_to_rows(&ff.values, set)
}

/// Same as [`apply_functionals`] on a raw `dims x frames` matrix.
pub fn apply_to_rows(values: &DMatrix<f64>, set: &FunctionalSet) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = values.row_iter().map(|r| r.iter().copied().collect()).collect();
    let mut out = Vec::with_capacity(set.len() * rows.len());
    for &f in &set.members {
        for row in &rows {
            out.push(f.apply(row)?);
        }
    }
    Ok(out)
}

/// Collapses a frame-level table into one row per utterance.
///
/// Utterances appear in order of first occurrence. Every frame of an
/// utterance must share the same speaker and label.
pub fn utterance_matrix(table: &FeatureTable, set: &FunctionalSet) -> Result<FeatureMatrix> {
    let utts = table
        .utterances
        .as_ref()
        .ok_or_else(|| Error::BadInput("frame table has no `utterance` column".into()))?;
    let fm = &table.matrix;
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, u) in utts.iter().enumerate() {
        groups
            .entry(u.as_str())
            .or_insert_with(|| {
                order.push(u.as_str());
                Vec::new()
            })
            .push(i);
    }
    let dims = set.len() * fm.n_features();
    let mut data = DMatrix::zeros(order.len(), dims);
    let mut speakers = Vec::with_capacity(order.len());
    let mut labels = Vec::with_capacity(order.len());
    for (r, u) in order.iter().enumerate() {
        let idx = &groups[u];
        let first = idx[0];
        if idx
            .iter()
            .any(|&i| fm.speakers[i] != fm.speakers[first] || fm.labels[i] != fm.labels[first])
        {
            return Err(Error::BadInput(format!(
                "utterance `{u}` mixes speakers or labels"
            )));
        }
        let frames = fm.data.select_rows(idx.iter()).transpose();
        let v = apply_to_rows(&frames, set).map_err(|e| match e {
            Error::TooFewFrames { functional, frames, needed } => Error::TooFewFrames {
                functional: format!("{functional} (utterance `{u}`)"),
                frames,
                needed,
            },
            other => other,
        })?;
        data.row_mut(r).copy_from_slice(&v);
        speakers.push(fm.speakers[first].clone());
        labels.push(fm.labels[first]);
    }
    FeatureMatrix::new(
        data,
        set.output_names(&fm.feature_names),
        speakers,
        labels,
        fm.class_names.clone(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ap(f: Functional, x: &[f64]) -> f64 {
        f.apply(x).unwrap()
    }

    #[test]
    fn worked_examples() {
        assert_eq!(ap(Functional::Mean, &[1., 2., 3.]), 2.0);
        assert_eq!(ap(Functional::Std, &[1., 2., 3.]), 1.0);
        assert!(ap(Functional::Skewness, &[-3., -1., 0., 1., 3.]).abs() < 1e-15);
        assert!((ap(Functional::Kurtosis, &[-1., 1., -1., 1.]) - 0.5625).abs() < 1e-15);
        assert_eq!(ap(Functional::Percentile(50.0), &[4., 1., 3., 2.]), 2.0);
        assert_eq!(ap(Functional::Percentile(0.0), &[4., 1., 3., 2.]), 1.0);
        assert_eq!(ap(Functional::Percentile(100.0), &[4., 1., 3., 2.]), 4.0);
    }

    #[test]
    fn zero_crossing_uses_absolute_sign_changes() {
        // Three sign changes, each contributing |±2|, over 2N = 8.
        assert_eq!(ap(Functional::ZeroCrossing, &[1., -1., 1., -1.]), 0.75);
        // Zero counts as positive.
        assert_eq!(ap(Functional::ZeroCrossing, &[0., 1., 0., 2.]), 0.0);
    }

    #[test]
    fn constant_rows_have_zero_higher_moments() {
        assert_eq!(ap(Functional::Skewness, &[2.0; 5]), 0.0);
        assert_eq!(ap(Functional::Kurtosis, &[2.0; 5]), 0.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            Functional::Std.apply(&[1.0]),
            Err(Error::TooFewFrames { needed: 2, .. })
        ));
        assert!(matches!(
            Functional::GeometricMean.apply(&[1.0, 0.0]),
            Err(Error::DomainError(_))
        ));
        assert!(matches!(
            Functional::HarmonicMean.apply(&[1.0, -2.0]),
            Err(Error::DomainError(_))
        ));
        assert_eq!(Functional::Mean.apply(&[5.0]).unwrap(), 5.0);
    }

    #[test]
    fn parse_and_display_round_trip() {
        let s: FunctionalSet = "mean,std,skew,kurt,qmean,hmean,gmean,p25,zc".parse().unwrap();
        assert_eq!(s.len(), 9);
        assert_eq!(s.to_string(), "mean,std,skew,kurt,qmean,hmean,gmean,p25,zc");
        assert!("mean,bogus".parse::<FunctionalSet>().is_err());
        assert!("p101".parse::<Functional>().is_err());
        assert!("".parse::<FunctionalSet>().is_err());
    }

    #[test]
    fn functional_major_layout() {
        let ff = FrameFeatures::new(
            DMatrix::from_row_slice(2, 3, &[1., 2., 3., 10., 20., 30.]),
            vec!["a".into(), "b".into()],
        )
        .unwrap();
        let set: FunctionalSet = "mean,std".parse().unwrap();
        assert_eq!(apply_functionals(&ff, &set).unwrap(), vec![2., 20., 1., 10.]);
        assert_eq!(set.output_names(&ff.dim_labels), vec!["mean_a", "mean_b", "std_a", "std_b"]);
    }

    proptest! {
        #[test]
        fn shift_and_scale_behaviour(
            x in prop::collection::vec(-100.0f64..100.0, 2..60),
            c in -50.0f64..50.0,
            a in 0.1f64..10.0,
        ) {
            let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
            let scaled: Vec<f64> = x.iter().map(|v| a * v + c).collect();
            let tol = |r: f64| 1e-9 * (1.0 + r.abs());
            let m = ap(Functional::Mean, &x);
            prop_assert!((ap(Functional::Mean, &shifted) - (m + c)).abs() < tol(m + c));
            let s = ap(Functional::Std, &x);
            prop_assert!((ap(Functional::Std, &shifted) - s).abs() < tol(s));
            if s > 1e-6 {
                for f in [Functional::Skewness, Functional::Kurtosis] {
                    let base = ap(f, &x);
                    prop_assert!((ap(f, &scaled) - base).abs() < 1e-6 * (1.0 + base.abs()));
                }
            }
        }

        #[test]
        fn output_dim_is_set_size_times_dims(dims in 1usize..20, frames in 2usize..10, k in 1usize..5) {
            let ff = FrameFeatures::new(
                DMatrix::from_fn(dims, frames, |i, j| (i * 7 + j * 3) as f64),
                (0..dims).map(|i| i.to_string()).collect(),
            ).unwrap();
            let set = FunctionalSet::new(FunctionalSet::default().members[..k.min(4)].to_vec()).unwrap();
            prop_assert_eq!(apply_functionals(&ff, &set).unwrap().len(), set.len() * dims);
        }
    }
}
