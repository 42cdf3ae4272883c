//! Feature ranking by minimum-redundancy maximum-relevance (mRMR) and by
//! correlation-based feature selection (CFS).

use std::cmp::Ordering;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Mrmr,
    Cfs,
}

/// Selected feature indices in pick order, with the criterion value of each pick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected_indices: Vec<usize>,
    pub scores: Vec<f64>,
    pub method: SelectionMethod,
}

pub fn select(fm: &FeatureMatrix, k: usize, method: SelectionMethod) -> Result<SelectionResult> {
    match method {
        SelectionMethod::Mrmr => mrmr_select(fm, k),
        SelectionMethod::Cfs => cfs_rank(fm, k),
    }
}

fn check_k(fm: &FeatureMatrix, k: usize) -> Result<()> {
    if k == 0 || k > fm.n_features() {
        return Err(Error::BadConfig(format!(
            "selection count {k} must be in 1..={}",
            fm.n_features()
        )));
    }
    if fm.n_samples() == 0 {
        return Err(Error::Empty("feature matrix has no rows"));
    }
    Ok(())
}

/// Three-level quantization at `mean ± sd`.
///
/// Features that already take at most three distinct values keep them as
/// levels; thresholding would merge both values of a binary feature into one
/// bin. Statistics are accumulated over sorted values so the result does not
/// depend on row order.
pub fn discretize(x: &[f64]) -> Vec<u8> {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    if distinct.len() <= 3 {
        return x
            .iter()
            .map(|v| distinct.partition_point(|d| d < v) as u8)
            .collect();
    }
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let var = if sorted.len() > 1 {
        sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let sd = var.sqrt();
    x.iter()
        .map(|&v| {
            if v < mean - sd {
                0
            } else if v > mean + sd {
                2
            } else {
                1
            }
        })
        .collect()
}

/// Mutual information in nats between two discrete sequences.
pub fn mutual_information(a: &[u8], ka: usize, b: &[u8], kb: usize) -> f64 {
    let n = a.len() as f64;
    let mut joint = vec![0usize; ka * kb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x as usize * kb + y as usize] += 1;
    }
    let mut pa = vec![0usize; ka];
    let mut pb = vec![0usize; kb];
    for i in 0..ka {
        for j in 0..kb {
            pa[i] += joint[i * kb + j];
            pb[j] += joint[i * kb + j];
        }
    }
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kb {
            let c = joint[i * kb + j];
            if c > 0 {
                // ln(p_ab / (p_a p_b)) with counts: ln(c n / (c_a c_b)).
                mi += c as f64 / n * ((c as f64 * n) / (pa[i] as f64 * pb[j] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

fn by_score_then_index(a: &(usize, f64), b: &(usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Greedy mRMR with the difference criterion `I(f; c) - mean_{s∈S} I(f; s)`.
///
/// The first pick is the most relevant feature; its score is its relevance.
/// Ties go to the lowest feature index.
pub fn mrmr_select(fm: &FeatureMatrix, k: usize) -> Result<SelectionResult> {
    check_k(fm, k)?;
    let d = fm.n_features();
    let levels: Vec<Vec<u8>> = (0..d)
        .into_par_iter()
        .map(|j| discretize(fm.data.column(j).as_slice()))
        .collect();
    let classes: Vec<u8> = fm
        .labels
        .iter()
        .map(|&l| u8::try_from(l).map_err(|_| Error::BadInput("more than 256 classes".into())))
        .collect::<Result<_>>()?;
    let m = fm.n_classes().max(1);
    let relevance: Vec<f64> = levels
        .par_iter()
        .map(|f| mutual_information(f, 3, &classes, m))
        .collect();

    let mut selected = Vec::with_capacity(k);
    let mut scores = Vec::with_capacity(k);
    let mut chosen = vec![false; d];
    let mut redundancy = vec![0.0; d];
    for step in 0..k {
        let best = (0..d)
            .filter(|&j| !chosen[j])
            .map(|j| {
                let score = if step == 0 {
                    relevance[j]
                } else {
                    relevance[j] - redundancy[j] / step as f64
                };
                (j, score)
            })
            .min_by(by_score_then_index)
            .expect("k <= d leaves a candidate");
        chosen[best.0] = true;
        selected.push(best.0);
        scores.push(best.1);
        if step + 1 < k {
            let last = &levels[best.0];
            let added: Vec<(usize, f64)> = (0..d)
                .into_par_iter()
                .filter(|&j| !chosen[j])
                .map(|j| (j, mutual_information(&levels[j], 3, last, 3)))
                .collect();
            for (j, v) in added {
                redundancy[j] += v;
            }
        }
    }
    Ok(SelectionResult {
        selected_indices: selected,
        scores,
        method: SelectionMethod::Mrmr,
    })
}

/// Row order that depends only on row contents, so sums do not change
/// when the input rows are permuted.
fn canonical_rows(fm: &FeatureMatrix) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fm.n_samples()).collect();
    idx.sort_by(|&a, &b| {
        fm.labels[a].cmp(&fm.labels[b]).then_with(|| {
            fm.data
                .row(a)
                .iter()
                .zip(fm.data.row(b).iter())
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    });
    idx
}

/// Centres a column and scales it to unit norm; `None` for constant columns.
fn unit_centered(x: &[f64]) -> Option<Vec<f64>> {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let c: Vec<f64> = x.iter().map(|v| v - m).collect();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < 1e-12 * (1.0 + m.abs()) * n.sqrt() {
        None
    } else {
        Some(c.into_iter().map(|v| v / norm).collect())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Greedy forward CFS.
///
/// Merit of a subset is `Σ r_cf / sqrt(k + 2 Σ_{pairs} r_ff)` with absolute
/// Pearson correlations; the label is coded by its class index. Each pick's
/// score is the merit gain it brings. Zero-variance features are never picked
/// while others remain and receive score 0.
pub fn cfs_rank(fm: &FeatureMatrix, k: usize) -> Result<SelectionResult> {
    check_k(fm, k)?;
    let d = fm.n_features();
    let order = canonical_rows(fm);
    let data: DMatrix<f64> = fm.data.select_rows(order.iter());
    let label: Vec<f64> = order.iter().map(|&i| fm.labels[i] as f64).collect();
    let label_unit = unit_centered(&label);
    let cols: Vec<Option<Vec<f64>>> = (0..d)
        .into_par_iter()
        .map(|j| unit_centered(data.column(j).as_slice()))
        .collect();
    let r_cf: Vec<f64> = cols
        .iter()
        .map(|c| match (c, &label_unit) {
            (Some(c), Some(l)) => dot(c, l).abs(),
            _ => 0.0,
        })
        .collect();

    let mut chosen = vec![false; d];
    let mut ff_sum = vec![0.0; d];
    let mut sum_cf = 0.0;
    let mut sum_ff = 0.0;
    let mut merit = 0.0;
    let mut selected = Vec::with_capacity(k);
    let mut scores = Vec::with_capacity(k);
    while selected.len() < k {
        let kk = selected.len() as f64 + 1.0;
        let best = (0..d)
            .filter(|&j| !chosen[j] && cols[j].is_some())
            .map(|j| {
                let m = (sum_cf + r_cf[j]) / (kk + 2.0 * (sum_ff + ff_sum[j])).sqrt();
                (j, m)
            })
            .min_by(by_score_then_index);
        let Some((j, new_merit)) = best else { break };
        chosen[j] = true;
        selected.push(j);
        scores.push(new_merit - merit);
        merit = new_merit;
        sum_cf += r_cf[j];
        sum_ff += ff_sum[j];
        let last = cols[j].as_ref().expect("filtered to non-constant");
        let updates: Vec<(usize, f64)> = (0..d)
            .into_par_iter()
            .filter(|&i| !chosen[i])
            .filter_map(|i| cols[i].as_ref().map(|c| (i, dot(c, last).abs())))
            .collect();
        for (i, v) in updates {
            ff_sum[i] += v;
        }
    }
    for j in 0..d {
        if selected.len() == k {
            break;
        }
        if !chosen[j] {
            selected.push(j);
            scores.push(0.0);
        }
    }
    Ok(SelectionResult {
        selected_indices: selected,
        scores,
        method: SelectionMethod::Cfs,
    })
}

/// Running sum of the selection scores.
pub fn cumulative_score_curve(res: &SelectionResult) -> Result<Vec<f64>> {
    if res.scores.is_empty() {
        return Err(Error::Empty("selection scores"));
    }
    Ok(res
        .scores
        .iter()
        .scan(0.0, |acc, &s| {
            *acc += s;
            Some(*acc)
        })
        .collect())
}
