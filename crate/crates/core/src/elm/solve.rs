//! Closed-form output weights for (weighted) regularized least squares.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::linalg::solve_spd;

/// Which closed form to use for the output weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// Dual form when there are fewer samples than hidden units, primal otherwise.
    #[default]
    Auto,
    /// `β = (I/C + HᵀWH)⁻¹ HᵀWT`, an `L x L` system.
    Primal,
    /// `β = Hᵀ (I/C + WHHᵀ)⁻¹ WT`, an `N x N` system.
    Dual,
}

/// One-hot target matrix with `{0, 1}` entries.
pub fn one_hot(labels: &[usize], n_classes: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(labels.len(), n_classes);
    for (i, &l) in labels.iter().enumerate() {
        t[(i, l)] = 1.0;
    }
    t
}

/// Solves `min ‖β‖²/C + Σ_i w_i ‖h_i β − t_i‖²` for the output weights `β` (`L x M`).
///
/// With `weights = None` every sample has weight 1. The dual branch is
/// evaluated in the symmetric form `Hᵀ D (I/C + D H Hᵀ D)⁻¹ D T` with
/// `D = W^{1/2}`, which is algebraically identical and keeps the system SPD.
pub fn solve_output_weights(
    h: &DMatrix<f64>,
    t: &DMatrix<f64>,
    weights: Option<&[f64]>,
    c: f64,
    branch: Branch,
) -> DMatrix<f64> {
    let (n, l) = h.shape();
    let branch = match branch {
        Branch::Auto if n < l => Branch::Dual,
        Branch::Auto => Branch::Primal,
        b => b,
    };
    let inv_c = 1.0 / c;
    match branch {
        Branch::Primal => {
            let (hw, wt) = match weights {
                Some(w) => {
                    let mut hw = h.clone();
                    let mut wt = t.clone();
                    for (i, &wi) in w.iter().enumerate() {
                        hw.row_mut(i).scale_mut(wi);
                        wt.row_mut(i).scale_mut(wi);
                    }
                    (hw, wt)
                }
                None => (h.clone(), t.clone()),
            };
            // Hᵀ W H computed as (WH)ᵀ H; Hᵀ W T as Hᵀ (WT).
            let mut a = hw.tr_mul(h);
            for i in 0..l {
                a[(i, i)] += inv_c;
            }
            let a = symmetrize(a);
            solve_spd(a, &h.tr_mul(&wt))
        }
        Branch::Dual => {
            let d: Option<Vec<f64>> = weights.map(|w| w.iter().map(|v| v.sqrt()).collect());
            let (dh, dt) = match &d {
                Some(d) => {
                    let mut dh = h.clone();
                    let mut dt = t.clone();
                    for (i, &di) in d.iter().enumerate() {
                        dh.row_mut(i).scale_mut(di);
                        dt.row_mut(i).scale_mut(di);
                    }
                    (dh, dt)
                }
                None => (h.clone(), t.clone()),
            };
            let mut a = &dh * dh.transpose();
            for i in 0..n {
                a[(i, i)] += inv_c;
            }
            let a = symmetrize(a);
            let z = solve_spd(a, &dt);
            dh.tr_mul(&z)
        }
        Branch::Auto => unreachable!(),
    }
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}
