//! Clustering accuracy under the best one-to-one label matching.

use crate::clustering::ClusterLabels;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Minimum-cost assignment (Hungarian method with potentials, O(n³)).
///
/// Returns the column assigned to each row. A rectangular matrix is padded
/// to square with a cost above every real entry; rows left on a padding
/// column come back as `None`.
pub fn hungarian(cost: &Matrix) -> Vec<Option<usize>> {
    let (rows, cols) = cost.shape();
    let n = rows.max(cols);
    if n == 0 {
        return Vec::new();
    }
    let pad = cost.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 1.0;
    let c = |i: usize, j: usize| {
        if i < rows && j < cols {
            cost[(i, j)]
        } else {
            pad
        }
    };

    // 1-based arrays; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![None; rows];
    for j in 1..=n {
        let i = owner[j] - 1;
        if i < rows && j - 1 < cols {
            out[i] = Some(j - 1);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Matched points over N, in `[0, 1]`.
    pub accuracy: f64,
    pub correct: usize,
    /// `(predicted, true)` label pairs chosen by the matching.
    pub matching: Vec<(usize, usize)>,
    /// Counts with true labels on rows and predicted labels on columns.
    pub confusion: Matrix,
}

/// Accuracy of `pred` against `truth` under the best injective relabeling.
///
/// When the label counts differ the contingency table is padded, so extra
/// predicted clusters contribute no correct points.
pub fn accuracy(pred: &ClusterLabels, truth: &ClusterLabels) -> Result<EvalReport> {
    accuracy_raw(pred.labels(), truth.labels())
}

pub fn accuracy_raw(pred: &[usize], truth: &[usize]) -> Result<EvalReport> {
    if pred.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "label lists differ in length: {} predicted vs {} true",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("cannot score an empty labeling".into()));
    }
    let kp = pred.iter().max().unwrap() + 1;
    let kt = truth.iter().max().unwrap() + 1;
    let mut confusion = Matrix::zeros(kt, kp);
    for (&p, &t) in pred.iter().zip(truth) {
        confusion[(t, p)] += 1.0;
    }
    let cost = -confusion.transpose();
    let assignment = hungarian(&cost);
    let mut matching = Vec::new();
    let mut correct = 0usize;
    for (p, t) in assignment.iter().enumerate() {
        if let Some(t) = *t {
            matching.push((p, t));
            correct += confusion[(t, p)] as usize;
        }
    }
    Ok(EvalReport {
        accuracy: correct as f64 / pred.len() as f64,
        correct,
        matching,
        confusion,
    })
}
