//! Empirical ROC curves from recorded decision statistics.

use std::cmp::Ordering;

use serde::Serialize;

use super::config::ThresholdGrid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub pfa: f64,
    pub pd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RocCurve {
    /// Sorted by increasing threshold.
    pub points: Vec<RocPoint>,
    pub auc: f64,
    pub n_h1: usize,
    pub n_h0: usize,
}

impl RocCurve {
    /// Hanley-McNeil standard error of the AUC estimate.
    pub fn auc_se(&self) -> f64 {
        auc_standard_error(self.auc, self.n_h1, self.n_h0)
    }
}

/// Builds an ROC by sweeping thresholds over statistics recorded under
/// `H1` and `H0`. A trial declares `H1` when its statistic strictly exceeds
/// the threshold.
pub fn roc_from_scores(h1: &[f64], h0: &[f64], grid: &ThresholdGrid) -> RocCurve {
    assert!(
        !h1.is_empty() && !h0.is_empty(),
        "both score sets must be non-empty"
    );
    let mut s1 = h1.to_vec();
    let mut s0 = h0.to_vec();
    s1.sort_by(f64::total_cmp);
    s0.sort_by(f64::total_cmp);

    let thresholds = grid.thresholds().unwrap_or_else(|| {
        let mut t: Vec<f64> = Vec::with_capacity(s1.len() + s0.len() + 1);
        t.push(f64::NEG_INFINITY);
        t.extend(merge_sorted(&s1, &s0));
        t.dedup();
        t
    });

    let exceed = |sorted: &[f64], t: f64| {
        let at_or_below = sorted.partition_point(|&x| x <= t);
        (sorted.len() - at_or_below) as f64 / sorted.len() as f64
    };
    let points: Vec<RocPoint> = thresholds
        .into_iter()
        .map(|t| RocPoint {
            threshold: t,
            pfa: exceed(&s0, t),
            pd: exceed(&s1, t),
        })
        .collect();
    let auc = trapezoid_auc(&points);
    RocCurve {
        points,
        auc,
        n_h1: s1.len(),
        n_h0: s0.len(),
    }
}

fn merge_sorted(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        if a[i].total_cmp(&b[j]) != Ordering::Greater {
            out.push(a[i]);
            i += 1;
        } else {
            out.push(b[j]);
            j += 1;
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

/// Trapezoidal area over `(pfa, pd)` after appending `(0, 0)` and `(1, 1)`.
pub fn trapezoid_auc(points: &[RocPoint]) -> f64 {
    let mut xy: Vec<(f64, f64)> = points.iter().map(|p| (p.pfa, p.pd)).collect();
    xy.push((0.0, 0.0));
    xy.push((1.0, 1.0));
    xy.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    xy.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) * 0.5)
        .sum()
}

pub fn auc_standard_error(auc: f64, n_h1: usize, n_h0: usize) -> f64 {
    let q1 = auc / (2.0 - auc);
    let q2 = 2.0 * auc * auc / (1.0 + auc);
    let a2 = auc * auc;
    let var =
        (auc * (1.0 - auc) + (n_h1 as f64 - 1.0) * (q1 - a2) + (n_h0 as f64 - 1.0) * (q2 - a2))
            / (n_h1 as f64 * n_h0 as f64);
    var.max(0.0).sqrt()
}
