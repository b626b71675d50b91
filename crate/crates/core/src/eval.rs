//! Empirical ROC construction and scalar detection summaries.
//!
//! The curve sweeps a threshold over the pooled scores, grouping equal
//! scores into a single step so the construction is deterministic and
//! order-independent. The trapezoidal area then equals the Mann-Whitney
//! statistic with half credit for ties.

use crate::error::{Error, Result};

/// Empirical ROC curve with its area and sample counts.
#[derive(Debug, Clone)]
pub struct RocCurve {
    points: Vec<(f64, f64)>,
    auc: f64,
    n0: usize,
    n1: usize,
}

impl RocCurve {
    /// `(pfa, pd)` vertices, starting at `(0, 0)` and ending at `(1, 1)`,
    /// both coordinates non-decreasing.
    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Trapezoidal area under the curve.
    pub fn auc(&self) -> f64 {
        self.auc
    }

    /// Background sample count.
    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Target sample count.
    pub fn n1(&self) -> usize {
        self.n1
    }

    /// Detection probability at the requested false-alarm probability, by
    /// linear interpolation; at a vertical riser the upper value wins.
    pub fn pd_at_pfa(&self, pfa: f64) -> Result<f64> {
        pd_at_pfa(self, pfa)
    }
}

/// Builds the empirical ROC from background (`h0`) and target (`h1`) scores.
pub fn roc(h0_scores: &[f64], h1_scores: &[f64]) -> Result<RocCurve> {
    if h0_scores.is_empty() || h1_scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n0 = h0_scores.len();
    let n1 = h1_scores.len();

    // Pool and sort descending; each distinct score contributes one vertex.
    let mut pooled: Vec<(f64, bool)> = Vec::with_capacity(n0 + n1);
    pooled.extend(h0_scores.iter().map(|&s| (s, false)));
    pooled.extend(h1_scores.iter().map(|&s| (s, true)));
    pooled.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut points = Vec::with_capacity(n0 + n1 + 1);
    points.push((0.0, 0.0));
    let mut fa = 0usize;
    let mut det = 0usize;
    let mut idx = 0usize;
    while idx < pooled.len() {
        let value = pooled[idx].0;
        while idx < pooled.len() && pooled[idx].0 == value {
            if pooled[idx].1 {
                det += 1;
            } else {
                fa += 1;
            }
            idx += 1;
        }
        points.push((fa as f64 / n0 as f64, det as f64 / n1 as f64));
    }

    let mut auc = 0.0;
    for pair in points.windows(2) {
        let (x0, y0) = pair[0];
        let (x1, y1) = pair[1];
        auc += (x1 - x0) * (y0 + y1) / 2.0;
    }

    Ok(RocCurve {
        points,
        auc,
        n0,
        n1,
    })
}

/// Linear interpolation of the detection probability at `pfa`.
pub fn pd_at_pfa(curve: &RocCurve, pfa: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&pfa) {
        return Err(Error::OutOfRange(pfa));
    }
    let pts = curve.points();
    // Last vertex at or below the requested rate; risers resolve upward.
    let mut i = 0;
    for (k, p) in pts.iter().enumerate() {
        if p.0 <= pfa {
            i = k;
        } else {
            break;
        }
    }
    if i + 1 == pts.len() || pts[i].0 == pfa {
        return Ok(pts[i].1);
    }
    let (x0, y0) = pts[i];
    let (x1, y1) = pts[i + 1];
    Ok(y0 + (y1 - y0) * (pfa - x0) / (x1 - x0))
}
