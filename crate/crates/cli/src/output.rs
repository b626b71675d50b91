//! CSV emission for ROC tables and scalar summaries.
//!
//! Scores are printed with 17 significant digits so repeated runs are
//! byte-comparable; curve tables are decimated by uniform stride above
//! [`MAX_ROC_POINTS`] vertices to keep files plottable at large pair counts
//! (summaries always come from the full curve).

use spade_core::{Detector, RocCurve};

/// Vertex budget per `(detector, beta, trial)` curve in CSV and SVG output.
pub const MAX_ROC_POINTS: usize = 2048;

/// False-alarm rates reported in the summary table.
pub const SUMMARY_PFA: [f64; 3] = [1e-3, 1e-2, 1e-1];

/// One evaluated curve of the run.
pub struct CurveRecord {
    pub detector: Detector,
    pub beta: f64,
    pub trial: usize,
    pub curve: RocCurve,
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

/// Uniform-stride vertex subset, always keeping both endpoints.
pub fn decimate(points: &[(f64, f64)], budget: usize) -> Vec<(f64, f64)> {
    let n = points.len();
    if n <= budget {
        return points.to_vec();
    }
    (0..budget)
        .map(|i| points[i * (n - 1) / (budget - 1)])
        .collect()
}

/// `detector,beta,trial,pfa,pd` rows for every curve.
pub fn roc_csv(records: &[CurveRecord]) -> String {
    let mut out = String::from("detector,beta,trial,pfa,pd\n");
    for rec in records {
        for (pfa, pd) in decimate(rec.curve.points(), MAX_ROC_POINTS) {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                rec.detector.id(),
                rec.beta,
                rec.trial,
                fmt(pfa),
                fmt(pd)
            ));
        }
    }
    out
}

/// `detector,beta,trial,auc,pd@1e-3,pd@1e-2,pd@1e-1` rows.
pub fn summary_csv(records: &[CurveRecord]) -> String {
    let mut out = String::from("detector,beta,trial,auc,pd@1e-3,pd@1e-2,pd@1e-1\n");
    for rec in records {
        let pds: Vec<String> = SUMMARY_PFA
            .iter()
            .map(|&p| fmt(rec.curve.pd_at_pfa(p).expect("summary rates lie in [0, 1]")))
            .collect();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            rec.detector.id(),
            rec.beta,
            rec.trial,
            fmt(rec.curve.auc()),
            pds.join(",")
        ));
    }
    out
}
