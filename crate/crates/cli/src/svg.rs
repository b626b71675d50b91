//! Native SVG rendering of ROC panels: one panel per background scaling,
//! one polyline per (detector, trial), no plotting dependency.
//!
//! Detector families share a color; elliptically-contoured variants draw
//! solid and their Gaussian counterparts dashed.

use spade_core::Detector;

use crate::output::{decimate, CurveRecord, MAX_ROC_POINTS};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 48.0;

/// Smallest false-alarm rate shown on the log axis.
const LOG_PFA_FLOOR: f64 = 1e-5;

fn color(detector: Detector) -> &'static str {
    match detector {
        Detector::Amf | Detector::EcAmf => "#1f77b4",
        Detector::Ftmf | Detector::EcFtmf => "#2ca02c",
        Detector::TwoSpade | Detector::EcTwoSpade => "#d62728",
        Detector::Clairvoyant | Detector::ClairvoyantGauss => "#7f7f7f",
    }
}

fn dash(detector: Detector) -> &'static str {
    // Gaussian variants are dashed, like the usual convention for limits.
    match detector {
        Detector::Amf | Detector::Ftmf | Detector::TwoSpade | Detector::ClairvoyantGauss => {
            " stroke-dasharray=\"6,4\""
        }
        _ => "",
    }
}

struct Axes {
    log_pfa: bool,
}

impl Axes {
    fn x(&self, pfa: f64) -> f64 {
        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let frac = if self.log_pfa {
            let lo = LOG_PFA_FLOOR.log10();
            (pfa.max(LOG_PFA_FLOOR).log10() - lo) / (0.0 - lo)
        } else {
            pfa
        };
        MARGIN_LEFT + frac * plot_w
    }

    fn y(&self, pd: f64) -> f64 {
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        MARGIN_TOP + (1.0 - pd) * plot_h
    }
}

/// Renders one panel: every record must share the same beta.
pub fn roc_panel(beta: f64, records: &[&CurveRecord], log_pfa: bool) -> String {
    let ax = Axes { log_pfa };
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
         viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\" \
         text-anchor=\"middle\">ROC, beta = {beta}</text>\n",
        WIDTH / 2.0
    ));

    // Frame and ticks.
    let (x0, x1) = (ax.x(if log_pfa { LOG_PFA_FLOOR } else { 0.0 }), ax.x(1.0));
    let (y0, y1) = (ax.y(0.0), ax.y(1.0));
    svg.push_str(&format!(
        "<rect x=\"{x0}\" y=\"{y1}\" width=\"{}\" height=\"{}\" fill=\"none\" \
         stroke=\"black\"/>\n",
        x1 - x0,
        y0 - y1
    ));
    let x_ticks: Vec<(f64, String)> = if log_pfa {
        (-5..=0)
            .map(|e| (10f64.powi(e), format!("1e{e}")))
            .collect()
    } else {
        (0..=5)
            .map(|i| (i as f64 / 5.0, format!("{:.1}", i as f64 / 5.0)))
            .collect()
    };
    for (v, label) in &x_ticks {
        let x = ax.x(*v);
        svg.push_str(&format!(
            "<line x1=\"{x}\" y1=\"{y0}\" x2=\"{x}\" y2=\"{}\" stroke=\"black\"/>\n",
            y0 + 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{x}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"middle\">{label}</text>\n",
            y0 + 20.0
        ));
    }
    for i in 0..=5 {
        let v = i as f64 / 5.0;
        let y = ax.y(v);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{x0}\" y2=\"{y}\" stroke=\"black\"/>\n",
            x0 - 5.0
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\" \
             text-anchor=\"end\">{v:.1}</text>\n",
            x0 - 9.0,
            y + 4.0
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\">false-alarm probability</text>\n",
        (x0 + x1) / 2.0,
        HEIGHT - 10.0
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" \
         text-anchor=\"middle\" transform=\"rotate(-90 16 {})\">detection probability</text>\n",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0
    ));

    for rec in records {
        let pts = decimate(rec.curve.points(), MAX_ROC_POINTS)
            .iter()
            .map(|&(pfa, pd)| format!("{:.2},{:.2}", ax.x(pfa), ax.y(pd)))
            .collect::<Vec<_>>()
            .join(" ");
        svg.push_str(&format!(
            "<polyline points=\"{pts}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{}/>\n",
            color(rec.detector),
            dash(rec.detector)
        ));
    }

    // Legend: one entry per distinct detector, in first-seen order.
    let mut seen = Vec::new();
    for rec in records {
        if !seen.contains(&rec.detector) {
            seen.push(rec.detector);
        }
    }
    for (i, det) in seen.iter().enumerate() {
        let ly = MARGIN_TOP + 14.0 + 16.0 * i as f64;
        let lx = x1 - 150.0;
        svg.push_str(&format!(
            "<line x1=\"{lx}\" y1=\"{ly}\" x2=\"{}\" y2=\"{ly}\" stroke=\"{}\" \
             stroke-width=\"1.5\"{}/>\n",
            lx + 28.0,
            color(*det),
            dash(*det)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>\n",
            lx + 34.0,
            ly + 4.0,
            det.id()
        ));
    }

    svg.push_str("</svg>\n");
    svg
}
