//! Minimal ROC plot: a polyline on a fixed 600x600 viewport.
//!
//! The CSV next to each plot is the canonical output; the SVG exists so a
//! run can be eyeballed without loading anything into a plotting tool.

use chronnect::evaluation::RocPoint;

const SIZE: f64 = 600.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_BOTTOM: f64 = 60.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_RIGHT: f64 = 20.0;

fn x(fpr: f64) -> f64 {
    MARGIN_LEFT + fpr * (SIZE - MARGIN_LEFT - MARGIN_RIGHT)
}

fn y(tpr: f64) -> f64 {
    SIZE - MARGIN_BOTTOM - tpr * (SIZE - MARGIN_TOP - MARGIN_BOTTOM)
}

/// Renders one ROC curve. `title` is drawn above the plot; `auc` in the
/// corner legend.
pub fn roc_svg(title: &str, points: &[RocPoint], auc: f64) -> String {
    let mut poly = String::new();
    for p in points {
        poly.push_str(&format!("{:.2},{:.2} ", x(p.fpr), y(p.tpr)));
    }
    let poly = poly.trim_end();
    let mut out = String::new();
    out.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{s}\" height=\"{s}\" viewBox=\"0 0 {s} {s}\">\n",
        s = SIZE as u32
    ));
    out.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{s}\" height=\"{s}\" fill=\"white\"/>\n",
        s = SIZE as u32
    ));
    // Axes box.
    out.push_str(&format!(
        "  <rect x=\"{:.0}\" y=\"{:.0}\" width=\"{:.0}\" height=\"{:.0}\" fill=\"none\" stroke=\"black\"/>\n",
        MARGIN_LEFT,
        MARGIN_TOP,
        SIZE - MARGIN_LEFT - MARGIN_RIGHT,
        SIZE - MARGIN_TOP - MARGIN_BOTTOM
    ));
    // Chance diagonal.
    out.push_str(&format!(
        "  <line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n",
        x(0.0),
        y(0.0),
        x(1.0),
        y(1.0)
    ));
    // Tick labels at 0, 0.5, 1 on both axes.
    for t in [0.0, 0.5, 1.0] {
        out.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"middle\">{t}</text>\n",
            x(t),
            SIZE - MARGIN_BOTTOM + 22.0
        ));
        out.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"end\">{t}</text>\n",
            MARGIN_LEFT - 8.0,
            y(t) + 5.0
        ));
    }
    out.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"16\" text-anchor=\"middle\">False positive rate</text>\n",
        x(0.5),
        SIZE - 12.0
    ));
    out.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"16\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">True positive rate</text>\n",
        16.0,
        y(0.5),
        y(0.5)
    ));
    out.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"24\" font-size=\"18\" text-anchor=\"middle\">{}</text>\n",
        SIZE / 2.0,
        escape(title)
    ));
    out.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"14\" text-anchor=\"end\">AUC = {auc:.3}</text>\n",
        x(1.0) - 10.0,
        y(0.0) - 10.0
    ));
    out.push_str(&format!(
        "  <polyline points=\"{poly}\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\"/>\n"
    ));
    out.push_str("</svg>\n");
    out
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
