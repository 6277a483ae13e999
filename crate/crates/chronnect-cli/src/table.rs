//! Comparison table rendering: methods as rows, ACC/SEN/SPE/F1/AUC columns,
//! each cell `mean(std)` in percent with one decimal place.

use chronnect::evaluation::MetricsReport;

pub const COLUMNS: [&str; 5] = ["ACC", "SEN", "SPE", "F1", "AUC"];

/// One table row: a display name plus either a summary or a failure marker.
pub struct Row {
    pub display: String,
    pub summary: Option<(MeanStd, MeanStd, MeanStd, MeanStd, MeanStd)>,
}

#[derive(Clone, Copy)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl Row {
    pub fn from_report(display: &str, report: &MetricsReport) -> Self {
        let pick = |m: f64, s: f64| MeanStd { mean: m, std: s };
        Row {
            display: display.to_string(),
            summary: Some((
                pick(report.mean.acc, report.std.acc),
                pick(report.mean.sen, report.std.sen),
                pick(report.mean.spe, report.std.spe),
                pick(report.mean.f1, report.std.f1),
                pick(report.mean.auc, report.std.auc),
            )),
        }
    }

    pub fn failed(display: &str) -> Self {
        Row {
            display: display.to_string(),
            summary: None,
        }
    }

    fn cells(&self) -> [String; 5] {
        match &self.summary {
            Some((acc, sen, spe, f1, auc)) => [
                cell(*acc),
                cell(*sen),
                cell(*spe),
                cell(*f1),
                cell(*auc),
            ],
            None => std::array::from_fn(|_| "-".to_string()),
        }
    }
}

/// Formats a fraction as percent with one decimal, e.g. 0.736 -> "73.6".
/// An exact 100.0 drops the decimal so a perfect cell reads "100(0.0)".
fn percent(value: f64) -> String {
    if !value.is_finite() {
        return "-".to_string();
    }
    let formatted = format!("{:.1}", value * 100.0);
    if formatted == "100.0" {
        "100".to_string()
    } else {
        formatted
    }
}

fn cell(ms: MeanStd) -> String {
    if !ms.mean.is_finite() {
        return "-".to_string();
    }
    format!("{}({})", percent(ms.mean), percent(ms.std))
}

/// Plain-text table with aligned columns.
pub fn render_text(rows: &[Row]) -> String {
    let mut name_width = "Method".len();
    for row in rows {
        name_width = name_width.max(row.display.len());
    }
    let mut col_widths = [0usize; 5];
    let all_cells: Vec<[String; 5]> = rows.iter().map(Row::cells).collect();
    for (i, width) in col_widths.iter_mut().enumerate() {
        *width = COLUMNS[i].len();
        for cells in &all_cells {
            *width = (*width).max(cells[i].len());
        }
    }
    let mut out = String::new();
    out.push_str(&format!("{:<name_width$}", "Method"));
    for (i, col) in COLUMNS.iter().enumerate() {
        out.push_str(&format!("  {:>width$}", col, width = col_widths[i]));
    }
    out.push('\n');
    for (row, cells) in rows.iter().zip(&all_cells) {
        out.push_str(&format!("{:<name_width$}", row.display));
        for (i, c) in cells.iter().enumerate() {
            out.push_str(&format!("  {:>width$}", c, width = col_widths[i]));
        }
        out.push('\n');
    }
    out
}

/// CSV with the same cells as the text table.
pub fn render_csv(rows: &[Row]) -> String {
    let mut out = String::from("method,acc,sen,spe,f1,auc\n");
    for row in rows {
        out.push_str(&row.display);
        for c in row.cells() {
            out.push(',');
            out.push_str(&c);
        }
        out.push('\n');
    }
    out
}
