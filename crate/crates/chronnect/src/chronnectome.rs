//! Sliding-window dynamic functional connectivity: turning multivariate ROI
//! time series into per-window correlation matrices and vectorized dFC
//! sequences.

use crate::error::{Error, Result};
use crate::numerics::{pearson, Matrix};
use std::io::{BufRead, BufReader, Write};
use std::ops::Range;
use std::path::Path;

/// One scan's ROI-averaged signals: M ROIs by N volumes.
#[derive(Debug, Clone)]
pub struct BoldTimeSeries {
    pub subject_id: String,
    pub scan_id: String,
    pub tr_seconds: f64,
    /// M x N, one row per ROI.
    pub signals: Matrix,
}

impl BoldTimeSeries {
    pub fn new(
        subject_id: impl Into<String>,
        scan_id: impl Into<String>,
        tr_seconds: f64,
        signals: Matrix,
    ) -> Result<Self> {
        if signals.rows() < 2 || signals.cols() < 2 {
            return Err(Error::InsufficientData(format!(
                "time series needs >= 2 ROIs and >= 2 volumes, got {}x{}",
                signals.rows(),
                signals.cols()
            )));
        }
        if tr_seconds <= 0.0 {
            return Err(Error::Config(format!("tr_seconds must be positive, got {tr_seconds}")));
        }
        Ok(BoldTimeSeries {
            subject_id: subject_id.into(),
            scan_id: scan_id.into(),
            tr_seconds,
            signals,
        })
    }

    pub fn num_rois(&self) -> usize {
        self.signals.rows()
    }

    pub fn num_volumes(&self) -> usize {
        self.signals.cols()
    }
}

/// Window geometry in volumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub length_volumes: usize,
    pub stride_volumes: usize,
}

impl WindowSpec {
    pub fn new(length_volumes: usize, stride_volumes: usize) -> Result<Self> {
        if length_volumes == 0 || stride_volumes == 0 {
            return Err(Error::Config(
                "window length and stride must be positive".to_string(),
            ));
        }
        Ok(WindowSpec {
            length_volumes,
            stride_volumes,
        })
    }
}

/// Symmetric M x M correlation matrix with unit diagonal.
#[derive(Debug, Clone)]
pub struct FCMatrix {
    values: Matrix,
}

impl FCMatrix {
    /// Wraps a matrix, checking symmetry, diagonal and range.
    pub fn new(values: Matrix) -> Result<Self> {
        if values.rows() != values.cols() {
            return Err(Error::shape(
                "FCMatrix::new",
                format!("{}x{} not square", values.rows(), values.cols()),
            ));
        }
        for i in 0..values.rows() {
            if values.get(i, i) != 1.0 {
                return Err(Error::Config(format!("diagonal entry ({i},{i}) != 1")));
            }
            for j in (i + 1)..values.cols() {
                let (a, b) = (values.get(i, j), values.get(j, i));
                if (a - b).abs() > 1e-12 {
                    return Err(Error::Config(format!("asymmetric at ({i},{j}): {a} vs {b}")));
                }
                if !(-1.0..=1.0).contains(&a) {
                    return Err(Error::Config(format!("entry ({i},{j}) = {a} outside [-1,1]")));
                }
            }
        }
        Ok(FCMatrix { values })
    }

    pub fn dim(&self) -> usize {
        self.values.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values.get(i, j)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.values
    }
}

/// One scan's vectorized dFC: T windows by D = M(M-1)/2 links.
#[derive(Debug, Clone)]
pub struct DFCSequence {
    pub subject_id: String,
    pub scan_id: String,
    pub num_windows: usize,
    pub link_dim: usize,
    /// T x D, row t = vectorized upper triangle of window t's FC matrix.
    pub rows: Matrix,
}

/// An ROI whose in-window signal was constant; its correlations were set to 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegenerateRoi {
    pub window: usize,
    pub roi: usize,
}

/// Window start offsets for `num_volumes` volumes under `spec`.
///
/// Starts run 0, stride, 2*stride, ... while the full window fits, giving
/// T = floor((N - L) / S) + 1 ranges in increasing order.
pub fn sliding_windows(num_volumes: usize, spec: &WindowSpec) -> Result<Vec<Range<usize>>> {
    if num_volumes < spec.length_volumes {
        return Err(Error::InsufficientData(format!(
            "{} volumes < window length {}",
            num_volumes, spec.length_volumes
        )));
    }
    let count = (num_volumes - spec.length_volumes) / spec.stride_volumes + 1;
    Ok((0..count)
        .map(|t| {
            let start = t * spec.stride_volumes;
            start..start + spec.length_volumes
        })
        .collect())
}

/// Pairwise Pearson FC over one window of the scan.
///
/// The diagonal is forced to exactly 1. An ROI that is constant inside the
/// window gets zero correlation against everything and is reported in the
/// degeneracy list instead of poisoning the matrix with NaN.
pub fn window_fc(ts: &BoldTimeSeries, range: Range<usize>) -> Result<(FCMatrix, Vec<usize>)> {
    let m = ts.num_rois();
    let n = ts.num_volumes();
    if range.end > n || range.start >= range.end {
        return Err(Error::shape(
            "window_fc",
            format!("range {range:?} outside 0..{n}"),
        ));
    }
    let windows: Vec<&[f64]> = (0..m).map(|i| &ts.signals.row(i)[range.clone()]).collect();
    let degenerate: Vec<usize> = (0..m)
        .filter(|&i| {
            let w = windows[i];
            w.iter().all(|&v| v == w[0])
        })
        .collect();
    let mut fc = Matrix::zeros(m, m);
    for i in 0..m {
        fc.set(i, i, 1.0);
        for j in (i + 1)..m {
            let r = if degenerate.contains(&i) || degenerate.contains(&j) {
                0.0
            } else {
                pearson(windows[i], windows[j])?
            };
            fc.set(i, j, r);
            fc.set(j, i, r);
        }
    }
    Ok((FCMatrix::new(fc)?, degenerate))
}

/// Strict upper triangle in row-major order: (0,1), (0,2), ..., (M-2,M-1).
///
/// This link ordering is the feature-index contract for everything downstream;
/// `link_index` is its inverse.
pub fn vectorize_upper(fc: &FCMatrix) -> Vec<f64> {
    let m = fc.dim();
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            out.push(fc.get(i, j));
        }
    }
    out
}

/// Position of link (i, j), i < j, in the vectorized upper triangle.
pub fn link_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * m - i * (i + 1) / 2 + (j - i - 1)
}

/// Full dFC sequence: one vectorized FC row per sliding window.
pub fn compute_dfc(
    ts: &BoldTimeSeries,
    spec: &WindowSpec,
) -> Result<(DFCSequence, Vec<DegenerateRoi>)> {
    let windows = sliding_windows(ts.num_volumes(), spec)?;
    let m = ts.num_rois();
    let d = m * (m - 1) / 2;
    let mut rows = Matrix::zeros(windows.len(), d);
    let mut degeneracies = Vec::new();
    for (t, range) in windows.iter().enumerate() {
        let (fc, degenerate) = window_fc(ts, range.clone())?;
        rows.row_mut(t).copy_from_slice(&vectorize_upper(&fc));
        degeneracies.extend(degenerate.into_iter().map(|roi| DegenerateRoi { window: t, roi }));
    }
    Ok((
        DFCSequence {
            subject_id: ts.subject_id.clone(),
            scan_id: ts.scan_id.clone(),
            num_windows: windows.len(),
            link_dim: d,
            rows,
        },
        degeneracies,
    ))
}

/// Static FC vector: correlations over the full-length signals.
pub fn static_fc(ts: &BoldTimeSeries) -> Result<(Vec<f64>, Vec<usize>)> {
    let (fc, degenerate) = window_fc(ts, 0..ts.num_volumes())?;
    Ok((vectorize_upper(&fc), degenerate))
}

/// Reads a scan CSV with header `roi_0,...,roi_{M-1}` and one row per volume.
pub fn read_scan_csv(
    path: &Path,
    subject_id: &str,
    scan_id: &str,
    tr_seconds: f64,
) -> Result<BoldTimeSeries> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(&display, e))?,
        None => {
            return Err(Error::Parse {
                path: display,
                line: 1,
                detail: "empty file".to_string(),
            })
        }
    };
    let columns: Vec<&str> = header.trim().split(',').collect();
    let m = columns.len();
    for (i, col) in columns.iter().enumerate() {
        let want = format!("roi_{i}");
        if col.trim() != want {
            return Err(Error::Parse {
                path: display.clone(),
                line: 1,
                detail: format!("expected header column '{want}', got '{col}'"),
            });
        }
    }

    let mut per_volume: Vec<Vec<f64>> = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::io(&display, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != m {
            return Err(Error::Parse {
                path: display.clone(),
                line: idx + 1,
                detail: format!("expected {m} fields, got {}", fields.len()),
            });
        }
        let mut row = Vec::with_capacity(m);
        for field in fields {
            let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                path: display.clone(),
                line: idx + 1,
                detail: format!("bad number '{field}': {e}"),
            })?;
            row.push(v);
        }
        per_volume.push(row);
    }

    let n = per_volume.len();
    let mut signals = Matrix::zeros(m, n);
    for (vol, row) in per_volume.iter().enumerate() {
        for (roi, &v) in row.iter().enumerate() {
            signals.set(roi, vol, v);
        }
    }
    BoldTimeSeries::new(subject_id, scan_id, tr_seconds, signals)
}

/// Writes a scan CSV in the format `read_scan_csv` accepts.
pub fn write_scan_csv(path: &Path, ts: &BoldTimeSeries) -> Result<()> {
    let display = path.display().to_string();
    let mut out = String::new();
    let m = ts.num_rois();
    for i in 0..m {
        if i > 0 {
            out.push(',');
        }
        out.push_str(&format!("roi_{i}"));
    }
    out.push('\n');
    for vol in 0..ts.num_volumes() {
        for roi in 0..m {
            if roi > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", ts.signals.get(roi, vol)));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes()).map_err(|e| Error::io(&display, e))
}

/// Writes a dFC CSV with header `w,link_0,...,link_{D-1}`.
pub fn write_dfc_csv(path: &Path, dfc: &DFCSequence) -> Result<()> {
    let display = path.display().to_string();
    let mut out = String::from("w");
    for d in 0..dfc.link_dim {
        out.push_str(&format!(",link_{d}"));
    }
    out.push('\n');
    for t in 0..dfc.num_windows {
        out.push_str(&format!("{t}"));
        for v in dfc.rows.row(t) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes()).map_err(|e| Error::io(&display, e))
}

/// Reads a dFC CSV produced by `write_dfc_csv`.
pub fn read_dfc_csv(path: &Path, subject_id: &str, scan_id: &str) -> Result<DFCSequence> {
    let display = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| Error::io(&display, e))?;
    let reader = BufReader::new(file);
    let mut rows_data: Vec<Vec<f64>> = Vec::new();
    let mut link_dim = 0usize;
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(&display, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if idx == 0 {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.first() != Some(&"w") {
                return Err(Error::Parse {
                    path: display.clone(),
                    line: 1,
                    detail: "expected first header column 'w'".to_string(),
                });
            }
            link_dim = cols.len() - 1;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != link_dim + 1 {
            return Err(Error::Parse {
                path: display.clone(),
                line: idx + 1,
                detail: format!("expected {} fields, got {}", link_dim + 1, fields.len()),
            });
        }
        let mut row = Vec::with_capacity(link_dim);
        for field in &fields[1..] {
            row.push(field.trim().parse().map_err(|e| Error::Parse {
                path: display.clone(),
                line: idx + 1,
                detail: format!("bad number '{field}': {e}"),
            })?);
        }
        rows_data.push(row);
    }
    let t = rows_data.len();
    let mut rows = Matrix::zeros(t, link_dim);
    for (i, row) in rows_data.iter().enumerate() {
        rows.row_mut(i).copy_from_slice(row);
    }
    Ok(DFCSequence {
        subject_id: subject_id.to_string(),
        scan_id: scan_id.to_string(),
        num_windows: t,
        link_dim,
        rows,
    })
}

/// Write to a temp file in the destination directory, then rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.flush()?;
    }
    std::fs::rename(&tmp, path)
}
