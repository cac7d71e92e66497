//! Point clouds as CSV.
//!
//! One row per point with the `d + 1` ambient coordinates, optionally
//! followed by a weight. A header row is optional on input; when present, a
//! last column named `weight` marks the weight column. Rows off the unit
//! sphere are renormalized and weights are rescaled to unit total mass.
//! Output uses 17 significant digits, so a write/read round trip is exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::distance::EmpiricalMeasure;
use crate::error::{invalid, Error, Result};
use crate::sphere::SpherePoint;

/// Whether the last column holds weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightColumn {
    /// Only when the header names the last column `weight`.
    #[default]
    Auto,
    Present,
    Absent,
}

/// Parses a cloud from CSV text. Errors carry 1-based line numbers.
pub fn parse_cloud(text: &str, weights: WeightColumn) -> Result<EmpiricalMeasure> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut header: Option<Vec<String>> = None;
    let mut rows: Vec<(u64, Vec<f64>)> = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| invalid(format!("line {}: {e}", e.position().map_or(0, |p| p.line()))))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) => rows.push((line, v)),
            Err(_) if k == 0 => header = Some(rec.iter().map(str::to_owned).collect()),
            Err(e) => return Err(invalid(format!("line {line}: {e}"))),
        }
    }
    if rows.is_empty() {
        return Err(invalid("the cloud file has no data rows"));
    }
    let has_weights = match weights {
        WeightColumn::Present => true,
        WeightColumn::Absent => false,
        WeightColumn::Auto => header
            .as_ref()
            .and_then(|h| h.last())
            .is_some_and(|c| c.eq_ignore_ascii_case("weight")),
    };
    let width = rows[0].1.len();
    if let Some(h) = &header {
        if h.len() != width {
            return Err(invalid(format!("header has {} columns but line {} has {width}", h.len(), rows[0].0)));
        }
    }
    let ambient = if has_weights { width.saturating_sub(1) } else { width };
    if ambient < 2 {
        return Err(invalid(format!("line {}: a point needs at least 2 coordinates", rows[0].0)));
    }
    let mut coords = Vec::with_capacity(rows.len() * ambient);
    let mut w = Vec::with_capacity(if has_weights { rows.len() } else { 0 });
    for (line, row) in &rows {
        if row.len() != width {
            return Err(invalid(format!("line {line}: expected {width} columns, found {}", row.len())));
        }
        // Rows already unit norm within tolerance are kept bit-for-bit.
        let v = row[..ambient].to_vec();
        let p = SpherePoint::from_unit(v.clone())
            .or_else(|_| SpherePoint::new(v))
            .map_err(|e| invalid(format!("line {line}: {e}")))?;
        coords.extend_from_slice(p.coords());
        if has_weights {
            let x = row[ambient];
            if !(x >= 0.0 && x.is_finite()) {
                return Err(invalid(format!("line {line}: weight must be finite and >= 0, got {x}")));
            }
            w.push(x);
        }
    }
    let weights = if has_weights {
        let total: f64 = w.iter().sum();
        if !(total > 0.0) {
            return Err(invalid("weights sum to zero"));
        }
        Some(w.into_iter().map(|x| x / total).collect())
    } else {
        None
    };
    EmpiricalMeasure::from_flat(ambient - 1, coords, weights)
}

/// Reads a cloud file; see [`parse_cloud`].
pub fn read_cloud(path: &Path, weights: WeightColumn) -> Result<EmpiricalMeasure> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_cloud(&text, weights).map_err(|e| match e {
        Error::InvalidArgument(msg) => invalid(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// CSV text for `m`. The weight column is written only for non-uniform
/// measures.
pub fn format_cloud(m: &EmpiricalMeasure) -> String {
    let ambient = m.ambient_dim();
    let weighted = !m.is_uniform();
    let mut out = String::new();
    let names: Vec<String> = (0..ambient).map(|i| format!("x{i}")).collect();
    out.push_str(&names.join(","));
    if weighted {
        out.push_str(",weight");
    }
    out.push('\n');
    for (row, w) in m.coords().chunks_exact(ambient).zip(m.weights()) {
        for (j, c) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{c:.16e}");
        }
        if weighted {
            let _ = write!(out, ",{w:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_cloud(path: &Path, m: &EmpiricalMeasure) -> Result<()> {
    fs::write(path, format_cloud(m)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
