//! File formats: series CSV, fluctuation surface and spectrum exports, range
//! files, excision specs and plot-ready column files.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::mfdfa::FluctuationSurface;
use crate::scaling::{ManualRanges, ScaleBounds, ScalingRange};
use crate::series::{Representation, Series};
use crate::spectrum::SingularitySpectrum;
use crate::surgery::{ExcisionSpec, Interval};

/// Hex SHA-256 of a byte string.
pub fn fingerprint_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hex SHA-256 of a file's contents.
pub fn fingerprint_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(fingerprint_bytes(&bytes))
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        other => Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("{other:?}"),
        },
    }
}

/// Reads a series CSV, tagging the values with `representation`.
///
/// Each record holds an optional ISO-8601 date followed by the value; extra
/// columns are allowed when a header names a `close` (or `value`) column,
/// otherwise the last column is used. A header row is recognised by a
/// non-numeric value field on the first record. Records may be separated by
/// commas or semicolons; with semicolons a decimal comma is accepted. Lines
/// starting with `#` are comments.
pub fn read_series(path: &Path, representation: Representation) -> Result<Series> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_series(file, path, representation, label)
}

/// [`read_series`] over any reader; `path` is only used in diagnostics.
pub fn parse_series<R: Read>(
    mut reader: R,
    path: &Path,
    representation: Representation,
    label: impl Into<String>,
) -> Result<Series> {
    let mut text = String::new();
    reader
        .read_to_string(&mut text)
        .map_err(|e| Error::io(path, e))?;
    let semicolon = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .is_some_and(|l| l.contains(';'));
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .delimiter(if semicolon { b';' } else { b',' })
        .from_reader(text.as_bytes());

    let parse_value = |field: &str| -> Option<f64> {
        let normalized;
        let field = if semicolon && field.contains(',') && !field.contains('.') {
            normalized = field.replace(',', ".");
            normalized.as_str()
        } else {
            field
        };
        field.parse::<f64>().ok()
    };
    let parse_date = |field: &str| NaiveDate::parse_from_str(field, "%Y-%m-%d").ok();

    let mut value_col: Option<usize> = None;
    let mut dated: Option<bool> = None;
    let mut values = Vec::new();
    let mut dates = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if record.iter().all(str::is_empty) {
            continue;
        }
        let col = value_col.unwrap_or(record.len() - 1);
        if i == 0 && value_col.is_none() {
            let candidate = record.get(col).unwrap_or("");
            if parse_value(candidate).is_none() {
                let named = record.iter().position(|h| {
                    let h = h.to_ascii_lowercase();
                    h == "close" || h == "value"
                });
                value_col = Some(named.unwrap_or(record.len() - 1));
                continue;
            }
        }
        let value_col = *value_col.get_or_insert(col);
        let field = record
            .get(value_col)
            .ok_or_else(|| parse_err(format!("missing value column {}", value_col + 1)))?;
        let value =
            parse_value(field).ok_or_else(|| parse_err(format!("non-numeric value '{field}'")))?;
        let has_date = record.len() > 1 && value_col > 0 && parse_date(&record[0]).is_some();
        match dated {
            None => dated = Some(has_date),
            Some(expected) if expected != has_date => {
                return Err(parse_err(if expected {
                    format!("invalid or missing date '{}'", &record[0])
                } else {
                    "date column appears after undated records".to_string()
                }))
            }
            _ => {}
        }
        if has_date {
            dates.push(parse_date(&record[0]).expect("checked above"));
        }
        values.push(value);
    }
    if values.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "no data records".into(),
        });
    }
    if dated == Some(true) {
        Series::with_timestamps(values, representation, label, dates)
    } else {
        Series::new(values, representation, label)
    }
}

/// Writes `index,value` or `date,value` records under a `#` comment line.
pub fn write_series(path: &Path, series: &Series, comment: &str) -> Result<()> {
    let mut out = String::new();
    push_comment(&mut out, comment);
    match series.timestamps() {
        Some(ts) => {
            out.push_str("date,value\n");
            for (d, v) in ts.iter().zip(series.values()) {
                out.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), v));
            }
        }
        None => {
            out.push_str("index,value\n");
            for (i, v) in series.values().iter().enumerate() {
                out.push_str(&format!("{i},{v}\n"));
            }
        }
    }
    write_text(path, &out)
}

fn push_comment(out: &mut String, comment: &str) {
    if !comment.is_empty() {
        out.push_str("# ");
        out.push_str(&comment.replace('\n', " "));
        out.push('\n');
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = create(path)?;
    file.write_all(text.as_bytes())
        .map_err(|e| Error::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Surface export: a `# {json}` metadata line, then `s,q,F,degenerate_count`
/// records ordered by window size, then q.
pub fn write_surface(path: &Path, surface: &FluctuationSurface, meta: &serde_json::Value) -> Result<()> {
    let mut out = String::new();
    out.push_str("# ");
    out.push_str(&serde_json::to_string(meta)?);
    out.push('\n');
    out.push_str("s,q,F,degenerate_count\n");
    for (w, &s) in surface.window_sizes.iter().enumerate() {
        for (j, &q) in surface.q_grid.iter().enumerate() {
            out.push_str(&format!(
                "{s},{q},{},{}\n",
                surface.values[w][j], surface.degenerate_counts[w]
            ));
        }
    }
    write_text(path, &out)
}

/// Spectrum export: `q,alpha,f` records in q order.
pub fn write_spectrum(path: &Path, spectrum: &SingularitySpectrum, comment: &str) -> Result<()> {
    let mut out = String::new();
    push_comment(&mut out, comment);
    out.push_str("q,alpha,f\n");
    for p in &spectrum.points {
        out.push_str(&format!("{},{},{}\n", p.q, p.alpha, p.f));
    }
    write_text(path, &out)
}

/// Range file: JSON object mapping q (as a decimal string) to `{s_lo, s_hi}`.
/// A top-level `"manifest"` entry names the run that wrote the file and is
/// skipped.
pub fn read_ranges(path: &Path) -> Result<ManualRanges> {
    let map: serde_json::Map<String, serde_json::Value> = read_json(path)?;
    let mut ranges = Vec::with_capacity(map.len());
    for (key, value) in map {
        if key == "manifest" {
            continue;
        }
        let bounds: ScaleBounds = serde_json::from_value(value).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("range for '{key}': {e}"),
        })?;
        let q = key.trim().parse::<f64>().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: format!("range key '{key}' is not a number"),
        })?;
        if bounds.s_lo >= bounds.s_hi {
            return Err(Error::InvalidParams(format!(
                "range for q = {q} has s_lo {} >= s_hi {}",
                bounds.s_lo, bounds.s_hi
            )));
        }
        ranges.push((q, bounds));
    }
    ranges.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(ManualRanges(ranges))
}

/// Writes ranges in q order, one entry per line, after an optional
/// `"manifest"` entry.
pub fn write_ranges(path: &Path, ranges: &[ScalingRange], manifest: Option<&str>) -> Result<()> {
    let mut sorted: Vec<&ScalingRange> = ranges.iter().collect();
    sorted.sort_by(|a, b| a.q.total_cmp(&b.q));
    let mut lines: Vec<String> = manifest
        .map(|m| Ok::<_, Error>(format!("  \"manifest\": {}", serde_json::to_string(m)?)))
        .transpose()?
        .into_iter()
        .collect();
    lines.extend(sorted
        .iter()
        .map(|r| {
            format!(
                "  \"{}\": {{ \"s_lo\": {}, \"s_hi\": {} }}",
                r.q, r.s_lo, r.s_hi
            )
        }));
    let text = if lines.is_empty() {
        "{}\n".to_string()
    } else {
        format!("{{\n{}\n}}\n", lines.join(",\n"))
    };
    write_text(path, &text)
}

/// One entry of an excision spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecEntry {
    Indices { start: usize, end: usize },
    Dates { from_date: NaiveDate, to_date: NaiveDate },
}

pub fn read_excision_entries(path: &Path) -> Result<Vec<SpecEntry>> {
    read_json(path)
}

/// Resolves spec entries against `series`.
///
/// Index entries are half-open return ranges. A date entry removes every
/// return whose closing sample is dated within `[from_date, to_date]`
/// inclusive; it needs a dated series and must match at least one return.
pub fn resolve_excision(entries: &[SpecEntry], series: &Series) -> Result<ExcisionSpec> {
    let mut intervals = Vec::with_capacity(entries.len());
    for entry in entries {
        match *entry {
            SpecEntry::Indices { start, end } => intervals.push(Interval::new(start, end)),
            SpecEntry::Dates { from_date, to_date } => {
                let ts = series.timestamps().ok_or_else(|| {
                    Error::InvalidParams("date-based excision needs a dated series".into())
                })?;
                let inside: Vec<usize> = (1..ts.len())
                    .filter(|&i| from_date <= ts[i] && ts[i] <= to_date)
                    .map(|i| i - 1)
                    .collect();
                match (inside.first(), inside.last()) {
                    (Some(&a), Some(&b)) => intervals.push(Interval::new(a, b + 1)),
                    _ => {
                        return Err(Error::InvalidParams(format!(
                            "excision {from_date}..{to_date} matches no returns"
                        )))
                    }
                }
            }
        }
    }
    ExcisionSpec::new(intervals)
}

/// Plain whitespace-separated columns under a single `#` header line.
pub fn write_columns(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = format!("# {header}\n");
    for row in rows {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    write_text(path, &out)
}
