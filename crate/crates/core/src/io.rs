//! Reading input-output records and writing impulse responses.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{PosIdError, Result};
use crate::signals::{ImpulseResponse, TimeSeriesData};

fn io_err(path: &Path, source: std::io::Error) -> PosIdError {
    PosIdError::Io { path: path.display().to_string(), source }
}

/// Raw columns of a record: one entry per integer time step.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecord {
    pub times: Vec<i64>,
    pub inputs: Vec<f64>,
    pub outputs: Vec<Option<f64>>,
}

impl RawRecord {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Rows with an output become samples; all rows contribute inputs.
    pub fn into_data(self) -> Result<TimeSeriesData> {
        let Some(&start) = self.times.first() else {
            return Err(PosIdError::data("record has no rows"));
        };
        let mut times = Vec::new();
        let mut ys = Vec::new();
        for (t, y) in self.times.iter().zip(&self.outputs) {
            if let Some(y) = y {
                times.push(*t);
                ys.push(*y);
            }
        }
        if times.is_empty() {
            return Err(PosIdError::data("record has no output samples"));
        }
        TimeSeriesData::new(times, start, self.inputs, ys)
    }
}

fn parse_field(s: &str, what: &str, row: usize) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| PosIdError::data(format!("row {row}: cannot parse {what} `{}`", s.trim())))
        .and_then(
            |v| {
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(PosIdError::data(format!("row {row}: non-finite {what}")))
                }
            },
        )
}

/// Parse CSV text with header `t,u,y`; `y` may be blank on input-only rows.
pub fn parse_csv(text: &str) -> Result<RawRecord> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| PosIdError::data(format!("bad CSV header: {e}")))?.clone();
    let col = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(it), Some(iu)) = (col("t"), col("u")) else {
        return Err(PosIdError::data("CSV header must contain columns `t` and `u` (and optionally `y`)"));
    };
    let iy = col("y");
    let mut rec = RawRecord { times: vec![], inputs: vec![], outputs: vec![] };
    for (k, row) in rdr.records().enumerate() {
        // header is line 1
        let line = k + 2;
        let row = row.map_err(|e| PosIdError::data(format!("row {line}: {e}")))?;
        let get = |i: usize| row.get(i).unwrap_or("");
        let t_raw = get(it);
        let t: i64 =
            t_raw.parse().map_err(|_| PosIdError::data(format!("row {line}: time `{t_raw}` is not an integer")))?;
        if let Some(&prev) = rec.times.last() {
            if t != prev + 1 {
                return Err(PosIdError::data(format!(
                    "row {line}: time {t} does not follow {prev} (one row per time step is required)"
                )));
            }
        }
        let u = parse_field(get(iu), "input", line)?;
        let y = match iy.map(get) {
            Some(s) if !s.is_empty() => Some(parse_field(s, "output", line)?),
            _ => None,
        };
        rec.times.push(t);
        rec.inputs.push(u);
        rec.outputs.push(y);
    }
    if rec.is_empty() {
        return Err(PosIdError::data("CSV has no data rows"));
    }
    Ok(rec)
}

/// Parse whitespace-separated `time input output` columns.
///
/// Lines starting with `%` or `#` are comments. Times in the file are
/// ignored and replaced by `0, 1, ...`.
pub fn parse_whitespace(text: &str) -> Result<RawRecord> {
    let mut rec = RawRecord { times: vec![], inputs: vec![], outputs: vec![] };
    for (k, line) in text.lines().enumerate() {
        let l = line.trim();
        if l.is_empty() || l.starts_with('%') || l.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = l.split_whitespace().collect();
        if cols.len() < 3 {
            return Err(PosIdError::data(format!("line {}: expected 3 columns, found {}", k + 1, cols.len())));
        }
        let u = parse_field(cols[1], "input", k + 1)?;
        let y = parse_field(cols[2], "output", k + 1)?;
        rec.times.push(rec.times.len() as i64);
        rec.inputs.push(u);
        rec.outputs.push(Some(y));
    }
    if rec.is_empty() {
        return Err(PosIdError::data("file has no data rows"));
    }
    Ok(rec)
}

/// Read a record, choosing the CSV or whitespace parser from the first data line.
pub fn read_record(path: &Path) -> Result<RawRecord> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let first =
        text.lines().map(str::trim).find(|l| !l.is_empty() && !l.starts_with('%') && !l.starts_with('#')).unwrap_or("");
    let parsed = if first.contains(',') { parse_csv(&text) } else { parse_whitespace(&text) };
    parsed.map_err(|e| match e {
        PosIdError::Data(msg) => PosIdError::data(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn read_data(path: &Path) -> Result<TimeSeriesData> {
    read_record(path)?.into_data()
}

/// `s,g` rows.
pub fn write_impulse_response<W: Write>(g: &ImpulseResponse, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let wrap = |e: csv::Error| PosIdError::data(format!("CSV write failed: {e}"));
    w.write_record(["s", "g"]).map_err(wrap)?;
    for (s, v) in g.values().iter().enumerate() {
        w.write_record([s.to_string(), v.to_string()]).map_err(wrap)?;
    }
    w.flush().map_err(|e| PosIdError::data(format!("CSV write failed: {e}")))?;
    Ok(())
}

/// Parse an `s,g` file back into a response.
pub fn read_impulse_response(path: &Path) -> Result<ImpulseResponse> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut vals = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| PosIdError::data(format!("{}: row {line}: {e}", path.display())))?;
        let s: usize = row
            .get(0)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| PosIdError::data(format!("{}: row {line}: bad lag", path.display())))?;
        if s != vals.len() {
            return Err(PosIdError::data(format!("{}: row {line}: lags must be 0, 1, 2, ...", path.display())));
        }
        vals.push(parse_field(row.get(1).unwrap_or(""), "response value", line)?);
    }
    ImpulseResponse::new(vals)
}

/// Write `bytes` to `path` through a sibling temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(path, e)
    })
}
