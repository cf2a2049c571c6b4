//! CSV and JSON serialization of [`Trace`]s.
//!
//! The CSV carries the per-row potentials with header
//! `k,l1_w,l1_y,energy_E,barrier_B,max_ratio,j_value`. Every real is written
//! with 17 significant digits so that reading it back is bit-exact; `+∞` is
//! `inf` and a missing barrier is an empty field. The JSON carries the whole
//! trace inside a versioned envelope.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use bpdyn_core::analysis::PotentialReport;
use bpdyn_core::trace::Trace;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 7] = [
    "k",
    "l1_w",
    "l1_y",
    "energy_E",
    "barrier_B",
    "max_ratio",
    "j_value",
];

#[derive(Debug, thiserror::Error)]
pub enum TraceIoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("csv row {row}: {msg}")]
    CsvField { row: usize, msg: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported trace schema {0}, expected {SCHEMA_VERSION}")]
    Schema(u32),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> TraceIoError + '_ {
    move |source| TraceIoError::Io {
        path: path.to_owned(),
        source,
    }
}

pub fn format_real(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_real(row: usize, field: &str) -> Result<f64, TraceIoError> {
    field.trim().parse().map_err(|_| TraceIoError::CsvField {
        row,
        msg: format!("cannot parse {field:?} as a real"),
    })
}

pub fn write_csv_to<W: Write>(trace: &Trace, out: W) -> Result<(), TraceIoError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &trace.rows {
        w.write_record([
            r.k.to_string(),
            format_real(r.l1_w),
            format_real(r.l1_y),
            format_real(r.energy_e),
            r.barrier_b.map(format_real).unwrap_or_default(),
            format_real(r.max_ratio),
            format_real(r.j_value),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_csv(trace: &Trace, path: &Path) -> Result<(), TraceIoError> {
    let file = File::create(path).map_err(io_err(path))?;
    write_csv_to(trace, BufWriter::new(file))
}

pub fn read_csv_from<R: Read>(input: R) -> Result<Vec<PotentialReport>, TraceIoError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(TraceIoError::CsvField {
            row: 0,
            msg: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let row = i + 1;
        let k = rec[0].trim().parse().map_err(|_| TraceIoError::CsvField {
            row,
            msg: format!("cannot parse {:?} as an iteration", &rec[0]),
        })?;
        let barrier_b = if rec[4].trim().is_empty() {
            None
        } else {
            Some(parse_real(row, &rec[4])?)
        };
        rows.push(PotentialReport {
            k,
            l1_w: parse_real(row, &rec[1])?,
            l1_y: parse_real(row, &rec[2])?,
            energy_e: parse_real(row, &rec[3])?,
            barrier_b,
            max_ratio: parse_real(row, &rec[5])?,
            j_value: parse_real(row, &rec[6])?,
        });
    }
    Ok(rows)
}

pub fn read_csv(path: &Path) -> Result<Vec<PotentialReport>, TraceIoError> {
    read_csv_from(File::open(path).map_err(io_err(path))?)
}

/// Companion dump of `y^(k)`: header `k,<column names>`, one row per
/// recorded iterate. Writes nothing when the trace holds no iterates.
pub fn write_iterates_csv(trace: &Trace, path: &Path) -> Result<bool, TraceIoError> {
    let Some(iterates) = &trace.iterates else {
        return Ok(false);
    };
    let n = iterates.first().map_or(0, Vec::len);
    let names: Vec<String> = match &trace.column_names {
        Some(names) => names.clone(),
        None => (0..n).map(|i| format!("y{i}")).collect(),
    };
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    w.write_record(std::iter::once("k".to_string()).chain(names))?;
    for (row, y) in trace.rows.iter().zip(iterates) {
        w.write_record(std::iter::once(row.k.to_string()).chain(y.iter().map(|v| format_real(*v))))?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(true)
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    schema: u32,
    /// Seconds since the Unix epoch; not part of any comparison.
    timestamp: u64,
    trace: &'a Trace,
}

#[derive(Deserialize)]
struct EnvelopeIn {
    schema: u32,
    #[allow(dead_code)]
    #[serde(default)]
    timestamp: Option<u64>,
    trace: Trace,
}

pub fn to_json_string(trace: &Trace) -> Result<String, TraceIoError> {
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs());
    let env = EnvelopeOut {
        schema: SCHEMA_VERSION,
        timestamp,
        trace,
    };
    Ok(serde_json::to_string_pretty(&env)?)
}

pub fn from_json_str(text: &str) -> Result<Trace, TraceIoError> {
    #[derive(Deserialize)]
    struct SchemaOnly {
        schema: u32,
    }
    let probe: SchemaOnly = serde_json::from_str(text)?;
    if probe.schema != SCHEMA_VERSION {
        return Err(TraceIoError::Schema(probe.schema));
    }
    let env: EnvelopeIn = serde_json::from_str(text)?;
    debug_assert_eq!(env.schema, SCHEMA_VERSION);
    Ok(env.trace)
}

pub fn write_json(trace: &Trace, path: &Path) -> Result<(), TraceIoError> {
    let text = to_json_string(trace)?;
    let mut f = File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))?;
    f.write_all(b"\n").map_err(io_err(path))
}

pub fn read_json(path: &Path) -> Result<Trace, TraceIoError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    from_json_str(&text)
}

/// Drops the `timestamp` line so two JSON traces can be compared for
/// byte equality.
pub fn strip_timestamp(json: &str) -> String {
    json.lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp\""))
        .collect::<Vec<_>>()
        .join("\n")
}
