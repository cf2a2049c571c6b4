//! Plain-text instance (`.bpinst`) and graph (`.bpgraph`) files.
//!
//! `.bpinst`: a line `m n`, then `m` rows of `n` numbers for `A`, then one
//! row of `m` numbers for `b`.
//!
//! `.bpgraph`: a line `V E s t`, then `E` lines `tail head`.
//!
//! Blank lines and lines starting with `#` are ignored in both.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bpdyn_core::linalg::Matrix;
use bpdyn_core::model::{build_graph_instance, GraphSpec, Instance};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] bpdyn_core::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_fields<T: FromStr>(line: usize, text: &str, expected: usize) -> Result<Vec<T>, FormatError> {
    let fields: Vec<T> = text
        .split_whitespace()
        .map(|tok| {
            tok.parse::<T>()
                .map_err(|_| parse_err(line, format!("cannot parse {tok:?}")))
        })
        .collect::<Result<_, _>>()?;
    if fields.len() != expected {
        return Err(parse_err(
            line,
            format!("expected {expected} fields, found {}", fields.len()),
        ));
    }
    Ok(fields)
}

pub fn parse_instance(text: &str) -> Result<Instance, FormatError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty instance file"))?;
    let dims: Vec<usize> = parse_fields(hl, header, 2)?;
    let (m, n) = (dims[0], dims[1]);
    let mut data = Vec::with_capacity(m * n);
    for r in 0..m {
        let (ln, row) = lines
            .next()
            .ok_or_else(|| parse_err(hl, format!("missing row {} of A", r + 1)))?;
        data.extend(parse_fields::<f64>(ln, row, n)?);
    }
    let (bl, brow) = lines
        .next()
        .ok_or_else(|| parse_err(hl, "missing right-hand side b"))?;
    let b: Vec<f64> = parse_fields(bl, brow, m)?;
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content after b"));
    }
    Ok(Instance::new(Matrix::new(m, n, data)?, b)?)
}

pub fn write_instance(inst: &Instance) -> String {
    let a = inst.a();
    let mut out = format!("{} {}\n", a.rows(), a.cols());
    for r in 0..a.rows() {
        out.push_str(&join(a.row(r)));
        out.push('\n');
    }
    out.push_str(&join(inst.b()));
    out.push('\n');
    out
}

fn join(values: &[f64]) -> String {
    let mut s = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        write!(s, "{v}").unwrap();
    }
    s
}

pub fn parse_graph(text: &str) -> Result<GraphSpec, FormatError> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(1, "empty graph file"))?;
    let h: Vec<usize> = parse_fields(hl, header, 4)?;
    let (vertex_count, edge_count, source, sink) = (h[0], h[1], h[2], h[3]);
    let mut edges = Vec::with_capacity(edge_count);
    for e in 0..edge_count {
        let (ln, row) = lines
            .next()
            .ok_or_else(|| parse_err(hl, format!("missing edge {}", e + 1)))?;
        let uv: Vec<usize> = parse_fields(ln, row, 2)?;
        edges.push((uv[0], uv[1]));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln, "trailing content after edges"));
    }
    let g = GraphSpec {
        vertex_count,
        edges,
        source,
        sink,
    };
    g.validate()?;
    Ok(g)
}

pub fn write_graph(g: &GraphSpec) -> String {
    let mut out = format!("{} {} {} {}\n", g.vertex_count, g.edges.len(), g.source, g.sink);
    for (u, v) in &g.edges {
        writeln!(out, "{u} {v}").unwrap();
    }
    out
}

/// Whitespace-separated numbers, any line layout.
pub fn parse_vector(text: &str) -> Result<Vec<f64>, FormatError> {
    let mut out = Vec::new();
    for (ln, line) in content_lines(text) {
        for tok in line.split_whitespace() {
            out.push(
                tok.parse()
                    .map_err(|_| parse_err(ln, format!("cannot parse {tok:?}")))?,
            );
        }
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_owned(),
        source,
    })
}

pub fn read_instance_file(path: &Path) -> Result<Instance, FormatError> {
    parse_instance(&read(path)?)
}

pub fn read_graph_file(path: &Path) -> Result<Instance, FormatError> {
    Ok(build_graph_instance(&parse_graph(&read(path)?)?)?)
}

pub fn read_vector_file(path: &Path) -> Result<Vec<f64>, FormatError> {
    parse_vector(&read(path)?)
}
