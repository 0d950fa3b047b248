//! Text formats for inputs and artifacts.
//!
//! * graph: header `vertices N loops {0|1}`, then one `u v` edge per line;
//!   blank lines and `#` comments are ignored
//! * point cloud: CSV whose first row is `epsilon,<value>`, then one row of
//!   coordinates per point
//! * vertex function: CSV `vertex_index,value` with a header row
//! * trace, ladder, 1D plot and transcript CSVs (write only)
//! * JSON artifacts, each carrying `schema_version`
//!
//! Parse errors report 1-based line and column.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::continuum::{CfLadder, DomainSpec};
use crate::engine::{CfBracket, IterationTrace};
use crate::error::{Error, Result};
use crate::graph::{build_finite_graph, Graph, PointCloud, VertexFunction};
use crate::sim::GameTranscript;
use crate::solver::{MethodTag, SolveResult};

pub const SCHEMA_VERSION: u32 = 1;

fn parse_err(source: &str, line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        source_name: source.to_string(),
        line,
        column,
        message: message.into(),
    }
}

/// Whitespace-separated tokens with their 1-based columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("")
}

pub fn parse_graph(text: &str, source: &str) -> Result<Graph> {
    let mut header: Option<(usize, bool)> = None;
    let mut edges = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let toks = tokens(strip_comment(raw));
        if toks.is_empty() {
            continue;
        }
        match header {
            None => {
                let expect = |i: usize, word: &str| -> Result<()> {
                    match toks.get(i) {
                        Some((_, t)) if *t == word => Ok(()),
                        Some((col, t)) => Err(parse_err(
                            source,
                            line_no,
                            *col,
                            format!("expected '{word}', found '{t}'"),
                        )),
                        None => Err(parse_err(
                            source,
                            line_no,
                            raw.len() + 1,
                            format!("expected '{word}'"),
                        )),
                    }
                };
                expect(0, "vertices")?;
                let n = parse_usize(source, line_no, toks.get(1), raw.len())?;
                expect(2, "loops")?;
                let loops = match toks.get(3) {
                    Some((_, "0")) => false,
                    Some((_, "1")) => true,
                    Some((col, t)) => {
                        return Err(parse_err(
                            source,
                            line_no,
                            *col,
                            format!("loops flag must be 0 or 1, found '{t}'"),
                        ))
                    }
                    None => {
                        return Err(parse_err(
                            source,
                            line_no,
                            raw.len() + 1,
                            "missing loops flag",
                        ))
                    }
                };
                if let Some((col, t)) = toks.get(4) {
                    return Err(parse_err(
                        source,
                        line_no,
                        *col,
                        format!("unexpected '{t}' after header"),
                    ));
                }
                header = Some((n, loops));
            }
            Some((n, _)) => {
                let a = parse_usize(source, line_no, toks.first(), raw.len())?;
                let b = parse_usize(source, line_no, toks.get(1), raw.len())?;
                if let Some((col, t)) = toks.get(2) {
                    return Err(parse_err(
                        source,
                        line_no,
                        *col,
                        format!("unexpected '{t}' after edge"),
                    ));
                }
                for (v, (col, _)) in [(a, toks[0]), (b, toks[1])] {
                    if v >= n {
                        return Err(parse_err(
                            source,
                            line_no,
                            col,
                            format!("vertex {v} out of range for {n} vertices"),
                        ));
                    }
                }
                edges.push((a, b));
            }
        }
    }
    let (n, loops) =
        header.ok_or_else(|| parse_err(source, 1, 1, "missing header 'vertices N loops {0|1}'"))?;
    build_finite_graph(n, &edges, loops)
}

fn parse_usize(
    source: &str,
    line: usize,
    tok: Option<&(usize, &str)>,
    line_len: usize,
) -> Result<usize> {
    match tok {
        Some((col, t)) => t.parse().map_err(|_| {
            parse_err(
                source,
                line,
                *col,
                format!("expected a nonnegative integer, found '{t}'"),
            )
        }),
        None => Err(parse_err(
            source,
            line,
            line_len + 1,
            "expected a nonnegative integer",
        )),
    }
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    parse_graph(&fs::read_to_string(path)?, &path.display().to_string())
}

/// Edge list of a finite graph; loops are folded into the header when every
/// vertex has one.
pub fn format_graph(g: &Graph) -> String {
    let loops = g.has_all_loops();
    let mut s = format!("vertices {} loops {}\n", g.vertex_count(), u8::from(loops));
    for x in 0..g.vertex_count() {
        for &y in g.neighbors(x) {
            if y > x || (y == x && !loops) {
                s.push_str(&format!("{x} {y}\n"));
            }
        }
    }
    s
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

fn csv_err(source: &str, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    parse_err(source, line, 1, e.to_string())
}

/// 1-based column of field `i` on a line of the original text.
fn field_column(text: &str, line: usize, i: usize) -> usize {
    let Some(raw) = text.lines().nth(line.saturating_sub(1)) else {
        return 1;
    };
    let mut col = 1;
    for (j, piece) in raw.split(',').enumerate() {
        if j == i {
            return col + (piece.len() - piece.trim_start().len());
        }
        col += piece.len() + 1;
    }
    col
}

fn field_f64(text: &str, source: &str, rec: &csv::StringRecord, i: usize) -> Result<f64> {
    let line = rec.position().map_or(0, |p| p.line() as usize);
    let column = field_column(text, line, i);
    let raw = rec.get(i).unwrap_or("");
    let v: f64 = raw.parse().map_err(|_| {
        parse_err(
            source,
            line,
            column,
            format!("expected a number, found '{raw}'"),
        )
    })?;
    if !v.is_finite() {
        return Err(parse_err(
            source,
            line,
            column,
            format!("non-finite value '{raw}'"),
        ));
    }
    Ok(v)
}

fn is_blank(rec: &csv::StringRecord) -> bool {
    rec.iter().all(|f| f.is_empty())
}

pub fn parse_point_cloud(text: &str, source: &str) -> Result<PointCloud> {
    let mut rdr = csv_reader(text);
    let mut eps = None;
    let mut points = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(source, e))?;
        if is_blank(&rec) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if eps.is_none() {
            if rec.get(0) != Some("epsilon") || rec.len() != 2 {
                return Err(parse_err(
                    source,
                    line,
                    1,
                    "first row must be 'epsilon,<value>'",
                ));
            }
            eps = Some(field_f64(text, source, &rec, 1)?);
            continue;
        }
        let p = (0..rec.len())
            .map(|i| field_f64(text, source, &rec, i))
            .collect::<Result<Vec<_>>>()?;
        if let Some(first) = points.first().map(Vec::len) {
            if p.len() != first {
                return Err(parse_err(
                    source,
                    line,
                    1,
                    format!("expected {first} coordinates, found {}", p.len()),
                ));
            }
        }
        points.push(p);
    }
    let eps = eps.ok_or_else(|| parse_err(source, 1, 1, "missing 'epsilon,<value>' row"))?;
    PointCloud::new(points, eps)
}

pub fn read_point_cloud(path: &Path) -> Result<PointCloud> {
    parse_point_cloud(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn format_point_cloud(cloud: &PointCloud) -> String {
    let mut s = format!("epsilon,{}\n", cloud.epsilon());
    for p in cloud.points() {
        s.push_str(&join(p.iter()));
        s.push('\n');
    }
    s
}

/// Reads `vertex_index,value` rows; every index in `0..len` must appear once.
pub fn parse_vertex_function(text: &str, source: &str) -> Result<VertexFunction> {
    let mut rdr = csv_reader(text);
    let mut header_seen = false;
    let mut entries: Vec<Option<f64>> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_err(source, e))?;
        if is_blank(&rec) {
            continue;
        }
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if !header_seen {
            if rec.get(0) != Some("vertex_index") || rec.get(1) != Some("value") {
                return Err(parse_err(
                    source,
                    line,
                    1,
                    "expected header 'vertex_index,value'",
                ));
            }
            header_seen = true;
            continue;
        }
        if rec.len() != 2 {
            return Err(parse_err(
                source,
                line,
                1,
                format!("expected 2 fields, found {}", rec.len()),
            ));
        }
        let col = field_column(text, line, 0);
        let idx: usize =
            rec.get(0).unwrap_or("").parse().map_err(|_| {
                parse_err(source, line, col, format!("bad vertex index '{}'", &rec[0]))
            })?;
        let value = field_f64(text, source, &rec, 1)?;
        if idx >= entries.len() {
            entries.resize(idx + 1, None);
        }
        if entries[idx].replace(value).is_some() {
            return Err(parse_err(
                source,
                line,
                col,
                format!("vertex {idx} listed twice"),
            ));
        }
    }
    if let Some(missing) = entries.iter().position(Option::is_none) {
        return Err(parse_err(
            source,
            1,
            1,
            format!("no value for vertex {missing}"),
        ));
    }
    if entries.is_empty() {
        return Err(parse_err(source, 1, 1, "no values"));
    }
    VertexFunction::new(entries.into_iter().map(|v| v.expect("checked")).collect())
}

pub fn read_vertex_function(path: &Path) -> Result<VertexFunction> {
    parse_vertex_function(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn format_vertex_function(f: &VertexFunction) -> String {
    let mut s = String::from("vertex_index,value\n");
    for (i, v) in f.values().iter().enumerate() {
        s.push_str(&format!("{i},{v}\n"));
    }
    s
}

/// Comma-separated literal such as `-1,2,-1`.
pub fn parse_inline_function(text: &str) -> Result<VertexFunction> {
    let mut values = Vec::new();
    let mut column = 1;
    for piece in text.split(',') {
        let t = piece.trim();
        let v: f64 = t.parse().map_err(|_| {
            parse_err(
                "<inline>",
                1,
                column,
                format!("expected a number, found '{t}'"),
            )
        })?;
        values.push(v);
        column += piece.len() + 1;
    }
    VertexFunction::new(values)
}

fn join<T: std::fmt::Display>(it: impl Iterator<Item = T>) -> String {
    it.map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// `n,max_u,min_u,M_n,m_n`; the increment columns are empty at `n = 0`.
pub fn format_trace_csv(trace: &IterationTrace) -> String {
    let mut s = String::from("n,max_u,min_u,M_n,m_n\n");
    for k in 0..=trace.n {
        let (inc_hi, inc_lo) = if k == 0 {
            (String::new(), String::new())
        } else {
            (
                trace.max_increments[k - 1].to_string(),
                trace.min_increments[k - 1].to_string(),
            )
        };
        s.push_str(&format!(
            "{k},{},{},{inc_hi},{inc_lo}\n",
            trace.max_u[k], trace.min_u[k]
        ));
    }
    s
}

/// `eps,cf_lower,cf_upper,certificate`, with `osc(f, 2 eps)` of each rung in
/// the last column.
pub fn format_ladder_csv(ladder: &CfLadder) -> String {
    let mut s = String::from("eps,cf_lower,cf_upper,certificate\n");
    for r in &ladder.rungs {
        s.push_str(&format!(
            "{},{},{},{}\n",
            r.eps, r.bracket.lower, r.bracket.upper, r.osc_2eps
        ));
    }
    s
}

/// `x,u` rows sorted by `x` for one-dimensional clouds.
pub fn format_plot_csv(points: &[Vec<f64>], u: &VertexFunction) -> Result<String> {
    u.check_len(points.len())?;
    if points.iter().any(|p| p.len() != 1) {
        return Err(Error::InvalidParameter(
            "plot export needs a one-dimensional cloud".into(),
        ));
    }
    let mut rows: Vec<(f64, f64)> = points
        .iter()
        .map(|p| p[0])
        .zip(u.values().iter().copied())
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut s = String::from("x,u\n");
    for (x, v) in rows {
        s.push_str(&format!("{x},{v}\n"));
    }
    Ok(s)
}

/// `trial,step,position,flip`; `flip` is 1 when the maximizer moved and is
/// empty on the terminal position.
pub fn format_transcripts_csv(transcripts: &[GameTranscript]) -> String {
    let mut s = String::from("trial,step,position,flip\n");
    for t in transcripts {
        for (k, x) in t.positions.iter().enumerate() {
            let flip = t
                .coin_flips
                .get(k)
                .map_or(String::new(), |b| u8::from(*b).to_string());
            s.push_str(&format!("{},{k},{x},{flip}\n", t.trial));
        }
    }
    s
}

/// A JSON artifact: `{"schema_version": 1, ...fields of T}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: u32,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            body,
        }
    }
}

pub fn to_json<T: Serialize>(body: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Versioned::new(body))?)
}

/// Parses a versioned artifact, rejecting unknown schema versions.
pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str, source: &str) -> Result<T> {
    let v: Versioned<T> = serde_json::from_str(text)
        .map_err(|e| parse_err(source, e.line(), e.column(), e.to_string()))?;
    if v.schema_version != SCHEMA_VERSION {
        return Err(parse_err(
            source,
            1,
            1,
            format!("unsupported schema_version {}", v.schema_version),
        ));
    }
    Ok(v.body)
}

/// Solve result in export form `{c, residual, iterations, method, rate_alpha, u}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveRecord {
    pub c: f64,
    pub residual: f64,
    pub iterations: usize,
    pub method: MethodTag,
    pub rate_alpha: Option<f64>,
    pub u: Vec<f64>,
}

impl From<&SolveResult> for SolveRecord {
    fn from(r: &SolveResult) -> Self {
        Self {
            c: r.c,
            residual: r.residual,
            iterations: r.iterations,
            method: r.method,
            rate_alpha: r.rate_alpha,
            u: r.u.values().to_vec(),
        }
    }
}

pub fn bracket_json(b: &CfBracket) -> Result<String> {
    to_json(b)
}

pub fn solve_result_json(r: &SolveResult) -> Result<String> {
    to_json(&SolveRecord::from(r))
}

pub fn domain_json(d: &DomainSpec) -> Result<String> {
    to_json(d)
}

pub fn parse_domain(text: &str, source: &str) -> Result<DomainSpec> {
    // Domain files written by hand may omit the version.
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| parse_err(source, e.line(), e.column(), e.to_string()))?;
    match value
        .get("schema_version")
        .and_then(serde_json::Value::as_u64)
    {
        Some(v) if v != u64::from(SCHEMA_VERSION) => Err(parse_err(
            source,
            1,
            1,
            format!("unsupported schema_version {v}"),
        )),
        _ => serde_json::from_value(value).map_err(|e| parse_err(source, 1, 1, e.to_string())),
    }
}

pub fn read_domain(path: &Path) -> Result<DomainSpec> {
    parse_domain(&fs::read_to_string(path)?, &path.display().to_string())
}
