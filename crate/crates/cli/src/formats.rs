//! File formats: small UTF-8 text files with `#` comments and blank lines
//! ignored.
//!
//! - `vertices.csv`: `id,x1,...,xd`, ids dense from 0
//! - `simplices.csv`: `v0,v1,...,vd` per line
//! - `data.csv`: `x1,...,xd[,weight]` per line; either every line carries a
//!   weight or none does
//! - fit output: flat `key value` lines; numbers print in shortest
//!   round-trip form so parsing and re-emitting reproduces the file
//!   byte-for-byte

use std::fmt::Write as _;
use std::path::Path;

pub struct ParseError {
    pub message: String,
}

impl ParseError {
    fn new(path: &Path, line_no: usize, what: impl std::fmt::Display) -> Self {
        Self {
            message: format!("{}:{}: {}", path.display(), line_no, what),
        }
    }
}

/// Content lines with comments stripped, paired with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

fn parse_fields<T: std::str::FromStr>(
    path: &Path,
    line_no: usize,
    line: &str,
) -> Result<Vec<T>, ParseError> {
    line.split(',')
        .map(|f| {
            f.trim()
                .parse::<T>()
                .map_err(|_| ParseError::new(path, line_no, format!("cannot parse field {f:?}")))
        })
        .collect()
}

/// `id,x1,...,xd` rows; returns coordinates ordered by id after checking
/// the ids are exactly `0..n`.
pub fn read_vertices(path: &Path, text: &str) -> Result<Vec<Vec<f64>>, ParseError> {
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::new();
    for (line_no, line) in content_lines(text) {
        let fields: Vec<f64> = parse_fields(path, line_no, line)?;
        if fields.len() < 2 {
            return Err(ParseError::new(path, line_no, "need id and coordinates"));
        }
        if fields[0] < 0.0 || fields[0].fract() != 0.0 {
            return Err(ParseError::new(path, line_no, "id must be a nonnegative integer"));
        }
        rows.push((fields[0] as usize, fields[1..].to_vec()));
    }
    if rows.is_empty() {
        return Err(ParseError {
            message: format!("{}: no vertices", path.display()),
        });
    }
    rows.sort_by_key(|(id, _)| *id);
    for (expect, (id, _)) in rows.iter().enumerate() {
        if *id != expect {
            return Err(ParseError {
                message: format!("{}: vertex ids must be dense from 0 (missing {expect})", path.display()),
            });
        }
    }
    Ok(rows.into_iter().map(|(_, coords)| coords).collect())
}

/// `v0,v1,...,vd` rows.
pub fn read_simplices(path: &Path, text: &str) -> Result<Vec<Vec<usize>>, ParseError> {
    let mut rows = Vec::new();
    for (line_no, line) in content_lines(text) {
        rows.push(parse_fields(path, line_no, line)?);
    }
    if rows.is_empty() {
        return Err(ParseError {
            message: format!("{}: no simplices", path.display()),
        });
    }
    Ok(rows)
}

/// `x1,...,xd[,weight]` rows. Weight usage must be consistent across rows.
pub fn read_data(
    path: &Path,
    text: &str,
    dim: usize,
) -> Result<(Vec<Vec<f64>>, Option<Vec<f64>>), ParseError> {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut weighted: Option<bool> = None;
    for (line_no, line) in content_lines(text) {
        let fields: Vec<f64> = parse_fields(path, line_no, line)?;
        let has_weight = if fields.len() == dim {
            false
        } else if fields.len() == dim + 1 {
            true
        } else {
            return Err(ParseError::new(
                path,
                line_no,
                format!("expected {dim} coordinates (optionally a weight), got {} fields", fields.len()),
            ));
        };
        match weighted {
            None => weighted = Some(has_weight),
            Some(w) if w != has_weight => {
                return Err(ParseError::new(
                    path,
                    line_no,
                    "either every row carries a weight or none does",
                ))
            }
            _ => {}
        }
        if has_weight {
            weights.push(fields[dim]);
            points.push(fields[..dim].to_vec());
        } else {
            points.push(fields);
        }
    }
    let weights = if weighted == Some(true) { Some(weights) } else { None };
    Ok((points, weights))
}

/// Everything the `fit` command writes: reproducible manifest fields plus
/// the fitted values. Field order is fixed so emit(parse(x)) == x.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOutput {
    pub version: String,
    pub eps: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub n_vertices: usize,
    pub n_simplices: usize,
    pub n_points: usize,
    pub converged: bool,
    pub iterations: usize,
    pub loglik: f64,
    pub grad_norm: f64,
    pub mass: f64,
    pub vertex_values: Vec<f64>,
}

impl FitOutput {
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command fit");
        let _ = writeln!(s, "version {}", self.version);
        let _ = writeln!(s, "eps {}", self.eps);
        let _ = writeln!(s, "tol {}", self.tol);
        let _ = writeln!(s, "max_iter {}", self.max_iter);
        let _ = writeln!(s, "n_vertices {}", self.n_vertices);
        let _ = writeln!(s, "n_simplices {}", self.n_simplices);
        let _ = writeln!(s, "n_points {}", self.n_points);
        let _ = writeln!(s, "converged {}", self.converged);
        let _ = writeln!(s, "iterations {}", self.iterations);
        let _ = writeln!(s, "loglik {}", self.loglik);
        let _ = writeln!(s, "grad_norm {}", self.grad_norm);
        let _ = writeln!(s, "mass {}", self.mass);
        for (id, v) in self.vertex_values.iter().enumerate() {
            let _ = writeln!(s, "vertex_value {id} {v}");
        }
        s
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, ParseError> {
        let mut out = FitOutput {
            version: String::new(),
            eps: f64::NAN,
            tol: f64::NAN,
            max_iter: 0,
            n_vertices: 0,
            n_simplices: 0,
            n_points: 0,
            converged: false,
            iterations: 0,
            loglik: f64::NAN,
            grad_norm: f64::NAN,
            mass: f64::NAN,
            vertex_values: Vec::new(),
        };
        for (line_no, line) in content_lines(text) {
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or("");
            let bad = |what: &str| ParseError::new(path, line_no, format!("{what} in {line:?}"));
            let mut value = || parts.next().ok_or_else(|| bad("missing value"));
            match key {
                "command" => {
                    if value()? != "fit" {
                        return Err(bad("unknown command"));
                    }
                }
                "version" => out.version = value()?.to_string(),
                "eps" => out.eps = value()?.parse().map_err(|_| bad("bad float"))?,
                "tol" => out.tol = value()?.parse().map_err(|_| bad("bad float"))?,
                "max_iter" => out.max_iter = value()?.parse().map_err(|_| bad("bad int"))?,
                "n_vertices" => out.n_vertices = value()?.parse().map_err(|_| bad("bad int"))?,
                "n_simplices" => out.n_simplices = value()?.parse().map_err(|_| bad("bad int"))?,
                "n_points" => out.n_points = value()?.parse().map_err(|_| bad("bad int"))?,
                "converged" => out.converged = value()?.parse().map_err(|_| bad("bad bool"))?,
                "iterations" => out.iterations = value()?.parse().map_err(|_| bad("bad int"))?,
                "loglik" => out.loglik = value()?.parse().map_err(|_| bad("bad float"))?,
                "grad_norm" => out.grad_norm = value()?.parse().map_err(|_| bad("bad float"))?,
                "mass" => out.mass = value()?.parse().map_err(|_| bad("bad float"))?,
                "vertex_value" => {
                    let id: usize = value()?.parse().map_err(|_| bad("bad id"))?;
                    let v: f64 = value()?.parse().map_err(|_| bad("bad float"))?;
                    if id != out.vertex_values.len() {
                        return Err(bad("vertex ids out of order"));
                    }
                    out.vertex_values.push(v);
                }
                _ => return Err(bad("unknown key")),
            }
        }
        Ok(out)
    }
}
