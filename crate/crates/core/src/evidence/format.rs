//! Plain-text `key = value` format for information structures.
//!
//! ```text
//! prior = 0.5
//! signal = 0.75:0.25, 0.25:0.75      # P(s | omega=1):P(s | omega=0) per outcome
//! signal = 0.75:0.25, 0.25:0.75
//! posteriors = 0.75@0.5, 0.25@0.5    # or: posterior@weight per outcome
//! row = 1, 1, 0
//! row = 0, 1, 1
//! ```
//!
//! `signal` and `posteriors` lines define signals in order and may be mixed.
//! Writing always emits `signal` lines with round-trip float formatting.

use std::fmt::Write as _;

use super::matrix::parse_row;
use super::{EvidenceMatrix, InformationStructure, SignalDistribution};
use crate::error::{Error, Result};

enum SignalSpec {
    Conditionals(Vec<(f64, f64)>),
    Posteriors(Vec<(f64, f64)>),
}

fn parse_number(text: &str, line: usize) -> Result<f64> {
    text.trim().parse::<f64>().map_err(|_| Error::Parse {
        line,
        msg: format!("`{}` is not a number", text.trim()),
    })
}

fn parse_pairs(text: &str, sep: char, line: usize) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|item| {
            let (a, b) = item.split_once(sep).ok_or_else(|| Error::Parse {
                line,
                msg: format!("expected `a{sep}b`, got `{}`", item.trim()),
            })?;
            Ok((parse_number(a, line)?, parse_number(b, line)?))
        })
        .collect()
}

/// Parses the text format.
pub fn parse_structure(text: &str) -> Result<InformationStructure> {
    let mut prior = None;
    let mut specs = Vec::new();
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: line_no,
            msg: "expected `key = value`".into(),
        })?;
        match key.trim() {
            "prior" => prior = Some(parse_number(value, line_no)?),
            "signal" => specs.push((line_no, SignalSpec::Conditionals(parse_pairs(value, ':', line_no)?))),
            "posteriors" => specs.push((line_no, SignalSpec::Posteriors(parse_pairs(value, '@', line_no)?))),
            "row" => rows.push(parse_row(value, line_no)?),
            other => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }
    let prior = prior.ok_or(Error::Parse {
        line: 0,
        msg: "missing `prior`".into(),
    })?;
    let signals = specs
        .into_iter()
        .map(|(line, spec)| {
            match spec {
                SignalSpec::Conditionals(pairs) => SignalDistribution::from_pairs(prior, &pairs),
                SignalSpec::Posteriors(support) => SignalDistribution::from_posteriors(prior, &support),
            }
            .map_err(|e| Error::Parse {
                line,
                msg: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    InformationStructure::new(prior, signals, EvidenceMatrix::from_rows(&rows)?)
}

/// Serializes to the text format; `parse_structure` reads it back exactly.
pub fn write_structure(structure: &InformationStructure) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "prior = {}", structure.prior());
    for s in structure.signals() {
        let cells: Vec<String> = s
            .outcomes()
            .iter()
            .map(|o| format!("{}:{}", o.p_given_omega1, o.p_given_omega0))
            .collect();
        let _ = writeln!(out, "signal = {}", cells.join(", "));
    }
    for row in structure.evidence().rows_u8() {
        let cells: Vec<String> = row.iter().map(u8::to_string).collect();
        let _ = writeln!(out, "row = {}", cells.join(", "));
    }
    out
}
