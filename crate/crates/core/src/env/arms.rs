//! Plain-text arm files.
//!
//! ```text
//! # optional comment lines
//! d=<int> K=<int> has_means=<0|1>
//! x_1 ... x_d [mean]
//! ...
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// Arm contexts with optional per-arm Bernoulli means.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmSet {
    pub contexts: Vec<DVector<f64>>,
    pub means: Option<Vec<f64>>,
}

impl ArmSet {
    pub fn dim(&self) -> usize {
        self.contexts.first().map_or(0, |x| x.len())
    }

    pub fn len(&self) -> usize {
        self.contexts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contexts.is_empty()
    }

    /// Divides every context by the largest row norm.
    pub fn normalize(&mut self) {
        let max = self.contexts.iter().map(|x| x.norm()).fold(0.0, f64::max);
        if max > 0.0 {
            for x in &mut self.contexts {
                *x /= max;
            }
        }
    }
}

fn load_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Load {
        line,
        msg: msg.into(),
    }
}

fn header_field(tok: Option<&str>, key: &str, line: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| load_err(line, format!("header is missing `{key}=`")))?;
    let value = tok
        .strip_prefix(key)
        .and_then(|rest| rest.strip_prefix('='))
        .ok_or_else(|| load_err(line, format!("expected `{key}=<int>`, found `{tok}`")))?;
    value
        .parse()
        .map_err(|_| load_err(line, format!("`{key}` is not an integer: `{value}`")))
}

/// Parses arm-file text and normalizes the contexts into the unit ball.
pub fn parse_arm_file(text: &str) -> Result<ArmSet> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (hline, header) = lines.next().ok_or_else(|| load_err(1, "file is empty"))?;
    let mut toks = header.split_whitespace();
    let d = header_field(toks.next(), "d", hline)?;
    let k = header_field(toks.next(), "K", hline)?;
    let has_means = match header_field(toks.next(), "has_means", hline)? {
        0 => false,
        1 => true,
        other => {
            return Err(load_err(
                hline,
                format!("has_means must be 0 or 1, got {other}"),
            ))
        }
    };
    if let Some(extra) = toks.next() {
        return Err(load_err(
            hline,
            format!("unexpected header token `{extra}`"),
        ));
    }
    if d == 0 || k == 0 {
        return Err(load_err(hline, "d and K must be positive"));
    }

    let width = d + usize::from(has_means);
    let mut contexts = Vec::with_capacity(k);
    let mut means = has_means.then(|| Vec::with_capacity(k));
    let mut last_line = hline;
    for (lineno, row) in lines {
        last_line = lineno;
        if contexts.len() == k {
            return Err(load_err(lineno, format!("more than K={k} rows")));
        }
        let values: Vec<f64> = row
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| load_err(lineno, format!("malformed number `{tok}`")))
            })
            .collect::<Result<_>>()?;
        if values.len() != width {
            return Err(load_err(
                lineno,
                format!("expected {width} values, found {}", values.len()),
            ));
        }
        contexts.push(DVector::from_column_slice(&values[..d]));
        if let Some(means) = means.as_mut() {
            let m = values[d];
            if !(0.0..=1.0).contains(&m) {
                return Err(load_err(lineno, format!("mean {m} outside [0, 1]")));
            }
            means.push(m);
        }
    }
    if contexts.len() != k {
        return Err(load_err(
            last_line,
            format!("expected K={k} rows, found {}", contexts.len()),
        ));
    }
    let mut arms = ArmSet { contexts, means };
    arms.normalize();
    Ok(arms)
}

pub fn load_arm_file(path: impl AsRef<Path>) -> Result<ArmSet> {
    parse_arm_file(&fs::read_to_string(path)?)
}

pub fn format_arm_file(arms: &ArmSet) -> String {
    let mut out = format!(
        "d={} K={} has_means={}\n",
        arms.dim(),
        arms.len(),
        u8::from(arms.means.is_some())
    );
    for (i, x) in arms.contexts.iter().enumerate() {
        let row: Vec<String> = x.iter().map(|v| v.to_string()).collect();
        out.push_str(&row.join(" "));
        if let Some(m) = &arms.means {
            let _ = write!(out, " {}", m[i]);
        }
        out.push('\n');
    }
    out
}

pub fn write_arm_file(path: impl AsRef<Path>, arms: &ArmSet) -> Result<()> {
    fs::write(path, format_arm_file(arms))?;
    Ok(())
}
