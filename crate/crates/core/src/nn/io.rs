//! Plain-text weights file.
//!
//! ```text
//! # optional comment lines
//! 1 5 5 7 1
//! <parameter 0>
//! <parameter 1>
//! ...
//! ```
//!
//! Parameters follow the flattening order, one per line, printed with the
//! shortest representation that parses back to the same `f64`.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use super::{Activation, MinMax, Network, NnError, Normalizer};

#[derive(Debug, Error)]
pub enum WeightsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: parameter {index} is not finite")]
    NonFinite { line: usize, index: usize },
    #[error("truncated weights file: expected {expected} parameters, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error(transparent)]
    Network(#[from] NnError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn format_weights(net: &Network, comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(comment) = comment {
        let _ = writeln!(out, "# {comment}");
    }
    let sizes: Vec<String> = net.sizes().iter().map(usize::to_string).collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    for p in net.params() {
        let _ = writeln!(out, "{p}");
    }
    out
}

pub fn parse_weights(
    text: &str,
    hidden: Activation,
    output: Activation,
) -> Result<Network, WeightsError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.starts_with('#'));

    let (header_line, header) = lines.next().ok_or(WeightsError::Parse {
        line: 1,
        message: "missing layer-size header".into(),
    })?;
    let sizes = header
        .split_whitespace()
        .map(|tok| {
            tok.parse::<usize>().map_err(|_| WeightsError::Parse {
                line: header_line,
                message: format!("`{tok}` is not a layer size"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut net = Network::zeros(&sizes, hidden, output)?;
    let expected = net.param_count();

    let mut params = Vec::with_capacity(expected);
    for (line, text) in lines {
        if text.is_empty() {
            continue;
        }
        if params.len() == expected {
            return Err(WeightsError::Parse {
                line,
                message: format!("unexpected extra value after {expected} parameters"),
            });
        }
        let value: f64 = text.parse().map_err(|_| WeightsError::Parse {
            line,
            message: format!("`{text}` is not a number"),
        })?;
        if !value.is_finite() {
            return Err(WeightsError::NonFinite {
                line,
                index: params.len(),
            });
        }
        params.push(value);
    }
    if params.len() != expected {
        return Err(WeightsError::Truncated {
            expected,
            found: params.len(),
        });
    }
    net.set_params(&params)?;
    Ok(net)
}

pub fn save_weights(net: &Network, path: &Path, comment: Option<&str>) -> Result<(), WeightsError> {
    fs::write(path, format_weights(net, comment))?;
    Ok(())
}

pub fn load_weights(
    path: &Path,
    hidden: Activation,
    output: Activation,
) -> Result<Network, WeightsError> {
    parse_weights(&fs::read_to_string(path)?, hidden, output)
}

/// Two-line sidecar holding the min-max ranges the network was trained
/// under: `input <min> <max>` and `output <min> <max>`.
pub fn format_normalizer(norm: &Normalizer, comment: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(comment) = comment {
        let _ = writeln!(out, "# {comment}");
    }
    let _ = writeln!(out, "input {} {}", norm.input.min(), norm.input.max());
    let _ = writeln!(out, "output {} {}", norm.output.min(), norm.output.max());
    out
}

pub fn parse_normalizer(text: &str) -> Result<Normalizer, WeightsError> {
    let mut input = None;
    let mut output = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |message: String| WeightsError::Parse {
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [name, lo, hi] = fields[..] else {
            return Err(bad(format!(
                "expected `<input|output> <min> <max>`, got `{line}`"
            )));
        };
        let lo: f64 = lo
            .parse()
            .map_err(|_| bad(format!("`{lo}` is not a number")))?;
        let hi: f64 = hi
            .parse()
            .map_err(|_| bad(format!("`{hi}` is not a number")))?;
        let range =
            MinMax::new(lo, hi).ok_or_else(|| bad(format!("degenerate range [{lo}, {hi}]")))?;
        match name {
            "input" => input = Some(range),
            "output" => output = Some(range),
            other => return Err(bad(format!("unknown range `{other}`"))),
        }
    }
    match (input, output) {
        (Some(input), Some(output)) => Ok(Normalizer { input, output }),
        _ => Err(WeightsError::Parse {
            line: text.lines().count(),
            message: "normalizer needs both `input` and `output` ranges".into(),
        }),
    }
}

pub fn save_normalizer(
    norm: &Normalizer,
    path: &Path,
    comment: Option<&str>,
) -> Result<(), WeightsError> {
    fs::write(path, format_normalizer(norm, comment))?;
    Ok(())
}

pub fn load_normalizer(path: &Path) -> Result<Normalizer, WeightsError> {
    parse_normalizer(&fs::read_to_string(path)?)
}
