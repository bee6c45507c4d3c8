//! Input parsing and output framing.
//!
//! Sample files hold one numeric column. Blank lines and lines starting
//! with `#` are skipped; the first remaining line may be a header.
//! Outputs are CSV (`\n` line endings, 17 significant digits) preceded by
//! `# ` comment lines carrying the resolved configuration, or JSON.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub n: u64,
    pub min: f64,
    pub max: f64,
}

/// Streams the numeric values of a sample file into `sink`, in order.
/// Every unparseable or non-finite row is reported with its line number.
pub fn for_each_value(path: &Path, mut sink: impl FnMut(f64) -> CliResult<()>) -> CliResult<SampleStats> {
    let file = File::open(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let mut stats = SampleStats {
        n: 0,
        min: f64::INFINITY,
        max: f64::NEG_INFINITY,
    };
    let mut bad = Vec::new();
    let mut seen_row = false;
    for (index, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let field = line.trim();
        if field.is_empty() || field.starts_with('#') {
            continue;
        }
        let first = !seen_row;
        seen_row = true;
        match field.parse::<f64>() {
            Ok(x) if x.is_finite() => {
                stats.n += 1;
                stats.min = stats.min.min(x);
                stats.max = stats.max.max(x);
                sink(x)?;
            }
            Err(_) if first && field.chars().next().is_some_and(|c| c.is_alphabetic() || c == '"') => {}
            _ => bad.push(index + 1),
        }
    }
    if !bad.is_empty() {
        const SHOWN: usize = 20;
        let lines: Vec<String> = bad.iter().take(SHOWN).map(usize::to_string).collect();
        let more = if bad.len() > SHOWN { format!(" and {} more", bad.len() - SHOWN) } else { String::new() };
        return Err(CliError::Data(format!(
            "{}: unparseable rows at lines {}{more}",
            path.display(),
            lines.join(", ")
        )));
    }
    Ok(stats)
}

/// Reads a model specification given inline (starting with `{`) or as a
/// file path.
pub fn read_model_text(arg: &str) -> CliResult<String> {
    if arg.trim_start().starts_with('{') {
        return Ok(arg.to_string());
    }
    std::fs::read_to_string(arg).map_err(|e| CliError::Data(format!("{arg}: {e}")))
}

/// Destination of the main output: a file or stdout.
pub fn open_output(path: Option<&Path>) -> CliResult<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `# `-prefixed lines holding the configuration as pretty JSON.
pub fn config_header<C: Serialize>(config: &C) -> String {
    let json = serde_json::to_string_pretty(config).expect("config serializes");
    json.lines().map(|l| format!("# {l}\n")).collect()
}
