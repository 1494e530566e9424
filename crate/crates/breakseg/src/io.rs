//! File formats: signal CSV, truth-model JSON, integer position lists, and
//! annotation CSV.
//!
//! Lines starting with `#` are reproducibility comments; readers skip them
//! and writers can prepend them. Signal CSV carries a `position,value`
//! header; annotation CSV carries `lower,upper,min_breaks,max_breaks` with
//! a blank `max_breaks` meaning unbounded.

use std::io::{BufRead, BufReader, Read, Write};

use crate::annotation::{Annotation, AnnotationSet};
use crate::error::{Error, Result};
use crate::sim::{Signal, TrueModel};

/// Write a signal as CSV, prefixed by `# key=value` comment lines.
pub fn write_signal_csv<W: Write>(mut w: W, signal: &Signal, comments: &[String]) -> Result<()> {
    for comment in comments {
        writeln!(w, "# {comment}")?;
    }
    writeln!(w, "# P={}", signal.length())?;
    if let Some(seed) = signal.seed() {
        writeln!(w, "# seed={seed}")?;
    }
    writeln!(w, "position,value")?;
    for (pos, value) in signal.positions().iter().zip(signal.values()) {
        writeln!(w, "{pos},{value}")?;
    }
    Ok(())
}

/// Read a signal written by [`write_signal_csv`] (or any CSV with the same
/// header). The position-range extent comes from a `# P=` comment when
/// present, otherwise from the largest position.
pub fn read_signal_csv<R: Read>(r: R) -> Result<Signal> {
    let reader = BufReader::new(r);
    let mut positions = Vec::new();
    let mut values = Vec::new();
    let mut length: Option<usize> = None;
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(comment) = trimmed.strip_prefix('#') {
            for token in comment.split_whitespace() {
                if let Some(p) = token.strip_prefix("P=") {
                    length = p.parse().ok();
                }
            }
            continue;
        }
        if !saw_header {
            if trimmed != "position,value" {
                return Err(Error::parse(line_no, "expected header 'position,value'"));
            }
            saw_header = true;
            continue;
        }
        let (pos_str, value_str) = trimmed
            .split_once(',')
            .ok_or_else(|| Error::parse(line_no, "expected 'position,value'"))?;
        let pos: usize = pos_str
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad position '{pos_str}'")))?;
        let value: f64 = value_str
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad value '{value_str}'")))?;
        positions.push(pos);
        values.push(value);
    }
    if !saw_header {
        return Err(Error::parse(1, "missing 'position,value' header"));
    }
    let length = length.unwrap_or_else(|| positions.iter().copied().max().unwrap_or(1));
    Signal::new(positions, values, length)
}

/// Serialize a truth model to JSON (`P`, `segments`), with an optional
/// `meta` object carried alongside.
pub fn write_model_json<W: Write>(
    mut w: W,
    model: &TrueModel,
    meta: Option<serde_json::Value>,
) -> Result<()> {
    let mut value = serde_json::to_value(model).expect("model serializes");
    if let (Some(meta), Some(object)) = (meta, value.as_object_mut()) {
        object.insert("meta".to_string(), meta);
    }
    serde_json::to_writer_pretty(&mut w, &value)
        .map_err(|e| Error::invalid(format!("cannot encode model: {e}")))?;
    writeln!(w)?;
    Ok(())
}

pub fn read_model_json<R: Read>(r: R) -> Result<TrueModel> {
    let raw: TrueModel = serde_json::from_reader(r)
        .map_err(|e| Error::invalid(format!("cannot parse model JSON: {e}")))?;
    // Re-validate through the checked constructor.
    TrueModel::from_segments(raw.position_count(), raw.segments().to_vec())
}

/// Read a one-integer-per-line file (breaks or guesses); `#` comments and
/// blank lines are skipped. Returns `(line_number, value)` pairs so
/// callers can report the offending line on validation failures.
pub fn read_position_list<R: Read>(r: R) -> Result<Vec<(usize, usize)>> {
    let reader = BufReader::new(r);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let value: usize = trimmed
            .parse()
            .map_err(|_| Error::parse(line_no, format!("bad position '{trimmed}'")))?;
        out.push((line_no, value));
    }
    Ok(out)
}

pub fn write_position_list<W: Write>(mut w: W, positions: &[usize]) -> Result<()> {
    for pos in positions {
        writeln!(w, "{pos}")?;
    }
    Ok(())
}

/// Read annotations from CSV with header
/// `lower,upper,min_breaks,max_breaks`; blank `max_breaks` = unbounded.
pub fn read_annotations_csv<R: Read>(r: R) -> Result<AnnotationSet> {
    let reader = BufReader::new(r);
    let mut annotations = Vec::new();
    let mut saw_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if !saw_header {
            if trimmed != "lower,upper,min_breaks,max_breaks" {
                return Err(Error::parse(
                    line_no,
                    "expected header 'lower,upper,min_breaks,max_breaks'",
                ));
            }
            saw_header = true;
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(line_no, "expected 4 comma-separated fields"));
        }
        let parse_int = |s: &str, what: &str| -> Result<u64> {
            s.parse()
                .map_err(|_| Error::parse(line_no, format!("bad {what} '{s}'")))
        };
        let lower = parse_int(fields[0], "lower")? as usize;
        let upper = parse_int(fields[1], "upper")? as usize;
        let min_breaks = parse_int(fields[2], "min_breaks")?;
        let max_breaks = if fields[3].is_empty() {
            None
        } else {
            Some(parse_int(fields[3], "max_breaks")?)
        };
        annotations.push(
            Annotation::new(lower, upper, min_breaks, max_breaks)
                .map_err(|e| Error::parse(line_no, e.to_string()))?,
        );
    }
    if !saw_header {
        return Err(Error::parse(1, "missing annotation header"));
    }
    Ok(AnnotationSet::new(annotations))
}

pub fn write_annotations_csv<W: Write>(mut w: W, set: &AnnotationSet) -> Result<()> {
    writeln!(w, "lower,upper,min_breaks,max_breaks")?;
    for a in set.annotations() {
        let max = a.max_breaks.map_or(String::new(), |m| m.to_string());
        writeln!(w, "{},{},{},{}", a.lower, a.upper, a.min_breaks, max)?;
    }
    Ok(())
}
