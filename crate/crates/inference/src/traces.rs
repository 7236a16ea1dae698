//! JSONL trace files, one trace object per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use smellprop_core::{RawTrace, TokenTrace};

use crate::error::{Error, Result};

/// Parses JSONL trace text. Blank lines are skipped; errors cite 1-based lines.
pub fn parse_traces(reader: impl BufRead) -> impl Iterator<Item = Result<TokenTrace>> {
    reader.lines().enumerate().filter_map(|(k, line)| {
        let line = match line {
            Ok(l) => l,
            Err(e) => return Some(Err(Error::Io(e))),
        };
        if line.trim().is_empty() {
            return None;
        }
        let parsed = serde_json::from_str::<RawTrace>(&line)
            .map_err(|e| e.to_string())
            .and_then(|raw| smellprop_core::validate_trace(raw).map_err(|e| e.to_string()));
        Some(parsed.map_err(|message| Error::Line { line: k + 1, message }))
    })
}

/// Streams the traces of a JSONL file.
pub fn read_traces(path: &Path) -> Result<impl Iterator<Item = Result<TokenTrace>>> {
    Ok(parse_traces(BufReader::new(File::open(path)?)))
}

pub fn write_traces_to<'a>(mut w: impl Write, traces: impl IntoIterator<Item = &'a TokenTrace>) -> Result<()> {
    for t in traces {
        serde_json::to_writer(&mut w, t).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_traces<'a>(traces: impl IntoIterator<Item = &'a TokenTrace>, path: &Path) -> Result<()> {
    write_traces_to(BufWriter::new(File::create(path)?), traces)
}
