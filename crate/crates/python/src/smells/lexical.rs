//! Physical-line rules: length, trailing whitespace and file endings.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use tree_sitter::Node;

use super::Sink;
use crate::syntax;

static LONG_LINE_EXEMPT: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^\s*(# )?<?https?://\S+>?$").unwrap());

/// Rows (0-based) the linter does not inspect because of multi-line strings.
struct StringRows {
    /// Strictly inside a multi-line string.
    interior: BTreeSet<usize>,
    /// Interior rows that are still length-checked (the string opens its line).
    length_checked: BTreeSet<usize>,
    /// First rows of multi-line strings that open their line.
    opening: BTreeSet<usize>,
}

fn string_rows(source: &str, root: Node<'_>) -> StringRows {
    let mut rows = StringRows {
        interior: BTreeSet::new(),
        length_checked: BTreeSet::new(),
        opening: BTreeSet::new(),
    };
    syntax::walk(root, &mut |n| {
        if n.kind() != "string" {
            return;
        }
        let (a, b) = (n.start_position(), n.end_position());
        if a.row == b.row {
            return;
        }
        let line_start = n.start_byte() - a.column;
        let opens_line = source[line_start..n.start_byte()].trim().is_empty();
        if opens_line {
            rows.opening.insert(a.row);
        }
        for r in a.row + 1..b.row {
            rows.interior.insert(r);
            if opens_line {
                rows.length_checked.insert(r);
            }
        }
    });
    rows
}

pub(super) fn check(source: &str, root: Node<'_>, sink: &mut Sink<'_>) {
    if source.is_empty() {
        return;
    }
    let rows = string_rows(source, root);
    let max = sink.rules.max_line_length;
    let lines: Vec<&str> = source.split_inclusive('\n').collect();

    for (row, raw) in lines.iter().enumerate() {
        let lineno = row + 1;
        let terminated = raw.ends_with('\n');
        let body = raw.trim_end_matches(['\n', '\r']);

        if !rows.interior.contains(&row) || rows.length_checked.contains(&row) {
            let trimmed = body.trim_end();
            let len = trimmed.chars().count();
            if len > max && !LONG_LINE_EXEMPT.is_match(trimmed) {
                sink.push(
                    "C0301",
                    (lineno, 0),
                    None,
                    format!("Line too long ({len}/{max})"),
                );
            }
        }

        if !terminated {
            sink.push("C0304", (lineno, 0), None, "Final newline missing".into());
            continue;
        }
        if rows.interior.contains(&row) || rows.opening.contains(&row) {
            continue;
        }
        let stripped = raw.trim_end_matches(['\t', '\n', '\r', '\x0b', ' ']);
        let tail = &raw[stripped.len()..];
        if tail != "\n" && tail != "\r\n" {
            sink.push(
                "C0303",
                (lineno, stripped.chars().count()),
                None,
                "Trailing whitespace".into(),
            );
        }
    }

    // a file ending in a blank line; the reported line is the newline count
    if let Some(last) = lines.last() {
        let blank = last.trim_end_matches(['\n', '\r']).is_empty() && last.ends_with('\n');
        if blank && lines.len() >= 2 {
            sink.push("C0305", (lines.len(), 0), None, "Trailing newlines".into());
        }
    }
}
