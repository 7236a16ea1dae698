//! Confounder features of a snippet: size, syntax-tree shape and a rough
//! lexical-category profile of the words in it.
//!
//! The lexical tagger is a heuristic. Identifiers are split on underscores
//! and camelCase humps; each piece is looked up in small word lists, numerals
//! come from digit runs, capitalized leading pieces count as proper nouns and
//! everything else defaults to a noun. Python keywords are words but carry no
//! tag.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use smellprop_core::causal::{FeatureVector, PosTag};

use crate::syntax;

static TOKEN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\w+|[^\w\s]").unwrap());
static RUN: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"[A-Za-z0-9]+").unwrap());

const VERBS: &[&str] = &[
    "add", "append", "apply", "build", "calc", "calculate", "call", "check", "clear", "close", "compare",
    "compute", "convert", "copy", "count", "create", "delete", "do", "draw", "dump", "encode", "decode",
    "extend", "fetch", "filter", "find", "format", "generate", "get", "handle", "init", "insert", "is",
    "join", "load", "make", "map", "merge", "open", "parse", "pop", "print", "process", "push", "put",
    "read", "reduce", "remove", "render", "replace", "reset", "reverse", "run", "save", "scan", "search",
    "send", "set", "show", "sort", "split", "start", "stop", "strip", "swap", "update", "use", "validate",
    "write", "has", "can", "should", "return",
];

const ADJECTIVES: &[&str] = &[
    "active", "all", "any", "average", "best", "big", "current", "default", "empty", "even", "final",
    "first", "full", "good", "high", "large", "last", "left", "long", "low", "main", "max", "maximum",
    "min", "minimum", "new", "next", "odd", "old", "prev", "previous", "raw", "right", "short", "small",
    "total", "valid", "invalid", "visible", "hidden", "top", "bottom", "random", "simple", "sorted",
    "unique", "local", "global", "public", "private", "true", "false",
];

const INTERJECTIONS: &[&str] = &[
    "ah", "aha", "alas", "bye", "hello", "hey", "hi", "hmm", "oh", "oops", "ok", "okay", "ouch", "wow",
    "yay", "yes", "no", "oof", "ugh",
];

const KEYWORDS: &[&str] = &[
    "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del", "elif", "else",
    "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal", "not",
    "or", "pass", "raise", "return", "try", "while", "with", "yield", "none", "true", "false",
];

fn tag(piece: &str, leading_capital: bool) -> Option<PosTag> {
    if piece.bytes().all(|b| b.is_ascii_digit()) {
        return Some(PosTag::Numeral);
    }
    let lower = piece.to_ascii_lowercase();
    if INTERJECTIONS.contains(&lower.as_str()) {
        Some(PosTag::Interjection)
    } else if VERBS.contains(&lower.as_str()) {
        Some(PosTag::Verb)
    } else if ADJECTIVES.contains(&lower.as_str()) {
        Some(PosTag::Adjective)
    } else if leading_capital {
        Some(PosTag::ProperNoun)
    } else {
        Some(PosTag::Noun)
    }
}

/// Splits `getHTTPServer2` into `get`, `HTTP`, `Server`, `2`.
fn split_camel(run: &str) -> Vec<&str> {
    let b = run.as_bytes();
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..b.len() {
        let (p, c) = (b[k - 1], b[k]);
        let boundary = (p.is_ascii_digit() != c.is_ascii_digit())
            || (p.is_ascii_lowercase() && c.is_ascii_uppercase())
            || (p.is_ascii_uppercase()
                && c.is_ascii_uppercase()
                && b.get(k + 1).is_some_and(|n| n.is_ascii_lowercase()));
        if boundary {
            out.push(&run[start..k]);
            start = k;
        }
    }
    out.push(&run[start..]);
    out
}

/// Word pieces of the text with their tag, in order of appearance.
pub fn tag_words(source: &str) -> Vec<(String, Option<PosTag>)> {
    let mut out = Vec::new();
    for run in RUN.find_iter(source) {
        let run = run.as_str();
        if KEYWORDS.contains(&run.to_ascii_lowercase().as_str()) && run.chars().all(|c| c.is_ascii_lowercase())
            || matches!(run, "None" | "True" | "False")
        {
            out.push((run.to_ascii_lowercase(), None));
            continue;
        }
        for (k, p) in split_camel(run).into_iter().enumerate() {
            let capital = k == 0 && p.starts_with(|c: char| c.is_ascii_uppercase());
            out.push((p.to_ascii_lowercase(), tag(p, capital)));
        }
    }
    out
}

fn tree_shape(source: &str) -> (usize, usize, usize, usize) {
    let tree = syntax::parse_lossy(source);
    let root = tree.root_node();
    let mut errors = 0;
    syntax::walk(root, &mut |n| {
        if n.is_error() || n.is_missing() {
            errors += 1;
        }
    });
    if root.has_error() {
        return (0, 0, 0, errors.max(1));
    }
    fn visit(node: tree_sitter::Node<'_>, depth: usize, nodes: &mut usize, idents: &mut usize, height: &mut usize) {
        *nodes += 1;
        *height = (*height).max(depth);
        if node.kind() == "identifier" {
            *idents += 1;
        }
        let mut cursor = node.walk();
        for c in node.named_children(&mut cursor) {
            visit(c, depth + 1, nodes, idents, height);
        }
    }
    let (mut nodes, mut idents, mut height) = (0, 0, 0);
    visit(root, 1, &mut nodes, &mut idents, &mut height);
    (nodes, idents, height, 0)
}

pub fn extract_features(source: &str) -> FeatureVector {
    extract_features_with(source, None)
}

/// Like [`extract_features`], but takes lexical-category counts from an
/// external annotation when one is given.
pub fn extract_features_with(source: &str, annotated: Option<&BTreeMap<PosTag, usize>>) -> FeatureVector {
    if source.trim().is_empty() {
        return FeatureVector {
            whitespace_count: source.chars().filter(|c| c.is_whitespace()).count(),
            ..FeatureVector::default()
        };
    }
    let (ast_nodes, identifiers, ast_height, syntax_errors) = tree_shape(source);
    let words = tag_words(source);
    let vocab: BTreeSet<&str> = words.iter().map(|(w, _)| w.as_str()).collect();
    let mut pos_counts: BTreeMap<PosTag, usize> = PosTag::ALL.iter().map(|t| (*t, 0)).collect();
    match annotated {
        Some(a) => {
            for (t, n) in a {
                pos_counts.insert(*t, *n);
            }
        }
        None => {
            for t in words.iter().filter_map(|(_, t)| *t) {
                *pos_counts.entry(t).or_default() += 1;
            }
        }
    }
    FeatureVector {
        loc: source.lines().count(),
        token_count: TOKEN.find_iter(source).count(),
        ast_nodes,
        identifiers,
        ast_height,
        syntax_errors,
        whitespace_count: source.chars().filter(|c| c.is_whitespace()).count(),
        word_count: words.len(),
        vocab_size: vocab.len(),
        pos_counts,
    }
}
