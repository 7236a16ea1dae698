//! Statement-level semantic-preserving transformations.
//!
//! Every transformation is a set of byte-range edits on the lossless syntax
//! tree, so text outside the rewritten ranges is preserved byte for byte.

use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use tree_sitter::Node;

use crate::error::{Error, Result};
use crate::syntax;

mod harness;
mod rename;
mod sites;

pub use harness::{
    check_equivalence, check_equivalence_batch, CallComparison, CallOutcome, CallSpec, EquivalenceCase,
    EquivalenceReport, DEFAULT_TIMEOUT_SECS, PYTHON_ENV,
};
pub use rename::{SubstitutionProvider, TableProvider};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TransformKind {
    Add2Equal,
    SwitchEqualExp,
    InfixDividing,
    SwitchRelation,
    RenameVariable1,
    RenameVariable2,
}

impl TransformKind {
    pub const ALL: [TransformKind; 6] = [
        TransformKind::Add2Equal,
        TransformKind::SwitchEqualExp,
        TransformKind::InfixDividing,
        TransformKind::SwitchRelation,
        TransformKind::RenameVariable1,
        TransformKind::RenameVariable2,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            TransformKind::Add2Equal => "Add2Equal",
            TransformKind::SwitchEqualExp => "SwitchEqualExp",
            TransformKind::InfixDividing => "InfixDividing",
            TransformKind::SwitchRelation => "SwitchRelation",
            TransformKind::RenameVariable1 => "RenameVariable1",
            TransformKind::RenameVariable2 => "RenameVariable2",
        }
    }
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TransformKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| *c != '-' && *c != '_').collect::<String>().to_ascii_lowercase();
        TransformKind::ALL
            .into_iter()
            .find(|k| k.as_str().to_ascii_lowercase() == norm)
            .ok_or_else(|| Error::Schema(format!("unknown transformation `{s}`")))
    }
}

/// Which of the candidate sites a transformation rewrites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SiteSelector {
    #[default]
    All,
    First,
    /// One site drawn uniformly with the given seed.
    SeededRandom(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceRange {
    pub start_byte: usize,
    pub end_byte: usize,
    pub start_line: usize,
    pub start_col: usize,
    pub end_line: usize,
    pub end_col: usize,
}

impl SourceRange {
    fn from_bytes(source: &str, start: usize, end: usize) -> Self {
        let (start_line, start_col) = line_col(source, start);
        let (end_line, end_col) = line_col(source, end);
        Self {
            start_byte: start,
            end_byte: end,
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }
}

fn line_col(source: &str, byte: usize) -> (usize, usize) {
    let before = &source.as_bytes()[..byte];
    let line = before.iter().filter(|b| **b == b'\n').count() + 1;
    let col = byte - before.iter().rposition(|b| *b == b'\n').map(|p| p + 1).unwrap_or(0);
    (line, col)
}

/// Record of what a transformation rewrote, as ranges of the original text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transformation {
    pub kind: TransformKind,
    pub applied_sites: Vec<SourceRange>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformOutput {
    pub source: String,
    pub transformation: Transformation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Edit {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

/// One rewrite opportunity: its edits, all within `start..end`.
#[derive(Debug, Clone)]
pub(crate) struct Site {
    pub start: usize,
    pub end: usize,
    pub edits: Vec<Edit>,
}

fn select<T: Clone>(candidates: &[T], selector: SiteSelector) -> Vec<T> {
    match selector {
        SiteSelector::All => candidates.to_vec(),
        SiteSelector::First => candidates.first().cloned().into_iter().collect(),
        SiteSelector::SeededRandom(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            candidates.choose(&mut rng).cloned().into_iter().collect()
        }
    }
}

/// Drops sites overlapping an earlier one, keeping source order.
fn non_overlapping(mut sites: Vec<Site>) -> Vec<Site> {
    sites.sort_by_key(|s| (s.start, s.end));
    let mut out: Vec<Site> = Vec::new();
    for s in sites {
        if out.last().is_none_or(|prev| prev.end <= s.start) {
            out.push(s);
        }
    }
    out
}

pub(crate) fn apply(source: &str, edits: &[Edit]) -> String {
    let mut sorted: Vec<&Edit> = edits.iter().collect();
    sorted.sort_by_key(|e| (e.start, e.end));
    let mut out = String::with_capacity(source.len() + 64);
    let mut at = 0;
    for e in sorted {
        out.push_str(&source[at..e.start]);
        out.push_str(&e.text);
        at = e.end;
    }
    out.push_str(&source[at..]);
    out
}

pub(crate) fn node_text<'s>(node: Node<'_>, source: &'s str) -> &'s str {
    syntax::text(node, source)
}

/// Applies one transformation with the default rename provider.
pub fn transform(source: &str, kind: TransformKind, selector: SiteSelector) -> Result<TransformOutput> {
    transform_with(source, kind, selector, &TableProvider::default())
}

pub fn transform_with(
    source: &str,
    kind: TransformKind,
    selector: SiteSelector,
    provider: &dyn SubstitutionProvider,
) -> Result<TransformOutput> {
    let tree = syntax::parse(source)?;
    let root = tree.root_node();

    let sites = match kind {
        TransformKind::Add2Equal => select(&non_overlapping(sites::add2equal(source, root)), selector),
        TransformKind::SwitchEqualExp => select(&non_overlapping(sites::switch_equal(source, root)), selector),
        TransformKind::SwitchRelation => select(&non_overlapping(sites::switch_relation(source, root)), selector),
        TransformKind::InfixDividing => {
            let chosen = select(&non_overlapping(sites::infix_candidates(source, root)), selector);
            sites::infix_dividing(source, root, chosen)
        }
        TransformKind::RenameVariable1 => rename::rename_sites(source, root, selector, &rename::FirstCharacter)?,
        TransformKind::RenameVariable2 => rename::rename_sites(source, root, selector, provider)?,
    };

    let edits: Vec<Edit> = sites.iter().flat_map(|s| s.edits.iter().cloned()).collect();
    let mut applied: Vec<SourceRange> = sites
        .iter()
        .map(|s| SourceRange::from_bytes(source, s.start, s.end))
        .collect();
    applied.sort();
    let output = apply(source, &edits);
    if !edits.is_empty() {
        syntax::parse(&output)?;
    }
    Ok(TransformOutput {
        source: output,
        transformation: Transformation {
            kind,
            applied_sites: applied,
        },
    })
}
