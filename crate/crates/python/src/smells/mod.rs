//! Native smell detection for a subset of linter rules.
//!
//! Positions follow the linter's conventions (1-based lines, 0-based byte
//! columns) so results can be compared one-to-one with bridge output.

use std::collections::BTreeSet;

use smellprop_core::diagnostic::sort_diagnostics;
use smellprop_core::SmellDiagnostic;
use tree_sitter::Node;

use crate::error::{Error, Result};
use crate::scope::ScopeTree;
use crate::syntax;

mod classes;
mod lexical;
mod names;
mod statements;
mod usage;

pub const DEFAULT_MAX_LINE_LENGTH: usize = 100;

/// `(rule_id, symbol)` for every natively implemented rule.
pub const RULES: &[(&str, &str)] = &[
    ("C0103", "invalid-name"),
    ("C0301", "line-too-long"),
    ("C0303", "trailing-whitespace"),
    ("C0304", "missing-final-newline"),
    ("C0305", "trailing-newlines"),
    ("C0321", "multiple-statements"),
    ("C0415", "import-outside-toplevel"),
    ("R1705", "no-else-return"),
    ("W0102", "dangerous-default-value"),
    ("W0611", "unused-import"),
    ("W0612", "unused-variable"),
    ("W0613", "unused-argument"),
    ("W0719", "broad-exception-raised"),
];

pub const SYNTAX_ERROR_RULE: &str = "E0001";

pub fn symbol(rule_id: &str) -> Option<&'static str> {
    RULES.iter().find(|(id, _)| *id == rule_id).map(|(_, s)| *s)
}

pub fn is_implemented(rule_id: &str) -> bool {
    symbol(rule_id).is_some()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    rules: BTreeSet<String>,
    pub max_line_length: usize,
}

impl Default for RuleSet {
    fn default() -> Self {
        Self {
            rules: RULES.iter().map(|(id, _)| id.to_string()).collect(),
            max_line_length: DEFAULT_MAX_LINE_LENGTH,
        }
    }
}

impl RuleSet {
    pub fn new<I, S>(rules: I, max_line_length: usize) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let rules: BTreeSet<String> = rules.into_iter().map(Into::into).collect();
        if let Some(bad) = rules.iter().find(|r| !is_implemented(r)) {
            return Err(Error::Schema(format!("rule {bad} is not implemented natively")));
        }
        if max_line_length == 0 {
            return Err(Error::Schema("max_line_length must be positive".into()));
        }
        Ok(Self {
            rules,
            max_line_length,
        })
    }

    pub fn enabled(&self, rule_id: &str) -> bool {
        self.rules.contains(rule_id)
    }

    pub fn rules(&self) -> impl Iterator<Item = &str> {
        self.rules.iter().map(String::as_str)
    }
}

/// Collects diagnostics for one snippet.
pub(crate) struct Sink<'a> {
    sample_id: &'a str,
    rules: &'a RuleSet,
    out: Vec<SmellDiagnostic>,
}

impl Sink<'_> {
    pub(crate) fn on(&self, rule_id: &str) -> bool {
        self.rules.enabled(rule_id)
    }

    pub(crate) fn push(
        &mut self,
        rule_id: &str,
        start: (usize, usize),
        end: Option<(usize, Option<usize>)>,
        message: String,
    ) {
        if !self.on(rule_id) {
            return;
        }
        self.out.push(SmellDiagnostic {
            sample_id: self.sample_id.to_owned(),
            rule_id: rule_id.to_owned(),
            symbol: symbol(rule_id).unwrap_or("unknown").to_owned(),
            start_line: start.0,
            start_col: start.1,
            end_line: end.map(|e| e.0),
            end_col: end.and_then(|e| e.1),
            message,
        });
    }

    /// A diagnostic spanning exactly `node`.
    pub(crate) fn node(&mut self, rule_id: &str, node: Node<'_>, message: String) {
        let (el, ec) = syntax::end(node);
        self.push(rule_id, syntax::start(node), Some((el, Some(ec))), message);
    }

    pub(crate) fn range(&mut self, rule_id: &str, range: ((usize, usize), (usize, usize)), message: String) {
        self.push(rule_id, range.0, Some((range.1 .0, Some(range.1 .1))), message);
    }
}

/// Runs every enabled rule over `source`.
///
/// Unparseable input yields a single syntax-error diagnostic instead of rule
/// results.
pub fn detect(sample_id: &str, source: &str, rules: &RuleSet) -> Vec<SmellDiagnostic> {
    let tree = syntax::parse_lossy(source);
    let root = tree.root_node();
    if let Some(bad) = syntax::first_error(root) {
        let (line, col) = syntax::start(bad);
        return vec![SmellDiagnostic {
            sample_id: sample_id.to_owned(),
            rule_id: SYNTAX_ERROR_RULE.into(),
            symbol: "syntax-error".into(),
            start_line: line,
            start_col: col,
            end_line: None,
            end_col: None,
            message: format!("Parsing failed: invalid syntax (line {line})"),
        }];
    }

    let mut sink = Sink {
        sample_id,
        rules,
        out: Vec::new(),
    };
    let scopes = ScopeTree::build(root, source);
    lexical::check(source, root, &mut sink);
    statements::check(source, root, &mut sink);
    names::check(source, root, &scopes, &mut sink);
    usage::check(source, &scopes, &mut sink);

    let mut out = sink.out;
    sort_diagnostics(&mut out);
    out.dedup();
    out
}

/// True/false positive and false negative counts of one rule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RuleAgreement {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl RuleAgreement {
    /// Precision, taken as 1 when nothing was predicted.
    pub fn precision(&self) -> f64 {
        let predicted = self.true_positives + self.false_positives;
        if predicted == 0 {
            1.0
        } else {
            self.true_positives as f64 / predicted as f64
        }
    }

    /// Recall, taken as 1 when nothing was expected.
    pub fn recall(&self) -> f64 {
        let expected = self.true_positives + self.false_negatives;
        if expected == 0 {
            1.0
        } else {
            self.true_positives as f64 / expected as f64
        }
    }
}

/// Per-rule agreement of `actual` against `expected`, restricted to natively
/// implemented rules. Diagnostics match when every field is equal.
pub fn agreement(
    expected: &[SmellDiagnostic],
    actual: &[SmellDiagnostic],
) -> std::collections::BTreeMap<String, RuleAgreement> {
    use std::collections::{BTreeMap, HashMap};

    let mut out: BTreeMap<String, RuleAgreement> = RULES
        .iter()
        .map(|(id, _)| (id.to_string(), RuleAgreement::default()))
        .collect();
    let mut pending: HashMap<&SmellDiagnostic, usize> = HashMap::new();
    for e in expected.iter().filter(|d| is_implemented(&d.rule_id)) {
        *pending.entry(e).or_default() += 1;
    }
    for a in actual.iter().filter(|d| is_implemented(&d.rule_id)) {
        let slot = out.get_mut(&a.rule_id).expect("implemented rule");
        match pending.get_mut(a) {
            Some(n) if *n > 0 => {
                *n -= 1;
                slot.true_positives += 1;
            }
            _ => slot.false_positives += 1,
        }
    }
    for (e, n) in pending {
        out.get_mut(&e.rule_id).expect("implemented rule").false_negatives += n;
    }
    out
}
