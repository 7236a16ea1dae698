//! Variable renaming: by first character, or by substitutes from a provider.

use std::collections::BTreeSet;

use tree_sitter::Node;
use tracing::debug;

use super::{node_text, select, Edit, Site, SiteSelector};
use crate::error::{Error, Result};
use crate::scope::{BindKind, ScopeKind, ScopeTree};
use crate::syntax;

/// Supplies replacement names for a variable, most preferred first.
pub trait SubstitutionProvider {
    fn candidates(&self, name: &str) -> Vec<String>;
}

pub(super) struct FirstCharacter;

impl SubstitutionProvider for FirstCharacter {
    fn candidates(&self, name: &str) -> Vec<String> {
        match name.chars().next() {
            Some(c) if c.is_alphabetic() && name.chars().count() > 1 => vec![c.to_string()],
            _ => Vec::new(),
        }
    }
}

/// Built-in substitutes for common names, followed by camelCase variants
/// with a `my`, `the` or `new` prefix (`number` gives `myNumber`).
#[derive(Debug, Clone, Default)]
pub struct TableProvider;

const TABLE: &[(&str, &[&str])] = &[
    ("number", &["myNumber", "num"]),
    ("result", &["res", "output"]),
    ("count", &["cnt", "counter"]),
    ("index", &["idx", "position"]),
    ("total", &["sumTotal", "accumulator"]),
    ("value", &["val", "item"]),
    ("values", &["vals", "items"]),
    ("data", &["payload", "content"]),
    ("text", &["content", "string"]),
    ("string", &["text", "str_value"]),
    ("items", &["elements", "entries"]),
    ("item", &["element", "entry"]),
    ("key", &["name", "label"]),
    ("length", &["size", "len_value"]),
    ("size", &["length", "dim"]),
    ("temp", &["tmp", "scratch"]),
    ("answer", &["ans", "reply"]),
    ("current", &["curr", "node"]),
    ("output", &["out", "result"]),
    ("words", &["tokens", "terms"]),
    ("word", &["token", "term"]),
    ("line", &["row", "record"]),
    ("lines", &["rows", "records"]),
    ("matrix", &["grid", "table"]),
    ("numbers", &["nums", "values"]),
    ("left", &["lo", "start"]),
    ("right", &["hi", "end"]),
    ("middle", &["mid", "center"]),
    ("message", &["msg", "text"]),
];

fn camel(name: &str) -> String {
    let mut out = String::new();
    for part in name.split('_').filter(|p| !p.is_empty()) {
        let mut chars = part.chars();
        if let Some(c) = chars.next() {
            out.extend(c.to_uppercase());
            out.push_str(chars.as_str());
        }
    }
    out
}

impl SubstitutionProvider for TableProvider {
    fn candidates(&self, name: &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let body = camel(name);
        if !body.is_empty() {
            out.push(format!("my{body}"));
        }
        if let Some((_, subs)) = TABLE.iter().find(|(n, _)| *n == name) {
            out.extend(subs.iter().map(|s| s.to_string()));
        }
        if !body.is_empty() {
            out.push(format!("the{body}"));
            out.push(format!("new{body}"));
        }
        let mut seen = BTreeSet::new();
        out.retain(|c| c != name && seen.insert(c.clone()));
        out
    }
}

const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def",
    "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is",
    "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
    "match", "case", "type", "print", "exec",
];

/// Names that make a function's locals visible dynamically.
const DYNAMIC: &[&str] = &["locals", "vars", "eval", "exec"];

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c == '_' || c.is_alphabetic())
        && chars.all(|c| c == '_' || c.is_alphanumeric())
        && !KEYWORDS.contains(&s)
}

/// A function-local variable and every identifier node referring to it.
#[derive(Debug, Clone)]
struct Variable<'t> {
    name: String,
    occurrences: Vec<Node<'t>>,
}

fn binds(scopes: &ScopeTree<'_>, id: usize, name: &str) -> bool {
    scopes.scopes[id].bindings.iter().any(|b| b.name == name) || scopes.scopes[id].globals.contains(name)
}

fn nested_loads<'t>(scopes: &ScopeTree<'t>, id: usize, name: &str, out: &mut Vec<Node<'t>>) -> bool {
    for &c in &scopes.scopes[id].children {
        if binds(scopes, c, name) {
            return false;
        }
        out.extend(scopes.scopes[c].loads.iter().filter(|(n, _)| n == name).map(|(_, node)| *node));
        if !nested_loads(scopes, c, name, out) {
            return false;
        }
    }
    true
}

fn variables<'t>(scopes: &ScopeTree<'t>) -> Vec<Variable<'t>> {
    let mut out = Vec::new();
    for (id, scope) in scopes.scopes.iter().enumerate() {
        if scope.kind != ScopeKind::Function || DYNAMIC.iter().any(|d| scopes.is_loaded(id, d)) {
            continue;
        }
        let params: BTreeSet<&str> = scope
            .bindings
            .iter()
            .filter(|b| matches!(b.kind, BindKind::Param | BindKind::VarParam))
            .map(|b| b.name.as_str())
            .collect();
        let mut seen = BTreeSet::new();
        for b in &scope.bindings {
            let renamable = matches!(
                b.kind,
                BindKind::Assign | BindKind::AugAssign | BindKind::For | BindKind::With | BindKind::Except | BindKind::Walrus
            );
            if !renamable
                || params.contains(b.name.as_str())
                || scope.globals.contains(&b.name)
                || !seen.insert(b.name.clone())
            {
                continue;
            }
            let name = b.name.as_str();
            // every binding of this name in the scope must be renamable
            if scope.bindings.iter().any(|o| {
                o.name == name
                    && !matches!(
                        o.kind,
                        BindKind::Assign | BindKind::AugAssign | BindKind::For | BindKind::With | BindKind::Except | BindKind::Walrus
                    )
            }) {
                continue;
            }
            let mut occ: Vec<Node<'t>> = scope
                .bindings
                .iter()
                .filter(|o| o.name == name)
                .map(|o| o.node)
                .chain(scope.loads.iter().filter(|(n, _)| n == name).map(|(_, node)| *node))
                .collect();
            if !nested_loads(scopes, id, name, &mut occ) {
                continue;
            }
            occ.sort_by_key(|n| n.start_byte());
            occ.dedup_by_key(|n| n.start_byte());
            out.push(Variable {
                name: name.to_owned(),
                occurrences: occ,
            });
        }
    }
    out.sort_by_key(|v| v.occurrences.first().map(|n| n.start_byte()));
    out
}

pub(super) fn rename_sites(
    source: &str,
    root: Node<'_>,
    selector: SiteSelector,
    provider: &dyn SubstitutionProvider,
) -> Result<Vec<Site>> {
    let scopes = ScopeTree::build(root, source);
    let mut taken: BTreeSet<String> = BTreeSet::new();
    syntax::walk(root, &mut |n| {
        if n.kind() == "identifier" {
            taken.insert(node_text(n, source).to_owned());
        }
    });

    let candidates: Vec<(Variable<'_>, Vec<String>)> = variables(&scopes)
        .into_iter()
        .map(|v| {
            let c = provider.candidates(&v.name);
            (v, c)
        })
        .filter(|(_, c)| !c.is_empty())
        .collect();
    if candidates.is_empty() {
        return Ok(Vec::new());
    }

    let mut sites = Vec::new();
    let mut last_failure = None;
    for (var, names) in select(&candidates, selector) {
        let Some(new) = names.iter().find(|n| is_identifier(n) && !taken.contains(*n)) else {
            debug!(name = var.name, tried = names.len(), "no collision-free rename");
            last_failure = Some(Error::RenameCollision {
                name: var.name.clone(),
                tried: names.len(),
            });
            continue;
        };
        taken.insert(new.clone());
        for occ in &var.occurrences {
            sites.push(Site {
                start: occ.start_byte(),
                end: occ.end_byte(),
                edits: vec![Edit {
                    start: occ.start_byte(),
                    end: occ.end_byte(),
                    text: new.clone(),
                }],
            });
        }
    }
    match (sites.is_empty(), last_failure) {
        (true, Some(e)) => Err(e),
        _ => Ok(sites),
    }
}
