//! Unused imports, variables and arguments.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use regex::Regex;
use tree_sitter::Node;

use super::classes::{self, ClassIndex};
use super::Sink;
use crate::scope::{BindKind, Binding, ScopeKind, ScopeTree};
use crate::syntax::{self, text};

static DUMMY: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(_+$|(_[a-zA-Z0-9_]*[a-zA-Z0-9]+?$)|dummy|^ignored_|^unused_)").unwrap());
static IGNORED_ARGUMENT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^(_.*|^ignored_|^unused_)").unwrap());

pub(super) fn check(source: &str, scopes: &ScopeTree<'_>, sink: &mut Sink<'_>) {
    let exported = exported_names(source, scopes);
    for (id, scope) in scopes.scopes.iter().enumerate() {
        match scope.kind {
            ScopeKind::Module => unused_imports(source, scopes, id, &exported, sink),
            ScopeKind::Function => {
                if skip_function(scope.node, source) {
                    continue;
                }
                unused_imports(source, scopes, id, &BTreeSet::new(), sink);
                unused_locals(source, scopes, id, sink);
            }
            _ => {}
        }
    }
}

/// String entries of a module-level `__all__` list or tuple.
fn exported_names(source: &str, scopes: &ScopeTree<'_>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for b in &scopes.module().bindings {
        if b.name != "__all__" || b.kind != BindKind::Assign {
            continue;
        }
        if let Some(value) = b.owner.child_by_field_name("right") {
            syntax::walk(value, &mut |n| {
                if n.kind() == "string_content" {
                    out.insert(text(n, source).to_owned());
                }
            });
        }
    }
    out
}

fn import_message(source: &str, b: &Binding<'_>) -> Option<String> {
    let stmt = b.owner;
    let (dotted, alias) = if b.node.kind() == "aliased_import" {
        (
            b.node.child_by_field_name("name").map(|n| text(n, source))?,
            b.node.child_by_field_name("alias").map(|n| text(n, source)),
        )
    } else {
        (text(b.node, source), None)
    };
    if alias.is_some_and(|a| DUMMY.is_match(a)) {
        return None;
    }
    let module = stmt.child_by_field_name("module_name").map(|m| {
        if m.kind() == "relative_import" {
            syntax::named_children(m)
                .into_iter()
                .find(|c| c.kind() == "dotted_name")
                .map(|d| text(d, source))
                .unwrap_or("")
        } else {
            text(m, source)
        }
    });
    if dotted.starts_with("__") && dotted.ends_with("__") && stmt.kind() == "import_from_statement" {
        return None;
    }
    Some(match (module.filter(|m| !m.is_empty()), alias) {
        (None, None) => format!("import {dotted}"),
        (None, Some(a)) => format!("{dotted} imported as {a}"),
        (Some(m), None) => format!("{dotted} imported from {m}"),
        (Some(m), Some(a)) => format!("{dotted} imported from {m} as {a}"),
    })
}

fn unused_imports(source: &str, scopes: &ScopeTree<'_>, id: usize, exported: &BTreeSet<String>, sink: &mut Sink<'_>) {
    if !sink.on("W0611") {
        return;
    }
    for b in &scopes.scopes[id].bindings {
        if b.kind != BindKind::Import || scopes.is_loaded(id, &b.name) || exported.contains(&b.name) {
            continue;
        }
        if let Some(msg) = import_message(source, b) {
            sink.node("W0611", b.owner, format!("Unused {msg}"));
        }
    }
}

/// Functions whose locals and arguments the linter does not inspect: bodies
/// that only raise, and abstract-looking methods.
fn skip_function(def: Node<'_>, source: &str) -> bool {
    let Some(body) = def.child_by_field_name("body") else {
        return true;
    };
    let stmts = syntax::body_without_docstring(body);
    if stmts.len() == 1 && stmts[0].kind() == "raise_statement" {
        return true;
    }
    if classes::method_info(def, source).is_none() {
        return false;
    }
    if syntax::decorators(def, source)
        .iter()
        .any(|d| d.ends_with("abstractmethod") || d.ends_with("abstractproperty"))
    {
        return true;
    }
    match stmts.first() {
        None => true,
        Some(s) if s.kind() == "pass_statement" => true,
        Some(s) if s.kind() == "raise_statement" => s.named_child(0).is_some_and(|e| {
            let callee = if e.kind() == "call" { e.child_by_field_name("function") } else { Some(e) };
            callee.is_some_and(|c| text(c, source) == "NotImplementedError")
        }),
        _ => false,
    }
}

fn comprehension_targets(scopes: &ScopeTree<'_>, id: usize, source: &str, out: &mut BTreeSet<String>) {
    for &c in &scopes.scopes[id].children {
        if scopes.scopes[c].kind == ScopeKind::Comprehension {
            for b in &scopes.scopes[c].bindings {
                if b.kind == BindKind::For {
                    out.insert(b.name.clone());
                }
            }
        }
        comprehension_targets(scopes, c, source, out);
    }
}

fn unused_locals(source: &str, scopes: &ScopeTree<'_>, id: usize, sink: &mut Sink<'_>) {
    let scope = &scopes.scopes[id];
    let def = scope.node;
    if scopes.is_loaded(id, "locals") {
        return;
    }
    let mut nonlocal_or_global: BTreeSet<String> = BTreeSet::new();
    syntax::walk(def, &mut |n| {
        if matches!(n.kind(), "global_statement" | "nonlocal_statement") {
            for c in syntax::named_children(n) {
                nonlocal_or_global.insert(text(c, source).to_owned());
            }
        }
    });
    let mut comp = BTreeSet::new();
    comprehension_targets(scopes, id, source, &mut comp);
    let augmented: BTreeSet<&str> = scope
        .bindings
        .iter()
        .filter(|b| b.kind == BindKind::AugAssign)
        .map(|b| b.name.as_str())
        .collect();

    let mut seen = BTreeSet::new();
    for b in &scope.bindings {
        if !seen.insert(b.name.as_str()) {
            continue;
        }
        if scopes.is_loaded(id, &b.name) || nonlocal_or_global.contains(&b.name) || scope.globals.contains(&b.name) {
            continue;
        }
        match b.kind {
            BindKind::Param | BindKind::VarParam => unused_argument(source, b, sink),
            BindKind::Import | BindKind::AugAssign => {}
            _ => {
                if augmented.contains(b.name.as_str()) || comp.contains(&b.name) || DUMMY.is_match(&b.name) {
                    continue;
                }
                let message = format!("Unused variable '{}'", b.name);
                match b.kind {
                    BindKind::Except => sink.node("W0612", b.owner, message),
                    BindKind::Def | BindKind::Class => {
                        if b.owner.parent().is_some_and(|p| p.kind() == "decorated_definition") {
                            continue;
                        }
                        sink.range("W0612", syntax::header_range(b.owner), message)
                    }
                    _ => sink.node("W0612", b.node, message),
                }
            }
        }
    }
}

fn unused_argument(source: &str, b: &Binding<'_>, sink: &mut Sink<'_>) {
    if !sink.on("W0613") || IGNORED_ARGUMENT.is_match(&b.name) {
        return;
    }
    let def = b.owner;
    if def.kind() != "function_definition" {
        return;
    }
    let fname = def.child_by_field_name("name").map(|n| text(n, source)).unwrap_or("");
    if let Some(m) = classes::method_info(def, source) {
        let first = classes::params(def).first().map(|p| text(p.ident, source));
        if !m.is_static && first == Some(b.name.as_str()) {
            return;
        }
        let root = {
            let mut r = def;
            while let Some(p) = r.parent() {
                r = p;
            }
            r
        };
        if overridden_has_arg(&ClassIndex::build(root, source), m.class, fname, &b.name, source) {
            return;
        }
        if fname.starts_with("__") && fname.ends_with("__") && fname != "__init__" && fname != "__new__" {
            return;
        }
    }
    if fname.starts_with("cb_") || fname.ends_with("_cb") {
        return;
    }
    let message = format!("Unused argument '{}'", b.name);
    if b.kind == BindKind::VarParam {
        let line = syntax::start(def).0;
        sink.push("W0613", (line, 0), Some((line, None)), message);
    } else {
        sink.node("W0613", b.node, message);
    }
}

fn overridden_has_arg(index: &ClassIndex<'_>, class: Node<'_>, method: &str, arg: &str, source: &str) -> bool {
    if !index.overrides(class, method, source) {
        return false;
    }
    // find the nearest snippet-local definition; assume standard-library
    // signatures accept the argument
    let mut frontier = vec![class];
    let mut depth = 0;
    while let Some(c) = frontier.pop() {
        depth += 1;
        if depth > 64 {
            break;
        }
        for base in classes::bases(c) {
            let Some(bc) = index.get(text(base, source)) else {
                continue;
            };
            if let Some(body) = bc.child_by_field_name("body") {
                for s in syntax::statements(body) {
                    let d = syntax::definition(s);
                    if d.kind() == "function_definition"
                        && d.child_by_field_name("name").map(|n| text(n, source)) == Some(method)
                    {
                        return classes::params(d).iter().any(|p| text(p.ident, source) == arg);
                    }
                }
            }
            frontier.push(bc);
        }
    }
    true
}
