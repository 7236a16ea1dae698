//! Statement-shape rules: multiple statements per line, local imports,
//! mutable defaults, broad raises and else-after-return.

use std::collections::{BTreeMap, BTreeSet};

use tree_sitter::Node;

use super::Sink;
use crate::scope::import_names;
use crate::syntax::{self, text};

const COLLECTION_FACTORIES: &[&str] = &[
    "deque",
    "ChainMap",
    "Counter",
    "OrderedDict",
    "defaultdict",
    "UserDict",
    "UserList",
];

pub(super) fn check(source: &str, root: Node<'_>, sink: &mut Sink<'_>) {
    if sink.on("C0321") {
        multiple_statements(root, sink);
    }
    let mutable_globals = mutable_module_names(source, root);
    let collections_names = collections_imports(source, root);
    syntax::walk(root, &mut |n| match n.kind() {
        "import_statement" | "import_from_statement" => import_outside_toplevel(source, n, sink),
        "function_definition" => {
            dangerous_defaults(source, n, &mutable_globals, &collections_names, sink)
        }
        "raise_statement" => broad_raise(source, n, sink),
        "if_statement" => else_after_return(n, sink),
        _ => {}
    });
}

fn row(n: Node<'_>) -> usize {
    n.start_position().row + 1
}

fn end_row(n: Node<'_>) -> usize {
    n.end_position().row + 1
}

/// Statements of a body as the linter's tree sees them (docstrings of
/// modules, classes and functions are not statements there).
fn body_statements(container: Node<'_>) -> Vec<Node<'_>> {
    let owner_has_doc = match container.kind() {
        "module" => true,
        "block" => matches!(
            container.parent().map(|p| p.kind()),
            Some("function_definition") | Some("class_definition")
        ),
        _ => false,
    };
    if owner_has_doc {
        syntax::body_without_docstring(container)
    } else {
        syntax::statements(container)
    }
}

fn last_statement_row(block: Option<Node<'_>>) -> usize {
    block
        .and_then(|b| syntax::statements(b).last().copied())
        .map(end_row)
        .unwrap_or(0)
}

/// Line the linter compares a block's first statement against.
fn header_line(block: Node<'_>) -> usize {
    let Some(owner) = block.parent() else {
        return 0;
    };
    match owner.kind() {
        "else_clause" | "finally_clause" => {
            let Some(stmt) = owner.parent() else {
                return 0;
            };
            if stmt.kind() != "try_statement" {
                // for/while/if else bodies hang off the compound statement
                return row(stmt);
            }
            let clauses = syntax::named_children(stmt);
            let else_body = clauses
                .iter()
                .find(|c| c.kind() == "else_clause")
                .and_then(|c| c.child_by_field_name("body"));
            let handlers: Vec<&Node<'_>> = clauses.iter().filter(|c| c.kind() == "except_clause").collect();
            let prev = if owner.kind() == "finally_clause" && else_body.is_some() {
                last_statement_row(else_body)
            } else if let Some(h) = handlers.last() {
                last_statement_row(syntax::named_children(**h).into_iter().find(|c| c.kind() == "block"))
            } else {
                last_statement_row(stmt.child_by_field_name("body"))
            };
            if prev == 0 {
                0
            } else {
                prev + 1
            }
        }
        _ => row(owner),
    }
}

fn is_ellipsis_body(stmt: Node<'_>, container: Node<'_>) -> bool {
    stmt.kind() == "expression_statement"
        && stmt.named_child(0).map(|c| c.kind()) == Some("ellipsis")
        && matches!(
            container.parent().map(|p| p.kind()),
            Some("function_definition") | Some("class_definition")
        )
}

fn multiple_statements(root: Node<'_>, sink: &mut Sink<'_>) {
    let mut flagged: BTreeSet<usize> = BTreeSet::new();
    let mut containers = Vec::new();
    syntax::walk(root, &mut |n| {
        if matches!(n.kind(), "module" | "block") {
            containers.push(n);
        }
    });
    let mut hits: Vec<Node<'_>> = Vec::new();
    for container in containers {
        let stmts = body_statements(container);
        for (k, stmt) in stmts.iter().enumerate() {
            let prev_line = if k > 0 {
                row(stmts[k - 1])
            } else if container.kind() == "module" {
                0
            } else {
                header_line(container)
            };
            let line = row(*stmt);
            if prev_line != line || stmt.kind() == "with_statement" || is_ellipsis_body(*stmt, container) {
                continue;
            }
            hits.push(*stmt);
        }
    }
    hits.sort_by_key(|n| n.start_byte());
    for stmt in hits {
        if flagged.insert(row(stmt)) {
            sink.node(
                "C0321",
                syntax::definition(stmt),
                "More than one statement on a single line".into(),
            );
        }
    }
}

fn import_outside_toplevel(source: &str, stmt: Node<'_>, sink: &mut Sink<'_>) {
    let mut p = stmt.parent();
    let mut nested = false;
    while let Some(n) = p {
        if matches!(n.kind(), "function_definition" | "class_definition") {
            nested = true;
            break;
        }
        p = n.parent();
    }
    if !nested {
        return;
    }
    let names: Vec<String> = import_names(stmt)
        .into_iter()
        .map(|name| {
            let dotted = if name.kind() == "aliased_import" {
                name.child_by_field_name("name").unwrap_or(name)
            } else {
                name
            };
            let dotted = text(dotted, source);
            match stmt.child_by_field_name("module_name") {
                Some(m) => format!("{}.{dotted}", module_name(source, m)),
                None => dotted.to_owned(),
            }
        })
        .collect();
    if !names.is_empty() {
        sink.node(
            "C0415",
            stmt,
            format!("Import outside toplevel ({})", names.join(", ")),
        );
    }
}

/// Module name of a from-import as the linter renders it (relative dots dropped).
fn module_name<'s>(source: &'s str, m: Node<'_>) -> &'s str {
    if m.kind() == "relative_import" {
        syntax::named_children(m)
            .into_iter()
            .find(|c| c.kind() == "dotted_name")
            .map(|d| text(d, source))
            .unwrap_or("")
    } else {
        text(m, source)
    }
}

/// Module-level names bound exactly once to a mutable literal or factory call.
fn mutable_module_names(source: &str, root: Node<'_>) -> BTreeMap<String, &'static str> {
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut kinds: BTreeMap<String, &'static str> = BTreeMap::new();
    for stmt in syntax::statements(root) {
        if stmt.kind() != "expression_statement" {
            continue;
        }
        let Some(assign) = stmt.named_child(0).filter(|a| a.kind() == "assignment") else {
            continue;
        };
        let (Some(left), Some(right)) = (assign.child_by_field_name("left"), assign.child_by_field_name("right")) else {
            continue;
        };
        if left.kind() != "identifier" {
            continue;
        }
        let name = text(left, source).to_owned();
        *counts.entry(name.clone()).or_default() += 1;
        if let Some(kind) = mutable_kind(source, right, &BTreeSet::new()) {
            kinds.insert(name, kind.qname);
        }
    }
    kinds.retain(|k, _| counts.get(k) == Some(&1));
    kinds
}

fn collections_imports(source: &str, root: Node<'_>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    syntax::walk(root, &mut |n| {
        if n.kind() != "import_from_statement" {
            return;
        }
        let module = n.child_by_field_name("module_name").map(|m| text(m, source));
        if module != Some("collections") {
            return;
        }
        for name in import_names(n) {
            let (orig, bound) = if name.kind() == "aliased_import" {
                (
                    name.child_by_field_name("name").map(|x| text(x, source)).unwrap_or(""),
                    name.child_by_field_name("alias").map(|x| text(x, source)).unwrap_or(""),
                )
            } else {
                (text(name, source), text(name, source))
            };
            if COLLECTION_FACTORIES.contains(&orig) {
                out.insert(bound.to_owned());
            }
        }
    });
    out
}

struct Mutable {
    qname: &'static str,
    rendered: String,
}

fn mutable_kind(source: &str, value: Node<'_>, collections_names: &BTreeSet<String>) -> Option<Mutable> {
    let literal = |q: &'static str, r: &str| Some(Mutable { qname: q, rendered: r.to_owned() });
    match value.kind() {
        "list" => literal("builtins.list", "[]"),
        "dictionary" => literal("builtins.dict", "{}"),
        "set" => literal("builtins.set", "set()"),
        "call" => {
            let f = value.child_by_field_name("function")?;
            let name = match f.kind() {
                "identifier" => {
                    let n = text(f, source);
                    if ["list", "dict", "set"].contains(&n) || collections_names.contains(n) {
                        n
                    } else {
                        return None;
                    }
                }
                "attribute" => {
                    let obj = f.child_by_field_name("object")?;
                    let attr = text(f.child_by_field_name("attribute")?, source);
                    if text(obj, source) == "collections" && COLLECTION_FACTORIES.contains(&attr) {
                        attr
                    } else {
                        return None;
                    }
                }
                _ => return None,
            };
            let qname = match name {
                "list" => "builtins.list",
                "dict" => "builtins.dict",
                "set" => "builtins.set",
                _ => "collections",
            };
            Some(Mutable {
                qname,
                rendered: format!("{name}()"),
            })
        }
        "parenthesized_expression" => mutable_kind(source, value.named_child(0)?, collections_names),
        _ => None,
    }
}

fn dangerous_defaults(
    source: &str,
    def: Node<'_>,
    globals: &BTreeMap<String, &'static str>,
    collections_names: &BTreeSet<String>,
    sink: &mut Sink<'_>,
) {
    if !sink.on("W0102") {
        return;
    }
    let Some(params) = def.child_by_field_name("parameters") else {
        return;
    };
    for p in syntax::named_children(params) {
        if !matches!(p.kind(), "default_parameter" | "typed_default_parameter") {
            continue;
        }
        let Some(value) = p.child_by_field_name("value") else {
            continue;
        };
        let rendered = if let Some(m) = mutable_kind(source, value, collections_names) {
            m.rendered
        } else if value.kind() == "identifier" {
            match globals.get(text(value, source)) {
                Some(q) => format!("{} ({q})", text(value, source)),
                None => continue,
            }
        } else {
            continue;
        };
        sink.range(
            "W0102",
            syntax::header_range(def),
            format!("Dangerous default value {rendered} as argument"),
        );
    }
}

fn broad_raise(source: &str, stmt: Node<'_>, sink: &mut Sink<'_>) {
    let Some(exc) = syntax::named_children(stmt).into_iter().next() else {
        return;
    };
    if stmt.child_by_field_name("cause").map(|c| c.id()) == Some(exc.id()) {
        return;
    }
    let name = match exc.kind() {
        "identifier" => text(exc, source),
        "call" => match exc.child_by_field_name("function") {
            Some(f) if f.kind() == "identifier" => text(f, source),
            _ => return,
        },
        _ => return,
    };
    if name == "Exception" || name == "BaseException" {
        sink.node("W0719", stmt, format!("Raising too general exception: {name}"));
    }
}

fn else_after_return(stmt: Node<'_>, sink: &mut Sink<'_>) {
    let Some(first_alt) = stmt.child_by_field_name("alternative") else {
        return;
    };
    let returns = stmt
        .child_by_field_name("consequence")
        .map(|b| syntax::statements(b).iter().any(|s| s.kind() == "return_statement"))
        .unwrap_or(false);
    if !returns {
        return;
    }
    let message = if first_alt.kind() == "elif_clause" {
        "Unnecessary \"elif\" after \"return\", replace only that \"elif\" with \"if\""
    } else {
        "Unnecessary \"else\" after \"return\", remove the \"else\" and de-indent the code inside it"
    };
    sink.node("R1705", stmt, message.into());
}
