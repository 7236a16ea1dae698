//! Thin helpers over the tree-sitter Python grammar.

use tree_sitter::{Node, Parser, Tree};

use crate::error::{Error, Result};

pub fn parser() -> Parser {
    let mut p = Parser::new();
    p.set_language(&tree_sitter_python::LANGUAGE.into())
        .expect("bundled grammar matches the tree-sitter ABI");
    p
}

/// Parses `source`, tolerating syntax errors (the tree then contains ERROR nodes).
pub fn parse_lossy(source: &str) -> Tree {
    parser().parse(source, None).expect("parser has a language and no timeout")
}

/// Parses `source`, failing on the first syntax error.
pub fn parse(source: &str) -> Result<Tree> {
    let tree = parse_lossy(source);
    if let Some(bad) = first_error(tree.root_node()) {
        let p = bad.start_position();
        return Err(Error::Parse {
            line: p.row + 1,
            col: p.column,
        });
    }
    Ok(tree)
}

pub fn first_error(node: Node<'_>) -> Option<Node<'_>> {
    if !node.has_error() {
        return None;
    }
    if node.is_error() || node.is_missing() {
        return Some(node);
    }
    let mut cursor = node.walk();
    let children: Vec<Node<'_>> = node.children(&mut cursor).collect();
    children.into_iter().find_map(first_error).or(Some(node))
}

pub fn text<'s>(node: Node<'_>, source: &'s str) -> &'s str {
    &source[node.byte_range()]
}

pub fn children(node: Node<'_>) -> Vec<Node<'_>> {
    let mut cursor = node.walk();
    node.children(&mut cursor).collect()
}

pub fn named_children(node: Node<'_>) -> Vec<Node<'_>> {
    let mut cursor = node.walk();
    node.named_children(&mut cursor).collect()
}

/// Pre-order traversal.
pub fn walk<'t>(node: Node<'t>, f: &mut impl FnMut(Node<'t>)) {
    f(node);
    for c in children(node) {
        walk(c, f);
    }
}

/// 1-based line and 0-based byte column of the node start.
pub fn start(node: Node<'_>) -> (usize, usize) {
    let p = node.start_position();
    (p.row + 1, p.column)
}

pub fn end(node: Node<'_>) -> (usize, usize) {
    let p = node.end_position();
    (p.row + 1, p.column)
}

pub fn is_statement(kind: &str) -> bool {
    matches!(
        kind,
        "expression_statement"
            | "return_statement"
            | "pass_statement"
            | "break_statement"
            | "continue_statement"
            | "delete_statement"
            | "raise_statement"
            | "assert_statement"
            | "global_statement"
            | "nonlocal_statement"
            | "import_statement"
            | "import_from_statement"
            | "future_import_statement"
            | "print_statement"
            | "exec_statement"
            | "type_alias_statement"
            | "if_statement"
            | "for_statement"
            | "while_statement"
            | "try_statement"
            | "with_statement"
            | "function_definition"
            | "class_definition"
            | "decorated_definition"
            | "match_statement"
    )
}

/// Statements directly inside a module or block.
pub fn statements(block: Node<'_>) -> Vec<Node<'_>> {
    named_children(block)
        .into_iter()
        .filter(|n| is_statement(n.kind()))
        .collect()
}

/// Body statements with a leading docstring removed.
pub fn body_without_docstring(block: Node<'_>) -> Vec<Node<'_>> {
    let mut stmts = statements(block);
    if let Some(first) = stmts.first() {
        if is_docstring(*first) {
            stmts.remove(0);
        }
    }
    stmts
}

pub fn is_docstring(stmt: Node<'_>) -> bool {
    stmt.kind() == "expression_statement"
        && stmt.named_child_count() == 1
        && matches!(
            stmt.named_child(0).map(|c| c.kind()),
            Some("string") | Some("concatenated_string")
        )
}

/// The definition node itself, unwrapping a decorated definition.
pub fn definition(node: Node<'_>) -> Node<'_> {
    if node.kind() == "decorated_definition" {
        node.child_by_field_name("definition").unwrap_or(node)
    } else {
        node
    }
}

/// Decorator expressions (without the `@`) of a function or class definition.
pub fn decorators<'s>(def: Node<'_>, source: &'s str) -> Vec<&'s str> {
    match def.parent() {
        Some(p) if p.kind() == "decorated_definition" => named_children(p)
            .into_iter()
            .filter(|c| c.kind() == "decorator")
            .map(|d| text(d, source).trim_start_matches('@').trim())
            .collect(),
        _ => Vec::new(),
    }
}

/// The class whose body directly contains this function definition.
pub fn enclosing_class(def: Node<'_>) -> Option<Node<'_>> {
    let mut n = def.parent()?;
    if n.kind() == "decorated_definition" {
        n = n.parent()?;
    }
    if n.kind() != "block" {
        return None;
    }
    let owner = n.parent()?;
    (owner.kind() == "class_definition").then_some(owner)
}

/// Start of a def/class header through the end of its name, e.g. `async def f`.
pub fn header_range(def: Node<'_>) -> ((usize, usize), (usize, usize)) {
    let name = def.child_by_field_name("name").unwrap_or(def);
    (start(def), end(name))
}
