//! Candidate sites for the expression-level transformations.

use std::collections::BTreeSet;

use tree_sitter::Node;

use super::{node_text, Edit, Site};
use crate::syntax;

fn collect<'t>(root: Node<'t>, kind: &str) -> Vec<Node<'t>> {
    let mut out = Vec::new();
    syntax::walk(root, &mut |n| {
        if n.kind() == kind {
            out.push(n);
        }
    });
    out
}

fn replace(node: Node<'_>, text: String) -> Edit {
    Edit {
        start: node.start_byte(),
        end: node.end_byte(),
        text,
    }
}

/// Expressions whose evaluation has no side effects and is cheap to repeat.
fn is_pure(node: Node<'_>) -> bool {
    match node.kind() {
        "identifier" | "integer" | "float" | "string" | "true" | "false" | "none" => {
            node.kind() != "string" || !node_has(node, "interpolation")
        }
        "attribute" => node.child_by_field_name("object").is_some_and(is_pure),
        "subscript" => {
            node.child_by_field_name("value").is_some_and(is_pure)
                && syntax::named_children(node)
                    .into_iter()
                    .skip(1)
                    .all(|c| is_pure(c) || c.kind() == "comment")
        }
        "unary_operator" => node.child_by_field_name("argument").is_some_and(is_pure),
        _ => false,
    }
}

fn node_has(node: Node<'_>, kind: &str) -> bool {
    let mut hit = false;
    syntax::walk(node, &mut |n| hit |= n.kind() == kind);
    hit
}

/// Whether `right` must be parenthesized after a `+` or `-`.
fn needs_parens(right: Node<'_>, source: &str) -> bool {
    match right.kind() {
        "binary_operator" => {
            let op = right.child_by_field_name("operator").map(|o| node_text(o, source)).unwrap_or("");
            matches!(op, "+" | "-" | "<<" | ">>" | "&" | "^" | "|")
        }
        "comparison_operator" | "not_operator" | "boolean_operator" | "conditional_expression" | "lambda"
        | "expression_list" | "named_expression" | "yield" => true,
        _ => false,
    }
}

pub(super) fn add2equal(source: &str, root: Node<'_>) -> Vec<Site> {
    collect(root, "augmented_assignment")
        .into_iter()
        .filter_map(|n| {
            let op = node_text(n.child_by_field_name("operator")?, source);
            let bin = match op {
                "+=" => "+",
                "-=" => "-",
                _ => return None,
            };
            let left = n.child_by_field_name("left")?;
            let right = n.child_by_field_name("right")?;
            if !is_pure(left) {
                return None;
            }
            let lt = node_text(left, source);
            let rt = node_text(right, source);
            let rt = if needs_parens(right, source) { format!("({rt})") } else { rt.to_owned() };
            Some(Site {
                start: n.start_byte(),
                end: n.end_byte(),
                edits: vec![replace(n, format!("{lt} = {lt} {bin} {rt}"))],
            })
        })
        .collect()
}

/// Two-operand comparisons with their single operator token.
fn comparisons<'t>(root: Node<'t>) -> Vec<(Node<'t>, Node<'t>, Node<'t>, Node<'t>)> {
    collect(root, "comparison_operator")
        .into_iter()
        .filter_map(|n| {
            let operands: Vec<Node<'t>> = syntax::named_children(n)
                .into_iter()
                .filter(|c| c.kind() != "comment")
                .collect();
            let mut cursor = n.walk();
            let ops: Vec<Node<'t>> = n.children_by_field_name("operators", &mut cursor).collect();
            (operands.len() == 2 && ops.len() == 1).then(|| (n, operands[0], ops[0], operands[1]))
        })
        .collect()
}

fn swap(source: &str, n: Node<'_>, a: Node<'_>, op: Node<'_>, b: Node<'_>, new_op: &str) -> Site {
    let mut edits = vec![
        replace(a, node_text(b, source).to_owned()),
        replace(b, node_text(a, source).to_owned()),
    ];
    if new_op != node_text(op, source) {
        edits.push(replace(op, new_op.to_owned()));
    }
    Site {
        start: n.start_byte(),
        end: n.end_byte(),
        edits,
    }
}

pub(super) fn switch_equal(source: &str, root: Node<'_>) -> Vec<Site> {
    comparisons(root)
        .into_iter()
        .filter(|(_, _, op, _)| node_text(*op, source) == "==")
        .map(|(n, a, op, b)| swap(source, n, a, op, b, "=="))
        .collect()
}

pub(super) fn switch_relation(source: &str, root: Node<'_>) -> Vec<Site> {
    comparisons(root)
        .into_iter()
        .filter_map(|(n, a, op, b)| {
            let mirrored = match node_text(op, source) {
                "<" => ">",
                ">" => "<",
                "<=" => ">=",
                ">=" => "<=",
                _ => return None,
            };
            Some(swap(source, n, a, op, b, mirrored))
        })
        .collect()
}

fn nested_infix(op: Node<'_>) -> Option<Node<'_>> {
    match op.kind() {
        "binary_operator" => Some(op),
        "parenthesized_expression" => op
            .named_child(0)
            .filter(|c| c.kind() == "binary_operator" && op.named_child_count() == 1),
        _ => None,
    }
}

/// Operand of an assignment's right-hand side to hoist into a fresh name,
/// with the statement holding the assignment.
fn infix_target<'t>(stmt: Node<'t>, source: &str) -> Option<(Node<'t>, Node<'t>)> {
    let assign = stmt.named_child(0).filter(|a| a.kind() == "assignment" && stmt.named_child_count() == 1)?;
    let right = assign.child_by_field_name("right")?;
    if right.kind() != "binary_operator" {
        return None;
    }
    // the statement must open its line so a new line can be inserted before it
    let line_start = source[..stmt.start_byte()].rfind('\n').map(|p| p + 1).unwrap_or(0);
    if !source[line_start..stmt.start_byte()].chars().all(|c| c == ' ' || c == '\t') {
        return None;
    }
    let left = right.child_by_field_name("left")?;
    let other = right.child_by_field_name("right")?;
    if nested_infix(left).is_some() {
        Some((stmt, left))
    } else if nested_infix(other).is_some() && is_pure(left) {
        // hoisting the right operand moves it before the left one; only
        // safe when the left operand has no effects
        Some((stmt, other))
    } else {
        None
    }
}

pub(super) fn infix_candidates(source: &str, root: Node<'_>) -> Vec<Site> {
    collect(root, "expression_statement")
        .into_iter()
        .filter_map(|stmt| infix_target(stmt, source))
        .map(|(stmt, _)| Site {
            start: stmt.start_byte(),
            end: stmt.end_byte(),
            edits: Vec::new(),
        })
        .collect()
}

fn identifiers(root: Node<'_>, source: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    syntax::walk(root, &mut |n| {
        if n.kind() == "identifier" {
            out.insert(node_text(n, source).to_owned());
        }
    });
    out
}

/// `temp`, then `temp_2`, `temp_3`, ... skipping names already in use.
fn fresh_names(taken: &BTreeSet<String>) -> impl Iterator<Item = String> + '_ {
    std::iter::once("temp".to_owned())
        .chain((2..).map(|k| format!("temp_{k}")))
        .filter(|n| !taken.contains(n))
}

/// Fills in the edits of the selected statement sites.
pub(super) fn infix_dividing(source: &str, root: Node<'_>, chosen: Vec<Site>) -> Vec<Site> {
    let taken = identifiers(root, source);
    let mut names = fresh_names(&taken);
    let by_start: Vec<(Node<'_>, Node<'_>)> = collect(root, "expression_statement")
        .into_iter()
        .filter_map(|stmt| infix_target(stmt, source))
        .collect();
    chosen
        .into_iter()
        .filter_map(|site| {
            let (stmt, operand) = by_start.iter().find(|(s, _)| s.start_byte() == site.start)?;
            let inner = nested_infix(*operand)?;
            let name = names.next()?;
            let line_start = source[..stmt.start_byte()].rfind('\n').map(|p| p + 1).unwrap_or(0);
            let indent = &source[line_start..stmt.start_byte()];
            let insert = Edit {
                start: stmt.start_byte(),
                end: stmt.start_byte(),
                text: format!("{name} = {}\n{indent}", node_text(inner, source)),
            };
            Some(Site {
                start: site.start,
                end: site.end,
                edits: vec![insert, replace(*operand, name)],
            })
        })
        .collect()
}
