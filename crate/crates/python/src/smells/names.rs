//! Naming-convention rule.
//!
//! Module-level names are classified the way the reference linter does it:
//! a name bound once to a constant must be UPPER_CASE, a rebound name must be
//! snake_case, and values that cannot be inferred are not checked. Inference
//! here is a small local evaluator, so values flowing through imports are
//! treated as unknown.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use regex::Regex;
use tree_sitter::Node;

use super::classes::{self, ClassIndex};
use super::Sink;
use crate::scope::{BindKind, Binding, ScopeKind, ScopeTree};
use crate::syntax::{self, text};

static SNAKE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^([^\W\dA-Z][^\WA-Z]*|_[^\WA-Z]*|__[^\WA-Z\d_][^\WA-Z]+__)$").unwrap());
static UPPER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^([^\W\da-z][^\Wa-z]*|__.*__)$").unwrap());
static PASCAL: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[^\W\da-z][^\W_]*$").unwrap());

const GOOD_NAMES: &[&str] = &["i", "j", "k", "ex", "Run", "_"];

const BUILTIN_FUNCTIONS: &[&str] = &[
    "print", "len", "abs", "min", "max", "sum", "sorted", "open", "input", "repr", "hash", "id",
    "isinstance", "issubclass", "getattr", "setattr", "hasattr", "iter", "next", "round", "any",
    "all", "divmod", "pow", "chr", "ord", "hex", "oct", "bin", "callable", "vars", "dir",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Style {
    Snake,
    Upper,
    Pascal,
}

impl Style {
    fn matches(self, name: &str) -> bool {
        match self {
            Style::Snake => SNAKE.is_match(name),
            Style::Upper => UPPER.is_match(name),
            Style::Pascal => PASCAL.is_match(name),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Style::Snake => "snake_case",
            Style::Upper => "UPPER_CASE",
            Style::Pascal => "PascalCase",
        }
    }
}

fn report(sink: &mut Sink<'_>, kind: &str, style: Style, name: &str, range: ((usize, usize), (usize, usize))) {
    if GOOD_NAMES.contains(&name) || style.matches(name) {
        return;
    }
    sink.range(
        "C0103",
        range,
        format!(
            "{kind} name \"{name}\" doesn't conform to {} naming style",
            style.label()
        ),
    );
}

fn node_range(n: Node<'_>) -> ((usize, usize), (usize, usize)) {
    (syntax::start(n), syntax::end(n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Value {
    Unknown,
    Const,
    Class,
    Function,
    Other,
}

struct Ctx<'a, 't> {
    source: &'a str,
    classes: &'a ClassIndex<'t>,
    functions: BTreeMap<String, Node<'t>>,
    imported: BTreeSet<String>,
    /// Module-level names bound by exactly one plain assignment, with the value.
    single_values: BTreeMap<String, Node<'t>>,
}

impl<'t> Ctx<'_, 't> {
    fn infer(&self, v: Node<'t>, depth: usize) -> Value {
        if depth > 16 {
            return Value::Unknown;
        }
        let all = |nodes: Vec<Node<'t>>| -> Value {
            let mut out = Value::Const;
            for n in nodes {
                match self.infer(n, depth + 1) {
                    Value::Unknown => return Value::Unknown,
                    Value::Const => {}
                    _ => out = Value::Other,
                }
            }
            out
        };
        match v.kind() {
            "integer" | "float" | "true" | "false" | "none" | "ellipsis" | "string"
            | "concatenated_string" => {
                // interpolations must be inferable for the result to be known
                let mut holes = Vec::new();
                syntax::walk(v, &mut |n| {
                    if n.kind() == "interpolation" {
                        if let Some(e) = n.named_child(0) {
                            holes.push(e);
                        }
                    }
                });
                match all(holes) {
                    Value::Unknown => Value::Unknown,
                    _ => Value::Const,
                }
            }
            "unary_operator" | "not_operator" | "binary_operator" | "boolean_operator"
            | "comparison_operator" | "conditional_expression" => {
                let parts: Vec<Node<'t>> = syntax::named_children(v)
                    .into_iter()
                    .filter(|c| c.kind() != "comment")
                    .collect();
                all(parts)
            }
            "parenthesized_expression" => v
                .named_child(0)
                .map(|c| self.infer(c, depth + 1))
                .unwrap_or(Value::Unknown),
            "list" | "dictionary" | "set" | "tuple" | "expression_list" => Value::Other,
            "lambda" => Value::Function,
            "identifier" => {
                let name = text(v, self.source);
                if self.imported.contains(name) {
                    Value::Unknown
                } else if self.classes.contains(name) || classes::is_builtin_class(name) {
                    Value::Class
                } else if self.functions.contains_key(name) || BUILTIN_FUNCTIONS.contains(&name) {
                    Value::Function
                } else if let Some(value) = self.single_values.get(name) {
                    self.infer(*value, depth + 1)
                } else {
                    Value::Unknown
                }
            }
            "call" => self.infer_call(v, depth),
            "subscript" => match v.child_by_field_name("value") {
                Some(c) if matches!(c.kind(), "list" | "tuple" | "string") => self.infer(c, depth + 1).max_const(),
                _ => Value::Unknown,
            },
            "attribute" => {
                let obj = v.child_by_field_name("object");
                match obj.map(|o| self.infer(o, depth + 1)) {
                    Some(Value::Const) => Value::Function,
                    _ => Value::Unknown,
                }
            }
            _ => Value::Unknown,
        }
    }

    fn infer_call(&self, call: Node<'t>, depth: usize) -> Value {
        let Some(f) = call.child_by_field_name("function") else {
            return Value::Unknown;
        };
        let args: Vec<Node<'t>> = call
            .child_by_field_name("arguments")
            .map(syntax::named_children)
            .unwrap_or_default();
        match f.kind() {
            "identifier" => {
                let name = text(f, self.source);
                if self.imported.contains(name) {
                    return Value::Unknown;
                }
                if self.classes.contains(name) {
                    return Value::Other;
                }
                match name {
                    "int" | "str" | "float" | "bool" | "len" | "abs" | "repr" | "round" | "chr" | "ord" => {
                        let a = args.iter().map(|x| self.infer(*x, depth + 1));
                        if a.clone().all(|x| x == Value::Const) || (name == "str" && args.is_empty()) {
                            Value::Const
                        } else if a.clone().any(|x| x == Value::Unknown) {
                            Value::Unknown
                        } else if name == "len" {
                            Value::Const
                        } else {
                            Value::Other
                        }
                    }
                    "list" | "dict" | "set" | "tuple" | "frozenset" | "object" | "bytearray" => Value::Other,
                    _ => match self.functions.get(name) {
                        Some(def) => self.infer_returns(*def, depth),
                        None => Value::Unknown,
                    },
                }
            }
            "attribute" => {
                // methods of constant strings and numbers give constants
                match f.child_by_field_name("object").map(|o| self.infer(o, depth + 1)) {
                    Some(Value::Const) => {
                        if args.iter().any(|x| self.infer(*x, depth + 1) == Value::Unknown) {
                            Value::Unknown
                        } else {
                            Value::Const
                        }
                    }
                    _ => Value::Unknown,
                }
            }
            _ => Value::Unknown,
        }
    }

    /// Inferred result of calling a module-level function: the first return.
    fn infer_returns(&self, def: Node<'t>, depth: usize) -> Value {
        let mut first = None;
        if let Some(body) = def.child_by_field_name("body") {
            syntax::walk(body, &mut |n| {
                if first.is_none() && n.kind() == "return_statement" {
                    first = Some(n);
                }
            });
        }
        match first {
            Some(r) => match r.named_child(0) {
                Some(e) => {
                    if mentions_params(e, def, self.source) {
                        Value::Unknown
                    } else {
                        self.infer(e, depth + 1)
                    }
                }
                None => Value::Const,
            },
            None => Value::Const,
        }
    }
}

impl Value {
    fn max_const(self) -> Value {
        match self {
            Value::Unknown => Value::Unknown,
            _ => Value::Const,
        }
    }
}

fn mentions_params(e: Node<'_>, def: Node<'_>, source: &str) -> bool {
    let names: BTreeSet<&str> = classes::params(def).iter().map(|p| text(p.ident, source)).collect();
    let mut hit = false;
    syntax::walk(e, &mut |n| {
        if n.kind() == "identifier" && names.contains(text(n, source)) {
            hit = true;
        }
    });
    hit
}

/// The value ultimately assigned by a (possibly chained) assignment.
fn assigned_value(assign: Node<'_>) -> Option<Node<'_>> {
    let mut a = assign;
    loop {
        let right = a.child_by_field_name("right")?;
        if right.kind() == "assignment" {
            a = right;
        } else {
            return Some(right);
        }
    }
}

fn in_loop(node: Node<'_>) -> bool {
    let mut p = node.parent();
    while let Some(n) = p {
        match n.kind() {
            "for_statement" | "while_statement" => return true,
            "function_definition" | "class_definition" | "lambda" => return false,
            _ => {}
        }
        p = n.parent();
    }
    false
}

fn in_main_block(node: Node<'_>, source: &str) -> bool {
    let mut p = node.parent();
    while let Some(n) = p {
        if n.kind() == "if_statement" {
            if let Some(cond) = n.child_by_field_name("condition") {
                let t: String = text(cond, source).split_whitespace().collect();
                if t == "__name__==\"__main__\""
                    || t == "__name__=='__main__'"
                    || t == "\"__main__\"==__name__"
                    || t == "'__main__'==__name__"
                {
                    return true;
                }
            }
        }
        p = n.parent();
    }
    false
}

/// Branch path of a node: each enclosing if/try with the index of the branch
/// holding it, used to decide whether two bindings exclude each other.
fn branch_path(node: Node<'_>) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut child = node;
    let mut p = node.parent();
    while let Some(n) = p {
        if matches!(n.kind(), "if_statement" | "try_statement") {
            let idx = syntax::children(n)
                .iter()
                .position(|c| c.id() == child.id())
                .unwrap_or(0);
            // the condition and the consequence of an if are the same branch
            let branch = match (n.kind(), child.kind()) {
                ("if_statement", "block") | ("try_statement", "block") => 0,
                (_, "elif_clause") | (_, "else_clause") | (_, "except_clause") => idx,
                _ => 0,
            };
            let branch = if n.kind() == "try_statement" && child.kind() == "else_clause" { 0 } else { branch };
            let branch = if child.kind() == "finally_clause" { usize::MAX } else { branch };
            out.push((n.id(), branch));
        }
        child = n;
        p = n.parent();
    }
    out.reverse();
    out
}

fn exclusive(a: Node<'_>, b: Node<'_>) -> bool {
    let pa = branch_path(a);
    let pb = branch_path(b);
    for (x, y) in pa.iter().zip(&pb) {
        if x.0 != y.0 {
            return false;
        }
        if x.1 != y.1 {
            return x.1 != usize::MAX && y.1 != usize::MAX;
        }
    }
    false
}

pub(super) fn check(source: &str, root: Node<'_>, scopes: &ScopeTree<'_>, sink: &mut Sink<'_>) {
    if !sink.on("C0103") {
        return;
    }
    let index = ClassIndex::build(root, source);
    let module = scopes.module();

    let mut functions = BTreeMap::new();
    let mut imported = BTreeSet::new();
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for b in &module.bindings {
        *counts.entry(b.name.as_str()).or_default() += 1;
        match b.kind {
            BindKind::Def => {
                functions.insert(b.name.clone(), b.owner);
            }
            BindKind::Import => {
                imported.insert(b.name.clone());
            }
            _ => {}
        }
    }
    let single_values = module
        .bindings
        .iter()
        .filter(|b| b.kind == BindKind::Assign && counts.get(b.name.as_str()) == Some(&1))
        .filter(|b| b.owner.child_by_field_name("left").map(|l| l.id()) == Some(b.node.id()))
        .filter_map(|b| assigned_value(b.owner).map(|v| (b.name.clone(), v)))
        .collect();
    let ctx = Ctx {
        source,
        classes: &index,
        functions,
        imported,
        single_values,
    };

    module_names(&ctx, module.bindings.as_slice(), &counts, sink);

    syntax::walk(root, &mut |n| match n.kind() {
        "class_definition" => class_names(&ctx, n, sink),
        "function_definition" => function_names(&ctx, n, sink),
        _ => {}
    });

    for scope in &scopes.scopes {
        if scope.kind != ScopeKind::Function {
            continue;
        }
        let params: BTreeSet<&str> = scope
            .bindings
            .iter()
            .filter(|b| matches!(b.kind, BindKind::Param | BindKind::VarParam))
            .map(|b| b.name.as_str())
            .collect();
        for b in &scope.bindings {
            if params.contains(b.name.as_str()) || scope.globals.contains(&b.name) {
                continue;
            }
            let range = match b.kind {
                BindKind::Assign | BindKind::AugAssign | BindKind::For | BindKind::With | BindKind::Walrus => {
                    node_range(b.node)
                }
                BindKind::Except => node_range(b.owner),
                _ => continue,
            };
            // a local bound to a class object is exempt
            if b.kind == BindKind::Assign
                && b.owner.child_by_field_name("left").map(|l| l.id()) == Some(b.node.id())
                && assigned_value(b.owner).map(|v| ctx.infer(v, 0)) == Some(Value::Class)
            {
                continue;
            }
            report(sink, "Variable", Style::Snake, &b.name, range);
        }
    }
}

fn module_names(ctx: &Ctx<'_, '_>, bindings: &[Binding<'_>], counts: &BTreeMap<&str, usize>, sink: &mut Sink<'_>) {
    for b in bindings {
        if b.kind != BindKind::Assign {
            continue;
        }
        let name = b.name.as_str();
        let Some(value) = assigned_value(b.owner) else {
            // annotation without a value is never inferred
            continue;
        };
        let direct = b.owner.child_by_field_name("left").map(|l| l.id()) == Some(b.node.id());
        if !direct && matches!(value.kind(), "tuple" | "expression_list") {
            // element-wise unpacking of a literal tuple is not checked
            continue;
        }
        let inferred = ctx.infer(value, 0);
        if inferred == Value::Unknown {
            continue;
        }
        let range = node_range(b.node);
        if inferred == Value::Class {
            report(sink, "Class", Style::Pascal, name, range);
            continue;
        }
        let main = in_main_block(b.node, ctx.source);
        let redefines_import = ctx.imported.contains(name)
            && syntax_ancestor(b.node, "except_clause");
        let reassigned = counts.get(name).copied().unwrap_or(0) > 1;
        let non_const_snake = inferred != Value::Const && Style::Snake.matches(name);
        if !redefines_import && inferred != Value::Function && !reassigned && !in_loop(b.node) {
            if non_const_snake {
                continue;
            }
            if main && !Style::Upper.matches(name) {
                report(sink, "Variable", Style::Snake, name, range);
            } else {
                report(sink, "Constant", Style::Upper, name, range);
            }
            continue;
        }
        if redefines_import {
            continue;
        }
        let same: Vec<&Binding<'_>> = bindings.iter().filter(|o| o.name == name).collect();
        let any_unknown = same.iter().any(|o| match o.kind {
            BindKind::Assign => assigned_value(o.owner).map(|v| ctx.infer(v, 0)).unwrap_or(Value::Unknown) == Value::Unknown,
            BindKind::Def | BindKind::Class => false,
            _ => true,
        });
        if any_unknown && Style::Upper.matches(name) {
            continue;
        }
        let all_exclusive = same.len() > 1
            && same
                .iter()
                .enumerate()
                .all(|(k, x)| same[k + 1..].iter().all(|y| exclusive(x.node, y.node)));
        if non_const_snake {
            continue;
        }
        if all_exclusive && !(main && !Style::Upper.matches(name)) {
            report(sink, "Constant", Style::Upper, name, range);
        } else {
            report(sink, "Variable", Style::Snake, name, range);
        }
    }
}

fn syntax_ancestor(node: Node<'_>, kind: &str) -> bool {
    let mut p = node.parent();
    while let Some(n) = p {
        if n.kind() == kind {
            return true;
        }
        p = n.parent();
    }
    false
}

fn class_names<'t>(ctx: &Ctx<'_, 't>, class: Node<'t>, sink: &mut Sink<'_>) {
    let Some(name) = class.child_by_field_name("name") else {
        return;
    };
    report(sink, "Class", Style::Pascal, text(name, ctx.source), syntax::header_range(class));

    let inherited = inherited_attrs(ctx, class, 0);
    for (attr, node) in instance_attrs(class, ctx.source) {
        if !inherited.contains(&attr) {
            report(sink, "Attribute", Style::Snake, &attr, node_range(node));
        }
    }
}

fn inherited_attrs(ctx: &Ctx<'_, '_>, class: Node<'_>, depth: usize) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    if depth > 32 {
        return out;
    }
    for base in classes::bases(class) {
        if let Some(b) = ctx.classes.get(text(base, ctx.source)) {
            out.extend(instance_attrs(b, ctx.source).into_iter().map(|(a, _)| a));
            out.extend(inherited_attrs(ctx, b, depth + 1));
        }
    }
    out
}

/// `self.attr` assignment targets in the methods of a class, first occurrence
/// per attribute in source order.
fn instance_attrs<'t>(class: Node<'t>, source: &str) -> Vec<(String, Node<'t>)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let Some(body) = class.child_by_field_name("body") else {
        return out;
    };
    for stmt in syntax::statements(body) {
        let def = syntax::definition(stmt);
        if def.kind() != "function_definition" {
            continue;
        }
        let decos = syntax::decorators(def, source);
        if decos.contains(&"staticmethod") || decos.contains(&"classmethod") {
            continue;
        }
        let Some(me) = classes::params(def).first().map(|p| text(p.ident, source).to_owned()) else {
            continue;
        };
        let Some(fbody) = def.child_by_field_name("body") else {
            continue;
        };
        let mut targets = Vec::new();
        collect_targets(fbody, &mut targets);
        for t in targets {
            if t.kind() != "attribute" {
                continue;
            }
            let obj = t.child_by_field_name("object");
            let attr = t.child_by_field_name("attribute");
            if let (Some(obj), Some(attr)) = (obj, attr) {
                if obj.kind() == "identifier" && text(obj, source) == me {
                    let a = text(attr, source).to_owned();
                    if seen.insert(a.clone()) {
                        out.push((a, t));
                    }
                }
            }
        }
    }
    out
}

fn collect_targets<'t>(node: Node<'t>, out: &mut Vec<Node<'t>>) {
    fn flatten<'t>(t: Node<'t>, out: &mut Vec<Node<'t>>) {
        match t.kind() {
            "pattern_list" | "tuple_pattern" | "list_pattern" | "tuple" | "list"
            | "parenthesized_expression" | "list_splat_pattern" | "as_pattern_target" => {
                for c in syntax::named_children(t) {
                    flatten(c, out);
                }
            }
            _ => out.push(t),
        }
    }
    match node.kind() {
        "class_definition" => return,
        "assignment" | "augmented_assignment" => {
            if let Some(l) = node.child_by_field_name("left") {
                flatten(l, out);
            }
        }
        "for_statement" => {
            if let Some(l) = node.child_by_field_name("left") {
                flatten(l, out);
            }
        }
        "as_pattern_target" => flatten(node, out),
        _ => {}
    }
    for c in syntax::named_children(node) {
        collect_targets(c, out);
    }
}

fn is_property(def: Node<'_>, source: &str) -> bool {
    syntax::decorators(def, source).iter().any(|d| {
        matches!(*d, "property" | "abc.abstractproperty" | "abstractproperty")
            || d.ends_with(".setter")
            || d.ends_with(".deleter")
    })
}

fn function_names<'t>(ctx: &Ctx<'_, 't>, def: Node<'t>, sink: &mut Sink<'_>) {
    let Some(name_node) = def.child_by_field_name("name") else {
        return;
    };
    let name = text(name_node, ctx.source);
    let kind = match classes::method_info(def, ctx.source) {
        Some(m) => {
            if ctx.classes.overrides(m.class, name, ctx.source) {
                return;
            }
            if is_property(def, ctx.source) {
                "Attribute"
            } else {
                "Method"
            }
        }
        None => "Function",
    };
    report(sink, kind, Style::Snake, name, syntax::header_range(def));
    for p in classes::params(def) {
        if p.variadic || p.keyword_only || p.positional_only {
            continue;
        }
        report(sink, "Argument", Style::Snake, text(p.ident, ctx.source), node_range(p.ident));
    }
}
