//! Class and method lookups shared by the naming and usage rules.
//!
//! Only classes defined in the same snippet are resolved. For bases imported
//! from elsewhere a small table of commonly overridden standard-library
//! method names stands in for real inheritance lookup.

use std::collections::BTreeMap;

use tree_sitter::Node;

use crate::syntax::{self, text};

/// Method names that standard-library base classes define and user code
/// routinely overrides.
const STDLIB_OVERRIDABLE: &[&str] = &[
    "setUp",
    "tearDown",
    "setUpClass",
    "tearDownClass",
    "asyncSetUp",
    "asyncTearDown",
    "runTest",
    "do_GET",
    "do_POST",
    "do_PUT",
    "do_DELETE",
    "do_HEAD",
    "log_message",
    "handle",
    "setup",
    "finish",
    "run",
    "emit",
    "format",
    "filter",
    "default",
    "encode",
    "decode",
    "parse_args",
    "error",
    "get",
    "keys",
    "items",
    "values",
    "update",
    "write",
    "read",
    "close",
    "flush",
    "handle_starttag",
    "handle_endtag",
    "handle_data",
    "visit",
    "generic_visit",
    "missing",
];

const BUILTIN_CLASSES: &[&str] = &[
    "object", "int", "float", "complex", "str", "bytes", "bytearray", "bool", "list", "dict", "set",
    "frozenset", "tuple", "type", "range", "slice", "property", "staticmethod", "classmethod",
    "Exception", "BaseException", "ValueError", "TypeError", "KeyError", "IndexError",
    "RuntimeError", "AttributeError", "NotImplementedError", "OSError", "IOError", "LookupError",
    "ArithmeticError", "ZeroDivisionError", "StopIteration", "ImportError", "NameError",
    "AssertionError", "UnicodeError", "PermissionError", "FileNotFoundError", "TimeoutError",
    "Warning", "UserWarning", "DeprecationWarning", "memoryview", "enumerate", "zip", "map",
    "filter", "reversed", "super",
];

pub(super) fn is_builtin_class(name: &str) -> bool {
    BUILTIN_CLASSES.contains(&name)
}

pub(super) struct ClassIndex<'t> {
    classes: BTreeMap<String, Node<'t>>,
}

impl<'t> ClassIndex<'t> {
    pub(super) fn build(root: Node<'t>, source: &str) -> Self {
        let mut classes = BTreeMap::new();
        for stmt in syntax::statements(root) {
            let def = syntax::definition(stmt);
            if def.kind() == "class_definition" {
                if let Some(name) = def.child_by_field_name("name") {
                    classes.insert(text(name, source).to_owned(), def);
                }
            }
        }
        Self { classes }
    }

    pub(super) fn get(&self, name: &str) -> Option<Node<'t>> {
        self.classes.get(name).copied()
    }

    pub(super) fn contains(&self, name: &str) -> bool {
        self.classes.contains_key(name)
    }

    /// Whether a method of `class` with this name is defined by an ancestor.
    pub(super) fn overrides(&self, class: Node<'t>, method: &str, source: &str) -> bool {
        self.overrides_depth(class, method, source, 0)
    }

    fn overrides_depth(&self, class: Node<'t>, method: &str, source: &str, depth: usize) -> bool {
        if depth > 32 {
            return false;
        }
        bases(class).into_iter().any(|b| {
            if b.kind() == "identifier" {
                let name = text(b, source);
                if let Some(base) = self.get(name) {
                    return defines(base, method, source) || self.overrides_depth(base, method, source, depth + 1);
                }
                if name == "object" {
                    return false;
                }
            }
            STDLIB_OVERRIDABLE.contains(&method)
        })
    }
}

/// Positional base-class expressions of a class definition.
pub(super) fn bases(class: Node<'_>) -> Vec<Node<'_>> {
    class
        .child_by_field_name("superclasses")
        .map(|args| {
            syntax::named_children(args)
                .into_iter()
                .filter(|a| a.kind() != "keyword_argument" && a.kind() != "comment")
                .collect()
        })
        .unwrap_or_default()
}

/// Whether a class body binds `name` directly.
fn defines(class: Node<'_>, name: &str, source: &str) -> bool {
    let Some(body) = class.child_by_field_name("body") else {
        return false;
    };
    syntax::statements(body).into_iter().any(|s| {
        let d = syntax::definition(s);
        match d.kind() {
            "function_definition" | "class_definition" => {
                d.child_by_field_name("name").map(|n| text(n, source)) == Some(name)
            }
            "expression_statement" => d
                .named_child(0)
                .filter(|a| a.kind() == "assignment")
                .and_then(|a| a.child_by_field_name("left"))
                .map(|l| text(l, source) == name)
                .unwrap_or(false),
            _ => false,
        }
    })
}

/// Method facts needed by several rules.
pub(super) struct MethodInfo<'t> {
    pub class: Node<'t>,
    pub is_static: bool,
}

pub(super) fn method_info<'t>(def: Node<'t>, source: &str) -> Option<MethodInfo<'t>> {
    let class = syntax::enclosing_class(def)?;
    let decos = syntax::decorators(def, source);
    Some(MethodInfo {
        class,
        is_static: decos.iter().any(|d| *d == "staticmethod"),
    })
}

/// Parameter identifiers of a def, in order, with whether each is a
/// `*args`/`**kwargs` style parameter and whether it is keyword-only.
pub(super) struct Param<'t> {
    pub ident: Node<'t>,
    pub variadic: bool,
    pub keyword_only: bool,
    pub positional_only: bool,
}

pub(super) fn params<'t>(def: Node<'t>) -> Vec<Param<'t>> {
    let Some(list) = def.child_by_field_name("parameters") else {
        return Vec::new();
    };
    let mut out: Vec<Param<'t>> = Vec::new();
    let mut keyword_only = false;
    for p in syntax::named_children(list) {
        let (ident, variadic) = match p.kind() {
            "identifier" => (Some(p), false),
            "default_parameter" | "typed_default_parameter" => {
                (p.child_by_field_name("name").filter(|n| n.kind() == "identifier"), false)
            }
            "typed_parameter" => {
                let inner = p.named_child(0);
                match inner {
                    Some(i) if i.kind() == "identifier" => (Some(i), false),
                    Some(i) => (i.named_child(0).filter(|n| n.kind() == "identifier"), true),
                    None => (None, false),
                }
            }
            "list_splat_pattern" | "dictionary_splat_pattern" => {
                (p.named_child(0).filter(|n| n.kind() == "identifier"), true)
            }
            "keyword_separator" => {
                keyword_only = true;
                continue;
            }
            "positional_separator" => {
                for earlier in &mut out {
                    earlier.positional_only = true;
                }
                continue;
            }
            _ => (None, false),
        };
        let starred = matches!(p.kind(), "list_splat_pattern")
            || (p.kind() == "typed_parameter"
                && p.named_child(0).map(|c| c.kind()) == Some("list_splat_pattern"));
        if let Some(ident) = ident {
            out.push(Param {
                ident,
                variadic,
                keyword_only: keyword_only && !variadic,
                positional_only: false,
            });
        }
        if starred {
            keyword_only = true;
        }
    }
    out
}
