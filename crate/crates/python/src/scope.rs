//! Name bindings and loads per lexical scope.
//!
//! This is deliberately shallow: a name counts as used in a scope when any
//! load of the same spelling occurs in that scope or a nested one. There is no
//! shadowing or aliasing analysis.

use std::collections::BTreeSet;

use tree_sitter::Node;

use crate::syntax::{self, text};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScopeKind {
    Module,
    Function,
    Class,
    Lambda,
    Comprehension,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BindKind {
    Assign,
    AugAssign,
    For,
    With,
    Except,
    Import,
    Def,
    Class,
    Param,
    VarParam,
    Walrus,
}

#[derive(Debug, Clone)]
pub struct Binding<'t> {
    pub name: String,
    /// The identifier (or, for imports, the import name node).
    pub node: Node<'t>,
    /// The enclosing construct used for reporting, e.g. the except clause.
    pub owner: Node<'t>,
    pub kind: BindKind,
}

#[derive(Debug)]
pub struct Scope<'t> {
    pub kind: ScopeKind,
    pub node: Node<'t>,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub bindings: Vec<Binding<'t>>,
    pub loads: Vec<(String, Node<'t>)>,
    pub globals: BTreeSet<String>,
}

#[derive(Debug)]
pub struct ScopeTree<'t> {
    pub scopes: Vec<Scope<'t>>,
}

impl<'t> ScopeTree<'t> {
    pub fn build(root: Node<'t>, source: &str) -> Self {
        let mut b = Builder {
            source,
            scopes: Vec::new(),
        };
        let module = b.push(ScopeKind::Module, root, None);
        for c in syntax::children(root) {
            b.visit(c, module);
        }
        ScopeTree { scopes: b.scopes }
    }

    pub fn module(&self) -> &Scope<'t> {
        &self.scopes[0]
    }

    /// Whether `name` is loaded in scope `id` or any scope nested in it.
    pub fn is_loaded(&self, id: usize, name: &str) -> bool {
        let s = &self.scopes[id];
        s.loads.iter().any(|(n, _)| n == name) || s.children.iter().any(|&c| self.is_loaded(c, name))
    }

    pub fn scope_of_node(&self, node: Node<'t>) -> Option<usize> {
        self.scopes.iter().position(|s| s.node.id() == node.id())
    }
}

struct Builder<'s, 't> {
    source: &'s str,
    scopes: Vec<Scope<'t>>,
}

impl<'s, 't> Builder<'s, 't> {
    fn push(&mut self, kind: ScopeKind, node: Node<'t>, parent: Option<usize>) -> usize {
        let id = self.scopes.len();
        self.scopes.push(Scope {
            kind,
            node,
            parent,
            children: Vec::new(),
            bindings: Vec::new(),
            loads: Vec::new(),
            globals: BTreeSet::new(),
        });
        if let Some(p) = parent {
            self.scopes[p].children.push(id);
        }
        id
    }

    fn bind(&mut self, scope: usize, node: Node<'t>, owner: Node<'t>, kind: BindKind) {
        let name = text(node, self.source).to_owned();
        self.scopes[scope].bindings.push(Binding {
            name,
            node,
            owner,
            kind,
        });
    }

    fn load(&mut self, scope: usize, node: Node<'t>) {
        let name = text(node, self.source).to_owned();
        self.scopes[scope].loads.push((name, node));
    }

    fn visit_all(&mut self, node: Node<'t>, scope: usize) {
        for c in syntax::children(node) {
            self.visit(c, scope);
        }
    }

    /// Binds every identifier in an assignment-like target.
    fn target(&mut self, node: Node<'t>, owner: Node<'t>, scope: usize, kind: BindKind) {
        match node.kind() {
            "identifier" => self.bind(scope, node, owner, kind),
            "pattern_list" | "tuple_pattern" | "list_pattern" | "tuple" | "list"
            | "list_splat_pattern" | "parenthesized_expression" | "as_pattern_target"
            | "list_splat" => {
                for c in syntax::named_children(node) {
                    self.target(c, owner, scope, kind);
                }
            }
            // attribute / subscript targets load their object
            _ => self.visit(node, scope),
        }
    }

    fn visit(&mut self, node: Node<'t>, scope: usize) {
        match node.kind() {
            "identifier" => self.load(scope, node),
            "function_definition" => self.function(node, scope),
            "class_definition" => {
                if let Some(name) = node.child_by_field_name("name") {
                    self.bind(scope, name, node, BindKind::Class);
                }
                for field in ["superclasses", "type_parameters"] {
                    if let Some(n) = node.child_by_field_name(field) {
                        self.visit(n, scope);
                    }
                }
                let inner = self.push(ScopeKind::Class, node, Some(scope));
                if let Some(body) = node.child_by_field_name("body") {
                    self.visit_all(body, inner);
                }
            }
            "lambda" => {
                let inner = self.push(ScopeKind::Lambda, node, Some(scope));
                if let Some(params) = node.child_by_field_name("parameters") {
                    self.parameters(params, node, scope, inner);
                }
                if let Some(body) = node.child_by_field_name("body") {
                    self.visit(body, inner);
                }
            }
            "list_comprehension" | "set_comprehension" | "dictionary_comprehension"
            | "generator_expression" => {
                let inner = self.push(ScopeKind::Comprehension, node, Some(scope));
                for c in syntax::named_children(node) {
                    if c.kind() == "for_in_clause" {
                        if let Some(left) = c.child_by_field_name("left") {
                            self.target(left, c, inner, BindKind::For);
                        }
                        for r in syntax::named_children(c) {
                            if Some(r) != c.child_by_field_name("left") {
                                self.visit(r, inner);
                            }
                        }
                    } else {
                        self.visit(c, inner);
                    }
                }
            }
            "assignment" => {
                if let Some(left) = node.child_by_field_name("left") {
                    let owner = node;
                    self.target(left, owner, scope, BindKind::Assign);
                }
                for field in ["type", "right"] {
                    if let Some(n) = node.child_by_field_name(field) {
                        self.visit(n, scope);
                    }
                }
            }
            "augmented_assignment" => {
                if let Some(left) = node.child_by_field_name("left") {
                    if left.kind() == "identifier" {
                        self.bind(scope, left, node, BindKind::AugAssign);
                        self.load(scope, left);
                    } else {
                        self.visit(left, scope);
                    }
                }
                if let Some(n) = node.child_by_field_name("right") {
                    self.visit(n, scope);
                }
            }
            "for_statement" => {
                if let Some(left) = node.child_by_field_name("left") {
                    self.target(left, node, scope, BindKind::For);
                }
                for field in ["right", "body", "alternative"] {
                    if let Some(n) = node.child_by_field_name(field) {
                        self.visit(n, scope);
                    }
                }
            }
            "with_item" => {
                let value = node.child_by_field_name("value");
                match value {
                    Some(v) if v.kind() == "as_pattern" => {
                        for c in syntax::named_children(v) {
                            if c.kind() == "as_pattern_target" {
                                self.target(c, node, scope, BindKind::With);
                            } else {
                                self.visit(c, scope);
                            }
                        }
                    }
                    Some(v) => self.visit(v, scope),
                    None => {}
                }
            }
            "except_clause" => {
                for c in syntax::children(node) {
                    if c.kind() == "as_pattern" {
                        for p in syntax::named_children(c) {
                            if p.kind() == "as_pattern_target" {
                                self.target(p, node, scope, BindKind::Except);
                            } else {
                                self.visit(p, scope);
                            }
                        }
                    } else {
                        self.visit(c, scope);
                    }
                }
            }
            "import_statement" | "import_from_statement" => {
                for name in import_names(node) {
                    let bound = bound_name_node(name);
                    let owner = node;
                    let n = text(bound, self.source).to_owned();
                    self.scopes[scope].bindings.push(Binding {
                        name: n,
                        node: name,
                        owner,
                        kind: BindKind::Import,
                    });
                }
            }
            "global_statement" | "nonlocal_statement" => {
                for c in syntax::named_children(node) {
                    if c.kind() == "identifier" {
                        let n = text(c, self.source).to_owned();
                        self.scopes[scope].globals.insert(n);
                    }
                }
            }
            "named_expression" => {
                // walrus binds in the nearest non-comprehension scope
                let mut target_scope = scope;
                while self.scopes[target_scope].kind == ScopeKind::Comprehension {
                    target_scope = self.scopes[target_scope].parent.unwrap_or(0);
                }
                if let Some(name) = node.child_by_field_name("name") {
                    self.bind(target_scope, name, node, BindKind::Walrus);
                }
                if let Some(v) = node.child_by_field_name("value") {
                    self.visit(v, scope);
                }
            }
            "keyword_argument" => {
                if let Some(v) = node.child_by_field_name("value") {
                    self.visit(v, scope);
                }
            }
            "attribute" => {
                if let Some(o) = node.child_by_field_name("object") {
                    self.visit(o, scope);
                }
            }
            "string" => {
                for c in syntax::named_children(node) {
                    if c.kind() == "interpolation" {
                        self.visit_all(c, scope);
                    }
                }
            }
            _ => self.visit_all(node, scope),
        }
    }

    fn function(&mut self, node: Node<'t>, scope: usize) {
        if let Some(name) = node.child_by_field_name("name") {
            self.bind(scope, name, node, BindKind::Def);
        }
        if let Some(rt) = node.child_by_field_name("return_type") {
            self.visit(rt, scope);
        }
        let inner = self.push(ScopeKind::Function, node, Some(scope));
        if let Some(params) = node.child_by_field_name("parameters") {
            self.parameters(params, node, scope, inner);
        }
        if let Some(body) = node.child_by_field_name("body") {
            self.visit_all(body, inner);
        }
    }

    fn parameters(&mut self, params: Node<'t>, owner: Node<'t>, outer: usize, inner: usize) {
        for p in syntax::named_children(params) {
            match p.kind() {
                "identifier" => self.bind(inner, p, owner, BindKind::Param),
                "default_parameter" | "typed_default_parameter" => {
                    if let Some(n) = p.child_by_field_name("name") {
                        self.target(n, owner, inner, BindKind::Param);
                    }
                    for field in ["type", "value"] {
                        if let Some(v) = p.child_by_field_name(field) {
                            self.visit(v, outer);
                        }
                    }
                }
                "typed_parameter" => {
                    for c in syntax::named_children(p) {
                        match c.kind() {
                            "identifier" => self.bind(inner, c, owner, BindKind::Param),
                            "list_splat_pattern" | "dictionary_splat_pattern" => {
                                self.splat(c, owner, inner)
                            }
                            _ => self.visit(c, outer),
                        }
                    }
                }
                "list_splat_pattern" | "dictionary_splat_pattern" => self.splat(p, owner, inner),
                "tuple_pattern" => self.target(p, owner, inner, BindKind::Param),
                _ => {}
            }
        }
    }

    fn splat(&mut self, node: Node<'t>, owner: Node<'t>, inner: usize) {
        if let Some(id) = syntax::named_children(node).into_iter().find(|c| c.kind() == "identifier") {
            self.bind(inner, id, owner, BindKind::VarParam);
        }
    }
}

/// The `dotted_name` / `aliased_import` children naming imported objects.
pub fn import_names(stmt: Node<'_>) -> Vec<Node<'_>> {
    let module = stmt.child_by_field_name("module_name");
    syntax::named_children(stmt)
        .into_iter()
        .filter(|c| Some(*c) != module && matches!(c.kind(), "dotted_name" | "aliased_import"))
        .collect()
}

/// The identifier an import name binds: the alias, or the first dotted part.
pub fn bound_name_node(name: Node<'_>) -> Node<'_> {
    if name.kind() == "aliased_import" {
        if let Some(alias) = name.child_by_field_name("alias") {
            return alias;
        }
    }
    let dotted = if name.kind() == "aliased_import" {
        name.child_by_field_name("name").unwrap_or(name)
    } else {
        name
    };
    dotted.named_child(0).unwrap_or(dotted)
}
