//! Def-use dataflow graphs for the dataflow component of CodeBLEU.
//!
//! Extraction is intra-method and purely lexical. Statements are scanned in
//! source order. Branches are walked in order with no join analysis, and
//! each read resolves to the most recent definition of that name.
//!
//! Variables are renamed `var_k` by first-definition order, restarting in
//! every method. A read that feeds the right-hand side of a definition
//! yields a `ComputedFrom` edge from the read variable to the defined one.
//! Any other read yields a `ComesFrom` edge from the variable to itself,
//! meaning the use comes from its last definition. Names never defined in
//! the method (fields, parameters, statics, class names used as call
//! targets) resolve to the synthetic `var_ext`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::multiset::Multiset;
use crate::syntax::{Label, SyntaxTree, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Relation {
    ComesFrom,
    ComputedFrom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Local(u32),
    External,
}

impl fmt::Display for VarRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarRef::Local(k) => write!(f, "var_{k}"),
            VarRef::External => f.write_str("var_ext"),
        }
    }
}

impl Serialize for VarRef {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Edge {
    /// Where the value comes from.
    pub def_var: VarRef,
    /// The variable that receives (or re-reads) it.
    pub use_var: VarRef,
    pub relation: Relation,
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?} {}", self.def_var, self.relation, self.use_var)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DataflowGraph {
    pub edges: Multiset<Edge>,
    /// Local variables summed over all methods.
    pub var_count: usize,
}

impl DataflowGraph {
    /// One `def_var relation use_var` line per edge, in sorted order.
    pub fn to_lines(&self) -> String {
        let mut out = String::new();
        for (edge, n) in self.edges.iter() {
            for _ in 0..n {
                out.push_str(&edge.to_string());
                out.push('\n');
            }
        }
        out
    }

    fn collapsed(&self) -> Multiset<Edge> {
        self.edges
            .iter()
            .flat_map(|(e, n)| {
                std::iter::repeat_n(
                    Edge {
                        relation: Relation::ComesFrom,
                        ..*e
                    },
                    n,
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataflowMatchConfig {
    /// Treat `ComesFrom` and `ComputedFrom` as the same relation.
    pub collapse_relations: bool,
    /// Score returned when the candidate has no edges but the reference does.
    pub empty_candidate_score: f64,
}

impl Default for DataflowMatchConfig {
    fn default() -> Self {
        Self {
            collapse_relations: false,
            empty_candidate_score: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataflowMatch {
    pub score: f64,
    /// Set when `empty_candidate_score` was used.
    pub empty_candidate_fallback: bool,
}

pub fn dataflow_match(
    candidate: &DataflowGraph,
    reference: &DataflowGraph,
    cfg: &DataflowMatchConfig,
) -> DataflowMatch {
    let (cand, refs) = if cfg.collapse_relations {
        (candidate.collapsed(), reference.collapsed())
    } else {
        (candidate.edges.clone(), reference.edges.clone())
    };
    match (cand.is_empty(), refs.is_empty()) {
        (true, true) => DataflowMatch {
            score: 1.0,
            empty_candidate_fallback: false,
        },
        (true, false) => DataflowMatch {
            score: cfg.empty_candidate_score,
            empty_candidate_fallback: true,
        },
        _ => DataflowMatch {
            score: cand.intersection_size(&refs) as f64 / cand.len() as f64,
            empty_candidate_fallback: false,
        },
    }
}

pub fn extract_dataflow(tree: &SyntaxTree) -> DataflowGraph {
    let mut ex = Extractor::default();
    let mut top_level = Scope::default();
    let mut has_top_level = false;

    for child in &tree.root.children {
        match child.label {
            Label::PackageDecl | Label::ImportDecl => {}
            Label::ClassDecl
            | Label::InterfaceDecl
            | Label::EnumDecl
            | Label::MethodDecl
            | Label::ConstructorDecl
            | Label::FieldDecl => ex.declaration(child),
            _ => {
                has_top_level = true;
                std::mem::swap(&mut ex.scope, &mut top_level);
                ex.visit(child, &mut Sink::None);
                std::mem::swap(&mut ex.scope, &mut top_level);
            }
        }
    }
    if has_top_level {
        ex.var_count += top_level.next as usize;
    }

    DataflowGraph {
        edges: ex.edges,
        var_count: ex.var_count,
    }
}

#[derive(Default)]
struct Scope {
    ids: HashMap<String, u32>,
    next: u32,
}

impl Scope {
    fn resolve(&self, name: &str) -> VarRef {
        self.ids
            .get(name)
            .map_or(VarRef::External, |&k| VarRef::Local(k))
    }

    fn define(&mut self, name: &str) -> VarRef {
        let next = &mut self.next;
        let k = *self.ids.entry(name.to_string()).or_insert_with(|| {
            let k = *next;
            *next += 1;
            k
        });
        VarRef::Local(k)
    }
}

/// Where reads of the expression being scanned go.
enum Sink {
    /// Plain use: `ComesFrom` self-edge.
    None,
    /// Right-hand side of a definition: collected, then linked.
    Collect(Vec<VarRef>),
}

#[derive(Default)]
struct Extractor {
    scope: Scope,
    edges: Multiset<Edge>,
    var_count: usize,
}

fn name_of(node: &TreeNode) -> Option<&str> {
    (node.label == Label::Name)
        .then_some(node.leaf_text.as_deref())
        .flatten()
}

impl Extractor {
    /// Type members get their own scope; field initializers are ignored.
    fn declaration(&mut self, node: &TreeNode) {
        match node.label {
            Label::ClassDecl | Label::InterfaceDecl | Label::EnumDecl => {
                for part in &node.children {
                    if part.label == Label::Block {
                        self.class_body(part);
                    }
                }
            }
            Label::MethodDecl | Label::ConstructorDecl | Label::Initializer => {
                let saved = std::mem::take(&mut self.scope);
                for part in &node.children {
                    if part.label == Label::Block {
                        self.visit(part, &mut Sink::None);
                    }
                }
                self.var_count += self.scope.next as usize;
                self.scope = saved;
            }
            _ => {}
        }
    }

    fn class_body(&mut self, body: &TreeNode) {
        for member in &body.children {
            match member.label {
                Label::EnumConstant => {
                    if let Some(b) = member.child(Label::Block) {
                        self.class_body(b);
                    }
                }
                _ => self.declaration(member),
            }
        }
    }

    fn read(&mut self, var: VarRef, sink: &mut Sink) {
        match sink {
            Sink::None => self.edges.insert(Edge {
                def_var: var,
                use_var: var,
                relation: Relation::ComesFrom,
            }),
            Sink::Collect(reads) => reads.push(var),
        }
    }

    fn link(&mut self, reads: Vec<VarRef>, target: VarRef) {
        for var in reads {
            self.edges.insert(Edge {
                def_var: var,
                use_var: target,
                relation: Relation::ComputedFrom,
            });
        }
    }

    /// Scan `rhs` for reads, then define `name` and link the reads to it.
    fn define_from(&mut self, name: &str, rhs: &[&TreeNode], extra_reads: Vec<VarRef>) -> VarRef {
        let mut sink = Sink::Collect(extra_reads);
        for node in rhs {
            self.visit(node, &mut sink);
        }
        let target = self.scope.define(name);
        if let Sink::Collect(reads) = sink {
            self.link(reads, target);
        }
        target
    }

    fn define_param(&mut self, param: &TreeNode) {
        if let Some(name) = param.children.iter().rev().find_map(name_of) {
            self.scope.define(name);
        }
    }

    fn visit(&mut self, node: &TreeNode, sink: &mut Sink) {
        match node.label {
            Label::Name => {
                if let Some(name) = node.leaf_text.as_deref() {
                    let var = self.scope.resolve(name);
                    self.read(var, sink);
                }
            }

            Label::LocalVarDecl => {
                for decl in node
                    .children
                    .iter()
                    .filter(|c| c.label == Label::VarDeclarator)
                {
                    let Some(name) = decl.children.first().and_then(name_of) else {
                        continue;
                    };
                    let rhs: Vec<&TreeNode> = decl
                        .children
                        .iter()
                        .skip(1)
                        .filter(|c| c.label != Label::Dim)
                        .collect();
                    self.define_from(name, &rhs, Vec::new());
                }
            }

            Label::Assignment => {
                let [lhs, op, rhs] = node.children.as_slice() else {
                    return;
                };
                if let Some(name) = name_of(lhs) {
                    let compound = op.leaf_text.as_deref() != Some("=");
                    let self_read = if compound {
                        vec![self.scope.resolve(name)]
                    } else {
                        Vec::new()
                    };
                    let target = self.define_from(name, &[rhs], self_read);
                    // `a = (b = c)`: the outer definition reads `b`.
                    if let Sink::Collect(reads) = sink {
                        reads.push(target);
                    }
                } else {
                    self.visit(lhs, &mut Sink::None);
                    self.visit(rhs, sink);
                }
            }

            Label::CatchClause => {
                for part in &node.children {
                    if part.label == Label::Param {
                        self.define_param(part);
                    } else {
                        self.visit(part, &mut Sink::None);
                    }
                }
            }

            Label::ForEachStmt => {
                let [param, iterable, body] = node.children.as_slice() else {
                    return;
                };
                if let Some(name) = param.children.iter().rev().find_map(name_of) {
                    self.define_from(name, &[iterable], Vec::new());
                }
                self.visit(body, &mut Sink::None);
            }

            Label::Lambda => {
                for part in &node.children {
                    if part.label == Label::Params {
                        part.children.iter().for_each(|p| self.define_param(p));
                    } else {
                        self.visit(part, &mut Sink::None);
                    }
                }
            }

            Label::MethodCall => {
                let unqualified = node.children.len() == 2 && node.children[0].label == Label::Name;
                for (i, part) in node.children.iter().enumerate() {
                    let is_method_name = part.label == Label::Name && (unqualified || i > 0);
                    if is_method_name || matches!(part.label, Label::TypeArgs | Label::Keyword) {
                        continue;
                    }
                    self.visit(part, sink);
                }
            }

            Label::FieldAccess | Label::MethodRef => {
                if let Some(target) = node.children.first() {
                    self.visit(target, sink);
                }
            }

            Label::ObjectCreation => {
                for part in &node.children {
                    match part.label {
                        Label::Type | Label::TypeArgs => {}
                        Label::Block => self.class_body(part),
                        _ => self.visit(part, sink),
                    }
                }
            }

            Label::InstanceOf => {
                if let Some(expr) = node.children.first() {
                    self.visit(expr, sink);
                }
            }

            Label::ClassDecl | Label::InterfaceDecl | Label::EnumDecl => self.declaration(node),

            Label::LabeledStmt | Label::BreakStmt | Label::ContinueStmt => {
                for part in node.children.iter().filter(|c| c.label != Label::Name) {
                    self.visit(part, &mut Sink::None);
                }
            }

            Label::Type
            | Label::TypeArgs
            | Label::ClassLiteral
            | Label::Annotation
            | Label::Modifiers
            | Label::Keyword
            | Label::LiteralNode
            | Label::Operator
            | Label::Dim => {}

            _ => {
                for part in &node.children {
                    self.visit(part, sink);
                }
            }
        }
    }
}
