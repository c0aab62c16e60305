//! Recursive-descent parser for the subset of Java found in generated and
//! refactored unit tests, plus the subtree serialization used by syntax match.
//!
//! The top level of a compilation unit accepts package and import
//! declarations, type declarations, and also bare member declarations and
//! bare statements, so method excerpts and statement snippets parse without
//! an enclosing class.
//!
//! Node labels form a fixed set (see [`Label`]). Leaves carry their lexeme;
//! a handful of productions may be explicitly empty (an empty `Block`, an
//! empty `Args` list, ...).

use std::fmt::{self, Write as _};

use serde::Serialize;
use thiserror::Error;

use crate::lexer::{Token, TokenKind, TokenStream};
use crate::multiset::Multiset;

macro_rules! labels {
    ($($name:ident),* $(,)?) => {
        /// Grammar production names.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
        pub enum Label {
            $($name),*
        }

        impl Label {
            pub const ALL: &'static [Label] = &[$(Label::$name),*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(Label::$name => stringify!($name)),*
                }
            }
        }
    };
}

labels! {
    CompilationUnit, PackageDecl, ImportDecl,
    ClassDecl, InterfaceDecl, EnumDecl, EnumConstant, Extends, Implements,
    TypeParams, TypeParam, Modifiers, Annotation, ElementValuePair,
    FieldDecl, MethodDecl, ConstructorDecl, Initializer, Params, Param, Throws,
    Type, TypeArgs, Wildcard,
    Block, LocalVarDecl, VarDeclarator, ExprStmt, IfStmt, ForStmt, ForInit, ForCond,
    ForUpdate, ForEachStmt, WhileStmt, DoStmt, TryStmt, Resources, CatchClause,
    FinallyClause, ReturnStmt, ThrowStmt, BreakStmt, ContinueStmt, EmptyStmt,
    LabeledStmt, AssertStmt, SwitchStmt, SwitchCase, SyncStmt,
    Assignment, MethodCall, Args, FieldAccess, ArrayAccess, ArrayCreation, DimExpr,
    ArrayInit, ObjectCreation, Binary, Unary, Postfix, Cast, Conditional, InstanceOf,
    Lambda, MethodRef, ClassLiteral, Paren,
    Name, LiteralNode, Keyword, Operator, Modifier, Dim, Varargs,
}

impl Label {
    /// Labels that only ever appear as leaves.
    pub fn is_leaf(self) -> bool {
        matches!(
            self,
            Label::Name
                | Label::LiteralNode
                | Label::Keyword
                | Label::Operator
                | Label::Modifier
                | Label::Dim
                | Label::Varargs
        )
    }

    /// Productions that may legitimately have no children.
    pub fn allows_empty(self) -> bool {
        matches!(
            self,
            Label::CompilationUnit
                | Label::Block
                | Label::Args
                | Label::Params
                | Label::TypeArgs
                | Label::ReturnStmt
                | Label::BreakStmt
                | Label::ContinueStmt
                | Label::EmptyStmt
                | Label::ForInit
                | Label::ForCond
                | Label::ForUpdate
                | Label::ArrayInit
                | Label::Wildcard
        )
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TreeNode {
    pub label: Label,
    pub children: Vec<TreeNode>,
    /// Present iff this is a leaf.
    pub leaf_text: Option<String>,
}

impl TreeNode {
    pub fn leaf(label: Label, text: impl Into<String>) -> Self {
        Self {
            label,
            children: Vec::new(),
            leaf_text: Some(text.into()),
        }
    }

    pub fn node(label: Label, children: Vec<TreeNode>) -> Self {
        Self {
            label,
            children,
            leaf_text: None,
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.leaf_text.is_some()
    }

    pub fn count_nodes(&self) -> usize {
        1 + self
            .children
            .iter()
            .map(TreeNode::count_nodes)
            .sum::<usize>()
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> Walk<'_> {
        Walk { stack: vec![self] }
    }

    pub fn find_all(&self, label: Label) -> impl Iterator<Item = &TreeNode> {
        self.walk().filter(move |n| n.label == label)
    }

    pub fn child(&self, label: Label) -> Option<&TreeNode> {
        self.children.iter().find(|c| c.label == label)
    }

    /// S-expression rendering: `(Label child ...)`, leaves as `(Label "text")`.
    pub fn to_sexpr(&self) -> String {
        let mut out = String::new();
        self.write_sexpr(&mut out, 0);
        out
    }

    fn write_sexpr(&self, out: &mut String, depth: usize) {
        if depth > 0 {
            out.push('\n');
        }
        out.push_str(&"  ".repeat(depth));
        out.push('(');
        out.push_str(self.label.as_str());
        if let Some(text) = &self.leaf_text {
            let _ = write!(out, " {text:?}");
        }
        for child in &self.children {
            child.write_sexpr(out, depth + 1);
        }
        out.push(')');
    }

    /// Canonical serialization with identifier leaves as `ID` and literal
    /// leaves as `LIT`. Other leaves keep their text.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        self.write_canonical(&mut out);
        out
    }

    fn write_canonical(&self, out: &mut String) {
        match (&self.leaf_text, self.label) {
            (Some(_), Label::Name) => out.push_str("ID"),
            (Some(_), Label::LiteralNode) => out.push_str("LIT"),
            (Some(text), label) => {
                out.push_str(label.as_str());
                out.push(':');
                out.push_str(text);
            }
            (None, label) => {
                out.push_str(label.as_str());
                out.push('(');
                for (i, child) in self.children.iter().enumerate() {
                    if i > 0 {
                        out.push(' ');
                    }
                    child.write_canonical(out);
                }
                out.push(')');
            }
        }
    }
}

pub struct Walk<'a> {
    stack: Vec<&'a TreeNode>,
}

impl<'a> Iterator for Walk<'a> {
    type Item = &'a TreeNode;

    fn next(&mut self) -> Option<Self::Item> {
        let node = self.stack.pop()?;
        self.stack.extend(node.children.iter().rev());
        Some(node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SyntaxTree {
    pub root: TreeNode,
    pub node_count: usize,
}

impl SyntaxTree {
    pub fn new(root: TreeNode) -> Self {
        let node_count = root.count_nodes();
        Self { root, node_count }
    }

    pub fn internal_node_count(&self) -> usize {
        self.root.walk().filter(|n| !n.children.is_empty()).count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at {line}:{column} in {production}: expected {expected}, found {found}")]
pub struct ParseError {
    pub line: u32,
    pub column: u32,
    pub production: &'static str,
    pub expected: String,
    pub found: String,
}

/// Canonical serializations of every subtree rooted at a node with at
/// least one child.
pub fn subtree_multiset(tree: &SyntaxTree) -> Multiset<String> {
    let mut set = Multiset::new();
    collect_subtrees(&tree.root, &mut set);
    set
}

fn collect_subtrees(node: &TreeNode, set: &mut Multiset<String>) -> String {
    if node.children.is_empty() {
        let mut s = String::new();
        node.write_canonical(&mut s);
        return s;
    }
    let parts: Vec<String> = node
        .children
        .iter()
        .map(|c| collect_subtrees(c, set))
        .collect();
    let serialized = format!("{}({})", node.label.as_str(), parts.join(" "));
    set.insert(serialized.clone());
    serialized
}

/// Parse a token stream. Comment-word tokens are skipped.
pub fn parse(tokens: &TokenStream) -> Result<SyntaxTree, ParseError> {
    let code: Vec<&Token> = tokens.code_tokens().collect();
    let mut parser = Parser {
        toks: code,
        pos: 0,
        pending_gt: 0,
        production: "CompilationUnit",
    };
    let root = parser.compilation_unit()?;
    Ok(SyntaxTree::new(root))
}

const MODIFIER_KEYWORDS: [&str; 12] = [
    "public",
    "protected",
    "private",
    "static",
    "abstract",
    "final",
    "native",
    "synchronized",
    "transient",
    "volatile",
    "strictfp",
    "default",
];

const PRIMITIVES: [&str; 8] = [
    "boolean", "byte", "char", "short", "int", "long", "float", "double",
];

const ASSIGN_OPS: [&str; 12] = [
    "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=",
];

// Binary operator precedence, loosest first.
const BINARY_LEVELS: [&[&str]; 10] = [
    &["||"],
    &["&&"],
    &["|"],
    &["^"],
    &["&"],
    &["==", "!="],
    &["<", ">", "<=", ">=", "instanceof"],
    &["<<", ">>", ">>>"],
    &["+", "-"],
    &["*", "/", "%"],
];

type PResult<T> = Result<T, ParseError>;

struct Parser<'t> {
    toks: Vec<&'t Token>,
    pos: usize,
    // Remaining `>` characters of a split `>>` / `>>>` token.
    pending_gt: usize,
    production: &'static str,
}

impl<'t> Parser<'t> {
    // ---- token helpers ----------------------------------------------------

    fn peek_tok(&self) -> Option<&'t Token> {
        self.toks.get(self.pos).copied()
    }

    fn text_at(&self, offset: usize) -> Option<&'t str> {
        if offset == 0 && self.pending_gt > 0 {
            return Some(">");
        }
        self.toks.get(self.pos + offset).map(|t| t.text.as_str())
    }

    fn peek(&self) -> Option<&'t str> {
        self.text_at(0)
    }

    fn kind_at(&self, offset: usize) -> Option<TokenKind> {
        if offset == 0 && self.pending_gt > 0 {
            return Some(TokenKind::Operator);
        }
        self.toks.get(self.pos + offset).map(|t| t.kind)
    }

    fn is(&self, text: &str) -> bool {
        self.peek() == Some(text)
    }

    fn is_at(&self, offset: usize, text: &str) -> bool {
        self.text_at(offset) == Some(text)
    }

    fn is_ident(&self) -> bool {
        self.kind_at(0) == Some(TokenKind::Identifier)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn advance(&mut self) -> Option<&'t Token> {
        let tok = self.peek_tok()?;
        if self.pending_gt > 0 {
            self.pending_gt -= 1;
            if self.pending_gt == 0 {
                self.pos += 1;
            }
        } else {
            self.pos += 1;
        }
        Some(tok)
    }

    fn eat(&mut self, text: &str) -> bool {
        if self.is(text) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let (line, column, found) = match self.peek_tok() {
            Some(t) => (t.line, t.column, format!("{:?}", t.text)),
            None => {
                let (line, column) = self
                    .toks
                    .last()
                    .map(|t| (t.line, t.column + t.text.chars().count() as u32))
                    .unwrap_or((1, 1));
                (line, column, String::from("end of input"))
            }
        };
        ParseError {
            line,
            column,
            production: self.production,
            expected: expected.into(),
            found,
        }
    }

    fn expect(&mut self, text: &str) -> PResult<()> {
        if self.eat(text) {
            Ok(())
        } else {
            Err(self.error(format!("{text:?}")))
        }
    }

    fn expect_ident(&mut self) -> PResult<TreeNode> {
        if self.pending_gt == 0 && self.is_ident() {
            let tok = self.advance().expect("peeked");
            Ok(TreeNode::leaf(Label::Name, tok.text.clone()))
        } else {
            Err(self.error("identifier"))
        }
    }

    /// Consume one `>` closing a type argument list, splitting `>>`/`>>>`.
    fn expect_close_angle(&mut self) -> PResult<()> {
        if self.pending_gt > 0 {
            self.advance();
            return Ok(());
        }
        match self.peek() {
            Some(">") => {
                self.pos += 1;
                Ok(())
            }
            Some(">>") => {
                self.pending_gt = 1;
                Ok(())
            }
            Some(">>>") => {
                self.pending_gt = 2;
                Ok(())
            }
            _ => Err(self.error("\">\"")),
        }
    }

    fn enter(&mut self, production: &'static str) -> &'static str {
        std::mem::replace(&mut self.production, production)
    }

    /// Run `f` and rewind afterwards; reports whether it succeeded.
    fn lookahead<F>(&mut self, f: F) -> bool
    where
        F: FnOnce(&mut Self) -> PResult<bool>,
    {
        let (pos, gt, prod) = (self.pos, self.pending_gt, self.production);
        let ok = matches!(f(self), Ok(true));
        self.pos = pos;
        self.pending_gt = gt;
        self.production = prod;
        ok
    }

    // ---- declarations -----------------------------------------------------

    fn compilation_unit(&mut self) -> PResult<TreeNode> {
        let mut children = Vec::new();

        if self.lookahead(|p| {
            p.annotations_and_modifiers()?;
            Ok(p.is("package"))
        }) {
            self.enter("PackageDecl");
            let mods = self.annotations_and_modifiers()?;
            self.expect("package")?;
            let mut parts = Vec::new();
            if let Some(m) = mods {
                parts.push(m);
            }
            parts.extend(self.qualified_name()?);
            self.expect(";")?;
            children.push(TreeNode::node(Label::PackageDecl, parts));
        }

        while self.is("import") {
            self.enter("ImportDecl");
            self.advance();
            let mut parts = Vec::new();
            if self.eat("static") {
                parts.push(TreeNode::leaf(Label::Modifier, "static"));
            }
            parts.push(self.expect_ident()?);
            while self.eat(".") {
                if self.eat("*") {
                    parts.push(TreeNode::leaf(Label::Operator, "*"));
                    break;
                }
                parts.push(self.expect_ident()?);
            }
            self.expect(";")?;
            children.push(TreeNode::node(Label::ImportDecl, parts));
        }

        while !self.at_end() {
            self.enter("CompilationUnit");
            if self.eat(";") {
                continue;
            }
            children.push(self.top_level_item()?);
        }

        Ok(TreeNode::node(Label::CompilationUnit, children))
    }

    fn top_level_item(&mut self) -> PResult<TreeNode> {
        let has_modifiers = self.lookahead(|p| Ok(p.annotations_and_modifiers()?.is_some()));
        let type_decl = self.lookahead(|p| {
            p.annotations_and_modifiers()?;
            Ok(matches!(p.peek(), Some("class" | "interface" | "enum")))
        });
        if type_decl {
            let mods = self.annotations_and_modifiers()?;
            return self.type_declaration(mods);
        }
        let method = self.lookahead(|p| {
            p.annotations_and_modifiers()?;
            if p.is("<") {
                return Ok(true);
            }
            p.parse_type()?;
            p.expect_ident()?;
            Ok(p.is("("))
        });
        if method || has_modifiers {
            let mods = self.annotations_and_modifiers()?;
            return self.member_after_modifiers(mods, None);
        }
        self.block_statement()
    }

    /// Parses annotations and modifier keywords; `None` when there are none.
    fn annotations_and_modifiers(&mut self) -> PResult<Option<TreeNode>> {
        let mut items = Vec::new();
        loop {
            if self.is("@") && !self.is_at(1, "interface") {
                items.push(self.annotation()?);
            } else if let Some(word) = self.peek().filter(|w| MODIFIER_KEYWORDS.contains(w)) {
                // `default:` in a switch is a label, not a modifier.
                if word == "default" && self.is_at(1, ":") {
                    break;
                }
                self.advance();
                items.push(TreeNode::leaf(Label::Modifier, word));
            } else {
                break;
            }
        }
        Ok((!items.is_empty()).then(|| TreeNode::node(Label::Modifiers, items)))
    }

    fn annotation(&mut self) -> PResult<TreeNode> {
        let prev = self.enter("Annotation");
        self.expect("@")?;
        let mut children = self.qualified_name()?;
        if self.eat("(") {
            if !self.is(")") {
                let is_pairs = self.is_ident() && self.is_at(1, "=");
                if is_pairs {
                    loop {
                        let name = self.expect_ident()?;
                        self.expect("=")?;
                        let value = self.element_value()?;
                        children.push(TreeNode::node(Label::ElementValuePair, vec![name, value]));
                        if !self.eat(",") {
                            break;
                        }
                    }
                } else {
                    children.push(self.element_value()?);
                }
            }
            self.expect(")")?;
        }
        self.production = prev;
        Ok(TreeNode::node(Label::Annotation, children))
    }

    fn element_value(&mut self) -> PResult<TreeNode> {
        if self.is("@") {
            self.annotation()
        } else if self.is("{") {
            self.array_init_with(Self::element_value)
        } else {
            self.conditional_expr()
        }
    }

    fn qualified_name(&mut self) -> PResult<Vec<TreeNode>> {
        let mut parts = vec![self.expect_ident()?];
        while self.is(".") && self.kind_at(1) == Some(TokenKind::Identifier) {
            self.advance();
            parts.push(self.expect_ident()?);
        }
        Ok(parts)
    }

    fn type_declaration(&mut self, mods: Option<TreeNode>) -> PResult<TreeNode> {
        let keyword = self.peek().unwrap_or_default();
        let (label, production) = match keyword {
            "class" => (Label::ClassDecl, "ClassDecl"),
            "interface" => (Label::InterfaceDecl, "InterfaceDecl"),
            "enum" => (Label::EnumDecl, "EnumDecl"),
            _ => return Err(self.error("class, interface or enum")),
        };
        let prev = self.enter(production);
        self.advance();
        let mut children: Vec<TreeNode> = mods.into_iter().collect();
        children.push(self.expect_ident()?);
        if self.is("<") {
            children.push(self.type_params()?);
        }
        if self.eat("extends") {
            let mut types = vec![self.parse_type()?];
            while self.eat(",") {
                types.push(self.parse_type()?);
            }
            children.push(TreeNode::node(Label::Extends, types));
        }
        if self.eat("implements") {
            let mut types = vec![self.parse_type()?];
            while self.eat(",") {
                types.push(self.parse_type()?);
            }
            children.push(TreeNode::node(Label::Implements, types));
        }
        let class_name = children
            .iter()
            .find(|c| c.label == Label::Name)
            .and_then(|c| c.leaf_text.clone());
        children.push(self.class_body(class_name.as_deref(), label == Label::EnumDecl)?);
        self.production = prev;
        Ok(TreeNode::node(label, children))
    }

    fn type_params(&mut self) -> PResult<TreeNode> {
        self.expect("<")?;
        let mut params = Vec::new();
        loop {
            let mut parts = Vec::new();
            if let Some(m) = self.annotations_and_modifiers()? {
                parts.push(m);
            }
            parts.push(self.expect_ident()?);
            if self.eat("extends") {
                parts.push(self.parse_type()?);
                while self.eat("&") {
                    parts.push(self.parse_type()?);
                }
            }
            params.push(TreeNode::node(Label::TypeParam, parts));
            if !self.eat(",") {
                break;
            }
        }
        self.expect_close_angle()?;
        Ok(TreeNode::node(Label::TypeParams, params))
    }

    fn class_body(&mut self, class_name: Option<&str>, is_enum: bool) -> PResult<TreeNode> {
        self.expect("{")?;
        let mut members = Vec::new();
        if is_enum {
            while !self.is(";") && !self.is("}") {
                let prev = self.enter("EnumConstant");
                let mut parts: Vec<TreeNode> =
                    self.annotations_and_modifiers()?.into_iter().collect();
                parts.push(self.expect_ident()?);
                if self.is("(") {
                    parts.push(self.arguments()?);
                }
                if self.is("{") {
                    parts.push(self.class_body(None, false)?);
                }
                members.push(TreeNode::node(Label::EnumConstant, parts));
                self.production = prev;
                if !self.eat(",") {
                    break;
                }
            }
            self.eat(";");
        }
        while !self.eat("}") {
            if self.at_end() {
                return Err(self.error("\"}\""));
            }
            if self.eat(";") {
                continue;
            }
            members.push(self.member(class_name)?);
        }
        Ok(TreeNode::node(Label::Block, members))
    }

    fn member(&mut self, class_name: Option<&str>) -> PResult<TreeNode> {
        if self.is("{") || (self.is("static") && self.is_at(1, "{")) {
            let mut parts = Vec::new();
            if self.eat("static") {
                parts.push(TreeNode::node(
                    Label::Modifiers,
                    vec![TreeNode::leaf(Label::Modifier, "static")],
                ));
            }
            parts.push(self.block()?);
            return Ok(TreeNode::node(Label::Initializer, parts));
        }
        let mods = self.annotations_and_modifiers()?;
        if matches!(self.peek(), Some("class" | "interface" | "enum")) {
            return self.type_declaration(mods);
        }
        self.member_after_modifiers(mods, class_name)
    }

    fn member_after_modifiers(
        &mut self,
        mods: Option<TreeNode>,
        class_name: Option<&str>,
    ) -> PResult<TreeNode> {
        let prev = self.enter("MemberDecl");
        let mut children: Vec<TreeNode> = mods.into_iter().collect();
        if self.is("<") {
            children.push(self.type_params()?);
        }

        // Constructor: the class name directly followed by `(`.
        let is_ctor = self.is_ident()
            && self.is_at(1, "(")
            && (class_name.is_none() || self.peek() == class_name);
        if is_ctor {
            self.production = "ConstructorDecl";
            children.push(self.expect_ident()?);
            children.push(self.formal_params()?);
            if let Some(t) = self.throws_clause()? {
                children.push(t);
            }
            children.push(self.block()?);
            self.production = prev;
            return Ok(TreeNode::node(Label::ConstructorDecl, children));
        }

        let ty = self.parse_type()?;
        let name = self.expect_ident()?;
        if self.is("(") {
            self.production = "MethodDecl";
            children.push(ty);
            children.push(name);
            children.push(self.formal_params()?);
            while self.is("[") && self.is_at(1, "]") {
                self.advance();
                self.advance();
                children.push(TreeNode::leaf(Label::Dim, "[]"));
            }
            if let Some(t) = self.throws_clause()? {
                children.push(t);
            }
            if self.eat("default") {
                children.push(self.element_value()?);
                self.expect(";")?;
            } else if !self.eat(";") {
                children.push(self.block()?);
            }
            self.production = prev;
            return Ok(TreeNode::node(Label::MethodDecl, children));
        }

        self.production = "FieldDecl";
        children.push(ty);
        children.extend(self.declarators_after_first(name)?);
        self.expect(";")?;
        self.production = prev;
        Ok(TreeNode::node(Label::FieldDecl, children))
    }

    fn throws_clause(&mut self) -> PResult<Option<TreeNode>> {
        if !self.eat("throws") {
            return Ok(None);
        }
        let mut types = vec![self.parse_type()?];
        while self.eat(",") {
            types.push(self.parse_type()?);
        }
        Ok(Some(TreeNode::node(Label::Throws, types)))
    }

    fn formal_params(&mut self) -> PResult<TreeNode> {
        let prev = self.enter("Params");
        self.expect("(")?;
        let mut params = Vec::new();
        if !self.is(")") {
            loop {
                params.push(self.formal_param()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        self.production = prev;
        Ok(TreeNode::node(Label::Params, params))
    }

    fn formal_param(&mut self) -> PResult<TreeNode> {
        let mut parts: Vec<TreeNode> = self.annotations_and_modifiers()?.into_iter().collect();
        let mut ty = self.parse_type()?;
        if self.eat("...") {
            ty.children.push(TreeNode::leaf(Label::Varargs, "..."));
        }
        parts.push(ty);
        parts.push(self.expect_ident()?);
        while self.is("[") && self.is_at(1, "]") {
            self.advance();
            self.advance();
            parts.push(TreeNode::leaf(Label::Dim, "[]"));
        }
        Ok(TreeNode::node(Label::Param, parts))
    }

    fn declarators_after_first(&mut self, first_name: TreeNode) -> PResult<Vec<TreeNode>> {
        let mut decls = vec![self.declarator_rest(first_name)?];
        while self.eat(",") {
            let name = self.expect_ident()?;
            decls.push(self.declarator_rest(name)?);
        }
        Ok(decls)
    }

    fn declarator_rest(&mut self, name: TreeNode) -> PResult<TreeNode> {
        let mut parts = vec![name];
        while self.is("[") && self.is_at(1, "]") {
            self.advance();
            self.advance();
            parts.push(TreeNode::leaf(Label::Dim, "[]"));
        }
        if self.eat("=") {
            if self.is("{") {
                parts.push(self.array_init_with(Self::var_initializer)?);
            } else {
                parts.push(self.expression()?);
            }
        }
        Ok(TreeNode::node(Label::VarDeclarator, parts))
    }

    fn var_initializer(&mut self) -> PResult<TreeNode> {
        if self.is("{") {
            self.array_init_with(Self::var_initializer)
        } else {
            self.expression()
        }
    }

    fn array_init_with(
        &mut self,
        mut item: impl FnMut(&mut Self) -> PResult<TreeNode>,
    ) -> PResult<TreeNode> {
        let prev = self.enter("ArrayInit");
        self.expect("{")?;
        let mut items = Vec::new();
        while !self.is("}") {
            items.push(item(self)?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        self.production = prev;
        Ok(TreeNode::node(Label::ArrayInit, items))
    }

    // ---- types ------------------------------------------------------------

    /// A type with optional array dimensions.
    fn parse_type(&mut self) -> PResult<TreeNode> {
        let mut ty = self.parse_type_no_dims()?;
        while self.is("[") && self.is_at(1, "]") {
            self.advance();
            self.advance();
            ty.children.push(TreeNode::leaf(Label::Dim, "[]"));
        }
        Ok(ty)
    }

    fn parse_type_no_dims(&mut self) -> PResult<TreeNode> {
        let prev = self.enter("Type");
        let mut parts = Vec::new();
        while self.is("@") {
            parts.push(self.annotation()?);
        }
        match self.peek() {
            Some(word) if PRIMITIVES.contains(&word) || word == "void" => {
                self.advance();
                parts.push(TreeNode::leaf(Label::Keyword, word));
            }
            _ => {
                parts.push(self.expect_ident()?);
                if self.is("<") {
                    parts.push(self.type_args()?);
                }
                while self.is(".") && self.kind_at(1) == Some(TokenKind::Identifier) {
                    self.advance();
                    parts.push(self.expect_ident()?);
                    if self.is("<") {
                        parts.push(self.type_args()?);
                    }
                }
            }
        }
        self.production = prev;
        Ok(TreeNode::node(Label::Type, parts))
    }

    fn type_args(&mut self) -> PResult<TreeNode> {
        self.expect("<")?;
        let mut args = Vec::new();
        if self.pending_gt == 0 && self.is(">") {
            self.expect_close_angle()?;
            return Ok(TreeNode::node(Label::TypeArgs, args));
        }
        loop {
            if self.eat("?") {
                let mut parts = Vec::new();
                if let Some(bound) = self.peek().filter(|w| *w == "extends" || *w == "super") {
                    self.advance();
                    parts.push(TreeNode::leaf(Label::Keyword, bound));
                    parts.push(self.parse_type()?);
                }
                args.push(TreeNode::node(Label::Wildcard, parts));
            } else {
                args.push(self.parse_type()?);
            }
            if !self.eat(",") {
                break;
            }
        }
        self.expect_close_angle()?;
        Ok(TreeNode::node(Label::TypeArgs, args))
    }

    // ---- statements -------------------------------------------------------

    fn block(&mut self) -> PResult<TreeNode> {
        let prev = self.enter("Block");
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.eat("}") {
            if self.at_end() {
                return Err(self.error("\"}\""));
            }
            stmts.push(self.block_statement()?);
        }
        self.production = prev;
        Ok(TreeNode::node(Label::Block, stmts))
    }

    fn is_local_var_decl(&mut self) -> bool {
        self.lookahead(|p| {
            if p.annotations_and_modifiers()?.is_some() {
                return Ok(!matches!(p.peek(), Some("class" | "interface" | "enum")));
            }
            p.parse_type()?;
            if !p.is_ident() {
                return Ok(false);
            }
            p.advance();
            Ok(matches!(p.peek(), Some("=" | ";" | "," | "[" | ":")))
        })
    }

    fn block_statement(&mut self) -> PResult<TreeNode> {
        if self.peek() == Some("synchronized") && self.is_at(1, "(") {
            return self.statement();
        }
        let local_type = self.lookahead(|p| {
            p.annotations_and_modifiers()?;
            Ok(matches!(p.peek(), Some("class" | "interface" | "enum")))
        });
        if local_type {
            let mods = self.annotations_and_modifiers()?;
            return self.type_declaration(mods);
        }
        if self.is_local_var_decl() {
            let decl = self.local_var_decl()?;
            self.expect(";")?;
            return Ok(decl);
        }
        self.statement()
    }

    fn local_var_decl(&mut self) -> PResult<TreeNode> {
        let prev = self.enter("LocalVarDecl");
        let mut children: Vec<TreeNode> = self.annotations_and_modifiers()?.into_iter().collect();
        children.push(self.parse_type()?);
        let name = self.expect_ident()?;
        children.extend(self.declarators_after_first(name)?);
        self.production = prev;
        Ok(TreeNode::node(Label::LocalVarDecl, children))
    }

    fn paren_expr(&mut self) -> PResult<TreeNode> {
        self.expect("(")?;
        let expr = self.expression()?;
        self.expect(")")?;
        Ok(expr)
    }

    fn statement(&mut self) -> PResult<TreeNode> {
        let word = match self.peek() {
            Some(w) => w,
            None => return Err(self.error("statement")),
        };
        let prev = self.production;
        let node = match word {
            "{" => self.block()?,
            ";" => {
                self.advance();
                TreeNode::node(Label::EmptyStmt, Vec::new())
            }
            "if" => {
                self.enter("IfStmt");
                self.advance();
                let mut parts = vec![self.paren_expr()?, self.statement()?];
                if self.eat("else") {
                    parts.push(self.statement()?);
                }
                TreeNode::node(Label::IfStmt, parts)
            }
            "while" => {
                self.enter("WhileStmt");
                self.advance();
                let cond = self.paren_expr()?;
                let body = self.statement()?;
                TreeNode::node(Label::WhileStmt, vec![cond, body])
            }
            "do" => {
                self.enter("DoStmt");
                self.advance();
                let body = self.statement()?;
                self.expect("while")?;
                let cond = self.paren_expr()?;
                self.expect(";")?;
                TreeNode::node(Label::DoStmt, vec![body, cond])
            }
            "for" => self.for_statement()?,
            "try" => self.try_statement()?,
            "switch" => self.switch_statement()?,
            "return" => {
                self.enter("ReturnStmt");
                self.advance();
                let mut parts = Vec::new();
                if !self.is(";") {
                    parts.push(self.expression()?);
                }
                self.expect(";")?;
                TreeNode::node(Label::ReturnStmt, parts)
            }
            "throw" => {
                self.enter("ThrowStmt");
                self.advance();
                let expr = self.expression()?;
                self.expect(";")?;
                TreeNode::node(Label::ThrowStmt, vec![expr])
            }
            "break" | "continue" => {
                let label = if word == "break" {
                    Label::BreakStmt
                } else {
                    Label::ContinueStmt
                };
                self.enter(label.as_str());
                self.advance();
                let mut parts = Vec::new();
                if self.is_ident() {
                    parts.push(self.expect_ident()?);
                }
                self.expect(";")?;
                TreeNode::node(label, parts)
            }
            "assert" => {
                self.enter("AssertStmt");
                self.advance();
                let mut parts = vec![self.expression()?];
                if self.eat(":") {
                    parts.push(self.expression()?);
                }
                self.expect(";")?;
                TreeNode::node(Label::AssertStmt, parts)
            }
            "synchronized" => {
                self.enter("SyncStmt");
                self.advance();
                let lock = self.paren_expr()?;
                let body = self.block()?;
                TreeNode::node(Label::SyncStmt, vec![lock, body])
            }
            _ if self.is_ident() && self.is_at(1, ":") && !self.is_at(1, "::") => {
                self.enter("LabeledStmt");
                let name = self.expect_ident()?;
                self.advance();
                let body = self.statement()?;
                TreeNode::node(Label::LabeledStmt, vec![name, body])
            }
            _ => {
                self.enter("ExprStmt");
                let expr = self.expression()?;
                self.expect(";")?;
                TreeNode::node(Label::ExprStmt, vec![expr])
            }
        };
        self.production = prev;
        Ok(node)
    }

    fn for_statement(&mut self) -> PResult<TreeNode> {
        self.enter("ForStmt");
        self.expect("for")?;
        self.expect("(")?;

        let for_each = self.lookahead(|p| {
            p.annotations_and_modifiers()?;
            p.parse_type()?;
            p.expect_ident()?;
            Ok(p.is(":"))
        });
        if for_each {
            let mut parts: Vec<TreeNode> = self.annotations_and_modifiers()?.into_iter().collect();
            parts.push(self.parse_type()?);
            parts.push(self.expect_ident()?);
            self.expect(":")?;
            let param = TreeNode::node(Label::Param, parts);
            let iterable = self.expression()?;
            self.expect(")")?;
            let body = self.statement()?;
            return Ok(TreeNode::node(
                Label::ForEachStmt,
                vec![param, iterable, body],
            ));
        }

        let mut init = Vec::new();
        if !self.is(";") {
            if self.is_local_var_decl() {
                init.push(self.local_var_decl()?);
            } else {
                init.push(self.expression()?);
                while self.eat(",") {
                    init.push(self.expression()?);
                }
            }
        }
        self.expect(";")?;
        let mut cond = Vec::new();
        if !self.is(";") {
            cond.push(self.expression()?);
        }
        self.expect(";")?;
        let mut update = Vec::new();
        if !self.is(")") {
            update.push(self.expression()?);
            while self.eat(",") {
                update.push(self.expression()?);
            }
        }
        self.expect(")")?;
        let body = self.statement()?;
        Ok(TreeNode::node(
            Label::ForStmt,
            vec![
                TreeNode::node(Label::ForInit, init),
                TreeNode::node(Label::ForCond, cond),
                TreeNode::node(Label::ForUpdate, update),
                body,
            ],
        ))
    }

    fn try_statement(&mut self) -> PResult<TreeNode> {
        self.enter("TryStmt");
        self.expect("try")?;
        let mut parts = Vec::new();
        if self.eat("(") {
            let mut resources = Vec::new();
            while !self.is(")") {
                if self.is_local_var_decl() {
                    resources.push(self.local_var_decl()?);
                } else {
                    resources.push(self.expression()?);
                }
                if !self.eat(";") {
                    break;
                }
            }
            self.expect(")")?;
            parts.push(TreeNode::node(Label::Resources, resources));
        }
        parts.push(self.block()?);
        while self.is("catch") {
            self.enter("CatchClause");
            self.advance();
            self.expect("(")?;
            let mut param: Vec<TreeNode> = self.annotations_and_modifiers()?.into_iter().collect();
            param.push(self.parse_type()?);
            while self.eat("|") {
                param.push(self.parse_type()?);
            }
            param.push(self.expect_ident()?);
            self.expect(")")?;
            let body = self.block()?;
            parts.push(TreeNode::node(
                Label::CatchClause,
                vec![TreeNode::node(Label::Param, param), body],
            ));
        }
        if self.eat("finally") {
            parts.push(TreeNode::node(Label::FinallyClause, vec![self.block()?]));
        }
        self.production = "TryStmt";
        let has_handler = parts.iter().any(|p| {
            matches!(
                p.label,
                Label::CatchClause | Label::FinallyClause | Label::Resources
            )
        });
        if !has_handler {
            return Err(self.error("\"catch\" or \"finally\""));
        }
        Ok(TreeNode::node(Label::TryStmt, parts))
    }

    fn switch_statement(&mut self) -> PResult<TreeNode> {
        self.enter("SwitchStmt");
        self.expect("switch")?;
        let mut parts = vec![self.paren_expr()?];
        self.expect("{")?;
        while !self.eat("}") {
            let mut case = Vec::new();
            if self.eat("default") {
                case.push(TreeNode::leaf(Label::Keyword, "default"));
            } else {
                self.expect("case")?;
                case.push(self.conditional_expr()?);
                while self.eat(",") {
                    case.push(self.conditional_expr()?);
                }
            }
            self.expect(":")?;
            while !matches!(self.peek(), Some("case" | "default" | "}") | None) {
                case.push(self.block_statement()?);
            }
            parts.push(TreeNode::node(Label::SwitchCase, case));
        }
        Ok(TreeNode::node(Label::SwitchStmt, parts))
    }

    // ---- expressions ------------------------------------------------------

    fn expression(&mut self) -> PResult<TreeNode> {
        let prev = self.enter("Expression");
        let result = self.assignment_expr();
        if result.is_ok() {
            self.production = prev;
        }
        result
    }

    fn assignment_expr(&mut self) -> PResult<TreeNode> {
        if let Some(lambda) = self.try_lambda()? {
            return Ok(lambda);
        }
        let lhs = self.conditional_expr()?;
        if let Some(op) = self.peek().filter(|op| ASSIGN_OPS.contains(op)) {
            if self.pending_gt == 0 {
                self.advance();
                let rhs = self.assignment_expr()?;
                return Ok(TreeNode::node(
                    Label::Assignment,
                    vec![lhs, TreeNode::leaf(Label::Operator, op), rhs],
                ));
            }
        }
        Ok(lhs)
    }

    fn try_lambda(&mut self) -> PResult<Option<TreeNode>> {
        let params = if self.is_ident() && self.is_at(1, "->") {
            let name = self.expect_ident()?;
            TreeNode::node(
                Label::Params,
                vec![TreeNode::node(Label::Param, vec![name])],
            )
        } else if self.is("(") && self.lambda_parens_ahead() {
            self.advance();
            let mut params = Vec::new();
            while !self.is(")") {
                if self.is_ident() && (self.is_at(1, ",") || self.is_at(1, ")")) {
                    let name = self.expect_ident()?;
                    params.push(TreeNode::node(Label::Param, vec![name]));
                } else {
                    params.push(self.formal_param()?);
                }
                if !self.eat(",") {
                    break;
                }
            }
            self.expect(")")?;
            TreeNode::node(Label::Params, params)
        } else {
            return Ok(None);
        };
        self.expect("->")?;
        let body = if self.is("{") {
            self.block()?
        } else {
            self.expression()?
        };
        Ok(Some(TreeNode::node(Label::Lambda, vec![params, body])))
    }

    fn lambda_parens_ahead(&self) -> bool {
        let mut depth = 0usize;
        let mut i = self.pos;
        while let Some(tok) = self.toks.get(i) {
            match tok.text.as_str() {
                "(" => depth += 1,
                ")" => {
                    depth -= 1;
                    if depth == 0 {
                        return self.toks.get(i + 1).is_some_and(|t| t.text == "->");
                    }
                }
                ";" | "{" | "}" => return false,
                _ => {}
            }
            i += 1;
        }
        false
    }

    fn conditional_expr(&mut self) -> PResult<TreeNode> {
        let cond = self.binary_expr(0)?;
        if self.eat("?") {
            let then = self.assignment_expr()?;
            self.expect(":")?;
            let otherwise = self.assignment_expr()?;
            return Ok(TreeNode::node(
                Label::Conditional,
                vec![cond, then, otherwise],
            ));
        }
        Ok(cond)
    }

    fn binary_expr(&mut self, level: usize) -> PResult<TreeNode> {
        if level == BINARY_LEVELS.len() {
            return self.unary_expr();
        }
        let mut lhs = self.binary_expr(level + 1)?;
        while let Some(op) = self.peek().filter(|op| BINARY_LEVELS[level].contains(op)) {
            if self.pending_gt > 0 {
                break;
            }
            self.advance();
            if op == "instanceof" {
                let mut parts = vec![lhs, self.parse_type()?];
                if self.is_ident() {
                    parts.push(self.expect_ident()?);
                }
                lhs = TreeNode::node(Label::InstanceOf, parts);
            } else {
                let rhs = self.binary_expr(level + 1)?;
                lhs = TreeNode::node(
                    Label::Binary,
                    vec![lhs, TreeNode::leaf(Label::Operator, op), rhs],
                );
            }
        }
        Ok(lhs)
    }

    fn unary_expr(&mut self) -> PResult<TreeNode> {
        if let Some(op) = self
            .peek()
            .filter(|op| matches!(*op, "+" | "-" | "!" | "~" | "++" | "--"))
        {
            if self.kind_at(0) == Some(TokenKind::Operator) {
                self.advance();
                let operand = self.unary_expr()?;
                return Ok(TreeNode::node(
                    Label::Unary,
                    vec![TreeNode::leaf(Label::Operator, op), operand],
                ));
            }
        }
        if self.is("(") {
            if let Some(cast) = self.try_cast()? {
                return Ok(cast);
            }
        }
        let mut expr = self.postfix_expr()?;
        while let Some(op) = self.peek().filter(|op| *op == "++" || *op == "--") {
            self.advance();
            expr = TreeNode::node(
                Label::Postfix,
                vec![expr, TreeNode::leaf(Label::Operator, op)],
            );
        }
        Ok(expr)
    }

    fn try_cast(&mut self) -> PResult<Option<TreeNode>> {
        let primitive = self.text_at(1).is_some_and(|w| PRIMITIVES.contains(&w));
        let is_cast = self.lookahead(|p| {
            p.advance();
            p.parse_type()?;
            while p.eat("&") {
                p.parse_type()?;
            }
            if !p.eat(")") {
                return Ok(false);
            }
            if primitive {
                return Ok(true);
            }
            let starts_operand = match p.kind_at(0) {
                Some(TokenKind::Identifier | TokenKind::Literal) => true,
                Some(TokenKind::Keyword) => {
                    matches!(
                        p.peek(),
                        Some("this" | "super" | "new" | "true" | "false" | "null")
                    ) || p.peek().is_some_and(|w| PRIMITIVES.contains(&w))
                }
                _ => matches!(p.peek(), Some("(" | "!" | "~")),
            };
            Ok(starts_operand)
        });
        if !is_cast {
            return Ok(None);
        }
        let prev = self.enter("Cast");
        self.expect("(")?;
        let mut parts = vec![self.parse_type()?];
        while self.eat("&") {
            parts.push(self.parse_type()?);
        }
        self.expect(")")?;
        parts.push(self.unary_expr()?);
        self.production = prev;
        Ok(Some(TreeNode::node(Label::Cast, parts)))
    }

    fn arguments(&mut self) -> PResult<TreeNode> {
        let prev = self.enter("Args");
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.is(")") {
            loop {
                args.push(self.expression()?);
                if !self.eat(",") {
                    break;
                }
            }
        }
        self.expect(")")?;
        self.production = prev;
        Ok(TreeNode::node(Label::Args, args))
    }

    fn postfix_expr(&mut self) -> PResult<TreeNode> {
        let mut expr = self.primary()?;
        loop {
            if self.is(".") {
                self.advance();
                if self.eat("class") {
                    expr = TreeNode::node(Label::ClassLiteral, vec![expr]);
                    continue;
                }
                if self.is("new") {
                    let creation = self.creation()?;
                    let mut parts = vec![expr];
                    parts.extend(creation.children);
                    expr = TreeNode::node(creation.label, parts);
                    continue;
                }
                let mut parts = vec![expr];
                if self.is("<") {
                    parts.push(self.type_args()?);
                }
                if let Some(word @ ("this" | "super")) = self.peek() {
                    self.advance();
                    parts.push(TreeNode::leaf(Label::Keyword, word));
                } else {
                    parts.push(self.expect_ident()?);
                }
                if self.is("(") {
                    parts.push(self.arguments()?);
                    expr = TreeNode::node(Label::MethodCall, parts);
                } else {
                    expr = TreeNode::node(Label::FieldAccess, parts);
                }
            } else if self.is("[") && self.is_at(1, "]") {
                // Array type in expression position: `String[].class`, `int[]::new`.
                let mut ty = match expr.label {
                    Label::Name | Label::Keyword => TreeNode::node(Label::Type, vec![expr]),
                    _ => return Err(self.error("expression")),
                };
                while self.is("[") && self.is_at(1, "]") {
                    self.advance();
                    self.advance();
                    ty.children.push(TreeNode::leaf(Label::Dim, "[]"));
                }
                expr = ty;
                if !(self.is(".") && self.is_at(1, "class")) && !self.is("::") {
                    return Err(self.error("\".class\" or \"::\""));
                }
            } else if self.is("[") {
                self.advance();
                let index = self.expression()?;
                self.expect("]")?;
                expr = TreeNode::node(Label::ArrayAccess, vec![expr, index]);
            } else if self.is("::") {
                self.advance();
                let target = if self.eat("new") {
                    TreeNode::leaf(Label::Keyword, "new")
                } else {
                    self.expect_ident()?
                };
                expr = TreeNode::node(Label::MethodRef, vec![expr, target]);
            } else {
                break;
            }
        }
        Ok(expr)
    }

    fn primary(&mut self) -> PResult<TreeNode> {
        let Some(tok) = self.peek_tok() else {
            return Err(self.error("expression"));
        };
        if self.pending_gt > 0 {
            return Err(self.error("expression"));
        }
        let text = tok.text.as_str();
        match tok.kind {
            TokenKind::Literal => {
                self.advance();
                Ok(TreeNode::leaf(Label::LiteralNode, text))
            }
            TokenKind::Keyword if matches!(text, "true" | "false" | "null") => {
                self.advance();
                Ok(TreeNode::leaf(Label::LiteralNode, text))
            }
            TokenKind::Keyword if text == "this" || text == "super" => {
                self.advance();
                let kw = TreeNode::leaf(Label::Keyword, text);
                if self.is("(") {
                    let args = self.arguments()?;
                    return Ok(TreeNode::node(Label::MethodCall, vec![kw, args]));
                }
                Ok(kw)
            }
            TokenKind::Keyword if text == "new" => self.creation(),
            TokenKind::Keyword if PRIMITIVES.contains(&text) || text == "void" => {
                self.advance();
                let kw = TreeNode::leaf(Label::Keyword, text);
                if self.is(".") && self.is_at(1, "class") || self.is("[") || self.is("::") {
                    return Ok(kw);
                }
                Err(self.error("\".class\""))
            }
            TokenKind::Identifier => {
                let name = self.expect_ident()?;
                if self.is("(") {
                    let args = self.arguments()?;
                    return Ok(TreeNode::node(Label::MethodCall, vec![name, args]));
                }
                Ok(name)
            }
            _ if text == "(" => {
                self.advance();
                let inner = self.expression()?;
                self.expect(")")?;
                Ok(TreeNode::node(Label::Paren, vec![inner]))
            }
            _ if text == "@" => Err(self.error("expression")),
            _ => Err(self.error("expression")),
        }
    }

    fn creation(&mut self) -> PResult<TreeNode> {
        let prev = self.enter("ObjectCreation");
        self.expect("new")?;
        let mut parts = Vec::new();
        if self.is("<") {
            parts.push(self.type_args()?);
        }
        let ty = self.parse_type_no_dims()?;
        parts.push(ty);
        if self.is("[") {
            self.production = "ArrayCreation";
            while self.is("[") && !self.is_at(1, "]") {
                self.advance();
                let dim = self.expression()?;
                self.expect("]")?;
                parts.push(TreeNode::node(Label::DimExpr, vec![dim]));
            }
            while self.is("[") && self.is_at(1, "]") {
                self.advance();
                self.advance();
                parts.push(TreeNode::leaf(Label::Dim, "[]"));
            }
            if self.is("{") {
                parts.push(self.array_init_with(Self::var_initializer)?);
            }
            self.production = prev;
            return Ok(TreeNode::node(Label::ArrayCreation, parts));
        }
        parts.push(self.arguments()?);
        if self.is("{") {
            parts.push(self.class_body(None, false)?);
        }
        self.production = prev;
        Ok(TreeNode::node(Label::ObjectCreation, parts))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexer::{lex, LexConfig};

    fn tree(src: &str) -> SyntaxTree {
        parse(&lex(src, &LexConfig::default()).unwrap()).unwrap()
    }

    fn parse_err(src: &str) -> ParseError {
        parse(&lex(src, &LexConfig::default()).unwrap()).unwrap_err()
    }

    fn check_node_invariants(node: &TreeNode) {
        match (&node.leaf_text, node.children.is_empty()) {
            (Some(text), true) => {
                assert!(node.label.is_leaf(), "{} carries text", node.label);
                assert!(!text.is_empty());
            }
            (Some(_), false) => panic!("{} has both text and children", node.label),
            (None, true) => assert!(node.label.allows_empty(), "{} is empty", node.label),
            (None, false) => assert!(
                !node.label.is_leaf(),
                "{} leaf label has children",
                node.label
            ),
        }
        node.children.iter().for_each(check_node_invariants);
    }

    #[test]
    fn empty_class() {
        let t = tree("class A { }");
        assert_eq!(
            t.root,
            TreeNode::node(
                Label::CompilationUnit,
                vec![TreeNode::node(
                    Label::ClassDecl,
                    vec![
                        TreeNode::leaf(Label::Name, "A"),
                        TreeNode::node(Label::Block, vec![]),
                    ]
                )]
            )
        );
        assert_eq!(t.node_count, 4);
        let set = subtree_multiset(&t);
        assert_eq!(set.len(), 2);
        assert_eq!(set.count(&"ClassDecl(ID Block())".to_string()), 1);
        assert_eq!(
            set.count(&"CompilationUnit(ClassDecl(ID Block()))".to_string()),
            1
        );
    }

    #[test]
    fn local_declaration_multiset_is_name_and_literal_blind() {
        // Hand enumeration of internal nodes for `int a = 1;` at top level:
        // Type, VarDeclarator, LocalVarDecl, CompilationUnit.
        let expected: Multiset<String> = [
            "Type(Keyword:int)",
            "VarDeclarator(ID LIT)",
            "LocalVarDecl(Type(Keyword:int) VarDeclarator(ID LIT))",
            "CompilationUnit(LocalVarDecl(Type(Keyword:int) VarDeclarator(ID LIT)))",
        ]
        .into_iter()
        .map(String::from)
        .collect();
        assert_eq!(subtree_multiset(&tree("int a = 1;")), expected);
        assert_eq!(subtree_multiset(&tree("int b = 2;")), expected);
    }

    #[test]
    fn statements_and_expressions() {
        let src = r#"
            package a.b;
            import java.util.*;
            import static org.junit.Assert.assertEquals;
            public class FooTest extends Base implements X, Y<Z> {
                private static final int LIMIT = 10, OTHER;
                private Map<String, List<Integer>> map = new HashMap<>();
                static { LIMIT2 = 3; }
                public FooTest(int a) throws Exception { super(a); this.a = a; }
                @Test(timeout = 4000)
                public void test0() throws Throwable {
                    int[] xs = {1, 2, 3};
                    for (int i = 0, j = 1; i < xs.length; i++, j--) { total += xs[i] * j; }
                    for (final String s : names) if (s == null) continue; else break;
                    while (!done) { done = check(x) && y > 2 || z instanceof Foo; }
                    do { k--; } while (k > 0);
                    Object o = (String) obj;
                    long l = (long) -x;
                    int m = (a + b) * c;
                    String t = flag ? "a" : "b";
                    Runnable r = () -> foo();
                    Function<String, Integer> f = s -> s.length();
                    Comparator<String> c = (String p, String q) -> { return p.compareTo(q); };
                    list.forEach(System.out::println);
                    Class<?> k = String[].class;
                    Class<?> k2 = int.class;
                    new Foo() { @Override public void run() {} }.run();
                    outer: for (;;) { break outer; }
                    try (InputStream in = open(); Reader rd = wrap(in)) { read(in); }
                    catch (IOException | RuntimeException e) { throw new IllegalStateException(e); }
                    finally { close(); }
                    switch (mode) { case 1: case 2: go(); break; default: stop(); }
                    assert x > 0 : "positive";
                    synchronized (lock) { counter <<= 1; }
                    List<List<String>> nested = new ArrayList<List<String>>();
                    Object[][] grid = new Object[3][];
                    String[] arr = new String[] {"x", "y"};
                    return;
                }
                abstract int size();
                interface Inner { void go(); default int two() { return 2; } }
                enum Color { RED, GREEN("g") { }, BLUE; Color() {} Color(String s) {} }
            }
        "#;
        let t = tree(src);
        check_node_invariants(&t.root);
        assert_eq!(t.node_count, t.root.walk().count());
        for label in [
            Label::PackageDecl,
            Label::ImportDecl,
            Label::FieldDecl,
            Label::Initializer,
            Label::ConstructorDecl,
            Label::ForStmt,
            Label::ForEachStmt,
            Label::WhileStmt,
            Label::DoStmt,
            Label::Cast,
            Label::Conditional,
            Label::Lambda,
            Label::MethodRef,
            Label::ClassLiteral,
            Label::LabeledStmt,
            Label::Resources,
            Label::FinallyClause,
            Label::SwitchStmt,
            Label::AssertStmt,
            Label::SyncStmt,
            Label::InstanceOf,
            Label::ArrayInit,
            Label::EnumDecl,
            Label::InterfaceDecl,
            Label::Wildcard,
            Label::Paren,
        ] {
            assert!(t.root.find_all(label).next().is_some(), "missing {label}");
        }
        assert_eq!(t.root.find_all(Label::Cast).count(), 2);
        assert_eq!(t.root.find_all(Label::Lambda).count(), 3);
    }

    #[test]
    fn nested_generics_split_shift_tokens() {
        let t = tree("Map<String, List<List<Integer>>> m = null;");
        let ty = t.root.find_all(Label::Type).next().unwrap();
        assert_eq!(ty.find_all(Label::TypeArgs).count(), 3);
    }

    #[test]
    fn shift_operator_still_works() {
        let t = tree("int a = b >> 2; int c = d >>> e;");
        let ops: Vec<_> = t
            .root
            .find_all(Label::Operator)
            .filter_map(|n| n.leaf_text.as_deref())
            .collect();
        assert_eq!(ops, vec![">>", ">>>"]);
    }

    #[test]
    fn parenthesized_expression_is_not_cast() {
        let t = tree("x = (a) + b;");
        assert_eq!(t.root.find_all(Label::Cast).count(), 0);
        assert_eq!(t.root.find_all(Label::Paren).count(), 1);
    }

    #[test]
    fn comments_are_ignored_by_parser() {
        let with = tree("// hello world\nint a = 1; /* more */");
        let without = tree("int a = 1;");
        assert_eq!(with, without);
    }

    #[test]
    fn errors_report_position_and_production() {
        let err = parse_err("class A { void f() { int x = ; } }");
        assert_eq!((err.line, err.column), (1, 30));
        assert_eq!(err.found, "\";\"");
        assert_eq!(err.production, "Expression");

        let err = parse_err("class A {");
        assert_eq!(err.found, "end of input");

        let err = parse_err("try { a(); }");
        assert_eq!(err.production, "TryStmt");

        let err = parse_err("x = y -> ;");
        assert!(err.to_string().contains("parse error at 1:"));
    }

    #[test]
    fn switch_arrows_are_outside_the_subset() {
        parse_err("switch (x) { case 1 -> go(); }");
    }

    #[test]
    fn sexpr_rendering() {
        let t = tree("class A { }");
        assert_eq!(
            t.root.to_sexpr(),
            "(CompilationUnit\n  (ClassDecl\n    (Name \"A\")\n    (Block)))"
        );
    }

    #[test]
    fn subtree_count_matches_internal_nodes() {
        let t = tree("void f(int p) { if (p > 0) { g(p); } else { h(); } }");
        assert_eq!(subtree_multiset(&t).len(), t.internal_node_count());
    }
}
