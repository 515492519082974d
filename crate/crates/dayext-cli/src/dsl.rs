//! The workspace text format: a line-oriented DSL for categories, posets,
//! heap models, partial operations, spans, relations, theories, and
//! valuations. `parse` turns source text into blocks with line and column
//! positions on every error; `serialize` renders blocks back in a canonical
//! order, and parsing the canonical form reproduces it byte for byte.

use std::fmt;

use crate::error::{CliError, CliResult};

/// One parsed top-level block, in source order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Block {
    Category(CategoryBlock),
    Poset(PosetBlock),
    HeapModel(HeapBlock),
    Op(OpBlock),
    Span(SpanBlock),
    Relation(RelationBlock),
    Theory(TheoryBlock),
    Valuation(ValuationBlock),
}

impl Block {
    pub fn name(&self) -> &str {
        match self {
            Block::Category(b) => &b.name,
            Block::Poset(b) => &b.name,
            Block::HeapModel(b) => &b.name,
            Block::Op(b) => &b.name,
            Block::Span(b) => &b.name,
            Block::Relation(b) => &b.name,
            Block::Theory(b) => &b.name,
            Block::Valuation(b) => &b.name,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Block::Category(_) => "category",
            Block::Poset(_) => "poset",
            Block::HeapModel(_) => "heapmodel",
            Block::Op(_) => "op",
            Block::Span(_) => "span",
            Block::Relation(_) => "relation",
            Block::Theory(_) => "theory",
            Block::Valuation(_) => "valuation",
        }
    }

    fn kind_rank(&self) -> u8 {
        match self {
            Block::Category(_) => 0,
            Block::Poset(_) => 1,
            Block::HeapModel(_) => 2,
            Block::Op(_) => 3,
            Block::Span(_) => 4,
            Block::Relation(_) => 5,
            Block::Theory(_) => 6,
            Block::Valuation(_) => 7,
        }
    }

    /// Sort and dedup the line lists so serialization is canonical.
    pub fn normalize(&mut self) {
        match self {
            Block::Category(b) => {
                b.objects.sort();
                b.objects.dedup();
                b.arrows.sort();
                b.arrows.dedup();
                b.composes.sort();
                b.composes.dedup();
            }
            Block::Poset(b) => {
                b.elements.sort();
                b.elements.dedup();
                b.pairs.sort();
                b.pairs.dedup();
            }
            Block::HeapModel(b) => {
                b.heaps.sort();
                b.heaps.dedup();
                b.order.sort();
                b.order.dedup();
                b.joins.sort();
                b.joins.dedup();
            }
            Block::Op(b) => {
                b.maps.sort();
                b.maps.dedup();
                b.on_arrows.sort();
                b.on_arrows.dedup();
            }
            Block::Span(b) => {
                b.left.sort();
                b.left.dedup();
                b.right.sort();
                b.right.dedup();
            }
            Block::Relation(b) => {
                b.pairs.sort();
                b.pairs.dedup();
            }
            Block::Theory(_) => {}
            Block::Valuation(b) => {
                b.atoms.sort();
                b.atoms.dedup();
                for (_, worlds) in b.atoms.iter_mut() {
                    worlds.sort();
                    worlds.dedup();
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct CategoryBlock {
    pub name: String,
    pub objects: Vec<String>,
    /// (arrow, source object, target object)
    pub arrows: Vec<(String, String, String)>,
    /// compose g.f = h as (g, f, h)
    pub composes: Vec<(String, String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct PosetBlock {
    pub name: String,
    pub elements: Vec<String>,
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct HeapBlock {
    pub name: String,
    pub heaps: Vec<String>,
    pub order: Vec<(String, String)>,
    /// join l r = out as (l, r, out)
    pub joins: Vec<(String, String, String)>,
    pub root: Option<String>,
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct OpBlock {
    pub name: String,
    pub base: String,
    pub arity: usize,
    /// map (a, b) = c as (inputs, output)
    pub maps: Vec<(Vec<String>, String)>,
    /// on-arrows (f, g) = h as (inputs, output), for non-thin bases
    pub on_arrows: Vec<(Vec<String>, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct SpanBlock {
    pub name: String,
    pub base: String,
    pub arity: usize,
    pub apex: String,
    /// left e = (a, b) as (apex object, input tuple)
    pub left: Vec<(String, Vec<String>)>,
    /// right e = c as (apex object, base object)
    pub right: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelationBlock {
    pub name: String,
    pub from: String,
    pub to: String,
    /// a ~ b with a in `from` and b in `to`
    pub pairs: Vec<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct TheoryBlock {
    pub name: String,
    pub ops: Vec<(String, usize)>,
    pub equations: Vec<(TermAst, TermAst)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum TermAst {
    Var(String),
    App(String, Vec<TermAst>),
}

impl fmt::Display for TermAst {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermAst::Var(v) => write!(f, "{v}"),
            TermAst::App(sym, kids) => {
                write!(f, "{sym}(")?;
                for (i, k) in kids.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{k}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ValuationBlock {
    pub name: String,
    /// atom p = {h1, h2} as (atom, worlds)
    pub atoms: Vec<(String, Vec<String>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Tok {
    Ident,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Colon,
    Semi,
    Comma,
    Equals,
    Dot,
    Arrow,
    Leq,
    Caret,
    Tilde,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    text: String,
    line: usize,
    col: usize,
}

fn lex(src: &str) -> CliResult<Vec<Token>> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = src.chars().peekable();
    while let Some(&c) = chars.peek() {
        let (tline, tcol) = (line, col);
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next().expect("peeked");
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
            c
        };
        if c.is_whitespace() {
            bump(&mut chars);
            continue;
        }
        if c == '#' {
            while let Some(&c2) = chars.peek() {
                if c2 == '\n' {
                    break;
                }
                bump(&mut chars);
            }
            continue;
        }
        if c.is_alphanumeric() || c == '_' {
            let mut text = String::new();
            while let Some(&c2) = chars.peek() {
                if c2.is_alphanumeric() || c2 == '_' || c2 == '-' && text.ends_with("on") {
                    // The only identifier containing a hyphen is the
                    // `on-arrows` keyword; plain hyphens start arrows.
                    if c2 == '-' {
                        let rest: String = chars.clone().collect();
                        if !rest.starts_with("-arrows") {
                            break;
                        }
                    }
                    text.push(bump(&mut chars));
                } else {
                    break;
                }
            }
            out.push(Token {
                tok: Tok::Ident,
                text,
                line: tline,
                col: tcol,
            });
            continue;
        }
        let simple = |tok: Tok, text: &str| Token {
            tok,
            text: text.to_string(),
            line: tline,
            col: tcol,
        };
        match c {
            '{' => {
                bump(&mut chars);
                out.push(simple(Tok::LBrace, "{"));
            }
            '}' => {
                bump(&mut chars);
                out.push(simple(Tok::RBrace, "}"));
            }
            '(' => {
                bump(&mut chars);
                out.push(simple(Tok::LParen, "("));
            }
            ')' => {
                bump(&mut chars);
                out.push(simple(Tok::RParen, ")"));
            }
            ':' => {
                bump(&mut chars);
                out.push(simple(Tok::Colon, ":"));
            }
            ';' => {
                bump(&mut chars);
                out.push(simple(Tok::Semi, ";"));
            }
            ',' => {
                bump(&mut chars);
                out.push(simple(Tok::Comma, ","));
            }
            '=' => {
                bump(&mut chars);
                out.push(simple(Tok::Equals, "="));
            }
            '.' => {
                bump(&mut chars);
                out.push(simple(Tok::Dot, "."));
            }
            '^' => {
                bump(&mut chars);
                out.push(simple(Tok::Caret, "^"));
            }
            '~' => {
                bump(&mut chars);
                out.push(simple(Tok::Tilde, "~"));
            }
            '-' => {
                bump(&mut chars);
                match chars.peek() {
                    Some('>') => {
                        bump(&mut chars);
                        out.push(simple(Tok::Arrow, "->"));
                    }
                    _ => {
                        return Err(CliError::Syntax {
                            line: tline,
                            col: tcol,
                            message: "expected `->` after `-`".into(),
                        })
                    }
                }
            }
            '<' => {
                bump(&mut chars);
                match chars.peek() {
                    Some('=') => {
                        bump(&mut chars);
                        out.push(simple(Tok::Leq, "<="));
                    }
                    _ => {
                        return Err(CliError::Syntax {
                            line: tline,
                            col: tcol,
                            message: "expected `<=` after `<`".into(),
                        })
                    }
                }
            }
            other => {
                return Err(CliError::Syntax {
                    line: tline,
                    col: tcol,
                    message: format!("unexpected character `{other}`"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        text: String::new(),
        line,
        col,
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, message: impl Into<String>) -> CliError {
        let t = self.peek();
        CliError::Syntax {
            line: t.line,
            col: t.col,
            message: message.into(),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> CliResult<Token> {
        if self.peek().tok == tok {
            Ok(self.advance())
        } else {
            Err(self.err(format!("expected {what}, found `{}`", self.describe())))
        }
    }

    fn describe(&self) -> String {
        let t = self.peek();
        if t.tok == Tok::Eof {
            "end of input".into()
        } else {
            t.text.clone()
        }
    }

    fn ident(&mut self, what: &str) -> CliResult<String> {
        Ok(self.expect(Tok::Ident, what)?.text)
    }

    fn keyword(&mut self, kw: &str) -> CliResult<()> {
        let t = self.expect(Tok::Ident, &format!("`{kw}`"))?;
        if t.text == kw {
            Ok(())
        } else {
            Err(CliError::Syntax {
                line: t.line,
                col: t.col,
                message: format!("expected `{kw}`, found `{}`", t.text),
            })
        }
    }

    fn number(&mut self, what: &str) -> CliResult<usize> {
        let t = self.expect(Tok::Ident, what)?;
        t.text.parse().map_err(|_| CliError::Syntax {
            line: t.line,
            col: t.col,
            message: format!("expected {what}, found `{}`", t.text),
        })
    }

    fn at(&self, tok: Tok) -> bool {
        self.peek().tok == tok
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.peek().tok == Tok::Ident && self.peek().text == kw
    }

    /// `( a, b, c )`, possibly empty.
    fn paren_list(&mut self) -> CliResult<Vec<String>> {
        self.expect(Tok::LParen, "`(`")?;
        let mut items = Vec::new();
        if !self.at(Tok::RParen) {
            loop {
                items.push(self.ident("an identifier")?);
                if self.at(Tok::Comma) {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen, "`)`")?;
        Ok(items)
    }

    fn parse_blocks(&mut self) -> CliResult<Vec<Block>> {
        let mut blocks = Vec::new();
        while !self.at(Tok::Eof) {
            let kind = self.ident("a block keyword")?;
            let block = match kind.as_str() {
                "category" => Block::Category(self.category_block()?),
                "poset" => Block::Poset(self.poset_block()?),
                "heapmodel" => Block::HeapModel(self.heap_block()?),
                "op" => Block::Op(self.op_block()?),
                "span" => Block::Span(self.span_block()?),
                "relation" => Block::Relation(self.relation_block()?),
                "theory" => Block::Theory(self.theory_block()?),
                "valuation" => Block::Valuation(self.valuation_block()?),
                other => {
                    return Err(self.err(format!(
                        "unknown block keyword `{other}` (expected category, poset, heapmodel, op, span, relation, theory, or valuation)"
                    )))
                }
            };
            blocks.push(block);
        }
        Ok(blocks)
    }

    fn category_block(&mut self) -> CliResult<CategoryBlock> {
        let name = self.ident("a category name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut b = CategoryBlock {
            name,
            objects: Vec::new(),
            arrows: Vec::new(),
            composes: Vec::new(),
        };
        while !self.at(Tok::RBrace) {
            if self.at_kw("objects") {
                self.advance();
                while !self.at(Tok::Semi) {
                    b.objects.push(self.ident("an object name")?);
                }
                self.advance();
            } else if self.at_kw("arrows") {
                self.advance();
                loop {
                    let f = self.ident("an arrow name")?;
                    self.expect(Tok::Colon, "`:`")?;
                    let a = self.ident("a source object")?;
                    self.expect(Tok::Arrow, "`->`")?;
                    let c = self.ident("a target object")?;
                    b.arrows.push((f, a, c));
                    if self.at(Tok::Semi) {
                        self.advance();
                        break;
                    }
                    self.expect(Tok::Comma, "`,` or `;`")?;
                }
            } else if self.at_kw("compose") {
                self.advance();
                let g = self.ident("an arrow name")?;
                self.expect(Tok::Dot, "`.`")?;
                let f = self.ident("an arrow name")?;
                self.expect(Tok::Equals, "`=`")?;
                let h = self.ident("an arrow name")?;
                self.expect(Tok::Semi, "`;`")?;
                b.composes.push((g, f, h));
            } else {
                return Err(self.err(format!(
                    "expected `objects`, `arrows`, or `compose` in category `{}`",
                    b.name
                )));
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(b)
    }

    fn poset_block(&mut self) -> CliResult<PosetBlock> {
        let name = self.ident("a poset name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut b = PosetBlock {
            name,
            elements: Vec::new(),
            pairs: Vec::new(),
        };
        while !self.at(Tok::RBrace) {
            if self.at_kw("elements") {
                self.advance();
                while !self.at(Tok::Semi) {
                    b.elements.push(self.ident("an element name")?);
                }
                self.advance();
            } else {
                let a = self.ident("an element name")?;
                self.expect(Tok::Leq, "`<=`")?;
                let c = self.ident("an element name")?;
                self.expect(Tok::Semi, "`;`")?;
                b.pairs.push((a, c));
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(b)
    }

    fn heap_block(&mut self) -> CliResult<HeapBlock> {
        let name = self.ident("a heap model name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut b = HeapBlock {
            name,
            heaps: Vec::new(),
            order: Vec::new(),
            joins: Vec::new(),
            root: None,
            unit: None,
        };
        while !self.at(Tok::RBrace) {
            if self.at_kw("heaps") {
                self.advance();
                while !self.at(Tok::Semi) {
                    b.heaps.push(self.ident("a heap name")?);
                }
                self.advance();
            } else if self.at_kw("order") {
                self.advance();
                let l = self.ident("a heap name")?;
                self.expect(Tok::Leq, "`<=`")?;
                let r = self.ident("a heap name")?;
                self.expect(Tok::Semi, "`;`")?;
                b.order.push((l, r));
            } else if self.at_kw("join") {
                self.advance();
                let l = self.ident("a heap name")?;
                let r = self.ident("a heap name")?;
                self.expect(Tok::Equals, "`=`")?;
                let out = self.ident("a heap name")?;
                self.expect(Tok::Semi, "`;`")?;
                b.joins.push((l, r, out));
            } else if self.at_kw("root") {
                self.advance();
                let w = self.ident("a heap name")?;
                self.expect(Tok::Semi, "`;`")?;
                if b.root.replace(w).is_some() {
                    return Err(self.err("a heap model declares at most one root"));
                }
            } else if self.at_kw("unit") {
                self.advance();
                let w = self.ident("a heap name")?;
                self.expect(Tok::Semi, "`;`")?;
                if b.unit.replace(w).is_some() {
                    return Err(self.err("a heap model declares at most one unit"));
                }
            } else {
                return Err(self.err(format!(
                    "expected `heaps`, `order`, `join`, `root`, or `unit` in heapmodel `{}`",
                    b.name
                )));
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(b)
    }

    fn op_block(&mut self) -> CliResult<OpBlock> {
        let name = self.ident("an operation name")?;
        self.expect(Tok::Colon, "`:`")?;
        let base = self.ident("a base category name")?;
        self.expect(Tok::Caret, "`^`")?;
        let arity = self.number("an arity")?;
        self.expect(Tok::Arrow, "`->`")?;
        let codomain = self.ident("the base category name")?;
        if codomain != base {
            return Err(self.err(format!(
                "operations land in their own base: `{base}^{arity} -> {base}`, not `{codomain}`"
            )));
        }
        self.expect(Tok::LBrace, "`{`")?;
        let mut b = OpBlock {
            name,
            base,
            arity,
            maps: Vec::new(),
            on_arrows: Vec::new(),
        };
        while !self.at(Tok::RBrace) {
            if self.at_kw("map") {
                self.advance();
                let inputs = self.paren_list()?;
                self.expect(Tok::Equals, "`=`")?;
                let out = self.ident("an output object")?;
                self.expect(Tok::Semi, "`;`")?;
                if inputs.len() != b.arity {
                    return Err(self.err(format!(
                        "operation `{}` has arity {}, but this map line lists {} inputs",
                        b.name,
                        b.arity,
                        inputs.len()
                    )));
                }
                b.maps.push((inputs, out));
            } else if self.at_kw("on-arrows") {
                self.advance();
                let inputs = self.paren_list()?;
                self.expect(Tok::Equals, "`=`")?;
                let out = self.ident("an output arrow")?;
                self.expect(Tok::Semi, "`;`")?;
                if inputs.len() != b.arity {
                    return Err(self.err(format!(
                        "operation `{}` has arity {}, but this on-arrows line lists {} inputs",
                        b.name,
                        b.arity,
                        inputs.len()
                    )));
                }
                b.on_arrows.push((inputs, out));
            } else {
                return Err(self.err(format!(
                    "expected `map` or `on-arrows` in op `{}`",
                    b.name
                )));
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(b)
    }

    fn span_block(&mut self) -> CliResult<SpanBlock> {
        let name = self.ident("a span name")?;
        self.expect(Tok::Colon, "`:`")?;
        let base = self.ident("a base category name")?;
        self.expect(Tok::Caret, "`^`")?;
        let arity = self.number("an arity")?;
        self.expect(Tok::Arrow, "`->`")?;
        let codomain = self.ident("the base category name")?;
        if codomain != base {
            return Err(self.err(format!(
                "spans land in their own base: `{base}^{arity} -> {base}`, not `{codomain}`"
            )));
        }
        self.expect(Tok::LBrace, "`{`")?;
        let mut b = SpanBlock {
            name,
            base,
            arity,
            apex: String::new(),
            left: Vec::new(),
            right: Vec::new(),
        };
        while !self.at(Tok::RBrace) {
            if self.at_kw("apex") {
                self.advance();
                b.apex = self.ident("an apex category name")?;
                self.expect(Tok::Semi, "`;`")?;
            } else if self.at_kw("left") {
                self.advance();
                let e = self.ident("an apex object")?;
                self.expect(Tok::Equals, "`=`")?;
                let tuple = self.paren_list()?;
                self.expect(Tok::Semi, "`;`")?;
                if tuple.len() != b.arity {
                    return Err(self.err(format!(
                        "span `{}` has arity {}, but this left line lists {} components",
                        b.name,
                        b.arity,
                        tuple.len()
                    )));
                }
                b.left.push((e, tuple));
            } else if self.at_kw("right") {
                self.advance();
                let e = self.ident("an apex object")?;
                self.expect(Tok::Equals, "`=`")?;
                let c = self.ident("a base object")?;
                self.expect(Tok::Semi, "`;`")?;
                b.right.push((e, c));
            } else {
                return Err(self.err(format!(
                    "expected `apex`, `left`, or `right` in span `{}`",
                    b.name
                )));
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        if b.apex.is_empty() {
            return Err(self.err(format!("span `{}` declares no apex", b.name)));
        }
        Ok(b)
    }

    fn relation_block(&mut self) -> CliResult<RelationBlock> {
        let name = self.ident("a relation name")?;
        self.expect(Tok::Colon, "`:`")?;
        let from = self.ident("a source category name")?;
        self.expect(Tok::Arrow, "`->`")?;
        let to = self.ident("a target category name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut b = RelationBlock {
            name,
            from,
            to,
            pairs: Vec::new(),
        };
        while !self.at(Tok::RBrace) {
            let a = self.ident("an object of the source")?;
            self.expect(Tok::Tilde, "`~`")?;
            let c = self.ident("an object of the target")?;
            self.expect(Tok::Semi, "`;`")?;
            b.pairs.push((a, c));
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(b)
    }

    fn theory_block(&mut self) -> CliResult<TheoryBlock> {
        let name = self.ident("a theory name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut b = TheoryBlock {
            name,
            ops: Vec::new(),
            equations: Vec::new(),
        };
        while !self.at(Tok::RBrace) {
            if self.at_kw("ops") {
                self.advance();
                loop {
                    let sym = self.ident("an operation symbol")?;
                    self.expect(Tok::Colon, "`:`")?;
                    let arity = self.number("an arity")?;
                    b.ops.push((sym, arity));
                    if self.at(Tok::Comma) {
                        self.advance();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::Semi, "`;`")?;
            } else if self.at_kw("eq") {
                self.advance();
                let lhs = self.term()?;
                self.expect(Tok::Equals, "`=`")?;
                let rhs = self.term()?;
                self.expect(Tok::Semi, "`;`")?;
                b.equations.push((lhs, rhs));
            } else {
                return Err(self.err(format!(
                    "expected `ops` or `eq` in theory `{}`",
                    b.name
                )));
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(b)
    }

    /// A term: `ident(...)` is an application (so nullary symbols are
    /// written `e()`), a bare identifier is a variable.
    fn term(&mut self) -> CliResult<TermAst> {
        let head = self.ident("a variable or operation symbol")?;
        if self.at(Tok::LParen) {
            self.advance();
            let mut kids = Vec::new();
            if !self.at(Tok::RParen) {
                loop {
                    kids.push(self.term()?);
                    if self.at(Tok::Comma) {
                        self.advance();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RParen, "`)`")?;
            Ok(TermAst::App(head, kids))
        } else {
            Ok(TermAst::Var(head))
        }
    }

    fn valuation_block(&mut self) -> CliResult<ValuationBlock> {
        let name = self.ident("a valuation name")?;
        self.expect(Tok::LBrace, "`{`")?;
        let mut b = ValuationBlock {
            name,
            atoms: Vec::new(),
        };
        while !self.at(Tok::RBrace) {
            self.keyword("atom")?;
            let atom = self.ident("an atom name")?;
            self.expect(Tok::Equals, "`=`")?;
            self.expect(Tok::LBrace, "`{`")?;
            let mut worlds = Vec::new();
            if !self.at(Tok::RBrace) {
                loop {
                    worlds.push(self.ident("a world name")?);
                    if self.at(Tok::Comma) {
                        self.advance();
                    } else {
                        break;
                    }
                }
            }
            self.expect(Tok::RBrace, "`}`")?;
            self.expect(Tok::Semi, "`;`")?;
            b.atoms.push((atom, worlds));
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(b)
    }
}

/// Parse one source file into blocks, in source order.
pub fn parse(src: &str) -> CliResult<Vec<Block>> {
    let tokens = lex(src)?;
    Parser { tokens, pos: 0 }.parse_blocks()
}

/// Render blocks in canonical form: blocks sorted by kind then name, line
/// lists sorted, fixed indentation. Parsing the output reproduces it.
pub fn serialize(blocks: &[Block]) -> String {
    let mut sorted: Vec<Block> = blocks.to_vec();
    for b in sorted.iter_mut() {
        b.normalize();
    }
    sorted.sort_by(|a, b| {
        (a.kind_rank(), a.name()).cmp(&(b.kind_rank(), b.name()))
    });
    let mut out = String::new();
    for (i, block) in sorted.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        serialize_block(block, &mut out);
    }
    out
}

fn serialize_block(block: &Block, out: &mut String) {
    use std::fmt::Write;
    match block {
        Block::Category(b) => {
            writeln!(out, "category {} {{", b.name).unwrap();
            if !b.objects.is_empty() {
                writeln!(out, "  objects {};", b.objects.join(" ")).unwrap();
            }
            for (f, a, c) in &b.arrows {
                writeln!(out, "  arrows {f}: {a} -> {c};").unwrap();
            }
            for (g, f, h) in &b.composes {
                writeln!(out, "  compose {g}.{f} = {h};").unwrap();
            }
            writeln!(out, "}}").unwrap();
        }
        Block::Poset(b) => {
            writeln!(out, "poset {} {{", b.name).unwrap();
            if !b.elements.is_empty() {
                writeln!(out, "  elements {};", b.elements.join(" ")).unwrap();
            }
            for (a, c) in &b.pairs {
                writeln!(out, "  {a} <= {c};").unwrap();
            }
            writeln!(out, "}}").unwrap();
        }
        Block::HeapModel(b) => {
            writeln!(out, "heapmodel {} {{", b.name).unwrap();
            if !b.heaps.is_empty() {
                writeln!(out, "  heaps {};", b.heaps.join(" ")).unwrap();
            }
            for (l, r) in &b.order {
                writeln!(out, "  order {l} <= {r};").unwrap();
            }
            for (l, r, j) in &b.joins {
                writeln!(out, "  join {l} {r} = {j};").unwrap();
            }
            if let Some(root) = &b.root {
                writeln!(out, "  root {root};").unwrap();
            }
            if let Some(unit) = &b.unit {
                writeln!(out, "  unit {unit};").unwrap();
            }
            writeln!(out, "}}").unwrap();
        }
        Block::Op(b) => {
            writeln!(out, "op {} : {}^{} -> {} {{", b.name, b.base, b.arity, b.base).unwrap();
            for (inputs, o) in &b.maps {
                writeln!(out, "  map ({}) = {o};", inputs.join(", ")).unwrap();
            }
            for (inputs, o) in &b.on_arrows {
                writeln!(out, "  on-arrows ({}) = {o};", inputs.join(", ")).unwrap();
            }
            writeln!(out, "}}").unwrap();
        }
        Block::Span(b) => {
            writeln!(out, "span {} : {}^{} -> {} {{", b.name, b.base, b.arity, b.base).unwrap();
            writeln!(out, "  apex {};", b.apex).unwrap();
            for (e, tuple) in &b.left {
                writeln!(out, "  left {e} = ({});", tuple.join(", ")).unwrap();
            }
            for (e, c) in &b.right {
                writeln!(out, "  right {e} = {c};").unwrap();
            }
            writeln!(out, "}}").unwrap();
        }
        Block::Relation(b) => {
            writeln!(out, "relation {} : {} -> {} {{", b.name, b.from, b.to).unwrap();
            for (a, c) in &b.pairs {
                writeln!(out, "  {a} ~ {c};").unwrap();
            }
            writeln!(out, "}}").unwrap();
        }
        Block::Theory(b) => {
            writeln!(out, "theory {} {{", b.name).unwrap();
            if !b.ops.is_empty() {
                let ops: Vec<String> = b
                    .ops
                    .iter()
                    .map(|(s, a)| format!("{s}:{a}"))
                    .collect();
                writeln!(out, "  ops {};", ops.join(", ")).unwrap();
            }
            for (lhs, rhs) in &b.equations {
                writeln!(out, "  eq {lhs} = {rhs};").unwrap();
            }
            writeln!(out, "}}").unwrap();
        }
        Block::Valuation(b) => {
            writeln!(out, "valuation {} {{", b.name).unwrap();
            for (atom, worlds) in &b.atoms {
                writeln!(out, "  atom {atom} = {{{}}};", worlds.join(", ")).unwrap();
            }
            writeln!(out, "}}").unwrap();
        }
    }
}
