//! Recursive-descent parser producing an untyped syntax tree. Name
//! resolution and typing happen in `check`.

use std::collections::HashSet;

use super::lexer::{Tok, Token};
use super::{Diagnostic, Pos};
use crate::semantics::{BinOp, IntTy};

#[derive(Clone, Debug, PartialEq)]
pub enum BaseType {
    Int(IntTy),
    Bool,
    Void,
    Struct(String),
    Enum(String),
    Named(String),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawType {
    Base(BaseType),
    Pointer(Box<RawType>),
    Array(Box<RawType>, Box<RawExpr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawExpr {
    pub kind: RawExprKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawExprKind {
    Int(u64, bool),
    Ident(String),
    Unary(&'static str, Box<RawExpr>),
    Binary(BinOp, Box<RawExpr>, Box<RawExpr>),
    And(Box<RawExpr>, Box<RawExpr>),
    Or(Box<RawExpr>, Box<RawExpr>),
    Cast(RawType, Box<RawExpr>),
    Index(Box<RawExpr>, Box<RawExpr>),
    Member(Box<RawExpr>, String, bool),
    Call(String, Vec<RawExpr>),
    SizeofType(RawType),
    SizeofExpr(Box<RawExpr>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawInit {
    Expr(RawExpr),
    List(Vec<RawInit>, Pos),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawDeclarator {
    pub name: String,
    pub ty: RawType,
    pub init: Option<RawInit>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawStmt {
    Decl(Vec<RawDeclarator>),
    Assign(RawExpr, Option<BinOp>, RawExpr, Pos),
    Expr(RawExpr),
    If(RawExpr, Vec<RawStmt>, Option<Vec<RawStmt>>, Pos),
    While(RawExpr, Vec<RawStmt>, Pos),
    For(Vec<RawStmt>, Option<RawExpr>, Vec<RawStmt>, Vec<RawStmt>, Pos),
    Switch(RawExpr, Vec<RawArm>, Pos),
    Break(Pos),
    Continue(Pos),
    Return(Option<RawExpr>, Pos),
    Block(Vec<RawStmt>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum RawLabel {
    Case(RawExpr),
    Default,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawArm {
    pub labels: Vec<RawLabel>,
    pub body: Vec<RawStmt>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RawParam {
    pub name: Option<String>,
    pub ty: RawType,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Item {
    Struct { name: String, fields: Vec<RawDeclarator>, pos: Pos },
    Enum { name: String, variants: Vec<(String, Option<RawExpr>, Pos)>, pos: Pos },
    Typedef { name: String, ty: RawType, pos: Pos },
    Global(RawDeclarator),
    Function { name: String, ret: RawType, params: Vec<RawParam>, body: Option<Vec<RawStmt>>, pos: Pos },
}

const BUILTIN_TYPEDEFS: &[(&str, IntTy)] = &[
    ("int8_t", IntTy::I8),
    ("uint8_t", IntTy::U8),
    ("int16_t", IntTy::I16),
    ("uint16_t", IntTy::U16),
    ("int32_t", IntTy::I32),
    ("uint32_t", IntTy::U32),
    ("i8", IntTy::I8),
    ("u8", IntTy::U8),
    ("s8", IntTy::I8),
    ("i16", IntTy::I16),
    ("u16", IntTy::U16),
    ("s16", IntTy::I16),
    ("i32", IntTy::I32),
    ("u32", IntTy::U32),
    ("s32", IntTy::I32),
];

const QUALIFIERS: &[&str] = &["const", "volatile", "static", "extern", "inline", "register"];

pub struct Parser {
    toks: Vec<Token>,
    at: usize,
    typedefs: HashSet<String>,
    anon: usize,
}

pub fn parse_items(toks: Vec<Token>) -> Result<Vec<Item>, Diagnostic> {
    let mut p = Parser { toks, at: 0, typedefs: HashSet::new(), anon: 0 };
    let mut items = Vec::new();
    while !p.at_eof() {
        p.item(&mut items)?;
    }
    Ok(items)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.at + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].pos
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.next();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.next();
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str) -> Result<(), Diagnostic> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{p}`")))
        }
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v, _) => format!("`{v}`"),
            Tok::Char(_) => "character literal".to_string(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        };
        Diagnostic::syntax(self.pos(), format!("expected {wanted}, found {found}"))
    }

    fn ident(&mut self) -> Result<(String, Pos), Diagnostic> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Ident(s) if !is_reserved(&s) => {
                self.next();
                Ok((s, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn starts_type(&self) -> bool {
        self.starts_type_at(0)
    }

    fn starts_type_at(&self, k: usize) -> bool {
        match self.peek_at(k) {
            Tok::Ident(s) => {
                matches!(
                    s.as_str(),
                    "int"
                        | "char"
                        | "short"
                        | "long"
                        | "signed"
                        | "unsigned"
                        | "void"
                        | "_Bool"
                        | "bool"
                        | "struct"
                        | "enum"
                        | "union"
                        | "float"
                        | "double"
                ) || QUALIFIERS.contains(&s.as_str())
                    || BUILTIN_TYPEDEFS.iter().any(|(n, _)| n == s)
                    || self.typedefs.contains(s)
            }
            _ => false,
        }
    }

    /// Parse declaration specifiers into a base type. Struct/enum bodies
    /// found here are emitted as items.
    fn base_type(&mut self, items: &mut Vec<Item>) -> Result<BaseType, Diagnostic> {
        let pos = self.pos();
        let mut signed: Option<bool> = None;
        let mut size: Option<&'static str> = None;
        let mut int_kw = false;
        let mut result: Option<BaseType> = None;
        while let Tok::Ident(word) = self.peek().clone() {
            let w = word.as_str();
            if QUALIFIERS.contains(&w) {
                self.next();
                continue;
            }
            match w {
                "signed" => {
                    self.next();
                    signed = Some(true);
                }
                "unsigned" => {
                    self.next();
                    signed = Some(false);
                }
                "char" | "short" => {
                    self.next();
                    size = Some(if w == "char" { "char" } else { "short" });
                }
                "int" => {
                    self.next();
                    int_kw = true;
                }
                "long" => return Err(Diagnostic::unsupported(self.pos(), "`long` integer type")),
                "float" | "double" => return Err(Diagnostic::unsupported(self.pos(), "floating-point type")),
                "union" => return Err(Diagnostic::unsupported(self.pos(), "union type")),
                "void" | "_Bool" | "bool" | "struct" | "enum"
                    if result.is_none() && signed.is_none() && size.is_none() && !int_kw =>
                {
                    self.next();
                    result = Some(match w {
                        "void" => BaseType::Void,
                        "_Bool" | "bool" => BaseType::Bool,
                        "struct" => self.struct_spec(pos, items)?,
                        _ => self.enum_spec(pos, items)?,
                    });
                }
                _ if result.is_none() && signed.is_none() && size.is_none() && !int_kw => {
                    if let Some((_, t)) = BUILTIN_TYPEDEFS.iter().find(|(n, _)| *n == w) {
                        self.next();
                        result = Some(BaseType::Int(*t));
                    } else if self.typedefs.contains(w) {
                        self.next();
                        result = Some(BaseType::Named(word.clone()));
                    } else {
                        break;
                    }
                }
                _ => break,
            }
        }
        if let Some(r) = result {
            return Ok(r);
        }
        if signed.is_none() && size.is_none() && !int_kw {
            return Err(Diagnostic::syntax(pos, "expected a type"));
        }
        let is_signed = signed.unwrap_or(true);
        let bits = match size {
            Some("char") => 8,
            Some(_) => 16,
            None => 32,
        };
        Ok(BaseType::Int(IntTy { bits, signed: is_signed }))
    }

    fn struct_spec(&mut self, pos: Pos, items: &mut Vec<Item>) -> Result<BaseType, Diagnostic> {
        let name = if let Tok::Ident(_) = self.peek() { Some(self.ident()?.0) } else { None };
        if self.eat_punct("{") {
            let name = name.unwrap_or_else(|| {
                self.anon += 1;
                format!("__anon_struct_{}", self.anon)
            });
            let mut fields = Vec::new();
            while !self.eat_punct("}") {
                let fpos = self.pos();
                let base = self.base_type(items)?;
                loop {
                    let mut d = self.declarator(&base, items)?;
                    d.pos = fpos;
                    fields.push(d);
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect_punct(";")?;
            }
            items.push(Item::Struct { name: name.clone(), fields, pos });
            Ok(BaseType::Struct(name))
        } else {
            match name {
                Some(n) => Ok(BaseType::Struct(n)),
                None => Err(self.unexpected("struct name or body")),
            }
        }
    }

    fn enum_spec(&mut self, pos: Pos, items: &mut Vec<Item>) -> Result<BaseType, Diagnostic> {
        let name = if let Tok::Ident(_) = self.peek() { Some(self.ident()?.0) } else { None };
        if self.eat_punct("{") {
            let name = name.unwrap_or_else(|| {
                self.anon += 1;
                format!("__anon_enum_{}", self.anon)
            });
            let mut variants = Vec::new();
            while !self.eat_punct("}") {
                let (v, vpos) = self.ident()?;
                let value = if self.eat_punct("=") { Some(self.expr()?) } else { None };
                variants.push((v, value, vpos));
                if !self.eat_punct(",") {
                    self.expect_punct("}")?;
                    break;
                }
            }
            items.push(Item::Enum { name: name.clone(), variants, pos });
            Ok(BaseType::Enum(name))
        } else {
            match name {
                Some(n) => Ok(BaseType::Enum(n)),
                None => Err(self.unexpected("enum name or body")),
            }
        }
    }

    fn skip_qualifiers(&mut self) {
        while let Tok::Ident(s) = self.peek() {
            if QUALIFIERS.contains(&s.as_str()) {
                self.next();
            } else {
                break;
            }
        }
    }

    /// `*`* name `[N]`*, optionally followed by `= init`.
    fn declarator(&mut self, base: &BaseType, items: &mut Vec<Item>) -> Result<RawDeclarator, Diagnostic> {
        let _ = items;
        let mut ty = RawType::Base(base.clone());
        while self.eat_punct("*") {
            self.skip_qualifiers();
            ty = RawType::Pointer(Box::new(ty));
        }
        if self.is_punct("(") {
            return Err(Diagnostic::unsupported(self.pos(), "function pointer or parenthesized declarator"));
        }
        let (name, pos) = self.ident()?;
        let ty = self.array_suffix(ty)?;
        let init = if self.eat_punct("=") { Some(self.initializer()?) } else { None };
        Ok(RawDeclarator { name, ty, init, pos })
    }

    fn array_suffix(&mut self, ty: RawType) -> Result<RawType, Diagnostic> {
        let mut dims = Vec::new();
        while self.eat_punct("[") {
            if self.is_punct("]") {
                return Err(Diagnostic::unsupported(self.pos(), "array without explicit size"));
            }
            dims.push(self.expr()?);
            self.expect_punct("]")?;
        }
        let mut ty = ty;
        for d in dims.into_iter().rev() {
            ty = RawType::Array(Box::new(ty), Box::new(d));
        }
        Ok(ty)
    }

    fn initializer(&mut self) -> Result<RawInit, Diagnostic> {
        let pos = self.pos();
        if self.eat_punct("{") {
            let mut elems = Vec::new();
            while !self.eat_punct("}") {
                elems.push(self.initializer()?);
                if !self.eat_punct(",") {
                    self.expect_punct("}")?;
                    break;
                }
            }
            Ok(RawInit::List(elems, pos))
        } else {
            Ok(RawInit::Expr(self.expr()?))
        }
    }

    fn type_name(&mut self, items: &mut Vec<Item>) -> Result<RawType, Diagnostic> {
        let base = self.base_type(items)?;
        let mut ty = RawType::Base(base);
        while self.eat_punct("*") {
            self.skip_qualifiers();
            ty = RawType::Pointer(Box::new(ty));
        }
        self.array_suffix(ty)
    }

    fn item(&mut self, items: &mut Vec<Item>) -> Result<(), Diagnostic> {
        let pos = self.pos();
        if self.eat_punct(";") {
            return Ok(());
        }
        if self.eat_kw("typedef") {
            let base = self.base_type(items)?;
            let d = self.declarator(&base, items)?;
            if d.init.is_some() {
                return Err(Diagnostic::syntax(d.pos, "typedef cannot have an initializer"));
            }
            self.expect_punct(";")?;
            self.typedefs.insert(d.name.clone());
            items.push(Item::Typedef { name: d.name, ty: d.ty, pos });
            return Ok(());
        }
        let base = self.base_type(items)?;
        if self.eat_punct(";") {
            // bare `struct S {...};` or `enum E {...};`
            return Ok(());
        }
        let mut ty = RawType::Base(base.clone());
        while self.eat_punct("*") {
            self.skip_qualifiers();
            ty = RawType::Pointer(Box::new(ty));
        }
        let (name, npos) = self.ident()?;
        if self.eat_punct("(") {
            let params = self.params(items)?;
            let body = if self.eat_punct(";") { None } else { Some(self.block(items)?) };
            items.push(Item::Function { name, ret: ty, params, body, pos: npos });
            return Ok(());
        }
        let ty = self.array_suffix(ty)?;
        let init = if self.eat_punct("=") { Some(self.initializer()?) } else { None };
        items.push(Item::Global(RawDeclarator { name, ty, init, pos: npos }));
        while self.eat_punct(",") {
            let d = self.declarator(&base, items)?;
            items.push(Item::Global(d));
        }
        self.expect_punct(";")?;
        Ok(())
    }

    fn params(&mut self, items: &mut Vec<Item>) -> Result<Vec<RawParam>, Diagnostic> {
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        if self.is_kw("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.next();
            self.next();
            return Ok(params);
        }
        loop {
            let pos = self.pos();
            if self.is_punct(".") {
                return Err(Diagnostic::unsupported(pos, "variadic parameters"));
            }
            let base = self.base_type(items)?;
            let mut ty = RawType::Base(base);
            while self.eat_punct("*") {
                self.skip_qualifiers();
                ty = RawType::Pointer(Box::new(ty));
            }
            if self.is_punct("(") {
                return Err(Diagnostic::unsupported(pos, "function pointer parameter"));
            }
            let name = if let Tok::Ident(s) = self.peek() {
                if is_reserved(s) {
                    None
                } else {
                    Some(self.ident()?.0)
                }
            } else {
                None
            };
            let ty = self.array_suffix(ty)?;
            params.push(RawParam { name, ty, pos });
            if self.eat_punct(")") {
                break;
            }
            self.expect_punct(",")?;
        }
        Ok(params)
    }

    fn block(&mut self, items: &mut Vec<Item>) -> Result<Vec<RawStmt>, Diagnostic> {
        self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.eat_punct("}") {
            if self.at_eof() {
                return Err(self.unexpected("`}`"));
            }
            stmts.push(self.stmt(items)?);
        }
        Ok(stmts)
    }

    fn body(&mut self, items: &mut Vec<Item>) -> Result<Vec<RawStmt>, Diagnostic> {
        if self.is_punct("{") {
            self.block(items)
        } else {
            Ok(vec![self.stmt(items)?])
        }
    }

    fn stmt(&mut self, items: &mut Vec<Item>) -> Result<RawStmt, Diagnostic> {
        let pos = self.pos();
        if self.is_punct("{") {
            return Ok(RawStmt::Block(self.block(items)?));
        }
        if self.eat_punct(";") {
            return Ok(RawStmt::Block(Vec::new()));
        }
        if let Tok::Ident(w) = self.peek().clone() {
            match w.as_str() {
                "if" => {
                    self.next();
                    self.expect_punct("(")?;
                    let c = self.expr()?;
                    self.expect_punct(")")?;
                    let t = self.body(items)?;
                    let e = if self.eat_kw("else") { Some(self.body(items)?) } else { None };
                    return Ok(RawStmt::If(c, t, e, pos));
                }
                "while" => {
                    self.next();
                    self.expect_punct("(")?;
                    let c = self.expr()?;
                    self.expect_punct(")")?;
                    let b = self.body(items)?;
                    return Ok(RawStmt::While(c, b, pos));
                }
                "for" => {
                    self.next();
                    self.expect_punct("(")?;
                    let init = if self.eat_punct(";") {
                        Vec::new()
                    } else if self.starts_type() {
                        let d = self.decl(items)?;
                        vec![d]
                    } else {
                        let v = self.simple_list()?;
                        self.expect_punct(";")?;
                        v
                    };
                    let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
                    self.expect_punct(";")?;
                    let step = if self.is_punct(")") { Vec::new() } else { self.simple_list()? };
                    self.expect_punct(")")?;
                    let body = self.body(items)?;
                    return Ok(RawStmt::For(init, cond, step, body, pos));
                }
                "switch" => {
                    self.next();
                    self.expect_punct("(")?;
                    let s = self.expr()?;
                    self.expect_punct(")")?;
                    return Ok(RawStmt::Switch(s, self.switch_body(items)?, pos));
                }
                "break" => {
                    self.next();
                    self.expect_punct(";")?;
                    return Ok(RawStmt::Break(pos));
                }
                "continue" => {
                    self.next();
                    self.expect_punct(";")?;
                    return Ok(RawStmt::Continue(pos));
                }
                "return" => {
                    self.next();
                    let e = if self.is_punct(";") { None } else { Some(self.expr()?) };
                    self.expect_punct(";")?;
                    return Ok(RawStmt::Return(e, pos));
                }
                "do" => return Err(Diagnostic::unsupported(pos, "do-while loop")),
                "goto" => return Err(Diagnostic::unsupported(pos, "goto")),
                "case" | "default" => return Err(Diagnostic::syntax(pos, "case label outside of a switch body")),
                "typedef" => return Err(Diagnostic::unsupported(pos, "block-scope typedef")),
                _ => {}
            }
        }
        if self.starts_type() {
            return self.decl(items);
        }
        let s = self.simple()?;
        self.expect_punct(";")?;
        Ok(s)
    }

    fn decl(&mut self, items: &mut Vec<Item>) -> Result<RawStmt, Diagnostic> {
        let base = self.base_type(items)?;
        let mut ds = Vec::new();
        loop {
            ds.push(self.declarator(&base, items)?);
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect_punct(";")?;
        Ok(RawStmt::Decl(ds))
    }

    fn simple_list(&mut self) -> Result<Vec<RawStmt>, Diagnostic> {
        let mut v = vec![self.simple()?];
        while self.eat_punct(",") {
            v.push(self.simple()?);
        }
        Ok(v)
    }

    /// Assignment, compound assignment, increment/decrement or call.
    fn simple(&mut self) -> Result<RawStmt, Diagnostic> {
        let pos = self.pos();
        for (p, op) in [("++", BinOp::Add), ("--", BinOp::Sub)] {
            if self.eat_punct(p) {
                let target = self.unary()?;
                let one = RawExpr { kind: RawExprKind::Int(1, false), pos };
                return Ok(RawStmt::Assign(target, Some(op), one, pos));
            }
        }
        let lhs = self.expr()?;
        for (p, op) in [("++", BinOp::Add), ("--", BinOp::Sub)] {
            if self.eat_punct(p) {
                let one = RawExpr { kind: RawExprKind::Int(1, false), pos };
                return Ok(RawStmt::Assign(lhs, Some(op), one, pos));
            }
        }
        if self.eat_punct("=") {
            let rhs = self.expr()?;
            if self.is_punct("=") {
                return Err(Diagnostic::unsupported(self.pos(), "chained assignment"));
            }
            return Ok(RawStmt::Assign(lhs, None, rhs, pos));
        }
        const COMPOUND: &[(&str, BinOp)] = &[
            ("+=", BinOp::Add),
            ("-=", BinOp::Sub),
            ("*=", BinOp::Mul),
            ("/=", BinOp::Div),
            ("%=", BinOp::Rem),
            ("&=", BinOp::BitAnd),
            ("|=", BinOp::BitOr),
            ("^=", BinOp::BitXor),
            ("<<=", BinOp::Shl),
            (">>=", BinOp::Shr),
        ];
        for (p, op) in COMPOUND {
            if self.eat_punct(p) {
                let rhs = self.expr()?;
                return Ok(RawStmt::Assign(lhs, Some(*op), rhs, pos));
            }
        }
        Ok(RawStmt::Expr(lhs))
    }

    fn switch_body(&mut self, items: &mut Vec<Item>) -> Result<Vec<RawArm>, Diagnostic> {
        self.expect_punct("{")?;
        let mut arms: Vec<RawArm> = Vec::new();
        while !self.eat_punct("}") {
            let pos = self.pos();
            if self.is_kw("case") || self.is_kw("default") {
                let mut labels = Vec::new();
                while self.is_kw("case") || self.is_kw("default") {
                    if self.eat_kw("case") {
                        labels.push(RawLabel::Case(self.expr()?));
                    } else {
                        self.next();
                        labels.push(RawLabel::Default);
                    }
                    self.expect_punct(":")?;
                }
                arms.push(RawArm { labels, body: Vec::new(), pos });
            } else {
                let s = self.stmt(items)?;
                match arms.last_mut() {
                    Some(a) => a.body.push(s),
                    None => return Err(Diagnostic::syntax(pos, "statement before first case label")),
                }
            }
        }
        Ok(arms)
    }

    pub fn expr(&mut self) -> Result<RawExpr, Diagnostic> {
        if self.is_punct("?") {
            return Err(Diagnostic::unsupported(self.pos(), "conditional operator"));
        }
        let e = self.logical_or()?;
        if self.is_punct("?") {
            return Err(Diagnostic::unsupported(self.pos(), "conditional operator"));
        }
        Ok(e)
    }

    fn logical_or(&mut self) -> Result<RawExpr, Diagnostic> {
        let mut lhs = self.logical_and()?;
        while self.is_punct("||") {
            let pos = self.next().pos;
            let rhs = self.logical_and()?;
            lhs = RawExpr { kind: RawExprKind::Or(Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn logical_and(&mut self) -> Result<RawExpr, Diagnostic> {
        let mut lhs = self.binary(0)?;
        while self.is_punct("&&") {
            let pos = self.next().pos;
            let rhs = self.binary(0)?;
            lhs = RawExpr { kind: RawExprKind::And(Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn binary(&mut self, level: usize) -> Result<RawExpr, Diagnostic> {
        const LEVELS: &[&[(&str, BinOp)]] = &[
            &[("|", BinOp::BitOr)],
            &[("^", BinOp::BitXor)],
            &[("&", BinOp::BitAnd)],
            &[("==", BinOp::Eq), ("!=", BinOp::Ne)],
            &[("<", BinOp::Lt), ("<=", BinOp::Le), (">", BinOp::Gt), (">=", BinOp::Ge)],
            &[("<<", BinOp::Shl), (">>", BinOp::Shr)],
            &[("+", BinOp::Add), ("-", BinOp::Sub)],
            &[("*", BinOp::Mul), ("/", BinOp::Div), ("%", BinOp::Rem)],
        ];
        if level == LEVELS.len() {
            return self.unary();
        }
        let mut lhs = self.binary(level + 1)?;
        'outer: loop {
            for (p, op) in LEVELS[level] {
                if self.is_punct(p) {
                    let pos = self.next().pos;
                    let rhs = self.binary(level + 1)?;
                    lhs = RawExpr { kind: RawExprKind::Binary(*op, Box::new(lhs), Box::new(rhs)), pos };
                    continue 'outer;
                }
            }
            break;
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<RawExpr, Diagnostic> {
        let pos = self.pos();
        for p in ["-", "+", "!", "~", "*", "&"] {
            if self.is_punct(p) {
                self.next();
                let e = self.unary()?;
                let op: &'static str = match p {
                    "-" => "-",
                    "+" => "+",
                    "!" => "!",
                    "~" => "~",
                    "*" => "*",
                    _ => "&",
                };
                return Ok(RawExpr { kind: RawExprKind::Unary(op, Box::new(e)), pos });
            }
        }
        if self.is_punct("++") || self.is_punct("--") {
            return Err(Diagnostic::unsupported(pos, "increment inside an expression"));
        }
        if self.eat_kw("sizeof") {
            if self.is_punct("(") && self.starts_type_at(1) {
                self.next();
                let mut scratch = Vec::new();
                let ty = self.type_name(&mut scratch)?;
                self.expect_punct(")")?;
                return Ok(RawExpr { kind: RawExprKind::SizeofType(ty), pos });
            }
            let e = self.unary()?;
            return Ok(RawExpr { kind: RawExprKind::SizeofExpr(Box::new(e)), pos });
        }
        if self.is_punct("(") && self.starts_type_at(1) {
            self.next();
            let mut scratch = Vec::new();
            let ty = self.type_name(&mut scratch)?;
            if !scratch.is_empty() {
                return Err(Diagnostic::unsupported(pos, "type definition inside a cast"));
            }
            self.expect_punct(")")?;
            let e = self.unary()?;
            return Ok(RawExpr { kind: RawExprKind::Cast(ty, Box::new(e)), pos });
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<RawExpr, Diagnostic> {
        let mut e = self.primary()?;
        loop {
            let pos = self.pos();
            if self.eat_punct("[") {
                let idx = self.expr()?;
                self.expect_punct("]")?;
                e = RawExpr { kind: RawExprKind::Index(Box::new(e), Box::new(idx)), pos };
            } else if self.eat_punct(".") {
                let (f, _) = self.ident()?;
                e = RawExpr { kind: RawExprKind::Member(Box::new(e), f, false), pos };
            } else if self.eat_punct("->") {
                let (f, _) = self.ident()?;
                e = RawExpr { kind: RawExprKind::Member(Box::new(e), f, true), pos };
            } else if self.is_punct("(") {
                let RawExprKind::Ident(name) = &e.kind else {
                    return Err(Diagnostic::unsupported(pos, "call through an expression (function pointer)"));
                };
                let name = name.clone();
                self.next();
                let mut args = Vec::new();
                if !self.eat_punct(")") {
                    loop {
                        args.push(self.expr()?);
                        if self.eat_punct(")") {
                            break;
                        }
                        self.expect_punct(",")?;
                    }
                }
                e = RawExpr { kind: RawExprKind::Call(name, args), pos: e.pos };
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn primary(&mut self) -> Result<RawExpr, Diagnostic> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Int(v, u) => {
                self.next();
                Ok(RawExpr { kind: RawExprKind::Int(v, u), pos })
            }
            Tok::Char(c) => {
                self.next();
                Ok(RawExpr { kind: RawExprKind::Int(c as u64, false), pos })
            }
            Tok::Ident(s) if !is_reserved(&s) => {
                self.next();
                Ok(RawExpr { kind: RawExprKind::Ident(s), pos })
            }
            Tok::Punct("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_punct(")")?;
                Ok(e)
            }
            _ => Err(self.unexpected("expression")),
        }
    }
}

fn is_reserved(s: &str) -> bool {
    matches!(
        s,
        "if" | "else"
            | "while"
            | "for"
            | "do"
            | "switch"
            | "case"
            | "default"
            | "break"
            | "continue"
            | "return"
            | "goto"
            | "sizeof"
            | "typedef"
            | "struct"
            | "enum"
            | "union"
            | "int"
            | "char"
            | "short"
            | "long"
            | "signed"
            | "unsigned"
            | "void"
            | "const"
            | "volatile"
            | "static"
            | "extern"
            | "inline"
            | "register"
            | "float"
            | "double"
            | "_Bool"
    )
}
