use super::ast::*;
use super::lexer::{Tok, Token};
use super::ParseError;

/// Id counters shared across every file of one translation unit.
#[derive(Debug, Default)]
pub struct IdGen {
    pub next_decl: u32,
    pub next_expr: u32,
}

impl IdGen {
    fn decl(&mut self) -> DeclId {
        self.next_decl += 1;
        DeclId(self.next_decl - 1)
    }

    fn expr(&mut self) -> ExprId {
        self.next_expr += 1;
        ExprId(self.next_expr - 1)
    }
}

const CHECKED_PTRS: &[(&str, PtrKind)] = &[
    ("_Ptr", PtrKind::Ptr),
    ("_Array_ptr", PtrKind::Arr),
    ("_Nt_array_ptr", PtrKind::NtArr),
];

const BASE_WORDS: &[&str] = &[
    "int", "char", "unsigned", "signed", "long", "short", "void", "size_t", "const", "struct",
    "union",
];

const RESERVED: &[&str] = &[
    "int", "char", "unsigned", "signed", "long", "short", "void", "size_t", "const", "struct",
    "union", "static", "extern", "return", "if", "else", "while", "for", "break", "continue",
    "sizeof", "NULL", "_Ptr", "_Array_ptr", "_Nt_array_ptr", "_Checked", "_Itype_for_any",
    "_For_any", "_Assume_bounds_cast", "_Dynamic_bounds_cast", "typedef",
];

pub struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    file: FileId,
    ids: &'a mut IdGen,
    generic: Option<String>,
}

impl<'a> Parser<'a> {
    pub fn new(toks: Vec<Token>, file: FileId, ids: &'a mut IdGen) -> Self {
        Parser {
            toks,
            pos: 0,
            file,
            ids,
            generic: None,
        }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Char(_) => "character literal".into(),
            Tok::Str(_) => "string literal".into(),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of file".into(),
        };
        Err(ParseError::Syntax {
            file: self.file,
            line: self.span().line,
            message: format!("expected {expected}, found {found}"),
        })
    }

    fn expect_punct(&mut self, p: &str) -> Result<Span, ParseError> {
        if self.is_punct(p) {
            Ok(self.bump().span)
        } else {
            self.error(&format!("`{p}`"))
        }
    }

    fn expect_ident(&mut self) -> Result<(String, Span), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) => {
                let sp = self.bump().span;
                Ok((s, sp))
            }
            _ => self.error("identifier"),
        }
    }

    fn expr_node(&mut self, kind: ExprKind, span: Span) -> Expr {
        Expr {
            id: self.ids.expr(),
            kind,
            span,
        }
    }

    /// Does the current token begin a type name?
    fn at_type_start(&self) -> bool {
        match self.peek() {
            Tok::Ident(s) => {
                BASE_WORDS.contains(&s.as_str())
                    || CHECKED_PTRS.iter().any(|(k, _)| k == s)
                    || self.generic.as_deref() == Some(s.as_str())
            }
            _ => false,
        }
    }

    pub fn parse_file(mut self) -> Result<Vec<Item>, ParseError> {
        let mut items = Vec::new();
        while !matches!(self.peek(), Tok::Eof) {
            if self.eat_punct(";") {
                continue;
            }
            items.push(self.parse_item()?);
        }
        Ok(items)
    }

    fn parse_item(&mut self) -> Result<Item, ParseError> {
        let start = self.span();
        if self.is_word("typedef") {
            return self.error("a declaration (typedef is not part of mini-C)");
        }
        // struct/union definition
        if (self.is_word("struct") || self.is_word("union"))
            && matches!(self.peek_at(1), Tok::Ident(_))
            && matches!(self.peek_at(2), Tok::Punct("{"))
        {
            let is_union = self.is_word("union");
            self.bump();
            let (name, _) = self.expect_ident()?;
            self.expect_punct("{")?;
            let mut fields = Vec::new();
            while !self.is_punct("}") {
                let fstart = self.span();
                let (ty, header_start) = self.parse_decl_specifiers()?;
                let d = self.parse_declarator(ty, header_start, fstart, Storage::None)?;
                self.expect_punct(";")?;
                fields.push(d);
            }
            self.expect_punct("}")?;
            let end = self.expect_punct(";")?;
            return Ok(Item::Struct(StructDef {
                name,
                is_union,
                fields,
                span: start.to(end),
            }));
        }

        let mut storage = Storage::None;
        let mut generic = None;
        loop {
            if self.eat_word("static") {
                storage = Storage::Static;
            } else if self.eat_word("extern") {
                storage = Storage::Extern;
            } else if self.eat_word("inline") {
            } else if self.is_word("_Itype_for_any") || self.is_word("_For_any") {
                self.bump();
                self.expect_punct("(")?;
                let (t, _) = self.expect_ident()?;
                self.expect_punct(")")?;
                generic = Some(t);
            } else {
                break;
            }
        }
        self.generic = generic.clone();
        let spec_start = self.span();
        let base_ty = self.parse_type_spec()?;
        let mut ty = base_ty.clone();
        while self.eat_punct("*") {
            ty.levels.insert(0, PtrKind::Unchecked);
            self.eat_word("const");
        }
        let (name, name_span) = self.expect_ident()?;
        if self.is_punct("(") {
            let f = self.parse_function_rest(
                ty, name, name_span, storage, generic, start, spec_start,
            )?;
            self.generic = None;
            return Ok(Item::Func(f));
        }
        self.generic = None;
        // global variable: re-enter the declarator path with the name consumed
        let d = self.finish_declarator(ty, name, name_span, spec_start, start, storage, true)?;
        if self.is_punct(",") {
            return self.error("`;` (one declarator per declaration)");
        }
        self.expect_punct(";")?;
        Ok(Item::Var(d))
    }

    #[allow(clippy::too_many_arguments)]
    fn parse_function_rest(
        &mut self,
        ret: TypeExpr,
        name: String,
        name_span: Span,
        storage: Storage,
        generic: Option<String>,
        start: Span,
        spec_start: Span,
    ) -> Result<FuncDecl, ParseError> {
        self.expect_punct("(")?;
        let mut params = Vec::new();
        let mut variadic = false;
        if self.is_word("void") && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.bump();
        }
        if !self.is_punct(")") {
            loop {
                if self.eat_punct("...") {
                    variadic = true;
                    break;
                }
                let pstart = self.span();
                let (pty, hstart) = self.parse_decl_specifiers()?;
                let p = self.parse_param_declarator(pty, hstart, pstart)?;
                params.push(p);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let rparen = self.expect_punct(")")?;
        let ret_annot = self.parse_annotations()?;
        let annot_end = if ret_annot.is_empty() {
            rparen.end
        } else {
            self.prev_span().end
        };
        let ret_annot_span = Span::new(self.file, rparen.end, annot_end, rparen.line);
        let checked_body = self.eat_word("_Checked");
        let ret_prefix = Span::new(self.file, spec_start.start, name_span.start, spec_start.line);
        if self.is_punct("{") {
            let body_open = self.span().start;
            let body = self.parse_block()?;
            let span = start.to(body.span);
            Ok(FuncDecl {
                name,
                name_span,
                ret,
                ret_annot,
                params,
                variadic,
                generic,
                storage,
                body: Some(body),
                checked_body,
                span,
                ret_prefix,
                ret_annot_span,
                body_open: Some(body_open),
            })
        } else {
            let end = self.expect_punct(";")?;
            Ok(FuncDecl {
                name,
                name_span,
                ret,
                ret_annot,
                params,
                variadic,
                generic,
                storage,
                body: None,
                checked_body,
                span: start.to(end),
                ret_prefix,
                ret_annot_span,
                body_open: None,
            })
        }
    }

    /// Base type (possibly a checked pointer type) and the span where the
    /// rewritable header begins.
    fn parse_decl_specifiers(&mut self) -> Result<(TypeExpr, Span), ParseError> {
        let hstart = self.span();
        let ty = self.parse_type_spec()?;
        Ok((ty, hstart))
    }

    fn parse_base(&mut self) -> Result<BaseType, ParseError> {
        let first = self.span();
        let mut kind: Option<BaseKind> = None;
        let mut saw_unsigned = false;
        let mut last = first;
        loop {
            let word = match self.peek() {
                Tok::Ident(s) => s.clone(),
                _ => break,
            };
            match word.as_str() {
                "const" => {}
                "unsigned" => saw_unsigned = true,
                "signed" => {}
                "int" => {
                    if kind.is_none() {
                        kind = Some(BaseKind::Int)
                    }
                }
                "char" => kind = Some(BaseKind::Char),
                "long" | "short" | "size_t" => kind = Some(BaseKind::Size),
                "void" => kind = Some(BaseKind::Void),
                "struct" | "union" => {
                    if kind.is_some() {
                        break;
                    }
                    self.bump();
                    let (n, sp) = self.expect_ident()?;
                    last = sp;
                    kind = Some(if word == "struct" {
                        BaseKind::Struct(n)
                    } else {
                        BaseKind::Union(n)
                    });
                    continue;
                }
                w if self.generic.as_deref() == Some(w) && kind.is_none() => {
                    kind = Some(BaseKind::Generic(w.to_string()))
                }
                _ => break,
            }
            last = self.bump().span;
        }
        let kind = match (kind, saw_unsigned) {
            (Some(BaseKind::Int), true) | (None, true) => BaseKind::Unsigned,
            (Some(k), _) => k,
            (None, false) => return self.error("type name"),
        };
        let text = self.source_text(first.start, last.end);
        Ok(BaseType { kind, text })
    }

    fn source_text(&self, start: u32, end: u32) -> String {
        // Rebuild from tokens: we do not hold the raw text here.
        let mut out = String::new();
        for t in &self.toks {
            if t.span.start >= start && t.span.end <= end {
                if !out.is_empty() {
                    out.push(' ');
                }
                match &t.tok {
                    Tok::Ident(s) => out.push_str(s),
                    Tok::Punct(p) => out.push_str(p),
                    Tok::Int(v) => out.push_str(&v.to_string()),
                    _ => {}
                }
            }
        }
        out
    }

    /// A type specifier: a base type or a checked pointer type constructor.
    fn parse_type_spec(&mut self) -> Result<TypeExpr, ParseError> {
        if let Tok::Ident(w) = self.peek() {
            if let Some((_, kind)) = CHECKED_PTRS.iter().find(|(k, _)| k == w) {
                let kind = *kind;
                self.bump();
                self.expect_punct("<")?;
                let mut inner = self.parse_type_name()?;
                self.expect_punct(">")?;
                inner.levels.insert(0, kind);
                return Ok(inner);
            }
        }
        let base = self.parse_base()?;
        Ok(TypeExpr::scalar(base))
    }

    /// Specifier followed by abstract `*`s, as in casts and type arguments.
    fn parse_type_name(&mut self) -> Result<TypeExpr, ParseError> {
        let mut ty = self.parse_type_spec()?;
        while self.eat_punct("*") {
            ty.levels.insert(0, PtrKind::Unchecked);
            self.eat_word("const");
        }
        Ok(ty)
    }

    fn parse_declarator(
        &mut self,
        mut ty: TypeExpr,
        header_start: Span,
        start: Span,
        storage: Storage,
    ) -> Result<VarDecl, ParseError> {
        while self.eat_punct("*") {
            ty.levels.insert(0, PtrKind::Unchecked);
            self.eat_word("const");
        }
        let (name, name_span) = self.expect_ident()?;
        self.finish_declarator(ty, name, name_span, header_start, start, storage, true)
    }

    fn parse_param_declarator(
        &mut self,
        mut ty: TypeExpr,
        header_start: Span,
        start: Span,
    ) -> Result<VarDecl, ParseError> {
        while self.eat_punct("*") {
            ty.levels.insert(0, PtrKind::Unchecked);
            self.eat_word("const");
        }
        let (name, name_span) = match self.peek().clone() {
            Tok::Ident(s) if !RESERVED.contains(&s.as_str()) || s == "_Checked" => {
                if s == "_Checked" {
                    (String::new(), Span::empty_at(self.file, self.span().start, self.span().line))
                } else {
                    let sp = self.bump().span;
                    (s, sp)
                }
            }
            _ => (
                String::new(),
                Span::empty_at(self.file, self.prev_span().end, self.prev_span().line),
            ),
        };
        // `int a[]` in a parameter list is a pointer
        if self.is_punct("[") && matches!(self.peek_at(1), Tok::Punct("]")) {
            self.bump();
            self.bump();
            ty.levels.insert(0, PtrKind::Unchecked);
        }
        self.finish_declarator(ty, name, name_span, header_start, start, Storage::None, false)
    }

    #[allow(clippy::too_many_arguments)]
    fn finish_declarator(
        &mut self,
        mut ty: TypeExpr,
        name: String,
        name_span: Span,
        header_start: Span,
        start: Span,
        storage: Storage,
        allow_init: bool,
    ) -> Result<VarDecl, ParseError> {
        let checked_array = self.is_word("_Checked") && matches!(self.peek_at(1), Tok::Punct("["));
        if checked_array {
            self.bump();
        }
        if self.eat_punct("[") {
            let n = match self.peek().clone() {
                Tok::Int(v) if v > 0 => {
                    self.bump();
                    v
                }
                _ => return self.error("positive array length"),
            };
            self.expect_punct("]")?;
            ty.array_len = Some(n);
            ty.array_checked = checked_array;
        } else if checked_array {
            return self.error("`[` after `_Checked`");
        }
        let annot = self.parse_annotations()?;
        let header = Span::new(
            self.file,
            header_start.start,
            self.prev_span().end,
            header_start.line,
        );
        let init = if allow_init && self.eat_punct("=") {
            Some(self.parse_assign()?)
        } else {
            None
        };
        Ok(VarDecl {
            id: self.ids.decl(),
            name,
            ty,
            annot,
            init,
            storage,
            span: start.to(self.prev_span()),
            header,
            name_span,
        })
    }

    fn parse_annotations(&mut self) -> Result<DeclAnnot, ParseError> {
        let mut annot = DeclAnnot::default();
        if !self.is_punct(":") {
            return Ok(annot);
        }
        self.bump();
        let mut any = false;
        loop {
            if self.eat_word("itype") {
                self.expect_punct("(")?;
                annot.itype = Some(self.parse_type_name()?);
                self.expect_punct(")")?;
            } else if let Some(b) = self.parse_bounds_expr()? {
                annot.bounds = Some(b);
            } else {
                break;
            }
            any = true;
        }
        if !any {
            return self.error("`itype`, `count` or `byte_count`");
        }
        Ok(annot)
    }

    fn parse_bounds_expr(&mut self) -> Result<Option<BoundsAnnot>, ParseError> {
        let kind = if self.is_word("count") {
            BoundsKind::Count
        } else if self.is_word("byte_count") {
            BoundsKind::ByteCount
        } else if self.is_word("bounds") {
            return self.error("`count` or `byte_count` (range bounds are not supported)");
        } else {
            return Ok(None);
        };
        self.bump();
        self.expect_punct("(")?;
        let expr = self.parse_expr()?;
        self.expect_punct(")")?;
        Ok(Some(BoundsAnnot { kind, expr }))
    }

    // ---------------------------------------------------------------- stmts

    fn parse_block(&mut self) -> Result<Block, ParseError> {
        let open = self.expect_punct("{")?;
        let mut stmts = Vec::new();
        while !self.is_punct("}") {
            if matches!(self.peek(), Tok::Eof) {
                return self.error("`}`");
            }
            stmts.push(self.parse_stmt()?);
        }
        let close = self.expect_punct("}")?;
        Ok(Block {
            stmts,
            span: open.to(close),
        })
    }

    fn parse_stmt(&mut self) -> Result<Stmt, ParseError> {
        let start = self.span();
        let kind = if self.is_punct("{") {
            StmtKind::Block(self.parse_block()?)
        } else if self.eat_punct(";") {
            StmtKind::Empty
        } else if self.eat_word("if") {
            self.expect_punct("(")?;
            let c = self.parse_expr()?;
            self.expect_punct(")")?;
            let t = self.parse_stmt()?;
            let e = if self.eat_word("else") {
                Some(Box::new(self.parse_stmt()?))
            } else {
                None
            };
            StmtKind::If(c, Box::new(t), e)
        } else if self.eat_word("while") {
            self.expect_punct("(")?;
            let c = self.parse_expr()?;
            self.expect_punct(")")?;
            StmtKind::While(c, Box::new(self.parse_stmt()?))
        } else if self.eat_word("for") {
            self.expect_punct("(")?;
            let init = if self.eat_punct(";") {
                None
            } else if self.at_type_start() {
                Some(Box::new(self.parse_local_decl()?))
            } else {
                let s = self.span();
                let e = self.parse_expr()?;
                self.expect_punct(";")?;
                Some(Box::new(Stmt {
                    span: s.to(self.prev_span()),
                    kind: StmtKind::Expr(e),
                }))
            };
            let cond = if self.is_punct(";") {
                None
            } else {
                Some(self.parse_expr()?)
            };
            self.expect_punct(";")?;
            let step = if self.is_punct(")") {
                None
            } else {
                Some(self.parse_expr()?)
            };
            self.expect_punct(")")?;
            let body = Box::new(self.parse_stmt()?);
            StmtKind::For {
                init,
                cond,
                step,
                body,
            }
        } else if self.eat_word("return") {
            let e = if self.is_punct(";") {
                None
            } else {
                Some(self.parse_expr()?)
            };
            self.expect_punct(";")?;
            StmtKind::Return(e)
        } else if self.eat_word("break") {
            self.expect_punct(";")?;
            StmtKind::Break
        } else if self.eat_word("continue") {
            self.expect_punct(";")?;
            StmtKind::Continue
        } else if self.at_type_start() || self.is_word("static") {
            return self.parse_local_decl();
        } else {
            let e = self.parse_expr()?;
            self.expect_punct(";")?;
            StmtKind::Expr(e)
        };
        Ok(Stmt {
            kind,
            span: start.to(self.prev_span()),
        })
    }

    fn parse_local_decl(&mut self) -> Result<Stmt, ParseError> {
        let start = self.span();
        let storage = if self.eat_word("static") {
            Storage::Static
        } else {
            Storage::None
        };
        let (ty, hstart) = self.parse_decl_specifiers()?;
        let d = self.parse_declarator(ty, hstart, start, storage)?;
        if self.is_punct(",") {
            return self.error("`;` (one declarator per declaration)");
        }
        self.expect_punct(";")?;
        Ok(Stmt {
            span: start.to(self.prev_span()),
            kind: StmtKind::Decl(d),
        })
    }

    // ---------------------------------------------------------------- exprs

    pub fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        self.parse_assign()
    }

    fn parse_assign(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.parse_cond()?;
        let op = match self.peek() {
            Tok::Punct("=") => None,
            Tok::Punct("+=") => Some(BinOp::Add),
            Tok::Punct("-=") => Some(BinOp::Sub),
            Tok::Punct("*=") => Some(BinOp::Mul),
            Tok::Punct("/=") => Some(BinOp::Div),
            Tok::Punct("%=") => Some(BinOp::Rem),
            Tok::Punct("&=") => Some(BinOp::BitAnd),
            Tok::Punct("|=") => Some(BinOp::BitOr),
            Tok::Punct("^=") => Some(BinOp::BitXor),
            Tok::Punct("<<=") => Some(BinOp::Shl),
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.parse_assign()?;
        let span = lhs.span.to(rhs.span);
        Ok(self.expr_node(
            ExprKind::Assign {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            span,
        ))
    }

    fn parse_cond(&mut self) -> Result<Expr, ParseError> {
        let c = self.parse_binary(0)?;
        if self.eat_punct("?") {
            let a = self.parse_expr()?;
            self.expect_punct(":")?;
            let b = self.parse_cond()?;
            let span = c.span.to(b.span);
            return Ok(self.expr_node(ExprKind::Cond(Box::new(c), Box::new(a), Box::new(b)), span));
        }
        Ok(c)
    }

    fn peek_binop(&self) -> Option<(BinOp, usize, usize)> {
        // (op, precedence, tokens)
        let t = self.peek();
        let r = match t {
            Tok::Punct("||") => (BinOp::Or, 1, 1),
            Tok::Punct("&&") => (BinOp::And, 2, 1),
            Tok::Punct("|") => (BinOp::BitOr, 3, 1),
            Tok::Punct("^") => (BinOp::BitXor, 4, 1),
            Tok::Punct("&") => (BinOp::BitAnd, 5, 1),
            Tok::Punct("==") => (BinOp::Eq, 6, 1),
            Tok::Punct("!=") => (BinOp::Ne, 6, 1),
            Tok::Punct("<") => (BinOp::Lt, 7, 1),
            Tok::Punct("<=") => (BinOp::Le, 7, 1),
            Tok::Punct(">=") => (BinOp::Ge, 7, 1),
            Tok::Punct(">") => {
                let next = &self.toks[(self.pos + 1).min(self.toks.len() - 1)];
                if matches!(next.tok, Tok::Punct(">")) && next.span.start == self.span().end {
                    (BinOp::Shr, 8, 2)
                } else {
                    (BinOp::Gt, 7, 1)
                }
            }
            Tok::Punct("<<") => (BinOp::Shl, 8, 1),
            Tok::Punct("+") => (BinOp::Add, 9, 1),
            Tok::Punct("-") => (BinOp::Sub, 9, 1),
            Tok::Punct("*") => (BinOp::Mul, 10, 1),
            Tok::Punct("/") => (BinOp::Div, 10, 1),
            Tok::Punct("%") => (BinOp::Rem, 10, 1),
            _ => return None,
        };
        Some(r)
    }

    fn parse_binary(&mut self, min_prec: usize) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        while let Some((op, prec, ntok)) = self.peek_binop() {
            if prec <= min_prec {
                break;
            }
            for _ in 0..ntok {
                self.bump();
            }
            let rhs = self.parse_binary(prec)?;
            let span = lhs.span.to(rhs.span);
            lhs = self.expr_node(ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), span);
        }
        Ok(lhs)
    }

    fn is_cast_start(&self) -> bool {
        if !self.is_punct("(") {
            return false;
        }
        match self.peek_at(1) {
            Tok::Ident(s) => {
                BASE_WORDS.contains(&s.as_str())
                    || CHECKED_PTRS.iter().any(|(k, _)| k == s)
                    || self.generic.as_deref() == Some(s.as_str())
            }
            _ => false,
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        let un = |p: &mut Self, k: fn(Box<Expr>) -> ExprKind| -> Result<Expr, ParseError> {
            p.bump();
            let e = p.parse_unary()?;
            let span = start.to(e.span);
            Ok(p.expr_node(k(Box::new(e)), span))
        };
        match self.peek().clone() {
            Tok::Punct("&") => un(self, ExprKind::AddrOf),
            Tok::Punct("*") => un(self, ExprKind::Deref),
            Tok::Punct("-") => un(self, |e| ExprKind::Unary(UnOp::Neg, e)),
            Tok::Punct("!") => un(self, |e| ExprKind::Unary(UnOp::Not, e)),
            Tok::Punct("~") => un(self, |e| ExprKind::Unary(UnOp::BitNot, e)),
            Tok::Punct("+") => {
                self.bump();
                self.parse_unary()
            }
            Tok::Punct(p @ ("++" | "--")) => {
                self.bump();
                let e = self.parse_unary()?;
                let span = start.to(e.span);
                Ok(self.expr_node(
                    ExprKind::IncDec {
                        inc: p == "++",
                        prefix: true,
                        operand: Box::new(e),
                    },
                    span,
                ))
            }
            Tok::Ident(w) if w == "sizeof" => {
                self.bump();
                if self.is_cast_start() {
                    self.bump();
                    let ty = self.parse_type_name()?;
                    let end = self.expect_punct(")")?;
                    Ok(self.expr_node(ExprKind::SizeofType(ty), start.to(end)))
                } else {
                    let e = self.parse_unary()?;
                    let span = start.to(e.span);
                    Ok(self.expr_node(ExprKind::SizeofExpr(Box::new(e)), span))
                }
            }
            _ if self.is_cast_start() => {
                self.bump();
                let ty = self.parse_type_name()?;
                self.expect_punct(")")?;
                let e = self.parse_unary()?;
                let span = start.to(e.span);
                Ok(self.expr_node(ExprKind::Cast(ty, Box::new(e)), span))
            }
            _ => self.parse_postfix(),
        }
    }

    fn parse_postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.parse_primary()?;
        loop {
            if self.eat_punct("[") {
                let idx = self.parse_expr()?;
                let end = self.expect_punct("]")?;
                let span = e.span.to(end);
                e = self.expr_node(ExprKind::Index(Box::new(e), Box::new(idx)), span);
            } else if self.is_punct(".") || self.is_punct("->") {
                let arrow = self.is_punct("->");
                self.bump();
                let (field, fsp) = self.expect_ident()?;
                let span = e.span.to(fsp);
                e = self.expr_node(
                    ExprKind::Member {
                        base: Box::new(e),
                        field,
                        arrow,
                    },
                    span,
                );
            } else if self.is_punct("++") || self.is_punct("--") {
                let inc = self.is_punct("++");
                let end = self.bump().span;
                let span = e.span.to(end);
                e = self.expr_node(
                    ExprKind::IncDec {
                        inc,
                        prefix: false,
                        operand: Box::new(e),
                    },
                    span,
                );
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn parse_args(&mut self) -> Result<(Vec<Expr>, Span), ParseError> {
        self.expect_punct("(")?;
        let mut args = Vec::new();
        if !self.is_punct(")") {
            loop {
                args.push(self.parse_assign()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
        }
        let end = self.expect_punct(")")?;
        Ok((args, end))
    }

    fn parse_primary(&mut self) -> Result<Expr, ParseError> {
        let start = self.span();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.bump();
                Ok(self.expr_node(ExprKind::Int(v), start))
            }
            Tok::Char(v) => {
                self.bump();
                Ok(self.expr_node(ExprKind::Char(v), start))
            }
            Tok::Str(s) => {
                self.bump();
                let mut s = s;
                let mut span = start;
                // adjacent literals concatenate
                while let Tok::Str(more) = self.peek().clone() {
                    span = span.to(self.bump().span);
                    s.push_str(&more);
                }
                Ok(self.expr_node(ExprKind::Str(s), span))
            }
            Tok::Punct("(") => {
                self.bump();
                let e = self.parse_expr()?;
                let end = self.expect_punct(")")?;
                // keep the parenthesized extent so rewrites wrap the whole thing
                Ok(Expr {
                    span: start.to(end),
                    ..e
                })
            }
            Tok::Ident(w) if w == "NULL" => {
                self.bump();
                Ok(self.expr_node(ExprKind::Null, start))
            }
            Tok::Ident(w) if w == "_Assume_bounds_cast" || w == "_Dynamic_bounds_cast" => {
                self.bump();
                self.expect_punct("<")?;
                let ty = self.parse_type_name()?;
                self.expect_punct(">")?;
                self.expect_punct("(")?;
                let inner = self.parse_assign()?;
                let bounds = if self.eat_punct(",") {
                    match self.parse_bounds_expr()? {
                        Some(b) => Some(Box::new(b)),
                        None => return self.error("`count` or `byte_count`"),
                    }
                } else {
                    None
                };
                let end = self.expect_punct(")")?;
                Ok(self.expr_node(
                    ExprKind::AssumeCast {
                        ty,
                        expr: Box::new(inner),
                        bounds,
                    },
                    start.to(end),
                ))
            }
            Tok::Ident(w) if !RESERVED.contains(&w.as_str()) => {
                self.bump();
                // generic instantiation `f<T>(...)`
                let is_type_arg = self.is_punct("<")
                    && match self.peek_at(1) {
                        Tok::Ident(s) => {
                            BASE_WORDS.contains(&s.as_str())
                                || CHECKED_PTRS.iter().any(|(k, _)| k == s)
                        }
                        _ => false,
                    };
                let type_arg = if is_type_arg {
                    self.bump();
                    let t = self.parse_type_name()?;
                    self.expect_punct(">")?;
                    if !self.is_punct("(") {
                        return self.error("`(` after type argument");
                    }
                    Some(t)
                } else {
                    None
                };
                if self.is_punct("(") {
                    let (args, end) = self.parse_args()?;
                    Ok(self.expr_node(
                        ExprKind::Call {
                            callee: w,
                            callee_span: start,
                            type_arg,
                            args,
                        },
                        start.to(end),
                    ))
                } else {
                    Ok(self.expr_node(ExprKind::Ident(w), start))
                }
            }
            _ => self.error("expression"),
        }
    }
}
