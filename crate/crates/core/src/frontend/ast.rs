//! Syntax tree for mini-C, including the checked-pointer annotation forms
//! the rewriter emits so that converted output can be analyzed again.

use serde::Serialize;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct FileId(pub u32);

/// Byte range into one source file, plus the 1-based line of its start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Span {
    pub file: FileId,
    pub start: u32,
    pub end: u32,
    pub line: u32,
}

impl Span {
    pub fn new(file: FileId, start: u32, end: u32, line: u32) -> Self {
        debug_assert!(start <= end);
        Span {
            file,
            start,
            end,
            line,
        }
    }

    pub fn to(self, other: Span) -> Span {
        Span::new(self.file, self.start, other.end.max(self.start), self.line)
    }

    pub fn empty_at(file: FileId, offset: u32, line: u32) -> Span {
        Span::new(file, offset, offset, line)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct DeclId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ExprId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BaseKind {
    Int,
    Char,
    Unsigned,
    /// `size_t`, `long` and friends.
    Size,
    Void,
    Struct(String),
    Union(String),
    /// Type variable bound by `_For_any` / `_Itype_for_any`.
    Generic(String),
}

impl BaseKind {
    pub fn is_void(&self) -> bool {
        matches!(self, BaseKind::Void)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct BaseType {
    pub kind: BaseKind,
    /// Spelling as written (e.g. `const char`), reused verbatim on rewrite.
    pub text: String,
}

/// Declared form of one pointer level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum PtrKind {
    Unchecked,
    Ptr,
    Arr,
    NtArr,
}

impl PtrKind {
    pub fn is_checked(self) -> bool {
        self != PtrKind::Unchecked
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TypeExpr {
    pub base: BaseType,
    /// Pointer levels, outermost first: `int **p` has two levels.
    pub levels: Vec<PtrKind>,
    /// `T x[n]` fixed-size array suffix.
    pub array_len: Option<i64>,
    /// Array declared with `_Checked[n]`.
    pub array_checked: bool,
}

impl TypeExpr {
    pub fn scalar(base: BaseType) -> Self {
        TypeExpr {
            base,
            levels: Vec::new(),
            array_len: None,
            array_checked: false,
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    pub fn is_pointer(&self) -> bool {
        !self.levels.is_empty()
    }

    pub fn is_scalar(&self) -> bool {
        self.levels.is_empty() && self.array_len.is_none() && !self.base.kind.is_void()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BoundsKind {
    Count,
    ByteCount,
}

impl BoundsKind {
    pub fn keyword(self) -> &'static str {
        match self {
            BoundsKind::Count => "count",
            BoundsKind::ByteCount => "byte_count",
        }
    }
}

#[derive(Debug, Clone)]
pub struct BoundsAnnot {
    pub kind: BoundsKind,
    pub expr: Expr,
}

/// The `: itype(T) count(e)` tail of a declarator.
#[derive(Debug, Clone, Default)]
pub struct DeclAnnot {
    pub itype: Option<TypeExpr>,
    pub bounds: Option<BoundsAnnot>,
}

impl DeclAnnot {
    pub fn is_empty(&self) -> bool {
        self.itype.is_none() && self.bounds.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    None,
    Static,
    Extern,
}

#[derive(Debug, Clone)]
pub struct VarDecl {
    pub id: DeclId,
    pub name: String,
    pub ty: TypeExpr,
    pub annot: DeclAnnot,
    pub init: Option<Expr>,
    pub storage: Storage,
    pub span: Span,
    /// Type specifier through the end of the declarator and its annotations.
    pub header: Span,
    pub name_span: Span,
}

#[derive(Debug, Clone)]
pub struct FuncDecl {
    pub name: String,
    pub name_span: Span,
    pub ret: TypeExpr,
    pub ret_annot: DeclAnnot,
    pub params: Vec<VarDecl>,
    pub variadic: bool,
    /// Type variable of `_Itype_for_any(T)` / `_For_any(T)`.
    pub generic: Option<String>,
    pub storage: Storage,
    pub body: Option<Block>,
    pub checked_body: bool,
    pub span: Span,
    /// From the return type specifier up to the function name.
    pub ret_prefix: Span,
    /// From just after `)` to the end of any return annotation.
    pub ret_annot_span: Span,
    /// Offset of the body's `{`, when there is a body.
    pub body_open: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct StructDef {
    pub name: String,
    pub is_union: bool,
    pub fields: Vec<VarDecl>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum Item {
    Func(FuncDecl),
    Var(VarDecl),
    Struct(StructDef),
}

#[derive(Debug, Clone)]
pub struct Block {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct Stmt {
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum StmtKind {
    Decl(VarDecl),
    Expr(Expr),
    Return(Option<Expr>),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    While(Expr, Box<Stmt>),
    For {
        init: Option<Box<Stmt>>,
        cond: Option<Expr>,
        step: Option<Expr>,
        body: Box<Stmt>,
    },
    Block(Block),
    Break,
    Continue,
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Gt,
    Le,
    Ge,
    Eq,
    Ne,
    And,
    Or,
    BitAnd,
    BitOr,
    BitXor,
    Shl,
    Shr,
}

impl BinOp {
    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge | BinOp::Eq | BinOp::Ne
        )
    }

    pub fn is_arith_or_bitwise(self) -> bool {
        !self.is_comparison() && !matches!(self, BinOp::And | BinOp::Or)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
            BinOp::BitAnd => "&",
            BinOp::BitOr => "|",
            BinOp::BitXor => "^",
            BinOp::Shl => "<<",
            BinOp::Shr => ">>",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Not,
    BitNot,
}

#[derive(Debug, Clone)]
pub struct Expr {
    pub id: ExprId,
    pub kind: ExprKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub enum ExprKind {
    Ident(String),
    Int(i64),
    Char(i64),
    Str(String),
    Null,
    Member {
        base: Box<Expr>,
        field: String,
        arrow: bool,
    },
    AddrOf(Box<Expr>),
    Deref(Box<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Assign {
        op: Option<BinOp>,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    IncDec {
        inc: bool,
        prefix: bool,
        operand: Box<Expr>,
    },
    Cast(TypeExpr, Box<Expr>),
    Call {
        callee: String,
        callee_span: Span,
        type_arg: Option<TypeExpr>,
        args: Vec<Expr>,
    },
    SizeofType(TypeExpr),
    SizeofExpr(Box<Expr>),
    AssumeCast {
        ty: TypeExpr,
        expr: Box<Expr>,
        bounds: Option<Box<BoundsAnnot>>,
    },
    Cond(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    /// Strips casts that do not change the pointer structure we care about
    /// (used when matching allocator idioms like `(int *)malloc(...)`).
    pub fn strip_casts(&self) -> &Expr {
        match &self.kind {
            ExprKind::Cast(_, inner) => inner.strip_casts(),
            _ => self,
        }
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseKind::Int => write!(f, "int"),
            BaseKind::Char => write!(f, "char"),
            BaseKind::Unsigned => write!(f, "unsigned"),
            BaseKind::Size => write!(f, "size_t"),
            BaseKind::Void => write!(f, "void"),
            BaseKind::Struct(n) => write!(f, "struct {n}"),
            BaseKind::Union(n) => write!(f, "union {n}"),
            BaseKind::Generic(n) => write!(f, "{n}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SourceFile {
    pub id: FileId,
    pub name: String,
    pub text: String,
    pub readonly: bool,
    pub prelude: bool,
}

impl SourceFile {
    pub fn slice(&self, span: Span) -> &str {
        &self.text[span.start as usize..span.end as usize]
    }
}
