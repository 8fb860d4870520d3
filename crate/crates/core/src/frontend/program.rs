//! The resolved translation unit shared by every analysis.

use std::collections::HashMap;

use super::ast::*;
use super::vars::QualVars;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct FuncId(pub u32);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct GlobalId(pub u32);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct LocalId(pub u32);
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize)]
pub struct StructId(pub u32);

/// Static type of an expression. Fixed arrays decay to pointers.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Ty {
    Scalar(BaseKind),
    Ptr(BaseKind, usize),
    Null,
    Void,
}

impl Ty {
    pub fn depth(&self) -> usize {
        match self {
            Ty::Ptr(_, d) => *d,
            _ => 0,
        }
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, Ty::Ptr(..))
    }

    pub fn base(&self) -> Option<&BaseKind> {
        match self {
            Ty::Scalar(b) | Ty::Ptr(b, _) => Some(b),
            _ => None,
        }
    }

    pub fn of_decl(t: &TypeExpr) -> Ty {
        let depth = t.depth() + usize::from(t.array_len.is_some());
        if depth == 0 {
            if t.base.kind.is_void() {
                Ty::Void
            } else {
                Ty::Scalar(t.base.kind.clone())
            }
        } else {
            Ty::Ptr(t.base.kind.clone(), depth)
        }
    }

    pub fn deref(&self) -> Option<Ty> {
        match self {
            Ty::Ptr(b, 1) if b.is_void() => Some(Ty::Void),
            Ty::Ptr(b, 1) => Some(Ty::Scalar(b.clone())),
            Ty::Ptr(b, d) => Some(Ty::Ptr(b.clone(), d - 1)),
            _ => None,
        }
    }

    pub fn addr_of(&self) -> Ty {
        match self {
            Ty::Scalar(b) => Ty::Ptr(b.clone(), 1),
            Ty::Ptr(b, d) => Ty::Ptr(b.clone(), d + 1),
            Ty::Void => Ty::Ptr(BaseKind::Void, 1),
            Ty::Null => Ty::Ptr(BaseKind::Void, 1),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StructInfo {
    pub file: FileId,
    pub def: StructDef,
    pub readonly: bool,
}

impl StructInfo {
    pub fn field(&self, name: &str) -> Option<usize> {
        self.def.fields.iter().position(|f| f.name == name)
    }
}

/// One textual declaration of a function (prototype or definition).
#[derive(Debug, Clone)]
pub struct FuncSite {
    pub file: FileId,
    pub decl: FuncDecl,
}

#[derive(Debug, Clone)]
pub struct FuncInfo {
    pub name: String,
    pub sites: Vec<FuncSite>,
    /// Index into `sites` of the definition or, failing that, the first
    /// declaration. Its parameter list is authoritative.
    pub canon: usize,
    pub prelude: bool,
    pub readonly: bool,
}

impl FuncInfo {
    pub fn decl(&self) -> &FuncDecl {
        &self.sites[self.canon].decl
    }

    pub fn file(&self) -> FileId {
        self.sites[self.canon].file
    }

    pub fn has_body(&self) -> bool {
        self.decl().body.is_some()
    }

    pub fn is_generic(&self) -> bool {
        self.decl().generic.is_some()
    }

    pub fn is_allocator(&self) -> bool {
        self.prelude && super::prelude::ALLOCATORS.contains(&self.name.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct GlobalSite {
    pub file: FileId,
    pub decl: VarDecl,
}

#[derive(Debug, Clone)]
pub struct GlobalInfo {
    pub name: String,
    pub sites: Vec<GlobalSite>,
    pub canon: usize,
    pub readonly: bool,
}

impl GlobalInfo {
    pub fn decl(&self) -> &VarDecl {
        &self.sites[self.canon].decl
    }

    /// Declared only with `extern`, never defined in the given files.
    pub fn extern_only(&self) -> bool {
        self.sites.iter().all(|s| s.decl.storage == Storage::Extern)
    }
}

#[derive(Debug, Clone)]
pub struct LocalInfo {
    pub func: FuncId,
    pub decl: VarDecl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarRef {
    Global(GlobalId),
    Local(LocalId),
    Param(FuncId, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Callee {
    Func(FuncId),
    /// No declaration anywhere in the program.
    Unknown,
}

#[derive(Debug, Default)]
pub struct Resolution {
    pub vars: HashMap<ExprId, VarRef>,
    pub calls: HashMap<ExprId, Callee>,
    pub members: HashMap<ExprId, (StructId, usize)>,
    /// Indexed by `ExprId`.
    pub types: Vec<Option<Ty>>,
    /// Enclosing function of every expression inside a body.
    pub expr_func: HashMap<ExprId, FuncId>,
}

#[derive(Debug)]
pub struct Program {
    pub files: Vec<SourceFile>,
    pub structs: Vec<StructInfo>,
    pub globals: Vec<GlobalInfo>,
    pub funcs: Vec<FuncInfo>,
    pub locals: Vec<LocalInfo>,
    pub res: Resolution,
    pub vars: QualVars,
    pub struct_by_name: HashMap<String, StructId>,
    pub func_by_name: HashMap<String, FuncId>,
    pub global_by_name: HashMap<String, GlobalId>,
    pub local_by_decl: HashMap<DeclId, LocalId>,
}

impl Program {
    pub fn func(&self, f: FuncId) -> &FuncInfo {
        &self.funcs[f.0 as usize]
    }

    pub fn global(&self, g: GlobalId) -> &GlobalInfo {
        &self.globals[g.0 as usize]
    }

    pub fn local(&self, l: LocalId) -> &LocalInfo {
        &self.locals[l.0 as usize]
    }

    pub fn strukt(&self, s: StructId) -> &StructInfo {
        &self.structs[s.0 as usize]
    }

    pub fn file(&self, f: FileId) -> &SourceFile {
        &self.files[f.0 as usize]
    }

    pub fn ty(&self, e: &Expr) -> &Ty {
        self.res.types[e.id.0 as usize]
            .as_ref()
            .expect("every expression is typed by resolution")
    }

    pub fn var_decl(&self, v: VarRef) -> &VarDecl {
        match v {
            VarRef::Global(g) => self.global(g).decl(),
            VarRef::Local(l) => &self.local(l).decl,
            VarRef::Param(f, i) => &self.func(f).decl().params[i],
        }
    }

    pub fn var_name(&self, v: VarRef) -> String {
        match v {
            VarRef::Global(g) => self.global(g).name.clone(),
            VarRef::Local(l) => {
                let li = self.local(l);
                format!("{}.{}", self.func(li.func).name, li.decl.name)
            }
            VarRef::Param(f, i) => {
                format!("{}.{}", self.func(f).name, self.func(f).decl().params[i].name)
            }
        }
    }

    /// Function definitions in declaration order.
    pub fn defined_funcs(&self) -> impl Iterator<Item = (FuncId, &FuncInfo)> {
        self.funcs
            .iter()
            .enumerate()
            .filter(|(_, f)| f.has_body())
            .map(|(i, f)| (FuncId(i as u32), f))
    }

    pub fn is_writable(&self, f: FileId) -> bool {
        !self.file(f).readonly
    }
}
