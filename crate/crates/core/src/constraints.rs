//! One walk over the program collecting the facts every analysis builds its
//! graphs from: value flows, wild seeds, pointer-type idioms, call sites,
//! allocation sites, scalar flows and index guards.

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::ast::*;
use crate::frontend::program::*;
use crate::frontend::{Owner, Program, QVarId, Role};
use crate::qualgraph::{Elem, ARR, NTARR, PTR};
use crate::rootcause::WildReason;

/// Node of the pointer flow graph (outermost pointer levels only).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PNode {
    /// A declared entity (params and returns by their external variable)
    /// or an expression temporary.
    Var(QVarId),
    /// Argument `i` at call site `c`.
    CtxArg(usize, usize),
    /// Field accessed through one base expression inside one function.
    CtxField(StructId, usize, FuncId, String),
}

/// Node of the scalar flow graph.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SNode {
    Var(VarRef),
    Field(StructId, usize),
    /// Scalar parameter `i` of a function at call site `c`.
    CtxParam(FuncId, usize, usize),
    CtxField(StructId, usize, FuncId, String),
    Const(i64),
    Ret(FuncId),
    /// A declared bound that is not a single variable or constant; it can
    /// be kept but not propagated.
    Opaque(String, Scope),
}

/// Lexical scope of a pfg or sfg node for bounds visibility.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scope {
    Global,
    Local(FuncId),
    /// Parameters of a function; `None` is the function's own view.
    Param(FuncId, Option<usize>),
    Struct(StructId, Option<(FuncId, String)>),
    /// Scalar return values; visible from nowhere.
    Return(FuncId),
}

#[derive(Debug, Clone, Default)]
pub struct Value {
    /// Qualifier variables of each pointer level, outermost first.
    pub vars: Vec<QVarId>,
    /// Set when the value comes out of an unsafe cast.
    pub wild: Option<Span>,
    pub pnode: Option<PNode>,
    /// Comes straight from a string literal.
    pub strlit: bool,
}

impl Value {
    fn of(vars: Vec<QVarId>, pnode: Option<PNode>) -> Value {
        Value {
            vars,
            pnode,
            ..Default::default()
        }
    }

    fn inner(&self) -> Value {
        Value::of(self.vars.iter().skip(1).copied().collect(), None)
    }

    pub fn outer(&self) -> Option<QVarId> {
        self.vars.first().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    Assign,
    CallArg,
    Return,
    CallResult,
}

#[derive(Debug, Clone)]
pub struct Flow {
    pub src: Value,
    pub dst: Value,
    pub kind: FlowKind,
    pub span: Span,
}

#[derive(Debug, Clone)]
pub struct CallArg {
    pub value: Value,
    pub span: Span,
    pub text: String,
    /// Scalar-flow name when the argument is a simple scalar.
    pub simple: Option<SNode>,
    pub is_pointer: bool,
}

#[derive(Debug, Clone)]
pub struct CallSite {
    pub id: usize,
    pub expr: ExprId,
    pub callee: Callee,
    pub caller: FuncId,
    pub span: Span,
    pub callee_span: Span,
    pub explicit_type_arg: bool,
    pub args: Vec<CallArg>,
    /// Temporary holding a pointer-typed result.
    pub result: Vec<QVarId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AllocSize {
    /// `malloc(e * sizeof(T))`, `malloc(sizeof(T) * e)`, `calloc(e, sizeof(T))`.
    Elems(Option<SNode>, TypeExpr),
    /// `malloc(sizeof(T))`.
    Single(TypeExpr),
    /// `malloc(e)` with `e` not a `sizeof` product.
    Bytes(Option<SNode>),
    Other,
}

#[derive(Debug, Clone)]
pub struct AllocSite {
    pub call: usize,
    pub calloc: bool,
    pub recv: Value,
    pub recv_ty: Ty,
    pub size: AllocSize,
    pub span: Span,
}

/// Bounds implied by a library itype at a call: `bzero(x, c)`.
#[derive(Debug, Clone)]
pub struct LibSeed {
    pub target: PNode,
    pub kind: BoundsKind,
    pub bound: SNode,
    pub span: Span,
}

/// A `count(e)` / `byte_count(e)` written in the source.
#[derive(Debug, Clone)]
pub struct DeclaredBound {
    pub target: PNode,
    pub kind: BoundsKind,
    pub bound: SNode,
}

#[derive(Debug, Clone)]
pub struct IndexUse {
    pub target: Option<PNode>,
    pub func: FuncId,
    pub index: Option<SNode>,
    /// Upper bounds `ub` established by enclosing guards on the index.
    pub guards: Vec<SNode>,
    pub span: Span,
}

#[derive(Debug, Clone, Default)]
pub struct BodyFacts {
    pub refs: BTreeSet<QVarId>,
    pub ptr_casts: usize,
    pub assume_casts: usize,
    pub calls: Vec<usize>,
    pub fixed_arrays: bool,
}

#[derive(Debug, Clone)]
pub struct Seed {
    pub var: QVarId,
    pub reason: WildReason,
    pub span: Span,
}

/// Ptyp idiom constraint: `Lower` means `elem ⊑ var`, `Upper` `var ⊑ elem`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bound {
    Lower(Elem),
    Upper(Elem),
}

#[derive(Debug, Clone)]
pub struct Idiom {
    pub var: QVarId,
    pub bound: Bound,
    pub reason: crate::qualgraph::EdgeReason,
    pub span: Span,
}

#[derive(Debug, Default)]
pub struct Facts {
    pub flows: Vec<Flow>,
    pub seeds: Vec<Seed>,
    pub idioms: Vec<Idiom>,
    pub calls: Vec<CallSite>,
    pub allocs: Vec<AllocSite>,
    pub lib_seeds: Vec<LibSeed>,
    pub declared_bounds: Vec<DeclaredBound>,
    pub fixed_arrays: Vec<(PNode, i64, Span)>,
    pub pfg_links: Vec<(PNode, PNode)>,
    pub sfg_edges: Vec<(SNode, SNode)>,
    pub index_uses: Vec<IndexUse>,
    /// Scalars used as operands of arithmetic or bitwise operators.
    pub arith_scalars: BTreeSet<VarRef>,
    pub bodies: BTreeMap<FuncId, BodyFacts>,
    /// Every pfg node mentioned anywhere, with its scope and struct field
    /// (for context field nodes).
    pub ctx_fields: BTreeSet<PNode>,
}

pub fn collect(prog: &Program) -> Facts {
    let mut w = Walker {
        prog,
        facts: Facts::default(),
        func: None,
        guards: Vec::new(),
    };
    w.declarations();
    for (fid, f) in prog.defined_funcs() {
        w.func = Some(fid);
        w.facts.bodies.insert(fid, BodyFacts::default());
        let body = f.decl().body.as_ref().expect("defined");
        w.block(body);
        w.func = None;
    }
    aggregate_referents(prog, &mut w.facts);
    w.facts
}

/// Null-terminated arrays of structs do not exist, so a pointer to a
/// struct or union is at least an array pointer.
fn aggregate_referents(prog: &Program, facts: &mut Facts) {
    for v in prog.vars.iter() {
        if v.role == Role::Array {
            continue;
        }
        let ty = match v.owner {
            Owner::Global(g) => Ty::of_decl(&prog.global(g).decl().ty),
            Owner::Local(l) => Ty::of_decl(&prog.local(l).decl.ty),
            Owner::Param(f, i) => Ty::of_decl(&prog.func(f).decl().params[i].ty),
            Owner::Ret(f) => Ty::of_decl(&prog.func(f).decl().ret),
            Owner::Field(s, i) => Ty::of_decl(&prog.strukt(s).def.fields[i].ty),
            Owner::AddrOf(e) | Owner::StrLit(e) | Owner::CallResult(e) | Owner::AssumeCast(e) => {
                match &prog.res.types[e.0 as usize] {
                    Some(t) => t.clone(),
                    None => continue,
                }
            }
        };
        if let Ty::Ptr(BaseKind::Struct(_) | BaseKind::Union(_), depth) = ty {
            if v.level + 1 == depth {
                facts.idioms.push(Idiom {
                    var: v.id,
                    bound: Bound::Lower(ARR),
                    reason: crate::qualgraph::EdgeReason::ElemType,
                    span: v.span,
                });
            }
        }
    }
}

/// Canonical pfg node for a variable: params and returns collapse onto
/// their external node.
pub fn pvar(prog: &Program, q: QVarId) -> PNode {
    PNode::Var(prog.vars.partner_ext(q))
}

trait PartnerExt {
    fn partner_ext(&self, q: QVarId) -> QVarId;
}

impl PartnerExt for crate::frontend::vars::QualVars {
    fn partner_ext(&self, q: QVarId) -> QVarId {
        if self.get(q).role == Role::Internal {
            self.partner(q).unwrap_or(q)
        } else {
            q
        }
    }
}

fn ptr_kind_elem(k: PtrKind) -> Option<Elem> {
    match k {
        PtrKind::Unchecked => None,
        PtrKind::Ptr => Some(PTR),
        PtrKind::Arr => Some(ARR),
        PtrKind::NtArr => Some(NTARR),
    }
}

pub fn declared_elem(k: PtrKind) -> Option<Elem> {
    ptr_kind_elem(k)
}

fn strip(e: &Expr) -> &Expr {
    e.strip_casts()
}

fn is_jump(s: &Stmt) -> bool {
    match &s.kind {
        StmtKind::Return(_) | StmtKind::Break | StmtKind::Continue => true,
        StmtKind::Block(b) => b.stmts.last().is_some_and(is_jump),
        _ => false,
    }
}

struct Walker<'p> {
    prog: &'p Program,
    facts: Facts,
    func: Option<FuncId>,
    /// (index variable, upper bound) pairs known to hold here.
    guards: Vec<(VarRef, SNode)>,
}

impl<'p> Walker<'p> {
    fn seed(&mut self, var: QVarId, reason: WildReason, span: Span) {
        self.facts.seeds.push(Seed { var, reason, span });
    }

    fn seed_all(&mut self, vars: &[QVarId], reason: WildReason, span: Span) {
        for &v in vars {
            self.seed(v, reason, span);
        }
    }

    fn body(&mut self) -> Option<&mut BodyFacts> {
        let f = self.func?;
        self.facts.bodies.get_mut(&f)
    }

    fn refer(&mut self, vars: &[QVarId]) {
        if let Some(b) = self.body() {
            b.refs.extend(vars.iter().copied());
        }
    }

    /// Seeds and declared bounds attached to declarations themselves.
    fn declarations(&mut self) {
        let prog = self.prog;
        let vars = &prog.vars;
        for (si, s) in prog.structs.iter().enumerate() {
            let sid = StructId(si as u32);
            for (fi, field) in s.def.fields.iter().enumerate() {
                let owner = Owner::Field(sid, fi);
                let levels = vars.levels(owner, Role::Plain).to_vec();
                self.decl_seeds(&levels, &field.ty, &field.annot, s.readonly, field.name_span);
                if s.def.is_union {
                    let undeclared: Vec<_> = levels
                        .iter()
                        .copied()
                        .filter(|&q| vars.get(q).declared_checked().is_none())
                        .collect();
                    self.seed_all(&undeclared, WildReason::UnionField, field.name_span);
                }
                self.declared_bound(owner, &field.annot, |w, name| {
                    w.prog
                        .strukt(sid)
                        .field(name)
                        .map(|i| SNode::Field(sid, i))
                }, Scope::Struct(sid, None));
                if let Some(n) = field.ty.array_len {
                    if let Some(a) = vars.array_node(owner) {
                        self.facts.fixed_arrays.push((PNode::Var(a), n, field.name_span));
                    }
                }
            }
        }
        for (gi, g) in prog.globals.iter().enumerate() {
            let owner = Owner::Global(GlobalId(gi as u32));
            let d = g.decl();
            let levels = vars.levels(owner, Role::Plain).to_vec();
            self.decl_seeds(&levels, &d.ty, &d.annot, g.readonly, d.name_span);
            if g.extern_only() {
                let undeclared: Vec<_> = levels
                    .iter()
                    .copied()
                    .filter(|&q| vars.get(q).declared_checked().is_none())
                    .collect();
                self.seed_all(&undeclared, WildReason::ExternGlobal, d.name_span);
            }
            self.declared_bound(owner, &d.annot, |w, name| {
                w.prog.global_by_name.get(name).map(|&g| SNode::Var(VarRef::Global(g)))
            }, Scope::Global);
            if let Some(n) = d.ty.array_len {
                if let Some(a) = vars.array_node(owner) {
                    self.facts.fixed_arrays.push((PNode::Var(a), n, d.name_span));
                }
            }
            if let Some(init) = d.init.clone() {
                let dst = self.entity_value(owner);
                let src = self.expr(&init);
                self.assign(src, dst, init.span, Some(&init));
            }
        }
        for (fi, f) in prog.funcs.iter().enumerate() {
            let fid = FuncId(fi as u32);
            let d = f.decl();
            let bodyless_extern = !f.has_body() && !f.prelude;
            for (pi, p) in d.params.iter().enumerate() {
                let owner = Owner::Param(fid, pi);
                let ext = vars.levels(owner, Role::External).to_vec();
                let int = vars.levels(owner, Role::Internal).to_vec();
                self.decl_seeds(&ext, &p.ty, &p.annot, f.readonly, p.name_span);
                if bodyless_extern && !f.readonly && p.annot.itype.is_none() {
                    let reason = if p.ty.base.kind.is_void() {
                        WildReason::DefaultVoidType
                    } else {
                        WildReason::ExternGlobal
                    };
                    let undeclared: Vec<_> = ext
                        .iter()
                        .copied()
                        .filter(|&q| vars.get(q).declared_checked().is_none())
                        .collect();
                    if reason == WildReason::ExternGlobal || !undeclared.is_empty() {
                        // void* seeds are already placed by decl_seeds
                        if reason == WildReason::ExternGlobal {
                            self.seed_all(&undeclared, reason, p.name_span);
                        }
                    }
                }
                let scope = Scope::Param(fid, None);
                self.declared_bound(owner, &p.annot, |w, name| {
                    w.prog
                        .func(fid)
                        .decl()
                        .params
                        .iter()
                        .position(|q| q.name == name)
                        .map(|i| SNode::Var(VarRef::Param(fid, i)))
                        .or_else(|| {
                            w.prog.global_by_name.get(name).map(|&g| SNode::Var(VarRef::Global(g)))
                        })
                }, scope);
                let _ = int;
            }
            let owner = Owner::Ret(fid);
            let ext = vars.levels(owner, Role::External).to_vec();
            self.decl_seeds(&ext, &d.ret, &d.ret_annot, f.readonly, d.name_span);
            if bodyless_extern && !f.readonly && d.ret_annot.itype.is_none() && !d.ret.base.kind.is_void() {
                let undeclared: Vec<_> = ext
                    .iter()
                    .copied()
                    .filter(|&q| vars.get(q).declared_checked().is_none())
                    .collect();
                self.seed_all(&undeclared, WildReason::ExternGlobal, d.name_span);
            }
            self.declared_bound(owner, &d.ret_annot, |w, name| {
                w.prog
                    .func(fid)
                    .decl()
                    .params
                    .iter()
                    .position(|q| q.name == name)
                    .map(|i| SNode::Var(VarRef::Param(fid, i)))
                    .or_else(|| w.prog.global_by_name.get(name).map(|&g| SNode::Var(VarRef::Global(g))))
            }, Scope::Param(fid, None));
        }
    }

    /// Seeds every declaration gets regardless of how it is used.
    fn decl_seeds(
        &mut self,
        levels: &[QVarId],
        ty: &TypeExpr,
        annot: &DeclAnnot,
        readonly: bool,
        span: Span,
    ) {
        if levels.is_empty() {
            return;
        }
        let vars = &self.prog.vars;
        if annot.itype.is_some() {
            return;
        }
        if readonly {
            let undeclared: Vec<_> = levels
                .iter()
                .copied()
                .filter(|&q| vars.get(q).declared_checked().is_none())
                .collect();
            if !self.prog.file(span.file).prelude {
                self.seed_all(&undeclared, WildReason::NonWritableFile, span);
            }
            return;
        }
        if ty.base.kind.is_void() {
            let last = *levels.last().expect("nonempty");
            if vars.get(last).declared_checked().is_none() {
                self.seed(last, WildReason::DefaultVoidType, span);
            }
        }
    }

    fn declared_bound(
        &mut self,
        owner: Owner,
        annot: &DeclAnnot,
        lookup: impl Fn(&Self, &str) -> Option<SNode>,
        scope: Scope,
    ) {
        let Some(b) = &annot.bounds else { return };
        let Some(target) = self.owner_pnode(owner) else { return };
        let bound = match &strip(&b.expr).kind {
            ExprKind::Ident(n) => lookup(self, n),
            ExprKind::Int(v) | ExprKind::Char(v) => Some(SNode::Const(*v)),
            _ => None,
        };
        let bound = bound.unwrap_or_else(|| {
            let text = self.prog.file(b.expr.span.file).slice(b.expr.span).to_string();
            SNode::Opaque(text.trim().to_string(), scope)
        });
        self.facts.declared_bounds.push(DeclaredBound {
            target,
            kind: b.kind,
            bound,
        });
    }

    fn owner_pnode(&self, owner: Owner) -> Option<PNode> {
        let outside = self.prog.vars.outside(owner);
        outside.first().map(|&q| PNode::Var(q))
    }

    fn entity_value(&self, owner: Owner) -> Value {
        let vars = self.prog.vars.inside(owner);
        let pnode = vars.first().map(|&q| pvar(self.prog, q));
        Value::of(vars, pnode)
    }

    fn var_value(&self, v: VarRef) -> Value {
        self.entity_value(Owner::of_var(v))
    }

    /// Name in the scalar flow graph for simple scalar expressions.
    fn snode(&mut self, e: &Expr) -> Option<SNode> {
        let e = strip(e);
        match &e.kind {
            ExprKind::Ident(_) => {
                let v = *self.prog.res.vars.get(&e.id)?;
                if self.prog.ty(e).is_pointer() {
                    return None;
                }
                Some(SNode::Var(v))
            }
            ExprKind::Int(v) | ExprKind::Char(v) => Some(SNode::Const(*v)),
            ExprKind::Member { base, .. } => {
                if self.prog.ty(e).is_pointer() {
                    return None;
                }
                let (sid, fi) = *self.prog.res.members.get(&e.id)?;
                let func = self.func?;
                let text = normalize(self.prog.file(base.span.file).slice(base.span));
                let ctx = SNode::CtxField(sid, fi, func, text);
                self.facts.sfg_edges.push((ctx.clone(), SNode::Field(sid, fi)));
                Some(ctx)
            }
            _ => None,
        }
    }

    fn note_arith(&mut self, e: &Expr) {
        if let ExprKind::Ident(_) = &strip(e).kind {
            if let Some(&v) = self.prog.res.vars.get(&strip(e).id) {
                if !self.prog.ty(strip(e)).is_pointer() {
                    self.facts.arith_scalars.insert(v);
                }
            }
        }
    }

    fn idiom(&mut self, v: &Value, bound: Bound, reason: crate::qualgraph::EdgeReason, span: Span) {
        if let Some(q) = v.outer() {
            self.facts.idioms.push(Idiom {
                var: q,
                bound,
                reason,
                span,
            });
        }
    }

    fn flow(&mut self, src: Value, dst: Value, kind: FlowKind, span: Span) {
        if (src.vars.is_empty() && src.wild.is_none()) || dst.vars.is_empty() {
            return;
        }
        self.facts.flows.push(Flow {
            src,
            dst,
            kind,
            span,
        });
    }

    /// `dst = src` (or an initializer), including allocator idioms.
    fn assign(&mut self, src: Value, dst: Value, span: Span, rhs: Option<&Expr>) {
        if let Some(rhs) = rhs {
            self.check_implicit(&src, &dst, rhs, span);
            if let ExprKind::Call { .. } = &strip(rhs).kind {
                if let Some(site) = self.facts.calls.iter().rposition(|c| c.expr == strip(rhs).id) {
                    self.alloc_site(site, strip(rhs), &dst, span);
                }
            }
        }
        self.flow(src, dst, FlowKind::Assign, span);
    }

    /// Pointer assignments between incompatible types without a cast.
    fn check_implicit(&mut self, src: &Value, dst: &Value, rhs: &Expr, span: Span) {
        if dst.vars.is_empty() {
            return;
        }
        let rt = self.prog.ty(rhs).clone();
        match &rt {
            Ty::Scalar(_) => {
                if !matches!(strip(rhs).kind, ExprKind::Int(0)) {
                    self.seed_all(&dst.vars.clone(), WildReason::InvalidCast, span);
                }
            }
            Ty::Ptr(..) if !src.vars.is_empty() && src.vars.len() != dst.vars.len() => {
                if !self.is_alloc_call(strip(rhs)) && !self.is_void_ptr(&rt) {
                    self.seed_all(&src.vars.clone(), WildReason::InvalidCast, span);
                    self.seed_all(&dst.vars.clone(), WildReason::InvalidCast, span);
                }
            }
            _ => {}
        }
    }

    fn is_void_ptr(&self, t: &Ty) -> bool {
        matches!(t, Ty::Ptr(BaseKind::Void, 1))
    }

    fn is_alloc_call(&self, e: &Expr) -> bool {
        match self.prog.res.calls.get(&e.id) {
            Some(Callee::Func(f)) => self.prog.func(*f).is_allocator(),
            _ => false,
        }
    }

    fn alloc_site(&mut self, site: usize, call: &Expr, recv: &Value, span: Span) {
        let ExprKind::Call { args, .. } = &call.kind else { return };
        let Some(Callee::Func(f)) = self.prog.res.calls.get(&call.id).copied() else {
            return;
        };
        let info = self.prog.func(f);
        if !info.is_allocator() {
            return;
        }
        let calloc = info.name == "calloc";
        let size = if calloc {
            match (args.first(), args.get(1).map(strip).map(|e| &e.kind)) {
                (Some(n), Some(ExprKind::SizeofType(t))) => AllocSize::Elems(self.snode(n), t.clone()),
                _ => AllocSize::Other,
            }
        } else {
            match args.first().map(strip) {
                Some(a) => match &a.kind {
                    ExprKind::SizeofType(t) => AllocSize::Single(t.clone()),
                    ExprKind::Binary(BinOp::Mul, l, r) => match (&strip(l).kind, &strip(r).kind) {
                        (_, ExprKind::SizeofType(t)) => AllocSize::Elems(self.snode(l), t.clone()),
                        (ExprKind::SizeofType(t), _) => AllocSize::Elems(self.snode(r), t.clone()),
                        _ => AllocSize::Bytes(None),
                    },
                    _ => AllocSize::Bytes(self.snode(a)),
                },
                None => AllocSize::Other,
            }
        };
        let recv_ty = self.recv_ty(recv);
        if let AllocSize::Elems(_, t) | AllocSize::Single(t) = &size {
            let elem = Ty::of_decl(t);
            let pointee = recv_ty.deref();
            let matches = match (&pointee, &elem) {
                (Some(p), e) => p == e || recv_ty.base().is_some_and(|b| b.is_void()),
                (None, _) => true,
            };
            if !matches {
                self.seed_all(&recv.vars.clone(), WildReason::UnsafeAllocatorCall, span);
            }
        }
        self.facts.allocs.push(AllocSite {
            call: site,
            calloc,
            recv: recv.clone(),
            recv_ty,
            size,
            span,
        });
    }

    fn recv_ty(&self, recv: &Value) -> Ty {
        let Some(q) = recv.outer() else { return Ty::Void };
        let v = self.prog.vars.get(q);
        let decl_ty = match v.owner {
            Owner::Global(g) => Some(&self.prog.global(g).decl().ty),
            Owner::Local(l) => Some(&self.prog.local(l).decl.ty),
            Owner::Param(f, i) => Some(&self.prog.func(f).decl().params[i].ty),
            Owner::Ret(f) => Some(&self.prog.func(f).decl().ret),
            Owner::Field(s, i) => Some(&self.prog.strukt(s).def.fields[i].ty),
            _ => None,
        };
        match decl_ty {
            Some(t) => {
                let full = Ty::of_decl(t);
                // strip the levels above this variable
                let mut ty = full;
                for _ in 0..v.level {
                    ty = ty.deref().unwrap_or(Ty::Void);
                }
                ty
            }
            None => Ty::Void,
        }
    }

    // ------------------------------------------------------------ statements

    fn block(&mut self, b: &Block) {
        let mark = self.guards.len();
        for s in &b.stmts {
            self.stmt(s);
            // `if (i >= ub) return;` guards the rest of the block
            if let StmtKind::If(c, t, None) = &s.kind {
                if is_jump(t) {
                    let gs = self.guard_pairs(c, true);
                    self.guards.extend(gs);
                }
            }
        }
        self.guards.truncate(mark);
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl(d) => self.local_decl(d),
            StmtKind::Expr(e) => {
                self.expr(e);
            }
            StmtKind::Return(Some(e)) => {
                let v = self.expr(e);
                let f = self.func.expect("in function");
                let ret = self.entity_value(Owner::Ret(f));
                self.check_implicit(&v, &ret, e, e.span);
                if let Some(n) = self.snode(e) {
                    self.facts.sfg_edges.push((n, SNode::Ret(f)));
                }
                self.flow(v, ret, FlowKind::Return, e.span);
            }
            StmtKind::Return(None) | StmtKind::Break | StmtKind::Continue | StmtKind::Empty => {}
            StmtKind::If(c, t, e) => {
                self.expr(c);
                let gs = self.guard_pairs(c, false);
                let mark = self.guards.len();
                self.guards.extend(gs);
                self.stmt(t);
                self.guards.truncate(mark);
                if let Some(e) = e {
                    self.stmt(e);
                }
            }
            StmtKind::While(c, b) => {
                self.expr(c);
                let gs = self.guard_pairs(c, false);
                let mark = self.guards.len();
                self.guards.extend(gs);
                self.stmt(b);
                self.guards.truncate(mark);
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                if let Some(i) = init {
                    self.stmt(i);
                }
                let mark = self.guards.len();
                if let Some(c) = cond {
                    self.expr(c);
                    let gs = self.guard_pairs(c, false);
                    self.guards.extend(gs);
                }
                self.stmt(body);
                if let Some(st) = step {
                    self.expr(st);
                }
                self.guards.truncate(mark);
            }
            StmtKind::Block(b) => self.block(b),
        }
    }

    /// `(i, ub)` pairs from `i < ub` conjuncts, or from `i >= ub` when
    /// `negated` (an early-exit test).
    fn guard_pairs(&mut self, c: &Expr, negated: bool) -> Vec<(VarRef, SNode)> {
        let mut out = Vec::new();
        match &c.kind {
            ExprKind::Binary(BinOp::And, a, b) if !negated => {
                out.extend(self.guard_pairs(a, false));
                out.extend(self.guard_pairs(b, false));
            }
            ExprKind::Binary(BinOp::Or, a, b) if negated => {
                out.extend(self.guard_pairs(a, true));
                out.extend(self.guard_pairs(b, true));
            }
            ExprKind::Binary(op, a, b) => {
                let (idx, ub) = match (op, negated) {
                    (BinOp::Lt, false) | (BinOp::Ge, true) => (a, b),
                    (BinOp::Gt, false) | (BinOp::Le, true) => (b, a),
                    _ => return out,
                };
                if let (ExprKind::Ident(_), Some(ub)) = (&strip(idx).kind, self.snode(ub)) {
                    if let Some(&v) = self.prog.res.vars.get(&strip(idx).id) {
                        out.push((v, ub));
                    }
                }
            }
            _ => {}
        }
        out
    }

    fn local_decl(&mut self, d: &VarDecl) {
        let prog = self.prog;
        let lid = *prog.local_by_decl.get(&d.id).expect("resolved local");
        let owner = Owner::Local(lid);
        let levels = prog.vars.levels(owner, Role::Plain).to_vec();
        let readonly = prog.file(d.span.file).readonly;
        self.decl_seeds(&levels, &d.ty, &d.annot, readonly, d.name_span);
        let func = self.func.expect("in function");
        self.declared_bound(owner, &d.annot, |w, name| w.lookup_scalar(func, name, d.id), Scope::Local(func));
        if let Some(n) = d.ty.array_len {
            if let Some(a) = prog.vars.array_node(owner) {
                self.facts.fixed_arrays.push((PNode::Var(a), n, d.name_span));
            }
            if let Some(b) = self.body() {
                b.fixed_arrays = true;
            }
        }
        let dst = self.entity_value(owner);
        self.refer(&dst.vars.clone());
        if let Some(init) = &d.init {
            let src = self.expr(init);
            if dst.vars.is_empty() {
                if let Some(n) = self.snode(init) {
                    self.facts.sfg_edges.push((SNode::Var(VarRef::Local(lid)), n));
                }
            }
            self.assign(src, dst, init.span, Some(init));
        }
    }

    /// Resolves a name used in a local's bounds annotation.
    fn lookup_scalar(&self, func: FuncId, name: &str, before: DeclId) -> Option<SNode> {
        let prog = self.prog;
        let local = prog
            .locals
            .iter()
            .enumerate()
            .filter(|(_, l)| l.func == func && l.decl.name == name && l.decl.id < before)
            .map(|(i, _)| LocalId(i as u32))
            .last();
        if let Some(l) = local {
            return Some(SNode::Var(VarRef::Local(l)));
        }
        if let Some(i) = prog.func(func).decl().params.iter().position(|p| p.name == name) {
            return Some(SNode::Var(VarRef::Param(func, i)));
        }
        prog.global_by_name.get(name).map(|&g| SNode::Var(VarRef::Global(g)))
    }

    // ----------------------------------------------------------- expressions

    fn expr(&mut self, e: &Expr) -> Value {
        let prog = self.prog;
        match &e.kind {
            ExprKind::Ident(_) => {
                let v = prog.res.vars[&e.id];
                let val = self.var_value(v);
                self.refer(&val.vars.clone());
                val
            }
            ExprKind::Int(_) | ExprKind::Char(_) | ExprKind::Null | ExprKind::SizeofType(_) => {
                Value::default()
            }
            ExprKind::SizeofExpr(_) => Value::default(),
            ExprKind::Str(_) => {
                let vars = prog.vars.levels(Owner::StrLit(e.id), Role::Plain).to_vec();
                self.refer(&vars);
                let mut v = Value::of(vars.clone(), vars.first().map(|&q| PNode::Var(q)));
                v.strlit = true;
                self.idiom(&v, Bound::Lower(NTARR), crate::qualgraph::EdgeReason::StrLit, e.span);
                self.idiom(&v, Bound::Upper(NTARR), crate::qualgraph::EdgeReason::StrLit, e.span);
                v
            }
            ExprKind::Member { base, .. } => {
                self.expr(base);
                let (sid, fi) = prog.res.members[&e.id];
                let vars = prog.vars.value_levels(Owner::Field(sid, fi), Role::Plain);
                self.refer(&vars);
                let pnode = match (self.func, vars.first()) {
                    (Some(func), Some(&q)) => {
                        let text = normalize(prog.file(base.span.file).slice(base.span));
                        let ctx = PNode::CtxField(sid, fi, func, text);
                        self.facts.pfg_links.push((ctx.clone(), PNode::Var(q)));
                        self.facts.ctx_fields.insert(ctx.clone());
                        Some(ctx)
                    }
                    (None, Some(&q)) => Some(PNode::Var(q)),
                    _ => None,
                };
                if self.func.is_some() && !prog.ty(e).is_pointer() {
                    // scalar field: make sure its ctx node is linked
                    self.snode(e);
                }
                Value::of(vars, pnode)
            }
            ExprKind::AddrOf(x) => {
                let sx = strip(x);
                match &sx.kind {
                    ExprKind::Index(a, i) => {
                        let av = self.expr(a);
                        self.expr(i);
                        self.idiom(&av, Bound::Upper(ARR), crate::qualgraph::EdgeReason::Arith, e.span);
                        Value::of(av.vars, None)
                    }
                    ExprKind::Deref(p) => {
                        let v = self.expr(p);
                        Value::of(v.vars, v.pnode)
                    }
                    _ => {
                        let inner = self.expr(x);
                        let t = prog.vars.levels(Owner::AddrOf(e.id), Role::Plain).to_vec();
                        self.refer(&t);
                        let mut vars = t.clone();
                        vars.extend(inner.vars.iter().copied());
                        let v = Value::of(vars, t.first().map(|&q| PNode::Var(q)));
                        self.idiom(&v, Bound::Lower(PTR), crate::qualgraph::EdgeReason::AddrOf, e.span);
                        v
                    }
                }
            }
            ExprKind::Deref(x) => self.expr(x).inner(),
            ExprKind::Index(a, i) => {
                let av = self.expr(a);
                self.expr(i);
                self.idiom(&av, Bound::Upper(ARR), crate::qualgraph::EdgeReason::Index, e.span);
                if let Some(func) = self.func {
                    let index = self.snode(i);
                    let guards = match &index {
                        Some(SNode::Var(v)) => self
                            .guards
                            .iter()
                            .filter(|(g, _)| g == v)
                            .map(|(_, ub)| ub.clone())
                            .collect(),
                        _ => Vec::new(),
                    };
                    self.facts.index_uses.push(IndexUse {
                        target: av.pnode.clone(),
                        func,
                        index,
                        guards,
                        span: e.span,
                    });
                }
                av.inner()
            }
            ExprKind::Unary(op, x) => {
                if matches!(op, UnOp::Neg | UnOp::BitNot) {
                    self.note_arith(x);
                }
                self.expr(x);
                Value::default()
            }
            ExprKind::Binary(op, a, b) => {
                let va = self.expr(a);
                let vb = self.expr(b);
                if op.is_arith_or_bitwise() {
                    self.note_arith(a);
                    self.note_arith(b);
                }
                match op {
                    BinOp::Add | BinOp::Sub if prog.ty(e).is_pointer() => {
                        let p = if prog.ty(a).is_pointer() { va } else { vb };
                        self.idiom(&p, Bound::Upper(ARR), crate::qualgraph::EdgeReason::Arith, e.span);
                        Value::of(p.vars, None)
                    }
                    BinOp::Sub if prog.ty(a).is_pointer() => {
                        self.idiom(&va, Bound::Upper(ARR), crate::qualgraph::EdgeReason::Arith, e.span);
                        self.idiom(&vb, Bound::Upper(ARR), crate::qualgraph::EdgeReason::Arith, e.span);
                        Value::default()
                    }
                    _ => Value::default(),
                }
            }
            ExprKind::Assign { op, lhs, rhs } => {
                let dst = self.expr(lhs);
                let src = self.expr(rhs);
                match op {
                    None => {
                        if dst.vars.is_empty() {
                            if let (Some(l), Some(r)) = (self.snode(lhs), self.snode(rhs)) {
                                if matches!(l, SNode::Var(_) | SNode::CtxField(..)) {
                                    self.facts.sfg_edges.push((l, r));
                                }
                            }
                        }
                        self.assign(src, dst.clone(), e.span, Some(rhs));
                    }
                    Some(op) => {
                        if op.is_arith_or_bitwise() {
                            self.note_arith(lhs);
                            self.note_arith(rhs);
                        }
                        if prog.ty(lhs).is_pointer() {
                            self.idiom(&dst, Bound::Upper(ARR), crate::qualgraph::EdgeReason::Arith, e.span);
                        }
                    }
                }
                dst
            }
            ExprKind::IncDec { operand, .. } => {
                let v = self.expr(operand);
                self.note_arith(operand);
                if prog.ty(operand).is_pointer() {
                    self.idiom(&v, Bound::Upper(ARR), crate::qualgraph::EdgeReason::Arith, e.span);
                }
                Value::of(v.vars, None)
            }
            ExprKind::Cast(t, x) => self.cast(e, t, x),
            ExprKind::Call { .. } => self.call(e),
            ExprKind::AssumeCast { expr, .. } => {
                self.expr(expr);
                if let Some(b) = self.body() {
                    b.assume_casts += 1;
                }
                let vars = prog.vars.levels(Owner::AssumeCast(e.id), Role::Plain).to_vec();
                self.refer(&vars);
                Value::of(vars.clone(), vars.first().map(|&q| PNode::Var(q)))
            }
            ExprKind::Cond(c, a, b) => {
                self.expr(c);
                let va = self.expr(a);
                let vb = self.expr(b);
                if va.vars.is_empty() {
                    return vb;
                }
                self.flow(vb, va.clone(), FlowKind::Assign, e.span);
                Value::of(va.vars, None)
            }
        }
    }

    fn cast(&mut self, e: &Expr, t: &TypeExpr, x: &Expr) -> Value {
        let prog = self.prog;
        let inner = self.expr(x);
        let target = Ty::of_decl(t);
        let source = prog.ty(x).clone();
        if target.is_pointer() || source.is_pointer() {
            if let Some(b) = self.body() {
                b.ptr_casts += 1;
            }
        }
        let null = matches!(strip(x).kind, ExprKind::Int(0) | ExprKind::Null);
        match (&target, &source) {
            (Ty::Ptr(..), _) if null => Value::default(),
            (Ty::Ptr(..), Ty::Ptr(..)) if self.is_alloc_call(strip(x)) => inner,
            (Ty::Ptr(tb, td), Ty::Ptr(sb, sd)) => {
                if tb == sb && td == sd && !tb.is_void() {
                    inner
                } else {
                    self.seed_all(&inner.vars, WildReason::InvalidCast, e.span);
                    Value {
                        wild: Some(e.span),
                        ..Default::default()
                    }
                }
            }
            (Ty::Ptr(..), _) => Value {
                wild: Some(e.span),
                ..Default::default()
            },
            (_, Ty::Ptr(..)) => {
                self.seed_all(&inner.vars, WildReason::InvalidCast, e.span);
                Value::default()
            }
            _ => Value::default(),
        }
    }

    fn call(&mut self, e: &Expr) -> Value {
        let prog = self.prog;
        let ExprKind::Call {
            callee_span,
            type_arg,
            args,
            ..
        } = &e.kind
        else {
            unreachable!()
        };
        let callee = prog.res.calls[&e.id];
        let caller = self.func.expect("calls only occur in bodies");
        let id = self.facts.calls.len();
        let mut cargs = Vec::new();
        for a in args {
            let value = self.expr(a);
            let simple = self.snode(a);
            cargs.push(CallArg {
                value,
                span: a.span,
                text: prog.file(a.span.file).slice(a.span).to_string(),
                simple,
                is_pointer: prog.ty(a).is_pointer(),
            });
        }
        let result = prog.vars.levels(Owner::CallResult(e.id), Role::Plain).to_vec();
        self.refer(&result);
        if let Some(b) = self.body() {
            b.calls.push(id);
        }
        self.facts.calls.push(CallSite {
            id,
            expr: e.id,
            callee,
            caller,
            span: e.span,
            callee_span: *callee_span,
            explicit_type_arg: type_arg.is_some(),
            args: cargs.clone(),
            result: result.clone(),
        });
        match callee {
            Callee::Unknown => {
                for a in &cargs {
                    self.seed_all(&a.value.vars, WildReason::ExternGlobal, a.span);
                }
                Value::default()
            }
            Callee::Func(f) => {
                let info = prog.func(f);
                let d = info.decl();
                for (i, a) in cargs.iter().enumerate() {
                    if i >= d.params.len() {
                        self.seed_all(&a.value.vars, WildReason::VariadicCall, a.span);
                        continue;
                    }
                    let owner = Owner::Param(f, i);
                    let ext = prog.vars.levels(owner, Role::External).to_vec();
                    if !ext.is_empty() {
                        let ctx = PNode::CtxArg(id, i);
                        self.facts.pfg_links.push((ctx.clone(), PNode::Var(ext[0])));
                        let dst = Value::of(ext, Some(ctx));
                        if let Some(ae) = args.get(i) {
                            self.check_implicit(&a.value, &dst, ae, a.span);
                        }
                        self.flow(a.value.clone(), dst, FlowKind::CallArg, a.span);
                    } else if let Some(n) = &a.simple {
                        let ctx = SNode::CtxParam(f, i, id);
                        self.facts.sfg_edges.push((n.clone(), ctx.clone()));
                        self.facts.sfg_edges.push((ctx, SNode::Var(VarRef::Param(f, i))));
                    }
                    // bounds a bodiless callee promises through its itypes
                    if !info.has_body() {
                        if let (Some(b), Some(target)) = (&d.params[i].annot.bounds, &a.value.pnode) {
                            if let ExprKind::Ident(n) = &strip(&b.expr).kind {
                                let j = d.params.iter().position(|p| &p.name == n);
                                if let Some(bound) = j.and_then(|j| cargs.get(j)).and_then(|c| c.simple.clone()) {
                                    self.facts.lib_seeds.push(LibSeed {
                                        target: target.clone(),
                                        kind: b.kind,
                                        bound,
                                        span: e.span,
                                    });
                                }
                            }
                        }
                    }
                }
                if result.is_empty() {
                    return Value::default();
                }
                let pnode = Some(PNode::Var(result[0]));
                let v = Value::of(result.clone(), pnode);
                if info.is_allocator() {
                    let single = matches!(args.first().map(strip).map(|a| &a.kind), Some(ExprKind::SizeofType(_)));
                    if info.name != "calloc" && !single {
                        self.idiom(&v, Bound::Lower(ARR), crate::qualgraph::EdgeReason::Alloc, e.span);
                    }
                } else {
                    let ret = prog.vars.levels(Owner::Ret(f), Role::External).to_vec();
                    let pn = ret.first().map(|&q| PNode::Var(q));
                    self.flow(Value::of(ret, pn), v.clone(), FlowKind::CallResult, e.span);
                }
                v
            }
        }
    }
}

/// Source text with all whitespace removed, for grouping and comparison.
pub fn normalize(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}
