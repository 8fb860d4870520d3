//! Name resolution and expression typing.

use std::collections::HashMap;

use super::ast::*;
use super::program::*;
use super::vars::QualVars;
use super::ParseError;

pub fn walk_expr(e: &Expr, f: &mut dyn FnMut(&Expr)) {
    f(e);
    match &e.kind {
        ExprKind::Ident(_)
        | ExprKind::Int(_)
        | ExprKind::Char(_)
        | ExprKind::Str(_)
        | ExprKind::Null
        | ExprKind::SizeofType(_) => {}
        ExprKind::Member { base, .. } => walk_expr(base, f),
        ExprKind::AddrOf(x)
        | ExprKind::Deref(x)
        | ExprKind::Unary(_, x)
        | ExprKind::Cast(_, x)
        | ExprKind::SizeofExpr(x) => walk_expr(x, f),
        ExprKind::IncDec { operand, .. } => walk_expr(operand, f),
        ExprKind::Index(a, b) | ExprKind::Binary(_, a, b) => {
            walk_expr(a, f);
            walk_expr(b, f);
        }
        ExprKind::Assign { lhs, rhs, .. } => {
            walk_expr(lhs, f);
            walk_expr(rhs, f);
        }
        ExprKind::Call { args, .. } => {
            for a in args {
                walk_expr(a, f);
            }
        }
        ExprKind::AssumeCast { expr, .. } => walk_expr(expr, f),
        ExprKind::Cond(a, b, c) => {
            walk_expr(a, f);
            walk_expr(b, f);
            walk_expr(c, f);
        }
    }
}

pub fn walk_stmt(s: &Stmt, f: &mut dyn FnMut(&Expr)) {
    match &s.kind {
        StmtKind::Decl(d) => {
            if let Some(e) = &d.init {
                walk_expr(e, f)
            }
        }
        StmtKind::Expr(e) => walk_expr(e, f),
        StmtKind::Return(e) => {
            if let Some(e) = e {
                walk_expr(e, f)
            }
        }
        StmtKind::If(c, t, e) => {
            walk_expr(c, f);
            walk_stmt(t, f);
            if let Some(e) = e {
                walk_stmt(e, f);
            }
        }
        StmtKind::While(c, b) => {
            walk_expr(c, f);
            walk_stmt(b, f);
        }
        StmtKind::For {
            init,
            cond,
            step,
            body,
        } => {
            if let Some(i) = init {
                walk_stmt(i, f);
            }
            if let Some(c) = cond {
                walk_expr(c, f);
            }
            if let Some(s) = step {
                walk_expr(s, f);
            }
            walk_stmt(body, f);
        }
        StmtKind::Block(b) => walk_block_exprs(b, f),
        StmtKind::Break | StmtKind::Continue | StmtKind::Empty => {}
    }
}

/// Visits every expression (and subexpression) of a block in source order.
pub fn walk_block_exprs(b: &Block, f: &mut dyn FnMut(&Expr)) {
    for s in &b.stmts {
        walk_stmt(s, f);
    }
}

type Fail = (Vec<SourceFile>, ParseError);

struct Resolver {
    prog: Program,
    scopes: Vec<HashMap<String, LocalId>>,
    cur: Option<FuncId>,
    params: HashMap<String, usize>,
}

pub fn resolve(
    files: Vec<SourceFile>,
    asts: Vec<(FileId, Vec<Item>)>,
    n_exprs: u32,
) -> Result<Program, Fail> {
    let mut prog = Program {
        files,
        structs: Vec::new(),
        globals: Vec::new(),
        funcs: Vec::new(),
        locals: Vec::new(),
        res: Resolution {
            types: vec![None; n_exprs as usize],
            ..Default::default()
        },
        vars: QualVars::default(),
        struct_by_name: HashMap::new(),
        func_by_name: HashMap::new(),
        global_by_name: HashMap::new(),
        local_by_decl: HashMap::new(),
    };
    if let Err(e) = collect(&mut prog, asts) {
        return Err((prog.files, e));
    }
    let mut r = Resolver {
        prog,
        scopes: Vec::new(),
        cur: None,
        params: HashMap::new(),
    };
    if let Err(e) = r.run() {
        return Err((r.prog.files, e));
    }
    let mut prog = r.prog;
    prog.vars = QualVars::build(&prog);
    Ok(prog)
}

fn collect(prog: &mut Program, asts: Vec<(FileId, Vec<Item>)>) -> Result<(), ParseError> {
    for (file, items) in asts {
        let readonly = prog.file(file).readonly;
        let prelude = prog.file(file).prelude;
        for item in items {
            match item {
                Item::Struct(def) => {
                    if prog.struct_by_name.contains_key(&def.name) {
                        return Err(ParseError::Duplicate {
                            file,
                            line: def.span.line,
                            name: def.name,
                        });
                    }
                    let mut seen = HashMap::new();
                    for f in &def.fields {
                        if seen.insert(f.name.clone(), ()).is_some() {
                            return Err(ParseError::Duplicate {
                                file,
                                line: f.span.line,
                                name: format!("{}.{}", def.name, f.name),
                            });
                        }
                    }
                    let id = StructId(prog.structs.len() as u32);
                    prog.struct_by_name.insert(def.name.clone(), id);
                    prog.structs.push(StructInfo {
                        file,
                        def,
                        readonly,
                    });
                }
                Item::Func(decl) => {
                    if prog.global_by_name.contains_key(&decl.name) {
                        return Err(ParseError::Duplicate {
                            file,
                            line: decl.span.line,
                            name: decl.name,
                        });
                    }
                    let site = FuncSite { file, decl };
                    match prog.func_by_name.get(&site.decl.name) {
                        Some(&fid) => {
                            let info = &mut prog.funcs[fid.0 as usize];
                            let has_body = site.decl.body.is_some();
                            if has_body && info.has_body() {
                                return Err(ParseError::Duplicate {
                                    file,
                                    line: site.decl.span.line,
                                    name: site.decl.name,
                                });
                            }
                            if site.decl.params.len() != info.decl().params.len()
                                || site.decl.variadic != info.decl().variadic
                            {
                                return Err(ParseError::Type {
                                    file,
                                    line: site.decl.span.line,
                                    message: format!(
                                        "conflicting declarations of `{}`",
                                        site.decl.name
                                    ),
                                });
                            }
                            info.sites.push(site);
                            if has_body {
                                info.canon = info.sites.len() - 1;
                                info.prelude = prelude;
                                info.readonly = readonly;
                            }
                        }
                        None => {
                            let id = FuncId(prog.funcs.len() as u32);
                            prog.func_by_name.insert(site.decl.name.clone(), id);
                            prog.funcs.push(FuncInfo {
                                name: site.decl.name.clone(),
                                sites: vec![site],
                                canon: 0,
                                prelude,
                                readonly,
                            });
                        }
                    }
                }
                Item::Var(decl) => {
                    if prog.func_by_name.contains_key(&decl.name) {
                        return Err(ParseError::Duplicate {
                            file,
                            line: decl.span.line,
                            name: decl.name,
                        });
                    }
                    let site = GlobalSite { file, decl };
                    match prog.global_by_name.get(&site.decl.name) {
                        Some(&gid) => {
                            let info = &mut prog.globals[gid.0 as usize];
                            let defines = site.decl.storage != Storage::Extern;
                            if site.decl.init.is_some()
                                && info.sites.iter().any(|s| s.decl.init.is_some())
                            {
                                return Err(ParseError::Duplicate {
                                    file,
                                    line: site.decl.span.line,
                                    name: site.decl.name,
                                });
                            }
                            if site.decl.ty.depth() != info.decl().ty.depth() {
                                return Err(ParseError::Type {
                                    file,
                                    line: site.decl.span.line,
                                    message: format!(
                                        "conflicting declarations of `{}`",
                                        site.decl.name
                                    ),
                                });
                            }
                            info.sites.push(site);
                            if defines && info.decl().storage == Storage::Extern {
                                info.canon = info.sites.len() - 1;
                                info.readonly = readonly;
                            }
                        }
                        None => {
                            let id = GlobalId(prog.globals.len() as u32);
                            prog.global_by_name.insert(site.decl.name.clone(), id);
                            prog.globals.push(GlobalInfo {
                                name: site.decl.name.clone(),
                                sites: vec![site],
                                canon: 0,
                                readonly,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

fn type_err<T>(e: &Expr, message: String) -> Result<T, ParseError> {
    Err(ParseError::Type {
        file: e.span.file,
        line: e.span.line,
        message,
    })
}

impl Resolver {
    fn run(&mut self) -> Result<(), ParseError> {
        // Global initializers see globals only.
        for gi in 0..self.prog.globals.len() {
            for si in 0..self.prog.globals[gi].sites.len() {
                if let Some(init) = self.prog.globals[gi].sites[si].decl.init.clone() {
                    self.expr(&init)?;
                }
            }
        }
        for fi in 0..self.prog.funcs.len() {
            let fid = FuncId(fi as u32);
            let info = &self.prog.funcs[fi];
            let Some(body) = info.decl().body.clone() else {
                continue;
            };
            self.cur = Some(fid);
            self.params.clear();
            for (i, p) in info.decl().params.iter().enumerate() {
                if p.name.is_empty() {
                    continue;
                }
                if self.params.insert(p.name.clone(), i).is_some() {
                    return Err(ParseError::Duplicate {
                        file: p.span.file,
                        line: p.span.line,
                        name: p.name.clone(),
                    });
                }
            }
            self.scopes.clear();
            self.block(&body)?;
            self.cur = None;
        }
        Ok(())
    }

    fn block(&mut self, b: &Block) -> Result<(), ParseError> {
        self.scopes.push(HashMap::new());
        for s in &b.stmts {
            self.stmt(s)?;
        }
        self.scopes.pop();
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), ParseError> {
        match &s.kind {
            StmtKind::Decl(d) => {
                if let Some(init) = &d.init {
                    self.expr(init)?;
                }
                let top = self.scopes.len() == 1;
                let scope = self.scopes.last_mut().expect("inside a block");
                if scope.contains_key(&d.name) || (top && self.params.contains_key(&d.name)) {
                    return Err(ParseError::Duplicate {
                        file: d.span.file,
                        line: d.span.line,
                        name: d.name.clone(),
                    });
                }
                let id = LocalId(self.prog.locals.len() as u32);
                scope.insert(d.name.clone(), id);
                self.prog.local_by_decl.insert(d.id, id);
                self.prog.locals.push(LocalInfo {
                    func: self.cur.expect("inside a function"),
                    decl: d.clone(),
                });
            }
            StmtKind::Expr(e) => {
                self.expr(e)?;
            }
            StmtKind::Return(e) => {
                if let Some(e) = e {
                    self.expr(e)?;
                }
            }
            StmtKind::If(c, t, e) => {
                self.expr(c)?;
                self.stmt(t)?;
                if let Some(e) = e {
                    self.stmt(e)?;
                }
            }
            StmtKind::While(c, b) => {
                self.expr(c)?;
                self.stmt(b)?;
            }
            StmtKind::For {
                init,
                cond,
                step,
                body,
            } => {
                self.scopes.push(HashMap::new());
                if let Some(i) = init {
                    self.stmt(i)?;
                }
                if let Some(c) = cond {
                    self.expr(c)?;
                }
                if let Some(st) = step {
                    self.expr(st)?;
                }
                self.stmt(body)?;
                self.scopes.pop();
            }
            StmtKind::Block(b) => self.block(b)?,
            StmtKind::Break | StmtKind::Continue | StmtKind::Empty => {}
        }
        Ok(())
    }

    fn lookup(&self, name: &str) -> Option<VarRef> {
        for scope in self.scopes.iter().rev() {
            if let Some(&l) = scope.get(name) {
                return Some(VarRef::Local(l));
            }
        }
        if let (Some(f), Some(&i)) = (self.cur, self.params.get(name)) {
            return Some(VarRef::Param(f, i));
        }
        self.prog.global_by_name.get(name).map(|&g| VarRef::Global(g))
    }

    fn expr(&mut self, e: &Expr) -> Result<Ty, ParseError> {
        let ty = self.expr_inner(e)?;
        self.prog.res.types[e.id.0 as usize] = Some(ty.clone());
        if let Some(f) = self.cur {
            self.prog.res.expr_func.insert(e.id, f);
        }
        Ok(ty)
    }

    fn expr_inner(&mut self, e: &Expr) -> Result<Ty, ParseError> {
        Ok(match &e.kind {
            ExprKind::Ident(name) => {
                let Some(v) = self.lookup(name) else {
                    return Err(ParseError::Unresolved {
                        file: e.span.file,
                        line: e.span.line,
                        name: name.clone(),
                    });
                };
                self.prog.res.vars.insert(e.id, v);
                Ty::of_decl(&self.prog.var_decl(v).ty)
            }
            ExprKind::Int(_) | ExprKind::Char(_) => Ty::Scalar(BaseKind::Int),
            ExprKind::Str(_) => Ty::Ptr(BaseKind::Char, 1),
            ExprKind::Null => Ty::Null,
            ExprKind::Member { base, field, arrow } => {
                let bt = self.expr(base)?;
                let sname = match (&bt, arrow) {
                    (Ty::Scalar(BaseKind::Struct(n) | BaseKind::Union(n)), false) => n.clone(),
                    (Ty::Ptr(BaseKind::Struct(n) | BaseKind::Union(n), 1), true) => n.clone(),
                    _ => {
                        return type_err(
                            e,
                            format!(
                                "member `{field}` accessed with `{}` on a non-struct value",
                                if *arrow { "->" } else { "." }
                            ),
                        )
                    }
                };
                let Some(&sid) = self.prog.struct_by_name.get(&sname) else {
                    return Err(ParseError::Unresolved {
                        file: e.span.file,
                        line: e.span.line,
                        name: format!("struct {sname}"),
                    });
                };
                let Some(fi) = self.prog.strukt(sid).field(field) else {
                    return Err(ParseError::Unresolved {
                        file: e.span.file,
                        line: e.span.line,
                        name: format!("{sname}.{field}"),
                    });
                };
                self.prog.res.members.insert(e.id, (sid, fi));
                Ty::of_decl(&self.prog.strukt(sid).def.fields[fi].ty)
            }
            ExprKind::AddrOf(x) => self.expr(x)?.addr_of(),
            ExprKind::Deref(x) => {
                let t = self.expr(x)?;
                match t.deref() {
                    Some(t) => t,
                    None => return type_err(e, "dereference of a non-pointer".into()),
                }
            }
            ExprKind::Index(a, i) => {
                let t = self.expr(a)?;
                self.expr(i)?;
                match t.deref() {
                    Some(t) => t,
                    None => return type_err(e, "subscript of a non-pointer".into()),
                }
            }
            ExprKind::Unary(_, x) => {
                self.expr(x)?;
                Ty::Scalar(BaseKind::Int)
            }
            ExprKind::Binary(op, a, b) => {
                let ta = self.expr(a)?;
                let tb = self.expr(b)?;
                match op {
                    BinOp::Add | BinOp::Sub if ta.is_pointer() && tb.is_pointer() => {
                        Ty::Scalar(BaseKind::Size)
                    }
                    BinOp::Add | BinOp::Sub if ta.is_pointer() => ta,
                    BinOp::Add if tb.is_pointer() => tb,
                    _ if op.is_arith_or_bitwise() => match ta {
                        Ty::Scalar(k) => Ty::Scalar(k),
                        _ => Ty::Scalar(BaseKind::Int),
                    },
                    _ => Ty::Scalar(BaseKind::Int),
                }
            }
            ExprKind::Assign { lhs, rhs, .. } => {
                let t = self.expr(lhs)?;
                self.expr(rhs)?;
                t
            }
            ExprKind::IncDec { operand, .. } => self.expr(operand)?,
            ExprKind::Cast(t, x) => {
                self.expr(x)?;
                Ty::of_decl(t)
            }
            ExprKind::Call {
                callee,
                type_arg,
                args,
                ..
            } => {
                for a in args {
                    self.expr(a)?;
                }
                match self.prog.func_by_name.get(callee) {
                    Some(&fid) => {
                        self.prog.res.calls.insert(e.id, Callee::Func(fid));
                        let d = self.prog.func(fid).decl();
                        if args.len() < d.params.len() || (args.len() > d.params.len() && !d.variadic) {
                            return type_err(
                                e,
                                format!(
                                    "`{callee}` takes {} argument(s), {} given",
                                    d.params.len(),
                                    args.len()
                                ),
                            );
                        }
                        subst(&d.ret, d.generic.as_deref(), type_arg.as_ref())
                    }
                    None => {
                        if self.lookup(callee).is_some() {
                            return type_err(e, format!("`{callee}` is not a function"));
                        }
                        self.prog.res.calls.insert(e.id, Callee::Unknown);
                        Ty::Scalar(BaseKind::Int)
                    }
                }
            }
            ExprKind::SizeofType(_) => Ty::Scalar(BaseKind::Size),
            ExprKind::SizeofExpr(x) => {
                self.expr(x)?;
                Ty::Scalar(BaseKind::Size)
            }
            ExprKind::AssumeCast { ty, expr, .. } => {
                self.expr(expr)?;
                Ty::of_decl(ty)
            }
            ExprKind::Cond(c, a, b) => {
                self.expr(c)?;
                let ta = self.expr(a)?;
                let tb = self.expr(b)?;
                if ta == Ty::Null {
                    tb
                } else {
                    ta
                }
            }
        })
    }
}

/// Return type of a call, with the generic variable replaced by the
/// explicit type argument (or `void` when absent).
fn subst(ret: &TypeExpr, generic: Option<&str>, arg: Option<&TypeExpr>) -> Ty {
    let declared = Ty::of_decl(ret);
    let replaceable = |b: &BaseKind| match (b, generic) {
        (BaseKind::Generic(g), Some(gv)) => g == gv,
        (BaseKind::Void, Some(_)) => arg.is_some(),
        _ => false,
    };
    match &declared {
        Ty::Ptr(b, d) if replaceable(b) => match arg {
            Some(a) => match Ty::of_decl(a) {
                Ty::Ptr(b, ad) => Ty::Ptr(b, ad + d),
                Ty::Scalar(b) => Ty::Ptr(b, *d),
                _ => Ty::Ptr(BaseKind::Void, *d),
            },
            None => Ty::Ptr(BaseKind::Void, *d),
        },
        _ => declared,
    }
}
