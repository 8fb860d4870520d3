//! Qualifier variables: one per pointer level of every declared entity,
//! plus the expression-level temporaries the constraint rules need.

use std::collections::{BTreeMap, HashMap};

use serde::Serialize;

use super::ast::*;
use super::program::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct QVarId(pub u32);

impl QVarId {
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Owner {
    Global(GlobalId),
    Local(LocalId),
    Param(FuncId, usize),
    Ret(FuncId),
    Field(StructId, usize),
    AddrOf(ExprId),
    StrLit(ExprId),
    CallResult(ExprId),
    AssumeCast(ExprId),
}

impl Owner {
    pub fn of_var(v: VarRef) -> Owner {
        match v {
            VarRef::Global(g) => Owner::Global(g),
            VarRef::Local(l) => Owner::Local(l),
            VarRef::Param(f, i) => Owner::Param(f, i),
        }
    }

    pub fn is_temp(self) -> bool {
        matches!(
            self,
            Owner::AddrOf(_) | Owner::StrLit(_) | Owner::CallResult(_) | Owner::AssumeCast(_)
        )
    }

    /// Params and returns have an external/internal pair.
    pub fn is_paired(self) -> bool {
        matches!(self, Owner::Param(..) | Owner::Ret(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Role {
    Plain,
    External,
    Internal,
    /// Storage of a fixed-size array `T x[n]`.
    Array,
}

#[derive(Debug, Clone)]
pub struct QualVar {
    pub id: QVarId,
    pub owner: Owner,
    /// Pointer level, 0 = outermost. The array node of `T x[n]` sits at
    /// level 0 and the declared pointer levels follow it.
    pub level: usize,
    pub role: Role,
    pub name: String,
    pub span: Span,
    /// Kind spelled in the source at this level.
    pub declared: PtrKind,
    /// Kind given by an `itype(...)` annotation at this level.
    pub itype: Option<PtrKind>,
    /// Declared in a read-only file or the prelude.
    pub readonly: bool,
    /// Function owning this variable's scope, if any.
    pub func: Option<FuncId>,
}

impl QualVar {
    pub fn is_temp(&self) -> bool {
        self.owner.is_temp()
    }

    pub fn is_array(&self) -> bool {
        self.role == Role::Array
    }

    /// A user-visible declared pointer level (counted in report totals).
    pub fn is_declared_pointer(&self) -> bool {
        !self.is_temp() && !self.is_array() && !self.readonly && self.role != Role::Internal
    }

    /// Checked in the source, either directly or through an itype.
    pub fn declared_checked(&self) -> Option<PtrKind> {
        if self.declared.is_checked() {
            Some(self.declared)
        } else {
            self.itype
        }
    }
}

#[derive(Debug, Default)]
pub struct QualVars {
    pub vars: Vec<QualVar>,
    by_owner: HashMap<(Owner, Role), Vec<QVarId>>,
    arrays: HashMap<Owner, QVarId>,
}

impl QualVars {
    pub fn get(&self, id: QVarId) -> &QualVar {
        &self.vars[id.idx()]
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &QualVar> {
        self.vars.iter()
    }

    /// Pointer levels of an entity, outermost first. For paired owners pass
    /// `External` or `Internal`; otherwise `Plain`.
    pub fn levels(&self, owner: Owner, role: Role) -> &[QVarId] {
        self.by_owner
            .get(&(owner, role))
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    pub fn array_node(&self, owner: Owner) -> Option<QVarId> {
        self.arrays.get(&owner).copied()
    }

    /// Levels of the value an entity denotes when used in an expression: the
    /// array node (for fixed arrays) followed by the pointer levels.
    pub fn value_levels(&self, owner: Owner, role: Role) -> Vec<QVarId> {
        let mut out: Vec<QVarId> = self.array_node(owner).into_iter().collect();
        out.extend_from_slice(self.levels(owner, role));
        out
    }

    /// The variable a pointer level of `owner` is viewed through inside the
    /// owning function (internal for params and returns).
    pub fn inside(&self, owner: Owner) -> Vec<QVarId> {
        let role = if owner.is_paired() {
            Role::Internal
        } else {
            Role::Plain
        };
        self.value_levels(owner, role)
    }

    /// The variable callers see (external for params and returns).
    pub fn outside(&self, owner: Owner) -> Vec<QVarId> {
        let role = if owner.is_paired() {
            Role::External
        } else {
            Role::Plain
        };
        self.value_levels(owner, role)
    }

    /// The partner of a paired variable.
    pub fn partner(&self, id: QVarId) -> Option<QVarId> {
        let v = self.get(id);
        let other = match v.role {
            Role::External => Role::Internal,
            Role::Internal => Role::External,
            _ => return None,
        };
        self.levels(v.owner, other).get(v.level).copied()
    }

    /// The enumerated pointer variables: declared levels (params and returns
    /// once, as their external node) and address-of / string-literal
    /// expression pointers. Prelude declarations are not included.
    pub fn enumerate(&self, prog: &Program) -> Vec<QVarId> {
        self.vars
            .iter()
            .filter(|v| !prog.file(v.span.file).prelude)
            .filter(|v| match v.owner {
                Owner::AddrOf(_) | Owner::StrLit(_) => true,
                Owner::CallResult(_) | Owner::AssumeCast(_) => false,
                _ => v.role != Role::Internal && v.role != Role::Array,
            })
            .map(|v| v.id)
            .collect()
    }

    fn push_entity(
        &mut self,
        owner: Owner,
        name: &str,
        decl: Option<(&TypeExpr, &DeclAnnot)>,
        depth: usize,
        span: Span,
        readonly: bool,
        func: Option<FuncId>,
    ) {
        let roles: &[Role] = if owner.is_paired() {
            &[Role::External, Role::Internal]
        } else {
            &[Role::Plain]
        };
        let array = decl.is_some_and(|(t, _)| t.array_len.is_some());
        let array_checked = decl.is_some_and(|(t, _)| t.array_checked);
        if array {
            let id = QVarId(self.vars.len() as u32);
            self.vars.push(QualVar {
                id,
                owner,
                level: 0,
                role: Role::Array,
                name: name.to_string(),
                span,
                declared: if array_checked {
                    PtrKind::Arr
                } else {
                    PtrKind::Unchecked
                },
                itype: None,
                readonly,
                func,
            });
            self.arrays.insert(owner, id);
        }
        let offset = usize::from(array);
        for &role in roles {
            let mut ids = Vec::new();
            for level in 0..depth {
                let id = QVarId(self.vars.len() as u32);
                let (declared, itype) = match decl {
                    Some((t, a)) => (
                        t.levels.get(level).copied().unwrap_or(PtrKind::Unchecked),
                        a.itype.as_ref().and_then(|it| it.levels.get(level).copied()),
                    ),
                    None => (PtrKind::Unchecked, None),
                };
                let stars = "*".repeat(level);
                self.vars.push(QualVar {
                    id,
                    owner,
                    level: level + offset,
                    role,
                    name: format!("{stars}{name}"),
                    span,
                    declared,
                    itype,
                    readonly,
                    func,
                });
                ids.push(id);
            }
            self.by_owner.insert((owner, role), ids);
        }
    }

    pub(super) fn build(prog: &Program) -> QualVars {
        let mut qv = QualVars::default();
        let ro = |f: FileId| prog.file(f).readonly;
        for (si, s) in prog.structs.iter().enumerate() {
            for (fi, field) in s.def.fields.iter().enumerate() {
                qv.push_entity(
                    Owner::Field(StructId(si as u32), fi),
                    &format!("{}.{}", s.def.name, field.name),
                    Some((&field.ty, &field.annot)),
                    field.ty.depth(),
                    field.name_span,
                    s.readonly,
                    None,
                );
            }
        }
        for (gi, g) in prog.globals.iter().enumerate() {
            let d = g.decl();
            qv.push_entity(
                Owner::Global(GlobalId(gi as u32)),
                &g.name,
                Some((&d.ty, &d.annot)),
                d.ty.depth(),
                d.name_span,
                g.readonly,
                None,
            );
        }
        for (fi, f) in prog.funcs.iter().enumerate() {
            let fid = FuncId(fi as u32);
            let d = f.decl();
            let file = f.file();
            for (pi, p) in d.params.iter().enumerate() {
                let pname = if p.name.is_empty() {
                    format!("{}.#{}", f.name, pi)
                } else {
                    format!("{}.{}", f.name, p.name)
                };
                qv.push_entity(
                    Owner::Param(fid, pi),
                    &pname,
                    Some((&p.ty, &p.annot)),
                    p.ty.depth(),
                    p.name_span,
                    ro(file),
                    Some(fid),
                );
            }
            qv.push_entity(
                Owner::Ret(fid),
                &format!("{}.ret", f.name),
                Some((&d.ret, &d.ret_annot)),
                d.ret.depth(),
                d.name_span,
                ro(file),
                Some(fid),
            );
        }
        for (li, l) in prog.locals.iter().enumerate() {
            let name = format!("{}.{}", prog.func(l.func).name, l.decl.name);
            qv.push_entity(
                Owner::Local(LocalId(li as u32)),
                &name,
                Some((&l.decl.ty, &l.decl.annot)),
                l.decl.ty.depth(),
                l.decl.name_span,
                ro(prog.func(l.func).file()),
                Some(l.func),
            );
        }
        // Expression temporaries, in source order per function.
        let mut temps: BTreeMap<ExprId, (Owner, usize, Span, String, FuncId, Option<TypeExpr>)> =
            BTreeMap::new();
        for (fid, f) in prog.defined_funcs() {
            let body = f.decl().body.as_ref().expect("defined");
            let mut visit = |e: &Expr| {
                let ty = prog.ty(e);
                let line = e.span.line;
                match &e.kind {
                    ExprKind::AddrOf(_) => {
                        let text = prog.file(e.span.file).slice(e.span).to_string();
                        temps.insert(e.id, (Owner::AddrOf(e.id), 1, e.span, format!("{text}@{line}"), fid, None));
                    }
                    ExprKind::Str(_) => {
                        temps.insert(e.id, (Owner::StrLit(e.id), 1, e.span, format!("\"...\"@{line}"), fid, None));
                    }
                    ExprKind::Call { callee, .. } if ty.is_pointer() => {
                        temps.insert(
                            e.id,
                            (Owner::CallResult(e.id), ty.depth(), e.span, format!("{callee}()@{line}"), fid, None),
                        );
                    }
                    ExprKind::AssumeCast { ty: t, .. } if ty.is_pointer() => {
                        temps.insert(
                            e.id,
                            (Owner::AssumeCast(e.id), ty.depth(), e.span, format!("cast@{line}"), fid, Some(t.clone())),
                        );
                    }
                    _ => {}
                }
            };
            super::resolve::walk_block_exprs(body, &mut visit);
        }
        let none = DeclAnnot::default();
        for (_, (owner, depth, span, name, fid, ty)) in temps {
            let ro = ro(span.file);
            let decl = ty.as_ref().map(|t| (t, &none));
            qv.push_entity(owner, &name, decl, depth, span, ro, Some(fid));
        }
        qv
    }
}
