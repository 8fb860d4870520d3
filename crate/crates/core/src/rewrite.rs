//! Turns the inferred kinds, pointer types and bounds into source edits.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::bounds::{self, BoundsResult};
use crate::constraints::{normalize, pvar, Facts, PNode, SNode, Value};
use crate::frontend::ast::{BaseKind, FileId, Span, TypeExpr, VarDecl};
use crate::frontend::program::{Callee, FuncId, VarRef};
use crate::frontend::{Owner, Program, QVarId, Role};
use crate::kinds::{is_chk, CastDemand};
use crate::qualgraph::{Solution, ARR, NTARR, PTR};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EditKind {
    TypeRewrite,
    Itype,
    Bounds,
    Cast,
    CheckedRegion,
    GenericAlloc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Edit {
    #[serde(skip)]
    pub file: FileId,
    pub start: u32,
    pub end: u32,
    pub text: String,
    pub kind: EditKind,
    pub line: u32,
}

/// A checked array pointer left without bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NeedsBounds {
    pub name: String,
    pub file: String,
    pub line: u32,
}

pub struct Plan {
    pub edits: Vec<Edit>,
    pub needs_bounds: Vec<NeedsBounds>,
    /// Cast demands that got no bounds clause.
    pub unbounded_casts: Vec<(String, u32)>,
}

pub struct RewriteInput<'a> {
    pub prog: &'a Program,
    pub facts: &'a Facts,
    pub kinds: &'a Solution,
    pub ptyps: &'a Solution,
    pub bounds: &'a BoundsResult,
    pub casts: &'a [CastDemand],
}

struct Planner<'a> {
    inp: &'a RewriteInput<'a>,
    edits: Vec<Edit>,
    needs: Vec<NeedsBounds>,
    unbounded_casts: Vec<(String, u32)>,
}

fn wrap(kind: u8, inner: &str) -> String {
    let ctor = match kind {
        PTR => "_Ptr",
        ARR => "_Array_ptr",
        NTARR => "_Nt_array_ptr",
        _ => unreachable!("pointer type"),
    };
    format!("{ctor}<{}>", inner.trim_end())
}

impl<'a> Planner<'a> {
    fn prog(&self) -> &'a Program {
        self.inp.prog
    }

    fn chk(&self, q: QVarId) -> bool {
        is_chk(self.inp.kinds, q)
    }

    /// Type text for `base` under the given levels (outermost first), each
    /// level rendered by `kind_of`.
    fn type_text(&self, base: &str, levels: &[Option<u8>]) -> String {
        let mut cur = base.to_string();
        for l in levels.iter().rev() {
            cur = match l {
                Some(k) => wrap(*k, &cur),
                None => {
                    if cur.ends_with('*') {
                        format!("{cur}*")
                    } else {
                        format!("{cur} *")
                    }
                }
            };
        }
        cur
    }

    fn level_kinds(&self, levels: &[QVarId]) -> Vec<Option<u8>> {
        levels
            .iter()
            .map(|&q| self.chk(q).then(|| self.inp.ptyps.get(q.0)))
            .collect()
    }

    fn with_name(ty: &str, name: &str) -> String {
        if name.is_empty() {
            ty.to_string()
        } else if ty.ends_with('*') {
            format!("{ty}{name}")
        } else {
            format!("{ty} {name}")
        }
    }

    fn writable(&self, file: FileId) -> bool {
        let f = self.prog().file(file);
        !f.readonly && !f.prelude
    }

    fn push(&mut self, span: Span, text: String, kind: EditKind) {
        self.edits.push(Edit {
            file: span.file,
            start: span.start,
            end: span.end,
            text,
            kind,
            line: span.line,
        });
    }

    /// Replaces `span` when the new text differs from the old beyond
    /// whitespace.
    fn replace(&mut self, span: Span, text: String, kind: EditKind) {
        let old = self.prog().file(span.file).slice(span);
        if normalize(old) != normalize(&text) {
            self.push(span, text, kind);
        }
    }

    /// `: count(e)` for a declaration, if bounds are known and renderable.
    fn bounds_text(&self, node: &PNode, rename: &dyn Fn(&SNode) -> Option<String>) -> Option<String> {
        let (k, s) = self.inp.bounds.get(node)?;
        let e = rename(s).or_else(|| bounds::render(self.prog(), s))?;
        Some(format!("{}({e})", k.keyword()))
    }

    fn needs(&mut self, q: QVarId, node: &PNode, span: Span) {
        if self.inp.ptyps.get(q.0) == ARR && self.inp.bounds.get(node).is_none() {
            let prog = self.prog();
            self.needs.push(NeedsBounds {
                name: prog.vars.get(q).name.clone(),
                file: prog.file(span.file).name.clone(),
                line: span.line,
            });
        }
    }

    /// Declarations without an external/internal split.
    fn plain_decl(&mut self, owner: Owner, d: &VarDecl, file: FileId, rename: &dyn Fn(&SNode) -> Option<String>) {
        let prog = self.prog();
        let levels = prog.vars.levels(owner, Role::Plain).to_vec();
        if levels.is_empty() || !self.writable(file) {
            return;
        }
        let kinds = self.level_kinds(&levels);
        let ty = self.type_text(&d.ty.base.text, &kinds);
        let mut text = Self::with_name(&ty, &d.name);
        if let Some(n) = d.ty.array_len {
            text.push_str(if d.ty.array_checked { " _Checked" } else { "" });
            text.push_str(&format!("[{n}]"));
        }
        let outer = levels[0];
        if d.ty.array_len.is_none() && self.chk(outer) && self.inp.ptyps.get(outer.0) != PTR {
            let node = PNode::Var(outer);
            match self.bounds_text(&node, rename) {
                Some(b) => text.push_str(&format!(" : {b}")),
                None => self.needs(outer, &node, d.name_span),
            }
        }
        self.replace(d.header, text, EditKind::TypeRewrite);
    }

    /// Declaration text and annotation for a paired entity (parameter or
    /// return): `(unchecked-or-checked type, annotation)`.
    fn paired(&mut self, owner: Owner, base: &str, rename: &dyn Fn(&SNode) -> Option<String>, span: Span) -> Option<(String, String, bool)> {
        let prog = self.prog();
        let ext = prog.vars.levels(owner, Role::External).to_vec();
        let int = prog.vars.levels(owner, Role::Internal).to_vec();
        if ext.is_empty() {
            return None;
        }
        let ek = self.level_kinds(&ext);
        let ik = self.level_kinds(&int);
        let itype = ek.iter().zip(&ik).any(|(e, i)| e.is_some() && i.is_none());
        let node = pvar(prog, ext[0]);
        let bounded = self.chk(ext[0]) && self.inp.ptyps.get(ext[0].0) != PTR;
        let mut annot = String::new();
        if bounded {
            match self.bounds_text(&node, rename) {
                Some(b) => annot = b,
                None => self.needs(ext[0], &node, span),
            }
        }
        if itype {
            let it = format!("itype({})", self.type_text(base, &ek));
            annot = if annot.is_empty() { it } else { format!("{it} {annot}") };
            Some((self.type_text(base, &ik), annot, true))
        } else {
            Some((self.type_text(base, &ek), annot, false))
        }
    }

    fn functions(&mut self) {
        let prog = self.prog();
        for (fi, f) in prog.funcs.iter().enumerate() {
            let fid = FuncId(fi as u32);
            if f.prelude || f.readonly {
                continue;
            }
            for site in &f.sites {
                if !self.writable(site.file) {
                    continue;
                }
                let d = &site.decl;
                let declared_itypes =
                    d.ret_annot.itype.is_some() || d.params.iter().any(|p| p.annot.itype.is_some());
                if d.body.is_none() && declared_itypes {
                    continue;
                }
                let names: Vec<String> = d.params.iter().map(|p| p.name.clone()).collect();
                let rename = move |s: &SNode| match s {
                    SNode::Var(VarRef::Param(g, j)) if *g == fid => {
                        names.get(*j).filter(|n| !n.is_empty()).cloned()
                    }
                    _ => None,
                };
                for (i, p) in d.params.iter().enumerate() {
                    let Some((ty, annot, itype)) = self.paired(Owner::Param(fid, i), &p.ty.base.text, &rename, p.name_span)
                    else {
                        continue;
                    };
                    let mut text = Self::with_name(&ty, &p.name);
                    if !annot.is_empty() {
                        text.push_str(&format!(" : {annot}"));
                    }
                    let kind = if itype { EditKind::Itype } else { EditKind::TypeRewrite };
                    self.replace(p.header, text, kind);
                }
                if let Some((ty, annot, itype)) = self.paired(Owner::Ret(fid), &d.ret.base.text, &rename, d.name_span) {
                    let prefix = if ty.ends_with('*') { ty } else { format!("{ty} ") };
                    self.replace(d.ret_prefix, prefix, EditKind::TypeRewrite);
                    let tail = if annot.is_empty() { String::new() } else { format!(" : {annot}") };
                    let kind = if itype { EditKind::Itype } else { EditKind::Bounds };
                    self.replace(d.ret_annot_span, tail, kind);
                }
            }
        }
    }

    fn variables(&mut self) {
        let prog = self.prog();
        let none = |_: &SNode| None;
        for (gi, g) in prog.globals.iter().enumerate() {
            if g.readonly {
                continue;
            }
            for site in &g.sites {
                let owner = Owner::Global(crate::frontend::program::GlobalId(gi as u32));
                self.plain_decl(owner, &site.decl, site.file, &none);
            }
        }
        for (li, l) in prog.locals.iter().enumerate() {
            let owner = Owner::Local(crate::frontend::program::LocalId(li as u32));
            self.plain_decl(owner, &l.decl, prog.func(l.func).file(), &none);
        }
        for (si, s) in prog.structs.iter().enumerate() {
            if s.readonly {
                continue;
            }
            for (fi, f) in s.def.fields.iter().enumerate() {
                let owner = Owner::Field(crate::frontend::program::StructId(si as u32), fi);
                self.plain_decl(owner, f, s.file, &none);
            }
        }
    }

    /// Pointee type text of a value passed or assigned somewhere.
    fn pointee_text(&self, v: &Value, fallback: Option<&BaseKind>) -> Option<String> {
        let prog = self.prog();
        let inner = v.vars.get(1..).unwrap_or(&[]);
        let base = v
            .vars
            .iter()
            .rev()
            .find_map(|&q| decl_type(prog, q).map(|t| t.base.text.clone()))
            .or_else(|| fallback.map(|b| b.to_string()))?;
        Some(self.type_text(&base, &self.level_kinds(inner)))
    }

    fn generic_calls(&mut self) {
        let prog = self.prog();
        let facts = self.inp.facts;
        let mut by_call: BTreeMap<usize, &crate::constraints::AllocSite> = BTreeMap::new();
        for a in &facts.allocs {
            by_call.insert(a.call, a);
        }
        for c in &facts.calls {
            let Callee::Func(f) = c.callee else { continue };
            let info = prog.func(f);
            if !info.is_generic() || c.explicit_type_arg || !self.writable(c.span.file) {
                continue;
            }
            let ty = if info.is_allocator() {
                let Some(a) = by_call.get(&c.id) else { continue };
                let Some(&outer) = a.recv.vars.first() else { continue };
                if !self.chk(outer) || c.result.first().is_some_and(|&t| !self.chk(t)) {
                    continue;
                }
                let fallback = a.recv_ty.deref().and_then(|t| t.base().cloned());
                let recv_inner = Value {
                    vars: a.recv.vars.clone(),
                    ..Default::default()
                };
                self.pointee_text(&recv_inner, fallback.as_ref())
            } else {
                let d = info.decl();
                let generic_param = d.params.iter().position(|p| {
                    let g = |t: &TypeExpr| matches!(t.base.kind, BaseKind::Generic(_));
                    g(&p.ty) || p.annot.itype.as_ref().is_some_and(g)
                });
                let Some(i) = generic_param else { continue };
                let Some(arg) = c.args.get(i) else { continue };
                let Some(&outer) = arg.value.vars.first() else { continue };
                if !self.chk(outer) || arg.value.wild.is_some() {
                    continue;
                }
                let fallback = None;
                self.pointee_text(&arg.value, fallback)
            };
            if let Some(ty) = ty {
                let at = Span::empty_at(c.callee_span.file, c.callee_span.end, c.callee_span.line);
                self.push(at, format!("<{ty}>"), EditKind::GenericAlloc);
            }
        }
    }

    fn casts(&mut self) {
        let prog = self.prog();
        let facts = self.inp.facts;
        for d in self.inp.casts {
            let site = &facts.calls[d.call];
            if !self.writable(site.span.file) {
                continue;
            }
            let arg = &site.args[d.arg];
            let owner = Owner::Param(d.callee, d.arg);
            let ext = prog.vars.levels(owner, Role::External).to_vec();
            let pdecl = &prog.func(d.callee).decl().params[d.arg];
            let ty = self.type_text(&pdecl.ty.base.text, &self.level_kinds(&ext));
            let node = pvar(prog, ext[0]);
            let bound = if self.inp.ptyps.get(ext[0].0) != PTR {
                self.inp.bounds.get(&node).and_then(|(k, s)| {
                    let e = match s {
                        SNode::Var(VarRef::Param(g, j)) if *g == d.callee => site.args.get(*j).map(|a| a.text.clone()),
                        SNode::Var(VarRef::Global(_)) | SNode::Const(_) => bounds::render(prog, s),
                        _ => None,
                    }?;
                    Some(format!(", {}({e})", k.keyword()))
                })
            } else {
                Some(String::new())
            };
            let bound = match bound {
                Some(b) => b,
                None => {
                    self.unbounded_casts
                        .push((prog.file(arg.span.file).name.clone(), arg.span.line));
                    String::new()
                }
            };
            let open = Span::empty_at(arg.span.file, arg.span.start, arg.span.line);
            let close = Span::empty_at(arg.span.file, arg.span.end, arg.span.line);
            self.push(open, format!("_Assume_bounds_cast<{ty}>("), EditKind::Cast);
            self.push(close, format!("{bound})"), EditKind::Cast);
        }
    }

    fn checked_bodies(&mut self) {
        let prog = self.prog();
        let facts = self.inp.facts;
        let demanded: BTreeSet<usize> = self.inp.casts.iter().map(|c| c.call).collect();
        for (fid, f) in prog.defined_funcs() {
            let d = f.decl();
            if d.checked_body || !self.writable(f.file()) {
                continue;
            }
            let Some(body) = facts.bodies.get(&fid) else { continue };
            if body.ptr_casts > 0 || body.assume_casts > 0 || body.fixed_arrays {
                continue;
            }
            // nothing to protect
            let sig_ptrs = (0..d.params.len()).any(|i| !prog.vars.levels(Owner::Param(fid, i), Role::External).is_empty())
                || !prog.vars.levels(Owner::Ret(fid), Role::External).is_empty();
            if body.refs.is_empty() && !sig_ptrs {
                continue;
            }
            if !body.refs.iter().all(|&q| self.chk(q)) {
                continue;
            }
            let calls_ok = body.calls.iter().all(|&c| {
                let site = &facts.calls[c];
                let Callee::Func(g) = site.callee else { return false };
                let gd = prog.func(g).decl();
                if demanded.contains(&c) || gd.variadic {
                    return false;
                }
                let ext_ok = |o: Owner| prog.vars.levels(o, Role::External).iter().all(|&q| self.chk(q));
                (0..gd.params.len()).all(|i| ext_ok(Owner::Param(g, i))) && ext_ok(Owner::Ret(g))
            });
            if !calls_ok {
                continue;
            }
            if let Some(open) = d.body_open {
                let at = Span::empty_at(f.file(), open, d.name_span.line);
                self.push(at, "_Checked ".into(), EditKind::CheckedRegion);
            }
        }
    }
}

/// Declared type of the entity owning a qualifier variable.
fn decl_type(prog: &Program, q: QVarId) -> Option<&TypeExpr> {
    let v = prog.vars.get(q);
    Some(match v.owner {
        Owner::Global(g) => &prog.global(g).decl().ty,
        Owner::Local(l) => &prog.local(l).decl.ty,
        Owner::Param(f, i) => &prog.func(f).decl().params[i].ty,
        Owner::Ret(f) => &prog.func(f).decl().ret,
        Owner::Field(s, i) => &prog.strukt(s).def.fields[i].ty,
        _ => return None,
    })
}

pub fn plan(inp: &RewriteInput) -> Plan {
    let mut p = Planner {
        inp,
        edits: Vec::new(),
        needs: Vec::new(),
        unbounded_casts: Vec::new(),
    };
    p.functions();
    p.variables();
    p.generic_calls();
    p.casts();
    p.checked_bodies();
    let mut edits = p.edits;
    edits.sort_by_key(|e| (e.file, e.start, e.end));
    p.needs.sort_by(|a, b| (&a.file, a.line, &a.name).cmp(&(&b.file, b.line, &b.name)));
    p.needs.dedup();
    Plan {
        edits,
        needs_bounds: p.needs,
        unbounded_casts: p.unbounded_casts,
    }
}

/// Applies the edits for one file. Edits must not overlap; insertions at
/// the same offset keep their order.
pub fn apply(text: &str, edits: &[&Edit]) -> String {
    let mut sorted: Vec<&Edit> = edits.to_vec();
    sorted.sort_by_key(|e| (e.start, e.end));
    let mut out = String::with_capacity(text.len() + 64);
    let mut pos = 0usize;
    for e in sorted {
        let (s, t) = (e.start as usize, e.end as usize);
        assert!(s >= pos, "overlapping edits at byte {s}");
        out.push_str(&text[pos..s]);
        out.push_str(&e.text);
        pos = t;
    }
    out.push_str(&text[pos..]);
    out
}

/// Rewritten text of every writable input file, in input order.
pub fn rewrite_files(prog: &Program, plan: &Plan) -> Vec<(String, String)> {
    prog.files
        .iter()
        .filter(|f| !f.prelude)
        .map(|f| {
            let edits: Vec<&Edit> = plan.edits.iter().filter(|e| e.file == f.id).collect();
            let text = if f.readonly { f.text.clone() } else { apply(&f.text, &edits) };
            (f.name.clone(), text)
        })
        .collect()
}
