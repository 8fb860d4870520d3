//! Array bounds inference over the pointer and scalar flow graphs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::constraints::{AllocSize, Facts, PNode, SNode, Scope};
use crate::frontend::ast::BoundsKind;
use crate::frontend::program::{Ty, VarRef};
use crate::frontend::{Owner, Program, QVarId, Role};
use crate::kinds::is_chk;
use crate::qualgraph::{Solution, ARR, NTARR};

/// A bounds expression: a unit and the scalar node giving the value.
pub type Bound = (BoundsKind, SNode);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Heuristic {
    #[serde(rename = "CUB")]
    Cub,
    #[serde(rename = "NPr")]
    Npr,
    #[serde(rename = "NePa")]
    Nepa,
}

impl Heuristic {
    pub fn label(self) -> &'static str {
        match self {
            Heuristic::Cub => "CUB",
            Heuristic::Npr => "NPr",
            Heuristic::Nepa => "NePa",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Provenance {
    Declared,
    Seeded,
    Flow,
    Heuristic(Heuristic),
    /// Propagated from a heuristic bound in the second pass.
    HeuristicFlow,
}

impl Provenance {
    pub fn label(self) -> String {
        match self {
            Provenance::Declared => "declared".into(),
            Provenance::Seeded => "seeded".into(),
            Provenance::Flow => "flow".into(),
            Provenance::Heuristic(h) => format!("heuristic:{}", h.label()),
            Provenance::HeuristicFlow => "heuristic:flow".into(),
        }
    }
}

/// The three node sets inference runs over, in order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    /// Function locals and globals.
    Locals,
    /// Locals plus context-sensitive nodes.
    LocalsCtx,
    /// Originals (params, returns, fields) plus context-sensitive nodes.
    OriginalsCtx,
}

/// One bound assignment made by propagation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Step {
    /// 0 for the pass before heuristics, 1 after.
    pub pass: usize,
    pub round: usize,
    pub phase: Phase,
    pub node: PNode,
    pub bound: Bound,
}

/// Visibility of a scope: the scopes whose scalars its bounds may mention.
/// Locals also see their function's parameters.
pub fn visible(from: &Scope, to: &Scope) -> bool {
    if from == to || *to == Scope::Global {
        return !matches!(from, Scope::Return(_));
    }
    match (from, to) {
        (Scope::Local(f), Scope::Param(g, None)) => f == g,
        _ => false,
    }
}

pub fn sscope(prog: &Program, s: &SNode) -> Scope {
    match s {
        SNode::Var(VarRef::Global(_)) | SNode::Const(_) => Scope::Global,
        SNode::Var(VarRef::Local(l)) => Scope::Local(prog.local(*l).func),
        SNode::Var(VarRef::Param(f, _)) => Scope::Param(*f, None),
        SNode::Field(s, _) => Scope::Struct(*s, None),
        SNode::CtxParam(f, _, c) => Scope::Param(*f, Some(*c)),
        SNode::CtxField(s, _, f, base) => Scope::Struct(*s, Some((*f, base.clone()))),
        SNode::Ret(f) => Scope::Return(*f),
        SNode::Opaque(_, sc) => sc.clone(),
    }
}

pub fn pscope(prog: &Program, facts: &Facts, p: &PNode) -> Scope {
    match p {
        PNode::Var(q) => {
            let v = prog.vars.get(*q);
            match v.owner {
                Owner::Global(_) => Scope::Global,
                Owner::Local(l) => Scope::Local(prog.local(l).func),
                Owner::Param(f, _) | Owner::Ret(f) => Scope::Param(f, None),
                Owner::Field(s, _) => Scope::Struct(s, None),
                _ => Scope::Local(v.func.expect("temporaries live in functions")),
            }
        }
        PNode::CtxArg(c, _) => match facts.calls[*c].callee {
            crate::frontend::program::Callee::Func(f) => Scope::Param(f, Some(*c)),
            crate::frontend::program::Callee::Unknown => Scope::Global,
        },
        PNode::CtxField(s, _, f, base) => Scope::Struct(*s, Some((*f, base.clone()))),
    }
}

/// The qualifier variable whose pointer type a pfg node carries.
pub fn ptyp_var(prog: &Program, facts: &Facts, p: &PNode) -> Option<QVarId> {
    match p {
        PNode::Var(q) => Some(*q),
        PNode::CtxArg(c, i) => match facts.calls[*c].callee {
            crate::frontend::program::Callee::Func(f) => {
                prog.vars.levels(Owner::Param(f, *i), Role::External).first().copied()
            }
            crate::frontend::program::Callee::Unknown => None,
        },
        PNode::CtxField(s, i, ..) => prog.vars.value_levels(Owner::Field(*s, *i), Role::Plain).first().copied(),
    }
}

pub struct Pfg {
    pub nodes: Vec<PNode>,
    pub index: BTreeMap<PNode, usize>,
    pub adj: Vec<BTreeSet<usize>>,
}

impl Pfg {
    fn build(prog: &Program, facts: &Facts) -> Pfg {
        let mut raw: Vec<(PNode, PNode)> = Vec::new();
        for f in &facts.flows {
            if let (Some(a), Some(b)) = (&f.src.pnode, &f.dst.pnode) {
                raw.push((a.clone(), b.clone()));
            }
        }
        raw.extend(facts.pfg_links.iter().cloned());
        let mut nodes: BTreeSet<PNode> = BTreeSet::new();
        for (a, b) in &raw {
            nodes.insert(a.clone());
            nodes.insert(b.clone());
        }
        for d in &facts.declared_bounds {
            nodes.insert(d.target.clone());
        }
        for (p, ..) in &facts.fixed_arrays {
            nodes.insert(p.clone());
        }
        for a in &facts.allocs {
            if let Some(p) = &a.recv.pnode {
                nodes.insert(p.clone());
            }
        }
        for s in &facts.lib_seeds {
            nodes.insert(s.target.clone());
        }
        for u in &facts.index_uses {
            if let Some(p) = &u.target {
                nodes.insert(p.clone());
            }
        }
        let is_temp = |p: &PNode| matches!(p, PNode::Var(q) if prog.vars.get(*q).is_temp());
        let mut full: BTreeMap<PNode, BTreeSet<PNode>> = BTreeMap::new();
        for (a, b) in &raw {
            if a != b {
                full.entry(a.clone()).or_default().insert(b.clone());
                full.entry(b.clone()).or_default().insert(a.clone());
            }
        }
        // Contract temporaries: their non-temporary neighbors are linked
        // pairwise, following chains of temporaries.
        let mut edges: BTreeSet<(PNode, PNode)> = BTreeSet::new();
        for (a, ns) in &full {
            for b in ns {
                if !is_temp(a) && !is_temp(b) {
                    edges.insert((a.clone(), b.clone()));
                }
            }
        }
        for t in full.keys().filter(|p| is_temp(p)) {
            let mut seen = BTreeSet::from([t.clone()]);
            let mut queue = VecDeque::from([t.clone()]);
            let mut outside = BTreeSet::new();
            while let Some(x) = queue.pop_front() {
                for y in full.get(&x).into_iter().flatten() {
                    if is_temp(y) {
                        if seen.insert(y.clone()) {
                            queue.push_back(y.clone());
                        }
                    } else {
                        outside.insert(y.clone());
                    }
                }
            }
            for a in &outside {
                for b in &outside {
                    if a != b {
                        edges.insert((a.clone(), b.clone()));
                    }
                }
            }
        }
        let nodes: Vec<PNode> = nodes.into_iter().filter(|p| !is_temp(p)).collect();
        let index: BTreeMap<PNode, usize> = nodes.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        let mut adj = vec![BTreeSet::new(); nodes.len()];
        for (a, b) in edges {
            if let (Some(&i), Some(&j)) = (index.get(&a), index.get(&b)) {
                adj[i].insert(j);
            }
        }
        Pfg { nodes, index, adj }
    }
}

pub struct Sfg {
    pub nodes: Vec<SNode>,
    pub index: BTreeMap<SNode, usize>,
    pub adj: Vec<BTreeSet<usize>>,
    comp: Vec<usize>,
    members: Vec<Vec<usize>>,
}

impl Sfg {
    fn build(facts: &Facts, extra: impl IntoIterator<Item = SNode>) -> Sfg {
        let mut nodes: BTreeSet<SNode> = extra.into_iter().collect();
        for (a, b) in &facts.sfg_edges {
            nodes.insert(a.clone());
            nodes.insert(b.clone());
        }
        let nodes: Vec<SNode> = nodes.into_iter().collect();
        let index: BTreeMap<SNode, usize> = nodes.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let mut adj = vec![BTreeSet::new(); nodes.len()];
        for (a, b) in &facts.sfg_edges {
            let (i, j) = (index[a], index[b]);
            if i != j {
                adj[i].insert(j);
                adj[j].insert(i);
            }
        }
        let mut comp = vec![usize::MAX; nodes.len()];
        let mut members = Vec::new();
        for s in 0..nodes.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            let id = members.len();
            let mut list = vec![s];
            comp[s] = id;
            let mut k = 0;
            while k < list.len() {
                let x = list[k];
                k += 1;
                for &y in &adj[x] {
                    if comp[y] == usize::MAX {
                        comp[y] = id;
                        list.push(y);
                    }
                }
            }
            list.sort_unstable();
            members.push(list);
        }
        Sfg {
            nodes,
            index,
            adj,
            comp,
            members,
        }
    }

    /// Every node connected to `s`, including `s`.
    pub fn reachable(&self, s: &SNode) -> Vec<SNode> {
        match self.index.get(s) {
            Some(&i) => self.members[self.comp[i]].iter().map(|&j| self.nodes[j].clone()).collect(),
            None => vec![s.clone()],
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BoundsResult {
    pub beta: BTreeMap<PNode, (Bound, Provenance)>,
    pub invalid: BTreeSet<PNode>,
    /// Nodes needing bounds (𝔸).
    pub arrays: BTreeSet<PNode>,
    pub trace: Vec<Step>,
    /// β right after seeding, before any propagation.
    pub seeds: BTreeMap<PNode, (Bound, Provenance)>,
}

impl BoundsResult {
    pub fn get(&self, p: &PNode) -> Option<&Bound> {
        self.beta.get(p).map(|(b, _)| b)
    }
}

pub struct BoundsInput<'a> {
    pub prog: &'a Program,
    pub facts: &'a Facts,
    pub kinds: &'a Solution,
    pub ptyps: &'a Solution,
    pub heuristics: bool,
}

pub struct Engine<'a> {
    prog: &'a Program,
    facts: &'a Facts,
    pub pfg: Pfg,
    pub sfg: Sfg,
    scopes: Vec<Scope>,
    is_array: Vec<bool>,
    beta: BTreeMap<usize, (Bound, Provenance)>,
    invalid: BTreeSet<usize>,
    cb: BTreeMap<usize, BTreeSet<Bound>>,
    trace: Vec<Step>,
    pass: usize,
}

impl<'a> Engine<'a> {
    pub fn new(inp: &BoundsInput<'a>) -> Engine<'a> {
        let (prog, facts) = (inp.prog, inp.facts);
        let pfg = Pfg::build(prog, facts);
        let mut extra: Vec<SNode> = Vec::new();
        for u in &facts.index_uses {
            extra.extend(u.guards.iter().cloned());
        }
        let sfg = Sfg::build(facts, extra);
        let scopes = pfg.nodes.iter().map(|p| pscope(prog, facts, p)).collect();
        let is_array = pfg
            .nodes
            .iter()
            .map(|p| {
                let Some(q) = ptyp_var(prog, facts, p) else { return false };
                let v = prog.vars.get(q);
                let t = inp.ptyps.get(q.0);
                let chk = is_chk(inp.kinds, q);
                chk && !v.readonly && (t == ARR || t == NTARR)
            })
            .collect();
        Engine {
            prog,
            facts,
            pfg,
            sfg,
            scopes,
            is_array,
            beta: BTreeMap::new(),
            invalid: BTreeSet::new(),
            cb: BTreeMap::new(),
            trace: Vec::new(),
            pass: 0,
        }
    }

    fn vis(&self, c: usize, s: &SNode) -> bool {
        visible(&self.scopes[c], &sscope(self.prog, s))
    }

    /// Seeds β from declarations, library itypes, allocations and fixed
    /// arrays. Conflicting seeds send the node to β_I.
    pub fn seed(&mut self) {
        let facts = self.facts;
        let prog = self.prog;
        for d in &facts.declared_bounds {
            if let Some(&i) = self.pfg.index.get(&d.target) {
                self.beta.insert(i, ((d.kind, d.bound.clone()), Provenance::Declared));
            }
        }
        let mut proposals: BTreeMap<usize, Vec<Option<Bound>>> = BTreeMap::new();
        for s in &facts.lib_seeds {
            if let Some(&i) = self.pfg.index.get(&s.target) {
                proposals.entry(i).or_default().push(Some((s.kind, s.bound.clone())));
            }
        }
        for a in &facts.allocs {
            let Some(&i) = a.recv.pnode.as_ref().and_then(|p| self.pfg.index.get(p)) else {
                continue;
            };
            let elem_ok = |t: &crate::frontend::ast::TypeExpr| a.recv_ty.deref() == Some(Ty::of_decl(t));
            let b = match &a.size {
                AllocSize::Elems(Some(n), t) if elem_ok(t) => Some((BoundsKind::Count, n.clone())),
                AllocSize::Bytes(Some(n)) if !a.calloc => Some((BoundsKind::ByteCount, n.clone())),
                AllocSize::Single(t) if elem_ok(t) => Some((BoundsKind::Count, SNode::Const(1))),
                _ => None,
            };
            proposals.entry(i).or_default().push(b);
        }
        for (p, n, _) in &facts.fixed_arrays {
            if let Some(&i) = self.pfg.index.get(p) {
                proposals.entry(i).or_default().push(Some((BoundsKind::Count, SNode::Const(*n))));
            }
        }
        for (i, props) in proposals {
            if self.beta.contains_key(&i) {
                continue;
            }
            let known: BTreeSet<&Bound> = props.iter().flatten().collect();
            if known.is_empty() {
                continue;
            }
            if known.len() > 1 || props.iter().any(Option::is_none) {
                self.invalid.insert(i);
                continue;
            }
            let b = (*known.iter().next().expect("nonempty")).clone();
            if self.vis(i, &b.1) {
                self.beta.insert(i, (b, Provenance::Seeded));
            }
        }
        let _ = prog;
    }

    fn needy(&self, c: usize) -> bool {
        self.is_array[c] && !self.beta.contains_key(&c) && !self.invalid.contains(&c)
    }

    fn find_bounds(&self, c: usize) -> BTreeSet<Bound> {
        if let Some((b, _)) = self.beta.get(&c) {
            BTreeSet::from([b.clone()])
        } else {
            self.cb.get(&c).cloned().unwrap_or_default()
        }
    }

    fn bounds_flow(&self, c: usize, sb: &BTreeSet<Bound>) -> BTreeSet<Bound> {
        let mut out = BTreeSet::new();
        for (k, s) in sb {
            for x in self.sfg.reachable(s) {
                if self.vis(c, &x) {
                    out.insert((*k, x));
                }
            }
        }
        out
    }

    /// One InferBounds call over the node set `ac`; returns whether β or
    /// any candidate set changed.
    fn infer(&mut self, ac: &[usize], round: usize, phase: Phase) -> bool {
        let needy: Vec<usize> = ac.iter().copied().filter(|&c| self.needy(c)).collect();
        let before: Vec<Option<BTreeSet<Bound>>> = needy.iter().map(|c| self.cb.get(c).cloned()).collect();
        for &c in &needy {
            self.cb.insert(c, BTreeSet::new());
        }
        let mut changed = true;
        let mut guard = 0;
        while changed && guard < 4 * needy.len() + 16 {
            changed = false;
            guard += 1;
            for &c in &needy {
                let mut common: Option<BTreeSet<Bound>> = None;
                for &n in &self.pfg.adj[c] {
                    if !self.is_array[n] {
                        continue;
                    }
                    let b = self.find_bounds(n);
                    if b.is_empty() {
                        continue;
                    }
                    let fb = self.bounds_flow(c, &b);
                    common = Some(match common {
                        None => fb,
                        Some(x) => x.intersection(&fb).cloned().collect(),
                    });
                }
                let bc = common.unwrap_or_default();
                if self.cb.get(&c) != Some(&bc) {
                    self.cb.insert(c, bc);
                    changed = true;
                }
            }
        }
        let mut any = needy
            .iter()
            .zip(&before)
            .any(|(c, b)| b.as_ref().unwrap_or(&BTreeSet::new()) != &self.cb[c]);
        for &c in &needy {
            let cb = &self.cb[&c];
            let own = &self.scopes[c];
            let vb: Vec<&Bound> = cb
                .iter()
                .filter(|(_, s)| &sscope(self.prog, s) == own)
                .collect();
            let pick = if vb.len() == 1 {
                Some(vb[0].clone())
            } else if cb.len() == 1 {
                cb.iter().next().cloned()
            } else {
                None
            };
            if let Some(b) = pick {
                self.trace.push(Step {
                    pass: self.pass,
                    round,
                    phase,
                    node: self.pfg.nodes[c].clone(),
                    bound: b.clone(),
                });
                let prov = if self.pass == 0 {
                    Provenance::Flow
                } else {
                    Provenance::HeuristicFlow
                };
                self.beta.insert(c, (b, prov));
                any = true;
            }
        }
        any
    }

    fn node_set(&self, keep: impl Fn(&PNode) -> bool) -> Vec<usize> {
        (0..self.pfg.nodes.len())
            .filter(|&i| self.is_array[i] && keep(&self.pfg.nodes[i]))
            .collect()
    }

    pub fn run(&mut self) {
        let prog = self.prog;
        let local = |p: &PNode| match p {
            PNode::Var(q) => matches!(prog.vars.get(*q).owner, Owner::Global(_) | Owner::Local(_)),
            _ => false,
        };
        let ctx = |p: &PNode| matches!(p, PNode::CtxArg(..) | PNode::CtxField(..));
        let l = self.node_set(local);
        let lcs = self.node_set(|p| local(p) || ctx(p));
        let pcs = self.node_set(|p| !local(p));
        let mut round = 0;
        let limit = 8 * self.pfg.nodes.len() + 16;
        loop {
            round += 1;
            let a = self.infer(&l, round, Phase::Locals);
            let b = self.infer(&lcs, round, Phase::LocalsCtx);
            let c = self.infer(&pcs, round, Phase::OriginalsCtx);
            if !(a || b || c) || round >= limit {
                break;
            }
        }
    }

    pub fn heuristics(&mut self) {
        for c in 0..self.pfg.nodes.len() {
            if !self.needy(c) {
                continue;
            }
            let found = self
                .cub(c)
                .map(|b| (b, Heuristic::Cub))
                .or_else(|| self.npr(c).map(|b| (b, Heuristic::Npr)))
                .or_else(|| self.nepa(c).map(|b| (b, Heuristic::Nepa)));
            if let Some((b, h)) = found {
                if self.vis(c, &b) {
                    self.beta.insert(c, ((BoundsKind::Count, b), Provenance::Heuristic(h)));
                }
            }
        }
    }

    /// Consistent upper bound: every indexing of `c` uses a variable
    /// guarded by the same `ub`.
    fn cub(&self, c: usize) -> Option<SNode> {
        let node = &self.pfg.nodes[c];
        let uses: Vec<_> = self
            .facts
            .index_uses
            .iter()
            .filter(|u| u.target.as_ref() == Some(node))
            .filter(|u| !matches!(u.index, Some(SNode::Const(_))))
            .collect();
        let mut common: Option<BTreeSet<SNode>> = None;
        for u in &uses {
            if !matches!(u.index, Some(SNode::Var(_))) {
                return None;
            }
            let g: BTreeSet<SNode> = u.guards.iter().filter(|s| self.vis(c, s)).cloned().collect();
            common = Some(match common {
                None => g,
                Some(x) => x.intersection(&g).cloned().collect(),
            });
        }
        let common = common?;
        if common.len() == 1 {
            common.into_iter().next()
        } else {
            None
        }
    }

    /// Name prefix: a sibling scalar field named after the array plus a
    /// count-like keyword.
    fn npr(&self, c: usize) -> Option<SNode> {
        let PNode::Var(q) = &self.pfg.nodes[c] else { return None };
        let Owner::Field(s, i) = self.prog.vars.get(*q).owner else { return None };
        let def = &self.prog.strukt(s).def;
        let name = &def.fields[i].name;
        const KEYWORDS: [&str; 5] = ["len", "size", "count", "num", "cnt"];
        def.fields.iter().enumerate().find_map(|(j, f)| {
            let rest = f.name.strip_prefix(name.as_str())?;
            let rest = rest.to_ascii_lowercase();
            let scalar = j != i && f.ty.depth() == 0 && f.ty.array_len.is_none();
            (scalar && KEYWORDS.iter().any(|k| rest.contains(k))).then_some(SNode::Field(s, j))
        })
    }

    /// Next parameter: the scalar parameter right after an array parameter,
    /// unless it takes part in arithmetic.
    fn nepa(&self, c: usize) -> Option<SNode> {
        let PNode::Var(q) = &self.pfg.nodes[c] else { return None };
        let Owner::Param(f, i) = self.prog.vars.get(*q).owner else { return None };
        let params = &self.prog.func(f).decl().params;
        let next = params.get(i + 1)?;
        let v = VarRef::Param(f, i + 1);
        let scalar = next.ty.depth() == 0 && next.ty.array_len.is_none() && !next.ty.base.kind.is_void();
        (scalar && !self.facts.arith_scalars.contains(&v)).then_some(SNode::Var(v))
    }

    pub fn finish(self, seeds: BTreeMap<PNode, (Bound, Provenance)>) -> BoundsResult {
        let nodes = &self.pfg.nodes;
        BoundsResult {
            beta: self.beta.into_iter().map(|(i, b)| (nodes[i].clone(), b)).collect(),
            invalid: self.invalid.iter().map(|&i| nodes[i].clone()).collect(),
            arrays: (0..nodes.len()).filter(|&i| self.is_array[i]).map(|i| nodes[i].clone()).collect(),
            trace: self.trace,
            seeds,
        }
    }

    fn snapshot(&self) -> BTreeMap<PNode, (Bound, Provenance)> {
        self.beta.iter().map(|(&i, b)| (self.pfg.nodes[i].clone(), b.clone())).collect()
    }

    pub fn dot_pfg(&self) -> String {
        let mut out = String::from("graph \"pfg\" {\n");
        for (i, p) in self.pfg.nodes.iter().enumerate() {
            let label = pnode_label(self.prog, self.facts, p);
            let b = self
                .beta
                .get(&i)
                .map(|(b, pr)| format!("\\n{} [{}]", bound_label(self.prog, b), pr.label()))
                .unwrap_or_default();
            let shape = if self.is_array[i] { "ellipse" } else { "plaintext" };
            let _ = writeln!(out, "  p{i} [label=\"{}{b}\", shape={shape}];", esc(&label));
        }
        for (i, ns) in self.pfg.adj.iter().enumerate() {
            for &j in ns {
                if i < j {
                    let _ = writeln!(out, "  p{i} -- p{j};");
                }
            }
        }
        out.push_str("}\n");
        out
    }

    pub fn dot_sfg(&self) -> String {
        let mut out = String::from("graph \"sfg\" {\n");
        for (i, s) in self.sfg.nodes.iter().enumerate() {
            let _ = writeln!(out, "  s{i} [label=\"{}\", shape=box];", esc(&snode_label(self.prog, s)));
        }
        for (i, ns) in self.sfg.adj.iter().enumerate() {
            for &j in ns {
                if i < j {
                    let _ = writeln!(out, "  s{i} -- s{j};");
                }
            }
        }
        out.push_str("}\n");
        out
    }
}

fn esc(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Runs the whole bounds pipeline: seed, propagate, heuristics, propagate.
pub fn infer(inp: &BoundsInput) -> (BoundsResult, String, String) {
    let mut e = Engine::new(inp);
    e.seed();
    let seeds = e.snapshot();
    e.run();
    if inp.heuristics {
        e.heuristics();
        e.pass = 1;
        e.run();
    }
    let (pfg, sfg) = (e.dot_pfg(), e.dot_sfg());
    (e.finish(seeds), pfg, sfg)
}

pub fn snode_label(prog: &Program, s: &SNode) -> String {
    match s {
        SNode::Var(v) => prog.var_name(*v),
        SNode::Field(st, i) => format!("{}.{}", prog.strukt(*st).def.name, prog.strukt(*st).def.fields[*i].name),
        SNode::CtxParam(f, i, c) => format!("{}.{}@{c}", prog.func(*f).name, prog.func(*f).decl().params[*i].name),
        SNode::CtxField(st, i, f, base) => format!(
            "{base}.{}@{}",
            prog.strukt(*st).def.fields[*i].name,
            prog.func(*f).name
        ),
        SNode::Const(n) => n.to_string(),
        SNode::Ret(f) => format!("{}.ret", prog.func(*f).name),
        SNode::Opaque(t, _) => t.clone(),
    }
}

pub fn pnode_label(prog: &Program, facts: &Facts, p: &PNode) -> String {
    match p {
        PNode::Var(q) => prog.vars.get(*q).name.clone(),
        PNode::CtxArg(c, i) => {
            let site = &facts.calls[*c];
            let callee = match site.callee {
                crate::frontend::program::Callee::Func(f) => {
                    let d = prog.func(f).decl();
                    format!("{}.{}", prog.func(f).name, d.params.get(*i).map(|p| p.name.as_str()).unwrap_or("?"))
                }
                crate::frontend::program::Callee::Unknown => format!("?#{i}"),
            };
            format!("{callee}@{}", site.span.line)
        }
        PNode::CtxField(s, i, f, base) => format!(
            "{base}.{}@{}",
            prog.strukt(*s).def.fields[*i].name,
            prog.func(*f).name
        ),
    }
}

pub fn bound_label(prog: &Program, b: &Bound) -> String {
    format!("({}, {})", if b.0 == BoundsKind::Count { "ct" } else { "bt" }, snode_label(prog, &b.1))
}

/// Source text of a bound as seen from a declaration: plain names for
/// variables, parameters and fields of the same struct.
pub fn render(prog: &Program, s: &SNode) -> Option<String> {
    match s {
        SNode::Var(v) => Some(prog.var_decl(*v).name.clone()),
        SNode::Field(st, i) => Some(prog.strukt(*st).def.fields[*i].name.clone()),
        SNode::Const(n) => Some(n.to_string()),
        SNode::Opaque(t, _) => Some(t.clone()),
        _ => None,
    }
}

/// Independent partial-soundness check: every propagated bound must be
/// re-derivable from some root bound (seeded, declared or heuristic) with
/// the same unit, through a path of array nodes in the pfg and a path in
/// the sfg. Returns the nodes that fail.
pub fn validate(res: &BoundsResult, prog: &Program, facts: &Facts, roots: &BTreeMap<PNode, (Bound, Provenance)>) -> Vec<PNode> {
    let pfg = Pfg::build(prog, facts);
    let sfg = Sfg::build(facts, std::iter::empty());
    let mut bad = Vec::new();
    for (c, ((k, s), prov)) in &res.beta {
        if *prov != Provenance::Flow {
            continue;
        }
        let Some(&ci) = pfg.index.get(c) else {
            bad.push(c.clone());
            continue;
        };
        let mut seen = BTreeSet::from([ci]);
        let mut queue = VecDeque::from([ci]);
        let mut ok = false;
        while let Some(x) = queue.pop_front() {
            let node = &pfg.nodes[x];
            if x != ci {
                if let Some(((rk, rs), _)) = roots.get(node) {
                    if rk == k && sfg.reachable(rs).contains(s) {
                        ok = true;
                        break;
                    }
                }
            }
            for &y in &pfg.adj[x] {
                if res.arrays.contains(&pfg.nodes[y]) && seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        if !ok {
            bad.push(c.clone());
        }
    }
    bad
}

/// The declared entity a pfg node stands for, if it is one.
pub fn decl_owner(prog: &Program, p: &PNode) -> Option<Owner> {
    match p {
        PNode::Var(q) => {
            let v = prog.vars.get(*q);
            (!v.is_temp()).then_some(v.owner)
        }
        _ => None,
    }
}
