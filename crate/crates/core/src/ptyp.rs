//! Pointer-type inference (ptr / arr / ntarr) over the checked pointers.

use std::collections::BTreeSet;

use crate::constraints::{declared_elem, Bound, Facts, FlowKind, Seed};
use crate::frontend::{Owner, Program, QVarId, QualVar, Role};
use crate::kinds::is_chk;
use crate::qualgraph::{CGraph, Direction, Elem, EdgeReason, Node, Solution, Unsat, ARR, NTARR, PTYP};
use crate::rootcause::WildReason;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Solver {
    #[default]
    ThreeStep,
    Least,
    Greatest,
}

/// Pointer type the source fixes for a level, if any.
pub fn ptyp_pin(v: &QualVar) -> Option<Elem> {
    match v.role {
        Role::Array => Some(ARR),
        Role::Internal => declared_elem(v.declared).or_else(|| v.itype.and_then(declared_elem)),
        _ => v.declared_checked().and_then(declared_elem),
    }
}

/// Variables taking part in pointer-type inference: checked ones, plus the
/// internal side of parameters and returns whose external side is checked.
pub fn members(prog: &Program, kinds: &Solution) -> Vec<bool> {
    prog.vars
        .iter()
        .map(|v| {
            is_chk(kinds, v.id)
                || v.role == Role::Array
                || (v.role == Role::Internal && prog.vars.partner(v.id).is_some_and(|e| is_chk(kinds, e)))
        })
        .collect()
}

fn node(q: QVarId) -> Node {
    Node::Var(q.0)
}

pub fn ptyp_graph(prog: &Program, facts: &Facts, kinds: &Solution) -> CGraph {
    let vars = &prog.vars;
    let member = members(prog, kinds);
    let m = |q: QVarId| member[q.idx()];
    let pinned = |q: QVarId| ptyp_pin(vars.get(q)).is_some();
    let mut g = CGraph::new(PTYP, vars.len());
    for v in vars.iter() {
        if !m(v.id) {
            continue;
        }
        if let Some(e) = ptyp_pin(v) {
            g.add_both(Node::Lit(e), node(v.id), EdgeReason::Declared, Some(v.span));
        }
        if v.role == Role::External {
            if let Some(int) = vars.partner(v.id) {
                if m(int) && !(pinned(v.id) && pinned(int)) {
                    let r = match v.owner {
                        Owner::Ret(_) => EdgeReason::ReturnPair,
                        _ => EdgeReason::ParamPair,
                    };
                    g.add_both(node(v.id), node(int), r, Some(v.span));
                }
            }
        }
    }
    for f in &facts.flows {
        let r = match f.kind {
            FlowKind::Assign => EdgeReason::Assign,
            FlowKind::Return => EdgeReason::Return,
            FlowKind::CallArg => EdgeReason::CallArg,
            FlowKind::CallResult => EdgeReason::CallResult,
        };
        let span = Some(f.span);
        for (l, (&s, &d)) in f.src.vars.iter().zip(&f.dst.vars).enumerate() {
            if !m(s) || !m(d) || (pinned(s) && pinned(d)) {
                continue;
            }
            if l == 0 {
                g.add(node(s), node(d), r, span);
            } else {
                g.add_both(node(s), node(d), r, span);
            }
        }
        if f.src.strlit {
            if let Some(d) = f.dst.outer() {
                if m(d) && !pinned(d) {
                    g.add(node(d), Node::Lit(NTARR), EdgeReason::StrLit, span);
                }
            }
        }
    }
    for i in &facts.idioms {
        if !m(i.var) || pinned(i.var) {
            continue;
        }
        match i.bound {
            Bound::Lower(e) => g.add(Node::Lit(e), node(i.var), i.reason, Some(i.span)),
            Bound::Upper(e) => g.add(node(i.var), Node::Lit(e), i.reason, Some(i.span)),
        };
    }
    g
}

/// Seeds demoting the unpinned variables whose lower bound exceeds their
/// upper bound. An internal variable already wild is demoted through its
/// external partner.
pub fn conflict_seeds(prog: &Program, g: &CGraph, kinds: &Solution) -> Vec<Seed> {
    let mut out = BTreeSet::new();
    for v in g.conflicts() {
        let q = QVarId(v);
        let var = prog.vars.get(q);
        if ptyp_pin(var).is_some() {
            continue;
        }
        let target = if is_chk(kinds, q) {
            q
        } else {
            match prog.vars.partner(q) {
                Some(e) if is_chk(kinds, e) && ptyp_pin(prog.vars.get(e)).is_none() => e,
                _ => continue,
            }
        };
        out.insert(target);
    }
    // Demoting a named variable often resolves the conflicts of the
    // temporaries around it; those are demoted only if nothing else is.
    if out.iter().any(|&q| !prog.vars.get(q).is_temp()) {
        out.retain(|&q| !prog.vars.get(q).is_temp());
    }
    out.into_iter()
        .map(|q| Seed {
            var: q,
            reason: WildReason::ConflictingTypes,
            span: prog.vars.get(q).span,
        })
        .collect()
}

fn is_param(prog: &Program, q: QVarId) -> bool {
    matches!(prog.vars.get(q).owner, Owner::Param(..))
}

fn is_ret(prog: &Program, q: QVarId) -> bool {
    matches!(prog.vars.get(q).owner, Owner::Ret(_))
}

pub fn solve(prog: &Program, g: &CGraph, kinds: &Solution, solver: Solver) -> Result<Solution, Unsat> {
    match solver {
        Solver::Least => g.solve(&[], Direction::Least),
        Solver::Greatest => g.solve(&[], Direction::Greatest),
        Solver::ThreeStep => {
            let member = members(prog, kinds);
            let mut pins: Vec<Option<Elem>> = vec![None; g.n_vars()];
            let s1 = g.solve_greatest(&pins)?;
            let mut sources: Vec<Node> = (0..PTYP.len() as Elem).map(Node::Lit).collect();
            for v in prog.vars.iter() {
                if member[v.id.idx()] && is_param(prog, v.id) {
                    pins[v.id.idx()] = Some(s1.get(v.id.0));
                    sources.push(node(v.id));
                }
            }
            let s2 = g.solve_least(&pins)?;
            let mut bounded = g.reachable_from(&sources);
            bounded.extend(g.reaching(&sources));
            for v in prog.vars.iter() {
                if member[v.id.idx()] && is_ret(prog, v.id) && bounded.contains(&node(v.id)) {
                    pins[v.id.idx()] = Some(s2.get(v.id.0));
                }
            }
            g.solve_greatest(&pins)
        }
    }
}
