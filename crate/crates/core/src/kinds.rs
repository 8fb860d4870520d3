//! Checked/wild inference.

use crate::constraints::{Facts, FlowKind, Seed};
use crate::frontend::program::{Callee, FuncId};
use crate::frontend::{Owner, Program, QVarId, QualVar, Role};
use crate::qualgraph::{CGraph, EdgeReason, Node, Solution, CHK, KIND, WILD};
use crate::rootcause::WildReason;

/// Levels whose kind the source fixes as checked: nothing flows into them.
pub fn kind_pinned(v: &QualVar) -> bool {
    match v.role {
        Role::Internal => v.declared.is_checked(),
        _ => v.declared_checked().is_some(),
    }
}

fn node(q: QVarId) -> Node {
    Node::Var(q.0)
}

pub fn kind_graph(prog: &Program, facts: &Facts, extra: &[Seed]) -> CGraph {
    let vars = &prog.vars;
    let mut g = CGraph::new(KIND, vars.len());
    let pinned = |q: QVarId| kind_pinned(vars.get(q));
    let edge = |g: &mut CGraph, a: QVarId, b: QVarId, r: EdgeReason, span| {
        if !pinned(b) {
            g.add(node(a), node(b), r, span);
        }
    };
    for v in vars.iter() {
        if v.role == Role::External {
            if let Some(int) = vars.partner(v.id) {
                let r = match v.owner {
                    Owner::Ret(_) => EdgeReason::ReturnPair,
                    _ => EdgeReason::ParamPair,
                };
                edge(&mut g, v.id, int, r, Some(v.span));
            }
        }
    }
    for f in &facts.flows {
        let span = Some(f.span);
        for (&s, &d) in f.src.vars.iter().zip(&f.dst.vars) {
            match f.kind {
                FlowKind::Assign | FlowKind::Return => {
                    let r = if f.kind == FlowKind::Return {
                        EdgeReason::Return
                    } else {
                        EdgeReason::Assign
                    };
                    edge(&mut g, s, d, r, span);
                    edge(&mut g, d, s, r, span);
                }
                FlowKind::CallArg => edge(&mut g, d, s, EdgeReason::CallArg, span),
                FlowKind::CallResult => edge(&mut g, s, d, EdgeReason::CallResult, span),
            }
        }
        if let (Some(ws), FlowKind::Assign | FlowKind::Return) = (f.src.wild, f.kind) {
            for &d in &f.dst.vars {
                if !pinned(d) {
                    g.add(
                        Node::Lit(WILD),
                        node(d),
                        EdgeReason::Seed(WildReason::InvalidCast),
                        Some(ws),
                    );
                }
            }
        }
    }
    for s in facts.seeds.iter().chain(extra) {
        if !pinned(s.var) {
            g.add(Node::Lit(WILD), node(s.var), EdgeReason::Seed(s.reason), Some(s.span));
        }
    }
    g
}

pub fn solve(g: &CGraph) -> Solution {
    g.solve_least(&[]).expect("kind constraints without pins are satisfiable")
}

pub fn is_chk(sol: &Solution, q: QVarId) -> bool {
    sol.get(q.0) == CHK
}

/// An external level that is wild while its internal partner is checked
/// cannot be expressed; returns the offending external variable.
pub fn check_pairs(prog: &Program, sol: &Solution) -> Result<(), QVarId> {
    for v in prog.vars.iter() {
        if v.role == Role::External {
            if let Some(int) = prog.vars.partner(v.id) {
                if sol.get(v.id.0) == WILD && sol.get(int.0) == CHK {
                    return Err(v.id);
                }
            }
        }
    }
    Ok(())
}

/// An argument that must be wrapped in `_Assume_bounds_cast` because a
/// wild value is passed to a fully checked parameter.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CastDemand {
    pub call: usize,
    pub arg: usize,
    pub callee: FuncId,
}

pub fn cast_demands(prog: &Program, facts: &Facts, sol: &Solution) -> Vec<CastDemand> {
    let mut out = Vec::new();
    for c in &facts.calls {
        let Callee::Func(f) = c.callee else { continue };
        for (i, a) in c.args.iter().enumerate() {
            let ext = prog.vars.levels(Owner::Param(f, i), Role::External);
            let int = prog.vars.levels(Owner::Param(f, i), Role::Internal);
            let (Some(&e), Some(&n)) = (ext.first(), int.first()) else { continue };
            if !(is_chk(sol, e) && is_chk(sol, n)) {
                continue;
            }
            let wild = a.value.wild.is_some() || a.value.outer().is_some_and(|q| !is_chk(sol, q));
            if wild {
                out.push(CastDemand {
                    call: c.id,
                    arg: i,
                    callee: f,
                });
            }
        }
    }
    out
}
