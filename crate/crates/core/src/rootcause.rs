//! Root causes of wildness and their influence.

use serde::Serialize;

/// Why a pointer was seeded wild directly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum WildReason {
    InvalidCast,
    DefaultVoidType,
    NonWritableFile,
    UnionField,
    ConflictingTypes,
    UnsafeAllocatorCall,
    VariadicCall,
    ExternGlobal,
}

impl WildReason {
    pub fn label(self) -> &'static str {
        match self {
            WildReason::InvalidCast => "Invalid Cast",
            WildReason::DefaultVoidType => "Default void* type",
            WildReason::NonWritableFile => "Source code in non-writable file",
            WildReason::UnionField => "Union field encountered",
            WildReason::ConflictingTypes => "Inferred conflicting types",
            WildReason::UnsafeAllocatorCall => "Unsafe call to allocator function",
            WildReason::VariadicCall => "Pointer in variadic call",
            WildReason::ExternGlobal => "External global variable or function",
        }
    }
}

use std::collections::{BTreeMap, BTreeSet};

use crate::frontend::{Owner, Program, QVarId, Role};
use crate::par::ExecMode;
use crate::qualgraph::{CGraph, EdgeReason, Node, Solution, ARR, CHK, NTARR, PTR};

/// The pointers counted in statistics, each by the variable whose kind
/// decides it: the internal side for parameters and returns.
pub fn counted(prog: &Program) -> Vec<QVarId> {
    prog.vars
        .iter()
        .filter(|v| !v.is_temp() && !v.is_array() && !v.readonly)
        .filter(|v| !prog.file(v.span.file).prelude)
        .filter(|v| match v.owner {
            Owner::Param(..) | Owner::Ret(_) => v.role == Role::Internal,
            _ => true,
        })
        .map(|v| v.id)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RootCause {
    pub var: QVarId,
    pub name: String,
    pub file: String,
    pub line: u32,
    pub reason: WildReason,
    pub influence: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Totals {
    pub pointers: usize,
    pub chk: usize,
    pub wild: usize,
    pub ptr: usize,
    pub arr: usize,
    pub ntarr: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReasonShare {
    pub reason: WildReason,
    pub wild: usize,
    pub pct_of_wild: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub root_causes: Vec<RootCause>,
    pub totals: Totals,
    pub reasons: Vec<ReasonShare>,
}

/// Display name of a variable as users know it (the external view for
/// parameters, without level markers handled by the caller).
fn display_name(prog: &Program, q: QVarId) -> String {
    prog.vars.get(q).name.clone()
}

pub fn analyze(prog: &Program, kinds: &CGraph, ksol: &Solution, ptyps: &Solution, mode: ExecMode) -> Analysis {
    let counted = counted(prog);
    let counted_set: BTreeSet<QVarId> = counted.iter().copied().collect();
    let mut totals = Totals {
        pointers: counted.len(),
        ..Default::default()
    };
    for &q in &counted {
        if ksol.get(q.0) == CHK {
            totals.chk += 1;
            match ptyps.get(q.0) {
                PTR => totals.ptr += 1,
                ARR => totals.arr += 1,
                NTARR => totals.ntarr += 1,
                _ => {}
            }
        } else {
            totals.wild += 1;
        }
    }

    let mut seeds: BTreeMap<(QVarId, WildReason), crate::frontend::Span> = BTreeMap::new();
    for e in kinds.edges() {
        if let (Node::Var(v), EdgeReason::Seed(r), Some(span)) = (e.to, e.reason, e.span) {
            seeds.entry((QVarId(v), r)).or_insert(span);
        }
    }
    let keys: Vec<(QVarId, WildReason)> = seeds.keys().copied().collect();
    let index = kinds.reach_index();
    let reached: Vec<BTreeSet<QVarId>> = mode.map(&keys, |&(q, _)| {
        index
            .from(&[Node::Var(q.0)])
            .into_iter()
            .filter_map(|n| match n {
                Node::Var(v) if counted_set.contains(&QVarId(v)) => Some(QVarId(v)),
                _ => None,
            })
            .collect()
    });

    let mut root_causes: Vec<RootCause> = keys
        .iter()
        .zip(&reached)
        .map(|(&(q, reason), r)| {
            let span = seeds[&(q, reason)];
            RootCause {
                var: q,
                name: display_name(prog, q),
                file: prog.file(span.file).name.clone(),
                line: span.line,
                reason,
                influence: r.len(),
            }
        })
        .collect();
    root_causes.sort_by(|a, b| {
        b.influence
            .cmp(&a.influence)
            .then_with(|| a.file.cmp(&b.file))
            .then_with(|| a.line.cmp(&b.line))
            .then_with(|| a.name.cmp(&b.name))
    });

    let mut by_reason: BTreeMap<WildReason, BTreeSet<QVarId>> = BTreeMap::new();
    for (&(_, reason), r) in keys.iter().zip(&reached) {
        by_reason.entry(reason).or_default().extend(r.iter().copied());
    }
    let mut reasons: Vec<ReasonShare> = by_reason
        .into_iter()
        .map(|(reason, set)| ReasonShare {
            reason,
            wild: set.len(),
            pct_of_wild: if totals.wild == 0 {
                0.0
            } else {
                100.0 * set.len() as f64 / totals.wild as f64
            },
        })
        .collect();
    reasons.sort_by(|a, b| b.wild.cmp(&a.wild).then(a.reason.cmp(&b.reason)));
    Analysis {
        root_causes,
        totals,
        reasons,
    }
}
