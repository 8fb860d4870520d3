//! The root-cause and statistics report, as JSON or text.

use std::fmt::Write as _;

use serde::Serialize;

use crate::bounds::{self, decl_owner};
use crate::frontend::Program;
use crate::pipeline::Output;
use crate::rewrite::NeedsBounds;
use crate::rootcause::Totals;

#[derive(Debug, Clone, Serialize)]
pub struct RootCauseEntry {
    pub name: String,
    pub file: String,
    pub line: u32,
    pub reason: String,
    pub influence: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReasonEntry {
    pub reason: String,
    pub pct_of_wild: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundEntry {
    pub name: String,
    pub file: String,
    pub line: u32,
    pub bound: String,
    pub provenance: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub root_causes: Vec<RootCauseEntry>,
    pub totals: Totals,
    pub reasons: Vec<ReasonEntry>,
    pub bounds: Vec<BoundEntry>,
    pub needs_bounds: Vec<NeedsBounds>,
}

impl Report {
    pub fn new(prog: &Program, out: &Output) -> Report {
        let a = &out.analysis;
        let root_causes = a
            .root_causes
            .iter()
            .map(|r| RootCauseEntry {
                name: r.name.clone(),
                file: r.file.clone(),
                line: r.line,
                reason: r.reason.label().to_string(),
                influence: r.influence,
            })
            .collect();
        let reasons = a
            .reasons
            .iter()
            .map(|r| ReasonEntry {
                reason: r.reason.label().to_string(),
                pct_of_wild: (r.pct_of_wild * 10.0).round() / 10.0,
            })
            .collect();
        let mut bounds_list = Vec::new();
        for (node, ((k, s), prov)) in &out.bounds.beta {
            if decl_owner(prog, node).is_none() {
                continue;
            }
            let crate::constraints::PNode::Var(q) = node else { continue };
            let v = prog.vars.get(*q);
            let file = prog.file(v.span.file);
            if file.prelude || file.readonly {
                continue;
            }
            let Some(e) = bounds::render(prog, s) else { continue };
            bounds_list.push(BoundEntry {
                name: v.name.clone(),
                file: file.name.clone(),
                line: v.span.line,
                bound: format!("{}({e})", k.keyword()),
                provenance: prov.label(),
            });
        }
        Report {
            root_causes,
            totals: a.totals.clone(),
            reasons,
            bounds: bounds_list,
            needs_bounds: out.plan.needs_bounds.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let t = &self.totals;
        let _ = writeln!(
            s,
            "pointers: {} (checked {}, wild {}; ptr {}, arr {}, ntarr {})",
            t.pointers, t.chk, t.wild, t.ptr, t.arr, t.ntarr
        );
        let _ = writeln!(s, "root causes: {}", self.root_causes.len());
        for r in &self.root_causes {
            let _ = writeln!(
                s,
                "  {}:{}: {} [{}] influences {}",
                r.file, r.line, r.name, r.reason, r.influence
            );
        }
        if !self.reasons.is_empty() {
            let _ = writeln!(s, "wild pointers by reason:");
            for r in &self.reasons {
                let _ = writeln!(s, "  {:5.1}%  {}", r.pct_of_wild, r.reason);
            }
        }
        if !self.bounds.is_empty() {
            let _ = writeln!(s, "bounds:");
            for b in &self.bounds {
                let _ = writeln!(s, "  {}:{}: {} : {} ({})", b.file, b.line, b.name, b.bound, b.provenance);
            }
        }
        if !self.needs_bounds.is_empty() {
            let _ = writeln!(s, "needs bounds:");
            for n in &self.needs_bounds {
                let _ = writeln!(s, "  {}:{}: {}", n.file, n.line, n.name);
            }
        }
        s
    }
}
