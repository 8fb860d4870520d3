//! The whole analysis: constraints, kinds, pointer types, bounds.

use std::time::{Duration, Instant};

use crate::bounds::{self, BoundsInput, BoundsResult};
use crate::constraints::{self, Facts, Seed};
use crate::rewrite::{self, Plan, RewriteInput};
use crate::rootcause;
use crate::frontend::{Program, QVarId};
use crate::kinds::{self, CastDemand};
use crate::par::ExecMode;
use crate::ptyp::{self, Solver};
use crate::qualgraph::{CGraph, Solution, Unsat};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    pub solver: Solver,
    pub heuristics: bool,
    pub mode: ExecMode,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            solver: Solver::ThreeStep,
            heuristics: true,
            mode: ExecMode::Parallel,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("internal error: {0} has a wild external type but a checked internal type")]
    WildExternal(String),
    #[error("internal error: pointer type constraints unsatisfiable: {0}")]
    Unsat(#[from] Unsat),
}

pub struct Inference {
    pub facts: Facts,
    pub kind_graph: CGraph,
    pub kinds: Solution,
    pub ptyp_graph: CGraph,
    pub ptyps: Solution,
    /// Variables demoted to wild because their pointer types conflicted.
    pub demoted: Vec<Seed>,
    pub casts: Vec<CastDemand>,
}

impl Inference {
    pub fn is_chk(&self, q: QVarId) -> bool {
        kinds::is_chk(&self.kinds, q)
    }
}

/// Kind and pointer-type inference, demoting conflicting variables to wild
/// until the pointer-type constraints are consistent.
pub fn infer(prog: &Program, opts: &Options) -> Result<Inference, AnalysisError> {
    let facts = constraints::collect(prog);
    let mut demoted: Vec<Seed> = Vec::new();
    loop {
        let kind_graph = kinds::kind_graph(prog, &facts, &demoted);
        let ksol = kinds::solve(&kind_graph);
        let ptyp_graph = ptyp::ptyp_graph(prog, &facts, &ksol);
        let more = ptyp::conflict_seeds(prog, &ptyp_graph, &ksol);
        if !more.is_empty() {
            demoted.extend(more);
            continue;
        }
        kinds::check_pairs(prog, &ksol)
            .map_err(|q| AnalysisError::WildExternal(prog.vars.get(q).name.clone()))?;
        let ptyps = ptyp::solve(prog, &ptyp_graph, &ksol, opts.solver)?;
        let casts = kinds::cast_demands(prog, &facts, &ksol);
        return Ok(Inference {
            facts,
            kind_graph,
            kinds: ksol,
            ptyp_graph,
            ptyps,
            demoted,
            casts,
        });
    }
}

/// Wall-clock time spent in each phase.
#[derive(Debug, Clone, Default)]
pub struct Timings {
    pub phases: Vec<(&'static str, Duration)>,
}

impl Timings {
    fn time<T>(&mut self, name: &'static str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.phases.push((name, t.elapsed()));
        out
    }
}

/// Everything one run produces.
pub struct Output {
    pub inference: Inference,
    pub bounds: BoundsResult,
    pub analysis: rootcause::Analysis,
    pub plan: Plan,
    pub files: Vec<(String, String)>,
    pub timings: Timings,
    pub dots: Dots,
}

#[derive(Debug, Clone, Default)]
pub struct Dots {
    pub kind: String,
    pub ptyp: String,
    pub pfg: String,
    pub sfg: String,
}

pub fn run(prog: &Program, opts: &Options) -> Result<Output, AnalysisError> {
    let mut timings = Timings::default();
    let inference = timings.time("constraints+solve", || infer(prog, opts))?;
    let (bounds, pfg, sfg) = timings.time("bounds", || {
        bounds::infer(&BoundsInput {
            prog,
            facts: &inference.facts,
            kinds: &inference.kinds,
            ptyps: &inference.ptyps,
            heuristics: opts.heuristics,
        })
    });
    let analysis = timings.time("root-cause", || {
        rootcause::analyze(prog, &inference.kind_graph, &inference.kinds, &inference.ptyps, opts.mode)
    });
    let plan = timings.time("rewrite", || {
        rewrite::plan(&RewriteInput {
            prog,
            facts: &inference.facts,
            kinds: &inference.kinds,
            ptyps: &inference.ptyps,
            bounds: &bounds,
            casts: &inference.casts,
        })
    });
    let files = rewrite::rewrite_files(prog, &plan);
    let name = |v: u32| prog.vars.get(QVarId(v)).name.clone();
    let dots = Dots {
        kind: inference.kind_graph.to_dot("kind", &name, Some(&inference.kinds)),
        ptyp: inference.ptyp_graph.to_dot("ptyp", &name, Some(&inference.ptyps)),
        pfg,
        sfg,
    };
    Ok(Output {
        inference,
        bounds,
        analysis,
        plan,
        files,
        timings,
        dots,
    })
}

/// Analyzes independent programs, in parallel when `opts.mode` allows.
pub fn run_batch(progs: &[Program], opts: &Options) -> Vec<Result<Output, AnalysisError>> {
    let inner = Options {
        mode: ExecMode::Sequential,
        ..*opts
    };
    opts.mode.map(progs, |p| run(p, &inner))
}
