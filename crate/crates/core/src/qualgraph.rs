//! Constraint graphs over chain lattices, with least and greatest solving.
//!
//! An edge `x -> y` is the constraint `x ⊑ y`. Literal nodes stand for the
//! lattice elements themselves.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt::Write as _;

use serde::Serialize;

use crate::frontend::Span;
use crate::rootcause::WildReason;

pub type Elem = u8;

/// A finite chain, listed bottom to top.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Lattice {
    pub names: &'static [&'static str],
}

pub const KIND: Lattice = Lattice {
    names: &["chk", "wild"],
};
pub const CHK: Elem = 0;
pub const WILD: Elem = 1;

pub const PTYP: Lattice = Lattice {
    names: &["ntarr", "arr", "ptr"],
};
pub const NTARR: Elem = 0;
pub const ARR: Elem = 1;
pub const PTR: Elem = 2;

impl Lattice {
    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn bottom(&self) -> Elem {
        0
    }

    pub fn top(&self) -> Elem {
        (self.names.len() - 1) as Elem
    }

    pub fn join(&self, a: Elem, b: Elem) -> Elem {
        a.max(b)
    }

    pub fn meet(&self, a: Elem, b: Elem) -> Elem {
        a.min(b)
    }

    pub fn name(&self, e: Elem) -> &'static str {
        self.names[e as usize]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Node {
    Lit(Elem),
    Var(u32),
}

/// Why an edge exists; shown in graph dumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum EdgeReason {
    Assign,
    ParamPair,
    ReturnPair,
    CallArg,
    CallResult,
    Return,
    Seed(WildReason),
    Index,
    Arith,
    AddrOf,
    Alloc,
    StrLit,
    LibItype,
    Declared,
    ElemType,
    Test,
}

impl EdgeReason {
    pub fn label(self) -> String {
        match self {
            EdgeReason::Seed(r) => r.label().to_string(),
            other => format!("{other:?}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Edge {
    pub from: Node,
    pub to: Node,
    pub reason: EdgeReason,
    pub span: Option<Span>,
}

#[derive(Debug, Clone)]
pub struct CGraph {
    pub lattice: Lattice,
    n_vars: usize,
    edges: Vec<Edge>,
    seen: HashSet<(Node, Node)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Solution {
    pub values: Vec<Elem>,
}

impl Solution {
    pub fn get(&self, v: u32) -> Elem {
        self.values[v as usize]
    }

    pub fn value(&self, n: Node) -> Elem {
        match n {
            Node::Lit(e) => e,
            Node::Var(v) => self.get(v),
        }
    }
}

/// No solution exists; `chain` runs from the node that forces the value up
/// (or down) to the node whose bound it violates.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unsatisfiable constraints along {chain:?}")]
pub struct Unsat {
    pub chain: Vec<Node>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Least,
    Greatest,
}

impl CGraph {
    pub fn new(lattice: Lattice, n_vars: usize) -> Self {
        CGraph {
            lattice,
            n_vars,
            edges: Vec::new(),
            seen: HashSet::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.n_vars
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Adds `from ⊑ to`. Duplicate pairs and trivially true literal pairs
    /// are dropped; returns whether the edge was new.
    pub fn add(&mut self, from: Node, to: Node, reason: EdgeReason, span: Option<Span>) -> bool {
        if from == to {
            return false;
        }
        if let (Node::Lit(a), Node::Lit(b)) = (from, to) {
            assert!(a <= b, "literal edge {a} -> {b} is unsatisfiable");
            return false;
        }
        if !self.seen.insert((from, to)) {
            return false;
        }
        self.edges.push(Edge {
            from,
            to,
            reason,
            span,
        });
        true
    }

    pub fn add_both(&mut self, a: Node, b: Node, reason: EdgeReason, span: Option<Span>) {
        self.add(a, b, reason, span);
        self.add(b, a, reason, span);
    }

    pub fn contains(&self, from: Node, to: Node) -> bool {
        self.seen.contains(&(from, to))
    }

    /// The graph without one edge (used by what-if recounts).
    pub fn without(&self, from: Node, to: Node) -> CGraph {
        let mut g = CGraph::new(self.lattice, self.n_vars);
        for e in &self.edges {
            if (e.from, e.to) != (from, to) {
                g.add(e.from, e.to, e.reason, e.span);
            }
        }
        g
    }

    fn idx(&self, n: Node) -> usize {
        match n {
            Node::Lit(e) => e as usize,
            Node::Var(v) => self.lattice.len() + v as usize,
        }
    }

    fn node(&self, i: usize) -> Node {
        if i < self.lattice.len() {
            Node::Lit(i as Elem)
        } else {
            Node::Var((i - self.lattice.len()) as u32)
        }
    }

    /// Sorted adjacency lists: successors if `forward`, else predecessors.
    fn adjacency(&self, forward: bool) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.lattice.len() + self.n_vars];
        for e in &self.edges {
            let (a, b) = (self.idx(e.from), self.idx(e.to));
            if forward {
                adj[a].push(b);
            } else {
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    pub fn solve_least(&self, pins: &[Option<Elem>]) -> Result<Solution, Unsat> {
        self.solve(pins, Direction::Least)
    }

    pub fn solve_greatest(&self, pins: &[Option<Elem>]) -> Result<Solution, Unsat> {
        self.solve(pins, Direction::Greatest)
    }

    /// Propagates lower bounds forward (least) or upper bounds backward
    /// (greatest) from literals and pins, then checks the opposite bounds.
    pub fn solve(&self, pins: &[Option<Elem>], dir: Direction) -> Result<Solution, Unsat> {
        let sol = self.propagate(pins, dir, true)?;
        debug_assert!(self.check(&sol).is_ok());
        Ok(sol)
    }

    /// Fixpoint propagation. When `strict` is false a bound reaching a
    /// pinned node is ignored instead of reported, which yields the bounds
    /// implied on each variable even when the graph is unsatisfiable.
    fn propagate(&self, pins: &[Option<Elem>], dir: Direction, strict: bool) -> Result<Solution, Unsat> {
        let nl = self.lattice.len();
        let total = nl + self.n_vars;
        let start = match dir {
            Direction::Least => self.lattice.bottom(),
            Direction::Greatest => self.lattice.top(),
        };
        let pin = |i: usize| -> Option<Elem> {
            if i < nl {
                Some(i as Elem)
            } else {
                pins.get(i - nl).copied().flatten()
            }
        };
        let better = |new: Elem, old: Elem| match dir {
            Direction::Least => new > old,
            Direction::Greatest => new < old,
        };
        let mut val: Vec<Elem> = (0..total).map(|i| pin(i).unwrap_or(start)).collect();
        let mut cause: Vec<Option<usize>> = vec![None; total];
        let adj = self.adjacency(dir == Direction::Least);
        let mut queue: VecDeque<usize> = (0..total).filter(|&i| pin(i).is_some()).collect();
        let mut queued = vec![false; total];
        for &i in &queue {
            queued[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            queued[i] = false;
            for &j in &adj[i] {
                if better(val[i], val[j]) {
                    if pin(j).is_some() && !strict {
                        continue;
                    }
                    if pin(j).is_some() {
                        let mut chain = vec![self.node(j)];
                        let mut k = Some(i);
                        while let Some(x) = k {
                            chain.push(self.node(x));
                            k = cause[x];
                        }
                        chain.reverse();
                        return Err(Unsat { chain });
                    }
                    val[j] = val[i];
                    cause[j] = Some(i);
                    if !queued[j] {
                        queued[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        Ok(Solution {
            values: val[nl..].to_vec(),
        })
    }

    /// First edge the solution violates, if any.
    pub fn check(&self, sol: &Solution) -> Result<(), Edge> {
        for e in &self.edges {
            if sol.value(e.from) > sol.value(e.to) {
                return Err(*e);
            }
        }
        Ok(())
    }

    /// Forward reachability over directed edges, sources included.
    pub fn reachable_from(&self, sources: &[Node]) -> BTreeSet<Node> {
        let adj = self.adjacency(true);
        self.bfs(&adj, sources)
    }

    /// Backward reachability: every node with a path into a source.
    pub fn reaching(&self, sources: &[Node]) -> BTreeSet<Node> {
        let adj = self.adjacency(false);
        self.bfs(&adj, sources)
    }

    fn bfs(&self, adj: &[Vec<usize>], sources: &[Node]) -> BTreeSet<Node> {
        let mut seen = vec![false; adj.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            let i = self.idx(s);
            if !seen[i] {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        (0..adj.len())
            .filter(|&i| seen[i])
            .map(|i| self.node(i))
            .collect()
    }

    /// Forward reachability reusing a prebuilt adjacency (for many queries).
    pub fn reach_index(&self) -> ReachIndex<'_> {
        ReachIndex {
            g: self,
            adj: self.adjacency(true),
        }
    }

    /// Variables whose lower bound from the literals exceeds their upper
    /// bound from the literals.
    pub fn conflicts(&self) -> Vec<u32> {
        let lenient = |dir| self.propagate(&[], dir, false).expect("lenient propagation");
        let lo = lenient(Direction::Least);
        let hi = lenient(Direction::Greatest);
        (0..self.n_vars as u32).filter(|&v| lo.get(v) > hi.get(v)).collect()
    }

    /// DOT rendering. `name` labels variables; `sol` (if any) is appended.
    pub fn to_dot(&self, title: &str, name: &dyn Fn(u32) -> String, sol: Option<&Solution>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph \"{title}\" {{");
        for e in 0..self.lattice.len() {
            let _ = writeln!(
                out,
                "  l{e} [label=\"{}\", shape=box];",
                self.lattice.name(e as Elem).to_uppercase()
            );
        }
        for v in 0..self.n_vars as u32 {
            let label = match sol {
                Some(s) => format!("{} = {}", name(v), self.lattice.name(s.get(v))),
                None => name(v),
            };
            let _ = writeln!(out, "  v{v} [label=\"{}\"];", label.replace('"', "\\\""));
        }
        let id = |n: Node| match n {
            Node::Lit(e) => format!("l{e}"),
            Node::Var(v) => format!("v{v}"),
        };
        for e in &self.edges {
            let line = e.span.map(|s| format!("{}: ", s.line)).unwrap_or_default();
            let _ = writeln!(
                out,
                "  {} -> {} [label=\"{line}{}\"];",
                id(e.from),
                id(e.to),
                e.reason.label()
            );
        }
        out.push_str("}\n");
        out
    }
}

pub struct ReachIndex<'g> {
    g: &'g CGraph,
    adj: Vec<Vec<usize>>,
}

impl ReachIndex<'_> {
    pub fn from(&self, sources: &[Node]) -> BTreeSet<Node> {
        self.g.bfs(&self.adj, sources)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(i: u32) -> Node {
        Node::Var(i)
    }

    #[test]
    fn func_example() {
        // z = (int *)5; *y = z;  vars: y=0, *y=1, z=2
        let mut g = CGraph::new(KIND, 3);
        g.add(Node::Lit(WILD), v(2), EdgeReason::Test, None);
        g.add_both(v(2), v(1), EdgeReason::Test, None);
        let s = g.solve_least(&[]).unwrap();
        assert_eq!(s.values, vec![CHK, WILD, WILD]);
    }

    #[test]
    fn single_var_defaults() {
        let g = CGraph::new(PTYP, 1);
        assert_eq!(g.solve_least(&[]).unwrap().values, vec![NTARR]);
        assert_eq!(g.solve_greatest(&[]).unwrap().values, vec![PTR]);
    }

    #[test]
    fn index_and_addr_of_literals() {
        let mut g = CGraph::new(PTYP, 2);
        g.add(v(0), Node::Lit(ARR), EdgeReason::Index, None);
        g.add(Node::Lit(PTR), v(1), EdgeReason::AddrOf, None);
        let s = g.solve_greatest(&[]).unwrap();
        assert_eq!(s.values, vec![ARR, PTR]);
        let s = g.solve_least(&[]).unwrap();
        assert_eq!(s.values, vec![NTARR, PTR]);
    }

    #[test]
    fn pinned_conflict_reports_chain() {
        let mut g = CGraph::new(PTYP, 2);
        g.add(Node::Lit(PTR), v(0), EdgeReason::Test, None);
        g.add(v(0), v(1), EdgeReason::Test, None);
        let err = g.solve_least(&[None, Some(ARR)]).unwrap_err();
        assert_eq!(err.chain, vec![Node::Lit(PTR), v(0), v(1)]);
    }

    #[test]
    fn conflicting_literals_are_found() {
        let mut g = CGraph::new(PTYP, 2);
        g.add(Node::Lit(PTR), v(0), EdgeReason::Test, None);
        g.add(v(0), Node::Lit(ARR), EdgeReason::Test, None);
        assert_eq!(g.conflicts(), vec![0]);
    }

    #[test]
    fn reachability_includes_sources() {
        let mut g = CGraph::new(KIND, 3);
        g.add(v(0), v(1), EdgeReason::Test, None);
        let r = g.reachable_from(&[v(0)]);
        assert_eq!(r.into_iter().collect::<Vec<_>>(), vec![v(0), v(1)]);
        assert!(g.reachable_from(&[]).is_empty());
    }

    #[test]
    fn dedup_and_trivial_literal_edges() {
        let mut g = CGraph::new(KIND, 1);
        assert!(g.add(v(0), Node::Lit(WILD), EdgeReason::Test, None));
        assert!(!g.add(v(0), Node::Lit(WILD), EdgeReason::Test, None));
        assert!(!g.add(Node::Lit(CHK), Node::Lit(WILD), EdgeReason::Test, None));
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn dot_mentions_every_edge() {
        let mut g = CGraph::new(KIND, 2);
        g.add(Node::Lit(WILD), v(0), EdgeReason::Seed(WildReason::InvalidCast), None);
        g.add(v(0), v(1), EdgeReason::Assign, None);
        let s = g.solve_least(&[]).unwrap();
        let dot = g.to_dot("kind", &|i| format!("x{i}"), Some(&s));
        assert!(dot.contains("l1 -> v0"));
        assert!(dot.contains("x1 = wild"));
    }
}
