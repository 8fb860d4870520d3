mod common;

use std::collections::{BTreeSet, VecDeque};

use common::oracle::*;

use mini3c::qualgraph::{
    CGraph, Elem, Lattice, Node, Solution, ARR, CHK, KIND, NTARR, PTR, PTYP, WILD,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Oracle answers are frozen: the digest changes if the enumeration (and so
// the expected solutions) ever differ from when these tests were written.
#[test]
fn matches_brute_force_unpinned() {
    let (unsat, digest) = oracle_sweep(2021, SWEEP, false);
    assert_eq!((unsat, digest), FROZEN_UNPINNED);
}

#[test]
fn matches_brute_force_pinned() {
    let (unsat, digest) = oracle_sweep(2022, SWEEP, true);
    assert_eq!((unsat, digest), FROZEN_PINNED);
}

#[test]
fn wild_flows_through_assignment() {
    // W -> z, z <-> *y ; y unconstrained
    let (z, ys) = (Node::Var(0), Node::Var(1));
    let g = graph(KIND, 3, &[(Node::Lit(WILD), z), (z, ys), (ys, z)]);
    let s = g.solve_least(&[]).unwrap();
    assert_eq!(s.values, vec![WILD, WILD, CHK]);
}

#[test]
fn empty_graph_is_bottom() {
    let g = CGraph::new(PTYP, 1);
    assert_eq!(g.solve_least(&[]).unwrap().values, vec![NTARR]);
    assert_eq!(CGraph::new(KIND, 1).solve_least(&[]).unwrap().values, vec![CHK]);
}

#[test]
fn upper_literal_caps_greatest() {
    let q = Node::Var(0);
    let g = graph(PTYP, 1, &[(q, Node::Lit(ARR))]);
    assert_eq!(g.solve_greatest(&[]).unwrap().values, vec![ARR]);
    let g = graph(PTYP, 1, &[(Node::Lit(PTR), q)]);
    assert_eq!(g.solve_greatest(&[]).unwrap().values, vec![PTR]);
    assert_eq!(g.solve_least(&[]).unwrap().values, vec![PTR]);
}

#[test]
fn conflicting_pin_reports_chain() {
    let g = graph(PTYP, 2, &[(Node::Lit(PTR), Node::Var(0)), (Node::Var(0), Node::Var(1))]);
    let err = g.solve_least(&[None, Some(ARR)]).unwrap_err();
    assert_eq!(err.chain, vec![Node::Lit(PTR), Node::Var(0), Node::Var(1)]);
}

#[test]
fn conflicts_between_literals() {
    let g = graph(PTYP, 2, &[(Node::Lit(PTR), Node::Var(0)), (Node::Var(0), Node::Lit(ARR)), (Node::Var(1), Node::Lit(ARR))]);
    assert_eq!(g.conflicts(), vec![0]);
}

fn naive_reach(edges: &[(Node, Node)], sources: &[Node]) -> BTreeSet<Node> {
    let mut seen: BTreeSet<Node> = sources.iter().copied().collect();
    let mut queue: VecDeque<Node> = sources.iter().copied().collect();
    while let Some(x) = queue.pop_front() {
        for &(a, b) in edges {
            if a == x && seen.insert(b) {
                queue.push_back(b);
            }
        }
    }
    seen
}

#[test]
fn reachability_matches_naive_bfs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..500 {
        let n = rng.gen_range(1..=15);
        let mut edges = Vec::new();
        // DAG: edges only go from lower to higher variable ids
        for _ in 0..rng.gen_range(0..=30) {
            let a = rng.gen_range(0..n as u32);
            let b = rng.gen_range(0..n as u32);
            if a < b {
                edges.push((Node::Var(a), Node::Var(b)));
            }
        }
        if rng.gen_bool(0.5) {
            edges.push((Node::Lit(WILD), Node::Var(rng.gen_range(0..n as u32))));
        }
        let g = graph(KIND, n, &edges);
        let k = rng.gen_range(0..=3);
        let sources: Vec<Node> = (0..k).map(|_| Node::Var(rng.gen_range(0..n as u32))).collect();
        assert_eq!(g.reachable_from(&sources), naive_reach(&edges, &sources));
        let w = [Node::Lit(WILD)];
        assert_eq!(g.reachable_from(&w), naive_reach(&edges, &w));
    }
    assert!(CGraph::new(KIND, 3).reachable_from(&[]).is_empty());
}

fn random_graph(rng: &mut ChaCha8Rng, lattice: Lattice) -> (CGraph, Case) {
    let c = random_case(rng, lattice, false);
    (graph(c.lattice, c.n, &c.edges), c)
}

#[test]
fn solver_properties() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for lattice in [KIND, PTYP] {
        for _ in 0..400 {
            let (g, c) = random_graph(&mut rng, lattice);
            let (Ok(lo), Ok(hi)) = (g.solve_least(&[]), g.solve_greatest(&[])) else {
                continue;
            };
            // least below greatest
            assert!(lo.values.iter().zip(&hi.values).all(|(a, b)| a <= b));
            // idempotent under its own pins
            let pin = |s: &Solution| s.values.iter().map(|&e| Some(e)).collect::<Vec<_>>();
            assert_eq!(g.solve_least(&pin(&lo)).unwrap(), lo);
            assert_eq!(g.solve_greatest(&pin(&hi)).unwrap(), hi);
            // adding an edge: least never goes down, greatest never goes up
            let mut edges = c.edges.clone();
            let a = Node::Var(rng.gen_range(0..c.n as u32));
            let b = if rng.gen_bool(0.3) {
                Node::Lit(rng.gen_range(0..lattice.len() as Elem))
            } else {
                Node::Var(rng.gen_range(0..c.n as u32))
            };
            edges.push((a, b));
            let g2 = graph(lattice, c.n, &edges);
            if let (Ok(lo2), Ok(hi2)) = (g2.solve_least(&[]), g2.solve_greatest(&[])) {
                assert!(lo.values.iter().zip(&lo2.values).all(|(x, y)| x <= y));
                assert!(hi.values.iter().zip(&hi2.values).all(|(x, y)| x >= y));
            }
        }
    }
}
