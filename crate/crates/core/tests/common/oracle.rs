//! Independent oracles shared by the property tests and the acceptance run.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use mini3c::bounds::{self, pscope, sscope, visible, Provenance};
use mini3c::constraints::{PNode, SNode};
use mini3c::frontend::{parse_str, Owner, Program, QVarId, Role};
use mini3c::pipeline::{infer, run, Options};
use mini3c::qualgraph::{CGraph, EdgeReason, Elem, Lattice, Node, Solution, KIND, PTYP, WILD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gen::{self, Shape};
use super::Run;

// ---- lattice solver ----

pub fn graph(lattice: Lattice, n: usize, edges: &[(Node, Node)]) -> CGraph {
    let mut g = CGraph::new(lattice, n);
    for &(a, b) in edges {
        g.add(a, b, EdgeReason::Test, None);
    }
    g
}

pub struct Case {
    pub lattice: Lattice,
    pub n: usize,
    pub edges: Vec<(Node, Node)>,
    pub pins: Vec<Option<Elem>>,
}

pub fn random_case(rng: &mut ChaCha8Rng, lattice: Lattice, pin_some: bool) -> Case {
    let n = rng.gen_range(1..=12);
    let m = rng.gen_range(0..=20);
    let nl = lattice.len() as Elem;
    let node = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.1) {
            Node::Lit(rng.gen_range(0..nl))
        } else {
            Node::Var(rng.gen_range(0..n as u32))
        }
    };
    let mut edges = Vec::new();
    while edges.len() < m {
        let (a, b) = (node(rng), node(rng));
        if matches!((a, b), (Node::Lit(_), Node::Lit(_))) || a == b {
            continue;
        }
        edges.push((a, b));
    }
    let pins = (0..n)
        .map(|_| (pin_some && rng.gen_bool(0.15)).then(|| rng.gen_range(0..nl)))
        .collect();
    Case {
        lattice,
        n,
        edges,
        pins,
    }
}

/// Exhaustive enumeration of every satisfying assignment, with pruning on
/// edges whose endpoints are both assigned. Returns the pointwise least and
/// greatest satisfying assignments, or None when nothing satisfies.
pub fn brute_force(c: &Case) -> Option<(Vec<Elem>, Vec<Elem>)> {
    fn val(a: &[Elem], n: Node) -> Option<Elem> {
        match n {
            Node::Lit(e) => Some(e),
            Node::Var(v) => a.get(v as usize).copied(),
        }
    }
    fn go(c: &Case, a: &mut Vec<Elem>, lo: &mut Vec<Elem>, hi: &mut Vec<Elem>, any: &mut bool) {
        for &(x, y) in &c.edges {
            if let (Some(p), Some(q)) = (val(a, x), val(a, y)) {
                if p > q {
                    return;
                }
            }
        }
        if a.len() == c.n {
            if !*any {
                *lo = a.clone();
                *hi = a.clone();
                *any = true;
            }
            for i in 0..c.n {
                lo[i] = lo[i].min(a[i]);
                hi[i] = hi[i].max(a[i]);
            }
            return;
        }
        let i = a.len();
        let choices: Vec<Elem> = match c.pins[i] {
            Some(p) => vec![p],
            None => (0..c.lattice.len() as Elem).collect(),
        };
        for e in choices {
            a.push(e);
            go(c, a, lo, hi, any);
            a.pop();
        }
    }
    let (mut lo, mut hi, mut any) = (Vec::new(), Vec::new(), false);
    go(c, &mut Vec::new(), &mut lo, &mut hi, &mut any);
    any.then_some((lo, hi))
}

pub fn satisfies(c: &Case, a: &[Elem]) -> bool {
    let v = |n: Node| match n {
        Node::Lit(e) => e,
        Node::Var(i) => a[i as usize],
    };
    c.edges.iter().all(|&(x, y)| v(x) <= v(y))
}

pub fn fnv(h: &mut u64, bytes: &[u8]) {
    for &b in bytes {
        *h ^= u64::from(b);
        *h = h.wrapping_mul(0x100000001b3);
    }
}

/// Runs the solvers against the oracle on `count` random graphs per
/// lattice; returns (unsat count, digest of every oracle answer).
pub fn oracle_sweep(seed: u64, count: usize, pin_some: bool) -> (usize, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unsat = 0;
    let mut digest = 0xcbf29ce484222325u64;
    for lattice in [KIND, PTYP] {
        for _ in 0..count {
            let c = random_case(&mut rng, lattice, pin_some);
            let g = graph(c.lattice, c.n, &c.edges);
            let least = g.solve_least(&c.pins);
            let greatest = g.solve_greatest(&c.pins);
            match brute_force(&c) {
                None => {
                    unsat += 1;
                    fnv(&mut digest, b"unsat");
                    assert!(least.is_err() && greatest.is_err(), "{:?}", c.edges);
                }
                Some((lo, hi)) => {
                    assert!(satisfies(&c, &lo), "pointwise least must satisfy: {:?}", c.edges);
                    assert!(satisfies(&c, &hi), "pointwise greatest must satisfy: {:?}", c.edges);
                    let least = least.expect("satisfiable");
                    let greatest = greatest.expect("satisfiable");
                    assert_eq!(least.values, lo, "least {:?} pins {:?}", c.edges, c.pins);
                    assert_eq!(greatest.values, hi, "greatest {:?} pins {:?}", c.edges, c.pins);
                    assert!(g.check(&least).is_ok() && g.check(&greatest).is_ok());
                    fnv(&mut digest, &lo);
                    fnv(&mut digest, &hi);
                }
            }
        }
    }
    (unsat, digest)
}

pub const FROZEN_UNPINNED: (usize, u64) = (242, 6645898885467572457);
pub const FROZEN_PINNED: (usize, u64) = (406, 5866567567209774659);

pub const SWEEP: usize = 600;

// ---- root causes ----

/// Pointers that statistics count, recomputed from the variable table.
pub fn counted(prog: &Program) -> BTreeSet<u32> {
    prog.vars
        .iter()
        .filter(|v| !prog.file(v.span.file).prelude && !v.readonly && !v.is_temp() && v.role != Role::Array)
        .filter(|v| !matches!(v.owner, Owner::Param(..) | Owner::Ret(_)) || v.role == Role::Internal)
        .map(|v| v.id.0)
        .collect()
}

pub fn bfs(g: &CGraph, from: Node) -> BTreeSet<Node> {
    let mut seen = BTreeSet::from([from]);
    let mut queue = VecDeque::from([from]);
    while let Some(x) = queue.pop_front() {
        for e in g.edges().iter().filter(|e| e.from == x) {
            if seen.insert(e.to) {
                queue.push_back(e.to);
            }
        }
    }
    seen
}

pub fn wild_count(sol: &Solution, counted: &BTreeSet<u32>) -> usize {
    counted.iter().filter(|&&v| sol.get(v) == WILD).count()
}

/// Checks every root cause of `count` random programs against the
/// delete-edge oracle; returns how many programs had root causes.
pub fn influence_sweep(seed: u64, count: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape {
        globals: true,
        sinks: true,
        casts: true,
        addr: true,
    };
    let mut with_causes = 0;
    for _ in 0..count {
        let src = gen::program(&mut rng, shape).render();
        let prog = parse_str("t.mc", &src).unwrap();
        let out = run(&prog, &Options::default()).unwrap();
        let g = &out.inference.kind_graph;
        let counted = counted(&prog);
        let base = wild_count(&out.inference.kinds, &counted);
        let causes = &out.analysis.root_causes;
        if !causes.is_empty() {
            with_causes += 1;
        }
        let mut covered = BTreeSet::new();
        let reach: Vec<BTreeSet<u32>> = causes
            .iter()
            .map(|rc| {
                bfs(g, Node::Var(rc.var.0))
                    .into_iter()
                    .filter_map(|n| match n {
                        Node::Var(v) if counted.contains(&v) => Some(v),
                        _ => None,
                    })
                    .collect()
            })
            .collect();
        for (i, rc) in causes.iter().enumerate() {
            assert_eq!(rc.influence, reach[i].len(), "{} in\n{src}", rc.name);
            assert!(reach[i].iter().all(|&v| out.inference.kinds.get(v) == WILD));
            covered.extend(reach[i].iter().copied());

            // deleting this cause's seed edge and recounting
            let h = g.without(Node::Lit(WILD), Node::Var(rc.var.0));
            let after = wild_count(&h.solve_least(&[]).unwrap(), &counted);
            assert!(after <= base);
            let drop = base - after;
            assert!(drop <= rc.influence, "{} in\n{src}", rc.name);
            let mine_only: usize = reach[i]
                .iter()
                .filter(|v| reach.iter().enumerate().all(|(j, r)| j == i || !r.contains(v)))
                .count();
            // other seeds on the same variable keep it wild
            let resown = causes.iter().filter(|c| c.var == rc.var).count() > 1;
            if !resown {
                assert!(drop >= mine_only, "{} in\n{src}", rc.name);
            }
        }
        // every wild pointer is explained by some root cause
        for &v in &counted {
            if out.inference.kinds.get(v) == WILD {
                assert!(covered.contains(&v), "{} unexplained in\n{src}", prog.vars.get(QVarId(v)).name);
            }
        }
        let total: usize = causes.iter().map(|c| c.influence).sum();
        assert!(total >= base);
        // sorted by influence, descending
        assert!(causes.windows(2).all(|w| w[0].influence >= w[1].influence));
        // deleting the top root cause never adds wildness
        if let Some(top) = causes.first() {
            let h = g.without(Node::Lit(WILD), Node::Var(top.var.0));
            assert!(wild_count(&h.solve_least(&[]).unwrap(), &counted) <= base);
        }
    }
    with_causes
}

// ---- localized wildness ----

/// Kind of every variable, keyed so that the same source entity matches
/// across two versions of a program. Temporaries are named by position
/// since their names carry line numbers.
pub type Key = (String, String, usize, String, usize);

pub fn keyed(prog: &Program, sol: &Solution, keep: impl Fn(&str, Role) -> bool) -> BTreeMap<Key, u8> {
    let mut seen: BTreeMap<(String, String, usize, String), usize> = BTreeMap::new();
    let mut out = BTreeMap::new();
    for v in prog.vars.iter() {
        let func = v.func.map(|f| prog.func(f).name.clone()).unwrap_or_default();
        let name = if v.is_temp() { "<temp>".to_string() } else { v.name.clone() };
        let base = (func.clone(), name, v.level, format!("{:?}", v.role));
        let n = seen.entry(base.clone()).or_default();
        *n += 1;
        if keep(&func, v.role) {
            out.insert((base.0, base.1, base.2, base.3, *n), sol.get(v.id.0));
        }
    }
    out
}

/// Kinds after the full pipeline, or straight from the kind graph before
/// any pointer-type conflicts are resolved.
pub fn kinds(src: &str, full: bool) -> (Program, Solution) {
    let prog = parse_str("t.mc", src).unwrap();
    let sol = if full {
        infer(&prog, &Options::default()).unwrap().kinds
    } else {
        let facts = mini3c::constraints::collect(&prog);
        mini3c::kinds::solve(&mini3c::kinds::kind_graph(&prog, &facts, &[]))
    };
    (prog, sol)
}

/// Adds a wild caller to, or a wild use inside, one function of each of
/// `cases` random programs and checks the other side's kinds do not move.
pub fn localized_wildness(seed: u64, full: bool, cases: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape {
        globals: false,
        sinks: true,
        casts: true,
        addr: !full,
    };
    for case in 0..cases {
        let base = gen::program(&mut rng, shape);
        let callee = &base.funcs[case % base.funcs.len()];
        let name = callee.name.clone();
        let base_src = base.render();
        let (bp, bs) = kinds(&base_src, full);

        // a new caller passing a wild argument
        let args = vec!["w"; callee.params.len()].join(", ");
        let with_caller = format!(
            "{base_src}void extra(int n) {{\n  int *w = (int *)5;\n  {}({args}, n);\n}}\n",
            callee.name
        );
        let (cp, cs) = kinds(&with_caller, full);
        let inside = |func: &str, role: Role| func == name && role != Role::External;
        assert_eq!(keyed(&bp, &bs, inside), keyed(&cp, &cs, inside), "case {case}:\n{with_caller}");

        // a wild use inside the callee
        let mut changed = gen::Prog {
            globals: base.globals.clone(),
            sinks: base.sinks,
            funcs: Vec::new(),
        };
        for f in &base.funcs {
            let mut body = f.body.clone();
            if f.name == callee.name {
                body.push(format!("{} = (int *)5;", f.params[0]));
            }
            changed.funcs.push(gen::Func {
                name: f.name.clone(),
                returns_ptr: f.returns_ptr,
                params: f.params.clone(),
                locals: f.locals.clone(),
                body,
            });
        }
        let changed_src = changed.render();
        let (wp, ws) = kinds(&changed_src, full);
        let outside = |func: &str, _: Role| func != name;
        assert_eq!(keyed(&bp, &bs, outside), keyed(&wp, &ws, outside), "case {case}:\n{changed_src}");
    }
}

// ---- bounds ----

/// Re-derives every flow entry from the seed bounds with a fresh walk over
/// the raw flow facts. Returns the entries it cannot justify.
pub fn rederive(r: &Run) -> Vec<PNode> {
    let facts = &r.out.inference.facts;
    let res = &r.out.bounds;
    let temp = |p: &PNode| matches!(p, PNode::Var(q) if r.prog.vars.get(*q).is_temp());

    let mut pg: BTreeMap<PNode, BTreeSet<PNode>> = BTreeMap::new();
    let flows = facts.flows.iter().filter_map(|f| Some((f.src.pnode.clone()?, f.dst.pnode.clone()?)));
    for (a, b) in flows.chain(facts.pfg_links.iter().cloned()) {
        pg.entry(a.clone()).or_default().insert(b.clone());
        pg.entry(b).or_default().insert(a);
    }
    let mut sg: BTreeMap<SNode, BTreeSet<SNode>> = BTreeMap::new();
    for (a, b) in &facts.sfg_edges {
        sg.entry(a.clone()).or_default().insert(b.clone());
        sg.entry(b.clone()).or_default().insert(a.clone());
    }
    let sreach = |from: &SNode, to: &SNode| {
        let mut seen = BTreeSet::from([from.clone()]);
        let mut q = VecDeque::from([from.clone()]);
        while let Some(x) = q.pop_front() {
            if &x == to {
                return true;
            }
            for y in sg.get(&x).into_iter().flatten() {
                if seen.insert(y.clone()) {
                    q.push_back(y.clone());
                }
            }
        }
        false
    };

    let mut bad = Vec::new();
    for (c, ((k, s), prov)) in &res.beta {
        if *prov != Provenance::Flow {
            continue;
        }
        let mut seen = BTreeSet::from([c.clone()]);
        let mut q = VecDeque::from([c.clone()]);
        let mut ok = false;
        'walk: while let Some(x) = q.pop_front() {
            for y in pg.get(&x).into_iter().flatten() {
                if let Some(((rk, rs), _)) = res.seeds.get(y) {
                    if rk == k && sreach(rs, s) {
                        ok = true;
                        break 'walk;
                    }
                }
                if (temp(y) || res.arrays.contains(y)) && seen.insert(y.clone()) {
                    q.push_back(y.clone());
                }
            }
        }
        if !ok {
            bad.push(c.clone());
        }
    }
    bad
}

pub fn invariants(r: &Run, what: &str) {
    let res = &r.out.bounds;
    assert!(rederive(r).is_empty(), "{what}: unjustified {:?}", rederive(r));
    assert!(
        bounds::validate(res, &r.prog, &r.out.inference.facts, &res.seeds).is_empty(),
        "{what}: crate validator disagrees"
    );
    for c in res.beta.keys() {
        assert!(!res.invalid.contains(c), "{what}: {c:?} in both maps");
    }
    let facts = &r.out.inference.facts;
    for (c, ((_, s), _)) in &res.beta {
        if matches!(s, SNode::Opaque(..)) {
            continue;
        }
        assert!(
            visible(&pscope(&r.prog, facts, c), &sscope(&r.prog, s)),
            "{what}: {c:?} bound {s:?} out of scope"
        );
    }
    // a bound found once is never revised
    let mut assigned = BTreeSet::new();
    for s in &res.trace {
        assert!(assigned.insert(s.node.clone()), "{what}: {:?} assigned twice", s.node);
        assert!(!res.seeds.contains_key(&s.node));
    }
}

/// Programs that pass arrays and their sizes around: each function takes
/// `(int *a, int n)` plus an extra scalar and calls earlier functions with
/// fresh allocations, aliases or its own parameters.
pub fn array_program(rng: &mut impl Rng) -> String {
    let nfun = rng.gen_range(2..5);
    let mut out = String::from("int G;\n");
    for f in 0..nfun {
        out += &format!("void f{f}(int *a, int n, int k) {{\n  int *b = a;\n  int m = n;\n");
        for _ in 0..rng.gen_range(1..5) {
            let size = ["n", "k", "m", "G", "8"][rng.gen_range(0..5)];
            out += &match rng.gen_range(0..7) {
                0 => format!("  b = malloc(sizeof(int) * {size});\n"),
                1 => format!("  int *t{} = malloc(sizeof(int) * {size});\n  b = t{};\n", out.len(), out.len()),
                2 => "  a = b;\n".to_string(),
                3 => "  G = k;\n".to_string(),
                4 if f > 0 => {
                    let g = rng.gen_range(0..f);
                    let arr = ["a", "b"][rng.gen_range(0..2)];
                    format!("  f{g}({arr}, {size}, k);\n")
                }
                _ => format!("  b[{}] = 0;\n", ["0", "k", "m"][rng.gen_range(0..3)]),
            };
        }
        out += "  a[1] = b[0];\n}\n";
    }
    out += &format!("void top(int z) {{\n  int *r = malloc(sizeof(int) * z);\n  f{}(r, z, z);\n}}\n", nfun - 1);
    out
}

