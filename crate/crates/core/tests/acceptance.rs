//! One line per acceptance criterion. Every check runs even when an earlier
//! one fails; the test fails at the end if any did.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use common::gen::Shape;
use common::oracle::*;
use common::*;
use mini3c::bounds::Provenance;
use mini3c::constraints::{PNode, SNode};
use mini3c::frontend::ast::BoundsKind;
use mini3c::frontend::program::{Callee, VarRef};
use mini3c::frontend::{parse_str, Role};
use mini3c::par::ExecMode;
use mini3c::pipeline::{run, Options};
use mini3c::ptyp::Solver;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus() -> Vec<(String, String)> {
    let dir = format!("{}/tests/corpus", env!("CARGO_MANIFEST_DIR"));
    let mut files: Vec<_> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read_to_string(&p).unwrap()))
        .collect()
}

fn opts(solver: Solver, heuristics: bool) -> Options {
    Options {
        solver,
        heuristics,
        ..Options::default()
    }
}

fn pvar(r: &Run, name: &str) -> PNode {
    let v = r.prog.vars.iter().find(|v| v.name == name && v.level == 0 && !v.is_temp() && v.role != Role::Internal);
    PNode::Var(v.unwrap_or_else(|| panic!("no {name}")).id)
}

fn param(r: &Run, f: &str, i: usize) -> SNode {
    SNode::Var(VarRef::Param(r.prog.func_by_name[f], i))
}

fn ctx_arg(r: &Run, callee: &str, line: u32) -> (PNode, usize) {
    let f = r.prog.func_by_name[callee];
    let c = r.out.inference.facts.calls.iter().find(|c| c.callee == Callee::Func(f) && c.span.line == line).unwrap();
    (PNode::CtxArg(c.id, 0), c.id)
}

fn listing1_end_to_end() {
    let src = fixture("listing1.mc");
    let start = Instant::now();
    let prog = parse_str("listing1.mc", &src).unwrap();
    let out = run(&prog, &Options::default()).unwrap();
    let elapsed = start.elapsed();
    let r = Run { prog, out };
    let t = r.text();
    assert!(contains_norm(t, "void foo(int *p : itype(_Array_ptr<int>) count(n),"), "foo.p itype");
    assert!(contains_norm(t, "static int *g = 0;"), "g stays wild");
    assert!(contains_norm(t, "void baz(_Array_ptr<int> q : count(len), _Ptr<int> c, int len)"), "baz");
    assert!(contains_norm(t, "_Array_ptr<int> r : count(z) ="), "r");
    assert_eq!(t.matches("_Assume_bounds_cast").count(), 2, "casts");
    assert_eq!(r.report().root_causes.len(), 1, "root causes");
    assert_eq!(t, fixture("listing1.expected"));
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
}

fn fix_and_rerun() {
    let r = analyze(&fixture("listing1_fixed.mc"));
    let rep = r.report();
    assert_eq!(rep.totals.wild, 0);
    assert_eq!(rep.root_causes.len(), 0);
    let t = r.text();
    assert_eq!(t.matches("_Assume_bounds_cast").count(), 0);
    for head in ["void baz(", "void foo(", "void bar("] {
        let sig = t[t.find(head).unwrap()..].split('{').next().unwrap();
        assert!(sig.trim_end().ends_with("_Checked"), "{head} body not checked");
    }
    assert_eq!(t, fixture("listing1_fixed.expected"));
}

fn solver_oracle() {
    // 2 lattices x SWEEP graphs, once unpinned and once with pins
    assert!(4 * SWEEP >= 1000);
    assert_eq!(oracle_sweep(2021, SWEEP, false), FROZEN_UNPINNED);
    assert_eq!(oracle_sweep(2022, SWEEP, true), FROZEN_PINNED);
}

fn three_step() {
    let getarr = "int *getarr(int n) {\n    int *x = malloc(sizeof(int)*n);\n    return x;\n}\n";
    assert_eq!(analyze(getarr).ptyp("getarr.ret"), "arr");
    assert_eq!(analyze("int *foo(void) { return (int *)0; }\n").ptyp("foo.ret"), "ptr");
    let ntarr = |s: Solver| -> usize {
        corpus().iter().map(|(_, src)| analyze_with(src, &opts(s, true)).out.analysis.totals.ntarr).sum()
    };
    let (three, least) = (ntarr(Solver::ThreeStep), ntarr(Solver::Least));
    assert!(least > three, "least {least} vs threestep {three}");
}

fn listing1_walkthrough() {
    let r = analyze(&fixture("listing1.mc"));
    let (foo, baz) = (r.prog.func_by_name["foo"], r.prog.func_by_name["baz"]);
    let ((p25, c25), (q26, c26), (q18, _)) = (ctx_arg(&r, "foo", 25), ctx_arg(&r, "baz", 26), ctx_arg(&r, "baz", 18));
    let (rr, p, q) = (pvar(&r, "bar.r"), pvar(&r, "foo.p"), pvar(&r, "baz.q"));
    let b = |n: &PNode| r.out.bounds.get(n).cloned();
    let ct = |s: SNode| Some((BoundsKind::Count, s));
    assert_eq!(b(&rr), ct(param(&r, "bar", 0)));
    assert_eq!(b(&p25), ct(SNode::CtxParam(foo, 1, c25)));
    assert_eq!(b(&q26), ct(SNode::CtxParam(baz, 2, c26)));
    assert_eq!(b(&p), ct(param(&r, "foo", 1)));
    assert_eq!(b(&q), ct(param(&r, "baz", 2)));
    let trace = &r.out.bounds.trace;
    let at = |n: &PNode| trace.iter().position(|s| &s.node == n).unwrap();
    // context nodes first, then the originals they feed
    assert!(at(&p25).max(at(&q26)) < at(&p).min(at(&q)).min(at(&q18)));
    assert!(trace.iter().all(|s| s.pass == 0 && s.round == 1));
}

fn seed_rules() {
    let one = |src: &str, name: &str| {
        let r = analyze(src);
        let p = pvar(&r, name);
        (r.out.bounds.get(&p).cloned(), r.out.bounds.invalid.contains(&p), r)
    };
    let (b, _, r) = one("void f(int c, char *x) { bzero(x, c); x[0] = 1; }\n", "f.x");
    assert_eq!(b, Some((BoundsKind::ByteCount, param(&r, "f", 0))), "library itype");
    let (b, _, r) = one("void f(int z) { int *r = malloc(sizeof(int) * z); r[0] = 1; }\n", "f.r");
    assert_eq!(b, Some((BoundsKind::Count, param(&r, "f", 0))), "malloc count");
    let (b, _, r) = one("void f(int c) { char *x = malloc(c); x[0] = 1; }\n", "f.x");
    assert_eq!(b, Some((BoundsKind::ByteCount, param(&r, "f", 0))), "malloc bytes");
    let r = analyze("void f(void) { char buf[64]; buf[1] = 0; }\n");
    let buf = r.prog.vars.iter().find(|v| v.name == "f.buf").unwrap().id;
    assert_eq!(r.out.bounds.get(&PNode::Var(buf)).cloned(), Some((BoundsKind::Count, SNode::Const(64))), "fixed array");
    let (b, invalid, _) = one(
        "void f(int n, int x) {\n  int *p = malloc(sizeof(int) * n);\n  p = malloc(sizeof(int) * x);\n  p[0] = 1;\n}\n",
        "f.p",
    );
    assert!(b.is_none() && invalid, "conflicting mallocs");

    let mut checked = 0;
    let mut check = |r: &Run, what: &str| {
        invariants(r, what);
        checked += r.out.bounds.beta.values().filter(|(_, p)| *p == Provenance::Flow).count();
    };
    check(&analyze(&fixture("listing1.mc")), "listing1");
    for (name, src) in corpus() {
        check(&analyze(&src), &name);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xacc6);
    for case in 0..100 {
        let src = array_program(&mut rng);
        check(&analyze(&src), &format!("case {case}:\n{src}"));
    }
    assert!(checked >= 100, "only {checked} flow entries");
}

fn heuristics() {
    let cases = [
        ("void f(int *p) {\n  int i = 3;\n  if (i < 64) {\n    p[i] = 1;\n  }\n}\n", "f.p", "count(64)"),
        (
            "int f(int *p, int n) {\n  int j = 0;\n  if (j >= n) return -1;\n  int x = p[j] + 2;\n  return x;\n}\n",
            "f.p",
            "count(n)",
        ),
        (
            "int f(int *p, int s) {\n  int sum = 0;\n  for (int i = 0; i < s; i++)\n    sum += p[i];\n  return sum;\n}\n",
            "f.p",
            "count(s)",
        ),
        (
            "struct baz { int *p; int k; unsigned psize; };\nvoid g(struct baz *b) { b->p[2] = 0; }\n",
            "baz.p",
            "count(psize)",
        ),
        (
            "struct bar { int x; };\nstruct foo { struct bar *p; int k; unsigned p_len; };\nvoid g(struct foo *f) { f->p[1].x = 0; }\n",
            "foo.p",
            "count(p_len)",
        ),
        (
            "void conv(const char *p_in, unsigned int in_len) {\n  unsigned int indexx = 0;\n  while (indexx < in_len) {\n    char the_char = p_in[indexx];\n    indexx++;\n  }\n}\n",
            "conv.p_in",
            "count(in_len)",
        ),
    ];
    for (src, name, bound) in cases {
        let on = analyze_with(src, &opts(Solver::ThreeStep, true));
        assert_eq!(on.bound(name).as_deref(), Some(bound), "{name}");
        assert!(on.provenance(name).unwrap().starts_with("heuristic:"), "{name}");
        let off = analyze_with(src, &opts(Solver::ThreeStep, false));
        assert_eq!(off.bound(name), None, "{name} with heuristics off");
    }
}

fn localized() {
    localized_wildness(0xacc8, false, 120);
    localized_wildness(0xacc9, true, 120);
}

fn root_causes() {
    let n = influence_sweep(0xacc9, 150);
    assert!(n >= 100, "only {n} programs had root causes");
}

fn idempotence_and_determinism() {
    let rerun = analyze(&fixture("listing1_fixed.expected"));
    assert!(rerun.out.plan.edits.is_empty(), "{:?}", rerun.out.plan.edits);
    assert_eq!(rerun.text(), fixture("listing1_fixed.expected"));
    let mut inputs = vec![fixture("listing1.mc"), fixture("listing1_fixed.mc")];
    inputs.extend(corpus().into_iter().map(|(_, s)| s));
    let mut rng = ChaCha8Rng::seed_from_u64(0xacca);
    let shape = Shape {
        globals: true,
        sinks: true,
        casts: true,
        addr: true,
    };
    inputs.extend((0..40).map(|_| common::gen::program(&mut rng, shape).render()));
    for src in &inputs {
        let once = analyze(src);
        let twice = analyze(once.text());
        assert_eq!(twice.text(), once.text(), "rerun changed output of\n{src}");
        let artifacts = |mode: ExecMode| {
            let r = analyze_with(src, &Options { mode, ..Options::default() });
            let d = &r.out.dots;
            (r.text().to_string(), r.report().to_json(), r.report().to_text(), d.kind.clone(), d.ptyp.clone(), d.pfg.clone(), d.sfg.clone())
        };
        let a = artifacts(ExecMode::Parallel);
        assert_eq!(a, artifacts(ExecMode::Parallel), "nondeterministic on\n{src}");
        assert_eq!(a, artifacts(ExecMode::Sequential), "modes differ on\n{src}");
    }
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn()); 10] = [
        ("listing1 end-to-end", listing1_end_to_end),
        ("fix and rerun", fix_and_rerun),
        ("solver matches brute force", solver_oracle),
        ("three-step solving", three_step),
        ("bounds walkthrough", listing1_walkthrough),
        ("seed rules and flow re-derivation", seed_rules),
        ("heuristics on/off", heuristics),
        ("localized wildness", localized),
        ("root-cause consistency", root_causes),
        ("idempotence and determinism", idempotence_and_determinism),
    ];
    let last = Arc::new(Mutex::new(String::new()));
    let sink = last.clone();
    let prev = panic::take_hook();
    panic::set_hook(Box::new(move |info| {
        let msg = info
            .payload()
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| info.payload().downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        let loc = info.location().map(|l| format!(" at {}:{}", l.file(), l.line())).unwrap_or_default();
        *sink.lock().unwrap() = format!("{msg}{loc}");
    }));
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let ok = panic::catch_unwind(AssertUnwindSafe(check)).is_ok();
        let ms = start.elapsed().as_millis();
        if ok {
            println!("PASS  {:>2}  {name}  ({ms} ms)", i + 1);
        } else {
            let why = last.lock().unwrap().lines().next().unwrap_or("").to_string();
            println!("FAIL  {:>2}  {name}  ({ms} ms): {why}", i + 1);
            failed.push(i + 1);
        }
    }
    panic::set_hook(prev);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
