mod common;

use common::gen::{self, Shape};
use common::*;
use mini3c::frontend::ast::FileId;
use mini3c::frontend::parse_str;
use mini3c::rewrite::{apply, Edit, EditKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn listing1_initial_conversion() {
    let r = analyze(&fixture("listing1.mc"));
    assert_eq!(r.text(), fixture("listing1.expected"));
    let t = r.text();
    assert!(contains_norm(t, "void foo(int *p : itype(_Array_ptr<int>) count(n),"));
    assert!(contains_norm(t, "static int *g = 0;"));
    assert!(contains_norm(t, "void baz(_Array_ptr<int> q : count(len), _Ptr<int> c, int len) _Checked {"));
    assert!(contains_norm(t, "_Array_ptr<int> r : count(z) ="));
    assert_eq!(t.matches("_Assume_bounds_cast").count(), 2);
    assert!(contains_norm(t, "_Assume_bounds_cast<_Array_ptr<int>>(p, count(n))"));
    assert!(contains_norm(t, "_Assume_bounds_cast<_Ptr<int>>(g)"));
}

#[test]
fn listing1_after_fix() {
    let r = analyze(&fixture("listing1_fixed.mc"));
    assert_eq!(r.text(), fixture("listing1_fixed.expected"));
    let t = r.text();
    assert!(!t.contains("_Assume_bounds_cast"));
    for head in ["void baz(", "void foo(", "void bar("] {
        let line = t[t.find(head).unwrap()..].split('{').next().unwrap();
        assert!(line.trim_end().ends_with("_Checked"), "{line}");
    }
    assert!(contains_norm(t, "recordptr<int>(p);"));
}

#[test]
fn pointer_free_file_is_untouched() {
    let src = "int add(int a, int b) {\n  return a + b;\n}\n\nint main(void) { return add(1, 2); }\n";
    let r = analyze(src);
    assert!(r.out.plan.edits.is_empty(), "{:?}", r.out.plan.edits);
    assert_eq!(r.text(), src);
}

#[test]
fn empty_plan_is_identity() {
    let text = "void f(int *p) {\n  *p = 1;\n}\n";
    assert_eq!(apply(text, &[]), text);
}

fn edit(start: u32, end: u32, text: &str) -> Edit {
    Edit {
        file: FileId(0),
        start,
        end,
        text: text.into(),
        kind: EditKind::TypeRewrite,
        line: 1,
    }
}

#[test]
fn edits_on_one_line_compose() {
    let text = "int *a; int *b;";
    let (e1, e2) = (edit(0, 5, "_Ptr<int> "), edit(8, 13, "_Ptr<int> "));
    assert_eq!(apply(text, &[&e2, &e1]), "_Ptr<int> a; _Ptr<int> b;");
    let ins = edit(15, 15, " /* end */");
    assert_eq!(apply(text, &[&ins, &e1]), "_Ptr<int> a; int *b; /* end */");
}

#[test]
#[should_panic(expected = "overlapping")]
fn overlapping_edits_are_rejected() {
    apply("int *a;", &[&edit(0, 5, "x"), &edit(3, 6, "y")]);
}

#[test]
fn same_line_rewrites_in_source() {
    let r = analyze("void f(int *a, int *b) { *a = 1; *b = 2; }\n");
    assert_eq!(r.text(), "void f(_Ptr<int> a, _Ptr<int> b) _Checked { *a = 1; *b = 2; }\n");
}

fn idempotent(src: &str, what: &str) {
    let once = analyze(src);
    let converted = once.text().to_string();
    parse_str("t.mc", &converted).unwrap_or_else(|e| panic!("{what}: output does not parse: {e}\n{converted}"));
    let twice = analyze(&converted);
    assert_eq!(twice.text(), converted, "{what}: second run changed the output");
    // a complete conversion leaves nothing to do
    let rep = once.report();
    if rep.totals.wild == 0 && rep.needs_bounds.is_empty() && once.out.plan.unbounded_casts.is_empty() {
        assert!(twice.out.plan.edits.is_empty(), "{what}: {:?}", twice.out.plan.edits);
    }
}

#[test]
fn rerun_is_idempotent() {
    idempotent(&fixture("listing1.mc"), "listing1");
    idempotent(&fixture("listing1_fixed.mc"), "listing1 fixed");
    let rerun = analyze(&fixture("listing1_fixed.expected"));
    assert!(rerun.out.plan.edits.is_empty(), "{:?}", rerun.out.plan.edits);
    for name in ["strings.mc", "list.mc", "buffer.mc", "matrix.mc"] {
        let src = std::fs::read_to_string(format!("{}/tests/corpus/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap();
        idempotent(&src, name);
    }
}

#[test]
fn rerun_is_idempotent_on_random_programs() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1de4);
    let shape = Shape {
        globals: true,
        sinks: true,
        casts: true,
        addr: true,
    };
    for case in 0..120 {
        let src = gen::program(&mut rng, shape).render();
        idempotent(&src, &format!("case {case}:\n{src}"));
    }
}

#[test]
fn output_is_deterministic() {
    let src = fixture("listing1.mc");
    let a = analyze(&src);
    let b = analyze(&src);
    assert_eq!(a.text(), b.text());
    assert_eq!(a.report().to_json(), b.report().to_json());
    assert_eq!(a.out.plan.edits, b.out.plan.edits);
}
