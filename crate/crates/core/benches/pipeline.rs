use std::fmt::Write;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mini3c::frontend::{parse_str, Program};
use mini3c::par::ExecMode;
use mini3c::pipeline::{infer, run_batch, Options};
use mini3c::rootcause;

/// A chain of `n` functions passing arrays and sizes down, with an unsafe
/// cast every `wild_every` functions.
fn synthetic(n: usize, wild_every: usize) -> String {
    let mut s = String::from("int *G;\n");
    for i in 0..n {
        writeln!(s, "void f{i}(int *a, int *b, int len) {{").unwrap();
        writeln!(s, "  int *t = malloc(sizeof(int) * len);").unwrap();
        writeln!(s, "  for (int k = 0; k < len; k++) t[k] = a[k] + *b;").unwrap();
        if i % wild_every == 0 {
            writeln!(s, "  int *w = (int *){i};").unwrap();
            writeln!(s, "  G = w;").unwrap();
        }
        if i > 0 {
            writeln!(s, "  f{}(t, b, len);", i - 1).unwrap();
            if i % 3 == 0 {
                writeln!(s, "  f{}(a, G, len);", i / 2).unwrap();
            }
        }
        writeln!(s, "}}").unwrap();
    }
    s
}

fn programs(count: usize, size: usize) -> Vec<Program> {
    (0..count)
        .map(|i| parse_str(&format!("p{i}.mc"), &synthetic(size + i, 4 + i % 3)).unwrap())
        .collect()
}

fn batch(c: &mut Criterion) {
    let progs = programs(24, 40);
    let mut g = c.benchmark_group("batch");
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        let opts = Options { mode, ..Options::default() };
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &opts, |b, opts| {
            b.iter(|| black_box(run_batch(&progs, opts)))
        });
    }
    g.finish();
}

fn root_causes(c: &mut Criterion) {
    let prog = parse_str("big.mc", &synthetic(400, 2)).unwrap();
    let inf = infer(&prog, &Options::default()).unwrap();
    let mut g = c.benchmark_group("root_causes");
    for mode in [ExecMode::Sequential, ExecMode::Parallel] {
        g.bench_function(format!("{mode:?}"), |b| {
            b.iter(|| black_box(rootcause::analyze(&prog, &inf.kind_graph, &inf.kinds, &inf.ptyps, mode)))
        });
    }
    g.finish();
}

criterion_group!(benches, batch, root_causes);
criterion_main!(benches);
