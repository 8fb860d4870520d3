//! Random mini-C programs for property tests.

use rand::seq::SliceRandom;
use rand::Rng;

#[derive(Clone, Copy)]
pub struct Shape {
    pub globals: bool,
    pub sinks: bool,
    pub casts: bool,
    pub addr: bool,
}

pub struct Func {
    pub name: String,
    pub returns_ptr: bool,
    pub params: Vec<String>,
    pub locals: Vec<String>,
    pub body: Vec<String>,
}

impl Func {
    pub fn render(&self) -> String {
        let mut ps: Vec<String> = self.params.iter().map(|p| format!("int *{p}")).collect();
        ps.push("int n".into());
        let ret = if self.returns_ptr { "int *" } else { "void " };
        let mut s = format!("{ret}{}({}) {{\n", self.name, ps.join(", "));
        for l in &self.locals {
            s += &format!("  int *{l} = 0;\n");
        }
        for st in &self.body {
            s += &format!("  {st}\n");
        }
        if self.returns_ptr {
            s += &format!("  return {};\n", self.params[0]);
        }
        s += "}\n";
        s
    }
}

pub struct Prog {
    pub globals: Vec<String>,
    pub sinks: bool,
    pub funcs: Vec<Func>,
}

impl Prog {
    pub fn render(&self) -> String {
        let mut s = String::new();
        if self.sinks {
            s += "extern void sink(void *x);\n";
        }
        for g in &self.globals {
            s += &format!("int *{g};\n");
        }
        for f in &self.funcs {
            s += &f.render();
        }
        s
    }
}

fn stmt(rng: &mut impl Rng, shape: Shape, scope: &[String], earlier: &[(String, usize, bool)]) -> String {
    let pick = |rng: &mut dyn rand::RngCore| scope.choose(rng).unwrap().clone();
    loop {
        match rng.gen_range(0..9) {
            0 | 1 => return format!("{} = {};", pick(rng), pick(rng)),
            2 if shape.casts => return format!("{} = (int *)5;", pick(rng)),
            3 => return format!("{}[n - 1] = 0;", pick(rng)),
            4 => return format!("*{} = 1;", pick(rng)),
            5 => return format!("{} = malloc(sizeof(int) * n);", pick(rng)),
            6 if !earlier.is_empty() => {
                let (f, arity, ret) = earlier.choose(rng).unwrap().clone();
                let mut args: Vec<String> = (0..arity).map(|_| pick(rng)).collect();
                args.push("n".into());
                let call = format!("{f}({})", args.join(", "));
                if ret && rng.gen_bool(0.5) {
                    return format!("{} = {call};", pick(rng));
                }
                return format!("{call};");
            }
            7 if shape.sinks => return format!("sink({});", pick(rng)),
            8 if shape.addr => return format!("{} = &n;", pick(rng)),
            _ => {}
        }
    }
}

pub fn func(rng: &mut impl Rng, shape: Shape, name: &str, globals: &[String], earlier: &[(String, usize, bool)]) -> Func {
    let np = rng.gen_range(1..=2);
    let nl = rng.gen_range(0..=2);
    let params: Vec<String> = (0..np).map(|i| format!("{name}_a{i}")).collect();
    let locals: Vec<String> = (0..nl).map(|i| format!("{name}_l{i}")).collect();
    let mut scope: Vec<String> = params.iter().chain(&locals).cloned().collect();
    scope.extend(globals.iter().cloned());
    let n = rng.gen_range(1..=5);
    let body = (0..n).map(|_| stmt(rng, shape, &scope, earlier)).collect();
    Func {
        name: name.to_string(),
        returns_ptr: rng.gen_bool(0.4),
        params,
        locals,
        body,
    }
}

pub fn program(rng: &mut impl Rng, shape: Shape) -> Prog {
    let globals: Vec<String> = if shape.globals {
        (0..rng.gen_range(0..=2)).map(|i| format!("g{i}")).collect()
    } else {
        Vec::new()
    };
    let mut funcs: Vec<Func> = Vec::new();
    for i in 0..rng.gen_range(2..=4) {
        let earlier: Vec<(String, usize, bool)> =
            funcs.iter().map(|f| (f.name.clone(), f.params.len(), f.returns_ptr)).collect();
        funcs.push(func(rng, shape, &format!("f{i}"), &globals, &earlier));
    }
    Prog {
        globals,
        sinks: shape.sinks,
        funcs,
    }
}
