#![allow(dead_code)]

pub mod gen;
pub mod oracle;

use mini3c::frontend::{parse_str, Program, QVarId, Role};
use mini3c::pipeline::{run, Options, Output};
use mini3c::qualgraph::{KIND, PTYP};
use mini3c::report::Report;

pub struct Run {
    pub prog: Program,
    pub out: Output,
}

pub fn analyze(src: &str) -> Run {
    analyze_with(src, &Options::default())
}

pub fn analyze_with(src: &str, opts: &Options) -> Run {
    let prog = parse_str("t.mc", src).expect("parse");
    let out = run(&prog, opts).expect("analysis");
    Run { prog, out }
}

pub fn fixture(name: &str) -> String {
    let path = format!("{}/tests/fixtures/{name}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(path).expect("fixture")
}

impl Run {
    /// Outermost level of the named entity, as seen inside its function.
    pub fn var(&self, name: &str) -> QVarId {
        self.level(name, 0)
    }

    pub fn level(&self, name: &str, level: usize) -> QVarId {
        let mut hits: Vec<_> = self
            .prog
            .vars
            .iter()
            .filter(|v| v.name == format!("{}{name}", "*".repeat(level)) && v.role != Role::External)
            .collect();
        hits.sort_by_key(|v| v.role != Role::Internal);
        hits.first().unwrap_or_else(|| panic!("no variable {name}")).id
    }

    pub fn external(&self, name: &str) -> QVarId {
        self.prog
            .vars
            .iter()
            .find(|v| v.name == name && v.level == 0 && v.role == Role::External)
            .unwrap_or_else(|| panic!("no external {name}"))
            .id
    }

    pub fn kind_of(&self, q: QVarId) -> &'static str {
        KIND.name(self.out.inference.kinds.get(q.0))
    }

    pub fn kind(&self, name: &str) -> &'static str {
        self.kind_of(self.var(name))
    }

    pub fn ptyp(&self, name: &str) -> &'static str {
        let q = self.var(name);
        PTYP.name(self.out.inference.ptyps.get(q.0))
    }

    pub fn report(&self) -> Report {
        Report::new(&self.prog, &self.out)
    }

    pub fn bound(&self, name: &str) -> Option<String> {
        self.report().bounds.into_iter().find(|b| b.name == name).map(|b| b.bound)
    }

    pub fn provenance(&self, name: &str) -> Option<String> {
        self.report().bounds.into_iter().find(|b| b.name == name).map(|b| b.provenance)
    }

    pub fn text(&self) -> &str {
        &self.out.files[0].1
    }
}

/// Whitespace-insensitive containment.
pub fn contains_norm(hay: &str, needle: &str) -> bool {
    let n = |s: &str| s.split_whitespace().collect::<String>();
    n(hay).contains(&n(needle))
}
