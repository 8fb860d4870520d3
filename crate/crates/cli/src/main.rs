use std::fs;
use std::path::{Component, Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use mini3c::frontend::{self, Input};
use mini3c::pipeline::{self, Options};
use mini3c::ptyp::Solver;
use mini3c::report::Report;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Threestep,
    Least,
    Greatest,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

/// Infers checked pointer types and bounds for mini-C programs and
/// rewrites them with Checked C annotations.
#[derive(Debug, Parser)]
#[command(name = "3c-mini", version)]
struct Cli {
    /// Source files to convert.
    #[arg(required = true)]
    files: Vec<PathBuf>,
    /// Files that are analyzed but never modified (system headers).
    #[arg(long = "readonly", value_name = "FILE")]
    readonly: Vec<PathBuf>,
    /// Write converted files under this directory.
    #[arg(long, value_name = "DIR", conflicts_with = "in_place")]
    output_dir: Option<PathBuf>,
    /// Overwrite the input files.
    #[arg(long)]
    in_place: bool,
    #[arg(long, value_enum, default_value = "text")]
    report: Format,
    #[arg(long, value_enum, default_value = "threestep")]
    solver: SolverArg,
    #[arg(long, value_enum, default_value = "on")]
    heuristics: Switch,
    /// Write the constraint and flow graphs as DOT files into this directory.
    #[arg(long, value_name = "DIR")]
    dump_graphs: Option<PathBuf>,
    /// Print the time spent in each phase to stderr.
    #[arg(long)]
    timings: bool,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("3c-mini: {msg}");
    ExitCode::from(1)
}

/// Where a converted file goes under `--output-dir`: the input path with
/// root and parent components dropped.
fn mirrored(dir: &Path, input: &Path) -> PathBuf {
    let rel: PathBuf = input
        .components()
        .filter(|c| matches!(c, Component::Normal(_)))
        .collect();
    dir.join(rel)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let mut inputs = Vec::new();
    for (path, readonly) in cli
        .files
        .iter()
        .map(|p| (p, false))
        .chain(cli.readonly.iter().map(|p| (p, true)))
    {
        let text = match fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        };
        let input = Input::new(path.display().to_string(), text);
        inputs.push(if readonly { input.readonly() } else { input });
    }
    let prog = match frontend::parse(&inputs) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let opts = Options {
        solver: match cli.solver {
            SolverArg::Threestep => Solver::ThreeStep,
            SolverArg::Least => Solver::Least,
            SolverArg::Greatest => Solver::Greatest,
        },
        heuristics: matches!(cli.heuristics, Switch::On),
        ..Options::default()
    };
    let out = match std::panic::catch_unwind(|| pipeline::run(&prog, &opts)) {
        Ok(Ok(out)) => out,
        Ok(Err(e)) => {
            eprintln!("3c-mini: {e}");
            return ExitCode::from(2);
        }
        Err(_) => {
            eprintln!("3c-mini: internal error");
            return ExitCode::from(2);
        }
    };

    if let Some(dir) = &cli.dump_graphs {
        let dots = [
            ("kind.dot", &out.dots.kind),
            ("ptyp.dot", &out.dots.ptyp),
            ("pfg.dot", &out.dots.pfg),
            ("sfg.dot", &out.dots.sfg),
        ];
        if let Err(e) = fs::create_dir_all(dir) {
            return fail(format!("{}: {e}", dir.display()));
        }
        for (name, text) in dots {
            if let Err(e) = fs::write(dir.join(name), text) {
                return fail(format!("{}: {e}", dir.join(name).display()));
            }
        }
    }

    let report = Report::new(&prog, &out);
    let report_text = match cli.report {
        Format::Json => report.to_json() + "\n",
        Format::Text => report.to_text(),
    };
    let writable: Vec<&(String, String)> = out
        .files
        .iter()
        .filter(|(name, _)| cli.files.iter().any(|f| f.display().to_string() == *name))
        .collect();
    if let Some(dir) = &cli.output_dir {
        for (name, text) in &writable {
            let dest = mirrored(dir, Path::new(name));
            if let Some(parent) = dest.parent() {
                if let Err(e) = fs::create_dir_all(parent) {
                    return fail(format!("{}: {e}", parent.display()));
                }
            }
            if let Err(e) = fs::write(&dest, text) {
                return fail(format!("{}: {e}", dest.display()));
            }
        }
        print!("{report_text}");
    } else if cli.in_place {
        for (name, text) in &writable {
            if let Err(e) = fs::write(name, text) {
                return fail(format!("{name}: {e}"));
            }
        }
        print!("{report_text}");
    } else {
        let many = writable.len() > 1;
        for (name, text) in &writable {
            if many {
                println!("// ==> {name} <==");
            }
            print!("{text}");
        }
        eprint!("{report_text}");
    }
    if cli.timings {
        for (phase, d) in &out.timings.phases {
            eprintln!("{phase:>18}: {:.3} ms", d.as_secs_f64() * 1000.0);
        }
    }
    ExitCode::SUCCESS
}
