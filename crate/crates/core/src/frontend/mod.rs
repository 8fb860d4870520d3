//! Mini-C frontend: lexing, parsing, name resolution and pointer-variable
//! enumeration. The grammar is documented in `docs/minic-grammar.md`.

pub mod ast;
pub mod lexer;
pub mod parser;
mod prelude;
pub mod program;
mod resolve;
pub mod vars;

use thiserror::Error;

pub use ast::{FileId, SourceFile, Span};
pub use program::Program;
pub use vars::{Owner, QVarId, QualVar, Role};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: syntax error: {message}")]
    Syntax {
        file: FileId,
        line: u32,
        message: String,
    },
    #[error("line {line}: unresolved identifier `{name}`")]
    Unresolved { file: FileId, line: u32, name: String },
    #[error("line {line}: duplicate definition of `{name}`")]
    Duplicate { file: FileId, line: u32, name: String },
    #[error("line {line}: type error: {message}")]
    Type {
        file: FileId,
        line: u32,
        message: String,
    },
}

impl ParseError {
    pub fn file(&self) -> FileId {
        match self {
            ParseError::Syntax { file, .. }
            | ParseError::Unresolved { file, .. }
            | ParseError::Duplicate { file, .. }
            | ParseError::Type { file, .. } => *file,
        }
    }

    pub fn line(&self) -> u32 {
        match self {
            ParseError::Syntax { line, .. }
            | ParseError::Unresolved { line, .. }
            | ParseError::Duplicate { line, .. }
            | ParseError::Type { line, .. } => *line,
        }
    }
}

/// A [`ParseError`] paired with the name of the file it occurred in.
#[derive(Debug, Clone, Error)]
#[error("{file}:{error}")]
pub struct FrontendError {
    pub file: String,
    #[source]
    pub error: ParseError,
}

/// One source file handed to the frontend.
#[derive(Debug, Clone)]
pub struct Input {
    pub name: String,
    pub text: String,
    /// Files that may not be rewritten (system headers).
    pub readonly: bool,
}

impl Input {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        Input {
            name: name.into(),
            text: text.into(),
            readonly: false,
        }
    }

    pub fn readonly(mut self) -> Self {
        self.readonly = true;
        self
    }
}

pub const PRELUDE_NAME: &str = "<prelude>";

/// Parses and resolves a whole program. The built-in prelude is always
/// file 0; inputs follow in order.
pub fn parse(inputs: &[Input]) -> Result<Program, FrontendError> {
    let mut files = vec![SourceFile {
        id: FileId(0),
        name: PRELUDE_NAME.to_string(),
        text: prelude::PRELUDE.to_string(),
        readonly: true,
        prelude: true,
    }];
    for (i, input) in inputs.iter().enumerate() {
        files.push(SourceFile {
            id: FileId(i as u32 + 1),
            name: input.name.clone(),
            text: input.text.clone(),
            readonly: input.readonly,
            prelude: false,
        });
    }
    let name_of = |files: &[SourceFile], e: ParseError| FrontendError {
        file: files[e.file().0 as usize].name.clone(),
        error: e,
    };
    let mut ids = parser::IdGen::default();
    let mut asts = Vec::new();
    for f in &files {
        let toks = lexer::lex(f.id, &f.text).map_err(|e| name_of(&files, e))?;
        let items = parser::Parser::new(toks, f.id, &mut ids)
            .parse_file()
            .map_err(|e| name_of(&files, e))?;
        asts.push((f.id, items));
    }
    resolve::resolve(files, asts, ids.next_expr).map_err(|(files, e)| name_of(&files, e))
}

/// Convenience for tests and single-file use.
pub fn parse_str(name: &str, text: &str) -> Result<Program, FrontendError> {
    parse(&[Input::new(name, text)])
}
