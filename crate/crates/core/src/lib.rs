//! Checked-pointer inference and rewriting for mini-C.

pub mod bounds;
pub mod constraints;
pub mod kinds;
pub mod par;
pub mod pipeline;
pub mod ptyp;
pub mod frontend;
pub mod qualgraph;
pub mod report;
pub mod rewrite;
pub mod rootcause;
