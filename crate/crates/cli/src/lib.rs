//! Library half of the `lt-forge` command-line tool: element expressions
//! and the theorem verification suite.

pub mod expr;
pub mod suite;
