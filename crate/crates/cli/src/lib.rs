//! Expression evaluation and command drivers behind the `pr` binary.

pub mod commands;
pub mod expr;
