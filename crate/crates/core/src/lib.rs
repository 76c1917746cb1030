//! A refinement compiler for abstract constraint specifications.
//!
//! The library turns specifications over abstract decision variables (sets,
//! functions, relations, tuples) into the alternative flat constraint models
//! reachable through a database of non-deterministic rewrite rules, and ships
//! a brute-force oracle that checks each emitted model against its source
//! specification at small domain sizes.

pub mod ast;
pub mod diag;
pub mod emit;
pub mod engine;
pub mod eval;
pub mod lexer;
pub mod oracle;
pub mod parser;
pub mod pipeline;
pub mod rep;
pub mod rules;
pub mod typecheck;
