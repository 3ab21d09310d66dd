//! Compile JSON Schemas into byte-level constraint automata and use them to
//! mask tokens during decoding.

pub mod compiler;
pub mod json;
pub mod schema;
pub mod token;
