//! The guide under `book/`, compiled so that `cargo test` runs its samples.

#[doc = include_str!("../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../book/src/schemas.md")]
pub mod schemas {}

#[doc = include_str!("../../book/src/compiling.md")]
pub mod compiling {}

#[doc = include_str!("../../book/src/masks.md")]
pub mod masks {}

#[doc = include_str!("../../book/src/decoding.md")]
pub mod decoding {}

#[doc = include_str!("../../book/src/conformance.md")]
pub mod conformance {}

#[doc = include_str!("../../book/src/benchmarks.md")]
pub mod benchmarks {}

#[doc = include_str!("../../book/src/datasets.md")]
pub mod datasets {}

#[doc = include_str!("../../book/src/cli.md")]
pub mod cli {}
