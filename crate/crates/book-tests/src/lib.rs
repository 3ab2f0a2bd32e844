//! The book's chapters as module docs, so `cargo test --doc` runs every
//! listing. One module per chapter keeps failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/geometry.md")]
pub mod geometry {}
#[doc = include_str!("../../../book/src/problems.md")]
pub mod problems {}
#[doc = include_str!("../../../book/src/variance-reduction.md")]
pub mod variance_reduction {}
#[doc = include_str!("../../../book/src/solvers.md")]
pub mod solvers {}
#[doc = include_str!("../../../book/src/reproducibility.md")]
pub mod reproducibility {}
#[doc = include_str!("../../../book/src/harness.md")]
pub mod harness {}
