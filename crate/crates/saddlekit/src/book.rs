//! Runs the guide's code snippets as doc-tests so the book stays in sync
//! with the library.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/problems.md")]
mod problems {}

#[doc = include_str!("../../../book/src/algorithms.md")]
mod algorithms {}

#[doc = include_str!("../../../book/src/certification.md")]
mod certification {}

#[doc = include_str!("../../../book/src/checkers.md")]
mod checkers {}

#[doc = include_str!("../../../book/src/benchmarks.md")]
mod benchmarks {}
