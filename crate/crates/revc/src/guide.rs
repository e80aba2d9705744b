//! The guide's chapters, embedded so their code blocks run as doctests.
//!
//! mdbook renders `book/` but cannot compile its examples against this
//! crate; rustdoc can. Each chapter gets its own module so a failing
//! doctest names the chapter it came from.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/language.md")]
pub mod language {}

#[doc = include_str!("../../../book/src/types.md")]
pub mod types {}

#[doc = include_str!("../../../book/src/evaluation.md")]
pub mod evaluation {}

#[doc = include_str!("../../../book/src/circuits.md")]
pub mod circuits {}

#[doc = include_str!("../../../book/src/machine.md")]
pub mod machine {}

#[doc = include_str!("../../../book/src/lifting.md")]
pub mod lifting {}

#[doc = include_str!("../../../book/src/optimization.md")]
pub mod optimization {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
