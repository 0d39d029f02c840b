//! The chapters of `book/src`, included so that `cargo test --doc` runs
//! their code listings against the current library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/forms.md")]
pub mod forms {}
#[doc = include_str!("../../../book/src/lcs.md")]
pub mod lcs {}
#[doc = include_str!("../../../book/src/actions.md")]
pub mod actions {}
#[doc = include_str!("../../../book/src/coupling.md")]
pub mod coupling {}
#[doc = include_str!("../../../book/src/cohomology.md")]
pub mod cohomology {}
#[doc = include_str!("../../../book/src/reduction.md")]
pub mod reduction {}
#[doc = include_str!("../../../book/src/gallery.md")]
pub mod gallery {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
