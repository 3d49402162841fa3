//! mdbook cannot run listings that depend on workspace crates, so every
//! chapter is pulled in here as a module doc and `cargo test --doc` runs the
//! listings. One module per chapter keeps failures traceable to a file.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/shooting.md")]
pub mod shooting {}
#[doc = include_str!("../../../book/src/interface.md")]
pub mod interface {}
#[doc = include_str!("../../../book/src/phase-space.md")]
pub mod phase_space {}
#[doc = include_str!("../../../book/src/verification.md")]
pub mod verification {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
