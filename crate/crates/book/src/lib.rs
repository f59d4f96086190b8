//! Compiles the guide's Rust listings as doc-tests so they stay in sync with
//! the library. One module per chapter keeps failures traceable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/model.md")]
pub mod model {}
#[doc = include_str!("../../../book/src/penalties.md")]
pub mod penalties {}
#[doc = include_str!("../../../book/src/conflicts.md")]
pub mod conflicts {}
#[doc = include_str!("../../../book/src/scheduling.md")]
pub mod scheduling {}
#[doc = include_str!("../../../book/src/optimizers.md")]
pub mod optimizers {}
#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
