//! The user guide, compiled so every snippet runs under `cargo test`.

#[doc = include_str!("../../../book/src/intro.md")]
pub mod intro {}

#[doc = include_str!("../../../book/src/partitions.md")]
pub mod partitions {}

#[doc = include_str!("../../../book/src/devices.md")]
pub mod devices {}

#[doc = include_str!("../../../book/src/reductions.md")]
pub mod reductions {}

#[doc = include_str!("../../../book/src/invariants.md")]
pub mod invariants {}

#[doc = include_str!("../../../book/src/factorization.md")]
pub mod factorization {}

#[doc = include_str!("../../../book/src/graphs.md")]
pub mod graphs {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
