//! The guide under `book/src`, included chapter by chapter so that
//! `cargo test` runs every snippet in it.

#![doc = include_str!("../../../book/src/introduction.md")]

#[doc = include_str!("../../../book/src/operator-parameters.md")]
pub mod operator_parameters {}

#[doc = include_str!("../../../book/src/extended-prox.md")]
pub mod extended_prox {}

#[doc = include_str!("../../../book/src/splitting.md")]
pub mod splitting {}

#[doc = include_str!("../../../book/src/tuning.md")]
pub mod tuning {}

#[doc = include_str!("../../../book/src/applications.md")]
pub mod applications {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
