//! Experiment runner for the `proxsplit` library: configuration, problem
//! setup, runs, sweeps and rate checks, shared by the `proxsplit` binary and
//! the reproduction tests.

pub mod commands;
pub mod config;
pub mod experiment;
