//! Files, replay, CLI and HTTP service around `rbs3-core`.

pub mod cli;
pub mod formats;
pub mod replay;
pub mod service;
