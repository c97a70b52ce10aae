//! Rule-based semantic sensing.
//!
//! Low-level location readings enter a forward-chaining production-rule
//! engine as facts; rules fuse them into current locations, location
//! histories and timed corridor traversals, which named queries expose.
//!
//! This crate is `no_std` (it needs `alloc`). File formats, replay pacing,
//! the CLI and the HTTP service live in the `rbs3` crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod engine;
pub mod fact;
pub mod ingest;
pub mod lang;
pub mod rng;
pub mod sim;
pub mod tracking;
pub mod value;

pub use engine::{AssertResult, Engine, EngineError, KnowledgeBase, Snapshot};
pub use fact::{facts_equal, make_fact, Fact, FactId, Schema, Template};
pub use value::{SlotValue, Symbol};
