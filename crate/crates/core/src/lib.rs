//! Matching and allocation mechanisms with a brute-force axiom harness.

pub mod axioms;
pub mod contracts;
pub mod exchange;
pub mod gen;
pub mod graph;
pub mod instance;
pub mod model;
pub mod onesided;
pub mod registry;
pub mod reserves;
pub mod rng;
pub mod twosided;

