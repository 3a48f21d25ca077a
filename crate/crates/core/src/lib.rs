//! Memory-restricted, ranking-based evolutionary search on agreement
//! objectives: the simulation core, self-decoding strategies that store
//! their working state inside the bit string itself, matching
//! information-theoretic lower bounds, and a batch experiment harness.

pub mod bits;
pub mod bounds;
pub mod combinat;
pub mod harness;
pub mod layout;
pub mod algorithms;
pub mod primitives;
pub mod model;
pub mod reconstruct;
pub mod rng;
