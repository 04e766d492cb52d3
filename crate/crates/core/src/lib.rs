//! Private optimization over the intersection of distributed feasible sets.
//!
//! A leader entity and a set of server entities each hold a feasible set over a
//! common alphabet. The leader learns the elements of the intersection that
//! optimize a public objective, and as little else as the protocol allows.
//! Server entities are replicated over several non-colluding databases.
//!
//! The crate provides the two-party, ring and star protocols, their naive
//! full-intersection baselines, closed-form cost and equality-probability
//! analysis, and an exhaustive view-distribution auditor for the privacy
//! claims. It is `no_std` and only needs `alloc`.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod analysis;
pub mod audit;
pub mod error;
pub mod field;
pub mod model;
pub mod protocol;
pub mod randomness;
pub mod ring;
pub mod star;
pub mod transcript;
pub mod two_party;

mod slots;

pub use error::Error;
pub use field::{FieldVector, PrimeField};
pub use model::{
    Alphabet, Direction, FeasibleSet, GlobalProfile, IncidenceVector, Instance, LocalProfile,
    Objective,
};
pub use protocol::{run_protocol, HitKind, Mutation, Outcome, ProtocolConfig, Topology};
pub use randomness::{Randomness, SeededRng, TapeRandomness};
pub use transcript::{CostLedger, Node, Transcript};
