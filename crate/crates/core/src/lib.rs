//! Log-negativity entangling capacity of bipartite quantum channels: exact
//! bounds from operator Schmidt decompositions and Choi states, and seeded
//! searches for the unassisted capacity and its dual bound.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod capacity;
pub mod channels;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod monotones;
pub mod par;
pub mod random;
pub mod schmidt;
pub mod verify;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
