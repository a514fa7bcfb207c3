//! Coded data shuffling for distributed learning.
//!
//! Workers cache fragments of every file under a symmetric uncoded placement. Between
//! iterations the master broadcasts XOR sub-messages whose count depends on the cycle
//! structure of the file transition graph, workers decode what they will process next, and
//! caches are updated and relabeled back to the canonical placement.

pub mod analysis;
pub mod decoding;
pub mod decomposition;
pub mod delivery;
pub mod error;
pub mod fixtures;
pub mod gf2;
pub mod harness;
pub mod instance;
pub mod lifecycle;
pub mod load;
pub mod model;
pub mod placement;
pub mod protocol;
pub mod verify;

pub use error::{Result, ShuffleError};
pub use instance::CanonicalInstance;
pub use load::LoadValue;
pub use model::{Assignment, FileTransitionGraph, SubfileLabel, SystemParams, WorkerSet};
