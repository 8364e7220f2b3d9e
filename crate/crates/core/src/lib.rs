//! A runtime for models built from three building blocks: entities with
//! states, milieus saying which entities influence which, and an update
//! function computing each entity's next state from its milieu.
//!
//! Binding concrete parameters into a system ([`modulate`]) yields a
//! [`MetastableSystem`] that can be stepped and run; [`demodulate`] splits
//! it back into structural and operational parameters. Two concrete model
//! families are provided: elementary cellular automata ([`ca`]) and layered
//! threshold-perceptron networks ([`ann`]). [`search`] looks for unknown
//! update rules, and [`autoprog`] turns systems into standalone model
//! programs that can be interpreted or compiled and checked against each
//! other.

pub mod ann;
pub mod autoprog;
pub mod ca;
pub mod cli;
mod error;
pub mod milieu;
pub mod parallel;
pub mod search;
mod state;
mod system;
pub mod trajectory;

pub use error::{Error, Result};
pub use milieu::{Link, LinkKind, MilieuMatrix};
pub use state::{match_score, match_score_with_tolerance, EntityTuple, StateSet, DEFAULT_REAL_TOLERANCE};
pub use system::{
    demodulate, modulate, Demodulated, MetastableSystem, Operational, Schedule, Structural, SystemSpec, Unknowns,
    UpdateFunction,
};
pub use trajectory::Trajectory;
