//! Simulation and estimation toolkit for the orthant and half-orthant
//! degenerate random environments on the integer lattice.

pub mod env;
pub mod error;
pub mod lattice;
pub mod prob;
pub mod reach;
pub mod stats;
pub mod verify;

pub use env::{Environment, EnvironmentSpec, Model, SiteKind};
pub use error::{Error, Result};
pub use lattice::{ConeSpec, Point, SlabSpec, Thresholds};
pub use prob::Prob;
pub use reach::{ClusterResult, Level, Window};
