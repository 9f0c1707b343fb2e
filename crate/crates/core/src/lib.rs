//! Bounded size-bias couplings for log-concave occupancy models.
//!
//! The crate covers exact lattice laws ([`lattice`]), the coupling
//! constructions that lift a count into its conditional laws
//! ([`couplings`]), closed-form tail bounds ([`bounds`]), four occupancy
//! models with size-bias pair samplers ([`models`]) and Monte Carlo audits of
//! the whole pipeline ([`verify`]).

pub mod bounds;
pub mod couplings;
pub mod error;
pub mod lattice;
pub mod models;
pub mod verify;

pub use bounds::{BoundFamily, BoundParams, Side, TailBoundReport};
pub use couplings::{ConditionalBernoulli, CouplingChain, MonotoneChain, NePerturbation, ThresholdLift};
pub use error::{Error, Result};
pub use lattice::{GappedPmf, LatticePmf};
pub use models::{CoupledSample, ModelSpec, StatisticKind};
