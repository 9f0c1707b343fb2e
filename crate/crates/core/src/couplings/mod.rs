//! Coupling constructions for log-concave lattice laws and conditional
//! Bernoulli vectors.

mod bernoulli;
mod chain;
mod coefficients;
mod flow;
mod lift;
mod perturb;

pub use bernoulli::ConditionalBernoulli;
pub use chain::{CouplingChain, MonotoneChain, DEFAULT_CHAIN_LIMIT};
pub use coefficients::{pi_coeff, rho_coeff, step_down_law, step_up_law, Direction, StepCoefficients};
pub use lift::ThresholdLift;
pub use perturb::NePerturbation;
