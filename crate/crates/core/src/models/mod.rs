//! SPDE testbeds, the initial covariance and truth/observation generation.

mod burgers;
mod heat;
mod truth;

pub use burgers::{burgers_rhs, burgers_step, BurgersModel};
pub use heat::{compute_s, heat_transition, HeatConfig, HeatModel, FTCS_LIMIT};
pub use truth::{generate_truth, initial_covariance, simulate_observations, GroundTruth, Observations, SemiDiscrete};
