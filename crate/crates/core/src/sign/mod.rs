//! Constructions of signs with small images.

mod blocked;
mod l2_witness;
pub(crate) mod near_sign;
pub(crate) mod pairs;
mod stopping;
mod theta;

pub use blocked::{blocked_operator, BlockStep, TreeConstruction};
pub use l2_witness::{l2_singular_witness, L2Witness};
pub use near_sign::{balanced_near_sign, finite_rank_near_sign, NearSign};
pub use stopping::{constant_coefficients, stopping_time_sign, StoppingRecord, UNSTOPPED};
pub use theta::{theta_bound, theta_selection};
