//! Amplify-and-forward relay network toolkit: per-state AF rates, the
//! time-sharing stability region, and a back-pressure scheduler over
//! rate-tagged virtual queues with a simulator to check it against the region.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod lp;
pub mod numfmt;
pub mod region;
pub mod scenario_file;
pub mod scheduler;
pub mod sim;

pub use channel::{
    af_objective, af_rate, build_rate_table, capacity, Alphabet, FadingState, PowerAllocation,
    RateTable, StateId,
};
pub use region::{Scenario, TimeSharing};
