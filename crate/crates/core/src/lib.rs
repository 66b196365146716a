//! Data-driven real-time dispatch: do-not-exceed limits for renewable units
//! and operating base points for conventional units.

// negated comparisons reject NaN on purpose; dense kernels index by position
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baseline;
pub mod dne;
pub mod error;
pub mod model;
pub mod network;
pub mod obp;
pub mod robust;
pub mod sampling;
pub mod sim;
pub mod solver;
pub mod synthetic;

pub use error::{Error, Result};
pub use model::{
    compute_shift_factors, line_flows, load_case, ControlClass, PowerSystem, ShiftFactorMatrix,
};
pub use sampling::{select_samples, HistoryRecord, SampleSet, ValidationRecord};
