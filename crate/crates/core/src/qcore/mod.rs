//! Dense qudit state-vector simulation.
//!
//! States are immutable from the caller's point of view: every operation
//! returns a new [`PureState`]. Randomness comes from an explicit [`SimRng`].
//!
//! [`SimRng`]: crate::rng::SimRng

mod measure;
mod operator;
mod povm;
mod state;

pub use measure::{
    measure_all, measure_all_fourier, measure_classes, measure_computational, measure_fourier,
    pick, Basis, MeasurementRecord,
};
pub use operator::{Operator, UNITARY_TOL};
pub use povm::{
    fejer_ratio, grid_point, povm_density, povm_density_state, povm_sample_state,
    povm_theta_sample, povm_theta_samples, PovmSampler, TABLE_CELLS,
};
pub use state::{make_ghz_phase_state, PureState, CAPACITY};
