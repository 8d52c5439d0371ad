//! Learning algorithms: nearest-neighbour variants, finite and hinge ERM,
//! the 1D minimum-norm interpolating spline, and memory-limited 1-NN.

mod erm;
mod memory;
mod nn;
mod spline;

pub use erm::{
    finite_erm, hinge_erm_balls, hinge_loss_constant, hinge_separation_check, BallFamilySpec,
    BallSignClassifier, TableClassifier,
};
pub use memory::{limited_memory_1nn, MemoryBudget};
pub use nn::{k_nn, one_nn, NNModel};
pub use spline::{fit_spline, fit_spline_first_occurrence, spline_classifier, Spline1D, SplineClassifier};
