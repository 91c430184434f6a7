//! Closed-form values, the Fourier bound for non-adaptive wirings, and
//! distillability sweeps over the symmetric family.

pub mod formulas;
pub mod fourier;
pub mod region;

pub use formulas::*;
pub use fourier::{fourier_transform, q_ab, q_ab_spectral, r_ab, sign_function, FourierSpectrum};
pub use region::{distillable_region, Grid, ProtocolOutcome, SweepRecord, DISTILL_THRESHOLD};
