//! Coupling sweeps, transition location, scaling fits and data collapse.

pub mod collapse;
pub mod fits;
pub mod signature;
pub mod sweep;

pub use collapse::{collapse_discord, CollapseProfile, CollapseResult};
pub use fits::{
    derivative_tail_fit, extrapolate_critical, fit_exp_power_correction, fit_exponential, fit_power_law,
    fit_shift_scaling, Extrapolation, FitKind, ScalingFit, ShiftScaling, ShiftSeries, TailFit, TailFitOptions,
};
pub use signature::{classify, classify_with, locate_transition, ClassifierOptions, Classification, Signature, Transition};
pub use sweep::{
    evaluate_point, ground_state_energy_derivative, records_from_csv, records_to_csv, run_refined_sweep, run_sweep, Refinement, Sweep, SweepConfig,
    SweepRecord,
};
