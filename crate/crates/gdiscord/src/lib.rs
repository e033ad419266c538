//! Classical and quantum correlations of multimode Gaussian states.
//!
//! This crate computes, for Gaussian states given by their quadrature
//! covariance matrix:
//!
//! - quantum mutual information `I_Q` (total correlations);
//! - the multipartite Gaussian classical correlations `J_G`: the maximum
//!   classical mutual information of local Gaussian measurement outcomes,
//!   optimized over a per-mode phase and beam-splitter transmissivity;
//! - the multipartite Gaussian quantum discord `delta_G = I_Q - J_G`;
//! - one-sided (asymmetric) Gaussian CC and discord for two-mode states;
//! - separability verdicts (Duan criterion, PPT criterion);
//! - Monte-Carlo validation of the analytic outcome statistics;
//! - noise sweeps of the EPR and Gaussian GHZ families under uncorrelated,
//!   multiplicative and correlated noise, with bisected regime-switch and
//!   separability thresholds.
//!
//! Conventions, fixed throughout: quadrature ordering `(Q1, P1, ..., Qn, Pn)`,
//! **vacuum variance 1** (so the vacuum covariance is the identity — note
//! that other normalizations put the vacuum at 1/2), and entropies in bits.

pub mod covariance;
pub mod error;
pub mod mc;
pub mod measurement;
pub mod metrics;
pub mod optimizer;
pub mod separability;
pub mod states;
pub mod sweep;
pub mod testutil;

pub use covariance::{condition, entropy_g, CovarianceMatrix, StandardForm, SymplecticSpectrum};
pub use error::{Error, Result};
pub use mc::{estimate_mi, sample_outcomes, MiEstimate, SampleBatch, SAMPLING_ALGORITHM};
pub use measurement::{
    classical_mi, classical_mi_chain, differential_entropy, outcome_covariance, MeasurementPlan,
    OutcomeCovariance,
};
pub use metrics::{
    asymmetric_gaussian_cc, asymmetric_gaussian_qd, fock_mi_epr, gaussian_multipartite_cc,
    gaussian_multipartite_qd, homodyne_optimal, mista_margin, quantum_mi, CorrelationReport,
};
pub use optimizer::{
    classify_regime, maximize_mi, maximize_mi_symmetric, OptimizationResult, Regime, SearchOptions,
};
pub use separability::{duan_criterion, ppt_criterion, state_verdict, Method, SeparabilityVerdict, Verdict};
pub use states::{apply_noise, epr, ghz, vacuum, NoiseKind, NoiseModel};
pub use sweep::{run_sweep, write_csv, StateSpec, SweepResult, SweepRow, SweepSpec, Thresholds, CSV_HEADER};
