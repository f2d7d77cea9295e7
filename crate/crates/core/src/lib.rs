//! Fractional Brownian motion toolkit.
//!
//! Exact path simulation, the fundamental (Molchan) martingale and its inverse
//! representations, path functionals such as the weighted quadratic variation,
//! and a Monte Carlo check of the three properties that characterize fBm among
//! continuous square-integrable processes:
//!
//! * (a) Hölder continuity of every order below `H`,
//! * (b) `n^{2H-1} Σ (ΔX)^2 → t^{2H}` in L¹ on uniform partitions,
//! * (c) `M_t = ∫_0^t s^{1/2-H}(t-s)^{1/2-H} dX_s` is a martingale.
//!
//! Data-parallel loops run on rayon when the `parallel` feature is enabled
//! (the default); see [`exec::Execution`].

pub mod characterize;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod fbm_gen;
pub mod grid;
pub mod kernels;
pub mod pathio;
pub mod quadrature;
pub mod report;
pub mod special;
pub mod transforms;

pub use characterize::{
    characterization_verdict, test_property_a, test_property_b, test_property_c,
    CharacterizationVerdict, Characterizer, Property, PropertyReport, Statistic, Thresholds,
    Verdict,
};
pub use error::{FbmError, Result};
pub use estimators::{EstimateWithCI, PowerLawFit};
pub use exec::Execution;
pub use grid::{HurstIndex, PathEnsemble, Role, SamplePath, TimeGrid};
pub use transforms::BracketPath;
