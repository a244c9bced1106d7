//! Sensor time series modeled as a distorted and translated Brownian motion.
//!
//! The pipeline runs in stages, one module each:
//!
//! 1. [`normality`]: Shapiro-Wilk test on the first differences of a series.
//! 2. [`markov_mle`]: pairwise maximum-likelihood averaging of the raw samples.
//! 3. [`ortho_basis`]: segment vectors in the (time, value) plane, their
//!    odd/even rescaling and the Fourier factors that undo it.
//! 4. [`ebm`]: an extreme learning machine whose hidden units are random
//!    energy functionals on a cooling temperature schedule.
//! 5. [`phase_classifier`]: energy-gap tree splitting and 0-1 rule extraction.
//! 6. [`diffusion_forecast`]: diffusion coefficient, martingale forecasts,
//!    seeded Brownian paths and the two-point exit-time check.
//!
//! [`series_io`] holds the shared data model and the CSV format, [`cli`]
//! wires everything into the `sensordiff` binary.

pub mod cli;
pub mod diffusion_forecast;
pub mod ebm;
mod error;
pub mod markov_mle;
pub mod normality;
pub mod ortho_basis;
pub mod phase_classifier;
pub mod rng;
pub mod series_io;

pub use diffusion_forecast::{
    fit_sigma2, forecast, sample_paths, simulate_brownian, skorokhod_exit, ExitEstimate,
    ForecastResult, TwoPointDist,
};
pub use ebm::{
    ebm_energy, ebm_train, elm_eval, elm_fit, gaussian_log_density_target, log_partition,
    read_model, write_model, EbmConfig, EbmModel, ElmModel,
};
pub use error::{Error, Result};
pub use markov_mle::{increments, smooth_series, smooth_values, SmoothedSeries};
pub use normality::{
    sw_coefficients, sw_statistic, sw_statistic_at, sw_test_increments, SwCoefficients, SwResult,
    DEFAULT_ALPHA,
};
pub use ortho_basis::{
    cosine_y, orthogonalize, reconstruct, scale_c, segment_vectors, BasisEntry, OrthoBasis, Parity,
    SegmentVector,
};
pub use phase_classifier::{
    build_tree, build_tree_from_energies, classify_energy, classify_point, extract_rules,
    max_gap_split, read_rules, target_class_count, write_rules, AssociationRule, ClassTree,
    GapSplit,
};
pub use series_io::{
    load_series, validate_series, write_series, SampleSeries, SeriesParts, ValidationReport,
    Violation,
};
