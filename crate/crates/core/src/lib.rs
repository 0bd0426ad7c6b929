//! Simulation and pathwise analysis of multidimensional SDEs driven jointly
//! by a fractional Brownian motion with Hurst index above one half and an
//! independent standard Brownian motion.
//!
//! The crate provides exact Gaussian noise generation ([`noise`]), the
//! fractional-calculus toolkit behind generalized Stieltjes integrals
//! ([`fraccalc`]), the weighted fractional norms in which solutions are
//! measured ([`fracnorms`]), an Euler scheme with named coefficient families
//! ([`sde`]), empirical verification harnesses for the a-priori estimates
//! ([`verify`]), and TOML scenario configuration ([`scenario`]).

pub mod error;
pub mod fraccalc;
pub mod fracnorms;
pub mod grid;
pub mod noise;
pub(crate) mod quad;
pub mod rng;
pub mod scenario;
pub mod sde;
pub mod verify;

pub use error::{Error, Result};
pub use fraccalc::{
    admissible_alpha_window, default_alpha, lambda_bound_check, rl_integral_left,
    stieltjes_integral_fractional, stieltjes_integral_rs_sums, stieltjes_path_fractional,
    weyl_derivative_left, weyl_derivative_right, FracOrder, IntegralResult, IntegralRoute,
};
pub use fracnorms::{
    alpha_infty_norm, alpha_one_norm, delta_seminorm, hoelder_norm, lambda_alpha,
    one_minus_alpha_infty_norm, pointwise_alpha_norm, Alpha, NormKind, NormReport,
    DIVERGENCE_GUARD, PAIRWISE_NODE_CAP,
};
pub use grid::{GridMeta, SamplePath, TimeGrid};
pub use noise::{
    fbm_covariance, generate_bm, generate_fbm_cholesky, generate_fbm_circulant, fbm_batch_circulant,
    FbmCholeskySampler, FbmCirculantSampler, FbmMethod, Hurst, NoiseBundle,
};
pub use scenario::{GridSpec, Scenario};
pub use sde::{
    closed_form_oracle, coefficient_registry, euler_solve, family_by_name, validate_assumptions,
    AssumptionCheck, AssumptionConstants, AssumptionReport, CoefficientFamily, CoefficientSet,
    Dims, EulerRun, FamilyDims, OracleKind, ProbeWitness, SdeProblem, BLOW_UP_GUARD,
};
pub use verify::{
    audit_drift_estimates, audit_fbm_integral_estimates, audit_ito_estimates, calibrate_caps,
    fbm_corpus, fit_order, hoelder_exponent_estimate, moment_bound_audit,
    pathwise_uniqueness_harness, smooth_corpus, strong_convergence_study, CapSet,
    ConvergenceStudy, EstimateReport, HoelderEstimate, TrialMeta, UniquenessReport,
};
