//! Rare-event estimators for discretely monitored down-and-out barrier calls.
//!
//! Three estimators share one configuration and one random-stream scheme:
//!
//! * plain Monte Carlo over geometric Brownian motion paths,
//! * an interacting particle system (mutation, exponential tilting,
//!   multinomial selection),
//! * Hamiltonian flow Monte Carlo, where each time step runs a leapfrog
//!   trajectory under the one-step lognormal potential, followed by a
//!   Metropolis-Hastings test restricted to the survival set.
//!
//! The numerical core is generic over the scalar type (`f32` or `f64`) through
//! [`Real`]; the `*64` aliases below fix the scalar to `f64`, which is what the
//! experiment runner and CLI use.

// `!(a > b)` is deliberate throughout: NaN has to fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engines;
pub mod error;
pub mod flow;
pub mod model;
pub mod potential;
pub mod rng;
pub mod runner;
pub mod scalar;
pub mod stats;

pub use engines::{
    hfmc_estimate, ips_estimate, mc_estimate, multinomial_resample, normalize_weights, run_estimator,
    systematic_resample, tilted_weight, EngineConfig, Estimate, Method, ParticleEnsemble, Resampling, Weighting,
};
pub use error::{Error, Result};
pub use flow::{
    flow, hmc_transition, leapfrog_step, mh_accept_prob, rare_event_transition, FlowConfig, KernelOutcome, PhaseState,
    Tempering,
};
pub use model::{
    analytic_doc_price, corrected_barrier, exact_step, lognormal_transition_logpdf, payoff, simulate_path,
    survival_indicator, vanilla_bs_price, DocOption, GbmParams, Path, BARRIER_SHIFT,
};
pub use potential::{
    grad_psi, hamiltonian, psi, MassMatrix, Potential, StandardGaussianPotential, TransitionPotential,
};
pub use rng::StreamFactory;
pub use scalar::Real;
pub use stats::RunReport;

pub type GbmParams64 = GbmParams<f64>;
pub type DocOption64 = DocOption<f64>;
pub type Path64 = Path<f64>;
pub type TransitionPotential64 = TransitionPotential<f64>;
pub type MassMatrix64 = MassMatrix<f64>;
pub type PhaseState64 = PhaseState<f64>;
pub type FlowConfig64 = FlowConfig<f64>;
pub type KernelOutcome64 = KernelOutcome<f64>;
pub type EngineConfig64 = EngineConfig<f64>;
pub type Estimate64 = Estimate<f64>;
pub type ParticleEnsemble64 = ParticleEnsemble<f64>;
pub type RunReport64 = RunReport<f64>;

pub type GbmParams32 = GbmParams<f32>;
pub type EngineConfig32 = EngineConfig<f32>;
pub type Estimate32 = Estimate<f32>;
