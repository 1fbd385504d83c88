//! Special functions and random samplers behind the outage expressions and
//! the Monte Carlo engine.
//!
//! The analytic side needs the generalized Marcum Q-function (orders
//! `1/2, 1, 3/2, ...`), the CDF of a one-degree-of-freedom noncentral
//! chi-square variable and the CDF of the difference between such a variable
//! and an independent exponential (two-dof central chi-square). The sampling
//! side needs unit-power Rayleigh amplitudes, uniform phases and von Mises
//! phase errors drawn from a counter-based generator so that trial `i` is the
//! same regardless of which worker runs it.

mod chi2;
mod erf;
mod gamma;
mod marcum;
mod rng;
mod samplers;

pub use chi2::{chi2_diff_cdf, noncentral_chi2_cdf_1dof};
pub use erf::{ln_erfc, ln_q_half};
pub use gamma::regularized_gamma;
pub use marcum::marcum_q;
pub use rng::RandomStream;
pub use samplers::{
    rayleigh_amplitude, sample_rayleigh_pair, sample_von_mises, uniform_phase, VonMises,
};

use thiserror::Error;

/// Argument outside the domain of a special function or sampler.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{function}: {message}")]
pub struct DomainError {
    pub function: &'static str,
    pub message: String,
}

impl DomainError {
    pub(crate) fn new(function: &'static str, message: impl Into<String>) -> Self {
        Self {
            function,
            message: message.into(),
        }
    }
}
