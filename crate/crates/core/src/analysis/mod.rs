//! Closed-form outage probabilities under the central-limit surrogate of the
//! cascaded channel.
//!
//! At user `k` the coherent sum of its own subsurface is approximated by a
//! real Gaussian `A ~ N(mu, nu^2)` and the residual from the other
//! subsurfaces on its side by a circular complex Gaussian. Every SIC stage
//! `j <= k` succeeds iff `|r_k|^2 >= varrho_j (rho I_k + 1)`, so the outage
//! event reduces to a single threshold `varrho* = max_j varrho_j` on
//! `A^2 - rho varrho* I_k`.

use std::f64::consts::PI;

use thiserror::Error;

use crate::model::{Partition, Scenario, Side};
use crate::specfun::{chi2_diff_cdf, marcum_q, DomainError};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("two-user expression needs one user per side, got (K_t, K_r) = ({k_t}, {k_r})")]
    NotTwoUser { k_t: usize, k_r: usize },
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Mean of the product of two independent unit-power Rayleigh amplitudes.
pub const RAYLEIGH_PRODUCT_MEAN: f64 = PI / 4.0;
/// Variance of the same product, `1 - pi^2/16`.
pub const RAYLEIGH_PRODUCT_VAR: f64 = 1.0 - PI * PI / 16.0;

/// Parameters of the outage expressions for one user at one transmit SNR.
/// Stage thresholds that can never be met are `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageParams {
    pub mu: f64,
    pub nu: f64,
    pub u: f64,
    pub u_tilde: f64,
    pub rho: f64,
    /// `varrho_j` for `j = 1..=k`.
    pub varrho: Vec<f64>,
    pub varrho_star: f64,
    pub varrho_dagger: f64,
}

impl OutageParams {
    /// True when some SIC stage is infeasible at every SNR.
    pub fn certain_outage(&self) -> bool {
        !self.varrho_dagger.is_finite()
    }
}

/// Parameters for user `k` holding `n_k` of the `n_side` elements on its side.
pub fn outage_params_for_counts(
    scenario: &Scenario,
    k: usize,
    n_k: usize,
    n_side: usize,
    rho: f64,
) -> OutageParams {
    let l = scenario.path_gain(k);
    let ratios: Vec<f64> = (0..=k)
        .map(|j| scenario.sic_ratio(j).unwrap_or(f64::INFINITY))
        .collect();
    let dagger = ratios.iter().copied().fold(0.0, f64::max);
    let varrho: Vec<f64> = ratios.iter().map(|r| r / rho).collect();
    let star = dagger / rho;
    let spill = l * n_side.saturating_sub(n_k) as f64;
    // rho * varrho* equals varrho_dagger, so u does not depend on the SNR
    let u_tilde = if spill == 0.0 {
        0.0
    } else {
        (0.5 * dagger * spill).sqrt()
    };
    OutageParams {
        mu: RAYLEIGH_PRODUCT_MEAN * l.sqrt() * n_k as f64,
        nu: (RAYLEIGH_PRODUCT_VAR * l * n_k as f64).sqrt(),
        u: u_tilde,
        u_tilde,
        rho,
        varrho,
        varrho_star: star,
        varrho_dagger: dagger,
    }
}

pub fn outage_params(
    scenario: &Scenario,
    partition: &Partition,
    k: usize,
    p_dbm: f64,
) -> OutageParams {
    let side = scenario.users[k].side;
    outage_params_for_counts(
        scenario,
        k,
        partition.count(k),
        partition.side_total(side),
        scenario.snr(p_dbm),
    )
}

/// `F_R(varrho*)` from the parameters; 1 under certain outage.
pub fn op_from_params(p: &OutageParams) -> Result<f64, AnalysisError> {
    if p.certain_outage() {
        return Ok(1.0);
    }
    Ok(chi2_diff_cdf(p.varrho_star, p.mu, p.nu, p.u)?.clamp(0.0, 1.0))
}

/// SNR-independent floor `(u~^2/(nu^2+u~^2))^(1/2) exp(-mu^2 / (2(nu^2+u~^2)))`.
pub fn op_floor_from_params(p: &OutageParams) -> f64 {
    if p.certain_outage() {
        return 1.0;
    }
    if p.u_tilde == 0.0 {
        return 0.0;
    }
    let u2 = p.u_tilde * p.u_tilde;
    let s = p.nu * p.nu + u2;
    ((u2 / s).sqrt() * (-p.mu * p.mu / (2.0 * s)).exp()).clamp(0.0, 1.0)
}

/// Outage probability of user `k` at transmit power `p_dbm`.
pub fn op_exact(
    scenario: &Scenario,
    partition: &Partition,
    k: usize,
    p_dbm: f64,
) -> Result<f64, AnalysisError> {
    op_from_params(&outage_params(scenario, partition, k, p_dbm))
}

/// High-SNR outage floor of user `k`; zero for the sole user of a side.
pub fn op_asymptotic(scenario: &Scenario, partition: &Partition, k: usize) -> f64 {
    op_floor_from_params(&outage_params(scenario, partition, k, 0.0))
}

/// Floor of user `k` when it holds `n_k` of `n_side` elements.
pub fn op_asymptotic_counts(scenario: &Scenario, k: usize, n_k: usize, n_side: usize) -> f64 {
    op_floor_from_params(&outage_params_for_counts(scenario, k, n_k, n_side, 1.0))
}

/// Interference-free outage `1 - Q_{1/2}(mu/nu, sqrt(varrho*)/nu)` of a
/// two-user deployment with one user per side.
pub fn op_twouser(
    scenario: &Scenario,
    partition: &Partition,
    k: usize,
    p_dbm: f64,
) -> Result<f64, AnalysisError> {
    let k_t = scenario.side_users(Side::Transmission).len();
    let k_r = scenario.side_users(Side::Reflection).len();
    if (k_t, k_r) != (1, 1) {
        return Err(AnalysisError::NotTwoUser { k_t, k_r });
    }
    let p = outage_params(scenario, partition, k, p_dbm);
    if p.certain_outage() {
        return Ok(1.0);
    }
    let q = marcum_q(0.5, p.mu / p.nu, p.varrho_star.sqrt() / p.nu)?;
    Ok((1.0 - q).clamp(0.0, 1.0))
}
