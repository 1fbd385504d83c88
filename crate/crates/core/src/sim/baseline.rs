//! Direct-link reference systems without a surface: power-domain NOMA with
//! the same power split and SIC order, and TDMA with slot fractions equal to
//! the power fractions.

use crate::model::Scenario;

/// Rayleigh outage of the NOMA baseline, `1 - exp(-varrho*/L_k)`.
pub fn noma_op_exact(scenario: &Scenario, k: usize, p_dbm: f64) -> f64 {
    match scenario.max_sic_ratio(k) {
        Some(r) => {
            let star = r / scenario.snr(p_dbm);
            -(-star / scenario.direct_gain(k)).exp_m1()
        }
        None => 1.0,
    }
}

/// Rate target of the TDMA baseline, `log2(1 + gamma_th)`.
pub fn oma_target_rate(scenario: &Scenario, k: usize) -> f64 {
    scenario.users[k].gamma_th.ln_1p() / std::f64::consts::LN_2
}

/// Rayleigh outage of the TDMA baseline,
/// `1 - exp(-(2^(R/t_k) - 1) / (rho L_k))` with `t_k = a_k`.
pub fn oma_op_exact(scenario: &Scenario, k: usize, p_dbm: f64) -> f64 {
    let t = scenario.users[k].a;
    let need = (oma_target_rate(scenario, k) / t).exp2() - 1.0;
    let rho_l = scenario.snr(p_dbm) * scenario.direct_gain(k);
    -(-need / rho_l).exp_m1()
}
