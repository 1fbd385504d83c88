//! System description: users, geometry, power split, thresholds, path loss
//! and the element partition, plus the three preset deployments and the
//! TOML scenario file format.
//!
//! All quantities are stored in linear scale except the fields that are
//! explicitly named `*_db` / `*_dbm`, which are converted on access.

mod io;
mod presets;

pub use io::{PartitionRecord, ScenarioDocument};
pub use presets::{preset, PRESET_IDS};

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default noise power; the figures are plotted against transmit power only.
pub const DEFAULT_SIGMA2_DBM: f64 = -94.0;
/// Path-loss exponent of the direct BS-user link used by the baselines.
pub const DEFAULT_ALPHA_DIRECT: f64 = 3.5;
/// Speed of light, for wavelength from carrier frequency.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("unknown preset {0} (expected 1, 2 or 3)")]
    UnknownPreset(u8),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error(
        "user order violated: mean cascaded gain of U{} ({:.3e}) exceeds that of U{} ({:.3e})",
        .weaker + 1, .weaker_gain, .stronger + 1, .stronger_gain
    )]
    UserOrder {
        weaker: usize,
        stronger: usize,
        weaker_gain: f64,
        stronger_gain: f64,
    },
    #[error("failed to parse scenario file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("failed to serialize scenario: {0}")]
    Serialize(#[from] toml::ser::Error),
}

/// Which side of the surface a user sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Transmission,
    Reflection,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Transmission, Side::Reflection];

    pub fn symbol(self) -> char {
        match self {
            Side::Transmission => 't',
            Side::Reflection => 'r',
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Transmission => "transmission",
            Side::Reflection => "reflection",
        })
    }
}

/// One NOMA user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserSpec {
    pub side: Side,
    /// Surface-to-user distance in meters.
    pub d_su: f64,
    /// Linear SINR threshold for decoding this user's signal.
    pub gamma_th: f64,
    /// Power-allocation fraction.
    pub a: f64,
    /// Ergodic-rate target in bits/s/Hz used by the partitioning search.
    #[serde(default)]
    pub r_min: f64,
    /// BS-user distance for the direct-link baselines; defaults to `d_bs + d_su`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_direct: Option<f64>,
}

/// Planar element layout used by the spatial-correlation model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSpec {
    /// Inter-element spacing in meters.
    pub element_spacing: f64,
    /// Carrier wavelength in meters.
    pub wavelength: f64,
    /// `[rows, cols]` of each surface part; square-ish when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<[usize; 2]>,
}

impl CorrelationSpec {
    /// Spacing given as a fraction of the wavelength at `carrier_hz`.
    pub fn from_carrier(spacing_wavelengths: f64, carrier_hz: f64) -> Self {
        let wavelength = SPEED_OF_LIGHT / carrier_hz;
        Self {
            element_spacing: spacing_wavelengths * wavelength,
            wavelength,
            grid: None,
        }
    }

    /// Grid used for a part holding `count` elements.
    pub fn grid_for(&self, count: usize) -> [usize; 2] {
        self.grid.unwrap_or_else(|| {
            let cols = (count as f64).sqrt().ceil().max(1.0) as usize;
            [count.div_ceil(cols).max(1), cols]
        })
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.element_spacing > 0.0) || !(self.wavelength > 0.0) {
            return Err(ModelError::InvalidScenario(
                "correlation spacing and wavelength must be positive".into(),
            ));
        }
        if let Some([rows, cols]) = self.grid {
            if rows == 0 || cols == 0 {
                return Err(ModelError::InvalidScenario(
                    "correlation grid is empty".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Complete downlink description. Users are listed weakest to strongest,
/// `U_1 ... U_K`, in the global SIC order shared by both sides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Total number of surface elements `N`.
    pub n_total: usize,
    /// BS-to-surface distance in meters.
    pub d_bs: f64,
    pub alpha_bs: f64,
    pub alpha_su: f64,
    /// Path gain at the 1 m reference distance, in dB.
    pub rho0_db: f64,
    #[serde(default = "default_sigma2")]
    pub sigma2_dbm: f64,
    #[serde(default = "default_alpha_direct")]
    pub alpha_direct: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_error_kappa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub correlation: Option<CorrelationSpec>,
    pub users: Vec<UserSpec>,
}

fn default_sigma2() -> f64 {
    DEFAULT_SIGMA2_DBM
}

fn default_alpha_direct() -> f64 {
    DEFAULT_ALPHA_DIRECT
}

/// Power-split violations of `a_j > gamma_th_j * sum_{l>j} a_l`; each listed
/// user's signal can never be decoded, so it and every later user are in
/// certain outage.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("infeasible power split: {}", describe(.violations))]
pub struct FeasibilityViolation {
    pub violations: Vec<SicViolation>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SicViolation {
    /// Zero-based user index.
    pub user: usize,
    pub a: f64,
    /// `gamma_th_j * sum_{l>j} a_l`, which `a` must exceed.
    pub required: f64,
}

fn describe(v: &[SicViolation]) -> String {
    v.iter()
        .map(|s| format!("U{} (a = {} <= {:.6})", s.user + 1, s.a, s.required))
        .collect::<Vec<_>>()
        .join(", ")
}

impl Scenario {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    /// Global indices of the users on `side`, in SIC order.
    pub fn side_users(&self, side: Side) -> Vec<usize> {
        (0..self.users.len())
            .filter(|&k| self.users[k].side == side)
            .collect()
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidScenario(m));
        let k = self.users.len();
        if k < 2 {
            return bad(format!("need at least two users, got {k}"));
        }
        for side in Side::BOTH {
            if self.side_users(side).is_empty() {
                return bad(format!("no user on the {side} side"));
            }
        }
        if self.n_total < k {
            return bad(format!("{} elements cannot serve {k} users", self.n_total));
        }
        for (name, v) in [
            ("d_bs", self.d_bs),
            ("alpha_bs", self.alpha_bs),
            ("alpha_su", self.alpha_su),
            ("alpha_direct", self.alpha_direct),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if !self.rho0_db.is_finite() || !self.sigma2_dbm.is_finite() {
            return bad("rho0_db and sigma2_dbm must be finite".into());
        }
        if let Some(kappa) = self.phase_error_kappa {
            if !(kappa >= 0.0) {
                return bad(format!(
                    "phase_error_kappa must be nonnegative, got {kappa}"
                ));
            }
        }
        if let Some(c) = &self.correlation {
            c.validate()?;
        }
        for (i, u) in self.users.iter().enumerate() {
            if !(u.d_su > 0.0) {
                return bad(format!("U{}: d_su must be positive", i + 1));
            }
            if !(u.gamma_th >= 0.0) || !u.gamma_th.is_finite() {
                return bad(format!("U{}: gamma_th must be nonnegative", i + 1));
            }
            if !(u.a > 0.0 && u.a < 1.0) {
                return bad(format!(
                    "U{}: power fraction must lie in (0, 1), got {}",
                    i + 1,
                    u.a
                ));
            }
            if let Some(d) = u.d_direct {
                if !(d > 0.0) {
                    return bad(format!("U{}: d_direct must be positive", i + 1));
                }
            }
        }
        let total: f64 = self.users.iter().map(|u| u.a).sum();
        if (total - 1.0).abs() > 1e-9 {
            return bad(format!("power fractions sum to {total}, expected 1"));
        }
        if self.users.windows(2).any(|w| w[0].a < w[1].a) {
            return bad("power fractions must be nonincreasing from U1 to UK".into());
        }
        Ok(())
    }

    pub fn with_n_total(mut self, n_total: usize) -> Self {
        self.n_total = n_total;
        self
    }

    /// Reference path gain `rho_0` in linear scale.
    pub fn rho0(&self) -> f64 {
        10f64.powf(self.rho0_db / 10.0)
    }

    /// Cascaded BS-surface-user path gain `L_k = rho_0^2 / (d_bs^a_bs d_su^a_su)`.
    pub fn path_gain(&self, k: usize) -> f64 {
        let rho0 = self.rho0();
        rho0 * rho0 / (self.d_bs.powf(self.alpha_bs) * self.users[k].d_su.powf(self.alpha_su))
    }

    pub fn direct_distance(&self, k: usize) -> f64 {
        self.users[k]
            .d_direct
            .unwrap_or(self.d_bs + self.users[k].d_su)
    }

    /// Direct-link path gain `rho_0 / d^alpha` of the baseline systems.
    pub fn direct_gain(&self, k: usize) -> f64 {
        self.rho0() / self.direct_distance(k).powf(self.alpha_direct)
    }

    /// Transmit SNR `rho = P / sigma^2` for a power in dBm.
    pub fn snr(&self, p_dbm: f64) -> f64 {
        10f64.powf((p_dbm - self.sigma2_dbm) / 10.0)
    }

    /// `sum_{l > j} a_l`.
    pub fn tail_power(&self, j: usize) -> f64 {
        self.users[j + 1..].iter().map(|u| u.a).sum()
    }

    /// `gamma_th_j / (a_j - gamma_th_j sum_{l>j} a_l)`, or `None` when stage `j`
    /// can never succeed.
    pub fn sic_ratio(&self, j: usize) -> Option<f64> {
        let u = &self.users[j];
        let margin = u.a - u.gamma_th * self.tail_power(j);
        (margin > 0.0).then(|| u.gamma_th / margin)
    }

    /// Largest SIC ratio over the stages user `k` must pass, `None` if any of
    /// them is infeasible.
    pub fn max_sic_ratio(&self, k: usize) -> Option<f64> {
        (0..=k).try_fold(0.0f64, |acc, j| self.sic_ratio(j).map(|r| acc.max(r)))
    }

    pub fn feasibility_check(&self) -> Result<(), FeasibilityViolation> {
        let violations: Vec<_> = (0..self.users.len().saturating_sub(1))
            .filter(|&j| self.sic_ratio(j).is_none())
            .map(|j| SicViolation {
                user: j,
                a: self.users[j].a,
                required: self.users[j].gamma_th * self.tail_power(j),
            })
            .collect();
        if violations.is_empty() {
            Ok(())
        } else {
            Err(FeasibilityViolation { violations })
        }
    }
}

/// Number of elements assigned to each user, in global user order. The side
/// of each subsurface is the side of its user.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    counts: Vec<usize>,
    n_t: usize,
    n_r: usize,
}

impl Partition {
    pub fn new(scenario: &Scenario, counts: Vec<usize>) -> Result<Self, ModelError> {
        if counts.len() != scenario.num_users() {
            return Err(ModelError::InvalidPartition(format!(
                "{} counts for {} users",
                counts.len(),
                scenario.num_users()
            )));
        }
        if let Some(k) = counts.iter().position(|&c| c == 0) {
            return Err(ModelError::InvalidPartition(format!(
                "U{} has no elements",
                k + 1
            )));
        }
        let total: usize = counts.iter().sum();
        if total > scenario.n_total {
            return Err(ModelError::InvalidPartition(format!(
                "{total} elements assigned but the surface has {}",
                scenario.n_total
            )));
        }
        let side_sum = |side| {
            scenario
                .side_users(side)
                .into_iter()
                .map(|k| counts[k])
                .sum::<usize>()
        };
        Ok(Self {
            n_t: side_sum(Side::Transmission),
            n_r: side_sum(Side::Reflection),
            counts,
        })
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn count(&self, k: usize) -> usize {
        self.counts[k]
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn total(&self) -> usize {
        self.n_t + self.n_r
    }

    pub fn side_total(&self, side: Side) -> usize {
        match side {
            Side::Transmission => self.n_t,
            Side::Reflection => self.n_r,
        }
    }

    /// Elements on user `k`'s side that serve other users, `N_chi - N^k_chi`.
    pub fn interfering(&self, scenario: &Scenario, k: usize) -> usize {
        self.side_total(scenario.users[k].side) - self.counts[k]
    }

    /// Mean cascaded gain `L_k N^k_chi` of every user.
    pub fn mean_gains(&self, scenario: &Scenario) -> Vec<f64> {
        (0..self.counts.len())
            .map(|k| scenario.path_gain(k) * self.counts[k] as f64)
            .collect()
    }

    /// Checks that `L_k N^k_chi` is nondecreasing in `k`, which the SIC order
    /// presumes.
    pub fn check_user_order(&self, scenario: &Scenario) -> Result<(), ModelError> {
        let g = self.mean_gains(scenario);
        for k in 1..g.len() {
            if g[k - 1] > g[k] * (1.0 + 1e-12) {
                return Err(ModelError::UserOrder {
                    weaker: k - 1,
                    stronger: k,
                    weaker_gain: g[k - 1],
                    stronger_gain: g[k],
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs()
    }

    #[test]
    fn path_gain_case_values() {
        let s1 = preset(1).unwrap();
        assert!(close(s1.path_gain(0), 1.6e-13, 1e-12));
        let s2 = preset(2).unwrap();
        assert!(close(s2.path_gain(2), 1e-6 / (400.0 * 900.0), 1e-12));
        assert!(close(s2.path_gain(2), 2.78e-12, 1e-3));
    }

    #[test]
    fn reference_distance_identity() {
        let mut s = preset(1).unwrap();
        s.d_bs = 1.0;
        s.users[0].d_su = 1.0;
        assert!(close(s.path_gain(0), s.rho0() * s.rho0(), 1e-15));
    }

    #[test]
    fn feasibility_presets_and_boundary() {
        for id in PRESET_IDS {
            preset(id).unwrap().feasibility_check().unwrap();
        }
        let mut s = preset(1).unwrap();
        s.users[0].a = 0.5;
        s.users[1].a = 0.5;
        let err = s.feasibility_check().unwrap_err();
        assert_eq!(err.violations.len(), 1);
        assert_eq!(err.violations[0].user, 0);
        assert!(err.to_string().contains("U1"));
    }

    #[test]
    fn case2_feasibility_margins() {
        let s = preset(2).unwrap();
        assert!(close(s.users[0].gamma_th * s.tail_power(0), 0.28, 1e-12));
        assert!(close(s.users[1].gamma_th * s.tail_power(1), 0.07, 1e-12));
    }

    #[test]
    fn validation_rejects_bad_scenarios() {
        let mut s = preset(2).unwrap();
        s.users[2].side = Side::Transmission;
        assert!(s.validate().is_err());
        let mut s = preset(2).unwrap();
        s.users[0].a = 0.5;
        assert!(s.validate().is_err());
        let mut s = preset(2).unwrap();
        s.users.swap(0, 1);
        assert!(s.validate().is_err());
    }

    #[test]
    fn partition_totals_and_errors() {
        let s = preset(2).unwrap();
        let p = Partition::new(&s, vec![16, 20, 24]).unwrap();
        assert_eq!((p.n_t(), p.n_r()), (36, 24));
        assert_eq!(p.interfering(&s, 0), 20);
        assert_eq!(p.interfering(&s, 2), 0);
        assert!(Partition::new(&s, vec![16, 20]).is_err());
        assert!(Partition::new(&s, vec![30, 20, 24]).is_err());
        assert!(Partition::new(&s, vec![0, 20, 24]).is_err());
    }

    #[test]
    fn user_order_check() {
        let s = preset(1).unwrap().with_n_total(256);
        Partition::new(&s, vec![102, 154])
            .unwrap()
            .check_user_order(&s)
            .unwrap();
        let bad = Partition::new(&s, vec![200, 56]).unwrap();
        assert!(matches!(
            bad.check_user_order(&s),
            Err(ModelError::UserOrder { .. })
        ));
    }

    proptest! {
        #[test]
        fn path_gain_decreases_with_distance(d1 in 1.01f64..500.0, step in 0.01f64..100.0, alpha in 1.5f64..4.0) {
            let mut s = preset(3).unwrap();
            s.alpha_su = alpha;
            s.alpha_bs = alpha;
            s.users[0].d_su = d1;
            let g1 = s.path_gain(0);
            s.users[0].d_su = d1 + step;
            prop_assert!(s.path_gain(0) < g1);
            s.users[0].d_su = d1;
            s.d_bs = d1 + step;
            let g_far = s.path_gain(0);
            s.d_bs = d1;
            prop_assert!(g_far < s.path_gain(0));
        }

        #[test]
        fn path_gain_decreases_with_exponent(alpha in 1.0f64..4.0, step in 0.01f64..2.0) {
            let mut s = preset(2).unwrap();
            s.alpha_su = alpha;
            let g1 = s.path_gain(1);
            s.alpha_su = alpha + step;
            prop_assert!(s.path_gain(1) < g1);
        }
    }
}
