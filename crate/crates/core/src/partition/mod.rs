//! Splitting the surface into per-user subsurfaces.
//!
//! Stage one picks the smallest per-user count `N_thr` whose high-SNR outage
//! floor stays below `epsilon` for every user. Stage two walks the users from
//! weakest to strongest and grows each subsurface, starting from the previous
//! user's count, until the user's ergodic rate at a reference power reaches
//! its target. Leftover elements go to the strongest user.

mod calibrate;
mod search;

pub use calibrate::{
    calibrate_row, calibrate_table, fixture, published_tables, CalibrationRow, CalibrationTable,
    FixtureRow, FixtureTable, FIXTURE_NAMES,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::op_asymptotic_counts;
use crate::model::{FeasibilityViolation, ModelError, Partition, Scenario, Side};
use crate::sim::{SimError, MIN_TRIALS};
use search::RateSearch;

/// Outage ceiling used for the shipped fixtures.
pub const DEFAULT_EPSILON: f64 = 0.6;
pub const DEFAULT_P_REF_DBM: f64 = 40.0;
pub const DEFAULT_REALIZATIONS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("invalid partition request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Infeasible(#[from] FeasibilityViolation),
    #[error(
        "no N_thr <= {max_n_thr} brings every outage floor to {epsilon}; best worst-user floor {best_op:.6e} at N_thr = {best_n_thr}"
    )]
    ThresholdUnreachable {
        epsilon: f64,
        max_n_thr: usize,
        best_op: f64,
        best_n_thr: usize,
    },
    #[error("element budget of {budget} exhausted; rate targets unmet for {}", users(.unmet))]
    BudgetExhausted { budget: usize, unmet: Vec<usize> },
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("two-user partitioning needs one user per side")]
    NotTwoUser,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

fn users(list: &[usize]) -> String {
    list.iter()
        .map(|k| format!("U{}", k + 1))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Inputs of the two allocation stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRequest {
    /// Ceiling on every user's outage floor.
    pub epsilon: f64,
    /// Per-user ergodic-rate targets in bits/s/Hz.
    pub r_min: Vec<f64>,
    /// Power at which the rates are evaluated.
    pub p_ref_dbm: f64,
    pub realizations: u64,
    pub seed: u64,
}

impl PartitionRequest {
    /// Request using the rate targets stored in the scenario.
    pub fn from_scenario(scenario: &Scenario, epsilon: f64) -> Self {
        Self {
            epsilon,
            r_min: scenario.users.iter().map(|u| u.r_min).collect(),
            p_ref_dbm: DEFAULT_P_REF_DBM,
            realizations: DEFAULT_REALIZATIONS,
            seed: DEFAULT_SEED,
        }
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<(), PartitionError> {
        let bad = |m: String| Err(PartitionError::InvalidRequest(m));
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return bad(format!("epsilon must lie in (0, 1), got {}", self.epsilon));
        }
        if self.r_min.len() != scenario.num_users() {
            return bad(format!(
                "{} rate targets for {} users",
                self.r_min.len(),
                scenario.num_users()
            ));
        }
        if let Some(r) = self.r_min.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return bad(format!(
                "rate targets must be finite and nonnegative, got {r}"
            ));
        }
        if self.realizations < MIN_TRIALS {
            return bad(format!(
                "at least {MIN_TRIALS} realizations are required, got {}",
                self.realizations
            ));
        }
        if !self.p_ref_dbm.is_finite() {
            return bad("reference power must be finite".into());
        }
        Ok(())
    }
}

/// Result of a full allocation run.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionOutcome {
    pub partition: Partition,
    /// Stage-one threshold; `None` when stage one is skipped.
    pub n_thr: Option<usize>,
    /// Counts found by stage two, before the remainder is assigned.
    pub searched: Vec<usize>,
    /// Ergodic rate of each searched user at its searched count.
    pub rates: Vec<Option<f64>>,
}

/// Worst outage floor over the users when each holds `n_thr` of `N` elements.
pub fn worst_floor(scenario: &Scenario, n_thr: usize) -> f64 {
    (0..scenario.num_users())
        .map(|k| op_asymptotic_counts(scenario, k, n_thr, scenario.n_total))
        .fold(0.0, f64::max)
}

/// Smallest `N_thr` with every user's floor at most `epsilon`, searched over
/// `1..=N/K`.
pub fn algorithm1_nthr(scenario: &Scenario, epsilon: f64) -> Result<usize, PartitionError> {
    scenario.feasibility_check()?;
    let max_n_thr = scenario.n_total / scenario.num_users();
    let mut best = (f64::INFINITY, 0);
    for n_thr in 1..=max_n_thr {
        let op = worst_floor(scenario, n_thr);
        if op <= epsilon {
            return Ok(n_thr);
        }
        if op < best.0 {
            best = (op, n_thr);
        }
    }
    Err(PartitionError::ThresholdUnreachable {
        epsilon,
        max_n_thr,
        best_op: best.0,
        best_n_thr: best.1,
    })
}

/// Counts and achieved rates of stage two for the users in `users`. Users
/// not yet searched hold `n_thr` in the working partition.
fn search_users(
    scenario: &Scenario,
    n_thr: usize,
    request: &PartitionRequest,
    users: usize,
) -> Result<(Vec<usize>, Vec<f64>), PartitionError> {
    let k_users = scenario.num_users();
    let budget = scenario.n_total;
    let mut working = vec![n_thr; k_users];
    if working.iter().sum::<usize>() > budget {
        return Err(PartitionError::BudgetExhausted {
            budget,
            unmet: (0..k_users).collect(),
        });
    }
    let mut rates = Vec::with_capacity(users);
    for k in 0..users {
        let start = if k == 0 {
            n_thr
        } else {
            working[k - 1].max(n_thr)
        };
        working[k] = start;
        let used: usize = working.iter().sum();
        if used > budget {
            return Err(PartitionError::BudgetExhausted {
                budget,
                unmet: (k..k_users).collect(),
            });
        }
        let part = Partition::new(scenario, working.clone())?;
        let mut search = RateSearch::new(
            scenario,
            &part,
            k,
            request.p_ref_dbm,
            request.realizations,
            request.seed,
        );
        let mut spare = budget - used;
        loop {
            let r = search.rate()?;
            if r >= request.r_min[k] {
                rates.push(r);
                break;
            }
            if spare == 0 {
                return Err(PartitionError::BudgetExhausted {
                    budget,
                    unmet: (k..k_users).collect(),
                });
            }
            search.grow();
            working[k] += 1;
            spare -= 1;
        }
    }
    working.truncate(users);
    Ok((working, rates))
}

/// Stage two: per-user counts meeting every rate target, nondecreasing in
/// the user index.
pub fn algorithm2_alloc(
    scenario: &Scenario,
    n_thr: usize,
    request: &PartitionRequest,
) -> Result<Vec<usize>, PartitionError> {
    request.validate(scenario)?;
    if n_thr == 0 {
        return Err(PartitionError::InvalidRequest(
            "N_thr must be positive".into(),
        ));
    }
    Ok(search_users(scenario, n_thr, request, scenario.num_users())?.0)
}

fn close_budget(scenario: &Scenario, mut counts: Vec<usize>) -> Result<Partition, PartitionError> {
    let used: usize = counts.iter().sum();
    *counts.last_mut().expect("at least two users") += scenario.n_total - used;
    Ok(Partition::new(scenario, counts)?)
}

fn is_two_user(scenario: &Scenario) -> bool {
    scenario.side_users(Side::Transmission).len() == 1
        && scenario.side_users(Side::Reflection).len() == 1
}

/// Both stages followed by the remainder rule. One user per side delegates
/// to [`two_user_partition`].
pub fn two_stage_partition(
    scenario: &Scenario,
    request: &PartitionRequest,
) -> Result<PartitionOutcome, PartitionError> {
    if is_two_user(scenario) {
        return two_user_partition(scenario, request);
    }
    request.validate(scenario)?;
    let n_thr = algorithm1_nthr(scenario, request.epsilon)?;
    let (searched, rates) = search_users(scenario, n_thr, request, scenario.num_users())?;
    Ok(PartitionOutcome {
        partition: close_budget(scenario, searched.clone())?,
        n_thr: Some(n_thr),
        searched,
        rates: rates.into_iter().map(Some).collect(),
    })
}

/// Without subsurface interference only the weaker user is searched,
/// starting from one element; the stronger user takes the rest.
pub fn two_user_partition(
    scenario: &Scenario,
    request: &PartitionRequest,
) -> Result<PartitionOutcome, PartitionError> {
    if !is_two_user(scenario) {
        return Err(PartitionError::NotTwoUser);
    }
    request.validate(scenario)?;
    scenario.feasibility_check()?;
    let (mut searched, rates) = search_users(scenario, 1, request, 1)?;
    if searched[0] >= scenario.n_total {
        return Err(PartitionError::BudgetExhausted {
            budget: scenario.n_total,
            unmet: vec![1],
        });
    }
    searched.push(1);
    Ok(PartitionOutcome {
        partition: close_budget(scenario, searched.clone())?,
        n_thr: None,
        searched,
        rates: vec![Some(rates[0]), None],
    })
}

/// Equal split with the remainder given to the strongest user.
pub fn uniform_partition(scenario: &Scenario) -> Result<Partition, PartitionError> {
    let k = scenario.num_users();
    let share = scenario.n_total / k;
    if share == 0 {
        return Err(PartitionError::BudgetExhausted {
            budget: scenario.n_total,
            unmet: (0..k).collect(),
        });
    }
    close_budget(scenario, vec![share; k])
}
