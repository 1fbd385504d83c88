//! Same-seed ergodic rate of one user as its subsurface grows.

use crate::channel::{ChannelSampler, UserTrial};
use crate::model::{Partition, Scenario};
use crate::sim::{ergodic_rate, map_mut, map_trials, ordered_sum, user_rate, SimError};
use crate::specfun::RandomStream;

/// Rate of user `k` under a working partition whose entry `k` is varied.
/// For independent channels each realization keeps its generator state, so
/// adding an element costs one element draw per realization; the values
/// equal [`ergodic_rate`] at the same count bit for bit.
pub(crate) enum RateSearch<'a> {
    Incremental {
        scenario: &'a Scenario,
        sampler: ChannelSampler,
        trials: Vec<UserTrial>,
        k: usize,
        rho: f64,
    },
    Direct {
        scenario: &'a Scenario,
        counts: Vec<usize>,
        k: usize,
        p_dbm: f64,
        realizations: u64,
        seed: u64,
    },
}

impl<'a> RateSearch<'a> {
    pub(crate) fn new(
        scenario: &'a Scenario,
        working: &Partition,
        k: usize,
        p_dbm: f64,
        realizations: u64,
        seed: u64,
    ) -> Self {
        if scenario.correlation.is_some() {
            return Self::Direct {
                scenario,
                counts: working.counts().to_vec(),
                k,
                p_dbm,
                realizations,
                seed,
            };
        }
        let sampler = ChannelSampler::new(scenario, working);
        let start = working.count(k);
        let trials = map_trials(realizations, |t| {
            sampler.user_trial(&RandomStream::new(seed, t), k, start)
        });
        Self::Incremental {
            scenario,
            sampler,
            trials,
            k,
            rho: scenario.snr(p_dbm),
        }
    }

    pub(crate) fn rate(&mut self) -> Result<f64, SimError> {
        match self {
            Self::Incremental {
                scenario,
                sampler,
                trials,
                k,
                rho,
            } => {
                let (s, smp, k, rho) = (*scenario, &*sampler, *k, *rho);
                let rates = map_mut(trials, |t| user_rate(s, k, rho, smp.user_channel(t, k)));
                Ok(ordered_sum(&rates) / rates.len() as f64)
            }
            Self::Direct {
                scenario,
                counts,
                k,
                p_dbm,
                realizations,
                seed,
            } => {
                let part = Partition::new(scenario, counts.clone())
                    .map_err(crate::channel::ChannelError::from)?;
                ergodic_rate(scenario, &part, *k, *p_dbm, *realizations, *seed)
            }
        }
    }

    /// Adds one element to user `k`.
    pub(crate) fn grow(&mut self) {
        match self {
            Self::Incremental {
                sampler, trials, k, ..
            } => {
                let (smp, k) = (&*sampler, *k);
                map_mut(trials, |t| smp.extend_user_trial(t, k));
            }
            Self::Direct { counts, k, .. } => counts[*k] += 1,
        }
    }
}
