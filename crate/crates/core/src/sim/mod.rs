//! Monte Carlo outage and rate estimation.
//!
//! Each trial draws one channel realization and evaluates every power of a
//! sweep on it, so curves share common random numbers. Trial `t` always uses
//! stream `(seed, t)`, and partial sums are merged in a fixed block order;
//! results are therefore identical for any number of workers.

mod baseline;
mod engine;

pub use baseline::{noma_op_exact, oma_op_exact, oma_target_rate};
pub use engine::with_workers;
pub(crate) use engine::{map_mut, map_trials, ordered_sum};

use rand_distr::{Distribution, Exp1};
use thiserror::Error;

use crate::channel::{ChannelDraw, ChannelError, ChannelSampler, CorrelatedSampler, UserChannel};
use crate::model::{Partition, Scenario};
use crate::specfun::RandomStream;
use engine::reduce_blocks;

pub const MIN_TRIALS: u64 = 1000;
const BASELINE_LANE: u64 = 4 << 20;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("at least {MIN_TRIALS} trials are required, got {0}")]
    TooFewTrials(u64),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("cannot build worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    /// Zero a user's rate in trials where it is in outage.
    pub strict_sumrate: bool,
    /// Also simulate the direct-link NOMA and TDMA systems.
    pub baselines: bool,
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            strict_sumrate: false,
            baselines: false,
        }
    }

    fn check(&self) -> Result<(), SimError> {
        if self.trials < MIN_TRIALS {
            Err(SimError::TooFewTrials(self.trials))
        } else {
            Ok(())
        }
    }
}

/// Per-user estimate with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    fn binomial(count: u64, trials: u64) -> Self {
        let p = count as f64 / trials as f64;
        Self {
            mean: p,
            se: (p * (1.0 - p) / trials as f64).sqrt(),
        }
    }

    fn sample(sum: f64, sum_sq: f64, trials: u64) -> Self {
        let n = trials as f64;
        let mean = sum / n;
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        Self {
            mean,
            se: (var / n).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemPoint {
    pub op: Vec<Estimate>,
    pub sumrate: Estimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McPoint {
    pub p_dbm: f64,
    pub proposed: SystemPoint,
    pub noma: Option<SystemPoint>,
    pub oma: Option<SystemPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSweep {
    pub trials: u64,
    pub seed: u64,
    pub points: Vec<McPoint>,
}

/// Per-user result of one trial at one power.
#[derive(Debug, Clone, PartialEq)]
pub struct UserOutcome {
    /// `gamma^j_k` for `j = 1..=k`; the last entry is the user's own SINR.
    pub sinr_stages: Vec<f64>,
    pub own_sinr: f64,
    pub outage: bool,
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub users: Vec<UserOutcome>,
}

/// Power split seen by the SIC stages: `a_j` and `sum_{l>j} a_l`.
#[derive(Debug, Clone)]
struct Split {
    a: Vec<f64>,
    tail: Vec<f64>,
    gamma_th: Vec<f64>,
}

impl Split {
    fn new(scenario: &Scenario) -> Self {
        let k = scenario.num_users();
        Self {
            a: scenario.users.iter().map(|u| u.a).collect(),
            tail: (0..k).map(|j| scenario.tail_power(j)).collect(),
            gamma_th: scenario.users.iter().map(|u| u.gamma_th).collect(),
        }
    }

    #[inline]
    fn sinr(&self, j: usize, rho: f64, ch: UserChannel) -> f64 {
        let sig = rho * ch.desired_pow;
        sig * self.a[j] / (sig * self.tail[j] + rho * ch.interference_pow + 1.0)
    }

    /// Outage flag and own rate of user `k`.
    #[inline]
    fn evaluate(&self, k: usize, rho: f64, ch: UserChannel) -> (bool, f64) {
        let outage = (0..=k).any(|j| self.sinr(j, rho, ch) < self.gamma_th[j]);
        (outage, self.sinr(k, rho, ch).log2_1p())
    }
}

trait Log2p1 {
    fn log2_1p(self) -> f64;
}

impl Log2p1 for f64 {
    #[inline]
    fn log2_1p(self) -> f64 {
        self.ln_1p() * std::f64::consts::LOG2_E
    }
}

/// Stage SINRs of every user for one realization. The strongest user's own
/// stage has no remaining intra-cluster term; with a single user per side
/// the interference power is zero.
pub fn sinr_stages(draw: &ChannelDraw, scenario: &Scenario, p_dbm: f64) -> Vec<Vec<f64>> {
    let split = Split::new(scenario);
    let rho = scenario.snr(p_dbm);
    draw.users
        .iter()
        .enumerate()
        .map(|(k, &ch)| (0..=k).map(|j| split.sinr(j, rho, ch)).collect())
        .collect()
}

pub fn evaluate_trial(draw: &ChannelDraw, scenario: &Scenario, p_dbm: f64) -> TrialOutcome {
    let gamma_th: Vec<f64> = scenario.users.iter().map(|u| u.gamma_th).collect();
    let users = sinr_stages(draw, scenario, p_dbm)
        .into_iter()
        .map(|stages| {
            let own = *stages.last().expect("at least one stage");
            UserOutcome {
                outage: stages.iter().zip(&gamma_th).any(|(g, th)| g < th),
                rate: own.log2_1p(),
                own_sinr: own,
                sinr_stages: stages,
            }
        })
        .collect();
    TrialOutcome { users }
}

/// Channel generator chosen by the scenario: correlated when it carries a
/// correlation section, independent otherwise.
#[derive(Debug, Clone)]
pub enum ChannelModel {
    Iid(ChannelSampler),
    Correlated(Box<CorrelatedSampler>),
}

impl ChannelModel {
    pub fn new(scenario: &Scenario, partition: &Partition) -> Result<Self, SimError> {
        Ok(if scenario.correlation.is_some() {
            Self::Correlated(Box::new(CorrelatedSampler::new(scenario, partition)?))
        } else {
            Self::Iid(ChannelSampler::new(scenario, partition))
        })
    }

    pub fn draw_into(&self, stream: &RandomStream, out: &mut ChannelDraw) {
        match self {
            Self::Iid(s) => s.draw_into(stream, out),
            Self::Correlated(s) => *out = s.draw(stream),
        }
    }
}

#[derive(Debug, Clone, Default)]
struct SystemAcc {
    outages: Vec<u64>,
    rate_sum: f64,
    rate_sq: f64,
}

impl SystemAcc {
    fn new(users: usize) -> Self {
        Self {
            outages: vec![0; users],
            ..Self::default()
        }
    }

    fn add_rate(&mut self, r: f64) {
        self.rate_sum += r;
        self.rate_sq += r * r;
    }

    fn merge(&mut self, other: &Self) {
        for (a, b) in self.outages.iter_mut().zip(&other.outages) {
            *a += b;
        }
        self.rate_sum += other.rate_sum;
        self.rate_sq += other.rate_sq;
    }

    fn finish(&self, trials: u64) -> SystemPoint {
        SystemPoint {
            op: self
                .outages
                .iter()
                .map(|&c| Estimate::binomial(c, trials))
                .collect(),
            sumrate: Estimate::sample(self.rate_sum, self.rate_sq, trials),
        }
    }
}

struct SweepAcc {
    proposed: Vec<SystemAcc>,
    noma: Vec<SystemAcc>,
    oma: Vec<SystemAcc>,
    scratch: ChannelDraw,
    direct: Vec<f64>,
}

/// Outage and sum rate of every user at every power in `p_dbm`.
pub fn mc_sweep(
    scenario: &Scenario,
    partition: &Partition,
    p_dbm: &[f64],
    cfg: &McConfig,
) -> Result<McSweep, SimError> {
    cfg.check()?;
    let model = ChannelModel::new(scenario, partition)?;
    let split = Split::new(scenario);
    let k_users = scenario.num_users();
    let rhos: Vec<f64> = p_dbm.iter().map(|&p| scenario.snr(p)).collect();
    let direct_gain: Vec<f64> = (0..k_users).map(|k| scenario.direct_gain(k)).collect();
    let oma_target: Vec<f64> = (0..k_users).map(|k| oma_target_rate(scenario, k)).collect();
    let n_base = if cfg.baselines { rhos.len() } else { 0 };

    let init = || SweepAcc {
        proposed: vec![SystemAcc::new(k_users); rhos.len()],
        noma: vec![SystemAcc::new(k_users); n_base],
        oma: vec![SystemAcc::new(k_users); n_base],
        scratch: ChannelDraw::default(),
        direct: vec![0.0; k_users],
    };
    let run = |t: u64, acc: &mut SweepAcc| {
        let stream = RandomStream::new(cfg.seed, t);
        model.draw_into(&stream, &mut acc.scratch);
        for (i, &rho) in rhos.iter().enumerate() {
            let sys = &mut acc.proposed[i];
            let mut sum = 0.0;
            for (k, &ch) in acc.scratch.users.iter().enumerate() {
                let (out, rate) = split.evaluate(k, rho, ch);
                sys.outages[k] += out as u64;
                if !(cfg.strict_sumrate && out) {
                    sum += rate;
                }
            }
            sys.add_rate(sum);
        }
        if cfg.baselines {
            let mut rng = stream.lane(BASELINE_LANE);
            for (k, h) in acc.direct.iter_mut().enumerate() {
                let e: f64 = Exp1.sample(&mut rng);
                *h = direct_gain[k] * e;
            }
            for (i, &rho) in rhos.iter().enumerate() {
                let (mut noma_sum, mut oma_sum) = (0.0, 0.0);
                for (k, &g) in acc.direct.iter().enumerate() {
                    let ch = UserChannel {
                        desired_pow: g,
                        interference_pow: 0.0,
                    };
                    let (out, rate) = split.evaluate(k, rho, ch);
                    acc.noma[i].outages[k] += out as u64;
                    if !(cfg.strict_sumrate && out) {
                        noma_sum += rate;
                    }
                    let oma_rate = split.a[k] * (rho * g).log2_1p();
                    let oma_out = oma_rate < oma_target[k];
                    acc.oma[i].outages[k] += oma_out as u64;
                    if !(cfg.strict_sumrate && oma_out) {
                        oma_sum += oma_rate;
                    }
                }
                acc.noma[i].add_rate(noma_sum);
                acc.oma[i].add_rate(oma_sum);
            }
        }
    };
    let merge = |total: &mut SweepAcc, part: SweepAcc| {
        let pairs = [
            (&mut total.proposed, &part.proposed),
            (&mut total.noma, &part.noma),
            (&mut total.oma, &part.oma),
        ];
        for (dst, src) in pairs {
            for (a, b) in dst.iter_mut().zip(src) {
                a.merge(b);
            }
        }
    };
    let acc = reduce_blocks(cfg.trials, init, run, merge);
    let points = p_dbm
        .iter()
        .enumerate()
        .map(|(i, &p)| McPoint {
            p_dbm: p,
            proposed: acc.proposed[i].finish(cfg.trials),
            noma: cfg.baselines.then(|| acc.noma[i].finish(cfg.trials)),
            oma: cfg.baselines.then(|| acc.oma[i].finish(cfg.trials)),
        })
        .collect();
    Ok(McSweep {
        trials: cfg.trials,
        seed: cfg.seed,
        points,
    })
}

fn single_point(
    scenario: &Scenario,
    partition: &Partition,
    p_dbm: f64,
    cfg: &McConfig,
) -> Result<McPoint, SimError> {
    let mut sweep = mc_sweep(scenario, partition, &[p_dbm], cfg)?;
    Ok(sweep.points.remove(0))
}

/// Per-user empirical outage probability.
pub fn mc_outage(
    scenario: &Scenario,
    partition: &Partition,
    p_dbm: f64,
    trials: u64,
    seed: u64,
) -> Result<Vec<Estimate>, SimError> {
    Ok(
        single_point(scenario, partition, p_dbm, &McConfig::new(trials, seed))?
            .proposed
            .op,
    )
}

/// Mean sum rate in bits/s/Hz, under successful SIC unless `strict`.
pub fn mc_sumrate(
    scenario: &Scenario,
    partition: &Partition,
    p_dbm: f64,
    trials: u64,
    seed: u64,
    strict: bool,
) -> Result<Estimate, SimError> {
    let cfg = McConfig {
        strict_sumrate: strict,
        ..McConfig::new(trials, seed)
    };
    Ok(single_point(scenario, partition, p_dbm, &cfg)?
        .proposed
        .sumrate)
}

/// `E[log2(1 + gamma^k_k)]` over `realizations` seeded channel draws. Per
/// trial values are summed in trial order.
pub fn ergodic_rate(
    scenario: &Scenario,
    partition: &Partition,
    k: usize,
    p_dbm: f64,
    realizations: u64,
    seed: u64,
) -> Result<f64, SimError> {
    McConfig::new(realizations, seed).check()?;
    let model = ChannelModel::new(scenario, partition)?;
    let split = Split::new(scenario);
    let rho = scenario.snr(p_dbm);
    let rates = map_trials(realizations, |t| {
        let mut draw = ChannelDraw::default();
        model.draw_into(&RandomStream::new(seed, t), &mut draw);
        split.sinr(k, rho, draw.users[k]).log2_1p()
    });
    Ok(ordered_sum(&rates) / realizations as f64)
}

/// Same-seed rate of user `k` alone, used by the allocation search.
pub(crate) fn user_rate(scenario: &Scenario, k: usize, rho: f64, ch: UserChannel) -> f64 {
    let u = &scenario.users[k];
    let sig = rho * ch.desired_pow;
    (sig * u.a / (sig * scenario.tail_power(k) + rho * ch.interference_pow + 1.0)).log2_1p()
}

/// Direct-link NOMA baseline at one power.
pub fn baseline_noma(
    scenario: &Scenario,
    p_dbm: f64,
    trials: u64,
    seed: u64,
) -> Result<SystemPoint, SimError> {
    baseline(scenario, p_dbm, trials, seed).map(|p| p.noma.expect("baselines requested"))
}

/// Direct-link TDMA baseline at one power.
pub fn baseline_oma(
    scenario: &Scenario,
    p_dbm: f64,
    trials: u64,
    seed: u64,
) -> Result<SystemPoint, SimError> {
    baseline(scenario, p_dbm, trials, seed).map(|p| p.oma.expect("baselines requested"))
}

fn baseline(scenario: &Scenario, p_dbm: f64, trials: u64, seed: u64) -> Result<McPoint, SimError> {
    // the surface plays no part in the baselines; one element per user keeps
    // the proposed-system pass cheap
    let s = scenario
        .clone()
        .with_n_total(scenario.num_users().max(scenario.n_total));
    let part = Partition::new(&s, vec![1; s.num_users()]).map_err(ChannelError::from)?;
    let cfg = McConfig {
        baselines: true,
        ..McConfig::new(trials, seed)
    };
    single_point(&s, &part, p_dbm, &cfg)
}
