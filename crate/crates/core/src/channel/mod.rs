//! Channel realizations for the partitioned surface.
//!
//! Each subsurface co-phases its elements for its own user, so at user `k`
//! the elements of subsurface `k` add coherently while the elements serving
//! the other users on the same side arrive with residual phases. Every
//! element's BS-side amplitude is shared by all users on its side; user-side
//! amplitudes are independent per user. Transmission and reflection
//! coefficients have unit amplitude.
//!
//! Random numbers are addressed as `(seed, trial)` plus one lane per
//! subsurface, so growing one subsurface only appends draws to its own lane
//! and leaves every other value of the trial untouched.

mod correlated;
mod dump;

pub use correlated::{correlation_matrix, draw_correlated, symmetric_sqrt, CorrelatedSampler};
pub use dump::{write_elements_csv, ElementRecord, ELEMENT_CSV_HEADER};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution;
use thiserror::Error;

use crate::model::{ModelError, Partition, Scenario, Side};
use crate::specfun::{rayleigh_amplitude, uniform_phase, RandomStream, VonMises};

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid correlation grid: {0}")]
    Grid(String),
    #[error("correlation matrix factorization failed: {0}")]
    Factorization(String),
}

/// Per-user cascaded powers of one realization, path gain included.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct UserChannel {
    /// `|r^k_{chi,k}|^2`.
    pub desired_pow: f64,
    /// `|sum_{i != k} r^i_{chi,k}|^2`.
    pub interference_pow: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ChannelDraw {
    pub users: Vec<UserChannel>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Accum {
    des_re: f64,
    des_im: f64,
    int_re: f64,
    int_im: f64,
}

/// One element's contribution to one user.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Contribution {
    pub zeta: f64,
    pub eta: f64,
    /// Phase error on the aligned path, residual phase otherwise.
    pub phase: f64,
    pub re: f64,
    pub im: f64,
}

/// Draws one element of the subsurface at position `owner` among `n_users`
/// users on a side and reports its contribution to each of them. The order
/// of draws is fixed: the BS-side amplitude, then for each user its
/// amplitude followed by either the phase error (owner) or the residual
/// phase (others).
#[inline]
pub(crate) fn draw_element<R: Rng>(
    rng: &mut R,
    n_users: usize,
    owner: usize,
    phase_error: Option<&VonMises>,
    mut visit: impl FnMut(usize, Contribution),
) {
    let zeta = rayleigh_amplitude(rng);
    for pos in 0..n_users {
        let eta = rayleigh_amplitude(rng);
        let amp = zeta * eta;
        let (phase, re, im) = if pos == owner {
            match phase_error {
                Some(vm) => {
                    let d = vm.sample(rng);
                    let (s, c) = d.sin_cos();
                    (d, amp * c, amp * s)
                }
                None => (0.0, amp, 0.0),
            }
        } else {
            let phi = uniform_phase(rng);
            let (s, c) = phi.sin_cos();
            (phi, amp * c, amp * s)
        };
        visit(
            pos,
            Contribution {
                zeta,
                eta,
                phase,
                re,
                im,
            },
        );
    }
}

#[derive(Debug, Clone)]
struct SideLayout {
    /// Global user indices on this side, in SIC order.
    users: Vec<usize>,
}

/// Independent-Rayleigh channel generator for a fixed scenario and partition.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    sides: [SideLayout; 2],
    counts: Vec<usize>,
    gains: Vec<f64>,
    phase_error: Option<VonMises>,
    /// `(side, position within side)` of every user.
    slots: Vec<(usize, usize)>,
}

impl ChannelSampler {
    pub fn new(scenario: &Scenario, partition: &Partition) -> Self {
        let sides = Side::BOTH.map(|side| SideLayout {
            users: scenario.side_users(side),
        });
        let mut slots = vec![(0, 0); scenario.num_users()];
        for (s, layout) in sides.iter().enumerate() {
            for (pos, &k) in layout.users.iter().enumerate() {
                slots[k] = (s, pos);
            }
        }
        let phase_error = scenario
            .phase_error_kappa
            .map(|kappa| VonMises::new(kappa).expect("kappa validated with the scenario"));
        Self {
            sides,
            counts: partition.counts().to_vec(),
            gains: (0..scenario.num_users())
                .map(|k| scenario.path_gain(k))
                .collect(),
            phase_error,
            slots,
        }
    }

    pub fn num_users(&self) -> usize {
        self.counts.len()
    }

    pub fn draw(&self, stream: &RandomStream) -> ChannelDraw {
        let mut out = ChannelDraw::default();
        self.draw_into(stream, &mut out);
        out
    }

    pub fn draw_into(&self, stream: &RandomStream, out: &mut ChannelDraw) {
        out.users.clear();
        out.users.resize(self.counts.len(), UserChannel::default());
        let mut acc = Vec::new();
        for layout in &self.sides {
            let n = layout.users.len();
            acc.clear();
            acc.resize(n, Accum::default());
            for (opos, &owner) in layout.users.iter().enumerate() {
                let mut rng = stream.lane(owner as u64);
                for _ in 0..self.counts[owner] {
                    draw_element(&mut rng, n, opos, self.phase_error.as_ref(), |pos, c| {
                        let a = &mut acc[pos];
                        if pos == opos {
                            a.des_re += c.re;
                            a.des_im += c.im;
                        } else {
                            a.int_re += c.re;
                            a.int_im += c.im;
                        }
                    });
                }
            }
            for (pos, &k) in layout.users.iter().enumerate() {
                let a = acc[pos];
                out.users[k] = UserChannel {
                    desired_pow: self.gains[k] * (a.des_re * a.des_re + a.des_im * a.des_im),
                    interference_pow: self.gains[k] * (a.int_re * a.int_re + a.int_im * a.int_im),
                };
            }
        }
    }

    /// Per-element records of one realization, in generation order.
    pub fn draw_elements(&self, stream: &RandomStream) -> Vec<ElementRecord> {
        let mut records = Vec::new();
        for (s, layout) in self.sides.iter().enumerate() {
            let n = layout.users.len();
            for (opos, &owner) in layout.users.iter().enumerate() {
                let mut rng = stream.lane(owner as u64);
                for element in 0..self.counts[owner] {
                    draw_element(&mut rng, n, opos, self.phase_error.as_ref(), |pos, c| {
                        records.push(ElementRecord {
                            side: Side::BOTH[s],
                            owner,
                            element,
                            user: layout.users[pos],
                            zeta: c.zeta,
                            eta: c.eta,
                            phase: c.phase,
                            re: c.re,
                            im: c.im,
                        });
                    });
                }
            }
        }
        records
    }

    /// Starts an incremental realization of user `k` alone: the interference
    /// from the other subsurfaces is drawn in full and the desired sum holds
    /// `desired` elements. Values match [`ChannelSampler::draw`] bit for bit
    /// when `desired` equals the partition count of `k`.
    pub(crate) fn user_trial(&self, stream: &RandomStream, k: usize, desired: usize) -> UserTrial {
        let (s, kpos) = self.slots[k];
        let layout = &self.sides[s];
        let n = layout.users.len();
        let (mut int_re, mut int_im) = (0.0, 0.0);
        for (opos, &owner) in layout.users.iter().enumerate() {
            if owner == k {
                continue;
            }
            let mut rng = stream.lane(owner as u64);
            for _ in 0..self.counts[owner] {
                draw_element(&mut rng, n, opos, self.phase_error.as_ref(), |pos, c| {
                    if pos == kpos {
                        int_re += c.re;
                        int_im += c.im;
                    }
                });
            }
        }
        let mut trial = UserTrial {
            rng: stream.lane(k as u64),
            des_re: 0.0,
            des_im: 0.0,
            interference_pow: self.gains[k] * (int_re * int_re + int_im * int_im),
        };
        for _ in 0..desired {
            self.extend_user_trial(&mut trial, k);
        }
        trial
    }

    /// Adds one element to user `k`'s own subsurface.
    pub(crate) fn extend_user_trial(&self, trial: &mut UserTrial, k: usize) {
        let (s, kpos) = self.slots[k];
        let n = self.sides[s].users.len();
        let (mut re, mut im) = (trial.des_re, trial.des_im);
        draw_element(
            &mut trial.rng,
            n,
            kpos,
            self.phase_error.as_ref(),
            |pos, c| {
                if pos == kpos {
                    re += c.re;
                    im += c.im;
                }
            },
        );
        trial.des_re = re;
        trial.des_im = im;
    }

    pub(crate) fn user_channel(&self, trial: &UserTrial, k: usize) -> UserChannel {
        UserChannel {
            desired_pow: self.gains[k]
                * (trial.des_re * trial.des_re + trial.des_im * trial.des_im),
            interference_pow: trial.interference_pow,
        }
    }
}

/// State of one trial in an incremental single-user realization.
#[derive(Debug, Clone)]
pub(crate) struct UserTrial {
    rng: ChaCha8Rng,
    des_re: f64,
    des_im: f64,
    interference_pow: f64,
}

/// One independent-Rayleigh realization of every user's desired and
/// interference power.
pub fn draw(stream: &RandomStream, scenario: &Scenario, partition: &Partition) -> ChannelDraw {
    ChannelSampler::new(scenario, partition).draw(stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::preset;

    #[test]
    fn two_user_has_no_interference() {
        let s = preset(1).unwrap();
        let p = Partition::new(&s, vec![26, 38]).unwrap();
        let sampler = ChannelSampler::new(&s, &p);
        for t in 0..100 {
            let d = sampler.draw(&RandomStream::new(1, t));
            assert!(d.users.iter().all(|u| u.interference_pow == 0.0));
            assert!(d.users.iter().all(|u| u.desired_pow > 0.0));
        }
    }

    #[test]
    fn single_element_is_product_of_amplitudes() {
        let s = preset(1).unwrap();
        let p = Partition::new(&s, vec![1, 1]).unwrap();
        let stream = RandomStream::new(9, 4);
        let d = draw(&stream, &s, &p);
        let elems = ChannelSampler::new(&s, &p).draw_elements(&stream);
        let e = elems.iter().find(|e| e.user == 0).unwrap();
        let expected = s.path_gain(0) * (e.zeta * e.eta).powi(2);
        assert!((d.users[0].desired_pow - expected).abs() <= 1e-15 * expected);
    }

    #[test]
    fn incremental_user_trial_matches_full_draw() {
        let mut s = preset(2).unwrap();
        s.phase_error_kappa = Some(3.0);
        let p = Partition::new(&s, vec![16, 20, 24]).unwrap();
        let sampler = ChannelSampler::new(&s, &p);
        for t in 0..20 {
            let stream = RandomStream::new(11, t);
            let full = sampler.draw(&stream);
            for k in 0..3 {
                let mut trial = sampler.user_trial(&stream, k, p.count(k) - 3);
                for _ in 0..3 {
                    sampler.extend_user_trial(&mut trial, k);
                }
                assert_eq!(sampler.user_channel(&trial, k), full.users[k]);
            }
        }
    }

    #[test]
    fn growing_a_subsurface_leaves_others_unchanged() {
        let s = preset(3).unwrap().with_n_total(90);
        let small = Partition::new(&s, vec![19, 30, 40]).unwrap();
        let large = Partition::new(&s, vec![19, 30, 41]).unwrap();
        let stream = RandomStream::new(2, 5);
        let a = draw(&stream, &s, &small);
        let b = draw(&stream, &s, &large);
        assert_eq!(a.users[0], b.users[0]);
        // user 3 gained one aligned element: more desired power, same interference
        assert_eq!(a.users[2].interference_pow, b.users[2].interference_pow);
        assert!(b.users[2].desired_pow > a.users[2].desired_pow);
    }
}
