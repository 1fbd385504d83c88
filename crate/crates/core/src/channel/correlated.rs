//! Spatially correlated channels on a planar element grid.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{ChannelDraw, ChannelError, UserChannel};
use crate::model::{CorrelationSpec, Partition, Scenario, Side};
use crate::specfun::{RandomStream, VonMises};

const EIGEN_FLOOR: f64 = 1e-12;
const H_LANE: u64 = 1 << 20;
const G_LANE: u64 = 2 << 20;
const PHASE_LANE: u64 = 3 << 20;

/// `sinc(2 |u_m - u_n| / lambda)` over the first `count` positions of the
/// row-major grid, with `sinc(x) = sin(pi x) / (pi x)`.
pub fn correlation_matrix(
    spec: &CorrelationSpec,
    count: usize,
) -> Result<DMatrix<f64>, ChannelError> {
    spec.validate()?;
    let [rows, cols] = spec.grid_for(count);
    if rows * cols < count {
        return Err(ChannelError::Grid(format!(
            "{rows}x{cols} grid cannot hold {count} elements"
        )));
    }
    let pos = |n: usize| {
        let (r, c) = (n / cols, n % cols);
        (
            c as f64 * spec.element_spacing,
            r as f64 * spec.element_spacing,
        )
    };
    Ok(DMatrix::from_fn(count, count, |m, n| {
        let (xm, ym) = pos(m);
        let (xn, yn) = pos(n);
        let d = (xm - xn).hypot(ym - yn);
        sinc(2.0 * d / spec.wavelength)
    }))
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        let px = std::f64::consts::PI * x;
        px.sin() / px
    }
}

/// Symmetric square root `V diag(sqrt(max(l, 0))) V^T`. Eigenvalues below
/// `1e-12` are floored at zero.
pub fn symmetric_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>, ChannelError> {
    if !m.is_square() {
        return Err(ChannelError::Factorization("matrix is not square".into()));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ChannelError::Factorization(
            "matrix has non-finite entries".into(),
        ));
    }
    let eig = SymmetricEigen::new(m.clone());
    let roots = eig
        .eigenvalues
        .map(|l| if l < EIGEN_FLOOR { 0.0 } else { l.sqrt() });
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&roots) * v.transpose())
}

#[derive(Debug, Clone)]
struct SideModel {
    users: Vec<usize>,
    /// Element range `[start, end)` of each user's subsurface.
    blocks: Vec<(usize, usize)>,
    sqrt: DMatrix<f64>,
}

/// Correlated channel generator. The BS-side vector is shared by the users
/// of a side; each user has its own correlated user-side vector.
#[derive(Debug, Clone)]
pub struct CorrelatedSampler {
    sides: Vec<SideModel>,
    gains: Vec<f64>,
    phase_error: Option<VonMises>,
}

impl CorrelatedSampler {
    pub fn new(scenario: &Scenario, partition: &Partition) -> Result<Self, ChannelError> {
        let spec = scenario
            .correlation
            .as_ref()
            .ok_or_else(|| ChannelError::Grid("scenario has no correlation section".into()))?;
        let mut sides = Vec::new();
        for side in Side::BOTH {
            let users = scenario.side_users(side);
            let mut blocks = Vec::with_capacity(users.len());
            let mut start = 0;
            for &k in &users {
                let end = start + partition.count(k);
                blocks.push((start, end));
                start = end;
            }
            let sqrt = if start == 0 {
                DMatrix::zeros(0, 0)
            } else {
                symmetric_sqrt(&correlation_matrix(spec, start)?)?
            };
            sides.push(SideModel {
                users,
                blocks,
                sqrt,
            });
        }
        let phase_error = scenario
            .phase_error_kappa
            .map(|kappa| VonMises::new(kappa).expect("kappa validated with the scenario"));
        Ok(Self {
            sides,
            gains: (0..scenario.num_users())
                .map(|k| scenario.path_gain(k))
                .collect(),
            phase_error,
        })
    }

    pub fn draw(&self, stream: &RandomStream) -> ChannelDraw {
        let mut users = vec![UserChannel::default(); self.gains.len()];
        for (s, side) in self.sides.iter().enumerate() {
            let n = side.sqrt.nrows();
            if n == 0 {
                continue;
            }
            let (h_re, h_im) = correlated_vector(&side.sqrt, &mut stream.lane(H_LANE + s as u64));
            let h_abs: Vec<f64> = (0..n).map(|i| h_re[i].hypot(h_im[i])).collect();
            let g: Vec<_> = side
                .users
                .iter()
                .map(|&k| correlated_vector(&side.sqrt, &mut stream.lane(G_LANE + k as u64)))
                .collect();
            for (pos, &k) in side.users.iter().enumerate() {
                let (g_re, g_im) = &g[pos];
                let (mut des_re, mut des_im, mut int_re, mut int_im) = (0.0, 0.0, 0.0, 0.0);
                let mut phase_rng = stream.lane(PHASE_LANE + k as u64);
                for (opos, &(start, end)) in side.blocks.iter().enumerate() {
                    if opos == pos {
                        for i in start..end {
                            let amp = h_abs[i] * g_re[i].hypot(g_im[i]);
                            match &self.phase_error {
                                Some(vm) => {
                                    let (sd, cd) = vm.sample(&mut phase_rng).sin_cos();
                                    des_re += amp * cd;
                                    des_im += amp * sd;
                                }
                                None => des_re += amp,
                            }
                        }
                    } else {
                        // element phased to cancel the owner's user-side phase
                        let (o_re, o_im) = &g[opos];
                        for i in start..end {
                            let o_abs = o_re[i].hypot(o_im[i]);
                            if o_abs == 0.0 {
                                continue;
                            }
                            let re = g_re[i] * o_re[i] + g_im[i] * o_im[i];
                            let im = g_im[i] * o_re[i] - g_re[i] * o_im[i];
                            let scale = h_abs[i] / o_abs;
                            int_re += scale * re;
                            int_im += scale * im;
                        }
                    }
                }
                users[k] = UserChannel {
                    desired_pow: self.gains[k] * (des_re * des_re + des_im * des_im),
                    interference_pow: self.gains[k] * (int_re * int_re + int_im * int_im),
                };
            }
        }
        ChannelDraw { users }
    }
}

/// `R^{1/2} w` with `w ~ CN(0, I)`, returned as real and imaginary parts.
fn correlated_vector<R: Rng>(sqrt: &DMatrix<f64>, rng: &mut R) -> (DVector<f64>, DVector<f64>) {
    let n = sqrt.nrows();
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let mut w_re = DVector::zeros(n);
    let mut w_im = DVector::zeros(n);
    for i in 0..n {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        w_re[i] = scale * re;
        w_im[i] = scale * im;
    }
    (sqrt * w_re, sqrt * w_im)
}

/// One correlated realization; fails when the scenario has no correlation
/// section or the grid is too small.
pub fn draw_correlated(
    stream: &RandomStream,
    scenario: &Scenario,
    partition: &Partition,
) -> Result<ChannelDraw, ChannelError> {
    Ok(CorrelatedSampler::new(scenario, partition)?.draw(stream))
}
