use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use super::DomainError;

/// Unit-power Rayleigh amplitude: `E[x^2] = 1`, `E[x] = sqrt(pi)/2`.
#[inline]
pub fn rayleigh_amplitude<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e.sqrt()
}

/// Uniform phase on `[0, 2pi)`.
#[inline]
pub fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * TAU
}

/// One Rayleigh-faded coefficient as `(amplitude, phase)`.
pub fn sample_rayleigh_pair<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let amp = rayleigh_amplitude(rng);
    (amp, uniform_phase(rng))
}

/// Von Mises distribution with mean direction 0, sampled by the Best-Fisher
/// wrapped-Cauchy rejection method. Samples lie in `[-pi, pi)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VonMises {
    kappa: f64,
    r: f64,
}

impl VonMises {
    pub fn new(kappa: f64) -> Result<Self, DomainError> {
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(DomainError::new(
                "sample_von_mises",
                format!("kappa must be finite and nonnegative, got {kappa}"),
            ));
        }
        let r = if kappa > 0.0 {
            let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
            let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
            (1.0 + rho * rho) / (2.0 * rho)
        } else {
            0.0
        };
        Ok(Self { kappa, r })
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

impl Distribution<f64> for VonMises {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.kappa == 0.0 {
            return rng.random::<f64>() * TAU - PI;
        }
        let r = self.r;
        let f = loop {
            let u1: f64 = rng.random();
            let u2: f64 = rng.random();
            let z = (PI * u1).cos();
            let f = (1.0 + r * z) / (r + z);
            let c = self.kappa * (r - f);
            if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
                break f.clamp(-1.0, 1.0);
            }
        };
        let theta = f.acos();
        let angle = if rng.random::<f64>() < 0.5 {
            -theta
        } else {
            theta
        };
        if angle >= PI {
            -PI
        } else {
            angle
        }
    }
}

/// Draws a single von Mises phase error.
pub fn sample_von_mises<R: Rng + ?Sized>(rng: &mut R, kappa: f64) -> Result<f64, DomainError> {
    Ok(VonMises::new(kappa)?.sample(rng))
}

#[cfg(test)]
mod tests {
    use super::super::RandomStream;
    use super::*;

    #[test]
    fn negative_kappa_rejected() {
        let mut rng = RandomStream::new(0, 0).rng();
        assert!(sample_von_mises(&mut rng, -0.1).is_err());
        assert!(sample_von_mises(&mut rng, f64::NAN).is_err());
    }

    #[test]
    fn range_is_half_open() {
        let mut rng = RandomStream::new(5, 0).rng();
        for kappa in [0.0, 0.5, 2.0, 50.0] {
            let d = VonMises::new(kappa).unwrap();
            for _ in 0..10_000 {
                let x = d.sample(&mut rng);
                assert!((-PI..PI).contains(&x));
            }
        }
    }

    #[test]
    fn large_kappa_concentrates() {
        let mut rng = RandomStream::new(1, 0).rng();
        let d = VonMises::new(1e4).unwrap();
        let max = (0..10_000)
            .map(|_| d.sample(&mut rng).abs())
            .fold(0.0, f64::max);
        assert!(max < 0.06, "{max}");
    }
}
