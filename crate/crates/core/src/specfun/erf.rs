use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Natural log of `erfc(z)`, finite for arbitrarily large positive `z`.
///
/// Below `z = 25` the libm value is still a normal double. Above it the
/// scaled complement `erfcx(z) = exp(z^2) erfc(z)` is taken from its
/// asymptotic series, which has converged to machine precision by then.
pub fn ln_erfc(z: f64) -> f64 {
    if z < 25.0 {
        return libm::erfc(z).ln();
    }
    let z2 = z * z;
    let inv = 1.0 / (2.0 * z2);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..10 {
        term *= -((2 * k - 1) as f64) * inv;
        sum += term;
    }
    -z2 + (sum / (z * PI.sqrt())).ln()
}

/// `ln Q_{1/2}(a, b)`, using `Q_{1/2}(a, b) = P(|a + Z| > b)` for standard
/// normal `Z`.
pub fn ln_q_half(a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return 0.0;
    }
    let lo = ln_erfc((b - a) * FRAC_1_SQRT_2);
    let hi = ln_erfc((b + a) * FRAC_1_SQRT_2);
    // hi <= lo since b + a >= b - a
    (0.5f64).ln() + lo + (hi - lo).exp().ln_1p()
}

/// `Q_{1/2}(a, b)` in closed form.
pub(crate) fn q_half(a: f64, b: f64) -> f64 {
    if b <= 0.0 {
        return 1.0;
    }
    let v = 0.5 * (libm::erfc((b - a) * FRAC_1_SQRT_2) + libm::erfc((b + a) * FRAC_1_SQRT_2));
    v.clamp(0.0, 1.0)
}
