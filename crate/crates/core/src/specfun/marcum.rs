use super::erf::q_half;
use super::gamma::regularized_gamma;
use super::DomainError;

/// Generalized Marcum Q-function `Q_m(a, b)` for `m` in `{1/2, 1, 3/2, ...}`.
///
/// Order one half uses the closed form `P(|a + Z| > b)`. Other orders sum
/// the Poisson mixture
///
/// `Q_m(a, b) = sum_k e^{-a^2/2} (a^2/2)^k / k! * Q(m + k, b^2/2)`
///
/// outward from the Poisson mode, stepping the upper incomplete gamma by its
/// exact recurrence, until the Poisson weights fall below `1e-20`. All terms
/// are nonnegative, so the absolute error stays near machine precision for
/// any argument size.
pub fn marcum_q(m: f64, a: f64, b: f64) -> Result<f64, DomainError> {
    let twice = 2.0 * m;
    if !(m >= 0.5) || twice.fract() != 0.0 || !m.is_finite() {
        return Err(DomainError::new(
            "marcum_q",
            format!("order must be a positive multiple of 1/2, got {m}"),
        ));
    }
    if !(a >= 0.0) || !(b >= 0.0) || !a.is_finite() || b.is_nan() {
        return Err(DomainError::new(
            "marcum_q",
            format!("arguments must be nonnegative, got a={a}, b={b}"),
        ));
    }
    if b == 0.0 {
        return Ok(1.0);
    }
    if b.is_infinite() {
        return Ok(0.0);
    }
    if m == 0.5 {
        return Ok(q_half(a, b));
    }
    Ok(poisson_series(m, a, b))
}

pub(crate) fn poisson_series(m: f64, a: f64, b: f64) -> f64 {
    const WEIGHT_CUTOFF: f64 = 1e-20;
    let lambda = 0.5 * a * a;
    let y = 0.5 * b * b;
    if lambda == 0.0 {
        return regularized_gamma(m, y).1;
    }

    let mode = lambda.floor();
    let w_mode = (-lambda + mode * lambda.ln() - libm::lgamma(mode + 1.0)).exp();
    let s_mode = m + mode;
    let q_mode = regularized_gamma(s_mode, y).1;
    // t(s) = y^s e^{-y} / Gamma(s + 1); Q(s + 1, y) = Q(s, y) + t(s)
    let t_mode = (-y + s_mode * y.ln() - libm::lgamma(s_mode + 1.0)).exp();

    let mut total = w_mode * q_mode;

    // upward in k
    let (mut w, mut q, mut t, mut k) = (w_mode, q_mode, t_mode, mode);
    loop {
        let s = m + k;
        q += t;
        t *= y / (s + 1.0);
        k += 1.0;
        w *= lambda / k;
        total += w * q.min(1.0);
        if w < WEIGHT_CUTOFF || k - mode > 1e7 {
            break;
        }
    }

    // downward in k
    let (mut w, mut q, mut t, mut k) = (w_mode, q_mode, t_mode, mode);
    while k > 0.0 {
        let s = m + k;
        // t(s - 1) = t(s) * s / y
        t *= s / y;
        q -= t;
        w *= k / lambda;
        k -= 1.0;
        total += w * q.max(0.0);
        if w < WEIGHT_CUTOFF {
            break;
        }
    }

    total.clamp(0.0, 1.0)
}
