//! Independent oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls into the special functions under test.

#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = K15_WEIGHTS[7] * fc;
    let mut g = G7_WEIGHTS[3] * fc;
    for i in 0..7 {
        let x = h * GK_NODES[i];
        let s = f(c - x) + f(c + x);
        k += K15_WEIGHTS[i] * s;
        if i % 2 == 1 {
            g += G7_WEIGHTS[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature to an absolute tolerance.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(
        f: &impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        tol: f64,
        whole: (f64, f64),
        depth: u32,
    ) -> f64 {
        let (v, err) = whole;
        if err <= tol || depth == 0 {
            return v;
        }
        let m = 0.5 * (a + b);
        let left = gk15(f, a, m);
        let right = gk15(f, m, b);
        rec(f, a, m, 0.5 * tol, left, depth - 1) + rec(f, m, b, 0.5 * tol, right, depth - 1)
    }
    rec(&f, a, b, tol, gk15(&f, a, b), 40)
}

/// `ln` of the noncentral chi density kernel
/// `x (x/a)^nu I_nu(a x) exp(-(x^2 + a^2)/2)` with `nu = m - 1`.
fn ln_marcum_kernel(nu: f64, a: f64, x: f64) -> f64 {
    let z = a * x;
    if z < 50.0 {
        // power series of (x/a)^nu I_nu(a x) in powers of x^2 a^2
        let mut term = (2.0 * nu * x.ln() - nu * std::f64::consts::LN_2 - ln_gamma(nu + 1.0)).exp();
        let mut sum = term;
        let q = 0.25 * z * z;
        let mut j = 0.0;
        loop {
            term *= q / ((j + 1.0) * (j + 1.0 + nu));
            sum += term;
            j += 1.0;
            if term <= 1e-17 * sum {
                break;
            }
        }
        x.ln() + sum.ln() - 0.5 * (x * x + a * a)
    } else {
        // Hankel expansion of the exponentially scaled I_nu
        let mu = 4.0 * nu * nu;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..30 {
            let kf = k as f64;
            term *= -(mu - (2.0 * kf - 1.0).powi(2)) / (kf * 8.0 * z);
            sum += term;
            if term.abs() < 1e-17 {
                break;
            }
        }
        let ln_ie = sum.ln() - 0.5 * (2.0 * std::f64::consts::PI * z).ln();
        x.ln() + nu * (x / a).ln() + ln_ie - 0.5 * (x - a) * (x - a)
    }
}

/// `Q_m(a, b)` as the tail integral of the noncentral chi density.
pub fn marcum_q_quadrature(m: f64, a: f64, b: f64) -> f64 {
    let nu = m - 1.0;
    let hi = a.max(b) + 40.0;
    let f = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            ln_marcum_kernel(nu, a, x).exp()
        }
    };
    // split at the mode region so the adaptive rule sees the peak
    let mut cuts = vec![b];
    for c in [a - 8.0, a, a + 8.0] {
        if c > b && c < hi {
            cuts.push(c);
        }
    }
    cuts.push(hi);
    cuts.windows(2)
        .map(|w| integrate(f, w[0], w[1], 1e-14))
        .sum()
}

/// Modified Bessel function `I_nu(z)` by its power series.
pub fn bessel_i(nu: f64, z: f64) -> f64 {
    let mut term = (nu * (0.5 * z).ln() - ln_gamma(nu + 1.0)).exp();
    let mut sum = term;
    let q = 0.25 * z * z;
    let mut j = 0.0;
    while term > 1e-17 * sum {
        term *= q / ((j + 1.0) * (j + 1.0 + nu));
        sum += term;
        j += 1.0;
    }
    sum
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mean and standard error of a sample.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Standard error of an empirical frequency `p` over `n` trials.
pub fn binomial_se(p: f64, n: f64) -> f64 {
    (p * (1.0 - p) / n).sqrt()
}

/// Upper tail of the chi-square distribution with `k` degrees of freedom,
/// by quadrature of its density.
pub fn chi_square_sf(stat: f64, k: usize) -> f64 {
    let h = 0.5 * k as f64;
    let ln_norm = -h * std::f64::consts::LN_2 - ln_gamma(h);
    let f = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            (ln_norm + (h - 1.0) * x.ln() - 0.5 * x).exp()
        }
    };
    let hi = stat.max(k as f64) + 60.0 * (k as f64).sqrt() + 200.0;
    integrate(f, stat, hi, 1e-12)
}
