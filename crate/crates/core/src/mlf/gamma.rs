//! Gamma function over the arguments the Mittag-Leffler evaluators need.
//!
//! Lanczos approximation (g = 7, nine coefficients) with reflection for
//! arguments below one half. `rgamma` returns exactly zero at the poles, which
//! is what drops the vanishing terms of the asymptotic expansion.

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// True when `x` is a pole of Gamma (zero or a negative integer).
pub fn is_pole(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// `sin(pi x)`, exact zero at integers.
pub fn sin_pi(x: f64) -> f64 {
    if x == x.floor() {
        return 0.0;
    }
    // Reduce to [-1, 1], then fold onto [-1/2, 1/2].
    let mut r = x % 2.0;
    if r > 1.0 {
        r -= 2.0;
    } else if r < -1.0 {
        r += 2.0;
    }
    if r > 0.5 {
        r = 1.0 - r;
    } else if r < -0.5 {
        r = -1.0 - r;
    }
    (PI * r).sin()
}

fn lanczos_sum(x: f64) -> f64 {
    // x is the shifted argument (Gamma(x + 1)).
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// Gamma function. Returns NaN at poles and +inf on overflow.
pub fn gamma(x: f64) -> f64 {
    if is_pole(x) {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / (sin_pi(x) * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    if x == x.floor() {
        // (n-1)! exactly while it fits the mantissa.
        return (2..x as u32).fold(1.0, |acc, k| acc * k as f64);
    }
    let xm = x - 1.0;
    let t = xm + LANCZOS_G + 0.5;
    // Split the power so t^(xm + 1/2) does not overflow before exp(-t) scales it.
    let half = t.powf(0.5 * (xm + 0.5));
    (2.0 * PI).sqrt() * half * (half * (-t).exp()) * lanczos_sum(xm)
}

/// `ln |Gamma(x)|`; infinite at poles.
pub fn ln_gamma(x: f64) -> f64 {
    if is_pole(x) {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return PI.ln() - sin_pi(x).abs().ln() - ln_gamma(1.0 - x);
    }
    if x < 15.0 {
        return gamma(x).ln();
    }
    let xm = x - 1.0;
    let t = xm + LANCZOS_G + 0.5;
    HALF_LN_2PI + (xm + 0.5) * t.ln() - t + lanczos_sum(xm).ln()
}

/// `1 / Gamma(x)`: zero at the poles, underflows gracefully for large `x`.
pub fn rgamma(x: f64) -> f64 {
    if is_pole(x) {
        return 0.0;
    }
    if x > 150.0 {
        return (-ln_gamma(x)).exp();
    }
    if x < -150.0 {
        // 1/Gamma(x) = sin(pi x) Gamma(1 - x) / pi
        let mag = (ln_gamma(1.0 - x) - PI.ln()).exp();
        return sin_pi(x) * mag;
    }
    1.0 / gamma(x)
}
