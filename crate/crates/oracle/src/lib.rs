//! Arbitrary-precision reference implementations.
//!
//! Nothing in here shares code with the `fracsource` crate: the Mittag-Leffler
//! values are produced by summing the defining power series in MPFR arithmetic
//! with enough working precision to absorb the cancellation on the negative
//! axis, and the scalar integrals use a plain adaptive Gauss-Kronrod rule.

use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};

/// Guard bits kept below the unit digit after the largest series term.
const GUARD_BITS: u32 = 160;

/// Series terms are summed until they drop below this and are decreasing.
const TAIL: f64 = 1e-30;

/// Beyond this value of `x^{1/alpha}` the series becomes too expensive and the
/// oracle switches to the optimally truncated asymptotic expansion, whose
/// remainder is then far below `TAIL`.
const SERIES_LIMIT: f64 = 1.2e4;

fn decimal(v: f64) -> Rational {
    // Parameters in the test sweeps are short decimals; recover the exact
    // intended rational rather than the binary approximation.
    let scaled = (v * 1.0e6).round() as i64;
    Rational::from((scaled, 1_000_000))
}

/// Exact-parameter Mittag-Leffler oracle for one `(alpha, beta)` pair on the
/// negative real axis.
pub struct MlOracle {
    alpha: Rational,
    beta: Rational,
    alpha_f: f64,
    /// Smallest `s` with `alpha * s` integral, and that integer.
    class_len: u64,
    class_shift: u64,
    max_prec: u32,
    /// `Gamma(beta + alpha r)` for `r < class_len`, at `max_prec` bits.
    /// `None` marks a pole.
    base_gamma: Vec<Option<Float>>,
}

impl MlOracle {
    /// `x_max` bounds the `|z|` values this oracle will be asked for.
    pub fn new(alpha: f64, beta: f64, x_max: f64) -> Self {
        assert!(alpha > 0.0 && alpha <= 2.0);
        let alpha_q = decimal(alpha);
        let beta_q = decimal(beta);
        let denom = alpha_q.denom().to_u64().expect("small denominator");
        let numer = alpha_q.numer().to_u64().expect("small numerator");
        let series_x = x_max.min(SERIES_LIMIT.powf(alpha));
        let max_prec = precision_for(alpha, series_x);
        let base_gamma = (0..denom)
            .map(|r| {
                let arg = Float::with_val(max_prec, &alpha_q * Rational::from(r)) + &beta_q;
                if arg <= 0 && arg.is_integer() {
                    None
                } else {
                    Some(gamma_hp(arg))
                }
            })
            .collect();
        Self {
            alpha: alpha_q,
            beta: beta_q,
            alpha_f: alpha,
            class_len: denom,
            class_shift: numer,
            max_prec,
            base_gamma,
        }
    }

    /// `E_{alpha,beta}(z)` for `z <= 0`, correctly rounded to f64 up to the
    /// oracle tolerance.
    pub fn eval(&self, z: f64) -> f64 {
        assert!(z <= 0.0);
        let x = -z;
        if x > 0.0 && x.powf(1.0 / self.alpha_f) > SERIES_LIMIT && self.alpha_f < 1.0 {
            return self.asymptotic(x);
        }
        self.series(z)
    }

    fn series(&self, z: f64) -> f64 {
        let x = -z;
        let prec = precision_for(self.alpha_f, x).min(self.max_prec);
        let zf = Float::with_val(prec, z);
        let z_step = Float::with_val(prec, zf.clone().pow(self.class_len as u32));
        let tail = Float::with_val(prec, TAIL);
        let peak = if x > 0.0 { x.powf(1.0 / self.alpha_f) / self.alpha_f } else { 0.0 };
        let mut sum = Float::with_val(prec, 0);
        for r in 0..self.class_len {
            let mut arg = Float::with_val(prec, &self.alpha * Rational::from(r)) + &self.beta;
            let mut k = r;
            let mut term = match &self.base_gamma[r as usize] {
                Some(g) => Float::with_val(prec, zf.clone().pow(r as u32)) / Float::with_val(prec, g),
                None => {
                    // Pole of Gamma: this term vanishes; restart the class one step later.
                    let next = Float::with_val(prec, &arg + self.class_shift);
                    k += self.class_len;
                    let t = Float::with_val(prec, zf.clone().pow(k as u32)) / gamma_hp(next.clone());
                    arg = next;
                    t
                }
            };
            let mut prev_abs = Float::with_val(prec, term.abs_ref());
            loop {
                sum += &term;
                let mut denom = Float::with_val(prec, 1);
                for i in 0..self.class_shift {
                    denom *= Float::with_val(prec, &arg + i);
                }
                term *= &z_step;
                term /= &denom;
                arg += self.class_shift;
                k += self.class_len;
                let abs = Float::with_val(prec, term.abs_ref());
                if (k as f64) > peak && abs < tail && abs <= prev_abs {
                    break;
                }
                prev_abs = abs;
            }
        }
        sum.to_f64()
    }

    fn asymptotic(&self, x: f64) -> f64 {
        let prec = 256;
        let xf = Float::with_val(prec, x);
        let inv = Float::with_val(prec, xf.recip_ref());
        let mut sum = Float::with_val(prec, 0);
        let mut pow = Float::with_val(prec, 1);
        let mut last = Float::with_val(prec, f64::INFINITY);
        for k in 1..100_000u64 {
            pow *= &inv;
            let arg = Float::with_val(prec, &self.beta - &self.alpha * Rational::from(k));
            let term = if arg <= 0 && arg.is_integer() {
                Float::with_val(prec, 0)
            } else {
                Float::with_val(prec, &pow / arg.gamma())
            };
            let abs = Float::with_val(prec, term.abs_ref());
            if !term.is_zero() {
                if abs > last {
                    break;
                }
                last = abs.clone();
            }
            if k % 2 == 1 {
                sum += &term;
            } else {
                sum -= &term;
            }
            if !term.is_zero() && abs < 1e-40 {
                break;
            }
        }
        assert!(last < 1e-30, "asymptotic expansion not converged at x = {x}");
        sum.to_f64()
    }
}

/// MPFR's `gamma` is slow at tens of thousands of bits; `ln_gamma` is not.
fn gamma_hp(arg: Float) -> Float {
    if arg > 0 {
        let prec = arg.prec();
        Float::with_val(prec, arg.ln_gamma().exp_ref())
    } else {
        arg.gamma()
    }
}

fn precision_for(alpha: f64, x: f64) -> u32 {
    let bits = if x > 0.0 {
        x.powf(1.0 / alpha) / std::f64::consts::LN_2
    } else {
        0.0
    };
    bits.ceil() as u32 + GUARD_BITS
}

/// `1 / Gamma(v)` in double precision via MPFR, for building reference values
/// in tests without touching the crate's own gamma routine.
pub fn gamma(v: f64) -> f64 {
    Float::with_val(128, v).gamma().to_f64()
}

/// `pi` to f64, from MPFR.
pub fn pi() -> f64 {
    Float::with_val(64, Constant::Pi).to_f64()
}

/// Adaptive 15-point Gauss-Kronrod quadrature on `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (k, g) = gauss_kronrod(f, a, b);
        if (k - g).abs() <= tol.max(1e-15 * k.abs()) || depth > 48 {
            return k;
        }
        let m = 0.5 * (a + b);
        step(f, a, m, 0.5 * tol, depth + 1) + step(f, m, b, 0.5 * tol, depth + 1)
    }
    step(&f, a, b, tol, 0)
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    const XGK: [f64; 8] = [
        0.991_455_371_120_812_6,
        0.949_107_912_342_758_5,
        0.864_864_423_359_769_1,
        0.741_531_185_599_394_4,
        0.586_087_235_467_691_1,
        0.405_845_151_377_397_2,
        0.207_784_955_007_898_5,
        0.0,
    ];
    const WGK: [f64; 8] = [
        0.022_935_322_010_529_22,
        0.063_092_092_629_978_55,
        0.104_790_010_322_250_2,
        0.140_653_259_715_525_9,
        0.169_004_726_639_267_9,
        0.190_350_578_064_785_4,
        0.204_432_940_075_298_9,
        0.209_482_141_084_728_8,
    ];
    const WG: [f64; 4] = [
        0.129_484_966_168_869_7,
        0.279_705_391_489_276_7,
        0.381_830_050_505_118_9,
        0.417_959_183_673_469_4,
    ];
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kron * h, gauss * h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_case() {
        let o = MlOracle::new(1.0, 1.0, 10.0);
        assert!((o.eval(-1.0) - (-1.0f64).exp()).abs() < 1e-16);
        assert!((o.eval(-10.0) - (-10.0f64).exp()).abs() < 1e-19);
    }

    #[test]
    fn cosine_case() {
        let o = MlOracle::new(2.0, 1.0, 10.0);
        let x: f64 = 1.3;
        assert!((o.eval(-x * x) - x.cos()).abs() < 1e-15);
    }

    #[test]
    fn half_order_matches_scaled_erfc() {
        // E_{1/2,1}(-x) = exp(x^2) erfc(x); erfcx(10) from tables.
        let o = MlOracle::new(0.5, 1.0, 10.0);
        assert!((o.eval(-10.0) - 0.056_140_992_743_822_59).abs() < 1e-16);
    }

    #[test]
    fn series_and_asymptotic_agree_where_both_apply() {
        let o = MlOracle::new(0.3, 0.7, 40.0);
        let x = 12.0;
        let s = o.series(-x);
        let a = o.asymptotic(x);
        assert!((s - a).abs() < 1e-18, "{s} vs {a}");
    }

    #[test]
    fn gauss_kronrod_smooth() {
        let v = integrate(|s| (-s).exp() * s.cos(), 0.0, 3.0, 1e-14);
        let exact = 0.5 * (1.0 + (-3.0f64).exp() * (3.0f64.sin() - 3.0f64.cos()));
        assert!((v - exact).abs() < 1e-13);
    }
}
