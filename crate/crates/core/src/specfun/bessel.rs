//! Spherical Bessel functions of real argument.
//!
//! `modified_bessel_j` and `modified_bessel_y` are the power-rescaled forms
//!
//! ```text
//! jt_n(x) = (2n+1)!! / x^n        * j_n(x) = 1 - (x^2/2)/(1!(2n+3)) + ...
//! yt_n(x) = x^(n+1) / (-(2n-1)!!) * y_n(x) = 1 - (x^2/2)/(1!(1-2n)) + ...
//! ```
//!
//! which stay O(1) where the raw functions under- or overflow. All double
//! factorials are handled in log space.

use std::sync::OnceLock;

use num_complex::Complex64;
use statrs::function::gamma::ln_gamma;

const LN_DFACT_TABLE: usize = 4096;
const RESCALE: f64 = 1e250;

fn ln_dfact_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut t = vec![0.0; LN_DFACT_TABLE];
        for m in 2..LN_DFACT_TABLE {
            t[m] = t[m - 2] + (m as f64).ln();
        }
        t
    })
}

/// `ln(m!!)`, with `0!! = 1!! = 1`.
pub fn ln_double_factorial(m: usize) -> f64 {
    if m < LN_DFACT_TABLE {
        return ln_dfact_table()[m];
    }
    let j = (m / 2) as f64;
    if m % 2 == 1 {
        ln_gamma(2.0 * j + 2.0) - j * std::f64::consts::LN_2 - ln_gamma(j + 1.0)
    } else {
        j * std::f64::consts::LN_2 + ln_gamma(j + 1.0)
    }
}

#[inline]
fn ln_dfact_odd(n: usize) -> f64 {
    // ln((2n+1)!!)
    ln_double_factorial(2 * n + 1)
}

#[inline]
fn ln_dfact_odd_below(n: usize) -> f64 {
    // ln((2n-1)!!), (-1)!! = 1
    ln_double_factorial((2 * n).saturating_sub(1))
}

#[inline]
fn in_series_regime(n: usize, x: f64) -> bool {
    0.5 * x * x < n as f64 + 1.0
}

fn modified_j_series(n: usize, x: f64) -> f64 {
    let h = 0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for s in 1..1000usize {
        term *= -h / (s as f64 * (2 * n + 2 * s + 1) as f64);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn modified_y_series(n: usize, x: f64) -> f64 {
    let h = 0.5 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    let n = n as f64;
    for s in 1..1000usize {
        let s = s as f64;
        term *= -h / (s * (2.0 * s - 1.0 - 2.0 * n));
        sum += term;
        // Denominators change sign after s = n, so only stop once past it.
        if s > n && term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `ln|j_n(x)|` and sign, for `n >= 2`, `x > 0`, outside the series regime.
///
/// Miller's downward recurrence started from the continued-fraction ratio
/// `j_{n+1}/j_n`, normalized against whichever of `j_0`, `j_1` is larger.
fn miller_j(n: usize, x: f64) -> (f64, f64) {
    // ratio r_k = j_k / j_{k-1} satisfies r_k = x / (2k + 1 - x r_{k+1})
    let start = n + 20 + (40.0 * n as f64).sqrt() as usize + x as usize;
    let mut r = 0.0;
    for k in (n + 1..=start).rev() {
        r = x / ((2 * k + 1) as f64 - x * r);
    }
    let mut f_next = r; // j_{n+1}, unnormalized
    let mut f = 1.0; // j_n
    let mut rescales = 0i32;
    for k in (1..=n).rev() {
        let f_prev = (2 * k + 1) as f64 / x * f - f_next;
        f_next = f;
        f = f_prev;
        if f.abs() > RESCALE {
            f /= RESCALE;
            f_next /= RESCALE;
            rescales += 1;
        }
    }
    // f = j_0, f_next = j_1, both scaled by the same unknown factor
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    let j1 = s / (x * x) - c / x;
    let (true_v, comp) = if j0.abs() >= j1.abs() { (j0, f) } else { (j1, f_next) };
    let ln_abs = true_v.abs().ln() - comp.abs().ln() - rescales as f64 * RESCALE.ln();
    let sign = (true_v / comp).signum();
    (ln_abs, sign)
}

/// Spherical Bessel function of the first kind `j_n(x)`, `x >= 0`.
pub fn spherical_bessel_j(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if in_series_regime(n, x) {
        let scale = (n as f64 * x.ln() - ln_dfact_odd(n)).exp();
        return scale * modified_j_series(n, x);
    }
    let (s, c) = x.sin_cos();
    let j0 = s / x;
    if n == 0 {
        return j0;
    }
    let j1 = s / (x * x) - c / x;
    if n == 1 {
        return j1;
    }
    if (n as f64) < x {
        // upward recurrence is stable while the order stays below x
        let (mut a, mut b) = (j0, j1);
        for k in 1..n {
            let next = (2 * k + 1) as f64 / x * b - a;
            a = b;
            b = next;
        }
        return b;
    }
    let (ln_abs, sign) = miller_j(n, x);
    sign * ln_abs.exp()
}

/// Spherical Bessel function of the second kind `y_n(x)`, `x > 0`.
///
/// Upward recurrence; returns `-inf` only where the true value overflows.
pub fn spherical_bessel_y(n: usize, x: f64) -> f64 {
    let (s, c) = x.sin_cos();
    let y0 = -c / x;
    if n == 0 {
        return y0;
    }
    let mut a = y0;
    let mut b = -c / (x * x) - s / x;
    for k in 1..n {
        let next = (2 * k + 1) as f64 / x * b - a;
        a = b;
        b = next;
        if !b.is_finite() {
            return f64::NEG_INFINITY;
        }
    }
    b
}

/// `d/dx j_n(x)`.
pub fn spherical_bessel_j_deriv(n: usize, x: f64) -> f64 {
    if n == 0 {
        return -spherical_bessel_j(1, x);
    }
    if x == 0.0 {
        return if n == 1 { 1.0 / 3.0 } else { 0.0 };
    }
    spherical_bessel_j(n - 1, x) - (n + 1) as f64 / x * spherical_bessel_j(n, x)
}

/// `d/dx y_n(x)`.
pub fn spherical_bessel_y_deriv(n: usize, x: f64) -> f64 {
    if n == 0 {
        return -spherical_bessel_y(1, x);
    }
    spherical_bessel_y(n - 1, x) - (n + 1) as f64 / x * spherical_bessel_y(n, x)
}

/// Outgoing spherical Hankel function `h_n^(1)(x) = j_n(x) + i y_n(x)`.
pub fn spherical_hankel(n: usize, x: f64) -> Complex64 {
    Complex64::new(spherical_bessel_j(n, x), spherical_bessel_y(n, x))
}

/// Rescaled `j_n`: `(2n+1)!!/x^n * j_n(x)`, equal to 1 at `x = 0`.
pub fn modified_bessel_j(n: usize, x: f64) -> f64 {
    if n == 0 {
        return if x == 0.0 { 1.0 } else if in_series_regime(0, x) { modified_j_series(0, x) } else { x.sin() / x };
    }
    if in_series_regime(n, x) {
        return modified_j_series(n, x);
    }
    if (n as f64) < x {
        let j = spherical_bessel_j(n, x);
        return j * (ln_dfact_odd(n) - n as f64 * x.ln()).exp();
    }
    let (ln_abs, sign) = miller_j(n, x);
    sign * (ln_abs + ln_dfact_odd(n) - n as f64 * x.ln()).exp()
}

/// Rescaled `y_n`: `x^(n+1)/(-(2n-1)!!) * y_n(x)`, equal to 1 at `x = 0`.
pub fn modified_bessel_y(n: usize, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0;
    }
    if in_series_regime(n, x) {
        return modified_y_series(n, x);
    }
    // yt_{k+1} = yt_k - x^2 / ((2k+1)(2k-1)) yt_{k-1}, never overflows
    let (s, c) = x.sin_cos();
    let mut a = c;
    if n == 0 {
        return a;
    }
    let mut b = c + x * s;
    let x2 = x * x;
    for k in 1..n {
        let next = b - x2 / (((2 * k + 1) * (2 * k - 1)) as f64) * a;
        a = b;
        b = next;
    }
    b
}

/// Hankel function divided by its small-argument scale,
/// `h_n(x) / ((2n-1)!!/x^(n+1))`. Finite wherever `h_n` overflows.
pub fn scaled_hankel(n: usize, x: f64) -> Complex64 {
    let jt = modified_bessel_j(n, x);
    let re = jt * ((2 * n + 1) as f64 * x.ln() - ln_dfact_odd(n) - ln_dfact_odd_below(n)).exp();
    Complex64::new(re, -modified_bessel_y(n, x))
}
