//! Special functions used by the samplers and the limit laws.
//!
//! Gamma and error functions come from `statrs`. The regularized incomplete
//! beta function is computed here because the window samplers need it for
//! shape parameters in the hundreds of thousands, where a log-gamma
//! difference prefactor loses too many digits.

use statrs::function::{erf, gamma};
use std::f64::consts::{PI, SQRT_2};

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erf::erfc(-x / SQRT_2)
}

/// Upper tail `1 - Φ(x)`, accurate far into the tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erf::erfc(x / SQRT_2)
}

pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x - LN_SQRT_2PI).exp()
}

pub fn normal_quantile(u: f64) -> f64 {
    if u <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    let x = -SQRT_2 * erf::erfc_inv(2.0 * u);
    // One Newton step against the cdf on the shorter tail.
    let resid = if x < 0.0 { normal_cdf(x) - u } else { (1.0 - u) - normal_sf(x) };
    let pdf = normal_pdf(x);
    if pdf > 0.0 && x.abs() < 37.0 {
        x - resid / pdf
    } else {
        x
    }
}

/// `Φ⁻¹(1 - t)` evaluated from the tail probability `t`.
pub fn normal_upper_quantile(t: f64) -> f64 {
    -normal_quantile(t)
}

/// Stirling remainder `ln Γ(a) - [(a - ½) ln a - a + ½ ln 2π]` for `a ≥ 10`.
fn stirling_remainder(a: f64) -> f64 {
    let inv = 1.0 / a;
    let inv2 = inv * inv;
    inv * (1.0 / 12.0
        - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))))
}

/// `ln[xᵃ yᵇ / B(a, b)]` with `y = 1 - x` supplied by the caller.
fn ln_beta_prefactor(a: f64, b: f64, x: f64, y: f64) -> f64 {
    if a >= 10.0 && b >= 10.0 {
        let s = a + b;
        let x0 = a / s;
        let y0 = b / s;
        let lx = ((x - x0) / x0).ln_1p();
        let ly = ((y - y0) / y0).ln_1p();
        a * lx + b * ly + 0.5 * (a * b / s).ln()
            - LN_SQRT_2PI
            - (stirling_remainder(a) + stirling_remainder(b) - stirling_remainder(s))
    } else {
        let lx = if x <= y { x.ln() } else { (-y).ln_1p() };
        let ly = if y <= x { y.ln() } else { (-x).ln_1p() };
        a * lx + b * ly - ln_beta(a, b)
    }
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    if large < 10.0 {
        return gamma::ln_gamma(a) + gamma::ln_gamma(b) - gamma::ln_gamma(a + b);
    }
    let s = a + b;
    // ln Γ(large) - ln Γ(s) by Stirling, arranged so nothing large cancels.
    let ratio = -small * large.ln() - (s - 0.5) * (small / large).ln_1p() + small
        + stirling_remainder(large)
        - stirling_remainder(s);
    if small < 10.0 {
        gamma::ln_gamma(small) + ratio
    } else {
        (small - 0.5) * small.ln() - small + LN_SQRT_2PI + stirling_remainder(small) + ratio
    }
}

/// Continued fraction for the incomplete beta function (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..100_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `(I_x(a, b), 1 - I_x(a, b))`.
///
/// `y` must equal `1 - x`; passing it separately keeps precision when `x` is
/// close to one. Whichever tail is computed directly is accurate to a few
/// ulps; the other is its complement.
pub fn beta_reg_pair(a: f64, b: f64, x: f64, y: f64) -> (f64, f64) {
    if x <= 0.0 {
        return (0.0, 1.0);
    }
    if y <= 0.0 {
        return (1.0, 0.0);
    }
    let pre = ln_beta_prefactor(a, b, x, y);
    if x < (a + 1.0) / (a + b + 2.0) {
        let lower = (pre + beta_cf(a, b, x).ln()).exp() / a;
        (lower, 1.0 - lower)
    } else {
        let upper = (pre + beta_cf(b, a, y).ln()).exp() / b;
        (1.0 - upper, upper)
    }
}

pub fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    beta_reg_pair(a, b, x, 1.0 - x).0
}

fn beta_ln_pdf(a: f64, b: f64, x: f64, y: f64) -> f64 {
    ln_beta_prefactor(a, b, x, y) - x.ln() - y.ln()
}

/// Solves `I_x(a, b) = u` for `x` with `a ≤ b`, so that `x` is the smaller
/// of `x` and `1 - x`. Returns `(x, 1 - x)`.
fn beta_small_side_quantile(a: f64, b: f64, u: f64) -> (f64, f64) {
    let s = a + b;
    let mean = a / s;
    let sd = (a * b / (s * s * (s + 1.0))).sqrt();
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut x = (mean + sd * normal_quantile(u)).clamp(1e-300, 1.0 - 1e-16);
    if !(x > 0.0 && x < 1.0) {
        x = mean;
    }
    for _ in 0..400 {
        let y = 1.0 - x;
        let (lower, upper) = beta_reg_pair(a, b, x, y);
        let diff = if u <= 0.5 { lower - u } else { (1.0 - u) - upper };
        if diff == 0.0 {
            break;
        }
        if diff > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let step = diff / beta_ln_pdf(a, b, x, y).exp();
        let mut next = x - step;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if lo > 0.0 && hi / lo > 1e3 { (lo * hi).sqrt() } else { 0.5 * (lo + hi) };
        }
        let done = (next - x).abs() <= 1e-14 * x || hi - lo <= 1e-15 * hi;
        x = next;
        if done {
            break;
        }
    }
    (x, 1.0 - x)
}

/// Quantile of Beta(a, b) at probability `u`, returned as `(x, 1 - x)` with
/// the smaller side solved directly.
pub fn beta_quantile_pair(a: f64, b: f64, u: f64) -> (f64, f64) {
    if u <= 0.0 {
        return (0.0, 1.0);
    }
    if u >= 1.0 {
        return (1.0, 0.0);
    }
    if a <= b {
        beta_small_side_quantile(a, b, u)
    } else {
        let (y, x) = beta_small_side_quantile(b, a, 1.0 - u);
        (x, y)
    }
}

/// Regularized lower incomplete gamma `P(shape, x)`: the Gamma(shape) cdf.
pub fn gamma_cdf(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x.is_infinite() {
        1.0
    } else {
        gamma::gamma_lr(shape, x)
    }
}

pub fn gamma_sf(shape: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x.is_infinite() {
        0.0
    } else {
        gamma::gamma_ur(shape, x)
    }
}

pub fn gamma_ln_pdf(shape: f64, x: f64) -> f64 {
    (shape - 1.0) * x.ln() - x - gamma::ln_gamma(shape)
}

/// Quantile of the unit-scale Gamma(shape) distribution.
pub fn gamma_quantile(shape: f64, u: f64) -> f64 {
    if u <= 0.0 {
        return 0.0;
    }
    if u >= 1.0 {
        return f64::INFINITY;
    }
    // Wilson–Hilferty start.
    let z = normal_quantile(u);
    let c = 1.0 / (9.0 * shape);
    let mut x = shape * (1.0 - c + z * c.sqrt()).powi(3);
    if !(x > 0.0) || !x.is_finite() {
        x = shape.max(1e-3);
    }
    let mut lo = 0.0_f64;
    let mut hi = f64::INFINITY;
    for _ in 0..400 {
        let diff = if u <= 0.5 { gamma_cdf(shape, x) - u } else { (1.0 - u) - gamma_sf(shape, x) };
        if diff == 0.0 {
            break;
        }
        if diff > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - diff / gamma_ln_pdf(shape, x).exp();
        if !(next > lo && next < hi) || !next.is_finite() {
            next = if hi.is_infinite() { 2.0 * x.max(lo) + 1.0 } else { 0.5 * (lo + hi) };
        }
        let done = (next - x).abs() <= 1e-14 * x.max(1e-300);
        x = next;
        if done {
            break;
        }
    }
    x
}

/// Harmonic number `H_m = 1 + 1/2 + … + 1/m`.
pub fn harmonic(m: u64) -> f64 {
    if m < 64 {
        (1..=m).map(|i| 1.0 / i as f64).sum()
    } else {
        gamma::digamma(m as f64 + 1.0) + EULER_GAMMA
    }
}

/// `Σ_{i > m} 1/i² = ψ′(m + 1)` via the asymptotic series, for `m ≥ 10`.
pub fn inverse_square_tail(m: u64) -> f64 {
    if m < 10 {
        let head: f64 = (1..=m).map(|i| 1.0 / (i as f64 * i as f64)).sum();
        return PI * PI / 6.0 - head;
    }
    let x = m as f64 + 1.0;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    inv + 0.5 * inv2 + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 / 42.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn beta_reg_matches_statrs_for_small_shapes() {
        for &(a, b) in &[(1.0, 1.0), (2.0, 3.0), (0.5, 0.5), (5.0, 1.5), (12.0, 30.0)] {
            for i in 1..20 {
                let x = i as f64 / 20.0;
                let ours = beta_reg(a, b, x);
                let reference = statrs::function::beta::beta_reg(a, b, x);
                assert_relative_eq!(ours, reference, epsilon = 1e-12, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn beta_reg_uniform_order_statistic_closed_form() {
        // Beta(1, n) cdf is 1 - (1 - x)^n.
        let n = 50_000.0;
        let x = 3e-5;
        assert_relative_eq!(beta_reg(1.0, n, x), -(n * (-x as f64).ln_1p()).exp_m1(), max_relative = 1e-12);
        // Beta(n, 1) cdf is x^n.
        let x: f64 = 0.99995;
        assert_relative_eq!(beta_reg(n, 1.0, x), x.powf(n), max_relative = 1e-10);
    }

    #[test]
    fn beta_reg_large_shapes_against_binomial_sum() {
        // I_x(k, n-k+1) = P(Bin(n, x) ≥ k), summed directly in log space.
        let n = 400u64;
        let k = 190u64;
        let x: f64 = 0.47;
        let mut tail = 0.0;
        for j in k..=n {
            let lc = statrs::function::factorial::ln_binomial(n, j);
            tail += (lc + j as f64 * x.ln() + (n - j) as f64 * (1.0 - x).ln()).exp();
        }
        assert_relative_eq!(beta_reg(k as f64, (n - k + 1) as f64, x), tail, max_relative = 1e-11);
    }

    #[test]
    fn beta_quantile_inverts_cdf_for_window_sized_shapes() {
        for &(a, b) in &[(4997.0, 5004.0), (99_994.0, 7.0), (3.0, 2.0), (1.0, 100_000.0)] {
            for &u in &[1e-6, 0.01, 0.3, 0.5, 0.77, 0.999] {
                let (x, y) = beta_quantile_pair(a, b, u);
                let (lower, upper) = beta_reg_pair(a, b, x, y);
                let err = if u <= 0.5 { (lower - u).abs() / u } else { (upper - (1.0 - u)).abs() / (1.0 - u) };
                assert!(err < 1e-9, "a={a} b={b} u={u} err={err}");
                assert_relative_eq!(x + y, 1.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn gamma_quantile_inverts_cdf() {
        for &shape in &[1.0, 2.0, 20.0, 101.0] {
            for &u in &[0.001, 0.025, 0.5, 0.975, 0.999] {
                let x = gamma_quantile(shape, u);
                assert_relative_eq!(gamma_cdf(shape, x), u, max_relative = 1e-10);
            }
        }
        // Gamma(1) is Exp(1).
        assert_relative_eq!(gamma_quantile(1.0, 0.5), std::f64::consts::LN_2, max_relative = 1e-12);
    }

    #[test]
    fn harmonic_and_tail_series() {
        let direct: f64 = (1..=1000).map(|i| 1.0 / i as f64).sum();
        assert_relative_eq!(harmonic(1000), direct, max_relative = 1e-13);
        let direct_tail: f64 = PI * PI / 6.0 - (1..=2000).map(|i| 1.0 / (i as f64 * i as f64)).sum::<f64>();
        assert_relative_eq!(inverse_square_tail(2000), direct_tail, max_relative = 1e-8);
    }

    #[test]
    fn normal_quantile_round_trip() {
        for i in 1..1000 {
            let u = i as f64 / 1000.0;
            assert!((normal_cdf(normal_quantile(u)) - u).abs() < 1e-14);
        }
        assert_relative_eq!(normal_upper_quantile(1e-20), -normal_quantile(1e-20));
    }
}
