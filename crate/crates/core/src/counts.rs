//! Neighbour counts `K₋`, `K₊` around `X_{k:n}` and their limiting laws.
//!
//! `K₋(n, k, d)` counts observations in the open interval
//! `(X_{k:n} - d, X_{k:n})`, `K₊` those in `(X_{k:n}, X_{k:n} + d)`. Both are
//! computed from differences to the center so that the duality with the
//! spacings holds event by event in floating point.

use crate::error::{Error, Result};
use crate::quadrature;
use crate::sampling::WindowSample;
use crate::special::{gamma_quantile, gamma_sf};
use serde::{Deserialize, Serialize};
use statrs::function::factorial::{ln_binomial, ln_factorial};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub k_minus: u64,
    pub k_plus: u64,
    pub d: f64,
    pub k: u64,
    pub n: u64,
}

fn check_d(d: f64) -> Result<()> {
    if d > 0.0 && d.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("neighbourhood radius d must be positive, got {d}")))
    }
}

/// Counts from a full sorted sample.
pub fn count_neighbors(sample: &[f64], k: u64, d: f64) -> Result<CountRecord> {
    check_d(d)?;
    let n = sample.len() as u64;
    if k == 0 || k > n {
        return Err(Error::domain(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let c = sample[k as usize - 1];
    let below = &sample[..k as usize - 1];
    let above = &sample[k as usize..];
    let k_minus = below.iter().rev().take_while(|&&x| c - x < d).filter(|&&x| c - x > 0.0).count() as u64;
    let k_plus = above.iter().take_while(|&&x| x - c < d).filter(|&&x| x - c > 0.0).count() as u64;
    Ok(CountRecord { k_minus, k_plus, d, k, n })
}

/// Counts capped at the window size: `(min(K₋, s), min(K₊, r))`.
pub fn capped_window_counts(w: &WindowSample, d: f64) -> Result<(u64, u64)> {
    check_d(d)?;
    let c = w.center();
    let s = w.s as usize;
    let k_minus = w.values[..s].iter().rev().take_while(|&&x| c - x < d).filter(|&&x| c - x > 0.0).count() as u64;
    let k_plus = w.values[s + 1..].iter().take_while(|&&x| x - c < d).filter(|&&x| x - c > 0.0).count() as u64;
    Ok((k_minus, k_plus))
}

/// Counts from a window; fails with a censoring error when the
/// neighbourhood reaches past the window on either side, since the true
/// count is then unknown.
pub fn count_in_window(w: &WindowSample, d: f64) -> Result<CountRecord> {
    let (k_minus, k_plus) = capped_window_counts(w, d)?;
    let at_bottom = w.k - w.s == 1;
    let at_top = w.k + w.r == w.n;
    if (k_minus == w.s && !at_bottom) || (k_plus == w.r && !at_top) {
        return Err(Error::Censored(format!(
            "window (r = {}, s = {}) too small for d = {d}: counts ({k_minus}, {k_plus}) hit its edge",
            w.r, w.s
        )));
    }
    Ok(CountRecord { k_minus, k_plus, d, k: w.k, n: w.n })
}

/// Checks, on one window, `[K₋ < i] ⇔ [X_{k:n} - X_{k-i:n} > d]` and
/// `[K₊ < j] ⇔ [X_{k+j:n} - X_{k:n} > d]`. `None` skips a side.
pub fn duality_check(w: &WindowSample, i: Option<u64>, j: Option<u64>, d: f64) -> Result<bool> {
    let (k_minus, k_plus) = capped_window_counts(w, d)?;
    let c = w.center();
    let s = w.s as usize;
    let mut ok = true;
    if let Some(i) = i {
        if i == 0 || i > w.s {
            return Err(Error::domain(format!("left index i = {i} outside 1..={}", w.s)));
        }
        ok &= (k_minus < i) == (c - w.values[s - i as usize] > d);
    }
    if let Some(j) = j {
        if j == 0 || j > w.r {
            return Err(Error::domain(format!("right index j = {j} outside 1..={}", w.r)));
        }
        ok &= (k_plus < j) == (w.values[s + j as usize] - c > d);
    }
    Ok(ok)
}

/// Same identities on a full sorted sample, for every valid `i` and `j`.
pub fn duality_check_full(sample: &[f64], k: u64, d: f64) -> Result<bool> {
    let rec = count_neighbors(sample, k, d)?;
    let c = sample[k as usize - 1];
    let left = (1..k).all(|i| (rec.k_minus < i) == (c - sample[(k - i) as usize - 1] > d));
    let right = (1..=rec.n - k).all(|j| (rec.k_plus < j) == (sample[(k + j) as usize - 1] - c > d));
    Ok(left && right)
}

/// Limiting law of a neighbour count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CountLimitLaw {
    Poisson { lambda: f64 },
    /// Binomial(k, 1 - e^{-λ}).
    Binomial { k: u64, lambda: f64 },
    /// `P(K = j) = C(k+j, j) q^j (1-q)^{k+1}` with `q = 1 - e^{-λ}`.
    NegBinomial { k: u64, lambda: f64 },
    /// Poisson(λ) with all mass at or above `k` placed on `k`.
    CensoredPoisson { lambda: f64, k: u64 },
    /// Binomial(k, 1 - c(S)/S) mixed over `S ~ Gamma(k+1)`, where
    /// `c(s) = (λ + s^{-1/α})^{-α}`.
    FrechetMixed { alpha: f64, k: u64, lambda: f64 },
}

impl CountLimitLaw {
    pub fn validate(&self) -> Result<()> {
        let lambda = match *self {
            CountLimitLaw::Poisson { lambda }
            | CountLimitLaw::Binomial { lambda, .. }
            | CountLimitLaw::NegBinomial { lambda, .. }
            | CountLimitLaw::CensoredPoisson { lambda, .. }
            | CountLimitLaw::FrechetMixed { lambda, .. } => lambda,
        };
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::domain(format!("lambda must be positive, got {lambda}")));
        }
        if let CountLimitLaw::FrechetMixed { alpha, .. } = *self {
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(Error::domain(format!("alpha must be positive, got {alpha}")));
            }
        }
        Ok(())
    }

    /// Largest value with positive mass, or `None` for unbounded support.
    pub fn support_max(&self) -> Option<u64> {
        match *self {
            CountLimitLaw::Poisson { .. } | CountLimitLaw::NegBinomial { .. } => None,
            CountLimitLaw::Binomial { k, .. } | CountLimitLaw::CensoredPoisson { k, .. } | CountLimitLaw::FrechetMixed { k, .. } => Some(k),
        }
    }
}

fn poisson_ln_pmf(lambda: f64, j: u64) -> f64 {
    j as f64 * lambda.ln() - lambda - ln_factorial(j)
}

fn binomial_pmf(k: u64, p: f64, j: u64) -> f64 {
    if j > k {
        return 0.0;
    }
    if p <= 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if j == k { 1.0 } else { 0.0 };
    }
    (ln_binomial(k, j) + j as f64 * p.ln() + (k - j) as f64 * (-p).ln_1p()).exp()
}

/// `P(K = j)` under `law`; zero outside the support.
pub fn count_limit_pmf(law: &CountLimitLaw, j: u64) -> Result<f64> {
    law.validate()?;
    Ok(match *law {
        CountLimitLaw::Poisson { lambda } => poisson_ln_pmf(lambda, j).exp(),
        CountLimitLaw::Binomial { k, lambda } => binomial_pmf(k, -(-lambda).exp_m1(), j),
        CountLimitLaw::NegBinomial { k, lambda } => {
            let q = -(-lambda).exp_m1();
            (ln_binomial(k + j, j) + j as f64 * q.ln() - (k + 1) as f64 * lambda).exp()
        }
        CountLimitLaw::CensoredPoisson { lambda, k } => {
            if j < k {
                poisson_ln_pmf(lambda, j).exp()
            } else if j == k {
                // P(Poisson(λ) ≥ k) = P(Gamma(k) ≤ λ).
                if k == 0 {
                    1.0
                } else {
                    1.0 - gamma_sf(k as f64, lambda)
                }
            } else {
                0.0
            }
        }
        CountLimitLaw::FrechetMixed { alpha, k, lambda } => {
            if j > k {
                return Ok(0.0);
            }
            let shape = (k + 1) as f64;
            // Integrate over the Gamma(k+1) probability scale u = P(S ≤ s).
            let integrand = |u: f64| {
                let s = gamma_quantile(shape, u);
                let c = (lambda + s.powf(-1.0 / alpha)).powf(-alpha);
                binomial_pmf(k, 1.0 - c / s, j)
            };
            quadrature::integrate(integrand, 0.0, 1.0, 1e-10, 0.0)?
        }
    })
}

/// `P(K < j)` for the negative-binomial law in its binomial-sum form,
/// `Σ_{i<j} C(k+j, i) q^i (1-q)^{k+j-i}`.
pub fn neg_binomial_cdf_below(k: u64, lambda: f64, j: u64) -> f64 {
    let q = -(-lambda).exp_m1();
    (0..j).map(|i| binomial_pmf(k + j, q, i)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{norming_constants, DistributionSpec, Regime};
    use crate::rng::replicate_stream;
    use crate::sampling::{simulate_windows, SamplingMethod};
    use crate::stats_tests::{discrete_gof, histogram, independence_check};
    use crate::test_support::proptest_config;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::LN_2;

    fn window(values: Vec<f64>, n: u64, k: u64, r: u64, s: u64) -> WindowSample {
        WindowSample { n, k, r, s, values, seed: 0, replicate: 0, method: SamplingMethod::FullSort }
    }

    #[test]
    fn direct_counts() {
        let x = [0.1, 0.2, 0.35, 0.8];
        let rec = count_neighbors(&x, 2, 0.2).unwrap();
        assert_eq!((rec.k_minus, rec.k_plus), (1, 1));
        let rec = count_neighbors(&x, 2, 0.01).unwrap();
        assert_eq!((rec.k_minus, rec.k_plus), (0, 0));
        assert!(count_neighbors(&x, 0, 0.1).is_err());
        assert!(count_neighbors(&x, 2, 0.0).is_err());
    }

    #[test]
    fn window_counts_and_censoring() {
        let w = window(vec![0.1, 0.2, 0.35, 0.8], 100, 50, 2, 1);
        let rec = count_in_window(&w, 0.05).unwrap();
        assert_eq!((rec.k_minus, rec.k_plus), (0, 0));
        assert_eq!(capped_window_counts(&w, 0.2).unwrap(), (1, 1));
        // Left side saturated but not at the bottom of the sample.
        assert!(matches!(count_in_window(&w, 0.15), Err(Error::Censored(_))));
        // Saturation is genuine when the window already reaches the sample edge.
        let w = window(vec![0.1, 0.2, 0.35, 0.8], 4, 2, 2, 1);
        let rec = count_in_window(&w, 0.7).unwrap();
        assert_eq!((rec.k_minus, rec.k_plus), (1, 2));
    }

    #[test]
    fn duality_examples() {
        let w = window(vec![0.1, 0.2, 0.35, 0.8], 4, 2, 2, 1);
        assert!(duality_check(&w, Some(1), Some(1), 0.05).unwrap());
        assert!(duality_check(&w, Some(1), Some(2), 0.5).unwrap());
        assert!(duality_check_full(&[0.1, 0.2, 0.35, 0.8], 2, 0.2).unwrap());
        assert!(duality_check(&w, Some(2), None, 0.1).is_err());
    }

    #[test]
    fn duality_on_replicates() {
        let u = DistributionSpec::Uniform;
        let windows = simulate_windows(&u, 1000, 500, 6, 6, SamplingMethod::BetaPivot, 31, 20_000).unwrap();
        let mut rng = replicate_stream(32, 0);
        for w in &windows {
            let d = rng.random::<f64>() * 8e-3;
            let i = rng.random_range(1..=6);
            let j = rng.random_range(1..=6);
            assert!(duality_check(w, Some(i), Some(j), d).unwrap());
        }
        for rep in 0..200u64 {
            let mut rng = replicate_stream(33, rep);
            let mut x: Vec<f64> = (0..300).map(|_| rng.random::<f64>()).collect();
            x.sort_unstable_by(f64::total_cmp);
            assert!(duality_check_full(&x, rng.random_range(1..=300), rng.random::<f64>() * 0.05).unwrap());
        }
    }

    #[test]
    fn pmf_examples() {
        assert_relative_eq!(
            count_limit_pmf(&CountLimitLaw::Binomial { k: 2, lambda: LN_2 }, 2).unwrap(),
            0.25,
            max_relative = 1e-14
        );
        let e = (-1.0f64).exp();
        assert_relative_eq!(
            count_limit_pmf(&CountLimitLaw::CensoredPoisson { lambda: 1.0, k: 3 }, 3).unwrap(),
            1.0 - e * 2.5,
            max_relative = 1e-12
        );
        assert_relative_eq!(count_limit_pmf(&CountLimitLaw::Poisson { lambda: 2.0 }, 0).unwrap(), (-2.0f64).exp(), max_relative = 1e-14);
        assert_eq!(count_limit_pmf(&CountLimitLaw::Binomial { k: 2, lambda: 1.0 }, 3).unwrap(), 0.0);
        assert!(count_limit_pmf(&CountLimitLaw::Poisson { lambda: 0.0 }, 0).is_err());
    }

    #[test]
    fn neg_binomial_pmf_matches_cdf_form() {
        for &(k, lambda) in &[(3u64, 0.5), (3, 1.0), (1, 2.0), (5, 0.2)] {
            let law = CountLimitLaw::NegBinomial { k, lambda };
            let mut acc = 0.0;
            for j in 0..40u64 {
                assert_relative_eq!(acc, neg_binomial_cdf_below(k, lambda, j), epsilon = 1e-12);
                acc += count_limit_pmf(&law, j).unwrap();
            }
        }
    }

    fn total_mass(law: &CountLimitLaw) -> f64 {
        let top = law.support_max().unwrap_or(2_000);
        (0..=top).map(|j| count_limit_pmf(law, j).unwrap()).sum()
    }

    #[test]
    fn pmfs_sum_to_one() {
        let laws = [
            CountLimitLaw::Poisson { lambda: 0.3 },
            CountLimitLaw::Poisson { lambda: 25.0 },
            CountLimitLaw::Binomial { k: 7, lambda: 0.8 },
            CountLimitLaw::NegBinomial { k: 3, lambda: 1.5 },
            CountLimitLaw::NegBinomial { k: 10, lambda: 0.1 },
            CountLimitLaw::CensoredPoisson { lambda: 2.0, k: 3 },
            CountLimitLaw::CensoredPoisson { lambda: 0.5, k: 0 },
            CountLimitLaw::FrechetMixed { alpha: 1.0, k: 3, lambda: 1.0 },
            CountLimitLaw::FrechetMixed { alpha: 2.5, k: 5, lambda: 0.3 },
        ];
        for law in laws {
            assert!((total_mass(&law) - 1.0).abs() < 1e-9, "{law:?}: {}", total_mass(&law));
        }
    }

    #[test]
    fn frechet_mixed_matches_monte_carlo() {
        // Monte Carlo of the spacing representation: K₊ < j iff W_{k+1-j} - W_{k+1} > λ.
        let (alpha, k, lambda) = (1.0, 3u64, 1.0);
        let law = CountLimitLaw::FrechetMixed { alpha, k, lambda };
        let mut counts = vec![0u64; k as usize + 1];
        for rep in 0..200_000u64 {
            let mut rng = replicate_stream(34, rep);
            let mut s = 0.0;
            let w: Vec<f64> = (0..=k)
                .map(|_| {
                    s += rng.sample::<f64, _>(rand_distr::Exp1);
                    s.powf(-1.0 / alpha)
                })
                .collect();
            let center = w[k as usize];
            let kp = w[..k as usize].iter().filter(|&&x| x - center < lambda).count();
            counts[kp] += 1;
        }
        let rep = discrete_gof(&counts, |j| count_limit_pmf(&law, j).unwrap(), law.support_max()).unwrap();
        assert!(rep.p_value > 0.01, "{rep:?}");
    }

    #[test]
    fn central_counts_are_poisson() {
        let u = DistributionSpec::Uniform;
        let n = 10_000u64;
        let windows = simulate_windows(&u, n, 5000, 20, 20, SamplingMethod::BetaPivot, 35, 10_000).unwrap();
        let d = 2.0 / n as f64;
        let recs: Vec<CountRecord> = windows.iter().map(|w| count_in_window(w, d).unwrap()).collect();
        let law = CountLimitLaw::Poisson { lambda: 2.0 };
        let h = histogram(recs.iter().map(|r| r.k_plus));
        assert!(discrete_gof(&h, |j| count_limit_pmf(&law, j).unwrap(), None).unwrap().p_value > 0.01);
    }

    #[test]
    fn gumbel_extreme_counts() {
        let e = DistributionSpec::exponential(1.0).unwrap();
        let (n, k, lambda) = (100_000u64, 3u64, 1.0);
        let nc = norming_constants(&e, n, n - k, Regime::Extreme, None).unwrap();
        let windows = simulate_windows(&e, n, n - k, k, 60, SamplingMethod::TopDown, 36, 20_000).unwrap();
        let recs: Vec<CountRecord> = windows.iter().map(|w| count_in_window(w, lambda * nc.b_n).unwrap()).collect();
        let bin = CountLimitLaw::Binomial { k, lambda };
        let nb = CountLimitLaw::NegBinomial { k, lambda };
        let hp = histogram(recs.iter().map(|r| r.k_plus));
        let hm = histogram(recs.iter().map(|r| r.k_minus));
        assert!(discrete_gof(&hp, |j| count_limit_pmf(&bin, j).unwrap(), bin.support_max()).unwrap().p_value > 0.01);
        assert!(discrete_gof(&hm, |j| count_limit_pmf(&nb, j).unwrap(), None).unwrap().p_value > 0.01);
    }

    #[test]
    fn weibull_extreme_counts() {
        let u = DistributionSpec::Uniform;
        let (n, k, lambda) = (100_000u64, 3u64, 1.5);
        let nc = norming_constants(&u, n, n - k, Regime::Extreme, None).unwrap();
        let windows = simulate_windows(&u, n, n - k, k, 30, SamplingMethod::TopDown, 37, 20_000).unwrap();
        let recs: Vec<CountRecord> = windows.iter().map(|w| count_in_window(w, lambda * nc.b_n).unwrap()).collect();
        let cens = CountLimitLaw::CensoredPoisson { lambda, k };
        let pois = CountLimitLaw::Poisson { lambda };
        let hp = histogram(recs.iter().map(|r| r.k_plus));
        let hm = histogram(recs.iter().map(|r| r.k_minus));
        assert!(discrete_gof(&hp, |j| count_limit_pmf(&cens, j).unwrap(), cens.support_max()).unwrap().p_value > 0.01);
        assert!(discrete_gof(&hm, |j| count_limit_pmf(&pois, j).unwrap(), None).unwrap().p_value > 0.01);
        let pairs: Vec<(f64, f64)> = recs.iter().map(|r| (r.k_minus as f64, r.k_plus as f64)).collect();
        assert!(independence_check(&pairs).unwrap().z.abs() < 3.0);
    }

    proptest! {
        #![proptest_config(proptest_config(256))]

        #[test]
        fn duality_holds_on_arbitrary_samples(x in proptest::collection::vec(-10.0f64..10.0, 2..60), kf in 0.0f64..1.0, d in 1e-3f64..5.0) {
            let mut x = x;
            x.sort_unstable_by(f64::total_cmp);
            x.dedup();
            let k = ((kf * x.len() as f64) as u64).clamp(1, x.len() as u64);
            prop_assert!(duality_check_full(&x, k, d).unwrap());
            let rec = count_neighbors(&x, k, d).unwrap();
            prop_assert!(rec.k_minus < k && rec.k_plus <= x.len() as u64 - k);
        }
    }
}
