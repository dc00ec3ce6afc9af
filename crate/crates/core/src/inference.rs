//! Distribution-free inference for a quantile `x_p` and the density
//! `f(x_p)` from a window of central order statistics.
//!
//! With `R = X_{k+r:n} - X_{k-s:n}` the ratio `(X_{k:n} - x_p) / (√n R)`
//! converges to `T = √(p(1-p)) N / G`, `N ~ N(0,1)` independent of
//! `G ~ Gamma(r+s)`, whatever the parent. Critical values of `T` are
//! tabulated by Monte Carlo.

use crate::distributions::DistributionSpec;
use crate::error::{Error, Result};
use crate::rng::{derive_seed, replicate_stream, Stream};
use crate::sampling::{simulate_windows, SamplingMethod, WindowSample};
use crate::special::gamma_quantile;
use rand::Rng;
use rand_distr::{Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Smallest Monte Carlo size accepted for a pivot table.
pub const MIN_MC_SIZE: u64 = 100_000;

fn check_probability(name: &str, v: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { (0.0..1.0).contains(&v) } else { v > 0.0 && v < 1.0 };
    if ok {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must lie in {}0, 1), got {v}", if allow_zero { "[" } else { "(" })))
    }
}

/// Central `level` interval of the pivot law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PivotTable {
    pub r_plus_s: u64,
    pub p: f64,
    pub level: f64,
    pub lower: f64,
    pub upper: f64,
    pub mc_size: u64,
}

/// Empirical `(1 ∓ level)/2` quantiles of `T` from `mc_size` draws.
pub fn pivot_quantiles(r: u64, s: u64, p: f64, level: f64, mc_size: u64, rng: &mut Stream) -> Result<PivotTable> {
    if r + s < 2 {
        return Err(Error::domain(format!("pivot needs r + s ≥ 2, got {}", r + s)));
    }
    check_probability("p", p, false)?;
    check_probability("level", level, true)?;
    if mc_size < MIN_MC_SIZE {
        return Err(Error::domain(format!("mc_size must be at least {MIN_MC_SIZE}, got {mc_size}")));
    }
    let scale = (p * (1.0 - p)).sqrt();
    let gamma = Gamma::new((r + s) as f64, 1.0).expect("positive shape");
    let mut t: Vec<f64> = (0..mc_size)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            let g: f64 = rng.sample(gamma);
            scale * z / g
        })
        .collect();
    t.sort_unstable_by(f64::total_cmp);
    let lower = empirical_quantile(&t, (1.0 - level) / 2.0);
    let upper = empirical_quantile(&t, (1.0 + level) / 2.0);
    Ok(PivotTable { r_plus_s: r + s, p, level, lower, upper, mc_size })
}

/// Linear interpolation between order statistics (the usual "type 7").
fn empirical_quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileCI {
    pub point: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
    pub r: u64,
    pub s: u64,
}

impl QuantileCI {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn nondegenerate_range(w: &WindowSample) -> Result<f64> {
    let range = w.range();
    if range > 0.0 && range.is_finite() {
        Ok(range)
    } else {
        Err(Error::Degenerate(format!("window range X_(k+r) - X_(k-s) = {range}")))
    }
}

/// Confidence interval `[X_k - t_U √n R, X_k - t_L √n R]` for `x_p`.
pub fn quantile_ci(w: &WindowSample, p: f64, table: &PivotTable) -> Result<QuantileCI> {
    if table.r_plus_s != w.r + w.s {
        return Err(Error::domain(format!("pivot table is for r + s = {}, window has {}", table.r_plus_s, w.r + w.s)));
    }
    if table.p != p {
        return Err(Error::domain(format!("pivot table is for p = {}, asked for {p}", table.p)));
    }
    let nf = w.n as f64;
    if (w.k as f64 - nf * p).abs() > nf.sqrt() {
        return Err(Error::domain(format!("k = {} is too far from n p = {}", w.k, nf * p)));
    }
    let scale = nf.sqrt() * nondegenerate_range(w)?;
    let point = w.center();
    Ok(QuantileCI {
        point,
        lower: point - table.upper * scale,
        upper: point - table.lower * scale,
        level: table.level,
        r: w.r,
        s: w.s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
    pub level: f64,
}

/// `f̂ = (r+s-1) / (n R)` with an interval from the Gamma(r+s) limit of
/// `n f(x_p) R`.
pub fn density_estimate(w: &WindowSample, level: f64) -> Result<DensityEstimate> {
    let m = w.r + w.s;
    if m < 2 {
        return Err(Error::domain(format!("density estimate needs r + s ≥ 2, got {m}")));
    }
    check_probability("level", level, true)?;
    let nr = w.n as f64 * nondegenerate_range(w)?;
    let shape = m as f64;
    Ok(DensityEstimate {
        estimate: (shape - 1.0) / nr,
        lower: gamma_quantile(shape, (1.0 - level) / 2.0) / nr,
        upper: gamma_quantile(shape, (1.0 + level) / 2.0) / nr,
        level,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub n: u64,
    pub p: f64,
    pub r: u64,
    pub s: u64,
    pub level: f64,
    pub n_rep: u64,
    pub seed: u64,
    pub mc_size: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub parent: String,
    pub n: u64,
    pub p: f64,
    pub r: u64,
    pub s: u64,
    pub level: f64,
    pub coverage: f64,
    pub se: f64,
    pub n_rep: u64,
    pub seed: u64,
    pub x_p: f64,
    pub pivot: PivotTable,
    pub mean_width: f64,
    pub density_true: f64,
    pub density_mean: f64,
    pub density_se: f64,
}

/// Hit rate of the pivot interval for the true `x_p` over `n_rep` windows
/// at `k = round(n p)`.
pub fn coverage_experiment(dist: &DistributionSpec, cfg: &CoverageConfig) -> Result<CoverageReport> {
    if cfg.n_rep == 0 {
        return Err(Error::config("n_replicates", "must be at least 1"));
    }
    check_probability("p", cfg.p, false)?;
    let k = (cfg.n as f64 * cfg.p).round() as u64;
    let mut pivot_rng = replicate_stream(derive_seed(cfg.seed, "pivot"), 0);
    let table = pivot_quantiles(cfg.r, cfg.s, cfg.p, cfg.level, cfg.mc_size, &mut pivot_rng)?;
    let method = SamplingMethod::auto(cfg.n, k, cfg.r);
    let windows = simulate_windows(dist, cfg.n, k, cfg.r, cfg.s, method, cfg.seed, cfg.n_rep)?;
    let x_p = dist.quantile(cfg.p)?;
    let per_rep: Vec<(bool, f64, f64)> = windows
        .par_iter()
        .map(|w| {
            let ci = quantile_ci(w, cfg.p, &table)?;
            let f = density_estimate(w, cfg.level)?;
            Ok((ci.contains(x_p), ci.width(), f.estimate))
        })
        .collect::<Result<_>>()?;
    let nr = cfg.n_rep as f64;
    let hits = per_rep.iter().filter(|t| t.0).count() as f64;
    let coverage = hits / nr;
    let mean_width = per_rep.iter().map(|t| t.1).sum::<f64>() / nr;
    let density_mean = per_rep.iter().map(|t| t.2).sum::<f64>() / nr;
    let density_var = if cfg.n_rep > 1 {
        per_rep.iter().map(|t| (t.2 - density_mean).powi(2)).sum::<f64>() / (nr - 1.0)
    } else {
        0.0
    };
    Ok(CoverageReport {
        parent: dist.name(),
        n: cfg.n,
        p: cfg.p,
        r: cfg.r,
        s: cfg.s,
        level: cfg.level,
        coverage,
        se: (coverage * (1.0 - coverage) / nr).sqrt(),
        n_rep: cfg.n_rep,
        seed: cfg.seed,
        x_p,
        pivot: table,
        mean_width,
        density_true: dist.pdf(x_p),
        density_mean,
        density_se: (density_var / nr).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::proptest_config;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use statrs::distribution::{Continuous, ContinuousCDF, Gamma as GammaDist, Normal};

    fn table(r_plus_s: u64, p: f64, level: f64, seed: u64) -> PivotTable {
        pivot_quantiles(r_plus_s / 2, r_plus_s - r_plus_s / 2, p, level, 200_000, &mut replicate_stream(seed, 0)).unwrap()
    }

    /// `P(T ≤ t) = E Φ(t G / √(p(1-p)))`, integrated over the Gamma density.
    fn pivot_cdf_oracle(m: f64, p: f64, t: f64) -> f64 {
        let g = GammaDist::new(m, 1.0).unwrap();
        let z = Normal::new(0.0, 1.0).unwrap();
        let c = (p * (1.0 - p)).sqrt();
        let (hi, steps) = (m + 40.0 * m.sqrt() + 40.0, 200_000);
        let h = hi / steps as f64;
        // Simpson's rule on [0, hi].
        (0..=steps)
            .map(|i| {
                let x = i as f64 * h;
                let w = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * g.pdf(x) * z.cdf(t * x / c)
            })
            .sum::<f64>()
            * h
            / 3.0
    }

    fn oracle_quantile(m: f64, p: f64, q: f64) -> f64 {
        let (mut lo, mut hi) = (-10.0, 10.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if pivot_cdf_oracle(m, p, mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn pivot_matches_quadrature_oracle() {
        let t = pivot_quantiles(10, 10, 0.5, 0.95, 2_000_000, &mut replicate_stream(41, 0)).unwrap();
        let exact = oracle_quantile(20.0, 0.5, 0.975);
        assert_relative_eq!(t.upper, exact, max_relative = 5e-3);
        assert_relative_eq!(t.lower, -exact, max_relative = 5e-3);
    }

    #[test]
    fn pivot_symmetry_and_reproducibility() {
        let a = table(20, 0.3, 0.9, 42);
        let b = table(20, 0.3, 0.9, 42);
        assert!((a.upper - b.upper).abs() < 1e-6 && (a.lower - b.lower).abs() < 1e-6);
        assert!(a.lower < 0.0 && a.upper > 0.0);
        assert_relative_eq!(a.lower, -a.upper, max_relative = 0.02);
        let z = table(20, 0.3, 0.0, 42);
        assert_eq!(z.lower, z.upper);
        assert!(z.upper.abs() < 0.01 * a.upper);
    }

    #[test]
    fn pivot_preconditions() {
        let mut rng = replicate_stream(43, 0);
        assert!(pivot_quantiles(1, 0, 0.5, 0.95, 200_000, &mut rng).is_err());
        assert!(pivot_quantiles(1, 1, 0.5, 0.95, 99_999, &mut rng).is_err());
        assert!(pivot_quantiles(1, 1, 1.0, 0.95, 200_000, &mut rng).is_err());
    }

    fn uniform_window(values: Vec<f64>, n: u64, k: u64, r: u64, s: u64) -> WindowSample {
        WindowSample { n, k, r, s, values, seed: 0, replicate: 0, method: SamplingMethod::FullSort }
    }

    #[test]
    fn ci_and_density_on_a_window() {
        let w = uniform_window(vec![0.49, 0.495, 0.5, 0.502, 0.51], 1000, 500, 2, 2);
        let t95 = table(4, 0.5, 0.95, 44);
        let t50 = table(4, 0.5, 0.5, 44);
        let a = quantile_ci(&w, 0.5, &t95).unwrap();
        let b = quantile_ci(&w, 0.5, &t50).unwrap();
        assert!(a.lower < b.lower && b.upper < a.upper);
        assert!(a.lower <= a.point && a.point <= a.upper);
        let f = density_estimate(&w, 0.95).unwrap();
        assert_relative_eq!(f.estimate * 1000.0 * w.range(), 3.0, max_relative = 1e-15);
        assert!(f.lower < f.estimate && f.estimate < f.upper);
        let flat = uniform_window(vec![0.5; 5], 1000, 500, 2, 2);
        assert!(matches!(quantile_ci(&flat, 0.5, &t95), Err(Error::Degenerate(_))));
        assert!(matches!(density_estimate(&flat, 0.95), Err(Error::Degenerate(_))));
        assert!(quantile_ci(&w, 0.4, &t95).is_err());
    }

    #[test]
    fn minimal_window_density() {
        let ws = simulate_windows(&DistributionSpec::StandardNormal, 500, 250, 1, 1, SamplingMethod::BetaPivot, 45, 500).unwrap();
        for w in &ws {
            let f = density_estimate(w, 0.9).unwrap();
            assert!(f.estimate > 0.0 && f.estimate.is_finite());
        }
    }

    fn cfg(n: u64, level: f64, n_rep: u64, seed: u64) -> CoverageConfig {
        CoverageConfig { n, p: 0.5, r: 10, s: 10, level, n_rep, seed, mc_size: 200_000 }
    }

    #[test]
    fn coverage_at_nominal_levels() {
        let u = DistributionSpec::Uniform;
        let rep = coverage_experiment(&u, &cfg(10_000, 0.95, 4000, 46)).unwrap();
        assert!((0.935..=0.965).contains(&rep.coverage), "{rep:?}");
        assert!((rep.density_mean - 1.0).abs() < 0.02, "{rep:?}");
        let rep = coverage_experiment(&u, &cfg(10_000, 0.5, 4000, 47)).unwrap();
        assert!((0.475..=0.525).contains(&rep.coverage), "{rep:?}");
        assert!(coverage_experiment(&u, &cfg(10_000, 0.95, 0, 47)).is_err());
    }

    #[test]
    fn width_shrinks_like_root_n() {
        let u = DistributionSpec::Uniform;
        let a = coverage_experiment(&u, &cfg(2_500, 0.95, 2000, 48)).unwrap();
        let b = coverage_experiment(&u, &cfg(10_000, 0.95, 2000, 49)).unwrap();
        let ratio = a.mean_width / b.mean_width;
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    }

    proptest! {
        #![proptest_config(proptest_config(64))]

        #[test]
        fn density_identity(n in 100u64..100_000, r in 1u64..10, s in 1u64..10, base in -5.0f64..5.0, gaps in proptest::collection::vec(1e-4f64..1.0, 20)) {
            let mut values = vec![base];
            for g in gaps.iter().take((r + s) as usize) {
                values.push(values.last().unwrap() + g);
            }
            let k = n / 2;
            let w = uniform_window(values, n, k, r, s);
            let f = density_estimate(&w, 0.9).unwrap();
            prop_assert!((f.estimate * n as f64 * w.range() - (r + s - 1) as f64).abs() < 1e-9 * (r + s) as f64);
        }
    }
}
