//! Parent distribution families.
//!
//! A [`DistributionSpec`] knows its quantile function, cdf, pdf and right-tail
//! metadata: which extreme-value domain of attraction it belongs to and the
//! constants needed to normalise order statistics in each regime.

use crate::error::{Error, Result};
use crate::quadrature;
use crate::special::{normal_cdf, normal_pdf, normal_quantile, normal_sf, normal_upper_quantile};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;
use std::sync::Arc;

/// A point of the extended real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    NegInfinity,
    Finite(f64),
    PosInfinity,
}

impl Bound {
    pub fn finite(self) -> Option<f64> {
        match self {
            Bound::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Value as a float, mapping the infinite tags to `±∞`. Only for
    /// comparisons; never feed the result into arithmetic.
    pub fn as_f64(self) -> f64 {
        match self {
            Bound::NegInfinity => f64::NEG_INFINITY,
            Bound::Finite(v) => v,
            Bound::PosInfinity => f64::INFINITY,
        }
    }
}

/// Support endpoints `(x₀, x₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub lower: Bound,
    pub upper: Bound,
}

impl Support {
    fn finite(lower: f64, upper: f64) -> Self {
        Support { lower: Bound::Finite(lower), upper: Bound::Finite(upper) }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower.as_f64() && x <= self.upper.as_f64()
    }
}

/// Extreme-value domain of attraction of the right tail.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    Frechet,
    Weibull,
    Gumbel,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainInfo {
    pub domain: Domain,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
}

impl DomainInfo {
    pub fn new(domain: Domain, alpha: Option<f64>) -> Result<Self> {
        let needs_alpha = matches!(domain, Domain::Frechet | Domain::Weibull);
        match alpha {
            Some(a) if !needs_alpha => Err(Error::domain(format!("{domain:?} domain takes no alpha (got {a})"))),
            None if needs_alpha => Err(Error::domain(format!("{domain:?} domain requires alpha"))),
            Some(a) if !(a > 0.0 && a.is_finite()) => Err(Error::domain(format!("alpha must be positive, got {a}"))),
            _ => Ok(DomainInfo { domain, alpha }),
        }
    }

    pub fn frechet(alpha: f64) -> Self {
        DomainInfo { domain: Domain::Frechet, alpha: Some(alpha) }
    }

    pub fn weibull(alpha: f64) -> Self {
        DomainInfo { domain: Domain::Weibull, alpha: Some(alpha) }
    }

    pub fn gumbel() -> Self {
        DomainInfo { domain: Domain::Gumbel, alpha: None }
    }

    pub fn none() -> Self {
        DomainInfo { domain: Domain::None, alpha: None }
    }
}

/// Tabulated quantile function with monotone (Fritsch–Carlson) cubic
/// interpolation between knots.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    u: Vec<f64>,
    q: Vec<f64>,
    slopes: Vec<f64>,
}

impl QuantileTable {
    pub fn new(u: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if u.len() != q.len() || u.len() < 2 {
            return Err(Error::domain("quantile table needs at least two (u, q) rows"));
        }
        if u.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::domain("quantile table probabilities must lie in [0, 1]"));
        }
        if u.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("quantile table probabilities must be strictly increasing"));
        }
        if q.iter().any(|v| !v.is_finite()) || q.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::domain("quantile table values must be finite and nondecreasing"));
        }
        let n = u.len();
        let secants: Vec<f64> = (0..n - 1).map(|i| (q[i + 1] - q[i]) / (u[i + 1] - u[i])).collect();
        let mut slopes = vec![0.0; n];
        slopes[0] = secants[0];
        slopes[n - 1] = secants[n - 2];
        for i in 1..n - 1 {
            slopes[i] = if secants[i - 1] * secants[i] <= 0.0 { 0.0 } else { 0.5 * (secants[i - 1] + secants[i]) };
        }
        for i in 0..n - 1 {
            if secants[i] == 0.0 {
                slopes[i] = 0.0;
                slopes[i + 1] = 0.0;
                continue;
            }
            let a = slopes[i] / secants[i];
            let b = slopes[i + 1] / secants[i];
            let h = a * a + b * b;
            if h > 9.0 {
                let t = 3.0 / h.sqrt();
                slopes[i] = t * a * secants[i];
                slopes[i + 1] = t * b * secants[i];
            }
        }
        Ok(QuantileTable { u, q, slopes })
    }

    /// Reads a two-column CSV of `(u, F⁻¹(u))` rows. A header row is optional.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_path(path)?;
        let mut u = Vec::new();
        let mut q = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            if record.len() != 2 {
                return Err(Error::domain(format!("row {} of {} must have two columns", line + 1, path.display())));
            }
            let parsed = (record[0].trim().parse::<f64>(), record[1].trim().parse::<f64>());
            match parsed {
                (Ok(a), Ok(b)) => {
                    u.push(a);
                    q.push(b);
                }
                _ if line == 0 => continue,
                _ => return Err(Error::domain(format!("row {} of {} is not numeric", line + 1, path.display()))),
            }
        }
        QuantileTable::new(u, q)
    }

    pub fn eval(&self, p: f64) -> f64 {
        let n = self.u.len();
        if p <= self.u[0] {
            return self.q[0];
        }
        if p >= self.u[n - 1] {
            return self.q[n - 1];
        }
        let i = self.u.partition_point(|&v| v <= p) - 1;
        let h = self.u[i + 1] - self.u[i];
        let t = (p - self.u[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.q[i]
            + (t3 - 2.0 * t2 + t) * h * self.slopes[i]
            + (-2.0 * t3 + 3.0 * t2) * self.q[i + 1]
            + (t3 - t2) * h * self.slopes[i + 1]
    }
}

type QuantileFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A family given only through its quantile function.
#[derive(Clone)]
pub struct UserQuantile {
    name: String,
    quantile: Arc<QuantileFn>,
    domain: DomainInfo,
}

impl UserQuantile {
    pub fn new<F>(name: impl Into<String>, quantile: F, domain: DomainInfo) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        UserQuantile { name: name.into(), quantile: Arc::new(quantile), domain }
    }

    pub fn from_table(name: impl Into<String>, table: QuantileTable, domain: DomainInfo) -> Self {
        UserQuantile::new(name, move |u| table.eval(u), domain)
    }
}

impl fmt::Debug for UserQuantile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UserQuantile").field("name", &self.name).field("domain", &self.domain).finish()
    }
}

/// Parent distribution `F`.
#[derive(Debug, Clone)]
pub enum DistributionSpec {
    Uniform,
    Exponential { lambda: f64 },
    StandardNormal,
    Pareto { alpha: f64 },
    /// `F(x) = 1 - (x₁ - x)^α` on `[x₁ - 1, x₁]`; Weibull domain with index α.
    BoundedWeibullTail { alpha: f64, x1: f64 },
    /// Density `(η + 1)|x|^η / 2` on `[-1, 1]`.
    Chanda { eta: f64 },
    UserDefined(UserQuantile),
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_prob(u: f64) -> Result<()> {
    if (0.0..=1.0).contains(&u) {
        Ok(())
    } else {
        Err(Error::domain(format!("probability {u} outside [0, 1]")))
    }
}

impl DistributionSpec {
    pub fn exponential(lambda: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        Ok(DistributionSpec::Exponential { lambda })
    }

    pub fn pareto(alpha: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        Ok(DistributionSpec::Pareto { alpha })
    }

    pub fn bounded_weibull_tail(alpha: f64, x1: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        if !x1.is_finite() {
            return Err(Error::domain("x1 must be finite"));
        }
        Ok(DistributionSpec::BoundedWeibullTail { alpha, x1 })
    }

    pub fn chanda(eta: f64) -> Result<Self> {
        if !(eta > -1.0 && eta.is_finite()) {
            return Err(Error::domain(format!("eta must exceed -1, got {eta}")));
        }
        Ok(DistributionSpec::Chanda { eta })
    }

    pub fn name(&self) -> String {
        match self {
            DistributionSpec::Uniform => "uniform".into(),
            DistributionSpec::Exponential { lambda } => format!("exponential({lambda})"),
            DistributionSpec::StandardNormal => "standard-normal".into(),
            DistributionSpec::Pareto { alpha } => format!("pareto({alpha})"),
            DistributionSpec::BoundedWeibullTail { alpha, x1 } => format!("bounded-weibull-tail({alpha}, {x1})"),
            DistributionSpec::Chanda { eta } => format!("chanda({eta})"),
            DistributionSpec::UserDefined(u) => format!("user-defined({})", u.name),
        }
    }

    pub fn support(&self) -> Support {
        match self {
            DistributionSpec::Uniform => Support::finite(0.0, 1.0),
            DistributionSpec::Exponential { .. } => Support { lower: Bound::Finite(0.0), upper: Bound::PosInfinity },
            DistributionSpec::StandardNormal => Support { lower: Bound::NegInfinity, upper: Bound::PosInfinity },
            DistributionSpec::Pareto { .. } => Support { lower: Bound::Finite(1.0), upper: Bound::PosInfinity },
            DistributionSpec::BoundedWeibullTail { x1, .. } => Support::finite(x1 - 1.0, *x1),
            DistributionSpec::Chanda { .. } => Support::finite(-1.0, 1.0),
            DistributionSpec::UserDefined(u) => {
                let tag = |v: f64| {
                    if v == f64::INFINITY {
                        Bound::PosInfinity
                    } else if v == f64::NEG_INFINITY {
                        Bound::NegInfinity
                    } else {
                        Bound::Finite(v)
                    }
                };
                Support { lower: tag((u.quantile)(0.0)), upper: tag((u.quantile)(1.0)) }
            }
        }
    }

    /// Declared domain of attraction of the right tail.
    pub fn domain(&self) -> DomainInfo {
        match self {
            DistributionSpec::Uniform => DomainInfo::weibull(1.0),
            DistributionSpec::Exponential { .. } | DistributionSpec::StandardNormal => DomainInfo::gumbel(),
            DistributionSpec::Pareto { alpha } => DomainInfo::frechet(*alpha),
            DistributionSpec::BoundedWeibullTail { alpha, .. } => DomainInfo::weibull(*alpha),
            // f(1) = (η + 1)/2 is finite and positive.
            DistributionSpec::Chanda { .. } => DomainInfo::weibull(1.0),
            DistributionSpec::UserDefined(u) => u.domain,
        }
    }

    /// Quantile function `F⁻¹(u)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        check_prob(u)?;
        Ok(self.quantile_unchecked(u))
    }

    pub(crate) fn quantile_unchecked(&self, u: f64) -> f64 {
        match self {
            DistributionSpec::Uniform => u,
            DistributionSpec::Exponential { lambda } => -(-u).ln_1p() / lambda,
            DistributionSpec::StandardNormal => normal_quantile(u),
            DistributionSpec::Pareto { alpha } => (1.0 - u).powf(-1.0 / alpha),
            DistributionSpec::BoundedWeibullTail { alpha, x1 } => x1 - (1.0 - u).powf(1.0 / alpha),
            DistributionSpec::Chanda { eta } => {
                let e = 1.0 / (eta + 1.0);
                if u <= 0.5 {
                    -(1.0 - 2.0 * u).powf(e)
                } else {
                    (2.0 * u - 1.0).powf(e)
                }
            }
            DistributionSpec::UserDefined(q) => (q.quantile)(u),
        }
    }

    /// `F⁻¹(1 - t)` computed from the tail probability `t`, keeping full
    /// relative precision for extreme upper quantiles.
    pub fn upper_quantile(&self, t: f64) -> Result<f64> {
        check_prob(t)?;
        Ok(self.upper_quantile_unchecked(t))
    }

    pub(crate) fn upper_quantile_unchecked(&self, t: f64) -> f64 {
        match self {
            DistributionSpec::Uniform => 1.0 - t,
            DistributionSpec::Exponential { lambda } => -t.ln() / lambda,
            DistributionSpec::StandardNormal => normal_upper_quantile(t),
            DistributionSpec::Pareto { alpha } => t.powf(-1.0 / alpha),
            DistributionSpec::BoundedWeibullTail { alpha, x1 } => x1 - t.powf(1.0 / alpha),
            DistributionSpec::Chanda { eta } => {
                let e = 1.0 / (eta + 1.0);
                if t <= 0.5 {
                    (1.0 - 2.0 * t).powf(e)
                } else {
                    -(2.0 * t - 1.0).powf(e)
                }
            }
            DistributionSpec::UserDefined(q) => (q.quantile)(1.0 - t),
        }
    }

    /// `x₁ - F⁻¹(1 - t)` for families with a finite right endpoint.
    pub fn upper_gap(&self, t: f64) -> Option<f64> {
        match self {
            DistributionSpec::Uniform => Some(t),
            DistributionSpec::BoundedWeibullTail { alpha, .. } => Some(t.powf(1.0 / alpha)),
            DistributionSpec::Chanda { eta } if t <= 0.5 => Some(-((-2.0 * t).ln_1p() / (eta + 1.0)).exp_m1()),
            _ => {
                let x1 = self.support().upper.finite()?;
                Some(x1 - self.upper_quantile_unchecked(t))
            }
        }
    }

    /// Maps a uniform point given as `(u, 1 - u)` through the quantile
    /// function, using whichever representation is more precise.
    pub fn quantile_from_pair(&self, u: f64, t: f64) -> f64 {
        if u <= 0.5 {
            self.quantile_unchecked(u)
        } else {
            self.upper_quantile_unchecked(t)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            DistributionSpec::Uniform => x.clamp(0.0, 1.0),
            DistributionSpec::Exponential { lambda } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-lambda * x).exp_m1()
                }
            }
            DistributionSpec::StandardNormal => normal_cdf(x),
            DistributionSpec::UserDefined(_) => self.user_cdf(x),
            _ => 1.0 - self.sf(x),
        }
    }

    /// Survival function `1 - F(x)`.
    pub fn sf(&self, x: f64) -> f64 {
        match self {
            DistributionSpec::Uniform => 1.0 - x.clamp(0.0, 1.0),
            DistributionSpec::Exponential { lambda } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-lambda * x).exp()
                }
            }
            DistributionSpec::StandardNormal => normal_sf(x),
            DistributionSpec::Pareto { alpha } => {
                if x <= 1.0 {
                    1.0
                } else {
                    x.powf(-alpha)
                }
            }
            DistributionSpec::BoundedWeibullTail { alpha, x1 } => {
                if x >= *x1 {
                    0.0
                } else if x <= x1 - 1.0 {
                    1.0
                } else {
                    (x1 - x).powf(*alpha)
                }
            }
            DistributionSpec::Chanda { eta } => {
                let x = x.clamp(-1.0, 1.0);
                0.5 - 0.5 * x.signum() * x.abs().powf(eta + 1.0)
            }
            DistributionSpec::UserDefined(_) => 1.0 - self.user_cdf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            DistributionSpec::Uniform => {
                if (0.0..=1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            DistributionSpec::Exponential { lambda } => {
                if x < 0.0 {
                    0.0
                } else {
                    lambda * (-lambda * x).exp()
                }
            }
            DistributionSpec::StandardNormal => normal_pdf(x),
            DistributionSpec::Pareto { alpha } => {
                if x < 1.0 {
                    0.0
                } else {
                    alpha * x.powf(-alpha - 1.0)
                }
            }
            DistributionSpec::BoundedWeibullTail { alpha, x1 } => {
                if x > *x1 || x < x1 - 1.0 {
                    0.0
                } else {
                    alpha * (x1 - x).powf(alpha - 1.0)
                }
            }
            DistributionSpec::Chanda { eta } => {
                if x.abs() > 1.0 {
                    0.0
                } else {
                    0.5 * (eta + 1.0) * x.abs().powf(*eta)
                }
            }
            DistributionSpec::UserDefined(_) => {
                let h = 1e-6_f64.max(1e-6 * x.abs());
                ((self.user_cdf(x + h) - self.user_cdf(x - h)) / (2.0 * h)).max(0.0)
            }
        }
    }

    /// `(pdf(x), cdf(x))`.
    pub fn density_cdf(&self, x: f64) -> (f64, f64) {
        (self.pdf(x), self.cdf(x))
    }

    /// Inverts the user quantile function by bisection on `u`.
    fn user_cdf(&self, x: f64) -> f64 {
        let DistributionSpec::UserDefined(q) = self else { unreachable!() };
        let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
        if x < (q.quantile)(0.0) {
            return 0.0;
        }
        if x >= (q.quantile)(1.0) {
            return 1.0;
        }
        while hi - lo > 1e-12 {
            let mid = 0.5 * (lo + hi);
            if (q.quantile)(mid) <= x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Mean residual life `m(x) = E(X - x | X > x)`.
    pub fn mean_residual(&self, x: f64) -> Result<f64> {
        if x >= self.support().upper.as_f64() || self.sf(x) <= 0.0 {
            return Err(Error::domain(format!("mean residual life needs F({x}) < 1")));
        }
        match self {
            DistributionSpec::Uniform => Ok(if x < 0.0 { 0.5 - x } else { 0.5 * (1.0 - x) }),
            DistributionSpec::Exponential { lambda } => Ok(if x < 0.0 { 1.0 / lambda - x } else { 1.0 / lambda }),
            DistributionSpec::StandardNormal => Ok(normal_mean_residual(x)),
            DistributionSpec::Pareto { alpha } => {
                if *alpha <= 1.0 {
                    Err(Error::Divergent(format!("pareto({alpha}) has no finite tail mean")))
                } else if x < 1.0 {
                    Ok(alpha / (alpha - 1.0) - x)
                } else {
                    Ok(x / (alpha - 1.0))
                }
            }
            DistributionSpec::BoundedWeibullTail { alpha, x1 } => {
                if x < x1 - 1.0 {
                    Ok(x1 - 1.0 / (alpha + 1.0) - x)
                } else {
                    Ok((x1 - x) / (alpha + 1.0))
                }
            }
            _ => self.mean_residual_quadrature(x),
        }
    }

    /// `∫ₓ^{x₁} (1 - F(t)) dt / (1 - F(x))` by adaptive quadrature, with the
    /// upper limit truncated at `F⁻¹(1 - 10⁻¹²)` for unbounded supports.
    pub fn mean_residual_quadrature(&self, x: f64) -> Result<f64> {
        let tail = self.sf(x);
        if tail <= 0.0 {
            return Err(Error::domain(format!("mean residual life needs F({x}) < 1")));
        }
        let upper = match self.support().upper {
            Bound::Finite(v) => v,
            _ => self.upper_quantile_unchecked(1e-12),
        };
        let lower = match self.support().lower {
            Bound::Finite(v) => x.max(v),
            _ => x,
        };
        let below = lower - x;
        let integral = quadrature::integrate(|t| self.sf(t), lower, upper, 0.0, 1e-10)?;
        let m = below + integral / tail;
        if !m.is_finite() {
            return Err(Error::Divergent(format!("tail integral of {} diverges", self.name())));
        }
        Ok(m)
    }

    /// Right-tail ratio limit `β(d) = lim F̄(x + d)/F̄(x)` as `x → x₁`.
    /// Defined only for unbounded exponential-type tails where the limit is
    /// strictly between 0 and 1.
    pub fn tail_ratio_limit(&self, d: f64) -> Option<f64> {
        match self {
            DistributionSpec::Exponential { lambda } if d > 0.0 => Some((-lambda * d).exp()),
            _ => None,
        }
    }

    /// A-priori annotation: whether `F⁻¹` is regular enough around `p` for
    /// the quantile increments at nearby levels to be asymptotically equal.
    pub fn quantile_locally_regular(&self, p: f64) -> bool {
        match self {
            DistributionSpec::Chanda { eta } => !(p == 0.5 && *eta != 0.0),
            _ => true,
        }
    }

    /// Local behaviour of the quantile function at level `p`.
    pub fn central_regime(&self, p: f64) -> Result<CentralRegime> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("central level p must be in (0, 1), got {p}")));
        }
        let x_p = self.quantile_unchecked(p);
        match self {
            DistributionSpec::Chanda { eta } if p == 0.5 && *eta != 0.0 => {
                let theta = 1.0 / (eta + 1.0);
                let f_xp = if *eta > 0.0 { 0.0 } else { f64::INFINITY };
                CentralRegime::new(p, x_p, f_xp, theta, 2f64.powf(theta))
            }
            _ => {
                let f_xp = self.pdf(x_p);
                if !(f_xp > 0.0 && f_xp.is_finite()) {
                    return Err(Error::Degenerate(format!("f(x_p) = {f_xp} at p = {p}")));
                }
                CentralRegime::new(p, x_p, f_xp, 1.0, 1.0 / f_xp)
            }
        }
    }
}

fn normal_mean_residual(x: f64) -> f64 {
    if x < 30.0 {
        normal_pdf(x) / normal_sf(x) - x
    } else {
        // Mills-ratio expansion; the direct ratio underflows beyond here.
        let inv2 = 1.0 / (x * x);
        (1.0 - inv2 * (2.0 - inv2 * (10.0 - 74.0 * inv2))) / x
    }
}

/// Behaviour of `F⁻¹` at a central level `p`: `|F⁻¹(p + h) - F⁻¹(p)| ~ M |h|^θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CentralRegime {
    pub p: f64,
    pub x_p: f64,
    pub f_xp: f64,
    pub theta: f64,
    pub m: f64,
}

impl CentralRegime {
    pub fn new(p: f64, x_p: f64, f_xp: f64, theta: f64, m: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!("p must be in (0, 1), got {p}")));
        }
        if !(f_xp >= 0.0) {
            return Err(Error::domain(format!("f(x_p) must be nonnegative, got {f_xp}")));
        }
        positive("theta", theta)?;
        positive("M", m)?;
        if theta == 1.0 && f_xp > 0.0 && f_xp.is_finite() && ((m * f_xp) - 1.0).abs() > 1e-12 {
            return Err(Error::domain("theta = 1 requires M = 1/f(x_p)"));
        }
        Ok(CentralRegime { p, x_p, f_xp, theta, m })
    }

    /// Whether the spacings scale linearly (finite positive density at `x_p`).
    pub fn is_regular(&self) -> bool {
        self.theta == 1.0 && self.f_xp > 0.0 && self.f_xp.is_finite()
    }
}

/// von Mises ratio for the declared domain; tends to α (Fréchet, Weibull)
/// or 1 (Gumbel) as `x → x₁`.
pub fn von_mises_diagnostic(dist: &DistributionSpec, domain: DomainInfo, x: f64) -> Result<f64> {
    let support = dist.support();
    if !support.contains(x) {
        return Err(Error::domain(format!("x = {x} lies outside the support")));
    }
    let tail = dist.sf(x);
    if tail <= 0.0 {
        return Err(Error::domain(format!("F({x}) = 1")));
    }
    let f = dist.pdf(x);
    match domain.domain {
        Domain::Frechet => Ok(x * f / tail),
        Domain::Weibull => {
            let gap = match support.upper {
                Bound::Finite(x1) => x1 - x,
                _ => return Err(Error::Unsupported("Weibull ratio needs a finite right endpoint".into())),
            };
            Ok(gap * f / tail)
        }
        Domain::Gumbel => Ok(f * dist.mean_residual(x)? / tail),
        Domain::None => Err(Error::Unsupported("no domain of attraction declared".into())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Central,
    Intermediate,
    Extreme,
}

/// Centering and scaling sequences for a given `(n, k)` and regime.
///
/// `a_n`/`b_n` normalise `X_{k:n}`; `c_n` scales the adjacent spacings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormingConstants {
    pub regime: Regime,
    pub a_n: f64,
    pub b_n: f64,
    pub c_n: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_n: Option<f64>,
}

pub fn norming_constants(
    dist: &DistributionSpec,
    n: u64,
    k: u64,
    regime: Regime,
    central: Option<&CentralRegime>,
) -> Result<NormingConstants> {
    if n == 0 || k == 0 || k > n {
        return Err(Error::domain(format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
    }
    let nf = n as f64;
    match regime {
        Regime::Central => {
            let c = central.ok_or_else(|| Error::domain("central regime needs its CentralRegime"))?;
            if k == 1 || k == n {
                return Err(Error::domain("central regime needs 1 < k < n"));
            }
            let t_n = (c.p * (1.0 - c.p) / nf).sqrt();
            if c.is_regular() {
                let c_n = 1.0 / (nf * c.f_xp);
                Ok(NormingConstants { regime, a_n: c.x_p, b_n: t_n / c.f_xp, c_n, t_n: Some(t_n) })
            } else if c.theta == 1.0 {
                Err(Error::Degenerate(format!("f(x_p) = {} with theta = 1", c.f_xp)))
            } else {
                let c_n = c.m / nf.powf(c.theta);
                Ok(NormingConstants { regime, a_n: c.x_p, b_n: c.m * t_n.powf(c.theta), c_n, t_n: Some(t_n) })
            }
        }
        Regime::Intermediate => {
            if k == n {
                return Err(Error::domain("intermediate regime needs k < n"));
            }
            let a_n = dist.quantile_from_pair(k as f64 / nf, (n - k) as f64 / nf);
            let f = dist.pdf(a_n);
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Degenerate(format!("f(a_n) = {f} at a_n = {a_n}")));
            }
            let c_n = 1.0 / (nf * f);
            Ok(NormingConstants { regime, a_n, b_n: c_n * ((n - k) as f64).sqrt(), c_n, t_n: None })
        }
        Regime::Extreme => {
            let info = dist.domain();
            let t = 1.0 / nf;
            let (a_n, b_n) = match info.domain {
                Domain::Frechet => (0.0, dist.upper_quantile_unchecked(t)),
                Domain::Weibull => {
                    let x1 = dist
                        .support()
                        .upper
                        .finite()
                        .ok_or_else(|| Error::Unsupported("Weibull domain needs a finite x1".into()))?;
                    (x1, dist.upper_gap(t).expect("finite endpoint"))
                }
                Domain::Gumbel => {
                    let a_n = dist.upper_quantile_unchecked(t);
                    (a_n, dist.mean_residual(a_n)?)
                }
                Domain::None => return Err(Error::Unsupported("extreme regime needs a domain of attraction".into())),
            };
            if !(b_n > 0.0 && b_n.is_finite()) {
                return Err(Error::Degenerate(format!("b_n = {b_n}")));
            }
            Ok(NormingConstants { regime, a_n, b_n, c_n: b_n, t_n: None })
        }
    }
}

/// Serializable description of a parent distribution, as used in experiment
/// configs: `{"family": "pareto", "params": {"alpha": 2}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "kebab-case")]
pub enum DistConfig {
    Uniform,
    Exponential {
        lambda: f64,
    },
    StandardNormal,
    Pareto {
        alpha: f64,
    },
    BoundedWeibullTail {
        alpha: f64,
        x1: f64,
    },
    Chanda {
        eta: f64,
    },
    /// Quantile function tabulated in a two-column CSV `(u, F⁻¹(u))`.
    UserDefinedViaQuantile {
        csv: String,
        #[serde(default = "DomainInfo::none")]
        domain: DomainInfo,
    },
}

impl DistConfig {
    pub fn build(&self) -> Result<DistributionSpec> {
        match self {
            DistConfig::Uniform => Ok(DistributionSpec::Uniform),
            DistConfig::Exponential { lambda } => DistributionSpec::exponential(*lambda),
            DistConfig::StandardNormal => Ok(DistributionSpec::StandardNormal),
            DistConfig::Pareto { alpha } => DistributionSpec::pareto(*alpha),
            DistConfig::BoundedWeibullTail { alpha, x1 } => DistributionSpec::bounded_weibull_tail(*alpha, *x1),
            DistConfig::Chanda { eta } => DistributionSpec::chanda(*eta),
            DistConfig::UserDefinedViaQuantile { csv, domain } => {
                let domain = DomainInfo::new(domain.domain, domain.alpha)?;
                let table = QuantileTable::from_csv(Path::new(csv))?;
                Ok(DistributionSpec::UserDefined(UserQuantile::from_table(csv.clone(), table, domain)))
            }
        }
    }
}
