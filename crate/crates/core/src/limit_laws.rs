//! Oracle samplers and cdfs for the limiting laws of normalised order
//! statistics and their spacings.
//!
//! Every W-vector is built from partial sums `S_i = Z₁ + … + Z_i` of unit
//! exponentials.

use crate::distributions::Domain;
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::special::{beta_reg_pair, gamma_cdf, harmonic, inverse_square_tail, normal_cdf, EULER_GAMMA};
use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LimitLaw {
    /// `m` independent unit exponentials.
    ExpIid { m: u32 },
    StdNormal,
    HalfNormal,
    Gamma { shape: f64 },
    /// `Z^θ`, whose cdf is `1 - exp(-x^{1/θ})`.
    PoweredExp { theta: f64 },
    /// cdf `1 - exp(-x^δ)`.
    Weibull { delta: f64 },
    #[serde(rename = "gumbel-w-vector", alias = "gumbel-W-vector")]
    GumbelWVector { j: u32 },
    #[serde(rename = "frechet-w-vector", alias = "frechet-W-vector")]
    FrechetWVector { alpha: f64, j: u32 },
    #[serde(rename = "weibull-w-vector", alias = "weibull-W-vector")]
    WeibullWVector { alpha: f64, j: u32 },
    /// `Z₁ + Z₂/2 + … + Z_j/j`, the maximum of `j` unit exponentials.
    ExpMax { j: u32 },
    /// Limit of `(X_{n-i+1:n} - X_{n-j+1:n})/b_n`, that is `W_i - W_j`.
    ExtremeSpacingPair {
        domain: Domain,
        #[serde(default)]
        alpha: Option<f64>,
        i: u32,
        j: u32,
    },
    /// The extreme-value cdf `G` of the domain.
    ExtremeValue {
        domain: Domain,
        #[serde(default)]
        alpha: Option<f64>,
    },
}

fn alpha_for(domain: Domain, alpha: Option<f64>) -> Result<f64> {
    match (domain, alpha) {
        (Domain::Gumbel, None) => Ok(1.0),
        (Domain::Gumbel, Some(a)) => Err(Error::domain(format!("gumbel law takes no alpha (got {a})"))),
        (Domain::Frechet | Domain::Weibull, Some(a)) if a > 0.0 && a.is_finite() => Ok(a),
        (Domain::Frechet | Domain::Weibull, _) => Err(Error::domain("frechet and weibull laws need alpha > 0")),
        (Domain::None, _) => Err(Error::domain("limit law needs a domain of attraction")),
    }
}

impl LimitLaw {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::domain(format!("{name} must be positive, got {v}")))
            }
        };
        let count = |name: &str, v: u32| if v >= 1 { Ok(()) } else { Err(Error::domain(format!("{name} must be ≥ 1"))) };
        match *self {
            LimitLaw::ExpIid { m } => count("m", m),
            LimitLaw::StdNormal | LimitLaw::HalfNormal => Ok(()),
            LimitLaw::Gamma { shape } => positive("shape", shape),
            LimitLaw::PoweredExp { theta } => positive("theta", theta),
            LimitLaw::Weibull { delta } => positive("delta", delta),
            LimitLaw::GumbelWVector { j } | LimitLaw::ExpMax { j } => count("j", j),
            LimitLaw::FrechetWVector { alpha, j } | LimitLaw::WeibullWVector { alpha, j } => {
                positive("alpha", alpha)?;
                count("j", j)
            }
            LimitLaw::ExtremeSpacingPair { domain, alpha, i, j } => {
                alpha_for(domain, alpha)?;
                count("i", i)?;
                if j <= i {
                    return Err(Error::domain(format!("spacing pair needs i < j, got i = {i}, j = {j}")));
                }
                Ok(())
            }
            LimitLaw::ExtremeValue { domain, alpha } => alpha_for(domain, alpha).map(|_| ()),
        }
    }

    /// Length of the vector returned by [`sample_limit`].
    pub fn dimension(&self) -> usize {
        match *self {
            LimitLaw::ExpIid { m } => m as usize,
            LimitLaw::GumbelWVector { j } | LimitLaw::FrechetWVector { j, .. } | LimitLaw::WeibullWVector { j, .. } => j as usize,
            _ => 1,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            LimitLaw::ExpIid { .. } => "exp-iid",
            LimitLaw::StdNormal => "std-normal",
            LimitLaw::HalfNormal => "half-normal",
            LimitLaw::Gamma { .. } => "gamma",
            LimitLaw::PoweredExp { .. } => "powered-exp",
            LimitLaw::Weibull { .. } => "weibull",
            LimitLaw::GumbelWVector { .. } => "gumbel-w-vector",
            LimitLaw::FrechetWVector { .. } => "frechet-w-vector",
            LimitLaw::WeibullWVector { .. } => "weibull-w-vector",
            LimitLaw::ExpMax { .. } => "exp-max",
            LimitLaw::ExtremeSpacingPair { .. } => "extreme-spacing-pair",
            LimitLaw::ExtremeValue { .. } => "extreme-value",
        }
    }
}

/// Parses `tag` or `tag:key=value,key=value`, e.g.
/// `frechet-w-vector:alpha=1,j=3` or `extreme-value:domain=gumbel`.
impl FromStr for LimitLaw {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (tag, params) = s.split_once(':').unwrap_or((s, ""));
        let mut obj = serde_json::Map::new();
        obj.insert("kind".into(), serde_json::Value::String(tag.trim().to_string()));
        for kv in params.split(',').filter(|p| !p.trim().is_empty()) {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::domain(format!("law parameter `{kv}` is not key=value")))?;
            let v = v.trim();
            let value = match v.parse::<f64>() {
                Ok(x) if k.trim() == "alpha" || k.trim() == "shape" || k.trim() == "theta" || k.trim() == "delta" => serde_json::json!(x),
                Ok(_) => serde_json::from_str(v).map_err(|_| Error::domain(format!("`{v}` is not a count")))?,
                Err(_) => serde_json::Value::String(v.to_string()),
            };
            obj.insert(k.trim().to_string(), value);
        }
        let law: LimitLaw =
            serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| Error::domain(format!("bad law `{s}`: {e}")))?;
        law.validate()?;
        Ok(law)
    }
}

fn partial_sums(j: u32, rng: &mut Stream) -> Vec<f64> {
    let mut s = 0.0;
    (0..j)
        .map(|_| {
            let z: f64 = rng.sample(Exp1);
            s += z;
            s
        })
        .collect()
}

/// One draw from `law`.
pub fn sample_limit(law: &LimitLaw, rng: &mut Stream) -> Result<Vec<f64>> {
    law.validate()?;
    Ok(match *law {
        LimitLaw::ExpIid { m } => (0..m).map(|_| rng.sample(Exp1)).collect(),
        LimitLaw::StdNormal => vec![rng.sample(StandardNormal)],
        LimitLaw::HalfNormal => vec![rng.sample::<f64, _>(StandardNormal).abs()],
        LimitLaw::Gamma { shape } => vec![Gamma::new(shape, 1.0).expect("validated").sample(rng)],
        LimitLaw::PoweredExp { theta } => vec![rng.sample::<f64, _>(Exp1).powf(theta)],
        LimitLaw::Weibull { delta } => vec![rng.sample::<f64, _>(Exp1).powf(1.0 / delta)],
        LimitLaw::GumbelWVector { j } => partial_sums(j, rng).into_iter().map(|s| -s.ln()).collect(),
        LimitLaw::FrechetWVector { alpha, j } => partial_sums(j, rng).into_iter().map(|s| s.powf(-1.0 / alpha)).collect(),
        LimitLaw::WeibullWVector { alpha, j } => partial_sums(j, rng).into_iter().map(|s| -s.powf(1.0 / alpha)).collect(),
        LimitLaw::ExpMax { j } => vec![(1..=j).map(|i| rng.sample::<f64, _>(Exp1) / i as f64).sum()],
        LimitLaw::ExtremeSpacingPair { domain, alpha, i, j } => {
            let a = alpha_for(domain, alpha)?;
            let s = partial_sums(j, rng);
            let (si, sj) = (s[i as usize - 1], s[j as usize - 1]);
            vec![match domain {
                Domain::Gumbel => sj.ln() - si.ln(),
                Domain::Frechet => si.powf(-1.0 / a) - sj.powf(-1.0 / a),
                Domain::Weibull => sj.powf(1.0 / a) - si.powf(1.0 / a),
                Domain::None => unreachable!(),
            }]
        }
        LimitLaw::ExtremeValue { domain, alpha } => {
            let a = alpha_for(domain, alpha)?;
            let z: f64 = rng.sample(Exp1);
            vec![match domain {
                Domain::Gumbel => -z.ln(),
                Domain::Frechet => z.powf(-1.0 / a),
                Domain::Weibull => -z.powf(1.0 / a),
                Domain::None => unreachable!(),
            }]
        }
    })
}

/// Closed-form cdf of a scalar law.
pub fn limit_cdf(law: &LimitLaw, x: f64) -> Result<f64> {
    law.validate()?;
    let exp_tail = |t: f64| if t <= 0.0 { 0.0 } else { -(-t).exp_m1() };
    match *law {
        LimitLaw::ExpIid { m: 1 } => Ok(exp_tail(x)),
        LimitLaw::StdNormal => Ok(normal_cdf(x)),
        LimitLaw::HalfNormal => Ok(if x <= 0.0 { 0.0 } else { 2.0 * normal_cdf(x) - 1.0 }),
        LimitLaw::Gamma { shape } => Ok(gamma_cdf(shape, x)),
        LimitLaw::PoweredExp { theta } => Ok(if x <= 0.0 { 0.0 } else { exp_tail(x.powf(1.0 / theta)) }),
        LimitLaw::Weibull { delta } => Ok(if x <= 0.0 { 0.0 } else { exp_tail(x.powf(delta)) }),
        LimitLaw::ExpMax { j } => Ok(exp_tail(x).powi(j as i32)),
        LimitLaw::ExtremeSpacingPair { domain: Domain::Gumbel, i, j, .. } => {
            // (j-i)-th order statistic of j-1 unit exponentials.
            if x <= 0.0 {
                return Ok(0.0);
            }
            let q = exp_tail(x);
            Ok(beta_reg_pair((j - i) as f64, i as f64, q, (-x).exp()).0)
        }
        LimitLaw::ExtremeSpacingPair { domain: Domain::Weibull, alpha: Some(a), i, j } if a == 1.0 => {
            Ok(gamma_cdf((j - i) as f64, x))
        }
        LimitLaw::ExtremeValue { domain, alpha } => {
            let a = alpha_for(domain, alpha)?;
            Ok(match domain {
                Domain::Gumbel => (-(-x).exp()).exp(),
                Domain::Frechet => {
                    if x <= 0.0 {
                        0.0
                    } else {
                        (-x.powf(-a)).exp()
                    }
                }
                Domain::Weibull => {
                    if x >= 0.0 {
                        1.0
                    } else {
                        (-(-x).powf(a)).exp()
                    }
                }
                Domain::None => unreachable!(),
            })
        }
        _ => Err(Error::Unsupported(format!("{} has no scalar cdf", law.tag()))),
    }
}

/// Number of explicit series terms before the tail block is drawn in one go.
const HALL_HEAD: u64 = 256;

/// Smallest `I` with `Σ_{i>I} 1/i² < 10⁻⁶`.
pub fn hall_truncation_index() -> u64 {
    let mut i = 999_000u64;
    while inverse_square_tail(i) >= 1e-6 {
        i += 1;
    }
    i
}

/// `Σ_{i=k}^{I} (Z_i - 1)/i + γ - H_{k-1}`, the series form of the k-th
/// Gumbel W component, truncated where the remaining variance is below 10⁻⁶.
///
/// The terms beyond the first few hundred are drawn jointly: for
/// `a ≤ I`, `Σ_{i=a}^{I} Z_i/i` has the law of the `(I-a+1)`-th order
/// statistic of `I` unit exponentials, i.e. `-ln B` with
/// `B ~ Beta(a, I-a+1)`.
pub fn hall_series_sample(k: u64, rng: &mut Stream) -> Result<f64> {
    if k == 0 {
        return Err(Error::domain("hall series index k must be ≥ 1"));
    }
    let big_i = hall_truncation_index();
    if k > big_i {
        return Err(Error::domain(format!("k = {k} exceeds the truncation index {big_i}")));
    }
    let a = (k + HALL_HEAD).min(big_i + 1);
    let mut sum = 0.0;
    for i in k..a {
        let z: f64 = rng.sample(Exp1);
        sum += z / i as f64;
    }
    if a <= big_i {
        let g1 = Gamma::new(a as f64, 1.0).expect("positive shape").sample(rng);
        let g2 = Gamma::new((big_i - a + 1) as f64, 1.0).expect("positive shape").sample(rng);
        sum += (g2 / g1).ln_1p();
    }
    // Σ_{i=k}^{I} (Z_i - 1)/i + γ - H_{k-1} = Σ_{i=k}^{I} Z_i/i - H_I + γ.
    Ok(sum - harmonic(big_i) + EULER_GAMMA)
}
