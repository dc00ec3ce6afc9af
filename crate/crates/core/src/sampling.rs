//! Exact simulation of an order-statistic window `X_{k-s:n}, …, X_{k+r:n}`.
//!
//! Uniform order statistics are produced as `(U, 1 - U)` pairs so that the
//! upper tail keeps full relative precision, then mapped through the
//! parent's quantile function.

use crate::distributions::{CentralRegime, DistributionSpec, NormingConstants, Regime};
use crate::error::{Error, Result};
use crate::rng::{replicate_stream, Stream};
use crate::special::beta_quantile_pair;
use rand::Rng;
use rand_distr::{Exp1, Open01};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingMethod {
    /// Sort `n` uniforms; O(n log n) per replicate.
    FullSort,
    /// Malmquist ratios from the maximum downward; needs `k + r = n`.
    TopDown,
    /// Exact Beta marginal at the bottom of the window, then the conditional
    /// smallest uniforms above it.
    BetaPivot,
}

impl SamplingMethod {
    /// Cheapest exact method for the window.
    pub fn auto(n: u64, k: u64, r: u64) -> Self {
        if k + r == n {
            SamplingMethod::TopDown
        } else {
            SamplingMethod::BetaPivot
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSample {
    pub n: u64,
    pub k: u64,
    pub r: u64,
    pub s: u64,
    /// `X_{k-s:n}, …, X_{k+r:n}`.
    pub values: Vec<f64>,
    pub seed: u64,
    pub replicate: u64,
    pub method: SamplingMethod,
}

impl WindowSample {
    pub fn center(&self) -> f64 {
        self.values[self.s as usize]
    }

    /// `X_{i:n}` for `k - s ≤ i ≤ k + r`.
    pub fn at(&self, i: u64) -> Option<f64> {
        if i + self.s < self.k || i > self.k + self.r {
            return None;
        }
        Some(self.values[(i + self.s - self.k) as usize])
    }

    /// `X_{k+r:n} - X_{k-s:n}`.
    pub fn range(&self) -> f64 {
        self.values[self.values.len() - 1] - self.values[0]
    }
}

pub fn check_window(n: u64, k: u64, r: u64, s: u64) -> Result<()> {
    if n == 0 || k == 0 || s >= k || k + r > n {
        return Err(Error::domain(format!("window needs 1 ≤ k - s and k + r ≤ n (n = {n}, k = {k}, r = {r}, s = {s})")));
    }
    Ok(())
}

/// Draws one window of the order statistics of `n` iid draws from `dist`.
pub fn sample_window(
    dist: &DistributionSpec,
    n: u64,
    k: u64,
    r: u64,
    s: u64,
    method: SamplingMethod,
    rng: &mut Stream,
) -> Result<Vec<f64>> {
    check_window(n, k, r, s)?;
    let pairs = match method {
        SamplingMethod::FullSort => full_sort_uniforms(n, k, r, s, rng),
        SamplingMethod::TopDown => {
            if k + r != n {
                return Err(Error::Unsupported(format!("top-down sampling needs k + r = n, got {} < {n}", k + r)));
            }
            top_down_uniforms(n, r + s + 1, rng)
        }
        SamplingMethod::BetaPivot => beta_pivot_uniforms(n, k, r, s, rng),
    };
    Ok(pairs.into_iter().map(|(u, t)| dist.quantile_from_pair(u, t)).collect())
}

/// Simulates `n_rep` windows on independent replicate streams in parallel.
#[allow(clippy::too_many_arguments)]
pub fn simulate_windows(
    dist: &DistributionSpec,
    n: u64,
    k: u64,
    r: u64,
    s: u64,
    method: SamplingMethod,
    seed: u64,
    n_rep: u64,
) -> Result<Vec<WindowSample>> {
    check_window(n, k, r, s)?;
    (0..n_rep)
        .into_par_iter()
        .map(|i| {
            let mut rng = replicate_stream(seed, i);
            let values = sample_window(dist, n, k, r, s, method, &mut rng)?;
            Ok(WindowSample { n, k, r, s, values, seed, replicate: i, method })
        })
        .collect()
}

fn full_sort_uniforms(n: u64, k: u64, r: u64, s: u64, rng: &mut Stream) -> Vec<(f64, f64)> {
    let mut u: Vec<f64> = (0..n).map(|_| rng.sample(Open01)).collect();
    u.sort_unstable_by(f64::total_cmp);
    u[(k - s - 1) as usize..(k + r) as usize].iter().map(|&v| (v, 1.0 - v)).collect()
}

/// The top `m` uniform order statistics of `n`, in ascending order.
fn top_down_uniforms(n: u64, m: u64, rng: &mut Stream) -> Vec<(f64, f64)> {
    // ln U_{n-j:n} = ln U_{n-j+1:n} - E_j / (n - j)
    let mut log_u = 0.0_f64;
    let mut out = Vec::with_capacity(m as usize);
    for j in 0..m {
        let e: f64 = rng.sample(Exp1);
        log_u -= e / (n - j) as f64;
        out.push((log_u.exp(), -log_u.exp_m1()));
    }
    out.reverse();
    out
}

fn beta_pivot_uniforms(n: u64, k: u64, r: u64, s: u64, rng: &mut Stream) -> Vec<(f64, f64)> {
    let low = k - s;
    let u: f64 = rng.sample(Open01);
    let (v, tv) = beta_quantile_pair(low as f64, (n - low + 1) as f64, u);
    let mut out = Vec::with_capacity((r + s + 1) as usize);
    out.push((v, tv));
    // Given U_{low:n} = v the other n - low uniforms are iid on (v, 1); their
    // smallest order statistics are v + (1 - v) W with W the bottom order
    // statistics of m uniforms, generated as mirrored Malmquist ratios.
    let m = n - low;
    let mut log_gap = 0.0_f64;
    for j in 0..r + s {
        let e: f64 = rng.sample(Exp1);
        log_gap -= e / (m - j) as f64;
        let w = -log_gap.exp_m1();
        out.push((v + tv * w, tv * log_gap.exp()));
    }
    out
}

/// Center and adjacent spacings of a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpacingsVector {
    pub n: u64,
    pub k: u64,
    pub center: f64,
    /// `right[j-1] = X_{k+j:n} - X_{k+j-1:n}`.
    pub right: Vec<f64>,
    /// `left[j-1] = X_{k-j+1:n} - X_{k-j:n}`.
    pub left: Vec<f64>,
}

pub fn spacings(w: &WindowSample) -> SpacingsVector {
    let c = w.s as usize;
    let v = &w.values;
    SpacingsVector {
        n: w.n,
        k: w.k,
        center: v[c],
        right: (1..=w.r as usize).map(|j| v[c + j] - v[c + j - 1]).collect(),
        left: (1..=w.s as usize).map(|j| v[c - j + 1] - v[c - j]).collect(),
    }
}

impl SpacingsVector {
    /// Rebuilds the window by accumulating outward from the center.
    pub fn reconstruct(&self) -> Vec<f64> {
        let mut lower = Vec::with_capacity(self.left.len());
        let mut x = self.center;
        for d in &self.left {
            x -= d;
            lower.push(x);
        }
        lower.reverse();
        lower.push(self.center);
        let mut x = self.center;
        for d in &self.right {
            x += d;
            lower.push(x);
        }
        lower
    }
}

/// How to normalise a spacings vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    /// Finite positive density at `x_p`.
    CentralA,
    /// Power-law quantile behaviour `M|h|^θ` at `p`.
    CentralB,
    Intermediate,
    /// `per_rank` multiplies each spacing by its rank from the top, which
    /// makes the Gumbel-domain limits identically Exp(1).
    Extreme { per_rank: bool },
}

impl Scaling {
    pub fn regime(self) -> Regime {
        match self {
            Scaling::CentralA | Scaling::CentralB => Regime::Central,
            Scaling::Intermediate => Regime::Intermediate,
            Scaling::Extreme { .. } => Regime::Extreme,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Scaling::CentralA => "central-a",
            Scaling::CentralB => "central-b",
            Scaling::Intermediate => "intermediate",
            Scaling::Extreme { per_rank: false } => "extreme",
            Scaling::Extreme { per_rank: true } => "extreme-per-rank",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedWindow {
    pub center: f64,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
}

impl NormalizedWindow {
    /// Spacings in window order: left spacings from the outside in, then right.
    pub fn spacings_in_order(&self) -> Vec<f64> {
        self.left.iter().rev().chain(self.right.iter()).copied().collect()
    }
}

pub fn normalize(
    sv: &SpacingsVector,
    nc: &NormingConstants,
    scaling: Scaling,
    central: Option<&CentralRegime>,
) -> Result<NormalizedWindow> {
    if nc.regime != scaling.regime() {
        return Err(Error::domain(format!(
            "{} scaling given {:?} norming constants",
            scaling.label(),
            nc.regime
        )));
    }
    let scale = |d: &Vec<f64>, c: f64| d.iter().map(|x| x / c).collect::<Vec<f64>>();
    match scaling {
        Scaling::CentralA | Scaling::CentralB => {
            let c = central.ok_or_else(|| Error::domain("central scaling needs its CentralRegime"))?;
            if (scaling == Scaling::CentralA) != c.is_regular() {
                return Err(Error::domain(format!(
                    "{} scaling does not match theta = {}, f(x_p) = {}",
                    scaling.label(),
                    c.theta,
                    c.f_xp
                )));
            }
            let center = if scaling == Scaling::CentralA {
                (sv.center - nc.a_n) / nc.b_n
            } else {
                let t_n = nc.t_n.ok_or_else(|| Error::domain("central constants lack t_n"))?;
                ((sv.center - c.x_p) / c.m).abs().powf(1.0 / c.theta) / t_n
            };
            Ok(NormalizedWindow { center, left: scale(&sv.left, nc.c_n), right: scale(&sv.right, nc.c_n) })
        }
        Scaling::Intermediate => Ok(NormalizedWindow {
            center: (sv.center - nc.a_n) / nc.b_n,
            left: scale(&sv.left, nc.c_n),
            right: scale(&sv.right, nc.c_n),
        }),
        Scaling::Extreme { per_rank } => {
            let mut left = scale(&sv.left, nc.b_n);
            let mut right = scale(&sv.right, nc.b_n);
            if per_rank {
                // Rank from the top of the upper order statistic of each spacing.
                for (j, x) in right.iter_mut().enumerate() {
                    *x *= (sv.n - sv.k - j as u64) as f64;
                }
                for (j, x) in left.iter_mut().enumerate() {
                    *x *= (sv.n - sv.k + j as u64 + 1) as f64;
                }
            }
            Ok(NormalizedWindow { center: (sv.center - nc.a_n) / nc.b_n, left, right })
        }
    }
}

/// Writes replicate windows as CSV rows
/// `replicate,regime,n,k,r,s,center,left_1..left_s,right_1..right_r`,
/// preceded by a `#schema=1` comment line.
pub struct ReplicateCsv<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> ReplicateCsv<W> {
    pub fn new(mut out: W, r: u64, s: u64) -> Result<Self> {
        writeln!(out, "#schema=1")?;
        let mut inner = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header: Vec<String> = ["replicate", "regime", "n", "k", "r", "s", "center"].iter().map(|s| s.to_string()).collect();
        header.extend((1..=s).map(|j| format!("left_{j}")));
        header.extend((1..=r).map(|j| format!("right_{j}")));
        inner.write_record(&header)?;
        Ok(ReplicateCsv { inner })
    }

    pub fn write(&mut self, replicate: u64, regime: &str, sv: &SpacingsVector, r: u64, s: u64, values: &NormalizedWindow) -> Result<()> {
        let mut row = vec![
            replicate.to_string(),
            regime.to_string(),
            sv.n.to_string(),
            sv.k.to_string(),
            r.to_string(),
            s.to_string(),
            values.center.to_string(),
        ];
        row.extend(values.left.iter().map(f64::to_string));
        row.extend(values.right.iter().map(f64::to_string));
        self.inner.write_record(&row)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}
