//! Config-driven experiments: simulate replicate windows, run the tests that
//! go with the regime and write a JSON report (plus raw CSV on request).

use crate::counts::{count_in_window, count_limit_pmf, duality_check, CountLimitLaw, CountRecord};
use crate::distributions::{norming_constants, DistConfig, DistributionSpec, Domain, NormingConstants, Regime};
use crate::error::{Error, Result};
use crate::inference::{coverage_experiment, CoverageConfig};
use crate::limit_laws::{limit_cdf, sample_limit, LimitLaw};
use crate::rng::{derive_seed, replicate_stream};
use crate::sampling::{normalize, simulate_windows, spacings, NormalizedWindow, ReplicateCsv, SamplingMethod, Scaling, SpacingsVector};
use crate::stats_tests::{discrete_gof, histogram, independence_check, ks_one_sample, ks_two_sample, TestReport};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

/// Goodness-of-fit tests pass when `p > ALPHA`.
pub const ALPHA: f64 = 0.01;
/// Independence holds when `|z| < Z_INDEPENDENT`.
pub const Z_INDEPENDENT: f64 = 3.0;
/// Dependence is detected when `|z| > Z_DEPENDENT`.
pub const Z_DEPENDENT: f64 = 5.0;
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    CentralSpacings,
    CentralJoint,
    IntermediateSpacings,
    ExtremeWindow,
    Counts,
    InferenceCoverage,
    OracleDump,
}

impl ExperimentKind {
    fn name(self) -> &'static str {
        match self {
            ExperimentKind::CentralSpacings => "central-spacings",
            ExperimentKind::CentralJoint => "central-joint",
            ExperimentKind::IntermediateSpacings => "intermediate-spacings",
            ExperimentKind::ExtremeWindow => "extreme-window",
            ExperimentKind::Counts => "counts",
            ExperimentKind::InferenceCoverage => "inference-coverage",
            ExperimentKind::OracleDump => "oracle-dump",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

/// One experiment, as read from a JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dist: Option<DistConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_replicates: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_lambda: Option<f64>,
    /// Regime used to scale `d` in count experiments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regime: Option<Regime>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mc_size: Option<u64>,
    /// Multiply extreme spacings by their rank from the top.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_rank: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<SamplingMethod>,
    /// Limit law tag for `oracle-dump`, e.g. `frechet-w-vector:alpha=1,j=3`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub law: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<OutputFormat>,
}

fn required<T: Copy>(v: Option<T>, field: &str, kind: ExperimentKind) -> Result<T> {
    v.ok_or_else(|| Error::config(field, format!("required by experiment {}", kind.name())))
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            dist: None,
            n: None,
            k: None,
            p: None,
            r: None,
            s: None,
            n_replicates: None,
            seed: None,
            d_lambda: None,
            regime: None,
            level: None,
            mc_size: None,
            per_rank: None,
            method: None,
            law: None,
            output: None,
            format: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg.split('`').nth(1).unwrap_or("config").to_string();
            Error::Config { field, reason: msg }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn dist(&self) -> Result<DistributionSpec> {
        self.dist
            .as_ref()
            .ok_or_else(|| Error::config("dist", format!("required by experiment {}", self.experiment.name())))?
            .build()
            .map_err(|e| Error::config("dist", e.to_string()))
    }

    fn n_rep(&self) -> Result<u64> {
        let n = required(self.n_replicates, "n_replicates", self.experiment)?;
        if n == 0 {
            return Err(Error::config("n_replicates", "must be at least 1"));
        }
        Ok(n)
    }

    /// `k` as given, or `round(n p)`.
    fn k_from_p(&self, n: u64) -> Result<u64> {
        match (self.k, self.p) {
            (Some(k), _) => Ok(k),
            (None, Some(p)) if p > 0.0 && p < 1.0 => Ok((n as f64 * p).round() as u64),
            (None, Some(p)) => Err(Error::config("p", format!("must lie in (0, 1), got {p}"))),
            (None, None) => Err(Error::config("k", format!("k or p is required by experiment {}", self.experiment.name()))),
        }
    }

    /// Checks that every field the experiment needs is present and sane.
    pub fn validate(&self) -> Result<()> {
        let kind = self.experiment;
        if kind == ExperimentKind::OracleDump {
            let law = self.law.as_deref().ok_or_else(|| Error::config("law", "required by experiment oracle-dump"))?;
            law.parse::<LimitLaw>().map_err(|e| Error::config("law", e.to_string()))?;
            self.n_rep()?;
            return Ok(());
        }
        self.dist()?;
        let n = required(self.n, "n", kind)?;
        if n == 0 {
            return Err(Error::config("n", "must be at least 1"));
        }
        self.n_rep()?;
        let k = match kind {
            ExperimentKind::IntermediateSpacings | ExperimentKind::ExtremeWindow => required(self.k, "k", kind)?,
            ExperimentKind::InferenceCoverage => {
                required(self.p, "p", kind)?;
                self.k_from_p(n)?
            }
            _ => self.k_from_p(n)?,
        };
        if k == 0 || k > n {
            return Err(Error::config("k", format!("need 1 ≤ k ≤ n, got k = {k}, n = {n}")));
        }
        let s = required(self.s, "s", kind)?;
        let r = match kind {
            ExperimentKind::ExtremeWindow => self.r.unwrap_or(n - k),
            _ => required(self.r, "r", kind)?,
        };
        if s >= k {
            return Err(Error::config("s", format!("need s < k, got s = {s}, k = {k}")));
        }
        if k + r > n {
            return Err(Error::config("r", format!("need k + r ≤ n, got k + r = {}, n = {n}", k + r)));
        }
        if r + s == 0 {
            return Err(Error::config("r", "window needs at least one spacing (r + s ≥ 1)"));
        }
        if kind == ExperimentKind::Counts {
            let d = required(self.d_lambda, "d_lambda", kind)?;
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::config("d_lambda", format!("must be positive, got {d}")));
            }
            required(self.regime, "regime", kind)?;
        }
        if kind == ExperimentKind::InferenceCoverage && r + s < 2 {
            return Err(Error::config("r", "inference needs r + s ≥ 2"));
        }
        if let Some(level) = self.level {
            if !(0.0..1.0).contains(&level) {
                return Err(Error::config("level", format!("must lie in [0, 1), got {level}")));
            }
        }
        Ok(())
    }
}

/// What a test is expected to show.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    /// Goodness of fit: `p > ALPHA`.
    Fit,
    /// Correlation check: `|z| < Z_INDEPENDENT`.
    Independent,
    /// Correlation check: `|z| > Z_DEPENDENT`.
    Dependent,
    /// Reported only.
    Info,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub label: String,
    pub expect: Expectation,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub z: Option<f64>,
    #[serde(flatten)]
    pub report: TestReport,
}

impl TestEntry {
    fn fit(label: impl Into<String>, report: TestReport) -> Self {
        TestEntry { label: label.into(), expect: Expectation::Fit, passed: Some(report.p_value > ALPHA), z: None, report }
    }

    fn correlation(label: impl Into<String>, expect: Expectation, pairs: &[(f64, f64)]) -> Result<Self> {
        let c = independence_check(pairs)?;
        let passed = match expect {
            Expectation::Independent => Some(c.z.abs() < Z_INDEPENDENT),
            Expectation::Dependent => Some(c.dependent(Z_DEPENDENT)),
            _ => None,
        };
        Ok(TestEntry { label: label.into(), expect, passed, z: Some(c.z), report: c.report })
    }

    pub fn summary_line(&self) -> String {
        let verdict = match self.passed {
            Some(true) => "PASS",
            Some(false) => "FAIL",
            None => "info",
        };
        let z = self.z.map(|z| format!(" z={z:.3}")).unwrap_or_default();
        format!(
            "{verdict:<4} {:<28} {:<14} stat={:.6} p={:.4}{z} n={}",
            self.label,
            serde_json::to_value(self.report.test).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(),
            self.report.statistic,
            self.report.p_value,
            self.report.n_used
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parent: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub norming: Option<NormingConstants>,
    pub tests: Vec<TestEntry>,
    pub details: BTreeMap<String, Value>,
    pub all_passed: bool,
}

pub struct ExperimentOutcome {
    pub report: ExperimentReport,
    pub summary: Vec<String>,
    pub files: Vec<PathBuf>,
}

/// Raw per-replicate output, written only when CSV is requested.
enum RawRows {
    None,
    Windows { scaling: Scaling, r: u64, s: u64, rows: Vec<(SpacingsVector, NormalizedWindow)> },
    Counts(Vec<CountRecord>),
    Draws { dim: usize, rows: Vec<Vec<f64>> },
}

struct Run {
    parent: Option<String>,
    norming: Option<NormingConstants>,
    tests: Vec<TestEntry>,
    details: BTreeMap<String, Value>,
    extra_ok: bool,
    raw: RawRows,
}

impl Run {
    fn new(parent: Option<String>, norming: Option<NormingConstants>) -> Self {
        Run { parent, norming, tests: Vec::new(), details: BTreeMap::new(), extra_ok: true, raw: RawRows::None }
    }
}

/// Runs `cfg` with `cfg.seed` (or [`DEFAULT_SEED`]) and writes the report
/// and optional CSV into `out_dir`, when given.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: Option<&Path>) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let seed = cfg.seed.unwrap_or(DEFAULT_SEED);
    let mut embedded = cfg.clone();
    embedded.seed = Some(seed);
    let run = match cfg.experiment {
        ExperimentKind::CentralSpacings => run_central(cfg, seed, false)?,
        ExperimentKind::CentralJoint => run_central(cfg, seed, true)?,
        ExperimentKind::IntermediateSpacings => run_intermediate(cfg, seed)?,
        ExperimentKind::ExtremeWindow => run_extreme(cfg, seed)?,
        ExperimentKind::Counts => run_counts(cfg, seed)?,
        ExperimentKind::InferenceCoverage => run_coverage(cfg, seed)?,
        ExperimentKind::OracleDump => run_oracle(cfg, seed)?,
    };
    let all_passed = run.extra_ok && run.tests.iter().all(|t| t.passed != Some(false));
    let report = ExperimentReport {
        schema: 1,
        config: embedded,
        seed,
        parent: run.parent,
        norming: run.norming,
        tests: run.tests,
        details: run.details,
        all_passed,
    };
    let mut summary: Vec<String> = report.tests.iter().map(TestEntry::summary_line).collect();
    for (key, value) in &report.details {
        if value.is_number() || value.is_boolean() {
            summary.push(format!("     {key} = {value}"));
        }
    }
    summary.push(format!("{} {}", if all_passed { "ALL PASS" } else { "SOME FAILED" }, cfg.experiment.name()));
    let mut files = Vec::new();
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        files.push(path);
        if cfg.format.unwrap_or_default() == OutputFormat::Csv {
            if let Some(path) = write_raw(dir, &run.raw)? {
                files.push(path);
            }
        }
    }
    Ok(ExperimentOutcome { report, summary, files })
}

fn write_raw(dir: &Path, raw: &RawRows) -> Result<Option<PathBuf>> {
    let open = |name: &str| -> Result<(PathBuf, BufWriter<fs::File>)> {
        let path = dir.join(name);
        let file = fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Ok((path, BufWriter::new(file)))
    };
    match raw {
        RawRows::None => Ok(None),
        RawRows::Windows { scaling, r, s, rows } => {
            let (path, out) = open("replicates.csv")?;
            let mut w = ReplicateCsv::new(out, *r, *s)?;
            for (i, (sv, nw)) in rows.iter().enumerate() {
                w.write(i as u64, scaling.label(), sv, *r, *s, nw)?;
            }
            w.finish()?;
            Ok(Some(path))
        }
        RawRows::Counts(recs) => {
            let (path, mut out) = open("counts.csv")?;
            use std::io::Write;
            writeln!(out, "#schema=1")?;
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record(["replicate", "n", "k", "d", "k_minus", "k_plus"])?;
            for (i, c) in recs.iter().enumerate() {
                w.write_record([i.to_string(), c.n.to_string(), c.k.to_string(), c.d.to_string(), c.k_minus.to_string(), c.k_plus.to_string()])?;
            }
            w.flush()?;
            Ok(Some(path))
        }
        RawRows::Draws { dim, rows } => {
            let (path, mut out) = open("oracle.csv")?;
            use std::io::Write;
            writeln!(out, "#schema=1")?;
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
            w.write_record((1..=*dim).map(|j| format!("w_{j}")))?;
            for row in rows {
                w.write_record(row.iter().map(f64::to_string))?;
            }
            w.flush()?;
            Ok(Some(path))
        }
    }
}

fn method_for(cfg: &ExperimentConfig, n: u64, k: u64, r: u64) -> SamplingMethod {
    cfg.method.unwrap_or_else(|| SamplingMethod::auto(n, k, r))
}

fn spacing_labels(r: u64, s: u64) -> Vec<String> {
    (1..=s).rev().map(|j| format!("left_{j}")).chain((1..=r).map(|j| format!("right_{j}"))).collect()
}

/// Column `j` of the spacings (window order) across replicates.
fn spacing_column(rows: &[(SpacingsVector, NormalizedWindow)], j: usize) -> Vec<f64> {
    rows.iter().map(|(_, w)| w.spacings_in_order()[j]).collect()
}

#[allow(clippy::too_many_arguments)]
fn simulate_normalized(
    dist: &DistributionSpec,
    cfg: &ExperimentConfig,
    n: u64,
    k: u64,
    r: u64,
    s: u64,
    seed: u64,
    nc: &NormingConstants,
    scaling: Scaling,
    central: Option<&crate::distributions::CentralRegime>,
) -> Result<Vec<(SpacingsVector, NormalizedWindow)>> {
    let windows = simulate_windows(dist, n, k, r, s, method_for(cfg, n, k, r), seed, cfg.n_rep()?)?;
    windows
        .par_iter()
        .map(|w| {
            let sv = spacings(w);
            let nw = normalize(&sv, nc, scaling, central)?;
            Ok((sv, nw))
        })
        .collect()
}

fn pairwise(run: &mut Run, rows: &[(SpacingsVector, NormalizedWindow)], labels: &[String], expect: Expectation) -> Result<()> {
    let cols: Vec<Vec<f64>> = (0..labels.len()).map(|j| spacing_column(rows, j)).collect();
    for a in 0..cols.len() {
        for b in a + 1..cols.len() {
            let pairs: Vec<(f64, f64)> = cols[a].iter().copied().zip(cols[b].iter().copied()).collect();
            run.tests.push(TestEntry::correlation(format!("{}~{}", labels[a], labels[b]), expect, &pairs)?);
        }
    }
    Ok(())
}

fn center_vs_spacings(
    run: &mut Run,
    rows: &[(SpacingsVector, NormalizedWindow)],
    labels: &[String],
    expect: impl Fn(&str) -> Expectation,
) -> Result<()> {
    let centers: Vec<f64> = rows.iter().map(|(_, w)| w.center).collect();
    for (j, label) in labels.iter().enumerate() {
        let col = spacing_column(rows, j);
        let pairs: Vec<(f64, f64)> = centers.iter().copied().zip(col).collect();
        run.tests.push(TestEntry::correlation(format!("center~{label}"), expect(label), &pairs)?);
    }
    Ok(())
}

fn run_central(cfg: &ExperimentConfig, seed: u64, joint: bool) -> Result<Run> {
    let dist = cfg.dist()?;
    let n = cfg.n.expect("validated");
    let k = cfg.k_from_p(n)?;
    let (r, s) = (cfg.r.expect("validated"), cfg.s.expect("validated"));
    let p = cfg.p.unwrap_or(k as f64 / n as f64);
    let central = dist.central_regime(p)?;
    let nc = norming_constants(&dist, n, k, Regime::Central, Some(&central))?;
    let scaling = if central.is_regular() { Scaling::CentralA } else { Scaling::CentralB };
    let rows = simulate_normalized(&dist, cfg, n, k, r, s, seed, &nc, scaling, Some(&central))?;
    let labels = spacing_labels(r, s);
    let mut run = Run::new(Some(dist.name()), Some(nc));
    run.details.insert("scaling".into(), json!(scaling.label()));
    run.details.insert("central".into(), serde_json::to_value(central)?);
    let regular = central.is_regular();
    let independence = if regular { Expectation::Independent } else { Expectation::Info };
    if joint {
        let centers: Vec<f64> = rows.iter().map(|(_, w)| w.center).collect();
        let law = if regular { LimitLaw::StdNormal } else { LimitLaw::HalfNormal };
        run.tests.push(TestEntry::fit("center", ks_one_sample(&centers, |x| limit_cdf(&law, x).unwrap_or(f64::NAN))?));
        center_vs_spacings(&mut run, &rows, &labels, |_| independence)?;
    } else {
        let law = if regular { LimitLaw::ExpIid { m: 1 } } else { LimitLaw::PoweredExp { theta: central.theta } };
        for (j, label) in labels.iter().enumerate() {
            let col = spacing_column(&rows, j);
            run.tests.push(TestEntry::fit(label.clone(), ks_one_sample(&col, |x| limit_cdf(&law, x).unwrap_or(f64::NAN))?));
        }
        pairwise(&mut run, &rows, &labels, independence)?;
    }
    run.raw = RawRows::Windows { scaling, r, s, rows };
    Ok(run)
}

fn run_intermediate(cfg: &ExperimentConfig, seed: u64) -> Result<Run> {
    let dist = cfg.dist()?;
    let n = cfg.n.expect("validated");
    let k = cfg.k.expect("validated");
    let (r, s) = (cfg.r.expect("validated"), cfg.s.expect("validated"));
    let nc = norming_constants(&dist, n, k, Regime::Intermediate, None)?;
    let rows = simulate_normalized(&dist, cfg, n, k, r, s, seed, &nc, Scaling::Intermediate, None)?;
    let labels = spacing_labels(r, s);
    let mut run = Run::new(Some(dist.name()), Some(nc));
    let exp1 = LimitLaw::ExpIid { m: 1 };
    for (j, label) in labels.iter().enumerate() {
        let col = spacing_column(&rows, j);
        run.tests.push(TestEntry::fit(label.clone(), ks_one_sample(&col, |x| limit_cdf(&exp1, x).unwrap_or(f64::NAN))?));
    }
    let centers: Vec<f64> = rows.iter().map(|(_, w)| w.center).collect();
    run.tests.push(TestEntry::fit("center", ks_one_sample(&centers, |x| limit_cdf(&LimitLaw::StdNormal, x).unwrap_or(f64::NAN))?));
    pairwise(&mut run, &rows, &labels, Expectation::Independent)?;
    center_vs_spacings(&mut run, &rows, &labels, |_| Expectation::Independent)?;
    run.raw = RawRows::Windows { scaling: Scaling::Intermediate, r, s, rows };
    Ok(run)
}

/// Rank from the top of the upper order statistic of each spacing, in
/// window order (left spacings from the outside in, then right).
fn top_ranks(n: u64, k: u64, r: u64, s: u64) -> Vec<u64> {
    (1..=s).rev().map(|j| n - k + j).chain((1..=r).map(|j| n - k - j + 1)).collect()
}

fn run_extreme(cfg: &ExperimentConfig, seed: u64) -> Result<Run> {
    let dist = cfg.dist()?;
    let n = cfg.n.expect("validated");
    let k = cfg.k.expect("validated");
    let s = cfg.s.expect("validated");
    let r = cfg.r.unwrap_or(n - k);
    let info = dist.domain();
    if info.domain == Domain::None {
        return Err(Error::config("dist", "extreme-window needs a parent in a domain of attraction"));
    }
    let per_rank = cfg.per_rank.unwrap_or(info.domain == Domain::Gumbel);
    if per_rank && info.domain != Domain::Gumbel {
        return Err(Error::config("per_rank", "per-rank scaling applies to Gumbel-domain parents only"));
    }
    let nc = norming_constants(&dist, n, k, Regime::Extreme, None)?;
    let scaling = Scaling::Extreme { per_rank };
    let rows = simulate_normalized(&dist, cfg, n, k, r, s, seed, &nc, scaling, None)?;
    let labels = spacing_labels(r, s);
    let ranks = top_ranks(n, k, r, s);
    let alpha = match info.domain {
        Domain::Gumbel => None,
        _ => info.alpha,
    };
    let weibull_one = info.domain == Domain::Weibull && info.alpha == Some(1.0);
    let n_rep = cfg.n_rep()?;
    let oracle_seed = derive_seed(seed, "oracle");
    let mut run = Run::new(Some(dist.name()), Some(nc));
    run.details.insert("scaling".into(), json!(scaling.label()));
    run.details.insert("domain".into(), serde_json::to_value(info)?);
    let mut means = BTreeMap::new();
    for (j, label) in labels.iter().enumerate() {
        let col = spacing_column(&rows, j);
        let i = ranks[j] as u32;
        let report = if per_rank {
            ks_one_sample(&col, |x| limit_cdf(&LimitLaw::ExpIid { m: 1 }, x).unwrap_or(f64::NAN))?
        } else {
            let law = LimitLaw::ExtremeSpacingPair { domain: info.domain, alpha, i, j: i + 1 };
            match limit_cdf(&law, 1.0) {
                Ok(_) => ks_one_sample(&col, |x| limit_cdf(&law, x).unwrap_or(f64::NAN))?,
                Err(Error::Unsupported(_)) => {
                    let draws = oracle_draws(&law, derive_seed(oracle_seed, label), n_rep, 0)?;
                    ks_two_sample(&col, &draws)?
                }
                Err(e) => return Err(e),
            }
        };
        run.tests.push(TestEntry::fit(label.clone(), report));
        // Mean of the b_n-scaled spacing, whatever the per-rank choice.
        let raw: Vec<f64> = rows.iter().map(|(sv, _)| spacing_in_order(sv, j) / nc.b_n).collect();
        let (mean, se) = mean_se(&raw);
        let limit_mean = match info.domain {
            Domain::Gumbel => Some(1.0 / i as f64),
            Domain::Weibull if weibull_one => Some(1.0),
            _ => None,
        };
        means.insert(label.clone(), json!({ "rank": i, "mean": mean, "se": se, "limit_mean": limit_mean }));
    }
    run.details.insert("spacing_means".into(), Value::Object(means.into_iter().collect()));

    // Center against the marginal of W_{n-k+1}.
    let centers: Vec<f64> = rows.iter().map(|(_, w)| w.center).collect();
    let jc = (n - k + 1) as u32;
    let center_report = if jc == 1 {
        let law = LimitLaw::ExtremeValue { domain: info.domain, alpha };
        ks_one_sample(&centers, |x| limit_cdf(&law, x).unwrap_or(f64::NAN))?
    } else {
        let law = match info.domain {
            Domain::Gumbel => LimitLaw::GumbelWVector { j: jc },
            Domain::Frechet => LimitLaw::FrechetWVector { alpha: info.alpha.expect("frechet alpha"), j: jc },
            _ => LimitLaw::WeibullWVector { alpha: info.alpha.expect("weibull alpha"), j: jc },
        };
        let draws = oracle_draws(&law, derive_seed(oracle_seed, "center"), n_rep, jc as usize - 1)?;
        ks_two_sample(&centers, &draws)?
    };
    run.tests.push(TestEntry::fit("center", center_report));

    let spacing_expect = if info.domain == Domain::Gumbel || weibull_one { Expectation::Independent } else { Expectation::Info };
    pairwise(&mut run, &rows, &labels, spacing_expect)?;
    // Gumbel: the center is a sum of the spacings below it; Weibull with
    // alpha = 1: of the spacings above it.
    center_vs_spacings(&mut run, &rows, &labels, |label| match (info.domain, label.starts_with("left")) {
        (Domain::Gumbel, false) => Expectation::Independent,
        (Domain::Gumbel, true) => Expectation::Dependent,
        (Domain::Weibull, true) if weibull_one => Expectation::Independent,
        (Domain::Weibull, false) if weibull_one => Expectation::Dependent,
        _ => Expectation::Info,
    })?;
    run.raw = RawRows::Windows { scaling, r, s, rows };
    Ok(run)
}

fn spacing_in_order(sv: &SpacingsVector, j: usize) -> f64 {
    let s = sv.left.len();
    if j < s {
        sv.left[s - 1 - j]
    } else {
        sv.right[j - s]
    }
}

fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 { x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, (var / n).sqrt())
}

/// Component `component` of `count` draws from `law`, one stream per draw.
pub fn oracle_draws(law: &LimitLaw, seed: u64, count: u64, component: usize) -> Result<Vec<f64>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let v = sample_limit(law, &mut replicate_stream(seed, i))?;
            v.get(component).copied().ok_or_else(|| Error::domain(format!("{} has no component {component}", law.tag())))
        })
        .collect()
}

fn count_laws(dist: &DistributionSpec, regime: Regime, m: u64, lambda: f64) -> (Option<CountLimitLaw>, Option<CountLimitLaw>) {
    match regime {
        Regime::Central | Regime::Intermediate => (Some(CountLimitLaw::Poisson { lambda }), Some(CountLimitLaw::Poisson { lambda })),
        Regime::Extreme => {
            let info = dist.domain();
            match info.domain {
                Domain::Gumbel => (Some(CountLimitLaw::NegBinomial { k: m, lambda }), Some(CountLimitLaw::Binomial { k: m, lambda })),
                Domain::Weibull if info.alpha == Some(1.0) => {
                    (Some(CountLimitLaw::Poisson { lambda }), Some(CountLimitLaw::CensoredPoisson { lambda, k: m }))
                }
                Domain::Frechet => (None, Some(CountLimitLaw::FrechetMixed { alpha: info.alpha.expect("frechet alpha"), k: m, lambda })),
                _ => (None, None),
            }
        }
    }
}

fn run_counts(cfg: &ExperimentConfig, seed: u64) -> Result<Run> {
    let dist = cfg.dist()?;
    let n = cfg.n.expect("validated");
    let k = cfg.k_from_p(n)?;
    let (r, s) = (cfg.r.expect("validated"), cfg.s.expect("validated"));
    let lambda = cfg.d_lambda.expect("validated");
    let regime = cfg.regime.expect("validated");
    let (nc, scale) = match regime {
        Regime::Central => {
            let p = cfg.p.unwrap_or(k as f64 / n as f64);
            let central = dist.central_regime(p)?;
            if !central.is_regular() {
                return Err(Error::config("dist", "central counts need a finite positive density at x_p"));
            }
            let nc = norming_constants(&dist, n, k, regime, Some(&central))?;
            (nc, nc.c_n)
        }
        Regime::Intermediate => {
            let nc = norming_constants(&dist, n, k, regime, None)?;
            (nc, nc.c_n)
        }
        Regime::Extreme => {
            let nc = norming_constants(&dist, n, k, regime, None)?;
            (nc, nc.b_n)
        }
    };
    let d = lambda * scale;
    let windows = simulate_windows(&dist, n, k, r, s, method_for(cfg, n, k, r), seed, cfg.n_rep()?)?;
    let records: Vec<CountRecord> = windows.par_iter().map(|w| count_in_window(w, d)).collect::<Result<_>>()?;
    let failures: u64 = windows
        .par_iter()
        .map(|w| {
            let mut bad = 0u64;
            for i in 1..=s {
                bad += u64::from(!duality_check(w, Some(i), None, d)?);
            }
            for j in 1..=r {
                bad += u64::from(!duality_check(w, None, Some(j), d)?);
            }
            Ok(bad)
        })
        .collect::<Result<Vec<u64>>>()?
        .into_iter()
        .sum();
    let mut run = Run::new(Some(dist.name()), Some(nc));
    run.details.insert("d".into(), json!(d));
    run.details.insert("duality_failures".into(), json!(failures));
    run.extra_ok = failures == 0;
    let (law_minus, law_plus) = count_laws(&dist, regime, n - k, lambda);
    for (label, law, values) in [
        ("k_minus", law_minus, records.iter().map(|c| c.k_minus).collect::<Vec<u64>>()),
        ("k_plus", law_plus, records.iter().map(|c| c.k_plus).collect::<Vec<u64>>()),
    ] {
        let h = histogram(values);
        run.details.insert(format!("{label}_histogram"), json!(h));
        if let Some(law) = law {
            run.details.insert(format!("{label}_law"), serde_json::to_value(law)?);
            let report = discrete_gof(&h, |j| count_limit_pmf(&law, j).unwrap_or(f64::NAN), law.support_max())?;
            run.tests.push(TestEntry::fit(label, report));
        }
    }
    run.raw = RawRows::Counts(records);
    Ok(run)
}

fn run_coverage(cfg: &ExperimentConfig, seed: u64) -> Result<Run> {
    let dist = cfg.dist()?;
    let level = cfg.level.unwrap_or(0.95);
    let cc = CoverageConfig {
        n: cfg.n.expect("validated"),
        p: cfg.p.expect("validated"),
        r: cfg.r.expect("validated"),
        s: cfg.s.expect("validated"),
        level,
        n_rep: cfg.n_rep()?,
        seed,
        mc_size: cfg.mc_size.unwrap_or(200_000),
    };
    let report = coverage_experiment(&dist, &cc)?;
    let band = 3.0 * (level * (1.0 - level) / cc.n_rep as f64).sqrt();
    let mut run = Run::new(Some(dist.name()), None);
    run.extra_ok = (report.coverage - level).abs() <= band;
    run.details.insert("coverage".into(), json!(report.coverage));
    run.details.insert("coverage_band".into(), json!([level - band, level + band]));
    run.details.insert("coverage_within_band".into(), json!(run.extra_ok));
    run.details.insert("coverage_report".into(), serde_json::to_value(&report)?);
    run.details.insert("density_mean".into(), json!(report.density_mean));
    Ok(run)
}

fn run_oracle(cfg: &ExperimentConfig, seed: u64) -> Result<Run> {
    let law: LimitLaw = cfg.law.as_deref().expect("validated").parse()?;
    let draws = cfg.n_rep()?;
    let rows: Vec<Vec<f64>> =
        (0..draws).into_par_iter().map(|i| sample_limit(&law, &mut replicate_stream(seed, i))).collect::<Result<_>>()?;
    let dim = law.dimension();
    let mut run = Run::new(None, None);
    run.details.insert("law".into(), serde_json::to_value(law)?);
    let stats: Vec<Value> = (0..dim)
        .map(|c| {
            let col: Vec<f64> = rows.iter().map(|r| r[c]).collect();
            let (mean, se) = mean_se(&col);
            json!({ "mean": mean, "se": se })
        })
        .collect();
    run.details.insert("components".into(), Value::Array(stats));
    run.raw = RawRows::Draws { dim, rows };
    Ok(run)
}
