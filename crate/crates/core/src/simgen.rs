//! Seeded scenario generators, selection metrics and the replication runner.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScreenError};
use crate::linalg::sym_sqrt;
use crate::links::{inverse_link, LinkSpec};
use crate::methods::{run_method, Method, MethodSettings};

/// Covariate correlation structures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scenario {
    /// `Σ_ij = ρ^{|i−j|}`.
    #[serde(rename = "AR1")]
    Ar1,
    /// Compound symmetry with a shift of columns 4.. along the first coordinate.
    #[serde(rename = "BlockCS")]
    BlockCs,
    /// `x = Σ^{1/2} f + u` with AR(1) `Σ` and uniform idiosyncratic noise.
    #[serde(rename = "FactorToy")]
    FactorToy,
}

/// Coefficients as a dense prefix (zero-padded to `p`) or `(index, value)` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Dense(Vec<f64>),
    Sparse(Vec<(usize, f64)>),
}

impl Default for BetaSpec {
    fn default() -> Self {
        BetaSpec::Dense(vec![1.0, -1.0, 0.8])
    }
}

impl BetaSpec {
    pub fn to_vector(&self, p: usize) -> Result<DVector<f64>> {
        let mut beta = DVector::zeros(p);
        match self {
            BetaSpec::Dense(v) => {
                if v.len() > p {
                    return Err(ScreenError::param("beta", format!("{} entries for p = {p}", v.len())));
                }
                for (i, &b) in v.iter().enumerate() {
                    beta[i] = b;
                }
            }
            BetaSpec::Sparse(pairs) => {
                for &(i, b) in pairs {
                    if i >= p {
                        return Err(ScreenError::param(
                            "beta",
                            format!("index {i} out of range for p = {p}"),
                        ));
                    }
                    beta[i] = b;
                }
            }
        }
        Ok(beta)
    }
}

fn default_link() -> LinkSpec {
    LinkSpec::Identity
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub p: usize,
    pub rho: f64,
    #[serde(default = "default_link")]
    pub link: LinkSpec,
    #[serde(default)]
    pub beta: BetaSpec,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        check_rho(self.rho)?;
        if self.n < 2 || self.p < 1 {
            return Err(ScreenError::param(
                "n/p",
                format!("need n >= 2 and p >= 1, got n={} p={}", self.n, self.p),
            ));
        }
        if self.replications == 0 {
            return Err(ScreenError::param("replications", "must be positive"));
        }
        if self.scenario == Scenario::BlockCs && self.p < 4 {
            return Err(ScreenError::param("p", "BlockCS needs p >= 4"));
        }
        if matches!(self.link, LinkSpec::Power(_)) {
            return Err(ScreenError::param(
                "link",
                "responses can only be simulated for identity, logit and log",
            ));
        }
        self.beta.to_vector(self.p).map(|_| ())
    }

    /// Indices with a nonzero coefficient.
    pub fn support(&self) -> Result<Vec<usize>> {
        let beta = self.beta.to_vector(self.p)?;
        Ok((0..self.p).filter(|&j| beta[j] != 0.0).collect())
    }
}

/// A scenario plus the methods to compare on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub scenario: ScenarioConfig,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub settings: MethodSettings,
}

fn check_rho(rho: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rho) {
        return Err(ScreenError::param("rho", format!("must lie in [0, 1), got {rho}")));
    }
    Ok(())
}

fn normal(rng: &mut impl Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Rows drawn from `N(0, Σ)` with `Σ_ij = ρ^{|i−j|}` by the AR(1) recursion.
pub fn gen_ar1(n: usize, p: usize, rho: f64, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    check_rho(rho)?;
    let innovation = (1.0 - rho * rho).sqrt();
    let mut x = DMatrix::zeros(n, p);
    for i in 0..n {
        let mut prev = 0.0;
        for j in 0..p {
            let z = normal(rng);
            prev = if j == 0 { z } else { rho * prev + innovation * z };
            x[(i, j)] = prev;
        }
    }
    Ok(x)
}

/// Closed-form `Σ^{1/2}` of the compound-symmetry matrix `(1−ρ)I + ρ11ᵀ` as
/// `a·I + b·11ᵀ`.
pub fn compound_symmetry_sqrt(p: usize, rho: f64) -> (f64, f64) {
    let a = (1.0 - rho).sqrt();
    let top = (1.0 + (p as f64 - 1.0) * rho).sqrt();
    (a, (top - a) / p as f64)
}

/// Compound-symmetry rows: `v = Σ^{1/2} f` with compound symmetry, then columns 4..
/// are shifted by `−0.6ρ·v₁`.
pub fn gen_blockcs(n: usize, p: usize, rho: f64, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    check_rho(rho)?;
    if p < 4 {
        return Err(ScreenError::param("p", format!("BlockCS needs p >= 4, got {p}")));
    }
    let (a, b) = compound_symmetry_sqrt(p, rho);
    let mut x = DMatrix::zeros(n, p);
    let mut f = vec![0.0; p];
    for i in 0..n {
        for v in f.iter_mut() {
            *v = normal(rng);
        }
        let common = b * f.iter().sum::<f64>();
        let first = a * f[0] + common;
        for j in 0..p {
            let v = a * f[j] + common;
            x[(i, j)] = if j < 3 { v } else { v - 0.6 * rho * first };
        }
    }
    Ok(x)
}

/// `Σ_ij = ρ^{|i−j|}`.
pub fn ar1_covariance(p: usize, rho: f64) -> DMatrix<f64> {
    DMatrix::from_fn(p, p, |i, j| rho.powi(i.abs_diff(j) as i32))
}

/// Factor-structure generator with the loading matrix computed once.
#[derive(Debug, Clone)]
pub struct FactorToyGenerator {
    loading: DMatrix<f64>,
}

impl FactorToyGenerator {
    pub fn new(p: usize, rho: f64) -> Result<Self> {
        check_rho(rho)?;
        let loading = if rho == 0.0 {
            DMatrix::identity(p, p)
        } else {
            sym_sqrt(&ar1_covariance(p, rho))?
        };
        Ok(FactorToyGenerator { loading })
    }

    pub fn loading(&self) -> &DMatrix<f64> {
        &self.loading
    }

    pub fn generate(&self, n: usize, rng: &mut impl Rng) -> DMatrix<f64> {
        let p = self.loading.nrows();
        let mut f = DMatrix::zeros(n, p);
        for i in 0..n {
            for j in 0..p {
                f[(i, j)] = normal(rng);
            }
        }
        // rows are f_iᵀ B (B symmetric)
        let mut x = f * &self.loading;
        for i in 0..n {
            for j in 0..p {
                x[(i, j)] += rng.random_range(0.0..0.5);
            }
        }
        x
    }
}

pub fn gen_factor_toy(n: usize, p: usize, rho: f64, rng: &mut impl Rng) -> Result<DMatrix<f64>> {
    Ok(FactorToyGenerator::new(p, rho)?.generate(n, rng))
}

/// Largest linear predictor accepted for Poisson sampling.
pub const MAX_LOG_RATE: f64 = 30.0;

/// Responses for `η = Xβ`: Gaussian noise, Bernoulli or Poisson.
pub fn gen_response(x: &DMatrix<f64>, beta: &DVector<f64>, link: LinkSpec, rng: &mut impl Rng) -> Result<DVector<f64>> {
    if x.ncols() != beta.len() {
        return Err(ScreenError::Shape(format!(
            "X has {} columns, beta has {}",
            x.ncols(),
            beta.len()
        )));
    }
    let eta = x * beta;
    let mut y = DVector::zeros(eta.len());
    for (i, &e) in eta.iter().enumerate() {
        y[i] = match link {
            LinkSpec::Identity => e + normal(rng),
            LinkSpec::Logit => {
                if rng.random::<f64>() < inverse_link(e, link) {
                    1.0
                } else {
                    0.0
                }
            }
            LinkSpec::Log => {
                if e > MAX_LOG_RATE {
                    return Err(ScreenError::param(
                        "beta",
                        format!("linear predictor {e:.2} at row {i} exceeds the Poisson rate guard"),
                    ));
                }
                let rate = e.exp();
                if rate > 0.0 {
                    Poisson::new(rate)
                        .map_err(|err| ScreenError::Numerical(format!("Poisson rate {rate}: {err}")))?
                        .sample(rng)
                } else {
                    0.0
                }
            }
            LinkSpec::Power(_) => {
                return Err(ScreenError::param("link", "no response sampler for power links"));
            }
        };
    }
    Ok(y)
}

/// Outcome of one selection against the true support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub tp: usize,
    pub fp: usize,
    pub covered: bool,
}

pub fn evaluate(selected: &[usize], truth: &[usize]) -> Evaluation {
    let truth: HashSet<usize> = truth.iter().copied().collect();
    let chosen: HashSet<usize> = selected.iter().copied().collect();
    let tp = chosen.intersection(&truth).count();
    Evaluation {
        tp,
        fp: chosen.len() - tp,
        covered: truth.is_subset(&chosen),
    }
}

/// Mean and sample standard deviation (zero for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                sd: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Summary { mean, sd }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub tp: Summary,
    pub fp: Summary,
    pub cr: Summary,
}

impl Metrics {
    pub fn from_evaluations(evals: &[Evaluation]) -> Metrics {
        let col = |f: &dyn Fn(&Evaluation) -> f64| evals.iter().map(f).collect::<Vec<_>>();
        Metrics {
            tp: Summary::of(&col(&|e| e.tp as f64)),
            fp: Summary::of(&col(&|e| e.fp as f64)),
            cr: Summary::of(&col(&|e| if e.covered { 1.0 } else { 0.0 })),
        }
    }
}

/// Seed of replication `r`: the `r`-th output of a SplitMix64 stream started
/// at `master`, so earlier replications do not depend on the total count.
pub fn replication_seed(master: u64, r: usize) -> u64 {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = master.wrapping_add(GAMMA.wrapping_mul(r as u64 + 1));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws the design and response of one replication.
pub struct ScenarioSampler {
    config: ScenarioConfig,
    beta: DVector<f64>,
    factor: Option<FactorToyGenerator>,
}

impl ScenarioSampler {
    pub fn new(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let factor = match config.scenario {
            Scenario::FactorToy => Some(FactorToyGenerator::new(config.p, config.rho)?),
            _ => None,
        };
        Ok(ScenarioSampler {
            beta: config.beta.to_vector(config.p)?,
            config: config.clone(),
            factor,
        })
    }

    pub fn sample(&self, seed: u64) -> Result<(DMatrix<f64>, DVector<f64>)> {
        let c = &self.config;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = match (&self.factor, c.scenario) {
            (Some(g), _) => g.generate(c.n, &mut rng),
            (None, Scenario::Ar1) => gen_ar1(c.n, c.p, c.rho, &mut rng)?,
            (None, Scenario::BlockCs) => gen_blockcs(c.n, c.p, c.rho, &mut rng)?,
            (None, Scenario::FactorToy) => unreachable!("factor generator is built in new()"),
        };
        let y = gen_response(&x, &self.beta, c.link, &mut rng)?;
        Ok((x, y))
    }

    /// Replication `r` under the configured master seed.
    pub fn replication(&self, r: usize) -> Result<(DMatrix<f64>, DVector<f64>)> {
        self.sample(replication_seed(self.config.seed, r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub replication: usize,
    pub seed: u64,
    pub selections: BTreeMap<Method, Vec<usize>>,
    pub evaluations: BTreeMap<Method, Evaluation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub metrics: Vec<(Method, Metrics)>,
    pub replications: Vec<ReplicationRecord>,
}

impl ExperimentReport {
    pub fn metrics_for(&self, method: Method) -> Option<&Metrics> {
        self.metrics.iter().find(|(m, _)| *m == method).map(|(_, m)| m)
    }
}

/// Runs every method on every replication. Replications run in parallel;
/// results do not depend on scheduling. The first failing replication (in
/// replication order) aborts the run and is reported with its seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.methods.is_empty() {
        return Err(ScreenError::param("methods", "at least one method is required"));
    }
    let sampler = ScenarioSampler::new(&config.scenario)?;
    let truth = config.scenario.support()?;
    let outcomes: Vec<Result<ReplicationRecord>> = (0..config.scenario.replications)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(config.scenario.seed, r);
            run_replication(&sampler, config, &truth, r, seed).map_err(|e| ScreenError::Replication {
                replication: r,
                seed,
                source: Box::new(e),
            })
        })
        .collect();
    let replications = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let metrics = config
        .methods
        .iter()
        .map(|&m| {
            let evals: Vec<Evaluation> = replications.iter().map(|r| r.evaluations[&m]).collect();
            (m, Metrics::from_evaluations(&evals))
        })
        .collect();
    Ok(ExperimentReport { metrics, replications })
}

fn run_replication(
    sampler: &ScenarioSampler,
    config: &ExperimentConfig,
    truth: &[usize],
    r: usize,
    seed: u64,
) -> Result<ReplicationRecord> {
    let (x, y) = sampler.sample(seed)?;
    let method_seed = replication_seed(seed, usize::MAX >> 1);
    let mut selections = BTreeMap::new();
    let mut evaluations = BTreeMap::new();
    for &m in &config.methods {
        let sel = run_method(m, &x, &y, config.scenario.link, &config.settings, method_seed)?;
        evaluations.insert(m, evaluate(&sel, truth));
        selections.insert(m, sel);
    }
    log::debug!("replication {r} done");
    Ok(ReplicationRecord {
        replication: r,
        seed,
        selections,
        evaluations,
    })
}

/// `method,metric,mean,sd` rows.
pub fn metrics_csv(report: &ExperimentReport) -> String {
    let mut out = String::from("method,metric,mean,sd\n");
    for (m, metrics) in &report.metrics {
        for (name, s) in [("TP", metrics.tp), ("FP", metrics.fp), ("CR", metrics.cr)] {
            let _ = writeln!(out, "{},{},{},{}", m.id(), name, s.mean, s.sd);
        }
    }
    out
}

/// Human-readable `mean(sd)` table.
pub fn metrics_table(report: &ExperimentReport) -> String {
    let mut out = format!("{:<10} {:>12} {:>12} {:>12}\n", "method", "TP", "FP", "CR");
    for (m, metrics) in &report.metrics {
        let cell = |s: Summary| format!("{:.2}({:.2})", s.mean, s.sd);
        let _ = writeln!(
            out,
            "{:<10} {:>12} {:>12} {:>12}",
            m.label(),
            cell(metrics.tp),
            cell(metrics.fp),
            cell(metrics.cr)
        );
    }
    out
}
