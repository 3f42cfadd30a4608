//! Partition-function estimation and Gibbs sampling through the biclique
//! polymer mixture, with a brute-force path for small or high-accuracy
//! instances.

use std::fmt;

use rand::Rng;
use rayon::prelude::*;

use crate::dynamics::{sample_polymer_config, uncovered_probability, ChainContext, ChainParams};
use crate::error::{Error, Result};
use crate::graph::{second_eigenvalue, BipartiteGraph, DEFAULT_SPECTRAL_TOL};
use crate::logspace::log_sum_exp;
use crate::oracle::{self, configuration_count};
use crate::polymer::{PolymerConfiguration, PolymerModel, DEFAULT_POLYMER_BUDGET};
use crate::rng::{self, derive_seed, StreamRng};
use crate::spin_model::{check_premises, enumerate_maximal_bicliques, premise_epsilon, Biclique, InteractionMatrix, Spin, SpinConfiguration};

/// Whether the theorem premises gate the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Strict,
    Lab,
}

/// How a reported value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Strict,
    Lab,
    Exact,
}

impl fmt::Display for RunMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RunMode::Strict => "strict",
            RunMode::Lab => "lab",
            RunMode::Exact => "exact",
        })
    }
}

/// Knobs for [`approximate_z`], [`build_mixture`] and [`SpinSampler`].
#[derive(Debug, Clone)]
pub struct EstimatorOptions {
    pub mode: Mode,
    /// Polymer size fraction ε; `None` uses the premise formula.
    pub epsilon: Option<f64>,
    pub chain: ChainParams,
    /// Constant `c` in the per-ratio sample count `ceil(c·n/ε*²)`.
    pub sample_constant: f64,
    /// Median amplification runs; `None` derives them from the failure budget.
    pub median_runs: Option<usize>,
    /// Largest `q^{2n}` evaluated by brute force.
    pub brute_force_budget: u64,
    pub allow_exact_fallback: bool,
    pub polymer_budget: usize,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        EstimatorOptions {
            mode: Mode::Lab,
            epsilon: None,
            chain: ChainParams::default(),
            sample_constant: 8.0,
            median_runs: None,
            brute_force_budget: oracle::DEFAULT_CONFIG_BUDGET,
            allow_exact_fallback: true,
            polymer_budget: DEFAULT_POLYMER_BUDGET,
        }
    }
}

/// A partition-function value in natural-log space.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEstimate {
    pub ln_value: f64,
    /// Relative error target ε*.
    pub rel_err_target: f64,
    /// Lower bound on the probability that the target was met.
    pub confidence: f64,
    pub mode: RunMode,
    /// ε used for the polymer models, if any.
    pub epsilon: Option<f64>,
    pub bicliques: usize,
    /// Individual runs of the median amplification (empty on the exact path).
    pub runs: Vec<f64>,
    pub warnings: Vec<String>,
    pub mixture: Option<MixtureTable>,
}

/// One biclique's contribution to the mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureRecord {
    pub biclique: Biclique,
    /// ln(|B_0|^n·|B_1|^n).
    pub ln_ground: f64,
    /// ln of the polymer partition function estimate.
    pub ln_z: f64,
    pub size_cap: usize,
    pub polymers: usize,
    pub runs: Vec<f64>,
    pub confidence: f64,
}

impl MixtureRecord {
    pub fn ln_term(&self) -> f64 {
        self.ln_ground + self.ln_z
    }

    /// Smallest and largest amplification run.
    pub fn spread(&self) -> (f64, f64) {
        self.runs
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)))
    }
}

/// Per-biclique records and their log-sum-exp total.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureTable {
    pub records: Vec<MixtureRecord>,
    pub ln_total: f64,
}

impl MixtureTable {
    fn from_records(records: Vec<MixtureRecord>) -> Self {
        let terms: Vec<f64> = records.iter().map(MixtureRecord::ln_term).collect();
        MixtureTable {
            ln_total: log_sum_exp(&terms),
            records,
        }
    }
}

fn check_accuracy(eps_star: f64) -> Result<()> {
    if eps_star > 0.0 && eps_star < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidAccuracy(eps_star))
    }
}

/// Median runs for failure probability `eta`: `ceil(ln(1/η))`, rounded up to odd.
pub fn median_count(eta: f64) -> usize {
    let k = (1.0 / eta).ln().ceil().max(1.0) as usize;
    k | 1
}

/// P[median of k runs fails] when each run independently fails with probability 1/4.
pub fn median_failure_probability(k: usize) -> f64 {
    let need = k / 2 + 1;
    let mut total = 0.0;
    let mut binom = 1.0f64;
    for j in 0..=k {
        if j > 0 {
            binom = binom * (k - j + 1) as f64 / j as f64;
        }
        if j >= need {
            total += binom * 0.25f64.powi(j as i32) * 0.75f64.powi((k - j) as i32);
        }
    }
    total
}

/// One telescoping estimate of ln Z over the prefix regions `{0..=i}`.
fn telescoping_run(ctx: &ChainContext<'_>, params: &ChainParams, eps_star: f64, sample_constant: f64, seed: u64) -> Result<f64> {
    let nv = ctx.model().graph().num_vertices();
    let n = ctx.model().graph().n() as f64;
    let m = (sample_constant * n / (eps_star * eps_star)).ceil() as usize;
    let mut ln_z = 0.0;
    let mut region: Vec<u32> = Vec::with_capacity(nv);
    for v in 0..nv {
        region.push(v as u32);
        let reachable = ctx
            .polymers_at(v)
            .iter()
            .any(|&id| ctx.polymers()[id as usize].vertices().iter().all(|&x| x as usize <= v));
        if !reachable {
            continue;
        }
        let mut p = 0.0;
        let mut mm = m.max(1);
        for attempt in 0..3u64 {
            p = uncovered_probability(ctx, params, &region, v, mm, eps_star, derive_seed(seed, &[v as u64, attempt]))?;
            if p > 0.0 {
                break;
            }
            mm = mm.saturating_mul(4);
        }
        if p == 0.0 {
            return Err(Error::DegenerateRatio(v));
        }
        ln_z -= p.ln();
    }
    Ok(ln_z)
}

/// ln of the polymer partition function by vertex telescoping, amplified by
/// the median of `median_runs` independent runs.
pub fn estimate_polymer_z(
    ctx: &ChainContext<'_>,
    params: &ChainParams,
    eps_star: f64,
    sample_constant: f64,
    median_runs: usize,
    seed: u64,
) -> Result<LogEstimate> {
    check_accuracy(eps_star)?;
    let k = median_runs.max(1);
    let runs: Vec<f64> = if ctx.polymers().is_empty() {
        vec![0.0]
    } else {
        (0..k)
            .map(|r| telescoping_run(ctx, params, eps_star, sample_constant, derive_seed(seed, &[0x7e1e, r as u64])))
            .collect::<Result<_>>()?
    };
    let mut sorted = runs.clone();
    sorted.sort_by(f64::total_cmp);
    let exact = ctx.polymers().is_empty();
    Ok(LogEstimate {
        ln_value: sorted[sorted.len() / 2],
        rel_err_target: eps_star,
        confidence: if exact { 1.0 } else { 1.0 - median_failure_probability(k) },
        mode: RunMode::Lab,
        epsilon: Some(ctx.model().epsilon()),
        bicliques: 1,
        runs,
        warnings: Vec::new(),
        mixture: None,
    })
}

fn contexts<'a>(g: &'a BipartiteGraph, h: &'a InteractionMatrix, epsilon: f64, opts: &EstimatorOptions) -> Result<Vec<ChainContext<'a>>> {
    enumerate_maximal_bicliques(h)
        .into_iter()
        .map(|b| {
            let model = PolymerModel::new(g, h, b, epsilon)?;
            ChainContext::with_budget(model, opts.chain.size_cap, opts.polymer_budget)
        })
        .collect()
}

fn mixture_from_contexts(ctxs: &[ChainContext<'_>], eps_star: f64, opts: &EstimatorOptions, seed: u64) -> Result<MixtureTable> {
    check_accuracy(eps_star)?;
    let k = ctxs.len();
    let eta = eps_star / (16.0 * k as f64);
    let runs = opts.median_runs.unwrap_or_else(|| median_count(eta));
    let records = ctxs
        .par_iter()
        .enumerate()
        .map(|(i, ctx)| {
            let est = estimate_polymer_z(ctx, &opts.chain, eps_star / 8.0, opts.sample_constant, runs, derive_seed(seed, &[0xb1c, i as u64]))?;
            let n = ctx.model().graph().n();
            Ok(MixtureRecord {
                biclique: ctx.model().biclique().clone(),
                ln_ground: ctx.model().biclique().ln_ground_count(n),
                ln_z: est.ln_value,
                size_cap: ctx.size_cap(),
                polymers: ctx.polymers().len(),
                runs: est.runs,
                confidence: est.confidence,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixtureTable::from_records(records))
}

/// Estimates every maximal biclique's polymer partition function at accuracy
/// ε*/8 and combines them into ln Ẑ^polymer.
pub fn build_mixture(g: &BipartiteGraph, h: &InteractionMatrix, epsilon: f64, eps_star: f64, opts: &EstimatorOptions, seed: u64) -> Result<MixtureTable> {
    check_accuracy(eps_star)?;
    let ctxs = contexts(g, h, epsilon, opts)?;
    mixture_from_contexts(&ctxs, eps_star, opts, seed)
}

/// What a top-level call will do.
#[derive(Debug, Clone, PartialEq)]
enum Plan {
    Exact,
    Polymer { epsilon: f64 },
}

fn plan(g: &BipartiteGraph, h: &InteractionMatrix, eps_star: f64, opts: &EstimatorOptions, warnings: &mut Vec<String>) -> Result<Plan> {
    check_accuracy(eps_star)?;
    let degree = g.degree();
    if opts.mode == Mode::Strict {
        let d = degree.ok_or_else(|| Error::InvalidGraph("strict mode needs a regular graph".into()))?;
        let cert = second_eigenvalue(g, DEFAULT_SPECTRAL_TOL)?;
        let report = check_premises(h, d as f64, cert.lambda.max(f64::MIN_POSITIVE))?;
        if !report.passed() {
            return Err(Error::PremisesUnmet(report.details.join("; ")));
        }
    }
    let n = g.n() as f64;
    let q = h.q();
    if opts.allow_exact_fallback {
        let small = configuration_count(g, q).is_some_and(|c| c <= opts.brute_force_budget);
        let fine = eps_star < 9.0 * (-n / (4.0 * q as f64)).exp();
        if small || fine {
            return Ok(Plan::Exact);
        }
    }
    let epsilon = match opts.epsilon {
        Some(e) => e,
        None => {
            let d = degree.ok_or_else(|| Error::InvalidGraph("graph is not regular".into()))?;
            premise_epsilon(q, h.delta(), d as f64)
        }
    };
    if opts.mode == Mode::Lab {
        warnings.push("lab mode: theorem premises not enforced, no accuracy guarantee".into());
    }
    Ok(Plan::Polymer { epsilon })
}

/// ε*-approximation of ln Z_{G,H}: brute force when small or when ε* is
/// below `9e^{−n/(4q)}`, otherwise the polymer mixture.
pub fn approximate_z(g: &BipartiteGraph, h: &InteractionMatrix, eps_star: f64, opts: &EstimatorOptions, seed: u64) -> Result<LogEstimate> {
    let mut warnings = Vec::new();
    match plan(g, h, eps_star, opts, &mut warnings)? {
        Plan::Exact => Ok(LogEstimate {
            ln_value: oracle::exact_z_with_budget(g, h, opts.brute_force_budget)?,
            rel_err_target: eps_star,
            confidence: 1.0,
            mode: RunMode::Exact,
            epsilon: None,
            bicliques: enumerate_maximal_bicliques(h).len(),
            runs: Vec::new(),
            warnings,
            mixture: None,
        }),
        Plan::Polymer { epsilon } => {
            let table = build_mixture(g, h, epsilon, eps_star, opts, seed)?;
            let failure: f64 = table.records.iter().map(|r| 1.0 - r.confidence).sum();
            let full = (2.0 * epsilon * g.n() as f64 + 1e-9).floor() as usize;
            for r in &table.records {
                if r.size_cap < full && r.polymers > 0 {
                    warnings.push(format!("{}: polymers truncated at size {}", r.biclique, r.size_cap));
                }
            }
            Ok(LogEstimate {
                ln_value: table.ln_total,
                rel_err_target: eps_star,
                confidence: (1.0 - failure).max(0.0),
                mode: if opts.mode == Mode::Strict { RunMode::Strict } else { RunMode::Lab },
                epsilon: Some(epsilon),
                bicliques: table.records.len(),
                runs: Vec::new(),
                warnings,
                mixture: Some(table),
            })
        }
    }
}

/// Per-vertex law of `Spin_B(Γ)`: covered vertices keep σ_Γ, boundary vertices
/// draw `j ∈ B_i` with probability `Π_{v ∈ ∂u ∩ ∪Γ} H[j][σ(v)] / F_u`, all
/// others are uniform on `B_i`.
pub fn spin_marginals(model: &PolymerModel<'_>, config: &PolymerConfiguration) -> Result<Vec<Vec<(Spin, f64)>>> {
    let g = model.graph();
    let h = model.matrix();
    let b = model.biclique();
    (0..g.num_vertices())
        .map(|u| {
            if let Some(s) = config.spin_of(u as u32) {
                return Ok(vec![(s, 1.0)]);
            }
            let ground = b.side(g.side(u));
            let touching: Vec<Spin> = g.neighbors(u).iter().filter_map(|&v| config.spin_of(v)).collect();
            if touching.is_empty() {
                let p = 1.0 / ground.len() as f64;
                return Ok(ground.iter().map(|&j| (j, p)).collect());
            }
            let raw: Vec<f64> = ground
                .iter()
                .map(|&j| touching.iter().map(|&s| h.get(j, s)).product())
                .collect();
            let f: f64 = raw.iter().sum();
            if f <= 0.0 {
                return Err(Error::ZeroNormalizer(u));
            }
            Ok(ground.iter().zip(raw).map(|(&j, r)| (j, r / f)).collect())
        })
        .collect()
}

/// Draws `Spin_B(Γ)`.
pub fn spin_from_polymers(model: &PolymerModel<'_>, config: &PolymerConfiguration, rng: &mut StreamRng) -> Result<SpinConfiguration> {
    let marginals = spin_marginals(model, config)?;
    let assignment = marginals
        .into_iter()
        .map(|law| {
            if law.len() == 1 {
                return law[0].0;
            }
            let mut u: f64 = rng.gen();
            for &(s, p) in &law {
                if u < p {
                    return s;
                }
                u -= p;
            }
            law[law.len() - 1].0
        })
        .collect();
    Ok(SpinConfiguration::new(assignment))
}

/// Reusable Gibbs sampler: either an exact cumulative table or the polymer
/// mixture with per-biclique chains.
#[derive(Debug)]
pub struct SpinSampler<'a> {
    inner: SamplerKind<'a>,
    estimate: LogEstimate,
    nv: usize,
    q: usize,
}

#[derive(Debug)]
enum SamplerKind<'a> {
    Exact {
        cumulative: Vec<f64>,
    },
    Polymer {
        contexts: Vec<ChainContext<'a>>,
        cumulative: Vec<f64>,
        chain: ChainParams,
        eps_sample: f64,
    },
}

impl<'a> SpinSampler<'a> {
    pub fn new(g: &'a BipartiteGraph, h: &'a InteractionMatrix, eps_star: f64, opts: &EstimatorOptions, seed: u64) -> Result<Self> {
        let mut warnings = Vec::new();
        let nv = g.num_vertices();
        let q = h.q();
        match plan(g, h, eps_star, opts, &mut warnings)? {
            Plan::Exact => {
                let probs = oracle::gibbs_distribution(g, h, opts.brute_force_budget)?;
                let mut acc = 0.0;
                let cumulative = probs
                    .iter()
                    .map(|p| {
                        acc += p;
                        acc
                    })
                    .collect();
                let estimate = LogEstimate {
                    ln_value: oracle::exact_z_with_budget(g, h, opts.brute_force_budget)?,
                    rel_err_target: eps_star,
                    confidence: 1.0,
                    mode: RunMode::Exact,
                    epsilon: None,
                    bicliques: enumerate_maximal_bicliques(h).len(),
                    runs: Vec::new(),
                    warnings,
                    mixture: None,
                };
                Ok(SpinSampler {
                    inner: SamplerKind::Exact { cumulative },
                    estimate,
                    nv,
                    q,
                })
            }
            Plan::Polymer { epsilon } => {
                let ctxs = contexts(g, h, epsilon, opts)?;
                let table = mixture_from_contexts(&ctxs, eps_star, opts, seed)?;
                let mut acc = 0.0;
                let cumulative = table
                    .records
                    .iter()
                    .map(|r| {
                        acc += (r.ln_term() - table.ln_total).exp();
                        acc
                    })
                    .collect();
                let failure: f64 = table.records.iter().map(|r| 1.0 - r.confidence).sum();
                let estimate = LogEstimate {
                    ln_value: table.ln_total,
                    rel_err_target: eps_star,
                    confidence: (1.0 - failure).max(0.0),
                    mode: if opts.mode == Mode::Strict { RunMode::Strict } else { RunMode::Lab },
                    epsilon: Some(epsilon),
                    bicliques: table.records.len(),
                    runs: Vec::new(),
                    warnings,
                    mixture: Some(table),
                };
                Ok(SpinSampler {
                    inner: SamplerKind::Polymer {
                        contexts: ctxs,
                        cumulative,
                        chain: opts.chain.clone(),
                        eps_sample: eps_star / 6.0,
                    },
                    estimate,
                    nv,
                    q,
                })
            }
        }
    }

    /// The partition-function estimate computed while preparing the sampler.
    pub fn estimate(&self) -> &LogEstimate {
        &self.estimate
    }

    /// One configuration drawn from the stream `seed`.
    pub fn sample(&self, seed: u64) -> Result<SpinConfiguration> {
        let mut r = rng::stream(seed, &[0x5a]);
        match &self.inner {
            SamplerKind::Exact { cumulative } => {
                let total = *cumulative.last().unwrap_or(&1.0);
                let u = r.gen::<f64>() * total;
                let x = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
                Ok(oracle::decode_configuration(x as u64, self.q, self.nv))
            }
            SamplerKind::Polymer {
                contexts,
                cumulative,
                chain,
                eps_sample,
            } => {
                let total = *cumulative.last().unwrap_or(&1.0);
                let u = r.gen::<f64>() * total;
                let i = cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1);
                let ctx = &contexts[i];
                let gamma = sample_polymer_config(ctx, chain, *eps_sample, derive_seed(seed, &[0x9a]))?;
                spin_from_polymers(ctx.model(), &gamma, &mut r)
            }
        }
    }

    /// `count` draws; draw `i` uses the stream `(seed, i)`.
    pub fn sample_many(&self, count: usize, seed: u64) -> Result<Vec<SpinConfiguration>> {
        (0..count)
            .into_par_iter()
            .map(|i| self.sample(derive_seed(seed, &[0xd4a, i as u64])))
            .collect()
    }
}

/// A single ε*-approximate Gibbs sample.
pub fn spin_sample(g: &BipartiteGraph, h: &InteractionMatrix, eps_star: f64, opts: &EstimatorOptions, seed: u64) -> Result<SpinConfiguration> {
    let sampler = SpinSampler::new(g, h, eps_star, opts, seed)?;
    sampler.sample(derive_seed(seed, &[0xd4a, 0]))
}

/// Result-record encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordFormat {
    Kv,
    Json,
}

/// `lnZ=<v> eps_star=<v> mode=<m> seed=<v> bicliques=<k> wallclock_ms=<v>` or the JSON equivalent.
pub fn format_record(est: &LogEstimate, seed: u64, wallclock_ms: u128, format: RecordFormat) -> String {
    match format {
        RecordFormat::Kv => format!(
            "lnZ={} eps_star={} mode={} seed={} bicliques={} wallclock_ms={}",
            est.ln_value, est.rel_err_target, est.mode, seed, est.bicliques, wallclock_ms
        ),
        RecordFormat::Json => serde_json::json!({
            "lnZ": est.ln_value,
            "eps_star": est.rel_err_target,
            "mode": est.mode.to_string(),
            "seed": seed,
            "bicliques": est.bicliques,
            "wallclock_ms": wallclock_ms as u64,
            "confidence": est.confidence,
            "epsilon": est.epsilon,
        })
        .to_string(),
    }
}

/// ln Z^polymer computed exactly per biclique (oracle ground truth for the mixture).
pub fn exact_mixture(g: &BipartiteGraph, h: &InteractionMatrix, epsilon: f64, size_cap: usize) -> Result<MixtureTable> {
    let records = enumerate_maximal_bicliques(h)
        .into_iter()
        .map(|b| {
            let model = PolymerModel::new(g, h, b.clone(), epsilon)?;
            let ctx = ChainContext::new(model, size_cap)?;
            Ok(MixtureRecord {
                ln_ground: b.ln_ground_count(g.n()),
                ln_z: oracle::exact_polymer_z(&ctx)?,
                size_cap: ctx.size_cap(),
                polymers: ctx.polymers().len(),
                runs: Vec::new(),
                confidence: 1.0,
                biclique: b,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixtureTable::from_records(records))
}
