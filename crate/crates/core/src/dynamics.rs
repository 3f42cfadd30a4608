//! Heat-bath polymer dynamics.
//!
//! One step picks a vertex `v` of the region uniformly, removes the polymer
//! covering `v` (if any), and resamples the slot at `v` from
//! `A_v = {⊥} ∪ {γ ∋ v allowed, inside the region, compatible with the rest}`
//! with probability proportional to `w(γ)` (and 1 for `⊥`). All
//! configurations reachable through `v` from a given state share the same
//! `A_v`, so the update is a Gibbs resampling of an equivalence class and is
//! reversible with respect to the truncated polymer measure.

use std::io::{self, Write};

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polymer::{Polymer, PolymerConfiguration, PolymerModel, DEFAULT_POLYMER_BUDGET};
use crate::rng::{self, StreamRng};

const NONE: u32 = u32::MAX;

/// Tuning knobs of the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    /// Largest polymer the chain may insert.
    pub size_cap: usize,
    /// Chain steps between recorded samples.
    pub steps_per_sample: usize,
    /// Steps discarded per replica; `None` uses [`mixing_steps`].
    pub burn_in: Option<usize>,
    /// Constant `C` of the step budget `C·|Λ|·ln(|Λ|/ε)`.
    pub mixing_constant: f64,
    /// Independent replicas per probability estimate.
    pub replicas: usize,
}

impl Default for ChainParams {
    fn default() -> Self {
        ChainParams {
            size_cap: 4,
            steps_per_sample: 1,
            burn_in: None,
            mixing_constant: 10.0,
            replicas: 8,
        }
    }
}

/// `ceil(C·|Λ|·ln(|Λ|/ε))`, at least 1.
pub fn mixing_steps(constant: f64, region_len: usize, eps: f64) -> usize {
    let l = region_len.max(1) as f64;
    let t = (constant * l * (l / eps).ln()).ceil();
    if t.is_finite() && t >= 1.0 {
        t as usize
    } else {
        1
    }
}

/// Upper bound `Σ_{k>cap} (eΔ³e^{−τ})^k` on the polymer mass dropped by the size cap.
/// Infinite when the series diverges.
pub fn truncation_tail_bound(degree: usize, tau: f64, size_cap: usize) -> f64 {
    let r = std::f64::consts::E * (degree as f64).powi(3) * (-tau).exp();
    if r >= 1.0 {
        f64::INFINITY
    } else {
        r.powi(size_cap as i32 + 1) / (1.0 - r)
    }
}

/// Precomputed polymer tables shared by every chain of one model.
#[derive(Debug)]
pub struct ChainContext<'a> {
    model: PolymerModel<'a>,
    size_cap: usize,
    polymers: Vec<Polymer>,
    log_weights: Vec<f64>,
    weights: Vec<f64>,
    by_vertex: Vec<Vec<u32>>,
    closure: Vec<Vec<u32>>,
}

impl<'a> ChainContext<'a> {
    /// Enumerates every allowed polymer up to `min(size_cap, ⌊2εn⌋)`.
    pub fn new(model: PolymerModel<'a>, size_cap: usize) -> Result<Self> {
        Self::with_budget(model, size_cap, DEFAULT_POLYMER_BUDGET)
    }

    pub fn with_budget(model: PolymerModel<'a>, size_cap: usize, budget: usize) -> Result<Self> {
        let size_cap = size_cap.min(model.max_size());
        let polymers = model.enumerate_allowed_polymers(size_cap, budget)?;
        let g = model.graph();
        let nv = g.num_vertices();
        let log_weights: Vec<f64> = polymers.iter().map(|p| model.polymer_weight_log(p)).collect();
        let weights = log_weights.iter().map(|l| l.exp()).collect();
        let mut by_vertex = vec![Vec::new(); nv];
        let mut closure = Vec::with_capacity(polymers.len());
        let mut mark = vec![false; nv];
        for (id, p) in polymers.iter().enumerate() {
            let mut cl = Vec::new();
            for &v in p.vertices() {
                by_vertex[v as usize].push(id as u32);
                for &u in std::iter::once(&v).chain(g.host_neighbors(v as usize)) {
                    if !mark[u as usize] {
                        mark[u as usize] = true;
                        cl.push(u);
                    }
                }
            }
            for &u in &cl {
                mark[u as usize] = false;
            }
            cl.sort_unstable();
            closure.push(cl);
        }
        Ok(ChainContext {
            model,
            size_cap,
            polymers,
            log_weights,
            weights,
            by_vertex,
            closure,
        })
    }

    pub fn model(&self) -> &PolymerModel<'a> {
        &self.model
    }

    /// Effective size cap (never above ⌊2εn⌋).
    pub fn size_cap(&self) -> usize {
        self.size_cap
    }

    pub fn polymers(&self) -> &[Polymer] {
        &self.polymers
    }

    pub fn log_weight(&self, id: usize) -> f64 {
        self.log_weights[id]
    }

    /// Ids of polymers containing `v`.
    pub fn polymers_at(&self, v: usize) -> &[u32] {
        &self.by_vertex[v]
    }

    /// True iff polymers `a` and `b` are compatible.
    pub fn compatible(&self, a: usize, b: usize) -> bool {
        let cl = &self.closure[a];
        self.polymers[b]
            .vertices()
            .iter()
            .all(|v| cl.binary_search(v).is_err())
    }

    /// Fresh chain on `region` started from the empty configuration.
    pub fn chain(&self, region: &[u32], seed: u64) -> Result<ChainState<'_, 'a>> {
        ChainState::new(self, region, seed)
    }
}

/// Transition law of one heat-bath update at a fixed vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateLaw {
    /// Polymer removed before resampling.
    pub removed: Option<usize>,
    /// `(inserted polymer or ⊥, probability)`; ⊥ first.
    pub options: Vec<(Option<usize>, f64)>,
}

/// A running chain: configuration, region and private random stream.
#[derive(Debug, Clone)]
pub struct ChainState<'c, 'a> {
    ctx: &'c ChainContext<'a>,
    region: Vec<u32>,
    candidates: Vec<Vec<u32>>,
    cover: Vec<u32>,
    block: Vec<u32>,
    num_polymers: usize,
    covered: usize,
    log_weight_sum: f64,
    rng: StreamRng,
    rng_seed: u64,
    steps_taken: u64,
    cumulative: Vec<f64>,
}

impl<'c, 'a> ChainState<'c, 'a> {
    pub fn new(ctx: &'c ChainContext<'a>, region: &[u32], seed: u64) -> Result<Self> {
        let nv = ctx.model.graph().num_vertices();
        let mut inside = vec![false; nv];
        for &v in region {
            if v as usize >= nv {
                return Err(Error::InvalidRange(format!("region vertex {v} out of range")));
            }
            inside[v as usize] = true;
        }
        let mut region: Vec<u32> = region.to_vec();
        region.sort_unstable();
        region.dedup();
        if region.is_empty() {
            return Err(Error::InvalidRange("empty region".into()));
        }
        let candidates = (0..nv)
            .map(|v| {
                if !inside[v] {
                    return Vec::new();
                }
                ctx.by_vertex[v]
                    .iter()
                    .copied()
                    .filter(|&id| ctx.polymers[id as usize].vertices().iter().all(|&x| inside[x as usize]))
                    .collect()
            })
            .collect();
        Ok(ChainState {
            ctx,
            region,
            candidates,
            cover: vec![NONE; nv],
            block: vec![0; nv],
            num_polymers: 0,
            covered: 0,
            log_weight_sum: 0.0,
            rng: rng::stream(seed, &[]),
            rng_seed: seed,
            steps_taken: 0,
            cumulative: Vec::new(),
        })
    }

    /// Chain started from the given pairwise compatible polymer ids.
    pub fn from_polymer_ids(ctx: &'c ChainContext<'a>, region: &[u32], ids: &[usize], seed: u64) -> Result<Self> {
        let mut st = Self::new(ctx, region, seed)?;
        for &id in ids {
            let p = &ctx.polymers[id];
            if p.vertices().iter().any(|&v| st.block[v as usize] > 0 || st.region.binary_search(&v).is_err()) {
                return Err(Error::InvalidPolymer(format!("polymer {id} conflicts with the state or region")));
            }
            st.insert(id as u32);
        }
        Ok(st)
    }

    pub fn region(&self) -> &[u32] {
        &self.region
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn num_polymers(&self) -> usize {
        self.num_polymers
    }

    pub fn covered_vertices(&self) -> usize {
        self.covered
    }

    pub fn log_weight_sum(&self) -> f64 {
        self.log_weight_sum
    }

    pub fn is_covered(&self, v: usize) -> bool {
        self.cover[v] != NONE
    }

    /// Sorted ids of the polymers in the current configuration.
    pub fn polymer_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .region
            .iter()
            .filter_map(|&v| {
                let id = self.cover[v as usize];
                (id != NONE && self.ctx.polymers[id as usize].vertices()[0] == v).then_some(id as usize)
            })
            .collect();
        ids.sort_unstable();
        ids
    }

    pub fn config(&self) -> PolymerConfiguration {
        let polymers = self
            .polymer_ids()
            .into_iter()
            .map(|id| self.ctx.polymers[id].clone())
            .collect();
        PolymerConfiguration::new(self.ctx.model.graph(), polymers).expect("chain state is always compatible")
    }

    fn insert(&mut self, id: u32) {
        let ctx = self.ctx;
        for &x in &ctx.closure[id as usize] {
            self.block[x as usize] += 1;
        }
        let p = &ctx.polymers[id as usize];
        for &x in p.vertices() {
            self.cover[x as usize] = id;
        }
        self.num_polymers += 1;
        self.covered += p.len();
        self.log_weight_sum += ctx.log_weights[id as usize];
    }

    fn remove(&mut self, id: u32) {
        let ctx = self.ctx;
        for &x in &ctx.closure[id as usize] {
            self.block[x as usize] -= 1;
        }
        let p = &ctx.polymers[id as usize];
        for &x in p.vertices() {
            self.cover[x as usize] = NONE;
        }
        self.num_polymers -= 1;
        self.covered -= p.len();
        self.log_weight_sum -= ctx.log_weights[id as usize];
    }

    /// Fills `cumulative` with the running weight sums of `candidates[v]`
    /// (⊥ contributes the initial 1); returns the total.
    fn accumulate(&mut self, v: usize) -> f64 {
        let ctx = self.ctx;
        let mut total = 1.0;
        self.cumulative.clear();
        for &id in &self.candidates[v] {
            let ok = ctx.polymers[id as usize]
                .vertices()
                .iter()
                .all(|&x| self.block[x as usize] == 0);
            if ok {
                total += ctx.weights[id as usize];
            }
            self.cumulative.push(total);
        }
        total
    }

    /// One heat-bath update.
    pub fn step(&mut self) {
        self.steps_taken += 1;
        let v = self.region[self.rng.gen_range(0..self.region.len())] as usize;
        let old = self.cover[v];
        if old != NONE {
            self.remove(old);
        }
        if self.candidates[v].is_empty() {
            return;
        }
        let total = self.accumulate(v);
        let u = self.rng.gen::<f64>() * total;
        if u < 1.0 {
            return;
        }
        let idx = self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1);
        self.insert(self.candidates[v][idx]);
    }

    pub fn run(&mut self, steps: usize) {
        for _ in 0..steps {
            self.step();
        }
    }

    /// Runs `steps` steps, writing a `step\tnum_polymers\tcovered_vertices\tlog_weight_sum`
    /// record every 1000 steps.
    pub fn run_with_diagnostics(&mut self, steps: usize, out: &mut dyn Write) -> io::Result<()> {
        for _ in 0..steps {
            self.step();
            if self.steps_taken % 1000 == 0 {
                writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    self.steps_taken, self.num_polymers, self.covered, self.log_weight_sum
                )?;
            }
        }
        Ok(())
    }

    /// Exact law of an update at `v` from the current state. The state is left unchanged.
    pub fn update_law(&mut self, v: usize) -> UpdateLaw {
        let old = self.cover[v];
        if old != NONE {
            self.remove(old);
        }
        let total = self.accumulate(v);
        let mut options = vec![(None, 1.0 / total)];
        let mut prev = 1.0;
        for (i, &c) in self.cumulative.iter().enumerate() {
            if c > prev {
                options.push((Some(self.candidates[v][i] as usize), (c - prev) / total));
            }
            prev = c;
        }
        if old != NONE {
            self.insert(old);
        }
        UpdateLaw {
            removed: (old != NONE).then_some(old as usize),
            options,
        }
    }
}

/// Runs the chain from `∅` on the full vertex set for
/// `ceil(C·|V|·ln(|V|/ε_sample))` steps and returns the final configuration.
pub fn sample_polymer_config(ctx: &ChainContext<'_>, params: &ChainParams, eps_sample: f64, seed: u64) -> Result<PolymerConfiguration> {
    if !(eps_sample > 0.0 && eps_sample < 1.0) {
        return Err(Error::InvalidRange(format!("eps_sample {eps_sample} not in (0, 1)")));
    }
    let nv = ctx.model.graph().num_vertices();
    let region: Vec<u32> = (0..nv as u32).collect();
    let mut st = ctx.chain(&region, seed)?;
    st.run(mixing_steps(params.mixing_constant, nv, eps_sample));
    Ok(st.config())
}

/// Fraction of `m` recorded chain states on `region` in which `v` is uncovered.
///
/// The samples come from `params.replicas` independent chains, each burned in
/// and then recorded every `steps_per_sample` steps.
pub fn uncovered_probability(
    ctx: &ChainContext<'_>,
    params: &ChainParams,
    region: &[u32],
    v: usize,
    m: usize,
    eps_target: f64,
    seed: u64,
) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidSampleCount);
    }
    if !region.contains(&(v as u32)) {
        return Err(Error::InvalidRange(format!("vertex {v} not in region")));
    }
    let proto = ctx.chain(region, seed)?;
    if proto.candidates[v].is_empty() {
        return Ok(1.0);
    }
    let replicas = params.replicas.clamp(1, m);
    let burn = params
        .burn_in
        .unwrap_or_else(|| mixing_steps(params.mixing_constant, region.len(), eps_target.clamp(1e-12, 0.5)));
    let stride = params.steps_per_sample.max(1);
    let hits: usize = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let mut st = proto.clone();
            st.rng = rng::stream(seed, &[r as u64]);
            st.run(burn);
            let quota = m / replicas + usize::from(r < m % replicas);
            let mut hits = 0usize;
            for _ in 0..quota {
                st.run(stride);
                hits += usize::from(!st.is_covered(v));
            }
            hits
        })
        .sum();
    Ok(hits as f64 / m as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BipartiteGraph;
    use crate::spin_model::{Biclique, InteractionMatrix};

    fn hc_ctx<'a>(g: &'a BipartiteGraph, h: &'a InteractionMatrix, cap: usize) -> ChainContext<'a> {
        let m = PolymerModel::new(g, h, Biclique::new(vec![0, 1], vec![1]), 0.5).unwrap();
        ChainContext::new(m, cap).unwrap()
    }

    #[test]
    fn all_ones_stays_empty() {
        let g = BipartiteGraph::complete(3);
        let h = InteractionMatrix::all_ones(2);
        let m = PolymerModel::new(&g, &h, Biclique::new(vec![0, 1], vec![0, 1]), 0.5).unwrap();
        let ctx = ChainContext::new(m, 3).unwrap();
        let region: Vec<u32> = (0..6).collect();
        let mut st = ctx.chain(&region, 3).unwrap();
        st.run(500);
        assert_eq!(st.num_polymers(), 0);
        let p = uncovered_probability(&ctx, &ChainParams::default(), &region, 4, 100, 0.1, 1).unwrap();
        assert_eq!(p, 1.0);
        let cfg = sample_polymer_config(&ctx, &ChainParams::default(), 0.1, 9).unwrap();
        assert!(cfg.is_empty());
    }

    #[test]
    fn left_vertex_law_is_bottom_only() {
        let g = BipartiteGraph::complete(3);
        let h = InteractionMatrix::hard_core();
        let ctx = hc_ctx(&g, &h, 1);
        let region: Vec<u32> = (0..6).collect();
        let mut st = ctx.chain(&region, 0).unwrap();
        let law = st.update_law(0);
        assert_eq!(law.removed, None);
        assert_eq!(law.options, vec![(None, 1.0)]);
        // right vertex: ⊥ with 1/(1+1/8), the singleton with (1/8)/(1+1/8)
        let law = st.update_law(3);
        assert_eq!(law.options.len(), 2);
        assert!((law.options[0].1 - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn zero_samples_rejected() {
        let g = BipartiteGraph::complete(3);
        let h = InteractionMatrix::hard_core();
        let ctx = hc_ctx(&g, &h, 1);
        let region: Vec<u32> = (0..6).collect();
        assert_eq!(
            uncovered_probability(&ctx, &ChainParams::default(), &region, 3, 0, 0.1, 1),
            Err(Error::InvalidSampleCount)
        );
    }

    #[test]
    fn reproducible_given_seed() {
        let g = BipartiteGraph::complete(3);
        let h = InteractionMatrix::hard_core();
        let ctx = hc_ctx(&g, &h, 3);
        let params = ChainParams::default();
        let a = sample_polymer_config(&ctx, &params, 0.01, 5).unwrap();
        let b = sample_polymer_config(&ctx, &params, 0.01, 5).unwrap();
        assert_eq!(a, b);
        let region: Vec<u32> = (0..6).collect();
        let p1 = uncovered_probability(&ctx, &params, &region, 4, 5000, 0.01, 2).unwrap();
        let p2 = uncovered_probability(&ctx, &params, &region, 4, 5000, 0.01, 2).unwrap();
        assert_eq!(p1, p2);
    }

    #[test]
    fn state_invariants_hold_along_run() {
        let g = BipartiteGraph::cycle(6);
        let h = InteractionMatrix::hard_core();
        let ctx = hc_ctx(&g, &h, 3);
        let region: Vec<u32> = (0..12).collect();
        let mut st = ctx.chain(&region, 11).unwrap();
        for _ in 0..200 {
            st.run(7);
            // config() revalidates pairwise compatibility
            let cfg = st.config();
            assert_eq!(cfg.len(), st.num_polymers());
            assert_eq!(cfg.covered_vertices().count(), st.covered_vertices());
        }
    }

    #[test]
    fn diagnostics_stream() {
        let g = BipartiteGraph::complete(3);
        let h = InteractionMatrix::hard_core();
        let ctx = hc_ctx(&g, &h, 2);
        let region: Vec<u32> = (0..6).collect();
        let mut st = ctx.chain(&region, 1).unwrap();
        let mut buf = Vec::new();
        st.run_with_diagnostics(3500, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("1000\t"));
        assert_eq!(lines[2].split('\t').count(), 4);
    }

    #[test]
    fn step_budget_formula() {
        assert_eq!(mixing_steps(10.0, 6, 0.01), (60.0 * 600f64.ln()).ceil() as usize);
        assert!(truncation_tail_bound(3, 1.0, 2).is_infinite());
        assert!(truncation_tail_bound(3, 10.0, 2) < 1e-3);
    }
}
