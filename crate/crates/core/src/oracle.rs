//! Brute-force reference computations for small instances.
//!
//! Everything here is deliberately naive: full enumeration of spin
//! configurations, of compatible polymer families and of chain states.

use crate::dynamics::{ChainContext, ChainState};
use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::logspace::{LogSum, LN_ZERO};
use crate::polymer::{PolymerConfiguration, PolymerModel};
use crate::spin_model::{configuration_weight_log, enumerate_maximal_bicliques, Biclique, InteractionMatrix, Spin, SpinConfiguration};

/// Default cap on the number of spin configurations enumerated.
pub const DEFAULT_CONFIG_BUDGET: u64 = 1 << 24;
/// Default cap on the number of polymers in an exact polymer sum.
pub const DEFAULT_POLYMER_SUM_BUDGET: usize = 5000;
/// Default cap on chain states in [`exact_chain_analysis`].
pub const DEFAULT_STATE_BUDGET: usize = 10_000;
/// Largest matrix handed to [`dense_eigenvalues`].
pub const MAX_DENSE_DIM: usize = 512;

/// Number of configurations `q^{|V|}`, or `None` on overflow.
pub fn configuration_count(g: &BipartiteGraph, q: usize) -> Option<u64> {
    let mut c: u64 = 1;
    for _ in 0..g.num_vertices() {
        c = c.checked_mul(q as u64)?;
    }
    Some(c)
}

fn check_budget(g: &BipartiteGraph, q: usize, budget: u64) -> Result<u64> {
    match configuration_count(g, q) {
        Some(c) if c <= budget => Ok(c),
        _ => Err(Error::ResourceLimit(format!(
            "{q}^{} configurations exceed budget {budget}",
            g.num_vertices()
        ))),
    }
}

/// Decodes configuration index `x`: vertex `v` gets digit `v` of `x` in base `q`.
pub fn decode_configuration(mut x: u64, q: usize, nv: usize) -> SpinConfiguration {
    let mut a = Vec::with_capacity(nv);
    for _ in 0..nv {
        a.push((x % q as u64) as Spin);
        x /= q as u64;
    }
    SpinConfiguration::new(a)
}

/// Calls `f(sigma, ln w(sigma))` for every configuration in index order.
fn for_each_configuration(g: &BipartiteGraph, h: &InteractionMatrix, budget: u64, mut f: impl FnMut(&[Spin], f64)) -> Result<()> {
    let total = check_budget(g, h.q(), budget)?;
    let nv = g.num_vertices();
    let q = h.q() as Spin;
    let mut sigma = SpinConfiguration::new(vec![0; nv]);
    for _ in 0..total {
        let lw = configuration_weight_log(g, h, &sigma);
        f(&sigma.assignment, lw);
        for s in sigma.assignment.iter_mut() {
            *s += 1;
            if *s < q {
                break;
            }
            *s = 0;
        }
    }
    Ok(())
}

/// ln Z_{G,H} by exhaustive enumeration.
pub fn exact_z(g: &BipartiteGraph, h: &InteractionMatrix) -> Result<f64> {
    exact_z_with_budget(g, h, DEFAULT_CONFIG_BUDGET)
}

pub fn exact_z_with_budget(g: &BipartiteGraph, h: &InteractionMatrix, budget: u64) -> Result<f64> {
    let mut acc = LogSum::new();
    for_each_configuration(g, h, budget, |_, lw| acc.add(lw))?;
    Ok(acc.value())
}

/// Gibbs probabilities indexed as in [`decode_configuration`].
pub fn gibbs_distribution(g: &BipartiteGraph, h: &InteractionMatrix, budget: u64) -> Result<Vec<f64>> {
    let mut logs = Vec::new();
    for_each_configuration(g, h, budget, |_, lw| logs.push(lw))?;
    let mut acc = LogSum::new();
    for &l in &logs {
        acc.add(l);
    }
    let ln_z = acc.value();
    Ok(logs.into_iter().map(|l| (l - ln_z).exp()).collect())
}

/// Index of a configuration under [`decode_configuration`].
pub fn encode_configuration(sigma: &[Spin], q: usize) -> u64 {
    sigma.iter().rev().fold(0u64, |acc, &s| acc * q as u64 + s as u64)
}

/// Exhaustive sums of Definition-style restricted configuration classes.
#[derive(Debug, Clone)]
pub struct RestrictedSums {
    pub epsilon: f64,
    pub ln_z: f64,
    /// Sum over configurations close to at least one maximal biclique.
    pub ln_z_eps: f64,
    /// Same, counted once per biclique.
    pub ln_z_hat_eps: f64,
    /// Configurations close to two distinct maximal bicliques.
    pub ln_z_overlap_eps: f64,
    /// The three sums above at 3ε (clamped to 1).
    pub ln_z_eps3: f64,
    pub ln_z_hat_eps3: f64,
    pub ln_z_overlap_eps3: f64,
    /// Per maximal biclique: ln of the weight of its ε-class.
    pub per_biclique: Vec<(Biclique, f64)>,
}

/// `|σ⁻¹(B_0) ∩ V^0| + |σ⁻¹(B_1) ∩ V^1|`.
pub fn ground_agreement(g: &BipartiteGraph, b: &Biclique, sigma: &[Spin]) -> usize {
    sigma
        .iter()
        .enumerate()
        .filter(|&(v, &s)| b.contains(g.side(v), s))
        .count()
}

/// Classifies every configuration against every maximal biclique at ε and 3ε.
pub fn exact_restricted_sums(g: &BipartiteGraph, h: &InteractionMatrix, epsilon: f64) -> Result<RestrictedSums> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidRange(format!("epsilon {epsilon} not in (0, 1]")));
    }
    let bicliques = enumerate_maximal_bicliques(h);
    let nv = g.num_vertices() as f64;
    let eps3 = (3.0 * epsilon).min(1.0);
    let need = |e: f64| (1.0 - e) * nv - 1e-9;
    let (need1, need3) = (need(epsilon), need(eps3));
    let mut z = LogSum::new();
    let mut z_eps = LogSum::new();
    let mut z_hat = LogSum::new();
    let mut z_ov = LogSum::new();
    let mut z_eps3 = LogSum::new();
    let mut z_hat3 = LogSum::new();
    let mut z_ov3 = LogSum::new();
    let mut per = vec![LogSum::new(); bicliques.len()];
    for_each_configuration(g, h, DEFAULT_CONFIG_BUDGET, |sigma, lw| {
        z.add(lw);
        let (mut hits, mut hits3) = (0usize, 0usize);
        for (i, b) in bicliques.iter().enumerate() {
            let agree = ground_agreement(g, b, sigma) as f64;
            if agree >= need1 {
                hits += 1;
                per[i].add(lw);
                z_hat.add(lw);
            }
            if agree >= need3 {
                hits3 += 1;
                z_hat3.add(lw);
            }
        }
        if hits >= 1 {
            z_eps.add(lw);
        }
        if hits >= 2 {
            z_ov.add(lw);
        }
        if hits3 >= 1 {
            z_eps3.add(lw);
        }
        if hits3 >= 2 {
            z_ov3.add(lw);
        }
    })?;
    Ok(RestrictedSums {
        epsilon,
        ln_z: z.value(),
        ln_z_eps: z_eps.value(),
        ln_z_hat_eps: z_hat.value(),
        ln_z_overlap_eps: z_ov.value(),
        ln_z_eps3: z_eps3.value(),
        ln_z_hat_eps3: z_hat3.value(),
        ln_z_overlap_eps3: z_ov3.value(),
        per_biclique: bicliques.into_iter().zip(per.iter().map(LogSum::value)).collect(),
    })
}

/// ln Σ_{τ ∈ Σ^B(Γ)} w(τ): configurations agreeing with σ_Γ on ∪Γ and taking
/// ground spins of their side everywhere else.
pub fn exact_sigma_gamma_sum(model: &PolymerModel<'_>, config: &PolymerConfiguration) -> Result<f64> {
    let g = model.graph();
    let h = model.matrix();
    let b = model.biclique();
    let nv = g.num_vertices();
    let choices: Vec<Vec<Spin>> = (0..nv as u32)
        .map(|v| match config.spin_of(v) {
            Some(s) => vec![s],
            None => b.side(g.side(v as usize)).to_vec(),
        })
        .collect();
    let count = choices.iter().try_fold(1u64, |acc, c| acc.checked_mul(c.len() as u64));
    if !matches!(count, Some(c) if c <= DEFAULT_CONFIG_BUDGET) {
        return Err(Error::ResourceLimit("Sigma(Gamma) too large to enumerate".into()));
    }
    let mut idx = vec![0usize; nv];
    let mut sigma = SpinConfiguration::new(choices.iter().map(|c| c[0]).collect());
    let mut acc = LogSum::new();
    loop {
        acc.add(configuration_weight_log(g, h, &sigma));
        let mut k = 0;
        loop {
            if k == nv {
                return Ok(acc.value());
            }
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                sigma.assignment[k] = choices[k][idx[k]];
                break;
            }
            idx[k] = 0;
            sigma.assignment[k] = choices[k][0];
            k += 1;
        }
    }
}

/// ln Σ w(τ) over configurations whose excited vertices split into G³-components
/// of size at most ⌊2εn⌋, i.e. over the disjoint union of Σ^B(Γ) for Γ ∈ Ω.
pub fn exact_polymer_union_sum(model: &PolymerModel<'_>) -> Result<f64> {
    let g = model.graph();
    let b = model.biclique();
    let max = model.max_size();
    let mut acc = LogSum::new();
    for_each_configuration(g, model.matrix(), DEFAULT_CONFIG_BUDGET, |sigma, lw| {
        let excited: Vec<u32> = (0..sigma.len())
            .filter(|&v| !b.contains(g.side(v), sigma[v]))
            .map(|v| v as u32)
            .collect();
        if components_within(g, &excited, max) {
            acc.add(lw);
        }
    })?;
    Ok(acc.value())
}

fn components_within(g: &BipartiteGraph, set: &[u32], max: usize) -> bool {
    let mut seen = vec![false; set.len()];
    for start in 0..set.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut size = 0;
        while let Some(i) = stack.pop() {
            size += 1;
            let host = g.host_neighbors(set[i] as usize);
            for j in 0..set.len() {
                if !seen[j] && host.binary_search(&set[j]).is_ok() {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if size > max {
            return false;
        }
    }
    true
}

/// Visits every pairwise compatible family of polymer ids (including ∅) whose
/// polymers pass `keep`, in lexicographic order.
fn for_each_family(ctx: &ChainContext<'_>, keep: &[usize], limit: usize, f: &mut dyn FnMut(&[usize]) -> Result<()>) -> Result<()> {
    let n = keep.len();
    let compat: Vec<Vec<bool>> = (0..n)
        .map(|i| (0..n).map(|j| i != j && ctx.compatible(keep[i], keep[j])).collect())
        .collect();
    let mut visited = 0usize;
    let mut stack: Vec<usize> = Vec::new();
    fn rec(
        start: usize,
        stack: &mut Vec<usize>,
        keep: &[usize],
        compat: &[Vec<bool>],
        visited: &mut usize,
        limit: usize,
        f: &mut dyn FnMut(&[usize]) -> Result<()>,
    ) -> Result<()> {
        *visited += 1;
        if *visited > limit {
            return Err(Error::ResourceLimit(format!("more than {limit} polymer families")));
        }
        let ids: Vec<usize> = stack.iter().map(|&i| keep[i]).collect();
        f(&ids)?;
        for next in start..keep.len() {
            if stack.iter().all(|&s| compat[s][next]) {
                stack.push(next);
                rec(next + 1, stack, keep, compat, visited, limit, f)?;
                stack.pop();
            }
        }
        Ok(())
    }
    rec(0, &mut stack, keep, &compat, &mut visited, limit, f)
}

/// ln Σ_{Γ} Π_{γ∈Γ} w(γ) over compatible families of the context's polymers.
pub fn exact_polymer_z(ctx: &ChainContext<'_>) -> Result<f64> {
    exact_polymer_z_with_budget(ctx, DEFAULT_POLYMER_SUM_BUDGET, usize::MAX)
}

pub fn exact_polymer_z_with_budget(ctx: &ChainContext<'_>, polymer_budget: usize, family_limit: usize) -> Result<f64> {
    let n = ctx.polymers().len();
    if n > polymer_budget {
        return Err(Error::ResourceLimit(format!("{n} polymers exceed budget {polymer_budget}")));
    }
    let keep: Vec<usize> = (0..n).collect();
    let mut acc = LogSum::new();
    for_each_family(ctx, &keep, family_limit, &mut |ids| {
        acc.add(ids.iter().map(|&i| ctx.log_weight(i)).sum());
        Ok(())
    })?;
    Ok(acc.value())
}

/// Exact analysis of the heat-bath chain on a region.
#[derive(Debug, Clone)]
pub struct ChainAnalysis {
    /// Each state as its sorted polymer ids.
    pub states: Vec<Vec<usize>>,
    /// Sparse transition rows.
    pub transitions: Vec<Vec<(usize, f64)>>,
    /// Truncated polymer Gibbs distribution.
    pub gibbs: Vec<f64>,
    /// Stationary distribution found by power iteration.
    pub stationary: Vec<f64>,
    /// max |π(x)P(x,y) − π(y)P(y,x)|.
    pub detailed_balance_violation: f64,
    /// max |(πP)(y) − π(y)|.
    pub stationarity_violation: f64,
    /// max |stationary − gibbs|.
    pub stationary_gap_to_gibbs: f64,
    /// 1 − second largest eigenvalue, when the state space is small enough.
    pub spectral_gap: Option<f64>,
}

/// Builds the full transition matrix of the heat-bath chain on `region`.
pub fn exact_chain_analysis(ctx: &ChainContext<'_>, region: &[u32], max_states: usize) -> Result<ChainAnalysis> {
    let mut in_region = vec![false; ctx.model().graph().num_vertices()];
    for &v in region {
        in_region[v as usize] = true;
    }
    let keep: Vec<usize> = (0..ctx.polymers().len())
        .filter(|&i| ctx.log_weight(i) > f64::NEG_INFINITY)
        .filter(|&i| ctx.polymers()[i].vertices().iter().all(|&v| in_region[v as usize]))
        .collect();
    let mut states: Vec<Vec<usize>> = Vec::new();
    for_each_family(ctx, &keep, max_states, &mut |ids| {
        states.push(ids.to_vec());
        Ok(())
    })?;
    states.sort();
    let index = |s: &[usize]| states.binary_search_by(|x| x.as_slice().cmp(s)).expect("closed state space");

    let mut logs = LogSum::new();
    let log_pi: Vec<f64> = states
        .iter()
        .map(|s| s.iter().map(|&i| ctx.log_weight(i)).sum::<f64>())
        .collect();
    for &l in &log_pi {
        logs.add(l);
    }
    let gibbs: Vec<f64> = log_pi.iter().map(|l| (l - logs.value()).exp()).collect();

    let mut region_sorted = region.to_vec();
    region_sorted.sort_unstable();
    region_sorted.dedup();
    let pick = 1.0 / region_sorted.len() as f64;
    let mut transitions = Vec::with_capacity(states.len());
    for s in &states {
        let mut chain = ChainState::from_polymer_ids(ctx, &region_sorted, s, 0)?;
        let mut row: Vec<(usize, f64)> = Vec::new();
        for &v in &region_sorted {
            let law = chain.update_law(v as usize);
            let base: Vec<usize> = s.iter().copied().filter(|&i| Some(i) != law.removed).collect();
            for (choice, p) in law.options {
                let mut next = base.clone();
                if let Some(c) = choice {
                    next.push(c);
                    next.sort_unstable();
                }
                row.push((index(&next), p * pick));
            }
        }
        row.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (j, p) in row {
            match merged.last_mut() {
                Some((k, acc)) if *k == j => *acc += p,
                _ => merged.push((j, p)),
            }
        }
        transitions.push(merged);
    }

    let ns = states.len();
    let mut db = 0.0f64;
    let mut flow = vec![0.0; ns];
    for (x, row) in transitions.iter().enumerate() {
        for &(y, p) in row {
            flow[y] += gibbs[x] * p;
            let back = transitions[y]
                .binary_search_by_key(&x, |&(k, _)| k)
                .map(|k| transitions[y][k].1)
                .unwrap_or(0.0);
            db = db.max((gibbs[x] * p - gibbs[y] * back).abs());
        }
    }
    let stat = flow.iter().zip(&gibbs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    // power iteration of the lazy chain from uniform
    let mut mu = vec![1.0 / ns as f64; ns];
    for _ in 0..100_000 {
        let mut next = vec![0.0; ns];
        for (x, row) in transitions.iter().enumerate() {
            next[x] += 0.5 * mu[x];
            for &(y, p) in row {
                next[y] += 0.5 * mu[x] * p;
            }
        }
        let diff = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum::<f64>();
        mu = next;
        if diff < 1e-15 {
            break;
        }
    }
    let gap_to_gibbs = mu.iter().zip(&gibbs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let spectral_gap = if ns <= MAX_DENSE_DIM {
        let mut sym = vec![vec![0.0; ns]; ns];
        for (x, row) in transitions.iter().enumerate() {
            for &(y, p) in row {
                sym[x][y] = p * (gibbs[x] / gibbs[y]).sqrt();
            }
        }
        // symmetrize away rounding
        for x in 0..ns {
            for y in x + 1..ns {
                let m = 0.5 * (sym[x][y] + sym[y][x]);
                sym[x][y] = m;
                sym[y][x] = m;
            }
        }
        let eig = dense_eigenvalues(&sym)?;
        Some(if eig.len() > 1 { 1.0 - eig[1] } else { 1.0 })
    } else {
        None
    };

    Ok(ChainAnalysis {
        states,
        transitions,
        gibbs,
        stationary: mu,
        detailed_balance_violation: db,
        stationarity_violation: stat,
        stationary_gap_to_gibbs: gap_to_gibbs,
        spectral_gap,
    })
}

/// Sweep cap for [`dense_eigenvalues`].
pub const MAX_JACOBI_SWEEPS: usize = 100;

/// All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn dense_eigenvalues(matrix: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = matrix.len();
    if n > MAX_DENSE_DIM {
        return Err(Error::ResourceLimit(format!("dimension {n} exceeds {MAX_DENSE_DIM}")));
    }
    if matrix.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidMatrix("matrix is not square".into()));
    }
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let off = |a: &[Vec<f64>]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };
    let mut residual = off(&a);
    let mut sweeps = 0;
    while residual > 1e-12 {
        if sweeps == MAX_JACOBI_SWEEPS {
            return Err(Error::NoConvergence {
                iterations: sweeps,
                residual,
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
        residual = off(&a);
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| y.total_cmp(x));
    Ok(eig)
}

/// Dense adjacency matrix of `g` (oracle use).
pub fn adjacency_matrix(g: &BipartiteGraph) -> Vec<Vec<f64>> {
    let nv = g.num_vertices();
    let mut a = vec![vec![0.0; nv]; nv];
    for (u, v) in g.edges() {
        a[u][v] = 1.0;
        a[v][u] = 1.0;
    }
    a
}

/// Second largest adjacency eigenvalue from the dense spectrum.
pub fn dense_second_eigenvalue(g: &BipartiteGraph) -> Result<f64> {
    let eig = dense_eigenvalues(&adjacency_matrix(g))?;
    Ok(eig.get(1).copied().unwrap_or(LN_ZERO))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ChainContext;

    #[test]
    fn exact_z_examples() {
        let k33 = BipartiteGraph::complete(3);
        let ones = InteractionMatrix::all_ones(3);
        assert!((exact_z(&k33, &ones).unwrap() - 6.0 * 3f64.ln()).abs() < 1e-12);

        let k22 = BipartiteGraph::from_edges_relaxed(2, &[(0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        let hc = InteractionMatrix::hard_core();
        assert!((exact_z(&k22, &hc).unwrap() - 7f64.ln()).abs() < 1e-12);

        let edge = BipartiteGraph::from_edges_relaxed(1, &[(0, 1)]).unwrap();
        let ising = InteractionMatrix::new(vec![vec![1.0, 1.0 / 3.0], vec![1.0 / 3.0, 1.0]], 1.0 / 3.0).unwrap();
        assert!((exact_z(&edge, &ising).unwrap() - (2.0 + 2.0 / 3.0f64).ln()).abs() < 1e-12);

        assert!(matches!(exact_z_with_budget(&k33, &ones, 100), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn encode_decode_roundtrip() {
        for x in 0..81u64 {
            let s = decode_configuration(x, 3, 4);
            assert_eq!(encode_configuration(&s.assignment, 3), x);
        }
    }

    #[test]
    fn restricted_sums_examples() {
        let k33 = BipartiteGraph::complete(3);
        let hc = InteractionMatrix::hard_core();
        let r = exact_restricted_sums(&k33, &hc, 1.0).unwrap();
        assert!((r.ln_z_eps - r.ln_z).abs() < 1e-12);

        let ones = InteractionMatrix::all_ones(2);
        let r = exact_restricted_sums(&k33, &ones, 0.2).unwrap();
        assert_eq!(r.ln_z_overlap_eps, LN_ZERO);
        assert_eq!(r.per_biclique.len(), 1);

        // ε = 1/6: at least 5 of 6 vertices in the ground set of some biclique.
        // For ({0,1},{1}): right side has at most one 0; independent sets of K33 with
        // that property: all 8 left subsets with right empty, plus 3 right singletons.
        let r = exact_restricted_sums(&k33, &hc, 1.0 / 6.0).unwrap();
        assert!((r.per_biclique[0].1 - 11f64.ln()).abs() < 1e-12);
        assert!((r.per_biclique[1].1 - 11f64.ln()).abs() < 1e-12);
        assert!((r.ln_z_hat_eps - 22f64.ln()).abs() < 1e-12);
        // overlap: at most one zero on each side, never both: 1 + 3 + 3
        assert!((r.ln_z_overlap_eps - 7f64.ln()).abs() < 1e-12);
        assert!((r.ln_z_eps - 15f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn polymer_z_singletons_on_k33() {
        let k33 = BipartiteGraph::complete(3);
        let hc = InteractionMatrix::hard_core();
        let m = PolymerModel::new(&k33, &hc, Biclique::new(vec![0, 1], vec![1]), 0.5).unwrap();
        let ctx = ChainContext::new(m.clone(), 1).unwrap();
        // three pairwise incompatible singletons of weight 1/8
        assert!((exact_polymer_z(&ctx).unwrap() - (1.0 + 3.0 / 8.0f64).ln()).abs() < 1e-12);
        // full cap: every nonempty subset of right vertices is one polymer of weight 1/8
        let ctx = ChainContext::new(m.clone(), 3).unwrap();
        let lz = exact_polymer_z(&ctx).unwrap();
        assert!((lz - (1.0 + 7.0 / 8.0f64).ln()).abs() < 1e-12);
        let union = exact_polymer_union_sum(&m).unwrap();
        assert!((lz + m.biclique().ln_ground_count(3) - union).abs() < 1e-12);
    }

    #[test]
    fn polymer_z_empty_model() {
        let k33 = BipartiteGraph::complete(3);
        let ones = InteractionMatrix::all_ones(2);
        let m = PolymerModel::new(&k33, &ones, Biclique::new(vec![0, 1], vec![0, 1]), 0.5).unwrap();
        let ctx = ChainContext::new(m, 3).unwrap();
        assert_eq!(exact_polymer_z(&ctx).unwrap(), 0.0);
        let a = exact_chain_analysis(&ctx, &(0..6).collect::<Vec<_>>(), DEFAULT_STATE_BUDGET).unwrap();
        assert_eq!(a.states.len(), 1);
        assert_eq!(a.detailed_balance_violation, 0.0);
    }

    #[test]
    fn polymer_z_far_pair_on_c16() {
        let c16 = BipartiteGraph::cycle(8);
        let hc = InteractionMatrix::hard_core();
        let m = PolymerModel::new(&c16, &hc, Biclique::new(vec![0, 1], vec![1]), 0.2).unwrap();
        let ctx = ChainContext::new(m.clone(), 1).unwrap();
        // 8 right singletons; pairs compatible iff G-distance > 3, i.e. right indices
        // at cyclic distance ≥ 2 apart.
        let w = ctx.log_weight(0).exp();
        let mut direct = 0.0;
        for mask in 0u32..256 {
            let bits: Vec<u32> = (0..8).filter(|i| mask >> i & 1 == 1).collect();
            let ok = bits.iter().all(|&a| bits.iter().all(|&b| a == b || {
                let d = (a as i32 - b as i32).rem_euclid(8);
                d.min(8 - d) >= 2
            }));
            if ok {
                direct += w.powi(bits.len() as i32);
            }
        }
        assert!((exact_polymer_z(&ctx).unwrap() - direct.ln()).abs() < 1e-12);
        assert!(direct > 1.0 + 8.0 * w);
        assert!(matches!(exact_polymer_z_with_budget(&ctx, 3, usize::MAX), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn chain_analysis_k33() {
        let k33 = BipartiteGraph::complete(3);
        let hc = InteractionMatrix::hard_core();
        let m = PolymerModel::new(&k33, &hc, Biclique::new(vec![0, 1], vec![1]), 0.5).unwrap();
        let region: Vec<u32> = (0..6).collect();
        for cap in 1..=3 {
            let ctx = ChainContext::new(m.clone(), cap).unwrap();
            let a = exact_chain_analysis(&ctx, &region, DEFAULT_STATE_BUDGET).unwrap();
            assert!(a.detailed_balance_violation <= 1e-12);
            assert!(a.stationarity_violation <= 1e-12);
            assert!(a.stationary_gap_to_gibbs <= 1e-10);
            assert!(a.spectral_gap.unwrap() > 0.0);
            for row in &a.transitions {
                assert!((row.iter().map(|r| r.1).sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn jacobi_examples() {
        let id = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(dense_eigenvalues(&id).unwrap(), vec![1.0, 1.0, 1.0]);
        let e = dense_eigenvalues(&adjacency_matrix(&BipartiteGraph::complete(3))).unwrap();
        let want = [3.0, 0.0, 0.0, 0.0, 0.0, -3.0];
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
        let e = dense_eigenvalues(&adjacency_matrix(&BipartiteGraph::cycle(4))).unwrap();
        let mut want: Vec<f64> = (0..8).map(|k| 2.0 * (std::f64::consts::PI * k as f64 / 4.0).cos()).collect();
        want.sort_by(|x, y| y.total_cmp(x));
        for (a, b) in e.iter().zip(want) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
