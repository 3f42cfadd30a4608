//! The biclique polymer model.
//!
//! For a maximal biclique `(B_0, B_1)` a polymer is a G³-connected vertex
//! set carrying spins outside the ground set of each vertex's side. Its
//! weight is the ratio between the total weight of configurations that agree
//! with the polymer and put ground spins everywhere else, and the number of
//! ground-state completions of its closed neighbourhood:
//!
//! ```text
//! w(γ) = Π_{uv ∈ E(V_γ)} H[σ(u)][σ(v)] · Π_{u ∈ ∂V_γ} F_u / Π_i |B_i|^{|V^i ∩ V_γ⁺|}
//! F_u  = Σ_{j ∈ B_side(u)} Π_{v ∈ V_γ ∩ ∂u} H[j][σ(v)]
//! ```

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::BipartiteGraph;
use crate::logspace::{ln_or_zero, LN_ZERO};
use crate::spin_model::{Biclique, InteractionMatrix, Spin};

/// A G³-connected deviation region with its non-ground spins.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Polymer {
    vertices: Vec<u32>,
    spins: Vec<Spin>,
}

impl Polymer {
    /// Builds a polymer from `(vertex, spin)` pairs; vertices are sorted.
    pub fn new(mut pairs: Vec<(u32, Spin)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidPolymer("polymer must be nonempty".into()));
        }
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidPolymer("repeated vertex".into()));
        }
        let (vertices, spins) = pairs.into_iter().unzip();
        Ok(Polymer { vertices, spins })
    }

    pub fn vertices(&self) -> &[u32] {
        &self.vertices
    }

    pub fn spins(&self) -> &[Spin] {
        &self.spins
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn spin_of(&self, v: u32) -> Option<Spin> {
        self.vertices.binary_search(&v).ok().map(|i| self.spins[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, Spin)> + '_ {
        self.vertices.iter().copied().zip(self.spins.iter().copied())
    }

    /// Debug dump line: `gamma {v:spin, ...} logw=<value>`.
    pub fn dump_line(&self, logw: f64) -> String {
        let body: Vec<String> = self.iter().map(|(v, s)| format!("{v}:{s}")).collect();
        format!("gamma {{{}}} logw={}", body.join(", "), logw)
    }
}

/// True iff no vertex of `b` lies in `a` or in the G³-neighbourhood of `a`.
pub fn are_compatible(g: &BipartiteGraph, a: &Polymer, b: &Polymer) -> bool {
    a.vertices.iter().all(|&u| {
        let host = g.host_neighbors(u as usize);
        b.vertices
            .iter()
            .all(|&v| v != u && host.binary_search(&v).is_err())
    })
}

/// True iff the vertex set is connected in G³.
pub fn is_host_connected(g: &BipartiteGraph, vertices: &[u32]) -> bool {
    if vertices.is_empty() {
        return false;
    }
    let mut seen = vec![false; vertices.len()];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = stack.pop() {
        let host = g.host_neighbors(vertices[i] as usize);
        for (j, &w) in vertices.iter().enumerate() {
            if !seen[j] && host.binary_search(&w).is_ok() {
                seen[j] = true;
                count += 1;
                stack.push(j);
            }
        }
    }
    count == vertices.len()
}

/// A set of pairwise compatible polymers with a vertex → polymer cover map.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolymerConfiguration {
    polymers: Vec<Polymer>,
    cover: BTreeMap<u32, usize>,
}

impl PolymerConfiguration {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Validates pairwise compatibility and builds the cover map.
    pub fn new(g: &BipartiteGraph, mut polymers: Vec<Polymer>) -> Result<Self> {
        polymers.sort();
        for i in 0..polymers.len() {
            for j in i + 1..polymers.len() {
                if !are_compatible(g, &polymers[i], &polymers[j]) {
                    return Err(Error::InvalidPolymer(format!(
                        "polymers {i} and {j} are not compatible"
                    )));
                }
            }
        }
        let mut cover = BTreeMap::new();
        for (i, p) in polymers.iter().enumerate() {
            for &v in p.vertices() {
                cover.insert(v, i);
            }
        }
        Ok(PolymerConfiguration { polymers, cover })
    }

    pub fn polymers(&self) -> &[Polymer] {
        &self.polymers
    }

    pub fn len(&self) -> usize {
        self.polymers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.polymers.is_empty()
    }

    /// Polymer covering `v`, if any.
    pub fn covering(&self, v: u32) -> Option<&Polymer> {
        self.cover.get(&v).map(|&i| &self.polymers[i])
    }

    pub fn covered_vertices(&self) -> impl Iterator<Item = u32> + '_ {
        self.cover.keys().copied()
    }

    /// Combined assignment σ_Γ on ∪Γ.
    pub fn spin_of(&self, v: u32) -> Option<Spin> {
        self.covering(v).and_then(|p| p.spin_of(v))
    }
}

/// Shared read-only context `(G, H, B, ε)` of one polymer model.
#[derive(Debug, Clone)]
pub struct PolymerModel<'a> {
    graph: &'a BipartiteGraph,
    h: &'a InteractionMatrix,
    biclique: Biclique,
    epsilon: f64,
    max_size: usize,
    excited: [Vec<Spin>; 2],
    ln_side: [f64; 2],
}

/// Default cap on the number of polymers an enumeration may produce.
pub const DEFAULT_POLYMER_BUDGET: usize = 5_000_000;

impl<'a> PolymerModel<'a> {
    /// The biclique must be maximal; ε ∈ (0, 1).
    pub fn new(graph: &'a BipartiteGraph, h: &'a InteractionMatrix, biclique: Biclique, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::InvalidRange(format!("epsilon {epsilon} not in (0, 1)")));
        }
        if biclique.b0.is_empty() || biclique.b1.is_empty() || !biclique.is_maximal_in(h) {
            return Err(Error::InvalidRange(format!("{biclique} is not a maximal biclique of H")));
        }
        let max_size = (2.0 * epsilon * graph.n() as f64 + 1e-9).floor() as usize;
        let excited = [biclique.excited_spins(0, h.q()), biclique.excited_spins(1, h.q())];
        let ln_side = [
            (biclique.b0.len() as f64).ln(),
            (biclique.b1.len() as f64).ln(),
        ];
        Ok(PolymerModel {
            graph,
            h,
            biclique,
            epsilon,
            max_size,
            excited,
            ln_side,
        })
    }

    pub fn graph(&self) -> &'a BipartiteGraph {
        self.graph
    }

    pub fn matrix(&self) -> &'a InteractionMatrix {
        self.h
    }

    pub fn biclique(&self) -> &Biclique {
        &self.biclique
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// ⌊2εn⌋: the largest allowed polymer size.
    pub fn max_size(&self) -> usize {
        self.max_size
    }

    /// Non-ground spins available at vertex `v`.
    pub fn excited_spins(&self, v: usize) -> &[Spin] {
        &self.excited[self.graph.side(v)]
    }

    /// Size test |V_γ| ≤ ε|V_G|.
    pub fn is_allowed(&self, p: &Polymer) -> bool {
        p.len() <= self.max_size
    }

    /// Checks the polymer invariants: G³-connected, in range, non-ground spins.
    pub fn validate(&self, p: &Polymer) -> Result<()> {
        if p.vertices().iter().any(|&v| v as usize >= self.graph.num_vertices()) {
            return Err(Error::InvalidPolymer("vertex out of range".into()));
        }
        if !is_host_connected(self.graph, p.vertices()) {
            return Err(Error::InvalidPolymer("vertex set is not G^3-connected".into()));
        }
        for (v, s) in p.iter() {
            if !self.excited_spins(v as usize).contains(&s) {
                return Err(Error::InvalidPolymer(format!("vertex {v} carries ground or invalid spin {s}")));
            }
        }
        Ok(())
    }

    /// `(u, F_u)` for every u ∈ ∂V_γ, sorted by vertex.
    pub fn boundary_factors(&self, p: &Polymer) -> Vec<(u32, f64)> {
        let mut touching: HashMap<u32, Vec<Spin>> = HashMap::new();
        for (v, s) in p.iter() {
            for &u in self.graph.neighbors(v as usize) {
                if p.spin_of(u).is_none() {
                    touching.entry(u).or_default().push(s);
                }
            }
        }
        let mut out: Vec<(u32, f64)> = touching
            .into_iter()
            .map(|(u, spins)| {
                let ground = self.biclique.side(self.graph.side(u as usize));
                let f = ground
                    .iter()
                    .map(|&j| spins.iter().map(|&s| self.h.get(j, s)).product::<f64>())
                    .sum();
                (u, f)
            })
            .collect();
        out.sort_by_key(|&(u, _)| u);
        out
    }

    /// ln w(γ), or [`LN_ZERO`] when the weight vanishes.
    pub fn polymer_weight_log(&self, p: &Polymer) -> f64 {
        let mut total = 0.0;
        let mut plus = [0usize; 2];
        for (v, s) in p.iter() {
            let side = self.graph.side(v as usize);
            plus[side] += 1;
            if side == 0 {
                for &u in self.graph.neighbors(v as usize) {
                    if let Some(t) = p.spin_of(u) {
                        let l = self.h.ln(s, t);
                        if l == LN_ZERO {
                            return LN_ZERO;
                        }
                        total += l;
                    }
                }
            }
        }
        for (u, f) in self.boundary_factors(p) {
            if f <= 0.0 {
                return LN_ZERO;
            }
            total += ln_or_zero(f);
            plus[self.graph.side(u as usize)] += 1;
        }
        total - plus[0] as f64 * self.ln_side[0] - plus[1] as f64 * self.ln_side[1]
    }

    /// Every allowed polymer with at most `size_cap` vertices, each exactly
    /// once, sorted by `(size, vertices, spins)`.
    pub fn enumerate_allowed_polymers(&self, size_cap: usize, budget: usize) -> Result<Vec<Polymer>> {
        let cap = size_cap.min(self.max_size);
        let mut out = Vec::new();
        if cap == 0 {
            return Ok(out);
        }
        let g = self.graph;
        let eligible: Vec<bool> = (0..g.num_vertices())
            .map(|v| !self.excited_spins(v).is_empty())
            .collect();
        let mut sets: Vec<Vec<u32>> = Vec::new();
        let mut count = 0usize;
        for v in 0..g.num_vertices() {
            if !eligible[v] {
                continue;
            }
            let ext: Vec<u32> = g
                .host_neighbors(v)
                .iter()
                .copied()
                .filter(|&u| u as usize > v && eligible[u as usize])
                .collect();
            let mut sub = vec![v as u32];
            self.extend_connected(&mut sub, ext, v as u32, cap, &eligible, &mut |set| {
                let combos: usize = set.iter().map(|&x| self.excited_spins(x as usize).len()).product();
                count += combos;
                if count > budget {
                    return Err(Error::ResourceLimit(format!(
                        "polymer enumeration exceeded budget of {budget}"
                    )));
                }
                sets.push(set.to_vec());
                Ok(())
            })?;
        }
        for mut set in sets {
            set.sort_unstable();
            let choices: Vec<&[Spin]> = set.iter().map(|&x| self.excited_spins(x as usize)).collect();
            let mut idx = vec![0usize; set.len()];
            loop {
                let spins: Vec<Spin> = idx.iter().zip(&choices).map(|(&i, c)| c[i]).collect();
                out.push(Polymer {
                    vertices: set.clone(),
                    spins,
                });
                // odometer increment
                let mut k = set.len();
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < choices[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    if k == 0 {
                        k = usize::MAX;
                        break;
                    }
                }
                if k == usize::MAX {
                    break;
                }
            }
        }
        out.sort_by(|a, b| (a.len(), &a.vertices, &a.spins).cmp(&(b.len(), &b.vertices, &b.spins)));
        Ok(out)
    }

    /// ESU-style extension: each connected set whose minimum vertex is `root`
    /// is reached exactly once.
    fn extend_connected(
        &self,
        sub: &mut Vec<u32>,
        mut ext: Vec<u32>,
        root: u32,
        cap: usize,
        eligible: &[bool],
        emit: &mut dyn FnMut(&[u32]) -> Result<()>,
    ) -> Result<()> {
        emit(sub)?;
        if sub.len() == cap {
            return Ok(());
        }
        let g = self.graph;
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in g.host_neighbors(w as usize) {
                if u <= root || !eligible[u as usize] || sub.contains(&u) || next.contains(&u) || u == w {
                    continue;
                }
                // exclusive: not adjacent (in G³) to the current subgraph
                let near_sub = sub
                    .iter()
                    .any(|&s| g.host_neighbors(s as usize).binary_search(&u).is_ok());
                if !near_sub {
                    next.push(u);
                }
            }
            sub.push(w);
            self.extend_connected(sub, next, root, cap, eligible, emit)?;
            sub.pop();
        }
        Ok(())
    }

    /// Exhaustively checks the polymer sampling condition on polymers up to `size_cap`.
    ///
    /// Hard checks (must hold for any maximal biclique): `F_u ≤ |B_i| − 1 + δ`
    /// at every boundary vertex and `w(γ) ≤ 1`. The decay `w(γ) ≤ e^{−τ|V_γ|}`
    /// with τ = (1−δ)/(4εq) is only guaranteed when `ε ≥ λ²/Δ²` and
    /// `ε ≤ (1−δ)/(40 q ln(qΔ))`; `premises_met` records whether that holds.
    pub fn verify_sampling_condition(&self, size_cap: usize, lambda: Option<f64>, budget: usize) -> Result<SamplingConditionReport> {
        let polymers = self.enumerate_allowed_polymers(size_cap, budget)?;
        let q = self.h.q() as f64;
        let delta = self.h.delta();
        let tau = (1.0 - delta) / (4.0 * self.epsilon * q);
        let premises_met = match (lambda, self.graph.degree()) {
            (Some(l), Some(d)) => {
                let d = d as f64;
                self.epsilon >= l * l / (d * d) && self.epsilon <= (1.0 - delta) / (40.0 * q * (q * d).ln())
            }
            _ => false,
        };
        let mut rep = SamplingConditionReport {
            polymers_checked: polymers.len(),
            boundary_checked: 0,
            tau,
            premises_met,
            max_log_weight: LN_ZERO,
            decay_violations: Vec::new(),
            boundary_violations: Vec::new(),
            weight_violations: Vec::new(),
        };
        for p in polymers {
            let logw = self.polymer_weight_log(&p);
            rep.max_log_weight = rep.max_log_weight.max(logw);
            if logw > 1e-12 {
                rep.weight_violations.push((p.clone(), logw));
            }
            if logw > -tau * p.len() as f64 + 1e-12 {
                rep.decay_violations.push((p.clone(), logw));
            }
            for (u, f) in self.boundary_factors(&p) {
                rep.boundary_checked += 1;
                let ground = self.biclique.side(self.graph.side(u as usize)).len() as f64;
                let bound = ground - 1.0 + delta;
                if f > bound + 1e-12 {
                    rep.boundary_violations.push((p.clone(), u, f, bound));
                }
            }
        }
        Ok(rep)
    }

    /// Debug dump of polymers, one `gamma {...} logw=...` line each.
    pub fn dump(&self, polymers: &[Polymer]) -> String {
        let mut s = String::new();
        for p in polymers {
            let _ = writeln!(s, "{}", p.dump_line(self.polymer_weight_log(p)));
        }
        s
    }
}

/// Result of [`PolymerModel::verify_sampling_condition`].
#[derive(Debug, Clone)]
pub struct SamplingConditionReport {
    pub polymers_checked: usize,
    pub boundary_checked: usize,
    pub tau: f64,
    pub premises_met: bool,
    pub max_log_weight: f64,
    /// `w(γ) > e^{−τ|V_γ|}`; a hard failure only when `premises_met`.
    pub decay_violations: Vec<(Polymer, f64)>,
    /// `(γ, u, F_u, |B_i| − 1 + δ)` with `F_u` above the bound.
    pub boundary_violations: Vec<(Polymer, u32, f64, f64)>,
    /// `(γ, ln w)` with `w > 1`.
    pub weight_violations: Vec<(Polymer, f64)>,
}

impl SamplingConditionReport {
    /// Hard invariants only.
    pub fn hard_passed(&self) -> bool {
        self.boundary_violations.is_empty()
            && self.weight_violations.is_empty()
            && (!self.premises_met || self.decay_violations.is_empty())
    }
}

/// Parses one dump line back into `(polymer, logw)`.
pub fn parse_dump_line(line: &str) -> Result<(Polymer, f64)> {
    let bad = || Error::InvalidPolymer(format!("malformed dump line `{line}`"));
    let rest = line.trim().strip_prefix("gamma {").ok_or_else(bad)?;
    let (body, tail) = rest.split_once('}').ok_or_else(bad)?;
    let logw_text = tail.trim().strip_prefix("logw=").ok_or_else(bad)?;
    let logw = if logw_text == "-inf" {
        LN_ZERO
    } else {
        logw_text.parse::<f64>().map_err(|_| bad())?
    };
    let pairs = body
        .split(',')
        .map(|kv| {
            let (v, s) = kv.trim().split_once(':').ok_or_else(bad)?;
            Ok((v.parse::<u32>().map_err(|_| bad())?, s.parse::<Spin>().map_err(|_| bad())?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((Polymer::new(pairs)?, logw))
}
