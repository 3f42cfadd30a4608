//! Balanced bipartite graphs, random Δ-regular generation, the spectral
//! certificate λ(G), boundary and edge-count primitives, expansion
//! diagnostics, and the cached host graph G³.
//!
//! Vertex ids: left side `0..n`, right side `n..2n`.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{parse_err, Error, Result};
use crate::rng;

/// A simple bipartite graph with `n` vertices on each side.
///
/// Graphs built through [`BipartiteGraph::from_edges`] belong to the class of
/// connected Δ-regular bipartite graphs with Δ ≥ 3; graphs built through
/// [`BipartiteGraph::from_edges_relaxed`] may violate that and are tagged
/// `oracle_only`.
#[derive(Debug)]
pub struct BipartiteGraph {
    n: usize,
    adj: Vec<Vec<u32>>,
    oracle_only: bool,
    host: OnceLock<Vec<Vec<u32>>>,
}

impl Clone for BipartiteGraph {
    fn clone(&self) -> Self {
        BipartiteGraph {
            n: self.n,
            adj: self.adj.clone(),
            oracle_only: self.oracle_only,
            host: OnceLock::new(),
        }
    }
}

impl PartialEq for BipartiteGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.adj == other.adj
    }
}

impl BipartiteGraph {
    fn build(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGraph("graph must have at least one vertex per side".into()));
        }
        let mut adj = vec![Vec::new(); 2 * n];
        for &(a, b) in edges {
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if u >= n || v < n || v >= 2 * n {
                return Err(Error::InvalidGraph(format!("edge ({a}, {b}) does not join the two sides")));
            }
            adj[u].push(v as u32);
            adj[v].push(u as u32);
        }
        for (v, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidGraph(format!("multi-edge at vertex {v}")));
            }
        }
        Ok(BipartiteGraph {
            n,
            adj,
            oracle_only: false,
            host: OnceLock::new(),
        })
    }

    /// Builds and validates a connected Δ-regular bipartite graph, Δ ≥ 3.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let g = Self::build(n, edges)?;
        g.validate_class()?;
        Ok(g)
    }

    /// Builds any simple balanced bipartite graph; tagged oracle-only when it
    /// falls outside the regular class.
    pub fn from_edges_relaxed(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::build(n, edges)?;
        g.oracle_only = g.validate_class().is_err();
        Ok(g)
    }

    fn validate_class(&self) -> Result<()> {
        let d = self
            .degree()
            .ok_or_else(|| Error::InvalidGraph("graph is not regular".into()))?;
        if d < 3 {
            return Err(Error::InvalidGraph(format!("degree {d} is below 3")));
        }
        if !self.is_connected() {
            return Err(Error::InvalidGraph("graph is not connected".into()));
        }
        Ok(())
    }

    /// Complete bipartite graph K_{n,n}.
    pub fn complete(n: usize) -> Self {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| (n..2 * n).map(move |v| (u, v)))
            .collect();
        Self::from_edges_relaxed(n, &edges).expect("complete bipartite graph is valid")
    }

    /// The even cycle C_{2k} with left vertex `i` adjacent to right `i` and `i+1 mod k`.
    pub fn cycle(k: usize) -> Self {
        assert!(k >= 2, "cycle needs at least 4 vertices");
        let edges: Vec<(usize, usize)> = (0..k)
            .flat_map(|i| [(i, k + i), (i, k + (i + 1) % k)])
            .collect();
        Self::from_edges_relaxed(k, &edges).expect("even cycle is valid")
    }

    /// Vertices per side.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_vertices(&self) -> usize {
        2 * self.n
    }

    pub fn num_edges(&self) -> usize {
        self.adj[..self.n].iter().map(|l| l.len()).sum()
    }

    pub fn is_oracle_only(&self) -> bool {
        self.oracle_only
    }

    /// 0 for left, 1 for right.
    #[inline]
    pub fn side(&self, v: usize) -> usize {
        (v >= self.n) as usize
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.adj[v]
    }

    /// Common degree, if the graph is regular.
    pub fn degree(&self) -> Option<usize> {
        let d = self.adj[0].len();
        self.adj.iter().all(|l| l.len() == d).then_some(d)
    }

    /// Edges as `(left, right)` pairs in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| self.adj[u].iter().map(move |&v| (u, v as usize)))
    }

    pub fn is_connected(&self) -> bool {
        self.bfs_distances(0, usize::MAX).iter().all(|&d| d != usize::MAX)
    }

    /// BFS distances from `src`, truncated at `radius` (farther vertices get `usize::MAX`).
    pub fn bfs_distances(&self, src: usize, radius: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_vertices()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            if dist[u] >= radius {
                continue;
            }
            for &w in &self.adj[u] {
                let w = w as usize;
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    /// Sorted neighbours of `v` in G³ (vertices at G-distance 1..=3).
    pub fn host_neighbors(&self, v: usize) -> &[u32] {
        &self.host_adjacency()[v]
    }

    /// G³ adjacency, built on first use by two rounds of neighbourhood expansion.
    pub fn host_adjacency(&self) -> &[Vec<u32>] {
        self.host.get_or_init(|| {
            let mut mark = vec![usize::MAX; self.num_vertices()];
            let mut out = Vec::with_capacity(self.num_vertices());
            for v in 0..self.num_vertices() {
                mark[v] = v;
                let mut list = Vec::new();
                for &a in &self.adj[v] {
                    let a = a as usize;
                    if mark[a] != v {
                        mark[a] = v;
                        list.push(a as u32);
                    }
                    for &b in &self.adj[a] {
                        let b = b as usize;
                        if mark[b] != v {
                            mark[b] = v;
                            list.push(b as u32);
                        }
                        for &c in &self.adj[b] {
                            let c = c as usize;
                            if mark[c] != v {
                                mark[c] = v;
                                list.push(c as u32);
                            }
                        }
                    }
                }
                list.sort_unstable();
                out.push(list);
            }
            out
        })
    }

    /// Graph text format: header `bipartite-regular n <n> delta <Δ>` then one `u v` per edge.
    pub fn to_text(&self) -> String {
        let d = self.degree().unwrap_or(0);
        let mut s = format!("bipartite-regular n {} delta {}\n", self.n, d);
        for (u, v) in self.edges() {
            let _ = writeln!(s, "{u} {v}");
        }
        s
    }

    /// Parses the graph text format and validates class membership.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_impl(text, false)
    }

    /// Like [`BipartiteGraph::parse`] but accepts graphs outside the class (oracle-only).
    pub fn parse_relaxed(text: &str) -> Result<Self> {
        Self::parse_impl(text, true)
    }

    fn parse_impl(text: &str, relaxed: bool) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty graph file"))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() != 5 || tok[0] != "bipartite-regular" || tok[1] != "n" || tok[3] != "delta" {
            return Err(parse_err(hline, "expected header `bipartite-regular n <n> delta <degree>`"));
        }
        let n: usize = tok[2]
            .parse()
            .map_err(|_| parse_err(hline, format!("bad n `{}`", tok[2])))?;
        let d: usize = tok[4]
            .parse()
            .map_err(|_| parse_err(hline, format!("bad degree `{}`", tok[4])))?;
        let mut edges = Vec::new();
        for (lno, line) in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 2 {
                return Err(parse_err(lno, "expected `u v`"));
            }
            let u: usize = parts[0]
                .parse()
                .map_err(|_| parse_err(lno, format!("bad vertex `{}`", parts[0])))?;
            let v: usize = parts[1]
                .parse()
                .map_err(|_| parse_err(lno, format!("bad vertex `{}`", parts[1])))?;
            if !(u < n && n <= v && v < 2 * n) {
                return Err(parse_err(lno, format!("edge `{u} {v}` must satisfy 0 <= u < {n} <= v < {}", 2 * n)));
            }
            edges.push((u, v));
        }
        let g = if relaxed {
            Self::from_edges_relaxed(n, &edges)
        } else {
            Self::from_edges(n, &edges)
        }
        .map_err(|e| parse_err(hline, e.to_string()))?;
        if !relaxed && g.degree() != Some(d) {
            return Err(parse_err(hline, format!("header degree {d} does not match graph degree {:?}", g.degree())));
        }
        Ok(g)
    }
}

/// Default cap on matching resamples during generation.
pub const DEFAULT_GENERATION_ATTEMPTS: usize = 1_000_000;

/// Random simple connected Δ-regular bipartite graph on `n + n` vertices.
///
/// The graph is the union of Δ uniform random perfect matchings. A matching
/// that would create a multi-edge is resampled; a disconnected result
/// restarts the whole construction.
pub fn generate_random_regular_bipartite(n: usize, degree: usize, seed: u64) -> Result<BipartiteGraph> {
    generate_with_limit(n, degree, seed, DEFAULT_GENERATION_ATTEMPTS)
}

pub fn generate_with_limit(n: usize, degree: usize, seed: u64, max_attempts: usize) -> Result<BipartiteGraph> {
    if degree < 3 {
        return Err(Error::Infeasible(format!("degree {degree} is below 3")));
    }
    if n < degree {
        return Err(Error::Infeasible(format!("n = {n} is smaller than degree {degree}")));
    }
    let mut rng = rng::stream(seed, &[0x6a7]);
    let mut attempts = 0usize;
    loop {
        let mut used = vec![false; n * n];
        let mut edges = Vec::with_capacity(n * degree);
        for _ in 0..degree {
            let mut perm: Vec<usize> = (0..n).collect();
            loop {
                attempts += 1;
                if attempts > max_attempts {
                    return Err(Error::ResourceLimit(format!(
                        "random regular generation exceeded {max_attempts} matching attempts"
                    )));
                }
                perm.shuffle(&mut rng);
                if perm.iter().enumerate().all(|(u, &r)| !used[u * n + r]) {
                    break;
                }
            }
            for (u, &r) in perm.iter().enumerate() {
                used[u * n + r] = true;
                edges.push((u, n + r));
            }
        }
        let g = BipartiteGraph::build(n, &edges)?;
        if g.is_connected() {
            return Ok(g);
        }
    }
}

/// Certified second adjacency eigenvalue λ(G).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCertificate {
    pub lambda: f64,
    pub iterations: usize,
    pub residual: f64,
}

/// Default relative residual tolerance for [`second_eigenvalue`].
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-9;

/// Computes λ₂ as √μ₂ where μ₂ is the second eigenvalue of B·Bᵀ (B the
/// biadjacency matrix), by power iteration on the complement of the all-ones
/// vector. The top eigenvector is known exactly by regularity, so deflation
/// is a projection.
pub fn second_eigenvalue(g: &BipartiteGraph, tol: f64) -> Result<SpectralCertificate> {
    let n = g.n();
    let cap = ((10.0 * n as f64 * (n as f64).ln()).ceil() as usize).max(MIN_POWER_ITERATIONS);
    second_eigenvalue_with_cap(g, tol, cap)
}

/// Floor on the power-iteration cap; 10·n·ln n alone is too small for tiny graphs
/// whose two leading deflated eigenvalues nearly coincide.
pub const MIN_POWER_ITERATIONS: usize = 5000;

pub fn second_eigenvalue_with_cap(g: &BipartiteGraph, tol: f64, max_iter: usize) -> Result<SpectralCertificate> {
    let d = g
        .degree()
        .ok_or_else(|| Error::InvalidGraph("spectral certificate requires a regular graph".into()))?;
    let n = g.n();
    let scale = (d * d) as f64;
    let mut rng = rng::stream(0x5eed, &[n as u64]);
    let mut x: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut y = vec![0.0; n];
    let mut tmp = vec![0.0; n];

    let project = |x: &mut [f64]| -> f64 {
        let mean = x.iter().sum::<f64>() / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
        norm
    };
    let apply = |x: &[f64], out: &mut [f64], tmp: &mut [f64]| {
        for r in 0..n {
            tmp[r] = g.neighbors(n + r).iter().map(|&l| x[l as usize]).sum();
        }
        for l in 0..n {
            out[l] = g.neighbors(l).iter().map(|&r| tmp[r as usize - n]).sum();
        }
    };

    if n == 1 || project(&mut x) < 1e-300 {
        return Ok(SpectralCertificate {
            lambda: 0.0,
            iterations: 0,
            residual: 0.0,
        });
    }
    for it in 1..=max_iter {
        apply(&x, &mut y, &mut tmp);
        let mu: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        if mu <= 1e-14 * scale {
            // the deflated operator annihilates x: every non-top eigenvalue is 0
            let ynorm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            if ynorm <= 1e-12 * scale {
                return Ok(SpectralCertificate {
                    lambda: 0.0,
                    iterations: it,
                    residual: 0.0,
                });
            }
        }
        let res = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (b - mu * a).powi(2))
            .sum::<f64>()
            .sqrt()
            / mu.max(f64::MIN_POSITIVE);
        if res <= tol {
            return Ok(SpectralCertificate {
                lambda: mu.max(0.0).sqrt(),
                iterations: it,
                residual: res,
            });
        }
        std::mem::swap(&mut x, &mut y);
        if project(&mut x) < 1e-300 {
            return Ok(SpectralCertificate {
                lambda: 0.0,
                iterations: it,
                residual: 0.0,
            });
        }
        if it == max_iter {
            return Err(Error::NoConvergence {
                iterations: it,
                residual: res,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

/// ∂S: vertices outside `set` with a neighbour in `set`, sorted.
pub fn boundary(g: &BipartiteGraph, set: &[usize]) -> Vec<usize> {
    let mut inside = vec![false; g.num_vertices()];
    for &v in set {
        inside[v] = true;
    }
    let mut seen = vec![false; g.num_vertices()];
    let mut out = Vec::new();
    for &v in set {
        for &w in g.neighbors(v) {
            let w = w as usize;
            if !inside[w] && !seen[w] {
                seen[w] = true;
                out.push(w);
            }
        }
    }
    out.sort_unstable();
    out
}

/// S⁺ = S ∪ ∂S, sorted.
pub fn closed_neighborhood(g: &BipartiteGraph, set: &[usize]) -> Vec<usize> {
    let mut out = boundary(g, set);
    out.extend_from_slice(set);
    out.sort_unstable();
    out.dedup();
    out
}

/// e_G(S0, S1) for `S0` on the left and `S1` on the right.
pub fn edge_count_between(g: &BipartiteGraph, s0: &[usize], s1: &[usize]) -> Result<usize> {
    if let Some(&v) = s0.iter().find(|&&v| v >= g.n()) {
        return Err(Error::SideViolation { vertex: v, side: 0 });
    }
    if let Some(&v) = s1.iter().find(|&&v| v < g.n() || v >= g.num_vertices()) {
        return Err(Error::SideViolation { vertex: v, side: 1 });
    }
    let mut in1 = vec![false; g.num_vertices()];
    for &v in s1 {
        in1[v] = true;
    }
    Ok(s0
        .iter()
        .map(|&u| g.neighbors(u).iter().filter(|&&w| in1[w as usize]).count())
        .sum())
}

/// One failed inequality with its witness.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionViolation {
    pub inequality: &'static str,
    pub s0: Vec<usize>,
    pub s1: Vec<usize>,
    pub slack: f64,
}

/// Outcome of [`check_expansion_inequalities`]. Slack = rhs-side margin; negative means violated.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub mixing_checked: usize,
    pub edge_expansion_checked: usize,
    pub vertex_expansion_checked: usize,
    pub min_mixing_slack: f64,
    pub min_edge_expansion_slack: f64,
    pub min_vertex_expansion_slack: f64,
    pub violations: Vec<ExpansionViolation>,
}

impl ExpansionReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Absolute tolerance applied to all expansion comparisons.
pub const EXPANSION_TOL: f64 = 1e-7;

/// Samples `trials` random subset pairs and checks the bipartite expander
/// mixing lemma, its edge-expansion corollary, and the vertex-expansion bound
/// `|∂S| ≥ |S| / (ρ + λ²/Δ² (1−ρ))` with ρ = |S|/n.
pub fn check_expansion_inequalities(g: &BipartiteGraph, lambda: f64, trials: usize, seed: u64) -> Result<ExpansionReport> {
    let d = g
        .degree()
        .ok_or_else(|| Error::InvalidGraph("expansion checks require a regular graph".into()))? as f64;
    let n = g.n();
    let nf = n as f64;
    let mut rng = rng::stream(seed, &[0xe4a]);
    let mut rep = ExpansionReport {
        mixing_checked: 0,
        edge_expansion_checked: 0,
        vertex_expansion_checked: 0,
        min_mixing_slack: f64::INFINITY,
        min_edge_expansion_slack: f64::INFINITY,
        min_vertex_expansion_slack: f64::INFINITY,
        violations: Vec::new(),
    };
    let draw = |rng: &mut rng::StreamRng, offset: usize| -> Vec<usize> {
        let p: f64 = rng.gen();
        (0..n).filter(|_| rng.gen::<f64>() < p).map(|v| v + offset).collect()
    };
    for _ in 0..trials {
        let s0 = draw(&mut rng, 0);
        let s1 = draw(&mut rng, n);
        let a = s0.len() as f64;
        let b = s1.len() as f64;
        let e = edge_count_between(g, &s0, &s1)? as f64;

        let bound = lambda * (a * b * (1.0 - a / nf) * (1.0 - b / nf)).max(0.0).sqrt();
        let slack = bound - (e - d * a * b / nf).abs();
        rep.mixing_checked += 1;
        rep.min_mixing_slack = rep.min_mixing_slack.min(slack);
        if slack < -EXPANSION_TOL * (1.0 + bound) {
            rep.violations.push(ExpansionViolation {
                inequality: "mixing",
                s0: s0.clone(),
                s1: s1.clone(),
                slack,
            });
        }

        if lambda <= d / (2.0 * nf) * (a * b).sqrt() {
            let need = d / (2.0 * nf) * a * b;
            let slack = e - need;
            rep.edge_expansion_checked += 1;
            rep.min_edge_expansion_slack = rep.min_edge_expansion_slack.min(slack);
            if slack < -EXPANSION_TOL * (1.0 + need) {
                rep.violations.push(ExpansionViolation {
                    inequality: "edge-expansion",
                    s0: s0.clone(),
                    s1: s1.clone(),
                    slack,
                });
            }
        }

        for set in [&s0, &s1] {
            if set.is_empty() {
                continue;
            }
            let size = set.len() as f64;
            let rho = size / nf;
            let need = size / (rho + lambda * lambda / (d * d) * (1.0 - rho));
            let got = boundary(g, set).len() as f64;
            let slack = got - need;
            rep.vertex_expansion_checked += 1;
            rep.min_vertex_expansion_slack = rep.min_vertex_expansion_slack.min(slack);
            if slack < -EXPANSION_TOL * (1.0 + need) {
                let (w0, w1) = if set[0] < n {
                    (set.clone(), Vec::new())
                } else {
                    (Vec::new(), set.clone())
                };
                rep.violations.push(ExpansionViolation {
                    inequality: "vertex-expansion",
                    s0: w0,
                    s1: w1,
                    slack,
                });
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generation_examples() {
        let g = generate_random_regular_bipartite(3, 3, 11).unwrap();
        assert_eq!(g, BipartiteGraph::complete(3));
        assert!(matches!(generate_random_regular_bipartite(2, 3, 1), Err(Error::Infeasible(_))));
        let g = generate_random_regular_bipartite(64, 8, 1).unwrap();
        assert_eq!(g.degree(), Some(8));
        assert_eq!(g.num_edges(), 512);
        assert!(g.is_connected());
        assert!(!g.is_oracle_only());
        let again = generate_random_regular_bipartite(64, 8, 1).unwrap();
        assert_eq!(g.to_text(), again.to_text());
    }

    #[test]
    fn generation_resource_limit() {
        assert!(matches!(generate_with_limit(64, 8, 1, 3), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn spectral_small_cases() {
        let k33 = BipartiteGraph::complete(3);
        let c = second_eigenvalue(&k33, DEFAULT_SPECTRAL_TOL).unwrap();
        assert!(c.lambda.abs() < 1e-9);
        let c8 = BipartiteGraph::cycle(4);
        let c = second_eigenvalue(&c8, DEFAULT_SPECTRAL_TOL).unwrap();
        assert!((c.lambda - 2f64.sqrt()).abs() < 1e-8, "{c:?}");
    }

    #[test]
    fn spectral_requires_regular() {
        let g = BipartiteGraph::from_edges_relaxed(2, &[(0, 2), (0, 3), (1, 2)]).unwrap();
        assert!(g.is_oracle_only());
        assert!(second_eigenvalue(&g, 1e-9).is_err());
    }

    #[test]
    fn boundary_examples() {
        let k33 = BipartiteGraph::complete(3);
        assert!(boundary(&k33, &[]).is_empty());
        assert_eq!(boundary(&k33, &[0]), vec![3, 4, 5]);
        let c8 = BipartiteGraph::cycle(4);
        // left 0 is adjacent to right 4 and right 5; right 4 is adjacent to left 3 and 0
        assert_eq!(boundary(&c8, &[0, 4]), vec![3, 5]);
        assert_eq!(closed_neighborhood(&c8, &[0, 4]), vec![0, 3, 4, 5]);
    }

    #[test]
    fn edge_count_examples() {
        let k33 = BipartiteGraph::complete(3);
        assert_eq!(edge_count_between(&k33, &[0, 1], &[3, 4]).unwrap(), 4);
        assert_eq!(edge_count_between(&k33, &[], &[3, 4]).unwrap(), 0);
        let c8 = BipartiteGraph::cycle(4);
        assert_eq!(edge_count_between(&c8, &[0, 3], &[4]).unwrap(), 2);
        assert!(matches!(
            edge_count_between(&k33, &[3], &[4]),
            Err(Error::SideViolation { vertex: 3, side: 0 })
        ));
    }

    #[test]
    fn host_graph_matches_bfs() {
        for g in [BipartiteGraph::cycle(5), BipartiteGraph::cycle(8), BipartiteGraph::complete(3)] {
            for v in 0..g.num_vertices() {
                let dist = g.bfs_distances(v, 3);
                let expect: Vec<u32> = (0..g.num_vertices())
                    .filter(|&u| u != v && dist[u] <= 3)
                    .map(|u| u as u32)
                    .collect();
                assert_eq!(g.host_neighbors(v), &expect[..]);
            }
        }
    }

    #[test]
    fn expansion_on_complete_graph_is_tight() {
        let k33 = BipartiteGraph::complete(3);
        let rep = check_expansion_inequalities(&k33, 0.0, 200, 3).unwrap();
        assert!(rep.passed());
        assert!(rep.min_mixing_slack.abs() < 1e-12);
        let s = [0usize];
        let rho = 1.0 / 3.0;
        assert_eq!(boundary(&k33, &s).len() as f64, 1.0 / rho);
    }

    #[test]
    fn graph_text_roundtrip() {
        let g = generate_random_regular_bipartite(10, 3, 5).unwrap();
        let back = BipartiteGraph::parse(&g.to_text()).unwrap();
        assert_eq!(g, back);
        assert!(matches!(
            BipartiteGraph::parse("bipartite-regular n 3 delta 3\n0 1\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        // K_{2,2} is 2-regular: rejected strictly, accepted relaxed
        let k22 = BipartiteGraph::complete(2).to_text();
        assert!(BipartiteGraph::parse(&k22).is_err());
        assert!(BipartiteGraph::parse_relaxed(&k22).unwrap().is_oracle_only());
    }
}
