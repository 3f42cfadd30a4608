//! Interaction matrices, bicliques, configuration weights and the premise
//! checker for the low-temperature regime.
//!
//! Spins are 0-based (`0..q`). All weights are natural logs.

use std::fmt::Write as _;

use crate::error::{parse_err, Error, Result};
use crate::graph::BipartiteGraph;
use crate::logspace::{ln_or_zero, LN_ZERO};

pub type Spin = u8;

/// Largest spin count supported by the bitmask biclique enumeration.
pub const MAX_Q: usize = 16;

/// Default δ stored when the normalized matrix has no entry strictly between 0 and 1.
pub const DEFAULT_DELTA: f64 = 0.5;

/// A symmetric δ-matrix: max entry exactly 1, every other entry ≤ δ.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    q: usize,
    entries: Vec<f64>,
    ln_entries: Vec<f64>,
    delta: f64,
}

impl InteractionMatrix {
    /// Builds a δ-matrix from row-major rows, checking every invariant.
    pub fn new(rows: Vec<Vec<f64>>, delta: f64) -> Result<Self> {
        let q = rows.len();
        if q < 2 {
            return Err(Error::InvalidMatrix(format!("q must be at least 2, got {q}")));
        }
        if q > MAX_Q {
            return Err(Error::InvalidMatrix(format!("q = {q} exceeds {MAX_Q}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidMatrix(format!("delta {delta} not in (0, 1)")));
        }
        let mut entries = Vec::with_capacity(q * q);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != q {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {q}",
                    row.len()
                )));
            }
            entries.extend_from_slice(row);
        }
        let mut max = 0.0f64;
        for i in 0..q {
            for j in 0..q {
                let x = entries[i * q + j];
                if !x.is_finite() || x < 0.0 {
                    return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) = {x} is not a nonnegative real")));
                }
                if x != entries[j * q + i] {
                    return Err(Error::Asymmetric(i, j));
                }
                max = max.max(x);
            }
        }
        if max != 1.0 {
            return Err(Error::InvalidMatrix(format!("maximum entry is {max}, expected exactly 1")));
        }
        for (k, &x) in entries.iter().enumerate() {
            if x != 1.0 && x > delta {
                return Err(Error::InvalidMatrix(format!(
                    "entry ({}, {}) = {x} exceeds delta {delta}",
                    k / q,
                    k % q
                )));
            }
        }
        let ln_entries = entries.iter().map(|&x| ln_or_zero(x)).collect();
        Ok(InteractionMatrix {
            q,
            entries,
            ln_entries,
            delta,
        })
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    #[inline]
    pub fn get(&self, i: Spin, j: Spin) -> f64 {
        self.entries[i as usize * self.q + j as usize]
    }

    #[inline]
    pub fn ln(&self, i: Spin, j: Spin) -> f64 {
        self.ln_entries[i as usize * self.q + j as usize]
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.q).map(|r| r.to_vec()).collect()
    }

    /// Bitmask of spins `j` with `H[i][j] = 1`.
    fn ones_mask(&self, i: usize) -> u32 {
        (0..self.q)
            .filter(|&j| self.entries[i * self.q + j] == 1.0)
            .fold(0u32, |m, j| m | (1 << j))
    }

    /// Copy of this matrix with a different δ (must still satisfy the invariants).
    pub fn with_delta(&self, delta: f64) -> Result<Self> {
        InteractionMatrix::new(self.rows(), delta)
    }

    /// Parses the text format: `q <q> delta <δ>` followed by `q` rows.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "empty matrix file"))?;
        let tok: Vec<&str> = header.split_whitespace().collect();
        if tok.len() != 4 || tok[0] != "q" || tok[2] != "delta" {
            return Err(parse_err(hline, "expected header `q <q> delta <delta>`"));
        }
        let q: usize = tok[1]
            .parse()
            .map_err(|_| parse_err(hline, format!("bad q `{}`", tok[1])))?;
        let delta: f64 = tok[3]
            .parse()
            .map_err(|_| parse_err(hline, format!("bad delta `{}`", tok[3])))?;
        let mut rows = Vec::with_capacity(q);
        let mut last_line = hline;
        for (lno, line) in lines {
            last_line = lno;
            if rows.len() == q {
                return Err(parse_err(lno, "trailing content after matrix rows"));
            }
            let row = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| parse_err(lno, format!("bad entry `{t}`")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if row.len() != q {
                return Err(parse_err(lno, format!("expected {q} entries, found {}", row.len())));
            }
            rows.push(row);
        }
        if rows.len() != q {
            return Err(parse_err(last_line, format!("expected {q} rows, found {}", rows.len())));
        }
        InteractionMatrix::new(rows, delta).map_err(|e| parse_err(hline, e.to_string()))
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("q {} delta {}\n", self.q, self.delta);
        for row in self.entries.chunks(self.q) {
            let cells: Vec<String> = row.iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(s, "{}", cells.join(" "));
        }
        s
    }

    /// Hard-core (independent set) matrix: spin 0 is occupied, `H[0][0] = 0`.
    pub fn hard_core() -> Self {
        InteractionMatrix::new(vec![vec![0.0, 1.0], vec![1.0, 1.0]], DEFAULT_DELTA).unwrap()
    }

    /// Ferromagnetic Potts matrix with diagonal 1 and off-diagonal `delta`.
    pub fn potts(q: usize, delta: f64) -> Result<Self> {
        let rows = (0..q)
            .map(|i| (0..q).map(|j| if i == j { 1.0 } else { delta }).collect())
            .collect();
        InteractionMatrix::new(rows, delta)
    }

    /// All-ones matrix; the single maximal biclique is `([q], [q])`.
    pub fn all_ones(q: usize) -> Self {
        InteractionMatrix::new(vec![vec![1.0; q]; q], DEFAULT_DELTA).unwrap()
    }
}

/// Divides `raw` by its maximum entry. Returns the normalized δ-matrix and
/// `ln(max)`, so that `ln Z_raw = |E| * log_scale + ln Z_normalized`.
///
/// δ is set to the second-largest distinct entry after scaling; when that
/// entry is 0 (a 0-1 pattern) `delta_override` or [`DEFAULT_DELTA`] is used.
pub fn normalize_matrix(raw: &[Vec<f64>], delta_override: Option<f64>) -> Result<(InteractionMatrix, f64)> {
    let q = raw.len();
    for (i, row) in raw.iter().enumerate() {
        if row.len() != q {
            return Err(Error::InvalidMatrix(format!("row {i} has {} entries, expected {q}", row.len())));
        }
    }
    for i in 0..q {
        for j in 0..q {
            let x = raw[i][j];
            if !x.is_finite() || x < 0.0 {
                return Err(Error::InvalidMatrix(format!("entry ({i}, {j}) = {x} is not a nonnegative real")));
            }
            if x != raw[j][i] {
                return Err(Error::Asymmetric(i, j));
            }
        }
    }
    let max = raw.iter().flatten().cloned().fold(0.0f64, f64::max);
    if max == 0.0 {
        return Err(Error::AllZero);
    }
    let first = raw.first().and_then(|r| r.first()).copied().unwrap_or(0.0);
    if raw.iter().flatten().all(|&x| x == first) {
        return Err(Error::ConstantMatrix);
    }
    let rows: Vec<Vec<f64>> = raw
        .iter()
        .map(|r| r.iter().map(|&x| if x == max { 1.0 } else { x / max }).collect())
        .collect();
    let second = rows
        .iter()
        .flatten()
        .cloned()
        .filter(|&x| x != 1.0)
        .fold(0.0f64, f64::max);
    let delta = match delta_override {
        Some(d) => {
            if !(d >= second && d > 0.0 && d < 1.0) {
                return Err(Error::InvalidRange(format!(
                    "delta override {d} must lie in [{second}, 1) and be positive"
                )));
            }
            d
        }
        None if second > 0.0 => second,
        None => DEFAULT_DELTA,
    };
    Ok((InteractionMatrix::new(rows, delta)?, max.ln()))
}

/// A pair of spin sets with `H[i][j] = 1` for all `i ∈ b0`, `j ∈ b1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Biclique {
    pub b0: Vec<Spin>,
    pub b1: Vec<Spin>,
}

impl Biclique {
    pub fn new(mut b0: Vec<Spin>, mut b1: Vec<Spin>) -> Self {
        b0.sort_unstable();
        b0.dedup();
        b1.sort_unstable();
        b1.dedup();
        Biclique { b0, b1 }
    }

    fn from_masks(m0: u32, m1: u32) -> Self {
        let bits = |m: u32| (0..32u8).filter(|&s| m & (1 << s) != 0).collect::<Vec<_>>();
        Biclique {
            b0: bits(m0),
            b1: bits(m1),
        }
    }

    /// Ground spins of side `side` (0 = left, 1 = right).
    pub fn side(&self, side: usize) -> &[Spin] {
        if side == 0 {
            &self.b0
        } else {
            &self.b1
        }
    }

    pub fn mask(&self, side: usize) -> u32 {
        self.side(side).iter().fold(0, |m, &s| m | (1 << s))
    }

    pub fn contains(&self, side: usize, spin: Spin) -> bool {
        self.side(side).contains(&spin)
    }

    /// Spins outside the ground set of `side`.
    pub fn excited_spins(&self, side: usize, q: usize) -> Vec<Spin> {
        (0..q as Spin).filter(|&s| !self.contains(side, s)).collect()
    }

    pub fn is_biclique_of(&self, h: &InteractionMatrix) -> bool {
        self.b0
            .iter()
            .all(|&i| self.b1.iter().all(|&j| h.get(i, j) == 1.0))
    }

    /// True when no spin can be added to either side.
    pub fn is_maximal_in(&self, h: &InteractionMatrix) -> bool {
        if !self.is_biclique_of(h) {
            return false;
        }
        let q = h.q() as Spin;
        let grow0 = (0..q)
            .filter(|s| !self.b0.contains(s))
            .any(|s| self.b1.iter().all(|&j| h.get(s, j) == 1.0));
        let grow1 = (0..q)
            .filter(|s| !self.b1.contains(s))
            .any(|s| self.b0.iter().all(|&i| h.get(i, s) == 1.0));
        !grow0 && !grow1
    }

    /// `n * (ln|B_0| + ln|B_1|)`, the log ground-state multiplicity.
    pub fn ln_ground_count(&self, n: usize) -> f64 {
        n as f64 * ((self.b0.len() as f64).ln() + (self.b1.len() as f64).ln())
    }
}

impl std::fmt::Display for Biclique {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let join = |s: &[Spin]| s.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "({{{}}},{{{}}})", join(&self.b0), join(&self.b1))
    }
}

/// All inclusion-maximal bicliques with both sides nonempty, sorted
/// lexicographically by `(b0, b1)`.
///
/// Every maximal pair is a Galois-closed pair `(A, N(A))` with
/// `A = N(N(A))`, where `N(A)` is the common 1-neighbourhood of `A`; we scan
/// every nonempty `A ⊆ [q]` and keep the closed ones.
pub fn enumerate_maximal_bicliques(h: &InteractionMatrix) -> Vec<Biclique> {
    let q = h.q();
    let ones: Vec<u32> = (0..q).map(|i| h.ones_mask(i)).collect();
    let full = if q == 32 { u32::MAX } else { (1u32 << q) - 1 };
    let common = |set: u32| -> u32 {
        (0..q)
            .filter(|&i| set & (1 << i) != 0)
            .fold(full, |acc, i| acc & ones[i])
    };
    let mut out = Vec::new();
    for a in 1..=full {
        let b = common(a);
        if b == 0 {
            continue;
        }
        if common(b) == a {
            out.push(Biclique::from_masks(a, b));
        }
    }
    out.sort();
    out
}

/// A full spin assignment over vertex ids `0..2n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfiguration {
    pub assignment: Vec<Spin>,
}

impl SpinConfiguration {
    pub fn new(assignment: Vec<Spin>) -> Self {
        SpinConfiguration { assignment }
    }

    pub fn validate(&self, g: &BipartiteGraph, h: &InteractionMatrix) -> Result<()> {
        if self.assignment.len() != g.num_vertices() {
            return Err(Error::InvalidRange(format!(
                "configuration has {} spins for {} vertices",
                self.assignment.len(),
                g.num_vertices()
            )));
        }
        if let Some(v) = self.assignment.iter().position(|&s| s as usize >= h.q()) {
            return Err(Error::InvalidRange(format!("spin at vertex {v} is out of range")));
        }
        Ok(())
    }

    pub fn to_line(&self) -> String {
        self.assignment
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// `ln w(σ) = Σ_{uv ∈ E} ln H[σ(u)][σ(v)]`, or [`LN_ZERO`] if a factor vanishes.
pub fn configuration_weight_log(g: &BipartiteGraph, h: &InteractionMatrix, sigma: &SpinConfiguration) -> f64 {
    debug_assert_eq!(sigma.assignment.len(), g.num_vertices());
    let s = &sigma.assignment;
    let mut total = 0.0;
    for u in 0..g.n() {
        for &v in g.neighbors(u) {
            let l = h.ln(s[u], s[v as usize]);
            if l == LN_ZERO {
                return LN_ZERO;
            }
            total += l;
        }
    }
    total
}

/// Evaluation of the low-temperature premises for `(H, Δ, λ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PremiseReport {
    /// Δ/λ ≥ 100/(1−δ) · q² · ln(qΔ)
    pub degree_gap_ok: bool,
    /// Δ ≥ (10/(1−δ) · q · ln(qΔ))⁴
    pub degree_ok: bool,
    /// τ ≥ 5 + 3 ln((q−1)Δ³)
    pub tau_ok: bool,
    pub epsilon: f64,
    pub tau: f64,
    pub details: Vec<String>,
}

impl PremiseReport {
    pub fn passed(&self) -> bool {
        self.degree_gap_ok && self.degree_ok
    }
}

/// Polymer size parameter ε = (1−δ)/(50 q ln(qΔ)).
pub fn premise_epsilon(q: usize, delta: f64, degree: f64) -> f64 {
    (1.0 - delta) / (50.0 * q as f64 * (q as f64 * degree).ln())
}

/// Decay constant τ = (1−δ)/(4 ε q).
pub fn premise_tau(q: usize, delta: f64, epsilon: f64) -> f64 {
    (1.0 - delta) / (4.0 * epsilon * q as f64)
}

pub fn check_premises(h: &InteractionMatrix, degree: f64, lambda: f64) -> Result<PremiseReport> {
    if !(degree >= 3.0) {
        return Err(Error::InvalidRange(format!("degree {degree} must be at least 3")));
    }
    if !(lambda > 0.0 && lambda < degree) {
        return Err(Error::InvalidRange(format!("lambda {lambda} not in (0, {degree})")));
    }
    let q = h.q() as f64;
    let delta = h.delta();
    let log_qd = (q * degree).ln();

    let gap_lhs = degree / lambda;
    let gap_rhs = 100.0 / (1.0 - delta) * q * q * log_qd;
    let deg_rhs = (10.0 / (1.0 - delta) * q * log_qd).powi(4);
    let epsilon = premise_epsilon(h.q(), delta, degree);
    let tau = premise_tau(h.q(), delta, epsilon);
    let tau_rhs = 5.0 + 3.0 * ((q - 1.0) * degree.powi(3)).ln();

    let degree_gap_ok = gap_lhs >= gap_rhs;
    let degree_ok = degree >= deg_rhs;
    let tau_ok = tau >= tau_rhs;
    let mark = |b: bool| if b { "ok" } else { "FAIL" };
    let details = vec![
        format!("Delta/lambda = {gap_lhs:.6e} >= 100/(1-delta)*q^2*ln(q*Delta) = {gap_rhs:.6e}: {}", mark(degree_gap_ok)),
        format!("Delta = {degree:.6e} >= (10/(1-delta)*q*ln(q*Delta))^4 = {deg_rhs:.6e}: {}", mark(degree_ok)),
        format!("tau = {tau:.6e} >= 5 + 3*ln((q-1)*Delta^3) = {tau_rhs:.6e}: {}", mark(tau_ok)),
        format!("epsilon = {epsilon:.9e}"),
    ];
    Ok(PremiseReport {
        degree_gap_ok,
        degree_ok,
        tau_ok,
        epsilon,
        tau,
        details,
    })
}
