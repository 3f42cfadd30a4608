//! Invariant suites behind `polyspin verify`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dynamics::ChainContext;
use crate::error::Result;
use crate::estimator::{EstimatorOptions, SpinSampler};
use crate::graph::{check_expansion_inequalities, generate_random_regular_bipartite, second_eigenvalue, BipartiteGraph, DEFAULT_SPECTRAL_TOL};
use crate::oracle::{self, encode_configuration, exact_chain_analysis, exact_sigma_gamma_sum};
use crate::polymer::{Polymer, PolymerConfiguration, PolymerModel};
use crate::rng::{self, StreamRng};
use crate::spin_model::{enumerate_maximal_bicliques, InteractionMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Random symmetric δ-matrix (δ = 1/2) with entries in {0, 1} ∪ (0, 1/2].
pub fn random_delta_matrix(q: usize, rng: &mut StreamRng) -> InteractionMatrix {
    loop {
        let mut rows = vec![vec![0.0; q]; q];
        for i in 0..q {
            for j in i..q {
                let r: f64 = rng.gen();
                let x = if r < 0.5 {
                    1.0
                } else if r < 0.7 {
                    0.0
                } else {
                    rng.gen_range(0.01..=0.5)
                };
                rows[i][j] = x;
                rows[j][i] = x;
            }
        }
        if let Ok(h) = InteractionMatrix::new(rows, 0.5) {
            return h;
        }
    }
}

/// Random compatible family drawn greedily from `polymers`.
pub fn random_family(g: &BipartiteGraph, polymers: &[Polymer], rng: &mut StreamRng) -> PolymerConfiguration {
    let mut order: Vec<usize> = (0..polymers.len()).collect();
    order.shuffle(rng);
    let want = rng.gen_range(0..=3usize);
    let mut chosen: Vec<Polymer> = Vec::new();
    for i in order {
        if chosen.len() == want {
            break;
        }
        if chosen.iter().all(|c| crate::polymer::are_compatible(g, c, &polymers[i])) {
            chosen.push(polymers[i].clone());
        }
    }
    PolymerConfiguration::new(g, chosen).expect("greedy family is compatible")
}

/// Largest relative gap `|e^{a−b} − 1|` (0 when both sides vanish).
pub fn relative_gap(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY && b == f64::NEG_INFINITY {
        0.0
    } else {
        ((a - b).exp() - 1.0).abs()
    }
}

/// Polymer-weight identity on random small instances. `perturb` is added to
/// every ln w(γ) (mutation check).
pub fn weight_identity_suite(instances: usize, seed: u64, perturb: f64) -> Result<SuiteOutcome> {
    let mut worst = 0.0f64;
    let mut done = 0;
    let mut attempt = 0u64;
    while done < instances {
        attempt += 1;
        let mut r = rng::stream(seed, &[0x1d, attempt]);
        let n = r.gen_range(3..=6usize);
        let q = r.gen_range(2..=3usize);
        let g = generate_random_regular_bipartite(n, 3, r.gen())?;
        let h = random_delta_matrix(q, &mut r);
        let bicliques = enumerate_maximal_bicliques(&h);
        let b = bicliques[r.gen_range(0..bicliques.len())].clone();
        let model = PolymerModel::new(&g, &h, b.clone(), 0.5)?;
        let polymers = model.enumerate_allowed_polymers(3, 200_000)?;
        let cfg = random_family(&g, &polymers, &mut r);
        let lhs = b.ln_ground_count(n)
            + cfg
                .polymers()
                .iter()
                .map(|p| model.polymer_weight_log(p) + perturb)
                .sum::<f64>();
        let rhs = exact_sigma_gamma_sum(&model, &cfg)?;
        worst = worst.max(relative_gap(lhs, rhs));
        done += 1;
    }
    Ok(SuiteOutcome {
        name: "weight-identity",
        passed: worst <= 1e-10,
        detail: format!("{done} instances, max relative gap {worst:e}"),
    })
}

/// Detailed balance and stationarity on K_{3,3} hard-core and C_8 hard-core.
pub fn stationarity_suite() -> Result<SuiteOutcome> {
    let hc = InteractionMatrix::hard_core();
    let graphs = [BipartiteGraph::complete(3), BipartiteGraph::cycle(4)];
    let mut worst = 0.0f64;
    let mut checked = 0;
    for g in &graphs {
        let region: Vec<u32> = (0..g.num_vertices() as u32).collect();
        for b in enumerate_maximal_bicliques(&hc) {
            for cap in 1..=2 {
                let model = PolymerModel::new(g, &hc, b.clone(), 0.5)?;
                let ctx = ChainContext::new(model, cap)?;
                let a = exact_chain_analysis(&ctx, &region, oracle::DEFAULT_STATE_BUDGET)?;
                worst = worst.max(a.detailed_balance_violation).max(a.stationarity_violation);
                checked += 1;
            }
        }
    }
    Ok(SuiteOutcome {
        name: "chain-stationarity",
        passed: worst <= 1e-10,
        detail: format!("{checked} chains, max violation {worst:e}"),
    })
}

/// Expansion inequalities with the certified λ on generated graphs.
pub fn expansion_suite(level: Level, seed: u64) -> Result<SuiteOutcome> {
    let shapes: &[(usize, usize)] = match level {
        Level::Quick => &[(16, 3), (32, 4)],
        Level::Full => &[(16, 3), (32, 4), (64, 8), (128, 6)],
    };
    let mut violations = 0;
    let mut draws = 0;
    for (i, &(n, d)) in shapes.iter().enumerate() {
        let g = generate_random_regular_bipartite(n, d, rng::derive_seed(seed, &[0xe, i as u64]))?;
        let cert = second_eigenvalue(&g, DEFAULT_SPECTRAL_TOL)?;
        let rep = check_expansion_inequalities(&g, cert.lambda, 1000, seed ^ i as u64)?;
        violations += rep.violations.len();
        draws += 1000;
    }
    Ok(SuiteOutcome {
        name: "expansion",
        passed: violations == 0,
        detail: format!("{draws} draws, {violations} violations"),
    })
}

/// Boundary-factor bound and `w ≤ 1` over all allowed polymers up to size 3.
pub fn sampling_condition_suite(seed: u64) -> Result<SuiteOutcome> {
    let mut r = rng::stream(seed, &[0x5c]);
    let mut graphs = vec![BipartiteGraph::complete(3), BipartiteGraph::cycle(4)];
    for n in [4, 5, 6] {
        graphs.push(generate_random_regular_bipartite(n, 3, r.gen())?);
    }
    let mut mats = vec![
        InteractionMatrix::hard_core(),
        InteractionMatrix::potts(3, 0.5)?,
        InteractionMatrix::potts(3, 0.1)?,
    ];
    for _ in 0..4 {
        mats.push(random_delta_matrix(3, &mut r));
    }
    let mut polymers = 0;
    let mut bad = 0;
    for g in &graphs {
        for h in &mats {
            for b in enumerate_maximal_bicliques(h) {
                let model = PolymerModel::new(g, h, b, 0.5)?;
                let rep = model.verify_sampling_condition(3, None, 1_000_000)?;
                polymers += rep.polymers_checked;
                bad += rep.boundary_violations.len() + rep.weight_violations.len();
            }
        }
    }
    Ok(SuiteOutcome {
        name: "sampling-condition",
        passed: bad == 0,
        detail: format!("{polymers} polymers, {bad} violations"),
    })
}

/// Total variation between `draws` samples and the exact Gibbs law on K_{3,3} hard-core,
/// on both the brute-force and the polymer path.
pub fn sampling_tv_suite(draws: usize, seed: u64) -> Result<SuiteOutcome> {
    let g = BipartiteGraph::complete(3);
    let h = InteractionMatrix::hard_core();
    let exact = oracle::gibbs_distribution(&g, &h, oracle::DEFAULT_CONFIG_BUDGET)?;
    let mut worst = 0.0f64;
    let polymer_opts = EstimatorOptions {
        allow_exact_fallback: false,
        epsilon: Some(0.5),
        median_runs: Some(1),
        chain: crate::dynamics::ChainParams {
            size_cap: usize::MAX,
            ..Default::default()
        },
        ..EstimatorOptions::default()
    };
    for opts in [EstimatorOptions::default(), polymer_opts] {
        let sampler = SpinSampler::new(&g, &h, 0.05, &opts, seed)?;
        let mut counts = vec![0usize; exact.len()];
        for s in sampler.sample_many(draws, seed)? {
            counts[encode_configuration(&s.assignment, 2) as usize] += 1;
        }
        let tv = 0.5
            * counts
                .iter()
                .zip(&exact)
                .map(|(&c, &p)| (c as f64 / draws as f64 - p).abs())
                .sum::<f64>();
        worst = worst.max(tv);
    }
    Ok(SuiteOutcome {
        name: "sampling-tv",
        passed: worst <= 0.02,
        detail: format!("{draws} draws per path, max TV {worst:.4}"),
    })
}

/// Runs every suite of `level`.
pub fn run(level: Level, seed: u64) -> Result<Vec<SuiteOutcome>> {
    let instances = match level {
        Level::Quick => 50,
        Level::Full => 500,
    };
    let mut out = vec![
        weight_identity_suite(instances, seed, 0.0)?,
        stationarity_suite()?,
        expansion_suite(level, seed)?,
        sampling_condition_suite(seed)?,
    ];
    if level == Level::Full {
        out.push(sampling_tv_suite(100_000, seed)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_identity_detects_perturbation() {
        assert!(weight_identity_suite(10, 1, 0.0).unwrap().passed);
        assert!(!weight_identity_suite(10, 1, 1e-6).unwrap().passed);
    }

    #[test]
    fn quick_suites_pass() {
        assert!(stationarity_suite().unwrap().passed);
        assert!(sampling_condition_suite(2).unwrap().passed);
    }
}
