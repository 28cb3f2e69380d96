//! Fixed inputs shared by the benchmarks.

use swarm_core::assign::lap::Cost;
use swarm_core::report::{random_scenario, GeneratorParams};
use swarm_core::Scenario;

/// Dense `n × m` cost matrix with deterministic pseudo-random entries.
pub fn cost_matrix(n: usize, m: usize, seed: u64) -> Vec<Vec<Cost>> {
    let mut x = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (0..n)
        .map(|_| {
            (0..m)
                .map(|_| {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    Some((x >> 11) as f64 / (1u64 << 53) as f64)
                })
                .collect()
        })
        .collect()
}

/// The ten-agent benchmark scenario at sensing radius `h`.
pub fn ten_agents(h: f64, seed: u64) -> Scenario {
    let p = GeneratorParams {
        h,
        ..GeneratorParams::default()
    };
    random_scenario(10, 10, seed, &p)
}
