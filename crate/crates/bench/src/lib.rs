//! Shared fixtures for the benchmarks.

use serpaudit_core::crawler::default_queries;
use serpaudit_core::model::{Language, Location};
use serpaudit_core::seed;
use serpaudit_core::simengine::{EnginePersona, RequestContext, SimEngine};

/// `n` pairs of duplicate-free lists of length `len` over a universe of `2·len` items.
pub fn list_pairs(n: usize, len: usize, key: u64) -> Vec<(Vec<u32>, Vec<u32>)> {
    let pick = |i: usize, side: u64| {
        let mut pool: Vec<u32> = (0..2 * len as u32).collect();
        (0..len)
            .map(|j| {
                let u = seed::unit(seed::derive(key, &[&side.to_string()]), i as u64, j as u64);
                pool.swap_remove((u * pool.len() as f64) as usize % pool.len())
            })
            .collect()
    };
    (0..n).map(|i| (pick(i, 0), pick(i, 1))).collect()
}

/// Two samples of `n` values each, the second shifted by `shift`.
pub fn samples(n: usize, shift: f64, key: u64) -> (Vec<f64>, Vec<f64>) {
    let a = (0..n).map(|i| seed::normal(key, i as u64, 0)).collect();
    let b = (0..n).map(|i| seed::normal(key, i as u64, 1) + shift).collect();
    (a, b)
}

pub fn engine() -> SimEngine {
    let mut p = EnginePersona::neutral("bench", 1);
    p.w_loc = 0.5;
    p.noise_sigma = 0.1;
    SimEngine::new(p, &default_queries()).expect("default corpus")
}

pub fn context(loc: &str, lang: &str) -> RequestContext {
    RequestContext::new(Location::new(loc).expect("known location"), Language::new(lang).expect("valid tag"), &[], "ip-bench")
}
