#![allow(dead_code)]

use bhcache::{db_to_linear, zipf_popularity, Scenario};
use proptest::prelude::*;

pub fn reference_scenario(f: usize, l: usize, k: usize, c: usize, delta: f64) -> Scenario {
    Scenario {
        num_bs: k,
        num_files: f,
        segments_per_file: l,
        cache_capacity: c,
        backhaul_delay: delta,
        rate: 2.5,
        buffer: 1,
        avg_snr: db_to_linear(10.0),
        popularity: zipf_popularity(f, 0.6),
    }
}

/// Small random instances with moderate physical parameters.
pub fn scenario_strategy() -> impl Strategy<Value = Scenario> {
    (
        1usize..=6,
        1usize..=5,
        1usize..=4,
        0.0f64..=5.0,
        0.5f64..=4.0,
        1u32..=3,
        5.0f64..=20.0,
        0.0f64..=1.5,
    )
        .prop_flat_map(|(k, f, l, delta, rate, m, snr_db, gamma)| {
            (0..=f * l).prop_map(move |c| Scenario {
                num_bs: k,
                num_files: f,
                segments_per_file: l,
                cache_capacity: c,
                backhaul_delay: delta,
                rate,
                buffer: m,
                avg_snr: db_to_linear(snr_db),
                popularity: zipf_popularity(f, gamma),
            })
        })
}

/// A scenario with a point of its relaxed box `[floor, K]^(F L)` drawn from `unit` in `[0, 1)`.
pub fn relaxed_point(scenario: &Scenario, floor: f64, unit: &[f64]) -> Vec<f64> {
    let k = scenario.num_bs as f64;
    unit.iter()
        .take(scenario.num_segments())
        .map(|u| floor + u * (k - floor))
        .collect()
}
