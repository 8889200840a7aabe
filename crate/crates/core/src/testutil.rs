use crate::delay_model::Scenario;
use crate::popularity::zipf_popularity;

/// Scenario with R = 2.5, m = 1, snr = 10 (10 dB) and Zipf(0.6) popularity.
pub(crate) fn reference_scenario(f: usize, l: usize, k: usize, c: usize, delta: f64) -> Scenario {
    Scenario {
        num_bs: k,
        num_files: f,
        segments_per_file: l,
        cache_capacity: c,
        backhaul_delay: delta,
        rate: 2.5,
        buffer: 1,
        avg_snr: 10.0,
        popularity: zipf_popularity(f, 0.6),
    }
}
