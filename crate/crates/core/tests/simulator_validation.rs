mod common;

use bhcache::baselines::{exhaustive_search, DEFAULT_ENUMERATION_CAP};
use bhcache::simulator::{draw_effective_snr, simulate_segment, simulate_strategy};
use bhcache::{DelayModel, ReplicaVector, Scenario, SimConfig, SimEstimate};
use common::reference_scenario;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `1 / (1 - q^n)` at R = 2.5, 10 dB, evaluated with 30-digit arithmetic.
const M1_DELAY: [f64; 8] = [
    1.593_105_769_187_155_2,
    1.160_905_954_098_417_3,
    1.054_409_128_744_915,
    1.019_587_299_754_048_3,
    1.007_203_689_722_900_2,
    1.002_669_827_332_643_7,
    1.000_992_301_171_404,
    1.000_369_199_085_347_7,
];

fn sim(trials: u64, seed: u64) -> SimConfig {
    SimConfig { trials, rng_seed: seed, ..Default::default() }
}

fn within_3se(est: &SimEstimate, expected: f64) -> bool {
    (est.mean_delay - expected).abs() <= 3.0 * est.std_error
}

fn with_buffer(m: u32) -> Scenario {
    Scenario { buffer: m, ..reference_scenario(1, 1, 8, 1, 0.0) }
}

#[test]
fn single_candidate_mean_is_avg_snr() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n).map(|_| draw_effective_snr(1, 10.0, &mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - 10.0).abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn two_candidate_mean_follows_order_statistics() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let n = 1_000_000;
    let draws: Vec<f64> = (0..n).map(|_| draw_effective_snr(2, 10.0, &mut rng)).collect();
    let mean = draws.iter().sum::<f64>() / n as f64;
    let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    assert!((mean - 15.0).abs() <= 3.0 * se, "mean {mean} se {se}");
}

#[test]
fn four_candidate_cdf_passes_kolmogorov_smirnov() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let n = 100_000;
    let mut draws: Vec<f64> = (0..n).map(|_| draw_effective_snr(4, 10.0, &mut rng)).collect();
    draws.sort_by(f64::total_cmp);
    let cdf = |x: f64| (-(-x / 10.0).exp_m1()).powi(4);
    let stat = draws
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n as f64).max((i + 1) as f64 / n as f64 - f)
        })
        .fold(0.0, f64::max);
    // asymptotic critical value at the 1% level
    let critical = 1.628 / (n as f64).sqrt();
    assert!(stat < critical, "KS statistic {stat} >= {critical}");
}

#[test]
fn unit_buffer_matches_geometric_delay() {
    let s = with_buffer(1);
    for (i, &expected) in M1_DELAY.iter().enumerate() {
        let est = simulate_segment(i + 1, &s, &sim(100_000, 3)).unwrap();
        assert!(within_3se(&est, expected), "|Phi|={}: {est:?} vs {expected}", i + 1);
        assert!(est.mean_delay >= 1.0 && est.std_error >= 0.0);
    }
}

#[test]
fn longer_buffers_stay_above_the_bound() {
    let bounds = [
        (2, 1, 1.016_859_481_032_815_3),
        (2, 2, 1.000_274_970_384_724_2),
        (2, 4, 1.000_000_075_567_155),
        (4, 1, 1.000_007_758_773_360_9),
        (4, 2, 1.000_000_000_060_197_6),
        (4, 4, 1.0),
    ];
    for (m, n, bound) in bounds {
        let est = simulate_segment(n, &with_buffer(m), &sim(100_000, 4)).unwrap();
        assert!(est.mean_delay >= bound - 3.0 * est.std_error, "m={m} |Phi|={n}: {est:?} < {bound}");
    }
}

#[test]
fn more_candidates_never_slow_a_download() {
    for m in [1, 2, 3] {
        let s = Scenario { rate: 4.0, ..with_buffer(m) };
        let means: Vec<f64> = (1..=8)
            .map(|n| simulate_segment(n, &s, &sim(20_000, 5)).unwrap().mean_delay)
            .collect();
        assert!(means.windows(2).all(|w| w[1] <= w[0]), "m={m}: {means:?}");
    }
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let s = reference_scenario(3, 3, 4, 2, 1.5);
    let x = ReplicaVector::new(vec![2, 2, 2, 1, 1, 0, 0, 0, 0], &s).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                (
                    simulate_strategy(&x, &s, &sim(20_000, 8)).unwrap(),
                    simulate_segment(3, &s, &sim(20_000, 8)).unwrap(),
                )
            })
    };
    let one = run(1);
    for threads in [2, 3, 8] {
        let other = run(threads);
        assert_eq!(one.0.mean_delay.to_bits(), other.0.mean_delay.to_bits());
        assert_eq!(one.0.std_error.to_bits(), other.0.std_error.to_bits());
        assert_eq!(one.1, other.1);
    }
    assert_ne!(one.0, run_with_seed(&x, &s, 9));
}

fn run_with_seed(x: &ReplicaVector, s: &Scenario, seed: u64) -> SimEstimate {
    simulate_strategy(x, s, &sim(20_000, seed)).unwrap()
}

#[test]
fn strategy_mean_matches_exact_objective() {
    let s = reference_scenario(3, 3, 4, 2, 2.0);
    let model = DelayModel::new(&s).unwrap();
    let (x, value) = exhaustive_search(&s, &model, DEFAULT_ENUMERATION_CAP).unwrap();
    let est = simulate_strategy(&x, &s, &sim(100_000, 21)).unwrap();
    assert!(within_3se(&est, value), "{est:?} vs {value}");
}

#[test]
fn all_backhaul_at_zero_delay_gives_full_diversity() {
    let s = reference_scenario(3, 3, 4, 2, 0.0);
    let x = ReplicaVector::zeros(s.num_segments());
    let est = simulate_strategy(&x, &s, &sim(100_000, 22)).unwrap();
    // 3 D(4)
    assert!(within_3se(&est, 3.058_761_899_262_145), "{est:?}");
}

#[test]
fn fractional_backhaul_delay_is_added_as_is() {
    let s = reference_scenario(2, 2, 3, 0, 0.25);
    let x = ReplicaVector::zeros(s.num_segments());
    let base = simulate_strategy(&x, &Scenario { backhaul_delay: 0.0, ..s.clone() }, &sim(1000, 1)).unwrap();
    let shifted = simulate_strategy(&x, &s, &sim(1000, 1)).unwrap();
    assert!((shifted.mean_delay - base.mean_delay - 0.5).abs() < 1e-12);
}
