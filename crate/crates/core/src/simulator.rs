//! Monte Carlo simulation of segment downloads over Rayleigh fading with IR hybrid-ARQ.
//!
//! Every slot the user is served by the best of its candidate stations, so the slot SNR is
//! the maximum of `|candidates|` exponential draws with mean `avg_snr`. A segment decodes at
//! the first slot `s` where `sum_{j in last m slots} log2(1 + snr[j]) >= R`.
//!
//! This module deliberately shares nothing with `delay_model`; it is the independent check of
//! the closed-form delays.
//!
//! Randomness is counter-based: the draws of slot `s` of lane `l` in trial `t` come from a
//! ChaCha8 generator whose key is derived from `(seed, l, s)` and whose stream is `t`. Results
//! are therefore identical for any number of worker threads, and two runs that differ only in
//! the number of candidates see the same first draws in every slot (common random numbers).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, WeightedIndex};
use rayon::prelude::*;

use crate::delay_model::{ReplicaVector, Scenario};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimConfig {
    pub trials: u64,
    pub rng_seed: u64,
    /// A trial that has not decoded after this many slots aborts the run.
    pub max_slots_per_segment: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            rng_seed: 0,
            max_slots_per_segment: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimEstimate {
    /// Sample mean, in slots.
    pub mean_delay: f64,
    /// Standard error of the mean.
    pub std_error: f64,
    pub trials_used: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for one `(trial, lane, slot)` cell.
fn cell_rng(seed: u64, trial: u64, lane: u64, slot: u64) -> ChaCha8Rng {
    let key = splitmix64(splitmix64(splitmix64(seed) ^ lane) ^ slot);
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(trial);
    rng
}

/// Best-of-`num_candidates` SNR under Rayleigh fading.
///
/// # Panics
/// If `num_candidates` is zero or `avg_snr` is not positive.
pub fn draw_effective_snr<R: Rng + ?Sized>(num_candidates: usize, avg_snr: f64, rng: &mut R) -> f64 {
    assert!(num_candidates >= 1, "at least one candidate station is required");
    let exp = Exp::new(1.0 / avg_snr).expect("avg_snr must be positive");
    (0..num_candidates)
        .map(|_| exp.sample(rng))
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Clone, Copy)]
struct Link {
    rate: f64,
    window: usize,
    avg_snr: f64,
    max_slots: u64,
    seed: u64,
}

impl Link {
    fn new(scenario: &Scenario, config: &SimConfig) -> Self {
        Self {
            rate: scenario.rate,
            window: scenario.buffer as usize,
            avg_snr: scenario.avg_snr,
            max_slots: config.max_slots_per_segment,
            seed: config.rng_seed,
        }
    }

    /// Slots until one segment decodes.
    fn download(&self, candidates: usize, trial: u64, lane: u64) -> Result<u64> {
        let mut info = vec![0.0; self.window];
        for slot in 1..=self.max_slots {
            let mut rng = cell_rng(self.seed, trial, lane, slot);
            let snr = draw_effective_snr(candidates, self.avg_snr, &mut rng);
            info[(slot as usize - 1) % self.window] = snr.ln_1p() / std::f64::consts::LN_2;
            let stored = (slot as usize).min(self.window);
            let accumulated: f64 = if stored == self.window {
                info.iter().sum()
            } else {
                info[..stored].iter().sum()
            };
            if accumulated >= self.rate {
                return Ok(slot);
            }
        }
        Err(Error::SlotCap {
            trial,
            cap: self.max_slots,
            candidates,
        })
    }
}

fn pairwise_sum(values: &[f64]) -> f64 {
    if values.len() <= 64 {
        values.iter().sum()
    } else {
        let (a, b) = values.split_at(values.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

fn run_trials<F>(trials: u64, per_trial: F) -> Result<SimEstimate>
where
    F: Fn(u64) -> Result<f64> + Sync + Send,
{
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let outcomes: Vec<Result<f64>> = (0..trials).into_par_iter().map(per_trial).collect();
    let values: Vec<f64> = outcomes.into_iter().collect::<Result<_>>()?;
    let n = values.len() as f64;
    let mean = pairwise_sum(&values) / n;
    let std_error = if values.len() > 1 {
        let sq: Vec<f64> = values.iter().map(|v| (v - mean) * (v - mean)).collect();
        (pairwise_sum(&sq) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(SimEstimate {
        mean_delay: mean,
        std_error,
        trials_used: trials,
    })
}

/// Mean download delay of one segment with `num_candidates` serving stations.
pub fn simulate_segment(
    num_candidates: usize,
    scenario: &Scenario,
    config: &SimConfig,
) -> Result<SimEstimate> {
    scenario.validate()?;
    if num_candidates == 0 {
        return Err(Error::Domain {
            name: "num_candidates",
            value: 0.0,
            reason: "a cached segment needs at least one candidate station",
        });
    }
    let link = Link::new(scenario, config);
    run_trials(config.trials, |t| {
        link.download(num_candidates, t, 1).map(|s| s as f64)
    })
}

/// Mean download delay of a whole file request under placement `x`.
///
/// Each trial draws a file from the popularity distribution and adds up the delays of its
/// segments. An uncached segment is served by all `K` stations after `backhaul_delay` extra
/// slots.
pub fn simulate_strategy(
    x: &ReplicaVector,
    scenario: &Scenario,
    config: &SimConfig,
) -> Result<SimEstimate> {
    scenario.validate()?;
    let x = ReplicaVector::new(x.as_slice().to_vec(), scenario)?;
    let files = WeightedIndex::new(&scenario.popularity)
        .map_err(|e| Error::InvalidScenario(format!("popularity: {e}")))?;
    let link = Link::new(scenario, config);
    let l_count = scenario.segments_per_file;
    run_trials(config.trials, |t| {
        let f = files.sample(&mut cell_rng(config.rng_seed, t, 0, 0));
        let mut total = 0.0;
        for l in 0..l_count {
            let copies = x[f * l_count + l];
            let lane = l as u64 + 1;
            total += if copies == 0 {
                scenario.backhaul_delay + link.download(scenario.num_bs, t, lane)? as f64
            } else {
                link.download(copies, t, lane)? as f64
            };
        }
        Ok(total)
    })
}
