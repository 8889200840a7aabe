//! Reference placements and the exhaustive oracle.

use rayon::prelude::*;

use crate::delay_model::{DelayModel, ReplicaVector, Scenario};
use crate::error::{Error, Result};

pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

/// Segment indices from most to least requested; ties keep index order.
fn popularity_order(scenario: &Scenario) -> Vec<usize> {
    let l = scenario.segments_per_file;
    let mut order: Vec<usize> = (0..scenario.num_segments()).collect();
    order.sort_by(|&a, &b| {
        scenario.popularity[b / l]
            .total_cmp(&scenario.popularity[a / l])
            .then(a.cmp(&b))
    });
    order
}

fn fill_top(scenario: &Scenario, slots: usize, copies: usize) -> ReplicaVector {
    let mut x = vec![0; scenario.num_segments()];
    for i in popularity_order(scenario).into_iter().take(slots) {
        x[i] = copies;
    }
    ReplicaVector::from_vec_unchecked(x)
}

/// Most popular content: every station caches the same `C` most requested segments.
pub fn mpc_placement(scenario: &Scenario) -> ReplicaVector {
    fill_top(scenario, scenario.cache_capacity, scenario.num_bs)
}

/// The literal formula `x_1 = ... = x_K = C`, with `C` capped at `K` so it stays feasible.
pub fn mpc_literal_placement(scenario: &Scenario) -> ReplicaVector {
    fill_top(
        scenario,
        scenario.num_bs,
        scenario.cache_capacity.min(scenario.num_bs),
    )
}

/// Largest content diversity: the `K * C` most requested segments, one copy each.
pub fn lcd_placement(scenario: &Scenario) -> ReplicaVector {
    fill_top(scenario, scenario.budget(), 1)
}

/// `(K + 1)^(F L)`, saturating.
pub fn enumeration_size(scenario: &Scenario) -> u128 {
    u32::try_from(scenario.num_segments())
        .ok()
        .and_then(|n| (scenario.num_bs as u128 + 1).checked_pow(n))
        .unwrap_or(u128::MAX)
}

struct Search<'a> {
    /// `cost[i][v]` is the weighted exact cost of segment `i` with `v` copies.
    cost: &'a [Vec<f64>],
    num_bs: usize,
    current: Vec<usize>,
    best: Option<(f64, Vec<usize>)>,
}

impl Search<'_> {
    fn descend(&mut self, i: usize, acc: f64, remaining: usize) {
        if i == self.cost.len() {
            if self.best.as_ref().is_none_or(|(v, _)| acc < *v) {
                self.best = Some((acc, self.current.clone()));
            }
            return;
        }
        for v in 0..=self.num_bs.min(remaining) {
            self.current[i] = v;
            self.descend(i + 1, acc + self.cost[i][v], remaining - v);
        }
    }
}

/// Minimizes the exact objective over every feasible replica vector.
///
/// Vectors are visited in lexicographic order and only a strictly better value replaces the
/// incumbent, so among ties the lexicographically smallest vector wins. The first coordinate
/// is split across the rayon pool; the result does not depend on the number of workers.
pub fn exhaustive_search(
    scenario: &Scenario,
    model: &DelayModel,
    cap: u128,
) -> Result<(ReplicaVector, f64)> {
    let required = enumeration_size(scenario);
    if required > cap {
        return Err(Error::EnumerationCap { required, cap });
    }
    let weight = model.segment_weight();
    let cost: Vec<Vec<f64>> = weight
        .iter()
        .map(|w| (0..=scenario.num_bs).map(|v| w * model.cost_unchecked(v)).collect())
        .collect();
    let n = cost.len();
    let budget = scenario.budget();

    let per_lead: Vec<Option<(f64, Vec<usize>)>> = (0..=scenario.num_bs.min(budget))
        .into_par_iter()
        .map(|lead| {
            let mut search = Search {
                cost: &cost,
                num_bs: scenario.num_bs,
                current: vec![0; n],
                best: None,
            };
            search.current[0] = lead;
            search.descend(1, 0.0 + cost[0][lead], budget - lead);
            search.best
        })
        .collect();

    let mut best: Option<(f64, Vec<usize>)> = None;
    for candidate in per_lead.into_iter().flatten() {
        if best.as_ref().is_none_or(|(v, _)| candidate.0 < *v) {
            best = Some(candidate);
        }
    }
    let (value, x) = best.expect("the all-zero vector is always feasible");
    Ok((ReplicaVector::from_vec_unchecked(x), value))
}
