//! Successive convex approximation over relaxed replica counts.
//!
//! Each iteration linearizes the concave part of the smoothed objective at the current
//! point, adds a proximal term, and minimizes the resulting separable convex function under
//! the aggregate budget `sum(x) <= K * C` and the box `[floor, K]`. The budget is handled by
//! its Lagrange multiplier: for fixed `lambda` every coordinate is an independent 1-D problem,
//! and `lambda` is found by bisection on the budget residual.
//!
//! Coordinates with bit-identical weight and anchor have identical 1-D problems, so the
//! subproblem is solved once per distinct `(weight, anchor)` class. Every segment of a file
//! shares one weight, which keeps large libraries cheap.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use rayon::prelude::*;

use crate::baselines;
use crate::delay_model::{
    DelayModel, ReplicaVector, Scenario, DEFAULT_DOMAIN_FLOOR, DEFAULT_SMOOTHING_A,
};
use crate::error::{Error, Result};

/// Bisection steps allowed for the budget multiplier.
const MAX_MULTIPLIER_STEPS: usize = 200;
/// Iteration cap for each 1-D root search.
const MAX_ROOT_STEPS: usize = 100;
/// Width at which a 1-D root bracket counts as converged.
const ROOT_TOL: f64 = 1e-13;
/// Step norm below which the iteration stops regardless of the relative criterion.
const ABS_STEP_TOL: f64 = 1e-12;
/// Class count above which the 1-D solves fan out over the rayon pool.
const PARALLEL_CLASSES: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `eta` in `(0, 1]` at every iteration.
    Constant(f64),
    /// `eta_t = 1 / (1 + t / 50)`.
    Diminishing,
}

impl StepRule {
    fn at(self, t: usize) -> f64 {
        match self {
            StepRule::Constant(eta) => eta,
            StepRule::Diminishing => 1.0 / (1.0 + t as f64 / 50.0),
        }
    }
}

/// Starting point of the iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Init {
    /// Budget spread evenly over all segments.
    Uniform,
    /// `x_i = min(K, K * C * w_i / sum(w))`.
    #[default]
    PopularityProportional,
    /// The most-popular-content baseline.
    Mpc,
    /// The largest-content-diversity baseline.
    Lcd,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub step: StepRule,
    pub prox_weight: f64,
    pub smoothing_a: f64,
    pub domain_floor: f64,
    /// Relative step-norm stopping tolerance.
    pub tol: f64,
    pub max_iters: usize,
    pub init: Init,
    /// Bracket width, relative to `max(1, lambda)`, at which the multiplier search stops.
    pub subproblem_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            step: StepRule::Constant(1.0),
            prox_weight: 1e-2,
            smoothing_a: DEFAULT_SMOOTHING_A,
            domain_floor: DEFAULT_DOMAIN_FLOOR,
            tol: 1e-4,
            max_iters: 500,
            init: Init::PopularityProportional,
            subproblem_tol: 1e-8,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if let StepRule::Constant(eta) = self.step {
            if !(eta > 0.0 && eta <= 1.0) {
                return bad(format!("step size {eta} must lie in (0, 1]"));
            }
        }
        if !(self.prox_weight.is_finite() && self.prox_weight > 0.0) {
            return bad(format!("prox_weight {} must be positive", self.prox_weight));
        }
        if !(self.smoothing_a > 0.0 && self.smoothing_a < 1.0) {
            return bad(format!("smoothing_a {} must lie in (0, 1)", self.smoothing_a));
        }
        if !(self.domain_floor.is_finite() && self.domain_floor > 0.0) {
            return bad(format!("domain_floor {} must be positive", self.domain_floor));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return bad(format!("tol {} must be positive", self.tol));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.subproblem_tol.is_finite() && self.subproblem_tol > 0.0) {
            return bad(format!("subproblem_tol {} must be positive", self.subproblem_tol));
        }
        Ok(())
    }

    /// Builds the delay model with this configuration's smoothing constants.
    pub fn model(&self, scenario: &Scenario) -> Result<DelayModel> {
        DelayModel::with_smoothing(scenario, self.smoothing_a, self.domain_floor)
    }
}

/// One SCA iteration: smoothed objective at `x^t` and `|x^{t+1} - x^t|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub objective: f64,
    pub step_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverReport {
    /// Last relaxed iterate.
    pub relaxed: Vec<f64>,
    pub rounded: ReplicaVector,
    pub trace: Vec<TraceEntry>,
    /// Smoothed objective at the last relaxed iterate.
    pub final_smooth_objective: f64,
    pub iterations: usize,
    /// False when the loop stopped on `max_iters`.
    pub converged: bool,
    /// Exact objective of `rounded`.
    pub objective: f64,
}

/// Residuals of the subproblem optimality conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktResiduals {
    /// Largest violation of the box-constrained stationarity condition.
    pub stationarity: f64,
    /// `max(0, sum(x) - budget)`.
    pub primal: f64,
    /// `lambda * (budget - sum(x))`.
    pub complementarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubproblemSolution {
    pub x: Vec<f64>,
    pub multiplier: f64,
    pub kkt: KktResiduals,
}

/// Budget the relaxed problem works with; widened to `n * floor` when the real budget leaves
/// no room for the floor, in which case the only relaxed point is all-floor.
pub fn relaxed_budget(model: &DelayModel) -> f64 {
    (model.budget() as f64).max(model.num_segments() as f64 * model.domain_floor())
}

/// One 1-D problem `min w [D(x) + c a^x] + g (x - anchor) + rho (x - anchor)^2 + lambda x`.
#[derive(Debug, Clone, Copy)]
struct Coord {
    weight: f64,
    anchor: f64,
    grad: f64,
    count: usize,
}

struct Subproblem<'a> {
    model: &'a DelayModel,
    classes: Vec<Coord>,
    /// Class of each coordinate.
    class_of: Vec<usize>,
    prox: f64,
    lower: f64,
    upper: f64,
    budget: f64,
}

impl<'a> Subproblem<'a> {
    fn new(model: &'a DelayModel, anchor: &[f64], prox: f64) -> Self {
        let weight = model.segment_weight();
        let mut order: Vec<usize> = (0..anchor.len()).collect();
        order.sort_by_key(|&i| (weight[i].to_bits(), anchor[i].to_bits()));
        let mut classes: Vec<Coord> = Vec::new();
        let mut class_of = vec![0; anchor.len()];
        let mut prev: Option<(u64, u64)> = None;
        for &i in &order {
            let key = (weight[i].to_bits(), anchor[i].to_bits());
            if prev != Some(key) {
                prev = Some(key);
                classes.push(Coord {
                    weight: weight[i],
                    anchor: anchor[i],
                    grad: 0.0,
                    count: 0,
                });
            }
            let c = classes.len() - 1;
            classes[c].count += 1;
            class_of[i] = c;
        }
        let reps: Vec<f64> = classes.iter().map(|c| c.anchor).collect();
        let reps_w: Vec<f64> = classes.iter().map(|c| c.weight).collect();
        for (c, g) in classes.iter_mut().zip(grad_concave_for(model, &reps_w, &reps)) {
            c.grad = g;
        }
        Self {
            model,
            classes,
            class_of,
            prox,
            lower: model.domain_floor(),
            upper: model.num_bs() as f64,
            budget: relaxed_budget(model),
        }
    }

    /// Derivative of the 1-D objective without the multiplier, and its second derivative.
    fn slope(&self, c: &Coord, x: f64) -> (f64, f64) {
        let m = self.model;
        let s = m.smoothing(x);
        let ln_a = m.ln_a();
        let uncached = m.uncached_delay();
        let h = c.weight * (m.delay_slope(x) + uncached * s * ln_a)
            + c.grad
            + 2.0 * self.prox * (x - c.anchor);
        let dh = c.weight * (m.delay_curvature(x) + uncached * s * ln_a * ln_a) + 2.0 * self.prox;
        (h, dh)
    }

    /// Minimizer of one class's 1-D problem at multiplier `lambda`, starting Newton at `start`.
    fn argmin(&self, c: &Coord, lambda: f64, start: f64) -> f64 {
        let (h_lo, _) = self.slope(c, self.lower);
        if h_lo + lambda >= 0.0 {
            return self.lower;
        }
        let (h_hi, _) = self.slope(c, self.upper);
        if h_hi + lambda <= 0.0 {
            return self.upper;
        }
        let (mut lo, mut hi) = (self.lower, self.upper);
        let mut x = start.clamp(lo, hi);
        for _ in 0..MAX_ROOT_STEPS {
            let (h, dh) = self.slope(c, x);
            let h = h + lambda;
            if h == 0.0 {
                return x;
            }
            if h < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let mut next = x - h / dh;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            let moved = (next - x).abs();
            x = next;
            if moved <= 1e-15 * x.max(1.0) || hi - lo <= ROOT_TOL {
                break;
            }
        }
        x
    }

    fn argmin_all(&self, lambda: f64, start: &[f64]) -> Vec<f64> {
        if self.classes.len() >= PARALLEL_CLASSES {
            self.classes
                .par_iter()
                .zip(start.par_iter())
                .map(|(c, &s)| self.argmin(c, lambda, s))
                .collect()
        } else {
            self.classes
                .iter()
                .zip(start)
                .map(|(c, &s)| self.argmin(c, lambda, s))
                .collect()
        }
    }

    fn total(&self, xs: &[f64]) -> f64 {
        self.classes
            .iter()
            .zip(xs)
            .fold(0.0, |acc, (c, &x)| acc + c.count as f64 * x)
    }

    fn solve(&self, multiplier_tol: f64) -> Result<(Vec<f64>, f64)> {
        let anchors: Vec<f64> = self.classes.iter().map(|c| c.anchor).collect();
        let free = self.argmin_all(0.0, &anchors);
        if self.total(&free) <= self.budget {
            return Ok((free, 0.0));
        }
        // every class sits on the floor once lambda exceeds -h(floor)
        let mut hi = self
            .classes
            .iter()
            .map(|c| -self.slope(c, self.lower).0)
            .fold(0.0_f64, f64::max);
        hi = hi * (1.0 + 1e-12) + f64::MIN_POSITIVE;
        let floor_sum = self.lower * self.classes.iter().map(|c| c.count).sum::<usize>() as f64;
        if self.budget <= floor_sum {
            return Ok((vec![self.lower; self.classes.len()], hi));
        }
        let mut lo = 0.0;
        let mut x_lo = free;
        let mut x_hi = vec![self.lower; self.classes.len()];
        let mut converged = false;
        for _ in 0..MAX_MULTIPLIER_STEPS {
            if hi - lo <= multiplier_tol * hi.max(1.0) {
                converged = true;
                break;
            }
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                converged = true;
                break;
            }
            let x_mid = self.argmin_all(mid, &x_lo);
            if self.total(&x_mid) > self.budget {
                lo = mid;
                x_lo = x_mid;
            } else {
                hi = mid;
                x_hi = x_mid;
            }
        }
        if !converged {
            return Err(Error::MultiplierSearch(MAX_MULTIPLIER_STEPS));
        }
        // Blend the bracket ends so the budget binds exactly.
        let s_lo = self.total(&x_lo);
        let s_hi = self.total(&x_hi);
        let lambda = 0.5 * (lo + hi);
        if s_lo > s_hi && s_hi < self.budget {
            let gap = s_lo - s_hi;
            let mut theta = (self.budget - s_hi) / gap;
            // rounding can push the blend a few ulps over; back off until it fits
            for _ in 0..16 {
                let blend: Vec<f64> = x_hi
                    .iter()
                    .zip(&x_lo)
                    .map(|(h, l)| (h + theta * (l - h)).clamp(self.lower, self.upper))
                    .collect();
                let excess = self.total(&blend) - self.budget;
                if excess <= 0.0 {
                    return Ok((blend, lambda));
                }
                theta -= 2.0 * excess / gap + 4.0 * f64::EPSILON * theta;
                if theta <= 0.0 {
                    break;
                }
            }
        }
        Ok((x_hi, lambda))
    }

    fn expand(&self, per_class: &[f64]) -> Vec<f64> {
        self.class_of.iter().map(|&c| per_class[c]).collect()
    }
}

fn grad_concave_for(model: &DelayModel, weight: &[f64], x: &[f64]) -> Vec<f64> {
    weight
        .iter()
        .zip(x)
        .map(|(&w, &xi)| {
            if w == 0.0 {
                0.0
            } else {
                -w * model.smoothing(xi) * (model.delay_slope(xi) + model.delay(xi) * model.ln_a())
            }
        })
        .collect()
}

/// Evaluates the subproblem optimality conditions at `x` with multiplier `lambda`.
pub fn kkt_residuals(
    model: &DelayModel,
    anchor: &[f64],
    prox_weight: f64,
    x: &[f64],
    lambda: f64,
) -> KktResiduals {
    let sub = Subproblem::new(model, anchor, prox_weight);
    let mut stationarity = 0.0_f64;
    for (i, &xi) in x.iter().enumerate() {
        let c = &sub.classes[sub.class_of[i]];
        let r = sub.slope(c, xi).0 + lambda;
        let violation = if xi <= sub.lower {
            (-r).max(0.0)
        } else if xi >= sub.upper {
            r.max(0.0)
        } else {
            r.abs()
        };
        stationarity = stationarity.max(violation);
    }
    let used: f64 = x.iter().sum();
    KktResiduals {
        stationarity,
        primal: (used - sub.budget).max(0.0),
        complementarity: (lambda * (sub.budget - used)).abs(),
    }
}

/// Minimizes the convex surrogate around `anchor` over the relaxed feasible set.
pub fn solve_subproblem(
    anchor: &[f64],
    config: &SolverConfig,
    model: &DelayModel,
) -> Result<SubproblemSolution> {
    config.validate()?;
    model.check_relaxed("anchor", anchor)?;
    let sub = Subproblem::new(model, anchor, config.prox_weight);
    let (per_class, multiplier) = sub.solve(config.subproblem_tol)?;
    let x = sub.expand(&per_class);
    let kkt = kkt_residuals(model, anchor, config.prox_weight, &x, multiplier);
    Ok(SubproblemSolution { x, multiplier, kkt })
}

fn project_into_budget(mut x: Vec<f64>, model: &DelayModel) -> Vec<f64> {
    let lower = model.domain_floor();
    let upper = model.num_bs() as f64;
    for v in x.iter_mut() {
        *v = v.clamp(lower, upper);
    }
    let budget = relaxed_budget(model);
    let total: f64 = x.iter().sum();
    if total > budget {
        let base = x.len() as f64 * lower;
        let scale = (budget - base) / (total - base);
        for v in x.iter_mut() {
            *v = (lower + (*v - lower) * scale).clamp(lower, upper);
        }
    }
    x
}

/// Feasible starting point for `init`.
pub fn initial_point(init: Init, scenario: &Scenario, model: &DelayModel) -> Vec<f64> {
    let n = model.num_segments();
    let k = model.num_bs() as f64;
    let budget = model.budget() as f64;
    let raw: Vec<f64> = match init {
        Init::Uniform => vec![(budget / n as f64).min(k); n],
        Init::PopularityProportional => {
            let w = model.segment_weight();
            let total: f64 = w.iter().sum();
            w.iter().map(|wi| (budget * wi / total).min(k)).collect()
        }
        Init::Mpc => to_f64(&baselines::mpc_placement(scenario)),
        Init::Lcd => to_f64(&baselines::lcd_placement(scenario)),
    };
    project_into_budget(raw, model)
}

fn to_f64(x: &ReplicaVector) -> Vec<f64> {
    x.as_slice().iter().map(|&v| v as f64).collect()
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|d| d * d).sum::<f64>().sqrt()
}

/// Runs SCA from `config.init` and rounds the final iterate.
pub fn sca_solve(scenario: &Scenario, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    let model = config.model(scenario)?;
    let lower = model.domain_floor();
    let upper = model.num_bs() as f64;
    let mut x = initial_point(config.init, scenario, &model);
    let mut trace = Vec::new();
    let mut converged = false;

    for t in 0..config.max_iters {
        let objective = model.smooth_objective(&x)?.total;
        let sub = Subproblem::new(&model, &x, config.prox_weight);
        let (per_class, _) = sub.solve(config.subproblem_tol)?;
        let target = sub.expand(&per_class);
        let eta = config.step.at(t);
        let next: Vec<f64> = x
            .iter()
            .zip(&target)
            .map(|(&xi, &ti)| {
                let v = if eta == 1.0 { ti } else { xi + eta * (ti - xi) };
                v.clamp(lower, upper)
            })
            .collect();
        let step_norm = norm(x.iter().zip(&next).map(|(a, b)| b - a));
        let scale = norm(x.iter().copied());
        trace.push(TraceEntry {
            objective,
            step_norm,
        });
        x = next;
        if step_norm < ABS_STEP_TOL || step_norm < config.tol * scale {
            converged = true;
            break;
        }
    }

    let final_smooth_objective = model.smooth_objective(&x)?.total;
    let rounded = round_solution(&x, &model)?;
    let objective = model.exact_objective_unchecked(rounded.as_slice());
    Ok(SolverReport {
        iterations: trace.len(),
        relaxed: x,
        rounded,
        trace,
        final_smooth_objective,
        converged,
        objective,
    })
}

#[derive(Debug, PartialEq)]
struct Jump {
    /// Objective decrease per extra copy.
    ratio: f64,
    index: usize,
    to: usize,
}

impl Eq for Jump {}

impl Ord for Jump {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ratio
            .total_cmp(&other.ratio)
            .then_with(|| other.index.cmp(&self.index))
            .then_with(|| other.to.cmp(&self.to))
    }
}

impl PartialOrd for Jump {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Rounds a relaxed point to a feasible replica vector.
///
/// 1. Floor every coordinate (values within `1e-9` below an integer count as that integer when
///    the budget allows).
/// 2. Drop segments whose copies cost more than fetching them over the backhaul.
/// 3. Spend the leftover budget greedily: each segment offers its best increase `v -> v'`
///    ranked by objective decrease per extra copy, and the best offer is applied until none
///    lowers the objective or fits the budget.
///
/// Every applied move lowers the exact objective, so the result is never worse than the floor.
pub fn round_solution(x_relaxed: &[f64], model: &DelayModel) -> Result<ReplicaVector> {
    let n = model.num_segments();
    if x_relaxed.len() != n {
        return Err(Error::Infeasible(format!(
            "relaxed point has length {}, expected {n}",
            x_relaxed.len()
        )));
    }
    if let Some(&v) = x_relaxed.iter().find(|v| !v.is_finite() || **v < 0.0) {
        return Err(Error::Domain {
            name: "x_relaxed",
            value: v,
            reason: "relaxed replica counts must be finite and non-negative",
        });
    }
    let k = model.num_bs();
    let budget = model.budget();
    let floor_with = |nudge: f64| -> Vec<usize> {
        x_relaxed
            .iter()
            .map(|&v| ((v + nudge).floor() as usize).min(k))
            .collect()
    };
    let mut counts = floor_with(1e-9);
    if counts.iter().sum::<usize>() > budget {
        counts = floor_with(0.0);
    }
    if counts.iter().sum::<usize>() > budget {
        return Err(Error::Infeasible(format!(
            "relaxed point uses {} copies after flooring, budget is {budget}",
            counts.iter().sum::<usize>()
        )));
    }

    let uncached = model.uncached_delay();
    for c in counts.iter_mut() {
        if *c > 0 && model.cost_unchecked(*c) > uncached {
            *c = 0;
        }
    }
    let mut used: usize = counts.iter().sum();

    let weight = model.segment_weight();
    let best_jump = |i: usize, from: usize, room: usize| -> Option<Jump> {
        let here = model.cost_unchecked(from);
        (from + 1..=k.min(from + room))
            .map(|to| Jump {
                ratio: weight[i] * (here - model.cost_unchecked(to)) / (to - from) as f64,
                index: i,
                to,
            })
            .max()
            .filter(|j| j.ratio > 0.0)
    };
    let mut heap: BinaryHeap<Jump> = counts
        .iter()
        .enumerate()
        .filter_map(|(i, &c)| best_jump(i, c, budget - used))
        .collect();
    while let Some(jump) = heap.pop() {
        let i = jump.index;
        let room = budget - used;
        if room == 0 {
            break;
        }
        if jump.to - counts[i] > room {
            // offer no longer fits; re-offer within what is left
            if let Some(j) = best_jump(i, counts[i], room) {
                heap.push(j);
            }
            continue;
        }
        used += jump.to - counts[i];
        counts[i] = jump.to;
        if let Some(j) = best_jump(i, counts[i], budget - used) {
            heap.push(j);
        }
    }
    exchange(&mut counts, model);
    Ok(ReplicaVector::from_vec_unchecked(counts))
}

/// Lower a segment of group `down` by `r` and raise one of group `up` by `q`.
struct PairMove {
    gain: f64,
    down: Option<usize>,
    r: usize,
    up: Option<usize>,
    q: usize,
}

/// Best offers per amount: `slots[r]` holds up to two `(value, group)` pairs from distinct
/// groups, best first.
type Offers = Vec<[Option<(f64, usize)>; 2]>;

fn offer(slot: &mut [Option<(f64, usize)>; 2], value: f64, group: usize) {
    let better = |s: &Option<(f64, usize)>| s.is_none_or(|(v, _)| value > v);
    if better(&slot[0]) {
        slot[1] = slot[0];
        slot[0] = Some((value, group));
    } else if better(&slot[1]) {
        slot[1] = Some((value, group));
    }
}

/// Local search over pair moves: lower one segment by `r` copies and raise another by `q`,
/// with `q <= r + room`. Either side may be empty. Segments with the same weight and count
/// are interchangeable, so offers are computed per `(weight, count)` group. Moves are applied
/// while one lowers the exact objective by more than a relative `1e-12`.
fn exchange(counts: &mut [usize], model: &DelayModel) {
    let k = model.num_bs();
    let budget = model.budget();
    let weight = model.segment_weight();
    let cost: Vec<f64> = (0..=k).map(|v| model.cost_unchecked(v)).collect();
    let mut groups: BTreeMap<(u64, usize), BTreeSet<usize>> = BTreeMap::new();
    for (i, &c) in counts.iter().enumerate() {
        groups.entry((weight[i].to_bits(), c)).or_default().insert(i);
    }
    let mut used: usize = counts.iter().sum();
    let mut objective = model.exact_objective_unchecked(counts);

    loop {
        let room = budget - used;
        let keys: Vec<(u64, usize)> = groups.keys().copied().collect();
        // release[r]: cost change (negated) from lowering a segment by r copies
        let mut release: Offers = vec![[None; 2]; k + 1];
        // acquire[q]: cost decrease from raising a segment by q copies
        let mut acquire: Offers = vec![[None; 2]; k + 1];
        for (g, &(bits, c)) in keys.iter().enumerate() {
            let w = f64::from_bits(bits);
            for r in 1..=c {
                offer(&mut release[r], w * (cost[c] - cost[c - r]), g);
            }
            for q in 1..=k - c {
                offer(&mut acquire[q], w * (cost[c] - cost[c + q]), g);
            }
        }
        let size = |g: usize| groups[&keys[g]].len();
        let mut best: Option<PairMove> = None;
        let mut consider = |gain: f64, down: Option<usize>, r: usize, up: Option<usize>, q: usize| {
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(PairMove { gain, down, r, up, q });
            }
        };
        for r in 0..=k {
            for q in 0..=(r + room).min(k) {
                match (r, q) {
                    (0, 0) => {}
                    (0, q) => {
                        if let Some((gain, g)) = acquire[q][0] {
                            consider(gain, None, 0, Some(g), q);
                        }
                    }
                    (r, 0) => {
                        if let Some((gain, g)) = release[r][0] {
                            consider(gain, Some(g), r, None, 0);
                        }
                    }
                    (r, q) => {
                        for down in release[r].iter().flatten() {
                            for up in acquire[q].iter().flatten() {
                                if down.1 != up.1 || size(down.1) >= 2 {
                                    consider(down.0 + up.0, Some(down.1), r, Some(up.1), q);
                                }
                            }
                        }
                    }
                }
            }
        }
        let Some(PairMove { gain, down, r, up, q }) = best else {
            break;
        };
        if gain <= 1e-12 * objective.abs().max(1.0) {
            break;
        }
        let mut moved = Vec::new();
        if let Some(g) = down {
            let set = groups.get_mut(&keys[g]).expect("group exists");
            let i = set.pop_first().expect("group is non-empty");
            moved.push((i, counts[i] - r));
        }
        if let Some(g) = up {
            let set = groups.get_mut(&keys[g]).expect("group exists");
            let i = set.pop_first().expect("group is non-empty");
            moved.push((i, counts[i] + q));
        }
        for (i, to) in moved {
            let from = counts[i];
            let key = (weight[i].to_bits(), from);
            if groups.get(&key).is_some_and(BTreeSet::is_empty) {
                groups.remove(&key);
            }
            counts[i] = to;
            groups.entry((weight[i].to_bits(), to)).or_default().insert(i);
        }
        used = used + q - r;
        objective -= gain;
    }
}

/// Replica vector from floor alone, without the greedy completion.
pub fn floored(x_relaxed: &[f64], num_bs: usize) -> Vec<usize> {
    x_relaxed
        .iter()
        .map(|&v| (v.max(0.0).floor() as usize).min(num_bs))
        .collect()
}
