//! Download-delay model of a backhaul-limited caching network.
//!
//! A segment held by `x` base stations is served over the best of `x` independent
//! Rayleigh links with incremental-redundancy HARQ, which gives the per-segment delay
//!
//! ```text
//! D(x) = 1 / (1 - beta^x),   beta = (1 - exp(-(2^(R/m) - 1) / snr))^m
//! ```
//!
//! in slots. A segment that no base station holds is pushed over the backhaul to all `K`
//! stations and costs `D(K) + delta`. The exact objective weights every segment of file `f`
//! by its request probability `P_f`.
//!
//! The indicator `1(x = 0)` is replaced by `a^x` for optimization, which splits the smoothed
//! objective into a convex part `f1` and a concave part `f2`:
//!
//! ```text
//! f1(x) =  sum_i w_i [D(x_i) + (D(K) + delta) a^x_i]
//! f2(x) = -sum_i w_i  D(x_i) a^x_i
//! ```
//!
//! Segment `l` of file `f` (both zero-based) lives at index `f * L + l` everywhere in this crate.

use crate::error::{Error, Result};

pub const DEFAULT_SMOOTHING_A: f64 = 0.1;
pub const DEFAULT_DOMAIN_FLOOR: f64 = 1e-2;

/// Tolerance on `sum(P) = 1`.
const POPULARITY_SUM_TOL: f64 = 1e-12;

/// One problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Number of base stations `K`.
    pub num_bs: usize,
    pub num_files: usize,
    pub segments_per_file: usize,
    /// Segments each base station can store.
    pub cache_capacity: usize,
    /// Extra delay, in slots, for a segment fetched over the backhaul.
    pub backhaul_delay: f64,
    /// Coding rate `R` in bits/s/Hz.
    pub rate: f64,
    /// HARQ decoding window `m` in slots.
    pub buffer: u32,
    /// Average received SNR, linear scale.
    pub avg_snr: f64,
    /// Request probability per file, most popular first.
    pub popularity: Vec<f64>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScenario(msg));
        if self.num_bs == 0 {
            return bad("num_bs must be at least 1".into());
        }
        if self.num_files == 0 {
            return bad("num_files must be at least 1".into());
        }
        if self.segments_per_file == 0 {
            return bad("segments_per_file must be at least 1".into());
        }
        if self.buffer == 0 {
            return bad("buffer must be at least 1".into());
        }
        if self.cache_capacity > self.num_segments() {
            return bad(format!(
                "cache_capacity {} exceeds the library size of {} segments",
                self.cache_capacity,
                self.num_segments()
            ));
        }
        if !(self.backhaul_delay.is_finite() && self.backhaul_delay >= 0.0) {
            return bad(format!("backhaul_delay {} must be finite and >= 0", self.backhaul_delay));
        }
        if !(self.rate.is_finite() && self.rate > 0.0) {
            return bad(format!("rate {} must be finite and > 0", self.rate));
        }
        if !(self.avg_snr.is_finite() && self.avg_snr > 0.0) {
            return bad(format!("avg_snr {} must be finite and > 0", self.avg_snr));
        }
        if self.popularity.len() != self.num_files {
            return bad(format!(
                "popularity has {} entries for {} files",
                self.popularity.len(),
                self.num_files
            ));
        }
        if let Some((f, p)) = self
            .popularity
            .iter()
            .enumerate()
            .find(|(_, p)| !(p.is_finite() && **p > 0.0))
        {
            return bad(format!("popularity of file {f} is {p}, must be > 0"));
        }
        let total: f64 = self.popularity.iter().sum();
        if (total - 1.0).abs() > POPULARITY_SUM_TOL {
            return bad(format!("popularity sums to {total}, not 1"));
        }
        Ok(())
    }

    /// `F * L`.
    pub fn num_segments(&self) -> usize {
        self.num_files * self.segments_per_file
    }

    /// Aggregate cache budget `K * C`.
    pub fn budget(&self) -> usize {
        self.num_bs * self.cache_capacity
    }

    pub fn segment_index(&self, file: usize, segment: usize) -> usize {
        file * self.segments_per_file + segment
    }

    /// Same scenario with a different backhaul delay.
    pub fn with_backhaul_delay(&self, delta: f64) -> Scenario {
        Scenario {
            backhaul_delay: delta,
            ..self.clone()
        }
    }
}

/// Converts an SNR in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Number of base stations caching each segment.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ReplicaVector(Vec<usize>);

impl ReplicaVector {
    /// Checks length, the per-segment box `0..=K` and the aggregate budget.
    pub fn new(counts: Vec<usize>, scenario: &Scenario) -> Result<Self> {
        check_replicas(&counts, scenario.num_segments(), scenario.num_bs, scenario.budget())?;
        Ok(Self(counts))
    }

    pub(crate) fn from_vec_unchecked(counts: Vec<usize>) -> Self {
        Self(counts)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0; len])
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Total number of cached copies.
    pub fn budget_used(&self) -> usize {
        self.0.iter().sum()
    }
}

impl std::ops::Index<usize> for ReplicaVector {
    type Output = usize;

    fn index(&self, i: usize) -> &usize {
        &self.0[i]
    }
}

fn check_replicas(counts: &[usize], len: usize, num_bs: usize, budget: usize) -> Result<()> {
    if counts.len() != len {
        return Err(Error::Infeasible(format!(
            "length {} does not match {} segments",
            counts.len(),
            len
        )));
    }
    if let Some((i, x)) = counts.iter().enumerate().find(|(_, x)| **x > num_bs) {
        return Err(Error::Infeasible(format!(
            "segment {i} has {x} replicas but there are only {num_bs} base stations"
        )));
    }
    let used: usize = counts.iter().sum();
    if used > budget {
        return Err(Error::Infeasible(format!(
            "{used} cached copies exceed the aggregate budget {budget}"
        )));
    }
    Ok(())
}

/// Failure-probability base `beta` of the delay formula.
pub fn compute_beta(rate: f64, buffer: u32, avg_snr: f64) -> Result<f64> {
    Ok(ln_beta(rate, buffer, avg_snr)?.exp())
}

/// `ln(beta)`, evaluated without forming `beta` so that tiny betas keep full precision.
fn ln_beta(rate: f64, buffer: u32, avg_snr: f64) -> Result<f64> {
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::Domain {
            name: "rate",
            value: rate,
            reason: "must be finite and positive",
        });
    }
    if !(avg_snr.is_finite() && avg_snr > 0.0) {
        return Err(Error::Domain {
            name: "avg_snr",
            value: avg_snr,
            reason: "must be finite and positive",
        });
    }
    if buffer == 0 {
        return Err(Error::Domain {
            name: "buffer",
            value: 0.0,
            reason: "must be at least one slot",
        });
    }
    let m = f64::from(buffer);
    // threshold SNR per slot, normalised by the mean
    let t = (rate / m * std::f64::consts::LN_2).exp_m1() / avg_snr;
    // ln(1 - e^-t), accurate for both small and large t
    let ln_fail = if t < std::f64::consts::LN_2 {
        (-(-t).exp_m1()).ln()
    } else {
        (-(-t).exp()).ln_1p()
    };
    let ln_b = m * ln_fail;
    if !(ln_b.is_finite() && ln_b < 0.0) {
        return Err(Error::Domain {
            name: "rate",
            value: rate,
            reason: "decoding failure probability is numerically 0 or 1 for this rate and SNR",
        });
    }
    Ok(ln_b)
}

/// Split value of the smoothed objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothedObjectiveValue {
    pub total: f64,
    pub convex_part: f64,
    pub concave_part: f64,
}

/// Constants derived from a [`Scenario`] that the objectives need.
#[derive(Debug, Clone)]
pub struct DelayModel {
    beta: f64,
    ln_beta: f64,
    base_delay_full: f64,
    segment_weight: Vec<f64>,
    smoothing_a: f64,
    ln_a: f64,
    domain_floor: f64,
    num_bs: usize,
    budget: usize,
    backhaul_delay: f64,
}

impl DelayModel {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        Self::with_smoothing(scenario, DEFAULT_SMOOTHING_A, DEFAULT_DOMAIN_FLOOR)
    }

    pub fn with_smoothing(scenario: &Scenario, smoothing_a: f64, domain_floor: f64) -> Result<Self> {
        scenario.validate()?;
        if !(smoothing_a > 0.0 && smoothing_a < 1.0) {
            return Err(Error::Domain {
                name: "smoothing_a",
                value: smoothing_a,
                reason: "must lie in (0, 1)",
            });
        }
        if !(domain_floor > 0.0 && domain_floor < scenario.num_bs as f64) {
            return Err(Error::Domain {
                name: "domain_floor",
                value: domain_floor,
                reason: "must lie in (0, num_bs)",
            });
        }
        let ln_beta = ln_beta(scenario.rate, scenario.buffer, scenario.avg_snr)?;
        let segment_weight = scenario
            .popularity
            .iter()
            .flat_map(|&p| std::iter::repeat_n(p, scenario.segments_per_file))
            .collect();
        let mut model = DelayModel {
            beta: ln_beta.exp(),
            ln_beta,
            base_delay_full: 0.0,
            segment_weight,
            smoothing_a,
            ln_a: smoothing_a.ln(),
            domain_floor,
            num_bs: scenario.num_bs,
            budget: scenario.budget(),
            backhaul_delay: scenario.backhaul_delay,
        };
        model.base_delay_full = model.delay(scenario.num_bs as f64);
        Ok(model)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `D(K)`, the delay with every base station as a candidate.
    pub fn base_delay_full(&self) -> f64 {
        self.base_delay_full
    }

    /// Cost of a segment that no base station holds, `D(K) + delta`.
    pub fn uncached_delay(&self) -> f64 {
        self.base_delay_full + self.backhaul_delay
    }

    pub fn segment_weight(&self) -> &[f64] {
        &self.segment_weight
    }

    pub fn smoothing_a(&self) -> f64 {
        self.smoothing_a
    }

    pub fn domain_floor(&self) -> f64 {
        self.domain_floor
    }

    pub fn num_bs(&self) -> usize {
        self.num_bs
    }

    pub fn num_segments(&self) -> usize {
        self.segment_weight.len()
    }

    pub fn budget(&self) -> usize {
        self.budget
    }

    /// `D(x)` on the positive reals.
    pub(crate) fn delay(&self, x: f64) -> f64 {
        -1.0 / (x * self.ln_beta).exp_m1()
    }

    /// `D'(x)`.
    pub(crate) fn delay_slope(&self, x: f64) -> f64 {
        let bx = (x * self.ln_beta).exp();
        let one_minus = -(x * self.ln_beta).exp_m1();
        bx * self.ln_beta / (one_minus * one_minus)
    }

    /// `D''(x)`.
    pub(crate) fn delay_curvature(&self, x: f64) -> f64 {
        let bx = (x * self.ln_beta).exp();
        let one_minus = -(x * self.ln_beta).exp_m1();
        self.ln_beta * self.ln_beta * bx * (1.0 + bx) / (one_minus * one_minus * one_minus)
    }

    /// `a^x`.
    pub(crate) fn smoothing(&self, x: f64) -> f64 {
        (x * self.ln_a).exp()
    }

    pub(crate) fn ln_a(&self) -> f64 {
        self.ln_a
    }

    /// Delay of a segment with `replicas >= 1` candidate base stations.
    pub fn segment_delay(&self, replicas: usize) -> Result<f64> {
        if replicas == 0 {
            return Err(Error::Domain {
                name: "replicas",
                value: 0.0,
                reason: "an uncached segment has no candidate set; use segment_delay_with_backhaul",
            });
        }
        Ok(self.delay(replicas as f64))
    }

    /// Delay of a segment with `replicas` copies, counting the backhaul detour when uncached.
    pub fn segment_delay_with_backhaul(&self, replicas: usize) -> Result<f64> {
        if replicas > self.num_bs {
            return Err(Error::Domain {
                name: "replicas",
                value: replicas as f64,
                reason: "more replicas than base stations",
            });
        }
        Ok(self.cost_unchecked(replicas))
    }

    pub(crate) fn cost_unchecked(&self, replicas: usize) -> f64 {
        if replicas == 0 {
            self.uncached_delay()
        } else {
            self.delay(replicas as f64)
        }
    }

    /// Average download delay of a file request (the reporting objective).
    pub fn exact_objective(&self, x: &ReplicaVector) -> Result<f64> {
        check_replicas(x.as_slice(), self.num_segments(), self.num_bs, self.budget)?;
        Ok(self.exact_objective_unchecked(x.as_slice()))
    }

    pub(crate) fn exact_objective_unchecked(&self, x: &[usize]) -> f64 {
        self.segment_weight
            .iter()
            .zip(x)
            .fold(0.0, |acc, (w, &xi)| acc + w * self.cost_unchecked(xi))
    }

    pub(crate) fn check_relaxed(&self, name: &'static str, x: &[f64]) -> Result<()> {
        if x.len() != self.num_segments() {
            return Err(Error::Infeasible(format!(
                "{name} has length {} but there are {} segments",
                x.len(),
                self.num_segments()
            )));
        }
        let upper = self.num_bs as f64;
        match x
            .iter()
            .find(|v| !(v.is_finite() && **v >= self.domain_floor && **v <= upper))
        {
            Some(&v) => Err(Error::Domain {
                name,
                value: v,
                reason: "relaxed replica counts must lie in [domain_floor, num_bs]",
            }),
            None => Ok(()),
        }
    }

    /// `f = f1 + f2` at a relaxed point.
    pub fn smooth_objective(&self, x: &[f64]) -> Result<SmoothedObjectiveValue> {
        self.check_relaxed("x", x)?;
        let uncached = self.uncached_delay();
        let (convex_part, concave_part) = self.segment_weight.iter().zip(x).fold(
            (0.0, 0.0),
            |(c1, c2), (&w, &xi)| {
                let d = self.delay(xi);
                let s = self.smoothing(xi);
                (c1 + w * (d + uncached * s), c2 - w * d * s)
            },
        );
        Ok(SmoothedObjectiveValue {
            total: convex_part + concave_part,
            convex_part,
            concave_part,
        })
    }

    /// Convex part `f1` alone.
    pub fn convex_part(&self, x: &[f64]) -> Result<f64> {
        Ok(self.smooth_objective(x)?.convex_part)
    }

    /// Gradient of the concave part `f2`.
    pub fn grad_concave_part(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_relaxed("x", x)?;
        Ok(self.grad_concave_unchecked(x))
    }

    pub(crate) fn grad_concave_unchecked(&self, x: &[f64]) -> Vec<f64> {
        self.segment_weight
            .iter()
            .zip(x)
            .map(|(&w, &xi)| {
                if w == 0.0 {
                    return 0.0;
                }
                -w * self.smoothing(xi) * (self.delay_slope(xi) + self.delay(xi) * self.ln_a)
            })
            .collect()
    }

    /// Convex majorizer of `f - f2(anchor)` around `anchor`:
    /// `f1(x) + grad f2(anchor) . (x - anchor) + prox_weight * |x - anchor|^2`.
    pub fn surrogate(&self, x: &[f64], anchor: &[f64], prox_weight: f64) -> Result<f64> {
        self.check_relaxed("x", x)?;
        self.check_relaxed("anchor", anchor)?;
        if !(prox_weight.is_finite() && prox_weight >= 0.0) {
            return Err(Error::Domain {
                name: "prox_weight",
                value: prox_weight,
                reason: "must be finite and non-negative",
            });
        }
        let f1 = self.smooth_objective(x)?.convex_part;
        let grad = self.grad_concave_unchecked(anchor);
        let (linear, prox) = x
            .iter()
            .zip(anchor)
            .zip(&grad)
            .fold((0.0, 0.0), |(lin, sq), ((xi, ai), gi)| {
                let d = xi - ai;
                (lin + gi * d, sq + d * d)
            });
        Ok(f1 + linear + prox_weight * prox)
    }
}
