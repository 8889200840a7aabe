//! Runs every `(delta, strategy)` cell of an experiment.

use bhcache::baselines::{
    exhaustive_search, lcd_placement, mpc_literal_placement, mpc_placement,
};
use bhcache::simulator::simulate_strategy;
use bhcache::{sca_solve, DelayModel, Error, ReplicaVector, Scenario, SimConfig, SimEstimate, SolverConfig};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Strategy};
use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub replicas: ReplicaVector,
    /// Exact objective of `replicas`, in slots.
    pub objective: f64,
    pub simulated: Option<SimEstimate>,
    /// SCA iterations; `None` for the other strategies.
    pub iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Solved(Solved),
    /// The exhaustive search would have needed more than `cap` points.
    Refused { required: u128, cap: u128 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub delta: f64,
    pub strategy: Strategy,
    pub outcome: Outcome,
}

impl Row {
    pub fn solved(&self) -> Option<&Solved> {
        match &self.outcome {
            Outcome::Solved(s) => Some(s),
            Outcome::Refused { .. } => None,
        }
    }
}

/// Rows ordered by `(delta, strategy name)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<Row>,
}

impl SweepTable {
    pub fn find(&self, delta: f64, strategy: Strategy) -> Option<&Row> {
        self.rows
            .iter()
            .find(|r| r.delta == delta && r.strategy == strategy)
    }
}

struct Cell<'a> {
    scenario: &'a Scenario,
    solver: &'a SolverConfig,
    sim: &'a SimConfig,
    cap: u128,
}

impl Cell<'_> {
    fn run(&self, delta: f64, strategy: Strategy) -> Result<Row, CliError> {
        let scenario = self.scenario.with_backhaul_delay(delta);
        let model = DelayModel::with_smoothing(
            &scenario,
            self.solver.smoothing_a,
            self.solver.domain_floor,
        )?;
        let mut iterations = None;
        let replicas = match strategy {
            Strategy::Sca => {
                let report = sca_solve(&scenario, self.solver)?;
                iterations = Some(report.iterations);
                report.rounded
            }
            Strategy::Mpc => mpc_placement(&scenario),
            Strategy::MpcLiteral => mpc_literal_placement(&scenario),
            Strategy::Lcd => lcd_placement(&scenario),
            Strategy::Exhaustive => match exhaustive_search(&scenario, &model, self.cap) {
                Ok((x, _)) => x,
                Err(Error::EnumerationCap { required, cap }) => {
                    return Ok(Row {
                        delta,
                        strategy,
                        outcome: Outcome::Refused { required, cap },
                    })
                }
                Err(e) => return Err(e.into()),
            },
        };
        let objective = model.exact_objective(&replicas)?;
        let simulated = if self.sim.trials > 0 {
            Some(simulate_strategy(&replicas, &scenario, self.sim)?)
        } else {
            None
        };
        Ok(Row {
            delta,
            strategy,
            outcome: Outcome::Solved(Solved {
                replicas,
                objective,
                simulated,
                iterations,
            }),
        })
    }
}

/// Solves every cell of `config`. Cells run in parallel; the table does not depend on the
/// number of workers.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepTable, CliError> {
    let scenario = config.scenario()?;
    let solver = config.solver_config();
    let sim = config.sim_config();
    let cell = Cell {
        scenario: &scenario,
        solver: &solver,
        sim: &sim,
        cap: config.sweep.enumeration_cap as u128,
    };

    let mut deltas = config.delta_values();
    deltas.sort_by(f64::total_cmp);
    deltas.dedup();
    let mut strategies = config.sweep.strategies.clone();
    strategies.sort_by_key(|s| s.name());
    strategies.dedup();
    let cells: Vec<(f64, Strategy)> = deltas
        .iter()
        .flat_map(|&d| strategies.iter().map(move |&s| (d, s)))
        .collect();

    let rows: Vec<Result<Row, CliError>> = cells
        .par_iter()
        .map(|&(delta, strategy)| cell.run(delta, strategy))
        .collect();
    Ok(SweepTable {
        rows: rows.into_iter().collect::<Result<_, _>>()?,
    })
}
