//! CSV results and placement dumps.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bhcache::{realize_placement, Scenario};

use crate::error::CliError;
use crate::sweep::{Outcome, SweepTable};

pub const CSV_HEADER: &str =
    "delta,strategy,objective_slots,simulated_mean_slots,simulated_stderr,budget_used,iterations";

/// Decimal rendering rounded to 9 significant digits, shortest form.
pub fn sig9(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    format!("{rounded}")
}

pub fn csv_string(table: &SweepTable) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in &table.rows {
        let (objective, mean, stderr, used, iterations) = match &row.outcome {
            Outcome::Solved(s) => (
                sig9(s.objective),
                s.simulated.map(|e| sig9(e.mean_delay)).unwrap_or_default(),
                s.simulated.map(|e| sig9(e.std_error)).unwrap_or_default(),
                s.replicas.budget_used().to_string(),
                s.iterations.map(|i| i.to_string()).unwrap_or_default(),
            ),
            Outcome::Refused { .. } => (
                "refused".to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ),
        };
        writeln!(
            out,
            "{},{},{objective},{mean},{stderr},{used},{iterations}",
            sig9(row.delta),
            row.strategy
        )
        .expect("writing to a String cannot fail");
    }
    out
}

pub fn emit_csv(table: &SweepTable, path: &Path) -> Result<(), CliError> {
    fs::write(path, csv_string(table)).map_err(|e| CliError::io(path, e))
}

pub fn placement_file_name(strategy: &str, delta: f64) -> String {
    format!("placement_{strategy}_delta_{}.txt", sig9(delta))
}

/// Writes `results.csv` and one sparse placement file per solved cell into `dir`.
///
/// Each placement file starts with `#` lines giving the strategy, delta and the exact
/// objective at full precision, followed by one `bs file segment` line per cached copy.
pub fn write_results(
    table: &SweepTable,
    scenario: &Scenario,
    dir: &Path,
) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let csv = dir.join("results.csv");
    emit_csv(table, &csv)?;
    let mut written = vec![csv];
    for row in &table.rows {
        let Some(solved) = row.solved() else {
            continue;
        };
        let at_delta = scenario.with_backhaul_delay(row.delta);
        let placement = realize_placement(&solved.replicas, &at_delta)?;
        let mut text = format!(
            "# strategy {}\n# delta {}\n# shape files={} segments={} stations={}\n# objective {}\n",
            row.strategy,
            row.delta,
            scenario.num_files,
            scenario.segments_per_file,
            scenario.num_bs,
            solved.objective
        );
        text.push_str(&placement.to_sparse());
        let path = dir.join(placement_file_name(row.strategy.name(), row.delta));
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}
