use std::path::{Path, PathBuf};
use std::process::Command;

use bhcache::{DelayModel, PlacementMatrix};
use bhcache_cli::config::{InitKind, SolverSection, StepKind, Strategy};
use bhcache_cli::output::{placement_file_name, CSV_HEADER};
use bhcache_cli::{csv_string, run_sweep, write_results, ExperimentConfig, Outcome};

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn small(extra: &str) -> String {
    format!(
        "[scenario]
num_bs = 3
num_files = 2
segments_per_file = 2
cache_capacity = 1
backhaul_delay_slots = 1.5
rate_bits = 2.5
buffer_m = 1
avg_snr_db = 10.0
zipf_gamma = 0.6
{extra}"
    )
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bhcache"))
}

#[test]
fn round_trip_with_every_key() {
    let text = small(
        "
[solver]
step_rule = \"constant\"
step_size = 0.75
prox_weight = 0.02
smoothing_a = 0.05
domain_floor = 0.02
tol = 1e-5
max_iters = 300
init = \"mpc\"
subproblem_tol = 1e-9

[sim]
trials = 500
seed = 7
max_slots_per_segment = 1000

[sweep]
delta_values = [0.0, 0.5]
strategies = [\"sca\", \"mpc\", \"mpc-paper-formula\", \"lcd\", \"exhaustive\"]
enumeration_cap = 1000
",
    );
    let config = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(config.solver.init, Some(InitKind::Mpc));
    assert_eq!(config.sweep.strategies.len(), 5);
    let again = ExperimentConfig::from_toml(&config.to_toml()).unwrap();
    assert_eq!(again, config);

    let explicit = text.replace("zipf_gamma = 0.6", "popularity = [0.7, 0.3]");
    let config = ExperimentConfig::from_toml(&explicit).unwrap();
    assert_eq!(ExperimentConfig::from_toml(&config.to_toml()).unwrap(), config);
}

#[test]
fn shipped_configs_parse_and_round_trip() {
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        let config = ExperimentConfig::load(&path).unwrap();
        assert_eq!(
            ExperimentConfig::from_toml(&config.to_toml()).unwrap(),
            config,
            "{}",
            path.display()
        );
    }
}

#[test]
fn diminishing_rule_maps_to_solver() {
    let mut config = ExperimentConfig::from_toml(&small("")).unwrap();
    config.solver = SolverSection {
        step_rule: Some(StepKind::Diminishing),
        ..Default::default()
    };
    assert_eq!(config.solver_config().step, bhcache::StepRule::Diminishing);
}

#[test]
fn bad_configs_are_rejected() {
    let cases = [
        small("bogus = 1"),
        small("[sweep]\nstrategies = [\"random\"]"),
        small("[solver]\nstep_size = 2.0"),
        small("").replace("zipf_gamma = 0.6", "zipf_gamma = 0.6\npopularity = [0.5, 0.5]"),
        small("").replace("zipf_gamma = 0.6", ""),
        small("").replace("zipf_gamma = 0.6", "popularity = [0.5, 0.2]"),
        small("").replace("num_bs = 3", "num_bs = 0"),
        small("[sweep]\ndelta_values = [-1.0]"),
    ];
    for text in cases {
        assert!(ExperimentConfig::from_toml(&text).is_err(), "accepted:\n{text}");
    }
}

#[test]
fn small_sweep_rows_and_gaps() {
    let config = ExperimentConfig::load(&configs_dir().join("small_c2.toml")).unwrap();
    let table = run_sweep(&config).unwrap();
    assert_eq!(table.rows.len(), 10);
    let csv = csv_string(&table);
    assert_eq!(csv.lines().count(), 11);
    for delta in [0.0, 1.0, 2.0, 3.0, 4.0] {
        let sca = table.find(delta, Strategy::Sca).unwrap().solved().unwrap();
        let ex = table.find(delta, Strategy::Exhaustive).unwrap().solved().unwrap();
        assert!(sca.objective <= ex.objective * 1.03, "delta {delta}");
        assert!(sca.iterations.is_some() && ex.iterations.is_none());
    }
    // rows come out sorted by delta, then strategy name
    let keys: Vec<(String, String)> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap().into(), f.next().unwrap().into())
        })
        .collect();
    assert_eq!(keys[0], ("0".into(), "exhaustive".into()));
    assert_eq!(keys[1], ("0".into(), "sca".into()));
    assert_eq!(keys[9], ("4".into(), "sca".into()));
}

#[test]
fn desk_sweep_coincides_at_zero_and_dominates() {
    let config = ExperimentConfig::load(&configs_dir().join("desk.toml")).unwrap();
    let table = run_sweep(&config).unwrap();
    let objective = |d: f64, s: Strategy| table.find(d, s).unwrap().solved().unwrap().objective;
    assert!((objective(0.0, Strategy::Sca) - objective(0.0, Strategy::Mpc)).abs() <= 1e-9);
    let top = 4.0;
    let best = objective(top, Strategy::Mpc).min(objective(top, Strategy::Lcd));
    assert!(objective(top, Strategy::Sca) <= best * (1.0 + 1e-9));
}

#[test]
fn exhaustive_over_cap_is_refused_and_run_continues() {
    let text = small("[sweep]\nstrategies = [\"exhaustive\", \"lcd\"]\nenumeration_cap = 10");
    let table = run_sweep(&ExperimentConfig::from_toml(&text).unwrap()).unwrap();
    assert_eq!(table.rows.len(), 2);
    assert!(matches!(
        table.rows[0].outcome,
        Outcome::Refused { required: 256, cap: 10 }
    ));
    assert!(table.rows[1].solved().is_some());
    assert!(csv_string(&table).contains("1.5,exhaustive,refused,,,,"));
}

#[test]
fn simulated_columns_and_determinism() {
    let text = small("[sim]\ntrials = 2000\nseed = 3\n[sweep]\ndelta_values = [0.0, 2.0]");
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let a = csv_string(&run_sweep(&config).unwrap());
    let b = csv_string(&run_sweep(&config).unwrap());
    assert_eq!(a, b);
    for line in a.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 7);
        let objective: f64 = fields[2].parse().unwrap();
        let mean: f64 = fields[3].parse().unwrap();
        let se: f64 = fields[4].parse().unwrap();
        // m = 1 makes the closed form exact; allow a generous 5 standard errors here
        assert!((mean - objective).abs() <= 5.0 * se + 1e-12, "{line}");
    }
}

#[test]
fn dumped_placements_reproduce_objectives() {
    let dir = tempfile::tempdir().unwrap();
    let config = ExperimentConfig::load(&configs_dir().join("small_c3.toml")).unwrap();
    let table = run_sweep(&config).unwrap();
    let scenario = config.scenario().unwrap();
    let written = write_results(&table, &scenario, dir.path()).unwrap();
    assert_eq!(written.len(), 11);
    let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
    assert!(csv.starts_with(CSV_HEADER));

    for row in &table.rows {
        let path = dir.path().join(placement_file_name(row.strategy.name(), row.delta));
        let text = std::fs::read_to_string(&path).unwrap();
        let placement = PlacementMatrix::from_sparse(&text, 3, 3, 4).unwrap();
        let at = scenario.with_backhaul_delay(row.delta);
        let x = bhcache::replica_counts(&placement);
        let recomputed = DelayModel::new(&at).unwrap().exact_objective(&x).unwrap();
        let stated: f64 = text
            .lines()
            .find_map(|l| l.strip_prefix("# objective "))
            .unwrap()
            .parse()
            .unwrap();
        assert!((recomputed - stated).abs() <= 1e-9, "{}", path.display());
        let in_csv: f64 = csv
            .lines()
            .find(|l| l.starts_with(&format!("{},{},", bhcache_cli::output::sig9(row.delta), row.strategy)))
            .unwrap()
            .split(',')
            .nth(2)
            .unwrap()
            .parse()
            .unwrap();
        assert!((recomputed - in_csv).abs() <= 1e-8 * recomputed);
    }
}

#[test]
fn binary_writes_identical_files_for_the_same_seed() {
    let config = configs_dir().join("small_c1.toml");
    let run = |dir: &Path| {
        let status = bin()
            .args(["sweep", "--threads", "2", "--seed", "5", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(dir)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(dir.join("results.csv")).unwrap()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(run(a.path()), run(b.path()));
}

#[test]
fn binary_subcommands_print_csv() {
    let config = configs_dir().join("small_c2.toml");
    for (cmd, rows) in [("optimize", 1), ("baselines", 3), ("exhaustive", 1)] {
        let out = bin().arg(cmd).arg("--config").arg(&config).output().unwrap();
        assert!(out.status.success(), "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let text = String::from_utf8(out.stdout).unwrap();
        assert_eq!(text.lines().count(), rows + 1, "{cmd}: {text}");
    }
    let out = bin()
        .args(["simulate", "--strategy", "lcd", "--trials", "500", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[1], "lcd");
    assert!(!row[3].is_empty() && !row[4].is_empty());
}

#[test]
fn binary_errors_carry_category_and_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, small("typo_key = 3")).unwrap();
    let out = bin().arg("sweep").arg("--config").arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[config]:"));

    let missing = dir.path().join("missing.toml");
    let out = bin().arg("sweep").arg("--config").arg(&missing).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[io]:"));

    let capped = dir.path().join("capped.toml");
    std::fs::write(&capped, small("[sweep]\nenumeration_cap = 10")).unwrap();
    let out = bin().arg("exhaustive").arg("--config").arg(&capped).output().unwrap();
    assert_eq!(out.status.code(), Some(5));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error[refused]:"));

    let out = bin().arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
