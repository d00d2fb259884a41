//! One pass/fail line per acceptance criterion on stderr, then a single
//! assertion.

use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use nearelastic::config::{self, Experiment, ExperimentConfig};
use nearelastic::{experiments, io, ResultRecord, RunOutput, Runner};
use nearelastic_core::model1d::{FlatModel, FlatModelSpec, PhasePoint};
use nearelastic_core::sim1d::{simulate_flat, StopRule};

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

fn load(name: &str) -> ExperimentConfig {
    config::load(&config_path(name)).unwrap_or_else(|e| panic!("{name}: {e:#}"))
}

struct Timed {
    out: RunOutput,
    elapsed: Duration,
}

fn run(name: &str) -> Timed {
    let cfg = load(name);
    let runner = Runner::new(None).unwrap();
    let start = Instant::now();
    let out = experiments::run(&cfg, &runner).unwrap_or_else(|e| panic!("{name}: {e:#}"));
    Timed {
        out,
        elapsed: start.elapsed(),
    }
}

fn records<'a>(t: &'a Timed, quantity: &'a str) -> Vec<&'a ResultRecord> {
    t.out.find(quantity).filter(|r| r.assert).collect()
}

fn all_pass(rs: &[&ResultRecord]) -> bool {
    !rs.is_empty() && rs.iter().all(|r| r.pass)
}

fn describe(rs: &[&ResultRecord]) -> String {
    rs.iter()
        .map(|r| format!("{}={:.4e} [{:.4e}, {:.4e}]", r.quantity, r.estimate, r.ci[0], r.ci[1]))
        .collect::<Vec<_>>()
        .join(", ")
}

struct Report {
    lines: Vec<(usize, bool, String)>,
}

impl Report {
    fn add(&mut self, n: usize, pass: bool, detail: String) {
        // bypasses the test output capture
        let line = format!("criterion {n}: {} {detail}\n", if pass { "PASS" } else { "FAIL" });
        let _ = std::io::stderr().write_all(line.as_bytes());
        self.lines.push((n, pass, detail));
    }

    fn records(&mut self, n: usize, t: &Timed, quantities: &[&str], budget: Option<Duration>) {
        let rs: Vec<_> = quantities.iter().flat_map(|q| records(t, q)).collect();
        let mut pass = all_pass(&rs);
        let mut detail = format!("{} ({:.2?}", describe(&rs), t.elapsed);
        if let Some(b) = budget {
            pass &= t.elapsed < b;
            detail.push_str(&format!(" of {b:.0?}"));
        }
        detail.push(')');
        self.add(n, pass, detail);
    }
}

fn elastic_drift() -> (f64, u64, Duration) {
    let start = Instant::now();
    let model = FlatModel::new(FlatModelSpec::two_well(1.0, 1.0, 1.0, 1.0, 1.0, 1.0)).unwrap();
    let x0 = PhasePoint::new(0.3, 1.7);
    let stop = StopRule {
        collisions: Some(10_000),
        stop_at_well: false,
        ..StopRule::default()
    };
    let run = simulate_flat(&model, x0, 0.0, &stop).unwrap();
    let h0 = 0.5 * x0.p * x0.p;
    let drift = run.log.iter().map(|r| (r.energy_after - h0).abs()).fold(0.0, f64::max);
    (drift, run.log.len() as u64, start.elapsed())
}

const ALL: &[&str] = &[
    "averaging",
    "branching-dyn",
    "branching-init",
    "walk-parity",
    "fig6",
    "five-well",
    "integral-geometry",
    "liouville",
    "billiard-decay",
    "billiard-branching",
    "strip-ratio",
];

/// Same config at a smaller size, run serially, on four threads and
/// serially again; all three result files must match byte for byte.
fn reproducible(name: &str) -> Result<(), String> {
    let mut cfg = load(name);
    cfg.replicas = cfg.replicas.min(200);
    match &mut cfg.experiment {
        Experiment::LiouvilleCheck(l) => {
            l.chain_steps = 20_000;
            l.chains = 4;
        }
        Experiment::WalkParity(w) => w.walk.n = w.walk.n.min(1000),
        _ => {}
    }
    let json = |runner: &Runner| -> Result<String, String> {
        let out = experiments::run(&cfg, runner).map_err(|e| format!("{e:#}"))?;
        io::results_json(&out).map_err(|e| format!("{e:#}"))
    };
    let serial = json(&Runner::Serial)?;
    let pooled = json(&Runner::new(Some(4)).map_err(|e| e.to_string())?)?;
    let again = json(&Runner::Serial)?;
    if serial != pooled {
        return Err(format!("{name}: serial and parallel results differ"));
    }
    if serial != again {
        return Err(format!("{name}: reruns differ"));
    }
    Ok(())
}

#[test]
fn acceptance_criteria() {
    let mut report = Report { lines: Vec::new() };

    let (drift, n, elapsed) = elastic_drift();
    report.add(
        1,
        drift < 1e-12 && n == 10_000 && elapsed < Duration::from_secs(1),
        format!("drift={drift:e} over {n} collisions ({elapsed:.2?} of 1s)"),
    );

    let avg = run("averaging");
    report.records(2, &avg, &["sup_error", "sup_error_refinement"], Some(Duration::from_secs(10)));
    report.records(3, &avg, &["vertex_time"], None);

    let dyn_ = run("branching-dyn");
    report.records(4, &dyn_, &["well_frequency"], Some(Duration::from_secs(60)));
    report.records(5, &run("branching-init"), &["well_frequency"], None);
    report.records(6, &run("walk-parity"), &["p_even"], Some(Duration::from_secs(30)));
    report.records(7, &dyn_, &["walk_cross_check"], None);
    report.records(8, &run("fig6"), &["init_swing", "dyn_stability_z"], None);
    report.records(9, &run("five-well"), &["joint_law_chi_square_p"], None);
    report.records(10, &run("integral-geometry"), &["relative_error"], Some(Duration::from_secs(5)));
    report.records(11, &run("liouville"), &["jacobian_defect", "ks_s", "ks_theta"], None);
    report.records(12, &run("billiard-decay"), &["sup_relative_deviation"], Some(Duration::from_secs(60)));
    report.records(13, &run("billiard-branching"), &["well1_frequency"], Some(Duration::from_secs(300)));

    let errors: Vec<String> = ALL.iter().filter_map(|c| reproducible(c).err()).collect();
    report.add(
        14,
        errors.is_empty(),
        if errors.is_empty() {
            format!("{} configs byte-identical across serial, parallel and rerun", ALL.len())
        } else {
            errors.join("; ")
        },
    );

    let failed: Vec<usize> = report.lines.iter().filter(|l| !l.1).map(|l| l.0).collect();
    assert_eq!(report.lines.len(), 14);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
