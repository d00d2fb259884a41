//! One-dimensional experiments: averaging, branching under both noise
//! schemes, the three-well counterexample, the parity walk and strips.

use anyhow::{anyhow, bail, Result};
use nearelastic_core::limitproc::LimitModel;
use nearelastic_core::model1d::{FlatModel, GraphPoint, ModelSpec, PhasePoint, PotentialModel, ReebGraph};
use nearelastic_core::regularize::{
    fig6_counterexample, fig6_swing, log_walk, simulate_with_dyn_noise, simulate_with_init_noise, strip_ratio, BranchingEstimate, DynNoise,
    Ensemble, Fig6Row, InitNoise, Regularization,
};
use nearelastic_core::runner::ReplicaRunner;
use nearelastic_core::sim1d::{simulate_flat, simulate_potential, Run1d, StopRule};
use nearelastic_core::stats::{chi_square_statistic, Proportion};
use nearelastic_core::walk::{parity_convergence_scan, stopping_parity};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::{tag, Parts, Table};
use crate::config::{self, ExperimentConfig};
use crate::report::{Comparison, ResultRecord};

enum OneD {
    Flat(FlatModel),
    Potential(PotentialModel),
}

impl OneD {
    fn new(spec: &ModelSpec) -> Result<Self> {
        Ok(match spec {
            ModelSpec::Flat(s) => OneD::Flat(FlatModel::new(s.clone())?),
            ModelSpec::Potential(s) => OneD::Potential(PotentialModel::new(s.clone())?),
        })
    }

    fn graph(&self) -> &ReebGraph {
        match self {
            OneD::Flat(m) => &m.graph,
            OneD::Potential(m) => &m.graph,
        }
    }

    fn project(&self, x: PhasePoint) -> GraphPoint {
        match self {
            OneD::Flat(m) => m.project(x),
            OneD::Potential(m) => m.project(x),
        }
    }

    fn limit(&self) -> Result<LimitModel> {
        Ok(match self {
            OneD::Flat(m) => LimitModel::flat(m, None)?,
            OneD::Potential(m) => LimitModel::potential(m)?,
        })
    }

    fn simulate(&self, x: PhasePoint, eps: f64, stop: &StopRule) -> Result<Run1d> {
        Ok(match self {
            OneD::Flat(m) => simulate_flat(m, x, eps, stop)?,
            OneD::Potential(m) => simulate_potential(m, x, eps, stop)?,
        })
    }
}

fn point(x: [f64; 2]) -> PhasePoint {
    PhasePoint::new(x[0], x[1])
}

pub(super) fn averaging(cfg: &ExperimentConfig, a: &config::Averaging) -> Result<Parts> {
    const ID: &str = "averaging-1d";
    let model = OneD::new(a.model.spec()?)?;
    let limit = model.limit()?;
    let x0 = point(a.x0);
    let y0 = model.project(x0);
    let flow = &limit.flows[y0.edge];
    let t0 = flow.exit_time(y0.h)?;
    if !t0.is_finite() {
        bail!("experiment.x0: the start must lie on an edge that ends at a vertex");
    }
    let t_end = a.window * t0;
    let mut records = Vec::new();
    let mut tables = Vec::new();
    let mut sups = Vec::new();
    // bounds are checked at the finest eps only
    let finest = cfg.eps.iter().copied().fold(f64::INFINITY, f64::min);
    for &eps in &cfg.eps {
        let kind = |c| if eps == finest { c } else { Comparison::Report };
        let stop = StopRule {
            horizon: Some(2.0 * t0),
            ..StopRule::default()
        };
        let run = model.simulate(x0, eps, &stop)?;
        let path = run.slow_path(eps);
        let at = |t: f64| -> Result<f64> {
            path.eval(model.graph(), t)
                .map(|y| y.h)
                .ok_or_else(|| anyhow!("the run ended before t = {t}"))
        };
        let grid = (0..=a.grid).map(|i| t_end * i as f64 / a.grid.max(1) as f64);
        let breaks = path.points.iter().map(|p| p.t).filter(|&t| t <= t_end);
        let mut sup: f64 = 0.0;
        for t in grid.chain(breaks) {
            sup = sup.max((at(t)? - flow.edge_solution(y0.h, t)?).abs());
        }
        sups.push((eps, sup));
        records.push(
            ResultRecord::exact(ID, "sup_error", sup, kind(Comparison::AtMost), 0.0, a.tolerance)
                .param("eps", eps)
                .param("h0", y0.h)
                .param("window", t_end),
        );
        let hit = run.well_time.unwrap_or(f64::NAN);
        records.push(
            ResultRecord::exact(ID, "vertex_time", hit, kind(Comparison::Within), t0, a.time_tolerance * t0)
                .param("eps", eps)
                .param("relative_error", hit / t0 - 1.0),
        );
        let mut table = Table::new(format!("energy_path_eps{}", tag(eps)), &["t", "h", "h_limit"]);
        for p in path.points.iter().filter(|p| p.t < t0) {
            table.push(vec![p.t, p.h, flow.edge_solution(y0.h, p.t)?]);
        }
        tables.push(table);
    }
    if sups.len() > 1 {
        sups.sort_by(|x, y| y.0.total_cmp(&x.0));
        let worst = sups.windows(2).map(|w| w[1].1 / w[0].1).fold(0.0, f64::max);
        records.push(
            ResultRecord::exact(ID, "sup_error_refinement", worst, Comparison::AtMost, 1.0, 0.0)
                .param("eps", sups.iter().map(|s| s.0).collect::<Vec<_>>())
                .param("sup_error", sups.iter().map(|s| s.1).collect::<Vec<_>>())
                .note("largest ratio of the sup error at a smaller eps to the next larger eps"),
        );
    }
    Ok((records, tables))
}

/// Frequency of `well`, and the chi-square fit of all leaves when there are
/// more than two.
fn branching_records(id: &str, cfg: &ExperimentConfig, est: &BranchingEstimate, law: &[f64], well: usize, target: Option<f64>, label: &str) -> Result<Parts> {
    if well >= law.len() {
        bail!("experiment.well: the model has {} wells", law.len());
    }
    let mut rec = ResultRecord::proportion(id, "well_frequency", &est.proportion(well, cfg.z), target.unwrap_or(law[well]))
        .param("well", well)
        .counts(est.replicas, est.failures + est.undecided);
    if let Some(e) = &est.first_error {
        rec = rec.note(format!("first replica error: {e}"));
    }
    let mut records = vec![rec];
    if law.len() > 2 {
        let stat = chi_square_statistic(&est.counts, law);
        let df = law.iter().filter(|&&p| p > 0.0).count().saturating_sub(1).max(1);
        let p = ChiSquared::new(df as f64)?.sf(stat);
        records.push(
            ResultRecord::exact(id, "joint_law_chi_square_p", p, Comparison::AtLeast, 0.01, 0.0)
                .param("statistic", stat)
                .param("df", df)
                .counts(est.decided(), est.failures + est.undecided),
        );
    }
    let mut table = Table::new(format!("wells_{label}"), &["well", "count", "predicted"]);
    for (i, (&c, &p)) in est.counts.iter().zip(law).enumerate() {
        table.push(vec![i as f64, c as f64, p]);
    }
    Ok((records, vec![table]))
}

fn leaf_law(model: &FlatModel, limit: &LimitModel, x0: PhasePoint) -> Vec<f64> {
    let law = limit.terminal_law(model.project(x0).edge);
    model.graph.leaves().iter().map(|&l| law[l]).collect()
}

pub(super) fn branching_init<R: ReplicaRunner>(cfg: &ExperimentConfig, b: &config::BranchingInit, runner: &R) -> Result<Parts> {
    const ID: &str = "branching-init";
    let model = FlatModel::new(b.model.flat()?.clone())?;
    let x0 = point(b.x0);
    let law = leaf_law(&model, &LimitModel::flat(&model, None)?, x0);
    let ens = Ensemble {
        replicas: cfg.replicas,
        seed: cfg.seed,
    };
    let (mut records, mut tables) = (Vec::new(), Vec::new());
    for &eps in &cfg.eps {
        for &delta in &cfg.delta {
            let noise = InitNoise::new(delta, b.density);
            let est = simulate_with_init_noise(&model, x0, &noise, eps, ens, runner)?;
            let (r, t) = branching_records(ID, cfg, &est, &law, b.well, b.target, &format!("eps{}_delta{}", tag(eps), tag(delta)))?;
            records.extend(r.into_iter().map(|r| r.param("eps", eps).param("delta", delta)));
            tables.extend(t);
        }
    }
    Ok((records, tables))
}

pub(super) fn branching_dyn<R: ReplicaRunner>(cfg: &ExperimentConfig, b: &config::BranchingDyn, runner: &R) -> Result<Parts> {
    const ID: &str = "branching-dyn";
    let model = FlatModel::new(b.model.flat()?.clone())?;
    let x0 = point(b.x0);
    let ens = Ensemble {
        replicas: cfg.replicas,
        seed: cfg.seed,
    };
    let (mut records, mut tables) = (Vec::new(), Vec::new());
    for &delta in &cfg.delta {
        let noise = DynNoise {
            delta,
            laws: b.noise.laws(model.wall_count()),
        };
        noise.validate(model.wall_count())?;
        let law = leaf_law(&model, &LimitModel::flat(&model, Some(&noise))?, x0);
        for &eps in &cfg.eps {
            let est = simulate_with_dyn_noise(&model, x0, &noise, eps, ens, runner)?;
            let (r, t) = branching_records(ID, cfg, &est, &law, b.well, b.target, &format!("eps{}_delta{}", tag(eps), tag(delta)))?;
            records.extend(r.into_iter().map(|r| r.param("eps", eps).param("delta", delta)));
            tables.extend(t);
            if b.walk_check {
                records.extend(walk_check(cfg, &model, x0, &noise, eps, &est, b.well, law[b.well.min(law.len() - 1)], runner)?);
            }
        }
    }
    Ok((records, tables))
}

/// The same frequency from the log-speed random walk, and the difference of
/// the two estimates.
#[allow(clippy::too_many_arguments)]
fn walk_check<R: ReplicaRunner>(
    cfg: &ExperimentConfig,
    model: &FlatModel,
    x0: PhasePoint,
    noise: &DynNoise,
    eps: f64,
    est: &BranchingEstimate,
    well: usize,
    target: f64,
    runner: &R,
) -> Result<Vec<ResultRecord>> {
    const ID: &str = "branching-dyn";
    if well > 1 {
        bail!("experiment.well: the walk check needs well 0 or 1");
    }
    let (walk, odd_well) = log_walk(model, x0, noise, eps)?;
    let parity = stopping_parity(&walk, cfg.replicas, cfg.seed, cfg.z, runner)?;
    let pw: Proportion = if odd_well == well { parity.odd } else { parity.even };
    let pd = est.proportion(well, cfg.z);
    let d = pd.estimate - pw.estimate;
    let half = cfg.z * (pd.sigma().powi(2) + pw.sigma().powi(2)).sqrt();
    Ok(vec![
        ResultRecord::proportion(ID, "walk_frequency", &pw, target)
            .param("eps", eps)
            .param("delta", noise.delta)
            .param("walk_n", walk.n)
            .param("walk_lambda", walk.lambda),
        ResultRecord::new(ID, "walk_cross_check", d, [d - half, d + half], Comparison::Within, 0.0, 0.0)
            .param("eps", eps)
            .param("delta", noise.delta)
            .param("dynamics", pd.estimate)
            .param("walk", pw.estimate)
            .counts(pd.trials + pw.trials, 0),
    ])
}

pub(super) fn fig6<R: ReplicaRunner>(cfg: &ExperimentConfig, f: &config::Fig6, runner: &R) -> Result<Parts> {
    const ID: &str = "fig6";
    let g = f.geometry;
    g.validate()?;
    let x0 = point(f.x0);
    let mut eps: Vec<f64> = f.hits.iter().map(|&n| g.admissible_eps(n)).chain(cfg.eps.iter().copied()).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    eps.dedup();
    let ens = Ensemble {
        replicas: cfg.replicas,
        seed: cfg.seed,
    };
    let walls = g.spec().walls.len();
    let (mut records, mut tables) = (Vec::new(), Vec::new());
    for &delta in &cfg.delta {
        let init = Regularization::Initial(InitNoise::new(delta, f.density));
        let dynamic = Regularization::Dynamic(DynNoise::uniform_walls(delta, f.noise, walls));
        let ri = fig6_counterexample(&g, &eps, x0, &init, ens, runner)?;
        let rd = fig6_counterexample(&g, &eps, x0, &dynamic, ens, runner)?;
        let mut table = Table::new(
            format!("fig6_delta{}", tag(delta)),
            &["eps", "hits", "admissible", "init_w1", "init_w2", "init_w3", "dyn_w1", "dyn_w2", "dyn_w3"],
        );
        for (a, b) in ri.iter().zip(&rd) {
            for (scheme, row) in [("init", a), ("dyn", b)] {
                let p = row.middle_share(cfg.z);
                records.push(
                    ResultRecord::new(ID, &format!("middle_share_{scheme}"), p.estimate, [p.lo, p.hi], Comparison::Report, 0.5, 0.0)
                        .param("eps", row.eps)
                        .param("hits", row.hits)
                        .param("admissible", row.admissible)
                        .param("delta", delta)
                        .counts(row.estimate.replicas, row.estimate.failures + row.estimate.undecided),
                );
            }
            let c = |r: &Fig6Row, i: usize| r.estimate.counts.get(i).copied().unwrap_or(0) as f64;
            table.push(vec![a.eps, a.hits, a.admissible as u8 as f64, c(a, 0), c(a, 1), c(a, 2), c(b, 0), c(b, 1), c(b, 2)]);
        }
        tables.push(table);
        records.push(
            ResultRecord::exact(ID, "init_swing", fig6_swing(&ri), Comparison::AtLeast, f.min_swing, 0.0)
                .param("delta", delta)
                .note("largest change of the middle-well share between consecutive admissible eps"),
        );
        let shares: Vec<Proportion> = rd.iter().filter(|r| r.admissible).map(|r| r.middle_share(1.0)).collect();
        let zmax = shares
            .windows(2)
            .map(|w| (w[1].estimate - w[0].estimate).abs() / (w[0].sigma().powi(2) + w[1].sigma().powi(2)).sqrt())
            .fold(0.0, f64::max);
        records.push(
            ResultRecord::exact(ID, "dyn_stability_z", zmax, Comparison::AtMost, cfg.z, 0.0)
                .param("delta", delta)
                .param("dyn_swing", fig6_swing(&rd))
                .note("largest standardized change of the middle-well share between consecutive admissible eps"),
        );
    }
    Ok((records, tables))
}

pub(super) fn walk_parity<R: ReplicaRunner>(cfg: &ExperimentConfig, w: &config::WalkParity, runner: &R) -> Result<Parts> {
    const ID: &str = "walk-parity";
    w.walk.validate()?;
    let est = stopping_parity(&w.walk, cfg.replicas, cfg.seed, cfg.z, runner)?;
    let target = w.target.unwrap_or(est.limit_even);
    let mut records = vec![ResultRecord::proportion(ID, "p_even", &est.even, target)
        .param("n", w.walk.n)
        .param("lambda", w.walk.lambda)
        .param("limit_even", est.limit_even)
        .param("mean_passage", est.mean_passage)
        .param("max_passage", est.max_passage)];
    if let Some(t) = w.target {
        records.push(ResultRecord::exact(ID, "analytic_limit", est.limit_even, Comparison::Within, t, 1e-9));
    }
    let mut tables = Vec::new();
    if !w.scan.is_empty() {
        let rows = parity_convergence_scan(&w.walk, &w.scan, cfg.replicas, cfg.seed, cfg.z, runner)?;
        let mut t = Table::new("parity_scan", &["n", "p_even", "ci_lo", "ci_hi", "analytic_limit", "deviation", "sigma"]);
        for r in rows {
            t.push(vec![r.n as f64, r.p_even, r.ci_lo, r.ci_hi, r.analytic_limit, r.deviation, r.sigma]);
        }
        tables.push(t);
    }
    Ok((records, tables))
}

pub(super) fn strip(cfg: &ExperimentConfig, s: &config::StripRatio) -> Result<Parts> {
    const ID: &str = "strip-ratio";
    let model = FlatModel::new(s.model.flat()?.clone())?;
    let limit = LimitModel::flat(&model, None)?;
    let x0 = point(s.x0);
    let edge = model.project(x0).edge;
    let v = model.graph.edges[edge]
        .lower_vertex
        .ok_or_else(|| anyhow!("experiment.x0: the start must lie above a vertex"))?;
    let k = limit
        .kernels
        .iter()
        .find(|k| k.vertex == v)
        .ok_or_else(|| anyhow!("no kernel at vertex {v}"))?;
    let target = k.p_left / k.p_right();
    let mut records = Vec::new();
    for &eps in &cfg.eps {
        let d = strip_ratio(&model, x0, eps, s.radius)?;
        records.push(
            ResultRecord::exact(ID, "ratio", d.ratio, Comparison::Within, target, s.tolerance * target)
                .param("eps", eps)
                .param("radius", s.radius)
                .param("strips", d.strips)
                .param("min_width", d.min_width)
                .param("max_width", d.max_width),
        );
    }
    Ok((records, Vec::new()))
}
