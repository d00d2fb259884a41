//! Billiard experiments: energy decay, wall branching, Liouville invariance
//! and integral geometry.

use std::f64::consts::PI;

use anyhow::{bail, Result};
use nearelastic_core::billiard2d::{
    averaged_rhs, billiard_branching, billiard_replica, check_integral_geometry, closed_rhs, decay_deviation, decay_rate, liouville_mass,
    liouville_weights, section_chain, BilliardParams, BilliardStop, ConvexDomain, DiffusionControl, Diffusivity, SectionPoint,
    SectionQuadrature,
};
use nearelastic_core::rng::{experiment, StreamKey};
use nearelastic_core::runner::ReplicaRunner;
use nearelastic_core::stats::ks_distance;
use rand::Rng;

use super::{tag, Parts, Table};
use crate::config::{self, DomainSpec, ExperimentConfig};
use crate::report::{Comparison, ResultRecord};

fn domain(d: &DomainSpec) -> Result<ConvexDomain> {
    Ok(ConvexDomain::new(d.shape, d.wall)?)
}

fn params(eps: f64, delta: f64, d: &Diffusivity, c: &DiffusionControl) -> BilliardParams {
    BilliardParams {
        eps,
        delta,
        diffusivity: *d,
        control: *c,
    }
}

pub(super) fn decay<R: ReplicaRunner>(cfg: &ExperimentConfig, b: &config::BilliardDecay, runner: &R) -> Result<Parts> {
    const ID: &str = "billiard-decay";
    let dom = domain(&b.domain)?;
    if let Some(w) = dom.wall() {
        if b.cutoff * b.h0 <= w.spec.height {
            bail!("experiment.cutoff: the checked window must stay above the wall height");
        }
    }
    let free = dom.without_wall();
    let rate = decay_rate(liouville_weights(&free, &b.coefficient)?.total, free.area());
    let root = b.h0.sqrt();
    // run a little past the cutoff so the last checked collision is included
    let horizon = (root - 0.9 * (b.cutoff * b.h0).sqrt()) / rate;
    let stop = BilliardStop {
        horizon,
        ..BilliardStop::default()
    };
    let (mut records, mut tables) = (Vec::new(), Vec::new());
    for &eps in &cfg.eps {
        for &delta in &cfg.delta {
            let p = params(eps, delta, &b.diffusivity, &b.control);
            let runs = runner.map(cfg.replicas, |i| {
                billiard_replica(&dom, &b.coefficient, b.x0, b.h0, &p, &stop, cfg.seed, i)
                    .map(|r| (decay_deviation(&r, rate, b.cutoff), (i == 0).then_some(r)))
            });
            let mut devs = Vec::new();
            let mut failures = 0;
            let mut first_error = None;
            let mut sample = None;
            for r in runs {
                match r {
                    Ok((d, run)) => {
                        devs.push(d);
                        if run.is_some() {
                            sample = run;
                        }
                    }
                    Err(e) => {
                        failures += 1;
                        first_error.get_or_insert(e.to_string());
                    }
                }
            }
            let worst = devs.iter().copied().fold(f64::NAN, f64::max);
            let mean = devs.iter().sum::<f64>() / devs.len().max(1) as f64;
            let mut rec = ResultRecord::exact(ID, "sup_relative_deviation", worst, Comparison::AtMost, 0.0, b.tolerance)
                .param("eps", eps)
                .param("delta", delta)
                .param("rate", rate)
                .param("cutoff", b.cutoff)
                .param("mean_over_replicas", mean)
                .counts(cfg.replicas, failures);
            if let Some(e) = first_error {
                rec = rec.note(format!("first replica error: {e}"));
            }
            records.push(rec);
            if let Some(run) = sample {
                let mut t = Table::new(format!("collisions_eps{}_delta{}", tag(eps), tag(delta)), &["n", "s", "theta", "h", "t", "h_limit"]);
                for c in &run.log {
                    let limit = (root - rate * c.t).max(0.0).powi(2);
                    t.push(vec![c.n as f64, c.s, c.theta, c.h, c.t, limit]);
                }
                tables.push(t);
            }
        }
    }
    Ok((records, tables))
}

pub(super) fn branching<R: ReplicaRunner>(cfg: &ExperimentConfig, b: &config::BilliardBranching, runner: &R) -> Result<Parts> {
    const ID: &str = "billiard-branching";
    let dom = domain(&b.domain)?;
    let predicted = liouville_weights(&dom, &b.coefficient)?.p1();
    let mut records = Vec::new();
    if let Some(t) = b.target {
        records.push(ResultRecord::exact(ID, "predicted_split", predicted, Comparison::Within, t, 1e-9));
    }
    let mut table = Table::new("wells", &["eps", "delta", "well1", "well2", "failures", "predicted"]);
    for &eps in &cfg.eps {
        for &delta in &cfg.delta {
            let p = params(eps, delta, &b.diffusivity, &b.control);
            let res = billiard_branching(&dom, &b.coefficient, b.x0, b.h0, &p, cfg.replicas, cfg.seed, cfg.z, runner)?;
            let mut rec = ResultRecord::proportion(ID, "well1_frequency", &res.well1, res.predicted)
                .param("eps", eps)
                .param("delta", delta)
                .param("h0", b.h0)
                .counts(res.replicas, res.failures);
            if let Some(e) = &res.first_error {
                rec = rec.note(format!("first replica error: {e}"));
            }
            records.push(rec);
            table.push(vec![eps, delta, res.counts[0] as f64, res.counts[1] as f64, res.failures as f64, res.predicted]);
        }
    }
    Ok((records, vec![table]))
}

/// A section point drawn from `sin(theta) ds dtheta / 2L`, kept `margin`
/// away from grazing.
fn liouville_point<G: Rng>(rng: &mut G, length: f64, margin: f64) -> SectionPoint {
    loop {
        let s = rng.random::<f64>() * length;
        let theta = (1.0 - 2.0 * rng.random::<f64>()).acos();
        if theta > margin && theta < PI - margin {
            return SectionPoint::new(s, theta);
        }
    }
}

pub(super) fn liouville<R: ReplicaRunner>(cfg: &ExperimentConfig, l: &config::LiouvilleCheck, runner: &R) -> Result<Parts> {
    const ID: &str = "liouville-check";
    let dom = domain(&l.domain)?;
    let len = dom.length();
    let mut rng = StreamKey::new(cfg.seed, experiment::named(ID), 0, 0).rng();
    let mut worst: f64 = 0.0;
    for _ in 0..l.points {
        let x = liouville_point(&mut rng, len, 2.0 * l.step);
        worst = worst.max(dom.liouville_defect(x, l.step)?.abs());
    }
    let mut records = vec![ResultRecord::exact(ID, "jacobian_defect", worst, Comparison::AtMost, 0.0, l.jacobian_tolerance)
        .param("points", l.points)
        .param("step", l.step)];

    let mass = liouville_mass(&dom)?;
    records.push(ResultRecord::exact(ID, "liouville_mass", mass / (2.0 * len) - 1.0, Comparison::Within, 0.0, 1e-8).param("mass", mass));

    let free = dom.without_wall();
    let mut rhs_worst: f64 = 0.0;
    for _ in 0..l.rhs_points {
        let h = 10f64.powf(rng.random::<f64>() * 2.0 - 1.0);
        let a = averaged_rhs(&free, &l.coefficient, h, SectionQuadrature::default())?;
        let c = closed_rhs(&free, &l.coefficient, h)?;
        rhs_worst = rhs_worst.max((a / c - 1.0).abs());
    }
    records.push(
        ResultRecord::exact(ID, "loss_rate_consistency", rhs_worst, Comparison::AtMost, 0.0, l.rhs_tolerance)
            .param("points", l.rhs_points)
            .note("averaged loss over averaged flight time against the closed form"),
    );

    let mut tables = Vec::new();
    let per = l.chain_steps.div_ceil(l.chains as usize);
    for &delta in &cfg.delta {
        let chains = runner.map(l.chains, |i| section_chain(&dom, &l.diffusivity, l.x0, delta, l.burn_in + per, cfg.seed, i));
        let mut s = Vec::with_capacity(per * l.chains as usize);
        let mut th = Vec::with_capacity(s.capacity());
        for c in chains {
            for x in &c?[l.burn_in..] {
                s.push(x.s);
                th.push(x.theta);
            }
        }
        let ks_s = ks_distance(&s, |v| v / len);
        let ks_t = ks_distance(&th, |t| 0.5 * (1.0 - t.cos()));
        for (q, v) in [("ks_s", ks_s), ("ks_theta", ks_t)] {
            records.push(
                ResultRecord::exact(ID, q, v, Comparison::AtMost, 0.0, l.ks_tolerance)
                    .param("delta", delta)
                    .param("steps", s.len())
                    .param("chains", l.chains),
            );
        }
        let bins = 16;
        let mut counts = vec![0u64; bins * bins];
        for (&a, &b) in s.iter().zip(&th) {
            let i = ((a / len * bins as f64) as usize).min(bins - 1);
            let j = ((0.5 * (1.0 - b.cos()) * bins as f64) as usize).min(bins - 1);
            counts[i * bins + j] += 1;
        }
        let mut t = Table::new(format!("section_histogram_delta{}", tag(delta)), &["s_bin", "cdf_theta_bin", "count", "expected"]);
        let expected = s.len() as f64 / (bins * bins) as f64;
        for (k, &c) in counts.iter().enumerate() {
            t.push(vec![(k / bins) as f64, (k % bins) as f64, c as f64, expected]);
        }
        tables.push(t);
    }
    Ok((records, tables))
}

pub(super) fn integral_geometry(_cfg: &ExperimentConfig, g: &config::IntegralGeometry) -> Result<Parts> {
    const ID: &str = "integral-geometry";
    let mut records = Vec::new();
    let mut table = Table::new("integral_geometry", &["domain", "lhs", "rhs", "rel_error", "resolution_change"]);
    for (k, d) in g.domains.iter().enumerate() {
        let dom = ConvexDomain::new(d.shape, None)?;
        let ig = check_integral_geometry(&dom, g.quadrature)?;
        records.push(
            ResultRecord::exact(ID, "relative_error", ig.rel_error, Comparison::AtMost, 0.0, d.tolerance)
                .param("domain", &d.name)
                .param("lhs", ig.lhs)
                .param("rhs", ig.rhs)
                .param("resolution_change", ig.resolution_change),
        );
        table.push(vec![k as f64, ig.lhs, ig.rhs, ig.rel_error, ig.resolution_change]);
        if let Some(f) = g.dilation {
            let big = check_integral_geometry(&ConvexDomain::new(d.shape.dilate(f), None)?, g.quadrature)?;
            let want = f * f;
            records.push(
                ResultRecord::exact(ID, "dilation_scaling", big.lhs / ig.lhs, Comparison::Within, want, 1e-9 * want)
                    .param("domain", &d.name)
                    .param("factor", f),
            );
        }
    }
    Ok((records, vec![table]))
}
