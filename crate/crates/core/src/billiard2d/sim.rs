//! Billiard with additive energy loss at the boundary, angle diffusion
//! after every reflection and a wall that traps the particle once its
//! energy falls to the wall height.

use core::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::diffusion::{reflected_diffusion_step, DiffusionControl, Diffusivity};
use super::domain::{ConvexDomain, SectionPoint};
use crate::error::{param, Result};
use crate::prelude::*;
use crate::rng::{channel, experiment, StreamKey};
use crate::runner::ReplicaRunner;
use crate::stats::Proportion;

/// Energy-loss coefficient `c(s, theta)` on the boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coefficient {
    Constant { c: f64 },
    /// Piecewise constant on the boundaries of the two wells.
    Sides { well1: f64, well2: f64 },
    /// `mean + amplitude cos(2 pi mode s / L)`.
    Harmonic { mean: f64, amplitude: f64, mode: u32 },
}

impl Coefficient {
    pub fn validate(&self, domain: &ConvexDomain) -> Result<()> {
        match *self {
            Coefficient::Constant { c } if c > 0.0 && c.is_finite() => Ok(()),
            Coefficient::Sides { well1, well2 } if well1 > 0.0 && well2 > 0.0 && well1.is_finite() && well2.is_finite() => {
                if domain.wall().is_none() {
                    Err(param("coefficient", "per-well coefficients need a wall"))
                } else {
                    Ok(())
                }
            }
            Coefficient::Harmonic { mean, amplitude, .. } if mean > amplitude.abs() && mean.is_finite() => Ok(()),
            _ => Err(param("coefficient", "c must be positive and bounded")),
        }
    }

    pub fn eval(&self, domain: &ConvexDomain, x: SectionPoint) -> f64 {
        match *self {
            Coefficient::Constant { c } => c,
            Coefficient::Sides { well1, well2 } => match domain.side(x.s) {
                Some(1) => well1,
                _ => well2,
            },
            Coefficient::Harmonic { mean, amplitude, mode } => mean + amplitude * (TAU * mode as f64 * x.s / domain.length()).cos(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilliardParams {
    pub eps: f64,
    pub delta: f64,
    #[serde(default)]
    pub diffusivity: Diffusivity,
    #[serde(default)]
    pub control: DiffusionControl,
}

impl BilliardParams {
    pub fn new(eps: f64, delta: f64) -> Self {
        BilliardParams {
            eps,
            delta,
            diffusivity: Diffusivity::default(),
            control: DiffusionControl::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps < 1.0) {
            return Err(param("eps", "must lie in [0, 1)"));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(param("delta", "must be non-negative"));
        }
        self.diffusivity.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilliardStop {
    /// Rescaled time `eps t`.
    pub horizon: f64,
    pub stop_at_pin: bool,
    pub max_collisions: u64,
    pub record: bool,
}

impl Default for BilliardStop {
    fn default() -> Self {
        BilliardStop {
            horizon: f64::INFINITY,
            stop_at_pin: false,
            max_collisions: 100_000_000,
            record: true,
        }
    }
}

/// One boundary collision: state right after the energy loss, before the
/// angle is perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BilliardCollision {
    pub n: u64,
    pub s: f64,
    pub theta: f64,
    pub h: f64,
    /// Rescaled time.
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BilliardEnd {
    Horizon,
    Exhausted,
    Pinned,
    CollisionLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilliardRun {
    pub log: Vec<BilliardCollision>,
    pub h0: f64,
    pub end: SectionPoint,
    pub h: f64,
    pub t: f64,
    pub collisions: u64,
    pub wall_hits: u64,
    pub well: Option<u8>,
    pub pin_time: Option<f64>,
    pub reason: BilliardEnd,
}

impl BilliardRun {
    /// Energy path through `(0, H0)` and the collision points, linear in
    /// between.
    pub fn energy_path(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.log.len() + 1);
        out.push((0.0, self.h0));
        out.extend(self.log.iter().map(|c| (c.t, c.h)));
        out
    }
}

/// Simulates the billiard from `x0` with energy `h0`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_billiard<R: Rng + ?Sized>(
    domain: &ConvexDomain,
    coeff: &Coefficient,
    x0: SectionPoint,
    h0: f64,
    params: &BilliardParams,
    stop: &BilliardStop,
    rng: &mut R,
) -> Result<BilliardRun> {
    params.validate()?;
    coeff.validate(domain)?;
    if !(h0 >= 0.0 && h0.is_finite()) {
        return Err(param("h0", "must be a non-negative energy"));
    }
    let eps = params.eps;
    let wall = domain.wall().map(|w| w.spec);
    let mut run = BilliardRun {
        log: Vec::new(),
        h0,
        end: x0,
        h: h0,
        t: 0.0,
        collisions: 0,
        wall_hits: 0,
        well: None,
        pin_time: None,
        reason: BilliardEnd::CollisionLimit,
    };
    if let Some(w) = wall {
        if h0 <= w.height {
            run.well = domain.side(x0.s);
            run.pin_time = Some(0.0);
        }
    }
    let mut x = x0;
    loop {
        if run.h <= 0.0 {
            run.reason = BilliardEnd::Exhausted;
            break;
        }
        if run.collisions >= stop.max_collisions {
            run.reason = BilliardEnd::CollisionLimit;
            break;
        }
        let (y, length, hit_wall) = if run.well.is_some() {
            domain.map_in_well(x)?
        } else {
            let (y, l) = domain.map_with_chord(x)?;
            (y, l, false)
        };
        let speed = (2.0 * run.h).sqrt();
        let t_next = run.t + eps * length / speed;
        if t_next > stop.horizon {
            run.t = stop.horizon;
            run.reason = BilliardEnd::Horizon;
            break;
        }
        run.t = t_next;
        if hit_wall {
            run.wall_hits += 1;
            if let Some(w) = wall {
                run.h = (run.h - eps * w.c).max(0.0);
            }
        }
        run.h = (run.h - eps * coeff.eval(domain, y)).max(0.0);
        run.collisions += 1;
        if stop.record {
            run.log.push(BilliardCollision {
                n: run.collisions,
                s: y.s,
                theta: y.theta,
                h: run.h,
                t: run.t,
            });
        }
        let theta = if run.h > 0.0 {
            reflected_diffusion_step(&params.diffusivity, y.theta, params.delta, &params.control, rng)?
        } else {
            y.theta
        };
        x = SectionPoint::new(y.s, theta);
        run.end = x;
        if run.well.is_none() {
            if let Some(w) = wall {
                if run.h <= w.height {
                    run.well = domain.side(y.s);
                    run.pin_time = Some(run.t);
                    if stop.stop_at_pin {
                        run.reason = BilliardEnd::Pinned;
                        break;
                    }
                }
            }
        }
    }
    Ok(run)
}

/// Replica `replica` with its diffusion stream keyed by `seed`.
#[allow(clippy::too_many_arguments)]
pub fn billiard_replica(
    domain: &ConvexDomain,
    coeff: &Coefficient,
    x0: SectionPoint,
    h0: f64,
    params: &BilliardParams,
    stop: &BilliardStop,
    seed: u64,
    replica: u64,
) -> Result<BilliardRun> {
    let mut rng = StreamKey::new(seed, experiment::BILLIARD, replica, channel::DIFFUSION).rng();
    simulate_billiard(domain, coeff, x0, h0, params, stop, &mut rng)
}

/// One step of the section chain: billiard map, then angle diffusion.
pub fn section_chain_step<R: Rng + ?Sized>(domain: &ConvexDomain, a: &Diffusivity, x: SectionPoint, delta: f64, ctl: &DiffusionControl, rng: &mut R) -> Result<SectionPoint> {
    let y = domain.billiard_map(x)?;
    Ok(SectionPoint::new(y.s, reflected_diffusion_step(a, y.theta, delta, ctl, rng)?))
}

/// `steps` consecutive states of the section chain after `x0`.
pub fn section_chain(domain: &ConvexDomain, a: &Diffusivity, x0: SectionPoint, delta: f64, steps: usize, seed: u64, replica: u64) -> Result<Vec<SectionPoint>> {
    let mut rng = StreamKey::new(seed, experiment::BILLIARD_CHAIN, replica, channel::DIFFUSION).rng();
    let ctl = DiffusionControl::default();
    let mut out = Vec::with_capacity(steps);
    let mut x = x0;
    for _ in 0..steps {
        x = section_chain_step(domain, a, x, delta, &ctl, &mut rng)?;
        out.push(x);
    }
    Ok(out)
}

/// Visit counts of the flight-interpolated chain on an `n x n` grid over
/// the bounding box; points are taken every `spacing` of path length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Occupation {
    pub n: usize,
    pub counts: Vec<u64>,
    /// Cells lying entirely inside the domain.
    pub interior: Vec<bool>,
    pub samples: u64,
}

impl Occupation {
    /// Largest `|count / mean - 1|` over interior cells.
    pub fn max_relative_deviation(&self) -> f64 {
        let cells: Vec<u64> = self
            .counts
            .iter()
            .zip(&self.interior)
            .filter(|(_, &i)| i)
            .map(|(&c, _)| c)
            .collect();
        let mean = cells.iter().sum::<u64>() as f64 / cells.len() as f64;
        cells
            .iter()
            .map(|&c| (c as f64 / mean - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn occupation_grid(
    domain: &ConvexDomain,
    a: &Diffusivity,
    x0: SectionPoint,
    delta: f64,
    steps: usize,
    spacing: f64,
    n: usize,
    seed: u64,
) -> Result<Occupation> {
    if !(spacing > 0.0) || n == 0 {
        return Err(param("occupation", "spacing and grid size must be positive"));
    }
    let (xmax, ymax) = bounding_box(domain);
    let cell = |v: f64, m: f64| (((v + m) / (2.0 * m) * n as f64) as usize).min(n - 1);
    let mut counts = vec![0u64; n * n];
    let mut rng = StreamKey::new(seed, experiment::BILLIARD_CHAIN, 0, channel::DIFFUSION).rng();
    let ctl = DiffusionControl::default();
    let mut x = x0;
    let mut carry = rng.random::<f64>() * spacing;
    let mut samples = 0;
    for _ in 0..steps {
        let (y, length) = domain.map_with_chord(x)?;
        let (p, q) = (domain.position(x.s), domain.position(y.s));
        let mut l = carry;
        while l < length {
            let f = l / length;
            let (px, py) = (p[0] + f * (q[0] - p[0]), p[1] + f * (q[1] - p[1]));
            counts[cell(py, ymax) * n + cell(px, xmax)] += 1;
            samples += 1;
            l += spacing;
        }
        carry = l - length;
        x = SectionPoint::new(y.s, reflected_diffusion_step(a, y.theta, delta, &ctl, &mut rng)?);
    }
    let mut interior = vec![false; n * n];
    for j in 0..n {
        for i in 0..n {
            let corner = |di: usize, dj: usize| {
                [
                    -xmax + 2.0 * xmax * (i + di) as f64 / n as f64,
                    -ymax + 2.0 * ymax * (j + dj) as f64 / n as f64,
                ]
            };
            interior[j * n + i] = [(0, 0), (1, 0), (0, 1), (1, 1)]
                .iter()
                .all(|&(di, dj)| domain.contains(corner(di, dj)));
        }
    }
    Ok(Occupation {
        n,
        counts,
        interior,
        samples,
    })
}

fn bounding_box(domain: &ConvexDomain) -> (f64, f64) {
    let l = domain.length();
    let (mut xm, mut ym): (f64, f64) = (0.0, 0.0);
    for k in 0..4096 {
        let p = domain.position(l * k as f64 / 4096.0);
        xm = xm.max(p[0].abs());
        ym = ym.max(p[1].abs());
    }
    (xm * (1.0 + 1e-9), ym * (1.0 + 1e-9))
}

/// Monte Carlo well frequencies against the predicted split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilliardBranching {
    pub replicas: u64,
    pub counts: [u64; 2],
    pub failures: u64,
    pub first_error: Option<String>,
    pub well1: Proportion,
    pub predicted: f64,
}

/// Runs replicas until the particle is trapped and counts the wells.
#[allow(clippy::too_many_arguments)]
pub fn billiard_branching<R: ReplicaRunner>(
    domain: &ConvexDomain,
    coeff: &Coefficient,
    x0: SectionPoint,
    h0: f64,
    params: &BilliardParams,
    replicas: u64,
    seed: u64,
    z: f64,
    runner: &R,
) -> Result<BilliardBranching> {
    let wall = domain.wall().ok_or_else(|| param("wall", "branching needs a wall"))?;
    if !(h0 > wall.spec.height) {
        return Err(param("h0", "must exceed the wall height"));
    }
    let predicted = super::integral::liouville_weights(domain, coeff)?.p1();
    let stop = BilliardStop {
        stop_at_pin: true,
        record: false,
        ..BilliardStop::default()
    };
    let outcomes = runner.map(replicas, |i| {
        billiard_replica(domain, coeff, x0, h0, params, &stop, seed, i).map(|r| r.well)
    });
    let mut counts = [0u64; 2];
    let mut failures = 0;
    let mut first_error = None;
    for o in outcomes {
        match o {
            Ok(Some(w)) => counts[(w - 1) as usize] += 1,
            Ok(None) => failures += 1,
            Err(e) => {
                failures += 1;
                first_error.get_or_insert_with(|| e.to_string());
            }
        }
    }
    Ok(BilliardBranching {
        replicas,
        counts,
        failures,
        first_error,
        well1: Proportion::new(counts[0], counts[0] + counts[1], z),
        predicted,
    })
}

/// Sup of `|H(t) / H_limit(t) - 1|` over collisions with `H >= cutoff H0`.
pub fn decay_deviation(run: &BilliardRun, rate: f64, cutoff: f64) -> f64 {
    let root = run.h0.sqrt();
    run.energy_path()
        .iter()
        .filter(|(_, h)| *h >= cutoff * run.h0)
        .map(|&(t, h)| {
            let limit = (root - rate * t).max(0.0).powi(2);
            (h / limit - 1.0).abs()
        })
        .fold(0.0, f64::max)
}
