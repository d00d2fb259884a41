//! Event-driven simulation of the nearly-elastic 1D dynamics.
//!
//! The flat model moves in closed form between walls. The smooth potential
//! is integrated with a fourth-order symplectic composition and wall hits
//! are located by bisection on the step length.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::model1d::{potential_edge, FlatModel, GraphPoint, PhasePoint, Potential, PotentialModel};
use crate::path::{GraphPath, PathPoint};
use crate::prelude::*;

/// One wall reflection. `t` is physical time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub t: f64,
    pub wall: usize,
    pub pre_speed: f64,
    pub post_speed: f64,
    pub energy_after: f64,
    /// Edge of the graph after the reflection.
    pub edge: usize,
}

/// Additive perturbation `delta * noise` of a wall's restitution
/// coefficient, drawn once per hit.
pub trait WallNoise {
    fn next(&mut self, wall: usize) -> f64;
}

/// No perturbation.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quiet;

impl WallNoise for Quiet {
    fn next(&mut self, _wall: usize) -> f64 {
        0.0
    }
}

impl<N: WallNoise + ?Sized> WallNoise for &mut N {
    fn next(&mut self, wall: usize) -> f64 {
        (**self).next(wall)
    }
}

/// When a run ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopRule {
    /// Horizon in rescaled time `eps * t` (physical time when `eps = 0`).
    pub horizon: Option<f64>,
    /// Stop once the energy above the current edge's floor drops to this.
    pub stop_energy: f64,
    /// Stop at the first collision that leaves the particle on a leaf edge.
    pub stop_at_well: bool,
    /// Stop after this many collisions.
    pub collisions: Option<u64>,
    /// Error out after this many collisions.
    pub max_collisions: u64,
    /// Keep the collision log.
    pub record: bool,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            horizon: None,
            stop_energy: 1e-12,
            stop_at_well: true,
            collisions: None,
            max_collisions: 100_000_000,
            record: true,
        }
    }
}

impl StopRule {
    fn validate(&self) -> Result<()> {
        if !(self.stop_energy > 0.0) {
            return Err(param("stop_energy", "must be positive"));
        }
        if let Some(h) = self.horizon {
            if !(h >= 0.0) {
                return Err(param("horizon", "must be non-negative"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    Horizon,
    StopEnergy,
    WellEntry,
    CollisionCount,
}

/// Outcome of one simulated trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Run1d {
    pub log: Vec<CollisionRecord>,
    pub start: GraphPoint,
    pub end: GraphPoint,
    pub state: PhasePoint,
    /// Rescaled time at the end of the run.
    pub end_time: f64,
    pub collisions: u64,
    /// Leaf edge the particle is confined to, if any.
    pub well: Option<usize>,
    /// Rescaled time of the first collision on a leaf edge.
    pub well_time: Option<f64>,
    pub reason: StopReason,
}

impl Run1d {
    /// Piecewise-linear modification of the energy, in rescaled time.
    pub fn slow_path(&self, eps: f64) -> GraphPath {
        piecewise_linear_energy(&self.log, self.start, self.end_time, eps)
    }
}

fn rescale(eps: f64, t: f64) -> f64 {
    if eps > 0.0 {
        eps * t
    } else {
        t
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(0.0..1.0).contains(&eps) {
        return Err(param("eps", format!("{eps} must lie in [0, 1)")));
    }
    Ok(())
}

/// Speed multiplier `1 - eps (c + perturbation)` at a wall hit.
fn factor(eps: f64, c: f64, perturbation: f64, wall: usize) -> Result<f64> {
    let k = 1.0 - eps * (c + perturbation);
    if !(k > 0.0 && k.is_finite()) {
        return Err(param(
            "eps",
            format!("restitution factor {k} at wall {wall} is not positive"),
        ));
    }
    Ok(k)
}

/// Simulates the flat model without noise.
pub fn simulate_flat(model: &FlatModel, x0: PhasePoint, eps: f64, stop: &StopRule) -> Result<Run1d> {
    simulate_flat_with(model, x0, eps, stop, &mut Quiet)
}

/// Simulates the flat model; each hit on wall `k` multiplies the speed by
/// `1 - eps (c_k(v) + noise.next(k))`.
pub fn simulate_flat_with<N: WallNoise>(
    model: &FlatModel,
    x0: PhasePoint,
    eps: f64,
    stop: &StopRule,
    noise: &mut N,
) -> Result<Run1d> {
    check_eps(eps)?;
    stop.validate()?;
    if !model.contains(x0) {
        return Err(param("x0", format!("({}, {}) outside the wall range", x0.q, x0.p)));
    }
    let spec = &model.spec;
    let graph = &model.graph;
    let start = model.project(x0);
    let (mut q, mut p) = (x0.q, x0.p);
    let mut edge = start.edge;
    let mut t = 0.0;
    let mut log = Vec::new();
    let mut collisions = 0u64;
    let mut well = graph.is_leaf(edge).then_some(edge);
    let mut well_time = well.map(|_| 0.0);
    let reason;
    loop {
        if stop.stop_at_well && well.is_some() {
            reason = StopReason::WellEntry;
            break;
        }
        if stop.collisions.is_some_and(|n| collisions >= n) {
            reason = StopReason::CollisionCount;
            break;
        }
        if 0.5 * p * p - graph.edges[edge].floor <= stop.stop_energy {
            reason = StopReason::StopEnergy;
            break;
        }
        if collisions >= stop.max_collisions {
            return Err(Error::CollisionBudget(stop.max_collisions));
        }
        let (lw, rw) = graph.edges[edge].walls;
        let target = if p > 0.0 { rw } else { lw };
        let dt = (spec.walls[target] - q).abs() / p.abs();
        if let Some(h) = stop.horizon {
            if rescale(eps, t + dt) > h {
                let tau = if eps > 0.0 { h / eps } else { h };
                q += p * (tau - t);
                t = tau;
                reason = StopReason::Horizon;
                break;
            }
        }
        t += dt;
        q = spec.walls[target];
        let pre = p.abs();
        let k = factor(eps, spec.restitution[target].eval(pre), noise.next(target), target)?;
        let post = pre * k;
        p = -p.signum() * post;
        collisions += 1;
        // descend while the new speed is blocked by the split wall
        while let Some(v) = graph.edges[edge].lower_vertex {
            let vert = &graph.vertices[v];
            let wall = vert.wall.expect("flat vertex");
            if post > spec.height(wall) {
                break;
            }
            edge = if target == lw { vert.left } else { vert.right };
            if target != lw && target != rw {
                unreachable!("hit wall is one of the edge's bounding walls");
            }
        }
        if well.is_none() && graph.is_leaf(edge) {
            well = Some(edge);
            well_time = Some(rescale(eps, t));
        }
        if stop.record {
            log.push(CollisionRecord {
                t,
                wall: target,
                pre_speed: pre,
                post_speed: post,
                energy_after: 0.5 * post * post,
                edge,
            });
        }
    }
    let end = GraphPoint { h: 0.5 * p * p, edge };
    Ok(Run1d {
        log,
        start,
        end,
        state: PhasePoint { q, p },
        end_time: rescale(eps, t),
        collisions,
        well,
        well_time,
        reason,
    })
}

/// Numerical settings for the smooth-potential flight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightControl {
    /// Integrator step in physical time.
    pub step: f64,
    /// Relative tolerance on the wall-hit time, as a fraction of the step.
    pub event_tol: f64,
}

impl Default for FlightControl {
    fn default() -> Self {
        FlightControl {
            step: 1e-3,
            event_tol: 1e-12,
        }
    }
}

const W1: f64 = 1.351_207_191_959_657_8; // 1 / (2 - 2^(1/3))
const W0: f64 = -1.702_414_383_919_315_3; // -2^(1/3) / (2 - 2^(1/3))

/// Fourth-order symplectic step (triple-jump composition of velocity
/// Verlet) for `q'' = -F'(q)`.
fn yoshida(f: &Potential, q: f64, p: f64, h: f64) -> (f64, f64) {
    let (mut q, mut p) = (q, p);
    for w in [W1, W0, W1] {
        let s = w * h;
        p -= 0.5 * s * f.derivative(q);
        q += s * p;
        p -= 0.5 * s * f.derivative(q);
    }
    (q, p)
}

/// Free flight in the potential `f` for `duration` with steps of at most
/// `step`.
pub fn symplectic_flight(f: &Potential, x: PhasePoint, duration: f64, step: f64) -> PhasePoint {
    let n = (duration / step).ceil().max(1.0) as u64;
    let h = duration / n as f64;
    let (mut q, mut p) = (x.q, x.p);
    for _ in 0..n {
        (q, p) = yoshida(f, q, p, h);
    }
    PhasePoint { q, p }
}

/// Simulates the smooth-potential model. Wall 0 is `a1`, wall 1 is `a2`.
pub fn simulate_potential(model: &PotentialModel, x0: PhasePoint, eps: f64, stop: &StopRule) -> Result<Run1d> {
    simulate_potential_with(model, x0, eps, stop, FlightControl::default(), &mut Quiet)
}

pub fn simulate_potential_with<N: WallNoise>(
    model: &PotentialModel,
    x0: PhasePoint,
    eps: f64,
    stop: &StopRule,
    ctl: FlightControl,
    noise: &mut N,
) -> Result<Run1d> {
    check_eps(eps)?;
    stop.validate()?;
    if !(ctl.step > 0.0 && ctl.event_tol > 0.0) {
        return Err(param("step", "integrator step and event tolerance must be positive"));
    }
    let (a1, a2) = (model.spec.a1, model.spec.a2);
    if !(x0.q >= a1 && x0.q <= a2 && x0.p.is_finite()) {
        return Err(param("x0", format!("({}, {}) outside [a1, a2]", x0.q, x0.p)));
    }
    let graph = &model.graph;
    let f = &model.spec.potential;
    let start = model.project(x0);
    let (mut q, mut p) = (x0.q, x0.p);
    let mut edge = start.edge;
    let mut t = 0.0;
    let mut log = Vec::new();
    let mut collisions = 0u64;
    let mut well = graph.is_leaf(edge).then_some(edge);
    let mut well_time = well.map(|_| 0.0);
    let h = ctl.step;
    // a particle resting on a wall is reported at the wall and the step
    // leaves it moving inwards
    if q == a1 && p < 0.0 || q == a2 && p > 0.0 {
        p = -p;
    }
    let reason = loop {
        if stop.stop_at_well && well.is_some() {
            break StopReason::WellEntry;
        }
        if stop.collisions.is_some_and(|n| collisions >= n) {
            break StopReason::CollisionCount;
        }
        let energy = 0.5 * p * p + f.value(q);
        if energy - graph.edges[edge].floor <= stop.stop_energy {
            break StopReason::StopEnergy;
        }
        if collisions >= stop.max_collisions {
            return Err(Error::CollisionBudget(stop.max_collisions));
        }
        if let Some(hz) = stop.horizon {
            let limit = if eps > 0.0 { hz / eps } else { hz };
            if t + h > limit {
                let (q1, p1) = yoshida(f, q, p, limit - t);
                if q1 >= a1 && q1 <= a2 {
                    q = q1;
                    p = p1;
                    t = limit;
                    break StopReason::Horizon;
                }
            }
        }
        let (q1, p1) = yoshida(f, q, p, h);
        if q1 >= a1 && q1 <= a2 {
            q = q1;
            p = p1;
            t += h;
            continue;
        }
        // wall crossed inside the step: bisect the partial step length
        let wall = if q1 < a1 { 0 } else { 1 };
        let qw = if wall == 0 { a1 } else { a2 };
        let outside = |x: f64| if wall == 0 { x < a1 } else { x > a2 };
        let (mut lo, mut hi) = (0.0, h);
        if outside(q) {
            return Err(Error::EventDetection(format!(
                "step starts outside the wall at q = {q}"
            )));
        }
        let mut state = (q, p);
        while hi - lo > ctl.event_tol * h {
            let mid = 0.5 * (lo + hi);
            let s = yoshida(f, q, p, mid);
            if outside(s.0) {
                hi = mid;
            } else {
                lo = mid;
                state = s;
            }
        }
        let (_, pw) = state;
        t += lo;
        q = qw;
        // kinetic energy is recomputed on the wall so the snap does not
        // change H
        let energy = 0.5 * pw * pw + f.value(state.0);
        let kinetic = (energy - f.value(qw)).max(0.0);
        let pre = (2.0 * kinetic).sqrt();
        let c = if wall == 0 { &model.spec.c1 } else { &model.spec.c2 };
        let k = factor(eps, c.eval(energy), noise.next(wall), wall)?;
        let post = pre * k;
        p = if wall == 0 { post } else { -post };
        collisions += 1;
        let energy_after = 0.5 * post * post + f.value(qw);
        if edge == potential_edge::UPPER && energy_after <= model.vertex_energy {
            edge = if wall == 0 { potential_edge::LEFT } else { potential_edge::RIGHT };
            if well.is_none() {
                well = Some(edge);
                well_time = Some(rescale(eps, t));
            }
        }
        if stop.record {
            log.push(CollisionRecord {
                t,
                wall,
                pre_speed: pre,
                post_speed: post,
                energy_after,
                edge,
            });
        }
    };
    let end = GraphPoint {
        h: 0.5 * p * p + f.value(q),
        edge,
    };
    Ok(Run1d {
        log,
        start,
        end,
        state: PhasePoint { q, p },
        end_time: rescale(eps, t),
        collisions,
        well,
        well_time,
        reason,
    })
}

/// Energy after each collision joined by straight segments, starting from
/// the initial point and ending at `end_time` (both in rescaled time).
pub fn piecewise_linear_energy(log: &[CollisionRecord], start: GraphPoint, end_time: f64, eps: f64) -> GraphPath {
    let mut points = Vec::with_capacity(log.len() + 2);
    points.push(PathPoint {
        t: 0.0,
        h: start.h,
        edge: start.edge,
    });
    for r in log {
        let t = rescale(eps, r.t);
        if t <= points.last().map_or(f64::NEG_INFINITY, |p| p.t) {
            // simultaneous events keep the latest state
            let last = points.last_mut().expect("non-empty");
            last.h = r.energy_after;
            last.edge = r.edge;
            continue;
        }
        points.push(PathPoint {
            t,
            h: r.energy_after,
            edge: r.edge,
        });
    }
    let last = *points.last().expect("non-empty");
    if end_time > last.t {
        points.push(PathPoint {
            t: end_time,
            h: last.h,
            edge: last.edge,
        });
    }
    GraphPath::new(points)
}

/// `sup_t |H(t) - Hhat(t)|` between the post-collision step function and
/// its piecewise-linear modification.
pub fn step_gap(path: &GraphPath) -> f64 {
    // On [t_k, t_{k+1}) the step function equals H_k while the linear
    // path moves to H_{k+1}; the gap peaks at the right end.
    path.points
        .windows(2)
        .map(|w| (w[1].h - w[0].h).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model1d::tests::inverted_parabola;
    use crate::model1d::{FlatModelSpec, Potential, PotentialSpec, Restitution};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn two_well(c1: f64, c2: f64) -> FlatModel {
        FlatModel::new(FlatModelSpec::two_well(1.0, 1.0, 1.0, c1, c2, 1.0)).unwrap()
    }

    #[test]
    fn elastic_run_conserves_speed() {
        let m = two_well(1.0, 1.0);
        let stop = StopRule {
            collisions: Some(10_000),
            stop_at_well: false,
            ..StopRule::default()
        };
        let run = simulate_flat(&m, PhasePoint::new(0.3, 1.7), 0.0, &stop).unwrap();
        assert_eq!(run.log.len(), 10_000);
        assert!(run.log.iter().all(|r| r.post_speed == 1.7 && r.pre_speed == 1.7));
        let path = run.slow_path(0.0);
        assert!(path.points.iter().all(|p| p.h == path.points[0].h));
    }

    #[test]
    fn speed_after_n_hits_is_geometric() {
        let m = two_well(1.0, 1.0);
        let eps = 1e-3;
        let run = simulate_flat(&m, PhasePoint::new(0.3, 2.0), eps, &StopRule::default()).unwrap();
        assert!(run.well.is_some());
        for (n, r) in run.log.iter().enumerate() {
            let want = 2.0 * (1.0 - eps).powi(n as i32 + 1);
            assert_relative_eq!(r.post_speed, want, max_relative = 1e-12);
        }
        // the well is entered on the first hit below the middle wall height
        let last = run.log.last().unwrap();
        assert!(last.post_speed <= 1.0 && last.pre_speed > 1.0);
        let n = run.log.len() as f64;
        assert_eq!(n, ((0.5f64).ln() / (1.0 - eps).ln()).ceil());
    }

    #[test]
    fn flight_times_are_exact() {
        let m = two_well(1.0, 2.0);
        let run = simulate_flat(&m, PhasePoint::new(0.3, 2.0), 1e-2, &StopRule::default()).unwrap();
        let mut prev_t = 0.0;
        let mut prev_q = 0.3;
        let mut speed = 2.0;
        for r in &run.log {
            let q = m.spec.walls[r.wall];
            let want = (q - prev_q).abs() / speed;
            assert!((r.t - prev_t - want).abs() <= 1e-12 * r.t.max(1.0));
            prev_t = r.t;
            prev_q = q;
            speed = r.post_speed;
        }
    }

    #[test]
    fn collision_count_scales_like_inverse_eps() {
        let m = two_well(1.0, 1.0);
        let x = PhasePoint::new(0.3, 2.0);
        let n1 = simulate_flat(&m, x, 1e-2, &StopRule::default()).unwrap().collisions as f64;
        let n2 = simulate_flat(&m, x, 5e-3, &StopRule::default()).unwrap().collisions as f64;
        let r = n2 / n1;
        assert!((1.8..=2.2).contains(&r), "ratio {r}");
    }

    #[test]
    fn grazing_is_blocked() {
        // after one hit with eps c = 0.5 the speed is exactly the wall height
        let m = FlatModel::new(FlatModelSpec::two_well(1.0, 1.0, 1.0, 1.0, 1.0, 0.0)).unwrap();
        let run = simulate_flat(&m, PhasePoint::new(0.5, 2.0), 0.5, &StopRule::default()).unwrap();
        assert_eq!(run.log[0].post_speed, 1.0);
        assert_eq!(run.well, Some(1));
    }

    #[test]
    fn gap_is_linear_in_eps() {
        let m = two_well(1.0, 1.0);
        let x = PhasePoint::new(0.3, 2.0);
        let gap = |eps: f64| {
            let run = simulate_flat(&m, x, eps, &StopRule::default()).unwrap();
            let path = run.slow_path(eps);
            // independent evaluation: step function vs linear path just
            // before every collision
            let mut worst: f64 = 0.0;
            for w in path.points.windows(2) {
                let t = w[1].t - 1e-9 * (w[1].t - w[0].t);
                let lin = path.eval(&m.graph, t).unwrap().h;
                worst = worst.max((lin - w[0].h).abs());
            }
            let max_loss = run
                .log
                .iter()
                .map(|r| 0.5 * (r.pre_speed.powi(2) - r.post_speed.powi(2)))
                .fold(0.0, f64::max);
            assert!(worst <= 2.0 * max_loss);
            assert!((worst - step_gap(&path)).abs() < 1e-6 * worst);
            worst
        };
        let r = gap(1e-3) / gap(5e-4);
        assert!((1.7..=2.3).contains(&r), "ratio {r}");
    }

    #[test]
    fn single_collision_path() {
        let m = two_well(1.0, 1.0);
        let stop = StopRule {
            collisions: Some(1),
            stop_at_well: false,
            horizon: Some(0.01),
            ..StopRule::default()
        };
        let run = simulate_flat(&m, PhasePoint::new(0.5, 2.0), 1e-2, &stop).unwrap();
        let path = run.slow_path(1e-2);
        assert_eq!(path.points.len(), 2);
        let stop = StopRule {
            horizon: Some(0.01),
            stop_at_well: false,
            ..StopRule::default()
        };
        let run = simulate_flat(&m, PhasePoint::new(0.5, 2.0), 1e-2, &stop).unwrap();
        let path = run.slow_path(1e-2);
        // hits at t = 0.25 and 1.25 physical; horizon 1.0 physical
        assert_eq!(run.log.len(), 1);
        assert_eq!(path.points.len(), 3);
        assert_relative_eq!(run.end_time, 0.01);
    }

    #[test]
    fn harmonic_energy_drift() {
        let f = Potential::Quadratic {
            k: 2.0,
            center: 0.0,
            offset: 0.0,
        };
        let x0 = PhasePoint::new(0.3, 0.4);
        let h0 = 0.5 * 0.4 * 0.4 + 0.09;
        let period = core::f64::consts::PI * 2f64.sqrt();
        let x1 = symplectic_flight(&f, x0, period, 1e-3);
        assert!((0.5 * x1.p * x1.p + f.value(x1.q) - h0).abs() < 1e-9);
        assert!((x1.q - x0.q).abs() < 1e-9 && (x1.p - x0.p).abs() < 1e-9);
    }

    #[test]
    fn elastic_reflections_keep_energy() {
        // single well with walls far outside the oscillation
        let spec = PotentialSpec {
            potential: Potential::Quadratic {
                k: -1.0,
                center: 0.0,
                offset: 0.0,
            },
            a1: -1.0,
            a2: 1.0,
            c1: Restitution::constant(1.0),
            c2: Restitution::constant(1.0),
        };
        let m = PotentialModel::new(spec).unwrap();
        let stop = StopRule {
            collisions: Some(20),
            stop_at_well: false,
            ..StopRule::default()
        };
        let run = simulate_potential(&m, PhasePoint::new(0.1, 1.0), 0.0, &stop).unwrap();
        let h0 = m.energy(PhasePoint::new(0.1, 1.0));
        for r in &run.log {
            assert!((r.energy_after - h0).abs() < 1e-9, "{}", r.energy_after - h0);
        }
        assert_eq!(run.collisions, 20);
    }

    #[test]
    fn potential_reflection_loss() {
        let m = inverted_parabola();
        let eps = 1e-2;
        let stop = StopRule {
            collisions: Some(30),
            stop_at_well: false,
            ..StopRule::default()
        };
        let run = simulate_potential(&m, PhasePoint::new(0.2, 1.5), eps, &stop).unwrap();
        let mut h = m.energy(PhasePoint::new(0.2, 1.5));
        for r in &run.log {
            let v = r.pre_speed;
            let c = if r.wall == 0 { 1.0 } else { 2.0 };
            let dh = h - r.energy_after;
            assert_relative_eq!(dh, eps * c * v * v * (1.0 - 0.5 * eps * c), max_relative = 1e-8);
            h = r.energy_after;
        }
    }

    #[test]
    fn potential_run_ends_in_a_well() {
        let m = inverted_parabola();
        let run = simulate_potential(&m, PhasePoint::new(0.2, 1.0), 2e-2, &StopRule::default()).unwrap();
        let w = run.well.unwrap();
        assert!(w == potential_edge::LEFT || w == potential_edge::RIGHT);
        assert!(run.end.h <= m.vertex_energy);
        assert!(run.log.windows(2).all(|p| p[1].energy_after < p[0].energy_after));
    }

    #[test]
    fn outcome_flips_with_eps() {
        // sensitivity of the terminal well to eps
        let m = inverted_parabola();
        let x0 = PhasePoint::new(0.2, 1.0);
        let mut prev: Option<(f64, usize)> = None;
        let mut witness = None;
        for i in 0..60 {
            let eps = 2e-2 * (1.0 + 0.01 * i as f64);
            let w = simulate_potential(&m, x0, eps, &StopRule::default()).unwrap().well.unwrap();
            if let Some((e0, w0)) = prev {
                if w0 != w && (eps - e0) / e0 < 0.05 {
                    witness = Some((e0, eps));
                    break;
                }
            }
            prev = Some((eps, w));
        }
        assert!(witness.is_some());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn energy_strictly_decreases(
            c1 in 0.1f64..3.0, c2 in 0.1f64..3.0, p0 in 1.2f64..4.0, q0 in -0.99f64..0.99,
            eps in 1e-3f64..5e-2,
        ) {
            let m = two_well(c1, c2);
            let run = simulate_flat(&m, PhasePoint::new(q0, p0), eps, &StopRule::default()).unwrap();
            for w in run.log.windows(2) {
                prop_assert!(w[1].energy_after < w[0].energy_after);
            }
            prop_assert!(run.well.is_some());
        }

        #[test]
        fn projection_constant_in_free_flight(q0 in -0.99f64..0.99, p0 in -3.0f64..3.0) {
            let m = two_well(1.0, 1.0);
            prop_assume!(p0.abs() > 1e-3);
            let stop = StopRule { collisions: Some(1), stop_at_well: false, ..StopRule::default() };
            let run = simulate_flat(&m, PhasePoint::new(q0, p0), 0.0, &stop).unwrap();
            let before = m.project(PhasePoint::new(q0, p0));
            let during = m.project(PhasePoint::new(0.5 * (q0 + m.spec.walls[run.log[0].wall]), p0));
            prop_assert_eq!(before, during);
        }

        #[test]
        fn deterministic_logs(p0 in 1.1f64..3.0, eps in 1e-3f64..1e-2) {
            let m = two_well(2.0, 1.0);
            let a = simulate_flat(&m, PhasePoint::new(0.1, p0), eps, &StopRule::default()).unwrap();
            let b = simulate_flat(&m, PhasePoint::new(0.1, p0), eps, &StopRule::default()).unwrap();
            prop_assert_eq!(a.log, b.log);
        }
    }
}
