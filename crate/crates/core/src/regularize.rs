//! Random initial points and random restitution perturbations for the flat
//! model, the exact strip decomposition of the two-well branching, and the
//! three-well geometry on which initial noise fails to regularize.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::math::brent;
use crate::model1d::{FlatModel, FlatModelSpec, PhasePoint, Restitution};
use crate::noise::NoiseLaw;
use crate::prelude::*;
use crate::rng::{channel, experiment, StreamKey, StreamRng};
use crate::runner::ReplicaRunner;
use crate::sim1d::{simulate_flat_with, Quiet, Run1d, StopRule, WallNoise};
use crate::stats::Proportion;
use crate::walk::{AlternatingWalk, StepLaw};

/// Radial density of the initial perturbation on the disk of radius
/// `delta` in the `(q, p)` plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitDensity {
    /// Proportional to `(1 - r^2 / delta^2)^2`.
    #[default]
    Bump,
    Uniform,
    /// Proportional to `1 - r / delta`.
    Cone,
}

impl InitDensity {
    /// Unnormalized density at `r / delta`, equal to 1 at the centre.
    pub fn shape(self, rho: f64) -> f64 {
        if rho >= 1.0 {
            return 0.0;
        }
        match self {
            InitDensity::Bump => (1.0 - rho * rho).powi(2),
            InitDensity::Uniform => 1.0,
            InitDensity::Cone => 1.0 - rho,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitNoise {
    pub delta: f64,
    #[serde(default)]
    pub density: InitDensity,
}

impl InitNoise {
    pub fn new(delta: f64, density: InitDensity) -> Self {
        InitNoise { delta, density }
    }

    /// Offset `(dq, dp)` drawn by rejection from the uniform disk.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        loop {
            let u: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let v: f64 = 2.0 * rng.random::<f64>() - 1.0;
            let r2 = u * u + v * v;
            if r2 >= 1.0 {
                continue;
            }
            let accept: f64 = rng.random();
            if accept < self.density.shape(r2.sqrt()) {
                return (self.delta * u, self.delta * v);
            }
        }
    }
}

/// Per-wall laws of the restitution perturbation and its amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynNoise {
    pub delta: f64,
    pub laws: Vec<NoiseLaw>,
}

impl DynNoise {
    /// Same law on every one of `walls` walls.
    pub fn uniform_walls(delta: f64, law: NoiseLaw, walls: usize) -> Self {
        DynNoise {
            delta,
            laws: vec![law; walls],
        }
    }

    pub fn validate(&self, walls: usize) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(param("delta", format!("{} must be positive", self.delta)));
        }
        if self.laws.len() != walls {
            return Err(param(
                "noise",
                format!("{walls} walls need {walls} noise laws, got {}", self.laws.len()),
            ));
        }
        for law in &self.laws {
            law.validate()?;
            if law.support().0 <= 0.0 {
                return Err(param("noise", "noise must be bounded away from zero"));
            }
        }
        Ok(())
    }

    /// `(alpha, beta)` over all walls.
    pub fn bounds(&self) -> (f64, f64) {
        self.laws.iter().fold((f64::INFINITY, 0.0), |(a, b), l| {
            let (lo, hi) = l.support();
            (a.min(lo), b.max(hi))
        })
    }

    /// Restitution laws shifted by `delta E noise`, the coefficients that
    /// govern the limit.
    pub fn shifted(&self, restitution: &[Restitution]) -> Vec<Restitution> {
        restitution
            .iter()
            .zip(&self.laws)
            .map(|(r, l)| r.shifted(self.delta * l.mean()))
            .collect()
    }
}

/// Lazily opened per-wall streams; the `k`-th hit on a wall consumes the
/// `k`-th variate of that wall's stream.
#[derive(Debug)]
pub struct WallStreams<'a> {
    noise: &'a DynNoise,
    key: StreamKey,
    rngs: Vec<Option<StreamRng>>,
}

impl<'a> WallStreams<'a> {
    pub fn new(noise: &'a DynNoise, key: StreamKey) -> Self {
        WallStreams {
            noise,
            key,
            rngs: (0..noise.laws.len()).map(|_| None).collect(),
        }
    }
}

impl WallNoise for WallStreams<'_> {
    fn next(&mut self, wall: usize) -> f64 {
        let key = self.key;
        let rng = self.rngs[wall].get_or_insert_with(|| key.with_channel(channel::wall(wall)).rng());
        self.noise.delta * self.noise.laws[wall].sample(rng)
    }
}

/// A regularization scheme for the branching experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum Regularization {
    Initial(InitNoise),
    Dynamic(DynNoise),
}

/// Size and seed of a Monte Carlo ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub replicas: u64,
    pub seed: u64,
}

/// Terminal-well counts over an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchingEstimate {
    pub replicas: u64,
    /// Replicas that returned an error.
    pub failures: u64,
    /// Replicas that ended without entering a well.
    pub undecided: u64,
    /// Counts indexed by leaf edge id.
    pub counts: Vec<u64>,
    pub first_error: Option<Error>,
}

impl BranchingEstimate {
    fn from_outcomes(leaves: usize, outcomes: Vec<Result<Option<usize>>>) -> Self {
        let mut est = BranchingEstimate {
            replicas: outcomes.len() as u64,
            failures: 0,
            undecided: 0,
            counts: vec![0; leaves],
            first_error: None,
        };
        for o in outcomes {
            match o {
                Ok(Some(w)) => est.counts[w] += 1,
                Ok(None) => est.undecided += 1,
                Err(e) => {
                    est.failures += 1;
                    est.first_error.get_or_insert(e);
                }
            }
        }
        est
    }

    pub fn decided(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Frequency of `well` among decided replicas.
    pub fn proportion(&self, well: usize, z: f64) -> Proportion {
        Proportion::new(self.counts[well], self.decided(), z)
    }

    /// Frequency of `a` among replicas ending in `a` or `b`.
    pub fn conditional(&self, a: usize, b: usize, z: f64) -> Proportion {
        Proportion::new(self.counts[a], self.counts[a] + self.counts[b], z)
    }
}

fn stop_at_well() -> StopRule {
    StopRule {
        record: false,
        ..StopRule::default()
    }
}

/// One replica started from `x0` plus a sampled offset.
pub fn init_noise_replica(model: &FlatModel, x0: PhasePoint, noise: &InitNoise, eps: f64, stop: &StopRule, seed: u64, replica: u64) -> Result<Run1d> {
    let mut rng = StreamKey::new(seed, experiment::INIT_NOISE, replica, channel::INITIAL).rng();
    let (dq, dp) = noise.sample(&mut rng);
    let x = PhasePoint::new(x0.q + dq, x0.p + dp);
    simulate_flat_with(model, x, eps, stop, &mut Quiet)
}

/// One replica with per-wall noise streams.
pub fn dyn_noise_replica(model: &FlatModel, x0: PhasePoint, noise: &DynNoise, eps: f64, stop: &StopRule, seed: u64, replica: u64) -> Result<Run1d> {
    let key = StreamKey::new(seed, experiment::DYN_NOISE, replica, 0);
    simulate_flat_with(model, x0, eps, stop, &mut WallStreams::new(noise, key))
}

fn check_init(model: &FlatModel, x0: PhasePoint, noise: &InitNoise) -> Result<()> {
    if !(noise.delta > 0.0 && noise.delta.is_finite()) {
        return Err(param("delta", "initial noise radius must be positive"));
    }
    let w = &model.spec.walls;
    if x0.q - noise.delta < w[0] || x0.q + noise.delta > w[w.len() - 1] {
        return Err(param("x0", "the perturbation disk leaves the wall range"));
    }
    let root = &model.graph.edges[model.graph.root()];
    if x0.p.abs() - noise.delta <= (2.0 * root.floor).sqrt() {
        return Err(param(
            "x0",
            "perturbed starts must stay above the highest vertex",
        ));
    }
    Ok(())
}

/// Terminal wells under random initial points.
pub fn simulate_with_init_noise<R: ReplicaRunner>(model: &FlatModel, x0: PhasePoint, noise: &InitNoise, eps: f64, ensemble: Ensemble, runner: &R) -> Result<BranchingEstimate> {
    check_init(model, x0, noise)?;
    let stop = stop_at_well();
    let outcomes = runner.map(ensemble.replicas, |i| {
        init_noise_replica(model, x0, noise, eps, &stop, ensemble.seed, i).map(|r| r.well)
    });
    Ok(BranchingEstimate::from_outcomes(model.graph.leaves().len(), outcomes))
}

/// Terminal wells under random restitution perturbations.
pub fn simulate_with_dyn_noise<R: ReplicaRunner>(model: &FlatModel, x0: PhasePoint, noise: &DynNoise, eps: f64, ensemble: Ensemble, runner: &R) -> Result<BranchingEstimate> {
    noise.validate(model.wall_count())?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(param("eps", "must lie in (0, 1)"));
    }
    let stop = stop_at_well();
    let outcomes = runner.map(ensemble.replicas, |i| {
        dyn_noise_replica(model, x0, noise, eps, &stop, ensemble.seed, i).map(|r| r.well)
    });
    Ok(BranchingEstimate::from_outcomes(model.graph.leaves().len(), outcomes))
}

/// Either scheme.
pub fn branching<R: ReplicaRunner>(model: &FlatModel, x0: PhasePoint, reg: &Regularization, eps: f64, ensemble: Ensemble, runner: &R) -> Result<BranchingEstimate> {
    match reg {
        Regularization::Initial(n) => simulate_with_init_noise(model, x0, n, eps, ensemble, runner),
        Regularization::Dynamic(n) => simulate_with_dyn_noise(model, x0, n, eps, ensemble, runner),
    }
}

/// Exact split of a momentum window into the parts that end in each well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripDecomposition {
    /// Measure ending in the left well over the measure ending in the right.
    pub ratio: f64,
    /// Disk-weighted measures `[left well, right well]`.
    pub measures: [f64; 2],
    /// Strips meeting the window.
    pub strips: usize,
    /// Narrowest and widest strip fully inside the window.
    pub min_width: f64,
    pub max_width: f64,
}

/// Inverse of `v -> v (1 - eps c(v))`, assumed increasing.
fn invert_reflection(c: &Restitution, eps: f64, y: f64) -> Result<f64> {
    if let Some(c) = c.as_constant() {
        return Ok(y / (1.0 - eps * c));
    }
    let g = |v: f64| v * (1.0 - eps * c.eval(v)) - y;
    let mut hi = y * (1.0 + 2.0 * eps);
    let mut tries = 0;
    while g(hi) < 0.0 {
        hi *= 1.0 + 4.0 * eps;
        tries += 1;
        if tries > 10_000 {
            return Err(Error::RootFinding("reflection map not invertible".into()));
        }
    }
    brent(g, y, hi, 1e-15 * y)
}

/// Disk-weighted measure of momenta in the window strips of the two-well
/// model around `x`, classified by the well each strip falls into.
///
/// The measure of `(lo, hi]` is the area of the disk of radius `radius`
/// around `x` with momentum in that range. Errors when fewer than eight
/// strips meet the window.
pub fn strip_ratio(model: &FlatModel, x: PhasePoint, eps: f64, radius: f64) -> Result<StripDecomposition> {
    if model.wall_count() != 3 {
        return Err(param("model", "strip analysis needs the two-well model"));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(param("eps", "must lie in (0, 1)"));
    }
    let spec = &model.spec;
    let p_vertex = spec.height(1);
    let p0 = x.p.abs();
    if p0 - radius <= p_vertex {
        return Err(param("x", "the window must lie above the vertex height"));
    }
    // first wall hit, then the other one
    let (first, second) = if x.p > 0.0 { (2, 0) } else { (0, 2) };
    let c_first = &spec.restitution[first];
    let c_second = &spec.restitution[second];
    let back = |v: f64| -> Result<f64> {
        let u = invert_reflection(c_second, eps, v)?;
        invert_reflection(c_first, eps, u)
    };
    let chord_primitive = |p: f64| {
        let y = (p - p0).clamp(-radius, radius);
        y * (radius * radius - y * y).max(0.0).sqrt() + radius * radius * (y / radius).asin()
    };
    let (lo_w, hi_w) = (p0 - radius, p0 + radius);
    let mut even = p_vertex;
    let mut odd = invert_reflection(c_first, eps, p_vertex)?;
    let mut prev = even;
    // strip k is (b_{k-1}, b_k]: odd k ends at the first wall
    let mut k = 1u64;
    let mut measures = [0.0; 2];
    let mut strips = 0usize;
    let (mut min_width, mut max_width) = (f64::INFINITY, 0.0f64);
    let well_of = |wall: usize| if wall == 0 { 0 } else { 1 };
    loop {
        let b = if k % 2 == 1 { odd } else { even };
        if b > lo_w {
            let m = chord_primitive(b) - chord_primitive(prev);
            let wall = if k % 2 == 1 { first } else { second };
            measures[well_of(wall)] += m;
            strips += 1;
            if prev >= lo_w && b <= hi_w {
                min_width = min_width.min(b - prev);
                max_width = max_width.max(b - prev);
            }
        }
        if b >= hi_w {
            break;
        }
        prev = b;
        if k.is_multiple_of(2) {
            odd = back(odd)?;
        } else {
            even = back(even)?;
        }
        k += 1;
        if k > 100_000_000 {
            return Err(Error::StripResolution("strip iteration did not reach the window".into()));
        }
    }
    if strips < 8 {
        return Err(Error::StripResolution(format!(
            "only {strips} strips meet the window; eps is too large for radius {radius}"
        )));
    }
    Ok(StripDecomposition {
        ratio: measures[0] / measures[1],
        measures,
        strips,
        min_width,
        max_width,
    })
}

/// The two-well dynamics with perturbed restitution as a log-speed walk:
/// `n = floor(1/eps)` and `n lambda = ln(p0 / p(O)) / eps`. Returns the
/// walk and the well entered when the passage index is odd.
pub fn log_walk(model: &FlatModel, x0: PhasePoint, noise: &DynNoise, eps: f64) -> Result<(AlternatingWalk, usize)> {
    if model.wall_count() != 3 {
        return Err(param("model", "the walk reduction needs the two-well model"));
    }
    noise.validate(3)?;
    let (first, second) = if x0.p > 0.0 { (2, 0) } else { (0, 2) };
    let coef = |w: usize| {
        model.spec.restitution[w]
            .as_constant()
            .ok_or_else(|| param("restitution", "the walk reduction needs constant coefficients"))
    };
    let step = |w: usize| -> Result<StepLaw> {
        Ok(StepLaw::LogRestitution {
            c: coef(w)?,
            eps,
            delta: noise.delta,
            noise: noise.laws[w],
        })
    };
    let n = (1.0 / eps).floor() as u64;
    let p_vertex = model.spec.height(1);
    let lambda = (x0.p.abs() / p_vertex).ln() / (eps * n as f64);
    let walk = AlternatingWalk {
        odd: step(first)?,
        even: step(second)?,
        start: 0.0,
        lambda,
        n,
    };
    let odd_well = if first == 0 { 0 } else { 1 };
    Ok((walk, odd_well))
}

/// Three wells: well 1 on the left is separated from wells 2 and 3 at
/// height `p_a`, and wells 2 and 3 are separated from each other at
/// `p_b < p_a`. The outer-left wall has coefficient `c1`, the other walls `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig6Geometry {
    pub p_a: f64,
    pub p_b: f64,
    pub c1: f64,
    pub c: f64,
    #[serde(default = "unit")]
    pub width: f64,
}

fn unit() -> f64 {
    1.0
}

impl Fig6Geometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.p_a > self.p_b && self.p_b > 0.0) {
            return Err(param("geometry", "need p_a > p_b > 0"));
        }
        if !(self.c > 0.0 && self.c1 > 0.0 && self.width > 0.0) {
            return Err(param("geometry", "coefficients and width must be positive"));
        }
        Ok(())
    }

    pub fn spec(&self) -> FlatModelSpec {
        let w = self.width;
        FlatModelSpec {
            walls: vec![0.0, w, 2.0 * w, 3.0 * w],
            heights: vec![self.p_a, self.p_b],
            restitution: vec![
                Restitution::constant(self.c1),
                Restitution::constant(self.c),
                Restitution::constant(self.c),
                Restitution::constant(self.c),
            ],
        }
    }

    /// `eps` for which exactly `n` alternating hits take the speed from
    /// `p_a` to `p_b`.
    pub fn admissible_eps(&self, n: u32) -> f64 {
        -(-(self.p_a / self.p_b).ln() / n as f64).exp_m1() / self.c
    }

    /// Number of hits from `p_a` to `p_b` at this `eps`, as a real number.
    pub fn hits_between(&self, eps: f64) -> f64 {
        (self.p_a / self.p_b).ln() / -(-eps * self.c).ln_1p()
    }

    pub fn is_admissible(&self, eps: f64) -> bool {
        let n = self.hits_between(eps);
        (n - n.round()).abs() < 1e-6
    }
}

/// Terminal wells of the three-well geometry at one `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig6Row {
    pub eps: f64,
    pub hits: f64,
    pub admissible: bool,
    pub estimate: BranchingEstimate,
}

impl Fig6Row {
    /// Frequency of the middle well among runs ending in the two right wells.
    pub fn middle_share(&self, z: f64) -> Proportion {
        self.estimate.conditional(1, 2, z)
    }
}

/// Branching frequencies of the three-well geometry along `eps_list`.
pub fn fig6_counterexample<R: ReplicaRunner>(geometry: &Fig6Geometry, eps_list: &[f64], x0: PhasePoint, reg: &Regularization, ensemble: Ensemble, runner: &R) -> Result<Vec<Fig6Row>> {
    geometry.validate()?;
    let model = FlatModel::new(geometry.spec())?;
    eps_list
        .iter()
        .map(|&eps| {
            let estimate = branching(&model, x0, reg, eps, ensemble, runner)?;
            Ok(Fig6Row {
                eps,
                hits: geometry.hits_between(eps),
                admissible: geometry.is_admissible(eps),
                estimate,
            })
        })
        .collect()
}

/// Largest change of the middle-well share between consecutive admissible
/// rows.
pub fn fig6_swing(rows: &[Fig6Row]) -> f64 {
    let shares: Vec<f64> = rows
        .iter()
        .filter(|r| r.admissible)
        .map(|r| r.middle_share(1.0).estimate)
        .collect();
    shares
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{integrate, QuadTol};
    use crate::runner::Serial;
    use crate::sim1d::simulate_flat;

    fn two_well(c1: f64, c2: f64) -> FlatModel {
        FlatModel::new(FlatModelSpec::two_well(1.0, 1.0, 1.0, c1, c2, 1.0)).unwrap()
    }

    #[test]
    fn init_density_radial_profile() {
        // radial marginal of the bump is proportional to r (1 - r^2)^2
        let noise = InitNoise::new(1.0, InitDensity::Bump);
        let mut rng = StreamKey::new(3, 0, 0, 0).rng();
        let rs: Vec<f64> = (0..50_000)
            .map(|_| {
                let (a, b) = noise.sample(&mut rng);
                (a * a + b * b).sqrt()
            })
            .collect();
        let norm = integrate(|r| r * (1.0 - r * r).powi(2), 0.0, 1.0, QuadTol::default())
            .unwrap()
            .value;
        let cdf = |x: f64| {
            let x = x.clamp(0.0, 1.0);
            integrate(|r| r * (1.0 - r * r).powi(2), 0.0, x, QuadTol::default()).unwrap().value / norm
        };
        let d = crate::stats::ks_distance(&rs, cdf);
        assert!(d < 1.63 / (50_000f64).sqrt(), "D = {d}");
        assert!(rs.iter().all(|&r| r < 1.0));
    }

    #[test]
    fn strip_ratio_equal_coefficients() {
        let m = two_well(1.0, 1.0);
        let s = strip_ratio(&m, PhasePoint::new(0.3, 2.0), 1e-3, 0.2).unwrap();
        assert!((s.ratio - 1.0).abs() < 5e-3, "{}", s.ratio);
    }

    #[test]
    fn strip_ratio_tends_to_coefficient_ratio() {
        let m = two_well(2.0, 1.0);
        let s = strip_ratio(&m, PhasePoint::new(0.3, 2.0), 1e-3, 0.2).unwrap();
        assert!((s.ratio / 2.0 - 1.0).abs() < 5e-3, "{}", s.ratio);
        let coarse = strip_ratio(&m, PhasePoint::new(0.3, 2.0), 1e-2, 0.3).unwrap();
        assert!((coarse.ratio - 2.0).abs() < 0.1);
    }

    #[test]
    fn strip_widths_scale_with_eps() {
        let m = two_well(2.0, 1.0);
        let x = PhasePoint::new(0.3, 2.0);
        let a = strip_ratio(&m, x, 1e-2, 0.3).unwrap();
        let b = strip_ratio(&m, x, 1e-3, 0.3).unwrap();
        let (m1a, m2a) = (a.min_width / 1e-2, a.max_width / 1e-2);
        let (m1b, m2b) = (b.min_width / 1e-3, b.max_width / 1e-3);
        assert!(m1a > 0.5 && m2a < 10.0 && m1b > 0.5 && m2b < 10.0);
        assert!((m1a / m1b - 1.0).abs() < 0.2 && (m2a / m2b - 1.0).abs() < 0.2);
    }

    #[test]
    fn strip_ratio_needs_resolution() {
        let m = two_well(2.0, 1.0);
        let e = strip_ratio(&m, PhasePoint::new(0.3, 2.0), 1e-1, 0.01);
        assert!(matches!(e, Err(Error::StripResolution(_))));
    }

    #[test]
    fn strip_ratio_against_exhaustive_classification() {
        let m = two_well(2.0, 1.0);
        let (eps, radius, p0) = (1e-3, 0.05, 2.0);
        let s = strip_ratio(&m, PhasePoint::new(0.3, p0), eps, radius).unwrap();
        let n = 100_000;
        let mut w = [0.0; 2];
        for i in 0..n {
            let p = p0 - radius + 2.0 * radius * (i as f64 + 0.5) / n as f64;
            let chord = 2.0 * (radius * radius - (p - p0).powi(2)).sqrt();
            let well = simulate_flat(&m, PhasePoint::new(0.3, p), eps, &stop_at_well())
                .unwrap()
                .well
                .unwrap();
            w[well] += chord;
        }
        let brute = w[0] / w[1];
        assert!((brute - s.ratio).abs() < 1e-2, "{brute} vs {}", s.ratio);
    }

    #[test]
    fn fig6_admissible_sequence() {
        let g = Fig6Geometry {
            p_a: 2.0,
            p_b: 1.0,
            c1: 3.0,
            c: 1.0,
            width: 1.0,
        };
        for n in [50, 51, 100] {
            let eps = g.admissible_eps(n);
            assert!((g.hits_between(eps) - n as f64).abs() < 1e-9);
            assert!(g.is_admissible(eps));
            // (1 - eps c)^n = p_b / p_a
            assert!(((1.0 - eps * g.c).powi(n as i32) - 0.5).abs() < 1e-12);
        }
        assert!(!g.is_admissible(0.5 * (g.admissible_eps(50) + g.admissible_eps(51))));
        let m = FlatModel::new(g.spec()).unwrap();
        assert_eq!(m.graph.leaves(), vec![0, 1, 2]);
    }

    #[test]
    fn dyn_noise_scale_free() {
        // scaling coefficients and noise together leaves the ratio unchanged
        let law = NoiseLaw::uniform(0.1, 2.9);
        let noise = DynNoise::uniform_walls(0.1, law, 3);
        let m = two_well(2.0, 1.0);
        let shifted = noise.shifted(&m.spec.restitution);
        let p = |r: &[Restitution]| r[0].eval(1.0) / (r[0].eval(1.0) + r[2].eval(1.0));
        let scaled: Vec<Restitution> = shifted.iter().map(|r| r.scaled(3.0)).collect();
        assert!((p(&shifted) - p(&scaled)).abs() < 1e-15);
        assert!((p(&shifted) - 2.15 / 3.3).abs() < 1e-12);
    }

    #[test]
    fn log_walk_bridge_levels() {
        let law = NoiseLaw::uniform(0.1, 2.9);
        let noise = DynNoise::uniform_walls(0.1, law, 3);
        let m = two_well(2.0, 1.0);
        let (walk, odd_well) = log_walk(&m, PhasePoint::new(0.3, 4.0), &noise, 1e-3).unwrap();
        assert_eq!(odd_well, 1);
        assert!((walk.level() - 4f64.ln() / 1e-3).abs() < 1e-9);
        assert_eq!(walk.n, 1000);
        // even steps come from the left wall
        let ratio = walk.limit_even();
        assert!((ratio - 2.15 / 3.3).abs() < 2e-3);
    }

    #[test]
    fn replicas_are_reproducible() {
        let m = two_well(2.0, 1.0);
        let law = NoiseLaw::uniform(0.1, 2.9);
        let noise = DynNoise::uniform_walls(0.1, law, 3);
        let ens = Ensemble { replicas: 50, seed: 5 };
        let a = simulate_with_dyn_noise(&m, PhasePoint::new(0.3, 4.0), &noise, 1e-2, ens, &Serial).unwrap();
        let b = simulate_with_dyn_noise(&m, PhasePoint::new(0.3, 4.0), &noise, 1e-2, ens, &Serial).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.decided(), 50);
    }

    #[test]
    fn init_noise_rejects_low_start() {
        let m = two_well(1.0, 1.0);
        let noise = InitNoise::new(0.2, InitDensity::Bump);
        let ens = Ensemble { replicas: 1, seed: 0 };
        assert!(simulate_with_init_noise(&m, PhasePoint::new(0.0, 1.1), &noise, 1e-3, ens, &Serial).is_err());
    }
}
