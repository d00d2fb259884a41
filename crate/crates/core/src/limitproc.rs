//! The limiting process on the energy graph: deterministic decay along
//! each edge, a random choice of lower edge at every vertex.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::math::{dopri5, integrate, OdeTol, QuadTol};
use crate::model1d::{potential_edge, FlatModel, GraphPoint, PotentialModel, ReebGraph, Restitution};
use crate::path::{GraphPath, PathPoint};
use crate::prelude::*;
use crate::regularize::DynNoise;
use crate::rng::{channel, experiment, StreamKey};

/// Right-hand side of `dH/dt` on one edge.
#[derive(Debug, Clone, PartialEq)]
pub enum FlowLaw {
    /// Free motion between two walls `width` apart with speed-dependent
    /// coefficients: `dH/dt = -2 (c_l + c_r) H / T(H)`, `T = 2 width / sqrt(2H)`.
    Flat {
        width: f64,
        left: Restitution,
        right: Restitution,
    },
    /// Edge of a smooth-potential model; coefficients depend on energy.
    Potential { model: Box<PotentialModel>, edge: usize },
    /// `d sqrt(H) / dt = -rate`.
    SqrtDecay { rate: f64 },
}

/// Flow on an edge whose energies lie above `floor`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFlow {
    pub edge: usize,
    pub floor: f64,
    /// Whether reaching the floor means reaching a vertex.
    pub ends_at_vertex: bool,
    pub law: FlowLaw,
}

impl EdgeFlow {
    /// `dH/dt` at energy `h`; zero at or below the floor.
    pub fn rhs(&self, h: f64) -> Result<f64> {
        if h <= self.floor {
            return Ok(0.0);
        }
        match &self.law {
            FlowLaw::Flat { width, left, right } => {
                let v = (2.0 * h).sqrt();
                Ok(-(left.eval(v) + right.eval(v)) * h * v / width)
            }
            FlowLaw::SqrtDecay { rate } => Ok(-2.0 * rate * h.sqrt()),
            FlowLaw::Potential { model, edge } => {
                let eta = model.default_eta();
                if h <= self.floor + eta || (h - model.vertex_energy).abs() <= eta {
                    return Ok(0.0);
                }
                potential_rhs(model, *edge, h, eta)
            }
        }
    }

    /// Closed-form `H(t)` where available.
    pub fn closed_form(&self, h0: f64, t: f64) -> Option<f64> {
        match &self.law {
            FlowLaw::Flat { width, left, right } => {
                let c = left.as_constant()? + right.as_constant()?;
                let s = t * c / (2f64.sqrt() * width) + h0.powf(-0.5);
                Some(s.powi(-2).max(self.floor))
            }
            FlowLaw::SqrtDecay { rate } => {
                let s = (h0.sqrt() - rate * t).max(self.floor.sqrt());
                Some(s * s)
            }
            FlowLaw::Potential { .. } => None,
        }
    }

    /// Time to go from `h0` down to `target`.
    pub fn hitting_time(&self, h0: f64, target: f64) -> Result<f64> {
        if target > h0 {
            return Err(param("target", format!("target energy {target} is above the start {h0}")));
        }
        if target < self.floor {
            return Err(Error::EnergyDomain {
                edge: self.edge,
                energy: target,
                floor: self.floor,
                ceiling: f64::INFINITY,
            });
        }
        if target == h0 {
            return Ok(0.0);
        }
        match &self.law {
            FlowLaw::Flat { width, left, right } => {
                if let (Some(a), Some(b)) = (left.as_constant(), right.as_constant()) {
                    if a + b == 0.0 {
                        return Ok(f64::INFINITY);
                    }
                    return Ok(2f64.sqrt() * width / (a + b) * (target.powf(-0.5) - h0.powf(-0.5)));
                }
                self.quadrature_time(h0, target)
            }
            FlowLaw::SqrtDecay { rate } => Ok((h0.sqrt() - target.sqrt()) / rate),
            FlowLaw::Potential { .. } => self.quadrature_time(h0, target),
        }
    }

    fn quadrature_time(&self, h0: f64, target: f64) -> Result<f64> {
        let integrand = |z: f64| -> f64 {
            match self.rhs_exact(z) {
                Ok(r) if r < 0.0 => -1.0 / r,
                _ => f64::INFINITY,
            }
        };
        // Energies within eta of the floor are not resolved in floating
        // point; the integrand there behaves like |log(H - floor)| above a
        // vertex and like (H - floor)^(-1/2) above a leaf floor.
        let eta = match &self.law {
            FlowLaw::Potential { model, .. } => model.default_eta(),
            _ => 0.0,
        };
        let lower = target.max(self.floor + eta).min(h0);
        let q = integrate(integrand, lower, h0, QuadTol::new(1e-13, 1e-12))?;
        let gap = lower - target;
        let tail = if gap > 0.0 {
            let factor = if self.ends_at_vertex { 1.0 } else { 2.0 };
            factor * gap * integrand(lower)
        } else {
            0.0
        };
        Ok(q.value + tail)
    }

    /// Like [`EdgeFlow::rhs`] but without the cutoffs.
    fn rhs_exact(&self, h: f64) -> Result<f64> {
        match &self.law {
            FlowLaw::Potential { model, edge } => potential_rhs(model, *edge, h, 0.0),
            _ => self.rhs(h),
        }
    }

    /// Time at which the flow started at `h0` leaves the edge; infinite when
    /// the floor is never reached or is not a vertex.
    pub fn exit_time(&self, h0: f64) -> Result<f64> {
        if !self.ends_at_vertex {
            return Ok(f64::INFINITY);
        }
        self.hitting_time(h0, self.floor)
    }

    /// `H(t)` starting from `h0`; errors past the vertex-hitting time.
    pub fn edge_solution(&self, h0: f64, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(param("t", "must be non-negative"));
        }
        if h0 <= self.floor || t == 0.0 {
            return Ok(h0);
        }
        let exit = self.exit_time(h0)?;
        if t > exit {
            return Err(Error::BeyondExit { t, exit });
        }
        if let Some(h) = self.closed_form(h0, t) {
            return Ok(h);
        }
        let floor = self.floor;
        let h = dopri5(
            |_, h| if h <= floor { Ok(0.0) } else { self.rhs(h) },
            0.0,
            h0,
            t,
            OdeTol {
                rel: 1e-10,
                abs: 1e-14 * h0.abs().max(1.0),
                max_steps: 1_000_000,
            },
        )?;
        Ok(h.max(floor))
    }
}

fn potential_rhs(model: &PotentialModel, edge: usize, h: f64, eta: f64) -> Result<f64> {
    let f = &model.spec.potential;
    let (a1, a2) = (model.spec.a1, model.spec.a2);
    let k1 = (h - f.value(a1)).max(0.0);
    let k2 = (h - f.value(a2)).max(0.0);
    let c1 = model.spec.c1.eval(h);
    let c2 = model.spec.c2.eval(h);
    let tol = QuadTol::new(1e-14, 1e-12);
    let loss = match edge {
        potential_edge::UPPER => c1 * k1 + c2 * k2,
        potential_edge::LEFT => c1 * k1,
        _ => c2 * k2,
    };
    let period = model.period_with(edge, h, eta, tol)?.value;
    Ok(-2.0 * loss / period)
}

/// Branching law at a vertex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VertexKernel {
    pub vertex: usize,
    pub p_left: f64,
}

impl VertexKernel {
    pub fn p_right(&self) -> f64 {
        1.0 - self.p_left
    }
}

/// Graph, flows on every edge and kernels at every vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct LimitModel {
    pub graph: ReebGraph,
    pub flows: Vec<EdgeFlow>,
    pub kernels: Vec<VertexKernel>,
}

impl LimitModel {
    /// Limit of the flat model. With `noise`, each coefficient is shifted by
    /// `delta E noise` of its wall.
    pub fn flat(model: &FlatModel, noise: Option<&DynNoise>) -> Result<Self> {
        let coeffs = match noise {
            Some(n) => {
                n.validate(model.wall_count())?;
                n.shifted(&model.spec.restitution)
            }
            None => model.spec.restitution.clone(),
        };
        let graph = model.graph.clone();
        let flows = graph
            .edges
            .iter()
            .map(|e| EdgeFlow {
                edge: e.id,
                floor: e.floor,
                ends_at_vertex: e.lower_vertex.is_some(),
                law: FlowLaw::Flat {
                    width: e.span.1 - e.span.0,
                    left: coeffs[e.walls.0].clone(),
                    right: coeffs[e.walls.1].clone(),
                },
            })
            .collect();
        let kernels = graph
            .vertices
            .iter()
            .map(|v| {
                let (lw, rw) = graph.edges[v.upper].walls;
                let speed = (2.0 * v.energy).sqrt();
                let (cl, cr) = (coeffs[lw].eval(speed), coeffs[rw].eval(speed));
                VertexKernel {
                    vertex: v.id,
                    // without friction the vertex is never reached
                    p_left: if cl + cr > 0.0 { cl / (cl + cr) } else { 0.5 },
                }
            })
            .collect();
        let m = LimitModel { graph, flows, kernels };
        m.validate()?;
        Ok(m)
    }

    /// Limit of the smooth-potential model.
    pub fn potential(model: &PotentialModel) -> Result<Self> {
        let graph = model.graph.clone();
        let flows = graph
            .edges
            .iter()
            .map(|e| EdgeFlow {
                edge: e.id,
                floor: e.floor,
                ends_at_vertex: e.lower_vertex.is_some(),
                law: FlowLaw::Potential {
                    model: Box::new(model.clone()),
                    edge: e.id,
                },
            })
            .collect();
        let h = model.vertex_energy;
        let (c1, c2) = (model.spec.c1.eval(h), model.spec.c2.eval(h));
        let m = LimitModel {
            graph,
            flows,
            kernels: vec![VertexKernel {
                vertex: 0,
                p_left: c1 / (c1 + c2),
            }],
        };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        for k in &self.kernels {
            if !(k.p_left >= 0.0 && k.p_left <= 1.0) {
                return Err(param(
                    "kernel",
                    format!("vertex {} has branching probability {}", k.vertex, k.p_left),
                ));
            }
        }
        Ok(())
    }

    /// Exact law of the terminal leaf when starting on edge `from`.
    pub fn terminal_law(&self, from: usize) -> Vec<f64> {
        let mut law = vec![0.0; self.graph.edges.len()];
        for leaf in self.graph.leaves() {
            if !self.graph.is_ancestor(from, leaf) {
                continue;
            }
            let mut p = 1.0;
            let chain = self.graph.ancestry(leaf);
            let stop = chain.iter().position(|&e| e == from).expect("ancestor");
            for w in chain[..=stop].windows(2) {
                let v = self.graph.edges[w[1]].lower_vertex.expect("internal edge");
                let k = &self.kernels[v];
                p *= if self.graph.vertices[v].left == w[0] {
                    k.p_left
                } else {
                    k.p_right()
                };
            }
            law[leaf] = p;
        }
        law
    }

    /// Follows the flows from `y0` up to `horizon`, asking `choose` for the
    /// branch (`true` for right) at each vertex.
    pub fn trace<F: FnMut(&VertexKernel) -> bool>(&self, y0: GraphPoint, horizon: f64, mut choose: F) -> Result<LimitPath> {
        let mut segments = Vec::new();
        let (mut t, mut y) = (0.0, y0);
        loop {
            let flow = &self.flows[y.edge];
            let exit = flow.exit_time(y.h)?;
            if t + exit >= horizon {
                segments.push(Segment {
                    edge: y.edge,
                    t0: t,
                    t1: horizon,
                    h0: y.h,
                });
                break;
            }
            segments.push(Segment {
                edge: y.edge,
                t0: t,
                t1: t + exit,
                h0: y.h,
            });
            let v = self.graph.edges[y.edge].lower_vertex.expect("exit implies a vertex");
            let right = choose(&self.kernels[v]);
            let vert = &self.graph.vertices[v];
            y = GraphPoint {
                h: vert.energy,
                edge: if right { vert.right } else { vert.left },
            };
            t += exit;
        }
        Ok(LimitPath {
            segments,
            horizon,
        })
    }

    /// Sample path with branch choices drawn from a keyed stream.
    pub fn sample_path(&self, y0: GraphPoint, horizon: f64, seed: u64, replica: u64) -> Result<LimitPath> {
        let mut rng = StreamKey::new(seed, experiment::LIMIT_PATH, replica, channel::BRANCH).rng();
        self.trace(y0, horizon, |k| rng.random::<f64>() >= k.p_left)
    }

    /// Path that takes the branches towards `leaf`.
    pub fn path_to(&self, y0: GraphPoint, horizon: f64, leaf: usize) -> Result<LimitPath> {
        let route = self.graph.route(leaf);
        self.trace(y0, horizon, |k| {
            route
                .iter()
                .find(|(v, _)| *v == k.vertex)
                .map(|(_, right)| *right)
                .unwrap_or(false)
        })
    }
}

/// Piece of a limit path on one edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub edge: usize,
    pub t0: f64,
    pub t1: f64,
    pub h0: f64,
}

/// A sample path of the limit process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitPath {
    pub segments: Vec<Segment>,
    pub horizon: f64,
}

impl LimitPath {
    pub fn terminal_edge(&self) -> usize {
        self.segments.last().expect("paths have a segment").edge
    }

    /// Times at which the path passes a vertex.
    pub fn vertex_times(&self) -> Vec<f64> {
        self.segments.iter().skip(1).map(|s| s.t0).collect()
    }

    pub fn eval(&self, model: &LimitModel, t: f64) -> Result<GraphPoint> {
        let s = self
            .segments
            .iter()
            .find(|s| t >= s.t0 && t <= s.t1)
            .ok_or_else(|| param("t", format!("{t} outside the path")))?;
        let h = model.flows[s.edge].edge_solution(s.h0, t - s.t0)?;
        Ok(GraphPoint { h, edge: s.edge })
    }

    /// Dense polyline with `per_segment` pieces on each edge.
    pub fn to_graph_path(&self, model: &LimitModel, per_segment: usize) -> Result<GraphPath> {
        let mut points = Vec::new();
        let n = per_segment.max(1);
        for s in &self.segments {
            let flow = &model.flows[s.edge];
            for i in 0..=n {
                let tau = (s.t1 - s.t0) * i as f64 / n as f64;
                let h = match flow.edge_solution(s.h0, tau) {
                    Ok(h) => h,
                    // the last node may land a rounding error past the exit
                    Err(Error::BeyondExit { .. }) => flow.floor,
                    Err(e) => return Err(e),
                };
                points.push(PathPoint {
                    t: s.t0 + tau,
                    h,
                    edge: s.edge,
                });
            }
        }
        Ok(GraphPath::new(points))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model1d::tests::inverted_parabola;
    use crate::model1d::FlatModelSpec;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn flat(c1: f64, c2: f64) -> LimitModel {
        let m = FlatModel::new(FlatModelSpec::two_well(1.0, 1.0, 1.0, c1, c2, 1.0)).unwrap();
        LimitModel::flat(&m, None).unwrap()
    }

    #[test]
    fn two_well_closed_forms() {
        let lm = flat(1.0, 1.0);
        let top = &lm.flows[2];
        for t in [0.0, 0.25, 0.5, 1.0] {
            assert_relative_eq!(top.edge_solution(2.0, t).unwrap(), 2.0 / (t + 1.0).powi(2), max_relative = 1e-14);
        }
        assert_relative_eq!(top.edge_solution(2.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(top.hitting_time(2.0, 0.5).unwrap(), 1.0, max_relative = 1e-14);
        assert_eq!(top.hitting_time(2.0, 2.0).unwrap(), 0.0);
        assert!(top.hitting_time(1.0, 2.0).is_err());
        assert!(matches!(top.edge_solution(2.0, 1.5), Err(Error::BeyondExit { .. })));
    }

    #[test]
    fn frictionless_flow_is_constant() {
        let m = FlatModel::new(FlatModelSpec::two_well(1.0, 1.0, 1.0, 0.0, 0.0, 0.0)).unwrap();
        let lm = LimitModel::flat(&m, None).unwrap();
        let f = &lm.flows[0];
        assert_eq!(f.edge_solution(0.3, 10.0).unwrap(), 0.3);
    }

    #[test]
    fn closed_form_satisfies_ode() {
        let lm = flat(2.0, 1.0);
        let f = &lm.flows[2];
        // the flow from 3 reaches the vertex at t ~ 0.79
        for i in 0..19 {
            let t = 0.04 * i as f64;
            let h = 1e-6;
            let d = (f.closed_form(3.0, t + h).unwrap() - f.closed_form(3.0, t - h).unwrap().max(0.0)) / (2.0 * h);
            let rhs = f.rhs(f.closed_form(3.0, t).unwrap()).unwrap();
            if t > 0.0 {
                assert!((d - rhs).abs() < 1e-6 * rhs.abs(), "t {t}: {d} vs {rhs}");
            }
        }
        // exact derivative identity H' = -sqrt(2) c / w H^(3/2)
        let h = f.closed_form(3.0, 0.3).unwrap();
        assert_relative_eq!(f.rhs(h).unwrap(), -2f64.sqrt() * 3.0 / 2.0 * h.powf(1.5), max_relative = 1e-12);
    }

    #[test]
    fn speed_dependent_flow_uses_ode() {
        let m = FlatModel::new(FlatModelSpec {
            walls: vec![0.0, 1.0],
            heights: vec![],
            restitution: vec![Restitution::Polynomial { coeffs: vec![1.0, 0.5] }; 2],
        })
        .unwrap();
        let lm = LimitModel::flat(&m, None).unwrap();
        let f = &lm.flows[0];
        assert!(f.closed_form(1.0, 0.1).is_none());
        let t = f.hitting_time(2.0, 0.5).unwrap();
        assert_relative_eq!(f.edge_solution(2.0, t).unwrap(), 0.5, max_relative = 1e-8);
    }

    #[test]
    fn potential_flow_against_fine_rk4() {
        let pm = inverted_parabola();
        let lm = LimitModel::potential(&pm).unwrap();
        let f = &lm.flows[potential_edge::UPPER];
        let t = 0.05;
        let got = f.edge_solution(2.0, t).unwrap();
        // independent oracle: classical RK4 with step halving
        let rk4 = |n: usize| {
            let dt = t / n as f64;
            let mut h = 2.0;
            for _ in 0..n {
                let k1 = f.rhs(h).unwrap();
                let k2 = f.rhs(h + 0.5 * dt * k1).unwrap();
                let k3 = f.rhs(h + 0.5 * dt * k2).unwrap();
                let k4 = f.rhs(h + dt * k3).unwrap();
                h += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            h
        };
        let (a, b) = (rk4(40), rk4(80));
        let oracle = b + (b - a) / 15.0;
        assert!(((got - oracle) / oracle).abs() < 1e-8, "{got} vs {oracle}");
    }

    #[test]
    fn potential_vertex_time_consistency() {
        let pm = inverted_parabola();
        let lm = LimitModel::potential(&pm).unwrap();
        let f = &lm.flows[potential_edge::UPPER];
        let h0 = 1.5;
        let t0 = f.hitting_time(h0, pm.vertex_energy).unwrap();
        assert!(t0.is_finite() && t0 > 0.0);
        let target = pm.vertex_energy + 1e-8;
        let t_star = f.hitting_time(h0, target).unwrap();
        assert_relative_eq!(f.edge_solution(h0, t_star).unwrap(), target, max_relative = 1e-9);
        assert!((t_star - t0).abs() < 1e-6);
    }

    #[test]
    fn hitting_time_additive() {
        let pm = inverted_parabola();
        let lm = LimitModel::potential(&pm).unwrap();
        for f in [&lm.flows[2], &flat(2.0, 1.0).flows[2]] {
            let a = f.hitting_time(2.0, 1.6).unwrap();
            let b = f.hitting_time(1.6, 1.2).unwrap();
            let c = f.hitting_time(2.0, 1.2).unwrap();
            assert!((a + b - c).abs() < 1e-10, "{}", a + b - c);
        }
    }

    #[test]
    fn deterministic_kernel() {
        let lm = flat(1.0, 0.0);
        assert_eq!(lm.kernels[0].p_left, 1.0);
        let y0 = GraphPoint { h: 2.0, edge: 2 };
        let a = lm.sample_path(y0, 3.0, 1, 0).unwrap();
        let b = lm.sample_path(y0, 3.0, 99, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.terminal_edge(), 0);
    }

    #[test]
    fn sampled_branching_matches_kernel() {
        let lm = flat(2.0, 1.0);
        let y0 = GraphPoint { h: 2.0, edge: 2 };
        let n = 10_000;
        let left = (0..n)
            .filter(|&i| lm.sample_path(y0, 2.0, 4, i).unwrap().terminal_edge() == 0)
            .count();
        let p = crate::stats::Proportion::new(left as u64, n, 3.0);
        assert!(p.covers(2.0 / 3.0));
    }

    #[test]
    fn five_well_terminal_law() {
        let spec = crate::model1d::tests::five_well_spec();
        let mut spec = spec;
        spec.restitution = [1.0, 2.0, 1.5, 1.0, 0.5, 2.5]
            .iter()
            .map(|&c| Restitution::constant(c))
            .collect();
        let m = FlatModel::new(spec).unwrap();
        let lm = LimitModel::flat(&m, None).unwrap();
        let law = lm.terminal_law(m.graph.root());
        let total: f64 = law.iter().sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-14);
        // leaf 2 = [2, 3]: left at the top (walls 0, 5), right at wall 1
        // (walls 0, 3), right at wall 2 (walls 1, 3)
        let want = (1.0 / 3.5) * (1.0 / 2.0) * (1.0 / 3.0);
        assert_relative_eq!(law[2], want, max_relative = 1e-14);
    }

    #[test]
    fn limit_path_eval() {
        let lm = flat(1.0, 1.0);
        let p = lm.path_to(GraphPoint { h: 2.0, edge: 2 }, 3.0, 1).unwrap();
        assert_eq!(p.vertex_times().len(), 1);
        assert_relative_eq!(p.vertex_times()[0], 1.0, max_relative = 1e-14);
        let y = p.eval(&lm, 0.5).unwrap();
        assert_relative_eq!(y.h, 2.0 / 2.25);
        let y = p.eval(&lm, 2.0).unwrap();
        assert_eq!(y.edge, 1);
        let g = p.to_graph_path(&lm, 50).unwrap();
        assert!(g.points.windows(2).all(|w| w[1].t >= w[0].t));
    }

    proptest! {
        #[test]
        fn flat_rhs_negative(c1 in 0.01f64..5.0, c2 in 0.01f64..5.0, h in 0.51f64..100.0) {
            let lm = flat(c1, c2);
            prop_assert!(lm.flows[2].rhs(h).unwrap() < 0.0);
        }
    }
}
