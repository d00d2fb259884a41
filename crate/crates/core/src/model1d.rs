//! One-dimensional models: the flat multi-well system and the smooth
//! potential with a single interior maximum, their energy graph and the
//! oscillation periods on each edge.

use serde::{Deserialize, Serialize};

use crate::error::{param, spec as invalid, Error, Result};
use crate::math::{brent, integrate, QuadTol, Quadrature};
use crate::prelude::*;

/// Position and velocity of a unit-mass particle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub q: f64,
    pub p: f64,
}

impl PhasePoint {
    pub fn new(q: f64, p: f64) -> Self {
        PhasePoint { q, p }
    }
}

/// Restitution coefficient `c(x)`; the argument is the speed for the flat
/// model and the energy for the smooth potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Restitution {
    Constant { c: f64 },
    /// `c(x) = sum_k coeffs[k] * x^k`
    Polynomial { coeffs: Vec<f64> },
}

impl Restitution {
    pub fn constant(c: f64) -> Self {
        Restitution::Constant { c }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Restitution::Constant { c } => *c,
            Restitution::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, &a| acc * x + a),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Restitution::Constant { c } => Some(*c),
            Restitution::Polynomial { coeffs } if coeffs.len() <= 1 => {
                Some(coeffs.first().copied().unwrap_or(0.0))
            }
            Restitution::Polynomial { .. } => None,
        }
    }

    /// The same law with `shift` added to every value.
    pub fn shifted(&self, shift: f64) -> Restitution {
        match self {
            Restitution::Constant { c } => Restitution::Constant { c: c + shift },
            Restitution::Polynomial { coeffs } => {
                let mut coeffs = coeffs.clone();
                if coeffs.is_empty() {
                    coeffs.push(0.0);
                }
                coeffs[0] += shift;
                Restitution::Polynomial { coeffs }
            }
        }
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Restitution {
        match self {
            Restitution::Constant { c } => Restitution::Constant { c: c * factor },
            Restitution::Polynomial { coeffs } => Restitution::Polynomial {
                coeffs: coeffs.iter().map(|a| a * factor).collect(),
            },
        }
    }

    fn validate(&self, what: &str) -> Result<()> {
        let ok = match self {
            Restitution::Constant { c } => c.is_finite() && *c >= 0.0,
            Restitution::Polynomial { coeffs } => coeffs.iter().all(|a| a.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("{what}: restitution must be finite and non-negative")))
        }
    }
}

/// Walls at `walls[0] < ... < walls[n-1]`. The two exterior walls are
/// infinitely high, interior wall `k` (1 <= k <= n-2) has velocity height
/// `heights[k-1]`. Interior walls use one coefficient for both faces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlatModelSpec {
    pub walls: Vec<f64>,
    #[serde(default)]
    pub heights: Vec<f64>,
    pub restitution: Vec<Restitution>,
}

impl FlatModelSpec {
    /// Walls `-a1, 0, a2`, middle wall of height `p_vertex`; `c3` is the
    /// coefficient of the middle wall.
    pub fn two_well(a1: f64, a2: f64, p_vertex: f64, c1: f64, c2: f64, c3: f64) -> Self {
        FlatModelSpec {
            walls: vec![-a1, 0.0, a2],
            heights: vec![p_vertex],
            restitution: vec![
                Restitution::constant(c1),
                Restitution::constant(c3),
                Restitution::constant(c2),
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.walls.len();
        if n < 2 {
            return Err(invalid("at least two walls are needed"));
        }
        if self.walls.iter().any(|q| !q.is_finite()) {
            return Err(invalid("wall positions must be finite"));
        }
        if let Some(i) = (1..n).find(|&i| self.walls[i] <= self.walls[i - 1]) {
            return Err(invalid(format!(
                "wall positions must be strictly increasing (walls[{}] = {} <= walls[{}] = {})",
                i,
                self.walls[i],
                i - 1,
                self.walls[i - 1]
            )));
        }
        if self.heights.len() != n - 2 {
            return Err(invalid(format!(
                "{} interior walls need {} heights, got {}",
                n - 2,
                n - 2,
                self.heights.len()
            )));
        }
        if let Some(h) = self.heights.iter().find(|h| !(h.is_finite() && **h > 0.0)) {
            return Err(invalid(format!("wall height {h} must be positive and finite")));
        }
        if self.restitution.len() != n {
            return Err(invalid(format!(
                "{} walls need {} restitution laws, got {}",
                n,
                n,
                self.restitution.len()
            )));
        }
        for (i, r) in self.restitution.iter().enumerate() {
            r.validate(&format!("wall {i}"))?;
        }
        Ok(())
    }

    /// Velocity height of wall `k`; infinite for the exterior walls.
    pub fn height(&self, k: usize) -> f64 {
        if k == 0 || k + 1 >= self.walls.len() {
            f64::INFINITY
        } else {
            self.heights[k - 1]
        }
    }
}

/// A smooth potential given by a named family or a piecewise polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    /// `offset + k/2 (q - center)^2`
    Quadratic {
        k: f64,
        #[serde(default)]
        center: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `offset + c2 q^2 + c4 q^4`
    Quartic {
        c2: f64,
        c4: f64,
        #[serde(default)]
        offset: f64,
    },
    /// `offset + amplitude cos(wavenumber q + phase)`
    Cosine {
        amplitude: f64,
        wavenumber: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default)]
        offset: f64,
    },
    /// On `[breaks[i], breaks[i+1]]`, `sum_k coeffs[i][k] (q - breaks[i])^k`.
    Piecewise { breaks: Vec<f64>, coeffs: Vec<Vec<f64>> },
}

impl Potential {
    pub fn value(&self, q: f64) -> f64 {
        match self {
            Potential::Quadratic { k, center, offset } => offset + 0.5 * k * (q - center).powi(2),
            Potential::Quartic { c2, c4, offset } => {
                let q2 = q * q;
                offset + c2 * q2 + c4 * q2 * q2
            }
            Potential::Cosine {
                amplitude,
                wavenumber,
                phase,
                offset,
            } => offset + amplitude * (wavenumber * q + phase).cos(),
            Potential::Piecewise { breaks, coeffs } => {
                let i = piece(breaks, q);
                let x = q - breaks[i];
                coeffs[i].iter().rev().fold(0.0, |acc, &a| acc * x + a)
            }
        }
    }

    pub fn derivative(&self, q: f64) -> f64 {
        match self {
            Potential::Quadratic { k, center, .. } => k * (q - center),
            Potential::Quartic { c2, c4, .. } => 2.0 * c2 * q + 4.0 * c4 * q * q * q,
            Potential::Cosine {
                amplitude,
                wavenumber,
                phase,
                ..
            } => -amplitude * wavenumber * (wavenumber * q + phase).sin(),
            Potential::Piecewise { breaks, coeffs } => {
                let i = piece(breaks, q);
                let x = q - breaks[i];
                coeffs[i]
                    .iter()
                    .enumerate()
                    .skip(1)
                    .rev()
                    .fold(0.0, |acc, (k, &a)| acc * x + k as f64 * a)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        if let Potential::Piecewise { breaks, coeffs } = self {
            if breaks.len() < 2 || coeffs.len() != breaks.len() - 1 {
                return Err(invalid("piecewise potential needs n+1 breaks for n pieces"));
            }
            if breaks.windows(2).any(|w| w[1] <= w[0]) {
                return Err(invalid("piecewise breaks must be strictly increasing"));
            }
        }
        Ok(())
    }
}

fn piece(breaks: &[f64], q: f64) -> usize {
    let last = breaks.len() - 2;
    match breaks[1..=last].iter().position(|&b| q < b) {
        Some(i) => i,
        None => last,
    }
}

/// Smooth potential on `[a1, a2]` with reflecting walls at both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    pub potential: Potential,
    pub a1: f64,
    pub a2: f64,
    /// Restitution at `a1` as a function of energy.
    pub c1: Restitution,
    /// Restitution at `a2` as a function of energy.
    pub c2: Restitution,
}

/// The three edges of the potential model's graph.
pub mod potential_edge {
    pub const LEFT: usize = 0;
    pub const RIGHT: usize = 1;
    pub const UPPER: usize = 2;
}

/// A validated potential model with its interior maximum located.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialModel {
    pub spec: PotentialSpec,
    pub a0: f64,
    pub vertex_energy: f64,
    pub graph: ReebGraph,
    energy_scale: f64,
}

impl PotentialModel {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        spec.potential.validate()?;
        let PotentialSpec { a1, a2, .. } = spec;
        if !(a1.is_finite() && a2.is_finite() && a1 < a2) {
            return Err(spec_err_interval(a1, a2));
        }
        spec.c1.validate("c1")?;
        spec.c2.validate("c2")?;
        let f = &spec.potential;
        if f.derivative(a1) <= 0.0 {
            return Err(invalid(format!("F'(a1) = {} must be positive", f.derivative(a1))));
        }
        if f.derivative(a2) >= 0.0 {
            return Err(invalid(format!("F'(a2) = {} must be negative", f.derivative(a2))));
        }
        // Sign pattern of F' on a fine grid: + ... + - ... - means a single
        // interior maximum.
        const GRID: usize = 4096;
        let mut changes = Vec::new();
        let mut prev = f.derivative(a1);
        for i in 1..=GRID {
            let q = a1 + (a2 - a1) * i as f64 / GRID as f64;
            let d = f.derivative(q);
            if d != 0.0 && prev != 0.0 && d.signum() != prev.signum() {
                changes.push((a1 + (a2 - a1) * (i - 1) as f64 / GRID as f64, q, d < 0.0));
            }
            if d != 0.0 {
                prev = d;
            }
        }
        if changes.len() != 1 || !changes[0].2 {
            return Err(invalid(format!(
                "F must have exactly one interior maximum on [a1, a2], found {} critical points",
                changes.len()
            )));
        }
        let (lo, hi, _) = changes[0];
        let a0 = brent(|q| f.derivative(q), lo, hi, 1e-15 * (a2 - a1))?;
        let vertex_energy = f.value(a0);
        let floor_left = f.value(a1);
        let floor_right = f.value(a2);
        let energy_scale = (vertex_energy - floor_left.min(floor_right))
            .abs()
            .max(vertex_energy.abs())
            .max(f64::MIN_POSITIVE);
        let graph = ReebGraph {
            edges: vec![
                Edge {
                    id: potential_edge::LEFT,
                    floor: floor_left,
                    ceiling: vertex_energy,
                    lower_vertex: None,
                    upper_vertex: Some(0),
                    span: (a1, a0),
                    walls: (0, usize::MAX),
                },
                Edge {
                    id: potential_edge::RIGHT,
                    floor: floor_right,
                    ceiling: vertex_energy,
                    lower_vertex: None,
                    upper_vertex: Some(0),
                    span: (a0, a2),
                    walls: (usize::MAX, 1),
                },
                Edge {
                    id: potential_edge::UPPER,
                    floor: vertex_energy,
                    ceiling: f64::INFINITY,
                    lower_vertex: Some(0),
                    upper_vertex: None,
                    span: (a1, a2),
                    walls: (0, 1),
                },
            ],
            vertices: vec![Vertex {
                id: 0,
                energy: vertex_energy,
                upper: potential_edge::UPPER,
                left: potential_edge::LEFT,
                right: potential_edge::RIGHT,
                position: a0,
                wall: None,
            }],
        };
        Ok(PotentialModel {
            spec,
            a0,
            vertex_energy,
            graph,
            energy_scale,
        })
    }

    pub fn energy(&self, x: PhasePoint) -> f64 {
        0.5 * x.p * x.p + self.spec.potential.value(x.q)
    }

    /// Default vertex cutoff `eta` for [`PotentialModel::period`].
    pub fn default_eta(&self) -> f64 {
        1e-10 * self.energy_scale
    }

    pub fn project(&self, x: PhasePoint) -> GraphPoint {
        let h = self.energy(x);
        let edge = if h > self.vertex_energy {
            potential_edge::UPPER
        } else if x.q < self.a0 {
            potential_edge::LEFT
        } else if x.q > self.a0 {
            potential_edge::RIGHT
        } else {
            potential_edge::UPPER
        };
        GraphPoint { h, edge }
    }

    /// Left turning point `a-(H)` in `(a1, a0)` for `F(a1) < H < F(a0)`.
    pub fn left_turning_point(&self, h: f64) -> Result<f64> {
        let f = &self.spec.potential;
        brent(|q| f.value(q) - h, self.spec.a1, self.a0, 1e-15 * (self.a0 - self.spec.a1))
    }

    /// Right turning point `a+(H)` in `(a0, a2)`.
    pub fn right_turning_point(&self, h: f64) -> Result<f64> {
        let f = &self.spec.potential;
        brent(|q| f.value(q) - h, self.a0, self.spec.a2, 1e-15 * (self.spec.a2 - self.a0))
    }

    /// Period of the oscillation on `edge` at energy `h`, with the default
    /// vertex cutoff.
    pub fn period(&self, edge: usize, h: f64) -> Result<f64> {
        self.period_with(edge, h, self.default_eta(), QuadTol::default())
            .map(|q| q.value)
    }

    /// Period with an explicit vertex cutoff and quadrature tolerance.
    pub fn period_with(&self, edge: usize, h: f64, eta: f64, tol: QuadTol) -> Result<Quadrature> {
        let e = self.graph.edge(edge)?;
        if !(h > e.floor && h <= e.ceiling) {
            return Err(Error::EnergyDomain {
                edge,
                energy: h,
                floor: e.floor,
                ceiling: e.ceiling,
            });
        }
        if (h - self.vertex_energy).abs() <= eta {
            return Err(Error::NearVertex {
                energy: h,
                vertex: self.vertex_energy,
                eta,
            });
        }
        let f = &self.spec.potential;
        let (a1, a2) = (self.spec.a1, self.spec.a2);
        match edge {
            potential_edge::UPPER => {
                let l = oscillation_period(f, Boundary::Wall(a1), Boundary::Wall(self.a0), h, tol)?;
                let r = oscillation_period(f, Boundary::Wall(self.a0), Boundary::Wall(a2), h, tol)?;
                Ok(Quadrature {
                    value: l.value + r.value,
                    error: l.error + r.error,
                    evaluations: l.evaluations + r.evaluations,
                })
            }
            potential_edge::LEFT => {
                let tp = self.left_turning_point(h)?;
                oscillation_period(f, Boundary::Wall(a1), Boundary::Turning(tp), h, tol)
            }
            _ => {
                let tp = self.right_turning_point(h)?;
                oscillation_period(f, Boundary::Turning(tp), Boundary::Wall(a2), h, tol)
            }
        }
    }
}

fn spec_err_interval(a1: f64, a2: f64) -> Error {
    invalid(format!("endpoints must satisfy a1 < a2 (got {a1}, {a2})"))
}

/// End of an oscillation segment: a reflecting wall or a turning point
/// where `F(q) = H`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Wall(f64),
    Turning(f64),
}

impl Boundary {
    fn q(self) -> f64 {
        match self {
            Boundary::Wall(q) | Boundary::Turning(q) => q,
        }
    }
}

/// `2 * integral dq / sqrt(2 (H - F(q)))` between the two boundaries.
///
/// Turning-point ends are integrated in the variable `u` with
/// `q = turn -+ u^2`, which removes the inverse square root.
pub fn oscillation_period(f: &Potential, left: Boundary, right: Boundary, h: f64, tol: QuadTol) -> Result<Quadrature> {
    let (lo, hi) = (left.q(), right.q());
    if !(lo < hi) {
        return Err(param("boundary", format!("empty segment [{lo}, {hi}]")));
    }
    let plain = |q: f64| {
        let g = h - f.value(q);
        if g > 0.0 {
            1.0 / (2.0 * g).sqrt()
        } else {
            0.0
        }
    };
    let mut total = Quadrature {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    };
    let mut add = |q: Quadrature| {
        total.value += 2.0 * q.value;
        total.error += 2.0 * q.error;
        total.evaluations += q.evaluations;
    };
    let turn_integral = |tp: f64, len: f64, sign: f64| {
        let slope = f.derivative(tp).abs();
        let limit = 2.0 / (2.0 * slope).sqrt();
        integrate(
            |u| {
                let q = tp - sign * u * u;
                let g = h - f.value(q);
                // below rounding level the integrand equals its u -> 0 limit
                if g <= 4.0 * f64::EPSILON * h.abs().max(1.0) {
                    limit
                } else {
                    2.0 * u / (2.0 * g).sqrt()
                }
            },
            0.0,
            len.sqrt(),
            tol,
        )
    };
    match (left, right) {
        (Boundary::Wall(_), Boundary::Wall(_)) => {
            // Near a separatrix the integrand peaks at the end where H - F is
            // smallest; H - F is only known to rounding there, which limits
            // the attainable relative accuracy.
            let (g_lo, g_hi) = (h - f.value(lo), h - f.value(hi));
            let gmin = g_lo.min(g_hi);
            if !(gmin > 0.0) {
                return Err(param("energy", format!("H = {h} does not clear both walls")));
            }
            let noise = 16.0 * f64::EPSILON * h.abs().max(1.0) / gmin;
            let tol = QuadTol {
                rel: tol.rel.max(noise),
                ..tol
            };
            let (end, sign) = if g_lo <= g_hi { (lo, 1.0) } else { (hi, -1.0) };
            let len = hi - lo;
            let mut cuts = vec![];
            let mut w = 0.25 * len;
            while w > 1e-3 * gmin.sqrt() && cuts.len() < 40 {
                cuts.push(end + sign * w);
                w *= 0.25;
            }
            cuts.push(lo);
            cuts.push(hi);
            cuts.sort_by(f64::total_cmp);
            for pair in cuts.windows(2) {
                add(integrate(plain, pair[0], pair[1], tol)?);
            }
        }
        (Boundary::Wall(_), Boundary::Turning(tp)) => add(turn_integral(tp, hi - lo, 1.0)?),
        (Boundary::Turning(tp), Boundary::Wall(_)) => add(turn_integral(tp, hi - lo, -1.0)?),
        (Boundary::Turning(tl), Boundary::Turning(tr)) => {
            let mid = 0.5 * (lo + hi);
            add(turn_integral(tl, mid - lo, -1.0)?);
            add(turn_integral(tr, hi - mid, 1.0)?);
        }
    }
    Ok(total)
}

/// Energy coordinate and edge of a point on the graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphPoint {
    pub h: f64,
    pub edge: usize,
}

/// An edge of the energy graph: energies in `(floor, ceiling]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: usize,
    pub floor: f64,
    pub ceiling: f64,
    pub lower_vertex: Option<usize>,
    pub upper_vertex: Option<usize>,
    /// Range of positions swept at energies on this edge.
    pub span: (f64, f64),
    /// Bounding wall indices; `usize::MAX` where the edge ends at a turning
    /// region instead of a wall.
    pub walls: (usize, usize),
}

/// An interior vertex with one edge above and two below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub id: usize,
    pub energy: f64,
    pub upper: usize,
    pub left: usize,
    pub right: usize,
    pub position: f64,
    /// The wall whose top forms the vertex (flat model).
    pub wall: Option<usize>,
}

/// Tree of level-set components. Leaves are numbered first, left to
/// right, and the root edge comes last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReebGraph {
    pub edges: Vec<Edge>,
    pub vertices: Vec<Vertex>,
}

impl ReebGraph {
    /// Energy graph of the flat model: each interval between two walls
    /// splits at its highest interior wall.
    pub fn flat(spec: &FlatModelSpec) -> Result<Self> {
        spec.validate()?;
        let n = spec.walls.len();
        let mut b = FlatBuilder {
            spec,
            edges: vec![None; 2 * n - 3],
            vertices: Vec::new(),
            next_internal: n - 1,
        };
        b.build(0, n - 1, f64::INFINITY, None)?;
        let vertices = b
            .vertices
            .into_iter()
            .map(|v| v.expect("every reserved vertex is filled"))
            .collect();
        let edges = b
            .edges
            .into_iter()
            .map(|e| e.expect("every edge id is assigned"))
            .collect();
        Ok(ReebGraph { edges, vertices })
    }

    /// Three-edge graph of a single vertex at `vertex_energy`; edges
    /// 0 and 1 below, 2 above. Used for the billiard.
    pub fn single_vertex(vertex_energy: f64, floors: (f64, f64)) -> Self {
        let edge = |id, floor, ceiling, lower, upper| Edge {
            id,
            floor,
            ceiling,
            lower_vertex: lower,
            upper_vertex: upper,
            span: (f64::NAN, f64::NAN),
            walls: (usize::MAX, usize::MAX),
        };
        ReebGraph {
            edges: vec![
                edge(0, floors.0, vertex_energy, None, Some(0)),
                edge(1, floors.1, vertex_energy, None, Some(0)),
                edge(2, vertex_energy, f64::INFINITY, Some(0), None),
            ],
            vertices: vec![Vertex {
                id: 0,
                energy: vertex_energy,
                upper: 2,
                left: 0,
                right: 1,
                position: f64::NAN,
                wall: None,
            }],
        }
    }

    pub fn edge(&self, id: usize) -> Result<&Edge> {
        self.edges
            .get(id)
            .ok_or_else(|| param("edge", format!("no edge {id} (graph has {})", self.edges.len())))
    }

    pub fn root(&self) -> usize {
        self.edges
            .iter()
            .position(|e| e.upper_vertex.is_none())
            .expect("a tree has a root edge")
    }

    pub fn is_leaf(&self, edge: usize) -> bool {
        self.edges[edge].lower_vertex.is_none()
    }

    pub fn leaves(&self) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.is_leaf(e)).collect()
    }

    /// Edge directly above `edge`.
    pub fn parent(&self, edge: usize) -> Option<usize> {
        self.edges[edge].upper_vertex.map(|v| self.vertices[v].upper)
    }

    /// `edge` and all edges above it, bottom up.
    pub fn ancestry(&self, edge: usize) -> Vec<usize> {
        let mut chain = vec![edge];
        let mut e = edge;
        while let Some(p) = self.parent(e) {
            chain.push(p);
            e = p;
        }
        chain
    }

    pub fn is_ancestor(&self, upper: usize, lower: usize) -> bool {
        self.ancestry(lower).contains(&upper)
    }

    /// Vertices passed from the root down to `leaf`, each with the branch
    /// taken (`false` left, `true` right).
    pub fn route(&self, leaf: usize) -> Vec<(usize, bool)> {
        let chain = self.ancestry(leaf);
        let mut out = Vec::new();
        for w in chain.windows(2).rev() {
            let v = self.edges[w[1]].lower_vertex.expect("ancestor has a lower vertex");
            out.push((v, self.vertices[v].right == w[0]));
        }
        out
    }

    /// Distance along the graph: energy difference when one edge lies above
    /// the other, otherwise the path through their lowest common vertex.
    pub fn distance(&self, x: GraphPoint, y: GraphPoint) -> f64 {
        let ax = self.ancestry(x.edge);
        let ay = self.ancestry(y.edge);
        if ax.contains(&y.edge) || ay.contains(&x.edge) {
            return (x.h - y.h).abs();
        }
        let common = ax
            .iter()
            .find(|e| ay.contains(e))
            .expect("root is a common ancestor");
        let v = self.edges[*common].lower_vertex.expect("common ancestor is internal");
        let hv = self.vertices[v].energy;
        (hv - x.h) + (hv - y.h)
    }

    /// The edge at energy `h` among `lower` and the edges above it.
    pub fn edge_at(&self, lower: usize, h: f64) -> usize {
        let mut e = lower;
        while h > self.edges[e].ceiling {
            match self.parent(e) {
                Some(p) => e = p,
                None => break,
            }
        }
        e
    }
}

struct FlatBuilder<'a> {
    spec: &'a FlatModelSpec,
    edges: Vec<Option<Edge>>,
    vertices: Vec<Option<Vertex>>,
    next_internal: usize,
}

impl FlatBuilder<'_> {
    fn build(&mut self, lw: usize, rw: usize, ceiling: f64, upper: Option<usize>) -> Result<usize> {
        let walls = &self.spec.walls;
        let span = (walls[lw], walls[rw]);
        if rw == lw + 1 {
            self.edges[lw] = Some(Edge {
                id: lw,
                floor: 0.0,
                ceiling,
                lower_vertex: None,
                upper_vertex: upper,
                span,
                walls: (lw, rw),
            });
            return Ok(lw);
        }
        let k = (lw + 1..rw)
            .max_by(|&a, &b| self.spec.height(a).total_cmp(&self.spec.height(b)))
            .expect("interval has interior walls");
        let hk = self.spec.height(k);
        if let Some(j) = (lw + 1..rw).find(|&j| j != k && self.spec.height(j) == hk) {
            return Err(invalid(format!(
                "walls {k} and {j} share the maximal height {hk} of their interval; the graph would not be binary"
            )));
        }
        let energy = 0.5 * hk * hk;
        let vid = self.vertices.len();
        self.vertices.push(None);
        let left = self.build(lw, k, energy, Some(vid))?;
        let right = self.build(k, rw, energy, Some(vid))?;
        let id = self.next_internal;
        self.next_internal += 1;
        self.edges[id] = Some(Edge {
            id,
            floor: energy,
            ceiling,
            lower_vertex: Some(vid),
            upper_vertex: upper,
            span,
            walls: (lw, rw),
        });
        self.vertices[vid] = Some(Vertex {
            id: vid,
            energy,
            upper: id,
            left,
            right,
            position: walls[k],
            wall: Some(k),
        });
        Ok(id)
    }
}

/// A validated flat model together with its graph.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatModel {
    pub spec: FlatModelSpec,
    pub graph: ReebGraph,
}

impl FlatModel {
    pub fn new(spec: FlatModelSpec) -> Result<Self> {
        let graph = ReebGraph::flat(&spec)?;
        Ok(FlatModel { spec, graph })
    }

    pub fn wall_count(&self) -> usize {
        self.spec.walls.len()
    }

    /// Graph coordinates of a phase point. A wall blocks when `|p|` does
    /// not exceed its height; a particle sitting exactly on a blocking wall
    /// belongs to the side it is moving into.
    pub fn project(&self, x: PhasePoint) -> GraphPoint {
        let h = 0.5 * x.p * x.p;
        let speed = x.p.abs();
        let mut e = self.graph.root();
        while let Some(v) = self.graph.edges[e].lower_vertex {
            let vert = &self.graph.vertices[v];
            let k = vert.wall.expect("flat vertices sit on walls");
            if speed > self.spec.height(k) {
                break;
            }
            let right = x.q > vert.position || (x.q == vert.position && x.p > 0.0);
            e = if right { vert.right } else { vert.left };
        }
        GraphPoint { h, edge: e }
    }

    /// Period `2 * width / sqrt(2H)` of the free motion on `edge`.
    pub fn period(&self, edge: usize, h: f64) -> Result<f64> {
        let e = self.graph.edge(edge)?;
        if !(h > e.floor && h <= e.ceiling) {
            return Err(Error::EnergyDomain {
                edge,
                energy: h,
                floor: e.floor,
                ceiling: e.ceiling,
            });
        }
        Ok(2.0 * (e.span.1 - e.span.0) / (2.0 * h).sqrt())
    }

    /// Phase point inside the domain.
    pub fn contains(&self, x: PhasePoint) -> bool {
        let w = &self.spec.walls;
        x.q >= w[0] && x.q <= w[w.len() - 1] && x.p.is_finite()
    }
}

/// Either kind of 1D model, as it appears in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Flat(FlatModelSpec),
    Potential(PotentialSpec),
}

/// Graph of either model kind.
pub fn build_graph(spec: &ModelSpec) -> Result<ReebGraph> {
    match spec {
        ModelSpec::Flat(s) => ReebGraph::flat(s),
        ModelSpec::Potential(s) => Ok(PotentialModel::new(s.clone())?.graph),
    }
}
