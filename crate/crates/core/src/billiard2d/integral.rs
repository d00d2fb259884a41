//! Integrals over the section with the Liouville density `sin(theta)`,
//! the decay law they imply and the limit process on the three-edge graph.

use core::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::domain::{ConvexDomain, SectionPoint};
use super::sim::Coefficient;
use crate::error::{param, Result};
use crate::limitproc::{EdgeFlow, FlowLaw, LimitModel, VertexKernel};
use crate::math::{integrate, modulo, GaussRule, QuadTol};
use crate::model1d::ReebGraph;
use crate::prelude::*;

/// Product rule: periodic trapezoid in the polar angle, Gauss–Legendre in
/// `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionQuadrature {
    pub n_s: usize,
    pub n_theta: usize,
}

impl Default for SectionQuadrature {
    fn default() -> Self {
        SectionQuadrature { n_s: 512, n_theta: 64 }
    }
}

/// `f` integrated against `sin(theta) ds dtheta` over the whole section.
pub fn section_integral<F: FnMut(SectionPoint) -> Result<f64>>(domain: &ConvexDomain, q: SectionQuadrature, mut f: F) -> Result<f64> {
    if q.n_s == 0 || q.n_theta == 0 {
        return Err(param("quadrature", "needs at least one node per direction"));
    }
    let rule = GaussRule::new(q.n_theta);
    let h = TAU / q.n_s as f64;
    let mut total = 0.0;
    for k in 0..q.n_s {
        let phi = k as f64 * h;
        let s = domain.s_of_phi(phi);
        let ds = domain.speed(phi);
        let mut inner = 0.0;
        for (theta, w) in rule.points(0.0, PI) {
            inner += w * theta.sin() * f(SectionPoint::new(s, theta))?;
        }
        total += h * ds * inner;
    }
    Ok(total)
}

/// Both sides of `iint L m = 2 pi A`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralGeometry {
    pub lhs: f64,
    pub rhs: f64,
    pub rel_error: f64,
    /// Change of the left side when both node counts are halved.
    pub resolution_change: f64,
}

pub fn check_integral_geometry(domain: &ConvexDomain, q: SectionQuadrature) -> Result<IntegralGeometry> {
    let chord = |x: SectionPoint| domain.chord_length(x);
    let lhs = section_integral(domain, q, chord)?;
    let coarse = section_integral(
        domain,
        SectionQuadrature {
            n_s: (q.n_s / 2).max(1),
            n_theta: (q.n_theta / 2).max(1),
        },
        chord,
    )?;
    let rhs = TAU * domain.area();
    Ok(IntegralGeometry {
        lhs,
        rhs,
        rel_error: (lhs / rhs - 1.0).abs(),
        resolution_change: (lhs - coarse).abs() / lhs.abs(),
    })
}

/// `iint c m` over the whole section and over each well's boundary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleWeights {
    pub total: f64,
    pub well1: f64,
    pub well2: f64,
}

impl LiouvilleWeights {
    /// Predicted probability of ending in well 1.
    pub fn p1(&self) -> f64 {
        self.well1 / self.total
    }
}

/// Integral of `c m` over the boundary arc with polar angles in `(a, b)`.
fn arc_weight(domain: &ConvexDomain, coeff: &Coefficient, a: f64, b: f64) -> Result<f64> {
    let rule = GaussRule::new(32);
    let s0 = domain.s_of_phi(a);
    let len = modulo(domain.s_of_phi(b) - s0, domain.length());
    let len = if len == 0.0 && b > a { domain.length() } else { len };
    let q = integrate(
        |u| {
            let s = s0 + u;
            rule.integrate(|theta| theta.sin() * coeff.eval(domain, SectionPoint::new(s, theta)), 0.0, PI)
        },
        0.0,
        len,
        QuadTol::new(1e-13, 1e-12),
    )?;
    Ok(q.value)
}

pub fn liouville_weights(domain: &ConvexDomain, coeff: &Coefficient) -> Result<LiouvilleWeights> {
    coeff.validate(domain)?;
    let total = arc_weight(domain, coeff, 0.0, TAU)?;
    let (well1, well2) = match domain.wall() {
        Some(w) => {
            let w1 = arc_weight(domain, coeff, w.arc1.0, w.arc1.1)?;
            let w2 = arc_weight(domain, coeff, w.arc1.1, w.arc1.0 + TAU)?;
            (w1, w2)
        }
        None => (total, 0.0),
    };
    Ok(LiouvilleWeights { total, well1, well2 })
}

/// `iint m = 2 L`.
pub fn liouville_mass(domain: &ConvexDomain) -> Result<f64> {
    liouville_weights(&domain.without_wall(), &Coefficient::Constant { c: 1.0 }).map(|w| w.total)
}

/// Rate `r` in `d sqrt(H) / dt = -r` for a region of area `area` whose
/// boundary carries weight `weight`.
pub fn decay_rate(weight: f64, area: f64) -> f64 {
    weight / (2.0 * 2f64.sqrt() * PI * area)
}

/// `dH/dt` from the ratio of averaged loss to averaged flight time.
pub fn averaged_rhs(domain: &ConvexDomain, coeff: &Coefficient, h: f64, q: SectionQuadrature) -> Result<f64> {
    let loss = liouville_weights(domain, coeff)?.total;
    let time = section_integral(domain, q, |x| domain.flight_time(x, h))?;
    Ok(-loss / time)
}

/// `dH/dt = -sqrt(2H) iint c m / (2 pi A)`.
pub fn closed_rhs(domain: &ConvexDomain, coeff: &Coefficient, h: f64) -> Result<f64> {
    let loss = liouville_weights(domain, coeff)?.total;
    Ok(-(2.0 * h).sqrt() * loss / (TAU * domain.area()))
}

/// The limit process: square-root decay on each edge and the Liouville
/// split at the wall height.
pub fn billiard_limit(domain: &ConvexDomain, coeff: &Coefficient) -> Result<LimitModel> {
    let wall = domain.wall().ok_or_else(|| param("wall", "the limit graph needs a wall"))?;
    let w = liouville_weights(domain, coeff)?;
    let ho = wall.spec.height;
    let graph = ReebGraph::single_vertex(ho, (0.0, 0.0));
    let flow = |edge, floor, ends, rate| EdgeFlow {
        edge,
        floor,
        ends_at_vertex: ends,
        law: FlowLaw::SqrtDecay { rate },
    };
    Ok(LimitModel {
        graph,
        flows: vec![
            flow(0, 0.0, false, decay_rate(w.well1, wall.area1)),
            flow(1, 0.0, false, decay_rate(w.well2, wall.area2)),
            flow(2, ho, true, decay_rate(w.total, domain.area())),
        ],
        kernels: vec![VertexKernel {
            vertex: 0,
            p_left: w.p1(),
        }],
    })
}
