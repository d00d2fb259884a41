//! Convex billiard tables: boundary geometry, arc length, ray casting and
//! the billiard map on the section `(s, theta)`.

use core::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{param, spec as invalid, Error, Result};
use crate::math::{brent, modulo, golden_min, integrate, newton_bracketed, GaussRule, QuadTol};
use crate::prelude::*;

/// Boundary shapes, all centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape {
    Circle { radius: f64 },
    Ellipse { a: f64, b: f64 },
    /// `|x/a|^p + |y/b|^p = 1`, `p >= 2`.
    Superellipse { a: f64, b: f64, p: f64 },
}

impl Shape {
    fn params(&self) -> (f64, f64, f64) {
        match *self {
            Shape::Circle { radius } => (radius, radius, 2.0),
            Shape::Ellipse { a, b } => (a, b, 2.0),
            Shape::Superellipse { a, b, p } => (a, b, p),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b, p) = self.params();
        if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(param("shape", format!("semi-axes must be positive, got {a}, {b}")));
        }
        if !(p >= 2.0 && p.is_finite()) {
            return Err(param("shape", format!("exponent must be at least 2, got {p}")));
        }
        Ok(())
    }

    /// The same shape scaled by `factor`.
    pub fn dilate(&self, factor: f64) -> Shape {
        match *self {
            Shape::Circle { radius } => Shape::Circle { radius: radius * factor },
            Shape::Ellipse { a, b } => Shape::Ellipse { a: a * factor, b: b * factor },
            Shape::Superellipse { a, b, p } => Shape::Superellipse {
                a: a * factor,
                b: b * factor,
                p,
            },
        }
    }
}

/// Straight interior wall `normal . x = offset`. Well 1 is the side with
/// `normal . x < offset`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WallSpec {
    pub normal: [f64; 2],
    pub offset: f64,
    /// Energy below which the wall reflects.
    pub height: f64,
    /// Energy lost per reflection off the wall, in units of `eps`.
    #[serde(default)]
    pub c: f64,
}

/// A point of the section: arc length `s` in `[0, L)` and angle `theta` to
/// the positive tangent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SectionPoint {
    pub s: f64,
    pub theta: f64,
}

impl SectionPoint {
    pub fn new(s: f64, theta: f64) -> Self {
        SectionPoint { s, theta }
    }
}

/// Resolved wall with the geometry of the two wells.
#[derive(Debug, Clone, PartialEq)]
pub struct Wall {
    pub spec: WallSpec,
    /// Polar-angle range `(start, end)` of the boundary of well 1, counter
    /// clockwise; `end` may exceed `2 pi`.
    pub arc1: (f64, f64),
    pub area1: f64,
    pub area2: f64,
    /// Length of the boundary of well 1.
    pub length1: f64,
}

const CELLS: usize = 2048;

type V2 = [f64; 2];

fn dot(a: V2, b: V2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn cross(a: V2, b: V2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

fn add(a: V2, t: f64, d: V2) -> V2 {
    [a[0] + t * d[0], a[1] + t * d[1]]
}

fn wrap(phi: f64) -> f64 {
    let r = modulo(phi, TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// A smooth convex table described in polar form `r(phi)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexDomain {
    pub shape: Shape,
    a: f64,
    b: f64,
    p: f64,
    circle: bool,
    /// Arc length at `phi = k 2 pi / CELLS`.
    table: Vec<f64>,
    rule: GaussRule,
    length: f64,
    area: f64,
    wall: Option<Wall>,
}

impl ConvexDomain {
    pub fn new(shape: Shape, wall: Option<WallSpec>) -> Result<Self> {
        shape.validate()?;
        let (a, b, p) = shape.params();
        let mut d = ConvexDomain {
            shape,
            a,
            b,
            p,
            circle: a == b && p == 2.0,
            table: Vec::new(),
            rule: GaussRule::new(10),
            length: 0.0,
            area: 0.0,
            wall: None,
        };
        let mut table = Vec::with_capacity(CELLS + 1);
        table.push(0.0);
        let h = TAU / CELLS as f64;
        let mut acc = 0.0;
        for k in 0..CELLS {
            acc += d.rule.integrate(|x| d.speed(x), k as f64 * h, (k + 1) as f64 * h);
            table.push(acc);
        }
        d.length = if d.circle { TAU * a } else { acc };
        d.table = table;
        d.area = if d.circle {
            PI * a * a
        } else {
            0.5 * integrate(|x| d.radius(x).powi(2), 0.0, TAU, QuadTol::new(1e-14, 1e-13))?.value
        };
        if let Some(w) = wall {
            d.wall = Some(d.resolve_wall(w)?);
        }
        Ok(d)
    }

    pub fn without_wall(&self) -> ConvexDomain {
        ConvexDomain {
            wall: None,
            ..self.clone()
        }
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn wall(&self) -> Option<&Wall> {
        self.wall.as_ref()
    }

    /// `r(phi)` and `r'(phi)`.
    fn radius_d(&self, phi: f64) -> (f64, f64) {
        if self.circle {
            return (self.a, 0.0);
        }
        let (c, s) = (phi.cos(), phi.sin());
        let p = self.p;
        let (u, v) = (c / self.a, s / self.b);
        let f = u.abs().powf(p) + v.abs().powf(p);
        // dF/dphi
        let df = p * (u.abs().powf(p - 1.0) * u.signum() * (-s / self.a) + v.abs().powf(p - 1.0) * v.signum() * (c / self.b));
        let r = f.powf(-1.0 / p);
        (r, -r / (p * f) * df)
    }

    fn radius(&self, phi: f64) -> f64 {
        self.radius_d(phi).0
    }

    /// `|dP/dphi|`.
    pub fn speed(&self, phi: f64) -> f64 {
        let (r, dr) = self.radius_d(phi);
        r.hypot(dr)
    }

    fn point(&self, phi: f64) -> V2 {
        let r = self.radius(phi);
        [r * phi.cos(), r * phi.sin()]
    }

    /// Unit tangent (counter clockwise) and inward normal.
    fn frame_phi(&self, phi: f64) -> (V2, V2) {
        let (r, dr) = self.radius_d(phi);
        let (c, s) = (phi.cos(), phi.sin());
        let t = [dr * c - r * s, dr * s + r * c];
        let n = t[0].hypot(t[1]);
        let t = [t[0] / n, t[1] / n];
        (t, [-t[1], t[0]])
    }

    /// Arc length from `phi = 0`.
    pub fn s_of_phi(&self, phi: f64) -> f64 {
        let phi = wrap(phi);
        if self.circle {
            return self.a * phi;
        }
        let h = TAU / CELLS as f64;
        let k = ((phi / h) as usize).min(CELLS - 1);
        self.table[k] + self.rule.integrate(|x| self.speed(x), k as f64 * h, phi)
    }

    /// Polar angle of the boundary point at arc length `s`.
    pub fn phi_of_s(&self, s: f64) -> f64 {
        let s = modulo(s, self.length);
        if self.circle {
            return wrap(s / self.a);
        }
        let k = self.table.partition_point(|&x| x <= s).clamp(1, CELLS) - 1;
        let h = TAU / CELLS as f64;
        let (lo, hi) = (k as f64 * h, (k + 1) as f64 * h);
        let cell0 = self.table[k];
        newton_bracketed(
            |x| (cell0 + self.rule.integrate(|y| self.speed(y), lo, x) - s, self.speed(x)),
            lo,
            hi,
            1e-15,
        )
        .unwrap_or(lo + (s - cell0) / self.speed(lo))
    }

    pub fn position(&self, s: f64) -> V2 {
        self.point(self.phi_of_s(s))
    }

    /// Position, unit tangent and inward normal at `s`.
    pub fn frame(&self, s: f64) -> (V2, V2, V2) {
        let phi = self.phi_of_s(s);
        let (t, n) = self.frame_phi(phi);
        (self.point(phi), t, n)
    }

    /// Curvature at `s`.
    pub fn curvature(&self, s: f64) -> f64 {
        let phi = self.phi_of_s(s);
        let (r, dr) = self.radius_d(phi);
        let h = 1e-5;
        let ddr = (self.radius_d(phi + h).1 - self.radius_d(phi - h).1) / (2.0 * h);
        (r * r + 2.0 * dr * dr - r * ddr) / (r * r + dr * dr).powf(1.5)
    }

    /// Level function, negative inside.
    pub fn level(&self, x: V2) -> f64 {
        (x[0] / self.a).abs().powf(self.p) + (x[1] / self.b).abs().powf(self.p) - 1.0
    }

    pub fn contains(&self, x: V2) -> bool {
        self.level(x) < 0.0
    }

    fn far(&self) -> f64 {
        2.0 * self.a.hypot(self.b)
    }

    /// Distance along `dir` from `origin` to the boundary. With
    /// `on_boundary`, the origin lies on the boundary and the far
    /// intersection is returned.
    fn cast(&self, origin: V2, dir: V2, on_boundary: bool) -> Result<f64> {
        if self.p == 2.0 {
            let (ia, ib) = (1.0 / (self.a * self.a), 1.0 / (self.b * self.b));
            let qa = dir[0] * dir[0] * ia + dir[1] * dir[1] * ib;
            let qb = 2.0 * (origin[0] * dir[0] * ia + origin[1] * dir[1] * ib);
            if on_boundary {
                let t = -qb / qa;
                return if t > 0.0 {
                    Ok(t)
                } else {
                    Err(Error::Tangential(t))
                };
            }
            let qc = origin[0] * origin[0] * ia + origin[1] * origin[1] * ib - 1.0;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc < 0.0 {
                return Err(Error::RootFinding("ray misses the boundary".into()));
            }
            // the stable root formula for the positive root with qc < 0
            let q = -0.5 * (qb + qb.signum() * disc.sqrt());
            let (r1, r2) = (q / qa, qc / q);
            return Ok(r1.max(r2));
        }
        let g = |t: f64| self.level(add(origin, t, dir));
        let far = self.far();
        let lo = if on_boundary {
            let (tmin, gmin) = golden_min(g, 0.0, far, 1e-12 * far);
            if gmin >= 0.0 {
                return Err(Error::Tangential(tmin));
            }
            tmin
        } else {
            0.0
        };
        brent(g, lo, far, 1e-15 * far)
    }

    fn section_of(&self, hit: V2, dir: V2) -> SectionPoint {
        let phi = wrap(hit[1].atan2(hit[0]));
        let (t, n) = self.frame_phi(phi);
        // outgoing direction after the mirror reflection makes angle
        // atan2(-d.n, d.t) with the tangent
        let theta = (-dot(dir, n)).atan2(dot(dir, t)).clamp(0.0, PI);
        SectionPoint {
            s: self.s_of_phi(phi),
            theta,
        }
    }

    fn check(&self, x: SectionPoint) -> Result<()> {
        if !(x.theta > 0.0 && x.theta < PI) {
            return Err(Error::Tangential(x.theta));
        }
        if !x.s.is_finite() {
            return Err(param("s", "must be finite"));
        }
        Ok(())
    }

    fn ray(&self, x: SectionPoint) -> (V2, V2) {
        let (p, t, n) = self.frame(x.s);
        let (c, s) = (x.theta.cos(), x.theta.sin());
        (p, [c * t[0] + s * n[0], c * t[1] + s * n[1]])
    }

    /// Next boundary point and reflected angle, with the chord length.
    pub fn map_with_chord(&self, x: SectionPoint) -> Result<(SectionPoint, f64)> {
        self.check(x)?;
        let (p, d) = self.ray(x);
        let t = self.cast(p, d, true)?;
        Ok((self.section_of(add(p, t, d), d), t))
    }

    /// The billiard map.
    pub fn billiard_map(&self, x: SectionPoint) -> Result<SectionPoint> {
        self.map_with_chord(x).map(|r| r.0)
    }

    /// The map run backwards along the same chord: `(s, theta) -> (s, pi - theta)`
    /// conjugates the map to its inverse.
    pub fn reverse(x: SectionPoint) -> SectionPoint {
        SectionPoint {
            s: x.s,
            theta: PI - x.theta,
        }
    }

    pub fn chord_length(&self, x: SectionPoint) -> Result<f64> {
        self.map_with_chord(x).map(|r| r.1)
    }

    /// `|det Df(x)| sin(Theta) / sin(theta) - 1` with a central-difference
    /// Jacobian of step `h`. Zero when the map preserves `sin(theta) ds dtheta`.
    pub fn liouville_defect(&self, x: SectionPoint, h: f64) -> Result<f64> {
        if !(h > 0.0 && x.theta > h && x.theta < PI - h) {
            return Err(param("step", "difference step must keep theta inside (0, pi)"));
        }
        let l = self.length;
        let y = self.billiard_map(x)?;
        let fs = |ds: f64, dt: f64| self.billiard_map(SectionPoint::new(modulo(x.s + ds, l), x.theta + dt));
        let jac = |h: f64| -> Result<[f64; 4]> {
            let diff = |a: SectionPoint, b: SectionPoint| {
                let ds = modulo(a.s - b.s + 0.5 * l, l) - 0.5 * l;
                (ds / (2.0 * h), (a.theta - b.theta) / (2.0 * h))
            };
            let (ss, ts) = diff(fs(h, 0.0)?, fs(-h, 0.0)?);
            let (st, tt) = diff(fs(0.0, h)?, fs(0.0, -h)?);
            Ok([ss, ts, st, tt])
        };
        // Richardson step removes the h^2 term
        let (coarse, fine) = (jac(h)?, jac(0.5 * h)?);
        let j: [f64; 4] = core::array::from_fn(|i| (4.0 * fine[i] - coarse[i]) / 3.0);
        let det = j[0] * j[3] - j[2] * j[1];
        Ok(det.abs() * y.theta.sin() / x.theta.sin() - 1.0)
    }

    /// Free-flight time `L(x) / sqrt(2H)`.
    pub fn flight_time(&self, x: SectionPoint, h: f64) -> Result<f64> {
        if !(h > 0.0) {
            return Err(param("energy", "flight time needs positive energy"));
        }
        Ok(self.chord_length(x)? / (2.0 * h).sqrt())
    }

    /// Well (1 or 2) containing the boundary point `s`; `None` without a
    /// wall.
    pub fn side(&self, s: f64) -> Option<u8> {
        let w = self.wall.as_ref()?;
        Some(if dot(w.spec.normal, self.position(s)) < w.spec.offset {
            1
        } else {
            2
        })
    }

    /// Billiard map inside one well: the wall reflects elastically.
    /// Returns the next point, the path length and whether the wall was hit.
    pub fn map_in_well(&self, x: SectionPoint) -> Result<(SectionPoint, f64, bool)> {
        self.check(x)?;
        let Some(w) = &self.wall else {
            let (y, l) = self.map_with_chord(x)?;
            return Ok((y, l, false));
        };
        let (p, d) = self.ray(x);
        let tb = self.cast(p, d, true)?;
        let n = w.spec.normal;
        let nd = dot(n, d);
        if nd != 0.0 {
            let tw = (w.spec.offset - dot(n, p)) / nd;
            if tw > 1e-12 * self.far() && tw < tb {
                let q = add(p, tw, d);
                let r = [d[0] - 2.0 * nd * n[0], d[1] - 2.0 * nd * n[1]];
                let t2 = self.cast(q, r, false)?;
                return Ok((self.section_of(add(q, t2, r), r), tw + t2, true));
            }
        }
        Ok((self.section_of(add(p, tb, d), d), tb, false))
    }

    fn resolve_wall(&self, w: WallSpec) -> Result<Wall> {
        let norm = w.normal[0].hypot(w.normal[1]);
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(param("wall.normal", "must be a non-zero vector"));
        }
        if !(w.height > 0.0 && w.height.is_finite()) {
            return Err(param("wall.height", "must be positive"));
        }
        if !(w.c >= 0.0) {
            return Err(param("wall.c", "must be non-negative"));
        }
        let spec = WallSpec {
            normal: [w.normal[0] / norm, w.normal[1] / norm],
            offset: w.offset / norm,
            ..w
        };
        let side = |phi: f64| dot(spec.normal, self.point(phi)) - spec.offset;
        let n = 1024;
        let h = TAU / n as f64;
        let mut roots = Vec::new();
        for k in 0..n {
            let (x0, x1) = (k as f64 * h, (k + 1) as f64 * h);
            let (f0, f1) = (side(x0), side(x1));
            if f0 == 0.0 {
                roots.push(x0);
            } else if f0.signum() != f1.signum() && f1 != 0.0 {
                roots.push(brent(side, x0, x1, 1e-15)?);
            }
        }
        if roots.len() != 2 {
            return Err(invalid(format!(
                "the wall must cut the boundary twice, found {} crossings",
                roots.len()
            )));
        }
        let (r1, r2) = (roots[0], roots[1]);
        let arc1 = if side(0.5 * (r1 + r2)) < 0.0 {
            (r1, r2)
        } else {
            (r2, r1 + TAU)
        };
        let sector = if self.circle {
            0.5 * self.a * self.a * (arc1.1 - arc1.0)
        } else {
            0.5 * integrate(|x| self.radius(x).powi(2), arc1.0, arc1.1, QuadTol::new(1e-14, 1e-13))?.value
        };
        let area1 = sector + 0.5 * cross(self.point(arc1.1), self.point(arc1.0));
        let length1 = modulo(self.s_of_phi(arc1.1) - self.s_of_phi(arc1.0), self.length);
        Ok(Wall {
            spec,
            arc1,
            area1,
            area2: self.area - area1,
            length1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    pub(crate) fn disk() -> ConvexDomain {
        ConvexDomain::new(Shape::Circle { radius: 1.0 }, None).unwrap()
    }

    fn ellipse() -> ConvexDomain {
        ConvexDomain::new(Shape::Ellipse { a: 2.0, b: 1.0 }, None).unwrap()
    }

    fn squircle() -> ConvexDomain {
        ConvexDomain::new(Shape::Superellipse { a: 1.5, b: 1.0, p: 4.0 }, None).unwrap()
    }

    fn ring_distance(a: f64, b: f64, l: f64) -> f64 {
        let d = modulo(a - b, l);
        d.min(l - d)
    }

    #[test]
    fn circle_map_closed_form() {
        let d = disk();
        let y = d.billiard_map(SectionPoint::new(0.0, PI / 2.0)).unwrap();
        assert!(ring_distance(y.s, PI, TAU) < 1e-12);
        assert!((y.theta - PI / 2.0).abs() < 1e-12);
        for (s, th) in [(0.3, 0.2), (5.0, 2.9), (1.0, 1.0)] {
            let y = d.billiard_map(SectionPoint::new(s, th)).unwrap();
            assert!(ring_distance(y.s, s + 2.0 * th, TAU) < 1e-12);
            assert!((y.theta - th).abs() < 1e-12);
            assert_relative_eq!(d.chord_length(SectionPoint::new(s, th)).unwrap(), 2.0 * th.sin(), max_relative = 1e-12);
        }
    }

    #[test]
    fn tangential_rejected() {
        let d = disk();
        assert!(matches!(d.billiard_map(SectionPoint::new(0.0, 0.0)), Err(Error::Tangential(_))));
        assert!(d.billiard_map(SectionPoint::new(0.0, PI)).is_err());
        assert!(d.flight_time(SectionPoint::new(0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn lengths_and_areas() {
        let e = ellipse();
        // Ramanujan's second approximation is accurate to ~1e-10 at 2:1
        let (a, b) = (2.0f64, 1.0f64);
        let h = ((a - b) / (a + b)).powi(2);
        let ramanujan = PI * (a + b) * (1.0 + 3.0 * h / (10.0 + (4.0 - 3.0 * h).sqrt()));
        assert_relative_eq!(e.length(), ramanujan, max_relative = 1e-9);
        assert_relative_eq!(e.area(), 2.0 * PI, max_relative = 1e-12);
        let sq = squircle();
        // area of |x/a|^4 + |y/b|^4 <= 1 is a b Gamma(1/4)^2 / (2 sqrt(pi))
        let gamma_quarter = 3.625_609_908_221_908;
        assert_relative_eq!(sq.area(), 1.5 * gamma_quarter * gamma_quarter / (2.0 * PI.sqrt()), max_relative = 1e-10);
    }

    #[test]
    fn arc_length_inverse() {
        for d in [ellipse(), squircle()] {
            for k in 0..50 {
                let s = d.length() * k as f64 / 50.0 + 0.0123;
                let back = d.s_of_phi(d.phi_of_s(s));
                assert!(ring_distance(back, s, d.length()) < 1e-12, "{s} -> {back}");
            }
        }
    }

    #[test]
    fn curvature_nonnegative() {
        let e = ellipse();
        // vertex curvatures a/b^2 and b/a^2
        assert_relative_eq!(e.curvature(0.0), 2.0, max_relative = 1e-6);
        assert_relative_eq!(e.curvature(e.length() / 4.0), 0.25, max_relative = 1e-6);
        let sq = squircle();
        for k in 0..200 {
            assert!(sq.curvature(sq.length() * k as f64 / 200.0) >= -1e-6);
        }
    }

    #[test]
    fn dilation_scales_chords() {
        let e = ellipse();
        let big = ConvexDomain::new(e.shape.dilate(3.0), None).unwrap();
        for (u, th) in [(0.1, 0.5), (0.4, 2.0), (0.77, 1.3)] {
            let x = SectionPoint::new(u * e.length(), th);
            let y = SectionPoint::new(u * big.length(), th);
            assert_relative_eq!(big.chord_length(y).unwrap(), 3.0 * e.chord_length(x).unwrap(), max_relative = 1e-10);
        }
        let x = SectionPoint::new(1.0, 1.0);
        assert_relative_eq!(e.flight_time(x, 0.25).unwrap(), 2.0 * e.flight_time(x, 1.0).unwrap(), max_relative = 1e-14);
    }

    #[test]
    fn diameter_wall() {
        let wall = WallSpec {
            normal: [1.0, 0.0],
            offset: 0.0,
            height: 0.5,
            c: 0.0,
        };
        let d = ConvexDomain::new(Shape::Circle { radius: 1.0 }, Some(wall)).unwrap();
        let w = d.wall().unwrap();
        assert_relative_eq!(w.area1, PI / 2.0, max_relative = 1e-12);
        assert_relative_eq!(w.length1, PI, max_relative = 1e-12);
        assert_eq!(d.side(PI), Some(1));
        assert_eq!(d.side(0.0), Some(2));
        // an off-centre chord: circular segment area
        let off = ConvexDomain::new(Shape::Circle { radius: 1.0 }, Some(WallSpec { offset: 0.5, ..wall })).unwrap();
        let seg = PI / 3.0 - 0.5 * (3f64.sqrt() / 2.0);
        assert_relative_eq!(off.wall().unwrap().area2, seg, max_relative = 1e-12);
        assert!(ConvexDomain::new(Shape::Circle { radius: 1.0 }, Some(WallSpec { offset: 2.0, ..wall })).is_err());
    }

    #[test]
    fn well_map_stays_in_well() {
        let wall = WallSpec {
            normal: [1.0, 0.2],
            offset: 0.1,
            height: 0.5,
            c: 0.0,
        };
        let d = ConvexDomain::new(Shape::Ellipse { a: 2.0, b: 1.0 }, Some(wall)).unwrap();
        let mut x = SectionPoint::new(d.length() / 2.0, 1.1);
        let well = d.side(x.s).unwrap();
        let mut hits = 0;
        for _ in 0..2000 {
            let (y, _, hit) = d.map_in_well(x).unwrap();
            hits += hit as usize;
            assert_eq!(d.side(y.s), Some(well));
            x = y;
        }
        assert!(hits > 0);
    }

    #[test]
    fn circle_jacobian_is_identity() {
        let d = disk();
        let x = SectionPoint::new(1.0, 0.7);
        assert!(d.liouville_defect(x, 1e-5).unwrap().abs() < 1e-8);
        assert!(d.liouville_defect(SectionPoint::new(1.0, 1e-6), 1e-5).is_err());
    }

    proptest! {
        #[test]
        fn liouville_form_preserved(u in 0.0f64..1.0, th in 0.05f64..3.09, which in 0usize..3) {
            let d = [disk(), ellipse(), squircle()][which].clone();
            let x = SectionPoint::new(u * d.length(), th);
            let defect = d.liouville_defect(x, 1e-5).unwrap();
            prop_assert!(defect.abs() < 1e-6, "{}", defect);
        }

        #[test]
        fn reversibility(u in 0.0f64..1.0, th in 0.01f64..3.13, which in 0usize..3) {
            let d = [disk(), ellipse(), squircle()][which].clone();
            let x = SectionPoint::new(u * d.length(), th);
            let y = d.billiard_map(x).unwrap();
            let z = ConvexDomain::reverse(d.billiard_map(ConvexDomain::reverse(y)).unwrap());
            prop_assert!(ring_distance(z.s, x.s, d.length()) < 1e-9);
            prop_assert!((z.theta - x.theta).abs() < 1e-9);
        }
    }
}
