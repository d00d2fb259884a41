//! Piecewise-linear trajectories on the energy graph and their sup-norm
//! distance.

use serde::{Deserialize, Serialize};

use crate::model1d::{GraphPoint, ReebGraph};
use crate::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    pub h: f64,
    pub edge: usize,
}

/// `t -> (H, K)` linear in `H` between breakpoints. Inside a segment the
/// edge follows the graph: energies above the lower endpoint's edge belong
/// to its ancestors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GraphPath {
    pub points: Vec<PathPoint>,
}

impl GraphPath {
    pub fn new(points: Vec<PathPoint>) -> Self {
        GraphPath { points }
    }

    pub fn start(&self) -> Option<f64> {
        self.points.first().map(|p| p.t)
    }

    pub fn end(&self) -> Option<f64> {
        self.points.last().map(|p| p.t)
    }

    pub fn final_point(&self) -> Option<GraphPoint> {
        self.points.last().map(|p| GraphPoint { h: p.h, edge: p.edge })
    }

    /// Index `i` of the segment `[t_i, t_{i+1}]` containing `t`.
    fn segment(&self, t: f64) -> Option<usize> {
        let n = self.points.len();
        if n == 0 || t < self.points[0].t || t > self.points[n - 1].t {
            return None;
        }
        if n == 1 {
            return Some(0);
        }
        let i = self.points.partition_point(|p| p.t <= t);
        Some(i.saturating_sub(1).min(n - 2))
    }

    /// Point on the graph at time `t`, or `None` outside the path's span.
    pub fn eval(&self, graph: &ReebGraph, t: f64) -> Option<GraphPoint> {
        let i = self.segment(t)?;
        let a = self.points[i];
        let Some(&b) = self.points.get(i + 1) else {
            return Some(GraphPoint { h: a.h, edge: a.edge });
        };
        if t == b.t {
            return Some(GraphPoint { h: b.h, edge: b.edge });
        }
        let span = b.t - a.t;
        let h = if span > 0.0 {
            a.h + (b.h - a.h) * (t - a.t) / span
        } else {
            a.h
        };
        Some(GraphPoint {
            h,
            edge: segment_edge(graph, a, b, h),
        })
    }

    /// Times strictly inside segments where the edge changes.
    pub fn vertex_crossings(&self, graph: &ReebGraph) -> Vec<f64> {
        let mut out = Vec::new();
        for w in self.points.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.edge == b.edge {
                continue;
            }
            let (hi, lo) = if a.h >= b.h { (a, b) } else { (b, a) };
            let mut e = lo.edge;
            let mut crossed = false;
            while let Some(v) = graph.edges[e].upper_vertex {
                let hv = graph.vertices[v].energy;
                if hv >= hi.h {
                    break;
                }
                if hv > lo.h && b.h != a.h {
                    out.push(a.t + (b.t - a.t) * (hv - a.h) / (b.h - a.h));
                    crossed = true;
                }
                e = graph.vertices[v].upper;
            }
            if !crossed {
                out.push(b.t);
            }
        }
        out
    }
}

fn segment_edge(graph: &ReebGraph, a: PathPoint, b: PathPoint, h: f64) -> usize {
    if a.edge == b.edge {
        return a.edge;
    }
    let lower = if graph.is_ancestor(a.edge, b.edge) {
        b.edge
    } else if graph.is_ancestor(b.edge, a.edge) {
        a.edge
    } else if (h - a.h).abs() <= (h - b.h).abs() {
        return a.edge;
    } else {
        return b.edge;
    };
    graph.edge_at(lower, h)
}

/// `sup_t rho(a(t), b(t))` over the common time span, skipping times within
/// `clip` of a vertex passage of either path. `None` if the spans do not
/// overlap.
pub fn path_distance(graph: &ReebGraph, a: &GraphPath, b: &GraphPath, clip: f64) -> Option<f64> {
    let t0 = a.start()?.max(b.start()?);
    let t1 = a.end()?.min(b.end()?);
    if t0 > t1 {
        return None;
    }
    let mut passages = a.vertex_crossings(graph);
    passages.extend(b.vertex_crossings(graph));
    let mut times: Vec<f64> = a
        .points
        .iter()
        .chain(&b.points)
        .map(|p| p.t)
        .chain(passages.iter().copied())
        .collect();
    if clip > 0.0 {
        for &tp in &passages {
            times.push(tp - clip);
            times.push(tp + clip);
        }
    }
    times.push(t0);
    times.push(t1);
    let inside_clip = |t: f64| clip > 0.0 && passages.iter().any(|&tp| (t - tp).abs() < clip);
    let mut sup: f64 = 0.0;
    for t in times {
        if t < t0 || t > t1 || inside_clip(t) {
            continue;
        }
        // edges switch at breakpoints, so probe both one-sided limits
        for probe in [t, (t - 1e-12 * t.abs().max(1.0)).max(t0), (t + 1e-12 * t.abs().max(1.0)).min(t1)] {
            if inside_clip(probe) {
                continue;
            }
            if let (Some(x), Some(y)) = (a.eval(graph, probe), b.eval(graph, probe)) {
                sup = sup.max(graph.distance(x, y));
            }
        }
    }
    Some(sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model1d::{FlatModel, FlatModelSpec};

    fn graph() -> ReebGraph {
        FlatModel::new(FlatModelSpec::two_well(1.0, 1.0, 1.0, 1.0, 1.0, 1.0))
            .unwrap()
            .graph
    }

    fn pp(t: f64, h: f64, edge: usize) -> PathPoint {
        PathPoint { t, h, edge }
    }

    #[test]
    fn eval_switches_edge_at_vertex() {
        let g = graph();
        let p = GraphPath::new(vec![pp(0.0, 1.0, 2), pp(1.0, 0.0, 0)]);
        assert_eq!(p.eval(&g, 0.25).unwrap().edge, 2);
        assert_eq!(p.eval(&g, 0.75).unwrap().edge, 0);
        assert_eq!(p.vertex_crossings(&g), vec![0.5]);
        assert!(p.eval(&g, 1.5).is_none());
    }

    #[test]
    fn distance_examples() {
        let g = graph();
        let a = GraphPath::new(vec![pp(0.0, 0.9, 2), pp(1.0, 0.6, 2)]);
        assert_eq!(path_distance(&g, &a, &a, 0.0), Some(0.0));
        let b = GraphPath::new(vec![pp(0.0, 0.8, 2), pp(1.0, 0.5 + 1e-9, 2)]);
        assert!((path_distance(&g, &a, &b, 0.0).unwrap() - 0.1).abs() < 1e-6);
        // opposite wells: distance runs through the vertex
        let c = GraphPath::new(vec![pp(0.0, 0.4, 0), pp(1.0, 0.4, 0)]);
        let d = GraphPath::new(vec![pp(0.0, 0.3, 1), pp(1.0, 0.3, 1)]);
        assert!((path_distance(&g, &c, &d, 0.0).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn diverging_paths_and_clip() {
        let g = graph();
        let a = GraphPath::new(vec![pp(0.0, 1.0, 2), pp(1.0, 0.0, 0)]);
        let b = GraphPath::new(vec![pp(0.0, 1.0, 2), pp(1.0, 0.0, 1)]);
        // after the common vertex passage at t = 0.5 the paths separate by
        // 2 (0.5 - H) which peaks at t = 1
        assert!((path_distance(&g, &a, &b, 0.0).unwrap() - 1.0).abs() < 1e-9);
        // partial overlap in time
        let c = GraphPath::new(vec![pp(0.5, 0.5, 2), pp(2.0, 0.5, 2)]);
        assert!(path_distance(&g, &a, &c, 0.0).is_some());
        let e = GraphPath::new(vec![pp(3.0, 0.5, 2)]);
        assert!(path_distance(&g, &a, &e, 0.0).is_none());
    }
}
