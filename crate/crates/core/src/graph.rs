//! Finite graphs, epsilon-adjacency graphs over point clouds, and functions on
//! their vertices.
//!
//! Neighbor lists are stored in compressed form, sorted by vertex index. Every
//! downstream tie-break (greedy moves, extremal neighbors) resolves toward the
//! lowest index, so the ordering here is load-bearing.

use std::collections::VecDeque;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative slack applied to every closed-ball test `d(x, y) <= r`.
///
/// Grid coordinates such as `i * 0.05` do not land exactly on multiples of
/// the radius, so a point sitting on the sphere can compute a distance a few
/// ulps above `r`. The slack keeps it inside the closed ball.
pub const BALL_SLACK: f64 = 1e-9;

#[inline]
pub fn in_closed_ball(distance: f64, radius: f64) -> bool {
    distance <= radius * (1.0 + BALL_SLACK)
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphKind {
    FiniteWithLoops,
    FinitePlain,
    EpsAdjacency,
}

/// Points in R^d with the Euclidean metric, plus the adjacency radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    points: Vec<Vec<f64>>,
    epsilon: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>, epsilon: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyGraph);
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "points must have at least one coordinate".into(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if let Some(&v) = p.iter().find(|v| !v.is_finite()) {
                return Err(Error::NonFinite { index: i, value: v });
            }
        }
        Ok(Self { points, epsilon })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Same points with a different adjacency radius.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.points.clone(), epsilon)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        euclidean(&self.points[i], &self.points[j])
    }
}

/// Real values indexed by the vertices of a graph. All entries are finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct VertexFunction(Vec<f64>);

impl VertexFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self(values))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn constant(n: usize, value: f64) -> Self {
        Self(vec![value; n])
    }

    /// Wraps values produced internally; callers guarantee finiteness.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite()));
        Self(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn oscillation(&self) -> f64 {
        self.max() - self.min()
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn map(&self, op: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.0.iter().map(|&v| op(v)).collect())
    }

    pub fn shifted(&self, delta: f64) -> Self {
        Self::from_raw(self.0.iter().map(|v| v + delta).collect())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(self.0.iter().map(|v| v * factor).collect())
    }

    pub fn check_len(&self, n: usize) -> Result<()> {
        if self.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: self.len(),
            });
        }
        Ok(())
    }
}

impl Index<usize> for VertexFunction {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for VertexFunction {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<VertexFunction> for Vec<f64> {
    fn from(f: VertexFunction) -> Self {
        f.0
    }
}

#[derive(Debug, Clone)]
pub struct Graph {
    offsets: Vec<usize>,
    adjacency: Vec<usize>,
    kind: GraphKind,
    graph_diameter: usize,
    cloud: Option<PointCloud>,
}

/// Builds a finite graph on `vertex_count` vertices.
///
/// Edges are undirected; duplicates are merged. With `add_loops` every vertex
/// becomes its own neighbor.
pub fn build_finite_graph(
    vertex_count: usize,
    edges: &[(usize, usize)],
    add_loops: bool,
) -> Result<Graph> {
    if vertex_count == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); vertex_count];
    for &(a, b) in edges {
        for v in [a, b] {
            if v >= vertex_count {
                return Err(Error::VertexOutOfRange {
                    vertex: v,
                    count: vertex_count,
                });
            }
        }
        lists[a].push(b);
        lists[b].push(a);
    }
    if add_loops {
        for (x, list) in lists.iter_mut().enumerate() {
            list.push(x);
        }
    }
    let kind = if add_loops {
        GraphKind::FiniteWithLoops
    } else {
        GraphKind::FinitePlain
    };
    Graph::from_lists(lists, kind, None)
}

/// Builds the epsilon-adjacency graph of a point cloud: `x ~ y` iff
/// `|x - y| <= epsilon`, so every point is its own neighbor.
///
/// Adjacency is brute force over all pairs, which is fine up to ~10^4 points.
pub fn build_eps_adjacency(cloud: PointCloud) -> Result<Graph> {
    let n = cloud.len();
    let eps = cloud.epsilon();
    let mut lists: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = cloud.distance(i, j);
            if d == 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "points {i} and {j} coincide at {:?}",
                    cloud.point(i)
                )));
            }
            if in_closed_ball(d, eps) {
                lists[i].push(j);
                lists[j].push(i);
            }
        }
    }
    Graph::from_lists(lists, GraphKind::EpsAdjacency, Some(cloud))
}

impl Graph {
    fn from_lists(
        mut lists: Vec<Vec<usize>>,
        kind: GraphKind,
        cloud: Option<PointCloud>,
    ) -> Result<Self> {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        let mut adjacency = Vec::new();
        offsets.push(0);
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
            adjacency.extend_from_slice(list);
            offsets.push(adjacency.len());
        }
        let mut graph = Self {
            offsets,
            adjacency,
            kind,
            graph_diameter: 0,
            cloud,
        };
        let dist = graph.bfs_distances(0);
        let unreachable: Vec<usize> = (0..graph.vertex_count())
            .filter(|&v| dist[v].is_none())
            .collect();
        if !unreachable.is_empty() {
            if let Some(cloud) = &graph.cloud {
                let b = unreachable[0];
                return Err(Error::EpsilonTooSmall {
                    eps: cloud.epsilon(),
                    a: 0,
                    b,
                    point_a: cloud.point(0).to_vec(),
                    point_b: cloud.point(b).to_vec(),
                });
            }
            return Err(Error::Disconnected { unreachable });
        }
        graph.graph_diameter = (0..graph.vertex_count())
            .map(|s| {
                graph
                    .bfs_distances(s)
                    .into_iter()
                    .map(|d| d.unwrap_or(0))
                    .max()
                    .unwrap_or(0)
            })
            .max()
            .unwrap_or(0);
        Ok(graph)
    }

    pub fn vertex_count(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[self.offsets[x]..self.offsets[x + 1]]
    }

    pub fn is_adjacent(&self, x: usize, y: usize) -> bool {
        self.neighbors(x).binary_search(&y).is_ok()
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    /// True when every vertex is its own neighbor (always the case for
    /// epsilon-adjacency graphs).
    pub fn has_all_loops(&self) -> bool {
        (0..self.vertex_count()).all(|x| self.is_adjacent(x, x))
    }

    /// Hop diameter: the largest shortest-path length over all pairs.
    pub fn graph_diameter(&self) -> usize {
        self.graph_diameter
    }

    /// Largest pairwise distance in the underlying point cloud.
    pub fn metric_diameter(&self) -> Result<f64> {
        let cloud = self.cloud()?;
        let n = cloud.len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(cloud.distance(i, j));
            }
        }
        Ok(best)
    }

    pub fn cloud(&self) -> Result<&PointCloud> {
        self.cloud.as_ref().ok_or(Error::NotMetric)
    }

    pub fn epsilon(&self) -> Result<f64> {
        Ok(self.cloud()?.epsilon())
    }

    /// Breadth-first hop distances from `source`; `None` for unreachable vertices.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(x) = queue.pop_front() {
            let dx = dist[x].unwrap_or(0);
            for &y in self.neighbors(x) {
                if dist[y].is_none() {
                    dist[y] = Some(dx + 1);
                    queue.push_back(y);
                }
            }
        }
        dist
    }

    /// Cloud indices inside the closed ball of radius `r` around point `x`.
    pub fn ball(&self, x: usize, r: f64) -> Result<Vec<usize>> {
        let cloud = self.cloud()?;
        Ok((0..cloud.len())
            .filter(|&y| in_closed_ball(cloud.distance(x, y), r))
            .collect())
    }

    /// Closed balls of radius `r` around every cloud point.
    pub fn balls(&self, r: f64) -> Result<Vec<Vec<usize>>> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "radius must be positive, got {r}"
            )));
        }
        (0..self.vertex_count()).map(|x| self.ball(x, r)).collect()
    }

    /// `osc(v, delta)`: the largest `|v(x) - v(y)|` over cloud pairs at
    /// distance at most `delta`.
    pub fn oscillation(&self, v: &VertexFunction, delta: f64) -> Result<f64> {
        v.check_len(self.vertex_count())?;
        let cloud = self.cloud()?;
        let n = cloud.len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                if in_closed_ball(cloud.distance(i, j), delta) {
                    best = best.max((v[i] - v[j]).abs());
                }
            }
        }
        Ok(best)
    }

    pub fn check_function(&self, v: &VertexFunction) -> Result<()> {
        v.check_len(self.vertex_count())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path3_loops() -> Graph {
        build_finite_graph(3, &[(0, 1), (1, 2)], true).unwrap()
    }

    #[test]
    fn path_with_loops_is_self_adjacent() {
        let g = path3_loops();
        assert_eq!(g.graph_diameter(), 2);
        assert_eq!(g.kind(), GraphKind::FiniteWithLoops);
        for x in 0..3 {
            assert!(g.neighbors(x).contains(&x));
        }
        assert_eq!(g.neighbors(1), &[0, 1, 2]);
    }

    #[test]
    fn unreferenced_vertex_is_disconnected() {
        let err = build_finite_graph(6, &[(0, 1), (1, 2)], true).unwrap_err();
        match err {
            Error::Disconnected { unreachable } => assert_eq!(unreachable, vec![3, 4, 5]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn out_of_range_edge_is_rejected() {
        let err = build_finite_graph(3, &[(0, 3)], false).unwrap_err();
        assert!(matches!(
            err,
            Error::VertexOutOfRange {
                vertex: 3,
                count: 3
            }
        ));
    }

    #[test]
    fn complete_graph_diameter_one() {
        let edges: Vec<_> = (0..4)
            .flat_map(|a| ((a + 1)..4).map(move |b| (a, b)))
            .collect();
        let g = build_finite_graph(4, &edges, false).unwrap();
        assert_eq!(g.graph_diameter(), 1);
        assert!(!g.has_all_loops());
        assert!(matches!(g.metric_diameter(), Err(Error::NotMetric)));
    }

    #[test]
    fn three_points_half_spacing() {
        let cloud = PointCloud::new(vec![vec![0.0], vec![0.5], vec![1.0]], 0.5).unwrap();
        let g = build_eps_adjacency(cloud).unwrap();
        assert_eq!(g.neighbors(0), &[0, 1]);
        assert_eq!(g.neighbors(1), &[0, 1, 2]);
        assert_eq!(g.neighbors(2), &[1, 2]);
        assert!(!g.is_adjacent(0, 2));
    }

    #[test]
    fn three_points_unit_radius_is_complete() {
        let cloud = PointCloud::new(vec![vec![0.0], vec![0.5], vec![1.0]], 1.0).unwrap();
        let g = build_eps_adjacency(cloud).unwrap();
        for x in 0..3 {
            assert_eq!(g.neighbors(x), &[0, 1, 2]);
        }
        assert_eq!(g.graph_diameter(), 1);
    }

    #[test]
    fn grid_interior_has_five_neighbors() {
        let points: Vec<Vec<f64>> = (0..21).map(|i| vec![i as f64 / 20.0]).collect();
        let g = build_eps_adjacency(PointCloud::new(points, 0.1).unwrap()).unwrap();
        for x in 2..19 {
            assert_eq!(g.neighbors(x).len(), 5, "vertex {x}");
        }
        assert_eq!(g.neighbors(0).len(), 3);
        assert!((g.metric_diameter().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(g.graph_diameter(), 10);
    }

    #[test]
    fn small_epsilon_names_unreachable_points() {
        let cloud = PointCloud::new(vec![vec![0.0], vec![0.1], vec![1.0]], 0.2).unwrap();
        match build_eps_adjacency(cloud).unwrap_err() {
            Error::EpsilonTooSmall { a, b, point_b, .. } => {
                assert_eq!((a, b), (0, 2));
                assert_eq!(point_b, vec![1.0]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_points_rejected() {
        let cloud = PointCloud::new(vec![vec![0.0], vec![0.0]], 0.2).unwrap();
        assert!(build_eps_adjacency(cloud).is_err());
    }

    #[test]
    fn vertex_function_rejects_nan() {
        assert!(matches!(
            VertexFunction::new(vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        let f = VertexFunction::new(vec![-1.0, 2.0, -1.0]).unwrap();
        assert_eq!(f.oscillation(), 3.0);
        assert_eq!(f.sup_norm(), 2.0);
    }

    #[test]
    fn oscillation_on_grid() {
        let points: Vec<Vec<f64>> = (0..21).map(|i| vec![i as f64 / 20.0]).collect();
        let g = build_eps_adjacency(PointCloud::new(points, 0.1).unwrap()).unwrap();
        let f = VertexFunction::new((0..21).map(|i| i as f64 / 20.0).collect()).unwrap();
        assert!((g.oscillation(&f, 0.1).unwrap() - 0.1).abs() < 1e-12);
        assert!((g.oscillation(&f, 0.12).unwrap() - 0.1).abs() < 1e-12);
    }
}
