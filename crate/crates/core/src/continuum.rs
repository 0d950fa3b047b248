//! Epsilon-adjacency discretizations of convex Euclidean domains, the ladder
//! `eps -> c_f(eps)`, and the checks that go with solutions of
//! `-Δ_∞^ε u = f - c`.
//!
//! Domains are sampled once; each rung of a ladder reuses the same cloud with
//! a different radius. The sampling mesh `h` is the grid pitch, and every
//! radius must be at least `2h`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::engine::{cf_bracket, cf_bracket_until, iterate, neg_eps_laplacian, CfBracket};
use crate::error::{Error, Result};
use crate::graph::{build_eps_adjacency, euclidean, Graph, PointCloud, VertexFunction};
use crate::solver::{FixedPoint, MethodTag, SolveMethod, SolveOptions, SolveResult};

/// Relative slack for `eps >= 2 h` so that e.g. `0.1 >= 2 * 0.05` holds.
const MESH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", content = "params", rename_all = "kebab-case")]
pub enum Shape {
    Interval { a: f64, b: f64 },
    Disc { r: f64 },
    ConvexPolygon { vertices: Vec<[f64; 2]> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Sampler {
    UniformGrid,
    /// Center (when `0` is among the radii) plus `n_rays` equally spaced
    /// points on each circle of radius `s > 0`.
    PolarSpokes {
        n_rays: usize,
        radii: Vec<f64>,
    },
}

/// A convex domain with its sampling rule. JSON form:
/// `{"shape": "interval", "params": {"a": 0, "b": 1}, "mesh": 0.05, "sampler": {"kind": "uniform-grid"}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpecRaw")]
pub struct DomainSpec {
    #[serde(flatten)]
    shape: Shape,
    mesh: f64,
    sampler: Sampler,
}

#[derive(Deserialize)]
struct DomainSpecRaw {
    #[serde(flatten)]
    shape: Shape,
    mesh: f64,
    sampler: Sampler,
}

impl TryFrom<DomainSpecRaw> for DomainSpec {
    type Error = Error;

    fn try_from(raw: DomainSpecRaw) -> Result<Self> {
        DomainSpec::new(raw.shape, raw.mesh, raw.sampler)
    }
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

impl DomainSpec {
    pub fn new(shape: Shape, mesh: f64, sampler: Sampler) -> Result<Self> {
        if !(mesh.is_finite() && mesh > 0.0) {
            return Err(invalid(format!("mesh must be positive, got {mesh}")));
        }
        match &shape {
            Shape::Interval { a, b } => {
                if !(a.is_finite() && b.is_finite() && a < b) {
                    return Err(invalid(format!("interval needs a < b, got [{a}, {b}]")));
                }
            }
            Shape::Disc { r } => {
                if !(r.is_finite() && *r > 0.0) {
                    return Err(invalid(format!("disc radius must be positive, got {r}")));
                }
            }
            Shape::ConvexPolygon { vertices } => check_convex(vertices)?,
        }
        if let Sampler::PolarSpokes { n_rays, radii } = &sampler {
            let Shape::Disc { r } = shape else {
                return Err(invalid("polar spokes sample discs only"));
            };
            check_radii(r, radii)?;
            if *n_rays < 1 {
                return Err(invalid("polar spokes need at least one ray"));
            }
        }
        Ok(Self {
            shape,
            mesh,
            sampler,
        })
    }

    pub fn interval(a: f64, b: f64, mesh: f64) -> Result<Self> {
        Self::new(Shape::Interval { a, b }, mesh, Sampler::UniformGrid)
    }

    /// Disc sampled on `n_rays` spokes through the given radii.
    pub fn polar_disc(r: f64, n_rays: usize, radii: Vec<f64>) -> Result<Self> {
        let mesh = radii.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        let mesh = if mesh > 0.0 { mesh } else { r };
        Self::new(
            Shape::Disc { r },
            mesh,
            Sampler::PolarSpokes { n_rays, radii },
        )
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn sampler(&self) -> &Sampler {
        &self.sampler
    }

    pub fn dim(&self) -> usize {
        match self.shape {
            Shape::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let tol = 1e-12;
        match &self.shape {
            Shape::Interval { a, b } => p[0] >= a - tol && p[0] <= b + tol,
            Shape::Disc { r } => euclidean(p, &[0.0, 0.0]) <= r + tol,
            Shape::ConvexPolygon { vertices } => {
                let q = [p[0], p[1]];
                let n = vertices.len();
                (0..n).all(|i| cross(vertices[i], vertices[(i + 1) % n], q) >= -tol)
            }
        }
    }

    /// Sample points; for grids the pitch is at most `mesh`.
    pub fn sample(&self) -> Vec<Vec<f64>> {
        match (&self.shape, &self.sampler) {
            (Shape::Interval { a, b }, _) => {
                let n = segments(b - a, self.mesh);
                (0..=n)
                    .map(|i| vec![a + (b - a) * i as f64 / n as f64])
                    .collect()
            }
            (Shape::Disc { .. }, Sampler::PolarSpokes { n_rays, radii }) => {
                let mut pts = Vec::new();
                for &s in radii {
                    if s == 0.0 {
                        pts.push(vec![0.0, 0.0]);
                        continue;
                    }
                    for j in 0..*n_rays {
                        let t = 2.0 * PI * j as f64 / *n_rays as f64;
                        pts.push(vec![s * t.cos(), s * t.sin()]);
                    }
                }
                pts
            }
            (Shape::Disc { r }, Sampler::UniformGrid) => {
                let r = *r;
                let mut pts = self.lattice(-r, r, -r, r);
                let n = segments(2.0 * PI * r, self.mesh);
                for j in 0..n {
                    let t = 2.0 * PI * j as f64 / n as f64;
                    pts.push(vec![r * t.cos(), r * t.sin()]);
                }
                dedup_points(pts, self.mesh * 1e-6)
            }
            (Shape::ConvexPolygon { vertices }, _) => {
                let (x0, x1) = minmax(vertices.iter().map(|v| v[0]));
                let (y0, y1) = minmax(vertices.iter().map(|v| v[1]));
                let mut pts = self.lattice(x0, x1, y0, y1);
                let n = vertices.len();
                for i in 0..n {
                    let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                    let m = segments(euclidean(&p, &q), self.mesh);
                    for k in 0..m {
                        let t = k as f64 / m as f64;
                        pts.push(vec![p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
                    }
                }
                dedup_points(pts, self.mesh * 1e-6)
            }
        }
    }

    fn lattice(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> Vec<Vec<f64>> {
        let nx = segments(x1 - x0, self.mesh);
        let ny = segments(y1 - y0, self.mesh);
        let mut pts = Vec::new();
        for i in 0..=nx {
            for j in 0..=ny {
                let p = vec![
                    x0 + (x1 - x0) * i as f64 / nx as f64,
                    y0 + (y1 - y0) * j as f64 / ny as f64,
                ];
                if self.contains(&p) {
                    pts.push(p);
                }
            }
        }
        pts
    }
}

fn segments(length: f64, pitch: f64) -> usize {
    ((length / pitch) - 1e-9).ceil().max(1.0) as usize
}

fn minmax(it: impl Iterator<Item = f64>) -> (f64, f64) {
    it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}

fn dedup_points(pts: Vec<Vec<f64>>, tol: f64) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.iter().all(|q| euclidean(&p, q) > tol) {
            out.push(p);
        }
    }
    out
}

fn check_convex(vertices: &[[f64; 2]]) -> Result<()> {
    let n = vertices.len();
    if n < 3 {
        return Err(invalid("a polygon needs at least three vertices"));
    }
    if vertices.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid("polygon vertices must be finite"));
    }
    let mut area = 0.0;
    for i in 0..n {
        let (o, a, b) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
        if cross(o, a, b) <= 0.0 {
            return Err(invalid(format!(
                "polygon is not strictly convex counterclockwise at vertex {}",
                (i + 1) % n
            )));
        }
        area += o[0] * a[1] - a[0] * o[1];
    }
    if area <= 0.0 {
        return Err(invalid("polygon vertices must be listed counterclockwise"));
    }
    Ok(())
}

fn check_radii(r: f64, radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(invalid("radii set is empty"));
    }
    if radii
        .iter()
        .any(|s| !(s.is_finite() && *s >= 0.0 && *s <= r * (1.0 + 1e-12)))
    {
        return Err(invalid(format!("radii must lie in [0, {r}]")));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("radii must be strictly increasing"));
    }
    Ok(())
}

/// A sampled domain with its epsilon-adjacency graph and the sampled payoff.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub graph: Graph,
    pub f: VertexFunction,
    pub eps: f64,
    pub mesh: f64,
}

impl Discretization {
    pub fn points(&self) -> &[Vec<f64>] {
        self.graph.cloud().expect("eps-adjacency graph").points()
    }
}

pub fn discretize(
    domain: &DomainSpec,
    f: &dyn Fn(&[f64]) -> f64,
    eps: f64,
) -> Result<Discretization> {
    if !(eps.is_finite() && eps > 0.0) {
        return Err(invalid(format!("eps must be positive, got {eps}")));
    }
    if eps < 2.0 * domain.mesh * (1.0 - MESH_SLACK) {
        return Err(invalid(format!(
            "eps {eps} is below twice the mesh {}",
            domain.mesh
        )));
    }
    let points = domain.sample();
    let values: Vec<f64> = points.iter().map(|p| f(p)).collect();
    let f = VertexFunction::new(values)?;
    let graph = build_eps_adjacency(PointCloud::new(points, eps)?)?;
    Ok(Discretization {
        graph,
        f,
        eps,
        mesh: domain.mesh,
    })
}

/// `c_f(eps)` bracket after exactly `n` sweeps with the unscaled payoff `f`.
pub fn cf_eps(
    domain: &DomainSpec,
    f: &dyn Fn(&[f64]) -> f64,
    eps: f64,
    n: usize,
) -> Result<CfBracket> {
    let d = discretize(domain, f, eps)?;
    cf_bracket(&d.graph, &d.f, n)
}

/// As [`cf_eps`], stopping once the bracket is `tol` wide.
pub fn cf_eps_until(
    domain: &DomainSpec,
    f: &dyn Fn(&[f64]) -> f64,
    eps: f64,
    tol: f64,
    n_max: usize,
) -> Result<CfBracket> {
    let d = discretize(domain, f, eps)?;
    cf_bracket_until(&d.graph, &d.f, tol, n_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    Halving,
    Thirding,
}

impl Schedule {
    pub fn factor(self) -> f64 {
        match self {
            Schedule::Halving => 2.0,
            Schedule::Thirding => 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rung {
    pub eps: f64,
    pub bracket: CfBracket,
    /// `osc(f, 2 eps)` on the cloud.
    pub osc_2eps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CfLadder {
    pub base_eps: f64,
    pub schedule: Schedule,
    pub rungs: Vec<Rung>,
    /// `osc(f, 2 base_eps)`.
    pub certificate: f64,
    /// Deepest rung midpoint.
    pub estimate: f64,
    /// `osc(f, 2 eps_deepest)` plus the deepest bracket width.
    pub uncertainty: f64,
}

/// A rung pair `j < k` with `|c(eps_k) - c(eps_j)|` above `osc(f, 2 eps_j)`
/// plus both bracket widths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderViolation {
    pub coarse: usize,
    pub fine: usize,
    pub gap: f64,
    pub allowance: f64,
}

impl CfLadder {
    /// Checks the step bound between every pair of rungs, not only against rung 0.
    pub fn violations(&self) -> Vec<LadderViolation> {
        let mut out = Vec::new();
        for (j, a) in self.rungs.iter().enumerate() {
            for (k, b) in self.rungs.iter().enumerate().skip(j + 1) {
                let gap = (b.bracket.midpoint() - a.bracket.midpoint()).abs();
                let allowance = a.osc_2eps + a.bracket.width() + b.bracket.width();
                if gap > allowance {
                    out.push(LadderViolation {
                        coarse: j,
                        fine: k,
                        gap,
                        allowance,
                    });
                }
            }
        }
        out
    }
}

/// Deepest `k` with `base_eps / factor^k >= 2 mesh`, if any.
pub fn max_ladder_depth(mesh: f64, base_eps: f64, schedule: Schedule) -> Option<usize> {
    let floor = 2.0 * mesh * (1.0 - MESH_SLACK);
    if base_eps < floor {
        return None;
    }
    let mut k = 0;
    while base_eps / schedule.factor().powi(k as i32 + 1) >= floor {
        k += 1;
    }
    Some(k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LadderOptions {
    /// Target bracket width per rung.
    pub tol: f64,
    pub n_max: usize,
}

impl Default for LadderOptions {
    fn default() -> Self {
        Self {
            tol: 1e-3,
            n_max: 1_000_000,
        }
    }
}

pub fn cf_ladder(
    domain: &DomainSpec,
    f: &dyn Fn(&[f64]) -> f64,
    base_eps: f64,
    depth: usize,
    schedule: Schedule,
    opts: LadderOptions,
) -> Result<CfLadder> {
    let max_depth = max_ladder_depth(domain.mesh, base_eps, schedule);
    if max_depth.is_none_or(|m| depth > m) {
        return Err(Error::MeshTooCoarse {
            requested: depth,
            max_depth,
        });
    }
    let base = discretize(domain, f, base_eps)?;
    let certificate = base.graph.oscillation(&base.f, 2.0 * base_eps)?;
    let mut rungs = Vec::with_capacity(depth + 1);
    for k in 0..=depth {
        let eps = base_eps / schedule.factor().powi(k as i32);
        let graph = if k == 0 {
            base.graph.clone()
        } else {
            build_eps_adjacency(base.graph.cloud()?.with_epsilon(eps)?)?
        };
        let bracket = cf_bracket_until(&graph, &base.f, opts.tol, opts.n_max)?;
        let osc_2eps = graph.oscillation(&base.f, 2.0 * eps)?;
        rungs.push(Rung {
            eps,
            bracket,
            osc_2eps,
        });
    }
    let deepest = rungs.last().expect("depth + 1 rungs");
    Ok(CfLadder {
        base_eps,
        schedule,
        certificate,
        estimate: deepest.bracket.midpoint(),
        uncertainty: deepest.osc_2eps + deepest.bracket.width(),
        rungs,
    })
}

/// A solution of `-Δ_∞^ε u = f - c` on a sampled domain.
///
/// `result.c` is the refined shift `c_mid + 2 d / eps^2`, where `d` is the
/// drift the fixed-point solver found for the payoff `eps^2 (f - c_mid) / 2`.
/// `result.residual` is the graph residual for that scaled payoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsSolution {
    pub result: SolveResult,
    pub eps: f64,
    /// Midpoint of the `c_f(eps)` bracket used to shift the payoff.
    pub c_mid: f64,
    pub bracket: CfBracket,
    /// `max |-Δ_∞^ε u - (f - c)|` over the cloud, at most `tol / eps^2`.
    pub pde_residual: f64,
}

pub fn solve_eps(
    domain: &DomainSpec,
    f: &dyn Fn(&[f64]) -> f64,
    eps: f64,
    tol: f64,
    n_max: usize,
) -> Result<(Discretization, EpsSolution)> {
    let d = discretize(domain, f, eps)?;
    let sol = solve_discretized(&d, tol, n_max)?;
    Ok((d, sol))
}

/// Solves on an existing discretization; see [`solve_eps`].
pub fn solve_discretized(d: &Discretization, tol: f64, n_max: usize) -> Result<EpsSolution> {
    let eps = d.eps;
    let scale = 0.5 * eps * eps;
    let bracket = cf_bracket_until(&d.graph, &d.f, tol.max(1e-6), n_max.min(100_000))?;
    let c_mid = bracket.midpoint();
    let payoff = d.f.map(|v| scale * (v - c_mid))?;
    // -Δ = 2 (graph residual) / eps^2, so halve the graph tolerance.
    let opts = SolveOptions::new(0.5 * tol, n_max);
    let mut result = match FixedPoint.solve(&d.graph, &payoff, &opts) {
        Ok(r) => r,
        Err(Error::NotConverged(mut best)) => {
            best.c = c_mid + best.c / scale;
            return Err(Error::NotConverged(best));
        }
        Err(e) => return Err(e),
    };
    result.c = c_mid + result.c / scale;
    debug_assert_eq!(result.method, MethodTag::FixedPoint);
    let lap = neg_eps_laplacian(&d.graph, &result.u, eps)?;
    let pde_residual = lap
        .values()
        .iter()
        .zip(d.f.values())
        .map(|(l, fv)| (l - (fv - result.c)).abs())
        .fold(0.0, f64::max);
    Ok(EpsSolution {
        result,
        eps,
        c_mid,
        bracket,
        pde_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    /// `K = 5 diam(V) ||f - c||`.
    pub k: f64,
    /// `6 diam(V)^2 ||f - c||`.
    pub osc_bound: f64,
    pub oscillation: f64,
    /// Pair maximizing `|u(x) - u(y)| - K d(x, y) - K eps`.
    pub worst_pair: (usize, usize),
    /// That maximum; nonpositive when every pair passes.
    pub worst_excess: f64,
    pub passed: bool,
}

/// Checks `|u(x) - u(y)| <= K d(x, y) + K eps` over all cloud pairs and
/// `max u - min u <= 6 diam^2 ||f - c||`.
pub fn check_lipschitz(u: &VertexFunction, c: f64, d: &Discretization) -> Result<LipschitzReport> {
    d.graph.check_function(u)?;
    let cloud = d.graph.cloud()?;
    let diam = d.graph.metric_diameter()?;
    let norm =
        d.f.values()
            .iter()
            .map(|v| (v - c).abs())
            .fold(0.0, f64::max);
    let k = 5.0 * diam * norm;
    let osc_bound = 6.0 * diam * diam * norm;
    let n = cloud.len();
    let mut worst_pair = (0, 0);
    let mut worst_excess = f64::NEG_INFINITY;
    for i in 0..n {
        for j in (i + 1)..n {
            let excess = (u[i] - u[j]).abs() - k * cloud.distance(i, j) - k * d.eps;
            if excess > worst_excess {
                worst_excess = excess;
                worst_pair = (i, j);
            }
        }
    }
    if n == 1 {
        worst_excess = -k * d.eps;
    }
    let oscillation = u.oscillation();
    // Allow rounding at the level of the values involved.
    let slack = 1e-9 * (1.0 + u.sup_norm());
    Ok(LipschitzReport {
        k,
        osc_bound,
        oscillation,
        worst_pair,
        worst_excess,
        passed: worst_excess <= slack && oscillation <= osc_bound + slack,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialReport {
    pub n_rays: usize,
    pub sweeps: usize,
    /// `max_k max_x |u_k(x) - v_k(|x|)|`.
    pub max_deviation: f64,
    /// Sweep and disc point where the maximum occurs.
    pub worst: (usize, usize),
    /// `sweeps * osc(g, chord)` with `chord = 2 r sin(pi / n_rays)`.
    pub tol: f64,
    pub passed: bool,
}

/// Iterates on the polar-spoke disc with payoff `g(|x|)` and on the radii
/// cloud of `[0, r]` with payoff `g`, comparing `u_k` with `v_k(|x|)`.
///
/// The allowance charges, per sweep, the variation of `g` across one angular
/// chord of the outermost circle.
pub fn radial_reduction_check(
    r: f64,
    g_radial: &dyn Fn(f64) -> f64,
    eps: f64,
    n: usize,
    n_rays: usize,
    radii: &[f64],
) -> Result<RadialReport> {
    let domain = DomainSpec::polar_disc(r, n_rays, radii.to_vec())?;
    let points = domain.sample();
    let disc = build_eps_adjacency(PointCloud::new(points.clone(), eps)?)?;
    let line_pts: Vec<Vec<f64>> = radii.iter().map(|s| vec![*s]).collect();
    let line = build_eps_adjacency(PointCloud::new(line_pts, eps)?)?;

    // Radius index of every disc point.
    let mut radius_index = Vec::with_capacity(points.len());
    for (i, s) in radii.iter().enumerate() {
        let copies = if *s == 0.0 { 1 } else { n_rays };
        radius_index.extend(std::iter::repeat_n(i, copies));
    }
    let f_disc = VertexFunction::new(radius_index.iter().map(|&i| g_radial(radii[i])).collect())?;
    let f_line = VertexFunction::new(radii.iter().map(|&s| g_radial(s)).collect())?;

    let mut u = VertexFunction::zeros(points.len());
    let mut v = VertexFunction::zeros(radii.len());
    let mut max_deviation: f64 = 0.0;
    let mut worst = (0, 0);
    for k in 1..=n {
        u = iterate(&disc, &f_disc, &u, 1)?.u_current;
        v = iterate(&line, &f_line, &v, 1)?.u_current;
        for (x, &i) in radius_index.iter().enumerate() {
            let dev = (u[x] - v[i]).abs();
            if dev > max_deviation {
                max_deviation = dev;
                worst = (k, x);
            }
        }
    }
    let chord = 2.0 * r * (PI / n_rays as f64).sin();
    let tol = n as f64 * line.oscillation(&f_line, chord)?;
    Ok(RadialReport {
        n_rays,
        sweeps: n,
        max_deviation,
        worst,
        tol,
        passed: max_deviation <= tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignCertificate {
    /// `-Δ u <= f` and `-Δ u >= f`: `c_f(eps) = 0`.
    Both,
    /// `-Δ u <= f`: `c_f(eps) >= 0`.
    Lower,
    /// `-Δ u >= f`: `c_f(eps) <= 0`.
    Upper,
    None,
}

/// Sub/supersolution test at radius `eps`; exact pointwise comparisons.
pub fn subsolution_sign_check(
    g: &Graph,
    f: &VertexFunction,
    u: &VertexFunction,
    eps: f64,
) -> Result<SignCertificate> {
    g.check_function(f)?;
    let lap = neg_eps_laplacian(g, u, eps)?;
    let sub = lap.values().iter().zip(f.values()).all(|(l, fv)| l <= fv);
    let sup = lap.values().iter().zip(f.values()).all(|(l, fv)| l >= fv);
    Ok(match (sub, sup) {
        (true, true) => SignCertificate::Both,
        (true, false) => SignCertificate::Lower,
        (false, true) => SignCertificate::Upper,
        (false, false) => SignCertificate::None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_interval(mesh: f64) -> DomainSpec {
        DomainSpec::interval(0.0, 1.0, mesh).unwrap()
    }

    #[test]
    fn interval_grid_contains_half() {
        let pts = unit_interval(0.05).sample();
        assert_eq!(pts.len(), 21);
        assert!(pts.iter().any(|p| p[0] == 0.5));
        assert_eq!(pts[20][0], 1.0);
    }

    #[test]
    fn nonconvex_polygon_is_rejected() {
        let dart = vec![[0.0, 0.0], [2.0, 0.0], [1.0, 0.3], [1.0, 2.0]];
        assert!(DomainSpec::new(
            Shape::ConvexPolygon { vertices: dart },
            0.1,
            Sampler::UniformGrid
        )
        .is_err());
        let square = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let d = DomainSpec::new(
            Shape::ConvexPolygon { vertices: square },
            0.25,
            Sampler::UniformGrid,
        )
        .unwrap();
        assert_eq!(d.sample().len(), 25);
    }

    #[test]
    fn spokes_only_on_discs() {
        let s = Sampler::PolarSpokes {
            n_rays: 4,
            radii: vec![0.0, 0.5],
        };
        assert!(DomainSpec::new(Shape::Interval { a: 0.0, b: 1.0 }, 0.1, s).is_err());
        let d = DomainSpec::polar_disc(1.0, 4, vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(d.sample().len(), 9);
        assert!(DomainSpec::polar_disc(1.0, 4, vec![0.5, 0.2]).is_err());
    }

    #[test]
    fn disc_grid_stays_inside() {
        let d = DomainSpec::new(Shape::Disc { r: 1.0 }, 0.2, Sampler::UniformGrid).unwrap();
        let pts = d.sample();
        assert!(pts.iter().all(|p| d.contains(p)));
        assert!(pts
            .iter()
            .any(|p| p == &vec![0.0, 0.0] || euclidean(p, &[0.0, 0.0]) < 1e-12));
    }

    #[test]
    fn domain_json_round_trip() {
        let d = unit_interval(0.1);
        let s = serde_json::to_string(&d).unwrap();
        assert!(s.contains("\"shape\":\"interval\""));
        assert!(s.contains("\"params\""));
        let back: DomainSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let bad = r#"{"shape":"interval","params":{"a":1,"b":0},"mesh":0.1,"sampler":{"kind":"uniform-grid"}}"#;
        assert!(serde_json::from_str::<DomainSpec>(bad).is_err());
    }

    #[test]
    fn eps_below_twice_mesh_is_rejected() {
        assert!(discretize(&unit_interval(0.05), &|_| 0.0, 0.09).is_err());
        assert!(discretize(&unit_interval(0.05), &|_| 0.0, 0.1).is_ok());
    }

    #[test]
    fn constant_payoff_bracket_is_exact() {
        let b = cf_eps(&unit_interval(0.05), &|_| 1.5, 0.2, 1).unwrap();
        assert_eq!((b.lower, b.upper), (1.5, 1.5));
    }

    #[test]
    fn ladder_depth_limit() {
        assert_eq!(max_ladder_depth(0.0025, 0.2, Schedule::Halving), Some(5));
        assert_eq!(max_ladder_depth(0.05, 0.05, Schedule::Halving), None);
        let err = cf_ladder(
            &unit_interval(0.05),
            &|_| 0.0,
            0.2,
            3,
            Schedule::Halving,
            LadderOptions::default(),
        )
        .unwrap_err();
        assert!(matches!(
            err,
            Error::MeshTooCoarse {
                requested: 3,
                max_depth: Some(1)
            }
        ));
    }

    #[test]
    fn constant_ladder_rungs_agree() {
        let l = cf_ladder(
            &unit_interval(0.05),
            &|_| 0.7,
            0.4,
            2,
            Schedule::Halving,
            LadderOptions::default(),
        )
        .unwrap();
        assert_eq!(l.rungs.len(), 3);
        assert!(l
            .rungs
            .iter()
            .all(|r| r.bracket.lower == 0.7 && r.bracket.upper == 0.7));
        assert_eq!(l.certificate, 0.0);
        assert!(l.violations().is_empty());
    }

    #[test]
    fn zero_payoff_solution_is_constant() {
        let (_, sol) = solve_eps(&unit_interval(0.05), &|_| 0.0, 0.1, 1e-9, 10_000).unwrap();
        assert!(sol.result.u.values().iter().all(|v| *v == 0.0));
        assert_eq!(sol.result.c, 0.0);
    }

    #[test]
    fn spike_breaks_lipschitz_bound() {
        let (d, sol) = solve_eps(&unit_interval(0.05), &|x| x[0], 0.1, 1e-9, 1_000_000).unwrap();
        assert!(
            check_lipschitz(&sol.result.u, sol.result.c, &d)
                .unwrap()
                .passed
        );
        let mut spiked = sol.result.u.clone().into_values();
        spiked[7] += 10.0;
        let rep = check_lipschitz(&VertexFunction::new(spiked).unwrap(), sol.result.c, &d).unwrap();
        assert!(!rep.passed);
        assert!(rep.worst_pair.0 == 7 || rep.worst_pair.1 == 7);
    }

    #[test]
    fn constant_radial_payoff_has_no_deviation() {
        let radii: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let rep = radial_reduction_check(1.0, &|_| 2.0, 0.2, 10, 8, &radii).unwrap();
        assert_eq!(rep.max_deviation, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn sign_certificates_for_constants() {
        let d = discretize(&unit_interval(0.05), &|x| x[0], 0.1).unwrap();
        let u = VertexFunction::constant(d.f.len(), 3.0);
        assert_eq!(
            subsolution_sign_check(&d.graph, &d.f, &u, 0.1).unwrap(),
            SignCertificate::Lower
        );
        let neg = d.f.map(|v| -v).unwrap();
        assert_eq!(
            subsolution_sign_check(&d.graph, &neg, &u, 0.1).unwrap(),
            SignCertificate::Upper
        );
        let zero = VertexFunction::zeros(d.f.len());
        assert_eq!(
            subsolution_sign_check(&d.graph, &zero, &u, 0.1).unwrap(),
            SignCertificate::Both
        );
    }
}
