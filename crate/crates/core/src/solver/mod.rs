//! Solvers for `A_{f-c} u = u`, i.e. the graph infinity Laplace equation with
//! payoff shifted by the long-term advantage.
//!
//! Each method implements [`SolveMethod`] and is looked up by name through a
//! [`SolverRegistry`]:
//!
//! | name            | graphs             | scheme                                         |
//! |-----------------|--------------------|------------------------------------------------|
//! | `fixed-point`   | loops / eps-graphs | plain value iteration, re-centered each sweep  |
//! | `averaged`      | any finite graph   | `u <- (u + A_f u)/2`, re-centered each sweep    |
//! | `direct-search` | any finite graph   | Gauss-Seidel sweeps at fixed `c`, bisection on `c` |
//! | `general`       | any finite graph   | the three above in sequence                    |

mod averaged;
mod direct_search;
mod fixed_point;
mod general;
mod stabilization;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::engine::residual_raw;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexFunction};

pub use averaged::Averaged;
pub use direct_search::DirectSearch;
pub use fixed_point::FixedPoint;
pub use general::General;
pub use stabilization::{analyze_stabilization, fit_geometric_rate, GeometricFit, Stabilization};

/// Increments at sweeps `n` and `n + 2` agreeing within this (sup norm) while
/// `n` and `n + 1` differ is read as a period-2 orbit.
pub const PERIOD_TWO_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodTag {
    FixedPoint,
    Averaged,
    DirectSearch,
}

impl fmt::Display for MethodTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MethodTag::FixedPoint => "fixed-point",
            MethodTag::Averaged => "averaged",
            MethodTag::DirectSearch => "direct-search",
        };
        f.write_str(s)
    }
}

/// A pair `(u, c)` with `u(0) = 0`, its residual `||A_{f-c} u - u||`, and
/// how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult {
    pub u: VertexFunction,
    pub c: f64,
    pub residual: f64,
    pub iterations: usize,
    pub method: MethodTag,
    pub rate_alpha: Option<f64>,
}

impl SolveResult {
    /// Normalizes `u` so that `u(0) = 0` and recomputes the residual from scratch.
    pub(crate) fn finish(
        g: &Graph,
        f: &VertexFunction,
        mut u: Vec<f64>,
        c: f64,
        iterations: usize,
        method: MethodTag,
        rate_alpha: Option<f64>,
    ) -> Self {
        let base = u[0];
        for v in &mut u {
            *v -= base;
        }
        let residual = residual_raw(g, f.values(), &u, c);
        Self {
            u: VertexFunction::from_raw(u),
            c,
            residual,
            iterations,
            method,
            rate_alpha,
        }
    }

    pub fn converged(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Target for `||A_{f-c} u - u||`.
    pub tol: f64,
    /// Total sweep budget.
    pub n_max: usize,
    /// Restarts for direct search.
    pub restarts: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            n_max: 1_000_000,
            restarts: 4,
        }
    }
}

impl SolveOptions {
    pub fn new(tol: f64, n_max: usize) -> Self {
        Self {
            tol,
            n_max,
            ..Self::default()
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidParameter("n_max must be at least 1".into()));
        }
        Ok(())
    }
}

pub trait SolveMethod: Send + Sync {
    fn name(&self) -> &'static str;

    /// Returns `Err(Error::NotConverged(best))` when the budget runs out.
    fn solve(&self, g: &Graph, f: &VertexFunction, opts: &SolveOptions) -> Result<SolveResult>;
}

pub struct SolverRegistry {
    methods: BTreeMap<&'static str, Box<dyn SolveMethod>>,
}

impl SolverRegistry {
    pub fn empty() -> Self {
        Self {
            methods: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register(Box::new(FixedPoint));
        reg.register(Box::new(Averaged::default()));
        reg.register(Box::new(DirectSearch::default()));
        reg.register(Box::new(General));
        reg
    }

    pub fn register(&mut self, method: Box<dyn SolveMethod>) {
        self.methods.insert(method.name(), method);
    }

    pub fn get(&self, name: &str) -> Result<&dyn SolveMethod> {
        self.methods
            .get(name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::UnknownName {
                kind: "solver",
                name: name.to_string(),
            })
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.methods.keys().copied()
    }
}

impl Default for SolverRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Drift-recentered value iteration; requires a loop at every vertex.
pub fn solve_fixed_point(
    g: &Graph,
    f: &VertexFunction,
    tol: f64,
    n_max: usize,
) -> Result<SolveResult> {
    FixedPoint.solve(g, f, &SolveOptions::new(tol, n_max))
}

/// Iteration, period-2 averaging, then direct search with `restarts` seeds.
pub fn solve_general(
    g: &Graph,
    f: &VertexFunction,
    tol: f64,
    n_max: usize,
    restarts: usize,
) -> Result<SolveResult> {
    General.solve(
        g,
        f,
        &SolveOptions {
            tol,
            n_max,
            restarts,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Verdict {
    Accepted { residual: f64 },
    Rejected { residual: f64 },
}

impl Verdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Verdict::Accepted { .. })
    }

    pub fn residual(&self) -> f64 {
        match *self {
            Verdict::Accepted { residual } | Verdict::Rejected { residual } => residual,
        }
    }
}

/// Accepts `u` iff `u(x) - (min + max)/2 = f(x)` holds everywhere within `tol`.
pub fn verify_solution(
    g: &Graph,
    f: &VertexFunction,
    u: &VertexFunction,
    tol: f64,
) -> Result<Verdict> {
    let residual = crate::engine::residual_df(g, f, u, 0.0)?;
    Ok(if residual <= tol {
        Verdict::Accepted { residual }
    } else {
        Verdict::Rejected { residual }
    })
}

/// Shared sweep state: `u` is kept normalized with `u(0) = 0`.
pub(crate) struct Sweeper<'a> {
    pub g: &'a Graph,
    pub f: &'a [f64],
    pub u: Vec<f64>,
    pub next: Vec<f64>,
    pub increment: Vec<f64>,
}

impl<'a> Sweeper<'a> {
    pub fn new(g: &'a Graph, f: &'a [f64], u: Vec<f64>) -> Self {
        let n = u.len();
        Self {
            g,
            f,
            u,
            next: vec![0.0; n],
            increment: vec![0.0; n],
        }
    }

    /// Computes `A_f u`, stores `A_f u - u` in `increment`, and returns the
    /// increment's (min, max). `u` itself is not advanced.
    pub fn evaluate(&mut self) -> (f64, f64) {
        crate::engine::apply_af_into(self.g, self.f, &self.u, &mut self.next);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for ((d, a), b) in self.increment.iter_mut().zip(&self.next).zip(&self.u) {
            *d = a - b;
            lo = lo.min(*d);
            hi = hi.max(*d);
        }
        (lo, hi)
    }

    /// Replaces `u` by `(1 - weight) u + weight A_f u`, re-centered at vertex 0.
    /// Must follow [`Sweeper::evaluate`].
    pub fn advance(&mut self, weight: f64) {
        if weight == 1.0 {
            std::mem::swap(&mut self.u, &mut self.next);
        } else {
            for (a, b) in self.u.iter_mut().zip(&self.next) {
                *a = (1.0 - weight) * *a + weight * b;
            }
        }
        let base = self.u[0];
        for v in &mut self.u {
            *v -= base;
        }
    }
}
