//! Dynamic-programming core of the horizon-n game.
//!
//! `A_f u(x) = (max_{y~x} u(y) + min_{y~x} u(y)) / 2 + f(x)` is the one-step
//! value operator; `u_n = A_f^n u_0` is the value of the game of horizon `n`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, VertexFunction};

#[inline]
fn neighbor_extrema(g: &Graph, u: &[f64], x: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &y in g.neighbors(x) {
        let v = u[y];
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Writes `A_f u` into `out`. Slices must match the vertex count.
pub(crate) fn apply_af_into(g: &Graph, f: &[f64], u: &[f64], out: &mut [f64]) {
    for (x, slot) in out.iter_mut().enumerate() {
        let (lo, hi) = neighbor_extrema(g, u, x);
        *slot = 0.5 * (lo + hi) + f[x];
    }
}

/// One sweep of the value recursion.
pub fn apply_af(g: &Graph, f: &VertexFunction, u: &VertexFunction) -> Result<VertexFunction> {
    g.check_function(f)?;
    g.check_function(u)?;
    let mut out = vec![0.0; g.vertex_count()];
    apply_af_into(g, f.values(), u.values(), &mut out);
    Ok(VertexFunction::from_raw(out))
}

/// The discrete infinity Laplacian on a graph, in its equation form:
/// `u(x) - (min + max)/2`. A solution of the graph equation has this equal to `f`.
pub fn graph_laplacian_residual(g: &Graph, u: &VertexFunction) -> Result<VertexFunction> {
    g.check_function(u)?;
    let out = (0..g.vertex_count())
        .map(|x| {
            let (lo, hi) = neighbor_extrema(g, u.values(), x);
            u[x] - 0.5 * (lo + hi)
        })
        .collect();
    Ok(VertexFunction::from_raw(out))
}

/// Statistics of a value-iteration run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IterationTrace {
    pub u_current: VertexFunction,
    pub n: usize,
    /// `M_k = max(u_k - u_{k-1})` for `k = 1..=n`.
    pub max_increments: Vec<f64>,
    /// `m_k = min(u_k - u_{k-1})` for `k = 1..=n`.
    pub min_increments: Vec<f64>,
    /// `max u_k` for `k = 0..=n`.
    pub max_u: Vec<f64>,
    /// `min u_k` for `k = 0..=n`.
    pub min_u: Vec<f64>,
    /// Every iterate `u_0..=u_n`, only when recorded.
    #[serde(skip)]
    pub iterates: Vec<VertexFunction>,
}

impl IterationTrace {
    /// `max(M_k, -m_k)` for `k = 1..=n`, the sup-norm of each increment.
    pub fn increment_norms(&self) -> Vec<f64> {
        self.max_increments
            .iter()
            .zip(&self.min_increments)
            .map(|(hi, lo)| hi.abs().max(lo.abs()))
            .collect()
    }
}

fn run_iteration(
    g: &Graph,
    f: &VertexFunction,
    u0: &VertexFunction,
    n: usize,
    record: bool,
) -> Result<IterationTrace> {
    g.check_function(f)?;
    g.check_function(u0)?;
    let mut u = u0.values().to_vec();
    let mut next = vec![0.0; u.len()];
    let mut trace = IterationTrace {
        u_current: u0.clone(),
        n,
        max_increments: Vec::with_capacity(n),
        min_increments: Vec::with_capacity(n),
        max_u: Vec::with_capacity(n + 1),
        min_u: Vec::with_capacity(n + 1),
        iterates: Vec::new(),
    };
    trace.max_u.push(u0.max());
    trace.min_u.push(u0.min());
    if record {
        trace.iterates.push(u0.clone());
    }
    for _ in 0..n {
        apply_af_into(g, f.values(), &u, &mut next);
        let (mut inc_lo, mut inc_hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (a, b) in next.iter().zip(&u) {
            let d = a - b;
            inc_lo = inc_lo.min(d);
            inc_hi = inc_hi.max(d);
            lo = lo.min(*a);
            hi = hi.max(*a);
        }
        trace.max_increments.push(inc_hi);
        trace.min_increments.push(inc_lo);
        trace.max_u.push(hi);
        trace.min_u.push(lo);
        std::mem::swap(&mut u, &mut next);
        if record {
            trace.iterates.push(VertexFunction::from_raw(u.clone()));
        }
    }
    trace.u_current = VertexFunction::new(u)?;
    Ok(trace)
}

/// Runs `n` sweeps of the value recursion from `u0`.
pub fn iterate(
    g: &Graph,
    f: &VertexFunction,
    u0: &VertexFunction,
    n: usize,
) -> Result<IterationTrace> {
    run_iteration(g, f, u0, n, false)
}

/// As [`iterate`], keeping every iterate in `trace.iterates`.
pub fn iterate_recording(
    g: &Graph,
    f: &VertexFunction,
    u0: &VertexFunction,
    n: usize,
) -> Result<IterationTrace> {
    run_iteration(g, f, u0, n, true)
}

/// Certified enclosure of the long-term advantage `c_f`.
///
/// With zero terminal payoff, `(max u_n)` is subadditive and `(min u_n)`
/// superadditive in `n`, so `min u_n / n <= c_f <= max u_n / n` for every `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfBracket {
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
    pub tol_met: bool,
}

impl CfBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, value: f64, slack: f64) -> bool {
        self.lower - slack <= value && value <= self.upper + slack
    }
}

/// Bracket after exactly `n` sweeps from zero terminal payoff.
pub fn cf_bracket(g: &Graph, f: &VertexFunction, n: usize) -> Result<CfBracket> {
    if n == 0 {
        return Err(Error::InvalidParameter("cf_bracket needs n >= 1".into()));
    }
    bracket_loop(g, f, n, None)
}

/// Iterates until the bracket is at most `tol` wide or `n_max` sweeps ran.
pub fn cf_bracket_until(
    g: &Graph,
    f: &VertexFunction,
    tol: f64,
    n_max: usize,
) -> Result<CfBracket> {
    if n_max == 0 {
        return Err(Error::InvalidParameter("n_max must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    bracket_loop(g, f, n_max, Some(tol))
}

fn bracket_loop(
    g: &Graph,
    f: &VertexFunction,
    n_max: usize,
    tol: Option<f64>,
) -> Result<CfBracket> {
    g.check_function(f)?;
    let mut u = vec![0.0; g.vertex_count()];
    let mut next = vec![0.0; g.vertex_count()];
    let mut bracket = CfBracket {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        n: 0,
        tol_met: false,
    };
    for k in 1..=n_max {
        apply_af_into(g, f.values(), &u, &mut next);
        std::mem::swap(&mut u, &mut next);
        let (lo, hi) = u
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let n = k as f64;
        bracket = CfBracket {
            lower: lo / n,
            upper: hi / n,
            n: k,
            tol_met: false,
        };
        if let Some(tol) = tol {
            if bracket.width() <= tol {
                bracket.tol_met = true;
                return Ok(bracket);
            }
        }
    }
    Ok(bracket)
}

/// `D_f(u, c) = ||A_{f-c} u - u||`, zero exactly when `u` solves the graph
/// equation with payoff `f - c`.
pub fn residual_df(g: &Graph, f: &VertexFunction, u: &VertexFunction, c: f64) -> Result<f64> {
    g.check_function(f)?;
    g.check_function(u)?;
    Ok(residual_raw(g, f.values(), u.values(), c))
}

pub(crate) fn residual_raw(g: &Graph, f: &[f64], u: &[f64], c: f64) -> f64 {
    (0..g.vertex_count())
        .map(|x| {
            let (lo, hi) = neighbor_extrema(g, u, x);
            (0.5 * (lo + hi) + f[x] - c - u[x]).abs()
        })
        .fold(0.0, f64::max)
}

fn ball_filter(g: &Graph, u: &VertexFunction, r: f64, take_max: bool) -> Result<VertexFunction> {
    g.check_function(u)?;
    let balls = g.balls(r)?;
    let out = balls
        .iter()
        .map(|ball| {
            let vals = ball.iter().map(|&y| u[y]);
            if take_max {
                vals.fold(f64::NEG_INFINITY, f64::max)
            } else {
                vals.fold(f64::INFINITY, f64::min)
            }
        })
        .collect();
    Ok(VertexFunction::from_raw(out))
}

/// Pointwise maximum of `u` over closed cloud balls of radius `r`.
pub fn max_filter(g: &Graph, u: &VertexFunction, r: f64) -> Result<VertexFunction> {
    ball_filter(g, u, r, true)
}

/// Pointwise minimum of `u` over closed cloud balls of radius `r`.
pub fn min_filter(g: &Graph, u: &VertexFunction, r: f64) -> Result<VertexFunction> {
    ball_filter(g, u, r, false)
}

/// `-Δ_∞^r u(x) = (2u(x) - max_{B(x,r)} u - min_{B(x,r)} u) / r^2` on the cloud.
pub fn neg_eps_laplacian(g: &Graph, u: &VertexFunction, r: f64) -> Result<VertexFunction> {
    g.check_function(u)?;
    let balls = g.balls(r)?;
    let r2 = r * r;
    let out = balls
        .iter()
        .enumerate()
        .map(|(x, ball)| {
            let (lo, hi) = ball
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
                    (lo.min(u[y]), hi.max(u[y]))
                });
            (2.0 * u[x] - lo - hi) / r2
        })
        .collect();
    Ok(VertexFunction::from_raw(out))
}
