use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};
use serde::{Deserialize, Serialize};

use crate::engine::IterationTrace;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexFunction};

/// Minimum number of points a rate fit accepts.
pub const MIN_FIT_POINTS: usize = 10;

/// Consecutive sweeps with identical extremal neighbors required before
/// stabilization is declared.
const STABLE_WINDOW: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricFit {
    pub alpha: f64,
    pub r_squared: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stabilization {
    /// First sweep from which every vertex keeps the same (argmin, argmax) neighbors.
    pub stabilized_at: Option<usize>,
    pub rate_alpha: Option<f64>,
    pub r_squared: Option<f64>,
}

/// Least-squares fit of `log v_k = a + k log(alpha)` over the entries above `floor`.
///
/// Returns `None` with fewer than [`MIN_FIT_POINTS`] usable entries.
pub fn fit_geometric_rate(values: &[f64], floor: f64) -> Option<GeometricFit> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite() && **v > floor && **v > 0.0)
        .map(|(k, v)| (k as f64, v.ln()))
        .collect();
    if pts.len() < MIN_FIT_POINTS {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 {
        1.0
    } else {
        (sxy * sxy) / (sxx * syy)
    };
    Some(GeometricFit {
        alpha: slope.exp(),
        r_squared,
        points: pts.len(),
    })
}

/// Lowest-index (argmin, argmax) neighbor of every vertex.
fn extremal_pairs(g: &Graph, u: &[f64]) -> Vec<(usize, usize)> {
    (0..g.vertex_count())
        .map(|x| {
            let nb = g.neighbors(x);
            let (mut lo, mut hi) = (nb[0], nb[0]);
            for &y in &nb[1..] {
                if u[y] < u[lo] {
                    lo = y;
                }
                if u[y] > u[hi] {
                    hi = y;
                }
            }
            (lo, hi)
        })
        .collect()
}

/// Whether every closed class of the chain `x -> argmin(x)`, `x -> argmax(x)`
/// (each with probability one half) is aperiodic.
fn essential_classes_aperiodic(pairs: &[(usize, usize)]) -> bool {
    let mut dg: DiGraph<(), ()> = DiGraph::with_capacity(pairs.len(), 2 * pairs.len());
    let nodes: Vec<NodeIndex> = (0..pairs.len()).map(|_| dg.add_node(())).collect();
    for (x, &(lo, hi)) in pairs.iter().enumerate() {
        dg.update_edge(nodes[x], nodes[lo], ());
        dg.update_edge(nodes[x], nodes[hi], ());
    }
    let mut class_of = vec![usize::MAX; pairs.len()];
    let sccs = tarjan_scc(&dg);
    for (c, comp) in sccs.iter().enumerate() {
        for n in comp {
            class_of[n.index()] = c;
        }
    }
    for (c, comp) in sccs.iter().enumerate() {
        let closed = comp
            .iter()
            .all(|n| dg.neighbors(*n).all(|m| class_of[m.index()] == c));
        if !closed {
            continue;
        }
        // Period = gcd of level(u) + 1 - level(v) over edges inside the class.
        let mut level = vec![usize::MAX; pairs.len()];
        let start = comp[0];
        level[start.index()] = 0;
        let mut queue = std::collections::VecDeque::from([start]);
        let mut period = 0usize;
        while let Some(a) = queue.pop_front() {
            for b in dg.neighbors(a) {
                if level[b.index()] == usize::MAX {
                    level[b.index()] = level[a.index()] + 1;
                    queue.push_back(b);
                } else {
                    let diff = (level[a.index()] + 1).abs_diff(level[b.index()]);
                    period = gcd(period, diff);
                }
            }
        }
        if period != 1 {
            return false;
        }
    }
    true
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Detects when the extremal-neighbor structure of a recorded trace freezes
/// and fits the geometric decay of the increment spread `M_k - m_k` after it.
///
/// Stabilization also requires the induced two-neighbor Markov chain to have
/// aperiodic closed classes; otherwise the increments can cycle forever with a
/// frozen pair structure (bipartite graphs without loops).
pub fn analyze_stabilization(
    g: &Graph,
    f: &VertexFunction,
    trace: &IterationTrace,
) -> Result<Stabilization> {
    g.check_function(f)?;
    if trace.iterates.len() != trace.n + 1 {
        return Err(Error::InvalidParameter(
            "stabilization analysis needs a trace produced by iterate_recording".into(),
        ));
    }
    let n = trace.n;
    let none = Stabilization {
        stabilized_at: None,
        rate_alpha: None,
        r_squared: None,
    };
    if n == 0 {
        return Ok(none);
    }
    // pairs[k - 1] is the structure used by sweep k, read off u_{k-1}.
    let pairs: Vec<Vec<(usize, usize)>> = trace.iterates[..n]
        .iter()
        .map(|u| extremal_pairs(g, u.values()))
        .collect();
    let spreads: Vec<f64> = trace
        .max_increments
        .iter()
        .zip(&trace.min_increments)
        .map(|(hi, lo)| hi - lo)
        .collect();
    let mut s = n;
    while s > 1 && pairs[s - 2] == pairs[n - 1] {
        s -= 1;
    }
    let exactly_converged = spreads[n - 1] == 0.0;
    let window_ok = n - s + 1 >= STABLE_WINDOW || exactly_converged;
    if !window_ok || !(exactly_converged || essential_classes_aperiodic(&pairs[n - 1])) {
        return Ok(none);
    }
    let scale = trace
        .max_u
        .iter()
        .chain(&trace.min_u)
        .fold(1.0f64, |acc, v| acc.max(v.abs()));
    let post = &spreads[s - 1..];
    let floor = 1e-12 * scale;
    let usable: Vec<f64> = post.iter().copied().filter(|v| *v > floor).collect();
    let fit = fit_geometric_rate(&usable[usable.len() / 2..], floor);
    Ok(Stabilization {
        stabilized_at: Some(s),
        rate_alpha: fit.map(|f| f.alpha),
        r_squared: fit.map(|f| f.r_squared),
    })
}
