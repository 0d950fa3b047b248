use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::engine::cf_bracket_until;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexFunction};

use super::{MethodTag, SolveMethod, SolveOptions, SolveResult};

/// Sweeps spent estimating the initial bracket on `c`.
const PROBE_SWEEPS: usize = 10_000;

/// Gauss-Seidel relaxation at a fixed shift `c`, with `c` narrowed by bisection.
///
/// Each sweep visits vertices in index order and sets
/// `u(x) <- (1 - w) u(x) + w ((min + max)/2 + f(x) - c)` in place. While `c`
/// is below `c_f` the sweeps drift upward, so the sign of the mean residual
/// tells which half of the bracket to keep. Between bisections `c` jumps to
/// the best shift for the current `u`, `c + (max r + min r)/2`, when that
/// stays inside the bracket.
///
/// Restart `k` starts from a ChaCha8 draw seeded with `k` (restart 0 from
/// zero) and uses `damping[k % damping.len()]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectSearch {
    pub damping: Vec<f64>,
}

impl Default for DirectSearch {
    fn default() -> Self {
        Self {
            damping: vec![1.0, 0.5, 0.8, 0.3],
        }
    }
}

fn gauss_seidel(g: &Graph, f: &[f64], u: &mut [f64], c: f64, omega: f64) {
    for x in 0..u.len() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &y in g.neighbors(x) {
            lo = lo.min(u[y]);
            hi = hi.max(u[y]);
        }
        let target = 0.5 * (lo + hi) + f[x] - c;
        u[x] = (1.0 - omega) * u[x] + omega * target;
    }
    let base = u[0];
    for v in u.iter_mut() {
        *v -= base;
    }
}

/// (min, max, mean) of `A_{f-c} u - u`.
fn residual_stats(g: &Graph, f: &[f64], u: &[f64], c: f64) -> (f64, f64, f64) {
    let (mut rmin, mut rmax, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for x in 0..u.len() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &y in g.neighbors(x) {
            lo = lo.min(u[y]);
            hi = hi.max(u[y]);
        }
        let r = 0.5 * (lo + hi) + f[x] - c - u[x];
        rmin = rmin.min(r);
        rmax = rmax.max(r);
        sum += r;
    }
    (rmin, rmax, sum / u.len() as f64)
}

impl SolveMethod for DirectSearch {
    fn name(&self) -> &'static str {
        "direct-search"
    }

    fn solve(&self, g: &Graph, f: &VertexFunction, opts: &SolveOptions) -> Result<SolveResult> {
        opts.validate()?;
        g.check_function(f)?;
        if self.damping.is_empty() || self.damping.iter().any(|w| !(*w > 0.0 && *w <= 1.0)) {
            return Err(Error::InvalidParameter(
                "damping factors must lie in (0, 1]".into(),
            ));
        }
        let probe = cf_bracket_until(g, f, opts.tol, opts.n_max.min(PROBE_SWEEPS))?;
        let mut used = probe.n;
        let restarts = opts.restarts.max(1);
        let per_restart = (opts.n_max.saturating_sub(used) / restarts).max(1);
        let period = g.vertex_count().max(8);
        let fv = f.values();
        let scale = f.oscillation().max(1.0);
        let mut best: Option<SolveResult> = None;

        for restart in 0..restarts {
            let omega = self.damping[restart % self.damping.len()];
            let mut u: Vec<f64> = if restart == 0 {
                vec![0.0; g.vertex_count()]
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(restart as u64);
                (0..g.vertex_count())
                    .map(|_| rng.gen_range(-scale..scale))
                    .collect()
            };
            let (mut lo, mut hi) = (probe.lower, probe.upper);
            let mut c = probe.midpoint();
            let mut best_here = f64::INFINITY;
            for sweep in 1..=per_restart {
                gauss_seidel(g, fv, &mut u, c, omega);
                let (rmin, rmax, rmean) = residual_stats(g, fv, &u, c);
                let c_try = c + 0.5 * (rmin + rmax);
                let r_try = 0.5 * (rmax - rmin);
                if r_try < best_here || r_try <= opts.tol {
                    best_here = r_try;
                    let cand = SolveResult::finish(
                        g,
                        f,
                        u.clone(),
                        c_try,
                        used + sweep,
                        MethodTag::DirectSearch,
                        None,
                    );
                    if cand.residual <= opts.tol {
                        return Ok(cand);
                    }
                    if best.as_ref().is_none_or(|b| cand.residual < b.residual) {
                        best = Some(cand);
                    }
                }
                if sweep % period == 0 {
                    if rmean > 0.0 {
                        lo = lo.max(c);
                    } else {
                        hi = hi.min(c);
                    }
                    c = if c_try > lo && c_try < hi {
                        c_try
                    } else {
                        0.5 * (lo + hi)
                    };
                }
            }
            used += per_restart;
        }
        let mut best = best.expect("at least one sweep ran");
        best.iterations = used;
        Err(Error::NotConverged(Box::new(best)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_finite_graph;

    #[test]
    fn bipartite_edge_in_one_sweep() {
        let g = build_finite_graph(2, &[(0, 1)], false).unwrap();
        let f = VertexFunction::new(vec![1.0, -1.0]).unwrap();
        let res = DirectSearch::default()
            .solve(&g, &f, &SolveOptions::new(1e-9, 20_000))
            .unwrap();
        assert!(res.c.abs() < 1e-6);
        assert!(res.residual <= 1e-9);
        assert_eq!(res.method, MethodTag::DirectSearch);
    }

    #[test]
    fn complete_graph_without_loops() {
        let g = build_finite_graph(3, &[(0, 1), (0, 2), (1, 2)], false).unwrap();
        let f = VertexFunction::new(vec![0.0, 1.0, 4.0]).unwrap();
        let res = DirectSearch::default()
            .solve(&g, &f, &SolveOptions::new(1e-9, 200_000))
            .unwrap();
        assert!((res.c - 5.0 / 3.0).abs() < 1e-6, "{}", res.c);
    }

    #[test]
    fn tiny_budget_fails_honestly() {
        let g = build_finite_graph(4, &[(0, 1), (1, 2), (2, 3)], false).unwrap();
        let f = VertexFunction::new(vec![0.0, 5.0, -3.0, 1.0]).unwrap();
        let err = DirectSearch::default()
            .solve(&g, &f, &SolveOptions::new(1e-14, 3))
            .unwrap_err();
        assert!(matches!(err, Error::NotConverged(_)));
    }
}
