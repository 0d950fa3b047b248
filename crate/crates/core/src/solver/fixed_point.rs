use crate::error::{Error, Result};
use crate::graph::{Graph, VertexFunction};

use super::{
    fit_geometric_rate, MethodTag, SolveMethod, SolveOptions, SolveResult, Sweeper, PERIOD_TWO_TOL,
};

/// Plain value iteration with the drift removed after every sweep.
///
/// Subtracting a constant commutes with `A_f`, so the re-centered iterates are
/// the game values `u_n` up to an additive constant. On graphs with loops they
/// converge, and the increment `u_{n+1} - u_n` tends to the constant `c_f`.
#[derive(Debug, Clone, Copy, Default)]
pub struct FixedPoint;

pub(crate) enum Outcome {
    Converged(SolveResult),
    /// Increments alternate with period two; carries the two-step average.
    PeriodTwo {
        seed: Vec<f64>,
        iterations: usize,
    },
    Exhausted {
        best: SolveResult,
        last: Vec<f64>,
        iterations: usize,
    },
}

/// Sweeps `u <- (1 - weight) u + weight A_f u` until the increment spread
/// certifies `tol`, the budget runs out, or (optionally) a period-2 orbit shows up.
pub(crate) fn run(
    g: &Graph,
    f: &VertexFunction,
    u0: Vec<f64>,
    tol: f64,
    budget: usize,
    weight: f64,
    method: MethodTag,
    detect_period_two: bool,
) -> Outcome {
    let mut sw = Sweeper::new(g, f.values(), u0);
    let mut spreads = Vec::new();
    let mut history: [Option<Vec<f64>>; 2] = [None, None];
    let mut best: Option<SolveResult> = None;
    for k in 1..=budget {
        let (lo, hi) = sw.evaluate();
        let c = 0.5 * (lo + hi);
        spreads.push(hi - lo);
        if 0.5 * (hi - lo) <= tol {
            let res = SolveResult::finish(g, f, sw.u.clone(), c, k, method, fit_rate(&spreads));
            if res.residual <= tol {
                return Outcome::Converged(res);
            }
        }
        if detect_period_two {
            if let [Some(older), Some(prev)] = &history {
                if sup_dist(&sw.increment, older) <= PERIOD_TWO_TOL
                    && sup_dist(&sw.increment, prev) > PERIOD_TWO_TOL
                {
                    let seed =
                        sw.u.iter()
                            .zip(&sw.next)
                            .map(|(a, b)| 0.5 * (a + b))
                            .collect();
                    return Outcome::PeriodTwo {
                        seed,
                        iterations: k,
                    };
                }
            }
            history.rotate_left(1);
            history[1] = Some(sw.increment.clone());
        }
        if k == budget || k % 1024 == 0 {
            let candidate = SolveResult::finish(g, f, sw.u.clone(), c, k, method, None);
            if best
                .as_ref()
                .is_none_or(|b| candidate.residual < b.residual)
            {
                best = Some(candidate);
            }
        }
        sw.advance(weight);
    }
    let mut best = best.expect("budget is at least one sweep");
    best.rate_alpha = fit_rate(&spreads);
    Outcome::Exhausted {
        best,
        last: sw.u,
        iterations: budget,
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Geometric decay rate of the increment spread over the last half of the run.
pub(crate) fn fit_rate(spreads: &[f64]) -> Option<f64> {
    let tail = &spreads[spreads.len() / 2..];
    fit_geometric_rate(tail, 1e-13)
        .map(|fit| fit.alpha)
        .filter(|a| *a > 0.0 && *a < 1.0)
}

impl SolveMethod for FixedPoint {
    fn name(&self) -> &'static str {
        "fixed-point"
    }

    fn solve(&self, g: &Graph, f: &VertexFunction, opts: &SolveOptions) -> Result<SolveResult> {
        opts.validate()?;
        g.check_function(f)?;
        if !g.has_all_loops() {
            return Err(Error::MissingLoops);
        }
        match run(
            g,
            f,
            vec![0.0; g.vertex_count()],
            opts.tol,
            opts.n_max,
            1.0,
            MethodTag::FixedPoint,
            false,
        ) {
            Outcome::Converged(res) => Ok(res),
            Outcome::Exhausted { best, .. } => Err(Error::NotConverged(Box::new(best))),
            Outcome::PeriodTwo { .. } => unreachable!("period-2 detection disabled"),
        }
    }
}
