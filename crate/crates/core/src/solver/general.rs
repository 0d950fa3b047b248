use crate::error::{Error, Result};
use crate::graph::{Graph, VertexFunction};

use super::fixed_point::{run, Outcome};
use super::{Averaged, DirectSearch, MethodTag, SolveMethod, SolveOptions, SolveResult};

/// Any finite graph: plain iteration, then averaging seeded from where it
/// stopped (the two-step average when a period-2 orbit was seen), then direct
/// search with restarts. The sweep budget `n_max` is shared by all phases.
#[derive(Debug, Clone, Copy, Default)]
pub struct General;

fn phase_a_budget(g: &Graph, n_max: usize) -> usize {
    if g.has_all_loops() {
        (n_max / 2).max(1)
    } else {
        n_max.min(1000.max(20 * g.vertex_count()))
    }
}

fn keep_better(best: Option<SolveResult>, cand: SolveResult) -> Option<SolveResult> {
    match best {
        Some(b) if b.residual <= cand.residual => Some(b),
        _ => Some(cand),
    }
}

impl SolveMethod for General {
    fn name(&self) -> &'static str {
        "general"
    }

    fn solve(&self, g: &Graph, f: &VertexFunction, opts: &SolveOptions) -> Result<SolveResult> {
        opts.validate()?;
        g.check_function(f)?;
        let budget_a = phase_a_budget(g, opts.n_max);
        let mut best = None;
        let (seed, mut used) = match run(
            g,
            f,
            vec![0.0; g.vertex_count()],
            opts.tol,
            budget_a,
            1.0,
            MethodTag::FixedPoint,
            true,
        ) {
            Outcome::Converged(res) => return Ok(res),
            Outcome::PeriodTwo { seed, iterations } => (seed, iterations),
            Outcome::Exhausted {
                best: b,
                last,
                iterations,
            } => {
                best = keep_better(best, b);
                (last, iterations)
            }
        };

        let remaining = opts.n_max.saturating_sub(used);
        if remaining == 0 {
            return Err(Error::NotConverged(Box::new(best.expect("phase A ran"))));
        }
        let budget_b = (remaining / 2).max(1);
        match Averaged::with_seed(seed).solve(
            g,
            f,
            &SolveOptions {
                n_max: budget_b,
                ..*opts
            },
        ) {
            Ok(mut res) => {
                res.iterations += used;
                return Ok(res);
            }
            Err(Error::NotConverged(b)) => best = keep_better(best, *b),
            Err(e) => return Err(e),
        }
        used += budget_b;

        let budget_c = opts.n_max.saturating_sub(used);
        if budget_c > 0 {
            match DirectSearch::default().solve(
                g,
                f,
                &SolveOptions {
                    n_max: budget_c,
                    ..*opts
                },
            ) {
                Ok(mut res) => {
                    res.iterations += used;
                    return Ok(res);
                }
                Err(Error::NotConverged(b)) => best = keep_better(best, *b),
                Err(e) => return Err(e),
            }
        }
        let mut best = best.expect("some phase ran");
        best.iterations = opts.n_max;
        Err(Error::NotConverged(Box::new(best)))
    }
}
