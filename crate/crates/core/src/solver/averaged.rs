use crate::error::{Error, Result};
use crate::graph::{Graph, VertexFunction};

use super::fixed_point::{run, Outcome};
use super::{MethodTag, SolveMethod, SolveOptions, SolveResult};

/// Krasnoselskii-Mann averaging `u <- (1 - w) u + w A_f u`, re-centered.
///
/// `A_f` is nonexpansive in the oscillation seminorm and has a fixed point
/// modulo constants (with the drift `c_f`), so the averaged iterates converge
/// on every finite graph, loops or not. With `w = 1/2` the period-2 orbits of
/// plain iteration are damped out.
#[derive(Debug, Clone, PartialEq)]
pub struct Averaged {
    pub weight: f64,
    /// Starting point; zero when absent.
    pub seed: Option<Vec<f64>>,
}

impl Default for Averaged {
    fn default() -> Self {
        Self {
            weight: 0.5,
            seed: None,
        }
    }
}

impl Averaged {
    pub fn with_seed(seed: Vec<f64>) -> Self {
        Self {
            seed: Some(seed),
            ..Self::default()
        }
    }
}

impl SolveMethod for Averaged {
    fn name(&self) -> &'static str {
        "averaged"
    }

    fn solve(&self, g: &Graph, f: &VertexFunction, opts: &SolveOptions) -> Result<SolveResult> {
        opts.validate()?;
        g.check_function(f)?;
        if !(self.weight > 0.0 && self.weight < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "averaging weight must lie in (0, 1), got {}",
                self.weight
            )));
        }
        let u0 = match &self.seed {
            Some(s) => VertexFunction::new(s.clone())?.into_values(),
            None => vec![0.0; g.vertex_count()],
        };
        if u0.len() != g.vertex_count() {
            return Err(Error::DimensionMismatch {
                expected: g.vertex_count(),
                found: u0.len(),
            });
        }
        match run(
            g,
            f,
            u0,
            opts.tol,
            opts.n_max,
            self.weight,
            MethodTag::Averaged,
            false,
        ) {
            Outcome::Converged(res) => Ok(res),
            Outcome::Exhausted { best, .. } => Err(Error::NotConverged(Box::new(best))),
            Outcome::PeriodTwo { .. } => unreachable!("period-2 detection disabled"),
        }
    }
}
