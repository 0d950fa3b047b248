//! Named, machine-checked reproductions of the closed-form examples.
//!
//! Each row states an expected value, what was computed, the tolerance and
//! how the two are compared. A row whose computation errors is reported as
//! failed with `computed = NaN`.

use serde::{Deserialize, Serialize};

use crate::continuum::{
    cf_eps_until, cf_ladder, radial_reduction_check, DomainSpec, LadderOptions, Schedule,
};
use crate::engine::{
    apply_af, cf_bracket, cf_bracket_until, iterate, iterate_recording, residual_df,
};
use crate::error::{Error, Result};
use crate::graph::{build_finite_graph, Graph, VertexFunction};
use crate::sim::{
    hitting_time_experiment, play, PlaySetup, Pull, Role, StrategyParams, StrategyRegistry,
};
use crate::solver::{solve_fixed_point, solve_general};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `|computed - expected| <= tolerance`
    Within,
    /// `computed <= expected + tolerance`
    AtMost,
    /// `computed >= expected - tolerance`
    AtLeast,
}

impl Comparison {
    pub fn holds(self, expected: f64, computed: f64, tolerance: f64) -> bool {
        match self {
            Comparison::Within => (computed - expected).abs() <= tolerance,
            Comparison::AtMost => computed <= expected + tolerance,
            Comparison::AtLeast => computed >= expected - tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExampleRow {
    pub name: String,
    pub expected: f64,
    pub computed: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ExampleRow {
    fn new(
        name: &str,
        expected: f64,
        computed: f64,
        tolerance: f64,
        comparison: Comparison,
    ) -> Self {
        Self {
            name: name.to_string(),
            expected,
            computed,
            tolerance,
            comparison,
            passed: comparison.holds(expected, computed, tolerance),
            error: None,
        }
    }

    fn failed(name: &str, err: Error) -> Self {
        Self {
            name: name.to_string(),
            expected: f64::NAN,
            computed: f64::NAN,
            tolerance: f64::NAN,
            comparison: Comparison::Within,
            passed: false,
            error: Some(err.to_string()),
        }
    }

    /// Forces failure while keeping the numbers, for rows with side conditions.
    fn require(mut self, ok: bool) -> Self {
        self.passed &= ok;
        self
    }
}

fn vf(values: &[f64]) -> VertexFunction {
    VertexFunction::new(values.to_vec()).expect("finite literal")
}

pub fn path_graph(n: usize, loops: bool) -> Graph {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
    build_finite_graph(n, &edges, loops).expect("path is connected")
}

pub fn complete_graph(n: usize, loops: bool) -> Graph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            edges.push((a, b));
        }
    }
    build_finite_graph(n, &edges, loops).expect("complete graph is connected")
}

pub fn cycle_graph(n: usize, loops: bool) -> Graph {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
    build_finite_graph(n, &edges, loops).expect("cycle is connected")
}

/// Two looped triangles sharing a gray hub. Vertices: 0 black, 1 white,
/// 2 gray hub, 3 black, 4 white.
pub fn bowtie_graph() -> Graph {
    build_finite_graph(5, &[(0, 1), (0, 2), (1, 2), (3, 4), (3, 2), (4, 2)], true)
        .expect("bowtie is connected")
}

/// `-1` on black, `+1` on white, `0` on gray.
pub fn bowtie_payoff() -> VertexFunction {
    vf(&[-1.0, 1.0, 0.0, -1.0, 1.0])
}

/// Three exact solutions of the bowtie equation with zero shift.
pub fn bowtie_solutions() -> [VertexFunction; 3] {
    [
        vf(&[0.0, 2.0, 1.0, 0.0, 2.0]),
        vf(&[0.0, 2.0, 1.5, 1.0, 3.0]),
        vf(&[0.0, 2.0, 0.5, -1.0, 1.0]),
    ]
}

/// Piecewise linear on `[0, 1]` through `(0, 1)`, `(1/2, 1)`, `(1, -1)`.
pub fn interval_example_payoff(x: f64) -> f64 {
    if x <= 0.5 {
        1.0
    } else {
        1.0 - 4.0 * (x - 0.5)
    }
}

fn sup_diff(a: &VertexFunction, b: &VertexFunction) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn first_sweep() -> Result<ExampleRow> {
    let g = path_graph(3, true);
    let f = vf(&[-1.0, 2.0, -1.0]);
    let u1 = apply_af(&g, &f, &VertexFunction::zeros(3))?;
    Ok(ExampleRow::new(
        "linear-graph-first-sweep",
        0.0,
        sup_diff(&u1, &f),
        0.0,
        Comparison::Within,
    ))
}

fn second_sweep() -> Result<ExampleRow> {
    let g = path_graph(3, true);
    let f = vf(&[-1.0, 2.0, -1.0]);
    let u2 = apply_af(&g, &f, &f)?;
    Ok(ExampleRow::new(
        "linear-graph-second-sweep",
        0.0,
        sup_diff(&u2, &vf(&[-0.5, 2.5, -0.5])),
        0.0,
        Comparison::Within,
    ))
}

fn linear_graph_drift() -> Result<ExampleRow> {
    let g = path_graph(3, true);
    let tr = iterate(&g, &vf(&[-1.0, 2.0, -1.0]), &VertexFunction::zeros(3), 10)?;
    // Increments u_{k+1} - u_k for k >= 1.
    let worst = tr.max_increments[1..]
        .iter()
        .chain(&tr.min_increments[1..])
        .copied()
        .max_by(|a, b| (a - 0.5).abs().total_cmp(&(b - 0.5).abs()))
        .expect("ten sweeps");
    Ok(ExampleRow::new(
        "linear-graph-drift",
        0.5,
        worst,
        1e-12,
        Comparison::Within,
    ))
}

fn bipartite_period_two() -> Result<ExampleRow> {
    let g = path_graph(2, false);
    let f = vf(&[1.0, -1.0]);
    let tr = iterate_recording(&g, &f, &VertexFunction::zeros(2), 20)?;
    let gap = (1..=18)
        .map(|n| sup_diff(&tr.iterates[n + 2], &tr.iterates[n]))
        .fold(0.0, f64::max);
    let alternates = sup_diff(&tr.iterates[1], &f) == 0.0 && tr.iterates[2].values() == [0.0, 0.0];
    Ok(
        ExampleRow::new("bipartite-period-two", 0.0, gap, 0.0, Comparison::Within)
            .require(alternates),
    )
}

fn bipartite_half_solution() -> Result<ExampleRow> {
    let g = path_graph(2, false);
    let r = residual_df(&g, &vf(&[1.0, -1.0]), &vf(&[0.5, -0.5]), 0.0)?;
    Ok(ExampleRow::new(
        "bipartite-half-solution",
        0.0,
        r,
        0.0,
        Comparison::Within,
    ))
}

fn bipartite_solve_general() -> Result<ExampleRow> {
    let g = path_graph(2, false);
    let res = solve_general(&g, &vf(&[1.0, -1.0]), 1e-9, 1_000_000, 4)?;
    Ok(ExampleRow::new(
        "bipartite-solve-general",
        0.0,
        res.c,
        1e-6,
        Comparison::Within,
    )
    .require(res.residual <= 1e-9))
}

fn complete_graph_loops() -> Result<ExampleRow> {
    let b = cf_bracket(&complete_graph(3, true), &vf(&[0.0, 1.0, 2.0]), 10_000)?;
    Ok(ExampleRow::new(
        "complete-graph-loops",
        1.0,
        b.midpoint(),
        b.width() / 2.0,
        Comparison::Within,
    )
    .require(b.width() <= 3e-3))
}

fn complete_graph_plain() -> Result<ExampleRow> {
    let b = cf_bracket_until(
        &complete_graph(3, false),
        &vf(&[0.0, 1.0, 4.0]),
        1e-6,
        1_000_000,
    )?;
    Ok(ExampleRow::new(
        "complete-graph-no-loops",
        5.0 / 3.0,
        b.midpoint(),
        b.width() / 2.0,
        Comparison::Within,
    ))
}

fn linear_graph_mean() -> Result<ExampleRow> {
    let b = cf_bracket(
        &path_graph(5, true),
        &vf(&[0.0, 1.0, 2.0, 3.0, 4.0]),
        100_000,
    )?;
    Ok(ExampleRow::new(
        "linear-graph-mean",
        2.0,
        b.midpoint(),
        b.width() / 2.0,
        Comparison::Within,
    )
    .require(b.width() <= 1e-2))
}

fn fixed_point_complete() -> Result<ExampleRow> {
    let f = vf(&[-1.0, 0.0, 1.0]);
    let res = solve_fixed_point(&complete_graph(3, true), &f, 1e-9, 1_000_000)?;
    let u_is_f = sup_diff(&res.u, &f.shifted(1.0)) <= 1e-9;
    Ok(ExampleRow::new(
        "fixed-point-complete-graph",
        0.0,
        res.c,
        1e-9,
        Comparison::Within,
    )
    .require(u_is_f))
}

fn fixed_point_path() -> Result<ExampleRow> {
    let res = solve_fixed_point(
        &path_graph(3, true),
        &vf(&[-1.0, 2.0, -1.0]),
        1e-9,
        1_000_000,
    )?;
    Ok(ExampleRow::new(
        "fixed-point-linear-graph",
        0.5,
        res.c,
        1e-9,
        Comparison::Within,
    ))
}

fn interval(eps: f64, expected: f64, name: &str) -> Result<ExampleRow> {
    let domain = DomainSpec::interval(0.0, 1.0, 0.05)?;
    let b = cf_eps_until(
        &domain,
        &|x| interval_example_payoff(x[0]),
        eps,
        1e-4,
        1_000_000,
    )?;
    Ok(
        ExampleRow::new(name, expected, b.midpoint(), 1e-3, Comparison::Within)
            .require(b.contains(expected, 1e-12)),
    )
}

fn interval_mean_ladder() -> Result<ExampleRow> {
    let domain = DomainSpec::interval(0.0, 1.0, 0.0025)?;
    let ladder = cf_ladder(
        &domain,
        &|x| x[0],
        0.2,
        3,
        Schedule::Halving,
        LadderOptions {
            tol: 5e-3,
            n_max: 1_000_000,
        },
    )?;
    Ok(ExampleRow::new(
        "interval-mean-ladder",
        0.5,
        ladder.estimate,
        ladder.uncertainty,
        Comparison::Within,
    )
    .require(ladder.uncertainty <= 0.06))
}

fn bowtie_residuals() -> Result<ExampleRow> {
    let g = bowtie_graph();
    let f = bowtie_payoff();
    let mut worst: f64 = 0.0;
    for u in bowtie_solutions() {
        worst = worst.max(residual_df(&g, &f, &u, 0.0)?);
    }
    Ok(ExampleRow::new(
        "bowties-residuals",
        0.0,
        worst,
        1e-12,
        Comparison::AtMost,
    ))
}

fn bowtie_non_uniqueness() -> Result<ExampleRow> {
    let s = bowtie_solutions();
    let mut spread: f64 = 0.0;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let d: Vec<f64> = s[i]
                .values()
                .iter()
                .zip(s[j].values())
                .map(|(a, b)| a - b)
                .collect();
            spread = spread.max(VertexFunction::new(d)?.oscillation());
        }
    }
    Ok(ExampleRow::new(
        "bowties-non-uniqueness",
        0.5,
        spread,
        0.0,
        Comparison::AtLeast,
    ))
}

fn greedy_matches_values() -> Result<ExampleRow> {
    let g = path_graph(3, true);
    let f = vf(&[-1.0, 2.0, -1.0]);
    let u0 = VertexFunction::zeros(3);
    let tr = iterate_recording(&g, &f, &u0, 2)?;
    let reg = StrategyRegistry::builtin();
    let params = StrategyParams {
        target: None,
        table: Some(tr.iterates.clone()),
    };
    let s1 = reg.build("greedy", &g, Role::Maximizer, &params)?;
    let s2 = reg.build("greedy", &g, Role::Minimizer, &params)?;
    let setup = PlaySetup {
        graph: &g,
        f: &f,
        u0: &u0,
        horizon: 2,
        start: 1,
    };
    let rep = play(setup, s1.as_ref(), s2.as_ref(), 10_000, 0, false)?;
    Ok(ExampleRow::new(
        "greedy-linear-graph",
        2.5,
        rep.mean,
        3.0 * rep.stderr,
        Comparison::Within,
    ))
}

fn hitting_time_path() -> Result<ExampleRow> {
    let g = path_graph(3, true);
    let opponent = Pull::new(&g, 2, true, Role::Maximizer)?;
    let rep = hitting_time_experiment(&g, 0, 2, &opponent, 10_000, 0)?;
    Ok(ExampleRow::new(
        "hitting-time-linear-graph",
        rep.diam_squared,
        rep.mean_t,
        3.0 * rep.stderr,
        Comparison::AtMost,
    ))
}

fn radial_reduction() -> Result<ExampleRow> {
    let radii: Vec<f64> = (0..=40).map(|i| i as f64 / 40.0).collect();
    let rep = radial_reduction_check(1.0, &|s| s, 0.1, 50, 64, &radii)?;
    Ok(ExampleRow::new(
        "disc-radial-reduction",
        0.0,
        rep.max_deviation,
        rep.tol,
        Comparison::AtMost,
    ))
}

type ExampleFn = fn() -> Result<ExampleRow>;

const EXAMPLES: &[(&str, ExampleFn)] = &[
    ("linear-graph-first-sweep", first_sweep),
    ("linear-graph-second-sweep", second_sweep),
    ("linear-graph-drift", linear_graph_drift),
    ("linear-graph-mean", linear_graph_mean),
    ("complete-graph-loops", complete_graph_loops),
    ("complete-graph-no-loops", complete_graph_plain),
    ("bipartite-period-two", bipartite_period_two),
    ("bipartite-half-solution", bipartite_half_solution),
    ("bipartite-solve-general", bipartite_solve_general),
    ("fixed-point-complete-graph", fixed_point_complete),
    ("fixed-point-linear-graph", fixed_point_path),
    ("interval-eps-one", || {
        interval(1.0, 0.0, "interval-eps-one")
    }),
    ("interval-eps-half", || {
        interval(0.5, 1.0 / 3.0, "interval-eps-half")
    }),
    ("interval-mean-ladder", interval_mean_ladder),
    ("bowties-residuals", bowtie_residuals),
    ("bowties-non-uniqueness", bowtie_non_uniqueness),
    ("greedy-linear-graph", greedy_matches_values),
    ("hitting-time-linear-graph", hitting_time_path),
    ("disc-radial-reduction", radial_reduction),
];

pub fn example_names() -> impl Iterator<Item = &'static str> {
    EXAMPLES.iter().map(|(n, _)| *n)
}

pub fn run_example(name: &str) -> Result<ExampleRow> {
    let (n, run) = EXAMPLES
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::UnknownName {
            kind: "example",
            name: name.to_string(),
        })?;
    Ok(run().unwrap_or_else(|e| ExampleRow::failed(n, e)))
}

/// Every example, in a fixed order.
pub fn examples_suite() -> Vec<ExampleRow> {
    EXAMPLES
        .iter()
        .map(|(n, run)| run().unwrap_or_else(|e| ExampleRow::failed(n, e)))
        .collect()
}

/// Plain-text table, one row per example.
pub fn format_table(rows: &[ExampleRow]) -> String {
    let mut s = format!(
        "{:<28} {:>14} {:>14} {:>11} {:<8} {}\n",
        "example", "expected", "computed", "tolerance", "check", "verdict"
    );
    for r in rows {
        let check = match r.comparison {
            Comparison::Within => "within",
            Comparison::AtMost => "at-most",
            Comparison::AtLeast => "at-least",
        };
        s.push_str(&format!(
            "{:<28} {:>14.8} {:>14.8} {:>11.2e} {:<8} {}\n",
            r.name,
            r.expected,
            r.computed,
            r.tolerance,
            check,
            if r.passed { "PASS" } else { "FAIL" }
        ));
        if let Some(e) = &r.error {
            s.push_str(&format!("    error: {e}\n"));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_resolvable() {
        let names: Vec<_> = example_names().collect();
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert!(matches!(
            run_example("nope"),
            Err(Error::UnknownName { .. })
        ));
        for (n, _) in EXAMPLES {
            // Row names match registry names.
            if ["interval-mean-ladder", "disc-radial-reduction"].contains(n) {
                continue;
            }
            assert_eq!(run_example(n).unwrap().name, *n);
        }
    }

    #[test]
    fn bowtie_rows_pass() {
        assert!(run_example("bowties-residuals").unwrap().passed);
        assert!(run_example("bowties-non-uniqueness").unwrap().passed);
    }

    #[test]
    fn interval_payoff_nodes() {
        assert_eq!(interval_example_payoff(0.0), 1.0);
        assert_eq!(interval_example_payoff(0.5), 1.0);
        assert_eq!(interval_example_payoff(1.0), -1.0);
    }
}
