//! Monte Carlo play of the horizon-`n` game with explicit strategies.
//!
//! Every trial draws from its own ChaCha8 stream: the generator is seeded
//! with the run seed and switched to stream `trial`, so trial `k` is
//! reproducible on its own and independent of how many trials run.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::engine::IterationTrace;
use crate::error::{Error, Result};
use crate::graph::{Graph, VertexFunction};

/// Step cap for hitting-time trials.
pub const HITTING_STEP_CAP: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Maximizer,
    Minimizer,
}

/// Context handed to a strategy when it wins the coin toss.
#[derive(Debug, Clone, Copy)]
pub struct MoveContext<'a> {
    pub graph: &'a Graph,
    pub position: usize,
    /// Zero-based step index.
    pub step: usize,
    /// `None` for open-ended play (hitting-time runs).
    pub horizon: Option<usize>,
}

pub trait Strategy: Send + Sync {
    fn name(&self) -> &str;

    fn role(&self) -> Role;

    /// Next token position. The caller rejects non-neighbors.
    fn choose(&self, ctx: &MoveContext<'_>, rng: &mut ChaCha8Rng) -> usize;
}

fn pick_extreme(g: &Graph, x: usize, score: impl Fn(usize) -> f64, maximize: bool) -> usize {
    let nb = g.neighbors(x);
    let mut best = nb[0];
    for &y in &nb[1..] {
        let better = if maximize {
            score(y) > score(best)
        } else {
            score(y) < score(best)
        };
        if better {
            best = y;
        }
    }
    best
}

/// Moves to the neighbor with the best value of `u_{H-1-k}` at step `k`.
#[derive(Debug, Clone)]
pub struct GreedyFromValues {
    /// `table[j]` is `u_j`.
    pub table: Vec<VertexFunction>,
    pub role: Role,
}

impl Strategy for GreedyFromValues {
    fn name(&self) -> &str {
        "greedy"
    }

    fn role(&self) -> Role {
        self.role
    }

    fn choose(&self, ctx: &MoveContext<'_>, _rng: &mut ChaCha8Rng) -> usize {
        let idx = match ctx.horizon {
            Some(h) => h - 1 - ctx.step,
            None => self.table.len() - 1,
        };
        let u = &self.table[idx];
        pick_extreme(
            ctx.graph,
            ctx.position,
            |y| u[y],
            self.role == Role::Maximizer,
        )
    }
}

/// Moves one hop closer to `target` (or away from it), by hop distance.
#[derive(Debug, Clone)]
pub struct Pull {
    pub target: usize,
    pub toward: bool,
    pub role: Role,
    dist: Vec<f64>,
}

impl Pull {
    pub fn new(g: &Graph, target: usize, toward: bool, role: Role) -> Result<Self> {
        if target >= g.vertex_count() {
            return Err(Error::VertexOutOfRange {
                vertex: target,
                count: g.vertex_count(),
            });
        }
        let dist = g
            .bfs_distances(target)
            .into_iter()
            .map(|d| d.expect("connected graph") as f64)
            .collect();
        Ok(Self {
            target,
            toward,
            role,
            dist,
        })
    }
}

impl Strategy for Pull {
    fn name(&self) -> &str {
        if self.toward {
            "pull-toward"
        } else {
            "pull-away"
        }
    }

    fn role(&self) -> Role {
        self.role
    }

    fn choose(&self, ctx: &MoveContext<'_>, _rng: &mut ChaCha8Rng) -> usize {
        pick_extreme(ctx.graph, ctx.position, |y| self.dist[y], !self.toward)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct UniformRandom {
    pub role: Role,
}

impl Strategy for UniformRandom {
    fn name(&self) -> &str {
        "uniform-random"
    }

    fn role(&self) -> Role {
        self.role
    }

    fn choose(&self, ctx: &MoveContext<'_>, rng: &mut ChaCha8Rng) -> usize {
        let nb = ctx.graph.neighbors(ctx.position);
        nb[rng.gen_range(0..nb.len())]
    }
}

/// Parameters a named strategy may need.
#[derive(Debug, Clone, Default)]
pub struct StrategyParams {
    pub target: Option<usize>,
    pub table: Option<Vec<VertexFunction>>,
}

type Factory = fn(&Graph, Role, &StrategyParams) -> Result<Box<dyn Strategy>>;

/// Strategies by name, built on demand for a graph and role.
pub struct StrategyRegistry {
    factories: BTreeMap<&'static str, Factory>,
}

fn need_target(name: &str, p: &StrategyParams) -> Result<usize> {
    p.target
        .ok_or_else(|| Error::InvalidParameter(format!("strategy '{name}' needs a target vertex")))
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        reg.register("greedy", |g, role, p| {
            let table = p.table.clone().ok_or_else(|| {
                Error::InvalidParameter("strategy 'greedy' needs a value table".into())
            })?;
            if table.is_empty() {
                return Err(Error::InvalidParameter(
                    "greedy value table is empty".into(),
                ));
            }
            for u in &table {
                g.check_function(u)?;
            }
            Ok(Box::new(GreedyFromValues { table, role }))
        });
        reg.register("pull-toward", |g, role, p| {
            Ok(Box::new(Pull::new(
                g,
                need_target("pull-toward", p)?,
                true,
                role,
            )?))
        });
        reg.register("pull-away", |g, role, p| {
            Ok(Box::new(Pull::new(
                g,
                need_target("pull-away", p)?,
                false,
                role,
            )?))
        });
        reg.register("uniform-random", |_, role, _| {
            Ok(Box::new(UniformRandom { role }))
        });
        reg
    }

    pub fn register(&mut self, name: &'static str, factory: Factory) {
        self.factories.insert(name, factory);
    }

    pub fn build(
        &self,
        name: &str,
        g: &Graph,
        role: Role,
        params: &StrategyParams,
    ) -> Result<Box<dyn Strategy>> {
        let factory = self.factories.get(name).ok_or_else(|| Error::UnknownName {
            kind: "strategy",
            name: name.to_string(),
        })?;
        factory(g, role, params)
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.factories.keys().copied()
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// One play of the game. `coin_flips[k]` is true when the maximizer moved at step `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameTranscript {
    pub trial: usize,
    pub seed: u64,
    pub positions: Vec<usize>,
    pub coin_flips: Vec<bool>,
    pub payoff: f64,
}

impl GameTranscript {
    /// `f` summed over all but the last position, then `u0` at the last.
    pub fn recompute_payoff(&self, f: &VertexFunction, u0: &VertexFunction) -> f64 {
        let (last, path) = self
            .positions
            .split_last()
            .expect("at least the start position");
        let mut total = 0.0;
        for &x in path {
            total += f[x];
        }
        total + u0[*last]
    }

    pub fn is_adjacent_walk(&self, g: &Graph) -> bool {
        self.positions.windows(2).all(|w| g.is_adjacent(w[0], w[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayReport {
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcripts: Option<Vec<GameTranscript>>,
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn checked_move(s: &dyn Strategy, ctx: &MoveContext<'_>, rng: &mut ChaCha8Rng) -> Result<usize> {
    let to = s.choose(ctx, rng);
    if to >= ctx.graph.vertex_count() || !ctx.graph.is_adjacent(ctx.position, to) {
        return Err(Error::IllegalMove {
            strategy: s.name().to_string(),
            from: ctx.position,
            to,
        });
    }
    Ok(to)
}

/// Game settings shared by all trials of a [`play`] run.
#[derive(Debug, Clone, Copy)]
pub struct PlaySetup<'a> {
    pub graph: &'a Graph,
    pub f: &'a VertexFunction,
    pub u0: &'a VertexFunction,
    pub horizon: usize,
    pub start: usize,
}

/// Plays `trials` independent games; the maximizer `s1` moves on heads.
pub fn play(
    setup: PlaySetup<'_>,
    s1: &dyn Strategy,
    s2: &dyn Strategy,
    trials: usize,
    seed: u64,
    keep_transcripts: bool,
) -> Result<PlayReport> {
    let g = setup.graph;
    g.check_function(setup.f)?;
    g.check_function(setup.u0)?;
    if setup.start >= g.vertex_count() {
        return Err(Error::VertexOutOfRange {
            vertex: setup.start,
            count: g.vertex_count(),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let mut payoffs = Vec::with_capacity(trials);
    let mut transcripts = keep_transcripts.then(Vec::new);
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let mut x = setup.start;
        let mut positions = Vec::with_capacity(setup.horizon + 1);
        let mut flips = Vec::with_capacity(setup.horizon);
        positions.push(x);
        let mut total = 0.0;
        for step in 0..setup.horizon {
            total += setup.f[x];
            let heads: bool = rng.gen();
            let mover = if heads { s1 } else { s2 };
            let ctx = MoveContext {
                graph: g,
                position: x,
                step,
                horizon: Some(setup.horizon),
            };
            x = checked_move(mover, &ctx, &mut rng)?;
            positions.push(x);
            flips.push(heads);
        }
        total += setup.u0[x];
        payoffs.push(total);
        if let Some(ts) = transcripts.as_mut() {
            ts.push(GameTranscript {
                trial,
                seed,
                positions,
                coin_flips: flips,
                payoff: total,
            });
        }
    }
    let (mean, stderr) = mean_stderr(&payoffs);
    Ok(PlayReport {
        mean,
        stderr,
        trials,
        seed,
        transcripts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingReport {
    pub target: usize,
    pub start: usize,
    pub opponent: String,
    pub mean_t: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
    /// Trials stopped at [`HITTING_STEP_CAP`] without arriving.
    pub cap_hits: usize,
    pub diam_squared: f64,
}

impl HittingReport {
    /// `mean_t <= diam^2 + 3 stderr`.
    pub fn within_diam_squared(&self) -> bool {
        self.mean_t <= self.diam_squared + 3.0 * self.stderr
    }
}

/// Pull-toward-`target` against `opponent` from `start`; `T` is the first
/// arrival time. The puller moves on heads.
pub fn hitting_time_experiment(
    g: &Graph,
    target: usize,
    start: usize,
    opponent: &dyn Strategy,
    trials: usize,
    seed: u64,
) -> Result<HittingReport> {
    if start >= g.vertex_count() {
        return Err(Error::VertexOutOfRange {
            vertex: start,
            count: g.vertex_count(),
        });
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let puller = Pull::new(g, target, true, Role::Minimizer)?;
    let mut times = Vec::with_capacity(trials);
    let mut cap_hits = 0;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, trial);
        let mut x = start;
        let mut t = 0;
        while x != target && t < HITTING_STEP_CAP {
            let heads: bool = rng.gen();
            let mover: &dyn Strategy = if heads { &puller } else { opponent };
            let ctx = MoveContext {
                graph: g,
                position: x,
                step: t,
                horizon: None,
            };
            x = checked_move(mover, &ctx, &mut rng)?;
            t += 1;
        }
        if x != target {
            cap_hits += 1;
        }
        times.push(t as f64);
    }
    let (mean_t, stderr) = mean_stderr(&times);
    let d = g.graph_diameter() as f64;
    Ok(HittingReport {
        target,
        start,
        opponent: opponent.name().to_string(),
        mean_t,
        stderr,
        trials,
        seed,
        cap_hits,
        diam_squared: d * d,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartRow {
    pub start: usize,
    pub dp_value: f64,
    pub greedy_mean: f64,
    pub greedy_stderr: f64,
    /// `|greedy_mean - dp_value| <= 3 stderr`.
    pub matches: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationRow {
    pub start: usize,
    pub deviator: Role,
    pub strategy: String,
    pub mean: f64,
    pub stderr: f64,
    /// Deviator's improvement over the game value (positive = better for it).
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub horizon: usize,
    pub starts: Vec<StartRow>,
    pub deviations: Vec<DeviationRow>,
    /// Largest `gain - 3 stderr` over all deviations.
    pub max_excess_gain: f64,
    pub passed: bool,
}

/// Greedy-vs-greedy against the DP values `u_horizon`, and each player's
/// unilateral deviations to uniform-random and pull-toward-0.
pub fn optimality_gap(
    g: &Graph,
    f: &VertexFunction,
    horizon: usize,
    trace: &IterationTrace,
    trials: usize,
    seed: u64,
) -> Result<GapReport> {
    if trace.iterates.len() < horizon + 1 {
        return Err(Error::InvalidParameter(format!(
            "trace holds {} recorded iterates; horizon {horizon} needs {}",
            trace.iterates.len(),
            horizon + 1
        )));
    }
    let table: Vec<VertexFunction> = trace.iterates[..=horizon].to_vec();
    let u0 = &table[0];
    let dp = &table[horizon];
    let reg = StrategyRegistry::builtin();
    let params = StrategyParams {
        target: Some(0),
        table: Some(table.clone()),
    };
    let greedy_max = reg.build("greedy", g, Role::Maximizer, &params)?;
    let greedy_min = reg.build("greedy", g, Role::Minimizer, &params)?;

    let mut starts = Vec::new();
    let mut deviations = Vec::new();
    let mut max_excess_gain = f64::NEG_INFINITY;
    for start in 0..g.vertex_count() {
        let setup = PlaySetup {
            graph: g,
            f,
            u0,
            horizon,
            start,
        };
        let base = play(
            setup,
            greedy_max.as_ref(),
            greedy_min.as_ref(),
            trials,
            seed,
            false,
        )?;
        starts.push(StartRow {
            start,
            dp_value: dp[start],
            greedy_mean: base.mean,
            greedy_stderr: base.stderr,
            matches: (base.mean - dp[start]).abs() <= 3.0 * base.stderr,
        });
        for name in ["uniform-random", "pull-toward"] {
            for deviator in [Role::Maximizer, Role::Minimizer] {
                let dev = reg.build(name, g, deviator, &params)?;
                let rep = match deviator {
                    Role::Maximizer => play(
                        setup,
                        dev.as_ref(),
                        greedy_min.as_ref(),
                        trials,
                        seed,
                        false,
                    )?,
                    Role::Minimizer => play(
                        setup,
                        greedy_max.as_ref(),
                        dev.as_ref(),
                        trials,
                        seed,
                        false,
                    )?,
                };
                let gain = match deviator {
                    Role::Maximizer => rep.mean - dp[start],
                    Role::Minimizer => dp[start] - rep.mean,
                };
                max_excess_gain = max_excess_gain.max(gain - 3.0 * rep.stderr);
                deviations.push(DeviationRow {
                    start,
                    deviator,
                    strategy: name.to_string(),
                    mean: rep.mean,
                    stderr: rep.stderr,
                    gain,
                });
            }
        }
    }
    // Ignore rounding in the zero-variance case.
    let slack = 1e-9 * (1.0 + dp.sup_norm());
    let passed = max_excess_gain <= slack
        && starts
            .iter()
            .all(|r| r.matches || (r.greedy_mean - r.dp_value).abs() <= slack);
    Ok(GapReport {
        horizon,
        starts,
        deviations,
        max_excess_gain,
        passed,
    })
}
