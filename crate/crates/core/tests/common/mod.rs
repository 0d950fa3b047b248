#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use tugwar::graph::{build_finite_graph, Graph, VertexFunction};

pub fn vf(values: &[f64]) -> VertexFunction {
    VertexFunction::new(values.to_vec()).unwrap()
}

/// Random connected graph on 2..=max_n vertices: a random spanning tree plus
/// extra edges, with loops on all, none, or a random subset of vertices.
pub fn random_graph(rng: &mut ChaCha8Rng, max_n: usize) -> Graph {
    let n = rng.gen_range(2..=max_n);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.gen_range(0..v), v));
    }
    for a in 0..n {
        for b in (a + 1)..n {
            if rng.gen_bool(0.2) {
                edges.push((a, b));
            }
        }
    }
    let loops = match rng.gen_range(0..3) {
        0 => true,
        1 => false,
        _ => {
            for v in 0..n {
                if rng.gen_bool(0.5) {
                    edges.push((v, v));
                }
            }
            false
        }
    };
    build_finite_graph(n, &edges, loops).unwrap()
}

pub fn random_function(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> VertexFunction {
    VertexFunction::new((0..n).map(|_| rng.gen_range(-scale..=scale)).collect()).unwrap()
}

/// Closed-form `c_f` of a complete graph without loops, taken from the
/// explicit solutions on `K_n`.
pub fn complete_graph_cf(f: &[f64]) -> f64 {
    let mut s = f.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    let (min, min2, max, max2) = (s[0], s[1], s[n - 1], s[n - 2]);
    match (max > max2, min < min2) {
        (true, true) => (max + min) / 3.0 + (max2 + min2) / 6.0,
        (true, false) => (2.0 * max + max2 + 3.0 * min) / 6.0,
        (false, true) => (2.0 * min + min2 + 3.0 * max) / 6.0,
        (false, false) => (max + min) / 2.0,
    }
}

/// Composite Simpson rule with `panels` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels % 2 == 0);
    let h = (b - a) / panels as f64;
    let mut sum = f(a) + f(b);
    for i in 1..panels {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Expected `sum_{t<h} f(X_t) + u0(X_h)` for the simple random walk on `g`
/// (uniform over neighbors, loops included), by transition-matrix powers.
pub fn random_walk_payoff(g: &Graph, f: &[f64], u0: &[f64], horizon: usize, start: usize) -> f64 {
    let n = g.vertex_count();
    let mut dist = vec![0.0; n];
    dist[start] = 1.0;
    let mut total = 0.0;
    for _ in 0..horizon {
        total += dist.iter().zip(f).map(|(p, v)| p * v).sum::<f64>();
        let mut next = vec![0.0; n];
        for x in 0..n {
            let nb = g.neighbors(x);
            for &y in nb {
                next[y] += dist[x] / nb.len() as f64;
            }
        }
        dist = next;
    }
    total + dist.iter().zip(u0).map(|(p, v)| p * v).sum::<f64>()
}

/// Exact expected hitting time of `target` when the puller (heads) steps to
/// a neighbor closer to the target and the opponent steps to `away`'s choice.
pub fn hitting_time_oracle(
    g: &Graph,
    target: usize,
    pull: impl Fn(usize) -> usize,
    opponent: impl Fn(usize) -> usize,
) -> Vec<f64> {
    // Value iteration for E[T]; converges since the target is hit a.s.
    let n = g.vertex_count();
    let mut e = vec![0.0f64; n];
    for _ in 0..200_000 {
        let mut next = vec![0.0f64; n];
        for x in 0..n {
            if x != target {
                next[x] = 1.0 + 0.5 * e[pull(x)] + 0.5 * e[opponent(x)];
            }
        }
        let delta = next
            .iter()
            .zip(&e)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        e = next;
        if delta < 1e-13 {
            break;
        }
    }
    e
}
