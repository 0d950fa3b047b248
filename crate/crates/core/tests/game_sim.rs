mod common;

use common::{hitting_time_oracle, random_walk_payoff, vf};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tugwar::engine::iterate_recording;
use tugwar::graph::{build_finite_graph, Graph, VertexFunction};
use tugwar::report::{complete_graph, cycle_graph, path_graph};
use tugwar::sim::{
    hitting_time_experiment, optimality_gap, play, MoveContext, PlaySetup, Pull, Role, Strategy,
    StrategyParams, StrategyRegistry, UniformRandom,
};

fn greedy_pair(g: &Graph, table: &[VertexFunction]) -> (Box<dyn Strategy>, Box<dyn Strategy>) {
    let reg = StrategyRegistry::builtin();
    let p = StrategyParams {
        target: None,
        table: Some(table.to_vec()),
    };
    (
        reg.build("greedy", g, Role::Maximizer, &p).unwrap(),
        reg.build("greedy", g, Role::Minimizer, &p).unwrap(),
    )
}

/// Deterministic strategy as a vertex map.
fn as_map(s: &dyn Strategy, g: &Graph) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    (0..g.vertex_count())
        .map(|x| {
            s.choose(
                &MoveContext {
                    graph: g,
                    position: x,
                    step: 0,
                    horizon: None,
                },
                &mut rng,
            )
        })
        .collect()
}

#[test]
fn forced_moves_on_an_edge() {
    let g = build_finite_graph(2, &[(0, 1)], false).unwrap();
    let setup = PlaySetup {
        graph: &g,
        f: &VertexFunction::zeros(2),
        u0: &vf(&[0.0, 1.0]),
        horizon: 1,
        start: 0,
    };
    let a = UniformRandom {
        role: Role::Maximizer,
    };
    let b = Pull::new(&g, 0, true, Role::Minimizer).unwrap();
    let rep = play(setup, &a, &b, 500, 3, false).unwrap();
    assert_eq!((rep.mean, rep.stderr), (1.0, 0.0));
}

#[test]
fn greedy_recovers_second_sweep_value() {
    let g = path_graph(3, true);
    let f = vf(&[-1.0, 2.0, -1.0]);
    let u0 = VertexFunction::zeros(3);
    let tr = iterate_recording(&g, &f, &u0, 2).unwrap();
    let (s1, s2) = greedy_pair(&g, &tr.iterates);
    let setup = PlaySetup {
        graph: &g,
        f: &f,
        u0: &u0,
        horizon: 2,
        start: 1,
    };
    let rep = play(setup, s1.as_ref(), s2.as_ref(), 10_000, 0, true).unwrap();
    assert!((rep.mean - 2.5).abs() <= 3.0 * rep.stderr.max(1e-12));
    for t in rep.transcripts.unwrap() {
        assert!(t.is_adjacent_walk(&g));
        assert_eq!(t.recompute_payoff(&f, &u0), t.payoff);
    }
}

#[test]
fn random_turn_matches_transition_matrix() {
    let g = build_finite_graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (1, 3)], false).unwrap();
    let u0 = vf(&[3.0, -1.0, 0.5, 2.0, -2.0]);
    for f in [VertexFunction::zeros(5), vf(&[0.2, -0.4, 1.0, 0.0, 0.3])] {
        for start in 0..5 {
            let exact = random_walk_payoff(&g, f.values(), u0.values(), 6, start);
            let setup = PlaySetup {
                graph: &g,
                f: &f,
                u0: &u0,
                horizon: 6,
                start,
            };
            let a = UniformRandom {
                role: Role::Maximizer,
            };
            let b = UniformRandom {
                role: Role::Minimizer,
            };
            let rep = play(setup, &a, &b, 10_000, start as u64, false).unwrap();
            assert!(
                (rep.mean - exact).abs() <= 3.5 * rep.stderr,
                "start {start}: {} vs {exact}",
                rep.mean
            );
        }
    }
}

#[test]
fn horizon_zero_pays_terminal_value() {
    let g = path_graph(3, false);
    let u0 = vf(&[1.0, 4.0, -2.0]);
    let setup = PlaySetup {
        graph: &g,
        f: &vf(&[9.0, 9.0, 9.0]),
        u0: &u0,
        horizon: 0,
        start: 1,
    };
    let a = UniformRandom {
        role: Role::Maximizer,
    };
    let rep = play(setup, &a, &a, 50, 0, false).unwrap();
    assert_eq!((rep.mean, rep.stderr), (4.0, 0.0));
}

#[test]
fn seeds_reproduce_and_differ() {
    let g = cycle_graph(5, true);
    let f = vf(&[1.0, 0.0, -1.0, 0.5, 2.0]);
    let u0 = VertexFunction::zeros(5);
    let setup = PlaySetup {
        graph: &g,
        f: &f,
        u0: &u0,
        horizon: 8,
        start: 0,
    };
    let a = UniformRandom {
        role: Role::Maximizer,
    };
    let b = UniformRandom {
        role: Role::Minimizer,
    };
    let r1 = play(setup, &a, &b, 200, 7, true).unwrap();
    let r2 = play(setup, &a, &b, 200, 7, true).unwrap();
    let r3 = play(setup, &a, &b, 200, 8, true).unwrap();
    assert_eq!(r1, r2);
    assert_ne!(r1.transcripts, r3.transcripts);
}

#[test]
fn optimality_gap_on_complete_graph() {
    let g = complete_graph(3, true);
    let f = vf(&[0.0, 1.0, 2.0]);
    let tr = iterate_recording(&g, &f, &VertexFunction::zeros(3), 3).unwrap();
    let rep = optimality_gap(&g, &f, 3, &tr, 10_000, 1).unwrap();
    assert!(rep.passed, "{rep:?}");
    assert!(rep.starts.iter().all(|r| r.matches));
    assert_eq!(rep.deviations.len(), 3 * 4);
}

#[test]
fn hitting_from_target_is_immediate() {
    let g = cycle_graph(6, false);
    let opp = UniformRandom {
        role: Role::Maximizer,
    };
    let rep = hitting_time_experiment(&g, 2, 2, &opp, 100, 0).unwrap();
    assert_eq!((rep.mean_t, rep.stderr, rep.cap_hits), (0.0, 0.0, 0));
}

#[test]
fn hitting_time_on_linear_graph_from_middle() {
    let g = path_graph(3, true);
    let opp = Pull::new(&g, 2, true, Role::Maximizer).unwrap();
    let rep = hitting_time_experiment(&g, 0, 1, &opp, 10_000, 0).unwrap();
    assert_eq!(rep.diam_squared, 4.0);
    assert!(rep.within_diam_squared(), "{rep:?}");
}

#[test]
fn hitting_time_on_cycle() {
    let g = cycle_graph(6, false);
    let opp = UniformRandom {
        role: Role::Maximizer,
    };
    for start in 1..6 {
        let rep = hitting_time_experiment(&g, 0, start, &opp, 10_000, start as u64).unwrap();
        assert_eq!(rep.diam_squared, 9.0);
        assert!(rep.within_diam_squared(), "{rep:?}");
    }
}

#[test]
fn hitting_time_matches_exact_chain() {
    // A pull-away opponent on a path with loops: E[T] from the far end is 6.
    let g = path_graph(3, true);
    let puller = Pull::new(&g, 0, true, Role::Minimizer).unwrap();
    let opp = Pull::new(&g, 0, false, Role::Maximizer).unwrap();
    let (pm, om) = (as_map(&puller, &g), as_map(&opp, &g));
    let exact = hitting_time_oracle(&g, 0, |x| pm[x], |x| om[x]);
    assert!((exact[1] - 4.0).abs() < 1e-9 && (exact[2] - 6.0).abs() < 1e-9);
    for start in 1..3 {
        let rep = hitting_time_experiment(&g, 0, start, &opp, 20_000, 4).unwrap();
        assert!(
            (rep.mean_t - exact[start]).abs() <= 4.0 * rep.stderr,
            "{rep:?}"
        );
    }
}

#[test]
fn loops_let_the_opponent_exceed_squared_diameter() {
    // The opponent can stand still at the far end, so E[T] = 6 > diam^2 = 4.
    // The bound that does hold is d0 (2 diam + 2 - d0).
    let g = path_graph(3, true);
    let opp = Pull::new(&g, 0, false, Role::Maximizer).unwrap();
    let rep = hitting_time_experiment(&g, 0, 2, &opp, 10_000, 0).unwrap();
    assert!(!rep.within_diam_squared(), "{rep:?}");
    let d = 2.0;
    assert!(rep.mean_t <= 2.0 * (2.0 * d + 2.0 - 2.0) + 3.0 * rep.stderr);
}

#[test]
fn corrected_hitting_bound_holds_across_battery() {
    let graphs = [
        path_graph(3, true),
        path_graph(5, true),
        cycle_graph(6, false),
        cycle_graph(5, true),
    ];
    for g in &graphs {
        let d = g.graph_diameter() as f64;
        let tr = iterate_recording(
            g,
            &VertexFunction::new((0..g.vertex_count()).map(|x| x as f64).collect()).unwrap(),
            &VertexFunction::zeros(g.vertex_count()),
            4,
        )
        .unwrap();
        let params = StrategyParams {
            target: Some(0),
            table: Some(tr.iterates.clone()),
        };
        let reg = StrategyRegistry::builtin();
        for name in ["pull-away", "uniform-random", "greedy"] {
            let opp = reg.build(name, g, Role::Maximizer, &params).unwrap();
            for start in 0..g.vertex_count() {
                let d0 = g.bfs_distances(0)[start].unwrap() as f64;
                let rep = hitting_time_experiment(g, 0, start, opp.as_ref(), 4_000, 1).unwrap();
                assert_eq!(rep.cap_hits, 0);
                assert!(
                    rep.mean_t <= d0 * (2.0 * d + 2.0 - d0) + 3.0 * rep.stderr,
                    "{name} from {start}: {rep:?}"
                );
            }
        }
    }
}

struct Jumper;

impl Strategy for Jumper {
    fn name(&self) -> &str {
        "jumper"
    }
    fn role(&self) -> Role {
        Role::Maximizer
    }
    fn choose(&self, ctx: &MoveContext<'_>, _: &mut ChaCha8Rng) -> usize {
        ctx.graph.vertex_count() - 1 - ctx.position.min(ctx.graph.vertex_count() - 1)
    }
}

#[test]
fn illegal_moves_abort() {
    let g = path_graph(4, false);
    let setup = PlaySetup {
        graph: &g,
        f: &VertexFunction::zeros(4),
        u0: &VertexFunction::zeros(4),
        horizon: 5,
        start: 0,
    };
    let err = play(setup, &Jumper, &Jumper, 10, 0, false).unwrap_err();
    assert!(err.to_string().contains("jumper"), "{err}");
}

#[test]
fn registry_names() {
    let reg = StrategyRegistry::builtin();
    assert_eq!(
        reg.names().collect::<Vec<_>>(),
        ["greedy", "pull-away", "pull-toward", "uniform-random"]
    );
    let g = path_graph(3, true);
    assert!(reg
        .build(
            "pull-toward",
            &g,
            Role::Minimizer,
            &StrategyParams::default()
        )
        .is_err());
    assert!(reg
        .build("teleport", &g, Role::Minimizer, &StrategyParams::default())
        .is_err());
}
