use kpump::geom::{Point, Polygon, Workspace, DEFAULT_SLACK};
use kpump::graphgen::{sample_pumped, ColorSpec};
use kpump::pebble::{equivalent, Graph, Placement};
use kpump::roadmap::{preprocess, PlannerError, PlannerParams, RunOptions};
use kpump::scenario::{ColorGroup, Scenario};
use kpump::verify::{brute_force_pebble_oracle, verify_plan, DEFAULT_EPS};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pebble_case() -> impl Strategy<Value = (Graph, Placement, Placement)> {
    (1usize..=8)
        .prop_flat_map(|n| {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            let m = pairs.len();
            (
                Just(n),
                Just(pairs),
                proptest::collection::vec(any::<bool>(), m),
                1usize..=n.min(4),
            )
        })
        .prop_flat_map(|(n, pairs, keep, k)| {
            let g = Graph::from_edges(n, pairs.into_iter().zip(keep).filter(|(_, b)| *b).map(|(e, _)| e)).unwrap();
            let pick = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
            (Just(g), pick.clone(), pick, Just(k))
        })
        .prop_map(|(g, s, t, k)| (g, Placement(s[..k].to_vec()), Placement(t[..k].to_vec())))
}

proptest! {
    #[test]
    fn exhaustive_reachability_is_signature_equality((g, s, t) in pebble_case()) {
        let oracle = brute_force_pebble_oracle(&g, &s, &t).unwrap();
        prop_assert_eq!(oracle.reachable, equivalent(&g, &s, &t).unwrap());
    }
}

fn ring_room() -> Workspace {
    Workspace::new(
        Polygon::rect(0.0, 0.0, 10.0, 10.0).unwrap(),
        vec![Polygon::rect(4.0, 4.0, 6.0, 6.0).unwrap()],
    )
    .unwrap()
}

/// A scenario with random starts and targets drawn by the pumped sampler.
fn random_scenario(seed: u64) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ws = ring_room();
    let specs = vec![
        ColorSpec { radius: 0.6, robot_count: 2 },
        ColorSpec { radius: 0.4, robot_count: 1 },
    ];
    let m = 3;
    let s = sample_pumped(&specs, &ws, m, &mut rng, 10_000, DEFAULT_SLACK).unwrap();
    let t = sample_pumped(&specs, &ws, m, &mut rng, 10_000, DEFAULT_SLACK).unwrap();
    let colors = specs
        .iter()
        .enumerate()
        .map(|(c, sp)| ColorGroup {
            radius: sp.radius,
            starts: s.points(c).to_vec(),
            targets: t.points(c).to_vec(),
        })
        .collect();
    Scenario::new(format!("random-{seed}"), ws, colors).unwrap()
}

fn reversed(s: &Scenario) -> Scenario {
    let colors = s
        .colors
        .iter()
        .map(|c| ColorGroup { radius: c.radius, starts: c.targets.clone(), targets: c.starts.clone() })
        .collect();
    Scenario::new("reversed", s.workspace.clone(), colors).unwrap()
}

#[test]
fn every_returned_plan_verifies_and_queries_are_symmetric() {
    let opts = RunOptions::default();
    let mut solved = 0;
    for seed in 0..12 {
        let sc = random_scenario(seed);
        let state = preprocess(&sc, &PlannerParams::new(8, 20, 12, seed), &opts).unwrap();
        let forward = state.query(&sc.starts(), &sc.targets(), &opts);
        let backward = state.query(&sc.targets(), &sc.starts(), &opts);
        assert_eq!(forward.is_ok(), backward.is_ok(), "seed {seed}");
        match (forward, backward) {
            (Ok(f), Ok(b)) => {
                let r = verify_plan(&sc, &f, DEFAULT_EPS);
                assert!(r.passed, "seed {seed}: {:?}", r.violations);
                let r = verify_plan(&reversed(&sc), &b, DEFAULT_EPS);
                assert!(r.passed, "seed {seed} reversed: {:?}", r.violations);
                solved += 1;
            }
            (Err(e), _) => assert_eq!(e, PlannerError::QueryInfeasible),
            _ => unreachable!(),
        }
    }
    assert!(solved >= 6, "only {solved} of 12 random scenarios solved");
}

#[test]
fn identical_inputs_give_identical_plans() {
    let sc = random_scenario(99);
    let params = PlannerParams::new(6, 15, 10, 42);
    let run = |threads| {
        let opts = RunOptions { threads, deadline: None };
        preprocess(&sc, &params, &opts).unwrap().into_query(&sc.starts(), &sc.targets(), &opts)
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(3));
}

#[test]
fn table_row_d_parameters_run() {
    let ws = Workspace::open(Polygon::rect(0.0, 0.0, 12.0, 12.0).unwrap());
    let pts = [(2.0, 2.0), (10.0, 2.0), (10.0, 10.0), (2.0, 10.0), (6.0, 6.0)];
    let colors = (0..5)
        .map(|i| ColorGroup {
            radius: 0.8,
            starts: vec![Point::new(pts[i].0, pts[i].1)],
            targets: vec![Point::new(pts[(i + 1) % 5].0, pts[(i + 1) % 5].1)],
        })
        .collect();
    let sc = Scenario::new("five", ws, colors).unwrap();
    let opts = RunOptions::default();
    let state = preprocess(&sc, &PlannerParams::new(50, 100, 25, 1), &opts).unwrap();
    assert_eq!(state.graph_count(), 50);
    match state.into_query(&sc.starts(), &sc.targets(), &opts) {
        Ok(plan) => assert!(verify_plan(&sc, &plan, DEFAULT_EPS).passed),
        Err(e) => assert_eq!(e, PlannerError::QueryInfeasible),
    }
}
