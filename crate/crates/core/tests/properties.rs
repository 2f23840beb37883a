use dyninfer::format::{parse_model, write_model};
use dyninfer::oracle::{exact_loss_history, random_problem, verify_lemma1, random_history_strategy};
use dyninfer::{
    bar_loss_table, evaluate_markov, example_section33, example_stock, minimum_inference_loss,
    solve, validate_problem, HistoryMode, HistoryStrategy, MarkovStrategy, Problem, TieBreakRule,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, n: usize, nx: usize, ny: usize, nyhat: usize) -> Problem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_problem(&mut rng, n, nx, ny, nyhat).unwrap()
}

fn random_markov(problem: &Problem, rng: &mut impl Rng) -> MarkovStrategy {
    let nyhat = problem.yhat_space().len();
    MarkovStrategy::new(
        (0..problem.n())
            .map(|_| {
                (0..problem.x_space().len())
                    .map(|_| rng.random_range(0..nyhat))
                    .collect()
            })
            .collect(),
    )
}

fn problems() -> impl Strategy<Value = Problem> {
    (any::<u64>(), 1usize..=4, 1usize..=3, 1usize..=3, 1usize..=3)
        .prop_map(|(seed, n, nx, ny, nyhat)| instance(seed, n, nx, ny, nyhat))
}

/// Same problem with every loss mapped through `f`.
fn map_loss(problem: &Problem, f: impl Fn(f64) -> f64) -> Problem {
    let mut data = problem.to_data();
    for per_y in &mut data.loss {
        for per_a in per_y {
            for v in per_a {
                *v = f(*v);
            }
        }
    }
    validate_problem(data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn model_json_round_trip(p in problems()) {
        let back = parse_model(&write_model(&p)).unwrap();
        prop_assert_eq!(back.x_space(), p.x_space());
        prop_assert_eq!(back.y_space(), p.y_space());
        let (a, b) = (back.to_data(), p.to_data());
        let flat = |d: &dyninfer::ProblemData| -> Vec<f64> {
            let mut v = d.init.clone();
            v.extend(d.transitions.iter().flatten().flatten().flatten());
            v.extend(d.quantities.iter().flatten().flatten());
            v.extend(d.loss.iter().flatten().flatten());
            v
        };
        for (x, y) in flat(&a).into_iter().zip(flat(&b)) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn validated_rows_sum_to_one(p in problems()) {
        let check = |row: &[f64]| (row.iter().sum::<f64>() - 1.0).abs() <= 1e-12;
        prop_assert!(check(p.init().probs()));
        for k in p.quantities() {
            for x in 0..p.x_space().len() {
                prop_assert!(check(k.row(x).probs()));
            }
        }
        for k in p.transitions() {
            for x in 0..p.x_space().len() {
                for a in 0..p.yhat_space().len() {
                    prop_assert!(check(k.row(x, a).probs()));
                }
            }
        }
    }

    #[test]
    fn bar_loss_is_the_quantity_expectation(p in problems()) {
        let table = bar_loss_table(&p);
        let data = p.to_data();
        for round in 1..=p.n() {
            for x in 0..p.x_space().len() {
                for a in 0..p.yhat_space().len() {
                    let mut explicit = 0.0;
                    for y in 0..p.y_space().len() {
                        explicit += data.quantities[round - 1][x][y] * data.loss[x][y][a];
                    }
                    prop_assert!((table.get(round, x, a) - explicit).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn bar_loss_ignores_strategies(seed in any::<u64>()) {
        let p = instance(seed, 3, 2, 2, 2);
        let before = bar_loss_table(&p);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let _ = evaluate_markov(&p, &random_markov(&p, &mut rng)).unwrap();
        let _ = solve(&p, TieBreakRule::FirstIndex);
        prop_assert_eq!(bar_loss_table(&p), before);
    }

    #[test]
    fn bellman_consistency(p in problems()) {
        let r = solve(&p, TieBreakRule::MyopicPreferred);
        let data = p.to_data();
        let (n, nx, nyhat, ny) = (p.n(), p.x_space().len(), p.yhat_space().len(), p.y_space().len());
        for round in 1..=n {
            for x in 0..nx {
                let best = (0..nyhat)
                    .map(|a| {
                        let stage: f64 = (0..ny)
                            .map(|y| data.quantities[round - 1][x][y] * data.loss[x][y][a])
                            .sum();
                        let future: f64 = if round < n {
                            (0..nx)
                                .map(|xn| data.transitions[round - 1][x][a][xn] * r.v(round + 1, xn))
                                .sum()
                        } else {
                            0.0
                        };
                        stage + future
                    })
                    .fold(f64::INFINITY, f64::min);
                prop_assert!((best - r.v(round, x)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn policy_survives_positive_affine_loss_maps(
        seed in any::<u64>(),
        scale in 0.25f64..4.0,
        shift in -1.0f64..1.0,
    ) {
        let p = instance(seed, 4, 2, 2, 2);
        let q = map_loss(&p, |v| scale * v + shift);
        let (rp, rq) = (solve(&p, TieBreakRule::FirstIndex), solve(&q, TieBreakRule::FirstIndex));
        for round in 1..=4 {
            let remaining = (4 - round + 1) as f64;
            for x in 0..2 {
                prop_assert_eq!(rp.ties(round, x), rq.ties(round, x));
                prop_assert_eq!(rp.action(round, x), rq.action(round, x));
                let expected = scale * rp.v(round, x) + shift * remaining;
                prop_assert!((rq.v(round, x) - expected).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn both_tie_rules_attain_the_minimum(p in problems()) {
        for rule in [TieBreakRule::MyopicPreferred, TieBreakRule::FirstIndex] {
            let r = solve(&p, rule);
            let min = minimum_inference_loss(&p, &r).unwrap();
            let j = evaluate_markov(&p, &MarkovStrategy::optimal(&r)).unwrap().j;
            prop_assert!((j - min).abs() <= 1e-12);
        }
    }

    #[test]
    fn markov_strategies_never_beat_the_optimum(seed in any::<u64>(), n in 1usize..=5) {
        let p = instance(seed, n, 3, 2, 3);
        let r = solve(&p, TieBreakRule::MyopicPreferred);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(17));
        for _ in 0..8 {
            let s = random_markov(&p, &mut rng);
            let e = evaluate_markov(&p, &s).unwrap();
            for round in 1..=n {
                for x in 0..3 {
                    prop_assert!(e.loss_to_go(round, x).unwrap() >= r.v(round, x) - 1e-9);
                }
            }
            // Splice: follow `s` before round `k`, the optimum from `k` on.
            let k = rng.random_range(1..=n);
            let mut table = s.table().to_vec();
            for round in k..=n {
                table[round - 1] = r.policy_table()[round - 1].clone();
            }
            let spliced = evaluate_markov(&p, &MarkovStrategy::new(table)).unwrap();
            for round in k..=n {
                for x in 0..3 {
                    prop_assert!((spliced.loss_to_go(round, x).unwrap() - r.v(round, x)).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn lifted_markov_matches_exact_evaluation(seed in any::<u64>(), n in 1usize..=3) {
        let p = instance(seed, n, 2, 2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabc);
        let s = random_markov(&p, &mut rng);
        let j = evaluate_markov(&p, &s).unwrap().j;
        for mode in [HistoryMode::Revealed, HistoryMode::Unrevealed] {
            let lifted = HistoryStrategy::from_markov(&p, &s, mode).unwrap();
            prop_assert!((exact_loss_history(&p, &lifted).unwrap() - j).abs() <= 1e-12);
        }
    }

    #[test]
    fn loss_marginalization_identity(seed in any::<u64>(), n in 1usize..=3) {
        let p = instance(seed, n, 2, 3, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for mode in [HistoryMode::Revealed, HistoryMode::Unrevealed] {
            let s = random_history_strategy(&p, mode, &mut rng).unwrap();
            let (lhs, rhs) = verify_lemma1(&p, &s).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}

#[test]
fn zero_one_loss_gives_complementary_probability() {
    for p in [example_section33(3), example_stock(3)] {
        let table = bar_loss_table(&p);
        for round in 1..=3 {
            for x in 0..2 {
                for a in 0..2 {
                    let want = 1.0 - p.quantity(round).prob(x, a);
                    assert!((table.get(round, x, a) - want).abs() <= 1e-12);
                }
            }
        }
    }
}

#[test]
fn values_shrink_toward_the_horizon() {
    for p in [example_section33(6), example_stock(6)] {
        let r = solve(&p, TieBreakRule::MyopicPreferred);
        for round in 1..6 {
            for x in 0..2 {
                assert!(r.v(round, x) >= r.v(round + 1, x));
            }
        }
    }
}
