//! Dynamics invariants checked on seeded random games: half-step
//! improvement, support preservation, fixed-point self-consistency, and
//! the exact agreement of the two recursions at depth 1.

mod common;

use common::{fixed_point_residual, random_game, seeded, GameShape};
use rdrsa::analysis::asymptotic_report;
use rdrsa::dynamics::{iterate, Mode};
use rdrsa::game::ReferenceGame;

const ALPHAS: [f64; 5] = [0.3, 0.9, 1.0, 1.5, 3.0];

const SHAPES: [GameShape; 4] = [
    GameShape {
        uniform_prior: true,
        allow_zeros: false,
        with_cost: false,
    },
    GameShape {
        uniform_prior: true,
        allow_zeros: true,
        with_cost: true,
    },
    GameShape {
        uniform_prior: false,
        allow_zeros: true,
        with_cost: false,
    },
    GameShape {
        uniform_prior: false,
        allow_zeros: false,
        with_cost: true,
    },
];

fn sample_games(seed: u64, per_shape: usize) -> Vec<ReferenceGame> {
    let mut rng = seeded(seed);
    let mut games = Vec::new();
    for shape in SHAPES {
        for _ in 0..per_shape {
            games.push(random_game(&mut rng, shape));
        }
    }
    games
}

#[test]
fn bayes_listener_step_never_lowers_expected_utility() {
    for (i, game) in sample_games(11, 8).iter().enumerate() {
        for alpha in ALPHAS {
            for mode in [Mode::Rsa, Mode::RdRsa] {
                let traj = iterate(game, alpha, mode, 300, 1e-10).unwrap();
                for record in &traj.records[1..] {
                    let before = record.metrics_after_speaker.unwrap().expected_utility;
                    let after = record.metrics_after_listener.unwrap().expected_utility;
                    if before == f64::NEG_INFINITY {
                        continue;
                    }
                    assert!(
                        after >= before - 1e-9,
                        "game {i} {mode} alpha {alpha} depth {}: \
                         E[V] fell from {before} to {after} at the listener step",
                        record.depth
                    );
                }
            }
        }
    }
}

#[test]
fn rd_free_energy_is_non_increasing_across_half_steps() {
    for (i, game) in sample_games(12, 8).iter().enumerate() {
        for alpha in ALPHAS {
            let traj = iterate(game, alpha, Mode::RdRsa, 300, 1e-10).unwrap();
            let values = common::half_step_values(&traj, |m| m.f_value);
            for (step, pair) in values.windows(2).enumerate() {
                assert!(
                    pair[1] <= pair[0] + 1e-9,
                    "game {i} alpha {alpha} half-step {step}: \
                     F rose from {} to {}",
                    pair[0],
                    pair[1]
                );
            }
        }
    }
}

#[test]
fn lexicon_zeros_stay_zero_in_every_map() {
    for (i, game) in sample_games(13, 8).iter().enumerate() {
        let zero_cells: Vec<(usize, usize)> = (0..game.k_m())
            .flat_map(|m| (0..game.k_u()).map(move |u| (m, u)))
            .filter(|&(m, u)| game.lexicon()[[m, u]] == 0.0)
            .collect();
        if zero_cells.is_empty() {
            continue;
        }
        for alpha in [0.5, 1.5] {
            for mode in [Mode::Rsa, Mode::RdRsa] {
                let traj = iterate(game, alpha, mode, 200, 1e-10).unwrap();
                for record in &traj.records {
                    for &(m, u) in &zero_cells {
                        assert_eq!(
                            record.listener.prob(m, u),
                            0.0,
                            "game {i} {mode} alpha {alpha} depth {}: \
                             listener leaked mass onto a lexicon zero at ({m}, {u})",
                            record.depth
                        );
                        if let Some(speaker) = &record.speaker {
                            assert_eq!(
                                speaker.prob(m, u),
                                0.0,
                                "game {i} {mode} alpha {alpha} depth {}: \
                                 speaker leaked mass onto a lexicon zero at ({m}, {u})",
                                record.depth
                            );
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn rd_dead_utterances_never_regrow() {
    for (i, game) in sample_games(14, 8).iter().enumerate() {
        for alpha in ALPHAS {
            let traj = iterate(game, alpha, Mode::RdRsa, 300, 1e-10).unwrap();
            let k_u = game.k_u();
            let mut dead = vec![false; k_u];
            for (depth, marginal) in traj.rd_marginal_history.iter().enumerate() {
                for u in 0..k_u {
                    if dead[u] {
                        assert_eq!(
                            marginal[u], 0.0,
                            "game {i} alpha {alpha}: utterance {u} regrew \
                             marginal mass at depth {depth}"
                        );
                    } else if marginal[u] == 0.0 {
                        dead[u] = true;
                    }
                }
            }
        }
    }
}

#[test]
fn converged_trajectories_satisfy_the_fixed_point_equations() {
    let mut checked = 0usize;
    for (i, game) in sample_games(15, 6).iter().enumerate() {
        for alpha in [0.3, 0.9, 1.5, 3.0] {
            for mode in [Mode::Rsa, Mode::RdRsa] {
                let traj = iterate(game, alpha, mode, 5_000, 1e-12).unwrap();
                if !traj.converged {
                    continue;
                }
                let marginal = match mode {
                    Mode::Rsa => None,
                    Mode::RdRsa => traj.rd_marginal_history.last(),
                };
                let residual = fixed_point_residual(
                    game,
                    traj.final_speaker(),
                    traj.final_listener(),
                    marginal,
                    alpha,
                );
                assert!(
                    residual <= 1e-9,
                    "game {i} {mode} alpha {alpha}: converged maps violate the \
                     fixed-point equations by {residual}"
                );
                checked += 1;
            }
        }
    }
    assert!(
        checked >= 100,
        "only {checked} trajectories converged; the fixture set is too degenerate"
    );
}

#[test]
fn depth_one_agrees_exactly_between_the_two_recursions() {
    for (i, game) in sample_games(16, 10).iter().enumerate() {
        for alpha in ALPHAS {
            let rsa = iterate(game, alpha, Mode::Rsa, 1, 1e-10).unwrap();
            let rd = iterate(game, alpha, Mode::RdRsa, 1, 1e-10).unwrap();
            let s_rsa = rsa.records[1].speaker.as_ref().unwrap().matrix();
            let s_rd = rd.records[1].speaker.as_ref().unwrap().matrix();
            for m in 0..game.k_m() {
                for u in 0..game.k_u() {
                    let d = (s_rsa[[m, u]] - s_rd[[m, u]]).abs();
                    assert!(
                        d <= 1e-14,
                        "game {i} alpha {alpha}: depth-1 speakers differ by {d} \
                         at ({m}, {u}) despite the uniform-marginal initialization"
                    );
                }
            }
            let l_rsa = rsa.records[1].listener.matrix();
            let l_rd = rd.records[1].listener.matrix();
            for m in 0..game.k_m() {
                for u in 0..game.k_u() {
                    let d = (l_rsa[[m, u]] - l_rd[[m, u]]).abs();
                    assert!(
                        d <= 1e-14,
                        "game {i} alpha {alpha}: depth-1 listeners differ by {d} at ({m}, {u})"
                    );
                }
            }
        }
    }
}

#[test]
fn zero_alpha_speaker_is_uniform_over_decodable_utterances() {
    for (i, game) in sample_games(17, 10).iter().enumerate() {
        let rsa = iterate(game, 0.0, Mode::Rsa, 50, 1e-10).unwrap();
        assert_eq!(
            rsa.convergence_depth,
            Some(1),
            "game {i}: an alpha-0 speaker ignores the listener, so the \
             recursion should settle after one depth"
        );
        let rd = iterate(game, 0.0, Mode::RdRsa, 1, 1e-10).unwrap();
        for (mode, record) in [("rsa", &rsa.records[1]), ("rd-rsa", &rd.records[1])] {
            let speaker = record.speaker.as_ref().unwrap();
            for m in 0..game.k_m() {
                let supported: Vec<usize> = (0..game.k_u())
                    .filter(|&u| game.lexicon()[[m, u]] > 0.0)
                    .collect();
                let share = speaker.prob(m, supported[0]);
                for u in 0..game.k_u() {
                    if supported.contains(&u) {
                        assert_eq!(
                            speaker.prob(m, u),
                            share,
                            "game {i} {mode} meaning {m}: alpha 0 row is not uniform"
                        );
                    } else {
                        assert_eq!(speaker.prob(m, u), 0.0);
                    }
                }
                let total: f64 = supported.iter().map(|&u| speaker.prob(m, u)).sum();
                assert!((total - 1.0).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn single_row_and_single_column_games_converge_immediately() {
    let one_meaning = ReferenceGame::new(
        vec!["m".into()],
        vec!["left".into(), "right".into()],
        None,
        vec![vec![1.0, 1.0]],
        None,
    )
    .unwrap();
    let one_utterance = ReferenceGame::new(
        vec!["a".into(), "b".into()],
        vec!["word".into()],
        None,
        vec![vec![1.0], vec![1.0]],
        None,
    )
    .unwrap();
    for game in [&one_meaning, &one_utterance] {
        for alpha in [0.5, 2.0] {
            for mode in [Mode::Rsa, Mode::RdRsa] {
                let traj = iterate(game, alpha, mode, 10, 1e-10).unwrap();
                assert_eq!(
                    traj.convergence_depth,
                    Some(1),
                    "{}x{} game, {mode} alpha {alpha}",
                    game.k_m(),
                    game.k_u()
                );
            }
        }
    }
    let trivial = iterate(&one_utterance, 1.0, Mode::Rsa, 10, 1e-10).unwrap();
    let listener = trivial.final_listener();
    for m in 0..2 {
        assert!((listener.prob(m, 0) - 0.5).abs() <= 1e-12);
    }
}

#[test]
fn asymptotic_reports_on_random_games_never_violate_the_bounds() {
    for (i, game) in sample_games(18, 8).iter().enumerate() {
        for alpha in [0.5, 1.5, 3.0] {
            for mode in [Mode::Rsa, Mode::RdRsa] {
                let traj = iterate(game, alpha, mode, 3_000, 1e-10).unwrap();
                let report = asymptotic_report(game, &traj).unwrap();
                assert!(
                    report.bound_violations.is_empty(),
                    "game {i} {mode} alpha {alpha}: {:?}",
                    report.bound_violations
                );
            }
        }
    }
}
