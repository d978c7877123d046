//! Shared helpers for integration tests: seeded random games and
//! hand-rolled fixed-point residuals independent of the library's own
//! update code.
//!
//! Each test binary compiles this module separately and uses a different
//! subset of it.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rdrsa::dynamics::Trajectory;
use rdrsa::game::{Cost, Listener, ReferenceGame, Speaker};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Options for [`random_game`].
#[derive(Copy, Clone)]
pub struct GameShape {
    pub uniform_prior: bool,
    pub allow_zeros: bool,
    pub with_cost: bool,
}

/// A random valid game with 2–5 meanings and utterances: graded lexicon
/// (optionally with hard zeros, keeping every row and column supported),
/// random or uniform prior, and optionally a nonconstant per-utterance
/// cost.
pub fn random_game(rng: &mut ChaCha8Rng, shape: GameShape) -> ReferenceGame {
    let k_m = rng.random_range(2..=5);
    let k_u = rng.random_range(2..=5);

    let mut lexicon = vec![vec![0.0; k_u]; k_m];
    for row in &mut lexicon {
        for cell in row.iter_mut() {
            *cell = if shape.allow_zeros && rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.05..=1.0)
            };
        }
    }
    for (m, row) in lexicon.iter_mut().enumerate() {
        if row.iter().all(|&x| x == 0.0) {
            row[m % k_u] = rng.random_range(0.05..=1.0);
        }
    }
    for u in 0..k_u {
        if (0..k_m).all(|m| lexicon[m][u] == 0.0) {
            lexicon[u % k_m][u] = rng.random_range(0.05..=1.0);
        }
    }

    let prior = if shape.uniform_prior {
        None
    } else {
        let raw: Vec<f64> = (0..k_m).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        Some(raw.into_iter().map(|x| x / total).collect())
    };

    let cost = if shape.with_cost {
        let mut c: Vec<f64> = (0..k_u).map(|_| rng.random_range(0.0..1.5)).collect();
        if c.iter().all(|&x| (x - c[0]).abs() < 1e-9) {
            c[0] += 0.5;
        }
        Some(Cost::PerUtterance(Array1::from(c)))
    } else {
        None
    };

    let meanings = (0..k_m).map(|i| format!("m{i}")).collect();
    let utterances = (0..k_u).map(|i| format!("u{i}")).collect();
    ReferenceGame::new(meanings, utterances, prior, lexicon, cost)
        .expect("generated game is valid")
}

/// A random row-stochastic matrix with strictly positive entries.
pub fn random_speaker(rng: &mut ChaCha8Rng, k_m: usize, k_u: usize) -> Speaker {
    let mut matrix = Array2::zeros((k_m, k_u));
    for m in 0..k_m {
        let raw: Vec<f64> = (0..k_u).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (u, x) in raw.into_iter().enumerate() {
            matrix[[m, u]] = x / total;
        }
    }
    Speaker::from_matrix(matrix).expect("rows are normalized")
}

/// A random column-stochastic matrix with strictly positive entries.
pub fn random_listener(rng: &mut ChaCha8Rng, k_m: usize, k_u: usize) -> Listener {
    let mut matrix = Array2::zeros((k_m, k_u));
    for u in 0..k_u {
        let raw: Vec<f64> = (0..k_m).map(|_| rng.random_range(0.01..1.0)).collect();
        let total: f64 = raw.iter().sum();
        for (m, x) in raw.into_iter().enumerate() {
            matrix[[m, u]] = x / total;
        }
    }
    Listener::from_matrix(matrix).expect("columns are normalized")
}

/// A random probability vector of length `k`.
pub fn random_prior(rng: &mut ChaCha8Rng, k: usize) -> Array1<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    Array1::from(raw.into_iter().map(|x| x / total).collect::<Vec<f64>>())
}

/// Interleaved per-half-step values of one metric across a trajectory:
/// speaker phase then listener phase for each iterated depth.
pub fn half_step_values<F>(trajectory: &Trajectory, metric: F) -> Vec<f64>
where
    F: Fn(&rdrsa::objectives::ObjectiveReport) -> f64,
{
    let mut values = Vec::new();
    for record in &trajectory.records[1..] {
        values.push(metric(&record.metrics_after_speaker.expect("speaker metrics")));
        values.push(metric(&record.metrics_after_listener.expect("listener metrics")));
    }
    values
}

/// Largest violation of the self-consistent fixed-point equations at
/// `(S, L)`, computed with update formulas written out independently of
/// the library's iteration code. For RSA pass `marginal = None`; for
/// RD-RSA pass the converged utterance marginal.
pub fn fixed_point_residual(
    game: &ReferenceGame,
    speaker: &Speaker,
    listener: &Listener,
    marginal: Option<&Array1<f64>>,
    alpha: f64,
) -> f64 {
    let (k_m, k_u) = (game.k_m(), game.k_u());
    let prior = game.prior();
    let mut residual: f64 = 0.0;

    let mut implied_marginal = Array1::<f64>::zeros(k_u);
    for u in 0..k_u {
        for m in 0..k_m {
            implied_marginal[u] += prior[m] * speaker.prob(m, u);
        }
    }
    if let Some(q) = marginal {
        for u in 0..k_u {
            residual = residual.max((q[u] - implied_marginal[u]).abs());
        }
    }

    for u in 0..k_u {
        if implied_marginal[u] <= 0.0 {
            continue;
        }
        for m in 0..k_m {
            let bayes = prior[m] * speaker.prob(m, u) / implied_marginal[u];
            residual = residual.max((listener.prob(m, u) - bayes).abs());
        }
    }

    for m in 0..k_m {
        let mut weights = vec![0.0; k_u];
        let mut total = 0.0;
        for (u, w) in weights.iter_mut().enumerate() {
            let l = listener.prob(m, u);
            let q = marginal.map_or(1.0, |q| q[u]);
            if l > 0.0 && q > 0.0 {
                *w = q * (alpha * (l.ln() - game.cost().value(m, u))).exp();
                total += *w;
            }
        }
        assert!(total > 0.0, "meaning {m} has no decodable utterance");
        for (u, w) in weights.iter().enumerate() {
            residual = residual.max((speaker.prob(m, u) - w / total).abs());
        }
    }

    residual
}

/// Whether the listener is a deterministic meaning↔utterance bijection
/// within `tol`: every column one-hot, each on a distinct meaning.
pub fn is_bijection_listener(listener: &Listener, k: usize, tol: f64) -> bool {
    let mut hit = vec![false; k];
    for u in 0..k {
        let mut best = (0, f64::NEG_INFINITY);
        for m in 0..k {
            if listener.prob(m, u) > best.1 {
                best = (m, listener.prob(m, u));
            }
        }
        if (best.1 - 1.0).abs() > tol || hit[best.0] {
            return false;
        }
        hit[best.0] = true;
    }
    hit.iter().all(|&h| h)
}
