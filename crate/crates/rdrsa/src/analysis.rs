//! Closed-form optima, variational bounds, and oracles for small games.
//!
//! The symmetric-game optimum `G*_α = max{(1−α)·log K, 0}` splits parameter
//! space into two regimes that meet at `α = 1`: below it the optimal speaker
//! is as random as the lexicon allows (non-informative), above it the
//! optimal pair is a deterministic meaning↔utterance bijection
//! (maximal-utility). [`criticality_scan`] classifies where converged
//! trajectories actually land, and [`brute_force_optimum`] provides an
//! exhaustive-search oracle for games small enough to grid directly.

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;

use crate::dynamics::{bayes_listener_step, iterate, Mode, Trajectory};
use crate::error::{Error, Result};
use crate::game::{Cost, Listener, ReferenceGame, Speaker};
use crate::objectives::{
    entropy, expected_utility, f_objective, g_objective, marginal_utterance_distribution,
    mutual_information,
};

/// Mutual information below this is classified as the non-informative pole.
pub const NON_INFORMATIVE_MI_TOL: f64 = 1e-6;

/// Listener log-accuracy above `−this` is classified as maximal utility.
pub const MAXIMAL_UTILITY_TOL: f64 = 1e-6;

/// Bound violations larger than this are reported (tests treat them as
/// failures; the CLI prints them as warnings).
pub const BOUND_WARN_TOL: f64 = 1e-9;

/// Cap on brute-force grid evaluations, beyond which the search is refused.
const MAX_BRUTE_EVALUATIONS: u128 = 20_000_000;

/// Where a converged trajectory sits relative to the two poles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Mutual information ≈ 0: the speaker signals nothing.
    NonInformative,
    /// Listener log-accuracy ≈ 0: communication is essentially perfect.
    MaximalUtility,
    /// Neither pole: informative but lossy.
    Critical,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::NonInformative => "non-informative",
            Regime::MaximalUtility => "maximal-utility",
            Regime::Critical => "critical",
        })
    }
}

/// Classifies a converged state from its mutual information and its
/// cost-free listener log-accuracy `E[log L(m|u)]`.
///
/// Accuracy rather than raw `E[V]` is compared to the maximal-utility pole
/// so that games with nonzero cost classify the same way as their cost-free
/// counterparts.
pub fn classify_regime(mutual_info: f64, listener_accuracy: f64) -> Regime {
    if mutual_info < NON_INFORMATIVE_MI_TOL {
        Regime::NonInformative
    } else if listener_accuracy > -MAXIMAL_UTILITY_TOL {
        Regime::MaximalUtility
    } else {
        Regime::Critical
    }
}

/// The optimum gain `max{(1−α)·log k, 0}` for a symmetric game: uniform
/// prior, constant cost, `k` meanings and utterances, no lexicon zeros.
/// The caller is responsible for those assumptions.
pub fn theoretical_optimum_g(alpha: f64, k: usize) -> f64 {
    ((1.0 - alpha) * (k as f64).ln()).max(0.0)
}

/// The maximum-entropy utterance distribution for a cost vector:
/// `Q_α(u) = exp(−α·C(u)) / Z_α`.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxEntCostDistribution {
    pub q: Array1<f64>,
    /// `log Z_α` in nats.
    pub log_partition: f64,
}

/// Computes `Q_α` from a per-utterance cost vector, shifting by the largest
/// exponent so extreme `α·C` cannot overflow.
pub fn maxent_cost_distribution(
    cost: &Array1<f64>,
    alpha: f64,
) -> Result<MaxEntCostDistribution> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::BadParameter(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    if cost.is_empty() || cost.iter().any(|&c| !c.is_finite() || c < 0.0) {
        return Err(Error::BadParameter(
            "cost vector must be non-empty, finite, and non-negative".into(),
        ));
    }
    let weights: Array1<f64> = cost.mapv(|c| -alpha * c);
    let shift = weights.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let total: f64 = weights.iter().map(|&w| (w - shift).exp()).sum();
    let log_partition = shift + total.ln();
    let q = weights.mapv(|w| (w - log_partition).exp());
    Ok(MaxEntCostDistribution { q, log_partition })
}

/// Upper bound on the gain of any listener paired with this speaker:
///
/// * zero cost: `(α−1)·I + H_S(U) − α·H(M)`;
/// * per-utterance cost: `(α−1)·I − D[S(u)‖Q_α] + log Z_α − α·H(M)`.
///
/// Per-pair costs have no closed-form bound here and are rejected.
pub fn g_upper_bound(
    speaker: &Speaker,
    prior: ArrayView1<f64>,
    alpha: f64,
    cost: &Cost,
) -> Result<f64> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::BadParameter(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    let i = mutual_information(speaker, prior)?;
    let h_m = entropy(prior);
    match cost {
        _ if cost.is_zero() => {
            let marginal = marginal_utterance_distribution(speaker, prior)?;
            Ok((alpha - 1.0) * i + entropy(marginal.view()) - alpha * h_m)
        }
        Cost::PerUtterance(c) => {
            let maxent = maxent_cost_distribution(c, alpha)?;
            let marginal = marginal_utterance_distribution(speaker, prior)?;
            let divergence: f64 = marginal
                .iter()
                .zip(maxent.q.iter())
                .filter(|(&s, _)| s > 0.0)
                .map(|(&s, &q)| s * (s / q).ln())
                .sum();
            Ok((alpha - 1.0) * i - divergence + maxent.log_partition - alpha * h_m)
        }
        Cost::PerPair(_) => Err(Error::UnsupportedCost(
            "per-pair costs have no closed-form gain bound",
        )),
    }
}

/// Lower bound `(1−α)·I + α·H(M)` on the free energy of any listener paired
/// with this speaker (derived for the zero-cost setting; a non-negative
/// cost only raises `F` further).
pub fn f_lower_bound(speaker: &Speaker, prior: ArrayView1<f64>, alpha: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::BadParameter(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    let i = mutual_information(speaker, prior)?;
    Ok((1.0 - alpha) * i + alpha * entropy(prior))
}

fn first_matching(supports: &[Vec<usize>], k_u: usize) -> Option<Vec<usize>> {
    fn extend(
        supports: &[Vec<usize>],
        m: usize,
        used: &mut [bool],
        assignment: &mut Vec<usize>,
    ) -> bool {
        if m == supports.len() {
            return true;
        }
        for &u in &supports[m] {
            if !used[u] {
                used[u] = true;
                assignment.push(u);
                if extend(supports, m + 1, used, assignment) {
                    return true;
                }
                assignment.pop();
                used[u] = false;
            }
        }
        false
    }

    let mut used = vec![false; k_u];
    let mut assignment = Vec::with_capacity(supports.len());
    extend(supports, 0, &mut used, &mut assignment).then_some(assignment)
}

/// The deterministic maximal-utility pair: a perfect matching of meanings to
/// distinct lexicon-supported utterances, with the Bayes listener over it
/// (unmatched utterances keep their literal-listener columns).
///
/// The search is depth-first over meanings in index order trying utterances
/// in ascending order, so the returned matching is the lexicographically
/// first one and the result is reproducible. Returns `None` when no perfect
/// matching exists.
pub fn max_utility_solution(game: &ReferenceGame) -> Option<(Speaker, Listener)> {
    let supports: Vec<Vec<usize>> = game
        .lexicon()
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &l)| l > 0.0)
                .map(|(u, _)| u)
                .collect()
        })
        .collect();
    let assignment = first_matching(&supports, game.k_u())?;
    let speaker = Speaker::deterministic(&assignment, game.k_u());
    let listener = bayes_listener_step(&speaker, game);
    Some((speaker, listener))
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.saturating_mul(n - i) / (i + 1);
    }
    result
}

/// All ways to write `total` as an ordered sum of `parts` non-negative
/// integers, in lexicographic order.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    fn fill(remaining: usize, slots: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in 0..=remaining {
            prefix.push(first);
            fill(remaining - first, slots - 1, prefix, out);
            prefix.pop();
        }
    }

    let mut out = Vec::new();
    fill(total, parts, &mut Vec::new(), &mut out);
    out
}

/// Result of [`brute_force_optimum`]: the best grid speaker, its Bayes
/// listener, and the objective value there.
#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub speaker: Speaker,
    pub listener: Listener,
    pub value: f64,
}

/// Exhaustively searches speaker space on a simplex grid (each row's
/// probabilities are multiples of `1/grid_resolution` over its lexicon
/// support), pairing every candidate with its Bayes listener — the optimal
/// listener response for both objectives. Maximizes `G` under
/// [`Mode::Rsa`], minimizes `F` under [`Mode::RdRsa`]; ties keep the first
/// candidate in enumeration order.
///
/// Only games with at most 6 lexicon cells are accepted, and the total
/// evaluation count is capped, so very fine grids on 2×3 games may need a
/// lower resolution.
pub fn brute_force_optimum(
    game: &ReferenceGame,
    alpha: f64,
    mode: Mode,
    grid_resolution: usize,
) -> Result<BruteForceResult> {
    let (k_m, k_u) = (game.k_m(), game.k_u());
    let cells = k_m * k_u;
    if cells > 6 {
        return Err(Error::TooLarge {
            detail: format!("{cells} lexicon cells exceed the 6-cell cap"),
        });
    }
    if grid_resolution < 10 {
        return Err(Error::BadParameter(format!(
            "grid_resolution must be at least 10, got {grid_resolution}"
        )));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::BadParameter(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }

    let supports: Vec<Vec<usize>> = game
        .lexicon()
        .rows()
        .into_iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .filter(|(_, &l)| l > 0.0)
                .map(|(u, _)| u)
                .collect()
        })
        .collect();

    let mut total_evaluations: u128 = 1;
    for support in &supports {
        let per_row = binomial(
            (grid_resolution + support.len() - 1) as u128,
            (support.len() - 1) as u128,
        );
        total_evaluations = total_evaluations.saturating_mul(per_row);
    }
    if total_evaluations > MAX_BRUTE_EVALUATIONS {
        return Err(Error::TooLarge {
            detail: format!(
                "{total_evaluations} grid points at resolution {grid_resolution}; \
                 lower the resolution"
            ),
        });
    }

    let row_choices: Vec<Vec<Vec<usize>>> = supports
        .iter()
        .map(|s| compositions(grid_resolution, s.len()))
        .collect();

    let mut best: Option<BruteForceResult> = None;
    let mut indices = vec![0usize; k_m];
    let mut matrix = Array2::zeros((k_m, k_u));
    loop {
        matrix.fill(0.0);
        for m in 0..k_m {
            let counts = &row_choices[m][indices[m]];
            for (slot, &u) in supports[m].iter().enumerate() {
                matrix[[m, u]] = counts[slot] as f64 / grid_resolution as f64;
            }
        }
        let speaker = Speaker::from_matrix(matrix.clone())?;
        let listener = bayes_listener_step(&speaker, game);
        let value = match mode {
            Mode::Rsa => g_objective(&speaker, &listener, game.prior().view(), game.cost(), alpha)?,
            Mode::RdRsa => {
                f_objective(&speaker, &listener, game.prior().view(), game.cost(), alpha)?
            }
        };
        let better = match (&best, mode) {
            (None, _) => true,
            (Some(b), Mode::Rsa) => value > b.value,
            (Some(b), Mode::RdRsa) => value < b.value,
        };
        if better {
            best = Some(BruteForceResult {
                speaker,
                listener,
                value,
            });
        }

        let mut m = k_m;
        loop {
            if m == 0 {
                return Ok(best.expect("grid contains at least one candidate"));
            }
            m -= 1;
            indices[m] += 1;
            if indices[m] < row_choices[m].len() {
                break;
            }
            indices[m] = 0;
        }
    }
}

/// Conservative bound on how far the brute-force grid optimum can sit from
/// the true continuous optimum at this resolution.
///
/// Derived from the continuity modulus `η(δ) = δ·(1 − log δ)` of `x·log x`
/// applied to the joint distribution (any speaker is within `δ = K_u /
/// resolution` per entry of a grid speaker), so it is loose by design —
/// typically orders of magnitude above observed gaps, but honest.
pub fn brute_force_grid_error(game: &ReferenceGame, alpha: f64, grid_resolution: usize) -> Result<f64> {
    if grid_resolution == 0 {
        return Err(Error::BadParameter("grid_resolution must be positive".into()));
    }
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(Error::BadParameter(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )));
    }
    let k_m = game.k_m() as f64;
    let k_u = game.k_u() as f64;
    let delta = (k_u / grid_resolution as f64).min(1.0);
    let eta = if delta < 1.0 {
        delta * (1.0 - delta.ln())
    } else {
        2.0 * (-1.0_f64).exp()
    };
    let c_max = match game.cost() {
        Cost::PerUtterance(c) => c.iter().cloned().fold(0.0, f64::max),
        Cost::PerPair(c) => c.iter().cloned().fold(0.0, f64::max),
    };
    let cost_cells = match game.cost() {
        Cost::PerUtterance(_) => k_u,
        Cost::PerPair(_) => k_m * k_u,
    };
    let cost_term = alpha * delta * cost_cells * c_max;
    let g_err = ((alpha - 1.0).abs() * k_m * k_u + alpha * k_u) * eta + cost_term;
    let f_err = (1.0 - alpha).abs() * (k_m * k_u + k_u) * eta + cost_term;
    Ok(g_err.max(f_err))
}

/// One α's worth of [`criticality_scan`] output.
#[derive(Debug, Clone)]
pub struct AsymptoticReport {
    pub alpha: f64,
    pub mode: Mode,
    pub regime: Regime,
    pub converged_g: f64,
    pub converged_f: f64,
    /// Symmetric-game optimum when its assumptions hold (uniform prior,
    /// square, constant cost, no lexicon zeros); NaN otherwise.
    pub theoretical_g_star: f64,
    /// `converged_g − theoretical_g_star`; NaN when the optimum is.
    pub gap: f64,
    pub mutual_info: f64,
    pub expected_utility: f64,
    pub depth_at_convergence: Option<usize>,
    /// Converged values that broke a variational bound by more than
    /// [`BOUND_WARN_TOL`]; empty in healthy runs.
    pub bound_violations: Vec<String>,
}

fn symmetric_optimum(game: &ReferenceGame, alpha: f64) -> f64 {
    let symmetric = game.k_m() == game.k_u()
        && game.has_uniform_prior()
        && game.cost().is_constant()
        && game.lexicon().iter().all(|&l| l > 0.0);
    if symmetric {
        theoretical_optimum_g(alpha, game.k_m()) - alpha * game.cost().value(0, 0)
    } else {
        f64::NAN
    }
}

/// Classifies a converged (or capped) trajectory: regime, objective
/// values, the symmetric-game optimum where applicable, and any
/// variational-bound violations beyond [`BOUND_WARN_TOL`].
pub fn asymptotic_report(game: &ReferenceGame, traj: &Trajectory) -> Result<AsymptoticReport> {
    let metrics = traj
        .final_record()
        .metrics_after_listener
        .expect("every iterated depth carries metrics");
    let speaker = traj.final_speaker();
    let listener = traj.final_listener();
    let accuracy = expected_utility(
        speaker,
        listener,
        game.prior().view(),
        &Cost::zero(game.k_u()),
    )?;
    let regime = classify_regime(metrics.mutual_info, accuracy);
    let theoretical_g_star = symmetric_optimum(game, traj.alpha);
    let gap = metrics.g_value - theoretical_g_star;

    let mut bound_violations = Vec::new();
    match g_upper_bound(speaker, game.prior().view(), traj.alpha, game.cost()) {
        Ok(bound) => {
            if metrics.g_value > bound + BOUND_WARN_TOL {
                bound_violations.push(format!(
                    "G = {} exceeds its upper bound {} at alpha {}",
                    metrics.g_value, bound, traj.alpha
                ));
            }
        }
        Err(Error::UnsupportedCost(_)) => {}
        Err(e) => return Err(e),
    }
    if game.cost().is_zero() {
        let bound = f_lower_bound(speaker, game.prior().view(), traj.alpha)?;
        if metrics.f_value < bound - BOUND_WARN_TOL {
            bound_violations.push(format!(
                "F = {} undercuts its lower bound {} at alpha {}",
                metrics.f_value, bound, traj.alpha
            ));
        }
    }

    Ok(AsymptoticReport {
        alpha: traj.alpha,
        mode: traj.mode,
        regime,
        converged_g: metrics.g_value,
        converged_f: metrics.f_value,
        theoretical_g_star,
        gap,
        mutual_info: metrics.mutual_info,
        expected_utility: metrics.expected_utility,
        depth_at_convergence: traj.convergence_depth,
        bound_violations,
    })
}

/// Runs [`iterate`] to convergence at every `α` in the grid (in parallel)
/// and classifies each converged state. Reports keep the grid's order.
pub fn criticality_scan(
    game: &ReferenceGame,
    alpha_grid: &[f64],
    mode: Mode,
    max_depth: usize,
    tolerance: f64,
) -> Result<Vec<AsymptoticReport>> {
    if alpha_grid.is_empty() {
        return Err(Error::BadParameter("alpha grid is empty".into()));
    }
    alpha_grid
        .par_iter()
        .map(|&alpha| {
            let traj = iterate(game, alpha, mode, max_depth, tolerance)?;
            asymptotic_report(game, &traj)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE};
    use crate::game::soften_lexicon;
    use ndarray::arr1;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn fig_game() -> ReferenceGame {
        ReferenceGame::new(
            labels(&["m", "gm", "hg"]),
            labels(&["moustache", "glasses", "hat"]),
            None,
            vec![
                vec![1.0, 0.0, 0.0],
                vec![1.0, 1.0, 0.0],
                vec![0.0, 1.0, 1.0],
            ],
            None,
        )
        .unwrap()
    }

    fn uniform_speaker(k: usize) -> Speaker {
        Speaker::from_matrix(Array2::from_elem((k, k), 1.0 / k as f64)).unwrap()
    }

    #[test]
    fn symmetric_optimum_has_two_branches() {
        close(theoretical_optimum_g(0.5, 3), 0.5 * 3.0_f64.ln(), 1e-15);
        assert_eq!(theoretical_optimum_g(1.0, 3), 0.0);
        assert_eq!(theoretical_optimum_g(2.0, 3), 0.0);
        assert_eq!(theoretical_optimum_g(0.0, 1), 0.0);
    }

    #[test]
    fn maxent_distribution_normalizes_and_matches_hand_values() {
        let zero = maxent_cost_distribution(&Array1::zeros(3), 1.7).unwrap();
        for &q in zero.q.iter() {
            close(q, 1.0 / 3.0, 1e-15);
        }
        close(zero.log_partition, 3.0_f64.ln(), 1e-15);

        let any_cost = arr1(&[0.3, 1.1, 2.0]);
        let at_zero = maxent_cost_distribution(&any_cost, 0.0).unwrap();
        for &q in at_zero.q.iter() {
            close(q, 1.0 / 3.0, 1e-15);
        }

        let two = 2.0_f64.ln();
        let halved = maxent_cost_distribution(&arr1(&[0.0, two, two]), 1.0).unwrap();
        close(halved.q[0], 0.5, 1e-14);
        close(halved.q[1], 0.25, 1e-14);
        close(halved.q[2], 0.25, 1e-14);
        close(halved.q.sum(), 1.0, 1e-12);

        assert!(maxent_cost_distribution(&arr1(&[-0.1, 0.0]), 1.0).is_err());
        assert!(maxent_cost_distribution(&arr1(&[0.1]), -1.0).is_err());
    }

    #[test]
    fn gain_bound_is_tight_at_the_non_informative_pair() {
        let speaker = uniform_speaker(3);
        let prior = Array1::from_elem(3, 1.0 / 3.0);
        let bound = g_upper_bound(&speaker, prior.view(), 0.5, &Cost::zero(3)).unwrap();
        close(bound, 0.5 * 3.0_f64.ln(), 1e-12);

        let listener = bayes_listener_step(
            &speaker,
            &ReferenceGame::new(
                labels(&["a", "b", "c"]),
                labels(&["x", "y", "z"]),
                None,
                vec![vec![1.0; 3]; 3],
                None,
            )
            .unwrap(),
        );
        let g = g_objective(&speaker, &listener, prior.view(), &Cost::zero(3), 0.5).unwrap();
        close(g, bound, 1e-12);
    }

    #[test]
    fn gain_bound_at_alpha_one_is_marginal_entropy_minus_prior_entropy() {
        let speaker = Speaker::from_matrix(
            Array2::from_shape_vec((2, 2), vec![0.8, 0.2, 0.3, 0.7]).unwrap(),
        )
        .unwrap();
        let prior = arr1(&[0.6, 0.4]);
        let bound = g_upper_bound(&speaker, prior.view(), 1.0, &Cost::zero(2)).unwrap();
        let marginal = marginal_utterance_distribution(&speaker, prior.view()).unwrap();
        close(bound, entropy(marginal.view()) - entropy(prior.view()), 1e-14);
    }

    #[test]
    fn constant_cost_shifts_the_gain_bound_linearly() {
        let speaker = Speaker::from_matrix(
            Array2::from_shape_vec((2, 2), vec![0.8, 0.2, 0.3, 0.7]).unwrap(),
        )
        .unwrap();
        let prior = arr1(&[0.6, 0.4]);
        for &alpha in &[0.3, 1.0, 2.5] {
            let plain = g_upper_bound(&speaker, prior.view(), alpha, &Cost::zero(2)).unwrap();
            let shifted = g_upper_bound(
                &speaker,
                prior.view(),
                alpha,
                &Cost::PerUtterance(arr1(&[0.7, 0.7])),
            )
            .unwrap();
            close(shifted, plain - alpha * 0.7, 1e-12);
        }
    }

    #[test]
    fn gain_bound_dominates_every_listener() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let speaker = Speaker::from_matrix(
            Array2::from_shape_vec(
                (3, 3),
                vec![0.5, 0.2, 0.3, 0.1, 0.8, 0.1, 0.25, 0.25, 0.5],
            )
            .unwrap(),
        )
        .unwrap();
        let prior = arr1(&[0.2, 0.5, 0.3]);
        for &alpha in &[0.0, 0.5, 1.0, 2.0] {
            let bound = g_upper_bound(&speaker, prior.view(), alpha, &Cost::zero(3)).unwrap();
            for _ in 0..200 {
                let mut cols = Array2::zeros((3, 3));
                for u in 0..3 {
                    let raw: Vec<f64> = (0..3).map(|_| rng.random_range(0.01..1.0)).collect();
                    let total: f64 = raw.iter().sum();
                    for m in 0..3 {
                        cols[[m, u]] = raw[m] / total;
                    }
                }
                let listener = Listener::from_matrix(cols).unwrap();
                let g =
                    g_objective(&speaker, &listener, prior.view(), &Cost::zero(3), alpha).unwrap();
                assert!(g <= bound + 1e-9, "G = {g} > bound = {bound} at alpha {alpha}");
            }
        }
    }

    #[test]
    fn free_energy_bound_at_alpha_one_is_prior_entropy() {
        let speaker = uniform_speaker(3);
        let prior = arr1(&[0.2, 0.5, 0.3]);
        let bound = f_lower_bound(&speaker, prior.view(), 1.0).unwrap();
        assert_eq!(bound, entropy(prior.view()));
        let at_zero = f_lower_bound(&speaker, prior.view(), 0.0).unwrap();
        close(at_zero, mutual_information(&speaker, prior.view()).unwrap(), 1e-15);
    }

    #[test]
    fn matching_prefers_lexicographic_order() {
        let (speaker, listener) = max_utility_solution(&fig_game()).unwrap();
        assert_eq!(speaker.prob(0, 0), 1.0);
        assert_eq!(speaker.prob(1, 1), 1.0);
        assert_eq!(speaker.prob(2, 2), 1.0);
        for u in 0..3 {
            let col_max = (0..3).map(|m| listener.prob(m, u)).fold(0.0, f64::max);
            close(col_max, 1.0, 1e-15);
        }
    }

    #[test]
    fn unmatched_universal_utterance_carries_no_speaker_mass() {
        let game = ReferenceGame::new(
            labels(&["m", "gm", "hg"]),
            labels(&["moustache", "glasses", "hat", "friend"]),
            None,
            vec![
                vec![1.0, 0.0, 0.0, 1.0],
                vec![1.0, 1.0, 0.0, 1.0],
                vec![0.0, 1.0, 1.0, 1.0],
            ],
            None,
        )
        .unwrap();
        let (speaker, listener) = max_utility_solution(&game).unwrap();
        for m in 0..3 {
            assert_eq!(speaker.prob(m, 3), 0.0);
        }
        for m in 0..3 {
            close(listener.prob(m, 3), 1.0 / 3.0, 1e-15);
        }
    }

    #[test]
    fn matching_is_absent_when_meanings_outnumber_utterances() {
        let game = ReferenceGame::new(
            labels(&["a", "b"]),
            labels(&["x"]),
            None,
            vec![vec![1.0], vec![1.0]],
            None,
        )
        .unwrap();
        assert!(max_utility_solution(&game).is_none());
    }

    #[test]
    fn brute_force_finds_the_entropy_maximizer_on_one_meaning() {
        let game = ReferenceGame::new(
            labels(&["only"]),
            labels(&["x", "y"]),
            None,
            vec![vec![1.0, 1.0]],
            None,
        )
        .unwrap();
        let result = brute_force_optimum(&game, 0.0, Mode::Rsa, 10).unwrap();
        close(result.value, 2.0_f64.ln(), 1e-15);
        close(result.speaker.prob(0, 0), 0.5, 1e-15);
    }

    #[test]
    fn brute_force_reaches_the_deterministic_corner_at_high_alpha() {
        let game = ReferenceGame::new(
            labels(&["a", "b"]),
            labels(&["x", "y"]),
            None,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            None,
        )
        .unwrap();
        let result = brute_force_optimum(&game, 2.0, Mode::Rsa, 20).unwrap();
        assert_eq!(result.value, 0.0);
        assert_eq!(result.speaker.prob(0, 0), 1.0);
    }

    #[test]
    fn brute_force_attains_the_symmetric_optimum_on_an_even_grid() {
        let game = ReferenceGame::new(
            labels(&["a", "b"]),
            labels(&["x", "y"]),
            None,
            vec![vec![1.0, 0.8], vec![0.7, 1.0]],
            None,
        )
        .unwrap();
        let result = brute_force_optimum(&game, 0.5, Mode::Rsa, 100).unwrap();
        close(result.value, 0.5 * 2.0_f64.ln(), 1e-12);
    }

    #[test]
    fn iterate_lands_within_grid_error_of_brute_force() {
        let game = ReferenceGame::new(
            labels(&["a", "b"]),
            labels(&["x", "y"]),
            None,
            vec![vec![1.0, 0.6], vec![0.3, 1.0]],
            None,
        )
        .unwrap();
        for &alpha in &[0.5, 1.5] {
            for mode in [Mode::Rsa, Mode::RdRsa] {
                let brute = brute_force_optimum(&game, alpha, mode, 50).unwrap();
                let traj = iterate(&game, alpha, mode, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE)
                    .unwrap();
                let converged = traj.final_record().metrics_after_listener.unwrap();
                let value = match mode {
                    Mode::Rsa => converged.g_value,
                    Mode::RdRsa => converged.f_value,
                };
                let margin = brute_force_grid_error(&game, alpha, 50).unwrap();
                assert!(
                    (value - brute.value).abs() <= margin,
                    "|{value} - {}| > {margin} at alpha {alpha} mode {mode}",
                    brute.value
                );
            }
        }
    }

    #[test]
    fn brute_force_rejects_oversized_searches() {
        assert!(matches!(
            brute_force_optimum(&fig_game(), 1.0, Mode::Rsa, 50),
            Err(Error::TooLarge { .. })
        ));
        let wide = ReferenceGame::new(
            labels(&["a", "b"]),
            labels(&["x", "y", "z"]),
            None,
            vec![vec![1.0; 3], vec![1.0; 3]],
            None,
        )
        .unwrap();
        assert!(matches!(
            brute_force_optimum(&wide, 1.0, Mode::Rsa, 5000),
            Err(Error::TooLarge { .. })
        ));
        assert!(brute_force_optimum(&wide, 1.0, Mode::Rsa, 5).is_err());
    }

    #[test]
    fn regime_classification_thresholds() {
        assert_eq!(classify_regime(0.0, -2.0), Regime::NonInformative);
        assert_eq!(classify_regime(1e-9, -1e-12), Regime::NonInformative);
        assert_eq!(classify_regime(0.4, -1e-9), Regime::MaximalUtility);
        assert_eq!(classify_regime(0.4, -0.2), Regime::Critical);
    }

    #[test]
    fn scan_reproduces_the_two_regimes_around_the_critical_point() {
        let softened = soften_lexicon(&fig_game(), 0.05).unwrap();
        let reports = criticality_scan(
            &softened,
            &[0.5, 0.9, 1.1, 2.0],
            Mode::Rsa,
            DEFAULT_MAX_DEPTH,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        let regimes: Vec<Regime> = reports.iter().map(|r| r.regime).collect();
        assert_eq!(
            regimes,
            vec![
                Regime::NonInformative,
                Regime::NonInformative,
                Regime::MaximalUtility,
                Regime::MaximalUtility,
            ]
        );
        for report in &reports {
            assert!(
                report.gap.abs() <= 1e-6,
                "gap {} at alpha {}",
                report.gap,
                report.alpha
            );
            assert!(report.bound_violations.is_empty());
        }
    }

    #[test]
    fn scan_classifies_rd_alpha_one_as_critical_with_prior_entropy_f() {
        let softened = soften_lexicon(&fig_game(), 0.05).unwrap();
        let reports = criticality_scan(
            &softened,
            &[1.0],
            Mode::RdRsa,
            DEFAULT_MAX_DEPTH,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert_eq!(reports[0].regime, Regime::Critical);
        close(reports[0].converged_f, 3.0_f64.ln(), 1e-9);
    }

    #[test]
    fn scan_leaves_the_symmetric_optimum_blank_when_assumptions_fail() {
        let reports = criticality_scan(
            &fig_game(),
            &[0.5],
            Mode::Rsa,
            DEFAULT_MAX_DEPTH,
            DEFAULT_TOLERANCE,
        )
        .unwrap();
        assert!(reports[0].theoretical_g_star.is_nan());
        assert!(reports[0].gap.is_nan());
        assert!(
            criticality_scan(&fig_game(), &[], Mode::Rsa, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE)
                .is_err()
        );
    }
}
