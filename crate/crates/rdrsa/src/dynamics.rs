//! Alternating speaker/listener updates and their trajectories.
//!
//! A trajectory starts from the literal listener (depth 0) and alternates
//! speaker and listener half-steps. At depth `t ≥ 1`:
//!
//! * the speaker best-responds softly to the depth-`t−1` listener — either
//!   [`rsa_speaker_step`] (fixed cost) or [`rd_speaker_step`] (reweighting by
//!   its own evolving utterance marginal);
//! * the listener Bayes-inverts the new speaker via [`bayes_listener_step`].
//!
//! Both functionals are evaluated after each half-step, so a trajectory
//! doubles as a numerical record of the monotonicity guarantees: gain `G`
//! never decreases under [`Mode::Rsa`], free energy `F` never increases
//! under [`Mode::RdRsa`].

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::game::{sup_diff, Listener, ReferenceGame, Speaker};
use crate::objectives::{marginal_utterance_distribution, ObjectiveReport};

/// Default iteration cap for [`iterate`].
pub const DEFAULT_MAX_DEPTH: usize = 10_000;

/// Default sup-norm convergence tolerance for [`iterate`].
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Which speaker update the recursion uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Soft-max speaker with a fixed utterance cost.
    Rsa,
    /// Speaker reweighted by its own evolving utterance marginal.
    RdRsa,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Rsa => "rsa",
            Mode::RdRsa => "rd-rsa",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rsa" => Ok(Mode::Rsa),
            "rd-rsa" => Ok(Mode::RdRsa),
            other => Err(Error::BadParameter(format!(
                "unknown mode `{other}` (expected `rsa` or `rd-rsa`)"
            ))),
        }
    }
}

/// One depth of a trajectory: the maps in force after that depth's updates
/// and the functionals evaluated after each half-step.
///
/// Depth 0 holds only the literal listener; its speaker and metrics are
/// `None` because no speaker exists yet.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub depth: usize,
    pub speaker: Option<Speaker>,
    pub listener: Listener,
    /// Functionals of (this speaker, previous listener).
    pub metrics_after_speaker: Option<ObjectiveReport>,
    /// Functionals of (this speaker, this listener).
    pub metrics_after_listener: Option<ObjectiveReport>,
    /// Utterances this speaker never produces, whose posterior columns were
    /// filled with the literal listener instead of an undefined Bayes rule.
    pub literal_fallback_utterances: Vec<usize>,
}

/// A full run of the recursion on one game at one `α`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    game: ReferenceGame,
    pub alpha: f64,
    pub mode: Mode,
    pub records: Vec<IterationRecord>,
    /// Whether successive depths came within tolerance before the cap.
    pub converged: bool,
    /// First depth `t` with the depth-`t+1` maps within tolerance of the
    /// depth-`t` ones; `None` when the cap was hit first.
    pub convergence_depth: Option<usize>,
    /// Speaker utterance marginals by depth (entry 0 is the uniform
    /// initialization); empty under [`Mode::Rsa`].
    pub rd_marginal_history: Vec<Array1<f64>>,
}

impl Trajectory {
    pub fn game(&self) -> &ReferenceGame {
        &self.game
    }

    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("a trajectory is never empty")
    }

    pub fn final_listener(&self) -> &Listener {
        &self.final_record().listener
    }

    pub fn final_speaker(&self) -> &Speaker {
        self.final_record()
            .speaker
            .as_ref()
            .expect("every trajectory runs at least one speaker step")
    }

    /// The listener at `depth`, or the deepest one recorded when `depth`
    /// exceeds the trajectory (past convergence the listener no longer
    /// changes).
    pub fn listener_at_depth(&self, depth: usize) -> &Listener {
        let idx = depth.min(self.records.len() - 1);
        &self.records[idx].listener
    }
}

/// The literal listener: the lexicon-weighted prior, column-normalized.
///
/// If the prior zeroes out every meaning compatible with some utterance,
/// that column falls back to the normalized lexicon column itself (the
/// prior-free literal posterior); the next speaker step on such a game
/// fails with [`Error::MeaningUnreachable`] anyway.
pub fn literal_listener(game: &ReferenceGame) -> Listener {
    let (k_m, k_u) = (game.k_m(), game.k_u());
    let mut matrix = Array2::zeros((k_m, k_u));
    for u in 0..k_u {
        let weighted: Vec<f64> = (0..k_m)
            .map(|m| game.lexicon()[[m, u]] * game.prior()[m])
            .collect();
        let total: f64 = weighted.iter().sum();
        if total > 0.0 {
            for m in 0..k_m {
                matrix[[m, u]] = weighted[m] / total;
            }
        } else {
            let support: f64 = game.lexicon().column(u).sum();
            for m in 0..k_m {
                matrix[[m, u]] = game.lexicon()[[m, u]] / support;
            }
        }
    }
    Listener::from_matrix(matrix).expect("columns are normalized by construction")
}

fn finite_alpha(alpha: f64) -> Result<f64> {
    if alpha.is_finite() && alpha >= 0.0 {
        Ok(alpha)
    } else {
        Err(Error::BadParameter(format!(
            "alpha must be finite and non-negative, got {alpha}"
        )))
    }
}

/// Normalizes exponentiated log-weights row by row, shifting by the row
/// maximum so large `α` cannot overflow. A row of all `−∞` means the
/// meaning has nothing it can say.
fn softmax_rows(log_weights: Array2<f64>, game: &ReferenceGame) -> Result<Speaker> {
    let (k_m, k_u) = log_weights.dim();
    let mut matrix = Array2::zeros((k_m, k_u));
    for (m, row) in log_weights.rows().into_iter().enumerate() {
        let row_max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if row_max == f64::NEG_INFINITY {
            return Err(Error::MeaningUnreachable(game.meanings()[m].clone()));
        }
        let mut total = 0.0;
        for (u, &w) in row.iter().enumerate() {
            let e = if w == f64::NEG_INFINITY {
                0.0
            } else {
                (w - row_max).exp()
            };
            matrix[[m, u]] = e;
            total += e;
        }
        for u in 0..k_u {
            matrix[[m, u]] /= total;
        }
    }
    Speaker::from_matrix(matrix)
}

/// One soft-max speaker update against `listener`:
/// `S(u|m) ∝ exp(α·(log L(m|u) − C(m, u)))` over the utterances the
/// listener can decode (`L(m|u) > 0`); all other cells are zero.
pub fn rsa_speaker_step(listener: &Listener, game: &ReferenceGame, alpha: f64) -> Result<Speaker> {
    let alpha = finite_alpha(alpha)?;
    let (k_m, k_u) = (game.k_m(), game.k_u());
    if listener.matrix().dim() != (k_m, k_u) {
        return Err(Error::DimensionMismatch(format!(
            "listener is {:?} for a {k_m}x{k_u} game",
            listener.matrix().dim()
        )));
    }
    let log_weights = Array2::from_shape_fn((k_m, k_u), |(m, u)| {
        let l = listener.prob(m, u);
        if l > 0.0 {
            alpha * (l.ln() - game.cost().value(m, u))
        } else {
            f64::NEG_INFINITY
        }
    });
    softmax_rows(log_weights, game)
}

/// One marginal-reweighted speaker update:
/// `S_t(u|m) ∝ S_{t−1}(u)·exp(α·(log L(m|u) − C(m, u)))`, where
/// `S_{t−1}(u)` is the previous speaker's utterance marginal. Returns the
/// new speaker and its own marginal `Σ_m P(m)·S_t(u|m)`.
///
/// Utterances with zero marginal stay at zero forever: the reweighting can
/// shrink support but never regrow it.
pub fn rd_speaker_step(
    previous_marginal: &Array1<f64>,
    listener: &Listener,
    game: &ReferenceGame,
    alpha: f64,
) -> Result<(Speaker, Array1<f64>)> {
    let alpha = finite_alpha(alpha)?;
    let (k_m, k_u) = (game.k_m(), game.k_u());
    if previous_marginal.len() != k_u {
        return Err(Error::DimensionMismatch(format!(
            "marginal has {} entries for {k_u} utterances",
            previous_marginal.len()
        )));
    }
    if previous_marginal.iter().any(|&q| !q.is_finite() || q < 0.0)
        || (previous_marginal.sum() - 1.0).abs() > 1e-9
    {
        return Err(Error::BadParameter(
            "previous marginal is not a distribution".into(),
        ));
    }
    if listener.matrix().dim() != (k_m, k_u) {
        return Err(Error::DimensionMismatch(format!(
            "listener is {:?} for a {k_m}x{k_u} game",
            listener.matrix().dim()
        )));
    }
    let log_weights = Array2::from_shape_fn((k_m, k_u), |(m, u)| {
        let l = listener.prob(m, u);
        let q = previous_marginal[u];
        if l > 0.0 && q > 0.0 {
            q.ln() + alpha * (l.ln() - game.cost().value(m, u))
        } else {
            f64::NEG_INFINITY
        }
    });
    let speaker = softmax_rows(log_weights, game)?;
    let marginal = marginal_utterance_distribution(&speaker, game.prior().view())?;
    Ok((speaker, marginal))
}

fn bayes_with_fallback(speaker: &Speaker, game: &ReferenceGame) -> (Listener, Vec<usize>) {
    let (k_m, k_u) = (game.k_m(), game.k_u());
    let mut matrix = Array2::zeros((k_m, k_u));
    let mut fallback = Vec::new();
    let mut literal: Option<Listener> = None;
    for u in 0..k_u {
        let weighted: Vec<f64> = (0..k_m)
            .map(|m| game.prior()[m] * speaker.prob(m, u))
            .collect();
        let total: f64 = weighted.iter().sum();
        if total > 0.0 {
            for m in 0..k_m {
                matrix[[m, u]] = weighted[m] / total;
            }
        } else {
            let l0 = literal.get_or_insert_with(|| literal_listener(game));
            for m in 0..k_m {
                matrix[[m, u]] = l0.prob(m, u);
            }
            fallback.push(u);
        }
    }
    let listener =
        Listener::from_matrix(matrix).expect("columns are normalized by construction");
    (listener, fallback)
}

/// One Bayes inversion of `speaker` under the game prior. Utterances the
/// speaker never produces have no posterior; their columns are filled with
/// the literal listener so off-path utterances are read literally.
pub fn bayes_listener_step(speaker: &Speaker, game: &ReferenceGame) -> Listener {
    bayes_with_fallback(speaker, game).0
}

fn check_finite(report: &ObjectiveReport, depth: usize) -> Result<()> {
    let fields = [
        ("h_u_given_m", report.h_u_given_m, false),
        ("h_u", report.h_u, false),
        ("mutual_info", report.mutual_info, false),
        ("expected_utility", report.expected_utility, true),
        ("g_value", report.g_value, true),
        ("f_value", report.f_value, true),
    ];
    for (name, value, infinity_ok) in fields {
        if value.is_nan() || (!infinity_ok && !value.is_finite()) {
            return Err(Error::NonFinite {
                depth,
                what: format!("{name} = {value}"),
            });
        }
    }
    Ok(())
}

/// Runs the alternating recursion from the literal listener until successive
/// depths agree within `tolerance` in sup norm (checked on speaker and
/// listener jointly) or `max_depth` is reached.
///
/// The returned trajectory keeps every depth, including the confirming one:
/// convergence at depth `t` means the depth-`t+1` record equals the
/// depth-`t` record within tolerance, and both are present.
pub fn iterate(
    game: &ReferenceGame,
    alpha: f64,
    mode: Mode,
    max_depth: usize,
    tolerance: f64,
) -> Result<Trajectory> {
    finite_alpha(alpha)?;
    if max_depth == 0 {
        return Err(Error::BadParameter("max_depth must be at least 1".into()));
    }
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(Error::BadParameter(format!(
            "tolerance must be positive and finite, got {tolerance}"
        )));
    }

    let l0 = literal_listener(game);
    let mut records = vec![IterationRecord {
        depth: 0,
        speaker: None,
        listener: l0.clone(),
        metrics_after_speaker: None,
        metrics_after_listener: None,
        literal_fallback_utterances: Vec::new(),
    }];

    let mut rd_marginal_history = Vec::new();
    let mut marginal = Array1::from_elem(game.k_u(), 1.0 / game.k_u() as f64);
    if mode == Mode::RdRsa {
        rd_marginal_history.push(marginal.clone());
    }

    let mut previous_listener = l0;
    let mut previous_speaker: Option<Speaker> = None;
    let mut converged = false;
    let mut convergence_depth = None;

    for depth in 1..=max_depth {
        let speaker = match mode {
            Mode::Rsa => rsa_speaker_step(&previous_listener, game, alpha)?,
            Mode::RdRsa => {
                let (speaker, new_marginal) =
                    rd_speaker_step(&marginal, &previous_listener, game, alpha)?;
                marginal = new_marginal;
                rd_marginal_history.push(marginal.clone());
                speaker
            }
        };
        let after_speaker = ObjectiveReport::compute(
            &speaker,
            &previous_listener,
            game.prior().view(),
            game.cost(),
            alpha,
        )?;
        check_finite(&after_speaker, depth)?;

        let (listener, fallback) = bayes_with_fallback(&speaker, game);
        let after_listener = ObjectiveReport::compute(
            &speaker,
            &listener,
            game.prior().view(),
            game.cost(),
            alpha,
        )?;
        check_finite(&after_listener, depth)?;

        records.push(IterationRecord {
            depth,
            speaker: Some(speaker.clone()),
            listener: listener.clone(),
            metrics_after_speaker: Some(after_speaker),
            metrics_after_listener: Some(after_listener),
            literal_fallback_utterances: fallback,
        });

        if let Some(prev) = &previous_speaker {
            let step = sup_diff(speaker.matrix(), prev.matrix())
                .max(sup_diff(listener.matrix(), previous_listener.matrix()));
            if step < tolerance {
                converged = true;
                convergence_depth = Some(depth - 1);
                break;
            }
        }
        previous_speaker = Some(speaker);
        previous_listener = listener;
    }

    Ok(Trajectory {
        game: game.clone(),
        alpha,
        mode,
        records,
        converged,
        convergence_depth,
        rd_marginal_history,
    })
}
