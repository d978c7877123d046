//! Information-theoretic functionals of a speaker/listener pair.
//!
//! All quantities are in nats and use the convention `0·log 0 = 0`. The two
//! central functionals are the gain
//!
//! ```text
//! G = H(U|M) + α·E[V]        (weakly increased by each half-step of Mode::Rsa)
//! ```
//!
//! and the free energy
//!
//! ```text
//! F = I(M;U) − α·E[V]        (weakly decreased by each half-step of Mode::RdRsa)
//! ```
//!
//! where `V(m, u) = log L(m|u) − C(u)` so that `E[V]` is the speaker-weighted
//! expected listener log-accuracy minus expected cost. The two are linked by
//! `F = H(U) − G`, which [`ObjectiveReport::compute`] checks on every call.

use ndarray::{Array1, ArrayView1};

use crate::error::{Error, Result};
use crate::game::{Cost, Listener, Speaker};

/// Negative values of provably non-negative quantities are zeroed up to this
/// magnitude and treated as internal errors beyond it.
const ROUNDING_TOL: f64 = 1e-12;

/// How far `f_value` may drift from `h_u − g_value` before the report is
/// rejected as inconsistent.
const IDENTITY_TOL: f64 = 1e-10;

fn check_dims(speaker: &Speaker, prior: ArrayView1<f64>) -> Result<()> {
    let (k_m, _) = speaker.matrix().dim();
    if prior.len() != k_m {
        return Err(Error::DimensionMismatch(format!(
            "prior has {} entries for a speaker with {k_m} rows",
            prior.len()
        )));
    }
    Ok(())
}

fn clamp_nonneg(x: f64, what: &str) -> Result<f64> {
    if x >= 0.0 {
        Ok(x)
    } else if x >= -ROUNDING_TOL {
        Ok(0.0)
    } else {
        Err(Error::Internal(format!("{what} came out {x} < 0")))
    }
}

/// Shannon entropy of a distribution, in nats.
pub fn entropy(dist: ArrayView1<f64>) -> f64 {
    -dist
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum::<f64>()
}

/// Conditional entropy `H(U|M)` of the speaker under the meaning prior.
pub fn conditional_entropy(speaker: &Speaker, prior: ArrayView1<f64>) -> Result<f64> {
    check_dims(speaker, prior)?;
    let mut h = 0.0;
    for (m, row) in speaker.matrix().rows().into_iter().enumerate() {
        let p = prior[m];
        if p == 0.0 {
            continue;
        }
        for &s in row.iter() {
            if s > 0.0 {
                h -= p * s * s.ln();
            }
        }
    }
    clamp_nonneg(h, "conditional entropy")
}

/// The utterance marginal `S(u) = Σ_m P(m)·S(u|m)` induced by the speaker.
pub fn marginal_utterance_distribution(
    speaker: &Speaker,
    prior: ArrayView1<f64>,
) -> Result<Array1<f64>> {
    check_dims(speaker, prior)?;
    let k_u = speaker.matrix().dim().1;
    let mut marginal = Array1::zeros(k_u);
    for (m, row) in speaker.matrix().rows().into_iter().enumerate() {
        let p = prior[m];
        for (u, &s) in row.iter().enumerate() {
            marginal[u] += p * s;
        }
    }
    Ok(marginal)
}

/// Mutual information `I(M;U) = H(U) − H(U|M)` of the joint distribution
/// `P(m)·S(u|m)`, clamped to zero when rounding drives it slightly negative.
pub fn mutual_information(speaker: &Speaker, prior: ArrayView1<f64>) -> Result<f64> {
    let marginal = marginal_utterance_distribution(speaker, prior)?;
    let i = entropy(marginal.view()) - conditional_entropy(speaker, prior)?;
    clamp_nonneg(i, "mutual information")
}

/// Speaker-weighted expected utility `E[log L(m|u) − C(u)]`.
///
/// Returns `f64::NEG_INFINITY` when the speaker puts positive mass on a cell
/// where the listener is exactly zero; that sentinel means "the speaker
/// communicates unrecoverable meanings", not an arithmetic fault.
pub fn expected_utility(
    speaker: &Speaker,
    listener: &Listener,
    prior: ArrayView1<f64>,
    cost: &Cost,
) -> Result<f64> {
    check_dims(speaker, prior)?;
    if speaker.matrix().dim() != listener.matrix().dim() {
        return Err(Error::DimensionMismatch(format!(
            "speaker is {:?} but listener is {:?}",
            speaker.matrix().dim(),
            listener.matrix().dim()
        )));
    }
    let mut total = 0.0;
    for ((m, u), &s) in speaker.matrix().indexed_iter() {
        let mass = prior[m] * s;
        if mass == 0.0 {
            continue;
        }
        let l = listener.prob(m, u);
        if l <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        total += mass * (l.ln() - cost.value(m, u));
    }
    Ok(total)
}

/// The gain `G = H(U|M) + α·E[V]`; `NEG_INFINITY` when the expected utility
/// is (unless `α = 0`, where the utility term vanishes exactly).
pub fn g_objective(
    speaker: &Speaker,
    listener: &Listener,
    prior: ArrayView1<f64>,
    cost: &Cost,
    alpha: f64,
) -> Result<f64> {
    let h = conditional_entropy(speaker, prior)?;
    if alpha == 0.0 {
        return Ok(h);
    }
    let v = expected_utility(speaker, listener, prior, cost)?;
    Ok(if v == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else {
        h + alpha * v
    })
}

/// The free energy `F = I(M;U) − α·E[V]`; `INFINITY` when the expected
/// utility is negative infinite (unless `α = 0`).
pub fn f_objective(
    speaker: &Speaker,
    listener: &Listener,
    prior: ArrayView1<f64>,
    cost: &Cost,
    alpha: f64,
) -> Result<f64> {
    let i = mutual_information(speaker, prior)?;
    if alpha == 0.0 {
        return Ok(i);
    }
    let v = expected_utility(speaker, listener, prior, cost)?;
    Ok(if v == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        i - alpha * v
    })
}

/// Every functional of one speaker/listener pair, evaluated together.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct ObjectiveReport {
    pub alpha: f64,
    /// Conditional entropy `H(U|M)` in nats.
    pub h_u_given_m: f64,
    /// Marginal utterance entropy `H(U)` in nats.
    pub h_u: f64,
    /// Mutual information `I(M;U)` in nats.
    pub mutual_info: f64,
    /// Expected utility `E[log L(m|u) − C(u)]`; may be `−∞`.
    pub expected_utility: f64,
    /// Gain `H(U|M) + α·E[V]`; may be `−∞`.
    pub g_value: f64,
    /// Free energy `I(M;U) − α·E[V]`; may be `+∞`.
    pub f_value: f64,
}

impl ObjectiveReport {
    /// Evaluates all functionals at once and cross-checks the identity
    /// `F = H(U) − G` (both sides infinite counts as holding).
    pub fn compute(
        speaker: &Speaker,
        listener: &Listener,
        prior: ArrayView1<f64>,
        cost: &Cost,
        alpha: f64,
    ) -> Result<Self> {
        let h_u_given_m = conditional_entropy(speaker, prior)?;
        let marginal = marginal_utterance_distribution(speaker, prior)?;
        let h_u = entropy(marginal.view());
        let mutual_info = clamp_nonneg(h_u - h_u_given_m, "mutual information")?;
        let expected_utility = expected_utility(speaker, listener, prior, cost)?;
        let (g_value, f_value) = if alpha == 0.0 {
            (h_u_given_m, mutual_info)
        } else if expected_utility == f64::NEG_INFINITY {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (
                h_u_given_m + alpha * expected_utility,
                mutual_info - alpha * expected_utility,
            )
        };
        let report = ObjectiveReport {
            alpha,
            h_u_given_m,
            h_u,
            mutual_info,
            expected_utility,
            g_value,
            f_value,
        };
        let identity_gap = if g_value == f64::NEG_INFINITY {
            if f_value == f64::INFINITY {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (f_value - (h_u - g_value)).abs()
        };
        if !(identity_gap <= IDENTITY_TOL) {
            return Err(Error::Internal(format!(
                "F = H(U) − G violated by {identity_gap}"
            )));
        }
        Ok(report)
    }
}
