//! Speaker/listener dynamics for discrete reference games.
//!
//! A [`ReferenceGame`](game::ReferenceGame) couples a set of meanings with a
//! set of utterances through a graded lexicon, a prior over meanings, and an
//! utterance cost. Two families of alternating speaker/listener updates are
//! provided by [`dynamics::iterate`]:
//!
//! * [`Mode::Rsa`](dynamics::Mode::Rsa) — the speaker soft-maximizes listener
//!   log-accuracy minus cost; each half-step weakly increases the gain
//!   functional `G = H(U|M) + α·E[V]`.
//! * [`Mode::RdRsa`](dynamics::Mode::RdRsa) — the speaker reweights its own
//!   evolving utterance marginal instead of paying a fixed cost; each
//!   half-step weakly decreases the free-energy functional
//!   `F = I(M;U) − α·E[V]`.
//!
//! All entropies and informations are reported in nats.
//!
//! ```
//! use rdrsa::dynamics::{iterate, Mode};
//! use rdrsa::game::ReferenceGame;
//!
//! let game = ReferenceGame::new(
//!     vec!["moustache".into(), "glasses".into()],
//!     vec!["moustache".into(), "glasses".into()],
//!     None,
//!     vec![vec![1.0, 0.0], vec![1.0, 1.0]],
//!     None,
//! )
//! .unwrap();
//! let traj = iterate(&game, 2.0, Mode::Rsa, 1000, 1e-10).unwrap();
//! assert!(traj.converged);
//! ```

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod empirical;
mod error;
pub mod export;
pub mod game;
pub mod objectives;

pub use error::{Error, GameViolation, Result};
