//! Empirical listener estimation and (α, depth) model fitting.
//!
//! Human reference-game responses arrive as per-(utterance, meaning) counts;
//! normalizing each utterance's column gives an empirical listener directly
//! comparable to model listeners. [`fit_sweep`] then searches an `α` grid
//! and every recorded recursion depth for the listener that correlates best
//! with the data, with depth 0 (the literal listener) always included as
//! the baseline.

use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Deserialize;

use crate::dynamics::{iterate, literal_listener, Mode, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::game::{Listener, ReferenceGame};

/// Response counts `N(m, u)` aligned with a game's label sets.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCounts {
    meanings: Vec<String>,
    utterances: Vec<String>,
    counts: Array2<u64>,
}

#[derive(Deserialize)]
struct CountRow {
    utterance: String,
    meaning: String,
    count: u64,
}

impl ResponseCounts {
    /// Wraps a counts matrix in the game's meaning × utterance order.
    pub fn from_matrix(game: &ReferenceGame, counts: Array2<u64>) -> Result<Self> {
        if counts.dim() != (game.k_m(), game.k_u()) {
            return Err(Error::DimensionMismatch(format!(
                "counts are {:?} for a {}x{} game",
                counts.dim(),
                game.k_m(),
                game.k_u()
            )));
        }
        Ok(ResponseCounts {
            meanings: game.meanings().to_vec(),
            utterances: game.utterances().to_vec(),
            counts,
        })
    }

    /// Reads a `utterance,meaning,count` CSV, resolving labels against the
    /// game. Pairs absent from the file count as zero; repeated pairs
    /// accumulate. Labels the game does not know are an error, reported
    /// all at once.
    pub fn from_csv_path<P: AsRef<Path>>(path: P, game: &ReferenceGame) -> Result<Self> {
        let path = path.as_ref();
        let display = path.display().to_string();
        let mut reader = csv::Reader::from_path(path).map_err(|e| {
            if matches!(e.kind(), csv::ErrorKind::Io(_)) {
                match e.into_kind() {
                    csv::ErrorKind::Io(io) => Error::Io(std::io::Error::new(
                        io.kind(),
                        format!("{display}: {io}"),
                    )),
                    _ => unreachable!("kind checked above"),
                }
            } else {
                Error::Format {
                    path: display.clone(),
                    message: e.to_string(),
                }
            }
        })?;

        let meaning_index: std::collections::HashMap<&str, usize> = game
            .meanings()
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let utterance_index: std::collections::HashMap<&str, usize> = game
            .utterances()
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();

        let mut counts = Array2::zeros((game.k_m(), game.k_u()));
        let mut unknown = Vec::new();
        for row in reader.deserialize::<CountRow>() {
            let row = row.map_err(|e| Error::Format {
                path: display.clone(),
                message: e.to_string(),
            })?;
            match (
                meaning_index.get(row.meaning.as_str()),
                utterance_index.get(row.utterance.as_str()),
            ) {
                (Some(&m), Some(&u)) => counts[[m, u]] += row.count,
                _ => {
                    if !meaning_index.contains_key(row.meaning.as_str()) {
                        unknown.push(format!("meaning `{}`", row.meaning));
                    }
                    if !utterance_index.contains_key(row.utterance.as_str()) {
                        unknown.push(format!("utterance `{}`", row.utterance));
                    }
                }
            }
        }
        if !unknown.is_empty() {
            unknown.sort();
            unknown.dedup();
            return Err(Error::Format {
                path: display,
                message: format!("labels not in the game: {}", unknown.join(", ")),
            });
        }
        Self::from_matrix(game, counts)
    }

    pub fn counts(&self) -> &Array2<u64> {
        &self.counts
    }

    pub fn meanings(&self) -> &[String] {
        &self.meanings
    }

    pub fn utterances(&self) -> &[String] {
        &self.utterances
    }
}

/// Column-normalizes counts into an empirical listener
/// `L̂(m|u) = N(m,u) / Σ_m N(m,u)`.
pub fn empirical_listener(counts: &ResponseCounts) -> Result<Listener> {
    let (k_m, k_u) = counts.counts.dim();
    let mut matrix = Array2::zeros((k_m, k_u));
    for u in 0..k_u {
        let total: u64 = (0..k_m).map(|m| counts.counts[[m, u]]).sum();
        if total == 0 {
            return Err(Error::EmptyColumn(counts.utterances[u].clone()));
        }
        for m in 0..k_m {
            matrix[[m, u]] = counts.counts[[m, u]] as f64 / total as f64;
        }
    }
    Listener::from_matrix(matrix)
}

/// Pearson correlation of two equal-length samples.
///
/// `names` labels the sides in the [`Error::ZeroVariance`] diagnostic.
pub fn pearson(xs: &[f64], ys: &[f64], names: (&'static str, &'static str)) -> Result<f64> {
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(Error::DimensionMismatch(format!(
            "correlating {} against {} values",
            xs.len(),
            ys.len()
        )));
    }
    let constant = |v: &[f64]| {
        let first = v[0];
        v.iter().all(|&x| x == first)
    };
    if constant(xs) {
        return Err(Error::ZeroVariance(names.0));
    }
    if constant(ys) {
        return Err(Error::ZeroVariance(names.1));
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut covariance = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        covariance += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    Ok(covariance / (var_x.sqrt() * var_y.sqrt()))
}

/// Pearson correlation between two listener matrices over all cells,
/// flattened in row-major order — lexicon-zero cells included, since what
/// is never chosen is part of the behavioral signal.
pub fn pearson_correlation(model: &Listener, empirical: &Listener) -> Result<f64> {
    if model.matrix().dim() != empirical.matrix().dim() {
        return Err(Error::DimensionMismatch(format!(
            "model listener is {:?} but empirical is {:?}",
            model.matrix().dim(),
            empirical.matrix().dim()
        )));
    }
    let xs: Vec<f64> = model.matrix().iter().cloned().collect();
    let ys: Vec<f64> = empirical.matrix().iter().cloned().collect();
    pearson(&xs, &ys, ("model", "empirical"))
}

/// One grid entry of a fit sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitCell {
    pub alpha: f64,
    pub depth: usize,
    pub rho: f64,
}

/// The best (α, depth) for one mode, with the full grid behind it.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub mode: Mode,
    pub best_alpha: f64,
    pub best_depth: usize,
    /// ρ at the best grid entry.
    pub correlation: f64,
    pub grid: Vec<FitCell>,
}

/// Sweeps every `α` in the grid, evaluating ρ between the empirical
/// listener and the model listener at every recorded depth from 0 (the
/// literal listener) through `max_depth` (trajectories stop recording once
/// converged, so converged grids end early at identical listeners).
///
/// Ties in ρ are broken toward the smaller depth, then the smaller `α`, so
/// the most parsimonious fit wins deterministically.
pub fn fit_sweep(
    game: &ReferenceGame,
    counts: &ResponseCounts,
    alpha_grid: &[f64],
    max_depth: usize,
    mode: Mode,
) -> Result<FitResult> {
    if alpha_grid.is_empty() {
        return Err(Error::BadParameter("alpha grid is empty".into()));
    }
    let empirical = empirical_listener(counts)?;

    let per_alpha: Vec<Vec<FitCell>> = alpha_grid
        .par_iter()
        .map(|&alpha| {
            let mut cells = Vec::new();
            if max_depth == 0 {
                let rho = pearson_correlation(&literal_listener(game), &empirical)?;
                cells.push(FitCell {
                    alpha,
                    depth: 0,
                    rho,
                });
                return Ok(cells);
            }
            let traj = iterate(game, alpha, mode, max_depth, DEFAULT_TOLERANCE)?;
            for record in &traj.records {
                let rho = pearson_correlation(&record.listener, &empirical)?;
                cells.push(FitCell {
                    alpha,
                    depth: record.depth,
                    rho,
                });
            }
            Ok(cells)
        })
        .collect::<Result<_>>()?;

    let grid: Vec<FitCell> = per_alpha.into_iter().flatten().collect();
    let best = grid
        .iter()
        .copied()
        .reduce(|best, cell| {
            let wins = cell.rho > best.rho
                || (cell.rho == best.rho
                    && (cell.depth, cell.alpha) < (best.depth, best.alpha));
            if wins {
                cell
            } else {
                best
            }
        })
        .expect("grid is non-empty for a non-empty alpha grid");

    Ok(FitResult {
        mode,
        best_alpha: best.alpha,
        best_depth: best.depth,
        correlation: best.rho,
        grid,
    })
}
