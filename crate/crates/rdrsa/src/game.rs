//! Reference games and the stochastic maps defined over them.
//!
//! A game couples `K_m` meanings with `K_u` utterances through a lexicon of
//! applicability weights in `[0, 1]`, a prior over meanings, and a
//! non-negative utterance cost. [`Speaker`] and [`Listener`] wrap
//! `K_m × K_u` matrices with the complementary normalization conventions:
//! speaker rows are distributions over utterances, listener columns are
//! distributions over meanings.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, GameViolation, Result};

/// Tolerance for "sums to one" checks on priors and stochastic matrices.
const NORMALIZATION_TOL: f64 = 1e-9;

/// Utterance production cost, either one value per utterance or one value
/// per (meaning, utterance) pair.
#[derive(Debug, Clone, PartialEq)]
pub enum Cost {
    PerUtterance(Array1<f64>),
    PerPair(Array2<f64>),
}

impl Cost {
    /// The all-zero per-utterance cost.
    pub fn zero(k_u: usize) -> Self {
        Cost::PerUtterance(Array1::zeros(k_u))
    }

    /// Cost of producing utterance `u` for meaning `m`.
    pub fn value(&self, m: usize, u: usize) -> f64 {
        match self {
            Cost::PerUtterance(c) => c[u],
            Cost::PerPair(c) => c[[m, u]],
        }
    }

    /// The per-utterance cost vector, if this cost has that form.
    pub fn per_utterance(&self) -> Option<&Array1<f64>> {
        match self {
            Cost::PerUtterance(c) => Some(c),
            Cost::PerPair(_) => None,
        }
    }

    /// Whether every cost entry equals every other (always false for
    /// per-pair costs with any variation across pairs).
    pub fn is_constant(&self) -> bool {
        let first = self.value(0, 0);
        match self {
            Cost::PerUtterance(c) => c.iter().all(|&x| x == first),
            Cost::PerPair(c) => c.iter().all(|&x| x == first),
        }
    }

    /// Whether every cost entry is exactly zero.
    pub fn is_zero(&self) -> bool {
        match self {
            Cost::PerUtterance(c) => c.iter().all(|&x| x == 0.0),
            Cost::PerPair(c) => c.iter().all(|&x| x == 0.0),
        }
    }

    fn check(&self, k_m: usize, k_u: usize) -> Result<()> {
        match self {
            Cost::PerUtterance(c) if c.len() != k_u => Err(Error::DimensionMismatch(format!(
                "cost vector has {} entries for {k_u} utterances",
                c.len()
            ))),
            Cost::PerPair(c) if c.dim() != (k_m, k_u) => Err(Error::DimensionMismatch(format!(
                "cost matrix is {}x{} for a {k_m}x{k_u} game",
                c.dim().0,
                c.dim().1
            ))),
            _ => Ok(()),
        }
    }
}

/// A discrete reference game.
///
/// Construction validates every structural invariant and fails with the full
/// list of violations, so a `ReferenceGame` value is always well-formed.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceGame {
    meanings: Vec<String>,
    utterances: Vec<String>,
    prior: Array1<f64>,
    lexicon: Array2<f64>,
    cost: Cost,
}

impl ReferenceGame {
    /// Builds a game from labels, an optional prior (uniform when `None`),
    /// a lexicon given row-by-row (one row per meaning), and an optional
    /// cost (zero when `None`).
    pub fn new(
        meanings: Vec<String>,
        utterances: Vec<String>,
        prior: Option<Vec<f64>>,
        lexicon: Vec<Vec<f64>>,
        cost: Option<Cost>,
    ) -> Result<Self> {
        let k_m = meanings.len();
        let k_u = utterances.len();
        if k_m == 0 || k_u == 0 {
            return Err(Error::DimensionMismatch(
                "a game needs at least one meaning and one utterance".into(),
            ));
        }
        check_unique("meaning", &meanings)?;
        check_unique("utterance", &utterances)?;

        if lexicon.len() != k_m {
            return Err(Error::DimensionMismatch(format!(
                "lexicon has {} rows for {k_m} meanings",
                lexicon.len()
            )));
        }
        let mut flat = Vec::with_capacity(k_m * k_u);
        for (m, row) in lexicon.iter().enumerate() {
            if row.len() != k_u {
                return Err(Error::DimensionMismatch(format!(
                    "lexicon row {m} has {} entries for {k_u} utterances",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        let lexicon = Array2::from_shape_vec((k_m, k_u), flat)
            .expect("shape checked above");

        let prior = match prior {
            Some(p) => {
                if p.len() != k_m {
                    return Err(Error::DimensionMismatch(format!(
                        "prior has {} entries for {k_m} meanings",
                        p.len()
                    )));
                }
                Array1::from_vec(p)
            }
            None => uniform(k_m),
        };
        let cost = cost.unwrap_or_else(|| Cost::zero(k_u));
        cost.check(k_m, k_u)?;

        let game = ReferenceGame {
            meanings,
            utterances,
            prior,
            lexicon,
            cost,
        };
        validate_game(game)
    }

    pub fn meanings(&self) -> &[String] {
        &self.meanings
    }

    pub fn utterances(&self) -> &[String] {
        &self.utterances
    }

    pub fn prior(&self) -> &Array1<f64> {
        &self.prior
    }

    pub fn lexicon(&self) -> &Array2<f64> {
        &self.lexicon
    }

    pub fn cost(&self) -> &Cost {
        &self.cost
    }

    /// Number of meanings.
    pub fn k_m(&self) -> usize {
        self.meanings.len()
    }

    /// Number of utterances.
    pub fn k_u(&self) -> usize {
        self.utterances.len()
    }

    /// Whether the prior is uniform to within normalization tolerance.
    pub fn has_uniform_prior(&self) -> bool {
        let u = 1.0 / self.k_m() as f64;
        self.prior.iter().all(|&p| (p - u).abs() <= NORMALIZATION_TOL)
    }
}

fn check_unique(kind: &'static str, labels: &[String]) -> Result<()> {
    let mut seen = std::collections::HashSet::new();
    for label in labels {
        if !seen.insert(label.as_str()) {
            return Err(Error::DuplicateLabel {
                kind,
                label: label.clone(),
            });
        }
    }
    Ok(())
}

fn uniform(k: usize) -> Array1<f64> {
    Array1::from_elem(k, 1.0 / k as f64)
}

/// Checks every structural invariant of `game`, returning it unchanged when
/// all hold and the full violation list otherwise.
///
/// Validation is idempotent: a game that passes once passes again.
pub fn validate_game(game: ReferenceGame) -> Result<ReferenceGame> {
    let mut violations = Vec::new();

    for (m, row) in game.lexicon.rows().into_iter().enumerate() {
        if row.iter().all(|&x| x == 0.0) {
            violations.push(GameViolation::EmptyMeaningRow {
                meaning: game.meanings[m].clone(),
            });
        }
    }
    for (u, col) in game.lexicon.columns().into_iter().enumerate() {
        if col.iter().all(|&x| x == 0.0) {
            violations.push(GameViolation::EmptyUtteranceColumn {
                utterance: game.utterances[u].clone(),
            });
        }
    }
    for ((m, u), &x) in game.lexicon.indexed_iter() {
        if !x.is_finite() || !(0.0..=1.0).contains(&x) {
            violations.push(GameViolation::OutOfRangeLexicon {
                detail: format!(
                    "entry ({}, {}) is {x}, outside [0, 1]",
                    game.meanings[m], game.utterances[u]
                ),
            });
        }
    }

    for (m, &p) in game.prior.iter().enumerate() {
        if !p.is_finite() || p < 0.0 {
            violations.push(GameViolation::BadPrior {
                detail: format!("P({}) = {p}", game.meanings[m]),
            });
        }
    }
    let total: f64 = game.prior.sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        violations.push(GameViolation::BadPrior {
            detail: format!("entries sum to {total}, not 1"),
        });
    }

    let bad_cost = |x: f64| !x.is_finite() || x < 0.0;
    match &game.cost {
        Cost::PerUtterance(c) => {
            for (u, &x) in c.iter().enumerate() {
                if bad_cost(x) {
                    violations.push(GameViolation::NegativeCost {
                        detail: format!("C({}) = {x}", game.utterances[u]),
                    });
                }
            }
        }
        Cost::PerPair(c) => {
            for ((m, u), &x) in c.indexed_iter() {
                if bad_cost(x) {
                    violations.push(GameViolation::NegativeCost {
                        detail: format!("C({}, {}) = {x}", game.meanings[m], game.utterances[u]),
                    });
                }
            }
        }
    }

    if violations.is_empty() {
        Ok(game)
    } else {
        Err(Error::InvalidGame(violations))
    }
}

/// Returns a copy of `game` whose exact lexicon zeros are replaced by
/// `epsilon`, leaving all positive entries untouched.
///
/// Softening removes structural zeros so that every utterance is at least
/// marginally applicable to every meaning. `epsilon` must lie strictly
/// inside `(0, 1)`.
pub fn soften_lexicon(game: &ReferenceGame, epsilon: f64) -> Result<ReferenceGame> {
    if !epsilon.is_finite() || epsilon <= 0.0 || epsilon >= 1.0 {
        return Err(Error::BadParameter(format!(
            "soften epsilon must lie in (0, 1), got {epsilon}"
        )));
    }
    let mut softened = game.clone();
    softened.lexicon.mapv_inplace(|x| if x == 0.0 { epsilon } else { x });
    validate_game(softened)
}

/// A conditional distribution over utterances for each meaning: a
/// `K_m × K_u` matrix with rows summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Speaker {
    matrix: Array2<f64>,
}

/// A conditional distribution over meanings for each utterance: a
/// `K_m × K_u` matrix with columns summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct Listener {
    matrix: Array2<f64>,
}

impl Speaker {
    /// Wraps a row-stochastic matrix, rejecting negative entries and rows
    /// that do not sum to one.
    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self> {
        for (m, row) in matrix.rows().into_iter().enumerate() {
            if row.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return Err(Error::BadParameter(format!(
                    "speaker row {m} has a negative or non-finite entry"
                )));
            }
            let total: f64 = row.sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::BadParameter(format!(
                    "speaker row {m} sums to {total}, not 1"
                )));
            }
        }
        Ok(Speaker { matrix })
    }

    /// The deterministic speaker sending meaning `m` to `assignment[m]`.
    pub fn deterministic(assignment: &[usize], k_u: usize) -> Self {
        let mut matrix = Array2::zeros((assignment.len(), k_u));
        for (m, &u) in assignment.iter().enumerate() {
            matrix[[m, u]] = 1.0;
        }
        Speaker { matrix }
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Probability of producing utterance `u` for meaning `m`.
    pub fn prob(&self, m: usize, u: usize) -> f64 {
        self.matrix[[m, u]]
    }

    /// The matrix as nested row vectors, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.matrix.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

impl Listener {
    /// Wraps a column-stochastic matrix, rejecting negative entries and
    /// columns that do not sum to one.
    pub fn from_matrix(matrix: Array2<f64>) -> Result<Self> {
        for (u, col) in matrix.columns().into_iter().enumerate() {
            if col.iter().any(|&x| !x.is_finite() || x < 0.0) {
                return Err(Error::BadParameter(format!(
                    "listener column {u} has a negative or non-finite entry"
                )));
            }
            let total: f64 = col.sum();
            if (total - 1.0).abs() > NORMALIZATION_TOL {
                return Err(Error::BadParameter(format!(
                    "listener column {u} sums to {total}, not 1"
                )));
            }
        }
        Ok(Listener { matrix })
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    /// Probability of recovering meaning `m` from utterance `u`.
    pub fn prob(&self, m: usize, u: usize) -> f64 {
        self.matrix[[m, u]]
    }

    /// The matrix as nested row vectors, for serialization.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.matrix.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

/// Largest absolute entry-wise difference between two matrices.
pub(crate) fn sup_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GameFile {
    meanings: Vec<String>,
    utterances: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    prior: Option<Vec<f64>>,
    lexicon: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cost: Option<CostFile>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CostFile {
    PerUtterance(Vec<f64>),
    PerPair(Vec<Vec<f64>>),
}

/// What `load_game` filled in that the file left unspecified.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoadReport {
    pub assumed_uniform_prior: bool,
    pub assumed_zero_cost: bool,
}

/// Parses a game from JSON text; `origin` names the source in errors.
pub fn parse_game(text: &str, origin: &str) -> Result<(ReferenceGame, LoadReport)> {
    let file: GameFile = serde_json::from_str(text).map_err(|e| Error::Format {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    let report = LoadReport {
        assumed_uniform_prior: file.prior.is_none(),
        assumed_zero_cost: file.cost.is_none(),
    };
    let cost = match file.cost {
        None => None,
        Some(CostFile::PerUtterance(c)) => Some(Cost::PerUtterance(Array1::from_vec(c))),
        Some(CostFile::PerPair(rows)) => {
            let k_u = rows.first().map_or(0, Vec::len);
            if rows.iter().any(|r| r.len() != k_u) {
                return Err(Error::Format {
                    path: origin.to_string(),
                    message: "cost matrix rows have unequal lengths".into(),
                });
            }
            let k_m = rows.len();
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            Some(Cost::PerPair(
                Array2::from_shape_vec((k_m, k_u), flat).expect("shape checked above"),
            ))
        }
    };
    let game = ReferenceGame::new(file.meanings, file.utterances, file.prior, file.lexicon, cost)?;
    Ok((game, report))
}

/// Loads a game from a JSON file, reporting which optional fields were
/// filled with defaults.
pub fn load_game_with_report<P: AsRef<Path>>(path: P) -> Result<(ReferenceGame, LoadReport)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })?;
    parse_game(&text, &path.display().to_string())
}

/// Loads a game from a JSON file.
pub fn load_game<P: AsRef<Path>>(path: P) -> Result<ReferenceGame> {
    load_game_with_report(path).map(|(game, _)| game)
}

/// Serializes a game to the JSON file format.
///
/// Numbers round-trip exactly: saving and reloading reproduces the same
/// game bit for bit.
pub fn game_to_json(game: &ReferenceGame) -> String {
    let file = GameFile {
        meanings: game.meanings.clone(),
        utterances: game.utterances.clone(),
        prior: Some(game.prior.to_vec()),
        lexicon: game.lexicon.rows().into_iter().map(|r| r.to_vec()).collect(),
        cost: Some(match &game.cost {
            Cost::PerUtterance(c) => CostFile::PerUtterance(c.to_vec()),
            Cost::PerPair(c) => {
                CostFile::PerPair(c.rows().into_iter().map(|r| r.to_vec()).collect())
            }
        }),
    };
    serde_json::to_string_pretty(&file).expect("game file shape always serializes")
}

/// Writes a game to a JSON file.
pub fn save_game<P: AsRef<Path>>(game: &ReferenceGame, path: P) -> Result<()> {
    std::fs::write(path, game_to_json(game) + "\n")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    fn three_by_three() -> ReferenceGame {
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

    #[test]
    fn construction_defaults_prior_and_cost() {
        let game = three_by_three();
        assert_eq!(game.k_m(), 3);
        assert_eq!(game.k_u(), 3);
        assert!(game.has_uniform_prior());
        assert!(game.cost().is_zero());
    }

    #[test]
    fn validation_collects_all_violations() {
        let err = ReferenceGame::new(
            labels(&["a", "b"]),
            labels(&["x", "y"]),
            Some(vec![0.9, 0.3]),
            vec![vec![0.0, 0.0], vec![1.5, 1.0]],
            Some(Cost::PerUtterance(Array1::from_vec(vec![-1.0, 0.0]))),
        )
        .unwrap_err();
        let Error::InvalidGame(violations) = err else {
            panic!("expected InvalidGame, got {err:?}");
        };
        assert!(violations
            .iter()
            .any(|v| matches!(v, GameViolation::EmptyMeaningRow { .. })));
        assert!(violations
            .iter()
            .any(|v| matches!(v, GameViolation::OutOfRangeLexicon { .. })));
        assert!(violations
            .iter()
            .any(|v| matches!(v, GameViolation::BadPrior { .. })));
        assert!(violations
            .iter()
            .any(|v| matches!(v, GameViolation::NegativeCost { .. })));
    }

    #[test]
    fn empty_utterance_column_is_reported() {
        let err = ReferenceGame::new(
            labels(&["a", "b"]),
            labels(&["x", "y"]),
            None,
            vec![vec![1.0, 0.0], vec![1.0, 0.0]],
            None,
        )
        .unwrap_err();
        let Error::InvalidGame(violations) = err else {
            panic!("expected InvalidGame, got {err:?}");
        };
        assert_eq!(
            violations,
            vec![GameViolation::EmptyUtteranceColumn {
                utterance: "y".into()
            }]
        );
    }

    #[test]
    fn validation_is_idempotent() {
        let game = three_by_three();
        let once = validate_game(game).unwrap();
        let twice = validate_game(once.clone()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn duplicate_labels_are_rejected() {
        let err = ReferenceGame::new(
            labels(&["a", "a"]),
            labels(&["x", "y"]),
            None,
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            None,
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateLabel { kind: "meaning", .. }));
    }

    #[test]
    fn soften_replaces_only_exact_zeros() {
        let game = three_by_three();
        let soft = soften_lexicon(&game, 0.05).unwrap();
        assert_eq!(soft.lexicon()[[0, 0]], 1.0);
        assert_eq!(soft.lexicon()[[0, 1]], 0.05);
        assert_eq!(soft.lexicon()[[0, 2]], 0.05);
        assert_eq!(soft.lexicon()[[2, 0]], 0.05);
        for &eps in &[0.0, 1.0, -0.1, f64::NAN] {
            assert!(soften_lexicon(&game, eps).is_err());
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let game = ReferenceGame::new(
            labels(&["m", "gm", "hg"]),
            labels(&["moustache", "glasses", "hat"]),
            Some(vec![0.2, 0.3, 0.5]),
            vec![
                vec![1.0, 0.1, 0.0],
                vec![0.7, 1.0, 0.0],
                vec![0.0, 1.0 / 3.0, 1.0],
            ],
            Some(Cost::PerUtterance(Array1::from_vec(vec![
                0.1,
                std::f64::consts::PI,
                0.0,
            ]))),
        )
        .unwrap();
        let json = game_to_json(&game);
        let (reloaded, report) = parse_game(&json, "round-trip").unwrap();
        assert_eq!(reloaded, game);
        assert_eq!(report, LoadReport::default());
        assert_eq!(game_to_json(&reloaded), json);
    }

    #[test]
    fn missing_prior_is_reported_as_uniform() {
        let text = r#"{
            "meanings": ["a", "b"],
            "utterances": ["x", "y"],
            "lexicon": [[1.0, 0.0], [1.0, 1.0]]
        }"#;
        let (game, report) = parse_game(text, "inline").unwrap();
        assert!(report.assumed_uniform_prior);
        assert!(report.assumed_zero_cost);
        assert_eq!(game.prior().to_vec(), vec![0.5, 0.5]);
    }

    #[test]
    fn duplicate_label_in_file_is_an_error() {
        let text = r#"{
            "meanings": ["a", "b"],
            "utterances": ["x", "x"],
            "lexicon": [[1.0, 0.0], [1.0, 1.0]]
        }"#;
        let err = parse_game(text, "inline").unwrap_err();
        assert!(matches!(
            err,
            Error::DuplicateLabel { kind: "utterance", .. }
        ));
    }

    #[test]
    fn malformed_json_reports_origin() {
        let err = parse_game("{ not json", "games/broken.json").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("games/broken.json"), "{msg}");
    }

    #[test]
    fn speaker_and_listener_reject_bad_normalization() {
        let rows = Array2::from_shape_vec((2, 2), vec![0.5, 0.5, 0.9, 0.2]).unwrap();
        assert!(Speaker::from_matrix(rows.clone()).is_err());
        let cols = Array2::from_shape_vec((2, 2), vec![0.5, 0.5, 0.5, 0.4]).unwrap();
        assert!(Listener::from_matrix(cols).is_err());
        let ok = Array2::from_shape_vec((2, 2), vec![0.5, 0.5, 0.25, 0.75]).unwrap();
        assert!(Speaker::from_matrix(ok).is_ok());
    }

    #[test]
    fn per_pair_cost_shapes_are_checked() {
        let err = ReferenceGame::new(
            labels(&["a", "b"]),
            labels(&["x", "y"]),
            None,
            vec![vec![1.0, 0.0], vec![1.0, 1.0]],
            Some(Cost::PerPair(Array2::zeros((3, 2)))),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }
}
