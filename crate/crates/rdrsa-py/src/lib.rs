//! Python bindings for the rdrsa library.
//!
//! Exposes the reference game type plus the main operations — recursion
//! trajectories, objective reports, α scans, brute-force oracles, and
//! empirical fits — returning plain Python dicts and lists so the module
//! has no dependency on numpy.

use ndarray::Array2;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use rdrsa::analysis::{self, AsymptoticReport};
use rdrsa::dynamics::{self, Mode, Trajectory, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE};
use rdrsa::empirical::{self, ResponseCounts};
use rdrsa::game::{self, Cost, Listener, ReferenceGame, Speaker};
use rdrsa::objectives::ObjectiveReport;
use rdrsa::Error;

fn to_py_err(error: Error) -> PyErr {
    match error {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_array2<T: Clone>(rows: &[Vec<T>], what: &str) -> PyResult<Array2<T>>
where
    T: Default,
{
    let k_m = rows.len();
    let k_u = rows.first().map(Vec::len).unwrap_or(0);
    if rows.iter().any(|r| r.len() != k_u) {
        return Err(PyValueError::new_err(format!("{what} rows have unequal lengths")));
    }
    let flat: Vec<T> = rows.iter().flatten().cloned().collect();
    Array2::from_shape_vec((k_m, k_u), flat)
        .map_err(|e| PyValueError::new_err(format!("{what}: {e}")))
}

fn speaker_from(rows: &[Vec<f64>]) -> PyResult<Speaker> {
    Speaker::from_matrix(to_array2(rows, "speaker")?).map_err(to_py_err)
}

fn listener_from(rows: &[Vec<f64>]) -> PyResult<Listener> {
    Listener::from_matrix(to_array2(rows, "listener")?).map_err(to_py_err)
}

fn parse_mode(mode: &str) -> PyResult<Mode> {
    mode.parse().map_err(to_py_err)
}

/// A discrete reference game: meanings, utterances, prior, lexicon, cost.
#[pyclass(module = "rdrsa_py", skip_from_py_object)]
#[derive(Clone)]
struct Game {
    inner: ReferenceGame,
}

#[pymethods]
impl Game {
    #[new]
    #[pyo3(signature = (meanings, utterances, lexicon, prior=None, cost=None))]
    fn new(
        meanings: Vec<String>,
        utterances: Vec<String>,
        lexicon: Vec<Vec<f64>>,
        prior: Option<Vec<f64>>,
        cost: Option<Vec<f64>>,
    ) -> PyResult<Self> {
        let cost = cost.map(|c| Cost::PerUtterance(c.into()));
        let inner = ReferenceGame::new(meanings, utterances, prior, lexicon, cost)
            .map_err(to_py_err)?;
        Ok(Game { inner })
    }

    /// Parses a game from its JSON file format.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let (inner, _) = game::parse_game(text, "<from_json>").map_err(to_py_err)?;
        Ok(Game { inner })
    }

    /// Serializes the game to its JSON file format (numbers round-trip
    /// bit-exactly).
    fn to_json(&self) -> String {
        game::game_to_json(&self.inner)
    }

    /// A copy with every exact lexicon zero replaced by `epsilon`.
    fn soften(&self, epsilon: f64) -> PyResult<Self> {
        let inner = game::soften_lexicon(&self.inner, epsilon).map_err(to_py_err)?;
        Ok(Game { inner })
    }

    #[getter]
    fn meanings(&self) -> Vec<String> {
        self.inner.meanings().to_vec()
    }

    #[getter]
    fn utterances(&self) -> Vec<String> {
        self.inner.utterances().to_vec()
    }

    #[getter]
    fn prior(&self) -> Vec<f64> {
        self.inner.prior().to_vec()
    }

    #[getter]
    fn lexicon(&self) -> Vec<Vec<f64>> {
        self.inner
            .lexicon()
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect()
    }

    #[getter]
    fn k_m(&self) -> usize {
        self.inner.k_m()
    }

    #[getter]
    fn k_u(&self) -> usize {
        self.inner.k_u()
    }

    fn __repr__(&self) -> String {
        format!("Game({} meanings, {} utterances)", self.inner.k_m(), self.inner.k_u())
    }
}

fn report_dict<'py>(py: Python<'py>, r: &ObjectiveReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("alpha", r.alpha)?;
    d.set_item("h_u_given_m", r.h_u_given_m)?;
    d.set_item("h_u", r.h_u)?;
    d.set_item("mutual_info", r.mutual_info)?;
    d.set_item("expected_utility", r.expected_utility)?;
    d.set_item("g_value", r.g_value)?;
    d.set_item("f_value", r.f_value)?;
    Ok(d)
}

fn trajectory_dict<'py>(py: Python<'py>, traj: &Trajectory) -> PyResult<Bound<'py, PyDict>> {
    let records = PyList::empty(py);
    for record in &traj.records {
        let d = PyDict::new(py);
        d.set_item("depth", record.depth)?;
        d.set_item("speaker", record.speaker.as_ref().map(Speaker::to_rows))?;
        d.set_item("listener", record.listener.to_rows())?;
        d.set_item(
            "metrics_after_speaker",
            record
                .metrics_after_speaker
                .as_ref()
                .map(|m| report_dict(py, m))
                .transpose()?,
        )?;
        d.set_item(
            "metrics_after_listener",
            record
                .metrics_after_listener
                .as_ref()
                .map(|m| report_dict(py, m))
                .transpose()?,
        )?;
        d.set_item("literal_fallback_utterances", record.literal_fallback_utterances.clone())?;
        records.append(d)?;
    }
    let marginals: Vec<Vec<f64>> =
        traj.rd_marginal_history.iter().map(|m| m.to_vec()).collect();
    let d = PyDict::new(py);
    d.set_item("alpha", traj.alpha)?;
    d.set_item("mode", traj.mode.to_string())?;
    d.set_item("converged", traj.converged)?;
    d.set_item("convergence_depth", traj.convergence_depth)?;
    d.set_item("records", records)?;
    d.set_item("rd_marginal_history", marginals)?;
    d.set_item("final_speaker", traj.final_speaker().to_rows())?;
    d.set_item("final_listener", traj.final_listener().to_rows())?;
    Ok(d)
}

fn asymptotic_dict<'py>(py: Python<'py>, r: &AsymptoticReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("alpha", r.alpha)?;
    d.set_item("mode", r.mode.to_string())?;
    d.set_item("regime", r.regime.to_string())?;
    d.set_item("converged_g", r.converged_g)?;
    d.set_item("converged_f", r.converged_f)?;
    d.set_item("theoretical_g_star", r.theoretical_g_star)?;
    d.set_item("gap", r.gap)?;
    d.set_item("mutual_info", r.mutual_info)?;
    d.set_item("expected_utility", r.expected_utility)?;
    d.set_item("depth_at_convergence", r.depth_at_convergence)?;
    d.set_item("bound_violations", r.bound_violations.clone())?;
    Ok(d)
}

/// The literal listener: lexicon-weighted Bayes over the prior, as rows.
#[pyfunction]
fn literal_listener(game: &Game) -> Vec<Vec<f64>> {
    dynamics::literal_listener(&game.inner).to_rows()
}

/// Runs the recursion to convergence or `max_depth`, returning the full
/// trajectory as a dict.
#[pyfunction]
#[pyo3(signature = (game, alpha, mode="rsa", max_depth=DEFAULT_MAX_DEPTH, tolerance=DEFAULT_TOLERANCE))]
fn iterate<'py>(
    py: Python<'py>,
    game: &Game,
    alpha: f64,
    mode: &str,
    max_depth: usize,
    tolerance: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = parse_mode(mode)?;
    let traj =
        dynamics::iterate(&game.inner, alpha, mode, max_depth, tolerance).map_err(to_py_err)?;
    trajectory_dict(py, &traj)
}

/// All objective functionals for one speaker/listener pair at `alpha`.
#[pyfunction]
fn objectives<'py>(
    py: Python<'py>,
    game: &Game,
    speaker: Vec<Vec<f64>>,
    listener: Vec<Vec<f64>>,
    alpha: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let speaker = speaker_from(&speaker)?;
    let listener = listener_from(&listener)?;
    let report = ObjectiveReport::compute(
        &speaker,
        &listener,
        game.inner.prior().view(),
        game.inner.cost(),
        alpha,
    )
    .map_err(to_py_err)?;
    report_dict(py, &report)
}

/// Symmetric-game optimum `max{(1−α)·log k, 0}`.
#[pyfunction]
fn theoretical_optimum_g(alpha: f64, k: usize) -> f64 {
    analysis::theoretical_optimum_g(alpha, k)
}

/// Upper bound on G for this speaker under the game's cost.
#[pyfunction]
fn g_upper_bound(game: &Game, speaker: Vec<Vec<f64>>, alpha: f64) -> PyResult<f64> {
    let speaker = speaker_from(&speaker)?;
    analysis::g_upper_bound(&speaker, game.inner.prior().view(), alpha, game.inner.cost())
        .map_err(to_py_err)
}

/// Lower bound on F for this speaker (zero-cost setting).
#[pyfunction]
fn f_lower_bound(game: &Game, speaker: Vec<Vec<f64>>, alpha: f64) -> PyResult<f64> {
    let speaker = speaker_from(&speaker)?;
    analysis::f_lower_bound(&speaker, game.inner.prior().view(), alpha).map_err(to_py_err)
}

/// Iterates every α in the grid and classifies the converged regimes.
#[pyfunction]
#[pyo3(signature = (game, alphas, mode="rsa", max_depth=DEFAULT_MAX_DEPTH, tolerance=DEFAULT_TOLERANCE))]
fn criticality_scan<'py>(
    py: Python<'py>,
    game: &Game,
    alphas: Vec<f64>,
    mode: &str,
    max_depth: usize,
    tolerance: f64,
) -> PyResult<Bound<'py, PyList>> {
    let mode = parse_mode(mode)?;
    let reports = analysis::criticality_scan(&game.inner, &alphas, mode, max_depth, tolerance)
        .map_err(to_py_err)?;
    let out = PyList::empty(py);
    for report in &reports {
        out.append(asymptotic_dict(py, report)?)?;
    }
    Ok(out)
}

/// The lexicographically first deterministic meaning↔utterance bijection
/// on the lexicon support, with its Bayes listener, or None.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn max_utility_solution(game: &Game) -> Option<(Vec<Vec<f64>>, Vec<Vec<f64>>)> {
    analysis::max_utility_solution(&game.inner)
        .map(|(s, l)| (s.to_rows(), l.to_rows()))
}

/// Grid search over all row-stochastic speakers of a tiny game.
#[pyfunction]
#[pyo3(signature = (game, alpha, mode="rsa", grid_resolution=100))]
fn brute_force_optimum<'py>(
    py: Python<'py>,
    game: &Game,
    alpha: f64,
    mode: &str,
    grid_resolution: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = parse_mode(mode)?;
    let result = analysis::brute_force_optimum(&game.inner, alpha, mode, grid_resolution)
        .map_err(to_py_err)?;
    let d = PyDict::new(py);
    d.set_item("speaker", result.speaker.to_rows())?;
    d.set_item("listener", result.listener.to_rows())?;
    d.set_item("value", result.value)?;
    Ok(d)
}

/// Worst-case objective error of the brute-force grid at this resolution.
#[pyfunction]
fn brute_force_grid_error(game: &Game, alpha: f64, grid_resolution: usize) -> PyResult<f64> {
    analysis::brute_force_grid_error(&game.inner, alpha, grid_resolution).map_err(to_py_err)
}

/// Column-normalized response counts (rows are meanings in game order).
#[pyfunction]
fn empirical_listener(game: &Game, counts: Vec<Vec<u64>>) -> PyResult<Vec<Vec<f64>>> {
    let counts =
        ResponseCounts::from_matrix(&game.inner, to_array2(&counts, "counts")?)
            .map_err(to_py_err)?;
    Ok(empirical::empirical_listener(&counts).map_err(to_py_err)?.to_rows())
}

/// Pearson ρ between two listeners over all cells, row-major.
#[pyfunction]
fn pearson_correlation(model: Vec<Vec<f64>>, empirical: Vec<Vec<f64>>) -> PyResult<f64> {
    empirical::pearson_correlation(&listener_from(&model)?, &listener_from(&empirical)?)
        .map_err(to_py_err)
}

/// Sweeps (α, depth) against empirical counts, returning the ρ grid and
/// the best entry.
#[pyfunction]
#[pyo3(signature = (game, counts, alphas, max_depth, mode="rsa"))]
fn fit_sweep<'py>(
    py: Python<'py>,
    game: &Game,
    counts: Vec<Vec<u64>>,
    alphas: Vec<f64>,
    max_depth: usize,
    mode: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = parse_mode(mode)?;
    let counts = ResponseCounts::from_matrix(&game.inner, to_array2(&counts, "counts")?)
        .map_err(to_py_err)?;
    let result = empirical::fit_sweep(&game.inner, &counts, &alphas, max_depth, mode)
        .map_err(to_py_err)?;
    let grid = PyList::empty(py);
    for cell in &result.grid {
        let c = PyDict::new(py);
        c.set_item("alpha", cell.alpha)?;
        c.set_item("depth", cell.depth)?;
        c.set_item("rho", cell.rho)?;
        grid.append(c)?;
    }
    let d = PyDict::new(py);
    d.set_item("mode", result.mode.to_string())?;
    d.set_item("best_alpha", result.best_alpha)?;
    d.set_item("best_depth", result.best_depth)?;
    d.set_item("correlation", result.correlation)?;
    d.set_item("grid", grid)?;
    Ok(d)
}

/// A game shipped with the library (`fig1a` or `fig5`) as JSON text.
#[pyfunction]
fn bundled_game(name: &str) -> PyResult<String> {
    rdrsa::cli::bundled_game(name)
        .map(str::to_string)
        .ok_or_else(|| PyValueError::new_err(format!("no bundled game named `{name}`")))
}

#[pymodule]
fn rdrsa_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Game>()?;
    m.add_function(wrap_pyfunction!(literal_listener, m)?)?;
    m.add_function(wrap_pyfunction!(iterate, m)?)?;
    m.add_function(wrap_pyfunction!(objectives, m)?)?;
    m.add_function(wrap_pyfunction!(theoretical_optimum_g, m)?)?;
    m.add_function(wrap_pyfunction!(g_upper_bound, m)?)?;
    m.add_function(wrap_pyfunction!(f_lower_bound, m)?)?;
    m.add_function(wrap_pyfunction!(criticality_scan, m)?)?;
    m.add_function(wrap_pyfunction!(max_utility_solution, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_optimum, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force_grid_error, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_listener, m)?)?;
    m.add_function(wrap_pyfunction!(pearson_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(fit_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(bundled_game, m)?)?;
    m.add("DEFAULT_MAX_DEPTH", DEFAULT_MAX_DEPTH)?;
    m.add("DEFAULT_TOLERANCE", DEFAULT_TOLERANCE)?;
    Ok(())
}
