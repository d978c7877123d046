//! Command-line front end: iterate trajectories, scan α grids, fit
//! empirical counts, and regenerate pinned demo tables.
//!
//! Every command writes plot-ready CSV/JSON plus a `manifest.json`
//! recording the tool version, the exact configuration, and the files
//! produced. Outputs are byte-identical across reruns of the same
//! configuration. Exit codes: 0 on success, 1 on validation or iteration
//! errors, 2 on I/O errors.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::analysis::{asymptotic_report, criticality_scan, AsymptoticReport, BOUND_WARN_TOL};
use crate::dynamics::{iterate, Mode, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE};
use crate::empirical::{fit_sweep, FitResult, ResponseCounts};
use crate::error::{Error, Result};
use crate::export::{
    fit_csv, fit_summary_json, format_f64, manifest_json, matrices_json, scan_csv,
    trajectory_csv,
};
use crate::game::{
    load_game_with_report, parse_game, soften_lexicon, LoadReport, ReferenceGame,
};

/// Lexicon softening used by the bundled demos.
const DEMO_EPSILON: f64 = 0.05;

/// Reference-game recursion toolkit.
#[derive(Parser, Debug)]
#[command(name = "rdrsa", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Iterate one game at one α and write its trajectory table.
    Run(RunArgs),
    /// Sweep an α grid to convergence and classify each endpoint.
    Scan(ScanArgs),
    /// Fit model listeners to an empirical counts file over an (α, depth) grid.
    Fit(FitArgs),
    /// Regenerate a pinned result table (fig2, fig3, fig4top, fig5).
    Demo(DemoArgs),
}

/// Which recursion family (or both) a command should run.
#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeChoice {
    Rsa,
    RdRsa,
    Both,
}

impl ModeChoice {
    /// The concrete modes this choice expands to, in fixed order.
    pub fn modes(self) -> Vec<Mode> {
        match self {
            ModeChoice::Rsa => vec![Mode::Rsa],
            ModeChoice::RdRsa => vec![Mode::RdRsa],
            ModeChoice::Both => vec![Mode::Rsa, Mode::RdRsa],
        }
    }
}

impl fmt::Display for ModeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModeChoice::Rsa => "rsa",
            ModeChoice::RdRsa => "rd-rsa",
            ModeChoice::Both => "both",
        })
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Game description JSON.
    #[arg(long, value_name = "PATH")]
    pub game: PathBuf,
    /// Recursion family to iterate.
    #[arg(long, value_enum, default_value_t = ModeChoice::Rsa)]
    pub mode: ModeChoice,
    /// Rationality parameter.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Depth cap if convergence is not reached first.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    /// Sup-norm convergence tolerance on consecutive speaker/listener pairs.
    #[arg(long, value_name = "X", default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Replace exact lexicon zeros with this value before iterating.
    #[arg(long, value_name = "EPS")]
    pub soften: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Also write per-depth speaker/listener matrices as JSON.
    #[arg(long)]
    pub export_matrices: bool,
}

#[derive(Args, Debug)]
pub struct ScanArgs {
    /// Game description JSON.
    #[arg(long, value_name = "PATH")]
    pub game: PathBuf,
    /// Recursion family (or both) to scan.
    #[arg(long, value_enum, default_value_t = ModeChoice::Rsa)]
    pub mode: ModeChoice,
    /// Single rationality parameter, alternative to --alpha-grid.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Inclusive α grid LO:STEP:HI.
    #[arg(long, value_name = "LO:STEP:HI")]
    pub alpha_grid: Option<String>,
    /// Depth cap if convergence is not reached first.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    /// Sup-norm convergence tolerance on consecutive speaker/listener pairs.
    #[arg(long, value_name = "X", default_value_t = DEFAULT_TOLERANCE)]
    pub tol: f64,
    /// Replace exact lexicon zeros with this value before iterating.
    #[arg(long, value_name = "EPS")]
    pub soften: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Game description JSON.
    #[arg(long, value_name = "PATH")]
    pub game: PathBuf,
    /// Empirical counts CSV (utterance,meaning,count).
    #[arg(long, value_name = "PATH")]
    pub counts: PathBuf,
    /// Recursion family (or both) to fit.
    #[arg(long, value_enum, default_value_t = ModeChoice::Rsa)]
    pub mode: ModeChoice,
    /// Single rationality parameter, alternative to --alpha-grid.
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: Option<f64>,
    /// Inclusive α grid LO:STEP:HI.
    #[arg(long, value_name = "LO:STEP:HI")]
    pub alpha_grid: Option<String>,
    /// Largest recursion depth entering the fit grid.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MAX_DEPTH)]
    pub max_depth: usize,
    /// Replace exact lexicon zeros with this value before iterating.
    #[arg(long, value_name = "EPS")]
    pub soften: Option<f64>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Demo name: fig2, fig3, fig4top, or fig5.
    pub name: String,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
}

/// Games shipped inside the binary, usable by tests and demos.
pub fn bundled_game(name: &str) -> Option<&'static str> {
    match name {
        "fig1a" => Some(include_str!("../assets/fig1a.json")),
        "fig5" => Some(include_str!("../assets/fig5.json")),
        _ => None,
    }
}

fn require_valid_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::BadParameter(format!(
            "alpha must be ≥ 0 and finite, got {alpha}"
        )));
    }
    Ok(())
}

/// Plain decimal (no exponent) as an integer mantissa plus its number of
/// fraction digits, for exact grid stepping. `None` falls back to floats.
fn parse_plain_decimal(s: &str) -> Option<(i128, u32)> {
    let s = s.trim();
    let (sign, digits) = match s.strip_prefix('-') {
        Some(rest) => (-1i128, rest),
        None => (1i128, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) {
        return None;
    }
    if int_part.len() + frac_part.len() > 18 {
        return None;
    }
    let mantissa: i128 = format!("{int_part}{frac_part}").parse().ok()?;
    Some((sign * mantissa, frac_part.len() as u32))
}

const MAX_GRID_POINTS: usize = 100_000;

fn decimal_steps(lo: (i128, u32), step: (i128, u32), hi: (i128, u32)) -> Result<Vec<f64>> {
    let scale = lo.1.max(step.1).max(hi.1);
    let rescale = |(m, d): (i128, u32)| m * 10i128.pow(scale - d);
    let (lo, step, hi) = (rescale(lo), rescale(step), rescale(hi));
    if step <= 0 {
        return Err(Error::BadParameter("alpha grid step must be > 0".into()));
    }
    let denom = 10f64.powi(scale as i32);
    let mut values = Vec::new();
    let mut x = lo;
    while x <= hi {
        if values.len() >= MAX_GRID_POINTS {
            return Err(Error::BadParameter(format!(
                "alpha grid has more than {MAX_GRID_POINTS} points"
            )));
        }
        values.push(x as f64 / denom);
        x += step;
    }
    Ok(values)
}

fn float_steps(lo_s: &str, step_s: &str, hi_s: &str, spec: &str) -> Result<Vec<f64>> {
    let parse = |s: &str, what: &str| -> Result<f64> {
        let x: f64 = s.trim().parse().map_err(|_| {
            Error::BadParameter(format!("alpha grid {what} `{s}` is not a number in `{spec}`"))
        })?;
        if !x.is_finite() {
            return Err(Error::BadParameter(format!(
                "alpha grid {what} must be finite in `{spec}`"
            )));
        }
        Ok(x)
    };
    let (lo, step, hi) = (parse(lo_s, "start")?, parse(step_s, "step")?, parse(hi_s, "end")?);
    if step <= 0.0 {
        return Err(Error::BadParameter("alpha grid step must be > 0".into()));
    }
    if hi < lo {
        return Ok(Vec::new());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    if count >= MAX_GRID_POINTS {
        return Err(Error::BadParameter(format!(
            "alpha grid has more than {MAX_GRID_POINTS} points"
        )));
    }
    Ok((0..=count).map(|i| lo + step * i as f64).collect())
}

/// Expands `LO:STEP:HI` into an inclusive ascending grid. Plain decimal
/// endpoints step exactly (so `0.5:0.1:2.0` ends on 2 rather than
/// 1.9999999999999998); exponent notation falls back to float stepping.
pub fn parse_alpha_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [lo_s, step_s, hi_s] = parts[..] else {
        return Err(Error::BadParameter(format!(
            "alpha grid must be LO:STEP:HI, got `{spec}`"
        )));
    };
    let values = match (
        parse_plain_decimal(lo_s),
        parse_plain_decimal(step_s),
        parse_plain_decimal(hi_s),
    ) {
        (Some(lo), Some(step), Some(hi)) => decimal_steps(lo, step, hi)?,
        _ => float_steps(lo_s, step_s, hi_s, spec)?,
    };
    if values.is_empty() {
        return Err(Error::BadParameter(format!("alpha grid `{spec}` is empty")));
    }
    require_valid_alpha(values[0])?;
    Ok(values)
}

fn resolve_alpha_grid(alpha: Option<f64>, grid: Option<&str>) -> Result<Vec<f64>> {
    match (alpha, grid) {
        (Some(_), Some(_)) => Err(Error::BadParameter(
            "pass exactly one of --alpha and --alpha-grid".into(),
        )),
        (Some(a), None) => {
            require_valid_alpha(a)?;
            Ok(vec![a])
        }
        (None, Some(g)) => parse_alpha_grid(g),
        (None, None) => Err(Error::BadParameter(
            "one of --alpha or --alpha-grid is required".into(),
        )),
    }
}

fn load_prepared(path: &Path, soften: Option<f64>) -> Result<(ReferenceGame, LoadReport)> {
    let (game, report) = load_game_with_report(path)?;
    let game = match soften {
        Some(epsilon) => soften_lexicon(&game, epsilon)?,
        None => game,
    };
    Ok((game, report))
}

fn write_text(dir: &Path, name: &str, text: &str, outputs: &mut Vec<String>) -> Result<()> {
    fs::write(dir.join(name), text)?;
    outputs.push(name.to_string());
    Ok(())
}

fn write_json(
    dir: &Path,
    name: &str,
    value: &serde_json::Value,
    outputs: &mut Vec<String>,
) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Internal(format!("JSON rendering failed: {e}")))?;
    text.push('\n');
    write_text(dir, name, &text, outputs)
}

fn write_manifest(
    dir: &Path,
    command: &str,
    config: serde_json::Value,
    outputs: Vec<String>,
) -> Result<()> {
    let manifest = manifest_json(command, config, &outputs);
    let mut sink = Vec::new();
    write_json(dir, "manifest.json", &manifest, &mut sink)
}

fn load_config_json(path: &Path, load: &LoadReport, soften: Option<f64>) -> serde_json::Value {
    json!({
        "path": path.display().to_string(),
        "assumed_uniform_prior": load.assumed_uniform_prior,
        "assumed_zero_cost": load.assumed_zero_cost,
        "soften": soften,
    })
}

fn convergence_summary(report: &AsymptoticReport) -> String {
    let outcome = match report.depth_at_convergence {
        Some(depth) => format!("converged at depth {depth}"),
        None => "did not converge before the depth cap".to_string(),
    };
    format!(
        "mode {} alpha {}: {} (G = {}, F = {}, regime {})",
        report.mode,
        format_f64(report.alpha),
        outcome,
        format_f64(report.converged_g),
        format_f64(report.converged_f),
        report.regime,
    )
}

fn warn_bound_violations(report: &AsymptoticReport) {
    for violation in &report.bound_violations {
        eprintln!("warning: bound violated beyond {BOUND_WARN_TOL}: {violation}");
    }
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    require_valid_alpha(args.alpha)?;
    let (game, load) = load_prepared(&args.game, args.soften)?;
    fs::create_dir_all(&args.out)?;
    let mut outputs = Vec::new();
    for mode in args.mode.modes() {
        let trajectory = iterate(&game, args.alpha, mode, args.max_depth, args.tol)?;
        let report = asymptotic_report(&game, &trajectory)?;
        let stem = format!("{mode}_{}", format_f64(args.alpha));
        write_text(
            &args.out,
            &format!("trajectory_{stem}.csv"),
            &trajectory_csv(&trajectory),
            &mut outputs,
        )?;
        if args.export_matrices {
            write_json(
                &args.out,
                &format!("matrices_{stem}.json"),
                &matrices_json(&trajectory),
                &mut outputs,
            )?;
        }
        warn_bound_violations(&report);
        println!("{}", convergence_summary(&report));
    }
    let config = json!({
        "game": load_config_json(&args.game, &load, args.soften),
        "mode": args.mode.to_string(),
        "alpha": args.alpha,
        "max_depth": args.max_depth,
        "tolerance": args.tol,
        "bound_warn_tolerance": BOUND_WARN_TOL,
        "export_matrices": args.export_matrices,
    });
    write_manifest(&args.out, "run", config, outputs)
}

fn cmd_scan(args: &ScanArgs) -> Result<()> {
    let grid = resolve_alpha_grid(args.alpha, args.alpha_grid.as_deref())?;
    let (game, load) = load_prepared(&args.game, args.soften)?;
    fs::create_dir_all(&args.out)?;
    let mut reports = Vec::new();
    for mode in args.mode.modes() {
        reports.extend(criticality_scan(&game, &grid, mode, args.max_depth, args.tol)?);
    }
    for report in &reports {
        warn_bound_violations(report);
    }
    let mut outputs = Vec::new();
    write_text(&args.out, "scan.csv", &scan_csv(&reports), &mut outputs)?;
    let converged = reports.iter().filter(|r| r.depth_at_convergence.is_some()).count();
    println!(
        "scanned {} alpha value(s) in {} mode(s): {}/{} converged",
        grid.len(),
        args.mode.modes().len(),
        converged,
        reports.len(),
    );
    let config = json!({
        "game": load_config_json(&args.game, &load, args.soften),
        "mode": args.mode.to_string(),
        "alphas": grid,
        "alpha_grid": args.alpha_grid,
        "max_depth": args.max_depth,
        "tolerance": args.tol,
        "bound_warn_tolerance": BOUND_WARN_TOL,
    });
    write_manifest(&args.out, "scan", config, outputs)
}

fn cmd_fit(args: &FitArgs) -> Result<()> {
    let grid = resolve_alpha_grid(args.alpha, args.alpha_grid.as_deref())?;
    let (game, load) = load_prepared(&args.game, args.soften)?;
    let counts = ResponseCounts::from_csv_path(&args.counts, &game)?;
    fs::create_dir_all(&args.out)?;
    let results: Vec<FitResult> = args
        .mode
        .modes()
        .into_iter()
        .map(|mode| fit_sweep(&game, &counts, &grid, args.max_depth, mode))
        .collect::<Result<_>>()?;
    let mut outputs = Vec::new();
    write_text(&args.out, "fit.csv", &fit_csv(&results), &mut outputs)?;
    write_json(&args.out, "fit_summary.json", &fit_summary_json(&results), &mut outputs)?;
    for result in &results {
        println!(
            "mode {}: best rho = {} at alpha {}, depth {}",
            result.mode,
            format_f64(result.correlation),
            format_f64(result.best_alpha),
            result.best_depth,
        );
    }
    let config = json!({
        "game": load_config_json(&args.game, &load, args.soften),
        "counts": args.counts.display().to_string(),
        "mode": args.mode.to_string(),
        "alphas": grid,
        "alpha_grid": args.alpha_grid,
        "max_depth": args.max_depth,
        "tolerance": DEFAULT_TOLERANCE,
    });
    write_manifest(&args.out, "fit", config, outputs)
}

fn demo_game(name: &str) -> Result<ReferenceGame> {
    let text = bundled_game(name)
        .ok_or_else(|| Error::Internal(format!("no bundled game named {name}")))?;
    parse_game(text, &format!("bundled:{name}")).map(|(game, _)| game)
}

fn demo_config(name: &str, detail: serde_json::Value) -> serde_json::Value {
    json!({
        "demo": name,
        "max_depth": DEFAULT_MAX_DEPTH,
        "tolerance": DEFAULT_TOLERANCE,
        "bound_warn_tolerance": BOUND_WARN_TOL,
        "detail": detail,
    })
}

fn demo_fig2(out: &Path) -> Result<()> {
    let game = soften_lexicon(&demo_game("fig1a")?, DEMO_EPSILON)?;
    let trajectory = iterate(&game, 1.2, Mode::Rsa, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE)?;
    let report = asymptotic_report(&game, &trajectory)?;
    let mut outputs = Vec::new();
    write_text(out, "trajectory_rsa_1.2.csv", &trajectory_csv(&trajectory), &mut outputs)?;
    println!("{}", convergence_summary(&report));
    let detail = json!({"game": "bundled:fig1a", "soften": DEMO_EPSILON, "mode": "rsa", "alpha": 1.2});
    write_manifest(out, "demo", demo_config("fig2", detail), outputs)
}

fn demo_fig3(out: &Path) -> Result<()> {
    let game = soften_lexicon(&demo_game("fig1a")?, DEMO_EPSILON)?;
    let mut outputs = Vec::new();
    for alpha in [0.9, 1.2] {
        let trajectory = iterate(&game, alpha, Mode::Rsa, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE)?;
        let report = asymptotic_report(&game, &trajectory)?;
        let stem = format!("rsa_{}", format_f64(alpha));
        write_text(out, &format!("trajectory_{stem}.csv"), &trajectory_csv(&trajectory), &mut outputs)?;
        write_json(out, &format!("matrices_{stem}.json"), &matrices_json(&trajectory), &mut outputs)?;
        println!("{}", convergence_summary(&report));
    }
    let detail = json!({"game": "bundled:fig1a", "soften": DEMO_EPSILON, "mode": "rsa", "alphas": [0.9, 1.2]});
    write_manifest(out, "demo", demo_config("fig3", detail), outputs)
}

fn demo_fig4top(out: &Path) -> Result<()> {
    let game = demo_game("fig1a")?;
    let grid = [0.5, 0.9, 1.0, 1.1, 2.0];
    let mut outputs = Vec::new();
    let mut reports = Vec::new();
    for mode in [Mode::Rsa, Mode::RdRsa] {
        for &alpha in &grid {
            let trajectory = iterate(&game, alpha, mode, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE)?;
            let report = asymptotic_report(&game, &trajectory)?;
            let stem = format!("{mode}_{}", format_f64(alpha));
            write_text(out, &format!("trajectory_{stem}.csv"), &trajectory_csv(&trajectory), &mut outputs)?;
            println!("{}", convergence_summary(&report));
            reports.push(report);
        }
    }
    write_text(out, "scan.csv", &scan_csv(&reports), &mut outputs)?;
    let detail = json!({"game": "bundled:fig1a", "mode": "both", "alphas": grid.to_vec()});
    write_manifest(out, "demo", demo_config("fig4top", detail), outputs)
}

fn demo_fig5(out: &Path) -> Result<()> {
    let binary = demo_game("fig5")?;
    let softened = soften_lexicon(&binary, DEMO_EPSILON)?;
    let mut entries = Vec::new();
    for (label, game) in [("binary", &binary), ("softened", &softened)] {
        for mode in [Mode::Rsa, Mode::RdRsa] {
            for alpha in [0.5, 3.0] {
                let trajectory = iterate(game, alpha, mode, DEFAULT_MAX_DEPTH, DEFAULT_TOLERANCE)?;
                let report = asymptotic_report(game, &trajectory)?;
                println!("{label} lexicon, {}", convergence_summary(&report));
                entries.push(json!({
                    "lexicon": label,
                    "mode": mode.to_string(),
                    "alpha": alpha,
                    "converged": trajectory.converged,
                    "convergence_depth": trajectory.convergence_depth,
                    "speaker": trajectory.final_speaker().to_rows(),
                }));
            }
        }
    }
    let document = json!({
        "meanings": binary.meanings(),
        "utterances": binary.utterances(),
        "entries": entries,
    });
    let mut outputs = Vec::new();
    write_json(out, "fig5_speakers.json", &document, &mut outputs)?;
    let detail = json!({
        "game": "bundled:fig5",
        "lexicons": ["binary", "softened"],
        "soften": DEMO_EPSILON,
        "mode": "both",
        "alphas": [0.5, 3.0],
    });
    write_manifest(out, "demo", demo_config("fig5", detail), outputs)
}

fn cmd_demo(args: &DemoArgs) -> Result<()> {
    fs::create_dir_all(&args.out)?;
    match args.name.as_str() {
        "fig2" => demo_fig2(&args.out),
        "fig3" => demo_fig3(&args.out),
        "fig4top" => demo_fig4top(&args.out),
        "fig5" => demo_fig5(&args.out),
        other => Err(Error::BadParameter(format!(
            "unknown demo `{other}`; available demos: fig2, fig3, fig4top, fig5"
        ))),
    }
}

/// Runs the selected subcommand.
pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Scan(args) => cmd_scan(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Demo(args) => cmd_demo(args),
    }
}

/// Process exit code for an error: 2 for I/O failures, 1 otherwise.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Io(_) => 2,
        _ => 1,
    }
}
