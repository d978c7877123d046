//! Plot-ready CSV and JSON renderings of trajectories, scans, and fits.
//!
//! Every number is written in its shortest round-trip decimal form, so
//! outputs are byte-stable across platforms and reloading a value yields
//! exactly the bits that were written.

use crate::analysis::AsymptoticReport;
use crate::dynamics::Trajectory;
use crate::empirical::FitResult;
use crate::objectives::ObjectiveReport;

/// Column order of an [`ObjectiveReport`] row.
pub const REPORT_FIELDS: [&str; 7] = [
    "alpha",
    "h_u_given_m",
    "h_u",
    "mutual_info",
    "expected_utility",
    "g_value",
    "f_value",
];

/// Shortest decimal representation that parses back to exactly `x`
/// (`NaN`, `inf`, and `-inf` for the non-finite values).
pub fn format_f64(x: f64) -> String {
    x.to_string()
}

fn report_fields(report: &ObjectiveReport) -> [f64; 7] {
    [
        report.alpha,
        report.h_u_given_m,
        report.h_u,
        report.mutual_info,
        report.expected_utility,
        report.g_value,
        report.f_value,
    ]
}

/// One CSV row of the seven [`REPORT_FIELDS`] values.
pub fn report_csv_row(report: &ObjectiveReport) -> String {
    report_fields(report)
        .map(format_f64)
        .join(",")
}

/// Long-format trajectory CSV: two rows per depth (speaker half-step, then
/// listener half-step), starting at depth 1 — the depth-0 record holds only
/// the literal listener and has no functionals to report.
pub fn trajectory_csv(trajectory: &Trajectory) -> String {
    let mut out = String::from(
        "depth,phase,alpha,mode,h_u_given_m,h_u,mutual_info,expected_utility,g_value,f_value\n",
    );
    for record in &trajectory.records[1..] {
        for (phase, metrics) in [
            ("speaker", record.metrics_after_speaker),
            ("listener", record.metrics_after_listener),
        ] {
            let m = metrics.expect("iterated depths carry both half-step reports");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                record.depth,
                phase,
                format_f64(trajectory.alpha),
                trajectory.mode,
                format_f64(m.h_u_given_m),
                format_f64(m.h_u),
                format_f64(m.mutual_info),
                format_f64(m.expected_utility),
                format_f64(m.g_value),
                format_f64(m.f_value),
            ));
        }
    }
    out
}

/// Scan CSV, one row per (α, mode); `depth_at_convergence` is empty when
/// the iteration hit its cap instead of converging.
pub fn scan_csv(reports: &[AsymptoticReport]) -> String {
    let mut out = String::from(
        "alpha,mode,regime,converged_g,converged_f,theoretical_g_star,gap,\
         mutual_info,expected_utility,depth_at_convergence\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            format_f64(r.alpha),
            r.mode,
            r.regime,
            format_f64(r.converged_g),
            format_f64(r.converged_f),
            format_f64(r.theoretical_g_star),
            format_f64(r.gap),
            format_f64(r.mutual_info),
            format_f64(r.expected_utility),
            r.depth_at_convergence
                .map(|d| d.to_string())
                .unwrap_or_default(),
        ));
    }
    out
}

/// Fit-grid CSV across one or more fit results.
pub fn fit_csv(results: &[FitResult]) -> String {
    let mut out = String::from("mode,alpha,depth,rho\n");
    for result in results {
        for cell in &result.grid {
            out.push_str(&format!(
                "{},{},{},{}\n",
                result.mode,
                format_f64(cell.alpha),
                cell.depth,
                format_f64(cell.rho),
            ));
        }
    }
    out
}

/// JSON summary of the best entry per mode.
pub fn fit_summary_json(results: &[FitResult]) -> serde_json::Value {
    serde_json::Value::Array(
        results
            .iter()
            .map(|r| {
                serde_json::json!({
                    "mode": r.mode.to_string(),
                    "best_alpha": r.best_alpha,
                    "best_depth": r.best_depth,
                    "correlation": r.correlation,
                })
            })
            .collect(),
    )
}

/// Per-depth matrix dump: speaker and listener matrices (row-major, full
/// precision) for every recorded depth, plus the marginal history for
/// RD-RSA trajectories.
pub fn matrices_json(trajectory: &Trajectory) -> serde_json::Value {
    let depths: Vec<serde_json::Value> = trajectory
        .records
        .iter()
        .map(|record| {
            serde_json::json!({
                "depth": record.depth,
                "speaker": record.speaker.as_ref().map(|s| s.to_rows()),
                "listener": record.listener.to_rows(),
                "literal_fallback_utterances": record.literal_fallback_utterances,
            })
        })
        .collect();
    let marginals: Vec<Vec<f64>> = trajectory
        .rd_marginal_history
        .iter()
        .map(|m| m.to_vec())
        .collect();
    serde_json::json!({
        "alpha": trajectory.alpha,
        "mode": trajectory.mode.to_string(),
        "converged": trajectory.converged,
        "convergence_depth": trajectory.convergence_depth,
        "meanings": trajectory.game().meanings(),
        "utterances": trajectory.game().utterances(),
        "depths": depths,
        "rd_marginal_history": marginals,
    })
}

/// The manifest written beside every command's outputs: tool identity,
/// the exact configuration, and the files produced.
pub fn manifest_json(
    command: &str,
    config: serde_json::Value,
    outputs: &[String],
) -> serde_json::Value {
    serde_json::json!({
        "tool": "rdrsa",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "outputs": outputs,
    })
}
