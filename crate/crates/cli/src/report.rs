//! Report rendering. Output is byte-stable: fixed field order, fixed
//! float formatting (12 significant digits), no timestamps.

use std::io::Write;
use std::path::Path;

use crate::config::Format;
use crate::error::Result;
use crate::harness::EnsembleReport;

pub const CSV_HEADER: &str = "round,pairs_in,successes,empirical_p,std_error,analytic_p,z_score";

fn sig12(value: f64) -> String {
    format!("{value:.11e}")
}

/// JSON has no representation for non-finite numbers; render them as
/// null (an infinite z_score always comes with a fail verdict).
fn json_number(value: f64) -> String {
    if value.is_finite() {
        sig12(value)
    } else {
        "null".to_string()
    }
}

fn csv_number(value: f64) -> String {
    if value.is_finite() {
        sig12(value)
    } else if value.is_nan() {
        "nan".to_string()
    } else if value > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn json_opt_u64(value: Option<u64>) -> String {
    match value {
        Some(v) => v.to_string(),
        None => "null".to_string(),
    }
}

pub fn render(report: &EnsembleReport, format: Format) -> String {
    match format {
        Format::Json => render_json(report),
        Format::Csv => render_csv(report),
    }
}

fn render_json(report: &EnsembleReport) -> String {
    let cfg = &report.config;
    let mut s = String::with_capacity(2048);
    s.push_str("{\n");
    s.push_str("  \"config\": {\n");
    s.push_str(&format!("    \"command\": \"{}\",\n", cfg.mode.name()));
    s.push_str(&format!("    \"protocol\": \"{}\",\n", cfg.protocol.name()));
    s.push_str(&format!("    \"alpha_sq\": {},\n", json_number(cfg.alpha_sq)));
    s.push_str(&format!("    \"trials\": {},\n", json_opt_u64(cfg.trials)));
    s.push_str(&format!("    \"seed\": {},\n", json_opt_u64(cfg.seed)));
    s.push_str(&format!("    \"rounds\": {},\n", cfg.rounds));
    s.push_str(&format!("    \"parties\": {},\n", cfg.parties));
    s.push_str(&format!("    \"method\": \"{}\",\n", cfg.method.name()));
    s.push_str(&format!(
        "    \"check_tolerance_sigma\": {}\n",
        json_number(cfg.sigma)
    ));
    s.push_str("  },\n");

    s.push_str("  \"rounds\": [\n");
    for (i, r) in report.rounds.iter().enumerate() {
        s.push_str("    {\n");
        s.push_str(&format!("      \"round\": {},\n", r.round));
        s.push_str(&format!("      \"pairs_in\": {},\n", r.pairs_in));
        s.push_str(&format!("      \"successes\": {},\n", r.successes));
        s.push_str(&format!(
            "      \"empirical_p\": {},\n",
            json_number(r.empirical_p)
        ));
        s.push_str(&format!(
            "      \"std_error\": {},\n",
            json_number(r.std_error)
        ));
        s.push_str(&format!(
            "      \"analytic_p\": {},\n",
            json_number(r.analytic_p)
        ));
        s.push_str(&format!("      \"z_score\": {}\n", json_number(r.z_score)));
        s.push_str(if i + 1 < report.rounds.len() {
            "    },\n"
        } else {
            "    }\n"
        });
    }
    s.push_str("  ],\n");

    s.push_str("  \"overall\": {\n");
    s.push_str(&format!(
        "    \"empirical_fraction\": {},\n",
        json_number(report.overall.empirical_fraction)
    ));
    s.push_str(&format!(
        "    \"analytic_fraction\": {},\n",
        json_number(report.overall.analytic_fraction)
    ));
    s.push_str("    \"conservation\": {\n");
    s.push_str(&format!(
        "      \"e_before\": {},\n",
        json_number(report.overall.conservation.e_before)
    ));
    s.push_str(&format!(
        "      \"e_after\": {}\n",
        json_number(report.overall.conservation.e_after)
    ));
    s.push_str("    }\n");
    s.push_str("  },\n");

    if let Some(trace) = &report.trace {
        s.push_str("  \"trace\": [\n");
        for (i, step) in trace.iter().enumerate() {
            s.push_str(&format!(
                "    {{\"outcome\": \"{}\", \"probability\": {}}}{}\n",
                step.outcome,
                json_number(step.probability),
                if i + 1 < trace.len() { "," } else { "" }
            ));
        }
        s.push_str("  ],\n");
    }

    if let Some(branches) = &report.branches {
        s.push_str("  \"branches\": [\n");
        for (i, b) in branches.iter().enumerate() {
            let bell = match b.bell {
                Some(name) => format!("\"{name}\""),
                None => "null".to_string(),
            };
            s.push_str(&format!(
                "    {{\"path\": \"{}\", \"probability\": {}, \"kind\": \"{}\", \"bell\": {}, \"entanglement\": {}}}{}\n",
                b.path,
                json_number(b.probability),
                b.kind,
                bell,
                json_number(b.entanglement),
                if i + 1 < branches.len() { "," } else { "" }
            ));
        }
        s.push_str("  ],\n");
    }

    s.push_str(&format!("  \"verdict\": \"{}\"\n", report.verdict.name()));
    s.push_str("}\n");
    s
}

fn render_csv(report: &EnsembleReport) -> String {
    let mut s = String::with_capacity(256);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in &report.rounds {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.round,
            r.pairs_in,
            r.successes,
            csv_number(r.empirical_p),
            csv_number(r.std_error),
            csv_number(r.analytic_p),
            csv_number(r.z_score),
        ));
    }
    s
}

/// Writes the rendered report to the file or to standard output.
pub fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
