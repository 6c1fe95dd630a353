//! Report assembly and output plumbing.

use serde_json::{json, Value};

/// The structured report every subcommand emits. `results` is the
/// subcommand-specific payload; the envelope is schema-stable.
pub fn run_report(command: &str, config_hash: &str, results: Value) -> Value {
    json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": config_hash,
        "results": results,
    })
}

/// Serializes a report deterministically: `serde_json` maps are ordered,
/// so identical inputs give byte-identical documents.
pub fn render(report: &Value) -> String {
    let mut text = serde_json::to_string_pretty(report).expect("report is valid JSON");
    text.push('\n');
    text
}
