//! Per-command run records: `<dataset>/runs/<command>.json`.

use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliResult;
use crate::io::write_text;

#[derive(Serialize)]
struct RunRecord<'a> {
    command: &'a str,
    tool_version: &'a str,
    config_hash: &'a str,
    seed: u64,
    summary: &'a Value,
    /// Wall-clock fields; everything above them is reproducible.
    started_unix_ms: u128,
    duration_ms: u128,
}

pub struct Timer {
    started: SystemTime,
    clock: Instant,
}

impl Timer {
    pub fn start() -> Self {
        Self {
            started: SystemTime::now(),
            clock: Instant::now(),
        }
    }
}

pub fn write_record(
    dataset: &Path,
    command: &str,
    config_hash: &str,
    seed: u64,
    summary: &Value,
    timer: &Timer,
) -> CliResult<()> {
    let rec = RunRecord {
        command,
        tool_version: env!("CARGO_PKG_VERSION"),
        config_hash,
        seed,
        summary,
        started_unix_ms: timer.started.duration_since(UNIX_EPOCH).map(|d| d.as_millis()).unwrap_or(0),
        duration_ms: timer.clock.elapsed().as_millis(),
    };
    let text = serde_json::to_string_pretty(&rec).expect("record serializes") + "\n";
    write_text(&dataset.join("runs").join(format!("{command}.json")), &text)
}
