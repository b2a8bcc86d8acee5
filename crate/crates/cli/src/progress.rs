//! Progress output: human lines on stderr, or one JSON object per line on stdout.

use std::io::Write;

use serde_json::{json, Value};

pub struct Reporter {
    json: bool,
}

impl Reporter {
    pub fn new(json: bool) -> Self {
        Self { json }
    }

    /// Emits `fields` tagged with `event`. Human mode prints `text` instead.
    pub fn emit(&self, event: &str, fields: Value, text: impl FnOnce() -> String) {
        if self.json {
            let mut obj = json!({ "event": event });
            if let (Some(o), Value::Object(extra)) = (obj.as_object_mut(), fields) {
                o.extend(extra);
            }
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "{obj}");
            let _ = out.flush();
        } else {
            eprintln!("{}", text());
        }
    }

    pub fn tuple(&self, command: &str, id: &str, status: &str) {
        self.emit(
            "tuple",
            json!({ "command": command, "id": id, "status": status }),
            || format!("{command}: {id} {status}"),
        );
    }
}
