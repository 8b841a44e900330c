//! Report assembly: every subcommand produces one `RunReport` that is either
//! pretty-printed or emitted as JSON, with a deterministic exit code.

use serde::Serialize;
use serde_json::Value;

/// Exit codes: 0 claim verified, 1 claim refuted (certificate attached),
/// 2 input error, 3 budget exceeded.
pub const EXIT_VERIFIED: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Serialize)]
pub struct RunReport {
    pub command: String,
    pub version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_digest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub verdict: Value,
    pub timing_ms: u128,
    pub exit_code: i32,
}

impl RunReport {
    pub fn new(command: String, verdict: Value, exit_code: i32) -> Self {
        RunReport {
            command,
            version: env!("CARGO_PKG_VERSION").to_string(),
            instance_digest: None,
            seed: None,
            verdict,
            timing_ms: 0,
            exit_code,
        }
    }

    pub fn with_digest(mut self, digest: Option<String>) -> Self {
        self.instance_digest = digest;
        self
    }

    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        self.seed = seed;
        self
    }

    pub fn emit(&self, json: bool) {
        if json {
            println!("{}", serde_json::to_string_pretty(self).expect("report serializes"));
            return;
        }
        if let Some(digest) = &self.instance_digest {
            println!("instance digest: {digest}");
        }
        print_value(&self.verdict, 0);
        println!("elapsed: {} ms", self.timing_ms);
    }
}

fn print_value(value: &Value, indent: usize) {
    let pad = "  ".repeat(indent);
    match value {
        Value::Object(map) => {
            for (key, inner) in map {
                match inner {
                    Value::Object(_) | Value::Array(_) => {
                        println!("{pad}{key}:");
                        print_value(inner, indent + 1);
                    }
                    _ => println!("{pad}{key}: {}", plain(inner)),
                }
            }
        }
        Value::Array(items) => {
            for item in items {
                match item {
                    Value::Object(_) | Value::Array(_) => {
                        println!("{pad}-");
                        print_value(item, indent + 1);
                    }
                    _ => println!("{pad}- {}", plain(item)),
                }
            }
        }
        other => println!("{pad}{}", plain(other)),
    }
}

fn plain(value: &Value) -> String {
    match value {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// FNV-1a content digest used to pin instance files in reports.
pub fn digest(bytes: &[u8]) -> String {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    format!("{hash:016x}")
}
