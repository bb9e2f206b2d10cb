use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Input digest and full configuration of one command run.
pub fn provenance<C: Serialize>(command: &str, input_sha256: &str, config: &C) -> Result<Value> {
    Ok(json!({
        "tool": "qjsp",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "input_sha256": input_sha256,
        "config": serde_json::to_value(config)?,
    }))
}

/// Pretty JSON `{ "provenance": ..., key: payload }`.
pub fn envelope<T: Serialize>(provenance: Value, key: &str, payload: &T) -> Result<String> {
    let mut map = serde_json::Map::new();
    map.insert("provenance".into(), provenance);
    map.insert(key.into(), serde_json::to_value(payload)?);
    let mut text = serde_json::to_string_pretty(&Value::Object(map))?;
    text.push('\n');
    Ok(text)
}

pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}
