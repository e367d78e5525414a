//! Run manifests written next to every command's output.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub scene_path: String,
    pub scene_sha256: String,
    pub seed: Option<u64>,
    /// Values given on the command line, by flag name.
    pub overrides: BTreeMap<String, Value>,
    /// Settings actually used after applying the overrides.
    pub effective: BTreeMap<String, Value>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(command: &str, scene_path: &Path, scene_bytes: &[u8]) -> Self {
        Self {
            command: command.to_string(),
            scene_path: scene_path.display().to_string(),
            scene_sha256: sha256_hex(scene_bytes),
            seed: None,
            overrides: BTreeMap::new(),
            effective: BTreeMap::new(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialization cannot fail") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_round_trips() {
        let mut m = RunManifest::new("simulate", Path::new("scenes/truss.json"), b"{}");
        m.seed = Some(7);
        m.overrides.insert("k".into(), Value::from(10));
        let back: RunManifest = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(back, m);
    }
}
