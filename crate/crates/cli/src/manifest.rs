use std::time::{SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Record of one run. Everything except `sidecar` is a function of the
/// command line, the configuration and the tool version.
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config_hash: String,
    pub outputs: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command_line: Vec<String>, config_text: &str) -> Self {
        RunManifest { command_line, config_hash: sha256_hex(config_text.as_bytes()), outputs: Vec::new() }
    }

    pub fn add_output(&mut self, path: &str, bytes: &[u8]) {
        self.outputs.push((path.to_string(), sha256_hex(bytes)));
    }

    /// Hash over the output hashes in write order.
    pub fn output_hash(&self) -> String {
        let mut h = Sha256::new();
        for (path, digest) in &self.outputs {
            h.update(path.as_bytes());
            h.update([0]);
            h.update(digest.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    pub fn to_value(&self) -> Value {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        json!({
            "command_line": self.command_line,
            "config_hash": self.config_hash,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "outputs": self.outputs.iter().map(|(p, d)| json!({ "path": p, "sha256": d })).collect::<Vec<_>>(),
            "output_hash": self.output_hash(),
            "sidecar": { "timestamp_unix": timestamp },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn output_hash_ignores_time() {
        let mut a = RunManifest::new(vec!["grid".into()], "{}");
        a.add_output("grid.csv", b"k,b\n");
        let first = a.output_hash();
        assert_eq!(first, a.output_hash());
        assert_eq!(a.to_value()["output_hash"], first);
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
