//! Run manifest written next to every CLI output.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub seed: Option<u64>,
    pub params: serde_json::Value,
    pub stages: Vec<StageTime>,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        argv: Vec<String>,
        seed: Option<u64>,
        params: serde_json::Value,
    ) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            argv,
            seed,
            params,
            stages: Vec::new(),
        }
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(StageTime {
            stage: stage.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_stages() {
        let mut m = RunManifest::new(
            "gen",
            vec!["x".into()],
            Some(3),
            serde_json::json!({"k": 1}),
        );
        assert_eq!(m.time("work", || 2 + 2), 4);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        m.write(&path).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(v["seed"], 3);
        assert_eq!(v["stages"][0]["stage"], "work");
        assert_eq!(v["tool"], "reusekit");
        let back = RunManifest::read(dir.path().join("m.json")).unwrap();
        assert_eq!(back.argv, m.argv);
        assert_eq!(back.subcommand, "gen");
    }
}
