use std::path::Path;
use std::time::Instant;

use mmchan_core::fsutil::{write_bytes_atomic, WrittenFile};
use mmchan_core::hash::{content_hash, hash_file, hash_hex};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub bytes: u64,
    pub hash: String,
}

impl From<&WrittenFile> for FileRecord {
    fn from(w: &WrittenFile) -> Self {
        FileRecord {
            path: w.path.display().to_string(),
            bytes: w.bytes,
            hash: hash_hex(w.hash),
        }
    }
}

/// Record of one successful subcommand run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub tool_version: String,
    pub config_hash: String,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub wall_clock_seconds: f64,
}

pub struct RunRecorder {
    started: Instant,
    manifest: RunManifest,
}

impl RunRecorder {
    /// `config` is a canonical rendering of the effective configuration.
    pub fn new(subcommand: &str, config: &str) -> Self {
        RunRecorder {
            started: Instant::now(),
            manifest: RunManifest {
                subcommand: subcommand.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash: hash_hex(content_hash(config.as_bytes())),
                inputs: Vec::new(),
                outputs: Vec::new(),
                wall_clock_seconds: 0.0,
            },
        }
    }

    pub fn input(&mut self, path: &Path) -> mmchan_core::Result<()> {
        let (hash, bytes) = hash_file(path)?;
        self.manifest.inputs.push(FileRecord {
            path: path.display().to_string(),
            bytes,
            hash: hash_hex(hash),
        });
        Ok(())
    }

    pub fn output(&mut self, w: &WrittenFile) {
        self.manifest.outputs.push(w.into());
    }

    pub fn output_record(&mut self, r: FileRecord) {
        self.manifest.outputs.push(r);
    }

    pub fn finish(mut self) -> RunManifest {
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        self.manifest
    }

    pub fn write(self, path: &Path) -> mmchan_core::Result<RunManifest> {
        let m = self.finish();
        let text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        write_bytes_atomic(path, text.as_bytes())?;
        Ok(m)
    }
}

impl RunRecorder {
    /// Replaces the configuration hash once the effective configuration is known.
    pub fn with_config(mut self, config: &str) -> Self {
        self.manifest.config_hash = hash_hex(content_hash(config.as_bytes()));
        self
    }
}
