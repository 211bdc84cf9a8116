//! Run context, acceptance checks and the JSON manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context as _, Result};
use serde::Serialize;

use crate::config::Config;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub status: Status,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    /// Informational results outside the acceptance checks.
    pub notes: Vec<String>,
    pub files: Vec<String>,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => 0,
            Status::Fail => 1,
            Status::Error => 2,
        }
    }
}

/// State threaded through one experiment run.
pub struct RunContext {
    pub cfg: Config,
    pub out: PathBuf,
    pub seed: u64,
    /// Echo one line per check to stdout.
    pub verbose: bool,
    checks: Vec<Check>,
    warnings: Vec<String>,
    notes: Vec<String>,
    files: Vec<String>,
}

impl RunContext {
    pub fn new(cfg: Config, out: &Path, seed: u64) -> Self {
        Self { cfg, out: out.to_path_buf(), seed, verbose: true, checks: Vec::new(), warnings: Vec::new(), notes: Vec::new(), files: Vec::new() }
    }

    /// Path of an output file, recorded in the inventory.
    pub fn file(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.out.join(name)
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: impl Into<String>) {
        let detail = detail.into();
        if self.verbose {
            println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        }
        self.checks.push(Check { name: name.to_string(), pass, detail });
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if self.verbose {
            eprintln!("warning: {msg}");
        }
        self.warnings.push(msg);
    }

    pub fn note(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if self.verbose {
            println!("NOTE {msg}");
        }
        self.notes.push(msg);
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    /// Finalizes the manifest from the run outcome.
    pub fn finish(self, experiment: &str, started: Instant, outcome: Result<()>) -> RunManifest {
        let error = outcome.err().map(|e| format!("{e:#}"));
        let status = if error.is_some() {
            Status::Error
        } else if self.checks.iter().all(|c| c.pass) {
            Status::Pass
        } else {
            Status::Fail
        };
        RunManifest {
            experiment: experiment.to_string(),
            config: self.cfg.entries().clone(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_s: started.elapsed().as_secs_f64(),
            status,
            checks: self.checks,
            warnings: self.warnings,
            notes: self.notes,
            files: self.files,
            error,
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let text = serde_json::to_string_pretty(manifest)?;
    std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn status_follows_checks_and_errors() {
        let t = Instant::now();
        let mut ctx = RunContext::new(Config::default(), Path::new("."), 1);
        ctx.verbose = false;
        ctx.check("a", true, "");
        assert_eq!(ctx.finish("x", t, Ok(())).exit_code(), 0);

        let mut ctx = RunContext::new(Config::default(), Path::new("."), 1);
        ctx.verbose = false;
        ctx.check("a", true, "");
        ctx.check("b", false, "");
        assert_eq!(ctx.finish("x", t, Ok(())).exit_code(), 1);

        let ctx = RunContext::new(Config::default(), Path::new("."), 1);
        let m = ctx.finish("x", t, Err(anyhow::anyhow!("boom")));
        assert_eq!(m.exit_code(), 2);
        assert_eq!(m.error.as_deref(), Some("boom"));
    }

    #[test]
    fn manifest_serializes() {
        let mut ctx = RunContext::new(Config::parse("k = 2").unwrap(), Path::new("."), 7);
        ctx.verbose = false;
        let _ = ctx.file("a.csv");
        let m = ctx.finish("mie-validate", Instant::now(), Ok(()));
        let v: serde_json::Value = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(v["status"], "pass");
        assert_eq!(v["config"]["k"], "2");
        assert_eq!(v["files"][0], "a.csv");
    }
}
