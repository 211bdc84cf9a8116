//! Named experiments over the scattering laboratory, with flat-text
//! configuration, CSV artifacts and JSON manifests.

// Negated comparisons such as `!(x > 0.0)` deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod experiments;
pub mod manifest;
pub mod sweep;

use std::path::Path;
use std::time::Instant;

pub use config::Config;
pub use experiments::EXPERIMENTS;
pub use manifest::{RunContext, RunManifest, Status};

/// Runs `name` and always writes `manifest.json` into `out`; the manifest
/// records a configuration or runtime error instead of propagating it.
pub fn run(name: &str, cfg: Config, out: &Path, seed: u64) -> RunManifest {
    let started = Instant::now();
    let mut ctx = RunContext::new(cfg, out, seed);
    let outcome = experiments::run_experiment(name, &mut ctx).map(|_| ());
    let manifest = ctx.finish(name, started, outcome);
    if let Err(e) =
        std::fs::create_dir_all(out).map_err(anyhow::Error::from).and_then(|_| manifest::write_manifest(&out.join("manifest.json"), &manifest))
    {
        eprintln!("error: could not write manifest: {e:#}");
    }
    manifest
}

/// Writes the manifest of a run that failed before it started.
pub fn record_error(name: &str, out: &Path, seed: u64, error: anyhow::Error) -> RunManifest {
    let manifest = RunContext::new(Config::default(), out, seed).finish(name, Instant::now(), Err(error));
    if let Err(e) =
        std::fs::create_dir_all(out).map_err(anyhow::Error::from).and_then(|_| manifest::write_manifest(&out.join("manifest.json"), &manifest))
    {
        eprintln!("error: could not write manifest: {e:#}");
    }
    manifest
}
