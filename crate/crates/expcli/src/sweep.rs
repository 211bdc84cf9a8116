//! One-parameter sweeps over an experiment.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context as _, Result};
use serde::Serialize;

use crate::config::{parse_list, Config};
use crate::experiments::{run_experiment, write_metrics_csv};
use crate::manifest::{write_manifest, Check, RunContext, Status};

/// Configuration key that `param` controls in `experiment`.
pub fn sweep_key(experiment: &str, param: &str) -> Result<&'static str> {
    let fem = matches!(experiment, "mie-validate" | "square-nonscatter" | "square-scatter-control" | "pushforward-invisible" | "corner-scatter");
    let key = match (param, experiment) {
        ("h", _) if fem => "fem.hs",
        ("k", "pushforward-invisible") => "pushforward.k",
        ("k", "herglotz-fit") => "herglotz.k",
        ("k", "mie-validate" | "square-scatter-control" | "corner-scatter" | "radial-te" | "nondegeneracy-scan") => "k",
        ("M", "herglotz-fit") => "herglotz.ms",
        ("M", _) if fem => "fem.m",
        ("eps" | "ε", "pushforward-invisible") => "pushforward.eps",
        ("h" | "k" | "M" | "eps" | "ε", _) => bail!("parameter `{param}` does not apply to `{experiment}`"),
        _ => bail!("unknown sweep parameter `{param}` (expected h, k, M or eps)"),
    };
    Ok(key)
}

/// Parses `a,b,c` or the inclusive range `lo:hi:count`.
pub fn parse_values(text: &str) -> Result<Vec<String>> {
    if let [lo, hi, n] = text.split(':').collect::<Vec<_>>()[..] {
        let (lo, hi): (f64, f64) = (lo.trim().parse()?, hi.trim().parse()?);
        let n: usize = n.trim().parse()?;
        if n < 2 || !(hi > lo) {
            bail!("range `{text}` needs lo < hi and at least two points");
        }
        return Ok((0..n).map(|i| format!("{}", lo + (hi - lo) * i as f64 / (n - 1) as f64)).collect());
    }
    let vals: Vec<String> = parse_list(text)?;
    for v in &vals {
        v.parse::<f64>().with_context(|| format!("sweep value {v:?}"))?;
    }
    if vals.is_empty() {
        bail!("no sweep values");
    }
    Ok(vals)
}

#[derive(Debug, Serialize)]
pub struct SweepPoint {
    pub value: String,
    pub status: Status,
    pub error: Option<String>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Serialize)]
pub struct SweepManifest {
    pub experiment: String,
    pub param: String,
    pub key: String,
    pub version: String,
    pub wall_time_s: f64,
    pub points: Vec<SweepPoint>,
    pub files: Vec<String>,
}

impl SweepManifest {
    /// 0 when every point passes, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.points.iter().any(|p| p.status != Status::Pass))
    }
}

/// Runs `experiment` once per value, each point in its own subdirectory,
/// and writes `sweep_<param>.csv` with the run metrics in value order.
pub fn sweep(experiment: &str, param: &str, values: &[String], base: &Config, out: &Path, seed: u64) -> Result<SweepManifest> {
    let started = Instant::now();
    let key = sweep_key(experiment, param)?;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let param_name = if param == "ε" { "eps" } else { param };
    let mut rows = Vec::with_capacity(values.len());
    let mut points = Vec::with_capacity(values.len());
    let mut files = Vec::new();
    for (i, value) in values.iter().enumerate() {
        let dir = out.join(format!("{param_name}_{i:03}"));
        let mut cfg = base.clone();
        cfg.set(key, value);
        let mut ctx = RunContext::new(cfg, &dir, seed);
        ctx.verbose = false;
        let t = Instant::now();
        let result = run_experiment(experiment, &mut ctx);
        let (metrics, outcome) = match result {
            Ok(m) => (Some(m), Ok(())),
            Err(e) => (None, Err(e)),
        };
        let manifest = ctx.finish(experiment, t, outcome);
        if std::fs::create_dir_all(&dir).is_ok() && write_manifest(&dir.join("manifest.json"), &manifest).is_ok() {
            files.push(format!("{}/manifest.json", dir.file_name().unwrap_or_default().to_string_lossy()));
        }
        let status = match manifest.status {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Error => "error",
        };
        eprintln!("{param_name} = {value}: {status}{}", manifest.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default());
        rows.push((value.clone(), status.to_string(), metrics));
        points.push(SweepPoint { value: value.clone(), status: manifest.status, error: manifest.error, checks: manifest.checks });
    }
    let csv = format!("sweep_{param_name}.csv");
    write_metrics_csv(&out.join(&csv), param_name, &rows)?;
    files.push(csv);
    let manifest = SweepManifest {
        experiment: experiment.to_string(),
        param: param_name.to_string(),
        key: key.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_s: started.elapsed().as_secs_f64(),
        points,
        files,
    };
    let path = out.join("sweep_manifest.json");
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(manifest)
}
