//! The named experiments. Each reads its keys from the run configuration,
//! writes CSV/JSON artifacts into the output directory, records acceptance
//! checks and returns summary metrics for sweeps.

use std::f64::consts::{PI, SQRT_2, TAU};
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anisoscat::fem::io::{write_far_field_csv, write_mesh, write_pattern_csv, write_solution_csv};
use anisoscat::fem::{
    generate_mesh, l2_distance, l2_norm, solve_on_mesh, transmission_residual, truncation_circle, FemParams, Mesh, MeshOptions, ScatterSolution,
};
use anisoscat::hodograph::{
    certify, degenerate_problem, divergence_identity, random_triple, Certificate, CertifyOptions, FnMatrix, FnScalar, GridSpec, LocalProblem,
    MlsField, ScalarJet, SigmaData,
};
use anisoscat::incident::{herglotz_fit as fit_density, BoundaryTarget, IncidentField};
use anisoscat::media::{bump_pushforward, constant_medium, nondegeneracy_scan, square_medium, Domain, MediumSpec};
use anisoscat::radial::{self, RadialProfile};
use anisoscat::specialfun::{bessel_j, bessel_j_prime};
use anisoscat::{FemError, Mat2, Point};
use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::manifest::RunContext;

pub const EXPERIMENTS: [&str; 9] = [
    "mie-validate",
    "square-nonscatter",
    "square-scatter-control",
    "pushforward-invisible",
    "radial-te",
    "hodograph-certify",
    "nondegeneracy-scan",
    "herglotz-fit",
    "corner-scatter",
];

/// Named scalar results of a run, in a fixed order.
pub type Metrics = Vec<(String, f64)>;

const FEM_KEYS: [&str; 5] = ["fem.hs", "fem.m", "fem.rc", "fem.n_theta", "output.solution"];
const FLOOR_KEYS: [&str; 2] = ["floor.value", "floor.h"];

/// Incidence angle of `(0.6, 0.8)`.
const ANGLE_06_08: f64 = 0.927_295_218_001_612_2;

/// Configuration keys accepted by `name`.
pub fn allowed_keys(name: &str) -> Result<Vec<&'static str>> {
    let mut keys: Vec<&'static str> = match name {
        "mie-validate" => vec!["k", "mie.n", "mie.radius", "mie.incidence", "mie.max_seconds"],
        "square-nonscatter" => vec!["square.a", "square.mode", "square.ratio", "square.decrease", "square.control_spread", "square.incidence"],
        "square-scatter-control" => vec!["k", "square.a", "square.incidence", "square.control_spread"],
        "pushforward-invisible" => {
            vec!["pushforward.eps", "pushforward.k", "pushforward.psi", "pushforward.incidence", "pushforward.source", "pushforward.factor"]
        }
        "corner-scatter" => vec!["k", "corner.a", "corner.n", "corner.incidence", "corner.factor"],
        "radial-te" => vec!["k", "radial.modes", "radial.k_max", "radial.grid", "radial.steps"],
        "hodograph-certify" => vec![
            "hodograph.fields",
            "hodograph.identity_fields",
            "hodograph.levels",
            "hodograph.grid",
            "hodograph.directions",
            "hodograph.c0_max",
            "hodograph.c2_max",
            "hodograph.fem_demo",
            "hodograph.fem_h",
        ],
        "nondegeneracy-scan" => vec!["k", "scan.a", "scan.radius", "scan.incidence", "scan.samples"],
        "herglotz-fit" => vec!["herglotz.k", "herglotz.ms", "herglotz.points", "herglotz.radius", "herglotz.ridge", "herglotz.incidence"],
        _ => bail!("unknown experiment `{name}` (known: {})", EXPERIMENTS.join(", ")),
    };
    if matches!(name, "mie-validate" | "square-nonscatter" | "square-scatter-control" | "pushforward-invisible" | "corner-scatter") {
        keys.extend(FEM_KEYS);
    }
    if matches!(name, "pushforward-invisible" | "corner-scatter") {
        keys.extend(FLOOR_KEYS);
    }
    Ok(keys)
}

/// Runs experiment `name` in `ctx`.
pub fn run_experiment(name: &str, ctx: &mut RunContext) -> Result<Metrics> {
    ctx.cfg.check_keys(&allowed_keys(name)?)?;
    std::fs::create_dir_all(&ctx.out).with_context(|| format!("creating {}", ctx.out.display()))?;
    match name {
        "mie-validate" => mie_validate(ctx),
        "square-nonscatter" => square_nonscatter(ctx),
        "square-scatter-control" => square_scatter_control(ctx),
        "pushforward-invisible" => pushforward_invisible(ctx),
        "radial-te" => radial_te(ctx),
        "hodograph-certify" => hodograph_certify(ctx),
        "nondegeneracy-scan" => scan(ctx),
        "herglotz-fit" => herglotz_fit(ctx),
        "corner-scatter" => corner_scatter(ctx),
        _ => bail!("unknown experiment `{name}`"),
    }
}

fn direction(angle: f64) -> Point {
    Point::new(angle.cos(), angle.sin())
}

fn fem_params(ctx: &RunContext, h: f64, m_default: Option<usize>, rc_default: Option<f64>) -> Result<FemParams> {
    let mut p = FemParams::new(h);
    p.m = ctx.cfg.get_opt("fem.m")?.or(m_default);
    p.rc = match ctx.cfg.get_opt::<f64>("fem.rc")? {
        Some(rc) if !(rc > 0.0) => bail!("`fem.rc` must be positive"),
        Some(rc) => Some(rc),
        None => rc_default,
    };
    p.n_theta = ctx.cfg.get("fem.n_theta", 256)?;
    if !(16..=1 << 16).contains(&p.n_theta) {
        bail!("`fem.n_theta` = {} outside [16, 65536]", p.n_theta);
    }
    Ok(p)
}

/// Mesh sizes, coarsest first.
fn mesh_levels(ctx: &RunContext, default: &[f64]) -> Result<Vec<f64>> {
    let mut hs = ctx.cfg.get_list_in("fem.hs", default, 1e-3, 0.5)?;
    hs.sort_by(|a, b| b.total_cmp(a));
    Ok(hs)
}

fn mesh_for(medium: &MediumSpec, params: &FemParams) -> Result<Mesh> {
    let (center, rc) = truncation_circle(medium, params);
    Ok(generate_mesh(center, rc, Some(&medium.domain), params.h, MeshOptions::default())?)
}

/// Solves on `mesh`; a singular system is retried once at `k + 10⁻⁶`.
fn solve_retry(
    ctx: &mut RunContext,
    mesh: &Mesh,
    medium: &MediumSpec,
    field: &dyn Fn(f64) -> Result<IncidentField>,
    k: f64,
    params: &FemParams,
) -> Result<ScatterSolution> {
    match solve_on_mesh(mesh.clone(), medium, &field(k)?, k, params) {
        Err(FemError::Singular(msg)) => {
            let k2 = k + 1e-6;
            ctx.warn(format!("singular system at k = {k} ({msg}); retrying at k = {k2}"));
            Ok(solve_on_mesh(mesh.clone(), medium, &field(k2)?, k2, params)?)
        }
        r => Ok(r?),
    }
}

fn record_far_field_warnings(ctx: &mut RunContext, sol: &ScatterSolution) {
    for w in &sol.far_field.warnings {
        ctx.warn(w.clone());
    }
}

fn dump_solution(ctx: &mut RunContext, tag: &str, sol: &ScatterSolution) -> Result<()> {
    if ctx.cfg.get("output.solution", false)? {
        write_mesh(&ctx.file(&format!("mesh_{tag}.txt")), &sol.mesh)?;
        write_solution_csv(&ctx.file(&format!("solution_{tag}.csv")), &sol.mesh, &sol.w)?;
    }
    Ok(())
}

fn csv_writer(ctx: &mut RunContext, name: &str, header: &str) -> Result<std::io::BufWriter<std::fs::File>> {
    let path = ctx.file(name);
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(f, "{header}")?;
    Ok(f)
}

fn write_json<T: Serialize + ?Sized>(ctx: &mut RunContext, name: &str, value: &T) -> Result<()> {
    let path = ctx.file(name);
    std::fs::write(&path, serde_json::to_string_pretty(value)? + "\n").with_context(|| format!("writing {}", path.display()))
}

fn metric(name: impl Into<String>, v: f64) -> (String, f64) {
    (name.into(), v)
}

/// `true` when every consecutive ratio `a[i] / a[i+1]` is at least `factor`.
fn decreases_by(values: &[f64], factor: f64) -> bool {
    values.windows(2).all(|w| w[0] >= factor * w[1])
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:.3e}")).collect::<Vec<_>>().join(", ")
}

// ---------------------------------------------------------------- Mie

struct MieRun {
    abs_error: f64,
    rel_error: f64,
    norm: f64,
    residual: f64,
    seconds: f64,
}

/// Separation-of-variables coefficients `c_m`, `|m| ≤ m_max`; modes whose
/// matching system is ill-conditioned are far beyond `kR√n` and dropped.
fn mie_coefficients(profile: &RadialProfile, k: f64, n: f64, m_max: i32) -> Result<Vec<(i32, Complex64)>> {
    let cutoff = k * profile.radius * n.sqrt() + 4.0;
    let mut out = Vec::new();
    for m in -m_max..=m_max {
        match radial::scattering_coeff(profile, m, k) {
            Ok(c) => out.push((m, c)),
            Err(_) if m.abs() as f64 > cutoff => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

fn mie_run(ctx: &mut RunContext, k: f64, n: f64, radius: f64, angle: f64, h: f64, write: bool) -> Result<MieRun> {
    let medium = constant_medium(Domain::disk(Point::zeros(), radius), Mat2::identity(), n, "mie disk")?;
    let params = fem_params(ctx, h, Some(24), Some(1.6 * radius))?;
    let profile = RadialProfile::constant(1.0, n, radius)?;
    let start = Instant::now();
    let mesh = mesh_for(&medium, &params)?;
    let sol = solve_retry(ctx, &mesh, &medium, &|k| Ok(IncidentField::plane(direction(angle), k)?), k, &params)?;
    let seconds = start.elapsed().as_secs_f64();
    record_far_field_warnings(ctx, &sol);
    let coeffs = mie_coefficients(&profile, sol.k, n, sol.m as i32 + 16)?;
    let oracle: Vec<Complex64> = sol.far_field.theta.iter().map(|&t| radial::mie_far_field(&coeffs, sol.k, angle, t)).collect();
    let abs_error = l2_distance(&sol.far_field.values, &oracle);
    let norm = l2_norm(&oracle);
    if write {
        let tag = format!("h{h}");
        write_far_field_csv(&ctx.file(&format!("far_field_{tag}.csv")), &sol.far_field)?;
        write_pattern_csv(&ctx.file(&format!("far_field_oracle_{tag}.csv")), &sol.far_field.theta, &oracle)?;
        dump_solution(ctx, &tag, &sol)?;
    }
    Ok(MieRun { abs_error, rel_error: abs_error / norm, norm, residual: sol.solve.residual, seconds })
}

fn mie_validate(ctx: &mut RunContext) -> Result<Metrics> {
    let k = ctx.cfg.get_in("k", 2.0, 1e-3, 50.0)?;
    let n = ctx.cfg.get_in("mie.n", 4.0, 1e-3, 100.0)?;
    let radius = ctx.cfg.get_in("mie.radius", 1.0, 1e-3, 10.0)?;
    let angle = ctx.cfg.get("mie.incidence", 0.0)?;
    let max_seconds = ctx.cfg.get("mie.max_seconds", 120.0)?;
    let hs = mesh_levels(ctx, &[0.01])?;
    let mut f = csv_writer(ctx, "mie_convergence.csv", "h,abs_error,rel_error,oracle_norm,solve_residual")?;
    let mut last = None;
    for &h in &hs {
        let r = mie_run(ctx, k, n, radius, angle, h, true)?;
        writeln!(f, "{h},{:.17e},{:.17e},{:.17e},{:.17e}", r.abs_error, r.rel_error, r.norm, r.residual)?;
        last = Some(r);
    }
    f.flush()?;
    let r = last.expect("at least one mesh level");
    ctx.check(
        "mie relative far-field error < 1%",
        r.rel_error < 0.01,
        format!("relative L2 error {:.3e} (absolute {:.3e})", r.rel_error, r.abs_error),
    );
    ctx.check("mie runtime", r.seconds < max_seconds, format!("{:.2} s for mesh, assembly, solve and far field (limit {max_seconds} s)", r.seconds));
    Ok(vec![metric("abs_error", r.abs_error), metric("rel_error", r.rel_error), metric("solve_residual", r.residual)])
}

/// Absolute far-field error of the reference Mie configuration, or `floor.value`.
fn discretization_floor(ctx: &mut RunContext) -> Result<f64> {
    if let Some(v) = ctx.cfg.get_opt::<f64>("floor.value")? {
        if !(v > 0.0) {
            bail!("`floor.value` must be positive");
        }
        return Ok(v);
    }
    let h = ctx.cfg.get_in("floor.h", 0.01, 1e-3, 0.5)?;
    let mut sub = RunContext::new(crate::config::Config::default(), &ctx.out, ctx.seed);
    sub.verbose = false;
    let r = mie_run(&mut sub, 2.0, 4.0, 1.0, 0.0, h, false)?;
    Ok(r.abs_error)
}

// ---------------------------------------------------------------- square

struct SquareLevel {
    h: f64,
    norm: f64,
    control: f64,
    max_value: f64,
    max_flux: f64,
}

fn square_levels(ctx: &mut RunContext, mode: Option<bool>, k_control: f64) -> Result<Vec<SquareLevel>> {
    let a = ctx.cfg.get_in("square.a", 2.0, 1e-2, 100.0)?;
    let angle = ctx.cfg.get("square.incidence", 0.0)?;
    let medium = square_medium(a)?;
    let hs = mesh_levels(ctx, &[0.04, 0.02, 0.01])?;
    let mut out = Vec::new();
    for &h in &hs {
        let params = fem_params(ctx, h, None, None)?;
        let mesh = mesh_for(&medium, &params)?;
        let control = solve_retry(ctx, &mesh, &medium, &|k| Ok(IncidentField::plane(direction(angle), k)?), k_control, &params)?;
        record_far_field_warnings(ctx, &control);
        let tag = format!("h{h}");
        write_far_field_csv(&ctx.file(&format!("far_field_control_{tag}.csv")), &control.far_field)?;
        let plane = IncidentField::plane(direction(angle), control.k)?;
        let control_res = transmission_residual(&control.mesh, &control.w, &plane, &medium)?;
        dump_solution(ctx, &format!("control_{tag}"), &control)?;
        let (norm, max_value, max_flux) = match mode {
            Some(sine) => {
                let v = if sine { IncidentField::square_mode_sin() } else { IncidentField::square_mode_cos() };
                let name = if sine { "sin" } else { "cos" };
                let sol = solve_on_mesh(mesh, &medium, &v, v.k(), &params)?;
                record_far_field_warnings(ctx, &sol);
                write_far_field_csv(&ctx.file(&format!("far_field_{name}_{tag}.csv")), &sol.far_field)?;
                dump_solution(ctx, &format!("{name}_{tag}"), &sol)?;
                let res = transmission_residual(&sol.mesh, &sol.w, &v, &medium)?;
                (sol.far_field.l2_norm, res.max_value, res.max_flux)
            }
            None => (f64::NAN, control_res.max_value, control_res.max_flux),
        };
        out.push(SquareLevel { h, norm, control: control.far_field.l2_norm, max_value, max_flux });
    }
    Ok(out)
}

fn control_spread(levels: &[SquareLevel]) -> f64 {
    let lo = levels.iter().map(|l| l.control).fold(f64::INFINITY, f64::min);
    let hi = levels.iter().map(|l| l.control).fold(0.0, f64::max);
    hi / lo - 1.0
}

fn square_nonscatter(ctx: &mut RunContext) -> Result<Metrics> {
    let modes: Vec<bool> = match ctx.cfg.get("square.mode", "both".to_string())?.as_str() {
        "cos" => vec![false],
        "sin" => vec![true],
        "both" => vec![false, true],
        other => bail!("`square.mode` = {other:?}: expected cos, sin or both"),
    };
    let ratio_max = ctx.cfg.get_in("square.ratio", 0.02, 0.0, 1.0)?;
    let factor = ctx.cfg.get_in("square.decrease", 3.0, 1.0, 1e6)?;
    let spread_max = ctx.cfg.get_in("square.control_spread", 0.1, 0.0, 10.0)?;
    let mut metrics = Vec::new();
    for sine in modes {
        let name = if sine { "sin" } else { "cos" };
        let levels = square_levels(ctx, Some(sine), PI * SQRT_2)?;
        let mut f = csv_writer(ctx, &format!("square_{name}.csv"), "h,far_field_norm,control_norm,ratio,max_value_jump,max_flux_jump")?;
        for l in &levels {
            writeln!(f, "{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", l.h, l.norm, l.control, l.norm / l.control, l.max_value, l.max_flux)?;
        }
        f.flush()?;
        let norms: Vec<f64> = levels.iter().map(|l| l.norm).collect();
        let ratios: Vec<f64> = levels.iter().map(|l| l.norm / l.control).collect();
        ctx.check(
            &format!("{name} mode far field below {ratio_max} x control"),
            ratios.iter().all(|&r| r <= ratio_max),
            format!("ratios {}", fmt_list(&ratios)),
        );
        if levels.len() > 1 {
            ctx.check(
                &format!("{name} mode far field decreases by x{factor} per halving"),
                decreases_by(&norms, factor),
                format!("norms {}", fmt_list(&norms)),
            );
        }
        let spread = control_spread(&levels);
        ctx.check(
            &format!("{name} run control stable within {}%", spread_max * 100.0),
            spread <= spread_max,
            format!("control norms {} (spread {:.2}%)", fmt_list(&levels.iter().map(|l| l.control).collect::<Vec<_>>()), spread * 100.0),
        );
        let last = levels.last().expect("at least one mesh level");
        metrics.push(metric(format!("{name}_norm"), last.norm));
        metrics.push(metric(format!("{name}_ratio"), last.norm / last.control));
        metrics.push(metric("control_norm", last.control));
    }
    metrics.dedup_by(|a, b| a.0 == b.0);
    Ok(metrics)
}

fn square_scatter_control(ctx: &mut RunContext) -> Result<Metrics> {
    let k = ctx.cfg.get_in("k", PI * SQRT_2, 1e-3, 50.0)?;
    let spread_max = ctx.cfg.get_in("square.control_spread", 0.1, 0.0, 10.0)?;
    let levels = square_levels(ctx, None, k)?;
    let mut f = csv_writer(ctx, "square_control.csv", "h,far_field_norm,max_value_jump,max_flux_jump")?;
    for l in &levels {
        writeln!(f, "{},{:.17e},{:.17e},{:.17e}", l.h, l.control, l.max_value, l.max_flux)?;
    }
    f.flush()?;
    let spread = control_spread(&levels);
    let controls: Vec<f64> = levels.iter().map(|l| l.control).collect();
    ctx.check(
        &format!("control far field stable within {}%", spread_max * 100.0),
        spread <= spread_max,
        format!("norms {} (spread {:.2}%)", fmt_list(&controls), spread * 100.0),
    );
    // The flux jump of a scattering configuration does not vanish under
    // refinement; it stays comparable to its coarse-mesh value.
    let fluxes: Vec<f64> = levels.iter().map(|l| l.max_flux).collect();
    let first = fluxes[0];
    ctx.check(
        "control transmission residual bounded away from zero",
        fluxes.iter().all(|&x| x >= 0.25 * first && x > 1e-3),
        format!("max flux jumps {}", fmt_list(&fluxes)),
    );
    let last = levels.last().expect("at least one mesh level");
    Ok(vec![metric("control_norm", last.control), metric("max_flux_jump", last.max_flux)])
}

// ---------------------------------------------------------------- pushforward

fn pushforward_invisible(ctx: &mut RunContext) -> Result<Metrics> {
    let eps_list = ctx.cfg.get_list_in("pushforward.eps", &[0.02, 0.05], 0.0, 0.2)?;
    let ks = ctx.cfg.get_list_in("pushforward.k", &[2.0, 5.0], 1e-3, 50.0)?;
    let psi = direction(ctx.cfg.get("pushforward.psi", 0.0)?);
    let angle = ctx.cfg.get("pushforward.incidence", 0.0)?;
    let source: Vec<f64> = ctx.cfg.get_list("pushforward.source", &[-1.0, 0.3])?;
    let factor = ctx.cfg.get_in("pushforward.factor", 2.0, 0.0, 1e6)?;
    if source.len() != 2 {
        bail!("`pushforward.source` needs two coordinates");
    }
    let source = Point::new(source[0], source[1]);
    let hs = mesh_levels(ctx, &[0.02, 0.01])?;
    let floor = discretization_floor(ctx)?;

    let mut f = csv_writer(ctx, "pushforward.csv", "eps,k,incident,h,far_field_norm,solve_residual")?;
    let mut worst: [f64; 2] = [0.0, 0.0];
    let mut all_below = true;
    let mut all_decrease = true;
    let mut detail = Vec::new();
    for &eps in &eps_list {
        let medium = bump_pushforward(eps, psi)?;
        for &k in &ks {
            for (kind, label) in [(0usize, "plane"), (1, "point")] {
                let field = |k: f64| -> Result<IncidentField> {
                    Ok(if kind == 0 { IncidentField::plane(direction(angle), k)? } else { IncidentField::point_source(source, k)? })
                };
                let mut norms = Vec::new();
                for &h in &hs {
                    let params = fem_params(ctx, h, None, None)?;
                    let mesh = mesh_for(&medium, &params)?;
                    let sol = solve_retry(ctx, &mesh, &medium, &field, k, &params)?;
                    record_far_field_warnings(ctx, &sol);
                    let tag = format!("eps{eps}_k{k}_{label}_h{h}");
                    write_far_field_csv(&ctx.file(&format!("far_field_{tag}.csv")), &sol.far_field)?;
                    dump_solution(ctx, &tag, &sol)?;
                    writeln!(f, "{eps},{k},{label},{h},{:.17e},{:.17e}", sol.far_field.l2_norm, sol.solve.residual)?;
                    norms.push(sol.far_field.l2_norm);
                }
                worst[kind] = worst[kind].max(*norms.last().expect("mesh level"));
                // A contrast-free medium (eps = 0) has identically zero data.
                let below = norms.iter().all(|&x| x <= factor * floor);
                let decrease = norms.iter().all(|&x| x == 0.0) || norms.windows(2).all(|w| w[1] < w[0]);
                all_below &= below;
                all_decrease &= decrease;
                detail.push(format!("eps={eps} k={k} {label}: {}", fmt_list(&norms)));
            }
        }
    }
    f.flush()?;
    let detail = detail.join("; ");
    ctx.check(&format!("pushforward far fields within {factor} x floor"), all_below, format!("floor {floor:.3e}; {detail}"));
    if hs.len() > 1 {
        ctx.check("pushforward far fields decrease under refinement", all_decrease, detail);
    }
    Ok(vec![metric("max_norm_plane", worst[0]), metric("max_norm_point", worst[1]), metric("floor", floor)])
}

// ---------------------------------------------------------------- corner

fn corner_scatter(ctx: &mut RunContext) -> Result<Metrics> {
    let k = ctx.cfg.get_in("k", 3.0, 1e-3, 50.0)?;
    let a = ctx.cfg.get_in("corner.a", 2.0, 1e-2, 100.0)?;
    let n = ctx.cfg.get_in("corner.n", 1.5, 1e-2, 100.0)?;
    let angle = ctx.cfg.get("corner.incidence", ANGLE_06_08)?;
    let factor = ctx.cfg.get_in("corner.factor", 10.0, 0.0, 1e6)?;
    let medium = constant_medium(Domain::unit_square(), Mat2::identity() * a, n, "corner square")?;
    let hs = mesh_levels(ctx, &[0.04, 0.02, 0.01])?;
    let floor = discretization_floor(ctx)?;

    let v = IncidentField::plane(direction(angle), k)?;
    let corners = medium.domain.vertices();
    let nondegenerate = corners.iter().all(|&c| v.eval(c).map(|(val, g)| val.norm() > 0.0 && (g[0].norm() + g[1].norm()) > 0.0).unwrap_or(false));
    ctx.check("incident field and gradient nonzero at every corner", nondegenerate, format!("{} corners", corners.len()));

    let mut f = csv_writer(ctx, "corner.csv", "h,far_field_norm,solve_residual")?;
    let mut norms = Vec::new();
    for &h in &hs {
        let params = fem_params(ctx, h, None, None)?;
        let mesh = mesh_for(&medium, &params)?;
        let sol = solve_retry(ctx, &mesh, &medium, &|k| Ok(IncidentField::plane(direction(angle), k)?), k, &params)?;
        record_far_field_warnings(ctx, &sol);
        let tag = format!("h{h}");
        write_far_field_csv(&ctx.file(&format!("far_field_{tag}.csv")), &sol.far_field)?;
        dump_solution(ctx, &tag, &sol)?;
        writeln!(f, "{h},{:.17e},{:.17e}", sol.far_field.l2_norm, sol.solve.residual)?;
        norms.push(sol.far_field.l2_norm);
    }
    f.flush()?;
    ctx.check(
        &format!("corner far field at least {factor} x floor"),
        norms.iter().all(|&x| x >= factor * floor),
        format!("norms {} vs floor {floor:.3e}", fmt_list(&norms)),
    );
    Ok(vec![metric("far_field_norm", *norms.last().expect("mesh level")), metric("floor", floor)])
}

// ---------------------------------------------------------------- radial

/// Closed-form TE determinant of the homogeneous disk `a = 1`, `n = 4`, `R = 1`.
fn closed_form_determinant(m: i32, k: f64) -> f64 {
    bessel_j(m, 2.0 * k) * k * bessel_j_prime(m, k) - 2.0 * k * bessel_j_prime(m, 2.0 * k) * bessel_j(m, k)
}

fn closed_form_roots(m: i32, ks: &[f64]) -> Vec<f64> {
    let d = |k| closed_form_determinant(m, k);
    let mut roots = Vec::new();
    for w in ks.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let mut flo = d(lo);
        if flo * d(hi) >= 0.0 {
            continue;
        }
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            let fm = d(mid);
            if fm * flo <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
                flo = fm;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

fn cos_profile() -> Result<RadialProfile> {
    Ok(RadialProfile::new(Arc::new(|_| 1.0), Arc::new(|r: f64| 2.0 + (PI * r).cos()), 1.0)?)
}

fn radial_te(ctx: &mut RunContext) -> Result<Metrics> {
    let modes: Vec<i32> = ctx.cfg.get_list("radial.modes", &[0, 1, 2])?;
    if modes.is_empty() || modes.iter().any(|m| m.abs() > 50) {
        bail!("`radial.modes` must list orders with |m| <= 50");
    }
    let constant = RadialProfile::constant(1.0, 4.0, 1.0)?;
    let cosine = cos_profile()?;
    if let Some(k) = ctx.cfg.get_opt::<f64>("k")? {
        return radial_point(ctx, &modes, &constant, &cosine, k);
    }
    let k_max = ctx.cfg.get_in("radial.k_max", 10.0, 0.1, 100.0)?;
    let grid: usize = ctx.cfg.get("radial.grid", 1000)?;
    let steps: usize = ctx.cfg.get("radial.steps", radial::DEFAULT_STEPS)?;
    if grid < 10 || steps < 64 {
        bail!("`radial.grid` must be at least 10 and `radial.steps` at least 64");
    }
    let ks: Vec<f64> = (1..=grid).map(|i| k_max * i as f64 / grid as f64).collect();
    let (k_lo, k_hi) = (ks[0], k_max);

    let mut roots_csv = csv_writer(ctx, "radial_roots.csv", "profile,m,k,det_residual,abs_c_m,oracle_k")?;
    let mut metrics = Vec::new();
    let mut worst_match: f64 = 0.0;
    let mut counts_match = true;
    let mut worst_c: f64 = 0.0;
    let mut min_roots = usize::MAX;
    let mut worst_unit: f64 = 0.0;
    let mut worst_stability: f64 = 0.0;
    let mut stable_counts = true;
    for (label, profile) in [("constant", &constant), ("cosine", &cosine)] {
        let mut sweep = Vec::new();
        for &m in &modes {
            let search = radial::find_te_steps(profile, m, k_lo, k_hi, grid, steps)?;
            for w in &search.warnings {
                ctx.warn(format!("{label}: {w}"));
            }
            let roots: Vec<f64> = search.roots.iter().map(|r| r.k).collect();
            if label == "constant" {
                min_roots = min_roots.min(roots.len());
            }
            let oracle = if label == "constant" {
                let o = closed_form_roots(m, &ks);
                counts_match &= o.len() == roots.len();
                worst_match = roots.iter().zip(&o).map(|(a, b)| (a - b).abs()).fold(worst_match, f64::max);
                o
            } else {
                let fine = radial::find_te_steps(profile, m, k_lo, k_hi, grid, 2 * steps)?;
                let o: Vec<f64> = fine.roots.iter().map(|r| r.k).collect();
                stable_counts &= o.len() == roots.len();
                worst_stability = roots.iter().zip(&o).map(|(a, b)| (a - b).abs()).fold(worst_stability, f64::max);
                o
            };
            for (i, r) in search.roots.iter().enumerate() {
                let c = radial::scattering_coeff(profile, m, r.k)?;
                worst_c = worst_c.max(c.norm());
                let o = oracle.get(i).map_or(String::new(), |v| format!("{v:.17e}"));
                writeln!(roots_csv, "{label},{m},{:.17e},{:.17e},{:.17e},{o}", r.k, r.residual, c.norm())?;
            }
            metrics.push(metric(format!("{label}_roots_m{m}"), roots.len() as f64));
            let rows = radial::radial_sweep(profile, m, &ks)?;
            worst_unit = rows.iter().map(|r| (r.unitarity - 1.0).abs()).fold(worst_unit, f64::max);
            sweep.extend(rows);
        }
        radial::write_sweep_csv(&ctx.file(&format!("radial_sweep_{label}.csv")), &sweep)?;
        metrics.push(metric(format!("{label}_integral_condition"), radial::integral_condition(profile).value));
    }
    roots_csv.flush()?;
    ctx.check(
        "constant profile roots match the closed form to 1e-8",
        counts_match && worst_match <= 1e-8,
        format!("max deviation {worst_match:.2e}, counts match: {counts_match}"),
    );
    ctx.check("|c_m| < 1e-8 at every root", worst_c < 1e-8, format!("max |c_m| {worst_c:.2e}"));
    ctx.check("| |1 + 2c_m| - 1 | <= 1e-8 on the sweep", worst_unit <= 1e-8, format!("max deviation {worst_unit:.2e}"));
    ctx.check("constant profile has at least 3 roots per mode", min_roots >= 3, format!("fewest roots {min_roots}"));
    ctx.check(
        "cosine profile roots stable to 1e-6 under step halving",
        stable_counts && worst_stability <= 1e-6,
        format!("max shift {worst_stability:.2e}, counts match: {stable_counts}"),
    );
    Ok(metrics)
}

/// Values at a single wave number `k`, one set of columns per mode.
fn radial_point(ctx: &mut RunContext, modes: &[i32], constant: &RadialProfile, cosine: &RadialProfile, k: f64) -> Result<Metrics> {
    if !(k > 0.0 && k <= 100.0) {
        bail!("`k` = {k} outside (0, 100]");
    }
    let mut metrics = Vec::new();
    let mut rows = Vec::new();
    let mut worst: f64 = 0.0;
    for (label, profile) in [("constant", constant), ("cosine", cosine)] {
        for &m in modes {
            let r = radial::radial_sweep(profile, m, &[k])?.pop().expect("one row");
            worst = worst.max((r.unitarity - 1.0).abs());
            metrics.push(metric(format!("{label}_d_m{m}"), r.d));
            metrics.push(metric(format!("{label}_abs_c_m{m}"), r.c.norm()));
            metrics.push(metric(format!("{label}_unitarity_m{m}"), r.unitarity));
            rows.push(r);
        }
    }
    radial::write_sweep_csv(&ctx.file("radial_point.csv"), &rows)?;
    ctx.check("| |1 + 2c_m| - 1 | <= 1e-8", worst <= 1e-8, format!("max deviation {worst:.2e}"));
    Ok(metrics)
}

// ---------------------------------------------------------------- hodograph

#[derive(Serialize)]
struct IdentityRow {
    field: usize,
    c0: f64,
    c2: f64,
    study: anisoscat::hodograph::IdentityStudy,
}

/// The sine-mode scattered field of the square, fitted from FEM nodal data,
/// as a local problem at the bottom edge midpoint.
fn fem_local_problem(ctx: &mut RunContext, h: f64) -> Result<LocalProblem> {
    let medium = square_medium(2.0)?;
    let v = IncidentField::square_mode_sin();
    let params = fem_params(ctx, h, None, None)?;
    let mesh = mesh_for(&medium, &params)?;
    let sol = solve_on_mesh(mesh, &medium, &v, v.k(), &params)?;
    let tol = 1e-12;
    let (pts, vals): (Vec<Point>, Vec<f64>) = sol
        .mesh
        .vertices
        .iter()
        .zip(&sol.w)
        .filter(|(p, _)| (-tol..=1.0 + tol).contains(&p.x) && (-tol..=1.0 + tol).contains(&p.y))
        .map(|(p, w)| (*p, w.re))
        .unzip();
    let w = MlsField::new(pts, vals, 2.5 * h)?;
    let vfield = FnScalar::new(|x: Point| {
        let (s1, c1) = (PI * x.x).sin_cos();
        let (s2, c2) = (PI * x.y).sin_cos();
        ScalarJet {
            value: s1 * s2,
            gradient: Point::new(PI * c1 * s2, PI * s1 * c2),
            hessian: Mat2::new(-PI * PI * s1 * s2, PI * PI * c1 * c2, PI * PI * c1 * c2, -PI * PI * s1 * s2),
        }
    });
    Ok(LocalProblem::from_physical(
        Arc::new(FnMatrix::constant(Mat2::identity() * 2.0)),
        Arc::new(FnScalar::constant(2.0)),
        Arc::new(vfield),
        Arc::new(w),
        v.k(),
        Point::new(0.5, 0.0),
        Some(Point::new(0.0, -1.0)),
        0.1,
    )?)
}

fn hodograph_certify(ctx: &mut RunContext) -> Result<Metrics> {
    let fields: usize = ctx.cfg.get("hodograph.fields", 100)?;
    let identity_fields: usize = ctx.cfg.get("hodograph.identity_fields", 20)?;
    let levels: Vec<usize> = ctx.cfg.get_list("hodograph.levels", &[8, 16, 32, 64])?;
    let grid: usize = ctx.cfg.get("hodograph.grid", 16)?;
    let directions: usize = ctx.cfg.get("hodograph.directions", 1000)?;
    let c0_max = ctx.cfg.get_in("hodograph.c0_max", 4.0, 1.0, 100.0)?;
    let c2_max = ctx.cfg.get_in("hodograph.c2_max", 3.0, 1.0, 100.0)?;
    if fields == 0 || identity_fields > fields || grid < 4 || !grid.is_multiple_of(2) || directions == 0 {
        bail!("need 0 < identity_fields <= fields, an even grid >= 4 and at least one direction");
    }
    if levels.len() < 2 || levels.iter().any(|&n| n % levels[0] != 0 || n % 2 != 0) {
        bail!("`hodograph.levels` needs at least two even multiples of the first level");
    }

    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let triples: Vec<_> = (0..fields).map(|_| random_triple(&mut rng, c0_max, c2_max)).collect();
    let seed = ctx.seed;
    let opts = |i: usize, sigma: SigmaData| CertifyOptions { grid: GridSpec::square(grid), directions, seed: seed.wrapping_add(i as u64), sigma };

    let mut certs: Vec<Certificate> = Vec::with_capacity(fields);
    let mut manufactured: Vec<Certificate> = Vec::with_capacity(fields);
    for (i, t) in triples.iter().enumerate() {
        certs.push(certify(&t.problem, &opts(i, SigmaData::Field))?);
        manufactured.push(certify(&t.problem, &opts(i, SigmaData::Manufactured))?);
    }
    write_json(ctx, "certificates.json", &certs)?;
    write_json(ctx, "certificates_manufactured.json", &manufactured)?;
    let passed = certs.iter().filter(|c| c.pass).count();
    ctx.check("random-field certificates pass", passed == fields, format!("{passed}/{fields} PASS"));

    let mut studies = Vec::new();
    for (i, t) in triples.iter().take(identity_fields).enumerate() {
        let study = divergence_identity(&t.problem, &levels)?;
        studies.push(IdentityRow { field: i, c0: t.c0, c2: t.c2, study });
    }
    let mut f = csv_writer(ctx, "identity.csv", "field,n,step,max_error,order")?;
    for r in &studies {
        for l in &r.study.levels {
            writeln!(f, "{},{},{:.17e},{:.17e},{:.17e}", r.field, l.n, l.step, l.max_error, r.study.order)?;
        }
    }
    f.flush()?;
    let orders: Vec<f64> = studies.iter().map(|r| r.study.order).collect();
    let (omin, omax) = orders.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &o| (a.min(o), b.max(o)));
    ctx.check("divergence identity order 2.0 +- 0.3", orders.iter().all(|o| (o - 2.0).abs() <= 0.3), format!("orders in [{omin:.3}, {omax:.3}]"));
    let sub = &certs[..identity_fields];
    let jac = sub.iter().map(|c| c.residuals.jacobian).fold(0.0, f64::max);
    let push = sub.iter().map(|c| c.residuals.pushforward).fold(0.0, f64::max);
    let quad = sub.iter().map(|c| c.residuals.quadratic_form).fold(0.0, f64::max);
    ctx.check("jacobian and pushforward identities to 1e-10", jac <= 1e-10 && push <= 1e-10, format!("max {jac:.2e}, {push:.2e}"));
    ctx.check("quadratic-form identity to 1e-12", quad <= 1e-12, format!("max relative defect {quad:.2e}"));

    let degenerate = certify(&degenerate_problem(), &opts(fields, SigmaData::Field))?;
    write_json(ctx, "certificate_degenerate.json", &degenerate)?;
    let at_p = degenerate.failures.iter().all(|f| f.y[0].abs() < 1e-12 && f.y[1].abs() < 1e-12);
    ctx.check(
        "degenerate field fails at the boundary point",
        !degenerate.pass && !degenerate.failures.is_empty() && at_p,
        format!("{} failing node(s): {:?}", degenerate.failures.len(), degenerate.failures.iter().map(|f| f.y).collect::<Vec<_>>()),
    );

    let min_margin = manufactured.iter().map(|c| c.oblique.margin).fold(f64::INFINITY, f64::min);
    let max_b = manufactured.iter().map(|c| c.residuals.boundary).fold(0.0, f64::max);
    let all_pass = manufactured.iter().all(|c| c.pass);
    ctx.check(
        "manufactured boundary data: -b1 > c0^-1 c2^-3 with positive margin",
        all_pass && min_margin > 0.0 && max_b <= 1e-10,
        format!("min margin {min_margin:.3e}, max |b| {max_b:.2e}"),
    );

    let mut metrics = vec![
        metric("certificates_passed", passed as f64),
        metric("min_order", omin),
        metric("max_order", omax),
        metric("min_manufactured_margin", min_margin),
    ];
    if ctx.cfg.get("hodograph.fem_demo", true)? {
        let h = ctx.cfg.get_in("hodograph.fem_h", 0.02, 2e-3, 0.1)?;
        let pb = fem_local_problem(ctx, h)?;
        let cert = certify(&pb, &opts(fields + 1, SigmaData::Field))?;
        write_json(ctx, "certificate_fem.json", &cert)?;
        ctx.note(format!(
            "finite-element sine-mode certificate: pass = {}, oblique margin {:.3e}, max |b| on the flat boundary {:.3e}",
            cert.pass, cert.oblique.margin, cert.residuals.boundary
        ));
        metrics.push(metric("fem_margin", cert.oblique.margin));
    }
    Ok(metrics)
}

// ---------------------------------------------------------------- scan and fit

fn scan(ctx: &mut RunContext) -> Result<Metrics> {
    let k = ctx.cfg.get_in("k", 2.0, 1e-3, 50.0)?;
    let a = ctx.cfg.get_in("scan.a", 2.0, 1e-2, 100.0)?;
    let radius = ctx.cfg.get_in("scan.radius", 1.0, 1e-3, 10.0)?;
    let angle = ctx.cfg.get("scan.incidence", ANGLE_06_08)?;
    let samples: usize = ctx.cfg.get("scan.samples", 720)?;
    let medium = constant_medium(Domain::disk(Point::zeros(), radius), Mat2::identity() * a, 1.0, "scan disk")?;
    let xi = direction(angle);
    let v = IncidentField::plane(xi, k)?;
    let report = nondegeneracy_scan(&medium, &v, samples)?;
    let mut f = csv_writer(ctx, "scan.csv", "t,x,y,nu_x,nu_y,re,im,abs")?;
    for s in &report.samples {
        writeln!(
            f,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            s.t,
            s.point.x,
            s.point.y,
            s.normal.x,
            s.normal.y,
            s.value.re,
            s.value.im,
            s.value.norm()
        )?;
    }
    f.flush()?;
    let mut z = csv_writer(ctx, "scan_zeros.csv", "t,x,y,nu_x,nu_y,nu_dot_xi")?;
    for s in &report.zeros {
        writeln!(z, "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}", s.t, s.point.x, s.point.y, s.normal.x, s.normal.y, s.normal.dot(&xi))?;
    }
    z.flush()?;
    let resolution = TAU / samples as f64;
    let worst = report.zeros.iter().map(|s| s.normal.dot(&xi).abs().asin()).fold(0.0, f64::max);
    ctx.check("exactly two zeros", report.zeros.len() == 2 && !report.identically_zero, format!("{} zeros", report.zeros.len()));
    ctx.check(
        "zeros at normals orthogonal to the incidence direction",
        !report.zeros.is_empty() && worst <= resolution,
        format!("max angular deviation {worst:.2e} rad (resolution {resolution:.2e})"),
    );
    Ok(vec![metric("zeros", report.zeros.len() as f64), metric("max_angle_error", worst)])
}

fn herglotz_fit(ctx: &mut RunContext) -> Result<Metrics> {
    let k = ctx.cfg.get_in("herglotz.k", 5.0, 1e-3, 50.0)?;
    let ms: Vec<usize> = ctx.cfg.get_list("herglotz.ms", &[8, 16, 32, 64])?;
    let points: usize = ctx.cfg.get("herglotz.points", 256)?;
    let radius = ctx.cfg.get_in("herglotz.radius", 1.0, 1e-3, 10.0)?;
    let ridge = ctx.cfg.get_in("herglotz.ridge", 1e-12, 0.0, 1.0)?;
    let angle = ctx.cfg.get("herglotz.incidence", 0.31)?;
    if ms.is_empty() || ms.iter().any(|&m| m == 0 || 2 * m > points) {
        bail!("every M in `herglotz.ms` must satisfy 0 < M <= points / 2");
    }
    let pts: Vec<Point> = (0..points).map(|i| radius * direction(TAU * i as f64 / points as f64)).collect();
    let target = IncidentField::plane(direction(angle), k)?;
    let targets = BoundaryTarget::sample(&target, &pts)?;
    let mut f = csv_writer(ctx, "herglotz_fit.csv", "m,residual,singular_ratio")?;
    let mut residuals = Vec::new();
    let mut metrics = Vec::new();
    for &m in &ms {
        let fit = fit_density(&targets, k, m, ridge).map_err(|e| anyhow!("M = {m}: {e}"))?;
        fit.density.write_csv(&ctx.file(&format!("herglotz_density_m{m}.csv")))?;
        writeln!(f, "{m},{:.17e},{:.17e}", fit.residual, fit.singular_ratio)?;
        residuals.push(fit.residual);
        metrics.push(metric(format!("residual_m{m}"), fit.residual));
    }
    f.flush()?;
    ctx.check("herglotz residual strictly decreasing in M", residuals.windows(2).all(|w| w[1] < w[0]), format!("residuals {}", fmt_list(&residuals)));
    Ok(metrics)
}

/// Writes `rows` of `(column, value)` metrics to a CSV with the given leading column.
pub fn write_metrics_csv(path: &Path, lead: &str, rows: &[(String, String, Option<Metrics>)]) -> Result<()> {
    let mut cols: Vec<String> = Vec::new();
    for (_, _, m) in rows {
        for (name, _) in m.iter().flatten() {
            if !cols.contains(name) {
                cols.push(name.clone());
            }
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?);
    writeln!(f, "{lead},status{}", cols.iter().map(|c| format!(",{c}")).collect::<String>())?;
    for (value, status, m) in rows {
        write!(f, "{value},{status}")?;
        for c in &cols {
            match m.as_ref().and_then(|m| m.iter().find(|(n, _)| n == c)) {
                Some((_, v)) => write!(f, ",{v:.17e}")?,
                None => write!(f, ",")?,
            }
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Config;

    fn ctx(text: &str, dir: &Path) -> RunContext {
        let mut c = RunContext::new(Config::parse(text).unwrap(), dir, 1);
        c.verbose = false;
        c
    }

    fn tmp(name: &str) -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!("expcli-unit-{name}-{}", std::process::id()));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn unknown_experiment_and_keys_are_rejected() {
        let d = tmp("keys");
        assert!(run_experiment("nope", &mut ctx("", &d)).is_err());
        assert!(run_experiment("herglotz-fit", &mut ctx("bogus = 1", &d)).is_err());
    }

    #[test]
    fn closed_form_roots_are_sign_changes() {
        let ks: Vec<f64> = (1..=1000).map(|i| i as f64 / 100.0).collect();
        for m in 0..3 {
            let roots = closed_form_roots(m, &ks);
            assert!(roots.len() >= 3);
            for r in roots {
                let d = |k| closed_form_determinant(m, k);
                assert!(d(r - 1e-9) * d(r + 1e-9) <= 0.0);
            }
        }
    }

    #[test]
    fn herglotz_and_scan_experiments_pass() {
        let d = tmp("fit");
        let mut c = ctx("", &d);
        run_experiment("herglotz-fit", &mut c).unwrap();
        assert!(c.checks().iter().all(|ch| ch.pass), "{:?}", c.checks());
        let mut c = ctx("", &d);
        let m = run_experiment("nondegeneracy-scan", &mut c).unwrap();
        assert!(c.checks().iter().all(|ch| ch.pass), "{:?}", c.checks());
        assert_eq!(m[0], ("zeros".to_string(), 2.0));
    }

    #[test]
    fn metrics_csv_has_union_of_columns() {
        let d = tmp("csv");
        let p = d.join("m.csv");
        let rows = vec![
            ("1".to_string(), "pass".to_string(), Some(vec![metric("a", 1.0)])),
            ("2".to_string(), "error".to_string(), None),
            ("3".to_string(), "fail".to_string(), Some(vec![metric("a", 2.0), metric("b", 3.0)])),
        ];
        write_metrics_csv(&p, "h", &rows).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "h,status,a,b");
        assert_eq!(lines[2], "2,error,,");
        assert!(lines[1].ends_with(','));
    }
}
