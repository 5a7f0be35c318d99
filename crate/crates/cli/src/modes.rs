use std::io::Write;
use std::path::Path;

use rackpinion_core::casimir::{builtin_kernels, load_kernel_file};
use rackpinion_core::dynamics::integrate_with;
use rackpinion_core::io::{fmt_f64, write_grid_file, GridFormat};
use rackpinion_core::load::load_bounds;
use rackpinion_core::orbit::mean_velocity;
use rackpinion_core::stability::largest_lyapunov_with;
use rackpinion_core::sweep::{run_grid, Axis, DEFAULT_PERIOD_BUDGET};
use rackpinion_core::{
    classify_orbit, critical_load, force_amplitude, CriticalLoadOptions, DeltaMode, ForceKernel,
    GridKind, GridSpec, SweepOptions,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Mode, Resolved, RunConfig};
use crate::CliError;

type Out<'a> = &'a mut dyn Write;

pub(crate) fn dispatch(cfg: &RunConfig, out: Out, err: Out) -> Result<(), CliError> {
    match cfg.mode.expect("mode set before dispatch") {
        Mode::Simulate => simulate(cfg, out),
        Mode::Classify => classify(cfg, out),
        Mode::Basin | Mode::DriveMap => grid(cfg, out),
        Mode::Lyapunov => lyapunov(cfg, out),
        Mode::CriticalLoad => critical(cfg, out),
        Mode::Force => force(cfg, out, err),
    }
}

fn core<T>(r: rackpinion_core::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::from_core)
}

/// Resolved configuration embedded in every output.
fn echo(cfg: &RunConfig, resolved: Option<&Resolved>) -> Value {
    json!({
        "config": cfg,
        "resolved": resolved,
        "version": env!("CARGO_PKG_VERSION"),
    })
}

fn line(out: Out, key: &str, value: f64) -> Result<(), CliError> {
    writeln!(out, "{key} = {}", fmt_f64(value))?;
    Ok(())
}

/// Output format from the config, else the file extension, else `fallback`.
fn format_for(cfg: &RunConfig, path: &Path, fallback: GridFormat) -> GridFormat {
    cfg.output
        .format
        .or_else(|| GridFormat::from_path(path))
        .unwrap_or(fallback)
}

fn write_json<T: Serialize>(path: &Path, doc: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// `# tag`, `# config {...}`, header, then rows of floats.
fn series_csv(
    tag: &str,
    echo: &Value,
    header: &str,
    rows: impl Iterator<Item = Vec<f64>>,
) -> String {
    let mut s = format!("# {tag}\n# config {echo}\n{header}\n");
    for r in rows {
        let cells: Vec<String> = r.into_iter().map(fmt_f64).collect();
        s.push_str(&cells.join(","));
        s.push('\n');
    }
    s
}

/// Some modes only produce a JSON document.
fn json_only(cfg: &RunConfig, path: &Path) -> Result<(), CliError> {
    match format_for(cfg, path, GridFormat::Json) {
        GridFormat::Json => Ok(()),
        GridFormat::Csv => Err(CliError::Config(format!(
            "`output.format`: mode {} writes json only",
            cfg.mode.map_or("?", |m| m.name())
        ))),
    }
}

fn simulate(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let resolved = cfg.resolve()?;
    let p = resolved.reduced;
    let s0 = cfg.initial_state();
    let sim = &cfg.simulate;
    if sim.stride == 0 {
        return Err(CliError::Config("`simulate.stride` must be >= 1".into()));
    }
    let traj = core(integrate_with(
        &s0,
        &p,
        s0.tau + sim.tau_end,
        &cfg.numerics.integrator(),
    ))?;
    let last = *traj.last().expect("nonempty trajectory");
    writeln!(out, "samples = {}", traj.len())?;
    line(out, "step", traj.step)?;
    line(out, "final_tau", last.tau)?;
    line(out, "final_u", last.u)?;
    line(out, "final_v", last.v)?;

    if let Some(path) = &cfg.output.path {
        let echo = echo(cfg, Some(&resolved));
        let kept = traj.samples.iter().step_by(sim.stride);
        match format_for(cfg, path, GridFormat::Csv) {
            GridFormat::Csv => write_text(
                path,
                &series_csv(
                    "rackpinion-trajectory v1",
                    &echo,
                    "tau,u,v",
                    kept.map(|s| vec![s.tau, s.u, s.v]),
                ),
            )?,
            GridFormat::Json => write_json(
                path,
                &json!({
                    "echo": echo,
                    "step": traj.step,
                    "samples": kept.collect::<Vec<_>>(),
                }),
            )?,
        }
    }
    Ok(())
}

fn classify(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let resolved = cfg.resolve()?;
    let p = resolved.reduced;
    let summary = core(classify_orbit(
        &p,
        &cfg.initial_state(),
        &cfg.numerics.classify(),
    ))?;
    writeln!(out, "{}", summary.class)?;
    line(out, "residual", summary.residual)?;
    writeln!(out, "period = {}", summary.period)?;
    line(out, "mean_velocity", summary.mean_velocity)?;
    let quantized = if summary.class.is_rotating() {
        let physical = resolved
            .physical
            .as_ref()
            .map(|(phys, drive)| (phys.corrugation_wavelength, drive));
        let v = core(mean_velocity(&summary, &p, physical))?;
        line(out, "quantized_velocity", v.reduced)?;
        if let Some(x) = v.physical {
            line(out, "physical_velocity", x)?;
        }
        Some(v)
    } else {
        None
    };
    line(out, "delta", summary.delta)?;
    line(out, "identity_residual", summary.identity_residual)?;
    if let Some(l) = summary.lyapunov {
        line(out, "lyapunov", l)?;
    }
    writeln!(out, "transient_periods = {}", summary.transient_used)?;

    if let Some(path) = &cfg.output.path {
        json_only(cfg, path)?;
        write_json(
            path,
            &json!({
                "echo": echo(cfg, Some(&resolved)),
                "summary": summary,
                "quantized_velocity": quantized,
            }),
        )?;
    }
    Ok(())
}

fn lyapunov(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let resolved = cfg.resolve()?;
    let l = &cfg.lyapunov;
    let r = core(largest_lyapunov_with(
        &resolved.reduced,
        &cfg.initial_state(),
        l.horizon,
        l.renorm_interval,
        l.direction,
        &cfg.numerics.integrator(),
    ))?;
    line(out, "lambda_max", r.lambda_max)?;
    line(out, "horizon", r.horizon)?;
    line(out, "renorm_interval", r.renorm_interval)?;
    writeln!(
        out,
        "chaotic = {}",
        r.is_chaotic(cfg.numerics.chaos_threshold)
    )?;

    if let Some(path) = &cfg.output.path {
        let echo = echo(cfg, Some(&resolved));
        match format_for(cfg, path, GridFormat::Csv) {
            GridFormat::Csv => write_text(
                path,
                &series_csv(
                    "rackpinion-lyapunov v1",
                    &echo,
                    "tau,lambda",
                    r.convergence_history
                        .iter()
                        .enumerate()
                        .map(|(i, &x)| vec![(i + 1) as f64 * r.renorm_interval, x]),
                ),
            )?,
            GridFormat::Json => write_json(path, &json!({ "echo": echo, "result": r }))?,
        }
    }
    Ok(())
}

fn critical(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let resolved = cfg.resolve()?;
    let p = resolved.reduced;
    let block = &cfg.critical_load;
    let mut classify = cfg.numerics.classify();
    // only Rotating(m, n, +1) matters here
    classify.lyapunov = None;
    let opts = CriticalLoadOptions {
        ic_policy: block.initial_conditions.clone(),
        bracket: block.bracket,
        tolerance: block.tolerance,
        verify_offsets: block.verify_offsets.clone(),
        classify,
        workers: cfg.workers,
    };
    let bounds = core(load_bounds(&p, block.m, block.n, DeltaMode::Supremum))?;
    let r = core(critical_load(&p, block.m, block.n, &opts))?;
    line(out, "w_c", r.w_c)?;
    line(out, "bracket_lo", r.bracket.0)?;
    line(out, "bracket_hi", r.bracket.1)?;
    line(out, "bound_bessel_supremum", bounds.bessel_bound)?;
    line(out, "bound_simple", bounds.simple_bound)?;
    writeln!(out, "initial_conditions = {}", r.samples_per_probe)?;
    writeln!(out, "probes = {}", r.probes.len())?;
    if !r.monotone_violations.is_empty() {
        let v: Vec<String> = r.monotone_violations.iter().map(|&x| fmt_f64(x)).collect();
        writeln!(out, "monotone_violations = {}", v.join(" "))?;
    }
    if let Some(path) = &cfg.output.path {
        json_only(cfg, path)?;
        write_json(
            path,
            &json!({
                "echo": echo(cfg, Some(&resolved)),
                "result": r,
                "bounds": bounds,
            }),
        )?;
    }
    Ok(())
}

fn grid(cfg: &RunConfig, out: Out) -> Result<(), CliError> {
    let resolved = cfg.resolve()?;
    let g = cfg
        .grid
        .ok_or_else(|| CliError::Config("mode needs a `grid` block".into()))?;
    let kind = match cfg.mode {
        Some(Mode::Basin) => GridKind::Basin,
        _ => GridKind::DriveMap,
    };
    let (xn, yn) = kind.axis_names();
    let spec = GridSpec {
        kind,
        x: Axis::new(xn, g.x.min, g.x.max, g.x.step),
        y: Axis::new(yn, g.y.min, g.y.max, g.y.step),
        params: resolved.reduced,
        initial_state: cfg.initial_state(),
        target: g.target.map(Into::into).unwrap_or_default(),
    };
    let mut classify = cfg.numerics.classify();
    classify.period_budget = classify.period_budget.or(Some(DEFAULT_PERIOD_BUDGET));
    let opts = SweepOptions {
        classify,
        workers: cfg.workers,
    };
    let mut result = core(run_grid(&spec, &opts))?;
    result.metadata.config = Some(echo(cfg, Some(&resolved)));

    let (nx, ny) = result.dims();
    writeln!(out, "cells = {} ({nx} x {ny})", result.cells.len())?;
    writeln!(out, "target_matches = {}", result.match_count())?;
    let mut counts = std::collections::BTreeMap::new();
    for c in &result.cells {
        let key = if c.failed {
            "failed".to_string()
        } else {
            c.class.to_string()
        };
        *counts.entry(key).or_insert(0usize) += 1;
    }
    for (class, n) in counts {
        writeln!(out, "  {class}: {n}")?;
    }
    if let Some(path) = &cfg.output.path {
        core(write_grid_file(
            &result,
            path,
            format_for(cfg, path, GridFormat::Csv),
        ))?;
        writeln!(out, "wrote {}", path.display())?;
    }
    Ok(())
}

fn kernel(cfg: &RunConfig) -> Result<ForceKernel, CliError> {
    let f = cfg.force.as_ref().expect("checked by caller");
    match &f.kernel_file {
        Some(path) => load_kernel_file(path).map_err(|e| match e {
            rackpinion_core::Error::Io(m) => {
                CliError::Config(format!("`force.kernel_file` {}: {m}", path.display()))
            }
            e => CliError::from_core(e),
        }),
        None => ForceKernel::builtin(&f.kernel).ok_or_else(|| {
            let names: Vec<String> = builtin_kernels().into_iter().map(|k| k.name).collect();
            CliError::Config(format!(
                "`force.kernel`: unknown kernel `{}`; builtins are {}",
                f.kernel,
                names.join(", ")
            ))
        }),
    }
}

fn force(cfg: &RunConfig, out: Out, err: Out) -> Result<(), CliError> {
    let f = cfg
        .force
        .as_ref()
        .ok_or_else(|| CliError::Config("mode needs a `force` block".into()))?;
    let k = kernel(cfg)?;
    let base = f.geometry.geometry();
    writeln!(out, "kernel = {} ({})", k.name, k.provenance)?;

    let gaps: Vec<f64> = match &f.gap_sweep {
        None => vec![base.gap],
        Some(s) => {
            let (lo, hi) = (s.min.0, s.max.0);
            if !(lo > 0.0 && hi > lo && s.points >= 2) {
                return Err(CliError::Config(
                    "`force.gap_sweep` needs 0 < min < max and points >= 2".into(),
                ));
            }
            let r = (hi / lo).ln();
            (0..s.points)
                .map(|i| lo * (r * i as f64 / (s.points - 1) as f64).exp())
                .collect()
        }
    };
    let mut rows = Vec::with_capacity(gaps.len());
    for &gap in &gaps {
        let g = rackpinion_core::RackPinionGeometry { gap, ..base };
        let r = core(force_amplitude(&g, &k))?;
        for w in &r.warnings {
            writeln!(err, "warning: gap {}: {w}", fmt_f64(gap))?;
        }
        rows.push((gap, r));
    }
    if let [(_, r)] = rows.as_slice() {
        line(out, "force", r.force)?;
        line(out, "integral", r.integral)?;
    } else {
        writeln!(out, "gap,force,integral")?;
        for (gap, r) in &rows {
            writeln!(
                out,
                "{},{},{}",
                fmt_f64(*gap),
                fmt_f64(r.force),
                fmt_f64(r.integral)
            )?;
        }
    }

    if let Some(path) = &cfg.output.path {
        let echo = json!({
            "config": cfg,
            "kernel": { "name": k.name, "provenance": k.provenance },
            "version": env!("CARGO_PKG_VERSION"),
        });
        match format_for(cfg, path, GridFormat::Csv) {
            GridFormat::Csv => write_text(
                path,
                &series_csv(
                    "rackpinion-force v1",
                    &echo,
                    "gap,force,integral",
                    rows.iter().map(|(gap, r)| vec![*gap, r.force, r.integral]),
                ),
            )?,
            GridFormat::Json => {
                let results: Vec<Value> = rows
                    .iter()
                    .map(|(gap, r)| json!({ "gap": gap, "force": r.force, "integral": r.integral, "warnings": r.warnings }))
                    .collect();
                write_json(path, &json!({ "echo": echo, "results": results }))?
            }
        }
    }
    Ok(())
}
