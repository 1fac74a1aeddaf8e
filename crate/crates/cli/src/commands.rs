//! Subcommand implementations. Every run writes deterministic summaries and keeps wall-clock
//! measurements in separate `*_timing.json` files.

use std::collections::BTreeMap;
use std::time::Instant;

use hrom::diagnostics::{conservation_error, eoc, median_time, relative_l2, two_soliton_error, TimingReport};
use hrom::integrator::modified_hamiltonian_from_update;
use hrom::io::SnapshotFile;
use hrom::linalg::{mat_from_columns, set_dense_threads};
use hrom::models::initial_condition;
use hrom::pod::SpectrumReport;
use hrom::{
    assemble, build_basis, integrate, integrate_with, reduce, Basis, BasisMode, HamiltonianSystem, LiftedRom,
    QuadraticSystem, SkewGradientModel, SnapshotSet, TimeMesh, Trajectory,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::artifacts::RunDir;
use crate::config::{BasisSpec, ExperimentConfig, RomPath};
use crate::error::CliError;

pub struct Context {
    pub config: ExperimentConfig,
    pub run: RunDir,
    pub threads: usize,
    pub path: RomPath,
}

struct Setup {
    model: SkewGradientModel,
    q0: Vec<f64>,
    mesh: TimeMesh,
}

fn setup(cfg: &ExperimentConfig) -> Result<Setup, CliError> {
    let model = assemble(cfg.model.kind, cfg.params(), cfg.model.domain()?)?;
    let q0 = initial_condition(model.kind(), model.params(), &cfg.initial, model.domain())?;
    let mesh = TimeMesh::with_step(cfg.time.t_final, cfg.time.dt)?;
    Ok(Setup { model, q0, mesh })
}

fn basis_spec(cfg: &ExperimentConfig) -> Result<&BasisSpec, CliError> {
    cfg.basis
        .as_ref()
        .ok_or_else(|| CliError::Config("this subcommand needs a `basis` section".into()))
}

fn block_names(model: &SkewGradientModel, mode: BasisMode) -> Vec<String> {
    match mode {
        BasisMode::Monolithic => vec!["basis.snap".into()],
        BasisMode::PerField => model
            .layout()
            .names()
            .iter()
            .map(|f| format!("basis_{f}.snap"))
            .collect(),
    }
}

fn path_name(tensorial: bool) -> &'static str {
    if tensorial {
        "tensorial"
    } else {
        "lifted"
    }
}

fn selected_paths(path: RomPath) -> Vec<bool> {
    [true, false]
        .into_iter()
        .filter(|&t| if t { path.tensorial() } else { path.lifted() })
        .collect()
}

/// Invariant series `(names, columns)` along a trajectory of full states.
fn invariant_columns<'a>(
    model: &SkewGradientModel,
    states: impl Iterator<Item = &'a [f64]>,
) -> Result<(Vec<&'static str>, Vec<Vec<f64>>), CliError> {
    let names = model.invariants(&vec![0.0; model.dim()])?.names();
    let mut cols = vec![Vec::new(); names.len()];
    for q in states {
        let inv = model.invariants(q)?;
        for (c, name) in cols.iter_mut().zip(&names) {
            c.push(inv.get(name)?);
        }
    }
    Ok((names, cols))
}

/// `max |vᵏ − v⁰|` scaled by `max |vᵏ|`; invariants that vanish identically report zero.
fn max_relative_drift(series: &[f64]) -> f64 {
    let first = series[0];
    let scale = series.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return 0.0;
    }
    series.iter().map(|v| (v - first).abs()).fold(0.0, f64::max) / scale
}

fn write_invariants(
    run: &RunDir,
    name: &str,
    times: &[f64],
    names: &[&str],
    cols: &[Vec<f64>],
) -> Result<BTreeMap<String, f64>, CliError> {
    let mut header = vec!["t"];
    header.extend(names);
    let mut columns: Vec<&[f64]> = vec![times];
    columns.extend(cols.iter().map(|c| &c[..]));
    run.write_csv(name, &header, &columns)?;
    Ok(names
        .iter()
        .zip(cols)
        .map(|(n, c)| (n.to_string(), max_relative_drift(c)))
        .collect())
}

fn write_timing(run: &RunDir, name: &str, value: serde_json::Value) -> Result<(), CliError> {
    run.write_json(name, &value)
}

pub fn fom(ctx: &Context) -> Result<(), CliError> {
    let Setup { model, q0, mesh } = setup(&ctx.config)?;
    set_dense_threads(1);
    let start = Instant::now();
    let traj = integrate(&model, &q0, mesh, ctx.config.snapshots.stride)?;
    let elapsed = start.elapsed().as_secs_f64();
    let file = SnapshotFile::from_trajectory(&traj);
    ctx.run.write_snapshots(
        "fom.snap",
        &file,
        json!({ "model": model.kind(), "fields": model.layout().names(), "steps": mesh.steps() }),
    )?;
    let (names, cols) = invariant_columns(&model, traj.states())?;
    let drift = write_invariants(&ctx.run, "fom_invariants.csv", &traj.times(), &names, &cols)?;
    let final_values: BTreeMap<String, f64> = names
        .iter()
        .zip(&cols)
        .map(|(n, c)| (n.to_string(), *c.last().expect("nonempty")))
        .collect();
    ctx.run.write_json(
        "fom_summary.json",
        &json!({
            "config_hash": ctx.config.hash(),
            "dim": traj.dim(),
            "samples": traj.len(),
            "dt": traj.dt(),
            "final_invariants": final_values,
            "max_relative_invariant_drift": drift,
        }),
    )?;
    write_timing(&ctx.run, "fom_timing.json", json!({ "fom_seconds": elapsed }))?;
    eprintln!("fom: {} samples of dimension {} in {elapsed:.3}s", traj.len(), traj.dim());
    Ok(())
}

fn load_fom(ctx: &Context) -> Result<Trajectory, CliError> {
    let (file, _) = ctx.run.read_snapshots("fom.snap")?;
    Ok(file.into_trajectory()?)
}

#[derive(Serialize)]
struct BlockSummary {
    file: String,
    rows: usize,
    modes: usize,
    ric: f64,
    leading_singular_values: Vec<f64>,
}

pub fn basis(ctx: &Context) -> Result<(), CliError> {
    let spec = basis_spec(&ctx.config)?;
    let Setup { model, .. } = setup(&ctx.config)?;
    let traj = load_fom(ctx)?;
    let snaps = SnapshotSet::from_trajectory(&traj, model.layout().clone(), ctx.config.snapshots.include_initial)?;
    set_dense_threads(ctx.threads);
    let start = Instant::now();
    let (basis, spectra) = build_basis(&snaps, spec.mode, &spec.modes, spec.svd)?;
    let elapsed = start.elapsed().as_secs_f64();
    set_dense_threads(1);
    let names = block_names(&model, spec.mode);
    let mut blocks = Vec::new();
    for ((block, spectrum), file) in basis.blocks().iter().zip(&spectra).zip(&names) {
        let (rows, modes) = (block.nrows(), block.ncols());
        let data: Vec<f64> = (0..modes).flat_map(|j| (0..rows).map(move |i| block[(i, j)])).collect();
        let out = SnapshotFile {
            dim: rows,
            count: modes,
            dt: 0.0,
            stride: 1,
            data,
        };
        ctx.run.write_snapshots(file, &out, json!({ "mode": spec.mode }))?;
        write_spectrum(&ctx.run, &file.replace("basis", "spectrum").replace(".snap", ".csv"), spectrum)?;
        blocks.push(BlockSummary {
            file: file.clone(),
            rows,
            modes,
            ric: spectrum.ric(modes),
            leading_singular_values: spectrum.singular_values.iter().take(5).cloned().collect(),
        });
    }
    ctx.run.write_json(
        "basis_summary.json",
        &json!({
            "config_hash": ctx.config.hash(),
            "mode": spec.mode,
            "snapshots": snaps.len(),
            "dim": basis.dim(),
            "blocks": blocks,
        }),
    )?;
    write_timing(&ctx.run, "basis_timing.json", json!({ "svd_seconds": elapsed, "threads": ctx.threads }))?;
    eprintln!("basis: {} modes in {elapsed:.3}s", basis.dim());
    Ok(())
}

fn write_spectrum(run: &RunDir, name: &str, s: &SpectrumReport) -> Result<(), CliError> {
    let index: Vec<f64> = (1..=s.singular_values.len()).map(|i| i as f64).collect();
    let ric = s.ric_curve();
    run.write_csv(name, &["index", "sigma", "ric"], &[&index, &s.singular_values, &ric])
}

fn load_basis(ctx: &Context, model: &SkewGradientModel) -> Result<Basis, CliError> {
    let spec = basis_spec(&ctx.config)?;
    let blocks = block_names(model, spec.mode)
        .iter()
        .map(|name| {
            let (file, _) = ctx.run.read_snapshots(name)?;
            Ok(mat_from_columns(&file.data, file.dim, file.count))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(Basis::new(model.layout().clone(), spec.mode, blocks)?)
}

/// Runs the reduced model along `mesh` and records `H̃` at every step.
fn run_reduced<S: HamiltonianSystem>(
    sys: &S,
    q_r0: &[f64],
    mesh: TimeMesh,
    stride: usize,
) -> Result<(Trajectory, Vec<f64>), CliError> {
    let mut modified = Vec::with_capacity(mesh.steps());
    let traj = integrate_with(sys, q_r0, mesh, stride, |_, q, u| {
        modified.push(modified_hamiltonian_from_update(sys, q, u));
    })?;
    Ok((traj, modified))
}

fn lift_all(basis: &Basis, traj: &Trajectory) -> Result<Vec<Vec<f64>>, CliError> {
    traj.states().map(|q| Ok(basis.lift(q)?)).collect()
}

pub fn rom(ctx: &Context) -> Result<(), CliError> {
    let Setup { model, q0, mesh } = setup(&ctx.config)?;
    let basis = load_basis(ctx, &model)?;
    set_dense_threads(ctx.threads);
    let start = Instant::now();
    let reduced = reduce(&model, &basis)?;
    let lifted = LiftedRom::new(&model, &basis)?;
    let offline = start.elapsed().as_secs_f64();
    set_dense_threads(1);
    let q_r0 = basis.project(&q0)?;
    let stride = ctx.config.snapshots.stride;
    let mut summary = serde_json::Map::new();
    let mut timing = serde_json::Map::new();
    let mut trajectories = Vec::new();
    for tensorial in selected_paths(ctx.path) {
        let name = path_name(tensorial);
        let start = Instant::now();
        let (traj, modified) = if tensorial {
            run_reduced(&reduced, &q_r0, mesh, stride)?
        } else {
            run_reduced(&lifted, &q_r0, mesh, stride)?
        };
        timing.insert(format!("online_{name}_seconds"), json!(start.elapsed().as_secs_f64()));
        ctx.run.write_snapshots(
            &format!("rom_{name}.snap"),
            &SnapshotFile::from_trajectory(&traj),
            json!({ "path": name, "reduced_dim": basis.dim() }),
        )?;
        let full = lift_all(&basis, &traj)?;
        let (names, cols) = invariant_columns(&model, full.iter().map(|v| &v[..]))?;
        let drift = write_invariants(&ctx.run, &format!("rom_{name}_invariants.csv"), &traj.times(), &names, &cols)?;
        summary.insert(
            name.into(),
            json!({
                "samples": traj.len(),
                "max_relative_modified_energy_drift": max_relative_drift(&modified),
                "max_relative_invariant_drift": drift,
            }),
        );
        trajectories.push(traj);
    }
    if let [a, b] = &trajectories[..] {
        let diff = a.data().iter().zip(b.data()).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        summary.insert("max_path_difference".into(), json!(diff));
    }
    summary.insert("config_hash".into(), json!(ctx.config.hash()));
    summary.insert("reduced_dim".into(), json!(QuadraticSystem::dim(&reduced)));
    summary.insert("skew_defect".into(), json!(reduced.skew_defect()));
    ctx.run.write_json("rom_summary.json", &summary)?;
    timing.insert("offline_seconds".into(), json!(offline));
    write_timing(&ctx.run, "rom_timing.json", serde_json::Value::Object(timing))?;
    eprintln!("rom: {} paths of dimension {}", trajectories.len(), basis.dim());
    Ok(())
}

pub fn compare(ctx: &Context) -> Result<(), CliError> {
    let Setup { model, .. } = setup(&ctx.config)?;
    let fom = load_fom(ctx)?;
    let basis = load_basis(ctx, &model)?;
    let mut summary = serde_json::Map::new();
    for tensorial in selected_paths(ctx.path) {
        let name = path_name(tensorial);
        let (file, _) = ctx.run.read_snapshots(&format!("rom_{name}.snap"))?;
        let red = file.into_trajectory()?;
        if red.len() != fom.len() || red.steps() != fom.steps() {
            return Err(CliError::Config(format!(
                "rom_{name}.snap samples steps {:?}.. but fom.snap samples {:?}..",
                &red.steps()[..red.len().min(3)],
                &fom.steps()[..fom.len().min(3)]
            )));
        }
        let full = lift_all(&basis, &red)?;
        // the shared initial sample is excluded from the averages
        let pairs = || fom.states().skip(1).zip(full.iter().skip(1).map(|v| &v[..]));
        let rel = relative_l2(pairs(), model.weight())?;
        let mut cols = vec![fom.times()[1..].to_vec(), rel.series.clone()];
        let mut header = vec!["t", "relative_l2"];
        let mut entry = serde_json::Map::new();
        entry.insert("relative_l2".into(), json!({ "average": rel.average, "max": rel.max, "argmax": rel.argmax }));
        let names = model.invariants(fom.state(0))?.names();
        for inv in &names {
            let r = conservation_error(&model, pairs(), inv)?;
            entry.insert(inv.to_string(), json!({ "average": r.average, "max": r.max }));
            cols.push(r.series);
            header.push(inv);
        }
        let columns: Vec<&[f64]> = cols.iter().map(|c| &c[..]).collect();
        ctx.run.write_csv(&format!("compare_{name}.csv"), &header, &columns)?;
        summary.insert(name.into(), serde_json::Value::Object(entry));
    }
    summary.insert("config_hash".into(), json!(ctx.config.hash()));
    ctx.run.write_json("compare_summary.json", &summary)?;
    eprintln!("compare: written compare_summary.json");
    Ok(())
}

#[derive(Serialize)]
struct EocLevel {
    dx: f64,
    dt: f64,
    error: f64,
    order: Option<f64>,
}

pub fn eoc_ladder(ctx: &Context) -> Result<(), CliError> {
    let spec = ctx
        .config
        .eoc
        .ok_or_else(|| CliError::Config("the eoc subcommand needs an `eoc` section".into()))?;
    let params = ctx.config.params();
    let start = Instant::now();
    let levels: Vec<(f64, f64)> = (0..spec.levels)
        .map(|k| {
            let s = 0.5f64.powi(k as i32);
            (spec.dx0 * s, spec.dt0 * s)
        })
        .collect();
    let errors = levels
        .par_iter()
        .map(|&(dx, dt)| two_soliton_error(spec.soliton, params, (spec.start, spec.end), dx, dt, spec.t_final))
        .collect::<Result<Vec<f64>, _>>()?;
    let pairs: Vec<(f64, f64)> = levels.iter().zip(&errors).map(|(l, e)| (l.0, *e)).collect();
    let orders = eoc(&pairs)?;
    let rows: Vec<EocLevel> = levels
        .iter()
        .zip(&errors)
        .enumerate()
        .map(|(k, (&(dx, dt), &error))| EocLevel {
            dx,
            dt,
            error,
            order: k.checked_sub(1).map(|i| orders[i]),
        })
        .collect();
    let dx: Vec<f64> = levels.iter().map(|l| l.0).collect();
    let dt: Vec<f64> = levels.iter().map(|l| l.1).collect();
    ctx.run.write_csv("eoc.csv", &["dx", "dt", "error"], &[&dx, &dt, &errors])?;
    ctx.run.write_json(
        "eoc_summary.json",
        &json!({ "config_hash": ctx.config.hash(), "levels": rows }),
    )?;
    write_timing(
        &ctx.run,
        "eoc_timing.json",
        json!({ "seconds": start.elapsed().as_secs_f64(), "threads": ctx.threads }),
    )?;
    for r in &rows {
        eprintln!("eoc: dx={} dt={} error={:.3e} order={:?}", r.dx, r.dt, r.error, r.order);
    }
    Ok(())
}

pub fn bench(ctx: &Context) -> Result<(), CliError> {
    let spec = basis_spec(&ctx.config)?;
    let Setup { model, q0, mesh } = setup(&ctx.config)?;
    let reps = ctx.config.bench.repetitions;
    let stride = ctx.config.snapshots.stride;
    set_dense_threads(1);
    let (fom_time, traj) = median_time(reps, || integrate(&model, &q0, mesh, stride))?;
    set_dense_threads(ctx.threads);
    let snaps = SnapshotSet::from_trajectory(&traj, model.layout().clone(), ctx.config.snapshots.include_initial)?;
    let (offline, (basis, reduced)) = median_time(reps, || {
        let (basis, _) = build_basis(&snaps, spec.mode, &spec.modes, spec.svd)?;
        let reduced = reduce(&model, &basis)?;
        Ok((basis, reduced))
    })?;
    set_dense_threads(1);
    let lifted = LiftedRom::new(&model, &basis)?;
    let q_r0 = basis.project(&q0)?;
    let (tensorial, _) = median_time(reps, || integrate(&reduced, &q_r0, mesh, mesh.steps()))?;
    let (lifted_time, _) = median_time(reps, || integrate(&lifted, &q_r0, mesh, mesh.steps()))?;
    let report = TimingReport {
        fom: fom_time,
        offline,
        online_tensorial: tensorial,
        online_lifted: lifted_time,
    };
    ctx.run.write_json(
        "bench.json",
        &json!({
            "config_hash": ctx.config.hash(),
            "full_dim": model.dim(),
            "reduced_dim": basis.dim(),
            "steps": mesh.steps(),
            "repetitions": reps.max(3),
            "timing": report,
            "speedup_tensorial": report.speedup_tensorial(),
            "speedup_lifted": report.speedup_lifted(),
        }),
    )?;
    eprintln!(
        "bench: fom {:.3}s, offline {:.3}s, tensorial {:.3}s (x{:.1}), lifted {:.3}s (x{:.1})",
        report.fom,
        report.offline,
        report.online_tensorial,
        report.speedup_tensorial(),
        report.online_lifted,
        report.speedup_lifted()
    );
    Ok(())
}
