//! Scenario driver: criterion check, evolution, diagnostics and artifacts.

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

use super::SimConfig;
use crate::diagnostics::{
    calibrate_rate_constant, mass_critical_report, virial_rate_report, virial_reports_csv, MassCriticalReport,
    RateCalibration, VirialReport,
};
use crate::error::{Error, Result};
use crate::geometry::{build_cutoff, CutoffProfile, Grid};
use crate::groundstate::{
    check_blowup_criteria, critical_index, solve_ground_state, thresholds, CriterionReport, GroundStateOptions,
};
use crate::solver::blowup::{detect_blowup, BlowupVerdict};
use crate::solver::checkpoint::Checkpoint;
use crate::solver::{continue_evolution, evolve, Evolution, Observer, SimState, Status, TrajectoryRow};

#[derive(Debug, Clone, Serialize)]
pub struct VirialSeries {
    pub radius: f64,
    pub calibration: RateCalibration,
    pub reports: Vec<VirialReport>,
    /// Interior samples where the rate inequality fails.
    pub violations: usize,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub status: Status,
    pub message: Option<String>,
    pub verdict: BlowupVerdict,
    pub criterion: Option<CriterionReport>,
    pub virial: Vec<VirialSeries>,
    pub mass_critical: Vec<MassCriticalReport>,
    pub rows: Vec<TrajectoryRow>,
    pub state: SimState,
    /// Largest relative mass and energy drift over the recorded snapshots.
    pub max_mass_drift: f64,
    pub max_energy_drift: f64,
    pub out_dir: PathBuf,
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write(path, &serde_json::to_string_pretty(value)?)
}

/// Criterion report on the discretized datum; ground-state thresholds are
/// solved for only when the clause needs them.
fn criterion(cfg: &SimConfig, u0: &crate::operators::Field) -> Result<Option<CriterionReport>> {
    if cfg.kappa == 0.0 {
        return Ok(None);
    }
    let f = cfg.physics().functionals(u0, 0.0);
    let s_c = critical_index(cfg.d, cfg.sigma);
    let needs_q = cfg.mu == 0.0 && s_c > 0.0 && s_c < 2.0 && f.energy >= 0.0;
    let th = if needs_q {
        let q = solve_ground_state(cfg.d, cfg.sigma, None, &GroundStateOptions::default())?;
        Some(thresholds(&q)?)
    } else {
        None
    };
    check_blowup_criteria(&f, cfg.mu, cfg.sigma, cfg.d, th.as_ref(), cfg.chi).map(Some)
}

fn profiles(cfg: &SimConfig, grid: &Grid) -> Result<Vec<CutoffProfile>> {
    cfg.r_list.iter().map(|&r| build_cutoff(grid, r)).collect()
}

fn prepare_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))
}

/// Run a scenario from its initial datum and write all artifacts to `out`.
pub fn run_scenario(cfg: &SimConfig, out: &Path, observer: &mut dyn Observer) -> Result<RunOutcome> {
    cfg.validate()?;
    prepare_out(out)?;
    let grid = cfg.grid()?;
    let u0 = cfg.initial_field(&grid)?;
    let criterion = criterion(cfg, &u0)?;
    if let Some(c) = &criterion {
        write_json(&out.join("criterion.json"), c)?;
    }
    let profiles = profiles(cfg, &grid)?;
    let mut mass_critical = Vec::new();
    if cfg.kappa == 1.0 && cfg.d >= 4 && (cfg.sigma - 4.0 / cfg.d as f64).abs() < 1e-12 {
        let e0 = cfg.physics().functionals(&u0, 0.0).energy;
        for p in &profiles {
            mass_critical.push(mass_critical_report(&u0, p, cfg.sigma, e0, 0.5)?);
        }
        write_json(&out.join("mass_critical.json"), &mass_critical)?;
    }
    let mut step = cfg.step_config();
    if cfg.checkpoint_every > 0 {
        step.checkpoint_path = Some(out.join("checkpoint.bin"));
    }
    let evo = evolve(&step, u0, profiles.first(), observer)?;
    finish(cfg, out, &grid, &profiles, evo, criterion, mass_critical)
}

/// Continue a run from a checkpoint written by an earlier run of `cfg`.
pub fn resume_scenario(
    cfg: &SimConfig,
    checkpoint: &Path,
    out: &Path,
    observer: &mut dyn Observer,
) -> Result<RunOutcome> {
    cfg.validate()?;
    let ck = Checkpoint::load(checkpoint)?;
    let mismatch = |what: &str| Error::config(what, format!("checkpoint {} disagrees with the config", checkpoint.display()));
    if ck.d != cfg.d || ck.n_r as usize != cfg.n_r || ck.n_z as usize != cfg.n_z {
        return Err(mismatch("n_r"));
    }
    if ck.r_max != cfg.r_max || ck.z_max != cfg.z_max {
        return Err(mismatch("r_max"));
    }
    if ck.physics() != cfg.physics() {
        return Err(mismatch("sigma"));
    }
    prepare_out(out)?;
    let grid = cfg.grid()?;
    let state = ck.into_state(&grid)?;
    let profiles = profiles(cfg, &grid)?;
    let mut step = cfg.step_config();
    if cfg.checkpoint_every > 0 {
        step.checkpoint_path = Some(out.join("checkpoint.bin"));
    }
    let evo = continue_evolution(&step, state, profiles.first(), observer)?;
    finish(cfg, out, &grid, &profiles, evo, None, Vec::new())
}

fn finish(
    cfg: &SimConfig,
    out: &Path,
    grid: &Arc<Grid>,
    profiles: &[CutoffProfile],
    evo: Evolution,
    criterion: Option<CriterionReport>,
    mass_critical: Vec<MassCriticalReport>,
) -> Result<RunOutcome> {
    let Evolution { state, trajectory } = evo;
    let physics = cfg.physics();
    let mut files = vec!["trajectory.csv", "verdict.json", "checkpoint.bin"];
    if criterion.is_some() {
        files.push("criterion.json");
    }
    if !mass_critical.is_empty() {
        files.push("mass_critical.json");
    }
    write(&out.join("trajectory.csv"), &trajectory.to_csv())?;
    // The final state is the last accepted one, also after a failure.
    Checkpoint::from_state(&state, &physics).save(&out.join("checkpoint.bin"))?;

    let snapshots = trajectory.snapshots();
    let verdict = detect_blowup(&snapshots, cfg.growth_factor, state.trigger);
    write_json(
        &out.join("verdict.json"),
        &json!({
            "status": state.status,
            "message": state.message,
            "final_time": state.t,
            "steps": state.step,
            "band_flagged": trajectory.band_flagged,
            "verdict": verdict,
        }),
    )?;

    let mut virial = Vec::new();
    let mut virial_files = Vec::new();
    if trajectory.fields.len() >= 3 {
        for (i, p) in profiles.iter().enumerate() {
            let calibration = calibrate_rate_constant(
                grid,
                &physics,
                p,
                trajectory.mass0,
                cfg.calibration_samples,
                cfg.seed.wrapping_add(i as u64),
            )?;
            let reports = virial_rate_report(&trajectory, p, &physics, calibration.constant)?;
            let violations = reports.iter().filter(|r| !r.holds).count();
            let name = format!("virial_R{}.csv", p.radius);
            write(&out.join(&name), &virial_reports_csv(&reports))?;
            virial_files.push(name);
            virial.push(VirialSeries {
                radius: p.radius,
                calibration,
                reports,
                violations,
            });
        }
        write_json(&out.join("virial.json"), &virial)?;
        files.push("virial.json");
    }

    let (mut max_mass_drift, mut max_energy_drift) = (0.0f64, 0.0f64);
    for s in &snapshots {
        max_mass_drift = max_mass_drift.max(state.mass_drift(s));
        max_energy_drift = max_energy_drift.max(state.energy_drift(s));
    }

    let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let mut all_files: Vec<String> = files.iter().map(|s| s.to_string()).collect();
    all_files.extend(virial_files);
    write_json(
        &out.join("manifest.json"),
        &json!({
            "name": cfg.name,
            "version": env!("CARGO_PKG_VERSION"),
            "grid": grid.fingerprint(),
            "created_unix": created,
            "status": state.status,
            "criterion": criterion.as_ref().map(|c| c.summary()),
            "files": all_files,
            "config": cfg,
        }),
    )?;

    Ok(RunOutcome {
        status: state.status,
        message: state.message.clone(),
        verdict,
        criterion,
        virial,
        mass_critical,
        rows: trajectory.rows,
        state,
        max_mass_drift,
        max_energy_drift,
        out_dir: out.to_path_buf(),
    })
}
