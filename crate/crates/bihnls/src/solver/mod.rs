//! Strang-split time stepping with conservation monitoring.
//!
//! One step is a half nonlinear phase u ← u·exp(iκ(dt/2)|u|^{2σ}), the exact
//! linear flow exp(−i dt (Δ² − μΔ)) in the eigenbasis, and a second half
//! phase. Both sub-flows are exact, so mass is conserved to roundoff and the
//! discrete energy error stays O(dt²).

pub mod blowup;
pub mod checkpoint;
pub mod store;

use std::collections::VecDeque;
use std::path::PathBuf;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CutoffProfile, Grid};
use crate::operators::{from_spectrum, functionals_with, to_spectrum, Field, FunctionalSnapshot, Spectrum};

pub use blowup::{detect_blowup, BlowupVerdict, GrowthBranch, Trigger};
pub use checkpoint::Checkpoint;
pub use store::FieldStore;

/// exp(−i dt (Δ² − μΔ)) tabulated per (radial mode, axial wavenumber).
#[derive(Debug, Clone)]
pub struct Propagator {
    pub grid: Arc<Grid>,
    pub mu: f64,
    pub dt: f64,
    phases: Vec<Complex64>,
}

pub fn linear_propagator(grid: &Arc<Grid>, mu: f64, dt: f64) -> Result<Propagator> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::config("dt", format!("time step must be positive, got {dt}")));
    }
    let mut phases = vec![Complex64::new(0.0, 0.0); grid.len()];
    for n in 0..grid.n_r {
        for k in 0..grid.n_z {
            let l = Spectrum::neg_lap_symbol(grid, n, k);
            phases[grid.index(n, k)] = Complex64::from_polar(1.0, -dt * (l * l + mu * l));
        }
    }
    Ok(Propagator {
        grid: Arc::clone(grid),
        mu,
        dt,
        phases,
    })
}

impl Propagator {
    pub fn apply(&self, u: &Field) -> Field {
        let mut s = to_spectrum(u);
        for (c, p) in s.coeffs.iter_mut().zip(&self.phases) {
            *c *= p;
        }
        u.with_values(from_spectrum(&s))
    }
}

/// Physical parameters of i u_t = Δ²u − μΔu − κ|u|^{2σ}u.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Physics {
    pub sigma: f64,
    pub mu: f64,
    /// Nonlinearity coefficient: 1 for the focusing equation, 0 for the linear flow.
    pub kappa: f64,
}

impl Physics {
    pub fn focusing(sigma: f64, mu: f64) -> Self {
        Self { sigma, mu, kappa: 1.0 }
    }

    pub fn functionals(&self, u: &Field, time: f64) -> FunctionalSnapshot {
        functionals_with(u, self.mu, self.sigma, self.kappa, time)
    }
}

/// u·exp(iκ h |u|^{2σ}) pointwise.
pub fn nonlinear_phase(u: &Field, h: f64, physics: &Physics) -> Field {
    if physics.kappa == 0.0 {
        return u.clone();
    }
    let s = physics.sigma;
    u.with_values(
        u.values
            .iter()
            .map(|&v| v * Complex64::from_polar(1.0, physics.kappa * h * crate::operators::nonneg_pow(v.norm_sqr(), s)))
            .collect(),
    )
}

/// Strang stepper caching the linear propagator for the last step size.
#[derive(Debug, Clone)]
pub struct Stepper {
    pub physics: Physics,
    grid: Arc<Grid>,
    prop: Option<Propagator>,
}

impl Stepper {
    pub fn new(grid: &Arc<Grid>, physics: Physics) -> Self {
        Self {
            physics,
            grid: Arc::clone(grid),
            prop: None,
        }
    }

    pub fn step(&mut self, u: &Field, dt: f64) -> Result<Field> {
        if self.prop.as_ref().map(|p| p.dt) != Some(dt) {
            self.prop = Some(linear_propagator(&self.grid, self.physics.mu, dt)?);
        }
        let prop = self.prop.as_ref().expect("propagator just built");
        let half = nonlinear_phase(u, 0.5 * dt, &self.physics);
        let lin = prop.apply(&half);
        Ok(nonlinear_phase(&lin, 0.5 * dt, &self.physics))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Running,
    BlowupDetected,
    Completed,
    Failed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepConfig {
    pub physics: Physics,
    pub dt0: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub t_end: f64,
    /// Hard cap on accepted steps.
    pub max_steps: u64,
    pub mass_tol: f64,
    pub energy_tol: f64,
    /// A step is rejected when its own energy change exceeds this fraction of energy_tol.
    pub step_tol_fraction: f64,
    pub growth_factor: f64,
    /// Accepted steps between snapshots.
    pub snapshot_interval: u64,
    /// Store the full field every this many snapshots (0 disables).
    pub field_every: u64,
    pub field_memory_cap: usize,
    pub spill_dir: Option<PathBuf>,
    /// Absorbing band strength on the outer tenth of the domain (0 disables).
    pub damping: f64,
    /// Write a checkpoint every this many snapshots (0 disables).
    pub checkpoint_every: u64,
    pub checkpoint_path: Option<PathBuf>,
}

impl StepConfig {
    pub fn new(physics: Physics, dt0: f64, t_end: f64) -> Self {
        Self {
            physics,
            dt0,
            dt_min: dt0 * 1e-6,
            dt_max: dt0,
            t_end,
            max_steps: u64::MAX,
            mass_tol: 1e-6,
            energy_tol: 1e-5,
            step_tol_fraction: 0.1,
            growth_factor: 1e3,
            snapshot_interval: 1,
            field_every: 0,
            field_memory_cap: 1 << 30,
            spill_dir: None,
            damping: 0.0,
            checkpoint_every: 0,
            checkpoint_path: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.physics;
        if !(p.sigma > 0.0 && p.sigma.is_finite()) {
            return Err(Error::config("sigma", "must be positive"));
        }
        if !p.mu.is_finite() || !p.kappa.is_finite() {
            return Err(Error::config("mu", "must be finite"));
        }
        if !(self.dt_min > 0.0 && self.dt_min < self.dt0 && self.dt0 <= self.dt_max) {
            return Err(Error::config(
                "dt0",
                format!("need 0 < dt_min < dt0 <= dt_max, got {} {} {}", self.dt_min, self.dt0, self.dt_max),
            ));
        }
        if !(self.t_end > 0.0) {
            return Err(Error::config("t_end", "must be positive"));
        }
        for (name, v) in [
            ("mass_tol", self.mass_tol),
            ("energy_tol", self.energy_tol),
            ("step_tol_fraction", self.step_tol_fraction),
        ] {
            if !(v > 0.0) {
                return Err(Error::config(name, "tolerances must be positive"));
            }
        }
        if !(self.growth_factor > 1.0) {
            return Err(Error::config("growth_factor", "must exceed 1"));
        }
        if self.snapshot_interval == 0 {
            return Err(Error::config("snapshot_interval", "must be at least 1"));
        }
        if self.damping < 0.0 {
            return Err(Error::config("damping", "must be nonnegative"));
        }
        Ok(())
    }
}

const RING_CAPACITY: usize = 256;

/// Mutable state of a run.
#[derive(Debug, Clone)]
pub struct SimState {
    pub field: Field,
    pub t: f64,
    pub dt: f64,
    pub step: u64,
    /// Consecutive quiet steps counted towards the next dt doubling.
    pub calm_streak: u32,
    pub mass0: f64,
    pub energy0: f64,
    /// Initial ‖Δu‖², the reference for the growth monitor.
    pub lap_sq0: f64,
    pub snapshots: VecDeque<FunctionalSnapshot>,
    pub status: Status,
    pub trigger: Option<Trigger>,
    pub message: Option<String>,
}

impl SimState {
    pub fn new(u0: Field, physics: &Physics, dt: f64) -> Self {
        let f = physics.functionals(&u0, 0.0);
        Self {
            field: u0,
            t: 0.0,
            dt,
            step: 0,
            calm_streak: 0,
            mass0: f.mass,
            energy0: f.energy,
            lap_sq0: f.lap_sq,
            snapshots: VecDeque::with_capacity(RING_CAPACITY),
            status: Status::Running,
            trigger: None,
            message: None,
        }
    }

    fn energy_scale(&self) -> f64 {
        self.energy0.abs().max(1.0)
    }

    fn push_ring(&mut self, s: FunctionalSnapshot) {
        if self.snapshots.len() == RING_CAPACITY {
            self.snapshots.pop_front();
        }
        self.snapshots.push_back(s);
    }

    pub fn mass_drift(&self, f: &FunctionalSnapshot) -> f64 {
        if self.mass0 == 0.0 {
            f.mass.abs()
        } else {
            (f.mass - self.mass0).abs() / self.mass0
        }
    }

    pub fn energy_drift(&self, f: &FunctionalSnapshot) -> f64 {
        (f.energy - self.energy0).abs() / self.energy_scale()
    }
}

/// One Strang step of the state at its current dt (no adaptivity).
pub fn step(state: &SimState, physics: &Physics) -> Result<SimState> {
    if state.status != Status::Running {
        return Err(Error::config("status", "step requires a running state"));
    }
    let mut stepper = Stepper::new(&state.field.grid, *physics);
    let u = stepper.step(&state.field, state.dt)?;
    let mut next = state.clone();
    if !u.is_finite() {
        next.status = Status::Failed;
        next.message = Some("non-finite values after step; previous field retained".into());
        return Ok(next);
    }
    next.field = u;
    next.t += state.dt;
    next.step += 1;
    Ok(next)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub snapshot: FunctionalSnapshot,
    pub dt: f64,
    pub step: u64,
    /// M_{φ_R} when a cutoff profile is attached.
    pub virial: Option<f64>,
    /// Fraction of mass within the outer tenth of the domain.
    pub band_mass: f64,
}

/// Record of a run: one row per snapshot plus the sampled full fields.
#[derive(Debug)]
pub struct Trajectory {
    pub rows: Vec<TrajectoryRow>,
    pub fields: FieldStore,
    pub band_flagged: bool,
    pub mass0: f64,
    pub energy0: f64,
}

impl Trajectory {
    pub fn snapshots(&self) -> Vec<FunctionalSnapshot> {
        self.rows.iter().map(|r| r.snapshot).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,step,dt,mass,energy,grad_sq,lap_sq,pot,virial\n");
        for r in &self.rows {
            let s = &r.snapshot;
            let v = r.virial.map(|v| format!("{v:.17e}")).unwrap_or_default();
            out.push_str(&format!(
                "{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
                s.time, r.step, r.dt, s.mass, s.energy, s.grad_sq, s.lap_sq, s.pot, v
            ));
        }
        out
    }
}

/// Hooks called as the run progresses.
pub trait Observer {
    fn snapshot(&mut self, _row: &TrajectoryRow) {}
}

pub struct Silent;
impl Observer for Silent {}

pub struct Evolution {
    pub state: SimState,
    pub trajectory: Trajectory,
}

/// Fraction of mass in r > 0.9 r_max or |z| > 0.9 z_max.
pub fn band_mass_fraction(u: &Field) -> f64 {
    let g = &u.grid;
    let (mut band, mut total) = (0.0, 0.0);
    for j in 0..g.n_r {
        let w = g.quad_weights[j];
        let outer_r = g.r_nodes[j] > 0.9 * g.r_max;
        for k in 0..g.n_z {
            let m = w * u.values[g.index(j, k)].norm_sqr();
            total += m;
            if outer_r || g.z_nodes[k].abs() > 0.9 * g.z_max {
                band += m;
            }
        }
    }
    if total > 0.0 {
        band / total
    } else {
        0.0
    }
}

fn damping_mask(grid: &Grid, strength: f64, dt: f64) -> Vec<f64> {
    let ramp = |x: f64| {
        // 0 below 0.9, rising smoothly to 1 at the boundary.
        let t = ((x - 0.9) / 0.1).clamp(0.0, 1.0);
        t * t * (3.0 - 2.0 * t)
    };
    let mut mask = vec![1.0; grid.len()];
    for j in 0..grid.n_r {
        let br = ramp(grid.r_nodes[j] / grid.r_max);
        for k in 0..grid.n_z {
            let bz = ramp(grid.z_nodes[k].abs() / grid.z_max);
            mask[grid.index(j, k)] = (-strength * dt * br.max(bz)).exp();
        }
    }
    mask
}

/// Run from u0 until t_end, blowup detection, or failure.
pub fn evolve(
    config: &StepConfig,
    u0: Field,
    profile: Option<&CutoffProfile>,
    observer: &mut dyn Observer,
) -> Result<Evolution> {
    config.validate()?;
    let state = SimState::new(u0, &config.physics, config.dt0);
    continue_evolution(config, state, profile, observer)
}

/// Continue a run from an existing state (fresh or restored from a checkpoint).
pub fn continue_evolution(
    config: &StepConfig,
    mut state: SimState,
    profile: Option<&CutoffProfile>,
    observer: &mut dyn Observer,
) -> Result<Evolution> {
    config.validate()?;
    let physics = config.physics;
    let grid = Arc::clone(&state.field.grid);
    let mut stepper = Stepper::new(&grid, physics);
    let mut fields = FieldStore::new(config.field_memory_cap, config.spill_dir.clone());
    let mut trajectory_rows = Vec::new();
    let mut band_flagged = false;
    let mut snapshot_count: u64 = 0;
    let step_tol = config.step_tol_fraction * config.energy_tol;

    let mut prev = physics.functionals(&state.field, state.t);
    let mut record = |state: &mut SimState,
                      f: FunctionalSnapshot,
                      fields: &mut FieldStore,
                      rows: &mut Vec<TrajectoryRow>,
                      observer: &mut dyn Observer|
     -> Result<()> {
        let band = band_mass_fraction(&state.field);
        if band > 1e-8 {
            band_flagged = true;
        }
        let row = TrajectoryRow {
            snapshot: f,
            dt: state.dt,
            step: state.step,
            virial: profile.map(|p| crate::diagnostics::virial(&state.field, p)),
            band_mass: band,
        };
        if config.field_every > 0 && snapshot_count % config.field_every == 0 {
            fields.push(f.time, &state.field)?;
        }
        if config.checkpoint_every > 0 && snapshot_count % config.checkpoint_every == 0 {
            if let Some(path) = &config.checkpoint_path {
                Checkpoint::from_state(state, &physics).save(path)?;
            }
        }
        snapshot_count += 1;
        state.push_ring(f);
        observer.snapshot(&row);
        rows.push(row);
        Ok(())
    };

    record(&mut state, prev, &mut fields, &mut trajectory_rows, observer)?;
    let mut damp: Option<(f64, Vec<f64>)> = None;
    let end_eps = 1e-12 * config.t_end.max(1.0);

    while state.status == Status::Running {
        if state.t >= config.t_end - end_eps || state.step >= config.max_steps {
            state.status = Status::Completed;
            break;
        }
        let h = state.dt.min(config.t_end - state.t);
        let trial = stepper.step(&state.field, h)?;
        if !trial.is_finite() {
            state.status = Status::Failed;
            state.message = Some(format!("non-finite field at t = {:.6e}; last good field retained", state.t));
            break;
        }
        let f = physics.functionals(&trial, state.t + h);
        let step_drift = ((f.mass - prev.mass).abs() / state.mass0.max(f64::MIN_POSITIVE))
            .max((f.energy - prev.energy).abs() / state.energy_scale());
        let cum_ok = state.mass_drift(&f) <= config.mass_tol && state.energy_drift(&f) <= config.energy_tol;
        if step_drift > step_tol || !cum_ok {
            if state.dt / 2.0 < config.dt_min {
                if cum_ok {
                    state.status = Status::BlowupDetected;
                    state.trigger = Some(Trigger::DtUnderflow);
                    state.message = Some(format!(
                        "step drift {step_drift:.3e} persists at dt_min = {:.3e}",
                        config.dt_min
                    ));
                } else {
                    state.status = Status::Failed;
                    state.message = Some(format!(
                        "conservation violated at dt_min (mass drift {:.3e}, energy drift {:.3e})",
                        state.mass_drift(&f),
                        state.energy_drift(&f)
                    ));
                }
                break;
            }
            state.dt /= 2.0;
            state.calm_streak = 0;
            continue;
        }

        state.field = trial;
        state.t += h;
        state.step += 1;
        prev = f;

        if config.damping > 0.0 {
            if damp.as_ref().map(|d| d.0) != Some(h) {
                damp = Some((h, damping_mask(&grid, config.damping, h)));
            }
            let mask = &damp.as_ref().expect("mask built").1;
            let before = prev;
            let values = state.field.values.iter().zip(mask).map(|(v, m)| v * m).collect();
            state.field = state.field.with_values(values);
            prev = physics.functionals(&state.field, state.t);
            // Absorbed mass and energy leave the reference budget.
            state.mass0 -= before.mass - prev.mass;
            state.energy0 -= before.energy - prev.energy;
        }

        if step_drift < step_tol / 100.0 {
            state.calm_streak += 1;
            if state.calm_streak >= 50 {
                state.dt = (2.0 * state.dt).min(config.dt_max);
                state.calm_streak = 0;
            }
        } else {
            state.calm_streak = 0;
        }

        let grown = prev.lap_sq >= config.growth_factor * state.lap_sq0;
        if grown {
            state.status = Status::BlowupDetected;
            state.trigger = Some(Trigger::LapGrowth);
        }
        let done = state.t >= config.t_end - end_eps || state.step >= config.max_steps;
        if grown || done || state.step % config.snapshot_interval == 0 {
            record(&mut state, prev, &mut fields, &mut trajectory_rows, observer)?;
        }
    }

    // A final row for terminations that did not coincide with a snapshot.
    if trajectory_rows.last().map(|r| r.step) != Some(state.step) {
        let f = physics.functionals(&state.field, state.t);
        record(&mut state, f, &mut fields, &mut trajectory_rows, observer)?;
    }
    if state.status == Status::Failed {
        if let Some(path) = &config.checkpoint_path {
            Checkpoint::from_state(&state, &physics).save(path)?;
        }
    }

    let trajectory = Trajectory {
        rows: trajectory_rows,
        fields,
        band_flagged,
        mass0: state.mass0,
        energy0: state.energy0,
    };
    Ok(Evolution { state, trajectory })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use crate::operators::{inner, mass};

    fn grid() -> Arc<Grid> {
        build_grid(4, 10.0, 48, 10.0, 48).unwrap()
    }

    fn gaussian(g: &Arc<Grid>, a: f64) -> Field {
        Field::from_fn(g, |r, z| Complex64::new(a * (-(r * r + z * z) / 2.0).exp(), 0.0))
    }

    #[test]
    fn zero_field_stays_zero() {
        let g = grid();
        let mut s = Stepper::new(&g, Physics::focusing(1.3, 0.5));
        let u = s.step(&Field::zeros(&g), 0.01).unwrap();
        assert!(u.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn nonlinear_phase_keeps_modulus() {
        let g = grid();
        let u = gaussian(&g, 3.0);
        let v = nonlinear_phase(&u, 0.37, &Physics::focusing(1.0, 0.0));
        for (a, b) in u.values.iter().zip(&v.values) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_step_is_unitary() {
        let g = grid();
        let u = Field::from_fn(&g, |r, z| Complex64::new(0.0, z).exp().scale((-(r * r) / 2.0 - z * z / 3.0).exp()));
        let p = linear_propagator(&g, 1.0, 0.05).unwrap();
        let v = p.apply(&u);
        assert!((mass(&v) - mass(&u)).abs() < 1e-12 * mass(&u));
    }

    #[test]
    fn propagator_rotates_eigenmodes() {
        // A single spectral coefficient is an exact eigenmode of the discrete flow.
        let g = grid();
        let mut s = to_spectrum(&Field::zeros(&g));
        let (n, k) = (3, 2);
        s.coeffs[g.index(n, k)] = Complex64::new(1.0, 0.0);
        let u = Field::from_values(&g, from_spectrum(&s)).unwrap();
        let (mu, dt) = (0.7, 0.013);
        let v = linear_propagator(&g, mu, dt).unwrap().apply(&u);
        let l = Spectrum::neg_lap_symbol(&g, n, k);
        let expect = Complex64::from_polar(1.0, -dt * (l * l + mu * l));
        let ratio = inner(&u, &v) / inner(&u, &u);
        assert!((ratio - expect).norm() < 1e-10);
    }

    #[test]
    fn rejects_bad_dt() {
        assert!(linear_propagator(&grid(), 0.0, 0.0).is_err());
    }

    #[test]
    fn step_helper_advances_time() {
        let g = grid();
        let phys = Physics::focusing(1.0, 0.0);
        let s0 = SimState::new(gaussian(&g, 0.5), &phys, 1e-3);
        let s1 = step(&s0, &phys).unwrap();
        assert_eq!(s1.step, 1);
        assert!((s1.t - 1e-3).abs() < 1e-18);
        assert!((mass(&s1.field) - s0.mass0).abs() < 1e-12 * s0.mass0);
    }

    #[test]
    fn adaptive_run_conserves_and_completes() {
        let g = grid();
        let mut cfg = StepConfig::new(Physics::focusing(1.0, 0.0), 0.01, 0.5);
        cfg.snapshot_interval = 5;
        let ev = evolve(&cfg, gaussian(&g, 0.5), None, &mut Silent).unwrap();
        assert_eq!(ev.state.status, Status::Completed);
        assert!((ev.state.t - 0.5).abs() < 1e-12);
        let last = ev.trajectory.rows.last().unwrap().snapshot;
        assert!(ev.state.mass_drift(&last) < 1e-10);
        assert!(ev.state.energy_drift(&last) < 1e-5);
    }
}
