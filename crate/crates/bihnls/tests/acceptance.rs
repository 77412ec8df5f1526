//! Acceptance criteria 1 to 10. Each test prints one PASS/FAIL line.
//!
//! The tests share one lock so that the wall-clock limits are measured on an
//! otherwise idle process.

use std::path::Path;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use bihnls::diagnostics::{family, virial_rate};
use bihnls::geometry::cutoff::{sample, BaseCutoff};
use bihnls::geometry::{build_cutoff, build_grid, certify_cutoff, CERTIFICATE_TOL};
use bihnls::groundstate::{solve_ground_state, GroundStateOptions};
use bihnls::harness::{preset, resume_scenario, run_inequality_suite, run_scenario, RunOutcome, SimConfig};
use bihnls::operators::{bilaplacian, inner, laplacian, Field};
use bihnls::solver::{evolve, Physics, Silent, Status, StepConfig, Stepper};

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {n:>2} {name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} failed: {detail}");
}

fn gaussian(g: &std::sync::Arc<bihnls::geometry::Grid>, a: f64) -> Field {
    Field::from_fn(g, |r, z| Complex64::new(a * (-(r * r + z * z) / 2.0).exp(), 0.0))
}

fn rel_max(a: &Field, b: &Field) -> f64 {
    let num = a.values.iter().zip(&b.values).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    let den = b.values.iter().map(|y| y.norm()).fold(0.0, f64::max);
    num / den
}

#[test]
fn criterion_01_cutoff_certificate() {
    let _g = serial();
    let mut worst = f64::INFINITY;
    let mut max_d2 = f64::NEG_INFINITY;
    let mut elapsed = Duration::ZERO;
    let base = BaseCutoff::new();
    for d in [4u32, 5] {
        let grid = build_grid(d, 40.0, 512, 8.0, 16).unwrap();
        let start = Instant::now();
        for radius in [4.0, 8.0, 16.0] {
            let c = certify_cutoff(&build_cutoff(&grid, radius).unwrap(), &grid);
            worst = worst
                .min(c.min_one_minus_d2psi)
                .min(c.min_one_minus_dpsi_over_r)
                .min(c.min_dim_minus_lap_psi);
            max_d2 = max_d2.max(c.max_d2psi);
            // Between the nodes as well, on a fine uniform sampling.
            for i in 0..=20_000 {
                let r = 3.0 * radius * i as f64 / 20_000.0;
                max_d2 = max_d2.max(sample(&base, radius, r, d as f64 - 2.0).psi[2]);
            }
        }
        elapsed += start.elapsed();
    }
    verdict(
        1,
        "cutoff certificate",
        worst >= -CERTIFICATE_TOL && max_d2 <= 1.0 && elapsed < Duration::from_secs(1),
        format!("min property margin {worst:.3e}, max psi'' {max_d2:.15}, {elapsed:.2?}"),
    );
}

#[test]
fn criterion_02_operator_oracles() {
    let _g = serial();
    let start = Instant::now();
    let (mut lap_err, mut bilap_err) = (0.0f64, 0.0f64);
    let mut grids = Vec::new();
    for d in [4u32, 5] {
        let g = build_grid(d, 10.0, 512, 10.0, 512).unwrap();
        let u = gaussian(&g, 1.0);
        let (mut abs_err, mut bilap_scale) = (0.0f64, 0.0f64);
        let (lu, bu) = (laplacian(&u), bilaplacian(&u));
        let n = d as f64;
        for j in 0..g.n_r {
            for k in 0..g.n_z {
                let x2 = g.r_nodes[j].powi(2) + g.z_nodes[k].powi(2);
                let e = (-x2 / 2.0).exp();
                let i = g.index(j, k);
                lap_err = lap_err.max((lu.values[i].re - (x2 - n) * e).abs());
                let exact = (x2 * x2 - 2.0 * (n + 2.0) * x2 + n * (n + 2.0)) * e;
                abs_err = abs_err.max((bu.values[i].re - exact).abs());
                bilap_scale = bilap_scale.max(exact.abs());
            }
        }
        bilap_err = bilap_err.max(abs_err / bilap_scale);
        grids.push(g);
    }
    let g = &grids[0];
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let (mut sym, mut quad) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let u = family::random_field(g, &mut rng);
        let v = family::random_field(g, &mut rng);
        let (lu, lv) = (laplacian(&u), laplacian(&v));
        let a = inner(&lu, &v);
        let b = inner(&u, &lv);
        let scale = inner(&lu, &lu).re.sqrt() * inner(&v, &v).re.sqrt();
        sym = sym.max((a - b).norm() / scale);
        let q = inner(&bilaplacian(&u), &u);
        let l2 = inner(&lu, &lu).re;
        quad = quad.max((q - l2).norm() / l2);
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        "operator oracles",
        lap_err <= 1e-6 && bilap_err <= 1e-4 && sym <= 1e-8 && quad <= 1e-8 && elapsed < Duration::from_secs(30),
        format!(
            "Laplacian max error {lap_err:.2e}, bilaplacian max relative error {bilap_err:.2e}, symmetry {sym:.2e}, <B u,u> vs |L u|^2 {quad:.2e}, {elapsed:.2?}"
        ),
    );
}

#[test]
fn criterion_03_conservation() {
    let _g = serial();
    let start = Instant::now();
    let g = build_grid(4, 10.0, 64, 10.0, 64).unwrap();

    // Linear flow, 10^4 fixed steps.
    let linear = Physics { kappa: 0.0, ..Physics::focusing(1.0, 0.5) };
    let u0 = Field::from_fn(&g, |r, z| {
        Complex64::from_polar((-(r * r + z * z) / 2.0).exp(), 0.7 * z + 0.2 * r * r)
    });
    let f0 = linear.functionals(&u0, 0.0);
    let mut stepper = Stepper::new(&g, linear);
    let mut u = u0;
    let (mut lin_mass, mut lin_energy) = (0.0f64, 0.0f64);
    for i in 0..10_000 {
        u = stepper.step(&u, 1e-3).unwrap();
        if i % 100 == 99 {
            let f = linear.functionals(&u, 0.0);
            lin_mass = lin_mass.max((f.mass - f0.mass).abs() / f0.mass);
            lin_energy = lin_energy.max((f.energy - f0.energy).abs() / f0.energy.abs().max(1.0));
        }
    }

    // Smooth nonlinear run.
    let mut cfg = StepConfig::new(Physics::focusing(1.0, 0.0), 1e-2, 5.0);
    cfg.dt_min = 1e-8;
    cfg.snapshot_interval = 10;
    let ev = evolve(&cfg, gaussian(&g, 0.5), None, &mut Silent).unwrap();
    let (mut nl_mass, mut nl_energy) = (0.0f64, 0.0f64);
    for row in &ev.trajectory.rows {
        nl_mass = nl_mass.max(ev.state.mass_drift(&row.snapshot));
        nl_energy = nl_energy.max(ev.state.energy_drift(&row.snapshot));
    }
    let completed = ev.state.status == Status::Completed && (ev.state.t - 5.0).abs() < 1e-9;
    let elapsed = start.elapsed();
    verdict(
        3,
        "conservation",
        lin_mass <= 1e-10
            && lin_energy <= 1e-10
            && completed
            && nl_mass <= 1e-6
            && nl_energy <= 1e-5
            && elapsed < Duration::from_secs(300),
        format!(
            "linear mass {lin_mass:.2e} energy {lin_energy:.2e}; nonlinear to t = {:.3} mass {nl_mass:.2e} energy {nl_energy:.2e}; {elapsed:.2?}",
            ev.state.t
        ),
    );
}

#[test]
fn criterion_04_splitting_order() {
    let _g = serial();
    let g = build_grid(4, 10.0, 48, 10.0, 48).unwrap();
    let physics = Physics::focusing(1.0, 0.0);
    let u0 = gaussian(&g, 2.0);
    let t_end = 0.1;
    let run = |dt: f64| {
        let n = (t_end / dt).round() as usize;
        let mut s = Stepper::new(&g, physics);
        let mut u = u0.clone();
        for _ in 0..n {
            u = s.step(&u, dt).unwrap();
        }
        u
    };
    let dt0 = 2.5e-3;
    let reference = run(dt0 / 128.0);
    let ladder: Vec<(f64, f64)> = (0..4)
        .map(|k| {
            let dt = dt0 / f64::from(1 << k);
            (dt, rel_max(&run(dt), &reference))
        })
        .collect();
    // Least-squares slope of log error against log dt.
    let xs: Vec<f64> = ladder.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = ladder.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
        / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    let errors: Vec<String> = ladder.iter().map(|p| format!("{:.2e}", p.1)).collect();
    verdict(
        4,
        "splitting order",
        (slope - 2.0).abs() <= 0.2,
        format!("slope {slope:.3}, errors {}", errors.join(" ")),
    );
}

/// The mc-neg-energy run is shared by criteria 5 and 6.
fn mc_neg_energy() -> &'static (RunOutcome, Duration) {
    static RUN: OnceLock<(RunOutcome, Duration)> = OnceLock::new();
    RUN.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let start = Instant::now();
        let out = run_scenario(&preset("mc-neg-energy").unwrap(), dir.path(), &mut Silent).unwrap();
        (out, start.elapsed())
    })
}

#[test]
fn criterion_05_mass_critical_blowup() {
    let _g = serial();
    let (out, elapsed) = mc_neg_energy();
    let growth = out.state.snapshots.back().map(|s| s.lap_sq).unwrap_or(0.0) / out.state.lap_sq0;
    let e0 = out.state.energy0;
    let closed_form = -3.0625 * std::f64::consts::PI.powi(2);
    verdict(
        5,
        "mass-critical negative-energy blowup",
        out.status == Status::BlowupDetected
            && out.verdict.detected
            && growth >= 1e3
            && out.max_mass_drift <= 1e-5
            && (e0 - closed_form).abs() <= 1e-6 * closed_form.abs()
            && *elapsed < Duration::from_secs(900),
        format!(
            "status {:?}, growth {growth:.3e}, t = {:.6}, steps {}, mass drift {:.2e}, E0 {e0:.8}, {elapsed:.1?}",
            out.status, out.state.t, out.state.step, out.max_mass_drift
        ),
    );
}

fn virial_violations(out: &RunOutcome) -> (usize, usize) {
    let samples = out.virial.iter().map(|v| v.reports.iter().filter(|r| r.interior).count()).sum();
    (out.virial.iter().map(|v| v.violations).sum(), samples)
}

#[test]
fn criterion_06_virial_rate_inequality() {
    let _g = serial();
    let mut details = Vec::new();
    let mut pass = true;
    let (mc, _) = mc_neg_energy();
    let mut outcomes = vec![("mc-neg-energy", None)];
    for name in ["supercritical-mu-pos", "linear-sanity"] {
        let dir = tempfile::tempdir().unwrap();
        outcomes.push((name, Some(run_scenario(&preset(name).unwrap(), dir.path(), &mut Silent).unwrap())));
    }
    for (name, own) in &outcomes {
        let out = own.as_ref().unwrap_or(mc);
        let (bad, samples) = virial_violations(out);
        pass &= bad == 0 && samples > 0 && out.virial.len() == 3;
        details.push(format!("{name} {bad}/{samples}"));
    }
    verdict(6, "virial rate inequality", pass, format!("violations {}", details.join(", ")));
}

#[test]
fn criterion_07_mass_critical_core_bound() {
    let _g = serial();
    // The A = 7 Gaussian is below 1e-12 beyond r = 8.
    let g = build_grid(4, 10.0, 128, 10.0, 128).unwrap();
    let physics = Physics::focusing(1.0, 0.0);
    let profile = build_cutoff(&g, 8.0).unwrap();
    let mut cfg = StepConfig::new(physics, 1e-4, 49.0 * 1e-4);
    cfg.dt_min = 1e-10;
    cfg.field_every = 1;
    let ev = evolve(&cfg, gaussian(&g, 7.0), None, &mut Silent).unwrap();
    let bound = 16.0 * ev.trajectory.energy0;
    let tol = 0.01 * bound.abs();
    let mut worst = f64::NEG_INFINITY;
    let n = ev.trajectory.fields.len();
    for i in 0..n.min(50) {
        let u = ev.trajectory.fields.get(i).unwrap();
        worst = worst.max(virial_rate(&u, &physics, &profile) - bound);
    }
    verdict(
        7,
        "mass-critical core bound",
        n >= 50 && worst <= tol,
        format!("max dM/dt - 16E0 = {worst:.3e} over {} snapshots, tol {tol:.3e}", n.min(50)),
    );
}

#[test]
fn criterion_08_ground_state() {
    let _g = serial();
    let mut pass = true;
    let mut details = Vec::new();
    for d in [4u32, 5] {
        let start = Instant::now();
        let opts = GroundStateOptions::default();
        let q = solve_ground_state(d, 1.0, None, &opts).unwrap();
        let fine = solve_ground_state(
            d,
            1.0,
            None,
            &GroundStateOptions {
                n_r: 2 * opts.n_r,
                ..opts.clone()
            },
        )
        .unwrap();
        let elapsed = start.elapsed();
        let dm = (fine.mass_q - q.mass_q).abs() / q.mass_q;
        let dl = (fine.lap_q_sq - q.lap_q_sq).abs() / q.lap_q_sq;
        let residual = q.residual / q.norm();
        pass &= residual <= 1e-8
            && q.pohozaev_rel_err <= 1e-6
            && dm <= 1e-4
            && dl <= 1e-4
            && elapsed < Duration::from_secs(60);
        details.push(format!(
            "d = {d}: residual/|Q| {residual:.2e}, Pohozaev {:.2e}, refinement {dm:.2e} {dl:.2e}, {elapsed:.2?}",
            q.pohozaev_rel_err
        ));
    }
    verdict(8, "ground state", pass, details.join("; "));
}

#[test]
fn criterion_09_inequality_suite() {
    let _g = serial();
    let start = Instant::now();
    let report = run_inequality_suite(&preset("inequality-suite").unwrap(), None).unwrap();
    let elapsed = start.elapsed();
    let required = ["radial_sobolev", "axial_derivative", "axial_trace"];
    let mut pass = report.passes && elapsed < Duration::from_secs(120);
    for name in required {
        pass &= report.entries.iter().any(|e| e.name == name);
    }
    pass &= report.entries.iter().any(|e| e.name.starts_with("tail_R"));
    pass &= report.entries.iter().all(|e| e.samples >= 1000 && e.violations == 0);
    let summary: Vec<String> = report
        .entries
        .iter()
        .map(|e| format!("{} {}/{}", e.name, e.violations, e.samples))
        .collect();
    verdict(9, "inequality suite", pass, format!("{}, {elapsed:.2?}", summary.join(", ")));
}

fn small_config() -> SimConfig {
    SimConfig::from_json(
        r#"{"d": 4, "n_r": 48, "n_z": 48, "r_max": 10, "z_max": 10, "amplitude": 3.0,
            "dt0": 1e-3, "dt_min": 1e-9, "dt_max": 4e-3, "t_end": 0.3, "energy_tol": 1e-4,
            "snapshot_interval": 5, "field_every": 2, "checkpoint_every": 10, "seed": 11}"#,
    )
    .unwrap()
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn criterion_10_determinism_and_resume() {
    let _g = serial();
    let cfg = small_config();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let full = run_scenario(&cfg, a.path(), &mut Silent).unwrap();
    run_scenario(&cfg, b.path(), &mut Silent).unwrap();
    let mut identical = true;
    for f in ["trajectory.csv", "virial_R4.csv", "virial_R8.csv", "virial_R16.csv", "checkpoint.bin"] {
        identical &= read(&a.path().join(f)) == read(&b.path().join(f));
    }

    // Stop part way, then resume from the final checkpoint of the partial run.
    let first = tempfile::tempdir().unwrap();
    let partial = SimConfig {
        max_steps: full.state.step / 2,
        ..cfg.clone()
    };
    run_scenario(&partial, first.path(), &mut Silent).unwrap();
    let second = tempfile::tempdir().unwrap();
    let resumed = resume_scenario(&cfg, &first.path().join("checkpoint.bin"), second.path(), &mut Silent).unwrap();
    let diff = rel_max(&resumed.state.field, &full.state.field);
    let same_end = resumed.state.step == full.state.step && (resumed.state.t - full.state.t).abs() <= 1e-12;
    verdict(
        10,
        "determinism and checkpointing",
        identical && same_end && diff <= 1e-10 && full.status == Status::Completed,
        format!(
            "byte-identical artifacts {identical}, resume difference {diff:.2e} after {} steps",
            full.state.step
        ),
    );
}
