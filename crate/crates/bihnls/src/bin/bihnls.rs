use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bihnls::groundstate::{solve_ground_state, thresholds, GroundStateOptions};
use bihnls::harness::{self, Mode, SimConfig, PRESETS};
use bihnls::solver::{Observer, Status, TrajectoryRow};

#[derive(Parser)]
#[command(name = "bihnls", version, about = "Biharmonic NLS blowup simulator and diagnostics")]
struct Cli {
    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Override the seed of randomized diagnostics.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// JSON config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset (see preset-list).
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario: criterion check, evolution, diagnostics.
    Run {
        #[command(flatten)]
        source: Source,
        /// Print the resolved config and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// List the available presets.
    PresetList,
    /// Solve for the radial ground state and its thresholds.
    GroundState {
        #[arg(long, default_value_t = 5)]
        d: u32,
        #[arg(long, default_value_t = 1.0)]
        sigma: f64,
        #[arg(long, default_value_t = 256)]
        n_r: usize,
        #[arg(long, default_value_t = 40.0)]
        r_max: f64,
    },
    /// Check the functional inequalities on randomized fields.
    VerifyInequalities {
        #[command(flatten)]
        source: Source,
    },
    /// Continue a run from a checkpoint.
    Resume {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        source: Source,
    },
}

struct Progress {
    quiet: bool,
    count: u64,
    lap0: Option<f64>,
}

impl Observer for Progress {
    fn snapshot(&mut self, row: &TrajectoryRow) {
        let lap0 = *self.lap0.get_or_insert(row.snapshot.lap_sq);
        if !self.quiet && self.count % 50 == 0 {
            eprintln!(
                "t = {:.6e}  dt = {:.3e}  step = {}  |Δu|²/|Δu0|² = {:.3e}",
                row.snapshot.time,
                row.dt,
                row.step,
                row.snapshot.lap_sq / lap0
            );
        }
        self.count += 1;
    }
}

fn load(source: &Source, default: Option<&str>, seed: Option<u64>) -> bihnls::Result<SimConfig> {
    let mut cfg = match (&source.config, source.preset.as_deref().or(default)) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path).map_err(|e| bihnls::Error::Io {
                path: path.clone(),
                source: e,
            })?;
            SimConfig::from_json(&text)?
        }
        (None, Some(name)) => harness::preset(name)?,
        (None, None) => SimConfig::default(),
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn report_run(outcome: &harness::RunOutcome, quiet: bool) -> ExitCode {
    if !quiet {
        if let Some(c) = &outcome.criterion {
            println!("criterion: {}", c.summary());
        }
        println!(
            "status: {:?}  t = {:.6e}  steps = {}",
            outcome.status, outcome.state.t, outcome.state.step
        );
        println!(
            "blowup: detected = {}  branch = {:?}  growth = {:.3e}",
            outcome.verdict.detected, outcome.verdict.branch, outcome.verdict.growth_ratio
        );
        println!(
            "drift: mass {:.3e}  energy {:.3e}",
            outcome.max_mass_drift, outcome.max_energy_drift
        );
        for v in &outcome.virial {
            println!(
                "virial R = {}: C = {:.4e}, {} violations over {} samples",
                v.radius,
                v.calibration.constant,
                v.violations,
                v.reports.len()
            );
        }
        println!("artifacts in {}", outcome.out_dir.display());
    }
    if let Some(m) = &outcome.message {
        eprintln!("{m}");
    }
    if outcome.status == Status::Failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

fn verify(cfg: &SimConfig, out: &Path, quiet: bool) -> bihnls::Result<ExitCode> {
    let report = harness::run_inequality_suite(cfg, Some(out))?;
    if !quiet {
        for e in &report.entries {
            println!(
                "{:<20} samples {:>6}  violations {:>4}  worst relative margin {:.3e}",
                e.name, e.samples, e.violations, e.worst_rel_margin
            );
        }
        for t in &report.tail_ratios {
            println!("tail ratio R = {}: max {:.4e}", t.radius, t.max_ratio);
        }
        println!("half-constant axial form failed on {} samples", report.half_form_violations);
    }
    Ok(if report.passes { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut progress = Progress {
        quiet: cli.quiet,
        count: 0,
        lap0: None,
    };
    let result = match &cli.command {
        Command::PresetList => {
            for (name, about) in PRESETS {
                println!("{name:<26} {about}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run { source, print_config } => load(source, None, cli.seed).and_then(|cfg| {
            if *print_config {
                println!("{}", cfg.to_json());
                return Ok(ExitCode::SUCCESS);
            }
            match cfg.mode {
                Mode::Inequalities => verify(&cfg, &cli.out, cli.quiet),
                Mode::Evolve => harness::run_scenario(&cfg, &cli.out, &mut progress).map(|o| report_run(&o, cli.quiet)),
            }
        }),
        Command::VerifyInequalities { source } => {
            load(source, Some("inequality-suite"), cli.seed).and_then(|cfg| verify(&cfg, &cli.out, cli.quiet))
        }
        Command::Resume { checkpoint, source } => load(source, None, cli.seed).and_then(|cfg| {
            harness::resume_scenario(&cfg, checkpoint, &cli.out, &mut progress).map(|o| report_run(&o, cli.quiet))
        }),
        Command::GroundState { d, sigma, n_r, r_max } => {
            let opts = GroundStateOptions {
                n_r: *n_r,
                r_max: *r_max,
                ..GroundStateOptions::default()
            };
            solve_ground_state(*d, *sigma, None, &opts).and_then(|q| {
                std::fs::create_dir_all(&cli.out).map_err(|e| bihnls::Error::Io {
                    path: cli.out.clone(),
                    source: e,
                })?;
                q.write_csv(&cli.out.join("ground_state.csv"))?;
                let th = thresholds(&q).ok();
                let summary = serde_json::json!({
                    "d": q.d,
                    "sigma": q.sigma,
                    "iterations": q.iterations,
                    "residual": q.residual,
                    "mass_q": q.mass_q,
                    "lap_q_sq": q.lap_q_sq,
                    "energy_q": q.energy_q,
                    "pohozaev_rel_err": q.pohozaev_rel_err,
                    "first_zero": q.first_zero,
                    "thresholds": th,
                });
                let path = cli.out.join("ground_state.json");
                std::fs::write(&path, serde_json::to_string_pretty(&summary)?)
                    .map_err(|e| bihnls::Error::Io { path, source: e })?;
                if !cli.quiet {
                    println!("{}", serde_json::to_string_pretty(&summary)?);
                }
                Ok(ExitCode::SUCCESS)
            })
        }
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
