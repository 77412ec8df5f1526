//! The inequality verifiers run over a randomized field family.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::SimConfig;
use crate::diagnostics::family::random_field;
use crate::diagnostics::inequalities::{
    axial_norm_profile, check_axial_derivative_bound, check_axial_trace, check_gn_1d, check_radial_sobolev_all,
    check_tail_estimate_with, sharp_gn_constant, tail_constant,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct SuiteEntry {
    pub name: String,
    pub samples: usize,
    pub violations: usize,
    /// Smallest margin relative to the right-hand side over the samples.
    pub worst_rel_margin: f64,
}

impl SuiteEntry {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            samples: 0,
            violations: 0,
            worst_rel_margin: f64::INFINITY,
        }
    }

    fn add(&mut self, passes: bool, rel_margin: f64) {
        self.samples += 1;
        if !passes {
            self.violations += 1;
        }
        self.worst_rel_margin = self.worst_rel_margin.min(rel_margin);
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TailRatio {
    pub radius: f64,
    /// Largest ∫_{|y|≥R}|u|^{2σ+2} / (R^{−σ(d−2)}‖∇u‖^{2σ}) over the samples.
    pub max_ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InequalitySuiteReport {
    pub d: u32,
    pub sigma: f64,
    pub seed: u64,
    pub grid: String,
    pub entries: Vec<SuiteEntry>,
    pub tail_ratios: Vec<TailRatio>,
    /// Samples where the axial derivative bound fails with the factor ½.
    pub half_form_violations: usize,
    pub passes: bool,
}

fn rel(margin: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        margin / scale
    } else {
        0.0
    }
}

/// Run every verifier on `inequality_samples` fields drawn from `seed`;
/// writes `inequalities.json` when `out` is given.
pub fn run_inequality_suite(cfg: &SimConfig, out: Option<&Path>) -> Result<InequalitySuiteReport> {
    let grid = cfg.grid()?;
    if !(cfg.sigma > 0.0 && cfg.sigma <= 1.0) {
        return Err(Error::config("sigma", "the tail estimate needs 0 < sigma <= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let k_sigma = tail_constant(cfg.sigma);
    let gn_p = [4.0, 6.0];
    let gn_c: Vec<f64> = gn_p.iter().map(|&p| sharp_gn_constant(p)).collect();

    let mut sobolev = SuiteEntry::new("radial_sobolev");
    let mut axial = SuiteEntry::new("axial_derivative");
    let mut trace = SuiteEntry::new("axial_trace");
    let mut gn: Vec<SuiteEntry> = gn_p.iter().map(|p| SuiteEntry::new(format!("gn_1d_p{p}"))).collect();
    let mut tail: Vec<SuiteEntry> = cfg.r_list.iter().map(|r| SuiteEntry::new(format!("tail_R{r}"))).collect();
    let mut ratios: Vec<TailRatio> = cfg
        .r_list
        .iter()
        .map(|&radius| TailRatio { radius, max_ratio: 0.0 })
        .collect();
    let mut half_form_violations = 0;

    for _ in 0..cfg.inequality_samples {
        let u = random_field(&grid, &mut rng);
        let s = check_radial_sobolev_all(&u);
        sobolev.add(s.passes, rel(s.margin, s.rhs));
        let a = check_axial_derivative_bound(&u);
        axial.add(a.passes, rel(a.margin_one, a.scale));
        if a.half_violations > 0 {
            half_form_violations += 1;
        }
        let t = check_axial_trace(&u);
        trace.add(t.passes, rel(t.margin, t.rhs));
        let h = axial_norm_profile(&u);
        for ((p, c), e) in gn_p.iter().zip(&gn_c).zip(gn.iter_mut()) {
            let r = check_gn_1d(&h, grid.dz, *p, Some(*c));
            e.add(r.passes, rel(r.margin, r.rhs));
        }
        for ((&radius, e), ratio) in cfg.r_list.iter().zip(tail.iter_mut()).zip(ratios.iter_mut()) {
            let r = check_tail_estimate_with(&u, radius, cfg.sigma, k_sigma);
            e.add(r.passes, rel(r.bound - r.tail, r.bound));
            ratio.max_ratio = ratio.max_ratio.max(r.ratio);
        }
    }

    let mut entries = vec![sobolev, axial, trace];
    entries.extend(gn);
    entries.extend(tail);
    let passes = entries.iter().all(|e| e.violations == 0);
    let report = InequalitySuiteReport {
        d: cfg.d,
        sigma: cfg.sigma,
        seed: cfg.seed,
        grid: grid.fingerprint(),
        entries,
        tail_ratios: ratios,
        half_form_violations,
        passes,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("inequalities.json");
        std::fs::write(&path, serde_json::to_string_pretty(&report)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(report)
}
