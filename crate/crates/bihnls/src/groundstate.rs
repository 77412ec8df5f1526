//! Radial ground state of Δ²Q + Q − |Q|^{2σ}Q = 0 in R^d, threshold
//! quantities, and the blowup criteria evaluated on an initial datum.
//!
//! Q is computed by Petviashvili iteration in the eigenbasis of a fully
//! radial discretization. The fourth-order linearization makes the tail of
//! Q oscillate, so Q is positive and decreasing only up to its first zero.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::quadrature::{barycentric_weights, gauss_jacobi};
use crate::geometry::radial::RadialBasis;
use crate::operators::{energy_from_parts, FunctionalSnapshot};

pub fn critical_index(d: u32, sigma: f64) -> f64 {
    d as f64 / 2.0 - 2.0 / sigma
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GroundStateOptions {
    pub n_r: usize,
    pub r_max: f64,
    pub max_iters: usize,
    /// Stop when max |Q_{n+1} − Q_n| ≤ tol · max |Q_n|.
    pub tol: f64,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            n_r: 256,
            r_max: 40.0,
            max_iters: 2000,
            tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundStateResult {
    pub d: u32,
    pub sigma: f64,
    pub n_r: usize,
    pub r_max: f64,
    pub r: Vec<f64>,
    pub profile: Vec<f64>,
    pub iterations: usize,
    pub residual_history: Vec<f64>,
    /// ‖Δ²Q + Q − |Q|^{2σ}Q‖₂.
    pub residual: f64,
    pub mass_q: f64,
    pub lap_q_sq: f64,
    pub pot_q: f64,
    /// E[Q] with μ = 0.
    pub energy_q: f64,
    /// |‖ΔQ‖² + ‖Q‖² − ‖Q‖^{2σ+2}_{2σ+2}| relative to the potential term.
    pub nehari_rel_err: f64,
    /// Dilation identity (d−4)/2‖ΔQ‖² + d/2‖Q‖² = d/(2σ+2)‖Q‖^{2σ+2}, relative error.
    pub pohozaev_rel_err: f64,
    pub min_over_max: f64,
    /// First radius where Q changes sign, if any.
    pub first_zero: Option<f64>,
    /// Q > 0 and non-increasing (to 1e−6 relative) on nodes before the first zero.
    pub positive_decreasing_to_first_zero: bool,
}

impl GroundStateResult {
    /// Q at arbitrary radius by barycentric interpolation in s = r², zero beyond r_max.
    pub fn interpolant(&self) -> impl Fn(f64) -> f64 + '_ {
        let alpha = (self.d as f64 - 2.0) / 2.0;
        let (x, w) = gauss_jacobi(self.n_r, alpha);
        let bary = barycentric_weights(&x, &w);
        let s_max = self.r_max * self.r_max;
        move |rho: f64| {
            let rho = rho.abs();
            if rho > self.r_max {
                return 0.0;
            }
            let xi = 2.0 * rho * rho / s_max - 1.0;
            let (mut num, mut den) = (0.0, 0.0);
            for ((xj, bj), qj) in x.iter().zip(&bary).zip(&self.profile) {
                let diff = xi - xj;
                if diff == 0.0 {
                    return *qj;
                }
                let c = bj / diff;
                num += c * qj;
                den += c;
            }
            num / den
        }
    }

    pub fn norm(&self) -> f64 {
        self.mass_q.sqrt()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("r,q\n");
        for (r, q) in self.r.iter().zip(&self.profile) {
            out.push_str(&format!("{r:.17e},{q:.17e}\n"));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn nonlinearity(q: &[f64], sigma: f64) -> Vec<f64> {
    q.iter().map(|&v| v.abs().powf(2.0 * sigma) * v).collect()
}

fn modal_residual(basis: &RadialBasis, qh: &[f64], nh: &[f64]) -> f64 {
    qh.iter()
        .zip(nh)
        .zip(&basis.lambda_capped)
        .map(|((c, n), l)| ((l * l + 1.0) * c - n).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// One Petviashvili update: Q ← M^γ (Δ²+1)^{−1}|Q|^{2σ}Q with
/// M = ⟨(Δ²+1)Q, Q⟩/⟨|Q|^{2σ}Q, Q⟩ and γ = (2σ+1)/(2σ).
pub fn petviashvili_step(basis: &RadialBasis, q: &[f64], sigma: f64) -> Vec<f64> {
    let qh = basis.to_modes(q);
    let nh = basis.to_modes(&nonlinearity(q, sigma));
    let num: f64 = qh.iter().zip(&basis.lambda_capped).map(|(c, l)| (l * l + 1.0) * c * c).sum();
    let den: f64 = qh.iter().zip(&nh).map(|(c, n)| c * n).sum();
    let factor = (num / den).powf((2.0 * sigma + 1.0) / (2.0 * sigma));
    let next: Vec<f64> = nh
        .iter()
        .zip(&basis.lambda_capped)
        .map(|(n, l)| factor * n / (l * l + 1.0))
        .collect();
    basis.from_modes(&next)
}

/// Solve for Q on a radial grid in R^d. `init` defaults to 3e^{−r²/2}.
pub fn solve_ground_state(
    d: u32,
    sigma: f64,
    init: Option<&dyn Fn(f64) -> f64>,
    opts: &GroundStateOptions,
) -> Result<GroundStateResult> {
    if d == 0 {
        return Err(Error::config("d", "dimension must be at least 1"));
    }
    if !(sigma > 0.0) || (d > 4 && sigma >= 4.0 / (d as f64 - 4.0)) {
        return Err(Error::config(
            "sigma",
            format!("sigma = {sigma} outside the admissible range for d = {d}"),
        ));
    }
    if opts.n_r < 16 || !(opts.r_max > 0.0) {
        return Err(Error::config("n_r", "ground state grid needs n_r >= 16 and r_max > 0"));
    }
    let basis = RadialBasis::new(d, opts.n_r, opts.r_max);
    let mut q: Vec<f64> = basis
        .r
        .iter()
        .map(|&r| init.map_or_else(|| 3.0 * (-r * r / 2.0).exp(), |f| f(r)))
        .collect();
    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    for it in 1..=opts.max_iters {
        let next = petviashvili_step(&basis, &q, sigma);
        let scale = q.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let next_scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !next.iter().all(|v| v.is_finite()) || next_scale < 1e-12 {
            return Err(Error::TrivialAttractor);
        }
        let change = q.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale;
        q = next;
        let qh = basis.to_modes(&q);
        let nh = basis.to_modes(&nonlinearity(&q, sigma));
        history.push(modal_residual(&basis, &qh, &nh));
        iterations = it;
        if change <= opts.tol {
            converged = true;
            break;
        }
    }
    let qh = basis.to_modes(&q);
    let nh = basis.to_modes(&nonlinearity(&q, sigma));
    let residual = modal_residual(&basis, &qh, &nh);
    let mass_q: f64 = qh.iter().map(|c| c * c).sum();
    if !converged || residual > 1e-8 * mass_q.sqrt() {
        return Err(Error::GroundStateNoConvergence {
            iterations,
            last_residual: residual,
            residual_history: history,
        });
    }
    let lap_q_sq: f64 = qh.iter().zip(&basis.lambda_capped).map(|(c, l)| l * l * c * c).sum();
    let pot_q = basis.integrate(&q.iter().map(|v| v.abs().powf(2.0 * sigma + 2.0)).collect::<Vec<_>>());
    let energy_q = energy_from_parts(lap_q_sq, 0.0, pot_q, 0.0, sigma, 1.0);
    let nehari_rel_err = (lap_q_sq + mass_q - pot_q).abs() / pot_q;
    let df = d as f64;
    let poho_l = (df - 4.0) / 2.0 * lap_q_sq + df / 2.0 * mass_q;
    let poho_r = df / (2.0 * sigma + 2.0) * pot_q;
    let pohozaev_rel_err = (poho_l - poho_r).abs() / poho_r;

    let max = q.iter().cloned().fold(f64::MIN, f64::max);
    let min = q.iter().cloned().fold(f64::MAX, f64::min);
    let first = q.iter().position(|&v| v <= 0.0);
    let first_zero = first.map(|j| if j == 0 { 0.0 } else { 0.5 * (basis.r[j - 1] + basis.r[j]) });
    let upto = first.unwrap_or(q.len());
    let positive_decreasing_to_first_zero =
        q[..upto].iter().all(|&v| v > 0.0) && q[..upto].windows(2).all(|w| w[1] <= w[0] + 1e-6 * max);

    Ok(GroundStateResult {
        d,
        sigma,
        n_r: opts.n_r,
        r_max: opts.r_max,
        r: basis.r.clone(),
        profile: q,
        iterations,
        residual_history: history,
        residual,
        mass_q,
        lap_q_sq,
        pot_q,
        energy_q,
        nehari_rel_err,
        pohozaev_rel_err,
        min_over_max: min / max,
        first_zero,
        positive_decreasing_to_first_zero,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdSet {
    pub d: u32,
    pub sigma: f64,
    pub s_c: f64,
    pub mass_q: f64,
    pub energy_q: f64,
    pub lap_q_sq: f64,
    /// E[Q]^{s_c} M[Q]^{2−s_c}.
    pub threshold_em: f64,
    /// ‖ΔQ‖₂² ‖Q‖₂^{2−s_c}.
    pub threshold_lap: f64,
}

pub fn thresholds(q: &GroundStateResult) -> Result<ThresholdSet> {
    let s_c = critical_index(q.d, q.sigma);
    if !(s_c > 0.0 && s_c < 2.0) {
        return Err(Error::ThresholdRange(s_c));
    }
    if !(q.energy_q > 0.0) {
        return Err(Error::Diagnostics(format!("E[Q] = {} is not positive", q.energy_q)));
    }
    Ok(ThresholdSet {
        d: q.d,
        sigma: q.sigma,
        s_c,
        mass_q: q.mass_q,
        energy_q: q.energy_q,
        lap_q_sq: q.lap_q_sq,
        threshold_em: q.energy_q.powf(s_c) * q.mass_q.powf(2.0 - s_c),
        threshold_lap: q.lap_q_sq * q.mass_q.sqrt().powf(2.0 - s_c),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// Mass-supercritical, μ ≠ 0.
    SupercriticalMuNonzero,
    /// Mass-supercritical, μ = 0.
    SupercriticalMuZero,
    /// Mass-critical.
    MassCritical,
}

impl Clause {
    pub fn label(self) -> &'static str {
        match self {
            Clause::SupercriticalMuNonzero => "mass-supercritical, mu != 0",
            Clause::SupercriticalMuZero => "mass-supercritical, mu = 0",
            Clause::MassCritical => "mass-critical",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Inequality {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs − lhs for "<", lhs − rhs for ">"; positive when the inequality holds.
    pub margin: f64,
    pub holds: bool,
}

impl Inequality {
    fn less(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin: rhs - lhs,
            holds: lhs < rhs,
        }
    }
    fn greater(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            margin: lhs - rhs,
            holds: lhs > rhs,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionReport {
    pub d: u32,
    pub sigma: f64,
    pub mu: f64,
    pub s_c: f64,
    pub mass: f64,
    pub energy: f64,
    pub lap_sq: f64,
    /// The clause whose hypotheses on (d, σ, μ) apply, if any.
    pub candidate: Option<Clause>,
    /// The clause whose conditions on the datum all hold.
    pub satisfied: Option<Clause>,
    pub inequalities: Vec<Inequality>,
    pub within_hypotheses: bool,
    pub notes: Vec<String>,
}

impl CriterionReport {
    pub fn summary(&self) -> String {
        match (self.satisfied, self.candidate) {
            (Some(c), _) => format!("{} satisfied", c.label()),
            (None, Some(c)) => format!("{} conditions not met", c.label()),
            (None, None) => "no blowup clause applies".into(),
        }
    }
}

/// Which blowup clause the datum with functionals `u0` satisfies.
pub fn check_blowup_criteria(
    u0: &FunctionalSnapshot,
    mu: f64,
    sigma: f64,
    d: u32,
    thresholds: Option<&ThresholdSet>,
    chi: f64,
) -> Result<CriterionReport> {
    let s_c = critical_index(d, sigma);
    let mut report = CriterionReport {
        d,
        sigma,
        mu,
        s_c,
        mass: u0.mass,
        energy: u0.energy,
        lap_sq: u0.lap_sq,
        candidate: None,
        satisfied: None,
        inequalities: Vec::new(),
        within_hypotheses: false,
        notes: Vec::new(),
    };
    let supercritical = d >= 5 && s_c > 0.0 && s_c < 2.0 && sigma > 0.0 && sigma <= 1.0;
    let critical = d >= 4 && s_c.abs() < 1e-12 && mu >= 0.0;
    if supercritical {
        report.within_hypotheses = true;
        if mu != 0.0 {
            report.candidate = Some(Clause::SupercriticalMuNonzero);
            let bound = if mu > 0.0 {
                0.0
            } else {
                if !(chi > 0.0) {
                    return Err(Error::config("chi", "chi must be positive when mu < 0"));
                }
                report
                    .notes
                    .push(format!("chi = {chi} is a supplied placeholder; its value is not determined here"));
                -chi * mu * mu * u0.mass
            };
            let ineq = Inequality::less("E[u0] < bound", u0.energy, bound);
            if ineq.holds {
                report.satisfied = Some(Clause::SupercriticalMuNonzero);
            }
            report.inequalities.push(ineq);
        } else {
            report.candidate = Some(Clause::SupercriticalMuZero);
            let neg = Inequality::less("E[u0] < 0", u0.energy, 0.0);
            if neg.holds {
                report.satisfied = Some(Clause::SupercriticalMuZero);
                report.inequalities.push(neg);
            } else {
                let th = thresholds.ok_or_else(|| {
                    Error::config("thresholds", "ground-state thresholds are required when mu = 0 and E[u0] >= 0")
                })?;
                if th.d != d || (th.sigma - sigma).abs() > 1e-12 {
                    return Err(Error::config("thresholds", "thresholds computed for a different (d, sigma)"));
                }
                let em = Inequality::less(
                    "E[u0]^s_c M[u0]^(2-s_c) < E[Q]^s_c M[Q]^(2-s_c)",
                    u0.energy.powf(s_c) * u0.mass.powf(2.0 - s_c),
                    th.threshold_em,
                );
                let lap = Inequality::greater(
                    "|Δu0|^2 |u0|^(2-s_c) > |ΔQ|^2 |Q|^(2-s_c)",
                    u0.lap_sq * u0.mass.sqrt().powf(2.0 - s_c),
                    th.threshold_lap,
                );
                if em.holds && lap.holds {
                    report.satisfied = Some(Clause::SupercriticalMuZero);
                }
                report.inequalities.push(em);
                report.inequalities.push(lap);
            }
        }
    } else if critical {
        report.within_hypotheses = true;
        report.candidate = Some(Clause::MassCritical);
        let ineq = Inequality::less("E[u0] < 0", u0.energy, 0.0);
        if ineq.holds {
            report.satisfied = Some(Clause::MassCritical);
        }
        report.inequalities.push(ineq);
    } else {
        report.notes.push(format!(
            "(d, sigma, mu) = ({d}, {sigma}, {mu}), s_c = {s_c:.4}: no blowup clause applies; run is exploratory"
        ));
    }
    Ok(report)
}
