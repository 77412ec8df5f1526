//! Blowup classification from the ‖Δu‖² history.
//!
//! The trailing window is fitted two ways: a power law
//! log ‖Δu‖² = a − γ log(T − t) with T free, and the exponential law
//! log ‖Δu‖² = a + b t (the T → ∞ limit of the power law). Finite-time
//! growth is favoured only when some finite T fits markedly better. This is
//! a statement about the sampled numerics, not a proof of either branch.

use serde::{Deserialize, Serialize};

use crate::operators::FunctionalSnapshot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trigger {
    LapGrowth,
    DtUnderflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GrowthBranch {
    FiniteTime,
    InfiniteTime,
    Undetermined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlowupVerdict {
    pub detected: bool,
    pub t_star_estimate: Option<f64>,
    /// For finite time, the exponent p in ‖Δu‖₂ ~ (T − t)^{−p}; for
    /// infinite time, the rate b in ‖Δu‖₂ ~ e^{b t}.
    pub growth_exponent: Option<f64>,
    pub trigger: Option<Trigger>,
    pub branch: GrowthBranch,
    pub growth_ratio: f64,
    pub power_fit_rss: Option<f64>,
    pub exponential_fit_rss: Option<f64>,
}

fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let icpt = my - slope * mx;
    let rss = x.iter().zip(y).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    (icpt, slope, rss)
}

fn power_rss(t: &[f64], y: &[f64], tau: f64) -> (f64, f64) {
    let t_last = *t.last().expect("nonempty window");
    let big_t = t_last + tau.exp();
    let x: Vec<f64> = t.iter().map(|t| (big_t - t).ln()).collect();
    let (_, slope, rss) = linear_fit(&x, y);
    (rss, -slope)
}

/// Classify a history of snapshots; `termination` is the trigger reported by
/// the stepper, if any.
pub fn detect_blowup(history: &[FunctionalSnapshot], growth_factor: f64, termination: Option<Trigger>) -> BlowupVerdict {
    let mut verdict = BlowupVerdict {
        detected: false,
        t_star_estimate: None,
        growth_exponent: None,
        trigger: None,
        branch: GrowthBranch::Undetermined,
        growth_ratio: 1.0,
        power_fit_rss: None,
        exponential_fit_rss: None,
    };
    if history.len() < 10 {
        return verdict;
    }
    let lap0 = history[0].lap_sq;
    let last = history[history.len() - 1].lap_sq;
    verdict.growth_ratio = if lap0 > 0.0 { last / lap0 } else { f64::INFINITY };
    if verdict.growth_ratio >= growth_factor {
        verdict.detected = true;
        verdict.trigger = Some(Trigger::LapGrowth);
    } else if termination == Some(Trigger::DtUnderflow) {
        verdict.detected = true;
        verdict.trigger = Some(Trigger::DtUnderflow);
    }

    let n = history.len();
    let start = n - (n / 2).max(10).min(n);
    let window = &history[start..];
    let t: Vec<f64> = window.iter().map(|s| s.time).collect();
    if window.iter().any(|s| !(s.lap_sq > 0.0)) {
        return verdict;
    }
    let y: Vec<f64> = window.iter().map(|s| s.lap_sq.ln()).collect();
    let increasing = y.windows(2).filter(|w| w[1] > w[0]).count() * 10 >= 9 * (y.len() - 1) && y[y.len() - 1] > y[0];
    if !increasing {
        return verdict;
    }

    let (_, rate, rss_exp) = linear_fit(&t, &y);
    verdict.exponential_fit_rss = Some(rss_exp);

    let span = t[t.len() - 1] - t[0];
    let lo = (1e-6 * span).ln();
    let hi = (1e4 * span).ln();
    let samples = 400;
    let mut best = (f64::INFINITY, lo, 0.0);
    let mut best_i = 0;
    for i in 0..=samples {
        let tau = lo + (hi - lo) * i as f64 / samples as f64;
        let (rss, gamma) = power_rss(&t, &y, tau);
        if rss < best.0 {
            best = (rss, tau, gamma);
            best_i = i;
        }
    }
    // Golden-section refinement inside the bracketing samples.
    let h = (hi - lo) / samples as f64;
    let (mut a, mut b) = (best.1 - h, best.1 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let c = b - g * (b - a);
        let d = a + g * (b - a);
        if power_rss(&t, &y, c).0 < power_rss(&t, &y, d).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let tau = 0.5 * (a + b);
    let (rss, gamma) = power_rss(&t, &y, tau);
    if rss < best.0 {
        best = (rss, tau, gamma);
    }
    verdict.power_fit_rss = Some(best.0);

    let at_upper_edge = best_i + 2 >= samples;
    if !at_upper_edge && best.0 < 0.1 * rss_exp && best.2 > 0.0 {
        verdict.branch = GrowthBranch::FiniteTime;
        verdict.t_star_estimate = Some(t[t.len() - 1] + best.1.exp());
        verdict.growth_exponent = Some(0.5 * best.2);
    } else {
        verdict.branch = GrowthBranch::InfiniteTime;
        verdict.growth_exponent = Some(0.5 * rate);
    }
    verdict
}
