//! Auxiliary functional inequalities: radial Sobolev in R^{d−1}, the 1-D
//! Gagliardo–Nirenberg inequality, the axial trace bound, the axial
//! derivative of ‖u‖_{L²_y}, and the exterior tail of the potential energy.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::operators::{axial_profile_sq, d_r, d_z, mass, Field};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SobolevReport {
    pub z_index: usize,
    pub rhs: f64,
    pub max_lhs: f64,
    /// min over nodes of rhs − r^{(d−2)/2}|f(r)|.
    pub margin: f64,
    pub passes: bool,
}

/// |y|^{(d−2)/2}|f(y)| ≤ 2‖f‖^{1/2}‖∇f‖^{1/2} for the slice f = u(·, z_k).
pub fn check_radial_sobolev(u: &Field, z_index: usize) -> SobolevReport {
    sobolev_slice(u, &d_r(u), z_index)
}

/// The slice with the smallest relative margin over all z.
pub fn check_radial_sobolev_all(u: &Field) -> SobolevReport {
    let ur = d_r(u);
    (0..u.grid.n_z)
        .map(|k| sobolev_slice(u, &ur, k))
        .filter(|r| r.rhs > 0.0)
        .min_by(|a, b| (a.margin / a.rhs).total_cmp(&(b.margin / b.rhs)))
        .unwrap_or_else(|| sobolev_slice(u, &ur, 0))
}

fn sobolev_slice(u: &Field, ur: &Field, z_index: usize) -> SobolevReport {
    let g = &u.grid;
    let (mut m, mut gm, mut lhs) = (0.0, 0.0, 0.0f64);
    let e = (g.d as f64 - 2.0) / 2.0;
    for j in 0..g.n_r {
        let i = g.index(j, z_index);
        m += g.quad_weights[j] * u.values[i].norm_sqr();
        gm += g.quad_weights[j] * ur.values[i].norm_sqr();
        lhs = lhs.max(g.r_nodes[j].powf(e) * u.values[i].norm());
    }
    let rhs = 2.0 * (m.sqrt() * gm.sqrt()).sqrt();
    let margin = rhs - lhs;
    SobolevReport {
        z_index,
        rhs,
        max_lhs: lhs,
        margin,
        passes: margin >= -1e-8 * rhs,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GnReport {
    pub p: f64,
    pub constant: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub passes: bool,
}

/// Sharp constant of ‖f‖_p ≤ C_p‖f′‖₂^α‖f‖₂^{1−α} on the line, α = (p−2)/(2p).
///
/// The extremal is sech^{2/(p−2)}((p−2)x/2), the even positive solution of
/// −f″ + f = f^{p−1}; the quotient is evaluated by quadrature.
pub fn sharp_gn_constant(p: f64) -> f64 {
    assert!(p > 2.0, "GN needs p > 2");
    let a = 2.0 / (p - 2.0);
    let b = (p - 2.0) / 2.0;
    // f decays like e^{−|x|}, f′ = −f tanh(bx).
    let half = 80.0;
    let n = 400_000;
    let h = half / n as f64;
    let (mut l2, mut lp, mut d2) = (0.0, 0.0, 0.0);
    for i in 0..=n {
        let x = i as f64 * h;
        // Trapezoid on [0, L], doubled by symmetry.
        let w = if i == 0 || i == n { 1.0 } else { 2.0 };
        let f = (b * x).cosh().powf(-a);
        let fp = -f * (b * x).tanh();
        l2 += w * f * f;
        lp += w * f.powf(p);
        d2 += w * fp * fp;
    }
    let (l2, lp, d2) = (l2 * h, lp * h, d2 * h);
    let alpha = (p - 2.0) / (2.0 * p);
    lp.powf(1.0 / p) / (d2.sqrt().powf(alpha) * l2.sqrt().powf(1.0 - alpha))
}

/// Spectral derivative of periodic samples with spacing dz (Nyquist dropped).
pub fn periodic_derivative(g: &[f64], dz: f64) -> Vec<f64> {
    let n = g.len();
    let mut planner = FftPlanner::new();
    let mut data: Vec<Complex64> = g.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut data);
    let period = n as f64 * dz;
    for (k, c) in data.iter_mut().enumerate() {
        let m = if k < n / 2 {
            k as f64
        } else if k == n / 2 && n % 2 == 0 {
            0.0
        } else {
            k as f64 - n as f64
        };
        *c *= Complex64::new(0.0, 2.0 * std::f64::consts::PI * m / period);
    }
    planner.plan_fft_inverse(n).process(&mut data);
    data.iter().map(|c| c.re / n as f64).collect()
}

/// GN inequality for periodic samples g on a uniform axial grid.
pub fn check_gn_1d(g: &[f64], dz: f64, p: f64, constant: Option<f64>) -> GnReport {
    let c = constant.unwrap_or_else(|| sharp_gn_constant(p));
    let gp = periodic_derivative(g, dz);
    let l2 = (g.iter().map(|x| x * x).sum::<f64>() * dz).sqrt();
    let lp = (g.iter().map(|x| x.abs().powf(p)).sum::<f64>() * dz).powf(1.0 / p);
    let d2 = (gp.iter().map(|x| x * x).sum::<f64>() * dz).sqrt();
    let alpha = (p - 2.0) / (2.0 * p);
    let rhs = c * d2.powf(alpha) * l2.powf(1.0 - alpha);
    let margin = rhs - lp;
    GnReport {
        p,
        constant: c,
        lhs: lp,
        rhs,
        margin,
        passes: margin >= -1e-8 * rhs,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceReport {
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub passes: bool,
}

/// sup_z ∫|u|²dy ≤ 2‖u‖₂‖∂_d u‖₂.
pub fn check_axial_trace(u: &Field) -> TraceReport {
    let lhs = crate::operators::axial_trace_sup(u);
    let rhs = 2.0 * mass(u).sqrt() * mass(&d_z(u)).sqrt();
    TraceReport {
        lhs,
        rhs,
        margin: rhs - lhs,
        passes: rhs - lhs >= -1e-8 * rhs.max(lhs),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AxialDerivativeReport {
    /// min over z of ‖∂_d u‖_{L²_y} − |∂_d ‖u‖_{L²_y}|.
    pub margin_one: f64,
    /// Same with the factor ½ on the right; recorded, not asserted.
    pub margin_half: f64,
    pub scale: f64,
    pub passes: bool,
    /// Nodes where the ½ form fails.
    pub half_violations: usize,
}

/// |∂_d ‖u‖_{L²_y}| ≤ ‖∂_d u‖_{L²_y}, with ∂_d‖u‖ = Re⟨u, ∂_d u⟩_y / ‖u‖_y.
pub fn check_axial_derivative_bound(u: &Field) -> AxialDerivativeReport {
    let g = &u.grid;
    let uz = d_z(u);
    let mut report = AxialDerivativeReport {
        margin_one: f64::INFINITY,
        margin_half: f64::INFINITY,
        scale: 0.0,
        passes: true,
        half_violations: 0,
    };
    for k in 0..g.n_z {
        let (mut n2, mut d2, mut re) = (0.0, 0.0, 0.0);
        for j in 0..g.n_r {
            let i = g.index(j, k);
            let w = g.quad_weights[j];
            n2 += w * u.values[i].norm_sqr();
            d2 += w * uz.values[i].norm_sqr();
            re += w * (u.values[i].conj() * uz.values[i]).re;
        }
        let rhs = d2.sqrt();
        let lhs = if n2 > 0.0 { re.abs() / n2.sqrt() } else { 0.0 };
        report.scale = report.scale.max(rhs);
        report.margin_one = report.margin_one.min(rhs - lhs);
        report.margin_half = report.margin_half.min(0.5 * rhs - lhs);
        if 0.5 * rhs < lhs {
            report.half_violations += 1;
        }
    }
    report.passes = report.margin_one >= -1e-8 * report.scale;
    report
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub radius: f64,
    pub sigma: f64,
    /// ∫_{|y|≥R} |u|^{2σ+2}.
    pub tail: f64,
    /// tail / (R^{−σ(d−2)}‖∇u‖₂^{2σ}).
    pub ratio: f64,
    /// K_σ R^{−σ(d−2)} M ‖∇_y u‖^σ ‖∂_d u‖^σ.
    pub bound: f64,
    pub constant: f64,
    pub passes: bool,
}

/// Constant K_σ of the explicit exterior bound: 8 for σ = 1, otherwise
/// 4^σ C_p² with p = 2/(1−σ).
pub fn tail_constant(sigma: f64) -> f64 {
    assert!(sigma > 0.0 && sigma <= 1.0, "tail bound needs 0 < σ ≤ 1");
    if sigma == 1.0 {
        8.0
    } else {
        let c = sharp_gn_constant(2.0 / (1.0 - sigma));
        4f64.powf(sigma) * c * c
    }
}

pub fn check_tail_estimate(u: &Field, radius: f64, sigma: f64) -> TailReport {
    check_tail_estimate_with(u, radius, sigma, tail_constant(sigma))
}

/// As [`check_tail_estimate`] with a precomputed K_σ.
pub fn check_tail_estimate_with(u: &Field, radius: f64, sigma: f64, constant: f64) -> TailReport {
    let g = &u.grid;
    let q = sigma + 1.0;
    let mut tail = 0.0;
    for j in 0..g.n_r {
        if g.r_nodes[j] < radius {
            continue;
        }
        let row: f64 = u.values[j * g.n_z..(j + 1) * g.n_z].iter().map(|c| crate::operators::nonneg_pow(c.norm_sqr(), q)).sum();
        tail += g.quad_weights[j] * row;
    }
    tail *= g.dz;
    let gy = mass(&d_r(u));
    let gz = mass(&d_z(u));
    let decay = radius.powf(-sigma * (g.d as f64 - 2.0));
    let scale = decay * (gy + gz).powf(sigma);
    let bound = constant * decay * mass(u) * (gy.sqrt() * gz.sqrt()).powf(sigma);
    TailReport {
        radius,
        sigma,
        tail,
        ratio: if scale > 0.0 { tail / scale } else { 0.0 },
        bound,
        constant,
        passes: tail <= bound * (1.0 + 1e-8),
    }
}

/// Axial profile z ↦ ‖u(·, z)‖_{L²_y}.
pub fn axial_norm_profile(u: &Field) -> Vec<f64> {
    axial_profile_sq(u).into_iter().map(f64::sqrt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;

    #[test]
    fn sobolev_gaussian_value() {
        let g = build_grid(5, 10.0, 64, 8.0, 32).unwrap();
        let u = Field::from_fn(&g, |r, _| Complex64::new((-r * r / 2.0).exp(), 0.0));
        let rep = check_radial_sobolev(&u, 0);
        let expect = 2.0 * std::f64::consts::PI * 2f64.powf(0.25);
        assert!((rep.rhs - expect).abs() < 1e-8 * expect, "{}", rep.rhs);
        assert!(rep.passes);
    }

    #[test]
    fn zero_field_is_tight() {
        let g = build_grid(4, 8.0, 32, 8.0, 32).unwrap();
        let u = Field::zeros(&g);
        assert_eq!(check_radial_sobolev(&u, 3).margin, 0.0);
        assert!(check_axial_derivative_bound(&u).passes);
        let t = check_tail_estimate(&u, 2.0, 1.0);
        assert_eq!(t.tail, 0.0);
        assert!(t.passes);
    }

    #[test]
    fn sharp_gn_is_attained_and_not_beaten() {
        let p = 4.0;
        let c = sharp_gn_constant(p);
        // Known value for p = 4: C^4 = 1/√3.
        assert!((c.powi(4) - 1.0 / 3f64.sqrt()).abs() < 1e-8, "{c}");
        let n = 1024;
        let dz = 80.0 / n as f64;
        let z: Vec<f64> = (0..n).map(|i| -40.0 + i as f64 * dz).collect();
        let ext: Vec<f64> = z.iter().map(|x| 1.0 / x.cosh()).collect();
        let rep = check_gn_1d(&ext, dz, p, None);
        assert!(rep.margin.abs() < 1e-6 * rep.rhs);
        let gauss: Vec<f64> = z.iter().map(|x| (-x * x).exp()).collect();
        assert!(check_gn_1d(&gauss, dz, p, None).margin > 0.0);
    }

    #[test]
    fn separable_field_is_cauchy_schwarz_equality() {
        let g = build_grid(4, 8.0, 32, 8.0, 64).unwrap();
        let u = Field::from_fn(&g, |r, z| Complex64::new((-r * r / 2.0 - z * z / 2.0).exp(), 0.0));
        let rep = check_axial_derivative_bound(&u);
        assert!(rep.margin_one.abs() < 1e-10 * rep.scale);
        assert!(rep.passes);
    }

    #[test]
    fn tail_vanishes_for_core_support() {
        let g = build_grid(4, 12.0, 64, 8.0, 32).unwrap();
        let u = Field::from_fn(&g, |r, z| Complex64::new((-r * r * 4.0 - z * z).exp(), 0.0));
        let t = check_tail_estimate(&u, 10.0, 1.0);
        assert!(t.ratio < 1e-100);
    }
}
