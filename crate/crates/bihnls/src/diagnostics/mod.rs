//! Localized virial quantity and its rate.
//!
//! M_{φ_R}[u] = 2 Im ∫ ū (ψ_R′ ∂_r u + z ∂_z u). Its rate along the flow is
//! compared with 4dσE − (2dσ−8)‖Δu‖² − μ(2dσ−4)‖∇u‖² + X_μ plus C times the
//! error magnitudes R^{−4}, R^{−2}‖∇u‖², R^{−σ(d−2)}‖∇u‖^{2σ}, |μ|R^{−2}.

pub mod family;
pub mod inequalities;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CutoffProfile;
use crate::operators::{bilaplacian, d_r, d_rr, d_z, inner, laplacian, weighted_mass, Field, FunctionalSnapshot};
use crate::solver::{Physics, Trajectory};

pub use inequalities::{
    check_axial_derivative_bound, check_axial_trace, check_gn_1d, check_radial_sobolev, check_radial_sobolev_all,
    check_tail_estimate,
    sharp_gn_constant, tail_constant,
};

fn check_profile(u: &Field, profile: &CutoffProfile) -> Result<()> {
    if profile.r_nodes.len() != u.grid.n_r || profile.d != u.grid.d || profile.r_nodes != u.grid.r_nodes {
        return Err(Error::GridMismatch("cutoff profile was built on a different grid".into()));
    }
    Ok(())
}

/// A u = ψ_R′ ∂_r u + z ∂_z u.
pub fn virial_operator(u: &Field, profile: &CutoffProfile) -> Field {
    let g = &u.grid;
    let ur = d_r(u);
    let uz = d_z(u);
    let mut out = ur.values;
    for j in 0..g.n_r {
        let p = profile.phi_grad_r[j];
        for k in 0..g.n_z {
            let i = g.index(j, k);
            out[i] = p * out[i] + profile.phi_grad_z(g.z_nodes[k]) * uz.values[i];
        }
    }
    u.with_values(out)
}

/// M_{φ_R}[u].
pub fn virial(u: &Field, profile: &CutoffProfile) -> f64 {
    2.0 * inner(u, &virial_operator(u, profile)).im
}

/// u_t = −i(Δ²u − μΔu − κ|u|^{2σ}u).
pub fn time_derivative(u: &Field, physics: &Physics) -> Field {
    let b = bilaplacian(u);
    let l = laplacian(u);
    let s = physics.sigma;
    let values = u
        .values
        .iter()
        .zip(b.values.iter().zip(&l.values))
        .map(|(&v, (&bv, &lv))| {
            let rhs = bv - physics.mu * lv - physics.kappa * crate::operators::nonneg_pow(v.norm_sqr(), s) * v;
            Complex64::new(rhs.im, -rhs.re)
        })
        .collect();
    u.with_values(values)
}

/// Exact rate of the discrete M_{φ_R} under the semi-discrete flow:
/// 2 Im(⟨u_t, A u⟩ + ⟨u, A u_t⟩).
pub fn virial_rate(u: &Field, physics: &Physics, profile: &CutoffProfile) -> f64 {
    let ut = time_derivative(u, physics);
    let au = virial_operator(u, profile);
    let aut = virial_operator(&ut, profile);
    2.0 * (inner(&ut, &au) + inner(u, &aut)).im
}

/// X_μ = −4μ ∫(1 − ψ_R″)|∂_r u|².
pub fn x_mu(u: &Field, profile: &CutoffProfile, mu: f64) -> f64 {
    let w: Vec<f64> = profile.dpsi[1].iter().map(|p| 1.0 - p).collect();
    -4.0 * mu * weighted_mass(&d_r(u), &w)
}

/// 4dσE₀ − (2dσ−8)‖Δu‖² − μ(2dσ−4)‖∇u‖².
pub fn rhs_main(d: u32, sigma: f64, mu: f64, energy0: f64, lap_sq: f64, grad_sq: f64) -> f64 {
    let ds = d as f64 * sigma;
    4.0 * ds * energy0 - (2.0 * ds - 8.0) * lap_sq - mu * (2.0 * ds - 4.0) * grad_sq
}

/// [R^{−4}, R^{−2}‖∇u‖², R^{−σ(d−2)}‖∇u‖^{2σ}, |μ|R^{−2}].
pub fn error_terms(d: u32, sigma: f64, mu: f64, radius: f64, grad_sq: f64) -> [f64; 4] {
    [
        radius.powi(-4),
        radius.powi(-2) * grad_sq,
        radius.powf(-sigma * (d as f64 - 2.0)) * grad_sq.powf(sigma),
        mu.abs() * radius.powi(-2),
    ]
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateCalibration {
    pub radius: f64,
    pub mass: f64,
    pub samples: usize,
    pub seed: u64,
    /// Largest (rate − rhs_main − X_μ) / Σ err over the family, floored at 0.
    pub constant: f64,
    pub ratios: Vec<f64>,
}

/// Calibrate the constant of the rate estimate on [`family::calibration_field`]
/// samples rescaled to `mass`, using the exact semi-discrete rate.
pub fn calibrate_rate_constant(
    grid: &std::sync::Arc<crate::geometry::Grid>,
    physics: &Physics,
    profile: &CutoffProfile,
    mass: f64,
    samples: usize,
    seed: u64,
) -> Result<RateCalibration> {
    if samples == 0 {
        return Err(Error::Diagnostics("calibration needs at least one sample".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ratios = Vec::with_capacity(samples);
    for _ in 0..samples {
        let u = family::with_mass(&family::calibration_field(grid, &mut rng), mass);
        check_profile(&u, profile)?;
        let f = physics.functionals(&u, 0.0);
        let rate = virial_rate(&u, physics, profile);
        let main = rhs_main(grid.d, physics.sigma, physics.mu, f.energy, f.lap_sq, f.grad_sq);
        let err: f64 = error_terms(grid.d, physics.sigma, physics.mu, profile.radius, f.grad_sq).iter().sum();
        ratios.push((rate - main - x_mu(&u, profile, physics.mu)) / err);
    }
    let constant = ratios.iter().copied().fold(0.0, f64::max);
    Ok(RateCalibration {
        radius: profile.radius,
        mass,
        samples,
        seed,
        constant,
        ratios,
    })
}

/// Derivative estimates by non-uniform three-point differences, with a
/// truncation bound from the neighbouring third divided differences.
///
/// Returns (derivative, tolerance) per sample; end points use one-sided
/// differences and carry an infinite tolerance.
pub fn fd_derivative(t: &[f64], m: &[f64]) -> Vec<(f64, f64)> {
    let n = t.len();
    assert_eq!(n, m.len());
    if n < 3 {
        return vec![(f64::NAN, f64::INFINITY); n];
    }
    let third = |i: usize| -> f64 {
        // 6 f[t_i, .., t_{i+3}] estimates f‴.
        let dd = |a: usize, b: usize| (m[b] - m[a]) / (t[b] - t[a]);
        let d2 = |a: usize| (dd(a + 1, a + 2) - dd(a, a + 1)) / (t[a + 2] - t[a]);
        6.0 * (d2(i + 1) - d2(i)) / (t[i + 3] - t[i])
    };
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i == 0 || i == n - 1 {
            let (a, b) = if i == 0 { (0, 1) } else { (n - 2, n - 1) };
            out.push(((m[b] - m[a]) / (t[b] - t[a]), f64::INFINITY));
            continue;
        }
        let hm = t[i] - t[i - 1];
        let hp = t[i + 1] - t[i];
        let d = (hm * hm * m[i + 1] - hp * hp * m[i - 1] + (hp * hp - hm * hm) * m[i]) / (hm * hp * (hm + hp));
        let mut f3 = 0.0f64;
        if i >= 2 {
            f3 = f3.max(third(i - 2).abs());
        }
        if i + 2 < n {
            f3 = f3.max(third(i - 1).abs());
        }
        let scale = m[i - 1].abs().max(m[i].abs()).max(m[i + 1].abs());
        let tol = 2.0 * f3 * hm * hp / 6.0 + 1e-10 * scale / hm.min(hp);
        out.push((d, tol));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VirialReport {
    pub t: f64,
    pub radius: f64,
    pub m_phi: f64,
    pub dmdt_numeric: f64,
    /// Exact rate of the semi-discrete flow at the sample.
    pub dmdt_exact: f64,
    pub rhs_main: f64,
    pub x_mu: f64,
    pub err_terms: [f64; 4],
    pub constant: f64,
    /// rhs_main + X_μ + C Σ err.
    pub rhs_total: f64,
    pub tol_fd: f64,
    /// rhs_total − dmdt_numeric.
    pub margin: f64,
    pub interior: bool,
    /// margin + tol_fd ≥ 0 (interior samples only; end points always pass).
    pub holds: bool,
}

/// Rate estimate along a trajectory, one report per stored field.
pub fn virial_rate_report(
    traj: &Trajectory,
    profile: &CutoffProfile,
    physics: &Physics,
    constant: f64,
) -> Result<Vec<VirialReport>> {
    if traj.fields.len() < 3 {
        return Err(Error::Diagnostics(format!(
            "virial rate needs at least 3 stored fields, found {}; enable field sampling (field_every > 0)",
            traj.fields.len()
        )));
    }
    let times = traj.fields.times().to_vec();
    let mut fields = Vec::with_capacity(times.len());
    let mut m = Vec::with_capacity(times.len());
    for i in 0..times.len() {
        let u = traj.fields.get(i)?;
        check_profile(&u, profile)?;
        m.push(virial(&u, profile));
        fields.push(u);
    }
    let d = fields[0].grid.d;
    let fd = fd_derivative(&times, &m);
    let mut out = Vec::with_capacity(times.len());
    for (i, u) in fields.iter().enumerate() {
        let f: FunctionalSnapshot = physics.functionals(u, times[i]);
        let main = rhs_main(d, physics.sigma, physics.mu, traj.energy0, f.lap_sq, f.grad_sq);
        let xm = x_mu(u, profile, physics.mu);
        let err = error_terms(d, physics.sigma, physics.mu, profile.radius, f.grad_sq);
        let rhs_total = main + xm + constant * err.iter().sum::<f64>();
        let (dmdt, tol) = fd[i];
        let interior = i > 0 && i + 1 < times.len();
        let margin = rhs_total - dmdt;
        out.push(VirialReport {
            t: times[i],
            radius: profile.radius,
            m_phi: m[i],
            dmdt_numeric: dmdt,
            dmdt_exact: virial_rate(u, physics, profile),
            rhs_main: main,
            x_mu: xm,
            err_terms: err,
            constant,
            rhs_total,
            tol_fd: tol,
            margin,
            interior,
            holds: !interior || margin + tol >= 0.0,
        });
    }
    Ok(out)
}

pub fn virial_reports_csv(reports: &[VirialReport]) -> String {
    let mut s = String::from(
        "t,radius,m_phi,dmdt_numeric,dmdt_exact,rhs_main,x_mu,err1,err2,err3,err4,constant,rhs_total,tol_fd,margin,holds\n",
    );
    for r in reports {
        s.push_str(&format!(
            "{:.17e},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{}\n",
            r.t,
            r.radius,
            r.m_phi,
            r.dmdt_numeric,
            r.dmdt_exact,
            r.rhs_main,
            r.x_mu,
            r.err_terms[0],
            r.err_terms[1],
            r.err_terms[2],
            r.err_terms[3],
            r.constant,
            r.rhs_total,
            r.tol_fd,
            r.margin,
            r.holds
        ));
    }
    s
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MassCriticalReport {
    pub radius: f64,
    pub eta: f64,
    /// ∫ A_R |∂_r u|², A_R = 4∂_r²Δψ_R + 2Δ²ψ_R.
    pub a_r_term: f64,
    /// ∫ B_R |u|^{2+8/d}, B_R = (8/(d+4))(d−1−Δψ_R).
    pub b_r_term: f64,
    /// 8∫(1 − ψ_R″)|∂_r² u|².
    pub defect: f64,
    /// ∫ Δ³ψ_R |u|².
    pub trilap_term: f64,
    pub bound_16e: f64,
    /// 16E₀ − defect + trilap_term − a_r_term + b_r_term.
    pub vm_rhs: f64,
    /// Composite right side for d = 4 (first form) or d ≥ 5 (second form),
    /// with the implicit constants set to 1.
    pub composite_rhs: f64,
}

/// Terms of the refined mass-critical estimate at one field.
pub fn mass_critical_report(
    u: &Field,
    profile: &CutoffProfile,
    sigma: f64,
    energy0: f64,
    eta: f64,
) -> Result<MassCriticalReport> {
    check_profile(u, profile)?;
    let g = &u.grid;
    let d = g.d as f64;
    if g.d < 4 || (sigma - 4.0 / d).abs() > 1e-12 {
        return Err(Error::Diagnostics(format!(
            "mass-critical report needs d >= 4 and sigma = 4/d, got d = {}, sigma = {sigma}",
            g.d
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::Diagnostics("eta must be positive".into()));
    }
    let radius = profile.radius;
    let a_r: Vec<f64> = (0..g.n_r)
        .map(|j| 4.0 * profile.lap_psi_rr[j] + 2.0 * profile.bilap_psi[j])
        .collect();
    let b_r: Vec<f64> = profile.lap_psi.iter().map(|l| 8.0 / (d + 4.0) * (d - 1.0 - l)).collect();
    let one_minus: Vec<f64> = profile.dpsi[1].iter().map(|p| 1.0 - p).collect();
    let ur = d_r(u);
    let urr = d_rr(u);
    let a_r_term = weighted_mass(&ur, &a_r);
    let q = 1.0 + 4.0 / d;
    let mut b_r_term = 0.0;
    for j in 0..g.n_r {
        let row: f64 = u.values[j * g.n_z..(j + 1) * g.n_z].iter().map(|c| crate::operators::nonneg_pow(c.norm_sqr(), q)).sum();
        b_r_term += b_r[j] * g.quad_weights[j] * row;
    }
    b_r_term *= g.dz;
    let defect = 8.0 * weighted_mass(&urr, &one_minus);
    let trilap_term = weighted_mass(u, &profile.trilap_psi);
    let bound_16e = 16.0 * energy0;
    let vm_rhs = bound_16e - defect + trilap_term - a_r_term + b_r_term;

    let weight: Vec<f64> = (0..g.n_r)
        .map(|j| one_minus[j] - eta * (radius.powi(4) * a_r[j] * a_r[j] + b_r[j] * b_r[j]))
        .collect();
    let dz_norm = crate::operators::mass(&d_z(u)).sqrt();
    let mut composite = bound_16e - 8.0 * weighted_mass(&urr, &weight);
    let r = radius;
    if g.d == 4 {
        composite += r.powi(-2) * (eta.powf(-0.25) + r.powi(-2)) * dz_norm
            + r.powi(-4) * eta.powf(-0.5) * dz_norm * dz_norm
            + r.powi(-4) / eta
            + r.powi(-2);
    } else {
        let e = 4.0 / (d - 4.0);
        composite += r.powi(-1) * (eta.powf(-0.25) + r.powi(-2)) * dz_norm
            + r.powi(-4) * eta.powf(-0.5) * dz_norm * dz_norm
            + r.powf(-e) * dz_norm.powf(e)
            + r.powi(-2) * eta.powf(-0.5)
            + r.powi(-4) / eta
            + r.powi(-2);
    }
    Ok(MassCriticalReport {
        radius,
        eta,
        a_r_term,
        b_r_term,
        defect,
        trilap_term,
        bound_16e,
        vm_rhs,
        composite_rhs: composite,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_cutoff, build_grid};
    use std::f64::consts::PI;

    #[test]
    fn chirped_gaussian_virial() {
        let g = build_grid(4, 9.0, 96, 9.0, 96).unwrap();
        // R beyond the box: φ_R = |x|²/2 on all nodes.
        let p = build_cutoff(&g, 10.0).unwrap();
        let u = Field::from_fn(&g, |r, z| {
            let x2 = r * r + z * z;
            Complex64::from_polar((-x2 / 2.0).exp(), x2 / 2.0)
        });
        let m = virial(&u, &p);
        assert!((m - 4.0 * PI * PI).abs() < 1e-6 * 4.0 * PI * PI, "{m}");
    }

    #[test]
    fn real_fields_and_gauge() {
        let g = build_grid(4, 10.0, 64, 10.0, 64).unwrap();
        let p = build_cutoff(&g, 2.0).unwrap();
        let u = Field::from_fn(&g, |r, z| Complex64::new((-(r * r + (z - 1.0).powi(2)) / 2.0).exp(), 0.0));
        assert!(virial(&u, &p).abs() < 1e-12);
        let v = Field::from_fn(&g, |r, z| Complex64::from_polar((-(r * r + z * z) / 2.0).exp(), 0.3 * z + 0.1 * r * r));
        let m = virial(&v, &p);
        let w = v.scale(Complex64::from_polar(1.0, 1.234));
        assert!((virial(&w, &p) - m).abs() < 1e-12 * m.abs());
    }

    #[test]
    fn exact_rate_matches_finite_difference_of_the_flow() {
        let g = build_grid(4, 10.0, 64, 10.0, 64).unwrap();
        let p = build_cutoff(&g, 2.0).unwrap();
        let phys = Physics::focusing(1.0, 0.5);
        let u = Field::from_fn(&g, |r, z| Complex64::from_polar(1.5 * (-(r * r + z * z) / 2.0).exp(), 0.2 * z));
        let mut st = crate::solver::Stepper::new(&g, phys);
        let h = 1e-4;
        let fwd = st.step(&u, h).unwrap();
        let fwd2 = st.step(&fwd, h).unwrap();
        let rate_fd = (-3.0 * virial(&u, &p) + 4.0 * virial(&fwd, &p) - virial(&fwd2, &p)) / (2.0 * h);
        let rate = virial_rate(&u, &phys, &p);
        assert!((rate_fd - rate).abs() < 1e-4 * rate.abs().max(1.0), "{rate_fd} vs {rate}");
    }

    #[test]
    fn linear_rate_in_core_is_eight_lap() {
        // With φ = |x|²/2 throughout, the linear μ = 0 rate is 8‖Δu‖².
        let g = build_grid(4, 9.0, 96, 9.0, 96).unwrap();
        let p = build_cutoff(&g, 10.0).unwrap();
        let phys = Physics { sigma: 1.0, mu: 0.0, kappa: 0.0 };
        let u = Field::from_fn(&g, |r, z| Complex64::from_polar((-(r * r + z * z) / 2.0).exp(), 0.3 * z));
        let f = phys.functionals(&u, 0.0);
        let rate = virial_rate(&u, &phys, &p);
        assert!((rate - 8.0 * f.lap_sq).abs() < 1e-6 * f.lap_sq, "{rate} vs {}", 8.0 * f.lap_sq);
    }

    #[test]
    fn fd_derivative_of_cubic_is_exact_with_tolerance() {
        let t: Vec<f64> = [0.0, 0.1, 0.25, 0.3, 0.5, 0.55, 0.8].to_vec();
        let m: Vec<f64> = t.iter().map(|x| x * x * x - x).collect();
        for (i, (d, tol)) in fd_derivative(&t, &m).into_iter().enumerate().skip(1).take(5) {
            let exact = 3.0 * t[i] * t[i] - 1.0;
            assert!((d - exact).abs() <= tol, "{i}: {d} {exact} {tol}");
        }
    }

    #[test]
    fn mass_critical_core_terms() {
        let g = build_grid(4, 16.0, 96, 12.0, 64).unwrap();
        let p = build_cutoff(&g, 8.0).unwrap();
        let u = Field::from_fn(&g, |r, z| Complex64::new((-(r * r + z * z) / 2.0).exp(), 0.0));
        let rep = mass_critical_report(&u, &p, 1.0, -1.0, 1.0).unwrap();
        // Supported well inside r < 8, where B_R and 1 − ψ″ vanish.
        assert!(rep.b_r_term.abs() < 1e-10);
        assert!(rep.defect.abs() < 1e-10);
        assert!(mass_critical_report(&u, &p, 0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn x_mu_sign() {
        let g = build_grid(4, 12.0, 64, 8.0, 32).unwrap();
        let p = build_cutoff(&g, 1.0).unwrap();
        let u = Field::from_fn(&g, |r, z| Complex64::new((-(r - 0.0).powi(2) / 8.0 - z * z).exp(), 0.0));
        assert!(x_mu(&u, &p, 1.0) <= 0.0);
        assert!(x_mu(&u, &p, -1.0) >= 0.0);
    }
}
