//! Cylindrical grid on R^{d-1} x R and the localized virial cutoff.

pub mod cutoff;
pub mod quadrature;
pub mod radial;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use crate::error::{Error, Result};
use cutoff::{sample, BaseCutoff};
use radial::RadialBasis;

/// Discretization of cylindrically symmetric fields u(r, z), r = |y|, y in R^{d-1}.
///
/// Radial nodes are Gauss-Jacobi points in r^2 (none on the axis); the axial
/// direction is periodic on [-z_max, z_max) with n_z uniform nodes.
pub struct Grid {
    pub d: u32,
    pub n_r: usize,
    pub r_max: f64,
    pub n_z: usize,
    pub z_max: f64,
    pub r_nodes: Vec<f64>,
    /// Includes the measure |S^{d-2}| r^{d-2} dr.
    pub quad_weights: Vec<f64>,
    pub z_nodes: Vec<f64>,
    pub dz: f64,
    /// Axial wavenumbers in FFT order; the Nyquist entry is positive.
    pub kz: Vec<f64>,
    pub radial: RadialBasis,
    pub(crate) fft_forward: Arc<dyn Fft<f64>>,
    pub(crate) fft_inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("d", &self.d)
            .field("n_r", &self.n_r)
            .field("r_max", &self.r_max)
            .field("n_z", &self.n_z)
            .field("z_max", &self.z_max)
            .finish_non_exhaustive()
    }
}

pub fn build_grid(d: u32, r_max: f64, n_r: usize, z_max: f64, n_z: usize) -> Result<Arc<Grid>> {
    if d < 3 {
        return Err(Error::InvalidGrid(format!(
            "d = {d}: the radial Sobolev estimates need d - 1 >= 2"
        )));
    }
    if n_z % 2 != 0 {
        return Err(Error::InvalidGrid(format!("n_z = {n_z} must be even")));
    }
    if n_r < 16 || n_z < 16 {
        return Err(Error::InvalidGrid(format!(
            "n_r = {n_r}, n_z = {n_z}: need at least 16 nodes per direction"
        )));
    }
    if !(r_max.is_finite() && r_max > 0.0 && z_max.is_finite() && z_max > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "r_max = {r_max}, z_max = {z_max} must be positive"
        )));
    }

    let radial = RadialBasis::new(d - 1, n_r, r_max);
    let dz = 2.0 * z_max / n_z as f64;
    let z_nodes = (0..n_z).map(|k| -z_max + k as f64 * dz).collect();
    let kz = (0..n_z)
        .map(|k| {
            let m = if k <= n_z / 2 { k as f64 } else { k as f64 - n_z as f64 };
            std::f64::consts::PI * m / z_max
        })
        .collect();
    let mut planner = FftPlanner::new();
    Ok(Arc::new(Grid {
        d,
        n_r,
        r_max,
        n_z,
        z_max,
        r_nodes: radial.r.clone(),
        quad_weights: radial.weights.clone(),
        z_nodes,
        dz,
        kz,
        fft_forward: planner.plan_fft_forward(n_z),
        fft_inverse: planner.plan_fft_inverse(n_z),
        radial,
    }))
}

impl Grid {
    pub fn len(&self) -> usize {
        self.n_r * self.n_z
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, j: usize, k: usize) -> usize {
        j * self.n_z + k
    }

    /// Volume element of node (j, k).
    #[inline]
    pub fn cell(&self, j: usize) -> f64 {
        self.quad_weights[j] * self.dz
    }

    /// Area of the unit sphere S^{d-2} in R^{d-1}.
    pub fn omega(&self) -> f64 {
        quadrature::sphere_area(self.d - 1)
    }

    /// Integral of a real nodal function over the grid.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        let mut acc = 0.0;
        for j in 0..self.n_r {
            let row: f64 = f[j * self.n_z..(j + 1) * self.n_z].iter().sum();
            acc += self.quad_weights[j] * row;
        }
        acc * self.dz
    }

    /// Integral over r <= r_max of a radial function.
    pub fn integrate_radial(&self, f: &[f64]) -> f64 {
        self.radial.integrate(f)
    }

    /// Equality of discretizations.
    pub fn same_as(&self, other: &Grid) -> bool {
        self.d == other.d
            && self.n_r == other.n_r
            && self.n_z == other.n_z
            && self.r_max == other.r_max
            && self.z_max == other.z_max
    }

    pub fn fingerprint(&self) -> String {
        format!(
            "d{}-r{}x{:.6}-z{}x{:.6}-gauss-jacobi-s",
            self.d, self.n_r, self.r_max, self.n_z, self.z_max
        )
    }
}

/// psi_R tabulated on a grid's radial nodes.
#[derive(Debug, Clone, Serialize)]
pub struct CutoffProfile {
    pub radius: f64,
    pub d: u32,
    pub r_nodes: Vec<f64>,
    pub psi: Vec<f64>,
    /// dpsi[k-1] holds the k-th radial derivative, k = 1..6.
    pub dpsi: [Vec<f64>; 6],
    /// Radial component of grad phi_R, equal to psi_R'.
    pub phi_grad_r: Vec<f64>,
    /// Laplacians in R^{d-1}.
    pub lap_psi: Vec<f64>,
    pub lap_psi_rr: Vec<f64>,
    pub bilap_psi: Vec<f64>,
    pub trilap_psi: Vec<f64>,
    /// True when the flat region r >= 10R is not reached inside r_max.
    pub truncated: bool,
}

impl CutoffProfile {
    /// Axial component of grad phi_R.
    pub fn phi_grad_z(&self, z: f64) -> f64 {
        z
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = String::from("r,psi,dpsi,d2psi,lap_psi,bilap_psi,trilap_psi\n");
        for j in 0..self.r_nodes.len() {
            out.push_str(&format!(
                "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}\n",
                self.r_nodes[j],
                self.psi[j],
                self.dpsi[0][j],
                self.dpsi[1][j],
                self.lap_psi[j],
                self.bilap_psi[j],
                self.trilap_psi[j]
            ));
        }
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

pub fn build_cutoff(grid: &Grid, radius: f64) -> Result<CutoffProfile> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Cutoff(format!("R = {radius} must be positive")));
    }
    let base = BaseCutoff::new();
    let m = grid.d as f64 - 2.0;
    let n = grid.n_r;
    let mut psi = vec![0.0; n];
    let mut dpsi: [Vec<f64>; 6] = Default::default();
    for v in dpsi.iter_mut() {
        *v = vec![0.0; n];
    }
    let mut lap_psi = vec![0.0; n];
    let mut lap_psi_rr = vec![0.0; n];
    let mut bilap_psi = vec![0.0; n];
    let mut trilap_psi = vec![0.0; n];
    for (j, &r) in grid.r_nodes.iter().enumerate() {
        let s = sample(&base, radius, r, m);
        psi[j] = s.psi[0];
        for k in 0..6 {
            dpsi[k][j] = s.psi[k + 1];
        }
        lap_psi[j] = s.lap;
        lap_psi_rr[j] = s.lap_rr;
        bilap_psi[j] = s.bilap;
        trilap_psi[j] = s.trilap;
    }
    let profile = CutoffProfile {
        radius,
        d: grid.d,
        r_nodes: grid.r_nodes.clone(),
        psi,
        phi_grad_r: dpsi[0].clone(),
        dpsi,
        lap_psi,
        lap_psi_rr,
        bilap_psi,
        trilap_psi,
        truncated: BaseCutoff::FLAT * radius > grid.r_max,
    };
    let cert = certify_cutoff(&profile, grid);
    if !cert.passes {
        return Err(Error::Cutoff(format!(
            "sign conditions violated: {:?}",
            cert
        )));
    }
    Ok(profile)
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffCertificate {
    pub radius: f64,
    pub min_one_minus_d2psi: f64,
    pub min_one_minus_dpsi_over_r: f64,
    pub min_dim_minus_lap_psi: f64,
    pub max_d2psi: f64,
    /// sup |psi_R^{(k)}| over the nodes, k = 1..6.
    pub sup_derivatives: [f64; 6],
    pub truncated: bool,
    pub passes: bool,
}

pub const CERTIFICATE_TOL: f64 = 1e-12;

pub fn certify_cutoff(profile: &CutoffProfile, grid: &Grid) -> CutoffCertificate {
    let dim = grid.d as f64 - 1.0;
    let n = profile.r_nodes.len();
    let mut c = CutoffCertificate {
        radius: profile.radius,
        min_one_minus_d2psi: f64::INFINITY,
        min_one_minus_dpsi_over_r: f64::INFINITY,
        min_dim_minus_lap_psi: f64::INFINITY,
        max_d2psi: f64::NEG_INFINITY,
        sup_derivatives: [0.0; 6],
        truncated: profile.truncated,
        passes: false,
    };
    for j in 0..n {
        let r = profile.r_nodes[j];
        c.min_one_minus_d2psi = c.min_one_minus_d2psi.min(1.0 - profile.dpsi[1][j]);
        c.min_one_minus_dpsi_over_r = c.min_one_minus_dpsi_over_r.min(1.0 - profile.dpsi[0][j] / r);
        c.min_dim_minus_lap_psi = c.min_dim_minus_lap_psi.min(dim - profile.lap_psi[j]);
        c.max_d2psi = c.max_d2psi.max(profile.dpsi[1][j]);
        for k in 0..6 {
            c.sup_derivatives[k] = c.sup_derivatives[k].max(profile.dpsi[k][j].abs());
        }
    }
    c.passes = c.min_one_minus_d2psi >= -CERTIFICATE_TOL
        && c.min_one_minus_dpsi_over_r >= -CERTIFICATE_TOL
        && c.min_dim_minus_lap_psi >= -CERTIFICATE_TOL
        && c.max_d2psi <= 1.0 + CERTIFICATE_TOL;
    c
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_grid(2, 8.0, 32, 8.0, 32), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_grid(4, 8.0, 32, 8.0, 33), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_grid(4, 8.0, 8, 8.0, 32), Err(Error::InvalidGrid(_))));
        assert!(matches!(build_grid(4, -1.0, 32, 8.0, 32), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn omega_for_d4_is_sphere_area() {
        let g = build_grid(4, 16.0, 32, 16.0, 32).unwrap();
        assert!((g.omega() - 4.0 * PI).abs() < 1e-14);
    }

    #[test]
    fn unit_ball_volume() {
        let g = build_grid(4, 1.0, 16, 4.0, 16).unwrap();
        let ones = vec![1.0; g.n_r];
        assert!((g.integrate_radial(&ones) - 4.0 * PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn wavenumbers_symmetric() {
        let g = build_grid(4, 4.0, 16, 2.0, 16).unwrap();
        assert_eq!(g.kz[0], 0.0);
        assert!((g.kz[1] + g.kz[15]).abs() < 1e-15);
        assert!((g.kz[8] - PI * 8.0 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn cutoff_core_and_far_field() {
        let g = build_grid(5, 200.0, 256, 4.0, 16).unwrap();
        let p = build_cutoff(&g, 4.0).unwrap();
        assert!(!p.truncated);
        for (j, &r) in g.r_nodes.iter().enumerate() {
            if r <= 4.0 {
                assert_eq!(p.psi[j], 0.5 * r * r);
                assert_eq!(p.lap_psi[j], 4.0);
            }
            if r >= 40.0 {
                assert_eq!(p.phi_grad_r[j], 0.0);
            }
        }
    }
}
