//! Fields on the cylindrical grid, the Laplacian and bilaplacian, and the
//! integral functionals.
//!
//! Values are stored row-major with r outer and z inner. The spectral
//! representation applies an FFT along z and the radial eigenbasis along r,
//! in which Δ is diagonal with symbol −(λ_n + k²).

use std::sync::Arc;

use nalgebra::{DMatrix, DMatrixView, DMatrixViewMut};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Grid;

#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Arc<Grid>,
    pub values: Vec<Complex64>,
    pub generation: u64,
}

impl Field {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        Self {
            grid: Arc::clone(grid),
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            generation: 0,
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for &r in &grid.r_nodes {
            for &z in &grid.z_nodes {
                values.push(f(r, z));
            }
        }
        Self {
            grid: Arc::clone(grid),
            values,
            generation: 0,
        }
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}x{} grid",
                values.len(),
                grid.n_r,
                grid.n_z
            )));
        }
        Ok(Self {
            grid: Arc::clone(grid),
            values,
            generation: 0,
        })
    }

    /// Same grid, new values; the generation advances.
    pub fn with_values(&self, values: Vec<Complex64>) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values,
            generation: self.generation + 1,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&self, a: Complex64) -> Self {
        self.with_values(self.values.iter().map(|v| v * a).collect())
    }

    pub fn axpy(&self, a: Complex64, other: &Field) -> Self {
        self.with_values(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(x, y)| x + a * y)
                .collect(),
        )
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if Arc::ptr_eq(&self.grid, &other.grid) || self.grid.same_as(&other.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{} vs {}",
                self.grid.fingerprint(),
                other.grid.fingerprint()
            )))
        }
    }
}

/// Coefficients in the (radial mode, axial wavenumber) basis, same layout as
/// nodal values. Normalized so that sum |c|^2 * dz / n_z is the L² norm squared.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub grid: Arc<Grid>,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    /// Symbol of −Δ at (mode n, axial index k).
    #[inline]
    pub fn neg_lap_symbol(grid: &Grid, n: usize, k: usize) -> f64 {
        grid.radial.lambda_capped[n] + grid.kz[k] * grid.kz[k]
    }

    /// sum over modes of w(−Δ symbol) |c|^2, scaled to an integral.
    pub fn weighted_norm_sq(&self, w: impl Fn(f64) -> f64) -> f64 {
        let g = &self.grid;
        let mut acc = 0.0;
        for n in 0..g.n_r {
            let mut row = 0.0;
            for k in 0..g.n_z {
                let c = self.coeffs[g.index(n, k)];
                row += w(Self::neg_lap_symbol(g, n, k)) * c.norm_sqr();
            }
            acc += row;
        }
        acc * g.dz / g.n_z as f64
    }

    pub fn multiply(&mut self, f: impl Fn(f64) -> Complex64) {
        let g = Arc::clone(&self.grid);
        for n in 0..g.n_r {
            for k in 0..g.n_z {
                let i = g.index(n, k);
                self.coeffs[i] *= f(Self::neg_lap_symbol(&g, n, k));
            }
        }
    }
}

fn fft_rows(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    let fft = if inverse {
        &grid.fft_inverse
    } else {
        &grid.fft_forward
    };
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(data, &mut scratch);
    if inverse {
        let s = 1.0 / grid.n_z as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }
}

/// Complex values as interleaved (re, im) pairs.
fn as_f64(data: &[Complex64]) -> &[f64] {
    // SAFETY: Complex64 is repr(C) with fields (re, im) and alignment of f64.
    unsafe { std::slice::from_raw_parts(data.as_ptr().cast::<f64>(), 2 * data.len()) }
}

fn as_f64_mut(data: &mut [Complex64]) -> &mut [f64] {
    // SAFETY: as in `as_f64`; the borrow is exclusive.
    unsafe { std::slice::from_raw_parts_mut(data.as_mut_ptr().cast::<f64>(), 2 * data.len()) }
}

/// Apply an n_r x n_r real matrix M along r: out[i, k] = sum_j M[j, i] in[j, k]
/// (i.e. rows-of-values times M).
fn radial_matmul(grid: &Grid, data: &[Complex64], m: &DMatrix<f64>) -> Vec<Complex64> {
    let n_z2 = 2 * grid.n_z;
    let mut out = vec![Complex64::new(0.0, 0.0); data.len()];
    // Column j of this column-major (2 n_z) x n_r view is radial node j.
    let view = DMatrixView::from_slice(as_f64(data), n_z2, grid.n_r);
    let mut target = DMatrixViewMut::from_slice(as_f64_mut(&mut out), n_z2, grid.n_r);
    target.gemm(1.0, &view, m, 0.0);
    out
}

pub fn to_spectrum(u: &Field) -> Spectrum {
    let g = &u.grid;
    let mut data = u.values.clone();
    fft_rows(g, &mut data, false);
    Spectrum {
        grid: Arc::clone(g),
        coeffs: radial_matmul(g, &data, &g.radial.forward),
    }
}

pub fn from_spectrum(s: &Spectrum) -> Vec<Complex64> {
    let g = &s.grid;
    let mut data = radial_matmul(g, &s.coeffs, &g.radial.inverse);
    fft_rows(g, &mut data, true);
    data
}

pub fn laplacian(u: &Field) -> Field {
    let mut s = to_spectrum(u);
    s.multiply(|l| Complex64::new(-l, 0.0));
    u.with_values(from_spectrum(&s))
}

/// Δ applied twice; in the eigenbasis the composition is the squared symbol.
pub fn bilaplacian(u: &Field) -> Field {
    let mut s = to_spectrum(u);
    s.multiply(|l| Complex64::new(l * l, 0.0));
    u.with_values(from_spectrum(&s))
}

/// ∂_r by collocation (first derivative, no spectral cap).
pub fn d_r(u: &Field) -> Field {
    let g = &u.grid;
    let ds_t = g.radial.ds.transpose();
    let mut out = radial_matmul(g, &u.values, &ds_t);
    for j in 0..g.n_r {
        let f = 2.0 * g.r_nodes[j];
        for v in &mut out[j * g.n_z..(j + 1) * g.n_z] {
            *v *= f;
        }
    }
    u.with_values(out)
}

/// ∂_r² by collocation: 2 u_s + 4 s u_ss.
pub fn d_rr(u: &Field) -> Field {
    let g = &u.grid;
    let ds_t = g.radial.ds.transpose();
    let us = radial_matmul(g, &u.values, &ds_t);
    let uss = radial_matmul(g, &us, &ds_t);
    let mut out = vec![Complex64::new(0.0, 0.0); g.len()];
    for j in 0..g.n_r {
        let s = g.radial.s[j];
        for k in 0..g.n_z {
            let i = g.index(j, k);
            out[i] = 2.0 * us[i] + 4.0 * s * uss[i];
        }
    }
    u.with_values(out)
}

/// Spectral ∂_z; the Nyquist mode is dropped.
pub fn d_z(u: &Field) -> Field {
    let g = &u.grid;
    let mut data = u.values.clone();
    fft_rows(g, &mut data, false);
    for j in 0..g.n_r {
        for k in 0..g.n_z {
            let kk = if k == g.n_z / 2 { 0.0 } else { g.kz[k] };
            data[g.index(j, k)] *= Complex64::new(0.0, kk);
        }
    }
    fft_rows(g, &mut data, true);
    u.with_values(data)
}

/// <u, v> = ∫ conj(u) v.
pub fn inner(u: &Field, v: &Field) -> Complex64 {
    let g = &u.grid;
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..g.n_r {
        let mut row = Complex64::new(0.0, 0.0);
        for k in 0..g.n_z {
            let i = g.index(j, k);
            row += u.values[i].conj() * v.values[i];
        }
        acc += row * g.quad_weights[j];
    }
    acc * g.dz
}

/// ∫ f |u|^2 for a real radial weight f(r_j).
pub fn weighted_mass(u: &Field, f: &[f64]) -> f64 {
    let g = &u.grid;
    let mut acc = 0.0;
    for j in 0..g.n_r {
        let row: f64 = u.values[j * g.n_z..(j + 1) * g.n_z].iter().map(|c| c.norm_sqr()).sum();
        acc += f[j] * g.quad_weights[j] * row;
    }
    acc * g.dz
}

pub fn mass(u: &Field) -> f64 {
    let ones = vec![1.0; u.grid.n_r];
    weighted_mass(u, &ones)
}

pub fn lp_norm(u: &Field, p: f64) -> f64 {
    assert!(p >= 1.0, "lp_norm needs p >= 1");
    let abs_p: Vec<f64> = u.values.iter().map(|c| c.norm().powf(p)).collect();
    u.grid.integrate(&abs_p).powf(1.0 / p)
}

/// sup over z of ∫ |u(y, z)|^2 dy.
pub fn axial_trace_sup(u: &Field) -> f64 {
    axial_profile_sq(u).into_iter().fold(0.0, f64::max)
}

/// z ↦ ∫ |u(y, z)|^2 dy on the axial nodes.
pub fn axial_profile_sq(u: &Field) -> Vec<f64> {
    let g = &u.grid;
    let mut out = vec![0.0; g.n_z];
    for j in 0..g.n_r {
        let w = g.quad_weights[j];
        for (k, o) in out.iter_mut().enumerate() {
            *o += w * u.values[g.index(j, k)].norm_sqr();
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSnapshot {
    pub time: f64,
    pub mass: f64,
    pub energy: f64,
    pub grad_sq: f64,
    pub grad_y_sq: f64,
    pub dz_sq: f64,
    pub lap_sq: f64,
    pub pot: f64,
}

/// Energy from its parts: ½‖Δu‖² + (μ/2)‖∇u‖² − κ‖u‖^{2σ+2}/(2σ+2), κ the
/// nonlinearity coefficient (1 for the focusing equation).
pub fn energy_from_parts(lap_sq: f64, grad_sq: f64, pot: f64, mu: f64, sigma: f64, kappa: f64) -> f64 {
    0.5 * lap_sq + 0.5 * mu * grad_sq - kappa * pot / (2.0 * sigma + 2.0)
}

/// x^p for x ≥ 0; integer and half-integer p avoid the general power.
#[inline]
pub fn nonneg_pow(x: f64, p: f64) -> f64 {
    let twice = 2.0 * p;
    if twice == twice.trunc() && twice.abs() <= 32.0 {
        let n = twice as i32;
        if n % 2 == 0 {
            x.powi(n / 2)
        } else {
            x.sqrt().powi(n)
        }
    } else {
        x.powf(p)
    }
}

pub fn potential(u: &Field, sigma: f64) -> f64 {
    let q = sigma + 1.0;
    let f: Vec<f64> = u.values.iter().map(|c| nonneg_pow(c.norm_sqr(), q)).collect();
    u.grid.integrate(&f)
}

/// All functionals with the focusing nonlinearity.
pub fn functionals(u: &Field, mu: f64, sigma: f64) -> FunctionalSnapshot {
    functionals_with(u, mu, sigma, 1.0, 0.0)
}

/// Functionals with nonlinearity coefficient `kappa`, stamped with `time`.
///
/// Quadratic terms are evaluated in the eigenbasis, where they coincide
/// with the discrete forms that the linear flow conserves.
pub fn functionals_with(u: &Field, mu: f64, sigma: f64, kappa: f64, time: f64) -> FunctionalSnapshot {
    let s = to_spectrum(u);
    let g = &u.grid;
    let (mut mass, mut lap_sq, mut gy, mut gz) = (0.0, 0.0, 0.0, 0.0);
    for n in 0..g.n_r {
        let lr = g.radial.lambda_capped[n];
        for k in 0..g.n_z {
            let c2 = s.coeffs[g.index(n, k)].norm_sqr();
            let k2 = g.kz[k] * g.kz[k];
            let l = lr + k2;
            mass += c2;
            lap_sq += l * l * c2;
            gy += lr * c2;
            gz += k2 * c2;
        }
    }
    let scale = g.dz / g.n_z as f64;
    let (mass, lap_sq, grad_y_sq, dz_sq) = (mass * scale, lap_sq * scale, gy * scale, gz * scale);
    let grad_sq = grad_y_sq + dz_sq;
    let pot = potential(u, sigma);
    FunctionalSnapshot {
        time,
        mass,
        energy: energy_from_parts(lap_sq, grad_sq, pot, mu, sigma, kappa),
        grad_sq,
        grad_y_sq,
        dz_sq,
        lap_sq,
        pot,
    }
}

/// ‖∂_r u‖² and ‖∂_z u‖² from first derivatives.
pub fn gradient_norms(u: &Field) -> (f64, f64) {
    let ur = d_r(u);
    let uz = d_z(u);
    (mass(&ur), mass(&uz))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use std::f64::consts::PI;

    fn gaussian(grid: &Arc<Grid>, a: f64) -> Field {
        Field::from_fn(grid, |r, z| Complex64::new(a * (-(r * r + z * z) / 2.0).exp(), 0.0))
    }

    #[test]
    fn roundtrip_spectrum() {
        let g = build_grid(4, 8.0, 24, 8.0, 32).unwrap();
        let u = Field::from_fn(&g, |r, z| Complex64::new((-(r * r) - z * z).exp(), (r * z).sin() * (-r * r - z * z).exp()));
        let back = from_spectrum(&to_spectrum(&u));
        let err = u.values.iter().zip(&back).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-13);
    }

    #[test]
    fn gaussian_mass_and_norms() {
        let g = build_grid(4, 10.0, 64, 10.0, 64).unwrap();
        let u = gaussian(&g, 1.0);
        let f = functionals(&u, 0.0, 1.0);
        assert!((f.mass - PI * PI).abs() < 1e-8);
        assert!((f.lap_sq - 6.0 * PI * PI).abs() < 1e-6);
        assert!((lp_norm(&u, 2.0) - PI).abs() < 1e-9);
        assert!((lp_norm(&u, 4.0) - (PI / 2.0).powf(0.5)).abs() < 1e-9);
    }

    #[test]
    fn energy_of_a7_gaussian() {
        let g = build_grid(4, 10.0, 64, 10.0, 64).unwrap();
        let f = functionals(&gaussian(&g, 7.0), 0.0, 1.0);
        assert!((f.energy + 3.0625 * PI * PI).abs() < 1e-4, "{}", f.energy);
        let rebuilt = 0.5 * f.lap_sq - f.pot / 4.0;
        assert_eq!(f.energy, rebuilt);
    }

    #[test]
    fn plane_wave_in_z() {
        let g = build_grid(4, 4.0, 16, PI, 16).unwrap();
        let k = 3.0;
        let u = Field::from_fn(&g, |_, z| Complex64::new(0.0, k * z).exp());
        let lu = laplacian(&u);
        let bu = bilaplacian(&u);
        for (i, v) in u.values.iter().enumerate() {
            assert!((lu.values[i] + k * k * v).norm() < 1e-10);
            assert!((bu.values[i] - k.powi(4) * v).norm() < 1e-8);
        }
    }

    #[test]
    fn gradient_split_consistent() {
        let g = build_grid(5, 8.0, 96, 8.0, 48).unwrap();
        let u = Field::from_fn(&g, |r, z| Complex64::new(0.0, 0.5 * z).exp().scale((-(r * r - 1.0).powi(2) / 4.0 - z * z).exp()));
        let f = functionals(&u, 0.0, 1.0);
        assert!((f.grad_sq - f.grad_y_sq - f.dz_sq).abs() <= 1e-12 * f.grad_sq);
        let (gy, gz) = gradient_norms(&u);
        assert!((gy - f.grad_y_sq).abs() < 1e-8 * gy, "{gy} {}", f.grad_y_sq);
        assert!((gz - f.dz_sq).abs() < 1e-8 * gz, "{gz} {}", f.dz_sq);
    }

    #[test]
    fn separable_axial_trace() {
        let g = build_grid(4, 8.0, 32, 8.0, 64).unwrap();
        let u = Field::from_fn(&g, |r, z| Complex64::new((-r * r / 2.0).exp() * 2.0 * (-(z - 0.5f64).powi(2)).exp(), 0.0));
        // ‖e^{-r²/2}‖² in R³ = π^{3/2}; max |g|² = 4 at the node nearest z = 0.5.
        let gmax = g.z_nodes.iter().map(|z| 4.0 * (-2.0 * (z - 0.5f64).powi(2)).exp()).fold(0.0, f64::max);
        assert!((axial_trace_sup(&u) - PI.powf(1.5) * gmax).abs() < 1e-9);
    }
}
