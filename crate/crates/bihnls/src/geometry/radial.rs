//! Radial discretization of the Laplacian for radial functions on R^n.
//!
//! Nodes are Gauss-Jacobi points in s = r^2 on [0, r_max^2] for the weight
//! s^{(n-2)/2}, so the rule integrates r^{n-1} dr exactly against any
//! polynomial in r^2 of degree below 2N. The Laplacian is the weak form
//! L = -W^{-1} D^T diag(4 s W) D with D the collocation derivative in s;
//! it is symmetric in the W inner product and negative semidefinite, with a
//! natural (zero-flux) condition at r_max. Its spectrum is diagonalized once.

use nalgebra::{DMatrix, SymmetricEigen};

use super::quadrature::{barycentric_weights, differentiation_matrix, gauss_jacobi, sphere_area};

#[derive(Debug, Clone)]
pub struct RadialBasis {
    /// Ambient dimension of the radial space.
    pub dim: u32,
    pub r_max: f64,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
    /// Quadrature weights including the sphere area: sum_j w_j f(r_j) ~ int_{R^n} f.
    pub weights: Vec<f64>,
    /// d/ds on the nodes.
    pub ds: DMatrix<f64>,
    /// Eigenvalues of -L, ascending.
    pub lambda: Vec<f64>,
    /// Eigenvalues with the wall-mode cap applied.
    pub lambda_capped: Vec<f64>,
    pub lambda_cap: f64,
    /// Column n of `forward` maps nodal values to mode n: c_n = sum_j u_j F[j, n].
    pub forward: DMatrix<f64>,
    /// Row n of `inverse` is mode n in nodal form: u_j = sum_n c_n I[n, j].
    pub inverse: DMatrix<f64>,
}

impl RadialBasis {
    pub fn new(dim: u32, n: usize, r_max: f64) -> Self {
        assert!(dim >= 1 && n >= 2 && r_max > 0.0);
        let alpha = (dim as f64 - 2.0) / 2.0;
        let (x, w) = gauss_jacobi(n, alpha);
        let s_max = r_max * r_max;
        let s: Vec<f64> = x.iter().map(|x| 0.5 * s_max * (1.0 + x)).collect();
        let r: Vec<f64> = s.iter().map(|s| s.sqrt()).collect();

        // r^{n-1} dr = (1/2) s^alpha ds and s^alpha ds = (s_max/2)^{alpha+1} (1+x)^alpha dx.
        let scale = sphere_area(dim) * 0.5 * (0.5 * s_max).powf(alpha + 1.0);
        let weights: Vec<f64> = w.iter().map(|w| w * scale).collect();

        let bary = barycentric_weights(&x, &w);
        let ds = differentiation_matrix(&s, &bary);

        // Stiffness: int |u_r|^2 = int 4 s |u_s|^2.
        let mut scaled = ds.clone();
        for i in 0..n {
            let m = 4.0 * s[i] * weights[i];
            scaled.row_mut(i).scale_mut(m);
        }
        let stiffness = ds.transpose() * scaled;

        let inv_sqrt_w: Vec<f64> = weights.iter().map(|w| 1.0 / w.sqrt()).collect();
        let mut sym = stiffness;
        for i in 0..n {
            for j in 0..n {
                sym[(i, j)] *= inv_sqrt_w[i] * inv_sqrt_w[j];
            }
        }
        let sym = (&sym + sym.transpose()) * 0.5;

        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));

        // Modes above the uniform-grid Nyquist value are wall-localized; capping
        // them keeps roundoff from being amplified by the clustered outer nodes.
        let lambda_cap = (std::f64::consts::PI * n as f64 / r_max).powi(2);
        let mut lambda = Vec::with_capacity(n);
        let mut forward = DMatrix::<f64>::zeros(n, n);
        let mut inverse = DMatrix::<f64>::zeros(n, n);
        for (col, &k) in order.iter().enumerate() {
            // The smallest eigenvalue is the constant mode, zero up to roundoff.
            lambda.push(eig.eigenvalues[k].max(0.0));
            let v = eig.eigenvectors.column(k);
            // Fix the sign so results do not depend on the eigensolver's choice.
            let pivot = v.iter().fold(0.0f64, |acc, &x| if x.abs() > acc.abs() { x } else { acc });
            let sign = if pivot < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                let vj = sign * v[j];
                forward[(j, col)] = vj / inv_sqrt_w[j];
                inverse[(col, j)] = vj * inv_sqrt_w[j];
            }
        }
        let lambda_capped = lambda.iter().map(|&l| l.min(lambda_cap)).collect();

        Self {
            dim,
            r_max,
            r,
            s,
            weights,
            ds,
            lambda,
            lambda_capped,
            lambda_cap,
            forward,
            inverse,
        }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, f)| w * f).sum()
    }

    pub fn to_modes(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|m| (0..n).map(|j| u[j] * self.forward[(j, m)]).sum())
            .collect()
    }

    pub fn from_modes(&self, c: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut u = vec![0.0; n];
        for (m, &cm) in c.iter().enumerate() {
            if cm != 0.0 {
                for (j, uj) in u.iter_mut().enumerate() {
                    *uj += cm * self.inverse[(m, j)];
                }
            }
        }
        u
    }

    /// Apply a function of the capped spectrum of -L.
    pub fn apply_spectral(&self, u: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
        let mut c = self.to_modes(u);
        for (cm, &l) in c.iter_mut().zip(&self.lambda_capped) {
            *cm *= f(l);
        }
        self.from_modes(&c)
    }

    /// Radial Laplacian (capped spectrum).
    pub fn laplacian(&self, u: &[f64]) -> Vec<f64> {
        self.apply_spectral(u, |l| -l)
    }

    /// d/dr on the nodes: 2 r d/ds.
    pub fn d_r(&self, u: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| 2.0 * self.r[i] * (0..n).map(|j| self.ds[(i, j)] * u[j]).sum::<f64>())
            .collect()
    }
}
