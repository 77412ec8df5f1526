//! Gauss-Jacobi rules for the weight (1+x)^alpha on [-1, 1] and the
//! barycentric collocation derivative on their nodes.

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes (ascending) and weights of the n-point rule for (1+x)^alpha.
pub fn gauss_jacobi(n: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1 && alpha > -1.0);
    let (a, b) = (0.0_f64, alpha);
    let rec = Recurrence::new(n + 1, a, b);

    // Golub-Welsch for starting values, then Newton on the orthonormal
    // polynomial to recover full relative accuracy near the endpoints.
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        jac[(k, k)] = rec.alpha[k];
        if k + 1 < n {
            let off = rec.beta[k + 1].sqrt();
            jac[(k, k + 1)] = off;
            jac[(k + 1, k)] = off;
        }
    }
    let mut x: Vec<f64> = SymmetricEigen::new(jac).eigenvalues.iter().copied().collect();
    x.sort_by(|p, q| p.total_cmp(q));

    for xi in x.iter_mut() {
        for _ in 0..3 {
            let (p, dp, _) = rec.eval(n, *xi);
            let step = p / dp;
            *xi -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
    }

    let w = x
        .iter()
        .map(|&xi| {
            let (_, _, sumsq) = rec.eval(n, xi);
            1.0 / sumsq
        })
        .collect();
    (x, w)
}

/// Barycentric weights for Gauss-Jacobi nodes, up to a common factor.
pub fn barycentric_weights(x: &[f64], w: &[f64]) -> Vec<f64> {
    x.iter()
        .zip(w)
        .enumerate()
        .map(|(j, (&xj, &wj))| {
            let s = ((1.0 - xj * xj) * wj).sqrt();
            if j % 2 == 0 {
                s
            } else {
                -s
            }
        })
        .collect()
}

/// Collocation first-derivative matrix on arbitrary distinct nodes.
pub fn differentiation_matrix(nodes: &[f64], bary: &[f64]) -> DMatrix<f64> {
    let n = nodes.len();
    let mut d = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[(i, j)] = v;
                diag -= v;
            }
        }
        d[(i, i)] = diag;
    }
    d
}

struct Recurrence {
    alpha: Vec<f64>,
    // beta[k] multiplies p_{k-1} in the monic recurrence; beta[0] = mu0.
    beta: Vec<f64>,
}

impl Recurrence {
    fn new(n: usize, a: f64, b: f64) -> Self {
        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n + 1];
        let ab = a + b;
        beta[0] = 2f64.powf(ab + 1.0) * gamma_ratio(a, b);
        alpha[0] = (b - a) / (ab + 2.0);
        for k in 1..n {
            let kf = k as f64;
            let t = 2.0 * kf + ab;
            alpha[k] = (b * b - a * a) / (t * (t + 2.0));
        }
        for k in 1..=n {
            let kf = k as f64;
            let t = 2.0 * kf + ab;
            beta[k] = 4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / (t * t * (t + 1.0) * (t - 1.0));
        }
        Self { alpha, beta }
    }

    /// Orthonormal p_n(x), its derivative, and sum_{k<n} p_k(x)^2.
    fn eval(&self, n: usize, x: f64) -> (f64, f64, f64) {
        let mut p_prev = 0.0;
        let mut dp_prev = 0.0;
        let mut p = 1.0 / self.beta[0].sqrt();
        let mut dp = 0.0;
        let mut sumsq = 0.0;
        for k in 0..n {
            sumsq += p * p;
            let sb_next = self.beta[k + 1].sqrt();
            let sb = if k == 0 { 0.0 } else { self.beta[k].sqrt() };
            let p_next = ((x - self.alpha[k]) * p - sb * p_prev) / sb_next;
            let dp_next = (p + (x - self.alpha[k]) * dp - sb * dp_prev) / sb_next;
            p_prev = p;
            dp_prev = dp;
            p = p_next;
            dp = dp_next;
        }
        (p, dp, sumsq)
    }
}

/// Gamma(a+1)Gamma(b+1)/Gamma(a+b+2), the Jacobi-weight mass divided by 2^{a+b+1}.
fn gamma_ratio(a: f64, b: f64) -> f64 {
    // a = 0 in every rule used here: the ratio is 1/(b+1).
    debug_assert!(a == 0.0);
    1.0 / (b + 1.0)
}

/// Gamma(n/2) for positive integer n, exactly by recurrence.
pub fn gamma_half(n: u32) -> f64 {
    assert!(n >= 1);
    let (mut g, mut k) = if n % 2 == 0 {
        (1.0, 2)
    } else {
        (std::f64::consts::PI.sqrt(), 1)
    };
    while k < n {
        g *= k as f64 / 2.0;
        k += 2;
    }
    g
}

/// Surface area of the unit sphere in R^n.
pub fn sphere_area(n: u32) -> f64 {
    2.0 * std::f64::consts::PI.powf(n as f64 / 2.0) / gamma_half(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_jacobi(8, 0.0);
        let sum: f64 = w.iter().sum();
        assert!((sum - 2.0).abs() < 1e-14);
        let m14: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(14)).sum();
        assert!((m14 - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn jacobi_rule_matches_beta_integrals() {
        // int_{-1}^{1} (1+x)^{1/2} (1+x)^k dx = 2^{k+3/2}/(k+3/2)
        let (x, w) = gauss_jacobi(20, 0.5);
        for k in 0..30 {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * (1.0 + x).powi(k)).sum();
            let kf = k as f64;
            let exact = 2f64.powf(kf + 1.5) / (kf + 1.5);
            assert!((q - exact).abs() < 1e-13 * exact, "k={k}: {q} vs {exact}");
        }
    }

    #[test]
    fn large_rule_weights_positive_and_nodes_ordered() {
        let (x, w) = gauss_jacobi(512, 1.5);
        assert!(w.iter().all(|&v| v > 0.0));
        assert!(x.windows(2).all(|p| p[0] < p[1]));
        let sum: f64 = w.iter().sum();
        let exact = 2f64.powf(2.5) / 2.5;
        assert!((sum - exact).abs() < 1e-12 * exact);
    }

    #[test]
    fn derivative_exact_on_polynomials() {
        let (x, w) = gauss_jacobi(12, 1.0);
        let bary = barycentric_weights(&x, &w);
        let d = differentiation_matrix(&x, &bary);
        let f: Vec<f64> = x.iter().map(|x| x.powi(7) - 3.0 * x * x).collect();
        for i in 0..x.len() {
            let df: f64 = (0..x.len()).map(|j| d[(i, j)] * f[j]).sum();
            let exact = 7.0 * x[i].powi(6) - 6.0 * x[i];
            assert!((df - exact).abs() < 1e-11);
        }
    }

    #[test]
    fn sphere_areas() {
        use std::f64::consts::PI;
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_area(5) - 8.0 * PI * PI / 3.0).abs() < 1e-13);
    }
}
