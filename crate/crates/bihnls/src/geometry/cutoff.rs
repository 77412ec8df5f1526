//! The radial cutoff psi and its rescalings psi_R(r) = R^2 psi(r/R).
//!
//! psi'' is 1 on [0, 1], drops to -c on [1, 3] and returns to 0 on [7, 10]
//! through C^5 smoothsteps, and vanishes beyond 10. The dip below zero is
//! what brings psi' back to 0 at r = 10; c is fixed by that requirement.
//! Since psi'' <= 1 everywhere, psi' <= r and Delta psi <= (number of radial
//! dimensions) follow by integration.

const ORDER: usize = 8;

/// Taylor data of a radial function at one point: derivatives 0..ORDER-1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet(pub [f64; ORDER]);

impl Jet {
    fn deriv(self) -> Jet {
        let mut out = [0.0; ORDER];
        out[..ORDER - 1].copy_from_slice(&self.0[1..]);
        Jet(out)
    }

    fn mul(self, other: Jet) -> Jet {
        let mut out = [0.0; ORDER];
        for (n, o) in out.iter_mut().enumerate() {
            let mut binom = 1.0;
            for k in 0..=n {
                *o += binom * self.0[k] * other.0[n - k];
                binom = binom * (n - k) as f64 / (k + 1) as f64;
            }
        }
        Jet(out)
    }

    fn add(self, other: Jet) -> Jet {
        let mut out = self.0;
        for (o, b) in out.iter_mut().zip(other.0) {
            *o += b;
        }
        Jet(out)
    }

    fn scale(self, a: f64) -> Jet {
        Jet(self.0.map(|x| a * x))
    }

    fn recip(r: f64) -> Jet {
        let mut out = [0.0; ORDER];
        let mut fact = 1.0;
        for (k, o) in out.iter_mut().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            *o = sign * fact / r.powi(k as i32 + 1);
        }
        Jet(out)
    }

    /// Radial Laplacian f'' + (m/r) f' in R^{m+1}; loses two orders.
    pub fn radial_laplacian(self, m: f64, r: f64) -> Jet {
        let d1 = self.deriv();
        d1.deriv().add(Jet::recip(r).mul(d1).scale(m))
    }
}

fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &a| acc * x + a)
}

fn poly_deriv(c: &[f64]) -> Vec<f64> {
    if c.len() <= 1 {
        return vec![0.0];
    }
    c.iter().enumerate().skip(1).map(|(k, &a)| k as f64 * a).collect()
}

fn poly_integral(c: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0];
    out.extend(c.iter().enumerate().map(|(k, &a)| a / (k + 1) as f64));
    out
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Degree-11 smoothstep: 0 -> 1 on [0, 1], derivatives 1..5 vanish at both ends.
fn smoothstep11() -> Vec<f64> {
    let one_minus_x = [1.0, -1.0];
    let mut sum = vec![0.0];
    let mut power = vec![1.0];
    let mut binom = 1.0;
    for k in 0..=5usize {
        if k > 0 {
            binom = binom * (5 + k) as f64 / k as f64;
            power = poly_mul(&power, &one_minus_x);
        }
        if sum.len() < power.len() {
            sum.resize(power.len(), 0.0);
        }
        for (s, p) in sum.iter_mut().zip(&power) {
            *s += binom * p;
        }
    }
    let mut x6 = vec![0.0; 7];
    x6[6] = 1.0;
    poly_mul(&x6, &sum)
}

#[derive(Debug, Clone)]
struct Piece {
    start: f64,
    len: f64,
    // psi'' on the piece as a polynomial in x = (t - start)/len
    g: Vec<f64>,
    g1: Vec<f64>,
    g2: Vec<f64>,
    dpsi_start: f64,
    psi_start: f64,
}

impl Piece {
    fn new(start: f64, len: f64, g: Vec<f64>, dpsi_start: f64, psi_start: f64) -> Self {
        let g1 = poly_integral(&g);
        let g2 = poly_integral(&g1);
        Self {
            start,
            len,
            g,
            g1,
            g2,
            dpsi_start,
            psi_start,
        }
    }

    fn eval(&self, t: f64) -> [f64; ORDER] {
        let x = (t - self.start) / self.len;
        let l = self.len;
        let mut out = [0.0; ORDER];
        out[0] = self.psi_start + self.dpsi_start * l * x + l * l * poly_eval(&self.g2, x);
        out[1] = self.dpsi_start + l * poly_eval(&self.g1, x);
        let mut p = self.g.clone();
        let mut lpow = 1.0;
        for o in out.iter_mut().skip(2) {
            *o = poly_eval(&p, x) / lpow;
            p = poly_deriv(&p);
            lpow *= l;
        }
        out
    }

    fn end_values(&self) -> (f64, f64) {
        let v = self.eval(self.start + self.len);
        (v[1], v[0])
    }
}

/// The unscaled profile psi.
#[derive(Debug, Clone)]
pub struct BaseCutoff {
    pieces: Vec<Piece>,
    dip: f64,
    far_value: f64,
}

impl BaseCutoff {
    pub const CORE: f64 = 1.0;
    pub const FLAT: f64 = 10.0;

    pub fn new() -> Self {
        let s = smoothstep11();
        // int_0^10 psi'' = 1 + (1 - c) - 4c - 1.5c = 0 for the layout below.
        let c = 4.0 / 13.0;
        let down: Vec<f64> = {
            let mut p: Vec<f64> = s.iter().map(|a| -(1.0 + c) * a).collect();
            p[0] += 1.0;
            p
        };
        let up: Vec<f64> = {
            let mut p: Vec<f64> = s.iter().map(|a| c * a).collect();
            p[0] -= c;
            p
        };
        let mut pieces = Vec::new();
        let (mut dpsi, mut psi) = (1.0, 0.5);
        for (start, len, g) in [(1.0, 2.0, down), (3.0, 4.0, vec![-c]), (7.0, 3.0, up)] {
            let piece = Piece::new(start, len, g, dpsi, psi);
            (dpsi, psi) = piece.end_values();
            pieces.push(piece);
        }
        debug_assert!(dpsi.abs() < 1e-12, "psi'(10) = {dpsi}");
        Self {
            pieces,
            dip: c,
            far_value: psi,
        }
    }

    /// Depth of the negative lobe of psi''.
    pub fn dip(&self) -> f64 {
        self.dip
    }

    /// Constant value of psi for t >= 10.
    pub fn far_value(&self) -> f64 {
        self.far_value
    }

    /// psi and its derivatives 1..7 at t >= 0.
    pub fn derivatives(&self, t: f64) -> [f64; ORDER] {
        let mut out = [0.0; ORDER];
        if t <= Self::CORE {
            out[0] = 0.5 * t * t;
            out[1] = t;
            out[2] = 1.0;
            return out;
        }
        if t >= Self::FLAT {
            out[0] = self.far_value;
            return out;
        }
        let piece = self
            .pieces
            .iter()
            .rev()
            .find(|p| t >= p.start)
            .expect("t > CORE lies in a bridge piece");
        piece.eval(t)
    }
}

impl Default for BaseCutoff {
    fn default() -> Self {
        Self::new()
    }
}

/// Values of psi_R and the Laplacian-derived quantities at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutoffSample {
    /// psi_R and derivatives 1..7.
    pub psi: [f64; ORDER],
    pub lap: f64,
    /// d^2/dr^2 of Delta psi_R.
    pub lap_rr: f64,
    pub bilap: f64,
    pub trilap: f64,
}

/// psi_R at radius r, with Laplacians taken in R^{m+1}.
pub fn sample(base: &BaseCutoff, radius: f64, r: f64, m: f64) -> CutoffSample {
    if r <= radius * BaseCutoff::CORE {
        // Exact on the quadratic core, avoiding 1/r^k cancellation near the axis.
        let mut psi = [0.0; ORDER];
        psi[0] = 0.5 * r * r;
        psi[1] = r;
        psi[2] = 1.0;
        return CutoffSample {
            psi,
            lap: m + 1.0,
            lap_rr: 0.0,
            bilap: 0.0,
            trilap: 0.0,
        };
    }
    let t = r / radius;
    let raw = base.derivatives(t);
    let mut psi = [0.0; ORDER];
    for (k, p) in psi.iter_mut().enumerate() {
        *p = radius.powi(2 - k as i32) * raw[k];
    }
    let jet = Jet(psi);
    let lap = jet.radial_laplacian(m, r);
    let bilap = lap.radial_laplacian(m, r);
    let trilap = bilap.radial_laplacian(m, r);
    CutoffSample {
        psi,
        lap: lap.0[0],
        lap_rr: lap.0[2],
        bilap: bilap.0[0],
        trilap: trilap.0[0],
    }
}
