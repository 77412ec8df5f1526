//! Randomized smooth test fields.
//!
//! Every component is smooth in r² (Gaussians in r² centred on the axis or
//! on a ring) so that it is resolved by the radial basis.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::geometry::Grid;
use crate::operators::{mass, Field};

#[derive(Debug, Clone, Copy)]
struct Component {
    amp: Complex64,
    r0: f64,
    w: f64,
    z0: f64,
    wz: f64,
    kz: f64,
    chirp: f64,
}

impl Component {
    fn eval(&self, r: f64, z: f64) -> Complex64 {
        let radial = if self.r0 == 0.0 {
            -r * r / (2.0 * self.w * self.w)
        } else {
            let q = r * r - self.r0 * self.r0;
            -q * q / (4.0 * self.r0 * self.r0 * self.w * self.w)
        };
        let dz = z - self.z0;
        let env = (radial - dz * dz / (2.0 * self.wz * self.wz)).exp();
        self.amp * env * Complex64::from_polar(1.0, self.kz * z + self.chirp * r * r)
    }
}

fn component(grid: &Grid, rng: &mut impl Rng, ring: bool) -> Component {
    // Sizes are tied to the box so that fields decay well inside it.
    let scale = grid.r_max.min(grid.z_max) / 12.0;
    let r0 = if ring {
        rng.random_range(2.0..4.0) * scale
    } else {
        0.0
    };
    Component {
        amp: Complex64::from_polar(rng.random_range(0.2..2.0), rng.random_range(0.0..2.0 * PI)),
        r0,
        w: rng.random_range(0.7..1.5) * scale,
        z0: rng.random_range(-2.0..2.0) * scale,
        wz: rng.random_range(0.7..1.5) * scale,
        kz: rng.random_range(-1.5..1.5) / scale,
        chirp: rng.random_range(-0.3..0.3) / (scale * scale),
    }
}

/// A single axis-centred bump or ring with random phase, chirp and drift.
pub fn random_field(grid: &Arc<Grid>, rng: &mut impl Rng) -> Field {
    let ring = rng.random_bool(0.5);
    let c = component(grid, rng, ring);
    Field::from_fn(grid, |r, z| c.eval(r, z))
}

/// Superposition of two or three components, at least one of them a ring.
/// Disjoint in construction from [`random_field`] and from the preset data.
pub fn calibration_field(grid: &Arc<Grid>, rng: &mut impl Rng) -> Field {
    let n = rng.random_range(2..=3);
    let comps: Vec<Component> = (0..n)
        .map(|i| {
            let ring = i == 0 || rng.random_bool(0.5);
            component(grid, rng, ring)
        })
        .collect();
    Field::from_fn(grid, |r, z| comps.iter().map(|c| c.eval(r, z)).sum())
}

/// Rescale u to the given mass.
pub fn with_mass(u: &Field, target: f64) -> Field {
    let m = mass(u);
    if m == 0.0 {
        return u.clone();
    }
    u.scale(Complex64::new((target / m).sqrt(), 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_grid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn fields_decay_at_the_box_edge() {
        let g = build_grid(4, 12.0, 64, 12.0, 64).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let u = calibration_field(&g, &mut rng);
            let peak = u.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let edge = (0..g.n_r)
                .map(|j| u.values[g.index(j, 0)].norm())
                .chain((0..g.n_z).map(|k| u.values[g.index(g.n_r - 1, k)].norm()))
                .fold(0.0, f64::max);
            assert!(edge < 1e-6 * peak, "{edge} vs {peak}");
        }
    }

    #[test]
    fn rescaling_hits_target_mass() {
        let g = build_grid(4, 12.0, 48, 12.0, 48).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = with_mass(&random_field(&g, &mut rng), 3.5);
        assert!((mass(&u) - 3.5).abs() < 1e-12);
    }
}
