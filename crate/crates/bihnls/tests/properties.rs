//! Property tests over randomized inputs.

use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use proptest::prelude::*;

use bihnls::diagnostics::fd_derivative;
use bihnls::geometry::{build_grid, Grid};
use bihnls::harness::SimConfig;
use bihnls::operators::{inner, laplacian, mass, Field};
use bihnls::solver::{nonlinear_phase, Checkpoint, Physics, SimState, Stepper};

fn grid() -> &'static Arc<Grid> {
    static G: OnceLock<Arc<Grid>> = OnceLock::new();
    G.get_or_init(|| build_grid(4, 10.0, 32, 10.0, 32).unwrap())
}

fn bump(a: f64, w: f64, kz: f64, chirp: f64) -> Field {
    Field::from_fn(grid(), move |r, z| {
        Complex64::from_polar(a * (-(r * r + z * z) / (2.0 * w * w)).exp(), kz * z + chirp * r * r)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn strang_step_conserves_mass(a in 0.1f64..3.0, w in 0.8f64..1.6, kz in -1.0f64..1.0,
                                  chirp in -0.3f64..0.3, sigma in 0.5f64..2.0, mu in -1.0f64..1.0,
                                  dt in 1e-4f64..1e-2) {
        let u = bump(a, w, kz, chirp);
        let m0 = mass(&u);
        let v = Stepper::new(grid(), Physics::focusing(sigma, mu)).step(&u, dt).unwrap();
        prop_assert!((mass(&v) - m0).abs() <= 1e-11 * m0);
    }

    #[test]
    fn nonlinear_phase_is_pointwise_unimodular(a in 0.1f64..5.0, h in -1.0f64..1.0, sigma in 0.25f64..3.0) {
        let u = bump(a, 1.0, 0.3, 0.1);
        let v = nonlinear_phase(&u, h, &Physics::focusing(sigma, 0.0));
        for (x, y) in u.values.iter().zip(&v.values) {
            prop_assert!((x.norm() - y.norm()).abs() <= 1e-13 * (1.0 + x.norm()));
        }
    }

    #[test]
    fn laplacian_is_symmetric_and_negative(a in 0.1f64..2.0, w in 0.8f64..1.6, kz in -1.0f64..1.0, chirp in -0.3f64..0.3) {
        let u = bump(a, w, kz, chirp);
        let v = bump(1.0, 1.1, -0.2, 0.05);
        let lu = laplacian(&u);
        let lv = laplacian(&v);
        let (x, y) = (inner(&lu, &v), inner(&u, &lv));
        prop_assert!((x - y).norm() <= 1e-10 * (1.0 + x.norm()));
        prop_assert!(inner(&lu, &u).re <= 0.0);
    }

    #[test]
    fn checkpoint_bytes_roundtrip(a in 0.1f64..3.0, t in 0.0f64..10.0, dt in 1e-8f64..1e-2, step in 0u64..1_000_000) {
        let physics = Physics::focusing(1.0, 0.5);
        let mut state = SimState::new(bump(a, 1.0, 0.2, 0.1), &physics, dt);
        state.t = t;
        state.step = step;
        let ck = Checkpoint::from_state(&state, &physics);
        let bytes = ck.to_bytes();
        let back = Checkpoint::from_bytes(&bytes, std::path::Path::new("mem")).unwrap();
        prop_assert_eq!(back, ck);
    }

    #[test]
    fn fd_derivative_is_exact_on_quadratics(c0 in -5.0f64..5.0, c1 in -5.0f64..5.0, c2 in -5.0f64..5.0,
                                            steps in proptest::collection::vec(0.01f64..0.2, 4..12)) {
        let mut t = vec![0.0];
        for h in &steps {
            t.push(t.last().unwrap() + h);
        }
        let m: Vec<f64> = t.iter().map(|x| c0 + c1 * x + c2 * x * x).collect();
        let fd = fd_derivative(&t, &m);
        for i in 1..t.len() - 1 {
            let exact = c1 + 2.0 * c2 * t[i];
            prop_assert!((fd[i].0 - exact).abs() <= 1e-8 * (1.0 + exact.abs()));
        }
    }

    #[test]
    fn config_json_roundtrip(d in 3u32..7, sigma in 0.1f64..2.0, amplitude in 0.1f64..10.0, seed in any::<u64>()) {
        let cfg = SimConfig { d, sigma, amplitude, seed, ..SimConfig::default() };
        prop_assume!(cfg.validate().is_ok());
        let back = SimConfig::from_json(&cfg.to_json()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
