use critblow::analysis::solve_t0_gap;
use critblow::fit::{fit_line, geomspace};
use critblow::monitor::{choose_gamma, membership_from};
use critblow::shooting::{covers_quadrants, initial_psi};
use critblow::solver::PhysicalFrame;
use critblow::spectral::{hermite_h, hermite_norm_sq, project_modes};
use critblow::{ModelParams, Quadrature, RunConfig, ShrinkParams};
use proptest::prelude::*;

fn p5() -> ModelParams {
    ModelParams::new(5.0, 1.0, 6.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exponents_tie_together(p in 3.01f64..20.0) {
        let m = ModelParams::new(p, 1.0, 6.0).unwrap();
        prop_assert!((2.0 * m.beta * (m.q - 1.0) - 1.0).abs() < 1e-14);
        prop_assert!(m.beta < 1.0 && m.beta > 0.5);
        prop_assert!((m.kappa.powf(p - 1.0) * (p - 1.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bounds_shrink_in_s(s in 2.0f64..500.0, ds in 0.01f64..50.0) {
        let m = p5();
        let sh = ShrinkParams::new(&m, 20.0, 0.05).unwrap();
        let (a, b) = (sh.bounds(s), sh.bounds(s + ds));
        for k in 0..5 {
            prop_assert!(b[k] < a[k]);
        }
    }

    #[test]
    fn membership_scales_with_data(f in 0.0f64..2.0, s in 10.0f64..100.0) {
        let m = p5();
        let sh = ShrinkParams::new(&m, 20.0, 0.05).unwrap();
        let q = sh.bounds(s).map(|b| f * b);
        let r = membership_from(q, &sh, s);
        prop_assert_eq!(r.in_set, f <= 1.0);
        for x in r.slack {
            prop_assert!((x - f).abs() < 1e-12);
        }
    }

    #[test]
    fn psi_projects_onto_its_coefficients(d0 in -2.0f64..2.0, d1 in -2.0f64..2.0) {
        let m = p5();
        let cfg = RunConfig::default();
        let s0 = 15.0;
        let psi = initial_psi(d0, d1, s0, 20.0, &m, &cfg).unwrap();
        let d = project_modes(&psi, s0, &m, cfg.cutoff).unwrap();
        let amp = 20.0 / s0.powf(2.0 * m.beta + 1.0);
        prop_assert!((d.v0 - d0 * amp).abs() < 1e-9 * amp);
        prop_assert!((d.v1 - d1 * amp).abs() < 1e-9 * amp);
    }

    #[test]
    fn t0_gap_solves_its_equation(x0 in 1e-3f64..0.3, k0 in 0.5f64..8.0) {
        let b = p5().beta;
        if let Ok(tau) = solve_t0_gap(x0, k0, b) {
            let lhs = k0 * tau.sqrt() * (-tau.ln()).powf(b);
            prop_assert!((lhs - x0).abs() < 1e-9 * x0);
            prop_assert!(tau <= (-2.0 * b).exp());
        }
    }

    #[test]
    fn frames_invert(s0 in 1.0f64..30.0, t_frac in 0.0f64..0.999) {
        for f in [PhysicalFrame::native(s0), PhysicalFrame::normalized(s0)] {
            let t = t_frac * f.blowup_time;
            let s = f.s_of_t(t).unwrap();
            prop_assert!((f.t_of_s(s) - t).abs() <= 1e-12 * f.blowup_time);
        }
    }

    #[test]
    fn line_fit_recovers_lines(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let xs = geomspace(1.0, 100.0, 7);
        let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let f = fit_line(&xs, &ys).unwrap();
        prop_assert!((f.slope - a).abs() < 1e-10 && (f.intercept - b).abs() < 1e-8);
    }
}

#[test]
fn hermite_orthogonality_small_rule() {
    let q = Quadrature::gauss_hermite(32);
    for n in 0..6 {
        for k in 0..6 {
            let v = q.integrate(|y| hermite_h(n, y) * hermite_h(k, y));
            let e = if n == k { hermite_norm_sq(n) } else { 0.0 };
            assert!((v - e).abs() <= 1e-10 * hermite_norm_sq(n).max(1.0));
        }
    }
}

#[test]
fn gamma_window_and_quadrants() {
    let m = p5();
    assert!((choose_gamma(&m, 0.05).unwrap() - 2.45).abs() < 1e-12);
    assert!(choose_gamma(&m, 0.3).is_err());
    assert!(covers_quadrants(&[(1, 1), (-1, -1), (1, -1), (-1, 1)]));
}
