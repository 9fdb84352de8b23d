mod common;

use bogoliubov::functional::Evaluation;
use bogoliubov::{derivatives, energy, pure_gamma_of_alpha, pure_gradient, LowerBound, State};
use common::*;
use proptest::prelude::*;
use rand::Rng;
use std::f64::consts::PI;

#[test]
fn energy_directional_derivatives_match_central_differences() {
    let model = gaussian_model(256, 10.0);
    let w = model.grid().weights();
    let mut rng = rng(7);
    for _ in 0..20 {
        let s = random_state(&model, &mut rng);
        let mu = rng.random_range(0.2..2.0);
        let dg: Vec<f64> = s.gamma().iter().map(|g| g * rng.random_range(-0.5..0.5)).collect();
        let da: Vec<f64> = s.alpha().iter().map(|a| a * rng.random_range(-0.5..0.5)).collect();
        let dr = rng.random_range(-0.5..0.5);
        let h = 1e-5;
        let shifted = |t: f64| {
            let g = s.gamma().iter().zip(&dg).map(|(g, d)| g + t * d).collect();
            let a = s.alpha().iter().zip(&da).map(|(a, d)| a + t * d).collect();
            State::new(g, a, s.rho0() + t * dr).unwrap()
        };
        let fd = (energy(&shifted(h), &model, mu).unwrap().total - energy(&shifted(-h), &model, mu).unwrap().total)
            / (2.0 * h);
        let d = derivatives(&s, &model, mu).unwrap();
        let analytic: f64 = (0..w.len()).map(|i| w[i] * (d.a[i] * dg[i] + d.b[i] * da[i])).sum::<f64>() + d.d_rho0 * dr;
        let rel = (fd - analytic).abs() / analytic.abs();
        assert!(rel < 1e-6, "fd {fd} analytic {analytic} rel {rel}");
    }
}

#[test]
fn pure_gradient_matches_central_differences() {
    let model = gaussian_model(256, 10.0);
    let w = model.grid().weights();
    let mut rng = rng(11);
    for _ in 0..20 {
        let s = random_state(&model, &mut rng);
        let mu = rng.random_range(0.2..2.0);
        let alpha = s.alpha().to_vec();
        let da: Vec<f64> = alpha.iter().map(|a| (a.abs() + 0.01) * rng.random_range(-1.0..1.0)).collect();
        let dr = rng.random_range(-0.5..0.5);
        let h = 1e-5;
        let f_tilde = |t: f64| {
            let a: Vec<f64> = alpha.iter().zip(&da).map(|(a, d)| a + t * d).collect();
            energy(&State::pure(a, s.rho0() + t * dr).unwrap(), &model, mu).unwrap().total
        };
        let fd = (f_tilde(h) - f_tilde(-h)) / (2.0 * h);
        let (g, d_rho0) = pure_gradient(&alpha, s.rho0(), &model, mu).unwrap();
        let analytic: f64 = (0..w.len()).map(|i| w[i] * g[i] * da[i]).sum::<f64>() + d_rho0 * dr;
        let rel = (fd - analytic).abs() / analytic.abs();
        assert!(rel < 1e-6, "fd {fd} analytic {analytic} rel {rel}");
    }
}

/// Independent evaluation of all six terms for `γ = 1`, `α = −√2` on the unit ball
/// with Gaussian `V̂`, by Gauss–Legendre quadrature in `(r, s, cos θ)`.
fn unit_ball_oracle(mu: f64, rho0: f64) -> f64 {
    let vhat = |p: f64| (-0.5 * p * p).exp();
    let radial = gl_interval(48, 0.0, 1.0);
    let angle = gl_interval(48, -1.0, 1.0);
    let kinetic: f64 = MEASURE * radial.iter().map(|(p, w)| w * p.powi(4)).sum::<f64>();
    let rho_gamma = MEASURE / 3.0;
    let rho = rho0 + rho_gamma;
    let v_int: f64 = MEASURE * radial.iter().map(|(p, w)| w * p * p * vhat(*p)).sum::<f64>();
    let linear = rho0 * v_int * (1.0 - 2.0f64.sqrt());
    let mut pair = 0.0;
    for (r, wr) in &radial {
        for (s, ws) in &radial {
            let avg: f64 =
                0.5 * angle.iter().map(|(t, wt)| wt * vhat((r * r + s * s - 2.0 * r * s * t).max(0.0).sqrt())).sum::<f64>();
            pair += wr * ws * r * r * s * s * avg;
        }
    }
    pair *= MEASURE * MEASURE;
    let quad_gamma = 0.5 * pair;
    let quad_alpha = 0.5 * 2.0 * pair;
    kinetic - mu * rho + 0.5 * rho * rho + linear + quad_gamma + quad_alpha
}

#[test]
fn unit_ball_energy_matches_dense_quadrature_oracle() {
    let oracle = unit_ball_oracle(1.0, 0.2);
    for n in [256, 1024] {
        let model = gaussian_model_unit_ball(n);
        let s = State::new(vec![1.0; n], vec![-(2.0f64.sqrt()); n], 0.2).unwrap();
        let e = energy(&s, &model, 1.0).unwrap();
        let rel = (e.total - oracle).abs() / oracle.abs();
        assert!(rel < 5e-7, "n={n}: {} vs {oracle}, rel {rel}", e.total);
    }
}

fn gaussian_model_unit_ball(n: usize) -> bogoliubov::Model {
    let grid = bogoliubov::build_grid(n, 1.0, bogoliubov::GridScheme::Clustered, 0.5).unwrap();
    bogoliubov::Model::new(bogoliubov::PotentialSpec::gaussian(1.0, 1.0).unwrap(), grid)
}

#[test]
fn densities_on_unit_ball() {
    let model = gaussian_model_unit_ball(256);
    let s = State::new(vec![1.0; 256], vec![0.0; 256], 0.1).unwrap();
    let (rg, r) = bogoliubov::densities(&s, model.grid()).unwrap();
    assert!((rg - 1.0 / (6.0 * PI * PI)).abs() < 1e-12);
    assert!((r - 0.1168869).abs() < 1e-7);
    let (rg, r) = bogoliubov::densities(&State::new(vec![0.0; 256], vec![0.0; 256], 0.3).unwrap(), model.grid()).unwrap();
    assert_eq!((rg, r), (0.0, 0.3));
}

#[test]
fn breakdown_sums_and_signs_on_random_states() {
    let model = gaussian_model(256, 10.0);
    let mut rng = rng(3);
    for _ in 0..20 {
        let s = random_state(&model, &mut rng);
        let e = energy(&s, &model, 1.0).unwrap();
        let parts = e.kinetic + e.chemical + e.hartree + e.linear + e.quad_gamma + e.quad_alpha;
        assert!((parts - e.total).abs() <= 1e-12 * e.total.abs().max(1.0));
        assert!(e.kinetic >= 0.0 && e.hartree >= 0.0 && e.quad_gamma >= 0.0 && e.quad_alpha >= 0.0);
        let lb = LowerBound::new(&model, 1.0);
        let ev = Evaluation::new(&s, &model);
        assert!(e.total >= lb.bound(e.kinetic, s.rho0(), ev.rho_gamma));
    }
}

#[test]
fn pure_state_energy_uses_the_same_path() {
    let model = gaussian_model(128, 8.0);
    let alpha: Vec<f64> = model.grid().nodes().iter().map(|p| -0.7 * (-p * p).exp()).collect();
    let a = energy(&State::pure(alpha.clone(), 0.4).unwrap(), &model, 1.0).unwrap();
    let b = energy(&State::new(pure_gamma_of_alpha(&alpha), alpha, 0.4).unwrap(), &model, 1.0).unwrap();
    assert_eq!(a, b);
}

fn small_model() -> &'static bogoliubov::Model {
    static MODEL: std::sync::OnceLock<bogoliubov::Model> = std::sync::OnceLock::new();
    MODEL.get_or_init(|| gaussian_model(64, 8.0))
}

fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    let n = 64;
    (
        prop::collection::vec(0.0..3.0f64, n),
        prop::collection::vec(-1.0..1.0f64, n),
        0.0..2.0f64,
    )
        .prop_map(|(g, s, r)| {
            let a = g.iter().zip(&s).map(|(g, s)| s * (g * g + g).sqrt()).collect();
            (g, a, r)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn energy_is_convex_at_fixed_rho0(s1 in arb_pair(), s2 in arb_pair(), mu in 0.1..2.0f64) {
        let model = small_model();
        let a = State::new(s1.0, s1.1, s1.2).unwrap();
        let b = State::new(s2.0, s2.1, s1.2).unwrap();
        let ea = energy(&a, model, mu).unwrap().total;
        let eb = energy(&b, model, mu).unwrap().total;
        for t in [0.25, 0.5, 0.75] {
            let m = a.interpolate(&b, t).unwrap();
            let em = energy(&m, model, mu).unwrap().total;
            prop_assert!(em <= t * ea + (1.0 - t) * eb + 1e-10);
        }
    }

    #[test]
    fn lower_bound_holds_for_valid_states(s in arb_pair(), mu in 0.01..3.0f64) {
        let model = small_model();
        let st = State::new(s.0, s.1, s.2).unwrap();
        let e = energy(&st, model, mu).unwrap();
        let ev = Evaluation::new(&st, model);
        let lb = LowerBound::new(model, mu);
        prop_assert!(e.total >= lb.bound(e.kinetic, st.rho0(), ev.rho_gamma));
    }

    #[test]
    fn pure_identity_holds(alpha in prop::collection::vec(-1e6..1e6f64, 1..50)) {
        for (g, a) in pure_gamma_of_alpha(&alpha).iter().zip(&alpha) {
            prop_assert!((a * a - g * g - g).abs() <= 1e-14 * (1.0 + g * g));
        }
    }
}
