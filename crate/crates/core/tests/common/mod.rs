#![allow(dead_code)]

use bogoliubov::{build_grid, GridScheme, Model, PotentialSpec, State};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MEASURE: f64 = 1.0 / (2.0 * std::f64::consts::PI * std::f64::consts::PI);

pub fn gaussian_model(n: usize, pmax: f64) -> Model {
    let grid = build_grid(n, pmax, GridScheme::Clustered, 1.0).unwrap();
    Model::new(PotentialSpec::gaussian(1.0, 1.0).unwrap(), grid)
}

pub fn reference_model() -> Model {
    gaussian_model(1024, 12.0)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        loop {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (mut q0, mut q1) = (1.0, z);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * z * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (z * q1 - q0) / (z * z - 1.0);
                x[i] = z;
                w[i] = 2.0 / ((1.0 - z * z) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gl_interval(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    x.iter().zip(&w).map(|(x, w)| (0.5 * (a + b) + 0.5 * (b - a) * x, 0.5 * (b - a) * w)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random, strictly interior, non-pure state with smooth decaying profiles.
pub fn random_state(model: &Model, rng: &mut ChaCha8Rng) -> State {
    let amp = rng.random_range(0.2..2.0);
    let width = rng.random_range(0.5..2.0);
    let extra = rng.random_range(0.01..0.3);
    let rho0 = rng.random_range(0.05..1.5);
    let mut gamma = Vec::with_capacity(model.len());
    let mut alpha = Vec::with_capacity(model.len());
    for p in model.grid().nodes() {
        let envelope = (-(p / width).powi(2)).exp();
        let a = -amp * envelope * rng.random_range(0.5..1.0);
        let g = bogoliubov::pure_gamma_of_alpha(&[a])[0] + extra * envelope * rng.random_range(0.5..1.5);
        gamma.push(g);
        alpha.push(a);
    }
    State::new(gamma, alpha, rho0).unwrap()
}
