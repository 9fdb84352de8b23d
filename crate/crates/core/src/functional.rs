//! The discretized Bogoliubov functional
//!
//! ```text
//! F(γ, α, ρ0) = ∫ p² γ − μ ρ + V̂(0) ρ² / 2 + ρ0 ∫ V̂ (γ + α)
//!             + ½ ∫∫ V̂(p − q) (γ(p) γ(q) + α(p) α(q)),      ρ = ρ0 + ∫ γ
//! ```
//!
//! on the domain `γ >= 0`, `α² <= γ² + γ`, `ρ0 >= 0`, with every `∫ dp`
//! replaced by the grid quadrature.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{build_kernel, ConvolutionKernel, RadialGrid};
use crate::potential::PotentialSpec;

/// Tolerance on `α² <= γ² + γ` below which a violation is projected away.
pub const DOMAIN_TOLERANCE: f64 = 1e-12;

/// Everything that does not depend on the chemical potential: the interaction,
/// the grid, the convolution operator and `V̂` sampled at the nodes.
#[derive(Debug, Clone)]
pub struct Model {
    spec: PotentialSpec,
    grid: RadialGrid,
    kernel: ConvolutionKernel,
    vhat_nodes: Vec<f64>,
}

impl Model {
    pub fn new(spec: PotentialSpec, grid: RadialGrid) -> Self {
        let kernel = build_kernel(&grid, &spec);
        let vhat_nodes = grid.nodes().iter().map(|p| spec.vhat(*p)).collect();
        Self { spec, grid, kernel, vhat_nodes }
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn kernel(&self) -> &ConvolutionKernel {
        &self.kernel
    }

    /// `V̂(p_i)` at every node.
    pub fn vhat_nodes(&self) -> &[f64] {
        &self.vhat_nodes
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// A point of the discretized domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct State {
    gamma: Vec<f64>,
    alpha: Vec<f64>,
    rho0: f64,
}

impl State {
    /// Validates domain membership; `α` violations within [`DOMAIN_TOLERANCE`]
    /// are projected by shrinking `|α|`.
    pub fn new(gamma: Vec<f64>, mut alpha: Vec<f64>, rho0: f64) -> Result<Self> {
        if gamma.len() != alpha.len() {
            return Err(Error::LengthMismatch { expected: gamma.len(), got: alpha.len() });
        }
        if !(rho0.is_finite() && rho0 >= 0.0) {
            return Err(Error::Domain { node: 0, reason: format!("rho0 = {rho0} is not >= 0") });
        }
        for (i, (g, a)) in gamma.iter().zip(alpha.iter_mut()).enumerate() {
            if !(g.is_finite() && *g >= 0.0) {
                return Err(Error::Domain { node: i, reason: format!("gamma = {g} is not >= 0") });
            }
            if !a.is_finite() {
                return Err(Error::Domain { node: i, reason: format!("alpha = {a} is not finite") });
            }
            let cap = g * g + g;
            let excess = *a * *a - cap;
            if excess > 0.0 {
                if excess > DOMAIN_TOLERANCE * cap.max(1.0) {
                    return Err(Error::Domain {
                        node: i,
                        reason: format!("alpha^2 - gamma^2 - gamma = {excess:e} > 0"),
                    });
                }
                *a = a.signum() * cap.sqrt();
            }
            if g + *a < -0.5 - DOMAIN_TOLERANCE {
                return Err(Error::Domain { node: i, reason: "gamma + alpha < -1/2".into() });
            }
        }
        Ok(Self { gamma, alpha, rho0 })
    }

    pub fn vacuum(n: usize) -> Self {
        Self { gamma: vec![0.0; n], alpha: vec![0.0; n], rho0: 0.0 }
    }

    /// The pure state `(γ(α), α, ρ0)`.
    pub fn pure(alpha: Vec<f64>, rho0: f64) -> Result<Self> {
        let gamma = pure_gamma_of_alpha(&alpha);
        Self::new(gamma, alpha, rho0)
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn rho0(&self) -> f64 {
        self.rho0
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn is_vacuum(&self) -> bool {
        self.rho0 == 0.0 && self.gamma.iter().all(|g| *g == 0.0) && self.alpha.iter().all(|a| *a == 0.0)
    }

    /// `t * self + (1 - t) * other` in `(γ, α, ρ0)`; stays in the convex domain.
    pub fn interpolate(&self, other: &State, t: f64) -> Result<State> {
        let mix = |a: &[f64], b: &[f64]| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect()
        };
        State::new(
            mix(&self.gamma, &other.gamma),
            mix(&self.alpha, &other.alpha),
            t * self.rho0 + (1.0 - t) * other.rho0,
        )
    }

    pub(crate) fn from_parts_unchecked(gamma: Vec<f64>, alpha: Vec<f64>, rho0: f64) -> Self {
        Self { gamma, alpha, rho0 }
    }

    pub(crate) fn check_len(&self, model: &Model) -> Result<()> {
        model.grid().check_len(self.len())
    }
}

/// Energy terms, in energy-density units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub chemical: f64,
    pub hartree: f64,
    pub linear: f64,
    pub quad_gamma: f64,
    pub quad_alpha: f64,
    pub total: f64,
}

/// Functional derivatives at a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Derivatives {
    /// `∂F/∂γ` per node.
    pub a: Vec<f64>,
    /// `∂F/∂α` per node.
    pub b: Vec<f64>,
    pub d_rho0: f64,
}

/// Convolutions and integrals shared by the energy and its derivatives.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub conv_gamma: Vec<f64>,
    pub conv_alpha: Vec<f64>,
    pub rho_gamma: f64,
    pub rho: f64,
    /// `∫ V̂ γ`
    pub vhat_gamma: f64,
    /// `∫ V̂ α`
    pub vhat_alpha: f64,
}

impl Evaluation {
    pub fn new(state: &State, model: &Model) -> Self {
        let n = state.len();
        let grid = model.grid();
        let mut conv_gamma = vec![0.0; n];
        let mut conv_alpha = vec![0.0; n];
        model.kernel().apply_into(&state.gamma, &mut conv_gamma);
        model.kernel().apply_into(&state.alpha, &mut conv_alpha);
        let rho_gamma = grid.dot(&state.gamma);
        Self {
            conv_gamma,
            conv_alpha,
            rho_gamma,
            rho: state.rho0 + rho_gamma,
            vhat_gamma: grid.inner(model.vhat_nodes(), &state.gamma),
            vhat_alpha: grid.inner(model.vhat_nodes(), &state.alpha),
        }
    }

    /// `∫ V̂ (γ + α)`
    pub fn vhat_linear(&self) -> f64 {
        self.vhat_gamma + self.vhat_alpha
    }

    pub fn energy(&self, state: &State, model: &Model, mu: f64) -> EnergyBreakdown {
        let grid = model.grid();
        let p = grid.nodes();
        let kinetic = grid.weights().iter().zip(p).zip(&state.gamma).map(|((w, p), g)| w * p * p * g).sum();
        let chemical = -mu * self.rho;
        let hartree = 0.5 * model.spec().vhat0() * self.rho * self.rho;
        let linear = state.rho0 * self.vhat_linear();
        let quad_gamma = 0.5 * grid.inner(&state.gamma, &self.conv_gamma);
        let quad_alpha = 0.5 * grid.inner(&state.alpha, &self.conv_alpha);
        let total = kinetic + chemical + hartree + linear + quad_gamma + quad_alpha;
        EnergyBreakdown { kinetic, chemical, hartree, linear, quad_gamma, quad_alpha, total }
    }

    pub fn derivatives(&self, state: &State, model: &Model, mu: f64) -> Derivatives {
        let vhat0 = model.spec().vhat0();
        let shift = vhat0 * self.rho - mu;
        let v = model.vhat_nodes();
        let a = model
            .grid()
            .nodes()
            .iter()
            .zip(v)
            .zip(&self.conv_gamma)
            .map(|((p, v), c)| p * p + shift + state.rho0 * v + c)
            .collect();
        let b = v.iter().zip(&self.conv_alpha).map(|(v, c)| state.rho0 * v + c).collect();
        Derivatives { a, b, d_rho0: shift + self.vhat_linear() }
    }
}

/// `(ρ_γ, ρ)`.
pub fn densities(state: &State, grid: &RadialGrid) -> Result<(f64, f64)> {
    let rho_gamma = grid.integrate(state.gamma())?;
    Ok((rho_gamma, state.rho0() + rho_gamma))
}

pub fn energy(state: &State, model: &Model, mu: f64) -> Result<EnergyBreakdown> {
    state.check_len(model)?;
    Ok(Evaluation::new(state, model).energy(state, model, mu))
}

pub fn derivatives(state: &State, model: &Model, mu: f64) -> Result<Derivatives> {
    state.check_len(model)?;
    Ok(Evaluation::new(state, model).derivatives(state, model, mu))
}

/// `γ(α) = -1/2 + sqrt(1/4 + α²)`, evaluated without cancellation.
pub fn pure_gamma(alpha: f64) -> f64 {
    alpha * alpha / (0.5 + (0.25 + alpha * alpha).sqrt())
}

pub fn pure_gamma_of_alpha(alpha: &[f64]) -> Vec<f64> {
    alpha.iter().map(|a| pure_gamma(*a)).collect()
}

/// `dγ/dα = α / sqrt(1/4 + α²)`
pub fn pure_slope(alpha: f64) -> f64 {
    alpha / (0.25 + alpha * alpha).sqrt()
}

/// Gradient of `F̃(α, ρ0) = F(γ(α), α, ρ0)`: `(α / sqrt(1/4 + α²)) A + B` per node,
/// and `∂F/∂ρ0`.
pub fn pure_gradient(alpha: &[f64], rho0: f64, model: &Model, mu: f64) -> Result<(Vec<f64>, f64)> {
    let state = State::pure(alpha.to_vec(), rho0)?;
    state.check_len(model)?;
    let d = derivatives(&state, model, mu)?;
    Ok((chain_rule(alpha, &d), d.d_rho0))
}

pub(crate) fn chain_rule(alpha: &[f64], d: &Derivatives) -> Vec<f64> {
    alpha.iter().zip(&d.a).zip(&d.b).map(|((al, a), b)| pure_slope(*al) * a + b).collect()
}

/// Explicit constants of the coercivity bound
/// `F >= ∫ p² γ + ε (ρ0² + ρ_γ²) − C`.
///
/// With `|α| <= γ + sqrt(γ)`, Cauchy–Schwarz and `ρ0 sqrt(ρ_γ) <= (K ρ_γ + ρ0² / K) / 2`,
/// the condensate-dependent terms are bounded below by
/// `(V̂(0)/2 − ||V̂||/(2K)) ρ0² + V̂(0)/2 ρ_γ² − μ ρ0 − (μ + K ||V̂|| / 2) ρ_γ`.
/// `K = 4 ||V̂|| / V̂(0)` leaves `3 V̂(0) / 8` in front of `ρ0²`, so `ε = V̂(0)/4`
/// and `C` is the maximum of the remaining concave quadratic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LowerBound {
    pub k: f64,
    pub epsilon: f64,
    pub c: f64,
    pub l2norm: f64,
}

impl LowerBound {
    pub fn new(model: &Model, mu: f64) -> Self {
        let vhat0 = model.spec().vhat0();
        let v = model.vhat_nodes();
        // the discrete Cauchy–Schwarz step needs the grid norm
        let l2norm = model.spec().l2norm().max(model.grid().inner(v, v).sqrt());
        let k = 4.0 * l2norm / vhat0;
        let epsilon = 0.25 * vhat0;
        let rho0_coef = 0.5 * vhat0 - 0.5 * l2norm / k - epsilon;
        let gamma_coef = 0.5 * vhat0 - epsilon;
        let gamma_lin = mu + 0.5 * k * l2norm;
        let peak = |b: f64, a: f64| if b > 0.0 { b * b / (4.0 * a) } else { 0.0 };
        let c = peak(mu, rho0_coef) + peak(gamma_lin, gamma_coef);
        Self { k, epsilon, c, l2norm }
    }

    /// Right-hand side `kinetic + ε (ρ0² + ρ_γ²) − C`.
    pub fn bound(&self, kinetic: f64, rho0: f64, rho_gamma: f64) -> f64 {
        kinetic + self.epsilon * (rho0 * rho0 + rho_gamma * rho_gamma) - self.c
    }
}
