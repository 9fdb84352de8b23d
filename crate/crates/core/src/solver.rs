//! Minimization of the discretized functional.
//!
//! Minimizers for `μ > 0` are pure, so the solvers work with `(α, ρ0)` and
//! `γ = γ(α)`. The main engine is the self-consistent fixed point of the
//! stationarity system
//!
//! ```text
//! α = −B / (2 sqrt(A² − B²)),   ρ0 = max(0, (μ − ∫ V̂ (γ + α)) / V̂(0) − ρ_γ),
//! ```
//!
//! damped and guarded by an energy check. A diagonally scaled projected
//! gradient step with Armijo backtracking is the fallback whenever a fixed-point
//! step is not defined (`A <= 0` somewhere) or fails to lower the energy.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::functional::{
    chain_rule, pure_gamma, pure_slope, Derivatives, EnergyBreakdown, Evaluation, Model, State,
};
use crate::RADIAL_MEASURE;

/// Backtracking parameters of the projected-gradient fallback.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepControl {
    pub initial: f64,
    pub backtrack: f64,
    pub armijo: f64,
    pub min_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        Self { initial: 1.0, backtrack: 0.5, armijo: 1e-4, min_step: 1e-14 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Vacuum,
    /// Condensate plus a saturated pair cloud of occupation `gamma0` inside `|p| <= eps_ball`.
    Trial { gamma0: f64, eps_ball: f64 },
    /// Start from a given state (read from file, or warm start).
    State(State),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    /// Damped fixed point with gradient fallback.
    FixedPoint,
    /// Projected gradient steps only.
    Gradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Pointwise cap `γ <= kappa`; `None` is the unrestricted problem.
    pub kappa: Option<f64>,
    /// Fixed-point mixing `η` in `(0, 1]`.
    pub damping: f64,
    pub step: StepControl,
    /// Bound on the max-norm of the projected pure gradient and on `|∂F/∂ρ0|`.
    pub tol_grad: f64,
    /// Bound on the relative energy change per iteration.
    pub tol_energy: f64,
    pub max_iter: usize,
    pub init: Init,
    pub engine: Engine,
    /// `|B / A|` is capped at `1 − clamp_delta`.
    pub clamp_delta: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            kappa: None,
            damping: 1.0,
            step: StepControl::default(),
            tol_grad: 1e-10,
            tol_energy: 1e-13,
            max_iter: 5000,
            init: Init::Vacuum,
            engine: Engine::FixedPoint,
            clamp_delta: 1e-8,
        }
    }
}

/// Consecutive iterations that must satisfy both tolerances.
const CONVERGED_STREAK: usize = 3;
/// Damping halvings tried before switching to a gradient step.
const MAX_HALVINGS: usize = 4;

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(invalid(format!("damping must lie in (0, 1], got {}", self.damping)));
        }
        if !(self.tol_grad > 0.0 && self.tol_energy > 0.0) {
            return Err(invalid("tolerances must be positive"));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0) {
                return Err(invalid(format!("kappa must be positive, got {k}")));
            }
        }
        let s = &self.step;
        if !(s.initial > 0.0 && s.backtrack > 0.0 && s.backtrack < 1.0 && s.armijo > 0.0 && s.armijo < 1.0) {
            return Err(invalid("step control needs initial > 0 and backtrack, armijo in (0, 1)"));
        }
        if !(self.clamp_delta > 0.0 && self.clamp_delta < 1.0) {
            return Err(invalid("clamp_delta must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Largest `|α|` allowed by the cap, `sqrt(κ² + κ)`.
    fn alpha_cap(&self) -> f64 {
        self.kappa.map_or(f64::INFINITY, |k| (k * k + k).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Residuals {
    /// Max-norm of the projected pure gradient `(α / sqrt(1/4 + α²)) A + B`.
    pub max_grad: f64,
    /// `|∂F/∂ρ0|`, or 0 when `ρ0 = 0` and the derivative pushes outward.
    pub d_rho0: f64,
    /// `max |α² − γ² − γ| / (1 + γ²)`.
    pub purity: f64,
    pub domain_violations: usize,
}

impl Residuals {
    fn combined(&self) -> f64 {
        self.max_grad.max(self.d_rho0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub energy: f64,
    pub residual: f64,
    pub step: &'static str,
    /// Damping for fixed-point steps, step length for gradient steps.
    pub size: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    #[serde(skip)]
    pub state: State,
    pub mu: f64,
    pub kappa: Option<f64>,
    pub rho0: f64,
    pub rho_gamma: f64,
    pub energy: EnergyBreakdown,
    pub residuals: Residuals,
    pub iterations: usize,
    pub converged: bool,
    pub status: String,
    /// Nodes where `γ` sits on the cap.
    pub active_clamp: usize,
    /// Multiplier of the `ρ_γ = λ` constraint for fixed-density solves.
    pub multiplier: Option<f64>,
    pub trace: Vec<TraceEntry>,
}

impl SolverReport {
    pub fn condensate_fraction(&self) -> Option<f64> {
        let rho = self.rho0 + self.rho_gamma;
        (rho > 0.0).then(|| self.rho0 / rho)
    }
}

/// Trial state: `γ = γ0`, `α = −sqrt(γ0² + γ0)` on nodes with `p <= eps_ball`, and
/// `ρ0 = μ / V̂(0) − γ0 |B(eps_ball)|` with the analytic ball volume.
pub fn init_trial(model: &Model, mu: f64, gamma0: f64, eps_ball: f64) -> Result<State> {
    if !(gamma0 > 0.0 && eps_ball > 0.0) {
        return Err(invalid("trial state needs gamma0 > 0 and eps_ball > 0"));
    }
    let volume = RADIAL_MEASURE * eps_ball.powi(3) / 3.0;
    let rho0 = mu / model.spec().vhat0() - gamma0 * volume;
    if !(rho0 > 0.0) {
        return Err(invalid(format!(
            "trial condensate density {rho0:e} <= 0; use a smaller eps_ball or gamma0"
        )));
    }
    let pair = -(gamma0 * gamma0 + gamma0).sqrt();
    let inside = |p: &f64| *p <= eps_ball;
    let gamma = model.grid().nodes().iter().map(|p| if inside(p) { gamma0 } else { 0.0 }).collect();
    let alpha = model.grid().nodes().iter().map(|p| if inside(p) { pair } else { 0.0 }).collect();
    State::new(gamma, alpha, rho0)
}

/// Solver-internal snapshot: a pure state together with its evaluation.
struct Point {
    state: State,
    eval: Evaluation,
    a: Vec<f64>,
    b: Vec<f64>,
    d_rho0: f64,
}

impl Point {
    fn new(state: State, model: &Model, mu: f64) -> Self {
        let eval = Evaluation::new(&state, model);
        let d = eval.derivatives(&state, model, mu);
        Self { state, eval, a: d.a, b: d.b, d_rho0: d.d_rho0 }
    }

    fn gradient(&self) -> Vec<f64> {
        self.state
            .alpha()
            .iter()
            .zip(&self.a)
            .zip(&self.b)
            .map(|((al, a), b)| pure_slope(*al) * a + b)
            .collect()
    }

    fn residuals(&self, cap: f64) -> Residuals {
        let g = self.gradient();
        let mut max_grad = 0.0f64;
        for (al, gi) in self.state.alpha().iter().zip(&g) {
            // at the cap, a gradient asking for larger |α| is not a residual
            let blocked = al.abs() >= cap * (1.0 - 1e-12) && al.signum() * gi < 0.0;
            if !blocked {
                max_grad = max_grad.max(gi.abs());
            }
        }
        let d_rho0 = if self.state.rho0() == 0.0 && self.d_rho0 >= 0.0 { 0.0 } else { self.d_rho0.abs() };
        purity_and_domain(&self.state, Residuals { max_grad, d_rho0, purity: 0.0, domain_violations: 0 })
    }
}

fn purity_and_domain(state: &State, mut r: Residuals) -> Residuals {
    for (g, a) in state.gamma().iter().zip(state.alpha()) {
        let gap = a * a - g * g - g;
        r.purity = r.purity.max(gap.abs() / (1.0 + g * g));
        if *g < 0.0 || gap > 1e-12 * (g * g + g).max(1.0) {
            r.domain_violations += 1;
        }
    }
    r
}

/// `F(new) − F(old)` assembled from differences, so that tiny steps are not lost
/// to cancellation in the totals.
fn energy_change(old: &Point, new_state: &State, new_eval: &Evaluation, model: &Model, mu: f64) -> f64 {
    let grid = model.grid();
    let w = grid.weights();
    let p = grid.nodes();
    let v = model.vhat_nodes();
    let (og, oa) = (old.state.gamma(), old.state.alpha());
    let (ng, na) = (new_state.gamma(), new_state.alpha());
    let mut kinetic = 0.0;
    let mut d_rho_gamma = 0.0;
    let mut d_linear = 0.0;
    let mut quad = 0.0;
    for i in 0..w.len() {
        let dg = ng[i] - og[i];
        let da = na[i] - oa[i];
        kinetic += w[i] * p[i] * p[i] * dg;
        d_rho_gamma += w[i] * dg;
        d_linear += w[i] * v[i] * (dg + da);
        quad += w[i] * (dg * (new_eval.conv_gamma[i] + old.eval.conv_gamma[i])
            + da * (new_eval.conv_alpha[i] + old.eval.conv_alpha[i]));
    }
    let d_rho0 = new_state.rho0() - old.state.rho0();
    let d_rho = d_rho0 + d_rho_gamma;
    let rho_sum = new_eval.rho + old.eval.rho;
    kinetic - mu * d_rho
        + 0.5 * model.spec().vhat0() * d_rho * rho_sum
        + d_rho0 * new_eval.vhat_linear()
        + old.state.rho0() * d_linear
        + 0.5 * quad
}

/// Target `α*` solving `(α / sqrt(1/4 + α²)) A + B = 0`, i.e. `−B / (2 sqrt(A² − B²))`,
/// with `|B| / A` capped below 1 and `|α*|` capped at `cap`.
fn stationary_alpha(a: f64, b: f64, clamp_delta: f64, cap: f64) -> f64 {
    let mag = b.abs();
    let gap = (a - mag).max(clamp_delta * a);
    let alpha = mag / (2.0 * (gap * (a + mag)).sqrt());
    -b.signum() * alpha.min(cap)
}

/// `ρ0` solving `∂F/∂ρ0 = 0`, projected onto `ρ0 >= 0`.
fn optimal_rho0(alpha: &[f64], gamma: &[f64], model: &Model, mu: f64) -> f64 {
    let grid = model.grid();
    let v = model.vhat_nodes();
    let mut rho_gamma = 0.0;
    let mut linear = 0.0;
    for ((w, v), (g, a)) in grid.weights().iter().zip(v).zip(gamma.iter().zip(alpha)) {
        rho_gamma += w * g;
        linear += w * v * (g + a);
    }
    ((mu - linear) / model.spec().vhat0() - rho_gamma).max(0.0)
}

fn fixed_point_propose(point: &Point, model: &Model, mu: f64, config: &SolverConfig, eta: f64) -> Result<State> {
    if let Some((node, value)) = point.a.iter().enumerate().find(|(_, a)| !(**a > 0.0)) {
        return Err(Error::NonPositiveA { node, value: *value });
    }
    let cap = config.alpha_cap();
    let alpha: Vec<f64> = point
        .state
        .alpha()
        .iter()
        .zip(point.a.iter().zip(&point.b))
        .map(|(al, (a, b))| {
            let target = stationary_alpha(*a, *b, config.clamp_delta, cap);
            ((1.0 - eta) * al + eta * target).clamp(-cap, cap)
        })
        .collect();
    let gamma: Vec<f64> = alpha.iter().map(|a| pure_gamma(*a)).collect();
    let rho0 = optimal_rho0(&alpha, &gamma, model, mu);
    Ok(State::from_parts_unchecked(gamma, alpha, rho0))
}

/// One damped fixed-point update with mixing `config.damping`.
///
/// Fails with [`Error::NonPositiveA`] when `∂F/∂γ <= 0` at some node.
pub fn fixed_point_step(state: &State, model: &Model, mu: f64, config: &SolverConfig) -> Result<State> {
    config.validate()?;
    state.check_len(model)?;
    let point = Point::new(State::pure(state.alpha().to_vec(), state.rho0())?, model, mu);
    fixed_point_propose(&point, model, mu, config, config.damping)
}

/// Diagonal curvature of `F̃` in `α_i`, used to scale the gradient step.
fn alpha_curvature(alpha: f64, a: f64, p: f64) -> f64 {
    let floor = 0.1 * (1.0 + p * p);
    a.max(floor) * 0.25 / (0.25 + alpha * alpha).powf(1.5)
}

/// Armijo-backtracked projected step from a point of energy `energy`. Returns the
/// accepted state, its evaluation, the energy change and the step length.
fn gradient_propose(
    point: &Point,
    energy: f64,
    model: &Model,
    mu: f64,
    config: &SolverConfig,
) -> Result<(State, Evaluation, f64, f64)> {
    let cap = config.alpha_cap();
    let g = point.gradient();
    let p = model.grid().nodes();
    let w = model.grid().weights();
    let alpha0 = point.state.alpha();
    let dir: Vec<f64> = (0..g.len()).map(|i| -g[i] / alpha_curvature(alpha0[i], point.a[i], p[i])).collect();
    let dir_rho0 = -point.d_rho0 / model.spec().vhat0();
    let mut s = config.step.initial;
    while s >= config.step.min_step {
        let alpha: Vec<f64> = alpha0.iter().zip(&dir).map(|(a, d)| (a + s * d).clamp(-cap, cap)).collect();
        let rho0 = (point.state.rho0() + s * dir_rho0).max(0.0);
        let slope: f64 = (0..g.len()).map(|i| w[i] * g[i] * (alpha[i] - alpha0[i])).sum::<f64>()
            + point.d_rho0 * (rho0 - point.state.rho0());
        let gamma = alpha.iter().map(|a| pure_gamma(*a)).collect();
        let state = State::from_parts_unchecked(gamma, alpha, rho0);
        let eval = Evaluation::new(&state, model);
        let de = energy_change(point, &state, &eval, model, mu);
        if energy + de <= energy + config.step.armijo * slope {
            return Ok((state, eval, de, s));
        }
        s *= config.step.backtrack;
    }
    Err(Error::Stagnation { step: config.step.min_step })
}

/// One projected gradient step on `(α, ρ0)`; energy never increases.
pub fn gradient_step(state: &State, model: &Model, mu: f64, config: &SolverConfig) -> Result<State> {
    config.validate()?;
    state.check_len(model)?;
    let point = Point::new(State::pure(state.alpha().to_vec(), state.rho0())?, model, mu);
    let energy = point.eval.energy(&point.state, model, mu).total;
    gradient_propose(&point, energy, model, mu, config).map(|(s, ..)| s)
}

fn initial_state(model: &Model, mu: f64, config: &SolverConfig) -> Result<State> {
    let n = model.len();
    let state = match &config.init {
        Init::Vacuum => State::vacuum(n),
        Init::Trial { gamma0, eps_ball } => init_trial(model, mu, *gamma0, *eps_ball)?,
        Init::State(s) => {
            s.check_len(model)?;
            s.clone()
        }
    };
    // solvers work on pure states inside the cap
    let cap = config.alpha_cap();
    let alpha = state.alpha().iter().map(|a| a.clamp(-cap, cap)).collect();
    State::pure(alpha, state.rho0())
}

fn finish(point: Point, model: &Model, mu: f64, config: &SolverConfig, run: Run) -> SolverReport {
    let residuals = run.residuals.unwrap_or_else(|| point.residuals(config.alpha_cap()));
    let energy = point.eval.energy(&point.state, model, mu);
    let active_clamp = match config.kappa {
        Some(k) => point.state.gamma().iter().filter(|g| **g >= k * (1.0 - 1e-12)).count(),
        None => 0,
    };
    SolverReport {
        mu,
        kappa: config.kappa,
        rho0: point.state.rho0(),
        rho_gamma: point.eval.rho_gamma,
        energy,
        residuals,
        iterations: run.iterations,
        converged: run.converged,
        status: run.status,
        active_clamp,
        multiplier: run.multiplier,
        trace: run.trace,
        state: point.state,
    }
}

struct Run {
    iterations: usize,
    converged: bool,
    status: String,
    trace: Vec<TraceEntry>,
    residuals: Option<Residuals>,
    multiplier: Option<f64>,
}

fn vacuum_report(model: &Model, mu: f64, config: &SolverConfig) -> SolverReport {
    let point = Point::new(State::vacuum(model.len()), model, mu);
    let run = Run {
        iterations: 0,
        converged: true,
        status: "vacuum is the minimizer for mu <= 0".into(),
        trace: Vec::new(),
        residuals: Some(purity_and_domain(
            &point.state,
            Residuals { max_grad: 0.0, d_rho0: 0.0, purity: 0.0, domain_violations: 0 },
        )),
        multiplier: None,
    };
    finish(point, model, mu, config, run)
}

/// Minimizes the functional (over `D`, or over `D_κ` when `config.kappa` is set).
///
/// For `μ <= 0` the vacuum is returned immediately. Otherwise fixed-point steps
/// are tried at the configured damping, halved up to four times when the energy
/// would rise, and replaced by a projected gradient step when they are undefined
/// or keep failing. Convergence requires the residual and the relative energy
/// change to stay below tolerance for three consecutive iterations.
pub fn minimize(model: &Model, mu: f64, config: &SolverConfig) -> Result<SolverReport> {
    config.validate()?;
    if mu <= 0.0 {
        return Ok(vacuum_report(model, mu, config));
    }
    let cap = config.alpha_cap();
    let mut point = Point::new(initial_state(model, mu, config)?, model, mu);
    let mut energy = point.eval.energy(&point.state, model, mu).total;
    let mut trace = Vec::new();
    let mut streak = 0;
    let mut converged = false;
    let mut status = String::from("maximum number of iterations reached");
    let mut iterations = 0;

    for iter in 1..=config.max_iter {
        let mut accepted: Option<(State, Evaluation, f64, &'static str, f64)> = None;
        if config.engine == Engine::FixedPoint {
            let mut eta = config.damping;
            for _ in 0..=MAX_HALVINGS {
                let Ok(candidate) = fixed_point_propose(&point, model, mu, config, eta) else { break };
                let eval = Evaluation::new(&candidate, model);
                let de = energy_change(&point, &candidate, &eval, model, mu);
                // changes below the resolution of the stored energy count as no change
                if energy + de <= energy {
                    accepted = Some((candidate, eval, de, "fixed-point", eta));
                    break;
                }
                eta *= 0.5;
            }
        }
        if accepted.is_none() {
            match gradient_propose(&point, energy, model, mu, config) {
                Ok((state, eval, de, s)) if state != point.state => {
                    accepted = Some((state, eval, de, "gradient", s));
                }
                _ => {
                    let r = point.residuals(cap);
                    converged = r.combined() < config.tol_grad;
                    status = if converged {
                        "converged (no further descent possible)".into()
                    } else {
                        "stagnated: no descent step found".into()
                    };
                    break;
                }
            }
        }
        let (state, eval, de, kind, size) = accepted.expect("step accepted");
        let d = eval.derivatives(&state, model, mu);
        point = Point { state, eval, a: d.a, b: d.b, d_rho0: d.d_rho0 };
        iterations = iter;
        energy += de;
        let residual = point.residuals(cap).combined();
        trace.push(TraceEntry { iteration: iter, energy, residual, step: kind, size });
        if residual < config.tol_grad && de.abs() < config.tol_energy * energy.abs().max(1.0) {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak >= CONVERGED_STREAK {
            converged = true;
            status = "converged".into();
            break;
        }
    }
    let run = Run { iterations, converged, status, trace, residuals: None, multiplier: None };
    Ok(finish(point, model, mu, config, run))
}

/// [`minimize`] on `D_κ = { γ <= kappa }`.
pub fn minimize_restricted(kappa: f64, model: &Model, mu: f64, config: &SolverConfig) -> Result<SolverReport> {
    let mut config = config.clone();
    config.kappa = Some(kappa);
    minimize(model, mu, &config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KappaSweep {
    pub kappas: Vec<f64>,
    pub reports: Vec<SolverReport>,
    /// Energies non-increasing in κ (up to `10 tol_energy` relative).
    pub monotone: bool,
    /// First index from which the cap is inactive and successive energy changes
    /// all stay below the tolerance.
    pub stabilization: Option<usize>,
    pub all_converged: bool,
}

impl KappaSweep {
    pub fn energies(&self) -> Vec<f64> {
        self.reports.iter().map(|r| r.energy.total).collect()
    }

    pub fn stabilized_kappa(&self) -> Option<f64> {
        self.stabilization.map(|i| self.kappas[i])
    }
}

/// Restricted minimizations over ascending `kappas`, each warm-started from the
/// previous minimizer (which is feasible for the larger cap).
pub fn kappa_sweep(
    kappas: &[f64],
    model: &Model,
    mu: f64,
    config: &SolverConfig,
    stabilization_tol: f64,
) -> Result<KappaSweep> {
    if kappas.is_empty() {
        return Err(invalid("kappa list is empty"));
    }
    if kappas.iter().any(|k| !(*k > 0.0)) || kappas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("kappas must be positive and strictly ascending"));
    }
    let mut reports: Vec<SolverReport> = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let mut cfg = config.clone();
        if let Some(prev) = reports.last() {
            if prev.converged {
                cfg.init = Init::State(prev.state.clone());
            }
        }
        reports.push(minimize_restricted(kappa, model, mu, &cfg)?);
    }
    let e: Vec<f64> = reports.iter().map(|r| r.energy.total).collect();
    let slack = |x: f64| 10.0 * config.tol_energy * x.abs().max(1.0);
    let monotone = e.windows(2).all(|w| w[1] <= w[0] + slack(w[0]));
    let stable_from = |k: usize| {
        (k..e.len()).all(|j| reports[j].active_clamp == 0)
            && (k..e.len() - 1).all(|j| (e[j + 1] - e[j]).abs() < stabilization_tol)
    };
    let stabilization = (0..e.len().saturating_sub(1)).find(|&k| stable_from(k));
    let all_converged = reports.iter().all(|r| r.converged);
    Ok(KappaSweep { kappas: kappas.to_vec(), reports, monotone, stabilization, all_converged })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MuRow {
    pub mu: f64,
    pub rho0: f64,
    pub rho_gamma: f64,
    pub rho: f64,
    pub energy: f64,
    pub condensate_fraction: Option<f64>,
    pub converged: bool,
    #[serde(skip)]
    pub state: State,
}

/// One minimization per `μ`, in input order, each warm-started from the previous
/// converged `μ > 0` minimizer.
pub fn mu_sweep(mus: &[f64], model: &Model, config: &SolverConfig) -> Result<Vec<MuRow>> {
    let mut rows = Vec::with_capacity(mus.len());
    let mut warm: Option<State> = None;
    for &mu in mus {
        let mut cfg = config.clone();
        if let Some(s) = &warm {
            cfg.init = Init::State(s.clone());
        }
        let report = minimize(model, mu, &cfg)?;
        if mu > 0.0 && report.converged {
            warm = Some(report.state.clone());
        }
        rows.push(MuRow {
            mu,
            rho0: report.rho0,
            rho_gamma: report.rho_gamma,
            rho: report.rho0 + report.rho_gamma,
            energy: report.energy.total,
            condensate_fraction: report.condensate_fraction(),
            converged: report.converged,
            state: report.state,
        });
    }
    Ok(rows)
}

/// `f(λ, ρ0)`: minimizes over `(γ, α)` at fixed `ρ0` and fixed `ρ_γ = λ`.
///
/// The mass constraint enters through a multiplier `ν` shifting `A`; at every
/// iteration `ν` is chosen so that the updated `γ(α*)` carries mass exactly `λ`.
pub fn minimize_fixed_density(
    lambda: f64,
    rho0: f64,
    model: &Model,
    mu: f64,
    config: &SolverConfig,
) -> Result<SolverReport> {
    config.validate()?;
    if !(lambda >= 0.0 && lambda.is_finite()) || !(rho0 >= 0.0 && rho0.is_finite()) {
        return Err(invalid(format!("lambda and rho0 must be >= 0, got {lambda}, {rho0}")));
    }
    let n = model.len();
    let cap = config.alpha_cap();
    if lambda == 0.0 {
        let state = State::new(vec![0.0; n], vec![0.0; n], rho0)?;
        let point = Point::new(state, model, mu);
        let residuals = purity_and_domain(
            &point.state,
            Residuals { max_grad: 0.0, d_rho0: 0.0, purity: 0.0, domain_violations: 0 },
        );
        let run = Run {
            iterations: 0,
            converged: true,
            status: "lambda = 0 fixes gamma = alpha = 0".into(),
            trace: Vec::new(),
            residuals: Some(residuals),
            multiplier: None,
        };
        return Ok(finish(point, model, mu, config, run));
    }

    let start = match &config.init {
        Init::State(s) => {
            s.check_len(model)?;
            s.alpha().iter().map(|a| a.clamp(-cap, cap)).collect()
        }
        // a small pairing seed keeps B away from zero when rho0 = 0
        _ => vec![-1e-3; n],
    };
    let mut point = Point::new(State::pure(start, rho0)?, model, mu);
    let mut energy = point.eval.energy(&point.state, model, mu).total;
    let mut trace = Vec::new();
    let mut streak = 0;
    let mut converged = false;
    let mut status = String::from("maximum number of iterations reached");
    let mut iterations = 0;
    let mut multiplier = 0.0;
    let mut residual = f64::INFINITY;

    for iter in 1..=config.max_iter {
        let (nu, alpha) = match multiplier_update(&point.a, &point.b, lambda, model, cap) {
            Ok(update) => update,
            Err(e) => {
                status = format!("multiplier search failed: {e}");
                break;
            }
        };
        // residual of the Lagrangian at the current point, before the update
        residual = lagrangian_residual(&point, nu, cap);
        let gamma: Vec<f64> = alpha.iter().map(|a| pure_gamma(*a)).collect();
        let state = State::from_parts_unchecked(gamma, alpha, rho0);
        let eval = Evaluation::new(&state, model);
        let de = energy_change(&point, &state, &eval, model, mu);
        let d = eval.derivatives(&state, model, mu);
        point = Point { state, eval, a: d.a, b: d.b, d_rho0: d.d_rho0 };
        multiplier = nu;
        iterations = iter;
        energy += de;
        trace.push(TraceEntry { iteration: iter, energy, residual, step: "fixed-point", size: 1.0 });
        if residual < config.tol_grad && de.abs() < config.tol_energy * energy.abs().max(1.0) {
            streak += 1;
        } else {
            streak = 0;
        }
        if streak >= CONVERGED_STREAK {
            converged = true;
            status = "converged".into();
            break;
        }
    }
    let mut residuals = point.residuals(cap);
    residuals.max_grad = residual;
    residuals.d_rho0 = 0.0;
    let run = Run { iterations, converged, status, trace, residuals: Some(residuals), multiplier: Some(multiplier) };
    Ok(finish(point, model, mu, config, run))
}

fn lagrangian_residual(point: &Point, nu: f64, cap: f64) -> f64 {
    let shifted = Derivatives { a: point.a.iter().map(|a| a + nu).collect(), b: point.b.clone(), d_rho0: 0.0 };
    let g = chain_rule(point.state.alpha(), &shifted);
    point
        .state
        .alpha()
        .iter()
        .zip(&g)
        .filter(|(al, gi)| !(al.abs() >= cap * (1.0 - 1e-12) && al.signum() * **gi < 0.0))
        .fold(0.0f64, |m, (_, gi)| m.max(gi.abs()))
}


/// Gap floor `|B| / (A + ν) <= 1 − δ` used by the fixed-density update.
const FIXED_DENSITY_DELTA: f64 = f64::EPSILON;

/// Chooses `ν` with `∫ γ(α*(A + ν, B)) = λ` by bisection (the mass decreases in `ν`)
/// and returns `ν` with the updated `α`.
///
/// `ν` is bounded below by `max(|B| − A)`, where the critical node `c` reaches
/// `A + ν = |B|`. There the pure-state energy density is flat along `γ`, and
/// whatever mass the other nodes cannot carry is placed on `c`.
fn multiplier_update(a: &[f64], b: &[f64], lambda: f64, model: &Model, cap: f64) -> Result<(f64, Vec<f64>)> {
    let w = model.grid().weights();
    let alpha_at = |nu: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(a, b)| stationary_alpha(a + nu, *b, FIXED_DENSITY_DELTA, cap)).collect()
    };
    let mass = |alpha: &[f64]| -> f64 { alpha.iter().zip(w).map(|(al, w)| w * pure_gamma(*al)).sum() };
    let (critical, floor) = a
        .iter()
        .zip(b)
        .map(|(a, b)| b.abs() - a)
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    let nu = if mass(&alpha_at(floor)) <= lambda {
        floor
    } else {
        let mut lo = floor;
        let mut step = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        let mut hi = floor + step;
        while mass(&alpha_at(hi)) > lambda {
            lo = hi;
            step *= 2.0;
            hi = floor + step;
            if !hi.is_finite() {
                return Err(invalid("multiplier bracket diverged"));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mass(&alpha_at(mid)) > lambda {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let mut alpha = alpha_at(nu);
    let deficit = lambda - mass(&alpha);
    // rounding-level deficits are left alone so the pure stationarity stays exact
    if deficit > 1e-12 * lambda {
        let g = pure_gamma(alpha[critical]) + deficit / w[critical];
        let g = if cap.is_finite() { g.min(cap * cap / (0.5 + (0.25 + cap * cap).sqrt())) } else { g };
        alpha[critical] = -b[critical].signum() * (g * g + g).sqrt();
    }
    Ok((nu, alpha))
}

/// Runs independent fixed-density solves for every `(λ, ρ0)` pair, in order.
pub fn fixed_density_grid(
    points: &[(f64, f64)],
    model: &Model,
    mu: f64,
    config: &SolverConfig,
) -> Result<Vec<SolverReport>> {
    points
        .par_iter()
        .map(|(lambda, rho0)| minimize_fixed_density(*lambda, *rho0, model, mu, config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridScheme};
    use crate::potential::PotentialSpec;

    fn small_model() -> Model {
        let grid = build_grid(128, 10.0, GridScheme::Clustered, 1.0).unwrap();
        Model::new(PotentialSpec::gaussian(1.0, 1.0).unwrap(), grid)
    }

    #[test]
    fn stationary_alpha_inversion() {
        let a = stationary_alpha(2.0, 1.0, 1e-8, f64::INFINITY);
        assert!((a + 1.0 / (2.0 * 3.0f64.sqrt())).abs() < 1e-15);
        assert_eq!(stationary_alpha(3.0, 0.0, 1e-8, f64::INFINITY), 0.0);
        // saturation
        let big = stationary_alpha(1.0, 1.0, 1e-8, f64::INFINITY);
        assert!(big < -1000.0 && big.is_finite());
        assert_eq!(stationary_alpha(1.0, 1.0, 1e-8, 2.0), -2.0);
    }

    #[test]
    fn trial_state_density() {
        let grid = build_grid(1024, 12.0, GridScheme::Clustered, 1.0).unwrap();
        let model = Model::new(PotentialSpec::gaussian(1.0, 1.0).unwrap(), grid);
        let s = init_trial(&model, 1.0, 10.0, 0.1).unwrap();
        let expected = 1.0 - 10.0 / (6.0 * std::f64::consts::PI.powi(2)) * 1e-3;
        assert!((s.rho0() - expected).abs() < 1e-15);
        assert!((s.rho0() - 0.999831).abs() < 1e-6);
        assert!(init_trial(&model, 1.0, 1e6, 1.0).is_err());
    }

    #[test]
    fn vacuum_is_fixed_point_for_nonpositive_mu() {
        let model = small_model();
        let cfg = SolverConfig::default();
        for mu in [-1.0, 0.0] {
            let next = fixed_point_step(&State::vacuum(128), &model, mu, &cfg);
            // A = p^2 - mu > 0 except possibly at p -> 0 for mu = 0, where p_1 > 0 still
            let next = next.unwrap();
            assert!(next.is_vacuum());
        }
    }

    #[test]
    fn fixed_point_rejects_nonpositive_a() {
        let model = small_model();
        let err = fixed_point_step(&State::vacuum(128), &model, 1.0, &SolverConfig::default());
        assert!(matches!(err, Err(Error::NonPositiveA { .. })));
    }

    #[test]
    fn gradient_step_from_vacuum_fills_condensate() {
        let model = small_model();
        let cfg = SolverConfig::default();
        let next = gradient_step(&State::vacuum(128), &model, 1.0, &cfg).unwrap();
        assert!(next.rho0() > 0.0);
        let e0 = crate::functional::energy(&State::vacuum(128), &model, 1.0).unwrap().total;
        let e1 = crate::functional::energy(&next, &model, 1.0).unwrap().total;
        assert!(e1 < e0);
    }

    #[test]
    fn negative_mu_returns_vacuum() {
        let model = small_model();
        let r = minimize(&model, -1.0, &SolverConfig::default()).unwrap();
        assert!(r.converged && r.state.is_vacuum());
        assert_eq!(r.energy.total, 0.0);
        assert_eq!(r.iterations, 0);
    }

    #[test]
    fn config_validation() {
        let model = small_model();
        let bad = SolverConfig { damping: 0.0, ..SolverConfig::default() };
        assert!(minimize(&model, 1.0, &bad).is_err());
        let bad = SolverConfig { kappa: Some(-1.0), ..SolverConfig::default() };
        assert!(minimize(&model, 1.0, &bad).is_err());
        assert!(kappa_sweep(&[], &model, 1.0, &SolverConfig::default(), 1e-8).is_err());
        assert!(kappa_sweep(&[2.0, 1.0], &model, 1.0, &SolverConfig::default(), 1e-8).is_err());
        assert!(minimize_fixed_density(-1.0, 1.0, &model, 1.0, &SolverConfig::default()).is_err());
    }

    #[test]
    fn fixed_density_zero_lambda_closed_form() {
        let model = small_model();
        let r = minimize_fixed_density(0.0, 1.0, &model, 1.0, &SolverConfig::default()).unwrap();
        assert_eq!(r.energy.total, -1.0 + 0.5);
        let r = minimize_fixed_density(0.0, 0.3, &model, 1.0, &SolverConfig::default()).unwrap();
        assert!((r.energy.total - (-0.3 + 0.5 * 0.09)).abs() < 1e-16);
    }
}

