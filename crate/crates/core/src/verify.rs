//! Checks of the quantitative properties of minimizers.
//!
//! Every check is a pure function of its inputs returning a [`CheckRecord`].
//! "Almost everywhere" statements are checked at every node with `γ` above
//! [`GAMMA_FLOOR`].

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::functional::{pure_slope, Evaluation, LowerBound, Model, State};

pub const GAMMA_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Not applicable to this input (e.g. `μ <= 0`).
    Skipped,
    /// Could not be decided on this grid.
    Inconclusive,
}

impl CheckStatus {
    fn from_bool(ok: bool) -> Self {
        if ok {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Skipped => "skipped",
            CheckStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub status: CheckStatus,
    /// Measured quantity compared against `threshold`.
    pub value: f64,
    pub threshold: f64,
    pub worst_node: Option<usize>,
    pub detail: String,
}

impl CheckRecord {
    fn new(name: &str, ok: bool, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::from_bool(ok),
            value,
            threshold,
            worst_node: None,
            detail: String::new(),
        }
    }

    fn skipped(name: &str, why: &str) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Skipped,
            value: f64::NAN,
            threshold: f64::NAN,
            worst_node: None,
            detail: why.into(),
        }
    }

    fn at(mut self, node: Option<usize>) -> Self {
        self.worst_node = node;
        self
    }

    fn note(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
    /// No check failed (skipped and inconclusive checks do not count as failures).
    pub passed: bool,
}

impl VerificationReport {
    pub fn new(checks: Vec<CheckRecord>) -> Self {
        let passed = checks.iter().all(|c| c.status != CheckStatus::Fail);
        Self { checks, passed }
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Fixed-width table, one check per line.
    pub fn table(&self) -> String {
        let mut out = format!("{:<26} {:<13} {:>24} {:>24}  {}\n", "check", "status", "value", "threshold", "detail");
        for c in &self.checks {
            out.push_str(&format!(
                "{:<26} {:<13} {:>24.16e} {:>24.16e}  {}\n",
                c.name,
                c.status.label(),
                c.value,
                c.threshold,
                c.detail
            ));
        }
        out.push_str(if self.passed { "overall: pass\n" } else { "overall: FAIL\n" });
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub pure_tol: f64,
    /// Bound on the pure-gradient residual and the identity residual.
    pub stationarity_tol: f64,
    pub rho0_tol: f64,
    /// Margin for strict and one-sided inequalities.
    pub margin: f64,
    pub sign_tol: f64,
    pub decay_slope: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            pure_tol: 1e-8,
            stationarity_tol: 1e-6,
            rho0_tol: 1e-8,
            margin: 1e-8,
            sign_tol: 1e-10,
            decay_slope: -3.5,
        }
    }
}

/// Index and value of the largest entry.
fn argmax(values: impl Iterator<Item = f64>) -> (Option<usize>, f64) {
    values.enumerate().fold((None, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (Some(i), v) } else { (bi, bv) })
}

/// Raw domain membership: `γ >= 0`, `α² <= γ² + γ`, `ρ0 >= 0`, all finite.
pub fn check_domain(gamma: &[f64], alpha: &[f64], rho0: f64) -> CheckRecord {
    if gamma.len() != alpha.len() {
        return CheckRecord::new("domain", false, f64::NAN, 0.0).note("gamma and alpha lengths differ");
    }
    let excess = gamma.iter().zip(alpha).map(|(g, a)| {
        if !(g.is_finite() && a.is_finite()) {
            return f64::INFINITY;
        }
        (-g).max(a * a - g * g - g)
    });
    let (node, worst) = argmax(excess);
    let worst = worst.max(0.0);
    let rho0_ok = rho0.is_finite() && rho0 >= 0.0;
    let ok = worst <= 1e-12 && rho0_ok;
    let mut rec = CheckRecord::new("domain", ok, worst, 1e-12).at(node);
    if !rho0_ok {
        rec = rec.note(format!("rho0 = {rho0} is negative"));
    } else if !ok {
        rec = rec.note("gamma < 0 or alpha^2 > gamma^2 + gamma");
    }
    rec
}

/// `max |α² − γ² − γ| / (1 + γ²) < tol`.
pub fn check_pure_state(state: &State, tol: f64) -> CheckRecord {
    let (node, r) = argmax(
        state.gamma().iter().zip(state.alpha()).map(|(g, a)| (a * a - g * g - g).abs() / (1.0 + g * g)),
    );
    let r = r.max(0.0);
    CheckRecord::new("pure_state", r < tol, r, tol).at(node)
}

/// `∫ V̂ (γ + α) < 0`, the precondition of the condensate majority bound.
pub fn check_pairing_sign(state: &State, model: &Model, mu: f64) -> CheckRecord {
    if mu <= 0.0 || state.is_vacuum() {
        return CheckRecord::skipped("pairing_sign", "applies to mu > 0 and non-vacuum states");
    }
    let s = model.grid().inner(model.vhat_nodes(), state.gamma()) + model.grid().inner(model.vhat_nodes(), state.alpha());
    CheckRecord::new("pairing_sign", s < 0.0, s, 0.0)
}

/// `ρ0 > ρ_γ` and `ρ0 >= ρ_γ + (∫p²γ + ½<γ, V̂∗γ>) / (−∫V̂(γ+α)) − margin`.
///
/// The value reported is `ρ0` minus the right-hand side.
pub fn check_condensate_majority(state: &State, model: &Model, mu: f64, margin: f64) -> CheckRecord {
    const NAME: &str = "condensate_majority";
    if mu <= 0.0 || state.is_vacuum() {
        return CheckRecord::skipped(NAME, "applies to mu > 0 and non-vacuum states");
    }
    let eval = Evaluation::new(state, model);
    let e = eval.energy(state, model, mu);
    let c = -eval.vhat_linear();
    let rho0 = state.rho0();
    if !(c > 0.0) {
        return CheckRecord::new(NAME, false, f64::NAN, margin)
            .note(format!("integral of V(gamma + alpha) = {:e} is not negative", -c));
    }
    let rhs = eval.rho_gamma + (e.kinetic + e.quad_gamma) / c;
    let slack = rho0 - rhs;
    let ok = slack >= -margin && rho0 > eval.rho_gamma;
    CheckRecord::new(NAME, ok, slack, -margin).note(format!("rho0 = {rho0:.6e}, rho_gamma = {:.6e}", eval.rho_gamma))
}

/// Tail decay `γ <= C p^-4`, tested by a log-log fit on `[P0, 0.8 P_max]` and a
/// boundedness proxy for `γ p⁴`.
///
/// `P0` is the first node where `p²` exceeds twice `max |A − p²|`. The fit uses the
/// nodes with `γ` above the floor and must give a slope at most `slope_max`; the
/// supremum of `γ p⁴` on the window must not exceed ten times its maximum on
/// `[P0, 2 P0]`.
pub fn check_decay(state: &State, model: &Model, mu: f64, slope_max: f64) -> CheckRecord {
    const NAME: &str = "decay";
    let eval = Evaluation::new(state, model);
    let d = eval.derivatives(state, model, mu);
    let p = model.grid().nodes();
    let bounded = d.a.iter().zip(p).map(|(a, p)| (a - p * p).abs()).fold(0.0f64, f64::max);
    let Some(start) = p.iter().position(|p| p * p > 2.0 * bounded) else {
        return CheckRecord::new(NAME, true, f64::NAN, slope_max)
            .note("p^2 never dominates A on this grid")
            .inconclusive();
    };
    let p0 = p[start];
    let pmax = model.grid().pmax();
    if pmax < 2.0 * p0 {
        return CheckRecord::new(NAME, true, f64::NAN, slope_max)
            .note(format!("P0 = {p0:.4} exceeds P_max / 2"))
            .inconclusive();
    }
    let window: Vec<usize> = (start..p.len()).filter(|&i| p[i] <= 0.8 * pmax).collect();
    if window.is_empty() {
        return CheckRecord::new(NAME, true, f64::NAN, slope_max).note("empty fit window").inconclusive();
    }
    let g = state.gamma();
    let weighted = |i: usize| g[i] * p[i].powi(4);
    let (sup_node, sup) = argmax(window.iter().map(|&i| weighted(i)));
    let head = window.iter().filter(|&&i| p[i] <= 2.0 * p0).map(|&i| weighted(i)).fold(0.0f64, f64::max);
    let bounded_ok = sup <= 10.0 * head;
    let fit: Vec<(f64, f64)> = window.iter().filter(|&&i| g[i] > GAMMA_FLOOR).map(|&i| (p[i].ln(), g[i].ln())).collect();
    let sup_node = sup_node.map(|k| window[k]);
    if fit.len() < 3 {
        return CheckRecord::new(NAME, bounded_ok, f64::NEG_INFINITY, slope_max)
            .at(sup_node)
            .note(format!("P0 = {p0:.4}; gamma below {GAMMA_FLOOR:e} on the window"));
    }
    let slope = least_squares_slope(&fit);
    CheckRecord::new(NAME, slope <= slope_max && bounded_ok, slope, slope_max).at(sup_node).note(format!(
        "P0 = {p0:.4}, window [{p0:.4}, {:.4}], {} fit nodes, sup gamma p^4 = {sup:.3e}{}",
        0.8 * pmax,
        fit.len(),
        if bounded_ok { "" } else { " (unbounded)" }
    ))
}

impl CheckRecord {
    fn inconclusive(mut self) -> Self {
        self.status = CheckStatus::Inconclusive;
        self
    }
}

fn least_squares_slope(xy: &[(f64, f64)]) -> f64 {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|v| v.0).sum::<f64>() / n;
    let my = xy.iter().map(|v| v.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// The stationarity system, as six records:
/// `A > 0`; `A² > B²` where `γ` is above the floor; the pure-gradient residual;
/// `α B <= 0`; `α² = B² / (4 (A² − B²))`; `∂F/∂ρ0 = 0` when `ρ0 > 0`.
pub fn check_el_system(state: &State, model: &Model, mu: f64, opts: &VerifyOptions) -> Vec<CheckRecord> {
    let eval = Evaluation::new(state, model);
    let d = eval.derivatives(state, model, mu);
    let (g, al) = (state.gamma(), state.alpha());
    let n = g.len();

    let (node, neg_min_a) = argmax(d.a.iter().map(|a| -a));
    let a_pos = CheckRecord::new("el_a_positive", neg_min_a < 0.0, -neg_min_a, 0.0).at(node);

    let gap = (0..n).map(|i| if g[i] > GAMMA_FLOOR { -(d.a[i] * d.a[i] - d.b[i] * d.b[i]) } else { f64::NEG_INFINITY });
    let (node, neg_gap) = argmax(gap);
    let gap_rec = if node.is_none() || neg_gap == f64::NEG_INFINITY {
        CheckRecord::new("el_gap", true, f64::INFINITY, 0.0).note("gamma below the floor everywhere")
    } else {
        CheckRecord::new("el_gap", neg_gap < 0.0, -neg_gap, 0.0).at(node)
    };

    let (node, resid) = argmax((0..n).map(|i| (pure_slope(al[i]) * d.a[i] + d.b[i]).abs()));
    let stat = CheckRecord::new("el_stationarity", resid < opts.stationarity_tol, resid, opts.stationarity_tol).at(node);

    let (node, sign) = argmax((0..n).map(|i| al[i] * d.b[i]));
    let sign_rec = CheckRecord::new("el_sign", sign <= opts.sign_tol, sign, opts.sign_tol).at(node);

    let ident = (0..n).map(|i| {
        let det = d.a[i] * d.a[i] - d.b[i] * d.b[i];
        if det > 0.0 {
            (al[i] * al[i] - d.b[i] * d.b[i] / (4.0 * det)).abs() / (1.0 + al[i] * al[i])
        } else {
            f64::NEG_INFINITY
        }
    });
    let (node, ident) = argmax(ident);
    let ident = ident.max(0.0);
    let ident_rec = CheckRecord::new("el_identity", ident < opts.stationarity_tol, ident, opts.stationarity_tol).at(node);

    let rho0_rec = if state.rho0() > 0.0 {
        CheckRecord::new("el_rho0", d.d_rho0.abs() < opts.rho0_tol, d.d_rho0.abs(), opts.rho0_tol)
    } else if d.d_rho0 >= 0.0 {
        CheckRecord::new("el_rho0", true, d.d_rho0, 0.0).note("rho0 = 0 with dF/drho0 >= 0")
    } else {
        CheckRecord::new("el_rho0", false, d.d_rho0, 0.0).note("rho0 = 0 but dF/drho0 < 0")
    };

    vec![a_pos, gap_rec, stat, sign_rec, ident_rec, rho0_rec]
}

/// Upper bound `F < −μ² / (2 V̂(0))` and the explicit coercivity bound.
pub fn check_energy_bounds(state: &State, model: &Model, mu: f64, margin: f64) -> Vec<CheckRecord> {
    if mu <= 0.0 {
        return vec![
            CheckRecord::skipped("energy_upper", "applies to mu > 0"),
            CheckRecord::skipped("energy_lower", "applies to mu > 0"),
        ];
    }
    let eval = Evaluation::new(state, model);
    let e = eval.energy(state, model, mu);
    let cap = -mu * mu / (2.0 * model.spec().vhat0());
    let upper_gap = cap - e.total;
    let upper = CheckRecord::new("energy_upper", upper_gap > margin * cap.abs().max(1.0), upper_gap, margin)
        .note(format!("energy {:.16e} vs {:.16e}", e.total, cap));
    let lb = LowerBound::new(model, mu);
    let bound = lb.bound(e.kinetic, state.rho0(), eval.rho_gamma);
    let lower_gap = e.total - bound;
    let lower = CheckRecord::new("energy_lower", lower_gap >= -margin * e.total.abs().max(1.0), lower_gap, -margin)
        .note(format!("C = {:.6e}, epsilon = {:.6e}", lb.c, lb.epsilon));
    vec![upper, lower]
}

/// `p² ρ_γ + ρ0 [(V̂ ∗ (γ ± α))(p) − ∫ V̂ (γ + α)] >= −margin` for `p <= P_max / 2`.
pub fn check_shift_stationarity(state: &State, model: &Model, mu: f64, margin: f64) -> CheckRecord {
    const NAME: &str = "shift_stationarity";
    if mu <= 0.0 || state.is_vacuum() {
        return CheckRecord::skipped(NAME, "applies to mu > 0 and non-vacuum states");
    }
    let eval = Evaluation::new(state, model);
    let p = model.grid().nodes();
    let half = 0.5 * model.grid().pmax();
    let lin = eval.vhat_linear();
    let rho0 = state.rho0();
    let terms = (0..p.len()).filter(|&i| p[i] <= half).map(|i| {
        let base = p[i] * p[i] * eval.rho_gamma - rho0 * lin;
        let plus = base + rho0 * (eval.conv_gamma[i] + eval.conv_alpha[i]);
        let minus = base + rho0 * (eval.conv_gamma[i] - eval.conv_alpha[i]);
        -plus.min(minus)
    });
    let (node, worst) = argmax(terms);
    CheckRecord::new(NAME, -worst >= -margin, -worst, -margin).at(node)
}

/// Convexity of `λ -> f(λ)` on an ascending grid: at every interior point the chord
/// minus the value, times two, is at least `−margin max(1, max |f|)`. On a uniform
/// grid this is the usual second difference.
pub fn check_convexity_slice(lambdas: &[f64], values: &[f64], margin: f64) -> Result<CheckRecord> {
    if lambdas.len() != values.len() {
        return Err(invalid("lambda and value lists differ in length"));
    }
    if lambdas.len() < 3 {
        return Err(invalid("convexity check needs at least 3 points"));
    }
    if lambdas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("lambda grid must be strictly ascending"));
    }
    let scale = values.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let seconds = (1..lambdas.len() - 1).map(|i| {
        let (l0, l1, l2) = (lambdas[i - 1], lambdas[i], lambdas[i + 1]);
        let chord = ((l2 - l1) * values[i - 1] + (l1 - l0) * values[i + 1]) / (l2 - l0);
        -2.0 * (chord - values[i])
    });
    let (node, worst) = argmax(seconds);
    let min_second = -worst;
    Ok(CheckRecord::new("convexity", min_second >= -margin * scale, min_second, -margin * scale).at(node))
}

/// The full suite on a state with raw components: domain membership first, then
/// every minimizer property.
pub fn verify_components(
    gamma: &[f64],
    alpha: &[f64],
    rho0: f64,
    model: &Model,
    mu: f64,
    opts: &VerifyOptions,
) -> VerificationReport {
    let domain = check_domain(gamma, alpha, rho0);
    let state = (gamma.len() == model.len() && domain.passed())
        .then(|| State::new(gamma.to_vec(), alpha.to_vec(), rho0).ok())
        .flatten();
    match state {
        Some(state) => {
            let mut checks = vec![domain];
            checks.extend(verify_state(&state, model, mu, opts).checks);
            VerificationReport::new(checks)
        }
        None => {
            let mut domain = domain;
            if gamma.len() != model.len() {
                domain.status = CheckStatus::Fail;
                domain.detail = format!("state has {} nodes, grid has {}", gamma.len(), model.len());
            }
            VerificationReport::new(vec![domain])
        }
    }
}

/// Every minimizer property of a state already known to lie in the domain.
pub fn verify_state(state: &State, model: &Model, mu: f64, opts: &VerifyOptions) -> VerificationReport {
    let mut checks = vec![
        check_pure_state(state, opts.pure_tol),
        check_pairing_sign(state, model, mu),
        check_condensate_majority(state, model, mu, opts.margin),
    ];
    checks.push(if mu > 0.0 && !state.is_vacuum() {
        check_decay(state, model, mu, opts.decay_slope)
    } else {
        CheckRecord::skipped("decay", "applies to mu > 0 and non-vacuum states")
    });
    checks.extend(check_el_system(state, model, mu, opts));
    checks.extend(check_energy_bounds(state, model, mu, opts.margin));
    checks.push(check_shift_stationarity(state, model, mu, opts.margin));
    VerificationReport::new(checks)
}
