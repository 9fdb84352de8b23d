//! Command implementations behind the `bogoliubov` binary.
//!
//! Each command takes a resolved [`RunConfig`], writes its outputs into the
//! configured directory and returns the process exit code: 0 on success, 1 on an
//! analytic or convergence failure. Usage and configuration problems surface as
//! [`CliError::Usage`], which maps to exit code 2.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bogoliubov::solver::fixed_density_grid;
use bogoliubov::verify::{check_convexity_slice, verify_components};
use bogoliubov::{
    derivatives, kappa_sweep, minimize, CheckRecord, Error, Init, Model, SolverConfig, SolverReport, State, StateFile,
    VerificationReport, VerifyOptions,
};
use serde::Serialize;

pub use config::{Mode, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

fn core_error(e: Error) -> CliError {
    match e {
        Error::InvalidArgument(_) | Error::Inadmissible(_) | Error::GridMismatch { .. } | Error::Parse { .. } => {
            CliError::Usage(e.to_string())
        }
        _ => CliError::Failure(e.to_string()),
    }
}

/// Margin for the second differences of the fixed-density slice.
pub const CONVEXITY_MARGIN: f64 = 1e-8;

fn require_mode(cfg: &RunConfig, allowed: &[Mode], command: &str) -> Result<Mode, CliError> {
    let mode = cfg.mode()?;
    if allowed.contains(&mode) {
        Ok(mode)
    } else {
        Err(CliError::Usage(format!("the physics section describes a {mode:?} run, not `{command}`")))
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_num(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn comment_block(cfg: &RunConfig) -> String {
    cfg.render().lines().map(|l| format!("# {l}\n")).collect()
}

#[derive(Serialize)]
struct WithConfig<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

struct Sink {
    dir: PathBuf,
}

impl Sink {
    fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let dir = cfg.output_dir();
        std::fs::create_dir_all(&dir)
            .map_err(|e| CliError::Usage(format!("cannot create output directory {}: {e}", dir.display())))?;
        Ok(Self { dir })
    }

    fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)
            .map_err(|e| CliError::Failure(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    fn json<T: Serialize>(&self, name: &str, cfg: &RunConfig, body: T) -> Result<PathBuf, CliError> {
        let text = serde_json::to_string_pretty(&WithConfig { config: cfg, body })
            .map_err(|e| CliError::Failure(format!("json: {e}")))?;
        self.write(name, &(text + "\n"))
    }

    fn state(&self, name: &str, cfg: &RunConfig, report: &SolverReport, model: &Model) -> Result<PathBuf, CliError> {
        let comments = cfg.render().lines().map(String::from).collect();
        let file = StateFile::from_state(&report.state, model.grid(), report.mu, comments);
        self.write(name, &file.render())
    }
}

fn profile_csv(cfg: &RunConfig, report: &SolverReport, model: &Model) -> Result<String, CliError> {
    let d = derivatives(&report.state, model, report.mu).map_err(core_error)?;
    let mut out = comment_block(cfg);
    out.push_str("p,gamma,alpha,A,B\n");
    let s = &report.state;
    for (i, p) in model.grid().nodes().iter().enumerate() {
        let _ = writeln!(out, "{},{},{},{},{}", num(*p), num(s.gamma()[i]), num(s.alpha()[i]), num(d.a[i]), num(d.b[i]));
    }
    Ok(out)
}

/// Single minimization at `physics.mu`; writes `report.json`, `state.txt` and `profile.csv`.
pub fn cmd_minimize(cfg: &RunConfig) -> Result<i32, CliError> {
    require_mode(cfg, &[Mode::Minimize], "minimize")?;
    let (model, solver) = cfg.validate()?;
    let mu = cfg.mu()?;
    let report = minimize(&model, mu, &solver).map_err(core_error)?;
    let sink = Sink::new(cfg)?;
    if cfg.wants("json") {
        sink.json("report.json", cfg, &report)?;
    }
    if cfg.wants("state") {
        sink.state("state.txt", cfg, &report, &model)?;
    }
    if cfg.wants("csv") {
        sink.write("profile.csv", &profile_csv(cfg, &report, &model)?)?;
    }
    println!(
        "mu = {mu}  energy = {:.12}  rho0 = {:.8}  rho_gamma = {:.8}  iterations = {}  {}",
        report.energy.total, report.rho0, report.rho_gamma, report.iterations, report.status
    );
    Ok(if report.converged { 0 } else { 1 })
}

#[derive(Serialize)]
struct VerifyOutput<'a> {
    state_file: String,
    mu: f64,
    #[serde(flatten)]
    report: &'a VerificationReport,
}

/// Runs the verification suite on a state file written on the configured grid.
pub fn cmd_verify(cfg: &RunConfig, state_path: &Path) -> Result<i32, CliError> {
    let model = cfg.model()?;
    let mu = cfg.mu()?;
    let file = config::read_state_file(state_path)?;
    file.check_grid(model.grid()).map_err(|e| CliError::Usage(format!("{}: {e}", state_path.display())))?;
    if file.mu != mu {
        eprintln!("note: {} was written at mu = {}, verifying at mu = {mu}", state_path.display(), file.mu);
    }
    let report = verify_components(&file.gamma, &file.alpha, file.rho0, &model, mu, &VerifyOptions::default());
    let sink = Sink::new(cfg)?;
    if cfg.wants("json") {
        let body = VerifyOutput { state_file: state_path.display().to_string(), mu, report: &report };
        sink.json("verification.json", cfg, body)?;
    }
    print!("{}", report.table());
    Ok(if report.passed { 0 } else { 1 })
}

#[derive(Debug, Clone, Serialize)]
struct MuSweepRow {
    mu: f64,
    rho0: Option<f64>,
    rho_gamma: Option<f64>,
    rho: Option<f64>,
    energy: Option<f64>,
    condensate_fraction: Option<f64>,
    converged: bool,
    iterations: usize,
    error: Option<String>,
}

/// `μ` sweep or `κ` sweep, depending on the physics section.
pub fn cmd_sweep(cfg: &RunConfig) -> Result<i32, CliError> {
    match require_mode(cfg, &[Mode::MuSweep, Mode::KappaSweep], "sweep")? {
        Mode::MuSweep => sweep_mu(cfg),
        _ => sweep_kappa(cfg),
    }
}

fn sweep_mu(cfg: &RunConfig) -> Result<i32, CliError> {
    let (model, solver) = cfg.validate()?;
    let mus = cfg.mu_list()?;
    let sink = Sink::new(cfg)?;
    let mut rows = Vec::with_capacity(mus.len());
    let mut warm: Option<State> = None;
    for (i, &mu) in mus.iter().enumerate() {
        let mut run_cfg = solver.clone();
        if let Some(state) = &warm {
            run_cfg.init = Init::State(state.clone());
        }
        match minimize(&model, mu, &run_cfg) {
            Ok(report) => {
                if cfg.wants("state") {
                    sink.state(&format!("state_mu_{i:03}.txt"), cfg, &report, &model)?;
                }
                if mu > 0.0 && report.converged {
                    warm = Some(report.state.clone());
                }
                rows.push(MuSweepRow {
                    mu,
                    rho0: Some(report.rho0),
                    rho_gamma: Some(report.rho_gamma),
                    rho: Some(report.rho0 + report.rho_gamma),
                    energy: Some(report.energy.total),
                    condensate_fraction: report.condensate_fraction(),
                    converged: report.converged,
                    iterations: report.iterations,
                    error: None,
                });
            }
            Err(e) => {
                eprintln!("mu = {mu}: {e}");
                rows.push(MuSweepRow {
                    mu,
                    rho0: None,
                    rho_gamma: None,
                    rho: None,
                    energy: None,
                    condensate_fraction: None,
                    converged: false,
                    iterations: 0,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    if cfg.wants("csv") {
        let mut out = comment_block(cfg);
        out.push_str("mu,rho0,rho_gamma,rho,energy,condensate_fraction,converged,iterations\n");
        for r in &rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                num(r.mu),
                opt_num(r.rho0),
                opt_num(r.rho_gamma),
                opt_num(r.rho),
                opt_num(r.energy),
                opt_num(r.condensate_fraction),
                r.converged,
                r.iterations
            );
        }
        sink.write("sweep.csv", &out)?;
    }
    if cfg.wants("json") {
        #[derive(Serialize)]
        struct Body<'a> {
            rows: &'a [MuSweepRow],
        }
        sink.json("sweep.json", cfg, Body { rows: &rows })?;
    }
    for r in &rows {
        println!(
            "mu = {:<8} energy = {:<22} condensate_fraction = {:<22} converged = {}",
            r.mu,
            opt_num(r.energy),
            opt_num(r.condensate_fraction),
            r.converged
        );
    }
    Ok(if rows.iter().all(|r| r.converged) { 0 } else { 1 })
}

fn sweep_kappa(cfg: &RunConfig) -> Result<i32, CliError> {
    let (model, solver) = cfg.validate()?;
    let kappas = cfg.kappa_list()?;
    let mu = cfg.mu()?;
    let sweep = kappa_sweep(&kappas, &model, mu, &solver, cfg.stabilization_tol()?).map_err(core_error)?;
    let sink = Sink::new(cfg)?;
    if cfg.wants("state") {
        for (i, report) in sweep.reports.iter().enumerate() {
            sink.state(&format!("state_kappa_{i:03}.txt"), cfg, report, &model)?;
        }
    }
    let verdict = format!(
        "monotone={} stabilized_kappa={}",
        sweep.monotone,
        sweep.stabilized_kappa().map_or("none".to_string(), |k| k.to_string())
    );
    if cfg.wants("csv") {
        let mut out = comment_block(cfg);
        out.push_str("kappa,energy,rho0,rho_gamma,condensate_fraction,active_clamp,converged,iterations\n");
        for (k, r) in sweep.kappas.iter().zip(&sweep.reports) {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                num(*k),
                num(r.energy.total),
                num(r.rho0),
                num(r.rho_gamma),
                opt_num(r.condensate_fraction()),
                r.active_clamp,
                r.converged,
                r.iterations
            );
        }
        let _ = writeln!(out, "# {verdict}");
        sink.write("sweep.csv", &out)?;
    }
    if cfg.wants("json") {
        sink.json("sweep.json", cfg, &sweep)?;
    }
    for (k, r) in sweep.kappas.iter().zip(&sweep.reports) {
        println!("kappa = {k:<8} energy = {:.14}  active_clamp = {}  converged = {}", r.energy.total, r.active_clamp, r.converged);
    }
    println!("{verdict}");
    Ok(if sweep.all_converged && sweep.monotone { 0 } else { 1 })
}

#[derive(Debug, Clone, Serialize)]
struct FixedDensityRow {
    lambda: f64,
    rho0: f64,
    f: f64,
    multiplier: Option<f64>,
    converged: bool,
    iterations: usize,
}

#[derive(Serialize)]
struct ConvexityVerdict {
    rho0: f64,
    check: CheckRecord,
}

/// `f(λ, ρ0)` on the product of the configured `λ` and `ρ0` values.
///
/// `rho0 = auto` uses the condensate density of the unconstrained minimizer.
/// Every `ρ0` with at least three `λ` values gets a convexity verdict.
pub fn cmd_fixed_density(cfg: &RunConfig) -> Result<i32, CliError> {
    require_mode(cfg, &[Mode::FixedDensity], "fixed-density")?;
    let (model, solver) = cfg.validate()?;
    let mu = cfg.mu()?;
    let mut lambdas = cfg.lambdas()?;
    lambdas.sort_by(f64::total_cmp);
    let rho0s = match cfg.rho0s()? {
        Some(v) => v,
        None => {
            let report = minimize(&model, mu, &solver).map_err(core_error)?;
            if !report.converged {
                return Err(CliError::Failure(format!("rho0 = auto: minimization did not converge ({})", report.status)));
            }
            println!("rho0 = auto resolved to {}", num(report.rho0));
            vec![report.rho0]
        }
    };
    let points: Vec<(f64, f64)> = rho0s.iter().flat_map(|r| lambdas.iter().map(move |l| (*l, *r))).collect();
    let fd_cfg = SolverConfig { init: Init::Vacuum, ..solver };
    let reports = fixed_density_grid(&points, &model, mu, &fd_cfg).map_err(core_error)?;
    let rows: Vec<FixedDensityRow> = points
        .iter()
        .zip(&reports)
        .map(|((lambda, rho0), r)| FixedDensityRow {
            lambda: *lambda,
            rho0: *rho0,
            f: r.energy.total,
            multiplier: r.multiplier,
            converged: r.converged,
            iterations: r.iterations,
        })
        .collect();
    let mut verdicts = Vec::new();
    if lambdas.len() >= 3 {
        for (j, rho0) in rho0s.iter().enumerate() {
            let values: Vec<f64> = rows[j * lambdas.len()..(j + 1) * lambdas.len()].iter().map(|r| r.f).collect();
            let check = check_convexity_slice(&lambdas, &values, CONVEXITY_MARGIN).map_err(core_error)?;
            verdicts.push(ConvexityVerdict { rho0: *rho0, check });
        }
    }
    let sink = Sink::new(cfg)?;
    if cfg.wants("csv") {
        let mut out = comment_block(cfg);
        out.push_str("lambda,rho0,f,multiplier,converged,iterations\n");
        for r in &rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                num(r.lambda),
                num(r.rho0),
                num(r.f),
                opt_num(r.multiplier),
                r.converged,
                r.iterations
            );
        }
        for v in &verdicts {
            let _ = writeln!(
                out,
                "# convexity rho0={} status={} min_second_difference={} threshold={}",
                num(v.rho0),
                v.check.status.label(),
                num(v.check.value),
                num(v.check.threshold)
            );
        }
        sink.write("fixed_density.csv", &out)?;
    }
    if cfg.wants("json") {
        #[derive(Serialize)]
        struct Body<'a> {
            rows: &'a [FixedDensityRow],
            convexity: &'a [ConvexityVerdict],
        }
        sink.json("fixed_density.json", cfg, Body { rows: &rows, convexity: &verdicts })?;
    }
    for r in &rows {
        println!("lambda = {:<24} rho0 = {:<24} f = {}  converged = {}", num(r.lambda), num(r.rho0), num(r.f), r.converged);
    }
    for v in &verdicts {
        println!("convexity at rho0 = {}: {}", num(v.rho0), v.check.status.label());
    }
    let ok = rows.iter().all(|r| r.converged) && verdicts.iter().all(|v| v.check.passed());
    Ok(if ok { 0 } else { 1 })
}
