//! Run configuration: a sectioned `key = value` text file.
//!
//! ```text
//! # comment
//! [potential]
//! family = gaussian
//! [physics]
//! mu = 1
//! ```
//!
//! Every key has a default; unknown sections or keys are rejected. Lists are
//! comma separated, optionally wrapped in brackets.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use bogoliubov::potential::Table;
use bogoliubov::{build_grid, Engine, GridScheme, Init, Model, PotentialSpec, SolverConfig, StateFile};
use serde::Serialize;

use crate::CliError;

const DEFAULTS: &[(&str, &str, &str)] = &[
    ("potential", "family", "gaussian"),
    ("potential", "amplitude", "1"),
    ("potential", "width", "1"),
    ("potential", "rate", "1"),
    ("potential", "table_path", ""),
    ("grid", "n", "1024"),
    ("grid", "pmax", "12"),
    ("grid", "scheme", "clustered"),
    ("grid", "pivot", "1"),
    ("solver", "kappa", "inf"),
    ("solver", "damping", "1"),
    ("solver", "tol_grad", "1e-10"),
    ("solver", "tol_energy", "1e-13"),
    ("solver", "max_iter", "5000"),
    ("solver", "init", "vacuum"),
    ("solver", "trial_gamma0", "10"),
    ("solver", "trial_eps", "0.1"),
    ("solver", "init_file", ""),
    ("solver", "engine", "fixed-point"),
    ("solver", "step_initial", "1"),
    ("solver", "step_backtrack", "0.5"),
    ("solver", "armijo", "1e-4"),
    ("solver", "clamp_delta", "1e-8"),
    ("solver", "stabilization_tol", "1e-8"),
    ("physics", "mu", "1"),
    ("physics", "mu_list", ""),
    ("physics", "kappa_list", ""),
    ("physics", "lambda", ""),
    ("physics", "lambda_list", ""),
    ("physics", "rho0", ""),
    ("physics", "rho0_list", ""),
    ("output", "directory", "."),
    ("output", "formats", "json,csv,state"),
];

/// Which command a configuration describes, read off the physics section.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Minimize,
    MuSweep,
    KappaSweep,
    FixedDensity,
}

/// Fully resolved `section -> key -> value` map, defaults filled in.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct RunConfig {
    values: BTreeMap<String, BTreeMap<String, String>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut values: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for (s, k, v) in DEFAULTS {
            values.entry(s.to_string()).or_default().insert(k.to_string(), v.to_string());
        }
        Self { values }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        let mut section: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| usage(format!("config line {}: {msg}", k + 1));
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| at(format!("bad section header {line:?}")))?;
                let name = name.trim();
                if !cfg.values.contains_key(name) {
                    return Err(at(format!("unknown section [{name}]")));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected key = value, got {line:?}")))?;
            let sec = section.as_deref().ok_or_else(|| at("key outside of any section".into()))?;
            cfg.set(sec, key.trim(), value.trim()).map_err(|e| at(e.to_string()))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<(), CliError> {
        let sec = self.values.get_mut(section).ok_or_else(|| usage(format!("unknown section [{section}]")))?;
        let slot = sec.get_mut(key).ok_or_else(|| usage(format!("unknown key {section}.{key}")))?;
        *slot = value.to_string();
        Ok(())
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, spec: &str) -> Result<(), CliError> {
        let (path, value) = spec.split_once('=').ok_or_else(|| usage(format!("--set needs K=V, got {spec:?}")))?;
        let (section, key) =
            path.trim().split_once('.').ok_or_else(|| usage(format!("--set key must be section.key, got {path:?}")))?;
        self.set(section, key, value.trim())
    }

    pub fn get(&self, section: &str, key: &str) -> &str {
        &self.values[section][key]
    }

    fn is_set(&self, section: &str, key: &str) -> bool {
        !self.get(section, key).is_empty()
    }

    fn number(&self, section: &str, key: &str) -> Result<f64, CliError> {
        parse_number(self.get(section, key)).map_err(|e| usage(format!("{section}.{key}: {e}")))
    }

    fn list(&self, section: &str, key: &str) -> Result<Vec<f64>, CliError> {
        parse_list(self.get(section, key)).map_err(|e| usage(format!("{section}.{key}: {e}")))
    }

    /// Canonical text form; parsing it gives back the same configuration.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for (section, keys) in &self.values {
            out.push_str(&format!("[{section}]\n"));
            for (k, v) in keys {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.get("output", "directory"))
    }

    pub fn wants(&self, format: &str) -> bool {
        self.get("output", "formats").split(',').any(|f| f.trim() == format)
    }

    pub fn mode(&self) -> Result<Mode, CliError> {
        let sweep_mu = self.is_set("physics", "mu_list");
        let sweep_kappa = self.is_set("physics", "kappa_list");
        let fixed = ["lambda", "lambda_list", "rho0", "rho0_list"].iter().any(|k| self.is_set("physics", k));
        match (sweep_mu, sweep_kappa, fixed) {
            (false, false, false) => Ok(Mode::Minimize),
            (true, false, false) => Ok(Mode::MuSweep),
            (false, true, false) => Ok(Mode::KappaSweep),
            (false, false, true) => Ok(Mode::FixedDensity),
            _ => Err(usage("physics section implies more than one run mode")),
        }
    }

    pub fn mu(&self) -> Result<f64, CliError> {
        self.number("physics", "mu")
    }

    pub fn mu_list(&self) -> Result<Vec<f64>, CliError> {
        nonempty(self.list("physics", "mu_list")?, "physics.mu_list")
    }

    pub fn kappa_list(&self) -> Result<Vec<f64>, CliError> {
        nonempty(self.list("physics", "kappa_list")?, "physics.kappa_list")
    }

    pub fn stabilization_tol(&self) -> Result<f64, CliError> {
        self.number("solver", "stabilization_tol")
    }

    /// `λ` values from `lambda` or `lambda_list`, all `>= 0`.
    pub fn lambdas(&self) -> Result<Vec<f64>, CliError> {
        let v = self.single_or_list("lambda")?;
        if let Some(l) = v.iter().find(|l| !(**l >= 0.0)) {
            return Err(usage(format!("lambda must be >= 0, got {l}")));
        }
        Ok(v)
    }

    /// `ρ0` values; `None` means the condensate density of the unconstrained minimizer.
    pub fn rho0s(&self) -> Result<Option<Vec<f64>>, CliError> {
        if self.get("physics", "rho0") == "auto" && !self.is_set("physics", "rho0_list") {
            return Ok(None);
        }
        let v = self.single_or_list("rho0")?;
        if let Some(r) = v.iter().find(|r| !(**r >= 0.0)) {
            return Err(usage(format!("rho0 must be >= 0, got {r}")));
        }
        Ok(Some(v))
    }

    fn single_or_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let list_key = format!("{key}_list");
        match (self.is_set("physics", key), self.is_set("physics", &list_key)) {
            (true, false) => Ok(vec![self.number("physics", key)?]),
            (false, true) => nonempty(self.list("physics", &list_key)?, &list_key),
            (true, true) => Err(usage(format!("set either physics.{key} or physics.{list_key}, not both"))),
            (false, false) => Err(usage(format!("physics.{key} or physics.{list_key} is required"))),
        }
    }

    pub fn potential(&self) -> Result<PotentialSpec, CliError> {
        let spec = match self.get("potential", "family") {
            "gaussian" => PotentialSpec::gaussian(self.number("potential", "amplitude")?, self.number("potential", "width")?),
            "exponential" => {
                PotentialSpec::exponential(self.number("potential", "amplitude")?, self.number("potential", "rate")?)
            }
            "tabulated" => {
                let path = self.get("potential", "table_path");
                if path.is_empty() {
                    return Err(usage("potential.table_path is required for the tabulated family"));
                }
                let text =
                    std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read table {path}: {e}")))?;
                Table::parse(&text).and_then(PotentialSpec::tabulated)
            }
            other => return Err(usage(format!("unknown potential family {other:?}"))),
        };
        spec.map_err(|e| usage(format!("potential: {e}")))
    }

    pub fn model(&self) -> Result<Model, CliError> {
        let n = self.get("grid", "n");
        let n: usize = n.parse().map_err(|_| usage(format!("grid.n: not a count: {n:?}")))?;
        let scheme: GridScheme = self.get("grid", "scheme").parse().map_err(|e| usage(format!("grid.scheme: {e}")))?;
        let grid = build_grid(n, self.number("grid", "pmax")?, scheme, self.number("grid", "pivot")?)
            .map_err(|e| usage(format!("grid: {e}")))?;
        Ok(Model::new(self.potential()?, grid))
    }

    pub fn solver(&self, model: &Model) -> Result<SolverConfig, CliError> {
        let kappa = match self.get("solver", "kappa") {
            "inf" | "none" => None,
            _ => Some(self.number("solver", "kappa")?),
        };
        let max_iter = self.get("solver", "max_iter");
        let max_iter: usize = max_iter.parse().map_err(|_| usage(format!("solver.max_iter: not a count: {max_iter:?}")))?;
        let engine = match self.get("solver", "engine") {
            "fixed-point" => Engine::FixedPoint,
            "gradient" => Engine::Gradient,
            other => return Err(usage(format!("unknown solver.engine {other:?}"))),
        };
        let init = match self.get("solver", "init") {
            "vacuum" => Init::Vacuum,
            "trial" => Init::Trial {
                gamma0: self.number("solver", "trial_gamma0")?,
                eps_ball: self.number("solver", "trial_eps")?,
            },
            "file" => {
                let path = self.get("solver", "init_file");
                let file = read_state_file(Path::new(path))?;
                file.check_grid(model.grid()).map_err(|e| usage(format!("{path}: {e}")))?;
                Init::State(file.state().map_err(|e| usage(format!("{path}: {e}")))?)
            }
            other => return Err(usage(format!("unknown solver.init {other:?}"))),
        };
        let mut cfg = SolverConfig {
            kappa,
            damping: self.number("solver", "damping")?,
            tol_grad: self.number("solver", "tol_grad")?,
            tol_energy: self.number("solver", "tol_energy")?,
            max_iter,
            init,
            engine,
            clamp_delta: self.number("solver", "clamp_delta")?,
            ..SolverConfig::default()
        };
        cfg.step.initial = self.number("solver", "step_initial")?;
        cfg.step.backtrack = self.number("solver", "step_backtrack")?;
        cfg.step.armijo = self.number("solver", "armijo")?;
        cfg.validate().map_err(|e| usage(format!("solver: {e}")))?;
        Ok(cfg)
    }

    /// Checks everything that does not need a solve, so bad input fails before any work.
    pub fn validate(&self) -> Result<(Model, SolverConfig), CliError> {
        let mode = self.mode()?;
        let model = self.model()?;
        let solver = self.solver(&model)?;
        if !self.mu()?.is_finite() {
            return Err(usage("physics.mu must be finite"));
        }
        match mode {
            Mode::Minimize => {}
            Mode::MuSweep => {
                self.mu_list()?;
            }
            Mode::KappaSweep => {
                self.kappa_list()?;
            }
            Mode::FixedDensity => {
                self.lambdas()?;
                self.rho0s()?;
            }
        }
        for f in self.get("output", "formats").split(',').map(str::trim).filter(|f| !f.is_empty()) {
            if !matches!(f, "json" | "csv" | "state") {
                return Err(usage(format!("unknown output format {f:?}")));
            }
        }
        Ok((model, solver))
    }
}

pub fn read_state_file(path: &Path) -> Result<StateFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read state file {}: {e}", path.display())))?;
    StateFile::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn parse_number(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("not finite: {s:?}"))
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let inner = s.trim();
    let inner = inner.strip_prefix('[').map_or(inner, |t| t.strip_suffix(']').unwrap_or(t));
    inner.split(',').map(str::trim).filter(|t| !t.is_empty()).map(parse_number).collect()
}

fn nonempty(v: Vec<f64>, key: &str) -> Result<Vec<f64>, CliError> {
    if v.is_empty() {
        Err(usage(format!("{key} is empty")))
    } else {
        Ok(v)
    }
}
