//! Plain-text state files.
//!
//! ```text
//! # rho0=<value> mu=<value> grid=<scheme:n:pmax:pivot>
//! # free-form comment lines
//! p gamma alpha
//! ...
//! ```
//!
//! Numbers are written with 17 significant digits, so a round trip is exact.

use crate::error::{Error, Result};
use crate::functional::State;
use crate::grid::RadialGrid;

/// Contents of a state file, not yet checked for domain membership.
#[derive(Debug, Clone, PartialEq)]
pub struct StateFile {
    pub rho0: f64,
    pub mu: f64,
    pub grid: String,
    pub comments: Vec<String>,
    pub p: Vec<f64>,
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl StateFile {
    pub fn from_state(state: &State, grid: &RadialGrid, mu: f64, comments: Vec<String>) -> Self {
        Self {
            rho0: state.rho0(),
            mu,
            grid: grid.descriptor(),
            comments,
            p: grid.nodes().to_vec(),
            gamma: state.gamma().to_vec(),
            alpha: state.alpha().to_vec(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("# rho0={:.16e} mu={:.16e} grid={}\n", self.rho0, self.mu, self.grid);
        for c in &self.comments {
            for line in c.lines() {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        for i in 0..self.p.len() {
            out.push_str(&format!("{:.16e} {:.16e} {:.16e}\n", self.p[i], self.gamma[i], self.alpha[i]));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
        let fields = header
            .strip_prefix('#')
            .ok_or_else(|| parse_err(1, "first line must be the '# rho0=... mu=... grid=...' header"))?;
        let (mut rho0, mut mu, mut grid) = (None, None, None);
        for field in fields.split_whitespace() {
            let (key, value) = field.split_once('=').ok_or_else(|| parse_err(1, format!("bad field {field:?}")))?;
            match key {
                "rho0" => rho0 = Some(number(value, 1)?),
                "mu" => mu = Some(number(value, 1)?),
                "grid" => grid = Some(value.to_string()),
                _ => return Err(parse_err(1, format!("unknown header key {key:?}"))),
            }
        }
        let missing = |k: &str| parse_err(1, format!("header lacks {k}"));
        let mut file = StateFile {
            rho0: rho0.ok_or_else(|| missing("rho0"))?,
            mu: mu.ok_or_else(|| missing("mu"))?,
            grid: grid.ok_or_else(|| missing("grid"))?,
            comments: Vec::new(),
            p: Vec::new(),
            gamma: Vec::new(),
            alpha: Vec::new(),
        };
        for (i, line) in lines {
            let line_no = i + 1;
            let trimmed = line.trim();
            if let Some(c) = trimmed.strip_prefix('#') {
                file.comments.push(c.trim_start().to_string());
                continue;
            }
            if trimmed.is_empty() {
                continue;
            }
            let cols: Vec<&str> = trimmed.split_whitespace().collect();
            if cols.len() != 3 {
                return Err(parse_err(line_no, format!("expected 3 columns, found {}", cols.len())));
            }
            file.p.push(number(cols[0], line_no)?);
            file.gamma.push(number(cols[1], line_no)?);
            file.alpha.push(number(cols[2], line_no)?);
        }
        Ok(file)
    }

    /// Fails with [`Error::GridMismatch`] unless the file was written on `grid`.
    pub fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        let mismatch = || Error::GridMismatch { expected: grid.descriptor(), found: self.grid.clone() };
        if self.grid != grid.descriptor() || self.p.len() != grid.len() {
            return Err(mismatch());
        }
        let off = self.p.iter().zip(grid.nodes()).any(|(a, b)| (a - b).abs() > 1e-12 * b.max(1.0));
        if off {
            return Err(mismatch());
        }
        Ok(())
    }

    /// Domain-checked state.
    pub fn state(&self) -> Result<State> {
        State::new(self.gamma.clone(), self.alpha.clone(), self.rho0)
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn number(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.parse().map_err(|_| parse_err(line, format!("not a number: {s:?}")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(line, format!("non-finite value {s:?}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridScheme};

    #[test]
    fn round_trip_is_exact() {
        let grid = build_grid(32, 5.0, GridScheme::Clustered, 1.0).unwrap();
        let alpha: Vec<f64> = grid.nodes().iter().map(|p| -0.3 / (1.0 + p.powi(4)) + 1e-17 * p).collect();
        let state = State::pure(alpha, 0.12345678901234568).unwrap();
        let file = StateFile::from_state(&state, &grid, 0.7, vec!["note".into(), "two\nlines".into()]);
        let back = StateFile::parse(&file.render()).unwrap();
        assert_eq!(back.comments, vec!["note", "two", "lines"]);
        back.check_grid(&grid).unwrap();
        assert_eq!(back.state().unwrap(), state);
        assert_eq!(back.mu, 0.7);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(StateFile::parse("").is_err());
        assert!(StateFile::parse("1 2 3\n").is_err());
        assert!(StateFile::parse("# rho0=1 mu=1\n").is_err());
        let e = StateFile::parse("# rho0=1 mu=1 grid=x\n1 2\n").unwrap_err();
        assert_eq!(e, Error::Parse { line: 2, msg: "expected 3 columns, found 2".into() });
        assert!(StateFile::parse("# rho0=1 mu=1 grid=x\n1 2 nan\n").is_err());
    }

    #[test]
    fn grid_mismatch_and_domain() {
        let grid = build_grid(32, 5.0, GridScheme::Clustered, 1.0).unwrap();
        let other = build_grid(32, 6.0, GridScheme::Clustered, 1.0).unwrap();
        let state = State::vacuum(32);
        let file = StateFile::from_state(&state, &grid, 1.0, vec![]);
        assert!(matches!(file.check_grid(&other), Err(Error::GridMismatch { .. })));
        let mut bad = file.clone();
        bad.gamma[3] = -1.0;
        assert!(matches!(bad.state(), Err(Error::Domain { node: 3, .. })));
    }
}
