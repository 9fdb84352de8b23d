//! Radial momentum grids and the discretized convolution `g -> V̂ * g`.
//!
//! Nodes come from a smooth map `p(u)` of a uniform parameter `u in (0, 1]`;
//! weights are composite Simpson in `u` applied to `RADIAL_MEASURE p^2 p'(u) f(p)`.
//! The `u = 0` endpoint carries zero weight (the integrand vanishes there), so it
//! is not stored and all stored weights are strictly positive.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::potential::PotentialSpec;
use crate::RADIAL_MEASURE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridScheme {
    /// Equally spaced nodes `p_i = i P_max / N`.
    UniformTrapezoid,
    /// Exponential map placing half of the nodes below `pivot`.
    Clustered,
}

impl GridScheme {
    pub fn name(self) -> &'static str {
        match self {
            GridScheme::UniformTrapezoid => "uniform",
            GridScheme::Clustered => "clustered",
        }
    }
}

impl std::str::FromStr for GridScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" | "uniform-trapezoid" => Ok(GridScheme::UniformTrapezoid),
            "clustered" => Ok(GridScheme::Clustered),
            other => Err(invalid(format!("unknown grid scheme {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    pmax: f64,
    scheme: GridScheme,
    pivot: f64,
}

/// Builds a grid of `n` nodes on `(0, pmax]`.
///
/// `pivot` is only used by [`GridScheme::Clustered`], where `p(1/2) = pivot`.
pub fn build_grid(n: usize, pmax: f64, scheme: GridScheme, pivot: f64) -> Result<RadialGrid> {
    if n < 16 {
        return Err(invalid(format!("grid needs at least 16 nodes, got {n}")));
    }
    if !(pmax.is_finite() && pmax > 0.0) {
        return Err(invalid(format!("pmax must be positive, got {pmax}")));
    }
    let map = match scheme {
        GridScheme::UniformTrapezoid => Map::Linear { pmax },
        GridScheme::Clustered => {
            if !(pivot > 0.0 && pivot < pmax) {
                return Err(invalid(format!("pivot must lie in (0, pmax), got {pivot}")));
            }
            let beta = 2.0 * (pmax / pivot - 1.0).ln();
            if beta.abs() < 1e-8 {
                Map::Linear { pmax }
            } else {
                Map::Exp { pmax, beta }
            }
        }
    };
    let h = 1.0 / n as f64;
    let coef = simpson_coefficients(n);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (k, c) in coef.iter().enumerate().skip(1) {
        let (p, dp) = map.eval(k as f64 * h);
        nodes.push(p);
        weights.push(RADIAL_MEASURE * p * p * dp * h * c);
    }
    nodes[n - 1] = pmax;
    Ok(RadialGrid { nodes, weights, pmax, scheme, pivot })
}

enum Map {
    Linear { pmax: f64 },
    Exp { pmax: f64, beta: f64 },
}

impl Map {
    /// `(p(u), p'(u))`
    fn eval(&self, u: f64) -> (f64, f64) {
        match *self {
            Map::Linear { pmax } => (pmax * u, pmax),
            Map::Exp { pmax, beta } => {
                let denom = beta.exp_m1();
                (pmax * (beta * u).exp_m1() / denom, pmax * beta * (beta * u).exp() / denom)
            }
        }
    }
}

/// Composite Simpson coefficients on `n` unit intervals; a 3/8 panel closes odd `n`.
fn simpson_coefficients(n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n + 1];
    let simpson_end = if n.is_multiple_of(2) { n } else { n - 3 };
    for k in (0..simpson_end).step_by(2) {
        c[k] += 1.0 / 3.0;
        c[k + 1] += 4.0 / 3.0;
        c[k + 2] += 1.0 / 3.0;
    }
    if simpson_end < n {
        let k = simpson_end;
        c[k] += 3.0 / 8.0;
        c[k + 1] += 9.0 / 8.0;
        c[k + 2] += 9.0 / 8.0;
        c[k + 3] += 3.0 / 8.0;
    }
    c
}

impl RadialGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pmax(&self) -> f64 {
        self.pmax
    }

    pub fn scheme(&self) -> GridScheme {
        self.scheme
    }

    pub fn pivot(&self) -> f64 {
        self.pivot
    }

    /// `sum_i w_i samples_i`, the absorbed-measure integral over the ball of radius `pmax`.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        self.check_len(samples.len())?;
        Ok(self.dot(samples))
    }

    pub(crate) fn dot(&self, samples: &[f64]) -> f64 {
        self.weights.iter().zip(samples).map(|(w, s)| w * s).sum()
    }

    /// Weighted inner product `sum_i w_i f_i g_i`.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.weights.iter().zip(f).zip(g).map(|((w, a), b)| w * a * b).sum()
    }

    pub(crate) fn check_len(&self, got: usize) -> Result<()> {
        if got == self.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch { expected: self.len(), got })
        }
    }

    /// Short text descriptor used in file headers, e.g. `clustered:1024:12:1`.
    pub fn descriptor(&self) -> String {
        format!("{}:{}:{}:{}", self.scheme.name(), self.len(), self.pmax, self.pivot)
    }
}

/// Dense `N x N` operator with `(K g)_i = sum_j w_j k(p_i, p_j) g_j`, where
/// `k(r, s)` is the angular average of `V̂(|r - q|)` over `|q| = s`.
#[derive(Debug, Clone)]
pub struct ConvolutionKernel {
    n: usize,
    matrix: Vec<f64>,
}

/// Angular average of `V̂` over the sphere of radius `s` centred a distance `r` away:
/// `(W(r+s) - W(|r-s|)) / (2 r s)` with `W(t) = integral_0^t u V̂(u) du`.
pub fn angular_average(spec: &PotentialSpec, r: f64, s: f64) -> f64 {
    if r == 0.0 || s == 0.0 {
        return spec.vhat(r.max(s));
    }
    spec.shell_moment(r, s) / (2.0 * r * s)
}

pub fn build_kernel(grid: &RadialGrid, spec: &PotentialSpec) -> ConvolutionKernel {
    let n = grid.len();
    let p = grid.nodes();
    let w = grid.weights();
    let mut matrix = vec![0.0; n * n];
    matrix.par_chunks_mut(n).enumerate().for_each(|(i, row)| {
        for (j, m) in row.iter_mut().enumerate() {
            *m = angular_average(spec, p[i], p[j]) * w[j];
        }
    });
    ConvolutionKernel { n, matrix }
}

impl ConvolutionKernel {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Row-major matrix entries `K_ij`.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn apply_kernel(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: samples.len() });
        }
        let mut out = vec![0.0; self.n];
        self.apply_into(samples, &mut out);
        Ok(out)
    }

    pub(crate) fn apply_into(&self, samples: &[f64], out: &mut [f64]) {
        let n = self.n;
        let row_dot = |row: &[f64]| row.iter().zip(samples).map(|(k, g)| k * g).sum::<f64>();
        if n >= 256 {
            out.par_iter_mut()
                .zip(self.matrix.par_chunks(n))
                .for_each(|(o, row)| *o = row_dot(row));
        } else {
            for (o, row) in out.iter_mut().zip(self.matrix.chunks(n)) {
                *o = row_dot(row);
            }
        }
    }
}
