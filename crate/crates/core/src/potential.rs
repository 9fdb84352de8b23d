//! Radial interaction potentials given by their Fourier transform `V̂(p)`.
//!
//! Admissible potentials have `V >= 0`, `V̂ >= 0`, `V != 0` and both `V` and `V̂`
//! integrable. The two analytic families are positive in position space by
//! construction; tabulated transforms are only checked in momentum space.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::RADIAL_MEASURE;

/// A piecewise-linear table of `V̂` starting at `p = 0`, zero beyond the last node.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    p: Vec<f64>,
    v: Vec<f64>,
    /// `forward[j] = integral_{p_0}^{p_j} u V̂(u) du`
    forward: Vec<f64>,
    /// `backward[j] = integral_{p_j}^{p_last} u V̂(u) du`
    backward: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    /// `V̂(p) = amplitude * exp(-width^2 p^2 / 2)`
    Gaussian { amplitude: f64, width: f64 },
    /// `V̂(p) = amplitude * exp(-rate |p|)`
    Exponential { amplitude: f64, rate: f64 },
    Tabulated(Table),
}

/// An admissible radial interaction with cached scalar constants.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    family: Family,
    vhat0: f64,
    v0: f64,
    l2norm: f64,
}

impl Table {
    pub fn new(p: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if p.len() != v.len() {
            return Err(Error::LengthMismatch { expected: p.len(), got: v.len() });
        }
        if p.len() < 2 {
            return Err(invalid("potential table needs at least two rows"));
        }
        if p[0] != 0.0 {
            return Err(invalid("potential table must start at p = 0"));
        }
        if p.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("potential table momenta must be strictly ascending"));
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::Inadmissible(format!(
                "table value V̂({}) = {} is negative or not finite",
                p[i], v[i]
            )));
        }
        if v[0] <= 0.0 {
            return Err(Error::Inadmissible("V̂(0) must be positive".into()));
        }
        let seg: Vec<f64> = (0..p.len() - 1)
            .map(|j| segment_moment(p[j], p[j + 1], v[j], v[j + 1], p[j], p[j + 1]))
            .collect();
        let mut forward = vec![0.0; p.len()];
        for j in 0..seg.len() {
            forward[j + 1] = forward[j] + seg[j];
        }
        let mut backward = vec![0.0; p.len()];
        for j in (0..seg.len()).rev() {
            backward[j] = backward[j + 1] + seg[j];
        }
        Ok(Self { p, v, forward, backward })
    }

    /// Parses two whitespace-separated columns `p V̂(p)`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Vec::new();
        let mut v = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::Parse { line: k + 1, msg: "expected two columns".into() });
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse { line: k + 1, msg: format!("{s:?}: {e}") })
            };
            p.push(parse(cols[0])?);
            v.push(parse(cols[1])?);
        }
        Self::new(p, v)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.p
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    fn last(&self) -> f64 {
        *self.p.last().unwrap()
    }

    /// Index `j` with `p[j] <= x < p[j+1]`, clamped to the last segment.
    fn segment(&self, x: f64) -> usize {
        let j = self.p.partition_point(|&q| q <= x);
        j.saturating_sub(1).min(self.p.len() - 2)
    }

    fn eval(&self, x: f64) -> f64 {
        if x > self.last() {
            return 0.0;
        }
        let j = self.segment(x);
        let (a, b) = (self.p[j], self.p[j + 1]);
        let t = (x - a) / (b - a);
        self.v[j] + t * (self.v[j + 1] - self.v[j])
    }

    /// `integral_a^b u V̂(u) du` summed segment by segment, all terms nonnegative.
    fn moment(&self, a: f64, b: f64) -> f64 {
        let last = self.last();
        let b = b.min(last);
        if b <= a {
            return 0.0;
        }
        let ja = self.segment(a);
        let jb = self.segment(b);
        let piece = |j: usize, lo: f64, hi: f64| {
            segment_moment(self.p[j], self.p[j + 1], self.v[j], self.v[j + 1], lo, hi)
        };
        if ja == jb {
            return piece(ja, a, b);
        }
        let head = piece(ja, a, self.p[ja + 1]);
        let tail = piece(jb, self.p[jb], b);
        // Full segments ja+1 .. jb-1; take the prefix difference from whichever
        // side keeps both operands small.
        let full = if self.forward[jb] <= self.backward[ja + 1] {
            self.forward[jb] - self.forward[ja + 1]
        } else {
            self.backward[ja + 1] - self.backward[jb]
        };
        head + full.max(0.0) + tail
    }
}

/// `integral_lo^hi u * lerp(u) du` on one linear segment, by Simpson (exact for quadratics).
fn segment_moment(p0: f64, p1: f64, v0: f64, v1: f64, lo: f64, hi: f64) -> f64 {
    let lerp = |x: f64| v0 + (x - p0) / (p1 - p0) * (v1 - v0);
    let mid = 0.5 * (lo + hi);
    (hi - lo) / 6.0 * (lo * lerp(lo) + 4.0 * mid * lerp(mid) + hi * lerp(hi))
}

impl PotentialSpec {
    pub fn gaussian(amplitude: f64, width: f64) -> Result<Self> {
        check_positive("amplitude", amplitude)?;
        check_positive("width", width)?;
        Ok(Self::with_family(Family::Gaussian { amplitude, width }))
    }

    pub fn exponential(amplitude: f64, rate: f64) -> Result<Self> {
        check_positive("amplitude", amplitude)?;
        check_positive("rate", rate)?;
        Ok(Self::with_family(Family::Exponential { amplitude, rate }))
    }

    pub fn tabulated(table: Table) -> Result<Self> {
        let spec = Self::with_family(Family::Tabulated(table));
        if !(spec.v0.is_finite() && spec.l2norm.is_finite()) {
            return Err(Error::Inadmissible("tabulated V̂ is not integrable".into()));
        }
        Ok(spec)
    }

    fn with_family(family: Family) -> Self {
        let vhat0 = match &family {
            Family::Gaussian { amplitude, .. } | Family::Exponential { amplitude, .. } => *amplitude,
            Family::Tabulated(t) => t.v[0],
        };
        let (v0, l2norm) = constants_of(&family);
        Self { family, vhat0, v0, l2norm }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    /// `V̂(0)`.
    pub fn vhat0(&self) -> f64 {
        self.vhat0
    }

    /// `V(0) = integral dp V̂(p)` under the absorbed measure.
    pub fn v0(&self) -> f64 {
        self.v0
    }

    /// `||V̂||_2` under the absorbed measure.
    pub fn l2norm(&self) -> f64 {
        self.l2norm
    }

    /// `(v0, l2norm)`.
    pub fn derived_constants(&self) -> (f64, f64) {
        (self.v0, self.l2norm)
    }

    /// `V̂(p)` for a momentum magnitude `p >= 0`.
    pub fn vhat_eval(&self, p: f64) -> Result<f64> {
        if !(p >= 0.0) {
            return Err(invalid(format!("momentum magnitude must be >= 0, got {p}")));
        }
        Ok(self.vhat(p))
    }

    /// Unchecked evaluation; `p` is taken as `|p|`.
    pub fn vhat(&self, p: f64) -> f64 {
        let p = p.abs();
        match &self.family {
            Family::Gaussian { amplitude, width } => amplitude * (-0.5 * width * width * p * p).exp(),
            Family::Exponential { amplitude, rate } => amplitude * (-rate * p).exp(),
            Family::Tabulated(t) => t.eval(p),
        }
    }

    /// `integral_a^b u V̂(u) du` for `0 <= a <= b`, accurate to relative
    /// rounding even when both ends sit far in the tail.
    pub fn radial_moment(&self, a: f64, b: f64) -> f64 {
        debug_assert!(0.0 <= a && a <= b);
        self.moment_parts(a, b, b - a, (b - a) * (b + a))
    }

    /// `integral_{|r-s|}^{r+s} u V̂(u) du`, with the interval length taken as
    /// `2 min(r, s)` so that `r << s` keeps full relative accuracy.
    pub fn shell_moment(&self, r: f64, s: f64) -> f64 {
        let (lo, hi) = ((r - s).abs(), r + s);
        self.moment_parts(lo, hi, 2.0 * r.min(s), 4.0 * r * s)
    }

    /// `width = b - a`, `spread = b² - a²`, both supplied by the caller.
    fn moment_parts(&self, a: f64, b: f64, width: f64, spread: f64) -> f64 {
        match &self.family {
            Family::Gaussian { amplitude, width: sigma } => {
                let s2 = sigma * sigma;
                amplitude / s2 * (-0.5 * s2 * a * a).exp() * -(-0.5 * s2 * spread).exp_m1()
            }
            Family::Exponential { amplitude, rate } => {
                let y = rate * width;
                amplitude
                    * (-rate * a).exp()
                    * (a * -(-y).exp_m1() / rate + one_minus_exp_poly(y) / (rate * rate))
            }
            Family::Tabulated(t) => t.moment(a, b),
        }
    }

    pub fn check_admissible(&self) -> AdmissibilityReport {
        let reach = match &self.family {
            Family::Gaussian { width, .. } => 12.0 / width,
            Family::Exponential { rate, .. } => 60.0 / rate,
            Family::Tabulated(t) => 1.25 * t.last(),
        };
        let samples = 4001;
        let mut min_value = f64::INFINITY;
        let mut max_value = f64::NEG_INFINITY;
        for k in 0..samples {
            let v = self.vhat(reach * k as f64 / (samples - 1) as f64);
            min_value = min_value.min(v);
            max_value = max_value.max(v);
        }
        let position_space = match self.family {
            Family::Tabulated(_) => Verdict::NotVerified,
            _ => Verdict::Pass,
        };
        AdmissibilityReport {
            vhat_nonnegative: Verdict::from_bool(min_value >= 0.0),
            vhat_integrable: Verdict::from_bool(self.v0.is_finite()),
            vhat_square_integrable: Verdict::from_bool(self.l2norm.is_finite()),
            bounded_by_origin: Verdict::from_bool(max_value <= self.vhat0 * (1.0 + 1e-12)),
            position_space_nonnegative: position_space,
            min_sampled: min_value,
            max_sampled: max_value,
        }
    }
}

/// `1 - e^{-y}(1 + y)` without cancellation for small `y`.
fn one_minus_exp_poly(y: f64) -> f64 {
    if y > 0.5 {
        return 1.0 - (-y).exp() * (1.0 + y);
    }
    // sum_{k>=2} (-1)^k (k-1) y^k / k!
    let mut term = y * y / 2.0; // y^k / k! at k = 2
    let mut sum = 0.0;
    for k in 2..40 {
        let signed = if k % 2 == 0 { term } else { -term };
        sum += (k - 1) as f64 * signed;
        term *= y / (k + 1) as f64;
        if term < 1e-18 * sum.abs() {
            break;
        }
    }
    sum
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::Inadmissible(format!("{name} must be positive and finite, got {x}")))
    }
}

fn constants_of(family: &Family) -> (f64, f64) {
    match family {
        Family::Gaussian { amplitude, width } => {
            let v0 = amplitude / ((2.0 * PI).powf(1.5) * width.powi(3));
            let l2 = amplitude * (4.0 * PI).powf(-0.75) * width.powf(-1.5);
            (v0, l2)
        }
        Family::Exponential { amplitude, rate } => {
            let v0 = amplitude / (PI * PI * rate.powi(3));
            let l2 = amplitude / (8.0f64.sqrt() * PI * rate.powf(1.5));
            (v0, l2)
        }
        Family::Tabulated(t) => {
            // p^2 V̂ is cubic and p^2 V̂^2 quintic on each segment: 3-point Gauss is exact.
            const X: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
            const W: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
            let (mut m1, mut m2) = (0.0, 0.0);
            for j in 0..t.p.len() - 1 {
                let (a, b) = (t.p[j], t.p[j + 1]);
                let half = 0.5 * (b - a);
                for (x, w) in X.iter().zip(W) {
                    let u = a + half * (1.0 + x);
                    let v = t.eval(u);
                    m1 += half * w * u * u * v;
                    m2 += half * w * u * u * v * v;
                }
            }
            (RADIAL_MEASURE * m1, (RADIAL_MEASURE * m2).sqrt())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotVerified,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }
}

/// Outcome of the admissibility checks on a potential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub vhat_nonnegative: Verdict,
    pub vhat_integrable: Verdict,
    pub vhat_square_integrable: Verdict,
    pub bounded_by_origin: Verdict,
    /// `V >= 0` in position space; only known for the analytic families.
    pub position_space_nonnegative: Verdict,
    pub min_sampled: f64,
    pub max_sampled: f64,
}

impl AdmissibilityReport {
    /// True when no check failed (a `NotVerified` entry does not count as failure).
    pub fn passed(&self) -> bool {
        [
            self.vhat_nonnegative,
            self.vhat_integrable,
            self.vhat_square_integrable,
            self.bounded_by_origin,
            self.position_space_nonnegative,
        ]
        .iter()
        .all(|v| *v != Verdict::Fail)
    }
}
