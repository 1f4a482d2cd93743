//! Double-well potentials with wells at 0 and 1.
//!
//! A [`DoubleWell`] carries the potential `W` together with the growth
//! constants `(p, c, T)` of the bound `c|t|^p <= W(t) <= |t|^p / c` for
//! `|t| >= T`. The first integral `ϑ(r) = ∫_0^r sqrt(W)` and the surface
//! tension constant `k = ϑ(1)` are derived from it; an interface between
//! the two phases carries energy `2k` per unit length in the sharp limit.

use std::fs;
use std::path::Path;

use crate::error::{input, Error, Result};

const QUADRATURE_TOL: f64 = 1e-10;
const QUADRATURE_MAX_DEPTH: u32 = 48;
/// Per-leaf tolerances are not split below this.
const QUADRATURE_TOL_FLOOR: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq)]
pub enum PotentialKind {
    /// `W(t) = t²(1 − t)²`.
    Quartic,
    /// Piecewise-linear interpolant of `(t, W)` samples with strictly increasing `t`.
    UserTabulated { samples: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubleWell {
    kind: PotentialKind,
    growth_exponent: f64,
    growth_constant: f64,
    growth_threshold: f64,
}

/// Outcome of sampling the structural conditions on `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthCheck {
    pub samples: usize,
    pub wells_vanish: bool,
    pub positive_off_wells: bool,
    pub growth_holds: bool,
    /// Worst sampled value of `min(W/(c|t|^p), |t|^p/(c W))`; at least 1 when the growth bound holds.
    pub worst_ratio: f64,
}

impl GrowthCheck {
    pub fn passed(&self) -> bool {
        self.wells_vanish && self.positive_off_wells && self.growth_holds
    }
}

impl DoubleWell {
    /// The quartic `t²(1 − t)²` with growth constants `p = 4`, `c = 1/8`, `T = 2`.
    pub fn quartic() -> Self {
        Self {
            kind: PotentialKind::Quartic,
            growth_exponent: 4.0,
            growth_constant: 0.125,
            growth_threshold: 2.0,
        }
    }

    pub fn tabulated(
        samples: Vec<(f64, f64)>,
        growth_exponent: f64,
        growth_constant: f64,
        growth_threshold: f64,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return input("tabulated potential needs at least two samples");
        }
        for (i, &(t, w)) in samples.iter().enumerate() {
            if !t.is_finite() || !w.is_finite() {
                return input(format!("tabulated sample {i} is not finite"));
            }
            if w < 0.0 {
                return input(format!("tabulated sample {i} has negative W = {w}"));
            }
            if i > 0 && t <= samples[i - 1].0 {
                return input(format!("tabulated abscissae must be strictly increasing (sample {i})"));
            }
        }
        Self::with_growth(PotentialKind::UserTabulated { samples }, growth_exponent, growth_constant, growth_threshold)
    }

    fn with_growth(kind: PotentialKind, p: f64, c: f64, threshold: f64) -> Result<Self> {
        if !(p >= 2.0) {
            return input(format!("growth exponent must be >= 2, got {p}"));
        }
        if !(c > 0.0) {
            return input(format!("growth constant must be > 0, got {c}"));
        }
        if !threshold.is_finite() {
            return input("growth threshold must be finite");
        }
        Ok(Self {
            kind,
            growth_exponent: p,
            growth_constant: c,
            growth_threshold: threshold,
        })
    }

    /// Reads a two-column `t W` table, one sample per line. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_table_file(
        path: impl AsRef<Path>,
        growth_exponent: f64,
        growth_constant: f64,
        growth_threshold: f64,
    ) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        let samples = parse_table(&text)?;
        Self::tabulated(samples, growth_exponent, growth_constant, growth_threshold)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn growth_exponent(&self) -> f64 {
        self.growth_exponent
    }

    pub fn growth_constant(&self) -> f64 {
        self.growth_constant
    }

    pub fn growth_threshold(&self) -> f64 {
        self.growth_threshold
    }

    /// Whether `W′` is available for gradient-based minimization.
    pub fn supports_minimization(&self) -> bool {
        matches!(self.kind, PotentialKind::Quartic)
    }

    /// `W(t)` for `order == 0`, `W′(t)` for `order == 1`.
    pub fn evaluate(&self, t: f64, order: u8) -> Result<f64> {
        match order {
            0 => self.value(t),
            1 => self.derivative(t),
            _ => input(format!("derivative order {order} not available")),
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return input(format!("potential argument {t} is not finite"));
        }
        match &self.kind {
            PotentialKind::Quartic => {
                let s = t * (1.0 - t);
                Ok(s * s)
            }
            PotentialKind::UserTabulated { samples } => {
                let (i, frac) = locate(samples, t)?;
                let (w0, w1) = (samples[i].1, samples[i + 1].1);
                Ok(w0 + frac * (w1 - w0))
            }
        }
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return input(format!("potential argument {t} is not finite"));
        }
        match &self.kind {
            PotentialKind::Quartic => Ok(2.0 * t * (1.0 - t) * (1.0 - 2.0 * t)),
            PotentialKind::UserTabulated { samples } => {
                let (i, _) = locate(samples, t)?;
                let (t0, w0) = samples[i];
                let (t1, w1) = samples[i + 1];
                Ok((w1 - w0) / (t1 - t0))
            }
        }
    }

    /// `W(t + h) − W(t) − W′(t)·h`, exact for the quartic.
    pub(crate) fn higher_order_increment(&self, t: f64, h: f64) -> Result<f64> {
        match &self.kind {
            PotentialKind::Quartic => {
                let w2 = 2.0 - 12.0 * t + 12.0 * t * t;
                let w3 = -12.0 + 24.0 * t;
                let h2 = h * h;
                Ok(h2 * (0.5 * w2 + h * (w3 / 6.0 + h)))
            }
            PotentialKind::UserTabulated { .. } => Err(Error::Capability(
                "tabulated potentials have no higher derivatives".into(),
            )),
        }
    }

    /// `ϑ(r) = ∫_0^r sqrt(W(t)) dt`, signed (negative for `r < 0`).
    pub fn first_integral(&self, r: f64) -> Result<f64> {
        if !r.is_finite() {
            return input(format!("first integral argument {r} is not finite"));
        }
        match &self.kind {
            PotentialKind::Quartic => Ok(quartic_first_integral(r)),
            PotentialKind::UserTabulated { samples } => {
                // integrate segment by segment so the kinks of the interpolant
                // sit on subinterval endpoints
                let (lo, hi, sign) = if r >= 0.0 { (0.0, r, 1.0) } else { (r, 0.0, -1.0) };
                let mut breaks = vec![lo];
                breaks.extend(samples.iter().map(|s| s.0).filter(|&t| t > lo && t < hi));
                breaks.push(hi);
                let mut total = 0.0;
                for pair in breaks.windows(2) {
                    let f = |t: f64| self.value(t).map(f64::sqrt);
                    total += adaptive_simpson(f, pair[0], pair[1], QUADRATURE_TOL / breaks.len() as f64)?;
                }
                Ok(sign * total)
            }
        }
    }

    /// `k = ϑ(1)`.
    pub fn tension_constant(&self) -> Result<f64> {
        self.first_integral(1.0)
    }

    /// One-dimensional optimal transition profile `σ` with `σ′ = sqrt(W(σ))`,
    /// `σ(0) = 1/2`. For the quartic this is the logistic function.
    pub fn optimal_profile(&self, t: f64) -> Result<f64> {
        if !t.is_finite() {
            return input(format!("profile argument {t} is not finite"));
        }
        match &self.kind {
            PotentialKind::Quartic => Ok(1.0 / (1.0 + (-t).exp())),
            PotentialKind::UserTabulated { .. } => {
                // RK4 on σ′ = ±sqrt(W(σ)); beyond |t| = 60 the profile has saturated
                let span = t.abs().min(60.0);
                let steps = (span / 0.01).ceil().max(1.0) as usize;
                let h = span / steps as f64;
                let dir = t.signum();
                let rhs = |s: f64| -> Result<f64> { Ok(dir * self.value(s.clamp(0.0, 1.0))?.sqrt()) };
                let mut s = 0.5;
                for _ in 0..steps {
                    let k1 = rhs(s)?;
                    let k2 = rhs(s + 0.5 * h * k1)?;
                    let k3 = rhs(s + 0.5 * h * k2)?;
                    let k4 = rhs(s + h * k3)?;
                    s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                }
                Ok(s.clamp(0.0, 1.0))
            }
        }
    }

    /// Samples `W` at `n` points spread over `[-range, 1 + range]` and checks
    /// the wells, positivity elsewhere, and the growth bound beyond the threshold.
    pub fn check_growth(&self, n: usize, range: f64) -> Result<GrowthCheck> {
        let mut check = GrowthCheck {
            samples: 0,
            wells_vanish: self.value(0.0)? == 0.0 && self.value(1.0)? == 0.0,
            positive_off_wells: true,
            growth_holds: true,
            worst_ratio: f64::INFINITY,
        };
        let (p, c, thr) = (self.growth_exponent, self.growth_constant, self.growth_threshold);
        let lo = -range;
        let hi = 1.0 + range;
        for i in 0..n {
            let t = lo + (hi - lo) * i as f64 / (n.max(2) - 1) as f64;
            let w = match self.value(t) {
                Ok(w) => w,
                // tabulated potentials are only defined on their table
                Err(Error::Input(_)) => continue,
                Err(e) => return Err(e),
            };
            check.samples += 1;
            if t != 0.0 && t != 1.0 && w <= 0.0 {
                check.positive_off_wells = false;
            }
            if t.abs() >= thr {
                let tp = t.abs().powf(p);
                let ratio = (w / (c * tp)).min(tp / (c * w));
                check.worst_ratio = check.worst_ratio.min(ratio);
                if ratio < 1.0 {
                    check.growth_holds = false;
                }
            }
        }
        Ok(check)
    }
}

/// Closed form of `∫_0^r |t(1 − t)| dt`.
fn quartic_first_integral(r: f64) -> f64 {
    let antiderivative = |t: f64| t * t / 2.0 - t * t * t / 3.0;
    if r < 0.0 {
        -antiderivative(r)
    } else if r <= 1.0 {
        antiderivative(r)
    } else {
        1.0 / 3.0 - antiderivative(r)
    }
}

fn locate(samples: &[(f64, f64)], t: f64) -> Result<(usize, f64)> {
    let first = samples[0].0;
    let last = samples[samples.len() - 1].0;
    if t < first || t > last {
        return input(format!("t = {t} outside tabulated range [{first}, {last}]"));
    }
    let upper = samples.partition_point(|s| s.0 <= t);
    let i = upper.saturating_sub(1).min(samples.len() - 2);
    let (t0, t1) = (samples[i].0, samples[i + 1].0);
    Ok((i, (t - t0) / (t1 - t0)))
}

pub(crate) fn parse_table(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 2 {
            return Err(Error::Parse {
                line: idx + 1,
                reason: format!("expected two columns, found {}", cols.len()),
            });
        }
        let parse = |s: &str| {
            s.parse::<f64>().map_err(|e| Error::Parse {
                line: idx + 1,
                reason: format!("{s:?}: {e}"),
            })
        };
        samples.push((parse(cols[0])?, parse(cols[1])?));
    }
    Ok(samples)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub(crate) fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a)?;
    let fb = f(b)?;
    let m = 0.5 * (a + b);
    let fm = f(m)?;
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, QUADRATURE_MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm)?;
    let frm = f(rm)?;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol.max(QUADRATURE_TOL_FLOOR) {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::Numeric(format!(
            "adaptive quadrature did not converge on [{a}, {b}] (residual {delta:e})"
        )));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}
