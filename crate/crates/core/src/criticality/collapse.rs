//! Data collapse `D_b(ω_k, α) = α^λ D̃(ω_k / ω_s(α))` of bath discord profiles.
//!
//! Curves are compared on `ln ω`, `ln(α^{−λ} D_b)` axes, where a change of
//! `ω_s` is a horizontal shift. The profile at the middle coupling serves as
//! reference and is interpolated by a natural cubic spline.

use serde::{Deserialize, Serialize};

use crate::criticality::fits::{fit_exponential, fit_power_law, ScalingFit};
use crate::error::{Result, SbmError};

/// Discord profile `D_b(ω_k)` at one coupling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseProfile {
    pub alpha: f64,
    pub omega: Vec<f64>,
    pub discord: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollapseResult {
    /// `(α, ω_s)` with `ω_s = 1` at the smallest coupling.
    pub omega_s: Vec<(f64, f64)>,
    /// Mean squared deviation of the shifted log profiles from the reference.
    pub residual: f64,
    /// Collapsed points `(r, D̃)` sorted by `r`.
    pub master: Vec<(f64, f64)>,
    /// Exponential decay of `ω_s(α)`.
    pub rate_fit: ScalingFit,
    /// Log-log slope of the master curve over its lowest fifth in `ln r`.
    pub small_r_slope: Option<f64>,
}

/// Natural cubic spline through strictly increasing knots.
struct Spline {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl Spline {
    fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        let n = x.len();
        let mut m = vec![0.0; n];
        if n > 2 {
            // tridiagonal system for the second derivatives, Thomas algorithm
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let a = h0 / 6.0;
                let b = (h0 + h1) / 3.0;
                let cc = h1 / 6.0;
                let r = (y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0;
                let denom = b - a * c[i - 1];
                c[i] = cc / denom;
                d[i] = (r - a * d[i - 1]) / denom;
            }
            for i in (1..n - 1).rev() {
                m[i] = d[i] - c[i] * m[i + 1];
            }
        }
        Self { x, y, m }
    }

    fn range(&self) -> (f64, f64) {
        (self.x[0], self.x[self.x.len() - 1])
    }

    fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.partition_point(|&v| v <= t) {
            0 => 0,
            p if p >= n => n - 2,
            p => p - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        a * self.y[i] + b * self.y[i + 1] + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }
}

/// Log-axis points of one profile with positive discord, sorted by frequency.
fn log_points(p: &CollapseProfile, lambda_exp: f64) -> Result<Vec<(f64, f64)>> {
    if p.omega.len() != p.discord.len() {
        return Err(SbmError::LengthMismatch { expected: p.omega.len(), got: p.discord.len() });
    }
    if !(p.alpha > 0.0) {
        return Err(SbmError::Domain(format!("collapse needs positive couplings, got {}", p.alpha)));
    }
    let scale = p.alpha.powf(-lambda_exp);
    let mut pts: Vec<(f64, f64)> = p
        .omega
        .iter()
        .zip(&p.discord)
        .filter(|(w, d)| **w > 0.0 && **d > 0.0 && d.is_finite())
        .map(|(w, d)| (w.ln(), (d * scale).ln()))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    Ok(pts)
}

const MIN_OVERLAP: usize = 3;

/// Mean squared mismatch of a profile shifted by `t` against the reference,
/// over the points that fall inside the reference support.
fn mismatch(reference: &Spline, pts: &[(f64, f64)], t: f64) -> Option<f64> {
    let (lo, hi) = reference.range();
    let mut sum = 0.0;
    let mut count = 0usize;
    for &(x, y) in pts {
        let u = x - t;
        if u >= lo && u <= hi {
            let d = y - reference.eval(u);
            sum += d * d;
            count += 1;
        }
    }
    (count >= MIN_OVERLAP).then(|| sum / count as f64)
}

/// Shift `t = ln ω_s − ln ω_s,ref` that best maps a profile onto the reference.
fn best_shift(reference: &Spline, pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    let (lo, hi) = reference.range();
    let t_min = pts[0].0 - hi;
    let t_max = pts[pts.len() - 1].0 - lo;
    let span = t_max - t_min;
    let spacing = reference.x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let steps = ((span / (0.25 * spacing)).ceil() as usize).clamp(200, 200_000);
    let h = span / steps as f64;
    let mut best: Option<(f64, f64)> = None;
    for s in 0..=steps {
        let t = t_min + h * s as f64;
        if let Some(v) = mismatch(reference, pts, t) {
            if best.map_or(true, |(_, b)| v < b) {
                best = Some((t, v));
            }
        }
    }
    let (t0, _) = best?;
    let f = |t: f64| mismatch(reference, pts, t).unwrap_or(f64::INFINITY);
    let (mut a, mut b) = (t0 - h, t0 + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = b - g * (b - a);
        let m2 = a + g * (b - a);
        if f(m1) < f(m2) {
            b = m2;
        } else {
            a = m1;
        }
    }
    let t = 0.5 * (a + b);
    Some((t, f(t)))
}

/// Collapses the profiles onto one master curve. Returns `ω_s(α)` anchored at
/// the smallest coupling, the collapse residual and the collapsed points.
pub fn collapse_discord(profiles: &[CollapseProfile], lambda_exp: f64) -> Result<CollapseResult> {
    if profiles.len() < 3 {
        return Err(SbmError::Config(format!("collapse needs at least 3 couplings, got {}", profiles.len())));
    }
    let mut order: Vec<usize> = (0..profiles.len()).collect();
    order.sort_by(|&a, &b| profiles[a].alpha.total_cmp(&profiles[b].alpha));
    let points: Vec<Vec<(f64, f64)>> =
        order.iter().map(|&i| log_points(&profiles[i], lambda_exp)).collect::<Result<_>>()?;
    for (pts, &i) in points.iter().zip(&order) {
        if pts.len() < MIN_OVERLAP {
            return Err(SbmError::CollapseInfeasible(format!(
                "profile at alpha = {} has fewer than {MIN_OVERLAP} positive points",
                profiles[i].alpha
            )));
        }
    }
    let mid = points.len() / 2;
    let (rx, ry): (Vec<f64>, Vec<f64>) = points[mid].iter().copied().unzip();
    let reference = Spline::new(rx, ry);
    let (ref_lo, ref_hi) = {
        let ys = &reference.y;
        (ys.iter().copied().fold(f64::INFINITY, f64::min), ys.iter().copied().fold(f64::NEG_INFINITY, f64::max))
    };

    let mut shifts = Vec::with_capacity(points.len());
    let mut total = 0.0;
    let mut count = 0usize;
    for (j, pts) in points.iter().enumerate() {
        let alpha = profiles[order[j]].alpha;
        let inside = pts.iter().filter(|(_, y)| *y >= ref_lo && *y <= ref_hi).count();
        if inside < 2 {
            return Err(SbmError::CollapseInfeasible(format!(
                "rescaled profile at alpha = {alpha} does not overlap the reference"
            )));
        }
        let (t, v) = if j == mid {
            (0.0, 0.0)
        } else {
            best_shift(&reference, pts).ok_or_else(|| {
                SbmError::CollapseInfeasible(format!("no shift overlaps profile at alpha = {alpha} with the reference"))
            })?
        };
        if j != mid {
            let n_in = {
                let (lo, hi) = reference.range();
                pts.iter().filter(|(x, _)| x - t >= lo && x - t <= hi).count()
            };
            total += v * n_in as f64;
            count += n_in;
        }
        shifts.push(t);
    }
    let residual = if count > 0 { total / count as f64 } else { 0.0 };

    let anchor = shifts[0];
    let omega_s: Vec<(f64, f64)> =
        shifts.iter().enumerate().map(|(j, t)| (profiles[order[j]].alpha, (t - anchor).exp())).collect();
    let mut master: Vec<(f64, f64)> = Vec::new();
    for (j, pts) in points.iter().enumerate() {
        let ln_ws = shifts[j] - anchor;
        master.extend(pts.iter().map(|&(x, y)| ((x - ln_ws).exp(), y.exp())));
    }
    master.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (a, w): (Vec<f64>, Vec<f64>) = omega_s.iter().copied().unzip();
    let rate_fit = fit_exponential(&a, &w)?;
    Ok(CollapseResult { omega_s, residual, small_r_slope: small_r_slope(&master), master, rate_fit })
}

fn small_r_slope(master: &[(f64, f64)]) -> Option<f64> {
    let lo = master.first()?.0.ln();
    let hi = master.last()?.0.ln();
    let cut = lo + 0.2 * (hi - lo);
    let (x, y): (Vec<f64>, Vec<f64>) = master.iter().copied().filter(|(r, _)| r.ln() <= cut).unzip();
    fit_power_law(&x, &y).ok().map(|f| f.exponent)
}
