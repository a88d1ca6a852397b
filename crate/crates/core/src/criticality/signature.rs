//! Singularity signatures of indicator curves and transition location.
//!
//! All tests work on the curve rescaled to `x, y ∈ [0, 1]`, so results do not
//! depend on the units or offset of the indicator.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SbmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Signature {
    /// Interior maximum with a slope discontinuity.
    Peak,
    /// Discontinuous drop or rise.
    Jump,
    /// Slope discontinuity of a monotone curve.
    Kink,
    /// Isolated spike on a flat background.
    Delta,
}

impl std::str::FromStr for Signature {
    type Err = SbmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "peak" | "cusp" => Ok(Self::Peak),
            "jump" | "drop" => Ok(Self::Jump),
            "kink" => Ok(Self::Kink),
            "delta" | "spike" => Ok(Self::Delta),
            other => Err(SbmError::Config(format!("unknown signature '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Cusp,
    Jump,
    Kink,
    Delta,
    Smooth,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub alpha_c: f64,
    pub uncertainty: f64,
    pub signature: Signature,
}

/// Thresholds of the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifierOptions {
    /// Delta: background level outside `±2` grid steps, relative to the spike height.
    pub delta_floor: f64,
    /// Jump: minimal step, relative to the full range.
    pub jump_min: f64,
    /// Jump: the step must exceed every other single step by this factor.
    pub jump_contrast: f64,
    /// Kink: residual of a smooth cubic over that of a broken line.
    pub kink_contrast: f64,
    /// Kink: minimal change of slope in rescaled units.
    pub kink_min_turn: f64,
    /// Points on each side of a candidate break used by the kink test.
    pub half_window: usize,
}

impl Default for ClassifierOptions {
    fn default() -> Self {
        Self {
            delta_floor: 0.05,
            jump_min: 0.4,
            jump_contrast: 3.0,
            kink_contrast: 8.0,
            kink_min_turn: 0.5,
            half_window: 4,
        }
    }
}

struct Curve {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Curve {
    fn new(alphas: &[f64], values: &[f64]) -> Result<Self> {
        if alphas.len() != values.len() {
            return Err(SbmError::LengthMismatch { expected: alphas.len(), got: values.len() });
        }
        if alphas.len() < 3 {
            return Err(SbmError::NotFound(format!("{} points are too few for a signature", alphas.len())));
        }
        if alphas.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(SbmError::Config("coupling grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(SbmError::Domain("indicator values must be finite".into()));
        }
        let (x0, x1) = (alphas[0], alphas[alphas.len() - 1]);
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let range = if hi > lo { hi - lo } else { 1.0 };
        Ok(Self {
            x: alphas.iter().map(|a| (a - x0) / (x1 - x0)).collect(),
            y: values.iter().map(|v| (v - lo) / range).collect(),
        })
    }

    fn len(&self) -> usize {
        self.x.len()
    }

    fn is_flat(&self) -> bool {
        self.y.iter().all(|&v| v == 0.0)
    }

    fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.len() {
            if self.y[i] > self.y[best] {
                best = i;
            }
        }
        best
    }
}

/// Half the grid spacing around index `i`.
fn half_spacing(alphas: &[f64], i: usize) -> f64 {
    let n = alphas.len();
    let left = if i > 0 { alphas[i] - alphas[i - 1] } else { f64::INFINITY };
    let right = if i + 1 < n { alphas[i + 1] - alphas[i] } else { f64::INFINITY };
    0.5 * left.min(right)
}

// ---------------------------------------------------------------------------
// individual tests

fn delta_index(c: &Curve, opts: &ClassifierOptions) -> Option<usize> {
    let p = c.argmax();
    if p == 0 || p + 1 == c.len() {
        return None;
    }
    let background = c.y.iter().enumerate().filter(|(i, _)| i.abs_diff(p) > 2).map(|(_, &v)| v).fold(0.0, f64::max);
    let far_points = c.y.iter().enumerate().filter(|(i, _)| i.abs_diff(p) > 2).count();
    (far_points >= 2 && background <= opts.delta_floor).then_some(p)
}

/// Index `i` of the step `i → i+1` that carries a jump.
fn jump_index(c: &Curve, opts: &ClassifierOptions) -> Option<usize> {
    let d: Vec<f64> = c.y.windows(2).map(|w| w[1] - w[0]).collect();
    // a jump may be smeared over two steps (e.g. by central differences)
    let mut best: Option<(usize, usize, f64)> = None;
    for i in 0..d.len() {
        for w in 1..=2usize {
            if i + w > d.len() {
                continue;
            }
            let steps = &d[i..i + w];
            if w == 2 && steps[0] * steps[1] <= 0.0 {
                continue;
            }
            let total: f64 = steps.iter().sum();
            if best.map_or(true, |(_, _, t)| total.abs() > t.abs() + 1e-12) {
                best = Some((i, w, total));
            }
        }
    }
    let (i, w, total) = best?;
    if total.abs() < opts.jump_min {
        return None;
    }
    let others = d
        .iter()
        .enumerate()
        .filter(|(j, _)| *j + 1 < i || *j > i + w)
        .map(|(_, v)| v.abs())
        .fold(0.0, f64::max);
    if total.abs() < opts.jump_contrast * others {
        return None;
    }
    // the step inside the smeared pair that carries most of the change
    let k = if w == 2 && d[i + 1].abs() > d[i].abs() { i + 1 } else { i };
    Some(k)
}

/// Least squares for small dense systems; returns coefficients and residual sum
/// of squares. Normal equations with Cholesky, SVD when they are singular.
fn least_squares(rows: &[Vec<f64>], rhs: &[f64]) -> Option<(Vec<f64>, f64)> {
    let p = rows.first()?.len();
    let a = nalgebra::DMatrix::from_fn(rows.len(), p, |i, j| rows[i][j]);
    let b = nalgebra::DVector::from_column_slice(rhs);
    let coef = match (a.transpose() * &a).cholesky() {
        Some(ch) => ch.solve(&(a.transpose() * &b)),
        None => a.clone().svd(true, true).solve(&b, 1e-12).ok()?,
    };
    let res = &a * &coef - &b;
    Some((coef.iter().copied().collect(), res.norm_squared()))
}

struct BrokenLine {
    at: f64,
    slope_left: f64,
    slope_right: f64,
    rss: f64,
}

/// Continuous two-segment linear fit with the break scanned over `(x_a, x_b)`.
fn broken_line(x: &[f64], y: &[f64]) -> Option<BrokenLine> {
    let (x0, x1) = (x[0], x[x.len() - 1]);
    let fit = |b: f64| -> Option<(Vec<f64>, f64)> {
        let rows: Vec<Vec<f64>> = x.iter().map(|&xi| vec![1.0, xi - b, (xi - b).max(0.0)]).collect();
        least_squares(&rows, y)
    };
    let steps = 400;
    let mut best: Option<(f64, f64)> = None;
    for s in 1..steps {
        let b = x0 + (x1 - x0) * s as f64 / steps as f64;
        if let Some((_, rss)) = fit(b) {
            if best.map_or(true, |(_, r)| rss < r) {
                best = Some((b, rss));
            }
        }
    }
    let (mut b, _) = best?;
    // golden-section polish inside the neighbouring scan cells
    let h = (x1 - x0) / steps as f64;
    let (mut lo, mut hi) = ((b - h).max(x0), (b + h).min(x1));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        let r1 = fit(m1).map_or(f64::INFINITY, |f| f.1);
        let r2 = fit(m2).map_or(f64::INFINITY, |f| f.1);
        if r1 < r2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    b = 0.5 * (lo + hi);
    let (coef, rss) = fit(b)?;
    Some(BrokenLine { at: b, slope_left: coef[1], slope_right: coef[1] + coef[2], rss })
}

fn cubic_rss(x: &[f64], y: &[f64]) -> Option<f64> {
    let c = 0.5 * (x[0] + x[x.len() - 1]);
    let rows: Vec<Vec<f64>> = x.iter().map(|&xi| (0..4).map(|p| (xi - c).powi(p)).collect()).collect();
    least_squares(&rows, y).map(|(_, r)| r)
}

struct KinkCandidate {
    at: f64,
    slope_left: f64,
    slope_right: f64,
    contrast: f64,
}

/// Kink test on the window centred at grid index `i`.
fn kink_at(c: &Curve, i: usize, opts: &ClassifierOptions) -> Option<KinkCandidate> {
    let lo = i.saturating_sub(opts.half_window);
    let hi = (i + opts.half_window + 1).min(c.len());
    if hi - lo < 6 || i < 1 || i + 1 >= c.len() {
        return None;
    }
    let (x, y) = (&c.x[lo..hi], &c.y[lo..hi]);
    let line = broken_line(x, y)?;
    // the break must sit within one cell of the window centre
    if line.at < c.x[i - 1] || line.at > c.x[i + 1] {
        return None;
    }
    let cubic = cubic_rss(x, y)?;
    let floor = 1e-24 * x.len() as f64;
    let contrast = (cubic + floor) / (line.rss + floor);
    Some(KinkCandidate { at: line.at, slope_left: line.slope_left, slope_right: line.slope_right, contrast })
}

fn strongest_kink(c: &Curve, opts: &ClassifierOptions, centres: impl Iterator<Item = usize>) -> Option<KinkCandidate> {
    centres
        .filter_map(|i| kink_at(c, i, opts))
        .filter(|k| k.contrast >= opts.kink_contrast && (k.slope_right - k.slope_left).abs() >= opts.kink_min_turn)
        .max_by(|a, b| a.contrast.total_cmp(&b.contrast))
}

fn cusp(c: &Curve, opts: &ClassifierOptions) -> Option<KinkCandidate> {
    let p = c.argmax();
    if p < 2 || p + 2 >= c.len() {
        return None;
    }
    let left_min = c.y[..p].iter().copied().fold(f64::INFINITY, f64::min);
    let right_min = c.y[p + 1..].iter().copied().fold(f64::INFINITY, f64::min);
    if 1.0 - left_min < 0.2 || 1.0 - right_min < 0.2 {
        return None;
    }
    strongest_kink(c, opts, p.saturating_sub(1)..=p + 1).filter(|k| k.slope_left > 0.0 && k.slope_right < 0.0)
}

// ---------------------------------------------------------------------------
// public interface

/// Assigns exactly one signature to a curve; tests run in the order delta,
/// jump, cusp, kink.
pub fn classify(alphas: &[f64], values: &[f64]) -> Result<Classification> {
    classify_with(alphas, values, &ClassifierOptions::default())
}

pub fn classify_with(alphas: &[f64], values: &[f64], opts: &ClassifierOptions) -> Result<Classification> {
    let c = Curve::new(alphas, values)?;
    if c.is_flat() {
        return Ok(Classification::Smooth);
    }
    if delta_index(&c, opts).is_some() {
        return Ok(Classification::Delta);
    }
    if jump_index(&c, opts).is_some() {
        return Ok(Classification::Jump);
    }
    if cusp(&c, opts).is_some() {
        return Ok(Classification::Cusp);
    }
    if strongest_kink(&c, opts, 0..c.len()).is_some() {
        return Ok(Classification::Kink);
    }
    Ok(Classification::Smooth)
}

/// Locates a transition from the requested signature. The uncertainty is half
/// the local grid spacing.
pub fn locate_transition(alphas: &[f64], values: &[f64], signature: Signature) -> Result<Transition> {
    locate_transition_with(alphas, values, signature, &ClassifierOptions::default())
}

pub fn locate_transition_with(
    alphas: &[f64],
    values: &[f64],
    signature: Signature,
    opts: &ClassifierOptions,
) -> Result<Transition> {
    let c = Curve::new(alphas, values)?;
    if c.is_flat() {
        return Err(SbmError::NotFound("indicator is constant".into()));
    }
    let scale = alphas[alphas.len() - 1] - alphas[0];
    let to_alpha = |x: f64| alphas[0] + x * scale;
    let nearest = |a: f64| {
        (0..alphas.len())
            .min_by(|&i, &j| (alphas[i] - a).abs().total_cmp(&(alphas[j] - a).abs()))
            .unwrap_or(0)
    };
    let alpha_c = match signature {
        Signature::Peak => {
            let p = c.argmax();
            if p == 0 || p + 1 == c.len() {
                return Err(SbmError::NotFound("maximum lies on the grid boundary".into()));
            }
            parabola_vertex(&alphas[p - 1..=p + 1], &values[p - 1..=p + 1])
        }
        Signature::Delta => {
            let p = delta_index(&c, opts).ok_or_else(|| SbmError::NotFound("no isolated spike".into()))?;
            alphas[p]
        }
        Signature::Jump => {
            let i = jump_index(&c, opts).ok_or_else(|| SbmError::NotFound("no discontinuous step".into()))?;
            0.5 * (alphas[i] + alphas[i + 1])
        }
        Signature::Kink => {
            let k = strongest_kink(&c, opts, 0..c.len()).ok_or_else(|| SbmError::NotFound("no slope discontinuity".into()))?;
            to_alpha(k.at)
        }
    };
    let uncertainty = match signature {
        Signature::Jump => {
            let i = nearest(alpha_c);
            let j = if alphas[i] <= alpha_c { i } else { i - 1 };
            0.5 * (alphas[j + 1] - alphas[j])
        }
        _ => half_spacing(alphas, nearest(alpha_c)),
    };
    Ok(Transition { alpha_c, uncertainty, signature })
}

/// Vertex of the parabola through three points.
fn parabola_vertex(x: &[f64], y: &[f64]) -> f64 {
    let (x0, x1, x2) = (x[0], x[1], x[2]);
    let (y0, y1, y2) = (y[0], y[1], y[2]);
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        return x1;
    }
    (x1 - 0.5 * num / den).clamp(x0, x2)
}
