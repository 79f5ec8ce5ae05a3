//! Growth-curve fitting of the cumulative region count: cubic least
//! squares, a damped Gauss-Newton hyperbolic-tangent fit, and projection
//! of fitted curves.

use thiserror::Error;

use crate::linalg;

/// Gauss-Newton iteration cap for the tanh fit.
pub const TANH_MAX_ITERATIONS: u32 = 500;
pub const MIN_CUBIC_POINTS: usize = 4;
pub const MIN_TANH_POINTS: usize = 5;

/// Converged when an accepted step improves rss by less than this,
/// relatively, or the gradient norm falls below [`GRADIENT_TOL`].
const RSS_RELATIVE_TOL: f64 = 1e-10;
const GRADIENT_TOL: f64 = 1e-8;
/// Hard error when the cubic design is conditioned worse than this.
const MAX_DESIGN_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    Cubic,
    Tanh,
}

impl FitModel {
    pub fn as_str(&self) -> &'static str {
        match self {
            FitModel::Cubic => "cubic",
            FitModel::Tanh => "tanh",
        }
    }

    pub fn parse(s: &str) -> Option<FitModel> {
        match s {
            "cubic" => Some(FitModel::Cubic),
            "tanh" => Some(FitModel::Tanh),
            _ => None,
        }
    }

    pub fn min_points(&self) -> usize {
        match self {
            FitModel::Cubic => MIN_CUBIC_POINTS,
            FitModel::Tanh => MIN_TANH_POINTS,
        }
    }
}

/// A fitted model. Parameters are ordered (a₃, a₂, a₁, a₀) for the cubic
/// and (α, β, c, γ) for α·tanh(β(x−c)) + γ, with β > 0 on a converged
/// tanh fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub model: FitModel,
    pub params: Vec<f64>,
    pub rss: f64,
    pub converged: bool,
    pub iterations: u32,
}

#[derive(Debug, Error)]
pub enum FitError {
    #[error("need at least {needed} points for a {model} fit, got {got}")]
    TooFewPoints {
        model: &'static str,
        needed: usize,
        got: usize,
    },
    #[error("x and y lengths differ: {x} vs {y}")]
    LengthMismatch { x: usize, y: usize },
    #[error("x values must be strictly increasing")]
    NonIncreasingX,
    #[error("series values must be finite")]
    NonFinite,
    #[error("degenerate series: {0}")]
    Degenerate(&'static str),
    #[error("cubic design is ill-conditioned (cond ≈ {0:.3e})")]
    IllConditioned(f64),
    #[error("tanh fit did not converge within {TANH_MAX_ITERATIONS} iterations (best rss {})", .0.rss)]
    NoConvergence(FitResult),
    #[error("cannot extrapolate from an unconverged fit")]
    NotConverged,
}

/// Day-indexed series: x is a 1-based day index from a configured origin
/// date, y the cumulative region count on that day.
///
/// x must be strictly increasing. Cumulative series from the pipeline are
/// non-decreasing in y by construction; noisy synthetic series are
/// accepted here so fits can be exercised against generated data.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthSeries {
    x: Vec<i64>,
    y: Vec<f64>,
}

impl GrowthSeries {
    pub fn new(x: Vec<i64>, y: Vec<f64>) -> Result<GrowthSeries, FitError> {
        if x.len() != y.len() {
            return Err(FitError::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        if x.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FitError::NonIncreasingX);
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FitError::NonFinite);
        }
        Ok(GrowthSeries { x, y })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn x(&self) -> &[i64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }
}

/// Degree-3 polynomial least squares by Householder QR, with a hard
/// condition-number check on the design. Direct solve: `iterations` is 0
/// and `converged` always true.
pub fn fit_cubic(series: &GrowthSeries) -> Result<FitResult, FitError> {
    let n = series.len();
    if n < MIN_CUBIC_POINTS {
        return Err(FitError::TooFewPoints {
            model: "cubic",
            needed: MIN_CUBIC_POINTS,
            got: n,
        });
    }
    let mut design = Vec::with_capacity(n * 4);
    for &xi in series.x() {
        let x = xi as f64;
        design.extend_from_slice(&[x * x * x, x * x, x, 1.0]);
    }
    let cond = design_condition(&design, n);
    if cond.is_nan() || cond > MAX_DESIGN_CONDITION {
        return Err(FitError::IllConditioned(cond));
    }
    let params = linalg::lstsq_qr(&design, n, 4, series.y())
        .ok_or(FitError::Degenerate("rank-deficient cubic design"))?;
    let rss = series
        .x()
        .iter()
        .zip(series.y())
        .map(|(&x, &y)| {
            let r = y - eval_cubic(&params, x as f64);
            r * r
        })
        .sum();
    Ok(FitResult {
        model: FitModel::Cubic,
        params,
        rss,
        converged: true,
        iterations: 0,
    })
}

/// cond₂ of the design via the eigenvalues of its 4×4 normal matrix.
fn design_condition(design: &[f64], rows: usize) -> f64 {
    let mut ata = [0.0f64; 16];
    for r in 0..rows {
        let row = &design[r * 4..(r + 1) * 4];
        for i in 0..4 {
            for j in 0..4 {
                ata[i * 4 + j] += row[i] * row[j];
            }
        }
    }
    let ev = linalg::sym_eigenvalues_small(&ata, 4);
    if ev[0] <= 0.0 {
        return f64::INFINITY;
    }
    (ev[3] / ev[0]).sqrt()
}

fn eval_cubic(p: &[f64], x: f64) -> f64 {
    ((p[0] * x + p[1]) * x + p[2]) * x + p[3]
}

/// α·tanh(β(x−c)) + γ.
pub fn tanh_model(p: &[f64; 4], x: f64) -> f64 {
    p[0] * (p[1] * (x - p[2])).tanh() + p[3]
}

/// Partial derivatives of the model value with respect to (α, β, c, γ).
pub fn tanh_model_gradient(p: &[f64; 4], x: f64) -> [f64; 4] {
    let u = p[1] * (x - p[2]);
    let t = u.tanh();
    let sech2 = {
        let ch = u.cosh();
        1.0 / (ch * ch) // underflows to 0 for large |u|, as the true value does
    };
    [t, p[0] * (x - p[2]) * sech2, -p[0] * p[1] * sech2, 1.0]
}

/// Hyperbolic-tangent fit by Gauss-Newton with Levenberg-style damping:
/// steps solve (JᵀJ + λI) δ = Jᵀr, λ shrinks on accepted steps and grows
/// on rejected ones, so rss never increases across accepted steps.
///
/// Converged when an accepted step improves rss by a relative factor
/// below 1e-10 or the gradient norm drops under 1e-8. The sign ambiguity
/// (α, β) → (−α, −β) is resolved to β > 0 on success.
pub fn fit_tanh(series: &GrowthSeries, init: Option<[f64; 4]>) -> Result<FitResult, FitError> {
    let n = series.len();
    if n < MIN_TANH_POINTS {
        return Err(FitError::TooFewPoints {
            model: "tanh",
            needed: MIN_TANH_POINTS,
            got: n,
        });
    }
    let y = series.y();
    if y.iter().all(|&v| v == y[0]) {
        return Err(FitError::Degenerate("all y equal, β is unidentifiable"));
    }

    let xs: Vec<f64> = series.x().iter().map(|&x| x as f64).collect();
    let rss_of = |p: &[f64; 4]| -> f64 {
        xs.iter()
            .zip(y)
            .map(|(&x, &yi)| {
                let r = yi - tanh_model(p, x);
                r * r
            })
            .sum()
    };

    let mut p = init.unwrap_or_else(|| default_tanh_init(&xs, y));
    let mut rss = rss_of(&p);
    if !rss.is_finite() {
        return Err(FitError::Degenerate("initial parameters give non-finite rss"));
    }
    let mut lambda = 1e-3;
    let mut iterations = 0u32;
    let mut converged = false;

    'outer: while iterations < TANH_MAX_ITERATIONS {
        iterations += 1;

        let mut jtj = [0.0f64; 16];
        let mut jtr = [0.0f64; 4];
        for (&x, &yi) in xs.iter().zip(y) {
            let g = tanh_model_gradient(&p, x);
            let r = yi - tanh_model(&p, x);
            for i in 0..4 {
                jtr[i] += g[i] * r;
                for j in 0..4 {
                    jtj[i * 4 + j] += g[i] * g[j];
                }
            }
        }
        let grad_norm = jtr.iter().map(|v| v * v).sum::<f64>().sqrt();
        if grad_norm < GRADIENT_TOL {
            converged = true;
            break;
        }

        let rss_before = rss;
        loop {
            let mut damped = jtj;
            for i in 0..4 {
                damped[i * 4 + i] += lambda;
            }
            let step = linalg::Cholesky::factor(&damped, 4).map(|f| f.solve(&jtr));
            let trial = step.map(|delta| {
                let q = [
                    p[0] + delta[0],
                    p[1] + delta[1],
                    p[2] + delta[2],
                    p[3] + delta[3],
                ];
                let trial_rss = rss_of(&q);
                (delta, q, trial_rss)
            });
            match trial {
                Some((delta, q, trial_rss)) if trial_rss.is_finite() && trial_rss <= rss => {
                    debug_assert!(trial_rss <= rss);
                    p = q;
                    rss = trial_rss;
                    lambda = (lambda / 10.0).max(1e-12);
                    // ride flat valleys: keep doubling the accepted step
                    // while it still lowers rss (monotonicity preserved)
                    let mut dir = delta;
                    for _ in 0..60 {
                        for v in dir.iter_mut() {
                            *v *= 2.0;
                        }
                        let q2 = [p[0] + dir[0], p[1] + dir[1], p[2] + dir[2], p[3] + dir[3]];
                        let rss2 = rss_of(&q2);
                        if rss2.is_finite() && rss2 < rss {
                            p = q2;
                            rss = rss2;
                        } else {
                            break;
                        }
                    }
                    break;
                }
                _ => {
                    lambda *= 10.0;
                    if lambda > 1e12 {
                        break 'outer; // diverged
                    }
                }
            }
        }
        let improvement = (rss_before - rss) / rss_before.max(f64::MIN_POSITIVE);
        if improvement < RSS_RELATIVE_TOL {
            converged = true;
            break;
        }
    }

    canonicalize_sign(&mut p);
    let result = FitResult {
        model: FitModel::Tanh,
        params: p.to_vec(),
        rss,
        converged,
        iterations,
    };
    if converged {
        Ok(result)
    } else {
        Err(FitError::NoConvergence(result))
    }
}

/// Standard sigmoid-fit heuristics: level from the mean, amplitude from
/// the range, center from the first mean crossing, slope from the largest
/// first difference.
fn default_tanh_init(xs: &[f64], y: &[f64]) -> [f64; 4] {
    let n = y.len();
    let mean = y.iter().sum::<f64>() / n as f64;
    let (ymin, ymax) = y
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = ymax - ymin;

    let rising = y[n - 1] >= y[0];
    let crossing = (0..n)
        .find(|&i| {
            if rising {
                y[i] >= mean
            } else {
                y[i] <= mean
            }
        })
        .unwrap_or(n / 2);
    let c0 = xs[crossing];

    let mut max_slope = f64::NEG_INFINITY;
    for i in 0..n - 1 {
        let s = (y[i + 1] - y[i]) / (xs[i + 1] - xs[i]);
        max_slope = max_slope.max(s);
    }
    let mut beta0 = 4.0 * max_slope / range;
    if !beta0.is_finite() || beta0.abs() < 1e-6 {
        beta0 = if rising { 0.01 } else { -0.01 };
    }

    [range / 2.0, beta0, c0, mean]
}

fn canonicalize_sign(p: &mut [f64; 4]) {
    if p[1] < 0.0 {
        p[0] = -p[0];
        p[1] = -p[1];
    }
}

/// Evaluate a fitted model pointwise, no clamping. Tanh fits must have
/// converged; the cubic solution is always exact.
pub fn extrapolate(fit: &FitResult, x_values: &[f64]) -> Result<Vec<f64>, FitError> {
    if !fit.converged {
        return Err(FitError::NotConverged);
    }
    let p: [f64; 4] = fit.params[..]
        .try_into()
        .map_err(|_| FitError::Degenerate("expected 4 parameters"))?;
    Ok(x_values
        .iter()
        .map(|&x| match fit.model {
            FitModel::Cubic => eval_cubic(&p, x),
            FitModel::Tanh => tanh_model(&p, x),
        })
        .collect())
}
