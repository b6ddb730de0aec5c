//! Least-squares model fitting: finite-difference derivatives, damped
//! Gauss-Newton fits of power-law / exponential / logarithmic / linear
//! models with constant offsets, window ensembles, and AIC model ranking.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `y = A x^alpha + C`
    PowerLaw,
    /// `y = A exp(-x/tau) + C`
    Exponential,
    /// `y = A log x + C`
    Logarithmic,
    /// `y = A x + C`
    Linear,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::PowerLaw => "power_law",
            ModelKind::Exponential => "exponential",
            ModelKind::Logarithmic => "logarithmic",
            ModelKind::Linear => "linear",
        }
    }

    /// Parameter names, offset last. In derivative mode the offset drops out.
    pub fn param_names(self, derivative_mode: bool) -> &'static [&'static str] {
        match (self, derivative_mode) {
            (ModelKind::PowerLaw, false) => &["A", "alpha", "C"],
            (ModelKind::PowerLaw, true) => &["A", "alpha"],
            (ModelKind::Exponential, false) => &["A", "tau", "C"],
            (ModelKind::Exponential, true) => &["A", "tau"],
            (ModelKind::Logarithmic, false) => &["A", "C"],
            (ModelKind::Logarithmic, true) => &["A"],
            (ModelKind::Linear, false) => &["A", "C"],
            (ModelKind::Linear, true) => &["A"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FitError {
    /// x values must be strictly increasing (duplicates rejected).
    NonIncreasingX,
    TooFewSamples { have: usize, need: usize },
    /// The model is undefined at a sample (e.g. `log x` at `x <= 0`).
    DomainViolation(&'static str),
    /// The normal equations became singular and damping did not help.
    SingularStep { iteration: usize },
    /// Iteration cap hit before the tolerance; carries the last iterate.
    NotConverged(Box<FitModel>),
}

impl fmt::Display for FitError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FitError::NonIncreasingX => write!(f, "x values must be strictly increasing"),
            FitError::TooFewSamples { have, need } => {
                write!(f, "{have} samples, need at least {need}")
            }
            FitError::DomainViolation(what) => write!(f, "model undefined at a sample: {what}"),
            FitError::SingularStep { iteration } => {
                write!(f, "singular normal equations at iteration {iteration}")
            }
            FitError::NotConverged(m) => {
                write!(f, "no convergence in {} iterations (rss {})", m.iterations, m.rss)
            }
        }
    }
}

impl std::error::Error for FitError {}

/// A converged (or last-iterate) fit of one model to one sample window.
#[derive(Debug, Clone, PartialEq)]
pub struct FitModel {
    pub kind: ModelKind,
    pub derivative_mode: bool,
    /// Parameters in the order of [`ModelKind::param_names`].
    pub params: Vec<f64>,
    /// 1-sigma errors from the local quadratic approximation of the
    /// residual surface: `(RSS/(n-k)) (J^T J)^{-1}`.
    pub errors: Vec<f64>,
    pub rss: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Number of samples the fit ran on (after differentiation, if any).
    pub sample_count: usize,
}

impl FitModel {
    /// Look a parameter up by name.
    pub fn param(&self, name: &str) -> Option<(f64, f64)> {
        self.kind
            .param_names(self.derivative_mode)
            .iter()
            .position(|&p| p == name)
            .map(|i| (self.params[i], self.errors[i]))
    }

    pub fn free_params(&self) -> usize {
        self.params.len()
    }
}

/// Centered finite differences in the interior, one-sided at the ends.
pub fn finite_diff(samples: &[(f64, f64)]) -> Result<Vec<(f64, f64)>, FitError> {
    if samples.len() < 2 {
        return Err(FitError::TooFewSamples {
            have: samples.len(),
            need: 2,
        });
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(FitError::NonIncreasingX);
    }
    let n = samples.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = if i == 0 {
            (0, 1)
        } else if i == n - 1 {
            (n - 2, n - 1)
        } else {
            (i - 1, i + 1)
        };
        let d = (samples[hi].1 - samples[lo].1) / (samples[hi].0 - samples[lo].0);
        out.push((samples[i].0, d));
    }
    Ok(out)
}

/// Model value and gradient with respect to the parameters.
fn model_eval(
    kind: ModelKind,
    derivative_mode: bool,
    p: &[f64],
    x: f64,
    grad: &mut [f64],
) -> f64 {
    match (kind, derivative_mode) {
        (ModelKind::PowerLaw, false) => {
            let (a, al) = (p[0], p[1]);
            let xa = x.powf(al);
            grad[0] = xa;
            grad[1] = a * xa * x.ln();
            grad[2] = 1.0;
            a * xa + p[2]
        }
        (ModelKind::PowerLaw, true) => {
            let (a, al) = (p[0], p[1]);
            let xm = x.powf(al - 1.0);
            grad[0] = al * xm;
            grad[1] = a * xm * (1.0 + al * x.ln());
            a * al * xm
        }
        (ModelKind::Exponential, false) => {
            let (a, tau) = (p[0], p[1]);
            let e = (-x / tau).exp();
            grad[0] = e;
            grad[1] = a * e * x / (tau * tau);
            grad[2] = 1.0;
            a * e + p[2]
        }
        (ModelKind::Exponential, true) => {
            let (a, tau) = (p[0], p[1]);
            let e = (-x / tau).exp();
            grad[0] = -e / tau;
            grad[1] = a * e / (tau * tau) * (1.0 - x / tau);
            -a / tau * e
        }
        (ModelKind::Logarithmic, false) => {
            grad[0] = x.ln();
            grad[1] = 1.0;
            p[0] * x.ln() + p[1]
        }
        (ModelKind::Logarithmic, true) => {
            grad[0] = 1.0 / x;
            p[0] / x
        }
        (ModelKind::Linear, false) => {
            grad[0] = x;
            grad[1] = 1.0;
            p[0] * x + p[1]
        }
        (ModelKind::Linear, true) => {
            grad[0] = 1.0;
            p[0]
        }
    }
}

/// Ordinary least squares `y ~ a*x + b`; returns `(a, b)`.
fn linreg(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let sx: f64 = xs.iter().sum();
    let sy: f64 = ys.iter().sum();
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return (0.0, sy / n);
    }
    let a = (n * sxy - sx * sy) / denom;
    (a, (sy - a * sx) / n)
}

/// Regress `ln|y - c0|` against `f(x)` over points a trial offset leaves
/// with a consistent sign; `None` when too few survive.
fn shifted_log_regression(
    data: &[(f64, f64)],
    c0: f64,
    xf: impl Fn(f64) -> f64,
) -> Option<(f64, f64, f64)> {
    let kept: Vec<(f64, f64)> = data
        .iter()
        .filter(|&&(_, y)| (y - c0).abs() > 1e-300)
        .map(|&(x, y)| (x, y - c0))
        .collect();
    if kept.len() < 3 {
        return None;
    }
    let sign = if kept.iter().filter(|&&(_, d)| d > 0.0).count() * 2 >= kept.len() {
        1.0
    } else {
        -1.0
    };
    let same: Vec<(f64, f64)> = kept.into_iter().filter(|&(_, d)| d * sign > 0.0).collect();
    if same.len() < 3 {
        return None;
    }
    let xs: Vec<f64> = same.iter().map(|&(x, _)| xf(x)).collect();
    let ls: Vec<f64> = same.iter().map(|&(_, d)| d.abs().ln()).collect();
    let (slope, inter) = linreg(&xs, &ls);
    Some((slope, inter, sign))
}

/// Three-point offset estimator `C = (y0 y2 - y1^2) / (y0 + y2 - 2 y1)`,
/// exact when `y - C` is geometric over the chosen abscissas.
fn three_point_offset(data: &[(f64, f64)], mid_of: impl Fn(f64, f64) -> f64) -> Option<f64> {
    let (x0, y0) = *data.first()?;
    let (x2, y2) = *data.last()?;
    let target = mid_of(x0, x2);
    let (_, y1) = *data
        .iter()
        .min_by(|a, b| (a.0 - target).abs().total_cmp(&(b.0 - target).abs()))?;
    let denom = y0 + y2 - 2.0 * y1;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((y0 * y2 - y1 * y1) / denom)
}

/// Initial parameter guesses: linear regressions in transformed coordinates
/// on offset-subtracted data; among a few candidate offsets (none, the
/// final sample, a three-point estimator) the one with the smallest initial
/// residual wins.
fn initial_guess(kind: ModelKind, derivative_mode: bool, data: &[(f64, f64)]) -> Vec<f64> {
    let xs: Vec<f64> = data.iter().map(|&(x, _)| x).collect();
    let ys: Vec<f64> = data.iter().map(|&(_, y)| y).collect();
    if derivative_mode {
        return match kind {
            ModelKind::Linear => vec![ys.iter().sum::<f64>() / ys.len() as f64],
            ModelKind::Logarithmic => {
                // y = A/x: least squares A = sum(y/x)/sum(1/x^2)
                let num: f64 = data.iter().map(|&(x, y)| y / x).sum();
                let den: f64 = data.iter().map(|&(x, _)| 1.0 / (x * x)).sum();
                vec![if den > 0.0 { num / den } else { 1.0 }]
            }
            ModelKind::PowerLaw => {
                // |y| = |A alpha| x^{alpha-1}
                let (slope, inter, sign) = shifted_log_regression(data, 0.0, f64::ln)
                    .unwrap_or((0.0, 0.0, 1.0));
                let alpha = slope + 1.0;
                if alpha.abs() > 1e-8 {
                    vec![sign * inter.exp() / alpha, alpha]
                } else {
                    vec![sign * inter.exp(), 0.5]
                }
            }
            ModelKind::Exponential => {
                // y = -(A/tau) e^{-x/tau}: the measured sign is -sign(A)
                let (slope, inter, sign) = shifted_log_regression(data, 0.0, |x| x)
                    .unwrap_or((-1.0, 0.0, 1.0));
                let tau = if slope < -1e-12 { -1.0 / slope } else { 1.0 };
                vec![-sign * inter.exp() * tau, tau]
            }
        };
    }
    match kind {
        ModelKind::Linear => {
            let (a, b) = linreg(&xs, &ys);
            vec![a, b]
        }
        ModelKind::Logarithmic => {
            let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let (a, b) = linreg(&lx, &ys);
            vec![a, b]
        }
        ModelKind::PowerLaw | ModelKind::Exponential => {
            let is_power = kind == ModelKind::PowerLaw;
            let mut candidates = vec![0.0, *ys.last().unwrap()];
            let mid_of = |a: f64, b: f64| {
                if is_power {
                    (a * b).sqrt()
                } else {
                    0.5 * (a + b)
                }
            };
            if let Some(c) = three_point_offset(data, mid_of) {
                candidates.push(c);
            }
            let mut best: Option<(f64, Vec<f64>)> = None;
            let mut grad = vec![0.0; 3];
            for c0 in candidates {
                let xf = |x: f64| if is_power { x.ln() } else { x };
                let Some((slope, inter, sign)) = shifted_log_regression(data, c0, xf) else {
                    continue;
                };
                let p = if is_power {
                    vec![sign * inter.exp(), slope, c0]
                } else {
                    let tau = if slope < -1e-12 { -1.0 / slope } else { 1.0 };
                    vec![sign * inter.exp(), tau, c0]
                };
                let rss: f64 = data
                    .iter()
                    .map(|&(x, y)| {
                        let r = model_eval(kind, false, &p, x, &mut grad) - y;
                        r * r
                    })
                    .sum();
                if rss.is_finite() && best.as_ref().is_none_or(|(b, _)| rss < *b) {
                    best = Some((rss, p));
                }
            }
            best.map(|(_, p)| p).unwrap_or_else(|| {
                if is_power {
                    vec![1.0, 0.5, 0.0]
                } else {
                    vec![1.0, 1.0, 0.0]
                }
            })
        }
    }
}

/// Solve the small symmetric system `M d = b` by Gaussian elimination with
/// partial pivoting; `None` on a vanishing pivot.
fn solve_small(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= m[col][k] * x[k];
        }
        x[col] = acc / m[col][col];
    }
    Some(x)
}

fn check_domain(kind: ModelKind, data: &[(f64, f64)]) -> Result<(), FitError> {
    let needs_positive_x = matches!(
        kind,
        ModelKind::PowerLaw | ModelKind::Logarithmic
    );
    if needs_positive_x && data.iter().any(|&(x, _)| x <= 0.0) {
        return Err(FitError::DomainViolation("x must be positive"));
    }
    Ok(())
}

const MAX_ITERATIONS: usize = 500;
const PARAM_TOLERANCE: f64 = 1e-8;

/// Fit `kind` to the samples by damped Gauss-Newton iteration. With
/// `derivative_mode` the model's analytic derivative is fitted to the
/// finite-difference derivative of the data, removing any constant offset.
pub fn fit_model(
    kind: ModelKind,
    samples: &[(f64, f64)],
    derivative_mode: bool,
) -> Result<FitModel, FitError> {
    let n_params = kind.param_names(derivative_mode).len();
    if samples.len() < n_params + 2 {
        return Err(FitError::TooFewSamples {
            have: samples.len(),
            need: n_params + 2,
        });
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(FitError::NonIncreasingX);
    }
    let data = if derivative_mode {
        finite_diff(samples)?
    } else {
        samples.to_vec()
    };
    check_domain(kind, &data)?;

    let mut p = initial_guess(kind, derivative_mode, &data);
    let mut grad = vec![0.0; n_params];
    let rss_of = |p: &[f64], grad: &mut [f64]| -> f64 {
        data.iter()
            .map(|&(x, y)| {
                let r = model_eval(kind, derivative_mode, p, x, grad) - y;
                r * r
            })
            .sum()
    };
    let mut rss = rss_of(&p, &mut grad);
    let mut damping = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..MAX_ITERATIONS {
        iterations = iter + 1;
        // normal equations J^T J d = -J^T r
        let mut jtj = vec![vec![0.0; n_params]; n_params];
        let mut jtr = vec![0.0; n_params];
        for &(x, y) in &data {
            let r = model_eval(kind, derivative_mode, &p, x, &mut grad) - y;
            for i in 0..n_params {
                jtr[i] += grad[i] * r;
                for j in 0..n_params {
                    jtj[i][j] += grad[i] * grad[j];
                }
            }
        }
        let mut stepped = false;
        for _ in 0..40 {
            let mut damped = jtj.clone();
            for i in 0..n_params {
                damped[i][i] += damping * jtj[i][i].max(1e-300);
            }
            let Some(delta) = solve_small(damped, jtr.iter().map(|r| -r).collect()) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&delta).map(|(a, d)| a + d).collect();
            let trial_rss = rss_of(&trial, &mut grad);
            if trial_rss.is_finite() && trial_rss <= rss * (1.0 + 1e-14) {
                let rel_step = delta
                    .iter()
                    .zip(&p)
                    .map(|(d, v)| d.abs() / v.abs().max(1e-12))
                    .fold(0.0, f64::max);
                // either the parameters stopped moving or the residual can
                // no longer improve (stalled at a minimum, possibly exact)
                let stalled = rss - trial_rss <= 1e-12 * rss.max(1e-300);
                p = trial;
                rss = trial_rss;
                damping = (damping / 3.0).max(1e-12);
                stepped = true;
                if rel_step < PARAM_TOLERANCE || stalled {
                    converged = true;
                }
                break;
            }
            damping *= 10.0;
        }
        if converged {
            break;
        }
        if !stepped {
            // no descent direction left: either at a minimum or stuck
            if damping > 1e12 {
                converged = rss.is_finite();
                break;
            }
            return Err(FitError::SingularStep { iteration: iter });
        }
    }

    // 1-sigma errors from (RSS/(n-k)) (J^T J)^{-1}
    let mut jtj = vec![vec![0.0; n_params]; n_params];
    for &(x, _) in &data {
        model_eval(kind, derivative_mode, &p, x, &mut grad);
        for i in 0..n_params {
            for j in 0..n_params {
                jtj[i][j] += grad[i] * grad[j];
            }
        }
    }
    let dof = data.len().saturating_sub(n_params).max(1) as f64;
    let sigma2 = rss / dof;
    let mut errors = vec![0.0; n_params];
    for i in 0..n_params {
        let mut e = vec![0.0; n_params];
        e[i] = 1.0;
        if let Some(col) = solve_small(jtj.clone(), e) {
            errors[i] = (sigma2 * col[i].max(0.0)).sqrt();
        }
    }

    let model = FitModel {
        kind,
        derivative_mode,
        params: p,
        errors,
        rss,
        converged,
        iterations,
        sample_count: data.len(),
    };
    if converged {
        Ok(model)
    } else {
        Err(FitError::NotConverged(Box::new(model)))
    }
}

/// One fit per window lower bound, plus the ensemble aggregate.
#[derive(Debug, Clone)]
pub struct FitEnsemble {
    pub kind: ModelKind,
    /// `(lower bound, fit)` for every converged member.
    pub members: Vec<(f64, FitModel)>,
    /// Lower bounds whose fits failed; excluded from the aggregates.
    pub failed: Vec<f64>,
    /// Arithmetic mean of each parameter over converged members.
    pub mean_params: Vec<f64>,
    /// Quadrature of the ensemble standard deviation and mean fit error.
    pub propagated_errors: Vec<f64>,
    /// Slope of each parameter against the window lower bound — a drift
    /// indicator for crossovers.
    pub trend: Vec<f64>,
}

/// Fit every window `[lower, upper_bound]` and aggregate.
pub fn window_ensemble(
    kind: ModelKind,
    samples: &[(f64, f64)],
    lower_bounds: &[f64],
    upper_bound: f64,
    derivative_mode: bool,
) -> Result<FitEnsemble, FitError> {
    let mut members = Vec::new();
    let mut failed = Vec::new();
    for &lo in lower_bounds {
        let window: Vec<(f64, f64)> = samples
            .iter()
            .copied()
            .filter(|&(x, _)| x >= lo && x <= upper_bound)
            .collect();
        match fit_model(kind, &window, derivative_mode) {
            Ok(m) => members.push((lo, m)),
            Err(FitError::TooFewSamples { have, need }) => {
                return Err(FitError::TooFewSamples { have, need })
            }
            Err(_) => failed.push(lo),
        }
    }
    if members.is_empty() {
        return Err(FitError::TooFewSamples { have: 0, need: 1 });
    }
    let n_params = members[0].1.params.len();
    let count = members.len() as f64;
    let mut mean_params = vec![0.0; n_params];
    let mut mean_errors = vec![0.0; n_params];
    for (_, m) in &members {
        for i in 0..n_params {
            mean_params[i] += m.params[i] / count;
            mean_errors[i] += m.errors[i] / count;
        }
    }
    let mut propagated_errors = vec![0.0; n_params];
    let mut trend = vec![0.0; n_params];
    let lows: Vec<f64> = members.iter().map(|&(lo, _)| lo).collect();
    for i in 0..n_params {
        let var: f64 = members
            .iter()
            .map(|(_, m)| (m.params[i] - mean_params[i]).powi(2))
            .sum::<f64>()
            / count;
        propagated_errors[i] = (var + mean_errors[i] * mean_errors[i]).sqrt();
        let vals: Vec<f64> = members.iter().map(|(_, m)| m.params[i]).collect();
        trend[i] = linreg(&lows, &vals).0;
    }
    Ok(FitEnsemble {
        kind,
        members,
        failed,
        mean_params,
        propagated_errors,
        trend,
    })
}

/// `value ± error` with the error rounded to three significant digits and
/// the value to the matching decimal place, e.g. `0.616 ± 0.0396`.
pub fn format_value_error(value: f64, error: f64) -> String {
    if error <= 0.0 || !error.is_finite() {
        return format!("{value} ± {error}");
    }
    let err_digits = (2 - error.abs().log10().floor() as i64).max(0) as usize;
    let val_digits = err_digits.saturating_sub(1);
    format!("{value:.val_digits$} ± {error:.err_digits$}")
}

/// One ranked entry of an AIC comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct AicEntry {
    pub kind: ModelKind,
    pub aic: f64,
    pub winner: bool,
    /// Tied with the winner within 1e-12 but ranked later by declaration
    /// order.
    pub tied: bool,
}

/// Akaike information criterion `2k + n ln(RSS/n)`; a perfect fit
/// (`RSS = 0`) gets `-inf` and wins automatically. `corrected` adds the
/// small-sample term `2k(k+1)/(n-k-1)`.
pub fn aic_value(fit: &FitModel, sample_count: usize, corrected: bool) -> f64 {
    let k = fit.free_params() as f64;
    let n = sample_count as f64;
    if fit.rss <= 0.0 {
        return f64::NEG_INFINITY;
    }
    let mut aic = 2.0 * k + n * (fit.rss / n).ln();
    if corrected && n - k - 1.0 > 0.0 {
        aic += 2.0 * k * (k + 1.0) / (n - k - 1.0);
    }
    aic
}

/// Rank fits of the same data by AIC (ascending, lower wins). Ties keep the
/// declaration order and are flagged.
pub fn aic_compare(fits: &[FitModel], sample_count: usize, corrected: bool) -> Vec<AicEntry> {
    let mut entries: Vec<AicEntry> = fits
        .iter()
        .map(|f| AicEntry {
            kind: f.kind,
            aic: aic_value(f, sample_count, corrected),
            winner: false,
            tied: false,
        })
        .collect();
    // stable sort preserves declaration order among ties
    entries.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    if let Some(first) = entries.first().map(|e| e.aic) {
        entries[0].winner = true;
        for e in entries.iter_mut().skip(1) {
            e.tied = (e.aic - first).abs() < 1e-12 || (e.aic == first);
        }
    }
    entries
}

/// Win-count summary line, e.g. `16 / 25, exponential`.
pub fn format_win_loss(wins: usize, total: usize, kind: ModelKind) -> String {
    format!("{wins} / {total}, {}", kind.name())
}
