//! Analytic toy spectra: one, two, or three distinguished slowly decaying
//! eigenvalues on top of an exponentially large degenerate bulk, with the
//! relative Rényi scalings and forward-backward entropies they imply.
//!
//! All moment sums run in the log domain; the bulk eigenvalue is of order
//! `1/N` with `N ~ 2^{2T}`, so direct sums underflow well inside the
//! physically interesting window.

/// Number of distinguished slowly decaying eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumVariant {
    Single,
    Double,
    Triple,
}

/// Degeneracy of the bulk as a function of time `T`.
///
/// A plain function pointer keeps the model `Copy` and comparable; any
/// positive function is accepted.
pub type BulkCount = fn(f64) -> f64;

/// Default bulk degeneracy `N = 2^{2T} - 2`, clamped to at least 1 so the
/// spectrum stays well defined down to `T = 0`.
pub fn default_bulk_count(t: f64) -> f64 {
    ((2.0 * t).exp2() - 2.0).max(1.0)
}

#[derive(Debug, Clone, Copy)]
pub struct SpectrumModel {
    pub variant: SpectrumVariant,
    /// Stretching exponent of the first distinguished eigenvalue, in (0, 1).
    pub alpha1: f64,
    pub gamma1: f64,
    /// Decay parameters of the second (and third) eigenvalue; unused by
    /// the single variant.
    pub alpha2: f64,
    pub gamma2: f64,
    /// Weight split between the first and the later eigenvalues at T = 0.
    pub r: f64,
    /// Split between the second and third eigenvalue (triple variant).
    pub r_prime: f64,
    pub bulk_count: BulkCount,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ToyError {
    /// A parameter violates its admissible range.
    BadParameter(&'static str),
    /// An eigenvalue came out negative at the given time.
    NegativeEigenvalue { time: f64, eigenvalue: f64 },
}

impl std::fmt::Display for ToyError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ToyError::BadParameter(what) => write!(f, "parameter out of range: {what}"),
            ToyError::NegativeEigenvalue { time, eigenvalue } => {
                write!(f, "negative eigenvalue {eigenvalue} at T = {time}")
            }
        }
    }
}

impl std::error::Error for ToyError {}

fn check_decay(alpha: f64, gamma: f64) -> Result<(), ToyError> {
    if !(0.0 < alpha && alpha < 1.0) {
        return Err(ToyError::BadParameter("alpha must lie in (0, 1)"));
    }
    if gamma <= 0.0 {
        return Err(ToyError::BadParameter("gamma must be positive"));
    }
    Ok(())
}

fn check_split(r: f64, what: &'static str) -> Result<(), ToyError> {
    if !(0.0 < r && r < 1.0) {
        return Err(ToyError::BadParameter(what));
    }
    Ok(())
}

impl SpectrumModel {
    /// `lambda_1 = e^{-gamma T^alpha}` over a flat bulk.
    pub fn single(gamma: f64, alpha: f64) -> Result<Self, ToyError> {
        check_decay(alpha, gamma)?;
        Ok(Self {
            variant: SpectrumVariant::Single,
            alpha1: alpha,
            gamma1: gamma,
            alpha2: alpha,
            gamma2: gamma,
            r: 0.0,
            r_prime: 0.0,
            bulk_count: default_bulk_count,
        })
    }

    /// `lambda_1 = (1-r) e^{-gamma_1 T^{alpha_1}}`,
    /// `lambda_2 = r e^{-gamma_2 T^{alpha_2}}`.
    pub fn double(
        gamma1: f64,
        alpha1: f64,
        gamma2: f64,
        alpha2: f64,
        r: f64,
    ) -> Result<Self, ToyError> {
        check_decay(alpha1, gamma1)?;
        check_decay(alpha2, gamma2)?;
        check_split(r, "r must lie in (0, 1)")?;
        Ok(Self {
            variant: SpectrumVariant::Double,
            alpha1,
            gamma1,
            alpha2,
            gamma2,
            r,
            r_prime: 0.0,
            bulk_count: default_bulk_count,
        })
    }

    /// The double model with the second eigenvalue split once more:
    /// `lambda_2 = r (1-r') e^{-gamma_2 T^{alpha_2}}`,
    /// `lambda_3 = r r' e^{-gamma_2 T^{alpha_2}}`.
    pub fn triple(
        gamma1: f64,
        alpha1: f64,
        gamma2: f64,
        alpha2: f64,
        r: f64,
        r_prime: f64,
    ) -> Result<Self, ToyError> {
        let mut m = Self::double(gamma1, alpha1, gamma2, alpha2, r)?;
        check_split(r_prime, "r_prime must lie in (0, 1)")?;
        m.variant = SpectrumVariant::Triple;
        m.r_prime = r_prime;
        Ok(m)
    }

    pub fn with_bulk_count(mut self, bulk_count: BulkCount) -> Self {
        self.bulk_count = bulk_count;
        self
    }

    /// The distinguished eigenvalues at time `t` (1, 2, or 3 of them).
    pub fn distinguished(&self, t: f64) -> Vec<f64> {
        assert!(t >= 0.0);
        let d1 = (-self.gamma1 * t.powf(self.alpha1)).exp();
        let d2 = (-self.gamma2 * t.powf(self.alpha2)).exp();
        match self.variant {
            SpectrumVariant::Single => vec![d1],
            SpectrumVariant::Double => vec![(1.0 - self.r) * d1, self.r * d2],
            SpectrumVariant::Triple => vec![
                (1.0 - self.r) * d1,
                self.r * (1.0 - self.r_prime) * d2,
                self.r * self.r_prime * d2,
            ],
        }
    }

    /// The full normalized spectrum as `(eigenvalue, multiplicity)` pairs;
    /// the bulk eigenvalue `(1 - sum distinguished) / N` carries
    /// multiplicity `N`.
    pub fn spectrum(&self, t: f64) -> Result<Vec<(f64, f64)>, ToyError> {
        let dist = self.distinguished(t);
        let n_bulk = (self.bulk_count)(t);
        if n_bulk <= 0.0 {
            return Err(ToyError::BadParameter("bulk_count must be positive"));
        }
        let rest = 1.0 - dist.iter().sum::<f64>();
        let bulk = rest / n_bulk;
        let mut out: Vec<(f64, f64)> = dist.into_iter().map(|l| (l, 1.0)).collect();
        out.push((bulk, n_bulk));
        for &(l, _) in &out {
            if l < 0.0 {
                return Err(ToyError::NegativeEigenvalue {
                    time: t,
                    eigenvalue: l,
                });
            }
        }
        Ok(out)
    }

    /// `log sum_i lambda_i^n` with multiplicities, in the log domain.
    /// `n` may be any positive real.
    pub fn log_moment(&self, t: f64, n: f64) -> Result<f64, ToyError> {
        assert!(n > 0.0);
        let spec = self.spectrum(t)?;
        let terms: Vec<f64> = spec
            .iter()
            .filter(|&&(l, _)| l > 0.0)
            .map(|&(l, mult)| mult.ln() + n * l.ln())
            .collect();
        Ok(log_sum_exp(&terms))
    }

    /// Relative Rényi scaling
    /// `Delta_{n,m} = -log sum lambda^n + (n/m) log sum lambda^m`.
    pub fn delta_nm(&self, t: f64, n: u32, m: u32) -> Result<f64, ToyError> {
        assert!(n > m && m >= 2, "requires n > m >= 2");
        let ln = self.log_moment(t, n as f64)?;
        let lm = self.log_moment(t, m as f64)?;
        Ok(-ln + (n as f64 / m as f64) * lm)
    }

    /// Rényi-n entropy of the normalized squared spectrum
    /// `lambda_i^2 / sum_j lambda_j^2` (the forward-backward pure-state
    /// entanglement spectrum). Any positive `n != 1` is allowed.
    pub fn forward_backward_renyi(&self, t: f64, n: f64) -> Result<f64, ToyError> {
        assert!(n > 0.0 && n != 1.0);
        let l2n = self.log_moment(t, 2.0 * n)?;
        let l2 = self.log_moment(t, 2.0)?;
        Ok((l2n - n * l2) / (1.0 - n))
    }
}

/// Numerically stable `log sum_i exp(x_i)`; empty input gives `-inf`.
fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Closed form for the single variant:
/// `Delta_{n,m} = -log(1 + (1/l1 - 1)^n / N^{n-1})
///              + (n/m) log(1 + (1/l1 - 1)^m / N^{m-1})`.
pub fn delta_nm_single_closed_form(model: &SpectrumModel, t: f64, n: u32, m: u32) -> f64 {
    assert_eq!(model.variant, SpectrumVariant::Single);
    let l1 = model.distinguished(t)[0];
    let n_bulk = (model.bulk_count)(t);
    let term = |k: u32| -> f64 {
        // log(1 + (1/l1 - 1)^k / N^{k-1}) without overflow
        let log_ratio = (1.0 / l1 - 1.0).ln() * k as f64 - n_bulk.ln() * (k as f64 - 1.0);
        log_sum_exp(&[0.0, log_ratio])
    };
    -term(n) + (n as f64 / m as f64) * term(m)
}

/// Late-time limit of `Delta_{n,m}` for the triple variant, once the pair
/// `(lambda_2, lambda_3)` with fixed weight ratio `r' : (1 - r')` dominates:
/// `-log[(1-r')^n + r'^n] + (n/m) log[(1-r')^m + r'^m]`.
pub fn delta_nm_triple_asymptote(r_prime: f64, n: u32, m: u32) -> f64 {
    let pair = |k: u32| ((1.0 - r_prime).powi(k as i32) + r_prime.powi(k as i32)).ln();
    -pair(n) + (n as f64 / m as f64) * pair(m)
}

/// Late-time limit of the forward-backward Rényi entropy for the double
/// variant: `(1/(1-n)) log(1 + 1 / ((l1^{2n} + l2^{2n}) N^{2n-1}))`.
pub fn forward_backward_asymptote_double(model: &SpectrumModel, t: f64, n: f64) -> f64 {
    assert_eq!(model.variant, SpectrumVariant::Double);
    let dist = model.distinguished(t);
    let n_bulk = (model.bulk_count)(t);
    let log_pair = log_sum_exp(&[2.0 * n * dist[0].ln(), 2.0 * n * dist[1].ln()]);
    let log_inner = -(log_pair + (2.0 * n - 1.0) * n_bulk.ln());
    log_sum_exp(&[0.0, log_inner]) / (1.0 - n)
}

/// A grid-level local extremum of `Delta_{n,m}` over time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub time: f64,
    pub kind: ExtremumKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExtremumKind {
    Maximum,
    Minimum,
}

/// Differences smaller than this count as flat, not as a sign change.
const EXTREMUM_NOISE: f64 = 1e-10;

/// Locate the local extrema of `Delta_{n,m}(T)` on a strictly increasing
/// grid by sign changes of the discrete differences.
pub fn scan_extrema(
    model: &SpectrumModel,
    n: u32,
    m: u32,
    t_grid: &[f64],
) -> Result<Vec<Extremum>, ToyError> {
    assert!(t_grid.len() >= 3, "need at least 3 grid points");
    assert!(
        t_grid.windows(2).all(|w| w[0] < w[1]),
        "grid must be strictly increasing"
    );
    let values: Vec<f64> = t_grid
        .iter()
        .map(|&t| model.delta_nm(t, n, m))
        .collect::<Result<_, _>>()?;
    let mut out = Vec::new();
    // track the last significant slope sign so flat stretches don't mask
    // a genuine turn
    let mut last_sign = 0i32;
    let mut turn_at = 0usize;
    for k in 1..values.len() {
        let d = values[k] - values[k - 1];
        if d.abs() <= EXTREMUM_NOISE {
            continue;
        }
        let sign = if d > 0.0 { 1 } else { -1 };
        if last_sign != 0 && sign != last_sign {
            out.push(Extremum {
                time: t_grid[turn_at],
                kind: if sign < 0 {
                    ExtremumKind::Maximum
                } else {
                    ExtremumKind::Minimum
                },
            });
        }
        last_sign = sign;
        turn_at = k;
    }
    Ok(out)
}
