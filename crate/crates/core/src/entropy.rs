//! Convex entropy functions Φ on (0, ∞), their construction as convex
//! conjugates of utilities, the growth condition `Φ⁺(λy) ≤ αΦ⁺(y) + β(y+1)`,
//! and generalized entropy `E[Φ(dQ/dP)]` of discrete measures.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numeric::{
    maximize_concave, sum_series, ScalarMaxOutcome, SeriesOptions, SeriesSum,
};

/// Tolerance for value comparisons.
pub const VALUE_TOL: f64 = 1e-8;
/// Tolerance for probability normalization.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A utility function: strictly concave, increasing and finite on ℝ in the
/// ordinary case. Custom evaluators may break those rules on purpose (the
/// degenerate point-supported function whose conjugate is the identity);
/// [`UtilitySpec::validate`] reports whether the rules hold numerically.
#[derive(Clone)]
pub enum UtilitySpec {
    /// `u(x) = -exp(-rate * x)`, `rate > 0`.
    Exponential { rate: f64 },
    /// Arbitrary evaluator; may return `-inf` outside its effective domain.
    Custom {
        evaluator: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        known_concave: bool,
    },
}

impl fmt::Debug for UtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UtilitySpec::Exponential { rate } => write!(f, "Exponential {{ rate: {rate} }}"),
            UtilitySpec::Custom { known_concave, .. } => {
                write!(f, "Custom {{ known_concave: {known_concave} }}")
            }
        }
    }
}

impl UtilitySpec {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::domain(format!("exponential rate must be > 0, got {rate}")));
        }
        Ok(UtilitySpec::Exponential { rate })
    }

    pub fn custom<F: Fn(f64) -> f64 + Send + Sync + 'static>(f: F, known_concave: bool) -> Self {
        UtilitySpec::Custom { evaluator: Arc::new(f), known_concave }
    }

    /// The degenerate function that is 0 at `x = -1` and `-inf` elsewhere;
    /// its conjugate is the identity. It is not a utility (not increasing)
    /// and [`UtilitySpec::validate`] rejects it, but the conjugate search
    /// still handles it as a single-point supremum.
    pub fn point_supported_at_minus_one() -> Self {
        UtilitySpec::custom(|x| if x == -1.0 { 0.0 } else { f64::NEG_INFINITY }, false)
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            UtilitySpec::Exponential { rate } => -(-rate * x).exp(),
            UtilitySpec::Custom { evaluator, .. } => evaluator(x),
        }
    }

    /// Midpoint concavity and monotone nondecrease on a sample grid.
    pub fn validate(&self) -> Result<()> {
        let grid: Vec<f64> = (-40..=40).map(|k| k as f64 * 0.25).collect();
        let vals: Vec<f64> = grid.iter().map(|&x| self.eval(x)).collect();
        for w in vals.windows(2) {
            if w[1] < w[0] - VALUE_TOL {
                return Err(Error::domain(format!(
                    "utility is not nondecreasing on the sample grid ({} -> {})",
                    w[0], w[1]
                )));
            }
        }
        for i in 0..grid.len() - 2 {
            let (a, b) = (vals[i], vals[i + 2]);
            let mid = vals[i + 1];
            if a.is_finite() && b.is_finite() && mid < 0.5 * (a + b) - VALUE_TOL {
                return Err(Error::domain(format!(
                    "utility fails midpoint concavity near x = {}",
                    grid[i + 1]
                )));
            }
        }
        Ok(())
    }
}

/// Convex conjugate `Φ(y) = sup_x { u(x) - x y }` located by bracket
/// expansion and golden-section search (tolerance 1e-10 on x). For the
/// exponential kind the closed form `(y/rate)(ln(y/rate) - 1)` must agree
/// with the numeric search.
pub fn conjugate_of_utility(u: &UtilitySpec, y: f64) -> Result<f64> {
    if !(y > 0.0) {
        return Err(Error::domain(format!("conjugate argument must be > 0, got {y}")));
    }
    let objective = |x: f64| u.eval(x) - x * y;
    let numeric = match maximize_concave(objective, 1e-10, 1e8)? {
        ScalarMaxOutcome::Converged(m) => m.value,
        ScalarMaxOutcome::Unbounded { reached } => {
            return Err(Error::UnboundedConjugate { y, reached })
        }
    };
    if let UtilitySpec::Exponential { rate } = u {
        let z = y / rate;
        let closed = z * (z.ln() - 1.0);
        if (numeric - closed).abs() > VALUE_TOL * closed.abs().max(1.0) {
            return Err(Error::domain(format!(
                "conjugate search ({numeric}) disagrees with closed form ({closed}) at y = {y}"
            )));
        }
    }
    Ok(numeric)
}

/// The kind of entropy function.
#[derive(Debug, Clone)]
pub enum PhiKind {
    /// `Φ(y) = y`.
    Identity,
    /// `Φ(y) = y^p`, `p > 1`.
    Power { exponent: f64 },
    /// `Φ(y) = -ln y` on (0, 1], `y² - 3y + 2` on (1, ∞). Strictly convex,
    /// differentiable, with `Φ(0) = +inf`: the stock specimen of an entropy
    /// blowing up on vanishing densities.
    LogQuadratic,
    /// Convex conjugate of a utility.
    Conjugate { utility: UtilitySpec },
}

/// An entropy function Φ with its cached limit at 0.
#[derive(Debug, Clone)]
pub struct EntropySpec {
    kind: PhiKind,
    phi_at_zero: f64,
}

impl EntropySpec {
    pub fn identity() -> Self {
        EntropySpec { kind: PhiKind::Identity, phi_at_zero: 0.0 }
    }

    pub fn power(exponent: f64) -> Result<Self> {
        if !(exponent > 1.0) {
            return Err(Error::domain(format!("power exponent must be > 1, got {exponent}")));
        }
        Ok(EntropySpec { kind: PhiKind::Power { exponent }, phi_at_zero: 0.0 })
    }

    pub fn log_quadratic() -> Self {
        EntropySpec { kind: PhiKind::LogQuadratic, phi_at_zero: f64::INFINITY }
    }

    /// Build Φ as the conjugate of `u`; the limit at 0 is extrapolated
    /// numerically on `y = 10^-2, 10^-4, ...` and flagged `+inf` when the
    /// sequence diverges monotonically.
    pub fn conjugate(utility: UtilitySpec) -> Result<Self> {
        let mut prev: Option<f64> = None;
        let mut increasing = true;
        let mut last = f64::NAN;
        let mut settled = false;
        for k in 1..=8 {
            let y = 10f64.powi(-2 * k);
            let v = conjugate_of_utility(&utility, y)?;
            if let Some(p) = prev {
                if v < p - 1e-12 {
                    increasing = false;
                }
                if (v - p).abs() <= VALUE_TOL * v.abs().max(1.0) {
                    settled = true;
                    last = v;
                    break;
                }
            }
            prev = Some(v);
            last = v;
        }
        let phi_at_zero = if !settled && increasing && last > 1e8 { f64::INFINITY } else { last };
        Ok(EntropySpec { kind: PhiKind::Conjugate { utility }, phi_at_zero })
    }

    pub fn kind(&self) -> &PhiKind {
        &self.kind
    }

    /// Cached `lim_{y↓0} Φ(y)` (possibly `+inf`).
    pub fn phi_at_zero(&self) -> f64 {
        self.phi_at_zero
    }

    pub fn label(&self) -> String {
        match &self.kind {
            PhiKind::Identity => "identity".to_string(),
            PhiKind::Power { exponent } if *exponent == 2.0 => "power2".to_string(),
            PhiKind::Power { exponent } => format!("power{exponent}"),
            PhiKind::LogQuadratic => "log-quadratic".to_string(),
            PhiKind::Conjugate { .. } => "conjugate".to_string(),
        }
    }

    /// Evaluate `Φ(y)` for `y > 0`.
    pub fn eval(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) {
            return Err(Error::domain(format!("Φ is defined on (0, ∞), got y = {y}")));
        }
        match &self.kind {
            PhiKind::Identity => Ok(y),
            PhiKind::Power { exponent } => {
                if *exponent == 2.0 {
                    Ok(y * y)
                } else {
                    Ok(y.powf(*exponent))
                }
            }
            PhiKind::LogQuadratic => {
                if y <= 1.0 {
                    Ok(-y.ln())
                } else {
                    Ok(y * y - 3.0 * y + 2.0)
                }
            }
            PhiKind::Conjugate { utility } => conjugate_of_utility(utility, y),
        }
    }

    /// `Φ(y)` extended by the cached limit at `y = 0`.
    fn eval_with_zero(&self, y: f64) -> Result<f64> {
        if y == 0.0 {
            Ok(self.phi_at_zero)
        } else {
            self.eval(y)
        }
    }

    /// Midpoint convexity on a logarithmic grid over [1e-6, 1e6].
    pub fn validate_convexity(&self) -> Result<()> {
        let points = 49;
        for i in 0..points - 2 {
            let t0 = -6.0 + 12.0 * i as f64 / (points - 1) as f64;
            let t2 = -6.0 + 12.0 * (i + 2) as f64 / (points - 1) as f64;
            let (y0, y2) = (10f64.powf(t0), 10f64.powf(t2));
            let mid = 0.5 * (y0 + y2);
            let lhs = self.eval(mid)?;
            let rhs = 0.5 * (self.eval(y0)? + self.eval(y2)?);
            if lhs > rhs + VALUE_TOL * rhs.abs().max(1.0) {
                return Err(Error::domain(format!(
                    "midpoint convexity fails between y = {y0} and y = {y2}"
                )));
            }
        }
        Ok(())
    }
}

/// `eval_phi` of the operation table; method form is [`EntropySpec::eval`].
pub fn eval_phi(spec: &EntropySpec, y: f64) -> Result<f64> {
    spec.eval(y)
}

/// Outcome of the growth-condition search. A numeric verdict on the given
/// grids, not a proof; the grids used are echoed in the report.
#[derive(Debug, Clone)]
pub struct GrowthCheck {
    pub y_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    pub outcome: GrowthOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GrowthOutcome {
    /// Smallest witness pair found (β scanned outermost, then α, both
    /// ascending over the candidate grids).
    Holds { alpha: f64, beta: f64 },
    /// No candidate pair works; the worst (y, λ) sample measured against
    /// the largest candidate pair.
    Counterexample { y: f64, lambda: f64, deficit: f64 },
}

const GROWTH_CAP: f64 = 1e9;

/// Search for (α, β) with `Φ⁺(λy) ≤ αΦ⁺(y) + β(y+1)` on all grid samples,
/// λ running over a geometric sub-grid of `[λ0, λ1]`. Candidate α values
/// are powers of two joined with λ1 and λ1² so that exactly homogeneous Φ
/// get their natural witnesses.
pub fn check_growth_condition(
    spec: &EntropySpec,
    lambda0: f64,
    lambda1: f64,
    y_grid: &[f64],
) -> Result<GrowthCheck> {
    let spec = spec.clone();
    growth_check_impl(move |y| spec.eval(y), lambda0, lambda1, y_grid)
}

/// Growth check against a raw Φ evaluator, for functions outside the
/// [`EntropySpec`] kinds.
pub fn check_growth_condition_fn<F: Fn(f64) -> f64>(
    phi: F,
    lambda0: f64,
    lambda1: f64,
    y_grid: &[f64],
) -> Result<GrowthCheck> {
    growth_check_impl(move |y| Ok(phi(y)), lambda0, lambda1, y_grid)
}

fn growth_check_impl<F: Fn(f64) -> Result<f64>>(
    phi: F,
    lambda0: f64,
    lambda1: f64,
    y_grid: &[f64],
) -> Result<GrowthCheck> {
    if !(lambda0 > 0.0) || !(lambda1 >= lambda0) {
        return Err(Error::domain(format!(
            "growth check needs 0 < λ0 ≤ λ1, got [{lambda0}, {lambda1}]"
        )));
    }
    if y_grid.is_empty() || y_grid.iter().any(|&y| !(y > 0.0)) {
        return Err(Error::domain("y grid must be nonempty with positive entries".to_string()));
    }

    let lambda_grid: Vec<f64> = if lambda0 == lambda1 {
        vec![lambda0]
    } else {
        let pts = 9;
        (0..pts)
            .map(|i| lambda0 * (lambda1 / lambda0).powf(i as f64 / (pts - 1) as f64))
            .collect()
    };

    // Sample table: (y, λ, Φ⁺(λy), Φ⁺(y)).
    let mut samples: Vec<(f64, f64, f64, f64)> = Vec::new();
    for &y in y_grid {
        let base = phi(y)?.max(0.0);
        for &lam in &lambda_grid {
            samples.push((y, lam, phi(lam * y)?.max(0.0), base));
        }
    }

    let mut alphas: Vec<f64> = vec![1.0, lambda1, lambda1 * lambda1];
    let mut v = 1.0;
    while v <= GROWTH_CAP {
        alphas.push(v);
        v *= 2.0;
    }
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();
    alphas.retain(|&a| a <= GROWTH_CAP);

    let mut betas: Vec<f64> = vec![0.0];
    let mut v = 1.0;
    while v <= GROWTH_CAP {
        betas.push(v);
        v *= 2.0;
    }

    let satisfies = |alpha: f64, beta: f64| {
        samples.iter().all(|&(y, _lam, lhs, base)| {
            let rhs = alpha * base + beta * (y + 1.0);
            !rhs.is_finite() || lhs <= rhs + 1e-12 * rhs.abs().max(1.0)
        })
    };

    for &beta in &betas {
        for &alpha in &alphas {
            if satisfies(alpha, beta) {
                return Ok(GrowthCheck {
                    y_grid: y_grid.to_vec(),
                    lambda_grid,
                    outcome: GrowthOutcome::Holds { alpha, beta },
                });
            }
        }
    }

    // No witness: report the sample with the largest deficit at the most
    // generous candidate pair.
    let mut worst = (0.0, 0.0, f64::NEG_INFINITY);
    for &(y, lam, lhs, base) in &samples {
        let rhs = GROWTH_CAP * base + GROWTH_CAP * (y + 1.0);
        let deficit = if rhs.is_finite() { lhs - rhs } else { f64::NEG_INFINITY };
        if deficit > worst.2 || (lhs == f64::INFINITY && rhs.is_finite()) {
            worst = (y, lam, deficit);
        }
    }
    Ok(GrowthCheck {
        y_grid: y_grid.to_vec(),
        lambda_grid,
        outcome: GrowthOutcome::Counterexample { y: worst.0, lambda: worst.1, deficit: worst.2 },
    })
}

/// How the probability mass beyond the listed atoms contributes.
#[derive(Clone)]
pub enum TailPolicy {
    /// The tail carries density 0, contributing `tail_mass · Φ(0)`.
    ZeroDensity,
    /// The tail is an analytic sequence of `(probability, density)` pairs,
    /// summed until the increment falls below the series tolerance; the
    /// Φ-terms must satisfy the monotonicity certificate of [`sum_series`].
    AnalyticSequence {
        generator: Arc<dyn Fn(u64) -> (f64, f64) + Send + Sync>,
        options: SeriesOptions,
    },
}

impl TailPolicy {
    pub fn analytic<F: Fn(u64) -> (f64, f64) + Send + Sync + 'static>(f: F) -> Self {
        TailPolicy::AnalyticSequence { generator: Arc::new(f), options: SeriesOptions::default() }
    }

    pub fn analytic_with<F: Fn(u64) -> (f64, f64) + Send + Sync + 'static>(
        f: F,
        options: SeriesOptions,
    ) -> Self {
        TailPolicy::AnalyticSequence { generator: Arc::new(f), options }
    }
}

impl fmt::Debug for TailPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TailPolicy::ZeroDensity => write!(f, "ZeroDensity"),
            TailPolicy::AnalyticSequence { .. } => write!(f, "AnalyticSequence"),
        }
    }
}

/// Result of a generalized-entropy evaluation. `value = +inf` always means
/// a certified divergence (exact via `Φ(0) = +inf` on positive mass, or
/// numeric via the series rules), in which case `converged` is true and
/// `tail_bound` is irrelevant.
#[derive(Debug, Clone, Copy)]
pub struct EntropyReport {
    pub value: f64,
    pub converged: bool,
    pub tail_bound: f64,
}

impl EntropyReport {
    pub fn is_finite(&self) -> bool {
        self.converged && self.value.is_finite()
    }

    pub fn is_infinite(&self) -> bool {
        self.converged && self.value == f64::INFINITY
    }
}

/// Generalized entropy `Σ pᵢ Φ(dᵢ)` plus the tail contribution.
///
/// `density_atoms` are `(probability, density)` pairs with positive
/// probabilities; probabilities plus `tail_mass` must sum to 1 within
/// 1e-12.
pub fn entropy_of(
    density_atoms: &[(f64, f64)],
    tail_mass: f64,
    tail_policy: &TailPolicy,
    spec: &EntropySpec,
) -> Result<EntropyReport> {
    let mut mass = tail_mass;
    for &(p, d) in density_atoms {
        if !(p > 0.0) {
            return Err(Error::InvalidMeasure(format!("atom probability {p} must be > 0")));
        }
        if !(d >= 0.0) {
            return Err(Error::InvalidMeasure(format!("density {d} must be >= 0")));
        }
        mass += p;
    }
    if tail_mass < 0.0 {
        return Err(Error::InvalidMeasure(format!("tail mass {tail_mass} must be >= 0")));
    }
    if (mass - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidMeasure(format!(
            "probabilities plus tail mass sum to {mass}, expected 1"
        )));
    }

    let mut head = 0.0_f64;
    for &(p, d) in density_atoms {
        let phi = spec.eval_with_zero(d)?;
        if phi == f64::INFINITY {
            return Ok(EntropyReport { value: f64::INFINITY, converged: true, tail_bound: 0.0 });
        }
        head += p * phi;
    }

    match tail_policy {
        TailPolicy::ZeroDensity => {
            if tail_mass > 0.0 && spec.phi_at_zero == f64::INFINITY {
                return Ok(EntropyReport {
                    value: f64::INFINITY,
                    converged: true,
                    tail_bound: 0.0,
                });
            }
            let tail = if tail_mass > 0.0 { tail_mass * spec.phi_at_zero } else { 0.0 };
            Ok(EntropyReport { value: head + tail, converged: true, tail_bound: 0.0 })
        }
        TailPolicy::AnalyticSequence { generator, options } => {
            let term = |k: u64| -> f64 {
                let (p, d) = generator(k);
                match spec.eval_with_zero(d) {
                    Ok(phi) => p * phi,
                    Err(_) => f64::NAN,
                }
            };
            match sum_series(term, options)? {
                SeriesSum::Converged { value, tail_bound, .. } => {
                    Ok(EntropyReport { value: head + value, converged: true, tail_bound })
                }
                SeriesSum::Diverged { .. } => Ok(EntropyReport {
                    value: f64::INFINITY,
                    converged: true,
                    tail_bound: 0.0,
                }),
                SeriesSum::Inconclusive { partial, .. } => Ok(EntropyReport {
                    value: head + partial,
                    converged: false,
                    tail_bound: f64::INFINITY,
                }),
            }
        }
    }
}
