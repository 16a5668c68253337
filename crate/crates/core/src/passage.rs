//! First-passage law of a drifted Brownian motion `B_t + μt` through a
//! barrier `b` (with `μb < 0` the barrier may never be reached): on (0, ∞)
//! the crossing time has density `|b|/√(2πt³)·exp(-(b-μt)²/(2t))`, and the
//! remaining mass `1 - exp(μb - |μb|)` is an atom at `+∞`.
//!
//! On top of the law sit two derived computations: the exponential-moment
//! integrability criterion for the stopped-pair construction (finite iff
//! `a² ≥ 8`), and the two-sided bound on `E[exp(τ ∧ t)]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::linear_fit;
use crate::quad::{integrate, integrate_to_infinity, QuadOptions, QuadResult};

/// Drifted-Brownian passage-time law for `B_t + μt` hitting level `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PassageSpec {
    pub drift: f64,
    pub barrier: f64,
}

/// Lower integration cut; the density vanishes to double-precision zero far
/// above it, since `exp(-b²/(2t))` dominates as `t ↓ 0`.
const T_CUT: f64 = 1e-12;

impl PassageSpec {
    pub fn new(drift: f64, barrier: f64) -> Result<Self> {
        if barrier == 0.0 || !barrier.is_finite() || !drift.is_finite() {
            return Err(Error::domain(format!(
                "passage law needs finite drift and nonzero barrier, got μ = {drift}, b = {barrier}"
            )));
        }
        Ok(PassageSpec { drift, barrier })
    }

    /// Crossing-time density on (0, ∞).
    pub fn density(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("passage density needs t > 0, got {t}")));
        }
        Ok(self.log_density(t).exp())
    }

    /// `ln` of the density, stable at large t where the density underflows.
    pub fn log_density(&self, t: f64) -> f64 {
        let b = self.barrier;
        let mu = self.drift;
        b.abs().ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - 1.5 * t.ln()
            - (b - mu * t) * (b - mu * t) / (2.0 * t)
    }

    /// Mass of the atom at `+∞`: `1 - exp(μb - |μb|)`, zero when `μb ≥ 0`.
    pub fn atom_mass(&self) -> f64 {
        let mb = self.drift * self.barrier;
        1.0 - (mb - mb.abs()).exp()
    }

    /// Total mass reaching the barrier in finite time.
    pub fn crossing_mass(&self) -> f64 {
        1.0 - self.atom_mass()
    }

    /// `P(τ ≤ t)` by quadrature.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::domain(format!("cdf needs t > 0, got {t}")));
        }
        if t <= T_CUT {
            return Ok(0.0);
        }
        let r = integrate(
            |s| if s > 0.0 { self.log_density(s).exp() } else { 0.0 },
            T_CUT,
            t,
            &QuadOptions::default(),
        )?;
        Ok(r.value)
    }

    /// Crossing mass not yet realized by time `t`.
    pub fn residual_after(&self, t: f64) -> Result<f64> {
        Ok((self.crossing_mass() - self.cdf(t)?).max(0.0))
    }

    /// `∫_0^∞ density dt`, numerically.
    pub fn total_density_integral(&self) -> Result<QuadResult> {
        integrate_to_infinity(
            |s| if s > 0.0 { self.log_density(s).exp() } else { 0.0 },
            T_CUT,
            &QuadOptions::default(),
        )
    }
}

/// Passage law of the lower-barrier time τ under the measure that turns
/// the squared exponential local martingale into a drifted motion:
/// drift 3/2 toward barrier `-ln 2`.
pub fn squared_gain_tau_law() -> PassageSpec {
    PassageSpec { drift: 1.5, barrier: -(2f64.ln()) }
}

/// Passage law (under the physical measure) of the time the auxiliary
/// exponential martingale with parameter `a` reaches `c2`.
pub fn sigma_law(a: f64, c2: f64) -> Result<PassageSpec> {
    if !(a > 0.0) || !(c2 > 1.0) {
        return Err(Error::domain(format!("need a > 0 and c2 > 1, got a = {a}, c2 = {c2}")));
    }
    PassageSpec::new(-a / 2.0, c2.ln() / a)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TailClassification {
    Finite,
    Divergent,
    Marginal,
}

/// Report of the exponential-moment criterion `∫_0^∞ e^t f_σ(t) dt`.
#[derive(Debug, Clone, Serialize)]
pub struct H2Report {
    pub a: f64,
    pub classification: TailClassification,
    /// `(T, ∫_0^T e^t f_σ(t) dt)` along the requested grid.
    pub partial_integrals: Vec<(f64, f64)>,
    /// Fitted exponential rate of the integrand; analytically `1 - a²/8`.
    pub growth_rate: f64,
    /// Converged value of the full integral when the rate is negative.
    pub limit: Option<f64>,
}

/// Classify `∫_0^∞ e^t f_σ(t) dt` where `f_σ` is the σ-passage density with
/// `c2 = 2`. The integrand is `C·t^(-3/2)·exp(t(1 - a²/8) - b²/(2t))`, so
/// the exponential rate is read off a linear fit of the log-integrand with
/// the algebraic and `1/t` terms removed; at rate ≈ 0 the `t^(-3/2)` factor
/// decides and the boundary case integrates.
pub fn h2_criterion(a: f64, t_grid: &[f64]) -> Result<H2Report> {
    if !(a > 0.0) {
        return Err(Error::domain(format!("criterion needs a > 0, got {a}")));
    }
    let law = sigma_law(a, 2.0)?;
    let b = law.barrier;
    let mut grid: Vec<f64> = t_grid.iter().cloned().filter(|&t| t > 0.0).collect();
    grid.sort_by(f64::total_cmp);
    if grid.len() < 2 {
        return Err(Error::domain("criterion needs at least two positive grid times"));
    }

    // Cumulative partial integrals along the grid.
    let integrand = |t: f64| if t > 0.0 { (t + law.log_density(t)).exp() } else { 0.0 };
    let mut partial_integrals = Vec::with_capacity(grid.len());
    let mut acc = 0.0;
    let mut lo = T_CUT;
    for &t in &grid {
        acc += integrate(integrand, lo, t, &QuadOptions::default())?.value;
        partial_integrals.push((t, acc));
        lo = t;
    }

    // log I'(T) with the 3/2-power and 1/t corrections removed is exactly
    // linear in T; the slope is the exponential rate.
    let points: Vec<(f64, f64)> = grid
        .iter()
        .map(|&t| {
            let log_iprime = t + law.log_density(t);
            (t, log_iprime + 1.5 * t.ln() + b * b / (2.0 * t))
        })
        .collect();
    let fit = linear_fit(&points)
        .ok_or_else(|| Error::domain("degenerate grid for the rate fit".to_string()))?;
    let rate = fit.slope;

    let classification = if rate > 1e-6 {
        TailClassification::Divergent
    } else if rate < -1e-6 {
        TailClassification::Finite
    } else {
        // Exponential part flat: decide on the algebraic exponent, which is
        // -3/2 here (integrable). Fit log I' + b²/(2t) against ln t.
        let alg_points: Vec<(f64, f64)> = grid
            .iter()
            .map(|&t| {
                let log_iprime = t + law.log_density(t);
                (t.ln(), log_iprime + b * b / (2.0 * t) - rate * t)
            })
            .collect();
        match linear_fit(&alg_points) {
            Some(f) if f.slope < -1.1 => TailClassification::Finite,
            Some(f) if f.slope > -0.9 => TailClassification::Divergent,
            _ => TailClassification::Marginal,
        }
    };

    let limit = if rate < -1e-6 {
        Some(integrate_to_infinity(integrand, T_CUT, &QuadOptions::default())?.value)
    } else {
        None
    };

    Ok(H2Report { a, classification, partial_integrals, growth_rate: rate, limit })
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichRow {
    pub t: f64,
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    pub all_pass: bool,
}

/// Tolerance of the sandwich comparison, relative to `e^t`.
pub const SANDWICH_TOL: f64 = 1e-8;

/// Check `atom·e^t ≤ E[exp(τ ∧ t)] ≤ e^t` for the τ-law with drift 3/2 and
/// barrier `-ln 2` (atom 7/8), evaluating the middle term by quadrature:
/// `∫_0^t e^s f(s) ds + e^t·P(τ > t)`.
pub fn sandwich_check(t_values: &[f64]) -> Result<SandwichReport> {
    let law = squared_gain_tau_law();
    let atom = law.atom_mass();
    let mut rows = Vec::with_capacity(t_values.len());
    for &t in t_values {
        if !(t > 0.0) {
            return Err(Error::domain(format!("sandwich needs t > 0, got {t}")));
        }
        let head = integrate(
            |s| if s > 0.0 { (s + law.log_density(s)).exp() } else { 0.0 },
            T_CUT,
            t,
            &QuadOptions::default(),
        )?
        .value;
        let value = head + t.exp() * (1.0 - law.cdf(t)?);
        let lower = atom * t.exp();
        let upper = t.exp();
        let tol = SANDWICH_TOL * upper.max(1.0);
        let pass = value >= lower - tol && value <= upper + tol;
        rows.push(SandwichRow { t, value, lower, upper, pass });
    }
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(SandwichReport { rows, all_pass })
}
