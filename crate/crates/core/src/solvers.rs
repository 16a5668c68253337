//! Primal and dual super-replication prices on the truncated dyadic market.
//!
//! The primal price with credit line `c` is
//! `inf { x : ∃ admissible α,  x + n·α(n) ≥ v1(n),  x - n²·α(n) ≥ v2(n) }`.
//! Feasibility of a given `x` is a per-interval condition
//! `max(-c/n, (v1-x)/n) ≤ min(c/n², (x-v2)/n²)`, monotone in `x`, so the
//! price falls to bisection; a dense-simplex LP double-checks moderate
//! truncations. The dual maximizes `E_Q[h]` over valid measures, which on
//! the simplex substitution `t(n) = (n+1)·q2(n)/2^(n+1)` is a vertex
//! problem for the scores `r(n) = (n·v1(n) + v2(n))/(n+1)`.

use serde::Serialize;

use crate::dyadic::{DyadicClaim, DyadicMeasure, Strategy};
use crate::entropy::{EntropySpec, PhiKind};
use crate::error::{Error, Result};
use crate::numeric::{bisect_threshold, ext_real};
use crate::simplex::{self, Constraint, Lp, LpOutcome, Relation};

const BISECT_TOL: f64 = 1e-10;
const PRIMAL_CAP: f64 = 1e6;
pub const WEAK_DUALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PrimalMethod {
    #[serde(rename = "closed_form_bisection")]
    Bisection,
    #[serde(rename = "lp_oracle")]
    LpOracle,
}

/// Primal price with its super-replicating witness.
#[derive(Debug, Clone, Serialize)]
pub struct PrimalResult {
    #[serde(with = "ext_real")]
    pub price: f64,
    #[serde(skip)]
    pub witness: Strategy,
    /// Interval whose constraint pins the price.
    pub binding_n: u32,
    pub method: PrimalMethod,
}

/// Dual price over the (entropy-constrained) separating measures.
#[derive(Debug, Clone, Serialize)]
pub struct DualResult {
    pub value: f64,
    pub argmax_n: u32,
    pub attained: bool,
    /// True when the maximizer sits at the truncation level N.
    pub boundary_binding: bool,
    #[serde(skip)]
    n_max: u32,
}

impl DualResult {
    /// The canonical vertex maximizer: unit interval mass at `argmax_n`.
    pub fn witness_measure(&self) -> DyadicMeasure {
        DyadicMeasure::unit_atom(self.argmax_n, self.n_max).expect("argmax within truncation")
    }
}

/// Per-interval minimal feasible initial capital, in closed form. The
/// interval condition splits into three lower bounds on x.
fn min_feasible_x(h: &DyadicClaim, c: f64, n: u32) -> f64 {
    let nf = n as f64;
    let v1 = h.v1(n);
    let v2 = h.v2(n);
    (v1 - c / nf).max((nf * v1 + v2) / (nf + 1.0)).max(v2 - c * nf)
}

fn feasible(h: &DyadicClaim, c: f64, n_max: u32, x: f64) -> bool {
    for n in 1..=n_max {
        let nf = n as f64;
        let lo = (-c / nf).max((h.v1(n) - x) / nf);
        let hi = (c / (nf * nf)).min((x - h.v2(n)) / (nf * nf));
        if lo > hi {
            return false;
        }
    }
    true
}

fn witness_at(h: &DyadicClaim, c: f64, n_max: u32, x: f64) -> Strategy {
    let alpha: Vec<f64> = (1..=n_max)
        .map(|n| {
            let nf = n as f64;
            let lo = -c / nf;
            let hi = c / (nf * nf);
            ((h.v1(n) - x) / nf).max(lo).min(hi)
        })
        .collect();
    Strategy::new(c, alpha).expect("clamped coefficients are admissible")
}

/// Classical super-replication price of `h` under credit line `c`, over the
/// first `n_max` intervals (which must not exceed the claim's truncation).
pub fn primal_price(h: &DyadicClaim, c: f64, n_max: u32) -> Result<PrimalResult> {
    if !(c >= 0.0) {
        return Err(Error::domain(format!("credit line must be >= 0, got {c}")));
    }
    if n_max < 1 || n_max > h.n_max() {
        return Err(Error::domain(format!(
            "price truncation {n_max} outside 1..={}",
            h.n_max()
        )));
    }

    // x at which doing nothing super-replicates; always feasible.
    let mut hi = (1..=n_max).map(|n| h.v1(n).max(h.v2(n))).fold(f64::NEG_INFINITY, f64::max);
    if !feasible(h, c, n_max, hi) {
        // defensive escalation; mathematically unreachable for finite claims
        let mut bumped = hi.abs().max(1.0);
        while !feasible(h, c, n_max, hi) {
            hi += bumped;
            bumped *= 2.0;
            if hi > PRIMAL_CAP {
                let binding_n = binding_level(h, c, n_max);
                return Ok(PrimalResult {
                    price: f64::INFINITY,
                    witness: Strategy::new(c, vec![0.0; n_max as usize])?,
                    binding_n,
                    method: PrimalMethod::Bisection,
                });
            }
        }
    }
    let mut lo = hi - 1.0;
    let mut step = 1.0;
    while feasible(h, c, n_max, lo) {
        hi = lo;
        lo -= step;
        step *= 2.0;
        if lo < -PRIMAL_CAP {
            return Err(Error::domain(
                "primal price escaped below the search cap".to_string(),
            ));
        }
    }
    let price = bisect_threshold(|x| feasible(h, c, n_max, x), lo, hi, BISECT_TOL);
    let binding_n = binding_level(h, c, n_max);
    // Nudge into the feasible side before extracting the witness.
    let witness = witness_at(h, c, n_max, price + BISECT_TOL);
    Ok(PrimalResult { price, witness, binding_n, method: PrimalMethod::Bisection })
}

fn binding_level(h: &DyadicClaim, c: f64, n_max: u32) -> u32 {
    let mut best_n = 1;
    let mut best_x = f64::NEG_INFINITY;
    for n in 1..=n_max {
        let x = min_feasible_x(h, c, n);
        if x > best_x {
            best_x = x;
            best_n = n;
        }
    }
    best_n
}

/// Dense-simplex oracle for the primal price; intended for `n_max ≤ 50`.
///
/// Variables are `x⁺, x⁻` and shifted coefficients `a(n) = α(n) + c/n ≥ 0`
/// with the admissibility ceiling `a(n) ≤ c/n + c/n²`.
pub fn primal_price_lp(h: &DyadicClaim, c: f64, n_max: u32) -> Result<PrimalResult> {
    if !(c >= 0.0) {
        return Err(Error::domain(format!("credit line must be >= 0, got {c}")));
    }
    if n_max < 1 || n_max > h.n_max() {
        return Err(Error::domain(format!(
            "price truncation {n_max} outside 1..={}",
            h.n_max()
        )));
    }
    let n = n_max as usize;
    let n_vars = n + 2; // x⁺, x⁻, a(1..N)
    let mut constraints = Vec::with_capacity(3 * n);
    for i in 0..n {
        let nf = (i + 1) as f64;
        // x + n·α ≥ v1  →  x⁺ - x⁻ + n·a ≥ v1 + c
        let mut row = vec![0.0; n_vars];
        row[0] = 1.0;
        row[1] = -1.0;
        row[2 + i] = nf;
        constraints.push(Constraint::new(row, Relation::Ge, h.v1(i as u32 + 1) + c));
        // x - n²·α ≥ v2  →  x⁺ - x⁻ - n²·a ≥ v2 - c·n
        let mut row = vec![0.0; n_vars];
        row[0] = 1.0;
        row[1] = -1.0;
        row[2 + i] = -nf * nf;
        constraints.push(Constraint::new(row, Relation::Ge, h.v2(i as u32 + 1) - c * nf));
        // a ≤ c/n + c/n²
        let mut row = vec![0.0; n_vars];
        row[2 + i] = 1.0;
        constraints.push(Constraint::new(row, Relation::Le, c / nf + c / (nf * nf)));
    }
    let mut objective = vec![0.0; n_vars];
    objective[0] = -1.0; // minimize x⁺ - x⁻
    objective[1] = 1.0;
    let lp = Lp { objective, constraints };
    match simplex::solve(&lp)? {
        LpOutcome::Optimal { solution, .. } => {
            let price = solution[0] - solution[1];
            let alpha: Vec<f64> = (0..n)
                .map(|i| {
                    let nf = (i + 1) as f64;
                    let a = solution[2 + i].clamp(0.0, c / nf + c / (nf * nf));
                    a - c / nf
                })
                .collect();
            Ok(PrimalResult {
                price,
                witness: Strategy::new(c, alpha)?,
                binding_n: binding_level(h, c, n_max),
                method: PrimalMethod::LpOracle,
            })
        }
        LpOutcome::Infeasible => Err(Error::Lp("primal oracle reported infeasible".to_string())),
        LpOutcome::Unbounded => Err(Error::Lp("primal oracle reported unbounded".to_string())),
    }
}

/// Interval score `r(n) = (n·v1(n) + v2(n))/(n+1)`: the claim's expectation
/// under unit interval mass at n.
pub fn interval_score(h: &DyadicClaim, n: u32) -> f64 {
    let nf = n as f64;
    (nf * h.v1(n) + h.v2(n)) / (nf + 1.0)
}

/// Dual price over all truncated separating measures; ties broken toward
/// the smallest interval.
pub fn dual_price_m1(h: &DyadicClaim, n_max: u32) -> Result<DualResult> {
    if n_max < 1 || n_max > h.n_max() {
        return Err(Error::domain(format!(
            "dual truncation {n_max} outside 1..={}",
            h.n_max()
        )));
    }
    let mut best_n = 1;
    let mut best = interval_score(h, 1);
    for n in 2..=n_max {
        let r = interval_score(h, n);
        if r > best {
            best = r;
            best_n = n;
        }
    }
    Ok(DualResult {
        value: best,
        argmax_n: best_n,
        attained: true,
        boundary_binding: best_n == n_max,
        n_max,
    })
}

/// Entropy weights of the quadratic case: `Σ q2(n)²(n²+1)/2^(n+1)` becomes
/// `Σ w(n)·t(n)²` with `w(n) = 2^(n+1)(n²+1)/(n+1)²` on simplex weights.
fn quadratic_entropy_weights(n_max: u32) -> Result<Vec<f64>> {
    let w: Vec<f64> = (1..=n_max)
        .map(|n| {
            let nf = n as f64;
            2f64.powi(n as i32 + 1) * (nf * nf + 1.0) / ((nf + 1.0) * (nf + 1.0))
        })
        .collect();
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain(format!(
            "capped dual needs N small enough for 2^(N+1) to stay finite, got N = {n_max}"
        )));
    }
    Ok(w)
}

fn quadratic_entropy_of_weights(t: &[f64], w: &[f64]) -> f64 {
    t.iter().zip(w).map(|(ti, wi)| wi * ti * ti).sum()
}

/// Water-filling step: maximize `Σ r·t - γ·Σ w·t²` over the simplex.
fn penalized_simplex_max(r: &[f64], w: &[f64], gamma: f64) -> Vec<f64> {
    let t_of_nu = |nu: f64| -> Vec<f64> {
        r.iter()
            .zip(w)
            .map(|(&ri, &wi)| ((ri - nu) / (2.0 * gamma * wi)).max(0.0))
            .collect()
    };
    let total = |nu: f64| t_of_nu(nu).iter().sum::<f64>();
    // Σt is decreasing in ν; bracket a root of Σt = 1.
    let mut hi = r.iter().cloned().fold(f64::NEG_INFINITY, f64::max); // Σ = 0
    let mut lo = hi - 1.0;
    let mut step = 1.0;
    while total(lo) < 1.0 {
        lo -= step;
        step *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = t_of_nu(0.5 * (lo + hi));
    let s: f64 = t.iter().sum();
    if s > 0.0 {
        for ti in t.iter_mut() {
            *ti /= s;
        }
    }
    t
}

/// Dual price over measures with generalized entropy constraints.
///
/// Without a cap the truncated problem collapses onto [`dual_price_m1`]:
/// every truncated measure has finite entropy when `Φ(0) < +inf`, and when
/// `Φ(0) = +inf` strictly positive measures approach the vertex value, so
/// the supremum is unchanged but unattained whenever the canonical vertex
/// maximizer carries zero densities. With a cap `B` (quadratic Φ only) the
/// problem becomes a quadratically constrained simplex program solved by
/// bisection on the constraint multiplier, KKT residual ≤ 1e-8.
pub fn dual_price_m_phi(
    h: &DyadicClaim,
    spec: &EntropySpec,
    n_max: u32,
    entropy_cap: Option<f64>,
) -> Result<DualResult> {
    let uncapped = dual_price_m1(h, n_max)?;

    let Some(cap) = entropy_cap else {
        if spec.phi_at_zero().is_finite() {
            return Ok(uncapped);
        }
        // Φ(0) = +inf: check the perturbation route along strictly positive
        // measures toward the vertex before declaring the sup unattained.
        let vertex_has_zeros = n_max >= 2;
        if vertex_has_zeros {
            let scores: Vec<f64> = (1..=n_max).map(|n| interval_score(h, n)).collect();
            for eps in [1e-3, 1e-6] {
                let t: Vec<f64> = (0..n_max as usize)
                    .map(|i| {
                        let vertex = if i == (uncapped.argmax_n - 1) as usize { 1.0 } else { 0.0 };
                        (1.0 - eps) * vertex + eps / n_max as f64
                    })
                    .collect();
                let objective: f64 = t.iter().zip(&scores).map(|(ti, ri)| ti * ri).sum();
                let spread: f64 = scores.iter().map(|r| r.abs()).fold(0.0, f64::max);
                if (objective - uncapped.value).abs() > 2.0 * eps * spread.max(1.0) {
                    return Err(Error::domain(format!(
                        "perturbation route failed to approach the vertex value \
                         (eps = {eps}, objective = {objective}, value = {})",
                        uncapped.value
                    )));
                }
            }
        }
        return Ok(DualResult { attained: !vertex_has_zeros, ..uncapped });
    };

    let PhiKind::Power { exponent } = spec.kind() else {
        return Err(Error::UnsupportedSpec(format!(
            "capped dual implemented for quadratic entropy only, got {}",
            spec.label()
        )));
    };
    if *exponent != 2.0 {
        return Err(Error::UnsupportedSpec(format!(
            "capped dual implemented for exponent 2, got {exponent}"
        )));
    }

    let w = quadratic_entropy_weights(n_max)?;
    let minimum = 1.0 / w.iter().map(|wi| 1.0 / wi).sum::<f64>();
    if cap < minimum - 1e-12 {
        return Err(Error::InfeasibleCap { cap, minimum });
    }

    let r: Vec<f64> = (1..=n_max).map(|n| interval_score(h, n)).collect();

    // If the unconstrained vertex already satisfies the cap, done.
    let vertex_entropy = w[(uncapped.argmax_n - 1) as usize];
    if vertex_entropy <= cap {
        return Ok(uncapped);
    }

    // Bisection on the quadratic multiplier γ: entropy(γ) is nonincreasing.
    let mut gamma_lo = 1e-12_f64;
    let mut gamma_hi = 1e12_f64;
    for _ in 0..200 {
        let mid = (gamma_lo * gamma_hi).sqrt();
        let t = penalized_simplex_max(&r, &w, mid);
        if quadratic_entropy_of_weights(&t, &w) > cap {
            gamma_lo = mid;
        } else {
            gamma_hi = mid;
        }
    }
    let gamma = (gamma_lo * gamma_hi).sqrt();
    let t = penalized_simplex_max(&r, &w, gamma);
    let value: f64 = t.iter().zip(&r).map(|(ti, ri)| ti * ri).sum();

    // KKT residuals: primal feasibility, stationarity on the support,
    // complementary slackness.
    let entropy = quadratic_entropy_of_weights(&t, &w);
    let feas = (t.iter().sum::<f64>() - 1.0).abs();
    let slack = (entropy - cap).abs();
    let nu = t
        .iter()
        .zip(r.iter().zip(&w))
        .filter(|(ti, _)| **ti > 1e-12)
        .map(|(ti, (ri, wi))| ri - 2.0 * gamma * wi * ti)
        .fold((f64::NEG_INFINITY, f64::INFINITY), |(lo, hi), v| (lo.max(v), hi.min(v)));
    let stationarity = if nu.0.is_finite() { (nu.0 - nu.1).abs() } else { 0.0 };
    let residual = feas.max(slack).max(stationarity);
    if residual > 1e-8 * cap.max(1.0) {
        return Err(Error::Lp(format!(
            "capped dual KKT residual {residual:e} exceeds tolerance"
        )));
    }

    let argmax_n = t
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i as u32 + 1)
        .unwrap_or(1);
    Ok(DualResult {
        value,
        argmax_n,
        attained: true,
        boundary_binding: argmax_n == n_max,
        n_max,
    })
}

/// Gap report: primal price vs both dual values, with weak duality checked.
#[derive(Debug, Clone, Serialize)]
pub struct GapReport {
    pub claim_kind: String,
    pub k: f64,
    pub c: f64,
    pub n_max: u32,
    pub phi: String,
    pub primal: PrimalResult,
    pub dual_m1: DualResult,
    pub dual_m_phi: DualResult,
    #[serde(with = "ext_real")]
    pub gap: f64,
}

/// Compose the three solvers and assert weak duality.
pub fn gap_report(h: &DyadicClaim, c: f64, n_max: u32, spec: &EntropySpec) -> Result<GapReport> {
    let primal = primal_price(h, c, n_max)?;
    let dual_m1 = dual_price_m1(h, n_max)?;
    let dual_m_phi = dual_price_m_phi(h, spec, n_max, None)?;
    let dual_best = dual_m1.value.max(dual_m_phi.value);
    let gap = primal.price - dual_best;
    if gap < -WEAK_DUALITY_TOL {
        return Err(Error::domain(format!(
            "weak duality violated: primal {} < dual {}",
            primal.price, dual_best
        )));
    }
    let k = match h.kind() {
        crate::dyadic::ClaimKind::ScaledF { k } => k,
        _ => 1.0,
    };
    Ok(GapReport {
        claim_kind: h.kind().label().to_string(),
        k,
        c,
        n_max,
        phi: spec.label(),
        primal,
        dual_m1,
        dual_m_phi,
        gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{expectation, strategy_payoff, Half};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    /// Witness must super-replicate claim - price on every interval.
    fn check_witness(h: &DyadicClaim, res: &PrimalResult, n_max: u32) {
        let payoff = strategy_payoff(&res.witness).unwrap();
        for n in 1..=n_max {
            assert!(
                res.price + payoff.v1(n) >= h.v1(n) - 1e-9,
                "J{n}^1 not covered: {} + {} < {}",
                res.price,
                payoff.v1(n),
                h.v1(n)
            );
            assert!(res.price + payoff.v2(n) >= h.v2(n) - 1e-9, "J{n}^2 not covered");
        }
    }

    #[test]
    fn primal_price_of_f() {
        let h = DyadicClaim::f(1000);
        let res = primal_price(&h, 10.0, 1000).unwrap();
        assert_close(res.price, 0.99, 1e-9);
        assert_eq!(res.binding_n, 1000);
        check_witness(&h, &res, 1000);
    }

    #[test]
    fn primal_price_of_f_matches_lp_oracle() {
        let h = DyadicClaim::f(50);
        let bisect = primal_price(&h, 10.0, 50).unwrap();
        let lp = primal_price_lp(&h, 10.0, 50).unwrap();
        assert_close(bisect.price, 0.8, 1e-9); // 1 - 10/50
        assert_close(bisect.price, lp.price, 1e-7);
        assert_eq!(lp.method, PrimalMethod::LpOracle);
        check_witness(&h, &lp, 50);
    }

    #[test]
    fn primal_price_scales_with_k() {
        let h = DyadicClaim::scaled_f(5.0, 1000);
        let res = primal_price(&h, 10.0, 1000).unwrap();
        assert_close(res.price, 4.99, 1e-9);
    }

    #[test]
    fn primal_price_of_x1_diverges_with_n() {
        let h = DyadicClaim::x1(100);
        let res = primal_price(&h, 10.0, 100).unwrap();
        assert_close(res.price, 99.9, 1e-9);
        assert_eq!(res.binding_n, 100);
        check_witness(&h, &res, 100);
    }

    #[test]
    fn primal_price_with_no_trading() {
        let h = DyadicClaim::f(1);
        let res = primal_price(&h, 0.0, 1).unwrap();
        assert_close(res.price, 1.0, 1e-9);
    }

    #[test]
    fn primal_price_monotone_in_c_and_n() {
        let h = DyadicClaim::f(400);
        let mut last = f64::INFINITY;
        for c in [0.0, 1.0, 5.0, 20.0] {
            let p = primal_price(&h, c, 400).unwrap().price;
            assert!(p <= last + 1e-12, "price should fall as credit grows");
            last = p;
        }
        let mut last = f64::NEG_INFINITY;
        for n in [50, 100, 200, 400] {
            let p = primal_price(&h, 10.0, n).unwrap().price;
            assert!(p >= last - 1e-12, "price should rise with truncation");
            last = p;
        }
    }

    #[test]
    fn dual_of_f_is_zero() {
        for n in [10, 100, 1000] {
            let h = DyadicClaim::f(n);
            let d = dual_price_m1(&h, n).unwrap();
            assert_eq!(d.value, 0.0);
            assert_eq!(d.argmax_n, 1); // all scores are zero; smallest wins
        }
    }

    #[test]
    fn dual_of_indicator_is_half() {
        let h = DyadicClaim::indicator(1, Half::First, 30).unwrap();
        let d = dual_price_m1(&h, 30).unwrap();
        assert_close(d.value, 0.5, 1e-12);
        assert_eq!(d.argmax_n, 1);

        // brute force over random valid measures never beats the vertex
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let q = DyadicMeasure::random(30, &mut rng);
            assert!(expectation(&q, &h).unwrap() <= d.value + 1e-12);
        }
        // and the vertex measure achieves it
        let vertex = d.witness_measure();
        assert_close(expectation(&vertex, &h).unwrap(), d.value, 1e-12);
    }

    #[test]
    fn dual_of_x1_is_zero() {
        let h = DyadicClaim::x1(200);
        let d = dual_price_m1(&h, 200).unwrap();
        assert_eq!(d.value, 0.0);
    }

    #[test]
    fn uncapped_entropy_dual_collapses_to_m1() {
        let h = DyadicClaim::indicator(3, Half::First, 20).unwrap();
        let spec = EntropySpec::power(2.0).unwrap();
        let m1 = dual_price_m1(&h, 20).unwrap();
        let mphi = dual_price_m_phi(&h, &spec, 20, None).unwrap();
        assert_eq!(m1.value, mphi.value);
        assert!(mphi.attained);
    }

    #[test]
    fn blows_up_at_zero_makes_vertex_unattained() {
        let h = DyadicClaim::f(50);
        let spec = EntropySpec::log_quadratic();
        let d = dual_price_m_phi(&h, &spec, 50, None).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(!d.attained);

        // single-interval truncation has a fully supported vertex
        let h1 = DyadicClaim::f(1);
        let d1 = dual_price_m_phi(&h1, &spec, 1, None).unwrap();
        assert!(d1.attained);
    }

    #[test]
    fn capped_dual_increases_to_vertex_value() {
        let h = DyadicClaim::indicator(1, Half::First, 20).unwrap();
        let spec = EntropySpec::power(2.0).unwrap();
        let w1 = 2f64.powi(2) * 2.0 / 4.0; // weight of the first interval = 2
        let mut last = 0.0;
        for cap in [1.1, 1.2, 1.5, 1.9, 2.0, 10.0] {
            let d = dual_price_m_phi(&h, &spec, 20, Some(cap)).unwrap();
            assert!(d.value >= last - 1e-10, "capped value must grow with the cap");
            assert!(d.value <= 0.5 + 1e-10);
            last = d.value;
        }
        // with cap at least the vertex entropy the vertex is optimal
        let d = dual_price_m_phi(&h, &spec, 20, Some(w1)).unwrap();
        assert_close(d.value, 0.5, 1e-8);
    }

    #[test]
    fn capped_dual_matches_dense_grid_oracle() {
        // three intervals: brute-force the quadratically constrained
        // simplex on a fine grid and compare
        let h = DyadicClaim::indicator(1, Half::First, 3).unwrap();
        let spec = EntropySpec::power(2.0).unwrap();
        let w = quadratic_entropy_weights(3).unwrap();
        let r: Vec<f64> = (1..=3).map(|n| interval_score(&h, n)).collect();
        for cap in [1.3, 1.5, 1.8] {
            let d = dual_price_m_phi(&h, &spec, 3, Some(cap)).unwrap();
            let mut best = f64::NEG_INFINITY;
            let steps = 400;
            for i in 0..=steps {
                for j in 0..=(steps - i) {
                    let t = [
                        i as f64 / steps as f64,
                        j as f64 / steps as f64,
                        (steps - i - j) as f64 / steps as f64,
                    ];
                    let entropy: f64 = t.iter().zip(&w).map(|(ti, wi)| wi * ti * ti).sum();
                    if entropy <= cap {
                        let v: f64 = t.iter().zip(&r).map(|(ti, ri)| ti * ri).sum();
                        best = best.max(v);
                    }
                }
            }
            assert_close(d.value, best, 2e-3);
            assert!(d.value >= best - 1e-9, "solver must not fall below the grid");
        }
    }

    #[test]
    fn capped_dual_rejects_infeasible_and_unsupported() {
        let h = DyadicClaim::f(10);
        let spec = EntropySpec::power(2.0).unwrap();
        let w = quadratic_entropy_weights(10).unwrap();
        let minimum = 1.0 / w.iter().map(|wi| 1.0 / wi).sum::<f64>();
        assert!(matches!(
            dual_price_m_phi(&h, &spec, 10, Some(minimum * 0.5)),
            Err(Error::InfeasibleCap { .. })
        ));
        assert!(matches!(
            dual_price_m_phi(&h, &EntropySpec::identity(), 10, Some(1.0)),
            Err(Error::UnsupportedSpec(_))
        ));
    }

    #[test]
    fn gap_report_for_f() {
        let h = DyadicClaim::f(1000);
        let spec = EntropySpec::power(2.0).unwrap();
        let rep = gap_report(&h, 10.0, 1000, &spec).unwrap();
        assert_close(rep.gap, 0.99, 1e-9);
        assert_eq!(rep.dual_m1.value, 0.0);
        assert_eq!(rep.dual_m_phi.value, 0.0);
    }

    #[test]
    fn gap_report_scales() {
        let h = DyadicClaim::scaled_f(20.0, 1000);
        let spec = EntropySpec::power(2.0).unwrap();
        let rep = gap_report(&h, 10.0, 1000, &spec).unwrap();
        assert_close(rep.gap, 19.99, 1e-9);
        assert_eq!(rep.k, 20.0);
    }

    #[test]
    fn bounded_below_claim_has_no_gap() {
        // nonnegative bounded claim: with ample credit the primal matches
        // the dual vertex value
        let n_max = 40;
        let v: Vec<f64> = (1..=n_max).map(|n| 1f64.min(2.0 / n as f64)).collect();
        let h = DyadicClaim::custom(v.clone(), v).unwrap();
        let spec = EntropySpec::power(2.0).unwrap();
        let rep = gap_report(&h, 100.0, n_max as u32, &spec).unwrap();
        assert!(rep.gap.abs() <= 1e-6, "gap {} should vanish", rep.gap);
    }

    #[test]
    fn positive_homogeneity() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let n_max = rng.random_range(3..40);
            let v1: Vec<f64> = (0..n_max).map(|_| rng.random_range(-5.0..5.0)).collect();
            let v2: Vec<f64> = (0..n_max).map(|_| rng.random_range(-5.0..5.0)).collect();
            let h = DyadicClaim::custom(v1, v2).unwrap();
            let c = rng.random_range(0.0..10.0);
            let k = rng.random_range(0.1..8.0);
            let base = primal_price(&h, c, n_max).unwrap().price;
            let scaled = primal_price(&h.scale(k), k * c, n_max).unwrap().price;
            assert_close(scaled, k * base, 1e-9 * k.max(1.0));

            let dual_base = dual_price_m1(&h, n_max).unwrap().value;
            let dual_scaled = dual_price_m1(&h.scale(k), n_max).unwrap().value;
            assert_close(dual_scaled, k * dual_base, 1e-12 * k.max(1.0));
        }
    }

    #[test]
    fn weak_duality_on_random_claims() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..100 {
            let n_max = rng.random_range(2..30);
            let v1: Vec<f64> = (0..n_max).map(|_| rng.random_range(-5.0..5.0)).collect();
            let v2: Vec<f64> = (0..n_max).map(|_| rng.random_range(-5.0..5.0)).collect();
            let h = DyadicClaim::custom(v1, v2).unwrap();
            let c = rng.random_range(0.0..20.0);
            let primal = primal_price(&h, c, n_max).unwrap().price;
            let dual = dual_price_m1(&h, n_max).unwrap().value;
            assert!(primal >= dual - WEAK_DUALITY_TOL, "primal {primal} < dual {dual}");
        }
    }

    #[test]
    fn bisection_agrees_with_lp_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..25 {
            let n_max = rng.random_range(2..=50);
            let v1: Vec<f64> = (0..n_max).map(|_| rng.random_range(-3.0..3.0)).collect();
            let v2: Vec<f64> = (0..n_max).map(|_| rng.random_range(-3.0..3.0)).collect();
            let h = DyadicClaim::custom(v1, v2).unwrap();
            let c = rng.random_range(0.0..5.0);
            let bisect = primal_price(&h, c, n_max).unwrap().price;
            let lp = primal_price_lp(&h, c, n_max).unwrap().price;
            assert_close(bisect, lp, 1e-7);
        }
    }
}
