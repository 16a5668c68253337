//! Scalar search, series summation and small statistics helpers shared by
//! the solver modules.

use crate::error::{Error, Result};

/// Result of a one-dimensional concave maximization.
#[derive(Debug, Clone, Copy)]
pub struct ScalarMax {
    pub x: f64,
    pub value: f64,
}

/// Outcome of [`maximize_concave`].
#[derive(Debug, Clone, Copy)]
pub enum ScalarMaxOutcome {
    Converged(ScalarMax),
    /// The objective kept improving past the search bound.
    Unbounded { reached: f64 },
}

const GOLDEN_RATIO: f64 = 0.618_033_988_749_894_9;

/// Maximize a concave function of one variable by coarse scan, bracket
/// expansion and golden-section refinement.
///
/// Values of `-inf` (or NaN, treated as `-inf`) are allowed; a function
/// finite at a single point is handled as a single-point supremum because
/// the best scanned point is retained through refinement.
pub fn maximize_concave<F: Fn(f64) -> f64>(
    f: F,
    xtol: f64,
    bound: f64,
) -> Result<ScalarMaxOutcome> {
    let eval = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    // Coarse integer scan; the grid deliberately contains small integers so
    // that point-supported objectives are observable at all.
    let mut xs: Vec<f64> = (-8..=8).map(|k| k as f64).collect();
    let mut vs: Vec<f64> = xs.iter().map(|&x| eval(x)).collect();

    let argmax = |vs: &[f64]| {
        let mut best = 0;
        for (i, v) in vs.iter().enumerate() {
            if *v > vs[best] {
                best = i;
            }
        }
        best
    };

    // Expand the scan while the max sits on the boundary and keeps improving.
    loop {
        let i = argmax(&vs);
        if vs[i] == f64::NEG_INFINITY {
            return Err(Error::domain(
                "objective is -inf on the entire scan grid".to_string(),
            ));
        }
        if i == 0 {
            let next = if xs[0] < 0.0 { xs[0] * 2.0 } else { xs[0] - 8.0 };
            if next.abs() > bound {
                return Ok(ScalarMaxOutcome::Unbounded { reached: xs[0] });
            }
            xs.insert(0, next);
            vs.insert(0, eval(next));
        } else if i == xs.len() - 1 {
            let last = *xs.last().unwrap();
            let next = if last > 0.0 { last * 2.0 } else { last + 8.0 };
            if next.abs() > bound {
                return Ok(ScalarMaxOutcome::Unbounded { reached: last });
            }
            xs.push(next);
            vs.push(eval(next));
        } else {
            break;
        }
    }

    let i = argmax(&vs);
    let (mut lo, mut hi) = (xs[i - 1], xs[i + 1]);
    let mut best = ScalarMax { x: xs[i], value: vs[i] };

    // Golden-section refinement, retaining the best point ever seen so that
    // flat or partially -inf brackets cannot lose the supremum.
    let mut x1 = hi - GOLDEN_RATIO * (hi - lo);
    let mut x2 = lo + GOLDEN_RATIO * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    while hi - lo > xtol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + GOLDEN_RATIO * (hi - lo);
            f2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - GOLDEN_RATIO * (hi - lo);
            f1 = eval(x1);
        }
        let (xb, fb) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
        if fb > best.value {
            best = ScalarMax { x: xb, value: fb };
        }
    }
    Ok(ScalarMaxOutcome::Converged(best))
}

/// Smallest `x` in `[lo, hi]` with `pred(x) == true`, for a monotone
/// predicate that is false at `lo` and true at `hi`.
pub fn bisect_threshold<P: Fn(f64) -> bool>(pred: P, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    debug_assert!(lo < hi);
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Options controlling [`sum_series`].
#[derive(Debug, Clone)]
pub struct SeriesOptions {
    /// Converged once |term| falls below this.
    pub increment_tol: f64,
    /// Partial sums beyond this certify numeric divergence.
    pub divergence_cap: f64,
    /// Half-window length for the plateau divergence detector, which
    /// compares the max over the last window against the max over the
    /// window before it (robust to interleaved subsequences).
    pub plateau_window: usize,
    /// Plateau detector only fires with window maxima at least this large.
    pub plateau_floor: f64,
    /// Relative drop between consecutive window maxima below which the
    /// series counts as plateaued.
    pub plateau_rel_drop: f64,
    /// Give up (inconclusive) after this many terms.
    pub max_terms: u64,
    /// Terms exempt from the monotonicity certificate.
    pub monotone_burn_in: u64,
    /// The certificate compares |term| against the max over this many
    /// preceding terms, so interleaved sub-sequences may zigzag locally.
    pub monotone_window: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            increment_tol: 1e-12,
            divergence_cap: 1e12,
            plateau_window: 128,
            plateau_floor: 1e-6,
            plateau_rel_drop: 0.005,
            max_terms: 2_000_000,
            monotone_burn_in: 64,
            monotone_window: 4,
        }
    }
}

/// Verdict of [`sum_series`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SeriesSum {
    Converged { value: f64, tail_bound: f64, terms: u64 },
    Diverged { partial: f64, terms: u64 },
    Inconclusive { partial: f64, terms: u64 },
}

/// Sum `term(0) + term(1) + ...` with a monotonicity certificate.
///
/// After the burn-in, |term| must not exceed the max over the preceding
/// `monotone_window` terms (within a 1e-9 relative slack); otherwise the
/// certificate fails and an error is returned. The series is declared
/// divergent either when the partial sum exceeds `divergence_cap`, or when
/// positive terms plateau above `plateau_floor` for a full window. Both
/// are numeric verdicts, not proofs. Convergence requires a full window of
/// terms below `increment_tol`.
pub fn sum_series<F: FnMut(u64) -> f64>(
    mut term: F,
    opts: &SeriesOptions,
) -> Result<SeriesSum> {
    let mut partial = 0.0_f64;
    let mut recent: std::collections::VecDeque<f64> = std::collections::VecDeque::new();
    let mut window: std::collections::VecDeque<f64> =
        std::collections::VecDeque::with_capacity(2 * opts.plateau_window);
    let mut ratio_max = 0.0_f64;

    for k in 0..opts.max_terms {
        let t = term(k);
        if t.is_nan() {
            return Err(Error::Series(format!("term {k} is NaN")));
        }
        if t.is_infinite() {
            return Ok(SeriesSum::Diverged { partial: f64::INFINITY, terms: k + 1 });
        }
        partial += t;
        let abs = t.abs();

        let window_max = recent.iter().cloned().fold(0.0_f64, f64::max);
        if k >= opts.monotone_burn_in && !recent.is_empty() {
            if abs > window_max * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::Series(format!(
                    "monotonicity certificate failed at term {k}: |t| = {abs:e} exceeds window max {window_max:e}"
                )));
            }
            if window_max > 0.0 {
                ratio_max = ratio_max.max(abs / window_max);
            }
        }
        recent.push_back(abs);
        if recent.len() > opts.monotone_window {
            recent.pop_front();
        }

        let settled = recent.len() >= opts.monotone_window || k + 1 >= opts.max_terms;
        if settled && recent.iter().all(|&a| a < opts.increment_tol) {
            let r = ratio_max.clamp(0.0, 0.999);
            let window_max = recent.iter().cloned().fold(0.0_f64, f64::max);
            let tail_bound = window_max * (opts.monotone_window as f64) * r / (1.0 - r);
            return Ok(SeriesSum::Converged { value: partial, tail_bound, terms: k + 1 });
        }

        if partial > opts.divergence_cap {
            return Ok(SeriesSum::Diverged { partial, terms: k + 1 });
        }

        // Plateau detector on window maxima: when the max over the latest
        // window neither vanishes nor falls measurably below the max over
        // the preceding window, the terms are not tending to zero and the
        // series is declared divergent. Interleaved subsequences (such as
        // alternating atom halves) are handled because only maxima are
        // compared.
        window.push_back(t);
        if window.len() > 2 * opts.plateau_window {
            window.pop_front();
        }
        if window.len() == 2 * opts.plateau_window {
            let m_prev = window.iter().take(opts.plateau_window).cloned().fold(0.0_f64, f64::max);
            let m_last = window.iter().skip(opts.plateau_window).cloned().fold(0.0_f64, f64::max);
            if m_last >= opts.plateau_floor
                && m_last <= m_prev * (1.0 + 1e-9)
                && (m_prev - m_last) / m_prev < opts.plateau_rel_drop
            {
                return Ok(SeriesSum::Diverged { partial, terms: k + 1 });
            }
        }
    }
    Ok(SeriesSum::Inconclusive { partial, terms: opts.max_terms })
}

/// Least-squares line fit.
#[derive(Debug, Clone, Copy)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Option<LinearFit> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    Some(LinearFit { slope, intercept })
}

/// Plain-order sum accumulator with sample standard error of the mean.
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningSum {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl RunningSum {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    /// Merge a partial accumulator; callers must merge in a fixed order for
    /// bit-reproducibility.
    pub fn merge(&mut self, other: &RunningSum) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            f64::NAN
        } else {
            self.sum / self.n as f64
        }
    }

    pub fn standard_error(&self) -> f64 {
        if self.n < 2 {
            return f64::NAN;
        }
        let n = self.n as f64;
        let var = ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// SplitMix64 step, used to derive per-chunk RNG streams from a base seed.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Serde adapter serializing `±inf` as the strings "inf"/"-inf" so that
/// extended-real prices survive JSON round trips.
pub mod ext_real {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Finite(f64),
        Named(String),
    }

    pub fn serialize<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
        if x.is_finite() {
            Repr::Finite(*x).serialize(s)
        } else if *x > 0.0 {
            Repr::Named("inf".to_string()).serialize(s)
        } else {
            Repr::Named("-inf".to_string()).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Finite(x) => Ok(x),
            Repr::Named(s) => match s.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(serde::de::Error::custom(format!(
                    "expected number, \"inf\" or \"-inf\", got {other:?}"
                ))),
            },
        }
    }
}
