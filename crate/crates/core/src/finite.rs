//! Finite-sample-space polar-cone engine.
//!
//! A market on m states with gain vectors `g_1..g_J` induces the cone
//! `G = cone(gains) - R^m_+` of super-replicable claims at zero cost. Its
//! polar within the nonnegative orthant is
//! `G⁰ = { z ≥ 0 : ⟨z, g_j⟩ ≤ 0 ∀j }`, the separating elements; slicing at
//! `⟨z, 1⟩ = 1` gives the probability-vector section N₁. The abstract price
//! `inf { x : f - x·1 ∈ G }` equals `max { ⟨z, f⟩ : z ∈ N₁ }` and the
//! minimum is attained — both sides are computed and compared here.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::bisect_threshold;
use crate::simplex::{self, Constraint, Lp, LpOutcome, Relation};

/// Agreement tolerance between the primal bisection and the dual LP.
pub const PRICE_TOL: f64 = 1e-7;
/// Membership tolerance for polar inequalities.
pub const POLAR_TOL: f64 = 1e-8;

const MAX_STATES: usize = 64;
const MAX_GAINS: usize = 32;

/// A finite market: strictly positive state probabilities and gain vectors.
/// Separating elements are expressed in measure coordinates (the vector of
/// state masses), so the pairing is the plain dot product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMarket {
    #[serde(rename = "p")]
    pub probabilities: Vec<f64>,
    pub gains: Vec<Vec<f64>>,
}

impl FiniteMarket {
    pub fn new(probabilities: Vec<f64>, gains: Vec<Vec<f64>>) -> Result<Self> {
        let m = probabilities.len();
        if m == 0 || m > MAX_STATES {
            return Err(Error::domain(format!("state count {m} outside 1..={MAX_STATES}")));
        }
        if gains.len() > MAX_GAINS {
            return Err(Error::domain(format!(
                "gain count {} exceeds {MAX_GAINS}",
                gains.len()
            )));
        }
        if probabilities.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::domain("probabilities must be strictly positive".to_string()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("probabilities sum to {total}, expected 1")));
        }
        for (j, g) in gains.iter().enumerate() {
            if g.len() != m {
                return Err(Error::domain(format!(
                    "gain {j} has dimension {}, expected {m}",
                    g.len()
                )));
            }
        }
        Ok(FiniteMarket { probabilities, gains })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: FiniteMarket = serde_json::from_str(text)
            .map_err(|e| Error::domain(format!("market JSON: {e}")))?;
        FiniteMarket::new(raw.probabilities, raw.gains)
    }

    pub fn states(&self) -> usize {
        self.probabilities.len()
    }

    /// Random market whose gains are projected to annihilate a hidden
    /// strictly positive measure, so N₁ is guaranteed nonempty.
    pub fn random_with_separating_element<R: Rng>(
        m_max: usize,
        j_max: usize,
        rng: &mut R,
    ) -> Self {
        let m = rng.random_range(2..=m_max.max(2));
        let j = rng.random_range(1..=j_max.max(1));
        let mut p: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= total);

        let mut witness: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
        let wtotal: f64 = witness.iter().sum();
        witness.iter_mut().for_each(|v| *v /= wtotal);

        let gains = (0..j)
            .map(|_| {
                let raw: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
                let shift: f64 =
                    raw.iter().zip(&witness).map(|(r, w)| r * w).sum::<f64>();
                raw.iter().map(|r| r - shift).collect()
            })
            .collect();
        FiniteMarket::new(p, gains).expect("constructed within caps")
    }
}

/// A polyhedral cone `cone(generators) - R^m_+` (the orthant term is always
/// present for market cones).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeSpec {
    pub generators: Vec<Vec<f64>>,
    pub minus_orthant: bool,
}

impl From<&FiniteMarket> for ConeSpec {
    fn from(market: &FiniteMarket) -> Self {
        ConeSpec { generators: market.gains.clone(), minus_orthant: true }
    }
}

/// Constraint description of `G⁰` with an LP-backed vertex sampler of N₁.
#[derive(Debug, Clone)]
pub struct PolarDescription {
    pub dimension: usize,
    pub gain_rows: Vec<Vec<f64>>,
    pub n1_empty: bool,
}

impl PolarDescription {
    /// Is `z` in `G⁰` (nonnegative, all gain pairings ≤ 0)?
    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dimension
            && z.iter().all(|&v| v >= -POLAR_TOL)
            && self.gain_rows.iter().all(|g| dot(g, z) <= POLAR_TOL)
    }

    /// Sample vertices of N₁ by maximizing random LP objectives.
    pub fn sample_n1_vertices<R: Rng>(&self, count: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        if self.n1_empty {
            return Ok(Vec::new());
        }
        let mut vertices: Vec<Vec<f64>> = Vec::new();
        for _ in 0..count {
            let objective: Vec<f64> =
                (0..self.dimension).map(|_| rng.random_range(-1.0..1.0)).collect();
            let lp = Lp { objective, constraints: self.n1_constraints() };
            if let LpOutcome::Optimal { solution, .. } = simplex::solve(&lp)? {
                if !vertices.iter().any(|v| max_abs_diff(v, &solution) < 1e-9) {
                    vertices.push(solution);
                }
            }
        }
        Ok(vertices)
    }

    fn n1_constraints(&self) -> Vec<Constraint> {
        let mut cs: Vec<Constraint> = self
            .gain_rows
            .iter()
            .map(|g| Constraint::new(g.clone(), Relation::Le, 0.0))
            .collect();
        cs.push(Constraint::new(vec![1.0; self.dimension], Relation::Eq, 1.0));
        cs
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Build the polar description of the market cone; N₁ emptiness (an
/// arbitrage-like degenerate market) is reported, not thrown.
pub fn polar_elements(market: &FiniteMarket) -> Result<PolarDescription> {
    let m = market.states();
    let gain_rows = market.gains.clone();
    let mut probe = PolarDescription { dimension: m, gain_rows, n1_empty: false };
    let lp = Lp { objective: vec![0.0; m], constraints: probe.n1_constraints() };
    probe.n1_empty = matches!(simplex::solve(&lp)?, LpOutcome::Infeasible);
    Ok(probe)
}

/// Max of `⟨z, f⟩` over N₁; `None` when N₁ is empty.
fn n1_max(polar: &PolarDescription, f: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
    if polar.n1_empty {
        return Ok(None);
    }
    let lp = Lp { objective: f.to_vec(), constraints: polar.n1_constraints() };
    match simplex::solve(&lp)? {
        LpOutcome::Optimal { value, solution } => Ok(Some((value, solution))),
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => Err(Error::Lp("N1 section cannot be unbounded".to_string())),
    }
}

/// Max of `⟨z, f⟩` over the box-normalized N₀ directions
/// (`z ∈ G⁰, ⟨z,1⟩ = 0, z ≤ 1`); zero whenever the orthant pins N₀ = {0}.
fn n0_max(polar: &PolarDescription, f: &[f64]) -> Result<f64> {
    let m = polar.dimension;
    let mut constraints: Vec<Constraint> = polar
        .gain_rows
        .iter()
        .map(|g| Constraint::new(g.clone(), Relation::Le, 0.0))
        .collect();
    constraints.push(Constraint::new(vec![1.0; m], Relation::Eq, 0.0));
    for i in 0..m {
        let mut row = vec![0.0; m];
        row[i] = 1.0;
        constraints.push(Constraint::new(row, Relation::Le, 1.0));
    }
    let lp = Lp { objective: f.to_vec(), constraints };
    match simplex::solve(&lp)? {
        LpOutcome::Optimal { value, .. } => Ok(value),
        LpOutcome::Infeasible => Err(Error::Lp("N0 always contains 0".to_string())),
        LpOutcome::Unbounded => Err(Error::Lp("boxed N0 cannot be unbounded".to_string())),
    }
}

/// Direct membership `f ∈ G`: some `λ ≥ 0` with `Σ λ_j g_j ≥ f`.
fn direct_membership(market: &FiniteMarket, f: &[f64]) -> Result<bool> {
    let m = market.states();
    let j = market.gains.len();
    let constraints: Vec<Constraint> = (0..m)
        .map(|i| {
            let row: Vec<f64> = (0..j).map(|jj| market.gains[jj][i]).collect();
            Constraint::new(row, Relation::Ge, f[i])
        })
        .collect();
    simplex::feasible(j, &constraints)
}

/// Two independent membership tests for `f ∈ G` that must agree: the direct
/// LP (`f ≤ Σ λ_j g_j`) and the polar test (`⟨z, f⟩ ≤ 0` over N₁ and the
/// normalized N₀ directions). Their agreement is the finite-dimensional
/// shadow of the bipolar identity.
pub fn bipolar_membership(market: &FiniteMarket, f: &[f64]) -> Result<bool> {
    if f.len() != market.states() {
        return Err(Error::domain(format!(
            "claim dimension {} does not match {} states",
            f.len(),
            market.states()
        )));
    }
    let direct = direct_membership(market, f)?;
    let polar = polar_elements(market)?;
    let n1_part = match n1_max(&polar, f)? {
        Some((value, _)) => value <= POLAR_TOL,
        None => true,
    };
    let n0_part = n0_max(&polar, f)? <= POLAR_TOL;
    let bipolar = n1_part && n0_part;
    if direct != bipolar {
        return Err(Error::Lp(format!(
            "bipolar disagreement: direct = {direct}, polar test = {bipolar}"
        )));
    }
    Ok(direct)
}

/// Price and maximizer of `inf { x : f - x·1 ∈ G } = max_{z ∈ N₁} ⟨z, f⟩`.
#[derive(Debug, Clone, Serialize)]
pub struct AbstractPriceResult {
    /// The common value (reported from the dual LP, which is exact at a
    /// vertex).
    pub price: f64,
    /// The independently bisected primal value; must agree within
    /// [`PRICE_TOL`].
    pub primal_bisection: f64,
    pub maximizer: Vec<f64>,
    pub is_minimum: bool,
}

/// Solve both sides of the finite duality and check that they agree within
/// [`PRICE_TOL`]; attainment is verified by membership of `f - price·1`.
pub fn abstract_price(market: &FiniteMarket, f: &[f64]) -> Result<AbstractPriceResult> {
    if f.len() != market.states() {
        return Err(Error::domain(format!(
            "claim dimension {} does not match {} states",
            f.len(),
            market.states()
        )));
    }
    let polar = polar_elements(market)?;
    let Some((dual_value, maximizer)) = n1_max(&polar, f)? else {
        return Err(Error::EmptyN1);
    };

    // Primal: smallest x with f - x·1 ∈ G, located by bisection.
    let shift = |x: f64| -> Vec<f64> { f.iter().map(|v| v - x).collect() };
    let hi0 = f.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut hi = hi0;
    while !direct_membership(market, &shift(hi))? {
        hi += 1.0 + hi.abs() * 0.5;
        if hi > 1e9 {
            return Err(Error::Lp("primal membership never became feasible".to_string()));
        }
    }
    let mut lo = dual_value - 1.0;
    while direct_membership(market, &shift(lo))? {
        lo -= 1.0 + lo.abs() * 0.5;
        if lo < -1e9 {
            return Err(Error::Lp("primal membership never became infeasible".to_string()));
        }
    }
    let market_clone = market.clone();
    let primal = bisect_threshold(
        |x| direct_membership(&market_clone, &shift(x)).unwrap_or(false),
        lo,
        hi,
        1e-10,
    );

    if (primal - dual_value).abs() > PRICE_TOL {
        return Err(Error::Lp(format!(
            "primal {primal} and dual {dual_value} disagree beyond {PRICE_TOL}"
        )));
    }

    // Attainment: the infimum is a minimum when f - price·1 itself sits in
    // the cone (checked with a one-ulp-scale slack).
    let is_minimum = direct_membership(market, &shift(dual_value + 1e-9))?;
    Ok(AbstractPriceResult { price: dual_value, primal_bisection: primal, maximizer, is_minimum })
}

/// Report of the decomposition `G⁰ = ⋃_{λ>0} λN₁ ∪ N₀` on sampled elements.
#[derive(Debug, Clone, Serialize)]
pub struct N0DecompositionReport {
    pub samples: usize,
    pub decomposed_into_n1: usize,
    pub zero_elements: usize,
    /// True when every sampled mass-zero element was the origin — the
    /// `N₀ = {0}` consequence of strictly positive state probabilities.
    pub n0_trivial: bool,
}

/// Sample elements of `G⁰` (boxed at `z ≤ 1`) with random objectives and
/// verify each is either ~0 or a positive multiple of an N₁ element.
pub fn n0_decomposition_check<R: Rng>(
    market: &FiniteMarket,
    samples: usize,
    rng: &mut R,
) -> Result<N0DecompositionReport> {
    let polar = polar_elements(market)?;
    let m = market.states();
    let mut decomposed = 0;
    let mut zero = 0;
    let mut n0_trivial = true;
    for _ in 0..samples {
        let objective: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut constraints: Vec<Constraint> = polar
            .gain_rows
            .iter()
            .map(|g| Constraint::new(g.clone(), Relation::Le, 0.0))
            .collect();
        for i in 0..m {
            let mut row = vec![0.0; m];
            row[i] = 1.0;
            constraints.push(Constraint::new(row, Relation::Le, 1.0));
        }
        let LpOutcome::Optimal { solution: z, .. } =
            simplex::solve(&Lp { objective, constraints })?
        else {
            continue;
        };
        let mass: f64 = z.iter().sum();
        if mass > POLAR_TOL {
            // normalize and re-check the N₁ constraints
            let scaled: Vec<f64> = z.iter().map(|v| v / mass).collect();
            if polar.contains(&scaled) {
                decomposed += 1;
            }
        } else {
            zero += 1;
            if z.iter().any(|&v| v.abs() > POLAR_TOL) {
                n0_trivial = false;
            }
        }
    }
    Ok(N0DecompositionReport {
        samples,
        decomposed_into_n1: decomposed,
        zero_elements: zero,
        n0_trivial,
    })
}
