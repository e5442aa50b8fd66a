//! Random exact instances, property sweeps, witnesses, and the indicator
//! function analysis on two-dimensional grids.
//!
//! Every random choice flows from a ChaCha8 stream keyed by `(seed, trial)`,
//! so a trial reproduces the same instance regardless of scheduling.

use crate::cumulants::{block_moments, evaluate_kappa, zero_sum, CumulantError, CumulantSpec, SpecKind};
use crate::lattice::{
    inductive_gap, is_increasing, is_mtp2, CoordSubset, LatticeError, LatticeFunction, LatticeMeasure, LatticeShape,
};
use crate::partitions::{enumerate_partitions, Partition};
use crate::rational::{bit_size, format_rational, int, serde_rational, Rational};
use crate::symcert::{certify, SymcertError};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifierError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Cumulant(#[from] CumulantError),
    #[error(transparent)]
    Symcert(#[from] SymcertError),
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("generated weights need {bits} bits, above the cap of {cap}")]
    WeightOverflow { bits: u64, cap: u64 },
    #[error("parameter {name} is negative")]
    NegativeParameter { name: String },
    #[error("the measure must live on a two-coordinate grid")]
    NotTwoDimensional,
    #[error("thresholds must satisfy {0}")]
    BadThresholds(String),
    #[error("case {case} needs {needs}, but b = {b:?}")]
    CaseMismatch { case: u8, needs: &'static str, b: [usize; 3] },
    #[error("closed form disagrees with direct evaluation: {0}")]
    IdentityFailed(String),
    #[error("a proved inequality failed: {0}")]
    TheoremViolated(String),
    #[error("search box holds {candidates} candidates, above the cap of {cap}")]
    BoxTooLarge { candidates: u128, cap: u128 },
}

/// How the generator builds the measure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "measure")]
pub enum MeasureMode {
    /// `μ(x) ∝ ∏ s_i(x_i) ∏_{i<j} z_ij^{x_i x_j}` with random `z_ij >= 1`.
    PairwisePotential,
    /// Pairwise potential with one factor and one coupling shared by all
    /// coordinates; needs equal chain lengths.
    Exchangeable,
    Uniform,
    Explicit(LatticeMeasure),
}

/// How the generator builds each function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode", content = "functions")]
pub enum FunctionMode {
    /// Each value is the largest value below it plus a random increment.
    IncrementSum,
    /// `f(x) = Σ_a ν(a) 1[x >= a]` for a random nonnegative `ν`.
    IndicatorMixture,
    Explicit(Vec<LatticeFunction>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceGenConfig {
    pub shape: Vec<usize>,
    pub seed: u64,
    pub measure: MeasureMode,
    pub functions: FunctionMode,
    /// Number of functions to generate.
    pub count: usize,
    /// Generated values are scaled into `[0, value_bound]`.
    #[serde(with = "serde_rational")]
    pub value_bound: Rational,
    /// Subtracted from every generated value; a positive shift allows
    /// negative functions.
    #[serde(with = "serde_rational")]
    pub shift: Rational,
    /// When false every coupling `z_ij` is 1 and the measure is a product.
    pub coupled: bool,
    pub max_weight_bits: u64,
}

impl InstanceGenConfig {
    pub fn new(shape: Vec<usize>, seed: u64, count: usize) -> Self {
        Self {
            shape,
            seed,
            measure: MeasureMode::PairwisePotential,
            functions: FunctionMode::IncrementSum,
            count,
            value_bound: int(10),
            shift: Rational::zero(),
            coupled: true,
            max_weight_bits: 4096,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub measure: LatticeMeasure,
    pub functions: Vec<LatticeFunction>,
}

/// The random stream for one trial.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn small_rational(rng: &mut ChaCha8Rng, num: std::ops::RangeInclusive<i64>, den: i64) -> Rational {
    Rational::new(rng.gen_range(num).into(), rng.gen_range(1..=den).into())
}

/// Trial 0 of the configuration.
pub fn generate_instance(cfg: &InstanceGenConfig) -> Result<Instance, VerifierError> {
    generate_with_rng(cfg, &mut trial_rng(cfg.seed, 0))
}

pub fn generate_trial(cfg: &InstanceGenConfig, trial: u64) -> Result<Instance, VerifierError> {
    generate_with_rng(cfg, &mut trial_rng(cfg.seed, trial))
}

pub fn generate_with_rng(cfg: &InstanceGenConfig, rng: &mut ChaCha8Rng) -> Result<Instance, VerifierError> {
    let shape = LatticeShape::new(cfg.shape.clone())?;
    if cfg.value_bound.is_negative() || cfg.value_bound.is_zero() {
        return Err(VerifierError::InvalidConfig("value bound must be positive".into()));
    }
    let measure = match &cfg.measure {
        MeasureMode::PairwisePotential => pairwise_potential(rng, &shape, cfg.coupled, false)?,
        MeasureMode::Exchangeable => pairwise_potential(rng, &shape, cfg.coupled, true)?,
        MeasureMode::Uniform => LatticeMeasure::uniform(shape.clone()),
        MeasureMode::Explicit(mu) => {
            if mu.shape() != &shape {
                return Err(VerifierError::InvalidConfig("explicit measure has the wrong shape".into()));
            }
            mu.normalized()?
        }
    };
    let bits = measure.weights().iter().map(bit_size).max().unwrap_or(0);
    if bits > cfg.max_weight_bits {
        return Err(VerifierError::WeightOverflow {
            bits,
            cap: cfg.max_weight_bits,
        });
    }
    let functions = match &cfg.functions {
        FunctionMode::Explicit(fs) => {
            if fs.len() != cfg.count || fs.iter().any(|f| f.shape() != &shape) {
                return Err(VerifierError::InvalidConfig(
                    "explicit functions do not match the shape or count".into(),
                ));
            }
            fs.clone()
        }
        mode => (0..cfg.count)
            .map(|_| {
                let raw = match mode {
                    FunctionMode::IncrementSum => increment_sum(rng, &shape),
                    _ => indicator_mixture(rng, &shape),
                };
                let f = scale_into(raw, &cfg.value_bound);
                f.map(|v| v - &cfg.shift)
            })
            .collect(),
    };
    Ok(Instance { measure, functions })
}

fn pairwise_potential(
    rng: &mut ChaCha8Rng,
    shape: &LatticeShape,
    coupled: bool,
    exchangeable: bool,
) -> Result<LatticeMeasure, VerifierError> {
    let lens = shape.chain_lengths();
    let n = lens.len();
    if exchangeable && lens.iter().any(|&l| l != lens[0]) {
        return Err(VerifierError::InvalidConfig(
            "exchangeable measures need equal chain lengths".into(),
        ));
    }
    let mut draw_factor = |len: usize| -> Vec<Rational> { (0..len).map(|_| small_rational(rng, 1..=6, 3)).collect() };
    let factors: Vec<Vec<Rational>> = if exchangeable {
        let f = draw_factor(lens[0]);
        vec![f; n]
    } else {
        lens.iter().map(|&l| draw_factor(l)).collect()
    };
    let mut draw_coupling = || -> Rational {
        if coupled {
            Rational::one() + Rational::new(rng.gen_range(0..=4).into(), 4.into())
        } else {
            Rational::one()
        }
    };
    let mut couplings = vec![vec![Rational::one(); n]; n];
    let shared = draw_coupling();
    for i in 0..n {
        for j in (i + 1)..n {
            couplings[i][j] = if exchangeable { shared.clone() } else { draw_coupling() };
        }
    }
    let mu = LatticeMeasure::from_fn(shape.clone(), |x| {
        let mut w: Rational = x.iter().zip(&factors).map(|(&c, s)| s[c].clone()).product();
        for i in 0..n {
            for j in (i + 1)..n {
                w *= num_traits::pow(couplings[i][j].clone(), x[i] * x[j]);
            }
        }
        w
    })?;
    Ok(mu.normalized()?)
}

fn increment_sum(rng: &mut ChaCha8Rng, shape: &LatticeShape) -> LatticeFunction {
    let strides = shape.strides();
    let mut values: Vec<Rational> = Vec::with_capacity(shape.size());
    for r in 0..shape.size() {
        let coords = shape.coords(r);
        let base = coords
            .iter()
            .zip(&strides)
            .filter(|(&c, _)| c > 0)
            .map(|(_, &s)| values[r - s].clone())
            .max()
            .unwrap_or_else(|| Rational::new(rng.gen_range(0..=2).into(), 2.into()));
        let inc = if rng.gen_bool(0.35) {
            Rational::zero()
        } else {
            Rational::new(rng.gen_range(1..=4).into(), 2.into())
        };
        values.push(base + inc);
    }
    LatticeFunction::new(shape.clone(), values).expect("one value per point")
}

fn indicator_mixture(rng: &mut ChaCha8Rng, shape: &LatticeShape) -> LatticeFunction {
    let n = shape.size();
    let mut nu: Vec<Rational> = (0..n)
        .map(|_| {
            if rng.gen_bool(0.4) {
                Rational::new(rng.gen_range(1..=4).into(), 2.into())
            } else {
                Rational::zero()
            }
        })
        .collect();
    if nu.iter().all(Zero::is_zero) {
        nu[rng.gen_range(0..n)] = Rational::one();
    }
    let coords = shape.all_coords();
    let values = (0..n)
        .map(|x| {
            (0..n)
                .filter(|&a| coords[a].iter().zip(&coords[x]).all(|(ai, xi)| ai <= xi))
                .map(|a| nu[a].clone())
                .sum()
        })
        .collect();
    LatticeFunction::new(shape.clone(), values).expect("one value per point")
}

fn scale_into(f: LatticeFunction, bound: &Rational) -> LatticeFunction {
    let max = f.values().iter().max().cloned().unwrap_or_else(Rational::zero);
    if &max > bound {
        let k = bound / max;
        f.map(|v| v * &k)
    } else {
        f
    }
}

/// A stored instance together with the value it produced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub claim: String,
    pub spec: CumulantSpec,
    pub measure: LatticeMeasure,
    pub functions: Vec<LatticeFunction>,
    #[serde(with = "serde_rational")]
    pub value: Rational,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trial: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReplayOutcome {
    #[serde(with = "serde_rational")]
    pub stored: Rational,
    #[serde(with = "serde_rational")]
    pub recomputed: Rational,
    pub matches: bool,
}

/// Re-evaluates a witness from its embedded instance.
pub fn replay(w: &Witness) -> Result<ReplayOutcome, VerifierError> {
    let recomputed = evaluate_kappa(&w.spec, &w.measure, &w.functions)?;
    Ok(ReplayOutcome {
        matches: recomputed == w.value,
        stored: w.value.clone(),
        recomputed,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub spec: CumulantSpec,
    pub config: InstanceGenConfig,
    pub trials: u64,
    pub violations: u64,
    /// Trials whose instance failed the MTP2 or monotonicity check, or (with
    /// no shift) produced a negative function.
    pub hypothesis_failures: u64,
    #[serde(with = "serde_rational")]
    pub min_value: Rational,
    pub min_trial: u64,
    pub first_witness: Option<Witness>,
}

struct TrialResult {
    value: Rational,
    hypotheses_ok: bool,
}

/// Evaluates the spec on `trials` independent instances and records the first
/// negative value (by trial index) as a witness.
pub fn sweep(spec: &CumulantSpec, template: &InstanceGenConfig, trials: u64) -> Result<SweepReport, VerifierError> {
    if trials == 0 {
        return Err(VerifierError::InvalidConfig("at least one trial is required".into()));
    }
    let mut cfg = template.clone();
    cfg.count = spec.m();
    let results: Vec<TrialResult> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let inst = generate_trial(&cfg, t)?;
            let value = evaluate_kappa(spec, &inst.measure, &inst.functions)?;
            let hypotheses_ok = is_mtp2(&inst.measure)
                && inst.functions.iter().all(|f| {
                    is_increasing(f) && (cfg.shift.is_positive() || f.is_nonnegative())
                });
            Ok(TrialResult { value, hypotheses_ok })
        })
        .collect::<Result<_, VerifierError>>()?;
    let violations = results.iter().filter(|r| r.value.is_negative()).count() as u64;
    let hypothesis_failures = results.iter().filter(|r| !r.hypotheses_ok).count() as u64;
    let (min_trial, min_value) = results
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.cmp(&b.1.value).then(a.0.cmp(&b.0)))
        .map(|(t, r)| (t as u64, r.value.clone()))
        .expect("at least one trial");
    let first_witness = match results.iter().position(|r| r.value.is_negative()) {
        Some(t) => {
            let inst = generate_trial(&cfg, t as u64)?;
            Some(Witness {
                claim: format!("{} m={} is nonnegative", spec.kind(), spec.m()),
                spec: spec.clone(),
                measure: inst.measure,
                functions: inst.functions,
                value: results[t].value.clone(),
                seed: Some(cfg.seed),
                trial: Some(t as u64),
            })
        }
        None => None,
    };
    Ok(SweepReport {
        spec: spec.clone(),
        config: cfg,
        trials,
        violations,
        hypothesis_failures,
        min_value,
        min_trial,
        first_witness,
    })
}

/// Parameters `(α, β, γ, δ)` of the two-point-per-axis example on `2^{w,z}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoPointParams {
    #[serde(with = "serde_rational::vec")]
    pub alpha: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub beta: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub gamma: Vec<Rational>,
    #[serde(with = "serde_rational::vec")]
    pub delta: Vec<Rational>,
}

impl TwoPointParams {
    /// `α = β = (1,2,3)`, `γ = (4,5,6)`, `δ = (1/10, 2/10, 3/10)`.
    pub fn first_set() -> Self {
        let v = |xs: [i64; 3]| xs.map(int).to_vec();
        Self {
            alpha: v([1, 2, 3]),
            beta: v([1, 2, 3]),
            gamma: v([4, 5, 6]),
            delta: [1, 2, 3].map(|k| Rational::new(k.into(), 10.into())).to_vec(),
        }
    }

    /// `α_i = β_i = γ_i = δ_i = i`.
    pub fn second_set() -> Self {
        let v = [1, 2, 3].map(int).to_vec();
        Self {
            alpha: v.clone(),
            beta: v.clone(),
            gamma: v.clone(),
            delta: v,
        }
    }
}

/// The measure `(1/2, 1/8, 1/8, 1/4)` on `2^{w,z}` (w is coordinate 0) and the
/// functions `f_i = (α_i, α_i+β_i, α_i+γ_i, α_i+β_i+γ_i+δ_i)` in rank order.
pub fn two_point_instance(p: &TwoPointParams) -> Result<(LatticeMeasure, [LatticeFunction; 3]), VerifierError> {
    for (name, xs) in [("alpha", &p.alpha), ("beta", &p.beta), ("gamma", &p.gamma), ("delta", &p.delta)] {
        if xs.len() != 3 {
            return Err(VerifierError::InvalidConfig(format!("{name} needs three entries")));
        }
        if let Some(i) = xs.iter().position(Signed::is_negative) {
            return Err(VerifierError::NegativeParameter {
                name: format!("{name}[{}]", i + 1),
            });
        }
    }
    let shape = LatticeShape::boolean(2)?;
    let mu = LatticeMeasure::new(
        shape.clone(),
        [(1, 2), (1, 8), (1, 8), (1, 4)]
            .map(|(n, d)| Rational::new(n.into(), d.into()))
            .to_vec(),
    )?;
    let f = |i: usize| {
        let (a, b, g, d) = (&p.alpha[i], &p.beta[i], &p.gamma[i], &p.delta[i]);
        LatticeFunction::new(shape.clone(), vec![a.clone(), a + b, a + g, a + b + g + d])
    };
    Ok((mu, [f(0)?, f(1)?, f(2)?]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TwoPointGaps {
    #[serde(with = "serde_rational")]
    pub g_empty: Rational,
    #[serde(with = "serde_rational")]
    pub g_w: Rational,
    #[serde(with = "serde_rational")]
    pub g_z: Rational,
    #[serde(with = "serde_rational")]
    pub g_full: Rational,
    /// `g(∅) − g({w})`.
    #[serde(with = "serde_rational")]
    pub difference: Rational,
}

pub fn two_point_gaps(p: &TwoPointParams) -> Result<TwoPointGaps, VerifierError> {
    let (mu, [f1, f2, f3]) = two_point_instance(p)?;
    let g = |members: &[usize]| -> Result<Rational, VerifierError> {
        Ok(inductive_gap(&mu, [&f1, &f2, &f3], &CoordSubset::new(2, members.iter().copied())?)?)
    };
    let g_empty = g(&[])?;
    let g_w = g(&[0])?;
    Ok(TwoPointGaps {
        difference: &g_empty - &g_w,
        g_z: g(&[1])?,
        g_full: g(&[0, 1])?,
        g_empty,
        g_w,
    })
}

/// `g(∅) − g({w})` for the given parameters.
pub fn two_point_gap(p: &TwoPointParams) -> Result<Rational, VerifierError> {
    Ok(two_point_gaps(p)?.difference)
}

/// `ρ[i][j] = P(X1 >= a_{i+1}, X2 >= b_{j+1})` on a two-coordinate grid.
pub type RhoTable = [[Rational; 3]; 3];

fn grid_shape(mu: &LatticeMeasure) -> Result<(usize, usize), VerifierError> {
    match mu.shape().chain_lengths() {
        &[k1, k2] => Ok((k1, k2)),
        _ => Err(VerifierError::NotTwoDimensional),
    }
}

/// `P(X1 >= a, X2 >= b)`.
pub fn upper_orthant(mu: &LatticeMeasure, a: usize, b: usize) -> Result<Rational, VerifierError> {
    grid_shape(mu)?;
    let f = LatticeFunction::northeast_indicator(mu.shape().clone(), &[a, b]);
    Ok(crate::lattice::expectation(mu, &f)?)
}

pub fn rho_table(mu: &LatticeMeasure, a: [usize; 3], b: [usize; 3]) -> Result<RhoTable, VerifierError> {
    let mut rho: RhoTable = Default::default();
    for i in 0..3 {
        for j in 0..3 {
            rho[i][j] = upper_orthant(mu, a[i], b[j])?;
        }
    }
    Ok(rho)
}

/// Which of the six orderings of `b` a case covers.
pub fn case_ordering(case: u8) -> Option<([usize; 3], &'static str)> {
    // Indices listed from smallest b to largest.
    Some(match case {
        1 => ([0, 1, 2], "b1 <= b2 <= b3"),
        2 => ([0, 2, 1], "b1 <= b3 <= b2"),
        3 => ([1, 0, 2], "b2 <= b1 <= b3"),
        4 => ([1, 2, 0], "b2 <= b3 <= b1"),
        5 => ([2, 0, 1], "b3 <= b1 <= b2"),
        6 => ([2, 1, 0], "b3 <= b2 <= b1"),
        _ => return None,
    })
}

/// The first case whose ordering `b` satisfies.
pub fn case_of(b: [usize; 3]) -> u8 {
    (1..=6)
        .find(|&c| {
            let (ord, _) = case_ordering(c).expect("valid case");
            b[ord[0]] <= b[ord[1]] && b[ord[1]] <= b[ord[2]]
        })
        .expect("some ordering always applies")
}

/// The expanded κ'_3 line for a case: `2E(f1f2f3) − Σ E(fifj)E(fk) + ∏ E(fi)`
/// with each moment written as the matching `ρ` entry.
pub fn case_expanded(case: u8, r: &RhoTable) -> Option<Rational> {
    let (ord, _) = case_ordering(case)?;
    // E(f_i f_j) = ρ[max(i,j)][index of the larger b among i, j].
    let top_b = |i: usize, j: usize| {
        let pos = |k| ord.iter().position(|&x| x == k).expect("index in ordering");
        if pos(i) > pos(j) {
            i
        } else {
            j
        }
    };
    let pair = |i: usize, j: usize| r[i.max(j)][top_b(i, j)].clone();
    let triple = r[2][ord[2]].clone();
    let two = int(2);
    Some(
        two * triple - (pair(0, 1) * &r[2][2] + pair(0, 2) * &r[1][1] + pair(1, 2) * &r[0][0])
            + &r[0][0] * &r[1][1] * &r[2][2],
    )
}

/// The factored closed form for a case. Case 6 uses the corrected middle
/// term `ρ31 − ρ21ρ33`; see [`case6_printed`] for the other variant.
pub fn case_closed_form(case: u8, r: &RhoTable) -> Option<Rational> {
    let one = Rational::one;
    let p = |i: usize, j: usize| r[i - 1][j - 1].clone();
    Some(match case {
        1 => (int(2) - p(1, 1)) * (one() - p(2, 2)) * p(3, 3),
        2 => (int(2) - p(1, 1)) * (p(3, 2) - p(3, 3) * p(2, 2)),
        3 => p(3, 3) * (one() - p(2, 1) + (one() - p(1, 1)) * (one() - p(2, 2))),
        4 => (one() - p(2, 2)) * (p(3, 1) - p(3, 3) * p(1, 1)) + p(3, 1) - p(2, 1) * p(3, 3),
        5 => (one() - p(1, 1)) * (p(3, 2) - p(3, 3) * p(2, 2)) + p(3, 2) - p(3, 1) * p(2, 2),
        6 => {
            (one() - p(2, 2)) * (p(3, 1) - p(3, 3) * p(1, 1))
                + (p(3, 1) - p(2, 1) * p(3, 3))
                + p(1, 1) * (p(3, 3) - p(3, 2))
        }
        _ => return None,
    })
}

/// Case 6 with the middle term written `ρ33(1 − ρ21)`; this differs from
/// the true value by `ρ33 − ρ31`.
pub fn case6_printed(r: &RhoTable) -> Rational {
    let one = Rational::one;
    let p = |i: usize, j: usize| r[i - 1][j - 1].clone();
    (one() - p(2, 2)) * (p(3, 1) - p(3, 3) * p(1, 1)) + p(3, 3) * (one() - p(2, 1)) + p(1, 1) * (p(3, 3) - p(3, 2))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndicatorCaseReport {
    pub case: u8,
    pub a: [usize; 3],
    pub b: [usize; 3],
    #[serde(with = "serde_rational")]
    pub closed_form: Rational,
    #[serde(with = "serde_rational")]
    pub expanded: Rational,
    #[serde(with = "serde_rational")]
    pub direct: Rational,
}

/// Evaluates the case closed form on northeast indicators
/// `f_j = 1[x1 >= a_j, x2 >= b_j]` and checks it against direct κ'_3.
pub fn indicator_case_eval(
    mu: &LatticeMeasure,
    a: [usize; 3],
    b: [usize; 3],
    case: u8,
) -> Result<IndicatorCaseReport, VerifierError> {
    let (k1, k2) = grid_shape(mu)?;
    if !(a[0] <= a[1] && a[1] <= a[2]) {
        return Err(VerifierError::BadThresholds("a1 <= a2 <= a3".into()));
    }
    if a.iter().any(|&x| x > k1) || b.iter().any(|&x| x > k2) {
        return Err(VerifierError::BadThresholds("thresholds within the grid".into()));
    }
    let (ord, needs) = case_ordering(case).ok_or_else(|| VerifierError::BadThresholds("case in 1..=6".into()))?;
    if !(b[ord[0]] <= b[ord[1]] && b[ord[1]] <= b[ord[2]]) {
        return Err(VerifierError::CaseMismatch { case, needs, b });
    }
    let rho = rho_table(mu, a, b)?;
    let fs: Vec<LatticeFunction> = (0..3)
        .map(|j| LatticeFunction::northeast_indicator(mu.shape().clone(), &[a[j], b[j]]))
        .collect();
    let direct = evaluate_kappa(&CumulantSpec::conjugate(3)?, mu, &fs)?;
    let closed_form = case_closed_form(case, &rho).expect("case checked");
    let expanded = case_expanded(case, &rho).expect("case checked");
    if closed_form != direct || expanded != direct {
        return Err(VerifierError::IdentityFailed(format!(
            "case {case}: closed form {}, expanded {}, direct {}",
            format_rational(&closed_form),
            format_rational(&expanded),
            format_rational(&direct)
        )));
    }
    Ok(IndicatorCaseReport {
        case,
        a,
        b,
        closed_form,
        expanded,
        direct,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CovDecomposition {
    #[serde(with = "serde_rational")]
    pub cov: Rational,
    /// `(E f2)(1 − E f1)` when `b1 <= b2`, otherwise
    /// `P(X1>=a2, X2>=b1)[1 − P(X1>=a1, X2>=b2)]`.
    #[serde(with = "serde_rational")]
    pub product_term: Rational,
    /// `P(a1,b2)P(a2,b1) − P(a1,b1)P(a2,b2)` when `b1 > b2`.
    #[serde(with = "serde_rational::option")]
    pub determinant: Option<Rational>,
    /// `P(X1>=a1, X2>=b1)[1 − P(X1>=a1, X2>=b2)]`, the alternative product
    /// term, kept for comparison when `b1 > b2`.
    #[serde(with = "serde_rational::option")]
    pub alternative_product_term: Option<Rational>,
    pub mtp2: bool,
}

/// Splits `Cov(f1, f2)` for `f_j = 1[x1 >= a_j, x2 >= b_j]`, `a1 <= a2`.
pub fn indicator_cov_decomposition(
    mu: &LatticeMeasure,
    a1: usize,
    a2: usize,
    b1: usize,
    b2: usize,
) -> Result<CovDecomposition, VerifierError> {
    grid_shape(mu)?;
    if a1 > a2 {
        return Err(VerifierError::BadThresholds("a1 <= a2".into()));
    }
    let p = |a, b| upper_orthant(mu, a, b);
    let f1 = LatticeFunction::northeast_indicator(mu.shape().clone(), &[a1, b1]);
    let f2 = LatticeFunction::northeast_indicator(mu.shape().clone(), &[a2, b2]);
    let e = |f: &LatticeFunction| crate::lattice::expectation(mu, f);
    let cov = e(&f1.mul(&f2)?)? - e(&f1)? * e(&f2)?;
    let mtp2 = is_mtp2(mu);
    let (product_term, determinant, alternative) = if b1 <= b2 {
        (e(&f2)? * (Rational::one() - e(&f1)?), None, None)
    } else {
        let (p11, p12, p21, p22) = (p(a1, b1)?, p(a1, b2)?, p(a2, b1)?, p(a2, b2)?);
        let det = &p12 * &p21 - &p11 * &p22;
        (
            &p21 * (Rational::one() - &p12),
            Some(det),
            Some(&p11 * (Rational::one() - &p12)),
        )
    };
    let total = &product_term + determinant.clone().unwrap_or_else(Rational::zero);
    if total != cov {
        return Err(VerifierError::IdentityFailed(format!(
            "split sums to {}, covariance is {}",
            format_rational(&total),
            format_rational(&cov)
        )));
    }
    if mtp2 && determinant.as_ref().is_some_and(Signed::is_negative) {
        return Err(VerifierError::TheoremViolated(
            "determinant term negative under an MTP2 measure".into(),
        ));
    }
    Ok(CovDecomposition {
        cov,
        product_term,
        determinant,
        alternative_product_term: alternative,
        mtp2,
    })
}

/// The spec `c1 E(f1f2f3) − Σ E(fifj)E(fk) + (3 − c1) ∏ E(fi)`.
pub fn c1_family(c1: i64) -> Result<CumulantSpec, VerifierError> {
    let p = |v: &[usize]| Partition::new(v.to_vec()).expect("valid partition");
    Ok(CumulantSpec::custom(
        3,
        vec![(p(&[3]), c1), (p(&[2, 1]), -1), (p(&[1, 1, 1]), 3 - c1)],
    )?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IndicatorFeasibility {
    pub c1: i64,
    pub grid: Vec<usize>,
    pub measures: usize,
    pub triples_checked: u64,
    #[serde(with = "serde_rational")]
    pub min_value: Rational,
    pub violations: u64,
    /// On nested triples (`a` and `b` both increasing) the value is at least
    /// `π3(1−π1)(1−2π2)` with `π_j = P(X1 >= a_j, X2 >= b_j)`.
    pub nested_bound_holds: bool,
    /// Some nested triple meets the bound exactly with a negative value.
    pub negative_bound_attained: bool,
    pub witness: Option<Witness>,
}

/// Sweeps every northeast-indicator triple on `measures` random MTP2 grid
/// measures of shape `grid` and evaluates the `c1` family.
pub fn indicator_feasibility(
    c1: i64,
    grid: [usize; 2],
    measures: usize,
    seed: u64,
) -> Result<IndicatorFeasibility, VerifierError> {
    let spec = c1_family(c1)?;
    let mut cfg = InstanceGenConfig::new(grid.to_vec(), seed, 0);
    cfg.measure = MeasureMode::PairwisePotential;
    let thresholds: Vec<[usize; 2]> = (0..grid[0])
        .flat_map(|a| (0..grid[1]).map(move |b| [a, b]))
        .collect();
    let c1r = int(c1);
    let mut report = IndicatorFeasibility {
        c1,
        grid: grid.to_vec(),
        measures,
        triples_checked: 0,
        min_value: Rational::zero(),
        violations: 0,
        nested_bound_holds: true,
        negative_bound_attained: false,
        witness: None,
    };
    let mut first_min = true;
    for k in 0..measures {
        let mu = generate_trial(&cfg, k as u64)?.measure;
        let indicators: Vec<LatticeFunction> = thresholds
            .iter()
            .map(|t| LatticeFunction::northeast_indicator(mu.shape().clone(), t))
            .collect();
        for (i, ti) in thresholds.iter().enumerate() {
            for (j, tj) in thresholds.iter().enumerate() {
                for (l, tl) in thresholds.iter().enumerate() {
                    let fs = [indicators[i].clone(), indicators[j].clone(), indicators[l].clone()];
                    let moments = block_moments(&mu, &fs)?;
                    let value = spec.evaluate_moments(&moments);
                    report.triples_checked += 1;
                    if first_min || value < report.min_value {
                        report.min_value = value.clone();
                        first_min = false;
                    }
                    if value.is_negative() {
                        report.violations += 1;
                        if report.witness.is_none() {
                            report.witness = Some(Witness {
                                claim: format!("c1={c1} variant is nonnegative on northeast indicators"),
                                spec: spec.clone(),
                                measure: mu.clone(),
                                functions: fs.to_vec(),
                                value: value.clone(),
                                seed: Some(seed),
                                trial: Some(k as u64),
                            });
                        }
                    }
                    let nested = ti[0] <= tj[0] && tj[0] <= tl[0] && ti[1] <= tj[1] && tj[1] <= tl[1];
                    if nested && c1 >= 1 {
                        let (p1, p2, p3) = (&moments[1], &moments[2], &moments[4]);
                        let bound = p3 * (Rational::one() - p1) * (Rational::one() - int(2) * p2);
                        if value < bound {
                            report.nested_bound_holds = false;
                        }
                        if value == bound && bound.is_negative() && c1r.is_one() {
                            report.negative_bound_attained = true;
                        }
                    }
                }
            }
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertificateSearch {
    pub m: usize,
    pub bound: i64,
    pub partitions: Vec<Partition>,
    pub candidates: u64,
    /// Nonzero coefficient vectors (in partition order) with zero sum and a
    /// passing certificate.
    pub found: Vec<Vec<i64>>,
}

/// Largest box the certificate search will enumerate.
pub const MAX_SEARCH_CANDIDATES: u128 = 1_000_000;

/// Enumerates coefficient vectors with `1 <= |c_λ| <= bound` and keeps those
/// whose zero sum vanishes and whose shifted expansion is nonnegative.
pub fn certificate_search(m: usize, bound: i64) -> Result<CertificateSearch, VerifierError> {
    if bound < 1 {
        return Err(VerifierError::InvalidConfig("search bound must be at least 1".into()));
    }
    let partitions = enumerate_partitions(m).map_err(CumulantError::from)?;
    let width = 2 * bound as u128;
    let candidates = partitions
        .iter()
        .try_fold(1u128, |acc, _| acc.checked_mul(width))
        .unwrap_or(u128::MAX);
    if candidates > MAX_SEARCH_CANDIDATES {
        return Err(VerifierError::BoxTooLarge {
            candidates,
            cap: MAX_SEARCH_CANDIDATES,
        });
    }
    let values: Vec<i64> = (-bound..=bound).filter(|&c| c != 0).collect();
    let vectors: Vec<Vec<i64>> = (0..candidates as u64)
        .map(|mut idx| {
            partitions
                .iter()
                .map(|_| {
                    let c = values[(idx % values.len() as u64) as usize];
                    idx /= values.len() as u64;
                    c
                })
                .collect()
        })
        .collect();
    let results: Vec<Option<Vec<i64>>> = vectors
        .into_par_iter()
        .map(|cs| {
            let spec = CumulantSpec::custom(m, partitions.iter().cloned().zip(cs.iter().copied()).collect())?;
            if zero_sum(&spec) != 0 {
                return Ok(None);
            }
            Ok(certify(&spec)?.pass.then_some(cs))
        })
        .collect::<Result<_, VerifierError>>()?;
    let mut found: Vec<Vec<i64>> = results.into_iter().flatten().collect();
    found.sort();
    Ok(CertificateSearch {
        m,
        bound,
        partitions,
        candidates: candidates as u64,
        found,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum FeasibilityMode {
    IndicatorR2 {
        c1: i64,
        grid: [usize; 2],
        measures: usize,
        seed: u64,
    },
    Certificate {
        bound: i64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum FeasibilityReport {
    Indicator(IndicatorFeasibility),
    Certificate(CertificateSearch),
}

pub fn coefficient_feasibility(m: usize, mode: &FeasibilityMode) -> Result<FeasibilityReport, VerifierError> {
    if m < 3 {
        return Err(VerifierError::InvalidConfig("m must be at least 3".into()));
    }
    match mode {
        FeasibilityMode::IndicatorR2 {
            c1,
            grid,
            measures,
            seed,
        } => {
            if m != 3 {
                return Err(VerifierError::InvalidConfig("the indicator mode is defined for m = 3".into()));
            }
            Ok(FeasibilityReport::Indicator(indicator_feasibility(*c1, *grid, *measures, *seed)?))
        }
        FeasibilityMode::Certificate { bound } => Ok(FeasibilityReport::Certificate(certificate_search(m, *bound)?)),
    }
}

/// Spec kinds a sweep can be asked for from the command line.
pub fn spec_for(m: usize, kind: SpecKind) -> Result<CumulantSpec, VerifierError> {
    Ok(CumulantSpec::closed_form(m, kind)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn generated_instances_satisfy_hypotheses() {
        for seed in 0..20 {
            for mode in [FunctionMode::IncrementSum, FunctionMode::IndicatorMixture] {
                let mut cfg = InstanceGenConfig::new(vec![3, 2, 2], seed, 3);
                cfg.functions = mode;
                let inst = generate_instance(&cfg).unwrap();
                assert!(is_mtp2(&inst.measure));
                assert!(inst.measure.is_normalized());
                for f in &inst.functions {
                    assert!(f.is_increasing());
                    assert!(f.is_nonnegative());
                    assert!(f.values().iter().all(|v| v <= &int(10)));
                }
            }
        }
    }

    #[test]
    fn uncoupled_potential_is_a_product() {
        let mut cfg = InstanceGenConfig::new(vec![2, 3], 7, 1);
        cfg.coupled = false;
        let mu = generate_instance(&cfg).unwrap().measure;
        let m0 = crate::lattice::marginalize(&mu, &CoordSubset::new(2, [0]).unwrap()).unwrap();
        let m1 = crate::lattice::marginalize(&mu, &CoordSubset::new(2, [1]).unwrap()).unwrap();
        for r in 0..6 {
            let c = mu.shape().coords(r);
            assert_eq!(mu.weight(r), &(m0.weight(c[0]) * m1.weight(c[1])));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = InstanceGenConfig::new(vec![2, 2, 2], 99, 3);
        assert_eq!(generate_trial(&cfg, 5).unwrap(), generate_trial(&cfg, 5).unwrap());
        assert_ne!(generate_trial(&cfg, 5).unwrap(), generate_trial(&cfg, 6).unwrap());
    }

    #[test]
    fn overflow_guard() {
        let mut cfg = InstanceGenConfig::new(vec![4, 4, 4], 1, 1);
        cfg.max_weight_bits = 4;
        assert!(matches!(generate_instance(&cfg), Err(VerifierError::WeightOverflow { .. })));
    }

    #[test]
    fn small_sweep_has_no_violations() {
        let cfg = InstanceGenConfig::new(vec![2, 2, 2], 3, 3);
        let report = sweep(&CumulantSpec::conjugate(3).unwrap(), &cfg, 50).unwrap();
        assert_eq!(report.violations, 0);
        assert_eq!(report.hypothesis_failures, 0);
        assert!(report.first_witness.is_none());
    }

    #[test]
    fn shifted_functions_break_nonnegativity() {
        let mut cfg = InstanceGenConfig::new(vec![2, 2], 11, 3);
        cfg.shift = int(10);
        let report = sweep(&CumulantSpec::conjugate(3).unwrap(), &cfg, 200).unwrap();
        let w = report.first_witness.expect("a witness");
        assert!(w.value.is_negative());
        assert!(replay(&w).unwrap().matches);
        let json = serde_json::to_string(&w).unwrap();
        let back: Witness = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
    }

    #[test]
    fn two_point_parameters() {
        let zero = TwoPointParams {
            alpha: vec![int(0); 3],
            beta: vec![int(0); 3],
            gamma: vec![int(0); 3],
            delta: vec![int(0); 3],
        };
        assert_eq!(two_point_gap(&zero).unwrap(), int(0));
        let mut neg = TwoPointParams::second_set();
        neg.gamma[1] = int(-1);
        assert!(matches!(
            two_point_gap(&neg),
            Err(VerifierError::NegativeParameter { .. })
        ));
        let second = two_point_gaps(&TwoPointParams::second_set()).unwrap();
        assert_eq!(second.difference, ratio(3884, 75));
        assert_eq!(second.g_full, int(0));
        let first = two_point_gaps(&TwoPointParams::first_set()).unwrap();
        assert_eq!(first.g_empty, ratio(2358879, 16000));
        assert_eq!(first.g_w, ratio(37527, 500));
        assert_eq!(first.g_z, ratio(64349, 6000));
        assert_eq!(first.difference, ratio(231603, 3200));
    }

    #[test]
    fn cases_on_random_grids() {
        for seed in 0..4 {
            let mu = generate_instance(&InstanceGenConfig::new(vec![3, 3], seed, 0)).unwrap().measure;
            for a in [[0, 1, 2], [0, 0, 1], [1, 1, 2]] {
                for b in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0], [1, 1, 0]] {
                    let case = case_of(b);
                    let r = indicator_case_eval(&mu, a, b, case).unwrap();
                    assert!(!r.direct.is_negative());
                }
            }
        }
    }

    #[test]
    fn case_gates() {
        let mu = LatticeMeasure::uniform(LatticeShape::new(vec![3, 3]).unwrap());
        assert!(matches!(
            indicator_case_eval(&mu, [0, 1, 2], [0, 1, 2], 6),
            Err(VerifierError::CaseMismatch { case: 6, .. })
        ));
        assert!(matches!(
            indicator_case_eval(&mu, [2, 1, 0], [0, 1, 2], 1),
            Err(VerifierError::BadThresholds(_))
        ));
        let flat = LatticeMeasure::uniform(LatticeShape::new(vec![2, 2, 2]).unwrap());
        assert_eq!(
            indicator_case_eval(&flat, [0, 0, 0], [0, 0, 0], 1),
            Err(VerifierError::NotTwoDimensional)
        );
    }

    #[test]
    fn covariance_split() {
        let mu = generate_instance(&InstanceGenConfig::new(vec![4, 4], 8, 0)).unwrap().measure;
        let d = indicator_cov_decomposition(&mu, 1, 2, 3, 1).unwrap();
        assert!(!d.determinant.unwrap().is_negative());
        let d = indicator_cov_decomposition(&mu, 1, 2, 1, 3).unwrap();
        assert!(d.determinant.is_none());
        assert!(indicator_cov_decomposition(&mu, 2, 1, 0, 0).is_err());
        let product = LatticeMeasure::uniform(LatticeShape::new(vec![3, 3]).unwrap());
        let d = indicator_cov_decomposition(&product, 0, 1, 2, 1).unwrap();
        assert_eq!(d.determinant, Some(int(0)));
    }

    #[test]
    fn indicator_thresholds() {
        let one = indicator_feasibility(1, [3, 3], 2, 5).unwrap();
        assert!(one.violations > 0);
        assert!(one.negative_bound_attained);
        assert!(one.nested_bound_holds);
        let w = one.witness.unwrap();
        assert!(replay(&w).unwrap().matches);
        let two = indicator_feasibility(2, [3, 3], 2, 5).unwrap();
        assert_eq!(two.violations, 0);
        assert!(two.nested_bound_holds);
    }

    #[test]
    fn box_search_m3() {
        let s = certificate_search(3, 3).unwrap();
        assert_eq!(s.found, vec![vec![2, -1, 1], vec![3, -2, 3]]);
        assert!(matches!(certificate_search(6, 3), Err(VerifierError::BoxTooLarge { .. })));
    }
}
