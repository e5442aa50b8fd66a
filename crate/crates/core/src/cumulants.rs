//! Partition-indexed alternating sums of expectation products.
//!
//! A [`CumulantSpec`] assigns an integer `c_λ` to every partition `λ` of `m`
//! and denotes `P_m(f_1..f_m) = Σ_λ c_λ Σ_{splits of type λ} ∏_blocks E(∏_{i∈S} f_i)`.
//! The ordinary cumulant uses `c_λ = (−1)^{l−1}(l−1)!` and the conjugate
//! cumulant uses `c_λ = (−1)^{l−1}(l(λ')−1)!`.

use crate::lattice::{LatticeError, LatticeFunction, LatticeMeasure};
use crate::partitions::{enumerate_partitions, splits_by_type, Partition, PartitionError, DEFAULT_SPLIT_CAP};
use crate::rational::Rational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CumulantError {
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error("spec has m = {expected} but {got} functions were supplied")]
    Arity { expected: usize, got: usize },
    #[error("coefficient list is missing partition {0}")]
    MissingPartition(Partition),
    #[error("partition {lambda:?} is not a partition of {m}")]
    ForeignPartition { lambda: Vec<usize>, m: usize },
    #[error("partition {0} appears twice")]
    DuplicatePartition(Partition),
    #[error("{kind} coefficient for {lambda} must be {expected}, got {got}")]
    CoefficientMismatch {
        kind: SpecKind,
        lambda: Partition,
        expected: i64,
        got: i64,
    },
    #[error("custom specs have no closed-form coefficients")]
    NoClosedForm,
    #[error("m = {m} is outside the supported range {min}..={max}")]
    OutOfRange { m: usize, min: usize, max: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Cumulant,
    Conjugate,
    Custom,
}

impl fmt::Display for SpecKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpecKind::Cumulant => "cumulant",
            SpecKind::Conjugate => "conjugate",
            SpecKind::Custom => "custom",
        })
    }
}

/// Closed-form coefficient; `None` for [`SpecKind::Custom`].
pub fn coefficient(lambda: &Partition, kind: SpecKind) -> Option<i64> {
    let sign = if lambda.len() % 2 == 1 { 1 } else { -1 };
    let l = match kind {
        SpecKind::Cumulant => lambda.len(),
        SpecKind::Conjugate => lambda.conjugate().len(),
        SpecKind::Custom => return None,
    };
    Some(sign * (1..l as i64).product::<i64>())
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Term {
    coeff: i64,
    masks: Vec<u32>,
}

/// Coefficients `c_λ` for every partition of `m`, with the expanded split
/// terms cached for evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct CumulantSpec {
    m: usize,
    kind: SpecKind,
    coeffs: Vec<(Partition, i64)>,
    terms: Vec<Term>,
}

impl CumulantSpec {
    /// The closed-form spec of the given kind.
    pub fn closed_form(m: usize, kind: SpecKind) -> Result<Self, CumulantError> {
        if kind == SpecKind::Custom {
            return Err(CumulantError::NoClosedForm);
        }
        let coeffs = enumerate_partitions(m)?
            .into_iter()
            .map(|l| {
                let c = coefficient(&l, kind).expect("closed-form kind");
                (l, c)
            })
            .collect();
        Self::build(m, kind, coeffs)
    }

    pub fn cumulant(m: usize) -> Result<Self, CumulantError> {
        Self::closed_form(m, SpecKind::Cumulant)
    }

    pub fn conjugate(m: usize) -> Result<Self, CumulantError> {
        Self::closed_form(m, SpecKind::Conjugate)
    }

    /// A custom spec; `coeffs` must list every partition of `m` exactly once.
    pub fn custom(m: usize, coeffs: Vec<(Partition, i64)>) -> Result<Self, CumulantError> {
        Self::with_kind(m, SpecKind::Custom, coeffs)
    }

    /// Validates `coeffs` against `kind`, reordering into canonical order.
    pub fn with_kind(m: usize, kind: SpecKind, coeffs: Vec<(Partition, i64)>) -> Result<Self, CumulantError> {
        let mut given: BTreeMap<Partition, i64> = BTreeMap::new();
        for (lambda, c) in coeffs {
            if lambda.weight() != m {
                return Err(CumulantError::ForeignPartition {
                    lambda: lambda.parts().to_vec(),
                    m,
                });
            }
            if given.insert(lambda.clone(), c).is_some() {
                return Err(CumulantError::DuplicatePartition(lambda));
            }
        }
        let mut ordered = Vec::new();
        for lambda in enumerate_partitions(m)? {
            let c = given
                .remove(&lambda)
                .ok_or_else(|| CumulantError::MissingPartition(lambda.clone()))?;
            if let Some(expected) = coefficient(&lambda, kind) {
                if expected != c {
                    return Err(CumulantError::CoefficientMismatch {
                        kind,
                        lambda,
                        expected,
                        got: c,
                    });
                }
            }
            ordered.push((lambda, c));
        }
        Self::build(m, kind, ordered)
    }

    fn build(m: usize, kind: SpecKind, coeffs: Vec<(Partition, i64)>) -> Result<Self, CumulantError> {
        let groups = splits_by_type(m, DEFAULT_SPLIT_CAP)?;
        let mut terms = Vec::new();
        for (lambda, c) in &coeffs {
            if *c == 0 {
                continue;
            }
            for split in &groups[lambda] {
                terms.push(Term {
                    coeff: *c,
                    masks: split.masks(),
                });
            }
        }
        Ok(Self {
            m,
            kind,
            coeffs,
            terms,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn kind(&self) -> SpecKind {
        self.kind
    }

    /// `(λ, c_λ)` pairs in reverse lexicographic order of `λ`.
    pub fn coeffs(&self) -> &[(Partition, i64)] {
        &self.coeffs
    }

    pub fn coeff(&self, lambda: &Partition) -> Option<i64> {
        self.coeffs.iter().find(|(l, _)| l == lambda).map(|(_, c)| *c)
    }

    /// Evaluates the spec from precomputed block moments (see [`block_moments`]).
    pub fn evaluate_moments(&self, moments: &[Rational]) -> Rational {
        let mut total = Rational::zero();
        for term in &self.terms {
            let mut prod = Rational::from_integer(term.coeff.into());
            for &mask in &term.masks {
                prod *= &moments[mask as usize];
            }
            total += prod;
        }
        total
    }
}

#[derive(Serialize, Deserialize)]
struct RawCoeff {
    lambda: Vec<usize>,
    c: i64,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    m: usize,
    kind: SpecKind,
    #[serde(default)]
    coeffs: Vec<RawCoeff>,
}

impl TryFrom<RawSpec> for CumulantSpec {
    type Error = CumulantError;

    fn try_from(raw: RawSpec) -> Result<Self, CumulantError> {
        if raw.coeffs.is_empty() && raw.kind != SpecKind::Custom {
            return Self::closed_form(raw.m, raw.kind);
        }
        let coeffs = raw
            .coeffs
            .into_iter()
            .map(|rc| Ok((Partition::new(rc.lambda)?, rc.c)))
            .collect::<Result<Vec<_>, CumulantError>>()?;
        Self::with_kind(raw.m, raw.kind, coeffs)
    }
}

impl From<CumulantSpec> for RawSpec {
    fn from(s: CumulantSpec) -> Self {
        Self {
            m: s.m,
            kind: s.kind,
            coeffs: s
                .coeffs
                .into_iter()
                .map(|(l, c)| RawCoeff {
                    lambda: l.into(),
                    c,
                })
                .collect(),
        }
    }
}

/// `E(∏_{i∈S} f_i)` for every subset `S` of `0..fs.len()`, indexed by bitmask.
pub fn block_moments(mu: &LatticeMeasure, fs: &[LatticeFunction]) -> Result<Vec<Rational>, CumulantError> {
    mu.ensure_normalized()?;
    for f in fs {
        if f.shape() != mu.shape() {
            return Err(LatticeError::ShapeMismatch {
                left: mu.shape().chain_lengths().to_vec(),
                right: f.shape().chain_lengths().to_vec(),
            }
            .into());
        }
    }
    let k = fs.len();
    let mut moments = vec![Rational::zero(); 1 << k];
    let mut prods = vec![Rational::one(); 1 << k];
    for r in 0..mu.shape().size() {
        let w = mu.weight(r);
        if w.is_zero() {
            continue;
        }
        for mask in 1usize..1 << k {
            let low = mask.trailing_zeros() as usize;
            prods[mask] = &prods[mask & (mask - 1)] * fs[low].value(r);
        }
        for mask in 0..1 << k {
            moments[mask] += w * &prods[mask];
        }
    }
    Ok(moments)
}

/// Exact value of `P_m(f_1..f_m)` under `μ`.
pub fn evaluate_kappa(
    spec: &CumulantSpec,
    mu: &LatticeMeasure,
    fs: &[LatticeFunction],
) -> Result<Rational, CumulantError> {
    if fs.len() != spec.m {
        return Err(CumulantError::Arity {
            expected: spec.m,
            got: fs.len(),
        });
    }
    Ok(spec.evaluate_moments(&block_moments(mu, fs)?))
}

/// `Σ_λ card(D(λ)) c_λ`, the value of the spec on `f_1 = ... = f_m = 1`.
pub fn zero_sum(spec: &CumulantSpec) -> i128 {
    spec.coeffs
        .iter()
        .map(|(l, c)| *c as i128 * l.split_count() as i128)
        .sum()
}

/// Formal polynomial in the symbols `E_S` (`S` a nonempty subset, as a bitmask).
/// Keys are sorted multisets of masks.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FormalMomentPolynomial {
    terms: BTreeMap<Vec<u32>, i64>,
}

impl FormalMomentPolynomial {
    pub fn from_spec(spec: &CumulantSpec) -> Self {
        let mut out = Self::default();
        for term in &spec.terms {
            let mut key = term.masks.clone();
            key.sort_unstable();
            out.add(key, term.coeff);
        }
        out
    }

    fn add(&mut self, key: Vec<u32>, c: i64) {
        let entry = self.terms.entry(key.clone()).or_insert(0);
        *entry += c;
        if *entry == 0 {
            self.terms.remove(&key);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Vec<u32>, i64> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Substitutes `f_m ≡ 1`: `E_{S∪{m}} → E_S` and `E_{{m}} → 1`.
    pub fn contract(&self, m: usize) -> Self {
        let bit = 1u32 << (m - 1);
        let mut out = Self::default();
        for (key, &c) in &self.terms {
            let mut k: Vec<u32> = key.iter().map(|s| s & !bit).filter(|&s| s != 0).collect();
            k.sort_unstable();
            out.add(k, c);
        }
        out
    }

    /// The scalar `d` with `self = d · other`, if one exists.
    pub fn ratio_to(&self, other: &Self) -> Option<Rational> {
        if self.is_zero() {
            return Some(Rational::zero());
        }
        let (key, &c) = other.terms.iter().next()?;
        let d = Rational::new(self.terms.get(key).copied().unwrap_or(0).into(), c.into());
        let matches = self.terms.len() == other.terms.len()
            && other.terms.iter().all(|(k, &c)| {
                Rational::from_integer(self.terms.get(k).copied().unwrap_or(0).into())
                    == &d * Rational::from_integer(c.into())
            });
        matches.then_some(d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionOutcome {
    pub m: usize,
    pub kind: SpecKind,
    pub holds: bool,
    #[serde(with = "crate::rational::serde_rational::option")]
    pub d: Option<Rational>,
    /// Every distinct ratio `contracted / lower` seen over the lower-order keys.
    #[serde(skip)]
    pub ratios: Vec<Rational>,
}

/// Tests whether `P_m(f_1..f_{m−1}, 1) = d · P_{m−1}(f_1..f_{m−1})` symbolically.
pub fn reduction_check(m: usize, kind: SpecKind) -> Result<ReductionOutcome, CumulantError> {
    if !(3..=DEFAULT_SPLIT_CAP).contains(&m) {
        return Err(CumulantError::OutOfRange {
            m,
            min: 3,
            max: DEFAULT_SPLIT_CAP,
        });
    }
    let upper = CumulantSpec::closed_form(m, kind)?;
    let lower = CumulantSpec::closed_form(m - 1, kind)?;
    let contracted = FormalMomentPolynomial::from_spec(&upper).contract(m);
    let lower = FormalMomentPolynomial::from_spec(&lower);
    let d = contracted.ratio_to(&lower);
    let mut ratios: Vec<Rational> = lower
        .terms
        .iter()
        .map(|(k, &c)| Rational::new(contracted.terms.get(k).copied().unwrap_or(0).into(), c.into()))
        .collect();
    ratios.sort();
    ratios.dedup();
    Ok(ReductionOutcome {
        m,
        kind,
        holds: d.is_some(),
        d,
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeShape;
    use crate::rational::{int, ratio};

    fn p(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_coefficients() {
        let conj = |v: &[usize]| coefficient(&p(v), SpecKind::Conjugate).unwrap();
        assert_eq!([conj(&[3]), conj(&[2, 1]), conj(&[1, 1, 1])], [2, -1, 1]);
        assert_eq!(
            [conj(&[4]), conj(&[3, 1]), conj(&[2, 2]), conj(&[2, 1, 1]), conj(&[1, 1, 1, 1])],
            [6, -2, -1, 1, -1]
        );
        assert_eq!(coefficient(&p(&[1, 1, 1]), SpecKind::Cumulant), Some(2));
        assert_eq!(coefficient(&p(&[1, 1, 1]), SpecKind::Custom), None);
    }

    #[test]
    fn two_point_chain_value() {
        let s = LatticeShape::new(vec![2]).unwrap();
        let mu = LatticeMeasure::uniform(s.clone());
        let f = LatticeFunction::new(s, vec![int(0), int(1)]).unwrap();
        let spec = CumulantSpec::conjugate(3).unwrap();
        assert_eq!(evaluate_kappa(&spec, &mu, &[f.clone(), f.clone(), f]).unwrap(), ratio(3, 8));
    }

    #[test]
    fn arity_and_shape_errors() {
        let s = LatticeShape::new(vec![2]).unwrap();
        let mu = LatticeMeasure::uniform(s.clone());
        let f = LatticeFunction::constant(s, int(1));
        let spec = CumulantSpec::conjugate(3).unwrap();
        assert_eq!(
            evaluate_kappa(&spec, &mu, std::slice::from_ref(&f)),
            Err(CumulantError::Arity { expected: 3, got: 1 })
        );
        let g = LatticeFunction::constant(LatticeShape::new(vec![3]).unwrap(), int(1));
        assert!(matches!(
            evaluate_kappa(&spec, &mu, &[f.clone(), f, g]),
            Err(CumulantError::Lattice(LatticeError::ShapeMismatch { .. }))
        ));
    }

    #[test]
    fn zero_sums() {
        for m in 2..=5 {
            assert_eq!(zero_sum(&CumulantSpec::conjugate(m).unwrap()), 0, "m={m}");
        }
        assert_eq!(zero_sum(&CumulantSpec::conjugate(6).unwrap()), 20);
        assert_eq!(zero_sum(&CumulantSpec::conjugate(7).unwrap()), 70);
        for m in 2..=8 {
            assert_eq!(zero_sum(&CumulantSpec::cumulant(m).unwrap()), 0);
        }
        let zeros = enumerate_partitions(4).unwrap().into_iter().map(|l| (l, 0)).collect();
        assert_eq!(zero_sum(&CumulantSpec::custom(4, zeros).unwrap()), 0);
    }

    #[test]
    fn reductions() {
        for m in 3..=5 {
            let r = reduction_check(m, SpecKind::Conjugate).unwrap();
            assert!(r.holds);
            assert_eq!(r.d, Some(int(m as i64 - 2)));
        }
        let r6 = reduction_check(6, SpecKind::Conjugate).unwrap();
        assert!(!r6.holds);
        assert_eq!(r6.ratios, vec![int(3), int(4)]);
        for m in 3..=6 {
            assert_eq!(reduction_check(m, SpecKind::Cumulant).unwrap().d, Some(int(0)));
        }
        assert!(reduction_check(2, SpecKind::Conjugate).is_err());
    }

    #[test]
    fn spec_validation() {
        let good = vec![(p(&[3]), 2), (p(&[2, 1]), -1), (p(&[1, 1, 1]), 1)];
        assert!(CumulantSpec::with_kind(3, SpecKind::Conjugate, good.clone()).is_ok());
        let wrong = vec![(p(&[3]), 1), (p(&[2, 1]), -1), (p(&[1, 1, 1]), 2)];
        assert!(matches!(
            CumulantSpec::with_kind(3, SpecKind::Conjugate, wrong.clone()),
            Err(CumulantError::CoefficientMismatch { .. })
        ));
        assert!(CumulantSpec::custom(3, wrong).is_ok());
        assert!(matches!(
            CumulantSpec::custom(3, good[..2].to_vec()),
            Err(CumulantError::MissingPartition(_))
        ));
        assert!(matches!(
            CumulantSpec::custom(3, vec![(p(&[2]), 1)]),
            Err(CumulantError::ForeignPartition { .. })
        ));
    }

    #[test]
    fn spec_json() {
        let spec = CumulantSpec::conjugate(3).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(
            json,
            r#"{"m":3,"kind":"conjugate","coeffs":[{"lambda":[3],"c":2},{"lambda":[2,1],"c":-1},{"lambda":[1,1,1],"c":1}]}"#
        );
        assert_eq!(serde_json::from_str::<CumulantSpec>(&json).unwrap(), spec);
        let short: CumulantSpec = serde_json::from_str(r#"{"m":4,"kind":"cumulant"}"#).unwrap();
        assert_eq!(short, CumulantSpec::cumulant(4).unwrap());
        assert!(serde_json::from_str::<CumulantSpec>(r#"{"m":3,"kind":"custom"}"#).is_err());
    }
}
