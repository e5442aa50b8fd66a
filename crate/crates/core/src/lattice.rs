//! Finite distributive lattices realised as products of chains, together with
//! exact measures and functions on them.
//!
//! Points are addressed by their mixed-radix rank: coordinate 0 is the least
//! significant digit, so on shape `(2, 3)` the point `(x0, x1)` has rank
//! `x0 + 2 * x1`. Every dense table (weights, function values) uses this order.

use crate::rational::{format_rational, parse_rational, Rational};
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Default cap on the number of lattice points a shape may have.
pub const DEFAULT_MAX_POINTS: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LatticeError {
    #[error("a lattice shape needs at least one chain")]
    EmptyShape,
    #[error("chain {index} has length {length}; chains need at least 2 elements")]
    ChainTooShort { index: usize, length: usize },
    #[error("shape has {size} points, above the cap of {cap}")]
    TooLarge { size: u128, cap: usize },
    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("point {coords:?} does not fit shape {shape:?}")]
    PointOutOfRange { coords: Vec<usize>, shape: Vec<usize> },
    #[error("points have different dimensions ({left} vs {right})")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{field} has {got} entries but the shape has {expected} points")]
    WrongLength {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field}[{index}]: {message}")]
    BadEntry {
        field: &'static str,
        index: usize,
        message: String,
    },
    #[error("measure is not normalized (total mass {total})")]
    Unnormalized { total: Rational },
    #[error("measure has zero total mass")]
    ZeroMass,
    #[error("coordinate {index} is outside a {dims}-dimensional shape")]
    CoordOutOfRange { index: usize, dims: usize },
    #[error("conditional function evaluated at rank {rank}, which is off the support")]
    OffSupport { rank: usize },
    #[error("measure is not MTP2: pair {p:?}, {q:?} violates the lattice condition")]
    NotMtp2 { p: Vec<usize>, q: Vec<usize> },
    #[error("function f{index} is not increasing")]
    NotIncreasing { index: usize },
    #[error("function f{index} takes a negative value")]
    NegativeFunction { index: usize },
}

/// A finite product of chains `{0..l_0} x ... x {0..l_{n-1}}`.
///
/// The zero-dimensional shape (a single point) exists only as the target of
/// marginalising onto the empty coordinate set; [`LatticeShape::new`] rejects it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LatticeShape {
    chains: Vec<usize>,
}

impl LatticeShape {
    pub fn new(chains: Vec<usize>) -> Result<Self, LatticeError> {
        Self::with_cap(chains, DEFAULT_MAX_POINTS)
    }

    pub fn with_cap(chains: Vec<usize>, cap: usize) -> Result<Self, LatticeError> {
        if chains.is_empty() {
            return Err(LatticeError::EmptyShape);
        }
        if let Some((index, &length)) = chains.iter().enumerate().find(|(_, &l)| l < 2) {
            return Err(LatticeError::ChainTooShort { index, length });
        }
        let size = chains
            .iter()
            .try_fold(1u128, |acc, &l| acc.checked_mul(l as u128))
            .unwrap_or(u128::MAX);
        if size > cap as u128 {
            return Err(LatticeError::TooLarge { size, cap });
        }
        Ok(Self { chains })
    }

    /// The Boolean lattice `2^A` with `|A| = n`.
    pub fn boolean(n: usize) -> Result<Self, LatticeError> {
        Self::new(vec![2; n])
    }

    /// The one-point lattice.
    pub fn point() -> Self {
        Self { chains: Vec::new() }
    }

    pub fn dims(&self) -> usize {
        self.chains.len()
    }

    pub fn chain_lengths(&self) -> &[usize] {
        &self.chains
    }

    pub fn size(&self) -> usize {
        self.chains.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.chains.len());
        let mut acc = 1;
        for &l in &self.chains {
            out.push(acc);
            acc *= l;
        }
        out
    }

    pub fn contains(&self, p: &LatticePoint) -> bool {
        p.coords.len() == self.chains.len()
            && p.coords.iter().zip(&self.chains).all(|(&c, &l)| c < l)
    }

    pub fn rank(&self, p: &LatticePoint) -> Result<usize, LatticeError> {
        if !self.contains(p) {
            return Err(LatticeError::PointOutOfRange {
                coords: p.coords.clone(),
                shape: self.chains.clone(),
            });
        }
        Ok(self.rank_unchecked(&p.coords))
    }

    pub(crate) fn rank_unchecked(&self, coords: &[usize]) -> usize {
        let mut r = 0;
        for (c, l) in coords.iter().zip(&self.chains).rev() {
            r = r * l + c;
        }
        r
    }

    pub fn coords(&self, mut rank: usize) -> Vec<usize> {
        self.chains
            .iter()
            .map(|&l| {
                let c = rank % l;
                rank /= l;
                c
            })
            .collect()
    }

    pub fn point_at(&self, rank: usize) -> LatticePoint {
        LatticePoint {
            coords: self.coords(rank),
        }
    }

    /// Coordinates of every point, indexed by rank.
    pub fn all_coords(&self) -> Vec<Vec<usize>> {
        (0..self.size()).map(|r| self.coords(r)).collect()
    }

    /// Ranks of the upper covers of the point with the given rank.
    pub fn upper_covers(&self, rank: usize) -> Vec<usize> {
        let coords = self.coords(rank);
        self.strides()
            .into_iter()
            .enumerate()
            .filter(|&(i, _)| coords[i] + 1 < self.chains[i])
            .map(|(_, s)| rank + s)
            .collect()
    }

    /// The sub-shape keeping only the coordinates in `b`.
    pub fn restrict(&self, b: &CoordSubset) -> Result<Self, LatticeError> {
        self.check_subset(b)?;
        Ok(Self {
            chains: b.members().iter().map(|&i| self.chains[i]).collect(),
        })
    }

    fn check_subset(&self, b: &CoordSubset) -> Result<(), LatticeError> {
        if b.dims() != self.dims() {
            return Err(LatticeError::DimensionMismatch {
                left: b.dims(),
                right: self.dims(),
            });
        }
        Ok(())
    }

    fn ensure_same(&self, other: &Self) -> Result<(), LatticeError> {
        if self != other {
            return Err(LatticeError::ShapeMismatch {
                left: self.chains.clone(),
                right: other.chains.clone(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LatticePoint {
    pub coords: Vec<usize>,
}

impl LatticePoint {
    pub fn new(coords: Vec<usize>) -> Self {
        Self { coords }
    }

    /// Coordinatewise order.
    pub fn leq(&self, other: &Self) -> bool {
        self.coords.len() == other.coords.len()
            && self.coords.iter().zip(&other.coords).all(|(a, b)| a <= b)
    }
}

impl fmt::Display for LatticePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Returns `(p ∨ q, p ∧ q)`.
pub fn join_meet(
    p: &LatticePoint,
    q: &LatticePoint,
) -> Result<(LatticePoint, LatticePoint), LatticeError> {
    if p.coords.len() != q.coords.len() {
        return Err(LatticeError::DimensionMismatch {
            left: p.coords.len(),
            right: q.coords.len(),
        });
    }
    let join = p.coords.iter().zip(&q.coords).map(|(a, b)| *a.max(b)).collect();
    let meet = p.coords.iter().zip(&q.coords).map(|(a, b)| *a.min(b)).collect();
    Ok((LatticePoint::new(join), LatticePoint::new(meet)))
}

/// A subset `B` of the coordinate indices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoordSubset {
    dims: usize,
    members: Vec<usize>,
}

impl CoordSubset {
    pub fn new(dims: usize, members: impl IntoIterator<Item = usize>) -> Result<Self, LatticeError> {
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if let Some(&index) = members.iter().find(|&&i| i >= dims) {
            return Err(LatticeError::CoordOutOfRange { index, dims });
        }
        Ok(Self { dims, members })
    }

    pub fn empty(dims: usize) -> Self {
        Self {
            dims,
            members: Vec::new(),
        }
    }

    pub fn full(dims: usize) -> Self {
        Self {
            dims,
            members: (0..dims).collect(),
        }
    }

    /// Subset whose members are the set bits of `mask`.
    pub fn from_mask(dims: usize, mask: u64) -> Result<Self, LatticeError> {
        Self::new(dims, (0..64).filter(|i| mask >> i & 1 == 1))
    }

    /// All `2^dims` subsets, ordered by bitmask.
    pub fn all(dims: usize) -> Vec<Self> {
        (0..1u64 << dims)
            .map(|m| Self::from_mask(dims, m).expect("mask within range"))
            .collect()
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// Nonnegative exact weights on a lattice shape, not necessarily normalized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure", into = "RawMeasure")]
pub struct LatticeMeasure {
    shape: LatticeShape,
    weights: Vec<Rational>,
}

impl LatticeMeasure {
    pub fn new(shape: LatticeShape, weights: Vec<Rational>) -> Result<Self, LatticeError> {
        if weights.len() != shape.size() {
            return Err(LatticeError::WrongLength {
                field: "weights",
                expected: shape.size(),
                got: weights.len(),
            });
        }
        if let Some((index, w)) = weights.iter().enumerate().find(|(_, w)| w.is_negative()) {
            return Err(LatticeError::BadEntry {
                field: "weights",
                index,
                message: format!("negative weight {}", format_rational(w)),
            });
        }
        Ok(Self { shape, weights })
    }

    pub fn uniform(shape: LatticeShape) -> Self {
        let n = shape.size();
        let w = Rational::new(1.into(), n.into());
        Self {
            weights: vec![w; n],
            shape,
        }
    }

    /// Weights given by a closure on coordinates.
    pub fn from_fn(
        shape: LatticeShape,
        mut f: impl FnMut(&[usize]) -> Rational,
    ) -> Result<Self, LatticeError> {
        let weights = (0..shape.size()).map(|r| f(&shape.coords(r))).collect();
        Self::new(shape, weights)
    }

    /// Product measure from one weight vector per coordinate.
    pub fn product(marginals: &[Vec<Rational>]) -> Result<Self, LatticeError> {
        let shape = LatticeShape::new(marginals.iter().map(Vec::len).collect())?;
        Self::from_fn(shape, |c| {
            c.iter()
                .zip(marginals)
                .map(|(&x, m)| m[x].clone())
                .product()
        })
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn weights(&self) -> &[Rational] {
        &self.weights
    }

    pub fn weight(&self, rank: usize) -> &Rational {
        &self.weights[rank]
    }

    pub fn total_mass(&self) -> Rational {
        self.weights.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.total_mass().is_one()
    }

    pub fn normalized(&self) -> Result<Self, LatticeError> {
        let total = self.total_mass();
        if total.is_zero() {
            return Err(LatticeError::ZeroMass);
        }
        Ok(Self {
            shape: self.shape.clone(),
            weights: self.weights.iter().map(|w| w / &total).collect(),
        })
    }

    /// Ranks with positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&r| self.weights[r].is_positive())
            .collect()
    }

    pub fn ensure_normalized(&self) -> Result<(), LatticeError> {
        let total = self.total_mass();
        if total.is_one() {
            Ok(())
        } else {
            Err(LatticeError::Unnormalized { total })
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawMeasure {
    shape: Vec<usize>,
    weights: Vec<String>,
}

impl TryFrom<RawMeasure> for LatticeMeasure {
    type Error = LatticeError;

    fn try_from(raw: RawMeasure) -> Result<Self, LatticeError> {
        let shape = LatticeShape::new(raw.shape)?;
        let weights = parse_table("weights", &raw.weights)?;
        Self::new(shape, weights)
    }
}

impl From<LatticeMeasure> for RawMeasure {
    fn from(m: LatticeMeasure) -> Self {
        Self {
            shape: m.shape.chains,
            weights: m.weights.iter().map(format_rational).collect(),
        }
    }
}

fn parse_table(field: &'static str, raw: &[String]) -> Result<Vec<Rational>, LatticeError> {
    raw.iter()
        .enumerate()
        .map(|(index, s)| {
            parse_rational(s).map_err(|e| LatticeError::BadEntry {
                field,
                index,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Exact rational values on a lattice shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFunction", into = "RawFunction")]
pub struct LatticeFunction {
    shape: LatticeShape,
    values: Vec<Rational>,
}

impl LatticeFunction {
    pub fn new(shape: LatticeShape, values: Vec<Rational>) -> Result<Self, LatticeError> {
        if values.len() != shape.size() {
            return Err(LatticeError::WrongLength {
                field: "values",
                expected: shape.size(),
                got: values.len(),
            });
        }
        Ok(Self { shape, values })
    }

    pub fn constant(shape: LatticeShape, c: Rational) -> Self {
        Self {
            values: vec![c; shape.size()],
            shape,
        }
    }

    pub fn from_fn(shape: LatticeShape, mut f: impl FnMut(&[usize]) -> Rational) -> Self {
        let values = (0..shape.size()).map(|r| f(&shape.coords(r))).collect();
        Self { shape, values }
    }

    /// Indicator of the principal up-set `{x : x >= threshold}`.
    pub fn northeast_indicator(shape: LatticeShape, threshold: &[usize]) -> Self {
        Self::from_fn(shape, |c| {
            if c.iter().zip(threshold).all(|(x, a)| x >= a) {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
    }

    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn value(&self, rank: usize) -> &Rational {
        &self.values[rank]
    }

    pub fn map(&self, f: impl Fn(&Rational) -> Rational) -> Self {
        Self {
            shape: self.shape.clone(),
            values: self.values.iter().map(f).collect(),
        }
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Self) -> Result<Self, LatticeError> {
        self.shape.ensure_same(&other.shape)?;
        Ok(Self {
            shape: self.shape.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        })
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| !v.is_negative())
    }

    pub fn min_value(&self) -> Rational {
        self.values.iter().min().cloned().expect("lattices are nonempty")
    }

    pub fn is_increasing(&self) -> bool {
        is_increasing(self)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawFunction {
    shape: Vec<usize>,
    #[serde(alias = "weights")]
    values: Vec<String>,
}

impl TryFrom<RawFunction> for LatticeFunction {
    type Error = LatticeError;

    fn try_from(raw: RawFunction) -> Result<Self, LatticeError> {
        let shape = LatticeShape::new(raw.shape)?;
        let values = parse_table("values", &raw.values)?;
        Self::new(shape, values)
    }
}

impl From<LatticeFunction> for RawFunction {
    fn from(f: LatticeFunction) -> Self {
        Self {
            shape: f.shape.chains,
            values: f.values.iter().map(format_rational).collect(),
        }
    }
}

/// True iff `f` is increasing; checking covering pairs suffices.
pub fn is_increasing(f: &LatticeFunction) -> bool {
    (0..f.shape.size()).all(|r| {
        f.shape
            .upper_covers(r)
            .into_iter()
            .all(|s| f.values[r] <= f.values[s])
    })
}

/// The first pair `(p, q)` with `μ(p∨q)μ(p∧q) < μ(p)μ(q)`, if any.
pub fn mtp2_violation(mu: &LatticeMeasure) -> Option<(LatticePoint, LatticePoint)> {
    let shape = &mu.shape;
    let coords = shape.all_coords();
    let n = coords.len();
    let mut join = vec![0usize; shape.dims()];
    let mut meet = vec![0usize; shape.dims()];
    for p in 0..n {
        for q in (p + 1)..n {
            let (cp, cq) = (&coords[p], &coords[q]);
            let mut p_le_q = true;
            let mut q_le_p = true;
            for i in 0..cp.len() {
                join[i] = cp[i].max(cq[i]);
                meet[i] = cp[i].min(cq[i]);
                p_le_q &= cp[i] <= cq[i];
                q_le_p &= cq[i] <= cp[i];
            }
            if p_le_q || q_le_p {
                continue;
            }
            let lhs = mu.weight(shape.rank_unchecked(&join)) * mu.weight(shape.rank_unchecked(&meet));
            if lhs < mu.weight(p) * mu.weight(q) {
                return Some((LatticePoint::new(cp.clone()), LatticePoint::new(cq.clone())));
            }
        }
    }
    None
}

pub fn is_mtp2(mu: &LatticeMeasure) -> bool {
    mtp2_violation(mu).is_none()
}

pub(crate) fn ensure_mtp2(mu: &LatticeMeasure) -> Result<(), LatticeError> {
    match mtp2_violation(mu) {
        None => Ok(()),
        Some((p, q)) => Err(LatticeError::NotMtp2 {
            p: p.coords,
            q: q.coords,
        }),
    }
}

/// Exact `E(f) = Σ μ(p) f(p)` for a normalized measure.
pub fn expectation(mu: &LatticeMeasure, f: &LatticeFunction) -> Result<Rational, LatticeError> {
    mu.shape.ensure_same(&f.shape)?;
    mu.ensure_normalized()?;
    Ok(mu.weights.iter().zip(&f.values).map(|(w, v)| w * v).sum())
}

/// Maps each rank of `shape` to the rank of its projection onto `b`.
fn projection(shape: &LatticeShape, b: &CoordSubset) -> Result<(LatticeShape, Vec<usize>), LatticeError> {
    let sub = shape.restrict(b)?;
    let proj = (0..shape.size())
        .map(|r| {
            let c = shape.coords(r);
            let kept: Vec<usize> = b.members().iter().map(|&i| c[i]).collect();
            sub.rank_unchecked(&kept)
        })
        .collect();
    Ok((sub, proj))
}

/// The marginal `μ_B` on the sub-shape of the coordinates in `b`.
pub fn marginalize(mu: &LatticeMeasure, b: &CoordSubset) -> Result<LatticeMeasure, LatticeError> {
    mu.ensure_normalized()?;
    let (sub, proj) = projection(&mu.shape, b)?;
    let mut weights = vec![Rational::zero(); sub.size()];
    for (r, w) in mu.weights.iter().enumerate() {
        weights[proj[r]] += w;
    }
    Ok(LatticeMeasure { shape: sub, weights })
}

/// A conditional expectation `f_B`, defined only on the support of `μ_B`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionalFunction {
    shape: LatticeShape,
    values: Vec<Option<Rational>>,
}

impl ConditionalFunction {
    pub fn shape(&self) -> &LatticeShape {
        &self.shape
    }

    pub fn value(&self, rank: usize) -> Result<&Rational, LatticeError> {
        self.values
            .get(rank)
            .and_then(Option::as_ref)
            .ok_or(LatticeError::OffSupport { rank })
    }

    pub fn is_defined_at(&self, rank: usize) -> bool {
        matches!(self.values.get(rank), Some(Some(_)))
    }

    /// Converts to a total function; fails if any point is off the support.
    pub fn to_function(&self) -> Result<LatticeFunction, LatticeError> {
        let values = (0..self.values.len())
            .map(|r| self.value(r).cloned())
            .collect::<Result<_, _>>()?;
        Ok(LatticeFunction {
            shape: self.shape.clone(),
            values,
        })
    }

    /// Monotone on the support: `f_B(p) <= f_B(q)` whenever `p <= q` are both supported.
    pub fn is_increasing_on_support(&self) -> bool {
        let coords = self.shape.all_coords();
        let defined: Vec<usize> = (0..self.values.len()).filter(|&r| self.is_defined_at(r)).collect();
        defined.iter().all(|&p| {
            defined.iter().all(|&q| {
                let le = coords[p].iter().zip(&coords[q]).all(|(a, b)| a <= b);
                !le || self.values[p] <= self.values[q]
            })
        })
    }
}

/// The conditional expectation of `f` given the coordinates in `b`.
pub fn condition(
    f: &LatticeFunction,
    mu: &LatticeMeasure,
    b: &CoordSubset,
) -> Result<ConditionalFunction, LatticeError> {
    mu.shape.ensure_same(&f.shape)?;
    mu.ensure_normalized()?;
    let (sub, proj) = projection(&mu.shape, b)?;
    let mut mass = vec![Rational::zero(); sub.size()];
    let mut moment = vec![Rational::zero(); sub.size()];
    for (r, w) in mu.weights.iter().enumerate() {
        if w.is_zero() {
            continue;
        }
        mass[proj[r]] += w;
        moment[proj[r]] += w * &f.values[r];
    }
    let values = mass
        .into_iter()
        .zip(moment)
        .map(|(m, s)| (!m.is_zero()).then(|| s / m))
        .collect();
    Ok(ConditionalFunction { shape: sub, values })
}

/// `E_B(∏ g_i)` for conditionals over the support of the marginal `mu_b`.
pub fn expect_product(
    mu_b: &LatticeMeasure,
    factors: &[&ConditionalFunction],
) -> Result<Rational, LatticeError> {
    for g in factors {
        mu_b.shape.ensure_same(&g.shape)?;
    }
    let mut total = Rational::zero();
    for r in mu_b.support() {
        let mut term = mu_b.weights[r].clone();
        for g in factors {
            term *= g.value(r)?;
        }
        total += term;
    }
    Ok(total)
}

/// The inductive gap
/// `g(B) = 2E_B((f1f2f3)_B) − Σ E_B((fifj)_B f_kB) + E_B(f1B f2B f3B)`.
///
/// Checks the hypotheses (μ normalized and MTP2, each `f_i` nonnegative and
/// increasing) and reports each failure distinctly.
pub fn inductive_gap(
    mu: &LatticeMeasure,
    fs: [&LatticeFunction; 3],
    b: &CoordSubset,
) -> Result<Rational, LatticeError> {
    mu.ensure_normalized()?;
    ensure_mtp2(mu)?;
    for (index, f) in fs.iter().enumerate() {
        mu.shape.ensure_same(&f.shape)?;
        if !f.is_nonnegative() {
            return Err(LatticeError::NegativeFunction { index: index + 1 });
        }
        if !f.is_increasing() {
            return Err(LatticeError::NotIncreasing { index: index + 1 });
        }
    }
    inductive_gap_unchecked(mu, fs, b)
}

/// [`inductive_gap`] without the MTP2 and monotonicity checks, for probing
/// outside the hypotheses.
pub fn inductive_gap_unchecked(
    mu: &LatticeMeasure,
    fs: [&LatticeFunction; 3],
    b: &CoordSubset,
) -> Result<Rational, LatticeError> {
    let [f1, f2, f3] = fs;
    let mu_b = marginalize(mu, b)?;
    let cond = |f: &LatticeFunction| condition(f, mu, b);
    let c1 = cond(f1)?;
    let c2 = cond(f2)?;
    let c3 = cond(f3)?;
    let c12 = cond(&f1.mul(f2)?)?;
    let c13 = cond(&f1.mul(f3)?)?;
    let c23 = cond(&f2.mul(f3)?)?;
    let c123 = cond(&f1.mul(f2)?.mul(f3)?)?;
    let two = Rational::from_integer(2.into());
    Ok(two * expect_product(&mu_b, &[&c123])?
        - expect_product(&mu_b, &[&c12, &c3])?
        - expect_product(&mu_b, &[&c13, &c2])?
        - expect_product(&mu_b, &[&c23, &c1])?
        + expect_product(&mu_b, &[&c1, &c2, &c3])?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn two_point_measure() -> LatticeMeasure {
        LatticeMeasure::new(
            LatticeShape::boolean(2).unwrap(),
            vec![ratio(1, 2), ratio(1, 8), ratio(1, 8), ratio(1, 4)],
        )
        .unwrap()
    }

    fn chain2(values: [i64; 2]) -> LatticeFunction {
        LatticeFunction::new(LatticeShape::new(vec![2]).unwrap(), values.map(int).to_vec()).unwrap()
    }

    #[test]
    fn shape_validation() {
        assert_eq!(LatticeShape::new(vec![]), Err(LatticeError::EmptyShape));
        assert!(matches!(
            LatticeShape::new(vec![2, 1]),
            Err(LatticeError::ChainTooShort { index: 1, length: 1 })
        ));
        assert!(matches!(
            LatticeShape::with_cap(vec![10, 10], 50),
            Err(LatticeError::TooLarge { size: 100, cap: 50 })
        ));
    }

    #[test]
    fn rank_round_trip() {
        let s = LatticeShape::new(vec![2, 3, 4]).unwrap();
        for r in 0..s.size() {
            assert_eq!(s.rank(&s.point_at(r)).unwrap(), r);
        }
        assert_eq!(s.rank(&LatticePoint::new(vec![1, 0, 0])).unwrap(), 1);
        assert_eq!(s.rank(&LatticePoint::new(vec![0, 1, 0])).unwrap(), 2);
        assert!(s.rank(&LatticePoint::new(vec![2, 0, 0])).is_err());
    }

    #[test]
    fn join_meet_examples() {
        let (j, m) = join_meet(&LatticePoint::new(vec![0, 1]), &LatticePoint::new(vec![1, 0])).unwrap();
        assert_eq!(j.coords, vec![1, 1]);
        assert_eq!(m.coords, vec![0, 0]);
        let p = LatticePoint::new(vec![2, 1, 0]);
        assert_eq!(join_meet(&p, &p).unwrap(), (p.clone(), p.clone()));
        assert!(join_meet(&p, &LatticePoint::new(vec![1])).is_err());
    }

    #[test]
    fn increasing_examples() {
        let s = LatticeShape::new(vec![3, 2]).unwrap();
        assert!(LatticeFunction::constant(s.clone(), int(4)).is_increasing());
        assert!(LatticeFunction::from_fn(s, |c| int(c.iter().sum::<usize>() as i64)).is_increasing());
        assert!(!chain2([1, 0]).is_increasing());
    }

    #[test]
    fn mtp2_examples() {
        assert!(is_mtp2(&two_point_measure()));
        assert!(is_mtp2(&LatticeMeasure::uniform(LatticeShape::new(vec![3, 3, 2]).unwrap())));
        let bad = LatticeMeasure::new(
            LatticeShape::boolean(2).unwrap(),
            vec![ratio(1, 4), ratio(1, 4), ratio(1, 4), ratio(1, 16)],
        )
        .unwrap();
        assert!(!is_mtp2(&bad));
    }

    #[test]
    fn expectation_examples() {
        let s = LatticeShape::new(vec![2]).unwrap();
        let u = LatticeMeasure::uniform(s.clone());
        assert_eq!(expectation(&u, &chain2([0, 1])).unwrap(), ratio(1, 2));
        assert_eq!(expectation(&u, &LatticeFunction::constant(s, int(1))).unwrap(), int(1));
        let mu = two_point_measure();
        let top = LatticeFunction::northeast_indicator(mu.shape().clone(), &[1, 1]);
        assert_eq!(expectation(&mu, &top).unwrap(), ratio(1, 4));
        let unnorm = LatticeMeasure::new(LatticeShape::new(vec![2]).unwrap(), vec![int(1), int(1)]).unwrap();
        assert!(matches!(
            expectation(&unnorm, &chain2([0, 1])),
            Err(LatticeError::Unnormalized { .. })
        ));
    }

    #[test]
    fn marginal_examples() {
        let mu = two_point_measure();
        let w = CoordSubset::new(2, [0]).unwrap();
        assert_eq!(marginalize(&mu, &w).unwrap().weights(), &[ratio(5, 8), ratio(3, 8)]);
        let empty = marginalize(&mu, &CoordSubset::empty(2)).unwrap();
        assert_eq!(empty.shape().size(), 1);
        assert_eq!(empty.weights(), &[int(1)]);
        assert_eq!(marginalize(&mu, &CoordSubset::full(2)).unwrap(), mu);
    }

    #[test]
    fn conditional_examples() {
        let mu = two_point_measure();
        let f = LatticeFunction::new(mu.shape().clone(), vec![int(1), int(2), int(5), int(7)]).unwrap();
        let full = condition(&f, &mu, &CoordSubset::full(2)).unwrap();
        assert_eq!(full.to_function().unwrap(), f);
        let e = expectation(&mu, &f).unwrap();
        let none = condition(&f, &mu, &CoordSubset::empty(2)).unwrap();
        assert_eq!(none.value(0).unwrap(), &e);
        for b in CoordSubset::all(2) {
            let mb = marginalize(&mu, &b).unwrap();
            let fb = condition(&f, &mu, &b).unwrap();
            assert_eq!(expect_product(&mb, &[&fb]).unwrap(), e);
        }
    }

    #[test]
    fn off_support_is_refused() {
        let mu = LatticeMeasure::new(
            LatticeShape::boolean(2).unwrap(),
            vec![ratio(1, 2), int(0), int(0), ratio(1, 2)],
        )
        .unwrap();
        let f = LatticeFunction::from_fn(mu.shape().clone(), |c| int(c[0] as i64));
        let mid = LatticeMeasure::new(
            LatticeShape::new(vec![2, 2]).unwrap(),
            vec![ratio(1, 2), ratio(1, 2), int(0), int(0)],
        )
        .unwrap();
        let fb = condition(&f, &mid, &CoordSubset::new(2, [1]).unwrap()).unwrap();
        assert_eq!(fb.value(1), Err(LatticeError::OffSupport { rank: 1 }));
        assert!(condition(&f, &mu, &CoordSubset::new(2, [1]).unwrap()).unwrap().value(1).is_ok());
    }

    #[test]
    fn gap_endpoints() {
        let mu = two_point_measure();
        let f = LatticeFunction::new(mu.shape().clone(), vec![int(0), int(1), int(1), int(3)]).unwrap();
        let full = inductive_gap(&mu, [&f, &f, &f], &CoordSubset::full(2)).unwrap();
        assert_eq!(full, int(0));
        let s = LatticeShape::new(vec![2]).unwrap();
        let g = chain2([0, 1]);
        let u = LatticeMeasure::uniform(s);
        assert_eq!(inductive_gap(&u, [&g, &g, &g], &CoordSubset::empty(1)).unwrap(), ratio(3, 8));
    }

    #[test]
    fn gap_reports_hypothesis_failures() {
        let u = LatticeMeasure::uniform(LatticeShape::new(vec![2]).unwrap());
        let up = chain2([0, 1]);
        let down = chain2([1, 0]);
        let neg = chain2([-1, 0]);
        let b = CoordSubset::empty(1);
        assert_eq!(
            inductive_gap(&u, [&up, &down, &up], &b),
            Err(LatticeError::NotIncreasing { index: 2 })
        );
        assert_eq!(
            inductive_gap(&u, [&up, &up, &neg], &b),
            Err(LatticeError::NegativeFunction { index: 3 })
        );
        assert!(inductive_gap_unchecked(&u, [&up, &up, &neg], &b).is_ok());
    }

    #[test]
    fn json_round_trip_and_positioned_errors() {
        let mu = two_point_measure();
        let json = serde_json::to_string(&mu).unwrap();
        assert_eq!(json, r#"{"shape":[2,2],"weights":["1/2","1/8","1/8","1/4"]}"#);
        assert_eq!(serde_json::from_str::<LatticeMeasure>(&json).unwrap(), mu);
        let err = serde_json::from_str::<LatticeMeasure>(r#"{"shape":[2],"weights":["1/2","-1/2"]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("weights[1]"), "{err}");
        let err = serde_json::from_str::<LatticeMeasure>(r#"{"shape":[2],"weights":["1/2","x"]}"#)
            .unwrap_err()
            .to_string();
        assert!(err.contains("weights[1]") && err.contains("malformed"), "{err}");
        let f: LatticeFunction = serde_json::from_str(r#"{"shape":[2],"values":["0/1","3/2"]}"#).unwrap();
        assert_eq!(f.values(), &[int(0), ratio(3, 2)]);
    }
}
