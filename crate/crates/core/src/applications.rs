//! Application inequalities, each built as a measure on a lattice plus a
//! κ'_3 evaluation, and each cross-checked against a direct summation that
//! does not go through the lattice module.

use crate::cumulants::{evaluate_kappa, CumulantError, CumulantSpec};
use crate::lattice::{
    is_increasing, mtp2_violation, LatticeError, LatticeFunction, LatticeMeasure, LatticeShape,
};
use crate::rational::{format_rational, int, pow_i32, serde_rational, to_f64, Rational};
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_integer::binomial;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

/// Relative tolerance of the floating-point backend.
pub const FLOAT_TOLERANCE: f64 = 1e-9;

/// Largest `n` for applications that enumerate `2^n` subsets.
pub const MAX_SUBSET_DIM: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApplicationError {
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Cumulant(#[from] CumulantError),
    #[error("{0}")]
    Input(String),
    #[error("matrix is not square ({rows} rows, row {row} has {len} entries)")]
    NotSquare { rows: usize, row: usize, len: usize },
    #[error("matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("matrix is not positive semidefinite (principal minor on {subset:?} is negative)")]
    NotPsd { subset: Vec<usize> },
    #[error("matrix is not positive definite (leading minor {k} is not positive)")]
    NotPositiveDefinite { k: usize },
    #[error("{name}[{index}] breaks monotonicity")]
    NotMonotone { name: String, index: usize },
    #[error("{name}[{index}] is negative")]
    Negative { name: String, index: usize },
    #[error("sequence is not log-convex at k = {k}")]
    LogConvexity { k: usize },
    #[error("{0} must sum to 1")]
    NotNormalized(String),
    #[error("family {name} is not {closure:?}: {detail}")]
    Closure {
        name: String,
        closure: Closure,
        detail: String,
    },
    #[error("triangle property fails at (i, k, j) = ({i}, {k}, {j})")]
    Triangle { i: usize, k: usize, j: usize },
    #[error("measure is not MTP2: pair {p:?}, {q:?}")]
    NotMtp2 { p: Vec<usize>, q: Vec<usize> },
    #[error("conditioning event has probability zero: {0}")]
    ZeroProbability(String),
    #[error("measure is not exchangeable (coordinates {i} and {j} differ at {coords:?})")]
    NotExchangeable { i: usize, j: usize, coords: Vec<usize> },
    #[error("{what}: lattice value {value} but direct value {oracle}")]
    OracleMismatch {
        what: &'static str,
        value: String,
        oracle: String,
    },
}

type Result<T> = std::result::Result<T, ApplicationError>;

fn input(msg: impl Into<String>) -> ApplicationError {
    ApplicationError::Input(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Nonnegative,
    Nonpositive,
}

/// Exact value of an application inequality, its independent oracle, and
/// whether it has the claimed sign.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AppCheck {
    pub name: &'static str,
    #[serde(with = "serde_rational")]
    pub value: Rational,
    #[serde(with = "serde_rational")]
    pub oracle: Rational,
    pub expected: Sign,
    pub holds: bool,
}

impl AppCheck {
    fn new(name: &'static str, value: Rational, oracle: Rational, expected: Sign) -> Result<Self> {
        if value != oracle {
            return Err(ApplicationError::OracleMismatch {
                what: name,
                value: format_rational(&value),
                oracle: format_rational(&oracle),
            });
        }
        let holds = match expected {
            Sign::Nonnegative => !value.is_negative(),
            Sign::Nonpositive => !value.is_positive(),
        };
        Ok(Self {
            name,
            value,
            oracle,
            expected,
            holds,
        })
    }
}

/// `2E(f1f2f3) − Σ E(fifj)E(fk) + E(f1)E(f2)E(f3)` from a moment oracle.
fn kappa3_from(e: impl Fn(&[usize]) -> Rational) -> Rational {
    int(2) * e(&[0, 1, 2]) - e(&[0, 1]) * e(&[2]) - e(&[0, 2]) * e(&[1]) - e(&[1, 2]) * e(&[0])
        + e(&[0]) * e(&[1]) * e(&[2])
}

fn kappa3(mu: &LatticeMeasure, fs: &[LatticeFunction]) -> Result<Rational> {
    Ok(evaluate_kappa(&CumulantSpec::conjugate(3)?, mu, fs)?)
}

fn check_sequence(name: &str, xs: &[Rational], len: usize) -> Result<()> {
    if xs.len() != len {
        return Err(input(format!("{name} needs {len} entries, got {}", xs.len())));
    }
    if let Some(index) = xs.iter().position(Signed::is_negative) {
        return Err(ApplicationError::Negative {
            name: name.to_string(),
            index,
        });
    }
    if let Some(index) = (1..xs.len()).find(|&k| xs[k] < xs[k - 1]) {
        return Err(ApplicationError::NotMonotone {
            name: name.to_string(),
            index,
        });
    }
    Ok(())
}

fn popcount_function(shape: &LatticeShape, values: &[Rational]) -> LatticeFunction {
    LatticeFunction::from_fn(shape.clone(), |c| values[c.iter().sum::<usize>()].clone())
}

fn binom(n: usize, k: usize) -> Rational {
    Rational::from_integer(binomial(BigInt::from(n), BigInt::from(k)))
}

/// Third-order inequality for Bernstein polynomials at `x`, with `f_j` given
/// by its values `f_j(k/n)`, `k = 0..n`.
pub fn bernstein_check(n: usize, x: &Rational, fs: [&[Rational]; 3]) -> Result<AppCheck> {
    if n == 0 || n > MAX_SUBSET_DIM {
        return Err(input(format!("n must be in 1..={MAX_SUBSET_DIM}")));
    }
    if x.is_negative() || x > &Rational::one() {
        return Err(input("x must lie in [0, 1]"));
    }
    for (j, f) in fs.iter().enumerate() {
        check_sequence(&format!("f{}", j + 1), f, n + 1)?;
    }
    let shape = LatticeShape::boolean(n)?;
    let one_minus = Rational::one() - x;
    let mu = LatticeMeasure::from_fn(shape.clone(), |c| {
        let k = c.iter().sum::<usize>();
        num_traits::pow(x.clone(), k) * num_traits::pow(one_minus.clone(), n - k)
    })?
    .normalized()?;
    let lifted: Vec<LatticeFunction> = fs.iter().map(|f| popcount_function(&shape, f)).collect();
    let value = kappa3(&mu, &lifted)?;
    let b = |idx: &[usize]| -> Rational {
        (0..=n)
            .map(|k| {
                let g: Rational = idx.iter().map(|&j| fs[j][k].clone()).product();
                binom(n, k) * num_traits::pow(x.clone(), k) * num_traits::pow(one_minus.clone(), n - k) * g
            })
            .sum()
    };
    AppCheck::new("bernstein", value, kappa3_from(b), Sign::Nonnegative)
}

/// Third-order Tchebycheff-type inequality for a positive log-convex
/// probability sequence `a` and increasing weights `α, β, γ`.
pub fn logconvex_check(a: &[Rational], alpha: &[Rational], beta: &[Rational], gamma: &[Rational]) -> Result<AppCheck> {
    let len = a.len();
    if !(2..=MAX_SUBSET_DIM + 1).contains(&len) {
        return Err(input(format!("a needs between 2 and {} entries", MAX_SUBSET_DIM + 1)));
    }
    let n = len - 1;
    if let Some(index) = a.iter().position(|x| !x.is_positive()) {
        return Err(ApplicationError::Negative {
            name: "a".into(),
            index,
        });
    }
    if a.iter().sum::<Rational>() != Rational::one() {
        return Err(ApplicationError::NotNormalized("a".into()));
    }
    if let Some(k) = (1..n).find(|&k| &a[k] * &a[k] > &a[k - 1] * &a[k + 1]) {
        return Err(ApplicationError::LogConvexity { k });
    }
    for (name, s) in [("alpha", alpha), ("beta", beta), ("gamma", gamma)] {
        check_sequence(name, s, len)?;
    }
    let shape = LatticeShape::boolean(n)?;
    let mu = LatticeMeasure::from_fn(shape.clone(), |c| {
        let k = c.iter().sum::<usize>();
        &a[k] / binom(n, k)
    })?;
    if let Some((p, q)) = mtp2_violation(&mu) {
        return Err(ApplicationError::NotMtp2 {
            p: p.coords,
            q: q.coords,
        });
    }
    let seqs = [alpha, beta, gamma];
    let lifted: Vec<LatticeFunction> = seqs.iter().map(|s| popcount_function(&shape, s)).collect();
    let value = kappa3(&mu.normalized()?, &lifted)?;
    let bracket = |idx: &[usize]| -> Rational {
        (0..len)
            .map(|k| &a[k] * idx.iter().map(|&j| seqs[j][k].clone()).product::<Rational>())
            .sum()
    };
    AppCheck::new("logconvex", value, kappa3_from(bracket), Sign::Nonnegative)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Closure {
    Up,
    Down,
    None,
}

/// A family of subsets of `{1..n}`, stored as bitmasks (element `i` is bit
/// `i-1`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawFamily", into = "RawFamily")]
pub struct FamilyOfSubsets {
    n: usize,
    sets: BTreeSet<u32>,
    closure: Closure,
}

impl FamilyOfSubsets {
    pub fn new(n: usize, sets: impl IntoIterator<Item = u32>, closure: Closure) -> Result<Self> {
        if n > MAX_SUBSET_DIM {
            return Err(input(format!("n must be at most {MAX_SUBSET_DIM}")));
        }
        let sets: BTreeSet<u32> = sets.into_iter().collect();
        if let Some(s) = sets.iter().find(|&&s| s >> n != 0) {
            return Err(input(format!("set {s:#b} uses elements beyond {n}")));
        }
        let fam = Self { n, sets, closure };
        fam.verify_closure("family")?;
        Ok(fam)
    }

    /// The whole power set `2^A`.
    pub fn power_set(n: usize) -> Self {
        Self {
            n,
            sets: (0..1u32 << n).collect(),
            closure: Closure::Up,
        }
    }

    fn verify_closure(&self, name: &str) -> Result<()> {
        let err = |detail: String| ApplicationError::Closure {
            name: name.to_string(),
            closure: self.closure,
            detail,
        };
        for &s in &self.sets {
            for i in 0..self.n {
                let bit = 1u32 << i;
                let neighbour = match self.closure {
                    Closure::Up if s & bit == 0 => s | bit,
                    Closure::Down if s & bit != 0 => s & !bit,
                    _ => continue,
                };
                if !self.sets.contains(&neighbour) {
                    return Err(err(format!("{} present but {} missing", show_set(s), show_set(neighbour))));
                }
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn closure(&self) -> Closure {
        self.closure
    }

    pub fn contains(&self, s: u32) -> bool {
        self.sets.contains(&s)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> impl Iterator<Item = u32> + '_ {
        self.sets.iter().copied()
    }

    /// Indicator on the Boolean lattice (coordinate `i` is element `i+1`).
    pub fn indicator(&self) -> Result<LatticeFunction> {
        let shape = LatticeShape::boolean(self.n)?;
        Ok(LatticeFunction::from_fn(shape, |c| {
            let mask = c.iter().enumerate().fold(0u32, |m, (i, &x)| m | (x as u32) << i);
            if self.contains(mask) {
                Rational::one()
            } else {
                Rational::zero()
            }
        }))
    }
}

fn show_set(s: u32) -> String {
    let elems: Vec<String> = (0..32).filter(|i| s >> i & 1 == 1).map(|i| (i + 1).to_string()).collect();
    format!("{{{}}}", elems.join(","))
}

#[derive(Serialize, Deserialize)]
struct RawFamily {
    n: usize,
    closure: Closure,
    sets: Vec<Vec<usize>>,
}

impl TryFrom<RawFamily> for FamilyOfSubsets {
    type Error = ApplicationError;

    fn try_from(raw: RawFamily) -> Result<Self> {
        let mut masks = Vec::new();
        for (k, set) in raw.sets.iter().enumerate() {
            let mut mask = 0u32;
            for &x in set {
                if x == 0 || x > raw.n {
                    return Err(input(format!("sets[{k}]: element {x} outside 1..={}", raw.n)));
                }
                mask |= 1 << (x - 1);
            }
            masks.push(mask);
        }
        Self::new(raw.n, masks, raw.closure)
    }
}

impl From<FamilyOfSubsets> for RawFamily {
    fn from(f: FamilyOfSubsets) -> Self {
        Self {
            n: f.n,
            closure: f.closure,
            sets: f
                .sets
                .iter()
                .map(|&s| (0..f.n).filter(|i| s >> i & 1 == 1).map(|i| i + 1).collect())
                .collect(),
        }
    }
}

/// Every family of subsets of `{1..n}` closed in the given direction, by
/// exhaustive filtering (`n <= 4`).
pub fn closed_families(n: usize, closure: Closure) -> Result<Vec<FamilyOfSubsets>> {
    if n > 4 || closure == Closure::None {
        return Err(input("exhaustive enumeration needs n <= 4 and an up or down closure"));
    }
    let points = 1u32 << n;
    let mut out = Vec::new();
    for fam in 0..1u64 << points {
        let sets = (0..points).filter(|&s| fam >> s & 1 == 1);
        if let Ok(f) = FamilyOfSubsets::new(n, sets, closure) {
            out.push(f);
        }
    }
    Ok(out)
}

/// `|U ∩ L|` style counts over bitmask families.
fn count(pred: impl Fn(u32) -> bool, n: usize) -> i128 {
    (0..1u32 << n).filter(|&s| pred(s)).count() as i128
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KleitmanCheck {
    /// Left side of the generalized inequality, an integer.
    pub value: i128,
    pub holds: bool,
    /// The same quantity as `N^3 κ'_3(1_U1, 1_U2, 1_{L^c})` under the uniform
    /// measure, `N = 2^n`.
    pub lattice_value: i128,
}

/// Generalized Kleitman inequality for up-sets `U1, U2` and a down-set `L`.
pub fn kleitman_check(u1: &FamilyOfSubsets, u2: &FamilyOfSubsets, l: &FamilyOfSubsets) -> Result<KleitmanCheck> {
    let n = u1.n;
    if u2.n != n || l.n != n {
        return Err(input("families must share the same ground set"));
    }
    for (name, fam, closure) in [("U1", u1, Closure::Up), ("U2", u2, Closure::Up), ("L", l, Closure::Down)] {
        if fam.closure != closure {
            return Err(ApplicationError::Closure {
                name: name.into(),
                closure,
                detail: format!("tagged {:?}", fam.closure),
            });
        }
        fam.verify_closure(name)?;
    }
    let big_n: i128 = 1 << n;
    let c = |p: &dyn Fn(u32) -> bool| count(p, n);
    let cu1 = c(&|s| u1.contains(s));
    let cu2 = c(&|s| u2.contains(s));
    let cl = c(&|s| l.contains(s));
    let c12 = c(&|s| u1.contains(s) && u2.contains(s));
    let c12l = c(&|s| u1.contains(s) && u2.contains(s) && l.contains(s));
    let c1l = c(&|s| u1.contains(s) && l.contains(s));
    let c2l = c(&|s| u2.contains(s) && l.contains(s));
    let value = big_n * big_n * c12 - 2 * big_n * big_n * c12l + big_n * (c12 * cl + c1l * cu2 + cu1 * c2l)
        - big_n * cu1 * cu2
        - cu1 * cu2 * cl;
    let mu = LatticeMeasure::uniform(LatticeShape::boolean(n)?);
    let lc = l.indicator()?.map(|v| Rational::one() - v);
    let k = kappa3(&mu, &[u1.indicator()?, u2.indicator()?, lc])?;
    let scaled = k * Rational::from_integer(BigInt::from(big_n * big_n * big_n));
    let lattice_value = scaled
        .to_integer()
        .to_i128()
        .ok_or_else(|| input("value does not fit in 128 bits"))?;
    if Rational::from_integer(BigInt::from(lattice_value)) != scaled || lattice_value != value {
        return Err(ApplicationError::OracleMismatch {
            what: "kleitman",
            value: lattice_value.to_string(),
            oracle: value.to_string(),
        });
    }
    Ok(KleitmanCheck {
        value,
        holds: value >= 0,
        lattice_value,
    })
}

/// `|U||L| − 2^n |U ∩ L|`, the classical Kleitman gap, by direct counting.
pub fn kleitman_classical_gap(u: &FamilyOfSubsets, l: &FamilyOfSubsets) -> i128 {
    let n = u.n;
    let cu = count(|s| u.contains(s), n);
    let cl = count(|s| l.contains(s), n);
    let cul = count(|s| u.contains(s) && l.contains(s), n);
    cu * cl - (1i128 << n) * cul
}

/// Square matrix of exact rationals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<String>>", into = "Vec<Vec<String>>")]
pub struct RationalMatrix {
    n: usize,
    entries: Vec<Rational>,
}

impl RationalMatrix {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let n = rows.len();
        if let Some((row, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
            return Err(ApplicationError::NotSquare { rows: n, row, len: r.len() });
        }
        Ok(Self {
            n,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Rational) -> Self {
        Self {
            n,
            entries: (0..n * n).map(|k| f(k / n, k % n)).collect(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { Rational::one() } else { Rational::zero() })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.entries[i * self.n + j]
    }

    pub fn symmetry_violation(&self) -> Option<(usize, usize)> {
        (0..self.n)
            .flat_map(|i| (i + 1..self.n).map(move |j| (i, j)))
            .find(|&(i, j)| self.get(i, j) != self.get(j, i))
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetry_violation().is_none()
    }

    /// The principal submatrix on the given indices.
    pub fn principal(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self.get(idx[i], idx[j]).clone())
    }

    /// Row-reduced copy and its rank; the determinant is the signed product
    /// of pivots.
    fn eliminate(&self) -> (usize, Rational) {
        let n = self.n;
        let mut a: Vec<Vec<Rational>> = (0..n).map(|i| (0..n).map(|j| self.get(i, j).clone()).collect()).collect();
        let mut det = Rational::one();
        let mut rank = 0;
        for col in 0..n {
            let Some(p) = (rank..n).find(|&r| !a[r][col].is_zero()) else {
                det = Rational::zero();
                continue;
            };
            if p != rank {
                a.swap(p, rank);
                det = -det;
            }
            let pivot = a[rank][col].clone();
            det *= &pivot;
            for r in rank + 1..n {
                if a[r][col].is_zero() {
                    continue;
                }
                let factor = &a[r][col] / &pivot;
                for c in col..n {
                    let delta = &factor * &a[rank][c];
                    a[r][c] -= delta;
                }
            }
            rank += 1;
        }
        (rank, det)
    }

    /// Exact determinant; the empty matrix has determinant 1.
    pub fn determinant(&self) -> Rational {
        if self.n == 0 {
            return Rational::one();
        }
        self.eliminate().1
    }

    pub fn rank(&self) -> usize {
        self.eliminate().0
    }

    pub fn positive_definite_violation(&self) -> Option<usize> {
        (1..=self.n).find(|&k| !self.principal(&(0..k).collect::<Vec<_>>()).determinant().is_positive())
    }

    /// Symmetric with all leading principal minors positive.
    pub fn is_positive_definite(&self) -> bool {
        self.is_symmetric() && self.positive_definite_violation().is_none()
    }

    /// A principal submatrix with negative determinant, if any.
    pub fn psd_violation(&self) -> Option<Vec<usize>> {
        (1u32..1 << self.n)
            .map(|mask| (0..self.n).filter(|i| mask >> i & 1 == 1).collect::<Vec<_>>())
            .find(|idx| self.principal(idx).determinant().is_negative())
    }

    /// Symmetric with every principal minor nonnegative.
    pub fn is_psd(&self) -> bool {
        self.is_symmetric() && self.psd_violation().is_none()
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| to_f64(self.get(i, j)))
    }
}

impl TryFrom<Vec<Vec<String>>> for RationalMatrix {
    type Error = ApplicationError;

    fn try_from(rows: Vec<Vec<String>>) -> Result<Self> {
        let parsed = rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, s)| crate::rational::parse_rational(s).map_err(|e| input(format!("[{i}][{j}]: {e}"))))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(parsed)
    }
}

impl From<RationalMatrix> for Vec<Vec<String>> {
    fn from(m: RationalMatrix) -> Self {
        (0..m.n)
            .map(|i| (0..m.n).map(|j| format_rational(m.get(i, j))).collect())
            .collect()
    }
}

/// The first `(i, k, j)` with `i <= k <= j` or `j <= k <= i` where
/// `R(i,j)R(k,k) != R(i,k)R(k,j)`.
pub fn triangle_violation(r: &RationalMatrix) -> Option<(usize, usize, usize)> {
    let n = r.n;
    for i in 0..n {
        for j in 0..n {
            let (lo, hi) = (i.min(j), i.max(j));
            for k in lo..=hi {
                if r.get(i, j) * r.get(k, k) != r.get(i, k) * r.get(k, j) {
                    return Some((i, k, j));
                }
            }
        }
    }
    None
}

/// `R(i,j) ∝ r^{|i−j|}` normalized to sum to 1.
pub fn geometric_kernel(n: usize, r: &Rational) -> RationalMatrix {
    let raw = RationalMatrix::from_fn(n, |i, j| num_traits::pow(r.clone(), i.abs_diff(j)));
    let total: Rational = raw.entries.iter().sum();
    RationalMatrix::from_fn(n, |i, j| raw.get(i, j) / &total)
}

/// Third-order inequality for Hadamard products under a triangle kernel `R`.
pub fn triangle_hadamard_check(r: &RationalMatrix, fs: [&RationalMatrix; 3]) -> Result<AppCheck> {
    let n = r.n;
    if n < 2 {
        return Err(input("R must be at least 2 x 2"));
    }
    if r.entries.iter().any(Signed::is_negative) {
        return Err(input("R has a negative entry"));
    }
    if r.entries.iter().sum::<Rational>() != Rational::one() {
        return Err(ApplicationError::NotNormalized("R".into()));
    }
    if let Some((i, k, j)) = triangle_violation(r) {
        return Err(ApplicationError::Triangle { i, k, j });
    }
    let shape = LatticeShape::new(vec![n, n])?;
    let mu = LatticeMeasure::from_fn(shape.clone(), |c| r.get(c[0], c[1]).clone())?;
    if let Some((p, q)) = mtp2_violation(&mu) {
        return Err(ApplicationError::NotMtp2 {
            p: p.coords,
            q: q.coords,
        });
    }
    let mut lifted = Vec::new();
    for (k, f) in fs.iter().enumerate() {
        if f.n != n {
            return Err(input(format!("F{} must be {n} x {n}", k + 1)));
        }
        let g = LatticeFunction::from_fn(shape.clone(), |c| f.get(c[0], c[1]).clone());
        if !g.is_nonnegative() {
            return Err(ApplicationError::Negative {
                name: format!("F{}", k + 1),
                index: 0,
            });
        }
        if !is_increasing(&g) {
            return Err(ApplicationError::NotMonotone {
                name: format!("F{}", k + 1),
                index: 0,
            });
        }
        lifted.push(g);
    }
    let value = kappa3(&mu, &lifted)?;
    let er = |idx: &[usize]| -> Rational {
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| r.get(i, j) * idx.iter().map(|&k| fs[k].get(i, j).clone()).product::<Rational>())
            .sum()
    };
    AppCheck::new("triangle-hadamard", value, kappa3_from(er), Sign::Nonnegative)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PsdKind {
    Rank,
    Det,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Exact,
    Float,
}

/// Outcome of a floating-point comparison against zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FloatOutcome {
    Pass,
    Violation,
    Inconclusive,
}

/// Classifies `value >= 0` with relative tolerance against `scale`.
pub fn classify_float(value: f64, scale: f64) -> FloatOutcome {
    let tol = FLOAT_TOLERANCE * scale.abs().max(f64::MIN_POSITIVE);
    if !value.is_finite() || value.abs() <= tol {
        FloatOutcome::Inconclusive
    } else if value > 0.0 {
        FloatOutcome::Pass
    } else {
        FloatOutcome::Violation
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsdReport {
    pub kind: PsdKind,
    #[serde(with = "serde_rational")]
    pub t: Rational,
    pub backend: Backend,
    pub mtp2: bool,
    /// A failing pair when the measure is not MTP2 (exact backend).
    pub mtp2_violation: Option<(Vec<usize>, Vec<usize>)>,
    /// Pairs within tolerance of equality whose exact sign was not decided
    /// (floating backend).
    pub mtp2_inconclusive_pairs: usize,
    pub measure: Option<LatticeMeasure>,
    #[serde(with = "serde_rational::option")]
    pub kappa: Option<Rational>,
    pub kappa_float: Option<f64>,
    pub kappa_float_outcome: Option<FloatOutcome>,
    pub eigen: Option<EigenReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenReport {
    /// `(Σ w)(Σ w λmin/λmax) − (Σ w λmin)(Σ w/λmax)`.
    pub difference: f64,
    pub scale: f64,
    pub outcome: FloatOutcome,
    pub trace_increasing: bool,
    pub lambda_min_decreasing: bool,
    pub inv_lambda_max_decreasing: bool,
}

fn subset_indices(n: usize, mask: usize) -> Vec<usize> {
    (0..n).filter(|i| mask >> i & 1 == 1).collect()
}

/// Measure on `2^{1..n}` built from a PSD matrix, checked for MTP2, with an
/// optional κ'_3 evaluation and the eigenvalue example.
pub fn psd_measure_check(
    m: &RationalMatrix,
    t: &Rational,
    kind: PsdKind,
    fs: Option<&[LatticeFunction]>,
    eigen: bool,
) -> Result<PsdReport> {
    let n = m.n;
    if n == 0 || n > 10 {
        return Err(input("matrix dimension must be in 1..=10"));
    }
    if !t.is_positive() {
        return Err(input("t must be positive"));
    }
    if let Some((i, j)) = m.symmetry_violation() {
        return Err(ApplicationError::NotSymmetric { i, j });
    }
    match kind {
        PsdKind::Rank => {
            if let Some(subset) = m.psd_violation() {
                return Err(ApplicationError::NotPsd { subset });
            }
        }
        PsdKind::Det => {
            if let Some(k) = m.positive_definite_violation() {
                return Err(ApplicationError::NotPositiveDefinite { k });
            }
        }
    }
    let shape = LatticeShape::boolean(n)?;
    let subs: Vec<RationalMatrix> = (0..1usize << n).map(|mask| m.principal(&subset_indices(n, mask))).collect();
    let exact = kind == PsdKind::Rank || t.is_integer();
    let mut report = PsdReport {
        kind,
        t: t.clone(),
        backend: if exact { Backend::Exact } else { Backend::Float },
        mtp2: false,
        mtp2_violation: None,
        mtp2_inconclusive_pairs: 0,
        measure: None,
        kappa: None,
        kappa_float: None,
        kappa_float_outcome: None,
        eigen: None,
    };
    if let Some(fs) = fs {
        if fs.len() != 3 || fs.iter().any(|f| f.shape() != &shape) {
            return Err(input("three functions on the Boolean lattice are required"));
        }
        for (k, f) in fs.iter().enumerate() {
            if !f.is_nonnegative() || !is_increasing(f) {
                return Err(ApplicationError::NotMonotone {
                    name: format!("f{}", k + 1),
                    index: 0,
                });
            }
        }
    }
    let float_weights: Vec<f64>;
    if exact {
        let weights: Vec<Rational> = subs
            .iter()
            .map(|s| match kind {
                PsdKind::Rank => pow_i32(t, (n - s.rank()) as i32),
                PsdKind::Det => {
                    let e = t.to_integer().to_i32().expect("small integer exponent");
                    pow_i32(&s.determinant(), -e)
                }
            })
            .collect();
        let mu = LatticeMeasure::new(shape.clone(), weights)?.normalized()?;
        report.mtp2_violation = mtp2_violation(&mu).map(|(p, q)| (p.coords, q.coords));
        report.mtp2 = report.mtp2_violation.is_none();
        if let (true, Some(fs)) = (report.mtp2, fs) {
            report.kappa = Some(kappa3(&mu, fs)?);
        }
        float_weights = mu.weights().iter().map(to_f64).collect();
        report.measure = Some(mu);
    } else {
        let tf = to_f64(t);
        let raw: Vec<f64> = subs.iter().map(|s| to_f64(&s.determinant()).powf(-tf)).collect();
        let total: f64 = raw.iter().sum();
        float_weights = raw.iter().map(|w| w / total).collect();
        let (violations, inconclusive) = float_mtp2(&shape, &float_weights);
        report.mtp2 = violations == 0;
        report.mtp2_inconclusive_pairs = inconclusive;
        if let (true, Some(fs)) = (report.mtp2, fs) {
            let (value, scale) = float_kappa3(&float_weights, fs);
            report.kappa_float = Some(value);
            report.kappa_float_outcome = Some(classify_float(value, scale));
        }
    }
    if eigen {
        report.eigen = Some(eigen_report(m, &float_weights));
    }
    Ok(report)
}

fn float_mtp2(shape: &LatticeShape, w: &[f64]) -> (usize, usize) {
    let coords = shape.all_coords();
    let mut violations = 0;
    let mut inconclusive = 0;
    for p in 0..w.len() {
        for q in p + 1..w.len() {
            let join: Vec<usize> = coords[p].iter().zip(&coords[q]).map(|(a, b)| *a.max(b)).collect();
            let meet: Vec<usize> = coords[p].iter().zip(&coords[q]).map(|(a, b)| *a.min(b)).collect();
            let (j, m) = (shape.rank_unchecked(&join), shape.rank_unchecked(&meet));
            if j == p.max(q) && m == p.min(q) {
                continue;
            }
            let rhs = w[p] * w[q];
            match classify_float(w[j] * w[m] - rhs, rhs.max(w[j] * w[m])) {
                FloatOutcome::Violation => violations += 1,
                FloatOutcome::Inconclusive if w[j] * w[m] < rhs => inconclusive += 1,
                _ => {}
            }
        }
    }
    (violations, inconclusive)
}

/// κ'_3 in floating point, with the sum of the absolute terms as its scale.
fn float_kappa3(w: &[f64], fs: &[LatticeFunction]) -> (f64, f64) {
    let vals: Vec<Vec<f64>> = fs.iter().map(|f| f.values().iter().map(to_f64).collect()).collect();
    let e = |idx: &[usize]| -> f64 {
        w.iter()
            .enumerate()
            .map(|(r, wr)| wr * idx.iter().map(|&k| vals[k][r]).product::<f64>())
            .sum()
    };
    let terms = [
        2.0 * e(&[0, 1, 2]),
        -e(&[0, 1]) * e(&[2]),
        -e(&[0, 2]) * e(&[1]),
        -e(&[1, 2]) * e(&[0]),
        e(&[0]) * e(&[1]) * e(&[2]),
    ];
    (terms.iter().sum(), terms.iter().map(|t| t.abs()).sum())
}

/// `(tr, λmin, λmax)` of every principal submatrix. The empty submatrix gets
/// `λmin = max diagonal` and `λmax = min diagonal`, the extensions that keep
/// both eigenvalue functions monotone in the subset.
fn spectral_table(m: &RationalMatrix) -> Vec<(f64, f64, f64)> {
    let n = m.n;
    let full = m.to_f64();
    let diag: Vec<f64> = (0..n).map(|i| full[(i, i)]).collect();
    let dmax = diag.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let dmin = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    (0..1usize << n)
        .map(|mask| {
            let idx = subset_indices(n, mask);
            if idx.is_empty() {
                return (0.0, dmax, dmin);
            }
            let sub = DMatrix::from_fn(idx.len(), idx.len(), |i, j| full[(idx[i], idx[j])]);
            let eig = sub.clone().symmetric_eigen().eigenvalues;
            let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            (sub.trace(), lo, hi)
        })
        .collect()
}

fn eigen_report(m: &RationalMatrix, w: &[f64]) -> EigenReport {
    let n = m.n;
    let table = spectral_table(m);
    let tol = |x: f64| FLOAT_TOLERANCE * x.abs().max(1.0);
    let mut trace_increasing = true;
    let mut min_dec = true;
    let mut inv_max_dec = true;
    for mask in 0..1usize << n {
        for i in 0..n {
            if mask >> i & 1 == 1 {
                continue;
            }
            let (a, b) = (table[mask], table[mask | 1 << i]);
            trace_increasing &= b.0 >= a.0 - tol(a.0);
            min_dec &= b.1 <= a.1 + tol(a.1);
            inv_max_dec &= 1.0 / b.2 <= 1.0 / a.2 + tol(1.0 / a.2);
        }
    }
    let sum = |g: &dyn Fn(&(f64, f64, f64)) -> f64| -> f64 { w.iter().zip(&table).map(|(wi, t)| wi * g(t)).sum() };
    let s0 = sum(&|_| 1.0);
    let s_ratio = sum(&|t| t.1 / t.2);
    let s_min = sum(&|t| t.1);
    let s_inv = sum(&|t| 1.0 / t.2);
    let lhs = s0 * s_ratio;
    let rhs = s_min * s_inv;
    let scale = lhs.abs().max(rhs.abs());
    EigenReport {
        difference: lhs - rhs,
        scale,
        outcome: classify_float(lhs - rhs, scale),
        trace_increasing,
        lambda_min_decreasing: min_dec,
        inv_lambda_max_decreasing: inv_max_dec,
    }
}

/// A player in the two-team ranking model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    A(usize),
    B(usize),
}

/// `lo < hi`: player `lo` ranks below (loses to) `hi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Relation {
    pub lo: Player,
    pub hi: Player,
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::A(i) => write!(f, "a{i}"),
            Player::B(j) => write!(f, "b{j}"),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}<{}", self.lo, self.hi)
    }
}

impl FromStr for Player {
    type Err = ApplicationError;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (team, idx) = s.split_at(s.char_indices().nth(1).map_or(s.len(), |(i, _)| i));
        let idx: usize = idx.parse().map_err(|_| input(format!("bad player {s:?}")))?;
        if idx == 0 {
            return Err(input(format!("players are numbered from 1, got {s:?}")));
        }
        match team {
            "a" => Ok(Player::A(idx)),
            "b" => Ok(Player::B(idx)),
            _ => Err(input(format!("bad player {s:?}"))),
        }
    }
}

impl FromStr for Relation {
    type Err = ApplicationError;
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s.split_once('<').ok_or_else(|| input(format!("relation {s:?} lacks '<'")))?;
        Ok(Self {
            lo: lo.parse()?,
            hi: hi.parse()?,
        })
    }
}

impl TryFrom<String> for Relation {
    type Error = ApplicationError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Relation> for String {
    fn from(r: Relation) -> Self {
        r.to_string()
    }
}

struct Rankings {
    m: usize,
    /// `ranks[k][p]` is the rank of player `p` in permutation `k`.
    ranks: Vec<Vec<u8>>,
}

impl Rankings {
    fn new(m: usize, n: usize) -> Self {
        let total = m + n;
        let mut ranks = Vec::new();
        let mut perm: Vec<u8> = (0..total as u8).collect();
        permute(&mut perm, 0, &mut ranks);
        Self { m, ranks }
    }

    fn index(&self, p: Player) -> usize {
        match p {
            Player::A(i) => i - 1,
            Player::B(j) => self.m + j - 1,
        }
    }

    fn count(&self, rels: &[Relation]) -> u64 {
        let pairs: Vec<(usize, usize)> = rels.iter().map(|r| (self.index(r.lo), self.index(r.hi))).collect();
        self.ranks
            .iter()
            .filter(|rk| pairs.iter().all(|&(lo, hi)| rk[lo] < rk[hi]))
            .count() as u64
    }
}

fn permute(perm: &mut Vec<u8>, k: usize, out: &mut Vec<Vec<u8>>) {
    if k == perm.len() {
        out.push(perm.clone());
        return;
    }
    for i in k..perm.len() {
        perm.swap(k, i);
        permute(perm, k + 1, out);
        perm.swap(k, i);
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankingReport {
    pub m: usize,
    pub n: usize,
    #[serde(with = "serde_rational")]
    pub p_before: Rational,
    #[serde(with = "serde_rational")]
    pub p_after: Rational,
    pub holds: bool,
    #[serde(with = "serde_rational::option")]
    pub prop_value: Option<Rational>,
    pub prop_holds: Option<bool>,
}

fn check_players(m: usize, n: usize, rels: &[Relation]) -> Result<()> {
    for r in rels {
        for p in [r.lo, r.hi] {
            let ok = match p {
                Player::A(i) => i <= m,
                Player::B(j) => j <= n,
            };
            if !ok {
                return Err(input(format!("player {p} does not exist with m = {m}, n = {n}")));
            }
        }
    }
    Ok(())
}

/// Exact `P(a1 < b1 | Θ)` and `P(a1 < b1 | Θ ∪ Θ'')` by enumerating all
/// rankings, plus the optional four-event expression built from `events`
/// (each a conjunction of `a_i < b_j` relations).
pub fn ranking_monotonicity(
    m: usize,
    n: usize,
    theta: &[Relation],
    theta2: &[Relation],
    events: Option<&[Vec<Relation>; 4]>,
) -> Result<RankingReport> {
    if m == 0 || n == 0 || m + n > 8 {
        return Err(input("need m, n >= 1 and m + n <= 8"));
    }
    check_players(m, n, theta)?;
    check_players(m, n, theta2)?;
    for r in theta {
        if matches!((r.lo, r.hi), (Player::A(_), Player::B(_)) | (Player::B(_), Player::A(_))) {
            return Err(input(format!("{r} is not an intra-team relation")));
        }
    }
    for r in theta2 {
        if !matches!((r.lo, r.hi), (Player::A(_), Player::B(_))) {
            return Err(input(format!("{r} is not of the form a_i < b_j")));
        }
    }
    let rk = Rankings::new(m, n);
    let target = Relation {
        lo: Player::A(1),
        hi: Player::B(1),
    };
    let conditional = |given: &[Relation]| -> Result<Rational> {
        let base = rk.count(given);
        if base == 0 {
            return Err(ApplicationError::ZeroProbability("the relations are contradictory".into()));
        }
        let mut with = given.to_vec();
        with.push(target);
        Ok(Rational::new(rk.count(&with).into(), base.into()))
    };
    let p_before = conditional(theta)?;
    let after: Vec<Relation> = theta.iter().chain(theta2).copied().collect();
    let p_after = conditional(&after)?;
    let (prop_value, prop_holds) = match events {
        Some(ev) => {
            for e in ev {
                check_players(m, n, e)?;
            }
            let v = ranking_four_event_expression(&rk, m, n, ev)?;
            let holds = !v.is_positive();
            (Some(v), Some(holds))
        }
        None => (None, None),
    };
    Ok(RankingReport {
        m,
        n,
        holds: p_after >= p_before,
        p_before,
        p_after,
        prop_value,
        prop_holds,
    })
}

fn ranking_four_event_expression(rk: &Rankings, m: usize, n: usize, ev: &[Vec<Relation>; 4]) -> Result<Rational> {
    let mut base: Vec<Relation> = Vec::new();
    for i in 1..m {
        base.push(Relation {
            lo: Player::A(i),
            hi: Player::A(i + 1),
        });
    }
    for j in 1..n {
        base.push(Relation {
            lo: Player::B(j),
            hi: Player::B(j + 1),
        });
    }
    base.extend(ev[3].iter().copied());
    let denom = rk.count(&base);
    if denom == 0 {
        return Err(ApplicationError::ZeroProbability("A0 ∩ A4 is empty".into()));
    }
    let pi = |idx: &[usize]| -> Rational {
        let mut rels = base.clone();
        for &k in idx {
            rels.extend(ev[k].iter().copied());
        }
        Rational::new(rk.count(&rels).into(), denom.into())
    };
    let cov = |i: usize, j: usize| pi(&[i, j]) - pi(&[i]) * pi(&[j]);
    Ok(kappa3_from(pi) - int(2) * (cov(0, 1) + cov(0, 2) + cov(1, 2)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankingSweep {
    pub m: usize,
    pub n: usize,
    /// Consistent intra-team relation sets `Θ` tried.
    pub partial_orders: u64,
    /// `(Θ, Θ'')` pairs compared.
    pub comparisons: u64,
    pub violations: u64,
    pub first_violation: Option<(Vec<Relation>, Vec<Relation>)>,
}

/// Checks `P(a1 < b1 | Θ ∪ Θ'') >= P(a1 < b1 | Θ)` for every orientation
/// pattern `Θ` of intra-team pairs (each pair absent or oriented either way)
/// and every nonempty set `Θ''` of `a_i < b_j` relations.
pub fn ranking_exhaustive(m: usize, n: usize) -> Result<RankingSweep> {
    if m == 0 || n == 0 || m + n > 6 {
        return Err(input("exhaustive sweep needs m, n >= 1 and m + n <= 6"));
    }
    let rk = Rankings::new(m, n);
    let mut intra: Vec<(Player, Player)> = Vec::new();
    for i in 1..=m {
        for j in i + 1..=m {
            intra.push((Player::A(i), Player::A(j)));
        }
    }
    for i in 1..=n {
        for j in i + 1..=n {
            intra.push((Player::B(i), Player::B(j)));
        }
    }
    let inter: Vec<Relation> = (1..=m)
        .flat_map(|i| (1..=n).map(move |j| Relation { lo: Player::A(i), hi: Player::B(j) }))
        .collect();
    let below = |rank: &[u8], x: Player, y: Player| rank[rk.index(x)] < rank[rk.index(y)];
    // Per ranking: bit 2k set when intra pair k holds forward, bit 2k+1 when
    // reversed; and the mask of inter relations that hold.
    let profiles: Vec<(u64, usize)> = rk
        .ranks
        .iter()
        .map(|rank| {
            let mut im = 0u64;
            for (k, &(x, y)) in intra.iter().enumerate() {
                im |= if below(rank, x, y) { 1 << (2 * k) } else { 1 << (2 * k + 1) };
            }
            let xm = inter
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, r)| acc | (below(rank, r.lo, r.hi) as usize) << k);
            (im, xm)
        })
        .collect();
    let bits = inter.len();
    let mut sweep = RankingSweep {
        m,
        n,
        partial_orders: 0,
        comparisons: 0,
        violations: 0,
        first_violation: None,
    };
    let patterns = 3u64.pow(intra.len() as u32);
    for code in 0..patterns {
        let mut theta = 0u64;
        let mut c = code;
        for k in 0..intra.len() {
            match c % 3 {
                1 => theta |= 1 << (2 * k),
                2 => theta |= 1 << (2 * k + 1),
                _ => {}
            }
            c /= 3;
        }
        // Superset sums over the inter mask, split by whether a1 < b1 (bit 0).
        let mut all = vec![0u64; 1 << bits];
        let mut hit = vec![0u64; 1 << bits];
        for &(im, xm) in &profiles {
            if im & theta == theta {
                all[xm] += 1;
                if xm & 1 == 1 {
                    hit[xm] += 1;
                }
            }
        }
        if all.iter().all(|&c| c == 0) {
            continue;
        }
        for b in 0..bits {
            for s in 0..1usize << bits {
                if s >> b & 1 == 0 {
                    all[s] += all[s | 1 << b];
                    hit[s] += hit[s | 1 << b];
                }
            }
        }
        sweep.partial_orders += 1;
        let before = Rational::new(hit[0].into(), all[0].into());
        for s in 1..1usize << bits {
            sweep.comparisons += 1;
            let after = Rational::new(hit[s].into(), all[s].into());
            if after < before {
                sweep.violations += 1;
                if sweep.first_violation.is_none() {
                    let t: Vec<Relation> = intra
                        .iter()
                        .enumerate()
                        .filter_map(|(k, &(x, y))| match theta >> (2 * k) & 3 {
                            1 => Some(Relation { lo: x, hi: y }),
                            2 => Some(Relation { lo: y, hi: x }),
                            _ => None,
                        })
                        .collect();
                    let t2 = (0..bits).filter(|k| s >> k & 1 == 1).map(|k| inter[k]).collect();
                    sweep.first_violation = Some((t, t2));
                }
            }
        }
    }
    Ok(sweep)
}

/// Finds a coordinate transposition under which `μ` is not invariant.
pub fn exchangeability_violation(mu: &LatticeMeasure) -> Option<(usize, usize, Vec<usize>)> {
    let shape = mu.shape();
    let lens = shape.chain_lengths();
    if lens.iter().any(|&l| l != lens[0]) {
        return Some((0, 0, Vec::new()));
    }
    for r in 0..shape.size() {
        let c = shape.coords(r);
        for i in 0..lens.len().saturating_sub(1) {
            let mut d = c.clone();
            d.swap(i, i + 1);
            if mu.weight(r) != mu.weight(shape.rank_unchecked(&d)) {
                return Some((i, i + 1, c));
            }
        }
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExchangeableReport {
    pub check: AppCheck,
    /// `c_0(a), ..., c_{m+2}(a)`.
    #[serde(with = "serde_rational::vec")]
    pub c: Vec<Rational>,
}

/// Higher-order log-concavity bound for an exchangeable MTP2 measure: with
/// `c_k = P(X_1 <= a, ..., X_k <= a)` and `q_k = c_{m+k−1}/c_{m−1}`, returns
/// `2q_3 − 3q_2q_1 + q_1^3 − 6(q_2 − q_1^2)`, which should be `<= 0`.
pub fn exchangeable_bound_check(mu: &LatticeMeasure, a: usize, m: usize) -> Result<ExchangeableReport> {
    let shape = mu.shape().clone();
    let n = shape.dims();
    mu.ensure_normalized()?;
    if m < 1 || m + 2 > n {
        return Err(input(format!("m must satisfy 1 <= m <= n - 2 = {}", n as i64 - 2)));
    }
    if let Some((i, j, coords)) = exchangeability_violation(mu) {
        return Err(ApplicationError::NotExchangeable { i, j, coords });
    }
    if let Some((p, q)) = mtp2_violation(mu) {
        return Err(ApplicationError::NotMtp2 {
            p: p.coords,
            q: q.coords,
        });
    }
    let below = |k: usize| {
        LatticeFunction::from_fn(shape.clone(), move |x| {
            if x[..k].iter().all(|&xi| xi <= a) {
                Rational::one()
            } else {
                Rational::zero()
            }
        })
    };
    let c: Vec<Rational> = (0..=m + 2)
        .map(|k| crate::lattice::expectation(mu, &below(k)))
        .collect::<std::result::Result<_, _>>()?;
    if c[m - 1].is_zero() {
        return Err(ApplicationError::ZeroProbability(format!("c_{}(a) = 0", m - 1)));
    }
    let q = |k: usize| &c[m + k - 1] / &c[m - 1];
    let (q1, q2, q3) = (q(1), q(2), q(3));
    let value = int(2) * &q3 - int(3) * &q2 * &q1 + num_traits::pow(q1.clone(), 3) - int(6) * (&q2 - &q1 * &q1);

    // Oracle: condition on the first m−1 coordinates lying below a, then
    // evaluate −κ'_3(1−f) − 3 Cov(f1, f2) for f_k = 1[X_{m+k−1} <= a].
    let psi = below(m - 1);
    let nu = LatticeMeasure::new(
        shape.clone(),
        mu.weights().iter().zip(psi.values()).map(|(w, s)| w * s).collect(),
    )?
    .normalized()?;
    let f = |k: usize| {
        LatticeFunction::from_fn(shape.clone(), move |x| {
            if x[m + k - 2] <= a {
                Rational::zero()
            } else {
                Rational::one()
            }
        })
    };
    let complements = [f(1), f(2), f(3)];
    let kappa = kappa3(&nu, &complements)?;
    let e = |g: &LatticeFunction| crate::lattice::expectation(&nu, g);
    let one_minus = |g: &LatticeFunction| g.map(|v| Rational::one() - v);
    let (g1, g2) = (one_minus(&complements[0]), one_minus(&complements[1]));
    let cov = e(&g1.mul(&g2)?)? - e(&g1)? * e(&g2)?;
    let oracle = -kappa - int(3) * cov;
    Ok(ExchangeableReport {
        check: AppCheck::new("exchangeable", value, oracle, Sign::Nonpositive)?,
        c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn seq(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn bernstein_examples() {
        let t = vec![int(0), ratio(1, 2), int(1)];
        let c = bernstein_check(2, &ratio(1, 2), [&t, &t, &t]).unwrap();
        assert_eq!(c.value, ratio(3, 16));
        let top = bernstein_check(2, &int(1), [&t, &t, &t]).unwrap();
        assert_eq!(top.value, int(0));
        assert!(bernstein_check(2, &ratio(3, 2), [&t, &t, &t]).is_err());
        let down = vec![int(1), int(0), int(0)];
        assert!(matches!(
            bernstein_check(2, &ratio(1, 2), [&t, &down, &t]),
            Err(ApplicationError::NotMonotone { .. })
        ));
    }

    #[test]
    fn logconvex_examples() {
        let a = vec![ratio(1, 4); 4];
        let id = seq(&[0, 1, 2, 3]);
        assert!(logconvex_check(&a, &id, &id, &id).unwrap().holds);
        let concave = vec![ratio(1, 6), ratio(2, 6), ratio(2, 6), ratio(1, 6)];
        assert_eq!(
            logconvex_check(&concave, &id, &id, &id),
            Err(ApplicationError::LogConvexity { k: 1 })
        );
    }

    #[test]
    fn kleitman_small() {
        let u = FamilyOfSubsets::new(1, [1], Closure::Up).unwrap();
        let l = FamilyOfSubsets::new(1, [0], Closure::Down).unwrap();
        assert_eq!(kleitman_classical_gap(&u, &l), 1);
        let k = kleitman_check(&u, &FamilyOfSubsets::power_set(1), &l).unwrap();
        assert_eq!(k.value, 2);
        assert!(FamilyOfSubsets::new(2, [1], Closure::Up).is_err());
        assert_eq!(closed_families(2, Closure::Up).unwrap().len(), 6);
        assert_eq!(closed_families(3, Closure::Down).unwrap().len(), 20);
    }

    #[test]
    fn matrix_basics() {
        let m = RationalMatrix::new(vec![seq(&[2, 1]), seq(&[1, 2])]).unwrap();
        assert_eq!(m.determinant(), int(3));
        assert!(m.is_positive_definite());
        let ones = RationalMatrix::new(vec![seq(&[1, 1]), seq(&[1, 1])]).unwrap();
        assert_eq!(ones.rank(), 1);
        assert!(ones.is_psd());
        assert!(!ones.is_positive_definite());
        assert!(RationalMatrix::new(vec![seq(&[1, 2])]).is_err());
    }

    #[test]
    fn triangle_kernels() {
        let r = geometric_kernel(3, &ratio(1, 2));
        assert!(triangle_violation(&r).is_none());
        let f = RationalMatrix::from_fn(3, |i, j| int((i + j) as i64));
        let one = RationalMatrix::from_fn(3, |_, _| int(1));
        let c = triangle_hadamard_check(&r, [&f, &f, &f]).unwrap();
        assert!(c.holds);
        let fkg = triangle_hadamard_check(&r, [&f, &f, &one]).unwrap();
        assert!(!fkg.value.is_negative());
        let bad = RationalMatrix::from_fn(3, |i, j| if i == 2 && j == 0 { int(0) } else { ratio(1, 8) });
        assert!(matches!(triangle_hadamard_check(&bad, [&f, &f, &f]), Err(ApplicationError::Triangle { .. })));
        let up = geometric_kernel(3, &int(2));
        assert!(triangle_violation(&up).is_none());
        assert!(matches!(triangle_hadamard_check(&up, [&f, &f, &f]), Err(ApplicationError::NotMtp2 { .. })));
    }

    #[test]
    fn psd_measures() {
        let id = RationalMatrix::identity(3);
        let r = psd_measure_check(&id, &int(2), PsdKind::Det, None, false).unwrap();
        assert!(r.mtp2);
        let mu = r.measure.unwrap();
        assert!(mu.weights().iter().all(|w| w == &ratio(1, 8)));
        let diag = RationalMatrix::from_fn(3, |i, j| if i == j { int(i as i64 + 1) } else { int(0) });
        let r = psd_measure_check(&diag, &int(3), PsdKind::Rank, None, false).unwrap();
        assert!(r.mtp2);
        let ones = RationalMatrix::from_fn(3, |_, _| int(1));
        let r = psd_measure_check(&ones, &ratio(1, 2), PsdKind::Rank, None, false).unwrap();
        assert!(!r.mtp2);
        assert!(psd_measure_check(&ones, &int(1), PsdKind::Det, None, false).is_err());
    }

    #[test]
    fn eigen_example() {
        let m = RationalMatrix::new(vec![seq(&[3, 1, 0]), seq(&[1, 3, 1]), seq(&[0, 1, 3])]).unwrap();
        let r = psd_measure_check(&m, &ratio(1, 2), PsdKind::Det, None, true).unwrap();
        assert_eq!(r.backend, Backend::Float);
        let e = r.eigen.unwrap();
        assert!(e.trace_increasing && e.lambda_min_decreasing && e.inv_lambda_max_decreasing);
        assert_ne!(e.outcome, FloatOutcome::Violation);
    }

    #[test]
    fn ranking_examples() {
        let r = ranking_monotonicity(1, 1, &[], &["a1<b1".parse().unwrap()], None).unwrap();
        assert_eq!((r.p_before.clone(), r.p_after.clone()), (ratio(1, 2), int(1)));
        let r = ranking_monotonicity(2, 1, &["a1<a2".parse().unwrap()], &["a2<b1".parse().unwrap()], None).unwrap();
        assert_eq!(r.p_before, ratio(2, 3));
        assert_eq!(r.p_after, int(1));
        assert!(r.holds);
        let contradictory: Vec<Relation> = vec!["a1<a2".parse().unwrap(), "a2<a1".parse().unwrap()];
        assert!(matches!(
            ranking_monotonicity(2, 1, &contradictory, &[], None),
            Err(ApplicationError::ZeroProbability(_))
        ));
        assert!(ranking_monotonicity(1, 1, &["a1<b1".parse().unwrap()], &[], None).is_err());
    }

    #[test]
    fn ranking_sweep_small() {
        let s = ranking_exhaustive(1, 1).unwrap();
        assert_eq!((s.partial_orders, s.comparisons, s.violations), (1, 1, 0));
        let s = ranking_exhaustive(2, 2).unwrap();
        assert_eq!(s.partial_orders, 9);
        assert_eq!(s.violations, 0);
    }

    #[test]
    fn exchangeable_iid_is_zero() {
        let marg = vec![ratio(1, 2), ratio(1, 3), ratio(1, 6)];
        let mu = LatticeMeasure::product(&vec![marg; 4]).unwrap();
        for a in 0..2 {
            let r = exchangeable_bound_check(&mu, a, 1).unwrap();
            assert_eq!(r.check.value, int(0));
            assert_eq!(exchangeable_bound_check(&mu, a, 2).unwrap().check.value, int(0));
        }
        assert!(exchangeable_bound_check(&mu, 0, 3).is_err());
        let skew = LatticeMeasure::product(&[vec![ratio(1, 2), ratio(1, 2)], vec![ratio(1, 3), ratio(2, 3)], vec![ratio(1, 2), ratio(1, 2)]]).unwrap();
        assert!(matches!(
            exchangeable_bound_check(&skew, 0, 1),
            Err(ApplicationError::NotExchangeable { .. })
        ));
    }
}
