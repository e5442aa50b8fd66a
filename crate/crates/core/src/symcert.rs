//! Sparse exact polynomials and monomial-nonnegativity certificates.
//!
//! Certificates live in the variables `ω1, ω2, u1..um, v1..vm`, laid out in
//! that order in every exponent vector. For a spec with coefficients `c_λ`,
//! `Φ(u;v) = Σ_λ c_λ p_λ(u;v)` with
//! `p_λ(u;v) = (ω1+ω2)^{m−l(λ)} Σ_{splits of type λ} ∏_blocks (ω1 ∏_S u_i + ω2 ∏_S v_i)`.
//! The certificate expands `Φ(u+v;v)` and passes when no coefficient is negative.

use crate::cumulants::CumulantSpec;
use crate::partitions::{splits_of_type, Partition, PartitionError};
use crate::rational::{format_rational, serde_rational, Rational};
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Largest `m` accepted by the certificate builders.
pub const DEFAULT_CERT_CAP: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SymcertError {
    #[error("m = {m} exceeds the certificate cap {cap}")]
    CapExceeded { m: usize, cap: usize },
    #[error("partition {lambda} does not have weight {m}")]
    WeightMismatch { lambda: Partition, m: usize },
    #[error("polynomials over {left} and {right} variables cannot be combined")]
    VariableCount { left: usize, right: usize },
    #[error("{expected} values required for evaluation, got {got}")]
    EvaluationArity { expected: usize, got: usize },
    #[error(transparent)]
    Partition(#[from] PartitionError),
}

/// Exponent vector ordered graded-lexicographically: total degree first, then
/// lexicographic on the exponents.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Monomial(pub Vec<u16>);

impl Monomial {
    pub fn one(nvars: usize) -> Self {
        Monomial(vec![0; nvars])
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Monomial(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&e| u32::from(e)).sum()
    }

    pub fn exponents(&self) -> &[u16] {
        &self.0
    }

    fn mul(&self, other: &Self) -> Self {
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse polynomial with exact rational coefficients; zero coefficients are
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymPolynomial {
    nvars: usize,
    terms: BTreeMap<Monomial, Rational>,
}

impl SymPolynomial {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: Rational) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::one(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, Rational::one())
    }

    pub fn var(nvars: usize, i: usize) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(Monomial::var(nvars, i), Rational::one());
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, exponents: &[u16]) -> Rational {
        self.terms
            .get(&Monomial(exponents.to_vec()))
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn add_term(&mut self, mono: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&mono) {
            Some(existing) => {
                *existing += c;
                if existing.is_zero() {
                    self.terms.remove(&mono);
                }
            }
            None => {
                self.terms.insert(mono, c);
            }
        }
    }

    fn check(&self, other: &Self) -> Result<(), SymcertError> {
        if self.nvars != other.nvars {
            return Err(SymcertError::VariableCount {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, SymcertError> {
        self.check(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, SymcertError> {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, k: &Rational) -> Self {
        let mut out = Self::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), c * k);
        }
        out
    }

    pub fn mul(&self, other: &Self) -> Result<Self, SymcertError> {
        self.check(other)?;
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca * cb);
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::one(self.nvars);
        for _ in 0..k {
            out = out.mul(self).expect("same variable count");
        }
        out
    }

    /// Replaces variable `i` by the polynomial `q` and expands.
    pub fn substitute(&self, i: usize, q: &Self) -> Result<Self, SymcertError> {
        self.check(q)?;
        let mut powers = vec![Self::one(self.nvars)];
        let mut out = Self::zero(self.nvars);
        for (mono, c) in &self.terms {
            let e = usize::from(mono.0[i]);
            while powers.len() <= e {
                let next = powers.last().expect("nonempty").mul(q)?;
                powers.push(next);
            }
            let mut rest = mono.clone();
            rest.0[i] = 0;
            for (pm, pc) in &powers[e].terms {
                out.add_term(rest.mul(pm), c * pc);
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, point: &[Rational]) -> Result<Rational, SymcertError> {
        if point.len() != self.nvars {
            return Err(SymcertError::EvaluationArity {
                expected: self.nvars,
                got: point.len(),
            });
        }
        let mut total = Rational::zero();
        for (mono, c) in &self.terms {
            let mut term = c.clone();
            for (x, &e) in point.iter().zip(&mono.0) {
                if e > 0 {
                    term *= num_traits::pow(x.clone(), usize::from(e));
                }
            }
            total += term;
        }
        Ok(total)
    }

    /// Terms with negative coefficients.
    pub fn negative_terms(&self) -> Vec<(Vec<u16>, Rational)> {
        self.terms
            .iter()
            .filter(|(_, c)| c.is_negative())
            .map(|(m, c)| (m.0.clone(), c.clone()))
            .collect()
    }

    /// Human-readable rendering with the given variable names, highest
    /// monomial first.
    pub fn display_with<'a>(&'a self, names: &'a [String]) -> impl fmt::Display + 'a {
        PolyDisplay { poly: self, names }
    }
}

struct PolyDisplay<'a> {
    poly: &'a SymPolynomial,
    names: &'a [String],
}

impl fmt::Display for PolyDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.poly.is_zero() {
            return write!(f, "0");
        }
        for (k, (mono, c)) in self.poly.terms.iter().rev().enumerate() {
            let sign = if c.is_negative() { "-" } else { "+" };
            if k > 0 {
                write!(f, " {sign} ")?;
            } else if c.is_negative() {
                write!(f, "-")?;
            }
            let abs = c.abs();
            let factors: Vec<String> = mono
                .0
                .iter()
                .enumerate()
                .filter(|(_, &e)| e > 0)
                .map(|(i, &e)| {
                    if e == 1 {
                        self.names[i].clone()
                    } else {
                        format!("{}^{}", self.names[i], e)
                    }
                })
                .collect();
            if factors.is_empty() {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{}", factors.join("*"))?;
            } else {
                write!(f, "{abs}*{}", factors.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Variable layout `ω1, ω2, u1..um, v1..vm`.
#[derive(Debug, Clone, Copy)]
pub struct CertVars {
    pub m: usize,
}

impl CertVars {
    pub fn count(&self) -> usize {
        2 + 2 * self.m
    }
    pub fn w1(&self) -> usize {
        0
    }
    pub fn w2(&self) -> usize {
        1
    }
    /// `u_i` for `i` in `1..=m`.
    pub fn u(&self, i: usize) -> usize {
        1 + i
    }
    /// `v_i` for `i` in `1..=m`.
    pub fn v(&self, i: usize) -> usize {
        1 + self.m + i
    }
    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["w1".to_string(), "w2".to_string()];
        names.extend((1..=self.m).map(|i| format!("u{i}")));
        names.extend((1..=self.m).map(|i| format!("v{i}")));
        names
    }
    fn poly(&self, i: usize) -> SymPolynomial {
        SymPolynomial::var(self.count(), i)
    }
}

fn check_cap(m: usize) -> Result<(), SymcertError> {
    if m > DEFAULT_CERT_CAP {
        return Err(SymcertError::CapExceeded {
            m,
            cap: DEFAULT_CERT_CAP,
        });
    }
    Ok(())
}

/// `p_λ(u;v)` for a partition of `m`.
pub fn build_p_poly(lambda: &Partition, m: usize) -> Result<SymPolynomial, SymcertError> {
    check_cap(m)?;
    if lambda.weight() != m {
        return Err(SymcertError::WeightMismatch {
            lambda: lambda.clone(),
            m,
        });
    }
    let vars = CertVars { m };
    let n = vars.count();
    let (w1, w2) = (vars.poly(vars.w1()), vars.poly(vars.w2()));
    let mut sum = SymPolynomial::zero(n);
    for split in splits_of_type(lambda)? {
        let mut prod = SymPolynomial::one(n);
        for block in split.blocks() {
            let mut mu = Monomial::one(n);
            let mut mv = Monomial::one(n);
            for &i in block {
                mu.0[vars.u(i)] = 1;
                mv.0[vars.v(i)] = 1;
            }
            mu.0[vars.w1()] = 1;
            mv.0[vars.w2()] = 1;
            let mut factor = SymPolynomial::zero(n);
            factor.add_term(mu, Rational::one());
            factor.add_term(mv, Rational::one());
            prod = prod.mul(&factor)?;
        }
        sum = sum.add(&prod)?;
    }
    let lead = w1.add(&w2)?.pow((m - lambda.len()) as u32);
    lead.mul(&sum)
}

/// `Φ(u;v) = Σ_λ c_λ p_λ(u;v)`.
pub fn build_phi(spec: &CumulantSpec) -> Result<SymPolynomial, SymcertError> {
    let m = spec.m();
    check_cap(m)?;
    let mut phi = SymPolynomial::zero(CertVars { m }.count());
    for (lambda, c) in spec.coeffs() {
        if *c != 0 {
            let p = build_p_poly(lambda, m)?;
            phi = phi.add(&p.scale(&Rational::from_integer((*c).into())))?;
        }
    }
    Ok(phi)
}

/// Substitutes `u_i ← u_i + v_i` for every `i`.
pub fn shift_u_by_v(phi: &SymPolynomial, m: usize) -> Result<SymPolynomial, SymcertError> {
    let vars = CertVars { m };
    let mut out = phi.clone();
    for i in 1..=m {
        let q = vars.poly(vars.u(i)).add(&vars.poly(vars.v(i)))?;
        out = out.substitute(vars.u(i), &q)?;
    }
    Ok(out)
}

/// Outcome of a monomial-nonnegativity check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub label: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<CumulantSpec>,
    pub m: usize,
    pub pass: bool,
    pub monomial_count: usize,
    pub variables: Vec<String>,
    pub offending: Vec<CertTerm>,
    pub terms: Vec<CertTerm>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CertTerm {
    pub exponents: Vec<u16>,
    #[serde(with = "serde_rational")]
    pub coeff: Rational,
}

impl Certificate {
    fn from_expansion(
        label: String,
        spec: Option<CumulantSpec>,
        m: usize,
        variables: Vec<String>,
        expansion: &SymPolynomial,
    ) -> Self {
        let to_terms = |it: Vec<(Vec<u16>, Rational)>| {
            it.into_iter()
                .map(|(exponents, coeff)| CertTerm { exponents, coeff })
                .collect::<Vec<_>>()
        };
        let offending = to_terms(expansion.negative_terms());
        let terms = to_terms(
            expansion
                .terms()
                .rev()
                .map(|(m, c)| (m.0.clone(), c.clone()))
                .collect(),
        );
        Self {
            label,
            spec,
            m,
            pass: offending.is_empty(),
            monomial_count: terms.len(),
            variables,
            offending,
            terms,
        }
    }

    /// Canonical text block: a short header and one `[exponents]: coeff`
    /// line per monomial, highest graded-lex monomial first.
    pub fn text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("certificate: {}\n", self.label));
        out.push_str(&format!("variables: {}\n", self.variables.join(" ")));
        out.push_str(&format!("monomials: {}\n", self.monomial_count));
        out.push_str(&format!("offending: {}\n", self.offending.len()));
        out.push_str(&format!("result: {}\n", if self.pass { "PASS" } else { "FAIL" }));
        for t in &self.terms {
            let exps: Vec<String> = t.exponents.iter().map(u16::to_string).collect();
            out.push_str(&format!("[{}]: {}\n", exps.join(","), format_rational(&t.coeff)));
        }
        out
    }

    pub fn min_coefficient(&self) -> Option<&Rational> {
        self.terms.iter().map(|t| &t.coeff).min()
    }
}

/// Expands `Φ(u+v;v)` for the spec and checks every coefficient is `>= 0`.
pub fn certify(spec: &CumulantSpec) -> Result<Certificate, SymcertError> {
    let m = spec.m();
    let expansion = shift_u_by_v(&build_phi(spec)?, m)?;
    Ok(Certificate::from_expansion(
        format!("{} m={}", spec.kind(), m),
        Some(spec.clone()),
        m,
        CertVars { m }.names(),
        &expansion,
    ))
}

/// The expanded polynomial behind [`certify`].
pub fn shifted_phi(spec: &CumulantSpec) -> Result<SymPolynomial, SymcertError> {
    shift_u_by_v(&build_phi(spec)?, spec.m())
}

/// Values `f[j][k] = f_{j+1}(x_{k+1})` of three functions at three points.
pub type TripleValues = [[Rational; 3]; 3];

/// The duplicated-variables integrand
/// `I = 2 f1f2f3(x1) − [f1f2(x1)f3(x2) + f1f3(x1)f2(x2) + f2f3(x1)f1(x2)] + f1(x1)f2(x2)f3(x3)`.
pub fn i_integrand(f: &TripleValues) -> Rational {
    let two = Rational::from_integer(2.into());
    two * &f[0][0] * &f[1][0] * &f[2][0]
        - &f[0][0] * &f[1][0] * &f[2][1]
        - &f[0][0] * &f[1][1] * &f[2][0]
        - &f[0][1] * &f[1][0] * &f[2][0]
        + &f[0][0] * &f[1][1] * &f[2][2]
}

const S3: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// `J(x1,x2,x3) = Σ_{τ∈S3} I(τ·(x1,x2,x3))`.
pub fn j_integrand(f: &TripleValues) -> Rational {
    S3.iter()
        .map(|tau| {
            let permuted: TripleValues = std::array::from_fn(|j| std::array::from_fn(|k| f[j][tau[k]].clone()));
            i_integrand(&permuted)
        })
        .sum()
}

/// The twelve-term chamber decomposition of `J`, transcribed term by term.
pub fn j_chamber_form(f: &TripleValues) -> Rational {
    let d = |j: usize, hi: usize, lo: usize| &f[j][hi] - &f[j][lo];
    let (f1, f2, f3) = (&f[0], &f[1], &f[2]);
    &f3[0] * d(0, 2, 0) * d(1, 2, 0)
        + &f1[2] * d(1, 2, 0) * d(2, 2, 0)
        + &f2[0] * d(0, 2, 0) * d(2, 2, 0)
        + &f3[0] * d(0, 1, 0) * d(1, 1, 0)
        + &f1[1] * d(1, 1, 0) * d(2, 1, 0)
        + &f2[0] * d(0, 1, 0) * d(2, 1, 0)
        + &f1[2] * d(1, 2, 1) * d(2, 2, 1)
        + &f3[1] * d(0, 2, 1) * d(1, 2, 1)
        + &f2[2] * d(0, 2, 1) * d(2, 2, 1)
        + d(0, 2, 1) * d(1, 1, 0) * d(2, 2, 1)
        + d(0, 2, 0) * d(1, 2, 1) * d(2, 2, 1)
        + d(0, 2, 1) * d(1, 2, 1) * d(2, 1, 0)
}

/// Result of the duplicated-variables certificate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DuplicateCertificate {
    pub certificate: Certificate,
    /// Random assignments on which `J` and the twelve-term form were compared.
    pub comparisons: usize,
    pub chamber_form_agrees: bool,
}

/// Symbolic `J` over the nine values `f_j(x_k)`, variable `3j + k`.
pub fn j_polynomial() -> SymPolynomial {
    let n = 9;
    let var = |j: usize, k: usize| SymPolynomial::var(n, 3 * j + k);
    let i_poly = |tau: &[usize; 3]| {
        let f = |j: usize, k: usize| var(j, tau[k]);
        let mono = |a: SymPolynomial, b: SymPolynomial, c: SymPolynomial| {
            a.mul(&b).and_then(|ab| ab.mul(&c)).expect("same variable count")
        };
        let two = Rational::from_integer(2.into());
        let mut p = mono(f(0, 0), f(1, 0), f(2, 0)).scale(&two);
        for t in [
            mono(f(0, 0), f(1, 0), f(2, 1)),
            mono(f(0, 0), f(1, 1), f(2, 0)),
            mono(f(0, 1), f(1, 0), f(2, 0)),
        ] {
            p = p.sub(&t).expect("same variable count");
        }
        p.add(&mono(f(0, 0), f(1, 1), f(2, 2))).expect("same variable count")
    };
    S3.iter().fold(SymPolynomial::zero(n), |acc, tau| {
        acc.add(&i_poly(tau)).expect("same variable count")
    })
}

/// Names of the chamber variables: `v_j = f_j(x1)`, `d_j = f_j(x2) − f_j(x1)`,
/// `e_j = f_j(x3) − f_j(x2)`.
pub fn chamber_names() -> Vec<String> {
    let mut names: Vec<String> = (1..=3).map(|j| format!("v{j}")).collect();
    names.extend((1..=3).map(|j| format!("d{j}")));
    names.extend((1..=3).map(|j| format!("e{j}")));
    names
}

/// `J` rewritten in the increment basis `(v, d, e)`.
pub fn j_in_increment_basis() -> SymPolynomial {
    // The nine values sit at 0..9 and the basis variables at 9..18 while
    // substituting, so no step reads a variable it has already produced.
    let wide = 18;
    let x = |i| SymPolynomial::var(wide, i);
    let mut poly = SymPolynomial::zero(wide);
    for (mono, c) in j_polynomial().terms() {
        let mut e = mono.0.clone();
        e.resize(wide, 0);
        poly.add_term(Monomial(e), c.clone());
    }
    for j in 0..3 {
        let (v, d, e) = (x(9 + j), x(12 + j), x(15 + j));
        let vd = v.add(&d).expect("same variable count");
        let vde = vd.add(&e).expect("same variable count");
        for (k, at) in [v, vd, vde].iter().enumerate() {
            poly = poly.substitute(3 * j + k, at).expect("same variable count");
        }
    }
    let mut out = SymPolynomial::zero(9);
    for (mono, c) in poly.terms() {
        out.add_term(Monomial(mono.0[9..].to_vec()), c.clone());
    }
    out
}

/// Builds and checks the duplicated-variables certificate, cross-checking
/// `J` against the twelve-term chamber form on random rational points.
pub fn duplicate_variables_certify() -> DuplicateCertificate {
    let expansion = j_in_increment_basis();
    let certificate = Certificate::from_expansion(
        "duplicate variables J".to_string(),
        None,
        3,
        chamber_names(),
        &expansion,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(0x4a31);
    let comparisons = 100;
    let mut agrees = true;
    for _ in 0..comparisons {
        let f: TripleValues = std::array::from_fn(|_| {
            std::array::from_fn(|_| Rational::new(rng.gen_range(-20..=20).into(), rng.gen_range(1..=7).into()))
        });
        agrees &= j_integrand(&f) == j_chamber_form(&f);
    }
    DuplicateCertificate {
        certificate,
        comparisons,
        chamber_form_agrees: agrees,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn p(v: &[usize]) -> Partition {
        Partition::new(v.to_vec()).unwrap()
    }

    #[test]
    fn grlex_order() {
        let a = Monomial(vec![2, 0]);
        let b = Monomial(vec![0, 3]);
        let c = Monomial(vec![1, 1]);
        assert!(a < b);
        assert!(c < a);
    }

    #[test]
    fn arithmetic() {
        let x = SymPolynomial::var(2, 0);
        let y = SymPolynomial::var(2, 1);
        let s = x.add(&y).unwrap();
        let sq = s.pow(2);
        assert_eq!(sq.len(), 3);
        assert_eq!(sq.coefficient(&[1, 1]), int(2));
        assert!(s.sub(&s).unwrap().is_zero());
        let sub = sq.substitute(1, &x).unwrap();
        assert_eq!(sub.coefficient(&[2, 0]), int(4));
        assert_eq!(sq.evaluate(&[int(1), ratio(1, 2)]).unwrap(), ratio(9, 4));
        assert!(x.add(&SymPolynomial::var(3, 0)).is_err());
    }

    #[test]
    fn p_poly_top_partition() {
        let vars = CertVars { m: 3 };
        let n = vars.count();
        let v = |i| SymPolynomial::var(n, i);
        let w = v(0).add(&v(1)).unwrap().pow(2);
        let inner = v(0)
            .mul(&v(vars.u(1)))
            .unwrap()
            .mul(&v(vars.u(2)))
            .unwrap()
            .mul(&v(vars.u(3)))
            .unwrap()
            .add(&v(1).mul(&v(vars.v(1))).unwrap().mul(&v(vars.v(2))).unwrap().mul(&v(vars.v(3))).unwrap())
            .unwrap();
        assert_eq!(build_p_poly(&p(&[3]), 3).unwrap(), w.mul(&inner).unwrap());
        let mut prod = SymPolynomial::one(n);
        for i in 1..=3 {
            let f = v(0).mul(&v(vars.u(i))).unwrap().add(&v(1).mul(&v(vars.v(i))).unwrap()).unwrap();
            prod = prod.mul(&f).unwrap();
        }
        assert_eq!(build_p_poly(&p(&[1, 1, 1]), 3).unwrap(), prod);
        assert!(build_p_poly(&p(&[8]), 8).is_err());
        assert!(build_p_poly(&p(&[2]), 3).is_err());
    }

    #[test]
    fn m2_phi_closed_form() {
        let spec = CumulantSpec::conjugate(2).unwrap();
        let vars = CertVars { m: 2 };
        let n = vars.count();
        let v = |i| SymPolynomial::var(n, i);
        let expected = v(0)
            .mul(&v(1))
            .unwrap()
            .mul(&v(vars.u(1)).sub(&v(vars.v(1))).unwrap())
            .unwrap()
            .mul(&v(vars.u(2)).sub(&v(vars.v(2))).unwrap())
            .unwrap();
        assert_eq!(build_phi(&spec).unwrap(), expected);
        let cert = certify(&spec).unwrap();
        assert!(cert.pass);
        assert_eq!(cert.monomial_count, 1);
        assert_eq!(cert.terms[0].exponents, vec![1, 1, 1, 1, 0, 0]);
        assert_eq!(cert.terms[0].coeff, int(1));
    }

    #[test]
    fn m3_expansion_is_pinned() {
        let cert = certify(&CumulantSpec::conjugate(3).unwrap()).unwrap();
        let golden = "\
certificate: conjugate m=3
variables: w1 w2 u1 u2 u3 v1 v2 v3
monomials: 8
offending: 0
result: PASS
[2,1,1,1,1,0,0,0]: 1/1
[2,1,1,1,0,0,0,1]: 1/1
[2,1,1,0,1,0,1,0]: 1/1
[2,1,0,1,1,1,0,0]: 1/1
[1,2,1,1,1,0,0,0]: 2/1
[1,2,1,1,0,0,0,1]: 1/1
[1,2,1,0,1,0,1,0]: 1/1
[1,2,0,1,1,1,0,0]: 1/1
";
        assert_eq!(cert.text(), golden);
    }

    #[test]
    fn monomial_counts() {
        let counts: Vec<usize> = (2..=5)
            .map(|m| certify(&CumulantSpec::conjugate(m).unwrap()).unwrap().monomial_count)
            .collect();
        assert_eq!(counts, vec![1, 8, 33, 104]);
    }

    #[test]
    fn phi_on_diagonal_vanishes() {
        let spec = CumulantSpec::conjugate(4).unwrap();
        let phi = build_phi(&spec).unwrap();
        let vars = CertVars { m: 4 };
        let mut diag = phi.clone();
        for i in 1..=4 {
            diag = diag
                .substitute(vars.u(i), &SymPolynomial::var(vars.count(), vars.v(i)))
                .unwrap();
        }
        assert!(diag.is_zero());
    }

    #[test]
    fn j_identity_and_chamber() {
        let dup = duplicate_variables_certify();
        assert!(dup.certificate.pass);
        assert_eq!(dup.certificate.monomial_count, 20);
        assert!(dup.chamber_form_agrees);
    }
}
