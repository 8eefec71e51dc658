//! Matrix elements `t^ℓ_{m,n}` restricted to the rotation subgroup `a(θ)`,
//! expanded exactly in `c = cos(θ/2)` and `s = sin(θ/2)`.
//!
//! Phase convention: `t^ℓ_{m,n}(a(θ)) = i^{n−m}·d^ℓ_{m,n}(θ)` with the standard
//! real Wigner d-function
//!
//! ```text
//! d^ℓ_{m,n} = Σ_k (−1)^{m−n+k} √[(ℓ+m)!(ℓ−m)!(ℓ+n)!(ℓ−n)!]
//!             / [(ℓ+n−k)! k! (m−n+k)! (ℓ−m−k)!] · c^{2ℓ+n−m−2k} s^{m−n+2k}
//! ```
//!
//! For ℓ = ½ this reproduces `a(θ) = [[c, i s], [i s, c]]` with row `m = +½` first.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::scalar::{HalfInt, RadicalScalar, Rational};

/// Largest `2ℓ` accepted by [`MatrixElementIndex::new`]; expansions allocate `2ℓ+1` terms.
pub const MAX_TWICE_SPIN: i64 = 4096;

/// Label `(ℓ, m, n)` of the matrix element `t^ℓ_{m,n}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MatrixElementIndex {
    l: HalfInt,
    m: HalfInt,
    n: HalfInt,
}

impl MatrixElementIndex {
    pub fn new(l: HalfInt, m: HalfInt, n: HalfInt) -> Result<Self> {
        if l.is_negative() {
            return Err(Error::InvalidArgument(format!("spin {l} is negative")));
        }
        if l.twice_i64().is_none_or(|t| t > MAX_TWICE_SPIN) {
            return Err(Error::InvalidArgument(format!(
                "spin {l} exceeds the supported maximum {}",
                HalfInt::from_twice(MAX_TWICE_SPIN)
            )));
        }
        if m.abs() > l || n.abs() > l {
            return Err(Error::InvalidArgument(format!(
                "need |m|, |n| <= l, got (l, m, n) = ({l}, {m}, {n})"
            )));
        }
        if !(&l - &m).is_integer() || !(&l - &n).is_integer() {
            return Err(Error::InvalidArgument(format!(
                "l - m and l - n must be integers, got (l, m, n) = ({l}, {m}, {n})"
            )));
        }
        Ok(MatrixElementIndex { l, m, n })
    }

    /// Convenience constructor from `(2ℓ, 2m, 2n)`.
    pub fn from_twice(l: i64, m: i64, n: i64) -> Result<Self> {
        MatrixElementIndex::new(HalfInt::from_twice(l), HalfInt::from_twice(m), HalfInt::from_twice(n))
    }

    pub fn l(&self) -> &HalfInt {
        &self.l
    }

    pub fn m(&self) -> &HalfInt {
        &self.m
    }

    pub fn n(&self) -> &HalfInt {
        &self.n
    }

    /// The K-weight point `(m, n)`.
    pub fn weight(&self) -> (HalfInt, HalfInt) {
        (self.m.clone(), self.n.clone())
    }

    /// `(2ℓ, 2m, 2n)`; always fits because of [`MAX_TWICE_SPIN`].
    pub fn twice(&self) -> (i64, i64, i64) {
        let t = |h: &HalfInt| h.twice_i64().expect("validated index fits in i64");
        (t(&self.l), t(&self.m), t(&self.n))
    }

    /// `(ℓ, −m, −n)`, the partner appearing in the conjugation identity.
    pub fn reflected(&self) -> Self {
        MatrixElementIndex {
            l: self.l.clone(),
            m: -&self.m,
            n: -&self.n,
        }
    }

    /// All `(2ℓ+1)²` indices of spin `l`, with `m` and `n` running from `ℓ` down to `−ℓ`.
    pub fn all_of_spin(l: &HalfInt) -> Vec<Self> {
        let Some(t) = l.twice_i64() else {
            return Vec::new();
        };
        let mut out = Vec::new();
        for m in (-t..=t).rev().step_by(2) {
            for n in (-t..=t).rev().step_by(2) {
                if let Ok(idx) = MatrixElementIndex::from_twice(t, m, n) {
                    out.push(idx);
                }
            }
        }
        out
    }

    /// Every index with spin `0, ½, …, l_max`.
    pub fn all_up_to(l_max: &HalfInt) -> Vec<Self> {
        let t = l_max.twice_i64().unwrap_or(-1);
        (0..=t)
            .flat_map(|l| MatrixElementIndex::all_of_spin(&HalfInt::from_twice(l)))
            .collect()
    }
}

impl fmt::Display for MatrixElementIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t^{}_{{{},{}}}", self.l, self.m, self.n)
    }
}

/// Homogeneous polynomial `Σ_s coeffs[s]/denom · c^{degree−s} s^s` with integer
/// coefficients. This is the fast inner representation used by the integrator.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomogeneousPoly {
    coeffs: Vec<BigInt>,
    denom: BigInt,
}

impl HomogeneousPoly {
    pub fn one() -> Self {
        HomogeneousPoly {
            coeffs: vec![BigInt::one()],
            denom: BigInt::one(),
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Integer coefficient of `c^{degree−s} s^s`.
    pub fn coeff(&self, s_exp: usize) -> &BigInt {
        &self.coeffs[s_exp]
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn denom(&self) -> &BigInt {
        &self.denom
    }

    pub fn mul(&self, other: &HomogeneousPoly) -> HomogeneousPoly {
        let mut coeffs = vec![BigInt::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                if !b.is_zero() {
                    coeffs[i + j] += a * b;
                }
            }
        }
        HomogeneousPoly {
            coeffs,
            denom: &self.denom * &other.denom,
        }
    }

    pub fn pow(&self, mut exp: u32) -> HomogeneousPoly {
        let mut base = self.clone();
        let mut acc = HomogeneousPoly::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc.mul(&base);
            }
            exp >>= 1;
            if exp > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }
}

/// A matrix element on `a(θ)`, factored as `prefactor · poly(c, s)` where the
/// prefactor `i^{n−m}·√[(ℓ+m)!(ℓ−m)!(ℓ+n)!(ℓ−n)!]` carries phase and radical.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementExpansion {
    pub prefactor: RadicalScalar,
    pub poly: HomogeneousPoly,
}

fn factorial(n: i64) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn i_power(exp: i64) -> RadicalScalar {
    match exp.rem_euclid(4) {
        0 => RadicalScalar::one(),
        1 => RadicalScalar::i(),
        2 => -&RadicalScalar::one(),
        _ => -&RadicalScalar::i(),
    }
}

fn build_expansion(idx: &MatrixElementIndex) -> ElementExpansion {
    let (l2, m2, n2) = idx.twice();
    // All of these are integers by the index invariants.
    let lpm = (l2 + m2) / 2;
    let lmm = (l2 - m2) / 2;
    let lpn = (l2 + n2) / 2;
    let lmn = (l2 - n2) / 2;
    let m_minus_n = (m2 - n2) / 2;

    let radicand = factorial(lpm) * factorial(lmm) * factorial(lpn) * factorial(lmn);
    let root = RadicalScalar::sqrt(radicand).expect("factorial product is positive");
    let prefactor = &i_power(-m_minus_n) * &root;

    // Each denominator (ℓ+n−k)! k! (m−n+k)! (ℓ−m−k)! divides (2ℓ)!, so
    // coefficients are signed multinomials over the common denominator (2ℓ)!.
    let two_l_fact = factorial(l2);
    let mut coeffs = vec![BigInt::zero(); l2 as usize + 1];
    let k_min = 0.max(-m_minus_n);
    let k_max = lpn.min(lmm);
    for k in k_min..=k_max {
        let denom = factorial(lpn - k) * factorial(k) * factorial(m_minus_n + k) * factorial(lmm - k);
        let mut c = &two_l_fact / denom;
        if (m_minus_n + k).rem_euclid(2) == 1 {
            c = -c;
        }
        let s_exp = (m_minus_n + 2 * k) as usize;
        coeffs[s_exp] += c;
    }
    ElementExpansion {
        prefactor,
        poly: HomogeneousPoly {
            coeffs,
            denom: two_l_fact,
        },
    }
}

fn expansion_cache() -> &'static RwLock<HashMap<MatrixElementIndex, Arc<ElementExpansion>>> {
    static CACHE: OnceLock<RwLock<HashMap<MatrixElementIndex, Arc<ElementExpansion>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Factored expansion of `t^ℓ_{m,n}(a(θ))`, memoized process-wide.
pub fn element_expansion(idx: &MatrixElementIndex) -> Arc<ElementExpansion> {
    if let Some(hit) = expansion_cache().read().expect("cache lock").get(idx) {
        return Arc::clone(hit);
    }
    let built = Arc::new(build_expansion(idx));
    let mut cache = expansion_cache().write().expect("cache lock");
    Arc::clone(cache.entry(idx.clone()).or_insert(built))
}

/// Polynomial in `c = cos(θ/2)`, `s = sin(θ/2)` with exact radical coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TrigPolynomial {
    terms: BTreeMap<(usize, usize), RadicalScalar>,
}

impl TrigPolynomial {
    pub fn zero() -> Self {
        TrigPolynomial::default()
    }

    pub fn one() -> Self {
        TrigPolynomial::monomial(0, 0, RadicalScalar::one())
    }

    pub fn monomial(c_exp: usize, s_exp: usize, coeff: RadicalScalar) -> Self {
        let mut p = TrigPolynomial::zero();
        p.add_term(c_exp, s_exp, &coeff);
        p
    }

    fn add_term(&mut self, c_exp: usize, s_exp: usize, coeff: &RadicalScalar) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry((c_exp, s_exp)).or_default();
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&(c_exp, s_exp));
        }
    }

    /// Terms keyed by `(c_exponent, s_exponent)`.
    pub fn terms(&self) -> &BTreeMap<(usize, usize), RadicalScalar> {
        &self.terms
    }

    pub fn coeff(&self, c_exp: usize, s_exp: usize) -> RadicalScalar {
        self.terms.get(&(c_exp, s_exp)).cloned().unwrap_or_default()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add(&self, other: &TrigPolynomial) -> TrigPolynomial {
        let mut out = self.clone();
        for (&(c, s), q) in &other.terms {
            out.add_term(c, s, q);
        }
        out
    }

    pub fn sub(&self, other: &TrigPolynomial) -> TrigPolynomial {
        let mut out = self.clone();
        for (&(c, s), q) in &other.terms {
            out.add_term(c, s, &-q);
        }
        out
    }

    pub fn mul(&self, other: &TrigPolynomial) -> TrigPolynomial {
        let mut out = TrigPolynomial::zero();
        for (&(c1, s1), q1) in &self.terms {
            for (&(c2, s2), q2) in &other.terms {
                out.add_term(c1 + c2, s1 + s2, &(q1 * q2));
            }
        }
        out
    }

    pub fn pow(&self, exp: u32) -> TrigPolynomial {
        (0..exp).fold(TrigPolynomial::one(), |acc, _| acc.mul(self))
    }

    pub fn scale(&self, k: &RadicalScalar) -> TrigPolynomial {
        let mut out = TrigPolynomial::zero();
        for (&(c, s), q) in &self.terms {
            out.add_term(c, s, &(q * k));
        }
        out
    }

    /// Complex conjugate for real `θ`: conjugates every coefficient.
    pub fn conj(&self) -> TrigPolynomial {
        TrigPolynomial {
            terms: self.terms.iter().map(|(&k, q)| (k, q.conj())).collect(),
        }
    }

    /// Rewrites every `s^{2j}` as `(1 − c²)^j`, leaving a polynomial in `c` alone.
    pub fn reduce_s_squared(&self) -> Result<TrigPolynomial> {
        let one_minus_c2 = TrigPolynomial::one().sub(&TrigPolynomial::monomial(2, 0, RadicalScalar::one()));
        let mut out = TrigPolynomial::zero();
        for (&(c, s), q) in &self.terms {
            if s % 2 == 1 {
                return Err(Error::InvalidArgument(format!(
                    "monomial c^{c} s^{s} has an odd s-exponent"
                )));
            }
            let piece = one_minus_c2.pow((s / 2) as u32).mul(&TrigPolynomial::monomial(c, 0, q.clone()));
            out = out.add(&piece);
        }
        Ok(out)
    }

    pub fn eval(&self, c: f64, s: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|(&(ce, se), q)| q.to_complex64() * c.powi(ce as i32) * s.powi(se as i32))
            .sum()
    }

    pub fn to_json(&self) -> Value {
        Value::Array(
            self.terms
                .iter()
                .map(|(&(c, s), q)| json!({"c_exp": c, "s_exp": s, "coeff": q.to_json()}))
                .collect(),
        )
    }
}

/// Exact `t^ℓ_{m,n}(a(θ))` as a polynomial in `(c, s)`.
pub fn matrix_element_trigpoly(idx: &MatrixElementIndex) -> TrigPolynomial {
    let exp = element_expansion(idx);
    let degree = exp.poly.degree();
    let mut out = TrigPolynomial::zero();
    for (s, k) in exp.poly.coeffs().iter().enumerate() {
        if k.is_zero() {
            continue;
        }
        let q = Rational::new(k.clone(), exp.poly.denom().clone());
        out.add_term(degree - s, s, &exp.prefactor.scale_rational(&q));
    }
    out
}

/// Dense univariate polynomial with rational coefficients, lowest degree first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RationalPolynomial {
    coeffs: Vec<Rational>,
}

impl RationalPolynomial {
    pub fn new(mut coeffs: Vec<Rational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        RationalPolynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + crate::scalar::rational_to_f64(c))
    }
}

/// Legendre polynomial `P_ℓ` with `P_ℓ(1) = 1`, via
/// `(k+1)P_{k+1} = (2k+1)xP_k − kP_{k−1}`.
pub fn legendre_poly(l: &HalfInt) -> Result<RationalPolynomial> {
    let degree = l
        .to_integer()
        .ok_or_else(|| Error::InvalidArgument(format!("Legendre degree {l} is not an integer")))?;
    if degree.is_negative() {
        return Err(Error::InvalidArgument(format!("Legendre degree {l} is negative")));
    }
    let degree = degree
        .to_usize()
        .ok_or_else(|| Error::InvalidArgument(format!("Legendre degree {l} is too large")))?;
    let mut prev: Vec<Rational> = vec![Rational::one()];
    if degree == 0 {
        return Ok(RationalPolynomial::new(prev));
    }
    let mut cur: Vec<Rational> = vec![Rational::zero(), Rational::one()];
    for k in 1..degree {
        let kk = Rational::from_integer(BigInt::from(k));
        let mut next = vec![Rational::zero(); k + 2];
        for (j, c) in cur.iter().enumerate() {
            next[j + 1] += c * (&kk + &kk + Rational::one());
        }
        for (j, c) in prev.iter().enumerate() {
            next[j] -= c * &kk;
        }
        let scale = Rational::one() / (&kk + Rational::one());
        for c in &mut next {
            *c *= &scale;
        }
        prev = cur;
        cur = next;
    }
    Ok(RationalPolynomial::new(cur))
}
