//! Exact scalars: reduced rationals, half-integers, Gaussian rationals and
//! the radical field `Q(i, √2, √3, √5, …)` in which every Haar integral of
//! matrix-element products lives.
//!
//! A [`RadicalScalar`] is stored as two canonical maps `radicand → coefficient`
//! (real and imaginary part). Square roots of distinct squarefree integers are
//! linearly independent over the rationals, so a value is zero exactly when
//! both maps are empty and equality is map equality.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_complex::{Complex, Complex64};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{json, Value};

use crate::error::{Error, Result};

pub type Rational = BigRational;

/// Complex number with rational real and imaginary parts.
pub type GaussRational = Complex<Rational>;

pub fn rational(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn gauss(re: Rational, im: Rational) -> GaussRational {
    Complex::new(re, im)
}

/// Formats a rational the way every JSON surface expects it: `"p/q"` or `"p"`.
pub fn rational_to_string(q: &Rational) -> String {
    q.to_string()
}

pub fn parse_rational(s: &str) -> Result<Rational> {
    let t = s.trim();
    let q = match t.split_once('/') {
        Some((p, d)) => {
            let p = BigInt::from_str(p.trim())
                .map_err(|_| Error::InvalidArgument(format!("bad rational {s:?}")))?;
            let d = BigInt::from_str(d.trim())
                .map_err(|_| Error::InvalidArgument(format!("bad rational {s:?}")))?;
            if d.is_zero() {
                return Err(Error::InvalidArgument(format!("zero denominator in {s:?}")));
            }
            Rational::new(p, d)
        }
        None => Rational::from_integer(
            BigInt::from_str(t).map_err(|_| Error::InvalidArgument(format!("bad rational {s:?}")))?,
        ),
    };
    Ok(q)
}

pub fn rational_to_f64(q: &Rational) -> f64 {
    match (q.numer().to_f64(), q.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            // Very large numerator/denominator: scale down by shared bit shifts.
            let shift = q.denom().bits().max(q.numer().bits()).saturating_sub(1000);
            let n = (q.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let d = (q.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            n / d
        }
    }
}

/// A value in `½ℤ`, stored as twice its value.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct HalfInt {
    twice: BigInt,
}

impl HalfInt {
    pub fn from_twice(twice: impl Into<BigInt>) -> Self {
        HalfInt {
            twice: twice.into(),
        }
    }

    pub fn from_integer(value: impl Into<BigInt>) -> Self {
        HalfInt {
            twice: value.into() * 2,
        }
    }

    pub fn zero() -> Self {
        HalfInt::default()
    }

    pub fn half() -> Self {
        HalfInt::from_twice(1)
    }

    pub fn twice(&self) -> &BigInt {
        &self.twice
    }

    pub fn twice_i64(&self) -> Option<i64> {
        self.twice.to_i64()
    }

    pub fn is_zero(&self) -> bool {
        self.twice.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.twice.is_even()
    }

    pub fn is_negative(&self) -> bool {
        self.twice.is_negative()
    }

    pub fn abs(&self) -> HalfInt {
        HalfInt::from_twice(self.twice.abs())
    }

    pub fn to_rational(&self) -> Rational {
        Rational::new(self.twice.clone(), BigInt::from(2))
    }

    pub fn to_f64(&self) -> f64 {
        self.twice.to_f64().unwrap_or(f64::NAN) / 2.0
    }

    /// Integer value, if this is an integer.
    pub fn to_integer(&self) -> Option<BigInt> {
        self.is_integer().then(|| &self.twice / 2)
    }

    pub fn scale(&self, k: impl Into<BigInt>) -> HalfInt {
        HalfInt::from_twice(&self.twice * k.into())
    }
}

impl Add<&HalfInt> for &HalfInt {
    type Output = HalfInt;
    fn add(self, rhs: &HalfInt) -> HalfInt {
        HalfInt::from_twice(&self.twice + &rhs.twice)
    }
}

impl Sub<&HalfInt> for &HalfInt {
    type Output = HalfInt;
    fn sub(self, rhs: &HalfInt) -> HalfInt {
        HalfInt::from_twice(&self.twice - &rhs.twice)
    }
}

impl Neg for &HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt::from_twice(-&self.twice)
    }
}

impl Neg for HalfInt {
    type Output = HalfInt;
    fn neg(self) -> HalfInt {
        HalfInt::from_twice(-self.twice)
    }
}

impl fmt::Display for HalfInt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_integer() {
            write!(f, "{}", &self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

impl FromStr for HalfInt {
    type Err = Error;

    /// Accepts `"k"` and `"k/2"`; anything whose value is outside `½ℤ` is rejected.
    fn from_str(s: &str) -> Result<Self> {
        let q = parse_rational(s)?;
        let twice = q * Rational::from_integer(BigInt::from(2));
        if !twice.is_integer() {
            return Err(Error::InvalidArgument(format!("{s:?} is not a half-integer")));
        }
        Ok(HalfInt::from_twice(twice.to_integer()))
    }
}

impl Serialize for HalfInt {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for HalfInt {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Splits `radicand` into `k²·r` with `r` squarefree by trial division.
fn squarefree_split(radicand: &BigUint) -> (BigUint, BigUint) {
    if let Some(mut rest) = radicand.to_u64() {
        let mut square_root = 1u64;
        let mut free = 1u64;
        let mut p = 2u64;
        while p.saturating_mul(p) <= rest {
            let mut e = 0u32;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            square_root *= p.pow(e / 2);
            if e % 2 == 1 {
                free *= p;
            }
            p += if p == 2 { 1 } else { 2 };
        }
        return (BigUint::from(square_root), BigUint::from(free) * BigUint::from(rest));
    }
    let mut rest = radicand.clone();
    let mut square_root = BigUint::one();
    let mut free = BigUint::one();
    let mut p = BigUint::from(2u32);
    while &p * &p <= rest {
        let mut e = 0u32;
        while (&rest % &p).is_zero() {
            rest /= &p;
            e += 1;
        }
        square_root *= p.pow(e / 2);
        if e % 2 == 1 {
            free *= &p;
        }
        p += 1u32;
    }
    (square_root, free * rest)
}

/// Rewrites `coeff·√radicand` as `(coeff·k)·√r` with `radicand = k²·r`, `r` squarefree.
pub fn radical_normalize(coeff: &Rational, radicand: &BigInt) -> Result<(Rational, BigUint)> {
    if radicand.sign() != Sign::Plus {
        return Err(Error::InvalidArgument(format!(
            "radicand must be a positive integer, got {radicand}"
        )));
    }
    let (k, r) = squarefree_split(radicand.magnitude());
    Ok((coeff * Rational::from_integer(BigInt::from(k)), r))
}

type RadicalMap = BTreeMap<BigUint, Rational>;

fn map_add_into(acc: &mut RadicalMap, radicand: &BigUint, coeff: &Rational) {
    if coeff.is_zero() {
        return;
    }
    match acc.get_mut(radicand) {
        Some(c) => {
            *c += coeff;
            if c.is_zero() {
                acc.remove(radicand);
            }
        }
        None => {
            acc.insert(radicand.clone(), coeff.clone());
        }
    }
}

fn map_merge(a: &RadicalMap, b: &RadicalMap, negate_b: bool) -> RadicalMap {
    let mut out = a.clone();
    for (r, q) in b {
        if negate_b {
            map_add_into(&mut out, r, &-q);
        } else {
            map_add_into(&mut out, r, q);
        }
    }
    out
}

/// Product of two real radical sums. `√r₁·√r₂ = g·√((r₁/g)(r₂/g))` with
/// `g = gcd(r₁, r₂)`; for squarefree inputs the remaining radicand is squarefree.
fn map_mul(a: &RadicalMap, b: &RadicalMap) -> RadicalMap {
    let mut out = RadicalMap::new();
    for (r1, q1) in a {
        for (r2, q2) in b {
            let g = r1.gcd(r2);
            let radicand = (r1 / &g) * (r2 / &g);
            let coeff = q1 * q2 * Rational::from_integer(BigInt::from(g));
            map_add_into(&mut out, &radicand, &coeff);
        }
    }
    out
}

fn map_scale(a: &RadicalMap, q: &Rational) -> RadicalMap {
    if q.is_zero() {
        return RadicalMap::new();
    }
    a.iter().map(|(r, c)| (r.clone(), c * q)).collect()
}

fn map_to_f64(a: &RadicalMap) -> f64 {
    a.iter()
        .map(|(r, q)| rational_to_f64(q) * r.to_f64().unwrap_or(f64::NAN).sqrt())
        .sum()
}

/// Exact complex number `Σ qⱼ√Nⱼ + i·Σ q'ⱼ√N'ⱼ`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RadicalScalar {
    real: RadicalMap,
    imag: RadicalMap,
}

impl RadicalScalar {
    pub fn zero() -> Self {
        RadicalScalar::default()
    }

    pub fn one() -> Self {
        RadicalScalar::from_rational(Rational::one())
    }

    pub fn i() -> Self {
        let mut imag = RadicalMap::new();
        imag.insert(BigUint::one(), Rational::one());
        RadicalScalar {
            real: RadicalMap::new(),
            imag,
        }
    }

    pub fn from_rational(q: Rational) -> Self {
        let mut real = RadicalMap::new();
        if !q.is_zero() {
            real.insert(BigUint::one(), q);
        }
        RadicalScalar {
            real,
            imag: RadicalMap::new(),
        }
    }

    pub fn from_gauss(z: &GaussRational) -> Self {
        let mut out = RadicalScalar::from_rational(z.re.clone());
        if !z.im.is_zero() {
            out.imag.insert(BigUint::one(), z.im.clone());
        }
        out
    }

    /// `coeff·√radicand`, normalized.
    pub fn term(coeff: Rational, radicand: impl Into<BigInt>) -> Result<Self> {
        let (c, r) = radical_normalize(&coeff, &radicand.into())?;
        let mut real = RadicalMap::new();
        if !c.is_zero() {
            real.insert(r, c);
        }
        Ok(RadicalScalar {
            real,
            imag: RadicalMap::new(),
        })
    }

    /// `√n` for a positive integer `n`.
    pub fn sqrt(n: impl Into<BigInt>) -> Result<Self> {
        RadicalScalar::term(Rational::one(), n)
    }

    /// Builds a value from raw `(radicand, coeff)` lists, normalizing each radicand
    /// and merging equal ones.
    pub fn from_terms(real: &[(BigInt, Rational)], imag: &[(BigInt, Rational)]) -> Result<Self> {
        let mut out = RadicalScalar::zero();
        for (r, q) in real {
            let (c, r) = radical_normalize(q, r)?;
            map_add_into(&mut out.real, &r, &c);
        }
        for (r, q) in imag {
            let (c, r) = radical_normalize(q, r)?;
            map_add_into(&mut out.imag, &r, &c);
        }
        Ok(out)
    }

    pub fn real_terms(&self) -> impl Iterator<Item = (&BigUint, &Rational)> {
        self.real.iter()
    }

    pub fn imag_terms(&self) -> impl Iterator<Item = (&BigUint, &Rational)> {
        self.imag.iter()
    }

    pub fn is_zero(&self) -> bool {
        self.real.is_empty() && self.imag.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.imag.is_empty()
    }

    /// The value as a rational, when it has no radical or imaginary part.
    pub fn as_rational(&self) -> Option<Rational> {
        if !self.imag.is_empty() {
            return None;
        }
        match self.real.len() {
            0 => Some(Rational::zero()),
            1 => self.real.get(&BigUint::one()).cloned(),
            _ => None,
        }
    }

    pub fn conj(&self) -> Self {
        RadicalScalar {
            real: self.real.clone(),
            imag: map_scale(&self.imag, &-Rational::one()),
        }
    }

    pub fn scale_rational(&self, q: &Rational) -> Self {
        RadicalScalar {
            real: map_scale(&self.real, q),
            imag: map_scale(&self.imag, q),
        }
    }

    pub fn scale_gauss(&self, z: &GaussRational) -> Self {
        // (a + ib)(R + iI) = (aR − bI) + i(aI + bR)
        let real = map_merge(&map_scale(&self.real, &z.re), &map_scale(&self.imag, &z.im), true);
        let imag = map_merge(&map_scale(&self.imag, &z.re), &map_scale(&self.real, &z.im), false);
        RadicalScalar { real, imag }
    }

    pub fn pow(&self, mut exp: u32) -> Self {
        let mut base = self.clone();
        let mut acc = RadicalScalar::one();
        while exp > 0 {
            if exp & 1 == 1 {
                acc = &acc * &base;
            }
            exp >>= 1;
            if exp > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn to_complex64(&self) -> Complex64 {
        Complex64::new(map_to_f64(&self.real), map_to_f64(&self.imag))
    }

    pub fn to_json(&self) -> Value {
        fn side(map: &RadicalMap) -> Value {
            Value::Array(
                map.iter()
                    .map(|(r, q)| {
                        let radicand = match r.to_u64() {
                            Some(v) => json!(v),
                            None => json!(r.to_string()),
                        };
                        json!({"radicand": radicand, "coeff": rational_to_string(q)})
                    })
                    .collect(),
            )
        }
        json!({"real": side(&self.real), "imag": side(&self.imag)})
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        fn side(value: Option<&Value>, name: &str) -> Result<Vec<(BigInt, Rational)>> {
            let Some(value) = value else {
                return Ok(Vec::new());
            };
            let items = value
                .as_array()
                .ok_or_else(|| Error::parse(name, "expected an array"))?;
            items
                .iter()
                .enumerate()
                .map(|(i, item)| {
                    let field = format!("{name}[{i}]");
                    let radicand = match item.get("radicand") {
                        Some(Value::Number(n)) => n
                            .as_u64()
                            .map(BigInt::from)
                            .ok_or_else(|| Error::parse(format!("{field}.radicand"), "not a positive integer"))?,
                        Some(Value::String(s)) => BigInt::from_str(s)
                            .map_err(|_| Error::parse(format!("{field}.radicand"), "not an integer"))?,
                        _ => return Err(Error::parse(format!("{field}.radicand"), "missing")),
                    };
                    let coeff = item
                        .get("coeff")
                        .and_then(Value::as_str)
                        .ok_or_else(|| Error::parse(format!("{field}.coeff"), "missing"))?;
                    let coeff = parse_rational(coeff)
                        .map_err(|e| Error::parse(format!("{field}.coeff"), e.to_string()))?;
                    Ok((radicand, coeff))
                })
                .collect()
        }
        let real = side(value.get("real"), "real")?;
        let imag = side(value.get("imag"), "imag")?;
        RadicalScalar::from_terms(&real, &imag)
    }
}

impl From<Rational> for RadicalScalar {
    fn from(q: Rational) -> Self {
        RadicalScalar::from_rational(q)
    }
}

impl Add<&RadicalScalar> for &RadicalScalar {
    type Output = RadicalScalar;
    fn add(self, rhs: &RadicalScalar) -> RadicalScalar {
        RadicalScalar {
            real: map_merge(&self.real, &rhs.real, false),
            imag: map_merge(&self.imag, &rhs.imag, false),
        }
    }
}

impl Add for RadicalScalar {
    type Output = RadicalScalar;
    fn add(self, rhs: RadicalScalar) -> RadicalScalar {
        &self + &rhs
    }
}

impl AddAssign<&RadicalScalar> for RadicalScalar {
    fn add_assign(&mut self, rhs: &RadicalScalar) {
        for (r, q) in &rhs.real {
            map_add_into(&mut self.real, r, q);
        }
        for (r, q) in &rhs.imag {
            map_add_into(&mut self.imag, r, q);
        }
    }
}

impl Sub<&RadicalScalar> for &RadicalScalar {
    type Output = RadicalScalar;
    fn sub(self, rhs: &RadicalScalar) -> RadicalScalar {
        RadicalScalar {
            real: map_merge(&self.real, &rhs.real, true),
            imag: map_merge(&self.imag, &rhs.imag, true),
        }
    }
}

impl Sub for RadicalScalar {
    type Output = RadicalScalar;
    fn sub(self, rhs: RadicalScalar) -> RadicalScalar {
        &self - &rhs
    }
}

impl Neg for &RadicalScalar {
    type Output = RadicalScalar;
    fn neg(self) -> RadicalScalar {
        self.scale_rational(&-Rational::one())
    }
}

impl Mul<&RadicalScalar> for &RadicalScalar {
    type Output = RadicalScalar;
    fn mul(self, rhs: &RadicalScalar) -> RadicalScalar {
        let real = map_merge(&map_mul(&self.real, &rhs.real), &map_mul(&self.imag, &rhs.imag), true);
        let imag = map_merge(&map_mul(&self.real, &rhs.imag), &map_mul(&self.imag, &rhs.real), false);
        RadicalScalar { real, imag }
    }
}

impl Mul for RadicalScalar {
    type Output = RadicalScalar;
    fn mul(self, rhs: RadicalScalar) -> RadicalScalar {
        &self * &rhs
    }
}

impl fmt::Display for RadicalScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn side(map: &RadicalMap) -> String {
            map.iter()
                .map(|(r, q)| {
                    if r.is_one() {
                        q.to_string()
                    } else {
                        format!("{q}*sqrt({r})")
                    }
                })
                .collect::<Vec<_>>()
                .join(" + ")
        }
        match (self.real.is_empty(), self.imag.is_empty()) {
            (true, true) => write!(f, "0"),
            (false, true) => write!(f, "{}", side(&self.real)),
            (true, false) => write!(f, "i*({})", side(&self.imag)),
            (false, false) => write!(f, "{} + i*({})", side(&self.real), side(&self.imag)),
        }
    }
}

impl Serialize for RadicalScalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RadicalScalar {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        RadicalScalar::from_json(&value).map_err(serde::de::Error::custom)
    }
}
