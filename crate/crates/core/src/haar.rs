//! Exact Haar integrals over SU(2) of products of matrix elements.
//!
//! In Euler angles the integrand of `∏ (t^{ℓᵢ}_{mᵢ,nᵢ})^{αᵢ}` picks up
//! `e^{−iΦφ}·e^{−iΨψ}` with `Φ = Σαᵢmᵢ`, `Ψ = Σαᵢnᵢ`. Unless `Φ = Ψ = 0` the
//! φ- or ψ-integral kills it (ψ runs over a 4π range, which also handles
//! half-integer frequencies). A surviving integrand is a polynomial in
//! `c = cos(θ/2)`, `s = sin(θ/2)`, integrated in closed form:
//!
//! ```text
//! ∫₀^π c^a s^b sin θ dθ = 2·(a/2)!·(b/2)! / ((a+b)/2 + 1)!
//! ```
//!
//! The `1/16π²`, `2π` and `4π` factors fold into a prefactor of `½`.

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::{HalfInt, RadicalScalar, Rational};
use crate::wigner::{element_expansion, HomogeneousPoly, MatrixElementIndex};

/// A product `∏ (t^{ℓᵢ}_{mᵢ,nᵢ})^{αᵢ}`: sorted by index, duplicates merged,
/// zero powers dropped.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ProductSpec {
    factors: Vec<(MatrixElementIndex, u32)>,
}

impl ProductSpec {
    pub fn new(factors: impl IntoIterator<Item = (MatrixElementIndex, u32)>) -> Self {
        let mut merged: Vec<(MatrixElementIndex, u32)> = Vec::new();
        let mut all: Vec<_> = factors.into_iter().filter(|(_, p)| *p > 0).collect();
        all.sort_by(|a, b| a.0.cmp(&b.0));
        for (idx, p) in all {
            match merged.last_mut() {
                Some((last, q)) if *last == idx => *q += p,
                _ => merged.push((idx, p)),
            }
        }
        ProductSpec { factors: merged }
    }

    pub fn single(idx: MatrixElementIndex) -> Self {
        ProductSpec::new([(idx, 1)])
    }

    pub fn factors(&self) -> &[(MatrixElementIndex, u32)] {
        &self.factors
    }

    pub fn is_empty(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn with_factor(&self, idx: &MatrixElementIndex) -> Self {
        ProductSpec::new(self.factors.iter().cloned().chain([(idx.clone(), 1)]))
    }

    /// Total degree `Σ 2ℓᵢαᵢ` in `(c, s)`.
    pub fn degree(&self) -> u64 {
        self.factors
            .iter()
            .map(|(idx, p)| idx.twice().0 as u64 * *p as u64)
            .sum()
    }
}

/// `(Σαᵢmᵢ, Σαᵢnᵢ)`, the K-characters of a product on the left and right.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FrequencyPair {
    pub phi: HalfInt,
    pub psi: HalfInt,
}

impl FrequencyPair {
    pub fn is_zero(&self) -> bool {
        self.phi.is_zero() && self.psi.is_zero()
    }
}

pub fn frequency_of(spec: &ProductSpec, shift: Option<&MatrixElementIndex>) -> FrequencyPair {
    let mut phi = BigInt::zero();
    let mut psi = BigInt::zero();
    for (idx, p) in spec.factors().iter().map(|(i, p)| (i, *p)).chain(shift.map(|s| (s, 1))) {
        phi += idx.m().twice() * p;
        psi += idx.n().twice() * p;
    }
    FrequencyPair {
        phi: HalfInt::from_twice(phi),
        psi: HalfInt::from_twice(psi),
    }
}

fn factorial(n: usize) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, k| acc * k)
}

/// `∫₀^π cos^a(θ/2) sin^b(θ/2) sin θ dθ` for even `a`, `b`.
pub fn monomial_theta_integral(c_exp: usize, s_exp: usize) -> Result<Rational> {
    if c_exp % 2 == 1 || s_exp % 2 == 1 {
        return Err(Error::ParityViolation { c_exp, s_exp });
    }
    let numer = factorial(c_exp / 2) * factorial(s_exp / 2) * 2;
    Ok(Rational::new(numer, factorial((c_exp + s_exp) / 2 + 1)))
}

/// `½·∫₀^π poly(c, s) sin θ dθ`, summed over a common denominator.
fn half_theta_integral(poly: &HomogeneousPoly) -> Result<Rational> {
    let degree = poly.degree();
    if degree % 2 == 1 {
        if let Some(s) = poly.coeffs().iter().position(|k| !k.is_zero()) {
            return Err(Error::ParityViolation {
                c_exp: degree - s,
                s_exp: s,
            });
        }
        return Ok(Rational::zero());
    }
    let half = degree / 2;
    let facts: Vec<BigInt> = {
        let mut v = Vec::with_capacity(half + 1);
        let mut acc = BigInt::one();
        v.push(acc.clone());
        for k in 1..=half {
            acc *= k;
            v.push(acc.clone());
        }
        v
    };
    let mut sum = BigInt::zero();
    for (s, k) in poly.coeffs().iter().enumerate() {
        if k.is_zero() {
            continue;
        }
        if s % 2 == 1 {
            return Err(Error::ParityViolation {
                c_exp: degree - s,
                s_exp: s,
            });
        }
        sum += k * &facts[(degree - s) / 2] * &facts[s / 2];
    }
    // ½ · 2 · Σ k·(a/2)!(b/2)! / ((D/2+1)!·denom)
    Ok(Rational::new(sum, &facts[half] * (half + 1) * poly.denom()))
}

type PowerEntry = Arc<(RadicalScalar, HomogeneousPoly)>;

/// Exact integrator with memoized element powers and base integrals.
/// Caching never changes results; [`HaarIntegrator::uncached`] exists to check that.
#[derive(Debug, Default)]
pub struct HaarIntegrator {
    caching: bool,
    powers: RwLock<HashMap<(MatrixElementIndex, u32), PowerEntry>>,
    base: RwLock<HashMap<ProductSpec, RadicalScalar>>,
}

impl HaarIntegrator {
    pub fn new() -> Self {
        HaarIntegrator {
            caching: true,
            ..Default::default()
        }
    }

    pub fn uncached() -> Self {
        HaarIntegrator::default()
    }

    /// Process-wide shared instance used by the free functions.
    pub fn global() -> &'static HaarIntegrator {
        static GLOBAL: OnceLock<HaarIntegrator> = OnceLock::new();
        GLOBAL.get_or_init(HaarIntegrator::new)
    }

    pub fn cached_integrals(&self) -> usize {
        self.base.read().expect("cache lock").len()
    }

    pub fn clear(&self) {
        self.powers.write().expect("cache lock").clear();
        self.base.write().expect("cache lock").clear();
    }

    fn element_power(&self, idx: &MatrixElementIndex, power: u32) -> PowerEntry {
        let key = (idx.clone(), power);
        if self.caching {
            if let Some(hit) = self.powers.read().expect("cache lock").get(&key) {
                return Arc::clone(hit);
            }
        }
        let exp = element_expansion(idx);
        let entry = Arc::new((exp.prefactor.pow(power), exp.poly.pow(power)));
        if self.caching {
            self.powers.write().expect("cache lock").insert(key, Arc::clone(&entry));
        }
        entry
    }

    /// `∫ ∏ (t^{ℓᵢ}_{mᵢ,nᵢ})^{αᵢ}(g) · [t^ℓ_{a,b}(g)] dg`, exactly.
    pub fn integrate(&self, spec: &ProductSpec, shift: Option<&MatrixElementIndex>) -> RadicalScalar {
        if !frequency_of(spec, shift).is_zero() {
            return RadicalScalar::zero();
        }
        let key = match shift {
            Some(h) => spec.with_factor(h),
            None => spec.clone(),
        };
        if self.caching {
            if let Some(hit) = self.base.read().expect("cache lock").get(&key) {
                return hit.clone();
            }
        }
        let mut prefactor = RadicalScalar::one();
        let mut poly = HomogeneousPoly::one();
        for (idx, power) in key.factors() {
            let entry = self.element_power(idx, *power);
            prefactor = &prefactor * &entry.0;
            poly = poly.mul(&entry.1);
        }
        let theta = half_theta_integral(&poly)
            .expect("zero K-frequencies force even exponents in every surviving monomial");
        let value = prefactor.scale_rational(&theta);
        if self.caching {
            self.base.write().expect("cache lock").insert(key, value.clone());
        }
        value
    }
}

/// Exact Haar integral of a product, optionally times one extra factor `h`.
pub fn integrate_product(spec: &ProductSpec, shift: Option<&MatrixElementIndex>) -> RadicalScalar {
    HaarIntegrator::global().integrate(spec, shift)
}
