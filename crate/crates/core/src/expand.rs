//! Power integrals `∫ f^P dg` and `∫ f^P·h dg` of finite functions
//! `f = Σ Aᵢ t^{ℓᵢ}_{mᵢ,nᵢ}` via the multinomial theorem.
//!
//! Only compositions `α` with `Σαᵢ(mᵢ, nᵢ) = target` can contribute, so the
//! enumeration walks `α₁, α₂, …` depth first and cuts any prefix whose
//! remaining budget cannot reach the target in either coordinate.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::haar::{HaarIntegrator, ProductSpec};
use crate::hull::two_term_criterion;
use crate::scalar::{GaussRational, HalfInt, RadicalScalar, Rational};
use crate::wigner::MatrixElementIndex;

/// `Σ Aᵢ t^{ℓᵢ}_{mᵢ,nᵢ}` with nonzero coefficients and distinct indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteFunction {
    terms: Vec<(MatrixElementIndex, GaussRational)>,
}

impl FiniteFunction {
    pub fn new(terms: Vec<(MatrixElementIndex, GaussRational)>) -> Result<Self> {
        for (i, (idx, coeff)) in terms.iter().enumerate() {
            if coeff.is_zero() {
                return Err(Error::InvalidArgument(format!("coefficient of {idx} is zero")));
            }
            if terms[..i].iter().any(|(other, _)| other == idx) {
                return Err(Error::InvalidArgument(format!("index {idx} appears twice")));
            }
        }
        Ok(FiniteFunction { terms })
    }

    /// `t^ℓ_{m,n}` with coefficient 1.
    pub fn single(idx: MatrixElementIndex) -> Self {
        FiniteFunction {
            terms: vec![(idx, GaussRational::one())],
        }
    }

    /// Sum of the given elements, all with coefficient 1.
    pub fn unit_sum(indices: impl IntoIterator<Item = MatrixElementIndex>) -> Result<Self> {
        FiniteFunction::new(indices.into_iter().map(|i| (i, GaussRational::one())).collect())
    }

    pub fn terms(&self) -> &[(MatrixElementIndex, GaussRational)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The K-weights `(mᵢ, nᵢ)` in term order (not deduplicated).
    pub fn weights(&self) -> Vec<(HalfInt, HalfInt)> {
        self.terms.iter().map(|(idx, _)| idx.weight()).collect()
    }
}

/// Exponent vector `α`, one entry per term of the function.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Composition {
    pub alphas: Vec<u32>,
}

impl Composition {
    pub fn total(&self) -> u64 {
        self.alphas.iter().map(|&a| a as u64).sum()
    }
}

/// `P! / (α₁!·…·α_k!)`.
pub fn multinomial(alphas: &[u32]) -> BigUint {
    let mut acc = BigUint::one();
    let mut running = 0u64;
    for &a in alphas {
        for j in 1..=a as u64 {
            running += 1;
            acc = acc * BigUint::from(running) / BigUint::from(j);
        }
    }
    acc
}

struct Walker<'a> {
    ms: &'a [i128],
    ns: &'a [i128],
    min_m: Vec<i128>,
    max_m: Vec<i128>,
    min_n: Vec<i128>,
    max_n: Vec<i128>,
    target: (i128, i128),
    out: Vec<Composition>,
}

impl Walker<'_> {
    fn reachable(&self, i: usize, budget: i128, cur_m: i128, cur_n: i128) -> bool {
        let need_m = self.target.0 - cur_m;
        let need_n = self.target.1 - cur_n;
        budget * self.min_m[i] <= need_m
            && need_m <= budget * self.max_m[i]
            && budget * self.min_n[i] <= need_n
            && need_n <= budget * self.max_n[i]
    }

    fn walk(&mut self, i: usize, budget: u32, cur_m: i128, cur_n: i128, prefix: &mut Vec<u32>) {
        let k = self.ms.len();
        if i + 1 == k {
            let b = budget as i128;
            if cur_m + b * self.ms[i] == self.target.0 && cur_n + b * self.ns[i] == self.target.1 {
                prefix.push(budget);
                self.out.push(Composition {
                    alphas: prefix.clone(),
                });
                prefix.pop();
            }
            return;
        }
        for a in (0..=budget).rev() {
            let m = cur_m + a as i128 * self.ms[i];
            let n = cur_n + a as i128 * self.ns[i];
            if !self.reachable(i + 1, (budget - a) as i128, m, n) {
                continue;
            }
            prefix.push(a);
            self.walk(i + 1, budget - a, m, n, prefix);
            prefix.pop();
        }
    }
}

/// All `α ∈ ℕ^k` with `Σαᵢ = total` and `Σαᵢ(mᵢ, nᵢ) = target`, in descending
/// lexicographic order.
pub fn enumerate_balanced_compositions(
    f: &FiniteFunction,
    total: u32,
    target: &(HalfInt, HalfInt),
) -> Vec<Composition> {
    let (Some(tm), Some(tn)) = (target.0.twice_i64(), target.1.twice_i64()) else {
        return Vec::new();
    };
    if f.is_empty() {
        return if total == 0 && tm == 0 && tn == 0 {
            vec![Composition { alphas: Vec::new() }]
        } else {
            Vec::new()
        };
    }
    let ms: Vec<i128> = f.terms.iter().map(|(i, _)| i.twice().1 as i128).collect();
    let ns: Vec<i128> = f.terms.iter().map(|(i, _)| i.twice().2 as i128).collect();
    let suffix = |v: &[i128], pick: fn(i128, i128) -> i128| -> Vec<i128> {
        let mut out = v.to_vec();
        for i in (0..v.len().saturating_sub(1)).rev() {
            out[i] = pick(out[i], out[i + 1]);
        }
        out
    };
    let mut walker = Walker {
        min_m: suffix(&ms, i128::min),
        max_m: suffix(&ms, i128::max),
        min_n: suffix(&ns, i128::min),
        max_n: suffix(&ns, i128::max),
        ms: &ms,
        ns: &ns,
        target: (tm as i128, tn as i128),
        out: Vec::new(),
    };
    if walker.reachable(0, total as i128, 0, 0) {
        walker.walk(0, total, 0, 0, &mut Vec::with_capacity(ms.len()));
    }
    walker.out
}

/// Evaluates `∫ f^P [·h] dg` term by term against a chosen integrator.
#[derive(Clone, Copy, Debug)]
pub struct PowerExpander<'a> {
    integrator: &'a HaarIntegrator,
}

impl PowerExpander<'static> {
    pub fn global() -> Self {
        PowerExpander {
            integrator: HaarIntegrator::global(),
        }
    }
}

impl<'a> PowerExpander<'a> {
    pub fn new(integrator: &'a HaarIntegrator) -> Self {
        PowerExpander { integrator }
    }

    /// One multinomial term: `(P; α)·∏Aᵢ^{αᵢ}·∫∏(tᵢ)^{αᵢ}[·h] dg`.
    pub fn composition_term(
        &self,
        f: &FiniteFunction,
        alphas: &[u32],
        shift: Option<&MatrixElementIndex>,
    ) -> RadicalScalar {
        let spec = ProductSpec::new(f.terms.iter().zip(alphas).map(|((idx, _), &a)| (idx.clone(), a)));
        let integral = self.integrator.integrate(&spec, shift);
        if integral.is_zero() {
            return integral;
        }
        let mut coeff = GaussRational::new(Rational::from_integer(BigInt::from(multinomial(alphas))), Rational::zero());
        for ((_, a), &alpha) in f.terms.iter().zip(alphas) {
            if alpha > 0 {
                coeff = coeff * a.powu(alpha);
            }
        }
        integral.scale_gauss(&coeff)
    }

    fn sum_over(
        &self,
        f: &FiniteFunction,
        total: u32,
        shift: Option<&MatrixElementIndex>,
    ) -> RadicalScalar {
        let target = match shift {
            Some(h) => (-h.m(), -h.n()),
            None => (HalfInt::zero(), HalfInt::zero()),
        };
        enumerate_balanced_compositions(f, total, &target)
            .into_par_iter()
            .map(|c| self.composition_term(f, &c.alphas, shift))
            .reduce(RadicalScalar::zero, |a, b| a + b)
    }

    pub fn power_integral(&self, f: &FiniteFunction, total: u32) -> RadicalScalar {
        self.sum_over(f, total, None)
    }

    pub fn power_integral_with_witness(
        &self,
        f: &FiniteFunction,
        total: u32,
        h: &MatrixElementIndex,
    ) -> RadicalScalar {
        self.sum_over(f, total, Some(h))
    }

    pub fn power_scan(&self, f: &FiniteFunction, pmax: u32) -> Vec<(u32, RadicalScalar)> {
        (1..=pmax).map(|p| (p, self.power_integral(f, p))).collect()
    }

    pub fn power_scan_with_witness(
        &self,
        f: &FiniteFunction,
        pmax: u32,
        h: &MatrixElementIndex,
    ) -> Vec<(u32, RadicalScalar)> {
        (1..=pmax)
            .map(|p| (p, self.power_integral_with_witness(f, p, h)))
            .collect()
    }
}

/// Exact `∫ f^P dg`.
pub fn power_integral(f: &FiniteFunction, total: u32) -> RadicalScalar {
    PowerExpander::global().power_integral(f, total)
}

/// Exact `∫ f^P·t^ℓ_{a,b} dg`.
pub fn power_integral_with_witness(f: &FiniteFunction, total: u32, h: &MatrixElementIndex) -> RadicalScalar {
    PowerExpander::global().power_integral_with_witness(f, total, h)
}

/// `[(P, ∫ f^P dg)]` for `P = 1..=pmax`.
pub fn power_scan(f: &FiniteFunction, pmax: u32) -> Vec<(u32, RadicalScalar)> {
    PowerExpander::global().power_scan(f, pmax)
}

/// Smallest nonzero `(α, β) ∈ ℕ²` with `α·p₁ + β·p₂ = 0`, for a pair whose
/// segment passes through the origin.
pub fn minimal_balanced_pair(p1: &(HalfInt, HalfInt), p2: &(HalfInt, HalfInt)) -> Result<(u64, u64)> {
    let criterion = two_term_criterion(p1, p2)
        .map_err(|_| Error::NoSolution("both points are the origin".into()))?;
    if !criterion {
        return Err(Error::NoSolution(format!(
            "the origin is not on the segment from ({}, {}) to ({}, {})",
            p1.0, p1.1, p2.0, p2.1
        )));
    }
    if p1.0.is_zero() && p1.1.is_zero() {
        return Ok((1, 0));
    }
    if p2.0.is_zero() && p2.1.is_zero() {
        return Ok((0, 1));
    }
    // Opposite rays: pick a coordinate that is nonzero on both.
    let (a, b) = if !p1.0.is_zero() { (&p1.0, &p2.0) } else { (&p1.1, &p2.1) };
    let a = a.twice().magnitude().clone();
    let b = b.twice().magnitude().clone();
    let g = a.gcd(&b);
    let alpha: u64 = (&b / &g)
        .try_into()
        .map_err(|_| Error::InvalidArgument("balanced pair exceeds u64".into()))?;
    let beta: u64 = (&a / &g)
        .try_into()
        .map_err(|_| Error::InvalidArgument("balanced pair exceeds u64".into()))?;
    Ok((alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    fn idx(l: i64, m: i64, n: i64) -> MatrixElementIndex {
        MatrixElementIndex::from_twice(l, m, n).unwrap()
    }

    fn pt(m2: i64, n2: i64) -> (HalfInt, HalfInt) {
        (HalfInt::from_twice(m2), HalfInt::from_twice(n2))
    }

    fn q(n: i64, d: i64) -> RadicalScalar {
        RadicalScalar::from_rational(rational(n, d))
    }

    fn alphas(cs: Vec<Composition>) -> Vec<Vec<u32>> {
        cs.into_iter().map(|c| c.alphas).collect()
    }

    #[test]
    fn enumeration_examples() {
        let pair = FiniteFunction::unit_sum([idx(1, 1, -1), idx(1, -1, 1)]).unwrap();
        assert_eq!(alphas(enumerate_balanced_compositions(&pair, 2, &pt(0, 0))), vec![vec![1, 1]]);
        let single = FiniteFunction::single(idx(1, 1, 1));
        assert!(enumerate_balanced_compositions(&single, 3, &pt(0, 0)).is_empty());
        let zonal = FiniteFunction::unit_sum([idx(0, 0, 0), idx(2, 0, 0)]).unwrap();
        assert_eq!(
            alphas(enumerate_balanced_compositions(&zonal, 2, &pt(0, 0))),
            vec![vec![2, 0], vec![1, 1], vec![0, 2]]
        );
    }

    #[test]
    fn enumeration_matches_exhaustive_filter() {
        let f = FiniteFunction::unit_sum([idx(2, 2, 0), idx(2, -2, 2), idx(4, 0, -2), idx(1, 1, -1)]).unwrap();
        for total in 0..=7u32 {
            for target in [pt(0, 0), pt(2, 0), pt(-1, 1), pt(4, -4)] {
                let mut brute = Vec::new();
                for a in (0..=total).rev() {
                    for b in (0..=total - a).rev() {
                        for c in (0..=total - a - b).rev() {
                            let d = total - a - b - c;
                            let al = [a, b, c, d];
                            let (sm, sn) = f.terms().iter().zip(al).fold((0i64, 0i64), |(x, y), ((i, _), k)| {
                                (x + i.twice().1 * k as i64, y + i.twice().2 * k as i64)
                            });
                            if (sm, sn) == (target.0.twice_i64().unwrap(), target.1.twice_i64().unwrap()) {
                                brute.push(al.to_vec());
                            }
                        }
                    }
                }
                assert_eq!(alphas(enumerate_balanced_compositions(&f, total, &target)), brute);
            }
        }
    }

    #[test]
    fn multinomial_values() {
        assert_eq!(multinomial(&[2, 1, 1]), BigUint::from(12u32));
        assert_eq!(multinomial(&[0, 5]), BigUint::from(1u32));
        assert_eq!(multinomial(&[10, 10]), BigUint::from(184_756u32));
    }

    #[test]
    fn power_integral_examples() {
        let single = FiniteFunction::single(idx(1, 1, 1));
        for p in 1..=12 {
            assert!(power_integral(&single, p).is_zero());
        }
        assert_eq!(power_integral(&FiniteFunction::single(idx(2, 0, 0)), 2), q(1, 3));
        let pair = FiniteFunction::unit_sum([idx(1, 1, -1), idx(1, -1, 1)]).unwrap();
        assert_eq!(power_integral(&pair, 2), q(-1, 1));
    }

    #[test]
    fn witness_examples() {
        let f = FiniteFunction::single(idx(1, 1, 1));
        let h = idx(2, -2, -2);
        assert_eq!(power_integral_with_witness(&f, 2, &h), q(1, 3));
        assert!(power_integral_with_witness(&f, 3, &h).is_zero());
        assert!(power_integral_with_witness(&f, 1, &idx(0, 0, 0)).is_zero());
    }

    #[test]
    fn scan_examples() {
        let scan = power_scan(&FiniteFunction::single(idx(2, 0, 0)), 2);
        assert_eq!(scan, vec![(1, RadicalScalar::zero()), (2, q(1, 3))]);
        let constant = power_scan(&FiniteFunction::single(idx(0, 0, 0)), 3);
        assert!(constant.iter().all(|(_, v)| *v == q(1, 1)));
        assert!(power_scan(&FiniteFunction::single(idx(1, 1, 1)), 4).iter().all(|(_, v)| v.is_zero()));
    }

    #[test]
    fn complex_coefficients() {
        // (i·t^0_{0,0})^P = i^P
        let f = FiniteFunction::new(vec![(idx(0, 0, 0), GaussRational::i())]).unwrap();
        let values: Vec<_> = power_scan(&f, 4).into_iter().map(|(_, v)| v).collect();
        assert_eq!(values[0], RadicalScalar::i());
        assert_eq!(values[1], q(-1, 1));
        assert_eq!(values[3], q(1, 1));
    }

    #[test]
    fn balanced_pair_examples() {
        assert_eq!(minimal_balanced_pair(&pt(1, -1), &pt(-1, 1)).unwrap(), (1, 1));
        assert_eq!(minimal_balanced_pair(&pt(2, 0), &pt(-4, 0)).unwrap(), (2, 1));
        assert_eq!(minimal_balanced_pair(&pt(0, 0), &pt(3, 1)).unwrap(), (1, 0));
        assert!(matches!(minimal_balanced_pair(&pt(2, 2), &pt(2, -2)), Err(Error::NoSolution(_))));
    }

    #[test]
    fn function_validation() {
        assert!(FiniteFunction::unit_sum([idx(1, 1, 1), idx(1, 1, 1)]).is_err());
        assert!(FiniteFunction::new(vec![(idx(1, 1, 1), GaussRational::zero())]).is_err());
    }
}
