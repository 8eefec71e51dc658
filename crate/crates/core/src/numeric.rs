//! Double-precision evaluation and Monte Carlo Haar integration, used as an
//! independent check on the exact engine.
//!
//! Group elements are written `g = k(φ)a(θ)k(ψ)` with
//! `k(φ) = diag(e^{iφ/2}, e^{−iφ/2})` and `a(θ) = [[c, i·s], [i·s, c]]`.
//! Sampling uses ChaCha8 seeded from the run seed, one stream per chunk of
//! [`MC_CHUNK`] samples, so results do not depend on the thread count.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::expand::FiniteFunction;
use crate::haar::ProductSpec;
use crate::scalar::{rational_to_f64, HalfInt, Rational};
use crate::wigner::{element_expansion, MatrixElementIndex};

/// Name of the sampling generator, recorded in reports.
pub const RNG_NAME: &str = "ChaCha8";

/// Samples drawn from one RNG stream.
pub const MC_CHUNK: u64 = 1 << 16;

/// Angle triple with `φ ∈ [0, 2π)`, `θ ∈ [0, π]`, `ψ ∈ [−2π, 2π)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EulerAngles {
    pub phi: f64,
    pub theta: f64,
    pub psi: f64,
}

impl EulerAngles {
    pub fn new(phi: f64, theta: f64, psi: f64) -> Self {
        EulerAngles { phi, theta, psi }
    }

    pub fn identity() -> Self {
        EulerAngles::new(0.0, 0.0, 0.0)
    }

    /// Maps three uniforms on `[0, 1)` to Haar-distributed angles.
    pub fn from_uniforms(u_phi: f64, u_theta: f64, u_psi: f64) -> Self {
        EulerAngles {
            phi: 2.0 * PI * u_phi,
            theta: (1.0 - 2.0 * u_theta).acos(),
            psi: -2.0 * PI + 4.0 * PI * u_psi,
        }
    }

    /// The defining 2×2 matrix `k(φ)a(θ)k(ψ)`.
    pub fn to_su2(&self) -> Su2 {
        let (c, s) = ((self.theta / 2.0).cos(), (self.theta / 2.0).sin());
        let l = Complex64::from_polar(1.0, self.phi / 2.0);
        let r = Complex64::from_polar(1.0, self.psi / 2.0);
        let i = Complex64::i();
        [
            [l * c * r, l * i * s * r.conj()],
            [l.conj() * i * s * r, l.conj() * c * r.conj()],
        ]
    }

    /// Recovers angles from `[[α, β], [γ, δ]] ∈ SU(2)`. At `θ = 0` or `π` only
    /// `φ ± ψ` is determined; `φ` is set to 0 and `ψ` carries the phase.
    pub fn from_su2(g: &Su2) -> Self {
        const EPS: f64 = 1e-12;
        let (a11, a21) = (g[0][0].norm(), g[1][0].norm());
        let theta = 2.0 * a21.atan2(a11);
        let wrap_psi = |x: f64| {
            let y = (x + 2.0 * PI).rem_euclid(4.0 * PI) - 2.0 * PI;
            if y >= 2.0 * PI { y - 4.0 * PI } else { y }
        };
        // g₁₁ = c·e^{i(φ+ψ)/2}, g₂₁ = i·s·e^{i(ψ−φ)/2}
        if a21 < EPS {
            return EulerAngles::new(0.0, theta, wrap_psi(2.0 * g[0][0].arg()));
        }
        let b = (g[1][0] / Complex64::i()).arg();
        if a11 < EPS {
            return EulerAngles::new(0.0, theta, wrap_psi(2.0 * b));
        }
        let a = g[0][0].arg();
        let mut phi = (a - b).rem_euclid(2.0 * PI);
        if phi >= 2.0 * PI {
            phi = 0.0;
        }
        EulerAngles::new(phi, theta, wrap_psi(2.0 * a - phi))
    }
}

pub type Su2 = [[Complex64; 2]; 2];

pub fn su2_mul(a: &Su2, b: &Su2) -> Su2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Haar sample `(φ, θ, ψ)` with `θ = arccos(1 − 2u)`.
pub fn sample_haar<R: Rng + ?Sized>(rng: &mut R) -> EulerAngles {
    let u_phi: f64 = rng.gen();
    let u_theta: f64 = rng.gen();
    let u_psi: f64 = rng.gen();
    EulerAngles::from_uniforms(u_phi, u_theta, u_psi)
}

/// Precomputed `t^ℓ_{m,n}` as `prefactor·Σ coeffs[k]·c^{2ℓ−k}s^k` times the K-phases.
#[derive(Clone, Debug)]
pub struct NumericElement {
    m: f64,
    n: f64,
    prefactor: Complex64,
    coeffs: Vec<f64>,
}

impl NumericElement {
    pub fn new(idx: &MatrixElementIndex) -> Self {
        let exp = element_expansion(idx);
        let denom = exp.poly.denom().clone();
        let coeffs = exp
            .poly
            .coeffs()
            .iter()
            .map(|k| rational_to_f64(&Rational::new(k.clone(), denom.clone())))
            .collect();
        NumericElement {
            m: idx.m().to_f64(),
            n: idx.n().to_f64(),
            prefactor: exp.prefactor.to_complex64(),
            coeffs,
        }
    }

    fn eval_point(&self, p: &Point) -> Complex64 {
        let degree = self.coeffs.len() - 1;
        let mut trig = 0.0;
        for (k, coeff) in self.coeffs.iter().enumerate() {
            if *coeff != 0.0 {
                trig += coeff * p.c.powi((degree - k) as i32) * p.s.powi(k as i32);
            }
        }
        self.prefactor * trig * Complex64::from_polar(1.0, -(self.m * p.phi + self.n * p.psi))
    }

    pub fn eval(&self, g: &EulerAngles) -> Complex64 {
        self.eval_point(&Point::new(g))
    }
}

struct Point {
    phi: f64,
    psi: f64,
    c: f64,
    s: f64,
}

impl Point {
    fn new(g: &EulerAngles) -> Self {
        Point {
            phi: g.phi,
            psi: g.psi,
            c: (g.theta / 2.0).cos(),
            s: (g.theta / 2.0).sin(),
        }
    }
}

/// `t^ℓ_{m,n}(g) = e^{−imφ}·t^ℓ_{m,n}(a(θ))·e^{−inψ}`.
pub fn eval_matrix_element(idx: &MatrixElementIndex, g: &EulerAngles) -> Complex64 {
    NumericElement::new(idx).eval(g)
}

/// All `t^ℓ_{m,n}(g)`, rows and columns ordered `ℓ, ℓ−1, …, −ℓ`.
pub fn representation_matrix(l: &HalfInt, g: &EulerAngles) -> Result<Vec<Vec<Complex64>>> {
    let l2 = l
        .twice_i64()
        .filter(|v| *v >= 0)
        .ok_or_else(|| Error::InvalidArgument(format!("spin {l} is not a nonnegative half-integer")))?;
    let p = Point::new(g);
    let row_labels: Vec<i64> = (0..=l2).map(|k| l2 - 2 * k).collect();
    row_labels
        .iter()
        .map(|&m2| {
            row_labels
                .iter()
                .map(|&n2| Ok(NumericElement::new(&MatrixElementIndex::from_twice(l2, m2, n2)?).eval_point(&p)))
                .collect()
        })
        .collect()
}

fn mat_mul(a: &[Vec<Complex64>], b: &[Vec<Complex64>]) -> Vec<Vec<Complex64>> {
    let n = a.len();
    (0..n)
        .map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

/// Largest entry of `|T(g₁)T(g₂) − T(g₁g₂)|`, with `g₁g₂` formed from the
/// defining matrices and converted back to angles.
pub fn composition_error(l: &HalfInt, g1: &EulerAngles, g2: &EulerAngles) -> Result<f64> {
    let g12 = EulerAngles::from_su2(&su2_mul(&g1.to_su2(), &g2.to_su2()));
    let lhs = mat_mul(&representation_matrix(l, g1)?, &representation_matrix(l, g2)?);
    let rhs = representation_matrix(l, &g12)?;
    Ok(lhs
        .iter()
        .flatten()
        .zip(rhs.iter().flatten())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

pub fn compose_and_check(l: &HalfInt, g1: &EulerAngles, g2: &EulerAngles, tol: f64) -> Result<bool> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    Ok(composition_error(l, g1, g2)? <= tol)
}

/// Largest entry of `|U·U† − I|`.
pub fn unitarity_defect(u: &[Vec<Complex64>]) -> f64 {
    let n = u.len();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let v: Complex64 = (0..n).map(|k| u[i][k] * u[j][k].conj()).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((v - target).norm());
        }
    }
    worst
}

/// What to average over Haar samples.
#[derive(Clone, Debug)]
pub enum McIntegrand {
    /// `∏ (t^{ℓᵢ}_{mᵢ,nᵢ})^{αᵢ} [·h]`.
    Product(ProductSpec, Option<MatrixElementIndex>),
    /// `f^P [·h]`.
    Power(FiniteFunction, u32, Option<MatrixElementIndex>),
}

enum Compiled {
    Product(Vec<(NumericElement, i32)>),
    Power(Vec<(NumericElement, Complex64)>, i32, Option<NumericElement>),
}

impl Compiled {
    fn new(integrand: &McIntegrand) -> Self {
        match integrand {
            McIntegrand::Product(spec, h) => {
                let mut factors: Vec<(NumericElement, i32)> = spec
                    .factors()
                    .iter()
                    .map(|(idx, a)| (NumericElement::new(idx), *a as i32))
                    .collect();
                if let Some(h) = h {
                    factors.push((NumericElement::new(h), 1));
                }
                Compiled::Product(factors)
            }
            McIntegrand::Power(f, p, h) => Compiled::Power(
                f.terms()
                    .iter()
                    .map(|(idx, a)| {
                        let coeff = Complex64::new(rational_to_f64(&a.re), rational_to_f64(&a.im));
                        (NumericElement::new(idx), coeff)
                    })
                    .collect(),
                *p as i32,
                h.as_ref().map(NumericElement::new),
            ),
        }
    }

    fn eval(&self, g: &EulerAngles) -> Complex64 {
        let p = Point::new(g);
        match self {
            Compiled::Product(factors) => factors
                .iter()
                .map(|(e, a)| e.eval_point(&p).powi(*a))
                .product(),
            Compiled::Power(terms, power, h) => {
                let f: Complex64 = terms.iter().map(|(e, a)| a * e.eval_point(&p)).sum();
                let h = h.as_ref().map_or(Complex64::new(1.0, 0.0), |h| h.eval_point(&p));
                f.powi(*power) * h
            }
        }
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: Complex64,
    pub std_error: f64,
    pub samples: u64,
    pub seed: u64,
    pub rng: &'static str,
}

impl McEstimate {
    /// `|mean − exact| ≤ k·std_error`, with a floating-point floor for zero-variance integrands.
    pub fn agrees_with(&self, exact: Complex64, k: f64) -> bool {
        (self.mean - exact).norm() <= k * self.std_error + 1e-12
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "mean": { "re": self.mean.re, "im": self.mean.im },
            "std_error": self.std_error,
            "samples": self.samples,
            "seed": self.seed,
            "rng": self.rng,
        })
    }
}

/// Monte Carlo estimate of `∫ integrand dg`, deterministic in `(seed, samples)`.
pub fn mc_integral(integrand: &McIntegrand, samples: u64, seed: u64) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let compiled = Compiled::new(integrand);
    let chunks = samples.div_ceil(MC_CHUNK);
    let partial: Vec<(Complex64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk);
            let count = MC_CHUNK.min(samples - chunk * MC_CHUNK);
            let mut sum = Complex64::new(0.0, 0.0);
            let mut sum_sq = 0.0;
            for _ in 0..count {
                let v = compiled.eval(&sample_haar(&mut rng));
                sum += v;
                sum_sq += v.norm_sqr();
            }
            (sum, sum_sq)
        })
        .collect();
    let (sum, sum_sq) = partial
        .iter()
        .fold((Complex64::new(0.0, 0.0), 0.0), |(s, q), (ps, pq)| (s + ps, q + pq));
    let n = samples as f64;
    let mean = sum / n;
    let std_error = if samples > 1 {
        ((sum_sq - n * mean.norm_sqr()).max(0.0) / (n - 1.0) / n).sqrt()
    } else {
        0.0
    };
    Ok(McEstimate {
        mean,
        std_error,
        samples,
        seed,
        rng: RNG_NAME,
    })
}
