//! Instance classification, the proven-direction check, the seeded fuzzer,
//! Legendre moment scans and the built-in verification suite.
//!
//! A `violation` verdict is only ever issued when an exact computation
//! contradicts a proven statement: origin outside the support hull, yet some
//! power integral is nonzero. Instances whose hull contains the origin but
//! whose scan is all zero are `inconclusive-candidate`, never violations.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::expand::{minimal_balanced_pair, FiniteFunction, PowerExpander};
use crate::format::{function_to_json, index_to_json, membership_to_json, SCHEMA_VERSION};
use crate::haar::{HaarIntegrator, ProductSpec};
use crate::hull::{
    lcm_of_denominators, origin_certificate, origin_in_hull, rank_classification, ray_interval, solve3,
    two_term_criterion, vanishing_threshold, HullMembership, SupportHull,
};
use crate::numeric::RNG_NAME;
use crate::scalar::{rational, rational_to_string, GaussRational, HalfInt, RadicalScalar, Rational};
use crate::wigner::{legendre_poly, MatrixElementIndex};

/// Structural case of a function, by number of terms and (for three terms) rank.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CaseTag {
    Single,
    TwoTerm,
    ThreeTermRank(u8),
    General(usize),
}

impl fmt::Display for CaseTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseTag::Single => f.write_str("single"),
            CaseTag::TwoTerm => f.write_str("two-term"),
            CaseTag::ThreeTermRank(r) => write!(f, "three-term-rank-{r}"),
            CaseTag::General(_) => f.write_str("general-k"),
        }
    }
}

pub fn classify_instance(f: &FiniteFunction) -> CaseTag {
    let w = f.weights();
    match w.len() {
        1 => CaseTag::Single,
        2 => CaseTag::TwoTerm,
        3 => CaseTag::ThreeTermRank(rank_classification(&w[0], &w[1], &w[2]).rank),
        k => CaseTag::General(k),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Consistent,
    InconclusiveCandidate,
    Violation,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Consistent => "consistent",
            Verdict::InconclusiveCandidate => "inconclusive-candidate",
            Verdict::Violation => "violation",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceReport {
    pub function: FiniteFunction,
    pub case: CaseTag,
    pub hull: SupportHull,
    pub membership: HullMembership,
    pub pmax: u32,
    pub scan: Vec<(u32, RadicalScalar)>,
    pub first_nonzero: Option<u32>,
    pub verdict: Verdict,
    /// `(seed, trial)` when produced by the fuzzer.
    pub origin: Option<(u64, u64)>,
}

/// Exact value as JSON plus a readable rendering.
pub fn value_json(v: &RadicalScalar) -> Value {
    json!({ "exact": v.to_json(), "display": v.to_string() })
}

impl InstanceReport {
    pub fn to_json(&self) -> Value {
        let scan: Vec<Value> = self
            .scan
            .iter()
            .map(|(p, v)| json!({ "p": p, "value": value_json(v) }))
            .collect();
        let mut doc = json!({
            "schema": SCHEMA_VERSION,
            "type": "instance",
            "function": function_to_json(&self.function),
            "case": self.case.to_string(),
            "k": self.function.len(),
            "hull": membership_to_json(self.hull.points(), &self.membership),
            "pmax": self.pmax,
            "scan": scan,
            "first_nonzero": self.first_nonzero,
            "verdict": self.verdict.to_string(),
        });
        if let Some((seed, trial)) = self.origin {
            doc["seed"] = json!(seed);
            doc["trial"] = json!(trial);
        }
        doc
    }
}

/// Scans `∫ f^P dg` for `P = 1..=pmax` and compares against the hull verdict.
pub fn check_proven_direction(f: &FiniteFunction, pmax: u32) -> Result<InstanceReport> {
    if f.is_empty() {
        return Err(Error::InvalidArgument("function has no terms".into()));
    }
    if pmax == 0 {
        return Err(Error::InvalidArgument("pmax must be at least 1".into()));
    }
    let hull = SupportHull::of_function(f)?;
    let membership = origin_certificate(&hull);
    let integrator = HaarIntegrator::new();
    let scan = PowerExpander::new(&integrator).power_scan(f, pmax);
    let first_nonzero = scan.iter().find(|(_, v)| !v.is_zero()).map(|(p, _)| *p);
    let verdict = match (membership.is_inside(), first_nonzero) {
        (false, Some(_)) => Verdict::Violation,
        (false, None) | (true, Some(_)) => Verdict::Consistent,
        (true, None) => Verdict::InconclusiveCandidate,
    };
    Ok(InstanceReport {
        function: f.clone(),
        case: classify_instance(f),
        hull,
        membership,
        pmax,
        scan,
        first_nonzero,
        verdict,
        origin: None,
    })
}

/// `{±1, ±2, ±½, ±i, 1±i}`.
pub fn default_coefficient_pool() -> Vec<GaussRational> {
    let g = |re: (i64, i64), im: (i64, i64)| GaussRational::new(rational(re.0, re.1), rational(im.0, im.1));
    vec![
        g((1, 1), (0, 1)),
        g((-1, 1), (0, 1)),
        g((2, 1), (0, 1)),
        g((-2, 1), (0, 1)),
        g((1, 2), (0, 1)),
        g((-1, 2), (0, 1)),
        g((0, 1), (1, 1)),
        g((0, 1), (-1, 1)),
        g((1, 1), (1, 1)),
        g((1, 1), (-1, 1)),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuzzConfig {
    pub seed: u64,
    pub trials: u64,
    /// Index of the first trial; a run over `first_trial..first_trial + trials`
    /// reproduces exactly that slice of a longer run with the same seed.
    pub first_trial: u64,
    pub l_max: HalfInt,
    pub k_max: usize,
    pub p_max: u32,
    pub pool: Vec<GaussRational>,
    /// Probability that a trial uses the three-term rank-2 generator.
    pub rank2_bias: f64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            seed: 1,
            trials: 100,
            first_trial: 0,
            l_max: HalfInt::from_integer(2),
            k_max: 4,
            p_max: 12,
            pool: default_coefficient_pool(),
            rank2_bias: 0.0,
        }
    }
}

impl FuzzConfig {
    fn twice_l_max(&self) -> Result<i64> {
        self.l_max
            .twice_i64()
            .filter(|v| (0..=64).contains(v))
            .ok_or_else(|| Error::InvalidArgument(format!("l_max {} must lie in [0, 32]", self.l_max)))
    }

    pub fn validate(&self) -> Result<()> {
        let l2 = self.twice_l_max()?;
        if self.trials == 0 {
            return Err(Error::InvalidArgument("trials must be at least 1".into()));
        }
        if self.p_max == 0 {
            return Err(Error::InvalidArgument("p_max must be at least 1".into()));
        }
        if self.k_max == 0 {
            return Err(Error::InvalidArgument("k_max must be at least 1".into()));
        }
        let available: i64 = (0..=l2).map(|d| (d + 1) * (d + 1)).sum();
        if self.k_max as i64 > available {
            return Err(Error::InvalidArgument(format!(
                "k_max {} exceeds the {available} distinct indices with spin at most {}",
                self.k_max, self.l_max
            )));
        }
        if self.pool.is_empty() || self.pool.iter().any(|c| c.is_zero()) {
            return Err(Error::InvalidArgument("coefficient pool must be nonempty and nonzero".into()));
        }
        if !(0.0..=1.0).contains(&self.rank2_bias) {
            return Err(Error::InvalidArgument("rank2_bias must lie in [0, 1]".into()));
        }
        if self.rank2_bias > 0.0 && l2 == 0 {
            return Err(Error::InvalidArgument("rank-2 supports need l_max of at least 1/2".into()));
        }
        Ok(())
    }
}

fn draw_index<R: Rng>(rng: &mut R, l_max2: i64) -> MatrixElementIndex {
    let l2 = rng.gen_range(0..=l_max2);
    let m2 = l2 - 2 * rng.gen_range(0..=l2);
    let n2 = l2 - 2 * rng.gen_range(0..=l2);
    MatrixElementIndex::from_twice(l2, m2, n2).expect("drawn index is valid")
}

fn draw_coefficient<R: Rng>(rng: &mut R, pool: &[GaussRational]) -> GaussRational {
    pool[rng.gen_range(0..pool.len())].clone()
}

/// `k` distinct uniformly drawn indices with pool coefficients.
pub fn random_function<R: Rng>(rng: &mut R, k: usize, l_max2: i64, pool: &[GaussRational]) -> FiniteFunction {
    let mut indices: Vec<MatrixElementIndex> = Vec::with_capacity(k);
    while indices.len() < k {
        let idx = draw_index(rng, l_max2);
        if !indices.contains(&idx) {
            indices.push(idx);
        }
    }
    let terms = indices
        .into_iter()
        .map(|idx| (idx, draw_coefficient(rng, pool)))
        .collect();
    FiniteFunction::new(terms).expect("distinct indices, nonzero coefficients")
}

/// Three terms whose weights are collinear but not all equal: the third weight
/// is an affine combination of the first two with rational parameter.
pub fn random_rank2_function<R: Rng>(rng: &mut R, l_max2: i64, pool: &[GaussRational]) -> FiniteFunction {
    loop {
        let i1 = draw_index(rng, l_max2);
        let i2 = draw_index(rng, l_max2);
        let (_, m1, n1) = i1.twice();
        let (_, m2, n2) = i2.twice();
        if (m1, n1) == (m2, n2) {
            continue;
        }
        let mut candidates = Vec::new();
        for m3 in -l_max2..=l_max2 {
            for n3 in -l_max2..=l_max2 {
                if (m3 - n3).rem_euclid(2) != 0 || (m2 - m1) * (n3 - n1) != (n2 - n1) * (m3 - m1) {
                    continue;
                }
                let low = m3.abs().max(n3.abs());
                for l3 in (low..=l_max2).step_by(2) {
                    let idx = MatrixElementIndex::from_twice(l3, m3, n3).expect("valid by construction");
                    if idx != i1 && idx != i2 {
                        candidates.push(idx);
                    }
                }
            }
        }
        if candidates.is_empty() {
            continue;
        }
        let i3 = candidates.swap_remove(rng.gen_range(0..candidates.len()));
        let terms = [i1, i2, i3]
            .into_iter()
            .map(|idx| (idx, draw_coefficient(rng, pool)))
            .collect();
        return FiniteFunction::new(terms).expect("distinct indices, nonzero coefficients");
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

fn run_trial(cfg: &FuzzConfig, l_max2: i64, trial: u64) -> Result<InstanceReport> {
    let mut rng = trial_rng(cfg.seed, trial);
    let rank2 = rng.gen::<f64>() < cfg.rank2_bias;
    let f = if rank2 {
        random_rank2_function(&mut rng, l_max2, &cfg.pool)
    } else {
        let k = rng.gen_range(1..=cfg.k_max);
        random_function(&mut rng, k, l_max2, &cfg.pool)
    };
    let mut report = check_proven_direction(&f, cfg.p_max)?;
    report.origin = Some((cfg.seed, trial));
    Ok(report)
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FuzzSummary {
    pub seed: u64,
    pub first_trial: u64,
    pub trials_run: u64,
    pub consistent: u64,
    pub inconclusive_candidates: u64,
    pub violations: u64,
    pub first_violation: Option<u64>,
}

impl FuzzSummary {
    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA_VERSION,
            "type": "summary",
            "seed": self.seed,
            "rng": RNG_NAME,
            "first_trial": self.first_trial,
            "trials_run": self.trials_run,
            "consistent": self.consistent,
            "inconclusive_candidate": self.inconclusive_candidates,
            "violation": self.violations,
            "first_violation": self.first_violation,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FuzzRun {
    pub reports: Vec<InstanceReport>,
    pub summary: FuzzSummary,
}

impl FuzzRun {
    /// One instance record per line, summary last.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for report in &self.reports {
            writeln!(out, "{}", report.to_json())?;
        }
        writeln!(out, "{}", self.summary.to_json())?;
        out.flush()
    }
}

/// Runs the configured trials. Stops reporting after the first violation, which
/// is kept as the last instance record.
pub fn fuzz(cfg: &FuzzConfig) -> Result<FuzzRun> {
    cfg.validate()?;
    let l_max2 = cfg.twice_l_max()?;
    let end = cfg
        .first_trial
        .checked_add(cfg.trials)
        .ok_or_else(|| Error::InvalidArgument("trial range overflows".into()))?;
    let mut reports: Vec<InstanceReport> = (cfg.first_trial..end)
        .into_par_iter()
        .map(|t| run_trial(cfg, l_max2, t))
        .collect::<Result<_>>()?;
    let mut summary = FuzzSummary {
        seed: cfg.seed,
        first_trial: cfg.first_trial,
        ..Default::default()
    };
    if let Some(pos) = reports.iter().position(|r| r.verdict == Verdict::Violation) {
        reports.truncate(pos + 1);
        summary.first_violation = reports[pos].origin.map(|(_, t)| t);
    }
    for r in &reports {
        match r.verdict {
            Verdict::Consistent => summary.consistent += 1,
            Verdict::InconclusiveCandidate => summary.inconclusive_candidates += 1,
            Verdict::Violation => summary.violations += 1,
        }
    }
    summary.trials_run = reports.len() as u64;
    Ok(FuzzRun { reports, summary })
}

#[derive(Clone, Debug, PartialEq)]
pub struct LegendreScan {
    /// `½∫₋₁¹ f(x)^P dx` for `P = 1..=pmax`.
    pub moments: Vec<GaussRational>,
    pub first_nonzero: Option<u32>,
}

fn gauss_poly_mul(a: &[GaussRational], b: &[GaussRational]) -> Vec<GaussRational> {
    let mut out = vec![GaussRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] = &out[i + j] + x * y;
        }
    }
    out
}

/// Moments of `f = Σ A_ℓ P_ℓ` on `[−1, 1]` with the normalized measure `dx/2`.
pub fn legendre_moment_scan(coeffs: &BTreeMap<u32, GaussRational>, pmax: u32) -> Result<LegendreScan> {
    if coeffs.values().all(|a| a.is_zero()) {
        return Err(Error::InvalidArgument("at least one Legendre coefficient must be nonzero".into()));
    }
    let degree = *coeffs.keys().max().expect("nonempty") as usize;
    let mut f = vec![GaussRational::zero(); degree + 1];
    for (&l, a) in coeffs {
        let p = legendre_poly(&HalfInt::from_integer(l))?;
        for (k, c) in p.coeffs().iter().enumerate() {
            f[k] = &f[k] + a * GaussRational::new(c.clone(), Rational::zero());
        }
    }
    let mut power = vec![GaussRational::one()];
    let mut moments = Vec::with_capacity(pmax as usize);
    for _ in 0..pmax {
        power = gauss_poly_mul(&power, &f);
        let moment = power
            .iter()
            .enumerate()
            .step_by(2)
            .fold(GaussRational::zero(), |acc, (k, c)| {
                acc + c * GaussRational::new(Rational::new(BigInt::one(), BigInt::from(k + 1)), Rational::zero())
            });
        moments.push(moment);
    }
    let first_nonzero = moments.iter().position(|m| !m.is_zero()).map(|p| p as u32 + 1);
    Ok(LegendreScan { moments, first_nonzero })
}

/// Outcome of one verification item.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteItem {
    pub name: &'static str,
    pub passed: bool,
    pub checked: usize,
    pub failures: Vec<String>,
    pub data: Value,
}

impl SuiteItem {
    fn new(name: &'static str) -> Self {
        SuiteItem {
            name,
            passed: true,
            checked: 0,
            failures: Vec::new(),
            data: Value::Null,
        }
    }

    fn check(&mut self, ok: bool, describe: impl FnOnce() -> String) {
        self.checked += 1;
        if !ok {
            self.passed = false;
            if self.failures.len() < 20 {
                self.failures.push(describe());
            }
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "failures": self.failures,
            "data": self.data,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteReport {
    pub items: Vec<SuiteItem>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn failed_items(&self) -> Vec<&'static str> {
        self.items.iter().filter(|i| !i.passed).map(|i| i.name).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "passed": self.passed(),
            "items": self.items.iter().map(SuiteItem::to_json).collect::<Vec<_>>(),
        })
    }
}

fn sign_of_m_minus_n(idx: &MatrixElementIndex) -> i64 {
    let (_, m2, n2) = idx.twice();
    if ((m2 - n2) / 2).rem_euclid(2) == 0 {
        1
    } else {
        -1
    }
}

/// `∫ t^ℓ_{m,n}·t^{ℓ'}_{m',n'} dg` over all pairs with spin at most `l_max`.
pub fn schur_orthogonality(l_max: &HalfInt) -> SuiteItem {
    let mut item = SuiteItem::new("schur-orthogonality");
    let indices = MatrixElementIndex::all_up_to(l_max);
    let mut table = Vec::new();
    for a in &indices {
        for b in &indices {
            let value = HaarIntegrator::global().integrate(&ProductSpec::new([(a.clone(), 1), (b.clone(), 1)]), None);
            let expected = if *b == a.reflected() {
                let l2 = a.twice().0;
                RadicalScalar::from_rational(rational(sign_of_m_minus_n(a), l2 + 1))
            } else {
                RadicalScalar::zero()
            };
            item.check(value == expected, || format!("{a} * {b} = {value}, expected {expected}"));
            if *b == a.reflected() {
                let mut row = index_to_json(a);
                row["value"] = json!(value.to_string());
                table.push(row);
            }
        }
    }
    item.data = json!({ "l_max": l_max.to_string(), "pairs": indices.len() * indices.len(), "table": table });
    item
}

/// `∫ (t^ℓ_{0,0})^P dg` for `P = 1, 2` equals `[0, 1/(2ℓ+1)]`, ℓ = 1..=5.
pub fn legendre_normalization() -> SuiteItem {
    let mut item = SuiteItem::new("legendre-normalization");
    let mut rows = Vec::new();
    for l in 1..=5i64 {
        let f = FiniteFunction::single(MatrixElementIndex::from_twice(2 * l, 0, 0).expect("valid"));
        let scan = PowerExpander::global().power_scan(&f, 2);
        let expected = [RadicalScalar::zero(), RadicalScalar::from_rational(rational(1, 2 * l + 1))];
        let ok = scan[0].1 == expected[0] && scan[1].1 == expected[1];
        item.check(ok, || format!("l = {l}: got [{}, {}]", scan[0].1, scan[1].1));
        rows.push(json!({ "l": l, "p1": scan[0].1.to_string(), "p2": scan[1].1.to_string() }));
    }
    item.data = json!(rows);
    item
}

/// Single elements: every power integral vanishes up to `pmax` unless
/// `(m, n) = (0, 0)`, where `P = 2` is strictly positive.
pub fn single_element_vanishing(l_max: &HalfInt, pmax: u32) -> SuiteItem {
    let mut item = SuiteItem::new("single-element-vanishing");
    let mut positive = Vec::new();
    for idx in MatrixElementIndex::all_up_to(l_max) {
        let f = FiniteFunction::single(idx.clone());
        if idx.m().is_zero() && idx.n().is_zero() {
            let v = PowerExpander::global().power_integral(&f, 2);
            let ok = v.as_rational().is_some_and(|q| q.is_positive());
            item.check(ok, || format!("{idx}: P = 2 gives {v}, expected a positive rational"));
            positive.push(json!({ "l": idx.l().to_string(), "p2": v.to_string() }));
        } else {
            let scan = PowerExpander::global().power_scan(&f, pmax);
            let bad = scan.iter().find(|(_, v)| !v.is_zero()).cloned();
            item.check(bad.is_none(), || {
                let (p, v) = bad.clone().expect("nonzero");
                format!("{idx}: P = {p} gives {v}")
            });
        }
    }
    item.data = json!({ "l_max": l_max.to_string(), "pmax": pmax, "zonal_p2": positive });
    item
}

/// Weight points with both coordinates in `{−bound, …, bound}` that carry a
/// matrix element, each paired with its smallest spin `max(|m|, |n|)`.
pub fn weight_grid(bound2: i64) -> Vec<MatrixElementIndex> {
    let mut out = Vec::new();
    for m2 in -bound2..=bound2 {
        for n2 in -bound2..=bound2 {
            if (m2 - n2).rem_euclid(2) == 0 {
                let l2 = m2.abs().max(n2.abs());
                out.push(MatrixElementIndex::from_twice(l2, m2, n2).expect("valid"));
            }
        }
    }
    out
}

/// Two-term supports with unit coefficients: the determinant criterion holds
/// iff a power among `{M, 2M}` integrates to nonzero, `M` from the minimal
/// balanced pair. When the criterion fails, every `P ≤ 8` must vanish.
pub fn two_term_equivalence(bound2: i64) -> SuiteItem {
    let mut item = SuiteItem::new("two-term-criterion");
    let grid = weight_grid(bound2);
    let mut counts = (0usize, 0usize);
    for (i, a) in grid.iter().enumerate() {
        for b in &grid[i + 1..] {
            let (pa, pb) = (a.weight(), b.weight());
            let f = FiniteFunction::unit_sum([a.clone(), b.clone()]).expect("distinct");
            let criterion = match two_term_criterion(&pa, &pb) {
                Ok(c) => c,
                Err(_) => continue,
            };
            let nonzero = if criterion {
                counts.0 += 1;
                let (alpha, beta) = match minimal_balanced_pair(&pa, &pb) {
                    Ok(x) => x,
                    Err(e) => {
                        item.check(false, || format!("{a} + {b}: {e}"));
                        continue;
                    }
                };
                let m = (alpha + beta) as u32;
                [m, 2 * m]
                    .iter()
                    .any(|&p| !PowerExpander::global().power_integral(&f, p).is_zero())
            } else {
                counts.1 += 1;
                (1..=8).any(|p| !PowerExpander::global().power_integral(&f, p).is_zero())
            };
            item.check(criterion == nonzero, || {
                format!("{a} + {b}: criterion {criterion}, nonzero power found {nonzero}")
            });
        }
    }
    let half = HalfInt::half();
    let witness = FiniteFunction::unit_sum([
        MatrixElementIndex::new(half.clone(), half.clone(), -&half).expect("valid"),
        MatrixElementIndex::new(half.clone(), -&half, half.clone()).expect("valid"),
    ])
    .expect("distinct");
    let value = PowerExpander::global().power_integral(&witness, 2);
    item.check(value == RadicalScalar::from_rational(rational(-1, 1)), || {
        format!("witness pair: P = 2 gives {value}, expected -1")
    });
    item.data = json!({
        "bound": HalfInt::from_twice(bound2).to_string(),
        "criterion_true": counts.0,
        "criterion_false": counts.1,
        "witness": { "function": function_to_json(&witness), "p": 2, "value": value.to_string() },
    });
    item
}

/// Random three-term supports: exact rank against a determinant/collinearity
/// oracle, and for rank ≠ 2 hull membership against solvability of
/// `Mα = (1, 0, 0)` with `α ≥ 0`. Rank-3 supports containing the origin must
/// give a nonzero integral at `P*` or `2P*`, `P*` the least integer scaling of `α`.
pub fn rank_consistency(seed: u64, triples: usize) -> SuiteItem {
    let mut item = SuiteItem::new("rank-classification");
    let mut by_rank = [0usize; 4];
    let pool = default_coefficient_pool();
    for t in 0..triples {
        let mut rng = trial_rng(seed, t as u64);
        let f = random_function(&mut rng, 3, 3, &pool);
        let w = f.weights();
        let class = rank_classification(&w[0], &w[1], &w[2]);
        let twice = |p: &(HalfInt, HalfInt)| (p.0.twice_i64().unwrap_or(0), p.1.twice_i64().unwrap_or(0));
        let (a, b, c) = (twice(&w[0]), twice(&w[1]), twice(&w[2]));
        let det = (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0);
        let oracle = if a == b && b == c {
            1
        } else if det == 0 {
            2
        } else {
            3
        };
        item.check(class.rank == oracle, || format!("{w:?}: rank {} but oracle {oracle}", class.rank));
        by_rank[class.rank as usize] += 1;
        let hull = SupportHull::of_function(&f).expect("nonempty");
        let inside = origin_in_hull(&hull);
        match class.rank {
            1 => {
                let solvable = a == (0, 0);
                item.check(inside == solvable, || format!("{w:?}: rank 1 membership mismatch"));
            }
            3 => {
                let rhs = [Rational::one(), Rational::zero(), Rational::zero()];
                let alpha = solve3(&class.matrix, &rhs).expect("invertible");
                let solvable = alpha.iter().all(|x| !x.is_negative());
                item.check(inside == solvable, || format!("{w:?}: rank 3 membership mismatch"));
                if solvable {
                    let p_star = lcm_of_denominators(&alpha).to_u32().unwrap_or(u32::MAX);
                    if p_star <= 16 {
                        let nonzero = [p_star, 2 * p_star]
                            .iter()
                            .any(|&p| !PowerExpander::global().power_integral(&f, p).is_zero());
                        item.check(nonzero, || format!("{w:?}: zero at P* = {p_star} and 2P*"));
                    }
                }
            }
            _ => {}
        }
        if !inside {
            let scan = PowerExpander::global().power_scan(&f, 6);
            item.check(scan.iter().all(|(_, v)| v.is_zero()), || format!("{w:?}: outside but nonzero"));
        }
    }
    item.data = json!({ "seed": seed, "triples": triples, "rank1": by_rank[1], "rank2": by_rank[2], "rank3": by_rank[3] });
    item
}

/// One checked `(f, h)` pair of the threshold soundness test.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdCase {
    pub function: FiniteFunction,
    pub witness: MatrixElementIndex,
    pub threshold: u64,
    /// `P` values in `[P₀, P₀ + span]` where the integral was nonzero.
    pub nonzero_at: Vec<u64>,
    /// True when `P₀ = 1` or `(−a/(P₀−1), −b/(P₀−1))` lies in the hull.
    pub least: bool,
}

impl ThresholdCase {
    pub fn sound(&self) -> bool {
        self.nonzero_at.is_empty() && self.least
    }
}

/// Computes `P₀` and checks `∫ f^P·h dg = 0` for `P ∈ [P₀, P₀ + span]`.
pub fn check_threshold(f: &FiniteFunction, h: &MatrixElementIndex, span: u64) -> Result<ThresholdCase> {
    let hull = SupportHull::of_function(f)?;
    let witness = h.weight();
    let threshold = vanishing_threshold(&hull, &witness)?;
    let least = threshold == 1 || {
        let q = (-&witness.0, -&witness.1);
        let t = Rational::from_integer(BigInt::from(threshold - 1));
        ray_interval(&hull, &q).is_some_and(|(lo, hi)| lo <= t && t <= hi)
    };
    let integrator = HaarIntegrator::new();
    let expander = PowerExpander::new(&integrator);
    let nonzero_at = (threshold..=threshold + span)
        .filter(|&p| !expander.power_integral_with_witness(f, p as u32, h).is_zero())
        .collect();
    Ok(ThresholdCase {
        function: f.clone(),
        witness: h.clone(),
        threshold,
        nonzero_at,
        least,
    })
}

/// Random `(f, h)` with the origin outside the support hull of `f`.
pub fn random_threshold_cases(seed: u64, count: usize) -> Vec<(FiniteFunction, MatrixElementIndex)> {
    let pool = default_coefficient_pool();
    let mut out = Vec::with_capacity(count);
    let mut t = 0u64;
    while out.len() < count {
        let mut rng = trial_rng(seed, t);
        t += 1;
        let k = rng.gen_range(1..=3);
        let f = random_function(&mut rng, k, 3, &pool);
        if origin_in_hull(&SupportHull::of_function(&f).expect("nonempty")) {
            continue;
        }
        let h = draw_index(&mut rng, 4);
        out.push((f, h));
    }
    out
}

pub fn threshold_soundness(seed: u64, count: usize) -> SuiteItem {
    let mut item = SuiteItem::new("threshold-soundness");
    let half = HalfInt::half();
    let concrete_f = FiniteFunction::single(MatrixElementIndex::new(half.clone(), half.clone(), half).expect("valid"));
    let concrete_h = MatrixElementIndex::from_twice(2, -2, -2).expect("valid");
    let mut cases = vec![(concrete_f.clone(), concrete_h.clone())];
    cases.extend(random_threshold_cases(seed, count));
    let mut thresholds = Vec::new();
    for (f, h) in &cases {
        match check_threshold(f, h, 10) {
            Ok(case) => {
                item.check(case.sound(), || {
                    format!("{h}: threshold {} not sound, nonzero at {:?}", case.threshold, case.nonzero_at)
                });
                thresholds.push(case.threshold);
            }
            Err(e) => item.check(false, || format!("{h}: {e}")),
        }
    }
    let p2 = PowerExpander::global().power_integral_with_witness(&concrete_f, 2, &concrete_h);
    item.check(p2 == RadicalScalar::from_rational(rational(1, 3)), || format!("concrete case: P = 2 gives {p2}"));
    item.check(thresholds.first() == Some(&3), || format!("concrete case: threshold {:?}", thresholds.first()));
    item.data = json!({
        "seed": seed,
        "random_cases": count,
        "concrete": { "p2": p2.to_string(), "threshold": thresholds.first() },
        "max_threshold": thresholds.iter().max(),
    });
    item
}

/// Seed used by [`verify_suite`] for its randomized items.
pub const SUITE_SEED: u64 = 20_240_601;

/// The full built-in verification suite.
pub fn verify_suite() -> SuiteReport {
    let two = HalfInt::from_integer(2);
    SuiteReport {
        items: vec![
            schur_orthogonality(&two),
            legendre_normalization(),
            single_element_vanishing(&two, 8),
            two_term_equivalence(3),
            rank_consistency(SUITE_SEED, 200),
            threshold_soundness(SUITE_SEED, 50),
        ],
    }
}

/// Human-readable line per item.
pub fn render_suite(report: &SuiteReport) -> String {
    let mut out = String::new();
    for item in &report.items {
        let status = if item.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{status} {} ({} checks)\n", item.name, item.checked));
        for failure in &item.failures {
            out.push_str(&format!("    {failure}\n"));
        }
    }
    out
}

/// `a + bi` rendering with exact rationals.
pub fn gauss_to_string(z: &GaussRational) -> String {
    match (z.re.is_zero(), z.im.is_zero()) {
        (_, true) => rational_to_string(&z.re),
        (true, false) => format!("{}i", rational_to_string(&z.im)),
        (false, false) => format!("{} + {}i", rational_to_string(&z.re), rational_to_string(&z.im)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(l: i64, m: i64, n: i64) -> MatrixElementIndex {
        MatrixElementIndex::from_twice(l, m, n).unwrap()
    }

    fn legendre(pairs: &[(u32, i64)]) -> BTreeMap<u32, GaussRational> {
        pairs
            .iter()
            .map(|&(l, a)| (l, GaussRational::new(rational(a, 1), Rational::zero())))
            .collect()
    }

    #[test]
    fn classification_examples() {
        assert_eq!(classify_instance(&FiniteFunction::single(idx(1, 1, 1))), CaseTag::Single);
        let two = FiniteFunction::unit_sum([idx(1, 1, 1), idx(1, -1, -1)]).unwrap();
        assert_eq!(classify_instance(&two), CaseTag::TwoTerm);
        let zonal = FiniteFunction::unit_sum([idx(0, 0, 0), idx(2, 0, 0), idx(4, 0, 0)]).unwrap();
        assert_eq!(classify_instance(&zonal), CaseTag::ThreeTermRank(1));
        assert_eq!(classify_instance(&zonal).to_string(), "three-term-rank-1");
    }

    #[test]
    fn proven_direction_examples() {
        let r = check_proven_direction(&FiniteFunction::single(idx(1, 1, 1)), 8).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent);
        assert!(!r.membership.is_inside());
        let r = check_proven_direction(&FiniteFunction::single(idx(2, 0, 0)), 2).unwrap();
        assert_eq!((r.verdict, r.first_nonzero), (Verdict::Consistent, Some(2)));
        let pair = FiniteFunction::unit_sum([idx(1, 1, -1), idx(1, -1, 1)]).unwrap();
        let r = check_proven_direction(&pair, 2).unwrap();
        assert_eq!(r.verdict, Verdict::Consistent);
        assert_eq!(r.scan[1].1, RadicalScalar::from_rational(rational(-1, 1)));
    }

    #[test]
    fn fuzz_is_deterministic_and_clean() {
        let cfg = FuzzConfig {
            trials: 10,
            p_max: 6,
            ..Default::default()
        };
        let a = fuzz(&cfg).unwrap();
        assert_eq!(a.reports.len(), 10);
        assert_eq!(a.summary.violations, 0);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_jsonl(&mut x).unwrap();
        fuzz(&cfg).unwrap().write_jsonl(&mut y).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn fuzz_slices_match_full_run() {
        let full = fuzz(&FuzzConfig { trials: 6, p_max: 4, ..Default::default() }).unwrap();
        let tail = fuzz(&FuzzConfig { trials: 3, first_trial: 3, p_max: 4, ..Default::default() }).unwrap();
        assert_eq!(full.reports[3..], tail.reports[..]);
    }

    #[test]
    fn rank2_generator_contract() {
        let cfg = FuzzConfig {
            trials: 20,
            p_max: 4,
            rank2_bias: 1.0,
            ..Default::default()
        };
        for r in fuzz(&cfg).unwrap().reports {
            assert_eq!(r.case, CaseTag::ThreeTermRank(2));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..50 {
            let f = random_rank2_function(&mut rng, 1, &default_coefficient_pool());
            assert_eq!(classify_instance(&f), CaseTag::ThreeTermRank(2));
        }
    }

    #[test]
    fn fuzz_config_validation() {
        assert!(FuzzConfig { trials: 0, ..Default::default() }.validate().is_err());
        assert!(FuzzConfig { p_max: 0, ..Default::default() }.validate().is_err());
        assert!(FuzzConfig { k_max: 2, l_max: HalfInt::zero(), ..Default::default() }.validate().is_err());
        assert!(FuzzConfig { rank2_bias: 1.5, ..Default::default() }.validate().is_err());
        assert!(FuzzConfig { pool: vec![], ..Default::default() }.validate().is_err());
    }

    #[test]
    fn legendre_examples() {
        let s = legendre_moment_scan(&legendre(&[(0, 1)]), 3).unwrap();
        assert_eq!(s.first_nonzero, Some(1));
        let s = legendre_moment_scan(&legendre(&[(1, 1)]), 3).unwrap();
        assert_eq!(s.first_nonzero, Some(2));
        assert_eq!(s.moments[1], GaussRational::new(rational(1, 3), Rational::zero()));
        let s = legendre_moment_scan(&legendre(&[(1, 1), (2, 1)]), 2).unwrap();
        assert_eq!(s.first_nonzero, Some(2));
        assert_eq!(s.moments[1], GaussRational::new(rational(8, 15), Rational::zero()));
        assert!(legendre_moment_scan(&legendre(&[(1, 0)]), 2).is_err());
        assert!(legendre_moment_scan(&BTreeMap::new(), 2).is_err());
    }

    #[test]
    fn legendre_matches_power_scan() {
        let a = GaussRational::new(rational(3, 2), rational(-1, 1));
        for l in 0..=4u32 {
            let coeffs: BTreeMap<u32, GaussRational> = [(l, a.clone())].into_iter().collect();
            let moments = legendre_moment_scan(&coeffs, 6).unwrap().moments;
            let f = FiniteFunction::new(vec![(idx(2 * l as i64, 0, 0), a.clone())]).unwrap();
            for (p, v) in PowerExpander::global().power_scan(&f, 6) {
                assert_eq!(v, RadicalScalar::from_gauss(&moments[p as usize - 1]), "l = {l}, P = {p}");
            }
        }
    }

    #[test]
    fn suite_items_pass_small() {
        assert!(schur_orthogonality(&HalfInt::from_integer(1)).passed);
        assert!(legendre_normalization().passed);
        assert!(single_element_vanishing(&HalfInt::from_integer(1), 6).passed);
        let item = two_term_equivalence(2);
        assert!(item.passed, "{:?}", item.failures);
        let item = rank_consistency(7, 40);
        assert!(item.passed, "{:?}", item.failures);
        let item = threshold_soundness(7, 10);
        assert!(item.passed, "{:?}", item.failures);
    }

    #[test]
    fn threshold_concrete_case() {
        let f = FiniteFunction::single(idx(1, 1, 1));
        let case = check_threshold(&f, &idx(2, -2, -2), 10).unwrap();
        assert_eq!(case.threshold, 3);
        assert!(case.sound());
    }
}
