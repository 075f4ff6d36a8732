//! s-numbers of finite identities and diagonal operators.
//!
//! Diagonal operators `D_sigma: l_p1 -> l_p2` with `p2 < p1` have exact
//! approximation and Gelfand numbers `h_k = (sum_{n>=k} sigma_n^p)^{1/p}`,
//! `1/p = 1/p2 - 1/p1`; Kolmogorov numbers are equivalent to `h_k` under the
//! doubling condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{hurwitz_zeta, pairwise_sum, Neumaier};
use crate::params::Exponent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WidthKind {
    #[serde(rename = "a")]
    Approximation,
    #[serde(rename = "c")]
    Gelfand,
    #[serde(rename = "d")]
    Kolmogorov,
}

impl WidthKind {
    pub fn tag(self) -> &'static str {
        match self {
            WidthKind::Approximation => "a",
            WidthKind::Gelfand => "c",
            WidthKind::Kolmogorov => "d",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certainty {
    /// The value is the width itself.
    Exact,
    /// The width is equivalent to the value up to unknown constants.
    Equivalent,
    /// Gluskin-type shape with all constants set to 1.
    Template,
}

impl Certainty {
    pub fn tag(self) -> &'static str {
        match self {
            Certainty::Exact => "exact",
            Certainty::Equivalent => "equivalent",
            Certainty::Template => "template",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Width {
    pub value: f64,
    pub certainty: Certainty,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WidthCurve {
    pub kind: WidthKind,
    pub ks: Vec<u64>,
    pub values: Vec<f64>,
    pub certainty: Certainty,
}

impl WidthCurve {
    /// True when values never increase along `ks`.
    pub fn is_non_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub lower: f64,
    pub upper: f64,
    pub certainty: Certainty,
}

/// Non-increasing runs `(level, multiplicity)` with precomputed tails of `level^p`.
#[derive(Debug, Clone, PartialEq)]
pub struct Runs {
    levels: Vec<f64>,
    mults: Vec<u128>,
    cum: Vec<u128>,
    suffix: Vec<f64>,
    p: f64,
}

impl Runs {
    /// Sorts runs into non-increasing order, merging equal levels.
    pub fn new(mut pairs: Vec<(f64, u128)>, p: f64) -> Self {
        pairs.retain(|&(_, m)| m > 0);
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut levels: Vec<f64> = Vec::with_capacity(pairs.len());
        let mut mults: Vec<u128> = Vec::with_capacity(pairs.len());
        for (l, m) in pairs {
            if levels.last() == Some(&l) {
                *mults.last_mut().unwrap() += m;
            } else {
                levels.push(l);
                mults.push(m);
            }
        }
        let mut cum = Vec::with_capacity(mults.len());
        let mut c: u128 = 0;
        for &m in &mults {
            c = c.saturating_add(m);
            cum.push(c);
        }
        let mut suffix = vec![0.0; levels.len() + 1];
        let mut acc = Neumaier::default();
        for r in (0..levels.len()).rev() {
            acc.add(mults[r] as f64 * levels[r].powf(p));
            suffix[r] = acc.value();
        }
        Runs { levels, mults, cum, suffix, p }
    }

    pub fn count(&self) -> u128 {
        self.cum.last().copied().unwrap_or(0)
    }

    pub fn nonzero_count(&self) -> u128 {
        self.levels
            .iter()
            .zip(&self.mults)
            .filter(|(l, _)| **l > 0.0)
            .map(|(_, m)| *m)
            .sum()
    }

    fn run_of(&self, k: u128) -> Option<usize> {
        let idx = self.cum.partition_point(|&c| c < k);
        (idx < self.levels.len()).then_some(idx)
    }

    /// The `k`-th largest entry (1-based), 0 past the end.
    pub fn value_at(&self, k: u128) -> f64 {
        self.run_of(k).map_or(0.0, |r| self.levels[r])
    }

    /// `sum_{n>=k} sigma_n^p`.
    pub fn tail_pow(&self, k: u128) -> f64 {
        match self.run_of(k) {
            None => 0.0,
            Some(r) => {
                let inside = (self.cum[r] - k + 1) as f64 * self.levels[r].powf(self.p);
                inside + self.suffix[r + 1]
            }
        }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn mults(&self) -> &[u128] {
        &self.mults
    }
}

/// Diagonal entries, given symbolically or as finitely many runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SigmaProfile {
    /// `sigma_n = ratio^n`, `n >= 1`.
    Geometric { ratio: f64 },
    /// `sigma_n = n^{-gamma}`, `n >= 1`.
    Power { gamma: f64 },
    /// `levels[r]` repeated `mults[r]` times; any order, rearranged internally.
    Blocks { levels: Vec<f64>, mults: Vec<u64> },
}

impl SigmaProfile {
    /// Finite profile listing each entry once.
    pub fn from_entries(xs: &[f64]) -> Self {
        SigmaProfile::Blocks { levels: xs.iter().map(|x| x.abs()).collect(), mults: vec![1; xs.len()] }
    }
}

/// `D_sigma: l_p1 -> l_p2` with `p2 < p1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOperator {
    pub sigma: SigmaProfile,
    pub p1: Exponent,
    pub p2: Exponent,
    p_recip: f64,
    runs: Option<Runs>,
}

impl DiagonalOperator {
    pub fn new(sigma: SigmaProfile, p1: Exponent, p2: Exponent) -> Result<Self> {
        if !(p2.value() < p1.value()) {
            return Err(Error::InvalidParams(format!("diagonal widths need p2 < p1, got p1 = {p1}, p2 = {p2}")));
        }
        Self::with_p_recip(sigma, p1, p2, p2.recip() - p1.recip())
    }

    fn with_p_recip(sigma: SigmaProfile, p1: Exponent, p2: Exponent, p_recip: f64) -> Result<Self> {
        let p = 1.0 / p_recip;
        let runs = match &sigma {
            SigmaProfile::Geometric { ratio } => {
                if !(*ratio > 0.0 && *ratio < 1.0) {
                    return Err(Error::InvalidParams(format!("geometric ratio must lie in (0, 1), got {ratio}")));
                }
                None
            }
            SigmaProfile::Power { gamma } => {
                if !(gamma * p > 1.0) {
                    return Err(Error::InvalidParams(format!(
                        "sigma_n = n^-{gamma} is not in l_p for p = {p}"
                    )));
                }
                None
            }
            SigmaProfile::Blocks { levels, mults } => {
                if levels.len() != mults.len() {
                    return Err(Error::InvalidParams("levels and mults must have equal length".into()));
                }
                if !levels.iter().all(|l| l.is_finite() && *l >= 0.0) {
                    return Err(Error::InvalidParams("block levels must be finite and >= 0".into()));
                }
                let pairs = levels.iter().zip(mults).map(|(&l, &m)| (l, m as u128)).collect();
                Some(Runs::new(pairs, p))
            }
        };
        Ok(DiagonalOperator { sigma, p1, p2, p_recip, runs })
    }

    /// `D_sigma: l_{p2'} -> l_{p1'}`, keeping the same `1/p`.
    pub fn dual(&self) -> Result<Self> {
        if self.p1.value() < 1.0 || self.p2.value() < 1.0 {
            return Err(Error::UnsupportedFormula("duality is only claimed between Banach spaces".into()));
        }
        Self::with_p_recip(self.sigma.clone(), self.p2.conjugate(), self.p1.conjugate(), self.p_recip)
    }

    pub fn p(&self) -> f64 {
        1.0 / self.p_recip
    }

    /// `sum_{n>=k} sigma_n^p`.
    pub fn tail_pow(&self, k: u64) -> f64 {
        let p = self.p();
        match (&self.sigma, &self.runs) {
            (SigmaProfile::Geometric { ratio }, _) => {
                let lr = ratio.ln() * p;
                (k as f64 * lr).exp() / -lr.exp_m1()
            }
            (SigmaProfile::Power { gamma }, _) => hurwitz_zeta(gamma * p, k as f64),
            (_, Some(runs)) => runs.tail_pow(k as u128),
            _ => unreachable!(),
        }
    }

    /// `h_k = (sum_{n>=k} sigma_n^p)^{1/p}`.
    pub fn h(&self, k: u64) -> f64 {
        let t = self.tail_pow(k);
        if t == 0.0 {
            0.0
        } else {
            t.powf(self.p_recip)
        }
    }

    /// Number of nonzero entries, if finite.
    pub fn rank(&self) -> Option<u128> {
        self.runs.as_ref().map(Runs::nonzero_count)
    }

    /// `sup h_k / h_{2k}` over `k <= 64` and dyadic `k` up to `2^40`
    /// (finite profiles: up to half their rank). Returns the worst `(k, ratio)`.
    pub fn doubling_ratio(&self) -> (u64, f64) {
        let limit = self.rank().map_or(1u64 << 40, |r| (r / 2).min(1 << 40) as u64);
        let ks = (1..=64u64).chain((6..=40).map(|e| 1u64 << e)).filter(|&k| k <= limit);
        let mut worst = (1, 1.0);
        for k in ks {
            let (a, b) = (self.h(k), self.h(2 * k));
            let r = if b > 0.0 { a / b } else if a > 0.0 { f64::INFINITY } else { 1.0 };
            if r > worst.1 {
                worst = (k, r);
            }
            if r.is_infinite() {
                break;
            }
        }
        worst
    }
}

/// Largest admissible `h_k/h_{2k}` before the doubling condition is rejected.
pub const DOUBLING_BOUND: f64 = 64.0;

/// Width of a diagonal operator: exact for `a` and `c`, equivalent for `d`.
pub fn diag_widths(op: &DiagonalOperator, k: u64, kind: WidthKind) -> Result<Width> {
    if k == 0 {
        return Err(Error::InvalidParams("k starts at 1".into()));
    }
    let certainty = match kind {
        WidthKind::Approximation | WidthKind::Gelfand => Certainty::Exact,
        WidthKind::Kolmogorov => {
            let (kw, ratio) = op.doubling_ratio();
            if ratio > DOUBLING_BOUND {
                return Err(Error::DoublingViolation { k: kw, ratio, bound: DOUBLING_BOUND });
            }
            Certainty::Equivalent
        }
    };
    Ok(Width { value: op.h(k), certainty })
}

/// `diag_widths` over a list of `k`; the doubling check runs once.
pub fn diag_curve(op: &DiagonalOperator, ks: &[u64], kind: WidthKind) -> Result<WidthCurve> {
    let first = diag_widths(op, ks.first().copied().unwrap_or(1), kind)?;
    let values = ks.iter().map(|&k| op.h(k)).collect();
    Ok(WidthCurve { kind, ks: ks.to_vec(), values, certainty: first.certainty })
}

/// `s_k(id: l_p1^N -> l_p2^N) = (N-k+1)^{1/p2-1/p1}` for `p2 < p1`.
pub fn id_widths_decreasing(n: u64, k: u64, p1: Exponent, p2: Exponent, kind: WidthKind) -> Result<f64> {
    if !(p2.value() < p1.value()) {
        return Err(Error::InvalidParams("the exact formula needs p2 < p1".into()));
    }
    if kind == WidthKind::Kolmogorov && p2.value() < 1.0 {
        return Err(Error::UnsupportedFormula(
            "the exact formula fails for Kolmogorov numbers when p2 < 1".into(),
        ));
    }
    if k == 0 {
        return Err(Error::InvalidParams("k starts at 1".into()));
    }
    if k > n {
        return Ok(0.0);
    }
    Ok(((n - k + 1) as f64).powf(p2.recip() - p1.recip()))
}

/// Template bounds for `a_k(id: l_p1^N -> l_p2^N)` with real `N`, `k`.
///
/// Returns `(lower, upper)` with all constants 1; `lower = 0` where no lower
/// estimate applies.
pub(crate) fn template_bounds(n: f64, k: f64, p1: Exponent, p2: Exponent, lambda: f64) -> (f64, f64) {
    if k > n {
        return (0.0, 0.0);
    }
    if p2.value() < p1.value() {
        let v = (n - k + 1.0).powf(p2.recip() - p1.recip());
        return (v, v);
    }
    let (a, b) = (p1.value(), p2.value());
    if b <= 2.0 || a >= 2.0 {
        let low = if 4.0 * k <= n { 1.0 } else { 0.0 };
        return (low, 1.0);
    }
    if p2.is_inf() && a <= 1.0 {
        let upper = if k <= n.powf(lambda) { 1.0 } else { k.powf(-0.5) };
        let lower = if 2.0 * k <= n { k.powf(-0.5) } else { 0.0 };
        return (lower, upper);
    }
    let t_recip = p1.conjugate().min(p2).recip();
    let u = (n.powf(t_recip) * k.powf(-0.5)).min(1.0);
    let lower = if 4.0 * k <= n { u } else { 0.0 };
    (lower, u)
}

/// Default `lambda` in the `l_p -> l_inf` upper template.
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// Gluskin-type template for `a_k` of the finite identity, constants 1.
///
/// For `p2 < p1` this is the exact value, for every kind it is valid for.
pub fn id_widths_template(
    n: u64,
    k: u64,
    p1: Exponent,
    p2: Exponent,
    kind: WidthKind,
    lambda: f64,
) -> Result<Template> {
    if k == 0 {
        return Err(Error::InvalidParams("k starts at 1".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParams(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if p2.value() < p1.value() {
        let v = id_widths_decreasing(n, k, p1, p2, kind)?;
        return Ok(Template { lower: v, upper: v, certainty: Certainty::Exact });
    }
    if kind != WidthKind::Approximation {
        return Err(Error::UnsupportedFormula(
            "finite-identity templates for p1 <= p2 exist for approximation numbers only".into(),
        ));
    }
    let (lower, upper) = template_bounds(n as f64, k as f64, p1, p2, lambda);
    Ok(Template { lower, upper, certainty: Certainty::Template })
}

/// Widths of `D_sigma` and of its dual, side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityPair {
    pub primal: [WidthCurve; 3],
    pub dual: [WidthCurve; 3],
}

impl DualityPair {
    /// `c_k(T*) = d_k(T)` and `d_k(T*) = c_k(T)`, compared value by value.
    pub fn crosswise_equal(&self) -> bool {
        self.dual[1].values == self.primal[2].values && self.dual[2].values == self.primal[1].values
    }
}

fn curve_unchecked(op: &DiagonalOperator, ks: &[u64], kind: WidthKind) -> WidthCurve {
    let certainty = if kind == WidthKind::Kolmogorov { Certainty::Equivalent } else { Certainty::Exact };
    WidthCurve { kind, ks: ks.to_vec(), values: ks.iter().map(|&k| op.h(k)).collect(), certainty }
}

/// Curves `[a, c, d]` of `D_sigma: l_p1 -> l_p2` and of its dual.
///
/// Kolmogorov curves are the tail values tagged `equivalent`; the doubling
/// check is not applied here.
pub fn duality_pair(p1: Exponent, p2: Exponent, sigma: SigmaProfile, ks: &[u64]) -> Result<DualityPair> {
    if p1.value() < 1.0 || p2.value() < 1.0 {
        return Err(Error::UnsupportedFormula("duality is only claimed between Banach spaces".into()));
    }
    let op = DiagonalOperator::new(sigma, p1, p2)?;
    let dual = op.dual()?;
    let kinds = [WidthKind::Approximation, WidthKind::Gelfand, WidthKind::Kolmogorov];
    Ok(DualityPair {
        primal: kinds.map(|kd| curve_unchecked(&op, ks, kd)),
        dual: kinds.map(|kd| curve_unchecked(&dual, ks, kd)),
    })
}

/// Aligned diagonal fixtures `S = diag(a)`, `T = diag(b)`.
///
/// Widths of `S` and `T` and `S + T` are taken `l_p1 -> l_p2`; for
/// multiplicativity `T: l_p1 -> l_p2`, `S: l_p2 -> l_p3` and `ST: l_p1 -> l_p3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomFixture {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub p1: Exponent,
    pub p2: Exponent,
    pub p3: Exponent,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxiomViolation {
    pub axiom: String,
    pub fixture: usize,
    pub m: u64,
    pub k: u64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct AxiomReport {
    pub checks: usize,
    pub violations: Vec<AxiomViolation>,
}

const AXIOM_SLACK: f64 = 1e-12;

/// Checks monotonicity with `s_1 = ||T||`, `rho`-subadditivity with
/// `rho = min(1, p2)`, multiplicativity, the rank property, and
/// `a_k >= max(c_k, d_k)` on every fixture.
pub fn snumber_axioms_check(fixtures: &[AxiomFixture]) -> Result<AxiomReport> {
    let mut report = AxiomReport::default();
    for (fi, fx) in fixtures.iter().enumerate() {
        if fx.a.len() != fx.b.len() {
            return Err(Error::InvalidParams("fixture vectors must be aligned".into()));
        }
        let n = fx.a.len() as u64;
        let sum: Vec<f64> = fx.a.iter().zip(&fx.b).map(|(x, y)| x.abs() + y.abs()).collect();
        let prod: Vec<f64> = fx.a.iter().zip(&fx.b).map(|(x, y)| x * y).collect();
        let s = DiagonalOperator::new(SigmaProfile::from_entries(&fx.a), fx.p1, fx.p2)?;
        let t = DiagonalOperator::new(SigmaProfile::from_entries(&fx.b), fx.p1, fx.p2)?;
        let st_sum = DiagonalOperator::new(SigmaProfile::from_entries(&sum), fx.p1, fx.p2)?;
        let s23 = DiagonalOperator::new(SigmaProfile::from_entries(&fx.a), fx.p2, fx.p3)?;
        let st13 = DiagonalOperator::new(SigmaProfile::from_entries(&prod), fx.p1, fx.p3)?;
        let mut fail = |axiom: &str, m: u64, k: u64, lhs: f64, rhs: f64| {
            report.checks += 1;
            if lhs > rhs * (1.0 + AXIOM_SLACK) + f64::MIN_POSITIVE {
                report.violations.push(AxiomViolation { axiom: axiom.into(), fixture: fi, m, k, lhs, rhs });
            }
        };

        // PS1: s_1 equals the operator norm ||sigma||_p, widths non-increasing
        let p = s.p();
        let norm: f64 = pairwise_sum(&fx.a.iter().map(|x| x.abs().powf(p)).collect::<Vec<_>>()).powf(1.0 / p);
        fail("PS1", 1, 1, (s.h(1) - norm).abs(), AXIOM_SLACK * norm);
        for k in 1..=n {
            fail("PS1", k, k + 1, s.h(k + 1), s.h(k));
        }

        // PS2 with rho = min(1, p2)
        let rho = 1f64.min(fx.p2.value());
        for m in 1..=n + 1 {
            for k in 1..=n + 1 {
                let lhs = st_sum.h(m + k - 1).powf(rho);
                let rhs = s.h(m).powf(rho) + t.h(k).powf(rho);
                fail("PS2", m, k, lhs, rhs);
            }
        }

        // PS3: s_{m+k-1}(ST) <= s_m(S) s_k(T)
        for m in 1..=n + 1 {
            for k in 1..=n + 1 {
                fail("PS3", m, k, st13.h(m + k - 1), s23.h(m) * t.h(k));
            }
        }

        // PS4: s_k = 0 exactly when k exceeds the rank
        let rank = s.rank().unwrap_or(0) as u64;
        for k in 1..=n + 1 {
            let v = s.h(k);
            let ok = (k > rank) == (v == 0.0);
            fail("PS4", k, rank, if ok { 0.0 } else { 1.0 }, 0.0);
        }

        // (acd): a_k >= c_k and a_k >= d_k, all read from the same tail formula
        for k in 1..=n + 1 {
            let a = diag_widths(&s, k, WidthKind::Approximation)?.value;
            let c = diag_widths(&s, k, WidthKind::Gelfand)?.value;
            let d = s.h(k);
            fail("acd", k, k, c.max(d), a);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    #[test]
    fn decreasing_identity_examples() {
        let a = WidthKind::Approximation;
        assert_eq!(id_widths_decreasing(10, 1, Exponent::INF, e(1.0), a).unwrap(), 10.0);
        assert_eq!(id_widths_decreasing(10, 10, e(3.0), e(2.0), a).unwrap(), 1.0);
        let v = id_widths_decreasing(16, 9, e(4.0), e(2.0), a).unwrap();
        assert!((v - 8f64.powf(0.25)).abs() < 1e-14);
        assert!(id_widths_decreasing(4, 1, e(2.0), e(0.5), WidthKind::Kolmogorov).is_err());
    }

    #[test]
    fn template_examples() {
        let a = WidthKind::Approximation;
        let t = id_widths_template(256, 16, e(2.0), e(4.0), a, DEFAULT_LAMBDA).unwrap();
        assert_eq!((t.lower, t.upper), (1.0, 1.0));
        let t = id_widths_template(256, 64, e(1.0), e(2.0), a, DEFAULT_LAMBDA).unwrap();
        assert_eq!((t.lower, t.upper), (1.0, 1.0));
        let t = id_widths_template(256, 257, e(1.5), e(4.0), a, DEFAULT_LAMBDA).unwrap();
        assert_eq!((t.lower, t.upper), (0.0, 0.0));
    }

    #[test]
    fn geometric_tail_example() {
        let op = DiagonalOperator::new(SigmaProfile::Geometric { ratio: 0.5 }, Exponent::INF, e(1.0)).unwrap();
        assert!((op.h(3) - 0.25).abs() < 1e-16);
    }

    #[test]
    fn rank_one() {
        let op = DiagonalOperator::new(SigmaProfile::from_entries(&[5.0]), e(3.0), e(1.5)).unwrap();
        assert!((op.h(1) - 5.0).abs() < 1e-14);
        assert_eq!(op.h(2), 0.0);
    }

    #[test]
    fn basel() {
        let op = DiagonalOperator::new(SigmaProfile::Power { gamma: 2.0 }, Exponent::INF, e(1.0)).unwrap();
        assert!((op.h(1) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-14);
    }

    #[test]
    fn geometric_fails_doubling() {
        let op = DiagonalOperator::new(SigmaProfile::Geometric { ratio: 0.5 }, Exponent::INF, e(1.0)).unwrap();
        assert!(matches!(
            diag_widths(&op, 4, WidthKind::Kolmogorov),
            Err(Error::DoublingViolation { .. })
        ));
        let pw = DiagonalOperator::new(SigmaProfile::Power { gamma: 2.0 }, Exponent::INF, e(1.0)).unwrap();
        assert_eq!(diag_widths(&pw, 4, WidthKind::Kolmogorov).unwrap().certainty, Certainty::Equivalent);
    }

    #[test]
    fn runs_merge_and_sort() {
        let r = Runs::new(vec![(1.0, 2), (3.0, 1), (1.0, 1), (0.0, 4)], 1.0);
        assert_eq!(r.levels(), &[3.0, 1.0, 0.0]);
        assert_eq!(r.mults(), &[1, 3, 4]);
        assert_eq!(r.tail_pow(2), 3.0);
        assert_eq!(r.value_at(5), 0.0);
        assert_eq!(r.nonzero_count(), 4);
    }
}
