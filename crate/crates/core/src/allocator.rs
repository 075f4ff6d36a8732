//! Constructive upper and lower bounds from the block decomposition.
//!
//! The identity is split into blocks `P_{j,i}` of size `M_{j,i}` (idealized
//! cardinalities), each of which is a scaled finite identity with norm factor
//! `2^{-j delta} phi(2^i)^{-1}`. Finite widths enter through the templates of
//! [`crate::swidths`] with every constant pinned to 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{idealized_card, weight_on_block};
use crate::numeric::{approx_eq, rho_sum, strict_floor};
use crate::params::{EmbeddingParams, Exponent};
use crate::swidths::{template_bounds, DEFAULT_LAMBDA};
use crate::weights::{VIndices, WeightSpec};

/// Ideal index `r` (stored as `1/r`) and power-triangle exponent `rho`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdealBudget {
    pub r_recip: f64,
    pub rho: f64,
}

impl IdealBudget {
    /// `1/s = 1/r + 1/2`.
    pub fn s_recip(&self) -> f64 {
        self.r_recip + 0.5
    }
}

/// Shape of the finite-identity template for `(p1, p2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TemplateFamily {
    /// `p2 < p1`: exact `(N-k+1)^{1/p}`.
    Decreasing { p_recip: f64 },
    /// `p1 <= p2 <= 2` or `2 <= p1 <= p2`: constant 1.
    Unit,
    /// `p1 < 2 < p2`, not `l_p -> l_inf` with `p <= 1`: `min(1, N^{1/t} k^{-1/2})`.
    Gluskin { t_recip: f64 },
    /// `p1 <= 1`, `p2 = inf`: 1 up to `N^lambda`, then `k^{-1/2}`.
    Linf { lambda: f64 },
}

impl TemplateFamily {
    pub fn of(p1: Exponent, p2: Exponent, lambda: f64) -> Self {
        let (a, b) = (p1.value(), p2.value());
        if b < a {
            TemplateFamily::Decreasing { p_recip: p2.recip() - p1.recip() }
        } else if b <= 2.0 || a >= 2.0 {
            TemplateFamily::Unit
        } else if p2.is_inf() && a <= 1.0 {
            TemplateFamily::Linf { lambda }
        } else {
            TemplateFamily::Gluskin { t_recip: p1.conjugate().min(p2).recip() }
        }
    }

    /// Exponent `g` with `L_{s,inf}(id_N) ~ N^g` at `1/s = s_recip`.
    fn growth(self, s_recip: f64) -> f64 {
        match self {
            TemplateFamily::Decreasing { p_recip } => s_recip + p_recip,
            TemplateFamily::Unit => s_recip,
            TemplateFamily::Gluskin { t_recip } => {
                if s_recip >= 0.5 {
                    s_recip - 0.5 + t_recip
                } else {
                    s_recip * 2.0 * t_recip
                }
            }
            TemplateFamily::Linf { lambda } => (lambda * s_recip).max(s_recip - 0.5),
        }
    }

    /// Inverse of [`Self::growth`]: the `1/s` achieving growth `g`.
    fn s_recip_for_growth(self, g: f64) -> f64 {
        match self {
            TemplateFamily::Decreasing { p_recip } => g - p_recip,
            TemplateFamily::Unit => g,
            TemplateFamily::Gluskin { t_recip } => {
                if g >= t_recip {
                    g + 0.5 - t_recip
                } else {
                    g / (2.0 * t_recip)
                }
            }
            TemplateFamily::Linf { lambda } => {
                let kink = lambda / (2.0 * (1.0 - lambda));
                if g <= kink {
                    g / lambda
                } else {
                    g + 0.5
                }
            }
        }
    }

    /// Regime threshold `d/t`-type on `mu` below which a two-part split fails.
    fn two_part_threshold(self, d: f64) -> f64 {
        match self {
            TemplateFamily::Decreasing { p_recip } => d * p_recip,
            TemplateFamily::Gluskin { t_recip } => d * t_recip,
            TemplateFamily::Unit | TemplateFamily::Linf { .. } => 0.0,
        }
    }
}

fn family(params: &EmbeddingParams, lambda: f64) -> TemplateFamily {
    TemplateFamily::of(params.p1, params.p2, lambda)
}

fn upper_template(params: &EmbeddingParams, n: f64, k: f64, lambda: f64) -> f64 {
    template_bounds(n, k, params.p1, params.p2, lambda).1
}

/// `L_{s,inf}(id_N) = sup_k k^{1/s} u(k, N)` over the template's breakpoints.
pub fn ideal_quasi_norm(fam: TemplateFamily, params: &EmbeddingParams, n: f64, s_recip: f64) -> f64 {
    let lambda = match fam {
        TemplateFamily::Linf { lambda } => lambda,
        _ => DEFAULT_LAMBDA,
    };
    let mut cands = vec![1.0, n];
    match fam {
        TemplateFamily::Decreasing { p_recip } => {
            let ks = s_recip * (n + 1.0) / (s_recip + p_recip);
            cands.extend([ks.floor(), ks.ceil()]);
        }
        TemplateFamily::Unit => {}
        TemplateFamily::Gluskin { t_recip } => {
            let b = n.powf(2.0 * t_recip);
            cands.extend([b.floor(), b.ceil()]);
        }
        TemplateFamily::Linf { lambda } => {
            let b = n.powf(lambda).floor();
            cands.extend([b, b + 1.0]);
        }
    }
    cands
        .into_iter()
        .filter(|&k| k >= 1.0 && k <= n)
        .map(|k| k.powf(s_recip) * upper_template(params, n, k, lambda))
        .fold(0.0, f64::max)
}

/// Norm factor `2^{-j delta} phi(2^i)^{-1}` of block `(j, i)`.
pub fn block_scale(params: &EmbeddingParams, spec: &WeightSpec, j: u32, i: u32) -> Result<f64> {
    Ok(2f64.powf(-(j as f64) * params.delta()) / weight_on_block(spec, j, i)?)
}

/// `2^{-j delta} phi(2^i)^{-1} u(k, M_{j,i})` with the template `u` for `(p1, p2)`.
pub fn block_bound(params: &EmbeddingParams, spec: &WeightSpec, j: u32, i: u32, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParams("k starts at 1".into()));
    }
    block_bound_f(params, spec, j, i, k as f64, DEFAULT_LAMBDA)
}

fn block_bound_f(params: &EmbeddingParams, spec: &WeightSpec, j: u32, i: u32, k: f64, lambda: f64) -> Result<f64> {
    let n = idealized_card(params.d, j, i);
    if k > n {
        return Ok(0.0);
    }
    Ok(block_scale(params, spec, j, i)? * upper_template(params, n, k, lambda))
}

fn level_blocks(m: u32) -> impl Iterator<Item = (u32, u32)> {
    (0..=m).map(move |j| (j, m - j))
}

fn check_dims(params: &EmbeddingParams, spec: &WeightSpec) -> Result<()> {
    if spec.dim != params.d {
        return Err(Error::InvalidParams(format!(
            "weight dimension {} differs from embedding dimension {}",
            spec.dim, params.d
        )));
    }
    Ok(())
}

/// Settings shared by the allocator bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AllocConfig {
    /// `lambda` of the `l_p -> l_inf` template.
    pub lambda: f64,
    /// Number of levels summed explicitly beyond a split point.
    pub tail_levels: u32,
    /// Margin added to ideal exponents, in units of `1/d`.
    pub margin: f64,
}

impl Default for AllocConfig {
    fn default() -> Self {
        AllocConfig { lambda: DEFAULT_LAMBDA, tail_levels: 60, margin: 0.1 }
    }
}

/// `(sum_{m > m0} sum_{j+i=m} x_{j,i}^rho)^{1/rho}` with `tail_levels`
/// explicit levels and a geometric bound on the rest.
fn tail_sum<F>(m0: u32, levels: u32, rho: f64, term: F) -> Result<f64>
where
    F: Fn(u32, u32) -> Result<f64> + Sync,
{
    let per_level: Vec<f64> = (m0 + 1..=m0 + levels)
        .into_par_iter()
        .map(|m| {
            let xs: Vec<f64> = level_blocks(m).map(|(j, i)| term(j, i)).collect::<Result<_>>()?;
            Ok(xs.iter().map(|x| x.powf(rho)).sum::<f64>())
        })
        .collect::<Result<_>>()?;
    let n = per_level.len();
    let mut total = crate::numeric::pairwise_sum(&per_level);
    let (last, prev) = (per_level[n - 1], per_level[n - 2]);
    if last > 0.0 {
        let q = last / prev;
        if !(q < 1.0) {
            return Err(Error::TailBudget {
                required_m_max: m0 + 2 * levels,
                reason: format!("level sums stopped decreasing {levels} levels past {m0}"),
            });
        }
        total += last * q / (1.0 - q);
    }
    Ok(total.powf(1.0 / rho))
}

/// `X = min(alpha_phi, delta)` used to place the ideal exponents.
fn active_rate(idx: &VIndices, delta: f64) -> f64 {
    idx.alpha_phi.min(delta)
}

impl IdealBudget {
    /// Budget for the `P` part: growth `X/d + margin/d` of the block ideal norms.
    pub fn for_two_part(params: &EmbeddingParams, spec: &WeightSpec, cfg: &AllocConfig) -> Result<IdealBudget> {
        let idx = spec.indices()?;
        let fam = family(params, cfg.lambda);
        let d = params.dim();
        let g = active_rate(&idx, params.delta()) / d + cfg.margin / d;
        Ok(IdealBudget { r_recip: fam.s_recip_for_growth(g) - 0.5, rho: params.rho() })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPartBound {
    /// Rank at which the bound holds, `2^{dM+1}`.
    pub k: u64,
    pub upper: f64,
    pub p_part: f64,
    pub q_part: f64,
    pub budget_p: IdealBudget,
    pub budget_q: IdealBudget,
}

fn pq_bound(
    params: &EmbeddingParams,
    spec: &WeightSpec,
    m: u32,
    s_p: f64,
    s_q: f64,
    cfg: &AllocConfig,
) -> Result<(u64, f64, f64)> {
    let d = params.d;
    if d * m + 1 > 62 {
        return Err(Error::ResourceLimit(format!("2^(dM+1) overflows for d = {d}, M = {m}")));
    }
    let fam = family(params, cfg.lambda);
    let rho = params.rho();
    let k_half = 2f64.powi((d * m) as i32);
    let p_terms: Vec<f64> = (0..=m)
        .flat_map(level_blocks)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(j, i)| {
            let n = idealized_card(d, j, i);
            Ok(block_scale(params, spec, j, i)? * ideal_quasi_norm(fam, params, n, s_p))
        })
        .collect::<Result<_>>()?;
    let p_part = k_half.powf(-s_p) * rho_sum(&p_terms, rho);
    let l_q = tail_sum(m, cfg.tail_levels, rho, |j, i| {
        let n = idealized_card(d, j, i);
        Ok(block_scale(params, spec, j, i)? * ideal_quasi_norm(fam, params, n, s_q))
    })?;
    let q_part = k_half.powf(-s_q) * l_q;
    Ok((2 * k_half as u64, p_part, q_part))
}

/// Upper bound on `a_k(id)` at `k = 2^{dM+1}` from the split into levels
/// `m <= M` and `m > M`, each summed in the ideal quasi-norm.
///
/// `Q` uses `1/s = 1/2` when that sum converges, otherwise the largest
/// exponent keeping its growth `margin/d` below `mu/d`.
pub fn two_part_bound(
    params: &EmbeddingParams,
    spec: &WeightSpec,
    m: u32,
    budget: &IdealBudget,
    cfg: &AllocConfig,
) -> Result<TwoPartBound> {
    check_dims(params, spec)?;
    let idx = spec.indices()?;
    let fam = family(params, cfg.lambda);
    let d = params.dim();
    let mu = idx.beta_phi.min(params.delta());
    let threshold = fam.two_part_threshold(d);
    if threshold > 0.0 && approx_eq(mu, threshold) {
        return Err(Error::LimitingCase(format!("mu = {mu} sits on the threshold {threshold}")));
    }
    if mu <= threshold {
        return Err(Error::WrongRegime(format!(
            "mu = {mu} does not exceed {threshold}; use three_part_bound"
        )));
    }
    let s_p = budget.s_recip();
    let s_q = if fam.growth(0.5) < mu / d {
        0.5
    } else {
        fam.s_recip_for_growth(mu / d - cfg.margin / d)
    };
    if !(s_q > 0.0) {
        return Err(Error::WrongRegime("no ideal exponent makes the Q part summable".into()));
    }
    let (k, p_part, q_part) = pq_bound(params, spec, m, s_p, s_q, cfg)?;
    let rho = params.rho();
    Ok(TwoPartBound {
        k,
        upper: rho_sum(&[p_part, q_part], rho),
        p_part,
        q_part,
        budget_p: *budget,
        budget_q: IdealBudget { r_recip: s_q - 0.5, rho },
    })
}

/// Per-block rank of an allocation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanBlock {
    pub j: u32,
    pub i: u32,
    pub k_ji: u64,
}

/// Rank budget of the three-part split.
///
/// `k_total = 1 + sum (k_ji - 1)` is the rank at which the bound holds;
/// `k_design` is the parameter `k` entering `M1`, `M2` and `k_ji`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub k_total: u64,
    pub k_design: u64,
    #[serde(rename = "M1")]
    pub m1: u32,
    #[serde(rename = "M2")]
    pub m2: u32,
    pub epsilon: f64,
    pub tau1: f64,
    pub tau2: f64,
    pub blocks: Vec<PlanBlock>,
}

impl AllocationPlan {
    /// Integer rank accounting and the full-rank rule below `M1`.
    pub fn verify(&self, d: u32) -> Result<()> {
        let spent: u128 = self.blocks.iter().map(|b| (b.k_ji - 1) as u128).sum();
        if spent >= self.k_total as u128 || spent + 1 != self.k_total as u128 {
            return Err(Error::Precondition(format!(
                "rank accounting broken: sum(k_ji - 1) = {spent}, k_total = {}",
                self.k_total
            )));
        }
        for b in &self.blocks {
            let full = idealized_card(d, b.j, b.i) as u64 + 1;
            if b.j + b.i <= self.m1 && b.k_ji != full {
                return Err(Error::Precondition(format!("block ({}, {}) below M1 is not fully resolved", b.j, b.i)));
            }
            if b.k_ji == 0 || b.k_ji > full {
                return Err(Error::Precondition(format!("block ({}, {}) has rank {} outside [1, M+1]", b.j, b.i, b.k_ji)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThreePartBound {
    pub plan: AllocationPlan,
    /// Upper bound on `a_{k_total}(id)`.
    pub upper: f64,
    pub delta2: f64,
    pub delta3: f64,
}

/// `(epsilon, tau1, tau2)` at the midpoints of the admissible boxes.
fn three_part_parameters(idx: &VIndices, delta: f64, d: f64, t_recip: f64) -> Result<(f64, f64, f64)> {
    let dt = d * t_recip;
    let (a, b) = (idx.alpha_phi, idx.beta_phi);
    let mid = |lo: f64, hi: f64| 0.5 * (lo + hi);
    if delta > a && !approx_eq(delta, a) {
        if !(a < dt) || approx_eq(a, dt) {
            return Err(Error::LimitingCase(format!("alpha_phi = {a} is not below d/t = {dt}")));
        }
        let tau1 = dt - a;
        let tau2 = mid((tau1 - 2.0 * (delta - a)).max(0.0), tau1);
        Ok((tau1 / (2.0 * dt), tau1, tau2))
    } else if delta < b && !approx_eq(delta, b) {
        if !(delta < dt) || approx_eq(delta, dt) {
            return Err(Error::LimitingCase(format!("delta = {delta} is not below d/t = {dt}")));
        }
        let tau2 = dt - delta;
        let tau1 = mid((tau2 - 2.0 * (b - delta)).max(0.0), tau2);
        Ok((tau2 / (2.0 * dt), tau1, tau2))
    } else {
        Err(Error::LimitingCase(format!("delta = {delta} is not separated from [{b}, {a}]")))
    }
}

/// Upper bound from the split into levels `m <= M1` (resolved exactly),
/// `M1 < m <= M2` (ranks `[k^{1-eps} 2^{i tau1} 2^{j tau2}]`), and `m > M2`
/// (block norms). The bound holds at rank `plan.k_total`.
pub fn three_part_bound(
    params: &EmbeddingParams,
    spec: &WeightSpec,
    k: u64,
    cfg: &AllocConfig,
) -> Result<ThreePartBound> {
    check_dims(params, spec)?;
    if k < 16 {
        return Err(Error::InvalidParams(format!("three-part split needs k >= 16, got {k}")));
    }
    let idx = spec.indices()?;
    let fam = family(params, cfg.lambda);
    let t_recip = match fam {
        TemplateFamily::Gluskin { t_recip } => t_recip,
        _ => return Err(Error::WrongRegime("three-part split needs p1 < 2 < p2".into())),
    };
    let d = params.dim();
    let delta = params.delta();
    let mu = idx.beta_phi.min(delta);
    if approx_eq(mu, d * t_recip) {
        return Err(Error::LimitingCase(format!("mu = {mu} sits on d/t = {}", d * t_recip)));
    }
    if !(mu < d * t_recip) {
        return Err(Error::WrongRegime(format!("mu = {mu} is not below d/t; use two_part_bound")));
    }
    let (epsilon, tau1, tau2) = three_part_parameters(&idx, delta, d, t_recip)?;
    let lk = (k as f64).log2();
    let m1 = strict_floor(lk / d - lk.log2() / d);
    let m2 = strict_floor(0.5 / t_recip * lk / d);
    if m1 < 0 || m2 <= m1 {
        return Err(Error::InvalidParams(format!("split levels M1 = {m1}, M2 = {m2} are degenerate")));
    }
    let (m1, m2) = (m1 as u32, m2 as u32);
    let base = (k as f64).powf(1.0 - epsilon);
    let mut blocks = Vec::new();
    for m in 0..=m2 {
        for (j, i) in level_blocks(m) {
            let full = idealized_card(params.d, j, i) + 1.0;
            let kji = if m <= m1 {
                full
            } else {
                (base * 2f64.powf(i as f64 * tau1 + j as f64 * tau2)).floor().clamp(1.0, full)
            };
            if kji > u64::MAX as f64 / 4.0 {
                return Err(Error::ResourceLimit("block rank exceeds u64".into()));
            }
            blocks.push(PlanBlock { j, i, k_ji: kji as u64 });
        }
    }
    let spent: u128 = blocks.iter().map(|b| (b.k_ji - 1) as u128).sum();
    let k_total = u64::try_from(spent + 1).map_err(|_| Error::ResourceLimit("k_total exceeds u64".into()))?;
    let plan = AllocationPlan { k_total, k_design: k, m1, m2, epsilon, tau1, tau2, blocks };
    plan.verify(params.d)?;

    let rho = params.rho();
    let mid_blocks: Vec<&PlanBlock> = plan.blocks.iter().filter(|b| b.j + b.i > m1).collect();
    let d2_terms: Vec<f64> = mid_blocks
        .par_iter()
        .map(|b| block_bound_f(params, spec, b.j, b.i, b.k_ji as f64, cfg.lambda))
        .collect::<Result<_>>()?;
    let delta2 = rho_sum(&d2_terms, rho);
    let delta3 = tail_sum(m2, cfg.tail_levels, rho, |j, i| block_scale(params, spec, j, i))?;
    Ok(ThreePartBound { upper: rho_sum(&[delta2, delta3], rho), plan, delta2, delta3 })
}

/// Which single-block family witnesses the lower bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessMode {
    /// Blocks `I_{j,0}`: the smoothness gap dominates.
    Delta,
    /// Blocks `I_{0,i}`: the weight dominates.
    Phi,
}

/// `Phi` when `alpha_phi < delta`, `Delta` when `delta < beta_phi`.
pub fn witness_mode(params: &EmbeddingParams, idx: &VIndices) -> Result<WitnessMode> {
    let delta = params.delta();
    if idx.alpha_phi < delta && !approx_eq(idx.alpha_phi, delta) {
        Ok(WitnessMode::Phi)
    } else if delta < idx.beta_phi && !approx_eq(delta, idx.beta_phi) {
        Ok(WitnessMode::Delta)
    } else {
        Err(Error::LimitingCase(format!(
            "delta = {delta} is not separated from [{}, {}]",
            idx.beta_phi, idx.alpha_phi
        )))
    }
}

/// Lower template bound on `a_k(id)` through a single block.
///
/// Walks up the witness family and uses the first block whose test rank
/// `m(N)` reaches `k`; then `a_k >= a_m >= 2^{-j delta} phi(2^i)^{-1} u_low(m, N)`.
pub fn lower_bound(params: &EmbeddingParams, spec: &WeightSpec, mode: WitnessMode, k: u64) -> Result<f64> {
    check_dims(params, spec)?;
    if k == 0 {
        return Err(Error::InvalidParams("k starts at 1".into()));
    }
    let idx = spec.indices()?;
    let fam = family(params, DEFAULT_LAMBDA);
    let mu = idx.beta_phi.min(params.delta());
    let d = params.dim();
    for level in 0..=400u32 {
        let (j, i) = match mode {
            WitnessMode::Delta => (level, 0),
            WitnessMode::Phi => (0, level),
        };
        let n = idealized_card(params.d, j, i);
        let m = match fam {
            TemplateFamily::Decreasing { .. } | TemplateFamily::Linf { .. } => (n / 2.0).floor(),
            TemplateFamily::Unit => (n / 4.0).floor(),
            TemplateFamily::Gluskin { t_recip } => {
                if mu > d * t_recip {
                    (n / 4.0).floor()
                } else {
                    n.powf(2.0 * t_recip).floor().min((n / 4.0).floor())
                }
            }
        };
        if m < k as f64 || m < 1.0 {
            continue;
        }
        let low = template_bounds(n, m, params.p1, params.p2, DEFAULT_LAMBDA).0;
        return Ok(block_scale(params, spec, j, i)? * low);
    }
    Err(Error::ResourceLimit(format!("no witness block reaches k = {k}")))
}

/// How strictly `sum_lemma_check` enforces hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LemmaMode {
    /// Evaluate only the sums whose hypothesis holds; error if none does.
    Strict,
    /// Evaluate all three sums regardless of hypotheses.
    Diagnostic,
}

/// Running suprema of the three sum-lemma expressions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumLemmaReport {
    pub sup_ar: Option<f64>,
    pub sup_rb1: Option<f64>,
    pub sup_rbm: Option<f64>,
    pub finite_ar: Option<bool>,
    pub finite_rb1: Option<bool>,
    pub finite_rbm: Option<bool>,
    pub all_finite: bool,
    /// Running maximum of `ln` of each evaluated sum, per `M = 1..=M_cap`.
    pub running_ln_ar: Vec<f64>,
    pub running_ln_rb1: Vec<f64>,
    pub running_ln_rbm: Vec<f64>,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let mx = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !mx.is_finite() {
        return mx;
    }
    mx + xs.iter().map(|x| (x - mx).exp()).sum::<f64>().ln()
}

const STABLE_WINDOW: usize = 5;
const STABLE_REL: f64 = 1e-3;

fn running_max(ln_vals: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ln_vals.len());
    let mut mx = f64::NEG_INFINITY;
    for &v in ln_vals {
        mx = mx.max(v);
        out.push(mx);
    }
    out
}

fn stabilized(running: &[f64]) -> bool {
    let n = running.len();
    if n <= STABLE_WINDOW || !running[n - 1].is_finite() {
        return false;
    }
    (running[n - 1] - running[n - 1 - STABLE_WINDOW]).exp_m1() < STABLE_REL
}

/// Evaluates the sums
/// `ar(M) = 2^{M eta rho} phi(2^M)^rho sum_{m<=M} 2^{-m gamma rho} 2^{-(M-m) eta rho} phi(2^{M-m})^{-rho}`,
/// `rb1(M) = 2^{M gamma rho} sum_{m<=M} 2^{-m gamma rho} 2^{-(M-m) eta rho} phi(2^{M-m})^{-rho}`,
/// `rbm(M) = phi(2^M)^rho 2^{-M gamma rho} sum_{m>M} 2^{m gamma rho} phi(2^m)^{-rho}`
/// for `M = 1..=m_cap` in log scale and reports whether each running maximum
/// has stabilized.
///
/// Hypotheses: `ar` needs `gamma > alpha_phi + eta`, `rb1` needs
/// `gamma < beta_phi + eta`, `rbm` needs `gamma < beta_phi`.
pub fn sum_lemma_check(
    spec: &WeightSpec,
    gamma: f64,
    eta: f64,
    rho: f64,
    m_cap: u32,
    mode: LemmaMode,
) -> Result<SumLemmaReport> {
    if !(rho > 0.0) || m_cap < 2 * STABLE_WINDOW as u32 {
        return Err(Error::InvalidParams("need rho > 0 and M_cap >= 10".into()));
    }
    let idx = spec.indices()?;
    let strictly = |lhs: f64, rhs: f64| lhs > rhs && !approx_eq(lhs, rhs);
    let hyp_ar = strictly(gamma, idx.alpha_phi + eta);
    let hyp_rb1 = strictly(idx.beta_phi + eta, gamma);
    let hyp_rbm = strictly(idx.beta_phi, gamma);
    let diag = mode == LemmaMode::Diagnostic;
    let (do_ar, do_rb1, do_rbm) = (diag || hyp_ar, diag || hyp_rb1, diag || hyp_rbm);
    if !(do_ar || do_rb1 || do_rbm) {
        return Err(Error::Precondition(format!(
            "no hypothesis holds for gamma = {gamma}, eta = {eta}, indices [{}, {}]",
            idx.beta_phi, idx.alpha_phi
        )));
    }
    let ln2 = std::f64::consts::LN_2;
    let lphi = |m: u32| spec.ln_phi(2f64.powi(m as i32));
    let lphis: Vec<f64> = (0..=m_cap).map(lphi).collect::<Result<_>>()?;

    let inner = |big_m: u32| -> Vec<f64> {
        (0..=big_m)
            .map(|m| {
                -(m as f64) * gamma * rho * ln2
                    - (big_m - m) as f64 * eta * rho * ln2
                    - rho * lphis[(big_m - m) as usize]
            })
            .collect()
    };
    let ms = 1..=m_cap;
    let ar: Vec<f64> = if do_ar {
        ms.clone()
            .map(|bm| bm as f64 * eta * rho * ln2 + rho * lphis[bm as usize] + log_sum_exp(&inner(bm)))
            .collect()
    } else {
        Vec::new()
    };
    let rb1: Vec<f64> = if do_rb1 {
        ms.clone().map(|bm| bm as f64 * gamma * rho * ln2 + log_sum_exp(&inner(bm))).collect()
    } else {
        Vec::new()
    };
    let rbm: Vec<f64> = if do_rbm {
        // tail sums S(M) = sum_{m>M} 2^{m gamma rho} phi(2^m)^{-rho}, summed upward until negligible
        let mut out = Vec::with_capacity(m_cap as usize);
        for bm in ms.clone() {
            let mut terms = Vec::new();
            let mut m = bm + 1;
            let mut acc = f64::NEG_INFINITY;
            loop {
                let lt = m as f64 * gamma * rho * ln2 - rho * lphi(m)?;
                terms.push(lt);
                acc = log_sum_exp(&[acc, lt]);
                if lt < acc - 40.0 || m > bm + 20_000 {
                    break;
                }
                m += 1;
            }
            let s = if m > bm + 20_000 { f64::INFINITY } else { log_sum_exp(&terms) };
            out.push(rho * lphis[bm as usize] - bm as f64 * gamma * rho * ln2 + s);
        }
        out
    } else {
        Vec::new()
    };

    let summarize = |on: bool, vals: &[f64]| -> (Option<f64>, Option<bool>, Vec<f64>) {
        if !on {
            return (None, None, Vec::new());
        }
        let run = running_max(vals);
        let sup = run.last().copied().map(f64::exp);
        (sup, Some(stabilized(&run)), run)
    };
    let (sup_ar, finite_ar, running_ln_ar) = summarize(do_ar, &ar);
    let (sup_rb1, finite_rb1, running_ln_rb1) = summarize(do_rb1, &rb1);
    let (sup_rbm, finite_rbm, running_ln_rbm) = summarize(do_rbm, &rbm);
    let all_finite = [finite_ar, finite_rb1, finite_rbm].iter().flatten().all(|&f| f);
    Ok(SumLemmaReport {
        sup_ar,
        sup_rb1,
        sup_rbm,
        finite_ar,
        finite_rb1,
        finite_rbm,
        all_finite,
        running_ln_ar,
        running_ln_rb1,
        running_ln_rbm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct An5Bound {
    /// Rank at which the bound holds, `2^{dM+1} <= k`.
    pub k_total: u64,
    pub upper: f64,
}

/// Upper bound for `p1 <= 1`, `p2 = inf` from the `l_p -> l_inf` template:
/// `1/s = 1/2 + X/d + margin/d` for `P` and `1/h = 1/(2(1-lambda))` for `Q`.
pub fn linf_target_bound(
    params: &EmbeddingParams,
    spec: &WeightSpec,
    k: u64,
    lambda: f64,
) -> Result<An5Bound> {
    check_dims(params, spec)?;
    if !(params.p1.value() <= 1.0 && params.p2.is_inf()) {
        return Err(Error::WrongRegime("needs p1 <= 1 and p2 = inf".into()));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParams(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    let idx = spec.indices()?;
    let d = params.dim();
    let mu = idx.beta_phi.min(params.delta());
    let kink = lambda / (2.0 * (1.0 - lambda));
    if !(kink < mu / d) || approx_eq(kink, mu / d) {
        return Err(Error::InvalidParams(format!(
            "lambda/(2(1-lambda)) = {kink} must stay below mu/d = {}",
            mu / d
        )));
    }
    if k < 2 {
        return Err(Error::InvalidParams("k must be at least 2".into()));
    }
    let cfg = AllocConfig { lambda, ..AllocConfig::default() };
    let m = (((k / 2) as f64).log2() / d).floor() as u32;
    let s_p = 0.5 + active_rate(&idx, params.delta()) / d + cfg.margin / d;
    let s_q = 1.0 / (2.0 * (1.0 - lambda));
    let (k_total, p_part, q_part) = pq_bound(params, spec, m, s_p, s_q, &cfg)?;
    Ok(An5Bound { k_total, upper: rho_sum(&[p_part, q_part], params.rho()) })
}
