//! Rate tables for approximation, Kolmogorov and Gelfand numbers of the
//! embedding, the exact diagonal-model oracle for `p2 < p1`, and log-log fits.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{build_grid, unit_ball_volume, weight_on_block, BlockGrid, GridMode, IDEALIZED_DM_MAX};
use crate::numeric::{approx_eq, hurwitz_zeta, linear_fit};
use crate::params::EmbeddingParams;
use crate::swidths::{Certainty, Runs, WidthCurve, WidthKind, DOUBLING_BOUND};
use crate::weights::{eval_weight, VIndices, WeightKind, WeightSpec};

/// Which table a prediction comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateTable {
    Approximation,
    Kolmogorov,
    Gelfand,
    /// Perturbed-polynomial weights `t^alpha psi(t)`, `delta > alpha`.
    ApproximationPerturbed,
    KolmogorovPerturbed,
    GelfandPerturbed,
}

impl RateTable {
    fn general(kind: WidthKind) -> Self {
        match kind {
            WidthKind::Approximation => RateTable::Approximation,
            WidthKind::Kolmogorov => RateTable::Kolmogorov,
            WidthKind::Gelfand => RateTable::Gelfand,
        }
    }

    fn perturbed(kind: WidthKind) -> Self {
        match kind {
            WidthKind::Approximation => RateTable::ApproximationPerturbed,
            WidthKind::Kolmogorov => RateTable::KolmogorovPerturbed,
            WidthKind::Gelfand => RateTable::GelfandPerturbed,
        }
    }
}

/// Asymptotic shape `s_k ~ form(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form")]
pub enum RateForm {
    /// `k^e`.
    PurePower { e: f64 },
    /// `k^e phi(k^g)^{-1}`.
    PhiPower { e: f64, g: f64 },
    /// `(int_{k^{1/d}}^inf psi(t)^{-p} dt/t)^{1/p}`.
    IntegralTail { p: f64 },
}

impl RateForm {
    /// The form at `k` with all constants set to 1.
    pub fn value(&self, spec: &WeightSpec, k: f64) -> Result<f64> {
        match *self {
            RateForm::PurePower { e } => Ok(k.powf(e)),
            RateForm::PhiPower { e, g } => Ok(k.powf(e) / spec.phi(k.powf(g))?),
            RateForm::IntegralTail { p } => integral_tail(spec, p, k),
        }
    }

    /// Log-log slope left after the `phi` factor's power part is kept and its
    /// slowly varying part removed.
    pub fn predicted_slope(&self, idx: &VIndices) -> f64 {
        match *self {
            RateForm::PurePower { e } => e,
            RateForm::PhiPower { e, g } => e - g * idx.alpha_phi,
            RateForm::IntegralTail { .. } => 0.0,
        }
    }
}

/// `((1 + ln k^{1/d})^{1-beta p} / (beta p - 1))^{1/p}` for `psi = (1 + ln t)^beta`.
pub fn integral_tail(spec: &WeightSpec, p: f64, k: f64) -> Result<f64> {
    match spec.kind {
        WeightKind::LogPerturbed { beta, .. } if beta * p > 1.0 => {
            let u = 1.0 + k.ln() / spec.dim as f64;
            Ok((u.powf(1.0 - beta * p) / (beta * p - 1.0)).powf(1.0 / p))
        }
        _ => Err(Error::UnsupportedFormula(
            "the integral tail has a closed form only for log-perturbed weights with beta p > 1".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub source: RateTable,
    /// Roman part and line within it, e.g. `iii.3`.
    pub case: String,
    pub form: RateForm,
}

fn lt(a: f64, b: f64) -> bool {
    a < b && !approx_eq(a, b)
}

/// Parameter region of a theorem: threshold, exponent of the upper lines,
/// and `g` of the lower lines when present.
#[derive(Debug, Clone, Copy)]
struct Region {
    part: &'static str,
    thr: f64,
    e1: f64,
    g3: Option<f64>,
}

fn region(params: &EmbeddingParams, kind: WidthKind) -> Region {
    let (a, b) = (params.p1.value(), params.p2.value());
    let d = params.dim();
    let (r1, r2) = (params.r1(), params.r2());
    let ii = Region { part: "ii", thr: d * params.p_recip(), e1: r2 - r1, g3: None };
    let i = Region { part: "i", thr: 0.0, e1: 0.0, g3: None };
    if b < a {
        return ii;
    }
    match kind {
        WidthKind::Approximation => {
            if b <= 2.0 || a >= 2.0 {
                i
            } else {
                let t = params.t();
                Region { part: "iii", thr: d * t.recip(), e1: t.recip() - 0.5, g3: Some(t.value() / (2.0 * d)) }
            }
        }
        WidthKind::Kolmogorov => {
            if b <= 2.0 || (a > 2.0 && a == b) {
                i
            } else if a < 2.0 {
                Region { part: "iii", thr: d * r2, e1: r2 - 0.5, g3: Some(b / (2.0 * d)) }
            } else {
                Region { part: "iv", thr: d * r2 * params.theta(), e1: r2 - r1, g3: Some(b / (2.0 * d)) }
            }
        }
        WidthKind::Gelfand => {
            let p1p = params.p1_prime();
            if a >= 2.0 || a == b {
                i
            } else if b > 2.0 {
                Region { part: "iii", thr: d * p1p.recip(), e1: 0.5 - r1, g3: Some(p1p.value() / (2.0 * d)) }
            } else {
                Region {
                    part: "iv",
                    thr: d * p1p.recip() * params.theta1(),
                    e1: r2 - r1,
                    g3: Some(p1p.value() / (2.0 * d)),
                }
            }
        }
    }
}

type Case = (String, bool, RateForm);

fn general_cases(params: &EmbeddingParams, idx: &VIndices, reg: Region) -> Vec<Case> {
    let (al, be, de) = (idx.alpha_phi, idx.beta_phi, params.delta());
    let d = params.dim();
    let thr = reg.thr;
    let pos = lt(0.0, be);
    let mut cases = vec![
        (
            format!("{}.1", reg.part),
            pos && lt(thr, be) && lt(al, de),
            RateForm::PhiPower { e: reg.e1, g: 1.0 / d },
        ),
        (
            format!("{}.2", reg.part),
            lt(thr, de) && lt(de, be),
            RateForm::PurePower { e: -de / d + reg.e1 },
        ),
    ];
    if let Some(g3) = reg.g3 {
        cases.push((format!("{}.3", reg.part), pos && lt(al, thr) && lt(al, de), RateForm::PhiPower { e: 0.0, g: g3 }));
        cases.push((format!("{}.4", reg.part), lt(de, be) && lt(de, thr), RateForm::PurePower { e: -g3 * de }));
    }
    cases
}

fn perturbed_cases(params: &EmbeddingParams, alpha: f64, beta: f64, reg: Region) -> Vec<Case> {
    let d = params.dim();
    let part = reg.part;
    match part {
        "i" => vec![(format!("{part}.1"), true, RateForm::PhiPower { e: 0.0, g: 1.0 / d })],
        "ii" => {
            let p = 1.0 / params.p_recip();
            vec![
                (format!("{part}.1"), lt(reg.thr, alpha), RateForm::PhiPower { e: reg.e1, g: 1.0 / d }),
                (
                    format!("{part}.2"),
                    approx_eq(alpha, reg.thr) && beta * p > 1.0 && !approx_eq(beta * p, 1.0),
                    RateForm::IntegralTail { p },
                ),
            ]
        }
        _ => vec![
            (format!("{part}.1"), lt(reg.thr, alpha), RateForm::PhiPower { e: reg.e1, g: 1.0 / d }),
            (format!("{part}.2"), lt(alpha, reg.thr), RateForm::PhiPower { e: 0.0, g: reg.g3.unwrap() }),
        ],
    }
}

fn select(source: RateTable, cases: Vec<Case>, not_compact: bool, why: String) -> Result<RatePrediction> {
    let hits: Vec<Case> = cases.into_iter().filter(|c| c.1).collect();
    match hits.len() {
        1 => {
            let (case, _, form) = hits.into_iter().next().unwrap();
            Ok(RatePrediction { source, case, form })
        }
        0 if not_compact => Err(Error::NotCompact(why)),
        0 => Err(Error::LimitingCase(why)),
        _ => Err(Error::Precondition(format!(
            "case table is ambiguous: {:?}",
            hits.iter().map(|c| &c.0).collect::<Vec<_>>()
        ))),
    }
}

/// Case ids of the general table whose hypotheses hold; at most one in the interior.
pub fn matching_cases(params: &EmbeddingParams, idx: &VIndices, kind: WidthKind) -> Vec<String> {
    general_cases(params, idx, region(params, kind)).into_iter().filter(|c| c.1).map(|c| c.0).collect()
}

/// Prediction from the general tables in terms of `alpha_phi`, `beta_phi`, `delta`.
pub fn predict(params: &EmbeddingParams, idx: &VIndices, kind: WidthKind) -> Result<RatePrediction> {
    let reg = region(params, kind);
    let mu = idx.beta_phi.min(params.delta());
    let not_compact = reg.part == "ii" && lt(mu, reg.thr);
    let why = format!(
        "alpha_phi = {}, beta_phi = {}, delta = {} at threshold {} of part {}",
        idx.alpha_phi,
        idx.beta_phi,
        params.delta(),
        reg.thr,
        reg.part
    );
    select(RateTable::general(kind), general_cases(params, idx, reg), not_compact, why)
}

/// Prediction for a concrete weight: polynomial and log-perturbed weights
/// with `delta > alpha` use the perturbed tables, everything else the general ones.
pub fn predict_for_weight(params: &EmbeddingParams, spec: &WeightSpec, kind: WidthKind) -> Result<RatePrediction> {
    let (alpha, beta) = match spec.kind {
        WeightKind::Polynomial { alpha } => (alpha, 0.0),
        WeightKind::LogPerturbed { alpha, beta } => (alpha, beta),
        WeightKind::CustomRadial { .. } => return predict(params, &spec.indices()?, kind),
    };
    let delta = params.delta();
    if approx_eq(alpha, delta) {
        return Err(Error::LimitingCase(format!("alpha = delta = {delta} is not covered")));
    }
    if alpha > delta || !(alpha > 0.0) {
        return predict(params, &spec.indices()?, kind);
    }
    let reg = region(params, kind);
    let not_compact = reg.part == "ii" && (lt(alpha, reg.thr) || approx_eq(alpha, reg.thr));
    let why = format!("alpha = {alpha}, beta = {beta} at threshold {} of part {}", reg.thr, reg.part);
    select(RateTable::perturbed(kind), perturbed_cases(params, alpha, beta, reg), not_compact, why)
}

/// How the diagonal entries of a block are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMode {
    /// `2^{-j delta} phi(2^i)^{-1}` repeated `M_{j,i}` times.
    Representative,
    /// `2^{-j delta} w(2^{-j} l)^{-1}` for every lattice point (exact grids only).
    PerSite,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagModelConfig {
    /// Allowed share of the beyond-grid mass in `h_k^p` when the grid does not
    /// contain all entries above `sigma_k`.
    pub rel_tol: f64,
    pub sigma: SigmaMode,
}

impl Default for DiagModelConfig {
    fn default() -> Self {
        DiagModelConfig { rel_tol: 1e-6, sigma: SigmaMode::Representative }
    }
}

/// Truncation record reported alongside every diagonal-model curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationAudit {
    #[serde(rename = "M_max")]
    pub m_max: u32,
    pub grid_mode: GridMode,
    pub sigma_mode: SigmaMode,
    /// `sum` of `sigma^p` over entries outside the grid (ball-volume cardinalities).
    pub beyond_mass: f64,
    /// Largest entry outside the grid.
    pub beyond_max: f64,
    pub grid_rank: f64,
    pub rel_tol: f64,
}

/// The embedding as a diagonal operator `l_p1 -> l_p2` on the truncated grid.
#[derive(Debug, Clone)]
pub struct DiagModel {
    runs: Runs,
    p: f64,
    params: EmbeddingParams,
    spec: WeightSpec,
    pub audit: TruncationAudit,
}

/// `sum_{i >= i0} 2^{id} phi(2^i)^{-p}` for every `i0 = 0..=top`.
fn weight_tails(spec: &WeightSpec, d: f64, p: f64, top: u32) -> Result<Vec<f64>> {
    let ln2 = std::f64::consts::LN_2;
    let far = match spec.kind {
        WeightKind::Polynomial { alpha } => {
            let c = alpha * p - d;
            if !(c > 0.0) || approx_eq(alpha * p, d) {
                return Err(Error::NotCompact(format!("alpha p = {} does not exceed d", alpha * p)));
            }
            2f64.powf(-(top as f64 + 1.0) * c) / (-(-c * ln2).exp_m1())
        }
        WeightKind::LogPerturbed { alpha, beta } => {
            let c = alpha * p - d;
            let bp = beta * p;
            if approx_eq(alpha * p, d) {
                if !(bp > 1.0) || approx_eq(bp, 1.0) {
                    return Err(Error::NotCompact(format!("beta p = {bp} does not exceed 1")));
                }
                ln2.powf(-bp) * hurwitz_zeta(bp, top as f64 + 1.0 + 1.0 / ln2)
            } else if c > 0.0 {
                let mut s = 0.0;
                let mut i = top as f64 + 1.0;
                loop {
                    let term = (-i * c * ln2).exp() * (1.0 + i * ln2).powf(-bp);
                    s += term;
                    if term <= 1e-18 * s || term == 0.0 {
                        break;
                    }
                    i += 1.0;
                }
                s
            } else {
                return Err(Error::NotCompact(format!("alpha p = {} is below d", alpha * p)));
            }
        }
        WeightKind::CustomRadial { .. } => {
            let imax = spec.t_max().unwrap_or(1.0).log2().floor() as u32;
            if imax < top + 3 {
                return Err(Error::TailBudget {
                    required_m_max: top,
                    reason: format!("custom profile ends at 2^{imax}, too short to bound the tail beyond 2^{top}"),
                });
            }
            let terms: Vec<f64> = (top + 1..=imax)
                .map(|i| Ok(2f64.powf(i as f64 * d) * spec.phi(2f64.powi(i as i32))?.powf(-p)))
                .collect::<Result<_>>()?;
            let n = terms.len();
            let q = terms[n - 1] / terms[n - 2];
            if !(q < 1.0) {
                return Err(Error::NotCompact("weight tail terms do not decrease".into()));
            }
            terms.iter().sum::<f64>() + terms[n - 1] * q / (1.0 - q)
        }
    };
    let mut out = vec![0.0; top as usize + 1];
    let mut acc = far;
    for i in (0..=top).rev() {
        acc += 2f64.powf(i as f64 * d) * spec.phi(2f64.powi(i as i32))?.powf(-p);
        out[i as usize] = acc;
    }
    Ok(out)
}

/// `sum` of `sigma^p` over blocks with `j + i > m_max`, with cardinality `v_d 2^{md}`.
pub fn beyond_grid_mass(params: &EmbeddingParams, spec: &WeightSpec, m_max: u32) -> Result<f64> {
    let p = 1.0 / params.p_recip();
    let d = params.dim();
    let cd = params.delta() * p - d;
    if !(cd > 0.0) {
        return Err(Error::NotCompact(format!("delta p = {} does not exceed d", params.delta() * p)));
    }
    let s = weight_tails(spec, d, p, m_max + 1)?;
    let ln2 = std::f64::consts::LN_2;
    let mut total = 0.0;
    for j in 0..=m_max + 1 {
        total += 2f64.powf(-(j as f64) * cd) * s[(m_max + 1 - j) as usize];
    }
    total += s[0] * 2f64.powf(-(m_max as f64 + 2.0) * cd) / (-(-cd * ln2).exp_m1());
    Ok(unit_ball_volume(params.d) * total)
}

fn beyond_grid_max(params: &EmbeddingParams, spec: &WeightSpec, m_max: u32) -> f64 {
    let delta = params.delta();
    let mut mx: f64 = 0.0;
    for m in m_max + 1..=m_max + 40 {
        for j in 0..=m {
            if let Ok(phi) = weight_on_block(spec, j, m - j) {
                mx = mx.max(2f64.powf(-(j as f64) * delta) / phi);
            }
        }
    }
    mx
}

/// Squared norms with multiplicities of all lattice points in the ball of radius `2^m`.
fn norm_histogram(d: u32, m: u32) -> Result<BTreeMap<u64, u128>> {
    let r = 1i64 << m;
    let points = (2 * r + 1) as f64;
    if points.powi(d as i32) > (1u64 << 26) as f64 || d > 3 {
        return Err(Error::ResourceLimit(format!("per-site enumeration of radius 2^{m} in d = {d} is too large")));
    }
    let r2 = (r * r) as u64;
    let mut hist = BTreeMap::new();
    let range = -r..=r;
    let mut add = |s: u64| {
        if s <= r2 {
            *hist.entry(s).or_insert(0u128) += 1;
        }
    };
    match d {
        1 => range.for_each(|x| add((x * x) as u64)),
        2 => {
            for x in range.clone() {
                for y in range.clone() {
                    add((x * x + y * y) as u64);
                }
            }
        }
        _ => {
            for x in range.clone() {
                for y in range.clone() {
                    for z in range.clone() {
                        add((x * x + y * y + z * z) as u64);
                    }
                }
            }
        }
    }
    Ok(hist)
}

impl DiagModel {
    pub fn new(params: &EmbeddingParams, spec: &WeightSpec, grid: &BlockGrid, cfg: DiagModelConfig) -> Result<Self> {
        if !params.is_diagonal_model() {
            return Err(Error::Precondition("the diagonal model needs p2 < p1, q1 = p1, q2 = p2".into()));
        }
        if spec.dim != params.d || grid.d != params.d {
            return Err(Error::InvalidParams("weight, grid and embedding dimensions differ".into()));
        }
        let p = 1.0 / params.p_recip();
        let delta = params.delta();
        let pairs: Vec<(f64, u128)> = match cfg.sigma {
            SigmaMode::Representative => grid
                .blocks
                .par_iter()
                .map(|b| Ok((2f64.powf(-(b.j as f64) * delta) / weight_on_block(spec, b.j, b.i)?, b.card)))
                .collect::<Result<_>>()?,
            SigmaMode::PerSite => {
                if grid.mode != GridMode::Exact {
                    return Err(Error::Precondition("per-site entries need an exact grid".into()));
                }
                let hist = norm_histogram(params.d, grid.m_max)?;
                let mut pairs = Vec::new();
                for b in &grid.blocks {
                    let m = b.j + b.i;
                    let outer = 1u64 << (2 * m);
                    let inner = if b.i == 0 { None } else { Some(1u64 << (2 * (m - 1))) };
                    for (&s, &c) in hist.range(..=outer) {
                        if inner.is_some_and(|lo| s <= lo) {
                            continue;
                        }
                        let x = (s as f64).sqrt() * 2f64.powi(-(b.j as i32));
                        pairs.push((2f64.powf(-(b.j as f64) * delta) / eval_weight(spec, x)?, c));
                    }
                }
                pairs
            }
        };
        let runs = Runs::new(pairs, p);
        let audit = TruncationAudit {
            m_max: grid.m_max,
            grid_mode: grid.mode,
            sigma_mode: cfg.sigma,
            beyond_mass: beyond_grid_mass(params, spec, grid.m_max)?,
            beyond_max: beyond_grid_max(params, spec, grid.m_max),
            grid_rank: runs.count() as f64,
            rel_tol: cfg.rel_tol,
        };
        Ok(DiagModel { runs, p, params: *params, spec: spec.clone(), audit })
    }

    /// `h_k` from the grid alone, ignoring entries beyond it.
    pub fn h_grid(&self, k: u64) -> f64 {
        self.runs.tail_pow(k as u128).powf(1.0 / self.p)
    }

    /// `h_k = (grid tail + beyond-grid mass)^{1/p}`, or a tail-budget error
    /// when the truncation may move `h_k^p` by more than `rel_tol`.
    pub fn h(&self, k: u64) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidParams("k starts at 1".into()));
        }
        let grid_tail = self.runs.tail_pow(k as u128);
        let hp = grid_tail + self.audit.beyond_mass;
        let exact = (k as u128) <= self.runs.count() && self.runs.value_at(k as u128) >= self.audit.beyond_max;
        if !exact && self.audit.beyond_mass > self.audit.rel_tol * hp {
            return Err(Error::TailBudget {
                required_m_max: self.required_m_max(grid_tail),
                reason: format!(
                    "beyond-grid mass {:e} exceeds {} of h_{k}^p = {:e} at M_max = {}",
                    self.audit.beyond_mass, self.audit.rel_tol, hp, self.audit.m_max
                ),
            });
        }
        Ok(hp.powf(1.0 / self.p))
    }

    fn required_m_max(&self, grid_tail: f64) -> u32 {
        let cap = IDEALIZED_DM_MAX / self.params.d;
        (self.audit.m_max + 1..=cap)
            .find(|&m| {
                beyond_grid_mass(&self.params, &self.spec, m)
                    .map(|b| b <= self.audit.rel_tol * (grid_tail + b))
                    .unwrap_or(false)
            })
            .unwrap_or(cap + 1)
    }

    pub fn widths(&self, ks: &[u64], kind: WidthKind) -> Result<WidthCurve> {
        let values: Vec<f64> = ks.par_iter().map(|&k| self.h(k)).collect::<Result<_>>()?;
        let certainty = match kind {
            WidthKind::Approximation | WidthKind::Gelfand => Certainty::Exact,
            WidthKind::Kolmogorov => {
                for (&k, &v) in ks.iter().zip(&values) {
                    let v2 = self.h(2 * k)?;
                    if v2 > 0.0 && v / v2 > DOUBLING_BOUND {
                        return Err(Error::DoublingViolation { k, ratio: v / v2, bound: DOUBLING_BOUND });
                    }
                }
                Certainty::Equivalent
            }
        };
        Ok(WidthCurve { kind, ks: ks.to_vec(), values, certainty })
    }
}

/// Exact `a_k = c_k = h_k` (and `d_k ~ h_k`) of the embedding in the diagonal setting.
pub fn diag_model_widths(
    params: &EmbeddingParams,
    spec: &WeightSpec,
    grid: &BlockGrid,
    ks: &[u64],
    kind: WidthKind,
    cfg: DiagModelConfig,
) -> Result<WidthCurve> {
    DiagModel::new(params, spec, grid, cfg)?.widths(ks, kind)
}

/// Smallest idealized grid from `m_start` upward whose truncation is certified for all `ks`.
pub fn diag_model_auto(
    params: &EmbeddingParams,
    spec: &WeightSpec,
    ks: &[u64],
    kind: WidthKind,
    m_start: u32,
    cfg: DiagModelConfig,
) -> Result<(WidthCurve, TruncationAudit)> {
    let cap = IDEALIZED_DM_MAX / params.d;
    let mut m = m_start.min(cap);
    loop {
        let grid = build_grid(params.d, m, GridMode::Idealized)?;
        let model = DiagModel::new(params, spec, &grid, cfg)?;
        match model.widths(ks, kind) {
            Ok(curve) => return Ok((curve, model.audit)),
            Err(Error::TailBudget { required_m_max, .. }) if required_m_max <= cap && required_m_max > m => {
                m = required_m_max;
            }
            Err(Error::TailBudget { .. }) if m < cap => m = (m + 8).min(cap),
            Err(e) => return Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub fitted_slope: f64,
    pub predicted_slope: f64,
    pub residual_rms: f64,
    pub k_range: [u64; 2],
    pub pass: bool,
    /// `max/min` of value over form, for integral-tail predictions.
    pub ratio_spread: Option<f64>,
    pub points: usize,
}

impl FitReport {
    pub fn summary(&self) -> String {
        let verdict = if self.pass { "pass" } else { "fail" };
        match self.ratio_spread {
            Some(s) => format!(
                "{verdict}: ratio spread {s:.4} over k = {}..{} ({} points)",
                self.k_range[0], self.k_range[1], self.points
            ),
            None => format!(
                "{verdict}: slope {:.4} vs predicted {:.4} over k = {}..{} ({} points, rms {:.2e})",
                self.fitted_slope, self.predicted_slope, self.k_range[0], self.k_range[1], self.points, self.residual_rms
            ),
        }
    }
}

/// Ratio spread allowed for integral-tail comparisons.
pub const RATIO_SPREAD_MAX: f64 = 1.5;

/// Default slope tolerance for a curve of the given certainty.
pub fn default_tol(c: Certainty) -> f64 {
    match c {
        Certainty::Template => 0.1,
        Certainty::Exact | Certainty::Equivalent => 0.05,
    }
}

/// Least-squares slope of the corrected curve on its dyadic points.
///
/// Without a window the smallest dyadic decade is dropped when at least six
/// points remain.
pub fn fit(
    curve: &WidthCurve,
    prediction: &RatePrediction,
    spec: &WeightSpec,
    k_window: Option<(u64, u64)>,
    tol: Option<f64>,
) -> Result<FitReport> {
    let dyadic: Vec<(u64, f64)> =
        curve.ks.iter().zip(&curve.values).filter(|(k, _)| k.is_power_of_two()).map(|(&k, &v)| (k, v)).collect();
    let pts: Vec<(u64, f64)> = match k_window {
        Some((lo, hi)) => dyadic.into_iter().filter(|&(k, _)| k >= lo && k <= hi).collect(),
        None => {
            let kmin = dyadic.iter().map(|p| p.0).min().unwrap_or(1);
            let trimmed: Vec<_> = dyadic.iter().copied().filter(|&(k, _)| k >= kmin.saturating_mul(8)).collect();
            if trimmed.len() >= 6 {
                trimmed
            } else {
                dyadic
            }
        }
    };
    if pts.len() < 6 {
        return Err(Error::Precondition(format!("fit needs at least 6 dyadic points, got {}", pts.len())));
    }
    if let Some(&(k, v)) = pts.iter().find(|(_, v)| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateCurve(format!("value {v} at k = {k}")));
    }
    let idx = spec.indices()?;
    let xs: Vec<f64> = pts.iter().map(|&(k, _)| (k as f64).ln()).collect();
    let ys: Vec<f64> = pts
        .iter()
        .map(|&(k, v)| {
            let kf = k as f64;
            Ok(match prediction.form {
                RateForm::PurePower { .. } => v.ln(),
                RateForm::PhiPower { g, .. } => v.ln() + spec.ln_phi(kf.powf(g))? - g * idx.alpha_phi * kf.ln(),
                RateForm::IntegralTail { p } => v.ln() - integral_tail(spec, p, kf)?.ln(),
            })
        })
        .collect::<Result<_>>()?;
    let (slope, _, rms) = linear_fit(&xs, &ys);
    let predicted = prediction.form.predicted_slope(&idx);
    let tol = tol.unwrap_or_else(|| default_tol(curve.certainty));
    let (pass, spread) = match prediction.form {
        RateForm::IntegralTail { .. } => {
            let mx = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mn = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let s = (mx - mn).exp();
            (s <= RATIO_SPREAD_MAX, Some(s))
        }
        _ => ((slope - predicted).abs() <= tol, None),
    };
    Ok(FitReport {
        fitted_slope: slope,
        predicted_slope: predicted,
        residual_rms: rms,
        k_range: [pts[0].0, pts[pts.len() - 1].0],
        pass,
        ratio_spread: spread,
        points: pts.len(),
    })
}

/// `2^a, ..., 2^b`.
pub fn dyadic_range(a: u32, b: u32) -> Vec<u64> {
    (a..=b).map(|e| 1u64 << e).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Exponent;
    use crate::weights::Certification;

    fn e(p: f64) -> Exponent {
        Exponent::new(p).unwrap()
    }

    fn poly(alpha: f64) -> VIndices {
        VIndices { alpha_phi: alpha, beta_phi: alpha, certified: Certification::Analytic }
    }

    #[test]
    fn first_part_lines() {
        let p = EmbeddingParams::from_delta(1, 2.0, e(2.0), e(2.0)).unwrap();
        let r = predict(&p, &poly(1.0), WidthKind::Approximation).unwrap();
        assert_eq!(r.case, "i.1");
        assert_eq!(r.form, RateForm::PhiPower { e: 0.0, g: 1.0 });
        let r = predict(&p, &poly(3.0), WidthKind::Approximation).unwrap();
        assert_eq!(r.form, RateForm::PurePower { e: -2.0 });
    }

    #[test]
    fn kolmogorov_gelfand_asymmetry() {
        let p = EmbeddingParams::from_delta(1, 2.0, e(1.0), e(2.0)).unwrap();
        let kn = predict(&p, &poly(1.0), WidthKind::Kolmogorov).unwrap();
        let gn = predict(&p, &poly(1.0), WidthKind::Gelfand).unwrap();
        assert_eq!((kn.source, kn.case.as_str()), (RateTable::Kolmogorov, "i.1"));
        assert_eq!((gn.source, gn.case.as_str()), (RateTable::Gelfand, "iv.1"));
        assert_ne!(kn.form, gn.form);
    }

    #[test]
    fn boundaries_give_no_prediction() {
        let p = EmbeddingParams::from_delta(1, 2.0, e(2.0), e(2.0)).unwrap();
        assert!(matches!(predict(&p, &poly(2.0), WidthKind::Approximation), Err(Error::LimitingCase(_))));
        let q = EmbeddingParams::from_delta(1, 3.0, Exponent::INF, e(1.0)).unwrap();
        assert!(matches!(predict(&q, &poly(0.5), WidthKind::Approximation), Err(Error::NotCompact(_))));
        assert!(matches!(predict(&q, &poly(1.0), WidthKind::Approximation), Err(Error::LimitingCase(_))));
    }

    #[test]
    fn integral_tail_routing() {
        let q = EmbeddingParams::from_delta(1, 3.0, Exponent::INF, e(1.0)).unwrap();
        let w = WeightSpec::log_perturbed(1.0, 2.0, 1).unwrap();
        let r = predict_for_weight(&q, &w, WidthKind::Gelfand).unwrap();
        assert_eq!(r.source, RateTable::GelfandPerturbed);
        assert_eq!(r.form, RateForm::IntegralTail { p: 1.0 });
        let w = WeightSpec::log_perturbed(1.0, 0.5, 1).unwrap();
        assert!(matches!(predict_for_weight(&q, &w, WidthKind::Gelfand), Err(Error::NotCompact(_))));
    }

    #[test]
    fn single_block_grid() {
        let q = EmbeddingParams::from_delta(1, 3.0, Exponent::INF, e(1.0)).unwrap();
        let w = WeightSpec::polynomial(2.0, 1).unwrap();
        let grid = build_grid(1, 0, GridMode::Idealized).unwrap();
        let model = DiagModel::new(&q, &w, &grid, DiagModelConfig::default()).unwrap();
        // one entry 1 with multiplicity 2: h_1 = 2, h_2 = 1, ignoring the tail
        assert_eq!(model.h_grid(1), 2.0);
        assert_eq!(model.h_grid(2), 1.0);
    }

    #[test]
    fn fit_exact_line() {
        let ks = dyadic_range(0, 12);
        let values = ks.iter().map(|&k| 1.0 / k as f64).collect();
        let curve = WidthCurve { kind: WidthKind::Approximation, ks, values, certainty: Certainty::Exact };
        let w = WeightSpec::polynomial(1.0, 1).unwrap();
        let pred = RatePrediction { source: RateTable::Approximation, case: "i.2".into(), form: RateForm::PurePower { e: -1.0 } };
        let r = fit(&curve, &pred, &w, None, None).unwrap();
        assert!((r.fitted_slope + 1.0).abs() < 1e-12 && r.pass);
        let wrong = RatePrediction { form: RateForm::PurePower { e: -2.0 }, ..pred };
        assert!(!fit(&curve, &wrong, &w, None, None).unwrap().pass);
    }
}
