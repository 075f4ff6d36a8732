//! Radial weights, their growth profiles `phi`, the indices `alpha_phi`,
//! `beta_phi`, and the compactness criterion of the embedding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{adaptive_simpson, approx_eq};
pub use crate::params::{EmbeddingParams, Exponent};

/// Parametric family of the weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightKind {
    /// `w(x) = (1+|x|^2)^{alpha/2}`, profile `phi(t) = t^alpha`.
    Polynomial { alpha: f64 },
    /// `w(x) = (1+|x|^2)^{alpha/2} (1+ln|x|)^beta` for `|x| >= 1`.
    LogPerturbed { alpha: f64, beta: f64 },
    /// Sampled profile on `[1, t_max]`, interpolated linearly in log-log scale.
    CustomRadial { t: Vec<f64>, phi: Vec<f64> },
}

/// A weight on `R^d` together with its associated profile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeight")]
pub struct WeightSpec {
    #[serde(flatten)]
    pub kind: WeightKind,
    pub dim: u32,
}

#[derive(Deserialize)]
struct RawWeight {
    #[serde(flatten)]
    kind: WeightKind,
    dim: u32,
}

impl TryFrom<RawWeight> for WeightSpec {
    type Error = Error;
    fn try_from(r: RawWeight) -> Result<Self> {
        WeightSpec::new(r.kind, r.dim)
    }
}

/// How an index pair was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Certification {
    Analytic,
    Numeric,
}

/// Upper and lower growth indices of the profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VIndices {
    pub alpha_phi: f64,
    pub beta_phi: f64,
    pub certified: Certification,
}

/// Log-spaced grids used for numeric index estimation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexGrid {
    pub t_count: usize,
    pub s_count: usize,
    pub t_max: f64,
}

impl Default for IndexGrid {
    fn default() -> Self {
        IndexGrid { t_count: 512, s_count: 512, t_max: 2f64.powi(24) }
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

impl WeightSpec {
    pub fn new(kind: WeightKind, dim: u32) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidWeight("dimension must be positive".into()));
        }
        match &kind {
            WeightKind::Polynomial { alpha } => {
                if !(alpha.is_finite() && *alpha > 0.0) {
                    return Err(Error::InvalidWeight(format!("polynomial alpha must be > 0, got {alpha}")));
                }
            }
            WeightKind::LogPerturbed { alpha, beta } => {
                if !(alpha.is_finite() && *alpha >= 0.0 && beta.is_finite()) {
                    return Err(Error::InvalidWeight(format!(
                        "log-perturbed weight needs alpha >= 0 and finite beta, got ({alpha}, {beta})"
                    )));
                }
            }
            WeightKind::CustomRadial { t, phi } => {
                if t.len() < 2 || t.len() != phi.len() {
                    return Err(Error::InvalidWeight(
                        "custom profile needs matching t and phi arrays of length >= 2".into(),
                    ));
                }
                if t[0] != 1.0 {
                    return Err(Error::InvalidWeight("custom profile abscissae must start at 1".into()));
                }
                if t.windows(2).any(|w| !(w[1] > w[0])) || !t.iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidWeight("custom abscissae must be strictly increasing".into()));
                }
                if !phi.iter().all(|v| v.is_finite() && *v > 0.0) {
                    return Err(Error::InvalidWeight("custom profile values must be positive".into()));
                }
            }
        }
        Ok(WeightSpec { kind, dim })
    }

    pub fn polynomial(alpha: f64, dim: u32) -> Result<Self> {
        WeightSpec::new(WeightKind::Polynomial { alpha }, dim)
    }

    pub fn log_perturbed(alpha: f64, beta: f64, dim: u32) -> Result<Self> {
        WeightSpec::new(WeightKind::LogPerturbed { alpha, beta }, dim)
    }

    /// Samples `f` at `n` log-spaced points of `[1, t_max]`.
    pub fn sampled<F: Fn(f64) -> f64>(f: F, t_max: f64, n: usize, dim: u32) -> Result<Self> {
        let t = log_grid(1.0, t_max, n);
        let phi = t.iter().map(|&x| f(x)).collect();
        WeightSpec::new(WeightKind::CustomRadial { t, phi }, dim)
    }

    /// Right end of the sampled range, if the profile is sampled.
    pub fn t_max(&self) -> Option<f64> {
        match &self.kind {
            WeightKind::CustomRadial { t, .. } => t.last().copied(),
            _ => None,
        }
    }

    /// `ln phi(t)`; arguments below 1 are clamped to 1.
    pub fn ln_phi(&self, t: f64) -> Result<f64> {
        let t = t.max(1.0);
        match &self.kind {
            WeightKind::Polynomial { alpha } => Ok(alpha * t.ln()),
            WeightKind::LogPerturbed { alpha, beta } => Ok(alpha * t.ln() + beta * t.ln().ln_1p()),
            WeightKind::CustomRadial { t: ts, phi } => {
                let t_max = *ts.last().unwrap();
                if t > t_max * (1.0 + 1e-12) {
                    return Err(Error::OutOfRange { x: t, t_max });
                }
                let idx = ts.partition_point(|&x| x <= t).clamp(1, ts.len() - 1);
                let (t0, t1) = (ts[idx - 1].ln(), ts[idx].ln());
                let (f0, f1) = (phi[idx - 1].ln(), phi[idx].ln());
                let lam = ((t.ln() - t0) / (t1 - t0)).clamp(0.0, 1.0);
                Ok(f0 + lam * (f1 - f0))
            }
        }
    }

    /// Profile `phi(t)` for `t >= 1` (clamped below).
    pub fn phi(&self, t: f64) -> Result<f64> {
        self.ln_phi(t).map(f64::exp)
    }

    /// Largest and smallest values of `phi(ts)/phi(s)` over `s >= 1`.
    pub fn envelopes(&self, t: f64) -> Result<(f64, f64)> {
        let t = t.max(1.0);
        match &self.kind {
            WeightKind::Polynomial { alpha } => {
                let v = t.powf(*alpha);
                Ok((v, v))
            }
            WeightKind::LogPerturbed { alpha, beta } => {
                let v = t.powf(*alpha);
                let g = t.ln().ln_1p() * beta;
                Ok((v * g.min(0.0).exp(), v * g.max(0.0).exp()))
            }
            WeightKind::CustomRadial { .. } => {
                let t_max = self.t_max().unwrap();
                let s_hi = (t_max / t).max(1.0);
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for s in log_grid(1.0, s_hi, 512) {
                    let r = self.ln_phi((t * s).min(t_max))? - self.ln_phi(s)?;
                    lo = lo.min(r);
                    hi = hi.max(r);
                }
                Ok((lo.exp(), hi.exp()))
            }
        }
    }

    /// Analytic indices, or a numeric estimate on the default grid.
    pub fn indices(&self) -> Result<VIndices> {
        estimate_indices(self, IndexGrid::default())
    }
}

/// `w(x)` at any point with `|x| = x_norm`.
pub fn eval_weight(spec: &WeightSpec, x_norm: f64) -> Result<f64> {
    if !(x_norm.is_finite() && x_norm >= 0.0) {
        return Err(Error::InvalidParams(format!("x_norm must be finite and >= 0, got {x_norm}")));
    }
    match &spec.kind {
        WeightKind::Polynomial { alpha } => Ok((1.0 + x_norm * x_norm).powf(alpha / 2.0)),
        WeightKind::LogPerturbed { alpha, beta } => {
            let psi = if x_norm >= 1.0 { (1.0 + x_norm.ln()).powf(*beta) } else { 1.0 };
            Ok((1.0 + x_norm * x_norm).powf(alpha / 2.0) * psi)
        }
        WeightKind::CustomRadial { .. } => spec.phi(x_norm),
    }
}

/// Upper index `alpha_phi` and lower index `beta_phi`.
///
/// Built-in families return their exact index. Sampled profiles are scanned
/// over `t` in `[1+1e-3, t_max]` and `s` in `[1, t_max/t]`.
pub fn estimate_indices(spec: &WeightSpec, grid: IndexGrid) -> Result<VIndices> {
    match &spec.kind {
        WeightKind::Polynomial { alpha } | WeightKind::LogPerturbed { alpha, .. } => Ok(VIndices {
            alpha_phi: *alpha,
            beta_phi: *alpha,
            certified: Certification::Analytic,
        }),
        WeightKind::CustomRadial { .. } => {
            if grid.t_count < 16 || grid.s_count < 16 || grid.t_max < 2.0 {
                return Err(Error::InvalidParams("index grid needs >= 16 points per axis and t_max >= 2".into()));
            }
            let t_max = grid.t_max.min(spec.t_max().unwrap());
            if t_max <= 1.0 + 1e-3 {
                return Err(Error::InvalidWeight("sampled range too short for index estimation".into()));
            }
            let mut alpha = f64::INFINITY;
            let mut beta = f64::NEG_INFINITY;
            for t in log_grid(1.0 + 1e-3, t_max, grid.t_count) {
                let lt = t.ln();
                let mut up = f64::NEG_INFINITY;
                let mut low = f64::INFINITY;
                for s in log_grid(1.0, (t_max / t).max(1.0), grid.s_count) {
                    let r = spec.ln_phi((t * s).min(t_max))? - spec.ln_phi(s)?;
                    up = up.max(r);
                    low = low.min(r);
                }
                alpha = alpha.min(up / lt);
                beta = beta.max(low / lt);
            }
            Ok(VIndices { alpha_phi: alpha, beta_phi: beta.min(alpha), certified: Certification::Numeric })
        }
    }
}

/// Largest constant a sandwich check may accept before declaring failure.
pub const SANDWICH_C_MAX: f64 = 1e3;

/// Smallest `c` with `c^{-1} s^{beta-eps} <= phi(s)/phi(1) <= c s^{alpha+eps}`
/// on a log grid of `[1, s_max]`.
pub fn sandwich_constant(spec: &WeightSpec, idx: &VIndices, epsilon: f64, s_max: f64) -> Result<f64> {
    let s_max = spec.t_max().map_or(s_max, |t| t.min(s_max));
    let base = spec.ln_phi(1.0)?;
    let mut c: f64 = 0.0;
    for s in log_grid(1.0, s_max.max(1.0), 2048) {
        let r = spec.ln_phi(s)? - base;
        let ls = s.ln();
        c = c.max(r - (idx.alpha_phi + epsilon) * ls);
        c = c.max((idx.beta_phi - epsilon) * ls - r);
    }
    Ok(c.exp())
}

/// True iff one constant `c <= SANDWICH_C_MAX` makes both power bounds hold
/// on the grid, using the weight's own indices.
pub fn sandwich_check(spec: &WeightSpec, epsilon: f64, s_max: f64) -> bool {
    if !(epsilon > 0.0) {
        return false;
    }
    spec.indices()
        .and_then(|idx| sandwich_constant(spec, &idx, epsilon, s_max))
        .map_or(false, |c| c <= SANDWICH_C_MAX)
}

/// Quadrature settings for the weight integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub t_max: f64,
    pub rel_tol: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { t_max: 2f64.powi(24), rel_tol: 1e-8 }
    }
}

/// Which clause decided compactness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompactReason {
    /// `p* = inf` and the profile grows (`beta_phi > 0` or closed form).
    WeightGrows,
    /// `p* = inf` and the profile stays bounded.
    WeightBounded,
    /// `p* = inf`, sampled profile, decided from growth over the sampled range.
    GrowthHeuristic,
    /// `delta <= d/p*`.
    DeltaBelowThreshold,
    /// Polynomial weight, `min(alpha, delta) > d/p*` decides.
    ClosedFormPolynomial,
    /// Log-perturbed weight away from `alpha = d/p*`.
    ClosedFormLogInterior,
    /// Log-perturbed weight at `alpha = d/p*`, decided by `beta p* > 1`.
    ClosedFormLogBoundary,
    /// Dyadic window integrals decay geometrically.
    QuadratureGeometricTail,
    /// Dyadic window integrals decay like a power of `u = ln t`.
    QuadraturePowerTail,
    /// Window integrals decay no faster than `u^{-1}`.
    QuadratureDivergent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Compactness {
    pub compact: bool,
    pub reason: CompactReason,
    pub heuristic: bool,
}

fn verdict(compact: bool, reason: CompactReason) -> Result<Compactness> {
    Ok(Compactness { compact, reason, heuristic: false })
}

/// Decides compactness of the embedding from the weight and `(delta, p*)`.
pub fn compactness_test(params: &EmbeddingParams, spec: &WeightSpec, quad: QuadConfig) -> Result<Compactness> {
    if spec.dim != params.d {
        return Err(Error::InvalidParams(format!(
            "weight dimension {} differs from embedding dimension {}",
            spec.dim, params.d
        )));
    }
    let delta = params.delta();
    let d = params.dim();
    if let WeightKind::Polynomial { alpha } | WeightKind::LogPerturbed { alpha, .. } = spec.kind {
        if approx_eq(alpha, delta) {
            return Err(Error::LimitingCase(format!("alpha = delta = {alpha}")));
        }
    }
    let ps = params.p_star_recip();
    if ps == 0.0 {
        return match &spec.kind {
            WeightKind::Polynomial { .. } => verdict(true, CompactReason::WeightGrows),
            WeightKind::LogPerturbed { alpha, beta } => {
                let grows = *alpha > 0.0 || *beta > 0.0;
                let reason = if grows { CompactReason::WeightGrows } else { CompactReason::WeightBounded };
                verdict(grows, reason)
            }
            WeightKind::CustomRadial { t, phi } => {
                let idx = spec.indices()?;
                if idx.beta_phi > 0.0 {
                    return verdict(true, CompactReason::WeightGrows);
                }
                // growth by a factor 2 over the upper half of the sampled log-range
                let t_mid = (t.last().unwrap().ln() / 2.0).exp();
                let grows = phi.last().unwrap() / spec.phi(t_mid)? >= 2.0;
                Ok(Compactness { compact: grows, reason: CompactReason::GrowthHeuristic, heuristic: true })
            }
        };
    }
    let threshold = d * ps;
    if delta <= threshold || approx_eq(delta, threshold) {
        return verdict(false, CompactReason::DeltaBelowThreshold);
    }
    match &spec.kind {
        WeightKind::Polynomial { alpha } => {
            verdict(*alpha > threshold && !approx_eq(*alpha, threshold), CompactReason::ClosedFormPolynomial)
        }
        WeightKind::LogPerturbed { alpha, beta } => {
            if approx_eq(*alpha, threshold) {
                let bp = beta / ps;
                verdict(bp > 1.0 && !approx_eq(bp, 1.0), CompactReason::ClosedFormLogBoundary)
            } else {
                verdict(*alpha > threshold, CompactReason::ClosedFormLogInterior)
            }
        }
        WeightKind::CustomRadial { .. } => weight_integral_test(spec, d, 1.0 / ps, quad),
    }
}

/// Integral `int_1^T phi(t)^{-p*} t^d dt/t` in `u = ln t`, split into windows
/// of width `ln 2`; the decay of the window integrals decides convergence.
fn weight_integral_test(spec: &WeightSpec, d: f64, p_star: f64, quad: QuadConfig) -> Result<Compactness> {
    let t_max = quad.t_max.min(spec.t_max().unwrap());
    let w = std::f64::consts::LN_2;
    let n_windows = (t_max.ln() / w).floor() as usize;
    if n_windows < 8 {
        return Err(Error::Precondition("integral test needs t_max >= 2^8".into()));
    }
    let f = |u: f64| -> f64 {
        let lp = spec.ln_phi(u.exp()).unwrap_or(f64::INFINITY);
        (-p_star * lp + d * u).exp()
    };
    let parts: Vec<f64> = (0..n_windows)
        .map(|n| adaptive_simpson(&f, n as f64 * w, (n + 1) as f64 * w, quad.rel_tol).value)
        .collect();
    let tail = &parts[n_windows - 8..];
    let geometric = tail.windows(2).all(|p| p[1] <= 0.95 * p[0]);
    if geometric {
        return Ok(Compactness { compact: true, reason: CompactReason::QuadratureGeometricTail, heuristic: true });
    }
    // power decay I_n ~ n^{-kappa}; summable iff kappa > 1
    let (n1, n2) = ((n_windows / 2) as f64, n_windows as f64);
    let kappa = -(parts[n_windows - 1] / parts[n_windows / 2 - 1]).ln() / (n2 / n1).ln();
    if kappa > 1.25 {
        Ok(Compactness { compact: true, reason: CompactReason::QuadraturePowerTail, heuristic: true })
    } else {
        Ok(Compactness { compact: false, reason: CompactReason::QuadratureDivergent, heuristic: true })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weight_examples() {
        let p2 = WeightSpec::polynomial(2.0, 1).unwrap();
        assert_eq!(eval_weight(&p2, 0.0).unwrap(), 1.0);
        assert!((eval_weight(&p2, 3.0).unwrap() - 10.0).abs() < 1e-12);
        let lp = WeightSpec::log_perturbed(0.0, 1.0, 1).unwrap();
        let x = std::f64::consts::E;
        assert!((eval_weight(&lp, x).unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(eval_weight(&lp, 0.5).unwrap(), 1.0);
    }

    #[test]
    fn custom_beyond_range_errors() {
        let w = WeightSpec::sampled(|t| t, 100.0, 32, 1).unwrap();
        assert!(matches!(eval_weight(&w, 1e3), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn interpolation_is_exact_for_powers() {
        let w = WeightSpec::sampled(|t| t.powf(0.7), 1e6, 64, 1).unwrap();
        for &t in &[1.0, 3.3, 77.0, 9.9e5] {
            let v: f64 = t;
            assert!((w.phi(t).unwrap() / v.powf(0.7) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn analytic_indices() {
        let v = WeightSpec::log_perturbed(2.0, -3.0, 1).unwrap().indices().unwrap();
        assert_eq!((v.alpha_phi, v.beta_phi, v.certified), (2.0, 2.0, Certification::Analytic));
    }

    #[test]
    fn log_envelopes_bracket() {
        let w = WeightSpec::log_perturbed(1.0, 2.0, 1).unwrap();
        let (lo, hi) = w.envelopes(8.0).unwrap();
        assert!((lo - 8.0).abs() < 1e-12);
        assert!((hi - 8.0 * (1.0 + 8f64.ln()).powi(2)).abs() < 1e-9);
    }

    #[test]
    fn limiting_case_is_rejected() {
        let p = EmbeddingParams::from_delta(1, 1.0, Exponent::new(2.0).unwrap(), Exponent::new(1.0).unwrap()).unwrap();
        let w = WeightSpec::polynomial(1.0, 1).unwrap();
        assert!(matches!(compactness_test(&p, &w, QuadConfig::default()), Err(Error::LimitingCase(_))));
    }
}
