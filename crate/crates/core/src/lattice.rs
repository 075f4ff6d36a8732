//! Dyadic block partition of `N_0 x Z^d` and the weighted mixed quasi-norm.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;
use crate::params::Exponent;
use crate::weights::{eval_weight, WeightSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridMode {
    /// Lattice points counted one by one (`d <= 3`).
    Exact,
    /// `round(v_d 2^{(j+i)d})` for every block.
    Idealized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub j: u32,
    pub i: u32,
    pub card: u128,
}

/// Blocks `I_{j,i}` with `j + i <= M_max`, ordered by level `m = j + i`, then `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGrid {
    pub d: u32,
    #[serde(rename = "M_max")]
    pub m_max: u32,
    pub mode: GridMode,
    pub blocks: Vec<Block>,
}

/// Largest `M_max` for exact counting in dimensions 1, 2 and 3.
pub const EXACT_M_MAX: [u32; 3] = [20, 20, 12];

/// Idealized grids are capped by `d * M_max <= IDEALIZED_DM_MAX` so that
/// cardinalities fit comfortably in `u128`.
pub const IDEALIZED_DM_MAX: u32 = 120;

/// Volume of the Euclidean unit ball in `R^d`.
pub fn unit_ball_volume(d: u32) -> f64 {
    let mut v = if d % 2 == 0 { 1.0 } else { 2.0 };
    let mut k = if d % 2 == 0 { 2 } else { 3 };
    while k <= d {
        v *= 2.0 * std::f64::consts::PI / k as f64;
        k += 2;
    }
    v
}

/// Idealized cardinality `round(v_d 2^{(j+i)d})` as a float.
pub fn idealized_card(d: u32, j: u32, i: u32) -> f64 {
    (unit_ball_volume(d) * 2f64.powi(((j + i) * d) as i32)).round()
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r
}

/// `#{l in Z^d : |l| <= radius}` by row sums over the last coordinate.
pub fn ball_count(d: u32, radius: u64) -> Result<u128> {
    let r2 = radius * radius;
    match d {
        1 => Ok(2 * radius as u128 + 1),
        2 => {
            let mut total: u128 = 0;
            for x in 0..=radius {
                let row = 2 * isqrt(r2 - x * x) as u128 + 1;
                total += if x == 0 { row } else { 2 * row };
            }
            Ok(total)
        }
        3 => {
            let mut total: u128 = 0;
            for x in 0..=radius {
                let rx = r2 - x * x;
                let mut plane: u128 = 0;
                for y in 0..=isqrt(rx) {
                    let row = 2 * isqrt(rx - y * y) as u128 + 1;
                    plane += if y == 0 { row } else { 2 * row };
                }
                total += if x == 0 { plane } else { 2 * plane };
            }
            Ok(total)
        }
        _ => Err(Error::ResourceLimit(format!("exact lattice counting supports d <= 3, got d = {d}"))),
    }
}

/// Builds all blocks with `j + i <= m_max`.
pub fn build_grid(d: u32, m_max: u32, mode: GridMode) -> Result<BlockGrid> {
    if d == 0 {
        return Err(Error::InvalidParams("dimension must be positive".into()));
    }
    let radii: Vec<u128> = match mode {
        GridMode::Exact => {
            if d > 3 || m_max > EXACT_M_MAX[d as usize - 1] {
                return Err(Error::ResourceLimit(format!(
                    "exact grid with d = {d}, M_max = {m_max} is beyond the supported range"
                )));
            }
            (0..=m_max).map(|r| ball_count(d, 1u64 << r)).collect::<Result<_>>()?
        }
        GridMode::Idealized => {
            if d * m_max > IDEALIZED_DM_MAX {
                return Err(Error::ResourceLimit(format!(
                    "idealized grid needs d * M_max <= {IDEALIZED_DM_MAX}, got {}",
                    d * m_max
                )));
            }
            (0..=m_max).map(|r| idealized_card(d, r, 0) as u128).collect()
        }
    };
    let mut blocks = Vec::with_capacity(((m_max + 1) * (m_max + 2) / 2) as usize);
    for m in 0..=m_max {
        for j in 0..=m {
            let i = m - j;
            let card = match (mode, i) {
                (_, 0) | (GridMode::Idealized, _) => radii[m as usize],
                (GridMode::Exact, _) => radii[m as usize] - radii[m as usize - 1],
            };
            blocks.push(Block { j, i, card });
        }
    }
    Ok(BlockGrid { d, m_max, mode, blocks })
}

impl BlockGrid {
    pub fn card(&self, j: u32, i: u32) -> Option<u128> {
        let m = j + i;
        if m > self.m_max {
            return None;
        }
        Some(self.blocks[(m * (m + 1) / 2 + j) as usize].card)
    }

    /// Extreme values of `M_{j,i} / 2^{(j+i)d}` over blocks with `j + i >= 2`.
    pub fn card_constants(&self) -> Option<(f64, f64)> {
        let ratios: Vec<f64> = self
            .blocks
            .iter()
            .filter(|b| b.j + b.i >= 2)
            .map(|b| b.card as f64 / 2f64.powi(((b.j + b.i) * self.d) as i32))
            .collect();
        if ratios.is_empty() {
            return None;
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        Some((lo, hi))
    }

    /// Representative weight level `phi(2^i)` of every block, in grid order.
    pub fn weight_levels(&self, spec: &WeightSpec) -> Result<Vec<f64>> {
        self.blocks.iter().map(|b| weight_on_block(spec, b.j, b.i)).collect()
    }
}

/// Representative weight `phi(2^i)` on block `(j, i)`; `phi(1)` at `i = 0`.
pub fn weight_on_block(spec: &WeightSpec, _j: u32, i: u32) -> Result<f64> {
    spec.phi(2f64.powi(i as i32))
}

/// One coefficient `lambda_{j,l}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub j: u32,
    pub l: Vec<i64>,
    pub value: f64,
}

/// Finitely supported sequence on `N_0 x Z^d`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SequenceSample {
    pub d: u32,
    pub entries: Vec<SampleEntry>,
}

impl SequenceSample {
    pub fn new(d: u32) -> Self {
        SequenceSample { d, entries: Vec::new() }
    }

    pub fn push(&mut self, j: u32, l: Vec<i64>, value: f64) {
        self.entries.push(SampleEntry { j, l, value });
    }

    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.entries.iter_mut().for_each(|e| e.value *= c);
        out
    }
}

fn lp_norm(xs: &[f64], p: Exponent) -> f64 {
    if p.is_inf() {
        return xs.iter().cloned().fold(0.0, f64::max);
    }
    let pv = p.value();
    let pw: Vec<f64> = xs.iter().map(|x| x.powf(pv)).collect();
    pairwise_sum(&pw).powf(1.0 / pv)
}

/// `( sum_j 2^{jsq} ( sum_l |lambda_{j,l} w(2^{-j} l)|^p )^{q/p} )^{1/q}`, with the
/// usual suprema at `p = inf` or `q = inf`; `w = 1` when no weight is given.
pub fn norm(s: f64, p: Exponent, q: Exponent, weight: Option<&WeightSpec>, sample: &SequenceSample) -> Result<f64> {
    let mut by_level: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
    for e in &sample.entries {
        if e.l.len() != sample.d as usize {
            return Err(Error::InvalidParams(format!(
                "sample entry has {} coordinates, expected {}",
                e.l.len(),
                sample.d
            )));
        }
        let w = match weight {
            Some(spec) => {
                let r = e.l.iter().map(|&c| (c as f64).powi(2)).sum::<f64>().sqrt();
                eval_weight(spec, r * 2f64.powi(-(e.j as i32)))?
            }
            None => 1.0,
        };
        by_level.entry(e.j).or_default().push((e.value * w).abs());
    }
    let outer: Vec<f64> = by_level
        .iter()
        .map(|(&j, xs)| 2f64.powf(j as f64 * s) * lp_norm(xs, p))
        .collect();
    Ok(lp_norm(&outer, q))
}
