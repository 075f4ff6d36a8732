use std::path::{Path, PathBuf};

use serde::Deserialize;
use widthslab::lattice::GridMode;
use widthslab::params::{EmbeddingParams, Exponent};
use widthslab::rates::SigmaMode;
use widthslab::swidths::{SigmaProfile, WidthKind};
use widthslab::weights::{QuadConfig, WeightSpec};

use crate::CliError;

/// Which computation produces a width curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    DiagonalOracle,
    AllocatorUpper,
    LowerWitness,
    DiagonalOperator,
}

impl Engine {
    pub fn tag(self) -> &'static str {
        match self {
            Engine::DiagonalOracle => "diagonal-oracle",
            Engine::AllocatorUpper => "allocator-upper",
            Engine::LowerWitness => "lower-witness",
            Engine::DiagonalOperator => "diagonal-operator",
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Fixed truncation level; chosen automatically when absent.
    #[serde(rename = "M_max")]
    pub m_max: Option<u32>,
    #[serde(default = "default_mode")]
    pub mode: GridMode,
    #[serde(default = "default_sigma")]
    pub sigma: SigmaMode,
    #[serde(default = "default_rel_tol")]
    pub rel_tol: f64,
}

fn default_mode() -> GridMode {
    GridMode::Idealized
}

fn default_sigma() -> SigmaMode {
    SigmaMode::Representative
}

fn default_rel_tol() -> f64 {
    1e-6
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { m_max: None, mode: default_mode(), sigma: default_sigma(), rel_tol: default_rel_tol() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    pub sigma: SigmaProfile,
    pub p1: Exponent,
    pub p2: Exponent,
}

/// Either `"dyadic:a..b"` or an explicit list.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum KSpec {
    Range(String),
    List(Vec<u64>),
}

impl KSpec {
    pub fn resolve(&self) -> Result<Vec<u64>, CliError> {
        match self {
            KSpec::List(ks) => {
                if ks.is_empty() || ks.contains(&0) {
                    return Err(CliError::usage("k values must be positive and non-empty"));
                }
                let mut ks = ks.clone();
                ks.sort_unstable();
                ks.dedup();
                Ok(ks)
            }
            KSpec::Range(s) => parse_dyadic(s),
        }
    }
}

pub fn parse_dyadic(s: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::usage(format!("bad k range {s:?}, expected \"dyadic:a..b\""));
    let body = s.strip_prefix("dyadic:").ok_or_else(bad)?;
    let (a, b) = body.split_once("..").ok_or_else(bad)?;
    let a: u32 = a.trim().parse().map_err(|_| bad())?;
    let b: u32 = b.trim().parse().map_err(|_| bad())?;
    if a > b || b > 62 {
        return Err(bad());
    }
    Ok((a..=b).map(|e| 1u64 << e).collect())
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_fixtures")]
    pub fixtures: usize,
    #[serde(default = "default_lemma_tuples")]
    pub lemma_tuples: usize,
}

fn default_fixtures() -> usize {
    200
}

fn default_lemma_tuples() -> usize {
    20
}

impl Default for CheckConfig {
    fn default() -> Self {
        CheckConfig { fixtures: default_fixtures(), lemma_tuples: default_lemma_tuples() }
    }
}

/// Experiment descriptor shared by all subcommands; each reads the fields it needs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(alias = "embedding")]
    pub params: Option<EmbeddingParams>,
    pub weight: Option<WeightSpec>,
    pub kind: Option<WidthKind>,
    pub engine: Option<Engine>,
    #[serde(default)]
    pub grid: GridConfig,
    pub ks: Option<KSpec>,
    pub operator: Option<OperatorConfig>,
    pub lambda: Option<f64>,
    pub quad: Option<QuadConfig>,
    /// CSV curve for `fit`, relative to the config file.
    pub curve: Option<PathBuf>,
    pub window: Option<String>,
    /// Design rank for `allocate`.
    pub k: Option<u64>,
    pub check: Option<CheckConfig>,
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<&EmbeddingParams, CliError> {
        self.params.as_ref().ok_or_else(|| CliError::usage("config needs \"params\""))
    }

    pub fn weight(&self) -> Result<&WeightSpec, CliError> {
        self.weight.as_ref().ok_or_else(|| CliError::usage("config needs \"weight\""))
    }

    pub fn kind(&self) -> WidthKind {
        self.kind.unwrap_or(WidthKind::Approximation)
    }

    pub fn ks(&self) -> Result<Vec<u64>, CliError> {
        self.ks.as_ref().ok_or_else(|| CliError::usage("config needs \"ks\""))?.resolve()
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, what: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::parse(format!("{what}: {e}")))
}
