//! `widthslab`: width curves, rate fits and rank allocations from JSON configs.
//!
//! Exit codes: 0 success, 1 usage, 2 parse, 3 negative verdict,
//! 4 limiting case, 5 resource or tail budget.

mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use widthslab::allocator::{
    lower_bound, linf_target_bound, sum_lemma_check, three_part_bound, two_part_bound, witness_mode,
    AllocConfig, IdealBudget, LemmaMode, TemplateFamily,
};
use widthslab::lattice::build_grid;
use widthslab::params::Exponent;
use widthslab::rates::{diag_model_auto, fit, predict_for_weight, DiagModel, DiagModelConfig};
use widthslab::swidths::{diag_curve, snumber_axioms_check, AxiomFixture, Certainty, DiagonalOperator, WidthCurve};
use widthslab::weights::{compactness_test, WeightSpec};
use widthslab::{Error, ErrorClass, EmbeddingParams};

use config::{parse_dyadic, parse_json, read_text, Engine, ExperimentConfig};
use output::{curve_csv, emit, json_bytes, read_curve_csv, sidecar_path};

#[derive(Debug)]
pub struct CliError {
    code: u8,
    msg: String,
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError { code: 1, msg: msg.into() }
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        CliError { code: 2, msg: msg.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Usage => 1,
            ErrorClass::NegativeVerdict => 3,
            ErrorClass::LimitingCase => 4,
            ErrorClass::Resource => 5,
        };
        CliError { code, msg: e.to_string() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Parser)]
#[command(name = "widthslab", version, about = "s-numbers of weighted Besov embeddings at sequence level")]
struct Cli {
    /// Experiment or weight JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; stdout when absent. Width curves also get `<out>.meta.json`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Seed for randomized sweeps in `check`.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Slope tolerance for `fit`.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Growth indices of a weight profile.
    Indices,
    /// Compactness verdict of the embedding.
    Compact,
    /// Width curve from the configured engine.
    Widths,
    /// Fit a CSV curve against the predicted rate.
    Fit,
    /// Rank allocation and the resulting upper bound.
    Allocate,
    /// Randomized sum-lemma and s-number axiom sweeps.
    Check,
}

fn load_config(cli: &Cli) -> Result<(ExperimentConfig, PathBuf), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::usage("--config is required"))?;
    let cfg = parse_json(&read_text(path)?, &path.display().to_string())?;
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((cfg, dir))
}

fn cmd_indices(cli: &Cli) -> Result<ExitCode, CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::usage("--config is required"))?;
    let text = read_text(path)?;
    let value: serde_json::Value = parse_json(&text, &path.display().to_string())?;
    let spec: WeightSpec = match value.get("weight") {
        Some(w) => serde_json::from_value(w.clone()),
        None => serde_json::from_value(value),
    }
    .map_err(|e| CliError::parse(format!("{}: {e}", path.display())))?;
    emit(cli.out.as_deref(), &json_bytes(&spec.indices()?)?)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_compact(cli: &Cli) -> Result<ExitCode, CliError> {
    let (cfg, _) = load_config(cli)?;
    let verdict = compactness_test(cfg.params()?, cfg.weight()?, cfg.quad.unwrap_or_default())?;
    emit(cli.out.as_deref(), &json_bytes(&verdict)?)?;
    Ok(if verdict.compact { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

#[derive(Serialize)]
struct WidthsMeta<'a> {
    engine: &'static str,
    kind: &'static str,
    certainty: Certainty,
    params: Option<&'a EmbeddingParams>,
    weight: Option<&'a WeightSpec>,
    truncation: Option<serde_json::Value>,
    notes: Vec<String>,
}

fn allocator_upper(params: &EmbeddingParams, spec: &WeightSpec, k: u64, lambda: f64) -> Result<(u64, f64), CliError> {
    let cfg = AllocConfig { lambda, ..AllocConfig::default() };
    if let TemplateFamily::Linf { .. } = TemplateFamily::of(params.p1, params.p2, lambda) {
        // the bound holds at k_total <= k and hence at k
        return Ok((k, linf_target_bound(params, spec, k, lambda)?.upper));
    }
    if k >= 2 {
        let m = (((k / 2) as f64).log2() / params.dim()).floor() as u32;
        let budget = IdealBudget::for_two_part(params, spec, &cfg)?;
        match two_part_bound(params, spec, m, &budget, &cfg) {
            Ok(b) => return Ok((k, b.upper)),
            Err(Error::WrongRegime(_)) => {}
            Err(e) => return Err(e.into()),
        }
    }
    let b = three_part_bound(params, spec, k, &cfg)?;
    Ok((b.plan.k_total, b.upper))
}

fn cmd_widths(cli: &Cli) -> Result<ExitCode, CliError> {
    let (cfg, _) = load_config(cli)?;
    let engine = cfg.engine.ok_or_else(|| CliError::usage("config needs \"engine\""))?;
    let ks = cfg.ks()?;
    let kind = cfg.kind();
    let mut notes = Vec::new();
    let mut truncation = None;
    let curve = match engine {
        Engine::DiagonalOracle => {
            let (params, spec) = (cfg.params()?, cfg.weight()?);
            let dm = DiagModelConfig { rel_tol: cfg.grid.rel_tol, sigma: cfg.grid.sigma };
            let (curve, audit) = match cfg.grid.m_max {
                Some(m) => {
                    let grid = build_grid(params.d, m, cfg.grid.mode)?;
                    let model = DiagModel::new(params, spec, &grid, dm)?;
                    (model.widths(&ks, kind)?, model.audit)
                }
                None => diag_model_auto(params, spec, &ks, kind, 10, dm)?,
            };
            truncation = Some(serde_json::to_value(&audit).map_err(|e| CliError::usage(e.to_string()))?);
            notes.push("diagonal model: p2 < p1 with q1 = p1, q2 = p2; a_k = c_k = h_k exactly".into());
            curve
        }
        Engine::DiagonalOperator => {
            let op_cfg = cfg.operator.as_ref().ok_or_else(|| CliError::usage("config needs \"operator\""))?;
            let op = DiagonalOperator::new(op_cfg.sigma.clone(), op_cfg.p1, op_cfg.p2)?;
            diag_curve(&op, &ks, kind)?
        }
        Engine::AllocatorUpper | Engine::LowerWitness => {
            let (params, spec) = (cfg.params()?, cfg.weight()?);
            let lambda = cfg.lambda.unwrap_or(widthslab::swidths::DEFAULT_LAMBDA);
            let mut rows: Vec<(u64, f64)> = if engine == Engine::AllocatorUpper {
                notes.push("rows give the rank at which each upper bound holds; constants set to 1".into());
                ks.par_iter().map(|&k| allocator_upper(params, spec, k, lambda)).collect::<Result<_, _>>()?
            } else {
                let mode = witness_mode(params, &spec.indices()?)?;
                notes.push(format!("single-block witnesses ({mode:?}); constants set to 1"));
                ks.par_iter()
                    .map(|&k| Ok((k, lower_bound(params, spec, mode, k)?)))
                    .collect::<Result<_, CliError>>()?
            };
            rows.sort_by_key(|r| r.0);
            rows.dedup_by_key(|r| r.0);
            WidthCurve {
                kind,
                ks: rows.iter().map(|r| r.0).collect(),
                values: rows.iter().map(|r| r.1).collect(),
                certainty: Certainty::Template,
            }
        }
    };
    if let Some(p) = cfg.params.as_ref() {
        if !p.is_diagonal_model() {
            notes.push("(q1, q2) differ from (p1, p2) or p1 <= p2: no exact oracle, rates are q-independent".into());
        }
    }
    let meta = WidthsMeta {
        engine: engine.tag(),
        kind: kind.tag(),
        certainty: curve.certainty,
        params: cfg.params.as_ref(),
        weight: cfg.weight.as_ref(),
        truncation,
        notes,
    };
    let data = match cli.format {
        Format::Csv => curve_csv(&curve)?,
        Format::Json => json_bytes(&curve)?,
    };
    emit(cli.out.as_deref(), &data)?;
    if let Some(out) = cli.out.as_deref() {
        emit(Some(&sidecar_path(out)), &json_bytes(&meta)?)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_fit(cli: &Cli) -> Result<ExitCode, CliError> {
    let (cfg, dir) = load_config(cli)?;
    let rel = cfg.curve.as_ref().ok_or_else(|| CliError::usage("config needs \"curve\""))?;
    let curve = read_curve_csv(&dir.join(rel))?;
    let (params, spec) = (cfg.params()?, cfg.weight()?);
    let prediction = predict_for_weight(params, spec, curve.kind)?;
    let window = match &cfg.window {
        Some(w) => {
            let ks = parse_dyadic(w)?;
            Some((ks[0], ks[ks.len() - 1]))
        }
        None => None,
    };
    let report = fit(&curve, &prediction, spec, window, cli.tol)?;
    eprintln!("{} [{:?} {}]", report.summary(), prediction.source, prediction.case);
    emit(cli.out.as_deref(), &json_bytes(&json!({ "prediction": prediction, "report": report }))?)?;
    Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn cmd_allocate(cli: &Cli) -> Result<ExitCode, CliError> {
    let (cfg, _) = load_config(cli)?;
    let (params, spec) = (cfg.params()?, cfg.weight()?);
    let k = cfg.k.ok_or_else(|| CliError::usage("config needs \"k\""))?;
    let alloc = AllocConfig { lambda: cfg.lambda.unwrap_or(widthslab::swidths::DEFAULT_LAMBDA), ..Default::default() };
    let value = match three_part_bound(params, spec, k, &alloc) {
        Ok(b) => serde_json::to_value(&b),
        Err(Error::WrongRegime(_)) => {
            let m = (((k.max(2) / 2) as f64).log2() / params.dim()).floor() as u32;
            let budget = IdealBudget::for_two_part(params, spec, &alloc)?;
            serde_json::to_value(two_part_bound(params, spec, m, &budget, &alloc)?)
        }
        Err(e) => return Err(e.into()),
    }
    .map_err(|e| CliError::usage(e.to_string()))?;
    emit(cli.out.as_deref(), &json_bytes(&value)?)?;
    Ok(ExitCode::SUCCESS)
}

fn random_exponent(rng: &mut ChaCha8Rng) -> Exponent {
    const CHOICES: [f64; 8] = [0.5, 0.8, 1.0, 1.5, 2.0, 3.0, 6.0, f64::INFINITY];
    Exponent::new(CHOICES[rng.gen_range(0..CHOICES.len())]).unwrap()
}

fn random_fixture(rng: &mut ChaCha8Rng) -> AxiomFixture {
    let mut ps: Vec<Exponent> = Vec::new();
    while ps.len() < 3 {
        let p = random_exponent(rng);
        if !ps.contains(&p) {
            ps.push(p);
        }
    }
    ps.sort_by(|a, b| b.value().total_cmp(&a.value()));
    let n = rng.gen_range(1..=10);
    let entry = |rng: &mut ChaCha8Rng| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.01..2.0) };
    let a = (0..n).map(|_| entry(rng)).collect();
    let b = (0..n).map(|_| entry(rng)).collect();
    AxiomFixture { a, b, p1: ps[0], p2: ps[1], p3: ps[2] }
}

fn cmd_check(cli: &Cli) -> Result<ExitCode, CliError> {
    let cfg = match &cli.config {
        Some(_) => load_config(cli)?.0,
        None => parse_json("{}", "defaults")?,
    };
    let check = cfg.check.clone().unwrap_or_default();
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let fixtures: Vec<AxiomFixture> = (0..check.fixtures).map(|_| random_fixture(&mut rng)).collect();
    let axioms = snumber_axioms_check(&fixtures)?;

    let spec = match &cfg.weight {
        Some(w) => w.clone(),
        None => WeightSpec::polynomial(1.0, 1)?,
    };
    let idx = spec.indices()?;
    let mut lemma = Vec::new();
    let mut all_ok = axioms.violations.is_empty();
    for _ in 0..check.lemma_tuples {
        let eta: f64 = rng.gen_range(0.0..1.0);
        let rho: f64 = rng.gen_range(0.3..=1.0);
        let (hyp, gamma) = if rng.gen_bool(0.5) {
            ("ar", idx.alpha_phi + eta + rng.gen_range(0.3..1.5))
        } else {
            ("rb", (idx.beta_phi - rng.gen_range(0.3..1.0)).max(0.05))
        };
        let r = match sum_lemma_check(&spec, gamma, eta, rho, 60, LemmaMode::Strict) {
            Ok(r) => r,
            Err(Error::Precondition(_)) => continue,
            Err(e) => return Err(e.into()),
        };
        all_ok &= r.all_finite;
        lemma.push(json!({
            "hypothesis": hyp, "gamma": gamma, "eta": eta, "rho": rho,
            "sup_ar": r.sup_ar, "sup_rb1": r.sup_rb1, "sup_rbm": r.sup_rbm, "all_finite": r.all_finite,
        }));
    }
    let report = json!({ "seed": cli.seed, "axioms": axioms, "sum_lemma": lemma, "pass": all_ok });
    emit(cli.out.as_deref(), &json_bytes(&report)?)?;
    Ok(if all_ok { ExitCode::SUCCESS } else { ExitCode::from(3) })
}

fn configure_threads() -> Result<(), CliError> {
    if let Ok(v) = std::env::var("WIDTHSLAB_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::usage(format!("WIDTHSLAB_THREADS must be a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::usage(e.to_string()))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<ExitCode, CliError> {
    configure_threads()?;
    match cli.command {
        Command::Indices => cmd_indices(cli),
        Command::Compact => cmd_compact(cli),
        Command::Widths => cmd_widths(cli),
        Command::Fit => cmd_fit(cli),
        Command::Allocate => cmd_allocate(cli),
        Command::Check => cmd_check(cli),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.msg);
            ExitCode::from(e.code)
        }
    }
}
