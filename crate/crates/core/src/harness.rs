//! Batch experiments over seeded instance families and their reports.
//!
//! Instance `k` of a batch is sampled with seed `derive(seed, k)`. From that
//! instance seed three protocol streams are split off by label: `optimizer`
//! (every Nelder-Mead run, further keyed by the ansatz mask), `search` and
//! `random` (random scoring). The energy baseline and the Gibbs reference
//! therefore start from the same simplex.
//!
//! Percentiles use linear interpolation between order statistics at
//! position `q (n - 1)` of the sorted sample.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::CalibrationRecord;
use crate::error::{Error, Result};
use crate::evaluation::{InstanceContext, OptimizedAnsatz};
use crate::instances::{sample_instance, EdgeMask, GraphKind, ProblemInstance};
use crate::objectives::{ObjectiveSpec, DEFAULT_ETA};
use crate::optimizer::SimplexConfig;
use crate::search::{
    final_evaluation, run_search, top_k_curve, FinalEvaluation, LevelEvaluation, Reference, ScoringPrescription,
    SearchConfig, SearchTrace, TopKResult,
};
use crate::seed;

pub const DEFAULT_ETA_SWEEP: [f64; 7] = [1e-4, 0.5, 2.0, 8.0, 20.0, 100.0, 1e5];
pub const DEFAULT_CALIBRATION_SAMPLES: usize = 100_000;
const HISTOGRAM_BINS: usize = 20;

/// Scoring rule as written in a config file; resolved per instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScoringChoice {
    Nm,
    Estimated,
    /// Calibrated from the batch's graph family when `gamma` is absent.
    Fixed {
        #[serde(default)]
        gamma: Option<f64>,
    },
    Random,
    EnergyApprox,
}

impl FromStr for ScoringChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nm" => Ok(ScoringChoice::Nm),
            "estimated" => Ok(ScoringChoice::Estimated),
            "fixed" => Ok(ScoringChoice::Fixed { gamma: None }),
            "random" => Ok(ScoringChoice::Random),
            "energy-approx" => Ok(ScoringChoice::EnergyApprox),
            _ => Err(Error::InvalidParameter(format!("unknown scoring `{s}`"))),
        }
    }
}

impl fmt::Display for ScoringChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoringChoice::Nm => "nm",
            ScoringChoice::Estimated => "estimated",
            ScoringChoice::Fixed { .. } => "fixed",
            ScoringChoice::Random => "random",
            ScoringChoice::EnergyApprox => "energy-approx",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchSettings {
    pub scoring: ScoringChoice,
    pub beam_width: usize,
    pub max_removals: usize,
    /// Re-ranking depths evaluated after search; empty to skip.
    pub top_k: Vec<usize>,
}

impl Default for SearchSettings {
    fn default() -> Self {
        Self {
            scoring: ScoringChoice::Nm,
            beam_width: 1,
            max_removals: 20,
            top_k: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub kind: GraphKind,
    pub instances: usize,
    pub seed: u64,
    /// Gibbs `η` of the comparison and search runs.
    pub eta: f64,
    /// `η` values of a sweep.
    pub etas: Vec<f64>,
    pub simplex: SimplexConfig,
    pub search: SearchSettings,
    /// Include the searched sparse ansatz in comparisons.
    pub sparse: bool,
    pub calibration_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: GraphKind::GRID_4X4,
            instances: 100,
            seed: 0,
            eta: DEFAULT_ETA,
            etas: DEFAULT_ETA_SWEEP.to_vec(),
            simplex: SimplexConfig::default(),
            search: SearchSettings::default(),
            sparse: true,
            calibration_samples: DEFAULT_CALIBRATION_SAMPLES,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if self.instances == 0 {
            return bad("instance count must be at least 1");
        }
        if self.etas.is_empty() {
            return bad("eta list is empty");
        }
        for &eta in self.etas.iter().chain([&self.eta]) {
            ObjectiveSpec::Gibbs { eta }.validate()?;
        }
        if self.search.beam_width == 0 {
            return bad("beam width must be at least 1");
        }
        if self.search.top_k.contains(&0) {
            return bad("top-k depths must be at least 1");
        }
        self.simplex.validate(2)
    }

    pub fn instance_seed(&self, index: usize) -> u64 {
        seed::derive(self.seed, index as u64)
    }

    pub fn instance(&self, index: usize) -> ProblemInstance {
        sample_instance(self.kind, self.instance_seed(index))
    }

    /// Resolves the configured scoring for one instance. `fixed_gamma` is
    /// required for fixed scoring without an explicit value.
    pub fn prescription(&self, instance_seed: u64, fixed_gamma: Option<f64>) -> Result<ScoringPrescription> {
        Ok(match self.search.scoring {
            ScoringChoice::Nm => ScoringPrescription::NelderMead {
                config: self.simplex,
                eta: self.eta,
            },
            ScoringChoice::Estimated => ScoringPrescription::Estimated { eta: self.eta },
            ScoringChoice::Fixed { gamma } => ScoringPrescription::Fixed {
                gamma: gamma.or(fixed_gamma).ok_or_else(|| {
                    Error::InvalidParameter("fixed scoring needs a calibrated gamma".into())
                })?,
                eta: self.eta,
            },
            ScoringChoice::Random => ScoringPrescription::Random {
                seed: seed::derive_label(instance_seed, "random"),
            },
            ScoringChoice::EnergyApprox => ScoringPrescription::EnergyApprox,
        })
    }

    /// Median `γ*` calibration for this family, used by fixed scoring.
    pub fn calibration(&self) -> Result<CalibrationRecord> {
        CalibrationRecord::compute(
            self.kind,
            self.calibration_samples,
            seed::derive_label(self.seed, "calibration"),
        )
    }

    fn fixed_gamma(&self) -> Result<Option<f64>> {
        match self.search.scoring {
            ScoringChoice::Fixed { gamma: None } => Ok(Some(self.calibration()?.gamma_median)),
            _ => Ok(None),
        }
    }
}

/// Seed of every Nelder-Mead run on an instance, before keying by mask.
pub fn optimizer_seed(instance_seed: u64) -> u64 {
    seed::derive_label(instance_seed, "optimizer")
}

/// Nelder-Mead on `<E>` over the full instance graph, the usual QAOA protocol.
pub fn energy_baseline(ctx: &InstanceContext, simplex: &SimplexConfig, optimizer_seed: u64) -> Result<OptimizedAnsatz> {
    let full = ctx.instance().full_mask();
    ctx.optimize(full, ObjectiveSpec::Energy, simplex, seed::derive_wide(optimizer_seed, full.0))
}

/// `(p_variant / p_baseline - 1) * 100`.
pub fn relative_improvement(p_variant: f64, p_baseline: f64) -> Result<f64> {
    if !(p_baseline > 0.0) {
        return Err(Error::ZeroBaseline);
    }
    Ok((p_variant / p_baseline - 1.0) * 100.0)
}

/// `(retained / total - 1) * 100`.
pub fn gate_reduction(retained: usize, total: usize) -> f64 {
    (retained as f64 / total as f64 - 1.0) * 100.0
}

/// Linear-interpolation percentile of a sorted sample, `q ∈ [0, 1]`.
pub fn percentile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Percentiles {
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
}

impl Percentiles {
    /// `None` for an empty sample. NaNs are dropped.
    pub fn of(values: impl IntoIterator<Item = f64>) -> Option<Self> {
        let mut v: Vec<f64> = values.into_iter().filter(|x| !x.is_nan()).collect();
        v.sort_by(f64::total_cmp);
        Some(Self {
            p5: percentile(&v, 0.05)?,
            p50: percentile(&v, 0.50)?,
            p95: percentile(&v, 0.95)?,
        })
    }
}

/// Everything computed for one instance of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub e_gs: f64,
    pub n_vertices: usize,
    pub n_edges: usize,
    pub baseline: OptimizedAnsatz,
    pub qaoa_gibbs: OptimizedAnsatz,
    pub sparse: Option<FinalEvaluation>,
}

impl InstanceResult {
    /// Sparse ansatz with the lowest re-optimised Gibbs value over all levels.
    pub fn sparse_best(&self) -> Option<&LevelEvaluation> {
        self.sparse.as_ref().map(|f| f.best_by_gibbs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceOutcome {
    pub index: usize,
    pub instance_seed: u64,
    pub result: Option<InstanceResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub index: usize,
    pub instance_seed: u64,
    pub e_gs: Option<f64>,
    pub p_baseline: Option<f64>,
    pub p_variant: Option<f64>,
    pub relative_improvement: Option<f64>,
    pub gates_retained: Option<usize>,
    pub gates_total: Option<usize>,
    pub gate_reduction: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub variant: String,
    pub rows: Vec<InstanceRow>,
    pub improvement: Option<Percentiles>,
    pub gate_reduction: Option<Percentiles>,
    pub failures: usize,
}

impl BatchSummary {
    /// Rows are sorted by instance index; rows with an error are excluded
    /// from the percentiles.
    pub fn from_rows(variant: &str, mut rows: Vec<InstanceRow>) -> Self {
        rows.sort_by_key(|r| r.index);
        let ok = || rows.iter().filter(|r| r.error.is_none());
        Self {
            variant: variant.to_string(),
            improvement: Percentiles::of(ok().filter_map(|r| r.relative_improvement)),
            gate_reduction: Percentiles::of(ok().filter_map(|r| r.gate_reduction)),
            failures: rows.iter().filter(|r| r.error.is_some()).count(),
            rows,
        }
    }
}

fn variant_row(outcome: &InstanceOutcome, pick: impl Fn(&InstanceResult) -> Option<(f64, EdgeMask)>) -> InstanceRow {
    let mut row = InstanceRow {
        index: outcome.index,
        instance_seed: outcome.instance_seed,
        e_gs: None,
        p_baseline: None,
        p_variant: None,
        relative_improvement: None,
        gates_retained: None,
        gates_total: None,
        gate_reduction: None,
        error: outcome.error.clone(),
    };
    let Some(res) = &outcome.result else {
        return row;
    };
    row.e_gs = Some(res.e_gs);
    row.p_baseline = Some(res.baseline.evaluation.p_low);
    row.gates_total = Some(res.n_edges);
    if let Some((p, mask)) = pick(res) {
        row.p_variant = Some(p);
        row.gates_retained = Some(mask.count());
        row.gate_reduction = Some(gate_reduction(mask.count(), res.n_edges));
        match relative_improvement(p, res.baseline.evaluation.p_low) {
            Ok(r) => row.relative_improvement = Some(r),
            Err(e) => row.error = Some(e.to_string()),
        }
    }
    row
}

pub const VARIANT_QAOA_ENERGY: &str = "qaoa+energy";
pub const VARIANT_QAOA_GIBBS: &str = "qaoa+gibbs";
pub const VARIANT_SPARSE_GIBBS: &str = "sparse+gibbs";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    pub fixed_gamma: Option<f64>,
    pub instances: Vec<InstanceOutcome>,
    pub summaries: Vec<BatchSummary>,
}

impl ComparisonReport {
    pub fn summary(&self, variant: &str) -> Option<&BatchSummary> {
        self.summaries.iter().find(|s| s.variant == variant)
    }

    pub fn from_outcomes(config: ExperimentConfig, fixed_gamma: Option<f64>, mut instances: Vec<InstanceOutcome>) -> Self {
        instances.sort_by_key(|o| o.index);
        let rows = |pick: &dyn Fn(&InstanceResult) -> Option<(f64, EdgeMask)>| {
            instances.iter().map(|o| variant_row(o, pick)).collect::<Vec<_>>()
        };
        let mut summaries = vec![
            BatchSummary::from_rows(
                VARIANT_QAOA_ENERGY,
                rows(&|r| Some((r.baseline.evaluation.p_low, r.baseline.mask))),
            ),
            BatchSummary::from_rows(
                VARIANT_QAOA_GIBBS,
                rows(&|r| Some((r.qaoa_gibbs.evaluation.p_low, r.qaoa_gibbs.mask))),
            ),
        ];
        if config.sparse {
            summaries.push(BatchSummary::from_rows(
                VARIANT_SPARSE_GIBBS,
                rows(&|r| {
                    r.sparse_best()
                        .map(|b| (b.optimized.evaluation.p_low, b.optimized.mask))
                }),
            ));
        }
        Self {
            config,
            fixed_gamma,
            instances,
            summaries,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Runs `f` on every instance of the batch in parallel, isolating failures.
fn for_each_instance<T, F>(config: &ExperimentConfig, f: F) -> Vec<(usize, u64, Result<T>)>
where
    T: Send,
    F: Fn(usize, u64, InstanceContext) -> Result<T> + Sync,
{
    (0..config.instances)
        .into_par_iter()
        .map(|k| {
            let s = config.instance_seed(k);
            let res = InstanceContext::new(sample_instance(config.kind, s), config.eta).and_then(|ctx| f(k, s, ctx));
            (k, s, res)
        })
        .collect()
}

fn compare_instance(
    config: &ExperimentConfig,
    fixed_gamma: Option<f64>,
    instance_seed: u64,
    ctx: &InstanceContext,
) -> Result<InstanceResult> {
    let opt_seed = optimizer_seed(instance_seed);
    let baseline = energy_baseline(ctx, &config.simplex, opt_seed)?;
    let reference = Reference::compute(ctx, config.eta, &config.simplex, opt_seed)?;
    let sparse = if config.sparse {
        let (_, evaluation) = search_instance(config, fixed_gamma, instance_seed, ctx, &reference)?;
        Some(evaluation)
    } else {
        None
    };
    Ok(InstanceResult {
        e_gs: ctx.ground().e_gs,
        n_vertices: ctx.instance().n_qubits(),
        n_edges: ctx.instance().n_edges(),
        baseline,
        qaoa_gibbs: reference.optimum,
        sparse,
    })
}

fn search_instance(
    config: &ExperimentConfig,
    fixed_gamma: Option<f64>,
    instance_seed: u64,
    ctx: &InstanceContext,
    reference: &Reference,
) -> Result<(SearchTrace, FinalEvaluation)> {
    let search = SearchConfig {
        beam_width: config.search.beam_width,
        max_removals: config.search.max_removals,
        scoring: config.prescription(instance_seed, fixed_gamma)?,
        seed: seed::derive_label(instance_seed, "search"),
    };
    let trace = run_search(ctx, &search)?;
    let evaluation = final_evaluation(ctx, &trace, reference)?;
    Ok((trace, evaluation))
}

/// QAOA+energy baseline, QAOA+Gibbs and (optionally) the searched sparse
/// ansatz with Gibbs, for every instance of the batch.
pub fn run_comparison(config: &ExperimentConfig) -> Result<ComparisonReport> {
    config.validate()?;
    let fixed_gamma = if config.sparse { config.fixed_gamma()? } else { None };
    let outcomes = for_each_instance(config, |_, s, ctx| compare_instance(config, fixed_gamma, s, &ctx))
        .into_iter()
        .map(|(index, instance_seed, res)| match res {
            Ok(r) => InstanceOutcome {
                index,
                instance_seed,
                result: Some(r),
                error: None,
            },
            Err(e) => InstanceOutcome {
                index,
                instance_seed,
                result: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    Ok(ComparisonReport::from_outcomes(config.clone(), fixed_gamma, outcomes))
}

/// Search and final evaluation of one instance, with optional top-k re-ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub index: usize,
    pub instance_seed: u64,
    pub trace: SearchTrace,
    pub evaluation: FinalEvaluation,
    pub top_k: Vec<TopKResult>,
}

/// Runs the configured search on every instance.
pub fn run_search_batch(config: &ExperimentConfig) -> Result<Vec<SearchOutcome>> {
    config.validate()?;
    let fixed_gamma = config.fixed_gamma()?;
    let mut out = for_each_instance(config, |index, s, ctx| {
        let reference = Reference::compute(&ctx, config.eta, &config.simplex, optimizer_seed(s))?;
        let (trace, evaluation) = search_instance(config, fixed_gamma, s, &ctx, &reference)?;
        let top_k = if config.search.top_k.is_empty() {
            Vec::new()
        } else {
            top_k_curve(&ctx, &trace, &config.search.top_k, &reference)?
        };
        Ok(SearchOutcome {
            index,
            instance_seed: s,
            trace,
            evaluation,
            top_k,
        })
    })
    .into_iter()
    .map(|(_, _, r)| r)
    .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|o| o.index);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LevelQuantiles {
    pub level: usize,
    pub reoptimized: Percentiles,
    /// At the scoring angles; absent for random scoring.
    pub scoring: Option<Percentiles>,
}

/// Per-level 5/50/95 percentiles of the scaled probability across instances.
pub fn level_quantiles<'a>(evaluations: impl IntoIterator<Item = &'a FinalEvaluation>) -> Vec<LevelQuantiles> {
    let evaluations: Vec<&FinalEvaluation> = evaluations.into_iter().collect();
    let depth = evaluations.iter().map(|e| e.levels.len()).min().unwrap_or(0);
    (0..depth)
        .filter_map(|l| {
            let reoptimized = Percentiles::of(evaluations.iter().map(|e| e.levels[l].scaled_probability))?;
            let scoring = Percentiles::of(
                evaluations
                    .iter()
                    .filter_map(|e| e.levels[l].scoring_scaled_probability),
            );
            Some(LevelQuantiles {
                level: l,
                reoptimized,
                scoring,
            })
        })
        .collect()
}

/// Per-depth percentiles of the best top-k scaled probability.
pub fn top_k_quantiles(outcomes: &[SearchOutcome]) -> Vec<(usize, Percentiles)> {
    let Some(first) = outcomes.first() else {
        return Vec::new();
    };
    (0..first.top_k.len())
        .filter_map(|i| {
            let p = Percentiles::of(outcomes.iter().map(|o| o.top_k[i].best_scaled_probability))?;
            Some((first.top_k[i].k, p))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub instance_seed: u64,
    pub eta: f64,
    pub p_baseline: f64,
    pub p_gibbs: f64,
    pub ratio: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSummary {
    pub eta: f64,
    pub ratio: Option<Percentiles>,
    /// Fraction of Gibbs optimisations that exhausted their budget.
    pub failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSweep {
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<EtaSummary>,
    pub errors: Vec<(usize, String)>,
}

impl EtaSweep {
    pub fn summary(&self, eta: f64) -> Option<&EtaSummary> {
        self.summaries.iter().find(|s| s.eta == eta)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    /// Writes `eta_sweep.csv` (one row per instance and `η`) and
    /// `eta_percentiles.csv`.
    pub fn emit(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("eta_sweep.csv"))?;
        w.write_record(["index", "instance_seed", "eta", "p_baseline", "p_gibbs", "ratio", "converged"])?;
        for r in &self.rows {
            w.write_record([
                r.index.to_string(),
                r.instance_seed.to_string(),
                r.eta.to_string(),
                r.p_baseline.to_string(),
                r.p_gibbs.to_string(),
                r.ratio.to_string(),
                r.converged.to_string(),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("eta_percentiles.csv"))?;
        w.write_record(["eta", "ratio_p5", "ratio_p50", "ratio_p95", "failure_rate"])?;
        for s in &self.summaries {
            let (a, b, c) = split(s.ratio);
            w.write_record([s.eta.to_string(), a, b, c, s.failure_rate.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Ratio of the probability of low energy under Gibbs optimisation at each
/// `η` to the energy-optimised baseline, over the batch.
pub fn eta_sweep(config: &ExperimentConfig) -> Result<EtaSweep> {
    config.validate()?;
    let results = for_each_instance(config, |index, s, ctx| {
        let opt_seed = optimizer_seed(s);
        let baseline = energy_baseline(&ctx, &config.simplex, opt_seed)?;
        let p_baseline = baseline.evaluation.p_low;
        config
            .etas
            .iter()
            .map(|&eta| {
                let gibbs = Reference::compute(&ctx, eta, &config.simplex, opt_seed)?.optimum;
                Ok(SweepRow {
                    index,
                    instance_seed: s,
                    eta,
                    p_baseline,
                    p_gibbs: gibbs.evaluation.p_low,
                    ratio: gibbs.evaluation.p_low / p_baseline,
                    converged: gibbs.converged,
                })
            })
            .collect::<Result<Vec<_>>>()
    });
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for (index, _, res) in results {
        match res {
            Ok(r) => rows.extend(r),
            Err(e) => errors.push((index, e.to_string())),
        }
    }
    let summaries = config
        .etas
        .iter()
        .map(|&eta| {
            let at: Vec<&SweepRow> = rows.iter().filter(|r| r.eta == eta).collect();
            EtaSummary {
                eta,
                ratio: Percentiles::of(at.iter().map(|r| r.ratio)),
                failure_rate: if at.is_empty() {
                    0.0
                } else {
                    at.iter().filter(|r| !r.converged).count() as f64 / at.len() as f64
                },
            }
        })
        .collect();
    Ok(EtaSweep {
        config: config.clone(),
        rows,
        summaries,
        errors,
    })
}

fn split(p: Option<Percentiles>) -> (String, String, String) {
    match p {
        Some(p) => (p.p5.to_string(), p.p50.to_string(), p.p95.to_string()),
        None => (String::new(), String::new(), String::new()),
    }
}

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// Column order of `rows.csv`.
pub const ROW_COLUMNS: [&str; 11] = [
    "variant",
    "index",
    "instance_seed",
    "e_gs",
    "p_baseline",
    "p_variant",
    "relative_improvement_pct",
    "gates_retained",
    "gates_total",
    "gate_reduction_pct",
    "error",
];

/// Equal-width histogram over `[min, max]` of the sample; the last bin is closed.
pub fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64, usize)> {
    if values.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = (((v - lo) / width) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(b, c)| (lo + b as f64 * width, lo + (b + 1) as f64 * width, c))
        .collect()
}

fn write_histogram(path: &Path, values: &[f64]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["bin_low", "bin_high", "count"])?;
    for (a, b, c) in histogram(values, HISTOGRAM_BINS) {
        w.write_record([a.to_string(), b.to_string(), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct PercentileEntry<'a> {
    variant: &'a str,
    rows: usize,
    failures: usize,
    relative_improvement_pct: Option<Percentiles>,
    gate_reduction_pct: Option<Percentiles>,
}

#[derive(Serialize)]
struct AnsatzRendering {
    index: usize,
    instance_seed: u64,
    kind: GraphKind,
    n_vertices: usize,
    /// `[i, j]` pairs of the instance graph in canonical order.
    instance_edges: Vec<[usize; 2]>,
    couplings: Vec<f64>,
    sparse_level: Option<usize>,
    sparse_edges: Option<Vec<[usize; 2]>>,
}

/// Writes the report files of a comparison into `dir`:
///
/// - `rows.csv`: one row per variant and instance, columns [`ROW_COLUMNS`]
/// - `percentiles.json`: 5/50/95 percentiles per variant
/// - `ground_energy_hist.csv`: ground-state energy per vertex
/// - `baseline_p_hist.csv`: probability of low energy of the energy baseline
/// - `level_curves.csv`: scaled probability percentiles per search level
///   (header only without sparse results)
/// - `ansatzes.json`: instance and best sparse ansatz edge lists
pub fn emit_report(report: &ComparisonReport, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join("rows.csv"))?;
    w.write_record(ROW_COLUMNS)?;
    for s in &report.summaries {
        for r in &s.rows {
            w.write_record([
                s.variant.clone(),
                r.index.to_string(),
                r.instance_seed.to_string(),
                opt_str(&r.e_gs),
                opt_str(&r.p_baseline),
                opt_str(&r.p_variant),
                opt_str(&r.relative_improvement),
                opt_str(&r.gates_retained),
                opt_str(&r.gates_total),
                opt_str(&r.gate_reduction),
                r.error.clone().unwrap_or_default(),
            ])?;
        }
    }
    w.flush()?;

    let entries: Vec<PercentileEntry> = report
        .summaries
        .iter()
        .map(|s| PercentileEntry {
            variant: &s.variant,
            rows: s.rows.len(),
            failures: s.failures,
            relative_improvement_pct: s.improvement,
            gate_reduction_pct: s.gate_reduction,
        })
        .collect();
    fs::write(dir.join("percentiles.json"), serde_json::to_string_pretty(&entries)? + "\n")?;

    let results: Vec<(&InstanceOutcome, &InstanceResult)> = report
        .instances
        .iter()
        .filter_map(|o| o.result.as_ref().map(|r| (o, r)))
        .collect();
    let per_vertex: Vec<f64> = results.iter().map(|(_, r)| r.e_gs / r.n_vertices as f64).collect();
    write_histogram(&dir.join("ground_energy_hist.csv"), &per_vertex)?;
    let baseline: Vec<f64> = results.iter().map(|(_, r)| r.baseline.evaluation.p_low).collect();
    write_histogram(&dir.join("baseline_p_hist.csv"), &baseline)?;

    let mut w = csv::Writer::from_path(dir.join("level_curves.csv"))?;
    w.write_record([
        "level",
        "scaled_p5",
        "scaled_p50",
        "scaled_p95",
        "scoring_scaled_p5",
        "scoring_scaled_p50",
        "scoring_scaled_p95",
    ])?;
    for q in level_quantiles(results.iter().filter_map(|(_, r)| r.sparse.as_ref())) {
        let (a, b, c) = split(Some(q.reoptimized));
        let (d, e, f) = split(q.scoring);
        w.write_record([q.level.to_string(), a, b, c, d, e, f])?;
    }
    w.flush()?;

    let renderings: Vec<AnsatzRendering> = results
        .iter()
        .map(|(o, r)| {
            let inst = sample_instance(report.config.kind, o.instance_seed);
            let edges: Vec<[usize; 2]> = inst.edges().iter().map(|&(i, j)| [i, j]).collect();
            let best = r.sparse_best();
            AnsatzRendering {
                index: o.index,
                instance_seed: o.instance_seed,
                kind: report.config.kind,
                n_vertices: r.n_vertices,
                sparse_level: best.map(|b| b.level),
                sparse_edges: best.map(|b| b.optimized.mask.retained().map(|e| edges[e]).collect()),
                instance_edges: edges,
                couplings: inst.couplings().to_vec(),
            }
        })
        .collect();
    fs::write(dir.join("ansatzes.json"), serde_json::to_string_pretty(&renderings)? + "\n")?;
    Ok(())
}
