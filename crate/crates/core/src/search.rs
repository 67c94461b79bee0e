//! Ansatz architecture search by level-wise edge removal.
//!
//! Level 0 holds the full instance graph. Each later level expands every
//! survivor of the previous level by clearing one retained edge, scores the
//! de-duplicated children and keeps the `beam_width` best. A beam width of 1
//! is greedy search; a width at least as large as every level's candidate set
//! is exhaustive enumeration.
//!
//! Scores are "lower is better". Ties are broken by ascending mask value, and
//! every stochastic score is seeded from `(search seed, mask)`, so a trace is
//! independent of the order in which candidates are visited.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::{energy_approximation, estimated_gamma, BETA_STAR};
use crate::error::{Error, Result};
use crate::evaluation::{InstanceContext, OptimizedAnsatz};
use crate::instances::EdgeMask;
use crate::objectives::{GibbsWeights, ObjectiveSpec};
use crate::optimizer::SimplexConfig;
use crate::seed;
use crate::simulator::{CircuitParams, FoldedSimulator};

/// How a candidate ansatz is scored during search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ScoringPrescription {
    /// Gibbs objective minimised over the angles.
    NelderMead { config: SimplexConfig, eta: f64 },
    /// Gibbs objective at `β = π/8` and the cubic-estimate `γ*` of the candidate.
    Estimated { eta: f64 },
    /// Gibbs objective at `β = π/8` and a calibrated constant `γ`.
    Fixed { gamma: f64, eta: f64 },
    /// Pseudo-random number keyed by `(seed, mask)`.
    Random { seed: u64 },
    /// Cubic-truncated analytic energy at the estimated angles.
    EnergyApprox,
}

impl ScoringPrescription {
    pub fn validate(&self) -> Result<()> {
        let eta = match *self {
            ScoringPrescription::NelderMead { config, eta } => {
                config.validate(2)?;
                Some(eta)
            }
            ScoringPrescription::Estimated { eta } => Some(eta),
            ScoringPrescription::Fixed { gamma, eta } => {
                if !gamma.is_finite() {
                    return Err(Error::InvalidParameter(format!("fixed gamma {gamma} is not finite")));
                }
                Some(eta)
            }
            ScoringPrescription::Random { .. } | ScoringPrescription::EnergyApprox => None,
        };
        match eta {
            Some(eta) if !(eta > 0.0 && eta.is_finite()) => {
                Err(Error::InvalidParameter(format!("scoring eta must be positive, got {eta}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScoringPrescription::NelderMead { .. } => "nm",
            ScoringPrescription::Estimated { .. } => "estimated",
            ScoringPrescription::Fixed { .. } => "fixed",
            ScoringPrescription::Random { .. } => "random",
            ScoringPrescription::EnergyApprox => "energy-approx",
        }
    }

    /// True when scoring needs no circuit simulation.
    pub fn is_heuristic(&self) -> bool {
        matches!(self, ScoringPrescription::Random { .. } | ScoringPrescription::EnergyApprox)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub beam_width: usize,
    pub max_removals: usize,
    pub scoring: ScoringPrescription,
    pub seed: u64,
}

impl SearchConfig {
    pub fn greedy(max_removals: usize, scoring: ScoringPrescription, seed: u64) -> Self {
        Self {
            beam_width: 1,
            max_removals,
            scoring,
            seed,
        }
    }

    pub fn validate(&self, n_edges: usize) -> Result<()> {
        if self.beam_width == 0 {
            return Err(Error::InvalidParameter("beam width must be at least 1".into()));
        }
        if self.max_removals > n_edges {
            return Err(Error::InvalidParameter(format!(
                "cannot remove {} of {} edges",
                self.max_removals, n_edges
            )));
        }
        self.scoring.validate()
    }
}

/// A scored candidate and the angles its score was measured at (empty for
/// random scores).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredAnsatz {
    pub mask: EdgeMask,
    pub score: f64,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
}

impl ScoredAnsatz {
    pub fn params(&self) -> Option<CircuitParams> {
        CircuitParams::new(self.betas.clone(), self.gammas.clone()).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRecord {
    pub level: usize,
    /// Unique candidates scored at this level.
    pub candidates_scored: usize,
    /// Best first.
    pub survivors: Vec<ScoredAnsatz>,
}

impl LevelRecord {
    pub fn best(&self) -> &ScoredAnsatz {
        &self.survivors[0]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchTrace {
    pub n_edges: usize,
    pub config: SearchConfig,
    pub levels: Vec<LevelRecord>,
    /// Candidates scored across levels `1..=max_removals`; the level-0 root is
    /// not counted.
    pub visited: usize,
}

impl SearchTrace {
    pub fn final_level(&self) -> &LevelRecord {
        self.levels.last().expect("trace has level 0")
    }

    /// `w (n + 1) (m - n/2)` for beam width `w`, `n` removals and `m` edges.
    pub fn visit_bound(&self) -> f64 {
        visit_bound(self.config.beam_width, self.config.max_removals, self.n_edges)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn visit_bound(beam_width: usize, max_removals: usize, n_edges: usize) -> f64 {
    beam_width as f64 * (max_removals as f64 + 1.0) * (n_edges as f64 - max_removals as f64 / 2.0)
}

/// Every distinct mask obtained by clearing one retained edge of a survivor,
/// in ascending mask order.
pub fn expand(survivors: &[EdgeMask]) -> Vec<EdgeMask> {
    survivors
        .iter()
        .flat_map(|m| m.retained().map(move |e| m.without(e)))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

/// Scores candidates of one instance under one prescription.
pub struct Scorer<'a> {
    ctx: &'a InstanceContext,
    prescription: ScoringPrescription,
    seed: u64,
    weights: Option<GibbsWeights>,
}

impl<'a> Scorer<'a> {
    pub fn new(ctx: &'a InstanceContext, prescription: ScoringPrescription, seed: u64) -> Result<Self> {
        prescription.validate()?;
        let weights = match prescription {
            ScoringPrescription::Estimated { eta } | ScoringPrescription::Fixed { eta, .. } => {
                Some(GibbsWeights::new(ctx.folded_energies(), eta))
            }
            _ => None,
        };
        Ok(Self {
            ctx,
            prescription,
            seed,
            weights,
        })
    }

    fn simulate_gibbs(&self, mask: EdgeMask, params: &CircuitParams) -> Result<f64> {
        let mut sim = FoldedSimulator::new(&self.ctx.ansatz(mask)?);
        let probs = sim.folded_probabilities(params);
        let weights = self.weights.as_ref().expect("simulating prescriptions carry weights");
        Ok(weights.value(probs, self.ctx.folded_energies()))
    }

    pub fn score(&self, mask: EdgeMask) -> Result<ScoredAnsatz> {
        let mask_seed = seed::derive_wide(self.seed, mask.0);
        let (score, beta, gamma) = match self.prescription {
            ScoringPrescription::NelderMead { config, eta } => {
                let opt = self.ctx.optimize(mask, ObjectiveSpec::Gibbs { eta }, &config, mask_seed)?;
                return Ok(ScoredAnsatz {
                    mask,
                    score: opt.objective_value,
                    betas: opt.betas,
                    gammas: opt.gammas,
                });
            }
            ScoringPrescription::Estimated { .. } => {
                let gamma = estimated_gamma(&self.ctx.ansatz(mask)?)?;
                let f = self.simulate_gibbs(mask, &CircuitParams::single(BETA_STAR, gamma))?;
                (f, BETA_STAR, gamma)
            }
            ScoringPrescription::Fixed { gamma, .. } => {
                let f = self.simulate_gibbs(mask, &CircuitParams::single(BETA_STAR, gamma))?;
                (f, BETA_STAR, gamma)
            }
            ScoringPrescription::Random { seed } => {
                self.ctx.ansatz(mask)?;
                return Ok(ScoredAnsatz {
                    mask,
                    score: seed::unit_interval(seed::derive_wide(seed, mask.0)),
                    betas: Vec::new(),
                    gammas: Vec::new(),
                });
            }
            ScoringPrescription::EnergyApprox => {
                let ansatz = self.ctx.ansatz(mask)?;
                let gamma = estimated_gamma(&ansatz)?;
                (energy_approximation(&ansatz)?, BETA_STAR, gamma)
            }
        };
        Ok(ScoredAnsatz {
            mask,
            score,
            betas: vec![beta],
            gammas: vec![gamma],
        })
    }
}

fn by_score(a: &ScoredAnsatz, b: &ScoredAnsatz) -> std::cmp::Ordering {
    a.score.total_cmp(&b.score).then(a.mask.cmp(&b.mask))
}

/// Runs beam search on one instance.
pub fn run_search(ctx: &InstanceContext, config: &SearchConfig) -> Result<SearchTrace> {
    let n_edges = ctx.instance().n_edges();
    config.validate(n_edges)?;
    let scorer = Scorer::new(ctx, config.scoring, config.seed)?;
    let root = scorer.score(ctx.instance().full_mask())?;
    let mut levels = vec![LevelRecord {
        level: 0,
        candidates_scored: 1,
        survivors: vec![root],
    }];
    let mut visited = 0;
    for level in 1..=config.max_removals {
        let parents: Vec<EdgeMask> = levels[level - 1].survivors.iter().map(|s| s.mask).collect();
        let candidates = expand(&parents);
        let mut scored = candidates
            .par_iter()
            .map(|&m| scorer.score(m))
            .collect::<Result<Vec<_>>>()?;
        visited += scored.len();
        let candidates_scored = scored.len();
        scored.sort_by(by_score);
        scored.truncate(config.beam_width);
        levels.push(LevelRecord {
            level,
            candidates_scored,
            survivors: scored,
        });
    }
    Ok(SearchTrace {
        n_edges,
        config: *config,
        levels,
        visited,
    })
}

/// Gibbs-optimised full-graph ansatz, the denominator of the scaled probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub eta: f64,
    pub config: SimplexConfig,
    pub seed: u64,
    pub optimum: OptimizedAnsatz,
}

impl Reference {
    pub fn compute(ctx: &InstanceContext, eta: f64, config: &SimplexConfig, seed: u64) -> Result<Self> {
        let full = ctx.instance().full_mask();
        let optimum = reoptimize(ctx, full, eta, config, seed)?;
        Ok(Self {
            eta,
            config: *config,
            seed,
            optimum,
        })
    }

    pub fn p_low(&self) -> f64 {
        self.optimum.evaluation.p_low
    }

    /// Gibbs re-optimisation of `mask` under the same protocol as the reference.
    pub fn reoptimize(&self, ctx: &InstanceContext, mask: EdgeMask) -> Result<OptimizedAnsatz> {
        if mask == self.optimum.mask {
            return Ok(self.optimum.clone());
        }
        reoptimize(ctx, mask, self.eta, &self.config, self.seed)
    }

    pub fn scaled(&self, p_low: f64) -> f64 {
        p_low / self.p_low()
    }
}

fn reoptimize(
    ctx: &InstanceContext,
    mask: EdgeMask,
    eta: f64,
    config: &SimplexConfig,
    seed: u64,
) -> Result<OptimizedAnsatz> {
    ctx.optimize(mask, ObjectiveSpec::Gibbs { eta }, config, seed::derive_wide(seed, mask.0))
}

/// Final evaluation of the best ansatz of one level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelEvaluation {
    pub level: usize,
    pub optimized: OptimizedAnsatz,
    pub scaled_probability: f64,
    /// Probability of low energy at the angles used while scoring.
    pub scoring_p_low: Option<f64>,
    pub scoring_scaled_probability: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalEvaluation {
    pub reference_p_low: f64,
    pub levels: Vec<LevelEvaluation>,
}

impl FinalEvaluation {
    /// Level whose re-optimised ansatz has the lowest Gibbs value (earliest on ties).
    pub fn best_by_gibbs(&self) -> &LevelEvaluation {
        self.levels
            .iter()
            .min_by(|a, b| {
                a.optimized
                    .evaluation
                    .gibbs
                    .total_cmp(&b.optimized.evaluation.gibbs)
                    .then(a.level.cmp(&b.level))
            })
            .expect("at least level 0")
    }
}

/// Re-optimises the best ansatz of every level and scales its probability of
/// low energy by the reference.
pub fn final_evaluation(ctx: &InstanceContext, trace: &SearchTrace, reference: &Reference) -> Result<FinalEvaluation> {
    let levels = trace
        .levels
        .par_iter()
        .map(|record| {
            let best = record.best();
            let optimized = reference.reoptimize(ctx, best.mask)?;
            let scoring_p_low = match best.params() {
                Some(params) => Some(ctx.evaluate(best.mask, &params)?.p_low),
                None => None,
            };
            Ok(LevelEvaluation {
                level: record.level,
                scaled_probability: reference.scaled(optimized.evaluation.p_low),
                optimized,
                scoring_p_low,
                scoring_scaled_probability: scoring_p_low.map(|p| reference.scaled(p)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FinalEvaluation {
        reference_p_low: reference.p_low(),
        levels,
    })
}

/// Outcome of re-ranking the top `k` final-level survivors by simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopKResult {
    pub k: usize,
    /// Highest scaled probability among the re-optimised candidates.
    pub best_scaled_probability: f64,
    pub best_mask: EdgeMask,
    /// Scaled probability of the candidate with the lowest re-optimised Gibbs value.
    pub gibbs_selected_scaled_probability: f64,
    pub gibbs_selected_mask: EdgeMask,
}

/// Re-optimises the `k` best-scored final-level survivors; `k` is clamped to
/// the number of survivors.
pub fn top_k_reranking(
    ctx: &InstanceContext,
    trace: &SearchTrace,
    k: usize,
    reference: &Reference,
) -> Result<TopKResult> {
    let mut curve = top_k_curve(ctx, trace, &[k], reference)?;
    Ok(curve.remove(0))
}

/// [`top_k_reranking`] for several `k`, sharing the re-optimisations.
pub fn top_k_curve(
    ctx: &InstanceContext,
    trace: &SearchTrace,
    ks: &[usize],
    reference: &Reference,
) -> Result<Vec<TopKResult>> {
    let survivors = &trace.final_level().survivors;
    if ks.contains(&0) {
        return Err(Error::InvalidParameter("top-k re-ranking needs k >= 1".into()));
    }
    let k_max = ks.iter().copied().max().unwrap_or(0).min(survivors.len());
    let optimized = survivors[..k_max]
        .par_iter()
        .map(|s| reference.reoptimize(ctx, s.mask))
        .collect::<Result<Vec<_>>>()?;
    Ok(ks
        .iter()
        .map(|&k| {
            let pool = &optimized[..k.min(k_max)];
            let best = pool
                .iter()
                .reduce(|a, b| if b.evaluation.p_low > a.evaluation.p_low { b } else { a })
                .expect("k >= 1");
            let gibbs = pool
                .iter()
                .reduce(|a, b| if b.evaluation.gibbs < a.evaluation.gibbs { b } else { a })
                .expect("k >= 1");
            TopKResult {
                k: pool.len(),
                best_scaled_probability: reference.scaled(best.evaluation.p_low),
                best_mask: best.mask,
                gibbs_selected_scaled_probability: reference.scaled(gibbs.evaluation.p_low),
                gibbs_selected_mask: gibbs.mask,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{sample_instance, GraphKind};

    const K4: GraphKind = GraphKind::Complete { vertices: 4 };

    fn ctx(kind: GraphKind, s: u64) -> InstanceContext {
        InstanceContext::new(sample_instance(kind, s), 20.0).unwrap()
    }

    #[test]
    fn expansion_of_k4() {
        let full = EdgeMask::full(6);
        assert_eq!(expand(&[full]).len(), 6);
        let a = full.without(0);
        let b = full.without(1);
        let children = expand(&[a, b]);
        // 5 + 5 children, sharing the one with both edges removed
        assert_eq!(children.len(), 9);
        assert!(children.windows(2).all(|w| w[0] < w[1]));
        assert!(children.iter().all(|c| c.count() == 4));
        assert!(expand(&[EdgeMask::empty()]).is_empty());
    }

    #[test]
    fn random_score_is_mask_intrinsic() {
        let c = ctx(K4, 1);
        let s = Scorer::new(&c, ScoringPrescription::Random { seed: 5 }, 0).unwrap();
        let m = EdgeMask::full(6).without(2);
        assert_eq!(s.score(m).unwrap(), s.score(m).unwrap());
        assert_ne!(s.score(m).unwrap().score, s.score(m.without(3)).unwrap().score);
    }

    #[test]
    fn estimated_score_matches_direct_simulation() {
        let c = ctx(GraphKind::Grid { rows: 3, cols: 3 }, 2);
        let mask = c.instance().full_mask().without(4);
        let s = Scorer::new(&c, ScoringPrescription::Estimated { eta: 20.0 }, 0).unwrap();
        let scored = s.score(mask).unwrap();
        let gamma = estimated_gamma(&c.ansatz(mask).unwrap()).unwrap();
        let direct = c.evaluate(mask, &CircuitParams::single(BETA_STAR, gamma)).unwrap().gibbs;
        assert!((scored.score - direct).abs() < 1e-12);
    }

    #[test]
    fn analytic_prescriptions_reject_empty_mask() {
        let c = ctx(K4, 3);
        for p in [ScoringPrescription::Estimated { eta: 1.0 }, ScoringPrescription::EnergyApprox] {
            let s = Scorer::new(&c, p, 0).unwrap();
            assert!(s.score(EdgeMask::empty()).is_err());
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let c = ctx(K4, 3);
        let mut cfg = SearchConfig::greedy(2, ScoringPrescription::EnergyApprox, 0);
        cfg.beam_width = 0;
        assert!(run_search(&c, &cfg).is_err());
        let cfg = SearchConfig::greedy(7, ScoringPrescription::EnergyApprox, 0);
        assert!(run_search(&c, &cfg).is_err());
        let cfg = SearchConfig::greedy(1, ScoringPrescription::Estimated { eta: 0.0 }, 0);
        assert!(run_search(&c, &cfg).is_err());
    }

    #[test]
    fn greedy_selects_min_child() {
        let c = ctx(GraphKind::Complete { vertices: 5 }, 9);
        let cfg = SearchConfig::greedy(4, ScoringPrescription::Estimated { eta: 20.0 }, 1);
        let trace = run_search(&c, &cfg).unwrap();
        let scorer = Scorer::new(&c, cfg.scoring, cfg.seed).unwrap();
        for l in 1..trace.levels.len() {
            let parent = trace.levels[l - 1].best().mask;
            let best = expand(&[parent])
                .into_iter()
                .map(|m| scorer.score(m).unwrap())
                .min_by(by_score)
                .unwrap();
            assert_eq!(&best, trace.levels[l].best());
            assert_eq!(trace.levels[l].best().mask.count(), 10 - l);
        }
        assert_eq!(trace.visited, 10 + 9 + 8 + 7);
        assert!(trace.visited as f64 <= trace.visit_bound());
    }

    #[test]
    fn level_zero_scaled_probability_is_one() {
        let c = ctx(K4, 4);
        let cfg = SearchConfig::greedy(2, ScoringPrescription::Fixed { gamma: -0.3, eta: 20.0 }, 1);
        let trace = run_search(&c, &cfg).unwrap();
        let reference = Reference::compute(&c, 20.0, &SimplexConfig::default(), 6).unwrap();
        let eval = final_evaluation(&c, &trace, &reference).unwrap();
        assert_eq!(eval.levels[0].scaled_probability, 1.0);
        assert!(eval.levels.iter().all(|l| l.scaled_probability >= 0.0));
        let again = reoptimize(&c, c.instance().full_mask(), 20.0, &SimplexConfig::default(), 6).unwrap();
        assert_eq!(again, reference.optimum);
    }

    #[test]
    fn top_k_is_monotone_and_k1_matches_final_evaluation() {
        let c = ctx(GraphKind::Complete { vertices: 5 }, 12);
        let cfg = SearchConfig {
            beam_width: 8,
            max_removals: 3,
            scoring: ScoringPrescription::Random { seed: 3 },
            seed: 0,
        };
        let trace = run_search(&c, &cfg).unwrap();
        let reference = Reference::compute(&c, 20.0, &SimplexConfig::default(), 2).unwrap();
        let ks: Vec<usize> = (1..=10).collect();
        let curve = top_k_curve(&c, &trace, &ks, &reference).unwrap();
        assert!(curve.windows(2).all(|w| w[1].best_scaled_probability >= w[0].best_scaled_probability));
        assert_eq!(curve.last().unwrap().k, 8);
        let eval = final_evaluation(&c, &trace, &reference).unwrap();
        let last = eval.levels.last().unwrap();
        assert_eq!(curve[0].best_scaled_probability, last.scaled_probability);
        assert_eq!(curve[0].best_mask, last.optimized.mask);
    }

    #[test]
    fn trace_serialises_masks_as_hex() {
        let c = ctx(K4, 1);
        let cfg = SearchConfig::greedy(1, ScoringPrescription::EnergyApprox, 0);
        let trace = run_search(&c, &cfg).unwrap();
        let json = trace.to_json().unwrap();
        assert!(json.contains("\"mask\": \"3f\""));
        let back: SearchTrace = serde_json::from_str(&json).unwrap();
        assert_eq!(back, trace);
    }
}
