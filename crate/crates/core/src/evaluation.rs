//! Per-instance evaluation: simulate an ansatz, score it, optimise its angles.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::instances::{build_energy_table, exact_ground_state, EdgeMask, EnergyTable, GroundStateInfo, ProblemInstance};
use crate::objectives::{energy_expectation, prob_low_energy, GibbsWeights, ObjectiveSpec};
use crate::optimizer::{nelder_mead, OptResult, SimplexConfig};
use crate::simulator::{fold_table, AnsatzGraph, CircuitParams, FoldedSimulator};

/// Objective values of one circuit output, all measured against the full
/// instance Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub gibbs: f64,
    pub energy: f64,
    pub p_low: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedAnsatz {
    pub mask: EdgeMask,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub objective_value: f64,
    pub evaluation: Evaluation,
    pub evals_used: usize,
    pub converged: bool,
}

/// An instance with its energy table, exact ground state and Gibbs weights.
pub struct InstanceContext {
    instance: ProblemInstance,
    table: EnergyTable,
    ground: GroundStateInfo,
    eta: f64,
    weights: GibbsWeights,
    layers: usize,
}

impl InstanceContext {
    /// `eta` is the Gibbs hyperparameter reported in every [`Evaluation`].
    pub fn new(instance: ProblemInstance, eta: f64) -> Result<Self> {
        ObjectiveSpec::Gibbs { eta }.validate()?;
        let table = build_energy_table(&instance, None)?;
        let ground = exact_ground_state(&table);
        let weights = GibbsWeights::new(fold_table(&table), eta);
        Ok(Self {
            instance,
            table,
            ground,
            eta,
            weights,
            layers: 1,
        })
    }

    /// Circuit depth `p` used by [`optimize`](Self::optimize); defaults to 1.
    pub fn with_layers(mut self, p: usize) -> Self {
        assert!(p >= 1);
        self.layers = p;
        self
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn table(&self) -> &EnergyTable {
        &self.table
    }

    pub fn ground(&self) -> &GroundStateInfo {
        &self.ground
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Low-energy cutoff `E0 = 0.95 E_gs`.
    pub fn e0(&self) -> f64 {
        self.ground.e_cutoff
    }

    pub fn folded_energies(&self) -> &[f64] {
        fold_table(&self.table)
    }

    pub fn ansatz(&self, mask: EdgeMask) -> Result<AnsatzGraph<'_>> {
        AnsatzGraph::new(&self.instance, mask)
    }

    fn measure(&self, folded: &[f64]) -> Evaluation {
        let energies = self.folded_energies();
        Evaluation {
            gibbs: self.weights.value(folded, energies),
            energy: energy_expectation(folded, energies),
            p_low: prob_low_energy(folded, energies, self.e0()),
        }
    }

    /// Simulates the ansatz once at fixed angles.
    pub fn evaluate(&self, mask: EdgeMask, params: &CircuitParams) -> Result<Evaluation> {
        let mut sim = FoldedSimulator::new(&self.ansatz(mask)?);
        Ok(self.measure(sim.folded_probabilities(params)))
    }

    /// Nelder-Mead over `[β_1..β_p, γ_1..γ_p]` for the given objective.
    pub fn optimize(
        &self,
        mask: EdgeMask,
        objective: ObjectiveSpec,
        config: &SimplexConfig,
        seed: u64,
    ) -> Result<OptimizedAnsatz> {
        objective.validate()?;
        let mut sim = FoldedSimulator::new(&self.ansatz(mask)?);
        let energies = self.folded_energies();
        let own_weights;
        let weights = match objective {
            ObjectiveSpec::Gibbs { eta } if eta == self.eta => Some(&self.weights),
            ObjectiveSpec::Gibbs { eta } => {
                own_weights = GibbsWeights::new(energies, eta);
                Some(&own_weights)
            }
            _ => None,
        };
        let dim = 2 * self.layers;
        let opt: OptResult = nelder_mead(
            |x| {
                let params = CircuitParams::from_flat(x).expect("even-length vector");
                let probs = sim.folded_probabilities(&params);
                match weights {
                    Some(w) => w.value(probs, energies),
                    None => objective.evaluate(probs, energies),
                }
            },
            dim,
            config,
            seed,
        )?;
        let params = CircuitParams::from_flat(&opt.best_params)?;
        let evaluation = self.measure(sim.folded_probabilities(&params));
        Ok(OptimizedAnsatz {
            mask,
            betas: params.betas().to_vec(),
            gammas: params.gammas().to_vec(),
            objective_value: opt.best_value,
            evaluation,
            evals_used: opt.evals_used,
            converged: opt.converged,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{sample_instance, GraphKind};
    use crate::objectives::gibbs_objective;
    use crate::simulator::{born_probabilities, run_ansatz};

    #[test]
    fn folded_evaluation_matches_full_tables() {
        let inst = sample_instance(GraphKind::Grid { rows: 3, cols: 3 }, 4);
        let ctx = InstanceContext::new(inst.clone(), 20.0).unwrap();
        let mask = inst.full_mask().without(5);
        let params = CircuitParams::single(0.33, -0.41);
        let ev = ctx.evaluate(mask, &params).unwrap();
        let probs = born_probabilities(&run_ansatz(&AnsatzGraph::new(&inst, mask).unwrap(), &params));
        let e = ctx.table().energies();
        assert!((ev.gibbs - gibbs_objective(&probs, e, 20.0)).abs() < 1e-10);
        assert!((ev.energy - energy_expectation(&probs, e)).abs() < 1e-12);
        assert!((ev.p_low - prob_low_energy(&probs, e, ctx.e0())).abs() < 1e-12);
    }

    #[test]
    fn optimisation_result_is_reproducible() {
        let inst = sample_instance(GraphKind::Complete { vertices: 6 }, 4);
        let ctx = InstanceContext::new(inst, 20.0).unwrap();
        let cfg = SimplexConfig::default();
        let a = ctx.optimize(ctx.instance().full_mask(), ObjectiveSpec::Gibbs { eta: 20.0 }, &cfg, 8).unwrap();
        let b = ctx.optimize(ctx.instance().full_mask(), ObjectiveSpec::Gibbs { eta: 20.0 }, &cfg, 8).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.objective_value, a.evaluation.gibbs);
        let e = ctx.optimize(ctx.instance().full_mask(), ObjectiveSpec::Energy, &cfg, 8).unwrap();
        assert_eq!(e.objective_value, e.evaluation.energy);
        assert!(e.evaluation.energy < 0.0);
    }
}
