//! Statevector simulation of the alternating phase / mixer ansatz
//!
//! `|ψ> = e^{iβ_p X} e^{iγ_p E_A} ⋯ e^{iβ_1 X} e^{iγ_1 E_A} H^{⊗n} |0^n>`
//!
//! where `E_A` is the Ising energy restricted to the edges kept by an ansatz
//! graph and `X = Σ_q X_q`.
//!
//! Two engines are provided. [`run_ansatz`] stores all `2^n` amplitudes and is
//! the reference path. [`FoldedSimulator`] exploits the global spin-flip
//! symmetry of the circuit (`ψ(z) = ψ(!z)` for every ansatz and parameter
//! choice) and stores only the half of the register with the top qubit in
//! `|0>`, which halves memory and work in the optimisation loops.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::instances::{build_energy_table, EdgeMask, EnergyTable, ProblemInstance};

/// Level-`p` variational angles.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitParams {
    betas: Vec<f64>,
    gammas: Vec<f64>,
}

impl CircuitParams {
    pub fn new(betas: Vec<f64>, gammas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() || betas.len() != gammas.len() {
            return Err(Error::InvalidParameter(format!(
                "need p >= 1 betas and gammas of equal length (got {} and {})",
                betas.len(),
                gammas.len()
            )));
        }
        Ok(Self { betas, gammas })
    }

    /// `p = 1` angles.
    pub fn single(beta: f64, gamma: f64) -> Self {
        Self {
            betas: vec![beta],
            gammas: vec![gamma],
        }
    }

    /// Interprets `[β_1..β_p, γ_1..γ_p]`, the optimizer's parameter layout.
    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if x.is_empty() || x.len() % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "flat parameter vector of odd or zero length {}",
                x.len()
            )));
        }
        let p = x.len() / 2;
        Self::new(x[..p].to_vec(), x[p..].to_vec())
    }

    pub fn p(&self) -> usize {
        self.betas.len()
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    fn layers(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.betas.iter().copied().zip(self.gammas.iter().copied())
    }
}

/// An instance together with the subset of its edges that carry phase gates.
#[derive(Debug, Clone, Copy)]
pub struct AnsatzGraph<'a> {
    instance: &'a ProblemInstance,
    mask: EdgeMask,
}

impl<'a> AnsatzGraph<'a> {
    pub fn new(instance: &'a ProblemInstance, mask: EdgeMask) -> Result<Self> {
        instance.check_mask(mask)?;
        Ok(Self { instance, mask })
    }

    /// The plain QAOA ansatz: every instance edge retained.
    pub fn full(instance: &'a ProblemInstance) -> Self {
        Self {
            instance,
            mask: instance.full_mask(),
        }
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    pub fn mask(&self) -> EdgeMask {
        self.mask
    }

    pub fn retained_edges(&self) -> usize {
        self.mask.count()
    }

    pub fn removed_edges(&self) -> usize {
        self.instance.n_edges() - self.mask.count()
    }

    /// Boolean mask in canonical edge order.
    pub fn edge_flags(&self) -> Vec<bool> {
        (0..self.instance.n_edges())
            .map(|e| self.mask.contains(e))
            .collect()
    }

    pub fn energy_table(&self) -> EnergyTable {
        build_energy_table(self.instance, Some(self.mask)).expect("mask validated on construction")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn uniform(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let a = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Self {
            n_qubits,
            amplitudes: vec![a; dim],
        }
    }

    pub fn basis(n_qubits: usize, z: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1usize << n_qubits];
        amplitudes[z] = Complex64::new(1.0, 0.0);
        Self {
            n_qubits,
            amplitudes,
        }
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != 1usize << n_qubits {
            return Err(Error::InvalidParameter(format!(
                "{} amplitudes for {} qubits",
                amplitudes.len(),
                n_qubits
            )));
        }
        Ok(Self {
            n_qubits,
            amplitudes,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Multiplies amplitude `z` by `e^{iγ E(z)}`.
    pub fn apply_phase(&mut self, table: &EnergyTable, gamma: f64) {
        assert_eq!(table.len(), self.amplitudes.len());
        for (a, &e) in self.amplitudes.iter_mut().zip(table.energies()) {
            let (s, c) = (gamma * e).sin_cos();
            *a *= Complex64::new(c, s);
        }
    }

    /// Applies `e^{iβ X_q}` on every qubit.
    pub fn apply_mixer(&mut self, beta: f64) {
        let (s, c) = beta.sin_cos();
        for q in 0..self.n_qubits {
            let stride = 1usize << q;
            for block in self.amplitudes.chunks_exact_mut(2 * stride) {
                let (lo, hi) = block.split_at_mut(stride);
                for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                    rotate_pair(a0, a1, c, s);
                }
            }
        }
    }
}

/// `(a0, a1) ↦ (c a0 + i s a1, i s a0 + c a1)`.
#[inline(always)]
fn rotate_pair(a0: &mut Complex64, a1: &mut Complex64, c: f64, s: f64) {
    let (x0, x1) = (*a0, *a1);
    *a0 = Complex64::new(c * x0.re - s * x1.im, c * x0.im + s * x1.re);
    *a1 = Complex64::new(c * x1.re - s * x0.im, c * x1.im + s * x0.re);
}

/// Reference simulation of the ansatz on the full register.
pub fn run_ansatz(ansatz: &AnsatzGraph<'_>, params: &CircuitParams) -> StateVector {
    run_with_table(&ansatz.energy_table(), params)
}

/// Same as [`run_ansatz`] for a precomputed (masked) energy table.
pub fn run_with_table(table: &EnergyTable, params: &CircuitParams) -> StateVector {
    let mut state = StateVector::uniform(table.n_qubits());
    for (beta, gamma) in params.layers() {
        state.apply_phase(table, gamma);
        state.apply_mixer(beta);
    }
    state
}

/// `p(z) = |ψ(z)|²`.
pub fn born_probabilities(state: &StateVector) -> Vec<f64> {
    state.amplitudes.iter().map(|a| a.norm_sqr()).collect()
}

/// `Σ_z probs(z) · weight(E(z))`.
pub fn expectation_diagonal(probs: &[f64], energies: &[f64], weight: impl Fn(f64) -> f64) -> f64 {
    assert_eq!(probs.len(), energies.len(), "misaligned probability and energy tables");
    probs.iter().zip(energies).map(|(p, &e)| p * weight(e)).sum()
}

struct PhaseStep {
    /// Sum of couplings from this qubit to higher qubits (their spins are +1 in the prefix).
    upper_sum: f64,
    /// Couplings to lower qubits.
    lower: Vec<(usize, f64)>,
}

/// Flip-symmetric simulator over the representatives `z < 2^{n-1}`.
///
/// Probabilities are returned *folded*: entry `z` holds `p(z) + p(!z) = 2 p(z)`,
/// so the slice sums to one and any flip-invariant diagonal observable is an
/// ordinary dot product with the first half of its energy table.
pub struct FoldedSimulator {
    n_qubits: usize,
    base_energy: f64,
    steps: Vec<PhaseStep>,
    amplitudes: Vec<Complex64>,
    phases: Vec<Complex64>,
    probabilities: Vec<f64>,
}

impl FoldedSimulator {
    pub fn new(ansatz: &AnsatzGraph<'_>) -> Self {
        let n = ansatz.instance().n_qubits();
        assert!(n >= 1, "empty register");
        let mut steps: Vec<PhaseStep> = (0..n)
            .map(|_| PhaseStep {
                upper_sum: 0.0,
                lower: Vec::new(),
            })
            .collect();
        let mut base_energy = 0.0;
        for (i, j, c) in ansatz.instance().masked_edges(ansatz.mask()) {
            base_energy += c;
            // canonical edges have i < j
            steps[i].upper_sum += c;
            steps[j].lower.push((i, c));
        }
        // the top qubit is pinned to |0>
        steps.truncate(n - 1);
        let half = 1usize << (n - 1);
        Self {
            n_qubits: n,
            base_energy,
            steps,
            amplitudes: vec![Complex64::new(0.0, 0.0); half],
            phases: vec![Complex64::new(0.0, 0.0); half],
            probabilities: vec![0.0; half],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Folded length `2^{n-1}`.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    /// Fills `phases[z] = e^{iγ E_A(z)}` by flipping one qubit at a time.
    fn fill_phases(&mut self, gamma: f64) {
        let cis = |x: f64| {
            let (s, c) = x.sin_cos();
            Complex64::new(c, s)
        };
        self.phases[0] = cis(gamma * self.base_energy);
        for (q, step) in self.steps.iter().enumerate() {
            // flipping qubit q from +1 to -1 changes E by -2 Σ_k J_qk s_k
            let carry = cis(-2.0 * gamma * step.upper_sum);
            let factors: Vec<(usize, Complex64, Complex64)> = step
                .lower
                .iter()
                .map(|&(k, c)| (k, cis(-2.0 * gamma * c), cis(2.0 * gamma * c)))
                .collect();
            let width = 1usize << q;
            let (done, next) = self.phases.split_at_mut(width);
            for (z, (src, dst)) in done.iter().zip(next[..width].iter_mut()).enumerate() {
                let mut f = carry;
                for &(k, up, down) in &factors {
                    f *= if z >> k & 1 == 0 { up } else { down };
                }
                *dst = src * f;
            }
        }
    }

    fn apply_mixer(&mut self, beta: f64) {
        let (s, c) = beta.sin_cos();
        let half = self.amplitudes.len();
        for q in 0..self.n_qubits - 1 {
            let stride = 1usize << q;
            for block in self.amplitudes.chunks_exact_mut(2 * stride) {
                let (lo, hi) = block.split_at_mut(stride);
                for (a0, a1) in lo.iter_mut().zip(hi.iter_mut()) {
                    rotate_pair(a0, a1, c, s);
                }
            }
        }
        if half == 1 {
            // single qubit: the symmetric state is an X eigenvector
            self.amplitudes[0] *= Complex64::new(c, s);
            return;
        }
        // top qubit: ψ(z | top) = ψ(!(z | top)) = ψ(z ^ low)
        let low = half - 1;
        let (lo, hi) = self.amplitudes.split_at_mut(half / 2);
        for (z, a0) in lo.iter_mut().enumerate() {
            let a1 = &mut hi[(z ^ low) - half / 2];
            rotate_pair(a0, a1, c, s);
        }
    }

    fn evolve(&mut self, params: &CircuitParams) {
        let norm = ((1usize << self.n_qubits) as f64).sqrt().recip();
        let mut first = true;
        for (beta, gamma) in params.layers() {
            self.fill_phases(gamma);
            if first {
                for (a, ph) in self.amplitudes.iter_mut().zip(&self.phases) {
                    *a = ph * norm;
                }
                first = false;
            } else {
                for (a, ph) in self.amplitudes.iter_mut().zip(&self.phases) {
                    *a *= ph;
                }
            }
            self.apply_mixer(beta);
        }
    }

    /// Folded Born probabilities of the ansatz output.
    pub fn folded_probabilities(&mut self, params: &CircuitParams) -> &[f64] {
        self.evolve(params);
        for (p, a) in self.probabilities.iter_mut().zip(&self.amplitudes) {
            *p = 2.0 * a.norm_sqr();
        }
        &self.probabilities
    }

    /// Full statevector, mirrored from the representatives.
    pub fn state(&mut self, params: &CircuitParams) -> StateVector {
        self.evolve(params);
        let half = self.amplitudes.len();
        let all = 2 * half - 1;
        let amplitudes = (0..2 * half)
            .map(|z| self.amplitudes[if z < half { z } else { z ^ all }])
            .collect();
        StateVector {
            n_qubits: self.n_qubits,
            amplitudes,
        }
    }
}

/// First half of a flip-symmetric table, aligned with folded probabilities.
pub fn fold_table(table: &EnergyTable) -> &[f64] {
    &table.energies()[..table.len() / 2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{sample_instance, GraphKind};
    use std::f64::consts::PI;

    fn pair(j: f64) -> ProblemInstance {
        ProblemInstance::new(GraphKind::Complete { vertices: 2 }, vec![j], 0).unwrap()
    }

    #[test]
    fn zero_angles_leave_uniform_state() {
        let inst = sample_instance(GraphKind::Complete { vertices: 5 }, 4);
        let state = run_ansatz(&AnsatzGraph::full(&inst), &CircuitParams::single(0.0, 0.0));
        for p in born_probabilities(&state) {
            assert!((p - 1.0 / 32.0).abs() < 1e-15);
        }
    }

    #[test]
    fn basis_state_point_mass() {
        let probs = born_probabilities(&StateVector::basis(3, 5));
        assert_eq!(probs, vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn two_qubit_energy_closed_form() {
        let inst = pair(1.0);
        let table = build_energy_table(&inst, None).unwrap();
        for &(b, g) in &[(0.3, -0.2), (PI / 8.0, -PI / 4.0), (1.1, 0.7)] {
            let probs = born_probabilities(&run_ansatz(&AnsatzGraph::full(&inst), &CircuitParams::single(b, g)));
            let e = expectation_diagonal(&probs, table.energies(), |e| e);
            assert!((e - (4.0 * b).sin() * (2.0 * g).sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn masking_equals_zero_coupling() {
        let inst = sample_instance(GraphKind::Complete { vertices: 6 }, 8);
        let mask = inst.full_mask().without(2).without(7).without(11);
        let mut zeroed = inst.couplings().to_vec();
        for e in [2, 7, 11] {
            zeroed[e] = 0.0;
        }
        let zinst = ProblemInstance::new(inst.kind(), zeroed, 0).unwrap();
        let params = CircuitParams::new(vec![0.4, 0.1], vec![-0.3, 0.6]).unwrap();
        let a = run_ansatz(&AnsatzGraph::new(&inst, mask).unwrap(), &params);
        let b = run_ansatz(&AnsatzGraph::full(&zinst), &params);
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn folded_matches_full() {
        for (kind, seed) in [
            (GraphKind::Grid { rows: 2, cols: 3 }, 1),
            (GraphKind::Complete { vertices: 7 }, 2),
            (GraphKind::Complete { vertices: 1 }, 3),
            (GraphKind::Complete { vertices: 2 }, 4),
        ] {
            let inst = sample_instance(kind, seed);
            let mask = if inst.n_edges() > 3 {
                inst.full_mask().without(1).without(3)
            } else {
                inst.full_mask()
            };
            let ansatz = AnsatzGraph::new(&inst, mask).unwrap();
            let params = CircuitParams::new(vec![0.37, -0.2], vec![-0.61, 0.25]).unwrap();
            let full = run_ansatz(&ansatz, &params);
            let mut sim = FoldedSimulator::new(&ansatz);
            let mirrored = sim.state(&params);
            for (x, y) in full.amplitudes().iter().zip(mirrored.amplitudes()) {
                assert!((x - y).norm() < 1e-12, "{kind:?}: {x} vs {y}");
            }
            let probs = born_probabilities(&full);
            let folded = sim.folded_probabilities(&params).to_vec();
            for (z, q) in folded.iter().enumerate() {
                assert!((q - 2.0 * probs[z]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn beta_shift_by_pi_keeps_probabilities() {
        let inst = sample_instance(GraphKind::Complete { vertices: 5 }, 9);
        let ansatz = AnsatzGraph::full(&inst);
        let a = born_probabilities(&run_ansatz(&ansatz, &CircuitParams::single(0.3, -0.4)));
        let b = born_probabilities(&run_ansatz(&ansatz, &CircuitParams::single(0.3 + PI, -0.4)));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn params_validation() {
        assert!(CircuitParams::new(vec![], vec![]).is_err());
        assert!(CircuitParams::new(vec![0.1], vec![0.1, 0.2]).is_err());
        let p = CircuitParams::from_flat(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.betas(), &[1.0, 2.0]);
        assert_eq!(p.gammas(), &[3.0, 4.0]);
        assert!(CircuitParams::from_flat(&[1.0]).is_err());
    }
}
