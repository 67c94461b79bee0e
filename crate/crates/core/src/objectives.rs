//! Objective functions over a Born distribution and a diagonal energy table.
//!
//! All functions take a probability slice and an energy slice of equal length.
//! Either full (`2^n`) or folded (`2^{n-1}`, see
//! [`FoldedSimulator`](crate::simulator::FoldedSimulator)) tables may be used
//! since every quantity here is a flip-invariant expectation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default Gibbs hyperparameter `η = (E0 - E_gs)^{-1}` for `E_gs ≈ -1`.
pub const DEFAULT_ETA: f64 = 20.0;

/// What the optimizer minimises.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ObjectiveSpec {
    /// `f = -log <e^{-ηE}>`.
    Gibbs { eta: f64 },
    /// `<E>`.
    Energy,
    /// `-P(E < E0)`, negated so that lower is better.
    ProbLowEnergy { e0: f64 },
}

impl ObjectiveSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ObjectiveSpec::Gibbs { eta } if !(eta > 0.0 && eta.is_finite()) => Err(
                Error::InvalidParameter(format!("Gibbs eta must be positive, got {eta}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, probs: &[f64], energies: &[f64]) -> f64 {
        match *self {
            ObjectiveSpec::Gibbs { eta } => gibbs_objective(probs, energies, eta),
            ObjectiveSpec::Energy => energy_expectation(probs, energies),
            ObjectiveSpec::ProbLowEnergy { e0 } => -prob_low_energy(probs, energies, e0),
        }
    }
}

fn min_energy(energies: &[f64]) -> f64 {
    energies.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Gibbs objective `-log Σ p(z) e^{-η E(z)}`, evaluated as
/// `η E_min - log Σ p(z) e^{-η (E(z) - E_min)}`.
///
/// `η = 0` returns exactly zero. If the shifted sum underflows (only possible
/// for very large `η` with negligible ground-state weight) a full log-sum-exp
/// over `log p(z) - η E(z)` is used instead.
pub fn gibbs_objective(probs: &[f64], energies: &[f64], eta: f64) -> f64 {
    assert_eq!(probs.len(), energies.len(), "misaligned probability and energy tables");
    if eta == 0.0 {
        return 0.0;
    }
    let e_min = min_energy(energies);
    let sum: f64 = probs
        .iter()
        .zip(energies)
        .map(|(p, e)| p * (-eta * (e - e_min)).exp())
        .sum();
    if sum.is_normal() {
        eta * e_min - sum.ln()
    } else {
        -log_sum_exp(
            probs
                .iter()
                .zip(energies)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, e)| p.ln() - eta * e),
        )
    }
}

/// Direct `-log Σ p e^{-ηE}` without shifting; overflows for large `η`.
pub fn gibbs_objective_naive(probs: &[f64], energies: &[f64], eta: f64) -> f64 {
    -probs
        .iter()
        .zip(energies)
        .map(|(p, e)| p * (-eta * e).exp())
        .sum::<f64>()
        .ln()
}

fn log_sum_exp(terms: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = terms.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.map(|t| (t - max).exp()).sum::<f64>().ln()
}

/// Gibbs weights `e^{-η (E(z) - E_min)}` precomputed for repeated evaluation.
#[derive(Debug, Clone)]
pub struct GibbsWeights {
    eta: f64,
    e_min: f64,
    weights: Vec<f64>,
}

impl GibbsWeights {
    pub fn new(energies: &[f64], eta: f64) -> Self {
        let e_min = min_energy(energies);
        let weights = energies.iter().map(|e| (-eta * (e - e_min)).exp()).collect();
        Self { eta, e_min, weights }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Same value as [`gibbs_objective`] on the energies these weights were built from.
    pub fn value(&self, probs: &[f64], energies: &[f64]) -> f64 {
        if self.eta == 0.0 {
            return 0.0;
        }
        let sum: f64 = probs.iter().zip(&self.weights).map(|(p, w)| p * w).sum();
        if sum.is_normal() {
            self.eta * self.e_min - sum.ln()
        } else {
            gibbs_objective(probs, energies, self.eta)
        }
    }
}

pub fn energy_expectation(probs: &[f64], energies: &[f64]) -> f64 {
    assert_eq!(probs.len(), energies.len(), "misaligned probability and energy tables");
    probs.iter().zip(energies).map(|(p, e)| p * e).sum()
}

/// `P(E < E0)` with a strict inequality.
pub fn prob_low_energy(probs: &[f64], energies: &[f64], e0: f64) -> f64 {
    assert_eq!(probs.len(), energies.len(), "misaligned probability and energy tables");
    probs
        .iter()
        .zip(energies)
        .filter(|(_, &e)| e < e0)
        .map(|(p, _)| p)
        .sum()
}

/// `η = 1 / (E0 - E_gs)`.
pub fn eta_estimate(e0: f64, e_gs: f64) -> Result<f64> {
    if e0 > e_gs {
        Ok((e0 - e_gs).recip())
    } else {
        Err(Error::EtaUndefined { e0, e_gs })
    }
}

/// Both sides of `P(E < E0) <= <e^{-η (E - E0)}>`.
pub fn markov_bound_gap(probs: &[f64], energies: &[f64], eta: f64, e0: f64) -> (f64, f64) {
    let lhs = prob_low_energy(probs, energies, e0);
    let rhs = probs
        .iter()
        .zip(energies)
        .map(|(p, e)| p * (-eta * (e - e0)).exp())
        .sum();
    (lhs, rhs)
}

/// Solves `<E e^{-ηE}> / <e^{-ηE}> = E0` for `η` by bisection.
///
/// The left side decreases monotonically from `<E>` at `η = 0` toward the
/// lowest energy carrying probability, so a root exists only for `E0` strictly
/// between the two.
pub fn optimal_eta(probs: &[f64], energies: &[f64], e0: f64) -> Result<f64> {
    let support_min = probs
        .iter()
        .zip(energies)
        .filter(|(p, _)| **p > 0.0)
        .map(|(_, &e)| e)
        .fold(f64::INFINITY, f64::min);
    let mean = energy_expectation(probs, energies);
    if !(e0 < mean && e0 > support_min) {
        return Err(Error::InvalidParameter(format!(
            "E0 = {e0} must lie strictly between the lowest populated energy {support_min} and <E> = {mean}"
        )));
    }
    let tilted_mean = |eta: f64| {
        let (num, den) = probs
            .iter()
            .zip(energies)
            .fold((0.0, 0.0), |(num, den), (p, &e)| {
                let w = p * (-eta * (e - support_min)).exp();
                (num + w * e, den + w)
            });
        num / den
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    while tilted_mean(hi) > e0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidParameter("optimal eta diverges".into()));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tilted_mean(mid) > e0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// First three cumulants of the energy distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulantReport {
    pub mu: f64,
    pub sigma2: f64,
    pub kappa3: f64,
}

impl CumulantReport {
    /// `μη - σ²η²/2 + κ₃η³/6`, the small-η expansion of the Gibbs objective.
    pub fn gibbs_series(&self, eta: f64) -> f64 {
        self.mu * eta - self.sigma2 * eta * eta / 2.0 + self.kappa3 * eta.powi(3) / 6.0
    }
}

pub fn cumulants(probs: &[f64], energies: &[f64]) -> CumulantReport {
    let mu = energy_expectation(probs, energies);
    let (m2, m3) = probs
        .iter()
        .zip(energies)
        .fold((0.0, 0.0), |(m2, m3), (p, e)| {
            let d = e - mu;
            (m2 + p * d * d, m3 + p * d * d * d)
        });
    CumulantReport {
        mu,
        sigma2: m2.max(0.0),
        kappa3: m3,
    }
}

/// Depolarizing channel: with probability `p` the output is maximally mixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    p: f64,
}

impl NoiseModel {
    pub fn new(p: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&p) {
            Ok(Self { p })
        } else {
            Err(Error::InvalidParameter(format!(
                "depolarizing probability {p} outside [0, 1]"
            )))
        }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `(1 - p) probs + p · uniform`.
    pub fn mix(&self, probs: &[f64]) -> Vec<f64> {
        let uni = (probs.len() as f64).recip();
        probs
            .iter()
            .map(|q| (1.0 - self.p) * q + self.p * uni)
            .collect()
    }
}

/// Gibbs objective of the depolarized distribution, by explicit mixing.
pub fn noisy_gibbs(probs: &[f64], energies: &[f64], eta: f64, noise: NoiseModel) -> f64 {
    gibbs_objective(&noise.mix(probs), energies, eta)
}

/// `f_ideal - log(1 - p (G - T) / G)` with `G = <e^{-ηE}>_ψ` and
/// `T = Tr e^{-ηE} / 2^n`; both are computed relative to `E_min` so the
/// ratio is unaffected by overflow.
pub fn noisy_gibbs_correction(probs: &[f64], energies: &[f64], eta: f64, noise: NoiseModel) -> f64 {
    let e_min = min_energy(energies);
    let (g, t) = probs
        .iter()
        .zip(energies)
        .fold((0.0, 0.0), |(g, t), (p, e)| {
            let w = (-eta * (e - e_min)).exp();
            (g + p * w, t + w)
        });
    let t = t / energies.len() as f64;
    gibbs_objective(probs, energies, eta) - (1.0 - noise.p * (g - t) / g).ln()
}

/// `P_noisy = P_ideal - p (P_ideal - P_uni)`.
pub fn noisy_prob(p_ideal: f64, p_uni: f64, p_noise: f64) -> f64 {
    p_ideal - p_noise * (p_ideal - p_uni)
}

/// `P(E < E0)` of the depolarized distribution, by explicit mixing.
pub fn noisy_prob_mixed(probs: &[f64], energies: &[f64], e0: f64, noise: NoiseModel) -> f64 {
    prob_low_energy(&noise.mix(probs), energies, e0)
}

/// `P(E < E0)` under uniform guessing.
pub fn uniform_prob_low(energies: &[f64], e0: f64) -> f64 {
    energies.iter().filter(|&&e| e < e0).count() as f64 / energies.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    const PAIR: [f64; 4] = [1.0, -1.0, -1.0, 1.0];
    const UNIFORM4: [f64; 4] = [0.25; 4];

    #[test]
    fn gibbs_at_zero_eta_is_zero() {
        assert_eq!(gibbs_objective(&[0.1, 0.2, 0.3, 0.4], &PAIR, 0.0), 0.0);
    }

    #[test]
    fn gibbs_uniform_pair_is_minus_log_cosh() {
        for eta in [0.1, 1.0, 3.5, 20.0] {
            let f = gibbs_objective(&UNIFORM4, &PAIR, eta);
            assert!((f + eta.cosh().ln()).abs() < 1e-12, "eta {eta}");
        }
    }

    #[test]
    fn gibbs_survives_huge_eta() {
        let f = gibbs_objective(&UNIFORM4, &PAIR, 1e5);
        // -log(0.5 e^{η}) = -η + log 2
        assert!((f - (-1e5 + 2f64.ln())).abs() < 1e-9);
        // ground states unpopulated: falls back to log-sum-exp
        let f = gibbs_objective(&[0.5, 0.0, 0.0, 0.5], &[1.0, -1.0, -1.0, 1.0 - 1e-3], 1e5);
        assert!(f.is_finite());
    }

    #[test]
    fn weights_match_direct() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        let energies = [0.3, -0.7, 0.1, -0.2];
        let w = GibbsWeights::new(&energies, 7.0);
        assert!((w.value(&probs, &energies) - gibbs_objective(&probs, &energies, 7.0)).abs() < 1e-14);
    }

    #[test]
    fn energy_and_probability_basics() {
        assert_eq!(energy_expectation(&UNIFORM4, &PAIR), 0.0);
        let point = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(energy_expectation(&point, &PAIR), -1.0);
        assert_eq!(prob_low_energy(&point, &PAIR, -2.0), 0.0);
        assert_eq!(prob_low_energy(&UNIFORM4, &PAIR, 5.0), 1.0);
        assert_eq!(prob_low_energy(&point, &PAIR, 0.95 * -1.0), 1.0);
        // strict inequality
        assert_eq!(prob_low_energy(&point, &PAIR, -1.0), 0.0);
    }

    #[test]
    fn eta_estimates() {
        assert!((eta_estimate(0.95 * -1.0, -1.0).unwrap() - 20.0).abs() < 1e-12);
        assert!((eta_estimate(0.0, -0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(eta_estimate(-1.0, -1.0), Err(Error::EtaUndefined { .. })));
    }

    #[test]
    fn markov_examples() {
        let (lhs, rhs) = markov_bound_gap(&[0.0, 1.0, 0.0, 0.0], &PAIR, 3.0, -1.0);
        assert_eq!((lhs, rhs), (0.0, 1.0));
        let (lhs, rhs) = markov_bound_gap(&UNIFORM4, &PAIR, 1.0, 0.0);
        assert!((lhs - 0.5).abs() < 1e-15);
        assert!((rhs - 1f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn cumulant_examples() {
        let c = cumulants(&[0.0, 0.0, 1.0, 0.0], &[0.2, 0.4, -0.3, 0.0]);
        assert_eq!(c, CumulantReport { mu: -0.3, sigma2: 0.0, kappa3: 0.0 });
        let c = cumulants(&UNIFORM4, &PAIR);
        assert_eq!((c.mu, c.sigma2, c.kappa3), (0.0, 1.0, 0.0));
    }

    #[test]
    fn small_eta_matches_cumulant_series() {
        let probs = [0.05, 0.4, 0.15, 0.1, 0.3];
        let energies = [1.3, -0.8, 0.2, -1.5, 0.6];
        let c = cumulants(&probs, &energies);
        // remainder of the second-order truncation scales as η³
        let ratios: Vec<f64> = [1e-4, 3e-4, 1e-3, 3e-3, 1e-2]
            .iter()
            .map(|&eta| {
                let f = gibbs_objective(&probs, &energies, eta);
                ((f - (c.mu * eta - c.sigma2 * eta * eta / 2.0)) / eta.powi(3)).abs()
            })
            .collect();
        let bound = c.kappa3.abs() / 6.0 * 1.5 + 1e-3;
        for r in ratios {
            assert!(r <= bound, "{r} > {bound}");
        }
    }

    #[test]
    fn optimal_eta_solves_tilted_mean() {
        let probs = [0.1, 0.2, 0.3, 0.4];
        let energies = [-2.0, -1.0, 0.5, 1.0];
        let e0 = -1.5;
        let eta = optimal_eta(&probs, &energies, e0).unwrap();
        let (num, den) = probs
            .iter()
            .zip(&energies)
            .fold((0.0, 0.0), |(n, d), (p, e)| (n + p * e * (-eta * e).exp(), d + p * (-eta * e).exp()));
        assert!((num / den - e0).abs() < 1e-10);
        assert!(optimal_eta(&probs, &energies, -3.0).is_err());
    }

    #[test]
    fn noise_limits() {
        let probs = [0.1, 0.6, 0.2, 0.1];
        let ideal = gibbs_objective(&probs, &PAIR, 2.0);
        assert_eq!(noisy_gibbs(&probs, &PAIR, 2.0, NoiseModel::new(0.0).unwrap()), ideal);
        let full = noisy_gibbs(&probs, &PAIR, 2.0, NoiseModel::new(1.0).unwrap());
        let expect = -(PAIR.iter().map(|e| (-2.0 * e).exp()).sum::<f64>() / 4.0).ln();
        assert!((full - expect).abs() < 1e-14);
        assert!(NoiseModel::new(1.5).is_err());
    }

    #[test]
    fn noisy_prob_arithmetic() {
        assert_eq!(noisy_prob(0.3, 0.1, 0.0), 0.3);
        assert_eq!(noisy_prob(0.2, 0.2, 0.7), 0.2);
        assert!((noisy_prob(0.4, 0.1, 0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn objective_spec_dispatch() {
        let probs = [0.0, 1.0, 0.0, 0.0];
        assert_eq!(ObjectiveSpec::Energy.evaluate(&probs, &PAIR), -1.0);
        assert_eq!(ObjectiveSpec::ProbLowEnergy { e0: -0.95 }.evaluate(&probs, &PAIR), -1.0);
        assert!(ObjectiveSpec::Gibbs { eta: -1.0 }.validate().is_err());
    }
}
