//! Closed-form `p = 1` energy and parameter estimates.
//!
//! For an edge `(i, j)` of a triangle-free ansatz graph the `p = 1` state has
//!
//! `<Z_i Z_j> = sin 4β · sin(2γ J_ij) · ½ (Π_{k ∈ N(i)∖j} cos 2γ J_ik + Π_{k ∈ N(j)∖i} cos 2γ J_jk)`
//!
//! so `<E> = Σ_edges J_ij <Z_i Z_j>`. Written with all neighbours of one
//! endpoint in the product this is the familiar `cos · tan` form; the sine
//! form above avoids the poles of `tan`. Removed edges contribute nothing
//! (their coupling is treated as zero). On graphs with triangles the formula
//! drops the common-neighbour terms and is only an approximation, which is
//! reported through [`AnalyticEnergy::approximate`].
//!
//! Expanding to third order in `γ` gives
//! `<E> ≈ sin 4β · (2A γ - (4B/3 + 2Q) γ³)` with `A = Σ J²`, `B = Σ J⁴` and
//! `Q = Σ_i Σ_{j ≠ k ∈ N(i)} J_ij² J_ik²` (ordered neighbour pairs, i.e. every
//! two-edge path counted in both directions). Its negative-`γ` minimum is
//! `γ* = -sqrt(A / (2B + 3Q))`, and `β* = π/8` maximises `sin 4β`.

use std::f64::consts::FRAC_PI_8;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instances::{sample_instance, GraphKind};
use crate::seed;
use crate::simulator::AnsatzGraph;

pub const BETA_STAR: f64 = FRAC_PI_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateMethod {
    Estimated,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub beta_star: f64,
    pub gamma_star: f64,
    pub method: EstimateMethod,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticEnergy {
    pub value: f64,
    /// The masked graph has a triangle, so the closed form is not exact.
    pub approximate: bool,
}

/// Neighbour lists of the retained edges.
struct Adjacency {
    neighbours: Vec<Vec<(usize, f64)>>,
    edges: Vec<(usize, usize, f64)>,
}

impl Adjacency {
    fn new(ansatz: &AnsatzGraph<'_>) -> Self {
        let inst = ansatz.instance();
        let mut neighbours = vec![Vec::new(); inst.n_qubits()];
        let edges: Vec<_> = inst.masked_edges(ansatz.mask()).collect();
        for &(i, j, c) in &edges {
            neighbours[i].push((j, c));
            neighbours[j].push((i, c));
        }
        Self { neighbours, edges }
    }

    fn triangle_free(&self) -> bool {
        self.edges.iter().all(|&(i, j, _)| {
            self.neighbours[i]
                .iter()
                .all(|&(k, _)| k == j || !self.neighbours[j].iter().any(|&(l, _)| l == k))
        })
    }

    fn cos_product(&self, v: usize, skip: usize, gamma: f64) -> f64 {
        self.neighbours[v]
            .iter()
            .filter(|&&(k, _)| k != skip)
            .map(|&(_, c)| (2.0 * gamma * c).cos())
            .product()
    }
}

pub fn is_triangle_free(ansatz: &AnsatzGraph<'_>) -> bool {
    Adjacency::new(ansatz).triangle_free()
}

/// Closed-form `<E>` of the `p = 1` ansatz.
pub fn analytic_energy(ansatz: &AnsatzGraph<'_>, beta: f64, gamma: f64) -> AnalyticEnergy {
    let adj = Adjacency::new(ansatz);
    let sum: f64 = adj
        .edges
        .iter()
        .map(|&(i, j, c)| {
            let products = adj.cos_product(i, j, gamma) + adj.cos_product(j, i, gamma);
            c * (2.0 * gamma * c).sin() * 0.5 * products
        })
        .sum();
    AnalyticEnergy {
        value: (4.0 * beta).sin() * sum,
        approximate: !adj.triangle_free(),
    }
}

/// The sums `(A, B, Q)` of the cubic expansion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMoments {
    pub squares: f64,
    pub fourth_powers: f64,
    pub path_products: f64,
}

pub fn coupling_moments(ansatz: &AnsatzGraph<'_>) -> CouplingMoments {
    let adj = Adjacency::new(ansatz);
    let squares = adj.edges.iter().map(|e| e.2 * e.2).sum();
    let fourth_powers = adj.edges.iter().map(|e| e.2.powi(4)).sum();
    // Σ_{j≠k} a_j a_k = (Σ a)² - Σ a² with a = J²
    let path_products = adj
        .neighbours
        .iter()
        .map(|nbrs| {
            let s: f64 = nbrs.iter().map(|n| n.1 * n.1).sum();
            let s2: f64 = nbrs.iter().map(|n| n.1.powi(4)).sum();
            s * s - s2
        })
        .sum();
    CouplingMoments {
        squares,
        fourth_powers,
        path_products,
    }
}

/// Third-order-in-γ truncation of [`analytic_energy`].
pub fn cubic_energy(ansatz: &AnsatzGraph<'_>, beta: f64, gamma: f64) -> f64 {
    let m = coupling_moments(ansatz);
    cubic_from_moments(&m, beta, gamma)
}

fn cubic_from_moments(m: &CouplingMoments, beta: f64, gamma: f64) -> f64 {
    let cubic = 4.0 * m.fourth_powers / 3.0 + 2.0 * m.path_products;
    (4.0 * beta).sin() * (2.0 * m.squares * gamma - cubic * gamma.powi(3))
}

/// `γ* = -sqrt(A / (2B + 3Q))`, the negative minimiser of the cubic truncation.
pub fn estimated_gamma(ansatz: &AnsatzGraph<'_>) -> Result<f64> {
    gamma_from_moments(&coupling_moments(ansatz))
}

fn gamma_from_moments(m: &CouplingMoments) -> Result<f64> {
    if m.squares <= 0.0 {
        return Err(Error::NoCouplings);
    }
    Ok(-(m.squares / (2.0 * m.fourth_powers + 3.0 * m.path_products)).sqrt())
}

pub fn estimated_params(ansatz: &AnsatzGraph<'_>) -> Result<ParamEstimate> {
    Ok(ParamEstimate {
        beta_star: BETA_STAR,
        gamma_star: estimated_gamma(ansatz)?,
        method: EstimateMethod::Estimated,
    })
}

pub fn fixed_params(gamma: f64) -> ParamEstimate {
    ParamEstimate {
        beta_star: BETA_STAR,
        gamma_star: gamma,
        method: EstimateMethod::Fixed,
    }
}

/// Cubic-truncated energy at `(π/8, γ*)`, the simulation-free heuristic score.
pub fn energy_approximation(ansatz: &AnsatzGraph<'_>) -> Result<f64> {
    let m = coupling_moments(ansatz);
    let gamma = gamma_from_moments(&m)?;
    Ok(cubic_from_moments(&m, BETA_STAR, gamma))
}

/// Median (mean of the middle pair for even counts).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    })
}

/// Median of `γ*` over `n_samples` full-graph coupling draws.
///
/// Sample `i` uses couplings seeded with `seed::derive(seed, i)`.
pub fn fixed_gamma_calibration(kind: GraphKind, n_samples: usize, seed: u64) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::InvalidParameter("calibration needs at least one sample".into()));
    }
    let gammas = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let inst = sample_instance(kind, seed::derive(seed, i));
            estimated_gamma(&AnsatzGraph::full(&inst))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(median(&gammas).expect("non-empty"))
}

/// Persisted calibration result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub kind: GraphKind,
    pub n_samples: usize,
    pub seed: u64,
    pub gamma_median: f64,
}

impl CalibrationRecord {
    pub fn compute(kind: GraphKind, n_samples: usize, seed: u64) -> Result<Self> {
        Ok(Self {
            kind,
            n_samples,
            seed,
            gamma_median: fixed_gamma_calibration(kind, n_samples, seed)?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
