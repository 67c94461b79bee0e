//! Ising problem instances on grid and complete graphs.
//!
//! Spins follow `s_q = 1 - 2 b_q` where `b_q` is bit `q` of the basis index, so
//! `|0>` maps to spin `+1`. Edges are kept in a canonical order (row-major for
//! grids, lexicographic for complete graphs) and edge masks refer to positions
//! in that order.

use std::fmt;
use std::str::FromStr;

use rand::distributions::{Distribution, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Graph family of an instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum GraphKind {
    Grid { rows: usize, cols: usize },
    Complete { vertices: usize },
}

impl GraphKind {
    pub const GRID_4X4: GraphKind = GraphKind::Grid { rows: 4, cols: 4 };
    pub const COMPLETE_10: GraphKind = GraphKind::Complete { vertices: 10 };

    pub fn n_vertices(&self) -> usize {
        match *self {
            GraphKind::Grid { rows, cols } => rows * cols,
            GraphKind::Complete { vertices } => vertices,
        }
    }
}

impl fmt::Display for GraphKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphKind::Grid { rows, cols } => write!(f, "grid:{rows}x{cols}"),
            GraphKind::Complete { vertices } => write!(f, "complete:{vertices}"),
        }
    }
}

/// Accepts `grid`, `complete`, `grid:RxC` and `complete:N`.
impl FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unrecognised graph kind `{s}`"));
        let (head, tail) = match s.split_once(':') {
            Some((h, t)) => (h, Some(t)),
            None => (s, None),
        };
        match (head, tail) {
            ("grid", None) => Ok(GraphKind::GRID_4X4),
            ("complete", None) => Ok(GraphKind::COMPLETE_10),
            ("grid", Some(dims)) => {
                let (r, c) = dims.split_once('x').ok_or_else(bad)?;
                Ok(GraphKind::Grid {
                    rows: r.parse().map_err(|_| bad())?,
                    cols: c.parse().map_err(|_| bad())?,
                })
            }
            ("complete", Some(n)) => Ok(GraphKind::Complete {
                vertices: n.parse().map_err(|_| bad())?,
            }),
            _ => Err(bad()),
        }
    }
}

/// Vertices and canonically ordered edges of a graph family member.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphTopology {
    kind: GraphKind,
    n_vertices: usize,
    edges: Vec<(usize, usize)>,
}

impl GraphTopology {
    pub fn new(kind: GraphKind) -> Self {
        let mut edges = Vec::new();
        match kind {
            GraphKind::Grid { rows, cols } => {
                for r in 0..rows {
                    for c in 0..cols {
                        let v = r * cols + c;
                        if c + 1 < cols {
                            edges.push((v, v + 1));
                        }
                        if r + 1 < rows {
                            edges.push((v, v + cols));
                        }
                    }
                }
            }
            GraphKind::Complete { vertices } => {
                for i in 0..vertices {
                    for j in i + 1..vertices {
                        edges.push((i, j));
                    }
                }
            }
        }
        Self {
            kind,
            n_vertices: kind.n_vertices(),
            edges,
        }
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// Subset of instance edges, bit `e` set when edge `e` (canonical order) is kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct EdgeMask(pub u128);

impl EdgeMask {
    pub const MAX_EDGES: usize = 128;

    pub fn full(n_edges: usize) -> Self {
        assert!(n_edges <= Self::MAX_EDGES);
        if n_edges == Self::MAX_EDGES {
            EdgeMask(u128::MAX)
        } else {
            EdgeMask((1u128 << n_edges) - 1)
        }
    }

    pub fn empty() -> Self {
        EdgeMask(0)
    }

    pub fn from_retained(n_edges: usize, retained: &[bool]) -> Result<Self> {
        if retained.len() != n_edges {
            return Err(Error::InvalidParameter(format!(
                "mask has {} entries for {} edges",
                retained.len(),
                n_edges
            )));
        }
        let bits = retained
            .iter()
            .enumerate()
            .filter(|(_, &keep)| keep)
            .fold(0u128, |acc, (e, _)| acc | (1u128 << e));
        Ok(EdgeMask(bits))
    }

    pub fn contains(&self, edge: usize) -> bool {
        edge < Self::MAX_EDGES && self.0 >> edge & 1 == 1
    }

    pub fn without(&self, edge: usize) -> Self {
        EdgeMask(self.0 & !(1u128 << edge))
    }

    pub fn count(&self) -> usize {
        self.0.count_ones() as usize
    }

    /// Indices of retained edges in increasing order.
    pub fn retained(&self) -> impl Iterator<Item = usize> + '_ {
        (0..Self::MAX_EDGES).filter(move |&e| self.contains(e))
    }

    /// True when every set bit is below `n_edges`.
    pub fn fits(&self, n_edges: usize) -> bool {
        n_edges >= Self::MAX_EDGES || self.0 >> n_edges == 0
    }

    /// Lowercase hex, zero-padded to one digit per four edges.
    pub fn to_hex(&self, n_edges: usize) -> String {
        let digits = n_edges.div_ceil(4).max(1);
        format!("{:0width$x}", self.0, width = digits)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        u128::from_str_radix(s, 16)
            .map(EdgeMask)
            .map_err(|_| Error::InvalidParameter(format!("bad mask hex `{s}`")))
    }
}

/// Serialised as an unpadded lowercase hex string.
impl Serialize for EdgeMask {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&format!("{:x}", self.0))
    }
}

impl<'de> Deserialize<'de> for EdgeMask {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        EdgeMask::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Couplings `J_ij ∈ [-1, 1]` on every edge of a topology.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    topology: GraphTopology,
    couplings: Vec<f64>,
    seed: u64,
}

impl ProblemInstance {
    pub fn new(kind: GraphKind, couplings: Vec<f64>, seed: u64) -> Result<Self> {
        let topology = GraphTopology::new(kind);
        if topology.n_edges() > EdgeMask::MAX_EDGES {
            return Err(Error::TooManyEdges(topology.n_edges()));
        }
        if couplings.len() != topology.n_edges() {
            return Err(Error::InvalidInstance(format!(
                "{} couplings for {} edges",
                couplings.len(),
                topology.n_edges()
            )));
        }
        // sampled couplings lie in (-1, 1); the unit endpoints are accepted for
        // hand-built instances
        if let Some(j) = couplings.iter().find(|j| !(j.abs() <= 1.0)) {
            return Err(Error::InvalidInstance(format!(
                "coupling {j} outside [-1, 1]"
            )));
        }
        Ok(Self {
            topology,
            couplings,
            seed,
        })
    }

    pub fn topology(&self) -> &GraphTopology {
        &self.topology
    }

    pub fn kind(&self) -> GraphKind {
        self.topology.kind
    }

    pub fn n_qubits(&self) -> usize {
        self.topology.n_vertices
    }

    pub fn n_edges(&self) -> usize {
        self.topology.n_edges()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        self.topology.edges()
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn full_mask(&self) -> EdgeMask {
        EdgeMask::full(self.n_edges())
    }

    pub fn check_mask(&self, mask: EdgeMask) -> Result<()> {
        if mask.fits(self.n_edges()) {
            Ok(())
        } else {
            Err(Error::MaskOutOfRange {
                mask: mask.to_hex(EdgeMask::MAX_EDGES),
                edges: self.n_edges(),
            })
        }
    }

    /// `(i, j, J_ij)` for every edge retained by `mask`.
    pub fn masked_edges(&self, mask: EdgeMask) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges()
            .iter()
            .zip(&self.couplings)
            .enumerate()
            .filter(move |(e, _)| mask.contains(*e))
            .map(|(_, (&(i, j), &c))| (i, j, c))
    }

    pub fn to_document(&self) -> InstanceDocument {
        InstanceDocument {
            kind: self.kind(),
            n: self.n_qubits(),
            edges: self.edges().iter().map(|&(i, j)| [i, j]).collect(),
            couplings: self.couplings.clone(),
            seed: self.seed,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_document())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str::<InstanceDocument>(text)?.into_instance()
    }
}

/// On-disk form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub kind: GraphKind,
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub couplings: Vec<f64>,
    pub seed: u64,
}

impl InstanceDocument {
    pub fn into_instance(self) -> Result<ProblemInstance> {
        let instance = ProblemInstance::new(self.kind, self.couplings, self.seed)?;
        let edges_match = instance.n_qubits() == self.n
            && self.edges.len() == instance.n_edges()
            && self
                .edges
                .iter()
                .zip(instance.edges())
                .all(|(a, &(i, j))| a[0] == i && a[1] == j);
        if !edges_match {
            return Err(Error::InvalidInstance(
                "edge list does not match the canonical topology".into(),
            ));
        }
        Ok(instance)
    }
}

/// Draws `J_ij ~ U(-1, 1)` i.i.d. (open interval) from a ChaCha8 stream keyed by `seed`.
pub fn sample_instance(kind: GraphKind, seed: u64) -> ProblemInstance {
    let topology = GraphTopology::new(kind);
    let mut rng = seed::rng(seed);
    let couplings = (0..topology.n_edges())
        .map(|_| {
            let u: f64 = Open01.sample(&mut rng);
            2.0 * u - 1.0
        })
        .collect();
    ProblemInstance::new(kind, couplings, seed).expect("sampled couplings lie in (-1, 1)")
}

/// Diagonal energies `E(z)` for all `2^n` basis states.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTable {
    n_qubits: usize,
    energies: Vec<f64>,
}

impl EnergyTable {
    pub fn from_energies(n_qubits: usize, energies: Vec<f64>) -> Result<Self> {
        if energies.len() != 1usize << n_qubits {
            return Err(Error::InvalidParameter(format!(
                "{} energies for {} qubits",
                energies.len(),
                n_qubits
            )));
        }
        Ok(Self { n_qubits, energies })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.energies.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `E(z) = Σ J_ij s_i s_j` over the edges selected by `mask` (all edges when `None`).
pub fn build_energy_table(instance: &ProblemInstance, mask: Option<EdgeMask>) -> Result<EnergyTable> {
    let mask = mask.unwrap_or_else(|| instance.full_mask());
    instance.check_mask(mask)?;
    let n = instance.n_qubits();
    let mut energies = vec![0.0; 1usize << n];
    for (i, j, c) in instance.masked_edges(mask) {
        for (z, e) in energies.iter_mut().enumerate() {
            let anti = ((z >> i) ^ (z >> j)) & 1;
            *e += if anti == 0 { c } else { -c };
        }
    }
    Ok(EnergyTable {
        n_qubits: n,
        energies,
    })
}

/// Exact ground state of an energy table.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStateInfo {
    pub e_gs: f64,
    pub minimizers: Vec<usize>,
    pub e_cutoff: f64,
    pub n_vertices: usize,
    /// Every basis state attains the minimum (e.g. all couplings zero).
    pub degenerate: bool,
}

impl GroundStateInfo {
    pub fn energy_per_vertex(&self) -> f64 {
        self.e_gs / self.n_vertices as f64
    }
}

/// Low-energy cutoff used throughout: `E0 = 0.95 E_gs`.
pub const CUTOFF_FRACTION: f64 = 0.95;

pub fn exact_ground_state(table: &EnergyTable) -> GroundStateInfo {
    let e_gs = table.min();
    let minimizers: Vec<usize> = table
        .energies()
        .iter()
        .enumerate()
        .filter(|(_, &e)| e == e_gs)
        .map(|(z, _)| z)
        .collect();
    GroundStateInfo {
        e_gs,
        degenerate: minimizers.len() == table.len(),
        minimizers,
        e_cutoff: CUTOFF_FRACTION * e_gs,
        n_vertices: table.n_qubits(),
    }
}
