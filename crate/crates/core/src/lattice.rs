//! Cluster geometries and nearest-neighbour bond lists.
//!
//! Bonds are stored once per (site, positive lattice direction). The
//! Hermitian conjugate is added by the Hamiltonian builders, never here.
//!
//! Two conventions matter for small periodic clusters:
//!
//! * A periodic square or cubic dimension of length 2 keeps both the direct
//!   and the wrap-around bond, so the pair `(0, 1)` and `(1, 0)` both appear
//!   and the effective hopping between those sites is `2t`.
//! * A 2-site ring is collapsed to the single bond `(0, 1)`: it is the
//!   dimer, not a doubled dimer.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lattice family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Chain,
    Ring,
    Square,
    Cubic,
}

impl LatticeKind {
    /// Number of entries expected in the dimension list.
    pub fn rank(self) -> usize {
        match self {
            LatticeKind::Chain | LatticeKind::Ring => 1,
            LatticeKind::Square => 2,
            LatticeKind::Cubic => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LatticeKind::Chain => "chain",
            LatticeKind::Ring => "ring",
            LatticeKind::Square => "square",
            LatticeKind::Cubic => "cubic",
        }
    }

    /// Whether every geometry of this family is bipartite for all allowed dims.
    ///
    /// Rings and periodic lattices are bipartite only for even lengths; use
    /// [`ClusterGeometry::is_bipartite`] for a concrete cluster.
    pub fn always_bipartite(self) -> bool {
        matches!(self, LatticeKind::Chain)
    }
}

impl fmt::Display for LatticeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LatticeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "chain" => Ok(LatticeKind::Chain),
            "ring" => Ok(LatticeKind::Ring),
            "square" => Ok(LatticeKind::Square),
            "cubic" => Ok(LatticeKind::Cubic),
            other => Err(Error::InvalidGeometry(format!(
                "unknown lattice kind `{other}` (expected chain, ring, square or cubic)"
            ))),
        }
    }
}

/// A finite cluster: sites plus directed nearest-neighbour bonds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterGeometry {
    kind: LatticeKind,
    dims: Vec<usize>,
    n_sites: usize,
    bonds: Vec<(usize, usize)>,
}

impl ClusterGeometry {
    pub fn new(kind: LatticeKind, dims: &[usize]) -> Result<Self> {
        build_lattice(kind, dims)
    }

    pub fn chain(n: usize) -> Result<Self> {
        build_lattice(LatticeKind::Chain, &[n])
    }

    pub fn ring(n: usize) -> Result<Self> {
        build_lattice(LatticeKind::Ring, &[n])
    }

    pub fn square(lx: usize, ly: usize) -> Result<Self> {
        build_lattice(LatticeKind::Square, &[lx, ly])
    }

    pub fn cubic(lx: usize, ly: usize, lz: usize) -> Result<Self> {
        build_lattice(LatticeKind::Cubic, &[lx, ly, lz])
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    /// Short tag such as `chain4` or `square10x10`, used in file metadata.
    pub fn tag(&self) -> String {
        let dims: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        format!("{}{}", self.kind, dims.join("x"))
    }

    /// Symmetric hopping adjacency `K` with `K_ij` = number of bonds joining
    /// `i` and `j`. The one-body hopping matrix is `-t K`.
    pub fn adjacency(&self) -> DMatrix<f64> {
        let n = self.n_sites;
        let mut k = DMatrix::zeros(n, n);
        for &(i, j) in &self.bonds {
            k[(i, j)] += 1.0;
            k[(j, i)] += 1.0;
        }
        k
    }

    /// Two-colouring of the sites if one exists.
    pub fn sublattice_signs(&self) -> Option<Vec<i8>> {
        let n = self.n_sites;
        let mut color = vec![0i8; n];
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &self.bonds {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for start in 0..n {
            if color[start] != 0 {
                continue;
            }
            color[start] = 1;
            let mut stack = vec![start];
            while let Some(s) = stack.pop() {
                for &nb in &neighbors[s] {
                    if color[nb] == 0 {
                        color[nb] = -color[s];
                        stack.push(nb);
                    } else if color[nb] == color[s] {
                        return None;
                    }
                }
            }
        }
        Some(color)
    }

    pub fn is_bipartite(&self) -> bool {
        self.sublattice_signs().is_some()
    }
}

impl fmt::Display for ClusterGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// Build a cluster geometry. Bond order is site-major, then +x, +y, +z.
pub fn build_lattice(kind: LatticeKind, dims: &[usize]) -> Result<ClusterGeometry> {
    if dims.len() != kind.rank() {
        return Err(Error::InvalidGeometry(format!(
            "{kind} needs {} dimension(s), got {}",
            kind.rank(),
            dims.len()
        )));
    }
    if dims.contains(&0) {
        return Err(Error::InvalidGeometry(format!(
            "dimensions must be positive, got {dims:?}"
        )));
    }
    match kind {
        LatticeKind::Ring if dims[0] < 2 => {
            return Err(Error::InvalidGeometry(format!(
                "ring needs at least 2 sites, got {}",
                dims[0]
            )))
        }
        LatticeKind::Square | LatticeKind::Cubic if dims.iter().any(|&d| d < 2) => {
            return Err(Error::InvalidGeometry(format!(
                "periodic {kind} lattice needs every dimension >= 2, got {dims:?}"
            )))
        }
        _ => {}
    }

    let n_sites: usize = dims.iter().product();
    let bonds = match kind {
        LatticeKind::Chain => (0..n_sites.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
        LatticeKind::Ring if n_sites == 2 => vec![(0, 1)],
        LatticeKind::Ring => (0..n_sites).map(|i| (i, (i + 1) % n_sites)).collect(),
        LatticeKind::Square | LatticeKind::Cubic => periodic_bonds(dims),
    };

    Ok(ClusterGeometry {
        kind,
        dims: dims.to_vec(),
        n_sites,
        bonds,
    })
}

// Site index = x + Lx * (y + Ly * z).
fn periodic_bonds(dims: &[usize]) -> Vec<(usize, usize)> {
    let n_sites: usize = dims.iter().product();
    let mut strides = Vec::with_capacity(dims.len());
    let mut stride = 1;
    for &d in dims {
        strides.push(stride);
        stride *= d;
    }
    let mut bonds = Vec::with_capacity(n_sites * dims.len());
    for site in 0..n_sites {
        for (axis, (&len, &stride)) in dims.iter().zip(&strides).enumerate() {
            let coord = (site / stride) % len;
            let next = (coord + 1) % len;
            let neighbor = site - coord * stride + next * stride;
            debug_assert!(neighbor != site, "axis {axis} has length {len}");
            bonds.push((site, neighbor));
        }
    }
    bonds
}
