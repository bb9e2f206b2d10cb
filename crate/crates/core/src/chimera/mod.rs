//! Chimera hardware graphs, minor embedding and embedded Ising problems.

mod embed;
mod embedded;

pub use embed::{check_embedding, embed, EmbedConfig, EmbedOutcome, Embedding, EmbeddingError};
pub use embedded::{
    build_embedded_ising, embeddability_survey, BuildError, EmbeddedIsing, SurveyOutcome, SurveyTrial,
};

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// `s x s` grid of `K_{c,c}` cells.
///
/// Qubit `((row * s + col) * 2 + side) * c + k`. Side 0 qubits couple to the
/// cell below, side 1 qubits to the cell on the right.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChimeraGraph {
    size: usize,
    cell: usize,
    dead: BTreeSet<usize>,
    adj: Vec<Vec<usize>>,
}

/// Serializable hardware description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HardwareSpec {
    pub size: usize,
    pub cell: usize,
    #[serde(default)]
    pub dead: Vec<usize>,
}

impl ChimeraGraph {
    pub fn new(size: usize, cell: usize, dead: impl IntoIterator<Item = usize>) -> Self {
        assert!(size >= 1 && cell >= 1, "Chimera needs s, c >= 1");
        let total = 2 * size * size * cell;
        let dead: BTreeSet<usize> = dead.into_iter().filter(|&q| q < total).collect();
        let id = |row: usize, col: usize, side: usize, k: usize| ((row * size + col) * 2 + side) * cell + k;
        let mut adj = vec![Vec::new(); total];
        let mut link = |a: usize, b: usize| {
            if !dead.contains(&a) && !dead.contains(&b) {
                adj[a].push(b);
                adj[b].push(a);
            }
        };
        for row in 0..size {
            for col in 0..size {
                for k in 0..cell {
                    for k2 in 0..cell {
                        link(id(row, col, 0, k), id(row, col, 1, k2));
                    }
                    if row + 1 < size {
                        link(id(row, col, 0, k), id(row + 1, col, 0, k));
                    }
                    if col + 1 < size {
                        link(id(row, col, 1, k), id(row, col + 1, 1, k));
                    }
                }
            }
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Self {
            size,
            cell,
            dead,
            adj,
        }
    }

    pub fn from_spec(spec: &HardwareSpec) -> Self {
        Self::new(spec.size, spec.cell, spec.dead.iter().copied())
    }

    pub fn spec(&self) -> HardwareSpec {
        HardwareSpec {
            size: self.size,
            cell: self.cell,
            dead: self.dead.iter().copied().collect(),
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn cell(&self) -> usize {
        self.cell
    }

    /// Size of the qubit id space, dead qubits included.
    pub fn id_space(&self) -> usize {
        self.adj.len()
    }

    pub fn is_alive(&self, q: usize) -> bool {
        q < self.adj.len() && !self.dead.contains(&q)
    }

    pub fn num_qubits(&self) -> usize {
        self.adj.len() - self.dead.len()
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.adj.len()).filter(|&q| !self.dead.contains(&q))
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adj[q]
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj[a].binary_search(&b).is_ok()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (a, list) in self.adj.iter().enumerate() {
            out.extend(list.iter().filter(|&&b| b > a).map(|&b| (a, b)));
        }
        out
    }
}
