use crate::error::{Error, Result};

use super::{BoundaryLabel, Mesh};

/// The rotor body `D ∪ D_RI` as a submesh with local node numbering.
#[derive(Clone, Debug)]
pub struct RotorMesh {
    /// Global node id of each local node.
    pub nodes: Vec<usize>,
    /// Local id of each global node, `usize::MAX` outside the rotor body.
    pub local: Vec<usize>,
    /// Global triangle ids.
    pub triangles: Vec<usize>,
    /// Local node ids of each rotor triangle.
    pub tri_local: Vec<[usize; 3]>,
    /// Local node pairs of the shaft interface `Γ_SH`.
    pub shaft_edges: Vec<[usize; 2]>,
    /// Local node pairs of the outer rotor rim `Γ_R`.
    pub rim_edges: Vec<[usize; 2]>,
    /// Local `(Γ_1, Γ_2)` node pairs.
    pub periodic_pairs: Vec<(usize, usize)>,
}

impl RotorMesh {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let triangles: Vec<usize> = (0..mesh.n_triangles())
            .filter(|&t| mesh.regions[t].is_rotor_body())
            .collect();
        if triangles.is_empty() {
            return Err(Error::InvalidInput("mesh has no rotor body triangles".into()));
        }
        let mut local = vec![usize::MAX; mesh.n_nodes()];
        let mut nodes = Vec::new();
        for &t in &triangles {
            for v in mesh.triangles[t] {
                if local[v] == usize::MAX {
                    local[v] = nodes.len();
                    nodes.push(v);
                }
            }
        }
        let tri_local = triangles.iter().map(|&t| mesh.triangles[t].map(|v| local[v])).collect();
        let edges = |label| -> Vec<[usize; 2]> {
            mesh.edges_with(label)
                .filter(|e| local[e.nodes[0]] != usize::MAX && local[e.nodes[1]] != usize::MAX)
                .map(|e| [local[e.nodes[0]], local[e.nodes[1]]])
                .collect()
        };
        let shaft_edges = edges(BoundaryLabel::Shaft);
        let rim_edges = edges(BoundaryLabel::RotorRim);
        if shaft_edges.is_empty() || rim_edges.is_empty() {
            return Err(Error::InvalidInput("rotor body needs shaft and rim boundary edges".into()));
        }
        let periodic_pairs = mesh
            .periodic_pairs
            .iter()
            .filter(|(a, b)| local[*a] != usize::MAX && local[*b] != usize::MAX)
            .map(|&(a, b)| (local[a], local[b]))
            .collect();
        Ok(Self {
            nodes,
            local,
            triangles,
            tri_local,
            shaft_edges,
            rim_edges,
            periodic_pairs,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Measure `|D ∪ D_RI|`.
    pub fn measure(&self, mesh: &Mesh) -> f64 {
        self.triangles.iter().map(|&t| mesh.area(t)).sum()
    }
}
