//! Stationary heat conduction in the rotor body with Robin exchange to the
//! shaft and the airgap.

use serde::{Deserialize, Serialize};

use crate::design::DesignState;
use crate::error::{Error, Result};
use crate::fem::P1;
use crate::linalg::{DofMap, DofMapBuilder, Factor, PatternCache, SystemBuilder};
use crate::materials::{MaterialId, MaterialSet};
use crate::mesh::{Mesh, RotorMesh};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalParams {
    /// Ambient temperature `ϑ_0`, °C.
    pub ambient: f64,
    /// Transfer coefficient on the shaft interface, W/(m²K).
    pub shaft_transfer: f64,
    /// Transfer coefficient on the rotor rim, W/(m²K).
    pub rim_transfer: f64,
}

impl Default for ThermalParams {
    fn default() -> Self {
        Self {
            ambient: 40.0,
            shaft_transfer: 0.235,
            rim_transfer: 260.0,
        }
    }
}

/// Nodal temperatures on the full mesh; nodes outside the rotor body carry
/// the ambient value.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermalField {
    pub temperature: Vec<f64>,
    pub ambient: f64,
}

impl ThermalField {
    pub fn max(&self) -> f64 {
        self.temperature.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug)]
pub struct ThermalModel {
    pub rotor: RotorMesh,
    pub params: ThermalParams,
    elements: Vec<P1>,
    map: DofMap,
    pattern: PatternCache,
}

impl ThermalModel {
    pub fn new(mesh: &Mesh, params: ThermalParams) -> Result<Self> {
        if !(params.shaft_transfer >= 0.0 && params.rim_transfer >= 0.0)
            || params.shaft_transfer + params.rim_transfer == 0.0
        {
            return Err(Error::InvalidInput("transfer coefficients must be non-negative and not both zero".into()));
        }
        let rotor = RotorMesh::new(mesh)?;
        let elements = rotor.triangles.iter().map(|&t| P1::new(mesh.vertices(t))).collect();
        let mut b = DofMapBuilder::new(rotor.n_nodes());
        let slaves: std::collections::HashMap<usize, usize> =
            rotor.periodic_pairs.iter().map(|&(a, b)| (b, a)).collect();
        for v in 0..rotor.n_nodes() {
            if !slaves.contains_key(&v) {
                b.free(v);
            }
        }
        for (&s, &m) in &slaves {
            let e = b.get(m).unwrap_or(&[]).to_vec();
            b.slave(s, e);
        }
        Ok(Self {
            rotor,
            params,
            elements,
            map: b.build(),
            pattern: PatternCache::new(),
        })
    }

    pub fn dof_map(&self) -> &DofMap {
        &self.map
    }

    fn assemble(&self, mesh: &Mesh, design: &DesignState, materials: &MaterialSet) -> Result<SystemBuilder> {
        let mut sb = SystemBuilder::new(self.map.n_free());
        for (k, &t) in self.rotor.triangles.iter().enumerate() {
            let lambda = materials.get(design.material(t)).lambda;
            if !(lambda > 0.0) {
                return Err(Error::Material(format!("non-positive thermal conductivity {lambda}")));
            }
            let e = &self.elements[k];
            let mut ke = [0.0; 9];
            for i in 0..3 {
                for j in 0..3 {
                    ke[i * 3 + j] = lambda * e.area * (e.grad[i][0] * e.grad[j][0] + e.grad[i][1] * e.grad[j][1]);
                }
            }
            sb.add_element(&self.map, &self.rotor.tri_local[k], &ke, &[]);
        }
        for (edges, beta) in [
            (&self.rotor.shaft_edges, self.params.shaft_transfer),
            (&self.rotor.rim_edges, self.params.rim_transfer),
        ] {
            for e in edges {
                let p = [mesh.nodes[self.rotor.nodes[e[0]]], mesh.nodes[self.rotor.nodes[e[1]]]];
                let len = (p[1][0] - p[0][0]).hypot(p[1][1] - p[0][1]);
                let ke = [beta * len / 3.0, beta * len / 6.0, beta * len / 6.0, beta * len / 3.0];
                sb.add_element(&self.map, e, &ke, &[]);
            }
        }
        Ok(sb)
    }

    /// Factorized conduction matrix (symmetric positive definite).
    pub fn factor(&self, mesh: &Mesh, design: &DesignState, materials: &MaterialSet) -> Result<Factor> {
        let sb = self.assemble(mesh, design, materials)?;
        let p = self.pattern.get(self.map.n_free(), &sb)?;
        p.cholesky(&sb.vals)
    }

    /// Load vector of an element-wise constant source given per global triangle.
    pub fn load(&self, source: &[f64]) -> Vec<f64> {
        let mut f = vec![0.0; self.rotor.n_nodes()];
        for (k, &t) in self.rotor.triangles.iter().enumerate() {
            let q = source[t] * self.elements[k].area / 3.0;
            for v in 0..3 {
                f[self.rotor.tri_local[k][v]] += q;
            }
        }
        self.map.to_free(&f)
    }

    /// Temperature rise in free unknowns to a global nodal field.
    pub fn field_from_free(&self, rise: &[f64], n_nodes: usize) -> ThermalField {
        let local = self.map.to_full(rise);
        let mut temperature = vec![self.params.ambient; n_nodes];
        for (l, &g) in self.rotor.nodes.iter().enumerate() {
            temperature[g] = self.params.ambient + local[l];
        }
        ThermalField {
            temperature,
            ambient: self.params.ambient,
        }
    }

    pub fn solve(&self, mesh: &Mesh, design: &DesignState, materials: &MaterialSet, source: &[f64]) -> Result<ThermalField> {
        if source.iter().any(|&q| q < 0.0 || !q.is_finite()) {
            return Err(Error::InvalidInput("heat source must be finite and non-negative".into()));
        }
        let factor = self.factor(mesh, design, materials)?;
        let rise = factor.solve(&self.load(source));
        Ok(self.field_from_free(&rise, mesh.n_nodes()))
    }

    /// Heat leaving through `Γ_SH ∪ Γ_R`, W/m.
    pub fn boundary_outflow(&self, mesh: &Mesh, field: &ThermalField) -> f64 {
        let mut q = 0.0;
        for (edges, beta) in [
            (&self.rotor.shaft_edges, self.params.shaft_transfer),
            (&self.rotor.rim_edges, self.params.rim_transfer),
        ] {
            for e in edges {
                let g = [self.rotor.nodes[e[0]], self.rotor.nodes[e[1]]];
                let len = (mesh.nodes[g[1]][0] - mesh.nodes[g[0]][0]).hypot(mesh.nodes[g[1]][1] - mesh.nodes[g[0]][1]);
                let w = [field.temperature[g[0]] - field.ambient, field.temperature[g[1]] - field.ambient];
                q += beta * len * 0.5 * (w[0] + w[1]);
            }
        }
        q
    }
}

/// Maximum nodal temperature over the magnet elements; ambient without magnets.
pub fn max_magnet_temperature(mesh: &Mesh, field: &ThermalField, design: &DesignState) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for id in [MaterialId::Magnet1, MaterialId::Magnet2] {
        for t in design.elements_of(id) {
            for v in mesh.triangles[t] {
                m = m.max(field.temperature[v]);
            }
        }
    }
    if m.is_finite() {
        m
    } else {
        field.ambient
    }
}
