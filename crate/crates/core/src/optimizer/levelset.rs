use super::simplex::SimplexGeometry;
use super::TdField;
use crate::design::DesignState;
use crate::error::Result;
use crate::materials::MaterialId;
use crate::mesh::Mesh;

/// Nodal vector level set `ψ: D → R^{M−1}` on the design domain.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSetField {
    pub dim: usize,
    /// Global node id of each design node.
    pub nodes: Vec<usize>,
    /// Design triangles in the order of [`Mesh::design_triangles`].
    pub elements: Vec<usize>,
    /// Design-node indices of each design triangle.
    pub tri_local: Vec<[usize; 3]>,
    /// `dim` values per design node.
    pub values: Vec<f64>,
}

/// Weights of the labels when a nodal value is averaged from the adjacent
/// elements. Magnets and air dominate iron so that thin inclusions survive.
const LABEL_WEIGHT: [f64; 4] = [1.0, 4.0, 4.0, 2.0];

impl LevelSetField {
    /// Zero field on the design domain of `mesh`.
    pub fn zeros(mesh: &Mesh, simplex: &SimplexGeometry) -> Self {
        let elements = mesh.design_triangles();
        let mut local = vec![usize::MAX; mesh.n_nodes()];
        let mut nodes = Vec::new();
        let tri_local = elements
            .iter()
            .map(|&t| {
                mesh.triangles[t].map(|v| {
                    if local[v] == usize::MAX {
                        local[v] = nodes.len();
                        nodes.push(v);
                    }
                    local[v]
                })
            })
            .collect();
        let dim = simplex.dim();
        Self {
            dim,
            values: vec![0.0; nodes.len() * dim],
            nodes,
            elements,
            tri_local,
        }
    }

    /// Level set whose nodal values average the vertices of the adjacent
    /// element labels, normalized to unit length.
    pub fn from_design(mesh: &Mesh, design: &DesignState, simplex: &SimplexGeometry) -> Self {
        let mut ls = Self::zeros(mesh, simplex);
        let d = ls.dim;
        for (k, &t) in ls.elements.iter().enumerate() {
            let id = design.material(t).index();
            let w = LABEL_WEIGHT[id] * mesh.area(t);
            for &v in &ls.tri_local[k] {
                for c in 0..d {
                    ls.values[v * d + c] += w * simplex.vertices[id][c];
                }
            }
        }
        ls.renormalize();
        ls
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, v: usize) -> &[f64] {
        &self.values[v * self.dim..(v + 1) * self.dim]
    }

    /// `ψ` at the centroid of design element `k`.
    pub fn centroid_value(&self, k: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim];
        for &v in &self.tri_local[k] {
            for (c, xc) in x.iter_mut().enumerate() {
                *xc += self.values[v * self.dim + c] / 3.0;
            }
        }
        x
    }

    /// Material label of each design element.
    pub fn labels(&self, simplex: &SimplexGeometry) -> Vec<MaterialId> {
        (0..self.elements.len())
            .map(|k| MaterialId::ALL[simplex.nearest(&self.centroid_value(k))])
            .collect()
    }

    pub fn design(&self, mesh: &Mesh, simplex: &SimplexGeometry) -> Result<DesignState> {
        DesignState::from_design_labels(mesh, &self.labels(simplex))
    }

    /// Scales every nonzero nodal vector to unit length.
    pub fn renormalize(&mut self) {
        for v in self.values.chunks_mut(self.dim) {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                v.iter_mut().for_each(|x| *x /= n);
            }
        }
    }

    /// `(1 − s) ψ + s g` nodewise.
    pub fn update(&self, mapped: &[f64], s: f64) -> Self {
        let mut out = self.clone();
        for (x, g) in out.values.iter_mut().zip(mapped) {
            *x = (1.0 - s) * *x + s * g;
        }
        out
    }

    /// Nodal field `Σ_i χ_{Ω_i} N_i^{-1} d^i J`, area-weighted averages of the
    /// element values over the adjacent design elements.
    pub fn map_td(&self, mesh: &Mesh, td: &TdField, labels: &[MaterialId], simplex: &SimplexGeometry) -> Vec<f64> {
        let d = self.dim;
        let mut acc = vec![0.0; self.values.len()];
        let mut weight = vec![0.0; self.n_nodes()];
        for (k, &t) in self.elements.iter().enumerate() {
            let i = labels[k].index();
            let dv: Vec<f64> = (0..simplex.n_vertices()).filter(|&j| j != i).map(|j| td.values[k][j]).collect();
            let g = simplex.solve(i, &dv);
            let a = mesh.area(t);
            for &v in &self.tri_local[k] {
                weight[v] += a;
                for c in 0..d {
                    acc[v * d + c] += a * g[c];
                }
            }
        }
        for (v, w) in weight.iter().enumerate() {
            if *w > 0.0 {
                for c in 0..d {
                    acc[v * d + c] /= w;
                }
            }
        }
        acc
    }
}

/// Root mean square of the nodal vector lengths.
pub fn rms_norm(values: &[f64], dim: usize) -> f64 {
    let n = values.len() / dim;
    if n == 0 {
        return 0.0;
    }
    (values.iter().map(|x| x * x).sum::<f64>() / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::VShapeLayout;
    use crate::mesh::{build_machine_mesh, MachineGeometry};

    fn setup() -> (Mesh, SimplexGeometry) {
        (build_machine_mesh(&MachineGeometry::default(), 2.2e-3).unwrap(), SimplexGeometry::materials())
    }

    #[test]
    fn update_endpoints_and_fixed_point() {
        let (mesh, s) = setup();
        let design = VShapeLayout::default().design(&mesh);
        let ls = LevelSetField::from_design(&mesh, &design, &s);
        let g: Vec<f64> = (0..ls.values.len()).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        assert_eq!(ls.update(&g, 0.0).values, ls.values);
        assert_eq!(ls.update(&g, 1.0).values, g);
        let same = ls.update(&ls.values, 0.37);
        for (a, b) in same.values.iter().zip(&ls.values) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn renormalization_keeps_labels() {
        let (mesh, s) = setup();
        let design = VShapeLayout::default().design(&mesh);
        let ls = LevelSetField::from_design(&mesh, &design, &s);
        let mut big = ls.clone();
        big.values.iter_mut().for_each(|x| *x *= 10.0);
        let labels = big.labels(&s);
        big.renormalize();
        assert_eq!(big.labels(&s), labels);
        for v in 0..big.n_nodes() {
            let n: f64 = big.node(v).iter().map(|x| x * x).sum();
            assert!(n == 0.0 || (n - 1.0).abs() < 1e-12);
        }
        let mut z = LevelSetField::zeros(&mesh, &s);
        z.renormalize();
        assert!(z.values.iter().all(|&x| x == 0.0));
        assert!(z.labels(&s).iter().all(|&m| m == MaterialId::Iron));
    }

    #[test]
    fn initial_design_keeps_both_magnets() {
        let (mesh, s) = setup();
        let design = VShapeLayout::default().design(&mesh);
        let induced = LevelSetField::from_design(&mesh, &design, &s).design(&mesh, &s).unwrap();
        for id in [MaterialId::Magnet1, MaterialId::Magnet2, MaterialId::Air] {
            assert!(induced.count(id) > 0, "{id:?} vanished");
        }
    }
}
