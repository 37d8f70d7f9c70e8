//! Plane-stress linear elasticity of the rotor body under centrifugal load.
//!
//! Displacements are clamped on the shaft interface and coupled across the
//! radial edges by a rotation through the pole angle, `u|Γ_2 = R u|Γ_1`.

use crate::design::DesignState;
use crate::error::{Error, Result};
use crate::fem::{linear_load, P1};
use crate::linalg::{DofMap, DofMapBuilder, Factor, PatternCache, SystemBuilder};
use crate::materials::{Material, MaterialSet};
use crate::mesh::{Mesh, RotorMesh};

/// Displacement and element stresses on the full mesh (zero outside the
/// rotor body).
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticField {
    pub displacement: Vec<[f64; 2]>,
    /// `(σ_xx, σ_yy, σ_xy)` per triangle, Pa.
    pub stress: Vec<[f64; 3]>,
    /// Angular speed, rad/s.
    pub speed: f64,
}

impl ElasticField {
    /// Squared von Mises stress per triangle, Pa².
    pub fn von_mises_sq(&self) -> Vec<f64> {
        self.stress.iter().map(|&s| von_mises_sq(s)).collect()
    }
}

/// `s_VM = ½(3|σ|² − tr(σ)²)` for a plane stress tensor `(σ_xx, σ_yy, σ_xy)`.
pub fn von_mises_sq(s: [f64; 3]) -> f64 {
    let norm2 = s[0] * s[0] + s[1] * s[1] + 2.0 * s[2] * s[2];
    let tr = s[0] + s[1];
    (0.5 * (3.0 * norm2 - tr * tr)).max(0.0)
}

/// Plane-stress constitutive matrix acting on `(ε_xx, ε_yy, γ_xy)`.
pub fn plane_stress_matrix(young: f64, poisson: f64) -> [[f64; 3]; 3] {
    let c = young / (1.0 - poisson * poisson);
    [
        [c, c * poisson, 0.0],
        [c * poisson, c, 0.0],
        [0.0, 0.0, c * 0.5 * (1.0 - poisson)],
    ]
}

/// Strain-displacement matrix of a linear triangle, dof order `(x0, y0, x1, …)`.
pub fn strain_matrix(e: &P1) -> [[f64; 6]; 3] {
    let mut b = [[0.0; 6]; 3];
    for i in 0..3 {
        b[0][2 * i] = e.grad[i][0];
        b[1][2 * i + 1] = e.grad[i][1];
        b[2][2 * i] = e.grad[i][1];
        b[2][2 * i + 1] = e.grad[i][0];
    }
    b
}

#[derive(Debug)]
pub struct ElasticModel {
    pub rotor: RotorMesh,
    pub(crate) elements: Vec<P1>,
    map: DofMap,
    pattern: PatternCache,
}

impl ElasticModel {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let rotor = RotorMesh::new(mesh)?;
        let elements = rotor.triangles.iter().map(|&t| P1::new(mesh.vertices(t))).collect();
        let n = rotor.n_nodes();
        let mut clamped = vec![false; n];
        for e in &rotor.shaft_edges {
            clamped[e[0]] = true;
            clamped[e[1]] = true;
        }
        let mut slave_of = vec![None; n];
        for &(a, b) in &rotor.periodic_pairs {
            if !clamped[b] {
                slave_of[b] = Some(a);
            }
        }
        let mut b = DofMapBuilder::new(2 * n);
        for v in 0..n {
            if clamped[v] {
                b.fixed(2 * v);
                b.fixed(2 * v + 1);
            } else if slave_of[v].is_none() {
                b.free(2 * v);
                b.free(2 * v + 1);
            }
        }
        let (s, c) = mesh.pole_angle.sin_cos();
        for v in 0..n {
            if let Some(m) = slave_of[v] {
                let ux: Vec<(usize, f64)> = b.get(2 * m).unwrap_or(&[]).to_vec();
                let uy: Vec<(usize, f64)> = b.get(2 * m + 1).unwrap_or(&[]).to_vec();
                let comb = |cx: f64, cy: f64| -> Vec<(usize, f64)> {
                    ux.iter().map(|&(f, w)| (f, cx * w)).chain(uy.iter().map(|&(f, w)| (f, cy * w))).collect()
                };
                b.slave(2 * v, comb(c, -s));
                b.slave(2 * v + 1, comb(s, c));
            }
        }
        Ok(Self {
            rotor,
            elements,
            map: b.build(),
            pattern: PatternCache::new(),
        })
    }

    pub fn dof_map(&self) -> &DofMap {
        &self.map
    }

    pub(crate) fn element_dofs(&self, k: usize) -> [usize; 6] {
        let t = self.rotor.tri_local[k];
        [2 * t[0], 2 * t[0] + 1, 2 * t[1], 2 * t[1] + 1, 2 * t[2], 2 * t[2] + 1]
    }

    /// Element stiffness, row-major 6×6.
    pub(crate) fn element_stiffness(&self, k: usize, m: &Material) -> [f64; 36] {
        let e = &self.elements[k];
        let d = plane_stress_matrix(m.young, m.poisson);
        let b = strain_matrix(e);
        let mut ke = [0.0; 36];
        for i in 0..6 {
            for j in 0..6 {
                let mut s = 0.0;
                for p in 0..3 {
                    for q in 0..3 {
                        s += b[p][i] * d[p][q] * b[q][j];
                    }
                }
                ke[i * 6 + j] = e.area * s;
            }
        }
        ke
    }

    /// Element centrifugal load `∫ ρ ω² x φ_i`.
    pub(crate) fn element_load(&self, mesh: &Mesh, k: usize, rho: f64, speed: f64) -> [f64; 6] {
        let e = &self.elements[k];
        let v = mesh.vertices(self.rotor.triangles[k]);
        let w2 = rho * speed * speed;
        let mut f = [0.0; 6];
        for i in 0..3 {
            f[2 * i] = w2 * linear_load(e.area, [v[0][0], v[1][0], v[2][0]], i);
            f[2 * i + 1] = w2 * linear_load(e.area, [v[0][1], v[1][1], v[2][1]], i);
        }
        f
    }

    fn check(&self, design: &DesignState, materials: &MaterialSet) -> Result<()> {
        for &t in &self.rotor.triangles {
            let m = materials.get(design.material(t));
            if !(m.young > 0.0) {
                return Err(Error::Material(format!("Young modulus {} must be positive", m.young)));
            }
        }
        Ok(())
    }

    pub fn factor(&self, design: &DesignState, materials: &MaterialSet) -> Result<Factor> {
        self.check(design, materials)?;
        let mut sb = SystemBuilder::new(self.map.n_free());
        for (k, &t) in self.rotor.triangles.iter().enumerate() {
            let ke = self.element_stiffness(k, materials.get(design.material(t)));
            sb.add_element(&self.map, &self.element_dofs(k), &ke, &[]);
        }
        let p = self.pattern.get(self.map.n_free(), &sb)?;
        p.cholesky(&sb.vals)
    }

    pub fn load(&self, mesh: &Mesh, design: &DesignState, materials: &MaterialSet, speed: f64) -> Vec<f64> {
        let mut sb = SystemBuilder::new(self.map.n_free());
        for (k, &t) in self.rotor.triangles.iter().enumerate() {
            let f = self.element_load(mesh, k, materials.get(design.material(t)).rho, speed);
            sb.add_element(&self.map, &self.element_dofs(k), &[], &f);
        }
        sb.rhs
    }

    /// Field from free displacement unknowns.
    pub fn field_from_free(&self, mesh: &Mesh, design: &DesignState, materials: &MaterialSet, x: &[f64], speed: f64) -> ElasticField {
        let local = self.map.to_full(x);
        let mut displacement = vec![[0.0; 2]; mesh.n_nodes()];
        for (l, &g) in self.rotor.nodes.iter().enumerate() {
            displacement[g] = [local[2 * l], local[2 * l + 1]];
        }
        let mut stress = vec![[0.0; 3]; mesh.n_triangles()];
        for (k, &t) in self.rotor.triangles.iter().enumerate() {
            let m = materials.get(design.material(t));
            let dofs = self.element_dofs(k);
            let ue: Vec<f64> = dofs.iter().map(|&d| local[d]).collect();
            stress[t] = self.element_stress(k, m, &ue);
        }
        ElasticField {
            displacement,
            stress,
            speed,
        }
    }

    pub(crate) fn element_stress(&self, k: usize, m: &Material, ue: &[f64]) -> [f64; 3] {
        let b = strain_matrix(&self.elements[k]);
        let d = plane_stress_matrix(m.young, m.poisson);
        let mut eps = [0.0; 3];
        for p in 0..3 {
            eps[p] = (0..6).map(|i| b[p][i] * ue[i]).sum();
        }
        let mut s = [0.0; 3];
        for p in 0..3 {
            s[p] = (0..3).map(|q| d[p][q] * eps[q]).sum();
        }
        s
    }

    pub fn solve(&self, mesh: &Mesh, design: &DesignState, materials: &MaterialSet, speed: f64) -> Result<ElasticField> {
        if !(speed >= 0.0 && speed.is_finite()) {
            return Err(Error::InvalidInput(format!("speed {speed} must be non-negative")));
        }
        let factor = self.factor(design, materials)?;
        let x = factor.solve(&self.load(mesh, design, materials, speed));
        Ok(self.field_from_free(mesh, design, materials, &x, speed))
    }

    /// `(∫ σ(u):ε(u), ∫ ρω² x·u)` for the virtual-work check.
    pub fn work_terms(&self, mesh: &Mesh, design: &DesignState, materials: &MaterialSet, field: &ElasticField) -> (f64, f64) {
        let (mut internal, mut external) = (0.0, 0.0);
        for (k, &t) in self.rotor.triangles.iter().enumerate() {
            let m = materials.get(design.material(t));
            let ue: Vec<f64> = mesh.triangles[t]
                .iter()
                .flat_map(|&v| field.displacement[v])
                .collect();
            let ke = self.element_stiffness(k, m);
            for i in 0..6 {
                for j in 0..6 {
                    internal += ue[i] * ke[i * 6 + j] * ue[j];
                }
            }
            let f = self.element_load(mesh, k, m.rho, field.speed);
            external += f.iter().zip(&ue).map(|(a, b)| a * b).sum::<f64>();
        }
        (internal, external)
    }
}
