//! Per-element material distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::materials::MaterialId;
use crate::mesh::{Mesh, Region};

/// Material of a fixed region; `None` for the design domain.
pub fn region_material(region: Region) -> Option<MaterialId> {
    match region {
        Region::Design => None,
        Region::IronRing | Region::StatorIron => Some(MaterialId::Iron),
        _ => Some(MaterialId::Air),
    }
}

/// Material id of every triangle. Only design-domain entries may change.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DesignState {
    materials: Vec<MaterialId>,
    design: Vec<usize>,
}

impl DesignState {
    /// Fixed regions get their material, design triangles `f(centroid)`.
    pub fn from_fn(mesh: &Mesh, f: impl Fn([f64; 2]) -> MaterialId) -> Self {
        let materials = (0..mesh.n_triangles())
            .map(|t| region_material(mesh.regions[t]).unwrap_or_else(|| f(mesh.centroid(t))))
            .collect();
        Self {
            materials,
            design: mesh.design_triangles(),
        }
    }

    pub fn uniform(mesh: &Mesh, id: MaterialId) -> Self {
        Self::from_fn(mesh, |_| id)
    }

    /// Design labels given in the order of [`Mesh::design_triangles`].
    pub fn from_design_labels(mesh: &Mesh, labels: &[MaterialId]) -> Result<Self> {
        let mut s = Self::uniform(mesh, MaterialId::Iron);
        if labels.len() != s.design.len() {
            return Err(Error::InvalidInput(format!(
                "{} design labels given for {} design elements",
                labels.len(),
                s.design.len()
            )));
        }
        for (k, &t) in s.design.clone().iter().enumerate() {
            s.materials[t] = labels[k];
        }
        Ok(s)
    }

    /// Labels for every triangle (fixed regions must carry their fixed material).
    pub fn from_all_labels(mesh: &Mesh, labels: &[MaterialId]) -> Result<Self> {
        if labels.len() != mesh.n_triangles() {
            return Err(Error::InvalidInput("one material label per triangle required".into()));
        }
        for (t, &m) in labels.iter().enumerate() {
            if let Some(fixed) = region_material(mesh.regions[t]) {
                if fixed != m {
                    return Err(Error::InvalidInput(format!(
                        "triangle {t} in fixed region {:?} labelled {:?}",
                        mesh.regions[t], m
                    )));
                }
            }
        }
        Ok(Self {
            materials: labels.to_vec(),
            design: mesh.design_triangles(),
        })
    }

    pub fn material(&self, t: usize) -> MaterialId {
        self.materials[t]
    }

    pub fn materials(&self) -> &[MaterialId] {
        &self.materials
    }

    /// Design-domain triangle indices.
    pub fn design_elements(&self) -> &[usize] {
        &self.design
    }

    pub fn design_labels(&self) -> Vec<MaterialId> {
        self.design.iter().map(|&t| self.materials[t]).collect()
    }

    /// Changes the material of design triangle `t`.
    pub fn set(&mut self, t: usize, id: MaterialId) -> Result<()> {
        if self.design.binary_search(&t).is_err() {
            return Err(Error::InvalidInput(format!("triangle {t} is not in the design domain")));
        }
        self.materials[t] = id;
        Ok(())
    }

    pub fn with(&self, t: usize, id: MaterialId) -> Result<Self> {
        let mut s = self.clone();
        s.set(t, id)?;
        Ok(s)
    }

    pub fn count(&self, id: MaterialId) -> usize {
        self.design.iter().filter(|&&t| self.materials[t] == id).count()
    }

    pub fn elements_of(&self, id: MaterialId) -> Vec<usize> {
        (0..self.materials.len())
            .filter(|&t| self.materials[t] == id)
            .collect()
    }

    pub fn area_of(&self, mesh: &Mesh, id: MaterialId) -> f64 {
        self.elements_of(id).iter().map(|&t| mesh.area(t)).sum()
    }

    pub fn has_magnets(&self) -> bool {
        self.design.iter().any(|&t| self.materials[t].is_magnet())
    }
}

/// Two magnet bars forming a V that opens towards the airgap, symmetric about
/// the pole axis, with air pockets at their outer ends and radial flux
/// barriers from there towards the rotor rim. Each bar is perpendicular to
/// the remanence direction of its magnet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VShapeLayout {
    /// Radius of the V vertex on the pole axis, m.
    pub vertex_radius: f64,
    pub bar_length: f64,
    pub bar_thickness: f64,
    /// Iron bridge between the inner bar ends.
    pub bridge: f64,
    /// Length of the air pocket beyond the outer bar end.
    pub pocket_length: f64,
    /// Width of the radial barrier above the outer bar end.
    pub barrier_width: f64,
    /// Outer radius of the radial barriers, m.
    pub barrier_outer_radius: f64,
    pub magnet1_angle_deg: f64,
    pub magnet2_angle_deg: f64,
}

impl Default for VShapeLayout {
    fn default() -> Self {
        Self {
            vertex_radius: 40.0e-3,
            bar_length: 11.0e-3,
            bar_thickness: 4.0e-3,
            bridge: 2.0e-3,
            pocket_length: 2.0e-3,
            barrier_width: 2.0e-3,
            barrier_outer_radius: 51.4e-3,
            magnet1_angle_deg: 30.0,
            magnet2_angle_deg: 15.0,
        }
    }
}

impl VShapeLayout {
    /// Material at point `p` of a pole spanning `pole_angle`.
    pub fn material_at(&self, p: [f64; 2], pole_angle: f64) -> MaterialId {
        let axis = 0.5 * pole_angle;
        let v = [self.vertex_radius * axis.cos(), self.vertex_radius * axis.sin()];
        let rel = [p[0] - v[0], p[1] - v[1]];
        // magnet 1 lies on the low-angle side, magnet 2 on the high-angle side
        let bars = [
            (MaterialId::Magnet1, self.magnet1_angle_deg.to_radians(), -1.0),
            (MaterialId::Magnet2, self.magnet2_angle_deg.to_radians(), 1.0),
        ];
        for (id, phi, turn) in bars {
            let n = [phi.cos(), phi.sin()];
            let d = [-turn * n[1], turn * n[0]];
            let s = rel[0] * d[0] + rel[1] * d[1];
            let q = rel[0] * n[0] + rel[1] * n[1];
            if q.abs() > 0.5 * self.bar_thickness {
                continue;
            }
            let s0 = 0.5 * self.bridge;
            if s >= s0 && s <= s0 + self.bar_length {
                return id;
            }
            if s > s0 + self.bar_length && s <= s0 + self.bar_length + self.pocket_length {
                return MaterialId::Air;
            }
        }
        let r = p[0].hypot(p[1]);
        for (phi, turn) in [(self.magnet1_angle_deg.to_radians(), -1.0), (self.magnet2_angle_deg.to_radians(), 1.0)] {
            let d = [-turn * phi.sin(), turn * phi.cos()];
            let reach = 0.5 * self.bridge + self.bar_length + 0.5 * self.pocket_length;
            let e = [v[0] + reach * d[0], v[1] + reach * d[1]];
            let re = e[0].hypot(e[1]);
            let offset = (p[0] * e[1] - p[1] * e[0]) / re;
            if r >= re && r <= self.barrier_outer_radius && offset.abs() <= 0.5 * self.barrier_width {
                return MaterialId::Air;
            }
        }
        MaterialId::Iron
    }

    pub fn design(&self, mesh: &Mesh) -> DesignState {
        DesignState::from_fn(mesh, |c| self.material_at(c, mesh.pole_angle))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_machine_mesh, MachineGeometry};

    #[test]
    fn v_shape_places_both_magnets_inside_the_pole() {
        let g = MachineGeometry::default();
        let mesh = build_machine_mesh(&g, 1.5e-3).unwrap();
        let d = VShapeLayout::default().design(&mesh);
        let a1 = d.area_of(&mesh, MaterialId::Magnet1);
        let a2 = d.area_of(&mesh, MaterialId::Magnet2);
        let bar = 11e-3 * 4e-3;
        assert!((a1 - bar).abs() < 0.2 * bar, "{a1}");
        assert!((a2 - bar).abs() < 0.2 * bar, "{a2}");
        for t in d.elements_of(MaterialId::Magnet1) {
            assert!(mesh.centroid(t)[1].atan2(mesh.centroid(t)[0]) < g.pole_angle() / 2.0);
        }
        for t in d.elements_of(MaterialId::Magnet2) {
            assert!(mesh.centroid(t)[1].atan2(mesh.centroid(t)[0]) > g.pole_angle() / 2.0);
        }
    }

    #[test]
    fn fixed_regions_cannot_change() {
        let g = MachineGeometry::default();
        let mesh = build_machine_mesh(&g, 2.0e-3).unwrap();
        let mut d = DesignState::uniform(&mesh, MaterialId::Iron);
        let ring = mesh.triangles_in(Region::IronRing)[0];
        assert!(d.set(ring, MaterialId::Air).is_err());
        let t = mesh.design_triangles()[3];
        d.set(t, MaterialId::Magnet2).unwrap();
        assert_eq!(d.count(MaterialId::Magnet2), 1);
    }
}
