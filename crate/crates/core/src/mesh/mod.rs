//! One-pole machine cross-section: geometry, triangulation, region and
//! boundary labels, and the sliding-interface rotation coupling.

mod geometry;
mod machine;
mod polar;
mod rotation;
mod rotor;
pub mod vtk;

pub use geometry::MachineGeometry;
pub use machine::{build_machine_mesh, edge_length_for_node_count, MeshStats};
pub use polar::{build_annulus_mesh, AnnulusSpec};
pub use rotation::{rotation_coupling, InterfaceMap, RotationCoupling};
pub use rotor::RotorMesh;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::signed_area;

/// Region label of a triangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum Region {
    Shaft = 0,
    Design = 1,
    IronRing = 2,
    AirgapRotor = 3,
    AirgapStator = 4,
    StatorIron = 5,
    SlotOpening = 6,
    WindingAPlus = 7,
    WindingCMinus = 8,
    WindingBPlus = 9,
}

impl Region {
    pub const ALL: [Region; 10] = [
        Region::Shaft,
        Region::Design,
        Region::IronRing,
        Region::AirgapRotor,
        Region::AirgapStator,
        Region::StatorIron,
        Region::SlotOpening,
        Region::WindingAPlus,
        Region::WindingCMinus,
        Region::WindingBPlus,
    ];

    pub fn id(self) -> u8 {
        self as u8
    }

    pub fn from_id(id: u8) -> Result<Self> {
        Region::ALL
            .get(id as usize)
            .copied()
            .ok_or(Error::UnknownRegion(id))
    }

    /// Regions moving with the rotor.
    pub fn is_rotor(self) -> bool {
        matches!(
            self,
            Region::Shaft | Region::Design | Region::IronRing | Region::AirgapRotor
        )
    }

    pub fn is_winding(self) -> bool {
        matches!(
            self,
            Region::WindingAPlus | Region::WindingCMinus | Region::WindingBPlus
        )
    }

    /// Regions of the rotor thermal and mechanical models (`D ∪ D_RI`).
    pub fn is_rotor_body(self) -> bool {
        matches!(self, Region::Design | Region::IronRing)
    }
}

/// Which side of the sliding interface a node belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Part {
    Rotor,
    Stator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundaryLabel {
    /// Outer stator rim, homogeneous Dirichlet for the vector potential.
    OuterStator,
    /// Radial edge at angle zero.
    Radial1,
    /// Radial edge at the pole angle.
    Radial2,
    /// Interface between shaft and design domain.
    Shaft,
    /// Outer rotor rim facing the airgap.
    RotorRim,
    /// Rotor side of the sliding interface.
    InterfaceRotor,
    /// Stator side of the sliding interface.
    InterfaceStator,
    /// Innermost arc of the shaft.
    ShaftInner,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub label: BoundaryLabel,
}

/// Triangulated pole sector `0 ≤ θ ≤ pole_angle`.
///
/// Rotor nodes are stored in the rotor reference frame; a rotor rotation is
/// applied through [`RotationCoupling`], never by moving nodes.
#[derive(Clone, Debug)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    pub boundary_edges: Vec<BoundaryEdge>,
    /// `(Γ_1 node, Γ_2 node)` pairs at equal radius on the same side of the interface.
    pub periodic_pairs: Vec<(usize, usize)>,
    pub node_part: Vec<Part>,
    /// Rotor-side interface nodes ordered by angle, first on `Γ_1`, last on `Γ_2`.
    pub rotor_interface: Vec<usize>,
    /// Stator-side interface nodes ordered by angle.
    pub stator_interface: Vec<usize>,
    pub pole_angle: f64,
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn vertices(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        signed_area(self.vertices(t))
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.vertices(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// Sum of triangle areas of `region`; zero when the region is empty.
    pub fn region_measure(&self, region: Region) -> f64 {
        self.regions
            .iter()
            .enumerate()
            .filter(|(_, &r)| r == region)
            .map(|(t, _)| self.area(t))
            .sum()
    }

    /// [`Mesh::region_measure`] addressed by raw region id.
    pub fn region_measure_by_id(&self, id: u8) -> Result<f64> {
        Ok(self.region_measure(Region::from_id(id)?))
    }

    pub fn triangles_in(&self, region: Region) -> Vec<usize> {
        (0..self.n_triangles())
            .filter(|&t| self.regions[t] == region)
            .collect()
    }

    /// Triangles of the design domain `D`, in mesh order.
    pub fn design_triangles(&self) -> Vec<usize> {
        self.triangles_in(Region::Design)
    }

    pub fn edges_with(&self, label: BoundaryLabel) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.label == label)
    }

    /// Angular spacing of the sliding-interface nodes.
    pub fn interface_spacing(&self) -> f64 {
        self.pole_angle / (self.stator_interface.len() as f64 - 1.0)
    }

    /// Number of interface intervals per pole.
    pub fn interface_intervals(&self) -> usize {
        self.stator_interface.len().saturating_sub(1)
    }

    /// Minimum signed triangle area; positive for a valid mesh.
    pub fn min_signed_area(&self) -> f64 {
        (0..self.n_triangles())
            .map(|t| self.area(t))
            .fold(f64::INFINITY, f64::min)
    }

    /// Rebuilds derived labels (parts, boundary edges, periodic pairs and
    /// interface lists) from node coordinates, triangles and region labels.
    pub fn from_raw(
        geometry: &MachineGeometry,
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
    ) -> Result<Self> {
        machine::label_mesh(geometry, nodes, triangles, regions)
    }
}

pub(crate) fn polar_angle(p: [f64; 2]) -> f64 {
    p[1].atan2(p[0])
}

pub(crate) fn radius(p: [f64; 2]) -> f64 {
    p[0].hypot(p[1])
}
