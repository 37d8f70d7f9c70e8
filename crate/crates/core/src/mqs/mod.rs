//! Time-periodic nonlinear magnetoquasistatics on one pole with a discrete
//! sliding interface, plus torque and loss post-processing.
//!
//! Rotor quantities live in the rotor frame. Step `n` differs from step 0
//! only through the identification of rotor and stator interface nodes and
//! the phase of the winding currents. Advancing the rotor by the full sweep
//! (15° mechanical) together with a 60° electrical phase advance reproduces
//! the rotor-frame field, so the time-periodicity condition couples step 0 to
//! step `N−1` directly on the rotor nodes.

mod losses;
mod solve;
mod torque;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub use losses::{ec_density, ec_density_gradient, joule_losses, EnergyBalance};
pub use solve::{JacobianFactor, NewtonOptions, NewtonReport};

use crate::design::DesignState;
use crate::error::{Error, Result};
use crate::fem::P1;
use crate::linalg::{DofMap, DofMapBuilder, PatternCache};
use crate::materials::MaterialSet;
use crate::mesh::{
    build_machine_mesh, polar_angle, InterfaceMap, radius, rotation_coupling, BoundaryLabel, MachineGeometry, Mesh, Part, Region,
    RotationCoupling,
};

/// Rotor positions over one sixth of an electrical period.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    pub n_steps: usize,
    /// Mechanical speed, rad/s.
    pub mech_speed: f64,
    /// Duration of the sweep `t_1`, s.
    pub period_sixth: f64,
    pub tau: f64,
    pub mech_angles: Vec<f64>,
    pub elec_angles: Vec<f64>,
}

impl TimeGrid {
    /// `mech_speed = 0` gives infinite step length (no induced currents).
    pub fn new(geometry: &MachineGeometry, mech_speed: f64) -> Result<Self> {
        if !(mech_speed >= 0.0 && mech_speed.is_finite()) {
            return Err(Error::InvalidInput(format!("mechanical speed {mech_speed} must be non-negative")));
        }
        let n = geometry.rotation_steps;
        let sweep = geometry.sweep_angle();
        let t1 = if mech_speed > 0.0 { sweep / mech_speed } else { f64::INFINITY };
        let mech_angles: Vec<f64> = (0..n).map(|k| sweep * k as f64 / n as f64).collect();
        let elec_angles = mech_angles.iter().map(|a| geometry.pole_pairs as f64 * a).collect();
        Ok(Self {
            n_steps: n,
            mech_speed,
            period_sixth: t1,
            tau: t1 / n as f64,
            mech_angles,
            elec_angles,
        })
    }
}

/// Three-phase current excitation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurrentExcitation {
    /// Amplitude `I`, A.
    pub amplitude: f64,
    /// Current angle `β`, rad.
    pub angle: f64,
    pub turns_per_slot: f64,
    pub fill_factor: f64,
}

impl CurrentExcitation {
    pub fn new(amplitude: f64, angle: f64) -> Self {
        Self {
            amplitude,
            angle,
            turns_per_slot: 60.0,
            fill_factor: 0.6,
        }
    }

    pub fn with_angle(self, angle: f64) -> Self {
        Self { angle, ..self }
    }

    pub fn with_amplitude(self, amplitude: f64) -> Self {
        Self { amplitude, ..self }
    }
}

/// Phase weight of a winding region at electrical angle `x = γ + β`.
pub fn phase_weight(region: Region, x: f64) -> f64 {
    match region {
        Region::WindingAPlus => x.sin(),
        Region::WindingCMinus => -(x - 2.0 * PI / 3.0).sin(),
        Region::WindingBPlus => (x - 4.0 * PI / 3.0).sin(),
        _ => 0.0,
    }
}

/// Solution of the coupled `N`-step problem for one excitation.
#[derive(Clone, Debug)]
pub struct PeriodicField {
    /// Nodal potentials per step (rotor nodes in the rotor frame), Wb/m.
    pub snapshots: Vec<Vec<f64>>,
    /// Free unknowns per step.
    pub free: Vec<Vec<f64>>,
    /// Interface multipliers per step at the stator interface nodes.
    pub multipliers: Vec<Vec<f64>>,
    pub excitation: CurrentExcitation,
    pub grid: TimeGrid,
    pub with_eddies: bool,
    pub design: DesignState,
    pub report: NewtonReport,
}

/// Options of one periodic solve.
#[derive(Clone, Copy, Debug, Default)]
pub struct SolveRequest<'a> {
    pub with_eddies: bool,
    /// Per-triangle factor applied to the constitutive law (reluctivity and
    /// magnetization).
    pub nu_scale: Option<&'a [f64]>,
    /// Starting point for Newton.
    pub initial: Option<&'a PeriodicField>,
    /// Solve the eddy-current coupling by sweeping periods instead of one
    /// monolithic Newton system.
    pub fixed_point: bool,
}

/// Mesh, materials, rotation maps and cached sparsity patterns of the
/// electromagnetic model.
#[derive(Debug)]
pub struct MqsModel {
    pub geometry: MachineGeometry,
    pub mesh: Mesh,
    pub coupling: RotationCoupling,
    pub materials: MaterialSet,
    pub elements: Vec<P1>,
    pub newton: NewtonOptions,
    pub(crate) maps: Vec<DofMap>,
    pub(crate) n_free: usize,
    slot_area: f64,
    pub(crate) airgap_stator: Vec<usize>,
    pub(crate) slot_shift: Vec<Option<(usize, f64)>>,
    pub(crate) static_patterns: Vec<PatternCache>,
    pub(crate) periodic_pattern: PatternCache,
}

impl MqsModel {
    pub fn new(geometry: &MachineGeometry, edge_length: f64, materials: MaterialSet) -> Result<Self> {
        let mesh = build_machine_mesh(geometry, edge_length)?;
        Self::from_mesh(geometry, mesh, materials)
    }

    pub fn from_mesh(geometry: &MachineGeometry, mesh: Mesh, materials: MaterialSet) -> Result<Self> {
        geometry.validate()?;
        materials.validate()?;
        let coupling = rotation_coupling(&mesh, geometry.rotation_steps)?;
        let elements = (0..mesh.n_triangles()).map(|t| P1::new(mesh.vertices(t))).collect();
        let (maps, n_free) = build_dof_maps(&mesh, &coupling.interface_dof_maps);
        let per_belt = (geometry.slots_per_pole() / 3) as f64;
        let slot_area = mesh.region_measure(Region::WindingAPlus) / per_belt;
        if !(slot_area > 0.0) {
            return Err(Error::InvalidInput("mesh has no A+ winding region".into()));
        }
        let slot_shift = stator_shift(&mesh, geometry.sweep_angle());
        Ok(Self {
            geometry: geometry.clone(),
            airgap_stator: mesh.triangles_in(Region::AirgapStator),
            static_patterns: (0..geometry.rotation_steps).map(|_| PatternCache::new()).collect(),
            periodic_pattern: PatternCache::new(),
            mesh,
            coupling,
            materials,
            elements,
            newton: NewtonOptions::default(),
            maps,
            n_free,
            slot_area,
            slot_shift,
        })
    }

    /// A model sharing mesh and geometry with different material data.
    pub fn with_materials(&self, materials: MaterialSet) -> Result<Self> {
        Self::from_mesh(&self.geometry, self.mesh.clone(), materials)
    }

    pub fn n_steps(&self) -> usize {
        self.coupling.n_steps
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    pub fn dof_map(&self, step: usize) -> &DofMap {
        &self.maps[step]
    }

    pub fn time_grid(&self, mech_speed: f64) -> Result<TimeGrid> {
        TimeGrid::new(&self.geometry, mech_speed)
    }

    /// Area of a single slot, `|D_{A+}|` divided by the slots per phase belt.
    pub fn slot_area(&self) -> f64 {
        self.slot_area
    }

    /// Peak slot current density `ĵ = N_w·I / A_slot`, A/m².
    pub fn peak_current_density(&self, exc: &CurrentExcitation) -> f64 {
        exc.turns_per_slot * exc.amplitude / self.slot_area
    }

    /// Per-triangle current density at step `n`, A/m².
    pub fn current_density(&self, exc: &CurrentExcitation, step: usize, grid: &TimeGrid) -> Vec<f64> {
        self.current_density_at(exc, grid.elec_angles[step])
    }

    /// Per-triangle current density at electrical rotor angle `γ`.
    pub fn current_density_at(&self, exc: &CurrentExcitation, elec_angle: f64) -> Vec<f64> {
        let jhat = self.peak_current_density(exc);
        let x = elec_angle + exc.angle;
        self.mesh
            .regions
            .iter()
            .map(|&r| if r.is_winding() { jhat * phase_weight(r, x) } else { 0.0 })
            .collect()
    }

    /// Full-scale factor `2 N_pp ℓ_z` from per-pole, per-length quantities.
    pub fn machine_factor(&self) -> f64 {
        2.0 * self.geometry.pole_pairs as f64 * self.geometry.axial_length
    }

    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if grid.n_steps != self.n_steps() {
            return Err(Error::InvalidInput(format!(
                "time grid has {} steps but the model was built for {}",
                grid.n_steps,
                self.n_steps()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
enum NodeKind {
    Free,
    Dirichlet,
    Slave(usize),
    Interface(usize),
}

/// Dof maps for every rotor position. Free unknowns are numbered stator
/// first, then rotor, so indices do not depend on the step.
pub(crate) fn build_dof_maps(mesh: &Mesh, interface_maps: &[InterfaceMap]) -> (Vec<DofMap>, usize) {
    let n = mesh.n_nodes();
    let mut kind = vec![NodeKind::Free; n];
    for e in mesh.edges_with(BoundaryLabel::OuterStator) {
        kind[e.nodes[0]] = NodeKind::Dirichlet;
        kind[e.nodes[1]] = NodeKind::Dirichlet;
    }
    for &(a, b) in &mesh.periodic_pairs {
        if kind[b] != NodeKind::Dirichlet {
            kind[b] = NodeKind::Slave(a);
        }
    }
    for (j, &v) in mesh.rotor_interface.iter().enumerate() {
        kind[v] = NodeKind::Interface(j);
    }
    let mut free_index = vec![usize::MAX; n];
    let mut count = 0;
    for part in [Part::Stator, Part::Rotor] {
        for v in 0..n {
            if mesh.node_part[v] == part && kind[v] == NodeKind::Free {
                free_index[v] = count;
                count += 1;
            }
        }
    }
    let maps = interface_maps
        .iter()
        .map(|imap| {
            let mut b = DofMapBuilder::new(n);
            for v in 0..n {
                match kind[v] {
                    NodeKind::Free => b.slave(v, vec![(free_index[v], 1.0)]),
                    NodeKind::Dirichlet => b.fixed(v),
                    _ => {}
                }
            }
            let resolve = |b: &DofMapBuilder, v: usize| -> Vec<(usize, f64)> {
                match kind[v] {
                    NodeKind::Slave(m) => b.get(m).unwrap_or(&[]).iter().map(|&(f, c)| (f, -c)).collect(),
                    _ => b.get(v).unwrap_or(&[]).to_vec(),
                }
            };
            for v in 0..n {
                if let NodeKind::Slave(_) = kind[v] {
                    let e = resolve(&b, v);
                    b.slave(v, e);
                }
            }
            for v in 0..n {
                if let NodeKind::Interface(j) = kind[v] {
                    let (i, s) = imap.targets[j];
                    let e = resolve(&b, mesh.stator_interface[i]);
                    b.slave(v, e.into_iter().map(|(f, c)| (f, s * c)).collect());
                }
            }
            b.set_free_count(count);
            b.build()
        })
        .collect();
    (maps, count)
}

/// For each stator node, the node one sweep further along `+θ` (with the
/// antiperiodic sign when wrapping past the pole). Used to express the
/// stator field before step 0 through the last step.
fn stator_shift(mesh: &Mesh, sweep: f64) -> Vec<Option<(usize, f64)>> {
    let pole = mesh.pole_angle;
    let tol = 1e-9 * mesh.nodes.iter().map(|&p| radius(p)).fold(0.0, f64::max);
    let cell = 1e-4;
    let key = |p: [f64; 2]| ((p[0] / cell).floor() as i64, (p[1] / cell).floor() as i64);
    let mut grid: std::collections::HashMap<(i64, i64), Vec<usize>> = std::collections::HashMap::new();
    for (v, &p) in mesh.nodes.iter().enumerate() {
        if mesh.node_part[v] == Part::Stator {
            grid.entry(key(p)).or_default().push(v);
        }
    }
    let find = |p: [f64; 2]| -> Option<usize> {
        let (kx, ky) = key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(list) = grid.get(&(kx + dx, ky + dy)) {
                    for &v in list {
                        let q = mesh.nodes[v];
                        if (q[0] - p[0]).hypot(q[1] - p[1]) < tol {
                            return Some(v);
                        }
                    }
                }
            }
        }
        None
    };
    (0..mesh.n_nodes())
        .map(|v| {
            if mesh.node_part[v] != Part::Stator {
                return None;
            }
            let p = mesh.nodes[v];
            let r = radius(p);
            let mut t = polar_angle(p) + sweep;
            let mut s = 1.0;
            if t > pole + 1e-12 {
                t -= pole;
                s = -1.0;
            }
            find([r * t.cos(), r * t.sin()]).map(|w| (w, s))
        })
        .collect()
}

#[cfg(test)]
mod tests;
