use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Machine cross-section dimensions. Lengths in metres.
///
/// The rotor is split into a shaft annulus, the design domain and a thin iron
/// ring; the airgap is split at `interface_radius` into a rotor-side and a
/// stator-side layer. Stator slots are rectangular in polar coordinates with
/// a narrower opening towards the airgap.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MachineGeometry {
    pub pole_pairs: usize,
    pub slot_count: usize,
    /// Inner radius of the shaft annulus (natural boundary for the potential).
    pub shaft_radius: f64,
    pub rotor_inner_radius: f64,
    pub rotor_outer_radius: f64,
    pub stator_inner_radius: f64,
    pub stator_outer_radius: f64,
    pub axial_length: f64,
    pub interface_radius: f64,
    pub iron_ring_thickness: f64,
    pub slot_opening_depth: f64,
    /// Slot opening width as a fraction of the slot pitch.
    pub slot_opening_ratio: f64,
    pub slot_depth: f64,
    /// Slot width as a fraction of the slot pitch.
    pub slot_width_ratio: f64,
    /// Rotor positions per sixth of an electrical period; the interface node
    /// spacing is chosen to divide the resulting step angle.
    pub rotation_steps: usize,
    /// Target tangential/radial aspect ratio of airgap elements.
    pub airgap_aspect: f64,
}

impl Default for MachineGeometry {
    fn default() -> Self {
        Self {
            pole_pairs: 4,
            slot_count: 48,
            shaft_radius: 8.0e-3,
            rotor_inner_radius: 17.7e-3,
            rotor_outer_radius: 52.4e-3,
            stator_inner_radius: 52.8e-3,
            stator_outer_radius: 77.3e-3,
            axial_length: 90.0e-3,
            interface_radius: 52.6e-3,
            iron_ring_thickness: 1.0e-3,
            slot_opening_depth: 0.5e-3,
            slot_opening_ratio: 0.25,
            slot_depth: 14.0e-3,
            slot_width_ratio: 0.5,
            rotation_steps: 11,
            airgap_aspect: 12.0,
        }
    }
}

impl MachineGeometry {
    /// Angular span of one pole, `π / N_pp`.
    pub fn pole_angle(&self) -> f64 {
        PI / self.pole_pairs as f64
    }

    /// Mechanical rotation covered by one sixth of an electrical period.
    pub fn sweep_angle(&self) -> f64 {
        self.pole_angle() / 3.0
    }

    pub fn step_angle(&self) -> f64 {
        self.sweep_angle() / self.rotation_steps as f64
    }

    pub fn slots_per_pole(&self) -> usize {
        self.slot_count / (2 * self.pole_pairs)
    }

    pub fn slot_pitch(&self) -> f64 {
        2.0 * PI / self.slot_count as f64
    }

    /// Inner radius of the iron ring, i.e. outer radius of the design domain.
    pub fn design_outer_radius(&self) -> f64 {
        self.rotor_outer_radius - self.iron_ring_thickness
    }

    pub fn slot_inner_radius(&self) -> f64 {
        self.stator_inner_radius + self.slot_opening_depth
    }

    pub fn slot_outer_radius(&self) -> f64 {
        self.slot_inner_radius() + self.slot_depth
    }

    pub fn validate(&self) -> Result<()> {
        let g = |m: &str| Err(Error::Geometry(m.to_string()));
        if self.pole_pairs == 0 {
            return g("pole_pairs must be positive");
        }
        if self.slot_count == 0 || self.slot_count % (6 * self.pole_pairs) != 0 {
            return g("slot_count must be a positive multiple of 6·pole_pairs");
        }
        if self.slots_per_pole() % 3 != 0 {
            return g("slots per pole must split into three phase belts");
        }
        if self.rotation_steps == 0 {
            return g("rotation_steps must be positive");
        }
        let radii = [
            ("shaft_radius", self.shaft_radius),
            ("rotor_inner_radius", self.rotor_inner_radius),
            ("design_outer_radius", self.design_outer_radius()),
            ("rotor_outer_radius", self.rotor_outer_radius),
            ("interface_radius", self.interface_radius),
            ("stator_inner_radius", self.stator_inner_radius),
            ("slot_inner_radius", self.slot_inner_radius()),
            ("slot_outer_radius", self.slot_outer_radius()),
            ("stator_outer_radius", self.stator_outer_radius),
        ];
        if !(self.shaft_radius > 0.0) {
            return g("shaft_radius must be positive");
        }
        for w in radii.windows(2) {
            if !(w[0].1 < w[1].1) {
                return Err(Error::Geometry(format!(
                    "radius ordering violated: {} = {} m must be below {} = {} m",
                    w[0].0, w[0].1, w[1].0, w[1].1
                )));
            }
        }
        if !(self.axial_length > 0.0) {
            return g("axial_length must be positive");
        }
        if !(self.slot_width_ratio > 0.0 && self.slot_width_ratio < 1.0) {
            return g("slot_width_ratio must lie in (0, 1)");
        }
        if !(self.slot_opening_ratio > 0.0 && self.slot_opening_ratio <= self.slot_width_ratio) {
            return g("slot_opening_ratio must lie in (0, slot_width_ratio]");
        }
        if !(self.airgap_aspect >= 1.0) {
            return g("airgap_aspect must be at least 1");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_geometry_is_valid() {
        let g = MachineGeometry::default();
        g.validate().unwrap();
        assert_eq!(g.slots_per_pole(), 6);
        assert!((g.sweep_angle().to_degrees() - 15.0).abs() < 1e-12);
        assert!((g.step_angle() * 11.0 - g.sweep_angle()).abs() < 1e-15);
    }

    #[test]
    fn rotor_overlapping_stator_is_rejected() {
        let g = MachineGeometry {
            rotor_outer_radius: 53.0e-3,
            ..Default::default()
        };
        let err = g.validate().unwrap_err().to_string();
        assert!(err.contains("rotor_outer_radius"), "{err}");
    }
}
