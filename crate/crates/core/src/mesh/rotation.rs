use crate::error::{Error, Result};

use super::Mesh;

/// Identification of rotor-side interface nodes with stator-side nodes for
/// one rotor position.
#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceMap {
    /// Rotation in interface node spacings (may be negative).
    pub shift: i64,
    /// For rotor interface node `j`: stator interface index in `0..n` and the
    /// sign picked up when wrapping across the antiperiodic radial edges.
    pub targets: Vec<(usize, f64)>,
}

impl InterfaceMap {
    /// Rotor-side interface values from stator-side values.
    pub fn apply(&self, stator: &[f64]) -> Vec<f64> {
        self.targets.iter().map(|&(i, s)| s * stator[i]).collect()
    }

    pub fn sign_flips(&self) -> Vec<bool> {
        self.targets.iter().map(|&(_, s)| s < 0.0).collect()
    }
}

/// Discrete sliding-interface rotation operator for `N` rotor positions.
///
/// The rotor mesh stays in its own frame. At step `n` the rotor is turned by
/// `n·step_angle`, which moves rotor interface node `j` onto stator node
/// `j + n·m` (indices taken modulo the pole, with a sign flip per wrap).
#[derive(Clone, Debug)]
pub struct RotationCoupling {
    pub step_angle: f64,
    pub n_steps: usize,
    /// Interface spacings per rotation step.
    pub spacings_per_step: usize,
    /// Interface intervals per pole.
    pub intervals: usize,
    pub interface_dof_maps: Vec<InterfaceMap>,
}

impl RotationCoupling {
    /// Map for an arbitrary (possibly negative or out-of-period) step.
    pub fn map(&self, step: i64) -> InterfaceMap {
        let n = self.intervals as i64;
        let shift = step * self.spacings_per_step as i64;
        let targets = (0..=n)
            .map(|j| {
                let i = j + shift;
                let wraps = i.div_euclid(n);
                let sign = if wraps.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                (i.rem_euclid(n) as usize, sign)
            })
            .collect();
        InterfaceMap { shift, targets }
    }

    pub fn step(&self, n: usize) -> &InterfaceMap {
        &self.interface_dof_maps[n]
    }

    /// Shift that rotates by one full pole span.
    pub fn pole_steps(&self) -> i64 {
        (self.intervals / self.spacings_per_step) as i64
    }
}

/// Builds the rotation maps for `n_steps` positions over a 15° (one third of
/// a pole) mechanical sweep.
pub fn rotation_coupling(mesh: &Mesh, n_steps: usize) -> Result<RotationCoupling> {
    if n_steps == 0 {
        return Err(Error::InvalidInput("number of rotation steps must be positive".into()));
    }
    let intervals = mesh.interface_intervals();
    if intervals == 0 {
        return Err(Error::InvalidInput("mesh has no sliding interface".into()));
    }
    let spacing = mesh.interface_spacing();
    let step_angle = mesh.pole_angle / 3.0 / n_steps as f64;
    let ratio = step_angle / spacing;
    let m = ratio.round();
    if m < 1.0 || (ratio - m).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::RotationStep {
            spacing_deg: spacing.to_degrees(),
            step_deg: step_angle.to_degrees(),
        });
    }
    let mut rc = RotationCoupling {
        step_angle,
        n_steps,
        spacings_per_step: m as usize,
        intervals,
        interface_dof_maps: Vec::new(),
    };
    rc.interface_dof_maps = (0..n_steps as i64).map(|n| rc.map(n)).collect();
    Ok(rc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_machine_mesh, radius, MachineGeometry};

    fn setup() -> (Mesh, RotationCoupling) {
        let g = MachineGeometry::default();
        let m = build_machine_mesh(&g, 1.5e-3).unwrap();
        let rc = rotation_coupling(&m, g.rotation_steps).unwrap();
        (m, rc)
    }

    #[test]
    fn step_zero_is_identity() {
        let (_, rc) = setup();
        let m0 = rc.step(0);
        for (j, &(i, s)) in m0.targets.iter().enumerate().take(rc.intervals) {
            assert_eq!((i, s), (j, 1.0));
        }
        // the last rotor node coincides with minus the first stator node
        assert_eq!(m0.targets[rc.intervals], (0, -1.0));
    }

    #[test]
    fn forward_then_backward_is_identity() {
        let (_, rc) = setup();
        let values: Vec<f64> = (0..=rc.intervals).map(|i| (i as f64 * 0.37).sin()).collect();
        for n in -15..15 {
            let fwd = rc.map(n).apply(&values);
            let back = rc.map(-n).apply(&fwd);
            for j in 0..rc.intervals {
                assert!((back[j] - values[j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn full_pole_rotation_flips_all_signs() {
        let (_, rc) = setup();
        let m = rc.map(rc.pole_steps());
        for (j, &(i, s)) in m.targets.iter().enumerate().take(rc.intervals) {
            assert_eq!(i, j);
            assert_eq!(s, -1.0);
        }
    }

    #[test]
    fn maps_preserve_radius() {
        let (mesh, rc) = setup();
        for n in 0..rc.n_steps {
            for (j, &(i, _)) in rc.step(n).targets.iter().enumerate() {
                let rj = radius(mesh.nodes[mesh.rotor_interface[j]]);
                let ri = radius(mesh.nodes[mesh.stator_interface[i]]);
                assert!((rj - ri).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn incompatible_step_count_is_rejected() {
        let (mesh, _) = setup();
        let err = rotation_coupling(&mesh, 7).unwrap_err();
        assert!(matches!(err, Error::RotationStep { .. }), "{err}");
        assert!(err.to_string().contains("integer k"));
    }
}
