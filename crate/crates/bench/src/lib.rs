//! Shared fixtures for the benchmarks.

use rotopt::drivecycle::{DriveCycle, OperatingPoint};
use rotopt::{ConstraintWeights, CurrentExcitation, DesignState, MachineGeometry, MaterialSet, MqsModel, MtpaOptions, Problem, ThermalParams, VShapeLayout};

/// Desk-scale machine: five time steps, 2.2 mm edges.
pub fn desk_geometry() -> MachineGeometry {
    MachineGeometry {
        rotation_steps: 5,
        ..MachineGeometry::default()
    }
}

pub fn desk_model() -> (MqsModel, DesignState) {
    let mqs = MqsModel::new(&desk_geometry(), 2.2e-3, MaterialSet::default()).expect("desk mesh");
    let design = VShapeLayout::default().design(&mqs.mesh);
    (mqs, design)
}

/// Two-point cycle with all constraint terms active.
pub fn desk_problem() -> (Problem, DesignState) {
    let (mqs, design) = desk_model();
    let cycle = DriveCycle::from_points(vec![
        OperatingPoint { speed: 700.0, torque: 40.0, weight: 0.6 },
        OperatingPoint { speed: 2100.0, torque: 80.0, weight: 0.4 },
    ])
    .expect("cycle");
    let p = Problem::new(
        mqs,
        ThermalParams::default(),
        cycle,
        ConstraintWeights::default(),
        3.2,
        CurrentExcitation::new(0.0, 0.0),
        MtpaOptions::default(),
    )
    .expect("problem");
    (p, design)
}
