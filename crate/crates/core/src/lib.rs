//! Finite-element models of one pole of a permanent-magnet synchronous
//! machine (time-periodic magnetoquasistatics with a sliding interface,
//! rotor heat conduction, centrifugal plane stress) and a multi-material
//! level-set optimizer driven by topological derivatives.

pub mod design;
pub mod drivecycle;
pub mod elasticity;
pub mod error;
pub mod fem;
pub mod linalg;
pub mod materials;
pub mod mesh;
pub mod mqs;
pub mod optimizer;
pub mod thermal;

pub use error::{Error, Result, ResultExt};
pub use mesh::{
    build_machine_mesh, rotation_coupling, BoundaryLabel, MachineGeometry, Mesh, Part, Region,
    RotationCoupling,
};
pub use design::{DesignState, VShapeLayout};
pub use materials::{MaterialId, MaterialSet};
pub use mqs::{CurrentExcitation, MqsModel, PeriodicField, SolveRequest, TimeGrid};
pub use elasticity::{ElasticField, ElasticModel};
pub use thermal::{ThermalField, ThermalModel, ThermalParams};
pub use drivecycle::{cluster_cycle, read_trace, DriveCycle, EfficiencyReport, MtpaOptions, MtpaTable, OperatingPoint};
pub use optimizer::{run_optimization, ConstraintWeights, OptimizationResult, OptimizerOptions, Problem};
