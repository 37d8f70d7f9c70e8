use serde::{Deserialize, Serialize};

use crate::design::DesignState;
use crate::drivecycle::OperatingPoint;
use crate::elasticity::ElasticField;
use crate::error::{Error, Result};
use crate::mesh::{Mesh, RotorMesh};
use crate::thermal::ThermalField;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintWeights {
    /// `w_t`.
    pub temperature: f64,
    /// `w_VM`.
    pub stress: f64,
    /// `ϑ*`, °C.
    pub max_temperature: f64,
    /// `σ*`, Pa.
    pub max_stress: f64,
    /// Power-mean exponent `p`.
    pub exponent: u32,
}

impl Default for ConstraintWeights {
    fn default() -> Self {
        Self {
            temperature: 1e7,
            stress: 1e10,
            max_temperature: 80.0,
            max_stress: 500e6,
            exponent: 16,
        }
    }
}

impl ConstraintWeights {
    /// No constraint active.
    pub fn unconstrained() -> Self {
        Self {
            temperature: 0.0,
            stress: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.temperature >= 0.0 && self.stress >= 0.0) {
            return Err(Error::InvalidInput("constraint weights must be non-negative".into()));
        }
        if !(self.max_temperature > 0.0 && self.max_stress > 0.0) {
            return Err(Error::InvalidInput("temperature and stress limits must be positive".into()));
        }
        if self.exponent < 2 || self.exponent % 2 != 0 {
            return Err(Error::InvalidInput(format!("power-mean exponent {} must be even and at least 2", self.exponent)));
        }
        Ok(())
    }
}

/// `J = −Σ_k t_k ω_k T̄_k`, W.
pub fn objective_torque(points: &[OperatingPoint], torques: &[f64]) -> f64 {
    -points.iter().zip(torques).map(|(p, t)| p.weight * p.speed * t).sum::<f64>()
}

/// Quadratic hinge `(max{1, ϑ/ϑ*} − 1)²` and its derivative in `ϑ`.
pub fn temperature_hinge(theta: f64, limit: f64) -> (f64, f64) {
    let x = theta / limit - 1.0;
    if x > 0.0 {
        (x * x, 2.0 * x / limit)
    } else {
        (0.0, 0.0)
    }
}

/// `C_t = ∫_{Ω_m1 ∪ Ω_m2} (max{1, ϑ/ϑ*} − 1)²` with vertex quadrature, m².
pub fn constraint_temperature(mesh: &Mesh, field: &ThermalField, design: &DesignState, limit: f64) -> f64 {
    design
        .design_elements()
        .iter()
        .filter(|&&t| design.material(t).is_magnet())
        .map(|&t| {
            let g: f64 = mesh.triangles[t].iter().map(|&v| temperature_hinge(field.temperature[v], limit).0).sum();
            mesh.area(t) * g / 3.0
        })
        .sum()
}

/// `∂C_t/∂ϑ` per global node.
pub fn constraint_temperature_gradient(mesh: &Mesh, field: &ThermalField, design: &DesignState, limit: f64) -> Vec<f64> {
    let mut g = vec![0.0; mesh.n_nodes()];
    for &t in design.design_elements() {
        if design.material(t).is_magnet() {
            for &v in &mesh.triangles[t] {
                g[v] += mesh.area(t) / 3.0 * temperature_hinge(field.temperature[v], limit).1;
            }
        }
    }
    g
}

/// `(1 + x^p)^{1/p}` and its derivative, evaluated without overflow.
pub fn power_mean(x: f64, p: u32) -> (f64, f64) {
    let x = x.max(0.0);
    let p = p as f64;
    let m = x.max(1.0);
    let f = m * ((1.0 / m).powf(p) + (x / m).powf(p)).powf(1.0 / p);
    (f, (x / f).powf(p - 1.0))
}

/// `C_VM = ∫_{D ∪ D_RI} (1 + (s_VM/σ*²)^p)^{1/p}`, m².
pub fn constraint_vonmises(mesh: &Mesh, rotor: &RotorMesh, field: &ElasticField, limit: f64, p: u32) -> f64 {
    let s = field.von_mises_sq();
    rotor
        .triangles
        .iter()
        .map(|&t| mesh.area(t) * power_mean(s[t] / (limit * limit), p).0)
        .sum()
}

/// `J + w_t C_t + w_VM C_VM`.
pub fn total_objective(j: f64, c_t: f64, c_vm: f64, weights: &ConstraintWeights) -> f64 {
    let mut total = j;
    if weights.temperature > 0.0 {
        total += weights.temperature * c_t;
    }
    if weights.stress > 0.0 {
        total += weights.stress * c_vm;
    }
    total
}
