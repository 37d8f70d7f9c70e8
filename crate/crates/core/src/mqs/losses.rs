//! Joule and eddy-current losses and the discrete energy balance.

use super::{MqsModel, PeriodicField};
use crate::fem::mass_entry;
use crate::materials::MaterialId;

/// Copper losses `R_S I²/2` of the full machine, W.
pub fn joule_losses(resistance: f64, amplitude: f64) -> f64 {
    0.5 * resistance * amplitude * amplitude
}

/// Area-weighted mean, taken relative to the first value so that uniform
/// data gives that value exactly.
fn area_mean(d: &[f64], areas: &[f64], total: f64) -> f64 {
    let x0 = d.first().copied().unwrap_or(0.0);
    x0 + d.iter().zip(areas).map(|(x, a)| (x - x0) * a).sum::<f64>() / total
}

/// Eddy-current loss density of one magnet, W/m³.
///
/// `increments[n][k]` is the change of the element value of `a` over step `n`
/// for element `k` of the magnet. The induced current density is
/// `−σ (Δa − mean Δa)/τ`, the mean being area weighted, which enforces zero
/// net current through the magnet. The density is averaged over the steps.
pub fn ec_density(areas: &[f64], increments: &[Vec<f64>], sigma: f64, tau: f64) -> Vec<f64> {
    let mut p = vec![0.0; areas.len()];
    if !tau.is_finite() || areas.is_empty() || increments.is_empty() {
        return p;
    }
    let total: f64 = areas.iter().sum();
    let scale = sigma / (increments.len() as f64 * tau * tau);
    for d in increments {
        let mean = area_mean(d, areas, total);
        for (pk, x) in p.iter_mut().zip(d) {
            *pk += scale * (x - mean) * (x - mean);
        }
    }
    p
}

/// `Σ_k w_k ∂p_k/∂increments[n][j]` for weights `w` over the magnet elements.
pub fn ec_density_gradient(areas: &[f64], increments: &[Vec<f64>], sigma: f64, tau: f64, weights: &[f64]) -> Vec<Vec<f64>> {
    if !tau.is_finite() || areas.is_empty() {
        return increments.iter().map(|d| vec![0.0; d.len()]).collect();
    }
    let total: f64 = areas.iter().sum();
    let scale = sigma / (increments.len() as f64 * tau * tau);
    increments
        .iter()
        .map(|d| {
            let mean = area_mean(d, areas, total);
            let dev: Vec<f64> = d.iter().map(|x| x - mean).collect();
            let s: f64 = weights.iter().zip(&dev).map(|(w, e)| w * e).sum();
            dev.iter()
                .zip(weights)
                .zip(areas)
                .map(|((e, w), a)| 2.0 * scale * (w * e - s * a / total))
                .collect()
        })
        .collect()
}

/// Terms of the discrete energy balance over one sweep, per pole and unit length (J/m).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBalance {
    /// Electrical input `Σ_n ∫ ½(j^n + j^{n−1}) (a^n − a^{n−1})`.
    pub input: f64,
    /// Mechanical work `T̄·Δθ_sweep / (2N_pp ℓ_z)`.
    pub mechanical: f64,
    /// Ohmic dissipation `Σ_n Δaᵀ M_σ Δa / τ`.
    pub dissipation: f64,
}

impl EnergyBalance {
    pub fn relative_error(&self) -> f64 {
        (self.input - self.mechanical - self.dissipation).abs() / self.input.abs()
    }
}

impl MqsModel {
    /// Centroid value of `a` on each triangle.
    fn centroid_values(&self, a: &[f64]) -> Vec<f64> {
        self.mesh
            .triangles
            .iter()
            .map(|t| (a[t[0]] + a[t[1]] + a[t[2]]) / 3.0)
            .collect()
    }

    /// Per-step centroid increments `a^n − a^{n−1}` of the listed triangles,
    /// with `a^{−1} = a^{N−1}` in the rotor frame.
    pub(crate) fn rotor_increments(&self, field: &PeriodicField, elements: &[usize]) -> Vec<Vec<f64>> {
        let n = field.snapshots.len();
        let cv: Vec<Vec<f64>> = field.snapshots.iter().map(|a| self.centroid_values(a)).collect();
        (0..n)
            .map(|k| {
                let prev = (k + n - 1) % n;
                elements.iter().map(|&t| cv[k][t] - cv[prev][t]).collect()
            })
            .collect()
    }

    /// Eddy-current loss density per triangle (zero outside magnets), W/m³.
    pub fn ec_loss_density(&self, field: &PeriodicField) -> Vec<f64> {
        let mut p = vec![0.0; self.mesh.n_triangles()];
        for id in [MaterialId::Magnet1, MaterialId::Magnet2] {
            let elems = field.design.elements_of(id);
            if elems.is_empty() {
                continue;
            }
            let areas: Vec<f64> = elems.iter().map(|&t| self.elements[t].area).collect();
            let inc = self.rotor_increments(field, &elems);
            let d = ec_density(&areas, &inc, self.materials.get(id).sigma, field.grid.tau);
            for (k, &t) in elems.iter().enumerate() {
                p[t] = d[k];
            }
        }
        p
    }

    /// Full-machine eddy-current losses from a density, W.
    pub fn ec_losses(&self, density: &[f64]) -> f64 {
        let s: f64 = density.iter().zip(&self.elements).map(|(p, e)| p * e.area).sum();
        self.machine_factor() * s
    }

    /// Discrete energy balance of a periodic field with eddy currents.
    pub fn energy_balance(&self, field: &PeriodicField) -> EnergyBalance {
        let n = field.snapshots.len();
        let tau = field.grid.tau;
        let mut input = 0.0;
        let mut dissipation = 0.0;
        for k in 0..n {
            let a = &field.snapshots[k];
            let prev: Vec<f64> = if k > 0 {
                field.snapshots[k - 1].clone()
            } else {
                let last = &field.snapshots[n - 1];
                (0..a.len())
                    .map(|v| match self.slot_shift[v] {
                        Some((w, s)) => s * last[w],
                        None => last[v],
                    })
                    .collect()
            };
            let step = self.geometry.step_angle() * self.geometry.pole_pairs as f64;
            let j_now = self.current_density(&field.excitation, k, &field.grid);
            let j_prev = self.current_density_at(&field.excitation, field.grid.elec_angles[k] - step);
            let j: Vec<f64> = j_now.iter().zip(&j_prev).map(|(x, y)| 0.5 * (x + y)).collect();
            for t in 0..self.mesh.n_triangles() {
                let tri = self.mesh.triangles[t];
                let area = self.elements[t].area;
                if j[t] != 0.0 {
                    let da: f64 = tri.iter().map(|&v| a[v] - prev[v]).sum();
                    input += j[t] * area / 3.0 * da;
                }
                let sigma = self.materials.get(field.design.material(t)).sigma;
                if field.with_eddies && sigma > 0.0 && self.mesh.regions[t] == crate::mesh::Region::Design && tau.is_finite() {
                    let d = tri.map(|v| a[v] - prev[v]);
                    for i in 0..3 {
                        for m in 0..3 {
                            dissipation += sigma / tau * mass_entry(area, i, m) * d[i] * d[m];
                        }
                    }
                }
            }
        }
        let mechanical = self.average_torque(field) / self.machine_factor() * self.geometry.sweep_angle();
        EnergyBalance {
            input,
            mechanical,
            dissipation,
        }
    }
}
