//! Electromagnetic torque from the interface multipliers and, for
//! cross-checking, from the Maxwell stress tensor on an airgap arc.

use super::{MqsModel, PeriodicField};
use crate::error::{Error, Result};
use crate::materials::NU0;
use crate::mesh::{polar_angle, radius, Region};

impl MqsModel {
    /// Multiplier `λ_i = Σ_e ∫ ν_0 b·curl φ_i` at the stator interface nodes,
    /// i.e. the tangential field traction the stator air layer exerts on the
    /// interface.
    pub fn interface_multipliers(&self, a: &[f64]) -> Vec<f64> {
        let iface = &self.mesh.stator_interface;
        let mut local = vec![usize::MAX; self.mesh.n_nodes()];
        for (i, &v) in iface.iter().enumerate() {
            local[v] = i;
        }
        let mut lambda = vec![0.0; iface.len()];
        for &t in &self.airgap_stator {
            let e = &self.elements[t];
            let tri = self.mesh.triangles[t];
            let b = e.curl_of([a[tri[0]], a[tri[1]], a[tri[2]]]);
            for k in 0..3 {
                let i = local[tri[k]];
                if i != usize::MAX {
                    let c = e.curl(k);
                    lambda[i] += e.area * NU0 * (b[0] * c[0] + b[1] * c[1]);
                }
            }
        }
        lambda
    }

    /// Nodal radial flux density `b_r = (1/r) ∂a/∂θ` on the stator interface:
    /// central differences inside, one-sided at the pole edges.
    fn interface_radial_flux(&self, a: &[f64]) -> Vec<f64> {
        let iface = &self.mesh.stator_interface;
        let n = iface.len() - 1;
        let h = self.geometry.interface_radius * self.mesh.interface_spacing();
        let slope: Vec<f64> = (0..n).map(|i| (a[iface[i + 1]] - a[iface[i]]) / h).collect();
        (0..=n)
            .map(|i| {
                if i == 0 {
                    slope[0]
                } else if i == n {
                    slope[n - 1]
                } else {
                    0.5 * (slope[i - 1] + slope[i])
                }
            })
            .collect()
    }

    /// Full-machine torque at one rotor position, N·m.
    pub fn step_torque(&self, a: &[f64]) -> f64 {
        let lambda = self.interface_multipliers(a);
        let br = self.interface_radial_flux(a);
        let s: f64 = lambda.iter().zip(&br).map(|(l, g)| l * g).sum();
        self.machine_factor() * self.geometry.interface_radius * s
    }

    /// Gradient of [`MqsModel::step_torque`] with respect to the full nodal
    /// potential (the torque is a quadratic form in `a`).
    pub fn step_torque_gradient(&self, a: &[f64]) -> Vec<f64> {
        let iface = &self.mesh.stator_interface;
        let n = iface.len() - 1;
        let lambda = self.interface_multipliers(a);
        let br = self.interface_radial_flux(a);
        let factor = self.machine_factor() * self.geometry.interface_radius;
        let mut grad = vec![0.0; a.len()];
        // ∂/∂a through λ: Σ_i g_i ∂λ_i/∂a
        let mut local = vec![usize::MAX; self.mesh.n_nodes()];
        for (i, &v) in iface.iter().enumerate() {
            local[v] = i;
        }
        for &t in &self.airgap_stator {
            let e = &self.elements[t];
            let tri = self.mesh.triangles[t];
            for k in 0..3 {
                let i = local[tri[k]];
                if i == usize::MAX {
                    continue;
                }
                let ck = e.curl(k);
                for m in 0..3 {
                    let cm = e.curl(m);
                    grad[tri[m]] += factor * br[i] * e.area * NU0 * (ck[0] * cm[0] + ck[1] * cm[1]);
                }
            }
        }
        // ∂/∂a through g: Σ_i λ_i ∂g_i/∂a
        let h = self.geometry.interface_radius * self.mesh.interface_spacing();
        let mut dslope = vec![0.0; n];
        dslope[0] += lambda[0];
        dslope[n - 1] += lambda[n];
        for i in 1..n {
            dslope[i - 1] += 0.5 * lambda[i];
            dslope[i] += 0.5 * lambda[i];
        }
        for (k, d) in dslope.iter().enumerate() {
            grad[iface[k + 1]] += factor * d / h;
            grad[iface[k]] -= factor * d / h;
        }
        grad
    }

    /// Torque per step of a periodic field.
    pub fn torques(&self, field: &PeriodicField) -> Vec<f64> {
        field.snapshots.iter().map(|a| self.step_torque(a)).collect()
    }

    /// Mean torque over the steps of a periodic field.
    pub fn average_torque(&self, field: &PeriodicField) -> f64 {
        let t = self.torques(field);
        t.iter().sum::<f64>() / t.len() as f64
    }

    /// Maxwell-stress torque `2N_pp ℓ_z r² ∫ ν_0 b_r b_θ dθ` on an arc of
    /// radius `r` inside the airgap layer of either side.
    pub fn maxwell_stress_torque(&self, a: &[f64], r: f64) -> Result<f64> {
        let g = &self.geometry;
        if !(r > g.rotor_outer_radius && r < g.stator_inner_radius) || (r - g.interface_radius).abs() < 1e-12 {
            return Err(Error::InvalidInput(format!(
                "Maxwell stress radius {r} must lie strictly inside the airgap and off the interface"
            )));
        }
        let region = if r < g.interface_radius { Region::AirgapRotor } else { Region::AirgapStator };
        let candidates: Vec<usize> = self
            .mesh
            .triangles_in(region)
            .into_iter()
            .filter(|&t| {
                let v = self.mesh.vertices(t);
                let rs = v.map(radius);
                rs.iter().cloned().fold(f64::INFINITY, f64::min) <= r + 1e-12
                    && rs.iter().cloned().fold(0.0, f64::max) >= r - 1e-12
            })
            .collect();
        let mut sorted: Vec<(f64, usize)> = candidates
            .iter()
            .map(|&t| (polar_angle(self.mesh.centroid(t)), t))
            .collect();
        sorted.sort_by(|x, y| x.0.total_cmp(&y.0));
        let pole = self.mesh.pole_angle;
        let samples = 40 * self.mesh.interface_intervals();
        let dtheta = pole / samples as f64;
        let mut integral = 0.0;
        let mut hint = 0usize;
        for k in 0..samples {
            let th = (k as f64 + 0.5) * dtheta;
            let p = [r * th.cos(), r * th.sin()];
            let t = locate(&self.mesh, &sorted, hint, p).ok_or_else(|| {
                Error::InvalidInput(format!("no airgap element contains the point at r={r}, θ={th}"))
            })?;
            hint = t.1;
            let e = &self.elements[t.0];
            let tri = self.mesh.triangles[t.0];
            let b = e.curl_of([a[tri[0]], a[tri[1]], a[tri[2]]]);
            let (c, s) = (th.cos(), th.sin());
            let br = b[0] * c + b[1] * s;
            let bt = -b[0] * s + b[1] * c;
            integral += NU0 * br * bt * dtheta;
        }
        Ok(self.machine_factor() * r * r * integral)
    }
}

impl MqsModel {
    /// Maxwell-stress torque averaged over all radii of the airgap,
    /// `2N_pp ℓ_z/(r_s − r_r) ∫ ν_0 r b_r b_θ dA` over both airgap layers.
    pub fn airgap_maxwell_torque(&self, a: &[f64]) -> f64 {
        let g = &self.geometry;
        let mut integral = 0.0;
        for (t, &region) in self.mesh.regions.iter().enumerate() {
            if !matches!(region, Region::AirgapRotor | Region::AirgapStator) {
                continue;
            }
            let e = &self.elements[t];
            let v = self.mesh.vertices(t);
            let tri = self.mesh.triangles[t];
            let b = e.curl_of([a[tri[0]], a[tri[1]], a[tri[2]]]);
            // edge midpoints integrate quadratics exactly
            for i in 0..3 {
                let j = (i + 1) % 3;
                let p = [0.5 * (v[i][0] + v[j][0]), 0.5 * (v[i][1] + v[j][1])];
                let r = radius(p);
                let (c, s) = (p[0] / r, p[1] / r);
                let br = b[0] * c + b[1] * s;
                let bt = -b[0] * s + b[1] * c;
                integral += e.area / 3.0 * r * br * bt;
            }
        }
        self.machine_factor() * NU0 * integral / (g.stator_inner_radius - g.rotor_outer_radius)
    }
}

/// Finds the triangle containing `p`, scanning outward from `hint` in the
/// angle-sorted candidate list. Returns `(triangle, position)`.
fn locate(mesh: &crate::mesh::Mesh, sorted: &[(f64, usize)], hint: usize, p: [f64; 2]) -> Option<(usize, usize)> {
    let inside = |t: usize| {
        let [a, b, c] = mesh.vertices(t);
        let d = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((b[0] - p[0]) * (c[1] - p[1]) - (c[0] - p[0]) * (b[1] - p[1])) / d;
        let l2 = ((c[0] - p[0]) * (a[1] - p[1]) - (a[0] - p[0]) * (c[1] - p[1])) / d;
        let l3 = 1.0 - l1 - l2;
        let tol = -1e-10;
        l1 >= tol && l2 >= tol && l3 >= tol
    };
    let n = sorted.len();
    for off in 0..n {
        for pos in [hint + off, hint.wrapping_sub(off)] {
            if pos < n && inside(sorted[pos].1) {
                return Some((sorted[pos].1, pos));
            }
        }
    }
    None
}
