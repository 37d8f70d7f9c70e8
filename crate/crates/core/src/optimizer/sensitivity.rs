//! Adjoint states and topological derivatives of the objective terms.

use rayon::prelude::*;

use super::objective::{constraint_temperature_gradient, power_mean, temperature_hinge};
use super::problem::{Evaluation, Problem, Terms};
use crate::design::DesignState;
use crate::elasticity::{plane_stress_matrix, strain_matrix};
use crate::error::Result;
use crate::fem::mass_entry;
use crate::materials::{MaterialId, MaterialSet};
use crate::mqs::{ec_density_gradient, MqsModel, PeriodicField};

/// Per design element, the derivative `d^{i→j}` for every target material
/// `j` (zero at the element's own material).
#[derive(Clone, Debug, PartialEq)]
pub struct TdField {
    pub values: Vec<[f64; 4]>,
}

impl TdField {
    pub fn zeros(n: usize) -> Self {
        Self { values: vec![[0.0; 4]; n] }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn add_scaled(&mut self, other: &TdField, w: f64) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            for j in 0..4 {
                a[j] += w * b[j];
            }
        }
    }
}

/// MQS co-state per step as full nodal vectors.
pub type MqsAdjoint = Vec<Vec<f64>>;

/// Co-states of the temperature constraint.
#[derive(Clone, Debug)]
pub struct ThermalAdjoint {
    /// Heat-equation co-state per global node (zero outside the rotor body).
    pub heat: Vec<f64>,
    /// MQS co-state of the eddy-current solve.
    pub mqs: MqsAdjoint,
}

#[derive(Clone, Debug)]
pub struct Adjoints {
    /// Torque-objective co-states per operating point.
    pub torque: Vec<MqsAdjoint>,
    pub thermal: Option<ThermalAdjoint>,
    /// Elastic co-state per global node.
    pub elastic: Option<Vec<[f64; 2]>>,
}

/// Solves `Jᵀ λ = g` for a per-step load given on full nodal vectors.
fn mqs_adjoint(mqs: &MqsModel, field: &PeriodicField, load: &[Vec<f64>]) -> Result<MqsAdjoint> {
    let rhs: Vec<Vec<f64>> = load.iter().enumerate().map(|(n, g)| mqs.dof_map(n).to_free(g)).collect();
    let jac = mqs.jacobian(field, None)?;
    let lam = jac.solve_transpose(&rhs);
    Ok(lam.iter().enumerate().map(|(n, l)| mqs.dof_map(n).to_full(l)).collect())
}

impl Problem {
    /// Co-state of `J` for operating point `k`: `Jᵀλ = ∂J/∂a`.
    pub fn torque_adjoint(&self, eval: &Evaluation, k: usize) -> Result<MqsAdjoint> {
        let field = &eval.fields[k];
        let p = &self.cycle.points[k];
        let c = -p.weight * p.speed / field.snapshots.len() as f64;
        let load: Vec<Vec<f64>> = field
            .snapshots
            .iter()
            .map(|a| self.mqs.step_torque_gradient(a).into_iter().map(|g| c * g).collect())
            .collect();
        mqs_adjoint(&self.mqs, field, &load)
    }

    /// Co-states of `C_t` through the heat equation, the eddy-current loss
    /// density and the eddy-current problem.
    pub fn thermal_adjoint(&self, eval: &Evaluation) -> Result<Option<ThermalAdjoint>> {
        let Some(th) = &eval.thermal else { return Ok(None) };
        let mesh = &self.mqs.mesh;
        let design = &eval.design;
        let g = constraint_temperature_gradient(mesh, &th.field, design, self.weights.max_temperature);
        let rotor = &self.thermal.rotor;
        let local: Vec<f64> = rotor.nodes.iter().map(|&v| g[v]).collect();
        let map = self.thermal.dof_map();
        let factor = self.thermal.factor(mesh, design, &self.mqs.materials)?;
        let q_local = map.to_full(&factor.solve(&map.to_free(&local)));
        let mut heat = vec![0.0; mesh.n_nodes()];
        for (l, &v) in rotor.nodes.iter().enumerate() {
            heat[v] = q_local[l];
        }
        let eddy = &th.eddy;
        let n = eddy.snapshots.len();
        let mut load = vec![vec![0.0; mesh.n_nodes()]; n];
        for id in [MaterialId::Magnet1, MaterialId::Magnet2] {
            let elems = design.elements_of(id);
            if elems.is_empty() {
                continue;
            }
            let areas: Vec<f64> = elems.iter().map(|&t| mesh.area(t)).collect();
            // ∂C_t/∂p_e = ∫_e q
            let weights: Vec<f64> = elems
                .iter()
                .map(|&t| mesh.area(t) * mesh.triangles[t].iter().map(|&v| heat[v]).sum::<f64>() / 3.0)
                .collect();
            let inc = self.mqs.rotor_increments(eddy, &elems);
            let sigma = self.mqs.materials.get(id).sigma;
            let grad = ec_density_gradient(&areas, &inc, sigma, eddy.grid.tau, &weights);
            for (s, gs) in grad.iter().enumerate() {
                let prev = (s + n - 1) % n;
                for (k, &t) in elems.iter().enumerate() {
                    for &v in &mesh.triangles[t] {
                        load[s][v] += gs[k] / 3.0;
                        load[prev][v] -= gs[k] / 3.0;
                    }
                }
            }
        }
        let mqs = mqs_adjoint(&self.mqs, eddy, &load)?;
        Ok(Some(ThermalAdjoint { heat, mqs }))
    }

    /// Co-state of `C_VM`: `K v = ∂C_VM/∂u`.
    pub fn elastic_adjoint(&self, eval: &Evaluation) -> Result<Option<Vec<[f64; 2]>>> {
        let Some(el) = &eval.elastic else { return Ok(None) };
        let mesh = &self.mqs.mesh;
        let model = &self.elastic;
        let limit2 = self.weights.max_stress * self.weights.max_stress;
        let mut g = vec![0.0; 2 * model.rotor.n_nodes()];
        for (k, &t) in model.rotor.triangles.iter().enumerate() {
            let m = self.mqs.materials.get(eval.design.material(t));
            let s = el.field.stress[t];
            let x = crate::elasticity::von_mises_sq(s) / limit2;
            let (_, df) = power_mean(x, self.weights.exponent);
            let tr = s[0] + s[1];
            let ds = [3.0 * s[0] - tr, 3.0 * s[1] - tr, 6.0 * s[2]];
            let w = mesh.area(t) * df / limit2;
            let d = plane_stress_matrix(m.young, m.poisson);
            let b = strain_matrix(&model.elements[k]);
            let dofs = model.element_dofs(k);
            for i in 0..6 {
                let mut v = 0.0;
                for p in 0..3 {
                    let dp: f64 = (0..3).map(|q| d[q][p] * ds[q]).sum();
                    v += b[p][i] * dp;
                }
                g[dofs[i]] += w * v;
            }
        }
        let map = model.dof_map();
        let factor = model.factor(&eval.design, &self.mqs.materials)?;
        let v_local = map.to_full(&factor.solve(&map.to_free(&g)));
        let mut v = vec![[0.0; 2]; mesh.n_nodes()];
        for (l, &node) in model.rotor.nodes.iter().enumerate() {
            v[node] = [v_local[2 * l], v_local[2 * l + 1]];
        }
        Ok(Some(v))
    }

    /// All co-states needed for the terms present in `eval`.
    pub fn adjoints(&self, eval: &Evaluation) -> Result<Adjoints> {
        let torque = (0..eval.fields.len())
            .into_par_iter()
            .map(|k| self.torque_adjoint(eval, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Adjoints {
            torque,
            thermal: self.thermal_adjoint(eval)?,
            elastic: self.elastic_adjoint(eval)?,
        })
    }

    /// `−Σ_n ∫ h(b^n)·curl λ^n` per triangle: the derivative of the objective
    /// with respect to a factor multiplying the reluctivity term of each
    /// triangle.
    pub fn reluctivity_sensitivity(&self, field: &PeriodicField, adjoint: &MqsAdjoint) -> Vec<f64> {
        let mqs = &self.mqs;
        (0..mqs.mesh.n_triangles())
            .map(|t| {
                let e = &mqs.elements[t];
                let tri = mqs.mesh.triangles[t];
                let law = &mqs.materials.get(field.design.material(t)).law;
                let mut s = 0.0;
                for (a, lam) in field.snapshots.iter().zip(adjoint) {
                    let h = law.h(e.curl_of([a[tri[0]], a[tri[1]], a[tri[2]]]));
                    let c = e.curl_of([lam[tri[0]], lam[tri[1]], lam[tri[2]]]);
                    s -= e.area * (h[0] * c[0] + h[1] * c[1]);
                }
                s
            })
            .collect()
    }

    /// Derivative of the evaluated total objective with respect to the
    /// per-triangle reluctivity factors (the torque and temperature terms).
    pub fn total_reluctivity_sensitivity(&self, eval: &Evaluation, adj: &Adjoints) -> Vec<f64> {
        let mut s = vec![0.0; self.mqs.mesh.n_triangles()];
        for (f, l) in eval.fields.iter().zip(&adj.torque) {
            for (a, b) in s.iter_mut().zip(self.reluctivity_sensitivity(f, l)) {
                *a += b;
            }
        }
        if let (Some(th), Some(ta)) = (&eval.thermal, &adj.thermal) {
            if self.weights.temperature > 0.0 {
                for (a, b) in s.iter_mut().zip(self.reluctivity_sensitivity(&th.eddy, &ta.mqs)) {
                    *a += self.weights.temperature * b;
                }
            }
        }
        s
    }

    /// Topological derivative of the evaluated total objective (fidelity
    /// level A: polarization formulas with iron frozen at its local secant
    /// reluctivity).
    pub fn topological_derivative(&self, eval: &Evaluation, adj: &Adjoints) -> TdField {
        let n = eval.design.design_elements().len();
        let mut td = TdField::zeros(n);
        for (f, l) in eval.fields.iter().zip(&adj.torque) {
            td.add_scaled(&magnetic_td(&self.mqs, f, l), 1.0);
        }
        if self.weights.temperature > 0.0 {
            if let (Some(th), Some(ta)) = (&eval.thermal, &adj.thermal) {
                td.add_scaled(&magnetic_td(&self.mqs, &th.eddy, &ta.mqs), self.weights.temperature);
                td.add_scaled(&self.thermal_td(eval, ta), self.weights.temperature);
            }
        }
        if self.weights.stress > 0.0 {
            if let (Some(el), Some(v)) = (&eval.elastic, &adj.elastic) {
                td.add_scaled(&self.elastic_td(eval, &el.field, v), self.weights.stress);
            }
        }
        td
    }

    /// Conduction contrast, loss-source change and integrand change of `C_t`.
    fn thermal_td(&self, eval: &Evaluation, ta: &ThermalAdjoint) -> TdField {
        let th = eval.thermal.as_ref().expect("thermal state");
        let mesh = &self.mqs.mesh;
        let mats = &self.mqs.materials;
        let design = &eval.design;
        let eddy = &th.eddy;
        let tau = eddy.grid.tau;
        let steps = eddy.snapshots.len();
        // area-weighted mean centroid increment of each magnet per step
        let mut means = [vec![0.0; steps], vec![0.0; steps]];
        for (g, id) in [MaterialId::Magnet1, MaterialId::Magnet2].into_iter().enumerate() {
            let elems = design.elements_of(id);
            let total: f64 = elems.iter().map(|&t| mesh.area(t)).sum();
            if total > 0.0 {
                let inc = self.mqs.rotor_increments(eddy, &elems);
                for (s, d) in inc.iter().enumerate() {
                    means[g][s] = d.iter().zip(&elems).map(|(x, &t)| x * mesh.area(t)).sum::<f64>() / total;
                }
            }
        }
        let limit = self.weights.max_temperature;
        let design_elems = design.design_elements();
        let increments = self.mqs.rotor_increments(eddy, design_elems);
        let mut td = TdField::zeros(design_elems.len());
        for (k, &t) in design_elems.iter().enumerate() {
            let i = design.material(t);
            let tri = mesh.triangles[t];
            let e = &self.mqs.elements[t];
            let gw = e.gradient(tri.map(|v| th.field.temperature[v]));
            let gq = e.gradient(tri.map(|v| ta.heat[v]));
            let q_mean = tri.iter().map(|&v| ta.heat[v]).sum::<f64>() / 3.0;
            let hinge = tri.iter().map(|&v| temperature_hinge(th.field.temperature[v], limit).0).sum::<f64>() / 3.0;
            for j in MaterialId::ALL {
                if j == i {
                    continue;
                }
                let (li, lj) = (mats.get(i).lambda, mats.get(j).lambda);
                let pol = 2.0 * li / (li + lj);
                let mut d = -pol * (lj - li) * (gw[0] * gq[0] + gw[1] * gq[1]);
                let p_target = if j.is_magnet() && tau.is_finite() {
                    let g = j.index() - 1;
                    let sj = mats.get(j).sigma;
                    increments
                        .iter()
                        .enumerate()
                        .map(|(s, x)| (x[k] - means[g][s]).powi(2))
                        .sum::<f64>()
                        * sj
                        / (steps as f64 * tau * tau)
                } else {
                    0.0
                };
                d += q_mean * (p_target - th.density[t]);
                if j.is_magnet() && !i.is_magnet() {
                    d += hinge;
                } else if i.is_magnet() && !j.is_magnet() {
                    d -= hinge;
                }
                td.values[k][j.index()] = d;
            }
        }
        td
    }

    /// Stiffness and density contrast plus integrand change of `C_VM`.
    fn elastic_td(&self, eval: &Evaluation, field: &crate::elasticity::ElasticField, v: &[[f64; 2]]) -> TdField {
        let mesh = &self.mqs.mesh;
        let mats = &self.mqs.materials;
        let design = &eval.design;
        let limit2 = self.weights.max_stress * self.weights.max_stress;
        let p = self.weights.exponent;
        let w2 = self.elastic_speed * self.elastic_speed;
        let design_elems = design.design_elements();
        let mut td = TdField::zeros(design_elems.len());
        for (k, &t) in design_elems.iter().enumerate() {
            let i = design.material(t);
            let tri = mesh.triangles[t];
            let e = &self.mqs.elements[t];
            let b = strain_matrix(e);
            let ve: Vec<f64> = tri.iter().flat_map(|&n| v[n]).collect();
            let eps_v: Vec<f64> = (0..3).map(|r| (0..6).map(|c| b[r][c] * ve[c]).sum()).collect();
            let s = field.stress[t];
            let work = s[0] * eps_v[0] + s[1] * eps_v[1] + s[2] * eps_v[2];
            let c = mesh.centroid(t);
            let v_mean = [
                tri.iter().map(|&n| v[n][0]).sum::<f64>() / 3.0,
                tri.iter().map(|&n| v[n][1]).sum::<f64>() / 3.0,
            ];
            let x = crate::elasticity::von_mises_sq(s) / limit2;
            let f0 = power_mean(x, p).0;
            for j in MaterialId::ALL {
                if j == i {
                    continue;
                }
                let (mi, mj) = (mats.get(i), mats.get(j));
                let ratio = mj.young / mi.young;
                let pol = 2.0 * mi.young / (mi.young + mj.young);
                let mut d = -pol * (ratio - 1.0) * work;
                d += (mj.rho - mi.rho) * w2 * (c[0] * v_mean[0] + c[1] * v_mean[1]);
                d += power_mean(x * (ratio * pol).powi(2), p).0 - f0;
                td.values[k][j.index()] = d;
            }
        }
        td
    }

    /// Exact objective changes from flipping single design elements
    /// (fidelity level B), for the given design-element indices.
    pub fn flip_differences(&self, eval: &Evaluation, elements: &[usize], terms: Terms) -> Result<Vec<[f64; 4]>> {
        let design_elems = eval.design.design_elements().to_vec();
        elements
            .iter()
            .map(|&k| {
                let t = design_elems[k];
                let i = eval.design.material(t);
                let mut out = [0.0; 4];
                for j in MaterialId::ALL {
                    if j == i {
                        continue;
                    }
                    let d = eval.design.with(t, j)?;
                    let e = self.evaluate(&d, &eval.currents, terms, Some(eval), None)?;
                    out[j.index()] = e.total - eval.total;
                }
                Ok(out)
            })
            .collect()
    }
}

/// Polarization-formula derivative of the MQS part for one field and its
/// co-state, summed over the steps.
fn magnetic_td(mqs: &MqsModel, field: &PeriodicField, adjoint: &MqsAdjoint) -> TdField {
    let design: &DesignState = &field.design;
    let mats: &MaterialSet = &mqs.materials;
    let steps = field.snapshots.len();
    let eddy = field.with_eddies && field.grid.tau.is_finite();
    let design_elems = design.design_elements();
    let mut td = TdField::zeros(design_elems.len());
    for (k, &t) in design_elems.iter().enumerate() {
        let i = design.material(t);
        let e = &mqs.elements[t];
        let tri = mqs.mesh.triangles[t];
        for n in 0..steps {
            let a = &field.snapshots[n];
            let lam = &adjoint[n];
            let b = e.curl_of(tri.map(|v| a[v]));
            let c = e.curl_of(tri.map(|v| lam[v]));
            let mass_term = if eddy {
                let prev = &field.snapshots[(n + steps - 1) % steps];
                let mut m = 0.0;
                for r in 0..3 {
                    for s in 0..3 {
                        m += mass_entry(e.area, r, s) * (a[tri[s]] - prev[tri[s]]) * lam[tri[r]];
                    }
                }
                m / (e.area * field.grid.tau)
            } else {
                0.0
            };
            let li = &mats.get(i).law;
            let (nu_i, mi) = (li.nu(b), li.magnetization());
            for j in MaterialId::ALL {
                if j == i {
                    continue;
                }
                let lj = &mats.get(j).law;
                let (nu_j, mj) = (lj.nu(b), lj.magnetization());
                let pol = 2.0 * nu_i / (nu_i + nu_j);
                let dh = [(nu_j - nu_i) * b[0] - (mj[0] - mi[0]), (nu_j - nu_i) * b[1] - (mj[1] - mi[1])];
                let mut d = -pol * (dh[0] * c[0] + dh[1] * c[1]);
                d -= (mats.get(j).sigma - mats.get(i).sigma) * mass_term;
                td.values[k][j.index()] += d;
            }
        }
    }
    td
}
