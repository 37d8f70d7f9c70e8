//! Assembly and damped Newton solves of the static and the time-periodic
//! eddy-current problem.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CurrentExcitation, MqsModel, PeriodicField, SolveRequest, TimeGrid};
use crate::design::DesignState;
use crate::error::{Error, Result};
use crate::fem::mass_entry;
use crate::linalg::{norm, Factor, PatternCache, SystemBuilder};
use crate::materials::MagneticLaw;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewtonOptions {
    /// Stop once `‖R(x)‖ ≤ rel_tol·‖R(0)‖`.
    pub rel_tol: f64,
    pub max_iterations: usize,
    /// Smallest line-search step before a step is accepted regardless.
    pub min_damping: f64,
    /// Period sweeps of the fixed-point variant.
    pub max_sweeps: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-8,
            max_iterations: 50,
            min_damping: 1.0 / 1024.0,
            max_sweeps: 400,
        }
    }
}

/// Residual norms of the Newton iterates, starting with the initial guess.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NewtonReport {
    pub iterations: usize,
    pub residuals: Vec<f64>,
    pub reference: f64,
}

/// Factorized Jacobian at a converged field, for adjoint solves.
pub enum JacobianFactor {
    /// One block per step (no eddy coupling).
    Static(Vec<Factor>),
    /// Monolithic block system over all steps.
    Periodic(Factor),
}

impl JacobianFactor {
    /// Solves `Jᵀ p = rhs` with per-step blocks.
    pub fn solve_transpose(&self, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        match self {
            JacobianFactor::Static(fs) => fs.iter().zip(rhs).map(|(f, r)| f.solve_transpose(r)).collect(),
            JacobianFactor::Periodic(f) => {
                let n = rhs.first().map_or(0, |r| r.len());
                let flat: Vec<f64> = rhs.iter().flatten().copied().collect();
                let x = f.solve_transpose(&flat);
                x.chunks(n).map(|c| c.to_vec()).collect()
            }
        }
    }
}

/// Damped Newton iteration on a system whose residual lives in
/// `SystemBuilder::rhs` and Jacobian in its triplets.
fn newton(
    n: usize,
    x0: Option<Vec<f64>>,
    opts: &NewtonOptions,
    spd: bool,
    cache: &PatternCache,
    eval: &(dyn Fn(&[f64], bool) -> SystemBuilder + Sync),
) -> Result<(Vec<f64>, NewtonReport)> {
    let zero = vec![0.0; n];
    let reference = norm(&eval(&zero, false).rhs);
    let mut report = NewtonReport {
        reference,
        ..Default::default()
    };
    if reference == 0.0 {
        report.residuals.push(0.0);
        return Ok((zero, report));
    }
    let tol = opts.rel_tol * reference;
    let mut x = x0.unwrap_or(zero);
    let mut sys = eval(&x, true);
    let mut rn = norm(&sys.rhs);
    report.residuals.push(rn);
    for it in 0..opts.max_iterations {
        if rn <= tol {
            report.iterations = it;
            return Ok((x, report));
        }
        let pattern = cache.get(n, &sys)?;
        let factor = if spd { pattern.cholesky(&sys.vals)? } else { pattern.lu(&sys.vals)? };
        let dx = factor.solve(&sys.rhs);
        let mut alpha = 1.0;
        let (xt, rt) = loop {
            let xt: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a - alpha * d).collect();
            let rt = norm(&eval(&xt, false).rhs);
            if rt < (1.0 - 1e-4 * alpha) * rn || alpha <= opts.min_damping {
                break (xt, rt);
            }
            alpha *= 0.5;
        };
        if !rt.is_finite() {
            return Err(Error::NewtonDivergence {
                iterations: it + 1,
                residual: rt,
            });
        }
        x = xt;
        sys = eval(&x, true);
        rn = norm(&sys.rhs);
        report.residuals.push(rn);
    }
    if rn <= tol {
        report.iterations = opts.max_iterations;
        return Ok((x, report));
    }
    Err(Error::NewtonDivergence {
        iterations: opts.max_iterations,
        residual: rn / reference,
    })
}

impl MqsModel {
    /// Element vector `∫ h(b)·curl φ_i − ∫ j φ_i` and optionally the tangent
    /// matrix (row-major), both in local node order.
    pub(crate) fn element_system(
        &self,
        t: usize,
        law: &MagneticLaw,
        scale: f64,
        a: &[f64],
        j: f64,
        ke: Option<&mut [f64; 9]>,
    ) -> [f64; 3] {
        let e = &self.elements[t];
        let tri = self.mesh.triangles[t];
        let b = e.curl_of([a[tri[0]], a[tri[1]], a[tri[2]]]);
        let h = law.h(b);
        let c = [e.curl(0), e.curl(1), e.curl(2)];
        let mut fe = [0.0; 3];
        for i in 0..3 {
            fe[i] = e.area * (scale * (h[0] * c[i][0] + h[1] * c[i][1]) - j / 3.0);
        }
        if let Some(ke) = ke {
            let tg = law.tangent(b);
            for i in 0..3 {
                let tc = [tg[0][0] * c[i][0] + tg[0][1] * c[i][1], tg[1][0] * c[i][0] + tg[1][1] * c[i][1]];
                for k in 0..3 {
                    ke[i * 3 + k] = scale * e.area * (tc[0] * c[k][0] + tc[1] * c[k][1]);
                }
            }
        }
        fe
    }

    /// Static residual (and Jacobian) of step `step` at full potential `a`.
    pub(crate) fn assemble_static(
        &self,
        design: &DesignState,
        step: usize,
        a: &[f64],
        j: &[f64],
        scale: Option<&[f64]>,
        matrix: bool,
    ) -> SystemBuilder {
        let map = &self.maps[step];
        let mut sb = SystemBuilder::new(self.n_free);
        let mut ke = [0.0; 9];
        for t in 0..self.mesh.n_triangles() {
            let law = &self.materials.get(design.material(t)).law;
            let s = scale.map_or(1.0, |s| s[t]);
            let fe = self.element_system(t, law, s, a, j[t], matrix.then_some(&mut ke));
            let tri = self.mesh.triangles[t];
            if matrix {
                sb.add_element(map, &tri, &ke, &fe);
            } else {
                sb.add_element(map, &tri, &[], &fe);
            }
        }
        sb
    }

    /// `Σ σ_e/τ · M_e` over the design domain in free unknowns. All design
    /// triangles contribute an entry so the pattern is design independent.
    pub(crate) fn eddy_matrix(&self, design: &DesignState, tau: f64) -> SystemBuilder {
        let map = &self.maps[0];
        let mut sb = SystemBuilder::new(self.n_free);
        let inv_tau = if tau.is_finite() { 1.0 / tau } else { 0.0 };
        for &t in design.design_elements() {
            let sigma = self.materials.get(design.material(t)).sigma;
            let area = self.elements[t].area;
            let mut ke = [0.0; 9];
            for i in 0..3 {
                for k in 0..3 {
                    ke[i * 3 + k] = sigma * inv_tau * mass_entry(area, i, k);
                }
            }
            sb.add_element(map, &self.mesh.triangles[t], &ke, &[]);
        }
        sb
    }

    fn currents(&self, exc: &CurrentExcitation, grid: &TimeGrid) -> Vec<Vec<f64>> {
        (0..grid.n_steps).map(|n| self.current_density(exc, n, grid)).collect()
    }

    /// Solves the `N`-step problem for one design and excitation.
    pub fn solve(
        &self,
        design: &DesignState,
        exc: &CurrentExcitation,
        grid: &TimeGrid,
        req: SolveRequest<'_>,
    ) -> Result<PeriodicField> {
        self.check_grid(grid)?;
        let currents = self.currents(exc, grid);
        let eddy = req.with_eddies && grid.tau.is_finite() && self.has_conductors(design);
        let initial: Option<Vec<Vec<f64>>> = req.initial.map(|f| f.free.clone());
        let (free, report) = if !eddy {
            self.solve_static_steps(design, &currents, req.nu_scale, initial)?
        } else if req.fixed_point {
            self.solve_fixed_point(design, &currents, grid, req.nu_scale, initial)?
        } else {
            self.solve_monolithic(design, &currents, grid, req.nu_scale, initial)?
        };
        let snapshots: Vec<Vec<f64>> = free.iter().enumerate().map(|(n, x)| self.maps[n].to_full(x)).collect();
        let multipliers = snapshots.iter().map(|a| self.interface_multipliers(a)).collect();
        Ok(PeriodicField {
            snapshots,
            free,
            multipliers,
            excitation: *exc,
            grid: grid.clone(),
            with_eddies: req.with_eddies,
            design: design.clone(),
            report,
        })
    }

    fn has_conductors(&self, design: &DesignState) -> bool {
        design
            .design_elements()
            .iter()
            .any(|&t| self.materials.get(design.material(t)).sigma > 0.0)
    }

    fn solve_static_steps(
        &self,
        design: &DesignState,
        currents: &[Vec<f64>],
        scale: Option<&[f64]>,
        initial: Option<Vec<Vec<f64>>>,
    ) -> Result<(Vec<Vec<f64>>, NewtonReport)> {
        let results: Vec<Result<(Vec<f64>, NewtonReport)>> = (0..currents.len())
            .into_par_iter()
            .map(|n| {
                let eval = |x: &[f64], m: bool| {
                    let a = self.maps[n].to_full(x);
                    self.assemble_static(design, n, &a, &currents[n], scale, m)
                };
                let x0 = initial.as_ref().map(|v| v[n].clone());
                newton(self.n_free, x0, &self.newton, true, &self.static_patterns[n], &eval)
            })
            .collect();
        let mut free = Vec::with_capacity(currents.len());
        let mut report = NewtonReport::default();
        for r in results {
            let (x, rep) = r?;
            free.push(x);
            report.iterations = report.iterations.max(rep.iterations);
            report.reference += rep.reference;
            if report.residuals.len() < rep.residuals.len() {
                report.residuals.resize(rep.residuals.len(), 0.0);
            }
            for (k, r) in rep.residuals.iter().enumerate() {
                report.residuals[k] += r;
            }
        }
        Ok((free, report))
    }

    fn periodic_system(
        &self,
        design: &DesignState,
        currents: &[Vec<f64>],
        eddy: &SystemBuilder,
        scale: Option<&[f64]>,
        x: &[f64],
        matrix: bool,
    ) -> SystemBuilder {
        let nf = self.n_free;
        let steps = currents.len();
        let blocks: Vec<SystemBuilder> = (0..steps)
            .into_par_iter()
            .map(|n| {
                let a = self.maps[n].to_full(&x[n * nf..(n + 1) * nf]);
                self.assemble_static(design, n, &a, &currents[n], scale, matrix)
            })
            .collect();
        let mut sys = SystemBuilder::new(nf * steps);
        for (n, b) in blocks.iter().enumerate() {
            let prev = (n + steps - 1) % steps;
            sys.rhs[n * nf..(n + 1) * nf].copy_from_slice(&b.rhs);
            for ((&r, &c), &v) in eddy.rows.iter().zip(&eddy.cols).zip(&eddy.vals) {
                sys.rhs[n * nf + r] += v * (x[n * nf + c] - x[prev * nf + c]);
            }
            if matrix {
                sys.append_shifted(b, n * nf, n * nf, 1.0);
                sys.append_shifted(eddy, n * nf, n * nf, 1.0);
                sys.append_shifted(eddy, n * nf, prev * nf, -1.0);
            }
        }
        sys
    }

    fn solve_monolithic(
        &self,
        design: &DesignState,
        currents: &[Vec<f64>],
        grid: &TimeGrid,
        scale: Option<&[f64]>,
        initial: Option<Vec<Vec<f64>>>,
    ) -> Result<(Vec<Vec<f64>>, NewtonReport)> {
        let eddy = self.eddy_matrix(design, grid.tau);
        let nf = self.n_free;
        let eval = |x: &[f64], m: bool| self.periodic_system(design, currents, &eddy, scale, x, m);
        let x0 = initial.map(|v| v.concat());
        let (x, report) = newton(nf * currents.len(), x0, &self.newton, false, &self.periodic_pattern, &eval)?;
        Ok((x.chunks(nf).map(|c| c.to_vec()).collect(), report))
    }

    /// Implicit Euler sweeps over the period until the state at the end of a
    /// sweep repeats.
    fn solve_fixed_point(
        &self,
        design: &DesignState,
        currents: &[Vec<f64>],
        grid: &TimeGrid,
        scale: Option<&[f64]>,
        initial: Option<Vec<Vec<f64>>>,
    ) -> Result<(Vec<Vec<f64>>, NewtonReport)> {
        let eddy = self.eddy_matrix(design, grid.tau);
        let steps = currents.len();
        let nf = self.n_free;
        let mut states = initial.unwrap_or_else(|| vec![vec![0.0; nf]; steps]);
        let mut report = NewtonReport::default();
        let caches: Vec<PatternCache> = (0..steps).map(|_| PatternCache::new()).collect();
        for sweep in 0..self.newton.max_sweeps {
            let start = states[steps - 1].clone();
            let mut change = 0.0;
            let mut scale_ref = 0.0;
            for n in 0..steps {
                let prev = if n == 0 { start.clone() } else { states[n - 1].clone() };
                let eval = |x: &[f64], m: bool| {
                    let a = self.maps[n].to_full(x);
                    let mut sb = self.assemble_static(design, n, &a, &currents[n], scale, m);
                    for ((&r, &c), &v) in eddy.rows.iter().zip(&eddy.cols).zip(&eddy.vals) {
                        sb.rhs[r] += v * (x[c] - prev[c]);
                    }
                    if m {
                        sb.append_shifted(&eddy, 0, 0, 1.0);
                    }
                    sb
                };
                let (x, rep) = newton(nf, Some(states[n].clone()), &self.newton, true, &caches[n], &eval)?;
                report.iterations += rep.iterations;
                let d: f64 = x.iter().zip(&states[n]).map(|(a, b)| (a - b).powi(2)).sum();
                change += d;
                scale_ref += x.iter().map(|v| v * v).sum::<f64>();
                states[n] = x;
            }
            let rel = (change / scale_ref.max(f64::MIN_POSITIVE)).sqrt();
            report.residuals.push(rel);
            if rel <= self.newton.rel_tol {
                log::debug!("fixed point converged after {} sweeps", sweep + 1);
                return Ok((states, report));
            }
        }
        Err(Error::NewtonDivergence {
            iterations: self.newton.max_sweeps,
            residual: *report.residuals.last().unwrap_or(&f64::NAN),
        })
    }

    /// Factorized Jacobian at `field`, matching the problem it solved.
    pub fn jacobian(&self, field: &PeriodicField, scale: Option<&[f64]>) -> Result<JacobianFactor> {
        let currents = self.currents(&field.excitation, &field.grid);
        let eddy = field.with_eddies && field.grid.tau.is_finite() && self.has_conductors(&field.design);
        if !eddy {
            let fs: Vec<Result<Factor>> = (0..currents.len())
                .into_par_iter()
                .map(|n| {
                    let sb = self.assemble_static(&field.design, n, &field.snapshots[n], &currents[n], scale, true);
                    let p = self.static_patterns[n].get(self.n_free, &sb)?;
                    p.cholesky(&sb.vals)
                })
                .collect();
            return Ok(JacobianFactor::Static(fs.into_iter().collect::<Result<_>>()?));
        }
        let em = self.eddy_matrix(&field.design, field.grid.tau);
        let x = field.free.concat();
        let sys = self.periodic_system(&field.design, &currents, &em, scale, &x, true);
        let p = self.periodic_pattern.get(x.len(), &sys)?;
        Ok(JacobianFactor::Periodic(p.lu(&sys.vals)?))
    }

    /// Residual of `field` in free unknowns per step (for verification).
    pub fn residual(&self, field: &PeriodicField, scale: Option<&[f64]>) -> Vec<Vec<f64>> {
        let currents = self.currents(&field.excitation, &field.grid);
        let eddy = field.with_eddies && field.grid.tau.is_finite() && self.has_conductors(&field.design);
        if !eddy {
            return (0..currents.len())
                .map(|n| self.assemble_static(&field.design, n, &field.snapshots[n], &currents[n], scale, false).rhs)
                .collect();
        }
        let em = self.eddy_matrix(&field.design, field.grid.tau);
        let sys = self.periodic_system(&field.design, &currents, &em, scale, &field.free.concat(), false);
        sys.rhs.chunks(self.n_free).map(|c| c.to_vec()).collect()
    }
}
