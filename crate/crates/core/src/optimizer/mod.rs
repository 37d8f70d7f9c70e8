//! Multi-material vector level-set optimization driven by topological
//! derivatives, with temperature and stress penalties.

mod levelset;
mod objective;
mod problem;
mod sensitivity;
mod simplex;

use serde::{Deserialize, Serialize};

pub use levelset::{rms_norm, LevelSetField};
pub use objective::{
    constraint_temperature, constraint_temperature_gradient, constraint_vonmises, objective_torque, power_mean,
    temperature_hinge, total_objective, ConstraintWeights,
};
pub use problem::{ElasticState, Evaluation, Problem, Terms, ThermalState};
pub use sensitivity::{Adjoints, MqsAdjoint, TdField, ThermalAdjoint};
pub use simplex::{material_at, SimplexGeometry};

use crate::design::DesignState;
use crate::drivecycle::evaluate_cycle;
use crate::error::{Result, ResultExt};
use crate::mqs::PeriodicField;
use crate::thermal::max_magnet_temperature;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerOptions {
    pub max_iterations: usize,
    /// First trial step of the line search.
    pub max_step: f64,
    /// The line search gives up below this step.
    pub min_step: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iterations: 50,
            max_step: 0.5,
            min_step: 1.0 / 1024.0,
        }
    }
}

/// State of one iteration, evaluated before its update step.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Torque objective `J`, W.
    pub objective: f64,
    /// Active total objective at the iteration's currents.
    pub total: f64,
    /// Active total objective of the accepted update at the same currents.
    pub accepted_total: Option<f64>,
    pub temperature_constraint: f64,
    pub stress_constraint: f64,
    /// `C_VM − |D ∪ D_RI|`.
    pub stress_excess: f64,
    pub efficiency: f64,
    /// Maximum rotor temperature at the thermal operating point, °C.
    pub max_temperature: f64,
    pub max_magnet_temperature: f64,
    /// Maximum `√s_VM` over the rotor, Pa.
    pub max_stress: f64,
    /// Accepted step, `None` when no update was made.
    pub step: Option<f64>,
    /// Design elements whose material changed in the accepted update.
    pub changed: usize,
    /// Frozen `(I_k, β_k)` of the iteration.
    pub currents: Vec<(f64, f64)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Termination {
    MaxIterations,
    /// No step down to the minimum decreased the objective.
    StepUnderflow,
    /// The mapped topological derivative vanished.
    ZeroDerivative,
}

#[derive(Clone, Debug)]
pub struct OptimizationResult {
    pub history: Vec<IterationRecord>,
    /// Design induced by the initial level set.
    pub initial_design: DesignState,
    pub design: DesignState,
    pub levelset: LevelSetField,
    pub termination: Termination,
}

/// Runs the loop: MTPA currents, primal and adjoint solves, topological
/// derivative, line search on the level-set update. `observer` sees every
/// record with the level set and the evaluation it was computed from.
pub fn run_optimization(
    problem: &Problem,
    initial: &DesignState,
    opts: &OptimizerOptions,
    observer: &mut dyn FnMut(&IterationRecord, &LevelSetField, &Evaluation),
) -> Result<OptimizationResult> {
    let mesh = &problem.mqs.mesh;
    let simplex = SimplexGeometry::materials();
    let mut ls = LevelSetField::from_design(mesh, initial, &simplex);
    let mut design = ls.design(mesh, &simplex)?;
    let initial_design = design.clone();
    let mut history = Vec::new();
    let mut prev_eval: Option<Evaluation> = None;
    let mut prev_fields: Option<Vec<PeriodicField>> = None;
    let active = problem.active_terms();
    let rotor_measure = problem.elastic.rotor.measure(mesh);
    let termination = 'outer: loop {
        let m = history.len();
        let (record, eval) = (|| -> Result<(IterationRecord, Evaluation)> {
            let table = problem.mtpa_table(&design)?;
            let currents = problem.currents(&table)?;
            let report = evaluate_cycle(
                &problem.mqs,
                &design,
                &problem.cycle,
                &table,
                problem.resistance,
                &problem.excitation,
                prev_fields.as_deref(),
            )?;
            let eddy = report.fields[problem.cycle.thermal_op].clone();
            let eval = problem.evaluate(&design, &currents, Terms::ALL, prev_eval.as_ref(), Some(eddy))?;
            prev_fields = Some(report.fields);
            let th = eval.thermal.as_ref().expect("all terms evaluated");
            let el = eval.elastic.as_ref().expect("all terms evaluated");
            let svm = el.field.von_mises_sq();
            let max_stress = problem
                .elastic
                .rotor
                .triangles
                .iter()
                .map(|&t| svm[t])
                .fold(0.0, f64::max)
                .sqrt();
            let record = IterationRecord {
                iteration: m,
                objective: eval.objective,
                total: eval.total,
                accepted_total: None,
                temperature_constraint: th.constraint,
                stress_constraint: el.constraint,
                stress_excess: el.constraint - rotor_measure,
                efficiency: report.efficiency,
                max_temperature: th.field.max(),
                max_magnet_temperature: max_magnet_temperature(mesh, &th.field, &design),
                max_stress,
                step: None,
                changed: 0,
                currents: currents.clone(),
            };
            Ok((record, eval))
        })()
        .with_context(|| format!("iteration {m}"))?;
        let mut record = record;
        log::info!(
            "iter {m}: J {:.6e} total {:.6e} C_t {:.3e} C_VM {:.6e} E {:.5} max T {:.2}",
            record.objective,
            record.total,
            record.temperature_constraint,
            record.stress_constraint,
            record.efficiency,
            record.max_temperature
        );
        if m >= opts.max_iterations {
            observer(&record, &ls, &eval);
            history.push(record);
            break Termination::MaxIterations;
        }
        let adj = problem.adjoints(&eval).with_context(|| format!("iteration {m} adjoints"))?;
        let td = problem.topological_derivative(&eval, &adj);
        let labels = design.design_labels();
        let mut mapped = ls.map_td(mesh, &td, &labels, &simplex);
        let norm = rms_norm(&mapped, ls.dim);
        if !(norm > 0.0 && norm.is_finite()) {
            observer(&record, &ls, &eval);
            history.push(record);
            break Termination::ZeroDerivative;
        }
        mapped.iter_mut().for_each(|g| *g /= norm);
        let mut s = opts.max_step;
        loop {
            if s < opts.min_step {
                observer(&record, &ls, &eval);
                history.push(record);
                break 'outer Termination::StepUnderflow;
            }
            let mut trial = ls.update(&mapped, s);
            trial.renormalize();
            let d = trial.design(mesh, &simplex)?;
            if d != design {
                let e = problem
                    .evaluate(&d, &eval.currents, active, Some(&eval), None)
                    .with_context(|| format!("iteration {m} line search"))?;
                if e.total < eval.total {
                    record.accepted_total = Some(e.total);
                    record.step = Some(s);
                    record.changed = d
                        .design_elements()
                        .iter()
                        .filter(|&&t| d.material(t) != design.material(t))
                        .count();
                    observer(&record, &ls, &eval);
                    history.push(record);
                    ls = trial;
                    design = d;
                    break;
                }
            }
            s *= 0.5;
        }
        prev_eval = Some(eval);
    };
    Ok(OptimizationResult {
        history,
        initial_design,
        design,
        levelset: ls,
        termination,
    })
}

/// Per-iteration log as CSV.
pub fn write_history<W: std::io::Write>(history: &[IterationRecord], mut w: W) -> Result<()> {
    writeln!(
        w,
        "iter,J,J_total,J_total_accepted,C_t,C_VM,C_VM_excess,E,max_theta,max_magnet_theta,max_sqrt_sVM,s,changed"
    )?;
    let opt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v:.9e}"));
    for r in history {
        writeln!(
            w,
            "{},{:.9e},{:.9e},{},{:.9e},{:.9e},{:.9e},{:.9},{:.6},{:.6},{:.9e},{},{}",
            r.iteration,
            r.objective,
            r.total,
            opt(r.accepted_total),
            r.temperature_constraint,
            r.stress_constraint,
            r.stress_excess,
            r.efficiency,
            r.max_temperature,
            r.max_magnet_temperature,
            r.max_stress,
            opt(r.step),
            r.changed
        )?;
    }
    Ok(())
}
