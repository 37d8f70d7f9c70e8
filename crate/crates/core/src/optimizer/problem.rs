use rayon::prelude::*;

use super::objective::{constraint_temperature, constraint_vonmises, objective_torque, total_objective, ConstraintWeights};
use crate::design::DesignState;
use crate::drivecycle::{DriveCycle, MtpaOptions, MtpaTable};
use crate::elasticity::{ElasticField, ElasticModel};
use crate::error::{Error, Result, ResultExt};
use crate::mqs::{CurrentExcitation, MqsModel, PeriodicField, SolveRequest};
use crate::thermal::{ThermalField, ThermalModel, ThermalParams};

/// Models and data shared by all evaluations of one optimization run.
#[derive(Debug)]
pub struct Problem {
    pub mqs: MqsModel,
    pub thermal: ThermalModel,
    pub elastic: ElasticModel,
    pub cycle: DriveCycle,
    pub weights: ConstraintWeights,
    /// Stator resistance `R_S`, Ω.
    pub resistance: f64,
    /// Speed of the stress constraint, rad/s.
    pub elastic_speed: f64,
    /// Winding data; amplitude and angle are overwritten per operating point.
    pub excitation: CurrentExcitation,
    pub mtpa: MtpaOptions,
}

/// Eddy-current solve at the thermal operating point and the resulting
/// rotor temperature.
#[derive(Clone, Debug)]
pub struct ThermalState {
    pub eddy: PeriodicField,
    /// Eddy-current loss density per triangle, W/m³.
    pub density: Vec<f64>,
    pub field: ThermalField,
    pub constraint: f64,
}

#[derive(Clone, Debug)]
pub struct ElasticState {
    pub field: ElasticField,
    pub constraint: f64,
}

/// Objective terms of one design at frozen currents.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub design: DesignState,
    /// `(I_k, β_k)` per operating point.
    pub currents: Vec<(f64, f64)>,
    /// Static (`σ = 0`) solve per operating point.
    pub fields: Vec<PeriodicField>,
    pub torques: Vec<f64>,
    /// Torque objective `J`, W.
    pub objective: f64,
    pub thermal: Option<ThermalState>,
    pub elastic: Option<ElasticState>,
    /// `J + w_t C_t + w_VM C_VM` over the evaluated terms.
    pub total: f64,
}

impl Evaluation {
    pub fn temperature_constraint(&self) -> Option<f64> {
        self.thermal.as_ref().map(|t| t.constraint)
    }

    pub fn stress_constraint(&self) -> Option<f64> {
        self.elastic.as_ref().map(|e| e.constraint)
    }
}

/// Which constraint terms an evaluation includes.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Terms {
    pub temperature: bool,
    pub stress: bool,
}

impl Terms {
    pub const ALL: Terms = Terms {
        temperature: true,
        stress: true,
    };
}

impl Problem {
    pub fn new(
        mqs: MqsModel,
        thermal: ThermalParams,
        cycle: DriveCycle,
        weights: ConstraintWeights,
        resistance: f64,
        excitation: CurrentExcitation,
        mtpa: MtpaOptions,
    ) -> Result<Self> {
        weights.validate()?;
        if !(resistance >= 0.0) {
            return Err(Error::InvalidInput(format!("stator resistance {resistance} must be non-negative")));
        }
        let thermal = ThermalModel::new(&mqs.mesh, thermal)?;
        let elastic = ElasticModel::new(&mqs.mesh)?;
        Ok(Self {
            elastic_speed: cycle.peak_speed,
            mqs,
            thermal,
            elastic,
            cycle,
            weights,
            resistance,
            excitation,
            mtpa,
        })
    }

    /// The terms that enter the total objective.
    pub fn active_terms(&self) -> Terms {
        Terms {
            temperature: self.weights.temperature > 0.0,
            stress: self.weights.stress > 0.0,
        }
    }

    pub fn mtpa_table(&self, design: &DesignState) -> Result<MtpaTable> {
        MtpaTable::build_for(&self.mqs, design, &self.mtpa, &self.excitation)
    }

    /// MTPA currents of every operating point.
    pub fn currents(&self, table: &MtpaTable) -> Result<Vec<(f64, f64)>> {
        self.cycle
            .points
            .iter()
            .enumerate()
            .map(|(k, p)| table.current_for_torque(p.torque).with_context(|| format!("operating point {k}")))
            .collect()
    }

    fn excitation_at(&self, current: (f64, f64)) -> CurrentExcitation {
        self.excitation.with_amplitude(current.0).with_angle(current.1)
    }

    /// Static solves at every operating point.
    pub fn static_fields(
        &self,
        design: &DesignState,
        currents: &[(f64, f64)],
        scale: Option<&[f64]>,
        warm: Option<&[PeriodicField]>,
    ) -> Result<Vec<PeriodicField>> {
        let grid = self.mqs.time_grid(0.0)?;
        currents
            .par_iter()
            .enumerate()
            .map(|(k, &c)| {
                let req = SolveRequest {
                    nu_scale: scale,
                    initial: warm.and_then(|w| w.get(k)),
                    ..Default::default()
                };
                self.mqs
                    .solve(design, &self.excitation_at(c), &grid, req)
                    .with_context(|| format!("operating point {k}"))
            })
            .collect()
    }

    /// Eddy-current solve at the thermal operating point.
    pub fn thermal_eddy_field(
        &self,
        design: &DesignState,
        currents: &[(f64, f64)],
        scale: Option<&[f64]>,
        warm: Option<&PeriodicField>,
    ) -> Result<PeriodicField> {
        let k = self.cycle.thermal_op;
        let grid = self.mqs.time_grid(self.cycle.points[k].speed)?;
        let req = SolveRequest {
            with_eddies: true,
            nu_scale: scale,
            initial: warm,
            ..Default::default()
        };
        self.mqs
            .solve(design, &self.excitation_at(currents[k]), &grid, req)
            .with_context(|| format!("thermal operating point {k}"))
    }

    pub fn thermal_state(&self, design: &DesignState, eddy: PeriodicField) -> Result<ThermalState> {
        let mesh = &self.mqs.mesh;
        let density = self.mqs.ec_loss_density(&eddy);
        let field = self.thermal.solve(mesh, design, &self.mqs.materials, &density)?;
        let constraint = constraint_temperature(mesh, &field, design, self.weights.max_temperature);
        Ok(ThermalState {
            eddy,
            density,
            field,
            constraint,
        })
    }

    pub fn elastic_state(&self, design: &DesignState) -> Result<ElasticState> {
        let mesh = &self.mqs.mesh;
        let field = self.elastic.solve(mesh, design, &self.mqs.materials, self.elastic_speed)?;
        let constraint = constraint_vonmises(
            mesh,
            &self.elastic.rotor,
            &field,
            self.weights.max_stress,
            self.weights.exponent,
        );
        Ok(ElasticState { field, constraint })
    }

    /// Evaluates the requested terms at frozen currents. `eddy` may carry an
    /// already solved field at the thermal operating point.
    pub fn evaluate(
        &self,
        design: &DesignState,
        currents: &[(f64, f64)],
        terms: Terms,
        warm: Option<&Evaluation>,
        eddy: Option<PeriodicField>,
    ) -> Result<Evaluation> {
        self.evaluate_scaled(design, currents, terms, None, warm, eddy)
    }

    /// [`Problem::evaluate`] with per-triangle reluctivity factors.
    pub fn evaluate_scaled(
        &self,
        design: &DesignState,
        currents: &[(f64, f64)],
        terms: Terms,
        scale: Option<&[f64]>,
        warm: Option<&Evaluation>,
        eddy: Option<PeriodicField>,
    ) -> Result<Evaluation> {
        if currents.len() != self.cycle.points.len() {
            return Err(Error::InvalidInput("one current per operating point required".into()));
        }
        let fields = self.static_fields(design, currents, scale, warm.map(|w| w.fields.as_slice()))?;
        let torques: Vec<f64> = fields.iter().map(|f| self.mqs.average_torque(f)).collect();
        let objective = objective_torque(&self.cycle.points, &torques);
        let thermal = if terms.temperature {
            let eddy = match eddy {
                Some(f) => f,
                None => {
                    let w = warm.and_then(|w| w.thermal.as_ref()).map(|t| &t.eddy);
                    self.thermal_eddy_field(design, currents, scale, w)?
                }
            };
            Some(self.thermal_state(design, eddy)?)
        } else {
            None
        };
        let elastic = if terms.stress { Some(self.elastic_state(design)?) } else { None };
        let total = total_objective(
            objective,
            thermal.as_ref().map_or(0.0, |t| t.constraint),
            elastic.as_ref().map_or(0.0, |e| e.constraint),
            &self.weights,
        );
        Ok(Evaluation {
            design: design.clone(),
            currents: currents.to_vec(),
            fields,
            torques,
            objective,
            thermal,
            elastic,
            total,
        })
    }
}
