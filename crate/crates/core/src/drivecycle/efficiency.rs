//! Drive-cycle efficiency from per-operating-point losses.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DriveCycle, MtpaTable};
use crate::design::DesignState;
use crate::error::{Error, Result, ResultExt};
use crate::mqs::{joule_losses, CurrentExcitation, MqsModel, PeriodicField, SolveRequest};

/// Powers of one operating point, W.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingLosses {
    /// Mechanical speed, rad/s.
    pub speed: f64,
    pub torque: f64,
    pub weight: f64,
    pub current: f64,
    pub angle: f64,
    pub mechanical: f64,
    pub joule: f64,
    pub eddy: f64,
}

/// `Σ t_k P^m_k / Σ t_k (P^m_k + P^J_k + P^EC_k)`.
pub fn cycle_efficiency(ops: &[OperatingLosses]) -> f64 {
    let out: f64 = ops.iter().map(|o| o.weight * o.mechanical).sum();
    let input: f64 = ops.iter().map(|o| o.weight * (o.mechanical + o.joule + o.eddy)).sum();
    if input == 0.0 {
        return 1.0;
    }
    out / input
}

#[derive(Clone, Debug)]
pub struct EfficiencyReport {
    pub ops: Vec<OperatingLosses>,
    pub efficiency: f64,
    /// Average torque of each eddy-current solve, N·m.
    pub eddy_torques: Vec<f64>,
    /// The eddy-current solve of each operating point.
    pub fields: Vec<PeriodicField>,
}

impl EfficiencyReport {
    /// Per-OP CSV followed by a line with the aggregate efficiency.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(["omega_rad_s", "torque_Nm", "weight", "current_A", "angle_rad", "P_mech_W", "P_joule_W", "P_eddy_W"])
            .map_err(io)?;
        for o in &self.ops {
            w.write_record(
                [o.speed, o.torque, o.weight, o.current, o.angle, o.mechanical, o.joule, o.eddy].map(|x| format!("{x:.9e}")),
            )
            .map_err(io)?;
        }
        let mut inner = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        writeln!(inner, "# efficiency,{:.9}", self.efficiency)?;
        Ok(())
    }
}

/// Solves every operating point of `cycle` with eddy currents at the MTPA
/// current and collects the losses.
pub fn evaluate_cycle(
    model: &MqsModel,
    design: &DesignState,
    cycle: &DriveCycle,
    table: &MtpaTable,
    resistance: f64,
    template: &CurrentExcitation,
    initial: Option<&[PeriodicField]>,
) -> Result<EfficiencyReport> {
    if !(resistance >= 0.0) {
        return Err(Error::InvalidInput(format!("stator resistance {resistance} must be non-negative")));
    }
    let solved: Vec<(OperatingLosses, f64, PeriodicField)> = cycle
        .points
        .par_iter()
        .enumerate()
        .map(|(k, op)| -> Result<_> {
            let (current, angle) = table.current_for_torque(op.torque).with_context(|| format!("operating point {k}"))?;
            let grid = model.time_grid(op.speed)?;
            let exc = template.with_amplitude(current).with_angle(angle);
            let req = SolveRequest {
                with_eddies: true,
                initial: initial.and_then(|f| f.get(k)),
                ..Default::default()
            };
            let field = model
                .solve(design, &exc, &grid, req)
                .with_context(|| format!("operating point {k}"))?;
            let eddy = model.ec_losses(&model.ec_loss_density(&field));
            let losses = OperatingLosses {
                speed: op.speed,
                torque: op.torque,
                weight: op.weight,
                current,
                angle,
                mechanical: op.speed * op.torque,
                joule: joule_losses(resistance, current),
                eddy,
            };
            Ok((losses, model.average_torque(&field), field))
        })
        .collect::<Result<_>>()?;
    let mut ops = Vec::with_capacity(solved.len());
    let mut eddy_torques = Vec::with_capacity(solved.len());
    let mut fields = Vec::with_capacity(solved.len());
    for (o, t, f) in solved {
        ops.push(o);
        eddy_torques.push(t);
        fields.push(f);
    }
    Ok(EfficiencyReport {
        efficiency: cycle_efficiency(&ops),
        ops,
        eddy_torques,
        fields,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(mechanical: f64, joule: f64, eddy: f64, weight: f64) -> OperatingLosses {
        OperatingLosses {
            speed: 1.0,
            torque: mechanical,
            weight,
            current: 0.0,
            angle: 0.0,
            mechanical,
            joule,
            eddy,
        }
    }

    #[test]
    fn arithmetic() {
        assert_eq!(cycle_efficiency(&[op(1000.0, 0.0, 0.0, 1.0)]), 1.0);
        let e = cycle_efficiency(&[op(1000.0, 60.0, 40.0, 1.0)]);
        assert!((e - 1000.0 / 1100.0).abs() < 1e-15);
        assert!((e - 0.9091).abs() < 1e-4);
    }

    #[test]
    fn decreasing_in_resistance() {
        let ops = |r: f64| {
            vec![
                op(500.0, joule_losses(r, 10.0), 5.0, 0.3),
                op(2000.0, joule_losses(r, 20.0), 30.0, 0.7),
            ]
        };
        let mut last = 1.0;
        for r in [0.0, 0.5, 1.0, 3.2, 10.0] {
            let e = cycle_efficiency(&ops(r));
            assert!(e > 0.0 && e <= 1.0 && e < last || r == 0.0);
            last = e;
        }
    }
}
