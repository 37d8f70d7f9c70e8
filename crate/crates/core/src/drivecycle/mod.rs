//! Drive-cycle clustering into operating points, MTPA current tables and
//! drive-cycle efficiency.

mod efficiency;
mod mtpa;

use std::io::Read;

use serde::{Deserialize, Serialize};

pub use efficiency::{cycle_efficiency, evaluate_cycle, EfficiencyReport, OperatingLosses};
pub use mtpa::{optimal_angle, AngleOptimum, AngleSearch, MtpaOptions, MtpaSample, MtpaTable};

use crate::error::{Error, Result};

/// One sample of a speed/torque trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample {
    pub time: f64,
    /// Mechanical speed, rad/s.
    pub speed: f64,
    /// Shaft torque, N·m.
    pub torque: f64,
}

#[derive(Deserialize)]
struct TraceRow {
    time_s: f64,
    speed_rpm: f64,
    #[serde(rename = "torque_Nm")]
    torque_nm: f64,
}

pub fn rpm_to_rad_per_s(rpm: f64) -> f64 {
    rpm * std::f64::consts::PI / 30.0
}

/// Reads a CSV trace with header `time_s,speed_rpm,torque_Nm`.
pub fn read_trace<R: Read>(reader: R) -> Result<Vec<TraceSample>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["time_s", "speed_rpm", "torque_Nm"] {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header time_s,speed_rpm,torque_Nm, found {}", headers.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<TraceRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse {
            line: i + 2,
            message: e.to_string(),
        })?;
        out.push(TraceSample {
            time: row.time_s,
            speed: rpm_to_rad_per_s(row.speed_rpm),
            torque: row.torque_nm,
        });
    }
    if out.windows(2).any(|w| !(w[1].time > w[0].time)) {
        return Err(Error::InvalidInput("trace times must be strictly increasing".into()));
    }
    Ok(out)
}

/// Representative operating point with its relative active time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    /// Mechanical speed, rad/s.
    pub speed: f64,
    pub torque: f64,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveCycle {
    pub points: Vec<OperatingPoint>,
    pub peak_speed: f64,
    pub peak_torque: f64,
    /// Index of the point with the highest speed, ties broken by torque.
    pub thermal_op: usize,
}

impl DriveCycle {
    /// Builds a cycle from explicit points; weights are normalized.
    pub fn from_points(points: Vec<OperatingPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::NoMotoringSamples);
        }
        if points.iter().any(|p| !(p.torque > 0.0 && p.speed >= 0.0 && p.weight >= 0.0)) {
            return Err(Error::InvalidInput("operating points need positive torque and non-negative speed and weight".into()));
        }
        let total: f64 = points.iter().map(|p| p.weight).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("operating point weights sum to zero".into()));
        }
        let points: Vec<OperatingPoint> = points
            .into_iter()
            .map(|p| OperatingPoint {
                weight: p.weight / total,
                ..p
            })
            .collect();
        let thermal_op = (0..points.len())
            .max_by(|&a, &b| {
                let (pa, pb) = (&points[a], &points[b]);
                pa.speed.total_cmp(&pb.speed).then(pa.torque.total_cmp(&pb.torque))
            })
            .unwrap_or(0);
        Ok(Self {
            peak_speed: points.iter().map(|p| p.speed).fold(0.0, f64::max),
            peak_torque: points.iter().map(|p| p.torque).fold(0.0, f64::max),
            thermal_op,
            points,
        })
    }
}

/// Clusters a trace into an `n_speed × n_torque` grid of equal cells over
/// `[0, max ω] × [0, max T]` of the motoring samples. Each sample counts with
/// the time until the next sample; regenerative and idle samples are dropped.
pub fn cluster_cycle(samples: &[TraceSample], grid: (usize, usize)) -> Result<DriveCycle> {
    let (ns, nt) = grid;
    if ns == 0 || nt == 0 {
        return Err(Error::InvalidInput("cluster grid must have at least one cell per axis".into()));
    }
    if samples.is_empty() {
        return Err(Error::InvalidInput("drive-cycle trace is empty".into()));
    }
    let durations: Vec<f64> = (0..samples.len())
        .map(|i| {
            if i + 1 < samples.len() {
                samples[i + 1].time - samples[i].time
            } else if i > 0 {
                samples[i].time - samples[i - 1].time
            } else {
                1.0
            }
        })
        .collect();
    let motoring: Vec<(TraceSample, f64)> = samples
        .iter()
        .zip(&durations)
        .filter(|(s, _)| s.torque > 0.0)
        .map(|(s, &d)| (*s, d))
        .collect();
    if motoring.is_empty() {
        return Err(Error::NoMotoringSamples);
    }
    let wmax = motoring.iter().map(|(s, _)| s.speed).fold(0.0, f64::max);
    let tmax = motoring.iter().map(|(s, _)| s.torque).fold(0.0, f64::max);
    let ds = if wmax > 0.0 { wmax / ns as f64 } else { 1.0 };
    let dt = tmax / nt as f64;
    let mut time = vec![0.0; ns * nt];
    for (s, d) in &motoring {
        let i = ((s.speed / ds) as usize).min(ns - 1);
        let j = ((s.torque / dt) as usize).min(nt - 1);
        time[i * nt + j] += d;
    }
    let points = (0..ns * nt)
        .filter(|&c| time[c] > 0.0)
        .map(|c| OperatingPoint {
            speed: (c / nt) as f64 * ds + 0.5 * ds,
            torque: (c % nt) as f64 * dt + 0.5 * dt,
            weight: time[c],
        })
        .collect();
    DriveCycle::from_points(points)
}
