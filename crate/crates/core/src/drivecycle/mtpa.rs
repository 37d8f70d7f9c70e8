//! Maximum-torque-per-ampere current angles and their table inversion.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::design::DesignState;
use crate::error::{Error, Result};
use crate::mqs::{CurrentExcitation, MqsModel, PeriodicField, SolveRequest};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleSearch {
    /// Final bracket width, rad.
    pub tolerance: f64,
    /// Points of the full-period scan used without a warm start.
    pub scan_points: usize,
    /// Half-width of the initial bracket around a warm-start angle, rad.
    pub bracket: f64,
    pub max_evaluations: usize,
}

impl Default for AngleSearch {
    fn default() -> Self {
        Self {
            tolerance: 1e-3,
            scan_points: 16,
            bracket: 0.25,
            max_evaluations: 200,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleOptimum {
    pub angle: f64,
    pub torque: f64,
    /// The torque did not vary over the scan; `angle` is the initial angle.
    pub degenerate: bool,
    pub evaluations: usize,
}

struct Tracker<'a> {
    f: &'a mut dyn FnMut(f64) -> Result<f64>,
    evaluations: usize,
    max: usize,
    best: (f64, f64),
}

impl Tracker<'_> {
    fn eval(&mut self, x: f64) -> Result<f64> {
        if self.evaluations >= self.max {
            return Err(Error::AngleSearch {
                best_angle: self.best.0,
                best_torque: self.best.1,
            });
        }
        self.evaluations += 1;
        let v = (self.f)(x)?;
        if v > self.best.1 {
            self.best = (x, v);
        }
        Ok(v)
    }
}

/// Maximizes `f` over the current angle.
///
/// Without a warm start the whole period around `initial` is scanned and the
/// best scan cell is refined; with a warm start a bracket around `initial` is
/// grown until it encloses a local maximum. Golden-section refinement is
/// followed by one parabolic step.
pub fn optimal_angle(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    initial: f64,
    warm: bool,
    opts: &AngleSearch,
) -> Result<AngleOptimum> {
    let mut tr = Tracker {
        f,
        evaluations: 0,
        max: opts.max_evaluations,
        best: (initial, f64::NEG_INFINITY),
    };
    let mut bracket = None;
    if warm {
        let w = opts.bracket;
        let (mut a, mut m, mut b) = (initial - w, initial, initial + w);
        let (mut fa, mut fm, mut fb) = (tr.eval(a)?, tr.eval(m)?, tr.eval(b)?);
        let mut travelled = 0.0;
        while (fa > fm || fb > fm) && travelled < 2.0 * PI {
            if fa > fb {
                (b, fb, m, fm) = (m, fm, a, fa);
                a -= w;
                fa = tr.eval(a)?;
            } else {
                (a, fa, m, fm) = (m, fm, b, fb);
                b += w;
                fb = tr.eval(b)?;
            }
            travelled += w;
        }
        let flat = fa == fm && fm == fb;
        if fm >= fa && fm >= fb && !flat {
            bracket = Some((a, fa, b, fb));
        }
    }
    let (mut a, mut fa, mut b, mut fb) = match bracket {
        Some(br) => br,
        None => {
            let n = opts.scan_points.max(3);
            let step = 2.0 * PI / n as f64;
            let xs: Vec<f64> = (0..n).map(|k| initial - PI + step * k as f64).collect();
            let mut vals = Vec::with_capacity(n);
            for &x in &xs {
                vals.push(tr.eval(x)?);
            }
            let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            if hi - lo <= 1e-12 * (1.0 + hi.abs()) {
                let t = tr.eval(initial)?;
                return Ok(AngleOptimum {
                    angle: initial,
                    torque: t,
                    degenerate: true,
                    evaluations: tr.evaluations,
                });
            }
            let k = vals.iter().position(|&v| v == hi).unwrap_or(0);
            let (km, kp) = ((k + n - 1) % n, (k + 1) % n);
            (xs[k] - step, vals[km], xs[k] + step, vals[kp])
        }
    };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = tr.eval(x1)?;
    let mut f2 = tr.eval(x2)?;
    while b - a > opts.tolerance {
        if f1 > f2 {
            (b, fb) = (x2, f2);
            (x2, f2) = (x1, f1);
            x1 = b - g * (b - a);
            f1 = tr.eval(x1)?;
        } else {
            (a, fa) = (x1, f1);
            (x1, f1) = (x2, f2);
            x2 = a + g * (b - a);
            f2 = tr.eval(x2)?;
        }
    }
    // parabola through the best interior point and its neighbours
    let (xm, fm, xl, fl, xr, fr) = if f1 > f2 { (x1, f1, a, fa, x2, f2) } else { (x2, f2, x1, f1, b, fb) };
    let num = (xm - xl).powi(2) * (fm - fr) - (xm - xr).powi(2) * (fm - fl);
    let den = (xm - xl) * (fm - fr) - (xm - xr) * (fm - fl);
    if den != 0.0 {
        let xv = xm - 0.5 * num / den;
        if xv > xl && xv < xr {
            tr.eval(xv)?;
        }
    }
    let (angle, torque) = tr.best;
    Ok(AngleOptimum {
        angle,
        torque,
        degenerate: false,
        evaluations: tr.evaluations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtpaSample {
    pub current: f64,
    pub angle: f64,
    pub torque: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MtpaOptions {
    /// Current amplitude the samples are scaled to, A.
    pub rated_current: f64,
    pub samples: usize,
    pub min_fraction: f64,
    pub max_fraction: f64,
    pub search: AngleSearch,
}

impl Default for MtpaOptions {
    fn default() -> Self {
        Self {
            rated_current: 80.0,
            samples: 8,
            min_fraction: 0.05,
            max_fraction: 1.2,
            search: AngleSearch::default(),
        }
    }
}

impl MtpaOptions {
    /// Log-spaced current amplitudes.
    pub fn currents(&self) -> Vec<f64> {
        let (lo, hi) = (self.min_fraction * self.rated_current, self.max_fraction * self.rated_current);
        let n = self.samples.max(1);
        if n == 1 {
            return vec![hi];
        }
        (0..n)
            .map(|k| lo * (hi / lo).powf(k as f64 / (n - 1) as f64))
            .collect()
    }
}

/// Optimal angle and torque per current amplitude, torque strictly
/// increasing with current. A zero-current sample is always present.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MtpaTable {
    pub samples: Vec<MtpaSample>,
}

impl MtpaTable {
    pub fn new(mut samples: Vec<MtpaSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::InvalidInput("MTPA table needs at least one sample".into()));
        }
        if samples[0].current != 0.0 {
            let angle = samples[0].angle;
            samples.insert(
                0,
                MtpaSample {
                    current: 0.0,
                    angle,
                    torque: 0.0,
                },
            );
        }
        for w in samples.windows(2) {
            if !(w[1].current > w[0].current) {
                return Err(Error::InvalidInput("MTPA currents must be strictly increasing".into()));
            }
            if !(w[1].torque > w[0].torque) {
                return Err(Error::NonMonotoneTable {
                    current: w[1].current,
                    torque: w[1].torque,
                });
            }
        }
        Ok(Self { samples })
    }

    /// Builds the table from a torque function `T(I, β)`.
    pub fn build(torque: &mut dyn FnMut(f64, f64) -> Result<f64>, opts: &MtpaOptions, initial_angle: f64) -> Result<Self> {
        let mut samples = Vec::new();
        let mut beta = initial_angle;
        for (l, current) in opts.currents().into_iter().enumerate() {
            let mut f = |b: f64| torque(current, b);
            let opt = optimal_angle(&mut f, beta, l > 0, &opts.search)
                .map_err(|e| e.context(format!("MTPA angle at {current:.4} A")))?;
            beta = opt.angle;
            samples.push(MtpaSample {
                current,
                angle: opt.angle,
                torque: opt.torque,
            });
        }
        Self::new(samples)
    }

    /// Builds the table with static (`σ = 0`) solves of `model`.
    pub fn build_for(model: &MqsModel, design: &DesignState, opts: &MtpaOptions, template: &CurrentExcitation) -> Result<Self> {
        let grid = model.time_grid(0.0)?;
        let mut last: Option<PeriodicField> = None;
        let mut torque = |current: f64, beta: f64| -> Result<f64> {
            let exc = template.with_amplitude(current).with_angle(beta);
            let req = SolveRequest {
                initial: last.as_ref(),
                ..Default::default()
            };
            let field = model.solve(design, &exc, &grid, req)?;
            let t = model.average_torque(&field);
            last = Some(field);
            Ok(t)
        };
        Self::build(&mut torque, opts, PI)
    }

    pub fn max_torque(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.torque)
    }

    /// Current amplitude and angle producing `target` torque.
    pub fn current_for_torque(&self, target: f64) -> Result<(f64, f64)> {
        if !(target >= 0.0) {
            return Err(Error::InvalidInput(format!("target torque {target} must be non-negative")));
        }
        let max = self.max_torque();
        if target > max {
            return Err(Error::TorqueUnreachable { target, max });
        }
        let s = &self.samples;
        let k = s.partition_point(|p| p.torque < target).clamp(1, s.len() - 1);
        let (p0, p1) = (&s[k - 1], &s[k]);
        let w = (target - p0.torque) / (p1.torque - p0.torque);
        let current = p0.current + w * (p1.current - p0.current);
        let v = (current - p0.current) / (p1.current - p0.current);
        Ok((current, p0.angle + v * (p1.angle - p0.angle)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sine_maximum() {
        let mut f = |b: f64| Ok(b.sin());
        let opts = AngleSearch {
            tolerance: 1e-4,
            ..Default::default()
        };
        let o = optimal_angle(&mut f, 0.3, false, &opts).unwrap();
        assert!((o.angle.rem_euclid(2.0 * PI) - PI / 2.0).abs() < 1e-4, "{o:?}");
        let w = optimal_angle(&mut f, 1.2, true, &opts).unwrap();
        assert!((w.angle - PI / 2.0).abs() < 1e-4, "{w:?}");
    }

    #[test]
    fn hybrid_model_matches_grid_search() {
        let t = |b: f64| 2.0 * b.cos() + (2.0 * b).sin();
        let grid = (0..10_000)
            .map(|k| -PI + 2.0 * PI * k as f64 / 10_000.0)
            .max_by(|a, b| t(*a).total_cmp(&t(*b)))
            .unwrap();
        let mut f = |b: f64| Ok(t(b));
        let o = optimal_angle(&mut f, 0.0, false, &AngleSearch::default()).unwrap();
        assert!((o.angle - grid).abs() < 1e-3, "{} vs {grid}", o.angle);
    }

    #[test]
    fn constant_torque_is_degenerate() {
        let mut f = |_b: f64| Ok(3.0);
        let o = optimal_angle(&mut f, 0.7, true, &AngleSearch::default()).unwrap();
        assert!(o.degenerate);
        assert_eq!(o.angle, 0.7);
    }

    #[test]
    fn evaluation_budget_is_enforced() {
        let mut f = |b: f64| Ok(b.sin());
        let opts = AngleSearch {
            max_evaluations: 5,
            ..Default::default()
        };
        assert!(matches!(optimal_angle(&mut f, 0.0, false, &opts), Err(Error::AngleSearch { .. })));
    }

    #[test]
    fn table_inversion() {
        let t = MtpaTable::new(vec![
            MtpaSample { current: 0.0, angle: 0.0, torque: 0.0 },
            MtpaSample { current: 10.0, angle: 0.2, torque: 5.0 },
            MtpaSample { current: 20.0, angle: 0.4, torque: 10.0 },
        ])
        .unwrap();
        let (i, b) = t.current_for_torque(7.5).unwrap();
        assert_eq!(i, 15.0);
        assert!((b - 0.3).abs() < 1e-15);
        assert_eq!(t.current_for_torque(0.0).unwrap().0, 0.0);
        assert!(matches!(t.current_for_torque(11.0), Err(Error::TorqueUnreachable { .. })));
        assert!(MtpaTable::new(vec![
            MtpaSample { current: 1.0, angle: 0.0, torque: 2.0 },
            MtpaSample { current: 2.0, angle: 0.0, torque: 1.0 },
        ])
        .is_err());
    }

    #[test]
    fn log_spaced_currents() {
        let c = MtpaOptions::default().currents();
        assert_eq!(c.len(), 8);
        assert!((c[0] - 4.0).abs() < 1e-12 && (c[7] - 96.0).abs() < 1e-12);
        assert!(c.windows(2).all(|w| (w[1] / w[0] - c[1] / c[0]).abs() < 1e-12));
    }
}
