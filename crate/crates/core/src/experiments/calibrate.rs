//! Measure the hydrodynamic radius of a single marker on a periodic grid.
//!
//! Two markers carry opposite random forces; each velocity component gives
//! one estimate `R_h = F/(6πμU)`. The markers are advected so the estimates
//! sample many positions relative to the grid.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Series};
use crate::config::MeshWidth;
use crate::error::{invalid, Result};
use crate::grid::{Grid, VectorField};
use crate::interaction::{interpolate, spread_into, Vec3};
use crate::rng::rng_stream;
use crate::spectral::StokesSolver;

/// Velocities below this are too small to give a meaningful estimate.
pub const MIN_SPEED: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrateParams {
    pub h: MeshWidth,
    pub steps: usize,
    pub dt: f64,
    pub mu: f64,
    pub positions: [[f64; 3]; 2],
}

impl Default for CalibrateParams {
    fn default() -> Self {
        Self {
            h: MeshWidth::new(1.0 / 64.0),
            steps: 500,
            dt: 1e-3,
            mu: 1.0,
            positions: [[-0.31, 0.14, 0.04], [-0.46, -0.22, 0.20]],
        }
    }
}

impl CalibrateParams {
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        if self.steps == 0 {
            return Err(invalid("calibration needs at least one step"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid(format!("timestep dt = {} must be positive", self.dt)));
        }
        Ok(())
    }

    /// Unit cube `[−0.5, 0.5]³`.
    pub fn grid(&self) -> Result<Grid> {
        Grid::from_extent([1.0; 3], self.h.value(), self.mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Estimates of `R_h/h` in step order, six per step minus skipped ones.
    pub samples: Vec<f64>,
    /// Step index of each sample.
    pub sample_steps: Vec<usize>,
    pub skipped: usize,
    /// Marker velocities per step.
    pub velocities: Vec<[Vec3; 2]>,
}

impl Calibration {
    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let m = self.mean();
        let n = self.samples.len() as f64;
        (self.samples.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    }
}

pub fn calibrate_hydrodynamic_radius(params: &CalibrateParams, seed: u64) -> Result<Calibration> {
    params.validate()?;
    let grid = params.grid()?;
    let h = grid.h;
    let solver = StokesSolver::new(&grid);
    let mut rng = rng_stream(seed, 0);
    let mut x = params.positions.map(|p| Vec3::new(p[0], p[1], p[2]));
    let mut samples = Vec::with_capacity(6 * params.steps);
    let mut sample_steps = Vec::with_capacity(6 * params.steps);
    let mut velocities = Vec::with_capacity(params.steps);
    let mut skipped = 0;
    for step in 0..params.steps {
        let f1 = Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
        let forces = [f1, -f1];
        let mut density = VectorField::zeros(&grid);
        spread_into(&mut density, &x, &forces)?;
        let u = solver.solve(&density)?;
        let v = interpolate(&u, &x)?;
        for j in 0..2 {
            for i in 0..3 {
                if v[j][i].abs() < MIN_SPEED {
                    skipped += 1;
                } else {
                    samples.push(forces[j][i] / (6.0 * PI * grid.mu * v[j][i]) / h);
                    sample_steps.push(step);
                }
            }
        }
        for j in 0..2 {
            x[j] += params.dt * v[j];
        }
        velocities.push([v[0], v[1]]);
    }
    Ok(Calibration {
        samples,
        sample_steps,
        skipped,
        velocities,
    })
}

pub fn run(params: &CalibrateParams, seed: u64) -> Result<ExperimentReport> {
    let cal = calibrate_hydrodynamic_radius(params, seed)?;
    let mut report = ExperimentReport::new("calibrate", seed, params);
    report
        .scalar("mean_rh_over_h", cal.mean(), "1")
        .scalar("std_rh_over_h", cal.std_dev(), "1")
        .scalar("samples", cal.samples.len() as f64, "count")
        .scalar("skipped", cal.skipped as f64, "count");
    let mut series = Series::new("samples", &["t", "rh_over_h"]);
    for (step, sample) in cal.sample_steps.iter().zip(&cal.samples) {
        series.push(vec![*step as f64 * params.dt, *sample]);
    }
    report.series.push(series);
    let mut vel = Series::new("velocities", &["t", "u1x", "u1y", "u1z", "u2x", "u2y", "u2z"]);
    for (step, v) in cal.velocities.iter().enumerate() {
        vel.push(vec![step as f64 * params.dt, v[0].x, v[0].y, v[0].z, v[1].x, v[1].y, v[1].z]);
    }
    report.series.push(vel);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> CalibrateParams {
        CalibrateParams {
            h: MeshWidth::new(1.0 / 16.0),
            steps: 20,
            ..Default::default()
        }
    }

    #[test]
    fn opposite_forces_give_opposite_velocities() {
        let cal = calibrate_hydrodynamic_radius(&short(), 3).unwrap();
        for [a, b] in &cal.velocities {
            // Each marker is dominated by its own force.
            assert!(a.dot(b) < 0.0);
        }
        assert_eq!(cal.samples.len() + cal.skipped, 6 * 20);
    }

    #[test]
    fn estimates_are_near_the_kernel_radius() {
        let cal = calibrate_hydrodynamic_radius(&short(), 1).unwrap();
        let m = cal.mean();
        assert!(m > 1.0 && m < 1.8, "{m}");
    }

    #[test]
    fn repeatable() {
        let a = calibrate_hydrodynamic_radius(&short(), 5).unwrap();
        let b = calibrate_hydrodynamic_radius(&short(), 5).unwrap();
        assert_eq!(a, b);
        let c = calibrate_hydrodynamic_radius(&short(), 6).unwrap();
        assert_ne!(a.samples, c.samples);
    }
}
