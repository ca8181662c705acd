//! Effective viscosity of a fiber suspension driven by a sinusoidal body force.
//!
//! With forcing `f₀ sin(2πy/L) x̂`, a Newtonian fluid of viscosity `μ` has
//! `u_x = f₀L²/(4π²μ) sin(2πy/L)`, so projecting the measured `u_x` of each
//! `(x, z)` column onto the forcing mode gives a local viscosity
//! `μ(x, z) = f₀L³ / (8π² Σ_y u_x sin(2πy/L) h)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::orientation::{OrientationDistribution, OrientationSampler};
use super::{ExperimentReport, Series};
use crate::config::MeshWidth;
use crate::drag::{marker_spacing_policy, DragParams, Model, DEFAULT_RADIUS_FACTOR};
use crate::error::{invalid, Result};
use crate::fiber::{BendingNormalization, Fiber};
use crate::grid::{Grid, VectorField};
use crate::interaction::Vec3;
use crate::rng::rng_stream;
use crate::stepper::{Coupling, Scheme, SchemeConfig, Simulation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuspensionParams {
    /// Number density in units of `1/L_f³`; the fiber count is `n L_f³ · V / L_f³`.
    pub nl3: Vec<f64>,
    pub trials: usize,
    pub h: MeshWidth,
    pub dt: f64,
    pub forcing: f64,
    pub length: f64,
    pub radius: f64,
    pub aspect_ratio: f64,
    pub ks: f64,
    pub kb: f64,
    pub mu: f64,
    pub scheme: Scheme,
    pub radius_factor: f64,
    pub bending: BendingNormalization,
    /// Consecutive samples must agree to this many significant digits.
    pub digits: u32,
    pub sample_interval: u64,
    pub min_samples: usize,
    pub max_steps: u64,
    /// Orientation distribution constants; `r_e = 0.7 r_p` when absent.
    pub r_const: f64,
    pub r_e: Option<f64>,
    pub domain: f64,
}

impl Default for SuspensionParams {
    fn default() -> Self {
        Self {
            nl3: vec![5.0, 10.0, 20.0],
            trials: 2,
            h: MeshWidth::new(1.0 / 64.0),
            dt: 1e-6,
            forcing: 0.1,
            length: 0.5,
            radius: 7.5e-3,
            aspect_ratio: 33.0,
            ks: 100.0,
            kb: 0.25,
            mu: 1.0,
            scheme: Scheme::ImplicitBending,
            radius_factor: DEFAULT_RADIUS_FACTOR,
            bending: BendingNormalization::default(),
            digits: 3,
            sample_interval: 10,
            min_samples: 3,
            max_steps: 20_000,
            r_const: 3.0,
            r_e: None,
            domain: 1.0,
        }
    }
}

impl SuspensionParams {
    pub fn validate(&self) -> Result<()> {
        if self.nl3.is_empty() || self.nl3.iter().any(|n| !(*n >= 0.0 && n.is_finite())) {
            return Err(invalid("nl3 needs at least one non-negative density"));
        }
        if self.trials == 0 {
            return Err(invalid("at least one trial is needed"));
        }
        if !(self.forcing != 0.0 && self.forcing.is_finite()) {
            return Err(invalid("forcing amplitude must be finite and nonzero"));
        }
        if self.sample_interval == 0 || self.min_samples < 2 || self.max_steps == 0 {
            return Err(invalid("sample_interval and max_steps must be positive, min_samples at least 2"));
        }
        if !(self.length > 0.0 && self.length < self.domain) {
            return Err(invalid("fiber length must be positive and shorter than the box"));
        }
        self.grid()?;
        self.drag()?;
        self.distribution().validate()?;
        SchemeConfig::new(self.scheme, self.dt).validate()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::from_extent([self.domain; 3], self.h.value(), self.mu)
    }

    pub fn drag(&self) -> Result<DragParams> {
        DragParams::for_model(Model::Hybrid, self.radius, self.h.value(), self.radius_factor, self.mu)
    }

    pub fn distribution(&self) -> OrientationDistribution {
        OrientationDistribution {
            r_const: self.r_const,
            r_e: self.r_e.unwrap_or(0.7 * self.aspect_ratio),
        }
    }

    pub fn fiber_count(&self, nl3: f64) -> usize {
        (nl3 * (self.domain / self.length).powi(3)).round() as usize
    }

    pub fn tolerance(&self) -> f64 {
        10f64.powi(-(self.digits as i32))
    }
}

/// Fibers with uniform start points and sampled orientations.
pub fn place_fibers(params: &SuspensionParams, count: usize, seed: u64, trial: u64) -> Result<Vec<Fiber>> {
    let drag = params.drag()?;
    let spacing = marker_spacing_policy(Model::Hybrid, params.length, drag.hydrodynamic, drag.physical)?;
    let sampler = OrientationSampler::new(params.distribution())?;
    let mut rng = rng_stream(seed, trial);
    let half = 0.5 * params.domain;
    (0..count)
        .map(|_| {
            let start = Vec3::new(
                rng.uniform(-half, half),
                rng.uniform(-half, half),
                rng.uniform(-half, half),
            );
            let p = sampler.sample(&mut rng)?.p;
            let x = (0..spacing.markers).map(|k| start + k as f64 * spacing.ds * p).collect();
            Ok(Fiber::with_uniform_xi(x, spacing.ds, params.ks, params.kb, drag.xi)?.with_bending(params.bending))
        })
        .collect()
}

pub fn body_force(grid: &Grid, forcing: f64) -> VectorField {
    let ly = grid.lengths()[1];
    VectorField::from_fn(grid, |x| [forcing * (2.0 * PI * x[1] / ly).sin(), 0.0, 0.0])
}

/// Mean over `(x, z)` columns of the local viscosity.
pub fn measured_viscosity(u: &VectorField, forcing: f64) -> f64 {
    let grid = *u.grid();
    let l = grid.lengths()[1];
    let (nx, ny, nz) = (grid.nx, grid.ny, grid.nz);
    let modes: Vec<f64> = (0..ny)
        .map(|j| (2.0 * PI * grid.node(0, j, 0)[1] / l).sin())
        .collect();
    let mut total = 0.0;
    for i in 0..nx {
        for k in 0..nz {
            let projection: f64 = (0..ny).map(|j| u.at(grid.index(i, j, k))[0] * modes[j]).sum::<f64>() * grid.h;
            total += forcing * l.powi(3) / (8.0 * PI * PI * projection);
        }
    }
    total / (nx * nz) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    /// `(t, μ_eff)` at each sample.
    pub samples: Vec<(f64, f64)>,
    pub converged: bool,
    pub max_displacement: f64,
    pub fibers: usize,
}

impl Trial {
    pub fn steady_value(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.1)
    }
}

pub fn run_trial(params: &SuspensionParams, nl3: f64, seed: u64, trial: u64) -> Result<Trial> {
    let grid = params.grid()?;
    let fibers = place_fibers(params, params.fiber_count(nl3), seed, trial)?;
    let count = fibers.len();
    let initial: Vec<Vec<Vec3>> = fibers.iter().map(|f| f.positions.clone()).collect();
    let mut sim = Simulation::new(grid, fibers, SchemeConfig::new(params.scheme, params.dt), Coupling::Grid)?;
    sim.set_body_force(body_force(&grid, params.forcing))?;
    let tol = params.tolerance();
    let mut samples: Vec<(f64, f64)> = Vec::new();
    let mut converged = false;
    while sim.state.step < params.max_steps {
        sim.step()?;
        if (sim.state.step - 1) % params.sample_interval != 0 {
            continue;
        }
        let u = sim.last_velocity().expect("a step has been taken");
        // The velocity of step n is computed from the configuration at t_{n-1}.
        let t = (sim.state.step - 1) as f64 * params.dt;
        let value = measured_viscosity(u, params.forcing) / params.mu - 1.0;
        let settled = samples
            .last()
            .is_some_and(|&(_, prev)| (value - prev).abs() <= tol * value.abs().max(f64::MIN_POSITIVE));
        samples.push((t, value));
        if settled && samples.len() >= params.min_samples {
            converged = true;
            break;
        }
    }
    let max_displacement = sim
        .state
        .fibers
        .iter()
        .zip(&initial)
        .flat_map(|(f, x0)| f.positions.iter().zip(x0).map(|(a, b)| (a - b).norm()))
        .fold(0.0, f64::max);
    Ok(Trial {
        samples,
        converged,
        max_displacement,
        fibers: count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscosityPoint {
    pub nl3: f64,
    pub fibers: usize,
    pub trials: Vec<Trial>,
}

impl ViscosityPoint {
    pub fn mean(&self) -> f64 {
        self.trials.iter().map(Trial::steady_value).sum::<f64>() / self.trials.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        let n = self.trials.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        let ss: f64 = self.trials.iter().map(|t| (t.steady_value() - m).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    pub fn converged(&self) -> bool {
        self.trials.iter().all(|t| t.converged)
    }

    pub fn max_displacement(&self) -> f64 {
        self.trials.iter().map(|t| t.max_displacement).fold(0.0, f64::max)
    }
}

/// Every `(density, trial)` pair runs concurrently with its own stream.
/// Trial `t` of density index `d` uses stream `d · trials + t`.
pub fn suspension_viscosity_experiment(params: &SuspensionParams, seed: u64) -> Result<Vec<ViscosityPoint>> {
    params.validate()?;
    let jobs: Vec<(usize, usize)> = (0..params.nl3.len())
        .flat_map(|d| (0..params.trials).map(move |t| (d, t)))
        .collect();
    let trials = jobs
        .par_iter()
        .map(|&(d, t)| run_trial(params, params.nl3[d], seed, (d * params.trials + t) as u64))
        .collect::<Result<Vec<_>>>()?;
    let mut trials = trials.into_iter();
    Ok(params
        .nl3
        .iter()
        .map(|&nl3| ViscosityPoint {
            nl3,
            fibers: params.fiber_count(nl3),
            trials: trials.by_ref().take(params.trials).collect(),
        })
        .collect())
}

pub fn run(params: &SuspensionParams, seed: u64) -> Result<ExperimentReport> {
    let points = suspension_viscosity_experiment(params, seed)?;
    let mut report = ExperimentReport::new("suspension", seed, params);
    let mut summary = Series::new("viscosity", &["nl3", "fibers", "mu_eff", "std", "max_displacement"]);
    for p in &points {
        summary.push(vec![p.nl3, p.fibers as f64, p.mean(), p.std_dev(), p.max_displacement()]);
    }
    let increasing = points.windows(2).all(|w| w[1].mean() > w[0].mean());
    let rigid = points
        .iter()
        .all(|p| p.max_displacement() <= 1e-3 * params.length);
    report
        .flag("converged", points.iter().all(ViscosityPoint::converged))
        .flag("increasing", increasing)
        .flag("rigid", rigid)
        .scalar(
            "max_displacement",
            points.iter().map(ViscosityPoint::max_displacement).fold(0.0, f64::max),
            "um",
        );
    for p in &points {
        report.scalar(&format!("mu_eff_nl3_{}", p.nl3), p.mean(), "1");
    }
    report.series.push(summary);
    for p in &points {
        for (t, trial) in p.trials.iter().enumerate() {
            let mut s = Series::new(format!("history_nl3_{}_trial_{t}", p.nl3), &["t", "mu_eff"]);
            for (time, v) in &trial.samples {
                s.push(vec![*time, *v]);
            }
            report.series.push(s);
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse() -> SuspensionParams {
        SuspensionParams {
            h: MeshWidth::new(1.0 / 16.0),
            radius: 0.02,
            dt: 1e-5,
            nl3: vec![0.0],
            trials: 1,
            max_steps: 200,
            ..Default::default()
        }
    }

    #[test]
    fn fiber_counts() {
        let p = SuspensionParams::default();
        assert_eq!(p.fiber_count(5.0), 40);
        assert_eq!(p.fiber_count(80.0), 640);
    }

    #[test]
    fn pure_fluid_has_no_extra_viscosity() {
        let p = coarse();
        let t = run_trial(&p, 0.0, 0, 0).unwrap();
        assert!(t.converged);
        assert!(t.steady_value().abs() < 1e-10, "{}", t.steady_value());
    }

    #[test]
    fn fibers_are_placed_inside_the_box() {
        let p = SuspensionParams::default();
        let f = place_fibers(&p, 10, 1, 0).unwrap();
        assert_eq!(f.len(), 10);
        for fiber in &f {
            assert_eq!(fiber.len(), 24);
            assert!(fiber.positions[0].iter().all(|c| c.abs() <= 0.5));
            assert!((fiber.end_to_end() - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn viscosity_does_not_depend_on_forcing_amplitude() {
        let p = SuspensionParams {
            max_steps: 21,
            min_samples: 100,
            ..coarse()
        };
        let one = run_trial(&p, 2.0, 7, 0).unwrap();
        assert!(one.samples[0].1.abs() < 1e-12);
        let one = one.steady_value();
        let two = run_trial(&SuspensionParams { forcing: 0.2, ..p }, 2.0, 7, 0).unwrap().steady_value();
        assert!(one > 0.0);
        assert!((one - two).abs() < 1e-4 * one, "{one} {two}");
    }
}
