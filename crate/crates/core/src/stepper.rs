//! Time integration of fibers coupled through the periodic Stokes grid.
//!
//! Each step computes elastic forces at `Xⁿ`, spreads them (plus an
//! optional body force), performs one Stokes solve and interpolates back.
//! The grid velocity is held fixed while every fiber is advanced with its
//! own local drag `Ξ = diag(ξ_k)` treated explicitly, with implicit bending,
//! or with implicit bending and tension (Newton).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{invalid, Error, Result};
use crate::fiber::{bending_matrix, elastic_force, flatten, stretch_jacobian, stretching_force, unflatten, Fiber};
use crate::grid::{Grid, VectorField};
use crate::interaction::{interpolate, spread_into, Vec3};
use crate::spectral::StokesSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    #[default]
    ImplicitBending,
    ImplicitBendingTension,
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "explicit" => Ok(Scheme::Explicit),
            "implicit_bending" | "implicit-bending" | "imp_b" => Ok(Scheme::ImplicitBending),
            "implicit_bending_tension" | "implicit-bending-tension" | "newton" | "imp_bt" => {
                Ok(Scheme::ImplicitBendingTension)
            }
            other => Err(invalid(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Speed (μm/s) above which a run is declared unstable.
pub const BLOWUP_SPEED: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub newton_abs_tol: f64,
    pub max_newton_iters: usize,
    pub shear_rate: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::default(),
            dt: 1e-4,
            newton_abs_tol: 1e-6,
            max_newton_iters: 50,
            shear_rate: 0.0,
        }
    }
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, dt: f64) -> Self {
        Self {
            scheme,
            dt,
            ..Self::default()
        }
    }

    pub fn with_shear(mut self, rate: f64) -> Self {
        self.shear_rate = rate;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(invalid(format!("timestep dt = {} must be positive", self.dt)));
        }
        if !(self.newton_abs_tol.is_finite() && self.newton_abs_tol > 0.0) {
            return Err(invalid(format!("Newton tolerance {} must be positive", self.newton_abs_tol)));
        }
        if self.max_newton_iters == 0 {
            return Err(invalid("max_newton_iters must be at least 1"));
        }
        if !self.shear_rate.is_finite() {
            return Err(invalid("shear rate must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SimulationState {
    pub grid: Grid,
    pub fibers: Vec<Fiber>,
    pub time: f64,
    pub step: u64,
}

/// Whether markers feel the grid velocity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    Grid,
    /// Markers move only under their own drag and the background shear.
    None,
}

pub struct Simulation {
    pub state: SimulationState,
    pub config: SchemeConfig,
    solver: Option<StokesSolver>,
    body_force: Option<VectorField>,
    last_velocity: Option<VectorField>,
    newton_iterations: Vec<usize>,
}

impl Simulation {
    pub fn new(grid: Grid, fibers: Vec<Fiber>, config: SchemeConfig, coupling: Coupling) -> Result<Self> {
        config.validate()?;
        for f in &fibers {
            f.validate()?;
        }
        let solver = match coupling {
            Coupling::Grid => Some(StokesSolver::new(&grid)),
            Coupling::None => None,
        };
        Ok(Self {
            state: SimulationState {
                grid,
                fibers,
                time: 0.0,
                step: 0,
            },
            config,
            solver,
            body_force: None,
            last_velocity: None,
            newton_iterations: Vec::new(),
        })
    }

    /// Constant force density added to the fiber forces before every solve.
    pub fn set_body_force(&mut self, force: VectorField) -> Result<()> {
        if *force.grid() != self.state.grid {
            return Err(invalid("body force lives on a different grid"));
        }
        if !force.is_finite() {
            return Err(Error::NonFinite("body force"));
        }
        self.body_force = Some(force);
        Ok(())
    }

    pub fn coupling(&self) -> Coupling {
        if self.solver.is_some() {
            Coupling::Grid
        } else {
            Coupling::None
        }
    }

    /// Grid velocity `uⁿ` used by the most recent step.
    pub fn last_velocity(&self) -> Option<&VectorField> {
        self.last_velocity.as_ref()
    }

    /// Newton iterations per fiber in the most recent step.
    pub fn newton_iterations(&self) -> &[usize] {
        &self.newton_iterations
    }

    /// Spread all fiber forces and the body force, then solve once.
    pub fn grid_velocity(&self) -> Result<VectorField> {
        let forces = self
            .state
            .fibers
            .iter()
            .map(elastic_force)
            .collect::<Result<Vec<_>>>()?;
        self.grid_velocity_from(&forces)
    }

    fn grid_velocity_from(&self, forces: &[Vec<Vec3>]) -> Result<VectorField> {
        let grid = self.state.grid;
        let Some(solver) = &self.solver else {
            return Ok(VectorField::zeros(&grid));
        };
        let mut density = match &self.body_force {
            Some(b) => b.clone(),
            None => VectorField::zeros(&grid),
        };
        for (fiber, f) in self.state.fibers.iter().zip(forces) {
            spread_into(&mut density, &fiber.positions, f)?;
        }
        solver.solve(&density)
    }

    pub fn step(&mut self) -> Result<()> {
        let cfg = self.config;
        let forces = self
            .state
            .fibers
            .iter()
            .map(elastic_force)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| self.blowup(format!("{e}")))?;
        let u = self.grid_velocity_from(&forces)?;
        let coupled = self.solver.is_some();
        let advected: Vec<Vec<Vec3>> = self
            .state
            .fibers
            .par_iter()
            .map(|fiber| {
                let mut v = if coupled {
                    interpolate(&u, &fiber.positions)?
                } else {
                    vec![Vec3::zeros(); fiber.len()]
                };
                if cfg.shear_rate != 0.0 {
                    for (vk, x) in v.iter_mut().zip(&fiber.positions) {
                        vk.x += cfg.shear_rate * x.y;
                    }
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;

        let updates: Vec<Result<(Vec<Vec3>, usize)>> = self
            .state
            .fibers
            .par_iter()
            .zip(advected.par_iter())
            .zip(forces.par_iter())
            .map(|((fiber, v), f)| match cfg.scheme {
                Scheme::Explicit => Ok((explicit_update(fiber, v, f, cfg.dt), 0)),
                Scheme::ImplicitBending => implicit_bending_update(fiber, v, cfg.dt).map(|x| (x, 0)),
                Scheme::ImplicitBendingTension => newton_update(fiber, v, &cfg),
            })
            .collect();

        let mut next = Vec::with_capacity(updates.len());
        let mut iterations = Vec::with_capacity(updates.len());
        for r in updates {
            match r {
                Ok((x, it)) => {
                    next.push(x);
                    iterations.push(it);
                }
                Err(e @ Error::NewtonDiverged { .. }) => return Err(e),
                Err(e) => return Err(self.blowup(format!("{e}"))),
            }
        }

        let mut max_speed: f64 = 0.0;
        for (fiber, x) in self.state.fibers.iter().zip(&next) {
            for (a, b) in fiber.positions.iter().zip(x) {
                let d = b - a;
                if !d.iter().all(|c| c.is_finite()) {
                    return Err(self.blowup("non-finite marker position".into()));
                }
                max_speed = max_speed.max(d.norm() / cfg.dt);
            }
        }
        if max_speed > BLOWUP_SPEED {
            return Err(self.blowup(format!("marker speed {max_speed:.3e} exceeds {BLOWUP_SPEED:.0e}")));
        }

        for (fiber, x) in self.state.fibers.iter_mut().zip(next) {
            fiber.positions = x;
        }
        self.last_velocity = Some(u);
        self.newton_iterations = iterations;
        self.state.step += 1;
        self.state.time = self.state.step as f64 * cfg.dt;
        Ok(())
    }

    fn blowup(&self, reason: String) -> Error {
        Error::BlowUp {
            step: self.state.step,
            time: self.state.time,
            reason,
        }
    }
}

/// `Xⁿ⁺¹ = Xⁿ + Δt (V + Ξ F)`.
pub fn explicit_update(fiber: &Fiber, advection: &[Vec3], force: &[Vec3], dt: f64) -> Vec<Vec3> {
    fiber
        .positions
        .iter()
        .zip(advection)
        .zip(force)
        .zip(&fiber.xi)
        .map(|(((x, v), f), xi)| x + dt * (v + *xi * f))
        .collect()
}

/// `I/Δt − Ξ B` for one fiber.
fn implicit_bending_matrix(fiber: &Fiber, dt: f64) -> Result<BandedMatrix> {
    let mut m = bending_matrix(fiber.len(), fiber.kb, fiber.ds, fiber.bending)?;
    let neg_xi: Vec<f64> = fiber.xi.iter().map(|x| -x).collect();
    m.scale_rows(&neg_xi);
    for k in 0..fiber.len() {
        m.add(k, k, 1.0 / dt);
    }
    Ok(m)
}

/// Solve `(I/Δt − Ξ B) Xⁿ⁺¹ = Xⁿ/Δt + V + Ξ F_s(Xⁿ)` coordinate by coordinate.
pub fn implicit_bending_update(fiber: &Fiber, advection: &[Vec3], dt: f64) -> Result<Vec<Vec3>> {
    let lu = implicit_bending_matrix(fiber, dt)?.factor()?;
    let fs = stretching_force(fiber)?;
    let n = fiber.len();
    let mut out = vec![Vec3::zeros(); n];
    let mut rhs = vec![0.0; n];
    for a in 0..3 {
        for k in 0..n {
            rhs[k] = fiber.positions[k][a] / dt + advection[k][a] + fiber.xi[k] * fs[k][a];
        }
        lu.solve_in_place(&mut rhs)?;
        for k in 0..n {
            out[k][a] = rhs[k];
        }
    }
    Ok(out)
}

/// `(Y − Xⁿ)/Δt − V − Ξ (B Y + F_s(Y))`, marker-major.
fn newton_residual(fiber: &Fiber, bending: &BandedMatrix, y: &[Vec3], advection: &[Vec3], dt: f64) -> Result<Vec<f64>> {
    let trial = Fiber {
        positions: y.to_vec(),
        ..fiber.clone()
    };
    let fs = stretching_force(&trial)?;
    let n = fiber.len();
    let mut r = vec![0.0; 3 * n];
    for a in 0..3 {
        let coord: Vec<f64> = y.iter().map(|p| p[a]).collect();
        let by = bending.matvec(&coord);
        for k in 0..n {
            r[3 * k + a] = (y[k][a] - fiber.positions[k][a]) / dt
                - advection[k][a]
                - fiber.xi[k] * (by[k] + fs[k][a]);
        }
    }
    Ok(r)
}

/// Newton iteration for `(Y − Xⁿ)/Δt = V + Ξ (B Y + F_s(Y))` starting at `Y = Xⁿ`.
/// Returns the new positions and the number of linear solves.
pub fn newton_update(fiber: &Fiber, advection: &[Vec3], cfg: &SchemeConfig) -> Result<(Vec<Vec3>, usize)> {
    let n = fiber.len();
    let dt = cfg.dt;
    let bending = bending_matrix(n, fiber.kb, fiber.ds, fiber.bending)?;
    let mut y = fiber.positions.clone();
    let mut history = Vec::new();
    for iteration in 1..=cfg.max_newton_iters {
        let current = Fiber {
            positions: y.clone(),
            ..fiber.clone()
        };
        let jac = stretch_jacobian(&current)?;
        let fs = flatten(&stretching_force(&current)?);
        let yflat = flatten(&y);
        let jy = jac.matvec(&yflat);

        // System matrix −Ξ (B ⊗ I₃ + J) + I/Δt, in the Jacobian's band layout.
        let mut m = jac;
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 2).min(n - 1) {
                let b = bending.get(i, j);
                if b != 0.0 {
                    for a in 0..3 {
                        m.add(3 * i + a, 3 * j + a, b);
                    }
                }
            }
        }
        let neg_xi: Vec<f64> = fiber.xi.iter().flat_map(|x| [-x, -x, -x]).collect();
        m.scale_rows(&neg_xi);
        for d in 0..3 * n {
            m.add(d, d, 1.0 / dt);
        }
        let mut rhs = vec![0.0; 3 * n];
        for k in 0..n {
            for a in 0..3 {
                let i = 3 * k + a;
                rhs[i] = fiber.positions[k][a] / dt + advection[k][a] + fiber.xi[k] * (fs[i] - jy[i]);
            }
        }
        let sol = m.factor()?.solve(&rhs)?;
        y = unflatten(&sol);

        let r = newton_residual(fiber, &bending, &y, advection, dt)?;
        let rmax = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        history.push(rmax);
        if !rmax.is_finite() {
            break;
        }
        if rmax < cfg.newton_abs_tol {
            return Ok((y, iteration));
        }
    }
    Err(Error::NewtonDiverged {
        iterations: history.len(),
        residuals: history,
    })
}
