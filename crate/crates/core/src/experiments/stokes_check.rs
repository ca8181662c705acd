//! The spectral solver against a single forced Fourier mode.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Series};
use crate::error::{invalid, Result};
use crate::grid::{Grid, VectorField};
use crate::spectral::StokesSolver;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StokesCheckParams {
    /// Nodes per side of the cubic grid.
    pub n: usize,
    pub length: f64,
    pub mu: f64,
    pub forcing: f64,
    /// Wavenumber of the forced mode in `y`.
    pub mode: usize,
}

impl Default for StokesCheckParams {
    fn default() -> Self {
        Self {
            n: 64,
            length: 1.0,
            mu: 1.0,
            forcing: 1.0,
            mode: 1,
        }
    }
}

impl StokesCheckParams {
    pub fn validate(&self) -> Result<()> {
        if self.mode == 0 || 2 * self.mode >= self.n {
            return Err(invalid(format!("mode {} must lie in 1..{}", self.mode, self.n / 2)));
        }
        if !(self.forcing != 0.0 && self.forcing.is_finite()) {
            return Err(invalid("forcing amplitude must be finite and nonzero"));
        }
        self.grid()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n, self.n, self.n, self.length / self.n as f64, self.mu)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StokesCheck {
    pub max_relative_error: f64,
    /// `(y, u_x, analytic)` along the `x = z = 0` column.
    pub profile: Vec<[f64; 3]>,
}

/// Relative error `max |u − u_exact| / max |u_exact|` for
/// `f = f₀ sin(2πmy/L) x̂`, whose solution is `u_x = f₀L²/(4π²m²μ) sin(2πmy/L)`.
pub fn stokes_check(params: &StokesCheckParams) -> Result<StokesCheck> {
    params.validate()?;
    let grid = params.grid()?;
    let l = params.length;
    let k = 2.0 * PI * params.mode as f64 / l;
    let f0 = params.forcing;
    let amplitude = f0 / (k * k * params.mu);
    let force = VectorField::from_fn(&grid, |x| [f0 * (k * x[1]).sin(), 0.0, 0.0]);
    let u = StokesSolver::new(&grid).solve(&force)?;
    let exact = VectorField::from_fn(&grid, |x| [amplitude * (k * x[1]).sin(), 0.0, 0.0]);
    let mut diff = u.clone();
    diff.add_scaled(&exact, -1.0)?;
    let max_relative_error = diff.max_abs() / exact.max_abs();
    let profile = (0..grid.ny)
        .map(|j| {
            let idx = grid.index(0, j, 0);
            [grid.node(0, j, 0)[1], u.at(idx)[0], exact.at(idx)[0]]
        })
        .collect();
    Ok(StokesCheck {
        max_relative_error,
        profile,
    })
}

pub fn run(params: &StokesCheckParams, seed: u64) -> Result<ExperimentReport> {
    let out = stokes_check(params)?;
    let mut report = ExperimentReport::new("stokes-check", seed, params);
    report.scalar("max_relative_error", out.max_relative_error, "1");
    let mut series = Series::new("profile", &["y", "u", "analytic"]);
    for row in &out.profile {
        series.push(row.to_vec());
    }
    report.series.push(series);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_is_exact() {
        for (n, mode) in [(16, 1), (32, 3), (24, 5)] {
            let p = StokesCheckParams {
                n,
                mode,
                length: 2.0,
                mu: 0.7,
                ..Default::default()
            };
            assert!(stokes_check(&p).unwrap().max_relative_error < 1e-12);
        }
    }

    #[test]
    fn nyquist_and_mean_modes_are_rejected() {
        for mode in [0, 8] {
            let p = StokesCheckParams { n: 16, mode, ..Default::default() };
            assert!(p.validate().is_err());
        }
    }
}
