//! Drag on a slender ellipsoid represented as a line of drag-corrected markers.
//!
//! A unit force on every marker is spread, the fluid solved once, and the
//! mean marker velocity relative to the far field gives `(F/U)_IB` for one
//! periodic box size. Box sizes are then extrapolated linearly in `1/L`.

use serde::{Deserialize, Serialize};

use super::reference::{oberbeck_drag, sbt_drag, Direction};
use super::{fit_line, ExperimentReport, Series};
use crate::config::MeshWidth;
use crate::drag::{correction_radius, ellipsoid_radius_profile, hydrodynamic_radius, xi, EllipsoidProfile, DEFAULT_RADIUS_FACTOR};
use crate::error::{invalid, Result};
use crate::grid::{Grid, VectorField};
use crate::interaction::{interpolate, spread_into, Vec3};
use crate::spectral::StokesSolver;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipsoidParams {
    pub h: MeshWidth,
    /// Periodic box edge lengths `L` (μm).
    pub lengths: Vec<f64>,
    pub direction: Direction,
    pub half_minor: f64,
    pub half_major: f64,
    pub mu: f64,
    pub radius_factor: f64,
    pub profile: EllipsoidProfile,
    /// Scale of the unit test force; the result does not depend on it.
    pub force: f64,
}

impl Default for EllipsoidParams {
    fn default() -> Self {
        Self {
            h: MeshWidth::new(1.0 / 32.0),
            lengths: vec![1.0, 2.0, 4.0],
            direction: Direction::Parallel,
            half_minor: 1.33 / 64.0,
            half_major: 0.5,
            mu: 1.0,
            radius_factor: DEFAULT_RADIUS_FACTOR,
            profile: EllipsoidProfile::default(),
            force: 1.0,
        }
    }
}

impl EllipsoidParams {
    pub fn beta(&self) -> f64 {
        self.half_major / self.half_minor
    }

    pub fn validate(&self) -> Result<()> {
        if self.lengths.len() < 2 {
            return Err(invalid("at least two box sizes are needed to extrapolate"));
        }
        if !(self.half_minor > 0.0 && self.half_major > self.half_minor) {
            return Err(invalid("ellipsoid needs 0 < half_minor < half_major"));
        }
        if !(self.force.is_finite() && self.force != 0.0) {
            return Err(invalid("test force must be finite and nonzero"));
        }
        for &l in &self.lengths {
            let grid = Grid::from_extent([l; 3], self.h.value(), self.mu)?;
            if grid.lengths()[0] < 2.0 * self.half_major {
                return Err(invalid(format!("box size {l} does not contain the ellipsoid")));
            }
        }
        self.markers()?;
        Ok(())
    }

    /// Marker positions and drag coefficients, independent of the box.
    pub fn markers(&self) -> Result<(Vec<Vec3>, Vec<f64>)> {
        let rh = hydrodynamic_radius(self.h.value(), self.radius_factor);
        let span = 2.0 * self.half_major;
        let n = ((span / rh).round() as usize).saturating_sub(1).max(2);
        let ds = span / (n + 1) as f64;
        let mut x = Vec::with_capacity(n);
        let mut drag = Vec::with_capacity(n);
        for k in 1..=n {
            let s = k as f64 * ds;
            let r = ellipsoid_radius_profile(s, self.half_major, self.beta(), self.profile)?;
            drag.push(xi(correction_radius(rh, r)?, self.mu));
            x.push(Vec3::new(s - self.half_major, 0.0, 0.0));
        }
        Ok((x, drag))
    }
}

/// `(F/U)_IB` in a cubic box of edge `length`.
pub fn drag_in_box(params: &EllipsoidParams, length: f64) -> Result<f64> {
    let grid = Grid::from_extent([length; 3], params.h.value(), params.mu)?;
    let (x, drag) = params.markers()?;
    let n = x.len();
    let dir = match params.direction {
        Direction::Parallel => Vec3::x(),
        Direction::Perpendicular => Vec3::y(),
    };
    let f = dir * params.force;
    let mut density = VectorField::zeros(&grid);
    spread_into(&mut density, &x, &vec![f; n])?;
    let u = StokesSolver::new(&grid).solve(&density)?;
    let v = interpolate(&u, &x)?;
    let mean: Vec3 = v.iter().zip(&drag).map(|(vk, xi)| vk + *xi * f).sum::<Vec3>() / n as f64;
    // Node (0, −L/2, 0).
    let far = u.at(grid.index(grid.nx / 2, 0, grid.nz / 2));
    let far = Vec3::new(far[0], far[1], far[2]);
    Ok(n as f64 * params.force / (mean - far).dot(&dir))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidDrag {
    pub per_length: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub oberbeck: f64,
    pub slender_body: f64,
    pub markers: usize,
}

impl EllipsoidDrag {
    pub fn relative_error(&self) -> f64 {
        (self.extrapolated - self.oberbeck).abs() / self.oberbeck
    }
}

pub fn ellipsoid_drag_experiment(params: &EllipsoidParams) -> Result<EllipsoidDrag> {
    params.validate()?;
    let per_length = params
        .lengths
        .iter()
        .map(|&l| drag_in_box(params, l).map(|d| (l, d)))
        .collect::<Result<Vec<_>>>()?;
    let inv: Vec<f64> = per_length.iter().map(|(l, _)| 1.0 / l).collect();
    let vals: Vec<f64> = per_length.iter().map(|(_, d)| *d).collect();
    let (extrapolated, _) = fit_line(&inv, &vals).ok_or_else(|| invalid("box sizes must differ to extrapolate"))?;
    Ok(EllipsoidDrag {
        per_length,
        extrapolated,
        oberbeck: oberbeck_drag(params.half_minor, params.beta(), params.mu, params.direction)?,
        slender_body: sbt_drag(params.half_major, params.beta(), params.mu, params.direction),
        markers: params.markers()?.0.len(),
    })
}

pub fn run(params: &EllipsoidParams, seed: u64) -> Result<ExperimentReport> {
    let out = ellipsoid_drag_experiment(params)?;
    let mut report = ExperimentReport::new("ellipsoid-drag", seed, params);
    report
        .scalar("extrapolated_drag", out.extrapolated, "pN/(um/s)")
        .scalar("oberbeck_drag", out.oberbeck, "pN/(um/s)")
        .scalar("slender_body_drag", out.slender_body, "pN/(um/s)")
        .scalar("relative_error", out.relative_error(), "1")
        .scalar("markers", out.markers as f64, "count");
    let mut series = Series::new("drag", &["L", "inv_L", "drag"]);
    for (l, d) in &out.per_length {
        series.push(vec![*l, 1.0 / l, *d]);
    }
    report.series.push(series);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coarse(direction: Direction) -> EllipsoidParams {
        EllipsoidParams {
            h: MeshWidth::new(1.0 / 8.0),
            lengths: vec![1.5, 2.0],
            direction,
            ..Default::default()
        }
    }

    #[test]
    fn markers_avoid_the_tips() {
        let p = EllipsoidParams::default();
        let (x, drag) = p.markers().unwrap();
        let rh: f64 = 1.33 / 32.0;
        let n = x.len();
        assert_eq!(n, (1.0 / rh).round() as usize - 1);
        let ds = x[1].x - x[0].x;
        assert!((x[0].x + 0.5 - ds).abs() < 1e-12 && (0.5 - x[n - 1].x - ds).abs() < 1e-12);
        // Thinner tips need more correction.
        assert!(drag[0] > drag[n / 2]);
        assert!((drag[0] - drag[n - 1]).abs() < 1e-12 * drag[0]);
    }

    #[test]
    fn drag_is_independent_of_force_scale() {
        for d in [Direction::Parallel, Direction::Perpendicular] {
            let p = coarse(d);
            let a = drag_in_box(&p, 2.0).unwrap();
            let b = drag_in_box(&EllipsoidParams { force: 2.0, ..p.clone() }, 2.0).unwrap();
            let c = drag_in_box(&EllipsoidParams { force: -0.3, ..p }, 2.0).unwrap();
            assert!((a - b).abs() < 1e-12 * a && (a - c).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn needs_two_box_sizes() {
        let p = EllipsoidParams {
            lengths: vec![2.0],
            ..Default::default()
        };
        assert!(ellipsoid_drag_experiment(&p).is_err());
    }
}
