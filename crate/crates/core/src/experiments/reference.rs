//! Closed-form drag of a prolate ellipsoid and local slender-body mobility.

use std::f64::consts::PI;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::interaction::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Along the major axis.
    #[default]
    Parallel,
    Perpendicular,
}

/// Shape factor `K` with `F/U = 6πμaK` for aspect ratio `beta = b/a`.
pub fn oberbeck_shape_factor(beta: f64, direction: Direction) -> Result<f64> {
    if !(beta > 1.0 && beta.is_finite()) {
        return Err(invalid(format!("aspect ratio {beta} must exceed 1")));
    }
    let b2 = beta * beta;
    let root = (b2 - 1.0).sqrt();
    let log = beta.acosh();
    Ok(match direction {
        Direction::Parallel => (4.0 / 3.0) * (b2 - 1.0) / ((2.0 * b2 - 1.0) / root * log - beta),
        Direction::Perpendicular => (8.0 / 3.0) * (b2 - 1.0) / ((2.0 * b2 - 3.0) / root * log + beta),
    })
}

/// Force-to-velocity ratio of an ellipsoid with half-minor axis `a`.
pub fn oberbeck_drag(a: f64, beta: f64, mu: f64, direction: Direction) -> Result<f64> {
    Ok(6.0 * PI * mu * a * oberbeck_shape_factor(beta, direction)?)
}

/// `−log(e/(2β)²) = 2 log(2β) − 1`.
fn sbt_log(beta: f64) -> f64 {
    2.0 * (2.0 * beta).ln() - 1.0
}

/// Local slender-body velocity from force density `f` on a filament with unit `tangent`.
pub fn sbt_reference_velocity(f: &Vec3, tangent: &Vec3, beta: f64, mu: f64) -> Vec3 {
    let ss = tangent * tangent.transpose();
    let id = Matrix3::identity();
    let m = (id + ss) * sbt_log(beta) + (id - ss) * 2.0;
    m * f / (8.0 * PI * mu)
}

/// Force-to-velocity ratio of a straight uniformly forced filament of length `2b`.
pub fn sbt_drag(half_major: f64, beta: f64, mu: f64, direction: Direction) -> f64 {
    let t = Vec3::x();
    let f = match direction {
        Direction::Parallel => Vec3::x(),
        Direction::Perpendicular => Vec3::y(),
    };
    let u = sbt_reference_velocity(&f, &t, beta, mu);
    2.0 * half_major / u.dot(&f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_limit() {
        for d in [Direction::Parallel, Direction::Perpendicular] {
            let k = oberbeck_shape_factor(1.0 + 1e-6, d).unwrap();
            assert!((k - 1.0).abs() < 1e-4, "{d:?}: {k}");
        }
        assert!(oberbeck_shape_factor(1.0, Direction::Parallel).is_err());
        assert!(oberbeck_shape_factor(0.5, Direction::Perpendicular).is_err());
    }

    #[test]
    fn slender_ellipsoid_values() {
        // Independent evaluation of the closed form with ln(β + √(β²−1)).
        let beta: f64 = 0.5 / (1.33 / 64.0);
        let s = (beta * beta - 1.0).sqrt();
        let l = (beta + s).ln();
        let par = (4.0 / 3.0) * (beta * beta - 1.0) / ((2.0 * beta * beta - 1.0) / s * l - beta);
        let perp = (8.0 / 3.0) * (beta * beta - 1.0) / ((2.0 * beta * beta - 3.0) / s * l + beta);
        assert!((oberbeck_shape_factor(beta, Direction::Parallel).unwrap() - par).abs() < 1e-12 * par);
        assert!((oberbeck_shape_factor(beta, Direction::Perpendicular).unwrap() - perp).abs() < 1e-12 * perp);
        assert!((par - 4.746841).abs() < 1e-6, "{par}");
    }

    #[test]
    fn perpendicular_exceeds_parallel() {
        let mut beta = 1.01;
        while beta < 1e4 {
            let p = oberbeck_shape_factor(beta, Direction::Parallel).unwrap();
            let q = oberbeck_shape_factor(beta, Direction::Perpendicular).unwrap();
            assert!(q > p, "beta {beta}");
            beta *= 1.3;
        }
    }

    #[test]
    fn sbt_tensor_structure() {
        let t = Vec3::x();
        let beta = 24.0;
        let along = sbt_reference_velocity(&Vec3::new(2.0, 0.0, 0.0), &t, beta, 1.0);
        assert!(along.y == 0.0 && along.z == 0.0 && along.x > 0.0);
        let across = sbt_reference_velocity(&Vec3::new(0.0, 1.0, 0.0), &t, beta, 1.0);
        let expect = (-(1f64.exp() / (2.0 * beta).powi(2)).ln() + 2.0) / (8.0 * PI);
        assert!((across.y - expect).abs() < 1e-14);
        assert!(across.x.abs() < 1e-16);
        let thick = sbt_reference_velocity(&Vec3::new(0.0, 1.0, 0.0), &t, beta, 2.0);
        assert!((thick.y - across.y / 2.0).abs() < 1e-16);
    }

    #[test]
    fn sbt_and_oberbeck_agree_for_slender_bodies() {
        let a = 1.33 / 64.0;
        let beta = 0.5 / a;
        for d in [Direction::Parallel, Direction::Perpendicular] {
            let o = oberbeck_drag(a, beta, 1.0, d).unwrap();
            let s = sbt_drag(0.5, beta, 1.0, d);
            assert!((o - s).abs() / o < 0.01, "{d:?}: {o} vs {s}");
        }
    }
}
