//! Hydrodynamic radius of a marker and the local Stokes-drag correction.
//!
//! A marker of physical radius `R` on a grid whose markers behave like
//! spheres of radius `R_h` gets the missing mobility from a drag term:
//! `1/(6πμR) = 1/(6πμR_h) + ξ` with `ξ = 1/(6πμR_c)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Ratio `R_h / h` for the 4-point kernel with the spectral solver.
pub const DEFAULT_RADIUS_FACTOR: f64 = 1.33;

pub fn hydrodynamic_radius(h: f64, factor: f64) -> f64 {
    factor * h
}

/// `R_c = R_h R / (R_h − R)`, infinite when the grid already resolves `R`.
pub fn correction_radius(hydrodynamic: f64, physical: f64) -> Result<f64> {
    if !(physical.is_finite() && physical > 0.0) {
        return Err(invalid(format!("physical radius {physical} must be positive")));
    }
    if !(hydrodynamic > 0.0) {
        return Err(invalid(format!("hydrodynamic radius {hydrodynamic} must be positive")));
    }
    if physical > hydrodynamic {
        return Err(Error::Config(format!(
            "physical radius exceeds grid hydrodynamic radius ({physical} > {hydrodynamic})"
        )));
    }
    if physical == hydrodynamic || hydrodynamic.is_infinite() {
        return Ok(if hydrodynamic.is_infinite() { physical } else { f64::INFINITY });
    }
    Ok(hydrodynamic * physical / (hydrodynamic - physical))
}

/// `ξ = 1/(6πμR_c)`; zero for an infinite correction radius.
pub fn xi(correction: f64, mu: f64) -> f64 {
    if correction.is_infinite() {
        0.0
    } else {
        1.0 / (6.0 * PI * mu * correction)
    }
}

/// Stokes mobility `1/(6πμa)` of a sphere of radius `a`.
pub fn sphere_mobility(radius: f64, mu: f64) -> f64 {
    1.0 / (6.0 * PI * mu * radius)
}

/// How the cross-section radius varies along an ellipsoid's major axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EllipsoidProfile {
    /// `√(s(2b − s))/β`, the cross-section of the ellipsoid with half-axes `a`, `b`.
    #[default]
    Exact,
    /// `√(s(2b − s))/(2β)`, half the exact radius.
    Halved,
}

/// Cross-section radius at arclength `s ∈ (0, 2b)` from one tip.
pub fn ellipsoid_radius_profile(s: f64, half_major: f64, beta: f64, profile: EllipsoidProfile) -> Result<f64> {
    if !(s > 0.0 && s < 2.0 * half_major) {
        return Err(invalid(format!("arclength {s} outside (0, {})", 2.0 * half_major)));
    }
    if !(beta > 1.0) {
        return Err(invalid(format!("aspect ratio {beta} must exceed 1")));
    }
    let r = (s * (2.0 * half_major - s)).sqrt() / beta;
    Ok(match profile {
        EllipsoidProfile::Exact => r,
        EllipsoidProfile::Halved => 0.5 * r,
    })
}

/// Which velocity contributions a marker receives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// Grid velocity plus drag correction.
    #[default]
    Hybrid,
    /// Grid velocity only, markers sized by the grid.
    PlainIb,
    /// No grid: isolated spheres of the physical radius.
    PureDrag,
}

/// Marker spacing along a fiber of the requested length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spacing {
    pub markers: usize,
    pub ds: f64,
}

/// Grid-coupled models space markers one hydrodynamic radius apart; the
/// drag-only model lines up touching spheres of diameter `2R`.
pub fn marker_spacing_policy(model: Model, length: f64, hydrodynamic: f64, physical: f64) -> Result<Spacing> {
    let target = match model {
        Model::Hybrid | Model::PlainIb => hydrodynamic,
        Model::PureDrag => 2.0 * physical,
    };
    if !(target > 0.0 && target.is_finite() && length > 0.0) {
        return Err(invalid(format!("cannot space markers {target} apart on length {length}")));
    }
    let markers = ((length / target).round() as usize).max(3);
    Ok(Spacing {
        markers,
        ds: length / (markers - 1) as f64,
    })
}

/// Radii and drag coefficient for one marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DragParams {
    pub physical: f64,
    pub hydrodynamic: f64,
    pub correction: f64,
    pub xi: f64,
}

impl DragParams {
    pub fn new(physical: f64, hydrodynamic: f64, mu: f64) -> Result<Self> {
        let correction = correction_radius(hydrodynamic, physical)?;
        Ok(Self {
            physical,
            hydrodynamic,
            correction,
            xi: xi(correction, mu),
        })
    }

    /// Parameters for `model` on a grid of spacing `h`.
    pub fn for_model(model: Model, physical: f64, h: f64, factor: f64, mu: f64) -> Result<Self> {
        let rh = hydrodynamic_radius(h, factor);
        match model {
            Model::Hybrid => Self::new(physical, rh, mu),
            Model::PlainIb => Self::new(rh, rh, mu),
            Model::PureDrag => Ok(Self {
                physical,
                hydrodynamic: f64::INFINITY,
                correction: physical,
                xi: sphere_mobility(physical, mu),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn round3(x: f64) -> f64 {
        (x * 1000.0).round() / 1000.0
    }

    #[test]
    fn hydrodynamic_radius_examples() {
        assert_eq!(round3(hydrodynamic_radius(1.0 / 64.0, DEFAULT_RADIUS_FACTOR)), 0.021);
        assert_eq!(round3(hydrodynamic_radius(1.0 / 32.0, DEFAULT_RADIUS_FACTOR)), 0.042);
        assert_eq!(hydrodynamic_radius(0.1, 0.0), 0.0);
        assert!(correction_radius(0.0, 0.01).is_err());
    }

    #[test]
    fn correction_radius_examples() {
        assert!(correction_radius(0.02, 0.02).unwrap().is_infinite());
        assert_eq!(xi(f64::INFINITY, 1.0), 0.0);
        assert!((correction_radius(0.2, 0.1).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(round3(correction_radius(0.021, 0.0075).unwrap()), 0.012);
        let err = correction_radius(0.01, 0.02).unwrap_err().to_string();
        assert!(err.contains("physical radius exceeds grid hydrodynamic radius"));
        assert!(correction_radius(0.01, 0.0).is_err());
        assert!((xi(1.0 / (6.0 * PI), 1.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn correction_radius_table() {
        let rows = [(32.0, 0.042, 0.010), (64.0, 0.021, 0.013), (128.0, 0.010, 0.035)];
        for (n, rh, rc) in rows {
            let r_h = hydrodynamic_radius(1.0 / n, DEFAULT_RADIUS_FACTOR);
            assert_eq!(round3(r_h), rh);
            assert_eq!(round3(correction_radius(r_h, 0.008).unwrap()), rc);
        }
    }

    #[test]
    fn ellipsoid_profile() {
        let b = 0.5;
        let beta = 0.5 / (1.33 / 64.0);
        let mid = ellipsoid_radius_profile(b, b, beta, EllipsoidProfile::Halved).unwrap();
        assert!((mid - b / (2.0 * beta)).abs() < 1e-15);
        let exact = ellipsoid_radius_profile(b, b, beta, EllipsoidProfile::Exact).unwrap();
        assert!((exact - 1.33 / 64.0).abs() < 1e-15);
        assert!(ellipsoid_radius_profile(1e-12, b, beta, EllipsoidProfile::Exact).unwrap() < 1e-6);
        for s in [0.1, 0.37, 0.8] {
            let a = ellipsoid_radius_profile(s, b, beta, EllipsoidProfile::Exact).unwrap();
            let c = ellipsoid_radius_profile(2.0 * b - s, b, beta, EllipsoidProfile::Exact).unwrap();
            assert!((a - c).abs() < 1e-15);
        }
        assert!(ellipsoid_radius_profile(0.0, b, beta, EllipsoidProfile::Exact).is_err());
        assert!(ellipsoid_radius_profile(1.0, b, beta, EllipsoidProfile::Exact).is_err());
        assert!(ellipsoid_radius_profile(0.5, b, 1.0, EllipsoidProfile::Exact).is_err());
    }

    #[test]
    fn spacing_examples() {
        let s = marker_spacing_policy(Model::Hybrid, 0.5, 1.33 / 168.0, 0.008).unwrap();
        assert_eq!(s.markers, 63);
        let s = marker_spacing_policy(Model::PureDrag, 0.5, f64::INFINITY, 0.008).unwrap();
        assert_eq!(s.markers, 31);
        let s = marker_spacing_policy(Model::Hybrid, 1.0, 1.33 / 32.0, 0.01).unwrap();
        assert_eq!(s.markers, 24);
        assert!((s.ds - 1.0 / 23.0).abs() < 1e-15);
        assert!((s.ds - 0.0416).abs() / 0.0416 < 0.05);
    }

    #[test]
    fn model_parameters() {
        let plain = DragParams::for_model(Model::PlainIb, 0.008, 1.0 / 64.0, 1.33, 1.0).unwrap();
        assert_eq!(plain.xi, 0.0);
        let drag = DragParams::for_model(Model::PureDrag, 0.008, 1.0 / 64.0, 1.33, 1.0).unwrap();
        assert!((drag.xi - sphere_mobility(0.008, 1.0)).abs() < 1e-12);
        let hyb = DragParams::for_model(Model::Hybrid, 0.008, 1.0 / 64.0, 1.33, 1.0).unwrap();
        assert!(hyb.xi > 0.0 && hyb.xi < drag.xi);
    }

    proptest! {
        #[test]
        fn mobility_split_is_exact(r in 1e-4f64..1.0, frac in 0.01f64..0.99, mu in 0.1f64..10.0) {
            let rh = r / frac;
            let p = DragParams::new(r, rh, mu).unwrap();
            let lhs = sphere_mobility(r, mu);
            let rhs = sphere_mobility(rh, mu) + p.xi;
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs);
            prop_assert!((1.0 / r - 1.0 / rh - 1.0 / p.correction).abs() <= 1e-12 / r);
        }

        #[test]
        fn coarser_grid_needs_more_drag(r in 1e-3f64..0.1, a in 1.01f64..5.0, b in 1.01f64..5.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assume!(hi - lo > 1e-6);
            let fine = DragParams::new(r, lo * r, 1.0).unwrap();
            let coarse = DragParams::new(r, hi * r, 1.0).unwrap();
            prop_assert!(coarse.correction < fine.correction);
            prop_assert!(coarse.xi > fine.xi);
        }
    }
}
