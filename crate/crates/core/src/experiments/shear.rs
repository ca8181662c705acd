//! A single flexible fiber in background shear, and classification of its motion.

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Series};
use crate::config::MeshWidth;
use crate::drag::{hydrodynamic_radius, marker_spacing_policy, DragParams, Model, DEFAULT_RADIUS_FACTOR};
use crate::error::{invalid, Result};
use crate::fiber::{BendingNormalization, Fiber};
use crate::grid::Grid;
use crate::interaction::Vec3;
use crate::stepper::{Coupling, Scheme, SchemeConfig, Simulation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShearParams {
    /// Elasto-viscous number `μ L⁴ γ̇ / K_b`.
    pub eta_tilde: f64,
    pub h: MeshWidth,
    pub shear_rate: f64,
    pub mu: f64,
    pub length: f64,
    pub ks: f64,
    /// Physical radius; half the hydrodynamic radius when absent.
    pub radius: Option<f64>,
    pub perturbation: f64,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    pub output_interval: f64,
    pub radius_factor: f64,
    pub bending: BendingNormalization,
    pub domain: [f64; 3],
}

impl Default for ShearParams {
    fn default() -> Self {
        Self {
            eta_tilde: 450.0,
            h: MeshWidth::new(1.0 / 32.0),
            shear_rate: 3.0,
            mu: 1.0,
            length: 1.0,
            ks: 100.0,
            radius: None,
            perturbation: 0.1,
            scheme: Scheme::ImplicitBendingTension,
            dt: 1e-3,
            t_end: 10.0,
            output_interval: 0.05,
            radius_factor: DEFAULT_RADIUS_FACTOR,
            bending: BendingNormalization::default(),
            domain: [2.0, 2.0, 0.25],
        }
    }
}

impl ShearParams {
    pub fn kb(&self) -> f64 {
        self.mu * self.length.powi(4) * self.shear_rate / self.eta_tilde
    }

    pub fn radius(&self) -> f64 {
        self.radius
            .unwrap_or_else(|| 0.5 * hydrodynamic_radius(self.h.value(), self.radius_factor))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::from_extent(self.domain, self.h.value(), self.mu)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta_tilde > 0.0 && self.eta_tilde.is_finite()) {
            return Err(invalid("eta_tilde must be positive"));
        }
        if !(self.shear_rate > 0.0 && self.length > 0.0) {
            return Err(invalid("shear rate and fiber length must be positive"));
        }
        if !(self.t_end > 0.0 && self.output_interval > 0.0) {
            return Err(invalid("t_end and output_interval must be positive"));
        }
        self.grid()?;
        SchemeConfig::new(self.scheme, self.dt).validate()?;
        self.fiber()?;
        Ok(())
    }

    /// Straight fiber along `x` with an exponential bump in `y`, centred on zero.
    pub fn fiber(&self) -> Result<Fiber> {
        let drag = DragParams::for_model(Model::Hybrid, self.radius(), self.h.value(), self.radius_factor, self.mu)?;
        let spacing = marker_spacing_policy(Model::Hybrid, self.length, drag.hydrodynamic, drag.physical)?;
        let l = self.length;
        let mean_exp = (1.0 - (-l).exp()) / l;
        let pts = (0..spacing.markers)
            .map(|k| {
                let s = k as f64 * spacing.ds;
                Vec3::new(s - l / 2.0, self.perturbation * ((-s).exp() - mean_exp), 0.0)
            })
            .collect();
        Ok(Fiber::with_uniform_xi(pts, spacing.ds, self.ks, self.kb(), drag.xi)?.with_bending(self.bending))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Tumbling,
    Buckling,
    Snaking,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Tumbling => "tumbling",
            Mode::Buckling => "buckling",
            Mode::Snaking => "snaking",
        }
    }
}

/// End-to-end distance below which the fiber counts as deformed.
pub const TUMBLING_EXTENSION: f64 = 0.9;

/// Discrete curvature magnitude `‖X_{k+1} − 2X_k + X_{k−1}‖/Δs²` at interior markers.
pub fn curvature_profile(x: &[Vec3], ds: f64) -> Vec<f64> {
    x.windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).norm() / (ds * ds))
        .collect()
}

/// Arclength fraction of the curvature maximum.
fn curvature_peak(x: &[Vec3], ds: f64) -> f64 {
    let peak = curvature_profile(x, ds)
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) })
        .0;
    (peak + 1) as f64 / (x.len() - 1) as f64
}

/// Tumbling if the fiber never shortens below `TUMBLING_EXTENSION` of its
/// length. Otherwise buckling if the curvature peak stays in the central third
/// of the arclength from the onset of deformation until the time of minimum
/// extension, else snaking.
pub fn classify_mode(trajectory: &[Vec<Vec3>], length: f64, ds: f64) -> Result<Mode> {
    if trajectory.is_empty() || trajectory[0].len() < 3 {
        return Err(invalid("trajectory needs at least one frame of three markers"));
    }
    let extension: Vec<f64> = trajectory
        .iter()
        .map(|x| (x[x.len() - 1] - x[0]).norm() / length)
        .collect();
    let (deepest, e_min) = extension
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, be), (i, &e)| if e < be { (i, e) } else { (bi, be) });
    if e_min >= TUMBLING_EXTENSION {
        return Ok(Mode::Tumbling);
    }
    let onset = extension
        .iter()
        .position(|&e| e < TUMBLING_EXTENSION)
        .expect("minimum is below the threshold");
    let central = (onset..=deepest)
        .all(|i| (1.0 / 3.0..=2.0 / 3.0).contains(&curvature_peak(&trajectory[i], ds)));
    Ok(if central { Mode::Buckling } else { Mode::Snaking })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShearRun {
    pub times: Vec<f64>,
    pub frames: Vec<Vec<Vec3>>,
    pub mode: Mode,
    pub max_length_change: f64,
    pub kb: f64,
    pub ds: f64,
}

impl ShearRun {
    pub fn extension(&self, length: f64) -> Vec<f64> {
        self.frames
            .iter()
            .map(|x| (x[x.len() - 1] - x[0]).norm() / length)
            .collect()
    }
}

pub fn shear_fiber_experiment(params: &ShearParams) -> Result<ShearRun> {
    params.validate()?;
    let fiber = params.fiber()?;
    let ds = fiber.ds;
    let l0 = fiber.contour_length();
    let cfg = SchemeConfig::new(params.scheme, params.dt).with_shear(params.shear_rate);
    let mut sim = Simulation::new(params.grid()?, vec![fiber], cfg, Coupling::Grid)?;
    let steps = (params.t_end / params.dt).round() as u64;
    let every = ((params.output_interval / params.dt).round() as u64).max(1);
    let mut times = vec![0.0];
    let mut frames = vec![sim.state.fibers[0].positions.clone()];
    let mut max_length_change: f64 = 0.0;
    for _ in 0..steps {
        sim.step()?;
        let f = &sim.state.fibers[0];
        max_length_change = max_length_change.max((f.contour_length() - l0).abs() / l0);
        if sim.state.step % every == 0 {
            times.push(sim.state.time);
            frames.push(f.positions.clone());
        }
    }
    let mode = classify_mode(&frames, params.length, ds)?;
    Ok(ShearRun {
        times,
        frames,
        mode,
        max_length_change,
        kb: params.kb(),
        ds,
    })
}

pub fn run(params: &ShearParams, seed: u64) -> Result<ExperimentReport> {
    let out = shear_fiber_experiment(params)?;
    let mut report = ExperimentReport::new("shear", seed, params);
    let ext = out.extension(params.length);
    report
        .scalar("kb", out.kb, "pN um^2")
        .scalar("min_extension", ext.iter().cloned().fold(f64::INFINITY, f64::min), "1")
        .scalar("max_length_change", out.max_length_change, "1")
        .label("mode", out.mode.as_str());
    let mut series = Series::new("extension", &["t", "extension"]);
    for (t, e) in out.times.iter().zip(&ext) {
        series.push(vec![*t, *e]);
    }
    report.series.push(series);
    let n = out.frames[0].len();
    let mut columns = vec!["t".to_string()];
    for k in 0..n {
        for c in ["x", "y", "z"] {
            columns.push(format!("{c}{k}"));
        }
    }
    let mut shape = Series {
        name: "positions".into(),
        columns,
        rows: Vec::new(),
    };
    for (t, x) in out.times.iter().zip(&out.frames) {
        let mut row = vec![*t];
        row.extend(x.iter().flat_map(|p| [p.x, p.y, p.z]));
        shape.push(row);
    }
    report.series.push(shape);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rod(angle: f64, n: usize) -> Vec<Vec3> {
        (0..n)
            .map(|k| {
                let s = k as f64 / (n - 1) as f64 - 0.5;
                Vec3::new(s * angle.cos(), s * angle.sin(), 0.0)
            })
            .collect()
    }

    /// Arc of total length 1 bending by `turn` radians over the arclength
    /// interval `[a, b]`, straight elsewhere.
    fn bent(n: usize, a: f64, b: f64, turn: f64) -> Vec<Vec3> {
        let ds = 1.0 / (n - 1) as f64;
        let mut x = vec![Vec3::zeros()];
        let mut angle = 0.0;
        for k in 1..n {
            let s = (k as f64 - 0.5) * ds;
            if s > a && s < b {
                angle += turn * ds / (b - a);
            }
            let last = x[k - 1];
            x.push(last + ds * Vec3::new(angle.cos(), angle.sin(), 0.0));
        }
        x
    }

    #[test]
    fn stiffness_from_elasto_viscous_number() {
        let kb = |eta| ShearParams { eta_tilde: eta, ..Default::default() }.kb();
        assert!((kb(150.0) - 0.02).abs() < 1e-15);
        assert!((kb(450.0) - 0.00667).abs() < 1e-5);
        assert!((kb(7500.0) - 4e-4).abs() < 1e-15);
    }

    #[test]
    fn default_fiber() {
        let p = ShearParams::default();
        let f = p.fiber().unwrap();
        assert_eq!(f.len(), 24);
        let mean_y: f64 = f.positions.iter().map(|x| x.y).sum::<f64>() / 24.0;
        assert!(mean_y.abs() < 5e-3);
        let rh = 1.33 / 32.0;
        assert!((p.radius() - rh / 2.0).abs() < 1e-15);
        let d = DragParams::for_model(Model::Hybrid, p.radius(), 1.0 / 32.0, 1.33, 1.0).unwrap();
        assert!((d.correction - rh).abs() < 1e-12);
    }

    #[test]
    fn rigid_rotating_rod_tumbles() {
        let frames: Vec<_> = (0..20).map(|i| rod(PI * i as f64 / 20.0, 24)).collect();
        assert_eq!(classify_mode(&frames, 1.0, 1.0 / 23.0).unwrap(), Mode::Tumbling);
    }

    #[test]
    fn symmetric_c_shape_buckles() {
        let frames: Vec<_> = (0..10).map(|i| bent(24, 0.35, 0.65, 0.3 * i as f64)).collect();
        assert_eq!(classify_mode(&frames, 1.0, 1.0 / 23.0).unwrap(), Mode::Buckling);
    }

    #[test]
    fn end_localized_j_shape_snakes() {
        let frames: Vec<_> = (0..10).map(|i| bent(24, 0.0, 0.2, 0.35 * i as f64)).collect();
        assert_eq!(classify_mode(&frames, 1.0, 1.0 / 23.0).unwrap(), Mode::Snaking);
    }

    #[test]
    fn fold_travelling_in_from_an_end_snakes() {
        let frames: Vec<_> = (0..12)
            .map(|i| {
                let a = 0.05 + 0.03 * i as f64;
                bent(24, a, a + 0.15, 0.3 * i as f64)
            })
            .collect();
        let last = frames.last().unwrap();
        assert!((1.0 / 3.0..=2.0 / 3.0).contains(&curvature_peak(last, 1.0 / 23.0)));
        assert_eq!(classify_mode(&frames, 1.0, 1.0 / 23.0).unwrap(), Mode::Snaking);
    }

    #[test]
    fn empty_trajectory_is_rejected() {
        assert!(classify_mode(&[], 1.0, 0.1).is_err());
    }
}
