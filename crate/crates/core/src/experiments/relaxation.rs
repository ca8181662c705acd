//! Two opposed bent fibers relaxing toward straight lines.
//!
//! Fiber 1 follows `y = −c + ℓ (2x/L)²` and fiber 2 is its mirror image in
//! `y`, so the ends are closest. Markers are placed by marching equal chords
//! outward from the centre, which leaves every gap at its rest length, and
//! `c` is chosen so the initial minimum separation is exactly `Δy(0)`.

use serde::{Deserialize, Serialize};

use super::{ExperimentReport, Series};
use crate::config::MeshWidth;
use crate::drag::{marker_spacing_policy, DragParams, Model, DEFAULT_RADIUS_FACTOR};
use crate::error::{invalid, Error, Result};
use crate::fiber::{BendingNormalization, Fiber};
use crate::grid::Grid;
use crate::interaction::Vec3;
use crate::stepper::{Coupling, Scheme, SchemeConfig, Simulation};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxParams {
    pub h: MeshWidth,
    pub model: Model,
    pub scheme: Scheme,
    pub dt: f64,
    pub t_end: f64,
    /// Spacing of recorded samples (s); rounded to a whole number of steps.
    pub output_interval: f64,
    pub length: f64,
    pub radius: f64,
    pub ks: f64,
    pub kb: f64,
    /// Deviation `ℓ` of the fibers from straight (μm).
    pub amplitude: f64,
    /// Initial minimum separation `Δy(0)` (μm).
    pub separation: f64,
    pub mu: f64,
    pub radius_factor: f64,
    pub bending: BendingNormalization,
    pub domain: [f64; 3],
    /// CSV with columns `t, dy` to compare against.
    pub reference: Option<String>,
}

impl Default for RelaxParams {
    fn default() -> Self {
        Self {
            h: MeshWidth::new(1.0 / 64.0),
            model: Model::Hybrid,
            scheme: Scheme::ImplicitBending,
            dt: 1e-4,
            t_end: 0.02,
            output_interval: 1e-4,
            length: 0.5,
            radius: 0.008,
            ks: 100.0,
            kb: 0.25,
            amplitude: 0.1,
            separation: 0.045,
            mu: 1.0,
            radius_factor: DEFAULT_RADIUS_FACTOR,
            bending: BendingNormalization::default(),
            domain: [1.0, 1.0, 0.25],
            reference: None,
        }
    }
}

impl RelaxParams {
    pub fn validate(&self) -> Result<()> {
        self.grid()?;
        self.drag()?;
        SchemeConfig::new(self.scheme, self.dt).validate()?;
        if !(self.t_end > 0.0 && self.output_interval > 0.0) {
            return Err(invalid("t_end and output_interval must be positive"));
        }
        if !(self.separation > 0.0 && self.amplitude >= 0.0 && self.length > 0.0) {
            return Err(invalid("fiber length and separation must be positive, amplitude non-negative"));
        }
        self.fibers()?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::from_extent(self.domain, self.h.value(), self.mu)
    }

    pub fn drag(&self) -> Result<DragParams> {
        DragParams::for_model(self.model, self.radius, self.h.value(), self.radius_factor, self.mu)
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn steps_per_output(&self) -> u64 {
        ((self.output_interval / self.dt).round() as u64).max(1)
    }

    /// The two initial fibers.
    pub fn fibers(&self) -> Result<Vec<Fiber>> {
        let drag = self.drag()?;
        let spacing = marker_spacing_policy(self.model, self.length, drag.hydrodynamic, self.radius)?;
        let shape = parabola_chain(spacing.markers, spacing.ds, self.amplitude, self.length)?;
        let top = shape.iter().fold(f64::NEG_INFINITY, |m, p| m.max(p.y));
        let offset = 0.5 * self.separation + top;
        let lower: Vec<Vec3> = shape.iter().map(|p| Vec3::new(p.x, p.y - offset, 0.0)).collect();
        let upper: Vec<Vec3> = lower.iter().map(|p| Vec3::new(p.x, -p.y, 0.0)).collect();
        [lower, upper]
            .into_iter()
            .map(|x| {
                Fiber::with_uniform_xi(x, spacing.ds, self.ks, self.kb, drag.xi).map(|f| f.with_bending(self.bending))
            })
            .collect()
    }
}

/// `n` points on `y = amp (2x/len)²` with consecutive chords exactly `ds`,
/// symmetric about `x = 0`.
pub fn parabola_chain(n: usize, ds: f64, amp: f64, len: f64) -> Result<Vec<Vec3>> {
    let y = |x: f64| amp * (2.0 * x / len).powi(2);
    let mut right = Vec::with_capacity(n / 2 + 1);
    let mut x0 = if n % 2 == 1 { 0.0 } else { 0.5 * ds };
    right.push(x0);
    while right.len() < n.div_ceil(2) {
        // Chord length grows monotonically with x on the right branch.
        let chord = |x: f64| ((x - x0).powi(2) + (y(x) - y(x0)).powi(2)).sqrt();
        let (mut lo, mut hi) = (x0, x0 + ds);
        if chord(hi) < ds {
            return Err(invalid("chord marching failed"));
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if chord(mid) < ds {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        x0 = 0.5 * (lo + hi);
        right.push(x0);
    }
    let mut xs: Vec<f64> = right.iter().rev().map(|x| -x).collect();
    let skip = usize::from(n % 2 == 1);
    xs.extend(right.iter().skip(skip));
    Ok(xs.into_iter().map(|x| Vec3::new(x, y(x), 0.0)).collect())
}

/// `min_k (y₂ₖ − y₁ₖ)` over matching markers.
pub fn separation(lower: &Fiber, upper: &Fiber) -> f64 {
    lower
        .positions
        .iter()
        .zip(&upper.positions)
        .map(|(a, b)| b.y - a.y)
        .fold(f64::INFINITY, f64::min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Relaxation {
    /// `(t, Δy)` at each output time.
    pub separation: Vec<(f64, f64)>,
    pub stable: bool,
    pub failure: Option<String>,
    /// Largest relative contour-length change seen.
    pub max_length_change: f64,
    pub markers: usize,
}

pub fn two_fiber_relaxation(params: &RelaxParams) -> Result<Relaxation> {
    params.validate()?;
    let fibers = params.fibers()?;
    let markers = fibers[0].len();
    let rest: Vec<f64> = fibers.iter().map(|f| f.contour_length()).collect();
    let coupling = match params.model {
        Model::PureDrag => Coupling::None,
        Model::Hybrid | Model::PlainIb => Coupling::Grid,
    };
    let mut sim = Simulation::new(params.grid()?, fibers, SchemeConfig::new(params.scheme, params.dt), coupling)?;
    let every = params.steps_per_output();
    let mut out = vec![(0.0, separation(&sim.state.fibers[0], &sim.state.fibers[1]))];
    let mut max_length_change: f64 = 0.0;
    let mut failure = None;
    for _ in 0..params.steps() {
        match sim.step() {
            Ok(()) => {}
            Err(e) if e.is_numerical() => {
                failure = Some(e.to_string());
                break;
            }
            Err(e) => return Err(e),
        }
        for (f, l0) in sim.state.fibers.iter().zip(&rest) {
            max_length_change = max_length_change.max((f.contour_length() - l0).abs() / l0);
        }
        if sim.state.step % every == 0 {
            out.push((sim.state.time, separation(&sim.state.fibers[0], &sim.state.fibers[1])));
        }
    }
    Ok(Relaxation {
        separation: out,
        stable: failure.is_none(),
        failure,
        max_length_change,
        markers,
    })
}

/// Linear interpolation of a sampled curve; `None` outside its range.
fn sample_at(curve: &[(f64, f64)], t: f64) -> Option<f64> {
    let i = curve.partition_point(|(s, _)| *s < t);
    if i == curve.len() {
        let (s, v) = *curve.last()?;
        return ((t - s).abs() <= 1e-9 * t.abs().max(1.0)).then_some(v);
    }
    let (t1, v1) = curve[i];
    if (t1 - t).abs() <= 1e-12 * t.abs().max(1.0) {
        return Some(v1);
    }
    if i == 0 {
        return None;
    }
    let (t0, v0) = curve[i - 1];
    Some(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
}

/// `max_t |Δy(t) − Δy_ref(t)| / Δy_ref(0)` over the common time range.
pub fn max_relative_error(run: &[(f64, f64)], reference: &[(f64, f64)]) -> Result<f64> {
    let scale = reference.first().ok_or_else(|| invalid("empty reference series"))?.1;
    let mut worst: f64 = 0.0;
    let mut compared = 0;
    for (t, v) in run {
        if let Some(r) = sample_at(reference, *t) {
            worst = worst.max((v - r).abs());
            compared += 1;
        }
    }
    if compared == 0 {
        return Err(invalid("run and reference share no time range"));
    }
    Ok(worst / scale)
}

/// Read `t, dy` pairs from a CSV written by this experiment.
pub fn read_separation_csv(path: &str) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record
                .get(i)
                .and_then(|s| s.trim().parse().ok())
                .ok_or_else(|| Error::Config(format!("bad row in reference '{path}'")))
        };
        out.push((parse(0)?, parse(1)?));
    }
    Ok(out)
}

/// Largest timestep from `candidates` that completes the run without blowing up.
pub fn largest_stable_timestep(params: &RelaxParams, candidates: &[f64]) -> Result<Option<f64>> {
    let mut best = None;
    for &dt in candidates {
        let run = two_fiber_relaxation(&RelaxParams {
            dt,
            output_interval: params.output_interval.max(dt),
            ..params.clone()
        })?;
        if run.stable && best.is_none_or(|b| dt > b) {
            best = Some(dt);
        }
    }
    Ok(best)
}

pub fn run(params: &RelaxParams, seed: u64) -> Result<ExperimentReport> {
    let out = two_fiber_relaxation(params)?;
    let mut report = ExperimentReport::new("relax", seed, params);
    let (t_last, dy_last) = *out.separation.last().expect("initial sample present");
    report
        .scalar("initial_separation", out.separation[0].1, "um")
        .scalar("final_separation", dy_last, "um")
        .scalar("final_time", t_last, "s")
        .scalar("max_length_change", out.max_length_change, "1")
        .scalar("markers", out.markers as f64, "count")
        .flag("stable", out.stable);
    if let Some(reason) = &out.failure {
        report.label("failure", reason.clone());
    }
    if let Some(path) = &params.reference {
        let reference = read_separation_csv(path)?;
        report.scalar("max_relative_error", max_relative_error(&out.separation, &reference)?, "1");
    }
    let mut series = Series::new("separation", &["t", "dy"]);
    for (t, dy) in &out.separation {
        series.push(vec![*t, *dy]);
    }
    report.series.push(series);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_has_rest_length_gaps_and_symmetry() {
        for n in [7, 24, 31, 48] {
            let ds = 0.5 / (n - 1) as f64;
            let pts = parabola_chain(n, ds, 0.1, 0.5).unwrap();
            assert_eq!(pts.len(), n);
            for w in pts.windows(2) {
                assert!(((w[1] - w[0]).norm() - ds).abs() < 1e-12);
            }
            for k in 0..n {
                assert!((pts[k].x + pts[n - 1 - k].x).abs() < 1e-14);
                assert!((pts[k].y - pts[n - 1 - k].y).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn initial_configuration() {
        let p = RelaxParams::default();
        let fibers = p.fibers().unwrap();
        assert!((separation(&fibers[0], &fibers[1]) - 0.045).abs() < 1e-14);
        assert_eq!(fibers[0].len(), 24);
        for f in &fibers {
            assert!(crate::fiber::stretching_force(f).unwrap().iter().all(|v| v.norm() < 1e-9));
        }
        // Ends are closest; centres are furthest apart.
        let gap = |k: usize| fibers[1].positions[k].y - fibers[0].positions[k].y;
        assert!(gap(0) < gap(12));
        let drag = RelaxParams { model: Model::PureDrag, ..p.clone() }.fibers().unwrap();
        assert_eq!(drag[0].len(), 31);
        let fine = RelaxParams { h: MeshWidth::new(1.0 / 168.0), model: Model::PlainIb, ..p }.fibers().unwrap();
        assert_eq!(fine[0].len(), 63);
    }

    #[test]
    fn hybrid_rejects_resolved_grid() {
        let p = RelaxParams {
            h: MeshWidth::new(1.0 / 256.0),
            ..Default::default()
        };
        assert!(p.validate().unwrap_err().to_string().contains("physical radius exceeds"));
    }

    #[test]
    fn error_metric() {
        let reference = vec![(0.0, 0.04), (1.0, 0.05), (2.0, 0.06)];
        let run = vec![(0.0, 0.04), (0.5, 0.046), (2.0, 0.058)];
        let e = max_relative_error(&run, &reference).unwrap();
        assert!((e - 0.002 / 0.04).abs() < 1e-12);
        assert!(max_relative_error(&[(5.0, 1.0)], &reference).is_err());
    }

    #[test]
    fn pure_drag_relaxation_separates_fibers() {
        let p = RelaxParams {
            model: Model::PureDrag,
            dt: 1e-6,
            t_end: 2e-3,
            ..Default::default()
        };
        let out = two_fiber_relaxation(&p).unwrap();
        assert!(out.stable);
        assert!(out.separation.last().unwrap().1 > out.separation[0].1);
    }
}
