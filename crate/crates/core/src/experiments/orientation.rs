//! Rejection sampling of fiber orientations in shear flow.
//!
//! `p = (cos θ, sin θ sin φ, sin θ cos φ)` with `x` the flow, `y` the
//! gradient and `z` the vorticity direction.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::interaction::Vec3;
use crate::rng::RngStream;

pub const SCAN_THETA: usize = 721;
pub const SCAN_PHI: usize = 1440;
pub const BOUND_SAFETY: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrientationDistribution {
    pub r_const: f64,
    pub r_e: f64,
}

impl Default for OrientationDistribution {
    fn default() -> Self {
        Self::for_aspect_ratio(33.0)
    }
}

impl OrientationDistribution {
    pub fn new(r_const: f64, r_e: f64) -> Result<Self> {
        let d = Self { r_const, r_e };
        d.validate()?;
        Ok(d)
    }

    /// `R = 3` and the cylinder-adjusted ratio `r_e = 0.7 r_p`.
    pub fn for_aspect_ratio(r_p: f64) -> Self {
        Self {
            r_const: 3.0,
            r_e: 0.7 * r_p,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r_const > 0.0 && self.r_const.is_finite()) {
            return Err(invalid("orientation constant R must be positive"));
        }
        if !(self.r_e > 1.0 && self.r_e.is_finite()) {
            return Err(invalid("effective aspect ratio r_e must exceed 1"));
        }
        Ok(())
    }

    pub fn density(&self, theta: f64, phi: f64) -> f64 {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let r = self.r_const;
        let q = 4.0 * r * (ct * ct / (self.r_e * self.r_e) + st * st * cp * cp) + st * st * sp * sp;
        r / (PI * self.r_e * q.powf(1.5))
    }

    /// `Ω(θ, φ) sin θ`, the density with respect to `dθ dφ`.
    pub fn weighted(&self, theta: f64, phi: f64) -> f64 {
        self.density(theta, phi) * theta.sin()
    }

    /// Maximum of `Ω sin θ` on the scan lattice.
    pub fn scan_max(&self) -> f64 {
        let mut best: f64 = 0.0;
        for i in 0..SCAN_THETA {
            let theta = PI * i as f64 / (SCAN_THETA - 1) as f64;
            for j in 0..SCAN_PHI {
                let phi = 2.0 * PI * j as f64 / SCAN_PHI as f64;
                best = best.max(self.weighted(theta, phi));
            }
        }
        best
    }

    /// `∫∫ Ω sin θ dθ dφ` over `[θ0, θ1] × [φ0, φ1]` by the midpoint rule on
    /// `sub × sub` cells.
    pub fn mass(&self, theta: [f64; 2], phi: [f64; 2], sub: usize) -> f64 {
        let dt = (theta[1] - theta[0]) / sub as f64;
        let dp = (phi[1] - phi[0]) / sub as f64;
        let mut total = 0.0;
        for i in 0..sub {
            let t = theta[0] + (i as f64 + 0.5) * dt;
            for j in 0..sub {
                total += self.weighted(t, phi[0] + (j as f64 + 0.5) * dp);
            }
        }
        total * dt * dp
    }
}

pub fn direction(theta: f64, phi: f64) -> Vec3 {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    Vec3::new(ct, st * sp, st * cp)
}

/// Rejection sampler with a precomputed bound.
#[derive(Debug, Clone, Copy)]
pub struct OrientationSampler {
    pub dist: OrientationDistribution,
    pub bound: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Orientation {
    pub theta: f64,
    pub phi: f64,
    pub p: Vec3,
    /// Proposals drawn, including the accepted one.
    pub proposals: u64,
}

impl OrientationSampler {
    pub fn new(dist: OrientationDistribution) -> Result<Self> {
        dist.validate()?;
        Ok(Self {
            dist,
            bound: BOUND_SAFETY * dist.scan_max(),
        })
    }

    pub fn sample(&self, rng: &mut RngStream) -> Result<Orientation> {
        let mut proposals = 0;
        loop {
            proposals += 1;
            let theta = PI * rng.next_f64();
            let phi = 2.0 * PI * rng.next_f64();
            let q = self.bound * rng.next_f64();
            let w = self.dist.weighted(theta, phi);
            if w > self.bound {
                return Err(invalid(format!(
                    "orientation bound violated: Ω sin θ = {w:e} > {:e} at θ = {theta}, φ = {phi}",
                    self.bound
                )));
            }
            if q < w {
                return Ok(Orientation {
                    theta,
                    phi,
                    p: direction(theta, phi),
                    proposals,
                });
            }
        }
    }
}

pub fn sample_orientation(dist: &OrientationDistribution, rng: &mut RngStream) -> Result<Vec3> {
    Ok(OrientationSampler::new(*dist)?.sample(rng)?.p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    /// Bins after merging those with expected count below five.
    pub bins: usize,
}

/// Pearson χ² of `(θ, φ)` samples against `Ω sin θ` on a `bins × bins`
/// histogram. Expected counts come from quadrature, normalized by the
/// total mass; low-expectation bins are merged in scan order.
pub fn chi_square(dist: &OrientationDistribution, samples: &[(f64, f64)], bins: usize, sub: usize) -> ChiSquare {
    let dt = PI / bins as f64;
    let dp = 2.0 * PI / bins as f64;
    let mut observed = vec![0.0; bins * bins];
    for &(t, p) in samples {
        let i = ((t / dt) as usize).min(bins - 1);
        let j = ((p / dp) as usize).min(bins - 1);
        observed[i * bins + j] += 1.0;
    }
    let mut masses = Vec::with_capacity(bins * bins);
    for i in 0..bins {
        for j in 0..bins {
            let th = [i as f64 * dt, (i + 1) as f64 * dt];
            let ph = [j as f64 * dp, (j + 1) as f64 * dp];
            masses.push(dist.mass(th, ph, sub));
        }
    }
    let total: f64 = masses.iter().sum();
    let n = samples.len() as f64;
    let mut merged = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (o, m) in observed.iter().zip(&masses) {
        o_acc += o;
        e_acc += n * m / total;
        if e_acc >= 5.0 {
            merged.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if e_acc > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += o_acc;
                last.1 += e_acc;
            }
            None => merged.push((o_acc, e_acc)),
        }
    }
    let statistic = merged.iter().map(|(o, e)| (o - e) * (o - e) / e).sum();
    ChiSquare {
        statistic,
        dof: merged.len().saturating_sub(1),
        bins: merged.len(),
    }
}
