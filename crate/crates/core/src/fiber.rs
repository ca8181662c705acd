//! Discrete elastic fibers: energies, forces and their linearizations.
//!
//! A fiber is a chain of `N` markers with rest spacing `Δs`. Stretching uses
//! the tension `T(R) = K_s (R/Δs − 1)` on every gap; bending penalizes the
//! second differences `D_k = X_{k+1} − 2X_k + X_{k−1}` of interior markers.
//! Free ends fall out of the sums: no ghost markers.

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{invalid, Error, Result};
use crate::interaction::Vec3;

/// How the squared second difference is weighted in the bending energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BendingNormalization {
    /// `E_b = (K_b/2) Σ ‖D_k‖²/Δs³`, the discrete `∫ κ² ds` with `K_b` in pN·μm².
    #[default]
    Curvature,
    /// `E_b = (K_b/2) Σ ‖D_k‖²/Δs² · Δs`.
    Literal,
}

impl BendingNormalization {
    /// Factor `c` in `E_b = (K_b c / 2) Σ ‖D_k‖²`.
    pub fn weight(self, ds: f64) -> f64 {
        match self {
            BendingNormalization::Curvature => 1.0 / (ds * ds * ds),
            BendingNormalization::Literal => 1.0 / ds,
        }
    }
}

/// One elastic fiber.
#[derive(Debug, Clone, PartialEq)]
pub struct Fiber {
    /// Marker positions (μm), stored unwrapped.
    pub positions: Vec<Vec3>,
    /// Rest spacing Δs (μm).
    pub ds: f64,
    /// Stretching stiffness K_s (pN).
    pub ks: f64,
    /// Bending stiffness K_b (pN·μm²).
    pub kb: f64,
    /// Local drag coefficient ξ_k per marker ((μm/s)/pN).
    pub xi: Vec<f64>,
    pub bending: BendingNormalization,
}

impl Fiber {
    pub fn new(positions: Vec<Vec3>, ds: f64, ks: f64, kb: f64, xi: Vec<f64>) -> Result<Self> {
        let fiber = Self {
            positions,
            ds,
            ks,
            kb,
            xi,
            bending: BendingNormalization::default(),
        };
        fiber.validate()?;
        Ok(fiber)
    }

    /// Same fiber with uniform drag coefficient `xi` on every marker.
    pub fn with_uniform_xi(positions: Vec<Vec3>, ds: f64, ks: f64, kb: f64, xi: f64) -> Result<Self> {
        let n = positions.len();
        Self::new(positions, ds, ks, kb, vec![xi; n])
    }

    pub fn with_bending(mut self, bending: BendingNormalization) -> Self {
        self.bending = bending;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.positions.len();
        if n < 3 {
            return Err(invalid(format!("fiber needs at least 3 markers, got {n}")));
        }
        if !(self.ds.is_finite() && self.ds > 0.0) {
            return Err(invalid(format!("rest spacing ds = {} must be positive", self.ds)));
        }
        if !(self.ks.is_finite() && self.ks >= 0.0) {
            return Err(invalid(format!("stretching stiffness Ks = {} must be non-negative", self.ks)));
        }
        if !(self.kb.is_finite() && self.kb >= 0.0) {
            return Err(invalid(format!("bending stiffness Kb = {} must be non-negative", self.kb)));
        }
        if self.xi.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                actual: self.xi.len(),
            });
        }
        if self.xi.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(invalid("drag coefficients xi must be finite and non-negative"));
        }
        if self.positions.iter().any(|x| !x.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite("fiber positions"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Sum of gap lengths.
    pub fn contour_length(&self) -> f64 {
        self.positions.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    pub fn end_to_end(&self) -> f64 {
        (self.positions[self.len() - 1] - self.positions[0]).norm()
    }

    fn tension(&self, r: f64) -> f64 {
        self.ks * (r / self.ds - 1.0)
    }

    fn bending_weight(&self) -> f64 {
        self.kb * self.bending.weight(self.ds)
    }
}

pub fn stretching_energy(fiber: &Fiber) -> f64 {
    let strain: f64 = fiber
        .positions
        .windows(2)
        .map(|w| ((w[1] - w[0]).norm() / fiber.ds - 1.0).powi(2))
        .sum();
    0.5 * fiber.ks * strain * fiber.ds
}

pub fn bending_energy(fiber: &Fiber) -> f64 {
    let sum: f64 = fiber
        .positions
        .windows(3)
        .map(|w| (w[2] - 2.0 * w[1] + w[0]).norm_squared())
        .sum();
    0.5 * fiber.bending_weight() * sum
}

/// Unit gap vectors and lengths: entry `g` joins markers `g` and `g + 1`.
fn gaps(fiber: &Fiber) -> Result<Vec<(Vec3, f64)>> {
    fiber
        .positions
        .windows(2)
        .enumerate()
        .map(|(g, w)| {
            let d = w[1] - w[0];
            let r = d.norm();
            if r == 0.0 {
                Err(Error::DegenerateGeometry { gap: g })
            } else {
                Ok((d / r, r))
            }
        })
        .collect()
}

/// `F_s = −∂E_s/∂X`, one force per marker (pN).
pub fn stretching_force(fiber: &Fiber) -> Result<Vec<Vec3>> {
    let mut f = vec![Vec3::zeros(); fiber.len()];
    for (g, (tau, r)) in gaps(fiber)?.into_iter().enumerate() {
        let pull = fiber.tension(r) * tau;
        f[g] += pull;
        f[g + 1] -= pull;
    }
    Ok(f)
}

/// Pentadiagonal `B` with `F_b = B X` applied to each coordinate separately.
/// `B = −c DᵀD` where `D` is the `(N−2)×N` second-difference matrix.
pub fn bending_matrix(n: usize, kb: f64, ds: f64, normalization: BendingNormalization) -> Result<BandedMatrix> {
    if n < 3 {
        return Err(invalid(format!("fiber needs at least 3 markers, got {n}")));
    }
    let c = kb * normalization.weight(ds);
    let stencil = [1.0, -2.0, 1.0];
    let mut b = BandedMatrix::zeros(n, 2, 2);
    for row in 0..n - 2 {
        for (a, sa) in stencil.iter().enumerate() {
            for (bb, sb) in stencil.iter().enumerate() {
                b.add(row + a, row + bb, -c * sa * sb);
            }
        }
    }
    Ok(b)
}

/// `F_b = −∂E_b/∂X`.
pub fn bending_force(fiber: &Fiber) -> Vec<Vec3> {
    let n = fiber.len();
    let c = fiber.bending_weight();
    let mut f = vec![Vec3::zeros(); n];
    for k in 1..n - 1 {
        let d = fiber.positions[k + 1] - 2.0 * fiber.positions[k] + fiber.positions[k - 1];
        f[k - 1] -= c * d;
        f[k] += 2.0 * c * d;
        f[k + 1] -= c * d;
    }
    f
}

/// Total elastic force `F_s + F_b`.
pub fn elastic_force(fiber: &Fiber) -> Result<Vec<Vec3>> {
    let mut f = stretching_force(fiber)?;
    for (a, b) in f.iter_mut().zip(bending_force(fiber)) {
        *a += b;
    }
    Ok(f)
}

/// `d(T(R) τ)/dX_{g+1}` for one gap: `T′ ττᵀ + (T/R)(I − ττᵀ)`.
fn gap_stiffness(fiber: &Fiber, tau: &Vec3, r: f64) -> Matrix3<f64> {
    let tt = tau * tau.transpose();
    let dtension = fiber.ks / fiber.ds;
    tt * dtension + (Matrix3::identity() - tt) * (fiber.tension(r) / r)
}

/// `∂F_s/∂X` as a 3N×3N block-tridiagonal matrix of 3×3 blocks (marker-major
/// ordering, `3k + axis`), stored with scalar bandwidth 8 so bending blocks fit too.
pub fn stretch_jacobian(fiber: &Fiber) -> Result<BandedMatrix> {
    let n = fiber.len();
    let mut jac = BandedMatrix::zeros(3 * n, 8, 8);
    for (g, (tau, r)) in gaps(fiber)?.into_iter().enumerate() {
        let k = gap_stiffness(fiber, &tau, r);
        jac.add_block(g, g + 1, &k, 1.0);
        jac.add_block(g + 1, g, &k, 1.0);
        jac.add_block(g, g, &k, -1.0);
        jac.add_block(g + 1, g + 1, &k, -1.0);
    }
    Ok(jac)
}

/// Flatten positions marker-major: `[x0, y0, z0, x1, ...]`.
pub fn flatten(v: &[Vec3]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y, p.z]).collect()
}

pub fn unflatten(v: &[f64]) -> Vec<Vec3> {
    v.chunks_exact(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect()
}
