//! Periodic Eulerian grid and the vector fields sampled on it.

use crate::error::{invalid, Error, Result};
use serde::Serialize;

/// Uniform periodic box of `nx × ny × nz` nodes with spacing `h`.
///
/// Node `(i, j, k)` sits at `origin + h·(i, j, k)`. The default origin
/// centres the box on zero, so a cube of side `L` covers `[-L/2, L/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub h: f64,
    pub mu: f64,
    pub origin: [f64; 3],
}

impl Grid {
    /// Grid centred on the coordinate origin.
    pub fn new(nx: usize, ny: usize, nz: usize, h: f64, mu: f64) -> Result<Self> {
        let lengths = [nx as f64 * h, ny as f64 * h, nz as f64 * h];
        let origin = [-lengths[0] / 2.0, -lengths[1] / 2.0, -lengths[2] / 2.0];
        Self::with_origin(nx, ny, nz, h, mu, origin)
    }

    pub fn with_origin(
        nx: usize,
        ny: usize,
        nz: usize,
        h: f64,
        mu: f64,
        origin: [f64; 3],
    ) -> Result<Self> {
        for (axis, n) in [("nx", nx), ("ny", ny), ("nz", nz)] {
            if n < 4 || n % 2 != 0 {
                return Err(invalid(format!(
                    "{axis} = {n}: grid needs at least 4 points per axis and an even count"
                )));
            }
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(invalid(format!("grid spacing h = {h} must be positive")));
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(invalid(format!("viscosity mu = {mu} must be positive")));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::NonFinite("grid origin"));
        }
        Ok(Self {
            nx,
            ny,
            nz,
            h,
            mu,
            origin,
        })
    }

    /// Box of side lengths `extent` (each an integer multiple of `h`), centred on zero.
    pub fn from_extent(extent: [f64; 3], h: f64, mu: f64) -> Result<Self> {
        let mut n = [0usize; 3];
        for a in 0..3 {
            let cells = extent[a] / h;
            let rounded = cells.round();
            if !(rounded >= 1.0) || (cells - rounded).abs() > 1e-9 * rounded {
                return Err(invalid(format!(
                    "domain length {} is not an integer multiple of h = {h}",
                    extent[a]
                )));
            }
            n[a] = rounded as usize;
        }
        Self::new(n[0], n[1], n[2], h, mu)
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.nx, self.ny, self.nz]
    }

    pub fn lengths(&self) -> [f64; 3] {
        [
            self.nx as f64 * self.h,
            self.ny as f64 * self.h,
            self.nz as f64 * self.h,
        ]
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny * self.nz
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell volume `h³`.
    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    /// Linear index of node `(i, j, k)`; `z` varies fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.ny + j) * self.nz + k
    }

    pub fn node(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
            self.origin[2] + k as f64 * self.h,
        ]
    }
}

/// Three scalar lattices laid out like [`Grid::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    grid: Grid,
    pub components: [Vec<f64>; 3],
}

impl VectorField {
    pub fn zeros(grid: &Grid) -> Self {
        let n = grid.len();
        Self {
            grid: *grid,
            components: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        }
    }

    pub fn from_components(grid: &Grid, components: [Vec<f64>; 3]) -> Result<Self> {
        for c in &components {
            if c.len() != grid.len() {
                return Err(Error::ShapeMismatch {
                    expected: grid.len(),
                    actual: c.len(),
                });
            }
        }
        Ok(Self {
            grid: *grid,
            components,
        })
    }

    /// Sample `f(x)` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut field = Self::zeros(grid);
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                for k in 0..grid.nz {
                    let v = f(grid.node(i, j, k));
                    let idx = grid.index(i, j, k);
                    for (c, value) in field.components.iter_mut().zip(v) {
                        c[idx] = value;
                    }
                }
            }
        }
        field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn at(&self, idx: usize) -> [f64; 3] {
        [
            self.components[0][idx],
            self.components[1][idx],
            self.components[2][idx],
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.components
            .iter()
            .flatten()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn mean(&self) -> [f64; 3] {
        let n = self.grid.len() as f64;
        let mut out = [0.0; 3];
        for (o, c) in out.iter_mut().zip(&self.components) {
            *o = c.iter().sum::<f64>() / n;
        }
        out
    }

    /// `self += scale · other`.
    pub fn add_scaled(&mut self, other: &VectorField, scale: f64) -> Result<()> {
        self.check_same_grid(other)?;
        for (a, b) in self.components.iter_mut().zip(&other.components) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
        Ok(())
    }

    /// Discrete inner product `Σ_g a(x_g)·b(x_g) h³`.
    pub fn inner(&self, other: &VectorField) -> Result<f64> {
        self.check_same_grid(other)?;
        let mut sum = 0.0;
        for (a, b) in self.components.iter().zip(&other.components) {
            sum += a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        }
        Ok(sum * self.grid.cell_volume())
    }

    pub(crate) fn check_same_grid(&self, other: &VectorField) -> Result<()> {
        if self.grid.dims() != other.grid.dims() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                actual: other.grid.len(),
            });
        }
        Ok(())
    }
}
