//! Regularized-delta coupling between Lagrangian markers and the grid.
//!
//! `δ_h(x) = h⁻³ φ(x/h) φ(y/h) φ(z/h)` with Peskin's 4-point `φ`. Spreading
//! takes point forces (pN) and produces a force density (pN/μm³);
//! interpolation is its adjoint under the `h³`-weighted grid inner product.

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};

pub type Vec3 = Vector3<f64>;

/// Peskin's 4-point regularized delta kernel.
#[inline]
pub fn phi4(r: f64) -> f64 {
    let r = r.abs();
    if r <= 1.0 {
        (3.0 - 2.0 * r + (1.0 + 4.0 * r - 4.0 * r * r).sqrt()) / 8.0
    } else if r < 2.0 {
        (5.0 - 2.0 * r - (-7.0 + 12.0 * r - 4.0 * r * r).max(0.0).sqrt()) / 8.0
    } else {
        0.0
    }
}

/// Marker positions paired with one 3-vector per marker (force or velocity).
#[derive(Debug, Clone, Default)]
pub struct MarkerSet {
    pub positions: Vec<Vec3>,
    pub values: Vec<Vec3>,
}

impl MarkerSet {
    pub fn new(positions: Vec<Vec3>, values: Vec<Vec3>) -> Result<Self> {
        if positions.len() != values.len() {
            return Err(Error::ShapeMismatch {
                expected: positions.len(),
                actual: values.len(),
            });
        }
        Ok(Self { positions, values })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

/// The 4×4×4 block of nodes a marker touches, with per-axis weights.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub index: [[usize; 4]; 3],
    pub weight: [[f64; 4]; 3],
}

impl Stencil {
    /// Stencil for `x`, which may lie anywhere; it is reduced into the primary box.
    pub fn new(grid: &Grid, x: &Vec3) -> Self {
        let dims = grid.dims();
        let lengths = grid.lengths();
        let mut index = [[0usize; 4]; 3];
        let mut weight = [[0.0; 4]; 3];
        for a in 0..3 {
            let reduced = (x[a] - grid.origin[a]).rem_euclid(lengths[a]);
            let t = reduced / grid.h;
            let base = t.floor() as i64 - 1;
            let n = dims[a] as i64;
            for o in 0..4 {
                let node = base + o as i64;
                index[a][o] = node.rem_euclid(n) as usize;
                weight[a][o] = phi4(t - node as f64);
            }
        }
        Self { index, weight }
    }

    /// Visit every node with its tensor-product weight, in a fixed order.
    #[inline]
    pub fn for_each(&self, grid: &Grid, mut f: impl FnMut(usize, f64)) {
        for (&i, &wx) in self.index[0].iter().zip(&self.weight[0]) {
            for (&j, &wy) in self.index[1].iter().zip(&self.weight[1]) {
                let wxy = wx * wy;
                let row = (i * grid.ny + j) * grid.nz;
                for (&k, &wz) in self.index[2].iter().zip(&self.weight[2]) {
                    f(row + k, wxy * wz);
                }
            }
        }
    }
}

fn check_markers(positions: &[Vec3], values: Option<&[Vec3]>) -> Result<()> {
    if let Some(v) = values {
        if v.len() != positions.len() {
            return Err(Error::ShapeMismatch {
                expected: positions.len(),
                actual: v.len(),
            });
        }
        if v.iter().any(|f| !f.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite("marker values"));
        }
    }
    if positions.iter().any(|x| !x.iter().all(|c| c.is_finite())) {
        return Err(Error::NonFinite("marker positions"));
    }
    Ok(())
}

/// Add `Σ_m F_m δ_h(x − X_m)` into `field`. Accumulates in marker order.
pub fn spread_into(field: &mut VectorField, positions: &[Vec3], forces: &[Vec3]) -> Result<()> {
    check_markers(positions, Some(forces))?;
    let grid = *field.grid();
    let inv_vol = 1.0 / grid.cell_volume();
    let [fx, fy, fz] = &mut field.components;
    for (x, f) in positions.iter().zip(forces) {
        let s = Stencil::new(&grid, x);
        let g = f * inv_vol;
        s.for_each(&grid, |idx, w| {
            fx[idx] += g.x * w;
            fy[idx] += g.y * w;
            fz[idx] += g.z * w;
        });
    }
    Ok(())
}

/// Force density on the grid from point forces on markers.
pub fn spread(grid: &Grid, markers: &MarkerSet) -> Result<VectorField> {
    let mut field = VectorField::zeros(grid);
    spread_into(&mut field, &markers.positions, &markers.values)?;
    Ok(field)
}

/// `U_m = Σ_g u(x_g) δ_h(x_g − X_m) h³`.
pub fn interpolate(u: &VectorField, positions: &[Vec3]) -> Result<Vec<Vec3>> {
    check_markers(positions, None)?;
    let grid = *u.grid();
    let [ux, uy, uz] = &u.components;
    Ok(positions
        .iter()
        .map(|x| {
            let s = Stencil::new(&grid, x);
            let mut out = Vec3::zeros();
            s.for_each(&grid, |idx, w| {
                out.x += ux[idx] * w;
                out.y += uy[idx] * w;
                out.z += uz[idx] * w;
            });
            out
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn random_point(rng: &mut RngStream, grid: &Grid) -> Vec3 {
        let l = grid.lengths();
        Vec3::new(
            rng.uniform(-l[0], l[0]),
            rng.uniform(-l[1], l[1]),
            rng.uniform(-l[2], l[2]),
        )
    }

    #[test]
    fn kernel_values() {
        assert_eq!(phi4(0.0), 0.5);
        assert_eq!(phi4(2.5), 0.0);
        assert_eq!(phi4(2.0), 0.0);
        assert_eq!(phi4(1.0), 0.25);
        let sum = phi4(0.5) + phi4(-0.5) + phi4(1.5) + phi4(-1.5);
        assert!((sum - 1.0).abs() < 1e-15);
        // Symmetric and continuous across |r| = 1.
        assert_eq!(phi4(0.7), phi4(-0.7));
        assert!((phi4(1.0 - 1e-12) - phi4(1.0 + 1e-12)).abs() < 1e-10);
    }

    #[test]
    fn kernel_moment_conditions() {
        // Σ_j φ(r − j) = 1 and Σ_j (r − j) φ(r − j) = 0 for any shift r.
        for step in 0..50 {
            let r = step as f64 / 50.0;
            let nodes = -3..=3;
            let m0: f64 = nodes.clone().map(|j| phi4(r - j as f64)).sum();
            let m1: f64 = nodes.map(|j| (r - j as f64) * phi4(r - j as f64)).sum();
            assert!((m0 - 1.0).abs() < 1e-14);
            assert!(m1.abs() < 1e-14);
        }
    }

    #[test]
    fn spreading_conserves_force() {
        let grid = Grid::new(8, 8, 8, 0.125, 1.0).unwrap();
        let f = Vec3::new(1.5, -2.0, 0.25);
        let markers = MarkerSet::new(vec![Vec3::new(0.013, -0.21, 0.377)], vec![f]).unwrap();
        let field = spread(&grid, &markers).unwrap();
        for c in 0..3 {
            let total: f64 = field.components[c].iter().sum::<f64>() * grid.cell_volume();
            assert!((total - f[c]).abs() < 1e-13);
        }
        let zero = MarkerSet::new(vec![Vec3::new(0.1, 0.1, 0.1)], vec![Vec3::zeros()]).unwrap();
        assert_eq!(spread(&grid, &zero).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn marker_on_node_touches_27_nodes() {
        // φ(±2) = 0 exactly, so only three weights per axis survive.
        let grid = Grid::new(8, 8, 8, 0.125, 1.0).unwrap();
        let node = grid.node(3, 4, 5);
        let markers = MarkerSet::new(
            vec![Vec3::new(node[0], node[1], node[2])],
            vec![Vec3::new(1.0, 1.0, 1.0)],
        )
        .unwrap();
        let field = spread(&grid, &markers).unwrap();
        for c in 0..3 {
            let nonzero = field.components[c].iter().filter(|v| **v != 0.0).count();
            assert_eq!(nonzero, 27);
        }
    }

    #[test]
    fn interpolation_of_constant_is_exact() {
        let grid = Grid::new(8, 6, 4, 0.1, 1.0).unwrap();
        let c = [0.3, -1.2, 2.0];
        let u = VectorField::from_fn(&grid, |_| c);
        let mut rng = RngStream::new(3, 0);
        let pts: Vec<Vec3> = (0..50).map(|_| random_point(&mut rng, &grid)).collect();
        for v in interpolate(&u, &pts).unwrap() {
            for a in 0..3 {
                assert!((v[a] - c[a]).abs() < 1e-14);
            }
        }
        let zero = interpolate(&VectorField::zeros(&grid), &pts).unwrap();
        assert!(zero.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn spread_and_interpolate_are_adjoint() {
        let grid = Grid::new(8, 8, 6, 0.2, 1.0).unwrap();
        let mut rng = RngStream::new(9, 1);
        let n = 17;
        let pts: Vec<Vec3> = (0..n).map(|_| random_point(&mut rng, &grid)).collect();
        let forces: Vec<Vec3> = (0..n)
            .map(|_| Vec3::new(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)))
            .collect();
        let u = VectorField::from_fn(&grid, |x| [x[0].sin() + x[2], x[1] * x[0], (3.0 * x[2]).cos()]);
        let f = spread(&grid, &MarkerSet::new(pts.clone(), forces.clone()).unwrap()).unwrap();
        let lhs = f.inner(&u).unwrap();
        let rhs: f64 = interpolate(&u, &pts)
            .unwrap()
            .iter()
            .zip(&forces)
            .map(|(a, b)| a.dot(b))
            .sum();
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()));
    }

    #[test]
    fn whole_period_shifts_of_dyadic_positions_are_bit_identical() {
        let grid = Grid::new(8, 8, 8, 0.125, 1.0).unwrap();
        let l = grid.lengths();
        let x = Vec3::new(0.203125, -0.4375, 0.0078125);
        let shifted = x + Vec3::new(l[0], -l[1], 3.0 * l[2]);
        let f = vec![Vec3::new(1.0, 2.0, 3.0)];
        let a = spread(&grid, &MarkerSet::new(vec![x], f.clone()).unwrap()).unwrap();
        let b = spread(&grid, &MarkerSet::new(vec![shifted], f).unwrap()).unwrap();
        assert_eq!(a, b);
        let u = VectorField::from_fn(&grid, |p| [p[0], p[1] * p[2], 1.0]);
        assert_eq!(interpolate(&u, &[x]).unwrap(), interpolate(&u, &[shifted]).unwrap());
    }

    #[test]
    fn rejects_non_finite_markers() {
        let grid = Grid::new(8, 8, 8, 0.125, 1.0).unwrap();
        let m = MarkerSet::new(vec![Vec3::new(f64::NAN, 0.0, 0.0)], vec![Vec3::zeros()]).unwrap();
        assert!(spread(&grid, &m).is_err());
        assert!(MarkerSet::new(vec![Vec3::zeros()], vec![]).is_err());
    }
}
