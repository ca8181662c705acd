//! Fourier-spectral solver for the periodic Stokes equations
//!
//! ```text
//! μ Δu − ∇p + f = 0,    ∇·u = 0
//! ```
//!
//! In Fourier space the pressure is eliminated by the projector
//! `P(k) = I − k̂k̂ᵀ`, giving `û(k) = P(k) f̂(k) / (μ|k|²)` for `k ≠ 0` and
//! `û(0) = 0`. Pinning the zero mode is the same as removing the mean of `f`
//! before the solve, which a periodic box requires.
//!
//! Transforms are real-to-complex along `z` (the contiguous axis) followed by
//! complex transforms along `y` and `x`. The spectrum is stored with `x`
//! contiguous: `(j · nzc + kz) · nx + i` with `nzc = nz/2 + 1`.
//!
//! Nyquist indices use the full `|k|²` in the Laplacian, but their component
//! in the projection direction (and in the divergence) is zero: the discrete
//! first derivative of a Nyquist mode vanishes on the grid. This keeps the
//! projector Hermitian-consistent, so the inverse transform is exactly real
//! and the spectral divergence of every solution is zero.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, VectorField};

type C64 = Complex<f64>;

/// Reusable spectral Stokes solver for one grid. Holds FFT plans and wavenumbers.
pub struct StokesSolver {
    grid: Grid,
    nzc: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fft_x: Arc<dyn Fft<f64>>,
    ifft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    ifft_y: Arc<dyn Fft<f64>>,
    /// Wavenumbers per axis (`z` holds the half spectrum).
    k: [Vec<f64>; 3],
    /// Wavenumbers used for first derivatives: Nyquist entries zeroed.
    k_odd: [Vec<f64>; 3],
}

/// Velocity plus a diagnostic of how far the inverse transform was from real.
#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub velocity: VectorField,
    /// Largest imaginary part discarded by the inverse transform, in velocity units.
    pub imag_residue: f64,
}

fn wavenumbers(n: usize, length: f64, half: bool) -> (Vec<f64>, Vec<f64>) {
    let count = if half { n / 2 + 1 } else { n };
    let mut k = Vec::with_capacity(count);
    let mut k_odd = Vec::with_capacity(count);
    for m in 0..count {
        let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
        let kk = 2.0 * PI * signed / length;
        k.push(kk);
        k_odd.push(if m == n / 2 { 0.0 } else { kk });
    }
    (k, k_odd)
}

impl StokesSolver {
    pub fn new(grid: &Grid) -> Self {
        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();
        let [lx, ly, lz] = grid.lengths();
        let (kx, kx_odd) = wavenumbers(grid.nx, lx, false);
        let (ky, ky_odd) = wavenumbers(grid.ny, ly, false);
        let (kz, kz_odd) = wavenumbers(grid.nz, lz, true);
        Self {
            grid: *grid,
            nzc: grid.nz / 2 + 1,
            r2c: real_planner.plan_fft_forward(grid.nz),
            c2r: real_planner.plan_fft_inverse(grid.nz),
            fft_x: planner.plan_fft_forward(grid.nx),
            ifft_x: planner.plan_fft_inverse(grid.nx),
            fft_y: planner.plan_fft_forward(grid.ny),
            ifft_y: planner.plan_fft_inverse(grid.ny),
            k: [kx, ky, kz],
            k_odd: [kx_odd, ky_odd, kz_odd],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Velocity driven by force density `f` (pN/μm³ → μm/s).
    pub fn solve(&self, f: &VectorField) -> Result<VectorField> {
        Ok(self.solve_with_residue(f)?.velocity)
    }

    pub fn solve_with_residue(&self, f: &VectorField) -> Result<StokesSolution> {
        self.check_input(f)?;
        let mut spec: [Vec<C64>; 3] = [
            self.forward(&f.components[0]),
            self.forward(&f.components[1]),
            self.forward(&f.components[2]),
        ];
        self.project(&mut spec);

        let mut velocity = VectorField::zeros(&self.grid);
        let mut imag_residue = 0.0_f64;
        for (out, s) in velocity.components.iter_mut().zip(spec) {
            imag_residue = imag_residue.max(self.inverse(s, out));
        }
        Ok(StokesSolution {
            velocity,
            imag_residue,
        })
    }

    /// Spectral divergence `∇·u`, using the same derivative convention as the solver.
    pub fn divergence(&self, u: &VectorField) -> Result<Vec<f64>> {
        self.check_input(u)?;
        let nx = self.grid.nx;
        let nzc = self.nzc;
        let mut div = vec![C64::new(0.0, 0.0); nx * self.grid.ny * nzc];
        for (axis, comp) in u.components.iter().enumerate() {
            let s = self.forward(comp);
            div.par_chunks_mut(nx)
                .zip(s.par_chunks(nx))
                .enumerate()
                .for_each(|(line, (d, s))| {
                    let (j, kz) = (line / nzc, line % nzc);
                    for i in 0..nx {
                        let k = match axis {
                            0 => self.k_odd[0][i],
                            1 => self.k_odd[1][j],
                            _ => self.k_odd[2][kz],
                        };
                        // i k û
                        d[i] += C64::new(-k * s[i].im, k * s[i].re);
                    }
                });
        }
        let mut out = vec![0.0; self.grid.len()];
        self.inverse(div, &mut out);
        Ok(out)
    }

    fn check_input(&self, f: &VectorField) -> Result<()> {
        if f.grid().dims() != self.grid.dims() {
            return Err(Error::ShapeMismatch {
                expected: self.grid.len(),
                actual: f.grid().len(),
            });
        }
        if !f.is_finite() {
            return Err(Error::NonFinite("grid field"));
        }
        Ok(())
    }

    fn project(&self, spec: &mut [Vec<C64>; 3]) {
        let nx = self.grid.nx;
        let nzc = self.nzc;
        let mu = self.grid.mu;
        let [sx, sy, sz] = spec;
        sx.par_chunks_mut(nx)
            .zip(sy.par_chunks_mut(nx))
            .zip(sz.par_chunks_mut(nx))
            .enumerate()
            .for_each(|(line, ((fx, fy), fz))| {
                let (j, kz) = (line / nzc, line % nzc);
                let (ky, kzv) = (self.k[1][j], self.k[2][kz]);
                let (py, pz) = (self.k_odd[1][j], self.k_odd[2][kz]);
                for i in 0..nx {
                    let kx = self.k[0][i];
                    let k2 = kx * kx + ky * ky + kzv * kzv;
                    if k2 == 0.0 {
                        fx[i] = C64::new(0.0, 0.0);
                        fy[i] = C64::new(0.0, 0.0);
                        fz[i] = C64::new(0.0, 0.0);
                        continue;
                    }
                    let px = self.k_odd[0][i];
                    let p2 = px * px + py * py + pz * pz;
                    let scale = 1.0 / (mu * k2);
                    if p2 > 0.0 {
                        let kdotf = (fx[i] * px + fy[i] * py + fz[i] * pz) / p2;
                        fx[i] = (fx[i] - kdotf * px) * scale;
                        fy[i] = (fy[i] - kdotf * py) * scale;
                        fz[i] = (fz[i] - kdotf * pz) * scale;
                    } else {
                        fx[i] *= scale;
                        fy[i] *= scale;
                        fz[i] *= scale;
                    }
                }
            });
    }

    /// Real field → spectrum in `(j, kz, i)` layout.
    fn forward(&self, real: &[f64]) -> Vec<C64> {
        let Grid { nx, ny, nz, .. } = self.grid;
        let nzc = self.nzc;
        let zero = C64::new(0.0, 0.0);

        let mut half = vec![zero; nx * ny * nzc];
        half.par_chunks_mut(nzc)
            .zip(real.par_chunks(nz))
            .for_each_init(
                || (vec![0.0; nz], self.r2c.make_scratch_vec()),
                |(line, scratch), (out, input)| {
                    line.copy_from_slice(input);
                    self.r2c
                        .process_with_scratch(line, out, scratch)
                        .expect("r2c buffer sizes are fixed by the plan");
                },
            );

        let y_scratch = self.fft_y.get_inplace_scratch_len();
        half.par_chunks_mut(ny * nzc).for_each_init(
            || (vec![zero; ny], vec![zero; y_scratch]),
            |(buf, scratch), slab| {
                for kz in 0..nzc {
                    for j in 0..ny {
                        buf[j] = slab[j * nzc + kz];
                    }
                    self.fft_y.process_with_scratch(buf, scratch);
                    for j in 0..ny {
                        slab[j * nzc + kz] = buf[j];
                    }
                }
            },
        );

        let x_scratch = self.fft_x.get_inplace_scratch_len();
        let stride = ny * nzc;
        let mut spec = vec![zero; nx * ny * nzc];
        spec.par_chunks_mut(nx).enumerate().for_each_init(
            || vec![zero; x_scratch],
            |scratch, (line, out)| {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = half[i * stride + line];
                }
                self.fft_x.process_with_scratch(out, scratch);
            },
        );
        spec
    }

    /// Spectrum → real field (normalised). Returns the largest imaginary
    /// part that had to be discarded, scaled like the output.
    fn inverse(&self, mut spec: Vec<C64>, out: &mut [f64]) -> f64 {
        let Grid { nx, ny, nz, .. } = self.grid;
        let nzc = self.nzc;
        let zero = C64::new(0.0, 0.0);
        let norm = 1.0 / (nx * ny * nz) as f64;

        let x_scratch = self.ifft_x.get_inplace_scratch_len();
        spec.par_chunks_mut(nx).for_each_init(
            || vec![zero; x_scratch],
            |scratch, line| self.ifft_x.process_with_scratch(line, scratch),
        );

        let stride = ny * nzc;
        let y_scratch = self.ifft_y.get_inplace_scratch_len();
        let mut half = vec![zero; nx * ny * nzc];
        let residue = half
            .par_chunks_mut(stride)
            .enumerate()
            .map_init(
                || (vec![zero; ny], vec![zero; y_scratch]),
                |(buf, scratch), (i, slab)| {
                    for (l, v) in slab.iter_mut().enumerate() {
                        *v = spec[l * nx + i];
                    }
                    let mut residue = 0.0_f64;
                    for kz in 0..nzc {
                        for j in 0..ny {
                            buf[j] = slab[j * nzc + kz];
                        }
                        self.ifft_y.process_with_scratch(buf, scratch);
                        for j in 0..ny {
                            let mut v = buf[j];
                            // The z-transform's DC and Nyquist bins of a real line are real.
                            if kz == 0 || kz == nzc - 1 {
                                residue = residue.max(v.im.abs());
                                v.im = 0.0;
                            }
                            slab[j * nzc + kz] = v;
                        }
                    }
                    residue
                },
            )
            .reduce(|| 0.0, f64::max);

        out.par_chunks_mut(nz)
            .zip(half.par_chunks_mut(nzc))
            .for_each_init(
                || self.c2r.make_scratch_vec(),
                |scratch, (line, input)| {
                    self.c2r
                        .process_with_scratch(input, line, scratch)
                        .expect("c2r buffer sizes are fixed by the plan");
                    for v in line.iter_mut() {
                        *v *= norm;
                    }
                },
            );
        residue * norm
    }
}

/// One-shot solve; prefer [`StokesSolver`] when solving repeatedly on one grid.
pub fn solve_stokes(grid: &Grid, f: &VectorField) -> Result<VectorField> {
    StokesSolver::new(grid).solve(f)
}

/// One-shot spectral divergence.
pub fn divergence_spectral(grid: &Grid, u: &VectorField) -> Result<Vec<f64>> {
    StokesSolver::new(grid).divergence(u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn random_field(grid: &Grid, seed: u64) -> VectorField {
        let mut rng = RngStream::new(seed, 0);
        let n = grid.len();
        let mut make = || (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect::<Vec<_>>();
        let c = [make(), make(), make()];
        VectorField::from_components(grid, c).unwrap()
    }

    #[test]
    fn sinusoidal_mode_matches_analytic_solution() {
        let grid = Grid::new(16, 12, 8, 0.125, 1.7).unwrap();
        let ly = grid.lengths()[1];
        let f0 = 0.3;
        let f = VectorField::from_fn(&grid, |x| [f0 * (2.0 * PI * x[1] / ly).sin(), 0.0, 0.0]);
        let u = solve_stokes(&grid, &f).unwrap();
        let amp = f0 * ly * ly / (4.0 * PI * PI * grid.mu);
        let exact = VectorField::from_fn(&grid, |x| [amp * (2.0 * PI * x[1] / ly).sin(), 0.0, 0.0]);
        for c in 0..3 {
            for (a, b) in u.components[c].iter().zip(&exact.components[c]) {
                assert!((a - b).abs() <= 1e-13 * amp, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_and_constant_forcing_give_zero_velocity() {
        let grid = Grid::new(8, 8, 8, 0.25, 1.0).unwrap();
        let u = solve_stokes(&grid, &VectorField::zeros(&grid)).unwrap();
        assert_eq!(u.max_abs(), 0.0);
        let c = VectorField::from_fn(&grid, |_| [1.0, -2.0, 3.0]);
        let u = solve_stokes(&grid, &c).unwrap();
        assert!(u.max_abs() < 1e-15);
    }

    #[test]
    fn random_forcing_is_divergence_free_real_and_mean_free() {
        let grid = Grid::new(16, 8, 8, 0.1, 1.0).unwrap();
        let solver = StokesSolver::new(&grid);
        let f = random_field(&grid, 11);
        let sol = solver.solve_with_residue(&f).unwrap();
        let scale = sol.velocity.max_abs();
        assert!(sol.imag_residue < 1e-13 * scale, "residue {}", sol.imag_residue);
        let div = solver.divergence(&sol.velocity).unwrap();
        let max_div = div.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
        assert!(max_div <= 1e-12 * scale / grid.h, "div {max_div}");
        for m in sol.velocity.mean() {
            assert!(m.abs() < 1e-15 * scale);
        }
    }

    #[test]
    fn divergence_of_sine_is_cosine() {
        let grid = Grid::new(8, 4, 6, 0.5, 1.0).unwrap();
        let lx = grid.lengths()[0];
        let u = VectorField::from_fn(&grid, |x| [(2.0 * PI * x[0] / lx).sin(), 0.0, 0.0]);
        let div = divergence_spectral(&grid, &u).unwrap();
        for i in 0..grid.nx {
            for j in 0..grid.ny {
                for k in 0..grid.nz {
                    let x = grid.node(i, j, k)[0];
                    let expect = 2.0 * PI / lx * (2.0 * PI * x / lx).cos();
                    assert!((div[grid.index(i, j, k)] - expect).abs() < 1e-13);
                }
            }
        }
        let c = VectorField::from_fn(&grid, |_| [1.0, 2.0, 3.0]);
        let div = divergence_spectral(&grid, &c).unwrap();
        assert!(div.iter().all(|d| d.abs() < 1e-14));
    }

    #[test]
    fn solver_is_linear_and_self_adjoint() {
        let grid = Grid::new(8, 8, 12, 0.2, 0.7).unwrap();
        let solver = StokesSolver::new(&grid);
        let f = random_field(&grid, 1);
        let g = random_field(&grid, 2);
        let uf = solver.solve(&f).unwrap();
        let ug = solver.solve(&g).unwrap();

        let mut combo = f.clone();
        for c in &mut combo.components {
            c.iter_mut().for_each(|v| *v *= 2.5);
        }
        combo.add_scaled(&g, -0.75).unwrap();
        let u_combo = solver.solve(&combo).unwrap();
        let scale = uf.max_abs() + ug.max_abs();
        for c in 0..3 {
            for idx in 0..grid.len() {
                let expect = 2.5 * uf.components[c][idx] - 0.75 * ug.components[c][idx];
                assert!((u_combo.components[c][idx] - expect).abs() < 1e-13 * scale);
            }
        }

        // Mean-free parts: the solver ignores the mean anyway.
        let a = g.inner(&uf).unwrap();
        let b = f.inner(&ug).unwrap();
        assert!((a - b).abs() < 1e-12 * a.abs().max(b.abs()), "{a} vs {b}");
    }

    #[test]
    fn rejects_non_finite_and_mismatched_input() {
        let grid = Grid::new(8, 8, 8, 0.25, 1.0).unwrap();
        let solver = StokesSolver::new(&grid);
        let mut f = VectorField::zeros(&grid);
        f.components[1][3] = f64::NAN;
        assert!(matches!(solver.solve(&f), Err(Error::NonFinite(_))));
        let other = Grid::new(8, 8, 4, 0.25, 1.0).unwrap();
        assert!(matches!(
            solver.solve(&VectorField::zeros(&other)),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
