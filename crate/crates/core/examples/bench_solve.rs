//! Wall time of one periodic Stokes solve on a few grid sizes.

use std::time::Instant;

use hybrid_ib::grid::{Grid, VectorField};
use hybrid_ib::spectral::StokesSolver;

fn main() {
    for (nx, ny, nz) in [(32, 32, 32), (64, 64, 16), (64, 64, 64), (128, 128, 32), (128, 128, 128)] {
        let grid = Grid::new(nx, ny, nz, 1.0 / nx as f64, 1.0).unwrap();
        let f = VectorField::from_fn(&grid, |x| [x[0].sin(), x[1].cos(), x[2]]);
        let solver = StokesSolver::new(&grid);
        solver.solve(&f).unwrap();
        let reps = 5;
        let start = Instant::now();
        for _ in 0..reps {
            solver.solve(&f).unwrap();
        }
        println!("{nx}x{ny}x{nz}: {:.4} s", start.elapsed().as_secs_f64() / reps as f64);
    }
}
