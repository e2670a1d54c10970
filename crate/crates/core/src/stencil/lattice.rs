//! Central finite differences on cell lattices.

use num_complex::Complex64;

use crate::grid::Grid;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

fn at(psi: &[Complex64], cell: Option<usize>) -> Complex64 {
    cell.map_or(ZERO, |c| psi[c])
}

/// Δψdx at one cell, along axis 0.
pub fn first_difference(psi: &[Complex64], grid: &Grid, cell: usize) -> Complex64 {
    let r = at(psi, grid.neighbor(cell, 0, true));
    let l = at(psi, grid.neighbor(cell, 0, false));
    (r - l) / (2.0 * grid.dx)
}

/// Δ²ψdx at one cell; the sum over all axes in two dimensions.
pub fn second_difference(psi: &[Complex64], grid: &Grid, cell: usize) -> Complex64 {
    let mut acc = ZERO;
    for axis in 0..grid.dims() {
        let r = at(psi, grid.neighbor(cell, axis, true));
        let l = at(psi, grid.neighbor(cell, axis, false));
        acc += r - 2.0 * psi[cell] + l;
    }
    acc / (grid.dx * grid.dx)
}

/// Returns `(Δψdx, Δ²ψdx)` for every cell.
pub fn spatial_derivatives(psi: &[Complex64], grid: &Grid) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = psi.len();
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for cell in 0..n {
        d1.push(first_difference(psi, grid, cell));
        d2.push(second_difference(psi, grid, cell));
    }
    (d1, d2)
}
