//! Regular cell grids in one or two dimensions.

use std::fmt;

/// Treatment of neighbours beyond the grid edge.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Boundary {
    #[default]
    Periodic,
    /// Ghost cells held at zero.
    Fixed,
}

impl Boundary {
    pub fn name(self) -> &'static str {
        match self {
            Boundary::Periodic => "periodic",
            Boundary::Fixed => "fixed",
        }
    }

    pub fn parse(s: &str) -> Option<Boundary> {
        match s {
            "periodic" => Some(Boundary::Periodic),
            "fixed" | "dirichlet" => Some(Boundary::Fixed),
            _ => None,
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Cell-centred grid. Cell `i` along an axis sits at `origin + i*dx`.
/// Two-dimensional lattices are stored row-major with axis 0 fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub extents: Vec<usize>,
    pub dx: f64,
    pub origin: f64,
    pub boundary: Boundary,
}

impl Grid {
    pub fn new_1d(n: usize, dx: f64, origin: f64, boundary: Boundary) -> Grid {
        Grid {
            extents: vec![n],
            dx,
            origin,
            boundary,
        }
    }

    pub fn dims(&self) -> usize {
        self.extents.len()
    }

    pub fn len(&self) -> usize {
        self.extents.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        let nx = self.extents[0];
        (cell % nx, cell / nx)
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        iy * self.extents[0] + ix
    }

    /// Position of a cell centre along axis 0.
    pub fn x(&self, cell: usize) -> f64 {
        self.origin + self.coords(cell).0 as f64 * self.dx
    }

    pub fn y(&self, cell: usize) -> f64 {
        self.origin + self.coords(cell).1 as f64 * self.dx
    }

    /// Length spanned by axis 0: `n*dx` for periodic grids, `(n+1)*dx`
    /// between the two ghost walls for fixed ones.
    pub fn length(&self) -> f64 {
        let n = self.extents[0] as f64;
        match self.boundary {
            Boundary::Periodic => n * self.dx,
            Boundary::Fixed => (n + 1.0) * self.dx,
        }
    }

    /// Neighbour of `cell` along `axis` at offset ±1, or `None` for a ghost.
    pub fn neighbor(&self, cell: usize, axis: usize, forward: bool) -> Option<usize> {
        let (ix, iy) = self.coords(cell);
        let (i, n) = if axis == 0 {
            (ix, self.extents[0])
        } else {
            (iy, self.extents[1])
        };
        let j = match (forward, self.boundary) {
            (true, _) if i + 1 < n => i + 1,
            (false, _) if i > 0 => i - 1,
            (true, Boundary::Periodic) => 0,
            (false, Boundary::Periodic) => n - 1,
            (_, Boundary::Fixed) => return None,
        };
        Some(if axis == 0 {
            self.index(j, iy)
        } else {
            self.index(ix, j)
        })
    }

    /// Cell containing the point `x` on axis 0 (1D placement of particles).
    pub fn cell_of(&self, x: f64) -> usize {
        let n = self.extents[0] as i64;
        let i = ((x - self.origin) / self.dx).round() as i64;
        match self.boundary {
            Boundary::Periodic => i.rem_euclid(n) as usize,
            Boundary::Fixed => i.clamp(0, n - 1) as usize,
        }
    }
}
