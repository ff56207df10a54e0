//! Uniform cell-centered rectangular grids on the unit square with
//! two-point flux connectivity.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GridError {
    #[error("grid dimensions must be at least 1x1, got {nx}x{ny}")]
    InvalidDimensions { nx: usize, ny: usize },
    #[error("cell index ({i},{j}) out of range for {nx}x{ny} grid")]
    IndexOutOfRange { i: usize, j: usize, nx: usize, ny: usize },
}

/// Coordinate axis a face is orthogonal to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Side of the unit square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];
}

/// Face between two cells. The geometric transmissibility is
/// area / distance between the cell centers (hy/hx for x-faces).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorFace {
    pub owner: usize,
    pub neighbor: usize,
    pub trans: f64,
    pub axis: Axis,
}

/// Face on the domain boundary. The half-cell transmissibility uses the
/// distance h/2 from the adjacent cell center to the face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    pub cell: usize,
    pub side: Side,
    pub trans: f64,
    pub midpoint: (f64, f64),
}

/// Uniform nx-by-ny cell-centered grid on the unit square, cells ordered
/// row-major (x fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredGrid {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub cell_centers: Vec<(f64, f64)>,
    pub interior_faces: Vec<InteriorFace>,
    pub boundary_faces: Vec<BoundaryFace>,
}

/// Builds the uniform grid with TPFA face connectivity.
pub fn build_grid(nx: usize, ny: usize) -> Result<StructuredGrid, GridError> {
    if nx == 0 || ny == 0 {
        return Err(GridError::InvalidDimensions { nx, ny });
    }
    let hx = 1.0 / nx as f64;
    let hy = 1.0 / ny as f64;

    let mut cell_centers = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cell_centers.push(((i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy));
        }
    }

    let id = |i: usize, j: usize| j * nx + i;
    let mut interior_faces = Vec::with_capacity((nx - 1) * ny + nx * (ny - 1));
    for j in 0..ny {
        for i in 0..nx - 1 {
            interior_faces.push(InteriorFace {
                owner: id(i, j),
                neighbor: id(i + 1, j),
                trans: hy / hx,
                axis: Axis::X,
            });
        }
    }
    for j in 0..ny - 1 {
        for i in 0..nx {
            interior_faces.push(InteriorFace {
                owner: id(i, j),
                neighbor: id(i, j + 1),
                trans: hx / hy,
                axis: Axis::Y,
            });
        }
    }

    let mut boundary_faces = Vec::with_capacity(2 * (nx + ny));
    for j in 0..ny {
        let y = (j as f64 + 0.5) * hy;
        boundary_faces.push(BoundaryFace {
            cell: id(0, j),
            side: Side::Left,
            trans: 2.0 * hy / hx,
            midpoint: (0.0, y),
        });
        boundary_faces.push(BoundaryFace {
            cell: id(nx - 1, j),
            side: Side::Right,
            trans: 2.0 * hy / hx,
            midpoint: (1.0, y),
        });
    }
    for i in 0..nx {
        let x = (i as f64 + 0.5) * hx;
        boundary_faces.push(BoundaryFace {
            cell: id(i, 0),
            side: Side::Bottom,
            trans: 2.0 * hx / hy,
            midpoint: (x, 0.0),
        });
        boundary_faces.push(BoundaryFace {
            cell: id(i, ny - 1),
            side: Side::Top,
            trans: 2.0 * hx / hy,
            midpoint: (x, 1.0),
        });
    }

    Ok(StructuredGrid {
        nx,
        ny,
        hx,
        hy,
        cell_centers,
        interior_faces,
        boundary_faces,
    })
}

impl StructuredGrid {
    pub fn num_cells(&self) -> usize {
        self.nx * self.ny
    }

    /// Cell area.
    pub fn cell_volume(&self) -> f64 {
        self.hx * self.hy
    }

    /// Row-major linear id of cell (i, j).
    pub fn cell_index(&self, i: usize, j: usize) -> Result<usize, GridError> {
        if i >= self.nx || j >= self.ny {
            return Err(GridError::IndexOutOfRange {
                i,
                j,
                nx: self.nx,
                ny: self.ny,
            });
        }
        Ok(j * self.nx + i)
    }

    /// Elevation difference z(neighbor) - z(owner) across an interior face.
    /// The vertical axis (pointing against gravity) is +y.
    pub fn dz_interior(&self, face: &InteriorFace) -> f64 {
        match face.axis {
            Axis::X => 0.0,
            Axis::Y => self.hy,
        }
    }

    /// Elevation difference z(face midpoint) - z(cell center) for a boundary face.
    pub fn dz_boundary(&self, face: &BoundaryFace) -> f64 {
        match face.side {
            Side::Top => 0.5 * self.hy,
            Side::Bottom => -0.5 * self.hy,
            Side::Left | Side::Right => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn counts_on_10x10() {
        let g = build_grid(10, 10).unwrap();
        assert_eq!(g.num_cells(), 100);
        assert_eq!(g.interior_faces.len(), 180);
        assert_eq!(g.boundary_faces.len(), 40);
    }

    #[test]
    fn degenerate_single_cell() {
        let g = build_grid(1, 1).unwrap();
        assert_eq!(g.num_cells(), 1);
        assert_eq!(g.interior_faces.len(), 0);
        assert_eq!(g.boundary_faces.len(), 4);
    }

    #[test]
    fn zero_dimensions_rejected() {
        assert!(build_grid(0, 10).is_err());
        assert!(build_grid(10, 0).is_err());
    }

    #[test]
    fn transmissibilities_on_square_cells() {
        let g = build_grid(10, 10).unwrap();
        for f in &g.interior_faces {
            assert!((f.trans - 1.0).abs() < 1e-15);
        }
        for f in &g.boundary_faces {
            assert!((f.trans - 2.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cell_index_row_major() {
        let g = build_grid(10, 10).unwrap();
        assert_eq!(g.cell_index(0, 0).unwrap(), 0);
        assert_eq!(g.cell_index(9, 0).unwrap(), 9);
        assert_eq!(g.cell_index(0, 1).unwrap(), 10);
        assert!(g.cell_index(10, 0).is_err());
    }

    #[test]
    fn boundary_midpoints_on_unit_square_edge() {
        let g = build_grid(7, 4).unwrap();
        for f in &g.boundary_faces {
            let (x, y) = f.midpoint;
            let on_edge = x == 0.0 || x == 1.0 || y == 0.0 || y == 1.0;
            assert!(on_edge, "midpoint {:?} not on boundary", f.midpoint);
        }
    }

    #[test]
    fn constant_flux_field_has_zero_divergence_on_interior_cells() {
        // Assign every face the flux of a constant vector field and sum the
        // signed contributions per cell; interior cells must cancel exactly.
        let g = build_grid(4, 4).unwrap();
        let (fx, fy) = (1.3, -0.7);
        let mut div = vec![0.0; g.num_cells()];
        for f in &g.interior_faces {
            let flux = match f.axis {
                Axis::X => fx * g.hy,
                Axis::Y => fy * g.hx,
            };
            div[f.owner] += flux;
            div[f.neighbor] -= flux;
        }
        let has_boundary = {
            let mut b = vec![false; g.num_cells()];
            for f in &g.boundary_faces {
                b[f.cell] = true;
            }
            b
        };
        for c in 0..g.num_cells() {
            if !has_boundary[c] {
                assert!(div[c].abs() < 1e-14);
            }
        }
    }

    proptest! {
        #[test]
        fn face_count_formulas(nx in 1usize..12, ny in 1usize..12) {
            let g = build_grid(nx, ny).unwrap();
            prop_assert_eq!(g.num_cells(), nx * ny);
            prop_assert_eq!(g.interior_faces.len(), (nx - 1) * ny + nx * (ny - 1));
            prop_assert_eq!(g.boundary_faces.len(), 2 * (nx + ny));
        }

        #[test]
        fn construction_is_deterministic(nx in 1usize..9, ny in 1usize..9) {
            let a = build_grid(nx, ny).unwrap();
            let b = build_grid(nx, ny).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
