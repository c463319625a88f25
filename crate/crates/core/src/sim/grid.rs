//! Uniform 3D cell grid for fixed-radius neighbor queries.

use std::collections::HashMap;

use crate::real::Real;
use crate::vec3::Vec3;

use super::SimError;

pub type CellCoord = [i64; 3];

/// Agent indices bucketed by `floor(position / cell_size)`.
#[derive(Clone, Debug)]
pub struct SpatialGrid<R> {
    cell_size: R,
    cells: HashMap<CellCoord, Vec<usize>>,
}

impl<R: Real> SpatialGrid<R> {
    pub fn cell_size(&self) -> R {
        self.cell_size
    }

    pub fn cell_of(&self, p: Vec3<R>) -> CellCoord {
        cell_coord(p, self.cell_size)
    }

    pub fn cell(&self, coord: CellCoord) -> &[usize] {
        self.cells.get(&coord).map_or(&[], Vec::as_slice)
    }

    pub fn occupied_cells(&self) -> impl Iterator<Item = (&CellCoord, &Vec<usize>)> {
        self.cells.iter()
    }

    /// Indices within `radius` (inclusive) of agent `i`, excluding `i`, ascending.
    pub fn query_neighbors(&self, positions: &[Vec3<R>], i: usize, radius: R) -> Vec<usize> {
        let mut out = Vec::new();
        self.query_into(positions, i, radius, &mut out);
        out
    }

    pub fn query_into(&self, positions: &[Vec3<R>], i: usize, radius: R, out: &mut Vec<usize>) {
        out.clear();
        let center = positions[i];
        let [cx, cy, cz] = self.cell_of(center);
        let reach = (radius / self.cell_size).ceil().to_i64().unwrap_or(1).max(1);
        for dx in -reach..=reach {
            for dy in -reach..=reach {
                for dz in -reach..=reach {
                    for &j in self.cell([cx + dx, cy + dy, cz + dz]) {
                        if j != i && positions[j].distance(center) <= radius {
                            out.push(j);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
    }
}

fn cell_coord<R: Real>(p: Vec3<R>, cell_size: R) -> CellCoord {
    let c = |v: R| (v / cell_size).floor().to_i64().unwrap_or(0);
    [c(p.x), c(p.y), c(p.z)]
}

/// Rebuilds the grid from scratch.
pub fn build_grid<R: Real>(positions: &[Vec3<R>], cell_size: R) -> Result<SpatialGrid<R>, SimError> {
    if !(cell_size > R::zero()) || !cell_size.is_finite() {
        return Err(SimError::InvalidParameter(format!(
            "cell size must be > 0, got {cell_size}"
        )));
    }
    let mut cells: HashMap<CellCoord, Vec<usize>> = HashMap::new();
    for (i, &p) in positions.iter().enumerate() {
        if !p.is_finite() {
            return Err(SimError::NonFinitePosition { agent: i });
        }
        cells.entry(cell_coord(p, cell_size)).or_default().push(i);
    }
    Ok(SpatialGrid { cell_size, cells })
}

/// O(N) reference scan with the same inclusion rule as [`SpatialGrid::query_neighbors`].
pub fn naive_neighbors<R: Real>(positions: &[Vec3<R>], i: usize, radius: R) -> Vec<usize> {
    let center = positions[i];
    (0..positions.len())
        .filter(|&j| j != i && positions[j].distance(center) <= radius)
        .collect()
}
