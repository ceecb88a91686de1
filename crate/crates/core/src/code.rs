//! Unrotated planar surface code embedded in a `(2d-1)×(2d-1)` cell.
//!
//! Cell-local convention: data qubits sit where `row + col` is even,
//! X-type checks at (even row, odd col), Z-type checks at (odd row, even
//! col). Logical Z runs along the top row and logical X down the left
//! column; the two overlap only at the corner `(0, 0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{GridSpec, Site};
use crate::pauli::PauliFrame;

pub const DEFAULT_MIN_DISTANCE: usize = 3;

/// Number of data qubits of the distance-`d` unrotated code.
pub const fn num_data_qubits(d: usize) -> usize {
    d * d + (d - 1) * (d - 1)
}

/// Side length of the cell occupied by a distance-`d` code.
pub const fn cell_width(d: usize) -> usize {
    2 * d - 1
}

/// Largest `d` with `d² + (d−1)² ≤ m`, optionally capped so that the cell
/// fits the grid. Errors when the result is below `min_distance`.
pub fn choose_code_distance(m: usize, grid: Option<GridSpec>, min_distance: usize) -> Result<usize> {
    let mut d = 0;
    while num_data_qubits(d + 1) <= m {
        d += 1;
    }
    if let Some(grid) = grid {
        d = d.min(grid.size().div_ceil(2));
    }
    if d < min_distance.max(1) {
        return Err(Error::InsufficientEntanglement {
            available: m,
            min_distance,
        });
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckKind {
    /// Product of X on its support; detects Z and Y.
    X,
    /// Product of Z on its support; detects X and Y.
    Z,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    /// Cell-local position of the ancilla site.
    pub site: Site,
    /// Indices into [`CodeLayout::data_sites`].
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeLayout {
    distance: usize,
    origin: Site,
    data_sites: Vec<Site>,
    x_checks: Vec<Check>,
    z_checks: Vec<Check>,
    logical_z: Vec<usize>,
    logical_x: Vec<usize>,
    /// For each data qubit, the adjacent X-check and Z-check indices.
    x_neighbors: Vec<Vec<usize>>,
    z_neighbors: Vec<Vec<usize>>,
}

impl CodeLayout {
    /// Builds the distance-`d` layout with its top-left corner at `origin`.
    pub fn new(distance: usize, origin: Site, grid: GridSpec) -> Result<Self> {
        if distance < 2 {
            return Err(Error::InvalidParameter {
                name: "distance",
                reason: format!("distance {distance} is below 2"),
            });
        }
        let w = cell_width(distance);
        let far = Site::new(origin.row + w - 1, origin.col + w - 1);
        if !grid.contains(far) {
            return Err(Error::CellOutOfBounds {
                distance,
                origin,
                grid_size: grid.size(),
            });
        }

        let mut index_of = vec![usize::MAX; w * w];
        let mut data_sites = Vec::with_capacity(num_data_qubits(distance));
        for r in 0..w {
            for c in 0..w {
                if (r + c) % 2 == 0 {
                    index_of[r * w + c] = data_sites.len();
                    data_sites.push(Site::new(r, c));
                }
            }
        }

        let support_of = |r: usize, c: usize| -> Vec<usize> {
            let mut s = Vec::with_capacity(4);
            if r > 0 {
                s.push(index_of[(r - 1) * w + c]);
            }
            if c > 0 {
                s.push(index_of[r * w + c - 1]);
            }
            if c + 1 < w {
                s.push(index_of[r * w + c + 1]);
            }
            if r + 1 < w {
                s.push(index_of[(r + 1) * w + c]);
            }
            s.sort_unstable();
            s
        };

        let mut x_checks = Vec::new();
        let mut z_checks = Vec::new();
        for r in 0..w {
            for c in 0..w {
                match (r % 2, c % 2) {
                    (0, 1) => x_checks.push(Check {
                        site: Site::new(r, c),
                        support: support_of(r, c),
                    }),
                    (1, 0) => z_checks.push(Check {
                        site: Site::new(r, c),
                        support: support_of(r, c),
                    }),
                    _ => {}
                }
            }
        }

        let n = data_sites.len();
        let mut x_neighbors = vec![Vec::new(); n];
        let mut z_neighbors = vec![Vec::new(); n];
        for (i, check) in x_checks.iter().enumerate() {
            for &q in &check.support {
                x_neighbors[q].push(i);
            }
        }
        for (i, check) in z_checks.iter().enumerate() {
            for &q in &check.support {
                z_neighbors[q].push(i);
            }
        }

        let logical_z = (0..distance).map(|j| index_of[2 * j]).collect();
        let logical_x = (0..distance).map(|i| index_of[2 * i * w]).collect();

        Ok(CodeLayout {
            distance,
            origin,
            data_sites,
            x_checks,
            z_checks,
            logical_z,
            logical_x,
            x_neighbors,
            z_neighbors,
        })
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn origin(&self) -> Site {
        self.origin
    }

    pub fn num_data(&self) -> usize {
        self.data_sites.len()
    }

    /// Cell-local data sites in row-major order.
    pub fn data_sites(&self) -> &[Site] {
        &self.data_sites
    }

    /// Data sites translated to grid coordinates, in the same order.
    pub fn global_data_sites(&self) -> Vec<Site> {
        self.data_sites.iter().map(|&s| self.to_global(s)).collect()
    }

    pub fn to_global(&self, local: Site) -> Site {
        Site::new(self.origin.row + local.row, self.origin.col + local.col)
    }

    /// Index of a cell-local data site, if it is one.
    pub fn data_index(&self, local: Site) -> Option<usize> {
        let w = cell_width(self.distance);
        if local.row >= w || local.col >= w || !(local.row + local.col).is_multiple_of(2) {
            return None;
        }
        self.data_sites.binary_search(&local).ok()
    }

    pub fn checks(&self, kind: CheckKind) -> &[Check] {
        match kind {
            CheckKind::X => &self.x_checks,
            CheckKind::Z => &self.z_checks,
        }
    }

    pub fn x_checks(&self) -> &[Check] {
        &self.x_checks
    }

    pub fn z_checks(&self) -> &[Check] {
        &self.z_checks
    }

    /// Index of the check of `kind` at a cell-local site.
    pub fn check_index(&self, kind: CheckKind, local: Site) -> Option<usize> {
        self.checks(kind).iter().position(|c| c.site == local)
    }

    /// Checks of `kind` adjacent to data qubit `q`.
    pub fn adjacent_checks(&self, kind: CheckKind, q: usize) -> &[usize] {
        match kind {
            CheckKind::X => &self.x_neighbors[q],
            CheckKind::Z => &self.z_neighbors[q],
        }
    }

    /// Data qubits of the top row; a Z string here is logical Z.
    pub fn logical_z_support(&self) -> &[usize] {
        &self.logical_z
    }

    /// Data qubits of the left column; an X string here is logical X.
    pub fn logical_x_support(&self) -> &[usize] {
        &self.logical_x
    }
}

/// Defects of each check type, as sorted check indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyndromeBits {
    pub x_defects: Vec<usize>,
    pub z_defects: Vec<usize>,
}

impl SyndromeBits {
    pub fn is_trivial(&self) -> bool {
        self.x_defects.is_empty() && self.z_defects.is_empty()
    }

    pub fn defects(&self, kind: CheckKind) -> &[usize] {
        match kind {
            CheckKind::X => &self.x_defects,
            CheckKind::Z => &self.z_defects,
        }
    }
}

/// Parity of each check against the frame's error.
pub fn syndrome(layout: &CodeLayout, frame: &PauliFrame) -> SyndromeBits {
    debug_assert_eq!(frame.len(), layout.num_data());
    let flipped = |checks: &[Check], hit: &dyn Fn(usize) -> bool| -> Vec<usize> {
        checks
            .iter()
            .enumerate()
            .filter(|(_, c)| c.support.iter().filter(|&&q| hit(q)).count() % 2 == 1)
            .map(|(i, _)| i)
            .collect()
    };
    SyndromeBits {
        x_defects: flipped(&layout.x_checks, &|q| frame.has_z(q)),
        z_defects: flipped(&layout.z_checks, &|q| frame.has_x(q)),
    }
}
