//! The L×L site grid shared by both nodes and the random pattern of
//! successfully entangled pairs it holds after the generation phase.
//!
//! Both nodes generate entanglement between sites at the same coordinate,
//! so one [`EntanglementPattern`] describes the occupancy of both arrays.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A lattice coordinate `(row, col)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Site {
    pub row: usize,
    pub col: usize,
}

impl Site {
    pub const fn new(row: usize, col: usize) -> Self {
        Site { row, col }
    }

    pub fn manhattan(self, other: Site) -> usize {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col)
    }

    pub fn is_adjacent(self, other: Site) -> bool {
        self.manhattan(other) == 1
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.row, self.col)
    }
}

/// Smallest grid that can hold a distance-3 cell.
pub const MIN_GRID_SIZE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridSpec {
    size: usize,
}

impl GridSpec {
    pub fn new(size: usize) -> Result<Self> {
        if size < MIN_GRID_SIZE {
            return Err(Error::InvalidParameter {
                name: "L",
                reason: format!("grid size {size} is below the minimum {MIN_GRID_SIZE}"),
            });
        }
        Ok(GridSpec { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn num_sites(&self) -> usize {
        self.size * self.size
    }

    pub fn contains(&self, site: Site) -> bool {
        site.row < self.size && site.col < self.size
    }

    pub fn index(&self, site: Site) -> usize {
        site.row * self.size + site.col
    }

    pub fn site(&self, index: usize) -> Site {
        Site::new(index / self.size, index % self.size)
    }

    /// Row-major iterator over every site.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        (0..self.num_sites()).map(|i| self.site(i))
    }

    /// In-bounds lattice neighbours in the fixed order up, left, right, down.
    pub fn neighbors(&self, site: Site) -> impl Iterator<Item = Site> {
        let size = self.size;
        let Site { row, col } = site;
        [
            (row > 0).then(|| Site::new(row.wrapping_sub(1), col)),
            (col > 0).then(|| Site::new(row, col.wrapping_sub(1))),
            (col + 1 < size).then(|| Site::new(row, col + 1)),
            (row + 1 < size).then(|| Site::new(row + 1, col)),
        ]
        .into_iter()
        .flatten()
    }
}

/// Sites holding a surviving Bell pair after generation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntanglementPattern {
    grid: GridSpec,
    occupied: BTreeSet<Site>,
}

impl EntanglementPattern {
    pub fn new(grid: GridSpec, sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let occupied: BTreeSet<Site> = sites.into_iter().collect();
        if let Some(bad) = occupied.iter().find(|s| !grid.contains(**s)) {
            return Err(Error::InvalidParameter {
                name: "pattern",
                reason: format!("site {bad} lies outside the {0}x{0} grid", grid.size()),
            });
        }
        Ok(EntanglementPattern { grid, occupied })
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Number of entangled pairs `M`.
    pub fn count(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn contains(&self, site: Site) -> bool {
        self.occupied.contains(&site)
    }

    /// Occupied sites in row-major order.
    pub fn sites(&self) -> impl Iterator<Item = Site> + '_ {
        self.occupied.iter().copied()
    }
}

/// Includes each of the `L²` sites independently with probability `p_gen`.
pub fn sample_entanglement_pattern<R: Rng + ?Sized>(
    grid: GridSpec,
    p_gen: f64,
    rng: &mut R,
) -> Result<EntanglementPattern> {
    crate::error::check_probability("p_gen", p_gen)?;
    let occupied = grid
        .sites()
        .filter(|_| rng.gen::<f64>() < p_gen)
        .collect::<BTreeSet<_>>();
    Ok(EntanglementPattern { grid, occupied })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn certain_and_impossible_generation() {
        let grid = GridSpec::new(19).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_entanglement_pattern(grid, 1.0, &mut rng).unwrap().count(), 361);
        assert_eq!(sample_entanglement_pattern(grid, 0.0, &mut rng).unwrap().count(), 0);
    }

    #[test]
    fn binomial_mean_and_variance() {
        let grid = GridSpec::new(19).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 100_000;
        let counts: Vec<f64> = (0..n)
            .map(|_| sample_entanglement_pattern(grid, 0.3, &mut rng).unwrap().count() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sigma = (361.0_f64 * 0.3 * 0.7).sqrt();
        // standard error of the sample mean is sigma / sqrt(n)
        assert!((mean - 108.3).abs() < 3.0 * sigma / (n as f64).sqrt(), "mean {mean}");
        // relative standard error of the sample variance is about sqrt(2 / n)
        let rel = (var / (sigma * sigma) - 1.0).abs();
        assert!(rel < 3.0 * (2.0 / n as f64).sqrt(), "variance {var}");
    }

    #[test]
    fn same_seed_same_pattern() {
        let grid = GridSpec::new(19).unwrap();
        let a = sample_entanglement_pattern(grid, 0.3, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        let b = sample_entanglement_pattern(grid, 0.3, &mut ChaCha8Rng::seed_from_u64(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_small_grid_and_bad_probability() {
        assert!(GridSpec::new(4).is_err());
        let grid = GridSpec::new(5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_entanglement_pattern(grid, 1.5, &mut rng).is_err());
        assert!(EntanglementPattern::new(grid, [Site::new(5, 0)]).is_err());
    }

    #[test]
    fn neighbor_order_is_fixed() {
        let grid = GridSpec::new(5).unwrap();
        let n: Vec<_> = grid.neighbors(Site::new(2, 2)).collect();
        assert_eq!(n, vec![Site::new(1, 2), Site::new(2, 1), Site::new(2, 3), Site::new(3, 2)]);
        let corner: Vec<_> = grid.neighbors(Site::new(0, 0)).collect();
        assert_eq!(corner, vec![Site::new(0, 1), Site::new(1, 0)]);
    }
}
