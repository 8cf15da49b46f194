//! Finite periodic lattices `(Z/NZ)^d` and their periodic max-norm geometry.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest side for which the offsets `-2..=2` land on distinct sites.
pub const MIN_SIDE: usize = 6;

/// A site of the lattice given by its coordinates, each in `[0, N)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeIndex(pub Vec<usize>);

impl LatticeIndex {
    pub fn coords(&self) -> &[usize] {
        &self.0
    }
}

/// Periodic cubic lattice with `side^dim` sites.
///
/// Sites are linearized with axis 0 varying fastest:
/// `site = c_0 + N c_1 + N^2 c_2 + ...`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    side: usize,
}

impl Lattice {
    pub fn new(dim: usize, side: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        if !side.is_multiple_of(2) {
            return Err(Error::OddSide { side });
        }
        if side < MIN_SIDE {
            return Err(Error::SideTooSmall {
                side,
                min: MIN_SIDE,
            });
        }
        Ok(Self { dim, side })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn num_sites(&self) -> usize {
        self.side.pow(self.dim as u32)
    }

    /// Largest distance usable for decay estimates without wrap contamination.
    pub fn max_decay_distance(&self) -> usize {
        self.side / 2 - 2
    }

    pub fn linearize(&self, index: &LatticeIndex) -> usize {
        self.site(index.coords())
    }

    pub fn index(&self, site: usize) -> LatticeIndex {
        LatticeIndex(self.coords(site))
    }

    pub fn site(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.dim);
        coords
            .iter()
            .rev()
            .fold(0, |acc, &c| acc * self.side + c % self.side)
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        let mut rest = site;
        (0..self.dim)
            .map(|_| {
                let c = rest % self.side;
                rest /= self.side;
                c
            })
            .collect()
    }

    /// The site reached from `site` by the offset vector, wrapping periodically.
    pub fn shift(&self, site: usize, offset: &[i64]) -> usize {
        let n = self.side as i64;
        let mut rest = site;
        let mut stride = 1;
        let mut out = 0;
        for &o in offset {
            let c = (rest % self.side) as i64;
            rest /= self.side;
            out += ((c + o).rem_euclid(n) as usize) * stride;
            stride *= self.side;
        }
        out
    }

    pub fn axis_distance(&self, a: usize, b: usize) -> usize {
        let delta = a.abs_diff(b) % self.side;
        delta.min(self.side - delta)
    }

    /// Periodic max-norm distance `max_j min(|a_j - b_j|, N - |a_j - b_j|)`.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let (mut ra, mut rb) = (a, b);
        let mut best = 0;
        for _ in 0..self.dim {
            best = best.max(self.axis_distance(ra % self.side, rb % self.side));
            ra /= self.side;
            rb /= self.side;
        }
        best
    }

    /// All sites at periodic distance exactly `radius` from `center`, ascending.
    pub fn sphere(&self, center: usize, radius: usize) -> Vec<usize> {
        (0..self.num_sites())
            .filter(|&k| self.distance(center, k) == radius)
            .collect()
    }

    /// Position of every site in an ordering that makes periodic band
    /// matrices banded.
    ///
    /// Each axis is folded as `0, N-1, 1, N-2, ...`, so sites at periodic
    /// axis distance `m` end up at most `2m` positions apart.
    pub fn folded_positions(&self) -> Vec<usize> {
        let fold = |c: usize| {
            if c < self.side / 2 {
                2 * c
            } else {
                2 * (self.side - 1 - c) + 1
            }
        };
        (0..self.num_sites())
            .map(|site| {
                let coords = self.coords(site);
                coords
                    .iter()
                    .rev()
                    .fold(0, |acc, &c| acc * self.side + fold(c))
            })
            .collect()
    }
}

impl std::fmt::Display for Lattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(Z/{}Z)^{}", self.side, self.dim)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_sides() {
        assert_eq!(Lattice::new(1, 7), Err(Error::OddSide { side: 7 }));
        assert!(matches!(
            Lattice::new(1, 4),
            Err(Error::SideTooSmall { .. })
        ));
        assert_eq!(Lattice::new(0, 8), Err(Error::ZeroDimension));
    }

    #[test]
    fn linearization_is_a_bijection() {
        let lat = Lattice::new(3, 6).unwrap();
        for site in 0..lat.num_sites() {
            assert_eq!(lat.linearize(&lat.index(site)), site);
        }
    }

    #[test]
    fn shift_wraps() {
        let lat = Lattice::new(2, 8).unwrap();
        let s = lat.site(&[0, 7]);
        assert_eq!(lat.coords(lat.shift(s, &[-1, 2])), vec![7, 1]);
    }

    #[test]
    fn periodic_distance() {
        let lat = Lattice::new(2, 10).unwrap();
        let a = lat.site(&[1, 1]);
        assert_eq!(lat.distance(a, lat.site(&[9, 2])), 2);
        assert_eq!(lat.distance(a, lat.site(&[6, 1])), 5);
        assert_eq!(lat.sphere(a, 1).len(), 8);
        assert_eq!(lat.sphere(a, 0), vec![a]);
    }

    #[test]
    fn folding_is_a_permutation_with_short_hops() {
        let lat = Lattice::new(1, 12).unwrap();
        let pos = lat.folded_positions();
        let mut sorted = pos.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..12).collect::<Vec<_>>());
        for a in 0..12 {
            for b in 0..12 {
                let d = lat.distance(a, b);
                if d <= 2 {
                    assert!(pos[a].abs_diff(pos[b]) <= 2 * d);
                }
            }
        }
    }
}
