//! LU factorization with partial pivoting for `M - z` where `M` is a
//! periodic band operator.
//!
//! Periodic wrap-around destroys bandedness in the natural site order, so
//! sites are first permuted with [`Lattice::folded_positions`]; in that
//! order every stored entry lies within a fixed bandwidth and the
//! factorization costs `O(n kl (kl + ku))`.
//!
//! Storage follows the LAPACK `gbtrf` layout: column `j` holds rows
//! `j - kl - ku ..= j + kl`, the extra `kl` superdiagonals receiving the
//! fill-in produced by row interchanges.

use num_complex::Complex64;

use crate::band::BandedUnitary;
use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<Complex64>,
    pivots: Vec<usize>,
    position: Vec<usize>,
}

impl BandLu {
    /// Factors `M - shift * I`.
    pub fn factor_shifted(m: &BandedUnitary, shift: Complex64) -> Result<Self> {
        let n = m.dim();
        let position = m.lattice().folded_positions();
        let mut kl = 0;
        let mut ku = 0;
        for row in 0..n {
            for (col, v) in m.row_entries(row) {
                if v == ZERO {
                    continue;
                }
                let (pr, pc) = (position[row], position[col]);
                if pr > pc {
                    kl = kl.max(pr - pc);
                } else {
                    ku = ku.max(pc - pr);
                }
            }
        }
        let ld = 2 * kl + ku + 1;
        let mut lu = Self {
            n,
            kl,
            ku,
            ab: vec![ZERO; n * ld],
            pivots: vec![0; n],
            position,
        };
        for row in 0..n {
            for (col, v) in m.row_entries(row) {
                if v != ZERO {
                    let (pr, pc) = (lu.position[row], lu.position[col]);
                    *lu.at_mut(pr, pc) += v;
                }
            }
            let p = lu.position[row];
            *lu.at_mut(p, p) -= shift;
        }
        lu.factor()?;
        Ok(lu)
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn ld(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i + self.kl + self.ku >= j && i <= j + self.kl);
        j * self.ld() + self.kl + self.ku + i - j
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> Complex64 {
        self.ab[self.idx(i, j)]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        let k = self.idx(i, j);
        &mut self.ab[k]
    }

    fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let mut last_col = 0;
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let mut p = 0;
            let mut best = self.at(j, j).norm();
            for i in 1..=km {
                let v = self.at(j + i, j).norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            self.pivots[j] = j + p;
            if best == 0.0 {
                return Err(Error::SingularPivot { position: j });
            }
            last_col = last_col.max((j + self.ku + p).min(n - 1));
            if p != 0 {
                for c in j..=last_col {
                    let a = self.idx(j, c);
                    let b = self.idx(j + p, c);
                    self.ab.swap(a, b);
                }
            }
            let inv = self.at(j, j).inv();
            for i in 1..=km {
                *self.at_mut(j + i, j) *= inv;
            }
            for c in j + 1..=last_col {
                let f = self.at(j, c);
                if f == ZERO {
                    continue;
                }
                for i in 1..=km {
                    let l = self.at(j + i, j);
                    *self.at_mut(j + i, c) -= l * f;
                }
            }
        }
        Ok(())
    }

    /// Solves `(M - z) x = b` with `b` and `x` in natural site order.
    pub fn solve(&self, rhs: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let mut x = vec![ZERO; n];
        for (site, &v) in rhs.iter().enumerate() {
            x[self.position[site]] = v;
        }
        for j in 0..n {
            let p = self.pivots[j];
            if p != j {
                x.swap(j, p);
            }
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            for i in 1..=self.kl.min(n - 1 - j) {
                x[j + i] -= self.at(j + i, j) * xj;
            }
        }
        let reach = self.kl + self.ku;
        for j in (0..n).rev() {
            x[j] /= self.at(j, j);
            let xj = x[j];
            if xj == ZERO {
                continue;
            }
            for i in j.saturating_sub(reach)..j {
                x[i] -= self.at(i, j) * xj;
            }
        }
        self.position.iter().map(|&p| x[p]).collect()
    }

    /// Solves for the unit vector at `site`.
    pub fn solve_unit(&self, site: usize) -> Vec<Complex64> {
        let mut rhs = vec![ZERO; self.n];
        rhs[site] = Complex64::new(1.0, 0.0);
        self.solve(&rhs)
    }
}
