//! Sparse band storage for operators on a periodic lattice.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::lattice::Lattice;

/// Offsets in `[-reach, reach]^d` with their max-norm, in base-`(2 reach + 1)`
/// order with axis 0 fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct Stencil {
    reach: i64,
    offsets: Vec<Vec<i64>>,
    norms: Vec<usize>,
    center: usize,
}

impl Stencil {
    pub fn new(dim: usize, reach: i64) -> Self {
        let width = (2 * reach + 1) as usize;
        let count = width.pow(dim as u32);
        let offsets: Vec<Vec<i64>> = (0..count)
            .map(|mut code| {
                (0..dim)
                    .map(|_| {
                        let o = (code % width) as i64 - reach;
                        code /= width;
                        o
                    })
                    .collect()
            })
            .collect();
        let norms = offsets
            .iter()
            .map(|o| {
                o.iter()
                    .map(|x| x.unsigned_abs() as usize)
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let center = (count - 1) / 2;
        Self {
            reach,
            offsets,
            norms,
            center,
        }
    }

    pub fn reach(&self) -> i64 {
        self.reach
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn offset(&self, i: usize) -> &[i64] {
        &self.offsets[i]
    }

    pub fn max_norm(&self, i: usize) -> usize {
        self.norms[i]
    }

    /// Index of the zero offset.
    pub fn center(&self) -> usize {
        self.center
    }

    pub fn position(&self, offset: &[i64]) -> Option<usize> {
        let width = 2 * self.reach + 1;
        let mut code = 0i64;
        for &o in offset.iter().rev() {
            if o.abs() > self.reach {
                return None;
            }
            code = code * width + o + self.reach;
        }
        Some(code as usize)
    }
}

/// Shared geometry: lattice, stencil and the column reached by each
/// `(row, offset)` slot.
#[derive(Debug, PartialEq)]
pub struct BandLayout {
    lattice: Lattice,
    stencil: Stencil,
    columns: Vec<usize>,
}

impl BandLayout {
    pub fn new(lattice: Lattice, reach: i64) -> Self {
        let stencil = Stencil::new(lattice.dim(), reach);
        let mut columns = Vec::with_capacity(lattice.num_sites() * stencil.len());
        for row in 0..lattice.num_sites() {
            for i in 0..stencil.len() {
                columns.push(lattice.shift(row, stencil.offset(i)));
            }
        }
        Self {
            lattice,
            stencil,
            columns,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn stencil(&self) -> &Stencil {
        &self.stencil
    }

    pub fn column(&self, row: usize, slot: usize) -> usize {
        self.columns[row * self.stencil.len() + slot]
    }
}

/// A band matrix on `l^2((Z/NZ)^d)`: entry `(k, k + o)` is stored for every
/// row `k` and offset `o` with max-norm at most 2.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedUnitary {
    layout: Arc<BandLayout>,
    values: Vec<Complex64>,
}

impl BandedUnitary {
    pub fn from_fn(
        layout: Arc<BandLayout>,
        mut entry: impl FnMut(usize, &[i64]) -> Complex64,
    ) -> Self {
        let width = layout.stencil.len();
        let n = layout.lattice.num_sites();
        let mut values = Vec::with_capacity(n * width);
        for row in 0..n {
            for slot in 0..width {
                values.push(entry(row, layout.stencil.offset(slot)));
            }
        }
        Self { layout, values }
    }

    pub fn layout(&self) -> &Arc<BandLayout> {
        &self.layout
    }

    pub fn lattice(&self) -> &Lattice {
        &self.layout.lattice
    }

    pub fn stencil(&self) -> &Stencil {
        &self.layout.stencil
    }

    pub fn dim(&self) -> usize {
        self.layout.lattice.num_sites()
    }

    /// Stored row `k`: one value per stencil slot.
    pub fn row(&self, k: usize) -> &[Complex64] {
        let w = self.layout.stencil.len();
        &self.values[k * w..(k + 1) * w]
    }

    pub fn entry(&self, row: usize, offset: &[i64]) -> Complex64 {
        match self.layout.stencil.position(offset) {
            Some(slot) => self.row(row)[slot],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Matrix element `<row| M |col>`; zero outside the band.
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        let w = self.layout.stencil.len();
        (0..w)
            .find(|&slot| self.layout.column(row, slot) == col)
            .map(|slot| self.values[row * w + slot])
            .unwrap_or_default()
    }

    /// Iterates the stored `(column, value)` pairs of a row.
    pub fn row_entries(&self, row: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let w = self.layout.stencil.len();
        (0..w).map(move |slot| (self.layout.column(row, slot), self.values[row * w + slot]))
    }

    /// Multiplies row `k` by `factor[k]`.
    pub fn scale_rows(&self, factor: &[Complex64]) -> Self {
        let w = self.layout.stencil.len();
        let values = self
            .values
            .chunks(w)
            .zip(factor)
            .flat_map(|(row, &f)| row.iter().map(move |&v| v * f))
            .collect();
        Self {
            layout: Arc::clone(&self.layout),
            values,
        }
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim())
            .map(|k| self.row_entries(k).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    pub fn adjoint_mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.dim()];
        for (k, &xk) in x.iter().enumerate() {
            for (c, v) in self.row_entries(k) {
                y[c] += v.conj() * xk;
            }
        }
        y
    }

    /// `max |M*M - I|` and `max |MM* - I|` over all entries, whichever is larger.
    ///
    /// Both Gram matrices have reach 4, so they are accumulated in a
    /// reach-4 band instead of densely.
    pub fn unitarity_deviation(&self) -> f64 {
        let lattice = *self.lattice();
        let wide = Stencil::new(lattice.dim(), 4);
        let n = self.dim();
        let ww = wide.len();
        let stencil = self.stencil();
        let w = stencil.len();

        // Rows: (MM*)_{ab} = sum_c M_ac conj(M_bc); b = a + (o1 - o2) where
        // a + o1 = b + o2.
        let mut rows = vec![Complex64::new(0.0, 0.0); n * ww];
        // Columns: (M*M)_{ab} = sum_k conj(M_ka) M_kb, a = k + o1, b = k + o2.
        let mut cols = vec![Complex64::new(0.0, 0.0); n * ww];
        let mut delta = vec![0i64; lattice.dim()];
        for k in 0..n {
            let row = self.row(k);
            for i in 0..w {
                let a = self.layout.column(k, i);
                for j in 0..w {
                    for (d, (x, y)) in delta
                        .iter_mut()
                        .zip(stencil.offset(j).iter().zip(stencil.offset(i)))
                    {
                        *d = x - y;
                    }
                    let slot = wide.position(&delta).expect("reach 4 covers differences");
                    cols[a * ww + slot] += row[i].conj() * row[j];
                }
            }
        }
        for a in 0..n {
            for i in 0..w {
                let c = self.layout.column(a, i);
                for j in 0..w {
                    // b with b + o_j = c, i.e. b = a + o_i - o_j.
                    for (d, (x, y)) in delta
                        .iter_mut()
                        .zip(stencil.offset(i).iter().zip(stencil.offset(j)))
                    {
                        *d = x - y;
                    }
                    let b = lattice.shift(a, &delta);
                    if self.layout.column(b, j) != c {
                        continue;
                    }
                    let slot = wide.position(&delta).expect("reach 4 covers differences");
                    rows[a * ww + slot] += self.row(a)[i] * self.row(b)[j].conj();
                }
            }
        }
        // Distinct offsets in the wide stencil may alias to the same site when
        // N < 9; fold them before comparing with the identity.
        let mut worst: f64 = 0.0;
        for gram in [&cols, &rows] {
            for a in 0..n {
                let mut acc: Vec<(usize, Complex64)> = Vec::new();
                for slot in 0..ww {
                    let b = lattice.shift(a, wide.offset(slot));
                    let v = gram[a * ww + slot];
                    match acc.iter_mut().find(|(site, _)| *site == b) {
                        Some((_, total)) => *total += v,
                        None => acc.push((b, v)),
                    }
                }
                for (b, v) in acc {
                    let target = if b == a { 1.0 } else { 0.0 };
                    worst = worst.max((v - target).norm());
                }
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for k in 0..n {
            for (c, v) in self.row_entries(k) {
                m[(k, c)] += v;
            }
        }
        m
    }

    /// Row-major `(re, im)` pairs, one line per row.
    pub fn to_csv(&self) -> String {
        let dense = self.to_dense();
        let mut out = String::new();
        for r in 0..dense.nrows() {
            let line: Vec<String> = (0..dense.ncols())
                .flat_map(|c| {
                    let v = dense[(r, c)];
                    [format!("{:.16e}", v.re), format!("{:.16e}", v.im)]
                })
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Row-major little-endian `f64` pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let dense = self.to_dense();
        let mut out = Vec::with_capacity(dense.len() * 16);
        for r in 0..dense.nrows() {
            for c in 0..dense.ncols() {
                let v = dense[(r, c)];
                out.extend_from_slice(&v.re.to_le_bytes());
                out.extend_from_slice(&v.im.to_le_bytes());
            }
        }
        out
    }
}
