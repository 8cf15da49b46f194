//! The deterministic band unitary `S(t)`, its spectrum, and `U = D S`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::band::{BandLayout, BandedUnitary};
use crate::disorder::DisorderRealization;
use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::params::{check_coupling, ModelParams};

/// Band reach of `S(t)` in max-norm.
pub const REACH: i64 = 2;

/// Row profiles of the one-dimensional band unitary `S_0(t)`, indexed by
/// offset `-2..=2` (array slot `offset + 2`).
///
/// Even rows `2k`: `{-1: rt, 0: r^2, +1: rt, +2: -t^2}`;
/// odd rows `2k+1`: `{-2: -t^2, -1: -tr, 0: r^2, +1: -rt}`.
/// The `+2` entry of even rows anchors the translation along the diagonal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandProfile {
    pub even: [f64; 5],
    pub odd: [f64; 5],
}

impl BandProfile {
    pub fn value(&self, parity: usize, offset: i64) -> f64 {
        if offset.abs() > REACH {
            return 0.0;
        }
        let slot = (offset + REACH) as usize;
        if parity % 2 == 0 {
            self.even[slot]
        } else {
            self.odd[slot]
        }
    }

    /// Entry `<c + offset| S_0 |c>` for a column `c` of the given parity.
    pub fn column_value(&self, parity: usize, offset: i64) -> f64 {
        let row_parity = (parity as i64 + offset).rem_euclid(2) as usize;
        self.value(row_parity, -offset)
    }

    /// Nonzero `(offset, value)` pairs for a row parity.
    pub fn nonzero(&self, parity: usize) -> Vec<(i64, f64)> {
        (-REACH..=REACH)
            .map(|o| (o, self.value(parity, o)))
            .filter(|&(_, v)| v != 0.0)
            .collect()
    }
}

pub fn s0_band_profile(t: f64) -> Result<BandProfile> {
    check_coupling(t)?;
    let r = (1.0 - t * t).sqrt();
    let (rt, r2, t2) = (r * t, r * r, t * t);
    Ok(BandProfile {
        even: [0.0, rt, r2, rt, -t2],
        odd: [-t2, -rt, r2, -rt, 0.0],
    })
}

/// `S_0(t)` on the periodic ring of `side` sites.
pub fn build_s0(t: f64, side: usize) -> Result<BandedUnitary> {
    build_s_tensor(&ModelParams::new(Lattice::new(1, side)?, vec![t])?)
}

/// `S(t) = S_1(t_1) ⊗ ... ⊗ S_d(t_d)`: each entry is the product of the
/// axis profiles at the corresponding offset and row parity.
pub fn build_s_tensor(params: &ModelParams) -> Result<BandedUnitary> {
    let profiles = params
        .t()
        .iter()
        .map(|&t| s0_band_profile(t))
        .collect::<Result<Vec<_>>>()?;
    let lattice = *params.lattice();
    let layout = Arc::new(BandLayout::new(lattice, REACH));
    Ok(BandedUnitary::from_fn(layout, |row, offset| {
        let coords = lattice.coords(row);
        let v = profiles
            .iter()
            .zip(coords.iter().zip(offset))
            .map(|(p, (&c, &o))| p.value(c % 2, o))
            .product::<f64>();
        Complex64::new(v, 0.0)
    }))
}

/// Row `k` of `U` is `e^{-i theta_k}` times row `k` of `S`.
pub fn build_u(s: &BandedUnitary, disorder: &DisorderRealization) -> Result<BandedUnitary> {
    if disorder.lattice() != s.lattice() {
        return Err(Error::LatticeMismatch {
            expected: s.lattice().to_string(),
            actual: disorder.lattice().to_string(),
        });
    }
    Ok(s.scale_rows(&disorder.diagonal()))
}

/// The spectral arc `Sigma_0(t) = { e^{i phi} : |phi| <= arccos(1 - 2 t^2) }`
/// of `S_0(t)`, or the corresponding product arc for `S(t)` in `d > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumArc {
    half_width: f64,
}

pub fn spectrum_arcs(t: f64) -> Result<SpectrumArc> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::ParameterDomain {
            name: "t",
            value: t,
            reason: "arc formula needs t in [0, 1]",
        });
    }
    let c = (1.0 - 2.0 * t * t).clamp(-1.0, 1.0);
    Ok(SpectrumArc {
        half_width: c.acos(),
    })
}

/// `sigma(S(t))` is the set of products of points of the per-axis arcs,
/// i.e. the arc whose half-width is the (capped) sum of the half-widths.
pub fn product_arc(t: &[f64]) -> Result<SpectrumArc> {
    let mut half_width = 0.0;
    for &tj in t {
        half_width += spectrum_arcs(tj)?.half_width;
    }
    Ok(SpectrumArc {
        half_width: half_width.min(PI),
    })
}

impl SpectrumArc {
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Arc endpoints `e^{-i w}` and `e^{+i w}`.
    pub fn endpoints(&self) -> (Complex64, Complex64) {
        (
            Complex64::from_polar(1.0, -self.half_width),
            Complex64::from_polar(1.0, self.half_width),
        )
    }

    pub fn is_full_circle(&self) -> bool {
        self.half_width >= PI
    }

    /// Point on the arc for the band parameter `y`:
    /// `arccos(1 - t^2 (1 + cos y))` traced with either sign.
    pub fn point(t: f64, y: f64, upper: bool) -> Complex64 {
        let phi = (1.0 - t * t * (1.0 + y.cos())).clamp(-1.0, 1.0).acos();
        Complex64::from_polar(1.0, if upper { phi } else { -phi })
    }

    pub fn contains(&self, lambda: Complex64, tolerance: f64) -> Result<bool> {
        let modulus = lambda.norm();
        if (modulus - 1.0).abs() > tolerance {
            return Err(Error::NotUnimodular { modulus, tolerance });
        }
        Ok(lambda.arg().abs() <= self.half_width + tolerance)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn profile_examples() {
        let p = s0_band_profile(0.0).unwrap();
        assert_eq!(p.nonzero(0), vec![(0, 1.0)]);
        assert_eq!(p.nonzero(1), vec![(0, 1.0)]);

        let p = s0_band_profile(0.6).unwrap();
        let expect = [(-1, 0.48), (0, 0.64), (1, 0.48), (2, -0.36)];
        for (got, want) in p.nonzero(0).iter().zip(expect) {
            assert_eq!(got.0, want.0);
            assert_abs_diff_eq!(got.1, want.1, epsilon = 1e-15);
        }
        let odd = [(-2, -0.36), (-1, -0.48), (0, 0.64), (1, -0.48)];
        for (got, want) in p.nonzero(1).iter().zip(odd) {
            assert_eq!(got.0, want.0);
            assert_abs_diff_eq!(got.1, want.1, epsilon = 1e-15);
        }
    }

    #[test]
    fn profile_rows_have_unit_norm() {
        for t in [0.0, 0.1, 0.37, 0.6, 0.99] {
            let p = s0_band_profile(t).unwrap();
            for parity in 0..2 {
                let n: f64 = (-2..=2).map(|o| p.value(parity, o).powi(2)).sum();
                assert_abs_diff_eq!(n, 1.0, epsilon = 1e-15);
            }
        }
        assert!(s0_band_profile(1.0).is_err());
        assert!(s0_band_profile(-0.1).is_err());
    }

    #[test]
    fn column_profile_has_same_moduli() {
        let p = s0_band_profile(0.3).unwrap();
        for parity in 0..2 {
            let mut row: Vec<f64> = (-2..=2).map(|o| p.value(parity, o).abs()).collect();
            let mut col: Vec<f64> = (-2..=2).map(|o| p.column_value(parity, o).abs()).collect();
            row.sort_by(f64::total_cmp);
            col.sort_by(f64::total_cmp);
            assert_eq!(row, col);
        }
    }

    #[test]
    fn s0_small_cases() {
        let id = build_s0(0.0, 8).unwrap();
        for k in 0..8 {
            for c in 0..8 {
                let want = if k == c { 1.0 } else { 0.0 };
                assert_eq!(id.get(k, c), Complex64::new(want, 0.0));
            }
        }
        let s = build_s0(0.6, 8).unwrap();
        assert!(s.unitarity_deviation() < 1e-12);
        assert!(build_s0(0.6, 9).is_err());

        let s = build_s0(0.6, 64).unwrap();
        assert_abs_diff_eq!(s.get(2, 4).re, -0.36, epsilon = 1e-15);
        // Wrapped rows follow the same pattern.
        assert_abs_diff_eq!(s.get(62, 0).re, -0.36, epsilon = 1e-15);
        assert_abs_diff_eq!(s.get(1, 63).re, -0.36, epsilon = 1e-15);
    }

    #[test]
    fn tensor_entries_are_products() {
        let params = ModelParams::symmetric(2, 8, 0.6).unwrap();
        let s = build_s_tensor(&params).unwrap();
        let lat = params.lattice();
        let row = lat.site(&[2, 4]);
        assert_abs_diff_eq!(s.entry(row, &[1, 0]).re, 0.48 * 0.64, epsilon = 1e-15);
        assert_abs_diff_eq!(s.entry(row, &[1, 0]).re, 0.3072, epsilon = 1e-15);
        assert!(s.unitarity_deviation() < 1e-12);

        let id = build_s_tensor(&ModelParams::symmetric(2, 8, 0.0).unwrap()).unwrap();
        assert_eq!(id.unitarity_deviation(), 0.0);
        assert_eq!(id.get(5, 5), Complex64::new(1.0, 0.0));
        assert_eq!(id.get(5, 6), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn arcs() {
        let a = spectrum_arcs(0.0).unwrap();
        assert_eq!(a.half_width(), 0.0);
        assert!(a.contains(Complex64::new(1.0, 0.0), 1e-12).unwrap());
        assert!(!a.contains(Complex64::from_polar(1.0, 0.01), 1e-12).unwrap());

        let a = spectrum_arcs(0.5f64.sqrt()).unwrap();
        assert_abs_diff_eq!(a.half_width(), PI / 2.0, epsilon = 1e-15);

        assert!(spectrum_arcs(1.0).unwrap().is_full_circle());
        assert!(matches!(
            a.contains(Complex64::new(1.1, 0.0), 1e-10),
            Err(Error::NotUnimodular { .. })
        ));

        // Every parametric point lies on the arc.
        let t = 0.3;
        let arc = spectrum_arcs(t).unwrap();
        for i in 0..100 {
            let y = 2.0 * PI * i as f64 / 100.0;
            for upper in [true, false] {
                assert!(arc
                    .contains(SpectrumArc::point(t, y, upper), 1e-12)
                    .unwrap());
            }
        }
    }
}
