//! Periodic grids on the unit torus and cell-averaged scalar fields.
//!
//! The torus `T^d` (`d = 1, 2`) has total volume 1 and is split into `N`
//! uniform cells per axis of size `h = 1/N`. Fields store one cell average
//! per cell; for `d = 2` the storage is row-major, `index = i0 * N + i1`.

use crate::sum::{exact_sum, ExactSum};
use crate::{Error, Result};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::io::{self, Write};

/// Uniform periodic grid over `T^d` with `N` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    /// Build a grid with `n` cells per axis in dimension `dim`.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        if n < 2 {
            return Err(Error::GridTooCoarse(n));
        }
        Ok(Self { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per axis.
    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    /// Cell size `h = 1/N` (same on every axis).
    pub fn cell_size(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Cell volume `h^dim`; the count times this is exactly the torus volume 1.
    pub fn cell_volume(&self) -> f64 {
        self.cell_size().powi(self.dim as i32)
    }

    /// Total number of cells, `N^dim`.
    pub fn cell_count(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Linear index of cell `(i0, i1)`; `i1` is ignored for `dim = 1`.
    pub fn index(&self, i0: usize, i1: usize) -> usize {
        debug_assert!(i0 < self.n);
        if self.dim == 1 {
            i0
        } else {
            i0 * self.n + i1
        }
    }

    /// Neighbor of `idx` one cell forward along `axis`, with periodic wrap.
    pub fn neighbor(&self, idx: usize, axis: usize) -> usize {
        debug_assert!(axis < self.dim);
        match (self.dim, axis) {
            (1, _) => {
                if idx + 1 == self.n {
                    0
                } else {
                    idx + 1
                }
            }
            (_, 0) => {
                let (i0, i1) = (idx / self.n, idx % self.n);
                let i0 = if i0 + 1 == self.n { 0 } else { i0 + 1 };
                i0 * self.n + i1
            }
            _ => {
                let (i0, i1) = (idx / self.n, idx % self.n);
                let i1 = if i1 + 1 == self.n { 0 } else { i1 + 1 };
                i0 * self.n + i1
            }
        }
    }

    /// Neighbor of `idx` one cell backward along `axis`.
    pub fn neighbor_back(&self, idx: usize, axis: usize) -> usize {
        debug_assert!(axis < self.dim);
        match (self.dim, axis) {
            (1, _) => {
                if idx == 0 {
                    self.n - 1
                } else {
                    idx - 1
                }
            }
            (_, 0) => {
                let (i0, i1) = (idx / self.n, idx % self.n);
                let i0 = if i0 == 0 { self.n - 1 } else { i0 - 1 };
                i0 * self.n + i1
            }
            _ => {
                let (i0, i1) = (idx / self.n, idx % self.n);
                let i1 = if i1 == 0 { self.n - 1 } else { i1 - 1 };
                i0 * self.n + i1
            }
        }
    }

    /// Midpoint coordinates of the cell; the second entry is 0 for `dim = 1`.
    pub fn cell_center(&self, idx: usize) -> [f64; 2] {
        let h = self.cell_size();
        if self.dim == 1 {
            [(idx as f64 + 0.5) * h, 0.0]
        } else {
            let (i0, i1) = (idx / self.n, idx % self.n);
            [(i0 as f64 + 0.5) * h, (i1 as f64 + 0.5) * h]
        }
    }
}

/// Closed interval `[lo, hi]` with positive length, used for state bands `E`
/// and flux validity ranges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::EmptyInterval { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn length(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        [self.lo, self.hi].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let [lo, hi] = <[f64; 2]>::deserialize(deserializer)?;
        Interval::new(lo, hi).map_err(|e| D::Error::custom(e.to_string()))
    }
}

/// Cell-averaged scalar field on a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl ScalarField {
    /// Wrap explicit cell values; rejects length mismatch and non-finite data.
    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::FieldLength {
                got: values.len(),
                want: grid.cell_count(),
            });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(bad));
        }
        Ok(Self { grid, values })
    }

    /// Midpoint sampling of analytic initial data. The closure receives the
    /// cell center as `[x, y]` (`y = 0` for `dim = 1`).
    pub fn from_fn<F: Fn([f64; 2]) -> f64>(grid: TorusGrid, f: F) -> Result<Self> {
        let values = (0..grid.cell_count())
            .map(|idx| f(grid.cell_center(idx)))
            .collect();
        Self::from_values(grid, values)
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Result<Self> {
        Self::from_values(grid, vec![c; grid.cell_count()])
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Map each cell value, keeping the grid.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::from_values(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Dump as CSV: header `# dim,N`, then one `index,value` row per cell
    /// (row-major for `dim = 2`).
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# {},{}", self.grid.dim(), self.grid.n_per_axis())?;
        for (idx, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", idx, v)?;
        }
        Ok(())
    }
}

/// Mean value `∫ u`, i.e. the sum of cell values times the cell volume.
///
/// Uses exactly rounded summation, so the result does not depend on any
/// rearrangement of the cells and is reproducible bit-for-bit.
pub fn mean(u: &ScalarField) -> f64 {
    exact_sum(u.values.iter().copied()) * u.grid.cell_volume()
}

/// Discrete `L^p` distance `(Σ |u_i - v_i|^p h^dim)^{1/p}` for `p >= 1`.
pub fn lp_distance(u: &ScalarField, v: &ScalarField, p: f64) -> Result<f64> {
    if u.grid != v.grid {
        return Err(Error::GridMismatch);
    }
    if !(p >= 1.0) {
        return Err(Error::BadExponent(p));
    }
    let mut acc = ExactSum::new();
    for (a, b) in u.values.iter().zip(&v.values) {
        let d = (a - b).abs();
        let term = if p == 1.0 {
            d
        } else if p == 2.0 {
            d * d
        } else {
            d.powf(p)
        };
        acc.add(term);
    }
    let total = acc.value() * u.grid.cell_volume();
    if p == 1.0 {
        Ok(total)
    } else if p == 2.0 {
        Ok(total.sqrt())
    } else {
        Ok(total.powf(1.0 / p))
    }
}

/// `L^p` norm against zero.
pub fn lp_norm(u: &ScalarField, p: f64) -> Result<f64> {
    let zero = ScalarField::constant(u.grid, 0.0).expect("zero field");
    lp_distance(u, &zero, p)
}

/// `L^1` distance to the own mean value.
pub fn l1_to_mean(u: &ScalarField) -> f64 {
    let m = mean(u);
    let mut acc = ExactSum::new();
    for &v in &u.values {
        acc.add((v - m).abs());
    }
    acc.value() * u.grid.cell_volume()
}

/// Discrete total variation: sum over axes of `Σ |u(i+e) - u(i)| h^(dim-1)`
/// with periodic wrap.
pub fn bv_seminorm(u: &ScalarField) -> f64 {
    let grid = u.grid;
    let face_area = grid.cell_size().powi(grid.dim() as i32 - 1);
    let mut acc = ExactSum::new();
    for axis in 0..grid.dim() {
        for idx in 0..grid.cell_count() {
            let nb = grid.neighbor(idx, axis);
            acc.add((u.values[nb] - u.values[idx]).abs());
        }
    }
    acc.value() * face_area
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_field(grid: TorusGrid, seed: u64) -> ScalarField {
        let mut rng = StdRng::seed_from_u64(seed);
        ScalarField::from_values(
            grid,
            (0..grid.cell_count()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap()
    }

    fn shifted(u: &ScalarField, by: usize) -> ScalarField {
        let mut vals = u.values().to_vec();
        let len = vals.len();
        vals.rotate_left(by % len);
        ScalarField::from_values(u.grid(), vals).unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = TorusGrid::new(1, 4).unwrap();
        assert_eq!(g.cell_count(), 4);
        assert_eq!(g.cell_size(), 0.25);

        let g2 = TorusGrid::new(2, 8).unwrap();
        assert_eq!(g2.cell_count(), 64);
        assert_eq!(g2.cell_size(), 0.125);

        assert!(matches!(TorusGrid::new(3, 8), Err(Error::UnsupportedDimension(3))));
        assert!(matches!(TorusGrid::new(1, 1), Err(Error::GridTooCoarse(1))));
    }

    #[test]
    fn grid_volume_is_one() {
        for dim in [1, 2] {
            for n in [2, 5, 17] {
                let g = TorusGrid::new(dim, n).unwrap();
                assert!((g.cell_count() as f64 * g.cell_volume() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn neighbor_wraps() {
        let g = TorusGrid::new(2, 4).unwrap();
        let idx = g.index(3, 2);
        assert_eq!(g.neighbor(idx, 0), g.index(0, 2));
        assert_eq!(g.neighbor(idx, 1), g.index(3, 3));
        assert_eq!(g.neighbor_back(g.index(0, 0), 0), g.index(3, 0));
        assert_eq!(g.neighbor_back(g.index(0, 0), 1), g.index(0, 3));
    }

    #[test]
    fn mean_of_constant() {
        for dim in [1, 2] {
            let g = TorusGrid::new(dim, 8).unwrap();
            let u = ScalarField::constant(g, 0.37).unwrap();
            assert_eq!(mean(&u), 0.37);
        }
    }

    #[test]
    fn mean_of_sine_vanishes() {
        let g = TorusGrid::new(1, 64).unwrap();
        let u = ScalarField::from_fn(g, |[x, _]| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        assert!(mean(&u).abs() < 1e-14);
    }

    #[test]
    fn mean_matches_naive_oracle() {
        let g = TorusGrid::new(2, 16).unwrap();
        let u = random_field(g, 11);
        let naive: f64 = u.values().iter().sum::<f64>() * g.cell_volume();
        assert!((mean(&u) - naive).abs() < 1e-12);
    }

    #[test]
    fn mean_shift_invariant_exactly() {
        let g = TorusGrid::new(1, 97).unwrap();
        let u = random_field(g, 3);
        for by in [1, 13, 50, 96] {
            assert_eq!(mean(&u).to_bits(), mean(&shifted(&u, by)).to_bits());
        }
    }

    #[test]
    fn lp_examples() {
        let g = TorusGrid::new(1, 32).unwrap();
        let u = random_field(g, 5);
        assert_eq!(lp_distance(&u, &u, 2.0).unwrap(), 0.0);

        let one = ScalarField::constant(g, 1.0).unwrap();
        let zero = ScalarField::constant(g, 0.0).unwrap();
        assert!((lp_distance(&one, &zero, 1.0).unwrap() - 1.0).abs() < 1e-15);

        let v = random_field(g, 6);
        let naive: f64 = u
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            * g.cell_volume();
        assert!((lp_distance(&u, &v, 2.0).unwrap() - naive.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lp_rejects_grid_mismatch_and_bad_p() {
        let u = random_field(TorusGrid::new(1, 8).unwrap(), 0);
        let v = random_field(TorusGrid::new(1, 16).unwrap(), 0);
        assert!(matches!(lp_distance(&u, &v, 1.0), Err(Error::GridMismatch)));
        let w = random_field(TorusGrid::new(1, 8).unwrap(), 1);
        assert!(matches!(lp_distance(&u, &w, 0.5), Err(Error::BadExponent(_))));
    }

    #[test]
    fn bv_of_constant_is_zero() {
        let g = TorusGrid::new(2, 8).unwrap();
        assert_eq!(bv_seminorm(&ScalarField::constant(g, 4.2).unwrap()), 0.0);
    }

    #[test]
    fn bv_of_half_indicator_is_two() {
        let g = TorusGrid::new(1, 64).unwrap();
        let u = ScalarField::from_fn(g, |[x, _]| if x < 0.5 { 1.0 } else { 0.0 }).unwrap();
        assert_eq!(bv_seminorm(&u), 2.0);
    }

    #[test]
    fn bv_matches_naive_oracle_on_sine() {
        let g = TorusGrid::new(1, 256).unwrap();
        let u = ScalarField::from_fn(g, |[x, _]| (2.0 * std::f64::consts::PI * x).sin()).unwrap();
        let mut naive = 0.0;
        for i in 0..256 {
            naive += (u.values()[(i + 1) % 256] - u.values()[i]).abs();
        }
        // The reduction is correctly rounded; the naive oracle may sit a few
        // ulps away from the exact value.
        assert!((bv_seminorm(&u) - naive).abs() <= 4.0 * f64::EPSILON * naive);
    }

    #[test]
    fn rejects_non_finite_values() {
        let g = TorusGrid::new(1, 4).unwrap();
        let res = ScalarField::from_values(g, vec![0.0, f64::NAN, 0.0, 0.0]);
        assert!(matches!(res, Err(Error::NonFinite(1))));
    }

    #[test]
    fn csv_format() {
        let g = TorusGrid::new(1, 2).unwrap();
        let u = ScalarField::from_values(g, vec![0.5, -1.0]).unwrap();
        let mut buf = Vec::new();
        u.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "# 1,2\n0,0.5\n1,-1\n");
    }

    proptest! {
        #[test]
        fn triangle_inequality(seed in 0u64..500) {
            let g = TorusGrid::new(1, 32).unwrap();
            let u = random_field(g, seed);
            let v = random_field(g, seed.wrapping_add(1));
            let w = random_field(g, seed.wrapping_add(2));
            for p in [1.0, 2.0, 3.5] {
                let uv = lp_distance(&u, &v, p).unwrap();
                let vw = lp_distance(&v, &w, p).unwrap();
                let uw = lp_distance(&u, &w, p).unwrap();
                prop_assert!(uw <= uv + vw + 1e-12);
            }
        }

        #[test]
        fn mean_is_linear(seed in 0u64..500, a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let g = TorusGrid::new(1, 48).unwrap();
            let u = random_field(g, seed);
            let v = random_field(g, seed.wrapping_add(9));
            let combo = ScalarField::from_values(
                g,
                u.values().iter().zip(v.values()).map(|(x, y)| a * x + b * y).collect(),
            ).unwrap();
            prop_assert!((mean(&combo) - (a * mean(&u) + b * mean(&v))).abs() < 1e-12);
        }

        #[test]
        fn bv_shift_and_flip_invariant(seed in 0u64..500, by in 1usize..63) {
            let g = TorusGrid::new(1, 64).unwrap();
            let u = random_field(g, seed);
            let s = shifted(&u, by);
            prop_assert_eq!(bv_seminorm(&u).to_bits(), bv_seminorm(&s).to_bits());
            let flipped = u.map(|v| -v).unwrap();
            prop_assert_eq!(bv_seminorm(&u).to_bits(), bv_seminorm(&flipped).to_bits());
        }
    }
}
