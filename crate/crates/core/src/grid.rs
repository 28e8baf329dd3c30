//! Periodic collocation grids.
//!
//! A [`Grid`] is always stored with three axes. Two-dimensional grids carry a
//! degenerate third axis of length one, so every array in the crate has the
//! storage shape `(nx, ny, nz)` with `nz == 1` in 2D.

use crate::{Error, Result};
use std::f64::consts::PI;

/// Periodic box `[0, L_x) x [0, L_y) (x [0, L_z))` with `n_i` collocation
/// points per axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    dim: usize,
    lengths: [f64; 3],
    modes: [usize; 3],
}

impl Grid {
    pub fn new(lengths: &[f64], modes: &[usize]) -> Result<Self> {
        let dim = modes.len();
        if !(dim == 2 || dim == 3) {
            return Err(Error::Config(format!(
                "grid dimension must be 2 or 3, got {dim}"
            )));
        }
        if lengths.len() != dim {
            return Err(Error::Config(format!(
                "grid has {dim} mode counts but {} lengths",
                lengths.len()
            )));
        }
        for (axis, (&n, &l)) in modes.iter().zip(lengths).enumerate() {
            if n < 4 || n % 2 != 0 {
                return Err(Error::Config(format!(
                    "axis {axis}: mode count must be even and >= 4, got {n}"
                )));
            }
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::Config(format!(
                    "axis {axis}: length must be positive, got {l}"
                )));
            }
        }
        let mut g = Grid {
            dim,
            lengths: [1.0; 3],
            modes: [1; 3],
        };
        g.lengths[..dim].copy_from_slice(lengths);
        g.modes[..dim].copy_from_slice(modes);
        Ok(g)
    }

    /// Square `(0, 2pi)^2` grid with `n` points per axis.
    pub fn periodic_2d(n: usize) -> Result<Self> {
        Self::new(&[2.0 * PI, 2.0 * PI], &[n, n])
    }

    /// Unit box `(0, 1)^d` with `n` points per axis.
    pub fn unit_box(dim: usize, n: usize) -> Result<Self> {
        Self::new(&vec![1.0; dim], &vec![n; dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths[..self.dim]
    }

    pub fn modes(&self) -> &[usize] {
        &self.modes[..self.dim]
    }

    /// Storage shape, padded with a trailing `1` in 2D.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.modes[0], self.modes[1], self.modes[2])
    }

    pub(crate) fn shape3(&self) -> [usize; 3] {
        self.modes
    }

    /// Total number of collocation points.
    pub fn len(&self) -> usize {
        self.modes.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Domain measure `|Omega|`.
    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Signed mode index of storage position `j` on `axis`, in
    /// `{-n/2, ..., n/2 - 1}`.
    pub fn signed_index(&self, axis: usize, j: usize) -> i64 {
        let n = self.modes[axis];
        if n == 1 {
            return 0;
        }
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    /// Storage position of a signed index, if it lies inside the grid.
    pub fn storage_index(&self, axis: usize, signed: i64) -> Option<usize> {
        let n = self.modes[axis] as i64;
        if n == 1 {
            return (signed == 0).then_some(0);
        }
        if signed < -n / 2 || signed >= n / 2 {
            return None;
        }
        Some(signed.rem_euclid(n) as usize)
    }

    /// Fundamental wavenumber `2 pi / L` of an axis.
    pub fn base_wavenumber(&self, axis: usize) -> f64 {
        2.0 * PI / self.lengths[axis]
    }

    /// Physical wavenumber at storage position `j`.
    pub fn wavenumber(&self, axis: usize, j: usize) -> f64 {
        if axis >= self.dim {
            return 0.0;
        }
        self.base_wavenumber(axis) * self.signed_index(axis, j) as f64
    }

    /// Collocation coordinate `i * L / n`.
    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        if axis >= self.dim {
            return 0.0;
        }
        i as f64 * self.lengths[axis] / self.modes[axis] as f64
    }

    pub fn is_nyquist(&self, axis: usize, j: usize) -> bool {
        axis < self.dim && j == self.modes[axis] / 2
    }
}

/// Per-axis signed mode indices; unused trailing components are zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Wavevector(pub [i64; 3]);

impl Wavevector {
    pub fn new_2d(kx: i64, ky: i64) -> Self {
        Wavevector([kx, ky, 0])
    }

    pub fn new_3d(kx: i64, ky: i64, kz: i64) -> Self {
        Wavevector([kx, ky, kz])
    }

    pub fn negated(&self) -> Self {
        Wavevector([-self.0[0], -self.0[1], -self.0[2]])
    }

    /// Storage position on `grid`, or an error when a component is out of
    /// range.
    pub fn locate(&self, grid: &Grid) -> Result<(usize, usize, usize)> {
        let mut pos = [0usize; 3];
        for (axis, p) in pos.iter_mut().enumerate() {
            *p = grid.storage_index(axis, self.0[axis]).ok_or_else(|| {
                Error::Config(format!(
                    "wavevector {:?} outside the grid's index range on axis {axis}",
                    self.0
                ))
            })?;
        }
        Ok((pos[0], pos[1], pos[2]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_small_mode_counts() {
        assert!(Grid::new(&[1.0, 1.0], &[6, 5]).is_err());
        assert!(Grid::new(&[1.0, 1.0], &[2, 8]).is_err());
        assert!(Grid::new(&[1.0, -1.0], &[8, 8]).is_err());
        assert!(Grid::new(&[1.0], &[8]).is_err());
    }

    #[test]
    fn signed_indices_cover_half_open_range() {
        let g = Grid::periodic_2d(8).unwrap();
        let idx: Vec<i64> = (0..8).map(|j| g.signed_index(0, j)).collect();
        assert_eq!(idx, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        for s in -4..4 {
            assert_eq!(g.signed_index(0, g.storage_index(0, s).unwrap()), s);
        }
        assert_eq!(g.storage_index(0, 4), None);
        assert_eq!(g.storage_index(2, 0), Some(0));
        assert_eq!(g.storage_index(2, 1), None);
    }

    #[test]
    fn wavenumbers_scale_with_length() {
        let g = Grid::unit_box(2, 8).unwrap();
        assert!((g.wavenumber(1, 3) - 6.0 * PI).abs() < 1e-14);
        assert!((g.wavenumber(1, 7) + 2.0 * PI).abs() < 1e-14);
        assert_eq!(g.wavenumber(2, 0), 0.0);
        assert_eq!(g.shape(), (8, 8, 1));
        assert!((g.volume() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn wavevector_lookup() {
        let g = Grid::new(&[1.0, 1.0, 1.0], &[4, 6, 8]).unwrap();
        assert_eq!(Wavevector::new_3d(-1, 2, -4).locate(&g).unwrap(), (3, 2, 4));
        assert!(Wavevector::new_3d(2, 0, 0).locate(&g).is_err());
    }
}
