use crate::grid::{Grid, Wavevector};
use crate::{Error, Result};
use ndarray::Array3;
use num_complex::Complex64;

/// What a spectral field represents. Operations that only make sense for one
/// kind of field (e.g. elliptic inversion of a vorticity) check the tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldRole {
    Vorticity,
    StreamFunction,
    Forcing,
    Other,
}

/// Full-spectrum Fourier coefficients of a scalar field on a periodic grid.
///
/// Coefficients are stored in FFT order (non-negative indices first) with the
/// normalisation `coeff(0) == spatial mean`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid,
    role: FieldRole,
    coeffs: Array3<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid, role: FieldRole) -> Self {
        SpectralField {
            grid,
            role,
            coeffs: Array3::zeros(grid.shape()),
        }
    }

    pub fn from_coeffs(grid: Grid, role: FieldRole, coeffs: Array3<Complex64>) -> Result<Self> {
        let (nx, ny, nz) = grid.shape();
        if coeffs.dim() != (nx, ny, nz) {
            let (a, b, c) = coeffs.dim();
            return Err(Error::ShapeMismatch {
                expected: vec![nx, ny, nz],
                found: vec![a, b, c],
            });
        }
        let coeffs = if coeffs.is_standard_layout() {
            coeffs
        } else {
            coeffs.as_standard_layout().into_owned()
        };
        Ok(SpectralField { grid, role, coeffs })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn role(&self) -> FieldRole {
        self.role
    }

    pub fn with_role(mut self, role: FieldRole) -> Self {
        self.role = role;
        self
    }

    pub fn coeffs(&self) -> &Array3<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Array3<Complex64> {
        self.coeffs
    }

    pub(crate) fn as_slice(&self) -> &[Complex64] {
        self.coeffs.as_slice().expect("coefficients are contiguous")
    }

    pub(crate) fn as_slice_mut(&mut self) -> &mut [Complex64] {
        self.coeffs.as_slice_mut().expect("coefficients are contiguous")
    }

    pub fn coeff(&self, k: Wavevector) -> Result<Complex64> {
        Ok(self.coeffs[k.locate(&self.grid)?])
    }

    pub fn set_coeff(&mut self, k: Wavevector, value: Complex64) -> Result<()> {
        let pos = k.locate(&self.grid)?;
        self.coeffs[pos] = value;
        Ok(())
    }

    pub fn mean(&self) -> Complex64 {
        self.coeffs[(0, 0, 0)]
    }

    pub fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        // one sqrt instead of a hypot per coefficient
        self.as_slice().iter().map(|c| c.norm_sqr()).fold(0.0, f64::max).sqrt()
    }

    pub fn ensure_same_grid(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            role: self.role,
            coeffs: self.coeffs.mapv(|c| c * a),
        }
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &SpectralField, b: f64) -> Result<SpectralField> {
        self.ensure_same_grid(other)?;
        let mut out = self.clone();
        for (o, y) in out.as_slice_mut().iter_mut().zip(other.as_slice()) {
            *o = *o * a + *y * b;
        }
        Ok(out)
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &SpectralField) -> Result<()> {
        self.ensure_same_grid(other)?;
        for (o, y) in self.as_slice_mut().iter_mut().zip(other.as_slice()) {
            *o += *y * a;
        }
        Ok(())
    }

    /// Largest coefficient-wise difference, `max |a - b|`.
    pub fn max_abs_diff(&self, other: &SpectralField) -> Result<f64> {
        self.ensure_same_grid(other)?;
        Ok(self
            .as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// True when `coeff(-k) == conj(coeff(k))` within `tol` for every
    /// wavevector whose negation is representable.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        let (nx, ny, nz) = self.grid.shape();
        let mirror = |j: usize, n: usize| (n - j) % n;
        for i in 0..nx {
            for j in 0..ny {
                for l in 0..nz {
                    let a = self.coeffs[(i, j, l)];
                    let b = self.coeffs[(mirror(i, nx), mirror(j, ny), mirror(l, nz))];
                    if (a - b.conj()).norm() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }
}
