//! Fourier collocation primitives on periodic grids.
//!
//! All operators are diagonal in Fourier space except the Jacobian, which is
//! evaluated pseudo-spectrally (derivatives in Fourier space, products at the
//! collocation points).

use crate::fft::FftPlans;
use crate::field::{FieldRole, SpectralField};
use crate::grid::Grid;
use crate::models::ModelSpec;
use crate::{Error, Result};
use ndarray::Array3;
use num_complex::Complex64;
use rustfft::FftDirection;

/// Transform plans and wavenumber tables for one grid.
///
/// A `Spectral` is immutable after construction and can be shared between
/// threads; every operation allocates its own work buffers.
#[derive(Debug)]
pub struct Spectral {
    grid: Grid,
    plans: FftPlans,
    wavenumbers: [Vec<f64>; 3],
    // first-derivative multipliers, Nyquist entry zeroed
    derivative: [Vec<f64>; 3],
}

impl Spectral {
    pub fn new(grid: Grid) -> Self {
        let shape = grid.shape3();
        let wavenumbers: [Vec<f64>; 3] =
            std::array::from_fn(|axis| (0..shape[axis]).map(|j| grid.wavenumber(axis, j)).collect());
        let derivative: [Vec<f64>; 3] = std::array::from_fn(|axis| {
            (0..shape[axis])
                .map(|j| {
                    if grid.is_nyquist(axis, j) {
                        0.0
                    } else {
                        grid.wavenumber(axis, j)
                    }
                })
                .collect()
        });
        Spectral {
            grid,
            plans: FftPlans::new(shape),
            wavenumbers,
            derivative,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    fn check_grid(&self, f: &SpectralField) -> Result<()> {
        if *f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Calls `op(flat_index, kx, ky, kz)` for every stored mode.
    #[inline]
    fn for_each_mode(&self, mut op: impl FnMut(usize, f64, f64, f64)) {
        let [kx, ky, kz] = &self.wavenumbers;
        let mut m = 0;
        for &a in kx {
            for &b in ky {
                for &c in kz {
                    op(m, a, b, c);
                    m += 1;
                }
            }
        }
    }

    /// Evaluates `f(x, y, z)` at the collocation points (`z = 0` in 2D).
    pub fn sample(&self, f: impl Fn(f64, f64, f64) -> f64) -> Array3<f64> {
        let g = &self.grid;
        Array3::from_shape_fn(g.shape(), |(i, j, l)| {
            f(g.coordinate(0, i), g.coordinate(1, j), g.coordinate(2, l))
        })
    }

    /// Samples `f` and returns its Fourier coefficients.
    pub fn project(&self, role: FieldRole, f: impl Fn(f64, f64, f64) -> f64) -> SpectralField {
        self.forward(&self.sample(f), role)
            .expect("sampled array has the grid's shape")
    }

    /// Forward transform, normalised so the zero mode is the spatial mean.
    pub fn forward(&self, values: &Array3<f64>, role: FieldRole) -> Result<SpectralField> {
        let (nx, ny, nz) = self.grid.shape();
        if values.dim() != (nx, ny, nz) {
            let (a, b, c) = values.dim();
            return Err(Error::ShapeMismatch {
                expected: vec![nx, ny, nz],
                found: vec![a, b, c],
            });
        }
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.plans.process(&mut buf, FftDirection::Forward);
        let scale = 1.0 / self.grid.len() as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        SpectralField::from_coeffs(
            self.grid,
            role,
            Array3::from_shape_vec((nx, ny, nz), buf).expect("length matches shape"),
        )
    }

    /// Inverse transform; returns the real part of the synthesised values.
    pub fn inverse(&self, f: &SpectralField) -> Result<Array3<f64>> {
        self.check_grid(f)?;
        let mut buf = f.as_slice().to_vec();
        self.plans.process(&mut buf, FftDirection::Inverse);
        let data = buf.into_iter().map(|c| c.re).collect();
        Ok(Array3::from_shape_vec(self.grid.shape(), data).expect("length matches shape"))
    }

    /// Spectral derivative `(i k_axis)^order`. First derivatives drop the
    /// Nyquist coefficient, second derivatives keep it.
    pub fn partial_derivative(
        &self,
        f: &SpectralField,
        axis: usize,
        order: u32,
    ) -> Result<SpectralField> {
        self.check_grid(f)?;
        if axis >= self.grid.dim() {
            return Err(Error::Precondition(format!(
                "derivative axis {axis} on a {}-dimensional grid",
                self.grid.dim()
            )));
        }
        if !(order == 1 || order == 2) {
            return Err(Error::Precondition(format!(
                "derivative order must be 1 or 2, got {order}"
            )));
        }
        let table = if order == 1 {
            &self.derivative[axis]
        } else {
            &self.wavenumbers[axis]
        };
        let shape = self.grid.shape3();
        let inner: usize = shape[axis + 1..].iter().product();
        let n = shape[axis];
        let mut out = f.clone();
        for (m, c) in out.as_slice_mut().iter_mut().enumerate() {
            let k = table[(m / inner) % n];
            *c *= if order == 1 {
                Complex64::new(0.0, k)
            } else {
                Complex64::new(-k * k, 0.0)
            };
        }
        Ok(out)
    }

    /// Symbol of the elliptic operator `-(Delta_H + F^2 d_zz)`; in 2D this is
    /// `|k|^2`.
    #[inline]
    fn elliptic_symbol(kx: f64, ky: f64, kz: f64, froude: f64) -> f64 {
        kx * kx + ky * ky + froude * froude * kz * kz
    }

    /// Solves `omega = -(Delta_H + F^2 d_zz) psi` for `psi` with zero mean.
    pub fn invert_elliptic(&self, omega: &SpectralField, froude: f64) -> Result<SpectralField> {
        self.check_grid(omega)?;
        if matches!(omega.role(), FieldRole::StreamFunction | FieldRole::Forcing) {
            return Err(Error::Precondition(format!(
                "elliptic inversion expects a vorticity, got {:?}",
                omega.role()
            )));
        }
        if !(froude >= 0.0) {
            return Err(Error::Config(format!("Froude number must be >= 0, got {froude}")));
        }
        let mut psi = omega.clone().with_role(FieldRole::StreamFunction);
        let coeffs = psi.as_slice_mut();
        let mut singular = None;
        self.for_each_mode(|m, kx, ky, kz| {
            let s = Self::elliptic_symbol(kx, ky, kz, froude);
            if m == 0 {
                coeffs[m] = Complex64::default();
            } else if s == 0.0 {
                if coeffs[m] != Complex64::default() && singular.is_none() {
                    singular = Some(m);
                }
                coeffs[m] = Complex64::default();
            } else {
                coeffs[m] /= s;
            }
        });
        if let Some(m) = singular {
            return Err(Error::SingularMode(self.wavevector_of(m)));
        }
        Ok(psi)
    }

    /// Applies `-(Delta_H + F^2 d_zz)` to a stream function.
    pub fn apply_elliptic(&self, psi: &SpectralField, froude: f64) -> Result<SpectralField> {
        self.check_grid(psi)?;
        let mut omega = psi.clone().with_role(FieldRole::Vorticity);
        let coeffs = omega.as_slice_mut();
        self.for_each_mode(|m, kx, ky, kz| {
            coeffs[m] *= Self::elliptic_symbol(kx, ky, kz, froude);
        });
        Ok(omega)
    }

    fn wavevector_of(&self, m: usize) -> [i64; 3] {
        let [_, ny, nz] = self.grid.shape3();
        let (i, j, l) = (m / (ny * nz), (m / nz) % ny, m % nz);
        [
            self.grid.signed_index(0, i),
            self.grid.signed_index(1, j),
            self.grid.signed_index(2, l),
        ]
    }

    /// Solves `(sigma + A) u = rhs` mode by mode, `A` being the model's
    /// positive dissipation operator.
    pub fn helmholtz_solve(
        &self,
        rhs: &SpectralField,
        sigma: f64,
        model: &ModelSpec,
    ) -> Result<SpectralField> {
        self.check_grid(rhs)?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Precondition(format!("Helmholtz shift must be > 0, got {sigma}")));
        }
        if !rhs.is_finite() {
            return Err(Error::NumericFault("Helmholtz right-hand side"));
        }
        let mut out = rhs.clone();
        let coeffs = out.as_slice_mut();
        self.for_each_mode(|m, kx, ky, kz| {
            coeffs[m] /= sigma + model.dissipation_symbol(kx * kx + ky * ky, kz * kz);
        });
        Ok(out)
    }

    /// Per-coefficient `1 / (sigma + A(k))` in storage order.
    pub(crate) fn helmholtz_inverse_symbol(&self, sigma: f64, model: &ModelSpec) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        self.for_each_mode(|m, kx, ky, kz| {
            out[m] = 1.0 / (sigma + model.dissipation_symbol(kx * kx + ky * ky, kz * kz));
        });
        out
    }

    /// Applies `(sigma + A)`.
    pub fn apply_helmholtz(
        &self,
        u: &SpectralField,
        sigma: f64,
        model: &ModelSpec,
    ) -> Result<SpectralField> {
        self.check_grid(u)?;
        let mut out = u.clone();
        let coeffs = out.as_slice_mut();
        self.for_each_mode(|m, kx, ky, kz| {
            coeffs[m] *= sigma + model.dissipation_symbol(kx * kx + ky * ky, kz * kz);
        });
        Ok(out)
    }

    /// Pseudo-spectral `grad_perp(psi) . grad(omega) = -psi_y omega_x + psi_x omega_y`,
    /// using horizontal derivatives only in 3D.
    pub fn jacobian(
        &self,
        psi: &SpectralField,
        omega: &SpectralField,
        dealias: bool,
    ) -> Result<SpectralField> {
        self.check_grid(psi)?;
        self.check_grid(omega)?;
        let n = self.grid.len();
        // Pack (d_x f) + i (d_y f) so one inverse transform yields both real
        // derivative fields.
        let mut grad_psi = vec![Complex64::default(); n];
        let mut grad_omega = vec![Complex64::default(); n];
        let (p, w) = (psi.as_slice(), omega.as_slice());
        let [dx, dy, _] = &self.derivative;
        let [nx, ny, nz] = self.grid.shape3();
        let mut m = 0;
        for &kx in dx.iter().take(nx) {
            for &ky in dy.iter().take(ny) {
                let factor = Complex64::new(-ky, kx);
                for _ in 0..nz {
                    grad_psi[m] = p[m] * factor;
                    grad_omega[m] = w[m] * factor;
                    m += 1;
                }
            }
        }
        self.plans.process(&mut grad_psi, FftDirection::Inverse);
        self.plans.process(&mut grad_omega, FftDirection::Inverse);
        for (a, b) in grad_psi.iter_mut().zip(&grad_omega) {
            *a = Complex64::new(a.re * b.im - a.im * b.re, 0.0);
        }
        self.plans.process(&mut grad_psi, FftDirection::Forward);
        let scale = 1.0 / n as f64;
        grad_psi.iter_mut().for_each(|c| *c *= scale);
        let out = SpectralField::from_coeffs(
            self.grid,
            FieldRole::Other,
            Array3::from_shape_vec(self.grid.shape(), grad_psi).expect("length matches shape"),
        )?;
        Ok(if dealias {
            self.dealias_two_thirds(&out)
        } else {
            out
        })
    }

    /// `int_Omega f g dx` via Parseval.
    pub fn inner_product_l2(&self, f: &SpectralField, g: &SpectralField) -> Result<f64> {
        self.check_grid(f)?;
        self.check_grid(g)?;
        let sum: f64 = f
            .as_slice()
            .iter()
            .zip(g.as_slice())
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum();
        Ok(sum * self.grid.volume())
    }

    /// Squared Sobolev (semi)norm with weight `|k|_F^{2s}`, `s` in
    /// `{-1, 0, 1}`. The zero mode contributes only for `s = 0`.
    pub fn sobolev_norm_sq(&self, f: &SpectralField, s: i32, froude: f64) -> Result<f64> {
        self.check_grid(f)?;
        if !(-1..=1).contains(&s) {
            return Err(Error::Precondition(format!("Sobolev index must be -1, 0 or 1, got {s}")));
        }
        let c = f.as_slice();
        if s == -1 && c[0].norm() > 1e-13 * f.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::Precondition(
                "H^-1 norm requires a mean-zero field".to_string(),
            ));
        }
        let mut sum = 0.0;
        let mut singular = false;
        self.for_each_mode(|m, kx, ky, kz| {
            let w = match s {
                0 => 1.0,
                1 => Self::elliptic_symbol(kx, ky, kz, froude),
                _ if m == 0 => 0.0,
                _ => {
                    let k2 = Self::elliptic_symbol(kx, ky, kz, froude);
                    if k2 == 0.0 {
                        if c[m].norm_sqr() > 0.0 {
                            singular = true;
                        }
                        0.0
                    } else {
                        1.0 / k2
                    }
                }
            };
            sum += w * c[m].norm_sqr();
        });
        if singular {
            return Err(Error::Precondition(
                "H^-1 weight is singular on a populated mode".to_string(),
            ));
        }
        Ok(sum * self.grid.volume())
    }

    /// Zeroes every coefficient with `|signed index| > floor(n/3)` on some axis.
    pub fn dealias_two_thirds(&self, f: &SpectralField) -> SpectralField {
        let g = self.grid;
        let cut: Vec<i64> = g.modes().iter().map(|&n| (n / 3) as i64).collect();
        let mut out = f.clone();
        for ((i, j, l), c) in out.coeffs_mut().indexed_iter_mut() {
            let idx = [i, j, l];
            let outside = (0..g.dim()).any(|a| g.signed_index(a, idx[a]).abs() > cut[a]);
            if outside {
                *c = Complex64::default();
            }
        }
        out
    }

    /// Real-space maximum of `|f|` over the collocation points.
    pub fn max_abs_physical(&self, f: &SpectralField) -> Result<f64> {
        Ok(self.inverse(f)?.iter().fold(0.0, |m, v| m.max(v.abs())))
    }
}

/// Sets the zero-mode coefficient to zero.
pub fn project_mean_zero(f: &SpectralField) -> SpectralField {
    let mut out = f.clone();
    out.coeffs_mut()[(0, 0, 0)] = Complex64::default();
    out
}
