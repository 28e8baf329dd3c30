//! Model equations, forcings and initial data.
//!
//! Both models are written for the vorticity `omega` with stream function
//! `psi` recovered from the elliptic relation
//! `omega = -(Delta_H + F^2 d_zz) psi` (`omega = -Delta psi` in 2D):
//!
//! ```text
//! d_t omega + A omega + [grad_perp psi . grad omega + beta psi_x] = f
//! ```
//!
//! with `A = -nu Delta` for the barotropic model and
//! `A = -(nu_H Delta_H + nu_v d_zz)` for the stratified one.

use crate::field::{FieldRole, SpectralField};
use crate::spectral::{project_mean_zero, Spectral};
use crate::{Error, Result};
use std::borrow::Cow;
use std::f64::consts::PI;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelSpec {
    /// Barotropic QG on a 2D periodic box; `beta = 0` is 2D Navier-Stokes.
    Qg2d { viscosity: f64, beta: f64 },
    /// Continuously stratified QG on a 3D periodic box.
    Cqg3d {
        nu_h: f64,
        nu_v: f64,
        beta: f64,
        froude: f64,
    },
}

impl ModelSpec {
    pub fn navier_stokes(reynolds: f64) -> Self {
        ModelSpec::Qg2d {
            viscosity: 1.0 / reynolds,
            beta: 0.0,
        }
    }

    pub fn qg2d(reynolds: f64, beta: f64) -> Self {
        ModelSpec::Qg2d {
            viscosity: 1.0 / reynolds,
            beta,
        }
    }

    /// Stratified model with isotropic viscosity `nu_H = nu_v = 1/Re`.
    pub fn cqg3d(reynolds: f64, beta: f64, froude: f64) -> Self {
        ModelSpec::Cqg3d {
            nu_h: 1.0 / reynolds,
            nu_v: 1.0 / reynolds,
            beta,
            froude,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelSpec::Qg2d { .. } => 2,
            ModelSpec::Cqg3d { .. } => 3,
        }
    }

    pub fn beta(&self) -> f64 {
        match *self {
            ModelSpec::Qg2d { beta, .. } | ModelSpec::Cqg3d { beta, .. } => beta,
        }
    }

    /// Froude number weighting `d_zz` in the elliptic operator. The 2D model
    /// has no vertical modes, so any value gives the same operator.
    pub fn froude(&self) -> f64 {
        match *self {
            ModelSpec::Qg2d { .. } => 1.0,
            ModelSpec::Cqg3d { froude, .. } => froude,
        }
    }

    /// Symbol of the positive dissipation operator `A` given the squared
    /// horizontal and vertical wavenumbers.
    #[inline]
    pub fn dissipation_symbol(&self, kh2: f64, kz2: f64) -> f64 {
        match *self {
            ModelSpec::Qg2d { viscosity, .. } => viscosity * (kh2 + kz2),
            ModelSpec::Cqg3d { nu_h, nu_v, .. } => nu_h * kh2 + nu_v * kz2,
        }
    }

    pub fn validate(&self, grid: &crate::Grid) -> Result<()> {
        if grid.dim() != self.dim() {
            return Err(Error::Config(format!(
                "{}-dimensional model on a {}-dimensional grid",
                self.dim(),
                grid.dim()
            )));
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        match *self {
            ModelSpec::Qg2d { viscosity, .. } => positive("viscosity", viscosity)?,
            ModelSpec::Cqg3d {
                nu_h, nu_v, froude, ..
            } => {
                positive("nu_h", nu_h)?;
                positive("nu_v", nu_v)?;
                positive("froude", froude)?;
            }
        }
        let beta = self.beta();
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::Config(format!("beta must be >= 0, got {beta}")));
        }
        Ok(())
    }
}

/// `N(omega) = grad_perp psi . grad omega + beta psi_x` with `psi` the
/// stream function of `omega` (horizontal gradients in 3D).
///
/// The result is projected onto mean-zero fields: the exact nonlinearity has
/// no mean, and dropping the rounding residue keeps the vorticity mean
/// exactly invariant.
pub fn nonlinear_term(
    spectral: &Spectral,
    psi: &SpectralField,
    omega: &SpectralField,
    model: &ModelSpec,
    dealias: bool,
) -> Result<SpectralField> {
    psi.ensure_same_grid(omega)?;
    let mut n = spectral.jacobian(psi, omega, dealias)?;
    let beta = model.beta();
    if beta != 0.0 {
        n.add_scaled(beta, &spectral.partial_derivative(psi, 0, 1)?)?;
    }
    Ok(project_mean_zero(&n))
}

/// Vorticity form of the Kolmogorov body force
/// `f = (m^3/Re cos(m y), 0)`, i.e. `(m^4/Re) sin(m y)`, extended
/// independently of `x` and `z`.
pub fn kolmogorov_vorticity_forcing(
    wavenumber: u32,
    reynolds: f64,
    spectral: &Spectral,
) -> Result<SpectralField> {
    let grid = spectral.grid();
    if wavenumber == 0 {
        return Err(Error::Config("Kolmogorov wavenumber must be >= 1".into()));
    }
    if !(reynolds > 0.0) {
        return Err(Error::Config(format!("Reynolds number must be positive, got {reynolds}")));
    }
    let m = wavenumber as f64;
    // m must be an integer multiple of the y fundamental and below Nyquist.
    let index = m / grid.base_wavenumber(1);
    if (index - index.round()).abs() > 1e-9 || index.round() as usize >= grid.modes()[1] / 2 {
        return Err(Error::Config(format!(
            "Kolmogorov wavenumber {wavenumber} is not resolved on {} points over length {}",
            grid.modes()[1],
            grid.lengths()[1]
        )));
    }
    let amplitude = m.powi(4) / reynolds;
    Ok(spectral.project(FieldRole::Forcing, |_, y, _| amplitude * (m * y).sin()))
}

/// Time profile of a manufactured stream function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeProfile {
    /// `cos(t)`
    Cosine,
    /// `1`
    Steady,
}

impl TimeProfile {
    fn value(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Cosine => t.cos(),
            TimeProfile::Steady => 1.0,
        }
    }

    fn derivative(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Cosine => -t.sin(),
            TimeProfile::Steady => 0.0,
        }
    }
}

/// Separable exact stream function
/// `psi_e(t, x) = T(t) prod_i cos(a_i x_i)`.
///
/// The exact vorticity is derived as `omega_e = lambda psi_e` with
/// `lambda = a_x^2 + a_y^2 + F^2 a_z^2`, so the kinematic relation holds
/// exactly and the Jacobian of the exact pair vanishes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedSolution {
    pub dim: usize,
    /// Angular wavenumbers `a_i`; entries beyond `dim` are ignored.
    pub wavenumbers: [f64; 3],
    pub profile: TimeProfile,
}

impl ManufacturedSolution {
    /// `cos(t) cos(2 pi x) cos(2 pi y)` on the unit square.
    pub fn cosine_2d() -> Self {
        ManufacturedSolution {
            dim: 2,
            wavenumbers: [2.0 * PI, 2.0 * PI, 0.0],
            profile: TimeProfile::Cosine,
        }
    }

    /// `cos(t) cos(2 pi x) cos(2 pi y) cos(2 pi z)` on the unit cube.
    pub fn cosine_3d() -> Self {
        ManufacturedSolution {
            dim: 3,
            wavenumbers: [2.0 * PI; 3],
            profile: TimeProfile::Cosine,
        }
    }

    fn a(&self) -> [f64; 3] {
        let mut a = [0.0; 3];
        a[..self.dim].copy_from_slice(&self.wavenumbers[..self.dim]);
        a
    }

    fn spatial(&self, x: f64, y: f64, z: f64) -> f64 {
        let [ax, ay, az] = self.a();
        (ax * x).cos() * (ay * y).cos() * (az * z).cos()
    }

    pub fn stream_function(&self, t: f64, x: f64, y: f64, z: f64) -> f64 {
        self.profile.value(t) * self.spatial(x, y, z)
    }

    /// Eigenvalue of the elliptic operator on `psi_e`.
    pub fn eigenvalue(&self, model: &ModelSpec) -> f64 {
        let [ax, ay, az] = self.a();
        let f = model.froude();
        ax * ax + ay * ay + f * f * az * az
    }

    pub fn vorticity(&self, t: f64, x: f64, y: f64, z: f64, model: &ModelSpec) -> f64 {
        self.eigenvalue(model) * self.stream_function(t, x, y, z)
    }

    /// Pointwise residual `d_t omega_e + A omega_e + N(omega_e)`.
    pub fn forcing_value(&self, t: f64, x: f64, y: f64, z: f64, model: &ModelSpec) -> f64 {
        let [ax, ay, az] = self.a();
        let lambda = self.eigenvalue(model);
        let damping = model.dissipation_symbol(ax * ax + ay * ay, az * az);
        let space = self.spatial(x, y, z);
        // grad_perp psi_e . grad omega_e = 0 because omega_e = lambda psi_e.
        let beta_term = -ax * (ax * x).sin() * (ay * y).cos() * (az * z).cos();
        lambda * (self.profile.derivative(t) + damping * self.profile.value(t)) * space
            + model.beta() * self.profile.value(t) * beta_term
    }

    fn check(&self, spectral: &Spectral, model: &ModelSpec) -> Result<()> {
        if self.dim != spectral.grid().dim() || self.dim != model.dim() {
            return Err(Error::Config(format!(
                "{}-dimensional manufactured solution does not match the grid/model",
                self.dim
            )));
        }
        Ok(())
    }
}

/// Forcing `f(t)` sampled at the collocation points.
pub fn manufactured_forcing(
    solution: &ManufacturedSolution,
    t: f64,
    model: &ModelSpec,
    spectral: &Spectral,
) -> Result<SpectralField> {
    solution.check(spectral, model)?;
    Ok(spectral.project(FieldRole::Forcing, |x, y, z| {
        solution.forcing_value(t, x, y, z, model)
    }))
}

/// Description of a body force, resolved against a grid by
/// [`ForcingSpec::build`].
#[derive(Clone, Debug, PartialEq)]
pub enum ForcingSpec {
    None,
    Kolmogorov { wavenumber: u32, reynolds: f64 },
    Manufactured(ManufacturedSolution),
    Custom(SpectralField),
}

impl ForcingSpec {
    pub fn build(&self, spectral: &Spectral, model: &ModelSpec) -> Result<Forcing> {
        let grid = *spectral.grid();
        Ok(match self {
            ForcingSpec::None => Forcing::Steady(SpectralField::zeros(grid, FieldRole::Forcing)),
            ForcingSpec::Kolmogorov {
                wavenumber,
                reynolds,
            } => Forcing::Steady(kolmogorov_vorticity_forcing(*wavenumber, *reynolds, spectral)?),
            ForcingSpec::Custom(f) => {
                if *f.grid() != grid {
                    return Err(Error::GridMismatch);
                }
                Forcing::Steady(f.clone().with_role(FieldRole::Forcing))
            }
            ForcingSpec::Manufactured(solution) => {
                solution.check(spectral, model)?;
                let s = *solution;
                let [ax, ay, az] = s.a();
                let lambda = s.eigenvalue(model);
                Forcing::Manufactured {
                    profile: s.profile,
                    linear_rate: lambda,
                    damping: lambda * model.dissipation_symbol(ax * ax + ay * ay, az * az),
                    beta: model.beta(),
                    shape: spectral.project(FieldRole::Forcing, |x, y, z| s.spatial(x, y, z)),
                    beta_shape: spectral.project(FieldRole::Forcing, |x, y, z| {
                        -ax * (ax * x).sin() * (ay * y).cos() * (az * z).cos()
                    }),
                }
            }
        })
    }
}

/// Body force ready for time stepping.
#[derive(Clone, Debug)]
pub enum Forcing {
    Steady(SpectralField),
    /// `f(t) = (lambda T'(t) + damping T(t)) shape + beta T(t) beta_shape`.
    Manufactured {
        profile: TimeProfile,
        linear_rate: f64,
        damping: f64,
        beta: f64,
        shape: SpectralField,
        beta_shape: SpectralField,
    },
}

impl Forcing {
    pub fn at(&self, t: f64) -> Cow<'_, SpectralField> {
        match self {
            Forcing::Steady(f) => Cow::Borrowed(f),
            Forcing::Manufactured {
                profile,
                linear_rate,
                damping,
                beta,
                shape,
                beta_shape,
            } => {
                let a = linear_rate * profile.derivative(t) + damping * profile.value(t);
                let b = beta * profile.value(t);
                Cow::Owned(
                    shape
                        .combine(a, beta_shape, b)
                        .expect("forcing shapes share a grid"),
                )
            }
        }
    }

    pub fn grid(&self) -> &crate::Grid {
        match self {
            Forcing::Steady(f) => f.grid(),
            Forcing::Manufactured { shape, .. } => shape.grid(),
        }
    }
}

/// Named initial conditions. All presets prescribe a stream function and
/// return its vorticity.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialPreset {
    Zero,
    /// `psi = sin(2y) + 0.001 sin(2x) sin(2y)`
    KolmogorovPerturbedA,
    /// `psi = sin(2y) + 0.001 sin(2 pi x) sin(2 pi y)`
    KolmogorovPerturbedB,
    /// Exact manufactured field at `t = 0`.
    Manufactured(ManufacturedSolution),
}

impl InitialPreset {
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "zero" => InitialPreset::Zero,
            "kolmogorov_perturbed_a" => InitialPreset::KolmogorovPerturbedA,
            "kolmogorov_perturbed_b" => InitialPreset::KolmogorovPerturbedB,
            "manufactured_cosine_2d" => InitialPreset::Manufactured(ManufacturedSolution::cosine_2d()),
            "manufactured_cosine_3d" => InitialPreset::Manufactured(ManufacturedSolution::cosine_3d()),
            other => return Err(Error::Config(format!("unknown initial-condition preset {other:?}"))),
        })
    }
}

/// `omega^0 = -(Delta_H + F^2 d_zz) psi^0` for a preset stream function.
pub fn initial_condition(
    preset: &InitialPreset,
    spectral: &Spectral,
    model: &ModelSpec,
) -> Result<SpectralField> {
    let grid = *spectral.grid();
    let psi = match preset {
        InitialPreset::Zero => return Ok(SpectralField::zeros(grid, FieldRole::Vorticity)),
        InitialPreset::KolmogorovPerturbedA => {
            spectral.project(FieldRole::StreamFunction, |x, y, _| {
                (2.0 * y).sin() + 0.001 * (2.0 * x).sin() * (2.0 * y).sin()
            })
        }
        InitialPreset::KolmogorovPerturbedB => {
            spectral.project(FieldRole::StreamFunction, |x, y, _| {
                (2.0 * y).sin() + 0.001 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin()
            })
        }
        InitialPreset::Manufactured(solution) => {
            solution.check(spectral, model)?;
            spectral.project(FieldRole::StreamFunction, |x, y, z| {
                solution.stream_function(0.0, x, y, z)
            })
        }
    };
    spectral.apply_elliptic(&psi, model.froude())
}
