#![allow(dead_code)]

use mrsav_core::{FieldRole, Grid, Spectral, SpectralField};
use ndarray::Array3;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Real random field with coefficients kept only where every signed index
/// satisfies `|j| < band` (no band limit when `band` is `None`).
pub fn random_field(
    spectral: &Spectral,
    rng: &mut impl Rng,
    band: Option<i64>,
    role: FieldRole,
) -> SpectralField {
    let grid = *spectral.grid();
    let values = Array3::from_shape_fn(grid.shape(), |_| rng.random_range(-1.0..1.0));
    let mut f = spectral.forward(&values, role).unwrap();
    if let Some(band) = band {
        for ((i, j, l), c) in f.coeffs_mut().indexed_iter_mut() {
            let idx = [i, j, l];
            if (0..grid.dim()).any(|a| grid.signed_index(a, idx[a]).abs() >= band) {
                *c = Complex64::default();
            }
        }
    }
    f
}

pub fn zero_mean(mut f: SpectralField) -> SpectralField {
    f.coeffs_mut()[(0, 0, 0)] = Complex64::default();
    f
}

/// Signed wavenumbers `(k_x, k_y, k_z)` of storage position `(i, j, l)`.
pub fn wavevector(grid: &Grid, i: usize, j: usize, l: usize) -> [f64; 3] {
    let idx = [i, j, l];
    let mut k = [0.0; 3];
    for a in 0..grid.dim() {
        k[a] = grid.signed_index(a, idx[a]) as f64 * 2.0 * std::f64::consts::PI / grid.lengths()[a];
    }
    k
}

/// `sum f g dV` over the collocation points.
pub fn quadrature(spectral: &Spectral, f: &SpectralField, g: &SpectralField) -> f64 {
    let (a, b) = (spectral.inverse(f).unwrap(), spectral.inverse(g).unwrap());
    let cell = spectral.grid().volume() / spectral.grid().len() as f64;
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum::<f64>() * cell
}
