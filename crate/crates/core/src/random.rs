//! Seeded random fields: complex white noise in frequency space.

use alloc::vec::Vec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::field::SpectralField;
use crate::grid::TorusGrid;
use crate::C64;

/// Deterministic generator used for every random quantity in the crate.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub(crate) fn gaussian_complex(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Unit-norm complex white noise over the frequency lattice, Nyquist modes
/// zeroed.
pub fn white_noise(grid: &TorusGrid, seed: u64) -> SpectralField {
    shaped_noise(grid, seed, |_| 1.0)
}

/// Complex white noise with amplitude `shape(|ξ|²)` per mode, normalized to
/// unit `L²` norm, Nyquist modes zeroed.
pub fn shaped_noise(grid: &TorusGrid, seed: u64, shape: impl Fn(f64) -> f64) -> SpectralField {
    let mut r = rng(seed);
    let r2 = grid.freq_sq();
    let spec: Vec<C64> = (0..grid.len())
        .map(|i| {
            let z = gaussian_complex(&mut r);
            if grid.is_nyquist(i) {
                C64::new(0.0, 0.0)
            } else {
                z * shape(r2[i])
            }
        })
        .collect();
    let f = SpectralField::from_spectrum(grid, spec).expect("lattice-sized spectrum");
    let norm = f.l2_norm();
    f.scale(C64::new(1.0 / norm, 0.0))
}
