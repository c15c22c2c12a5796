use alloc::borrow::Cow;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::TorusGrid;
use crate::symbol::{AnnulusSpec, FracSymbol};
use crate::C64;

/// Complex samples on a [`TorusGrid`], optionally carrying their unitary
/// Fourier coefficients.
///
/// Fields are immutable; every operation returns a new field. When the cached
/// spectrum is present it is the unitary DFT of `values` (sample order, FFT
/// frequency order), so `Σ|v|² h^d = Σ|c|² h^d`.
#[derive(Debug, Clone)]
pub struct SpectralField {
    grid: TorusGrid,
    values: Vec<C64>,
    spectrum: Option<Vec<C64>>,
}

impl SpectralField {
    pub fn from_values(grid: &TorusGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid: grid.clone(), values, spectrum: None })
    }

    /// Builds the field from Fourier coefficients; the spectrum stays cached.
    pub fn from_spectrum(grid: &TorusGrid, spectrum: Vec<C64>) -> Result<Self> {
        if spectrum.len() != grid.len() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                grid.len(),
                spectrum.len()
            )));
        }
        let mut values = spectrum.clone();
        grid.inverse(&mut values);
        Ok(Self { grid: grid.clone(), values, spectrum: Some(spectrum) })
    }

    pub fn zeros(grid: &TorusGrid) -> Self {
        let z = alloc::vec![C64::new(0.0, 0.0); grid.len()];
        Self { grid: grid.clone(), values: z.clone(), spectrum: Some(z) }
    }

    /// Samples `f` at every lattice point (second coordinate is 0 when `d = 1`).
    pub fn from_fn(grid: &TorusGrid, f: impl Fn([f64; 2]) -> C64) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self { grid: grid.clone(), values, spectrum: None }
    }

    /// The plane wave `e^{iξ·x}` for the lattice frequency with wavenumbers `k`.
    pub fn fourier_mode(grid: &TorusGrid, k: [i64; 2]) -> Self {
        let idx = grid.freq_index(k);
        let xi = grid.freq(idx);
        Self::from_fn(grid, |x| {
            let phase = xi[0] * x[0] + xi[1] * x[1];
            C64::new(phase.cos(), phase.sin())
        })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn has_cached_spectrum(&self) -> bool {
        self.spectrum.is_some()
    }

    /// Unitary Fourier coefficients, computed on demand when not cached.
    pub fn spectrum(&self) -> Cow<'_, [C64]> {
        match &self.spectrum {
            Some(s) => Cow::Borrowed(s),
            None => {
                let mut s = self.values.clone();
                self.grid.forward(&mut s);
                Cow::Owned(s)
            }
        }
    }

    /// Same field with the spectrum cache filled.
    pub fn with_spectrum(mut self) -> Self {
        if self.spectrum.is_none() {
            let s = self.spectrum().into_owned();
            self.spectrum = Some(s);
        }
        self
    }

    /// Multiplies the spectrum pointwise by `m(idx, |ξ|²)`.
    pub(crate) fn map_spectrum(&self, m: impl Fn(usize, f64) -> C64) -> Self {
        let r2 = self.grid.freq_sq();
        let spec: Vec<C64> = self
            .spectrum()
            .iter()
            .enumerate()
            .map(|(i, c)| c * m(i, r2[i]))
            .collect();
        Self::from_spectrum(&self.grid, spec).expect("same grid")
    }

    /// Applies the real Fourier multiplier `m(ξ)`; `ξ` has length `d`.
    pub fn apply_multiplier(&self, m: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let d = self.grid.dim();
        let mut factors = Vec::with_capacity(self.grid.len());
        for idx in 0..self.grid.len() {
            let xi = self.grid.freq(idx);
            let v = m(&xi[..d]);
            if !v.is_finite() {
                return Err(Error::NumericDomain(format!(
                    "multiplier is {v} at wavenumbers {:?}",
                    self.grid.wavenumbers(idx)
                )));
            }
            factors.push(v);
        }
        Ok(self.map_spectrum(|i, _| C64::new(factors[i], 0.0)))
    }

    pub fn apply_symbol(&self, symbol: FracSymbol) -> Self {
        self.map_spectrum(|_, r2| C64::new(symbol.at_sq(r2), 0.0))
    }

    /// Orthogonal projection onto the lattice frequencies of the shell
    /// `|(|ξ|²+1)^{1/2} − λ^{1/s}| ≤ 1`.
    pub fn project_annulus(&self, lam: f64, s: f64) -> Self {
        let a = AnnulusSpec::new(lam, s);
        self.map_spectrum(|_, r2| indicator(a.contains_sq(r2)))
    }

    /// Orthogonal projection onto the lattice frequencies with `|ξ| ≤ radius`.
    pub fn project_ball(&self, radius: f64) -> Self {
        let r2max = radius * radius;
        self.map_spectrum(|_, r2| indicator(r2 <= r2max))
    }

    /// `⟨self, other⟩ = Σ f conj(g) h^d`.
    pub fn inner(&self, other: &SpectralField) -> C64 {
        let s: C64 = self.values.iter().zip(&other.values).map(|(a, b)| a * b.conj()).sum();
        s * self.grid.cell_volume()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.cell_volume()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// `‖f‖²_{L²(Ω)}` for the sample mask `omega`.
    pub fn masked_norm_sq(&self, omega: &[bool]) -> f64 {
        self.values
            .iter()
            .zip(omega)
            .filter(|(_, &m)| m)
            .map(|(v, _)| v.norm_sqr())
            .sum::<f64>()
            * self.grid.cell_volume()
    }

    /// `‖(−Δ+1)^{s/4} f‖_{L²}`.
    pub fn hs_norm(&self, s: f64) -> f64 {
        let sym = FracSymbol::half(s);
        let r2 = self.grid.freq_sq();
        let sum: f64 = self
            .spectrum()
            .iter()
            .zip(r2)
            .map(|(c, &r2)| (c * sym.at_sq(r2)).norm_sqr())
            .sum();
        (sum * self.grid.cell_volume()).sqrt()
    }

    /// Fraction of `‖f‖²` carried by Nyquist wavenumbers.
    pub fn nyquist_fraction(&self) -> f64 {
        let spec = self.spectrum();
        let total: f64 = spec.iter().map(|c| c.norm_sqr()).sum();
        if total == 0.0 {
            return 0.0;
        }
        let nyq: f64 = spec
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.is_nyquist(*i))
            .map(|(_, c)| c.norm_sqr())
            .sum();
        nyq / total
    }

    /// `a·self + b·other`.
    pub fn lin_comb(&self, a: C64, other: &SpectralField, b: C64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        let spectrum = match (&self.spectrum, &other.spectrum) {
            (Some(s), Some(t)) => Some(s.iter().zip(t).map(|(x, y)| a * x + b * y).collect()),
            _ => None,
        };
        Ok(Self { grid: self.grid.clone(), values, spectrum })
    }

    pub fn add(&self, other: &SpectralField) -> Result<Self> {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn sub(&self, other: &SpectralField) -> Result<Self> {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    pub fn scale(&self, a: C64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v * a).collect(),
            spectrum: self.spectrum.as_ref().map(|s| s.iter().map(|v| v * a).collect()),
        }
    }

    /// Pointwise product with real samples `w` (a multiplication operator).
    pub fn mul_pointwise(&self, w: &[f64]) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().zip(w).map(|(v, &x)| v * x).collect(),
            spectrum: None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

fn indicator(b: bool) -> C64 {
    C64::new(if b { 1.0 } else { 0.0 }, 0.0)
}

/// `‖(−Δ+1)^{s/4}u₁‖² + ‖u₂‖²`, square-rooted: the norm of `H^{s/2} × L²`.
pub fn energy_norm(u1: &SpectralField, u2: &SpectralField, s: f64) -> f64 {
    (u1.hs_norm(s).powi(2) + u2.l2_norm_sq()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::white_noise;
    use core::f64::consts::PI;

    fn grid1() -> TorusGrid {
        TorusGrid::new(1, 64, 2.0 * PI).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn spectrum_cache_round_trip_and_parseval() {
        for grid in [grid1(), TorusGrid::new(2, 16, 3.0).unwrap()] {
            let f = white_noise(&grid, 7);
            let cached = SpectralField::from_values(&grid, f.values().to_vec()).unwrap().with_spectrum();
            let back = SpectralField::from_spectrum(&grid, cached.spectrum().into_owned()).unwrap();
            let err: f64 = back.values().iter().zip(f.values()).map(|(a, b)| (a - b).norm_sqr()).sum();
            assert!(err.sqrt() <= 1e-12 * f.l2_norm() / grid.cell_volume().sqrt());
            let spec_norm: f64 =
                cached.spectrum().iter().map(|c| c.norm_sqr()).sum::<f64>() * grid.cell_volume();
            assert!(rel(spec_norm, f.l2_norm_sq()) < 1e-12);
        }
    }

    #[test]
    fn identity_multiplier() {
        let f = white_noise(&grid1(), 1);
        let g = f.apply_multiplier(|_| 1.0).unwrap();
        assert!(g.sub(&f).unwrap().l2_norm() <= 1e-14 * f.l2_norm());
    }

    #[test]
    fn non_finite_multiplier_is_rejected() {
        let f = white_noise(&grid1(), 1);
        let r = f.apply_multiplier(|xi| 1.0 / xi[0]);
        assert!(matches!(r, Err(Error::NumericDomain(_))));
    }

    #[test]
    fn fourier_mode_is_eigenfunction() {
        let g = grid1();
        let f = SpectralField::fourier_mode(&g, [3, 0]);
        let out = f.apply_symbol(FracSymbol::full(2.0));
        let expected = f.scale(C64::new(10.0, 0.0));
        assert!(out.sub(&expected).unwrap().l2_norm() < 1e-12 * expected.l2_norm());
    }

    #[test]
    fn lambda_zero_indicator_keeps_mean_only() {
        let g = grid1();
        let f = white_noise(&g, 3);
        let p = f.apply_multiplier(|xi| {
            let a = AnnulusSpec::new(0.0, 2.0);
            if a.contains(xi) { 1.0 } else { 0.0 }
        })
        .unwrap();
        let spec = p.spectrum();
        for (i, c) in spec.iter().enumerate() {
            if i != 0 {
                assert!(c.norm() < 1e-13);
            }
        }
        assert!((spec[0] - f.spectrum()[0]).norm() < 1e-12);
    }

    #[test]
    fn annulus_projection_properties() {
        let g = TorusGrid::new(1, 64, 2.0 * PI).unwrap();
        let f = white_noise(&g, 11);
        let p = f.project_annulus(8.0, 2.0);
        let pp = p.project_annulus(8.0, 2.0);
        assert!(pp.sub(&p).unwrap().l2_norm() <= 1e-13 * f.l2_norm());
        let q = f.sub(&p).unwrap();
        assert!(rel(p.l2_norm_sq() + q.l2_norm_sq(), f.l2_norm_sq()) < 1e-12);
        let kept: Vec<i64> = p
            .spectrum()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 1e-12)
            .map(|(i, _)| g.wavenumbers(i)[0])
            .collect();
        let mut kept = kept;
        kept.sort();
        assert_eq!(kept, [-3, -2, 2, 3]);
    }

    #[test]
    fn ball_projection_examples() {
        let g = TorusGrid::new(1, 16, 2.0 * PI).unwrap();
        let f = white_noise(&g, 5);
        let all = f.project_ball(g.max_axis_freq());
        assert!(all.sub(&f).unwrap().l2_norm() < 1e-13 * f.l2_norm());
        let mean = f.project_ball(0.0);
        for (i, c) in mean.spectrum().iter().enumerate() {
            assert_eq!(c.norm() > 0.0, i == 0);
        }
        let two = f.project_ball(2.0);
        let mut kept: Vec<i64> = two
            .spectrum()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > 0.0)
            .map(|(i, _)| g.wavenumbers(i)[0])
            .collect();
        kept.sort();
        assert_eq!(kept, [-2, -1, 0, 1, 2]);
    }

    #[test]
    fn norm_examples() {
        let g = grid1();
        let one = SpectralField::from_fn(&g, |_| C64::new(1.0, 0.0));
        assert!((one.l2_norm() - (2.0 * PI).sqrt()).abs() < 1e-12);

        let g3 = TorusGrid::new(1, 32, 2.0 * PI / 3f64.sqrt()).unwrap();
        let u1 = SpectralField::fourier_mode(&g3, [1, 0]);
        let u2 = SpectralField::zeros(&g3);
        assert!(rel(energy_norm(&u1, &u2, 2.0), 2.0 * u1.l2_norm()) < 1e-12);

        for seed in 0..10 {
            let f = white_noise(&g, seed);
            for s in [1.0, 2.0, 3.5] {
                assert!(f.hs_norm(s) >= f.l2_norm());
            }
        }
    }
}
